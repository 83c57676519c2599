//! Gauss rules and the quadrature controls used by every integral transform.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Result, TomoError};
use crate::scalar::Real;

/// Nodes per Gauss–Legendre panel in every composite rule.
pub const PANEL_ORDER: usize = 16;

/// Node counts, truncation widths and tolerances for the numeric integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureSpec {
    /// Gauss–Hermite node count for Gaussian-weighted integrals.
    pub gh_nodes: usize,
    /// Truncation half-width (in units of the natural length) for infinite ranges.
    pub trunc_l: f64,
    /// Half-range of the frame-parameter integration in the inverse transform.
    pub mu_window: f64,
    pub mu_nodes: usize,
    /// Upper bound on the quadrature-variable nodes of a single inner integral.
    pub y_nodes: usize,
    pub rel_tol: f64,
    /// Below this |nu| the exact nu -> 0 limit replaces quadrature.
    pub nu_min: f64,
    /// Minimum Gauss–Legendre nodes per local oscillation period.
    pub nodes_per_period: usize,
    /// Bound on the discarded imaginary part of a forward transform.
    pub imag_tol: f64,
    /// Bound on the Hermiticity residual of a reconstructed density.
    pub hermiticity_tol: f64,
    /// Initial radius of the (m, n) truncation disc of the exchange-kernel integrals.
    pub route_b_box: f64,
    pub route_b_shift_tol: f64,
    pub route_b_max_doublings: usize,
    pub route_b_imag_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            gh_nodes: 64,
            trunc_l: 8.0,
            mu_window: 40.0,
            mu_nodes: 2048,
            y_nodes: 1024,
            rel_tol: 1e-6,
            nu_min: 1e-3,
            nodes_per_period: 12,
            imag_tol: 1e-8,
            hermiticity_tol: 1e-3,
            route_b_box: 10.0,
            route_b_shift_tol: 1e-4,
            route_b_max_doublings: 3,
            route_b_imag_tol: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("gh_nodes", self.gh_nodes),
            ("mu_nodes", self.mu_nodes),
            ("y_nodes", self.y_nodes),
            ("nodes_per_period", self.nodes_per_period),
        ];
        for (name, n) in counts {
            if n < 8 {
                return Err(TomoError::Config(format!("{name} = {n} must be >= 8")));
            }
        }
        let positive = [
            ("trunc_l", self.trunc_l),
            ("mu_window", self.mu_window),
            ("nu_min", self.nu_min),
            ("route_b_box", self.route_b_box),
            ("rel_tol", self.rel_tol),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(TomoError::Config(format!("{name} = {v} must be positive")));
            }
        }
        Ok(())
    }

    /// Number of 16-node panels needed to resolve `max_freq` (rad per unit)
    /// over an interval of length `width`.
    pub fn panels_for(&self, width: f64, max_freq: f64) -> usize {
        let periods = width * max_freq.abs() / (2.0 * PI);
        let nodes = periods * self.nodes_per_period as f64;
        ((nodes / PANEL_ORDER as f64).ceil() as usize).max(1)
    }

    /// One-line summary for output headers.
    pub fn summary(&self) -> String {
        format!(
            "gh_nodes={} trunc_l={} mu_window={} mu_nodes={} y_nodes={} nu_min={} nodes_per_period={} route_b_box={}",
            self.gh_nodes,
            self.trunc_l,
            self.mu_window,
            self.mu_nodes,
            self.y_nodes,
            self.nu_min,
            self.nodes_per_period,
            self.route_b_box
        )
    }
}

/// A quadrature rule: nodes with matching weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> Rule<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<F: FnMut(T) -> T>(&self, mut f: F) -> T {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (T, T)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Composite Gauss–Legendre rule with `panels` equal panels on `[lo, hi]`.
    pub fn composite_legendre(lo: T, hi: T, panels: usize) -> Self {
        let (x, w) = legendre_16();
        let panels = panels.max(1);
        let width = (hi - lo) / T::of_usize(panels);
        let half = width / T::of(2.0);
        let mut nodes = Vec::with_capacity(panels * PANEL_ORDER);
        let mut weights = Vec::with_capacity(panels * PANEL_ORDER);
        for p in 0..panels {
            let mid = lo + width * T::of_usize(p) + half;
            for (xi, wi) in x.iter().zip(w) {
                nodes.push(mid + half * T::of(*xi));
                weights.push(half * T::of(*wi));
            }
        }
        Self { nodes, weights }
    }

    /// Composite rule on `[lo, hi]` with a panel boundary forced at `split`.
    pub fn composite_split(lo: T, split: T, hi: T, panels_each: usize) -> Self {
        let mut left = Self::composite_legendre(lo, split, panels_each);
        let right = Self::composite_legendre(split, hi, panels_each);
        left.nodes.extend(right.nodes);
        left.weights.extend(right.weights);
        left
    }

    /// Gauss–Hermite rule: `∫ e^{-x²} f(x) dx ≈ Σ w_k f(x_k)`.
    pub fn gauss_hermite(n: usize) -> Self {
        let (x, w) = gauss_hermite(n);
        Self {
            nodes: x.into_iter().map(T::of).collect(),
            weights: w.into_iter().map(T::of).collect(),
        }
    }
}

/// Gauss–Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-15 {
                let (_, d) = legendre_with_derivative(n, z);
                dp = d;
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

fn legendre_16() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_legendre(PANEL_ORDER))
}

/// Gauss–Hermite nodes and weights (weight e^{-x²}) by Newton iteration on the
/// orthonormal Hermite recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let pim4 = PI.powf(-0.25);
    let nf = n as f64;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    x.reverse();
    w.reverse();
    (x, w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(16);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert_relative_eq!(integral, 2.0 / 31.0, max_relative = 1e-13);
        assert_relative_eq!(w.iter().sum::<f64>(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn hermite_moments() {
        let rule = Rule::<f64>::gauss_hermite(64);
        assert_relative_eq!(rule.integrate(|_| 1.0), PI.sqrt(), max_relative = 1e-13);
        assert_relative_eq!(rule.integrate(|x| x * x), PI.sqrt() / 2.0, max_relative = 1e-13);
        assert_relative_eq!(rule.integrate(|x| x.cos()), PI.sqrt() * (-0.25f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn composite_rule_resolves_oscillation() {
        let spec = QuadratureSpec::default();
        let k = 40.0;
        let panels = spec.panels_for(20.0, k);
        let rule = Rule::<f64>::composite_legendre(-10.0, 10.0, panels);
        let val = rule.integrate(|x| (-x * x).exp() * (k * x).cos());
        assert!((val - PI.sqrt() * (-k * k / 4.0).exp()).abs() < 1e-13);
    }

    #[test]
    fn spec_validation_rejects_small_counts() {
        let spec = QuadratureSpec { mu_nodes: 4, ..Default::default() };
        assert!(spec.validate().is_err());
        assert!(QuadratureSpec::default().validate().is_ok());
    }
}
