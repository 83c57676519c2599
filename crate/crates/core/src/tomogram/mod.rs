//! Symplectic tomograms w(ξ, μ, ν) of one- and multi-particle states.
//!
//! The forward map is
//! w(ξ, μ, ν) = Π_i (2π|ν_i|)⁻¹ ∫ ρ(z; z′) Π_i e^{−i α_i} d^N z d^N z′,
//! α_i = (z_i − z′_i)(ξ_i − μ_i (z_i + z′_i)/2)/ν_i.

mod forward;
mod grid;
mod inverse;

use std::sync::Arc;

use num_complex::Complex;

use crate::density::{DensityBacking, DensityObject};
use crate::error::{Result, TomoError};
use crate::hermite::{fock_wavefunctions_into, ProductState};
use crate::quadrature::QuadratureSpec;
use crate::scalar::Real;

pub use forward::{chirp_transforms, factorization_check, forward_tomogram};
pub use grid::GridTomogram;
pub use inverse::{inverse_density, inverse_density_batch, InverseEngine, InverseReport};

/// A tomographic argument: per particle (ξ_i, μ_i, ν_i), plus a time label.
#[derive(Debug, Clone, PartialEq)]
pub struct TomogramPoint<T> {
    pub xi: Vec<T>,
    pub mu: Vec<T>,
    pub nu: Vec<T>,
    pub t: T,
}

impl<T: Real> TomogramPoint<T> {
    pub fn new(xi: Vec<T>, mu: Vec<T>, nu: Vec<T>) -> Result<Self> {
        Self::with_time(xi, mu, nu, T::zero())
    }

    pub fn with_time(xi: Vec<T>, mu: Vec<T>, nu: Vec<T>, t: T) -> Result<Self> {
        let n = xi.len();
        if n == 0 {
            return Err(TomoError::domain("tomogram point needs at least one particle"));
        }
        for len in [mu.len(), nu.len()] {
            if len != n {
                return Err(TomoError::DimensionMismatch { expected: n, got: len });
            }
        }
        let p = Self { xi, mu, nu, t };
        p.validate()?;
        Ok(p)
    }

    pub fn single(xi: T, mu: T, nu: T) -> Result<Self> {
        Self::new(vec![xi], vec![mu], vec![nu])
    }

    pub fn pair(xi: [T; 2], mu: [T; 2], nu: [T; 2]) -> Result<Self> {
        Self::new(xi.to_vec(), mu.to_vec(), nu.to_vec())
    }

    pub fn particle_count(&self) -> usize {
        self.xi.len()
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..self.particle_count() {
            let (x, m, n) = (self.xi[i], self.mu[i], self.nu[i]);
            if !(x.is_finite() && m.is_finite() && n.is_finite() && self.t.is_finite()) {
                return Err(TomoError::domain(format!("non-finite tomogram coordinate for particle {}", i + 1)));
            }
            if m == T::zero() && n == T::zero() {
                return Err(TomoError::domain(format!("(mu, nu) = (0, 0) for particle {}", i + 1)));
            }
        }
        Ok(())
    }

    /// The coordinates of particle `i`.
    pub fn particle(&self, i: usize) -> (T, T, T) {
        (self.xi[i], self.mu[i], self.nu[i])
    }

    /// Reverses the particle labels.
    pub fn label_swapped(&self) -> Self {
        let rev = |v: &[T]| v.iter().rev().copied().collect::<Vec<_>>();
        Self { xi: rev(&self.xi), mu: rev(&self.mu), nu: rev(&self.nu), t: self.t }
    }

    /// All of (ξ, μ, ν) multiplied by λ.
    pub fn scaled(&self, lambda: T) -> Self {
        let s = |v: &[T]| v.iter().map(|&x| x * lambda).collect::<Vec<_>>();
        Self { xi: s(&self.xi), mu: s(&self.mu), nu: s(&self.nu), t: self.t }
    }

    pub fn at_time(&self, t: T) -> Self {
        Self { t, ..self.clone() }
    }
}

/// One-particle factor of a separable tomogram term. Transition factors
/// (`ket ≠ bra`) are complex; only the full sum is a real tomogram.
#[derive(Debug, Clone, PartialEq)]
pub enum ModeFactor<T> {
    /// Closed form |r|⁻¹ φ_a(y) φ_b(y) e^{−i(a−b) arg r}, r = e^{it}(μ + iν), y = ξ/|r|.
    Fock { ket: usize, bra: usize },
    /// Numeric forward transform of φ_ket(z) φ_bra(z′).
    Chirp { ket: usize, bra: usize },
    /// A tabulated real single-particle tomogram.
    Grid(Arc<GridTomogram<T>>),
}

impl<T: Real> ModeFactor<T> {
    fn modes(&self) -> Option<(usize, usize)> {
        match self {
            ModeFactor::Fock { ket, bra } | ModeFactor::Chirp { ket, bra } => Some((*ket, *bra)),
            ModeFactor::Grid(_) => None,
        }
    }

    fn same_as(&self, other: &Self) -> bool {
        match (self, other) {
            (ModeFactor::Grid(a), ModeFactor::Grid(b)) => Arc::ptr_eq(a, b),
            _ => self == other,
        }
    }

    pub fn is_diagonal(&self) -> bool {
        self.modes().map_or(true, |(a, b)| a == b)
    }
}

/// `coeff · Π_j factors[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableTerm<T> {
    pub coeff: Complex<T>,
    pub factors: Vec<ModeFactor<T>>,
}

impl<T: Real> SeparableTerm<T> {
    /// Diagonal in the product basis (every factor has ket = bra).
    pub fn is_direct(&self) -> bool {
        self.factors.iter().all(ModeFactor::is_diagonal)
    }
}

#[derive(Debug, Clone)]
pub enum TomogramBacking<T> {
    /// Sum of products of one-particle factors.
    Separable(Vec<SeparableTerm<T>>),
    /// Numeric transform of a sampled density.
    Transform { density: DensityObject<T> },
    /// Tabulated single-particle tomogram.
    Grid(Arc<GridTomogram<T>>),
}

/// A tomogram that can be evaluated at arbitrary [`TomogramPoint`]s.
#[derive(Debug, Clone)]
pub struct TomogramObject<T> {
    particle_count: usize,
    backing: TomogramBacking<T>,
    quad: QuadratureSpec,
}

impl<T: Real> TomogramObject<T> {
    /// Closed-form tomogram of an analytic density.
    pub fn analytic(d: &DensityObject<T>) -> Result<Self> {
        let terms = d.analytic_terms().ok_or_else(|| {
            TomoError::Unsupported("closed-form tomograms need an analytic density".into())
        })?;
        let terms = terms
            .iter()
            .map(|t| SeparableTerm {
                coeff: t.coeff,
                factors: t.ket.iter().zip(&t.bra).map(|(&ket, &bra)| ModeFactor::Fock { ket, bra }).collect(),
            })
            .collect();
        Ok(Self { particle_count: d.particle_count(), backing: TomogramBacking::Separable(terms), quad: QuadratureSpec::default() })
    }

    /// Closed-form tomogram of a pure product-state superposition.
    pub fn from_state(state: &ProductState<T>) -> Result<Self> {
        Self::analytic(&crate::density::pure_density(state))
    }

    /// Numeric forward transform of `d`, evaluated lazily.
    pub fn transform(d: &DensityObject<T>, quad: &QuadratureSpec) -> Result<Self> {
        quad.validate()?;
        let backing = match d.backing() {
            DensityBacking::Analytic(terms) => TomogramBacking::Separable(
                terms
                    .iter()
                    .map(|t| SeparableTerm {
                        coeff: t.coeff,
                        factors: t.ket.iter().zip(&t.bra).map(|(&ket, &bra)| ModeFactor::Chirp { ket, bra }).collect(),
                    })
                    .collect(),
            ),
            DensityBacking::Grid { .. } => TomogramBacking::Transform { density: d.clone() },
        };
        Ok(Self { particle_count: d.particle_count(), backing, quad: quad.clone() })
    }

    pub fn from_grid(grid: GridTomogram<T>) -> Self {
        Self { particle_count: 1, backing: TomogramBacking::Grid(Arc::new(grid)), quad: QuadratureSpec::default() }
    }

    /// Builds a sum of products directly.
    pub fn separable(particle_count: usize, terms: Vec<SeparableTerm<T>>) -> Result<Self> {
        if let Some(bad) = terms.iter().find(|t| t.factors.len() != particle_count) {
            return Err(TomoError::DimensionMismatch { expected: particle_count, got: bad.factors.len() });
        }
        Ok(Self { particle_count, backing: TomogramBacking::Separable(terms), quad: QuadratureSpec::default() })
    }

    pub fn with_quadrature(mut self, quad: QuadratureSpec) -> Self {
        self.quad = quad;
        self
    }

    pub fn quadrature(&self) -> &QuadratureSpec {
        &self.quad
    }

    pub fn particle_count(&self) -> usize {
        self.particle_count
    }

    pub fn backing(&self) -> &TomogramBacking<T> {
        &self.backing
    }

    /// Terms of a sum-of-products backing; a grid tomogram counts as one term.
    pub fn separable_terms(&self) -> Option<Vec<SeparableTerm<T>>> {
        match &self.backing {
            TomogramBacking::Separable(t) => Some(t.clone()),
            TomogramBacking::Grid(g) => Some(vec![SeparableTerm {
                coeff: Complex::new(T::one(), T::zero()),
                factors: vec![ModeFactor::Grid(g.clone())],
            }]),
            TomogramBacking::Transform { .. } => None,
        }
    }

    /// Keeps only the terms selected by `keep` (separable backings only).
    pub fn filter_terms(&self, keep: impl Fn(&SeparableTerm<T>) -> bool) -> Result<Self> {
        let terms = self
            .separable_terms()
            .ok_or_else(|| TomoError::Unsupported("term filtering needs a separable tomogram".into()))?;
        Ok(Self {
            particle_count: self.particle_count,
            backing: TomogramBacking::Separable(terms.into_iter().filter(|t| keep(t)).collect()),
            quad: self.quad.clone(),
        })
    }

    fn check_point(&self, p: &TomogramPoint<T>) -> Result<()> {
        if p.particle_count() != self.particle_count {
            return Err(TomoError::DimensionMismatch { expected: self.particle_count, got: p.particle_count() });
        }
        p.validate()
    }

    /// w(p) before the imaginary part is discarded.
    pub fn eval_complex(&self, p: &TomogramPoint<T>) -> Result<Complex<T>> {
        self.check_point(p)?;
        match &self.backing {
            TomogramBacking::Separable(terms) => eval_separable(terms, p, &self.quad),
            TomogramBacking::Grid(g) => {
                let (x, m, n) = p.particle(0);
                Ok(Complex::new(g.eval(x, m, n), T::zero()))
            }
            TomogramBacking::Transform { density } => forward::grid_transform(density, p, &self.quad),
        }
    }

    /// w(p), with the imaginary residual checked against `imag_tol`.
    pub fn eval(&self, p: &TomogramPoint<T>) -> Result<T> {
        let z = self.eval_complex(p)?;
        let tol = T::of(self.quad.imag_tol) * z.re.abs().max(T::one());
        if !(z.im.abs() <= tol) {
            return Err(TomoError::numeric(
                "forward_tomogram",
                format!("imaginary residual {} exceeds {} at {:?}", z.im, tol, p),
            ));
        }
        Ok(z.re)
    }
}

/// Per-particle values of every distinct factor, shared across terms.
fn eval_separable<T: Real>(terms: &[SeparableTerm<T>], p: &TomogramPoint<T>, q: &QuadratureSpec) -> Result<Complex<T>> {
    let n = p.particle_count();
    let mut per_particle: Vec<(Vec<ModeFactor<T>>, Vec<Complex<T>>)> = Vec::with_capacity(n);
    for j in 0..n {
        let mut unique: Vec<ModeFactor<T>> = Vec::new();
        for t in terms {
            if !unique.iter().any(|u| u.same_as(&t.factors[j])) {
                unique.push(t.factors[j].clone());
            }
        }
        let (x, m, nu) = p.particle(j);
        let values = factor_values(&unique, x, m, nu, p.t, q)?;
        per_particle.push((unique, values));
    }
    let mut acc = Complex::new(T::zero(), T::zero());
    for t in terms {
        let mut prod = t.coeff;
        for (j, f) in t.factors.iter().enumerate() {
            let (unique, values) = &per_particle[j];
            let k = unique.iter().position(|u| u.same_as(f)).expect("factor registered");
            prod = prod * values[k];
        }
        acc += prod;
    }
    Ok(acc)
}

/// Values of `factors` at one particle's (ξ, μ, ν, t).
pub(crate) fn factor_values<T: Real>(
    factors: &[ModeFactor<T>],
    xi: T,
    mu: T,
    nu: T,
    t: T,
    q: &QuadratureSpec,
) -> Result<Vec<Complex<T>>> {
    let fock_max = factors
        .iter()
        .filter(|f| matches!(f, ModeFactor::Fock { .. }))
        .filter_map(|f| f.modes())
        .map(|(a, b)| a.max(b))
        .max();
    let chirp_max = factors
        .iter()
        .filter(|f| matches!(f, ModeFactor::Chirp { .. }))
        .filter_map(|f| f.modes())
        .map(|(a, b)| a.max(b))
        .max();
    let fock = fock_max.map(|nmax| FockFrame::new(nmax, xi, mu, nu, t)).transpose()?;
    let chirp = chirp_max.map(|nmax| forward::ChirpFrame::new(nmax, xi, mu, nu, q)).transpose()?;
    factors
        .iter()
        .map(|f| match f {
            ModeFactor::Fock { ket, bra } => Ok(fock.as_ref().expect("fock frame").transition(*ket, *bra)),
            ModeFactor::Chirp { ket, bra } => Ok(chirp.as_ref().expect("chirp frame").transition(*ket, *bra)),
            ModeFactor::Grid(g) => Ok(Complex::new(g.eval(xi, mu, nu), T::zero())),
        })
        .collect()
}

/// φ_k(y) at y = ξ/|r| together with |r| and arg r for one particle.
pub(crate) struct FockFrame<T> {
    phi: Vec<T>,
    inv_r: T,
    arg: T,
}

impl<T: Real> FockFrame<T> {
    pub(crate) fn new(nmax: usize, xi: T, mu: T, nu: T, t: T) -> Result<Self> {
        let r = Complex::from_polar(T::one(), t) * Complex::new(mu, nu);
        let abs = r.norm();
        if !(abs > T::zero()) {
            return Err(TomoError::domain("(mu, nu) = (0, 0)"));
        }
        let mut phi = vec![T::zero(); nmax + 1];
        fock_wavefunctions_into(xi / abs, &mut phi)?;
        Ok(Self { phi, inv_r: T::one() / abs, arg: r.im.atan2(r.re) })
    }

    pub(crate) fn transition(&self, a: usize, b: usize) -> Complex<T> {
        let mag = self.inv_r * self.phi[a] * self.phi[b];
        if a == b {
            return Complex::new(mag, T::zero());
        }
        let diff = T::of(a as f64 - b as f64);
        Complex::from_polar(mag, -diff * self.arg)
    }
}

/// Closed-form tomogram of the product Fock state φ_{modes[0]} ⊗ ⋯ :
/// Π_j e^{−y_j²} H²_{n_j}(y_j) / (√π |r_j| 2^{n_j} n_j!).
pub fn fock_tomogram_modes<T: Real>(modes: &[usize], p: &TomogramPoint<T>) -> Result<T> {
    if modes.len() != p.particle_count() {
        return Err(TomoError::DimensionMismatch { expected: p.particle_count(), got: modes.len() });
    }
    p.validate()?;
    let mut w = T::one();
    for (j, &n) in modes.iter().enumerate() {
        let (x, m, nu) = p.particle(j);
        w = w * FockFrame::new(n, x, m, nu, p.t)?.transition(n, n).re;
    }
    Ok(w)
}

/// Closed-form two-particle tomogram w_nm of φ_n ⊗ φ_m.
pub fn fock_tomogram<T: Real>(n: usize, m: usize, p: &TomogramPoint<T>) -> Result<T> {
    if p.particle_count() != 2 {
        return Err(TomoError::DimensionMismatch { expected: 2, got: p.particle_count() });
    }
    fock_tomogram_modes(&[n, m], p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermite::hermite_eval;
    use std::f64::consts::PI;

    #[test]
    fn ground_pair_value() {
        let p = TomogramPoint::pair([0.0, 0.0], [1.0, 1.0], [0.0, 0.0]).unwrap();
        assert!((fock_tomogram(0, 0, &p).unwrap() - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn printed_hermite_form() {
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        let p = TomogramPoint::pair([0.7, -1.2], [0.4, 1.5], [1.1, -0.3]).unwrap().at_time(0.9);
        for n in 0..4 {
            for m in 0..4 {
                let r1 = (0.4f64.powi(2) + 1.1f64.powi(2)).sqrt();
                let r2 = (1.5f64.powi(2) + 0.3f64.powi(2)).sqrt();
                let (y1, y2) = (0.7 / r1, -1.2 / r2);
                let printed = (-y1 * y1 - y2 * y2).exp() / (PI * r1 * r2 * fact(n) * fact(m) * 2f64.powi((n + m) as i32))
                    * hermite_eval(n, y1).powi(2)
                    * hermite_eval(m, y2).powi(2);
                let w = fock_tomogram(n, m, &p).unwrap();
                assert!((w - printed).abs() <= 1e-14 * printed.abs().max(1e-3), "{n}{m}");
            }
        }
    }

    #[test]
    fn zero_frame_is_rejected() {
        assert!(TomogramPoint::single(0.0, 0.0, 0.0).is_err());
    }
}
