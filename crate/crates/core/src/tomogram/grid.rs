//! Single-particle tomograms tabulated on the unit frame circle.
//!
//! Samples are stored over (ξ̃, θ) with μ = cos θ, ν = sin θ, θ ∈ [0, π).
//! Any frame is reduced to the table by homogeneity,
//! w(ξ, μ, ν) = s⁻¹ w(ξ/s, cos θ, sin θ), s = √(μ² + ν²), and the lower half
//! circle by the mirror identity w(ξ, −μ, −ν) = w(−ξ, μ, ν).

use rayon::prelude::*;

use crate::error::{Result, TomoError};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct GridTomogram<T> {
    /// Number of angles θ_j = jπ/M.
    pub angles: usize,
    pub xi_lo: T,
    pub xi_step: T,
    pub xi_count: usize,
    /// `values[j * xi_count + k] = w(ξ̃_k, cos θ_j, sin θ_j)`.
    pub values: Vec<T>,
}

impl<T: Real> GridTomogram<T> {
    /// Tabulates `f(ξ, μ, ν)` on `angles` angles and `xi_count` points of [−ξ_max, ξ_max].
    pub fn tabulate<F>(angles: usize, xi_count: usize, xi_max: T, f: F) -> Result<Self>
    where
        F: Fn(T, T, T) -> Result<T> + Sync,
    {
        if angles < 4 || xi_count < 4 || !(xi_max > T::zero()) {
            return Err(TomoError::domain("grid tomogram needs >= 4 angles, >= 4 points and xi_max > 0"));
        }
        let xi_step = T::of(2.0) * xi_max / T::of_usize(xi_count - 1);
        let values: Result<Vec<Vec<T>>> = (0..angles)
            .into_par_iter()
            .map(|j| {
                let theta = T::PI() * T::of_usize(j) / T::of_usize(angles);
                (0..xi_count)
                    .map(|k| f(-xi_max + xi_step * T::of_usize(k), theta.cos(), theta.sin()))
                    .collect()
            })
            .collect();
        Ok(Self { angles, xi_lo: -xi_max, xi_step, xi_count, values: values?.concat() })
    }

    fn sample(&self, j: isize, k: isize) -> T {
        // Angles outside [0, π) fold back with ξ̃ → −ξ̃.
        let m = self.angles as isize;
        let wraps = j.div_euclid(m);
        let j = j.rem_euclid(m) as usize;
        let k = if wraps % 2 != 0 { self.xi_count as isize - 1 - k } else { k };
        if k < 0 || k >= self.xi_count as isize {
            return T::zero();
        }
        self.values[j * self.xi_count + k as usize]
    }

    /// Unit-frame value at ξ̃ and θ ∈ [0, π), by Catmull–Rom interpolation.
    fn unit_value(&self, xi: T, theta: T) -> T {
        let tj = theta / T::PI() * T::of_usize(self.angles);
        let tk = (xi - self.xi_lo) / self.xi_step;
        let (tj0, tk0) = (tj.floor(), tk.floor());
        let (fj, fk) = (tj - tj0, tk - tk0);
        let (j0, k0) = (tj0.to_isize().unwrap_or(0), tk0.to_isize().unwrap_or(isize::MIN / 2));
        if k0 < -2 || k0 > self.xi_count as isize + 1 {
            return T::zero();
        }
        let wj = catmull_rom(fj);
        let wk = catmull_rom(fk);
        let mut acc = T::zero();
        for (a, &wa) in wj.iter().enumerate() {
            let mut row = T::zero();
            for (b, &wb) in wk.iter().enumerate() {
                row += wb * self.sample(j0 - 1 + a as isize, k0 - 1 + b as isize);
            }
            acc += wa * row;
        }
        acc
    }

    pub fn eval(&self, xi: T, mu: T, nu: T) -> T {
        let s = mu.hypot(nu);
        let (mut xi, mut theta) = (xi / s, nu.atan2(mu));
        if theta < T::zero() {
            theta += T::PI();
            xi = -xi;
        }
        if theta >= T::PI() {
            theta -= T::PI();
            xi = -xi;
        }
        self.unit_value(xi, theta) / s
    }

    pub fn xi_max(&self) -> T {
        -self.xi_lo
    }
}

fn catmull_rom<T: Real>(f: T) -> [T; 4] {
    let h = T::of(0.5);
    let f2 = f * f;
    let f3 = f2 * f;
    [
        h * (-f3 + T::of(2.0) * f2 - f),
        h * (T::of(3.0) * f3 - T::of(5.0) * f2 + T::of(2.0)),
        h * (T::of(-3.0) * f3 + T::of(4.0) * f2 + f),
        h * (f3 - f2),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomogram::{fock_tomogram_modes, TomogramPoint};

    #[test]
    fn grid_reproduces_closed_form() {
        let exact = |x: f64, m: f64, n: f64| fock_tomogram_modes(&[1], &TomogramPoint::single(x, m, n)?);
        let g = GridTomogram::tabulate(256, 481, 8.0, exact).unwrap();
        for &(x, m, n) in &[(0.3, 0.7, -0.4), (-1.2, -0.2, 1.3), (0.9, 1.0, 0.0), (2.0, -3.0, -0.1)] {
            let a = g.eval(x, m, n);
            let b = exact(x, m, n).unwrap();
            assert!((a - b).abs() < 1e-4, "{x} {m} {n}: {a} vs {b}");
        }
    }
}
