//! Printed closed forms for the symmetrized first excited pair φ₀ ⊗ φ₁.

use crate::error::{Result, TomoError};
use crate::scalar::Real;
use crate::tomogram::TomogramPoint;

/// Which normalization of a closed form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormMode {
    /// The expression exactly as printed.
    Printed,
    /// Rescaled to the 1/4-projector convention of the density route.
    Corrected,
}

/// w⁰¹±(ξ, μ, ν).
///
/// Verbatim: e^{−y₁²−y₂²}/(π|r₁r₂|) · [4y₂² + 4y₁² ± 2ξ₁ξ₂(μ₁μ₂+ν₁ν₂)/(|r₁|²|r₂|²)].
/// Corrected: e^{−y₁²−y₂²}/(π|r₁r₂|) · [(y₁² + y₂²)/2 ± ξ₁ξ₂(μ₁μ₂+ν₁ν₂)/(|r₁|²|r₂|²)].
pub fn analytic_w01<T: Real>(sign: i32, p: &TomogramPoint<T>, mode: FormMode) -> Result<T> {
    if p.particle_count() != 2 {
        return Err(TomoError::DimensionMismatch { expected: 2, got: p.particle_count() });
    }
    p.validate()?;
    let (x1, m1, n1) = p.particle(0);
    let (x2, m2, n2) = p.particle(1);
    let r1sq = m1 * m1 + n1 * n1;
    let r2sq = m2 * m2 + n2 * n2;
    let pref = (-x1 * x1 / r1sq - x2 * x2 / r2sq).exp() / (T::PI() * (r1sq * r2sq).sqrt());
    let y1 = x1 / r1sq.sqrt();
    let y2 = x2 / r2sq.sqrt();
    let cross = x1 * x2 * (m1 * m2 + n1 * n2) / (r1sq * r2sq);
    let s = T::of(f64::from(sign.signum()));
    let two = T::of(2.0);
    let bracket = match mode {
        FormMode::Printed => (two * y2).powi(2) + (two * y1).powi(2) + s * two * cross,
        FormMode::Corrected => (y1 * y1 + y2 * y2) / two + s * cross,
    };
    Ok(pref * bracket)
}

/// ρ⁰¹±(x; x′).
///
/// Verbatim: ¼ e^{−(x₁²+x₂²+x′₁²+x′₂²)/2} [4x₂x′₂ + 4x₁x′₁ ± (4x₁x′₂ + 4x₂x′₁)].
/// Corrected: the same bracket times 1/(2π), which is the projector-route density.
pub fn analytic_rho01<T: Real>(sign: i32, x: [T; 2], xp: [T; 2], mode: FormMode) -> T {
    let four = T::of(4.0);
    let g = (-(x[0] * x[0] + x[1] * x[1] + xp[0] * xp[0] + xp[1] * xp[1]) / T::of(2.0)).exp();
    let s = T::of(f64::from(sign.signum()));
    let bracket = four * x[1] * xp[1] + four * x[0] * xp[0] + s * (four * x[0] * xp[1] + four * x[1] * xp[0]);
    let verbatim = g * bracket / four;
    match mode {
        FormMode::Printed => verbatim,
        FormMode::Corrected => verbatim / (T::of(2.0) * T::PI()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exchange_symmetry_of_rho_bracket() {
        for s in [1, -1] {
            for mode in [FormMode::Printed, FormMode::Corrected] {
                let a = analytic_rho01::<f64>(s, [1.0, 0.0], [1.0, 0.0], mode);
                let b = analytic_rho01::<f64>(s, [0.0, 1.0], [0.0, 1.0], mode);
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn w01_vanishes_at_origin_and_orthogonal_frames() {
        let p = TomogramPoint::pair([0.0, 0.0], [1.0, 0.3], [0.2, 1.0]).unwrap();
        assert_eq!(analytic_w01(1, &p, FormMode::Printed).unwrap(), 0.0);
        let q = TomogramPoint::<f64>::pair([0.7, -0.4], [1.0, 0.0], [0.0, 2.0]).unwrap();
        for mode in [FormMode::Printed, FormMode::Corrected] {
            let a = analytic_w01(1, &q, mode).unwrap();
            let b = analytic_w01(-1, &q, mode).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
    }
}
