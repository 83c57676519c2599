//! Symmetrized and antisymmetrized tomograms.
//!
//! Route A symmetrizes the density and transforms it. Route B applies the
//! exchange kernel K̃± directly to an unsymmetrized two-particle tomogram.

mod closed_form;
mod kernel;
mod route_b;

use num_complex::Complex;

use crate::density::{pure_density, DensityObject};
use crate::error::{Result, TomoError};
use crate::hermite::ProductState;
use crate::permutation::{project, symmetrize_n_with, SymmetrizeOptions, SymmetryClass};
use crate::quadrature::QuadratureSpec;
use crate::scalar::Real;
use crate::tomogram::{TomogramObject, TomogramPoint};

pub use closed_form::{analytic_rho01, analytic_w01, FormMode};
pub use kernel::{ktilde_kernel_eval, InnerPoint, KernelEvaluation, KernelKind, KernelTerm};
pub use route_b::{route_b_batch, symmetrized_tomogram_route_b, RouteBDiagnostics};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Route {
    A,
    B,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::A => "a",
            Route::B => "b",
        }
    }
}

impl std::str::FromStr for Route {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a" => Ok(Route::A),
            "b" => Ok(Route::B),
            other => Err(TomoError::Parse(format!("unknown route '{other}'"))),
        }
    }
}

/// Values of a symmetrized tomogram at a batch of points, split into the
/// part diagonal in the product basis and the remaining interference part.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTomogramResult<T> {
    pub route: Route,
    pub values: Vec<T>,
    pub direct: Vec<T>,
    pub interference: Vec<T>,
    /// Largest discarded imaginary part.
    pub imag_residual: T,
}

/// Options for route A.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RouteAOptions {
    /// Rescale the projected density to unit trace.
    pub renormalize: bool,
    /// Use the closed-form transition factors instead of numeric quadrature.
    pub closed_form: bool,
}

/// The class projection of `d`: the four-element projectors for two
/// particles, the N-particle (anti)symmetrizer otherwise.
pub fn project_class<T: Real>(class: SymmetryClass, d: &DensityObject<T>, renormalize: bool) -> Result<DensityObject<T>> {
    let n = d.particle_count();
    if n == 2 && !renormalize {
        return project(class, d);
    }
    let sign = class.exchange_sign().ok_or_else(|| {
        TomoError::Unsupported(format!("class {class} exists only for two particles without renormalization"))
    })?;
    symmetrize_n_with(sign, d, n, SymmetrizeOptions { renormalize, ..SymmetrizeOptions::default() })
}

/// Route-A tomogram object of the class-projected density.
pub fn route_a_tomogram<T: Real>(
    d: &DensityObject<T>,
    class: SymmetryClass,
    q: &QuadratureSpec,
    opts: RouteAOptions,
) -> Result<TomogramObject<T>> {
    let projected = project_class(class, d, opts.renormalize)?;
    if opts.closed_form {
        Ok(TomogramObject::analytic(&projected)?.with_quadrature(q.clone()))
    } else {
        TomogramObject::transform(&projected, q)
    }
}

/// Route A over a batch of points.
pub fn route_a_batch<T: Real>(
    d: &DensityObject<T>,
    class: SymmetryClass,
    points: &[TomogramPoint<T>],
    q: &QuadratureSpec,
    opts: RouteAOptions,
) -> Result<SymTomogramResult<T>> {
    let full = route_a_tomogram(d, class, q, opts)?;
    let separable = full.separable_terms().is_some();
    let (direct_obj, inter_obj) = if separable {
        (Some(full.filter_terms(|t| t.is_direct())?), Some(full.filter_terms(|t| !t.is_direct())?))
    } else {
        (None, None)
    };
    let mut out = SymTomogramResult {
        route: Route::A,
        values: Vec::with_capacity(points.len()),
        direct: Vec::with_capacity(points.len()),
        interference: Vec::with_capacity(points.len()),
        imag_residual: T::zero(),
    };
    for p in points {
        let z = full.eval_complex(p)?;
        let tol = T::of(q.imag_tol) * z.re.abs().max(T::one());
        if !(z.im.abs() <= tol) {
            return Err(TomoError::numeric("route_a", format!("imaginary residual {} at {:?}", z.im, p)));
        }
        out.imag_residual = out.imag_residual.max(z.im.abs());
        let (dv, iv) = match (&direct_obj, &inter_obj) {
            (Some(a), Some(b)) => (a.eval_complex(p)?.re, b.eval_complex(p)?.re),
            _ => (z.re, T::zero()),
        };
        out.values.push(z.re);
        out.direct.push(dv);
        out.interference.push(iv);
    }
    Ok(out)
}

/// Route A at one point for a pure product-state superposition.
pub fn symmetrized_tomogram_route_a<T: Real>(
    state: &ProductState<T>,
    sign: i32,
    p: &TomogramPoint<T>,
    q: &QuadratureSpec,
) -> Result<T> {
    let class = if sign < 0 { SymmetryClass::Minus } else { SymmetryClass::Plus };
    let r = route_a_batch(&pure_density(state), class, std::slice::from_ref(p), q, RouteAOptions::default())?;
    Ok(r.values[0])
}

/// Unsymmetrized closed-form tomogram of a state, the usual route-B input.
pub fn unsymmetrized_tomogram<T: Real>(state: &ProductState<T>) -> Result<TomogramObject<T>> {
    TomogramObject::from_state(state)
}

pub(crate) fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomogram::fock_tomogram;

    #[test]
    fn symmetric_state_is_unchanged_and_pauli_vanishes() {
        let q = QuadratureSpec::default();
        let s = ProductState::<f64>::fock(&[0, 0]).unwrap();
        let p = TomogramPoint::pair([0.4, -0.3], [1.0, 0.5], [0.5, 1.0]).unwrap();
        let plus = symmetrized_tomogram_route_a(&s, 1, &p, &q).unwrap();
        assert!((plus - fock_tomogram(0, 0, &p).unwrap()).abs() < 1e-12);
        assert!(symmetrized_tomogram_route_a(&s, -1, &p, &q).unwrap().abs() < 1e-15);
    }

    #[test]
    fn decomposition_of_first_excited_pair() {
        let q = QuadratureSpec::default();
        let d = pure_density(&ProductState::<f64>::fock(&[0, 1]).unwrap());
        let p = TomogramPoint::pair([1.0, 1.0], [1.0, 0.0], [0.0, 1.0]).unwrap();
        let r = route_a_batch(&d, SymmetryClass::Plus, std::slice::from_ref(&p), &q, RouteAOptions::default()).unwrap();
        // Orthogonal frame vectors: no interference.
        assert!(r.interference[0].abs() < 1e-14);
        let e = (-2.0f64).exp() / std::f64::consts::PI;
        assert!((r.direct[0] - e).abs() < 1e-12, "{} {}", r.direct[0], e);
    }
}
