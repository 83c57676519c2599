//! Route B: the exchange kernel applied to an unsymmetrized tomogram.
//!
//! For a term w₁(x₁, m₁, n₁) w₂(x₂, m₂, n₂) of a sum-of-products tomogram,
//! with χ_j(m, n) = ∫ dx w_j(x, m, n) e^{ix}:
//!
//! * the δ-constrained f-terms reduce to
//!   I(w; ξ, μ, ν) = (2π)⁻¹ ∫ dλ χ(λμ, λν) e^{−iλξ}, evaluated at the outer
//!   labels in both orders;
//! * each g-term factorizes into C · Π_j ∫ dm dn e^{iΨ_j(m, n)} χ_j(m, n),
//!   C = 1/((2π)³ |μ₁ν₂ − μ₂ν₁|), with real quadratic phases Ψ_j.
//!
//! w± = ¼ Σ_k c_k [I I + I I ± (G_P + G_P′)]. The (m, n) integrals run in
//! polar form m = s cos φ, n = s sin φ with s ∈ [−B, B], φ ∈ [0, π), where
//! χ(s, φ) = ∫ dy w(y, cos φ, sin φ) e^{isy} by homogeneity.

use num_complex::Complex;
use rayon::prelude::*;

use super::{czero, Route, SymTomogramResult};
use crate::error::{Result, TomoError};
use crate::hermite::fock_wavefunctions_into;
use crate::quadrature::{QuadratureSpec, Rule};
use crate::scalar::Real;
use crate::tomogram::{factor_values, ModeFactor, TomogramObject, TomogramPoint};

/// Quadrature bookkeeping of a route-B batch.
#[derive(Debug, Clone, PartialEq)]
pub struct RouteBDiagnostics<T> {
    pub box_radius: T,
    pub doublings: usize,
    pub radial_nodes: usize,
    pub angular_nodes: usize,
    /// Bound on the change of any value if the box were doubled.
    pub truncation_bound: T,
}

/// Ψ(v) = c₀ + g·v + ½ vᵀHv.
#[derive(Debug, Clone, Copy)]
struct QuadPhase<T> {
    c0: T,
    g: [T; 2],
    h: [[T; 2]; 2],
}

impl<T: Real> QuadPhase<T> {
    /// Exact extraction from a quadratic function by symmetric differences.
    fn from_fn(f: impl Fn(T, T) -> T) -> Self {
        let (o, l) = (T::zero(), T::one());
        let half = T::of(0.5);
        let c0 = f(o, o);
        let (pm, mm) = (f(l, o), f(-l, o));
        let (pn, mn) = (f(o, l), f(o, -l));
        let hmn = (f(l, l) - f(l, -l) - f(-l, l) + f(-l, -l)) * T::of(0.25);
        Self {
            c0,
            g: [(pm - mm) * half, (pn - mn) * half],
            h: [[pm + mm - c0 - c0, hmn], [hmn, pn + mn - c0 - c0]],
        }
    }

    fn gradient_bound(&self, radius: T) -> T {
        let hn = (self.h[0][0].powi(2) + T::of(2.0) * self.h[0][1].powi(2) + self.h[1][1].powi(2)).sqrt();
        hn * radius + self.g[0].hypot(self.g[1])
    }

    /// (α, β) with Ψ(s cos φ, s sin φ) = c₀ + α s + β s².
    fn along(&self, c: T, s: T) -> (T, T) {
        let half = T::of(0.5);
        (
            self.g[0] * c + self.g[1] * s,
            half * (self.h[0][0] * c * c + T::of(2.0) * self.h[0][1] * c * s + self.h[1][1] * s * s),
        )
    }
}

/// Outer-point constants of both g-terms.
struct Frame<T> {
    c: T,
    phases: [QuadPhase<T>; 4],
}

/// Phase index → particle whose factors it multiplies.
const PHASE_PARTICLE: [usize; 4] = [0, 1, 0, 1];

fn frame<T: Real>(p: &TomogramPoint<T>) -> Result<Frame<T>> {
    if p.particle_count() != 2 {
        return Err(TomoError::DimensionMismatch { expected: 2, got: p.particle_count() });
    }
    p.validate()?;
    let (x1, m1, n1) = p.particle(0);
    let (x2, m2, n2) = p.particle(1);
    if n1 == T::zero() || n2 == T::zero() {
        return Err(TomoError::domain("route B needs nu_1, nu_2 != 0"));
    }
    let det = m2 * n1 - m1 * n2;
    if !(det.abs() > T::of(1e-12) * m1.hypot(n1) * m2.hypot(n2)) {
        return Err(TomoError::DegenerateFrame { det: det.to_f64_lossy(), point: None });
    }
    let two_pi = T::of(2.0) * T::PI();
    let c = T::one() / (two_pi.powi(3) * det.abs());
    let cc = m1 / n1 - m2 / n2;
    let dd = x1 / n1 - x2 / n2;
    let two = T::of(2.0);
    let tail = move |x: T, mu: T, nu: T, m: T, n: T| -x * n / nu - mu * n * n / (two * nu) + m * n / two;
    let psi1 = move |m: T, n: T| {
        let s = m1 * n / n1 - m;
        (s * s + two * dd * s) / (two * cc) + tail(x1, m1, n1, m, n)
    };
    let psi2 = move |m: T, n: T| {
        let s = m2 * n / n2 - m;
        (-s * s + two * dd * s) / (two * cc) + tail(x2, m2, n2, m, n)
    };
    let psi1p = move |m: T, n: T| {
        let t = m2 * n / n2 - m;
        (-t * t + two * dd * t) / (two * cc) + tail(x2, m2, n2, m, n)
    };
    let psi2p = move |m: T, n: T| {
        let t = m1 * n / n1 - m;
        (t * t + two * dd * t) / (two * cc) + tail(x1, m1, n1, m, n)
    };
    Ok(Frame {
        c,
        phases: [QuadPhase::from_fn(psi1), QuadPhase::from_fn(psi2), QuadPhase::from_fn(psi1p), QuadPhase::from_fn(psi2p)],
    })
}

/// χ_f(s, φ) on a fixed radial rule.
enum ChiSource<T> {
    /// Transition factor φ_a φ_b e^{−i(a−b)φ}: the radial profile is φ-independent.
    Fock { shift: i64, profile: Vec<Complex<T>> },
    Generic { factor: ModeFactor<T>, y: Rule<T> },
}

impl<T: Real> ChiSource<T> {
    fn new(factor: &ModeFactor<T>, radial: &[T], y: &Rule<T>) -> Result<Self> {
        if let ModeFactor::Fock { ket, bra } = factor {
            let mut phi = vec![T::zero(); ket.max(bra) + 1];
            let mut profile = vec![czero(); radial.len()];
            for (yy, w) in y.iter() {
                fock_wavefunctions_into(yy, &mut phi)?;
                let amp = w * phi[*ket] * phi[*bra];
                for (p, &s) in profile.iter_mut().zip(radial) {
                    *p += Complex::from_polar(amp, s * yy);
                }
            }
            return Ok(ChiSource::Fock { shift: *ket as i64 - *bra as i64, profile });
        }
        Ok(ChiSource::Generic { factor: factor.clone(), y: y.clone() })
    }

    fn row(&self, phi: T, radial: &[T], q: &QuadratureSpec) -> Result<Vec<Complex<T>>> {
        match self {
            ChiSource::Fock { shift, profile } => {
                let ph = Complex::from_polar(T::one(), -T::of(*shift as f64) * phi);
                Ok(profile.iter().map(|&p| p * ph).collect())
            }
            ChiSource::Generic { factor, y } => {
                let (c, s) = (phi.cos(), phi.sin());
                let mut wy = Vec::with_capacity(y.len());
                for (yy, w) in y.iter() {
                    let v = factor_values(std::slice::from_ref(factor), yy, c, s, T::zero(), q)?;
                    wy.push((yy, v[0] * w));
                }
                Ok(radial
                    .iter()
                    .map(|&r| wy.iter().fold(czero(), |a, &(yy, v)| a + v * Complex::from_polar(T::one(), r * yy)))
                    .collect())
            }
        }
    }
}

/// Spatial half-extent and oscillation wavenumber of a factor in y.
fn factor_extent<T: Real>(f: &ModeFactor<T>, q: &QuadratureSpec) -> (f64, f64, f64) {
    match f {
        ModeFactor::Fock { ket, bra } | ModeFactor::Chirp { ket, bra } => {
            let root = ((2 * ket.max(bra) + 1) as f64).sqrt();
            (q.trunc_l.max(root + 7.0), 2.0 * root, (*ket as f64 - *bra as f64).abs())
        }
        ModeFactor::Grid(g) => {
            let ext = q.trunc_l.min(g.xi_max().to_f64_lossy());
            (ext, std::f64::consts::PI / g.xi_step.to_f64_lossy(), 2.0 * ext)
        }
    }
}

struct Evaluated<T> {
    values: Vec<Complex<T>>,
    direct: Vec<T>,
    exchange: Vec<T>,
    bound: Vec<T>,
    radial_nodes: usize,
    angular_nodes: usize,
}

#[allow(clippy::too_many_arguments)]
fn evaluate_with_box<T: Real>(
    unique: &[Vec<ModeFactor<T>>; 2],
    terms: &[(Complex<T>, [usize; 2])],
    points: &[TomogramPoint<T>],
    frames: &[Frame<T>],
    sign: T,
    radius: f64,
    q: &QuadratureSpec,
) -> Result<Evaluated<T>> {
    let mut y_ext = 0.0f64;
    let mut kappa = 0.0f64;
    let mut ang = 0.0f64;
    for f in unique.iter().flatten() {
        let (e, k, a) = factor_extent(f, q);
        y_ext = y_ext.max(e);
        kappa = kappa.max(k);
        ang = ang.max(a);
    }
    let bt = T::of(radius);
    let mut grad = 0.0f64;
    let mut lin = 0.0f64;
    for (p, fr) in points.iter().zip(frames) {
        for ph in &fr.phases {
            grad = grad.max(ph.gradient_bound(bt).to_f64_lossy());
        }
        for j in 0..2 {
            let (x, m, n) = p.particle(j);
            lin = lin.max((x / m.hypot(n)).abs().to_f64_lossy());
        }
    }
    let freq_r = grad + y_ext + lin;
    let radial_panels = q.panels_for(radius, freq_r);
    let radial = Rule::<T>::composite_split(-bt, T::zero(), bt, radial_panels);
    let angular = Rule::<T>::composite_legendre(T::zero(), T::PI(), q.panels_for(std::f64::consts::PI, radius * grad + ang));
    let y_rule = Rule::<T>::composite_legendre(
        T::of(-y_ext),
        T::of(y_ext),
        q.panels_for(2.0 * y_ext, 2.0 * radius + kappa),
    );
    // Annulus rule for the truncation bound.
    let annulus_half = Rule::<T>::composite_legendre(bt, bt + bt, q.panels_for(radius, y_ext + kappa).max(2));
    let annulus: Vec<T> = annulus_half.nodes.iter().map(|&s| -s).chain(annulus_half.nodes.iter().copied()).collect();
    let annulus_w: Vec<T> = annulus_half.weights.iter().chain(&annulus_half.weights).copied().collect();

    let sources: [Vec<ChiSource<T>>; 2] = [
        unique[0].iter().map(|f| ChiSource::new(f, &radial.nodes, &y_rule)).collect::<Result<_>>()?,
        unique[1].iter().map(|f| ChiSource::new(f, &radial.nodes, &y_rule)).collect::<Result<_>>()?,
    ];
    let umax = unique[0].len().max(unique[1].len());
    let np = points.len();
    let stride = 4 * umax;

    // g-integrals J[p][phase][factor], streamed over φ.
    let partial: Vec<Vec<Complex<T>>> = angular
        .nodes
        .par_iter()
        .zip(angular.weights.par_iter())
        .map(|(&phi, &wphi)| -> Result<Vec<Complex<T>>> {
            let rows: [Vec<Vec<Complex<T>>>; 2] = [
                sources[0].iter().map(|s| s.row(phi, &radial.nodes, q)).collect::<Result<_>>()?,
                sources[1].iter().map(|s| s.row(phi, &radial.nodes, q)).collect::<Result<_>>()?,
            ];
            let (c, s) = (phi.cos(), phi.sin());
            let mut out = vec![czero(); np * stride];
            let mut e = vec![czero(); radial.len()];
            for (pi, fr) in frames.iter().enumerate() {
                for (k, ph) in fr.phases.iter().enumerate() {
                    let (alpha, beta) = ph.along(c, s);
                    for ((ek, &r), &w) in e.iter_mut().zip(&radial.nodes).zip(&radial.weights) {
                        *ek = Complex::from_polar(w * r.abs() * wphi, ph.c0 + alpha * r + beta * r * r);
                    }
                    for (fi, row) in rows[PHASE_PARTICLE[k]].iter().enumerate() {
                        let acc = e.iter().zip(row).fold(czero(), |a, (x, y)| a + *x * *y);
                        out[pi * stride + k * umax + fi] = acc;
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut j_int = vec![czero(); np * stride];
    for part in &partial {
        for (a, b) in j_int.iter_mut().zip(part) {
            *a += *b;
        }
    }

    // f-integrals I[(particle, factor), outer label] and annulus bounds.
    let annulus_sources: [Vec<ChiSource<T>>; 2] = [
        unique[0].iter().map(|f| ChiSource::new(f, &annulus, &y_rule)).collect::<Result<_>>()?,
        unique[1].iter().map(|f| ChiSource::new(f, &annulus, &y_rule)).collect::<Result<_>>()?,
    ];
    // E_g[j][f] = ∫_annulus |χ| |s| ds dφ (coarse angular rule for generic factors).
    let coarse = Rule::<T>::composite_legendre(T::zero(), T::PI(), 4);
    let mut e_g: [Vec<T>; 2] = [Vec::new(), Vec::new()];
    for j in 0..2 {
        for src in &annulus_sources[j] {
            let mut total = T::zero();
            for (phi, wphi) in coarse.iter() {
                let row = src.row(phi, &annulus, q)?;
                for ((v, &s), &w) in row.iter().zip(&annulus).zip(&annulus_w) {
                    total += wphi * w * s.abs() * v.norm();
                }
            }
            e_g[j].push(total);
        }
    }

    let two_pi = T::of(2.0) * T::PI();
    let quarter = T::of(0.25);
    let mut out = Evaluated {
        values: Vec::with_capacity(np),
        direct: Vec::with_capacity(np),
        exchange: Vec::with_capacity(np),
        bound: Vec::with_capacity(np),
        radial_nodes: radial.len(),
        angular_nodes: angular.len(),
    };
    for (pi, (p, fr)) in points.iter().zip(frames).enumerate() {
        // I and its annulus bound per (particle j, factor f, outer o).
        let mut i_val: [Vec<[Complex<T>; 2]>; 2] = [Vec::new(), Vec::new()];
        let mut i_err: [Vec<[T; 2]>; 2] = [Vec::new(), Vec::new()];
        for j in 0..2 {
            for (src, asrc) in sources[j].iter().zip(&annulus_sources[j]) {
                let mut v = [czero(); 2];
                let mut err = [T::zero(); 2];
                for o in 0..2 {
                    let (x, m, n) = p.particle(o);
                    let s0 = m.hypot(n);
                    let mut phi0 = n.atan2(m);
                    let mut xs = x / s0;
                    if phi0 < T::zero() {
                        phi0 += T::PI();
                        xs = -xs;
                    }
                    if phi0 >= T::PI() {
                        phi0 -= T::PI();
                        xs = -xs;
                    }
                    let row = src.row(phi0, &radial.nodes, q)?;
                    let sum = row
                        .iter()
                        .zip(&radial.nodes)
                        .zip(&radial.weights)
                        .fold(czero(), |a, ((c, &s), &w)| a + *c * Complex::from_polar(w, -s * xs));
                    v[o] = sum / (two_pi * s0);
                    let arow = asrc.row(phi0, &annulus, q)?;
                    let tail = arow.iter().zip(&annulus_w).fold(T::zero(), |a, (c, &w)| a + c.norm() * w);
                    err[o] = tail / (two_pi * s0);
                }
                i_val[j].push(v);
                i_err[j].push(err);
            }
        }
        let jv = |k: usize, f: usize| j_int[pi * stride + k * umax + f];
        let prod_bound = |a: Complex<T>, ea: T, b: Complex<T>, eb: T| ea * b.norm() + a.norm() * eb + ea * eb;
        let mut total = czero();
        let mut direct = czero();
        let mut exchange = czero();
        let mut bound = T::zero();
        for &(coeff, [f1, f2]) in terms {
            let fi = i_val[0][f1][0] * i_val[1][f2][1];
            let fpi = i_val[0][f1][1] * i_val[1][f2][0];
            let gp = jv(0, f1) * jv(1, f2) * fr.c;
            let gpp = jv(2, f1) * jv(3, f2) * fr.c;
            let d = (fi + fpi) * coeff * quarter;
            let x = (gp + gpp) * coeff * (quarter * sign);
            direct += d;
            exchange += x;
            total += d + x;
            let b_f = prod_bound(i_val[0][f1][0], i_err[0][f1][0], i_val[1][f2][1], i_err[1][f2][1])
                + prod_bound(i_val[0][f1][1], i_err[0][f1][1], i_val[1][f2][0], i_err[1][f2][0]);
            let b_g = (prod_bound(jv(0, f1), e_g[0][f1], jv(1, f2), e_g[1][f2])
                + prod_bound(jv(2, f1), e_g[0][f1], jv(3, f2), e_g[1][f2]))
                * fr.c;
            bound += coeff.norm() * quarter * (b_f + b_g);
        }
        out.values.push(total);
        out.direct.push(direct.re);
        out.exchange.push(exchange.re);
        out.bound.push(bound);
    }
    Ok(out)
}

/// Route B over a batch of points sharing one quadrature grid.
pub fn route_b_batch<T: Real>(
    w: &TomogramObject<T>,
    sign: i32,
    points: &[TomogramPoint<T>],
    q: &QuadratureSpec,
) -> Result<(SymTomogramResult<T>, RouteBDiagnostics<T>)> {
    q.validate()?;
    if w.particle_count() != 2 {
        return Err(TomoError::DimensionMismatch { expected: 2, got: w.particle_count() });
    }
    let sep = w.separable_terms().ok_or_else(|| {
        TomoError::Unsupported("route B needs a sum-of-products two-particle tomogram".into())
    })?;
    let mut unique: [Vec<ModeFactor<T>>; 2] = [Vec::new(), Vec::new()];
    let mut terms = Vec::with_capacity(sep.len());
    for t in &sep {
        let mut idx = [0usize; 2];
        for j in 0..2 {
            let f = &t.factors[j];
            idx[j] = match unique[j].iter().position(|u| same(u, f)) {
                Some(k) => k,
                None => {
                    unique[j].push(f.clone());
                    unique[j].len() - 1
                }
            };
        }
        terms.push((t.coeff, idx));
    }
    let frames: Vec<Frame<T>> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            frame(p).map_err(|e| match e {
                TomoError::DegenerateFrame { det, .. } => TomoError::DegenerateFrame { det, point: Some(i + 1) },
                TomoError::Domain(m) => TomoError::Domain(format!("point {}: {m}", i + 1)),
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let s = T::of(f64::from(sign.signum()));
    let mut radius = q.route_b_box;
    for doublings in 0..=q.route_b_max_doublings {
        let ev = evaluate_with_box(&unique, &terms, points, &frames, s, radius, q)?;
        let converged = ev
            .values
            .iter()
            .zip(&ev.bound)
            .all(|(v, &b)| b <= T::of(q.route_b_shift_tol) * v.re.abs().max(T::of(1e-4)));
        if converged {
            let mut imag = T::zero();
            for (v, p) in ev.values.iter().zip(points) {
                let tol = T::of(q.route_b_imag_tol) * v.re.abs().max(T::one());
                if !(v.im.abs() <= tol) {
                    return Err(TomoError::numeric("route_b", format!("imaginary residual {} at {:?}", v.im, p)));
                }
                imag = imag.max(v.im.abs());
            }
            let bound = ev.bound.iter().fold(T::zero(), |a, &b| a.max(b));
            let result = SymTomogramResult {
                route: Route::B,
                values: ev.values.iter().map(|v| v.re).collect(),
                direct: ev.direct,
                interference: ev.exchange,
                imag_residual: imag,
            };
            let diag = RouteBDiagnostics {
                box_radius: T::of(radius),
                doublings,
                radial_nodes: ev.radial_nodes,
                angular_nodes: ev.angular_nodes,
                truncation_bound: bound,
            };
            return Ok((result, diag));
        }
        radius *= 2.0;
    }
    Err(TomoError::numeric(
        "route_b",
        format!("truncation box did not converge after {} doublings", q.route_b_max_doublings),
    ))
}

fn same<T: Real>(a: &ModeFactor<T>, b: &ModeFactor<T>) -> bool {
    match (a, b) {
        (ModeFactor::Grid(x), ModeFactor::Grid(y)) => std::sync::Arc::ptr_eq(x, y),
        _ => a == b,
    }
}

/// Route B at a single point.
pub fn symmetrized_tomogram_route_b<T: Real>(
    w: &TomogramObject<T>,
    sign: i32,
    p: &TomogramPoint<T>,
    q: &QuadratureSpec,
) -> Result<T> {
    Ok(route_b_batch(w, sign, std::slice::from_ref(p), q)?.0.values[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::pure_density;
    use crate::hermite::ProductState;
    use crate::permutation::SymmetryClass;
    use crate::symmetrized::{route_a_batch, RouteAOptions};

    #[test]
    fn matches_route_a_on_first_excited_pair() {
        let q = QuadratureSpec::default();
        let state = ProductState::<f64>::fock(&[0, 1]).unwrap();
        let w = TomogramObject::from_state(&state).unwrap();
        let pts = vec![
            TomogramPoint::pair([0.8, -0.4], [1.0, 0.5], [0.5, 1.0]).unwrap(),
            TomogramPoint::pair([0.3, 1.1], [1.0, 0.5], [0.5, 1.0]).unwrap(),
        ];
        for (sign, class) in [(1, SymmetryClass::Plus), (-1, SymmetryClass::Minus)] {
            let (b, diag) = route_b_batch(&w, sign, &pts, &q).unwrap();
            let a = route_a_batch(&pure_density(&state), class, &pts, &q, RouteAOptions { closed_form: true, ..Default::default() })
                .unwrap();
            for (x, y) in a.values.iter().zip(&b.values) {
                assert!((x - y).abs() <= 1e-3 * x.abs().max(1e-6), "{x} vs {y} ({diag:?})");
            }
        }
    }
}
