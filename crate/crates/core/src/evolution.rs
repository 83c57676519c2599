//! Tomogram evolution under quadratic Hamiltonians and the classical bridge.
//!
//! For H = p²/2m + V(q) with V at most quadratic, phase space moves by an
//! affine map z(t) = Λ(t) z(0) + d(t). The tomogram then evolves along
//! characteristics: w(ξ, μ, ν, t) = w(ξ − (μ, ν)·d, (μ, ν)Λ, 0).

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Result, TomoError};
use crate::quadrature::{QuadratureSpec, Rule};
use crate::scalar::Real;
use crate::tomogram::{TomogramObject, TomogramPoint};

/// Anything that evaluates to a real tomogram value.
pub trait TomogramEval<T: Real>: Send + Sync {
    fn particle_count(&self) -> usize;
    fn eval_at(&self, p: &TomogramPoint<T>) -> Result<T>;
}

impl<T: Real> TomogramEval<T> for TomogramObject<T> {
    fn particle_count(&self) -> usize {
        TomogramObject::particle_count(self)
    }
    fn eval_at(&self, p: &TomogramPoint<T>) -> Result<T> {
        self.eval(p)
    }
}

impl<T: Real, W: TomogramEval<T> + ?Sized> TomogramEval<T> for &W {
    fn particle_count(&self) -> usize {
        (**self).particle_count()
    }
    fn eval_at(&self, p: &TomogramPoint<T>) -> Result<T> {
        (**self).eval_at(p)
    }
}

/// Single-particle phase-space flow dz/dt = A z + b (A traceless).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticFlow<T> {
    a: [[T; 2]; 2],
    b: [T; 2],
}

impl<T: Real> QuadraticFlow<T> {
    /// Harmonic oscillator with m = ω = 1: rotation by t.
    pub fn oscillator() -> Self {
        Self { a: [[T::zero(), T::one()], [-T::one(), T::zero()]], b: [T::zero(); 2] }
    }

    /// Free particle of unit mass: q ↦ q + p t.
    pub fn free_particle() -> Self {
        Self { a: [[T::zero(), T::one()], [T::zero(), T::zero()]], b: [T::zero(); 2] }
    }

    /// H = p²/2m + Σ_k c_k q^k. Anything beyond the quadratic term is rejected.
    pub fn from_potential(mass: T, coeffs: &[T]) -> Result<Self> {
        if !(mass > T::zero() && mass.is_finite()) {
            return Err(TomoError::domain("mass must be positive"));
        }
        if let Some(k) = coeffs.iter().skip(3).position(|c| *c != T::zero()) {
            return Err(TomoError::Unsupported(format!(
                "potential term of degree {} is not quadratic; only the characteristics method for quadratic Hamiltonians is provided",
                k + 3
            )));
        }
        let c = |k: usize| coeffs.get(k).copied().unwrap_or(T::zero());
        let two = T::of(2.0);
        Self::from_generator([[T::zero(), T::one() / mass], [-two * c(2), T::zero()]], [T::zero(), -c(1)])
    }

    /// Affine generator; A must be traceless for the flow to be symplectic.
    pub fn from_generator(a: [[T; 2]; 2], b: [T; 2]) -> Result<Self> {
        let scale = a.iter().flatten().fold(T::one(), |m, x| m.max(x.abs()));
        if !((a[0][0] + a[1][1]).abs() <= T::of(1e-12) * scale) {
            return Err(TomoError::domain("flow generator is not traceless, so the flow is not symplectic"));
        }
        if a.iter().flatten().chain(&b).any(|x| !x.is_finite()) {
            return Err(TomoError::domain("non-finite flow generator"));
        }
        Ok(Self { a, b })
    }

    fn det_a(&self) -> T {
        self.a[0][0] * self.a[1][1] - self.a[0][1] * self.a[1][0]
    }

    /// Λ(t) = exp(A t), using A² = −det(A)·I.
    pub fn matrix(&self, t: T) -> Result<[[T; 2]; 2]> {
        let w2 = self.det_a();
        let (c, s) = if w2 > T::zero() {
            let w = w2.sqrt();
            ((w * t).cos(), (w * t).sin() / w)
        } else if w2 < T::zero() {
            let w = (-w2).sqrt();
            ((w * t).cosh(), (w * t).sinh() / w)
        } else {
            (T::one(), t)
        };
        let a = &self.a;
        let m = [[c + s * a[0][0], s * a[0][1]], [s * a[1][0], c + s * a[1][1]]];
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        let scale = m.iter().flatten().fold(T::one(), |x, v| x.max(v.abs()));
        if !((det - T::one()).abs() <= T::of(1e-12) * scale * scale) || !det.is_finite() {
            return Err(TomoError::numeric("flow", format!("flow matrix determinant {det} is not 1")));
        }
        Ok(m)
    }

    /// The affine part d(t).
    pub fn shift(&self, t: T) -> Result<[T; 2]> {
        let (a, b) = (&self.a, &self.b);
        if b.iter().all(|x| *x == T::zero()) {
            return Ok([T::zero(); 2]);
        }
        let det = self.det_a();
        if det != T::zero() {
            // Equilibrium z* = −A⁻¹b; d = (I − Λ) z*.
            let zs = [-(a[1][1] * b[0] - a[0][1] * b[1]) / det, -(-a[1][0] * b[0] + a[0][0] * b[1]) / det];
            let m = self.matrix(t)?;
            return Ok([
                zs[0] - m[0][0] * zs[0] - m[0][1] * zs[1],
                zs[1] - m[1][0] * zs[0] - m[1][1] * zs[1],
            ]);
        }
        // A nilpotent: d = t b + t²/2 A b.
        let h = t * t / T::of(2.0);
        Ok([t * b[0] + h * (a[0][0] * b[0] + a[0][1] * b[1]), t * b[1] + h * (a[1][0] * b[0] + a[1][1] * b[1])])
    }

    /// z(t) for a single particle.
    pub fn advance(&self, z: [T; 2], t: T) -> Result<[T; 2]> {
        let (m, d) = (self.matrix(t)?, self.shift(t)?);
        Ok([m[0][0] * z[0] + m[0][1] * z[1] + d[0], m[1][0] * z[0] + m[1][1] * z[1] + d[1]])
    }

    /// z(0) from z(t).
    pub fn retreat(&self, z: [T; 2], t: T) -> Result<[T; 2]> {
        let (m, d) = (self.matrix(t)?, self.shift(t)?);
        let (u, v) = (z[0] - d[0], z[1] - d[1]);
        // det Λ = 1.
        Ok([m[1][1] * u - m[0][1] * v, -m[1][0] * u + m[0][0] * v])
    }

    /// Tomogram argument at time 0 whose value equals the time-t value at `p`.
    pub fn pull_back(&self, p: &TomogramPoint<T>, t: T) -> Result<TomogramPoint<T>> {
        let (m, d) = (self.matrix(t)?, self.shift(t)?);
        let mut out = p.clone();
        for i in 0..p.particle_count() {
            let (x, mu, nu) = p.particle(i);
            out.xi[i] = x - (mu * d[0] + nu * d[1]);
            out.mu[i] = mu * m[0][0] + nu * m[1][0];
            out.nu[i] = mu * m[0][1] + nu * m[1][1];
        }
        Ok(out)
    }
}

/// Lazy view of `inner` evolved by `flow` for time `t`.
#[derive(Debug, Clone)]
pub struct EvolvedTomogram<T, W> {
    pub inner: W,
    pub flow: QuadraticFlow<T>,
    pub t: T,
}

impl<T: Real, W: TomogramEval<T>> EvolvedTomogram<T, W> {
    pub fn new(inner: W, flow: QuadraticFlow<T>, t: T) -> Self {
        Self { inner, flow, t }
    }

    pub fn eval(&self, p: &TomogramPoint<T>) -> Result<T> {
        self.eval_at(p)
    }
}

impl<T: Real, W: TomogramEval<T>> TomogramEval<T> for EvolvedTomogram<T, W> {
    fn particle_count(&self) -> usize {
        self.inner.particle_count()
    }
    fn eval_at(&self, p: &TomogramPoint<T>) -> Result<T> {
        self.inner.eval_at(&self.flow.pull_back(p, self.t)?)
    }
}

/// w(ξ, μ, ν, t) via characteristics.
pub fn evolve_tomogram<T: Real, W: TomogramEval<T> + ?Sized>(
    w: &W,
    flow: &QuadraticFlow<T>,
    t: T,
    p: &TomogramPoint<T>,
) -> Result<T> {
    w.eval_at(&flow.pull_back(p, t)?)
}

type DensityFn<T> = dyn Fn(&[T]) -> T + Send + Sync;

/// Phase-space density f(q₁, p₁, …, q_N, p_N).
#[derive(Clone)]
pub struct ClassicalDistribution<T> {
    particles: usize,
    f: Arc<DensityFn<T>>,
    norm: T,
}

impl<T> std::fmt::Debug for ClassicalDistribution<T>
where
    T: std::fmt::Debug,
{
    fn fmt(&self, fm: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fm.debug_struct("ClassicalDistribution")
            .field("particles", &self.particles)
            .field("norm", &self.norm)
            .finish_non_exhaustive()
    }
}

impl<T: Real> ClassicalDistribution<T> {
    /// Wraps `f`, integrating it over [−L, L]^{2N} to get the normalization.
    /// Negative or non-normalizable densities are rejected.
    pub fn new(particles: usize, f: impl Fn(&[T]) -> T + Send + Sync + 'static, q: &QuadratureSpec) -> Result<Self> {
        if !(1..=2).contains(&particles) {
            return Err(TomoError::Unsupported(format!("classical distributions of {particles} particles")));
        }
        let f: Arc<DensityFn<T>> = Arc::new(f);
        let l = T::of(q.trunc_l);
        let rule = Rule::<T>::composite_legendre(-l, l, ((q.trunc_l / 2.0).ceil() as usize).max(2));
        let (norm, min, max) = box_integral(&*f, particles, &rule);
        if !(norm.is_finite() && norm > T::zero()) {
            return Err(TomoError::domain(format!("classical density is not normalizable (integral {norm})")));
        }
        if min < -T::of(1e-12) * max {
            return Err(TomoError::domain(format!("classical density takes negative value {min}")));
        }
        Ok(Self { particles, f, norm })
    }

    pub fn particle_count(&self) -> usize {
        self.particles
    }

    /// ∫ f over the quadrature box.
    pub fn normalization(&self) -> T {
        self.norm
    }

    pub fn is_normalized(&self, tol: T) -> bool {
        (self.norm - T::one()).abs() <= tol
    }

    /// f / ∫f.
    pub fn normalized(&self) -> Self {
        let (f, n) = (self.f.clone(), self.norm);
        Self { particles: self.particles, f: Arc::new(move |z: &[T]| f(z) / n), norm: T::one() }
    }

    pub fn density(&self, z: &[T]) -> T {
        (self.f)(z)
    }

    /// f ∘ Φ_t⁻¹: the density transported by the flow.
    pub fn pushed_forward(&self, flow: &QuadraticFlow<T>, t: T) -> Result<Self> {
        flow.matrix(t)?;
        let (f, flow) = (self.f.clone(), *flow);
        let g = move |z: &[T]| {
            let mut back = z.to_vec();
            for pair in back.chunks_exact_mut(2) {
                let r = flow.retreat([pair[0], pair[1]], t).unwrap_or([T::nan(); 2]);
                pair.copy_from_slice(&r);
            }
            f(&back)
        };
        Ok(Self { particles: self.particles, f: Arc::new(g), norm: self.norm })
    }
}

fn box_integral<T: Real>(f: &DensityFn<T>, particles: usize, rule: &Rule<T>) -> (T, T, T) {
    let n = rule.len();
    let dims = 2 * particles;
    let rows: Vec<(T, T, T)> = (0..n)
        .into_par_iter()
        .map(|i0| {
            let mut z = vec![T::zero(); dims];
            let mut idx = vec![0usize; dims - 1];
            let (mut sum, mut lo, mut hi) = (T::zero(), T::infinity(), T::neg_infinity());
            z[0] = rule.nodes[i0];
            loop {
                let mut w = rule.weights[i0];
                for (k, &j) in idx.iter().enumerate() {
                    z[k + 1] = rule.nodes[j];
                    w *= rule.weights[j];
                }
                let v = f(&z);
                sum += w * v;
                lo = lo.min(v);
                hi = hi.max(v);
                let mut k = 0;
                loop {
                    if k == idx.len() {
                        return (sum, lo, hi);
                    }
                    idx[k] += 1;
                    if idx[k] < n {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
        })
        .collect();
    rows.into_iter().fold((T::zero(), T::infinity(), T::neg_infinity()), |(s, l, h), (a, b, c)| {
        (s + a, l.min(b), h.max(c))
    })
}

/// w(ξ, μ, ν) = ∫ f Π_j δ(ξ_j − μ_j q_j − ν_j p_j), as line integrals
/// (1/s_j) ∫ dτ_j along q_j = (ξ_j μ_j − τ_j ν_j s_j)/s_j², p_j = (ξ_j ν_j + τ_j μ_j s_j)/s_j².
pub fn classical_to_tomogram<T: Real>(
    f: &ClassicalDistribution<T>,
    p: &TomogramPoint<T>,
    q: &QuadratureSpec,
) -> Result<T> {
    let n = f.particles;
    if p.particle_count() != n {
        return Err(TomoError::DimensionMismatch { expected: n, got: p.particle_count() });
    }
    p.validate()?;
    let reach = q.trunc_l * std::f64::consts::SQRT_2;
    let r = T::of(reach);
    let rule = Rule::<T>::composite_legendre(-r, r, (2.0 * reach).ceil() as usize);
    let lines: Vec<([T; 2], [T; 2], T)> = (0..n)
        .map(|j| {
            let (x, m, nu) = p.particle(j);
            let s = m.hypot(nu);
            ([x * m / (s * s), x * nu / (s * s)], [-nu / s, m / s], T::one() / s)
        })
        .collect();
    let mut z = vec![T::zero(); 2 * n];
    let mut total = T::zero();
    match n {
        1 => {
            let (c, d, _) = lines[0];
            for (tau, w) in rule.iter() {
                z[0] = c[0] + tau * d[0];
                z[1] = c[1] + tau * d[1];
                total += w * f.density(&z);
            }
        }
        _ => {
            let (c1, d1, _) = lines[0];
            let (c2, d2, _) = lines[1];
            for (t1, w1) in rule.iter() {
                z[0] = c1[0] + t1 * d1[0];
                z[1] = c1[1] + t1 * d1[1];
                for (t2, w2) in rule.iter() {
                    z[2] = c2[0] + t2 * d2[0];
                    z[3] = c2[1] + t2 * d2[1];
                    total += w1 * w2 * f.density(&z);
                }
            }
        }
    }
    let jac = lines.iter().fold(T::one(), |a, l| a * l.2);
    Ok(total * jac)
}

/// The classical tomogram as a lazily evaluated object.
#[derive(Debug, Clone)]
pub struct ClassicalTomogram<T> {
    pub f: ClassicalDistribution<T>,
    pub quadrature: QuadratureSpec,
}

impl<T: Real> TomogramEval<T> for ClassicalTomogram<T> {
    fn particle_count(&self) -> usize {
        self.f.particles
    }
    fn eval_at(&self, p: &TomogramPoint<T>) -> Result<T> {
        classical_to_tomogram(&self.f, p, &self.quadrature)
    }
}

/// max_p |evolve(classical_to_tomogram(f))(p) − classical_to_tomogram(f ∘ Φ_t⁻¹)(p)|.
pub fn boltzmann_consistency<T: Real>(
    f: &ClassicalDistribution<T>,
    flow: &QuadraticFlow<T>,
    t: T,
    probes: &[TomogramPoint<T>],
    q: &QuadratureSpec,
) -> Result<T> {
    let moved = f.pushed_forward(flow, t)?;
    let mut worst = T::zero();
    for p in probes {
        let lhs = classical_to_tomogram(f, &flow.pull_back(p, t)?, q)?;
        let rhs = classical_to_tomogram(&moved, p, q)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// ∫ ξ^k w(ξ, μ, ν) dξ for a single-particle tomogram.
pub fn tomogram_moment<T: Real, W: TomogramEval<T> + ?Sized>(
    w: &W,
    mu: T,
    nu: T,
    order: i32,
    q: &QuadratureSpec,
) -> Result<T> {
    if w.particle_count() != 1 {
        return Err(TomoError::DimensionMismatch { expected: 1, got: w.particle_count() });
    }
    let s = mu.hypot(nu).to_f64_lossy();
    let reach = 1.5 * q.trunc_l * s;
    let r = T::of(reach);
    let rule = Rule::<T>::composite_legendre(-r, r, (2.0 * reach / s.max(1e-300)).ceil().max(2.0) as usize);
    let mut sum = T::zero();
    for (x, wt) in rule.iter() {
        sum += wt * x.powi(order) * w.eval_at(&TomogramPoint::single(x, mu, nu)?)?;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tomogram::fock_tomogram_modes;

    #[test]
    fn oscillator_pullback_is_rotation() {
        let f = QuadraticFlow::<f64>::oscillator();
        let t = 0.7;
        let p = TomogramPoint::single(0.4, 1.3, -0.2).unwrap();
        let b = f.pull_back(&p, t).unwrap();
        assert!((b.mu[0] - (1.3 * t.cos() + 0.2 * t.sin())).abs() < 1e-15);
        assert!((b.nu[0] - (-0.2 * t.cos() + 1.3 * t.sin())).abs() < 1e-15);
    }

    #[test]
    fn potential_constructor_matches_named_flows() {
        let osc = QuadraticFlow::from_potential(1.0, &[0.0, 0.0, 0.5]).unwrap();
        assert_eq!(osc.matrix(1.1).unwrap(), QuadraticFlow::oscillator().matrix(1.1).unwrap());
        let free = QuadraticFlow::from_potential(1.0, &[]).unwrap();
        assert_eq!(free.matrix(2.0).unwrap(), [[1.0, 2.0], [0.0, 1.0]]);
        assert!(matches!(
            QuadraticFlow::from_potential(1.0, &[0.0, 0.0, 0.5, 0.0, 0.1]),
            Err(TomoError::Unsupported(_))
        ));
    }

    #[test]
    fn affine_shift_matches_equilibrium_and_constant_force() {
        // V = q²/2 − q: equilibrium at q = 1, at t = π the point (0, 0) reaches (2, 0).
        let f = QuadraticFlow::<f64>::from_potential(1.0, &[0.0, -1.0, 0.5]).unwrap();
        let z = f.advance([0.0, 0.0], std::f64::consts::PI).unwrap();
        assert!((z[0] - 2.0).abs() < 1e-14 && z[1].abs() < 1e-14);
        // Constant force F = 2, m = 1: q = t², p = 2t.
        let g = QuadraticFlow::<f64>::from_potential(1.0, &[0.0, -2.0]).unwrap();
        let z = g.advance([0.0, 0.0], 1.5).unwrap();
        assert!((z[0] - 2.25).abs() < 1e-14 && (z[1] - 3.0).abs() < 1e-14);
        let back = g.retreat(z, 1.5).unwrap();
        assert!(back[0].abs() < 1e-14 && back[1].abs() < 1e-14);
    }

    #[test]
    fn ground_state_gaussian_radon_transform() {
        let q = QuadratureSpec::default();
        let f = ClassicalDistribution::new(1, |z: &[f64]| (-z[0] * z[0] - z[1] * z[1]).exp() / std::f64::consts::PI, &q)
            .unwrap();
        assert!(f.is_normalized(1e-10));
        let p = TomogramPoint::single(0.0, 1.0, 0.0).unwrap();
        let v = classical_to_tomogram(&f, &p, &q).unwrap();
        assert!((v - 0.5641895835477563).abs() < 1e-12);
        let p = TomogramPoint::single(0.9, 0.6, -1.4).unwrap();
        let v = classical_to_tomogram(&f, &p, &q).unwrap();
        assert!((v - fock_tomogram_modes(&[0], &p).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn rejects_negative_density() {
        let q = QuadratureSpec::default();
        let r = ClassicalDistribution::new(1, |z: &[f64]| (-z[0] * z[0] - z[1] * z[1]).exp() * z[0], &q);
        assert!(matches!(r, Err(TomoError::Domain(_))));
    }
}
