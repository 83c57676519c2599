//! Numeric forward transform.
//!
//! With ħ = 1 the phase factorizes, (z − z′)(z + z′)/2 = (z² − z′²)/2, so
//! e^{−iα} = g(z) conj(g(z′)) with g(z) = e^{i(μz²/2 − ξz)/ν}. A product of
//! orbitals then transforms into a product of one-dimensional chirp integrals.

use num_complex::Complex;
use rayon::prelude::*;

use super::{TomogramObject, TomogramPoint};
use crate::density::{partial_trace, tensor_product, DensityObject};
use crate::error::{Result, TomoError};
use crate::hermite::fock_wavefunctions_into;
use crate::quadrature::{QuadratureSpec, Rule};
use crate::scalar::Real;

/// True when the ν → 0 limit replaces quadrature for this frame.
pub(crate) fn use_limit<T: Real>(mu: T, nu: T, q: &QuadratureSpec) -> bool {
    nu.abs() < T::of(q.nu_min) * mu.hypot(nu)
}

/// Half-width beyond which φ_0 … φ_nmax are negligible.
fn orbital_extent(nmax: usize, q: &QuadratureSpec) -> f64 {
    q.trunc_l.max(((2 * nmax + 1) as f64).sqrt() + 7.0)
}

/// F_k = ∫ φ_k(z) e^{i(μz²/2 − ξz)/ν} dz for k ≤ nmax.
pub fn chirp_transforms<T: Real>(nmax: usize, xi: T, mu: T, nu: T, q: &QuadratureSpec) -> Result<Vec<Complex<T>>> {
    if nu == T::zero() {
        return Err(TomoError::domain("chirp transform needs nu != 0"));
    }
    let z_max = orbital_extent(nmax, q);
    let freq = (mu.abs().to_f64_lossy() * z_max + xi.abs().to_f64_lossy()) / nu.abs().to_f64_lossy()
        + 2.0 * ((2 * nmax + 1) as f64).sqrt();
    let panels = q.panels_for(2.0 * z_max, freq);
    let rule = Rule::<T>::composite_legendre(T::of(-z_max), T::of(z_max), panels);
    let mut phi = vec![T::zero(); nmax + 1];
    let mut acc = vec![Complex::new(T::zero(), T::zero()); nmax + 1];
    let half = T::of(0.5);
    for (z, w) in rule.iter() {
        fock_wavefunctions_into(z, &mut phi)?;
        let g = Complex::from_polar(w, (half * mu * z * z - xi * z) / nu);
        for (a, &p) in acc.iter_mut().zip(&phi) {
            *a += g * p;
        }
    }
    Ok(acc)
}

/// Amplitudes A_k with transition factor A_a conj(A_b) at one particle's frame.
pub(crate) struct ChirpFrame<T> {
    amp: Vec<Complex<T>>,
}

impl<T: Real> ChirpFrame<T> {
    pub(crate) fn new(nmax: usize, xi: T, mu: T, nu: T, q: &QuadratureSpec) -> Result<Self> {
        if use_limit(mu, nu, q) {
            // w(ξ, μ, 0) = |μ|⁻¹ ρ(ξ/μ, ξ/μ)
            let mut phi = vec![T::zero(); nmax + 1];
            fock_wavefunctions_into(xi / mu, &mut phi)?;
            let s = mu.abs().sqrt();
            return Ok(Self { amp: phi.into_iter().map(|p| Complex::new(p / s, T::zero())).collect() });
        }
        let scale = (T::of(2.0) * T::PI() * nu.abs()).sqrt();
        let amp = chirp_transforms(nmax, xi, mu, nu, q)?.into_iter().map(|f| f / scale).collect();
        Ok(Self { amp })
    }

    pub(crate) fn transition(&self, a: usize, b: usize) -> Complex<T> {
        self.amp[a] * self.amp[b].conj()
    }
}

/// w(p) for a sampled density by direct trapezoid summation over its grid.
pub(crate) fn grid_transform<T: Real>(d: &DensityObject<T>, p: &TomogramPoint<T>, q: &QuadratureSpec) -> Result<Complex<T>> {
    let axis = d.grid_axis().ok_or_else(|| TomoError::Unsupported("grid transform of an analytic density".into()))?;
    let n = d.particle_count();
    let nodes = axis.nodes();
    let count = axis.count;
    let half = T::of(0.5);
    let limit: Vec<bool> = (0..n).map(|j| use_limit(p.mu[j], p.nu[j], q)).collect();
    if limit.iter().any(|&l| l) {
        return grid_transform_with_limits(d, p, q, &limit);
    }
    // a_j(k) = h_k g_j(z_k) / sqrt(2π|ν_j|)
    let amps: Vec<Vec<Complex<T>>> = (0..n)
        .map(|j| {
            let (xi, mu, nu) = p.particle(j);
            let scale = (T::of(2.0) * T::PI() * nu.abs()).sqrt();
            (0..count)
                .map(|k| {
                    let z = nodes[k];
                    Complex::from_polar(axis.weight(k) / scale, (half * mu * z * z - xi * z) / nu)
                })
                .collect()
        })
        .collect();
    let per_particle = count * count;
    let total = per_particle.pow(n as u32);
    let chunks: Vec<Complex<T>> = (0..per_particle)
        .into_par_iter()
        .map(|lead| {
            let mut ket = vec![0usize; n];
            let mut bra = vec![0usize; n];
            let mut scratch = Vec::with_capacity(2 * n);
            let mut acc = Complex::new(T::zero(), T::zero());
            let rest = total / per_particle;
            for r in 0..rest {
                let mut code = lead * rest + r;
                for j in (0..n).rev() {
                    let pair = code % per_particle;
                    code /= per_particle;
                    ket[j] = pair / count;
                    bra[j] = pair % count;
                }
                let mut weight = Complex::new(T::one(), T::zero());
                for j in 0..n {
                    weight = weight * amps[j][ket[j]] * amps[j][bra[j]].conj();
                }
                if let Some(v) = d.grid_node_value(&ket, &bra, &mut scratch) {
                    acc += v * weight;
                }
            }
            acc
        })
        .collect();
    Ok(chunks.into_iter().fold(Complex::new(T::zero(), T::zero()), |a, b| a + b))
}

/// Mixed case: particles in the ν → 0 limit are pinned to z = z′ = ξ/μ.
fn grid_transform_with_limits<T: Real>(
    d: &DensityObject<T>,
    p: &TomogramPoint<T>,
    _q: &QuadratureSpec,
    limit: &[bool],
) -> Result<Complex<T>> {
    let axis = d.grid_axis().expect("grid backing");
    let n = d.particle_count();
    let nodes = axis.nodes();
    let half = T::of(0.5);
    // Per particle: list of (z, z′, weight).
    let mut options: Vec<Vec<(T, T, Complex<T>)>> = Vec::with_capacity(n);
    for j in 0..n {
        let (xi, mu, nu) = p.particle(j);
        if limit[j] {
            options.push(vec![(xi / mu, xi / mu, Complex::new(T::one() / mu.abs(), T::zero()))]);
            continue;
        }
        let scale = T::of(2.0) * T::PI() * nu.abs();
        let g: Vec<Complex<T>> = (0..axis.count)
            .map(|k| Complex::from_polar(axis.weight(k), (half * mu * nodes[k] * nodes[k] - xi * nodes[k]) / nu))
            .collect();
        let mut list = Vec::with_capacity(axis.count * axis.count);
        for a in 0..axis.count {
            for b in 0..axis.count {
                list.push((nodes[a], nodes[b], g[a] * g[b].conj() / scale));
            }
        }
        options.push(list);
    }
    let mut acc = Complex::new(T::zero(), T::zero());
    let sizes: Vec<usize> = options.iter().map(Vec::len).collect();
    let total: usize = sizes.iter().product();
    let mut x = vec![T::zero(); n];
    let mut xp = vec![T::zero(); n];
    for flat in 0..total {
        let mut code = flat;
        let mut weight = Complex::new(T::one(), T::zero());
        for j in (0..n).rev() {
            let (z, zp, w) = options[j][code % sizes[j]];
            code /= sizes[j];
            x[j] = z;
            xp[j] = zp;
            weight = weight * w;
        }
        acc += d.evaluate(&x, &xp)? * weight;
    }
    Ok(acc)
}

/// w(p) by the numeric forward transform of `d`.
pub fn forward_tomogram<T: Real>(d: &DensityObject<T>, p: &TomogramPoint<T>, q: &QuadratureSpec) -> Result<T> {
    TomogramObject::transform(d, q)?.eval(p)
}

/// |w₁₂(p) − w₁(p₁) w₂(p₂)| / max(w₁ w₂, ε) for the tensor product ρ₁ ⊗ ρ₂.
pub fn factorization_check<T: Real>(
    d1: &DensityObject<T>,
    d2: &DensityObject<T>,
    p: &TomogramPoint<T>,
    q: &QuadratureSpec,
) -> Result<T> {
    if d1.particle_count() != 1 || d2.particle_count() != 1 {
        return Err(TomoError::domain("factorization check takes two single-particle densities"));
    }
    factorization_deviation(&tensor_product(d1, d2)?, p, q)
}

/// Same deviation for an arbitrary two-particle density against the product
/// of its one-particle marginals.
pub fn factorization_deviation<T: Real>(d12: &DensityObject<T>, p: &TomogramPoint<T>, q: &QuadratureSpec) -> Result<T> {
    if d12.particle_count() != 2 || p.particle_count() != 2 {
        return Err(TomoError::DimensionMismatch { expected: 2, got: d12.particle_count() });
    }
    let w12 = forward_tomogram(d12, p, q)?;
    let (x1, m1, n1) = p.particle(0);
    let (x2, m2, n2) = p.particle(1);
    let w1 = forward_tomogram(&partial_trace(d12, 0)?, &TomogramPoint::single(x1, m1, n1)?, q)?;
    let w2 = forward_tomogram(&partial_trace(d12, 1)?, &TomogramPoint::single(x2, m2, n2)?, q)?;
    let prod = w1 * w2;
    Ok((w12 - prod).abs() / prod.abs().max(T::of(1e-12)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{pure_density, GridAxis};
    use crate::hermite::ProductState;
    use crate::tomogram::fock_tomogram_modes;

    #[test]
    fn ground_state_momentum_value() {
        let d = pure_density(&ProductState::<f64>::fock(&[0]).unwrap());
        let q = QuadratureSpec::default();
        let w = forward_tomogram(&d, &TomogramPoint::single(0.0, 0.0, 1.0).unwrap(), &q).unwrap();
        assert!((w - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn chirp_matches_closed_form_with_negative_nu() {
        let q = QuadratureSpec::default();
        let s = ProductState::<f64>::superposition([
            (Complex::new(0.6, 0.0), vec![0]),
            (Complex::new(0.0, 0.8), vec![2]),
        ])
        .unwrap();
        let d = pure_density(&s);
        let numeric = TomogramObject::transform(&d, &q).unwrap();
        let exact = TomogramObject::analytic(&d).unwrap();
        for &(x, m, n) in &[(0.3, 0.7, -0.4), (-1.2, -0.2, 1.3), (0.9, 1.0, 0.15)] {
            let p = TomogramPoint::single(x, m, n).unwrap();
            let a = numeric.eval(&p).unwrap();
            let b = exact.eval(&p).unwrap();
            assert!((a - b).abs() < 1e-10 * b.abs().max(1e-3), "{a} {b}");
        }
    }

    #[test]
    fn limit_path_matches_position_density() {
        let q = QuadratureSpec::default();
        let d = pure_density(&ProductState::<f64>::fock(&[1]).unwrap());
        let p = TomogramPoint::single(0.8, 2.0, 1e-5).unwrap();
        let w = forward_tomogram(&d, &p, &q).unwrap();
        let exact = fock_tomogram_modes(&[1], &p).unwrap();
        assert!((w - exact).abs() < 1e-8);
    }

    #[test]
    fn grid_transform_of_ground_state() {
        let q = QuadratureSpec::default();
        let d = pure_density(&ProductState::<f64>::fock(&[0]).unwrap());
        let g = d.sample_on_grid(GridAxis::symmetric(8.0, 0.05).unwrap()).unwrap();
        for &(x, m, n) in &[(0.0, 0.0, 1.0), (0.5, 1.0, 1.0), (0.3, 1.0, 0.0)] {
            let p = TomogramPoint::single(x, m, n).unwrap();
            let a = forward_tomogram(&g, &p, &q).unwrap();
            let b = fock_tomogram_modes(&[0], &p).unwrap();
            assert!((a - b).abs() < 1e-6, "{a} {b}");
        }
    }
}
