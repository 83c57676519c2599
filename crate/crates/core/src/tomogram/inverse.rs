//! Inverse transform
//! ρ(x; x′) = Π_i (2π)⁻¹ ∫ dμ_i dY_i w(Y, μ, x − x′) e^{i(Y_i − μ_i (x_i + x′_i)/2)}.
//!
//! For a sum-of-products tomogram every term inverts particle by particle.
//! Per particle and relative coordinate v the inner transform
//! G(μ, v) = ∫ dY w(Y, μ, v) e^{iY} is computed once on the μ rule and reused
//! for every centre coordinate u.

use std::collections::HashMap;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;

use super::{factor_values, ModeFactor, SeparableTerm, TomogramObject};
use crate::error::{Result, TomoError};
use crate::hermite::fock_wavefunctions_into;
use crate::quadrature::{QuadratureSpec, Rule, PANEL_ORDER};
use crate::scalar::Real;

/// Reconstructed values plus the Hermiticity residual max |ρ(x;x′) − conj ρ(x′;x)|.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseReport<T> {
    pub values: Vec<Complex<T>>,
    pub hermiticity_residual: T,
}

type FactorTable<T> = Arc<Vec<Vec<Complex<T>>>>;

/// Cached inverse transform of one tomogram.
pub struct InverseEngine<T: Real> {
    particle_count: usize,
    terms: Vec<SeparableTerm<T>>,
    unique: Vec<Vec<ModeFactor<T>>>,
    term_index: Vec<Vec<usize>>,
    mu_rule: Rule<T>,
    quad: QuadratureSpec,
    g_cache: HashMap<(usize, u64), FactorTable<T>>,
    r_cache: HashMap<(usize, u64, u64), Vec<Complex<T>>>,
}

fn key<T: Real>(x: T) -> u64 {
    x.to_f64_lossy().to_bits()
}

impl<T: Real> InverseEngine<T> {
    pub fn new(w: &TomogramObject<T>, q: &QuadratureSpec) -> Result<Self> {
        q.validate()?;
        let terms = w.separable_terms().ok_or_else(|| {
            TomoError::Unsupported(
                "inverse transform needs a sum-of-products or grid tomogram; a sampled multi-particle density is not separable"
                    .into(),
            )
        })?;
        if terms.iter().flat_map(|t| &t.factors).any(|f| matches!(f, ModeFactor::Chirp { .. })) {
            return Err(TomoError::Unsupported(
                "numeric chirp factors are evaluated per point; tabulate them into a grid tomogram before inverting".into(),
            ));
        }
        let n = w.particle_count();
        let mut unique: Vec<Vec<ModeFactor<T>>> = vec![Vec::new(); n];
        let mut term_index = Vec::with_capacity(terms.len());
        for t in &terms {
            let mut idx = Vec::with_capacity(n);
            for (j, f) in t.factors.iter().enumerate() {
                let pos = match unique[j].iter().position(|u| u.same_as(f)) {
                    Some(p) => p,
                    None => {
                        unique[j].push(f.clone());
                        unique[j].len() - 1
                    }
                };
                idx.push(pos);
            }
            term_index.push(idx);
        }
        let window = T::of(q.mu_window);
        let mu_rule = Rule::composite_legendre(-window, window, (q.mu_nodes / PANEL_ORDER).max(1));
        Ok(Self {
            particle_count: n,
            terms,
            unique,
            term_index,
            mu_rule,
            quad: q.clone(),
            g_cache: HashMap::new(),
            r_cache: HashMap::new(),
        })
    }

    fn extent_and_wavenumber(&self, j: usize) -> (f64, f64) {
        let mut extent = 0.0f64;
        let mut kappa = 0.0f64;
        for f in &self.unique[j] {
            match f {
                ModeFactor::Fock { ket, bra } | ModeFactor::Chirp { ket, bra } => {
                    let root = ((2 * ket.max(bra) + 1) as f64).sqrt();
                    extent = extent.max(self.quad.trunc_l.max(root + 7.0));
                    kappa = kappa.max(2.0 * root);
                }
                ModeFactor::Grid(g) => {
                    extent = extent.max(self.quad.trunc_l.min(g.xi_max().to_f64_lossy()));
                    kappa = kappa.max(std::f64::consts::PI / g.xi_step.to_f64_lossy());
                }
            }
        }
        (extent, kappa)
    }

    /// G_f(μ_k, v) for every distinct factor of particle `j`.
    fn g_table(&mut self, j: usize, v: T) -> Result<FactorTable<T>> {
        if let Some(t) = self.g_cache.get(&(j, key(v))) {
            return Ok(t.clone());
        }
        let (extent, kappa) = self.extent_and_wavenumber(j);
        let factors = &self.unique[j];
        let q = &self.quad;
        let all_fock = factors.iter().all(|f| matches!(f, ModeFactor::Fock { .. }));
        let nmax = factors.iter().filter_map(|f| f.modes()).map(|(a, b)| a.max(b)).max().unwrap_or(0);
        let rows: Result<Vec<Vec<Complex<T>>>> = self
            .mu_rule
            .nodes
            .par_iter()
            .map(|&mu| {
                let s = mu.hypot(v);
                let (mh, vh) = (mu / s, v / s);
                let sf = s.to_f64_lossy();
                let wanted = (q.nodes_per_period as f64 * 2.0 * extent * (sf + kappa) / (2.0 * std::f64::consts::PI)).ceil();
                let count = (wanted as usize).max(64).min(q.y_nodes.max(64));
                let rule = Rule::<T>::composite_legendre(T::of(-extent), T::of(extent), count.div_ceil(PANEL_ORDER));
                let mut acc = vec![Complex::new(T::zero(), T::zero()); factors.len()];
                if all_fock {
                    let theta = vh.atan2(mh);
                    let phases: Vec<Complex<T>> = factors
                        .iter()
                        .map(|f| {
                            let (a, b) = f.modes().expect("fock factor");
                            Complex::from_polar(T::one(), -T::of(a as f64 - b as f64) * theta)
                        })
                        .collect();
                    let mut phi = vec![T::zero(); nmax + 1];
                    for (y, w) in rule.iter() {
                        fock_wavefunctions_into(y, &mut phi)?;
                        let e = Complex::from_polar(w, s * y);
                        for ((a, f), ph) in acc.iter_mut().zip(factors).zip(&phases) {
                            let (ka, kb) = f.modes().expect("fock factor");
                            *a += e * *ph * (phi[ka] * phi[kb]);
                        }
                    }
                } else {
                    for (y, w) in rule.iter() {
                        let vals = factor_values(factors, y, mh, vh, T::zero(), q)?;
                        let e = Complex::from_polar(w, s * y);
                        for (a, f) in acc.iter_mut().zip(vals) {
                            *a += e * f;
                        }
                    }
                }
                Ok(acc)
            })
            .collect();
        let table = Arc::new(rows?);
        self.g_cache.insert((j, key(v)), table.clone());
        Ok(table)
    }

    /// Per-factor one-particle reconstructions at (x, x′).
    fn reduced(&mut self, j: usize, x: T, xp: T) -> Result<Vec<Complex<T>>> {
        if let Some(r) = self.r_cache.get(&(j, key(x), key(xp))) {
            return Ok(r.clone());
        }
        let v = x - xp;
        let u = (x + xp) / T::of(2.0);
        let table = self.g_table(j, v)?;
        let mut out = vec![Complex::new(T::zero(), T::zero()); self.unique[j].len()];
        for ((&mu, &w), row) in self.mu_rule.nodes.iter().zip(&self.mu_rule.weights).zip(table.iter()) {
            let e = Complex::from_polar(w, -mu * u);
            for (o, g) in out.iter_mut().zip(row) {
                *o += e * *g;
            }
        }
        let norm = T::one() / (T::of(2.0) * T::PI());
        for o in &mut out {
            *o = *o * norm;
        }
        self.r_cache.insert((j, key(x), key(xp)), out.clone());
        Ok(out)
    }

    /// ρ(x; x′) without the Hermiticity check.
    pub fn density_unchecked(&mut self, x: &[T], xp: &[T]) -> Result<Complex<T>> {
        let n = self.particle_count;
        for len in [x.len(), xp.len()] {
            if len != n {
                return Err(TomoError::DimensionMismatch { expected: n, got: len });
            }
        }
        let reduced: Vec<Vec<Complex<T>>> = (0..n).map(|j| self.reduced(j, x[j], xp[j])).collect::<Result<_>>()?;
        let mut acc = Complex::new(T::zero(), T::zero());
        for (t, idx) in self.terms.iter().zip(&self.term_index) {
            let mut prod = t.coeff;
            for (j, &k) in idx.iter().enumerate() {
                prod = prod * reduced[j][k];
            }
            acc += prod;
        }
        Ok(acc)
    }

    /// ρ at every (x, x′) pair, with the Hermiticity residual over the batch.
    pub fn batch(&mut self, pairs: &[(Vec<T>, Vec<T>)]) -> Result<InverseReport<T>> {
        let mut values = Vec::with_capacity(pairs.len());
        let mut residual = T::zero();
        for (x, xp) in pairs {
            let a = self.density_unchecked(x, xp)?;
            let b = self.density_unchecked(xp, x)?;
            residual = residual.max((a - b.conj()).norm());
            values.push(a);
        }
        if !(residual <= T::of(self.quad.hermiticity_tol)) {
            return Err(TomoError::numeric(
                "inverse_density",
                format!("Hermiticity residual {residual} exceeds {}", self.quad.hermiticity_tol),
            ));
        }
        Ok(InverseReport { values, hermiticity_residual: residual })
    }
}

/// ρ(x; x′) reconstructed from a tomogram.
pub fn inverse_density<T: Real>(w: &TomogramObject<T>, x: &[T], xp: &[T], q: &QuadratureSpec) -> Result<Complex<T>> {
    let mut engine = InverseEngine::new(w, q)?;
    Ok(engine.batch(&[(x.to_vec(), xp.to_vec())])?.values[0])
}

/// ρ at many points, sharing all intermediate transforms.
pub fn inverse_density_batch<T: Real>(
    w: &TomogramObject<T>,
    pairs: &[(Vec<T>, Vec<T>)],
    q: &QuadratureSpec,
) -> Result<InverseReport<T>> {
    InverseEngine::new(w, q)?.batch(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::pure_density;
    use crate::hermite::{fock_wavefunction, ProductState};
    use crate::tomogram::GridTomogram;

    #[test]
    fn ground_state_diagonal() {
        let w = TomogramObject::from_state(&ProductState::<f64>::fock(&[0]).unwrap()).unwrap();
        let rho = inverse_density(&w, &[0.0], &[0.0], &QuadratureSpec::default()).unwrap();
        assert!((rho.re - 1.0 / std::f64::consts::PI.sqrt()).abs() < 1e-8, "{rho}");
    }

    #[test]
    fn transition_factor_orientation() {
        // Off-diagonal term alone must invert to φ_0(x) φ_1(x′).
        let w = TomogramObject::separable(
            1,
            vec![SeparableTerm { coeff: Complex::new(1.0, 0.0), factors: vec![ModeFactor::Fock { ket: 0, bra: 1 }] }],
        )
        .unwrap();
        let mut e = InverseEngine::new(&w, &QuadratureSpec::default()).unwrap();
        for &(x, xp) in &[(0.3, -0.7), (1.1, 0.4)] {
            let got = e.density_unchecked(&[x], &[xp]).unwrap();
            let want = fock_wavefunction(0, x).unwrap() * fock_wavefunction(1, xp).unwrap();
            assert!((got - Complex::new(want, 0.0)).norm() < 1e-8, "{got} {want}");
        }
    }

    #[test]
    fn grid_backed_inverse() {
        let d = pure_density(&ProductState::<f64>::fock(&[1]).unwrap());
        let exact = TomogramObject::analytic(&d).unwrap();
        let g = GridTomogram::tabulate(256, 321, 8.0, |x, m, n| {
            exact.eval(&crate::tomogram::TomogramPoint::single(x, m, n)?)
        })
        .unwrap();
        let w = TomogramObject::from_grid(g);
        let rep = inverse_density_batch(&w, &[(vec![0.5], vec![0.5]), (vec![0.5], vec![-1.0])], &QuadratureSpec::default()).unwrap();
        for (v, (x, xp)) in rep.values.iter().zip([(0.5, 0.5), (0.5, -1.0)]) {
            let want = fock_wavefunction(1, x).unwrap() * fock_wavefunction(1, xp).unwrap();
            assert!((v.re - want).abs() < 2e-3, "{v} {want}");
        }
    }
}
