//! Density matrices ρ(x₁…x_N; x′₁…x′_N), analytic or sampled on a uniform grid.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Result, TomoError};
use crate::hermite::{mode_table, ProductState};
use crate::permutation::Permutation;
use crate::scalar::Real;

/// `coeff · Π_i φ_{ket[i]}(x_i) φ_{bra[i]}(x′_i)`; orbitals are real so the bra
/// conjugation lives entirely in `coeff`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTerm<T> {
    pub coeff: Complex<T>,
    pub ket: Vec<usize>,
    pub bra: Vec<usize>,
}

/// Uniform axis `lo + k·h`, `k < count`, shared by every grid dimension.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis<T> {
    pub lo: T,
    pub h: T,
    pub count: usize,
}

impl<T: Real> GridAxis<T> {
    /// Symmetric axis covering [-half_width, half_width] with spacing close to `h`.
    pub fn symmetric(half_width: T, h: T) -> Result<Self> {
        if !(half_width > T::zero() && h > T::zero()) {
            return Err(TomoError::domain("grid half-width and spacing must be positive"));
        }
        let steps = (T::of(2.0) * half_width / h).round().to_usize().unwrap_or(0).max(1);
        Ok(Self { lo: -half_width, h: T::of(2.0) * half_width / T::of_usize(steps), count: steps + 1 })
    }

    pub fn node(&self, k: usize) -> T {
        self.lo + self.h * T::of_usize(k)
    }

    pub fn hi(&self) -> T {
        self.node(self.count - 1)
    }

    pub fn nodes(&self) -> Vec<T> {
        (0..self.count).map(|k| self.node(k)).collect()
    }

    /// Cell index and fractional offset for linear interpolation.
    pub(crate) fn locate(&self, x: T) -> Option<(usize, T)> {
        let eps = self.h * T::of(1e-9);
        if x < self.lo - eps || x > self.hi() + eps {
            return None;
        }
        let pos = ((x - self.lo) / self.h).max(T::zero());
        let cell = pos.floor().to_usize().unwrap_or(0).min(self.count - 2);
        Some((cell, (pos - T::of_usize(cell)).min(T::one())))
    }

    /// Trapezoid weight of node `k`.
    pub(crate) fn weight(&self, k: usize) -> T {
        if k == 0 || k + 1 == self.count {
            self.h / T::of(2.0)
        } else {
            self.h
        }
    }
}

/// Samples of an N-particle density on `axis^{2N}`, ordered (x₁…x_N, x′₁…x′_N)
/// in row-major order (last coordinate fastest).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSamples<T> {
    pub particle_count: usize,
    pub axis: GridAxis<T>,
    pub values: Vec<Complex<T>>,
}

impl<T: Real> GridSamples<T> {
    pub fn len_for(particle_count: usize, count: usize) -> usize {
        count.pow(2 * particle_count as u32)
    }

    pub(crate) fn index(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &k| acc * self.axis.count + k)
    }
}

/// One signed, permuted view of a shared sample grid:
/// `coeff · ρ_grid(P_ket x; P_bra x′)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridComponent<T> {
    pub coeff: Complex<T>,
    pub ket: Permutation,
    pub bra: Permutation,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DensityBacking<T> {
    Analytic(Vec<DensityTerm<T>>),
    Grid { samples: Arc<GridSamples<T>>, components: Vec<GridComponent<T>> },
}

/// Largest grid the sampler will allocate (complex entries).
pub const MAX_GRID_SAMPLES: usize = 60_000_000;

/// A density matrix of `particle_count` one-dimensional particles.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityObject<T> {
    particle_count: usize,
    backing: DensityBacking<T>,
}

impl<T: Real> DensityObject<T> {
    pub fn analytic(particle_count: usize, terms: Vec<DensityTerm<T>>) -> Result<Self> {
        if particle_count == 0 {
            return Err(TomoError::domain("density needs at least one particle"));
        }
        for t in &terms {
            if t.ket.len() != particle_count || t.bra.len() != particle_count {
                return Err(TomoError::DimensionMismatch { expected: particle_count, got: t.ket.len().max(t.bra.len()) });
            }
        }
        Ok(Self { particle_count, backing: DensityBacking::Analytic(merge_terms(terms)) })
    }

    pub fn from_grid(samples: GridSamples<T>) -> Result<Self> {
        let n = samples.particle_count;
        if samples.axis.count < 2 {
            return Err(TomoError::domain("grid axis needs at least two nodes"));
        }
        if samples.values.len() != GridSamples::<T>::len_for(n, samples.axis.count) {
            return Err(TomoError::DimensionMismatch {
                expected: GridSamples::<T>::len_for(n, samples.axis.count),
                got: samples.values.len(),
            });
        }
        let components = vec![GridComponent {
            coeff: Complex::new(T::one(), T::zero()),
            ket: Permutation::identity(n),
            bra: Permutation::identity(n),
        }];
        Ok(Self { particle_count: n, backing: DensityBacking::Grid { samples: Arc::new(samples), components } })
    }

    pub(crate) fn from_backing(particle_count: usize, backing: DensityBacking<T>) -> Self {
        let backing = match backing {
            DensityBacking::Analytic(terms) => DensityBacking::Analytic(merge_terms(terms)),
            grid => grid,
        };
        Self { particle_count, backing }
    }

    pub fn particle_count(&self) -> usize {
        self.particle_count
    }

    pub fn backing(&self) -> &DensityBacking<T> {
        &self.backing
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.backing, DensityBacking::Analytic(_))
    }

    pub fn analytic_terms(&self) -> Option<&[DensityTerm<T>]> {
        match &self.backing {
            DensityBacking::Analytic(t) => Some(t),
            DensityBacking::Grid { .. } => None,
        }
    }

    fn check_dims(&self, x: &[T], xp: &[T]) -> Result<()> {
        for len in [x.len(), xp.len()] {
            if len != self.particle_count {
                return Err(TomoError::DimensionMismatch { expected: self.particle_count, got: len });
            }
        }
        Ok(())
    }

    /// Multiplies every coefficient by `factor`.
    pub fn scaled(&self, factor: Complex<T>) -> Self {
        let backing = match &self.backing {
            DensityBacking::Analytic(terms) => DensityBacking::Analytic(
                terms.iter().map(|t| DensityTerm { coeff: t.coeff * factor, ..t.clone() }).collect(),
            ),
            DensityBacking::Grid { samples, components } => DensityBacking::Grid {
                samples: samples.clone(),
                components: components.iter().map(|c| GridComponent { coeff: c.coeff * factor, ..c.clone() }).collect(),
            },
        };
        Self::from_backing(self.particle_count, backing)
    }

    /// Exact trace for analytic backing (orthonormal orbitals), trapezoid
    /// rule on the diagonal for grid backing.
    pub fn trace(&self) -> Result<Complex<T>> {
        match &self.backing {
            DensityBacking::Analytic(terms) => Ok(terms
                .iter()
                .filter(|t| t.ket == t.bra)
                .fold(Complex::new(T::zero(), T::zero()), |a, t| a + t.coeff)),
            DensityBacking::Grid { samples, .. } => {
                let n = self.particle_count;
                let count = samples.axis.count;
                let mut acc = Complex::new(T::zero(), T::zero());
                let total = count.pow(n as u32);
                let mut idx = vec![0usize; n];
                for flat in 0..total {
                    let mut r = flat;
                    for slot in idx.iter_mut().rev() {
                        *slot = r % count;
                        r /= count;
                    }
                    let x: Vec<T> = idx.iter().map(|&k| samples.axis.node(k)).collect();
                    let w = idx.iter().fold(T::one(), |a, &k| a * samples.axis.weight(k));
                    acc += self.evaluate(&x, &x)? * w;
                }
                Ok(acc)
            }
        }
    }

    /// ρ(x; x′). Analytic backing is exact; grid backing interpolates multilinearly.
    pub fn evaluate(&self, x: &[T], xp: &[T]) -> Result<Complex<T>> {
        self.check_dims(x, xp)?;
        match &self.backing {
            DensityBacking::Analytic(terms) => {
                let nmax = terms.iter().flat_map(|t| t.ket.iter().chain(&t.bra)).copied().max().unwrap_or(0);
                let kt = mode_table(nmax, x)?;
                let bt = mode_table(nmax, xp)?;
                Ok(terms.iter().fold(Complex::new(T::zero(), T::zero()), |acc, t| {
                    let mut p = T::one();
                    for i in 0..self.particle_count {
                        p = p * kt[i][t.ket[i]] * bt[i][t.bra[i]];
                    }
                    acc + t.coeff * p
                }))
            }
            DensityBacking::Grid { samples, components } => {
                let mut acc = Complex::new(T::zero(), T::zero());
                for c in components {
                    let px = c.ket.apply(x);
                    let pxp = c.bra.apply(xp);
                    acc += c.coeff * interpolate(samples, &px, &pxp)?;
                }
                Ok(acc)
            }
        }
    }

    /// Samples this density on `axis^{2N}`, keeping its particle count.
    pub fn sample_on_grid(&self, axis: GridAxis<T>) -> Result<Self> {
        let n = self.particle_count;
        let len = GridSamples::<T>::len_for(n, axis.count);
        if len > MAX_GRID_SAMPLES {
            return Err(TomoError::CostExceeded(format!(
                "{len} grid samples for N = {n}, axis count {} (limit {MAX_GRID_SAMPLES})",
                axis.count
            )));
        }
        let nodes = axis.nodes();
        let values = match &self.backing {
            DensityBacking::Analytic(terms) => {
                let nmax = terms.iter().flat_map(|t| t.ket.iter().chain(&t.bra)).copied().max().unwrap_or(0);
                // phi[k][node]
                let table: Vec<Vec<T>> = mode_table(nmax, &nodes)?;
                let mut values = vec![Complex::new(T::zero(), T::zero()); len];
                let dims = 2 * n;
                let mut idx = vec![0usize; dims];
                for (flat, slot) in values.iter_mut().enumerate() {
                    let mut r = flat;
                    for d in idx.iter_mut().rev() {
                        *d = r % axis.count;
                        r /= axis.count;
                    }
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for t in terms {
                        let mut p = T::one();
                        for i in 0..n {
                            p = p * table[idx[i]][t.ket[i]] * table[idx[n + i]][t.bra[i]];
                        }
                        acc += t.coeff * p;
                    }
                    *slot = acc;
                }
                values
            }
            DensityBacking::Grid { .. } => {
                let mut values = Vec::with_capacity(len);
                let dims = 2 * n;
                let mut idx = vec![0usize; dims];
                for flat in 0..len {
                    let mut r = flat;
                    for d in idx.iter_mut().rev() {
                        *d = r % axis.count;
                        r /= axis.count;
                    }
                    let x: Vec<T> = idx[..n].iter().map(|&k| nodes[k]).collect();
                    let xp: Vec<T> = idx[n..].iter().map(|&k| nodes[k]).collect();
                    values.push(self.evaluate(&x, &xp)?);
                }
                values
            }
        };
        Self::from_grid(GridSamples { particle_count: n, axis, values })
    }
}

impl<T: Real> DensityObject<T> {
    /// ρ at grid nodes (indices into the sampling axis), summed over the
    /// permuted components without interpolation. `None` for analytic backings.
    pub(crate) fn grid_node_value(&self, ket_idx: &[usize], bra_idx: &[usize], scratch: &mut Vec<usize>) -> Option<Complex<T>> {
        let DensityBacking::Grid { samples, components } = &self.backing else {
            return None;
        };
        let n = self.particle_count;
        let mut acc = Complex::new(T::zero(), T::zero());
        for c in components {
            scratch.clear();
            scratch.extend(c.ket.as_slice().iter().map(|&k| ket_idx[k]));
            scratch.extend(c.bra.as_slice().iter().map(|&k| bra_idx[k]));
            debug_assert_eq!(scratch.len(), 2 * n);
            acc += c.coeff * samples.values[samples.index(scratch)];
        }
        Some(acc)
    }

    /// The sampling axis of a grid backing.
    pub fn grid_axis(&self) -> Option<GridAxis<T>> {
        match &self.backing {
            DensityBacking::Grid { samples, .. } => Some(samples.axis),
            DensityBacking::Analytic(_) => None,
        }
    }
}

/// ρ₁ ⊗ ρ₂ of two analytic densities.
pub fn tensor_product<T: Real>(a: &DensityObject<T>, b: &DensityObject<T>) -> Result<DensityObject<T>> {
    let (Some(ta), Some(tb)) = (a.analytic_terms(), b.analytic_terms()) else {
        return Err(TomoError::Unsupported("tensor products need analytic densities".into()));
    };
    let mut terms = Vec::with_capacity(ta.len() * tb.len());
    for x in ta {
        for y in tb {
            terms.push(DensityTerm {
                coeff: x.coeff * y.coeff,
                ket: x.ket.iter().chain(&y.ket).copied().collect(),
                bra: x.bra.iter().chain(&y.bra).copied().collect(),
            });
        }
    }
    DensityObject::analytic(a.particle_count() + b.particle_count(), terms)
}

/// Traces out every particle except `keep` (analytic densities).
pub fn partial_trace<T: Real>(d: &DensityObject<T>, keep: usize) -> Result<DensityObject<T>> {
    let terms = d
        .analytic_terms()
        .ok_or_else(|| TomoError::Unsupported("partial traces need an analytic density".into()))?;
    if keep >= d.particle_count() {
        return Err(TomoError::DimensionMismatch { expected: d.particle_count(), got: keep + 1 });
    }
    let reduced = terms
        .iter()
        .filter(|t| (0..t.ket.len()).all(|i| i == keep || t.ket[i] == t.bra[i]))
        .map(|t| DensityTerm { coeff: t.coeff, ket: vec![t.ket[keep]], bra: vec![t.bra[keep]] })
        .collect();
    DensityObject::analytic(1, reduced)
}

fn interpolate<T: Real>(samples: &GridSamples<T>, x: &[T], xp: &[T]) -> Result<Complex<T>> {
    let coords: Vec<T> = x.iter().chain(xp).copied().collect();
    let mut cells = Vec::with_capacity(coords.len());
    for &c in &coords {
        let loc = samples.axis.locate(c).ok_or_else(|| {
            TomoError::domain(format!(
                "point {c} outside grid domain [{}, {}]",
                samples.axis.lo,
                samples.axis.hi()
            ))
        })?;
        cells.push(loc);
    }
    let dims = coords.len();
    let mut acc = Complex::new(T::zero(), T::zero());
    let mut idx = vec![0usize; dims];
    for corner in 0..(1usize << dims) {
        let mut w = T::one();
        for (d, &(cell, frac)) in cells.iter().enumerate() {
            let up = (corner >> (dims - 1 - d)) & 1 == 1;
            idx[d] = cell + usize::from(up);
            w = w * if up { frac } else { T::one() - frac };
        }
        if w != T::zero() {
            acc += samples.values[samples.index(&idx)] * w;
        }
    }
    Ok(acc)
}

/// Combines terms with identical orbital lists and drops exact zeros, in a
/// deterministic order.
fn merge_terms<T: Real>(terms: Vec<DensityTerm<T>>) -> Vec<DensityTerm<T>> {
    let mut map: BTreeMap<(Vec<usize>, Vec<usize>), Complex<T>> = BTreeMap::new();
    for t in terms {
        *map.entry((t.ket, t.bra)).or_insert_with(|| Complex::new(T::zero(), T::zero())) += t.coeff;
    }
    map.into_iter()
        .filter(|(_, c)| c.re != T::zero() || c.im != T::zero())
        .map(|((ket, bra), coeff)| DensityTerm { coeff, ket, bra })
        .collect()
}

/// ρ = |ψ⟩⟨ψ| as an analytic density.
pub fn pure_density<T: Real>(state: &ProductState<T>) -> DensityObject<T> {
    let mut terms = Vec::with_capacity(state.terms().len().pow(2));
    for a in state.terms() {
        for b in state.terms() {
            terms.push(DensityTerm { coeff: a.coeff * b.coeff.conj(), ket: a.modes.clone(), bra: b.modes.clone() });
        }
    }
    DensityObject::from_backing(state.particle_count(), DensityBacking::Analytic(terms))
}

/// `ρ(x; x′)`, see [`DensityObject::evaluate`].
pub fn evaluate_density<T: Real>(d: &DensityObject<T>, x: &[T], xp: &[T]) -> Result<Complex<T>> {
    d.evaluate(x, xp)
}

/// `∫ ρ(x; x) dᴺx` with a tensor Gauss–Hermite rule, independent of the
/// orthonormality shortcut used by [`DensityObject::trace`].
pub fn trace_by_quadrature<T: Real>(d: &DensityObject<T>, gh_nodes: usize) -> Result<Complex<T>> {
    let rule = crate::quadrature::Rule::<T>::gauss_hermite(gh_nodes);
    let n = d.particle_count();
    let m = rule.len();
    let mut acc = Complex::new(T::zero(), T::zero());
    let mut idx = vec![0usize; n];
    for flat in 0..m.pow(n as u32) {
        let mut r = flat;
        for slot in idx.iter_mut().rev() {
            *slot = r % m;
            r /= m;
        }
        let x: Vec<T> = idx.iter().map(|&k| rule.nodes[k]).collect();
        let w = idx.iter().fold(T::one(), |a, &k| a * rule.weights[k] * (rule.nodes[k] * rule.nodes[k]).exp());
        acc += d.evaluate(&x, &x)? * w;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn ground() -> ProductState<f64> {
        ProductState::fock(&[0]).unwrap()
    }

    #[test]
    fn pure_density_values() {
        let d = pure_density(&ProductState::<f64>::fock(&[0, 1]).unwrap());
        assert_eq!(d.evaluate(&[0.0, 0.0], &[0.0, 0.0]).unwrap().norm(), 0.0);
        let g = pure_density(&ground());
        assert_relative_eq!(g.evaluate(&[0.0], &[0.0]).unwrap().re, 0.5641895835477563, max_relative = 1e-14);
        assert_relative_eq!(g.evaluate(&[1.0], &[0.0]).unwrap().re, 0.34219828031221655, max_relative = 1e-14);
    }

    #[test]
    fn hermiticity_of_complex_superposition() {
        let s = ProductState::<f64>::superposition([
            (Complex::new(0.6, 0.0), vec![0, 2]),
            (Complex::new(0.0, 0.8), vec![1, 0]),
        ])
        .unwrap();
        let d = pure_density(&s);
        let (x, xp) = ([0.3, -1.1], [0.7, 0.2]);
        let a = d.evaluate(&x, &xp).unwrap();
        let b = d.evaluate(&xp, &x).unwrap();
        assert!((a - b.conj()).norm() < 1e-15);
        assert!(d.evaluate(&x, &x).unwrap().re >= -1e-12);
    }

    #[test]
    fn traces_agree() {
        let s = ProductState::<f64>::superposition([
            (Complex::new(0.6, 0.0), vec![0, 2]),
            (Complex::new(0.0, 0.8), vec![1, 0]),
        ])
        .unwrap();
        let d = pure_density(&s);
        assert_relative_eq!(d.trace().unwrap().re, 1.0, max_relative = 1e-14);
        assert_relative_eq!(trace_by_quadrature(&d, 64).unwrap().re, 1.0, max_relative = 1e-10);
    }

    #[test]
    fn grid_interpolation_matches_analytic_single_particle() {
        let d = pure_density(&ProductState::<f64>::fock(&[1]).unwrap());
        let axis = GridAxis::symmetric(8.0, 0.05).unwrap();
        let g = d.sample_on_grid(axis).unwrap();
        assert_relative_eq!(g.trace().unwrap().re, 1.0, max_relative = 1e-10);
        let a = d.evaluate(&[0.4321], &[-1.234]).unwrap();
        let b = g.evaluate(&[0.4321], &[-1.234]).unwrap();
        assert!((a - b).norm() < 1e-3);
        assert!(matches!(g.evaluate(&[9.0], &[0.0]), Err(TomoError::Domain(_))));
    }

    #[test]
    fn oversized_grid_is_rejected() {
        let d = pure_density(&ProductState::<f64>::fock(&[0, 1]).unwrap());
        let axis = GridAxis::symmetric(8.0, 0.05).unwrap();
        assert!(matches!(d.sample_on_grid(axis), Err(TomoError::CostExceeded(_))));
    }
}
