//! Permutation group action on density matrices: the four-element group
//! G̃ = G ⊗ G for two particles, its projectors, and N-particle symmetrizers.

use std::fmt;

use itertools::Itertools;
use num_complex::Complex;

use crate::density::{DensityBacking, DensityObject, DensityTerm, GridComponent};
use crate::error::{Result, TomoError};
use crate::scalar::Real;

/// A permutation σ of {0, …, N−1} acting on coordinate lists by
/// `(σ·x)_i = x_{σ(i)}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation(Vec<usize>);

impl Permutation {
    pub fn new(map: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; map.len()];
        for &k in &map {
            if k >= map.len() || std::mem::replace(&mut seen[k], true) {
                return Err(TomoError::domain(format!("{map:?} is not a permutation")));
            }
        }
        Ok(Self(map))
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// The transposition of slots `i` and `j`.
    pub fn swap(n: usize, i: usize, j: usize) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        map.swap(i, j);
        Self(map)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// All permutations of N symbols in lexicographic order.
    pub fn all(n: usize) -> Vec<Self> {
        (0..n).permutations(n).map(Self).collect()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &k)| i == k)
    }

    /// `self ∘ other`, i.e. `i ↦ self(other(i))`.
    pub fn compose(&self, other: &Self) -> Self {
        Self(other.0.iter().map(|&k| self.0[k]).collect())
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.0.len()];
        for (i, &k) in self.0.iter().enumerate() {
            inv[k] = i;
        }
        Self(inv)
    }

    /// +1 for even, −1 for odd permutations (from the cycle decomposition).
    pub fn parity(&self) -> i32 {
        let mut seen = vec![false; self.0.len()];
        let mut transpositions = 0;
        for start in 0..self.0.len() {
            let mut len = 0;
            let mut k = start;
            while !seen[k] {
                seen[k] = true;
                k = self.0[k];
                len += 1;
            }
            if len > 0 {
                transpositions += len - 1;
            }
        }
        if transpositions % 2 == 0 {
            1
        } else {
            -1
        }
    }

    /// `(σ·x)_i = x_{σ(i)}`.
    pub fn apply<T: Copy>(&self, x: &[T]) -> Vec<T> {
        self.0.iter().map(|&k| x[k]).collect()
    }

    /// Relabels orbital indices so that the product Π φ_{a_i}(x_{σ(i)}) reads
    /// Π φ_{a'_j}(x_j): `a'_{σ(i)} = a_i`.
    pub(crate) fn relabel(&self, modes: &[usize]) -> Vec<usize> {
        let mut out = vec![0; modes.len()];
        for (i, &k) in self.0.iter().enumerate() {
            out[k] = modes[i];
        }
        out
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})", self.0.iter().map(|k| (k + 1).to_string()).join(" "))
    }
}

/// A signed permutation entering an (anti)symmetrizer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PermutationTerm {
    pub sigma: Permutation,
    pub sign: i32,
}

/// Permutation terms for symmetrization (`sign = +1`) or antisymmetrization
/// (`sign = −1`) of N particles.
pub fn permutation_terms(sign: i32, n: usize) -> Vec<PermutationTerm> {
    Permutation::all(n)
        .into_iter()
        .map(|sigma| {
            let s = if sign < 0 { sigma.parity() } else { 1 };
            PermutationTerm { sigma, sign: s }
        })
        .collect()
}

/// Names of the four elements of G̃ for two particles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KleinTag {
    I,
    P12,
    P12Prime,
    Pi12,
}

impl KleinTag {
    pub const ALL: [KleinTag; 4] = [KleinTag::I, KleinTag::P12, KleinTag::P12Prime, KleinTag::Pi12];

    fn bits(self) -> u8 {
        match self {
            KleinTag::I => 0b00,
            KleinTag::P12 => 0b01,
            KleinTag::P12Prime => 0b10,
            KleinTag::Pi12 => 0b11,
        }
    }

    fn from_bits(bits: u8) -> Self {
        match bits & 0b11 {
            0b00 => KleinTag::I,
            0b01 => KleinTag::P12,
            0b10 => KleinTag::P12Prime,
            _ => KleinTag::Pi12,
        }
    }

    /// Product from the group's multiplication table.
    pub fn mul(self, other: Self) -> Self {
        Self::from_bits(self.bits() ^ other.bits())
    }

    pub fn element(self) -> GroupElement {
        let swap = Permutation::swap(2, 0, 1);
        let id = Permutation::identity(2);
        let (ket, bra) = match self {
            KleinTag::I => (id.clone(), id),
            KleinTag::P12 => (swap, id),
            KleinTag::P12Prime => (id, swap),
            KleinTag::Pi12 => (swap.clone(), swap),
        };
        GroupElement { ket, bra }
    }

    pub fn name(self) -> &'static str {
        match self {
            KleinTag::I => "I",
            KleinTag::P12 => "P12",
            KleinTag::P12Prime => "P12prime",
            KleinTag::Pi12 => "Pi12",
        }
    }
}

/// An element (σ, σ′) of G ⊗ G: `σ` permutes ket coordinates, `σ′` bra coordinates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupElement {
    pub ket: Permutation,
    pub bra: Permutation,
}

impl GroupElement {
    pub fn new(ket: Permutation, bra: Permutation) -> Result<Self> {
        if ket.len() != bra.len() {
            return Err(TomoError::DimensionMismatch { expected: ket.len(), got: bra.len() });
        }
        Ok(Self { ket, bra })
    }

    pub fn particle_count(&self) -> usize {
        self.ket.len()
    }

    /// Product `self · other`, acting as `other` first, then `self`.
    pub fn mul(&self, other: &Self) -> Self {
        Self { ket: self.ket.compose(&other.ket), bra: self.bra.compose(&other.bra) }
    }

    pub fn inverse(&self) -> Self {
        Self { ket: self.ket.inverse(), bra: self.bra.inverse() }
    }

    pub fn ket_parity(&self) -> i32 {
        self.ket.parity()
    }

    pub fn bra_parity(&self) -> i32 {
        self.bra.parity()
    }

    /// The G̃ name of a two-particle element.
    pub fn tag(&self) -> Option<KleinTag> {
        if self.particle_count() != 2 {
            return None;
        }
        let bit = |p: &Permutation| u8::from(!p.is_identity());
        Some(KleinTag::from_bits(bit(&self.ket) | (bit(&self.bra) << 1)))
    }
}

impl From<KleinTag> for GroupElement {
    fn from(tag: KleinTag) -> Self {
        tag.element()
    }
}

/// The four projector classes of G̃.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SymmetryClass {
    Plus,
    Minus,
    Rho1,
    Rho2,
}

impl SymmetryClass {
    pub const ALL: [SymmetryClass; 4] =
        [SymmetryClass::Plus, SymmetryClass::Minus, SymmetryClass::Rho1, SymmetryClass::Rho2];

    /// Characters over (I, P12, P12prime, Pi12).
    pub fn characters(self) -> [i32; 4] {
        match self {
            SymmetryClass::Plus => [1, 1, 1, 1],
            SymmetryClass::Minus => [1, -1, -1, 1],
            SymmetryClass::Rho1 => [1, 1, -1, -1],
            SymmetryClass::Rho2 => [1, -1, 1, -1],
        }
    }

    pub fn character(self, tag: KleinTag) -> i32 {
        self.characters()[tag as usize]
    }

    pub fn name(self) -> &'static str {
        match self {
            SymmetryClass::Plus => "plus",
            SymmetryClass::Minus => "minus",
            SymmetryClass::Rho1 => "rho1",
            SymmetryClass::Rho2 => "rho2",
        }
    }

    /// Exchange sign of a symmetric or antisymmetric class.
    pub fn exchange_sign(self) -> Option<i32> {
        match self {
            SymmetryClass::Plus => Some(1),
            SymmetryClass::Minus => Some(-1),
            _ => None,
        }
    }
}

impl fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SymmetryClass {
    type Err = TomoError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "plus" | "+" => Ok(SymmetryClass::Plus),
            "minus" | "-" => Ok(SymmetryClass::Minus),
            "rho1" => Ok(SymmetryClass::Rho1),
            "rho2" => Ok(SymmetryClass::Rho2),
            other => Err(TomoError::Parse(format!("unknown symmetry class '{other}'"))),
        }
    }
}

/// `(g ρ)(x; x′) = ρ(σ·x; σ′·x′)`. Analytic backings relabel orbitals, grid
/// backings compose the stored permutations.
pub fn apply_group_element<T: Real>(g: &GroupElement, d: &DensityObject<T>) -> Result<DensityObject<T>> {
    let n = d.particle_count();
    if g.particle_count() != n {
        return Err(TomoError::DimensionMismatch { expected: n, got: g.particle_count() });
    }
    let backing = match d.backing() {
        DensityBacking::Analytic(terms) => DensityBacking::Analytic(
            terms
                .iter()
                .map(|t| DensityTerm { coeff: t.coeff, ket: g.ket.relabel(&t.ket), bra: g.bra.relabel(&t.bra) })
                .collect(),
        ),
        DensityBacking::Grid { samples, components } => DensityBacking::Grid {
            samples: samples.clone(),
            components: components
                .iter()
                .map(|c| GridComponent { coeff: c.coeff, ket: g.ket.compose(&c.ket), bra: g.bra.compose(&c.bra) })
                .collect(),
        },
    };
    Ok(DensityObject::from_backing(n, backing))
}

/// Σ_k c_k · g_k ρ as a single density.
pub fn combine<T: Real>(d: &DensityObject<T>, parts: &[(T, GroupElement)]) -> Result<DensityObject<T>> {
    let n = d.particle_count();
    let mut analytic = Vec::new();
    let mut grid: Option<(_, Vec<GridComponent<T>>)> = None;
    for (c, g) in parts {
        let moved = apply_group_element(g, d)?;
        let factor = Complex::new(*c, T::zero());
        match moved.backing() {
            DensityBacking::Analytic(terms) => {
                analytic.extend(terms.iter().map(|t| DensityTerm { coeff: t.coeff * factor, ..t.clone() }))
            }
            DensityBacking::Grid { samples, components } => {
                let entry = grid.get_or_insert_with(|| (samples.clone(), Vec::new()));
                entry.1.extend(components.iter().map(|x| GridComponent { coeff: x.coeff * factor, ..x.clone() }));
            }
        }
    }
    let backing = match grid {
        Some((samples, components)) => DensityBacking::Grid { samples, components },
        None => DensityBacking::Analytic(analytic),
    };
    Ok(DensityObject::from_backing(n, backing))
}

/// `(1/4) Σ_g χ_class(g) · g ρ` for two particles.
pub fn project<T: Real>(class: SymmetryClass, d: &DensityObject<T>) -> Result<DensityObject<T>> {
    if d.particle_count() != 2 {
        return Err(TomoError::Unsupported(format!(
            "class {class} projector is defined for two particles, got {}",
            d.particle_count()
        )));
    }
    let quarter = T::of(0.25);
    let parts: Vec<(T, GroupElement)> = KleinTag::ALL
        .iter()
        .map(|&tag| (quarter * T::of(f64::from(class.character(tag))), tag.element()))
        .collect();
    combine(d, &parts)
}

/// Options for [`symmetrize_n_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymmetrizeOptions {
    pub max_particles: usize,
    /// Rescale the result to unit trace.
    pub renormalize: bool,
}

impl Default for SymmetrizeOptions {
    fn default() -> Self {
        Self { max_particles: 4, renormalize: false }
    }
}

/// `(1/(N!)²) Σ_{σ,σ′} ε_σ ε_σ′ ρ(x_σ; x′_σ′)`.
pub fn symmetrize_n<T: Real>(sign: i32, d: &DensityObject<T>, n: usize) -> Result<DensityObject<T>> {
    symmetrize_n_with(sign, d, n, SymmetrizeOptions::default())
}

pub fn symmetrize_n_with<T: Real>(
    sign: i32,
    d: &DensityObject<T>,
    n: usize,
    opts: SymmetrizeOptions,
) -> Result<DensityObject<T>> {
    if d.particle_count() != n {
        return Err(TomoError::DimensionMismatch { expected: n, got: d.particle_count() });
    }
    if n > opts.max_particles {
        return Err(TomoError::CostExceeded(format!(
            "symmetrizing {n} particles needs ({n}!)^2 terms; limit is {} particles",
            opts.max_particles
        )));
    }
    let terms = permutation_terms(sign, n);
    let norm = T::one() / T::of_usize(terms.len() * terms.len());
    let mut parts = Vec::with_capacity(terms.len() * terms.len());
    for a in &terms {
        for b in &terms {
            let g = GroupElement { ket: a.sigma.clone(), bra: b.sigma.clone() };
            parts.push((norm * T::of(f64::from(a.sign * b.sign)), g));
        }
    }
    let out = combine(d, &parts)?;
    if !opts.renormalize {
        return Ok(out);
    }
    let tr = out.trace()?;
    if tr.norm() == T::zero() {
        return Err(TomoError::numeric("symmetrize_n", "cannot renormalize a zero-trace result"));
    }
    Ok(out.scaled(Complex::new(T::one(), T::zero()) / tr))
}

/// Kernel route: the δ-functions of `(I ± P12) ⊗ (I ± P′12) / 4` are consumed
/// one factor at a time as coordinate swaps.
pub fn delta_kernel_apply<T: Real>(sign: i32, d: &DensityObject<T>) -> Result<DensityObject<T>> {
    if d.particle_count() != 2 {
        return Err(TomoError::Unsupported(format!(
            "two-particle kernel applied to {} particles",
            d.particle_count()
        )));
    }
    let half = T::of(0.5);
    let s = if sign < 0 { -half } else { half };
    let ket_side = combine(d, &[(half, KleinTag::I.element()), (s, KleinTag::P12.element())])?;
    combine(&ket_side, &[(half, KleinTag::I.element()), (s, KleinTag::P12Prime.element())])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::pure_density;
    use crate::hermite::ProductState;

    #[test]
    fn multiplication_table() {
        use KleinTag::*;
        let table = [
            [I, P12, P12Prime, Pi12],
            [P12, I, Pi12, P12Prime],
            [P12Prime, Pi12, I, P12],
            [Pi12, P12Prime, P12, I],
        ];
        for (i, a) in KleinTag::ALL.iter().enumerate() {
            for (j, b) in KleinTag::ALL.iter().enumerate() {
                assert_eq!(a.mul(*b), table[i][j]);
                assert_eq!(a.element().mul(&b.element()).tag(), Some(table[i][j]));
            }
            assert_eq!(a.mul(*a), I);
        }
    }

    #[test]
    fn parity_and_order() {
        let all = Permutation::all(3);
        assert_eq!(all.len(), 6);
        assert_eq!(all[0], Permutation::identity(3));
        let parities: Vec<i32> = all.iter().map(Permutation::parity).collect();
        assert_eq!(parities, vec![1, -1, -1, 1, 1, -1]);
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert!(p.compose(&p.inverse()).is_identity());
        assert!(Permutation::new(vec![0, 0]).is_err());
    }

    #[test]
    fn characters_are_orthogonal() {
        for a in SymmetryClass::ALL {
            for b in SymmetryClass::ALL {
                let dot: i32 = a.characters().iter().zip(b.characters()).map(|(x, y)| x * y).sum();
                assert_eq!(dot, if a == b { 4 } else { 0 });
            }
        }
    }

    #[test]
    fn p12_swaps_ket_coordinates() {
        let d = pure_density(&ProductState::<f64>::fock(&[0, 1]).unwrap());
        let moved = apply_group_element(&KleinTag::P12.element(), &d).unwrap();
        let a = moved.evaluate(&[0.3, -0.8], &[1.1, 0.4]).unwrap();
        let b = d.evaluate(&[-0.8, 0.3], &[1.1, 0.4]).unwrap();
        assert!((a - b).norm() < 1e-15);
    }

    #[test]
    fn projector_traces() {
        let d = pure_density(&ProductState::<f64>::fock(&[0, 1]).unwrap());
        assert!((project(SymmetryClass::Plus, &d).unwrap().trace().unwrap().re - 0.5).abs() < 1e-15);
        let s = pure_density(&ProductState::<f64>::fock(&[0, 1, 2]).unwrap());
        let anti = symmetrize_n(-1, &s, 3).unwrap();
        assert!((anti.trace().unwrap().re - 1.0 / 6.0).abs() < 1e-15);
        let unit = symmetrize_n_with(-1, &s, 3, SymmetrizeOptions { renormalize: true, ..Default::default() }).unwrap();
        assert!((unit.trace().unwrap().re - 1.0).abs() < 1e-14);
        let big = pure_density(&ProductState::<f64>::fock(&[0, 1, 2, 3, 4]).unwrap());
        assert!(matches!(symmetrize_n(1, &big, 5), Err(TomoError::CostExceeded(_))));
    }
}
