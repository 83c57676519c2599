//! The two-particle tomographic exchange kernel K̃± as printed, kept
//! symbolic: f-terms carry their δ-constraints, g-terms their quadratic form.

use num_complex::Complex;

use crate::error::{Result, TomoError};
use crate::scalar::Real;
use crate::tomogram::TomogramPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    F,
    G,
}

/// Integration variables (x, m, n) of the kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerPoint<T> {
    pub x: [T; 2],
    pub m: [T; 2],
    pub n: [T; 2],
}

/// One term of K̃±.
///
/// `order[i]` is the outer label (0 or 1) whose (ξ, μ, ν) enter together
/// with inner particle i; `[0, 1]` is the printed f(ξ₂…; ξ₁…) and g(ξ₂…; ξ₁…).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTerm<T> {
    pub kind: KernelKind,
    pub order: [usize; 2],
    /// Includes the ± of the g-terms.
    pub prefactor: Complex<T>,
    /// f-terms: δ(m_i − slope_i n_i).
    pub slopes: Option<[T; 2]>,
    /// f-terms: phase x₁ + x₂ − Σ_i n_i · phase_n[i].
    pub phase_n: Option<[T; 2]>,
    /// g-terms: exponent ½ vᵀAv + B·v + i(x₁ + x₂), v = (m₁, n₁, m₂, n₂).
    pub a: Option<[[Complex<T>; 4]; 4]>,
    pub b: Option<[Complex<T>; 4]>,
}

impl<T: Real> KernelTerm<T> {
    /// Coefficient × phase at `inner`; for f-terms the δ-constraints are taken
    /// as substituted (the m components are not read).
    pub fn eval(&self, inner: &InnerPoint<T>) -> Complex<T> {
        let i = Complex::new(T::zero(), T::one());
        let xs = inner.x[0] + inner.x[1];
        match self.kind {
            KernelKind::F => {
                let c = self.phase_n.expect("f-term phase");
                let phase = xs - inner.n[0] * c[0] - inner.n[1] * c[1];
                self.prefactor * Complex::from_polar(T::one(), phase)
            }
            KernelKind::G => {
                let a = self.a.expect("g-term A");
                let b = self.b.expect("g-term B");
                let v = [inner.m[0], inner.n[0], inner.m[1], inner.n[1]];
                let mut quad = Complex::new(T::zero(), T::zero());
                let mut lin = Complex::new(T::zero(), T::zero());
                for r in 0..4 {
                    lin += b[r] * v[r];
                    for c in 0..4 {
                        quad += a[r][c] * (v[r] * v[c]);
                    }
                }
                self.prefactor * (quad * T::of(0.5) + lin + i * xs).exp()
            }
        }
    }

    /// The constrained m for an f-term at the given n.
    pub fn constrained_m(&self, n: [T; 2]) -> Option<[T; 2]> {
        self.slopes.map(|s| [s[0] * n[0], s[1] * n[1]])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelEvaluation<T> {
    pub terms: Vec<KernelTerm<T>>,
    pub values: Vec<Complex<T>>,
    /// False when some ν_i = 0; the f-terms are then left out.
    pub f_terms_defined: bool,
}

fn f_term<T: Real>(p: &TomogramPoint<T>, order: [usize; 2], k2: T) -> KernelTerm<T> {
    let slope = |i: usize| p.mu[order[i]] / p.nu[order[i]];
    let ph = |i: usize| p.xi[order[i]] / p.nu[order[i]];
    KernelTerm {
        kind: KernelKind::F,
        order,
        prefactor: Complex::new(k2 / T::of(4.0), T::zero()),
        slopes: Some([slope(0), slope(1)]),
        phase_n: Some([ph(0), ph(1)]),
        a: None,
        b: None,
    }
}

/// g with outer labels read through `order` (label "1" is `order[0]`).
fn g_term<T: Real>(p: &TomogramPoint<T>, order: [usize; 2], k2: T, sign: T) -> KernelTerm<T> {
    let (x1, m1, n1) = p.particle(order[0]);
    let (x2, m2, n2) = p.particle(order[1]);
    let i = |v: T| Complex::new(T::zero(), v);
    let d12 = m1 * n2 - m2 * n1;
    let d21 = m2 * n1 - m1 * n2;
    let a11 = i(n1 * n2 / d12);
    let a12 = i((m2 * n1 + m1 * n2) / (T::of(2.0) * d21));
    let a22 = i(m1 * m2 / d12);
    let z = Complex::new(T::zero(), T::zero());
    let a = [[a11, a12, z, z], [a12, a22, z, z], [z, z, a11, a12], [z, z, a12, a22]];
    let b1 = i((n1 * x2 - n2 * x1) / d12);
    let b2 = i((m2 * x1 - m1 * x2) / d12);
    let pref = k2 / (T::of(2.0) * T::PI()) * n1 * n2 / d21.abs();
    KernelTerm {
        kind: KernelKind::G,
        order,
        prefactor: Complex::new(sign * pref, T::zero()),
        slopes: None,
        phase_n: None,
        a: Some(a),
        b: Some([b1, b2, b1, b2]),
    }
}

/// The four terms of K̃± at an outer point, evaluated at `inner`.
pub fn ktilde_kernel_eval<T: Real>(sign: i32, outer: &TomogramPoint<T>, inner: &InnerPoint<T>) -> Result<KernelEvaluation<T>> {
    if outer.particle_count() != 2 {
        return Err(TomoError::DimensionMismatch { expected: 2, got: outer.particle_count() });
    }
    outer.validate()?;
    let det = outer.mu[1] * outer.nu[0] - outer.mu[0] * outer.nu[1];
    let scale = outer.mu[0].hypot(outer.nu[0]) * outer.mu[1].hypot(outer.nu[1]);
    if !(det.abs() > T::of(1e-12) * scale) {
        return Err(TomoError::DegenerateFrame { det: det.to_f64_lossy(), point: None });
    }
    let two_pi = T::of(2.0) * T::PI();
    let f_terms_defined = outer.nu.iter().all(|&n| n != T::zero());
    let s = T::of(f64::from(sign.signum()));
    let mut terms = Vec::with_capacity(4);
    if f_terms_defined {
        let k2 = T::one() / (two_pi * two_pi * (outer.nu[0] * outer.nu[1]).abs());
        terms.push(f_term(outer, [0, 1], k2));
        terms.push(f_term(outer, [1, 0], k2));
        terms.push(g_term(outer, [0, 1], k2, s));
        terms.push(g_term(outer, [1, 0], k2, s));
    } else {
        // k₂ ν₁ν₂ stays finite: 1/((2π)² sgn(ν₁ν₂)) with sgn(0) read as 0.
        let g = |order| {
            let mut t = g_term(outer, order, T::one(), s);
            t.prefactor = Complex::new(T::zero(), T::zero());
            t
        };
        terms.push(g([0, 1]));
        terms.push(g([1, 0]));
    }
    let values = terms.iter().map(|t| t.eval(inner)).collect();
    Ok(KernelEvaluation { terms, values, f_terms_defined })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inner(n: [f64; 2]) -> InnerPoint<f64> {
        InnerPoint { x: [0.3, -0.8], m: [0.0, 0.0], n }
    }

    #[test]
    fn f_term_at_zero_n() {
        let p = TomogramPoint::pair([0.5, 1.2], [1.0, 0.5], [0.5, 1.0]).unwrap();
        let k = ktilde_kernel_eval(1, &p, &inner([0.0, 0.0])).unwrap();
        let f = &k.terms[0];
        assert_eq!(f.constrained_m([0.0, 0.0]), Some([0.0, 0.0]));
        let want = f.prefactor * Complex::from_polar(1.0, 0.3 - 0.8);
        assert!((k.values[0] - want).norm() < 1e-15);
    }

    #[test]
    fn printed_a_block() {
        let p = TomogramPoint::pair([0.5, 1.2], [1.0, 0.0], [0.0, 1.0]).unwrap();
        let k = ktilde_kernel_eval(1, &p, &inner([0.1, 0.2])).unwrap();
        assert!(!k.f_terms_defined);
        let a = k.terms[0].a.unwrap();
        assert_eq!(a[0][0], Complex::new(0.0, 0.0));
        assert_eq!(a[1][1], Complex::new(0.0, 0.0));
        assert_eq!(a[0][1], Complex::new(0.0, -0.5));
        assert_eq!(a[2][3], a[0][1]);
    }

    #[test]
    fn label_swap_exchanges_orders() {
        let p = TomogramPoint::<f64>::pair([0.5, -1.2], [1.0, 0.5], [0.5, 1.0]).unwrap();
        let inn = InnerPoint { x: [0.3, -0.8], m: [0.4, 0.1], n: [0.2, -0.6] };
        let a = ktilde_kernel_eval(-1, &p, &inn).unwrap();
        let b = ktilde_kernel_eval(-1, &p.label_swapped(), &inn).unwrap();
        for (i, j) in [(0, 1), (1, 0), (2, 3), (3, 2)] {
            assert_eq!(a.terms[i].kind, b.terms[j].kind);
            assert!((a.values[i] - b.values[j]).norm() < 1e-14 * a.values[i].norm().max(1.0));
        }
    }

    #[test]
    fn degenerate_frames_are_rejected() {
        let p = TomogramPoint::pair([0.5, 1.2], [1.0, 2.0], [0.5, 1.0]).unwrap();
        assert!(matches!(ktilde_kernel_eval(1, &p, &inner([0.0, 0.0])), Err(TomoError::DegenerateFrame { .. })));
    }
}
