//! Unit harmonic-oscillator eigenstates and multi-particle superpositions of them.
//!
//! Units are fixed to ħ = m = ω = 1, so the Fock mode functions are
//! φ_n(x) = (√π 2ⁿ n!)^{-1/2} H_n(x) e^{-x²/2}.

use num_complex::Complex;

use crate::error::{Result, TomoError};
use crate::scalar::Real;

/// Physicists' Hermite polynomial H_n(y) by the three-term recurrence.
pub fn hermite_eval<T: Real>(n: usize, y: T) -> T {
    let two = T::of(2.0);
    let mut h0 = T::one();
    if n == 0 {
        return h0;
    }
    let mut h1 = two * y;
    for k in 1..n {
        let h2 = two * y * h1 - two * T::of_usize(k) * h0;
        h0 = h1;
        h1 = h2;
    }
    h1
}

/// A single Fock mode φ_n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OscillatorMode(pub usize);

impl OscillatorMode {
    pub fn index(self) -> usize {
        self.0
    }

    pub fn eval<T: Real>(self, x: T) -> Result<T> {
        fock_wavefunction(self.0, x)
    }
}

/// φ_n(x), the normalized unit-oscillator eigenfunction.
pub fn fock_wavefunction<T: Real>(n: usize, x: T) -> Result<T> {
    let mut out = vec![T::zero(); n + 1];
    fock_wavefunctions_into(x, &mut out)?;
    Ok(out[n])
}

/// φ_0(x), …, φ_nmax(x) in one pass.
pub fn fock_wavefunctions<T: Real>(nmax: usize, x: T) -> Result<Vec<T>> {
    let mut out = vec![T::zero(); nmax + 1];
    fock_wavefunctions_into(x, &mut out)?;
    Ok(out)
}

/// Fills `out[k] = φ_k(x)` using the normalized recurrence
/// φ_{k+1} = √(2/(k+1)) x φ_k − √(k/(k+1)) φ_{k−1}.
///
/// The Gaussian factor is carried as a separate log-scale so that high orders
/// at large |x| neither overflow nor flush to zero prematurely.
pub fn fock_wavefunctions_into<T: Real>(x: T, out: &mut [T]) -> Result<()> {
    if !x.is_finite() {
        return Err(TomoError::domain(format!("fock_wavefunction at non-finite x = {x}")));
    }
    if out.is_empty() {
        return Ok(());
    }
    let big = T::of(1e30);
    let log_big = big.ln();
    let gauss_log = -x * x / T::of(2.0);
    let pim4 = T::PI().powf(T::of(-0.25));
    // Fast path when the plain product stays representable.
    let direct = gauss_log > T::min_positive_value().ln() * T::of(0.5);
    let mut log_scale = if direct { T::zero() } else { gauss_log };
    let mut p_prev = T::zero();
    let mut p_cur = if direct { pim4 * gauss_log.exp() } else { pim4 };
    let emit = |p: T, log_scale: T| if direct { p } else { p * (log_scale).exp() };
    out[0] = emit(p_cur, log_scale);
    for k in 0..out.len() - 1 {
        let kf = T::of_usize(k);
        let next = (T::of(2.0) / (kf + T::one())).sqrt() * x * p_cur - (kf / (kf + T::one())).sqrt() * p_prev;
        p_prev = p_cur;
        p_cur = next;
        if !direct && p_cur.abs() > big {
            p_cur = p_cur / big;
            p_prev = p_prev / big;
            log_scale += log_big;
        }
        out[k + 1] = emit(p_cur, log_scale);
    }
    if let Some(bad) = out.iter().position(|v| !v.is_finite()) {
        return Err(TomoError::numeric("fock_wavefunction", format!("phi_{bad}({x}) is not finite")));
    }
    Ok(())
}

/// One term of a product-state superposition: `coeff · φ_{modes[0]}(x_1) ⋯ φ_{modes[N-1]}(x_N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateTerm<T> {
    pub coeff: Complex<T>,
    pub modes: Vec<usize>,
}

/// Complex linear combination of tensor products of Fock modes of N particles.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState<T> {
    terms: Vec<StateTerm<T>>,
}

impl<T: Real> ProductState<T> {
    pub fn new(terms: Vec<StateTerm<T>>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| TomoError::domain("product state needs at least one term"))?;
        let n = first.modes.len();
        if n == 0 {
            return Err(TomoError::domain("product state needs at least one particle"));
        }
        if let Some(bad) = terms.iter().find(|t| t.modes.len() != n) {
            return Err(TomoError::DimensionMismatch { expected: n, got: bad.modes.len() });
        }
        Ok(Self { terms })
    }

    /// The single product φ_{modes[0]} ⊗ ⋯ with unit coefficient.
    pub fn fock(modes: &[usize]) -> Result<Self> {
        Self::new(vec![StateTerm { coeff: Complex::new(T::one(), T::zero()), modes: modes.to_vec() }])
    }

    /// Builds a superposition from (coefficient, modes) pairs.
    pub fn superposition<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Complex<T>, Vec<usize>)>,
    {
        Self::new(terms.into_iter().map(|(coeff, modes)| StateTerm { coeff, modes }).collect())
    }

    pub fn terms(&self) -> &[StateTerm<T>] {
        &self.terms
    }

    pub fn particle_count(&self) -> usize {
        self.terms[0].modes.len()
    }

    /// Largest Fock index used by any particle.
    pub fn max_mode(&self) -> usize {
        self.terms.iter().flat_map(|t| t.modes.iter().copied()).max().unwrap_or(0)
    }

    /// ⟨ψ|ψ⟩ from orbital orthonormality.
    pub fn norm_sqr(&self) -> T {
        let mut acc = Complex::new(T::zero(), T::zero());
        for a in &self.terms {
            for b in &self.terms {
                if a.modes == b.modes {
                    acc += a.coeff.conj() * b.coeff;
                }
            }
        }
        acc.re
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt();
        if !(norm > T::zero()) {
            return Err(TomoError::domain("cannot normalize a zero state"));
        }
        let terms = self
            .terms
            .iter()
            .map(|t| StateTerm { coeff: t.coeff / norm, modes: t.modes.clone() })
            .collect();
        Ok(Self { terms })
    }

    /// ψ(x_1, …, x_N).
    pub fn eval(&self, x: &[T]) -> Result<Complex<T>> {
        let n = self.particle_count();
        if x.len() != n {
            return Err(TomoError::DimensionMismatch { expected: n, got: x.len() });
        }
        let table = mode_table(self.max_mode(), x)?;
        Ok(self
            .terms
            .iter()
            .map(|t| {
                let prod = t.modes.iter().enumerate().fold(T::one(), |acc, (i, &m)| acc * table[i][m]);
                t.coeff * prod
            })
            .fold(Complex::new(T::zero(), T::zero()), |a, b| a + b))
    }

    /// Applies the free oscillator evolution c_n → c_n e^{-i Σ(n_i + 1/2) t}.
    pub fn evolved(&self, t: T) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|term| {
                let energy: T = term.modes.iter().map(|&m| T::of_usize(m) + T::of(0.5)).sum();
                let phase = Complex::from_polar(T::one(), -energy * t);
                StateTerm { coeff: term.coeff * phase, modes: term.modes.clone() }
            })
            .collect();
        Self { terms }
    }
}

/// `table[i][k] = φ_k(x[i])` for k ≤ nmax.
pub(crate) fn mode_table<T: Real>(nmax: usize, x: &[T]) -> Result<Vec<Vec<T>>> {
    x.iter().map(|&xi| fock_wavefunctions(nmax, xi)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Rule;
    use approx::assert_relative_eq;

    #[test]
    fn hermite_values() {
        assert_eq!(hermite_eval(0, 0.7f64), 1.0);
        assert_eq!(hermite_eval(1, 0.5f64), 1.0);
        assert_eq!(hermite_eval(3, 1.0f64), -4.0);
    }

    #[test]
    fn hermite_integer_values_are_exact() {
        // Explicit coefficient tables of H_0..H_10.
        let coeffs: [&[i64]; 11] = [
            &[1],
            &[0, 2],
            &[-2, 0, 4],
            &[0, -12, 0, 8],
            &[12, 0, -48, 0, 16],
            &[0, 120, 0, -160, 0, 32],
            &[-120, 0, 720, 0, -480, 0, 64],
            &[0, -1680, 0, 3360, 0, -1344, 0, 128],
            &[1680, 0, -13440, 0, 13440, 0, -3584, 0, 256],
            &[0, 30240, 0, -80640, 0, 48384, 0, -9216, 0, 512],
            &[-30240, 0, 302400, 0, -403200, 0, 161280, 0, -23040, 0, 1024],
        ];
        for (n, c) in coeffs.iter().enumerate() {
            for y in -4i64..=4 {
                let exact: i64 = c.iter().enumerate().map(|(k, a)| a * y.pow(k as u32)).sum();
                assert_eq!(hermite_eval(n, y as f64), exact as f64, "H_{n}({y})");
            }
        }
    }

    #[test]
    fn ground_state_value() {
        assert_relative_eq!(fock_wavefunction(0, 0.0f64).unwrap(), 0.7511255444649425, max_relative = 1e-14);
        assert_eq!(fock_wavefunction(1, 0.0f64).unwrap(), 0.0);
    }

    #[test]
    fn orthonormality_by_gauss_hermite() {
        let rule = Rule::<f64>::gauss_hermite(64);
        for n in 0..=6 {
            for m in 0..=6 {
                let v = rule.integrate(|x| {
                    let w = fock_wavefunctions(6, x).unwrap();
                    w[n] * w[m] * (x * x).exp()
                });
                let expect = if n == m { 1.0 } else { 0.0 };
                assert!((v - expect).abs() <= 1e-8, "<{n}|{m}> = {v}");
            }
        }
    }

    #[test]
    fn matches_closed_form_with_factorials() {
        for n in 0..12usize {
            let fact: f64 = (1..=n).map(|k| k as f64).product();
            let norm = (std::f64::consts::PI.sqrt() * 2f64.powi(n as i32) * fact).sqrt();
            for &x in &[-2.3f64, -0.4, 0.0, 0.9, 3.1] {
                let closed = hermite_eval(n, x) * (-x * x / 2.0).exp() / norm;
                let rec = fock_wavefunction(n, x).unwrap();
                assert!((closed - rec).abs() < 1e-12 * (1.0 + closed.abs()), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn high_orders_stay_finite_and_normalized() {
        // n > 170 where n! alone overflows f64.
        let n = 400;
        let rule = Rule::<f64>::composite_legendre(-40.0, 40.0, 400);
        let norm = rule.integrate(|x| fock_wavefunction(n, x).unwrap().powi(2));
        assert!((norm - 1.0).abs() < 1e-8, "norm = {norm}");
        // Far tail, where e^{-x^2/2} alone underflows.
        let v = fock_wavefunction(900, 45.0f64).unwrap();
        assert!(v.is_finite() && v != 0.0);
        assert!(fock_wavefunction(3, f64::NAN).is_err());
    }

    #[test]
    fn parity() {
        for n in 0..8 {
            for k in 0..50 {
                let x = -3.0 + 0.13 * k as f64;
                let a = fock_wavefunction(n, x).unwrap();
                let b = fock_wavefunction(n, -x).unwrap();
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                assert!((a - sign * b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn state_construction_and_norm() {
        let s = ProductState::<f64>::superposition([
            (Complex::new(1.0, 0.0), vec![0, 1]),
            (Complex::new(0.0, 1.0), vec![1, 0]),
        ])
        .unwrap();
        assert_relative_eq!(s.norm_sqr(), 2.0);
        assert_relative_eq!(s.normalized().unwrap().norm_sqr(), 1.0, max_relative = 1e-15);
        let bad = ProductState::<f64>::superposition([
            (Complex::new(1.0, 0.0), vec![0, 1]),
            (Complex::new(1.0, 0.0), vec![0]),
        ]);
        assert!(matches!(bad, Err(TomoError::DimensionMismatch { .. })));
        assert!(ProductState::<f64>::new(vec![]).is_err());
    }

    #[test]
    fn single_precision_is_supported() {
        let v = fock_wavefunction(2, 0.5f32).unwrap();
        let d = fock_wavefunction(2, 0.5f64).unwrap();
        assert!((v as f64 - d).abs() < 1e-6);
    }
}
