//! Fundamental solution systems of u^(n) + M u = 0.
//!
//! For M = 0 the canonical basis is monomial. For M != 0 the n-th roots of
//! -M are pairwise distinct, and every quantity of interest is a root-power
//! weighted exponential sum evaluated in complex arithmetic; real parts are
//! extracted at the module boundary after an imaginary-residue check.
//!
//! The workhorse is the canonical basis at a base point: v_d with
//! v_d^(c)(0) = delta_{dc}. Inverting the Vandermonde system in the
//! exponential basis analytically gives
//!
//!     v_d^(c)(x) = (1/n) sum_j r_j^(c-d) exp(r_j x),
//!
//! which is translation invariant, needs no linear solve and stays valid
//! for c >= n (the ODE reduction r_j^n = -M is built into the powers).

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Values of |M| below this threshold are treated as M = 0: the root
/// magnitudes |M|^(1/n) lose all precision there.
pub const M_ZERO_THRESHOLD: f64 = 1e-12;

const IMAG_RESIDUE_TOL: f64 = 1e-9;

/// The interval [a, b] the boundary value problem lives on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub a: f64,
    pub b: f64,
}

impl Domain {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::Validation(format!(
                "domain must satisfy a < b with both finite (got [{a}, {b}])"
            )));
        }
        Ok(Domain { a, b })
    }

    pub fn length(&self) -> f64 {
        self.b - self.a
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BasisKind {
    Monomial,
    Exponential,
}

/// Fundamental system of u^(n) + M u = 0.
#[derive(Debug, Clone)]
pub struct FundamentalSystem {
    n: usize,
    m_param: f64,
    kind: BasisKind,
    roots: Vec<Complex64>,
}

/// Builds the fundamental system for order n and parameter M.
pub fn build_system(n: usize, m_param: f64) -> Result<FundamentalSystem> {
    if n < 2 {
        return Err(Error::OrderTooSmall(n));
    }
    if m_param.abs() < M_ZERO_THRESHOLD {
        return Ok(FundamentalSystem {
            n,
            m_param: 0.0,
            kind: BasisKind::Monomial,
            roots: vec![Complex64::new(0.0, 0.0); n],
        });
    }
    let mag = m_param.abs().powf(1.0 / n as f64);
    // r^n = -M: argument pi for M > 0, 0 for M < 0
    let theta = if m_param > 0.0 { std::f64::consts::PI } else { 0.0 };
    let mut roots = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        let phi = (theta + 2.0 * std::f64::consts::PI * j as f64) / n as f64;
        roots[j] = Complex64::from_polar(mag, phi);
    }
    // enforce exact conjugate pairing so sums cancel imaginary parts cleanly
    for j in 0..n {
        let mirror = if m_param < 0.0 { (n - j) % n } else { n - 1 - j };
        if mirror > j {
            roots[mirror] = roots[j].conj();
        }
    }
    Ok(FundamentalSystem {
        n,
        m_param,
        kind: BasisKind::Exponential,
        roots,
    })
}

impl FundamentalSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m_param(&self) -> f64 {
        self.m_param
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn roots(&self) -> &[Complex64] {
        &self.roots
    }

    /// d-th derivatives of the raw basis functions at t.
    ///
    /// Monomial basis: u_i(t) = t^i / i!. Exponential basis:
    /// u_i(t) = exp(r_i t), derivative r_i^d exp(r_i t). d = n is allowed;
    /// there the result equals -M times the d = 0 values.
    pub fn eval_basis(&self, t: f64, d: usize) -> Result<Vec<Complex64>> {
        if d > self.n {
            return Err(Error::QOutOfRange { q: d, n: self.n });
        }
        match self.kind {
            BasisKind::Monomial => Ok((0..self.n)
                .map(|i| {
                    if i < d {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(t.powi((i - d) as i32) / factorial(i - d), 0.0)
                    }
                })
                .collect()),
            BasisKind::Exponential => Ok(self
                .roots
                .iter()
                .map(|&r| r.powi(d as i32) * (r * t).exp())
                .collect()),
        }
    }

    /// c-th derivative at x of the canonical basis function v_d
    /// (v_d^(i)(0) = delta_{id}). Valid for any c; for c >= n the ODE
    /// reduction is implicit in the formula.
    pub fn canonical(&self, d: usize, c: usize, x: f64) -> Result<f64> {
        debug_assert!(d < self.n);
        match self.kind {
            BasisKind::Monomial => {
                if c > d {
                    Ok(0.0)
                } else {
                    Ok(x.powi((d - c) as i32) / factorial(d - c))
                }
            }
            BasisKind::Exponential => {
                let p = c as i32 - d as i32;
                let mut sum = Complex64::new(0.0, 0.0);
                for &r in &self.roots {
                    sum += r.powi(p) * (r * x).exp();
                }
                sum /= self.n as f64;
                if sum.im.abs() > IMAG_RESIDUE_TOL * (1.0 + sum.re.abs()) {
                    return Err(Error::Numerical(format!(
                        "imaginary residue {:.3e} above tolerance for canonical({d},{c},{x})",
                        sum.im
                    )));
                }
                Ok(sum.re)
            }
        }
    }

    /// d-th derivative of the Cauchy kernel K at x = t - s: the solution
    /// with K^(i)(0) = 0 for i < n-1 and K^(n-1)(0) = 1. Carries the unit
    /// jump of the (n-1)-st derivative of the Green's function.
    pub fn cauchy_kernel(&self, x: f64, d: usize) -> Result<f64> {
        self.canonical(self.n - 1, d, x)
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartic_roots_negative_m() {
        // M = -m^4: roots {m, im, -m, -im}
        let sys = build_system(4, -16.0).unwrap();
        let mut mags: Vec<f64> = sys.roots().iter().map(|r| r.norm()).collect();
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for m in mags {
            assert!((m - 2.0).abs() < 1e-12);
        }
        let has_real_pos = sys
            .roots()
            .iter()
            .any(|r| (r.re - 2.0).abs() < 1e-12 && r.im.abs() < 1e-12);
        assert!(has_real_pos);
        // product over roots = (-1)^n (-M)
        let prod = sys.roots().iter().fold(Complex64::new(1.0, 0.0), |p, &r| p * r);
        assert!((prod.re - 16.0).abs() < 1e-9);
        assert!(prod.im.abs() < 1e-9);
    }

    #[test]
    fn quartic_roots_positive_m() {
        // M = m^4: roots m e^{i pi (2j+1)/4}
        let sys = build_system(4, 16.0).unwrap();
        let expected = 2.0 / f64::sqrt(2.0);
        let found = sys
            .roots()
            .iter()
            .any(|r| (r.re - expected).abs() < 1e-12 && (r.im - expected).abs() < 1e-12);
        assert!(found);
    }

    #[test]
    fn monomial_basis_values() {
        let sys = build_system(4, 0.0).unwrap();
        let v = sys.eval_basis(1.0, 0).unwrap();
        let want = [1.0, 1.0, 0.5, 1.0 / 6.0];
        for (got, want) in v.iter().zip(want) {
            assert!((got.re - want).abs() < 1e-15);
        }
        assert_eq!(sys.kind(), BasisKind::Monomial);
        let b2 = build_system(2, 0.0).unwrap();
        let v = b2.eval_basis(0.7, 0).unwrap();
        assert!((v[0].re - 1.0).abs() < 1e-15 && (v[1].re - 0.7).abs() < 1e-15);
    }

    #[test]
    fn ode_residual_identity() {
        for &m in &[-3.0, -1.0, 0.0, 2.0, 100.0] {
            let sys = build_system(4, m).unwrap();
            let top = sys.eval_basis(0.43, 4).unwrap();
            let base = sys.eval_basis(0.43, 0).unwrap();
            for (t, b) in top.iter().zip(base) {
                let resid = t + m * b;
                assert!(resid.norm() <= 1e-10 * (1.0 + m.abs() * b.norm()));
            }
        }
    }

    #[test]
    fn derivative_at_zero_equals_roots() {
        let sys = build_system(4, -1.0).unwrap();
        let v = sys.eval_basis(0.0, 1).unwrap();
        for (got, want) in v.iter().zip(sys.roots()) {
            assert!((got - want).norm() < 1e-14);
        }
    }

    #[test]
    fn cauchy_kernel_monomial() {
        let sys = build_system(4, 0.0).unwrap();
        assert!((sys.cauchy_kernel(1.0, 0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!((sys.cauchy_kernel(0.5, 1).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn cauchy_kernel_defining_ivp() {
        for &m in &[-7.0, 0.0, 13.0] {
            let sys = build_system(5, m).unwrap();
            for i in 0..4 {
                assert!(sys.cauchy_kernel(0.0, i).unwrap().abs() < 1e-12);
            }
            assert!((sys.cauchy_kernel(0.0, 4).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cauchy_kernel_closed_form_m_minus_one() {
        // M = -1, n = 4: K(x) = (sinh x - sin x) / 2
        let sys = build_system(4, -1.0).unwrap();
        for &x in &[0.25, 0.5, 1.0, 2.0] {
            let want = (x.sinh() - x.sin()) / 2.0;
            assert!((sys.cauchy_kernel(x, 0).unwrap() - want).abs() < 1e-13);
        }
        // frozen value at x = 1 from the closed form
        assert!((sys.cauchy_kernel(1.0, 0).unwrap() - 0.16686510441795248).abs() < 1e-14);
    }

    #[test]
    fn continuity_in_m_near_zero() {
        let mono = build_system(4, 0.0).unwrap();
        let x = 0.5;
        for j in [6, 8, 10] {
            for sign in [1.0, -1.0] {
                let sys = build_system(4, sign * 10f64.powi(-j)).unwrap();
                let diff = (sys.cauchy_kernel(x, 0).unwrap()
                    - mono.cauchy_kernel(x, 0).unwrap())
                .abs();
                assert!(diff < 1e-6, "M = {}e-{j}: diff = {diff}", sign);
            }
        }
    }

    #[test]
    fn below_threshold_is_monomial() {
        let sys = build_system(4, 1e-13).unwrap();
        assert_eq!(sys.kind(), BasisKind::Monomial);
    }

    #[test]
    fn rejects_small_order() {
        assert!(matches!(build_system(1, 0.0), Err(Error::OrderTooSmall(1))));
    }
}
