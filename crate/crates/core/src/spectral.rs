//! Characteristic determinant of u^(n) + lambda u = 0 on a two-point space
//! and location of the first positive / first negative eigenvalue.
//!
//! The scan variable is m with lambda = +/- m^n: characteristic roots are
//! roughly uniformly spaced in m and wildly nonuniform in lambda. Sign
//! changes of the row-normalized determinant are refined by bisection,
//! which is unconditionally robust for the cheap prescaled determinant.

use crate::basis::{build_system, Domain};
use crate::error::{Error, Result};
use crate::green::boundary_matrix;
use crate::linalg::Lu;
use crate::spaces::TwoPointSpace;
use serde::{Deserialize, Serialize};

/// Residual threshold declaring the determinant "zero" at a located root.
pub const RESIDUAL_TOL: f64 = 1e-6;

/// Which end of the spectrum to locate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScanDirection {
    /// Least positive eigenvalue: lambda = +m^n.
    FirstPositive,
    /// Biggest negative eigenvalue: lambda = -m^n.
    FirstNegative,
}

impl ScanDirection {
    fn sign(self) -> f64 {
        match self {
            ScanDirection::FirstPositive => 1.0,
            ScanDirection::FirstNegative => -1.0,
        }
    }
}

/// An eigenvalue search request.
#[derive(Debug, Clone)]
pub struct EigenQuery {
    pub space: TwoPointSpace,
    pub domain: Domain,
    pub direction: ScanDirection,
    /// Scan bound in m units (lambda = +/- m^n).
    pub m_max: f64,
    pub scan_points: usize,
    /// Bracket width target in m units.
    pub refine_tol: f64,
}

impl EigenQuery {
    pub fn new(space: TwoPointSpace, domain: Domain, direction: ScanDirection) -> Self {
        let m_max = 20.0 / domain.length();
        EigenQuery {
            space,
            domain,
            direction,
            m_max,
            scan_points: 2000,
            refine_tol: 1e-10,
        }
    }

    fn validate(&self) -> Result<()> {
        self.space.require_balanced()?;
        if !(self.m_max > 0.0) {
            return Err(Error::Validation("m_max must be positive".into()));
        }
        if self.scan_points < 100 {
            return Err(Error::Validation("scan_points must be at least 100".into()));
        }
        if !(self.refine_tol > 0.0) {
            return Err(Error::Validation("refine_tol must be positive".into()));
        }
        Ok(())
    }
}

/// One located eigenvalue with its bracket, determinant residual and
/// kernel direction in the canonical basis at a.
#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub lambda: f64,
    /// |lambda| = m^n.
    pub m: f64,
    pub bracket_m: (f64, f64),
    pub residual: f64,
    pub kernel: Vec<f64>,
}

/// Outcome of a scan: a located eigenvalue or a certified absence of sign
/// changes in the scanned range.
#[derive(Debug, Clone, Serialize)]
pub enum EigenOutcome {
    Found(EigenResult),
    NotFoundInRange {
        m_max: f64,
        scan_points: usize,
        /// m values where |det| dipped near zero without a sign change
        /// (possible even-multiplicity roots the scanner cannot claim).
        suspicious_dips: Vec<f64>,
    },
}

impl EigenOutcome {
    pub fn found(self) -> Result<EigenResult> {
        match self {
            EigenOutcome::Found(r) => Ok(r),
            EigenOutcome::NotFoundInRange {
                m_max, scan_points, ..
            } => Err(Error::EigenvalueNotFound { m_max, scan_points }),
        }
    }
}

/// Row-normalized boundary determinant of u^(n) + lambda u = 0 in the
/// space. Zero exactly at the eigenvalues; magnitude bounded by 1; sign is
/// continuous in lambda along one sign of the parameter.
pub fn char_det(space: &TwoPointSpace, domain: &Domain, lambda: f64) -> Result<f64> {
    space.require_balanced()?;
    let system = build_system(space.n(), lambda)?;
    let m = boundary_matrix(space, domain, &system)?;
    Ok(Lu::factor(&m.row_normalized()).det())
}

/// Scans m in (0, m_max], detects the first sign change of the
/// characteristic determinant and refines it by bisection.
pub fn first_eigenvalue(query: &EigenQuery) -> Result<EigenOutcome> {
    query.validate()?;
    let n = query.space.n();
    let dir = query.direction.sign();
    let lambda_of = |m: f64| dir * m.powi(n as i32);
    let f = |m: f64| char_det(&query.space, &query.domain, lambda_of(m));

    let step = query.m_max / query.scan_points as f64;
    let mut prev_m = step;
    let mut prev = f(prev_m)?;
    let mut dips: Vec<f64> = Vec::new();
    let mut prev_abs = prev.abs();
    let mut falling = false;

    for i in 2..=query.scan_points {
        let m = step * i as f64;
        let cur = f(m)?;
        if prev == 0.0 || cur == 0.0 || prev.signum() != cur.signum() {
            let (mut lo, mut hi) = (prev_m, m);
            let mut flo = prev;
            if flo == 0.0 {
                hi = lo;
            }
            while hi - lo > query.refine_tol {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let m_root = 0.5 * (lo + hi);
            let lambda = lambda_of(m_root);
            let residual = f(m_root)?.abs();
            let kernel = kernel_direction(&query.space, &query.domain, lambda)?.0;
            return Ok(EigenOutcome::Found(EigenResult {
                lambda,
                m: m_root,
                bracket_m: (lo, hi),
                residual,
                kernel,
            }));
        }
        // near-zero dip heuristic: |det| fell below threshold and turned
        // back up without changing sign
        let abs = cur.abs();
        if falling && abs > prev_abs && prev_abs < 1e-5 {
            dips.push(prev_m);
        }
        falling = abs < prev_abs;
        prev_abs = abs;
        prev_m = m;
        prev = cur;
    }
    Ok(EigenOutcome::NotFoundInRange {
        m_max: query.m_max,
        scan_points: query.scan_points,
        suspicious_dips: dips,
    })
}

fn kernel_direction(
    space: &TwoPointSpace,
    domain: &Domain,
    lambda: f64,
) -> Result<(Vec<f64>, usize)> {
    let system = build_system(space.n(), lambda)?;
    let m = boundary_matrix(space, domain, &system)?.row_normalized();
    let lu = Lu::factor(&m);
    Ok(lu.null_vector(1e-6))
}

/// Eigenfunction as a coefficient vector over the canonical basis at a,
/// evaluable with all derivatives.
#[derive(Debug, Clone)]
pub struct Eigenfunction {
    system: crate::basis::FundamentalSystem,
    coeffs: Vec<f64>,
    a: f64,
    /// true when the boundary matrix looked rank-deficient beyond corank 1
    pub multiplicity_warning: bool,
}

impl Eigenfunction {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// d-th derivative of the eigenfunction at t.
    pub fn eval(&self, t: f64, d: usize) -> Result<f64> {
        let mut v = 0.0;
        for (i, &c) in self.coeffs.iter().enumerate() {
            if c != 0.0 {
                v += c * self.system.canonical(i, d, t - self.a)?;
            }
        }
        Ok(v)
    }
}

/// Extracts the kernel direction of the boundary matrix at a located
/// eigenvalue and wraps it as an evaluable function. Errors if the
/// boundary residual of the normalized kernel exceeds 1e-8.
pub fn eigenfunction(
    result: &EigenResult,
    space: &TwoPointSpace,
    domain: &Domain,
) -> Result<Eigenfunction> {
    let (coeffs, corank) = kernel_direction(space, domain, result.lambda)?;
    let system = build_system(space.n(), result.lambda)?;
    let m = boundary_matrix(space, domain, &system)?.row_normalized();
    let residual = Lu::apply(&m, &coeffs)
        .iter()
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    if residual > 1e-8 {
        return Err(Error::Numerical(format!(
            "eigenfunction boundary residual {residual:.3e} above 1e-8"
        )));
    }
    Ok(Eigenfunction {
        system,
        coeffs,
        a: domain.a,
        multiplicity_warning: corank > 1,
    })
}
