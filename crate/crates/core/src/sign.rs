//! Constant-sign characterization of the q-th t-derivative of the Green's
//! function, and independent verification by grid evaluation.
//!
//! The predicted interval of parameters M is delimited by the first
//! eigenvalue of the original space on one side and, in case A, by first
//! eigenvalues of the auxiliary spaces X2/X4 on the other. Cases B and C
//! close the interval at 0. Branches the characterization does not
//! enumerate are reported as `NotCoveredByTheorem`, never extrapolated.

use crate::basis::Domain;
use crate::error::{Error, Result};
use crate::green::{build_green, GreenFunction, Side};
use crate::spaces::{
    x2_space, x3_space, x4_space, x5_space, DerivativeIndexData, SignCase, TwoPointSpace,
};
use crate::spectral::{first_eigenvalue, EigenQuery, EigenResult, ScanDirection};
use rayon::prelude::*;
use serde::Serialize;

/// Relative margin defining "strict sign": |value| must exceed this times
/// the grid scale at every sampled point.
pub const STRICT_MARGIN: f64 = 1e-10;

/// Numerical knobs for the eigenvalue scans behind predictions.
#[derive(Debug, Clone)]
pub struct SolverSettings {
    /// Scan bound in m units; defaults to 20 / (b - a).
    pub m_max: Option<f64>,
    pub scan_points: usize,
    pub refine_tol: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            m_max: None,
            scan_points: 2000,
            refine_tol: 1e-10,
        }
    }
}

impl SolverSettings {
    fn query(&self, space: &TwoPointSpace, domain: &Domain, dir: ScanDirection) -> EigenQuery {
        let mut q = EigenQuery::new(space.clone(), *domain, dir);
        if let Some(m) = self.m_max {
            q.m_max = m;
        }
        q.scan_points = self.scan_points;
        q.refine_tol = self.refine_tol;
        q
    }
}

/// Predicted sign type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SignKind {
    StronglyPositive,
    StronglyNegative,
    Nonnegative,
    Nonpositive,
}

/// Dispatch outcome of the characterization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PredictionCase {
    CaseA,
    CaseB,
    CaseC,
    NoConstantSign,
    NotCoveredByTheorem,
}

/// Interval of parameters M, possibly unbounded on either side.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MInterval {
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub lower_open: bool,
    pub upper_open: bool,
}

impl MInterval {
    pub fn bounded(lower: f64, lower_open: bool, upper: f64, upper_open: bool) -> Self {
        MInterval {
            lower: Some(lower),
            upper: Some(upper),
            lower_open,
            upper_open,
        }
    }

    pub fn contains(&self, m: f64) -> bool {
        let lo_ok = match self.lower {
            None => true,
            Some(l) => {
                if self.lower_open {
                    m > l
                } else {
                    m >= l
                }
            }
        };
        let hi_ok = match self.upper {
            None => true,
            Some(u) => {
                if self.upper_open {
                    m < u
                } else {
                    m <= u
                }
            }
        };
        lo_ok && hi_ok
    }
}

/// One eigenvalue entering a prediction, with the space it was computed in.
#[derive(Debug, Clone, Serialize)]
pub struct EigenProvenance {
    pub name: String,
    pub space: TwoPointSpace,
    pub result: EigenResult,
}

/// Theorem-derived constant-sign interval for the q-th derivative.
#[derive(Debug, Clone, Serialize)]
pub struct SignPrediction {
    pub q: usize,
    pub case: PredictionCase,
    pub sign: Option<SignKind>,
    pub interval: Option<MInterval>,
    pub provenance: Vec<EigenProvenance>,
    /// Set by `necessary_interval`: membership is necessary, not sufficient.
    pub necessary_only: bool,
    pub note: Option<String>,
}

fn eig(
    name: String,
    space: &TwoPointSpace,
    domain: &Domain,
    dir: ScanDirection,
    settings: &SolverSettings,
) -> Result<EigenProvenance> {
    let result = first_eigenvalue(&settings.query(space, domain, dir))?.found()?;
    Ok(EigenProvenance {
        name,
        space: space.clone(),
        result,
    })
}

fn case_a_sign(dd: &DerivativeIndexData) -> SignKind {
    if (dd.n - dd.q - dd.c_q) % 2 == 0 {
        SignKind::StronglyPositive
    } else {
        SignKind::StronglyNegative
    }
}

/// Characterizes the set of M for which the q-th derivative of g_M has
/// constant sign. Requires property (N_a); 1 <= q <= n-1.
pub fn predict_interval(
    space: &TwoPointSpace,
    domain: &Domain,
    q: usize,
    settings: &SolverSettings,
) -> Result<SignPrediction> {
    if !space.check_na()? {
        return Err(Error::NaViolated);
    }
    let dd = space.derivative_space(q)?;
    let n = space.n();
    let k = space.k();
    let nk_even = (n - k) % 2 == 0;

    match dd.sign_case {
        SignCase::NoConstantSign => Ok(SignPrediction {
            q,
            case: PredictionCase::NoConstantSign,
            sign: None,
            interval: None,
            provenance: vec![],
            necessary_only: false,
            note: Some(format!(
                "c_q + d_q = {} < n - q = {}: no M yields a constant sign",
                dd.c_q + dd.d_q,
                n - q
            )),
        }),
        SignCase::CaseB => {
            let (l1, interval) = closed_at_zero(space, domain, nk_even, settings)?;
            Ok(SignPrediction {
                q,
                case: PredictionCase::CaseB,
                sign: Some(SignKind::Nonnegative),
                interval: Some(interval),
                provenance: vec![l1],
                necessary_only: false,
                note: None,
            })
        }
        SignCase::CaseC => {
            let (l1, interval) = closed_at_zero(space, domain, nk_even, settings)?;
            let sign = if (n - q) % 2 == 0 {
                SignKind::Nonnegative
            } else {
                SignKind::Nonpositive
            };
            Ok(SignPrediction {
                q,
                case: PredictionCase::CaseC,
                sign: Some(sign),
                interval: Some(interval),
                provenance: vec![l1],
                necessary_only: false,
                note: None,
            })
        }
        SignCase::CaseA => predict_case_a(space, domain, &dd, settings),
    }
}

/// (lambda_1, 0] for n-k even, [0, lambda_1) for n-k odd.
fn closed_at_zero(
    space: &TwoPointSpace,
    domain: &Domain,
    nk_even: bool,
    settings: &SolverSettings,
) -> Result<(EigenProvenance, MInterval)> {
    if nk_even {
        let l1 = eig(
            "lambda_1".into(),
            space,
            domain,
            ScanDirection::FirstNegative,
            settings,
        )?;
        let iv = MInterval::bounded(l1.result.lambda, true, 0.0, false);
        Ok((l1, iv))
    } else {
        let l1 = eig(
            "lambda_1".into(),
            space,
            domain,
            ScanDirection::FirstPositive,
            settings,
        )?;
        let iv = MInterval::bounded(0.0, false, l1.result.lambda, true);
        Ok((l1, iv))
    }
}

fn predict_case_a(
    space: &TwoPointSpace,
    domain: &Domain,
    dd: &DerivativeIndexData,
    settings: &SolverSettings,
) -> Result<SignPrediction> {
    let n = space.n();
    let k = space.k();
    let q = dd.q;
    let nk_even = (n - k) % 2 == 0;
    let sign = case_a_sign(dd);

    if k == 1 {
        // The stated endpoint eigenvalue lives in X2, which loses its whole
        // left side when k = 1; there is no eigenproblem to solve.
        return Ok(SignPrediction {
            q,
            case: PredictionCase::NotCoveredByTheorem,
            sign: None,
            interval: None,
            provenance: vec![],
            necessary_only: false,
            note: Some(
                "k = 1: auxiliary space X2 is degenerate (empty left side), \
                 the stated interval endpoint is not computable"
                    .into(),
            ),
        });
    }

    if k == n - 1 {
        if n - q - dd.c_q != 1 {
            return Ok(SignPrediction {
                q,
                case: PredictionCase::NotCoveredByTheorem,
                sign: None,
                interval: None,
                provenance: vec![],
                necessary_only: false,
                note: Some(format!(
                    "k = n-1 with n - q - c_q = {} is not an enumerated branch",
                    n - q - dd.c_q
                )),
            });
        }
        let l1 = eig(
            "lambda_1".into(),
            space,
            domain,
            ScanDirection::FirstPositive,
            settings,
        )?;
        let x2 = x2_space(space, q)?;
        let l2 = eig(
            format!("lambda_2^{q}"),
            &x2,
            domain,
            ScanDirection::FirstNegative,
            settings,
        )?;
        let interval = MInterval::bounded(l2.result.lambda, false, l1.result.lambda, true);
        return Ok(SignPrediction {
            q,
            case: PredictionCase::CaseA,
            sign: Some(SignKind::StronglyNegative),
            interval: Some(interval),
            provenance: vec![l1, l2],
            necessary_only: false,
            note: None,
        });
    }

    // 2 <= k <= n-2: both auxiliary spaces exist
    let x2 = x2_space(space, q)?;
    let x4 = x4_space(space, q)?;
    if nk_even {
        let l1 = eig(
            "lambda_1".into(),
            space,
            domain,
            ScanDirection::FirstNegative,
            settings,
        )?;
        let l2 = eig(
            format!("lambda_2^{q}"),
            &x2,
            domain,
            ScanDirection::FirstPositive,
            settings,
        )?;
        let l4 = eig(
            format!("lambda_4^{q}"),
            &x4,
            domain,
            ScanDirection::FirstPositive,
            settings,
        )?;
        let lam_q = l2.result.lambda.min(l4.result.lambda);
        let interval = MInterval::bounded(l1.result.lambda, true, lam_q, false);
        Ok(SignPrediction {
            q,
            case: PredictionCase::CaseA,
            sign: Some(sign),
            interval: Some(interval),
            provenance: vec![l1, l2, l4],
            necessary_only: false,
            note: None,
        })
    } else {
        let l1 = eig(
            "lambda_1".into(),
            space,
            domain,
            ScanDirection::FirstPositive,
            settings,
        )?;
        let l2 = eig(
            format!("lambda_2^{q}"),
            &x2,
            domain,
            ScanDirection::FirstNegative,
            settings,
        )?;
        let l4 = eig(
            format!("lambda_4^{q}"),
            &x4,
            domain,
            ScanDirection::FirstNegative,
            settings,
        )?;
        let lam_q = l2.result.lambda.max(l4.result.lambda);
        let interval = MInterval::bounded(lam_q, false, l1.result.lambda, true);
        Ok(SignPrediction {
            q,
            case: PredictionCase::CaseA,
            sign: Some(sign),
            interval: Some(interval),
            provenance: vec![l1, l2, l4],
            necessary_only: false,
            note: None,
        })
    }
}

/// A sign ruled out for every real M.
#[derive(Debug, Clone, Serialize)]
pub struct Impossibility {
    pub impossible_sign: SignKind,
    pub trigger: String,
}

/// Sufficient condition under which one strict sign is impossible for all
/// M: sigma_k = q + c_q - 1 or epsilon_{n-k} = q + d_q - 1.
pub fn nonexistence_check(space: &TwoPointSpace, q: usize) -> Result<Option<Impossibility>> {
    if !space.check_na()? {
        return Err(Error::NaViolated);
    }
    let dd = space.derivative_space(q)?;
    if dd.sign_case != SignCase::CaseA {
        return Err(Error::NotApplicable(format!(
            "nonexistence check needs case A, got {:?}",
            dd.sign_case
        )));
    }
    let sigma_k = *space.left().last().unwrap();
    let eps_last = *space.right().last().unwrap();
    let trigger = if sigma_k == q + dd.c_q - 1 {
        Some(format!("sigma_k = {sigma_k} = q + c_q - 1"))
    } else if eps_last == q + dd.d_q - 1 {
        Some(format!("epsilon_(n-k) = {eps_last} = q + d_q - 1"))
    } else {
        None
    };
    Ok(trigger.map(|trigger| {
        let impossible_sign = if (dd.n - q - dd.c_q) % 2 == 0 {
            SignKind::StronglyNegative
        } else {
            SignKind::StronglyPositive
        };
        Impossibility {
            impossible_sign,
            trigger,
        }
    }))
}

/// Necessary interval for the weak opposite sign (nonpositive when
/// n - q - c_q is even, nonnegative when odd), delimited by the first
/// eigenvalues of X3 and X5. Applicable in case A when mu_z != z-1 and
/// rho_h != h-1.
pub fn necessary_interval(
    space: &TwoPointSpace,
    domain: &Domain,
    q: usize,
    settings: &SolverSettings,
) -> Result<SignPrediction> {
    if !space.check_na()? {
        return Err(Error::NaViolated);
    }
    let dd = space.derivative_space(q)?;
    if dd.sign_case != SignCase::CaseA {
        return Err(Error::NotApplicable(format!(
            "necessary interval needs case A, got {:?}",
            dd.sign_case
        )));
    }
    let (z, h) = (dd.z.unwrap(), dd.h.unwrap());
    if dd.mu_z().unwrap() == z - 1 || dd.rho_h().unwrap() == h - 1 {
        return Err(Error::NotApplicable(
            "hypothesis gate fails: mu_z = z-1 or rho_h = h-1".into(),
        ));
    }
    let n = space.n();
    let k = space.k();
    let nk_even = (n - k) % 2 == 0;
    let x3 = x3_space(space, q)?;
    let x5 = x5_space(space, q)?;
    let sign = if (n - q - dd.c_q) % 2 == 0 {
        SignKind::Nonpositive
    } else {
        SignKind::Nonnegative
    };
    let (provenance, interval) = if nk_even {
        let l1 = eig(
            "lambda_1".into(),
            space,
            domain,
            ScanDirection::FirstNegative,
            settings,
        )?;
        let l3 = eig(
            format!("lambda_3^{q}"),
            &x3,
            domain,
            ScanDirection::FirstNegative,
            settings,
        )?;
        let l5 = eig(
            format!("lambda_5^{q}"),
            &x5,
            domain,
            ScanDirection::FirstNegative,
            settings,
        )?;
        let lam_star = l3.result.lambda.max(l5.result.lambda);
        let iv = MInterval::bounded(lam_star, false, l1.result.lambda, true);
        (vec![l1, l3, l5], iv)
    } else {
        let l1 = eig(
            "lambda_1".into(),
            space,
            domain,
            ScanDirection::FirstPositive,
            settings,
        )?;
        let l3 = eig(
            format!("lambda_3^{q}"),
            &x3,
            domain,
            ScanDirection::FirstPositive,
            settings,
        )?;
        let l5 = eig(
            format!("lambda_5^{q}"),
            &x5,
            domain,
            ScanDirection::FirstPositive,
            settings,
        )?;
        let lam_star = l3.result.lambda.min(l5.result.lambda);
        let iv = MInterval::bounded(l1.result.lambda, true, lam_star, false);
        (vec![l1, l3, l5], iv)
    };
    Ok(SignPrediction {
        q,
        case: PredictionCase::CaseA,
        sign: Some(sign),
        interval: Some(interval),
        provenance,
        necessary_only: true,
        note: None,
    })
}

/// Zero-free M-interval for solutions of one reduced boundary problem.
#[derive(Debug, Clone, Serialize)]
pub struct PropositionInterval {
    pub which: &'static str,
    pub branch: String,
    pub interval: MInterval,
    pub provenance: Vec<EigenProvenance>,
}

/// Zero-free intervals for the two (n-1)-condition problems obtained by
/// dropping mu_z (first) or rho_h (second).
#[derive(Debug, Clone, Serialize)]
pub struct PropositionIntervals {
    pub p1: PropositionInterval,
    pub p2: PropositionInterval,
}

pub fn proposition_intervals(
    space: &TwoPointSpace,
    domain: &Domain,
    q: usize,
    settings: &SolverSettings,
) -> Result<PropositionIntervals> {
    if !space.check_na()? {
        return Err(Error::NaViolated);
    }
    let dd = space.derivative_space(q)?;
    if dd.sign_case != SignCase::CaseA {
        return Err(Error::NotApplicable(format!(
            "proposition intervals need case A, got {:?}",
            dd.sign_case
        )));
    }
    let n = space.n();
    let k = space.k();
    let nk_even = (n - k) % 2 == 0;
    let (z, h) = (dd.z.unwrap(), dd.h.unwrap());
    let (neg, pos) = (ScanDirection::FirstNegative, ScanDirection::FirstPositive);

    let p1 = if k > 1 {
        let gate = dd.mu_z().unwrap() != z - 1;
        if nk_even {
            if gate {
                let l3 = eig(format!("lambda_3^{q}"), &x3_space(space, q)?, domain, neg, settings)?;
                let l2 = eig(format!("lambda_2^{q}"), &x2_space(space, q)?, domain, pos, settings)?;
                PropositionInterval {
                    which: "P1",
                    branch: "k>1, mu_z != z-1, n-k even".into(),
                    interval: MInterval::bounded(l3.result.lambda, false, l2.result.lambda, false),
                    provenance: vec![l3, l2],
                }
            } else {
                let l1 = eig("lambda_1".into(), space, domain, neg, settings)?;
                let l2 = eig(format!("lambda_2^{q}"), &x2_space(space, q)?, domain, pos, settings)?;
                PropositionInterval {
                    which: "P1",
                    branch: "k>1, mu_z = z-1, n-k even".into(),
                    interval: MInterval::bounded(l1.result.lambda, false, l2.result.lambda, false),
                    provenance: vec![l1, l2],
                }
            }
        } else if gate {
            let l2 = eig(format!("lambda_2^{q}"), &x2_space(space, q)?, domain, neg, settings)?;
            let l3 = eig(format!("lambda_3^{q}"), &x3_space(space, q)?, domain, pos, settings)?;
            PropositionInterval {
                which: "P1",
                branch: "k>1, mu_z != z-1, n-k odd".into(),
                interval: MInterval::bounded(l2.result.lambda, false, l3.result.lambda, false),
                provenance: vec![l2, l3],
            }
        } else {
            let l2 = eig(format!("lambda_2^{q}"), &x2_space(space, q)?, domain, neg, settings)?;
            let l1 = eig("lambda_1".into(), space, domain, pos, settings)?;
            PropositionInterval {
                which: "P1",
                branch: "k>1, mu_z = z-1, n-k odd".into(),
                interval: MInterval::bounded(l2.result.lambda, false, l1.result.lambda, false),
                provenance: vec![l2, l1],
            }
        }
    } else {
        // k = 1: the eigenvalue space is X3 when mu_1 != 0, the original
        // space when mu_1 = 0; the interval is unbounded on the other side
        let gate = dd.mu[0] != 0;
        if nk_even {
            let prov = if gate {
                eig(format!("lambda_3^{q}"), &x3_space(space, q)?, domain, neg, settings)?
            } else {
                eig("lambda_1".into(), space, domain, neg, settings)?
            };
            PropositionInterval {
                which: "P1",
                branch: format!("k=1, mu_1 {} 0, n-k even", if gate { "!=" } else { "=" }),
                interval: MInterval {
                    lower: Some(prov.result.lambda),
                    upper: None,
                    lower_open: false,
                    upper_open: true,
                },
                provenance: vec![prov],
            }
        } else {
            let prov = if gate {
                eig(format!("lambda_3^{q}"), &x3_space(space, q)?, domain, pos, settings)?
            } else {
                eig("lambda_1".into(), space, domain, pos, settings)?
            };
            PropositionInterval {
                which: "P1",
                branch: format!("k=1, mu_1 {} 0, n-k odd", if gate { "!=" } else { "=" }),
                interval: MInterval {
                    lower: None,
                    upper: Some(prov.result.lambda),
                    lower_open: true,
                    upper_open: false,
                },
                provenance: vec![prov],
            }
        }
    };

    let p2 = if nk_even {
        let gate = dd.rho_h().unwrap() != h - 1;
        if gate {
            let l5 = eig(format!("lambda_5^{q}"), &x5_space(space, q)?, domain, neg, settings)?;
            let l4 = eig(format!("lambda_4^{q}"), &x4_space(space, q)?, domain, pos, settings)?;
            PropositionInterval {
                which: "P2",
                branch: "rho_h != h-1, n-k even".into(),
                interval: MInterval::bounded(l5.result.lambda, false, l4.result.lambda, false),
                provenance: vec![l5, l4],
            }
        } else {
            let l1 = eig("lambda_1".into(), space, domain, neg, settings)?;
            let l4 = eig(format!("lambda_4^{q}"), &x4_space(space, q)?, domain, pos, settings)?;
            PropositionInterval {
                which: "P2",
                branch: "rho_h = h-1, n-k even".into(),
                interval: MInterval::bounded(l1.result.lambda, false, l4.result.lambda, false),
                provenance: vec![l1, l4],
            }
        }
    } else if k < n - 1 {
        let gate = dd.rho_h().unwrap() != h - 1;
        if gate {
            let l4 = eig(format!("lambda_4^{q}"), &x4_space(space, q)?, domain, neg, settings)?;
            let l5 = eig(format!("lambda_5^{q}"), &x5_space(space, q)?, domain, pos, settings)?;
            PropositionInterval {
                which: "P2",
                branch: "k<n-1, rho_h != h-1, n-k odd".into(),
                interval: MInterval::bounded(l4.result.lambda, false, l5.result.lambda, false),
                provenance: vec![l4, l5],
            }
        } else {
            let l4 = eig(format!("lambda_4^{q}"), &x4_space(space, q)?, domain, neg, settings)?;
            let l1 = eig("lambda_1".into(), space, domain, pos, settings)?;
            PropositionInterval {
                which: "P2",
                branch: "k<n-1, rho_h = h-1, n-k odd".into(),
                interval: MInterval::bounded(l4.result.lambda, false, l1.result.lambda, false),
                provenance: vec![l4, l1],
            }
        }
    } else {
        // k = n-1
        let gate = dd.rho[0] != 0;
        let prov = if gate {
            eig(format!("lambda_5^{q}"), &x5_space(space, q)?, domain, pos, settings)?
        } else {
            eig("lambda_1".into(), space, domain, pos, settings)?
        };
        PropositionInterval {
            which: "P2",
            branch: format!("k=n-1, rho_1 {} 0, n-k odd", if gate { "!=" } else { "=" }),
            interval: MInterval {
                lower: None,
                upper: Some(prov.result.lambda),
                lower_open: true,
                upper_open: false,
            },
            provenance: vec![prov],
        }
    };

    Ok(PropositionIntervals { p1, p2 })
}

/// Grid verdict on the sign of the q-th derivative at one parameter M.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    /// Uniform strict sign with margin, including the endpoint derivatives.
    StrictSignConfirmed,
    /// Both signs present beyond the margin.
    SignViolated,
    /// One-signed up to the margin, but with values inside the margin band
    /// (weak sign, or strictness numerically unresolved).
    Inconclusive,
}

/// Result of a grid sign check.
#[derive(Debug, Clone, Serialize)]
pub struct SignReport {
    pub q: usize,
    #[serde(rename = "M")]
    pub m_param: f64,
    pub grid: usize,
    pub min_value: f64,
    pub max_value: f64,
    /// Derivative of order alpha^q of the q-th derivative at t = a, per s.
    pub endpoint_a: Vec<f64>,
    /// (-1)^{beta^q} times the order-beta^q derivative at t = b, per s.
    pub endpoint_b: Vec<f64>,
    pub verdict: Verdict,
    /// +1 / -1 when a dominant strict sign direction exists.
    pub dominant: Option<i8>,
}

struct SignGrid {
    values: Vec<f64>,
    endpoint_a: Vec<f64>,
    endpoint_b: Vec<f64>,
}

fn alpha_beta_q(space: &TwoPointSpace, q: usize) -> Result<(usize, usize)> {
    if q == 0 {
        Ok(space.alpha_beta())
    } else {
        let dd = space.derivative_space(q)?;
        Ok((dd.alpha_q, dd.beta_q))
    }
}

fn sign_grid(green: &GreenFunction, q: usize, grid: usize) -> Result<SignGrid> {
    let n = green.n();
    let space = green.space();
    let dom = *green.domain();
    let (alpha_q, beta_q) = alpha_beta_q(space, q)?;
    let h = dom.length() / grid as f64;
    let pts: Vec<f64> = (0..grid).map(|i| dom.a + (i as f64 + 0.5) * h).collect();
    let beta_sign = if beta_q % 2 == 0 { 1.0 } else { -1.0 };

    let per_s: Vec<Result<(Vec<f64>, f64, f64)>> = pts
        .par_iter()
        .map(|&s| {
            let profile = green.profile(s)?;
            let mut vals = Vec::with_capacity(pts.len() + 1);
            for &t in &pts {
                if q == n - 1 && t == s {
                    vals.push(profile.eval_sided(q, t, Side::Above)?);
                    vals.push(profile.eval_sided(q, t, Side::Below)?);
                } else {
                    vals.push(profile.eval(q, t)?);
                }
            }
            let ea = profile.eval_sided(q + alpha_q, dom.a, Side::Below)?;
            let eb = beta_sign * profile.eval_sided(q + beta_q, dom.b, Side::Above)?;
            Ok((vals, ea, eb))
        })
        .collect();

    let mut values = Vec::with_capacity(grid * grid);
    let mut endpoint_a = Vec::with_capacity(grid);
    let mut endpoint_b = Vec::with_capacity(grid);
    for r in per_s {
        let (vals, ea, eb) = r?;
        values.extend(vals);
        endpoint_a.push(ea);
        endpoint_b.push(eb);
    }
    Ok(SignGrid {
        values,
        endpoint_a,
        endpoint_b,
    })
}

fn classify(data: &SignGrid) -> (Verdict, Option<i8>, f64, f64) {
    let min = data.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = data.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = min.abs().max(max.abs());
    if scale == 0.0 {
        return (Verdict::Inconclusive, None, min, max);
    }
    let margin = STRICT_MARGIN * scale;
    let has_pos = max > margin;
    let has_neg = min < -margin;
    if has_pos && has_neg {
        return (Verdict::SignViolated, None, min, max);
    }
    if !has_pos && !has_neg {
        return (Verdict::Inconclusive, None, min, max);
    }
    let dominant: i8 = if has_pos { 1 } else { -1 };
    let dir = dominant as f64;
    let strict_interior = data.values.iter().all(|&v| dir * v > margin);

    let mut strict = strict_interior;
    for arr in [&data.endpoint_a, &data.endpoint_b] {
        let sc = arr.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if sc == 0.0 {
            strict = false;
            continue;
        }
        let mg = STRICT_MARGIN * sc;
        if arr.iter().any(|&v| dir * v < -mg) {
            // endpoint derivative strictly opposes the interior sign
            return (Verdict::SignViolated, Some(dominant), min, max);
        }
        if !arr.iter().all(|&v| dir * v > mg) {
            strict = false;
        }
    }
    if strict {
        (Verdict::StrictSignConfirmed, Some(dominant), min, max)
    } else {
        (Verdict::Inconclusive, Some(dominant), min, max)
    }
}

/// Evaluates the q-th derivative of g_M over an interior grid (offset h/2
/// from the boundary) plus the endpoint derivatives of definition-level
/// orders, and classifies the sign.
pub fn verify_sign(
    space: &TwoPointSpace,
    domain: &Domain,
    q: usize,
    m_param: f64,
    grid: usize,
) -> Result<SignReport> {
    if grid < 3 {
        return Err(Error::Validation("grid must be at least 3".into()));
    }
    if q > space.n() - 1 {
        return Err(Error::QOutOfRange { q, n: space.n() });
    }
    let green = build_green(space, domain, m_param)?;
    let data = sign_grid(&green, q, grid)?;
    let (verdict, dominant, min, max) = classify(&data);
    Ok(SignReport {
        q,
        m_param,
        grid,
        min_value: min,
        max_value: max,
        endpoint_a: data.endpoint_a,
        endpoint_b: data.endpoint_b,
        verdict,
        dominant,
    })
}

/// Pointwise-ordering check between two consecutive parameters of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityPair {
    pub m_low: f64,
    pub m_high: f64,
    /// max over grid points of the ordering violation (positive = violated)
    pub max_violation: f64,
    pub ordered: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepEntry {
    #[serde(rename = "M")]
    pub m_param: f64,
    pub report: SignReport,
}

/// Sweep over several M values with the pointwise monotonicity check the
/// comparison lemma asserts inside the constant-sign interval.
#[derive(Debug, Clone, Serialize)]
pub struct SweepOutcome {
    pub entries: Vec<SweepEntry>,
    pub monotonicity: Vec<MonotonicityPair>,
    pub all_ordered: bool,
    /// true = derivative decreases pointwise as M grows
    pub decreasing_in_m: bool,
}

pub fn sweep(
    space: &TwoPointSpace,
    domain: &Domain,
    q: usize,
    m_values: &[f64],
    grid: usize,
) -> Result<SweepOutcome> {
    if m_values.is_empty() {
        return Err(Error::Validation("sweep needs at least one M".into()));
    }
    let mut ms = m_values.to_vec();
    ms.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut grids: Vec<SignGrid> = Vec::with_capacity(ms.len());
    let mut entries = Vec::with_capacity(ms.len());
    for &m in &ms {
        let green = build_green(space, domain, m)?;
        let data = sign_grid(&green, q, grid)?;
        let (verdict, dominant, min, max) = classify(&data);
        entries.push(SweepEntry {
            m_param: m,
            report: SignReport {
                q,
                m_param: m,
                grid,
                min_value: min,
                max_value: max,
                endpoint_a: data.endpoint_a.clone(),
                endpoint_b: data.endpoint_b.clone(),
                verdict,
                dominant,
            },
        });
        grids.push(data);
    }

    // lemma direction: decreasing for (n-k even, positive) and
    // (n-k odd, negative); increasing otherwise
    let nk_even = (space.n() - space.k()) % 2 == 0;
    let dominant = entries
        .iter()
        .find_map(|e| e.report.dominant)
        .unwrap_or(1);
    let decreasing = nk_even == (dominant > 0);

    let mut pairs = Vec::new();
    let mut all_ordered = true;
    for w in 0..ms.len().saturating_sub(1) {
        let (lo, hi) = (&grids[w], &grids[w + 1]);
        if entries[w].report.verdict == Verdict::SignViolated
            || entries[w + 1].report.verdict == Verdict::SignViolated
        {
            continue;
        }
        let scale = lo
            .values
            .iter()
            .chain(hi.values.iter())
            .fold(0.0f64, |a, v| a.max(v.abs()));
        let slack = 1e-9 * scale;
        let mut violation = f64::NEG_INFINITY;
        for (a, b) in lo.values.iter().zip(hi.values.iter()) {
            let v = if decreasing { b - a } else { a - b };
            violation = violation.max(v);
        }
        let ordered = violation <= slack;
        all_ordered &= ordered;
        pairs.push(MonotonicityPair {
            m_low: ms[w],
            m_high: ms[w + 1],
            max_violation: violation,
            ordered,
        });
    }

    Ok(SweepOutcome {
        entries,
        monotonicity: pairs,
        all_ordered,
        decreasing_in_m: decreasing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(n: usize, l: &[usize], r: &[usize]) -> TwoPointSpace {
        TwoPointSpace::new(n, l.to_vec(), r.to_vec()).unwrap()
    }

    fn dom01() -> Domain {
        Domain::new(0.0, 1.0).unwrap()
    }

    fn settings() -> SolverSettings {
        SolverSettings::default()
    }

    #[test]
    fn ejemlono_prediction() {
        let s = sp(4, &[0, 1], &[1, 3]);
        let p = predict_interval(&s, &dom01(), 1, &settings()).unwrap();
        assert_eq!(p.case, PredictionCase::CaseA);
        assert_eq!(p.sign, Some(SignKind::StronglyPositive));
        let iv = p.interval.unwrap();
        let lo = iv.lower.unwrap();
        let hi = iv.upper.unwrap();
        assert!((lo - (-2.36f64.powi(4))).abs() < 0.5, "lower = {lo}");
        assert!((hi - 2.22f64.powi(4)).abs() < 0.2, "upper = {hi}");
        assert!(iv.lower_open && !iv.upper_open);
        // lambda^1 = min(lambda_2, lambda_4) = lambda_2 here
        let l2 = p
            .provenance
            .iter()
            .find(|e| e.name.starts_with("lambda_2"))
            .unwrap();
        let l4 = p
            .provenance
            .iter()
            .find(|e| e.name.starts_with("lambda_4"))
            .unwrap();
        assert!((l2.result.m - 2.22).abs() < 0.01);
        assert!((l4.result.m - 4.44).abs() < 0.01);
        assert!((hi - l2.result.lambda).abs() < 1e-12);
    }

    #[test]
    fn case_b_prediction() {
        let s = sp(4, &[2, 3], &[0, 1]);
        let p = predict_interval(&s, &dom01(), 2, &settings()).unwrap();
        assert_eq!(p.case, PredictionCase::CaseB);
        assert_eq!(p.sign, Some(SignKind::Nonnegative));
        let iv = p.interval.unwrap();
        assert!((iv.lower.unwrap() - (-1.8751f64.powi(4))).abs() < 0.02);
        assert_eq!(iv.upper, Some(0.0));
        assert!(iv.lower_open && !iv.upper_open);
        // q = 3 shares the same interval
        let p3 = predict_interval(&s, &dom01(), 3, &settings()).unwrap();
        assert_eq!(p3.case, PredictionCase::CaseB);
        assert!((p3.interval.unwrap().lower.unwrap() - iv.lower.unwrap()).abs() < 1e-9);
    }

    #[test]
    fn case_c_prediction_n6() {
        let s = sp(6, &[0, 2], &[1, 3, 4, 5]);
        let p = predict_interval(&s, &dom01(), 3, &settings()).unwrap();
        assert_eq!(p.case, PredictionCase::CaseC);
        assert_eq!(p.sign, Some(SignKind::Nonpositive));
        let iv = p.interval.unwrap();
        assert!((iv.lower.unwrap() - (-1.953f64.powi(6))).abs() < 0.2);
        assert_eq!(iv.upper, Some(0.0));
        // q = 4: nonnegative, same interval
        let p4 = predict_interval(&s, &dom01(), 4, &settings()).unwrap();
        assert_eq!(p4.sign, Some(SignKind::Nonnegative));
        // q = 5: nonpositive
        let p5 = predict_interval(&s, &dom01(), 5, &settings()).unwrap();
        assert_eq!(p5.sign, Some(SignKind::Nonpositive));
    }

    #[test]
    fn no_constant_sign_outcome() {
        let s = sp(4, &[0, 1], &[1, 3]);
        let p = predict_interval(&s, &dom01(), 2, &settings()).unwrap();
        assert_eq!(p.case, PredictionCase::NoConstantSign);
        assert!(p.sign.is_none() && p.interval.is_none());
    }

    #[test]
    fn na_precondition() {
        let s = sp(4, &[2, 3], &[2, 3]);
        assert!(matches!(
            predict_interval(&s, &dom01(), 1, &settings()),
            Err(Error::NaViolated)
        ));
    }

    #[test]
    fn k_n_minus_1_branch() {
        // X_{0,1,2}^{2}, q = 1: strongly negative on [lambda_2^1, lambda_1)
        let s = sp(4, &[0, 1, 2], &[2]);
        let p = predict_interval(&s, &dom01(), 1, &settings()).unwrap();
        assert_eq!(p.case, PredictionCase::CaseA);
        assert_eq!(p.sign, Some(SignKind::StronglyNegative));
        let iv = p.interval.unwrap();
        assert!((iv.lower.unwrap() - (-std::f64::consts::PI.powi(4))).abs() < 1e-6);
        assert!((iv.upper.unwrap() - 3.34f64.powi(4)).abs() < 1.6, "upper = {:?}", iv.upper);
        // q = 2: lambda_2^2 from X_{2,3}^{0,1}
        let p2 = predict_interval(&s, &dom01(), 2, &settings()).unwrap();
        let iv2 = p2.interval.unwrap();
        assert!((iv2.lower.unwrap() - (-1.87f64.powi(4))).abs() < 0.2);
    }

    #[test]
    fn k1_is_not_covered() {
        let s = sp(4, &[1], &[0, 1, 2]);
        let p = predict_interval(&s, &dom01(), 1, &settings()).unwrap();
        assert_eq!(p.case, PredictionCase::NotCoveredByTheorem);
    }

    #[test]
    fn nonexistence_examples() {
        // sigma_k = 2 = q + c_q - 1 with c_q = 2, n-q-c_q = 1 odd
        let s = sp(4, &[0, 1, 2], &[2]);
        let imp = nonexistence_check(&s, 1).unwrap().unwrap();
        assert_eq!(imp.impossible_sign, SignKind::StronglyPositive);
        // a space triggering neither hypothesis
        let s = sp(4, &[0, 1], &[1, 3]);
        assert!(nonexistence_check(&s, 1).unwrap().is_none());
    }

    #[test]
    fn nonexistence_consistent_with_prediction() {
        for (s, q) in [
            (sp(4, &[0, 1, 2], &[2]), 1usize),
            (sp(4, &[0, 1, 2], &[2]), 2),
            (sp(5, &[0, 2, 3], &[1, 3]), 1),
        ] {
            if let Ok(Some(imp)) = nonexistence_check(&s, q) {
                let p = predict_interval(&s, &dom01(), q, &settings()).unwrap();
                if let Some(sign) = p.sign {
                    assert_ne!(sign, imp.impossible_sign);
                }
            }
        }
    }

    #[test]
    fn necessary_interval_n5_example() {
        let s = sp(5, &[0, 2, 3], &[1, 3]);
        let p = necessary_interval(&s, &dom01(), 1, &settings()).unwrap();
        assert!(p.necessary_only);
        assert_eq!(p.sign, Some(SignKind::Nonpositive));
        let iv = p.interval.unwrap();
        assert!((iv.lower.unwrap() - (-2.88f64.powi(5))).abs() < 3.0, "{iv:?}");
        assert!((iv.upper.unwrap() - (-2.23f64.powi(5))).abs() < 2.0, "{iv:?}");
        let l3 = p
            .provenance
            .iter()
            .find(|e| e.name.starts_with("lambda_3"))
            .unwrap();
        assert!((l3.result.m - 3.67).abs() < 0.01);
    }

    #[test]
    fn necessary_interval_gate() {
        // ejemlono q=1 has mu_z = 0 = z-1: hypothesis fails
        let s = sp(4, &[0, 1], &[1, 3]);
        assert!(matches!(
            necessary_interval(&s, &dom01(), 1, &settings()),
            Err(Error::NotApplicable(_))
        ));
    }

    #[test]
    fn proposition_intervals_prob_example() {
        // X_{1,3}^{0,1}: P1 = [-pi^4, lambda_2^1], P2 = [lambda_1, lambda_4^1]
        let s = sp(4, &[1, 3], &[0, 1]);
        let pp = proposition_intervals(&s, &dom01(), 1, &settings()).unwrap();
        let p1 = &pp.p1;
        assert!((p1.interval.lower.unwrap() + std::f64::consts::PI.powi(4)).abs() < 1e-6);
        // X2 = X_{0}^{0,1,3}: least positive eigenvalue 4 pi^4
        assert!(
            (p1.interval.upper.unwrap() - 4.0 * std::f64::consts::PI.powi(4)).abs() < 1e-6,
            "{:?}",
            p1.interval
        );
        let p2 = &pp.p2;
        assert!((p2.interval.lower.unwrap() - (-2.365f64.powi(4))).abs() < 0.1);
        assert!(
            (p2.interval.upper.unwrap() - (std::f64::consts::PI / f64::sqrt(2.0)).powi(4)).abs()
                < 1e-6
        );
    }

    #[test]
    fn verify_sign_confirms_ejemlono_at_zero() {
        let s = sp(4, &[0, 1], &[1, 3]);
        let rep = verify_sign(&s, &dom01(), 1, 0.0, 41).unwrap();
        assert_eq!(rep.verdict, Verdict::StrictSignConfirmed, "{rep:?}");
        assert_eq!(rep.dominant, Some(1));
        assert!(rep.min_value > 0.0);
    }

    #[test]
    fn verify_sign_violates_q2() {
        let s = sp(4, &[0, 1], &[1, 3]);
        let rep = verify_sign(&s, &dom01(), 2, 0.0, 41).unwrap();
        assert_eq!(rep.verdict, Verdict::SignViolated);
    }

    #[test]
    fn verify_sign_q0_matches_strong_inverse_positive() {
        // n-k even: positive; n-k odd: negative (at M = 0 under (N_a))
        let rep = verify_sign(&sp(4, &[0, 1], &[1, 3]), &dom01(), 0, 0.0, 31).unwrap();
        assert_eq!(rep.verdict, Verdict::StrictSignConfirmed);
        assert_eq!(rep.dominant, Some(1));
        let rep = verify_sign(&sp(4, &[0, 1, 2], &[2]), &dom01(), 0, 0.0, 31).unwrap();
        assert_eq!(rep.verdict, Verdict::StrictSignConfirmed);
        assert_eq!(rep.dominant, Some(-1));
    }

    #[test]
    fn result_signo_case_b_zero_triangle() {
        // case B at M = 0: derivative vanishes for t <= s, positive above
        let s = sp(4, &[2, 3], &[0, 1]);
        let green = build_green(&s, &dom01(), 0.0).unwrap();
        for (t, sv) in [(0.2, 0.7), (0.5, 0.9), (0.1, 0.3)] {
            assert!(green.eval_q(2, t, sv).unwrap().abs() < 1e-14);
            assert!(green.eval_q(2, sv, t).unwrap() > 0.0);
        }
        let rep = verify_sign(&s, &dom01(), 2, 0.0, 31).unwrap();
        assert_eq!(rep.verdict, Verdict::Inconclusive);
        assert!(rep.min_value >= -1e-14 && rep.max_value > 0.0);
    }

    #[test]
    fn result_signo_case_c_sign() {
        // case C at M = 0: zero for t >= s, sign (-1)^{n-q} below
        let s = sp(6, &[0, 2], &[1, 3, 4, 5]);
        let green = build_green(&s, &dom01(), 0.0).unwrap();
        for (t, sv) in [(0.7, 0.2), (0.9, 0.5)] {
            assert!(green.eval_q(3, t, sv).unwrap().abs() < 1e-12);
            // q = 3 = n - 3, l = 3 odd: negative below the diagonal
            assert!(green.eval_q(3, sv, t).unwrap() < 0.0);
        }
    }

    #[test]
    fn sweep_monotone_in_interval() {
        let s = sp(4, &[0, 1], &[1, 3]);
        let out = sweep(&s, &dom01(), 1, &[-30.0, 0.0, 20.0], 21).unwrap();
        assert!(out.decreasing_in_m);
        assert!(out.all_ordered, "{:?}", out.monotonicity);
    }

    #[test]
    fn sweep_case_b_loses_sign_above_zero() {
        let s = sp(4, &[2, 3], &[0, 1]);
        let out = sweep(&s, &dom01(), 2, &[-10.0, -1.0, 0.0, 1.0], 21).unwrap();
        let verdicts: Vec<Verdict> = out.entries.iter().map(|e| e.report.verdict).collect();
        assert_ne!(verdicts[0], Verdict::SignViolated);
        assert_ne!(verdicts[1], Verdict::SignViolated);
        assert_ne!(verdicts[2], Verdict::SignViolated);
        assert_eq!(verdicts[3], Verdict::SignViolated);
    }

    #[test]
    fn lower_derivative_inherits_constant_sign() {
        // if q2 confirms strict sign and c_{q1} + d_{q1} = n - q1, q1 holds too
        let s = sp(4, &[0, 1], &[1, 3]);
        let m = 10.0;
        let rep3 = verify_sign(&s, &dom01(), 3, m, 21).unwrap();
        // q = 3 is case C here: nonpositive, not strict; use q2 = 1 over q1 = 0
        let rep1 = verify_sign(&s, &dom01(), 1, m, 21).unwrap();
        if rep1.verdict == Verdict::StrictSignConfirmed {
            let dd0 = (s.k(), s.n() - s.k());
            assert_eq!(dd0.0 + dd0.1, s.n());
            let rep0 = verify_sign(&s, &dom01(), 0, m, 21).unwrap();
            assert_eq!(rep0.verdict, Verdict::StrictSignConfirmed);
        }
        let _ = rep3;
    }
}
