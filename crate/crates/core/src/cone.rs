//! Cone machinery for positive solutions of the nonlinear problem
//! T_n[M] u = f(t, u, ..., u^(n-1)).
//!
//! For M inside the constant-sign interval (n - k even branch) the Green's
//! function admits a two-sided envelope phi(s) k1(t) <= g_M(t,s) <=
//! phi(s) k2(t) with phi(s) = (s-a)^eta (b-s)^gamma, and analogous
//! envelopes for the case-A derivatives. The envelopes define the cone of
//! nonnegative functions with Harnack-type lower bounds in which the
//! integral operator L_M keeps its iterates. The endpoint values of the
//! extended ratio are analytic limits through eta-th / gamma-th
//! s-derivatives of g, computed by one-sided high-order finite differences.

use crate::basis::Domain;
use crate::error::{Error, Result};
use crate::green::{build_green, GreenFunction, Side};
use crate::quad::{fd_weights, lagrange_uniform, GL16};
use crate::sign::{verify_sign, Verdict};
use crate::spaces::{SignCase, TwoPointSpace};
use rayon::prelude::*;
use serde::Serialize;

/// A function and its derivatives 0..n-1 sampled on a uniform grid that
/// includes both endpoints. Off-grid evaluation uses local 8-point
/// Lagrange interpolation.
#[derive(Debug, Clone, Serialize)]
pub struct GridFunction {
    pub grid: Vec<f64>,
    /// derivs[c][i] = u^(c)(grid[i])
    pub derivs: Vec<Vec<f64>>,
}

impl GridFunction {
    pub fn zero(grid: Vec<f64>, n_derivs: usize) -> Self {
        let m = grid.len();
        GridFunction {
            grid,
            derivs: vec![vec![0.0; m]; n_derivs],
        }
    }

    pub fn from_fn(grid: Vec<f64>, n_derivs: usize, f: impl Fn(usize, f64) -> f64) -> Self {
        let derivs = (0..n_derivs)
            .map(|c| grid.iter().map(|&t| f(c, t)).collect())
            .collect();
        GridFunction { grid, derivs }
    }

    pub fn eval(&self, c: usize, x: f64) -> f64 {
        lagrange_uniform(&self.grid, &self.derivs[c], x, 8)
    }

    pub fn sup_norm(&self, c: usize) -> f64 {
        self.derivs[c].iter().fold(0.0f64, |a, v| a.max(v.abs()))
    }

    /// max over derivative orders and grid points of |self - other|
    pub fn max_diff(&self, other: &GridFunction) -> f64 {
        let mut d = 0.0f64;
        for (a, b) in self.derivs.iter().zip(&other.derivs) {
            for (x, y) in a.iter().zip(b) {
                d = d.max((x - y).abs());
            }
        }
        d
    }
}

/// Envelope data for one case-A derivative order entering the cone.
#[derive(Debug, Clone, Serialize)]
pub struct QEnvelope {
    pub q: usize,
    pub d_q: usize,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub k1_max: f64,
    pub k2_max: f64,
}

/// phi exponents, tabulated envelope functions and the scalar constants of
/// the cone construction.
#[derive(Debug, Clone, Serialize)]
pub struct ConeEnvelope {
    pub space: TwoPointSpace,
    pub domain: Domain,
    #[serde(rename = "M")]
    pub m_param: f64,
    pub eta: usize,
    pub gamma: usize,
    pub t_grid: Vec<f64>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub per_q: Vec<QEnvelope>,
    pub k1_max: f64,
    pub k2_max: f64,
    /// min |k1| over the subinterval i1, with exact endpoint evaluation
    pub m1: f64,
    pub i1: (f64, f64),
}

impl ConeEnvelope {
    pub fn phi(&self, s: f64) -> f64 {
        (s - self.domain.a).powi(self.eta as i32) * (self.domain.b - s).powi(self.gamma as i32)
    }

    pub fn q_envelope(&self, q: usize) -> Option<&QEnvelope> {
        self.per_q.iter().find(|e| e.q == q)
    }
}

/// Extended-ratio evaluator: sign * d^q g(t, s) / phi(s) with analytic
/// endpoint limits at s = a and s = b.
struct RatioEvaluator<'g> {
    green: &'g GreenFunction,
    eta: usize,
    gamma: usize,
    s_interior: Vec<f64>,
    stencil_a: Vec<f64>,
    stencil_b: Vec<f64>,
    weights_a: Vec<f64>,
    weights_b: Vec<f64>,
}

impl<'g> RatioEvaluator<'g> {
    fn new(green: &'g GreenFunction, eta: usize, gamma: usize, grid: usize) -> Self {
        let dom = *green.domain();
        let len = dom.length();
        let h = len / grid as f64;
        let s_interior = (0..grid).map(|j| dom.a + (j as f64 + 0.5) * h).collect();
        let build = |deriv: usize, at_a: bool| -> (Vec<f64>, Vec<f64>) {
            if deriv == 0 {
                let x0 = if at_a { dom.a } else { dom.b };
                return (vec![x0], vec![1.0]);
            }
            let p = deriv + 5;
            let delta = len * 1e-16f64.powf(1.0 / (deriv + 5) as f64);
            let pts: Vec<f64> = (0..p)
                .map(|j| {
                    if at_a {
                        dom.a + j as f64 * delta
                    } else {
                        dom.b - j as f64 * delta
                    }
                })
                .collect();
            let x0 = if at_a { dom.a } else { dom.b };
            let w = fd_weights(x0, &pts, deriv);
            (pts, w)
        };
        let (stencil_a, weights_a) = build(eta, true);
        let (stencil_b, weights_b) = build(gamma, false);
        RatioEvaluator {
            green,
            eta,
            gamma,
            s_interior,
            stencil_a,
            stencil_b,
            weights_a,
            weights_b,
        }
    }

    fn phi(&self, s: f64) -> f64 {
        let dom = self.green.domain();
        (s - dom.a).powi(self.eta as i32) * (dom.b - s).powi(self.gamma as i32)
    }

    /// eta-th s-derivative limit of sign * d^q g at s = a, divided by
    /// eta! (b-a)^gamma. The stencil shrinks when t sits closer to a than
    /// the default stencil width (the ratio kinks at s = t).
    fn limit_a(&self, q: usize, t: f64, sign: f64) -> Result<f64> {
        let dom = self.green.domain();
        let (pts, w);
        let (pts_ref, w_ref): (&[f64], &[f64]) =
            if t > dom.a && t <= *self.stencil_a.last().unwrap() && self.eta > 0 {
                let p = self.stencil_a.len();
                let delta = (t - dom.a) / (p as f64 + 1.0);
                pts = (0..p).map(|j| dom.a + j as f64 * delta).collect::<Vec<_>>();
                w = fd_weights(dom.a, &pts, self.eta);
                (&pts, &w)
            } else {
                (&self.stencil_a, &self.weights_a)
            };
        let mut deriv = 0.0;
        for (&s, &wi) in pts_ref.iter().zip(w_ref) {
            deriv += wi * self.green.eval_dq(q, t, s, side_for(t, s))?;
        }
        let scale = factorial(self.eta) * dom.length().powi(self.gamma as i32);
        Ok(sign * deriv / scale)
    }

    /// (-1)^gamma gamma-th s-derivative limit at s = b over
    /// gamma! (b-a)^eta.
    fn limit_b(&self, q: usize, t: f64, sign: f64) -> Result<f64> {
        let dom = self.green.domain();
        let (pts, w);
        let (pts_ref, w_ref): (&[f64], &[f64]) =
            if t < dom.b && t >= *self.stencil_b.last().unwrap() && self.gamma > 0 {
                let p = self.stencil_b.len();
                let delta = (dom.b - t) / (p as f64 + 1.0);
                pts = (0..p).map(|j| dom.b - j as f64 * delta).collect::<Vec<_>>();
                w = fd_weights(dom.b, &pts, self.gamma);
                (&pts, &w)
            } else {
                (&self.stencil_b, &self.weights_b)
            };
        let mut deriv = 0.0;
        for (&s, &wi) in pts_ref.iter().zip(w_ref) {
            deriv += wi * self.green.eval_dq(q, t, s, side_for(t, s))?;
        }
        let gsign = if self.gamma % 2 == 0 { 1.0 } else { -1.0 };
        let scale = factorial(self.gamma) * dom.length().powi(self.eta as i32);
        Ok(sign * gsign * deriv / scale)
    }

    /// (min, max) of the extended ratio over s for one t.
    fn min_max(&self, q: usize, t: f64, sign: f64) -> Result<(f64, f64)> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for &s in &self.s_interior {
            let v = sign * self.green.eval_dq(q, t, s, side_for(t, s))? / self.phi(s);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        for v in [self.limit_a(q, t, sign)?, self.limit_b(q, t, sign)?] {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Ok((lo, hi))
    }
}

fn side_for(t: f64, s: f64) -> Side {
    if t >= s {
        Side::Above
    } else {
        Side::Below
    }
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Max of |values| with 3-point parabolic refinement at interior extrema.
fn refined_max_abs(ts: &[f64], values: &[f64]) -> f64 {
    let mut best = 0.0f64;
    let mut arg = 0usize;
    for (i, v) in values.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            arg = i;
        }
    }
    if arg > 0 && arg + 1 < values.len() {
        best = best.max(parabolic_extremum(
            ts[arg - 1],
            ts[arg],
            ts[arg + 1],
            values[arg - 1].abs(),
            values[arg].abs(),
            values[arg + 1].abs(),
        ));
    }
    best
}

fn parabolic_extremum(x0: f64, x1: f64, x2: f64, y0: f64, y1: f64, y2: f64) -> f64 {
    let d1 = (y1 - y0) / (x1 - x0);
    let d2 = (y2 - y1) / (x2 - x1);
    let a = (d2 - d1) / (x2 - x0);
    if a == 0.0 {
        return y1;
    }
    let xv = 0.5 * ((x0 + x1) - d1 / a);
    let at = |x: f64| y0 + d1 * (x - x0) + a * (x - x0) * (x - x1);
    if xv > x0 && xv < x2 {
        at(xv)
    } else {
        y1
    }
}

/// Builds the cone envelope from a Green's function whose base sign (and
/// the signs of the case-A derivatives in `q_list`) is confirmed by grid
/// checks. Only the positive branch (n - k even) is covered: the negative
/// one reduces to it through the reflected problem.
pub fn build_envelope(
    green: &GreenFunction,
    q_list: &[usize],
    i1: (f64, f64),
    grid: usize,
) -> Result<ConeEnvelope> {
    let space = green.space().clone();
    let domain = *green.domain();
    let n = space.n();
    if (n - space.k()) % 2 != 0 {
        return Err(Error::NotApplicable(
            "envelope construction covers the positive branch (n - k even) only".into(),
        ));
    }
    if grid < 8 {
        return Err(Error::Validation("envelope grid must be at least 8".into()));
    }
    if !(i1.0 >= domain.a && i1.1 <= domain.b && i1.0 < i1.1) {
        return Err(Error::Validation(format!(
            "I1 = [{}, {}] must be a subinterval of the domain",
            i1.0, i1.1
        )));
    }

    let check_grid = grid.min(61);
    let base = verify_sign(&space, &domain, 0, green.m_param(), check_grid)?;
    if base.verdict != Verdict::StrictSignConfirmed || base.dominant != Some(1) {
        return Err(Error::NotApplicable(format!(
            "base sign not confirmed strictly positive at M = {} (verdict {:?})",
            green.m_param(),
            base.verdict
        )));
    }

    // classify requested derivative orders
    let mut case_a: Vec<(usize, usize)> = Vec::new(); // (q, d_q)
    for &q in q_list {
        let dd = space.derivative_space(q)?;
        match dd.sign_case {
            SignCase::CaseA => {
                let rep = verify_sign(&space, &domain, q, green.m_param(), check_grid)?;
                let want: i8 = if dd.d_q % 2 == 0 { 1 } else { -1 };
                if rep.verdict != Verdict::StrictSignConfirmed || rep.dominant != Some(want) {
                    return Err(Error::NotApplicable(format!(
                        "derivative q = {q} sign not confirmed (verdict {:?})",
                        rep.verdict
                    )));
                }
                case_a.push((q, dd.d_q));
            }
            SignCase::CaseC => {
                let rep = verify_sign(&space, &domain, q, green.m_param(), check_grid)?;
                if rep.verdict == Verdict::SignViolated {
                    return Err(Error::NotApplicable(format!(
                        "derivative q = {q} sign violated at M = {}",
                        green.m_param()
                    )));
                }
                // sign-only block; no envelope
            }
            SignCase::CaseB => {
                return Err(Error::NotApplicable(
                    "case-B derivative blocks belong to the K* cone variant, \
                     which is not implemented"
                        .into(),
                ));
            }
            SignCase::NoConstantSign => {
                return Err(Error::NotApplicable(format!(
                    "derivative q = {q} has no constant-sign parameter set"
                    )));
            }
        }
    }

    let (eta, gamma) = space.eta_gamma()?;
    let ev = RatioEvaluator::new(green, eta, gamma, grid);
    let t_grid: Vec<f64> = (0..=grid)
        .map(|i| domain.a + i as f64 * domain.length() / grid as f64)
        .collect();

    let base_rows: Vec<Result<(f64, f64)>> =
        t_grid.par_iter().map(|&t| ev.min_max(0, t, 1.0)).collect();
    let mut k1 = Vec::with_capacity(t_grid.len());
    let mut k2 = Vec::with_capacity(t_grid.len());
    for row in base_rows {
        let (lo, hi) = row?;
        k1.push(lo);
        k2.push(hi);
    }

    let mut per_q = Vec::new();
    for &(q, d_q) in &case_a {
        let sign = if d_q % 2 == 0 { 1.0 } else { -1.0 };
        let rows: Vec<Result<(f64, f64)>> =
            t_grid.par_iter().map(|&t| ev.min_max(q, t, sign)).collect();
        let mut k1q = Vec::with_capacity(t_grid.len());
        let mut k2q = Vec::with_capacity(t_grid.len());
        for row in rows {
            let (lo, hi) = row?;
            k1q.push(lo);
            k2q.push(hi);
        }
        let k1_max = refined_max_abs(&t_grid, &k1q);
        let k2_max = refined_max_abs(&t_grid, &k2q);
        per_q.push(QEnvelope {
            q,
            d_q,
            k1: k1q,
            k2: k2q,
            k1_max,
            k2_max,
        });
    }

    // m1: min |k1| over I1, sampling grid points inside plus the exact
    // endpoints of I1
    let mut m1 = f64::INFINITY;
    for (&t, v) in t_grid.iter().zip(&k1) {
        if t >= i1.0 && t <= i1.1 {
            m1 = m1.min(v.abs());
        }
    }
    for t in [i1.0, i1.1] {
        let (lo, _) = ev.min_max(0, t, 1.0)?;
        m1 = m1.min(lo.abs());
    }
    if !m1.is_finite() || m1 <= 0.0 {
        return Err(Error::Numerical(format!(
            "k1 is not bounded away from zero on I1 = [{}, {}] (m1 = {m1})",
            i1.0, i1.1
        )));
    }

    let k1_max = refined_max_abs(&t_grid, &k1);
    let k2_max = refined_max_abs(&t_grid, &k2);
    Ok(ConeEnvelope {
        space,
        domain,
        m_param: green.m_param(),
        eta,
        gamma,
        t_grid,
        k1,
        k2,
        per_q,
        k1_max,
        k2_max,
        m1,
        i1,
    })
}

/// Margin of one cone condition: min over the grid of (LHS - RHS); the
/// condition holds when the margin is nonnegative (up to rounding).
#[derive(Debug, Clone, Serialize)]
pub struct ConditionMargin {
    pub name: String,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MembershipReport {
    pub member: bool,
    pub conditions: Vec<ConditionMargin>,
}

/// Checks the cone conditions for a sampled function: nonnegativity, the
/// signed-derivative conditions per block, and the Harnack-type lower
/// bounds from the envelope.
pub fn cone_membership(
    u: &GridFunction,
    envelope: &ConeEnvelope,
    q_list: &[usize],
) -> Result<MembershipReport> {
    if u.grid.len() != envelope.t_grid.len() {
        return Err(Error::Validation(format!(
            "sample grid ({}) does not match envelope grid ({})",
            u.grid.len(),
            envelope.t_grid.len()
        )));
    }
    let n = envelope.space.n();
    let mut conditions = Vec::new();

    let min0 = u.derivs[0].iter().cloned().fold(f64::INFINITY, f64::min);
    conditions.push(ConditionMargin {
        name: "u >= 0".into(),
        margin: min0,
    });

    let sup0 = u.sup_norm(0);
    let mut harnack = f64::INFINITY;
    for (i, &v) in u.derivs[0].iter().enumerate() {
        harnack = harnack.min(v - envelope.k1[i] / envelope.k2_max * sup0);
    }
    conditions.push(ConditionMargin {
        name: "u >= k1/k2 * sup|u|".into(),
        margin: harnack,
    });

    for &q in q_list {
        let dd = envelope.space.derivative_space(q)?;
        match dd.sign_case {
            SignCase::CaseA => {
                let env = envelope.q_envelope(q).ok_or_else(|| {
                    Error::Validation(format!("envelope has no derivative data for q = {q}"))
                })?;
                let sign = if dd.d_q % 2 == 0 { 1.0 } else { -1.0 };
                let vals: Vec<f64> = u.derivs[q].iter().map(|&v| sign * v).collect();
                let minq = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                conditions.push(ConditionMargin {
                    name: format!("(-1)^d_q u^({q}) >= 0"),
                    margin: minq,
                });
                let supq = u.sup_norm(q);
                let mut hm = f64::INFINITY;
                for (i, &v) in vals.iter().enumerate() {
                    hm = hm.min(v - env.k1[i] / env.k2_max * supq);
                }
                conditions.push(ConditionMargin {
                    name: format!("(-1)^d_q u^({q}) >= k1^q/k2^q * sup|u^({q})|"),
                    margin: hm,
                });
            }
            SignCase::CaseC => {
                let sign = if (n - q) % 2 == 0 { 1.0 } else { -1.0 };
                let minq = u.derivs[q]
                    .iter()
                    .map(|&v| sign * v)
                    .fold(f64::INFINITY, f64::min);
                conditions.push(ConditionMargin {
                    name: format!("(-1)^(n-q) u^({q}) >= 0"),
                    margin: minq,
                });
            }
            SignCase::CaseB => {
                return Err(Error::NotApplicable(
                    "case-B derivative blocks belong to the K* cone variant".into(),
                ));
            }
            SignCase::NoConstantSign => {
                return Err(Error::Validation(format!(
                    "q = {q} carries no sign condition"
                )));
            }
        }
    }

    let slack = 1e-12 * (1.0 + sup0);
    let member = conditions.iter().all(|c| c.margin >= -slack);
    Ok(MembershipReport { member, conditions })
}

/// Right-hand side nonlinearity f(t, u, u', ..., u^(n-1)).
#[derive(Debug, Clone, Serialize)]
pub enum Nonlinearity {
    Builtin(BuiltinF),
    /// u-independent source term, linear interpolation over (t, value) rows
    Table(Vec<(f64, f64)>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BuiltinF {
    /// f = 1
    One,
    /// f = (t^4 + 1) (exp(-|x|_2) + 1 / ln(e + |x|_1))
    QuarticDecayLog,
}

impl Nonlinearity {
    pub fn parse(spec: &str) -> Result<Nonlinearity> {
        match spec.strip_prefix("builtin:") {
            Some("one") => Ok(Nonlinearity::Builtin(BuiltinF::One)),
            Some("quartic_decay_log") => Ok(Nonlinearity::Builtin(BuiltinF::QuarticDecayLog)),
            Some(other) => Err(Error::Validation(format!("unknown builtin f '{other}'"))),
            None => Err(Error::Validation(format!(
                "nonlinearity spec '{spec}' is neither builtin:<name> nor a loaded table"
            ))),
        }
    }

    pub fn eval(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            Nonlinearity::Builtin(BuiltinF::One) => 1.0,
            Nonlinearity::Builtin(BuiltinF::QuarticDecayLog) => {
                let norm2 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let norm1 = x.iter().map(|v| v.abs()).sum::<f64>();
                (t.powi(4) + 1.0)
                    * ((-norm2).exp() + 1.0 / (std::f64::consts::E + norm1).ln())
            }
            Nonlinearity::Table(rows) => {
                if rows.is_empty() {
                    return 0.0;
                }
                if t <= rows[0].0 {
                    return rows[0].1;
                }
                if t >= rows[rows.len() - 1].0 {
                    return rows[rows.len() - 1].1;
                }
                let idx = rows.partition_point(|&(x0, _)| x0 <= t) - 1;
                let (x0, y0) = rows[idx];
                let (x1, y1) = rows[idx + 1];
                y0 + (y1 - y0) * (t - x0) / (x1 - x0)
            }
        }
    }
}

/// The nonlinear fixed-point problem T_n[M] u = f(t, u, ..., u^(n-1)).
#[derive(Debug, Clone)]
pub struct NonlinearProblem {
    pub space: TwoPointSpace,
    pub domain: Domain,
    pub m_param: f64,
    pub f: Nonlinearity,
    /// derivative orders entering the cone
    pub q_list: Vec<usize>,
    /// subinterval on which k1 is bounded away from zero
    pub i1: (f64, f64),
    /// output grid intervals (grid + 1 sample points)
    pub grid: usize,
    /// quadrature panels across [a, b]; each output point splits them at
    /// the kink s = t
    pub panels: usize,
}

impl NonlinearProblem {
    pub fn new(
        space: TwoPointSpace,
        domain: Domain,
        m_param: f64,
        f: Nonlinearity,
        q_list: Vec<usize>,
        i1: (f64, f64),
    ) -> Result<Self> {
        space.require_balanced()?;
        let p = NonlinearProblem {
            space,
            domain,
            m_param,
            f,
            q_list,
            i1,
            grid: 120,
            panels: 8,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.panels < 2 {
            return Err(Error::Validation("quadrature needs at least 2 panels".into()));
        }
        if self.grid < 8 {
            return Err(Error::Validation("output grid must have at least 8 intervals".into()));
        }
        // sampled nonnegativity of f
        let n = self.space.n();
        for i in 0..=16 {
            let t = self.domain.a + self.domain.length() * i as f64 / 16.0;
            for scale in [0.0, 0.5, 3.0] {
                let x = vec![scale; n];
                let v = self.f.eval(t, &x);
                if !(v >= 0.0) {
                    return Err(Error::Validation(format!(
                        "f({t}, {scale}, ...) = {v} is negative"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn output_grid(&self) -> Vec<f64> {
        (0..=self.grid)
            .map(|i| self.domain.a + i as f64 * self.domain.length() / self.grid as f64)
            .collect()
    }
}

fn apply_with(
    green: &GreenFunction,
    problem: &NonlinearProblem,
    u: &GridFunction,
) -> Result<GridFunction> {
    let n = problem.space.n();
    let dom = problem.domain;
    let out_grid = problem.output_grid();
    let source = |s: f64| -> f64 {
        let x: Vec<f64> = (0..n).map(|c| u.eval(c, s)).collect();
        problem.f.eval(s, &x)
    };

    let columns: Vec<Result<Vec<f64>>> = out_grid
        .par_iter()
        .map(|&t| {
            let mut acc = vec![0.0f64; n];
            let mut add_range = |lo: f64, hi: f64| -> Result<()> {
                if hi - lo <= 0.0 {
                    return Ok(());
                }
                let frac = (hi - lo) / dom.length();
                let panels = ((problem.panels as f64 * frac).ceil() as usize).max(1);
                let width = (hi - lo) / panels as f64;
                for p in 0..panels {
                    let mid = lo + (p as f64 + 0.5) * width;
                    let half = 0.5 * width;
                    for &(xg, wg) in &GL16 {
                        let s = mid + half * xg;
                        let fs = source(s);
                        if !fs.is_finite() {
                            return Err(Error::Numerical(format!(
                                "f evaluated to {fs} at s = {s}"
                            )));
                        }
                        let profile = green.profile(s)?;
                        for (c, a) in acc.iter_mut().enumerate() {
                            *a += wg * half * fs * profile.eval_sided(c, t, side_for(t, s))?;
                        }
                    }
                }
                Ok(())
            };
            add_range(dom.a, t)?;
            add_range(t, dom.b)?;
            Ok(acc)
        })
        .collect();

    let mut derivs = vec![vec![0.0; out_grid.len()]; n];
    for (i, col) in columns.into_iter().enumerate() {
        let col = col?;
        for (c, row) in derivs.iter_mut().enumerate() {
            row[i] = col[c];
        }
    }
    Ok(GridFunction {
        grid: out_grid,
        derivs,
    })
}

/// Applies the integral operator L_M: u -> integral of g_M(t,s)
/// f(s, u(s), ..., u^(n-1)(s)) ds, returning the image with derivatives up
/// to n-1 (differentiating g under the integral, the kink split keeping
/// the top order valid).
pub fn apply_l(problem: &NonlinearProblem, u: &GridFunction) -> Result<GridFunction> {
    problem.validate()?;
    let green = build_green(&problem.space, &problem.domain, problem.m_param)?;
    apply_with(&green, problem, u)
}

/// Result of the Picard iteration demonstrator.
#[derive(Debug, Clone, Serialize)]
pub struct PicardOutcome {
    pub iterate: GridFunction,
    pub iterations: usize,
    pub converged: bool,
    /// sup-norm fixed-point residual max |u - L_M u| over derivatives
    pub residual: f64,
    pub membership: MembershipReport,
}

/// Picard iteration u <- (1 - omega) u + omega L_M u from u0 (default: the
/// image of the zero function). Non-convergence is a reported outcome, not
/// an error; the result certifies the final residual and cone membership.
pub fn picard_solve(
    problem: &NonlinearProblem,
    u0: Option<GridFunction>,
    max_iterations: usize,
    tol: f64,
    omega: f64,
) -> Result<PicardOutcome> {
    problem.validate()?;
    if !(omega > 0.0 && omega <= 1.0) {
        return Err(Error::Validation("omega must lie in (0, 1]".into()));
    }
    let green = build_green(&problem.space, &problem.domain, problem.m_param)?;
    let n = problem.space.n();
    let zero = GridFunction::zero(problem.output_grid(), n);
    let mut u = match u0 {
        Some(g) => g,
        None => apply_with(&green, problem, &zero)?,
    };
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..max_iterations {
        let lu = apply_with(&green, problem, &u)?;
        let diff = u.max_diff(&lu);
        if omega == 1.0 {
            u = lu;
        } else {
            for (uc, lc) in u.derivs.iter_mut().zip(&lu.derivs) {
                for (uv, lv) in uc.iter_mut().zip(lc) {
                    *uv = (1.0 - omega) * *uv + omega * lv;
                }
            }
        }
        iterations += 1;
        if diff < tol {
            converged = true;
            break;
        }
    }
    let lu = apply_with(&green, problem, &u)?;
    let residual = u.max_diff(&lu);
    let envelope = build_envelope(&green, &problem.q_list, problem.i1, problem.grid)?;
    let membership = cone_membership(&u, &envelope, &problem.q_list)?;
    Ok(PicardOutcome {
        iterate: u,
        iterations,
        converged,
        residual,
        membership,
    })
}

/// Finite-sample growth diagnostic for the superlinear-at-zero /
/// sublinear-at-infinity conditions on f. Reports the ratio
/// f / (|x_1| + ... + |x_n|) along geometric argument scales; trends only,
/// no claim of verification (the conditions are asymptotic).
#[derive(Debug, Clone, Serialize)]
pub struct GrowthDiagnostic {
    /// (scale, min over t of ratio) for scales -> 0; superlinearity at zero
    /// shows as growth
    pub near_zero: Vec<(f64, f64)>,
    /// (scale, max over t of ratio) for scales -> infinity; sublinearity
    /// shows as decay
    pub near_infinity: Vec<(f64, f64)>,
}

pub fn growth_diagnostic(problem: &NonlinearProblem) -> GrowthDiagnostic {
    let n = problem.space.n();
    let ts: Vec<f64> = (0..=16)
        .map(|i| problem.domain.a + problem.domain.length() * i as f64 / 16.0)
        .collect();
    let ratio = |scale: f64, minimize: bool| -> f64 {
        let x = vec![scale; n];
        let denom = scale * n as f64;
        let vals = ts.iter().map(|&t| problem.f.eval(t, &x) / denom);
        if minimize {
            vals.fold(f64::INFINITY, f64::min)
        } else {
            vals.fold(f64::NEG_INFINITY, f64::max)
        }
    };
    GrowthDiagnostic {
        near_zero: (1..=8).map(|k| {
            let s = 10f64.powi(-k);
            (s, ratio(s, true))
        }).collect(),
        near_infinity: (1..=8).map(|k| {
            let s = 10f64.powi(k);
            (s, ratio(s, false))
        }).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example_space() -> TwoPointSpace {
        TwoPointSpace::new(4, vec![0, 1], vec![1, 3]).unwrap()
    }

    fn dom01() -> Domain {
        Domain::new(0.0, 1.0).unwrap()
    }

    fn example_green() -> GreenFunction {
        build_green(&example_space(), &dom01(), 0.0).unwrap()
    }

    fn example_envelope(grid: usize) -> ConeEnvelope {
        build_envelope(&example_green(), &[1], (1.0 / 6.0, 1.0), grid).unwrap()
    }

    #[test]
    fn phi_exponents() {
        let env = example_envelope(40);
        assert_eq!((env.eta, env.gamma), (2, 0));
        assert!((env.phi(0.5) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn envelope_matches_closed_forms() {
        // k1(t) = t^2 (3 - 2t) / 12, k2(t) = t (2 - t) / 4,
        // k1^1(t) = t (1 - t) / 2, k2^1(t) = (1 - t) / 2
        let env = example_envelope(50);
        for (i, &t) in env.t_grid.iter().enumerate() {
            let k1 = t * t * (3.0 - 2.0 * t) / 12.0;
            let k2 = t * (2.0 - t) / 4.0;
            assert!((env.k1[i] - k1).abs() < 1e-8, "t = {t}: {} vs {k1}", env.k1[i]);
            assert!((env.k2[i] - k2).abs() < 1e-8, "t = {t}: {} vs {k2}", env.k2[i]);
            let e1 = env.q_envelope(1).unwrap();
            let k11 = t * (1.0 - t) / 2.0;
            let k21 = (1.0 - t) / 2.0;
            assert!((e1.k1[i] - k11).abs() < 1e-8);
            assert!((e1.k2[i] - k21).abs() < 1e-8);
        }
    }

    #[test]
    fn envelope_scalar_constants() {
        let env = example_envelope(60);
        // maxima of the closed forms: 1/12, 1/4, 1/8, 1/2; m1 = k1(1/6) = 1/162
        assert!((env.k1_max - 1.0 / 12.0).abs() < 1e-6, "k1_max = {}", env.k1_max);
        assert!((env.k2_max - 0.25).abs() < 1e-6);
        let e1 = env.q_envelope(1).unwrap();
        assert!((e1.k1_max - 0.125).abs() < 1e-6, "k1^1_max = {}", e1.k1_max);
        assert!((e1.k2_max - 0.5).abs() < 1e-6);
        assert!((env.m1 - 1.0 / 162.0).abs() < 1e-6, "m1 = {}", env.m1);
    }

    #[test]
    fn envelope_brackets_green_function() {
        let env = example_envelope(40);
        let g = example_green();
        let tol = 1e-9;
        for i in 1..40 {
            let s = i as f64 / 40.0;
            let profile = g.profile(s).unwrap();
            for (j, &t) in env.t_grid.iter().enumerate() {
                let val = profile.eval(0, t).unwrap();
                let phi = env.phi(s);
                assert!(phi * env.k1[j] <= val + tol, "lower fails at ({t}, {s})");
                assert!(val <= phi * env.k2[j] + tol, "upper fails at ({t}, {s})");
            }
        }
    }

    #[test]
    fn envelope_sharpness() {
        // the min over s is attained (within tolerance) at a sampled s
        let env = example_envelope(40);
        let g = example_green();
        let t = env.t_grid[20];
        let j = 20;
        let mut closest = f64::INFINITY;
        for i in 0..200 {
            let s = (i as f64 + 0.5) / 200.0;
            let v = g.eval_q(0, t, s).unwrap() / env.phi(s);
            closest = closest.min((v - env.k1[j]).abs());
        }
        // include the endpoint limit (attained at s = b here)
        let vb = g.eval_q(0, t, 1.0 - 1e-9).unwrap() / env.phi(1.0 - 1e-9);
        closest = closest.min((vb - env.k1[j]).abs());
        assert!(closest < 1e-6, "min not attained: gap {closest}");
    }

    #[test]
    fn rejects_odd_branch_and_unconfirmed_signs() {
        // n - k odd
        let space = TwoPointSpace::new(4, vec![0, 1, 2], vec![2]).unwrap();
        let g = build_green(&space, &dom01(), 0.0).unwrap();
        assert!(matches!(
            build_envelope(&g, &[], (0.2, 0.8), 20),
            Err(Error::NotApplicable(_))
        ));
        // q = 2 for the example space has no constant sign
        let g = example_green();
        assert!(build_envelope(&g, &[2], (0.2, 0.8), 20).is_err());
    }

    fn member_function(c: f64, grid: Vec<f64>) -> GridFunction {
        // u = c t^2 (3 - 2t) / 3: in the cone with q_list = {1, 3}
        GridFunction::from_fn(grid, 4, move |d, t| match d {
            0 => c * t * t * (3.0 - 2.0 * t) / 3.0,
            1 => 2.0 * c * t * (1.0 - t),
            2 => 2.0 * c * (1.0 - 2.0 * t) / 1.0,
            _ => -4.0 * c / 3.0 * 1.0,
        })
    }

    #[test]
    fn membership_examples() {
        let env = example_envelope(40);
        let u = member_function(1.7, env.t_grid.clone());
        let rep = cone_membership(&u, &env, &[1, 3]).unwrap();
        assert!(rep.member, "{:?}", rep.conditions);

        let zero = GridFunction::zero(env.t_grid.clone(), 4);
        let rep = cone_membership(&zero, &env, &[1, 3]).unwrap();
        assert!(rep.member);
        for c in &rep.conditions {
            assert!(c.margin.abs() < 1e-12, "{c:?}");
        }

        let neg = GridFunction::from_fn(env.t_grid.clone(), 4, |d, t| match d {
            0 => -t,
            1 => -1.0,
            _ => 0.0,
        });
        let rep = cone_membership(&neg, &env, &[1, 3]).unwrap();
        assert!(!rep.member);
        assert!(rep.conditions[0].margin < 0.0);
    }

    fn example_problem(f: Nonlinearity) -> NonlinearProblem {
        let mut p = NonlinearProblem::new(
            example_space(),
            dom01(),
            0.0,
            f,
            vec![1, 3],
            (1.0 / 6.0, 1.0),
        )
        .unwrap();
        p.grid = 80;
        p.panels = 6;
        p
    }

    #[test]
    fn apply_l_constant_source_closed_form() {
        // f = 1, M = 0: (L 1)(t) = t^2 (t - 2)^2 / 24
        let p = example_problem(Nonlinearity::Builtin(BuiltinF::One));
        let zero = GridFunction::zero(p.output_grid(), 4);
        let lu = apply_l(&p, &zero).unwrap();
        for (i, &t) in lu.grid.iter().enumerate() {
            let want = t * t * (t - 2.0) * (t - 2.0) / 24.0;
            assert!(
                (lu.derivs[0][i] - want).abs() < 1e-10,
                "t = {t}: {} vs {want}",
                lu.derivs[0][i]
            );
            let want1 = t * (t - 1.0) * (t - 2.0) / 6.0;
            assert!((lu.derivs[1][i] - want1).abs() < 1e-10);
        }
        // value at t = 1 equals 1/24
        assert!((lu.derivs[0][p.grid] - 1.0 / 24.0).abs() < 1e-10);
    }

    #[test]
    fn apply_l_zero_source() {
        let p = example_problem(Nonlinearity::Table(vec![(0.0, 0.0), (1.0, 0.0)]));
        let zero = GridFunction::zero(p.output_grid(), 4);
        let lu = apply_l(&p, &zero).unwrap();
        for row in &lu.derivs {
            for v in row {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn quadrature_panel_doubling_is_stable() {
        let mut p = example_problem(Nonlinearity::Builtin(BuiltinF::One));
        let zero = GridFunction::zero(p.output_grid(), 4);
        let a = apply_l(&p, &zero).unwrap();
        p.panels = 12;
        let b = apply_l(&p, &zero).unwrap();
        assert!(a.max_diff(&b) < 1e-12);
    }

    #[test]
    fn panel_validation() {
        let mut p = example_problem(Nonlinearity::Builtin(BuiltinF::One));
        p.panels = 1;
        let zero = GridFunction::zero(p.output_grid(), 4);
        assert!(matches!(
            apply_l(&p, &zero),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn picard_constant_source_fixes_in_one_step() {
        let p = example_problem(Nonlinearity::Builtin(BuiltinF::One));
        let out = picard_solve(&p, None, 5, 1e-12, 1.0).unwrap();
        assert!(out.converged);
        assert!(out.iterations <= 2);
        assert!(out.residual < 1e-14);
    }

    #[test]
    fn picard_nonlinear_example_converges_into_cone() {
        let p = example_problem(Nonlinearity::Builtin(BuiltinF::QuarticDecayLog));
        let out = picard_solve(&p, None, 200, 1e-10, 1.0).unwrap();
        assert!(out.converged, "residual = {}", out.residual);
        assert!(out.residual <= 1e-8);
        assert!(out.membership.member, "{:?}", out.membership.conditions);
        // nontrivial: f(., 0) > 0 forces a positive iterate
        assert!(out.iterate.sup_norm(0) > 1e-4);
    }

    #[test]
    fn growth_diagnostic_trends() {
        let p = example_problem(Nonlinearity::Builtin(BuiltinF::QuarticDecayLog));
        let d = growth_diagnostic(&p);
        // ratio blows up near zero, decays near infinity
        assert!(d.near_zero.last().unwrap().1 > d.near_zero[0].1);
        assert!(d.near_infinity.last().unwrap().1 < d.near_infinity[0].1);
    }

    #[test]
    fn nonlinearity_parsing() {
        assert!(Nonlinearity::parse("builtin:one").is_ok());
        assert!(Nonlinearity::parse("builtin:quartic_decay_log").is_ok());
        assert!(Nonlinearity::parse("builtin:nope").is_err());
        assert!(Nonlinearity::parse("whatever").is_err());
    }
}
