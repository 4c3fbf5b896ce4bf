//! Index-set algebra for two-point boundary conditions.
//!
//! A space is a pair of strictly increasing sets of derivative orders:
//! `sigma` vanishing at the left endpoint, `epsilon` at the right one.
//! This module houses the admissibility count (N_a), the alpha/beta/eta/gamma
//! indices, adjoint spaces, the cyclic shift describing the conditions
//! satisfied by the q-th derivative of the Green's function, the c_q/d_q
//! counts with their case classification, and the auxiliary spaces X2..X5
//! whose first eigenvalues delimit constant-sign intervals.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Wire format of a space: `{"n": 4, "sigma": [0,1], "epsilon": [1,3]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceDescriptor {
    pub n: usize,
    pub sigma: Vec<usize>,
    pub epsilon: Vec<usize>,
}

/// Two-point boundary condition space X_sigma^epsilon for an operator of
/// order `n`. Index sets are kept sorted and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SpaceDescriptor", into = "SpaceDescriptor")]
pub struct TwoPointSpace {
    n: usize,
    left: Vec<usize>,
    right: Vec<usize>,
}

impl TryFrom<SpaceDescriptor> for TwoPointSpace {
    type Error = Error;
    fn try_from(d: SpaceDescriptor) -> Result<Self> {
        TwoPointSpace::new(d.n, d.sigma, d.epsilon)
    }
}

impl From<TwoPointSpace> for SpaceDescriptor {
    fn from(s: TwoPointSpace) -> SpaceDescriptor {
        SpaceDescriptor {
            n: s.n,
            sigma: s.left,
            epsilon: s.right,
        }
    }
}

impl std::fmt::Display for TwoPointSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "X_{:?}^{:?} (n = {})", self.left, self.right, self.n)
    }
}

fn check_side(n: usize, side: &[usize], name: &str) -> Result<()> {
    if side.is_empty() {
        return Err(Error::InvalidSpace(format!("{name} is empty")));
    }
    if side.len() > n - 1 {
        return Err(Error::InvalidSpace(format!(
            "{name} has {} entries, at most n-1 = {} allowed",
            side.len(),
            n - 1
        )));
    }
    for w in side.windows(2) {
        if w[0] == w[1] {
            return Err(Error::InvalidSpace(format!(
                "{name} contains duplicate index {}",
                w[0]
            )));
        }
    }
    if let Some(&max) = side.last() {
        if max > n - 1 {
            return Err(Error::InvalidSpace(format!(
                "{name} contains index {max} > n-1 = {}",
                n - 1
            )));
        }
    }
    Ok(())
}

impl TwoPointSpace {
    pub fn new(
        n: usize,
        sigma: impl Into<Vec<usize>>,
        epsilon: impl Into<Vec<usize>>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::OrderTooSmall(n));
        }
        let mut left = sigma.into();
        let mut right = epsilon.into();
        left.sort_unstable();
        right.sort_unstable();
        check_side(n, &left, "sigma")?;
        check_side(n, &right, "epsilon")?;
        Ok(TwoPointSpace { n, left, right })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Derivative orders constrained at the left endpoint (sigma).
    pub fn left(&self) -> &[usize] {
        &self.left
    }

    /// Derivative orders constrained at the right endpoint (epsilon).
    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn k(&self) -> usize {
        self.left.len()
    }

    pub fn is_balanced(&self) -> bool {
        self.left.len() + self.right.len() == self.n
    }

    pub fn require_balanced(&self) -> Result<()> {
        if self.is_balanced() {
            Ok(())
        } else {
            Err(Error::Unbalanced {
                got: self.left.len() + self.right.len(),
                n: self.n,
            })
        }
    }

    /// Admissibility property (N_a): for every h in {1,...,n-1} the number
    /// of conditions of order below h, counted over both endpoints, is at
    /// least h.
    pub fn check_na(&self) -> Result<bool> {
        self.require_balanced()?;
        for h in 1..self.n {
            let count = self.left.iter().filter(|&&s| s < h).count()
                + self.right.iter().filter(|&&e| e < h).count();
            if count < h {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Smallest derivative orders not constrained at the left / right
    /// endpoint (alpha, beta).
    pub fn alpha_beta(&self) -> (usize, usize) {
        (min_missing(&self.left), min_missing(&self.right))
    }

    /// eta and gamma: alpha and beta of the adjoint space.
    pub fn eta_gamma(&self) -> Result<(usize, usize)> {
        let adj = self.adjoint()?;
        Ok(adj.alpha_beta())
    }

    /// Boundary conditions of the formally adjoint operator: reflected
    /// complementation of each index set.
    pub fn adjoint(&self) -> Result<TwoPointSpace> {
        self.require_balanced()?;
        let tau = reflect_complement(self.n, &self.left);
        let delta = reflect_complement(self.n, &self.right);
        TwoPointSpace::new(self.n, tau, delta)
    }

    /// Index data of the space satisfied by the q-th derivative of the
    /// Green's function.
    pub fn derivative_space(&self, q: usize) -> Result<DerivativeIndexData> {
        self.require_balanced()?;
        if q == 0 || q > self.n - 1 {
            return Err(Error::QOutOfRange { q, n: self.n });
        }
        Ok(DerivativeIndexData::build(self, q))
    }

    /// Adjoint of the q-th derivative space, computed directly from the
    /// adjoint sets by the forward cyclic shift. Equals
    /// `derivative_space(q)?.space().adjoint()` (the diagram commutes).
    pub fn adjoint_derivative_space(&self, q: usize) -> Result<TwoPointSpace> {
        self.require_balanced()?;
        if q == 0 || q > self.n - 1 {
            return Err(Error::QOutOfRange { q, n: self.n });
        }
        let adj = self.adjoint()?;
        let tau_q = shift_up(self.n, adj.left(), q);
        let delta_q = shift_up(self.n, adj.right(), q);
        TwoPointSpace::new(self.n, tau_q, delta_q)
    }
}

fn min_missing(set: &[usize]) -> usize {
    let mut i = 0;
    for &v in set {
        if v == i {
            i += 1;
        } else if v > i {
            break;
        }
    }
    i
}

fn reflect_complement(n: usize, set: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = (0..n)
        .filter(|i| !set.contains(i))
        .map(|i| n - 1 - i)
        .collect();
    out.sort_unstable();
    out
}

/// sigma_i -> sigma_i - q, wrapped into {0,...,n-1}.
fn shift_down(n: usize, set: &[usize], q: usize) -> Vec<usize> {
    let mut out: Vec<usize> = set.iter().map(|&s| (s + n - q) % n).collect();
    out.sort_unstable();
    out
}

/// tau_i -> tau_i + q, wrapped into {0,...,n-1}.
fn shift_up(n: usize, set: &[usize], q: usize) -> Vec<usize> {
    let mut out: Vec<usize> = set.iter().map(|&s| (s + q) % n).collect();
    out.sort_unstable();
    out
}

/// Case classification for the constant sign of the q-th derivative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SignCase {
    /// c_q >= 1, d_q >= 1 and c_q + d_q = n - q.
    CaseA,
    /// c_q = n - q, d_q = 0.
    CaseB,
    /// c_q = 0, d_q = n - q.
    CaseC,
    /// c_q + d_q != n - q: no parameter M yields a constant sign.
    NoConstantSign,
}

/// All index data attached to the q-th derivative of the Green's function:
/// the shifted sets mu/rho, their alpha/beta, the wrap positions j/r and
/// the distinguished indices z/h, the surviving-condition counts c_q/d_q,
/// and the sign case.
#[derive(Debug, Clone, Serialize)]
pub struct DerivativeIndexData {
    pub n: usize,
    pub q: usize,
    pub mu: Vec<usize>,
    pub rho: Vec<usize>,
    pub alpha_q: usize,
    pub beta_q: usize,
    pub j: Option<usize>,
    pub r: Option<usize>,
    pub z: Option<usize>,
    pub h: Option<usize>,
    pub c_q: usize,
    pub d_q: usize,
    pub sign_case: SignCase,
}

impl DerivativeIndexData {
    fn build(space: &TwoPointSpace, q: usize) -> Self {
        let n = space.n();
        let k = space.k();
        let mu = shift_down(n, space.left(), q);
        let rho = shift_down(n, space.right(), q);
        let alpha_q = min_missing(&mu);
        let beta_q = min_missing(&rho);

        // j = min A_q, A_q = { i : sigma_i >= q } (1-based positions)
        let j = space
            .left()
            .iter()
            .position(|&s| s >= q)
            .map(|p| p + 1);
        let r = space
            .right()
            .iter()
            .position(|&e| e >= q)
            .map(|p| p + 1);
        let z = j.map(|j| k - (j - 1));
        let h = r.map(|r| (n - k) - (r - 1));

        let c_q = space.left().iter().filter(|&&s| s >= q).count();
        let d_q = space.right().iter().filter(|&&e| e >= q).count();

        let sign_case = if c_q + d_q != n - q {
            SignCase::NoConstantSign
        } else if c_q >= 1 && d_q >= 1 {
            SignCase::CaseA
        } else if d_q == 0 {
            SignCase::CaseB
        } else {
            SignCase::CaseC
        };

        DerivativeIndexData {
            n,
            q,
            mu,
            rho,
            alpha_q,
            beta_q,
            j,
            r,
            z,
            h,
            c_q,
            d_q,
            sign_case,
        }
    }

    /// The space X_mu^rho itself.
    pub fn space(&self) -> TwoPointSpace {
        TwoPointSpace::new(self.n, self.mu.clone(), self.rho.clone())
            .expect("shifted sets are valid by construction")
    }

    /// mu_z (the image of sigma_k), defined in case A.
    pub fn mu_z(&self) -> Option<usize> {
        self.z.map(|z| self.mu[z - 1])
    }

    /// rho_h (the image of epsilon_{n-k}), defined in case A.
    pub fn rho_h(&self) -> Option<usize> {
        self.h.map(|h| self.rho[h - 1])
    }
}

/// The six auxiliary spaces delimiting the constant-sign interval of the
/// q-th derivative (sufficient pair X2/X4, necessary pair X3/X5, and the
/// adjoints of the sufficient pair).
#[derive(Debug, Clone, Serialize)]
pub struct AuxSpaces {
    pub x2: TwoPointSpace,
    pub x3: TwoPointSpace,
    pub x4: TwoPointSpace,
    pub x5: TwoPointSpace,
    pub x2_adj: TwoPointSpace,
    pub x4_adj: TwoPointSpace,
}

fn require_case_a(dd: &DerivativeIndexData) -> Result<(usize, usize)> {
    if dd.sign_case != SignCase::CaseA {
        return Err(Error::NotApplicable(format!(
            "auxiliary spaces need case A (c_q >= 1, d_q >= 1, c_q + d_q = n - q); got c_q = {}, d_q = {}",
            dd.c_q, dd.d_q
        )));
    }
    Ok((dd.z.unwrap(), dd.h.unwrap()))
}

fn drop_at(set: &[usize], pos1: usize) -> Vec<usize> {
    set.iter()
        .enumerate()
        .filter(|(i, _)| *i != pos1 - 1)
        .map(|(_, &v)| v)
        .collect()
}

fn insert_sorted(set: &[usize], v: usize) -> Result<Vec<usize>> {
    if set.contains(&v) {
        return Err(Error::DegenerateSpace(format!(
            "augmentation index {v} already present in {set:?}"
        )));
    }
    let mut out = set.to_vec();
    out.push(v);
    out.sort_unstable();
    Ok(out)
}

fn aux(n: usize, left: Vec<usize>, right: Vec<usize>, label: &str) -> Result<TwoPointSpace> {
    TwoPointSpace::new(n, left, right)
        .map_err(|e| Error::DegenerateSpace(format!("{label}: {e}")))
}

/// X2: drop mu_z at the left, append beta^q at the right.
pub fn x2_space(space: &TwoPointSpace, q: usize) -> Result<TwoPointSpace> {
    let dd = space.derivative_space(q)?;
    let (z, _) = require_case_a(&dd)?;
    aux(
        dd.n,
        drop_at(&dd.mu, z),
        insert_sorted(&dd.rho, dd.beta_q)?,
        "X2",
    )
}

/// X3: drop mu_z at the left, append alpha^q at the left.
pub fn x3_space(space: &TwoPointSpace, q: usize) -> Result<TwoPointSpace> {
    let dd = space.derivative_space(q)?;
    let (z, _) = require_case_a(&dd)?;
    aux(
        dd.n,
        insert_sorted(&drop_at(&dd.mu, z), dd.alpha_q)?,
        dd.rho.clone(),
        "X3",
    )
}

/// X4: append alpha^q at the left, drop rho_h at the right.
pub fn x4_space(space: &TwoPointSpace, q: usize) -> Result<TwoPointSpace> {
    let dd = space.derivative_space(q)?;
    let (_, h) = require_case_a(&dd)?;
    aux(
        dd.n,
        insert_sorted(&dd.mu, dd.alpha_q)?,
        drop_at(&dd.rho, h),
        "X4",
    )
}

/// X5: drop rho_h at the right, append beta^q at the right.
pub fn x5_space(space: &TwoPointSpace, q: usize) -> Result<TwoPointSpace> {
    let dd = space.derivative_space(q)?;
    let (_, h) = require_case_a(&dd)?;
    aux(
        dd.n,
        dd.mu.clone(),
        insert_sorted(&drop_at(&dd.rho, h), dd.beta_q)?,
        "X5",
    )
}

/// X2*: append eta at the left of tau, drop delta_z at the right.
pub fn x2_adjoint_space(space: &TwoPointSpace, q: usize) -> Result<TwoPointSpace> {
    let dd = space.derivative_space(q)?;
    let (z, _) = require_case_a(&dd)?;
    let adj = space.adjoint()?;
    let (eta, _) = adj.alpha_beta();
    aux(
        dd.n,
        insert_sorted(adj.left(), eta)?,
        drop_at(adj.right(), z),
        "X2*",
    )
}

/// X4*: drop tau_h at the left, append gamma at the right of delta.
pub fn x4_adjoint_space(space: &TwoPointSpace, q: usize) -> Result<TwoPointSpace> {
    let dd = space.derivative_space(q)?;
    let (_, h) = require_case_a(&dd)?;
    let adj = space.adjoint()?;
    let (_, gamma) = adj.alpha_beta();
    aux(
        dd.n,
        drop_at(adj.left(), h),
        insert_sorted(adj.right(), gamma)?,
        "X4*",
    )
}

/// All six auxiliary spaces. Errors if any of them is degenerate (an empty
/// side), which happens exactly for k = 1 (X2, X2*) and k = n-1 (X4, X4*).
pub fn aux_spaces(space: &TwoPointSpace, q: usize) -> Result<AuxSpaces> {
    Ok(AuxSpaces {
        x2: x2_space(space, q)?,
        x3: x3_space(space, q)?,
        x4: x4_space(space, q)?,
        x5: x5_space(space, q)?,
        x2_adj: x2_adjoint_space(space, q)?,
        x4_adj: x4_adjoint_space(space, q)?,
    })
}

/// Enumerates every balanced space of order n (all k from 1 to n-1, all
/// index-set pairs). Used by exhaustive structural tests and the lambda=0
/// cross-check.
pub fn enumerate_spaces(n: usize) -> Vec<TwoPointSpace> {
    fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for v in start..n {
                if n - v < k - cur.len() {
                    break;
                }
                cur.push(v);
                rec(v + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
        out
    }
    let mut spaces = Vec::new();
    for k in 1..n {
        for sigma in subsets(n, k) {
            for epsilon in subsets(n, n - k) {
                spaces.push(TwoPointSpace::new(n, sigma.clone(), epsilon).unwrap());
            }
        }
    }
    spaces
}
