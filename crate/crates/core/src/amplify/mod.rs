//! Exact bias functionals of wide replacement walks and the bound checks
//! built on them.
//!
//! For an outer assignment `f` with signs `sigma(a) = (-1)^f(a)`:
//!
//! * `g_k(a, b)`: expected sign product over the k+1 outer vertices of a
//!   forward walk from `(a_0, b_1) = (a, b)`.
//! * `gbar_j(a, b)`: the same along a walk unrolled backwards from
//!   `(a_j, b_j) = (a, b)`, optionally weighted by `W(a_0)`.
//! * `h_k(a)`: expected sign product over a k-vertex random walk on A.
//! * `hhat_k(a)`: `h_k` with terminal weight `H(a_k)`.

mod arithmetic;
mod checks;
mod dp;
mod pure;

pub use arithmetic::{sufficient_conditions, verify_induction_arithmetic, ArithmeticReport, ArithmeticRow, Relation};
pub use checks::{
    check_base_case, check_bias_reduction_lemma, check_first_step_trick, check_induction_step,
    check_middle_start_identity, hypotheses, Hypotheses,
};
pub use dp::{dp_backwards, dp_backwards_levels, dp_gk, dp_gk_with, final_level, DpMethod, DEFAULT_DP_BUDGET};
pub use pure::{check_random_walk_claim, check_weighted_walk_claim, dp_hk, dp_hk_weighted};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::BOUND_SLACK;

/// A Boolean assignment on outer vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignedFn {
    values: Vec<bool>,
}

impl SignedFn {
    pub fn from_bits(values: Vec<bool>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("assignment over an empty vertex set"));
        }
        Ok(Self { values })
    }

    /// f(a) = 1 exactly on the upper half of the vertex range: bias 0.
    pub fn balanced(n: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!("balanced assignment needs an even vertex count, got {n}")));
        }
        Self::from_bits((0..n).map(|a| a >= n / 2).collect())
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::from_bits(vec![false; n])
    }

    /// f(a) = <mask, a>.
    pub fn parity(n: usize, mask: u64) -> Result<Self> {
        Self::from_bits((0..n as u64).map(|a| crate::gf2::parity(a & mask)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value(&self, a: usize) -> bool {
        self.values[a]
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn signs(&self) -> Vec<f64> {
        self.values.iter().map(|&v| if v { -1.0 } else { 1.0 }).collect()
    }

    /// |E_a (-1)^f(a)|
    pub fn bias(&self) -> f64 {
        let ones = self.values.iter().filter(|&&v| v).count() as f64;
        let n = self.values.len() as f64;
        ((n - 2.0 * ones) / n).abs()
    }
}

/// One DP level, row-major over (outer vertex, inner vertex). Pure-walk
/// tables have a single column.
#[derive(Debug, Clone, PartialEq)]
pub struct DpTable {
    pub level: usize,
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl DpTable {
    pub fn new(level: usize, rows: usize, cols: usize, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), rows * cols);
        Self { level, rows, cols, values }
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.cols + b]
    }

    pub fn row(&self, a: usize) -> &[f64] {
        &self.values[a * self.cols..(a + 1) * self.cols]
    }

    pub fn moments(&self) -> Moments {
        moments(self)
    }
}

/// Exact first and second moments of a table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    /// Signed global mean.
    pub mean: f64,
    /// |mean|
    pub epsilon: f64,
    /// sqrt(mean_square - mean^2)
    pub sigma: f64,
    pub mean_square: f64,
    /// Signed row means, eps_k(a) up to sign.
    pub row_means: Vec<f64>,
    pub row_sigmas: Vec<f64>,
}

impl Moments {
    /// E_a[eps(a)^2]
    pub fn mean_row_mean_square(&self) -> f64 {
        self.row_means.iter().map(|x| x * x).sum::<f64>() / self.row_means.len() as f64
    }
}

pub fn moments(table: &DpTable) -> Moments {
    let mut row_means = Vec::with_capacity(table.rows);
    let mut row_sigmas = Vec::with_capacity(table.rows);
    let (mut total, mut total_sq) = (0.0, 0.0);
    for a in 0..table.rows {
        let row = table.row(a);
        let s: f64 = row.iter().sum();
        let sq: f64 = row.iter().map(|x| x * x).sum();
        let mean = s / table.cols as f64;
        row_means.push(mean);
        row_sigmas.push((sq / table.cols as f64 - mean * mean).max(0.0).sqrt());
        total += s;
        total_sq += sq;
    }
    let n = table.values.len() as f64;
    let mean = total / n;
    let mean_square = total_sq / n;
    Moments {
        mean,
        epsilon: mean.abs(),
        sigma: (mean_square - mean * mean).max(0.0).sqrt(),
        mean_square,
        row_means,
        row_sigmas,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    HypothesesUnmet,
}

/// One level of a moment-bound check. A missing bound is not checked at
/// that level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub k: usize,
    pub epsilon: f64,
    pub sigma: f64,
    pub mean_square: f64,
    pub bound_eps: Option<f64>,
    pub bound_sigma: Option<f64>,
    pub pass: bool,
    /// Some bound at this level is at least 1 and so holds trivially.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub check: String,
    pub hypotheses: Option<Hypotheses>,
    pub rows: Vec<MomentRow>,
    pub notes: Vec<String>,
}

impl MomentReport {
    pub fn verdict(&self) -> Verdict {
        if self.hypotheses.as_ref().is_some_and(|h| !h.hold()) {
            Verdict::HypothesesUnmet
        } else if self.rows.iter().all(|r| r.pass) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn to_csv(&self) -> String {
        let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
        let mut out = String::from("k,epsilon,sigma,bound_eps,bound_sigma,pass,vacuous\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{:e},{:e},{},{},{},{}\n",
                r.k,
                r.epsilon,
                r.sigma,
                opt(r.bound_eps),
                opt(r.bound_sigma),
                r.pass,
                r.vacuous
            ));
        }
        out
    }
}

/// An identity (`lhs == rhs` within `tolerance`) or inequality
/// (`lhs <= rhs + tolerance`) evaluated at several levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub identity: bool,
    pub tolerance: f64,
    pub rows: Vec<CheckRow>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckRow {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

impl CheckReport {
    pub(crate) fn identity(check: &str, tolerance: f64) -> Self {
        Self {
            check: check.into(),
            identity: true,
            tolerance,
            rows: Vec::new(),
        }
    }

    pub(crate) fn inequality(check: &str) -> Self {
        Self {
            check: check.into(),
            identity: false,
            tolerance: BOUND_SLACK,
            rows: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, k: usize, lhs: f64, rhs: f64) {
        let pass = if self.identity {
            (lhs - rhs).abs() <= self.tolerance
        } else {
            lhs <= rhs + self.tolerance
        };
        self.rows.push(CheckRow { k, lhs, rhs, pass });
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn max_residual(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| if self.identity { (r.lhs - r.rhs).abs() } else { (r.lhs - r.rhs).max(0.0) })
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("k,lhs,rhs,residual,pass\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:e},{:e},{:e},{}\n", r.k, r.lhs, r.rhs, r.lhs - r.rhs, r.pass));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn signed_fn_bias() {
        assert_eq!(SignedFn::balanced(8).unwrap().bias(), 0.0);
        assert_eq!(SignedFn::zero(8).unwrap().bias(), 1.0);
        assert_eq!(SignedFn::from_bits(vec![true, false, false, false]).unwrap().bias(), 0.5);
        assert_eq!(SignedFn::parity(16, 0b1010).unwrap().bias(), 0.0);
        assert_eq!(SignedFn::parity(16, 0).unwrap().bias(), 1.0);
        assert!(SignedFn::balanced(3).is_err());
        assert!(SignedFn::from_bits(vec![]).is_err());
    }

    #[test]
    fn moments_examples() {
        let m = DpTable::new(0, 2, 3, vec![0.25; 6]).moments();
        assert_eq!((m.epsilon, m.sigma), (0.25, 0.0));
        let m = DpTable::new(0, 2, 2, vec![1.0, -1.0, -1.0, 1.0]).moments();
        assert_eq!((m.epsilon, m.sigma), (0.0, 1.0));
        let m = DpTable::new(0, 2, 2, vec![1.0, 1.0, -1.0, -1.0]).moments();
        assert_eq!(m.row_means, vec![1.0, -1.0]);
        assert_eq!(m.row_sigmas, vec![0.0, 0.0]);
        assert_eq!(m.mean_row_mean_square(), 1.0);
    }

    proptest! {
        #[test]
        fn moment_identity_and_jensen(values in prop::collection::vec(-1.0f64..1.0, 12)) {
            let m = DpTable::new(0, 3, 4, values.clone()).moments();
            let mean_sq = values.iter().map(|x| x * x).sum::<f64>() / 12.0;
            prop_assert!((m.sigma * m.sigma + m.epsilon * m.epsilon - mean_sq).abs() < 1e-12);
            prop_assert!(m.epsilon * m.epsilon <= m.mean_row_mean_square() + 1e-15);
        }
    }

    #[test]
    fn check_report_modes() {
        let mut r = CheckReport::identity("id", 1e-9);
        r.push(1, 0.5, 0.5 + 1e-10);
        assert!(r.passed());
        r.push(2, 0.5, 0.6);
        assert!(!r.passed());
        let mut r = CheckReport::inequality("le");
        r.push(1, 0.0, 0.0);
        r.push(2, 0.1, 0.2);
        assert!(r.passed());
        assert_eq!(r.max_residual(), 0.0);
        assert!(r.to_csv().starts_with("k,lhs,rhs,residual,pass\n"));
    }
}
