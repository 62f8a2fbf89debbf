use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Relation {
    BaseEpsilon,
    BaseSigma,
    StepEpsilon,
    StepSigma,
}

/// One inequality `lhs <= rhs`, both sides as natural logarithms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticRow {
    pub lambda: f64,
    pub s: u32,
    pub k: usize,
    pub relation: Relation,
    pub log_lhs: f64,
    pub log_rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArithmeticReport {
    pub rows: Vec<ArithmeticRow>,
    /// Grid points with lambda outside (0, 1/4] or s < 5; not evaluated.
    pub skipped: Vec<(f64, u32)>,
}

impl ArithmeticReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ArithmeticRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,s,k,relation,log_lhs,log_rhs,pass\n");
        for r in &self.rows {
            let rel = match r.relation {
                Relation::BaseEpsilon => "base-eps",
                Relation::BaseSigma => "base-sigma",
                Relation::StepEpsilon => "step-eps",
                Relation::StepSigma => "step-sigma",
            };
            out.push_str(&format!("{},{},{},{rel},{:.15e},{:.15e},{}\n", r.lambda, r.s, r.k, r.log_lhs, r.log_rhs, r.pass));
        }
        out
    }
}

/// The two numeric conditions the closing argument relies on:
/// `2 l^2 (4 l^2 + 3)` (at most 1) and `8 l^2 + 6 l^3` (at most 3/4).
pub fn sufficient_conditions(lambda: f64) -> (f64, f64) {
    let l2 = lambda * lambda;
    (2.0 * l2 * (4.0 * l2 + 3.0), 8.0 * l2 + 6.0 * l2 * lambda)
}

fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

const LOG_SLACK: f64 = 1e-12;

/// Substitutes eps_j = (2l)^(j e) and sigma_j = (2l)^((j-2) e), e = 1 - 4/s,
/// into the base-case bounds (k <= s) and both induction-step recurrences
/// (s < k <= kmax) and checks each against the level-k closed form. All
/// arithmetic is in the log domain. The base-case sigma bound is capped at
/// the trivial sigma_k <= 1.
pub fn verify_induction_arithmetic(lambdas: &[f64], ss: &[u32], kmax: usize) -> ArithmeticReport {
    let mut report = ArithmeticReport {
        rows: Vec::new(),
        skipped: Vec::new(),
    };
    for &lambda in lambdas {
        for &s in ss {
            if !(lambda > 0.0 && lambda <= 0.25) || s < 5 {
                report.skipped.push((lambda, s));
                continue;
            }
            let e = 1.0 - 4.0 / s as f64;
            let ln2l = (2.0 * lambda).ln();
            let ll = lambda.ln();
            let log_eps = |j: usize| j as f64 * e * ln2l;
            let log_sig = |j: usize| (j as f64 - 2.0) * e * ln2l;
            let mut push = |k: usize, relation, log_lhs: f64, log_rhs: f64| {
                report.rows.push(ArithmeticRow {
                    lambda,
                    s,
                    k,
                    relation,
                    log_lhs,
                    log_rhs,
                    pass: log_lhs <= log_rhs + LOG_SLACK,
                });
            };
            let s_us = s as usize;
            for k in 0..=s_us.min(kmax) {
                push(k, Relation::BaseEpsilon, 0.5f64.ln() + (k as f64 + 1.0) * ln2l, log_eps(k));
                let sigma = (2f64.ln() + (k as f64 - 1.0) * ln2l).min(0.0);
                push(k, Relation::BaseSigma, sigma, log_sig(k));
            }
            for k in s_us + 1..=kmax {
                let sf = s as f64;
                let eps_rhs = 0.5f64.ln() + sf * ln2l + log_sum_exp(&[log_eps(k - s_us), 3f64.ln() + log_sig(k - s_us)]);
                push(k, Relation::StepEpsilon, eps_rhs, log_eps(k));
                let first = 0.5f64.ln()
                    + (sf - 2.0) * ln2l
                    + log_sum_exp(&[log_eps(k - 2), ll + log_sig(k - 1)])
                    + log_sum_exp(&[log_eps(k - s_us), (2.0 + lambda).ln() + log_sig(k - s_us)]);
                let second = sf * ll + log_sig(k - s_us) + log_sig(k - 1);
                let third = 2.0 * ll + 2.0 * log_sig(k - 1);
                push(k, Relation::StepSigma, log_sum_exp(&[first, second, third]), 2.0 * log_sig(k));
            }
        }
    }
    report
}
