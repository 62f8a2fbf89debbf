use serde::{Deserialize, Serialize};

use super::dp::{dp_backwards, dp_gk, final_level, DpMethod};
use super::{CheckReport, MomentReport, MomentRow, Moments, SignedFn};
use crate::error::{Error, Result};
use crate::graphs::{BOUND_SLACK, CROSS_CHECK_TOL};
use crate::walks::ReplacementSystem;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl Condition {
    pub(crate) fn new(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            holds: lhs <= rhs + BOUND_SLACK,
        }
    }
}

/// Measured side conditions of a conditional bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypotheses {
    pub conditions: Vec<Condition>,
}

impl Hypotheses {
    pub(crate) fn new(conditions: Vec<Condition>) -> Self {
        Self { conditions }
    }

    pub fn hold(&self) -> bool {
        self.conditions.iter().all(|c| c.holds)
    }
}

/// Bias(f) <= lambda_B and lambda_A <= lambda_B^2, from measured spectra.
pub fn hypotheses(sys: &ReplacementSystem, f: &SignedFn) -> Hypotheses {
    let lb = sys.lambda_inner();
    Hypotheses::new(vec![
        Condition::new("bias(f) <= lambda_B", f.bias(), lb),
        Condition::new("lambda_A <= lambda_B^2", sys.lambda_outer(), lb * lb),
    ])
}

fn row(k: usize, m: &Moments, bound_eps: Option<f64>, bound_sigma: Option<f64>, pass: bool) -> MomentRow {
    let vacuous = bound_eps.is_some_and(|b| b >= 1.0) || bound_sigma.is_some_and(|b| b >= 1.0);
    MomentRow {
        k,
        epsilon: m.epsilon,
        sigma: m.sigma,
        mean_square: m.mean_square,
        bound_eps,
        bound_sigma,
        pass,
        vacuous,
    }
}

fn lambda_note(sys: &ReplacementSystem, f: &SignedFn) -> String {
    format!(
        "lambda_A = {}; lambda_B = {}; bias(f) = {}",
        sys.lambda_outer(),
        sys.lambda_inner(),
        f.bias()
    )
}

/// eps_k <= (2 lambda)^(k+1) / 2 and sigma_k <= 2 (2 lambda)^(k-1) for
/// k = 0..s, with lambda = lambda_B measured.
pub fn check_base_case(sys: &ReplacementSystem, f: &SignedFn, budget: u128) -> Result<MomentReport> {
    let s = sys.params().s as usize;
    let lambda = sys.lambda_inner();
    let two_l = 2.0 * lambda;
    let tables = dp_gk(sys, f, s, budget)?;
    let rows = tables
        .iter()
        .map(|t| {
            let m = t.moments();
            let k = t.level as i32;
            let be = 0.5 * two_l.powi(k + 1);
            let bs = 2.0 * two_l.powi(k - 1);
            let pass = m.epsilon <= be + BOUND_SLACK && m.sigma <= bs + BOUND_SLACK;
            row(t.level, &m, Some(be), Some(bs), pass)
        })
        .collect();
    Ok(MomentReport {
        check: "base-case".into(),
        hypotheses: Some(hypotheses(sys, f)),
        rows,
        notes: vec![lambda_note(sys, f)],
    })
}

/// For s < k <= kmax, with measured values on both sides:
///
/// ```text
/// eps_k     <= (2l)^s (eps_{k-s} + 3 sigma_{k-s}) / 2
/// sigma_k^2 <= (2l)^(s-2) (eps_{k-2} + l sigma_{k-1}) (eps_{k-s} + (2+l) sigma_{k-s}) / 2
///              + l^s sigma_{k-s} sigma_{k-1} + l^2 sigma_{k-1}^2
/// ```
///
/// `bound_sigma` holds the square root of the second right-hand side.
pub fn check_induction_step(sys: &ReplacementSystem, f: &SignedFn, kmax: usize, budget: u128) -> Result<MomentReport> {
    let s = sys.params().s as usize;
    if kmax <= s {
        return Err(Error::invalid(format!("the induction step starts at k = s + 1 = {}", s + 1)));
    }
    let l = sys.lambda_inner();
    let tables = dp_gk(sys, f, kmax, budget)?;
    let m: Vec<Moments> = tables.iter().map(|t| t.moments()).collect();
    let (eps, sig): (Vec<f64>, Vec<f64>) = m.iter().map(|x| (x.epsilon, x.sigma)).unzip();
    let mut rows = Vec::new();
    for k in s + 1..=kmax {
        let be = 0.5 * (2.0 * l).powi(s as i32) * (eps[k - s] + 3.0 * sig[k - s]);
        let bs2 = 0.5 * (2.0 * l).powi(s as i32 - 2) * (eps[k - 2] + l * sig[k - 1]) * (eps[k - s] + (2.0 + l) * sig[k - s])
            + l.powi(s as i32) * sig[k - s] * sig[k - 1]
            + l * l * sig[k - 1] * sig[k - 1];
        let pass = eps[k] <= be + BOUND_SLACK && sig[k] * sig[k] <= bs2 + BOUND_SLACK;
        rows.push(row(k, &m[k], Some(be), Some(bs2.sqrt()), pass));
    }
    let increases: Vec<usize> = (1..=kmax).filter(|&k| eps[k] > eps[k - 1] + BOUND_SLACK).collect();
    let monotone = if increases.is_empty() {
        "eps_k is non-increasing over the computed levels".to_string()
    } else {
        format!("eps_k increases at k = {increases:?}")
    };
    Ok(MomentReport {
        check: "induction-step".into(),
        hypotheses: Some(hypotheses(sys, f)),
        rows,
        notes: vec![lambda_note(sys, f), monotone],
    })
}

/// eps_t <= (2 lambda_B)^(t (1 - 4/s)).
pub fn check_bias_reduction_lemma(sys: &ReplacementSystem, f: &SignedFn, t: usize, budget: u128) -> Result<MomentReport> {
    if t == 0 {
        return Err(Error::invalid("the lemma needs t >= 1"));
    }
    let s = sys.params().s as f64;
    let exponent = t as f64 * (1.0 - 4.0 / s);
    let bound = (2.0 * sys.lambda_inner()).powf(exponent);
    let m = final_level(sys, f, t, DpMethod::Direct, budget)?.moments();
    let mut r = row(t, &m, Some(bound), None, m.epsilon <= bound + BOUND_SLACK);
    r.vacuous |= exponent <= 0.0;
    let mut notes = vec![lambda_note(sys, f), format!("exponent t(1 - 4/s) = {exponent}")];
    let eps0 = f.bias();
    notes.push(if m.epsilon <= eps0 + BOUND_SLACK {
        format!("eps_t = {} <= eps_0 = {eps0}", m.epsilon)
    } else {
        format!("eps_t = {} exceeds eps_0 = {eps0}", m.epsilon)
    });
    Ok(MomentReport {
        check: "bias-lemma".into(),
        hypotheses: Some(hypotheses(sys, f)),
        rows: vec![r],
        notes,
    })
}

/// Signed mean of g_k computed directly and as
/// E_{a, b, u}[sigma(a) gbar_s(a, b) g_{k-s}(a, shift(b + u))], for s < k <= kmax.
pub fn check_middle_start_identity(sys: &ReplacementSystem, f: &SignedFn, kmax: usize, budget: u128) -> Result<CheckReport> {
    let s = sys.params().s as usize;
    if kmax <= s {
        return Err(Error::invalid(format!("the middle-start identity needs k > s = {s}")));
    }
    let g = dp_gk(sys, f, kmax, budget)?;
    let back = dp_backwards(sys, f, s, None, budget)?;
    let signs = f.signs();
    let (na, nb) = (sys.outer_size(), sys.inner_size());
    let gens = sys.inner().generators();
    let blocks = sys.blocks();
    let mut report = CheckReport::identity("middle-start", CROSS_CHECK_TOL);
    for k in s + 1..=kmax {
        let tail = &g[k - s];
        let mut total = 0.0;
        for a in 0..na {
            for b in 0..nb {
                let mut acc = 0.0;
                for &u in gens {
                    acc += tail.get(a, blocks.forward(b as u64 ^ u) as usize);
                }
                total += signs[a] * back.get(a, b) * acc;
            }
        }
        let via = total / (na * nb * gens.len()) as f64;
        report.push(k, g[k].moments().mean, via);
    }
    Ok(report)
}

/// sigma_k^2 <= E_a[eps_{k-1}(a)^2] + lambda_B^2 sigma_{k-1}^2 for 1 <= k <= kmax.
pub fn check_first_step_trick(sys: &ReplacementSystem, f: &SignedFn, kmax: usize, budget: u128) -> Result<CheckReport> {
    if kmax == 0 {
        return Err(Error::invalid("the first-step bound needs k >= 1"));
    }
    let l = sys.lambda_inner();
    let m: Vec<Moments> = dp_gk(sys, f, kmax, budget)?.iter().map(|t| t.moments()).collect();
    let mut report = CheckReport::inequality("first-step");
    for k in 1..=kmax {
        let rhs = m[k - 1].mean_row_mean_square() + l * l * m[k - 1].sigma * m[k - 1].sigma;
        report.push(k, m[k].sigma * m[k].sigma, rhs);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplify::{dp_hk_weighted, Verdict, DEFAULT_DP_BUDGET};
    use crate::graphs;
    use crate::walks::{enumerate_swalk_seeds, WalkParams};

    fn system(m: u32, s: u32, ell: u32) -> ReplacementSystem {
        ReplacementSystem::standard(WalkParams::new(m, s, ell, 1).unwrap()).unwrap()
    }

    #[test]
    fn middle_start_identity_small() {
        let sys = system(1, 2, 1);
        for bits in 0..4u8 {
            let f = SignedFn::from_bits(vec![bits & 1 == 1, bits & 2 == 2]).unwrap();
            let r = check_middle_start_identity(&sys, &f, 4, DEFAULT_DP_BUDGET).unwrap();
            assert!(r.passed(), "{:?}", r.rows);
            assert_eq!(r.rows.first().unwrap().k, 3);
        }
        let r = check_middle_start_identity(&sys, &SignedFn::zero(2).unwrap(), 4, DEFAULT_DP_BUDGET).unwrap();
        assert!(r.rows.iter().all(|x| (x.lhs - 1.0).abs() < 1e-12 && (x.rhs - 1.0).abs() < 1e-12));
        assert!(check_middle_start_identity(&sys, &SignedFn::zero(2).unwrap(), 2, DEFAULT_DP_BUDGET).is_err());
    }

    #[test]
    fn middle_start_identity_with_asymmetric_generators() {
        let sys = system(2, 3, 2);
        let f = SignedFn::from_bits(vec![false, true, true, true]).unwrap();
        let r = check_middle_start_identity(&sys, &f, 7, DEFAULT_DP_BUDGET).unwrap();
        assert!(r.passed() && r.max_residual() < 1e-12, "{:?}", r.rows);
    }

    #[test]
    fn first_step_trick() {
        let sys = system(2, 5, 5);
        let f = SignedFn::balanced(4).unwrap();
        let r = check_first_step_trick(&sys, &f, 10, DEFAULT_DP_BUDGET).unwrap();
        assert!(r.passed(), "{:?}", r.rows);
        let z = check_first_step_trick(&sys, &SignedFn::zero(4).unwrap(), 3, DEFAULT_DP_BUDGET).unwrap();
        assert!(z.rows.iter().all(|x| x.lhs == 0.0 && x.rhs == 1.0));
        // lambda_B = 0: the bound reduces to E_a[eps_{k-1}(a)^2].
        let outer = graphs::build_complete_selfloop(2).unwrap();
        let inner = graphs::build_complete_tiled(6, 6).unwrap();
        let sys0 = ReplacementSystem::new(outer, inner, WalkParams::new(2, 3, 3, 1).unwrap()).unwrap();
        assert_eq!(sys0.lambda_inner(), 0.0);
        let r = check_first_step_trick(&sys0, &SignedFn::from_bits(vec![true, false, false, false]).unwrap(), 6, DEFAULT_DP_BUDGET).unwrap();
        assert!(r.passed());
    }

    #[test]
    fn base_case_needs_its_hypotheses() {
        let sys = system(2, 5, 5);
        let r = check_base_case(&sys, &SignedFn::zero(4).unwrap(), DEFAULT_DP_BUDGET).unwrap();
        assert_eq!(r.verdict(), Verdict::HypothesesUnmet);
        assert!(!r.hypotheses.unwrap().conditions[0].holds);
    }

    #[test]
    fn base_case_values_match_enumeration() {
        let sys = system(1, 2, 1);
        let f = SignedFn::from_bits(vec![false, true]).unwrap();
        let r = check_base_case(&sys, &f, DEFAULT_DP_BUDGET).unwrap();
        let signs = f.signs();
        for t in 1..=2 {
            let mut total = 0.0;
            let mut n = 0.0;
            for w in enumerate_swalk_seeds(&sys, t, 1 << 20).unwrap() {
                total += w.a_vertices.iter().map(|&a| signs[a as usize]).product::<f64>();
                n += 1.0;
            }
            assert!((r.rows[t].epsilon - (total / n as f64).abs()).abs() < 1e-12);
        }
    }

    #[test]
    fn degenerate_inner_graph_zero_bounds() {
        let outer = graphs::build_complete_selfloop(2).unwrap();
        let inner = graphs::build_complete_tiled(6, 6).unwrap();
        let sys = ReplacementSystem::new(outer, inner, WalkParams::new(2, 3, 3, 1).unwrap()).unwrap();
        let r = check_induction_step(&sys, &SignedFn::balanced(4).unwrap(), 6, DEFAULT_DP_BUDGET).unwrap();
        for row in &r.rows {
            assert_eq!(row.bound_eps, Some(0.0));
            assert_eq!(row.epsilon, 0.0);
        }
        assert_eq!(r.verdict(), Verdict::Pass);
    }

    #[test]
    fn weighted_first_level_recovers_previous_bias() {
        let sys = system(2, 3, 3);
        let f = SignedFn::from_bits(vec![true, false, false, false]).unwrap();
        let g = dp_gk(&sys, &f, 6, DEFAULT_DP_BUDGET).unwrap();
        for k in 2..=6 {
            let weight = g[k - 1].moments().row_means;
            let hh = dp_hk_weighted(sys.outer(), &f, &weight, 1).unwrap();
            let e1 = hh[0].moments().epsilon;
            assert!((e1 - g[k - 2].moments().epsilon).abs() < 1e-12);
        }
    }

    #[test]
    fn vacuous_lemma_for_small_s() {
        let sys = system(2, 3, 3);
        let r = check_bias_reduction_lemma(&sys, &SignedFn::balanced(4).unwrap(), 6, DEFAULT_DP_BUDGET).unwrap();
        assert!(r.rows[0].vacuous);
        assert!(r.rows[0].pass);
    }

    // With s = 2 the sigma recurrence can fail while both hypotheses hold:
    // g_3 is constant and eps_2 = 0, so the right-hand side at k = 4 is 0
    // although sigma_4 = 1/16.
    #[test]
    fn sigma_step_fails_at_s_two() {
        let sys = system(2, 2, 2);
        let r = check_induction_step(&sys, &SignedFn::balanced(4).unwrap(), 6, DEFAULT_DP_BUDGET).unwrap();
        assert!(r.hypotheses.as_ref().unwrap().hold());
        let k4 = &r.rows[1];
        assert_eq!(k4.k, 4);
        assert!((k4.sigma - 0.0625).abs() < 1e-12);
        assert_eq!(k4.bound_sigma, Some(0.0));
        assert!(!k4.pass);
        assert_eq!(r.verdict(), Verdict::Fail);
    }
}
