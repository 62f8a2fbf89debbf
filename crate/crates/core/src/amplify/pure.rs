use super::checks::{Condition, Hypotheses};
use super::{DpTable, MomentReport, MomentRow, SignedFn};
use crate::error::{Error, Result};
use crate::graphs::{self, CayleyGraph, BOUND_SLACK};

fn walk_tables(graph: &CayleyGraph, signs: &[f64], first: Vec<f64>, kmax: usize) -> Vec<DpTable> {
    let n = graph.vertex_count();
    let inv_d = 1.0 / graph.degree() as f64;
    let mut tables = Vec::with_capacity(kmax);
    if kmax == 0 {
        return tables;
    }
    tables.push(DpTable::new(1, n, 1, first));
    for k in 2..=kmax {
        let prev = &tables[k - 2].values;
        let next = (0..n)
            .map(|a| {
                let acc: f64 = graph.generators().iter().map(|&u| prev[a ^ u as usize]).sum();
                signs[a] * acc * inv_d
            })
            .collect();
        tables.push(DpTable::new(k, n, 1, next));
    }
    tables
}

fn check_len(graph: &CayleyGraph, len: usize) -> Result<()> {
    if len != graph.vertex_count() {
        return Err(Error::LengthMismatch {
            left: len,
            right: graph.vertex_count(),
        });
    }
    Ok(())
}

/// Pure random-walk tables h_1 .. h_kmax (table `k - 1` is level k).
pub fn dp_hk(graph: &CayleyGraph, f: &SignedFn, kmax: usize) -> Result<Vec<DpTable>> {
    check_len(graph, f.len())?;
    let signs = f.signs();
    Ok(walk_tables(graph, &signs, signs.clone(), kmax))
}

/// h_k with weight `H` on the last vertex of the walk.
pub fn dp_hk_weighted(graph: &CayleyGraph, f: &SignedFn, weight: &[f64], kmax: usize) -> Result<Vec<DpTable>> {
    check_len(graph, f.len())?;
    check_len(graph, weight.len())?;
    let signs = f.signs();
    let first = signs.iter().zip(weight).map(|(s, w)| s * w).collect();
    Ok(walk_tables(graph, &signs, first, kmax))
}

fn bias_hypothesis(graph: &CayleyGraph, f: &SignedFn) -> Result<(f64, Hypotheses)> {
    let lambda = graphs::spectrum(graph)?.lambda;
    let hyp = Hypotheses::new(vec![Condition::new("bias(f) <= sqrt(lambda)", f.bias(), lambda.sqrt())]);
    Ok((lambda, hyp))
}

/// eps_k <= (4 lambda)^(k/2) / 2 and E[h_k^2] <= (4 lambda)^(k-1) for
/// k = 1..kmax, with lambda measured.
pub fn check_random_walk_claim(graph: &CayleyGraph, f: &SignedFn, kmax: usize) -> Result<MomentReport> {
    let (lambda, hyp) = bias_hypothesis(graph, f)?;
    let rows = dp_hk(graph, f, kmax)?
        .iter()
        .map(|t| {
            let m = t.moments();
            let k = t.level as i32;
            let bound_eps = 0.5 * (4.0 * lambda).powf(k as f64 / 2.0);
            let bound_sq = (4.0 * lambda).powi(k - 1);
            MomentRow {
                k: t.level,
                epsilon: m.epsilon,
                sigma: m.sigma,
                mean_square: m.mean_square,
                bound_eps: Some(bound_eps),
                bound_sigma: Some(bound_sq.sqrt()),
                pass: m.epsilon <= bound_eps + BOUND_SLACK && m.mean_square <= bound_sq + BOUND_SLACK,
                vacuous: bound_eps >= 1.0 || bound_sq >= 1.0,
            }
        })
        .collect();
    Ok(MomentReport {
        check: "random-walk".into(),
        hypotheses: Some(hyp),
        rows,
        notes: vec![format!("lambda = {lambda}; bound_sigma bounds sqrt(E[h_k^2])")],
    })
}

/// The weighted claim for k = 2..kmax:
/// eps_k <= 2^(k-2) (lambda^((k-1)/2) eps_1 + lambda^(k/2) sigma_1) and
/// sqrt(E[hhat_k^2]) <= 2^(k-2) (lambda^((k-2)/2) eps_1 + lambda^((k-1)/2) sigma_1).
pub fn check_weighted_walk_claim(graph: &CayleyGraph, f: &SignedFn, weight: &[f64], kmax: usize) -> Result<MomentReport> {
    let (lambda, hyp) = bias_hypothesis(graph, f)?;
    let tables = dp_hk_weighted(graph, f, weight, kmax)?;
    let Some(first) = tables.first() else {
        return Err(Error::invalid("kmax must be at least 1"));
    };
    let m1 = first.moments();
    let (e1, s1) = (m1.epsilon, m1.sigma);
    let sup = weight.iter().fold(0.0f64, |acc, w| acc.max(w.abs()));
    let mut rows = Vec::new();
    for t in &tables[1..] {
        let m = t.moments();
        let k = t.level as f64;
        let scale = 2f64.powf(k - 2.0);
        let bound_eps = scale * (lambda.powf((k - 1.0) / 2.0) * e1 + lambda.powf(k / 2.0) * s1);
        let bound_rms = scale * (lambda.powf((k - 2.0) / 2.0) * e1 + lambda.powf((k - 1.0) / 2.0) * s1);
        rows.push(MomentRow {
            k: t.level,
            epsilon: m.epsilon,
            sigma: m.sigma,
            mean_square: m.mean_square,
            bound_eps: Some(bound_eps),
            bound_sigma: Some(bound_rms),
            pass: m.epsilon <= bound_eps + BOUND_SLACK && m.mean_square.sqrt() <= bound_rms + BOUND_SLACK,
            vacuous: bound_eps >= sup || bound_rms >= sup,
        });
    }
    Ok(MomentReport {
        check: "weighted-walk".into(),
        hypotheses: Some(hyp),
        rows,
        notes: vec![format!(
            "lambda = {lambda}; eps_1 = {e1}; sigma_1 = {s1}; values range over [-{sup}, {sup}]"
        )],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplify::Verdict;
    use proptest::prelude::*;

    #[test]
    fn first_level_and_zero_fn() {
        let g = graphs::build_complete(4, false).unwrap();
        let f = SignedFn::balanced(16).unwrap();
        let h = dp_hk(&g, &f, 5).unwrap();
        assert_eq!(h[0].values, f.signs());
        assert_eq!(h[4].level, 5);
        let z = dp_hk(&g, &SignedFn::zero(16).unwrap(), 5).unwrap();
        assert!(z.iter().all(|t| t.values.iter().all(|&x| x == 1.0)));
    }

    #[test]
    fn h_matches_path_enumeration() {
        let g = graphs::build_aghp(4, 1).unwrap();
        let f = SignedFn::from_bits((0..16).map(|a| a % 3 == 0).collect()).unwrap();
        let signs = f.signs();
        let h = dp_hk(&g, &f, 4).unwrap();
        let d = g.degree();
        for a in 0..16usize {
            let mut total = 0.0;
            for path in 0..d.pow(3) {
                let (mut v, mut p, mut prod) = (a, path, signs[a]);
                for _ in 0..3 {
                    v ^= g.generators()[p % d] as usize;
                    p /= d;
                    prod *= signs[v];
                }
                total += prod;
            }
            assert!((h[3].values[a] - total / d.pow(3) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn complete_graph_random_walk_claim() {
        let g = graphs::build_complete(4, false).unwrap();
        let report = check_random_walk_claim(&g, &SignedFn::balanced(16).unwrap(), 10).unwrap();
        assert_eq!(report.verdict(), Verdict::Pass);
        assert_eq!(report.rows.len(), 10);
    }

    #[test]
    fn weighted_claim_on_expanders() {
        let g = graphs::build_aghp(8, 4).unwrap();
        let f = SignedFn::balanced(256).unwrap();
        let weight: Vec<f64> = (0..256).map(|a| ((a * 37 % 101) as f64 / 50.0) - 1.0).collect();
        let report = check_weighted_walk_claim(&g, &f, &weight, 8).unwrap();
        assert_eq!(report.verdict(), Verdict::Pass, "{:?}", report.rows);
    }

    #[test]
    fn unmet_bias_hypothesis_is_reported() {
        let g = graphs::build_complete(4, false).unwrap();
        let report = check_random_walk_claim(&g, &SignedFn::zero(16).unwrap(), 4).unwrap();
        assert_eq!(report.verdict(), Verdict::HypothesesUnmet);
    }

    proptest! {
        #[test]
        fn unit_weight_recovers_h(bits in prop::collection::vec(any::<bool>(), 64)) {
            let g = graphs::build_aghp(6, 3).unwrap();
            let f = SignedFn::from_bits(bits).unwrap();
            let h = dp_hk(&g, &f, 6).unwrap();
            let hh = dp_hk_weighted(&g, &f, &[1.0; 64], 6).unwrap();
            for (x, y) in h.iter().zip(&hh) {
                for (p, q) in x.values.iter().zip(&y.values) {
                    prop_assert!((p - q).abs() <= 1e-12);
                }
            }
        }
    }
}
