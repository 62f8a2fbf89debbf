//! Probability that a random walk stays inside a vertex set.

use serde::{Deserialize, Serialize};

use crate::error::{check_budget, Error, Result};
use crate::graphs::{self, CayleyGraph, BOUND_SLACK};

#[derive(Debug, Clone, PartialEq)]
pub struct HittingInstance {
    graph: CayleyGraph,
    members: Vec<bool>,
    size: usize,
}

impl HittingInstance {
    pub fn new(graph: CayleyGraph, set: &[u64]) -> Result<Self> {
        let n = graph.vertex_count();
        let mut members = vec![false; n];
        for &v in set {
            if v as usize >= n {
                return Err(Error::invalid(format!("vertex {v:#x} outside a graph with {n} vertices")));
            }
            members[v as usize] = true;
        }
        let size = members.iter().filter(|&&m| m).count();
        if size == 0 {
            return Err(Error::invalid("the set must be nonempty"));
        }
        Ok(Self { graph, members, size })
    }

    pub fn graph(&self) -> &CayleyGraph {
        &self.graph
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn contains(&self, v: u64) -> bool {
        self.members[v as usize]
    }

    /// |S| / |A|
    pub fn rho(&self) -> f64 {
        self.size as f64 / self.graph.vertex_count() as f64
    }
}

/// Parses `first-K` (vertices 0..K) or a comma-separated list of hex vertices.
pub fn parse_vertex_set(spec: &str, dim: u32) -> Result<Vec<u64>> {
    let spec = spec.trim();
    if let Some(k) = spec.strip_prefix("first-") {
        let k: u64 = k.parse().map_err(|_| Error::Parse(format!("bad set size in {spec:?}")))?;
        return Ok((0..k).collect());
    }
    spec.split(',')
        .map(|h| {
            let h = h.trim();
            match u64::from_str_radix(h, 16) {
                Ok(v) if dim >= 64 || v >> dim == 0 => Ok(v),
                _ => Err(Error::Parse(format!("bad vertex {h:?} for dimension {dim}"))),
            }
        })
        .collect()
}

/// Exact probabilities that a walk with uniform start has all of its first
/// t vertices in S, for t = 1..tmax.
pub fn hitting_probs(inst: &HittingInstance, tmax: usize, budget: u128) -> Result<Vec<f64>> {
    let n = inst.graph.vertex_count();
    check_budget(n as u128 * tmax as u128, budget)?;
    let gens = inst.graph.generators();
    let inv_d = 1.0 / gens.len() as f64;
    // mass[a]: probability of being at a with every vertex so far in S.
    let mut mass: Vec<f64> = inst.members.iter().map(|&m| if m { 1.0 / n as f64 } else { 0.0 }).collect();
    let mut out = Vec::with_capacity(tmax);
    for t in 1..=tmax {
        if t > 1 {
            mass = (0..n)
                .map(|a| {
                    if inst.members[a] {
                        gens.iter().map(|&u| mass[a ^ u as usize]).sum::<f64>() * inv_d
                    } else {
                        0.0
                    }
                })
                .collect();
        }
        out.push(mass.iter().sum());
    }
    Ok(out)
}

pub fn hitting_prob_exact(inst: &HittingInstance, t: usize, budget: u128) -> Result<f64> {
    if t == 0 {
        return Err(Error::invalid("walks need t >= 1"));
    }
    Ok(*hitting_probs(inst, t, budget)?.last().expect("t >= 1"))
}

/// rho (rho + lambda (1 - rho))^(t-1)
pub fn hitting_bound(rho: f64, lambda: f64, t: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&lambda) || !(rho > 0.0 && rho <= 1.0) || t == 0 {
        return Err(Error::invalid(format!(
            "need 0 <= lambda <= 1, 0 < rho <= 1, t >= 1; got lambda = {lambda}, rho = {rho}, t = {t}"
        )));
    }
    Ok(rho * (rho + lambda * (1.0 - rho)).powi(t as i32 - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HittingRow {
    pub t: usize,
    pub exact: f64,
    pub bound: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingReport {
    pub rho: f64,
    pub lambda: f64,
    pub rows: Vec<HittingRow>,
}

impl HittingReport {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,exact,bound,pass\n");
        for r in &self.rows {
            out.push_str(&format!("{},{:e},{:e},{}\n", r.t, r.exact, r.bound, r.pass));
        }
        out
    }
}

/// Compares the exact probability with the bound at measured lambda for
/// t = 1..tmax.
pub fn check_hitting(inst: &HittingInstance, tmax: usize, budget: u128) -> Result<HittingReport> {
    let lambda = graphs::spectrum(&inst.graph)?.lambda;
    check_hitting_with(inst, lambda, tmax, budget)
}

pub fn check_hitting_with(inst: &HittingInstance, lambda: f64, tmax: usize, budget: u128) -> Result<HittingReport> {
    let rho = inst.rho();
    let rows = hitting_probs(inst, tmax, budget)?
        .into_iter()
        .enumerate()
        .map(|(i, exact)| {
            let bound = hitting_bound(rho, lambda, i + 1)?;
            Ok(HittingRow {
                t: i + 1,
                exact,
                bound,
                pass: exact <= bound + BOUND_SLACK,
            })
        })
        .collect::<Result<_>>()?;
    Ok(HittingReport { rho, lambda, rows })
}

/// |Phi - (lambda/2 + sqrt(lambda^2/4 + rho (1 - lambda) Phi))| at
/// Phi = rho + lambda (1 - rho).
pub fn phi_identity_residual(rho: f64, lambda: f64) -> f64 {
    let phi = rho + lambda * (1.0 - rho);
    (phi - (lambda / 2.0 + (lambda * lambda / 4.0 + rho * (1.0 - lambda) * phi).sqrt())).abs()
}

/// Largest residual over a grid of (rho, lambda) in [0, 1]^2.
pub fn check_phi_identity_grid(steps: usize) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..=steps {
        for j in 0..=steps {
            let rho = i as f64 / steps as f64;
            let lambda = j as f64 / steps as f64;
            worst = worst.max(phi_identity_residual(rho, lambda));
        }
    }
    worst
}
