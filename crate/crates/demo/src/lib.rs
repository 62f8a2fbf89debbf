//! Browser bindings: each export takes plain numbers and returns a JSON
//! string for `www/index.html` to plot.

use serde::Serialize;
use wasm_bindgen::prelude::*;
use widewalk::amplify::{dp_gk, SignedFn, DEFAULT_DP_BUDGET};
use widewalk::graphs;
use widewalk::hitting::{self, HittingInstance};
use widewalk::walks::{ReplacementSystem, WalkParams};

/// Largest demo instance, in DP table entries or hitting-walk states.
const DEMO_BUDGET: u128 = DEFAULT_DP_BUDGET;

fn to_js(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

fn json<T: Serialize>(v: &T) -> Result<String, JsError> {
    serde_json::to_string(v).map_err(to_js)
}

#[derive(Serialize)]
pub struct Spectrum {
    pub r: u32,
    pub ell: u32,
    pub degree: usize,
    pub lambda: f64,
    pub bound: f64,
    /// |character sum| for every nonzero alpha, in index order.
    pub sums: Vec<f64>,
}

pub fn spectrum_report(r: u32, ell: u32) -> widewalk::Result<Spectrum> {
    if r > 16 {
        return Err(widewalk::Error::InvalidParameter("the demo scans r <= 16".into()));
    }
    let g = graphs::build_aghp(r, ell)?;
    let sums: Vec<f64> = graphs::all_character_sums(&g)?.iter().skip(1).map(|x| x.abs()).collect();
    Ok(Spectrum {
        r,
        ell,
        degree: g.degree(),
        lambda: graphs::spectrum(&g)?.lambda,
        bound: (r as f64 - 1.0) / (1u64 << ell) as f64,
        sums,
    })
}

/// Exact expansion of the AGHP graph over F_2^r with 2^(2 ell) generators.
#[wasm_bindgen]
pub fn aghp_spectrum(r: u32, ell: u32) -> Result<String, JsError> {
    json(&spectrum_report(r, ell).map_err(to_js)?)
}

#[derive(Serialize)]
pub struct Curve {
    pub lambda_outer: f64,
    pub lambda_inner: f64,
    pub bias: f64,
    pub k: Vec<usize>,
    pub epsilon: Vec<f64>,
    pub sigma: Vec<f64>,
    /// (2 lambda_B)^(k (1 - 4/s)).
    pub bound: Vec<f64>,
}

pub fn curve_report(m: u32, s: u32, ell: u32, f_bits: &str, kmax: usize) -> widewalk::Result<Curve> {
    let sys = ReplacementSystem::standard(WalkParams::new(m, s, ell, kmax.max(1))?)?;
    let n = sys.outer_size();
    let f = if f_bits.trim().is_empty() {
        SignedFn::balanced(n)?
    } else {
        let bits: Vec<bool> = f_bits.trim().chars().map(|c| c == '1').collect();
        if bits.len() != n || f_bits.trim().chars().any(|c| c != '0' && c != '1') {
            return Err(widewalk::Error::Parse(format!("f needs {n} characters in {{0, 1}}")));
        }
        SignedFn::from_bits(bits)?
    };
    let tables = dp_gk(&sys, &f, kmax, DEMO_BUDGET)?;
    let lambda = sys.lambda_inner();
    let exponent = 1.0 - 4.0 / s as f64;
    let mut curve = Curve {
        lambda_outer: sys.lambda_outer(),
        lambda_inner: lambda,
        bias: f.bias(),
        k: Vec::new(),
        epsilon: Vec::new(),
        sigma: Vec::new(),
        bound: Vec::new(),
    };
    for (k, t) in tables.iter().enumerate() {
        let mo = t.moments();
        curve.k.push(k);
        curve.epsilon.push(mo.epsilon);
        curve.sigma.push(mo.sigma);
        curve.bound.push((2.0 * lambda).powf(k as f64 * exponent));
    }
    Ok(curve)
}

/// eps_k and sigma_k of the wide walk on complete(m) x AGHP(ms, ell) for
/// k = 0..=kmax. `f_bits` lists f on the 2^m outer vertices ("" = balanced).
#[wasm_bindgen]
pub fn amplification_curve(m: u32, s: u32, ell: u32, f_bits: &str, kmax: usize) -> Result<String, JsError> {
    json(&curve_report(m, s, ell, f_bits, kmax).map_err(to_js)?)
}

#[derive(Serialize)]
pub struct Hitting {
    pub lambda: f64,
    pub rho: f64,
    pub t: Vec<usize>,
    pub exact: Vec<f64>,
    pub bound: Vec<f64>,
}

pub fn hitting_report(r: u32, ell: u32, set_size: usize, tmax: usize) -> widewalk::Result<Hitting> {
    let g = graphs::build_aghp(r, ell)?;
    let set = hitting::parse_vertex_set(&format!("first-{set_size}"), r)?;
    let inst = HittingInstance::new(g, &set)?;
    let rep = hitting::check_hitting(&inst, tmax, DEMO_BUDGET)?;
    Ok(Hitting {
        lambda: rep.lambda,
        rho: rep.rho,
        t: rep.rows.iter().map(|x| x.t).collect(),
        exact: rep.rows.iter().map(|x| x.exact).collect(),
        bound: rep.rows.iter().map(|x| x.bound).collect(),
    })
}

/// Probability that a t-step walk on AGHP(r, ell) stays in the first
/// `set_size` vertices, against rho (rho + lambda (1 - rho))^(t-1).
#[wasm_bindgen]
pub fn hitting_curve(r: u32, ell: u32, set_size: usize, tmax: usize) -> Result<String, JsError> {
    json(&hitting_report(r, ell, set_size, tmax).map_err(to_js)?)
}
