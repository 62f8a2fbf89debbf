//! s-wide replacement product walks.
//!
//! An inner vertex `b` in F_2^(m s) is read as s blocks of m bits, block 1
//! in the lowest bits. A t-step walk has outer vertices `a_0..a_t` and inner
//! vertices `b_1..b_t`:
//!
//! ```text
//! b_{j+1} = shift(b_j + u_j)        u_j uniform over the inner generators
//! a_j     = rotation(a_{j-1}, b_j)  the block-1-of-b_j neighbor of a_{j-1}
//! ```
//!
//! Every inner edge `b_j -> b_{j+1}` carries one generator index, so a walk
//! is fixed by a base point `(a_p, b_{p+1})` at some pivot `p` plus the t-1
//! edge indices. Pivot 0 is the ordinary forward walk; other pivots are
//! "start in the middle" walks, unrolled backwards through
//! `b_j = shift^-1(b_{j+1}) + u_j` and `a_{j-1} = rotation(a_j, b_j)`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_budget, Error, Result};
use crate::gf2::BitWord;
use crate::graphs::{self, CayleyGraph, BOUND_SLACK};

/// Default cap on the number of enumerated walk seeds.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1 << 28;

/// Deterministic, independent RNG stream `stream` under master `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WalkParams {
    /// Bits per block; the outer degree is 2^m.
    pub m: u32,
    /// Blocks per inner vertex.
    pub s: u32,
    /// AGHP parameter of the inner graph.
    pub ell: u32,
    /// Number of walk steps.
    pub t: usize,
}

impl WalkParams {
    pub fn new(m: u32, s: u32, ell: u32, t: usize) -> Result<Self> {
        let p = Self { m, s, ell, t };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.s < 2 || self.t == 0 {
            return Err(Error::invalid(format!(
                "walk parameters need m >= 1, s >= 2, t >= 1; got m={}, s={}, t={}",
                self.m, self.s, self.t
            )));
        }
        if self.r() > graphs::MAX_EXACT_SPECTRUM_DIM {
            return Err(Error::invalid(format!("inner dimension m*s = {} is too large", self.r())));
        }
        if 2 * self.ell > self.r() {
            return Err(Error::invalid(format!("ell = {} exceeds r/2 = {}/2", self.ell, self.r())));
        }
        Ok(())
    }

    pub fn r(&self) -> u32 {
        self.m * self.s
    }

    pub fn outer_degree(&self) -> usize {
        1 << self.m
    }

    pub fn inner_degree(&self) -> usize {
        1 << (2 * self.ell)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftDirection {
    Forward,
    Backward,
}

/// Block layout of an inner vertex: s blocks of m bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Blocks {
    m: u32,
    s: u32,
}

impl Blocks {
    pub fn new(m: u32, s: u32) -> Self {
        assert!(m >= 1 && s >= 1 && m * s <= 63);
        Self { m, s }
    }

    #[inline]
    fn block_mask(&self) -> u64 {
        (1u64 << self.m) - 1
    }

    #[inline]
    fn full_mask(&self) -> u64 {
        (1u64 << (self.m * self.s)) - 1
    }

    /// Block 1, read as an outer generator index.
    #[inline]
    pub fn first(&self, b: u64) -> usize {
        (b & self.block_mask()) as usize
    }

    /// (b[1], .., b[s]) -> (b[2], .., b[s], b[1]).
    #[inline]
    pub fn forward(&self, b: u64) -> u64 {
        (b >> self.m) | ((b & self.block_mask()) << (self.m * (self.s - 1)))
    }

    #[inline]
    pub fn backward(&self, b: u64) -> u64 {
        ((b << self.m) & self.full_mask()) | (b >> (self.m * (self.s - 1)))
    }
}

/// Cyclic block shift of an inner vertex.
pub fn shift(b: &BitWord, m: u32, s: u32, direction: ShiftDirection) -> Result<BitWord> {
    if m == 0 || s == 0 || b.len() != (m * s) as usize || m * s > 63 {
        return Err(Error::LengthMismatch {
            left: b.len(),
            right: (m * s) as usize,
        });
    }
    let blocks = Blocks::new(m, s);
    let v = b.to_u64().expect("length at most 63");
    let out = match direction {
        ShiftDirection::Forward => blocks.forward(v),
        ShiftDirection::Backward => blocks.backward(v),
    };
    BitWord::from_u64(out, b.len())
}

/// Outer graph A, inner graph B and the walk parameters wired together.
#[derive(Debug, Clone)]
pub struct ReplacementSystem {
    outer: CayleyGraph,
    inner: CayleyGraph,
    params: WalkParams,
    blocks: Blocks,
    lambda_outer: f64,
    lambda_inner: f64,
}

impl ReplacementSystem {
    pub fn new(outer: CayleyGraph, inner: CayleyGraph, params: WalkParams) -> Result<Self> {
        params.validate()?;
        if outer.degree() != params.outer_degree() {
            return Err(Error::invalid(format!(
                "outer graph has degree {}, the rotation map needs exactly 2^m = {}",
                outer.degree(),
                params.outer_degree()
            )));
        }
        if inner.dim() != params.r() {
            return Err(Error::invalid(format!(
                "inner graph lives in F_2^{}, expected m*s = {}",
                inner.dim(),
                params.r()
            )));
        }
        let lambda_outer = graphs::spectrum(&outer)?.lambda;
        let lambda_inner = graphs::spectrum(&inner)?.lambda;
        Ok(Self {
            blocks: Blocks::new(params.m, params.s),
            outer,
            inner,
            params,
            lambda_outer,
            lambda_inner,
        })
    }

    /// Complete-with-self-loops outer graph over F_2^m and the AGHP inner graph.
    pub fn standard(params: WalkParams) -> Result<Self> {
        params.validate()?;
        let outer = graphs::build_complete_selfloop(params.m)?;
        let inner = graphs::build_aghp(params.r(), params.ell)?;
        Self::new(outer, inner, params)
    }

    pub fn outer(&self) -> &CayleyGraph {
        &self.outer
    }

    pub fn inner(&self) -> &CayleyGraph {
        &self.inner
    }

    pub fn params(&self) -> WalkParams {
        self.params
    }

    pub fn with_steps(&self, t: usize) -> Result<Self> {
        let params = WalkParams { t, ..self.params };
        params.validate()?;
        Ok(Self { params, ..self.clone() })
    }

    pub fn blocks(&self) -> Blocks {
        self.blocks
    }

    pub fn outer_size(&self) -> usize {
        self.outer.vertex_count()
    }

    pub fn inner_size(&self) -> usize {
        self.inner.vertex_count()
    }

    pub fn inner_degree(&self) -> usize {
        self.inner.degree()
    }

    /// Measured expansion of the outer graph.
    pub fn lambda_outer(&self) -> f64 {
        self.lambda_outer
    }

    /// Measured expansion of the inner graph.
    pub fn lambda_inner(&self) -> f64 {
        self.lambda_inner
    }

    /// The neighbor of `a` selected by block 1 of `b`.
    #[inline]
    pub fn rotation(&self, a: u64, b: u64) -> u64 {
        self.outer.neighbor_index(a, self.blocks.first(b))
    }

    /// Rotation by an explicit block value.
    #[inline]
    pub fn rotation_by_block(&self, a: u64, block: usize) -> u64 {
        self.outer.neighbor_index(a, block)
    }

    /// Every inverse pair is (b, b): rotating twice by the same block
    /// returns to the start. Exhaustive over A x [d_A].
    pub fn check_local_invertibility(&self) -> bool {
        (0..self.outer_size() as u64).all(|a| {
            (0..self.params.outer_degree())
                .all(|blk| self.rotation_by_block(self.rotation_by_block(a, blk), blk) == a)
        })
    }

    /// |A| |B| d_B^(t-1): the number of t-step walk seeds.
    pub fn seed_count(&self, t: usize) -> u128 {
        let mut n = self.outer_size() as u128 * self.inner_size() as u128;
        for _ in 1..t {
            n = n.saturating_mul(self.inner_degree() as u128);
        }
        n
    }

    /// Unrolls a walk from its seed.
    pub fn build_walk(&self, seed: &WalkSeed) -> Result<SWalk> {
        let t = seed.steps.len() + 1;
        if seed.pivot >= t {
            return Err(Error::invalid(format!("pivot {} outside 0..{t}", seed.pivot)));
        }
        if seed.a as usize >= self.outer_size() || seed.b as usize >= self.inner_size() {
            return Err(Error::invalid("walk base point outside the graphs"));
        }
        if seed.steps.iter().any(|&i| i >= self.inner_degree()) {
            return Err(Error::invalid("walk step index outside the inner generator list"));
        }
        let gens = self.inner.generators();
        let p = seed.pivot;
        // b[j] holds b_{j+1}; a[j] holds a_j.
        let mut b = vec![0u64; t];
        let mut a = vec![0u64; t + 1];
        b[p] = seed.b;
        a[p] = seed.a;
        for j in p + 1..t {
            b[j] = self.blocks.forward(b[j - 1] ^ gens[seed.steps[j - 1]]);
        }
        for j in (0..p).rev() {
            b[j] = self.blocks.backward(b[j + 1]) ^ gens[seed.steps[j]];
        }
        for j in p + 1..=t {
            a[j] = self.rotation(a[j - 1], b[j - 1]);
        }
        for j in (0..p).rev() {
            a[j] = self.rotation(a[j + 1], b[j]);
        }
        Ok(SWalk {
            a_vertices: a,
            b_vertices: b,
            seed: seed.clone(),
        })
    }
}

/// Base point `(a_p, b_{p+1})` at pivot `p` plus one generator index per
/// inner edge (`steps[j]` joins `b_{j+1}` and `b_{j+2}`).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WalkSeed {
    pub pivot: usize,
    pub a: u64,
    pub b: u64,
    pub steps: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SWalk {
    /// a_0 .. a_t
    pub a_vertices: Vec<u64>,
    /// b_1 .. b_t
    pub b_vertices: Vec<u64>,
    pub seed: WalkSeed,
}

impl SWalk {
    pub fn steps(&self) -> usize {
        self.b_vertices.len()
    }
}

fn draw_seed<R: Rng + ?Sized>(sys: &ReplacementSystem, t: usize, pivot: usize, start: Option<(u64, u64)>, rng: &mut R) -> WalkSeed {
    let (a, b) = start.unwrap_or_else(|| {
        (
            rng.gen_range(0..sys.outer_size() as u64),
            rng.gen_range(0..sys.inner_size() as u64),
        )
    });
    let steps = (1..t).map(|_| rng.gen_range(0..sys.inner_degree())).collect();
    WalkSeed { pivot, a, b, steps }
}

/// Samples a t-step walk forward from `start = (a_0, b_1)`, or from a
/// uniform base point.
pub fn sample_swalk<R: Rng + ?Sized>(sys: &ReplacementSystem, t: usize, rng: &mut R, start: Option<(u64, u64)>) -> Result<SWalk> {
    if t == 0 {
        return Err(Error::invalid("walks need t >= 1"));
    }
    if let Some((a, b)) = start {
        if a as usize >= sys.outer_size() || b as usize >= sys.inner_size() {
            return Err(Error::invalid("start point outside the graphs"));
        }
    }
    let seed = draw_seed(sys, t, 0, start, rng);
    sys.build_walk(&seed)
}

/// Samples a t-step walk by drawing `a_pivot` and `b_{pivot+1}` first and
/// unrolling in both directions.
pub fn middle_start_sample<R: Rng + ?Sized>(sys: &ReplacementSystem, t: usize, pivot: usize, rng: &mut R) -> Result<SWalk> {
    if t == 0 || pivot >= t {
        return Err(Error::invalid(format!("pivot {pivot} outside 0..{t}")));
    }
    let seed = draw_seed(sys, t, pivot, None, rng);
    sys.build_walk(&seed)
}

/// Iterator over every seed of `sys RW^t` in lexicographic order of
/// `(a_0, b_1, steps)`; each walk has probability `1 / seed_count(t)`.
pub struct SeedEnumerator<'a> {
    sys: &'a ReplacementSystem,
    next: Option<WalkSeed>,
}

impl Iterator for SeedEnumerator<'_> {
    type Item = SWalk;

    fn next(&mut self) -> Option<SWalk> {
        let seed = self.next.take()?;
        let walk = self.sys.build_walk(&seed).expect("enumerated seeds are valid");
        let mut succ = seed;
        let d = self.sys.inner_degree();
        let mut carry = true;
        for s in succ.steps.iter_mut().rev() {
            *s += 1;
            if *s < d {
                carry = false;
                break;
            }
            *s = 0;
        }
        if carry {
            succ.b += 1;
            if succ.b as usize == self.sys.inner_size() {
                succ.b = 0;
                succ.a += 1;
            }
        }
        if (succ.a as usize) < self.sys.outer_size() {
            self.next = Some(succ);
        }
        Some(walk)
    }
}

pub fn enumerate_swalk_seeds(sys: &ReplacementSystem, t: usize, budget: u128) -> Result<SeedEnumerator<'_>> {
    enumerate_with_pivot(sys, t, 0, budget)
}

/// Enumerates all walks generated from pivot `pivot`.
pub fn enumerate_with_pivot(sys: &ReplacementSystem, t: usize, pivot: usize, budget: u128) -> Result<SeedEnumerator<'_>> {
    if t == 0 || pivot >= t {
        return Err(Error::invalid(format!("need t >= 1 and pivot < t; got t={t}, pivot={pivot}")));
    }
    check_budget(sys.seed_count(t), budget)?;
    Ok(SeedEnumerator {
        sys,
        next: Some(WalkSeed {
            pivot,
            a: 0,
            b: 0,
            steps: vec![0; t - 1],
        }),
    })
}

fn total_variation<K: Ord>(p: &BTreeMap<K, u64>, p_total: u64, q: &BTreeMap<K, u64>, q_total: u64) -> f64 {
    let mut tv = 0.0;
    for (k, &c) in p {
        let qc = q.get(k).copied().unwrap_or(0);
        tv += (c as f64 / p_total as f64 - qc as f64 / q_total as f64).abs();
    }
    for (k, &c) in q {
        if !p.contains_key(k) {
            tv += c as f64 / q_total as f64;
        }
    }
    tv / 2.0
}

/// Exact total-variation distance between two walk-generation procedures.
pub fn middle_start_tv(sys: &ReplacementSystem, t: usize, pivot: usize, budget: u128) -> Result<f64> {
    let collect = |p: usize| -> Result<(BTreeMap<(Vec<u64>, Vec<u64>), u64>, u64)> {
        let mut counts = BTreeMap::new();
        let mut total = 0;
        for w in enumerate_with_pivot(sys, t, p, budget)? {
            *counts.entry((w.a_vertices, w.b_vertices)).or_insert(0) += 1;
            total += 1;
        }
        Ok((counts, total))
    };
    let (fwd, nf) = collect(0)?;
    let (mid, nm) = collect(pivot)?;
    Ok(total_variation(&fwd, nf, &mid, nm))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistributionCheck {
    pub steps: usize,
    /// Max over start vertices of the total-variation distance, or the max
    /// cell deviation from uniform.
    pub distance: f64,
    pub equal: bool,
}

/// Distribution of block-1 sequences (b_1[1], .., b_k[1]) under the shifted
/// inner walk, as counts indexed by the base-d_A encoding.
fn first_block_counts(sys: &ReplacementSystem, k: usize, budget: u128) -> Result<(Vec<u64>, u64)> {
    let d_a = sys.params.outer_degree();
    let cells = (d_a as u128).checked_pow(k as u32).unwrap_or(u128::MAX);
    check_budget(sys.inner_size() as u128 * (sys.inner_degree() as u128).pow(k.saturating_sub(1) as u32), budget)?;
    check_budget(cells, budget)?;
    let mut counts = vec![0u64; cells as usize];
    let mut total = 0u64;
    let gens = sys.inner.generators();
    let blocks = sys.blocks;
    // Depth-first over (b_1, u_1, .., u_{k-1}).
    fn rec(b: u64, depth: usize, k: usize, code: usize, d_a: usize, gens: &[u64], blocks: Blocks, counts: &mut [u64], total: &mut u64) {
        let code = code * d_a + blocks.first(b);
        if depth + 1 == k {
            counts[code] += 1;
            *total += 1;
            return;
        }
        for &u in gens {
            rec(blocks.forward(b ^ u), depth + 1, k, code, d_a, gens, blocks, counts, total);
        }
    }
    if k > 0 {
        for b in 0..sys.inner_size() as u64 {
            rec(b, 0, k, 0, d_a, gens, blocks, &mut counts, &mut total);
        }
    } else {
        counts[0] = 1;
        total = 1;
    }
    Ok((counts, total))
}

/// Exact check that the first blocks of k consecutive shifted-walk vertices
/// are uniform on [d_A]^k. Only meaningful for k <= s.
pub fn check_first_coord_uniform(sys: &ReplacementSystem, k: usize, budget: u128) -> Result<DistributionCheck> {
    if k == 0 || k > sys.params.s as usize {
        return Err(Error::invalid(format!("uniformity holds for 1 <= k <= s = {}; got k = {k}", sys.params.s)));
    }
    let (counts, total) = first_block_counts(sys, k, budget)?;
    let target = 1.0 / counts.len() as f64;
    let deviation = counts
        .iter()
        .map(|&c| (c as f64 / total as f64 - target).abs())
        .fold(0.0, f64::max);
    Ok(DistributionCheck {
        steps: k,
        distance: deviation,
        equal: deviation <= BOUND_SLACK,
    })
}

/// Max over start vertices of the exact TV distance between the outer
/// trajectory (a_0, .., a_steps) of the wide walk and a pure random walk on
/// A with the same number of steps.
pub fn check_pseudorandomness(sys: &ReplacementSystem, steps: usize, budget: u128) -> Result<DistributionCheck> {
    if steps == 0 {
        return Ok(DistributionCheck {
            steps,
            distance: 0.0,
            equal: true,
        });
    }
    let (wide, wide_total) = first_block_counts(sys, steps, budget)?;
    let d_a = sys.params.outer_degree();
    check_budget(sys.outer_size() as u128 * wide.len() as u128, budget)?;
    let decode = |mut code: usize| {
        let mut idx = vec![0usize; steps];
        for slot in idx.iter_mut().rev() {
            *slot = code % d_a;
            code /= d_a;
        }
        idx
    };
    let trajectory = |a0: u64, idx: &[usize]| {
        let mut a = a0;
        let mut out = Vec::with_capacity(idx.len() + 1);
        out.push(a);
        for &i in idx {
            a = sys.rotation_by_block(a, i);
            out.push(a);
        }
        out
    };
    let mut worst = 0.0f64;
    for a0 in 0..sys.outer_size() as u64 {
        let mut wide_dist = BTreeMap::new();
        let mut pure_dist = BTreeMap::new();
        for (code, &c) in wide.iter().enumerate() {
            let idx = decode(code);
            let traj = trajectory(a0, &idx);
            if c > 0 {
                *wide_dist.entry(traj.clone()).or_insert(0) += c;
            }
            // Every index sequence is equally likely under the pure walk.
            *pure_dist.entry(traj).or_insert(0) += 1;
        }
        let tv = total_variation(&wide_dist, wide_total, &pure_dist, wide.len() as u64);
        worst = worst.max(tv);
    }
    Ok(DistributionCheck {
        steps,
        distance: worst,
        equal: worst <= BOUND_SLACK,
    })
}

/// CSV dump of walks: one row per walk, vertices in hex.
pub fn walks_to_csv(sys: &ReplacementSystem, walks: &[SWalk]) -> String {
    let t = walks.first().map_or(0, SWalk::steps);
    let mut out = String::from("walk");
    for j in 0..=t {
        out.push_str(&format!(",a{j}"));
    }
    for j in 1..=t {
        out.push_str(&format!(",b{j}"));
    }
    out.push('\n');
    let a_len = sys.outer.dim() as usize;
    let b_len = sys.inner.dim() as usize;
    for (i, w) in walks.iter().enumerate() {
        out.push_str(&i.to_string());
        for &a in &w.a_vertices {
            out.push(',');
            out.push_str(&BitWord::from_u64(a, a_len).expect("vertex fits").to_hex());
        }
        for &b in &w.b_vertices {
            out.push(',');
            out.push_str(&BitWord::from_u64(b, b_len).expect("vertex fits").to_hex());
        }
        out.push('\n');
    }
    out
}
