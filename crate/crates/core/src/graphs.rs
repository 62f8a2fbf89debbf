//! Cayley graphs over F_2^dim: explicit constructions, exact spectral
//! expansion, and the expander mixing inequality.
//!
//! The eigenvectors of a Cayley graph over F_2^dim are the characters
//! `(-1)^<alpha, .>`, with eigenvalue equal to the normalized character sum
//! of the generator multiset. The expansion is therefore the largest
//! |character sum| over nonzero `alpha`, all of which come out of a single
//! Walsh–Hadamard transform of the generator histogram.

use std::collections::HashSet;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf2::{self, BitWord, Field};

/// Largest dimension for which the exhaustive character scan runs.
pub const MAX_EXACT_SPECTRUM_DIM: u32 = 24;
/// Largest vertex count accepted by the dense eigendecomposition.
pub const MAX_DENSE_VERTICES: usize = 1 << 12;
/// Largest supported group dimension.
pub const MAX_DIM: u32 = 62;

/// Absolute slack for bound checks.
pub const BOUND_SLACK: f64 = 1e-12;
/// Agreement tolerance between independent numerical routes.
pub const CROSS_CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CayleyGraph {
    name: String,
    dim: u32,
    generators: Vec<u64>,
    multigraph: bool,
}

impl CayleyGraph {
    /// Generator order is significant: it defines neighbor indexing.
    /// Repeated generators are rejected unless `multigraph` is set.
    pub fn new(name: impl Into<String>, dim: u32, generators: Vec<u64>, multigraph: bool) -> Result<Self> {
        if dim > MAX_DIM {
            return Err(Error::invalid(format!("dimension {dim} exceeds {MAX_DIM}")));
        }
        if generators.is_empty() {
            return Err(Error::invalid("a Cayley graph needs at least one generator"));
        }
        if let Some(&g) = generators.iter().find(|&&g| dim < 64 && g >> dim != 0) {
            return Err(Error::invalid(format!("generator {g:#x} is outside F_2^{dim}")));
        }
        if !multigraph {
            let mut seen = HashSet::with_capacity(generators.len());
            if let Some(&g) = generators.iter().find(|&&g| !seen.insert(g)) {
                return Err(Error::invalid(format!(
                    "generator {g:#x} repeats; repeated generators need multigraph mode"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            dim,
            generators,
            multigraph,
        })
    }

    pub fn from_words(name: impl Into<String>, dim: u32, gens: &[BitWord], multigraph: bool) -> Result<Self> {
        let packed = gens
            .iter()
            .map(|w| {
                if w.len() != dim as usize {
                    return Err(Error::LengthMismatch {
                        left: w.len(),
                        right: dim as usize,
                    });
                }
                Ok(w.to_u64().expect("dimension checked against MAX_DIM"))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(name, dim, packed, multigraph)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        1usize << self.dim
    }

    pub fn degree(&self) -> usize {
        self.generators.len()
    }

    pub fn is_multigraph(&self) -> bool {
        self.multigraph
    }

    pub fn generators(&self) -> &[u64] {
        &self.generators
    }

    pub fn generator_words(&self) -> Vec<BitWord> {
        self.generators
            .iter()
            .map(|&g| BitWord::from_u64(g, self.dim as usize).expect("generator fits"))
            .collect()
    }

    /// The `i`-th neighbor of `v`, i.e. `v + generators[i]`.
    pub fn neighbor(&self, v: &BitWord, i: usize) -> Result<BitWord> {
        if v.len() != self.dim as usize {
            return Err(Error::LengthMismatch {
                left: v.len(),
                right: self.dim as usize,
            });
        }
        let g = self.generators.get(i).ok_or_else(|| {
            Error::invalid(format!("generator index {i} out of range for degree {}", self.degree()))
        })?;
        let v = v.to_u64().expect("dimension checked");
        Ok(BitWord::from_u64(v ^ g, self.dim as usize).expect("closed under addition"))
    }

    #[inline]
    pub fn neighbor_index(&self, v: u64, i: usize) -> u64 {
        v ^ self.generators[i]
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            name: self.name.clone(),
            dim: self.dim,
            generators: self.generator_words().iter().map(BitWord::to_hex).collect(),
            multigraph: self.multigraph,
        }
    }

    pub fn from_file(file: &GraphFile) -> Result<Self> {
        if file.dim > MAX_DIM {
            return Err(Error::invalid(format!("dimension {} exceeds {MAX_DIM}", file.dim)));
        }
        let words = file
            .generators
            .iter()
            .map(|h| BitWord::from_hex(h, file.dim as usize))
            .collect::<Result<Vec<_>>>()?;
        Self::from_words(file.name.clone(), file.dim, &words, file.multigraph)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("graph file serializes")
    }

    /// Reads a graph file, bare or wrapped in a report envelope.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile = serde_json::from_value(crate::report::unwrap_envelope(serde_json::from_str(text)?))?;
        Self::from_file(&file)
    }
}

/// On-disk graph description. Generator order defines neighbor indexing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub name: String,
    pub dim: u32,
    pub generators: Vec<String>,
    pub multigraph: bool,
}

/// Generator number `index` of the AGHP set over F_2^r: the pair
/// `(x, y) = (index >> ell, index & (2^ell - 1))` in lexicographic order,
/// with bit `i` equal to `<x^i, y>`.
pub fn aghp_generator(field: &Field, r: u32, index: u64) -> u64 {
    let ell = field.degree();
    let x = (index >> ell) as u32;
    let y = (index & ((1 << ell) - 1)) as u32;
    let mut word = 0u64;
    let mut power = 1u32; // x^0 = 1, also for x = 0
    for i in 0..r {
        if (power & y).count_ones() & 1 == 1 {
            word |= 1 << i;
        }
        power = field.mul_raw(power, x);
    }
    word
}

/// The AGHP small-bias Cayley graph over F_2^r with 2^(2 ell) generators.
/// Its expansion is at most (r - 1) 2^-ell.
pub fn build_aghp(r: u32, ell: u32) -> Result<CayleyGraph> {
    if ell == 0 || 2 * ell > r {
        return Err(Error::invalid(format!("AGHP needs 1 <= ell <= r/2, got r={r}, ell={ell}")));
    }
    if r > MAX_DIM {
        return Err(Error::invalid(format!("AGHP dimension {r} exceeds {MAX_DIM}")));
    }
    let field = Field::new(ell)?;
    let gens: Vec<u64> = (0..1u64 << (2 * ell)).map(|i| aghp_generator(&field, r, i)).collect();
    let distinct = gens.iter().collect::<HashSet<_>>().len();
    CayleyGraph::new(format!("aghp-r{r}-l{ell}"), r, gens.clone(), distinct != gens.len())
}

/// Cayley graph over F_2^m whose generators are all 2^m words in increasing
/// order (zero included, a self-loop). Its expansion is 0.
pub fn build_complete_selfloop(m: u32) -> Result<CayleyGraph> {
    build_complete(m, true)
}

/// With `selfloop = false` the zero generator is dropped and the expansion
/// becomes 1 / (2^m - 1).
pub fn build_complete(m: u32, selfloop: bool) -> Result<CayleyGraph> {
    if m == 0 && !selfloop {
        return Err(Error::invalid("complete graph without self-loops needs m >= 1"));
    }
    if m > MAX_EXACT_SPECTRUM_DIM {
        return Err(Error::invalid(format!("complete graph dimension {m} is too large")));
    }
    let start = u64::from(!selfloop);
    let name = if selfloop {
        format!("complete-selfloop-m{m}")
    } else {
        format!("complete-m{m}")
    };
    CayleyGraph::new(name, m, (start..1u64 << m).collect(), false)
}

/// The complete-with-self-loops generator set of F_2^m placed in the low
/// coordinates of F_2^dim. The graph is 2^(dim - m) disjoint copies of
/// [`build_complete_selfloop`]`(m)`, so its expansion is 1 whenever dim > m.
pub fn build_complete_tiled(m: u32, dim: u32) -> Result<CayleyGraph> {
    if dim < m {
        return Err(Error::invalid(format!("tiled graph needs dim >= m, got dim={dim}, m={m}")));
    }
    if m > MAX_EXACT_SPECTRUM_DIM {
        return Err(Error::invalid(format!("tile dimension {m} is too large")));
    }
    CayleyGraph::new(format!("complete-tiled-m{m}-d{dim}"), dim, (0..1u64 << m).collect(), false)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectralMethod {
    CharacterSum,
    /// Maximum over a random subset of characters; a lower bound on λ.
    CharacterSumSampled,
    DenseEigen,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralReport {
    pub lambda: f64,
    /// The maximizing nonzero character (first in index order); absent for
    /// the dense route, which does not identify characters.
    pub argmax_character: Option<BitWord>,
    pub method: SpectralMethod,
}

/// Normalized character sums for every `alpha` in F_2^dim, indexed by alpha.
pub fn all_character_sums(g: &CayleyGraph) -> Result<Vec<f64>> {
    if g.dim > MAX_EXACT_SPECTRUM_DIM {
        return Err(Error::BudgetExceeded {
            needed: 1u128 << g.dim,
            budget: 1u128 << MAX_EXACT_SPECTRUM_DIM,
        });
    }
    let mut hist = vec![0.0; g.vertex_count()];
    for &u in &g.generators {
        hist[u as usize] += 1.0;
    }
    gf2::walsh_hadamard(&mut hist);
    let d = g.degree() as f64;
    hist.iter_mut().for_each(|x| *x /= d);
    Ok(hist)
}

/// Exact expansion of a Cayley graph: max |character sum| over nonzero alpha.
pub fn spectrum(g: &CayleyGraph) -> Result<SpectralReport> {
    let sums = all_character_sums(g)?;
    if sums.len() == 1 {
        return Ok(SpectralReport {
            lambda: 0.0,
            argmax_character: None,
            method: SpectralMethod::CharacterSum,
        });
    }
    let (mut best, mut lambda) = (1usize, sums[1].abs());
    for (alpha, s) in sums.iter().enumerate().skip(2) {
        if s.abs() > lambda {
            best = alpha;
            lambda = s.abs();
        }
    }
    Ok(SpectralReport {
        lambda,
        argmax_character: Some(BitWord::from_u64(best as u64, g.dim as usize)?),
        method: SpectralMethod::CharacterSum,
    })
}

/// Lower bound on the expansion from `samples` random nonzero characters,
/// for graphs too large for the exhaustive scan.
pub fn spectrum_sampled<R: Rng>(g: &CayleyGraph, samples: usize, rng: &mut R) -> Result<SpectralReport> {
    if g.dim == 0 || samples == 0 {
        return Err(Error::invalid("sampled spectrum needs dim >= 1 and samples >= 1"));
    }
    let top = if g.dim >= 64 { u64::MAX } else { (1u64 << g.dim) - 1 };
    let mut best = (0u64, -1.0f64);
    for _ in 0..samples {
        let alpha = rng.gen_range(1..=top);
        let c = gf2::character_sum_packed(&g.generators, alpha).abs();
        if c > best.1 {
            best = (alpha, c);
        }
    }
    Ok(SpectralReport {
        lambda: best.1,
        argmax_character: Some(BitWord::from_u64(best.0, g.dim as usize)?),
        method: SpectralMethod::CharacterSumSampled,
    })
}

/// Expansion of any regular graph given by neighbor lists (repeats allowed),
/// from the eigenvalues of the normalized adjacency with the all-ones
/// direction projected out.
pub fn dense_lambda(neighbors: &[Vec<usize>]) -> Result<f64> {
    let n = neighbors.len();
    if n == 0 {
        return Err(Error::invalid("graph has no vertices"));
    }
    if n > MAX_DENSE_VERTICES {
        return Err(Error::BudgetExceeded {
            needed: n as u128,
            budget: MAX_DENSE_VERTICES as u128,
        });
    }
    let d = neighbors[0].len();
    if d == 0 || neighbors.iter().any(|nb| nb.len() != d) {
        return Err(Error::invalid("dense spectrum needs a regular graph of positive degree"));
    }
    let mut m = DMatrix::<f64>::from_element(n, n, -1.0 / n as f64);
    for (v, nb) in neighbors.iter().enumerate() {
        for &w in nb {
            if w >= n {
                return Err(Error::invalid(format!("neighbor {w} out of range")));
            }
            m[(v, w)] += 1.0 / d as f64;
        }
    }
    if (0..n).any(|i| (0..i).any(|j| (m[(i, j)] - m[(j, i)]).abs() > 1e-12)) {
        return Err(Error::invalid("dense spectrum needs an undirected graph"));
    }
    let eig = SymmetricEigen::new(m);
    Ok(eig.eigenvalues.iter().fold(0.0f64, |acc, e| acc.max(e.abs())))
}

/// Cross-check route for [`spectrum`] through a dense eigendecomposition.
pub fn spectrum_dense(g: &CayleyGraph) -> Result<SpectralReport> {
    if g.vertex_count() > MAX_DENSE_VERTICES {
        return Err(Error::BudgetExceeded {
            needed: g.vertex_count() as u128,
            budget: MAX_DENSE_VERTICES as u128,
        });
    }
    let neighbors: Vec<Vec<usize>> = (0..g.vertex_count() as u64)
        .map(|v| g.generators.iter().map(|&u| (v ^ u) as usize).collect())
        .collect();
    Ok(SpectralReport {
        lambda: dense_lambda(&neighbors)?,
        argmax_character: None,
        method: SpectralMethod::DenseEigen,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Mixing {
    Holds { lhs: f64, rhs: f64 },
    Violated { lhs: f64, rhs: f64 },
}

impl Mixing {
    pub fn holds(&self) -> bool {
        matches!(self, Mixing::Holds { .. })
    }

    pub fn sides(&self) -> (f64, f64) {
        match *self {
            Mixing::Holds { lhs, rhs } | Mixing::Violated { lhs, rhs } => (lhs, rhs),
        }
    }
}

/// Mean and standard deviation of a function under the uniform measure.
pub fn mean_and_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sq = values.iter().map(|x| x * x).sum::<f64>() / n;
    (mean, (sq - mean * mean).max(0.0).sqrt())
}

/// Evaluates |E_{a~a'}[f(a) g(a')] - mu_f mu_g| <= lambda sigma_f sigma_g
/// exactly by summing over every edge.
pub fn mixing_check(g: &CayleyGraph, lambda: f64, f: &[f64], h: &[f64]) -> Result<Mixing> {
    let n = g.vertex_count();
    if f.len() != n || h.len() != n {
        return Err(Error::LengthMismatch {
            left: f.len().max(h.len()),
            right: n,
        });
    }
    let mut edge_sum = 0.0;
    for (a, fa) in f.iter().enumerate() {
        let inner: f64 = g.generators.iter().map(|&u| h[a ^ u as usize]).sum();
        edge_sum += fa * inner;
    }
    let edge_mean = edge_sum / (n * g.degree()) as f64;
    let (mf, sf) = mean_and_std(f);
    let (mh, sh) = mean_and_std(h);
    let lhs = (edge_mean - mf * mh).abs();
    let rhs = lambda * sf * sh;
    Ok(if lhs <= rhs + BOUND_SLACK {
        Mixing::Holds { lhs, rhs }
    } else {
        Mixing::Violated { lhs, rhs }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lambda(g: &CayleyGraph) -> f64 {
        spectrum(g).unwrap().lambda
    }

    #[test]
    fn aghp_degree_and_bound() {
        let g = build_aghp(4, 2).unwrap();
        assert_eq!(g.degree(), 16);
        assert_eq!(g.dim(), 4);
        for (r, ell) in [(4, 2), (6, 3), (8, 4), (10, 5)] {
            let g = build_aghp(r, ell).unwrap();
            let bound = (r - 1) as f64 / (1u64 << ell) as f64;
            assert!(lambda(&g) <= bound + BOUND_SLACK, "AGHP({r},{ell})");
        }
    }

    #[test]
    fn aghp_r4_l2_exact_value_by_direct_character_scan() {
        let g = build_aghp(4, 2).unwrap();
        let gens = g.generator_words();
        let direct = (1..16u64)
            .map(|a| gf2::character_sum(&gens, &BitWord::from_u64(a, 4).unwrap()).unwrap().abs())
            .fold(0.0, f64::max);
        // A nonzero polynomial of degree <= 3 over GF(4) has at most 3 roots.
        assert_eq!(direct, 0.75);
        assert_eq!(lambda(&g), direct);
    }

    #[test]
    fn aghp_rejects_bad_parameters() {
        assert!(build_aghp(4, 3).is_err());
        assert!(build_aghp(4, 0).is_err());
        assert!(build_aghp(40, 17).is_err());
    }

    #[test]
    fn aghp_generator_table_and_neighbors() {
        let g = build_aghp(4, 2).unwrap();
        let field = Field::new(2).unwrap();
        // (x, y) = (0, 0) gives the zero word; (0, y) has only bit 0 = y_0.
        assert_eq!(g.generators()[0], 0);
        assert_eq!(g.generators()[1], 1);
        assert_eq!(g.generators()[2], 0);
        for (i, &u) in g.generators().iter().enumerate() {
            assert_eq!(aghp_generator(&field, 4, i as u64), u);
            let x = field.elem((i >> 2) as u32).unwrap();
            let y = (i & 3) as u32;
            for bit in 0..4 {
                let expect = (x.pow(bit).bits() & y).count_ones() & 1 == 1;
                assert_eq!((u >> bit) & 1 == 1, expect);
            }
        }
        let v = BitWord::from_u64(0b1001, 4).unwrap();
        let n0 = g.neighbor(&v, 0).unwrap();
        assert_eq!(n0.to_u64().unwrap(), 0b1001 ^ g.generators()[0]);
        assert!(g.is_multigraph());
    }

    #[test]
    fn complete_graphs() {
        let g = build_complete_selfloop(2).unwrap();
        assert_eq!((g.vertex_count(), g.degree()), (4, 4));
        assert_eq!(lambda(&g), 0.0);
        let v = BitWord::from_u64(0b00, 2).unwrap();
        assert_eq!(g.neighbor(&v, 3).unwrap().to_u64(), Some(0b11));
        let v = BitWord::from_u64(0b01, 2).unwrap();
        assert_eq!(g.neighbor(&v, 3).unwrap().to_u64(), Some(0b10));

        let k16 = build_complete(4, false).unwrap();
        assert!((lambda(&k16) - 1.0 / 15.0).abs() < 1e-15);

        let tiled = build_complete_tiled(2, 6).unwrap();
        assert_eq!((tiled.vertex_count(), tiled.degree()), (64, 4));
        assert_eq!(lambda(&tiled), 1.0);
    }

    #[test]
    fn neighbor_errors() {
        let g = build_complete_selfloop(2).unwrap();
        assert!(g.neighbor(&BitWord::zero(2), 4).is_err());
        assert!(g.neighbor(&BitWord::zero(3), 0).is_err());
    }

    #[test]
    fn duplicates_need_multigraph_flag() {
        assert!(CayleyGraph::new("dup", 2, vec![1, 1], false).is_err());
        assert!(CayleyGraph::new("dup", 2, vec![1, 1], true).is_ok());
        assert!(CayleyGraph::new("oob", 2, vec![4], false).is_err());
        assert!(CayleyGraph::new("empty", 2, vec![], false).is_err());
    }

    #[test]
    fn neighbor_is_an_involution() {
        let graphs = [
            build_aghp(10, 5).unwrap(),
            build_aghp(6, 3).unwrap(),
            build_complete(4, false).unwrap(),
            build_complete_tiled(2, 6).unwrap(),
        ];
        for g in &graphs {
            for v in 0..g.vertex_count() as u64 {
                for i in 0..g.degree() {
                    assert_eq!(g.neighbor_index(g.neighbor_index(v, i), i), v);
                }
            }
        }
    }

    #[test]
    fn character_route_matches_dense_route() {
        let graphs = [
            build_aghp(4, 2).unwrap(),
            build_aghp(6, 3).unwrap(),
            build_aghp(8, 4).unwrap(),
            build_complete(4, false).unwrap(),
            build_complete_selfloop(3).unwrap(),
            build_complete_tiled(2, 5).unwrap(),
            CayleyGraph::new("sparse", 6, vec![1, 2, 4, 8, 16, 32, 63], false).unwrap(),
        ];
        for g in &graphs {
            let a = spectrum(g).unwrap().lambda;
            let b = spectrum_dense(g).unwrap().lambda;
            assert!((a - b).abs() < CROSS_CHECK_TOL, "{}: {a} vs {b}", g.name());
        }
    }

    #[test]
    fn sampled_spectrum_is_a_lower_bound() {
        let g = build_aghp(8, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = spectrum_sampled(&g, 50, &mut rng).unwrap();
        assert!(s.lambda <= spectrum(&g).unwrap().lambda + 1e-15);
        let big = build_aghp(26, 4).unwrap();
        assert!(matches!(spectrum(&big), Err(Error::BudgetExceeded { .. })));
        assert!(spectrum_sampled(&big, 10, &mut rng).is_ok());
    }

    #[test]
    fn mixing_examples() {
        let g = build_aghp(4, 2).unwrap();
        let rep = spectrum(&g).unwrap();
        let c = vec![0.7; 16];
        let m = mixing_check(&g, rep.lambda, &c, &c).unwrap();
        assert!(m.holds());
        assert!(m.sides().0.abs() < 1e-12 && m.sides().1.abs() < 1e-12);

        // The maximizing character attains equality.
        let alpha = rep.argmax_character.unwrap().to_u64().unwrap();
        let chi: Vec<f64> = (0..16u64)
            .map(|v| if gf2::parity(alpha & v) { -1.0 } else { 1.0 })
            .collect();
        let m = mixing_check(&g, rep.lambda, &chi, &chi).unwrap();
        let (lhs, rhs) = m.sides();
        assert!((lhs - rep.lambda).abs() < 1e-12 && (rhs - rep.lambda).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let f: Vec<f64> = (0..16).map(|_| if rng.gen() { 1.0 } else { -1.0 }).collect();
            let h: Vec<f64> = (0..16).map(|_| if rng.gen() { 1.0 } else { -1.0 }).collect();
            assert!(mixing_check(&g, rep.lambda, &f, &h).unwrap().holds());
        }
        assert!(mixing_check(&g, rep.lambda, &[1.0; 3], &c).is_err());
        // An understated lambda is caught.
        assert!(!mixing_check(&g, 0.1, &chi, &chi).unwrap().holds());
    }

    #[test]
    fn json_round_trip_is_exact() {
        let g = build_aghp(6, 3).unwrap();
        let text = g.to_json();
        let back = CayleyGraph::from_json(&text).unwrap();
        assert_eq!(back, g);
        assert_eq!(back.to_json(), text);
        let bad = text.replace("\"dim\": 6", "\"dim\": 5");
        assert!(CayleyGraph::from_json(&bad).is_err());
    }
}
