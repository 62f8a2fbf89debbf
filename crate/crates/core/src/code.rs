//! Distance amplification: a base linear code is embedded into the outer
//! graph and every codeword is re-encoded as the XOR of its values along each
//! t-step wide walk.

use std::io::Write;

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::amplify::{final_level, DpMethod, SignedFn};
use crate::error::{check_budget, Error, Result};
use crate::gf2::BitWord;
use crate::walks::{enumerate_swalk_seeds, ReplacementSystem};

/// Largest message length whose bias is checked over every message.
pub const MAX_BASE_K: usize = 16;
/// Largest message length for which `code_bias` scans every message.
pub const MAX_AMPLIFIED_K: usize = 12;

/// Bias of a word: |#zeros - #ones| / n.
pub fn word_bias(word: &BitWord) -> f64 {
    let n = word.len() as f64;
    let ones = word.count_ones() as f64;
    ((n - 2.0 * ones) / n).abs()
}

/// Max bias over all nonzero messages, walking messages in Gray-code order so
/// each codeword is one row away from the previous one. Stops early with
/// `None` once some codeword exceeds `stop_above`.
fn scan_bias(rows: &[&[u64]], n0: usize, stop_above: f64) -> Option<f64> {
    let mut word = vec![0u64; rows[0].len()];
    let mut worst = 0usize;
    let limit = (stop_above * n0 as f64).floor();
    for i in 1u64..(1 << rows.len()) {
        let row = rows[i.trailing_zeros() as usize];
        word.iter_mut().zip(row).for_each(|(w, r)| *w ^= r);
        let ones = word.iter().map(|w| w.count_ones() as usize).sum::<usize>();
        let excess = n0.abs_diff(2 * ones);
        if excess as f64 > limit {
            return None;
        }
        worst = worst.max(excess);
    }
    Some(worst as f64 / n0 as f64)
}

fn exhaustive_bias(rows: &[BitWord]) -> f64 {
    let limbs: Vec<&[u64]> = rows.iter().map(BitWord::limbs).collect();
    scan_bias(&limbs, rows[0].len(), f64::INFINITY).expect("no early stop")
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearCode {
    k: usize,
    n0: usize,
    rows: Vec<BitWord>,
    bias: f64,
}

impl LinearCode {
    /// Builds the code generated by `rows` and measures its bias exhaustively.
    pub fn from_rows(rows: Vec<BitWord>) -> Result<Self> {
        let k = rows.len();
        if k == 0 || k > MAX_BASE_K {
            return Err(Error::invalid(format!("base codes need 1 <= k <= {MAX_BASE_K}, got {k}")));
        }
        let n0 = rows[0].len();
        if n0 < k {
            return Err(Error::invalid(format!("block length {n0} is shorter than k = {k}")));
        }
        if let Some(r) = rows.iter().find(|r| r.len() != n0) {
            return Err(Error::LengthMismatch { left: r.len(), right: n0 });
        }
        let bias = exhaustive_bias(&rows);
        Ok(Self { k, n0, rows, bias })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn rows(&self) -> &[BitWord] {
        &self.rows
    }

    /// Max over nonzero messages of the codeword bias.
    pub fn bias(&self) -> f64 {
        self.bias
    }

    /// Bit i of `message` selects row i.
    pub fn encode(&self, message: u64) -> Result<BitWord> {
        if self.k < 64 && message >> self.k != 0 {
            return Err(Error::invalid(format!("message {message:#x} has more than k = {} bits", self.k)));
        }
        let mut word = BitWord::zero(self.n0);
        for (i, row) in self.rows.iter().enumerate() {
            if message >> i & 1 == 1 {
                word = word.add(row)?;
            }
        }
        Ok(word)
    }

    pub fn to_file(&self) -> BaseCodeFile {
        BaseCodeFile {
            k: self.k,
            n0: self.n0,
            rows: self.rows.iter().map(BitWord::to_hex).collect(),
            bias: self.bias,
        }
    }

    /// Loads a code and re-measures its bias; a stored bias that disagrees
    /// with the measurement is rejected.
    pub fn from_file(file: &BaseCodeFile) -> Result<Self> {
        if file.rows.len() != file.k {
            return Err(Error::Parse(format!("k = {} but {} rows", file.k, file.rows.len())));
        }
        let rows = file
            .rows
            .iter()
            .map(|h| BitWord::from_hex(h, file.n0))
            .collect::<Result<Vec<_>>>()?;
        let code = Self::from_rows(rows)?;
        if (code.bias - file.bias).abs() > 1e-12 {
            return Err(Error::Parse(format!(
                "stored bias {} does not match the measured bias {}",
                file.bias, code.bias
            )));
        }
        Ok(code)
    }

    /// Reads a base code file, bare or wrapped in a report envelope.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: BaseCodeFile = serde_json::from_value(crate::report::unwrap_envelope(serde_json::from_str(text)?))?;
        Self::from_file(&file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaseCodeFile {
    pub k: usize,
    pub n0: usize,
    pub rows: Vec<String>,
    pub bias: f64,
}

/// Draws uniformly random k x n0 generator matrices until one has bias at
/// most `target`.
pub fn gen_base_code<R: Rng + ?Sized>(k: usize, n0: usize, target: f64, rng: &mut R, max_tries: usize) -> Result<LinearCode> {
    if k == 0 || k > MAX_BASE_K || n0 < k {
        return Err(Error::invalid(format!("need 1 <= k <= {MAX_BASE_K} and n0 >= k; got k = {k}, n0 = {n0}")));
    }
    let limbs = n0.div_ceil(64);
    let tail = if n0.is_multiple_of(64) { u64::MAX } else { (1u64 << (n0 % 64)) - 1 };
    let mut rows = vec![vec![0u64; limbs]; k];
    let mut best = f64::INFINITY;
    for _ in 0..max_tries {
        for row in rows.iter_mut() {
            for limb in row.iter_mut() {
                *limb = rng.gen();
            }
            row[limbs - 1] &= tail;
        }
        let refs: Vec<&[u64]> = rows.iter().map(Vec::as_slice).collect();
        // Candidates worse than the best so far are abandoned early.
        match scan_bias(&refs, n0, best) {
            Some(bias) if bias <= target => {
                let words = rows
                    .iter()
                    .map(|r| BitWord::from_limbs(r.clone(), n0))
                    .collect::<Result<Vec<_>>>()?;
                return LinearCode::from_rows(words);
            }
            Some(bias) => best = bias,
            None => {}
        }
    }
    Err(Error::SearchExhausted {
        target,
        tries: max_tries,
        best,
    })
}

/// f(i) = codeword bit i for i < n0 and 0 on the remaining outer vertices.
pub fn embed(codeword: &BitWord, outer_size: usize) -> Result<SignedFn> {
    let n0 = codeword.len();
    if outer_size < n0 {
        return Err(Error::invalid(format!("{n0} code positions do not fit into {outer_size} outer vertices")));
    }
    SignedFn::from_bits((0..outer_size).map(|a| a < n0 && codeword.bit(a)).collect())
}

/// k / (|A| |B| d_B^(t-1)).
pub fn walk_rate(k: usize, outer_size: usize, inner_size: usize, inner_degree: usize, t: usize) -> BigRational {
    BigRational::new(BigUint::from(k).into(), walk_count(outer_size, inner_size, inner_degree, t).into())
}

/// |A| |B| d_B^(t-1), the number of t-step walk seeds.
pub fn walk_count(outer_size: usize, inner_size: usize, inner_degree: usize, t: usize) -> BigUint {
    let mut n = BigUint::from(outer_size) * BigUint::from(inner_size);
    for _ in 1..t {
        n *= BigUint::from(inner_degree);
    }
    n
}

#[derive(Debug, Clone)]
pub struct AmplifiedCode {
    base: LinearCode,
    sys: ReplacementSystem,
    t: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeBias {
    pub bias: f64,
    /// A message attaining the maximum.
    pub argmax: u64,
    /// eps_t for messages 1 .. 2^k - 1.
    pub per_message: Vec<f64>,
}

impl AmplifiedCode {
    pub fn new(base: LinearCode, sys: ReplacementSystem, t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::invalid("the amplified code needs t >= 1"));
        }
        if sys.outer_size() < base.n0 {
            return Err(Error::invalid(format!(
                "outer graph has {} vertices, fewer than n0 = {}",
                sys.outer_size(),
                base.n0
            )));
        }
        Ok(Self { base, sys, t })
    }

    pub fn base(&self) -> &LinearCode {
        &self.base
    }

    pub fn system(&self) -> &ReplacementSystem {
        &self.sys
    }

    pub fn steps(&self) -> usize {
        self.t
    }

    /// Number of output bits, saturating at `u128::MAX`.
    pub fn length(&self) -> u128 {
        self.sys.seed_count(self.t)
    }

    pub fn exact_length(&self) -> BigUint {
        walk_count(self.sys.outer_size(), self.sys.inner_size(), self.sys.inner_degree(), self.t)
    }

    pub fn rate(&self) -> BigRational {
        walk_rate(self.base.k, self.sys.outer_size(), self.sys.inner_size(), self.sys.inner_degree(), self.t)
    }

    pub fn message_fn(&self, message: u64) -> Result<SignedFn> {
        embed(&self.base.encode(message)?, self.sys.outer_size())
    }

    fn for_each_bit(&self, message: u64, budget: Option<u128>, mut emit: impl FnMut(bool) -> Result<()>) -> Result<()> {
        let f = self.message_fn(message)?;
        let walks = enumerate_swalk_seeds(&self.sys, self.t, budget.unwrap_or(u128::MAX))?;
        for w in walks {
            let bit = w.a_vertices.iter().fold(false, |acc, &a| acc ^ f.value(a as usize));
            emit(bit)?;
        }
        Ok(())
    }

    /// The full codeword, one bit per walk seed in enumeration order.
    pub fn encode(&self, message: u64, budget: u128) -> Result<BitWord> {
        check_budget(self.length(), budget)?;
        let mut bits = Vec::with_capacity(self.length() as usize);
        self.for_each_bit(message, Some(budget), |b| {
            bits.push(b);
            Ok(())
        })?;
        Ok(BitWord::from_bits(&bits))
    }

    /// Streams the codeword as bytes, bit j in bit (j mod 8) of byte j / 8.
    /// Returns the number of bits written.
    pub fn encode_to<W: Write>(&self, message: u64, out: &mut W) -> Result<u128> {
        let mut byte = 0u8;
        let mut n = 0u128;
        self.for_each_bit(message, None, |b| {
            byte |= (b as u8) << (n % 8);
            n += 1;
            if n.is_multiple_of(8) {
                out.write_all(&[byte])?;
                byte = 0;
            }
            Ok(())
        })?;
        if !n.is_multiple_of(8) {
            out.write_all(&[byte])?;
        }
        Ok(n)
    }

    /// Max over nonzero messages of eps_t, each computed by the forward DP on
    /// the embedded assignment.
    pub fn code_bias(&self, method: DpMethod, budget: u128) -> Result<CodeBias> {
        let k = self.base.k;
        if k > MAX_AMPLIFIED_K {
            return Err(Error::invalid(format!("message scan limited to k <= {MAX_AMPLIFIED_K}, got {k}")));
        }
        let mut per_message = Vec::with_capacity((1 << k) - 1);
        for msg in 1u64..(1 << k) {
            let f = self.message_fn(msg)?;
            per_message.push(final_level(&self.sys, &f, self.t, method, budget)?.moments().epsilon);
        }
        let (idx, bias) = per_message
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, b)| if b > best.1 { (i, b) } else { best });
        Ok(CodeBias {
            bias,
            argmax: idx as u64 + 1,
            per_message,
        })
    }

    /// Max bias over nonzero messages of the materialized codewords.
    pub fn materialized_bias(&self, budget: u128) -> Result<f64> {
        let mut worst = 0.0f64;
        for msg in 1u64..(1 << self.base.k) {
            worst = worst.max(word_bias(&self.encode(msg, budget)?));
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplify::DEFAULT_DP_BUDGET;
    use crate::graphs;
    use crate::walks::{stream_rng, WalkParams};
    use proptest::prelude::*;

    fn bits(s: &str) -> BitWord {
        BitWord::from_bits(&s.chars().map(|c| c == '1').collect::<Vec<_>>())
    }

    fn tiny_system() -> ReplacementSystem {
        ReplacementSystem::standard(WalkParams::new(1, 2, 1, 2).unwrap()).unwrap()
    }

    #[test]
    fn base_code_examples() {
        let c = LinearCode::from_rows(vec![bits("11")]).unwrap();
        assert_eq!(c.bias(), 1.0);
        let c = LinearCode::from_rows(vec![bits("10")]).unwrap();
        assert_eq!(c.bias(), 0.0);
        assert!(LinearCode::from_rows(vec![bits("1"), bits("1")]).is_err());
        assert!(LinearCode::from_rows(vec![bits("10"), bits("011")]).is_err());
    }

    #[test]
    fn generated_code_bias_is_reverified() {
        // A random 8 x 64 code meets 0.28 with probability about 2e-4 per draw.
        let mut rng = stream_rng(1, 0);
        let code = gen_base_code(8, 64, 0.28, &mut rng, 100_000).unwrap();
        let mut worst = 0.0f64;
        for msg in 1..256u64 {
            let w = code.encode(msg).unwrap();
            let ones = (0..64).filter(|&i| w.bit(i)).count() as f64;
            worst = worst.max((1.0 - ones / 32.0).abs());
        }
        assert_eq!(worst, code.bias());
        assert!(code.bias() <= 0.28);
    }

    #[test]
    fn search_exhaustion_reports_best() {
        let mut rng = stream_rng(1, 0);
        match gen_base_code(2, 2, 0.1, &mut rng, 20) {
            // Every 2 x 2 code contains 00 or 11 among its nonzero messages.
            Err(Error::SearchExhausted { tries: 20, best, .. }) => assert_eq!(best, 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn file_round_trip_and_tamper_check() {
        let mut rng = stream_rng(4, 0);
        let code = gen_base_code(4, 20, 0.5, &mut rng, 1000).unwrap();
        let file = code.to_file();
        assert_eq!(LinearCode::from_file(&file).unwrap(), code);
        let mut bad = file.clone();
        bad.bias += 0.01;
        assert!(LinearCode::from_file(&bad).is_err());
        let text = serde_json::to_string(&file).unwrap();
        assert_eq!(LinearCode::from_json(&text).unwrap(), code);
        let wrapped = format!(r#"{{"schema_version": 1, "seed": 4, "result": {text}}}"#);
        assert_eq!(LinearCode::from_json(&wrapped).unwrap(), code);
    }

    #[test]
    fn embedding_examples() {
        let w = bits("0110");
        let f = embed(&w, 4).unwrap();
        assert_eq!(f.bias(), word_bias(&w));
        assert_eq!(embed(&bits("0000"), 4).unwrap().bias(), 1.0);
        let f = embed(&bits("0110"), 8).unwrap();
        assert_eq!(f.bias(), 0.5);
        assert!(embed(&bits("01100"), 4).is_err());
    }

    #[test]
    fn encode_matches_manual_walk_xor() {
        let sys = tiny_system();
        let base = LinearCode::from_rows(vec![bits("10"), bits("11")]).unwrap();
        let amp = AmplifiedCode::new(base.clone(), sys.clone(), 2).unwrap();
        assert_eq!(amp.length(), 32);
        let word = amp.encode(0b01, 1 << 20).unwrap();
        let walks: Vec<_> = enumerate_swalk_seeds(&sys, 2, 1 << 20).unwrap().collect();
        for idx in [0usize, 7, 13, 22, 31] {
            let w = &walks[idx];
            // f = codeword 10: vertex 0 carries 1, vertex 1 carries 0.
            let expected = w.a_vertices.iter().filter(|&&a| a == 0).count() % 2 == 1;
            assert_eq!(word.bit(idx), expected);
        }
        assert!(amp.encode(0, 1 << 20).unwrap().is_zero());
        assert!(amp.encode(1, 10).is_err());
    }

    #[test]
    fn streaming_matches_materialized() {
        let amp = AmplifiedCode::new(LinearCode::from_rows(vec![bits("10"), bits("11")]).unwrap(), tiny_system(), 3).unwrap();
        let word = amp.encode(3, 1 << 20).unwrap();
        let mut buf = Vec::new();
        assert_eq!(amp.encode_to(3, &mut buf).unwrap(), 128);
        for j in 0..128 {
            assert_eq!(buf[j / 8] >> (j % 8) & 1 == 1, word.bit(j));
        }
    }

    #[test]
    fn dp_bias_matches_materialized() {
        let amp = AmplifiedCode::new(LinearCode::from_rows(vec![bits("10"), bits("11")]).unwrap(), tiny_system(), 3).unwrap();
        for method in [DpMethod::Direct, DpMethod::Spectral] {
            let dp = amp.code_bias(method, DEFAULT_DP_BUDGET).unwrap();
            assert!((dp.bias - amp.materialized_bias(1 << 20).unwrap()).abs() < 1e-12);
            assert_eq!(dp.per_message.len(), 3);
        }
        let single = AmplifiedCode::new(LinearCode::from_rows(vec![bits("10")]).unwrap(), tiny_system(), 2).unwrap();
        let dp = single.code_bias(DpMethod::Direct, DEFAULT_DP_BUDGET).unwrap();
        assert!((dp.bias - single.materialized_bias(1 << 20).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn relative_weight_follows_bias() {
        let outer = graphs::build_complete_selfloop(2).unwrap();
        let inner = graphs::build_aghp(4, 2).unwrap();
        let sys = ReplacementSystem::new(outer, inner, WalkParams::new(2, 2, 2, 2).unwrap()).unwrap();
        let base = LinearCode::from_rows(vec![bits("1001"), bits("0110")]).unwrap();
        let amp = AmplifiedCode::new(base, sys, 2).unwrap();
        let bias = amp.code_bias(DpMethod::Direct, DEFAULT_DP_BUDGET).unwrap().bias;
        for msg in 1..4 {
            let w = amp.encode(msg, 1 << 20).unwrap();
            let weight = w.count_ones() as f64 / w.len() as f64;
            assert!(weight >= (1.0 - bias) / 2.0 - 1e-12);
        }
    }

    #[test]
    fn rate_examples() {
        let r = walk_rate(8, 4, 1 << 10, 1 << 10, 10);
        let expected = BigRational::new(1.into(), (num_bigint::BigInt::from(1) << 99u32).into());
        assert_eq!(r, expected);
        assert_eq!(walk_rate(3, 4, 16, 16, 1), BigRational::new(3.into(), 64.into()));
        let mut prev = walk_rate(8, 4, 1024, 1024, 1);
        for t in 2..8 {
            let next = walk_rate(8, 4, 1024, 1024, t);
            assert!(next < prev && next > BigRational::from_integer(0.into()));
            prev = next;
        }
        assert_eq!(walk_count(4, 1 << 10, 1 << 10, 20), BigUint::from(1u8) << 202u32);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn amplified_encoding_is_linear(x in 0u64..4, y in 0u64..4) {
            let outer = graphs::build_complete_tiled(1, 2).unwrap();
            let inner = graphs::build_aghp(2, 1).unwrap();
            let sys = ReplacementSystem::new(outer, inner, WalkParams::new(1, 2, 1, 2).unwrap()).unwrap();
            let amp = AmplifiedCode::new(LinearCode::from_rows(vec![bits("1011"), bits("0111")]).unwrap(), sys, 3).unwrap();
            let ex = amp.encode(x, 1 << 20).unwrap();
            let ey = amp.encode(y, 1 << 20).unwrap();
            prop_assert_eq!(amp.encode(x ^ y, 1 << 20).unwrap(), ex.add(&ey).unwrap());
        }
    }
}
