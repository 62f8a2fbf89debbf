use super::{DpTable, SignedFn};
use crate::error::{check_budget, Error, Result};
use crate::gf2::walsh_hadamard;
use crate::graphs;
use crate::par::for_each_row;
use crate::walks::ReplacementSystem;

/// Default cap on the number of table entries held at once.
pub const DEFAULT_DP_BUDGET: u128 = 1 << 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DpMethod {
    /// Sum over the inner generators in list order.
    #[default]
    Direct,
    /// Convolve with the generator distribution through a Walsh-Hadamard
    /// transform: O(|B| log |B|) per row instead of O(|B| d_B).
    Spectral,
}

fn check_fn(sys: &ReplacementSystem, f: &SignedFn) -> Result<()> {
    if f.len() != sys.outer_size() {
        return Err(Error::LengthMismatch {
            left: f.len(),
            right: sys.outer_size(),
        });
    }
    Ok(())
}

fn base_table(sys: &ReplacementSystem, signs: &[f64], weight: Option<&[f64]>) -> Vec<f64> {
    let nb = sys.inner_size();
    let mut values = vec![0.0; sys.outer_size() * nb];
    for_each_row(&mut values, nb, |a, row| {
        let w = weight.map_or(1.0, |w| w[a]);
        row.fill(signs[a] * w);
    });
    values
}

fn step_direct(sys: &ReplacementSystem, signs: &[f64], prev: &[f64], next: &mut [f64], backward: bool) {
    let nb = sys.inner_size();
    let gens = sys.inner().generators();
    let blocks = sys.blocks();
    let inv_d = 1.0 / gens.len() as f64;
    for_each_row(next, nb, |a, row| {
        for (b, out) in row.iter_mut().enumerate() {
            let a1 = sys.rotation(a as u64, b as u64) as usize;
            let src = &prev[a1 * nb..(a1 + 1) * nb];
            let mut acc = 0.0;
            if backward {
                let c = blocks.backward(b as u64);
                for &u in gens {
                    acc += src[(c ^ u) as usize];
                }
            } else {
                for &u in gens {
                    acc += src[blocks.forward(b as u64 ^ u) as usize];
                }
            }
            *out = signs[a] * acc * inv_d;
        }
    });
}

fn step_spectral(sys: &ReplacementSystem, signs: &[f64], chars: &[f64], prev: &[f64], scratch: &mut [f64], next: &mut [f64]) {
    let nb = sys.inner_size();
    let blocks = sys.blocks();
    let scale = 1.0 / nb as f64;
    // scratch[a'][b] = avg_u prev[a'][shift(b + u)]
    for_each_row(scratch, nb, |a1, row| {
        let src = &prev[a1 * nb..(a1 + 1) * nb];
        for (c, x) in row.iter_mut().enumerate() {
            *x = src[blocks.forward(c as u64) as usize];
        }
        walsh_hadamard(row);
        for (x, ch) in row.iter_mut().zip(chars) {
            *x *= ch;
        }
        walsh_hadamard(row);
        row.iter_mut().for_each(|x| *x *= scale);
    });
    let scratch = &*scratch;
    for_each_row(next, nb, |a, row| {
        for (b, out) in row.iter_mut().enumerate() {
            let a1 = sys.rotation(a as u64, b as u64) as usize;
            *out = signs[a] * scratch[a1 * nb + b];
        }
    });
}

struct Forward<'a> {
    sys: &'a ReplacementSystem,
    signs: Vec<f64>,
    chars: Option<Vec<f64>>,
    scratch: Vec<f64>,
}

impl<'a> Forward<'a> {
    fn new(sys: &'a ReplacementSystem, f: &SignedFn, method: DpMethod) -> Result<Self> {
        check_fn(sys, f)?;
        let (chars, scratch) = match method {
            DpMethod::Direct => (None, Vec::new()),
            DpMethod::Spectral => (
                Some(graphs::all_character_sums(sys.inner())?),
                vec![0.0; sys.outer_size() * sys.inner_size()],
            ),
        };
        Ok(Self {
            sys,
            signs: f.signs(),
            chars,
            scratch,
        })
    }

    fn step(&mut self, prev: &[f64], next: &mut [f64]) {
        match &self.chars {
            None => step_direct(self.sys, &self.signs, prev, next, false),
            Some(chars) => step_spectral(self.sys, &self.signs, chars, prev, &mut self.scratch, next),
        }
    }
}

/// Tables g_0 .. g_kmax.
pub fn dp_gk(sys: &ReplacementSystem, f: &SignedFn, kmax: usize, budget: u128) -> Result<Vec<DpTable>> {
    dp_gk_with(sys, f, kmax, DpMethod::Direct, budget)
}

pub fn dp_gk_with(sys: &ReplacementSystem, f: &SignedFn, kmax: usize, method: DpMethod, budget: u128) -> Result<Vec<DpTable>> {
    let (na, nb) = (sys.outer_size(), sys.inner_size());
    check_budget((kmax as u128 + 1) * (na * nb) as u128, budget)?;
    let mut engine = Forward::new(sys, f, method)?;
    let mut tables = vec![DpTable::new(0, na, nb, base_table(sys, &engine.signs, None))];
    for k in 1..=kmax {
        let mut next = vec![0.0; na * nb];
        engine.step(&tables[k - 1].values, &mut next);
        tables.push(DpTable::new(k, na, nb, next));
    }
    Ok(tables)
}

/// g_t alone, holding two levels in memory.
pub fn final_level(sys: &ReplacementSystem, f: &SignedFn, t: usize, method: DpMethod, budget: u128) -> Result<DpTable> {
    let (na, nb) = (sys.outer_size(), sys.inner_size());
    let factor = if method == DpMethod::Spectral { 3 } else { 2 };
    check_budget(factor * (na * nb) as u128, budget)?;
    let mut engine = Forward::new(sys, f, method)?;
    let mut prev = base_table(sys, &engine.signs, None);
    let mut next = vec![0.0; na * nb];
    for _ in 0..t {
        engine.step(&prev, &mut next);
        std::mem::swap(&mut prev, &mut next);
    }
    Ok(DpTable::new(t, na, nb, prev))
}

/// Tables gbar_0 .. gbar_len of the backwards walk, with optional weight on
/// the final outer vertex.
pub fn dp_backwards_levels(sys: &ReplacementSystem, f: &SignedFn, len: usize, weight: Option<&[f64]>, budget: u128) -> Result<Vec<DpTable>> {
    check_fn(sys, f)?;
    let s = sys.params().s as usize;
    if len > s {
        return Err(Error::invalid(format!("backwards walks are limited to s = {s} steps, got {len}")));
    }
    if let Some(w) = weight {
        if w.len() != sys.outer_size() {
            return Err(Error::LengthMismatch {
                left: w.len(),
                right: sys.outer_size(),
            });
        }
    }
    let (na, nb) = (sys.outer_size(), sys.inner_size());
    check_budget((len as u128 + 1) * (na * nb) as u128, budget)?;
    let signs = f.signs();
    let mut tables = vec![DpTable::new(0, na, nb, base_table(sys, &signs, weight))];
    for j in 1..=len {
        let mut next = vec![0.0; na * nb];
        step_direct(sys, &signs, &tables[j - 1].values, &mut next, true);
        tables.push(DpTable::new(j, na, nb, next));
    }
    Ok(tables)
}

pub fn dp_backwards(sys: &ReplacementSystem, f: &SignedFn, len: usize, weight: Option<&[f64]>, budget: u128) -> Result<DpTable> {
    Ok(dp_backwards_levels(sys, f, len, weight, budget)?.pop().expect("level 0 is always present"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplify::dp_hk;
    use crate::walks::{enumerate_swalk_seeds, WalkParams};

    fn system(m: u32, s: u32, ell: u32) -> ReplacementSystem {
        ReplacementSystem::standard(WalkParams::new(m, s, ell, 1).unwrap()).unwrap()
    }

    fn brute_force_mean(sys: &ReplacementSystem, f: &SignedFn, t: usize) -> f64 {
        let signs = f.signs();
        let mut total = 0.0;
        let mut count = 0usize;
        for w in enumerate_swalk_seeds(sys, t, 1 << 24).unwrap() {
            total += w.a_vertices.iter().map(|&a| signs[a as usize]).product::<f64>();
            count += 1;
        }
        total / count as f64
    }

    #[test]
    fn zero_fn_gives_constant_tables() {
        let sys = system(1, 2, 1);
        let f = SignedFn::zero(2).unwrap();
        for table in dp_gk(&sys, &f, 5, DEFAULT_DP_BUDGET).unwrap() {
            assert!(table.values.iter().all(|&x| x == 1.0));
            let m = table.moments();
            assert_eq!((m.epsilon, m.sigma), (1.0, 0.0));
        }
    }

    #[test]
    fn level_zero_is_the_bias() {
        let sys = system(2, 2, 2);
        let f = SignedFn::from_bits(vec![true, false, false, false]).unwrap();
        let g = dp_gk(&sys, &f, 0, DEFAULT_DP_BUDGET).unwrap();
        assert_eq!(g[0].moments().epsilon, f.bias());
    }

    #[test]
    fn dp_matches_walk_enumeration() {
        let sys = system(1, 2, 1);
        for bits in 0..4u8 {
            let f = SignedFn::from_bits(vec![bits & 1 == 1, bits & 2 == 2]).unwrap();
            let tables = dp_gk(&sys, &f, 4, DEFAULT_DP_BUDGET).unwrap();
            for t in 1..=4 {
                let brute = brute_force_mean(&sys, &f, t);
                assert!((tables[t].moments().mean - brute).abs() < 1e-12, "f={bits} t={t}");
            }
        }
        let sys = system(2, 2, 1);
        let f = SignedFn::from_bits(vec![false, true, true, false]).unwrap();
        let tables = dp_gk(&sys, &f, 3, DEFAULT_DP_BUDGET).unwrap();
        for t in 1..=3 {
            assert!((tables[t].moments().mean - brute_force_mean(&sys, &f, t)).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_route_matches_direct() {
        let sys = system(2, 3, 2);
        let f = SignedFn::from_bits(vec![false, true, true, true]).unwrap();
        let direct = dp_gk(&sys, &f, 6, DEFAULT_DP_BUDGET).unwrap();
        let fast = dp_gk_with(&sys, &f, 6, DpMethod::Spectral, DEFAULT_DP_BUDGET).unwrap();
        for (x, y) in direct.iter().zip(&fast) {
            for (p, q) in x.values.iter().zip(&y.values) {
                assert!((p - q).abs() < 1e-12);
            }
        }
        let last = final_level(&sys, &f, 6, DpMethod::Spectral, DEFAULT_DP_BUDGET).unwrap();
        assert_eq!(last.values, fast[6].values);
        let last = final_level(&sys, &f, 6, DpMethod::Direct, DEFAULT_DP_BUDGET).unwrap();
        assert_eq!(last.values, direct[6].values);
    }

    #[test]
    fn entries_stay_in_range() {
        let sys = system(2, 3, 3);
        let f = SignedFn::balanced(4).unwrap();
        for table in dp_gk(&sys, &f, 8, DEFAULT_DP_BUDGET).unwrap() {
            assert!(table.values.iter().all(|x| x.abs() <= 1.0 + 1e-15));
        }
    }

    #[test]
    fn budget_and_shape_errors() {
        let sys = system(2, 3, 3);
        let f = SignedFn::balanced(4).unwrap();
        assert!(matches!(dp_gk(&sys, &f, 10, 1000), Err(Error::BudgetExceeded { .. })));
        assert!(dp_gk(&sys, &SignedFn::balanced(8).unwrap(), 1, DEFAULT_DP_BUDGET).is_err());
        assert!(dp_backwards(&sys, &f, 4, None, DEFAULT_DP_BUDGET).is_err());
        assert!(dp_backwards(&sys, &f, 2, Some(&[1.0; 3]), DEFAULT_DP_BUDGET).is_err());
    }

    #[test]
    fn backwards_base_and_pseudorandomness() {
        let sys = system(2, 3, 3);
        let f = SignedFn::from_bits(vec![false, true, false, false]).unwrap();
        let g0 = dp_backwards(&sys, &f, 0, None, DEFAULT_DP_BUDGET).unwrap();
        let signs = f.signs();
        for a in 0..4 {
            assert!(g0.row(a).iter().all(|&x| x == signs[a]));
        }
        // Row means of gbar_s are pure-walk values h_{s+1}.
        let gs = dp_backwards(&sys, &f, 3, None, DEFAULT_DP_BUDGET).unwrap().moments();
        let h = dp_hk(sys.outer(), &f, 4).unwrap();
        for a in 0..4 {
            assert!((gs.row_means[a] - h[3].values[a]).abs() < 1e-12);
        }
        let w = [1.0; 4];
        let weighted = dp_backwards(&sys, &f, 3, Some(&w), DEFAULT_DP_BUDGET).unwrap();
        assert_eq!(weighted.values, dp_backwards(&sys, &f, 3, None, DEFAULT_DP_BUDGET).unwrap().values);
    }

    #[test]
    fn backwards_and_forward_means_agree() {
        let sys = system(2, 3, 3);
        let f = SignedFn::from_bits(vec![true, true, false, true]).unwrap();
        let fwd = dp_gk(&sys, &f, 3, DEFAULT_DP_BUDGET).unwrap();
        let bwd = dp_backwards_levels(&sys, &f, 3, None, DEFAULT_DP_BUDGET).unwrap();
        for j in 0..=3 {
            assert!((fwd[j].moments().mean - bwd[j].moments().mean).abs() < 1e-12);
        }
    }
}
