//! Numeric substrate: F_2^r words, GF(2^ℓ) arithmetic and character sums.

mod field;
mod word;

pub use field::{clmul, field_mul, field_pow, is_irreducible, Field, FieldElem, MAX_DEGREE};
pub use word::BitWord;

use crate::error::{Error, Result};

/// Average of `(-1)^<alpha, u>` over the generator list.
pub fn character_sum(gens: &[BitWord], alpha: &BitWord) -> Result<f64> {
    if gens.is_empty() {
        return Err(Error::invalid("character sum over an empty generator list"));
    }
    let mut acc = 0i64;
    for u in gens {
        acc += if alpha.inner_product(u)? { -1 } else { 1 };
    }
    Ok(acc as f64 / gens.len() as f64)
}

/// Same as [`character_sum`] for words packed into integers.
pub fn character_sum_packed(gens: &[u64], alpha: u64) -> f64 {
    let acc: i64 = gens
        .iter()
        .map(|&u| if (alpha & u).count_ones() & 1 == 1 { -1 } else { 1 })
        .sum();
    acc as f64 / gens.len() as f64
}

#[inline]
pub fn parity(x: u64) -> bool {
    x.count_ones() & 1 == 1
}

/// In-place unnormalized Walsh–Hadamard transform; `data.len()` must be a
/// power of two. Applying it twice multiplies by the length.
pub fn walsh_hadamard(data: &mut [f64]) {
    let n = data.len();
    assert!(n.is_power_of_two(), "transform length {n} is not a power of two");
    let mut h = 1;
    while h < n {
        for block in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = block.split_at_mut(h);
            for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                let (a, b) = (*x, *y);
                *x = a + b;
                *y = a - b;
            }
        }
        h *= 2;
    }
}
