//! Fixed-length bit vectors over F_2.
//!
//! Bit 0 is the least significant position. The hex wire format renders the
//! limbs least-significant first; every limb but the last contributes 16
//! lowercase digits and the last contributes `ceil(bits_in_limb / 4)`. Words
//! of at most 64 bits therefore print as their zero-padded hex value.

use std::fmt;

use crate::error::{Error, Result};

const LIMB_BITS: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitWord {
    len: usize,
    limbs: Vec<u64>,
}

fn limb_count(len: usize) -> usize {
    len.div_ceil(LIMB_BITS)
}

impl BitWord {
    pub fn zero(len: usize) -> Self {
        Self {
            len,
            limbs: vec![0; limb_count(len)],
        }
    }

    /// Builds a word of `len <= 64` bits from the low bits of `value`.
    pub fn from_u64(value: u64, len: usize) -> Result<Self> {
        if len > LIMB_BITS {
            return Err(Error::invalid(format!("from_u64 supports at most 64 bits, got {len}")));
        }
        if len < LIMB_BITS && value >> len != 0 {
            return Err(Error::invalid(format!("value {value:#x} does not fit in {len} bits")));
        }
        let mut w = Self::zero(len);
        if len > 0 {
            w.limbs[0] = value;
        }
        Ok(w)
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut w = Self::zero(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            w.set(i, b);
        }
        w
    }

    /// Builds a word from little-endian 64-bit limbs; bits past `len` must be clear.
    pub fn from_limbs(limbs: Vec<u64>, len: usize) -> Result<Self> {
        if limbs.len() != limb_count(len) {
            return Err(Error::LengthMismatch {
                left: limbs.len(),
                right: limb_count(len),
            });
        }
        let rem = len % LIMB_BITS;
        if rem != 0 && limbs[limbs.len() - 1] >> rem != 0 {
            return Err(Error::invalid(format!("limbs carry bits beyond length {len}")));
        }
        Ok(Self { len, limbs })
    }

    pub fn limbs(&self) -> &[u64] {
        &self.limbs
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// The word as an integer; `None` when it is longer than 64 bits.
    pub fn to_u64(&self) -> Option<u64> {
        match self.limbs.len() {
            0 => Some(0),
            1 => Some(self.limbs[0]),
            _ => None,
        }
    }

    pub fn bit(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.limbs[i / LIMB_BITS] >> (i % LIMB_BITS)) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let mask = 1u64 << (i % LIMB_BITS);
        if value {
            self.limbs[i / LIMB_BITS] |= mask;
        } else {
            self.limbs[i / LIMB_BITS] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.limbs.iter().map(|l| l.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.limbs.iter().all(|&l| l == 0)
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len,
                right: other.len,
            });
        }
        Ok(())
    }

    /// Coordinatewise sum mod 2.
    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        let limbs = self.limbs.iter().zip(&other.limbs).map(|(a, b)| a ^ b).collect();
        Ok(Self { len: self.len, limbs })
    }

    /// Mod-2 inner product: parity of the AND of the two words.
    pub fn inner_product(&self, other: &Self) -> Result<bool> {
        self.check_len(other)?;
        let ones: u32 = self
            .limbs
            .iter()
            .zip(&other.limbs)
            .map(|(a, b)| (a & b).count_ones())
            .sum();
        Ok(ones & 1 == 1)
    }

    pub fn to_hex(&self) -> String {
        let mut out = String::new();
        let n = self.limbs.len();
        for (i, limb) in self.limbs.iter().enumerate() {
            let width = if i + 1 < n {
                16
            } else {
                (self.len - i * LIMB_BITS).div_ceil(4)
            };
            out.push_str(&format!("{limb:0width$x}"));
        }
        out
    }

    /// Parses the hex wire format for a word of exactly `len` bits.
    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let limbs_needed = limb_count(len);
        let expected_digits = if limbs_needed == 0 {
            0
        } else {
            16 * (limbs_needed - 1) + (len - (limbs_needed - 1) * LIMB_BITS).div_ceil(4)
        };
        if hex.len() != expected_digits {
            return Err(Error::Parse(format!(
                "hex word {hex:?} has {} digits, expected {expected_digits} for {len} bits",
                hex.len()
            )));
        }
        if hex.chars().any(|c| !c.is_ascii_hexdigit() || c.is_ascii_uppercase()) {
            return Err(Error::Parse(format!("hex word {hex:?} must be lowercase hex")));
        }
        let mut w = Self::zero(len);
        let mut pos = 0;
        for i in 0..limbs_needed {
            let width = if i + 1 < limbs_needed { 16 } else { expected_digits - pos };
            let chunk = &hex[pos..pos + width];
            w.limbs[i] = u64::from_str_radix(chunk, 16)
                .map_err(|e| Error::Parse(format!("hex word {hex:?}: {e}")))?;
            pos += width;
        }
        let tail = len % LIMB_BITS;
        if tail != 0 && w.limbs[limbs_needed - 1] >> tail != 0 {
            return Err(Error::Parse(format!("hex word {hex:?} has bits beyond length {len}")));
        }
        Ok(w)
    }
}

impl fmt::Debug for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitWord({}; ", self.len)?;
        for i in (0..self.len).rev() {
            write!(f, "{}", u8::from(self.bit(i)))?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for BitWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(bits: &str) -> BitWord {
        // Written most significant first, like the usual binary notation.
        let v: Vec<bool> = bits.chars().rev().map(|c| c == '1').collect();
        BitWord::from_bits(&v)
    }

    #[test]
    fn add_examples() {
        assert_eq!(w("1010").add(&w("0110")).unwrap(), w("1100"));
        let x = w("1011");
        assert!(x.add(&x).unwrap().is_zero());
        assert_eq!(x.add(&BitWord::zero(4)).unwrap(), x);
    }

    #[test]
    fn mismatched_lengths_are_errors() {
        assert!(matches!(
            w("101").add(&w("1010")),
            Err(Error::LengthMismatch { left: 3, right: 4 })
        ));
        assert!(w("101").inner_product(&w("1010")).is_err());
    }

    #[test]
    fn inner_product_examples() {
        assert!(w("1010").inner_product(&w("0110")).unwrap());
        assert!(!w("1010").inner_product(&BitWord::zero(4)).unwrap());
        assert!(!w("1111").inner_product(&w("1111")).unwrap());
    }

    #[test]
    fn self_sum_vanishes_exhaustively() {
        for len in 1..=8 {
            for v in 0..(1u64 << len) {
                let x = BitWord::from_u64(v, len).unwrap();
                assert!(x.add(&x).unwrap().is_zero());
            }
        }
    }

    #[test]
    fn hex_format() {
        assert_eq!(BitWord::from_u64(0b1010, 4).unwrap().to_hex(), "a");
        assert_eq!(BitWord::from_u64(0x3f, 10).unwrap().to_hex(), "03f");
        let mut long = BitWord::zero(70);
        long.set(0, true);
        long.set(69, true);
        assert_eq!(long.to_hex(), "000000000000000120");
        assert_eq!(BitWord::from_hex("000000000000000120", 70).unwrap(), long);
        assert!(BitWord::from_hex("3f", 10).is_err());
        assert!(BitWord::from_hex("43f", 10).is_err());
        assert!(BitWord::from_hex("A", 4).is_err());
    }

    fn arb_word(len: usize) -> impl Strategy<Value = BitWord> {
        proptest::collection::vec(any::<bool>(), len).prop_map(|b| BitWord::from_bits(&b))
    }

    proptest! {
        #[test]
        fn add_is_commutative_and_associative(
            (x, y, z) in (1usize..150).prop_flat_map(|n| (arb_word(n), arb_word(n), arb_word(n)))
        ) {
            prop_assert_eq!(x.add(&y).unwrap(), y.add(&x).unwrap());
            prop_assert_eq!(
                x.add(&y).unwrap().add(&z).unwrap(),
                x.add(&y.add(&z).unwrap()).unwrap()
            );
            prop_assert!(x.add(&x).unwrap().is_zero());
        }

        #[test]
        fn hex_round_trip(x in (1usize..200).prop_flat_map(arb_word)) {
            prop_assert_eq!(BitWord::from_hex(&x.to_hex(), x.len()).unwrap(), x);
        }
    }
}
