//! Arithmetic in GF(2^ℓ) for 1 ≤ ℓ ≤ 16, polynomial basis.

use crate::error::{Error, Result};

/// One irreducible modulus per degree, index = degree - 1. Each entry
/// includes the leading x^ℓ term.
const MODULI: [u32; 16] = [
    0x3,     // x + 1
    0x7,     // x^2 + x + 1
    0xb,     // x^3 + x + 1
    0x13,    // x^4 + x + 1
    0x25,    // x^5 + x^2 + 1
    0x43,    // x^6 + x + 1
    0x83,    // x^7 + x + 1
    0x11b,   // x^8 + x^4 + x^3 + x + 1
    0x211,   // x^9 + x^4 + 1
    0x409,   // x^10 + x^3 + 1
    0x805,   // x^11 + x^2 + 1
    0x1053,  // x^12 + x^6 + x^4 + x + 1
    0x201b,  // x^13 + x^4 + x^3 + x + 1
    0x4443,  // x^14 + x^10 + x^6 + x + 1
    0x8003,  // x^15 + x + 1
    0x1002b, // x^16 + x^5 + x^3 + x + 1
];

pub const MAX_DEGREE: u32 = MODULI.len() as u32;

fn degree_of(p: u32) -> i32 {
    31 - p.leading_zeros() as i32
}

/// Remainder of `a` modulo `b` as polynomials over F_2.
fn poly_rem(mut a: u64, b: u64) -> u64 {
    let db = 63 - b.leading_zeros() as i32;
    while a != 0 {
        let da = 63 - a.leading_zeros() as i32;
        if da < db {
            break;
        }
        a ^= b << (da - db);
    }
    a
}

/// Trial division by every polynomial of degree 1..=deg/2.
pub fn is_irreducible(p: u32) -> bool {
    let deg = degree_of(p);
    if deg < 1 {
        return false;
    }
    for d in 1..=(deg / 2) {
        for divisor in (1u64 << d)..(1u64 << (d + 1)) {
            if poly_rem(p as u64, divisor) == 0 {
                return false;
            }
        }
    }
    true
}

/// Carry-less product of two polynomials of degree < 32.
pub fn clmul(a: u32, b: u32) -> u64 {
    let mut acc = 0u64;
    let mut a = a as u64;
    let mut b = b;
    while b != 0 {
        if b & 1 == 1 {
            acc ^= a;
        }
        a <<= 1;
        b >>= 1;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Field {
    degree: u32,
    modulus: u32,
}

impl Field {
    /// The field of order 2^ℓ using the built-in modulus table.
    pub fn new(degree: u32) -> Result<Self> {
        if degree == 0 || degree > MAX_DEGREE {
            return Err(Error::invalid(format!(
                "field degree {degree} outside supported range 1..={MAX_DEGREE}"
            )));
        }
        Self::with_modulus(MODULI[degree as usize - 1])
    }

    /// Rejects reducible moduli.
    pub fn with_modulus(modulus: u32) -> Result<Self> {
        let degree = degree_of(modulus);
        if degree < 1 || degree as u32 > MAX_DEGREE {
            return Err(Error::invalid(format!("modulus {modulus:#x} has unsupported degree")));
        }
        if !is_irreducible(modulus) {
            return Err(Error::invalid(format!("modulus {modulus:#x} is reducible")));
        }
        Ok(Self {
            degree: degree as u32,
            modulus,
        })
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    pub fn order(&self) -> u32 {
        1 << self.degree
    }

    pub fn elem(&self, bits: u32) -> Result<FieldElem> {
        if bits >= self.order() {
            return Err(Error::invalid(format!(
                "{bits:#x} is not an element of GF(2^{})",
                self.degree
            )));
        }
        Ok(FieldElem {
            bits,
            modulus: self.modulus,
        })
    }

    pub fn zero(&self) -> FieldElem {
        FieldElem {
            bits: 0,
            modulus: self.modulus,
        }
    }

    pub fn one(&self) -> FieldElem {
        FieldElem {
            bits: 1,
            modulus: self.modulus,
        }
    }

    pub fn elements(&self) -> impl Iterator<Item = FieldElem> + '_ {
        (0..self.order()).map(|bits| FieldElem {
            bits,
            modulus: self.modulus,
        })
    }

    #[inline]
    pub(crate) fn mul_raw(&self, a: u32, b: u32) -> u32 {
        poly_rem(clmul(a, b), self.modulus as u64) as u32
    }
}

/// An element of GF(2^ℓ): ℓ coefficient bits plus the modulus it lives under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElem {
    bits: u32,
    modulus: u32,
}

impl FieldElem {
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn modulus(&self) -> u32 {
        self.modulus
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.modulus != other.modulus {
            return Err(Error::ModulusMismatch {
                left: self.modulus,
                right: other.modulus,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            bits: self.bits ^ other.bits,
            modulus: self.modulus,
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            bits: poly_rem(clmul(self.bits, other.bits), self.modulus as u64) as u32,
            modulus: self.modulus,
        })
    }

    /// `x^0 = 1` for every `x`, zero included.
    pub fn pow(&self, mut exp: u64) -> Self {
        let mut base = self.bits;
        let mut acc = 1u32;
        let m = self.modulus as u64;
        while exp != 0 {
            if exp & 1 == 1 {
                acc = poly_rem(clmul(acc, base), m) as u32;
            }
            base = poly_rem(clmul(base, base), m) as u32;
            exp >>= 1;
        }
        Self {
            bits: acc,
            modulus: self.modulus,
        }
    }
}

pub fn field_mul(x: &FieldElem, y: &FieldElem) -> Result<FieldElem> {
    x.mul(y)
}

pub fn field_pow(x: &FieldElem, i: u64) -> FieldElem {
    x.pow(i)
}
