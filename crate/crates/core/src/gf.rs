//! Arithmetic in GF(2^m) backed by exponent/logarithm tables.
//!
//! Elements are stored as `u16` bit patterns, so degrees up to 16 fit.
//! Addition is XOR; multiplication and inversion go through the tables
//! generated from a primitive polynomial.

use crate::error::{Error, Result};

/// Field element. Only the low `m` bits are meaningful.
pub type Elem = u16;

/// Conventional primitive polynomials, indexed by degree.
const DEFAULT_POLYS: [u32; 17] = [
    0, 0, 0x7, 0xB, 0x13, 0x25, 0x43, 0x89, 0x11D, 0x211, 0x409, 0x805, 0x1053, 0x201B, 0x4443,
    0x8003, 0x1100B,
];

/// A finite field GF(2^m) with precomputed tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Field {
    m: u32,
    poly: u32,
    // exp is doubled so that exp[log a + log b] needs no reduction.
    exp: Vec<Elem>,
    log: Vec<u32>,
}

impl Field {
    /// Builds GF(2^m) from `poly`, which must be primitive of degree `m`.
    pub fn new(m: u32, poly: u32) -> Result<Self> {
        if !(2..=16).contains(&m) {
            return Err(Error::FieldDegree(m));
        }
        if poly >> m != 1 {
            return Err(Error::NotPrimitive { poly, m });
        }
        let size = 1usize << m;
        let order = size - 1;
        let mut exp = vec![0 as Elem; 2 * order];
        let mut log = vec![0u32; size];
        let mut seen = vec![false; size];
        let mut x: u32 = 1;
        for (i, slot) in exp.iter_mut().take(order).enumerate() {
            // Revisiting an element before 2^m - 1 steps means alpha is not a generator.
            if x == 0 || seen[x as usize] {
                return Err(Error::NotPrimitive { poly, m });
            }
            seen[x as usize] = true;
            *slot = x as Elem;
            log[x as usize] = i as u32;
            x <<= 1;
            if x & (1 << m) != 0 {
                x ^= poly;
            }
        }
        if x != 1 {
            return Err(Error::NotPrimitive { poly, m });
        }
        for i in order..2 * order {
            exp[i] = exp[i - order];
        }
        Ok(Field { m, poly, exp, log })
    }

    /// Builds GF(2^m) with the default primitive polynomial for that degree
    /// (0x11D for m = 8).
    pub fn with_default_poly(m: u32) -> Result<Self> {
        if !(2..=16).contains(&m) {
            return Err(Error::FieldDegree(m));
        }
        Field::new(m, DEFAULT_POLYS[m as usize])
    }

    pub fn default_poly(m: u32) -> Option<u32> {
        DEFAULT_POLYS.get(m as usize).copied().filter(|&p| p != 0)
    }

    /// Bits per symbol.
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn poly(&self) -> u32 {
        self.poly
    }

    /// Number of elements, 2^m.
    pub fn size(&self) -> usize {
        1 << self.m
    }

    /// Multiplicative order of the group, 2^m - 1.
    pub fn order(&self) -> usize {
        self.size() - 1
    }

    /// The exponent table over one period: alpha^0 .. alpha^(2^m - 2).
    pub fn exp_table(&self) -> &[Elem] {
        &self.exp[..self.order()]
    }

    /// log_table[a] for nonzero `a`; entry 0 is unused.
    pub fn log_table(&self) -> &[u32] {
        &self.log
    }

    #[inline]
    pub fn add(&self, a: Elem, b: Elem) -> Elem {
        a ^ b
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        if a == 0 || b == 0 {
            return 0;
        }
        self.exp[(self.log[a as usize] + self.log[b as usize]) as usize]
    }

    pub fn inv(&self, a: Elem) -> Result<Elem> {
        if a == 0 {
            return Err(Error::ZeroInverse);
        }
        let order = self.order() as u32;
        Ok(self.exp[((order - self.log[a as usize]) % order) as usize])
    }

    pub fn div(&self, a: Elem, b: Elem) -> Result<Elem> {
        if b == 0 {
            return Err(Error::ZeroInverse);
        }
        if a == 0 {
            return Ok(0);
        }
        let order = self.order() as u32;
        let e = (self.log[a as usize] + order - self.log[b as usize]) % order;
        Ok(self.exp[e as usize])
    }

    /// alpha^i for any (possibly negative) exponent.
    #[inline]
    pub fn alpha_pow(&self, i: i64) -> Elem {
        let order = self.order() as i64;
        self.exp[i.rem_euclid(order) as usize]
    }

    pub fn pow(&self, a: Elem, e: u64) -> Elem {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let order = self.order() as u64;
        let l = (self.log[a as usize] as u64 * (e % order)) % order;
        self.exp[l as usize]
    }

    /// Discrete log of a nonzero element.
    pub fn log(&self, a: Elem) -> Option<u32> {
        (a != 0).then(|| self.log[a as usize])
    }

    pub fn contains(&self, a: Elem) -> bool {
        (a as usize) < self.size()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Carry-less multiply followed by long division by the field polynomial.
    fn mul_shift_reduce(a: Elem, b: Elem, m: u32, poly: u32) -> Elem {
        let mut prod: u64 = 0;
        for i in 0..16 {
            if (b >> i) & 1 == 1 {
                prod ^= (a as u64) << i;
            }
        }
        for bit in (m..32).rev() {
            if (prod >> bit) & 1 == 1 {
                prod ^= (poly as u64) << (bit - m);
            }
        }
        prod as Elem
    }

    #[test]
    fn builds_gf256() {
        let f = Field::new(8, 0x11D).unwrap();
        assert_eq!(f.order(), 255);
        let mut seen = f.exp_table().to_vec();
        seen.sort_unstable();
        assert_eq!(seen, (1..=255).collect::<Vec<Elem>>());
        for (i, &e) in f.exp_table().iter().enumerate() {
            assert_eq!(f.log_table()[e as usize], i as u32);
        }
    }

    #[test]
    fn builds_gf4() {
        let f = Field::new(2, 0b111).unwrap();
        assert_eq!(f.size(), 4);
        assert_eq!(f.exp_table(), &[1, 2, 3]);
    }

    #[test]
    fn rejects_reducible_and_bad_degree() {
        assert!(matches!(Field::new(8, 0x101), Err(Error::NotPrimitive { .. })));
        // irreducible but not primitive: x^8+x^4+x^3+x+1 (the AES polynomial)
        assert!(matches!(Field::new(8, 0x11B), Err(Error::NotPrimitive { .. })));
        assert!(matches!(Field::new(8, 0x1D), Err(Error::NotPrimitive { .. })));
        assert!(matches!(Field::new(1, 0x3), Err(Error::FieldDegree(1))));
        assert!(matches!(Field::new(17, 0x3), Err(Error::FieldDegree(17))));
    }

    #[test]
    fn default_polys_are_primitive() {
        for m in 2..=16 {
            Field::with_default_poly(m).unwrap();
        }
    }

    #[test]
    fn add_examples() {
        let f = Field::with_default_poly(8).unwrap();
        assert_eq!(f.add(0x57, 0x57), 0);
        assert_eq!(f.add(0x42, 0), 0x42);
        assert_eq!(f.add(0x57, 0x83), 0xD4);
    }

    #[test]
    fn mul_examples() {
        let f = Field::with_default_poly(8).unwrap();
        assert_eq!(f.mul(0x02, 0x80), 0x1D);
        assert_eq!(mul_shift_reduce(0x02, 0x80, 8, 0x11D), 0x1D);
        assert_eq!(f.mul(0x9A, 1), 0x9A);
        assert_eq!(f.mul(0x9A, 0), 0);
    }

    #[test]
    fn inv_examples() {
        let f = Field::with_default_poly(8).unwrap();
        assert_eq!(f.inv(1).unwrap(), 1);
        assert_eq!(f.inv(0x02).unwrap(), 0x8E);
        assert_eq!(mul_shift_reduce(0x02, 0x8E, 8, 0x11D), 1);
        assert!(matches!(f.inv(0), Err(Error::ZeroInverse)));
    }

    #[test]
    fn table_mul_matches_shift_reduce_exhaustively() {
        for m in 2..=8 {
            let f = Field::with_default_poly(m).unwrap();
            for a in 0..f.size() as Elem {
                for b in 0..f.size() as Elem {
                    assert_eq!(f.mul(a, b), mul_shift_reduce(a, b, m, f.poly()));
                }
                if a != 0 {
                    assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
                }
            }
        }
    }

    #[test]
    fn pow_and_div_agree_with_mul() {
        let f = Field::with_default_poly(5).unwrap();
        for a in 1..32 {
            let mut acc = 1;
            for e in 0..70u64 {
                assert_eq!(f.pow(a, e), acc);
                acc = f.mul(acc, a);
            }
            for b in 1..32 {
                assert_eq!(f.mul(f.div(a, b).unwrap(), b), a);
            }
        }
        assert_eq!(f.alpha_pow(-1), f.inv(2).unwrap());
    }

    proptest! {
        #[test]
        fn gf16_bit_field_axioms(a in 0u16..=u16::MAX, b in 0u16..=u16::MAX, c in 0u16..=u16::MAX) {
            let f = Field::with_default_poly(16).unwrap();
            prop_assert_eq!(f.mul(a, b), f.mul(b, a));
            prop_assert_eq!(f.mul(f.mul(a, b), c), f.mul(a, f.mul(b, c)));
            prop_assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
            prop_assert_eq!(f.add(f.add(a, b), b), a);
        }
    }
}
