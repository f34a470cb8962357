//! Finite-field arithmetic and incremental Gaussian elimination.
//!
//! Two field families are supported: GF(2^8) with log/antilog tables over the
//! polynomial x^8 + x^4 + x^3 + x + 1, and prime fields GF(p) with plain
//! modular arithmetic. Only encoding coefficients are ever manipulated; chunk
//! payloads are never materialized.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A field element. Values are always reduced into `0..q`.
pub type Elem = u32;

/// Reduction mask of x^8 + x^4 + x^3 + x + 1.
const POLY: u16 = 0x11B;

static EXP: [u8; 512] = build_exp_table();
static LOG: [u8; 256] = build_log_table();

/// Multiplies by 0x03, which generates the full multiplicative group under
/// `POLY` (0x02 does not).
const fn mul_by_generator(v: u16) -> u16 {
    // 3·v = 2·v ⊕ v
    let mut d = v << 1;
    if d & 0x100 != 0 {
        d ^= POLY;
    }
    d ^ v
}

const fn build_exp_table() -> [u8; 512] {
    let mut table = [0u8; 512];
    let mut val: u16 = 1;
    let mut i = 0;
    while i < 255 {
        table[i] = val as u8;
        table[i + 255] = val as u8;
        val = mul_by_generator(val);
        i += 1;
    }
    table[510] = table[0];
    table[511] = table[1];
    table
}

const fn build_log_table() -> [u8; 256] {
    let mut table = [0u8; 256];
    let mut val: u16 = 1;
    let mut i = 0;
    while i < 255 {
        table[val as usize] = i as u8;
        val = mul_by_generator(val);
        i += 1;
    }
    table
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FieldError {
    #[error("field order {0} is not supported (expected 256 or a prime below 65536)")]
    UnsupportedOrder(u32),
    #[error("zero has no multiplicative inverse")]
    ZeroInverse,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ShapeError {
    #[error("row {row} has length {len}, expected {expected}")]
    Ragged {
        row: usize,
        len: usize,
        expected: usize,
    },
}

/// The coefficient field 𝔽_q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
#[derive(Default)]
pub enum Field {
    /// GF(2^8), table driven.
    #[default]
    Gf256,
    /// GF(p) for a prime p.
    Prime(u32),
}

impl TryFrom<u32> for Field {
    type Error = FieldError;

    fn try_from(q: u32) -> Result<Self, Self::Error> {
        Field::from_order(q)
    }
}

impl From<Field> for u32 {
    fn from(f: Field) -> u32 {
        f.order()
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GF({})", self.order())
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Field {
    pub fn from_order(q: u32) -> Result<Self, FieldError> {
        match q {
            256 => Ok(Field::Gf256),
            p if p < 65536 && is_prime(p) => Ok(Field::Prime(p)),
            other => Err(FieldError::UnsupportedOrder(other)),
        }
    }

    pub fn order(self) -> u32 {
        match self {
            Field::Gf256 => 256,
            Field::Prime(p) => p,
        }
    }

    #[inline]
    pub fn add(self, a: Elem, b: Elem) -> Elem {
        match self {
            Field::Gf256 => a ^ b,
            Field::Prime(p) => (a + b) % p,
        }
    }

    #[inline]
    pub fn sub(self, a: Elem, b: Elem) -> Elem {
        match self {
            Field::Gf256 => a ^ b,
            Field::Prime(p) => (a + p - b) % p,
        }
    }

    #[inline]
    pub fn mul(self, a: Elem, b: Elem) -> Elem {
        match self {
            Field::Gf256 => {
                if a == 0 || b == 0 {
                    0
                } else {
                    let s = LOG[a as usize] as usize + LOG[b as usize] as usize;
                    EXP[s] as Elem
                }
            }
            Field::Prime(p) => ((a as u64 * b as u64) % p as u64) as Elem,
        }
    }

    pub fn inv(self, a: Elem) -> Result<Elem, FieldError> {
        if a == 0 {
            return Err(FieldError::ZeroInverse);
        }
        Ok(match self {
            Field::Gf256 => EXP[255 - LOG[a as usize] as usize] as Elem,
            // Fermat: a^(p-2)
            Field::Prime(p) => self.pow(a, p - 2),
        })
    }

    pub fn pow(self, base: Elem, mut exp: u32) -> Elem {
        let mut acc = 1;
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }

    /// `dst[i] -= factor * src[i]` for every column.
    #[inline]
    fn sub_scaled(self, dst: &mut [Elem], src: &[Elem], factor: Elem) {
        if factor == 0 {
            return;
        }
        for (d, &s) in dst.iter_mut().zip(src) {
            if s != 0 {
                *d = self.sub(*d, self.mul(factor, s));
            }
        }
    }

    fn scale(self, row: &mut [Elem], factor: Elem) {
        for x in row.iter_mut() {
            *x = self.mul(*x, factor);
        }
    }
}

/// Coefficient vector of one stored chunk (length T).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EncodingVector(pub Vec<Elem>);

impl EncodingVector {
    pub fn unit(len: usize, j: usize) -> Self {
        let mut v = vec![0; len];
        v[j] = 1;
        EncodingVector(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0)
    }

    pub fn as_slice(&self) -> &[Elem] {
        &self.0
    }
}

/// A user's knowledge space, kept as a reduced row-echelon basis so that
/// rank and innovation queries cost O(T·rank).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KnowledgeMatrix {
    field: Field,
    width: usize,
    /// Basis rows; `rows[i]` has a leading 1 at `pivots[i]` and zeros in
    /// every other pivot column.
    rows: Vec<Vec<Elem>>,
    pivots: Vec<usize>,
    received: usize,
}

impl KnowledgeMatrix {
    pub fn new(field: Field, width: usize) -> Self {
        KnowledgeMatrix {
            field,
            width,
            rows: Vec::new(),
            pivots: Vec::new(),
            received: 0,
        }
    }

    /// Builds a knowledge matrix from rows, rejecting ragged input.
    pub fn from_rows(field: Field, width: usize, rows: &[Vec<Elem>]) -> Result<Self, ShapeError> {
        let mut k = KnowledgeMatrix::new(field, width);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != width {
                return Err(ShapeError::Ragged {
                    row: i,
                    len: r.len(),
                    expected: width,
                });
            }
            k.push_slice(r);
        }
        Ok(k)
    }

    pub fn field(&self) -> Field {
        self.field
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Number of vectors appended so far, innovative or not.
    pub fn received(&self) -> usize {
        self.received
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.width
    }

    fn reduce(&self, v: &mut [Elem]) {
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            let f = v[p];
            if f != 0 {
                self.field.sub_scaled(v, row, f);
            }
        }
    }

    pub fn is_innovative(&self, v: &EncodingVector) -> bool {
        self.is_innovative_slice(v.as_slice())
    }

    pub fn is_innovative_slice(&self, v: &[Elem]) -> bool {
        debug_assert_eq!(v.len(), self.width);
        if self.is_full() {
            return false;
        }
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().any(|&x| x != 0)
    }

    /// Appends a received vector; returns true when the rank grew.
    pub fn push(&mut self, v: &EncodingVector) -> bool {
        self.push_slice(v.as_slice())
    }

    pub fn push_slice(&mut self, v: &[Elem]) -> bool {
        assert_eq!(v.len(), self.width, "encoding vector length mismatch");
        self.received += 1;
        if self.is_full() {
            return false;
        }
        let mut w = v.to_vec();
        self.reduce(&mut w);
        let Some(pivot) = w.iter().position(|&x| x != 0) else {
            return false;
        };
        let inv = self.field.inv(w[pivot]).expect("pivot is nonzero");
        self.field.scale(&mut w, inv);
        for row in &mut self.rows {
            let f = row[pivot];
            if f != 0 {
                self.field.sub_scaled(row, &w, f);
            }
        }
        let at = self.pivots.partition_point(|&p| p < pivot);
        self.pivots.insert(at, pivot);
        self.rows.insert(at, w);
        true
    }

    /// Indices j (0-based) with e_j in the row span.
    pub fn decoded(&self) -> BTreeSet<usize> {
        self.rows
            .iter()
            .zip(&self.pivots)
            .filter(|(row, &p)| row.iter().enumerate().all(|(c, &x)| (c == p) == (x != 0)))
            .map(|(_, &p)| p)
            .collect()
    }
}

/// Row rank of an arbitrary matrix over `field`.
pub fn rank(field: Field, rows: &[Vec<Elem>]) -> Result<usize, ShapeError> {
    let width = rows.first().map_or(0, Vec::len);
    Ok(KnowledgeMatrix::from_rows(field, width, rows)?.rank())
}

/// Chunk indices recoverable from `rows` by elimination.
pub fn decode(field: Field, rows: &[Vec<Elem>]) -> Result<BTreeSet<usize>, ShapeError> {
    let width = rows.first().map_or(0, Vec::len);
    Ok(KnowledgeMatrix::from_rows(field, width, rows)?.decoded())
}

#[cfg(test)]
mod tests {
    use super::*;

    const P257: Field = Field::Prime(257);

    #[test]
    fn additive_identity_and_char_two() {
        for x in 0..256 {
            assert_eq!(Field::Gf256.add(0, x), x);
            assert_eq!(P257.add(0, x), x);
            assert_eq!(Field::Gf256.add(x, x), 0);
        }
        assert_eq!(P257.add(200, 100), 43);
    }

    #[test]
    fn inverses_exhaustive() {
        assert_eq!(Field::Gf256.inv(1), Ok(1));
        assert_eq!(P257.inv(2), Ok(129));
        for a in 1..256 {
            let i = Field::Gf256.inv(a).unwrap();
            assert_eq!(Field::Gf256.mul(a, i), 1, "a = {a}");
        }
        for p in [2u32, 3, 5, 7, 257] {
            let f = Field::Prime(p);
            for a in 1..p {
                assert_eq!(f.mul(a, f.inv(a).unwrap()), 1);
            }
        }
        assert_eq!(Field::Gf256.inv(0), Err(FieldError::ZeroInverse));
        assert_eq!(P257.inv(0), Err(FieldError::ZeroInverse));
    }

    #[test]
    fn gf256_tables_cover_group() {
        let mut seen = [false; 256];
        for &e in &EXP[..255] {
            assert!(!seen[e as usize]);
            seen[e as usize] = true;
        }
        assert!(!seen[0]);
        // spot check against carry-less multiply with reduction
        fn slow(mut a: u16, mut b: u16) -> u16 {
            let mut r = 0;
            while b > 0 {
                if b & 1 == 1 {
                    r ^= a;
                }
                a <<= 1;
                if a & 0x100 != 0 {
                    a ^= POLY;
                }
                b >>= 1;
            }
            r
        }
        for a in 0..256u16 {
            for b in 0..256u16 {
                assert_eq!(Field::Gf256.mul(a as u32, b as u32), slow(a, b) as u32);
            }
        }
    }

    #[test]
    fn field_orders() {
        assert_eq!(Field::from_order(256), Ok(Field::Gf256));
        assert_eq!(Field::from_order(257), Ok(P257));
        assert!(Field::from_order(255).is_err());
        assert!(Field::from_order(1).is_err());
        assert!(Field::from_order(65537).is_err());
    }

    #[test]
    fn rank_examples() {
        let id: Vec<Vec<Elem>> = (0..5).map(|j| EncodingVector::unit(5, j).0).collect();
        assert_eq!(rank(P257, &id), Ok(5));
        assert_eq!(rank(P257, &[vec![3, 1, 4], vec![3, 1, 4]]), Ok(1));
        assert_eq!(
            rank(P257, &[vec![1, 2, 3], vec![2, 4, 6], vec![0, 1, 1]]),
            Ok(2)
        );
        assert_eq!(
            rank(P257, &[vec![1, 2], vec![1]]),
            Err(ShapeError::Ragged {
                row: 1,
                len: 1,
                expected: 2
            })
        );
    }

    #[test]
    fn innovation_examples() {
        let e = |j| EncodingVector::unit(3, j);
        let empty = KnowledgeMatrix::new(P257, 3);
        assert!(empty.is_innovative(&EncodingVector(vec![0, 5, 0])));
        assert!(!empty.is_innovative(&EncodingVector(vec![0, 0, 0])));

        let mut k = KnowledgeMatrix::new(P257, 3);
        k.push(&e(0));
        assert!(!k.is_innovative(&e(0)));

        let mut k = KnowledgeMatrix::new(P257, 3);
        k.push(&EncodingVector(vec![1, 1, 0]));
        assert!(k.is_innovative(&e(1)));
        assert!(k.push(&e(1)));
        assert_eq!(k.rank(), 2);
        assert!(!k.push(&EncodingVector(vec![1, 0, 0])));
        assert_eq!(k.received(), 3);
    }

    #[test]
    fn decode_examples() {
        let mut k = KnowledgeMatrix::new(Field::Gf256, 3);
        k.push(&EncodingVector::unit(3, 1));
        assert_eq!(k.decoded(), BTreeSet::from([1]));

        let d = decode(P257, &[vec![1, 1, 0], vec![0, 1, 0]]).unwrap();
        assert_eq!(d, BTreeSet::from([0, 1]));

        let d = decode(P257, &[vec![1, 1, 0]]).unwrap();
        assert!(d.is_empty());

        let full = [vec![1, 2, 3], vec![0, 1, 7], vec![5, 0, 1]];
        assert_eq!(decode(P257, &full).unwrap(), BTreeSet::from([0, 1, 2]));
    }
}
