//! Arithmetic in GF(2^8) and dense linear algebra over it.
//!
//! Elements are single octets under the reduction polynomial
//! x^8 + x^4 + x^3 + x + 1 (0x11b, the AES polynomial). Addition is bitwise
//! XOR; multiplication goes through log/exp tables for the generator 0x03.
//! The tables are computed once at first use rather than baked in as
//! constants. Row reduction reports the rank of a matrix, which is what the
//! collusion analysis needs.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Index, IndexMut, Mul, MulAssign, Sub};
use std::sync::LazyLock;

use thiserror::Error;

use crate::metrics;

/// Low eight bits of the reduction polynomial; `x^8 ≡ 0x1b (mod 0x11b)`.
const POLY: u8 = 0x1b;
/// 0x03 generates the full multiplicative group of 255 elements.
const GENERATOR: u8 = 0x03;

#[derive(Debug, Error, Clone, Copy, PartialEq, Eq)]
pub enum Gf256Error {
    #[error("zero has no multiplicative inverse in GF(2^8)")]
    ZeroInverse,
}

/// One octet interpreted as an element of GF(2^8).
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct FieldElement(u8);

pub const ZERO: FieldElement = FieldElement(0);
pub const ONE: FieldElement = FieldElement(1);

struct Tables {
    /// `exp[i] = g^i`, doubled so `exp[log a + log b]` needs no modulo.
    exp: [u8; 510],
    /// `log[a]` defined for a != 0.
    log: [u8; 256],
}

static TABLES: LazyLock<Tables> = LazyLock::new(build_tables);

/// Multiply by x and reduce. Only used to build the tables.
fn xtime(a: u8) -> u8 {
    (a << 1) ^ if a & 0x80 != 0 { POLY } else { 0 }
}

fn build_tables() -> Tables {
    let mut exp = [0u8; 510];
    let mut log = [0u8; 256];
    let mut x = 1u8;
    for i in 0..255 {
        exp[i] = x;
        exp[i + 255] = x;
        log[x as usize] = i as u8;
        // x *= 0x03, i.e. x*2 + x
        x = xtime(x) ^ x;
    }
    debug_assert_eq!(x, 1, "generator must cycle back after 255 steps");
    Tables { exp, log }
}

impl FieldElement {
    pub const fn new(value: u8) -> Self {
        FieldElement(value)
    }

    pub const fn value(self) -> u8 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    /// Multiplicative inverse; zero is a domain error, never silently zero.
    pub fn inv(self) -> Result<FieldElement, Gf256Error> {
        if self.0 == 0 {
            return Err(Gf256Error::ZeroInverse);
        }
        let t = &*TABLES;
        metrics::count_field_mul(1);
        Ok(FieldElement(t.exp[255 - t.log[self.0 as usize] as usize]))
    }

    /// `self^e` by log/exp; `0^0 = 1` by convention.
    pub fn pow(self, e: usize) -> FieldElement {
        if e == 0 {
            return ONE;
        }
        if self.0 == 0 {
            return ZERO;
        }
        let t = &*TABLES;
        metrics::count_field_mul(1);
        let idx = (t.log[self.0 as usize] as usize * e) % 255;
        FieldElement(t.exp[idx])
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "FieldElement(0x{:02x})", self.0)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02x}", self.0)
    }
}

impl From<u8> for FieldElement {
    fn from(v: u8) -> Self {
        FieldElement(v)
    }
}

impl Add for FieldElement {
    type Output = FieldElement;

    // Addition in characteristic 2 is bitwise XOR.
    fn add(self, rhs: FieldElement) -> FieldElement {
        FieldElement(self.0 ^ rhs.0)
    }
}

impl AddAssign for FieldElement {
    fn add_assign(&mut self, rhs: FieldElement) {
        self.0 ^= rhs.0;
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;

    // Subtraction coincides with addition: every element is its own negative.
    fn sub(self, rhs: FieldElement) -> FieldElement {
        self + rhs
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;

    fn mul(self, rhs: FieldElement) -> FieldElement {
        if self.0 == 0 || rhs.0 == 0 {
            return ZERO;
        }
        let t = &*TABLES;
        metrics::count_field_mul(1);
        let idx = t.log[self.0 as usize] as usize + t.log[rhs.0 as usize] as usize;
        FieldElement(t.exp[idx])
    }
}

impl MulAssign for FieldElement {
    fn mul_assign(&mut self, rhs: FieldElement) {
        *self = *self * rhs;
    }
}

impl Div for FieldElement {
    type Output = FieldElement;

    /// Panics on a zero divisor; use [`FieldElement::inv`] for a checked path.
    fn div(self, rhs: FieldElement) -> FieldElement {
        self * rhs.inv().expect("division by zero in GF(2^8)")
    }
}

/// Row-major matrix over GF(2^8).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldMatrix {
    rows: usize,
    cols: usize,
    data: Vec<FieldElement>,
}

/// Result of Gaussian elimination: the reduced row-echelon form, the rank,
/// and the pivot column of each pivot row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RowEchelon {
    pub matrix: FieldMatrix,
    pub rank: usize,
    pub pivots: Vec<usize>,
}

impl FieldMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        FieldMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = FieldMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    /// Build from explicit rows; panics if the rows are ragged.
    pub fn from_rows(rows: Vec<Vec<FieldElement>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        FieldMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn transpose(&self) -> FieldMatrix {
        let mut out = FieldMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)];
            }
        }
        out
    }

    /// Append one column on the right (the augmented system `[A | b]`).
    pub fn augmented(&self, rhs: &[FieldElement]) -> FieldMatrix {
        assert_eq!(rhs.len(), self.rows, "rhs length must match row count");
        let mut out = FieldMatrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(i, j)] = self[(i, j)];
            }
            out[(i, self.cols)] = rhs[i];
        }
        out
    }

    /// Gauss-Jordan elimination. Returns the reduced echelon form together
    /// with the rank, so callers can both count solutions and enumerate the
    /// solution space.
    pub fn row_echelon(&self) -> RowEchelon {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut pivot_row = 0;
        for col in 0..m.cols {
            if pivot_row == m.rows {
                break;
            }
            let Some(src) = (pivot_row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            m.swap_rows(pivot_row, src);
            let scale = m[(pivot_row, col)].inv().expect("pivot is non-zero");
            for j in col..m.cols {
                m[(pivot_row, j)] *= scale;
            }
            for r in 0..m.rows {
                if r != pivot_row && !m[(r, col)].is_zero() {
                    let factor = m[(r, col)];
                    for j in col..m.cols {
                        let v = m[(pivot_row, j)] * factor;
                        m[(r, j)] += v;
                    }
                }
            }
            pivots.push(col);
            pivot_row += 1;
        }
        RowEchelon {
            rank: pivot_row,
            matrix: m,
            pivots,
        }
    }

    pub fn rank(&self) -> usize {
        self.row_echelon().rank
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl Index<(usize, usize)> for FieldMatrix {
    type Output = FieldElement;

    fn index(&self, (r, c): (usize, usize)) -> &FieldElement {
        assert!(r < self.rows && c < self.cols);
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for FieldMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut FieldElement {
        assert!(r < self.rows && c < self.cols);
        &mut self.data[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent multiplication oracle: carry-less "Russian peasant"
    /// multiply-and-reduce over 0x11b. Deliberately shares no code with the
    /// table-based path above.
    fn peasant_mul(mut a: u8, mut b: u8) -> u8 {
        let mut acc = 0u8;
        while b != 0 {
            if b & 1 != 0 {
                acc ^= a;
            }
            let carry = a & 0x80;
            a <<= 1;
            if carry != 0 {
                a ^= 0x1b;
            }
            b >>= 1;
        }
        acc
    }

    fn fe(v: u8) -> FieldElement {
        FieldElement::new(v)
    }

    #[test]
    fn add_examples() {
        assert_eq!(fe(0x00) + fe(0x2a), fe(0x2a));
        assert_eq!(fe(0x2a) + fe(0x2a), fe(0x00));
        assert_eq!(fe(0x53) + fe(0xca), fe(0x99));
        // subtraction is the same operation
        assert_eq!(fe(0x53) - fe(0xca), fe(0x99));
    }

    #[test]
    fn mul_examples() {
        assert_eq!(fe(0x53) * fe(0xca), fe(0x01));
        for v in 0..=255u8 {
            assert_eq!(fe(v) * ONE, fe(v));
            assert_eq!(fe(v) * ZERO, ZERO);
        }
    }

    #[test]
    fn inv_examples() {
        assert_eq!(fe(0x01).inv(), Ok(fe(0x01)));
        assert_eq!(fe(0x53).inv(), Ok(fe(0xca)));
        assert_eq!(fe(0x02).inv(), Ok(fe(0x8d)));
        assert_eq!(fe(0x00).inv(), Err(Gf256Error::ZeroInverse));
    }

    #[test]
    fn exhaustive_identities_and_inverses() {
        for v in 0..=255u8 {
            let a = fe(v);
            assert_eq!(a + ZERO, a);
            assert_eq!(a + a, ZERO);
            assert_eq!(a * ONE, a);
            assert_eq!(a * ZERO, ZERO);
            if v != 0 {
                let i = a.inv().unwrap();
                assert_eq!(a * i, ONE);
                assert_eq!(a / a, ONE);
            }
        }
    }

    #[test]
    fn mul_matches_peasant_oracle_on_all_pairs() {
        for a in 0..=255u8 {
            for b in 0..=255u8 {
                assert_eq!(
                    (fe(a) * fe(b)).value(),
                    peasant_mul(a, b),
                    "mismatch at {a:#04x} * {b:#04x}"
                );
            }
        }
    }

    #[test]
    fn mul_commutes_exhaustively() {
        for a in 0..=255u8 {
            for b in a..=255u8 {
                assert_eq!(fe(a) * fe(b), fe(b) * fe(a));
            }
        }
    }

    /// Full 256^3 sweep of associativity and distributivity. Runs in a few
    /// seconds with test opt-level 2.
    #[test]
    fn exhaustive_associativity_and_distributivity() {
        for a in 0..=255u8 {
            let fa = fe(a);
            for b in 0..=255u8 {
                let fb = fe(b);
                let ab = fa * fb;
                let a_plus_b = fa + fb;
                for c in 0..=255u8 {
                    let fc = fe(c);
                    assert_eq!(ab * fc, fa * (fb * fc));
                    assert_eq!(a_plus_b * fc, fa * fc + fb * fc);
                }
            }
        }
    }

    #[test]
    fn pow_is_repeated_mul() {
        for a in [0x00u8, 0x01, 0x02, 0x53, 0xca, 0xff] {
            let mut acc = ONE;
            for e in 0..20 {
                assert_eq!(fe(a).pow(e), acc, "a={a:#04x} e={e}");
                acc *= fe(a);
            }
        }
        assert_eq!(ZERO.pow(0), ONE);
        assert_eq!(ZERO.pow(5), ZERO);
    }

    #[test]
    fn rank_of_identity_zero_and_dependent_rows() {
        assert_eq!(FieldMatrix::identity(3).rank(), 3);
        assert_eq!(FieldMatrix::zeros(3, 3).rank(), 0);

        let r1 = vec![fe(0x01), fe(0x02), fe(0x03)];
        let r2 = vec![fe(0x10), fe(0x20), fe(0x40)];
        let r3: Vec<FieldElement> = r1.iter().zip(&r2).map(|(&a, &b)| a + b).collect();
        let m = FieldMatrix::from_rows(vec![r1, r2, r3]);
        assert_eq!(m.rank(), 2);
    }

    #[test]
    fn echelon_pivots_are_leading_ones() {
        let m = FieldMatrix::from_rows(vec![
            vec![fe(0x00), fe(0x07), fe(0x01)],
            vec![fe(0x02), fe(0x00), fe(0x05)],
        ]);
        let e = m.row_echelon();
        assert_eq!(e.rank, 2);
        assert_eq!(e.pivots, vec![0, 1]);
        for (row, &col) in e.pivots.iter().enumerate() {
            assert_eq!(e.matrix[(row, col)], ONE);
        }
    }

    proptest! {
        #[test]
        fn rank_equals_rank_of_transpose(
            rows in 1usize..=20,
            cols in 1usize..=20,
            seed in any::<u64>(),
        ) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
            let mut m = FieldMatrix::zeros(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    m[(i, j)] = fe(rng.gen());
                }
            }
            prop_assert_eq!(m.rank(), m.transpose().rank());
        }

        #[test]
        fn associativity_random_triples(a in any::<u8>(), b in any::<u8>(), c in any::<u8>()) {
            let (fa, fb, fc) = (fe(a), fe(b), fe(c));
            prop_assert_eq!((fa * fb) * fc, fa * (fb * fc));
            prop_assert_eq!((fa + fb) * fc, fa * fc + fb * fc);
        }
    }
}
