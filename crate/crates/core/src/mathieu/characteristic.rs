//! Characteristic values `a_n(q)`, `b_n(q)` from truncated Fourier recurrences.
//!
//! A periodic solution of `w'' + (a - 2q cos 2t) w = 0` expands in one of four
//! Fourier families (even/odd, period π/2π). Each family turns the recurrence
//! for the coefficients into a symmetric tridiagonal matrix whose ascending
//! eigenvalues are the characteristic values of that family. The set of
//! curves is the same for `+2q cos 2t`, since `t -> t + π/2` flips the sign of
//! the cosine; labels follow the usual tabulated convention.

use std::fmt;

use crate::error::{ensure_non_negative, Error, Result};

/// Which family of characteristic values: `A` (even solutions, `a_n`) or
/// `B` (odd solutions, `b_n`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CurveFamily {
    A,
    B,
}

/// A characteristic curve `a_n` or `b_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CurveId {
    family: CurveFamily,
    order: u32,
}

impl CurveId {
    pub fn new(family: CurveFamily, order: u32) -> Result<Self> {
        if family == CurveFamily::B && order == 0 {
            return Err(Error::InvalidCurve);
        }
        Ok(Self { family, order })
    }

    pub fn a(order: u32) -> Self {
        Self {
            family: CurveFamily::A,
            order,
        }
    }

    /// # Panics
    /// If `order == 0`.
    pub fn b(order: u32) -> Self {
        assert!(order >= 1, "b_0 does not exist");
        Self {
            family: CurveFamily::B,
            order,
        }
    }

    pub fn family(&self) -> CurveFamily {
        self.family
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    /// Value at `q = 0`, namely `n^2`.
    pub fn value_at_zero(&self) -> f64 {
        let n = self.order as f64;
        n * n
    }

    /// Truncation used for this curve at `q`: `max(50, 2n + 8 ceil(sqrt q))`.
    pub fn truncation(&self, q: f64) -> usize {
        let n = self.order as usize;
        50usize.max(2 * n + 8 * q.sqrt().ceil() as usize)
    }

    fn block(&self) -> Block {
        match (self.family, self.order % 2) {
            (CurveFamily::A, 0) => Block::EvenPi,
            (CurveFamily::A, _) => Block::EvenTwoPi,
            (CurveFamily::B, 0) => Block::OddPi,
            (CurveFamily::B, _) => Block::OddTwoPi,
        }
    }

    /// Index of this value among the ascending eigenvalues of its block.
    fn rank(&self) -> usize {
        match self.block() {
            Block::EvenPi => self.order as usize / 2,
            Block::EvenTwoPi | Block::OddTwoPi => (self.order as usize - 1) / 2,
            Block::OddPi => self.order as usize / 2 - 1,
        }
    }
}

impl fmt::Display for CurveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self.family {
            CurveFamily::A => 'a',
            CurveFamily::B => 'b',
        };
        write!(f, "{c}{}", self.order)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[allow(clippy::enum_variant_names)]
enum Block {
    /// cos(2k t), k >= 0
    EvenPi,
    /// cos((2k+1) t)
    EvenTwoPi,
    /// sin((2k+1) t)
    OddTwoPi,
    /// sin(2k t), k >= 1
    OddPi,
}

/// Symmetric tridiagonal matrix stored as diagonal and off-diagonal.
#[derive(Debug, Clone)]
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
}

impl Tridiagonal {
    /// Number of eigenvalues strictly below `x` (Sturm count of `T - xI = LDL^T`).
    fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.diag.len() {
            let off2 = if i == 0 {
                0.0
            } else {
                self.off[i - 1] * self.off[i - 1]
            };
            d = self.diag[i] - x - if i == 0 { 0.0 } else { off2 / d };
            if d == 0.0 {
                d = -f64::EPSILON * (self.diag[i].abs() + x.abs()).max(f64::MIN_POSITIVE);
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Gershgorin interval containing every eigenvalue.
    fn bounds(&self) -> (f64, f64) {
        let n = self.diag.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `k`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
    fn eigenvalue(&self, k: usize) -> f64 {
        let (mut lo, mut hi) = self.bounds();
        let pad = 1e-12 * lo.abs().max(hi.abs()).max(1.0);
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

fn block_matrix(block: Block, q: f64, size: usize) -> Tridiagonal {
    let sq = |m: usize| (m * m) as f64;
    let (diag, off): (Vec<f64>, Vec<f64>) = match block {
        Block::EvenPi => (
            (0..size).map(|k| sq(2 * k)).collect(),
            (0..size - 1)
                .map(|k| {
                    if k == 0 {
                        std::f64::consts::SQRT_2 * q
                    } else {
                        q
                    }
                })
                .collect(),
        ),
        Block::EvenTwoPi => (
            (0..size)
                .map(|k| sq(2 * k + 1) + if k == 0 { q } else { 0.0 })
                .collect(),
            vec![q; size - 1],
        ),
        Block::OddTwoPi => (
            (0..size)
                .map(|k| sq(2 * k + 1) - if k == 0 { q } else { 0.0 })
                .collect(),
            vec![q; size - 1],
        ),
        Block::OddPi => ((1..=size).map(|k| sq(2 * k)).collect(), vec![q; size - 1]),
    };
    Tridiagonal { diag, off }
}

fn value_at_truncation(id: CurveId, q: f64, size: usize) -> f64 {
    block_matrix(id.block(), q, size.max(id.rank() + 2)).eigenvalue(id.rank())
}

/// Characteristic value `a_n(q)` or `b_n(q)` for `q >= 0`.
///
/// Fails if the value moves by more than `1e-11 * max(1, |v|)` when the
/// truncation is extended by ten rows.
pub fn characteristic_value(id: CurveId, q: f64) -> Result<f64> {
    ensure_non_negative("q", q)?;
    if q == 0.0 {
        return Ok(id.value_at_zero());
    }
    let size = id.truncation(q);
    let v = value_at_truncation(id, q, size);
    let check = value_at_truncation(id, q, size + 10);
    let change = (check - v).abs();
    if change > 1e-11 * v.abs().max(1.0) {
        return Err(Error::TruncationNotConverged {
            curve: id.to_string(),
            q,
            truncation: size,
            change,
        });
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b0_is_rejected() {
        assert_eq!(CurveId::new(CurveFamily::B, 0), Err(Error::InvalidCurve));
        assert!(CurveId::new(CurveFamily::A, 0).is_ok());
    }

    #[test]
    fn negative_q_is_rejected() {
        assert!(characteristic_value(CurveId::a(1), -0.1).is_err());
        assert!(characteristic_value(CurveId::a(1), f64::NAN).is_err());
    }

    #[test]
    fn values_at_zero() {
        assert_eq!(characteristic_value(CurveId::a(0), 0.0).unwrap(), 0.0);
        assert_eq!(characteristic_value(CurveId::a(1), 0.0).unwrap(), 1.0);
        assert_eq!(characteristic_value(CurveId::b(3), 0.0).unwrap(), 9.0);
        // tiny q agrees with the limit
        let v = characteristic_value(CurveId::a(2), 1e-9).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
    }

    #[test]
    fn sturm_count_on_diagonal_matrix() {
        let t = Tridiagonal {
            diag: vec![3.0, 1.0, 2.0],
            off: vec![0.0, 0.0],
        };
        assert_eq!(t.count_below(1.5), 1);
        assert_eq!(t.count_below(10.0), 3);
        assert!((t.eigenvalue(2) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rank_and_block_mapping() {
        assert_eq!(CurveId::a(0).rank(), 0);
        assert_eq!(CurveId::a(4).rank(), 2);
        assert_eq!(CurveId::a(5).rank(), 2);
        assert_eq!(CurveId::b(1).rank(), 0);
        assert_eq!(CurveId::b(2).rank(), 0);
        assert_eq!(CurveId::b(6).rank(), 2);
        assert_eq!(CurveId::b(7).rank(), 3);
    }

    #[test]
    fn truncation_rule() {
        assert_eq!(CurveId::a(1).truncation(0.5), 50);
        assert_eq!(CurveId::a(3).truncation(100.0), 86);
    }

    #[test]
    fn display() {
        assert_eq!(CurveId::b(6).to_string(), "b6");
        assert_eq!(CurveId::a(0).to_string(), "a0");
    }
}
