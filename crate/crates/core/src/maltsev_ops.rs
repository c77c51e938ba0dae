//! Ternary operations on `{0..n-1}` and the identities a Mal'tsev operation
//! may satisfy.

use serde::Serialize;

use crate::algebra::{Elem, FiniteAlgebra};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TernaryOp {
    n: usize,
    table: Vec<Elem>,
}

impl TernaryOp {
    pub fn new(n: usize, table: Vec<Elem>) -> Result<Self> {
        if table.len() != n * n * n {
            return Err(Error::Validation(format!(
                "ternary table has length {}, expected {}",
                table.len(),
                n * n * n
            )));
        }
        if let Some(&bad) = table.iter().find(|&&v| v as usize >= n) {
            return Err(Error::ElementOutOfRange {
                element: bad as u64,
                size: n,
            });
        }
        Ok(TernaryOp { n, table })
    }

    pub fn from_fn(n: usize, f: impl Fn(Elem, Elem, Elem) -> Elem) -> Self {
        let m = n as Elem;
        let mut table = Vec::with_capacity(n * n * n);
        for x in 0..m {
            for y in 0..m {
                for z in 0..m {
                    table.push(f(x, y, z));
                }
            }
        }
        TernaryOp { n, table }
    }

    /// The ternary operation `symbol` of `alg`.
    pub fn of_algebra(alg: &FiniteAlgebra, symbol: &str) -> Result<Self> {
        let op = alg.op_index(symbol)?;
        if alg.arity(op) != 3 {
            return Err(Error::ArityMismatch {
                symbol: symbol.to_string(),
                expected: 3,
                got: alg.arity(op),
            });
        }
        Ok(TernaryOp {
            n: alg.size(),
            table: alg.table(op).to_vec(),
        })
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn table(&self) -> &[Elem] {
        &self.table
    }

    #[inline]
    pub fn at(&self, x: Elem, y: Elem, z: Elem) -> Elem {
        let n = self.n;
        self.table[(x as usize * n + y as usize) * n + z as usize]
    }

    fn elems(&self) -> std::ops::Range<Elem> {
        0..self.n as Elem
    }

    /// `p(x,x,y) = y` and `p(x,y,y) = x`.
    pub fn is_maltsev(&self) -> bool {
        self.elems()
            .all(|x| self.elems().all(|y| self.at(x, x, y) == y && self.at(x, y, y) == x))
    }

    /// `p(p(x,y,z),z,w) = p(x,y,w)`.
    pub fn is_left_assoc(&self) -> bool {
        self.all4(|x, y, z, w| self.at(self.at(x, y, z), z, w) == self.at(x, y, w))
    }

    /// `p(x,y,p(y,z,w)) = p(x,z,w)`.
    pub fn is_right_assoc(&self) -> bool {
        self.all4(|x, y, z, w| self.at(x, y, self.at(y, z, w)) == self.at(x, z, w))
    }

    /// `p(p(x,y,z),u,v) = p(x,y,p(z,u,v))`.
    pub fn is_assoc(&self) -> bool {
        self.all4(|x, y, z, u| {
            let xyz = self.at(x, y, z);
            self.elems().all(|v| self.at(xyz, u, v) == self.at(x, y, self.at(z, u, v)))
        })
    }

    /// `p(x,y,z) = p(z,y,x)`.
    pub fn is_commutative(&self) -> bool {
        self.elems().all(|x| {
            self.elems()
                .all(|y| self.elems().all(|z| self.at(x, y, z) == self.at(z, y, x)))
        })
    }

    /// `p` is a homomorphism `(X,p)^3 -> (X,p)`: it commutes with itself on
    /// every 3x3 matrix of arguments.
    pub fn is_autonomous(&self) -> bool {
        let n = self.n;
        let total = n.pow(9);
        let mut m = [0 as Elem; 9];
        for idx in 0..total {
            let mut r = idx;
            for slot in m.iter_mut().rev() {
                *slot = (r % n) as Elem;
                r /= n;
            }
            let rows = [
                self.at(m[0], m[1], m[2]),
                self.at(m[3], m[4], m[5]),
                self.at(m[6], m[7], m[8]),
            ];
            let cols = [
                self.at(m[0], m[3], m[6]),
                self.at(m[1], m[4], m[7]),
                self.at(m[2], m[5], m[8]),
            ];
            if self.at(rows[0], rows[1], rows[2]) != self.at(cols[0], cols[1], cols[2]) {
                return false;
            }
        }
        true
    }

    /// First `(x, y, a, b)` with `a != b` and `p(x,y,a) = p(x,y,b)`.
    pub fn cancellation_failure(&self) -> Option<(Elem, Elem, Elem, Elem)> {
        for x in self.elems() {
            for y in self.elems() {
                for a in self.elems() {
                    for b in a + 1..self.n as Elem {
                        if self.at(x, y, a) == self.at(x, y, b) {
                            return Some((x, y, a, b));
                        }
                    }
                }
            }
        }
        None
    }

    fn all4(&self, f: impl Fn(Elem, Elem, Elem, Elem) -> bool) -> bool {
        self.elems().all(|x| {
            self.elems()
                .all(|y| self.elems().all(|z| self.elems().all(|w| f(x, y, z, w))))
        })
    }
}

/// Cells `(a,b,c)` not fixed by the Mal'tsev identities: `a != b` and
/// `b != c`, in lexicographic order.
pub fn free_cells(n: usize) -> Vec<(Elem, Elem, Elem)> {
    let m = n as Elem;
    let mut cells = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                if a != b && b != c {
                    cells.push((a, b, c));
                }
            }
        }
    }
    cells
}

/// Number of Mal'tsev operations on `n` elements, for `n <= 3`.
pub fn maltsev_count(n: usize) -> Result<u64> {
    if n > 3 {
        return Err(Error::SizeUnsupported(n));
    }
    Ok((n as u64).pow(free_cells(n).len() as u32))
}

/// The Mal'tsev operation with forced cells pre-filled and the free cells
/// set from the base-`n` digits of `index` (first free cell most
/// significant).
pub fn maltsev_op_at(n: usize, index: u64) -> Result<TernaryOp> {
    let count = maltsev_count(n)?;
    if index >= count {
        return Err(Error::Validation(format!("index {index} out of {count}")));
    }
    let mut op = TernaryOp::from_fn(n, |x, y, z| if x == y { z } else { x });
    let cells = free_cells(n);
    let mut r = index;
    for &(a, b, c) in cells.iter().rev() {
        op.table[(a as usize * n + b as usize) * n + c as usize] = (r % n as u64) as Elem;
        r /= n as u64;
    }
    Ok(op)
}

/// Streams all Mal'tsev operations on `n` elements in lexicographic order
/// of their free cells.
pub fn enumerate_maltsev(n: usize) -> Result<impl Iterator<Item = TernaryOp>> {
    let count = maltsev_count(n)?;
    Ok((0..count).map(move |i| maltsev_op_at(n, i).expect("index in range")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum OpProperty {
    LeftAssoc,
    RightAssoc,
    Assoc,
    Commutative,
    Autonomous,
}

impl OpProperty {
    pub const ALL: [OpProperty; 5] = [
        OpProperty::LeftAssoc,
        OpProperty::RightAssoc,
        OpProperty::Assoc,
        OpProperty::Commutative,
        OpProperty::Autonomous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpProperty::LeftAssoc => "left_assoc",
            OpProperty::RightAssoc => "right_assoc",
            OpProperty::Assoc => "assoc",
            OpProperty::Commutative => "commutative",
            OpProperty::Autonomous => "autonomous",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn holds(self, p: &TernaryOp) -> bool {
        match self {
            OpProperty::LeftAssoc => p.is_left_assoc(),
            OpProperty::RightAssoc => p.is_right_assoc(),
            OpProperty::Assoc => p.is_assoc(),
            OpProperty::Commutative => p.is_commutative(),
            OpProperty::Autonomous => p.is_autonomous(),
        }
    }
}

/// Counts over a full enumeration, including the two equivalences and the
/// cancellation property that every Mal'tsev operation should satisfy.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct EnumerationTally {
    pub size: usize,
    pub total: u64,
    pub left_assoc: u64,
    pub right_assoc: u64,
    pub assoc: u64,
    pub commutative: u64,
    pub autonomous: u64,
    /// Operations where `assoc` and `left_assoc && right_assoc` disagree.
    pub assoc_exceptions: u64,
    /// Operations where `autonomous` and `assoc && commutative` disagree.
    pub autonomous_exceptions: u64,
    /// Right-associative operations that are not cancellative.
    pub cancellation_exceptions: u64,
    /// Autonomous operations that are not commutative.
    pub symmetry_exceptions: u64,
    pub first_exception: Option<u64>,
}

impl EnumerationTally {
    fn record(&mut self, index: u64, p: &TernaryOp) {
        let l = p.is_left_assoc();
        let r = p.is_right_assoc();
        let a = p.is_assoc();
        let c = p.is_commutative();
        let au = p.is_autonomous();
        self.total += 1;
        self.left_assoc += u64::from(l);
        self.right_assoc += u64::from(r);
        self.assoc += u64::from(a);
        self.commutative += u64::from(c);
        self.autonomous += u64::from(au);
        let mut bad = false;
        if a != (l && r) {
            self.assoc_exceptions += 1;
            bad = true;
        }
        if au != (a && c) {
            self.autonomous_exceptions += 1;
            bad = true;
        }
        if r && p.cancellation_failure().is_some() {
            self.cancellation_exceptions += 1;
            bad = true;
        }
        if au && !c {
            self.symmetry_exceptions += 1;
            bad = true;
        }
        if bad && self.first_exception.is_none() {
            self.first_exception = Some(index);
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.total += other.total;
        self.left_assoc += other.left_assoc;
        self.right_assoc += other.right_assoc;
        self.assoc += other.assoc;
        self.commutative += other.commutative;
        self.autonomous += other.autonomous;
        self.assoc_exceptions += other.assoc_exceptions;
        self.autonomous_exceptions += other.autonomous_exceptions;
        self.cancellation_exceptions += other.cancellation_exceptions;
        self.symmetry_exceptions += other.symmetry_exceptions;
        self.first_exception = match (self.first_exception, other.first_exception) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self
    }

    pub fn exceptions(&self) -> u64 {
        self.assoc_exceptions + self.autonomous_exceptions + self.cancellation_exceptions + self.symmetry_exceptions
    }
}

/// Runs every property over all Mal'tsev operations on `n` elements, in
/// parallel chunks. The result does not depend on the schedule.
pub fn tally_maltsev(n: usize) -> Result<EnumerationTally> {
    use rayon::prelude::*;
    let count = maltsev_count(n)?;
    let chunk = 4096u64;
    let chunks = count.div_ceil(chunk);
    let tally = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut t = EnumerationTally::default();
            for i in c * chunk..((c + 1) * chunk).min(count) {
                t.record(i, &maltsev_op_at(n, i).expect("index in range"));
            }
            t
        })
        .reduce(EnumerationTally::default, EnumerationTally::merge);
    Ok(EnumerationTally { size: n, ..tally })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_operations() {
        let p = TernaryOp::from_fn(5, |x, y, z| (x + 5 - y + z) % 5);
        assert!(p.is_maltsev());
        let p4 = TernaryOp::from_fn(4, |x, y, z| (x + 4 - y + z) % 4);
        for prop in OpProperty::ALL {
            assert!(prop.holds(&p4), "{}", prop.name());
        }
        let xor = TernaryOp::from_fn(2, |x, y, z| x ^ y ^ z);
        assert!(xor.is_maltsev());
    }

    #[test]
    fn first_projection_is_not_maltsev() {
        assert!(!TernaryOp::from_fn(3, |x, _, _| x).is_maltsev());
    }

    #[test]
    fn singleton_satisfies_everything() {
        let p = TernaryOp::from_fn(1, |_, _, _| 0);
        assert!(p.is_maltsev());
        assert!(OpProperty::ALL.iter().all(|q| q.holds(&p)));
    }

    #[test]
    fn counts_for_small_sizes() {
        assert_eq!(enumerate_maltsev(1).unwrap().count(), 1);
        let ops: Vec<_> = enumerate_maltsev(2).unwrap().collect();
        assert_eq!(ops.len(), 4);
        assert!(ops.iter().all(TernaryOp::is_maltsev));
        assert_eq!(free_cells(2), vec![(0, 1, 0), (1, 0, 1)]);
        assert_eq!(maltsev_count(3).unwrap(), 531_441);
        assert!(matches!(maltsev_count(4), Err(Error::SizeUnsupported(4))));
    }

    #[test]
    fn brute_force_agrees_at_two() {
        // all 256 ternary tables on {0,1}
        let brute = (0u32..256)
            .filter(|bits| {
                let p = TernaryOp::new(2, (0..8).map(|i| (bits >> (7 - i)) & 1).collect()).unwrap();
                p.is_maltsev()
            })
            .count();
        assert_eq!(brute, 4);
    }

    #[test]
    fn tally_at_two() {
        let t = tally_maltsev(2).unwrap();
        assert_eq!(t.total, 4);
        assert_eq!(t.exceptions(), 0);
    }
}
