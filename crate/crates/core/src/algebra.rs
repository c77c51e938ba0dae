//! Finite algebras stored as flat row-major operation tables.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::Partition;

/// An element of a finite carrier `{0..n-1}`.
pub type Elem = u32;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpSymbol {
    pub symbol: String,
    pub arity: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Signature {
    ops: Vec<OpSymbol>,
}

impl Signature {
    pub fn new(ops: Vec<OpSymbol>) -> Result<Self> {
        for (i, op) in ops.iter().enumerate() {
            if op.symbol.is_empty() {
                return Err(Error::Validation("empty operation symbol".into()));
            }
            if ops[..i].iter().any(|o| o.symbol == op.symbol) {
                return Err(Error::Validation(format!(
                    "duplicate operation symbol `{}`",
                    op.symbol
                )));
            }
        }
        Ok(Signature { ops })
    }

    pub fn ops(&self) -> &[OpSymbol] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.ops.iter().position(|o| o.symbol == symbol)
    }
}

/// An operation given as a function of its argument tuple.
pub type OpFn<'a> = &'a dyn Fn(&[Elem]) -> Elem;

/// Row-major index of `args` in a table over a carrier of size `n`.
#[inline]
pub fn table_index(n: usize, args: &[Elem]) -> usize {
    args.iter().fold(0usize, |acc, &a| acc * n + a as usize)
}

/// Inverse of [`table_index`] for tuples of length `arity`.
pub fn decode_index(n: usize, arity: usize, mut index: usize, out: &mut [Elem]) {
    for slot in out[..arity].iter_mut().rev() {
        *slot = (index % n) as Elem;
        index /= n;
    }
}

/// `n^k`, or `None` on overflow.
pub fn checked_pow(n: usize, k: usize) -> Option<usize> {
    (0..k).try_fold(1usize, |acc, _| acc.checked_mul(n))
}

/// A finite algebra: carrier `{0..size-1}` plus one table per operation.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct FiniteAlgebra {
    name: String,
    size: usize,
    signature: Signature,
    tables: Vec<Vec<Elem>>,
}

impl fmt::Debug for FiniteAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FiniteAlgebra")
            .field("name", &self.name)
            .field("size", &self.size)
            .field("signature", &self.signature.ops)
            .finish()
    }
}

impl FiniteAlgebra {
    /// Builds an algebra from `(symbol, arity, table)` triples, validating
    /// table lengths and entries.
    pub fn new<S: Into<String>>(
        name: impl Into<String>,
        size: usize,
        ops: Vec<(S, usize, Vec<Elem>)>,
    ) -> Result<Self> {
        let mut symbols = Vec::with_capacity(ops.len());
        let mut tables = Vec::with_capacity(ops.len());
        for (symbol, arity, table) in ops {
            let symbol = symbol.into();
            let expected = checked_pow(size, arity).ok_or_else(|| {
                Error::Validation(format!("table of `{symbol}` is too large"))
            })?;
            if table.len() != expected {
                return Err(Error::Validation(format!(
                    "table of `{symbol}` has length {}, expected {expected}",
                    table.len()
                )));
            }
            if let Some(&bad) = table.iter().find(|&&v| v as usize >= size) {
                return Err(Error::Validation(format!(
                    "table of `{symbol}` contains {bad}, carrier size is {size}"
                )));
            }
            symbols.push(OpSymbol { symbol, arity });
            tables.push(table);
        }
        Ok(FiniteAlgebra {
            name: name.into(),
            size,
            signature: Signature::new(symbols)?,
            tables,
        })
    }

    /// Builds tables by evaluating closures on every argument tuple.
    pub fn from_fns(
        name: impl Into<String>,
        size: usize,
        ops: &[(&str, usize, OpFn<'_>)],
    ) -> Result<Self> {
        let mut specs = Vec::with_capacity(ops.len());
        for &(symbol, arity, f) in ops {
            let len = checked_pow(size, arity)
                .ok_or_else(|| Error::Validation(format!("table of `{symbol}` is too large")))?;
            let mut args = vec![0; arity];
            let table = (0..len)
                .map(|i| {
                    decode_index(size, arity, i, &mut args);
                    f(&args)
                })
                .collect();
            specs.push((symbol.to_string(), arity, table));
        }
        Self::new(name, size, specs)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn op_count(&self) -> usize {
        self.tables.len()
    }

    pub fn arity(&self, op: usize) -> usize {
        self.signature.ops[op].arity
    }

    pub fn symbol(&self, op: usize) -> &str {
        &self.signature.ops[op].symbol
    }

    pub fn table(&self, op: usize) -> &[Elem] {
        &self.tables[op]
    }

    pub fn op_index(&self, symbol: &str) -> Result<usize> {
        self.signature
            .index_of(symbol)
            .ok_or_else(|| Error::UnknownSymbol(symbol.to_string()))
    }

    /// Checked evaluation by symbol.
    pub fn eval(&self, symbol: &str, args: &[Elem]) -> Result<Elem> {
        let op = self.op_index(symbol)?;
        let arity = self.arity(op);
        if args.len() != arity {
            return Err(Error::ArityMismatch {
                symbol: symbol.to_string(),
                expected: arity,
                got: args.len(),
            });
        }
        if let Some(&bad) = args.iter().find(|&&a| a as usize >= self.size) {
            return Err(Error::ElementOutOfRange {
                element: bad as u64,
                size: self.size,
            });
        }
        Ok(self.apply(op, args))
    }

    /// Unchecked evaluation by operation index.
    #[inline]
    pub fn apply(&self, op: usize, args: &[Elem]) -> Elem {
        debug_assert_eq!(args.len(), self.arity(op));
        self.tables[op][table_index(self.size, args)]
    }

    #[inline]
    pub fn apply2(&self, op: usize, a: Elem, b: Elem) -> Elem {
        self.tables[op][a as usize * self.size + b as usize]
    }

    pub fn same_signature(&self, other: &FiniteAlgebra) -> bool {
        self.signature == other.signature
    }

    pub fn elements(&self) -> impl Iterator<Item = Elem> {
        0..self.size as Elem
    }

    /// `true` iff the partition is invariant under every basic translation,
    /// which for an equivalence relation is the same as compatibility.
    pub fn is_compatible_partition(&self, p: &Partition) -> bool {
        self.translation_witness(p).is_none()
    }

    /// First `(op, a, b)` such that `a` and `b` share a block of `p` but some
    /// translation through `op` separates them.
    pub fn translation_witness(&self, p: &Partition) -> Option<(usize, Elem, Elem)> {
        if p.len() != self.size {
            return Some((usize::MAX, 0, 0));
        }
        let reps = p.representatives();
        let n = self.size;
        let mut args = vec![0; self.signature.ops.iter().map(|o| o.arity).max().unwrap_or(0)];
        for op in 0..self.op_count() {
            let k = self.arity(op);
            if k == 0 {
                continue;
            }
            let others = checked_pow(n, k - 1).unwrap_or(0);
            let mut rest = vec![0; k - 1];
            for a in 0..n as Elem {
                let r = reps[p.label(a) as usize];
                if r == a {
                    continue;
                }
                for pos in 0..k {
                    for idx in 0..others {
                        decode_index(n, k - 1, idx, &mut rest);
                        let (left, right) = rest.split_at(pos);
                        args[..pos].copy_from_slice(left);
                        args[pos + 1..k].copy_from_slice(right);
                        args[pos] = a;
                        let u = self.apply(op, &args[..k]);
                        args[pos] = r;
                        let v = self.apply(op, &args[..k]);
                        if !p.same_block(u, v) {
                            return Some((op, a, r));
                        }
                    }
                }
            }
        }
        None
    }
}

/// Direct product `a × b`; the pair `(x, y)` is encoded as `x * |b| + y`.
pub fn product(a: &FiniteAlgebra, b: &FiniteAlgebra) -> Result<FiniteAlgebra> {
    if !a.same_signature(b) {
        return Err(Error::DimensionMismatch(format!(
            "signatures of `{}` and `{}` differ",
            a.name, b.name
        )));
    }
    let nb = b.size;
    let n = a.size * nb;
    let mut ops = Vec::with_capacity(a.op_count());
    for op in 0..a.op_count() {
        let k = a.arity(op);
        let len = checked_pow(n, k).ok_or_else(|| Error::Validation("product too large".into()))?;
        let mut args = vec![0; k];
        let mut left = vec![0; k];
        let mut right = vec![0; k];
        let mut table = Vec::with_capacity(len);
        for i in 0..len {
            decode_index(n, k, i, &mut args);
            for j in 0..k {
                left[j] = args[j] / nb as Elem;
                right[j] = args[j] % nb as Elem;
            }
            table.push(a.apply(op, &left) * nb as Elem + b.apply(op, &right));
        }
        ops.push((a.symbol(op).to_string(), k, table));
    }
    FiniteAlgebra::new(format!("{}x{}", a.name, b.name), n, ops)
}

/// Materialized direct power `alg^k`, mixed radix with the first coordinate
/// most significant.
pub fn direct_power(alg: &FiniteAlgebra, k: usize) -> Result<FiniteAlgebra> {
    if k == 0 {
        return Err(Error::EmptyCoordinateSet);
    }
    let mut acc = alg.clone();
    for _ in 1..k {
        acc = product(&acc, alg)?;
    }
    Ok(acc.with_name(format!("{}^{k}", alg.name)))
}

/// Coordinates of an element of `direct_power(alg, k)`.
pub fn power_coords(n: usize, k: usize, x: Elem) -> Vec<Elem> {
    let mut out = vec![0; k];
    decode_index(n, k, x as usize, &mut out);
    out
}

/// A subalgebra of a power of `base`, materialized on the indices of its
/// tuples.
#[derive(Clone, Debug)]
pub struct TupleAlgebra {
    pub algebra: FiniteAlgebra,
    pub tuples: Vec<Vec<Elem>>,
    index: HashMap<Vec<Elem>, Elem>,
}

impl TupleAlgebra {
    /// `tuples` must be closed under the coordinatewise operations of `base`.
    pub fn new(name: impl Into<String>, base: &FiniteAlgebra, tuples: Vec<Vec<Elem>>) -> Result<Self> {
        let index: HashMap<Vec<Elem>, Elem> = tuples
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as Elem))
            .collect();
        if index.len() != tuples.len() {
            return Err(Error::Validation("duplicate tuples".into()));
        }
        let m = tuples.len();
        let dim = tuples.first().map_or(0, |t| t.len());
        let mut ops = Vec::with_capacity(base.op_count());
        for op in 0..base.op_count() {
            let k = base.arity(op);
            let len = checked_pow(m, k).ok_or_else(|| Error::Validation("subalgebra too large".into()))?;
            let mut args = vec![0; k];
            let mut coord_args = vec![0; k];
            let mut out = vec![0; dim];
            let mut table = Vec::with_capacity(len);
            for i in 0..len {
                decode_index(m, k, i, &mut args);
                for (c, slot) in out.iter_mut().enumerate() {
                    for j in 0..k {
                        coord_args[j] = tuples[args[j] as usize][c];
                    }
                    *slot = base.apply(op, &coord_args);
                }
                let v = *index.get(&out).ok_or_else(|| {
                    Error::Validation(format!("tuple set not closed under `{}`", base.symbol(op)))
                })?;
                table.push(v);
            }
            ops.push((base.symbol(op).to_string(), k, table));
        }
        Ok(TupleAlgebra {
            algebra: FiniteAlgebra::new(name, m, ops)?,
            tuples,
            index,
        })
    }

    pub fn index_of(&self, tuple: &[Elem]) -> Option<Elem> {
        self.index.get(tuple).copied()
    }
}

/// A map between two finite algebras of the same signature.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Homomorphism {
    pub dom: Arc<FiniteAlgebra>,
    pub cod: Arc<FiniteAlgebra>,
    pub map: Vec<Elem>,
}

impl Homomorphism {
    /// Validates shape only; [`Homomorphism::is_homomorphism`] checks the
    /// commuting condition.
    pub fn new(dom: Arc<FiniteAlgebra>, cod: Arc<FiniteAlgebra>, map: Vec<Elem>) -> Result<Self> {
        if map.len() != dom.size() {
            return Err(Error::DimensionMismatch(format!(
                "map has length {}, domain has size {}",
                map.len(),
                dom.size()
            )));
        }
        if let Some(&bad) = map.iter().find(|&&v| v as usize >= cod.size()) {
            return Err(Error::ElementOutOfRange {
                element: bad as u64,
                size: cod.size(),
            });
        }
        Ok(Homomorphism { dom, cod, map })
    }

    /// Like [`Homomorphism::new`] but also rejects maps that do not commute
    /// with the operations.
    pub fn checked(dom: Arc<FiniteAlgebra>, cod: Arc<FiniteAlgebra>, map: Vec<Elem>) -> Result<Self> {
        let h = Self::new(dom, cod, map)?;
        if !h.is_homomorphism() {
            return Err(Error::Validation(format!(
                "map `{}` -> `{}` is not a homomorphism",
                h.dom.name(),
                h.cod.name()
            )));
        }
        Ok(h)
    }

    pub fn identity(alg: Arc<FiniteAlgebra>) -> Self {
        let map = alg.elements().collect();
        Homomorphism {
            dom: alg.clone(),
            cod: alg,
            map,
        }
    }

    #[inline]
    pub fn apply(&self, x: Elem) -> Elem {
        self.map[x as usize]
    }

    pub fn is_homomorphism(&self) -> bool {
        is_homomorphism(&self.dom, &self.cod, &self.map)
    }

    pub fn is_surjective(&self) -> bool {
        is_surjective(&self.map, self.cod.size())
    }

    pub fn is_injective(&self) -> bool {
        let mut seen = vec![false; self.cod.size()];
        self.map.iter().all(|&v| !std::mem::replace(&mut seen[v as usize], true))
    }

    /// Kernel pair as a canonical partition of the domain.
    pub fn kernel(&self) -> Partition {
        Partition::from_keys(&self.map)
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Homomorphism) -> Result<Homomorphism> {
        if self.cod.size() != other.dom.size() {
            return Err(Error::DimensionMismatch("composite of incompatible maps".into()));
        }
        Homomorphism::new(
            self.dom.clone(),
            other.cod.clone(),
            self.map.iter().map(|&x| other.apply(x)).collect(),
        )
    }
}

/// Does `map: dom -> cod` commute with every operation on every tuple?
pub fn is_homomorphism(dom: &FiniteAlgebra, cod: &FiniteAlgebra, map: &[Elem]) -> bool {
    if !dom.same_signature(cod) || map.len() != dom.size() {
        return false;
    }
    if map.iter().any(|&v| v as usize >= cod.size()) {
        return false;
    }
    let n = dom.size();
    for op in 0..dom.op_count() {
        let k = dom.arity(op);
        let Some(len) = checked_pow(n, k) else {
            return false;
        };
        let mut args = vec![0; k];
        let mut image = vec![0; k];
        for i in 0..len {
            decode_index(n, k, i, &mut args);
            for j in 0..k {
                image[j] = map[args[j] as usize];
            }
            if map[dom.table(op)[i] as usize] != cod.apply(op, &image) {
                return false;
            }
        }
    }
    true
}

pub fn is_surjective(map: &[Elem], cod_size: usize) -> bool {
    first_missed(map, cod_size).is_none()
}

/// Least codomain element not in the image of `map`.
pub fn first_missed(map: &[Elem], cod_size: usize) -> Option<Elem> {
    let mut hit = vec![false; cod_size];
    for &v in map {
        hit[v as usize] = true;
    }
    hit.iter().position(|&h| !h).map(|i| i as Elem)
}

/// Quotient of `alg` by a compatible partition. Blocks of the quotient are in
/// canonical order (ascending least member).
pub fn quotient(alg: &Arc<FiniteAlgebra>, theta: &Partition) -> Result<(Arc<FiniteAlgebra>, Homomorphism)> {
    if theta.len() != alg.size() {
        return Err(Error::DimensionMismatch(format!(
            "partition of {} elements on algebra of size {}",
            theta.len(),
            alg.size()
        )));
    }
    if !alg.is_compatible_partition(theta) {
        return Err(Error::IncompatibleCongruence {
            algebra: alg.name().to_string(),
        });
    }
    let reps = theta.representatives();
    let m = reps.len();
    let mut ops = Vec::with_capacity(alg.op_count());
    for op in 0..alg.op_count() {
        let k = alg.arity(op);
        let len = checked_pow(m, k).ok_or_else(|| Error::Validation("quotient too large".into()))?;
        let mut args = vec![0; k];
        let mut lifted = vec![0; k];
        let table = (0..len)
            .map(|i| {
                decode_index(m, k, i, &mut args);
                for j in 0..k {
                    lifted[j] = reps[args[j] as usize];
                }
                theta.label(alg.apply(op, &lifted))
            })
            .collect();
        ops.push((alg.symbol(op).to_string(), k, table));
    }
    let q = Arc::new(FiniteAlgebra::new(format!("{}/[{}]", alg.name(), theta), m, ops)?);
    let proj = Homomorphism::new(alg.clone(), q.clone(), theta.labels().to_vec())?;
    Ok((q, proj))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn eval_mod4_addition() {
        let z4 = corpus::cyclic(4);
        assert_eq!(z4.eval("+", &[1, 3]).unwrap(), 0);
        assert_eq!(z4.eval("0", &[]).unwrap(), 0);
        assert_eq!(z4.eval("-", &[1]).unwrap(), 3);
    }

    #[test]
    fn eval_errors() {
        let z4 = corpus::cyclic(4);
        assert!(matches!(z4.eval("*", &[1, 1]), Err(Error::UnknownSymbol(_))));
        assert!(matches!(z4.eval("+", &[1]), Err(Error::ArityMismatch { .. })));
        assert!(matches!(z4.eval("+", &[1, 4]), Err(Error::ElementOutOfRange { .. })));
    }

    #[test]
    fn eval_identity_and_constant() {
        let a = FiniteAlgebra::from_fns("id", 3, &[("id", 1, &|a: &[Elem]| a[0]), ("e", 0, &|_: &[Elem]| 1)])
            .unwrap();
        assert_eq!(a.eval("id", &[2]).unwrap(), 2);
        assert_eq!(a.eval("e", &[]).unwrap(), 1);
    }

    #[test]
    fn table_validation() {
        assert!(FiniteAlgebra::new("bad", 2, vec![("f", 1, vec![0, 2])]).is_err());
        assert!(FiniteAlgebra::new("bad", 2, vec![("f", 1, vec![0])]).is_err());
        assert!(FiniteAlgebra::new("bad", 2, vec![("f", 1, vec![0, 1]), ("f", 1, vec![0, 1])]).is_err());
    }

    #[test]
    fn quotient_z4_by_parity() {
        let z4 = Arc::new(corpus::cyclic(4));
        let theta = Partition::parse(4, "0,2|1,3").unwrap();
        let (q, proj) = quotient(&z4, &theta).unwrap();
        assert_eq!(q.size(), 2);
        assert_eq!(proj.map, vec![0, 1, 0, 1]);
        assert!(proj.is_homomorphism() && proj.is_surjective());
        assert_eq!(proj.kernel(), theta);
        assert_eq!(q.eval("+", &[1, 1]).unwrap(), 0);

        let (iso, p) = quotient(&z4, &Partition::discrete(4)).unwrap();
        assert_eq!(iso.size(), 4);
        assert!(p.is_injective());
        let (one, _) = quotient(&z4, &Partition::full(4)).unwrap();
        assert_eq!(one.size(), 1);

        let bad = Partition::parse(4, "0,1|2,3").unwrap();
        assert!(matches!(quotient(&z4, &bad), Err(Error::IncompatibleCongruence { .. })));
    }

    #[test]
    fn homomorphism_checks() {
        let z4 = Arc::new(corpus::cyclic(4));
        let z2 = Arc::new(corpus::cyclic(2));
        let z3 = Arc::new(corpus::cyclic(3));
        assert!(Homomorphism::new(z4.clone(), z2.clone(), vec![0, 1, 0, 1]).unwrap().is_homomorphism());
        assert!(Homomorphism::identity(z4.clone()).is_homomorphism());
        assert!(Homomorphism::new(z3.clone(), z3.clone(), vec![0, 2, 1]).unwrap().is_homomorphism());
        assert!(!Homomorphism::new(z2.clone(), z2.clone(), vec![1, 0]).unwrap().is_homomorphism());
        assert!(Homomorphism::new(z4, z2, vec![0, 1, 0]).is_err());
    }

    #[test]
    fn product_and_power_encoding() {
        let z2 = corpus::cyclic(2);
        let z3 = corpus::cyclic(3);
        let p = product(&z2, &z3).unwrap();
        assert_eq!(p.size(), 6);
        // (1,2) + (1,2) = (0,1)
        assert_eq!(p.eval("+", &[5, 5]).unwrap(), 1);
        let sq = direct_power(&z3, 2).unwrap();
        assert_eq!(power_coords(3, 2, 7), vec![2, 1]);
        assert_eq!(sq.eval("+", &[7, 7]).unwrap(), 3 + 2);
    }

    #[test]
    fn tuple_algebra_requires_closure() {
        let z2 = corpus::cyclic(2);
        let diag = vec![vec![0, 0], vec![1, 1]];
        let t = TupleAlgebra::new("diag", &z2, diag).unwrap();
        assert_eq!(t.algebra.size(), 2);
        assert!(TupleAlgebra::new("first", &z2, vec![vec![0, 0], vec![0, 1]]).is_ok());
        assert!(TupleAlgebra::new("bad", &z2, vec![vec![1, 0]]).is_err());
    }
}
