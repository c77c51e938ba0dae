//! Congruences: generation, the full lattice, permutability, compatibility.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::algebra::{checked_pow, decode_index, Elem, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::partition::{Partition, UnionFind};
use crate::relcalc::BinRel;

pub const DEFAULT_LATTICE_BUDGET: usize = 100_000;

/// A compatible equivalence relation, kept both as a canonical partition and
/// as a bit matrix.
#[derive(Clone)]
pub struct Congruence {
    algebra: Arc<FiniteAlgebra>,
    partition: Partition,
    rel: BinRel,
}

impl fmt::Debug for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Congruence({} on {})", self.partition, self.algebra.name())
    }
}

impl PartialEq for Congruence {
    fn eq(&self, other: &Self) -> bool {
        self.partition == other.partition && *self.algebra == *other.algebra
    }
}

impl Eq for Congruence {}

impl Congruence {
    /// Validates compatibility of `partition` with `alg`.
    pub fn new(alg: Arc<FiniteAlgebra>, partition: Partition) -> Result<Self> {
        if partition.len() != alg.size() {
            return Err(Error::DimensionMismatch(format!(
                "partition of {} elements on algebra of size {}",
                partition.len(),
                alg.size()
            )));
        }
        if !alg.is_compatible_partition(&partition) {
            return Err(Error::IncompatibleCongruence {
                algebra: alg.name().to_string(),
            });
        }
        Ok(Self::trusted(alg, partition))
    }

    fn trusted(algebra: Arc<FiniteAlgebra>, partition: Partition) -> Self {
        let rel = BinRel::from_partition(&partition);
        Congruence { algebra, partition, rel }
    }

    pub fn parse(alg: Arc<FiniteAlgebra>, text: &str) -> Result<Self> {
        let p = Partition::parse(alg.size(), text)?;
        Self::new(alg, p)
    }

    pub fn delta(alg: Arc<FiniteAlgebra>) -> Self {
        let n = alg.size();
        Self::trusted(alg, Partition::discrete(n))
    }

    pub fn nabla(alg: Arc<FiniteAlgebra>) -> Self {
        let n = alg.size();
        Self::trusted(alg, Partition::full(n))
    }

    pub fn algebra(&self) -> &Arc<FiniteAlgebra> {
        &self.algebra
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn rel(&self) -> &BinRel {
        &self.rel
    }

    pub fn is_delta(&self) -> bool {
        self.partition.is_discrete()
    }

    pub fn is_nabla(&self) -> bool {
        self.partition.is_full()
    }

    pub fn related(&self, a: Elem, b: Elem) -> bool {
        self.partition.same_block(a, b)
    }

    pub fn leq(&self, other: &Congruence) -> bool {
        self.partition.leq(&other.partition)
    }

    fn same_algebra(&self, other: &Congruence) -> Result<()> {
        if Arc::ptr_eq(&self.algebra, &other.algebra) || *self.algebra == *other.algebra {
            Ok(())
        } else {
            Err(Error::AlgebraMismatch)
        }
    }

    pub fn meet(&self, other: &Congruence) -> Result<Congruence> {
        self.same_algebra(other)?;
        Ok(Self::trusted(self.algebra.clone(), self.partition.meet(&other.partition)))
    }

    /// The join of two congruences is their join as equivalence relations.
    pub fn join(&self, other: &Congruence) -> Result<Congruence> {
        self.same_algebra(other)?;
        Ok(Self::trusted(self.algebra.clone(), self.partition.join(&other.partition)))
    }

    /// `θ ∘ ψ = ψ ∘ θ`.
    pub fn permutes_with(&self, other: &Congruence) -> Result<bool> {
        self.same_algebra(other)?;
        Ok(self.rel.compose(&other.rel)? == other.rel.compose(&self.rel)?)
    }

    /// `θ ∘ ψ ∘ θ = ψ ∘ θ ∘ ψ`.
    pub fn three_permutes_with(&self, other: &Congruence) -> Result<bool> {
        self.same_algebra(other)?;
        let a = self.rel.compose(&other.rel)?.compose(&self.rel)?;
        let b = other.rel.compose(&self.rel)?.compose(&other.rel)?;
        Ok(a == b)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.partition.to_string())
    }
}

impl fmt::Display for Congruence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.partition.fmt(f)
    }
}

pub fn permute(a: &Congruence, b: &Congruence) -> Result<bool> {
    a.permutes_with(b)
}

pub fn three_permute(a: &Congruence, b: &Congruence) -> Result<bool> {
    a.three_permutes_with(b)
}

/// Least congruence containing `pairs`, as a partition. Each merge of two
/// classes is pushed through every basic translation until nothing new is
/// merged.
pub fn cg_partition(alg: &FiniteAlgebra, pairs: &[(Elem, Elem)]) -> Result<Partition> {
    let n = alg.size();
    for &(a, b) in pairs {
        for x in [a, b] {
            if x as usize >= n {
                return Err(Error::ElementOutOfRange { element: x as u64, size: n });
            }
        }
    }
    let mut uf = UnionFind::new(n);
    let mut queue: Vec<(Elem, Elem)> = Vec::new();
    for &(a, b) in pairs {
        if uf.union(a, b) {
            queue.push((a, b));
        }
    }
    let max_arity = (0..alg.op_count()).map(|op| alg.arity(op)).max().unwrap_or(0);
    let mut args = vec![0; max_arity];
    let mut rest = vec![0; max_arity.saturating_sub(1)];
    while let Some((a, b)) = queue.pop() {
        for op in 0..alg.op_count() {
            let k = alg.arity(op);
            if k == 0 {
                continue;
            }
            if k == 1 {
                let (u, v) = (alg.apply(op, &[a]), alg.apply(op, &[b]));
                if uf.union(u, v) {
                    queue.push((u, v));
                }
                continue;
            }
            if k == 2 {
                let table = alg.table(op);
                for c in 0..n {
                    let pairs = [
                        (table[a as usize * n + c], table[b as usize * n + c]),
                        (table[c * n + a as usize], table[c * n + b as usize]),
                    ];
                    for (u, v) in pairs {
                        if uf.union(u, v) {
                            queue.push((u, v));
                        }
                    }
                }
                continue;
            }
            let others = checked_pow(n, k - 1).ok_or_else(|| Error::Validation("arity too large".into()))?;
            for idx in 0..others {
                decode_index(n, k - 1, idx, &mut rest);
                for pos in 0..k {
                    args[..pos].copy_from_slice(&rest[..pos]);
                    args[pos + 1..k].copy_from_slice(&rest[pos..k - 1]);
                    args[pos] = a;
                    let u = alg.apply(op, &args[..k]);
                    args[pos] = b;
                    let v = alg.apply(op, &args[..k]);
                    if uf.union(u, v) {
                        queue.push((u, v));
                    }
                }
            }
        }
    }
    Ok(uf.into_partition())
}

pub fn cg(alg: &Arc<FiniteAlgebra>, pairs: &[(Elem, Elem)]) -> Result<Congruence> {
    Ok(Congruence::trusted(alg.clone(), cg_partition(alg, pairs)?))
}

/// Sorting key of lattice listings: more blocks first, then partition text.
fn lattice_order(a: &Partition, b: &Partition) -> std::cmp::Ordering {
    b.block_count()
        .cmp(&a.block_count())
        .then_with(|| a.to_string().cmp(&b.to_string()))
}

/// Every congruence of `alg`: principal congruences closed under joins.
pub fn all_congruences(alg: &Arc<FiniteAlgebra>, budget: usize) -> Result<Vec<Congruence>> {
    Ok(congruence_partitions(alg, budget)?
        .into_iter()
        .map(|p| Congruence::trusted(alg.clone(), p))
        .collect())
}

/// Partitions of [`all_congruences`], in the same order.
pub fn congruence_partitions(alg: &FiniteAlgebra, budget: usize) -> Result<Vec<Partition>> {
    let n = alg.size() as Elem;
    let pairs: Vec<(Elem, Elem)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut principal: Vec<Partition> = pairs
        .par_iter()
        .map(|&(a, b)| cg_partition(alg, &[(a, b)]).expect("pairs in range"))
        .collect();
    principal.sort();
    principal.dedup();
    let mut seen: HashSet<Partition> = HashSet::new();
    let mut all = vec![Partition::discrete(alg.size())];
    seen.insert(all[0].clone());
    for p in &principal {
        if seen.insert(p.clone()) {
            all.push(p.clone());
        }
    }
    if all.len() > budget {
        return Err(Error::LatticeBudgetExceeded { budget });
    }
    let mut i = 0;
    while i < all.len() {
        let current = all[i].clone();
        for p in &principal {
            let j = current.join(p);
            if !seen.contains(&j) {
                if all.len() >= budget {
                    return Err(Error::LatticeBudgetExceeded { budget });
                }
                seen.insert(j.clone());
                all.push(j);
            }
        }
        i += 1;
    }
    all.sort_by(lattice_order);
    Ok(all)
}

/// An operation and argument pairs in the relation whose coordinatewise
/// image falls outside it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompatibilityWitness {
    pub symbol: String,
    pub args: Vec<(Elem, Elem)>,
    pub image: (Elem, Elem),
}

/// `true` iff `rel` is a subalgebra of `alg × alg`.
pub fn is_compatible(alg: &FiniteAlgebra, rel: &BinRel) -> Result<bool> {
    Ok(compatibility_witness(alg, alg, rel)?.is_none())
}

/// First failure of closure of `rel ⊆ a × b` under the operations.
pub fn compatibility_witness(a: &FiniteAlgebra, b: &FiniteAlgebra, rel: &BinRel) -> Result<Option<CompatibilityWitness>> {
    if rel.src_size() != a.size() || rel.dst_size() != b.size() {
        return Err(Error::DimensionMismatch(format!(
            "relation {}x{} on carriers of sizes {} and {}",
            rel.src_size(),
            rel.dst_size(),
            a.size(),
            b.size()
        )));
    }
    if !a.same_signature(b) {
        return Err(Error::AlgebraMismatch);
    }
    let pairs: Vec<(Elem, Elem)> = rel.pairs().collect();
    let m = pairs.len();
    for op in 0..a.op_count() {
        let k = a.arity(op);
        let Some(total) = checked_pow(m, k) else {
            return Err(Error::Validation("relation too large for an exhaustive check".into()));
        };
        let mut idx = vec![0 as Elem; k];
        let mut left = vec![0; k];
        let mut right = vec![0; k];
        for t in 0..total {
            decode_index(m.max(1), k, t, &mut idx);
            for j in 0..k {
                let (u, v) = pairs[idx[j] as usize];
                left[j] = u;
                right[j] = v;
            }
            let image = (a.apply(op, &left), b.apply(op, &right));
            if !rel.contains(image.0, image.1) {
                return Ok(Some(CompatibilityWitness {
                    symbol: a.symbol(op).to_string(),
                    args: idx.iter().map(|&i| pairs[i as usize]).collect(),
                    image,
                }));
            }
        }
    }
    Ok(None)
}

/// Result of [`reflexive_subalgebra`].
#[derive(Clone, Debug)]
pub struct RelClosure {
    pub rel: BinRel,
    /// `false` if generation stopped at the size cap before filling `A × A`.
    pub saturated: bool,
}

/// Subalgebra of `alg × alg` generated by `Δ ∪ pairs`: the least compatible
/// reflexive relation containing `pairs`. Generation stops early once the
/// relation has `stop_at` pairs; callers pass the size of a known upper
/// bound (such as the congruence generated by `pairs`) so that reaching it
/// means the closure is complete.
pub fn reflexive_subalgebra(alg: &FiniteAlgebra, pairs: &[(Elem, Elem)], stop_at: Option<usize>) -> Result<RelClosure> {
    let n = alg.size();
    let mut rel = BinRel::identity(n);
    let mut list: Vec<(Elem, Elem)> = (0..n as Elem).map(|x| (x, x)).collect();
    for &(a, b) in pairs {
        if a as usize >= n || b as usize >= n {
            return Err(Error::ElementOutOfRange {
                element: a.max(b) as u64,
                size: n,
            });
        }
        if rel.insert(a, b) {
            list.push((a, b));
        }
    }
    let cap = stop_at.unwrap_or(usize::MAX).min(n * n);
    let done = |list: &Vec<(Elem, Elem)>| list.len() >= cap;
    if done(&list) {
        return Ok(RelClosure { rel, saturated: list.len() == n * n });
    }
    let max_arity = (0..alg.op_count()).map(|op| alg.arity(op)).max().unwrap_or(0);
    let mut left = vec![0; max_arity];
    let mut right = vec![0; max_arity];
    let mut tuple = vec![0usize; max_arity];
    // the diagonal is already a subalgebra, so start after it
    let mut i = n;
    while i < list.len() {
        for op in 0..alg.op_count() {
            let k = alg.arity(op);
            match k {
                0 => {}
                1 => {
                    let (a, b) = list[i];
                    let img = (alg.apply(op, &[a]), alg.apply(op, &[b]));
                    if rel.insert(img.0, img.1) {
                        list.push(img);
                        if done(&list) {
                            return Ok(RelClosure { rel, saturated: list.len() == n * n });
                        }
                    }
                }
                2 => {
                    let table = alg.table(op);
                    let (a, b) = list[i];
                    for j in 0..=i {
                        let (c, d) = list[j];
                        for img in [
                            (table[a as usize * n + c as usize], table[b as usize * n + d as usize]),
                            (table[c as usize * n + a as usize], table[d as usize * n + b as usize]),
                        ] {
                            if rel.insert(img.0, img.1) {
                                list.push(img);
                                if done(&list) {
                                    return Ok(RelClosure { rel, saturated: list.len() == n * n });
                                }
                            }
                        }
                    }
                }
                _ => {
                    for t in tuple[..k].iter_mut() {
                        *t = 0;
                    }
                    'tuples: loop {
                        if tuple[..k].contains(&i) {
                            for j in 0..k {
                                let (u, v) = list[tuple[j]];
                                left[j] = u;
                                right[j] = v;
                            }
                            let img = (alg.apply(op, &left[..k]), alg.apply(op, &right[..k]));
                            if rel.insert(img.0, img.1) {
                                list.push(img);
                                if done(&list) {
                                    return Ok(RelClosure { rel, saturated: list.len() == n * n });
                                }
                            }
                        }
                        for pos in (0..k).rev() {
                            if tuple[pos] < i {
                                tuple[pos] += 1;
                                for s in tuple[pos + 1..k].iter_mut() {
                                    *s = 0;
                                }
                                continue 'tuples;
                            }
                        }
                        break;
                    }
                }
            }
        }
        i += 1;
    }
    Ok(RelClosure { rel, saturated: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn arc(a: FiniteAlgebra) -> Arc<FiniteAlgebra> {
        Arc::new(a)
    }

    #[test]
    fn principal_congruences() {
        let z4 = arc(corpus::cyclic(4));
        assert_eq!(cg(&z4, &[(0, 2)]).unwrap().to_string(), "0,2|1,3");
        assert!(cg(&z4, &[]).unwrap().is_delta());
        let z5 = arc(corpus::cyclic(5));
        assert!(cg(&z5, &[(1, 3)]).unwrap().is_nabla());
        assert!(matches!(cg(&z5, &[(1, 9)]), Err(Error::ElementOutOfRange { .. })));
    }

    #[test]
    fn lattices() {
        let z4 = arc(corpus::cyclic(4));
        let l: Vec<String> = all_congruences(&z4, 100).unwrap().iter().map(|c| c.to_string()).collect();
        assert_eq!(l, vec!["0|1|2|3", "0,2|1,3", "0,1,2,3"]);
        assert_eq!(all_congruences(&arc(corpus::trivial()), 10).unwrap().len(), 1);
        assert_eq!(all_congruences(&arc(corpus::s3()), 10).unwrap().len(), 3);
        let v4 = arc(corpus::z2xz2());
        assert_eq!(all_congruences(&v4, 100).unwrap().len(), 5);
        assert!(matches!(
            all_congruences(&v4, 3),
            Err(Error::LatticeBudgetExceeded { budget: 3 })
        ));
    }

    #[test]
    fn join_meet_permute() {
        let z6 = arc(corpus::cyclic(6));
        let m2 = Congruence::parse(z6.clone(), "0,2,4|1,3,5").unwrap();
        let m3 = Congruence::parse(z6.clone(), "0,3|1,4|2,5").unwrap();
        assert!(m2.join(&m3).unwrap().is_nabla());
        assert!(m2.meet(&m3).unwrap().is_delta());
        assert_eq!(Congruence::delta(z6.clone()).join(&m2).unwrap(), m2);
        for a in all_congruences(&z6, 100).unwrap() {
            for b in all_congruences(&z6, 100).unwrap() {
                assert!(permute(&a, &b).unwrap());
            }
        }
        let sl = arc(corpus::meet_semilattice(3));
        let t1 = Congruence::parse(sl.clone(), "0,1|2").unwrap();
        let t2 = Congruence::parse(sl.clone(), "0|1,2").unwrap();
        assert!(!permute(&t1, &t2).unwrap());
        assert!(permute(&t1, &t1).unwrap());
        let other = Congruence::delta(arc(corpus::cyclic(6).with_name("other")));
        assert!(matches!(m2.join(&other), Err(Error::AlgebraMismatch)));
    }

    #[test]
    fn incompatible_partition_is_rejected() {
        let z4 = arc(corpus::cyclic(4));
        assert!(matches!(
            Congruence::parse(z4, "0,1|2,3"),
            Err(Error::IncompatibleCongruence { .. })
        ));
    }

    #[test]
    fn compatibility_of_relations() {
        let sl = corpus::meet_semilattice(3);
        let le = BinRel::from_pairs(3, 3, (0..3).flat_map(|x| (x..3).map(move |y| (x, y)))).unwrap();
        assert!(is_compatible(&sl, &le).unwrap());
        let z4 = corpus::cyclic(4);
        let r = BinRel::from_pairs(4, 4, [(0, 0), (1, 1), (2, 2), (3, 3), (0, 1)]).unwrap();
        let w = compatibility_witness(&z4, &z4, &r).unwrap().unwrap();
        assert!(!r.contains(w.image.0, w.image.1));
        assert!(is_compatible(&z4, &BinRel::identity(4)).unwrap());
        assert!(is_compatible(&z4, &BinRel::full(4, 4)).unwrap());
    }

    #[test]
    fn reflexive_subalgebras() {
        let sl = corpus::meet_semilattice(2);
        let r = reflexive_subalgebra(&sl, &[(0, 1)], None).unwrap();
        assert_eq!(r.rel.count(), 3);
        assert!(is_compatible(&sl, &r.rel).unwrap());
        let z4 = corpus::cyclic(4);
        let r = reflexive_subalgebra(&z4, &[(0, 1)], None).unwrap();
        assert_eq!(r.rel, BinRel::full(4, 4));
    }
}
