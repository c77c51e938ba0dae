//! Binary relations between finite carriers as dense bit matrices.

use std::fmt;

use crate::algebra::Elem;
use crate::error::{Error, Result};
use crate::partition::{Partition, UnionFind};

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BinRel {
    src: usize,
    dst: usize,
    words: usize,
    bits: Vec<u64>,
}

impl fmt::Debug for BinRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinRel({}x{}, {:?})", self.src, self.dst, self.pairs().collect::<Vec<_>>())
    }
}

impl BinRel {
    pub fn empty(src: usize, dst: usize) -> Self {
        let words = dst.div_ceil(64);
        BinRel {
            src,
            dst,
            words,
            bits: vec![0; src * words],
        }
    }

    /// `∇`: every pair.
    pub fn full(src: usize, dst: usize) -> Self {
        let mut r = Self::empty(src, dst);
        for x in 0..src {
            for y in 0..dst {
                r.insert(x as Elem, y as Elem);
            }
        }
        r
    }

    /// `Δ` on a carrier of size `n`.
    pub fn identity(n: usize) -> Self {
        let mut r = Self::empty(n, n);
        for x in 0..n {
            r.insert(x as Elem, x as Elem);
        }
        r
    }

    pub fn from_pairs(src: usize, dst: usize, pairs: impl IntoIterator<Item = (Elem, Elem)>) -> Result<Self> {
        let mut r = Self::empty(src, dst);
        for (x, y) in pairs {
            if x as usize >= src {
                return Err(Error::ElementOutOfRange { element: x as u64, size: src });
            }
            if y as usize >= dst {
                return Err(Error::ElementOutOfRange { element: y as u64, size: dst });
            }
            r.insert(x, y);
        }
        Ok(r)
    }

    pub fn from_partition(p: &Partition) -> Self {
        let n = p.len();
        let mut r = Self::empty(n, n);
        for block in p.blocks() {
            for &x in &block {
                for &y in &block {
                    r.insert(x, y);
                }
            }
        }
        r
    }

    /// Graph `{(x, f(x))}` of a map into a carrier of size `cod`.
    pub fn graph(map: &[Elem], cod: usize) -> Self {
        let mut r = Self::empty(map.len(), cod);
        for (x, &y) in map.iter().enumerate() {
            r.insert(x as Elem, y);
        }
        r
    }

    /// `Eq[f] = {(a, b) : f(a) = f(b)}`.
    pub fn kernel_pair(map: &[Elem]) -> Self {
        Self::from_partition(&Partition::from_keys(map))
    }

    pub fn src_size(&self) -> usize {
        self.src
    }

    pub fn dst_size(&self) -> usize {
        self.dst
    }

    pub fn is_square(&self) -> bool {
        self.src == self.dst
    }

    #[inline]
    pub fn contains(&self, x: Elem, y: Elem) -> bool {
        let (x, y) = (x as usize, y as usize);
        self.bits[x * self.words + y / 64] >> (y % 64) & 1 == 1
    }

    /// Returns `true` if the pair was new.
    #[inline]
    pub fn insert(&mut self, x: Elem, y: Elem) -> bool {
        let (x, y) = (x as usize, y as usize);
        let w = &mut self.bits[x * self.words + y / 64];
        let mask = 1u64 << (y % 64);
        let new = *w & mask == 0;
        *w |= mask;
        new
    }

    pub fn row(&self, x: Elem) -> &[u64] {
        let x = x as usize;
        &self.bits[x * self.words..(x + 1) * self.words]
    }

    pub fn count(&self) -> usize {
        self.bits.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Pairs in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (Elem, Elem)> + '_ {
        (0..self.src as Elem).flat_map(move |x| self.row_elems(x).map(move |y| (x, y)))
    }

    /// Elements related to `x`, ascending.
    pub fn row_elems(&self, x: Elem) -> impl Iterator<Item = Elem> + '_ {
        self.row(x).iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let b = w.trailing_zeros();
                w &= w - 1;
                Some((wi * 64) as Elem + b)
            })
        })
    }

    fn same_dims(&self, other: &BinRel) -> Result<()> {
        if self.src != other.src || self.dst != other.dst {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.src, self.dst, other.src, other.dst
            )));
        }
        Ok(())
    }

    fn require_square(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::NotSquare { src: self.src, dst: self.dst });
        }
        Ok(())
    }

    /// `{(x, z) : ∃y. x self y ∧ y other z}`, i.e. `other ∘ self`.
    pub fn compose(&self, other: &BinRel) -> Result<BinRel> {
        if self.dst != other.src {
            return Err(Error::DimensionMismatch(format!(
                "cannot compose {}x{} with {}x{}",
                self.src, self.dst, other.src, other.dst
            )));
        }
        let mut out = BinRel::empty(self.src, other.dst);
        let ow = out.words;
        for x in 0..self.src {
            let row = &mut out.bits[x * ow..(x + 1) * ow];
            for y in self.row_elems(x as Elem) {
                for (acc, &w) in row.iter_mut().zip(other.row(y)) {
                    *acc |= w;
                }
            }
        }
        Ok(out)
    }

    pub fn opposite(&self) -> BinRel {
        let mut out = BinRel::empty(self.dst, self.src);
        for (x, y) in self.pairs() {
            out.insert(y, x);
        }
        out
    }

    pub fn meet(&self, other: &BinRel) -> Result<BinRel> {
        self.same_dims(other)?;
        let mut out = self.clone();
        for (a, &b) in out.bits.iter_mut().zip(&other.bits) {
            *a &= b;
        }
        Ok(out)
    }

    pub fn join(&self, other: &BinRel) -> Result<BinRel> {
        self.same_dims(other)?;
        let mut out = self.clone();
        for (a, &b) in out.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(out)
    }

    /// Containment `self ⊆ other`.
    pub fn leq(&self, other: &BinRel) -> Result<bool> {
        self.same_dims(other)?;
        Ok(self.bits.iter().zip(&other.bits).all(|(&a, &b)| a & !b == 0))
    }

    pub fn is_reflexive(&self) -> Result<bool> {
        self.require_square()?;
        Ok((0..self.src as Elem).all(|x| self.contains(x, x)))
    }

    pub fn is_symmetric(&self) -> Result<bool> {
        self.require_square()?;
        Ok(self.pairs().all(|(x, y)| self.contains(y, x)))
    }

    /// `R ∘ R ⊆ R`.
    pub fn is_transitive(&self) -> Result<bool> {
        self.require_square()?;
        self.compose(self)?.leq(self)
    }

    /// `R R° R ⊆ R`.
    pub fn is_difunctional(&self) -> bool {
        let rrr = self
            .compose(&self.opposite())
            .and_then(|r| r.compose(self))
            .expect("dimensions agree");
        rrr.leq(self).expect("dimensions agree")
    }

    pub fn is_equivalence(&self) -> Result<bool> {
        Ok(self.is_reflexive()? && self.is_symmetric()? && self.is_transitive()?)
    }

    /// First `(x, y)` with `x R y` but not `y R x`.
    pub fn symmetry_witness(&self) -> Option<(Elem, Elem)> {
        self.pairs().find(|&(x, y)| !self.contains(y, x))
    }

    /// First `(x, y, z)` with `x R y R z` but not `x R z`.
    pub fn transitivity_witness(&self) -> Option<(Elem, Elem, Elem)> {
        for (x, y) in self.pairs() {
            for z in self.row_elems(y) {
                if !self.contains(x, z) {
                    return Some((x, y, z));
                }
            }
        }
        None
    }

    /// Least equivalence relation containing a square relation.
    pub fn equivalence_closure(&self) -> Result<BinRel> {
        Ok(BinRel::from_partition(&self.equivalence_partition()?))
    }

    /// The partition of the least equivalence containing `self`.
    pub fn equivalence_partition(&self) -> Result<Partition> {
        self.require_square()?;
        let mut uf = UnionFind::new(self.src);
        for (x, y) in self.pairs() {
            uf.union(x, y);
        }
        Ok(uf.into_partition())
    }

    /// The partition this relation is, if it is an equivalence.
    pub fn to_partition(&self) -> Option<Partition> {
        if !self.is_equivalence().unwrap_or(false) {
            return None;
        }
        let keys: Vec<Elem> = (0..self.src as Elem)
            .map(|x| self.row_elems(x).next().expect("reflexive"))
            .collect();
        Some(Partition::from_keys(&keys))
    }

    pub fn to_pairs_json(&self) -> serde_json::Value {
        serde_json::Value::from(self.pairs().map(|(x, y)| vec![x, y]).collect::<Vec<_>>())
    }
}

/// `f ∘ R ∘ f°` for a surjection `f` onto a carrier of size `cod`:
/// `{(f a, f b) : a R b}`.
pub fn image_relation(map: &[Elem], cod: usize, r: &BinRel) -> Result<BinRel> {
    if let Some(missed) = crate::algebra::first_missed(map, cod) {
        return Err(Error::NotSurjective(missed as u64));
    }
    if r.src_size() != map.len() || !r.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "relation {}x{} on a map from {} elements",
            r.src_size(),
            r.dst_size(),
            map.len()
        )));
    }
    let g = BinRel::graph(map, cod);
    g.opposite().compose(r)?.compose(&g)
}
