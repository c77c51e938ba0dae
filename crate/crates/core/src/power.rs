//! Powers `A^D` and subalgebra generation inside them.
//!
//! The power is never materialized: only the closure of a generator set is.
//! Elements are stored once in an insertion-ordered set, and each one keeps
//! the operation and argument indices that first produced it.

use std::ops::ControlFlow;

use indexmap::IndexSet;

use crate::algebra::{Elem, FiniteAlgebra};
use crate::error::{Error, Result};

pub const DEFAULT_CLOSURE_BUDGET: usize = 5_000_000;

/// `base^dim` with coordinatewise operations.
#[derive(Clone, Copy, Debug)]
pub struct PowerAlgebra<'a> {
    base: &'a FiniteAlgebra,
    dim: usize,
}

impl<'a> PowerAlgebra<'a> {
    pub fn new(base: &'a FiniteAlgebra, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::EmptyCoordinateSet);
        }
        Ok(PowerAlgebra { base, dim })
    }

    pub fn base(&self) -> &'a FiniteAlgebra {
        self.base
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Applies operation `op` coordinatewise to `args`, writing into `out`.
    pub fn apply_into(&self, op: usize, args: &[&[Elem]], out: &mut [Elem]) {
        let k = args.len();
        let mut scratch = [0 as Elem; 16];
        for (c, slot) in out.iter_mut().enumerate() {
            for j in 0..k {
                scratch[j] = args[j][c];
            }
            *slot = self.base.apply(op, &scratch[..k]);
        }
    }

    pub fn apply(&self, op: usize, args: &[&[Elem]]) -> Vec<Elem> {
        let mut out = vec![0; self.dim];
        self.apply_into(op, args, &mut out);
        out
    }

    fn check(&self, v: &[Elem]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} in power of dimension {}",
                v.len(),
                self.dim
            )));
        }
        if let Some(&bad) = v.iter().find(|&&x| x as usize >= self.base.size()) {
            return Err(Error::ElementOutOfRange {
                element: bad as u64,
                size: self.base.size(),
            });
        }
        Ok(())
    }
}

/// How an element of a closure was first obtained.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    /// Position in the (deduplicated) generator list.
    Generator(usize),
    /// `op` applied to earlier elements; constants have no arguments.
    Apply { op: usize, args: Vec<usize> },
}

/// A generated subuniverse together with its derivation DAG.
#[derive(Clone, Debug)]
pub struct Closure {
    dim: usize,
    elements: IndexSet<Box<[Elem]>>,
    origins: Vec<Origin>,
    saturated: bool,
}

impl Closure {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize) -> &[Elem] {
        &self.elements[i]
    }

    pub fn index_of(&self, v: &[Elem]) -> Option<usize> {
        self.elements.get_index_of(v)
    }

    pub fn contains(&self, v: &[Elem]) -> bool {
        self.elements.contains(v)
    }

    pub fn origin(&self, i: usize) -> &Origin {
        &self.origins[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Elem]> {
        self.elements.iter().map(|b| &**b)
    }

    /// `false` if the search was stopped early by its callback.
    pub fn is_saturated(&self) -> bool {
        self.saturated
    }
}

/// Least subuniverse of `ambient` containing `generators`.
pub fn generate(ambient: &PowerAlgebra<'_>, generators: &[Vec<Elem>], budget: usize) -> Result<Closure> {
    generate_until(ambient, generators, budget, |_, _| ControlFlow::Continue(()))
}

/// Semi-naive worklist closure. Elements are processed in insertion order;
/// processing element `i` applies each operation (in signature order) to
/// every argument tuple over `0..=i` that mentions `i`, tuples in
/// lexicographic order. Generators come first in the given order, then
/// constants. `visit` sees every element as it is inserted and may stop the
/// search, in which case the returned closure is not saturated.
pub fn generate_until(
    ambient: &PowerAlgebra<'_>,
    generators: &[Vec<Elem>],
    budget: usize,
    mut visit: impl FnMut(usize, &[Elem]) -> ControlFlow<()>,
) -> Result<Closure> {
    let mut inc = IncrementalClosure::new(*ambient, budget)?;
    for v in generators {
        if inc.add_generator(v, &mut visit)?.is_break() {
            return Ok(inc.into_closure());
        }
    }
    if inc.add_constants(&mut visit)?.is_break() {
        return Ok(inc.into_closure());
    }
    let _ = inc.saturate(&mut visit)?;
    Ok(inc.into_closure())
}

/// A closure that can be extended by further generators after saturation
/// and rolled back to an earlier length. Appending generators and resuming
/// keeps the semi-naive invariant: every tuple of earlier elements has
/// already been processed.
#[derive(Clone, Debug)]
pub struct IncrementalClosure<'a> {
    ambient: PowerAlgebra<'a>,
    budget: usize,
    closure: Closure,
    next: usize,
    generators: usize,
    out: Vec<Elem>,
    tuple: Vec<usize>,
}

impl<'a> IncrementalClosure<'a> {
    pub fn new(ambient: PowerAlgebra<'a>, budget: usize) -> Result<Self> {
        let max_arity = (0..ambient.base.op_count())
            .map(|op| ambient.base.arity(op))
            .max()
            .unwrap_or(0);
        if max_arity > 16 {
            return Err(Error::Validation("operations of arity > 16 are not supported".into()));
        }
        Ok(IncrementalClosure {
            ambient,
            budget,
            closure: Closure {
                dim: ambient.dim,
                elements: IndexSet::new(),
                origins: Vec::new(),
                saturated: false,
            },
            next: 0,
            generators: 0,
            out: vec![0; ambient.dim],
            tuple: vec![0; max_arity],
        })
    }

    pub fn closure(&self) -> &Closure {
        &self.closure
    }

    pub fn into_closure(self) -> Closure {
        self.closure
    }

    pub fn len(&self) -> usize {
        self.closure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.closure.is_empty()
    }

    /// Drops every element inserted after the closure had `len` elements.
    /// Only meaningful for a `len` at which the closure was saturated.
    pub fn rollback(&mut self, len: usize) {
        self.closure.elements.truncate(len);
        self.closure.origins.truncate(len);
        self.next = self.next.min(len);
        self.closure.saturated = false;
    }

    fn insert(
        &mut self,
        v: &[Elem],
        origin: impl FnOnce() -> Origin,
        visit: &mut impl FnMut(usize, &[Elem]) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>> {
        if self.closure.elements.contains(v) {
            return Ok(ControlFlow::Continue(()));
        }
        if self.closure.elements.len() >= self.budget {
            return Err(Error::ClosureBudgetExceeded { budget: self.budget });
        }
        let (idx, _) = self.closure.elements.insert_full(v.into());
        self.closure.origins.push(origin());
        self.closure.saturated = false;
        Ok(visit(idx, &self.closure.elements[idx]))
    }

    pub fn add_generator(
        &mut self,
        v: &[Elem],
        visit: &mut impl FnMut(usize, &[Elem]) -> ControlFlow<()>,
    ) -> Result<ControlFlow<()>> {
        self.ambient.check(v)?;
        let g = self.generators;
        self.generators += 1;
        self.insert(v, || Origin::Generator(g), visit)
    }

    pub fn add_constants(&mut self, visit: &mut impl FnMut(usize, &[Elem]) -> ControlFlow<()>) -> Result<ControlFlow<()>> {
        let alg = self.ambient.base;
        for op in 0..alg.op_count() {
            if alg.arity(op) == 0 {
                let v = vec![alg.apply(op, &[]); self.ambient.dim];
                if self.insert(&v, || Origin::Apply { op, args: Vec::new() }, visit)?.is_break() {
                    return Ok(ControlFlow::Break(()));
                }
            }
        }
        Ok(ControlFlow::Continue(()))
    }

    /// Processes pending elements until the closure is saturated or `visit`
    /// asks to stop.
    pub fn saturate(&mut self, visit: &mut impl FnMut(usize, &[Elem]) -> ControlFlow<()>) -> Result<ControlFlow<()>> {
        let alg = self.ambient.base;
        let dim = self.ambient.dim;
        while self.next < self.closure.elements.len() {
            let i = self.next;
            for op in 0..alg.op_count() {
                let k = alg.arity(op);
                match k {
                    0 => {}
                    1 => {
                        let table = alg.table(op);
                        for c in 0..dim {
                            self.out[c] = table[self.closure.elements[i][c] as usize];
                        }
                        let v = std::mem::take(&mut self.out);
                        let r = self.insert(&v, || Origin::Apply { op, args: vec![i] }, visit);
                        self.out = v;
                        if r?.is_break() {
                            return Ok(ControlFlow::Break(()));
                        }
                    }
                    2 => {
                        let table = alg.table(op);
                        let n = alg.size();
                        // (j, i) for j < i, then (i, j) for j <= i: the
                        // lexicographic order of pairs with maximum i
                        for (j, first) in (0..i).map(|j| (j, false)).chain((0..=i).map(|j| (j, true))) {
                            let (l, r) = if first { (i, j) } else { (j, i) };
                            {
                                let a = &self.closure.elements[l];
                                let b = &self.closure.elements[r];
                                for c in 0..dim {
                                    self.out[c] = table[a[c] as usize * n + b[c] as usize];
                                }
                            }
                            if self.closure.elements.contains(&self.out[..]) {
                                continue;
                            }
                            let v = std::mem::take(&mut self.out);
                            let res = self.insert(&v, || Origin::Apply { op, args: vec![l, r] }, visit);
                            self.out = v;
                            if res?.is_break() {
                                return Ok(ControlFlow::Break(()));
                            }
                        }
                    }
                    _ => {
                        for t in self.tuple[..k].iter_mut() {
                            *t = 0;
                        }
                        loop {
                            if self.tuple[..k].contains(&i) {
                                {
                                    let args: Vec<&[Elem]> =
                                        self.tuple[..k].iter().map(|&t| &*self.closure.elements[t]).collect();
                                    self.ambient.apply_into(op, &args, &mut self.out);
                                }
                                if !self.closure.elements.contains(&self.out[..]) {
                                    let v = std::mem::take(&mut self.out);
                                    let args = self.tuple[..k].to_vec();
                                    let res = self.insert(&v, || Origin::Apply { op, args }, visit);
                                    self.out = v;
                                    if res?.is_break() {
                                        return Ok(ControlFlow::Break(()));
                                    }
                                }
                            }
                            if !advance_with_max(&mut self.tuple[..k], i) {
                                break;
                            }
                        }
                    }
                }
            }
            self.next += 1;
        }
        self.closure.saturated = true;
        Ok(ControlFlow::Continue(()))
    }
}

/// Advances `t` to the next tuple over `0..=max` in lexicographic order.
/// Returns `false` when exhausted.
fn advance_with_max(t: &mut [usize], max: usize) -> bool {
    for pos in (0..t.len()).rev() {
        if t[pos] < max {
            t[pos] += 1;
            for s in t[pos + 1..].iter_mut() {
                *s = 0;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn brute_closure(alg: &FiniteAlgebra, dim: usize, gens: &[Vec<Elem>]) -> std::collections::BTreeSet<Vec<Elem>> {
        // naive oracle: apply every op to every tuple until nothing changes
        let p = PowerAlgebra::new(alg, dim).unwrap();
        let mut set: std::collections::BTreeSet<Vec<Elem>> = gens.iter().cloned().collect();
        loop {
            let elems: Vec<Vec<Elem>> = set.iter().cloned().collect();
            let mut grew = false;
            for op in 0..alg.op_count() {
                let k = alg.arity(op);
                let total = elems.len().pow(k as u32);
                for idx in 0..total {
                    let mut r = idx;
                    let mut args = Vec::with_capacity(k);
                    for _ in 0..k {
                        args.push(&elems[r % elems.len().max(1)][..]);
                        r /= elems.len().max(1);
                    }
                    if k == 0 {
                        let v = vec![alg.apply(op, &[]); dim];
                        grew |= set.insert(v);
                        continue;
                    }
                    grew |= set.insert(p.apply(op, &args));
                }
            }
            if !grew {
                return set;
            }
        }
    }

    #[test]
    fn z4_generated_by_one() {
        let z4 = FiniteAlgebra::from_fns("Z4+", 4, &[("+", 2, &|a: &[Elem]| (a[0] + a[1]) % 4)]).unwrap();
        let p = PowerAlgebra::new(&z4, 1).unwrap();
        let c = generate(&p, &[vec![1]], 100).unwrap();
        let elems: Vec<Elem> = c.iter().map(|v| v[0]).collect();
        assert_eq!(elems, vec![1, 2, 3, 0]);
        assert!(c.is_saturated());
    }

    #[test]
    fn coordinatewise_application() {
        let z2 = corpus::cyclic(2);
        let p = PowerAlgebra::new(&z2, 2).unwrap();
        let plus = z2.op_index("+").unwrap();
        assert_eq!(p.apply(plus, &[&[0, 1], &[1, 1]]), vec![1, 0]);
        assert!(matches!(PowerAlgebra::new(&z2, 0), Err(Error::EmptyCoordinateSet)));
    }

    #[test]
    fn even_weight_space_from_pairs() {
        // Z2 with + only, coordinates of size 4, generators e_i + e_{i+1}
        let z2 = FiniteAlgebra::from_fns("Z2+", 2, &[("+", 2, &|a: &[Elem]| a[0] ^ a[1])]).unwrap();
        let p = PowerAlgebra::new(&z2, 4).unwrap();
        let gens = vec![vec![1, 1, 0, 0], vec![0, 1, 1, 0], vec![0, 0, 1, 1]];
        let c = generate(&p, &gens, 100).unwrap();
        let oracle = brute_closure(&z2, 4, &gens);
        assert_eq!(oracle.len(), 8);
        assert_eq!(c.len(), 8);
        assert!(c.iter().all(|v| v.iter().sum::<Elem>() % 2 == 0));
    }

    #[test]
    fn singleton_coordinates_match_base() {
        let s3 = corpus::s3();
        let p = PowerAlgebra::new(&s3, 1).unwrap();
        let c = generate(&p, &[vec![1], vec![3]], 100).unwrap();
        assert_eq!(c.len(), 6);
    }

    #[test]
    fn fixpoint_and_budget() {
        let z4 = corpus::cyclic(4);
        let p = PowerAlgebra::new(&z4, 1).unwrap();
        let all: Vec<Vec<Elem>> = (0..4).map(|x| vec![x]).collect();
        let c = generate(&p, &all, 100).unwrap();
        assert_eq!(c.len(), 4);
        let c = generate(&p, &[vec![1]], 2);
        assert!(matches!(c, Err(Error::ClosureBudgetExceeded { budget: 2 })));
    }

    #[test]
    fn derivations_replay() {
        let alg = corpus::quasigroup5();
        let p = PowerAlgebra::new(&alg, 3).unwrap();
        let gens = vec![vec![0, 1, 2], vec![2, 2, 4]];
        let c = generate(&p, &gens, 10_000).unwrap();
        assert_eq!(c.len(), brute_closure(&alg, 3, &gens).len());
        for i in 0..c.len() {
            if let Origin::Apply { op, args } = c.origin(i) {
                let args: Vec<&[Elem]> = args.iter().map(|&a| c.get(a)).collect();
                assert_eq!(p.apply(*op, &args), c.get(i));
            }
        }
    }

    #[test]
    fn ternary_operations_close() {
        let alg = FiniteAlgebra::from_fns("maj", 3, &[("m", 3, &|a: &[Elem]| {
            if a[0] == a[1] || a[0] == a[2] { a[0] } else if a[1] == a[2] { a[1] } else { a[0] }
        })])
        .unwrap();
        let p = PowerAlgebra::new(&alg, 3).unwrap();
        let gens = vec![vec![0, 1, 2], vec![1, 2, 0], vec![2, 0, 1]];
        let c = generate(&p, &gens, 10_000).unwrap();
        assert_eq!(c.len(), brute_closure(&alg, 3, &gens).len());
    }
}
