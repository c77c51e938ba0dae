//! Connectors between congruences, Smith commutators, groupoid recognition
//! and the direction of an affine algebra.

use std::ops::ControlFlow;
use std::sync::Arc;

use rayon::prelude::*;

use crate::algebra::{checked_pow, decode_index, product, quotient, Elem, FiniteAlgebra, Homomorphism, TupleAlgebra};
use crate::congruence::{cg_partition, Congruence};
use crate::error::{Error, Result};
use crate::maltsev_ops::TernaryOp;
use crate::partition::Partition;
use crate::power::{IncrementalClosure, PowerAlgebra};
use crate::relcalc::BinRel;

pub const DEFAULT_SEARCH_BUDGET: usize = 1_000_000;

const NONE: u32 = u32::MAX;

/// The pullback `R ×_X S`: triples `(x, y, z)` with `x R y` and `y S z`.
#[derive(Clone, Debug)]
pub struct SpanTriple {
    algebra: Arc<FiniteAlgebra>,
    r: Partition,
    s: Partition,
    triples: Vec<[Elem; 3]>,
    index: Vec<u32>,
}

impl SpanTriple {
    pub fn algebra(&self) -> &Arc<FiniteAlgebra> {
        &self.algebra
    }

    pub fn r(&self) -> &Partition {
        &self.r
    }

    pub fn s(&self) -> &Partition {
        &self.s
    }

    pub fn triples(&self) -> &[[Elem; 3]] {
        &self.triples
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn index_of(&self, x: Elem, y: Elem, z: Elem) -> Option<usize> {
        let n = self.algebra.size();
        let i = self.index[(x as usize * n + y as usize) * n + z as usize];
        (i != NONE).then_some(i as usize)
    }

    /// `{w : x S w ∧ w R z}`, ascending.
    pub fn candidates(&self, x: Elem, z: Elem) -> Vec<Elem> {
        self.algebra
            .elements()
            .filter(|&w| self.s.same_block(x, w) && self.r.same_block(w, z))
            .collect()
    }
}

pub fn build_span(x: &Arc<FiniteAlgebra>, r: &Congruence, s: &Congruence) -> Result<SpanTriple> {
    check_on(x, r)?;
    check_on(x, s)?;
    Ok(span_of_partitions(x.clone(), r.partition().clone(), s.partition().clone()))
}

fn check_on(x: &Arc<FiniteAlgebra>, c: &Congruence) -> Result<()> {
    if Arc::ptr_eq(x, c.algebra()) || **x == **c.algebra() {
        Ok(())
    } else {
        Err(Error::AlgebraMismatch)
    }
}

fn span_of_partitions(algebra: Arc<FiniteAlgebra>, r: Partition, s: Partition) -> SpanTriple {
    let n = algebra.size();
    let mut index = vec![NONE; n * n * n];
    let mut triples = Vec::new();
    let r_blocks = r.blocks();
    let s_blocks = s.blocks();
    for x in 0..n as Elem {
        for &y in &r_blocks[r.label(x) as usize] {
            for &z in &s_blocks[s.label(y) as usize] {
                index[(x as usize * n + y as usize) * n + z as usize] = triples.len() as u32;
                triples.push([x, y, z]);
            }
        }
    }
    SpanTriple {
        algebra,
        r,
        s,
        triples,
        index,
    }
}

/// `R □ S`: quadruples `(x, y, w, z)` with `x R y`, `w R z`, `x S w`,
/// `y S z`.
#[derive(Clone, Debug)]
pub struct DoubleRel {
    pub quads: Vec<[Elem; 4]>,
}

pub fn build_double(x: &Arc<FiniteAlgebra>, r: &Congruence, s: &Congruence) -> Result<DoubleRel> {
    check_on(x, r)?;
    check_on(x, s)?;
    let (r, s) = (r.partition(), s.partition());
    let mut quads = Vec::new();
    for a in x.elements() {
        for b in x.elements().filter(|&b| r.same_block(a, b)) {
            for w in x.elements().filter(|&w| s.same_block(a, w)) {
                for z in x.elements().filter(|&z| r.same_block(w, z) && s.same_block(b, z)) {
                    quads.push([a, b, w, z]);
                }
            }
        }
    }
    Ok(DoubleRel { quads })
}

/// The map `(x, y, w, z) ↦ (x, y, z)` from `R □ S` to `R ×_X S`.
#[derive(Clone, Debug)]
pub struct AlphaReport {
    pub map: Vec<usize>,
    pub injective: bool,
    pub surjective: bool,
}

pub fn alpha(d: &DoubleRel, span: &SpanTriple) -> AlphaReport {
    let map: Vec<usize> = d
        .quads
        .iter()
        .map(|q| span.index_of(q[0], q[1], q[3]).expect("image lies in the pullback"))
        .collect();
    let mut hits = vec![0usize; span.len()];
    for &t in &map {
        hits[t] += 1;
    }
    AlphaReport {
        injective: hits.iter().all(|&h| h <= 1),
        surjective: hits.iter().all(|&h| h >= 1),
        map,
    }
}

/// A connector: `p` on the triples of a span, stored in triple order.
#[derive(Clone, Debug)]
pub struct Connector {
    span: SpanTriple,
    values: Vec<Elem>,
}

impl Connector {
    pub fn span(&self) -> &SpanTriple {
        &self.span
    }

    pub fn values(&self) -> &[Elem] {
        &self.values
    }

    /// `p(x, y, z)`, if `(x, y, z)` is in the span.
    pub fn at(&self, x: Elem, y: Elem, z: Elem) -> Option<Elem> {
        self.span.index_of(x, y, z).map(|i| self.values[i])
    }

    /// Rows `[x, y, z, p(x,y,z)]`.
    pub fn table(&self) -> Vec<[Elem; 4]> {
        self.span
            .triples
            .iter()
            .zip(&self.values)
            .map(|(t, &v)| [t[0], t[1], t[2], v])
            .collect()
    }

    /// The ternary operation on `X`, when the span is all of `X³`.
    pub fn as_ternary(&self) -> Option<TernaryOp> {
        let n = self.span.algebra.size();
        (self.values.len() == n * n * n).then(|| TernaryOp::new(n, self.values.clone()).expect("values in range"))
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "r": self.span.r.to_string(),
            "s": self.span.s.to_string(),
            "table": self.table(),
        })
    }
}

/// Checks every connector axiom; `Err` carries the first failure.
pub fn verify_connector(c: &Connector) -> Result<(), String> {
    let span = &c.span;
    let alg = &span.algebra;
    let (r, s) = (&span.r, &span.s);
    if c.values.len() != span.len() {
        return Err("value count differs from triple count".into());
    }
    for (t, &p) in span.triples.iter().zip(&c.values) {
        let [x, y, z] = *t;
        if !s.same_block(x, p) || !r.same_block(p, z) {
            return Err(format!("p({x},{y},{z}) = {p} is not in the double relation"));
        }
        if x == y && p != z {
            return Err(format!("p({x},{x},{z}) = {p}, expected {z}"));
        }
        if y == z && p != x {
            return Err(format!("p({x},{y},{y}) = {p}, expected {x}"));
        }
    }
    let at = |x, y, z| c.at(x, y, z).expect("triple in span");
    for t in &span.triples {
        let [x, y, z] = *t;
        let p = at(x, y, z);
        // left: p(p(x,y,z), z, w) = p(x, y, w) for z S w
        for w in alg.elements().filter(|&w| s.same_block(z, w)) {
            if at(p, z, w) != at(x, y, w) {
                return Err(format!("left associativity fails at ({x},{y},{z},{w})"));
            }
        }
        // right: p(x, y, p(y, z, w)) = p(x, z, w) when y R z
        if r.same_block(y, z) {
            for w in alg.elements().filter(|&w| s.same_block(z, w)) {
                if at(x, y, at(y, z, w)) != at(x, z, w) {
                    return Err(format!("right associativity fails at ({x},{y},{z},{w})"));
                }
            }
        }
    }
    // homomorphism from the triples subalgebra of X³
    let m = span.len();
    let mut idx = vec![0 as Elem; 8];
    for op in 0..alg.op_count() {
        let k = alg.arity(op);
        let total = checked_pow(m, k).ok_or("span too large for an exhaustive check")?;
        let mut args = [vec![0; k], vec![0; k], vec![0; k]];
        let mut vals = vec![0; k];
        if idx.len() < k {
            idx.resize(k, 0);
        }
        for i in 0..total {
            decode_index(m.max(1), k, i, &mut idx);
            for j in 0..k {
                let t = span.triples[idx[j] as usize];
                for (coord, arg) in args.iter_mut().enumerate() {
                    arg[j] = t[coord];
                }
                vals[j] = c.values[idx[j] as usize];
            }
            let image = [alg.apply(op, &args[0]), alg.apply(op, &args[1]), alg.apply(op, &args[2])];
            let Some(pi) = c.at(image[0], image[1], image[2]) else {
                return Err("triples are not closed under the operations".into());
            };
            if pi != alg.apply(op, &vals) {
                return Err(format!("p does not commute with `{}`", alg.symbol(op)));
            }
        }
    }
    Ok(())
}

/// Cheap associativity check used inside the search; totality and the
/// homomorphism property hold by construction there.
fn associative(span: &SpanTriple, values: &[u32]) -> bool {
    let alg = &span.algebra;
    let at = |x: Elem, y: Elem, z: Elem| values[span.index_of(x, y, z).expect("triple in span")];
    for t in &span.triples {
        let [x, y, z] = *t;
        let p = at(x, y, z);
        for w in alg.elements().filter(|&w| span.s.same_block(z, w)) {
            if at(p, z, w) != at(x, y, w) {
                return false;
            }
            if span.r.same_block(x, z) && at(x, y, at(y, z, w)) != at(x, z, w) {
                return false;
            }
        }
    }
    true
}

/// Finds the connector on `span`, if any. The graph of `p` is generated in
/// `X⁴` by the quadruples forced by `p(x,x,z) = z` and `p(x,z,z) = x`; a
/// triple with two forced values rules out any connector. Triples left
/// uncovered are assigned by backtracking in lexicographic order with
/// candidates ascending. Two distinct solutions give `NonMaltsevAmbiguity`.
pub fn find_connector(span: &SpanTriple, budget: usize) -> Result<Option<Connector>> {
    let alg = span.algebra.clone();
    let ambient = PowerAlgebra::new(&alg, 4)?;
    let mut state = Search {
        span,
        values: vec![NONE; span.len()],
        assigned: Vec::new(),
        steps: 0,
        budget,
        solutions: Vec::new(),
    };
    let mut closure = IncrementalClosure::new(ambient, span.len() + 1)?;
    let mut gens = Vec::new();
    for x in alg.elements() {
        for z in alg.elements() {
            if span.s.same_block(x, z) {
                gens.push([x, x, z, z]);
            }
            if span.r.same_block(x, z) {
                gens.push([x, z, z, x]);
            }
        }
    }
    let mut conflict = false;
    for g in &gens {
        if closure
            .add_generator(g, &mut |_, v| state.record(v, &mut conflict))?
            .is_break()
        {
            return Ok(None);
        }
    }
    state.explore(&mut closure, 0)?;
    match state.solutions.len() {
        0 => Ok(None),
        1 => Ok(Some(Connector {
            span: span.clone(),
            values: state.solutions.pop().expect("one solution"),
        })),
        _ => Err(Error::NonMaltsevAmbiguity),
    }
}

struct Search<'s> {
    span: &'s SpanTriple,
    values: Vec<u32>,
    assigned: Vec<usize>,
    steps: usize,
    budget: usize,
    solutions: Vec<Vec<Elem>>,
}

impl Search<'_> {
    fn record(&mut self, v: &[Elem], conflict: &mut bool) -> ControlFlow<()> {
        let t = self.span.index_of(v[0], v[1], v[2]).expect("closure stays in the span");
        match self.values[t] {
            NONE => {
                self.values[t] = v[3];
                self.assigned.push(t);
                ControlFlow::Continue(())
            }
            old if old == v[3] => ControlFlow::Continue(()),
            _ => {
                *conflict = true;
                ControlFlow::Break(())
            }
        }
    }

    fn undo(&mut self, mark: usize) {
        for t in self.assigned.drain(mark..) {
            self.values[t] = NONE;
        }
    }

    fn explore(&mut self, closure: &mut IncrementalClosure<'_>, from: usize) -> Result<()> {
        self.steps += 1;
        if self.steps > self.budget {
            return Err(Error::SearchBudgetExceeded { budget: self.budget });
        }
        let mut conflict = false;
        if closure.saturate(&mut |_, v| self.record(v, &mut conflict))?.is_break() {
            return Ok(());
        }
        let Some(t) = (from..self.values.len()).find(|&t| self.values[t] == NONE) else {
            if associative(self.span, &self.values) {
                self.solutions.push(self.values.clone());
            }
            return Ok(());
        };
        let [x, y, z] = self.span.triples[t];
        for w in self.span.candidates(x, z) {
            if self.solutions.len() >= 2 {
                return Ok(());
            }
            let len = closure.len();
            let mark = self.assigned.len();
            let mut conflict = false;
            let step = closure.add_generator(&[x, y, z, w], &mut |_, v| self.record(v, &mut conflict))?;
            if step.is_continue() {
                self.explore(closure, t + 1)?;
            }
            closure.rollback(len);
            self.undo(mark);
        }
        Ok(())
    }
}

/// Does a connector exist between `r` and `s`?
pub fn centralize(x: &Arc<FiniteAlgebra>, r: &Congruence, s: &Congruence, budget: usize) -> Result<bool> {
    Ok(find_connector(&build_span(x, r, s)?, budget)?.is_some())
}

/// `(R ∨ T)/T` as a partition of `X/T`.
fn image_in_quotient(r: &Partition, t: &Partition) -> Partition {
    let joined = r.join(t);
    let keys: Vec<u32> = (0..t.block_count())
        .map(|b| joined.label(t.representatives()[b]))
        .collect();
    Partition::from_keys(&keys)
}

/// The least `T` in `lattice` such that the images of `r` and `s` in
/// `X/T` admit a connector. `lattice` must be the full congruence lattice.
pub fn smith_commutator_in(
    x: &Arc<FiniteAlgebra>,
    lattice: &[Congruence],
    r: &Congruence,
    s: &Congruence,
    budget: usize,
) -> Result<Congruence> {
    check_on(x, r)?;
    check_on(x, s)?;
    let verdicts: Vec<Result<bool>> = lattice
        .par_iter()
        .map(|t| {
            let (q, _) = quotient(x, t.partition())?;
            let rq = image_in_quotient(r.partition(), t.partition());
            let sq = image_in_quotient(s.partition(), t.partition());
            let span = span_of_partitions(q, rq, sq);
            Ok(find_connector(&span, budget)?.is_some())
        })
        .collect();
    let mut passing = Vec::new();
    for (t, v) in lattice.iter().zip(verdicts) {
        if v? {
            passing.push(t);
        }
    }
    passing
        .iter()
        .find(|t| passing.iter().all(|u| t.leq(u)))
        .map(|t| (*t).clone())
        .ok_or(Error::NoLeastElement)
}

/// [`smith_commutator_in`] after checking that `X` has a Mal'tsev term.
pub fn smith_commutator(x: &Arc<FiniteAlgebra>, r: &Congruence, s: &Congruence, budget: usize) -> Result<Congruence> {
    require_maltsev(x)?;
    let lattice = crate::congruence::all_congruences(x, crate::congruence::DEFAULT_LATTICE_BUDGET)?;
    smith_commutator_in(x, &lattice, r, s, budget)
}

fn require_maltsev(x: &FiniteAlgebra) -> Result<()> {
    match crate::term_search::maltsev_term(x, crate::power::DEFAULT_CLOSURE_BUDGET)? {
        Some(_) => Ok(()),
        None => Err(Error::NotMaltsev(x.name().to_string())),
    }
}

/// Commutator through the congruence `Δ_{R,S}` of the algebra `R ⊆ X²`
/// generated by the pairs `((a,a),(b,b))` with `a S b`: `[R,S]` is
/// generated by the `(y,z)` with `((y,y),(y,z)) ∈ Δ_{R,S}`.
pub fn commutator_via_delta(x: &Arc<FiniteAlgebra>, r: &Congruence, s: &Congruence) -> Result<Congruence> {
    check_on(x, r)?;
    check_on(x, s)?;
    let pairs: Vec<Vec<Elem>> = r.rel().pairs().map(|(a, b)| vec![a, b]).collect();
    let ralg = TupleAlgebra::new(format!("{}[R]", x.name()), x, pairs)?;
    let gens: Vec<(Elem, Elem)> = s
        .rel()
        .pairs()
        .map(|(a, b)| {
            (
                ralg.index_of(&[a, a]).expect("diagonal in R"),
                ralg.index_of(&[b, b]).expect("diagonal in R"),
            )
        })
        .collect();
    let delta = cg_partition(&ralg.algebra, &gens)?;
    let mut comm = Vec::new();
    for (y, z) in r.rel().pairs() {
        let a = ralg.index_of(&[y, y]).expect("diagonal in R");
        let b = ralg.index_of(&[y, z]).expect("pair in R");
        if delta.same_block(a, b) {
            comm.push((y, z));
        }
    }
    crate::congruence::cg(x, &comm)
}

/// `[R, R] = Δ`.
pub fn is_abelian_rel(x: &Arc<FiniteAlgebra>, r: &Congruence, budget: usize) -> Result<bool> {
    Ok(smith_commutator(x, r, r, budget)?.is_delta())
}

/// `[R, ∇] = Δ`.
pub fn is_central_rel(x: &Arc<FiniteAlgebra>, r: &Congruence, budget: usize) -> Result<bool> {
    Ok(smith_commutator(x, r, &Congruence::nabla(x.clone()), budget)?.is_delta())
}

/// `[∇, ∇] = Δ`.
pub fn is_affine(x: &Arc<FiniteAlgebra>, budget: usize) -> Result<bool> {
    let nabla = Congruence::nabla(x.clone());
    Ok(smith_commutator(x, &nabla, &nabla, budget)?.is_delta())
}

/// `d₀, d₁ : X₁ → X₀` with a common section `s₀`.
#[derive(Clone, Debug)]
pub struct ReflexiveGraph {
    pub d0: Homomorphism,
    pub d1: Homomorphism,
    pub s0: Homomorphism,
}

impl ReflexiveGraph {
    pub fn new(d0: Homomorphism, d1: Homomorphism, s0: Homomorphism) -> Result<Self> {
        let n0 = s0.dom.size();
        let ok_shapes = d0.dom.size() == s0.cod.size()
            && d1.dom.size() == s0.cod.size()
            && d0.cod.size() == n0
            && d1.cod.size() == n0;
        if !ok_shapes {
            return Err(Error::DimensionMismatch("reflexive graph maps do not line up".into()));
        }
        for h in [&d0, &d1, &s0] {
            if !h.is_homomorphism() {
                return Err(Error::Validation("reflexive graph map is not a homomorphism".into()));
            }
        }
        for x in 0..n0 as Elem {
            if d0.apply(s0.apply(x)) != x || d1.apply(s0.apply(x)) != x {
                return Err(Error::Validation(format!("d∘s0 is not the identity at {x}")));
            }
        }
        Ok(ReflexiveGraph { d0, d1, s0 })
    }

    pub fn arrows(&self) -> &Arc<FiniteAlgebra> {
        &self.d0.dom
    }
}

/// The connector between `Eq[d₀]` and `Eq[d₁]`, which is the same thing
/// as a groupoid structure on the graph.
pub fn graph_is_groupoid(g: &ReflexiveGraph, budget: usize) -> Result<Option<Connector>> {
    let x1 = g.arrows().clone();
    let r = Congruence::new(x1.clone(), g.d0.kernel())?;
    let s = Congruence::new(x1.clone(), g.d1.kernel())?;
    find_connector(&build_span(&x1, &r, &s)?, budget)
}

/// Pushes a connector forward along a surjective homomorphism `g`, giving
/// a connector between `g(R)` and `g(S)`.
pub fn push_forward(c: &Connector, g: &Homomorphism) -> Result<Connector> {
    if let Some(m) = crate::algebra::first_missed(&g.map, g.cod.size()) {
        return Err(Error::NotSurjective(m as u64));
    }
    let span = &c.span;
    let n = g.cod.size();
    let rel_r = crate::relcalc::image_relation(&g.map, n, &BinRel::from_partition(&span.r))?;
    let rel_s = crate::relcalc::image_relation(&g.map, n, &BinRel::from_partition(&span.s))?;
    let (Some(r), Some(s)) = (rel_r.to_partition(), rel_s.to_partition()) else {
        return Err(Error::InternalAxiomFailure("image relation is not an equivalence".into()));
    };
    let target = span_of_partitions(g.cod.clone(), r, s);
    let mut values = vec![NONE; target.len()];
    for (t, &p) in span.triples.iter().zip(&c.values) {
        let i = target
            .index_of(g.apply(t[0]), g.apply(t[1]), g.apply(t[2]))
            .expect("image triple in the image span");
        let v = g.apply(p);
        if values[i] != NONE && values[i] != v {
            return Err(Error::InternalAxiomFailure("pushed-forward connector is not well defined".into()));
        }
        values[i] = v;
    }
    if values.contains(&NONE) {
        return Err(Error::InternalAxiomFailure("pushed-forward connector is not total".into()));
    }
    let out = Connector { span: target, values };
    verify_connector(&out).map_err(Error::InternalAxiomFailure)?;
    Ok(out)
}

/// Coordinatewise connector on `X × X̄` between `R × R̄` and `S × S̄`.
pub fn product_connector(a: &Connector, b: &Connector) -> Result<Connector> {
    let (xa, xb) = (&a.span.algebra, &b.span.algebra);
    let prod = Arc::new(product(xa, xb)?);
    let nb = xb.size() as Elem;
    let split = |v: Elem| (v / nb, v % nb);
    let keys = |pa: &Partition, pb: &Partition| -> Partition {
        let keys: Vec<(u32, u32)> = prod
            .elements()
            .map(|v| {
                let (u, w) = split(v);
                (pa.label(u), pb.label(w))
            })
            .collect();
        Partition::from_keys(&keys)
    };
    let r = keys(&a.span.r, &b.span.r);
    let s = keys(&a.span.s, &b.span.s);
    let span = span_of_partitions(prod, r, s);
    let values = span
        .triples
        .iter()
        .map(|t| {
            let (x1, x2) = split(t[0]);
            let (y1, y2) = split(t[1]);
            let (z1, z2) = split(t[2]);
            let p1 = a.at(x1, y1, z1).expect("component triple");
            let p2 = b.at(x2, y2, z2).expect("component triple");
            p1 * nb + p2
        })
        .collect();
    let out = Connector { span, values };
    verify_connector(&out).map_err(Error::InternalAxiomFailure)?;
    Ok(out)
}

/// Is `p` a homomorphism `X³ → X`?
pub fn is_internal_operation(x: &FiniteAlgebra, p: &TernaryOp) -> bool {
    if p.size() != x.size() {
        return false;
    }
    let n = x.size();
    for op in 0..x.op_count() {
        let k = x.arity(op);
        let Some(total) = checked_pow(n, 3 * k) else {
            return false;
        };
        let mut m = vec![0; 3 * k];
        let mut rows = vec![0; k];
        for i in 0..total {
            decode_index(n, 3 * k, i, &mut m);
            // m holds three argument tuples a, b, c of length k
            for j in 0..k {
                rows[j] = p.at(m[j], m[k + j], m[2 * k + j]);
            }
            let lhs = p.at(
                x.apply(op, &m[..k]),
                x.apply(op, &m[k..2 * k]),
                x.apply(op, &m[2 * k..]),
            );
            if lhs != x.apply(op, &rows) {
                return false;
            }
        }
    }
    true
}

/// The Chasles relation on `X²` (pairs encoded `x·n + y`):
/// `(x,y) Ch (x',y')` iff `y = p(x,x',y')`.
pub fn chasles(x: &Arc<FiniteAlgebra>, p: &TernaryOp) -> Result<Congruence> {
    if !is_internal_operation(x, p) {
        return Err(Error::NotInternalOperation);
    }
    if !p.is_maltsev() {
        return Err(Error::NotMaltsevOp);
    }
    let n = x.size();
    let x2 = Arc::new(product(x, x)?);
    let mut rel = BinRel::empty(n * n, n * n);
    for a in 0..n as Elem {
        for b in 0..n as Elem {
            for c in 0..n as Elem {
                for d in 0..n as Elem {
                    if b == p.at(a, c, d) {
                        rel.insert(a * n as Elem + b, c * n as Elem + d);
                    }
                }
            }
        }
    }
    let part = rel
        .to_partition()
        .ok_or_else(|| Error::InternalAxiomFailure("Chasles relation is not an equivalence".into()))?;
    Congruence::new(x2, part).map_err(|_| Error::InternalAxiomFailure("Chasles relation is not compatible".into()))
}

/// `d(X) = X²/Ch_p` with its abelian group structure and the quotient map.
#[derive(Clone, Debug)]
pub struct Direction {
    pub group: Arc<FiniteAlgebra>,
    /// `q[x·n + y]` is the class of `(x, y)`.
    pub q: Vec<Elem>,
    pub chasles: Congruence,
}

impl Direction {
    pub fn class(&self, n: usize, x: Elem, y: Elem) -> Elem {
        self.q[x as usize * n + y as usize]
    }
}

pub fn direction(x: &Arc<FiniteAlgebra>, p: &TernaryOp) -> Result<Direction> {
    let n = x.size();
    if n == 0 {
        return Err(Error::EmptyCarrier);
    }
    let ch = chasles(x, p)?;
    let part = ch.partition();
    let q: Vec<Elem> = part.labels().to_vec();
    let m = part.block_count();
    let label = |a: Elem, b: Elem| q[a as usize * n + b as usize];
    let unit = label(0, 0);
    if (0..n as Elem).any(|a| label(a, a) != unit) {
        return Err(Error::GroupAxiomFailure("diagonal is not a single class".into()));
    }
    let reps = part.representatives();
    let mut add = vec![0; m * m];
    let mut neg = vec![0; m];
    for k1 in 0..m {
        let r = reps[k1];
        let (a, b) = (r / n as Elem, r % n as Elem);
        neg[k1] = label(b, a);
        for k2 in 0..m {
            let c = (0..n as Elem)
                .find(|&c| label(b, c) as usize == k2)
                .ok_or_else(|| Error::GroupAxiomFailure("class has no representative from a fixed start".into()))?;
            add[k1 * m + k2] = label(a, c);
        }
    }
    // sums must not depend on the representatives chosen
    for a in 0..n as Elem {
        for b in 0..n as Elem {
            for c in 0..n as Elem {
                let (k1, k2) = (label(a, b) as usize, label(b, c) as usize);
                if add[k1 * m + k2] != label(a, c) {
                    return Err(Error::GroupAxiomFailure("sum depends on representatives".into()));
                }
            }
        }
    }
    let g = FiniteAlgebra::new(
        format!("d({})", x.name()),
        m,
        vec![("+", 2, add), ("-", 1, neg), ("0", 0, vec![unit])],
    )?;
    check_abelian_group(&g)?;
    Ok(Direction {
        group: Arc::new(g),
        q,
        chasles: ch,
    })
}

/// Checks the abelian group axioms for ops `+`, `-`, `0`.
pub fn check_abelian_group(g: &FiniteAlgebra) -> Result<()> {
    let plus = g.op_index("+")?;
    let neg = g.op_index("-")?;
    let zero = g.apply(g.op_index("0")?, &[]);
    let add = |a, b| g.apply2(plus, a, b);
    for a in g.elements() {
        if add(a, zero) != a {
            return Err(Error::GroupAxiomFailure("unit".into()));
        }
        if add(a, g.apply(neg, &[a])) != zero {
            return Err(Error::GroupAxiomFailure("inverse".into()));
        }
        for b in g.elements() {
            if add(a, b) != add(b, a) {
                return Err(Error::GroupAxiomFailure("commutativity".into()));
            }
            for c in g.elements() {
                if add(add(a, b), c) != add(a, add(b, c)) {
                    return Err(Error::GroupAxiomFailure("associativity".into()));
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    const B: usize = DEFAULT_SEARCH_BUDGET;

    fn arc(a: FiniteAlgebra) -> Arc<FiniteAlgebra> {
        Arc::new(a)
    }

    #[test]
    fn span_sizes() {
        let z4 = arc(corpus::cyclic(4));
        let r = Congruence::parse(z4.clone(), "0,2|1,3").unwrap();
        let nabla = Congruence::nabla(z4.clone());
        assert_eq!(build_span(&z4, &r, &nabla).unwrap().len(), 32);
        let delta = Congruence::delta(z4.clone());
        let span = build_span(&z4, &delta, &r).unwrap();
        let d = build_double(&z4, &delta, &r).unwrap();
        let a = alpha(&d, &span);
        assert!(a.injective && a.surjective);
    }

    #[test]
    fn product_projections_have_the_forced_connector() {
        let v = arc(corpus::z2xz2());
        let r = Congruence::parse(v.clone(), "0,1|2,3").unwrap();
        let s = Congruence::parse(v.clone(), "0,2|1,3").unwrap();
        let c = find_connector(&build_span(&v, &r, &s).unwrap(), B).unwrap().unwrap();
        verify_connector(&c).unwrap();
        // elements are 2a + b; p takes a from z and b from x
        for t in c.span().triples() {
            let [x, _, z] = *t;
            assert_eq!(c.at(t[0], t[1], t[2]).unwrap(), (z / 2) * 2 + x % 2);
        }
    }

    #[test]
    fn z4_subgroup_is_central() {
        let z4 = arc(corpus::cyclic(4));
        let r = Congruence::parse(z4.clone(), "0,2|1,3").unwrap();
        let c = find_connector(&build_span(&z4, &r, &Congruence::nabla(z4.clone())).unwrap(), B)
            .unwrap()
            .unwrap();
        for t in c.span().triples() {
            assert_eq!(c.at(t[0], t[1], t[2]).unwrap(), (t[0] + 4 - t[1] + t[2]) % 4);
        }
    }

    #[test]
    fn s3_rotation_subgroup_is_not_central() {
        let s3 = arc(corpus::s3());
        let a3 = Congruence::parse(s3.clone(), "0,3,4|1,2,5").unwrap();
        let span = build_span(&s3, &a3, &Congruence::nabla(s3.clone())).unwrap();
        assert!(find_connector(&span, B).unwrap().is_none());
        let nabla = Congruence::nabla(s3.clone());
        assert_eq!(smith_commutator(&s3, &nabla, &nabla, B).unwrap(), a3);
        assert_eq!(commutator_via_delta(&s3, &nabla, &nabla).unwrap(), a3);
    }

    #[test]
    fn abelian_groups_are_affine() {
        let z4 = arc(corpus::cyclic(4));
        assert!(is_affine(&z4, B).unwrap());
        assert!(!is_affine(&arc(corpus::s3()), B).unwrap());
        let delta = Congruence::delta(z4.clone());
        assert!(is_abelian_rel(&z4, &delta, B).unwrap());
    }

    #[test]
    fn semilattice_is_rejected_by_commutator() {
        let sl = arc(corpus::meet_semilattice(2));
        let n = Congruence::nabla(sl.clone());
        assert!(matches!(smith_commutator(&sl, &n, &n, B), Err(Error::NotMaltsev(_))));
    }

    #[test]
    fn groupoids() {
        let z2 = arc(corpus::cyclic(2));
        let v = arc(corpus::z2xz2());
        let p0 = Homomorphism::checked(v.clone(), z2.clone(), vec![0, 0, 1, 1]).unwrap();
        let p1 = Homomorphism::checked(v.clone(), z2.clone(), vec![0, 1, 0, 1]).unwrap();
        let diag = Homomorphism::checked(z2.clone(), v.clone(), vec![0, 3]).unwrap();
        let g = ReflexiveGraph::new(p0, p1, diag).unwrap();
        assert!(graph_is_groupoid(&g, B).unwrap().is_some());
    }

    #[test]
    fn chasles_on_z5() {
        let z5 = arc(corpus::cyclic(5));
        let p = TernaryOp::from_fn(5, |x, y, z| (x + 5 - y + z) % 5);
        let ch = chasles(&z5, &p).unwrap();
        assert!(ch.related(2, 5 + 3));
        assert_eq!(ch.partition().block_count(), 5);
        let d = direction(&z5, &p).unwrap();
        assert_eq!(d.group.size(), 5);
        let bad = TernaryOp::from_fn(5, |x, _, _| x);
        assert!(matches!(chasles(&z5, &bad), Err(Error::NotMaltsevOp)));
        let s3 = arc(corpus::s3());
        let xyz = TernaryOp::from_fn(6, |x, y, z| {
            let inv = s3.eval("inv", &[y]).unwrap();
            let t = s3.eval("*", &[x, inv]).unwrap();
            s3.eval("*", &[t, z]).unwrap()
        });
        assert!(matches!(chasles(&s3, &xyz), Err(Error::NotInternalOperation)));
    }
}
