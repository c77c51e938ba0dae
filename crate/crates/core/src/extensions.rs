//! Finite group extensions with abelian kernel: induced actions, Baer sums
//! and inverses, equivalence search and a 2-cocycle oracle.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{Elem, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::partition::Partition;

/// Limit on cochain enumeration in the cocycle oracle.
pub const DEFAULT_COCHAIN_BUDGET: usize = 1 << 22;

/// A group presented by an algebra with one binary, one unary and one
/// nullary operation (`*`, `inv`, `e` or `+`, `-`, `0`).
#[derive(Clone, Debug)]
pub struct GroupView {
    alg: Arc<FiniteAlgebra>,
    mul: usize,
    inv: usize,
    unit: Elem,
}

impl GroupView {
    pub fn new(alg: Arc<FiniteAlgebra>) -> Result<Self> {
        let find = |k: usize| {
            (0..alg.op_count())
                .find(|&op| alg.arity(op) == k)
                .ok_or_else(|| Error::GroupAxiomFailure(format!("`{}` has no operation of arity {k}", alg.name())))
        };
        let (mul, inv, e) = (find(2)?, find(1)?, find(0)?);
        let unit = alg.apply(e, &[]);
        let g = GroupView { alg, mul, inv, unit };
        g.check_axioms()?;
        Ok(g)
    }

    /// Builds a group with ops `*`, `inv`, `e` from a multiplication table.
    pub fn from_table(name: impl Into<String>, n: usize, mul: Vec<Elem>) -> Result<Self> {
        let unit = (0..n as Elem)
            .find(|&e| (0..n).all(|x| mul[e as usize * n + x] as usize == x && mul[x * n + e as usize] as usize == x))
            .ok_or_else(|| Error::GroupAxiomFailure("no unit".into()))?;
        let inv = (0..n)
            .map(|x| {
                (0..n as Elem)
                    .find(|&y| mul[x * n + y as usize] == unit)
                    .ok_or_else(|| Error::GroupAxiomFailure(format!("{x} has no inverse")))
            })
            .collect::<Result<Vec<_>>>()?;
        let alg = FiniteAlgebra::new(name, n, vec![("*", 2, mul), ("inv", 1, inv), ("e", 0, vec![unit])])?;
        GroupView::new(Arc::new(alg))
    }

    fn check_axioms(&self) -> Result<()> {
        let e = self.unit;
        for a in self.elements() {
            if self.mul(a, e) != a || self.mul(e, a) != a {
                return Err(Error::GroupAxiomFailure(format!("unit law fails at {a}")));
            }
            if self.mul(a, self.inv(a)) != e {
                return Err(Error::GroupAxiomFailure(format!("inverse law fails at {a}")));
            }
            for b in self.elements() {
                let ab = self.mul(a, b);
                for c in self.elements() {
                    if self.mul(ab, c) != self.mul(a, self.mul(b, c)) {
                        return Err(Error::GroupAxiomFailure(format!("associativity fails at ({a},{b},{c})")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn algebra(&self) -> &Arc<FiniteAlgebra> {
        &self.alg
    }

    pub fn size(&self) -> usize {
        self.alg.size()
    }

    pub fn elements(&self) -> std::ops::Range<Elem> {
        0..self.size() as Elem
    }

    #[inline]
    pub fn mul(&self, a: Elem, b: Elem) -> Elem {
        self.alg.apply2(self.mul, a, b)
    }

    #[inline]
    pub fn inv(&self, a: Elem) -> Elem {
        self.alg.apply(self.inv, &[a])
    }

    pub fn unit(&self) -> Elem {
        self.unit
    }

    pub fn mul_table(&self) -> &[Elem] {
        self.alg.table(self.mul)
    }

    pub fn is_abelian(&self) -> bool {
        self.elements()
            .all(|a| self.elements().all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    /// Same carrier and the same multiplication table.
    pub fn same_group(&self, other: &GroupView) -> bool {
        self.size() == other.size() && self.mul_table() == other.mul_table()
    }

    /// Does `map` preserve multiplication into `cod`?
    pub fn is_hom_to(&self, cod: &GroupView, map: &[Elem]) -> bool {
        map.len() == self.size()
            && map.iter().all(|&v| (v as usize) < cod.size())
            && self.elements().all(|a| {
                self.elements()
                    .all(|b| map[self.mul(a, b) as usize] == cod.mul(map[a as usize], map[b as usize]))
            })
    }
}

/// `1 → A → X → Q → 1` with `A` abelian.
#[derive(Clone, Debug)]
pub struct Extension {
    a: GroupView,
    x: GroupView,
    q: GroupView,
    iota: Vec<Elem>,
    pi: Vec<Elem>,
    iota_inv: Vec<Option<Elem>>,
}

impl Extension {
    pub fn new(a: Arc<FiniteAlgebra>, x: Arc<FiniteAlgebra>, q: Arc<FiniteAlgebra>, iota: Vec<Elem>, pi: Vec<Elem>) -> Result<Self> {
        Self::from_views(GroupView::new(a)?, GroupView::new(x)?, GroupView::new(q)?, iota, pi)
    }

    pub fn from_views(a: GroupView, x: GroupView, q: GroupView, iota: Vec<Elem>, pi: Vec<Elem>) -> Result<Self> {
        let bad = |m: &str| Err(Error::Validation(m.to_string()));
        if !a.is_abelian() {
            return bad("kernel group is not abelian");
        }
        if !a.is_hom_to(&x, &iota) {
            return bad("iota is not a group homomorphism");
        }
        if !x.is_hom_to(&q, &pi) {
            return bad("pi is not a group homomorphism");
        }
        let mut iota_inv = vec![None; x.size()];
        for (i, &v) in iota.iter().enumerate() {
            if iota_inv[v as usize].replace(i as Elem).is_some() {
                return bad("iota is not injective");
            }
        }
        if !crate::algebra::is_surjective(&pi, q.size()) {
            return bad("pi is not surjective");
        }
        for t in x.elements() {
            if (pi[t as usize] == q.unit()) != iota_inv[t as usize].is_some() {
                return bad("image of iota differs from the kernel of pi");
            }
        }
        Ok(Extension {
            a,
            x,
            q,
            iota,
            pi,
            iota_inv,
        })
    }

    pub fn a(&self) -> &GroupView {
        &self.a
    }

    pub fn x(&self) -> &GroupView {
        &self.x
    }

    pub fn q(&self) -> &GroupView {
        &self.q
    }

    pub fn iota(&self) -> &[Elem] {
        &self.iota
    }

    pub fn pi(&self) -> &[Elem] {
        &self.pi
    }

    /// The unique `a` with `iota(a) = x⁻¹·t`.
    pub fn vect(&self, x: Elem, t: Elem) -> Result<Elem> {
        if self.pi[x as usize] != self.pi[t as usize] {
            return Err(Error::DifferentFibers(x as u64, t as u64));
        }
        Ok(self.iota_inv[self.x.mul(self.x.inv(x), t) as usize].expect("same fibre"))
    }

    /// Least element of each fibre, with the unit lifting to the unit.
    pub fn section(&self) -> Vec<Elem> {
        let mut s = vec![Elem::MAX; self.q.size()];
        for t in self.x.elements().rev() {
            s[self.pi[t as usize] as usize] = t;
        }
        s[self.q.unit() as usize] = self.x.unit();
        s
    }

    /// The fibre `pi⁻¹(q)`, ascending.
    pub fn fibre(&self, q: Elem) -> Vec<Elem> {
        self.x.elements().filter(|&t| self.pi[t as usize] == q).collect()
    }
}

/// A left action of `Q` on `A` by automorphisms; `table[q·|A| + a] = q·a`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Action {
    pub q_size: usize,
    pub a_size: usize,
    pub table: Vec<Elem>,
}

impl Action {
    pub fn trivial(q: &GroupView, a: &GroupView) -> Self {
        Action {
            q_size: q.size(),
            a_size: a.size(),
            table: q.elements().flat_map(|_| a.elements()).collect(),
        }
    }

    pub fn new(q: &GroupView, a: &GroupView, table: Vec<Elem>) -> Result<Self> {
        let act = Action {
            q_size: q.size(),
            a_size: a.size(),
            table,
        };
        act.validate(q, a)?;
        Ok(act)
    }

    #[inline]
    pub fn apply(&self, q: Elem, a: Elem) -> Elem {
        self.table[q as usize * self.a_size + a as usize]
    }

    pub fn is_trivial(&self) -> bool {
        self.table.iter().enumerate().all(|(i, &v)| v as usize == i % self.a_size)
    }

    pub fn validate(&self, q: &GroupView, a: &GroupView) -> Result<()> {
        let bad = |m: String| Err(Error::Validation(m));
        if self.q_size != q.size() || self.a_size != a.size() || self.table.len() != q.size() * a.size() {
            return bad("action table has the wrong shape".into());
        }
        if self.table.iter().any(|&v| v as usize >= a.size()) {
            return bad("action table entry out of range".into());
        }
        for g in q.elements() {
            let row = &self.table[g as usize * self.a_size..][..self.a_size];
            if !a.is_hom_to(a, row) || !crate::algebra::is_surjective(row, a.size()) {
                return bad(format!("{g} does not act by an automorphism"));
            }
        }
        if (0..a.size() as Elem).any(|x| self.apply(q.unit(), x) != x) {
            return bad("the unit does not act trivially".into());
        }
        for g in q.elements() {
            for h in q.elements() {
                for x in a.elements() {
                    if self.apply(g, self.apply(h, x)) != self.apply(q.mul(g, h), x) {
                        return bad(format!("action is not compatible with the product at ({g},{h})"));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<&[Elem]> = self.table.chunks(self.a_size.max(1)).collect();
        serde_json::json!({"format": 1, "table": rows})
    }
}

/// `q·a = iota⁻¹(s · iota(a) · s⁻¹)` for any lift `s` of `q`.
pub fn action_of(e: &Extension) -> Result<Action> {
    let (na, nq) = (e.a.size(), e.q.size());
    let mut table = vec![Elem::MAX; nq * na];
    for s in e.x.elements() {
        let q = e.pi[s as usize] as usize;
        let s_inv = e.x.inv(s);
        for a in e.a.elements() {
            let conj = e.x.mul(e.x.mul(s, e.iota[a as usize]), s_inv);
            let v = e.iota_inv[conj as usize].expect("kernel is normal");
            let slot = &mut table[q * na + a as usize];
            if *slot != Elem::MAX && *slot != v {
                return Err(Error::InternalAxiomFailure("conjugation depends on the lift".into()));
            }
            *slot = v;
        }
    }
    let act = Action {
        q_size: nq,
        a_size: na,
        table,
    };
    act.validate(&e.q, &e.a)
        .map_err(|err| Error::InternalAxiomFailure(err.to_string()))?;
    Ok(act)
}

/// A normalized 2-cochain `Q × Q → A`; `table[q·|Q| + q']`.
#[derive(Clone, Debug)]
pub struct Cocycle {
    pub q: GroupView,
    pub a: GroupView,
    pub action: Action,
    pub table: Vec<Elem>,
}

impl Cocycle {
    #[inline]
    pub fn at(&self, g: Elem, h: Elem) -> Elem {
        self.table[g as usize * self.q.size() + h as usize]
    }

    pub fn is_normalized(&self) -> bool {
        let e = self.q.unit();
        let z = self.a.unit();
        self.q.elements().all(|g| self.at(e, g) == z && self.at(g, e) == z)
    }

    /// `c(gh, k) + k⁻¹·c(g, h) = c(g, hk) + c(h, k)`.
    pub fn is_cocycle(&self) -> bool {
        is_cocycle_table(&self.q, &self.a, &self.action, &self.table)
    }
}

fn is_cocycle_table(q: &GroupView, a: &GroupView, act: &Action, c: &[Elem]) -> bool {
    let n = q.size();
    let at = |g: Elem, h: Elem| c[g as usize * n + h as usize];
    q.elements().all(|g| {
        q.elements().all(|h| {
            q.elements().all(|k| {
                let lhs = a.mul(at(q.mul(g, h), k), act.apply(q.inv(k), at(g, h)));
                let rhs = a.mul(at(g, q.mul(h, k)), at(h, k));
                lhs == rhs
            })
        })
    })
}

/// `c(q, q') = iota⁻¹(s(qq')⁻¹ s(q) s(q'))` for the least-element section.
pub fn cocycle_oracle(e: &Extension) -> Result<Cocycle> {
    let s = e.section();
    let nq = e.q.size();
    let mut table = Vec::with_capacity(nq * nq);
    for g in e.q.elements() {
        for h in e.q.elements() {
            let lhs = e.x.mul(s[g as usize], s[h as usize]);
            table.push(e.vect(s[e.q.mul(g, h) as usize], lhs)?);
        }
    }
    let c = Cocycle {
        q: e.q.clone(),
        a: e.a.clone(),
        action: action_of(e)?,
        table,
    };
    if !c.is_normalized() || !c.is_cocycle() {
        return Err(Error::InternalAxiomFailure("oracle cochain is not a normalized cocycle".into()));
    }
    Ok(c)
}

/// `Q × A` (element `q·|A| + a`) with
/// `(q, a)(q', b) = (qq', c(q, q') + q'⁻¹·a + b)`.
pub fn extension_of_cocycle(c: &Cocycle) -> Result<Extension> {
    if !c.is_normalized() || !c.is_cocycle() {
        return Err(Error::Validation("cochain is not a normalized cocycle".into()));
    }
    let (q, a) = (&c.q, &c.a);
    let (nq, na) = (q.size(), a.size());
    let n = nq * na;
    let mut table = Vec::with_capacity(n * n);
    for u in 0..n {
        let (g, x) = ((u / na) as Elem, (u % na) as Elem);
        for v in 0..n {
            let (h, y) = ((v / na) as Elem, (v % na) as Elem);
            let shifted = c.action.apply(q.inv(h), x);
            let coord = a.mul(a.mul(c.at(g, h), shifted), y);
            table.push(q.mul(g, h) * na as Elem + coord);
        }
    }
    let x = GroupView::from_table(format!("{}x~{}", q.algebra().name(), a.algebra().name()), n, table)?;
    let unit = q.unit() * na as Elem;
    let iota = a.elements().map(|t| unit + t).collect();
    let pi = (0..n as Elem).map(|u| u / na as Elem).collect();
    Extension::from_views(a.clone(), x, q.clone(), iota, pi)
}

fn check_compatible(e1: &Extension, e2: &Extension) -> Result<Action> {
    if !e1.a.same_group(&e2.a) {
        return Err(Error::MismatchedData("kernel groups differ".into()));
    }
    if !e1.q.same_group(&e2.q) {
        return Err(Error::MismatchedData("quotient groups differ".into()));
    }
    let act = action_of(e1)?;
    if act != action_of(e2)? {
        return Err(Error::MismatchedData("induced actions differ".into()));
    }
    Ok(act)
}

type PairIndex = HashMap<(Elem, Elem), Elem>;

/// Quotient of a subgroup `P ⊆ X × X'` (pairs listed in `elems`) by
/// `keys`, as a group.
fn quotient_group(
    name: String,
    elems: &[(Elem, Elem)],
    mul: impl Fn((Elem, Elem), (Elem, Elem)) -> (Elem, Elem),
    part: &Partition,
) -> Result<(GroupView, PairIndex)> {
    let index: HashMap<(Elem, Elem), Elem> = elems.iter().enumerate().map(|(i, &p)| (p, i as Elem)).collect();
    let reps = part.representatives();
    let m = reps.len();
    let mut table = Vec::with_capacity(m * m);
    for &u in &reps {
        for &v in &reps {
            let w = mul(elems[u as usize], elems[v as usize]);
            let i = *index
                .get(&w)
                .ok_or_else(|| Error::InternalAxiomFailure("pair set is not closed".into()))?;
            table.push(part.label(i));
        }
    }
    // the relation must be a congruence on the pair group
    for (i, &u) in elems.iter().enumerate() {
        for (j, &v) in elems.iter().enumerate() {
            let w = index[&mul(u, v)];
            let expected = table[part.label(i as Elem) as usize * m + part.label(j as Elem) as usize];
            if part.label(w) != expected {
                return Err(Error::InternalAxiomFailure("quotient relation is not a congruence".into()));
            }
        }
    }
    let classes = index.iter().map(|(&p, &i)| (p, part.label(i))).collect();
    Ok((GroupView::from_table(name, m, table)?, classes))
}

/// `(X ×_Q X') / R₊` with `(x, x') R₊ (t, t')` iff
/// `vect(x, t) + vect'(x', t') = 0`.
pub fn baer_sum(e1: &Extension, e2: &Extension) -> Result<Extension> {
    check_compatible(e1, e2)?;
    let a = &e1.a;
    let pairs: Vec<(Elem, Elem)> = e1
        .x
        .elements()
        .flat_map(|x| {
            e2.x.elements()
                .filter(move |&y| e1.pi[x as usize] == e2.pi[y as usize])
                .map(move |y| (x, y))
        })
        .collect();
    let mut keys = vec![0u32; pairs.len()];
    // classes are the orbits of (x, x') ↦ (x·iota(a), x'·iota'(-a))
    let mut labels: HashMap<(Elem, Elem), u32> = HashMap::new();
    for (i, &(x, y)) in pairs.iter().enumerate() {
        let key = a
            .elements()
            .map(|t| (e1.x.mul(x, e1.iota[t as usize]), e2.x.mul(y, e2.iota[a.inv(t) as usize])))
            .min()
            .expect("kernel is nonempty");
        let next = labels.len() as u32;
        keys[i] = *labels.entry(key).or_insert(next);
    }
    let part = Partition::from_keys(&keys);
    // the orbit description agrees with R₊
    for (i, &(x, y)) in pairs.iter().enumerate() {
        for (j, &(t, u)) in pairs.iter().enumerate() {
            if e1.pi[x as usize] != e1.pi[t as usize] {
                continue;
            }
            let sum = a.mul(e1.vect(x, t)?, e2.vect(y, u)?);
            if (sum == a.unit()) != part.same_block(i as Elem, j as Elem) {
                return Err(Error::InternalAxiomFailure("R+ is not the kernel-orbit relation".into()));
            }
        }
    }
    let name = format!("({} + {})", e1.x.algebra().name(), e2.x.algebra().name());
    let mul = |(x, y): (Elem, Elem), (t, u): (Elem, Elem)| (e1.x.mul(x, t), e2.x.mul(y, u));
    let (x, classes) = quotient_group(name, &pairs, mul, &part)?;
    let iota = a.elements().map(|t| classes[&(e1.iota[t as usize], e2.x.unit())]).collect();
    let mut pi = vec![0; x.size()];
    for (&(u, _), &c) in &classes {
        pi[c as usize] = e1.pi[u as usize];
    }
    Extension::from_views(a.clone(), x, e1.q.clone(), iota, pi)
        .map_err(|err| Error::InternalAxiomFailure(format!("Baer sum: {err}")))
}

/// The inverse extension with the map `γ(x) = [(x, 0)]`.
#[derive(Clone, Debug)]
pub struct BaerInverse {
    pub extension: Extension,
    pub gamma: Vec<Elem>,
}

/// `(X ⋉ A) / R_d` where `(x, a)(x', a') = (xx', pi(x')⁻¹·a + a')` and
/// `(x, a) R_d (x', a')` iff `a' - a - vect(x, x') = 0`.
pub fn baer_inverse(e: &Extension) -> Result<BaerInverse> {
    let act = action_of(e)?;
    let a = &e.a;
    let pairs: Vec<(Elem, Elem)> = e.x.elements().flat_map(|x| a.elements().map(move |t| (x, t))).collect();
    // (x, a) ~ (s(pi x), a - vect(s(pi x), x)): one representative per class
    let s = e.section();
    let mut keys = Vec::with_capacity(pairs.len());
    for &(x, t) in &pairs {
        let base = s[e.pi[x as usize] as usize];
        keys.push((base, a.mul(t, a.inv(e.vect(base, x)?))));
    }
    let part = Partition::from_keys(&keys);
    for (i, &(x, t)) in pairs.iter().enumerate() {
        for (j, &(y, u)) in pairs.iter().enumerate() {
            let related = e.pi[x as usize] == e.pi[y as usize]
                && a.mul(a.mul(u, a.inv(t)), a.inv(e.vect(x, y)?)) == a.unit();
            if related != part.same_block(i as Elem, j as Elem) {
                return Err(Error::InternalAxiomFailure("R_d does not match its representatives".into()));
            }
        }
    }
    let mul = |(x, t): (Elem, Elem), (y, u): (Elem, Elem)| {
        let shifted = act.apply(e.q.inv(e.pi[y as usize]), t);
        (e.x.mul(x, y), a.mul(shifted, u))
    };
    let (xs, classes) = quotient_group(format!("{}*", e.x.algebra().name()), &pairs, mul, &part)?;
    let iota = a.elements().map(|t| classes[&(e.x.unit(), t)]).collect();
    let mut pi = vec![0; xs.size()];
    for (&(x, _), &c) in &classes {
        pi[c as usize] = e.pi[x as usize];
    }
    let gamma: Vec<Elem> = e.x.elements().map(|x| classes[&(x, a.unit())]).collect();
    let extension = Extension::from_views(a.clone(), xs, e.q.clone(), iota, pi)
        .map_err(|err| Error::InternalAxiomFailure(format!("Baer inverse: {err}")))?;
    Ok(BaerInverse { extension, gamma })
}

impl BaerInverse {
    /// `γ` is a bijection over `Q` with `vect*(γx, γx') = -vect(x, x')`.
    pub fn check_gamma(&self, e: &Extension) -> Result<bool> {
        let star = &self.extension;
        let mut seen = vec![false; star.x.size()];
        for &g in &self.gamma {
            if std::mem::replace(&mut seen[g as usize], true) {
                return Ok(false);
            }
        }
        for x in e.x.elements() {
            if star.pi[self.gamma[x as usize] as usize] != e.pi[x as usize] {
                return Ok(false);
            }
            for t in e.fibre(e.pi[x as usize]) {
                let lhs = star.vect(self.gamma[x as usize], self.gamma[t as usize])?;
                if lhs != e.a.inv(e.vect(x, t)?) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }
}

/// The split extension `Q ⋉ A` for `action`.
pub fn split(q: &GroupView, a: &GroupView, action: &Action) -> Result<Extension> {
    let nq = q.size();
    extension_of_cocycle(&Cocycle {
        q: q.clone(),
        a: a.clone(),
        action: action.clone(),
        table: vec![a.unit(); nq * nq],
    })
}

/// An isomorphism `h: X → X'` with `h∘iota = iota'` and `pi'∘h = pi`,
/// found by backtracking over generators with fibre constraints.
pub fn equiv_extensions(e1: &Extension, e2: &Extension) -> Result<Option<Vec<Elem>>> {
    if !e1.a.same_group(&e2.a) || !e1.q.same_group(&e2.q) {
        return Err(Error::MismatchedData("kernel or quotient groups differ".into()));
    }
    if e1.x.size() != e2.x.size() {
        return Ok(None);
    }
    let n = e1.x.size();
    let mut map = vec![Elem::MAX; n];
    let mut known = Vec::new();
    for t in e1.a.elements() {
        map[e1.iota[t as usize] as usize] = e2.iota[t as usize];
        known.push(e1.iota[t as usize]);
    }
    // iota(A) is already a subgroup, so this only fills in nothing new
    if !extend(e1, e2, &mut map, &mut known) {
        return Ok(None);
    }
    Ok(search_equiv(e1, e2, &mut map, &mut known).then_some(map))
}

fn search_equiv(e1: &Extension, e2: &Extension, map: &mut [Elem], known: &mut Vec<Elem>) -> bool {
    let Some(g) = (0..map.len()).find(|&t| map[t] == Elem::MAX) else {
        return true;
    };
    let g = g as Elem;
    for cand in e2.fibre(e1.pi[g as usize]) {
        let mark = known.len();
        map[g as usize] = cand;
        known.push(g);
        if extend(e1, e2, map, known) && search_equiv(e1, e2, map, known) {
            return true;
        }
        for &t in &known[mark..] {
            map[t as usize] = Elem::MAX;
        }
        known.truncate(mark);
    }
    false
}

/// Closes the partial map under products; false on a conflict.
fn extend(e1: &Extension, e2: &Extension, map: &mut [Elem], known: &mut Vec<Elem>) -> bool {
    let mut queue: VecDeque<usize> = (0..known.len()).collect();
    let mut taken: Vec<bool> = vec![false; map.len()];
    for &t in known.iter() {
        taken[map[t as usize] as usize] = true;
    }
    while let Some(i) = queue.pop_front() {
        let u = known[i];
        for j in 0..known.len() {
            let v = known[j];
            for (a, b) in [(u, v), (v, u)] {
                let w = e1.x.mul(a, b);
                let image = e2.x.mul(map[a as usize], map[b as usize]);
                match map[w as usize] {
                    Elem::MAX => {
                        if taken[image as usize] {
                            return false;
                        }
                        map[w as usize] = image;
                        taken[image as usize] = true;
                        known.push(w);
                        queue.push_back(known.len() - 1);
                    }
                    old if old != image => return false,
                    _ => {}
                }
            }
        }
    }
    true
}

/// Pointwise sum of cocycles with the same action.
pub fn add_cocycles(c1: &Cocycle, c2: &Cocycle) -> Result<Cocycle> {
    if c1.action != c2.action || !c1.a.same_group(&c2.a) || !c1.q.same_group(&c2.q) {
        return Err(Error::MismatchedData("cocycles over different data".into()));
    }
    Ok(Cocycle {
        table: c1.table.iter().zip(&c2.table).map(|(&x, &y)| c1.a.mul(x, y)).collect(),
        ..c1.clone()
    })
}

/// Normalized 2-coboundaries `δf(g, h) = h⁻¹·f(g) + f(h) - f(gh)`.
pub fn coboundaries(q: &GroupView, a: &GroupView, act: &Action, budget: usize) -> Result<Vec<Vec<Elem>>> {
    let (nq, na) = (q.size(), a.size());
    let free: Vec<Elem> = q.elements().filter(|&g| g != q.unit()).collect();
    let total = crate::algebra::checked_pow(na, free.len())
        .filter(|&t| t <= budget)
        .ok_or(Error::SearchBudgetExceeded { budget })?;
    let mut out = Vec::with_capacity(total);
    let mut digits = vec![0; free.len()];
    for i in 0..total {
        crate::algebra::decode_index(na, free.len(), i, &mut digits);
        let mut f = vec![a.unit(); nq];
        for (&g, &d) in free.iter().zip(&digits) {
            f[g as usize] = d;
        }
        let mut table = Vec::with_capacity(nq * nq);
        for g in q.elements() {
            for h in q.elements() {
                let lhs = a.mul(act.apply(q.inv(h), f[g as usize]), f[h as usize]);
                table.push(a.mul(lhs, a.inv(f[q.mul(g, h) as usize])));
            }
        }
        out.push(table);
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// All normalized 2-cocycles, by enumeration of normalized cochains.
pub fn cocycles(q: &GroupView, a: &GroupView, act: &Action, budget: usize) -> Result<Vec<Vec<Elem>>> {
    let (nq, na) = (q.size(), a.size());
    let free: Vec<(Elem, Elem)> = q
        .elements()
        .filter(|&g| g != q.unit())
        .flat_map(|g| q.elements().filter(|&h| h != q.unit()).map(move |h| (g, h)))
        .collect();
    let total = crate::algebra::checked_pow(na, free.len())
        .filter(|&t| t <= budget)
        .ok_or(Error::SearchBudgetExceeded { budget })?;
    let mut digits = vec![0; free.len()];
    let mut out = Vec::new();
    for i in 0..total {
        crate::algebra::decode_index(na, free.len(), i, &mut digits);
        let mut table = vec![a.unit(); nq * nq];
        for (&(g, h), &d) in free.iter().zip(&digits) {
            table[g as usize * nq + h as usize] = d;
        }
        if is_cocycle_table(q, a, act, &table) {
            out.push(table);
        }
    }
    Ok(out)
}

/// Equivalence classes of extensions of `Q` by `A` with a fixed action,
/// indexed by canonical cocycles, with the Baer-sum table on classes.
#[derive(Clone, Debug)]
pub struct ExtClasses {
    pub action: Action,
    /// Canonical cocycle of each class (least in its coset), sorted; the
    /// split class comes first.
    pub classes: Vec<Vec<Elem>>,
    /// `sum[i·m + j]` is the class of `classes[i] + classes[j]`.
    pub sum: Vec<usize>,
    coboundaries: Vec<Vec<Elem>>,
    q: GroupView,
    a: GroupView,
}

impl ExtClasses {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn canonical(&self, table: &[Elem]) -> Vec<Elem> {
        canonical_in(&self.a, &self.coboundaries, table)
    }

    /// Class index of a normalized cocycle.
    pub fn class_of(&self, table: &[Elem]) -> Option<usize> {
        self.classes.binary_search(&self.canonical(table)).ok()
    }

    pub fn cocycle(&self, i: usize) -> Cocycle {
        Cocycle {
            q: self.q.clone(),
            a: self.a.clone(),
            action: self.action.clone(),
            table: self.classes[i].clone(),
        }
    }

    pub fn extension(&self, i: usize) -> Result<Extension> {
        extension_of_cocycle(&self.cocycle(i))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let m = self.len();
        let reps: Vec<serde_json::Value> = (0..m)
            .map(|i| {
                let rows: Vec<&[Elem]> = self.classes[i].chunks(self.q.size().max(1)).collect();
                serde_json::json!({"index": i, "cocycle": rows, "split": self.classes[i].iter().all(|&v| v == self.a.unit())})
            })
            .collect();
        let sum: Vec<&[usize]> = self.sum.chunks(m.max(1)).collect();
        serde_json::json!({
            "action": self.action.to_json(),
            "class_count": m,
            "classes": reps,
            "sum": sum,
        })
    }
}

fn canonical_in(a: &GroupView, cobs: &[Vec<Elem>], table: &[Elem]) -> Vec<Elem> {
    cobs.iter()
        .map(|b| table.iter().zip(b).map(|(&x, &y)| a.mul(x, y)).collect::<Vec<_>>())
        .min()
        .expect("zero coboundary present")
}

pub fn ext_classes(q: &GroupView, a: &GroupView, action: &Action, budget: usize) -> Result<ExtClasses> {
    action.validate(q, a)?;
    if !a.is_abelian() {
        return Err(Error::Validation("kernel group is not abelian".into()));
    }
    let cobs = coboundaries(q, a, action, budget)?;
    let mut classes: Vec<Vec<Elem>> = cocycles(q, a, action, budget)?
        .iter()
        .map(|c| canonical_in(a, &cobs, c))
        .collect();
    classes.sort();
    classes.dedup();
    let m = classes.len();
    let mut sum = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let t: Vec<Elem> = classes[i].iter().zip(&classes[j]).map(|(&x, &y)| a.mul(x, y)).collect();
            let c = canonical_in(a, &cobs, &t);
            sum.push(classes.binary_search(&c).expect("sum of cocycles is a cocycle"));
        }
    }
    Ok(ExtClasses {
        action: action.clone(),
        classes,
        sum,
        coboundaries: cobs,
        q: q.clone(),
        a: a.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    fn fixture(stem: &str) -> Extension {
        corpus::extensions()
            .into_iter()
            .find(|(s, _)| *s == stem)
            .map(|(_, e)| e)
            .unwrap()
    }

    #[test]
    fn vect_in_z4() {
        let e = fixture("ext_q2_a2_z4");
        assert_eq!(e.vect(1, 3).unwrap(), 1);
        assert_eq!(e.vect(2, 2).unwrap(), 0);
        assert!(matches!(e.vect(0, 1), Err(Error::DifferentFibers(0, 1))));
    }

    #[test]
    fn actions() {
        assert!(action_of(&fixture("ext_q2_a2_z4")).unwrap().is_trivial());
        let s3 = action_of(&fixture("ext_q2_a3_s3")).unwrap();
        // the odd class inverts the rotations
        assert_eq!((s3.apply(1, 1), s3.apply(1, 2)), (2, 1));
    }

    #[test]
    fn z4_cocycle() {
        let c = cocycle_oracle(&fixture("ext_q2_a2_z4")).unwrap();
        assert_eq!(c.table, vec![0, 0, 0, 1]);
        let split = cocycle_oracle(&fixture("ext_q2_a2_split")).unwrap();
        assert_eq!(split.table, vec![0, 0, 0, 0]);
    }

    #[test]
    fn round_trips() {
        for (stem, e) in corpus::extensions() {
            let back = extension_of_cocycle(&cocycle_oracle(&e).unwrap()).unwrap();
            assert!(equiv_extensions(&e, &back).unwrap().is_some(), "{stem}");
        }
    }

    #[test]
    fn z4_and_klein_are_not_equivalent() {
        let z4 = fixture("ext_q2_a2_z4");
        let v = fixture("ext_q2_a2_split");
        assert!(equiv_extensions(&z4, &v).unwrap().is_none());
        assert!(equiv_extensions(&z4, &z4).unwrap().is_some());
    }

    #[test]
    fn baer_sum_of_z4_with_itself_splits() {
        let z4 = fixture("ext_q2_a2_z4");
        let v = fixture("ext_q2_a2_split");
        let sum = baer_sum(&z4, &z4).unwrap();
        assert!(equiv_extensions(&sum, &v).unwrap().is_some());
        let unit = baer_sum(&z4, &v).unwrap();
        assert!(equiv_extensions(&unit, &z4).unwrap().is_some());
    }

    #[test]
    fn inverse_of_z4_is_z4() {
        let z4 = fixture("ext_q2_a2_z4");
        let inv = baer_inverse(&z4).unwrap();
        assert!(inv.check_gamma(&z4).unwrap());
        assert!(equiv_extensions(&inv.extension, &z4).unwrap().is_some());
    }

    #[test]
    fn inverse_in_z3_classes_is_the_other_z9() {
        let e = fixture("ext_q3_a3_z9");
        let inv = baer_inverse(&e).unwrap();
        assert!(inv.check_gamma(&e).unwrap());
        let classes = ext_classes(e.q(), e.a(), &action_of(&e).unwrap(), DEFAULT_COCHAIN_BUDGET).unwrap();
        let i = classes.class_of(&cocycle_oracle(&e).unwrap().table).unwrap();
        let j = classes.class_of(&cocycle_oracle(&inv.extension).unwrap().table).unwrap();
        assert_ne!(i, 0);
        assert_eq!(classes.sum[i * classes.len() + j], 0);
    }

    #[test]
    fn class_counts() {
        let z2 = GroupView::new(Arc::new(corpus::cyclic(2))).unwrap();
        let z3 = GroupView::new(Arc::new(corpus::cyclic(3))).unwrap();
        let triv = Action::trivial(&z2, &z2);
        let c = ext_classes(&z2, &z2, &triv, DEFAULT_COCHAIN_BUDGET).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.sum, vec![0, 1, 1, 0]);
        let triv3 = Action::trivial(&z2, &z3);
        assert_eq!(ext_classes(&z2, &z3, &triv3, DEFAULT_COCHAIN_BUDGET).unwrap().len(), 1);
        let inversion = Action::new(&z2, &z3, vec![0, 1, 2, 0, 2, 1]).unwrap();
        assert_eq!(ext_classes(&z2, &z3, &inversion, DEFAULT_COCHAIN_BUDGET).unwrap().len(), 1);
        let q3 = Action::trivial(&z3, &z3);
        assert_eq!(ext_classes(&z3, &z3, &q3, DEFAULT_COCHAIN_BUDGET).unwrap().len(), 3);
    }

    #[test]
    fn rejects_bad_extensions() {
        let z2 = Arc::new(corpus::cyclic(2));
        let z4 = Arc::new(corpus::cyclic(4));
        let err = Extension::new(z2.clone(), z4.clone(), z2.clone(), vec![0, 1], vec![0, 1, 0, 1]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        let s3 = Arc::new(corpus::s3());
        let err = Extension::new(s3.clone(), s3, z2, (0..6).collect(), vec![0; 6]).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }

    #[test]
    fn mismatched_actions() {
        let z6 = fixture("ext_q2_a3_z6");
        let s3 = fixture("ext_q2_a3_s3");
        assert!(matches!(baer_sum(&z6, &s3), Err(Error::MismatchedData(_))));
    }
}
