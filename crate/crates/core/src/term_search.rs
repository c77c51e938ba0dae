//! Mal'tsev and Goursat term search by closure of projections in a
//! restricted power.
//!
//! The identities `p(x,x,y) = y`, `p(x,y,y) = x` only mention argument
//! tuples of the shapes `(a,a,b)` and `(a,b,b)`, so ternary term operations
//! are compared on those coordinates only. A term exists in the variety
//! generated by the algebra iff the closure of the projections contains the
//! target vector.

use std::collections::HashMap;
use std::ops::ControlFlow;

use serde::Serialize;

use crate::algebra::{Elem, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::power::{generate_until, PowerAlgebra};
use crate::term::Term;

pub const MALTSEV_VARS: [&str; 3] = ["x", "y", "z"];
pub const GOURSAT_VARS: [&str; 4] = ["x", "y", "z", "w"];

/// A term together with its operation table on the source algebra.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TermWitness {
    pub term: Term,
    pub table: Vec<Elem>,
}

impl TermWitness {
    pub fn new(alg: &FiniteAlgebra, term: Term) -> Result<Self> {
        let table = term.table(alg)?;
        Ok(TermWitness { term, table })
    }

    pub fn arity(&self) -> usize {
        self.term.arity()
    }

    /// Stored table entry at `args`.
    pub fn at(&self, n: usize, args: &[Elem]) -> Elem {
        self.table[crate::algebra::table_index(n, args)]
    }
}

/// Identities a witness can be checked against.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IdentityFamily {
    /// `p(x,x,y) = y`, `p(x,y,y) = x`.
    Maltsev,
    /// `p(x,y,y,z) = x`.
    GoursatP,
    /// `q(x,y,y,z) = z`.
    GoursatQ,
}

impl IdentityFamily {
    pub fn arity(self) -> usize {
        match self {
            IdentityFamily::Maltsev => 3,
            _ => 4,
        }
    }
}

/// Outcome of a search; running out of budget is distinct from `None`.
#[derive(Clone, Debug)]
pub enum Verdict<T> {
    Some(T),
    None,
    Budget(usize),
}

impl<T> Verdict<T> {
    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Some(_) => "some",
            Verdict::None => "none",
            Verdict::Budget(_) => "budget",
        }
    }

    pub fn is_some(&self) -> bool {
        matches!(self, Verdict::Some(_))
    }

    pub fn some(self) -> Option<T> {
        match self {
            Verdict::Some(t) => Some(t),
            _ => None,
        }
    }

    fn from_result(r: Result<Option<T>>) -> Result<Self> {
        match r {
            Ok(Some(t)) => Ok(Verdict::Some(t)),
            Ok(None) => Ok(Verdict::None),
            Err(Error::ClosureBudgetExceeded { budget }) => Ok(Verdict::Budget(budget)),
            Err(e) => Err(e),
        }
    }
}

/// Coordinates `(a,a,b)` and `(a,b,b)`, lexicographically.
pub fn maltsev_coordinates(n: usize) -> Vec<[Elem; 3]> {
    let m = n as Elem;
    let mut out = Vec::with_capacity(2 * n * n);
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                if a == b || b == c {
                    out.push([a, b, c]);
                }
            }
        }
    }
    out
}

/// Coordinates `(a,b,b,c)` and `(a,a,b,b)`, lexicographically.
pub fn goursat_coordinates(n: usize) -> Vec<[Elem; 4]> {
    let m = n as Elem;
    let mut out = Vec::new();
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    if b == c || (a == b && c == d) {
                        out.push([a, b, c, d]);
                    }
                }
            }
        }
    }
    out
}

/// Searches for a Mal'tsev term; `Err(ClosureBudgetExceeded)` is
/// inconclusive.
pub fn maltsev_term(alg: &FiniteAlgebra, budget: usize) -> Result<Option<TermWitness>> {
    let coords = maltsev_coordinates(alg.size());
    let gens: Vec<Vec<Elem>> = (0..3).map(|i| coords.iter().map(|c| c[i]).collect()).collect();
    let target: Vec<Elem> = coords.iter().map(|c| if c[0] == c[1] { c[2] } else { c[0] }).collect();
    let ambient = PowerAlgebra::new(alg, coords.len().max(1))?;
    if coords.is_empty() {
        // empty carrier: the identities hold vacuously
        return Ok(Some(TermWitness::new(alg, Term::var(0, &MALTSEV_VARS))?));
    }
    let mut found = None;
    let closure = generate_until(&ambient, &gens, budget, |i, v| {
        if v == target.as_slice() {
            found = Some(i);
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    match found {
        Some(i) => {
            let term = Term::from_closure(alg, &closure, i, &MALTSEV_VARS);
            Ok(Some(TermWitness::new(alg, term)?))
        }
        None => Ok(None),
    }
}

pub fn maltsev_verdict(alg: &FiniteAlgebra, budget: usize) -> Result<Verdict<TermWitness>> {
    Verdict::from_result(maltsev_term(alg, budget))
}

/// Searches for quaternary `p, q` with `p(x,y,y,z) = x`, `q(x,y,y,z) = z`
/// and `p(x,x,y,y) = q(x,x,y,y)`. The first matching pair in closure order
/// is returned.
pub fn goursat_terms(alg: &FiniteAlgebra, budget: usize) -> Result<Option<(TermWitness, TermWitness)>> {
    let coords = goursat_coordinates(alg.size());
    if coords.is_empty() {
        let p = TermWitness::new(alg, Term::var(0, &GOURSAT_VARS))?;
        let q = TermWitness::new(alg, Term::var(3, &GOURSAT_VARS))?;
        return Ok(Some((p, q)));
    }
    let gens: Vec<Vec<Elem>> = (0..4).map(|i| coords.iter().map(|c| c[i]).collect()).collect();
    // positions constrained by the p/q identities, and the shared ones
    let abbc: Vec<usize> = (0..coords.len()).filter(|&i| coords[i][1] == coords[i][2]).collect();
    let aabb: Vec<usize> = (0..coords.len())
        .filter(|&i| coords[i][0] == coords[i][1] && coords[i][2] == coords[i][3])
        .collect();
    let p_profile: Vec<Elem> = abbc.iter().map(|&i| coords[i][0]).collect();
    let q_profile: Vec<Elem> = abbc.iter().map(|&i| coords[i][3]).collect();
    let ambient = PowerAlgebra::new(alg, coords.len())?;
    let mut p_by_key: HashMap<Vec<Elem>, usize> = HashMap::new();
    let mut q_by_key: HashMap<Vec<Elem>, usize> = HashMap::new();
    let mut found = None;
    let closure = generate_until(&ambient, &gens, budget, |i, v| {
        let on_abbc = abbc.iter().map(|&c| v[c]);
        let is_p = on_abbc.clone().eq(p_profile.iter().copied());
        let is_q = on_abbc.eq(q_profile.iter().copied());
        if !is_p && !is_q {
            return ControlFlow::Continue(());
        }
        let key: Vec<Elem> = aabb.iter().map(|&c| v[c]).collect();
        if is_p {
            if let Some(&j) = q_by_key.get(&key) {
                found = Some((i, j));
                return ControlFlow::Break(());
            }
        }
        if is_q {
            if let Some(&j) = p_by_key.get(&key) {
                found = Some((j, i));
                return ControlFlow::Break(());
            }
        }
        if is_p && is_q {
            found = Some((i, i));
            return ControlFlow::Break(());
        }
        if is_p {
            p_by_key.entry(key.clone()).or_insert(i);
        }
        if is_q {
            q_by_key.entry(key).or_insert(i);
        }
        ControlFlow::Continue(())
    })?;
    match found {
        Some((pi, qi)) => {
            let p = TermWitness::new(alg, Term::from_closure(alg, &closure, pi, &GOURSAT_VARS))?;
            let q = TermWitness::new(alg, Term::from_closure(alg, &closure, qi, &GOURSAT_VARS))?;
            Ok(Some((p, q)))
        }
        None => Ok(None),
    }
}

pub fn goursat_verdict(alg: &FiniteAlgebra, budget: usize) -> Result<Verdict<(TermWitness, TermWitness)>> {
    Verdict::from_result(goursat_terms(alg, budget))
}

/// Re-evaluates the term tree (not the stored table) on every instance of
/// the identity family. Also checks that the stored table matches the tree.
pub fn verify_witness(alg: &FiniteAlgebra, w: &TermWitness, family: IdentityFamily) -> Result<bool> {
    if w.arity() != family.arity() {
        return Err(Error::ArityMismatch {
            symbol: "witness".into(),
            expected: family.arity(),
            got: w.arity(),
        });
    }
    let m = alg.size() as Elem;
    for a in 0..m {
        for b in 0..m {
            let ok = match family {
                IdentityFamily::Maltsev => {
                    w.term.eval(alg, &[a, a, b])? == b && w.term.eval(alg, &[a, b, b])? == a
                }
                IdentityFamily::GoursatP => (0..m).all(|c| w.term.eval(alg, &[a, b, b, c]).ok() == Some(a)),
                IdentityFamily::GoursatQ => (0..m).all(|c| w.term.eval(alg, &[a, b, b, c]).ok() == Some(c)),
            };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(w.term.table(alg)? == w.table)
}

/// Checks both Goursat witnesses and the linking identity
/// `p(x,x,y,y) = q(x,x,y,y)`.
pub fn verify_goursat_pair(alg: &FiniteAlgebra, p: &TermWitness, q: &TermWitness) -> Result<bool> {
    if !verify_witness(alg, p, IdentityFamily::GoursatP)? || !verify_witness(alg, q, IdentityFamily::GoursatQ)? {
        return Ok(false);
    }
    let m = alg.size() as Elem;
    for a in 0..m {
        for b in 0..m {
            if p.term.eval(alg, &[a, a, b, b])? != q.term.eval(alg, &[a, a, b, b])? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    const BUDGET: usize = 1_000_000;

    #[test]
    fn coordinate_counts() {
        for n in 1..5 {
            assert_eq!(maltsev_coordinates(n).len(), 2 * n * n - n);
            assert_eq!(goursat_coordinates(n).len(), n * n * n + n * n - n);
        }
    }

    #[test]
    fn z2_has_a_maltsev_term() {
        let z2 = corpus::cyclic(2);
        let w = maltsev_term(&z2, BUDGET).unwrap().unwrap();
        assert!(verify_witness(&z2, &w, IdentityFamily::Maltsev).unwrap());
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    assert_eq!(w.at(2, &[x, y, z]), x ^ y ^ z);
                }
            }
        }
    }

    #[test]
    fn semilattice_has_none() {
        assert!(maltsev_term(&corpus::meet_semilattice(2), BUDGET).unwrap().is_none());
    }

    #[test]
    fn bogus_witness_fails() {
        let z3 = corpus::cyclic(3);
        let w = TermWitness::new(&z3, Term::var(0, &MALTSEV_VARS)).unwrap();
        assert!(!verify_witness(&z3, &w, IdentityFamily::Maltsev).unwrap());
        assert!(matches!(
            verify_witness(&z3, &w, IdentityFamily::GoursatP),
            Err(Error::ArityMismatch { .. })
        ));
    }

    #[test]
    fn budget_is_reported() {
        let s3 = corpus::s3();
        assert!(matches!(maltsev_verdict(&s3, 5).unwrap(), Verdict::Budget(5)));
    }

    #[test]
    fn deterministic_witness() {
        let q = corpus::quasigroup5();
        let a = maltsev_term(&q, BUDGET).unwrap().unwrap();
        let b = maltsev_term(&q, BUDGET).unwrap().unwrap();
        assert_eq!(a.term.to_string(), b.term.to_string());
        assert!(verify_witness(&q, &a, IdentityFamily::Maltsev).unwrap());
    }

    #[test]
    fn implication_algebra_is_goursat() {
        let imp = corpus::implication_algebra();
        let (p, q) = goursat_terms(&imp, BUDGET).unwrap().unwrap();
        assert!(verify_goursat_pair(&imp, &p, &q).unwrap());
        assert!(maltsev_term(&imp, BUDGET).unwrap().is_none());
    }
}
