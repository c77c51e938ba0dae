//! One-shot property harness: term search, congruence permutability and
//! sampled reflexive compatible relations on `A` and `A²`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::algebra::{direct_power, Elem, FiniteAlgebra};
use crate::congruence::{all_congruences, cg_partition, reflexive_subalgebra};
use crate::error::Result;
use crate::relcalc::BinRel;
use crate::term_search::{goursat_verdict, maltsev_verdict, verify_goursat_pair, verify_witness, IdentityFamily, Verdict};
use crate::Partition;

/// Budgets for one suite run.
#[derive(Clone, Copy, Debug)]
pub struct SuiteBudget {
    pub closure: usize,
    pub lattice: usize,
}

impl Default for SuiteBudget {
    fn default() -> Self {
        SuiteBudget {
            closure: crate::power::DEFAULT_CLOSURE_BUDGET,
            lattice: crate::congruence::DEFAULT_LATTICE_BUDGET,
        }
    }
}

/// Seeded RNG for sample `index`; samples are independent of scheduling.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[derive(Clone, Debug)]
pub struct PermutabilityReport {
    pub congruences: usize,
    pub pairs: usize,
    pub all_permute: bool,
    pub counterexample: Option<(String, String)>,
}

impl PermutabilityReport {
    fn to_json(&self) -> Value {
        json!({
            "congruences": self.congruences,
            "pairs": self.pairs,
            "all_permute": self.all_permute,
            "counterexample": self.counterexample.as_ref().map(|(r, s)| json!({"r": r, "s": s})),
        })
    }
}

/// Checks `R∘S = S∘R` for every pair of congruences.
pub fn permutability(alg: &Arc<FiniteAlgebra>, budget: usize) -> Result<PermutabilityReport> {
    let lattice = all_congruences(alg, budget)?;
    let m = lattice.len();
    let first = (0..m * m)
        .into_par_iter()
        .filter(|&k| k / m < k % m)
        .find_first(|&k| !lattice[k / m].permutes_with(&lattice[k % m]).expect("same algebra"));
    Ok(PermutabilityReport {
        congruences: m,
        pairs: m * (m.saturating_sub(1)) / 2,
        all_permute: first.is_none(),
        counterexample: first.map(|k| (lattice[k / m].partition().to_string(), lattice[k % m].partition().to_string())),
    })
}

#[derive(Clone, Debug)]
pub struct RelationReport {
    pub candidates: usize,
    pub samples: usize,
    pub equivalences: usize,
    pub difunctional: usize,
    /// Generators and pairs of the first relation that is not an
    /// equivalence.
    pub witness: Option<(Vec<(Elem, Elem)>, BinRel)>,
}

impl RelationReport {
    pub fn total(&self) -> usize {
        self.candidates + self.samples
    }

    pub fn all_equivalences(&self) -> bool {
        self.equivalences == self.total()
    }

    pub fn all_difunctional(&self) -> bool {
        self.difunctional == self.total()
    }

    fn to_json(&self) -> Value {
        json!({
            "candidates": self.candidates,
            "samples": self.samples,
            "equivalences": self.equivalences,
            "difunctional": self.difunctional,
            "witness": self.witness.as_ref().map(|(gens, rel)| json!({
                "generators": gens,
                "pairs": rel.to_pairs_json(),
                "symmetric": rel.is_symmetric().unwrap_or(false),
                "transitive": rel.is_transitive().unwrap_or(false),
            })),
        })
    }
}

struct Sample {
    gens: Vec<(Elem, Elem)>,
    rel: BinRel,
    equivalence: bool,
    difunctional: bool,
}

fn closure_sample(alg: &FiniteAlgebra, gens: Vec<(Elem, Elem)>) -> Result<Sample> {
    // the generated congruence bounds the relation; reaching its size ends
    // generation early
    let bound: Partition = cg_partition(alg, &gens)?;
    let bound_pairs: usize = bound.blocks().iter().map(|b| b.len() * b.len()).sum();
    let rel = reflexive_subalgebra(alg, &gens, Some(bound_pairs))?.rel;
    let equivalence = rel.is_equivalence()?;
    let difunctional = rel.is_difunctional();
    Ok(Sample {
        gens,
        rel,
        equivalence,
        difunctional,
    })
}

/// Reflexive compatible relations generated by each single pair `(a, b)`,
/// `a < b` (at most `max_candidates` of them, in lexicographic order),
/// then by `samples` seeded random sets of one to three pairs.
pub fn sample_relations(alg: &FiniteAlgebra, seed: u64, samples: usize, max_candidates: usize) -> Result<RelationReport> {
    let n = alg.size();
    let singles: Vec<Vec<(Elem, Elem)>> = (0..n as Elem)
        .flat_map(|a| (a + 1..n as Elem).map(move |b| vec![(a, b)]))
        .take(max_candidates)
        .collect();
    let random: Vec<Vec<(Elem, Elem)>> = (0..samples as u64)
        .map(|i| {
            let mut rng = sample_rng(seed, i);
            let k = rng.gen_range(1..=3);
            (0..k)
                .map(|_| (rng.gen_range(0..n) as Elem, rng.gen_range(0..n) as Elem))
                .collect()
        })
        .collect();
    let candidates = singles.len();
    let all: Vec<Vec<(Elem, Elem)>> = singles.into_iter().chain(random).collect();
    let results: Vec<Sample> = all
        .into_par_iter()
        .map(|gens| closure_sample(alg, gens))
        .collect::<Result<_>>()?;
    let equivalences = results.iter().filter(|s| s.equivalence).count();
    let difunctional = results.iter().filter(|s| s.difunctional).count();
    let witness = results
        .into_iter()
        .find(|s| !s.equivalence)
        .map(|s| (s.gens, s.rel));
    Ok(RelationReport {
        candidates,
        samples,
        equivalences,
        difunctional,
        witness,
    })
}

/// Full suite result.
#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub algebra: String,
    pub size: usize,
    pub maltsev: Verdict<String>,
    pub maltsev_verified: bool,
    pub goursat: Verdict<(String, String)>,
    pub goursat_verified: bool,
    pub perm_a: PermutabilityReport,
    pub perm_a2: PermutabilityReport,
    pub rel_a: RelationReport,
    pub rel_a2: RelationReport,
}

impl SuiteReport {
    /// A Mal'tsev term forces every relational property checked here.
    pub fn implications_hold(&self) -> bool {
        if !self.maltsev.is_some() {
            return true;
        }
        self.perm_a.all_permute
            && self.perm_a2.all_permute
            && self.rel_a.all_equivalences()
            && self.rel_a2.all_equivalences()
            && self.rel_a.all_difunctional()
            && self.rel_a2.all_difunctional()
    }

    pub fn pass(&self) -> bool {
        self.implications_hold() && self.maltsev_verified && self.goursat_verified
    }

    pub fn to_json(&self) -> Value {
        let maltsev = match &self.maltsev {
            Verdict::Some(t) => json!({"verdict": "some", "term": t, "verified": self.maltsev_verified}),
            Verdict::None => json!({"verdict": "none"}),
            Verdict::Budget(b) => json!({"verdict": "budget", "budget": b}),
        };
        let goursat = match &self.goursat {
            Verdict::Some((p, q)) => json!({"verdict": "some", "p": p, "q": q, "verified": self.goursat_verified}),
            Verdict::None => json!({"verdict": "none"}),
            Verdict::Budget(b) => json!({"verdict": "budget", "budget": b}),
        };
        json!({
            "algebra": self.algebra,
            "size": self.size,
            "maltsev_term": maltsev,
            "goursat_terms": goursat,
            "permutability": {"A": self.perm_a.to_json(), "A2": self.perm_a2.to_json()},
            "relations": {"A": self.rel_a.to_json(), "A2": self.rel_a2.to_json()},
            "implications_hold": self.implications_hold(),
            "pass": self.pass(),
        })
    }
}

/// Candidates tried before random samples on `A²`.
const A2_CANDIDATES: usize = 64;

pub fn run_check_suite(alg: &Arc<FiniteAlgebra>, seed: u64, samples: usize, budget: SuiteBudget) -> Result<SuiteReport> {
    let (maltsev, maltsev_verified) = match maltsev_verdict(alg, budget.closure)? {
        Verdict::Some(w) => {
            let ok = verify_witness(alg, &w, IdentityFamily::Maltsev)?;
            (Verdict::Some(w.term.to_string()), ok)
        }
        Verdict::None => (Verdict::None, true),
        Verdict::Budget(b) => (Verdict::Budget(b), true),
    };
    let (goursat, goursat_verified) = match goursat_verdict(alg, budget.closure)? {
        Verdict::Some((p, q)) => {
            let ok = verify_goursat_pair(alg, &p, &q)?;
            (Verdict::Some((p.term.to_string(), q.term.to_string())), ok)
        }
        Verdict::None => (Verdict::None, true),
        Verdict::Budget(b) => (Verdict::Budget(b), true),
    };
    let a2 = Arc::new(direct_power(alg, 2)?);
    let perm_a = permutability(alg, budget.lattice)?;
    let perm_a2 = permutability(&a2, budget.lattice)?;
    let rel_a = sample_relations(alg, seed, samples, usize::MAX)?;
    let rel_a2 = sample_relations(&a2, seed ^ 0x5eed_a2a2, samples, A2_CANDIDATES)?;
    Ok(SuiteReport {
        algebra: alg.name().to_string(),
        size: alg.size(),
        maltsev,
        maltsev_verified,
        goursat,
        goursat_verified,
        perm_a,
        perm_a2,
        rel_a,
        rel_a2,
    })
}

#[derive(Clone, Debug, Default)]
pub struct Tally {
    pub passed: usize,
    pub failed: usize,
    pub first_counterexample: Option<Value>,
}

impl Tally {
    fn record(&mut self, ok: bool, counterexample: impl FnOnce() -> Value) {
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.first_counterexample.is_none() {
                self.first_counterexample = Some(counterexample());
            }
        }
    }

    fn to_json(&self) -> Value {
        json!({"passed": self.passed, "failed": self.failed, "first_counterexample": self.first_counterexample})
    }
}

/// Random split squares and 3x3 diagrams over `alg`.
#[derive(Clone, Debug)]
pub struct SquareReport {
    pub maltsev: bool,
    pub goursat: bool,
    pub regular: Tally,
    pub goursat_pushout: Tally,
    /// Diagrams where upper and lower exactness agree.
    pub three_by_three: Tally,
}

impl SquareReport {
    /// Mal'tsev algebras give regular pushouts; Goursat algebras give
    /// Goursat pushouts and the 3x3 lemma.
    pub fn pass(&self) -> bool {
        (!self.maltsev || self.regular.failed == 0)
            && (!self.goursat || (self.goursat_pushout.failed == 0 && self.three_by_three.failed == 0))
    }

    pub fn to_json(&self) -> Value {
        json!({
            "maltsev": self.maltsev,
            "goursat": self.goursat,
            "regular_pushout": self.regular.to_json(),
            "goursat_pushout": self.goursat_pushout.to_json(),
            "three_by_three": self.three_by_three.to_json(),
            "pass": self.pass(),
        })
    }
}

/// Largest power of `alg` with at most this many elements hosts the 3x3
/// diagrams.
const DIAGRAM_CARRIER: usize = 36;

pub fn check_squares(
    alg: &Arc<FiniteAlgebra>,
    seed: u64,
    squares: usize,
    diagrams: usize,
    budget: SuiteBudget,
) -> Result<SquareReport> {
    use crate::constructions::{goursat_pushout_check, regular_pushout_check, SplitSquare, ThreeByThree};
    let maltsev = maltsev_verdict(alg, budget.closure)?.is_some();
    let goursat = goursat_verdict(alg, budget.closure)?.is_some();
    let results: Vec<_> = (0..squares as u64)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let sq = SplitSquare::random(alg, &mut sample_rng(seed, i))?;
            Ok((i, regular_pushout_check(&sq)?, goursat_pushout_check(&sq)?))
        })
        .collect::<Result<_>>()?;
    let mut regular = Tally::default();
    let mut goursat_pushout = Tally::default();
    for (i, r, g) in results {
        regular.record(r.holds, || json!({"sample": i, "missed": r.witness}));
        goursat_pushout.record(g.holds, || json!({"sample": i, "missed": g.witness}));
    }
    let n = alg.size().max(2);
    let mut k = 1;
    while n.pow(k + 1) <= DIAGRAM_CARRIER {
        k += 1;
    }
    let host = Arc::new(direct_power(alg, k as usize)?);
    let rows: Vec<_> = (0..diagrams as u64)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let d = ThreeByThree::random(&host, &mut sample_rng(seed ^ 0x3b3, i))?;
            Ok((i, d.upper_exact(), d.lower_exact(), d))
        })
        .collect::<Result<_>>()?;
    let mut three_by_three = Tally::default();
    for (i, upper, lower, d) in rows {
        three_by_three.record(upper == lower, || {
            json!({
                "sample": i,
                "upper": upper,
                "lower": lower,
                "alpha": d.alpha.to_string(),
                "beta": d.beta.to_string(),
                "gamma": d.gamma.to_string(),
            })
        });
    }
    Ok(SquareReport {
        maltsev,
        goursat,
        regular,
        goursat_pushout,
        three_by_three,
    })
}
