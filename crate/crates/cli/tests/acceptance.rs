//! Acceptance run: one line per criterion, nonzero exit if any fails.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use malcat_core::algebra::product;
use malcat_core::congruence::{all_congruences, is_compatible, Congruence, DEFAULT_LATTICE_BUDGET};
use malcat_core::connector::{direction, smith_commutator, DEFAULT_SEARCH_BUDGET};
use malcat_core::constructions::{decompose, Hypothesis};
use malcat_core::corpus;
use malcat_core::extensions::{
    self, action_of, baer_inverse, baer_sum, cocycle_oracle, coboundaries, cocycles, equiv_extensions, ext_classes,
    Action, GroupView, DEFAULT_COCHAIN_BUDGET,
};
use malcat_core::maltsev_ops::{tally_maltsev, TernaryOp};
use malcat_core::power::DEFAULT_CLOSURE_BUDGET;
use malcat_core::suite::{check_squares, run_check_suite, SuiteBudget};
use malcat_core::term_search::{goursat_terms, maltsev_term, verify_goursat_pair, verify_witness, IdentityFamily};
use malcat_core::{Elem, Error, FiniteAlgebra, Homomorphism, Partition};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e2s(e: Error) -> String {
    e.to_string()
}

/// Corpus algebras in the group signature plus the quasigroup.
fn maltsev_corpus() -> Vec<(&'static str, Arc<FiniteAlgebra>)> {
    let mut algs = corpus::groups();
    algs.push(("z5", corpus::cyclic(5)));
    algs.push(("quasigroup5", corpus::quasigroup5()));
    algs.into_iter().map(|(s, a)| (s, Arc::new(a))).collect()
}

fn non_maltsev_corpus() -> Vec<(&'static str, Arc<FiniteAlgebra>)> {
    ["semilattice2", "chain3", "implication2"]
        .into_iter()
        .map(|s| (s, Arc::new(corpus::algebra(s).unwrap())))
        .collect()
}

fn criterion_1() -> Outcome {
    let mut slowest = Duration::ZERO;
    let algs = maltsev_corpus();
    for (stem, alg) in &algs {
        let start = Instant::now();
        let w = maltsev_term(alg, DEFAULT_CLOSURE_BUDGET)
            .map_err(e2s)?
            .ok_or_else(|| format!("{stem}: no Mal'tsev term"))?;
        ensure(verify_witness(alg, &w, IdentityFamily::Maltsev).map_err(e2s)?, || {
            format!("{stem}: witness {} fails", w.term)
        })?;
        let t = start.elapsed();
        slowest = slowest.max(t);
        ensure(t < Duration::from_secs(30), || format!("{stem}: {t:?}"))?;
    }
    for (stem, alg) in non_maltsev_corpus() {
        ensure(maltsev_term(&alg, DEFAULT_CLOSURE_BUDGET).map_err(e2s)?.is_none(), || {
            format!("{stem}: unexpected Mal'tsev term")
        })?;
    }
    Ok(format!("{} algebras with terms, 3 without, slowest {slowest:.2?}", algs.len()))
}

fn criterion_2() -> Outcome {
    let imp = corpus::implication_algebra();
    ensure(maltsev_term(&imp, DEFAULT_CLOSURE_BUDGET).map_err(e2s)?.is_none(), || {
        "implication algebra has a Mal'tsev term".into()
    })?;
    let (p, q) = goursat_terms(&imp, DEFAULT_CLOSURE_BUDGET)
        .map_err(e2s)?
        .ok_or("implication algebra has no Goursat terms")?;
    ensure(verify_goursat_pair(&imp, &p, &q).map_err(e2s)?, || "Goursat pair fails".into())?;
    Ok(format!("p = {}, q = {}", p.term, q.term))
}

fn criterion_3() -> Outcome {
    let budget = SuiteBudget::default();
    let mut relations = 0;
    for (stem, alg) in maltsev_corpus() {
        let r = run_check_suite(&alg, 0, 1000, budget).map_err(e2s)?;
        ensure(r.rel_a.samples == 1000 && r.rel_a2.samples == 1000, || format!("{stem}: sample count"))?;
        for (label, rel) in [("A", &r.rel_a), ("A2", &r.rel_a2)] {
            ensure(rel.all_equivalences() && rel.all_difunctional(), || {
                format!("{stem} {label}: {} equivalences, {} difunctional of {}", rel.equivalences, rel.difunctional, rel.total())
            })?;
            relations += rel.total();
        }
        ensure(r.perm_a.all_permute && r.perm_a2.all_permute, || format!("{stem}: non-permuting pair"))?;
        ensure(r.pass(), || format!("{stem}: suite fails"))?;
    }
    let sl = Arc::new(corpus::meet_semilattice(2));
    let r = run_check_suite(&sl, 0, 1000, budget).map_err(e2s)?;
    let (_, rel) = r.rel_a.witness.ok_or("semilattice: no witness")?;
    let order: Vec<(Elem, Elem)> = vec![(0, 0), (0, 1), (1, 1)];
    ensure(rel.pairs().collect::<Vec<_>>() == order, || format!("semilattice witness {:?}", rel.pairs().collect::<Vec<_>>()))?;
    ensure(rel.is_reflexive().map_err(e2s)? && !rel.is_symmetric().map_err(e2s)?, || "witness shape".into())?;
    ensure(is_compatible(&sl, &rel).map_err(e2s)?, || "witness not compatible".into())?;
    Ok(format!("{relations} relations checked; semilattice order exhibited"))
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut totals = Vec::new();
    for (n, expected) in [(1, 1u64), (2, 4), (3, 531_441)] {
        let t = tally_maltsev(n).map_err(e2s)?;
        ensure(t.total == expected, || format!("n={n}: {} operations", t.total))?;
        ensure(t.exceptions() == 0, || format!("n={n}: exceptions {t:?}"))?;
        totals.push(t.total);
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(600), || format!("sweep took {t:?}"))?;
    Ok(format!("counts {totals:?}, zero exceptions, {t:.2?}"))
}

/// Normal subgroup `[M, N]` generated by commutators, as coset partition.
fn group_commutator(g: &GroupView, m: &[Elem], n: &[Elem]) -> Partition {
    let mut sub: BTreeSet<Elem> = BTreeSet::from([g.unit()]);
    for &a in m {
        for &b in n {
            sub.insert(g.mul(g.mul(a, b), g.mul(g.inv(a), g.inv(b))));
        }
    }
    loop {
        let grown: BTreeSet<Elem> = sub.iter().flat_map(|&a| sub.iter().map(move |&b| (a, b))).map(|(a, b)| g.mul(a, b)).collect();
        if grown.len() == sub.len() {
            break;
        }
        sub = grown;
    }
    let keys: Vec<BTreeSet<Elem>> = g.elements().map(|x| sub.iter().map(|&k| g.mul(x, k)).collect()).collect();
    Partition::from_keys(&keys)
}

fn criterion_5() -> Outcome {
    let mut pairs = 0;
    for (stem, alg) in corpus::groups() {
        let alg = Arc::new(alg);
        let g = GroupView::new(alg.clone()).map_err(e2s)?;
        let lattice = all_congruences(&alg, DEFAULT_LATTICE_BUDGET).map_err(e2s)?;
        let normal = |c: &Congruence| -> Vec<Elem> { g.elements().filter(|&x| c.related(g.unit(), x)).collect() };
        for r in &lattice {
            for s in &lattice {
                let smith = smith_commutator(&alg, r, s, DEFAULT_SEARCH_BUDGET).map_err(e2s)?;
                let oracle = group_commutator(&g, &normal(r), &normal(s));
                ensure(smith.partition() == &oracle, || {
                    format!("{stem} [{}, {}]: {} vs {}", r.partition(), s.partition(), smith.partition(), oracle)
                })?;
                pairs += 1;
            }
        }
        let nabla = Congruence::nabla(alg.clone());
        let top = smith_commutator(&alg, &nabla, &nabla, DEFAULT_SEARCH_BUDGET).map_err(e2s)?;
        ensure(top.is_delta() == g.is_abelian(), || format!("{stem}: [∇,∇] = {}", top.partition()))?;
        if stem == "s3" {
            ensure(top.partition().to_string() == "0,3,4|1,2,5", || format!("S3 [∇,∇] = {}", top.partition()))?;
        }
    }
    Ok(format!("{pairs} congruence pairs match the group commutator"))
}

/// Checks that `class(x, y) ↦ f(x, y)` is a well-defined isomorphism
/// from the direction group onto the group `target`.
fn direction_iso(alg: &Arc<FiniteAlgebra>, p: &TernaryOp, target: &GroupView, f: impl Fn(Elem, Elem) -> Elem) -> Result<(), String> {
    let d = direction(alg, p).map_err(e2s)?;
    let n = alg.size();
    let mut map: Vec<Option<Elem>> = vec![None; d.group.size()];
    for x in 0..n as Elem {
        for y in 0..n as Elem {
            let k = d.class(n, x, y) as usize;
            let v = f(x, y);
            match map[k] {
                Some(old) if old != v => return Err(format!("{}: class {k} maps to {old} and {v}", alg.name())),
                _ => map[k] = Some(v),
            }
        }
    }
    let map: Vec<Elem> = map.into_iter().collect::<Option<_>>().ok_or("unmapped class")?;
    let dg = GroupView::from_table("d", d.group.size(), d.group.table(d.group.op_index("+").map_err(e2s)?).to_vec())
        .map_err(e2s)?;
    ensure(map.iter().collect::<BTreeSet<_>>().len() == target.size() && map.len() == target.size(), || {
        format!("{}: not a bijection", alg.name())
    })?;
    ensure(dg.is_hom_to(target, &map), || format!("{}: not a homomorphism", alg.name()))
}

fn criterion_6() -> Outcome {
    let z5 = Arc::new(corpus::cyclic(5));
    let g5 = GroupView::new(z5.clone()).map_err(e2s)?;
    let p = TernaryOp::from_fn(5, |x, y, z| (x + 5 - y + z) % 5);
    direction_iso(&z5, &p, &g5, |x, y| (y + 5 - x) % 5)?;
    let mut count = 0;
    for (stem, alg) in corpus::algebras() {
        let alg = Arc::new(alg);
        let Ok(g) = GroupView::new(alg.clone()) else { continue };
        if !g.is_abelian() {
            continue;
        }
        let p = TernaryOp::from_fn(g.size(), |x, y, z| g.mul(g.mul(x, g.inv(y)), z));
        direction_iso(&alg, &p, &g, |x, y| g.mul(g.inv(x), y)).map_err(|e| format!("{stem}: {e}"))?;
        count += 1;
    }
    Ok(format!("d(Z5) = Z5 via y - x; {count} abelian groups are their own direction"))
}

fn criterion_7() -> Outcome {
    let z6 = Arc::new(corpus::cyclic(6));
    let cong = |alg: &Arc<FiniteAlgebra>, s: &str| Congruence::parse(alg.clone(), s).map_err(e2s);
    let d = decompose(&z6, &cong(&z6, "0,2,4|1,3,5")?, &cong(&z6, "0,3|1,4|2,5")?).map_err(e2s)?;
    let z2z3 = Arc::new(product(&corpus::cyclic(2), &corpus::cyclic(3)).map_err(e2s)?);
    ensure(d.left.size() == 2 && d.right.size() == 3, || "factor sizes".into())?;
    // the factors are Z2 and Z3 with their own labels; compare to the
    // standard product through the unique label maps
    let to_std = |alg: &FiniteAlgebra, m: usize| -> Result<Vec<Elem>, String> {
        let one = (0..m as Elem).find(|&a| a != 0).unwrap();
        let plus = alg.op_index("+").map_err(e2s)?;
        let mut map = vec![0; m];
        let mut cur = 0;
        for k in 0..m {
            map[cur as usize] = k as Elem;
            cur = alg.apply2(plus, cur, one);
        }
        Ok(map)
    };
    let (l, r) = (to_std(&d.left, 2)?, to_std(&d.right, 3)?);
    let composed: Vec<Elem> = d.iso.map.iter().map(|&v| l[(v / 3) as usize] * 3 + r[(v % 3) as usize]).collect();
    let iso = Homomorphism::checked(z6.clone(), z2z3, composed).map_err(e2s)?;
    ensure(iso.is_injective() && iso.is_surjective(), || "not a bijection".into())?;

    let chain = Arc::new(corpus::chain_lattice(3));
    let cases = [
        (z6.clone(), "0,2,4|1,3,5", "0,2,4|1,3,5", Hypothesis::Meet),
        (chain.clone(), "0,1|2", "0|1,2", Hypothesis::Permute),
        (z6.clone(), "0|1|2|3|4|5", "0|1|2|3|4|5", Hypothesis::Join),
    ];
    for (alg, r, s, want) in cases {
        match decompose(&alg, &cong(&alg, r)?, &cong(&alg, s)?) {
            Err(Error::HypothesisFailed { which }) if which == want => {}
            other => return Err(format!("{} {r} {s}: expected {want}, got {:?}", alg.name(), other.map(|_| ()))),
        }
    }
    Ok("Z6 = Z2 x Z3 verified; meet, permute and join failures reported".into())
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let group = |a: FiniteAlgebra| GroupView::new(Arc::new(a)).map_err(e2s);
    let (z2, z3) = (group(corpus::cyclic(2))?, group(corpus::cyclic(3))?);

    let classes = ext_classes(&z2, &z2, &Action::trivial(&z2, &z2), DEFAULT_COCHAIN_BUDGET).map_err(e2s)?;
    ensure(classes.len() == 2, || format!("{} classes over (Z2, Z2)", classes.len()))?;
    ensure(classes.sum == vec![0, 1, 1, 0], || format!("class sums {:?}", classes.sum))?;
    let exts: Vec<_> = (0..2).map(|i| classes.extension(i)).collect::<Result<_, _>>().map_err(e2s)?;
    let class_of = |e: &extensions::Extension| -> Result<usize, String> {
        classes.class_of(&cocycle_oracle(e).map_err(e2s)?.table).ok_or_else(|| "cocycle outside the classes".into())
    };
    for i in 0..2 {
        for j in 0..2 {
            let s = baer_sum(&exts[i], &exts[j]).map_err(e2s)?;
            ensure(class_of(&s)? == classes.sum[i * 2 + j], || format!("sum {i} + {j}"))?;
        }
        let inv = baer_inverse(&exts[i]).map_err(e2s)?;
        ensure(inv.check_gamma(&exts[i]).map_err(e2s)?, || format!("gamma for class {i}"))?;
        let k = class_of(&inv.extension)?;
        ensure(classes.sum[i * 2 + k] == 0, || format!("inverse of class {i}"))?;
    }
    // the bundled Z4 and Klein extensions
    let fixtures: Vec<_> = corpus::extensions();
    let get = |stem: &str| fixtures.iter().find(|(s, _)| *s == stem).map(|(_, e)| e.clone()).unwrap();
    let (z4, klein) = (get("ext_q2_a2_z4"), get("ext_q2_a2_split"));
    ensure(class_of(&z4)? == 1 && class_of(&klein)? == 0, || "fixture classes".into())?;
    let twice = baer_sum(&z4, &z4).map_err(e2s)?;
    ensure(equiv_extensions(&twice, &klein).map_err(e2s)?.is_some(), || "Z4 + Z4 is not split".into())?;

    let mut counts = Vec::new();
    let inversion = Action::new(&z2, &z3, vec![0, 1, 2, 0, 2, 1]).map_err(e2s)?;
    for act in [Action::trivial(&z2, &z3), inversion] {
        let c = ext_classes(&z2, &z3, &act, DEFAULT_COCHAIN_BUDGET).map_err(e2s)?;
        let z = cocycles(&z2, &z3, &act, DEFAULT_COCHAIN_BUDGET).map_err(e2s)?.len();
        let b: BTreeSet<_> = coboundaries(&z2, &z3, &act, DEFAULT_COCHAIN_BUDGET).map_err(e2s)?.into_iter().collect();
        ensure(c.len() * b.len() == z, || format!("{} classes, |Z| = {z}, |B| = {}", c.len(), b.len()))?;
        counts.push(c.len());
    }
    for stem in ["ext_q2_a3_z6", "ext_q2_a3_s3"] {
        let e = get(stem);
        let c = ext_classes(&z2, &z3, &action_of(&e).map_err(e2s)?, DEFAULT_COCHAIN_BUDGET).map_err(e2s)?;
        ensure(c.class_of(&cocycle_oracle(&e).map_err(e2s)?.table) == Some(0), || format!("{stem} is not split"))?;
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(60), || format!("took {t:?}"))?;
    Ok(format!("(Z2,Z2): 2 classes forming Z2; (Z2,Z3): {counts:?} classes; {t:.2?}"))
}

fn criterion_9() -> Outcome {
    let budget = SuiteBudget::default();
    let mut algs = maltsev_corpus();
    algs.push(("implication2", Arc::new(corpus::implication_algebra())));
    let mut squares = 0;
    for (stem, alg) in algs {
        let r = check_squares(&alg, 0, 200, 50, budget).map_err(e2s)?;
        ensure(r.goursat, || format!("{stem}: not Goursat"))?;
        ensure(!r.maltsev || r.regular.failed == 0, || format!("{stem}: regular pushout {:?}", r.regular.first_counterexample))?;
        ensure(r.goursat_pushout.failed == 0, || format!("{stem}: Goursat pushout {:?}", r.goursat_pushout.first_counterexample))?;
        ensure(r.three_by_three.failed == 0 && r.three_by_three.passed == 50, || {
            format!("{stem}: 3x3 {:?}", r.three_by_three.first_counterexample)
        })?;
        squares += r.goursat_pushout.passed;
    }
    Ok(format!("{squares} split squares and all 3x3 diagrams pass"))
}

fn criterion_10() -> Outcome {
    let corpus_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/corpus");
    let f = |name: &str| corpus_dir.join(name).to_string_lossy().into_owned();
    let runs: Vec<Vec<String>> = vec![
        vec!["check".into(), f("s3.json"), "--seed".into(), "11".into(), "--samples".into(), "200".into()],
        vec!["check".into(), f("semilattice3.json"), "--seed".into(), "5".into(), "--samples".into(), "200".into()],
        vec!["check-squares".into(), f("d4.json"), "--seed".into(), "3".into(), "--count".into(), "40".into(), "--diagrams".into(), "20".into()],
        vec!["commutator".into(), f("s3.json"), "--r".into(), "0,1,2,3,4,5".into(), "--s".into(), "0,3,4|1,2,5".into()],
        vec!["direction".into(), f("z4.json")],
        vec!["ext-classes".into(), "--q".into(), f("z3.json"), "--a".into(), f("z3.json")],
        vec!["baer-sum".into(), f("ext_q2_a2_z4.json"), f("ext_q2_a2_split.json")],
        vec!["enum-maltsev".into(), "--size".into(), "2".into()],
    ];
    let bin = env!("CARGO_BIN_EXE_malcat");
    for args in &runs {
        let once = || Command::new(bin).args(args).output().map_err(|e| e.to_string());
        let (a, b) = (once()?, once()?);
        ensure(a.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&a.stderr)))?;
        ensure(a.stdout == b.stdout && !a.stdout.is_empty(), || format!("{args:?}: output differs"))?;
    }
    Ok(format!("{} commands byte-identical across runs", runs.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("term search", criterion_1),
        ("Goursat separation", criterion_2),
        ("relation harness", criterion_3),
        ("Mal'tsev enumeration", criterion_4),
        ("commutator oracle", criterion_5),
        ("direction", criterion_6),
        ("decomposition", criterion_7),
        ("Baer sums", criterion_8),
        ("pushouts and 3x3", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail}) [{t:.2?}]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} {name}: FAIL ({detail}) [{t:.2?}]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
