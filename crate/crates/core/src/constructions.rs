//! Split squares and their pushout checks, factor-congruence decomposition,
//! regular images and the denormalized 3x3 harness.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::Serialize;

use crate::algebra::{direct_power, product, quotient, Elem, FiniteAlgebra, Homomorphism};
use crate::congruence::{cg_partition, Congruence};
use crate::error::{Error, Result};
use crate::partition::Partition;
use crate::relcalc::{image_relation, BinRel};

/// The three hypotheses of the factor-congruence decomposition, in the
/// order they are checked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Hypothesis {
    Meet,
    Permute,
    Join,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::Meet => "meet",
            Hypothesis::Permute => "permute",
            Hypothesis::Join => "join",
        })
    }
}

/// ```text
///   X' --x--> X
///   |^        |^
///  f' s'      f s
///   v|        v|
///   Y' --y--> Y
/// ```
/// with `x`, `y` surjective and `f'∘s' = id`, `f∘s = id`.
#[derive(Clone, Debug)]
pub struct SplitSquare {
    pub x: Homomorphism,
    pub y: Homomorphism,
    pub fp: Homomorphism,
    pub f: Homomorphism,
    pub sp: Homomorphism,
    pub s: Homomorphism,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidSquare(msg.into())
}

fn same(a: &Arc<FiniteAlgebra>, b: &Arc<FiniteAlgebra>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl SplitSquare {
    pub fn new(
        x: Homomorphism,
        y: Homomorphism,
        fp: Homomorphism,
        f: Homomorphism,
        sp: Homomorphism,
        s: Homomorphism,
    ) -> Result<Self> {
        let sq = SplitSquare { x, y, fp, f, sp, s };
        sq.validate()?;
        Ok(sq)
    }

    pub fn validate(&self) -> Result<()> {
        let SplitSquare { x, y, fp, f, sp, s } = self;
        let shapes = [
            (same(&x.dom, &fp.dom), "x and f' start at X'"),
            (same(&x.cod, &f.dom), "x ends where f starts"),
            (same(&fp.cod, &y.dom), "f' ends where y starts"),
            (same(&f.cod, &y.cod), "f and y end at Y"),
            (same(&sp.dom, &fp.cod) && same(&sp.cod, &fp.dom), "s' goes Y' -> X'"),
            (same(&s.dom, &f.cod) && same(&s.cod, &f.dom), "s goes Y -> X"),
        ];
        if let Some((_, msg)) = shapes.iter().find(|(ok, _)| !ok) {
            return Err(invalid(*msg));
        }
        for (h, name) in [(x, "x"), (y, "y"), (fp, "f'"), (f, "f"), (sp, "s'"), (s, "s")] {
            if !h.is_homomorphism() {
                return Err(invalid(format!("{name} is not a homomorphism")));
            }
        }
        if !x.is_surjective() || !y.is_surjective() {
            return Err(invalid("horizontal maps must be surjective"));
        }
        if (0..sp.dom.size() as Elem).any(|b| fp.apply(sp.apply(b)) != b) {
            return Err(invalid("f'∘s' is not the identity"));
        }
        if (0..s.dom.size() as Elem).any(|b| f.apply(s.apply(b)) != b) {
            return Err(invalid("f∘s is not the identity"));
        }
        if (0..x.dom.size() as Elem).any(|a| y.apply(fp.apply(a)) != f.apply(x.apply(a))) {
            return Err(invalid("y∘f' differs from f∘x"));
        }
        if (0..y.dom.size() as Elem).any(|b| x.apply(sp.apply(b)) != s.apply(y.apply(b))) {
            return Err(invalid("x∘s' differs from s∘y"));
        }
        Ok(())
    }

    /// A random split square over powers of `alg`: `X' = A^(k+1)`,
    /// `Y' = A^k`, `f'` drops the last coordinate and `s'` repeats it;
    /// `Y = Y'/φ` and `X = X'/θ` for random congruences with
    /// `s'(φ) ⊆ θ ⊆ Eq[y∘f']`.
    pub fn random(alg: &FiniteAlgebra, rng: &mut impl Rng) -> Result<Self> {
        let n = alg.size();
        let k = if n.pow(3) <= 64 { rng.gen_range(1..=2) } else { 1 };
        let yp = Arc::new(direct_power(alg, k)?);
        let xp = Arc::new(direct_power(alg, k + 1)?);
        let (nyp, nxp) = (yp.size(), xp.size());
        let fp_map: Vec<Elem> = (0..nxp as Elem).map(|a| a / n as Elem).collect();
        let sp_map: Vec<Elem> = (0..nyp as Elem).map(|b| b * n as Elem + b % n as Elem).collect();

        let phi_pairs = random_pairs(rng, nyp, 0..=2, |_, _| true);
        let phi = cg_partition(&yp, &phi_pairs)?;
        let mut theta_pairs: Vec<(Elem, Elem)> = phi_pairs
            .iter()
            .map(|&(a, b)| (sp_map[a as usize], sp_map[b as usize]))
            .collect();
        let down = |a: Elem| phi.label(fp_map[a as usize]);
        theta_pairs.extend(random_pairs(rng, nxp, 0..=2, |a, b| down(a) == down(b)));
        let theta = cg_partition(&xp, &theta_pairs)?;

        let (yq, y) = quotient(&yp, &phi)?;
        let (xq, x) = quotient(&xp, &theta)?;
        let reps_x = theta.representatives();
        let f_map = reps_x.iter().map(|&a| y.apply(fp_map[a as usize])).collect();
        let s_map = phi
            .representatives()
            .iter()
            .map(|&b| x.apply(sp_map[b as usize]))
            .collect();
        SplitSquare::new(
            x,
            y,
            Homomorphism::new(xp.clone(), yp.clone(), fp_map)?,
            Homomorphism::new(xq.clone(), yq.clone(), f_map)?,
            Homomorphism::new(yp, xp, sp_map)?,
            Homomorphism::new(yq, xq, s_map)?,
        )
    }
}

/// A random number (drawn from `count`) of random pairs `(a, b)`, `a != b`,
/// satisfying `keep`; gives up quietly when few pairs qualify.
fn random_pairs(
    rng: &mut impl Rng,
    n: usize,
    count: std::ops::RangeInclusive<usize>,
    keep: impl Fn(Elem, Elem) -> bool,
) -> Vec<(Elem, Elem)> {
    let count = rng.gen_range(count);
    let mut out = Vec::with_capacity(count);
    if n < 2 {
        return out;
    }
    let mut tries = 0;
    while out.len() < count && tries < 64 * (count + 1) {
        tries += 1;
        let a = rng.gen_range(0..n) as Elem;
        let b = rng.gen_range(0..n) as Elem;
        if a != b && keep(a, b) {
            out.push((a, b));
        }
    }
    out
}

/// A verdict with a counterexample when negative.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Verdict<W> {
    pub holds: bool,
    pub witness: Option<W>,
}

impl<W> Verdict<W> {
    fn from_witness(witness: Option<W>) -> Self {
        Verdict {
            holds: witness.is_none(),
            witness,
        }
    }
}

/// Is the comparison `X' → Y' ×_Y X`, `a ↦ (f'(a), x(a))`, surjective?
/// The witness is a pullback pair `(y', x)` that is not hit.
pub fn regular_pushout_check(sq: &SplitSquare) -> Result<Verdict<(Elem, Elem)>> {
    sq.validate()?;
    let nx = sq.x.cod.size();
    let mut hit = vec![false; sq.fp.cod.size() * nx];
    for a in 0..sq.x.dom.size() as Elem {
        hit[sq.fp.apply(a) as usize * nx + sq.x.apply(a) as usize] = true;
    }
    let witness = (0..sq.y.dom.size() as Elem)
        .flat_map(|b| (0..nx as Elem).map(move |c| (b, c)))
        .find(|&(b, c)| sq.y.apply(b) == sq.f.apply(c) && !hit[b as usize * nx + c as usize]);
    Ok(Verdict::from_witness(witness))
}

/// Is `x × x : Eq[f'] → Eq[f]` surjective? The witness is a pair of
/// `Eq[f]` that is not hit.
pub fn goursat_pushout_check(sq: &SplitSquare) -> Result<Verdict<(Elem, Elem)>> {
    sq.validate()?;
    let nx = sq.x.cod.size();
    let mut hit = BinRel::empty(nx, nx);
    let top = sq.fp.kernel();
    for block in top.blocks() {
        for &a in &block {
            for &b in &block {
                hit.insert(sq.x.apply(a), sq.x.apply(b));
            }
        }
    }
    let witness = BinRel::from_partition(&sq.f.kernel())
        .pairs()
        .find(|&(a, b)| !hit.contains(a, b));
    Ok(Verdict::from_witness(witness))
}

/// Each hypothesis with its verdict, in checking order.
pub fn hypotheses(r: &Congruence, s: &Congruence) -> Result<Vec<(Hypothesis, bool)>> {
    Ok(vec![
        (Hypothesis::Meet, r.meet(s)?.is_delta()),
        (Hypothesis::Permute, r.permutes_with(s)?),
        (Hypothesis::Join, r.join(s)?.is_nabla()),
    ])
}

/// The isomorphism `X → X/R × X/S`, `a ↦ ([a]_R, [a]_S)`.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub left: Arc<FiniteAlgebra>,
    pub right: Arc<FiniteAlgebra>,
    pub iso: Homomorphism,
}

pub fn decompose(x: &Arc<FiniteAlgebra>, r: &Congruence, s: &Congruence) -> Result<Decomposition> {
    for c in [r, s] {
        if !same(x, c.algebra()) {
            return Err(Error::AlgebraMismatch);
        }
    }
    if let Some((which, _)) = hypotheses(r, s)?.into_iter().find(|(_, ok)| !ok) {
        return Err(Error::HypothesisFailed { which });
    }
    let (left, _) = quotient(x, r.partition())?;
    let (right, _) = quotient(x, s.partition())?;
    let prod = Arc::new(product(&left, &right)?);
    let nr = right.size() as Elem;
    let map = x
        .elements()
        .map(|a| r.partition().label(a) * nr + s.partition().label(a))
        .collect();
    let iso = Homomorphism::new(x.clone(), prod, map)?;
    if !iso.is_homomorphism() || !iso.is_injective() || !iso.is_surjective() {
        return Err(Error::InternalAxiomFailure("factor map is not an isomorphism".into()));
    }
    Ok(Decomposition { left, right, iso })
}

/// Is the regular image `f∘R∘f°` an equivalence relation? The witness
/// breaks transitivity.
pub fn goursat_image_check(f: &Homomorphism, r: &Congruence) -> Result<Verdict<(Elem, Elem, Elem)>> {
    let image = image_relation(&f.map, f.cod.size(), r.rel())?;
    Ok(Verdict::from_witness(image.transitivity_witness()))
}

/// Which rows of a 3x3 diagram to examine.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rows {
    Upper,
    Lower,
    Both,
}

/// The denormalized 3x3 diagram built on an algebra `A` from congruences
/// `α ≤ γ`, `β ≤ γ`:
///
/// ```text
///   Eq[φ] ⇉ Eq[f] --h̄--> Eq[g]
///     ⇊       ⇊            ⇊
///   Eq[h] ⇉   A  ---h--->  C
///     φ       f            g
///     K   ⇉   B  ---k--->  D
/// ```
/// with `f = A → A/α`, `h = A → A/β`, `g`, `k` the induced maps to
/// `D = A/γ`, `K = (f×f)(Eq[h])` and `φ` the corestriction of `f×f`.
/// Columns and the middle row are exact by construction.
#[derive(Clone, Debug)]
pub struct ThreeByThree {
    pub algebra: Arc<FiniteAlgebra>,
    pub alpha: Partition,
    pub beta: Partition,
    pub gamma: Partition,
    pub f: Vec<Elem>,
    pub h: Vec<Elem>,
    pub g: Vec<Elem>,
    pub k: Vec<Elem>,
    /// Pairs of `Eq[h]`, in lexicographic order.
    pub eq_h: Vec<(Elem, Elem)>,
    /// The distinct pairs of `K ⊆ B²`, sorted.
    pub kk: Vec<(Elem, Elem)>,
    /// `φ(i)` indexes `kk` for the `i`-th pair of `eq_h`.
    pub phi: Vec<usize>,
    /// Pairs of `Eq[f]`, lexicographic.
    pub eq_f: Vec<(Elem, Elem)>,
    /// `h̄ = h × h` on `eq_f`.
    pub hbar: Vec<(Elem, Elem)>,
}

fn pairs_of(p: &Partition) -> Vec<(Elem, Elem)> {
    BinRel::from_partition(p).pairs().collect()
}

impl ThreeByThree {
    pub fn new(algebra: Arc<FiniteAlgebra>, alpha: Partition, beta: Partition, gamma: Partition) -> Result<Self> {
        for p in [&alpha, &beta, &gamma] {
            if p.len() != algebra.size() {
                return Err(Error::InvalidDiagram("partition size differs from the algebra".into()));
            }
            if !algebra.is_compatible_partition(p) {
                return Err(Error::InvalidDiagram("partition is not a congruence".into()));
            }
        }
        if !alpha.leq(&gamma) || !beta.leq(&gamma) {
            return Err(Error::InvalidDiagram("γ must contain α and β".into()));
        }
        let f = alpha.labels().to_vec();
        let h = beta.labels().to_vec();
        let g = beta.representatives().iter().map(|&a| gamma.label(a)).collect();
        let k = alpha.representatives().iter().map(|&a| gamma.label(a)).collect();
        let eq_h = pairs_of(&beta);
        let mut kk: Vec<(Elem, Elem)> = eq_h.iter().map(|&(a, b)| (f[a as usize], f[b as usize])).collect();
        kk.sort_unstable();
        kk.dedup();
        let phi = eq_h
            .iter()
            .map(|&(a, b)| kk.binary_search(&(f[a as usize], f[b as usize])).expect("pair in K"))
            .collect();
        let eq_f = pairs_of(&alpha);
        let hbar = eq_f.iter().map(|&(a, b)| (h[a as usize], h[b as usize])).collect();
        Ok(ThreeByThree {
            algebra,
            alpha,
            beta,
            gamma,
            f,
            h,
            g,
            k,
            eq_h,
            kk,
            phi,
            eq_f,
            hbar,
        })
    }

    /// Random `α`, `β` and `γ ⊇ α ∨ β`; half the time `γ = α ∨ β`.
    pub fn random(algebra: &Arc<FiniteAlgebra>, rng: &mut impl Rng) -> Result<Self> {
        let n = algebra.size();
        let alpha = cg_partition(algebra, &random_pairs(rng, n, 0..=2, |_, _| true))?;
        let beta = cg_partition(algebra, &random_pairs(rng, n, 0..=2, |_, _| true))?;
        let joined = alpha.join(&beta);
        let gamma = if rng.gen_bool(0.5) {
            joined
        } else {
            let mut pairs: Vec<(Elem, Elem)> = BinRel::from_partition(&joined).pairs().collect();
            pairs.extend(random_pairs(rng, n, 1..=1, |_, _| true));
            cg_partition(algebra, &pairs)?
        };
        ThreeByThree::new(algebra.clone(), alpha, beta, gamma)
    }

    fn block_count_of(&self, labels: &[Elem]) -> usize {
        labels.iter().max().map_or(0, |&m| m as usize + 1)
    }

    /// `K ⇉ B → D`: `k` is surjective and `K = Eq[k]`.
    pub fn lower_exact(&self) -> bool {
        let nd = self.gamma.block_count();
        let surjective = crate::algebra::is_surjective(&self.k, nd);
        let nb = self.block_count_of(&self.f);
        let eq_k = (0..nb as Elem)
            .flat_map(|a| (0..nb as Elem).map(move |b| (a, b)))
            .filter(|&(a, b)| self.k[a as usize] == self.k[b as usize])
            .count();
        // K ⊆ Eq[k] always, so equal sizes mean equality
        surjective && self.kk.len() == eq_k
    }

    /// `Eq[φ] ⇉ Eq[f] → Eq[g]`: `h̄` is surjective onto `Eq[g]` and
    /// `(h̄₀, h̄₁)` maps `Eq[φ]` onto the kernel pair of `h̄`.
    pub fn upper_exact(&self) -> bool {
        let nc = self.beta.block_count();
        let eq_g: Vec<(Elem, Elem)> = (0..nc as Elem)
            .flat_map(|a| (0..nc as Elem).map(move |b| (a, b)))
            .filter(|&(a, b)| self.g[a as usize] == self.g[b as usize])
            .collect();
        let mut hits: std::collections::HashMap<(Elem, Elem), u64> = std::collections::HashMap::new();
        for &p in &self.hbar {
            *hits.entry(p).or_default() += 1;
        }
        let surjective = eq_g.iter().all(|p| hits.contains_key(p));
        // (h̄₀, h̄₁) is injective on Eq[φ] with image inside Eq[h̄]; compare sizes
        let mut fibres = vec![0u64; self.kk.len()];
        for &i in &self.phi {
            fibres[i] += 1;
        }
        let eq_phi: u64 = fibres.iter().map(|m| m * m).sum();
        let eq_hbar: u64 = hits.values().map(|m| m * m).sum();
        surjective && eq_phi == eq_hbar
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RowReport {
    pub upper: Option<bool>,
    pub lower: Option<bool>,
}

pub fn three_by_three_check(d: &ThreeByThree, rows: Rows) -> RowReport {
    RowReport {
        upper: matches!(rows, Rows::Upper | Rows::Both).then(|| d.upper_exact()),
        lower: matches!(rows, Rows::Lower | Rows::Both).then(|| d.lower_exact()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn arc(a: FiniteAlgebra) -> Arc<FiniteAlgebra> {
        Arc::new(a)
    }

    #[test]
    fn z6_splits_as_z2_times_z3() {
        let z6 = arc(corpus::cyclic(6));
        let r = Congruence::parse(z6.clone(), "0,2,4|1,3,5").unwrap();
        let s = Congruence::parse(z6.clone(), "0,3|1,4|2,5").unwrap();
        let d = decompose(&z6, &r, &s).unwrap();
        assert_eq!((d.left.size(), d.right.size()), (2, 3));
        // CRT: a ↦ (a mod 2, a mod 3)
        for a in 0..6 {
            assert_eq!(d.iso.apply(a), (a % 2) * 3 + a % 3);
        }
    }

    #[test]
    fn decompose_reports_the_failed_hypothesis() {
        let z4 = arc(corpus::cyclic(4));
        let r = Congruence::parse(z4.clone(), "0,2|1,3").unwrap();
        let err = decompose(&z4, &r, &r).unwrap_err();
        assert_eq!(err, Error::HypothesisFailed { which: Hypothesis::Meet });
        let d = Congruence::delta(z4.clone());
        assert_eq!(
            decompose(&z4, &d, &d).unwrap_err(),
            Error::HypothesisFailed { which: Hypothesis::Join }
        );
        let sl = arc(corpus::meet_semilattice(3));
        let a = Congruence::parse(sl.clone(), "0,1|2").unwrap();
        let b = Congruence::parse(sl.clone(), "0|1,2").unwrap();
        assert_eq!(
            decompose(&sl, &a, &b).unwrap_err(),
            Error::HypothesisFailed { which: Hypothesis::Permute }
        );
    }

    #[test]
    fn delta_nabla_decomposition() {
        let s3 = arc(corpus::s3());
        let d = decompose(&s3, &Congruence::delta(s3.clone()), &Congruence::nabla(s3.clone())).unwrap();
        assert_eq!(d.right.size(), 1);
    }

    fn projection_square() -> SplitSquare {
        // X' = Z2², x = second projection, f' = first projection, Y = 1
        let z2 = arc(corpus::cyclic(2));
        let v = arc(corpus::z2xz2());
        let one = arc(corpus::trivial());
        SplitSquare::new(
            Homomorphism::new(v.clone(), z2.clone(), vec![0, 1, 0, 1]).unwrap(),
            Homomorphism::new(z2.clone(), one.clone(), vec![0, 0]).unwrap(),
            Homomorphism::new(v.clone(), z2.clone(), vec![0, 0, 1, 1]).unwrap(),
            Homomorphism::new(z2.clone(), one.clone(), vec![0, 0]).unwrap(),
            Homomorphism::new(z2.clone(), v.clone(), vec![0, 2]).unwrap(),
            Homomorphism::new(one, z2, vec![0]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn projection_square_is_a_regular_pushout() {
        let sq = projection_square();
        assert!(regular_pushout_check(&sq).unwrap().holds);
        assert!(goursat_pushout_check(&sq).unwrap().holds);
    }

    #[test]
    fn square_validation_rejects_bad_sections() {
        let mut sq = projection_square();
        sq.sp.map = vec![0, 1];
        assert!(matches!(sq.validate(), Err(Error::InvalidSquare(_))));
    }

    #[test]
    fn random_squares_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for alg in [corpus::cyclic(3), corpus::meet_semilattice(2), corpus::s3()] {
            for _ in 0..10 {
                let sq = SplitSquare::random(&alg, &mut rng).unwrap();
                sq.validate().unwrap();
            }
        }
    }

    #[test]
    fn regular_image_under_z4_to_z2() {
        let z4 = arc(corpus::cyclic(4));
        let z2 = arc(corpus::cyclic(2));
        let f = Homomorphism::checked(z4.clone(), z2, vec![0, 1, 0, 1]).unwrap();
        for r in crate::congruence::all_congruences(&z4, 100).unwrap() {
            assert!(goursat_image_check(&f, &r).unwrap().holds);
        }
        let id = Homomorphism::identity(z4.clone());
        let r = Congruence::parse(z4, "0,2|1,3").unwrap();
        assert!(goursat_image_check(&id, &r).unwrap().holds);
    }

    #[test]
    fn identity_diagram_is_exact() {
        let z4 = arc(corpus::cyclic(4));
        let d = Partition::discrete(4);
        let t = ThreeByThree::new(z4, d.clone(), d.clone(), d).unwrap();
        assert_eq!(
            three_by_three_check(&t, Rows::Both),
            RowReport {
                upper: Some(true),
                lower: Some(true)
            }
        );
    }

    /// Lower row exact iff αβα = γ; upper row exact iff βαβ = γ.
    fn relational_oracle(t: &ThreeByThree) -> (bool, bool) {
        let a = BinRel::from_partition(&t.alpha);
        let b = BinRel::from_partition(&t.beta);
        let g = BinRel::from_partition(&t.gamma);
        let aba = a.compose(&b).unwrap().compose(&a).unwrap();
        let bab = b.compose(&a).unwrap().compose(&b).unwrap();
        (bab == g, aba == g)
    }

    #[test]
    fn exactness_matches_relational_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for alg in [corpus::cyclic(6), corpus::meet_semilattice(3), corpus::chain_lattice(3), corpus::s3()] {
            let alg = arc(alg);
            for _ in 0..30 {
                let t = ThreeByThree::random(&alg, &mut rng).unwrap();
                let (upper, lower) = relational_oracle(&t);
                assert_eq!(t.upper_exact(), upper);
                assert_eq!(t.lower_exact(), lower);
            }
        }
    }

    #[test]
    fn diagram_needs_gamma_above() {
        let z4 = arc(corpus::cyclic(4));
        let a = Partition::parse(4, "0,2|1,3").unwrap();
        let err = ThreeByThree::new(z4, a, Partition::discrete(4), Partition::discrete(4)).unwrap_err();
        assert!(matches!(err, Error::InvalidDiagram(_)));
    }
}
