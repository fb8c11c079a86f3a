//! Free superconvex constructions over a finite generator set.
//!
//! A free point is a convex weight vector. The greedy split peels a dyadic
//! weight vector off any weight vector, lambda = rho/2 + mu/2; iterating it
//! yields a level sequence of dyadic vectors whose 2^-(l+1)-weighted sum
//! reconstructs lambda. Each dyadic level is realized as a full binary
//! midpoint tree, which turns any weight vector into a normal form and lets
//! any body evaluate superconvex combinations through its truncated
//! infinitary midpoint.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use num::{One, Signed, Zero};

use crate::body::{depth_for, ConvexBody};
use crate::exact::{pow2_inv, Rational, WeightFunction};
use crate::stream::{Digit, DigitStream};
use crate::term::{LevelProvider, NormalForm, Term};

/// Errors from the free-construction layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FreeError {
    /// The generator is not part of the declared universe.
    UnknownGenerator(String),
    /// A point assignment misses a generator in the weight support.
    MissingAssignment(String),
}

impl fmt::Display for FreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FreeError::UnknownGenerator(g) => write!(f, "generator `{g}` not in the universe"),
            FreeError::MissingAssignment(g) => write!(f, "no point assigned to generator `{g}`"),
        }
    }
}

impl std::error::Error for FreeError {}

/// A declared generator universe; insertion of generators checks membership.
#[derive(Clone, Debug)]
pub struct FreeSpace {
    universe: BTreeSet<String>,
}

impl FreeSpace {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(gens: I) -> FreeSpace {
        FreeSpace { universe: gens.into_iter().map(Into::into).collect() }
    }

    pub fn universe(&self) -> impl Iterator<Item = &str> {
        self.universe.iter().map(|s| s.as_str())
    }

    /// Insertion of generators: the Dirac weight at `g`.
    pub fn dirac(&self, g: &str) -> Result<WeightFunction, FreeError> {
        if self.universe.contains(g) {
            Ok(WeightFunction::dirac(g))
        } else {
            Err(FreeError::UnknownGenerator(g.to_string()))
        }
    }
}

// ---------------------------------------------------------------------------
// Greedy dyadic decomposition
// ---------------------------------------------------------------------------

/// Result of one greedy split: lambda = rho/2 + mu/2 exactly, with rho
/// dyadic. `steps` counts greedy iterations; termination for rational input
/// is observed, not bounded a priori.
#[derive(Clone, Debug)]
pub struct Decomposition {
    pub rho: WeightFunction,
    pub mu: WeightFunction,
    pub steps: u64,
}

/// Splits a weight vector as lambda = rho/2 + mu/2 with rho dyadic.
///
/// Greedy loop: starting from mu = 2*lambda and rho = 0, repeatedly find the
/// smallest t >= 0 such that 2^-t fits under some entry of mu, move 2^-t
/// from that entry of mu to the same entry of rho (lowest generator first
/// on ties), and stop as soon as rho sums to 1.
pub fn decompose(lambda: &WeightFunction) -> Decomposition {
    let gens: Vec<String> = lambda.support().map(|s| s.to_string()).collect();
    let mut mu: BTreeMap<String, Rational> =
        lambda.iter().map(|(g, w)| (g.to_string(), w * Rational::from_integer(2.into()))).collect();
    let mut rho: BTreeMap<String, Rational> = BTreeMap::new();
    let mut rho_sum = Rational::zero();
    let mut steps = 0u64;
    while !rho_sum.is_one() {
        let max = mu.values().max().expect("weights are non-empty").clone();
        // smallest t >= 0 with 2^-t <= max
        let mut t = 0u32;
        while pow2_inv(t) > max {
            t += 1;
        }
        let chunk = pow2_inv(t);
        let g = gens
            .iter()
            .find(|g| mu.get(*g).map_or(false, |m| *m >= chunk))
            .expect("some entry admits the chunk")
            .clone();
        *mu.get_mut(&g).unwrap() -= &chunk;
        *rho.entry(g).or_insert_with(Rational::zero) += &chunk;
        rho_sum += &chunk;
        steps += 1;
    }
    let rho = WeightFunction::new(rho).expect("greedy masses sum to one");
    let mu = WeightFunction::new(mu).expect("residual masses sum to one");
    debug_assert!(rho.is_dyadic());
    Decomposition { rho, mu, steps }
}

// ---------------------------------------------------------------------------
// Level sequences
// ---------------------------------------------------------------------------

/// The iterated decomposition of a weight vector: level l is the dyadic
/// vector rho^l where lambda^0 = lambda and lambda^l = rho^l/2 +
/// lambda^(l+1)/2. Reconstruction: |sum_{l<L} 2^-(l+1) rho^l_g - lambda_g|
/// <= 2^-L for every generator g and every L.
pub struct LevelSequence {
    source: WeightFunction,
    state: Mutex<LevelState>,
}

struct LevelState {
    rhos: Vec<WeightFunction>,
    next_lambda: WeightFunction,
    steps: Vec<u64>,
}

impl LevelSequence {
    pub fn source(&self) -> &WeightFunction {
        &self.source
    }

    /// The dyadic vector at level l.
    pub fn level(&self, l: usize) -> WeightFunction {
        let mut st = self.state.lock().unwrap();
        while st.rhos.len() <= l {
            let d = decompose(&st.next_lambda);
            st.rhos.push(d.rho);
            st.steps.push(d.steps);
            st.next_lambda = d.mu;
        }
        st.rhos[l].clone()
    }

    /// Greedy iteration counts per computed level so far.
    pub fn step_counts(&self, levels: usize) -> Vec<u64> {
        for l in 0..levels {
            self.level(l);
        }
        self.state.lock().unwrap().steps[..levels].to_vec()
    }

    /// sum_{l<n} 2^-(l+1) rho^l as an exact generator map.
    pub fn partial_reconstruction(&self, n: u32) -> BTreeMap<String, Rational> {
        let mut acc: BTreeMap<String, Rational> = BTreeMap::new();
        for l in 0..n {
            let rho = self.level(l as usize);
            for (g, w) in rho.iter() {
                *acc.entry(g.to_string()).or_insert_with(Rational::zero) += pow2_inv(l + 1) * w;
            }
        }
        acc
    }

    /// Largest per-generator reconstruction error at depth n; always at
    /// most 2^-n.
    pub fn reconstruction_residual(&self, n: u32) -> Rational {
        let partial = self.partial_reconstruction(n);
        let mut worst = Rational::zero();
        for g in self.source.support().chain(partial.keys().map(|s| s.as_str())) {
            let got = partial.get(g).cloned().unwrap_or_else(Rational::zero);
            let err = (self.source.get(g) - got).abs();
            if err > worst {
                worst = err;
            }
        }
        worst
    }
}

pub fn levels(lambda: &WeightFunction) -> LevelSequence {
    LevelSequence {
        source: lambda.clone(),
        state: Mutex::new(LevelState {
            rhos: Vec::new(),
            next_lambda: lambda.clone(),
            steps: Vec::new(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Dyadic trees and normal forms from weights
// ---------------------------------------------------------------------------

/// Builds the canonical finite binary term with exactly the given dyadic
/// weights: the full binary tree of height t, where t is the smallest
/// exponent writing every weight as k/2^t, with the 2^t leaves assigned in
/// generator order.
pub fn dyadic_tree(rho: &WeightFunction) -> Term {
    assert!(rho.is_dyadic(), "dyadic_tree needs dyadic weights");
    let mut t = 0u32;
    for (_, w) in rho.iter() {
        t = t.max(w.denom().trailing_zeros().unwrap_or(0) as u32);
    }
    let mut leaves = Vec::with_capacity(1usize << t);
    for (g, w) in rho.iter() {
        let count = (w * Rational::from_integer(num::BigInt::one() << t))
            .to_integer()
            .try_into()
            .expect("leaf count fits usize");
        for _ in 0..count {
            leaves.push(Term::leaf(g));
        }
    }
    debug_assert_eq!(leaves.len(), 1usize << t);
    full_tree(&leaves)
}

fn full_tree(leaves: &[Term]) -> Term {
    if leaves.len() == 1 {
        return leaves[0].clone();
    }
    let (a, b) = leaves.split_at(leaves.len() / 2);
    Term::pair(full_tree(a), full_tree(b))
}

struct WeightLevels {
    seq: Arc<LevelSequence>,
    cache: Mutex<HashMap<usize, Term>>,
}

impl LevelProvider for WeightLevels {
    fn level(&self, l: usize) -> Term {
        if let Some(t) = self.cache.lock().unwrap().get(&l) {
            return t.clone();
        }
        let t = dyadic_tree(&self.seq.level(l));
        self.cache.lock().unwrap().insert(l, t.clone());
        t
    }
}

/// The normal form of a weight vector: level l is the canonical dyadic tree
/// of rho^l, so the level weights are exactly the decomposition levels.
/// There is no finite source term, so the normal form carries none.
pub fn to_term(lambda: &WeightFunction) -> NormalForm {
    let seq = Arc::new(levels(lambda));
    NormalForm::from_provider(None, Arc::new(WeightLevels { seq, cache: Mutex::new(HashMap::new()) }))
}

// ---------------------------------------------------------------------------
// Homomorphic extension and the interval homomorphism
// ---------------------------------------------------------------------------

/// Evaluates a finite binary term whose leaves are bound to body points.
fn eval_finite<B: ConvexBody>(
    t: &Term,
    f: &BTreeMap<String, B::Point>,
    body: &B,
) -> Result<B::Point, FreeError> {
    match t {
        Term::Leaf(g) => {
            f.get(g).cloned().ok_or_else(|| FreeError::MissingAssignment(g.clone()))
        }
        Term::Pair(a, b) => {
            let pa = eval_finite(a, f, body)?;
            let pb = eval_finite(b, f, body)?;
            Ok(body.mid(&pa, &pb))
        }
        Term::Omega(_) => unreachable!("normal-form levels are finite"),
    }
}

/// The homomorphic extension of f along the insertion of generators:
/// h(w) approximates sum_g w(g) * f(g) within 2^-tol_exp, computed as the
/// body's truncated infinitary midpoint over the dyadic levels of w (each
/// level evaluated exactly with midpoints).
pub fn extend_hom<B: ConvexBody>(
    f: &BTreeMap<String, B::Point>,
    body: &B,
    w: &WeightFunction,
    tol_exp: u32,
) -> Result<B::Point, FreeError> {
    for g in w.support() {
        if !f.contains_key(g) {
            return Err(FreeError::MissingAssignment(g.to_string()));
        }
    }
    let nf = to_term(w);
    let depth = depth_for(body, tol_exp);
    let mut pts = Vec::with_capacity(depth as usize);
    for l in 0..depth {
        pts.push(eval_finite(&nf.level_at(l as usize), f, body)?);
    }
    Ok(body.approx_m(&pts, &body.center(), depth))
}

/// The bipointed homomorphism out of the interval, evaluated on a digit
/// stream: digit -1 maps to a, +1 to b, 0 to mid(a, b), and the images are
/// combined by the body's truncated infinitary midpoint at a depth chosen
/// from the tolerance. Within 2^-tol_exp of the exact homomorphism value;
/// with a = -1 and b = 1 in the interval body this is the identity.
pub fn interval_hom<B: ConvexBody>(
    a: &B::Point,
    b: &B::Point,
    body: &B,
    x: &DigitStream,
    tol_exp: u32,
) -> B::Point {
    let m = body.mid(a, b);
    let depth = depth_for(body, tol_exp);
    let pts: Vec<B::Point> = (0..depth as usize)
        .map(|i| match x.digit(i) {
            Digit::Minus => a.clone(),
            Digit::Zero => m.clone(),
            Digit::Plus => b.clone(),
        })
        .collect();
    body.approx_m(&pts, &body.center(), depth)
}

// ---------------------------------------------------------------------------
// Universal-property check suites
// ---------------------------------------------------------------------------

/// Checks the defining laws of the bipointed homomorphism out of the
/// interval on sampled endpoint pairs: the constant streams map to the
/// endpoints, the zero stream to their midpoint (all within tol plus a
/// measurement allowance) and the homomorphism residual
/// distance(h(mid(x, y)), mid(h(x), h(y))) stays at most 4*tol. Recorded
/// violations are excesses beyond those bounds, so a passing report has a
/// zero maximum.
pub fn check_universal<B: ConvexBody>(
    body: &B,
    samples: u32,
    seed: u64,
    tol_exp: u32,
) -> crate::body::CheckReport {
    use crate::body::{random_rational, sampler};

    let mut rng = sampler(seed);
    let mut report = crate::body::CheckReport::new("universal", body.name(), samples, seed, tol_exp);
    let tol = pow2_inv(tol_exp);
    let prec = tol_exp + 6;
    let slack = pow2_inv(tol_exp + 3);
    let excess = |d: &Rational, bound: &Rational| {
        if d > bound {
            d - bound
        } else {
            Rational::zero()
        }
    };
    for _ in 0..samples {
        let a = body.sample(&mut rng);
        let b = body.sample(&mut rng);
        let endpoint_bound = &tol + &slack;

        let h = interval_hom(&a, &b, body, &DigitStream::minus_one(), tol_exp);
        let (_, d) = body.distance_bounds(&h, &a, prec);
        report.record(excess(&d, &endpoint_bound));

        let h = interval_hom(&a, &b, body, &DigitStream::one(), tol_exp);
        let (_, d) = body.distance_bounds(&h, &b, prec);
        report.record(excess(&d, &endpoint_bound));

        let h = interval_hom(&a, &b, body, &DigitStream::zero(), tol_exp);
        let (_, d) = body.distance_bounds(&h, &body.mid(&a, &b), prec);
        report.record(excess(&d, &endpoint_bound));

        let x = DigitStream::from_rational(&random_rational(&mut rng, &Rational::one()))
            .expect("sampled rational is in range");
        let y = DigitStream::from_rational(&random_rational(&mut rng, &Rational::one()))
            .expect("sampled rational is in range");
        let hm = interval_hom(&a, &b, body, &x.mid(&y), tol_exp);
        let mh = body.mid(
            &interval_hom(&a, &b, body, &x, tol_exp),
            &interval_hom(&a, &b, body, &y, tol_exp),
        );
        let (_, d) = body.distance_bounds(&hm, &mh, prec);
        let hom_bound = Rational::from_integer(4.into()) * &tol + &slack;
        report.record(excess(&d, &hom_bound));
    }
    report.finish_strict()
}

/// The identity instance: with endpoints -1 and 1 in the interval body,
/// the homomorphism reproduces its input value within tol.
pub fn check_interval_identity(samples: u32, seed: u64, tol_exp: u32) -> crate::body::CheckReport {
    use crate::body::{random_rational, sampler, IntervalBody};
    use crate::stream::Precision;

    let body = IntervalBody;
    let mut rng = sampler(seed);
    let mut report = crate::body::CheckReport::new("universal-identity", body.name(), samples, seed, tol_exp);
    let prec = tol_exp + 6;
    let bound = pow2_inv(tol_exp) + pow2_inv(prec);
    for _ in 0..samples {
        let r = random_rational(&mut rng, &Rational::one());
        let x = DigitStream::from_rational(&r).expect("sampled rational is in range");
        let h = interval_hom(&DigitStream::minus_one(), &DigitStream::one(), &body, &x, tol_exp);
        let d = (h.approx(Precision::new(prec)).center().to_rational() - &r).abs();
        if d > bound {
            report.record(d - &bound);
        }
    }
    report.finish_strict()
}

/// Exact superconvex combination oracle in the free space itself: the
/// pointwise mixture of weight rows. Exposed for tests and reports.
pub fn free_combination(
    lambda: &WeightFunction,
    rows: &BTreeMap<String, WeightFunction>,
) -> Result<WeightFunction, crate::exact::WeightError> {
    let ls: Vec<Rational> = lambda.iter().map(|(_, w)| w.clone()).collect();
    let rs: Vec<WeightFunction> = lambda
        .support()
        .map(|g| rows.get(g).cloned().unwrap_or_else(|| WeightFunction::dirac(g)))
        .collect();
    crate::exact::weight_combine(&ls, &rs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{EuclideanBody, IntervalBody, SimplexBody};
    use crate::exact::parse_rational;
    use crate::stream::Precision;
    use crate::term::weight;

    fn rat(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn wf(pairs: &[(&str, &str)]) -> WeightFunction {
        WeightFunction::from_pairs(pairs.iter().map(|(g, w)| (g.to_string(), rat(w)))).unwrap()
    }

    #[test]
    fn dirac_points_and_universe_check() {
        let space = FreeSpace::new(["a", "b", "c"]);
        assert_eq!(space.dirac("a").unwrap(), WeightFunction::dirac("a"));
        assert!(space.dirac("z").is_err());
        // distinct generators give distinct points
        let pts: Vec<_> = ["a", "b", "c"].iter().map(|g| space.dirac(g).unwrap()).collect();
        assert!(pts[0] != pts[1] && pts[1] != pts[2] && pts[0] != pts[2]);
        // averaging two Diracs
        let avg = crate::exact::weight_combine(
            &[rat("1/2"), rat("1/2")],
            &[pts[0].clone(), pts[1].clone()],
        )
        .unwrap();
        assert_eq!(avg, wf(&[("a", "1/2"), ("b", "1/2")]));
    }

    #[test]
    fn decompose_hand_runs() {
        // {a: 1} -> rho = {a: 1}, mu = {a: 1} in one step
        let d = decompose(&wf(&[("a", "1")]));
        assert_eq!(d.rho, wf(&[("a", "1")]));
        assert_eq!(d.mu, wf(&[("a", "1")]));
        assert_eq!(d.steps, 1);

        // {a: 1/3, b: 2/3} -> rho = {b: 1}, mu = {a: 2/3, b: 1/3}
        let d = decompose(&wf(&[("a", "1/3"), ("b", "2/3")]));
        assert_eq!(d.rho, wf(&[("b", "1")]));
        assert_eq!(d.mu, wf(&[("a", "2/3"), ("b", "1/3")]));

        // {a: 1/3, b: 1/3, c: 1/3} -> rho = {a: 1/2, b: 1/2},
        //                             mu = {a: 1/6, b: 1/6, c: 2/3}
        let d = decompose(&wf(&[("a", "1/3"), ("b", "1/3"), ("c", "1/3")]));
        assert_eq!(d.rho, wf(&[("a", "1/2"), ("b", "1/2")]));
        assert_eq!(d.mu, wf(&[("a", "1/6"), ("b", "1/6"), ("c", "2/3")]));
    }

    #[test]
    fn decompose_identity_is_exact() {
        let half = rat("1/2");
        for lambda in [
            wf(&[("a", "1/3"), ("b", "2/3")]),
            wf(&[("a", "5/17"), ("b", "3/17"), ("c", "9/17")]),
            wf(&[("a", "1/2"), ("b", "1/2")]),
        ] {
            let d = decompose(&lambda);
            for g in lambda.support() {
                assert_eq!(lambda.get(g), &half * d.rho.get(g) + &half * d.mu.get(g));
            }
        }
    }

    #[test]
    fn level_sequences_reconstruct() {
        // fixed point at a Dirac
        let seq = levels(&wf(&[("a", "1")]));
        for l in 0..8 {
            assert_eq!(seq.level(l), wf(&[("a", "1")]));
        }

        let lambda = wf(&[("a", "1/3"), ("b", "2/3")]);
        let seq = levels(&lambda);
        assert_eq!(seq.level(0), wf(&[("b", "1")]));
        for n in 1..=24 {
            assert!(seq.reconstruction_residual(n) <= pow2_inv(n));
        }
        assert!(seq.step_counts(6).iter().all(|s| *s >= 1));
    }

    #[test]
    fn dyadic_trees_have_exact_weights() {
        for rho in [
            wf(&[("a", "1")]),
            wf(&[("a", "1/2"), ("b", "1/2")]),
            wf(&[("a", "1/2"), ("b", "1/4"), ("c", "1/4")]),
            wf(&[("a", "5/8"), ("b", "3/8")]),
        ] {
            let t = dyadic_tree(&rho);
            assert!(t.is_finite());
            assert_eq!(weight(&t), rho);
        }
    }

    #[test]
    fn to_term_levels_carry_the_decomposition_weights() {
        let lambda = wf(&[("a", "1/3"), ("b", "2/3")]);
        let nf = to_term(&lambda);
        let seq = levels(&lambda);
        for l in 0..10 {
            let lt = nf.level_at(l);
            assert!(lt.is_finite());
            let w = weight(&lt);
            assert!(w.is_dyadic());
            assert_eq!(w, seq.level(l));
        }
        // Dirac input: every level is the single leaf
        let nf = to_term(&wf(&[("a", "1")]));
        assert_eq!(nf.level_at(0), Term::leaf("a"));
        assert_eq!(nf.level_at(5), Term::leaf("a"));
    }

    #[test]
    fn extension_agrees_with_the_linear_oracle() {
        let body = EuclideanBody::new(2, rat("1"));
        let mut f = BTreeMap::new();
        f.insert("e0".to_string(), vec![rat("0"), rat("0")]);
        f.insert("e1".to_string(), vec![rat("1"), rat("0")]);
        f.insert("e2".to_string(), vec![rat("0"), rat("1")]);

        // uniform weights at triangle vertices land on the barycenter
        let w = wf(&[("e0", "1/3"), ("e1", "1/3"), ("e2", "1/3")]);
        let h = extend_hom(&f, &body, &w, 35).unwrap();
        assert!((&h[0] - rat("1/3")).abs() <= pow2_inv(34));
        assert!((&h[1] - rat("1/3")).abs() <= pow2_inv(34));

        // h restricted to Diracs is f
        let h = extend_hom(&f, &body, &WeightFunction::dirac("e1"), 35).unwrap();
        assert!((&h[0] - rat("1")).abs() <= pow2_inv(34));

        // uniform over two generators is the midpoint
        let w = wf(&[("e1", "1/2"), ("e2", "1/2")]);
        let h = extend_hom(&f, &body, &w, 35).unwrap();
        assert!((&h[0] - rat("1/2")).abs() <= pow2_inv(34));
        assert!((&h[1] - rat("1/2")).abs() <= pow2_inv(34));

        let missing = extend_hom(&f, &body, &WeightFunction::dirac("zz"), 20);
        assert!(matches!(missing, Err(FreeError::MissingAssignment(_))));
    }

    #[test]
    fn extension_works_in_the_simplex() {
        let body = SimplexBody::new(2);
        let f: BTreeMap<String, WeightFunction> =
            (0..3).map(|i| (format!("g{i}"), body.vertex(i))).collect();
        let w = wf(&[("g0", "1/3"), ("g1", "1/6"), ("g2", "1/2")]);
        let h = extend_hom(&f, &body, &w, 40).unwrap();
        for (i, expect) in ["1/3", "1/6", "1/2"].iter().enumerate() {
            assert!((h.get(&format!("v{i}")) - rat(expect)).abs() <= pow2_inv(39));
        }
    }

    #[test]
    fn interval_hom_endpoints_midpoint_and_identity() {
        let body = EuclideanBody::new(1, rat("1"));
        let a = vec![rat("0")];
        let b = vec![rat("1")];
        let at = |s: &str| DigitStream::from_rational(&rat(s)).unwrap();

        let h = interval_hom(&a, &b, &body, &DigitStream::minus_one(), 40);
        assert!((&h[0] - rat("0")).abs() <= pow2_inv(39));
        let h = interval_hom(&a, &b, &body, &at("0"), 40);
        assert!((&h[0] - rat("1/2")).abs() <= pow2_inv(39));
        // affine: [-1, 1] -> [0, 1] sends 1/3 to 2/3
        let h = interval_hom(&a, &b, &body, &at("1/3"), 40);
        assert!((&h[0] - rat("2/3")).abs() <= pow2_inv(39));

        // identity instance in the interval body
        let ibody = IntervalBody;
        let h = interval_hom(&DigitStream::minus_one(), &DigitStream::one(), &ibody, &at("1/3"), 35);
        let err = (h.approx(Precision::new(40)).center().to_rational() - rat("1/3")).abs();
        assert!(err <= pow2_inv(33));
    }

    #[test]
    fn interval_hom_is_a_midpoint_homomorphism() {
        let body = EuclideanBody::new(1, rat("1"));
        let a = vec![rat("-1/2")];
        let b = vec![rat("3/4")];
        let at = |s: &str| DigitStream::from_rational(&rat(s)).unwrap();
        let x = at("1/3");
        let y = at("-5/7");
        let tol = 35u32;
        let hm = interval_hom(&a, &b, &body, &x.mid(&y), tol);
        let mh = body.mid(
            &interval_hom(&a, &b, &body, &x, tol),
            &interval_hom(&a, &b, &body, &y, tol),
        );
        let (_, d) = body.distance_bounds(&hm, &mh, tol + 6);
        assert!(d <= pow2_inv(tol) * rat("4"));
    }

    #[test]
    fn universal_suites_pass() {
        assert!(check_universal(&EuclideanBody::new(2, rat("1")), 10, 13, 30).pass);
        assert!(check_universal(&IntervalBody, 10, 13, 30).pass);
        assert!(check_universal(&SimplexBody::new(2), 10, 13, 30).pass);
        assert!(check_interval_identity(10, 13, 30).pass);
    }

    #[test]
    fn weight_equal_combinations_agree() {
        // two different index decompositions of the same indicator agree
        // under extension
        let body = EuclideanBody::new(1, rat("1"));
        let mut f = BTreeMap::new();
        f.insert("a".to_string(), vec![rat("1")]);
        f.insert("b".to_string(), vec![rat("-1/2")]);
        let w1 = wf(&[("a", "1/2"), ("b", "1/2")]);
        // indicator of (1/4 a + 1/4 a + 1/2 b) equals w1
        let lam = wf(&[("i0", "1/4"), ("i1", "1/4"), ("i2", "1/2")]);
        let mut rows = BTreeMap::new();
        rows.insert("i0".to_string(), WeightFunction::dirac("a"));
        rows.insert("i1".to_string(), WeightFunction::dirac("a"));
        rows.insert("i2".to_string(), WeightFunction::dirac("b"));
        let w2 = free_combination(&lam, &rows).unwrap();
        assert_eq!(w1, w2);
        let h1 = extend_hom(&f, &body, &w1, 40).unwrap();
        let h2 = extend_hom(&f, &body, &w2, 40).unwrap();
        assert!((&h1[0] - &h2[0]).abs() <= pow2_inv(39));
    }
}
