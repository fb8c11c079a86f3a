//! Midpoint-convex bodies: an abstract interface and concrete instances.
//!
//! A body supplies a midpoint, an approximate infinitary midpoint with an
//! explicit error bound, a diameter bound and a distance estimate. The
//! interval instance carries signed-digit streams; the Euclidean box and the
//! simplex are exact rational bodies; the L-shaped fixture is a midpoint set
//! that deliberately fails cancellation.

use std::fmt;

use num::{One, Signed, Zero};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::exact::{format_rational, pow2_inv, Rational, WeightFunction};
use crate::stream::{DigitStream, Precision, StreamSeq};

/// Deterministic sampler state; every suite records its seed.
pub type Sampler = ChaCha8Rng;

pub fn sampler(seed: u64) -> Sampler {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A midpoint-convex body.
///
/// `approx_m(prefix, tail, n)` approximates the infinitary midpoint of the
/// sequence `prefix` followed by `tail` repeated forever. For the
/// cancellative instances in this module the result is within
/// 2^-n * diameter of the midpoint of any sequence agreeing on the first n
/// points, and depends only on those points. The L-shaped fixture has a
/// discontinuous infinitary midpoint (that is what failing cancellation
/// costs it), so its implementation instead evaluates the described
/// sequence exactly; see [`LShapeBody`].
pub trait ConvexBody {
    type Point: Clone + Send + Sync;

    fn name(&self) -> String;

    fn mid(&self, a: &Self::Point, b: &Self::Point) -> Self::Point;

    fn approx_m(&self, prefix: &[Self::Point], tail: &Self::Point, depth: u32) -> Self::Point;

    /// An upper bound on the distance between any two points.
    fn diameter(&self) -> Rational;

    /// Designated tail for truncated infinitary midpoints.
    fn center(&self) -> Self::Point;

    /// Lower and upper bounds on the distance between two points. Exact
    /// bodies return equal bounds; the interval body reports dyadic bounds
    /// read off enclosures at precision `prec`.
    fn distance_bounds(&self, a: &Self::Point, b: &Self::Point, prec: u32) -> (Rational, Rational);

    /// Draws a valid point.
    fn sample(&self, rng: &mut Sampler) -> Self::Point;

    /// Human-readable rendering for reports.
    fn describe(&self, p: &Self::Point) -> String;
}

/// A random rational in [-bound, bound] with denominator up to 10^6.
pub fn random_rational(rng: &mut Sampler, bound: &Rational) -> Rational {
    let den: i64 = rng.gen_range(1..=1_000_000);
    let num: i64 = rng.gen_range(-den..=den);
    Rational::new(num.into(), den.into()) * bound
}

fn random_unit_rational(rng: &mut Sampler) -> Rational {
    let den: i64 = rng.gen_range(1..=1_000_000);
    let num: i64 = rng.gen_range(0..=den);
    Rational::new(num.into(), den.into())
}

// ---------------------------------------------------------------------------
// Interval body
// ---------------------------------------------------------------------------

/// The interval [-1, 1] with signed-digit streams as points. Midpoint and
/// infinitary midpoint are the exact stream operations; distances are
/// enclosure-based, so distinct representations of equal values report a
/// zero lower bound rather than exact equality.
pub struct IntervalBody;

impl ConvexBody for IntervalBody {
    type Point = DigitStream;

    fn name(&self) -> String {
        "interval".to_string()
    }

    fn mid(&self, a: &DigitStream, b: &DigitStream) -> DigitStream {
        a.mid(b)
    }

    fn approx_m(&self, prefix: &[DigitStream], tail: &DigitStream, depth: u32) -> DigitStream {
        let cut = prefix.len().min(depth as usize);
        let seq = StreamSeq::periodic(prefix[..cut].to_vec(), vec![tail.clone()]);
        DigitStream::bigmid(&seq)
    }

    fn diameter(&self) -> Rational {
        Rational::from_integer(2.into())
    }

    fn center(&self) -> DigitStream {
        DigitStream::zero()
    }

    fn distance_bounds(&self, a: &DigitStream, b: &DigitStream, prec: u32) -> (Rational, Rational) {
        let p = Precision::new(prec);
        a.approx(p).distance_bounds(&b.approx(p))
    }

    fn sample(&self, rng: &mut Sampler) -> DigitStream {
        let r = random_rational(rng, &Rational::one());
        DigitStream::from_rational(&r).expect("sampled rational is in range")
    }

    fn describe(&self, p: &DigitStream) -> String {
        let enc = p.approx(Precision::new(20));
        format!("{} ± 2^-20", enc.center())
    }
}

// ---------------------------------------------------------------------------
// Euclidean box body
// ---------------------------------------------------------------------------

/// The box [-R, R]^k with exact rational coordinates and componentwise
/// midpoint; the infinitary midpoint truncates the series
/// sum_i 2^-(i+1) x_i with a 2^-n-weighted tail.
pub struct EuclideanBody {
    dim: usize,
    radius: Rational,
}

impl EuclideanBody {
    pub fn new(dim: usize, radius: Rational) -> EuclideanBody {
        assert!(dim > 0 && radius.is_positive(), "need a positive-dimensional, positive-radius box");
        EuclideanBody { dim, radius }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> &Rational {
        &self.radius
    }

    pub fn contains(&self, p: &[Rational]) -> bool {
        p.len() == self.dim && p.iter().all(|c| c.abs() <= self.radius)
    }
}

impl ConvexBody for EuclideanBody {
    type Point = Vec<Rational>;

    fn name(&self) -> String {
        format!("euclid:{}:{}", self.dim, format_rational(&self.radius))
    }

    fn mid(&self, a: &Vec<Rational>, b: &Vec<Rational>) -> Vec<Rational> {
        a.iter().zip(b).map(|(x, y)| (x + y) / Rational::from_integer(2.into())).collect()
    }

    fn approx_m(&self, prefix: &[Vec<Rational>], tail: &Vec<Rational>, depth: u32) -> Vec<Rational> {
        let mut acc = vec![Rational::zero(); self.dim];
        for i in 0..depth {
            let p = prefix.get(i as usize).unwrap_or(tail);
            let w = pow2_inv(i + 1);
            for (a, c) in acc.iter_mut().zip(p) {
                *a += &w * c;
            }
        }
        let w = pow2_inv(depth);
        for (a, c) in acc.iter_mut().zip(tail) {
            *a += &w * c;
        }
        acc
    }

    fn diameter(&self) -> Rational {
        &self.radius * Rational::from_integer(2.into())
    }

    fn center(&self) -> Vec<Rational> {
        vec![Rational::zero(); self.dim]
    }

    fn distance_bounds(&self, a: &Vec<Rational>, b: &Vec<Rational>, _prec: u32) -> (Rational, Rational) {
        let d = a
            .iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .max()
            .unwrap_or_else(Rational::zero);
        (d.clone(), d)
    }

    fn sample(&self, rng: &mut Sampler) -> Vec<Rational> {
        (0..self.dim).map(|_| random_rational(rng, &self.radius)).collect()
    }

    fn describe(&self, p: &Vec<Rational>) -> String {
        let coords: Vec<String> = p.iter().map(format_rational).collect();
        format!("({})", coords.join(", "))
    }
}

// ---------------------------------------------------------------------------
// Simplex body
// ---------------------------------------------------------------------------

/// The simplex spanned by named vertices: points are exact convex weight
/// vectors over the vertices, midpoint is the pointwise average.
pub struct SimplexBody {
    vertices: Vec<String>,
}

impl SimplexBody {
    /// The n-simplex has n+1 vertices named v0..vn.
    pub fn new(n: usize) -> SimplexBody {
        SimplexBody { vertices: (0..=n).map(|i| format!("v{i}")).collect() }
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> WeightFunction {
        WeightFunction::dirac(&self.vertices[i])
    }
}

impl ConvexBody for SimplexBody {
    type Point = WeightFunction;

    fn name(&self) -> String {
        format!("simplex:{}", self.vertices.len() - 1)
    }

    fn mid(&self, a: &WeightFunction, b: &WeightFunction) -> WeightFunction {
        let half = Rational::new(1.into(), 2.into());
        crate::exact::weight_combine(&[half.clone(), half], &[a.clone(), b.clone()])
            .expect("averaging valid weights is valid")
    }

    fn approx_m(&self, prefix: &[WeightFunction], tail: &WeightFunction, depth: u32) -> WeightFunction {
        let mut lambda = Vec::new();
        let mut rows = Vec::new();
        for i in 0..depth {
            lambda.push(pow2_inv(i + 1));
            rows.push(prefix.get(i as usize).unwrap_or(tail).clone());
        }
        lambda.push(pow2_inv(depth));
        rows.push(tail.clone());
        crate::exact::weight_combine(&lambda, &rows).expect("dyadic weights sum to one")
    }

    fn diameter(&self) -> Rational {
        Rational::one()
    }

    fn center(&self) -> WeightFunction {
        let n = self.vertices.len();
        let w = Rational::new(1.into(), (n as i64).into());
        WeightFunction::from_pairs(self.vertices.iter().map(|v| (v.clone(), w.clone())))
            .expect("barycenter is a valid weight vector")
    }

    fn distance_bounds(&self, a: &WeightFunction, b: &WeightFunction, _prec: u32) -> (Rational, Rational) {
        let d = a.max_norm_distance(b);
        (d.clone(), d)
    }

    fn sample(&self, rng: &mut Sampler) -> WeightFunction {
        let k = self.vertices.len();
        let mut nums: Vec<i64> = (0..k).map(|_| rng.gen_range(0..=1000)).collect();
        if nums.iter().all(|n| *n == 0) {
            nums[0] = 1;
        }
        let total: i64 = nums.iter().sum();
        WeightFunction::from_pairs(
            self.vertices
                .iter()
                .zip(&nums)
                .map(|(v, n)| (v.clone(), Rational::new((*n).into(), total.into()))),
        )
        .expect("normalized weights sum to one")
    }

    fn describe(&self, p: &WeightFunction) -> String {
        p.to_string()
    }
}

// ---------------------------------------------------------------------------
// L-shaped fixture
// ---------------------------------------------------------------------------

/// A point of the L-shaped fixture: (x, y) in [0, 1]^2 with x = 1 or y = 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LPoint {
    pub x: Rational,
    pub y: Rational,
}

impl LPoint {
    pub fn new(x: Rational, y: Rational) -> LPoint {
        let unit = |r: &Rational| !r.is_negative() && *r <= Rational::one();
        assert!(
            (x.is_one() || y.is_one()) && unit(&x) && unit(&y),
            "L-shape points have x = 1 or y = 1 with coordinates in [0, 1]"
        );
        LPoint { x, y }
    }
}

/// The union of two edges of the unit square, with the midpoint
///   m((x,y), (x',y')) = (1, avg(y, y'))  if x = x' = 1,
///   m((x,y), (x',y')) = (avg(x, x'), 1)  otherwise.
/// It satisfies the midpoint laws and is iterative, but cancellation fails:
/// m((1,a), (z,1)) = m((1,b), (z,1)) for every z != 1.
///
/// The induced infinitary midpoint sends a sequence to (1, avg of the y's)
/// when every x-coordinate equals 1 and to (avg of the x's, 1) otherwise.
/// It is discontinuous, so no depth-n truncation bound is possible;
/// `approx_m` instead computes it exactly on the
/// prefix-then-constant-tail sequence formed from the first `depth` points
/// and the tail.
pub struct LShapeBody;

impl LShapeBody {
    fn series<I: Iterator<Item = Rational>>(entries: I, depth: u32, tail: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for (i, v) in entries.enumerate().take(depth as usize) {
            acc += pow2_inv(i as u32 + 1) * v;
        }
        acc + pow2_inv(depth) * tail
    }
}

impl ConvexBody for LShapeBody {
    type Point = LPoint;

    fn name(&self) -> String {
        "lshape".to_string()
    }

    fn mid(&self, a: &LPoint, b: &LPoint) -> LPoint {
        let avg = |p: &Rational, q: &Rational| (p + q) / Rational::from_integer(2.into());
        if a.x.is_one() && b.x.is_one() {
            LPoint { x: Rational::one(), y: avg(&a.y, &b.y) }
        } else {
            LPoint { x: avg(&a.x, &b.x), y: Rational::one() }
        }
    }

    fn approx_m(&self, prefix: &[LPoint], tail: &LPoint, depth: u32) -> LPoint {
        let cut = prefix.len().min(depth as usize);
        let all_ones = prefix[..cut].iter().all(|p| p.x.is_one()) && tail.x.is_one();
        if all_ones {
            let ys = prefix[..cut].iter().map(|p| p.y.clone()).chain(std::iter::repeat(tail.y.clone()));
            LPoint { x: Rational::one(), y: LShapeBody::series(ys, depth, &tail.y) }
        } else {
            let xs = prefix[..cut].iter().map(|p| p.x.clone()).chain(std::iter::repeat(tail.x.clone()));
            LPoint { x: LShapeBody::series(xs, depth, &tail.x), y: Rational::one() }
        }
    }

    fn diameter(&self) -> Rational {
        Rational::one()
    }

    fn center(&self) -> LPoint {
        LPoint { x: Rational::one(), y: Rational::one() }
    }

    fn distance_bounds(&self, a: &LPoint, b: &LPoint, _prec: u32) -> (Rational, Rational) {
        let d = (&a.x - &b.x).abs().max((&a.y - &b.y).abs());
        (d.clone(), d)
    }

    fn sample(&self, rng: &mut Sampler) -> LPoint {
        let c = random_unit_rational(rng);
        if rng.gen_bool(0.5) {
            LPoint { x: Rational::one(), y: c }
        } else {
            LPoint { x: c, y: Rational::one() }
        }
    }

    fn describe(&self, p: &LPoint) -> String {
        format!("({}, {})", format_rational(&p.x), format_rational(&p.y))
    }
}

// ---------------------------------------------------------------------------
// Eventually-constant sequences and coalgebra iteration
// ---------------------------------------------------------------------------

/// A sequence given by a finite prefix followed by a constant tail.
#[derive(Clone, Debug)]
pub struct EvSeq<P> {
    pub prefix: Vec<P>,
    pub tail: P,
}

impl<P> EvSeq<P> {
    pub fn at(&self, i: usize) -> &P {
        self.prefix.get(i).unwrap_or(&self.tail)
    }

    pub fn shifted(&self) -> EvSeq<P>
    where
        P: Clone,
    {
        let prefix = if self.prefix.is_empty() { Vec::new() } else { self.prefix[1..].to_vec() };
        EvSeq { prefix, tail: self.tail.clone() }
    }
}

/// Errors from check-suite and solver configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BodyError {
    /// A tolerance exponent of zero denotes tolerance 1, which makes every
    /// check vacuous; reject it.
    BadTolerance,
}

impl fmt::Display for BodyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BodyError::BadTolerance => write!(f, "tolerance must be 2^-n with n >= 1"),
        }
    }
}

impl std::error::Error for BodyError {}

/// Solves the sequence coalgebra (head, tail) in the body: returns an
/// approximation of M(head(s0), head(tail(s0)), head(tail^2(s0)), ...)
/// within 2^-tol_exp. The solution u satisfies
/// distance(u(s), mid(head(s), u(tail(s)))) <= 2 * 2^-tol_exp.
pub fn iterate_coalgebra<B: ConvexBody, S>(
    body: &B,
    head: impl Fn(&S) -> B::Point,
    tail: impl Fn(&S) -> S,
    s0: S,
    tol_exp: u32,
) -> Result<B::Point, BodyError> {
    if tol_exp == 0 {
        return Err(BodyError::BadTolerance);
    }
    let depth = depth_for(body, tol_exp);
    let mut points = Vec::with_capacity(depth as usize);
    let mut state = s0;
    for _ in 0..depth {
        points.push(head(&state));
        state = tail(&state);
    }
    Ok(body.approx_m(&points, &body.center(), depth))
}

/// Smallest depth n with 2^-n * diameter <= 2^-tol_exp.
pub fn depth_for<B: ConvexBody>(body: &B, tol_exp: u32) -> u32 {
    let mut extra = 0u32;
    let mut bound = Rational::one();
    while bound < body.diameter() {
        bound *= Rational::from_integer(2.into());
        extra += 1;
    }
    tol_exp + extra
}

// ---------------------------------------------------------------------------
// Check suites
// ---------------------------------------------------------------------------

/// Outcome of a law-checking suite.
#[derive(Clone, Debug)]
pub struct CheckReport {
    pub suite: String,
    pub body: String,
    pub samples: u32,
    pub seed: u64,
    pub tol_exp: u32,
    pub max_violation: Rational,
    pub pass: bool,
    pub counterexample: Option<String>,
}

impl CheckReport {
    pub(crate) fn new(suite: &str, body: String, samples: u32, seed: u64, tol_exp: u32) -> CheckReport {
        CheckReport {
            suite: suite.to_string(),
            body,
            samples,
            seed,
            tol_exp,
            max_violation: Rational::zero(),
            pass: true,
            counterexample: None,
        }
    }

    pub(crate) fn record(&mut self, violation: Rational) {
        if violation > self.max_violation {
            self.max_violation = violation;
        }
    }

    pub(crate) fn finish(mut self) -> CheckReport {
        self.pass = self.max_violation <= pow2_inv(self.tol_exp);
        self
    }

    /// For suites that record only excesses beyond an already-checked bound.
    pub(crate) fn finish_strict(mut self) -> CheckReport {
        self.pass = self.max_violation.is_zero();
        self
    }
}

/// Checks idempotency, commutativity and transposition of the body midpoint
/// on sampled points. Violations are distance lower bounds, so exact bodies
/// report exact distances and the interval body reports what its enclosures
/// can separate.
pub fn check_midpoint_axioms<B: ConvexBody>(
    body: &B,
    samples: u32,
    seed: u64,
    tol_exp: u32,
) -> CheckReport {
    let mut rng = sampler(seed);
    let mut report = CheckReport::new("axioms", body.name(), samples, seed, tol_exp);
    let prec = tol_exp + 6;
    for _ in 0..samples {
        let x = body.sample(&mut rng);
        let y = body.sample(&mut rng);
        let z = body.sample(&mut rng);
        let w = body.sample(&mut rng);
        let (idem, _) = body.distance_bounds(&body.mid(&x, &x), &x, prec);
        report.record(idem);
        let (comm, _) = body.distance_bounds(&body.mid(&x, &y), &body.mid(&y, &x), prec);
        report.record(comm);
        let lhs = body.mid(&body.mid(&x, &y), &body.mid(&z, &w));
        let rhs = body.mid(&body.mid(&x, &z), &body.mid(&y, &w));
        let (trans, _) = body.distance_bounds(&lhs, &rhs, prec);
        report.record(trans);
    }
    report.finish()
}

/// Searches for a cancellation failure: points x, y, z with
/// mid(x, z) and mid(y, z) within tol while x and y are more than 2*tol
/// apart. Reports the first one found.
pub fn check_cancellation_probe<B: ConvexBody>(
    body: &B,
    samples: u32,
    seed: u64,
    tol_exp: u32,
) -> CheckReport {
    let mut rng = sampler(seed);
    let mut report = CheckReport::new("cancellation", body.name(), samples, seed, tol_exp);
    let tol = pow2_inv(tol_exp);
    let prec = tol_exp + 6;
    for _ in 0..samples {
        let x = body.sample(&mut rng);
        let y = body.sample(&mut rng);
        let z = body.sample(&mut rng);
        let (_, mids_apart) = body.distance_bounds(&body.mid(&x, &z), &body.mid(&y, &z), prec);
        let (args_apart, _) = body.distance_bounds(&x, &y, prec);
        if mids_apart <= tol && args_apart > Rational::from_integer(2.into()) * &tol {
            report.record(args_apart);
            report.counterexample = Some(format!(
                "x = {}, y = {}, z = {}: mid(x,z) = {} agrees with mid(y,z) = {}",
                body.describe(&x),
                body.describe(&y),
                body.describe(&z),
                body.describe(&body.mid(&x, &z)),
                body.describe(&body.mid(&y, &z)),
            ));
            report.pass = false;
            return report;
        }
    }
    report.pass = true;
    report
}

/// Verifies the quantitative approximation property on supplied sequence
/// pairs: if the depth-n midpoint folds (with the body center as tail)
/// agree within eps, the infinitary midpoints agree within
/// 4*eps + 2^(2-n) * diameter. Reported violations are the excess beyond
/// that bound.
pub fn check_approximation<B: ConvexBody>(
    body: &B,
    pairs: &[(EvSeq<B::Point>, EvSeq<B::Point>)],
    n_max: u32,
    tol_exp: u32,
) -> CheckReport {
    let mut report = CheckReport::new("approx", body.name(), pairs.len() as u32, 0, tol_exp);
    let prec = tol_exp + 8;
    let four = Rational::from_integer(4.into());
    for (xs, ys) in pairs {
        let depth = n_max + 2;
        let mx = body.approx_m(&collect_seq(xs, depth), &xs.tail, depth);
        let my = body.approx_m(&collect_seq(ys, depth), &ys.tail, depth);
        // measured M-distance plus the two truncation allowances
        let (_, m_dist) = body.distance_bounds(&mx, &my, prec);
        let m_dist = m_dist + pow2_inv(depth) * body.diameter() * Rational::from_integer(2.into());
        for n in 1..=n_max {
            let fx = mid_fold(body, xs, n);
            let fy = mid_fold(body, ys, n);
            let (_, eps) = body.distance_bounds(&fx, &fy, prec);
            let bound = &four * eps + pow2_inv(n) * four.clone() * body.diameter();
            if m_dist > bound {
                report.record(&m_dist - &bound);
            }
        }
    }
    report.finish_strict()
}

fn collect_seq<P: Clone>(s: &EvSeq<P>, n: u32) -> Vec<P> {
    (0..n as usize).map(|i| s.at(i).clone()).collect()
}

/// m_n(s_0, ..., s_{n-1}, center): the right-nested midpoint fold.
fn mid_fold<B: ConvexBody>(body: &B, s: &EvSeq<B::Point>, n: u32) -> B::Point {
    let mut acc = body.center();
    for i in (0..n as usize).rev() {
        acc = body.mid(s.at(i), &acc);
    }
    acc
}

/// Checks the unfolding law M(s) = mid(s_0, M(tail s)) on supplied
/// eventually-constant sequences, at truncation depth tol_exp + 4 above the
/// diameter-adjusted depth.
pub fn check_unfolding<B: ConvexBody>(
    body: &B,
    seqs: &[EvSeq<B::Point>],
    tol_exp: u32,
) -> CheckReport {
    let mut report = CheckReport::new("unfolding", body.name(), seqs.len() as u32, 0, tol_exp);
    let depth = depth_for(body, tol_exp) + 4;
    let prec = tol_exp + 6;
    for s in seqs {
        let lhs = body.approx_m(&collect_seq(s, depth), &s.tail, depth);
        let t = s.shifted();
        let inner = body.approx_m(&collect_seq(&t, depth), &t.tail, depth);
        let rhs = body.mid(s.at(0), &inner);
        let (_, d) = body.distance_bounds(&lhs, &rhs, prec);
        report.record(d);
    }
    report.finish()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::parse_rational;

    fn rat(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    #[test]
    fn euclid_approx_m_matches_series_oracle_exactly() {
        let body = EuclideanBody::new(2, rat("1"));
        // orbit e0, e1, e0, e1, ... has componentwise sums (2/3, 1/3)
        let e0 = vec![rat("1"), rat("0")];
        let e1 = vec![rat("0"), rat("1")];
        let prefix: Vec<_> = (0..40).map(|i| if i % 2 == 0 { e0.clone() } else { e1.clone() }).collect();
        let m = body.approx_m(&prefix, &body.center(), 40);
        let err0 = (&m[0] - rat("2/3")).abs();
        let err1 = (&m[1] - rat("1/3")).abs();
        let bound = pow2_inv(40) * body.diameter();
        assert!(err0 <= bound && err1 <= bound);
    }

    #[test]
    fn coalgebra_solution_for_alternating_orbit() {
        // head alternates 1, -1 with state parity; the solution is 1/3
        let body = IntervalBody;
        let u = iterate_coalgebra(
            &body,
            |s: &bool| if *s { DigitStream::one() } else { DigitStream::minus_one() },
            |s| !s,
            true,
            40,
        )
        .unwrap();
        let enc = u.approx(Precision::new(45));
        let err = (enc.center().to_rational() - rat("1/3")).abs();
        assert!(err <= pow2_inv(39));

        // constant head p gives p within tol
        let u = iterate_coalgebra(&body, |_: &()| DigitStream::one(), |_| (), (), 30).unwrap();
        let err = (u.approx(Precision::new(35)).center().to_rational() - rat("1")).abs();
        assert!(err <= pow2_inv(29));

        assert_eq!(
            iterate_coalgebra(&body, |_: &()| DigitStream::one(), |_| (), (), 0).unwrap_err(),
            BodyError::BadTolerance
        );
    }

    #[test]
    fn coalgebra_solution_in_euclid() {
        let body = EuclideanBody::new(2, rat("1"));
        let e0 = vec![rat("1"), rat("0")];
        let e1 = vec![rat("0"), rat("1")];
        let u = iterate_coalgebra(
            &body,
            move |s: &bool| if *s { e0.clone() } else { e1.clone() },
            |s| !s,
            true,
            40,
        )
        .unwrap();
        assert!((u[0].clone() - rat("2/3")).abs() <= pow2_inv(38));
        assert!((u[1].clone() - rat("1/3")).abs() <= pow2_inv(38));
    }

    #[test]
    fn axioms_pass_in_all_bodies() {
        assert!(check_midpoint_axioms(&IntervalBody, 40, 7, 40).pass);
        assert!(check_midpoint_axioms(&EuclideanBody::new(2, rat("1")), 40, 7, 40).pass);
        assert!(check_midpoint_axioms(&SimplexBody::new(3), 40, 7, 40).pass);
        let l = check_midpoint_axioms(&LShapeBody, 40, 7, 40);
        assert!(l.pass, "L-shape is a midpoint set: {:?}", l.max_violation);
    }

    #[test]
    fn exact_bodies_have_zero_axiom_violations() {
        assert!(check_midpoint_axioms(&EuclideanBody::new(2, rat("1")), 60, 11, 40)
            .max_violation
            .is_zero());
        assert!(check_midpoint_axioms(&SimplexBody::new(3), 60, 11, 40).max_violation.is_zero());
    }

    #[test]
    fn cancellation_splits_the_bodies() {
        assert!(check_cancellation_probe(&IntervalBody, 300, 3, 40).pass);
        assert!(check_cancellation_probe(&EuclideanBody::new(2, rat("1")), 300, 3, 40).pass);
        assert!(check_cancellation_probe(&SimplexBody::new(2), 300, 3, 40).pass);
        let l = check_cancellation_probe(&LShapeBody, 1000, 3, 40);
        assert!(!l.pass, "the L-shape must produce a counterexample");
        assert!(l.counterexample.is_some());
    }

    #[test]
    fn lshape_counterexample_from_the_definition() {
        let body = LShapeBody;
        let x = LPoint::new(rat("1"), rat("1/4"));
        let y = LPoint::new(rat("1"), rat("3/4"));
        let z = LPoint::new(rat("1/2"), rat("1"));
        let mxz = body.mid(&x, &z);
        let myz = body.mid(&y, &z);
        assert_eq!(mxz, LPoint::new(rat("3/4"), rat("1")));
        assert_eq!(mxz, myz);
    }

    #[test]
    fn unfolding_holds_per_body() {
        let body = EuclideanBody::new(1, rat("1"));
        let seqs = vec![
            EvSeq { prefix: vec![vec![rat("1")], vec![rat("-1/2")]], tail: vec![rat("1/3")] },
            EvSeq { prefix: vec![], tail: vec![rat("-2/3")] },
        ];
        assert!(check_unfolding(&body, &seqs, 40).pass);

        let lseqs = vec![
            EvSeq {
                prefix: vec![LPoint::new(rat("1"), rat("1/4")), LPoint::new(rat("1/3"), rat("1"))],
                tail: LPoint::new(rat("1"), rat("1")),
            },
            EvSeq {
                prefix: vec![LPoint::new(rat("1"), rat("0"))],
                tail: LPoint::new(rat("1"), rat("2/3")),
            },
        ];
        assert!(check_unfolding(&LShapeBody, &lseqs, 40).pass);
    }

    #[test]
    fn approximation_property_on_forced_pairs() {
        let body = EuclideanBody::new(1, rat("1"));
        let mut rng = sampler(5);
        let mut pairs = Vec::new();
        for _ in 0..20 {
            let shared: Vec<_> = (0..6).map(|_| body.sample(&mut rng)).collect();
            let x = EvSeq { prefix: shared.clone(), tail: body.sample(&mut rng) };
            let y = EvSeq { prefix: shared, tail: body.sample(&mut rng) };
            pairs.push((x, y));
        }
        assert!(check_approximation(&body, &pairs, 6, 40).pass);
    }
}
