//! Exact rational and dyadic arithmetic plus weight vectors.
//!
//! Nothing in this module rounds. Rationals are arbitrary-precision
//! fractions in lowest terms and serve as the oracle for every approximate
//! computation elsewhere in the crate. Dyadics are fractions with a
//! power-of-two denominator; they carry partial digit sums and enclosure
//! endpoints. Weight functions are finite convex weight vectors over named
//! generators.

use std::collections::BTreeMap;
use std::fmt;

use num::bigint::BigInt;
use num::{BigRational, One, Signed, Zero};

/// Arbitrary-precision fraction, always in lowest terms with positive
/// denominator.
pub type Rational = BigRational;

/// Errors from the exact-number layer.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NumberError {
    /// Input did not parse as "p/q" or "p".
    BadRational(String),
    /// Division by zero requested.
    DivisionByZero,
}

impl fmt::Display for NumberError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NumberError::BadRational(s) => write!(f, "invalid rational literal `{s}`"),
            NumberError::DivisionByZero => write!(f, "division by zero"),
        }
    }
}

impl std::error::Error for NumberError {}

/// Exact midpoint (a + b) / 2.
pub fn mid_rat(a: &Rational, b: &Rational) -> Rational {
    (a + b) / Rational::from_integer(BigInt::from(2))
}

/// Binary operations on rationals exposed behind one entry point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RatOp {
    Add,
    Sub,
    Mul,
    Div,
    Mid,
}

pub fn rat_arith(a: &Rational, b: &Rational, op: RatOp) -> Result<Rational, NumberError> {
    match op {
        RatOp::Add => Ok(a + b),
        RatOp::Sub => Ok(a - b),
        RatOp::Mul => Ok(a * b),
        RatOp::Div => {
            if b.is_zero() {
                Err(NumberError::DivisionByZero)
            } else {
                Ok(a / b)
            }
        }
        RatOp::Mid => Ok(mid_rat(a, b)),
    }
}

/// Parses "p/q" or a bare integer "p". The denominator must be nonzero;
/// signs may appear on the numerator.
pub fn parse_rational(s: &str) -> Result<Rational, NumberError> {
    let t = s.trim();
    let bad = || NumberError::BadRational(s.to_string());
    if let Some((num, den)) = t.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| bad())?;
        let d: BigInt = den.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        Ok(Rational::new(n, d))
    } else {
        let n: BigInt = t.parse().map_err(|_| bad())?;
        Ok(Rational::from_integer(n))
    }
}

/// Prints a rational as "p/q", or "p" when it is an integer.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// True iff the denominator is a power of two (including 1).
pub fn is_dyadic(r: &Rational) -> bool {
    let d = r.denom();
    match d.trailing_zeros() {
        None => false, // zero denominator cannot occur for normalized rationals
        Some(tz) => (d >> tz).is_one(),
    }
}

/// 2^(-n) as an exact rational.
pub fn pow2_inv(n: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << n)
}

// ---------------------------------------------------------------------------
// Dyadic numbers
// ---------------------------------------------------------------------------

/// A fraction mantissa / 2^exponent. Normalized so the mantissa is odd or
/// zero (zero keeps exponent 0).
#[derive(Clone, PartialEq, Eq)]
pub struct Dyadic {
    mant: BigInt,
    exp: u32,
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: u32) -> Dyadic {
        let mut d = Dyadic { mant, exp };
        d.normalize();
        d
    }

    fn normalize(&mut self) {
        if self.mant.is_zero() {
            self.exp = 0;
            return;
        }
        let tz = self.mant.trailing_zeros().unwrap_or(0);
        let k = (tz as u32).min(self.exp);
        if k > 0 {
            self.mant >>= k;
            self.exp -= k;
        }
    }

    pub fn zero() -> Dyadic {
        Dyadic { mant: BigInt::zero(), exp: 0 }
    }

    pub fn one() -> Dyadic {
        Dyadic { mant: BigInt::one(), exp: 0 }
    }

    pub fn minus_one() -> Dyadic {
        Dyadic { mant: -BigInt::one(), exp: 0 }
    }

    pub fn from_int(i: i64) -> Dyadic {
        Dyadic { mant: BigInt::from(i), exp: 0 }
    }

    /// 2^(-n).
    pub fn pow2_inv(n: u32) -> Dyadic {
        Dyadic { mant: BigInt::one(), exp: n }
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> u32 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.is_negative()
    }

    pub fn is_positive(&self) -> bool {
        self.mant.is_positive()
    }

    pub fn to_rational(&self) -> Rational {
        Rational::new(self.mant.clone(), BigInt::one() << self.exp)
    }

    /// Exact conversion when the rational is dyadic.
    pub fn try_from_rational(r: &Rational) -> Option<Dyadic> {
        if !is_dyadic(r) {
            return None;
        }
        let exp = r.denom().trailing_zeros().unwrap_or(0) as u32;
        Some(Dyadic::new(r.numer().clone(), exp))
    }

    fn aligned(&self, other: &Dyadic) -> (BigInt, BigInt, u32) {
        let exp = self.exp.max(other.exp);
        let a = &self.mant << (exp - self.exp);
        let b = &other.mant << (exp - other.exp);
        (a, b, exp)
    }

    pub fn add(&self, other: &Dyadic) -> Dyadic {
        let (a, b, exp) = self.aligned(other);
        Dyadic::new(a + b, exp)
    }

    pub fn sub(&self, other: &Dyadic) -> Dyadic {
        let (a, b, exp) = self.aligned(other);
        Dyadic::new(a - b, exp)
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic { mant: -self.mant.clone(), exp: self.exp }
    }

    /// Division by 2^k.
    pub fn shr(&self, k: u32) -> Dyadic {
        if self.mant.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mant: self.mant.clone(), exp: self.exp + k }
    }

    /// Multiplication by 2^k.
    pub fn shl(&self, k: u32) -> Dyadic {
        if self.exp >= k {
            Dyadic { mant: self.mant.clone(), exp: self.exp - k }
        } else {
            Dyadic::new(&self.mant << (k - self.exp), 0)
        }
    }

    /// Clamps into [-1, 1].
    pub fn clamp_unit(&self) -> Dyadic {
        if *self > Dyadic::one() {
            Dyadic::one()
        } else if *self < Dyadic::minus_one() {
            Dyadic::minus_one()
        } else {
            self.clone()
        }
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Dyadic) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Dyadic) -> std::cmp::Ordering {
        let (a, b, _) = self.aligned(other);
        a.cmp(&b)
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.mant, self.exp)
    }
}

impl fmt::Display for Dyadic {
    /// Exact decimal expansion (dyadics always have one).
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.mant.is_zero() {
            return write!(f, "0");
        }
        let neg = self.mant.is_negative();
        let abs = self.mant.abs();
        let int = &abs >> (self.exp as u64);
        let mask = (BigInt::one() << self.exp) - BigInt::one();
        let mut frac = &abs & &mask;
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push_str(&int.to_string());
        if !frac.is_zero() {
            out.push('.');
            let mut digits = String::new();
            while !frac.is_zero() {
                frac *= BigInt::from(10);
                let d = &frac >> (self.exp as u64);
                digits.push_str(&d.to_string());
                frac &= &mask;
            }
            out.push_str(&digits);
        }
        write!(f, "{out}")
    }
}

// ---------------------------------------------------------------------------
// Dyadic intervals
// ---------------------------------------------------------------------------

/// A closed interval with dyadic endpoints, used to report enclosures.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicInterval {
    lo: Dyadic,
    hi: Dyadic,
}

impl DyadicInterval {
    /// Requires lo <= hi.
    pub fn new(lo: Dyadic, hi: Dyadic) -> DyadicInterval {
        assert!(lo <= hi, "interval endpoints out of order");
        DyadicInterval { lo, hi }
    }

    pub fn point(d: Dyadic) -> DyadicInterval {
        DyadicInterval { lo: d.clone(), hi: d }
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        self.hi.sub(&self.lo).to_rational()
    }

    pub fn center(&self) -> Dyadic {
        self.lo.add(&self.hi).shr(1)
    }

    pub fn contains(&self, r: &Rational) -> bool {
        self.lo.to_rational() <= *r && *r <= self.hi.to_rational()
    }

    pub fn add(&self, other: &DyadicInterval) -> DyadicInterval {
        DyadicInterval { lo: self.lo.add(&other.lo), hi: self.hi.add(&other.hi) }
    }

    pub fn shr(&self, k: u32) -> DyadicInterval {
        DyadicInterval { lo: self.lo.shr(k), hi: self.hi.shr(k) }
    }

    pub fn neg(&self) -> DyadicInterval {
        DyadicInterval { lo: self.hi.neg(), hi: self.lo.neg() }
    }

    /// Widens by eps on both sides.
    pub fn widen(&self, eps: &Dyadic) -> DyadicInterval {
        DyadicInterval { lo: self.lo.sub(eps), hi: self.hi.add(eps) }
    }

    pub fn clamp_unit(&self) -> DyadicInterval {
        let lo = self.lo.clamp_unit();
        let hi = self.hi.clamp_unit();
        DyadicInterval { lo, hi }
    }

    /// Lower and upper bounds for |a - b| where a ranges over self and b
    /// over `other`.
    pub fn distance_bounds(&self, other: &DyadicInterval) -> (Rational, Rational) {
        let zero = Rational::zero();
        let a = self.lo.sub(&other.hi).to_rational(); // min of (a - b)
        let b = self.hi.sub(&other.lo).to_rational(); // max of (a - b)
        let lo = if a.is_positive() {
            a.clone()
        } else if b.is_negative() {
            -b.clone()
        } else {
            zero
        };
        let hi = a.abs().max(b.abs());
        (lo, hi)
    }
}

// ---------------------------------------------------------------------------
// Weight functions
// ---------------------------------------------------------------------------

/// Errors from weight-vector construction and combination.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeightError {
    /// A weight fell outside [0, 1].
    OutOfRange { generator: String, weight: String },
    /// The weights do not sum to exactly 1.
    BadSum { sum: String },
    /// weight_combine received rows of the wrong length.
    LengthMismatch { expected: usize, found: usize },
    /// Malformed JSON for a weight object.
    BadJson(String),
}

impl fmt::Display for WeightError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightError::OutOfRange { generator, weight } => {
                write!(f, "weight {weight} for `{generator}` outside [0, 1]")
            }
            WeightError::BadSum { sum } => write!(f, "weights sum to {sum}, expected 1"),
            WeightError::LengthMismatch { expected, found } => {
                write!(f, "expected {expected} rows, found {found}")
            }
            WeightError::BadJson(msg) => write!(f, "invalid weight JSON: {msg}"),
        }
    }
}

impl std::error::Error for WeightError {}

/// A finite convex weight vector over named generators: every weight lies in
/// [0, 1] and the weights sum to exactly 1. Generators with weight zero are
/// not stored, so the support is exactly the key set.
#[derive(Clone, PartialEq, Eq)]
pub struct WeightFunction {
    weights: BTreeMap<String, Rational>,
}

impl WeightFunction {
    /// Validates on construction: rejects out-of-range weights and sums
    /// different from 1 rather than renormalizing.
    pub fn new(weights: BTreeMap<String, Rational>) -> Result<WeightFunction, WeightError> {
        let mut sum = Rational::zero();
        for (g, w) in &weights {
            if w.is_negative() || *w > Rational::one() {
                return Err(WeightError::OutOfRange {
                    generator: g.clone(),
                    weight: format_rational(w),
                });
            }
            sum += w;
        }
        if !sum.is_one() {
            return Err(WeightError::BadSum { sum: format_rational(&sum) });
        }
        let weights = weights.into_iter().filter(|(_, w)| !w.is_zero()).collect();
        Ok(WeightFunction { weights })
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<WeightFunction, WeightError>
    where
        I: IntoIterator<Item = (S, Rational)>,
        S: Into<String>,
    {
        WeightFunction::new(pairs.into_iter().map(|(g, w)| (g.into(), w)).collect())
    }

    /// The Dirac weight concentrated on one generator.
    pub fn dirac(g: &str) -> WeightFunction {
        let mut m = BTreeMap::new();
        m.insert(g.to_string(), Rational::one());
        WeightFunction { weights: m }
    }

    pub fn get(&self, g: &str) -> Rational {
        self.weights.get(g).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn support(&self) -> impl Iterator<Item = &str> {
        self.weights.keys().map(|s| s.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Rational)> {
        self.weights.iter().map(|(g, w)| (g.as_str(), w))
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_dyadic(&self) -> bool {
        self.weights.values().all(is_dyadic)
    }

    /// Max-norm distance between two weight vectors over the union of their
    /// supports.
    pub fn max_norm_distance(&self, other: &WeightFunction) -> Rational {
        let mut d = Rational::zero();
        for g in self.support().chain(other.support()) {
            let diff = (self.get(g) - other.get(g)).abs();
            if diff > d {
                d = diff;
            }
        }
        d
    }

    /// Serializes as a JSON object {"gen": "p/q", ...} with keys in support
    /// order.
    pub fn to_json(&self) -> serde_json::Value {
        let mut map = serde_json::Map::new();
        for (g, w) in &self.weights {
            map.insert(g.clone(), serde_json::Value::String(format_rational(w)));
        }
        serde_json::Value::Object(map)
    }

    pub fn from_json(v: &serde_json::Value) -> Result<WeightFunction, WeightError> {
        let obj = v
            .as_object()
            .ok_or_else(|| WeightError::BadJson("expected an object".to_string()))?;
        let mut m = BTreeMap::new();
        for (g, w) in obj {
            let s = w
                .as_str()
                .ok_or_else(|| WeightError::BadJson(format!("weight of `{g}` is not a string")))?;
            let r = parse_rational(s).map_err(|e| WeightError::BadJson(e.to_string()))?;
            m.insert(g.clone(), r);
        }
        WeightFunction::new(m)
    }

    pub fn from_json_str(s: &str) -> Result<WeightFunction, WeightError> {
        let v: serde_json::Value =
            serde_json::from_str(s).map_err(|e| WeightError::BadJson(e.to_string()))?;
        WeightFunction::from_json(&v)
    }
}

impl WeightFunction {
    fn fmt_body(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, (g, w)) in self.weights.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}: {}", g, format_rational(w))?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_body(f)
    }
}

impl fmt::Display for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_body(f)
    }
}

/// Row mixing: given weights lambda over row indices and one weight vector
/// per row, forms the generator-wise combination j -> sum_i lambda_i *
/// rows_i(j). The result sums to exactly 1.
pub fn weight_combine(
    lambda: &[Rational],
    rows: &[WeightFunction],
) -> Result<WeightFunction, WeightError> {
    if lambda.len() != rows.len() {
        return Err(WeightError::LengthMismatch { expected: lambda.len(), found: rows.len() });
    }
    let mut sum = Rational::zero();
    for l in lambda {
        if l.is_negative() || *l > Rational::one() {
            return Err(WeightError::OutOfRange {
                generator: "<row>".to_string(),
                weight: format_rational(l),
            });
        }
        sum += l;
    }
    if !sum.is_one() {
        return Err(WeightError::BadSum { sum: format_rational(&sum) });
    }
    let mut acc: BTreeMap<String, Rational> = BTreeMap::new();
    for (l, row) in lambda.iter().zip(rows) {
        if l.is_zero() {
            continue;
        }
        for (g, w) in row.iter() {
            *acc.entry(g.to_string()).or_insert_with(Rational::zero) += l * w;
        }
    }
    WeightFunction::new(acc)
}
