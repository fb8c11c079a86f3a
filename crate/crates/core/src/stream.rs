//! Signed-digit streams over [-1, 1].
//!
//! A stream is a total memoized function from digit index to a digit in
//! {-1, 0, +1}; its value is sum_i 2^-(i+1) * d_i. Binary midpoint and
//! truncated doubling are small carry automata; the remaining operations
//! (infinitary midpoint, multiplication, convex combination, limits) are
//! driven by a shared enclosure-refining emitter.
//!
//! Lookahead bounds: producing output digit n of `mid` reads input digits
//! 0..=n+1 of each argument; `tdouble` reads 0..=n+2; `tadd` composes the
//! two. The emitter behind `bigmid` (and hence `mul` and `cc`) reads
//! elements 0..n+4, each to digit index at most n+5. The documented
//! productivity constant is 8: n output digits touch at most n+8 digits per
//! input stream.

use std::fmt;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use num::bigint::BigInt;
use num::{One, Signed, Zero};

use crate::exact::{Dyadic, DyadicInterval, Rational};

/// A signed binary digit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Digit {
    Minus,
    Zero,
    Plus,
}

impl Digit {
    pub fn to_i8(self) -> i8 {
        match self {
            Digit::Minus => -1,
            Digit::Zero => 0,
            Digit::Plus => 1,
        }
    }

    pub fn negate(self) -> Digit {
        match self {
            Digit::Minus => Digit::Plus,
            Digit::Zero => Digit::Zero,
            Digit::Plus => Digit::Minus,
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Digit::Minus => '−',
            Digit::Zero => '0',
            Digit::Plus => '+',
        }
    }
}

/// Requested output precision: an enclosure of absolute error 2^-n.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Precision(u32);

impl Precision {
    /// Clamps to at least one digit.
    pub fn new(digits: u32) -> Precision {
        Precision(digits.max(1))
    }

    pub fn digits(self) -> u32 {
        self.0
    }
}

/// Errors from stream construction and parsing.
#[derive(Clone, Debug, PartialEq)]
pub enum StreamError {
    /// from_rational input outside [-1, 1].
    OutOfRange(String),
    /// Digit text contained a character outside {+, 0, −, -}.
    BadDigit { position: usize, found: char },
    /// An operation over a list of streams received an empty list.
    EmptyList,
}

impl fmt::Display for StreamError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StreamError::OutOfRange(r) => write!(f, "rational {r} outside [-1, 1]"),
            StreamError::BadDigit { position, found } => {
                write!(f, "invalid digit character `{found}` at position {position}")
            }
            StreamError::EmptyList => write!(f, "expected a non-empty list of streams"),
        }
    }
}

impl std::error::Error for StreamError {}

/// Produces digits in index order. Implementations are driven through the
/// memo table, which guarantees each index is generated exactly once.
trait DigitSource: Send {
    fn next_digit(&mut self) -> Digit;
}

struct Memo {
    digits: Vec<Digit>,
    source: Box<dyn DigitSource>,
}

/// A total, memoized signed-digit stream. Clones share the memo table, so a
/// stream can be passed around and queried from several threads; queries at
/// the same index always agree.
#[derive(Clone)]
pub struct DigitStream {
    memo: Arc<Mutex<Memo>>,
}

impl fmt::Debug for DigitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DigitStream({}…)", self.print(8))
    }
}

impl DigitStream {
    fn from_source(source: impl DigitSource + 'static) -> DigitStream {
        DigitStream { memo: Arc::new(Mutex::new(Memo { digits: Vec::new(), source: Box::new(source) })) }
    }

    /// The digit at `index`.
    pub fn digit(&self, index: usize) -> Digit {
        let mut memo = self.memo.lock().unwrap();
        while memo.digits.len() <= index {
            let d = memo.source.next_digit();
            memo.digits.push(d);
        }
        memo.digits[index]
    }

    /// The first `n` digits.
    pub fn digits(&self, n: usize) -> Vec<Digit> {
        (0..n).map(|i| self.digit(i)).collect()
    }

    pub fn constant(d: Digit) -> DigitStream {
        DigitStream::from_source(ConstSource(d))
    }

    pub fn zero() -> DigitStream {
        DigitStream::constant(Digit::Zero)
    }

    pub fn one() -> DigitStream {
        DigitStream::constant(Digit::Plus)
    }

    pub fn minus_one() -> DigitStream {
        DigitStream::constant(Digit::Minus)
    }

    /// Builds a stream from an arbitrary total digit function.
    pub fn from_fn(f: impl FnMut(usize) -> Digit + Send + 'static) -> DigitStream {
        DigitStream::from_source(FnSource { f: Box::new(f), pos: 0 })
    }

    /// Canonical digits of a rational in [-1, 1]: with remainder r, emit +1
    /// if r > 1/2, -1 if r < -1/2, else 0, then set r := 2r - digit. The
    /// remainder stays in [-1, 1] and the digits are eventually periodic.
    pub fn from_rational(r: &Rational) -> Result<DigitStream, StreamError> {
        if r.abs() > Rational::one() {
            return Err(StreamError::OutOfRange(crate::exact::format_rational(r)));
        }
        Ok(DigitStream::from_source(RationalSource { rem: r.clone() }))
    }

    /// Partial sum of the first `n` digits: sum_{i<n} 2^-(i+1) d_i.
    pub fn partial_sum(&self, n: u32) -> Dyadic {
        let mut acc = BigInt::zero();
        for i in 0..n {
            acc <<= 1;
            acc += self.digit(i as usize).to_i8();
        }
        Dyadic::new(acc, n)
    }

    /// An enclosure of the stream value with absolute error at most 2^-n:
    /// [t_n - 2^-n, t_n + 2^-n] clipped to [-1, 1], where t_n is the n-digit
    /// partial sum. The width is at most 2^(1-n).
    pub fn approx(&self, p: Precision) -> DyadicInterval {
        let n = p.digits();
        let t = self.partial_sum(n);
        let eps = Dyadic::pow2_inv(n);
        DyadicInterval::new(t.sub(&eps), t.add(&eps)).clamp_unit()
    }

    /// Digitwise negation; val(neg x) = -val(x).
    pub fn neg(&self) -> DigitStream {
        let x = self.clone();
        DigitStream::from_source(NegSource { x, pos: 0 })
    }

    /// Binary midpoint: val = (val(x) + val(y)) / 2. Carry automaton with
    /// integer carry in [-6, 6]; output digit n reads input digits 0..=n+1.
    pub fn mid(&self, other: &DigitStream) -> DigitStream {
        DigitStream::from_source(MidSource::new(self.clone(), 0, other.clone(), 0))
    }

    /// Truncated doubling: val = clamp(2 val(x)). Dispatching automaton that
    /// either copies the tail, saturates, or hands over to a `mid` automaton.
    pub fn tdouble(&self) -> DigitStream {
        DigitStream::from_source(DoubleSource { x: self.clone(), state: DoubleState::Start })
    }

    /// Truncated addition: val = clamp(val(x) + val(y)).
    pub fn tadd(&self, other: &DigitStream) -> DigitStream {
        self.mid(other).tdouble()
    }

    /// Truncated subtraction: val = clamp(val(x) - val(y)).
    pub fn tsub(&self, other: &DigitStream) -> DigitStream {
        self.tadd(&other.neg())
    }

    /// Infinitary midpoint: val = sum_i 2^-(i+1) val(x_i). Demands are
    /// scheduled diagonally: output digit n reads elements 0..n+4 only.
    pub fn bigmid(seq: &StreamSeq) -> DigitStream {
        let seq = seq.clone();
        DigitStream::from_enclosures(move |p| {
            // p+2 elements, each enclosed with error 2^-(p+2), plus a
            // 2^-(p+2) allowance for the untouched tail of the series.
            let d = p + 2;
            let mut acc = DyadicInterval::point(Dyadic::zero());
            for i in 0..d {
                let enc = seq.at(i as usize).approx(Precision::new(p + 2));
                acc = acc.add(&enc.shr(i + 1));
            }
            acc.widen(&Dyadic::pow2_inv(d)).clamp_unit()
        })
    }

    /// Multiplication, realized as the infinitary midpoint over the digits
    /// of `other`: digit -1 selects -x, digit 0 selects 0, digit +1 selects x.
    pub fn mul(&self, other: &DigitStream) -> DigitStream {
        let x = self.clone();
        let nx = self.neg();
        let zero = DigitStream::zero();
        let y = other.clone();
        let seq = StreamSeq::from_fn(move |i| match y.digit(i) {
            Digit::Plus => x.clone(),
            Digit::Zero => zero.clone(),
            Digit::Minus => nx.clone(),
        });
        DigitStream::bigmid(&seq)
    }

    /// Binary convex combination along `lambda`: val = val(x0) +
    /// (val(lambda)+1)/2 * (val(x1) - val(x0)). Realized as the infinitary
    /// midpoint over lambda's digits with -1 -> x0, 0 -> mid(x0, x1),
    /// +1 -> x1.
    pub fn cc(lambda: &DigitStream, x0: &DigitStream, x1: &DigitStream) -> DigitStream {
        let m = x0.mid(x1);
        let x0 = x0.clone();
        let x1 = x1.clone();
        let l = lambda.clone();
        let seq = StreamSeq::from_fn(move |i| match l.digit(i) {
            Digit::Minus => x0.clone(),
            Digit::Zero => m.clone(),
            Digit::Plus => x1.clone(),
        });
        DigitStream::bigmid(&seq)
    }

    /// Limit of a sequence with Cauchy modulus |val(a_{i+1}) - val(a_i)| <=
    /// 2^-(i+1): computed as
    /// 2 * bigmid(a_0, 2(a_1 - a_0), 4(a_2 - a_1), ...) using truncated
    /// subtraction and doubling; under the modulus no truncation ever clips.
    /// The modulus is not checked (it is undecidable); on violating input
    /// the result is an unspecified value in [-1, 1].
    pub fn limit(seq: &StreamSeq) -> DigitStream {
        let alpha = seq.clone();
        let entries = StreamSeq::from_fn(move |i| {
            if i == 0 {
                alpha.at(0)
            } else {
                let mut s = alpha.at(i).tsub(&alpha.at(i - 1));
                for _ in 0..i {
                    s = s.tdouble();
                }
                s
            }
        });
        DigitStream::bigmid(&entries).tdouble()
    }

    /// Right-nested midpoint fold over a non-empty list:
    /// m(x_0, m(x_1, ... m(x_{n-1}, x_n))). Its value is
    /// sum_{i<n} 2^-(i+1) val(x_i) + 2^-n val(x_n).
    pub fn mid_chain(xs: &[DigitStream]) -> Result<DigitStream, StreamError> {
        let (last, init) = xs.split_last().ok_or(StreamError::EmptyList)?;
        let mut acc = last.clone();
        for x in init.iter().rev() {
            acc = x.mid(&acc);
        }
        Ok(acc)
    }

    /// Parses digit text over {+, 0, −} (ASCII '-' also accepted); digits
    /// beyond the text are zero.
    pub fn parse(text: &str) -> Result<DigitStream, StreamError> {
        let mut digits = Vec::new();
        for (position, c) in text.chars().enumerate() {
            let d = match c {
                '+' => Digit::Plus,
                '0' => Digit::Zero,
                '−' | '-' => Digit::Minus,
                found => return Err(StreamError::BadDigit { position, found }),
            };
            digits.push(d);
        }
        Ok(DigitStream::from_source(FiniteSource { digits, pos: 0 }))
    }

    /// The first `n` digits as text; round-trips with `parse`.
    pub fn print(&self, n: usize) -> String {
        (0..n).map(|i| self.digit(i).to_char()).collect()
    }

    /// Value comparison at a precision. Stream equality is undecidable, so
    /// the answer is at best "indistinguishable at this precision".
    pub fn cmp_at(&self, other: &DigitStream, p: Precision) -> StreamOrder {
        let a = self.approx(p);
        let b = other.approx(p);
        if a.lo() > b.hi() {
            StreamOrder::Greater
        } else if a.hi() < b.lo() {
            StreamOrder::Less
        } else {
            StreamOrder::Indistinguishable
        }
    }

    /// Builds a stream from an enclosure oracle. `approx(p)` must return an
    /// interval containing the target value v in [-1, 1], within [-1, 1],
    /// of width at most 2^(1-p).
    ///
    /// Emission invariant: after emitting digits z_0..z_{n-1} the residual
    /// r_n = 2^n (v - sum_{i<n} 2^-(i+1) z_i) lies in [-1, 1]. Digit n is
    /// chosen from an enclosure of r_n of width <= 1/4: nonnegative -> +1,
    /// nonpositive -> -1, otherwise |r_n| < 1/2 and 0 is safe.
    pub fn from_enclosures(approx: impl FnMut(u32) -> DyadicInterval + Send + 'static) -> DigitStream {
        DigitStream::from_source(EnclosureSource { approx: Box::new(approx), emitted: BigInt::zero(), n: 0 })
    }

    /// Wraps a stream so the number of digits pulled from it can be
    /// observed; used to test lookahead bounds.
    pub fn probed(&self) -> (DigitStream, Arc<AtomicUsize>) {
        let counter = Arc::new(AtomicUsize::new(0));
        let src = ProbeSource { x: self.clone(), pos: 0, counter: counter.clone() };
        (DigitStream::from_source(src), counter)
    }
}

/// Result of a value comparison at a precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StreamOrder {
    Less,
    Greater,
    Indistinguishable,
}

// ---------------------------------------------------------------------------
// Sequences of streams
// ---------------------------------------------------------------------------

/// A total sequence of streams with cached elements, so that repeated index
/// queries return the same (memoized) stream.
#[derive(Clone)]
pub struct StreamSeq {
    inner: Arc<SeqInner>,
}

struct SeqInner {
    f: Box<dyn Fn(usize) -> DigitStream + Send + Sync>,
    cache: Mutex<Vec<DigitStream>>,
}

impl StreamSeq {
    pub fn from_fn(f: impl Fn(usize) -> DigitStream + Send + Sync + 'static) -> StreamSeq {
        StreamSeq { inner: Arc::new(SeqInner { f: Box::new(f), cache: Mutex::new(Vec::new()) }) }
    }

    pub fn constant(x: &DigitStream) -> StreamSeq {
        let x = x.clone();
        StreamSeq::from_fn(move |_| x.clone())
    }

    /// Eventually-periodic sequence: prefix entries first, then the cycle
    /// repeated forever. The cycle must be non-empty.
    pub fn periodic(prefix: Vec<DigitStream>, cycle: Vec<DigitStream>) -> StreamSeq {
        assert!(!cycle.is_empty(), "cycle must be non-empty");
        StreamSeq::from_fn(move |i| {
            if i < prefix.len() {
                prefix[i].clone()
            } else {
                cycle[(i - prefix.len()) % cycle.len()].clone()
            }
        })
    }

    pub fn at(&self, i: usize) -> DigitStream {
        let mut cache = self.inner.cache.lock().unwrap();
        while cache.len() <= i {
            let next = (self.inner.f)(cache.len());
            cache.push(next);
        }
        cache[i].clone()
    }

    /// The sequence shifted left by one.
    pub fn tail(&self) -> StreamSeq {
        let s = self.clone();
        StreamSeq::from_fn(move |i| s.at(i + 1))
    }
}

// ---------------------------------------------------------------------------
// Digit sources
// ---------------------------------------------------------------------------

struct ConstSource(Digit);

impl DigitSource for ConstSource {
    fn next_digit(&mut self) -> Digit {
        self.0
    }
}

struct FnSource {
    f: Box<dyn FnMut(usize) -> Digit + Send>,
    pos: usize,
}

impl DigitSource for FnSource {
    fn next_digit(&mut self) -> Digit {
        let d = (self.f)(self.pos);
        self.pos += 1;
        d
    }
}

struct FiniteSource {
    digits: Vec<Digit>,
    pos: usize,
}

impl DigitSource for FiniteSource {
    fn next_digit(&mut self) -> Digit {
        let d = self.digits.get(self.pos).copied().unwrap_or(Digit::Zero);
        self.pos += 1;
        d
    }
}

struct RationalSource {
    rem: Rational,
}

impl DigitSource for RationalSource {
    fn next_digit(&mut self) -> Digit {
        let half = Rational::new(BigInt::one(), BigInt::from(2));
        let d = if self.rem > half {
            Digit::Plus
        } else if self.rem < -half {
            Digit::Minus
        } else {
            Digit::Zero
        };
        let two = Rational::from_integer(BigInt::from(2));
        self.rem = &self.rem * two - Rational::from_integer(BigInt::from(d.to_i8()));
        d
    }
}

struct NegSource {
    x: DigitStream,
    pos: usize,
}

impl DigitSource for NegSource {
    fn next_digit(&mut self) -> Digit {
        let d = self.x.digit(self.pos).negate();
        self.pos += 1;
        d
    }
}

struct ProbeSource {
    x: DigitStream,
    pos: usize,
    counter: Arc<AtomicUsize>,
}

impl DigitSource for ProbeSource {
    fn next_digit(&mut self) -> Digit {
        let d = self.x.digit(self.pos);
        self.pos += 1;
        self.counter.fetch_max(self.pos, Ordering::SeqCst);
        d
    }
}

/// Average automaton. With u_i = a_i + b_i, the carry C maintains the
/// invariant r = C/8 + sum_{j>=2} 2^-(j+2) u_{k+j} for the residual r of the
/// output, so 8r is within 2 of C. The digit choice keeps C in [-6, 6]:
/// emit sign(C) when |C| >= 2, else 0, then C := 2C - 8z + u_next.
struct MidSource {
    a: DigitStream,
    aoff: usize,
    b: DigitStream,
    boff: usize,
    next: usize,
    carry: Option<i32>,
}

impl MidSource {
    fn new(a: DigitStream, aoff: usize, b: DigitStream, boff: usize) -> MidSource {
        MidSource { a, aoff, b, boff, next: 0, carry: None }
    }

    fn u(&mut self) -> i32 {
        let i = self.next;
        self.next += 1;
        self.a.digit(self.aoff + i).to_i8() as i32 + self.b.digit(self.boff + i).to_i8() as i32
    }
}

impl DigitSource for MidSource {
    fn next_digit(&mut self) -> Digit {
        let c = match self.carry {
            Some(c) => c,
            None => {
                let c = 2 * self.u() + self.u();
                self.carry = Some(c);
                c
            }
        };
        let z = if c >= 2 {
            Digit::Plus
        } else if c <= -2 {
            Digit::Minus
        } else {
            Digit::Zero
        };
        let c2 = 2 * c - 8 * (z.to_i8() as i32) + self.u();
        debug_assert!((-6..=6).contains(&c2), "mid carry out of range: {c2}");
        self.carry = Some(c2);
        z
    }
}

/// Truncated doubling automaton over the input digits d_0 d_1 ...:
/// 2 val = d_0 + val(tail), so
///   d_0 = 0  -> copy the tail verbatim;
///   d_0 = +1 -> emit clamp(1 + val(tail)): reading tail digit e,
///               e = +1 saturates to the constant +1 stream,
///               e = 0 emits +1 and repeats,
///               e = -1 leaves the remaining output equal to
///               mid(1, rest), handled by the mid automaton;
///   d_0 = -1 -> mirror image.
struct DoubleSource {
    x: DigitStream,
    state: DoubleState,
}

enum DoubleState {
    Start,
    Copy { pos: usize },
    SatHigh { pos: usize },
    SatLow { pos: usize },
    Constant(Digit),
    Delegate(MidSource),
}

impl DigitSource for DoubleSource {
    fn next_digit(&mut self) -> Digit {
        loop {
            match &mut self.state {
                DoubleState::Start => {
                    self.state = match self.x.digit(0) {
                        Digit::Zero => DoubleState::Copy { pos: 1 },
                        Digit::Plus => DoubleState::SatHigh { pos: 1 },
                        Digit::Minus => DoubleState::SatLow { pos: 1 },
                    };
                }
                DoubleState::Copy { pos } => {
                    let d = self.x.digit(*pos);
                    *pos += 1;
                    return d;
                }
                DoubleState::SatHigh { pos } => {
                    let e = self.x.digit(*pos);
                    *pos += 1;
                    match e {
                        Digit::Plus => self.state = DoubleState::Constant(Digit::Plus),
                        Digit::Zero => return Digit::Plus,
                        Digit::Minus => {
                            let rest = *pos;
                            self.state = DoubleState::Delegate(MidSource::new(
                                DigitStream::one(),
                                0,
                                self.x.clone(),
                                rest,
                            ));
                        }
                    }
                }
                DoubleState::SatLow { pos } => {
                    let e = self.x.digit(*pos);
                    *pos += 1;
                    match e {
                        Digit::Minus => self.state = DoubleState::Constant(Digit::Minus),
                        Digit::Zero => return Digit::Minus,
                        Digit::Plus => {
                            let rest = *pos;
                            self.state = DoubleState::Delegate(MidSource::new(
                                DigitStream::minus_one(),
                                0,
                                self.x.clone(),
                                rest,
                            ));
                        }
                    }
                }
                DoubleState::Constant(d) => return *d,
                DoubleState::Delegate(mid) => return mid.next_digit(),
            }
        }
    }
}

struct EnclosureSource {
    approx: Box<dyn FnMut(u32) -> DyadicInterval + Send>,
    /// Integer p_n = sum_{i<n} 2^(n-1-i) z_i, so emitted value = p_n / 2^n.
    emitted: BigInt,
    n: u32,
}

impl DigitSource for EnclosureSource {
    fn next_digit(&mut self) -> Digit {
        let enc = (self.approx)(self.n + 3).clamp_unit();
        // Residual enclosure: r = 2^n v - p_n, of width <= 2^n * 2^-(n+2).
        let p = Dyadic::new(self.emitted.clone(), 0);
        let lo = enc.lo().shl(self.n).sub(&p);
        let hi = enc.hi().shl(self.n).sub(&p);
        let z = if !lo.is_negative() {
            Digit::Plus
        } else if !hi.is_positive() {
            Digit::Minus
        } else {
            Digit::Zero
        };
        self.emitted = (&self.emitted << 1) + BigInt::from(z.to_i8());
        self.n += 1;
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{mid_rat, parse_rational, pow2_inv};

    fn rat(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn from(s: &str) -> DigitStream {
        DigitStream::from_rational(&rat(s)).unwrap()
    }

    /// Asserts the p-digit enclosure of `s` contains the exact value `r`.
    fn assert_encloses(s: &DigitStream, r: &Rational, p: u32) {
        let enc = s.approx(Precision::new(p));
        assert!(
            enc.contains(r),
            "enclosure [{}, {}] misses {}",
            enc.lo(),
            enc.hi(),
            crate::exact::format_rational(r)
        );
    }

    #[test]
    fn canonical_digits_of_rationals() {
        assert_eq!(from("1").print(4), "++++");
        assert_eq!(from("0").print(4), "0000");
        assert_eq!(from("1/3").print(6), "0+0+0+");
        assert_eq!(from("-1").print(3), "−−−");
    }

    #[test]
    fn from_rational_rejects_out_of_range() {
        assert!(DigitStream::from_rational(&rat("3/2")).is_err());
        assert!(DigitStream::from_rational(&rat("-2")).is_err());
    }

    #[test]
    fn enclosures_are_sound_and_tight() {
        for s in ["0", "1/3", "1", "-5/7", "1/2"] {
            let r = rat(s);
            let x = from(s);
            for p in [1, 4, 10, 40] {
                let enc = x.approx(Precision::new(p));
                assert!(enc.contains(&r));
                assert!(enc.width() <= pow2_inv(p - 1));
            }
        }
        // clipping at the endpoint
        let enc = from("1").approx(Precision::new(2));
        assert_eq!(enc.hi().to_rational(), rat("1"));
    }

    #[test]
    fn mid_matches_rational_oracle() {
        let cases = [("1", "-1"), ("1/3", "1/2"), ("1/3", "1/3"), ("-3/5", "7/9")];
        for (a, b) in cases {
            let m = from(a).mid(&from(b));
            let expect = mid_rat(&rat(a), &rat(b));
            assert_encloses(&m, &expect, 60);
        }
    }

    #[test]
    fn mid_lookahead_is_bounded() {
        let (a, ca) = from("1/3").probed();
        let (b, cb) = from("-5/7").probed();
        let m = a.mid(&b);
        let n = 40;
        m.digit(n - 1);
        assert!(ca.load(Ordering::SeqCst) <= n + 2);
        assert!(cb.load(Ordering::SeqCst) <= n + 2);
    }

    #[test]
    fn neg_is_digitwise_and_involutive() {
        let x = from("1/3");
        assert_eq!(x.neg().print(8), "0−0−0−0−");
        assert_eq!(x.neg().neg().digits(20), x.digits(20));
        assert_encloses(&from("1/3").neg(), &rat("-1/3"), 50);
        assert_eq!(from("0").neg().print(4), "0000");
    }

    #[test]
    fn bigmid_matches_series_oracle() {
        // (1, -1, 0, 0, ...) -> 1/2 - 1/4 = 1/4
        let seq = StreamSeq::periodic(
            vec![from("1"), from("-1")],
            vec![DigitStream::zero()],
        );
        assert_encloses(&DigitStream::bigmid(&seq), &rat("1/4"), 60);

        // idempotency: M(x, x, ...) = x
        let x = from("5/7");
        assert_encloses(&DigitStream::bigmid(&StreamSeq::constant(&x)), &rat("5/7"), 60);

        // m(x, y) = M(x, y, y, ...)
        let seq = StreamSeq::periodic(vec![from("1/3")], vec![from("1/2")]);
        assert_encloses(&DigitStream::bigmid(&seq), &rat("5/12"), 60);
    }

    #[test]
    fn bigmid_unfolds() {
        let seq = StreamSeq::periodic(vec![from("1/3"), from("-1/2")], vec![from("3/4"), from("-1/8")]);
        let lhs = DigitStream::bigmid(&seq);
        let rhs = seq.at(0).mid(&DigitStream::bigmid(&seq.tail()));
        let (_, hi) = lhs.approx(Precision::new(60)).distance_bounds(&rhs.approx(Precision::new(60)));
        assert!(hi <= pow2_inv(58));
    }

    #[test]
    fn bigmid_lookahead_is_diagonal() {
        let (x, cx) = from("1/3").probed();
        let counter = Arc::new(AtomicUsize::new(0));
        let max_elem = counter.clone();
        let seq = StreamSeq::from_fn(move |i| {
            max_elem.fetch_max(i + 1, Ordering::SeqCst);
            x.clone()
        });
        let m = DigitStream::bigmid(&seq);
        let n = 30;
        m.digit(n - 1);
        assert!(counter.load(Ordering::SeqCst) <= n + 5, "elements touched: {}", counter.load(Ordering::SeqCst));
        assert!(cx.load(Ordering::SeqCst) <= n + 8, "digits touched: {}", cx.load(Ordering::SeqCst));
    }

    #[test]
    fn truncated_ops_match_clamp_oracle() {
        let clamp = |r: Rational| {
            if r > rat("1") {
                rat("1")
            } else if r < rat("-1") {
                rat("-1")
            } else {
                r
            }
        };
        let cases = [("1", "1"), ("1/3", "0"), ("3/4", "3/4"), ("-2/3", "-3/4"), ("1/3", "-5/6")];
        for (a, b) in cases {
            let expect = clamp(rat(a) + rat(b));
            assert_encloses(&from(a).tadd(&from(b)), &expect, 55);
            let expect = clamp(rat(a) - rat(b));
            assert_encloses(&from(a).tsub(&from(b)), &expect, 55);
        }
        for a in ["1/3", "3/4", "-3/4", "0", "1", "-1", "5/8", "-1/64"] {
            let expect = clamp(rat(a) * rat("2"));
            assert_encloses(&from(a).tdouble(), &expect, 55);
        }
    }

    #[test]
    fn mul_matches_rational_oracle() {
        let cases = [("1/3", "1/2"), ("1", "-5/7"), ("-1", "-1"), ("2/3", "-3/5"), ("0", "1")];
        for (a, b) in cases {
            let expect = rat(a) * rat(b);
            assert_encloses(&from(a).mul(&from(b)), &expect, 52);
        }
        // unit laws
        let x = from("-4/9");
        assert_encloses(&x.mul(&from("1")), &rat("-4/9"), 52);
        assert_encloses(&x.mul(&from("-1")), &rat("4/9"), 52);
    }

    #[test]
    fn cc_is_the_affine_path() {
        // cc(-1) = x0, cc(0) = midpoint, cc(1/2) on [0, 1] = 3/4
        let x0 = from("0");
        let x1 = from("1");
        assert_encloses(&DigitStream::cc(&from("-1"), &x0, &x1), &rat("0"), 50);
        assert_encloses(&DigitStream::cc(&from("0"), &x0, &x1), &rat("1/2"), 50);
        assert_encloses(&DigitStream::cc(&from("1/2"), &x0, &x1), &rat("3/4"), 50);
        let expect = rat("-1/4") + (rat("1/3") + rat("1")) / rat("2") * (rat("1/2") - rat("-1/4"));
        assert_encloses(&DigitStream::cc(&from("1/3"), &from("-1/4"), &from("1/2")), &expect, 50);
    }

    #[test]
    fn limit_recovers_limits() {
        // constant sequence
        let x = from("3/7");
        assert_encloses(&DigitStream::limit(&StreamSeq::constant(&x)), &rat("3/7"), 45);

        // partial sums of 1/3 = sum 2^-(2k+2): a_i = (1 - 4^-i)/3
        let seq = StreamSeq::from_fn(|i| {
            let p = rat("1/3") * (rat("1") - pow2_inv(2 * i as u32));
            DigitStream::from_rational(&p).unwrap()
        });
        assert_encloses(&DigitStream::limit(&seq), &rat("1/3"), 42);

        // a_i = 1 - 2^-(i+1) converges to the endpoint
        let seq = StreamSeq::from_fn(|i| {
            let p = rat("1") - pow2_inv(i as u32 + 1);
            DigitStream::from_rational(&p).unwrap()
        });
        assert_encloses(&DigitStream::limit(&seq), &rat("1"), 42);
    }

    #[test]
    fn mid_chain_weights() {
        let x = from("2/5");
        let m0 = DigitStream::mid_chain(std::slice::from_ref(&x)).unwrap();
        assert_eq!(m0.digits(30), x.digits(30));
        let m2 = DigitStream::mid_chain(&[from("1"), from("1"), from("1")]).unwrap();
        assert_encloses(&m2, &rat("1"), 50);
        let m2 = DigitStream::mid_chain(&[from("1"), from("-1"), from("0")]).unwrap();
        assert_encloses(&m2, &rat("1/4"), 50);
        assert!(DigitStream::mid_chain(&[]).is_err());
    }

    #[test]
    fn parse_print_round_trip() {
        let t = "+−0+";
        assert_eq!(DigitStream::parse(t).unwrap().print(t.chars().count()), t);
        assert_encloses(&DigitStream::parse("+−").unwrap(), &rat("1/4"), 40);
        assert_encloses(&DigitStream::parse("").unwrap(), &rat("0"), 40);
        assert_eq!(DigitStream::parse("-").unwrap().digit(0), Digit::Minus);
        let err = DigitStream::parse("+x").unwrap_err();
        assert_eq!(err, StreamError::BadDigit { position: 1, found: 'x' });
    }

    #[test]
    fn cmp_at_precision() {
        let p = Precision::new(30);
        assert_eq!(from("1/3").cmp_at(&from("1/2"), p), StreamOrder::Less);
        assert_eq!(from("1/2").cmp_at(&from("1/3"), p), StreamOrder::Greater);
        assert_eq!(from("1/3").cmp_at(&from("1/3"), p), StreamOrder::Indistinguishable);
        // too coarse to separate
        assert_eq!(from("0").cmp_at(&from("1/1024"), Precision::new(4)), StreamOrder::Indistinguishable);
    }

    #[test]
    fn streams_are_shareable_across_threads() {
        let x = from("1/3").mid(&from("-5/7"));
        let mut handles = Vec::new();
        for _ in 0..4 {
            let y = x.clone();
            handles.push(std::thread::spawn(move || y.digits(50)));
        }
        let first = x.digits(50);
        for h in handles {
            assert_eq!(h.join().unwrap(), first);
        }
    }

    #[test]
    fn negation_laws_on_rationals() {
        // -(x mid y) = (-x) mid (-y), x mid -x = 0, -0 = 0
        let x = from("3/11");
        let y = from("-1/2");
        let lhs = x.mid(&y).neg();
        let rhs = x.neg().mid(&y.neg());
        let expect = -mid_rat(&rat("3/11"), &rat("-1/2"));
        assert_encloses(&lhs, &expect, 50);
        assert_encloses(&rhs, &expect, 50);
        assert_encloses(&x.mid(&x.neg()), &rat("0"), 50);
    }
}
