//! Trees over one binary and one infinitary operator.
//!
//! Terms are well-founded: an infinitary node carries an eventually-periodic
//! description of its child sequence, so exact weights have closed forms.
//! Every term normalizes to a sequence of finite binary terms (one per
//! level), accessed lazily through [`NormalForm`]; evaluation interprets the
//! binary nodes with a body's midpoint and the infinitary nodes with its
//! truncated infinitary midpoint.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use num::{One, Zero};

use crate::body::{depth_for, ConvexBody};
use crate::exact::{pow2_inv, Rational, WeightFunction};

/// A finitely described sequence of terms: `prefix` entries first, then
/// `cycle` repeated forever. The cycle is non-empty.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqSpec {
    prefix: Vec<Term>,
    cycle: Vec<Term>,
}

impl SeqSpec {
    pub fn new(prefix: Vec<Term>, cycle: Vec<Term>) -> SeqSpec {
        assert!(!cycle.is_empty(), "cycle must be non-empty");
        SeqSpec { prefix, cycle }
    }

    pub fn prefix(&self) -> &[Term] {
        &self.prefix
    }

    pub fn cycle(&self) -> &[Term] {
        &self.cycle
    }

    pub fn at(&self, i: usize) -> &Term {
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }
}

/// A term: a generator, a binary node, or an infinitary node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Leaf(String),
    Pair(Box<Term>, Box<Term>),
    Omega(SeqSpec),
}

impl Term {
    pub fn leaf(g: &str) -> Term {
        Term::Leaf(g.to_string())
    }

    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }

    pub fn omega(prefix: Vec<Term>, cycle: Vec<Term>) -> Term {
        Term::Omega(SeqSpec::new(prefix, cycle))
    }

    /// All generators occurring in the term.
    pub fn generators(&self) -> std::collections::BTreeSet<String> {
        let mut out = std::collections::BTreeSet::new();
        self.collect_generators(&mut out);
        out
    }

    fn collect_generators(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            Term::Leaf(g) => {
                out.insert(g.clone());
            }
            Term::Pair(a, b) => {
                a.collect_generators(out);
                b.collect_generators(out);
            }
            Term::Omega(seq) => {
                for t in seq.prefix.iter().chain(&seq.cycle) {
                    t.collect_generators(out);
                }
            }
        }
    }

    /// True when the term contains no infinitary node.
    pub fn is_finite(&self) -> bool {
        match self {
            Term::Leaf(_) => true,
            Term::Pair(a, b) => a.is_finite() && b.is_finite(),
            Term::Omega(_) => false,
        }
    }
}

/// Errors from term operations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TermError {
    /// Substitution or evaluation met a generator with no binding.
    UnknownGenerator(String),
    /// Parse failure with 1-based line and column.
    Parse { line: usize, col: usize, message: String },
}

impl fmt::Display for TermError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermError::UnknownGenerator(g) => write!(f, "no binding for generator `{g}`"),
            TermError::Parse { line, col, message } => {
                write!(f, "parse error at {line}:{col}: {message}")
            }
        }
    }
}

impl std::error::Error for TermError {}

// ---------------------------------------------------------------------------
// Weight
// ---------------------------------------------------------------------------

/// The exact per-generator mass of a term: a leaf is a Dirac weight, a
/// binary node halves both sides, and an infinitary node weights level l by
/// 2^-(l+1). For an eventually-periodic node with prefix length L and cycle
/// length m, the cycle entry at offset r contributes the closed-form mass
/// 2^-(L+r+1) / (1 - 2^-m).
pub fn weight(t: &Term) -> WeightFunction {
    let mut acc: BTreeMap<String, Rational> = BTreeMap::new();
    add_weight(t, &Rational::one(), &mut acc);
    WeightFunction::new(acc).expect("term weights sum to one")
}

fn add_weight(t: &Term, scale: &Rational, acc: &mut BTreeMap<String, Rational>) {
    match t {
        Term::Leaf(g) => {
            *acc.entry(g.clone()).or_insert_with(Rational::zero) += scale;
        }
        Term::Pair(a, b) => {
            let half = scale / Rational::from_integer(2.into());
            add_weight(a, &half, acc);
            add_weight(b, &half, acc);
        }
        Term::Omega(seq) => {
            let len = seq.prefix.len() as u32;
            for (i, t) in seq.prefix.iter().enumerate() {
                add_weight(t, &(scale * pow2_inv(i as u32 + 1)), acc);
            }
            // geometric series over the cycle
            let m = seq.cycle.len() as u32;
            let denom = Rational::one() - pow2_inv(m);
            for (r, t) in seq.cycle.iter().enumerate() {
                let w = scale * pow2_inv(len + r as u32 + 1) / &denom;
                add_weight(t, &w, acc);
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Substitution
// ---------------------------------------------------------------------------

/// Replaces every leaf by its image under `sigma`; every generator of `t`
/// must be bound. The weight of the result is the convolution
/// w(subst(sigma, t))(j) = sum_i w(t)(i) * w(sigma(i))(j).
pub fn subst(sigma: &BTreeMap<String, Term>, t: &Term) -> Result<Term, TermError> {
    match t {
        Term::Leaf(g) => sigma
            .get(g)
            .cloned()
            .ok_or_else(|| TermError::UnknownGenerator(g.clone())),
        Term::Pair(a, b) => Ok(Term::pair(subst(sigma, a)?, subst(sigma, b)?)),
        Term::Omega(seq) => {
            let prefix = seq.prefix.iter().map(|t| subst(sigma, t)).collect::<Result<_, _>>()?;
            let cycle = seq.cycle.iter().map(|t| subst(sigma, t)).collect::<Result<_, _>>()?;
            Ok(Term::Omega(SeqSpec::new(prefix, cycle)))
        }
    }
}

// ---------------------------------------------------------------------------
// Flattening and normal forms
// ---------------------------------------------------------------------------

/// The level sequence that reduces a doubly infinitary midpoint to a single
/// one: level l is
///   mid( m_{l+1}(g(0,l+1), ..., g(l,l+1), g(l,l)),
///        m_{l+1}(g(l+1,0), ..., g(l+1,l), g(l,l)) )
/// where m_{l+1} is the right-nested midpoint fold. Feeding these levels to
/// the body's infinitary midpoint reproduces M_i(M_j grid(i, j)).
pub fn flatten_level<B: ConvexBody>(
    body: &B,
    grid: impl Fn(usize, usize) -> B::Point,
    l: usize,
) -> B::Point {
    let corner = grid(l, l);
    let row: Vec<B::Point> =
        (0..=l).map(|i| grid(i, l + 1)).chain(std::iter::once(corner.clone())).collect();
    let col: Vec<B::Point> = (0..=l).map(|j| grid(l + 1, j)).chain(std::iter::once(corner)).collect();
    body.mid(&fold_mid(body, &row), &fold_mid(body, &col))
}

fn fold_mid<B: ConvexBody>(body: &B, pts: &[B::Point]) -> B::Point {
    let (last, init) = pts.split_last().expect("non-empty fold");
    let mut acc = last.clone();
    for p in init.iter().rev() {
        acc = body.mid(p, &acc);
    }
    acc
}

/// Same construction at the level of finite terms, used by normalization:
/// builds the level-l pair from the doubly indexed finite terms u(m, n).
fn flatten_level_term(u: &impl Fn(usize, usize) -> Term, l: usize) -> Term {
    let corner = u(l, l);
    let row: Vec<Term> = (0..=l).map(|m| u(m, l + 1)).chain(std::iter::once(corner.clone())).collect();
    let col: Vec<Term> = (0..=l).map(|n| u(l + 1, n)).chain(std::iter::once(corner)).collect();
    Term::pair(fold_pair(&row), fold_pair(&col))
}

fn fold_pair(ts: &[Term]) -> Term {
    let (last, init) = ts.split_last().expect("non-empty fold");
    let mut acc = last.clone();
    for t in init.iter().rev() {
        acc = Term::pair(t.clone(), acc);
    }
    acc
}

/// Lazily produces the finite binary term at each level of a normal form.
pub trait LevelProvider: Send + Sync {
    fn level(&self, l: usize) -> Term;
}

/// A normal form: a memoized total sequence of finite binary terms, plus
/// the source term it came from when one exists. Normal forms produced by
/// weight decomposition (see the free-construction module) have no finite
/// source term.
#[derive(Clone)]
pub struct NormalForm {
    source: Option<Term>,
    provider: Arc<dyn LevelProvider>,
}

impl NormalForm {
    pub fn from_provider(source: Option<Term>, provider: Arc<dyn LevelProvider>) -> NormalForm {
        NormalForm { source, provider }
    }

    /// The finite binary term at level `l`.
    pub fn level_at(&self, l: usize) -> Term {
        let t = self.provider.level(l);
        debug_assert!(t.is_finite());
        t
    }

    pub fn source(&self) -> Option<&Term> {
        self.source.as_ref()
    }

    /// Per-generator partial weight sum_{l<n} 2^-(l+1) w(level l); within
    /// 2^-n of the source weight on every generator.
    pub fn truncated_weight(&self, n: u32) -> BTreeMap<String, Rational> {
        let mut acc: BTreeMap<String, Rational> = BTreeMap::new();
        for l in 0..n {
            let w = weight(&self.level_at(l as usize));
            for (g, v) in w.iter() {
                *acc.entry(g.to_string()).or_insert_with(Rational::zero) += pow2_inv(l + 1) * v;
            }
        }
        acc
    }
}

struct LeafProvider(String);

impl LevelProvider for LeafProvider {
    fn level(&self, _l: usize) -> Term {
        Term::Leaf(self.0.clone())
    }
}

struct PairProvider(Arc<dyn LevelProvider>, Arc<dyn LevelProvider>);

impl LevelProvider for PairProvider {
    fn level(&self, l: usize) -> Term {
        Term::pair(self.0.level(l), self.1.level(l))
    }
}

/// Eventually-periodic sequence of child providers.
struct ChildSeq {
    prefix: Vec<Arc<dyn LevelProvider>>,
    cycle: Vec<Arc<dyn LevelProvider>>,
}

impl ChildSeq {
    fn at(&self, i: usize) -> &Arc<dyn LevelProvider> {
        if i < self.prefix.len() {
            &self.prefix[i]
        } else {
            &self.cycle[(i - self.prefix.len()) % self.cycle.len()]
        }
    }
}

struct FlattenProvider {
    children: ChildSeq,
    cache: Mutex<HashMap<usize, Term>>,
}

impl LevelProvider for FlattenProvider {
    fn level(&self, l: usize) -> Term {
        if let Some(t) = self.cache.lock().unwrap().get(&l) {
            return t.clone();
        }
        let u = |m: usize, n: usize| self.children.at(m).level(n);
        let t = flatten_level_term(&u, l);
        self.cache.lock().unwrap().insert(l, t.clone());
        t
    }
}

/// Normalizes a term to its level sequence:
/// a leaf is constant at every level; a binary node pairs the children's
/// levels; an infinitary node applies the flattening construction to its
/// (already normalized) children.
pub fn normalize(t: &Term) -> NormalForm {
    NormalForm { source: Some(t.clone()), provider: build_provider(t) }
}

fn build_provider(t: &Term) -> Arc<dyn LevelProvider> {
    match t {
        Term::Leaf(g) => Arc::new(LeafProvider(g.clone())),
        Term::Pair(a, b) => Arc::new(PairProvider(build_provider(a), build_provider(b))),
        Term::Omega(seq) => {
            let prefix = seq.prefix.iter().map(build_provider).collect();
            let cycle = seq.cycle.iter().map(build_provider).collect();
            Arc::new(FlattenProvider {
                children: ChildSeq { prefix, cycle },
                cache: Mutex::new(HashMap::new()),
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Evaluates a term in a body within 2^-tol_exp: a leaf looks up its
/// assignment, a binary node takes the body midpoint, and an infinitary node
/// truncates the body's infinitary midpoint at a depth that contributes at
/// most half the budget, with the children sharing the other half.
pub fn eval<B: ConvexBody>(
    t: &Term,
    assign: &BTreeMap<String, B::Point>,
    body: &B,
    tol_exp: u32,
) -> Result<B::Point, TermError> {
    match t {
        Term::Leaf(g) => assign
            .get(g)
            .cloned()
            .ok_or_else(|| TermError::UnknownGenerator(g.clone())),
        Term::Pair(a, b) => {
            let pa = eval(a, assign, body, tol_exp)?;
            let pb = eval(b, assign, body, tol_exp)?;
            Ok(body.mid(&pa, &pb))
        }
        Term::Omega(seq) => {
            let depth = depth_for(body, tol_exp + 1);
            let mut pts = Vec::with_capacity(depth as usize);
            for i in 0..depth {
                pts.push(eval(seq.at(i as usize), assign, body, tol_exp + 1)?);
            }
            Ok(body.approx_m(&pts, &body.center(), depth))
        }
    }
}

// ---------------------------------------------------------------------------
// Flattening check suite
// ---------------------------------------------------------------------------

/// An eventually-constant grid: entry (i, j) is cells[min(i, d-1)][min(j, d-1)].
pub struct Grid<P> {
    cells: Vec<Vec<P>>,
}

impl<P: Clone> Grid<P> {
    pub fn new(cells: Vec<Vec<P>>) -> Grid<P> {
        let d = cells.len();
        assert!(d > 0 && cells.iter().all(|r| r.len() == d), "grid must be square");
        Grid { cells }
    }

    pub fn at(&self, i: usize, j: usize) -> &P {
        let d = self.cells.len();
        &self.cells[i.min(d - 1)][j.min(d - 1)]
    }
}

impl Grid<Rational> {
    /// The exact double series sum_i 2^-(i+1) sum_j 2^-(j+1) x_ij.
    pub fn double_sum(&self) -> Rational {
        let d = self.cells.len() as u32;
        let inner = |i: usize| -> Rational {
            let mut acc = Rational::zero();
            for j in 0..(d - 1) {
                acc += pow2_inv(j + 1) * self.at(i, j as usize);
            }
            acc + pow2_inv(d - 1) * self.at(i, d as usize - 1)
        };
        let mut acc = Rational::zero();
        for i in 0..(d - 1) {
            acc += pow2_inv(i + 1) * inner(i as usize);
        }
        acc + pow2_inv(d - 1) * inner(d as usize - 1)
    }
}

/// Checks the flattening identity in the interval body on random
/// eventually-constant rational grids: the nested infinitary midpoint and
/// the flattened level sequence must both agree with the exact double-sum
/// oracle within 2^-tol_exp.
pub fn check_flatten_interval(samples: u32, seed: u64, tol_exp: u32) -> crate::body::CheckReport {
    use crate::body::{random_rational, sampler, IntervalBody};
    use crate::stream::{DigitStream, Precision, StreamSeq};

    let body = IntervalBody;
    let mut rng = sampler(seed);
    let mut report = crate::body::CheckReport::new("flatten", body.name(), samples, seed, tol_exp);
    let d = 4usize;
    let prec = tol_exp + 4;
    for _ in 0..samples {
        let cells: Vec<Vec<Rational>> = (0..d)
            .map(|_| (0..d).map(|_| random_rational(&mut rng, &Rational::one())).collect())
            .collect();
        let grid = Grid::new(cells);
        let oracle = grid.double_sum();

        let stream_at = |i: usize, j: usize| {
            DigitStream::from_rational(grid.at(i, j)).expect("grid values are in range")
        };
        // nested side: M_i(M_j x_ij)
        let rows: Vec<DigitStream> = (0..d)
            .map(|i| {
                let prefix: Vec<DigitStream> = (0..d - 1).map(|j| stream_at(i, j)).collect();
                DigitStream::bigmid(&StreamSeq::periodic(prefix, vec![stream_at(i, d - 1)]))
            })
            .collect();
        let nested =
            DigitStream::bigmid(&StreamSeq::periodic(rows[..d - 1].to_vec(), vec![rows[d - 1].clone()]));

        // flattened side: M_l of the level sequence
        let g = grid;
        let flat = DigitStream::bigmid(&StreamSeq::from_fn(move |l| {
            flatten_level(&IntervalBody, |i, j| {
                DigitStream::from_rational(g.at(i, j)).expect("grid values are in range")
            }, l)
        }));

        for side in [nested, flat] {
            let c = side.approx(Precision::new(prec)).center().to_rational();
            report.record(num::Signed::abs(&(c - &oracle)));
        }
    }
    report.finish()
}

/// The same flattening check in an exact Euclidean box.
pub fn check_flatten_euclid(
    body: &crate::body::EuclideanBody,
    samples: u32,
    seed: u64,
    tol_exp: u32,
) -> crate::body::CheckReport {
    use crate::body::sampler;

    let mut rng = sampler(seed);
    let mut report = crate::body::CheckReport::new("flatten", body.name(), samples, seed, tol_exp);
    let d = 4usize;
    let depth = depth_for(body, tol_exp) + 2;
    for _ in 0..samples {
        let cells: Vec<Vec<Vec<Rational>>> =
            (0..d).map(|_| (0..d).map(|_| body.sample(&mut rng)).collect()).collect();
        let grid = Grid::new(cells);
        // componentwise double-sum oracle
        let oracle: Vec<Rational> = (0..body.dim())
            .map(|c| {
                Grid::new(
                    (0..d)
                        .map(|i| (0..d).map(|j| grid.at(i, j)[c].clone()).collect())
                        .collect(),
                )
                .double_sum()
            })
            .collect();

        // nested side, exact because the sequences are eventually constant
        let rows: Vec<Vec<Rational>> = (0..depth as usize)
            .map(|i| {
                let prefix: Vec<Vec<Rational>> =
                    (0..depth as usize).map(|j| grid.at(i, j).clone()).collect();
                body.approx_m(&prefix, grid.at(i, d - 1), depth)
            })
            .collect();
        let nested = body.approx_m(&rows, rows.last().expect("depth > 0"), depth);

        // flattened side, truncated at the same depth
        let levels: Vec<Vec<Rational>> = (0..depth as usize)
            .map(|l| flatten_level(body, |i, j| grid.at(i, j).clone(), l))
            .collect();
        let flat = body.approx_m(&levels, &body.center(), depth);

        for side in [nested, flat] {
            let (_, dist) = body.distance_bounds(&side, &oracle, 0);
            report.record(dist);
        }
    }
    report.finish()
}

// ---------------------------------------------------------------------------
// Parsing and printing
// ---------------------------------------------------------------------------

/// Grammar (whitespace-insensitive):
///   term := ident | "(mid" term term ")"
///         | "(seq" "periodic" "[" term* "]" "[" term+ "]" ")"
pub fn parse_term(text: &str) -> Result<Term, TermError> {
    let mut p = Parser::new(text);
    let t = p.term()?;
    p.skip_ws();
    if let Some(c) = p.peek() {
        return Err(p.error(format!("unexpected `{c}` after term")));
    }
    Ok(t)
}

pub fn print_term(t: &Term) -> String {
    match t {
        Term::Leaf(g) => g.clone(),
        Term::Pair(a, b) => format!("(mid {} {})", print_term(a), print_term(b)),
        Term::Omega(seq) => {
            let ps: Vec<String> = seq.prefix.iter().map(print_term).collect();
            let cs: Vec<String> = seq.cycle.iter().map(print_term).collect();
            format!("(seq periodic [{}] [{}])", ps.join(" "), cs.join(" "))
        }
    }
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    text: &'a str,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Parser<'a> {
        Parser { chars: text.chars().collect(), pos: 0, text }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek();
        if c.is_some() {
            self.pos += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn line_col(&self) -> (usize, usize) {
        let mut line = 1;
        let mut col = 1;
        for c in self.text.chars().take(self.pos) {
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }
        (line, col)
    }

    fn error(&self, message: String) -> TermError {
        let (line, col) = self.line_col();
        TermError::Parse { line, col, message }
    }

    fn expect(&mut self, c: char) -> Result<(), TermError> {
        self.skip_ws();
        match self.bump() {
            Some(got) if got == c => Ok(()),
            Some(got) => Err(self.error(format!("expected `{c}`, found `{got}`"))),
            None => Err(self.error(format!("expected `{c}`, found end of input"))),
        }
    }

    fn ident(&mut self) -> Result<String, TermError> {
        self.skip_ws();
        let start_ok = matches!(self.peek(), Some(c) if c.is_alphabetic() || c == '_');
        if !start_ok {
            return Err(self.error("expected an identifier".to_string()));
        }
        let mut s = String::new();
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || c == '_' {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok(s)
    }

    fn term(&mut self) -> Result<Term, TermError> {
        self.skip_ws();
        match self.peek() {
            Some('(') => {
                self.bump();
                let head = self.ident()?;
                match head.as_str() {
                    "mid" => {
                        let a = self.term()?;
                        let b = self.term()?;
                        self.expect(')')?;
                        Ok(Term::pair(a, b))
                    }
                    "seq" => {
                        let kind = self.ident()?;
                        if kind != "periodic" {
                            return Err(self.error(format!("expected `periodic`, found `{kind}`")));
                        }
                        let prefix = self.term_list()?;
                        let cycle = self.term_list()?;
                        if cycle.is_empty() {
                            return Err(self.error("cycle must contain at least one term".to_string()));
                        }
                        self.expect(')')?;
                        Ok(Term::Omega(SeqSpec::new(prefix, cycle)))
                    }
                    other => Err(self.error(format!("unknown operator `{other}`"))),
                }
            }
            Some(_) => Ok(Term::Leaf(self.ident()?)),
            None => Err(self.error("expected a term, found end of input".to_string())),
        }
    }

    fn term_list(&mut self) -> Result<Vec<Term>, TermError> {
        self.expect('[')?;
        let mut out = Vec::new();
        loop {
            self.skip_ws();
            if self.peek() == Some(']') {
                self.bump();
                return Ok(out);
            }
            out.push(self.term()?);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{EuclideanBody, IntervalBody};
    use crate::exact::parse_rational;
    use crate::stream::{DigitStream, Precision};
    use num::Signed;

    fn rat(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn wf(pairs: &[(&str, &str)]) -> WeightFunction {
        WeightFunction::from_pairs(pairs.iter().map(|(g, w)| (g.to_string(), rat(w)))).unwrap()
    }

    #[test]
    fn weights_of_basic_terms() {
        assert_eq!(weight(&Term::leaf("a")), WeightFunction::dirac("a"));
        let p = Term::pair(Term::leaf("a"), Term::leaf("b"));
        assert_eq!(weight(&p), wf(&[("a", "1/2"), ("b", "1/2")]));
        // alternating infinitary node: geometric masses 2/3 and 1/3
        let o = Term::omega(vec![], vec![Term::leaf("a"), Term::leaf("b")]);
        assert_eq!(weight(&o), wf(&[("a", "2/3"), ("b", "1/3")]));
    }

    #[test]
    fn omega_weight_with_prefix_matches_series() {
        // prefix [a], cycle [b, a]: a gets 1/2 + 1/6 = 2/3, b gets 1/3
        let t = Term::omega(vec![Term::leaf("a")], vec![Term::leaf("b"), Term::leaf("a")]);
        assert_eq!(weight(&t), wf(&[("a", "2/3"), ("b", "1/3")]));
    }

    #[test]
    fn substitution_identity_and_replacement() {
        let t = Term::pair(Term::leaf("a"), Term::omega(vec![], vec![Term::leaf("b")]));
        let id: BTreeMap<String, Term> =
            [("a", "a"), ("b", "b")].iter().map(|(g, h)| (g.to_string(), Term::leaf(h))).collect();
        assert_eq!(subst(&id, &t).unwrap(), t);

        let mut sigma = BTreeMap::new();
        sigma.insert("a".to_string(), Term::pair(Term::leaf("b"), Term::leaf("c")));
        assert_eq!(
            subst(&sigma, &Term::leaf("a")).unwrap(),
            Term::pair(Term::leaf("b"), Term::leaf("c"))
        );
        assert!(matches!(
            subst(&sigma, &Term::leaf("zz")),
            Err(TermError::UnknownGenerator(_))
        ));
    }

    #[test]
    fn substitution_weight_is_the_convolution() {
        // subst(a -> (mid b c), (mid a a)) has weight {b: 1/2, c: 1/2}
        let mut sigma = BTreeMap::new();
        sigma.insert("a".to_string(), Term::pair(Term::leaf("b"), Term::leaf("c")));
        let t = Term::pair(Term::leaf("a"), Term::leaf("a"));
        let s = subst(&sigma, &t).unwrap();
        assert_eq!(weight(&s), wf(&[("b", "1/2"), ("c", "1/2")]));

        // general convolution check on a term with an omega node
        let t = Term::omega(vec![Term::leaf("a")], vec![Term::leaf("b")]);
        let mut sigma = BTreeMap::new();
        sigma.insert("a".to_string(), Term::pair(Term::leaf("b"), Term::leaf("c")));
        sigma.insert("b".to_string(), Term::leaf("c"));
        let s = subst(&sigma, &t).unwrap();
        let wt = weight(&t);
        let mut expect: BTreeMap<String, Rational> = BTreeMap::new();
        for (i, wi) in wt.iter() {
            let wsi = weight(&sigma[i]);
            for (j, wj) in wsi.iter() {
                *expect.entry(j.to_string()).or_insert_with(Rational::zero) += wi * wj;
            }
        }
        assert_eq!(weight(&s), WeightFunction::new(expect).unwrap());
    }

    #[test]
    fn normalize_levels_are_finite_and_weight_preserving() {
        // constant level sequences
        let nf = normalize(&Term::leaf("a"));
        assert_eq!(nf.level_at(0), Term::leaf("a"));
        assert_eq!(nf.level_at(7), Term::leaf("a"));

        let p = Term::pair(Term::leaf("a"), Term::leaf("b"));
        let nf = normalize(&p);
        assert_eq!(nf.level_at(3), p);

        // flattened omega: truncated weights approach {a: 2/3, b: 1/3}
        let o = Term::omega(vec![], vec![Term::leaf("a"), Term::leaf("b")]);
        let nf = normalize(&o);
        for l in 0..6 {
            assert!(nf.level_at(l).is_finite());
        }
        for n in [4u32, 8, 12] {
            let tw = nf.truncated_weight(n);
            let err_a = (tw.get("a").cloned().unwrap_or_else(Rational::zero) - rat("2/3")).abs();
            let err_b = (tw.get("b").cloned().unwrap_or_else(Rational::zero) - rat("1/3")).abs();
            assert!(err_a <= pow2_inv(n) && err_b <= pow2_inv(n));
        }
    }

    #[test]
    fn eval_in_interval_matches_weight_oracle() {
        let body = IntervalBody;
        let mut assign = BTreeMap::new();
        assign.insert("a".to_string(), DigitStream::one());
        assign.insert("b".to_string(), DigitStream::minus_one());

        let p = Term::pair(Term::leaf("a"), Term::leaf("b"));
        let v = eval(&p, &assign, &body, 30).unwrap();
        let err = (v.approx(Precision::new(40)).center().to_rational() - rat("0")).abs();
        assert!(err <= pow2_inv(29));

        // weight {a: 2/3, b: 1/3} on 1 and -1 evaluates to 1/3
        let o = Term::omega(vec![], vec![Term::leaf("a"), Term::leaf("b")]);
        let v = eval(&o, &assign, &body, 30).unwrap();
        let err = (v.approx(Precision::new(40)).center().to_rational() - rat("1/3")).abs();
        assert!(err <= pow2_inv(29));

        assert!(matches!(
            eval(&Term::leaf("zz"), &assign, &body, 20),
            Err(TermError::UnknownGenerator(_))
        ));
    }

    #[test]
    fn eval_normal_form_agrees_with_source() {
        // normalization preserves value: evaluate source and levels in euclid
        let body = EuclideanBody::new(1, rat("1"));
        let mut assign = BTreeMap::new();
        assign.insert("a".to_string(), vec![rat("1")]);
        assign.insert("b".to_string(), vec![rat("-1/2")]);
        let t = Term::omega(
            vec![Term::pair(Term::leaf("a"), Term::leaf("b"))],
            vec![Term::omega(vec![], vec![Term::leaf("b"), Term::leaf("a")])],
        );
        let direct = eval(&t, &assign, &body, 40).unwrap();

        let nf = normalize(&t);
        let depth = 48u32;
        let levels: Vec<_> = (0..depth)
            .map(|l| eval(&nf.level_at(l as usize), &assign, &body, 40).unwrap())
            .collect();
        let via_levels = body.approx_m(&levels, &body.center(), depth);
        let err = (&direct[0] - &via_levels[0]).abs();
        assert!(err <= pow2_inv(37), "normalization changed the value by {err}");

        // and the weight oracle agrees with both
        let w = weight(&t);
        let oracle = w.get("a") * rat("1") + w.get("b") * rat("-1/2");
        assert!((&direct[0] - oracle).abs() <= pow2_inv(37));
    }

    #[test]
    fn flatten_level_reproduces_double_series() {
        // grid x_ij = a_i with a = (1, -1, 0, 0, ...): M of flattened = 1/4
        let body = EuclideanBody::new(1, rat("1"));
        let a = move |i: usize| {
            if i == 0 {
                vec![rat("1")]
            } else if i == 1 {
                vec![rat("-1")]
            } else {
                vec![rat("0")]
            }
        };
        let depth = 40u32;
        let levels: Vec<_> =
            (0..depth).map(|l| flatten_level(&body, |i, _j| a(i), l as usize)).collect();
        let m = body.approx_m(&levels, &body.center(), depth);
        assert!((&m[0] - rat("1/4")).abs() <= pow2_inv(37));

        // constant-in-i grid: M of flattened = sum_j 2^-(j+1) b_j
        let b = move |j: usize| {
            if j == 0 {
                vec![rat("1/2")]
            } else if j == 1 {
                vec![rat("1/3")]
            } else {
                vec![rat("-1/4")]
            }
        };
        let oracle = rat("1/2") * rat("1/2") + rat("1/4") * rat("1/3") + rat("1/4") * rat("-1/4");
        let levels: Vec<_> =
            (0..depth).map(|l| flatten_level(&body, |_i, j| b(j), l as usize)).collect();
        let m = body.approx_m(&levels, &body.center(), depth);
        assert!((&m[0] - oracle).abs() <= pow2_inv(37));

        // constant grid: every level is the constant, M is the constant
        let levels: Vec<_> =
            (0..depth).map(|l| flatten_level(&body, |_, _| vec![rat("1/3")], l as usize)).collect();
        for l in &levels {
            assert_eq!(l[0], rat("1/3"));
        }
    }

    #[test]
    fn flatten_suites_pass() {
        assert!(check_flatten_interval(5, 9, 40).pass);
        assert!(check_flatten_euclid(&EuclideanBody::new(2, rat("1")), 5, 9, 40).pass);
    }

    #[test]
    fn parse_print_round_trip() {
        for text in ["a", "(mid a b)", "(seq periodic [] [a b])", "(seq periodic [a (mid a b)] [b])"] {
            let t = parse_term(text).unwrap();
            assert_eq!(print_term(&t), text);
        }
        assert_eq!(
            parse_term("  ( mid   a\n b )"),
            Ok(Term::pair(Term::leaf("a"), Term::leaf("b")))
        );
    }

    #[test]
    fn parse_errors_carry_positions() {
        match parse_term("(mid a") {
            Err(TermError::Parse { line: 1, col, .. }) => assert!(col >= 6),
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_term("(seq periodic [a] [])") {
            Err(TermError::Parse { .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
        match parse_term("(avg a b)") {
            Err(TermError::Parse { message, .. }) => assert!(message.contains("avg")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}
