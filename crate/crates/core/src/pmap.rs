//! Finite partial bijections of the naturals and lazily realized total
//! permutations.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::fmt;
use std::rc::Rc;
use std::str::FromStr;

use crate::error::{CoreError, Result};
use crate::words::Word;

pub type Point = u64;

/// Anything that can be evaluated forwards and backwards at a point.
///
/// Total permutations return `Some` everywhere. Implementations backed by a
/// lazy memo may grow it on evaluation.
pub trait PointMap {
    fn forward(&self, a: Point) -> Option<Point>;
    fn backward(&self, b: Point) -> Option<Point>;
}

impl<T: PointMap + ?Sized> PointMap for &T {
    fn forward(&self, a: Point) -> Option<Point> {
        (**self).forward(a)
    }
    fn backward(&self, b: Point) -> Option<Point> {
        (**self).backward(b)
    }
}

impl<T: PointMap + ?Sized> PointMap for Rc<T> {
    fn forward(&self, a: Point) -> Option<Point> {
        (**self).forward(a)
    }
    fn backward(&self, b: Point) -> Option<Point> {
        (**self).backward(b)
    }
}

/// A finite injective map. Equality, ordering and display use the sorted
/// pair list.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PartialBijection {
    fwd: BTreeMap<Point, Point>,
    bwd: BTreeMap<Point, Point>,
}

impl PartialBijection {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Point, Point)>>(pairs: I) -> Result<Self> {
        let mut pb = Self::new();
        for (a, b) in pairs {
            pb.insert(a, b)?;
        }
        Ok(pb)
    }

    pub fn len(&self) -> usize {
        self.fwd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fwd.is_empty()
    }

    pub fn apply(&self, a: Point) -> Option<Point> {
        self.fwd.get(&a).copied()
    }

    pub fn unapply(&self, b: Point) -> Option<Point> {
        self.bwd.get(&b).copied()
    }

    pub fn in_dom(&self, a: Point) -> bool {
        self.fwd.contains_key(&a)
    }

    pub fn in_ran(&self, b: Point) -> bool {
        self.bwd.contains_key(&b)
    }

    pub fn insert(&mut self, a: Point, b: Point) -> Result<()> {
        if let Some(old) = self.apply(a) {
            return Err(CoreError::Injectivity(format!("{a} already maps to {old}")));
        }
        if let Some(old) = self.unapply(b) {
            return Err(CoreError::Injectivity(format!("{b} already has preimage {old}")));
        }
        self.fwd.insert(a, b);
        self.bwd.insert(b, a);
        Ok(())
    }

    /// `self ∪ {(a, b)}`.
    pub fn extend(&self, a: Point, b: Point) -> Result<Self> {
        let mut out = self.clone();
        out.insert(a, b)?;
        Ok(out)
    }

    pub fn inverse(&self) -> Self {
        PartialBijection { fwd: self.bwd.clone(), bwd: self.fwd.clone() }
    }

    /// Pairs sorted by first coordinate.
    pub fn pairs(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        self.fwd.iter().map(|(&a, &b)| (a, b))
    }

    pub fn dom(&self) -> impl Iterator<Item = Point> + '_ {
        self.fwd.keys().copied()
    }

    pub fn ran(&self) -> impl Iterator<Item = Point> + '_ {
        self.bwd.keys().copied()
    }

    pub fn is_subset_of(&self, other: &PartialBijection) -> bool {
        self.pairs().all(|(a, b)| other.apply(a) == Some(b))
    }

    pub fn restrict<F: Fn(Point) -> bool>(&self, keep: F) -> Self {
        let mut out = Self::new();
        for (a, b) in self.pairs().filter(|&(a, _)| keep(a)) {
            out.insert(a, b).expect("restriction of an injection is injective");
        }
        out
    }

    /// Largest point appearing in domain or range.
    pub fn max_point(&self) -> Option<Point> {
        self.fwd.keys().next_back().copied().max(self.bwd.keys().next_back().copied())
    }
}

impl PointMap for PartialBijection {
    fn forward(&self, a: Point) -> Option<Point> {
        self.apply(a)
    }
    fn backward(&self, b: Point) -> Option<Point> {
        self.unapply(b)
    }
}

impl fmt::Debug for PartialBijection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{self}}}")
    }
}

impl fmt::Display for PartialBijection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (a, b)) in self.pairs().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{a}->{b}")?;
        }
        Ok(())
    }
}

impl FromStr for PartialBijection {
    type Err = CoreError;

    /// Parses `3->4, 4->0`. The empty string is the empty map.
    fn from_str(s: &str) -> Result<Self> {
        let mut pb = Self::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (a, b) = part
                .split_once("->")
                .ok_or_else(|| CoreError::Parse(format!("expected `a->b`, got `{part}`")))?;
            let parse = |t: &str| {
                t.trim()
                    .parse::<Point>()
                    .map_err(|_| CoreError::Parse(format!("bad point `{t}`")))
            };
            pb.insert(parse(a)?, parse(b)?)?;
        }
        Ok(pb)
    }
}

impl serde::Serialize for PartialBijection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(self.pairs())
    }
}

/// A permutation moving only finitely many points.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct FiniteSupportPerm {
    moved: PartialBijection,
    cycles: Vec<Vec<Point>>,
}

impl FiniteSupportPerm {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn from_cycles(cycles: Vec<Vec<Point>>) -> Result<Self> {
        let mut moved = PartialBijection::new();
        let mut seen = std::collections::BTreeSet::new();
        for c in &cycles {
            for &p in c {
                if !seen.insert(p) {
                    return Err(CoreError::Parse(format!("point {p} appears in two cycles")));
                }
            }
            if c.len() < 2 {
                continue;
            }
            for (i, &p) in c.iter().enumerate() {
                moved.insert(p, c[(i + 1) % c.len()])?;
            }
        }
        let cycles = cycles.into_iter().filter(|c| c.len() >= 2).collect();
        Ok(FiniteSupportPerm { moved, cycles })
    }

    /// Permutation with the given pairs on its support; everything else
    /// is fixed. Fails unless `pairs` permutes its own domain.
    pub fn from_moved(moved: PartialBijection) -> Result<Self> {
        if moved.dom().ne(moved.ran()) {
            return Err(CoreError::Precondition("pairs do not permute their support".into()));
        }
        let mut cycles = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for start in moved.dom() {
            if seen.contains(&start) || moved.apply(start) == Some(start) {
                continue;
            }
            let mut c = vec![start];
            seen.insert(start);
            let mut p = moved.apply(start).unwrap();
            while p != start {
                seen.insert(p);
                c.push(p);
                p = moved.apply(p).unwrap();
            }
            cycles.push(c);
        }
        Self::from_cycles(cycles)
    }

    pub fn apply(&self, a: Point) -> Point {
        self.moved.apply(a).unwrap_or(a)
    }

    pub fn unapply(&self, b: Point) -> Point {
        self.moved.unapply(b).unwrap_or(b)
    }

    pub fn support_max(&self) -> Option<Point> {
        self.moved.max_point()
    }

    pub fn inverse(&self) -> Self {
        let cycles = self.cycles.iter().map(|c| c.iter().rev().copied().collect()).collect();
        FiniteSupportPerm { moved: self.moved.inverse(), cycles }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &FiniteSupportPerm) -> Self {
        let support: std::collections::BTreeSet<Point> =
            self.moved.dom().chain(other.moved.dom()).collect();
        let moved = PartialBijection::from_pairs(
            support.into_iter().map(|p| (p, self.apply(other.apply(p)))).filter(|(a, b)| a != b),
        )
        .expect("composition of permutations is a permutation");
        Self::from_moved(moved).expect("support is closed")
    }

    pub fn is_identity(&self) -> bool {
        self.moved.is_empty()
    }
}

impl PointMap for FiniteSupportPerm {
    fn forward(&self, a: Point) -> Option<Point> {
        Some(self.apply(a))
    }
    fn backward(&self, b: Point) -> Option<Point> {
        Some(self.unapply(b))
    }
}

impl fmt::Display for FiniteSupportPerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.cycles {
            f.write_str("(")?;
            for (i, p) in c.iter().enumerate() {
                if i > 0 {
                    f.write_str(" ")?;
                }
                write!(f, "{p}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl FromStr for FiniteSupportPerm {
    type Err = CoreError;

    /// Disjoint cycle notation, `(0 3)(1 5 2)`; empty means identity.
    fn from_str(s: &str) -> Result<Self> {
        let mut cycles = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let body = rest
                .strip_prefix('(')
                .ok_or_else(|| CoreError::Parse(format!("expected `(` in `{s}`")))?;
            let (inner, tail) = body
                .split_once(')')
                .ok_or_else(|| CoreError::Parse(format!("unclosed cycle in `{s}`")))?;
            let cycle = inner
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<Point>().map_err(|_| CoreError::Parse(format!("bad point `{t}`"))))
                .collect::<Result<Vec<_>>>()?;
            cycles.push(cycle);
            rest = tail.trim_start();
        }
        Self::from_cycles(cycles)
    }
}

/// `outer ∘ inner`, defined where `inner` is and `outer` is defined on the
/// result.
pub struct Composed<A, B> {
    pub outer: A,
    pub inner: B,
}

impl<A: PointMap, B: PointMap> PointMap for Composed<A, B> {
    fn forward(&self, a: Point) -> Option<Point> {
        self.inner.forward(a).and_then(|x| self.outer.forward(x))
    }
    fn backward(&self, b: Point) -> Option<Point> {
        self.outer.backward(b).and_then(|x| self.inner.backward(x))
    }
}

/// A map given by a pair of closures.
pub struct FnMap {
    fwd: Box<dyn Fn(Point) -> Option<Point>>,
    bwd: Box<dyn Fn(Point) -> Option<Point>>,
}

impl FnMap {
    pub fn new(
        fwd: impl Fn(Point) -> Option<Point> + 'static,
        bwd: impl Fn(Point) -> Option<Point> + 'static,
    ) -> Self {
        FnMap { fwd: Box::new(fwd), bwd: Box::new(bwd) }
    }

    /// `n ↦ n + 1`: total domain, range misses 0.
    pub fn successor() -> Self {
        FnMap::new(|a| a.checked_add(1), |b| b.checked_sub(1))
    }
}

impl PointMap for FnMap {
    fn forward(&self, a: Point) -> Option<Point> {
        (self.fwd)(a)
    }
    fn backward(&self, b: Point) -> Option<Point> {
        (self.bwd)(b)
    }
}

/// Evaluates `word` with generator `x_k` substituted by `maps[k]`.
pub fn evaluate_word(word: &Word, maps: &[&dyn PointMap], a: Point) -> Option<Point> {
    let mut x = a;
    for l in word.letters() {
        let m = maps.get(l.gen as usize)?;
        x = if l.inverse { m.backward(x)? } else { m.forward(x)? };
    }
    Some(x)
}

/// Memo of a lazy permutation: the realized pairs plus insertion order.
#[derive(Clone, Debug, Default)]
pub struct Memo {
    pb: PartialBijection,
    log: Vec<(Point, Point)>,
}

impl Memo {
    pub fn pb(&self) -> &PartialBijection {
        &self.pb
    }

    pub fn insert(&mut self, a: Point, b: Point) -> Result<()> {
        self.pb.insert(a, b)?;
        self.log.push((a, b));
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.log.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log.is_empty()
    }

    /// The memo as it stood after its first `n` insertions.
    pub fn prefix(&self, n: usize) -> PartialBijection {
        PartialBijection::from_pairs(self.log[..n].iter().copied())
            .expect("memo prefixes are injective")
    }
}

/// Rule that grows a [`Memo`] one stage at a time.
pub trait ExtensionStrategy {
    /// Extends `memo` so that `stage` is in both its domain and range.
    /// Must only add pairs.
    fn realize(&mut self, stage: Point, memo: &mut Memo) -> Result<()>;

    /// Permutations this one was built against, in the order they were
    /// bound to `x1, x2, ...` during construction.
    fn rest(&self) -> Vec<Rc<LazyPermutation>> {
        Vec::new()
    }

    /// Stage from which `word` (in this permutation's own variable
    /// convention, `x0` = self) was protected against new collisions.
    fn entry_stage(&mut self, _word: &Word) -> Option<Point> {
        None
    }
}

/// Total bijection given by explicit formulas.
struct Explicit<F, G> {
    fwd: F,
    bwd: G,
}

impl<F: Fn(Point) -> Point, G: Fn(Point) -> Point> ExtensionStrategy for Explicit<F, G> {
    fn realize(&mut self, stage: Point, memo: &mut Memo) -> Result<()> {
        if !memo.pb().in_dom(stage) {
            memo.insert(stage, (self.fwd)(stage))?;
        }
        if !memo.pb().in_ran(stage) {
            memo.insert((self.bwd)(stage), stage)?;
        }
        Ok(())
    }
}

struct LazyState {
    memo: Memo,
    /// `marks[s]` is the memo length before stage `s` ran.
    marks: Vec<usize>,
    strategy: Box<dyn ExtensionStrategy>,
}

/// A bijection of the naturals realized on demand.
///
/// Evaluation through [`PointMap`] advances the memo as far as needed, so a
/// `LazyPermutation` is single-threaded; clone [`LazyPermutation::memo`] to
/// share a snapshot.
pub struct LazyPermutation {
    label: String,
    state: RefCell<LazyState>,
}

impl fmt::Debug for LazyPermutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let st = self.state.borrow();
        f.debug_struct("LazyPermutation")
            .field("label", &self.label)
            .field("stages", &st.marks.len())
            .field("memo", &st.memo.pb)
            .finish()
    }
}

impl LazyPermutation {
    /// Starts from `seed` (stage-0 memo) and grows by `strategy`.
    pub fn new(
        label: impl Into<String>,
        seed: &PartialBijection,
        strategy: Box<dyn ExtensionStrategy>,
    ) -> Self {
        let mut memo = Memo::default();
        for (a, b) in seed.pairs() {
            memo.insert(a, b).expect("seed is injective");
        }
        LazyPermutation {
            label: label.into(),
            state: RefCell::new(LazyState { memo, marks: Vec::new(), strategy }),
        }
    }

    pub fn from_fns(
        label: impl Into<String>,
        fwd: impl Fn(Point) -> Point + 'static,
        bwd: impl Fn(Point) -> Point + 'static,
    ) -> Self {
        Self::new(label, &PartialBijection::new(), Box::new(Explicit { fwd, bwd }))
    }

    pub fn identity() -> Self {
        Self::from_fns("id", |a| a, |b| b)
    }

    pub fn from_perm(label: impl Into<String>, p: FiniteSupportPerm) -> Self {
        let q = p.clone();
        Self::from_fns(label, move |a| p.apply(a), move |b| q.unapply(b))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Number of stages realized so far.
    pub fn stages(&self) -> Point {
        self.state.borrow().marks.len() as Point
    }

    /// Runs every stage up to and including `stage`. Idempotent.
    pub fn advance(&self, stage: Point) -> Result<()> {
        let mut st = self.state.borrow_mut();
        let LazyState { memo, marks, strategy } = &mut *st;
        while (marks.len() as Point) <= stage {
            let s = marks.len() as Point;
            marks.push(memo.len());
            strategy.realize(s, memo)?;
            if !memo.pb.in_dom(s) || !memo.pb.in_ran(s) {
                return Err(CoreError::Strategy(format!(
                    "{}: stage {s} left uncovered",
                    self.label
                )));
            }
        }
        Ok(())
    }

    pub fn try_apply(&self, a: Point) -> Result<Point> {
        if let Some(b) = self.state.borrow().memo.pb.apply(a) {
            return Ok(b);
        }
        self.advance(a)?;
        Ok(self.state.borrow().memo.pb.apply(a).expect("advance covers the stage"))
    }

    pub fn try_unapply(&self, b: Point) -> Result<Point> {
        if let Some(a) = self.state.borrow().memo.pb.unapply(b) {
            return Ok(a);
        }
        self.advance(b)?;
        Ok(self.state.borrow().memo.pb.unapply(b).expect("advance covers the stage"))
    }

    /// Copy of the realized fragment.
    pub fn memo(&self) -> PartialBijection {
        self.state.borrow().memo.pb.clone()
    }

    /// Realized pairs in insertion order.
    pub fn memo_log(&self) -> Vec<(Point, Point)> {
        self.state.borrow().memo.log.clone()
    }

    /// The fragment `u_s` present before stage `s` ran. `s` may equal
    /// [`stages`](Self::stages), giving the current memo.
    pub fn snapshot(&self, s: Point) -> Option<PartialBijection> {
        let st = self.state.borrow();
        let n = if s as usize == st.marks.len() {
            st.memo.len()
        } else {
            *st.marks.get(s as usize)?
        };
        Some(st.memo.prefix(n))
    }

    pub fn rest(&self) -> Vec<Rc<LazyPermutation>> {
        self.state.borrow().strategy.rest()
    }

    pub fn entry_stage(&self, word: &Word) -> Option<Point> {
        self.state.borrow_mut().strategy.entry_stage(word)
    }
}

impl PointMap for LazyPermutation {
    /// # Panics
    /// If the strategy cannot cover the requested stage.
    fn forward(&self, a: Point) -> Option<Point> {
        Some(self.try_apply(a).unwrap_or_else(|e| panic!("{e}")))
    }

    fn backward(&self, b: Point) -> Option<Point> {
        Some(self.try_unapply(b).unwrap_or_else(|e| panic!("{e}")))
    }
}

/// Canonical enumeration of all finite partial bijections: grouped by the
/// largest point used (the empty map first), then by size, then by sorted
/// pair list.
#[derive(Clone, Debug, Default)]
pub struct SeedEnumerator {
    bound: Option<Point>,
    pending: std::vec::IntoIter<PartialBijection>,
}

impl SeedEnumerator {
    pub fn new() -> Self {
        Self::default()
    }

    fn batch(m: Point) -> Vec<PartialBijection> {
        fn rec(
            m: Point,
            a: Point,
            cur: &mut PartialBijection,
            out: &mut Vec<PartialBijection>,
        ) {
            if a > m {
                if cur.max_point() == Some(m) {
                    out.push(cur.clone());
                }
                return;
            }
            rec(m, a + 1, cur, out);
            for b in 0..=m {
                if !cur.in_ran(b) {
                    cur.insert(a, b).unwrap();
                    rec(m, a + 1, cur, out);
                    cur.fwd.remove(&a);
                    cur.bwd.remove(&b);
                }
            }
        }
        let mut out = Vec::new();
        rec(m, 0, &mut PartialBijection::new(), &mut out);
        out.sort_by(|x, y| x.len().cmp(&y.len()).then_with(|| x.pairs().cmp(y.pairs())));
        out
    }
}

impl Iterator for SeedEnumerator {
    type Item = PartialBijection;

    fn next(&mut self) -> Option<PartialBijection> {
        loop {
            if let Some(pb) = self.pending.next() {
                return Some(pb);
            }
            match self.bound {
                None => {
                    self.bound = Some(0);
                    let mut first = vec![PartialBijection::new()];
                    first.extend(Self::batch(0));
                    self.pending = first.into_iter();
                }
                Some(m) => {
                    self.bound = Some(m + 1);
                    self.pending = Self::batch(m + 1).into_iter();
                }
            }
        }
    }
}
