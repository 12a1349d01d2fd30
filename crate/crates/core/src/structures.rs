//! Inductively flexible structures on the naturals, presented by their
//! families of finite partial automorphisms.
//!
//! The built-ins are fixed computable presentations transported along a
//! finite-support scramble:
//!
//! * `trivial`: no relations; every finite injection is allowed.
//! * `qorder`: `n` carries the rational `r(n)` with `r(0) = 0`,
//!   `r(2k+1) = cw(k)`, `r(2k+2) = -cw(k)`, `cw` the Calkin–Wilf sequence;
//!   `m < n` iff `r(m) < r(n)`.
//! * `sections`: `n` lies in class `x` where `n = pair(x, y)` under Cantor
//!   pairing.
//! * `rado`: for `m < n`, an edge iff bit `m` of `n` is set.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::pmap::{FiniteSupportPerm, PartialBijection, Point, PointMap};

/// Stern's diatomic sequence.
pub fn fusc(mut n: u64) -> u64 {
    let (mut a, mut b) = (1u64, 0u64);
    while n > 0 {
        if n & 1 == 1 {
            b += a;
        } else {
            a += b;
        }
        n >>= 1;
    }
    b
}

/// A rational `±num/den`, `den > 0`, in lowest terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct QValue {
    pub negative: bool,
    pub num: u64,
    pub den: u64,
}

impl Ord for QValue {
    fn cmp(&self, other: &Self) -> Ordering {
        let lhs = self.num as u128 * other.den as u128;
        let rhs = other.num as u128 * self.den as u128;
        match (self.negative && self.num != 0, other.negative && other.num != 0) {
            (false, false) => lhs.cmp(&rhs),
            (true, true) => rhs.cmp(&lhs),
            (false, true) => Ordering::Greater,
            (true, false) => Ordering::Less,
        }
    }
}

impl PartialOrd for QValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for QValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negative {
            f.write_str("-")?;
        }
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// The `k`-th positive rational of the Calkin–Wilf sequence (from 0).
pub fn calkin_wilf(k: u64) -> QValue {
    QValue { negative: false, num: fusc(k + 1), den: fusc(k + 2) }
}

/// The rational coding natural `n` in the canonical dense order.
pub fn q_value(n: Point) -> QValue {
    match n {
        0 => QValue { negative: false, num: 0, den: 1 },
        n if n % 2 == 1 => calkin_wilf((n - 1) / 2),
        n => QValue { negative: true, ..calkin_wilf((n - 2) / 2) },
    }
}

pub fn q_less(m: Point, n: Point) -> bool {
    q_value(m) < q_value(n)
}

fn isqrt(n: u64) -> u64 {
    let mut r = (n as f64).sqrt() as u64;
    while r.checked_mul(r).is_none_or(|sq| sq > n) {
        r -= 1;
    }
    while (r + 1).checked_mul(r + 1).is_some_and(|sq| sq <= n) {
        r += 1;
    }
    r
}

pub fn cantor_pair(x: u64, y: u64) -> u64 {
    (x + y) * (x + y + 1) / 2 + y
}

pub fn cantor_unpair(n: u64) -> (u64, u64) {
    let w = (isqrt(8 * n + 1) - 1) / 2;
    let t = w * (w + 1) / 2;
    let y = n - t;
    (w - y, y)
}

/// Class of `n` in the canonical partition into infinitely many infinite sets.
pub fn section_class(n: Point) -> u64 {
    cantor_unpair(n).0
}

pub fn rado_edge(m: Point, n: Point) -> bool {
    let (lo, hi) = if m < n { (m, n) } else { (n, m) };
    lo != hi && lo < 64 && (hi >> lo) & 1 == 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Relation {
    Less,
    Edge,
    /// Unary `R_l`: membership in class `l`.
    Section(u64),
}

impl Relation {
    pub fn arity(self) -> usize {
        match self {
            Relation::Less | Relation::Edge => 2,
            Relation::Section(_) => 1,
        }
    }

    pub fn name(self) -> String {
        match self {
            Relation::Less => "<".into(),
            Relation::Edge => "E".into(),
            Relation::Section(l) => format!("R{l}"),
        }
    }
}

/// A relational structure with universe the naturals and a witnessing
/// family of finite partial automorphisms.
pub trait FlexibleStructure {
    /// Membership of `pb` in the witnessing family.
    fn contains(&self, pb: &PartialBijection) -> bool;

    /// Strictly increasing, unbounded stream of every `b` with
    /// `pb ∪ {(a, b)}` in the family. Requires `contains(pb)` and
    /// `a ∉ dom(pb)`.
    fn right_candidates<'a>(
        &'a self,
        pb: &'a PartialBijection,
        a: Point,
    ) -> Box<dyn Iterator<Item = Point> + 'a>;

    /// Every `a` with `pb ∪ {(a, b)}` in the family, increasing.
    fn left_candidates<'a>(
        &'a self,
        pb: &'a PartialBijection,
        b: Point,
    ) -> Box<dyn Iterator<Item = Point> + 'a>;

    /// Binary relations, checked pairwise on windows.
    fn binary_relations(&self) -> Vec<Relation>;

    /// Label of the unary relation holding at `a`, for structures whose
    /// unary relations partition the universe.
    fn unary_label(&self, _a: Point) -> Option<u64> {
        None
    }

    fn rel_eval(&self, rel: Relation, tuple: &[Point]) -> Result<bool>;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum StructureKind {
    Trivial,
    QOrder,
    Sections,
    Rado,
}

impl StructureKind {
    pub fn name(self) -> &'static str {
        match self {
            StructureKind::Trivial => "trivial",
            StructureKind::QOrder => "qorder",
            StructureKind::Sections => "sections",
            StructureKind::Rado => "rado",
        }
    }
}

impl FromStr for StructureKind {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "trivial" => Ok(StructureKind::Trivial),
            "qorder" => Ok(StructureKind::QOrder),
            "sections" => Ok(StructureKind::Sections),
            "rado" => Ok(StructureKind::Rado),
            other => Err(CoreError::Parse(format!("unknown structure kind `{other}`"))),
        }
    }
}

/// `kind=qorder;scramble=(0 3)(1 5)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct StructureDescriptor {
    pub kind: StructureKind,
    pub scramble: FiniteSupportPerm,
}

impl StructureDescriptor {
    pub fn new(kind: StructureKind) -> Self {
        StructureDescriptor { kind, scramble: FiniteSupportPerm::identity() }
    }
}

impl fmt::Display for StructureDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "kind={};scramble={}", self.kind.name(), self.scramble)
    }
}

impl FromStr for StructureDescriptor {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let mut kind = None;
        let mut scramble = FiniteSupportPerm::identity();
        for field in s.split(';').map(str::trim).filter(|f| !f.is_empty()) {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| CoreError::Parse(format!("expected key=value, got `{field}`")))?;
            match k.trim() {
                "kind" => kind = Some(v.parse()?),
                "scramble" => scramble = v.parse()?,
                other => return Err(CoreError::Parse(format!("unknown key `{other}`"))),
            }
        }
        let kind = kind.ok_or_else(|| CoreError::Parse("missing kind".into()))?;
        Ok(StructureDescriptor { kind, scramble })
    }
}

/// A built-in base structure transported along its scramble `π`:
/// `R'(π a, π b) ⇔ R(a, b)`.
#[derive(Clone, Debug)]
pub struct Structure {
    desc: StructureDescriptor,
}

pub fn build_structure(d: &StructureDescriptor) -> Structure {
    Structure { desc: d.clone() }
}

impl Structure {
    pub fn descriptor(&self) -> &StructureDescriptor {
        &self.desc
    }

    pub fn kind(&self) -> StructureKind {
        self.desc.kind
    }

    fn pull(&self, x: Point) -> Point {
        self.desc.scramble.unapply(x)
    }

    fn push(&self, x: Point) -> Point {
        self.desc.scramble.apply(x)
    }

    /// `π⁻¹ ∘ pb ∘ π`, the map in base coordinates.
    fn to_base(&self, pb: &PartialBijection) -> PartialBijection {
        if self.desc.scramble.is_identity() {
            return pb.clone();
        }
        PartialBijection::from_pairs(pb.pairs().map(|(a, b)| (self.pull(a), self.pull(b))))
            .expect("conjugate of an injection is injective")
    }

    fn base_compatible(&self, pb: &PartialBijection, a: Point, b: Point) -> bool {
        match self.desc.kind {
            StructureKind::Trivial => true,
            StructureKind::QOrder => {
                let (qa, qb) = (q_value(a), q_value(b));
                pb.pairs().all(|(x, y)| (q_value(x) < qa) == (q_value(y) < qb))
            }
            StructureKind::Sections => section_class(a) == section_class(b),
            StructureKind::Rado => pb.pairs().all(|(x, y)| rado_edge(x, a) == rado_edge(y, b)),
        }
    }

    fn base_contains(&self, pb: &PartialBijection) -> bool {
        let pairs: Vec<_> = pb.pairs().collect();
        pairs.iter().enumerate().all(|(i, &(a, b))| {
            self.base_compatible(&PartialBijection::new(), a, b)
                && pairs[..i].iter().all(|&(x, y)| match self.desc.kind {
                    StructureKind::QOrder => q_less(x, a) == q_less(y, b),
                    StructureKind::Rado => rado_edge(x, a) == rado_edge(y, b),
                    _ => true,
                })
        })
    }

    /// Candidates in base coordinates, increasing and unbounded.
    fn base_candidates<'a>(
        &'a self,
        pb: PartialBijection,
        a: Point,
    ) -> Box<dyn Iterator<Item = Point> + 'a> {
        match self.desc.kind {
            StructureKind::Trivial => Box::new((0..).filter(move |&b| !pb.in_ran(b))),
            StructureKind::QOrder => {
                let qa = q_value(a);
                let below: Vec<(bool, QValue)> =
                    pb.pairs().map(|(x, y)| (q_value(x) < qa, q_value(y))).collect();
                Box::new((0..).filter(move |&b| {
                    if pb.in_ran(b) {
                        return false;
                    }
                    let qb = q_value(b);
                    below.iter().all(|&(lt, qy)| lt == (qy < qb))
                }))
            }
            StructureKind::Sections => {
                let class = section_class(a);
                Box::new((0..).map(move |y| cantor_pair(class, y)).filter(move |&b| !pb.in_ran(b)))
            }
            StructureKind::Rado => Box::new(RadoCandidates::new(pb, a)),
        }
    }

    fn candidates<'a>(
        &'a self,
        pb: &PartialBijection,
        a: Point,
    ) -> Box<dyn Iterator<Item = Point> + 'a> {
        let base = self.base_candidates(self.to_base(pb), self.pull(a));
        let Some(support) = self.desc.scramble.support_max() else {
            return base;
        };
        // Candidates inside the support are permuted among themselves;
        // beyond it the scramble is the identity.
        let mut base = base.peekable();
        let mut head: Vec<Point> = Vec::new();
        while let Some(&c) = base.peek() {
            if c > support {
                break;
            }
            head.push(self.push(c));
            base.next();
        }
        head.sort_unstable();
        Box::new(head.into_iter().chain(base))
    }
}

/// Rado candidates: brute force up to the largest range point, then the
/// numbers whose bits at range positions match the required adjacency.
/// Candidates in the bit-coded Rado graph. Below 64 every point is tested
/// directly. From 64 on, a point `b` is adjacent exactly to the bits it has
/// set among points below 64, so the candidates are the numbers with a
/// prescribed pattern on the range bits, enumerated by depositing a counter
/// into the free bits.
struct RadoCandidates {
    pb: PartialBijection,
    a: Point,
    scan: Point,
    fixed_mask: u64,
    pattern: u64,
    t: u64,
    done: bool,
}

impl RadoCandidates {
    fn new(pb: PartialBijection, a: Point) -> Self {
        let mut fixed_mask = 0u64;
        let mut pattern = 0u64;
        let mut done = false;
        for (x, y) in pb.pairs() {
            let want = rado_edge(x, a);
            if y >= 64 {
                // no point from 64 on is adjacent to another such point
                done |= want;
                continue;
            }
            fixed_mask |= 1 << y;
            if want {
                pattern |= 1 << y;
            }
        }
        let mut c = RadoCandidates { pb, a, scan: 0, fixed_mask, pattern, t: 0, done };
        c.t = c.first_counter_from(64);
        c
    }

    fn deposit(&self, t: u64) -> Option<u64> {
        let mut out = self.pattern;
        let mut bits = t;
        for pos in 0..64 {
            if bits == 0 {
                return Some(out);
            }
            if self.fixed_mask & (1 << pos) == 0 {
                if bits & 1 == 1 {
                    out |= 1 << pos;
                }
                bits >>= 1;
            }
        }
        (bits == 0).then_some(out)
    }

    /// Least counter whose deposit is `>= lo`; `deposit` is increasing.
    fn first_counter_from(&self, lo: u64) -> u64 {
        let free = 64 - self.fixed_mask.count_ones();
        let (mut l, mut h) = (0u64, if free >= 64 { u64::MAX } else { 1u64 << free });
        while l < h {
            let m = l + (h - l) / 2;
            if self.deposit(m).is_some_and(|b| b >= lo) {
                h = m;
            } else {
                l = m + 1;
            }
        }
        l
    }
}

impl Iterator for RadoCandidates {
    type Item = Point;

    fn next(&mut self) -> Option<Point> {
        while self.scan < 64 {
            let b = self.scan;
            self.scan += 1;
            if !self.pb.in_ran(b) && self.pb.pairs().all(|(x, y)| rado_edge(x, self.a) == rado_edge(y, b)) {
                return Some(b);
            }
        }
        while !self.done {
            let Some(b) = self.deposit(self.t) else {
                self.done = true;
                break;
            };
            self.t = self.t.wrapping_add(1);
            self.done |= self.t == 0;
            if !self.pb.in_ran(b) {
                return Some(b);
            }
        }
        None
    }
}

impl FlexibleStructure for Structure {
    fn contains(&self, pb: &PartialBijection) -> bool {
        self.base_contains(&self.to_base(pb))
    }

    fn right_candidates<'a>(
        &'a self,
        pb: &'a PartialBijection,
        a: Point,
    ) -> Box<dyn Iterator<Item = Point> + 'a> {
        self.candidates(pb, a)
    }

    fn left_candidates<'a>(
        &'a self,
        pb: &'a PartialBijection,
        b: Point,
    ) -> Box<dyn Iterator<Item = Point> + 'a> {
        self.candidates(&pb.inverse(), b)
    }

    fn binary_relations(&self) -> Vec<Relation> {
        match self.desc.kind {
            StructureKind::QOrder => vec![Relation::Less],
            StructureKind::Rado => vec![Relation::Edge],
            _ => Vec::new(),
        }
    }

    fn unary_label(&self, a: Point) -> Option<u64> {
        (self.desc.kind == StructureKind::Sections).then(|| section_class(self.pull(a)))
    }

    fn rel_eval(&self, rel: Relation, tuple: &[Point]) -> Result<bool> {
        if tuple.len() != rel.arity() {
            return Err(CoreError::Precondition(format!(
                "{} takes {} arguments",
                rel.name(),
                rel.arity()
            )));
        }
        let t: Vec<Point> = tuple.iter().map(|&x| self.pull(x)).collect();
        match (self.desc.kind, rel) {
            (StructureKind::QOrder, Relation::Less) => Ok(q_less(t[0], t[1])),
            (StructureKind::Rado, Relation::Edge) => Ok(rado_edge(t[0], t[1])),
            (StructureKind::Sections, Relation::Section(l)) => Ok(section_class(t[0]) == l),
            (kind, rel) => Err(CoreError::Precondition(format!(
                "{} has no relation {}",
                kind.name(),
                rel.name()
            ))),
        }
    }
}

/// An isomorphism between two presentations of the same built-in:
/// `π₂ ∘ π₁⁻¹`.
pub fn transport_between(
    from: &StructureDescriptor,
    to: &StructureDescriptor,
) -> Result<FiniteSupportPerm> {
    if from.kind != to.kind {
        return Err(CoreError::Precondition(format!(
            "{} and {} are not isomorphic",
            from.kind.name(),
            to.kind.name()
        )));
    }
    Ok(to.scramble.compose(&from.scramble.inverse()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub relation: String,
    pub tuple: Vec<Point>,
}

impl fmt::Display for Counterexample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t: Vec<String> = self.tuple.iter().map(|p| p.to_string()).collect();
        write!(f, "FAIL rel{} at ({})", self.relation, t.join(","))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WindowIsoReport {
    pub window: Point,
    pub counterexample: Option<Counterexample>,
}

impl WindowIsoReport {
    pub fn ok(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Checks `R'(f a, f b) ⇔ R(a, b)` for every relation and every tuple from
/// `{0, ..., window}`. A point where `f` is undefined is reported as a
/// counterexample with relation `dom`.
pub fn verify_window_iso(
    s1: &dyn FlexibleStructure,
    s2: &dyn FlexibleStructure,
    f: &dyn PointMap,
    window: Point,
) -> WindowIsoReport {
    let fail = |relation: String, tuple: Vec<Point>| WindowIsoReport {
        window,
        counterexample: Some(Counterexample { relation, tuple }),
    };
    let mut image = Vec::with_capacity(window as usize + 1);
    for a in 0..=window {
        match f.forward(a) {
            Some(b) => image.push(b),
            None => return fail("dom".into(), vec![a]),
        }
    }
    for a in 0..=window {
        if s1.unary_label(a) != s2.unary_label(image[a as usize]) {
            let l = s1.unary_label(a).unwrap_or(u64::MAX);
            return fail(Relation::Section(l).name(), vec![a]);
        }
    }
    let rels = s1.binary_relations();
    if rels != s2.binary_relations() {
        return fail("signature".into(), vec![]);
    }
    for rel in rels {
        for i in 0..=window {
            for j in 0..=window {
                let lhs = s1.rel_eval(rel, &[i, j]).expect("relation in signature");
                let rhs = s2
                    .rel_eval(rel, &[image[i as usize], image[j as usize]])
                    .expect("relation in signature");
                if lhs != rhs {
                    return fail(rel.name(), vec![i, j]);
                }
            }
        }
    }
    WindowIsoReport { window, counterexample: None }
}
