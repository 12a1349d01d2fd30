//! Collision-avoiding one-point extensions, dense strongly independent
//! families, and fixed-point audits with stage certificates.
//!
//! A one-point extension `g ∪ {(a, b)}` is *safe* for a list of words when
//! every collision in an itinerary taken with respect to the extended map
//! can be traced back to a collision that already existed before. The bad
//! choices of `b` form a finite set computed from itinerary closures, so the
//! least remaining candidate is always found.

use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::itinerary::{trace, AtomMapContext, Direction, Slot};
use crate::pmap::{
    evaluate_word, Composed, ExtensionStrategy, FiniteSupportPerm, LazyPermutation, Memo,
    PartialBijection, Point, PointMap, SeedEnumerator,
};
use crate::structures::{build_structure, FlexibleStructure, Structure, StructureDescriptor, StructureKind};
use crate::words::{atom_sequence, Atom, AtomSequence, Letter, Word, WordEnumerator};

/// A word using `x0`, with its atoms and the positions of `x0` and `x0⁻¹`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PreparedWord {
    pub word: Word,
    pub atoms: AtomSequence,
    pub x0_pos: Vec<usize>,
    pub x0_neg: Vec<usize>,
    /// `k` when the word is `x0^{±k}`.
    pub power: Option<usize>,
}

impl PreparedWord {
    pub fn new(word: Word) -> Result<Self> {
        let atoms = atom_sequence(&word)?;
        let mut x0_pos = Vec::new();
        let mut x0_neg = Vec::new();
        for (i, a) in atoms.atoms().iter().enumerate() {
            match a {
                Atom::X0Pos => x0_pos.push(i),
                Atom::X0Neg => x0_neg.push(i),
                Atom::UBlock(_) => {}
            }
        }
        let l = atoms.lprime();
        let power = (x0_pos.len() == l || x0_neg.len() == l).then_some(l);
        Ok(PreparedWord { word, atoms, x0_pos, x0_neg, power })
    }
}

/// The words `W_0, ..., W_s` an extension must respect.
#[derive(Clone, Debug, Default)]
pub struct WordContext {
    words: Vec<PreparedWord>,
}

impl WordContext {
    pub fn new<I: IntoIterator<Item = Word>>(words: I) -> Result<Self> {
        let words = words.into_iter().map(PreparedWord::new).collect::<Result<_>>()?;
        Ok(WordContext { words })
    }

    pub fn words(&self) -> &[PreparedWord] {
        &self.words
    }

    fn refs(&self) -> Vec<&PreparedWord> {
        self.words.iter().collect()
    }
}

/// Choices ruled out for a one-point extension.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BadSet {
    /// Choices whose new itinerary would meet an old one.
    pub colliding: BTreeSet<Point>,
    /// The single choice that would close a one-step loop.
    pub excluded: Point,
}

impl BadSet {
    pub fn contains(&self, p: Point) -> bool {
        p == self.excluded || self.colliding.contains(&p)
    }
}

fn check_rest(words: &[&PreparedWord], rest: &[&dyn PointMap]) -> Result<()> {
    for w in words {
        let g = w.atoms.max_gen();
        if g as usize > rest.len() {
            return Err(CoreError::UnboundGenerator { gen: g, bound: rest.len() });
        }
    }
    Ok(())
}

/// Values at `target` slots of every itinerary meeting one of the seeds.
///
/// `probes` pairs a seed set with the slot to read; each point of a seed set
/// is placed at every slot in turn.
fn closure_values(
    atoms: &AtomSequence,
    ctx: &AtomMapContext<'_>,
    probes: &[(BTreeSet<Point>, usize)],
    out: &mut BTreeSet<Point>,
) {
    let mut points: BTreeMap<Point, Vec<usize>> = BTreeMap::new();
    for (set, target) in probes {
        for &x in set {
            points.entry(x).or_default().push(*target);
        }
    }
    for (x, targets) in points {
        for j in 0..=atoms.lprime() {
            let t = trace(atoms, ctx, j, x);
            for &target in &targets {
                if let Slot::Pt(y) = t.get(target) {
                    out.insert(y);
                }
            }
        }
    }
}

fn max_power(words: &[&PreparedWord]) -> usize {
    words.iter().filter_map(|w| w.power).max().unwrap_or(0)
}

/// The first `k` points of the `f0`-chain through `x`.
///
/// For `x0^{±k}` every itinerary stays on one chain of `f0`, and the closure
/// of the itineraries through an endpoint reaches exactly `k` points along it.
fn chain_prefix(f0: &dyn PointMap, x: Point, dir: Direction, k: usize, out: &mut BTreeSet<Point>) {
    let mut cur = Some(x);
    for _ in 0..k {
        let Some(y) = cur else { break };
        out.insert(y);
        cur = match dir {
            Direction::Forward => f0.forward(y),
            Direction::Backward => f0.backward(y),
        };
    }
}

fn bad_set_right_in(
    h: &dyn PointMap,
    g: &PartialBijection,
    a: Point,
    rest: &[&dyn PointMap],
    words: &[&PreparedWord],
) -> BadSet {
    let f0 = Composed { outer: h, inner: g };
    let ctx = AtomMapContext::new(&f0, rest);
    let mut hits = BTreeSet::new();
    chain_prefix(&f0, a, Direction::Backward, max_power(words), &mut hits);
    for w in words.iter().filter(|w| w.power.is_none()) {
        let mut probes = Vec::new();
        for &i in &w.x0_pos {
            probes.push((trace(&w.atoms, &ctx, i, a).set_of(), i + 1));
        }
        for &i in &w.x0_neg {
            probes.push((trace(&w.atoms, &ctx, i + 1, a).set_of(), i));
        }
        closure_values(&w.atoms, &ctx, &probes, &mut hits);
    }
    let pull = |y: Point| h.backward(y).expect("h is total");
    BadSet { colliding: hits.into_iter().map(pull).collect(), excluded: pull(a) }
}

fn bad_set_left_in(
    h: &dyn PointMap,
    g: &PartialBijection,
    b: Point,
    rest: &[&dyn PointMap],
    words: &[&PreparedWord],
) -> BadSet {
    let hb = h.forward(b).expect("h is total");
    let f0 = Composed { outer: h, inner: g };
    let ctx = AtomMapContext::new(&f0, rest);
    let mut hits = BTreeSet::new();
    chain_prefix(&f0, hb, Direction::Forward, max_power(words), &mut hits);
    for w in words.iter().filter(|w| w.power.is_none()) {
        let mut probes = Vec::new();
        for &i in &w.x0_pos {
            probes.push((trace(&w.atoms, &ctx, i + 1, hb).set_of(), i));
        }
        for &i in &w.x0_neg {
            probes.push((trace(&w.atoms, &ctx, i, hb).set_of(), i + 1));
        }
        closure_values(&w.atoms, &ctx, &probes, &mut hits);
    }
    BadSet { colliding: hits, excluded: hb }
}

/// Bad choices of `b` for adding `(a, b)` to `g`, where `x0` is
/// interpreted as `h ∘ g`.
pub fn bad_set_right(
    h: &dyn PointMap,
    g: &PartialBijection,
    a: Point,
    rest: &[&dyn PointMap],
    wc: &WordContext,
) -> Result<BadSet> {
    let words = wc.refs();
    check_rest(&words, rest)?;
    Ok(bad_set_right_in(h, g, a, rest, &words))
}

/// Bad choices of `a` for adding `(a, b)` to `g`.
pub fn bad_set_left(
    h: &dyn PointMap,
    g: &PartialBijection,
    b: Point,
    rest: &[&dyn PointMap],
    wc: &WordContext,
) -> Result<BadSet> {
    let words = wc.refs();
    check_rest(&words, rest)?;
    Ok(bad_set_left_in(h, g, b, rest, &words))
}

pub(crate) fn choose_right(
    s: &dyn FlexibleStructure,
    h: &dyn PointMap,
    g: &PartialBijection,
    a: Point,
    rest: &[&dyn PointMap],
    words: &[&PreparedWord],
) -> Result<Point> {
    if g.in_dom(a) {
        return Err(CoreError::Precondition(format!("{a} is already in the domain")));
    }
    let bad = bad_set_right_in(h, g, a, rest, words);
    let found = s.right_candidates(g, a).find(|&b| !bad.contains(b));
    found.ok_or(CoreError::CandidatesExhausted(a))
}

pub(crate) fn choose_left(
    s: &dyn FlexibleStructure,
    h: &dyn PointMap,
    g: &PartialBijection,
    b: Point,
    rest: &[&dyn PointMap],
    words: &[&PreparedWord],
) -> Result<Point> {
    if g.in_ran(b) {
        return Err(CoreError::Precondition(format!("{b} is already in the range")));
    }
    let bad = bad_set_left_in(h, g, b, rest, words);
    let found = s.left_candidates(g, b).find(|&a| !bad.contains(a));
    found.ok_or(CoreError::CandidatesExhausted(b))
}

/// Adds `(a, b)` to `g` with `b` the least candidate outside the bad set.
pub fn safe_extend_right(
    s: &dyn FlexibleStructure,
    h: &dyn PointMap,
    g: &PartialBijection,
    a: Point,
    rest: &[&dyn PointMap],
    wc: &WordContext,
) -> Result<(Point, PartialBijection)> {
    if !s.contains(g) {
        return Err(CoreError::Precondition(format!("{{{g}}} is not in the family")));
    }
    let words = wc.refs();
    check_rest(&words, rest)?;
    let b = choose_right(s, h, g, a, rest, &words)?;
    Ok((b, g.extend(a, b)?))
}

/// Adds `(a, b)` to `g` with `a` the least candidate outside the bad set.
pub fn safe_extend_left(
    s: &dyn FlexibleStructure,
    h: &dyn PointMap,
    g: &PartialBijection,
    b: Point,
    rest: &[&dyn PointMap],
    wc: &WordContext,
) -> Result<(Point, PartialBijection)> {
    if !s.contains(g) {
        return Err(CoreError::Precondition(format!("{{{g}}} is not in the family")));
    }
    let words = wc.refs();
    check_rest(&words, rest)?;
    let a = choose_left(s, h, g, b, rest, &words)?;
    Ok((a, g.extend(a, b)?))
}

/// Whether some itinerary of `atoms` with respect to `new` (seeded at a
/// point `<= window` in any slot) has a collision that does not trace back
/// to a collision with respect to `old`. Returns the first such seed.
pub fn untraceable_collision(
    atoms: &AtomSequence,
    new: &AtomMapContext<'_>,
    old: &AtomMapContext<'_>,
    window: Point,
) -> Option<(usize, Point)> {
    for j in 0..=atoms.lprime() {
        for x in 0..=window {
            let t = trace(atoms, new, j, x);
            if t.find_collision().is_some() && !traces_to_old(atoms, &t, old) {
                return Some((j, x));
            }
        }
    }
    None
}

/// Some `i0` with `It(old, i0, t_{i0})` colliding at `(i0, j0)`.
fn traces_to_old(atoms: &AtomSequence, t: &crate::itinerary::Itinerary, old: &AtomMapContext<'_>) -> bool {
    (0..=atoms.lprime()).any(|i0| match t.get(i0) {
        Slot::Pt(x) => {
            let s = trace(atoms, old, i0, x);
            (i0 + 1..=atoms.lprime()).any(|j0| s.get(j0) == Slot::Pt(x))
        }
        Slot::C => false,
    })
}

/// The words `x0 x_k⁻¹`, `1 <= k <= n`.
fn guard_words(n: u32) -> Vec<Word> {
    (1..=n).map(|k| Word::from_written([Letter::pos(0), Letter::neg(k)])).collect()
}

/// Word schedule of a family member: guards from stage 0, then the first
/// `s + 1` words of the canonical enumeration at stage `s`.
struct WordSchedule {
    guards: Vec<PreparedWord>,
    canonical: Vec<(PreparedWord, bool)>,
    source: WordEnumerator,
    n: u32,
}

impl WordSchedule {
    fn new(n: u32) -> Self {
        let guards = guard_words(n)
            .into_iter()
            .map(|w| PreparedWord::new(w).expect("guards use x0"))
            .collect();
        WordSchedule { guards, canonical: Vec::new(), source: WordEnumerator::new(n), n }
    }

    fn pull(&mut self) {
        let w = self.source.next().expect("enumeration is unbounded");
        let is_guard = self.guards.iter().any(|g| g.word == w);
        self.canonical.push((PreparedWord::new(w).expect("enumerated words use x0"), is_guard));
    }

    fn stage_words(&mut self, s: Point) -> Vec<&PreparedWord> {
        let need = s as usize + 1;
        while self.canonical.len() < need {
            self.pull();
        }
        self.guards
            .iter()
            .chain(self.canonical[..need].iter().filter(|(_, g)| !g).map(|(w, _)| w))
            .collect()
    }

    fn entry_stage(&mut self, word: &Word) -> Option<Point> {
        if !word.uses(0) || word.max_gen().is_some_and(|g| g > self.n) {
            return None;
        }
        if self.guards.iter().any(|g| &g.word == word) {
            return Some(0);
        }
        let mut i = 0;
        loop {
            while self.canonical.len() <= i {
                self.pull();
            }
            let w = &self.canonical[i].0.word;
            if w == word {
                return Some(i as Point);
            }
            if w.len() > word.len() {
                return None;
            }
            i += 1;
        }
    }
}

/// Builds `q̄` from a seed against earlier members, extending by one
/// point of domain and range per stage.
struct MemberStrategy {
    rest: Vec<Rc<LazyPermutation>>,
    schedule: WordSchedule,
    structure: Structure,
    identity: FiniteSupportPerm,
}

impl ExtensionStrategy for MemberStrategy {
    fn realize(&mut self, s: Point, memo: &mut Memo) -> Result<()> {
        let MemberStrategy { rest, schedule, structure, identity } = self;
        let rest: Vec<&dyn PointMap> = rest.iter().map(|r| r.as_ref() as &dyn PointMap).collect();
        let words = schedule.stage_words(s);
        if !memo.pb().in_dom(s) {
            let b = choose_right(structure, identity, memo.pb(), s, &rest, &words)?;
            memo.insert(s, b)?;
        }
        if !memo.pb().in_ran(s) {
            let a = choose_left(structure, identity, memo.pb(), s, &rest, &words)?;
            memo.insert(a, s)?;
        }
        Ok(())
    }

    fn rest(&self) -> Vec<Rc<LazyPermutation>> {
        self.rest.clone()
    }

    fn entry_stage(&mut self, word: &Word) -> Option<Point> {
        self.schedule.entry_stage(word)
    }
}

/// A permutation extending `seed` that keeps `rest ∪ {it}` strongly
/// independent; `rest[k-1]` is bound to `x_k`.
pub fn build_member(
    label: impl Into<String>,
    seed: &PartialBijection,
    rest: Vec<Rc<LazyPermutation>>,
) -> Rc<LazyPermutation> {
    let n = rest.len() as u32;
    let strategy = MemberStrategy {
        rest,
        schedule: WordSchedule::new(n),
        structure: build_structure(&StructureDescriptor::new(StructureKind::Trivial)),
        identity: FiniteSupportPerm::identity(),
    };
    Rc::new(LazyPermutation::new(label, seed, Box::new(strategy)))
}

/// Grows a dense strongly independent family, member `l` extending the
/// `l`-th canonical seed.
pub struct FamilyBuilder {
    members: Vec<Rc<LazyPermutation>>,
    seeds: Vec<PartialBijection>,
    cursor: SeedEnumerator,
}

impl Default for FamilyBuilder {
    fn default() -> Self {
        Self::new()
    }
}

impl FamilyBuilder {
    pub fn new() -> Self {
        FamilyBuilder { members: Vec::new(), seeds: Vec::new(), cursor: SeedEnumerator::new() }
    }

    pub fn push_next(&mut self) -> Rc<LazyPermutation> {
        let seed = self.cursor.next().expect("seed enumeration is unbounded");
        let label = format!("q{}", self.members.len() + 1);
        let m = build_member(label, &seed, self.members.clone());
        self.seeds.push(seed);
        self.members.push(m.clone());
        m
    }

    pub fn members(&self) -> &[Rc<LazyPermutation>] {
        &self.members
    }

    pub fn seeds(&self) -> &[PartialBijection] {
        &self.seeds
    }

    pub fn realize(&self, horizon: Point) -> Result<()> {
        self.members.iter().try_for_each(|m| m.advance(horizon))
    }
}

pub fn build_dense_family(count: usize, horizon: Point) -> Result<FamilyBuilder> {
    let mut fb = FamilyBuilder::new();
    for _ in 0..count {
        fb.push_next();
    }
    fb.realize(horizon)?;
    Ok(fb)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WitnessKind {
    /// The colliding stretch passes an `x0^{±1}` atom defined on the
    /// stage fragment at this point.
    X0Fragment,
    /// A single block atom fixes this point.
    BlockFixedPoint,
}

/// Why a fixed point exists: a collision already present at `stage`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub point: Point,
    pub stage: Point,
    pub i0: usize,
    pub j0: usize,
    pub witness_atom: usize,
    pub witness_point: Point,
    pub witness: WitnessKind,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct StrongIndependenceReport {
    pub word: String,
    pub window: Point,
    /// Family index playing `x0`.
    pub certifier: Option<usize>,
    /// The word in the certifier's own variables.
    pub rewritten: Option<String>,
    pub stage: Option<Point>,
    pub fixed_points: Vec<Point>,
    pub certificates: Vec<Certificate>,
    /// Upper bound on the fixed-point count from the stage fragment size and
    /// the block fixed points below `bound_window`.
    pub bound: Option<u64>,
    pub bound_window: Point,
    pub violations: Vec<String>,
}

impl StrongIndependenceReport {
    pub fn certified(&self) -> bool {
        self.violations.is_empty() && self.certificates.len() == self.fixed_points.len()
    }

    pub fn within_bound(&self) -> bool {
        self.bound.is_some_and(|b| self.fixed_points.len() as u64 <= b)
    }
}

/// Lists every `a <= window` fixed by `word(family)` and certifies each one
/// against the construction history of the member playing `x0`.
pub fn audit_fixed_points(
    family: &[Rc<LazyPermutation>],
    word: &Word,
    window: Point,
) -> Result<StrongIndependenceReport> {
    if word.is_trivial() {
        return Err(CoreError::TrivialWord);
    }
    let max = word.max_gen().unwrap_or(0);
    if max as usize >= family.len() {
        return Err(CoreError::UnboundGenerator { gen: max, bound: family.len() });
    }
    let used: BTreeSet<u32> = word.letters().iter().map(|l| l.gen).collect();
    for &i in &used {
        for &j in &used {
            if i < j && Rc::ptr_eq(&family[i as usize], &family[j as usize]) {
                return Err(CoreError::Precondition(format!("x{i} and x{j} are the same map")));
            }
        }
    }

    let maps: Vec<&dyn PointMap> = family.iter().map(|m| m.as_ref() as &dyn PointMap).collect();
    let fixed_points: Vec<Point> =
        (0..=window).filter(|&a| evaluate_word(word, &maps, a) == Some(a)).collect();

    let mut report = StrongIndependenceReport {
        word: word.to_string(),
        window,
        certifier: None,
        rewritten: None,
        stage: None,
        fixed_points,
        certificates: Vec::new(),
        bound: None,
        bound_window: window,
        violations: Vec::new(),
    };

    // The member built last knows all the others.
    let certifier = used.iter().rev().copied().find(|&c| {
        let rest = family[c as usize].rest();
        used.iter()
            .filter(|&&k| k != c)
            .all(|&k| rest.iter().any(|r| Rc::ptr_eq(r, &family[k as usize])))
    });
    let Some(c) = certifier else {
        report.violations.push("no member was built against all the others".into());
        return Ok(report);
    };
    let member = &family[c as usize];
    let rest = member.rest();
    let var = |k: u32| -> u32 {
        if k == c {
            0
        } else {
            1 + rest.iter().position(|r| Rc::ptr_eq(r, &family[k as usize])).unwrap() as u32
        }
    };
    let rewritten = word.relabel(var);
    report.certifier = Some(c as usize);
    report.rewritten = Some(rewritten.to_string());

    let Some(stage) = member.entry_stage(&rewritten) else {
        report.violations.push(format!("{rewritten} is not covered by the construction"));
        return Ok(report);
    };
    member.advance(stage)?;
    let fragment = member.snapshot(stage).expect("stage realized");
    report.stage = Some(stage);

    let pw = PreparedWord::new(rewritten)?;
    let atoms = &pw.atoms;
    let lp = atoms.lprime();
    let rest_maps: Vec<&dyn PointMap> = rest.iter().map(|r| r.as_ref() as &dyn PointMap).collect();
    let full = AtomMapContext::new(member.as_ref(), &rest_maps);
    let old = AtomMapContext::new(&fragment, &rest_maps);

    let mut bound_window = window;
    for &a in &report.fixed_points {
        let t = trace(atoms, &full, 0, a);
        if t.get(lp) != Slot::Pt(a) {
            report.violations.push(format!("{a}: itinerary does not close up"));
            continue;
        }
        bound_window = bound_window.max(t.set_of().last().copied().unwrap_or(0));
        match certify(atoms, &t, &old, a, stage) {
            Some(cert) => report.certificates.push(cert),
            None => report.violations.push(format!("{a}: no collision at stage {stage}")),
        }
    }

    let x0_atoms = (pw.x0_pos.len() + pw.x0_neg.len()) as u64;
    let mut bound = x0_atoms * fragment.len() as u64;
    for atom in atoms.atoms() {
        if let Atom::UBlock(u) = atom {
            let block = u.relabel(|g| g - 1);
            let fixes = (0..=bound_window)
                .filter(|&x| evaluate_word(&block, &rest_maps, x) == Some(x))
                .count() as u64;
            bound += fixes;
        }
    }
    report.bound = Some(bound);
    report.bound_window = bound_window;
    if report.fixed_points.len() as u64 > bound {
        report
            .violations
            .push(format!("{} fixed points exceed the bound {bound}", report.fixed_points.len()));
    }
    Ok(report)
}

fn certify(
    atoms: &AtomSequence,
    t: &crate::itinerary::Itinerary,
    old: &AtomMapContext<'_>,
    point: Point,
    stage: Point,
) -> Option<Certificate> {
    let lp = atoms.lprime();
    for i0 in 0..=lp {
        let Slot::Pt(x) = t.get(i0) else { continue };
        let s = trace(atoms, old, i0, x);
        let Some(j0) = (i0 + 1..=lp).find(|&j| s.get(j) == Slot::Pt(x)) else { continue };
        let span = &atoms.atoms()[i0..j0];
        let (k, witness) = match span.iter().position(Atom::is_x0) {
            Some(off) => (i0 + off, WitnessKind::X0Fragment),
            None => (i0, WitnessKind::BlockFixedPoint),
        };
        let witness_point = s.get(k).point()?;
        return Some(Certificate {
            point,
            stage,
            i0,
            j0,
            witness_atom: k,
            witness_point,
            witness,
        });
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::itinerary::AtomMapContext;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn pb(s: &str) -> PartialBijection {
        s.parse().unwrap()
    }

    fn trivial() -> Structure {
        build_structure(&StructureDescriptor::new(StructureKind::Trivial))
    }

    #[test]
    fn safe_extend_right_worked_example() {
        let id = FiniteSupportPerm::identity();
        let g = pb("3->4");
        let wc = WordContext::new([w("x0^2")]).unwrap();
        let bad = bad_set_right(&id, &g, 4, &[], &wc).unwrap();
        assert_eq!(bad.colliding, [3, 4].into());
        assert_eq!(bad.excluded, 4);
        let (b, g2) = safe_extend_right(&trivial(), &id, &g, 4, &[], &wc).unwrap();
        assert_eq!(b, 0);
        assert_eq!(g2, pb("3->4, 4->0"));
    }

    #[test]
    fn safe_extend_avoids_fixed_points_of_x0() {
        let id = FiniteSupportPerm::identity();
        let wc = WordContext::new([w("x0")]).unwrap();
        for a in 0..20 {
            let bad = bad_set_right(&id, &PartialBijection::new(), a, &[], &wc).unwrap();
            assert!(bad.colliding.iter().all(|&b| b == a));
            let (b, _) = safe_extend_right(&trivial(), &id, &PartialBijection::new(), a, &[], &wc).unwrap();
            assert_eq!(b, if a == 0 { 1 } else { 0 });
        }
        let (a, g) = safe_extend_left(&trivial(), &id, &PartialBijection::new(), 0, &[], &wc).unwrap();
        assert_eq!((a, g), (1, pb("1->0")));
    }

    /// The closure computed one itinerary at a time, for every word shape.
    fn closure_oracle(f0: &PartialBijection, a: Point, right: bool, w: &PreparedWord) -> BTreeSet<Point> {
        let ctx = AtomMapContext::new(f0, &[]);
        let mut probes = Vec::new();
        for &i in &w.x0_pos {
            let (from, to) = if right { (i, i + 1) } else { (i + 1, i) };
            probes.push((trace(&w.atoms, &ctx, from, a).set_of(), to));
        }
        for &i in &w.x0_neg {
            let (from, to) = if right { (i + 1, i) } else { (i, i + 1) };
            probes.push((trace(&w.atoms, &ctx, from, a).set_of(), to));
        }
        let mut out = BTreeSet::new();
        closure_values(&w.atoms, &ctx, &probes, &mut out);
        out
    }

    #[test]
    fn power_words_match_general_closure() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let id = FiniteSupportPerm::identity();
        for _ in 0..300 {
            let mut g = PartialBijection::new();
            for _ in 0..rng.gen_range(0..12) {
                let (a, b) = (rng.gen_range(0..12), rng.gen_range(0..12));
                let _ = g.insert(a, b);
            }
            let k = rng.gen_range(1..6i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
            let pw = PreparedWord::new(Word::power(0, k)).unwrap();
            assert_eq!(pw.power, Some(k.unsigned_abs() as usize));
            let wc = WordContext { words: vec![pw.clone()] };
            let a = rng.gen_range(0..14);
            if !g.in_dom(a) {
                let got = bad_set_right(&id, &g, a, &[], &wc).unwrap().colliding;
                assert_eq!(got, closure_oracle(&g, a, true, &pw), "{g} a={a} {}", pw.word);
            }
            if !g.in_ran(a) {
                let got = bad_set_left(&id, &g, a, &[], &wc).unwrap().colliding;
                assert_eq!(got, closure_oracle(&g, a, false, &pw), "{g} b={a} {}", pw.word);
            }
        }
    }

    #[test]
    fn extension_preconditions() {
        let id = FiniteSupportPerm::identity();
        let wc = WordContext::new([w("x0")]).unwrap();
        assert!(safe_extend_right(&trivial(), &id, &pb("3->4"), 3, &[], &wc).is_err());
        assert!(safe_extend_left(&trivial(), &id, &pb("3->4"), 4, &[], &wc).is_err());
        let q = build_structure(&"kind=qorder".parse().unwrap());
        assert!(safe_extend_right(&q, &id, &pb("1->2, 2->1"), 5, &[], &wc).is_err());
        let wc = WordContext::new([w("x0 x1")]).unwrap();
        assert!(matches!(
            safe_extend_right(&trivial(), &id, &PartialBijection::new(), 0, &[], &wc),
            Err(CoreError::UnboundGenerator { .. })
        ));
    }

    #[test]
    fn worked_extension_leaves_no_untraceable_collision() {
        let id = FiniteSupportPerm::identity();
        let g = pb("3->4");
        let wc = WordContext::new([w("x0^2")]).unwrap();
        let (_, g2) = safe_extend_right(&trivial(), &id, &g, 4, &[], &wc).unwrap();
        let atoms = &wc.words()[0].atoms;
        let new = AtomMapContext::new(&g2, &[]);
        let old = AtomMapContext::new(&g, &[]);
        assert_eq!(untraceable_collision(atoms, &new, &old, 50), None);
        // the naive choice b = 3 does create one
        let bad = g.extend(4, 3).unwrap();
        let new = AtomMapContext::new(&bad, &[]);
        assert!(untraceable_collision(atoms, &new, &old, 50).is_some());
    }

    #[test]
    fn member_schedule_and_entry_stages() {
        let mut s = WordSchedule::new(2);
        let words: Vec<String> = s.stage_words(1).iter().map(|p| p.word.to_string()).collect();
        assert_eq!(words, vec!["x0 x1^-1", "x0 x2^-1", "x0", "x0^-1"]);
        assert_eq!(s.entry_stage(&w("x0 x2^-1")), Some(0));
        assert_eq!(s.entry_stage(&w("x0^-1")), Some(1));
        assert_eq!(s.entry_stage(&w("x3 x0")), None);
        assert_eq!(s.entry_stage(&w("x1")), None);
        let p = s.entry_stage(&w("x2 x0^2")).unwrap();
        assert_eq!(s.canonical[p as usize].0.word, w("x2 x0^2"));
    }

    #[test]
    fn member_from_empty_seed_has_no_fixed_points() {
        let q = build_member("q", &PartialBijection::new(), Vec::new());
        q.advance(20).unwrap();
        let memo = q.memo();
        for a in 0..=20 {
            assert_ne!(memo.apply(a), Some(a));
        }
        let r = audit_fixed_points(&[q.clone()], &w("x0"), 100).unwrap();
        assert!(r.fixed_points.is_empty() && r.certified());
        let r = audit_fixed_points(&[q.clone()], &w("x0^2"), 20).unwrap();
        assert!(r.certified() && r.within_bound(), "{r:?}");
    }

    #[test]
    fn member_keeps_seed_fixed_point_only() {
        let q = build_member("q", &pb("5->5"), Vec::new());
        let r = audit_fixed_points(&[q.clone()], &w("x0"), 100).unwrap();
        assert_eq!(r.fixed_points, vec![5]);
        assert!(r.certified());
        assert_eq!(r.certificates[0].stage, 0);
        assert_eq!(r.certificates[0].witness, WitnessKind::X0Fragment);

        let q = build_member("q", &pb("0->0"), Vec::new());
        let r = audit_fixed_points(&[q.clone()], &w("x0"), 50).unwrap();
        assert_eq!(r.fixed_points, vec![0]);
        assert_eq!(q.memo().restrict(|a| a == 0), pb("0->0"));
    }

    #[test]
    fn audit_rejects_trivial_and_unbound_words() {
        let q = build_member("q", &PartialBijection::new(), Vec::new());
        assert_eq!(
            audit_fixed_points(&[q.clone()], &w("x0 x0^-1"), 10),
            Err(CoreError::TrivialWord)
        );
        assert!(audit_fixed_points(&[q], &w("x1"), 10).is_err());
    }

    #[test]
    fn member_construction_is_deterministic() {
        let a = build_dense_family(2, 60).unwrap();
        let b = build_dense_family(2, 60).unwrap();
        for (x, y) in a.members().iter().zip(b.members()) {
            assert_eq!(x.memo_log(), y.memo_log());
        }
    }

    #[test]
    fn family_pair_audit() {
        let fb = build_dense_family(2, 100).unwrap();
        assert_eq!(fb.seeds()[0], PartialBijection::new());
        assert_eq!(fb.seeds()[1], pb("0->0"));
        let r = audit_fixed_points(fb.members(), &w("x1 x0^-1"), 100).unwrap();
        assert_eq!(r.certifier, Some(1));
        assert_eq!(r.rewritten.as_deref(), Some("x0 x1^-1"));
        assert!(r.certified() && r.within_bound(), "{r:?}");
    }
}
