//! The condition poset and a countable generic-filter engine.
//!
//! A condition is a pair `(g, H)`: a partial automorphism `g` from the
//! witnessing family of the source structure and a finite list `H` of
//! family members. Stronger conditions extend both, and every collision of
//! a word over `x0` and `H` with respect to the new `h ∘ g` must trace back
//! to one with respect to the old. Meeting countably many dense sets in
//! turn yields a filter, and `f = h ∘ ⋃g` is the isomorphism it describes.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::rc::Rc;

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::independence::{choose_left, choose_right, untraceable_collision, PreparedWord};
use crate::itinerary::AtomMapContext;
use crate::pmap::{Composed, ExtensionStrategy, LazyPermutation, Memo, PartialBijection, Point, PointMap};
use crate::structures::{verify_window_iso, FlexibleStructure};
use crate::words::{enumerate_words, Word};

/// Index of a member of the family attached to a run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Handle(pub usize);

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Condition {
    pub g: PartialBijection,
    /// Insertion order fixes which handle plays `x_k`.
    pub handles: Vec<Handle>,
}

impl Condition {
    pub fn new(g: PartialBijection, handles: Vec<Handle>) -> Result<Self> {
        let distinct: BTreeSet<_> = handles.iter().collect();
        if distinct.len() != handles.len() {
            return Err(CoreError::Precondition("repeated handle".into()));
        }
        Ok(Condition { g, handles })
    }

    pub fn meets(&self, r: &Requirement) -> bool {
        match *r {
            Requirement::DomCovers(a) => self.g.in_dom(a),
            Requirement::RanCovers(b) => self.g.in_ran(b),
            Requirement::Includes(h) => self.handles.contains(&h),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Requirement {
    DomCovers(Point),
    RanCovers(Point),
    Includes(Handle),
}

/// The source structure, the fixed isomorphism `h`, and the family the
/// handles refer to.
#[derive(Clone)]
pub struct PosetContext {
    pub structure: Rc<dyn FlexibleStructure>,
    pub h: Rc<dyn PointMap>,
    pub family: Vec<Rc<LazyPermutation>>,
}

impl PosetContext {
    fn maps(&self, handles: &[Handle]) -> Result<Vec<&dyn PointMap>> {
        handles
            .iter()
            .map(|&Handle(i)| {
                self.family.get(i).map(|m| m.as_ref() as &dyn PointMap).ok_or_else(|| {
                    CoreError::Precondition(format!("handle {i} outside a family of {}", self.family.len()))
                })
            })
            .collect()
    }
}

/// Words over `x0, ..., xn` using `x0` with length at most `n`.
pub fn condition_words(n: usize) -> Vec<Word> {
    enumerate_words(n as u32, n)
}

fn prepared(n: usize) -> Vec<PreparedWord> {
    condition_words(n)
        .into_iter()
        .map(|w| PreparedWord::new(w).expect("enumerated words use x0"))
        .collect()
}

/// `p ≤ p′` with the collision clause checked only on itineraries seeded
/// at points `<= window`. Sound on the window, not complete.
pub fn leq_check_bounded(p: &Condition, q: &Condition, ctx: &PosetContext, window: Point) -> bool {
    if !p.g.is_subset_of(&q.g) || !p.handles.iter().all(|h| q.handles.contains(h)) {
        return false;
    }
    if !ctx.structure.contains(&q.g) {
        return false;
    }
    let Ok(rest) = ctx.maps(&p.handles) else { return false };
    let h = ctx.h.as_ref();
    let new_f0 = Composed { outer: h, inner: &q.g };
    let old_f0 = Composed { outer: h, inner: &p.g };
    let new = AtomMapContext::new(&new_f0, &rest);
    let old = AtomMapContext::new(&old_f0, &rest);
    prepared(p.handles.len())
        .iter()
        .all(|w| untraceable_collision(&w.atoms, &new, &old, window).is_none())
}

/// A stronger condition meeting `r`; `p` itself if it already does.
pub fn extend_to_meet(p: &Condition, r: Requirement, ctx: &PosetContext) -> Result<Condition> {
    if !ctx.structure.contains(&p.g) {
        return Err(CoreError::Precondition(format!("{{{}}} is not in the family", p.g)));
    }
    if p.meets(&r) {
        return Ok(p.clone());
    }
    let words = prepared(p.handles.len());
    let refs: Vec<&PreparedWord> = words.iter().collect();
    let rest = ctx.maps(&p.handles)?;
    let s = ctx.structure.as_ref();
    let h = ctx.h.as_ref();
    let mut q = p.clone();
    match r {
        Requirement::DomCovers(a) => {
            let b = choose_right(s, h, &p.g, a, &rest, &refs)?;
            q.g.insert(a, b)?;
        }
        Requirement::RanCovers(b) => {
            let a = choose_left(s, h, &p.g, b, &rest, &refs)?;
            q.g.insert(a, b)?;
        }
        Requirement::Includes(f) => {
            ctx.maps(&[f])?;
            q.handles.push(f);
        }
    }
    Ok(q)
}

/// The key of the centered piece containing `p`.
pub fn class_key(p: &Condition) -> &PartialBijection {
    &p.g
}

/// `(g, ⋃H)` for conditions sharing `g`; handles keep first-seen order.
pub fn centered_upper_bound(conds: &[Condition]) -> Result<Condition> {
    let Some(first) = conds.first() else {
        return Err(CoreError::Precondition("no conditions".into()));
    };
    if conds.iter().any(|c| c.g != first.g) {
        return Err(CoreError::MixedClassKeys);
    }
    let mut handles = Vec::new();
    for h in conds.iter().flat_map(|c| &c.handles) {
        if !handles.contains(h) {
            handles.push(*h);
        }
    }
    Ok(Condition { g: first.g.clone(), handles })
}

/// The chain and the requirements met so far.
#[derive(Clone, Debug, Default, Serialize)]
pub struct RunLog {
    pub chain: Vec<Condition>,
    pub schedule: Vec<Requirement>,
}

/// Continues the chain one round per stage: cover `s` in the domain, `s`
/// and `h⁻¹(s)` in the range, then admit the next handle.
struct GenericStrategy {
    ctx: PosetContext,
    current: Condition,
    log: Rc<RefCell<RunLog>>,
}

impl GenericStrategy {
    fn step(&mut self, r: Requirement, memo: &mut Memo) -> Result<()> {
        let next = extend_to_meet(&self.current, r, &self.ctx)?;
        for (a, b) in next.g.pairs().filter(|&(a, _)| !self.current.g.in_dom(a)) {
            let hb = self.ctx.h.forward(b).expect("h is total");
            memo.insert(a, hb)?;
        }
        let mut log = self.log.borrow_mut();
        log.schedule.push(r);
        if next != self.current {
            log.chain.push(next.clone());
        }
        self.current = next;
        Ok(())
    }

    fn n_needed(word: &Word) -> usize {
        word.len().max(word.max_gen().unwrap_or(0) as usize)
    }
}

impl ExtensionStrategy for GenericStrategy {
    fn realize(&mut self, s: Point, memo: &mut Memo) -> Result<()> {
        let back = self.ctx.h.backward(s).expect("h is total");
        self.step(Requirement::DomCovers(s), memo)?;
        self.step(Requirement::RanCovers(s), memo)?;
        self.step(Requirement::RanCovers(back), memo)?;
        let next = s as usize;
        if next < self.ctx.family.len() {
            self.step(Requirement::Includes(Handle(next)), memo)?;
        }
        Ok(())
    }

    fn rest(&self) -> Vec<Rc<LazyPermutation>> {
        self.ctx.family.clone()
    }

    /// A word enters once `|H|` reaches its length and its generators.
    fn entry_stage(&mut self, word: &Word) -> Option<Point> {
        let n = Self::n_needed(word);
        (word.uses(0) && n <= self.ctx.family.len()).then_some(n as Point)
    }
}

pub struct FilterRun {
    pub iso: Rc<LazyPermutation>,
    pub log: Rc<RefCell<RunLog>>,
    pub horizon: Point,
}

impl FilterRun {
    pub fn chain(&self) -> Vec<Condition> {
        self.log.borrow().chain.clone()
    }

    pub fn schedule(&self) -> Vec<Requirement> {
        self.log.borrow().schedule.clone()
    }

    /// The last condition of the chain.
    pub fn condition(&self) -> Condition {
        self.log.borrow().chain.last().cloned().unwrap_or_default()
    }
}

/// Builds `f = h ∘ g` from a generic chain and realizes it up to `horizon`.
/// `h` must be an isomorphism `s1 → s2`; it is checked on the window first.
pub fn run_generic(
    s1: Rc<dyn FlexibleStructure>,
    s2: &dyn FlexibleStructure,
    h: Rc<dyn PointMap>,
    family: Vec<Rc<LazyPermutation>>,
    horizon: Point,
) -> Result<FilterRun> {
    let report = verify_window_iso(s1.as_ref(), s2, h.as_ref(), horizon);
    if let Some(c) = report.counterexample {
        return Err(CoreError::NotAnIsomorphism(c.to_string()));
    }
    let log = Rc::new(RefCell::new(RunLog { chain: vec![Condition::default()], schedule: Vec::new() }));
    let strategy = GenericStrategy {
        ctx: PosetContext { structure: s1, h, family },
        current: Condition::default(),
        log: log.clone(),
    };
    let iso = Rc::new(LazyPermutation::new("f", &PartialBijection::new(), Box::new(strategy)));
    iso.advance(horizon)?;
    Ok(FilterRun { iso, log, horizon })
}

/// Fixed points of the even-shift witness on `{0, ..., window}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PropernessReport {
    pub window: Point,
    pub fixed_points: Vec<Point>,
    /// `⌊window / 2⌋ - 1`.
    pub required: u64,
}

impl PropernessReport {
    pub fn ok(&self) -> bool {
        self.fixed_points.len() as u64 >= self.required
    }
}

fn decode(n: Point) -> i64 {
    if n % 2 == 0 {
        (n / 2) as i64
    } else {
        -((n as i64 + 1) / 2)
    }
}

fn encode(z: i64) -> Point {
    if z >= 0 {
        2 * z as Point
    } else {
        (-2 * z - 1) as Point
    }
}

/// `a_z ↦ a_{z+2}` for even `z`, identity on odd `z`, with `ω` coded as `ℤ`.
pub fn properness_witness(window: Point) -> (LazyPermutation, PropernessReport) {
    let fwd = |n| {
        let z = decode(n);
        if z % 2 == 0 { encode(z + 2) } else { n }
    };
    let bwd = |n| {
        let z = decode(n);
        if z % 2 == 0 { encode(z - 2) } else { n }
    };
    let fixed_points = (0..=window).filter(|&n| fwd(n) == n).collect();
    let report = PropernessReport { window, fixed_points, required: (window / 2).saturating_sub(1) };
    (LazyPermutation::from_fns("shift", fwd, bwd), report)
}
