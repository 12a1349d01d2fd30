//! Itineraries: moving a point forwards and backwards through the atoms of
//! a word, with `c` marking where movement stops being defined.

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::error::{CoreError, Result};
use crate::pmap::{Point, PointMap};
use crate::words::{Atom, AtomSequence};

/// One coordinate of an itinerary: a point, or the sentinel `c`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Slot {
    Pt(Point),
    C,
}

impl Slot {
    pub fn point(self) -> Option<Point> {
        match self {
            Slot::Pt(p) => Some(p),
            Slot::C => None,
        }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Slot::Pt(p) => write!(f, "{p}"),
            Slot::C => f.write_str("c"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Maps substituted for the generators: `f0` for `x0`, `rest[k-1]` for `xk`.
#[derive(Clone, Copy)]
pub struct AtomMapContext<'a> {
    pub f0: &'a dyn PointMap,
    pub rest: &'a [&'a dyn PointMap],
}

impl<'a> AtomMapContext<'a> {
    pub fn new(f0: &'a dyn PointMap, rest: &'a [&'a dyn PointMap]) -> Self {
        AtomMapContext { f0, rest }
    }

    /// Fails if some block of `atoms` names a generator with no map.
    pub fn check(&self, atoms: &AtomSequence) -> Result<()> {
        let g = atoms.max_gen();
        if g as usize > self.rest.len() {
            return Err(CoreError::UnboundGenerator { gen: g, bound: self.rest.len() });
        }
        Ok(())
    }

    fn step(&self, atom: &Atom, a: Point, dir: Direction) -> Option<Point> {
        match (atom, dir) {
            (Atom::X0Pos, Direction::Forward) | (Atom::X0Neg, Direction::Backward) => {
                self.f0.forward(a)
            }
            (Atom::X0Neg, Direction::Forward) | (Atom::X0Pos, Direction::Backward) => {
                self.f0.backward(a)
            }
            (Atom::UBlock(w), Direction::Forward) => {
                let mut x = a;
                for l in w.letters() {
                    let m = self.rest[l.gen as usize - 1];
                    x = if l.inverse { m.backward(x)? } else { m.forward(x)? };
                }
                Some(x)
            }
            (Atom::UBlock(w), Direction::Backward) => {
                let mut x = a;
                for l in w.letters().iter().rev() {
                    let m = self.rest[l.gen as usize - 1];
                    x = if l.inverse { m.forward(x)? } else { m.backward(x)? };
                }
                Some(x)
            }
        }
    }
}

/// `V(f0, ..., fn)(a)` or its inverse image.
pub fn atom_apply(
    atom: &Atom,
    ctx: &AtomMapContext<'_>,
    a: Point,
    dir: Direction,
) -> Result<Option<Point>> {
    if let Atom::UBlock(w) = atom {
        if w.uses(0) {
            return Err(CoreError::MalformedAtom(w.to_string()));
        }
        if let Some(g) = w.max_gen() {
            if g as usize > ctx.rest.len() {
                return Err(CoreError::UnboundGenerator { gen: g, bound: ctx.rest.len() });
            }
        }
    }
    Ok(ctx.step(atom, a, dir))
}

/// `(t_0, ..., t_{L'})`, stored bottom slot first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Itinerary {
    slots: Vec<Slot>,
}

impl Itinerary {
    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn get(&self, i: usize) -> Slot {
        self.slots[i]
    }

    pub fn top(&self) -> usize {
        self.slots.len() - 1
    }

    /// `set(t̄)`: the points, without `c`.
    pub fn set_of(&self) -> BTreeSet<Point> {
        self.slots.iter().filter_map(|s| s.point()).collect()
    }

    /// Least `(i, j)`, `i < j`, with `t_i = t_j` a point.
    pub fn find_collision(&self) -> Option<(usize, usize)> {
        for i in 0..self.slots.len() {
            let Slot::Pt(x) = self.slots[i] else { continue };
            for j in i + 1..self.slots.len() {
                if self.slots[j] == Slot::Pt(x) {
                    return Some((i, j));
                }
            }
        }
        None
    }

    /// Trace lines `t[i]=v`, top slot first.
    pub fn trace_lines(&self) -> Vec<String> {
        (0..self.slots.len()).rev().map(|i| format!("t[{i}]={}", self.slots[i])).collect()
    }
}

impl From<Vec<Slot>> for Itinerary {
    fn from(slots: Vec<Slot>) -> Self {
        Itinerary { slots }
    }
}

/// `It(W, f0, ..., fn, i, a)`.
pub fn itinerary_from(
    atoms: &AtomSequence,
    ctx: &AtomMapContext<'_>,
    i: usize,
    a: Point,
) -> Result<Itinerary> {
    if i > atoms.lprime() {
        return Err(CoreError::Precondition(format!(
            "slot {i} out of range 0..={}",
            atoms.lprime()
        )));
    }
    ctx.check(atoms)?;
    Ok(trace(atoms, ctx, i, a))
}

/// [`itinerary_from`] without validation; the context must bind every
/// generator of `atoms`.
pub(crate) fn trace(atoms: &AtomSequence, ctx: &AtomMapContext<'_>, i: usize, a: Point) -> Itinerary {
    let atoms = atoms.atoms();
    let mut slots = vec![Slot::C; atoms.len() + 1];
    slots[i] = Slot::Pt(a);
    let mut x = a;
    for k in i..atoms.len() {
        match ctx.step(&atoms[k], x, Direction::Forward) {
            Some(y) => {
                slots[k + 1] = Slot::Pt(y);
                x = y;
            }
            None => break,
        }
    }
    let mut x = a;
    for k in (0..i).rev() {
        match ctx.step(&atoms[k], x, Direction::Backward) {
            Some(y) => {
                slots[k] = Slot::Pt(y);
                x = y;
            }
            None => break,
        }
    }
    Itinerary { slots }
}

/// Coordinate `to` of the itinerary with value `x` at `from`; `None` for `c`.
pub fn path_value(
    atoms: &AtomSequence,
    ctx: &AtomMapContext<'_>,
    from: usize,
    to: usize,
    x: Point,
) -> Result<Option<Point>> {
    if from.max(to) > atoms.lprime() {
        return Err(CoreError::Precondition("slot out of range".into()));
    }
    ctx.check(atoms)?;
    Ok(walk(atoms, ctx, from, to, x))
}

pub(crate) fn walk(
    atoms: &AtomSequence,
    ctx: &AtomMapContext<'_>,
    from: usize,
    to: usize,
    x: Point,
) -> Option<Point> {
    let atoms = atoms.atoms();
    let mut v = x;
    if to >= from {
        for atom in &atoms[from..to] {
            v = ctx.step(atom, v, Direction::Forward)?;
        }
    } else {
        for atom in atoms[to..from].iter().rev() {
            v = ctx.step(atom, v, Direction::Backward)?;
        }
    }
    Some(v)
}
