//! Reduced words in the free group on generators `x0, x1, ...`.
//!
//! A [`Word`] stores its letters in application order: `letters()[0]` is the
//! rightmost letter of the written word and acts first. Written syntax is
//! `x1 x0^2 x1^-1 x0`, read left to right as usual.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// A generator `x_gen` or its inverse.
///
/// The derived order is `(gen ascending, positive before inverse)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    pub gen: u32,
    pub inverse: bool,
}

impl Letter {
    pub const fn pos(gen: u32) -> Self {
        Letter { gen, inverse: false }
    }

    pub const fn neg(gen: u32) -> Self {
        Letter { gen, inverse: true }
    }

    pub fn inv(self) -> Self {
        Letter { gen: self.gen, inverse: !self.inverse }
    }

    pub fn sign(self) -> i64 {
        if self.inverse {
            -1
        } else {
            1
        }
    }

    fn cancels(self, other: Letter) -> bool {
        self.gen == other.gen && self.inverse != other.inverse
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Word::default()
    }

    /// Free reduction of `letters`, given in application order.
    pub fn from_letters<I: IntoIterator<Item = Letter>>(letters: I) -> Self {
        let mut out: Vec<Letter> = Vec::new();
        for l in letters {
            match out.last() {
                Some(&top) if top.cancels(l) => {
                    out.pop();
                }
                _ => out.push(l),
            }
        }
        Word { letters: out }
    }

    /// Builds a word from letters in written (left to right) order.
    pub fn from_written<I>(letters: I) -> Self
    where
        I: IntoIterator<Item = Letter>,
        I::IntoIter: DoubleEndedIterator,
    {
        Word::from_letters(letters.into_iter().rev())
    }

    /// `x_gen^exp` as a word.
    pub fn power(gen: u32, exp: i64) -> Self {
        let l = if exp < 0 { Letter::neg(gen) } else { Letter::pos(gen) };
        Word { letters: vec![l; exp.unsigned_abs() as usize] }
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    /// Letters in written order.
    pub fn written(&self) -> impl Iterator<Item = Letter> + '_ {
        self.letters.iter().rev().copied()
    }

    /// Standard length `L(W)`.
    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn invert(&self) -> Self {
        Word { letters: self.letters.iter().rev().map(|l| l.inv()).collect() }
    }

    /// The product `self · other`; `other` acts first.
    pub fn concat(&self, other: &Word) -> Self {
        Word::from_letters(other.letters.iter().chain(self.letters.iter()).copied())
    }

    pub fn uses(&self, gen: u32) -> bool {
        self.letters.iter().any(|l| l.gen == gen)
    }

    pub fn max_gen(&self) -> Option<u32> {
        self.letters.iter().map(|l| l.gen).max()
    }

    /// Renames generators through `f`. `f` must be injective on the
    /// generators used, which keeps the result reduced.
    pub fn relabel(&self, mut f: impl FnMut(u32) -> u32) -> Self {
        Word {
            letters: self
                .letters
                .iter()
                .map(|l| Letter { gen: f(l.gen), inverse: l.inverse })
                .collect(),
        }
    }

    /// Exponents of the maximal single-generator runs in application order.
    fn runs(&self) -> Vec<(u32, i64)> {
        let mut runs: Vec<(u32, i64)> = Vec::new();
        for l in &self.letters {
            match runs.last_mut() {
                Some((g, e)) if *g == l.gen => *e += l.sign(),
                _ => runs.push((l.gen, l.sign())),
            }
        }
        runs
    }
}

impl Ord for Word {
    /// Length first, then lexicographic on written order.
    fn cmp(&self, other: &Self) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.written().cmp(other.written()))
    }
}

impl PartialOrd for Word {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_trivial() {
            return f.write_str("1");
        }
        let runs = self.runs();
        for (i, (gen, exp)) in runs.iter().rev().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            if *exp == 1 {
                write!(f, "x{gen}")?;
            } else {
                write!(f, "x{gen}^{exp}")?;
            }
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = CoreError;

    fn from_str(s: &str) -> Result<Self> {
        let mut written = Vec::new();
        for tok in s.split_whitespace() {
            if tok == "1" || tok == "e" {
                continue;
            }
            let body = tok
                .strip_prefix('x')
                .ok_or_else(|| CoreError::Parse(format!("bad token `{tok}`")))?;
            let (gen, exp) = match body.split_once('^') {
                Some((g, e)) => (g, e),
                None => (body, "1"),
            };
            let gen: u32 = gen
                .parse()
                .map_err(|_| CoreError::Parse(format!("bad generator in `{tok}`")))?;
            let exp: i64 = exp
                .parse()
                .map_err(|_| CoreError::Parse(format!("bad exponent in `{tok}`")))?;
            let l = if exp < 0 { Letter::neg(gen) } else { Letter::pos(gen) };
            written.extend(std::iter::repeat(l).take(exp.unsigned_abs() as usize));
        }
        Ok(Word::from_written(written))
    }
}

/// `V_i` in the refined decomposition: a single `x0^{±1}` or a maximal
/// block free of `x0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Atom {
    X0Pos,
    X0Neg,
    UBlock(Word),
}

impl Atom {
    pub fn ublock(w: Word) -> Result<Self> {
        if w.uses(0) {
            return Err(CoreError::MalformedAtom(w.to_string()));
        }
        if w.is_trivial() {
            return Err(CoreError::TrivialWord);
        }
        Ok(Atom::UBlock(w))
    }

    pub fn is_x0(&self) -> bool {
        !matches!(self, Atom::UBlock(_))
    }

    pub fn to_word(&self) -> Word {
        match self {
            Atom::X0Pos => Word::power(0, 1),
            Atom::X0Neg => Word::power(0, -1),
            Atom::UBlock(w) => w.clone(),
        }
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::X0Pos => f.write_str("x0"),
            Atom::X0Neg => f.write_str("x0^-1"),
            Atom::UBlock(w) => write!(f, "U[{w}]"),
        }
    }
}

/// Block decomposition
/// `W = (U_{m+1}) x0^{k_m} ... x0^{k_1} U_1 x0^{k_0} (U_0)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaggerDecomposition {
    pub exponents: Vec<i64>,
    /// `U_1 .. U_m`.
    pub u_blocks: Vec<Word>,
    pub u0: Option<Word>,
    pub utop: Option<Word>,
    pub j: usize,
    pub lprime: usize,
}

impl DaggerDecomposition {
    pub fn m(&self) -> usize {
        self.exponents.len() - 1
    }

    pub fn reassemble(&self) -> Word {
        let mut w = self.u0.clone().unwrap_or_default();
        for (i, &k) in self.exponents.iter().enumerate() {
            w = Word::power(0, k).concat(&w);
            if let Some(u) = self.u_blocks.get(i) {
                w = u.concat(&w);
            }
        }
        if let Some(u) = &self.utop {
            w = u.concat(&w);
        }
        w
    }
}

pub fn dagger_decompose(w: &Word) -> Result<DaggerDecomposition> {
    if !w.uses(0) {
        return Err(CoreError::DoesNotUseX0(w.to_string()));
    }
    // Alternating maximal runs in application order.
    let mut blocks: Vec<(bool, Vec<Letter>)> = Vec::new();
    for &l in w.letters() {
        let is_x0 = l.gen == 0;
        match blocks.last_mut() {
            Some((kind, ls)) if *kind == is_x0 => ls.push(l),
            _ => blocks.push((is_x0, vec![l])),
        }
    }
    let mut u0 = None;
    let mut utop = None;
    if !blocks[0].0 {
        u0 = Some(Word { letters: blocks.remove(0).1 });
    }
    if !blocks.last().expect("word uses x0").0 {
        utop = Some(Word { letters: blocks.pop().expect("nonempty").1 });
    }
    let mut exponents = Vec::new();
    let mut u_blocks = Vec::new();
    for (is_x0, ls) in blocks {
        if is_x0 {
            exponents.push(ls.iter().map(|l| l.sign()).sum());
        } else {
            u_blocks.push(Word { letters: ls });
        }
    }
    let m = exponents.len() - 1;
    let j = m + usize::from(u0.is_some()) + usize::from(utop.is_some());
    let lprime = exponents.iter().map(|k: &i64| k.unsigned_abs() as usize).sum::<usize>() + j;
    Ok(DaggerDecomposition { exponents, u_blocks, u0, utop, j, lprime })
}

/// The atoms `V_0, ..., V_{L'(W)-1}`; `V_0` acts first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AtomSequence {
    atoms: Vec<Atom>,
}

impl AtomSequence {
    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// `L'(W)`.
    pub fn lprime(&self) -> usize {
        self.atoms.len()
    }

    pub fn reassemble(&self) -> Word {
        Word::from_letters(self.atoms.iter().flat_map(|a| a.to_word().letters))
    }

    /// Highest generator index appearing in any block (0 if none).
    pub fn max_gen(&self) -> u32 {
        self.atoms
            .iter()
            .filter_map(|a| match a {
                Atom::UBlock(w) => w.max_gen(),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

pub fn atom_sequence(w: &Word) -> Result<AtomSequence> {
    if !w.uses(0) {
        return Err(CoreError::DoesNotUseX0(w.to_string()));
    }
    let mut atoms = Vec::with_capacity(w.len());
    let mut block: Vec<Letter> = Vec::new();
    for &l in w.letters() {
        if l.gen == 0 {
            if !block.is_empty() {
                atoms.push(Atom::UBlock(Word { letters: std::mem::take(&mut block) }));
            }
            atoms.push(if l.inverse { Atom::X0Neg } else { Atom::X0Pos });
        } else {
            block.push(l);
        }
    }
    if !block.is_empty() {
        atoms.push(Atom::UBlock(Word { letters: block }));
    }
    Ok(AtomSequence { atoms })
}

/// Streams every reduced word over `x0..=xn` that uses `x0`, in canonical
/// length-lexicographic order. Unbounded.
#[derive(Clone, Debug)]
pub struct WordEnumerator {
    alphabet: Vec<Letter>,
    len: usize,
    pending: std::vec::IntoIter<Word>,
}

impl WordEnumerator {
    pub fn new(n: u32) -> Self {
        let alphabet = (0..=n).flat_map(|g| [Letter::pos(g), Letter::neg(g)]).collect();
        WordEnumerator { alphabet, len: 0, pending: Vec::new().into_iter() }
    }

    /// Reduced words of exactly `len` letters (written order), lexicographic.
    fn level(&self, len: usize) -> Vec<Word> {
        fn rec(alpha: &[Letter], len: usize, acc: &mut Vec<Letter>, out: &mut Vec<Word>) {
            if acc.len() == len {
                if acc.iter().any(|l| l.gen == 0) {
                    out.push(Word::from_written(acc.iter().copied()));
                }
                return;
            }
            for &l in alpha {
                if acc.last().is_some_and(|p| p.cancels(l)) {
                    continue;
                }
                acc.push(l);
                rec(alpha, len, acc, out);
                acc.pop();
            }
        }
        let mut out = Vec::new();
        rec(&self.alphabet, len, &mut Vec::with_capacity(len), &mut out);
        out
    }
}

impl Iterator for WordEnumerator {
    type Item = Word;

    fn next(&mut self) -> Option<Word> {
        loop {
            if let Some(w) = self.pending.next() {
                return Some(w);
            }
            self.len += 1;
            self.pending = self.level(self.len).into_iter();
        }
    }
}

/// All reduced words over `x0..=xn` using `x0` with `L(W) <= max_len`.
pub fn enumerate_words(n: u32, max_len: usize) -> Vec<Word> {
    WordEnumerator::new(n).take_while(|w| w.len() <= max_len).collect()
}
