//! Line-oriented text formats for built families and isomorphism fragments.
//!
//! ```text
//! # family v1
//! count 2
//! horizon 10
//! seed q1
//! memo q1 0->1, 1->0, ...
//! seed q2 0->0
//! memo q2 0->0, 1->2, ...
//! ```
//!
//! A family file is a record, not a source of truth: loading rebuilds the
//! family from `count` and checks every realized fragment against it.

use std::fmt::Write as _;

use crate::error::{CoreError, Result};
use crate::independence::{build_dense_family, FamilyBuilder};
use crate::pmap::{PartialBijection, Point};
use crate::structures::StructureDescriptor;

const FAMILY_HEADER: &str = "# family v1";
const ISO_HEADER: &str = "# iso v1";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FamilyFile {
    pub horizon: Point,
    pub seeds: Vec<PartialBijection>,
    pub memos: Vec<PartialBijection>,
}

impl FamilyFile {
    pub fn from_builder(fb: &FamilyBuilder, horizon: Point) -> Result<Self> {
        fb.realize(horizon)?;
        Ok(FamilyFile {
            horizon,
            seeds: fb.seeds().to_vec(),
            memos: fb.members().iter().map(|m| m.memo()).collect(),
        })
    }

    pub fn count(&self) -> usize {
        self.seeds.len()
    }

    pub fn render(&self) -> String {
        let mut out = format!("{FAMILY_HEADER}\ncount {}\nhorizon {}\n", self.count(), self.horizon);
        for (i, (s, m)) in self.seeds.iter().zip(&self.memos).enumerate() {
            let _ = writeln!(out, "seed q{} {s}", i + 1);
            let _ = writeln!(out, "memo q{} {m}", i + 1);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = body(text, FAMILY_HEADER)?;
        let count: usize = field(lines.next(), "count")?;
        let horizon: Point = field(lines.next(), "horizon")?;
        let mut seeds = Vec::with_capacity(count);
        let mut memos = Vec::with_capacity(count);
        for i in 1..=count {
            let label = format!("q{i}");
            seeds.push(labelled(lines.next(), "seed", &label)?);
            memos.push(labelled(lines.next(), "memo", &label)?);
        }
        if let Some(extra) = lines.next() {
            return Err(CoreError::Parse(format!("unexpected line: {extra}")));
        }
        Ok(FamilyFile { horizon, seeds, memos })
    }

    /// Rebuilds the family and checks it against the recorded fragments.
    pub fn rebuild(&self) -> Result<FamilyBuilder> {
        let fb = build_dense_family(self.count(), self.horizon)?;
        for (i, m) in fb.members().iter().enumerate() {
            if fb.seeds()[i] != self.seeds[i] || m.memo() != self.memos[i] {
                return Err(CoreError::Parse(format!("q{} does not match the construction", i + 1)));
            }
        }
        Ok(fb)
    }
}

/// A realized fragment of an isomorphism between two presentations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IsoFile {
    pub from: StructureDescriptor,
    pub to: StructureDescriptor,
    pub horizon: Point,
    /// Size of the family the map was built against.
    pub family: usize,
    pub map: PartialBijection,
}

impl IsoFile {
    pub fn render(&self) -> String {
        format!(
            "{ISO_HEADER}\nfrom {}\nto {}\nhorizon {}\nfamily {}\nmap {}\n",
            self.from, self.to, self.horizon, self.family, self.map
        )
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = body(text, ISO_HEADER)?;
        let from = field(lines.next(), "from")?;
        let to = field(lines.next(), "to")?;
        let horizon = field(lines.next(), "horizon")?;
        let family = field(lines.next(), "family")?;
        let map = field(lines.next(), "map")?;
        if let Some(extra) = lines.next() {
            return Err(CoreError::Parse(format!("unexpected line: {extra}")));
        }
        Ok(IsoFile { from, to, horizon, family, map })
    }
}

fn body<'a>(text: &'a str, header: &str) -> Result<impl Iterator<Item = &'a str>> {
    let mut lines = text.lines().map(str::trim_end).filter(|l| !l.is_empty());
    match lines.next() {
        Some(h) if h == header => Ok(lines),
        other => Err(CoreError::Parse(format!("expected `{header}`, found {other:?}"))),
    }
}

fn field<T: std::str::FromStr>(line: Option<&str>, key: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    let line = line.ok_or_else(|| CoreError::Parse(format!("missing `{key}` line")))?;
    let value = match line.split_once(' ') {
        Some((k, v)) if k == key => v,
        None if line == key => "",
        _ => return Err(CoreError::Parse(format!("expected `{key}`, found `{line}`"))),
    };
    value.trim().parse().map_err(|e| CoreError::Parse(format!("{key}: {e}")))
}

fn labelled(line: Option<&str>, key: &str, label: &str) -> Result<PartialBijection> {
    let line = line.ok_or_else(|| CoreError::Parse(format!("missing `{key} {label}` line")))?;
    let rest = line
        .strip_prefix(key)
        .and_then(|r| r.trim_start().strip_prefix(label))
        .filter(|r| r.is_empty() || r.starts_with(' '))
        .ok_or_else(|| CoreError::Parse(format!("expected `{key} {label}`, found `{line}`")))?;
    rest.trim().parse()
}
