//! `flexperm`: word decompositions, itineraries, strongly independent
//! families and isomorphisms between flexible structures.
//!
//! Exit codes: 0 success, 1 usage or parse error, 2 failed verification.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::rc::Rc;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use flexperm::generic::{properness_witness, run_generic};
use flexperm::independence::{audit_fixed_points, build_dense_family, StrongIndependenceReport};
use flexperm::itinerary::{itinerary_from, AtomMapContext};
use flexperm::structures::{build_structure, transport_between, verify_window_iso};
use flexperm::words::{atom_sequence, dagger_decompose, enumerate_words};
use flexperm::*;

#[derive(Parser)]
#[command(name = "flexperm", version, about = "Strongly independent permutations and generic isomorphisms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Split a word using x0 into x0-powers and x0-free blocks.
    Decompose {
        /// Word in written order, e.g. "x1 x0^2 x1^-1 x0".
        word: String,
        #[arg(long)]
        json: bool,
    },
    /// Trace the itinerary of a point through the atoms of a word.
    Itinerary {
        #[arg(long)]
        word: String,
        /// Partial map for x0, e.g. "0->1, 1->2".
        #[arg(long)]
        f0: String,
        /// Partial map for x1, x2, ... in order; repeatable.
        #[arg(long = "map")]
        maps: Vec<String>,
        #[arg(long, default_value_t = 0)]
        slot: usize,
        #[arg(long)]
        value: Point,
        #[arg(long)]
        json: bool,
    },
    /// Build the first members of the dense strongly independent family.
    BuildFamily {
        #[arg(long)]
        count: usize,
        #[arg(long)]
        horizon: Point,
        #[arg(long)]
        out: PathBuf,
    },
    /// List and certify the fixed points of a word over a family.
    Fixpoints {
        #[arg(long)]
        family: PathBuf,
        /// Word over x0, x1, ... naming family members q1, q2, ... in order.
        #[arg(long)]
        word: String,
        #[arg(long)]
        window: Point,
        #[arg(long)]
        json: bool,
    },
    /// Build an isomorphism between two presentations by a generic run.
    BuildIso {
        #[command(flatten)]
        pair: PairArgs,
        /// Family file whose members the isomorphism stays independent of.
        #[arg(long)]
        family: Option<PathBuf>,
        #[arg(long)]
        horizon: Point,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an isomorphism file on a window.
    VerifyIso {
        #[command(flatten)]
        pair: PairArgs,
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        window: Point,
    },
    /// Fixed points of the even-shift witness, and audits of a family.
    Properness {
        #[arg(long)]
        window: Point,
        #[arg(long)]
        family: Option<PathBuf>,
        /// Longest word audited over the family.
        #[arg(long, default_value_t = 3)]
        max_len: usize,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a relation of a structure: `rel qorder 3 7`, `rel sections 12`.
    Rel {
        /// Kind or full descriptor.
        structure: String,
        #[arg(required = true, num_args = 1..=2)]
        points: Vec<Point>,
    },
}

#[derive(Args)]
struct PairArgs {
    /// Source descriptor, e.g. "kind=qorder;scramble=".
    #[arg(long)]
    from: Option<String>,
    /// Target descriptor, e.g. "kind=qorder;scramble=(0 3)".
    #[arg(long)]
    to: Option<String>,
}

enum Failure {
    Usage(String),
    Verification(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Usage(e.to_string())
    }
}

type Outcome = Result<String, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Verification(msg)) => {
            println!("{msg}");
            ExitCode::from(2)
        }
    }
}

fn run(cmd: Command) -> Outcome {
    match cmd {
        Command::Decompose { word, json } => decompose(&word, json),
        Command::Itinerary { word, f0, maps, slot, value, json } => itinerary(&word, &f0, &maps, slot, value, json),
        Command::BuildFamily { count, horizon, out } => {
            let fb = build_dense_family(count, horizon)?;
            let file = FamilyFile::from_builder(&fb, horizon)?;
            fs::write(&out, file.render())?;
            Ok(format!("wrote {count} members realized to {horizon} to {}\n", out.display()))
        }
        Command::Fixpoints { family, word, window, json } => fixpoints(&family, &word, window, json),
        Command::BuildIso { pair, family, horizon, out } => build_iso(&pair, family.as_deref(), horizon, &out),
        Command::VerifyIso { pair, map, window } => verify_iso(&pair, &map, window),
        Command::Properness { window, family, max_len, json } => properness(window, family.as_deref(), max_len, json),
        Command::Rel { structure, points } => rel(&structure, &points),
    }
}

fn decompose(word: &str, json: bool) -> Outcome {
    let w: Word = word.parse()?;
    let d = dagger_decompose(&w)?;
    let atoms = atom_sequence(&w)?;
    let atom_text: Vec<String> = atoms.atoms().iter().map(|a| a.to_string()).collect();
    if json {
        let v = json!({
            "word": w.to_string(),
            "exponents": d.exponents,
            "blocks": d.u_blocks.iter().map(|u| u.to_string()).collect::<Vec<_>>(),
            "u0": d.u0.as_ref().map(|u| u.to_string()),
            "utop": d.utop.as_ref().map(|u| u.to_string()),
            "m": d.m(),
            "J": d.j,
            "L'": d.lprime,
            "atoms": atom_text,
        });
        return Ok(format!("{v}\n"));
    }
    let blocks: Vec<String> = d.u_blocks.iter().map(|u| u.to_string()).collect();
    let show = |u: &Option<Word>| u.as_ref().map_or("-".to_string(), |u| u.to_string());
    Ok(format!(
        "word: {w}\nexponents: {:?}\nblocks: [{}]\nU0: {}\nU_top: {}\nJ = {}\nL' = {}\natoms (V0 first): {}\n",
        d.exponents,
        blocks.join(", "),
        show(&d.u0),
        show(&d.utop),
        d.j,
        d.lprime,
        atom_text.join(" | ")
    ))
}

fn itinerary(word: &str, f0: &str, maps: &[String], slot: usize, value: Point, json: bool) -> Outcome {
    let w: Word = word.parse()?;
    let atoms = atom_sequence(&w)?;
    let f0: PartialBijection = f0.parse()?;
    let rest: Vec<PartialBijection> = maps.iter().map(|m| m.parse()).collect::<Result<_>>()?;
    let rest_refs: Vec<&dyn PointMap> = rest.iter().map(|m| m as &dyn PointMap).collect();
    let ctx = AtomMapContext::new(&f0, &rest_refs);
    let t = itinerary_from(&atoms, &ctx, slot, value)?;
    let collision = t.find_collision();
    if json {
        let slots: Vec<String> = t.slots().iter().map(|s| s.to_string()).collect();
        let v = json!({ "word": w.to_string(), "slots": slots, "collision": collision });
        return Ok(format!("{v}\n"));
    }
    let mut out = t.trace_lines().join("\n");
    out.push('\n');
    match collision {
        Some((i, j)) => out.push_str(&format!("collision at ({i},{j})\n")),
        None => out.push_str("no collision\n"),
    }
    Ok(out)
}

fn load_family(path: &Path) -> Result<flexperm::independence::FamilyBuilder, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    Ok(FamilyFile::parse(&text)?.rebuild()?)
}

fn report_text(r: &StrongIndependenceReport) -> String {
    let pts: Vec<String> = r.fixed_points.iter().map(|p| p.to_string()).collect();
    let mut out = format!(
        "word: {}\nrewritten: {}\nstage: {}\nfixed points ({}): {}\nbound: {}\ncertified: {}\n",
        r.word,
        r.rewritten.as_deref().unwrap_or("-"),
        r.stage.map_or("-".into(), |s| s.to_string()),
        r.fixed_points.len(),
        pts.join(" "),
        r.bound.map_or("-".into(), |b| b.to_string()),
        r.certified() && r.within_bound()
    );
    for c in &r.certificates {
        out.push_str(&format!(
            "  {}: collision ({},{}) at stage {}, atom {} at {}\n",
            c.point, c.i0, c.j0, c.stage, c.witness_atom, c.witness_point
        ));
    }
    for v in &r.violations {
        out.push_str(&format!("  violation: {v}\n"));
    }
    out
}

fn fixpoints(family: &Path, word: &str, window: Point, json: bool) -> Outcome {
    let fb = load_family(family)?;
    let w: Word = word.parse()?;
    let r = audit_fixed_points(fb.members(), &w, window)?;
    let out = if json { format!("{}\n", serde_json::to_string_pretty(&r)?) } else { report_text(&r) };
    if r.certified() && r.within_bound() {
        Ok(out)
    } else {
        Err(Failure::Verification(out))
    }
}

fn descriptors(pair: &PairArgs, file: Option<&IsoFile>) -> Result<(StructureDescriptor, StructureDescriptor), Failure> {
    let pick = |given: &Option<String>, stored: Option<&StructureDescriptor>, name: &str| match (given, stored) {
        (Some(text), _) => text.parse::<StructureDescriptor>().map_err(Failure::from),
        (None, Some(d)) => Ok(d.clone()),
        (None, None) => Err(Failure::Usage(format!("--{name} is required"))),
    };
    Ok((pick(&pair.from, file.map(|f| &f.from), "from")?, pick(&pair.to, file.map(|f| &f.to), "to")?))
}

fn build_iso(pair: &PairArgs, family: Option<&Path>, horizon: Point, out: &Path) -> Outcome {
    let (from, to) = descriptors(pair, None)?;
    let h = transport_between(&from, &to)?;
    let members = match family {
        Some(p) => load_family(p)?.members().to_vec(),
        None => Vec::new(),
    };
    let s1: Rc<dyn FlexibleStructure> = Rc::new(build_structure(&from));
    let s2 = build_structure(&to);
    let run = run_generic(s1, &s2, Rc::new(h), members.clone(), horizon)?;
    let file = IsoFile { from, to, horizon, family: members.len(), map: run.iso.memo() };
    fs::write(out, file.render())?;
    Ok(format!(
        "wrote isomorphism fragment with {} pairs ({} chain steps) to {}\n",
        file.map.len(),
        run.chain().len(),
        out.display()
    ))
}

fn verify_iso(pair: &PairArgs, map: &Path, window: Point) -> Outcome {
    let text = fs::read_to_string(map).map_err(|e| Failure::Usage(format!("{}: {e}", map.display())))?;
    let file = IsoFile::parse(&text)?;
    let (from, to) = descriptors(pair, Some(&file))?;
    let report = verify_window_iso(&build_structure(&from), &build_structure(&to), &file.map, window);
    match report.counterexample {
        None => Ok(format!("ok: isomorphism on window {window}\n")),
        Some(c) => Err(Failure::Verification(c.to_string())),
    }
}

fn properness(window: Point, family: Option<&Path>, max_len: usize, json: bool) -> Outcome {
    let (_, report) = properness_witness(window);
    let mut audits = Vec::new();
    if let Some(p) = family {
        let fb = load_family(p)?;
        let n = fb.members().len() as u32;
        for top in 0..n {
            // words whose highest generator is x_top
            for w in enumerate_words(top, max_len) {
                let w = w.relabel(|g| top - g);
                audits.push(audit_fixed_points(fb.members(), &w, window)?);
            }
        }
    }
    let bounded = audits.iter().all(|r| r.certified() && r.within_bound());
    let ok = report.ok() && bounded;
    let out = if json {
        let v = json!({ "witness": report, "audits": audits, "separated": ok });
        format!("{}\n", serde_json::to_string_pretty(&v)?)
    } else {
        let most = audits.iter().map(|r| r.fixed_points.len()).max().unwrap_or(0);
        format!(
            "witness fixed points in 0..={window}: {} (need at least {})\naudited words: {}, all certified and bounded: {bounded}\nlargest audited count: {most}\n",
            report.fixed_points.len(),
            report.required,
            audits.len()
        )
    };
    if ok {
        Ok(out)
    } else {
        Err(Failure::Verification(out))
    }
}

fn rel(structure: &str, points: &[Point]) -> Outcome {
    let desc: StructureDescriptor = if structure.contains('=') {
        structure.parse()?
    } else {
        StructureDescriptor::new(structure.parse()?)
    };
    let s = build_structure(&desc);
    match points {
        [a] => match s.unary_label(*a) {
            Some(l) => Ok(format!("R{l}({a}) = true\n")),
            None => Err(Failure::Usage(format!("{} has no unary relations", desc.kind.name()))),
        },
        [a, b] => {
            let Some(&r) = s.binary_relations().first() else {
                return Err(Failure::Usage(format!("{} has no binary relations", desc.kind.name())));
            };
            Ok(format!("{}({a},{b}) = {}\n", r.name(), s.rel_eval(r, &[*a, *b])?))
        }
        _ => unreachable!("clap bounds the arity"),
    }
}
