use std::path::Path;
use std::process::{Command, Output};

fn flexperm(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flexperm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("run flexperm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn here() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn decompose_reports_lprime_and_atoms() {
    let d = here();
    let o = flexperm(&["decompose", "x1 x0^2 x1^-1 x0"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("L' = 5"));
    assert!(text.contains("exponents: [1, 2]"));
    assert!(text.contains("x0 | U[x1^-1] | x0 | x0 | U[x1]"));

    let o = flexperm(&["decompose", "x0^3"], d.path());
    let text = stdout(&o);
    assert!(text.contains("L' = 3") && text.contains("J = 0"), "{text}");

    let o = flexperm(&["decompose", "x0^3", "--json"], d.path());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["L'"], 3);
    assert_eq!(v["atoms"].as_array().unwrap().len(), 3);
}

#[test]
fn decompose_rejects_words_without_x0() {
    let d = here();
    assert_eq!(flexperm(&["decompose", "x1"], d.path()).status.code(), Some(1));
    assert_eq!(flexperm(&["decompose", "x0^"], d.path()).status.code(), Some(1));
}

#[test]
fn trace_prints_slots_top_down() {
    let d = here();
    let o = flexperm(&["itinerary", "--word", "x0", "--f0", "0->1", "--slot", "0", "--value", "0"], d.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("t[1]=1\nt[0]=0\n"));

    let o = flexperm(&["itinerary", "--word", "x0", "--f0", "0->1", "--value", "5"], d.path());
    assert!(stdout(&o).starts_with("t[1]=c\nt[0]=5\n"));

    let o = flexperm(&["itinerary", "--word", "x0^2", "--f0", "3->4,4->3", "--value", "3"], d.path());
    assert!(stdout(&o).contains("collision at (0,2)"));

    let o = flexperm(&["itinerary", "--word", "x0", "--f0", "0->1, 0->2", "--value", "0"], d.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let d = here();
    assert_eq!(flexperm(&["frobnicate"], d.path()).status.code(), Some(1));
    assert_eq!(flexperm(&["build-family", "--count", "2"], d.path()).status.code(), Some(1));
    assert_eq!(flexperm(&["--help"], d.path()).status.code(), Some(0));
}

fn end_to_end(from: &str, to: &str, horizon: &str, family: bool) {
    let d = here();
    let mut build = vec!["build-iso", "--from", from, "--to", to, "--horizon", horizon, "--out", "iso.txt"];
    if family {
        let o = flexperm(&["build-family", "--count", "2", "--horizon", "20", "--out", "family.txt"], d.path());
        assert_eq!(o.status.code(), Some(0));
        build.extend(["--family", "family.txt"]);
    }
    let o = flexperm(&build, d.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = flexperm(&["verify-iso", "--from", from, "--to", to, "--map", "iso.txt", "--window", horizon], d.path());
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn qorder_isomorphism_verifies() {
    end_to_end("kind=qorder;scramble=", "kind=qorder;scramble=(0 3)", "50", true);
}

#[test]
fn sections_isomorphism_verifies() {
    end_to_end("kind=sections;scramble=", "kind=sections;scramble=(0 3)(1 5)", "100", false);
}

#[test]
fn corrupted_isomorphism_fails_with_counterexample() {
    let d = here();
    let from = "kind=qorder;scramble=";
    let to = "kind=qorder;scramble=(0 3)";
    let o = flexperm(&["build-iso", "--from", from, "--to", to, "--horizon", "20", "--out", "iso.txt"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(d.path().join("iso.txt")).unwrap();
    // swap the images of two points
    let map_line = text.lines().find(|l| l.starts_with("map ")).unwrap();
    let mut pairs: Vec<(u64, u64)> = map_line[4..]
        .split(',')
        .map(|p| {
            let (a, b) = p.trim().split_once("->").unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    let (b0, b1) = (pairs[0].1, pairs[1].1);
    pairs[0].1 = b1;
    pairs[1].1 = b0;
    let body: Vec<String> = pairs.iter().map(|(a, b)| format!("{a}->{b}")).collect();
    std::fs::write(d.path().join("bad.txt"), text.replace(map_line, &format!("map {}", body.join(", ")))).unwrap();

    let o = flexperm(&["verify-iso", "--map", "bad.txt", "--window", "20"], d.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).starts_with("FAIL rel< at ("), "{}", stdout(&o));
}

#[test]
fn family_and_fixpoints_are_deterministic() {
    let d = here();
    let args = ["build-family", "--count", "3", "--horizon", "25", "--out", "a.txt"];
    assert_eq!(flexperm(&args, d.path()).status.code(), Some(0));
    let args = ["build-family", "--count", "3", "--horizon", "25", "--out", "b.txt"];
    assert_eq!(flexperm(&args, d.path()).status.code(), Some(0));
    let a = std::fs::read(d.path().join("a.txt")).unwrap();
    assert_eq!(a, std::fs::read(d.path().join("b.txt")).unwrap());

    let run = || flexperm(&["fixpoints", "--family", "a.txt", "--word", "x0 x1^-1 x2", "--window", "25", "--json"], d.path());
    let (o1, o2) = (run(), run());
    assert_eq!(o1.status.code(), Some(0));
    assert_eq!(o1.stdout, o2.stdout);
    let v: serde_json::Value = serde_json::from_slice(&o1.stdout).unwrap();
    assert_eq!(v["violations"].as_array().unwrap().len(), 0);
    assert!(v["fixed_points"].as_array().unwrap().len() as u64 <= v["bound"].as_u64().unwrap());
}

#[test]
fn properness_witness_has_half_the_window() {
    let d = here();
    let o = flexperm(&["properness", "--window", "100", "--json"], d.path());
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["witness"]["fixed_points"].as_array().unwrap().len(), 50);
    assert_eq!(v["separated"], true);
}

#[test]
fn rel_evaluates_through_the_scramble() {
    let d = here();
    // q(3) = 1/2 and q(7) = 1/3
    assert_eq!(stdout(&flexperm(&["rel", "qorder", "3", "7"], d.path())), "<(3,7) = false\n");
    assert_eq!(stdout(&flexperm(&["rel", "qorder", "7", "3"], d.path())), "<(7,3) = true\n");
    let o = flexperm(&["rel", "kind=qorder;scramble=(0 3)", "0", "7"], d.path());
    assert_eq!(stdout(&o), "<(0,7) = false\n");
    assert_eq!(flexperm(&["rel", "trivial", "1", "2"], d.path()).status.code(), Some(1));
}
