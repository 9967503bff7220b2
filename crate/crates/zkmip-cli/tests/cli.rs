use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> &'static str {
    let p = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../zkmip/fixtures").join(name);
    Box::leak(p.to_string_lossy().into_owned().into_boxed_str())
}

fn golden(name: &str) -> String {
    fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zkmip")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("zkmip-cli-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn robustify_matches_the_golden_files() {
    let out = scratch("robust.zkp", "");
    let o = run(&["robustify", fixture("tiny.zkp"), "--code", "steane:1", "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text, golden("tiny_steane1.zkp"));
    assert!(text.contains("PHASE RESOURCE") && text.contains("PHASE DECODE"));
    let side = fs::read_to_string(format!("{}.phases", s(&out))).unwrap();
    assert_eq!(side, golden("tiny_steane1.zkp.phases"));
}

#[test]
fn trivial_code_without_padding_only_adds_empty_phases() {
    let o = run(&["robustify", fixture("tiny.zkp"), "--code", "trivial", "--padding", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let circuit: Vec<&str> = out
        .lines()
        .take_while(|l| !l.starts_with('#'))
        .filter(|l| *l != "PHASE RESOURCE" && *l != "PHASE DECODE")
        .collect();
    let source = fs::read_to_string(fixture("tiny.zkp")).unwrap();
    let want: Vec<&str> = source.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).collect();
    assert_eq!(circuit, want);
}

#[test]
fn bad_gate_label_exits_with_two_and_a_line_number() {
    let bad = scratch("bad.zkp", "CIRCUIT n=1 m=1 k=1\nPHASE VOP1\nFOO v1\n");
    let o = run(&["robustify", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn unknown_flag_and_code_are_usage_errors() {
    assert_eq!(run(&["robustify", "--frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["robustify", fixture("tiny.zkp"), "--code", "golay"]).status.code(), Some(2));
}

#[test]
fn toffoli_needs_a_large_enough_distance() {
    let c = scratch(
        "toffoli.zkp",
        "CIRCUIT n=3 m=1 k=1\nPHASE VOP1\nTOFFOLI v1 v2 v3\nPHASE COPYQ\nCNOT n1.1 m1.1\nPHASE PROVER\nPROVER 1 1\nPHASE COPYA\nCNOT m1.1 n1.1\n",
    );
    let o = run(&["robustify", s(&c), "--code", "steane:1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("budget"));
}

#[test]
fn seeded_run_matches_the_golden_transcript() {
    let args = ["simulate", fixture("tiny.zkp"), fixture("tiny.referee"), "--seed", "7"];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(stdout(&a), golden("tiny_seed7.transcript"));
    assert_eq!(stdout(&a), stdout(&run(&args)));
}

#[test]
fn empty_script_gives_two_lines() {
    let empty = scratch("empty.referee", "# nothing\n");
    let o = run(&["simulate", fixture("tiny.zkp"), s(&empty), "--code", "trivial", "--seed", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "TRANSCRIPT input=tiny seed=3\nHALT\n");
}

#[test]
fn reusing_a_player_aborts_with_exit_zero() {
    let reuse = scratch("reuse.referee", "ASK PP1: STAR\nASK PP1: QF\n");
    let o = run(&["simulate", fixture("tiny.zkp"), s(&reuse), "--code", "trivial"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).ends_with("ABORT player PP1 asked twice\n"));
}

#[test]
fn honest_players_answer_the_star_question() {
    let star = scratch("star.referee", "ASK PP1: STAR\n");
    let o = run(&[
        "simulate",
        fixture("tiny.zkp"),
        s(&star),
        "--code",
        "trivial",
        "--honest",
        fixture("tiny_honest.strategy"),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("ROUND 1 | PLAYERS PP1"));
}

#[test]
fn flipped_generator_fails_the_codeword_trace_check() {
    let o = run(&["verify", "--only", "1,3", "--flip-generator", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let out = stdout(&o);
    assert!(out.lines().next().unwrap().starts_with("FAIL  1 codeword-trace"), "{out}");
    assert!(out.lines().nth(1).unwrap().starts_with("PASS  3"));
}

#[test]
fn float_mode_deviations_are_small() {
    let o = run(&["verify", "--only", "1,2,3,4,9,10", "--float"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    for line in stdout(&o).lines() {
        let dev: f64 = line.split("max_dev=").nth(1).unwrap().split_whitespace().next().unwrap().parse().unwrap();
        assert!(dev <= 1e-9, "{line}");
    }
}

#[test]
fn trace_prints_the_star_coin() {
    let o = run(&["trace", fixture("tiny.zkp"), "--code", "trivial", "--question", "PP1: STAR"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.starts_with("DENSITY T=17 denom=18"));
    assert!(out.contains("ANSWERS PP1\n0 9/18\n1 9/18\n"), "{out}");
}

#[test]
fn trace_snapshot_of_a_hidden_register_is_maximally_mixed() {
    let o = run(&["trace", fixture("tiny.zkp"), "--registers", "v1", "-t", "40"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "SNAPSHOT t=40 registers=V1\n1/r2^2  0\n0  1/r2^2\n");
    assert_eq!(run(&["trace", fixture("tiny.zkp"), "--registers", "x9"]).status.code(), Some(2));
}
