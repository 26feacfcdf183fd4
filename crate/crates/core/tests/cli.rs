use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_snpdelay"))
}

fn fixture_path(name: &str) -> String {
    format!("{}/fixtures/{name}.snp", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli");
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn simulate_walkthrough_verbose() {
    let o = run(&["simulate", &fixture_path("walkthrough"), "--horizon", "6", "--verbose"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let configs: Vec<&str> = text.lines().filter(|l| l.starts_with("config")).take(5).collect();
    assert_eq!(
        configs,
        [
            "config t=0 5/0 0/0 0/0",
            "config t=1 4/2 0/0 0/0",
            "config t=2 4/1 0/0 0/0",
            "config t=3 4/0 1/0 0/0",
            "config t=4 3/2 0/0 1/0",
        ]
    );
}

#[test]
fn simulate_iteration_does_not_halt() {
    let o = run(&["simulate", "fixture:iter1", "--horizon", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("halted=false"));
}

#[test]
fn simulate_records_are_json_lines() {
    let o = run(&["simulate", "fixture:seq1", "--format", "records"]);
    for line in stdout(&o).lines() {
        serde_json::from_str::<serde_json::Value>(line).unwrap();
    }
}

#[test]
fn bad_file_exits_one() {
    let p = scratch("bad.snp");
    std::fs::write(&p, "neuron s1\nsynapse s1 -> s9\n").unwrap();
    let o = run(&["simulate", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("s9"));
    assert_eq!(run(&["simulate", "/no/such/file.snp"]).status.code(), Some(1));
}

#[test]
fn transform_then_check_round_trip() {
    let out = scratch("join_junction.out.snp");
    let o = run(&["transform", &fixture_path("join_junction"), "--set", "d=3", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc = std::fs::read_to_string(&out).unwrap();
    assert!(doc.contains("rule \"a^2 -> a\""), "{doc}");
    assert!(!doc.contains("; "), "delays left in {doc}");
    let sidecar = format!("{}.report.json", out.display());
    let c =
        run(&["check", &fixture_path("join_junction"), out.to_str().unwrap(), "--set", "d=3", "--expect", &sidecar]);
    assert_eq!(c.status.code(), Some(0), "{}", stdout(&c));
    assert!(stdout(&c).starts_with("ACCEPT k=0"));
}

#[test]
fn increasing_delays_exit_three() {
    let o = run(&["transform", "fixture:seq2", "--set", "d1=1", "--set", "d2=3"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("open problem"));
}

#[test]
fn delay_free_transform_is_identity() {
    let o = run(&["transform", "fixture:fig1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no rewrites"));
    let original = snp_core::fixtures::load("fig1", &[]).unwrap();
    assert_eq!(snp_core::parse_system(&stdout(&o)).unwrap(), original);
}

#[test]
fn check_rejects_corrupted_gate() {
    let out = scratch("seq1.out.snp");
    assert_eq!(run(&["transform", "fixture:seq1", "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let doc = std::fs::read_to_string(&out).unwrap().replace("rule \"a^3 -> a\"", "rule \"a^2 -> a\"");
    let bad = scratch("seq1.bad.snp");
    std::fs::write(&bad, doc).unwrap();
    let sidecar = format!("{}.report.json", out.display());
    let c = run(&["check", "fixture:seq1", bad.to_str().unwrap(), "--expect", &sidecar]);
    assert_eq!(c.status.code(), Some(4));
    let text = stdout(&c);
    assert!(text.starts_with("REJECT"));
    assert!(text.contains("first divergence at step"));
}

#[test]
fn export_dot_fig1() {
    let o = run(&["export-dot", "fixture:fig1"]);
    let text = stdout(&o);
    assert_eq!(text.matches("[label=").count(), 5);
    assert_eq!(text.matches("\" -> \"").count(), 5);
}

#[test]
fn export_dot_transformed_shows_loaded_reservoir() {
    let out = scratch("seq1_d3.out.snp");
    run(&["transform", "fixture:seq1", "--set", "d=3", "--out", out.to_str().unwrap()]);
    let text = stdout(&run(&["export-dot", out.to_str().unwrap()]));
    assert!(text.contains("spikes=4"));
}

#[test]
fn classify_and_matrix() {
    let text = stdout(&run(&["classify", "fixture:fig1"]));
    assert!(text.contains("Split(s1; {s2, s3})"));
    assert!(text.contains("Join({s2, s3}; s4; s5)"));
    let m = run(&["matrix", "fixture:fig1"]);
    assert_eq!(m.status.code(), Some(0));
    assert!(stdout(&m).contains("t=0 [1 0 0 0 0]"));
    assert_eq!(run(&["matrix", "fixture:seq1"]).status.code(), Some(2));
}

#[test]
fn sweep_is_ordered() {
    let o = run(&["sweep", "fixture:split_child"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    for (i, l) in lines.iter().enumerate() {
        assert!(l.starts_with(&format!("d={} ACCEPT", i + 1)), "{l}");
    }
}

#[test]
fn only_flag_limits_rewriters() {
    let o = run(&["transform", "fixture:seq1", "--only", "split"]);
    assert_eq!(o.status.code(), Some(3));
    let o = run(&["transform", "fixture:seq1", "--only", "bogus"]);
    assert_eq!(o.status.code(), Some(3));
}
