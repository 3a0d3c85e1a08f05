use std::io::Write;
use std::process::{Command, Output, Stdio};

fn qperc(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_qperc"))
        .args(args)
        .env_remove("QPERC_SEED")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    let mut input = child.stdin.take().unwrap();
    input.write_all(stdin.unwrap_or("").as_bytes()).unwrap();
    drop(input);
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn generate_pipes_into_degree_stats() {
    let g = qperc(&["generate", "--family", "ws", "--n", "10", "--k", "4", "--beta", "0"], None);
    assert!(g.status.success());
    let s = qperc(&["degree-stats"], Some(&stdout(&g)));
    assert!(s.status.success());
    let text = stdout(&s);
    assert!(text.contains("\nk,count\n4,10\n"), "{text}");
    assert!(text.contains("10,20,4.000000,16.000000,0.333333"), "{text}");
}

#[test]
fn same_seed_same_bytes() {
    let args = ["--seed", "5", "generate", "--family", "kleinberg", "--side", "6"];
    assert_eq!(qperc(&args, None).stdout, qperc(&args, None).stdout);
    let env = |seed: &str| {
        Command::new(env!("CARGO_BIN_EXE_qperc"))
            .args(["generate", "--family", "er", "--n", "50", "--k", "4"])
            .env("QPERC_SEED", seed)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(env("5"), env("5"));
    assert_ne!(env("5"), env("6"));
}

#[test]
fn pipeline_sweep_and_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let graph = dir.path().join("g.txt");
    let swapped = dir.path().join("h.txt");
    let curve = dir.path().join("c.csv");
    let path = |p: &std::path::Path| p.to_str().unwrap().to_owned();
    let g = qperc(&["generate", "--family", "ws", "--n", "300", "--k", "6", "-o", &path(&graph)], None);
    assert!(g.status.success());
    let p = qperc(&["preprocess", "--op", "qswap", "--q", "6", "-i", &path(&graph), "-o", &path(&swapped)], None);
    assert!(p.status.success());
    let report = stdout(&p);
    let mut lines = report.lines();
    assert_eq!(lines.next(), Some("centers_swapped,edges_consumed,edges_created,nodes_isolated"));
    let fields: Vec<usize> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(fields[1], 6 * fields[0]);
    let s = qperc(&["sweep", "--step", "0.05", "--trials", "20", "-i", &path(&swapped), "-o", &path(&curve)], None);
    assert!(s.status.success());
    let csv = std::fs::read_to_string(&curve).unwrap();
    assert!(csv.starts_with("p,gcc_mean,gcc_std,trials\n0.000000,"));
    assert_eq!(csv.lines().count(), 22);
    let manifest = std::fs::read_to_string(dir.path().join("c.csv.manifest.jsonl")).unwrap();
    let m: serde_json::Value = serde_json::from_str(manifest.lines().next().unwrap()).unwrap();
    assert_eq!(m["subcommand"], "sweep");
    assert_eq!(m["params"]["trials"], 20);
    let t = qperc(&["threshold", "-i", &path(&curve)], None);
    assert!(t.status.success());
    let out = stdout(&t);
    assert!(out.starts_with("method,threshold\ngcc-crossing,0."), "{out}");
    assert!(out.contains("susceptibility-peak,"));
}

#[test]
fn threshold_reports_missing_crossing() {
    let flat = "p,gcc_mean,gcc_std,trials\n0.000000,0.000000,0.000000,10\n1.000000,0.010000,0.000000,10\n";
    let t = qperc(&["threshold", "--method", "crossing"], Some(flat));
    assert!(t.status.success());
    assert_eq!(stdout(&t), "method,threshold\ngcc-crossing,none\n");
}

#[test]
fn walk_verify_certifies() {
    let ok = qperc(&["walk-verify", "--a", "0.6", "--b", "-0.8"], None);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(stdout(&ok).contains(",2 3,1 3 4,2,"));
}

#[test]
fn exit_codes_by_failure_class() {
    assert_eq!(qperc(&["generate", "--family", "ws", "--n", "10"], None).status.code(), Some(2));
    assert_eq!(qperc(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(qperc(&["reproduce", "fig99"], None).status.code(), Some(2));
    assert_eq!(qperc(&["degree-stats"], Some("not a graph\n")).status.code(), Some(3));
    assert_eq!(qperc(&["threshold"], Some("p,x\n")).status.code(), Some(3));
    assert_eq!(qperc(&["degree-stats", "-i", "/nonexistent/graph"], None).status.code(), Some(5));
    assert_eq!(qperc(&["walk-verify", "--a", "0", "--b", "0"], None).status.code(), Some(2));
}

#[test]
fn reproduce_writes_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig9");
    let r = qperc(
        &["--seed", "3", "reproduce", "fig9", "--realizations", "2", "--out", out.to_str().unwrap()],
        None,
    );
    assert!(matches!(r.status.code(), Some(0) | Some(4)));
    for name in ["fig9_kleinberg_cep_degrees.csv", "fig9_kleinberg_qep_degrees.csv", "fig9_thresholds.csv", "fig9_claims.csv"] {
        assert!(out.join(name).exists(), "{name}");
    }
    let manifest = std::fs::read_to_string(out.join("manifest.jsonl")).unwrap();
    let m: serde_json::Value = serde_json::from_str(manifest.trim()).unwrap();
    assert_eq!(m["params"]["lambda1"], 0.75);
    assert_eq!(m["params"]["realizations"], 2);
    assert_eq!(m["seed"], 3);
    assert_eq!(r.status.code() == Some(0), stdout(&r).lines().all(|l| !l.starts_with("FAIL")));
}
