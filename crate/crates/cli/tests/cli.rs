use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const FOUR_ARM: &str = r#"
[instance]
family = "gaussian"
means = [2.5, 2.3, 2.0, 0.6]
sigma = 1.0

[contamination]
epsilon = 0.1
adversary = "fixed_shift"
shift = 5.0

[policy]
name = "secbai"
delta = 0.1

[run]
n_trials = 20
master_seed = 3
"#;

const TWO_ARM: &str = r#"
[instance]
family = "gaussian"
means = [1.0, 0.0]

[policy]
name = "gcbai"
delta = 0.1

[run]
n_trials = 10
"#;

fn cbai(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cbai"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

#[test]
fn run_prints_header_and_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", FOUR_ARM);
    let o = cbai(&["run", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("# cbai run\n"));
    assert!(out.contains("# means = [2.5, 2.3, 2.0, 0.6]"));
    let rows = data_lines(&out);
    assert_eq!(
        rows[0],
        "param,policy,mean_tau,std_tau,stderr_tau,error_rate,n_trials,truncated"
    );
    assert!(rows[1].starts_with("0.1,secbai,"), "{}", rows[1]);
    assert!(rows[1].ends_with(",20,0"));
}

#[test]
fn run_is_byte_reproducible_and_overrides_land_in_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", FOUR_ARM);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let trace = dir.path().join("t.jsonl");
    let common = [
        cfg.to_str().unwrap(),
        "--delta",
        "0.2",
        "--trials",
        "12",
        "--policy",
        "median_se",
    ];
    let o1 = cbai(
        &[
            &["run"][..],
            &common,
            &["--out", a.to_str().unwrap(), "--workers", "1"],
        ]
        .concat(),
    );
    let o2 = cbai(
        &[
            &["run"][..],
            &common,
            &[
                "--out",
                b.to_str().unwrap(),
                "--workers",
                "3",
                "--trace",
                trace.to_str().unwrap(),
            ],
        ]
        .concat(),
    );
    assert!(o1.status.success() && o2.status.success());
    let (a, b) = (
        std::fs::read_to_string(a).unwrap(),
        std::fs::read_to_string(b).unwrap(),
    );
    assert_eq!(a, b);
    assert!(!a.contains("workers") && !a.contains("output"));
    assert!(a.contains("# delta = 0.2"));
    assert!(a.contains("# name = \"median_se\""));
    assert!(data_lines(&a)[1].starts_with("0.2,median_se,"));
    let trace = std::fs::read_to_string(trace).unwrap();
    assert_eq!(trace.lines().count(), 12);
    assert!(trace.starts_with("{\"trial\":0,"));
}

#[test]
fn sweep_sorts_grid() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", FOUR_ARM);
    let o = cbai(&[
        "sweep",
        cfg.to_str().unwrap(),
        "--param",
        "epsilon",
        "--grid",
        "0.15,0.05",
        "--trials",
        "5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("# cbai sweep param=epsilon grid=0.05,0.15\n"));
    let rows = data_lines(&out);
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("0.05,secbai,"));
    assert!(rows[2].starts_with("0.15,secbai,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", FOUR_ARM);
    let cfg = cfg.to_str().unwrap();

    let missing = cbai(&["run", "/nonexistent/x.toml"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(stderr(&missing).starts_with("error: code=2 kind=io msg="));

    let eps = cbai(&["run", cfg, "--epsilon", "0.6"]);
    assert_eq!(eps.status.code(), Some(3));
    let line = stderr(&eps);
    assert!(
        line.starts_with("error: code=3 kind=config msg=\""),
        "{line}"
    );
    assert_eq!(line.lines().count(), 1);

    let bad = write(
        dir.path(),
        "bad.toml",
        &FOUR_ARM.replace("sigma = 1.0", "sigma = 1.0\ncolour = 1"),
    );
    assert_eq!(cbai(&["run", bad.to_str().unwrap()]).status.code(), Some(3));

    let tied = write(
        dir.path(),
        "tied.toml",
        &FOUR_ARM.replace("2.3, 2.0", "2.5, 2.0"),
    );
    assert_eq!(
        cbai(&["run", tied.to_str().unwrap()]).status.code(),
        Some(3)
    );
    assert_eq!(
        cbai(&["complexity", tied.to_str().unwrap()]).status.code(),
        Some(4)
    );

    assert_eq!(cbai(&["run", cfg, "--delta", "1.5"]).status.code(), Some(3));
    assert_eq!(cbai(&["run", cfg, "--bogus"]).status.code(), Some(64));
    assert_eq!(
        cbai(&["run", cfg, "--policy", "ucb"]).status.code(),
        Some(64)
    );
    assert_eq!(cbai(&["--help"]).status.code(), Some(0));
}

#[test]
fn truncation_warns_but_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        &FOUR_ARM.replace("master_seed = 3", "master_seed = 3\nmax_rounds = 100"),
    );
    let o = cbai(&["run", cfg.to_str().unwrap(), "--trials", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning: 3 of 3 trials hit max_rounds=100"));
    assert!(data_lines(&stdout(&o))[1].ends_with(",3,3"));
}

#[test]
fn complexity_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", FOUR_ARM);
    let o = cbai(&["complexity", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("H = sum_i (sqrt(2) sigma / max(Delta_i, Delta_b*))^2 = 108.554\n"));
    assert!(out.contains("gcbai_upper_slope = max{8K/eps^2, 64 beta H} = 13894.9\n"));
    assert!(out.contains("secbai_upper_constant = unspecified"));
    assert!(out.contains("0,2.5,0,0,0.2,true\n1,2.3,0,0.2,0.2,false\n"));
    assert!(!out.contains("only valid for eps > 0"));

    let clean = write(dir.path(), "clean.toml", TWO_ARM);
    let o = cbai(&["complexity", clean.to_str().unwrap()]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("max(Delta_i, Delta_b*))^2 = 4\n"));
    assert!(out.contains("64 beta H} = inf"));
    assert!(out.contains("only valid for eps > 0"));

    // Contamination large enough to close the gaps.
    let o = cbai(&["complexity", cfg.to_str().unwrap(), "--epsilon", "0.3"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stdout(&o).contains("lower_slope_contaminated = infeasible"));
    assert!(stderr(&o).starts_with("error: code=4 kind=infeasible"));
}

#[test]
fn trial_trace_lines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", TWO_ARM);
    let o = cbai(&["trial-trace", cfg.to_str().unwrap(), "--trial", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rounds = data_lines(&out);
    assert!(!rounds.is_empty());
    assert!(rounds[0].starts_with("{\"t\":1,\"arm\":"));
    assert!(rounds[0].contains("\"contaminated\":false"));
    let last = out.lines().last().unwrap();
    assert!(last.starts_with("# result {\"trial\":2,"), "{last}");
    assert!(last.contains(&format!("\"tau\":{}", rounds.len())));
}

#[test]
fn ingest_writes_runnable_config() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "r.csv",
        "caption,rating\nA,3\nB,1\nA,3\nA,2\nB,1\n",
    );
    let toml = dir.path().join("i.toml");
    let o = cbai(&[
        "ingest",
        "--kind",
        "ratings",
        csv.to_str().unwrap(),
        "--out",
        toml.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&toml).unwrap();
    assert!(text.contains("# arm 0: A\n# arm 1: B\n"));
    assert!(text.contains("means = [2.6666666666666665, 1.0]"), "{text}");
    let o = cbai(&["complexity", toml.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));

    let csv = write(dir.path(), "p.csv", "c1,0\nc2,50\nc3,100\n");
    let o = cbai(&["ingest", "--kind", "pkis2", csv.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("means = [0.0, -0.6931471805599453, -13.815510557964274]"));

    let empty = write(dir.path(), "e.csv", "A,3\nB,\n");
    let o = cbai(&["ingest", "--kind", "ratings", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(5));
    assert!(stderr(&o).contains("\\\"B\\\""), "{}", stderr(&o));
}

#[test]
fn shipped_configs_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let p = path.to_str().unwrap();
            let o = cbai(&["run", p, "--trials", "2"]);
            assert!(o.status.success(), "{p}: {}", stderr(&o));
            let c = cbai(&["complexity", p]).status.code();
            assert!(matches!(c, Some(0) | Some(4)), "{p}: {c:?}");
            seen += 1;
        }
    }
    assert!(seen >= 4);
}
