use cbai_core::harness::{run_trial_traced, CSV_HEADER};
use cbai_core::{
    run_experiment, run_trial, sweep, CbaiError, ExperimentConfig, PolicyKind, SweepParam,
};

const FOUR_ARM: &str = r#"
[instance]
family = "gaussian"
means = [2.5, 2.3, 2.0, 0.6]

[contamination]
epsilon = 0.1
adversary = "fixed_shift"
shift = 5.0

[policy]
name = "secbai"
delta = 0.1

[run]
n_trials = 16
master_seed = 11
"#;

fn config(kind: PolicyKind) -> ExperimentConfig {
    ExperimentConfig::from_toml(FOUR_ARM)
        .unwrap()
        .with_policy(kind)
        .unwrap()
}

#[test]
fn trial_replays_exactly() {
    for kind in [
        PolicyKind::Gcbai,
        PolicyKind::RandomGap,
        PolicyKind::MedianSe,
    ] {
        let c = config(kind);
        let mut a = run_trial(&c, 5).unwrap();
        let mut b = run_trial(&c, 5).unwrap();
        a.wall_time = Default::default();
        b.wall_time = Default::default();
        assert_eq!(a, b, "{kind}");
        assert_eq!(a.tau, a.counts.iter().sum::<u64>());
    }
}

#[test]
fn trace_matches_trial() {
    let c = config(PolicyKind::Gcbai);
    let mut rounds = Vec::new();
    let traced = run_trial_traced(&c, 3, |r| rounds.push((r.t, r.arm, r.contaminated))).unwrap();
    assert_eq!(rounds.len() as u64, traced.tau);
    assert!(rounds.iter().enumerate().all(|(i, r)| r.0 == i as u64 + 1));
    let mut counts = vec![0u64; 4];
    for r in &rounds {
        counts[r.1] += 1;
    }
    assert_eq!(counts, traced.counts);
    // Roughly an epsilon share of rewards are adversarial.
    let share = rounds.iter().filter(|r| r.2).count() as f64 / rounds.len() as f64;
    assert!((share - 0.1).abs() < 0.02, "{share}");
}

#[test]
fn doubling_trials_keeps_prefix() {
    let c = config(PolicyKind::Secbai);
    let small = run_experiment(&c.with_trials(8).unwrap()).unwrap();
    let large = run_experiment(&c.with_trials(16).unwrap()).unwrap();
    for (a, b) in small.trials.iter().zip(&large.trials) {
        assert_eq!(a.record().tau, b.record().tau);
        assert_eq!(a.recommended, b.recommended);
        assert_eq!(a.counts, b.counts);
    }
    assert_eq!(
        small.trace_jsonl(),
        large
            .trace_jsonl()
            .lines()
            .take(8)
            .map(|l| format!("{l}\n"))
            .collect::<String>()
    );
}

#[test]
fn seed_changes_results() {
    let c = config(PolicyKind::Secbai);
    let mut spec = c.spec.clone();
    spec.run.master_seed += 1;
    let other = ExperimentConfig::from_spec(spec).unwrap();
    let a = run_experiment(&c).unwrap();
    let b = run_experiment(&other).unwrap();
    assert_ne!(a.trace_jsonl(), b.trace_jsonl());
}

#[test]
fn sweep_rows_and_errors() {
    let c = config(PolicyKind::Secbai).with_trials(4).unwrap();
    let one = sweep(&c, SweepParam::Delta, &[0.2]).unwrap();
    assert_eq!(one.rows.len(), 1);
    let csv = one.to_csv("note");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# note"));
    assert_eq!(lines.next(), Some(CSV_HEADER));
    assert!(lines.next().unwrap().starts_with("0.2,secbai,"));

    assert!(matches!(
        sweep(&c, SweepParam::Delta, &[]),
        Err(CbaiError::Argument(_))
    ));
    assert!(sweep(&c, SweepParam::Delta, &[0.1, 1.5]).is_err());
    assert!(sweep(&c, SweepParam::Epsilon, &[0.6]).is_err());

    let eps = sweep(&c, SweepParam::Epsilon, &[0.2, 0.05]).unwrap();
    assert_eq!(eps.rows[0].value, 0.05);
    assert_eq!(eps.rows[1].value, 0.2);
}

#[test]
fn single_arm_instances() {
    let text = r#"
[instance]
family = "gaussian"
means = [1.0]

[contamination]
epsilon = 0.1
adversary = "fixed_shift"
shift = 1.0

[policy]
name = "secbai"
delta = 0.1

[run]
n_trials = 3
"#;
    let se = ExperimentConfig::from_toml(text).unwrap();
    let r = run_experiment(&se).unwrap();
    assert!(r.trials.iter().all(|t| t.tau == 0 && t.correct));
    let gap = se.with_policy(PolicyKind::Gcbai).unwrap();
    let r = run_experiment(&gap).unwrap();
    // ceil(T(0.05, 0.1)) pulls of the only arm.
    assert!(r.trials.iter().all(|t| t.tau == 1843 && t.correct));
}

#[test]
fn other_families_run() {
    let bern = r#"
[instance]
family = "bernoulli"
p = [0.9, 0.2]

[policy]
name = "secbai"
delta = 0.1

[run]
n_trials = 20
"#;
    let agg = run_experiment(&ExperimentConfig::from_toml(bern).unwrap())
        .unwrap()
        .aggregate;
    assert_eq!(agg.truncated, 0);
    assert!(agg.error_rate <= 0.1);

    let expo = r#"
[instance]
family = "exponential"
means = [4.0, 1.0, 1.0, 1.0]

[policy]
name = "gcbai"
delta = 0.1

[run]
n_trials = 20
"#;
    let agg = run_experiment(&ExperimentConfig::from_toml(expo).unwrap())
        .unwrap()
        .aggregate;
    assert_eq!(agg.truncated, 0);
    assert!(agg.error_rate <= 0.1);
}
