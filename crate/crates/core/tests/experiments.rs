use std::fs;

use regmcts_core::experiments::{
    cmd_bound, cmd_props, cmd_solve, cmd_sweep, cmd_track, write_csv, EnvKind, ExperimentKind,
    RunConfig, SolveRequest,
};
use regmcts_core::simplex::DivergenceKind;

fn small(text: &str) -> RunConfig {
    RunConfig::from_toml(text).unwrap()
}

#[test]
fn config_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(
        &path,
        "experiment = \"track\"\nseeds = [3, 4]\nn_sim = 25\nselection = \"prior_uct\"\n",
    )
    .unwrap();
    let config = RunConfig::load(&path).unwrap();
    assert_eq!(config.seeds, vec![3, 4]);
    assert_eq!(config.n_sim, 25);
    assert!(config.check_experiment(ExperimentKind::Track).is_ok());
    assert!(config.check_experiment(ExperimentKind::Sweep).is_err());

    fs::write(&path, "n_sim = \"many\"\n").unwrap();
    assert!(RunConfig::load(&path).is_err());
    assert!(RunConfig::load(&dir.path().join("missing.toml")).is_err());
}

#[test]
fn every_command_ignores_worker_count() {
    let base = small("seeds = [0, 1, 2]\nn_sim = 60\nhorizon = 300\ninstances = 400\nn_sims = [3]\nepisodes = 6\nchain_length = 5\n");
    let with = |workers| RunConfig {
        workers: Some(workers),
        ..base.clone()
    };
    assert_eq!(cmd_track(&with(1)).unwrap(), cmd_track(&with(3)).unwrap());
    assert_eq!(cmd_bound(&with(1)).unwrap(), cmd_bound(&with(3)).unwrap());
    assert_eq!(
        cmd_props(&with(1)).unwrap().rows,
        cmd_props(&with(3)).unwrap().rows
    );
    assert_eq!(cmd_sweep(&with(1)).unwrap(), cmd_sweep(&with(3)).unwrap());
}

#[test]
fn csv_files_carry_headers() {
    let dir = tempfile::tempdir().unwrap();
    let config = small("seeds = [1]\nn_sim = 4\n");
    let path = dir.path().join("track.csv");
    write_csv(Some(&path), &cmd_track(&config).unwrap()).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("seed,step,l1_pibar,linf_pibar,l1_greedy,linf_greedy")
    );
    assert_eq!(lines.count(), 4);

    let config = small(
        "seeds = [0]\nn_sims = [2]\nepisodes = 3\nvariants = [\"baseline\"]\nchain_length = 4\n",
    );
    let path = dir.path().join("sweep.csv");
    write_csv(Some(&path), &cmd_sweep(&config).unwrap()).unwrap();
    let text = fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("variant,n_sim,seed,episode,return\n"));
    assert_eq!(text.lines().count(), 4);
}

#[test]
fn bound_rows_cover_all_scenarios() {
    let config = small("seeds = [0]\nhorizon = 2000\n");
    let rows = cmd_bound(&config).unwrap();
    assert_eq!(rows.len(), 4 * 4);
    assert!(rows.iter().all(|r| !r.failed()), "{rows:?}");
    for row in rows
        .iter()
        .filter(|r| r.scenario == "uniform" || r.scenario == "random")
    {
        assert_eq!(row.bound_violations, 0);
        assert!(row.statistic <= 1.0);
    }
}

#[test]
fn props_pass_on_a_small_run() {
    let report = cmd_props(&small("seeds = [5]\ninstances = 2000\n")).unwrap();
    assert_eq!(report.rows.len(), 11);
    assert!(report.all_passed(), "{:?}", report.failures);
}

#[test]
fn sweep_supports_every_environment() {
    for env in [EnvKind::Bandit, EnvKind::Chain, EnvKind::FactorizedBandit] {
        let config = RunConfig {
            env,
            seeds: vec![0],
            n_sims: vec![4],
            episodes: 3,
            chain_length: 4,
            dims: 2,
            bins: 3,
            ..RunConfig::default()
        };
        let rows = cmd_sweep(&config).unwrap();
        assert_eq!(rows.len(), 5 * 3, "{env:?}");
    }
}

#[test]
fn solve_reports_the_two_action_case() {
    let report = cmd_solve(&SolveRequest {
        q: vec![1.0, 0.0],
        prior: None,
        lambda: Some(1.0),
        counts: None,
        kind: DivergenceKind::ReverseKl,
        c: 1.25,
    })
    .unwrap();
    assert!((report.alpha.unwrap() - (1.0 + std::f64::consts::SQRT_2 / 2.0)).abs() < 1e-9);
    assert!(report.kkt_residual.unwrap() < 1e-9);

    let by_counts = cmd_solve(&SolveRequest {
        q: vec![0.2, 0.9, 0.4],
        prior: Some(vec![0.5, 0.25, 0.25]),
        lambda: None,
        counts: Some(vec![3, 5, 2]),
        kind: DivergenceKind::Hellinger,
        c: 1.0,
    })
    .unwrap();
    assert!(by_counts.lambda > 0.0);
    assert!(cmd_solve(&SolveRequest {
        q: vec![0.0],
        prior: None,
        lambda: Some(1.0),
        counts: Some(vec![1]),
        kind: DivergenceKind::ReverseKl,
        c: 1.0,
    })
    .is_err());
}
