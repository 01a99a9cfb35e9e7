use std::fs;
use std::path::Path;
use std::process::Command;

use hypstab::cli::{
    cmd_lmi_check, cmd_run, read_field, CustomBoundary, CustomSystem, Experiment, GridConfig, InitialData,
    LmiConfig, PotentialConfig, RunConfig, SystemMatrices, WeightChoice,
};
use hypstab::solver::Execution;
use hypstab::Error;
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hypstab"))
}

fn small(experiment: Experiment, out: &Path) -> RunConfig {
    RunConfig {
        t_end: 0.2,
        output: out.to_path_buf(),
        grid: GridConfig { dx: None, dy: None, nx: Some(12), ny: None },
        ..RunConfig::for_experiment(experiment)
    }
}

fn custom_system() -> CustomSystem {
    CustomSystem {
        matrices: SystemMatrices {
            a1: vec![vec![1.0, 0.0], vec![0.0, -1.0]],
            a2: vec![vec![0.0, 0.5], vec![0.5, 0.0]],
            b: vec![vec![0.2, 0.0], vec![0.0, 0.2]],
            labels: Some(vec!["p".into(), "q".into()]),
        },
        width: 2.0,
        height: 1.0,
        boundary: CustomBoundary::ZeroState,
        potential: Some(PotentialConfig { m: [-0.5, 0.0], c0: 0.1 }),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn run_config_round_trips(
        exp in 0usize..3,
        t_end in 0.0f64..10.0,
        cfl in 0.05f64..0.9,
        nx in proptest::option::of(1usize..500),
        rate in proptest::option::of(0.01f64..5.0),
        weight in proptest::option::of(0usize..4),
        amp in proptest::collection::vec(-3.0f64..3.0, 3),
    ) {
        let experiment = [Experiment::SaintVenant, Experiment::Diagonal, Experiment::Custom][exp];
        let cfg = RunConfig {
            experiment,
            t_end,
            cfl,
            decay_rate: rate,
            weight: weight.map(|w| [WeightChoice::Exp, WeightChoice::Linear, WeightChoice::Both, WeightChoice::Dia][w]),
            grid: match nx {
                Some(n) => GridConfig { dx: None, dy: None, nx: Some(n), ny: Some(n + 1) },
                None => GridConfig::default(),
            },
            initial: Some(InitialData::Sinusoid { amplitude: amp, kx: 1.0, ky: 0.5 }),
            custom: (experiment == Experiment::Custom).then(custom_system),
            ..RunConfig::default()
        };
        let text = cfg.to_toml().unwrap();
        prop_assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }
}

#[test]
fn runs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for exp in [Experiment::SaintVenant, Experiment::Diagonal] {
        let ra = cmd_run(&small(exp, a.path()), Execution::Parallel).unwrap();
        let rb = cmd_run(&small(exp, b.path()), Execution::Sequential).unwrap();
        assert_eq!(ra.files.len(), rb.files.len());
        for (fa, fb) in ra.files.iter().zip(&rb.files) {
            assert_eq!(fa.file_name(), fb.file_name());
            assert_eq!(fs::read(fa).unwrap(), fs::read(fb).unwrap(), "{}", fa.display());
        }
    }
}

#[test]
fn output_files_have_the_documented_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = cmd_run(&small(Experiment::SaintVenant, dir.path()), Execution::Parallel).unwrap();
    let csv = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "t,L_exp,L_lin,bound");
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(first[0], 0.0);
    assert_eq!(first[3], 1.0);
    assert_eq!(csv.lines().count(), out.times.len() + 1);

    let g = out.final_state.grid();
    for (c, label) in ["h", "w", "v"].iter().enumerate() {
        let path = dir.path().join(format!("field_{label}.txt"));
        let field = read_field(&path, g.nx, g.ny).unwrap();
        assert_eq!(field, out.final_state.component_field(c));
    }
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("experiment = saint_venant"));
    assert!(summary.contains(&format!("steps = {}", out.summary.steps)));
    assert!(summary.contains("L_exp.bound = holds"));
}

#[test]
fn zero_final_time_records_one_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { t_end: 0.0, ..small(Experiment::Diagonal, dir.path()) };
    let out = cmd_run(&cfg, Execution::Parallel).unwrap();
    assert_eq!(out.summary.steps, 0);
    assert_eq!(out.times, vec![0.0]);
    let csv = fs::read_to_string(dir.path().join("timeseries.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let summary = fs::read_to_string(dir.path().join("summary.txt")).unwrap();
    assert!(summary.contains("L.fitted_rate = n/a"));
}

#[test]
fn custom_and_table_configs_run() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = small(Experiment::Custom, &dir.path().join("first"));
    cfg.custom = Some(custom_system());
    cfg.weight = Some(WeightChoice::Both);
    let first = cmd_run(&cfg, Execution::Parallel).unwrap();
    assert_eq!(first.names, vec!["L_exp", "L_dia"]);

    // Restart from the dumped fields through a config file with relative paths.
    let g = first.final_state.grid();
    let text = format!(
        "{}\n",
        RunConfig {
            output: "second".into(),
            initial: Some(InitialData::Table { files: vec!["first/field_p.txt".into(), "first/field_q.txt".into()] }),
            grid: GridConfig { dx: None, dy: None, nx: Some(g.nx), ny: Some(g.ny) },
            t_end: 0.0,
            ..cfg.clone()
        }
        .to_toml()
        .unwrap()
    );
    let path = dir.path().join("restart.toml");
    fs::write(&path, text).unwrap();
    let mut loaded = RunConfig::load(&path).unwrap();
    loaded.output = dir.path().join("second");
    let second = cmd_run(&loaded, Execution::Parallel).unwrap();
    assert_eq!(second.final_state.component_field(0), first.final_state.component_field(0));
    assert_eq!(second.final_state.component_field(1), first.final_state.component_field(1));
}

fn config_field(err: Error) -> String {
    match err {
        Error::Config { field, .. } => field,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn config_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let base = small(Experiment::SaintVenant, dir.path());
    let bad_cfl = RunConfig { cfl: 0.0, ..base.clone() };
    assert_eq!(config_field(cmd_run(&bad_cfl, Execution::Parallel).unwrap_err()), "cfl");
    let bad_grid = RunConfig { grid: GridConfig { dx: Some(0.07), dy: None, nx: None, ny: None }, ..base.clone() };
    assert_eq!(config_field(cmd_run(&bad_grid, Execution::Parallel).unwrap_err()), "grid.dx");
    let bad_init = RunConfig { initial: Some(InitialData::Constant { value: vec![1.0] }), ..base.clone() };
    assert_eq!(config_field(cmd_run(&bad_init, Execution::Parallel).unwrap_err()), "initial.value");
    let bad_weight = RunConfig { weight: Some(WeightChoice::Linear), ..small(Experiment::Diagonal, dir.path()) };
    assert_eq!(config_field(cmd_run(&bad_weight, Execution::Parallel).unwrap_err()), "weight");
    assert!(matches!(RunConfig::from_toml("bogus = 1"), Err(Error::Config { .. })));
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const SSC_OK: &str = r#"
n = 2
r = 1
alpha = [1.0, 0.0]
a1 = [[-1.0]]
a2 = [[0.0]]
b1 = [[0.0]]
b2 = [[0.0]]
c1 = [[0.0]]
c2 = [[0.0]]
d1 = [[0.0]]
d2 = [[0.0]]
e = [[1.0]]
x1 = [[1.0]]
x2 = [[1.0]]
"#;

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ssc = write(dir.path(), "ssc.toml", SSC_OK);

    let ok = bin().args(["construct", &ssc, "--rate", "0.5"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let text = String::from_utf8(ok.stdout).unwrap();
    assert!(text.contains("feasible = true"), "{text}");

    let infeasible = bin().args(["construct", &ssc, "--rate", "3"]).output().unwrap();
    assert_eq!(infeasible.status.code(), Some(4));

    let bad = write(dir.path(), "bad.toml", "t_end = -1\n");
    let cfg_err = bin().args(["run", "--config", &bad]).output().unwrap();
    assert_eq!(cfg_err.status.code(), Some(2));
    assert!(String::from_utf8(cfg_err.stderr).unwrap().contains("t_end"));

    let out = dir.path().join("out");
    let run = bin()
        .args(["run", "diagonal", "--dx", "0.1", "--t-end", "0.1", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8(run.stdout).unwrap().contains("experiment = diagonal"));
    assert!(out.join("timeseries.csv").exists());

    let lmi = bin().args(["lmi-check", "--rate", "1.4"]).output().unwrap();
    assert_eq!(lmi.status.code(), Some(0));
    let text = String::from_utf8(lmi.stdout).unwrap();
    assert!(text.contains("feasible = true") && text.contains("chi = 12"), "{text}");
    let lmi = bin().args(["lmi-check", "--rate", "1.6"]).output().unwrap();
    assert_eq!(lmi.status.code(), Some(0));
    assert!(String::from_utf8(lmi.stdout).unwrap().contains("feasible = false"));

    let conv = bin().args(["convergence", "--cells", "20,40"]).output().unwrap();
    assert_eq!(conv.status.code(), Some(0));
    assert_eq!(String::from_utf8(conv.stdout).unwrap().lines().count(), 3);

    assert_eq!(bin().args(["run", "nonsense"]).output().unwrap().status.code(), Some(2));
}

#[test]
fn lmi_check_on_a_custom_system() {
    let cfg = LmiConfig::from_toml(
        "decay_rate = 0.1\nm = [-1.0, 0.0]\nchi = 1.0\n[system]\na1 = [[1.0]]\na2 = [[0.0]]\nb = [[0.0]]\n",
    )
    .unwrap();
    let report = cmd_lmi_check(&cfg).unwrap();
    // 0.1 - 0 - 1 = -0.9
    assert!((report.verdict.lambda_max + 0.9).abs() < 1e-15);
    assert!(report.verdict.feasible);
    assert!(report.to_string().contains("system = custom"));
}
