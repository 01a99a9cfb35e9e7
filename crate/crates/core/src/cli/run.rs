use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::monitor::{check_decay_bound_from, fit_decay, DecaySeries, LyapunovRecorder};
use crate::solver::{Execution, GridState, RunSummary, Solver};

use super::config::RunConfig;

/// Artifacts and numbers of a finished run.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub summary: RunSummary,
    pub names: Vec<String>,
    pub times: Vec<f64>,
    /// One series per weight.
    pub values: Vec<Vec<f64>>,
    pub decay_rate: f64,
    /// `None` when there are too few samples to fit.
    pub fitted: Vec<Option<f64>>,
    pub bound_holds: Vec<bool>,
    pub final_state: GridState,
    pub files: Vec<PathBuf>,
}

/// Runs the configured experiment and writes `timeseries.csv`,
/// `field_<label>.txt` per component and `summary.txt` into the output
/// directory.
pub fn cmd_run(cfg: &RunConfig, exec: Execution) -> Result<RunOutcome> {
    let setup = cfg.setup()?;
    let solver = Solver::new(setup.system.clone(), setup.policy, cfg.cfl)?.with_execution(exec);
    let mut state = setup.state;
    let mut rec = LyapunovRecorder::new(setup.weights);
    let summary = solver.run(&mut state, cfg.t_end, &mut [&mut rec])?;

    let names = rec.names().to_vec();
    let times = rec.times().to_vec();
    let values: Vec<Vec<f64>> = (0..names.len()).map(|k| rec.values(k).to_vec()).collect();
    let rate = setup.decay_rate;
    let mut fitted = Vec::new();
    let mut bound_holds = Vec::new();
    for v in &values {
        let series = DecaySeries::new(times.clone(), v.clone()).ok();
        fitted.push(series.as_ref().and_then(|s| fit_decay(s).ok()));
        bound_holds.push(match &series {
            Some(s) => check_decay_bound_from(s, rate, cfg.slack, cfg.bound_from),
            None => bound_holds_raw(&times, v, rate, cfg.slack, cfg.bound_from),
        });
    }

    let out = &cfg.output;
    fs::create_dir_all(out)?;
    let mut files = Vec::new();
    let mut write = |name: String, text: String| -> Result<()> {
        let path = out.join(name);
        fs::write(&path, text)?;
        files.push(path);
        Ok(())
    };
    write("timeseries.csv".into(), timeseries_csv(&names, &times, &values, rate))?;
    for (c, label) in setup.system.labels().iter().enumerate() {
        write(format!("field_{label}.txt"), field_text(&state, c))?;
    }
    let outcome = RunOutcome {
        summary,
        names,
        times,
        values,
        decay_rate: rate,
        fitted,
        bound_holds,
        final_state: state,
        files: Vec::new(),
    };
    write("summary.txt".into(), summary_text(cfg, &outcome))?;
    Ok(RunOutcome { files, ..outcome })
}

fn bound_holds_raw(times: &[f64], v: &[f64], rate: f64, slack: f64, t_min: f64) -> bool {
    times
        .iter()
        .zip(v)
        .filter(|(t, _)| **t >= t_min)
        .all(|(t, l)| *l <= slack * v[0] * (-rate * (t - times[0])).exp())
}

/// Header `t,<names>,bound`; `bound` is `e^{-C t}`, to be compared with
/// `L / L_0`.
pub fn timeseries_csv(names: &[String], times: &[f64], values: &[Vec<f64>], rate: f64) -> String {
    let mut s = String::from("t");
    for n in names {
        s.push(',');
        s.push_str(n);
    }
    s.push_str(",bound\n");
    for (i, t) in times.iter().enumerate() {
        write!(s, "{t:.17e}").unwrap();
        for v in values {
            write!(s, ",{:.17e}", v[i]).unwrap();
        }
        writeln!(s, ",{:.17e}", (-rate * (t - times[0])).exp()).unwrap();
    }
    s
}

/// `ny` lines of `nx` values, bottom row first.
pub fn field_text(state: &GridState, c: usize) -> String {
    let g = state.grid();
    let f = state.component_field(c);
    let mut s = String::with_capacity(f.len() * 25);
    for row in f.chunks(g.nx) {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

fn summary_text(cfg: &RunConfig, o: &RunOutcome) -> String {
    let g = o.final_state.grid();
    let mut s = String::new();
    writeln!(s, "experiment = {}", cfg.experiment.name()).unwrap();
    writeln!(s, "nx = {}\nny = {}", g.nx, g.ny).unwrap();
    writeln!(s, "dx = {:.17e}\ndy = {:.17e}", g.dx, g.dy).unwrap();
    writeln!(s, "cfl = {}", cfg.cfl).unwrap();
    writeln!(s, "dt = {:.17e}", o.summary.dt).unwrap();
    writeln!(s, "steps = {}", o.summary.steps).unwrap();
    writeln!(s, "final_time = {:.17e}", o.summary.final_time).unwrap();
    writeln!(s, "decay_rate = {}", o.decay_rate).unwrap();
    writeln!(s, "slack = {}", cfg.slack).unwrap();
    writeln!(s, "bound_from = {}", cfg.bound_from).unwrap();
    for (k, name) in o.names.iter().enumerate() {
        let v = &o.values[k];
        writeln!(s, "{name}.initial = {:.17e}", v[0]).unwrap();
        writeln!(s, "{name}.final = {:.17e}", v[v.len() - 1]).unwrap();
        match o.fitted[k] {
            Some(r) => writeln!(s, "{name}.fitted_rate = {r:.17e}").unwrap(),
            None => writeln!(s, "{name}.fitted_rate = n/a").unwrap(),
        }
        let verdict = if o.bound_holds[k] { "holds" } else { "violated" };
        writeln!(s, "{name}.bound = {verdict}").unwrap();
    }
    s
}

/// Prints the summary file of a run to stdout.
pub fn print_outcome(dir: &Path) -> Result<()> {
    print!("{}", fs::read_to_string(dir.join("summary.txt"))?);
    Ok(())
}
