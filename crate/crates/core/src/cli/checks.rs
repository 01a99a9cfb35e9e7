use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmi::{
    check_feasibility, construct_potential_from_ssc, sv_feasibility_conditions, sv_max_decay_rate,
    ConstructedPotential, LmiVerdict, PotentialSpec,
};
use crate::smallmat::{Mat, SymMatrix};
use crate::solver::{BoundaryPolicy, Execution, Grid, GridState, Solver};
use crate::systems::{saint_venant, SaintVenantParams, SscSystem, SystemSpec};

use super::config::SystemMatrices;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::config("config", format!("{}: {e}", path.display())))
}

/// Input of `lmi-check`. Without `system` the Saint-Venant system is used
/// with `m = -1`, `chi = 2L` unless given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LmiConfig {
    pub decay_rate: f64,
    /// One entry for Saint-Venant, two for a custom system.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chi: Option<f64>,
    pub saint_venant: SaintVenantParams,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemMatrices>,
}

impl Default for LmiConfig {
    fn default() -> Self {
        LmiConfig {
            decay_rate: 1.4,
            m: None,
            chi: None,
            saint_venant: SaintVenantParams::default(),
            system: None,
        }
    }
}

impl LmiConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&read(path)?)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmiReport {
    pub system: String,
    pub potential: PotentialSpec,
    pub verdict: LmiVerdict,
    /// Saint-Venant only: closed-form rate bound and condition verdict.
    pub sv: Option<(f64, bool)>,
}

impl fmt::Display for LmiReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = &self.potential;
        writeln!(f, "system = {}", self.system)?;
        writeln!(f, "m = [{}, {}]", p.m[0], p.m[1])?;
        writeln!(f, "chi = {}", p.chi)?;
        writeln!(f, "decay_rate = {}", p.decay_c)?;
        writeln!(f, "feasible = {}", self.verdict.feasible)?;
        writeln!(f, "strictly_feasible = {}", self.verdict.strictly_feasible)?;
        writeln!(f, "lambda_max = {:.17e}", self.verdict.lambda_max)?;
        writeln!(f, "tolerance = {:.3e}", self.verdict.tol)?;
        if let Some((rate, ok)) = self.sv {
            writeln!(f, "sv_max_decay_rate = {rate:.17e}")?;
            writeln!(f, "sv_conditions = {ok}")?;
        }
        Ok(())
    }
}

/// Feasibility of the stabilization LMI. The printed `chi` is the coupling
/// weight of the generic assembly; for Saint-Venant it is twice the input.
pub fn cmd_lmi_check(cfg: &LmiConfig) -> Result<LmiReport> {
    let c = cfg.decay_rate;
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::config("decay_rate", format!("must be positive, got {c}")));
    }
    match &cfg.system {
        None => {
            let p = cfg.saint_venant;
            p.validate().map_err(|e| Error::config("saint_venant", e.to_string()))?;
            let m = match cfg.m.as_deref() {
                None => -1.0,
                Some([m]) => *m,
                Some(_) => return Err(Error::config("m", "Saint-Venant takes a single entry")),
            };
            let chi = cfg.chi.unwrap_or(2.0 * p.domain_l);
            let potential = PotentialSpec::saint_venant(m, chi, c);
            potential.validate().map_err(|e| Error::config("m", e.to_string()))?;
            let verdict = check_feasibility(&saint_venant(&p)?, &potential)?;
            let sv = Some((sv_max_decay_rate(&p), sv_feasibility_conditions(&p, m, chi, c)));
            Ok(LmiReport {
                system: "saint_venant".into(),
                potential,
                verdict,
                sv,
            })
        }
        Some(mats) => {
            let sys: SystemSpec = mats.to_system("system")?;
            let m = match cfg.m.as_deref() {
                Some([a, b]) => [*a, *b],
                _ => return Err(Error::config("m", "a custom system needs two entries")),
            };
            let mut potential = PotentialSpec::new(m, 0.0, c);
            potential.chi = cfg.chi.unwrap_or(1.0);
            potential.validate().map_err(|e| Error::config("chi", e.to_string()))?;
            let verdict = check_feasibility(&sys, &potential)?;
            Ok(LmiReport {
                system: "custom".into(),
                potential,
                verdict,
                sv: None,
            })
        }
    }
}

/// SSC block system file. Block shapes: `a*` is `(n-r)x(n-r)`, `b*` is
/// `(n-r)xr`, `c*` is `rx(n-r)`, `d*`, `e`, `x2` are `rxr`, `x1` is
/// `(n-r)x(n-r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SscFile {
    pub n: usize,
    pub r: usize,
    pub alpha: [f64; 2],
    pub a1: Vec<Vec<f64>>,
    pub a2: Vec<Vec<f64>>,
    pub b1: Vec<Vec<f64>>,
    pub b2: Vec<Vec<f64>>,
    pub c1: Vec<Vec<f64>>,
    pub c2: Vec<Vec<f64>>,
    pub d1: Vec<Vec<f64>>,
    pub d2: Vec<Vec<f64>>,
    pub e: Vec<Vec<f64>>,
    pub x1: Vec<Vec<f64>>,
    pub x2: Vec<Vec<f64>>,
}

impl SscFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("ssc", e.to_string()))
    }

    pub fn to_system(&self) -> Result<SscSystem> {
        let mat = |name: &str, rows: &[Vec<f64>]| -> Result<Mat> {
            Mat::from_rows(rows).map_err(|e| Error::config(name, e.to_string()))
        };
        let sym = |name: &str, rows: &[Vec<f64>]| -> Result<SymMatrix> {
            SymMatrix::from_rows(rows).map_err(|e| Error::config(name, e.to_string()))
        };
        let s = SscSystem {
            n: self.n,
            r: self.r,
            a: [mat("a1", &self.a1)?, mat("a2", &self.a2)?],
            b: [mat("b1", &self.b1)?, mat("b2", &self.b2)?],
            c: [mat("c1", &self.c1)?, mat("c2", &self.c2)?],
            d: [mat("d1", &self.d1)?, mat("d2", &self.d2)?],
            e: mat("e", &self.e)?,
            x1: sym("x1", &self.x1)?,
            x2: sym("x2", &self.x2)?,
            alpha: self.alpha,
        };
        s.check_dims().map_err(|e| Error::config("ssc", e.to_string()))?;
        Ok(s)
    }
}

pub struct ConstructReport(pub ConstructedPotential);

impl fmt::Display for ConstructReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.0;
        let p = &c.potential;
        writeln!(f, "m = [{:.17e}, {:.17e}]", p.m[0], p.m[1])?;
        writeln!(f, "K = {}", c.k_scale)?;
        writeln!(f, "c0 = {:.17e}", p.c0)?;
        writeln!(f, "decay_rate = {}", p.decay_c)?;
        writeln!(f, "lambda_max = {:.17e}", c.verdict.lambda_max)?;
        writeln!(f, "feasible = {}", c.verdict.feasible)
    }
}

pub fn cmd_construct(ssc_path: &Path, rate: f64) -> Result<ConstructReport> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::config("rate", format!("must be positive, got {rate}")));
    }
    let s = SscFile::from_toml(&read(ssc_path)?)?.to_system()?;
    Ok(ConstructReport(construct_potential_from_ssc(&s, rate)?))
}

/// One resolution of the refinement study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub dx: f64,
    pub l1_error: f64,
    /// Observed order against the previous row.
    pub order: Option<f64>,
}

/// Half-period sine ramp from 0 below `x = 0.1` to 1 above `x = 0.6`.
pub fn sine_ramp(x: f64) -> f64 {
    let s = ((x - 0.1) / 0.5).clamp(0.0, 1.0);
    0.5 - 0.5 * (std::f64::consts::PI * s).cos()
}

/// Final time and CFL number of the refinement study.
pub const CONVERGENCE_T_END: f64 = 0.3;
pub const CONVERGENCE_CFL: f64 = 0.5;

/// Unit-speed advection of [`sine_ramp`] in x on `[0, 1]` with
/// transmissive sides; L1 error of the cell averages at
/// [`CONVERGENCE_T_END`] against the exact averages.
pub fn convergence_study(cells: &[usize], exec: Execution) -> Result<Vec<ConvergenceRow>> {
    let one = |v: f64| SymMatrix::from_rows(&[[v]]).expect("1x1");
    let sys = SystemSpec::unlabeled(one(1.0), one(0.0), Mat::zeros(1, 1))?;
    let solver =
        Solver::new(sys, BoundaryPolicy::transmissive(), CONVERGENCE_CFL)?.with_execution(exec);
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in cells {
        let dx = 1.0 / n as f64;
        let grid = Grid::new(n, 1, [0.0, 0.0], 1.0, dx)?;
        let mut state = GridState::from_cell_averages(grid, 1, |[x, _]| vec![sine_ramp(x)]);
        solver.run(&mut state, CONVERGENCE_T_END, &mut [])?;
        let exact = GridState::from_cell_averages(grid, 1, |[x, _]| {
            vec![sine_ramp(x - CONVERGENCE_T_END)]
        });
        let l1_error = dx
            * state
                .interior_row(0)
                .iter()
                .zip(exact.interior_row(0))
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>();
        let order = rows
            .last()
            .map(|p| (p.l1_error / l1_error).ln() / (p.dx / dx).ln());
        rows.push(ConvergenceRow {
            cells: n,
            dx,
            l1_error,
            order,
        });
    }
    Ok(rows)
}
