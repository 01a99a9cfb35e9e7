use std::f64::consts::TAU;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boundary::SvControlGains;
use crate::error::{Error, Result};
use crate::monitor::{diag_weights, sv_fixed_weight, sv_weights, Affine, WeightFunction, WeightStyle};
use crate::smallmat::{Mat, SymMatrix};
use crate::solver::{BoundaryPolicy, Grid, GridState, SideCondition};
use crate::systems::{diagonal_example, saint_venant, SaintVenantParams, SystemSpec};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    #[default]
    #[value(name = "saint_venant")]
    SaintVenant,
    Diagonal,
    Custom,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::SaintVenant => "saint_venant",
            Experiment::Diagonal => "diagonal",
            Experiment::Custom => "custom",
        }
    }
}

/// Lyapunov weights to monitor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum WeightChoice {
    Exp,
    Linear,
    Both,
    Dia,
}

/// Either a spacing or cell counts; a spacing must divide the extents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    /// Defaults to `dx`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nx: Option<usize>,
    /// Defaults to `nx` scaled by the aspect ratio.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ny: Option<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dx: Some(0.01),
            dy: None,
            nx: None,
            ny: None,
        }
    }
}

impl GridConfig {
    pub fn resolve(&self, origin: [f64; 2], width: f64, height: f64) -> Result<Grid> {
        let spacing = self.dx.is_some() || self.dy.is_some();
        let counts = self.nx.is_some() || self.ny.is_some();
        match (spacing, counts) {
            (true, true) => Err(Error::config("grid", "give either dx/dy or nx/ny, not both")),
            (false, false) => Err(Error::config("grid", "needs dx or nx")),
            (true, false) => {
                let dx = self
                    .dx
                    .ok_or_else(|| Error::config("grid.dx", "required when dy is given"))?;
                let dy = self.dy.unwrap_or(dx);
                Grid::with_spacing(origin, width, height, dx, dy)
                    .map_err(|e| Error::config("grid.dx", e.to_string()))
            }
            (false, true) => {
                let nx = self
                    .nx
                    .ok_or_else(|| Error::config("grid.nx", "required when ny is given"))?;
                let ny = self
                    .ny
                    .unwrap_or_else(|| ((nx as f64 * height / width).round() as usize).max(1));
                Grid::new(nx, ny, origin, width, height)
                    .map_err(|e| Error::config("grid.nx", e.to_string()))
            }
        }
    }
}

/// Initial cell averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// The same vector in every cell.
    Constant { value: Vec<f64> },
    /// Component `c` is `amplitude[c] sin(2 pi kx x') sin(2 pi ky y')` with
    /// coordinates relative to the lower-left corner.
    Sinusoid { amplitude: Vec<f64>, kx: f64, ky: f64 },
    /// One field file per component in the field dump format.
    Table { files: Vec<PathBuf> },
}

impl InitialData {
    pub fn build(&self, grid: Grid, n: usize) -> Result<GridState> {
        let len_check = |field: &str, len: usize| -> Result<()> {
            if len != n {
                return Err(Error::config(
                    field,
                    format!("has {len} entries, the system has {n} components"),
                ));
            }
            Ok(())
        };
        match self {
            InitialData::Constant { value } => {
                len_check("initial.value", value.len())?;
                if !value.iter().all(|v| v.is_finite()) {
                    return Err(Error::config("initial.value", "entries must be finite"));
                }
                Ok(GridState::from_fn(grid, n, |_| value.clone()))
            }
            InitialData::Sinusoid { amplitude, kx, ky } => {
                len_check("initial.amplitude", amplitude.len())?;
                if !(amplitude.iter().all(|v| v.is_finite()) && kx.is_finite() && ky.is_finite()) {
                    return Err(Error::config("initial", "sinusoid parameters must be finite"));
                }
                let [x0, y0] = grid.origin;
                Ok(GridState::from_cell_averages(grid, n, |[x, y]| {
                    let s = (TAU * kx * (x - x0)).sin() * (TAU * ky * (y - y0)).sin();
                    amplitude.iter().map(|a| a * s).collect()
                }))
            }
            InitialData::Table { files } => {
                len_check("initial.files", files.len())?;
                let fields = files
                    .iter()
                    .map(|f| read_field(f, grid.nx, grid.ny))
                    .collect::<Result<Vec<_>>>()?;
                let mut s = GridState::zeros(grid, n);
                for j in 0..grid.ny {
                    for i in 0..grid.nx {
                        let cell = s.cell_mut(i as isize, j as isize);
                        for (c, f) in fields.iter().enumerate() {
                            cell[c] = f[j * grid.nx + i];
                        }
                    }
                }
                Ok(s)
            }
        }
    }
}

/// Reads a field file: `ny` lines of `nx` whitespace-separated numbers,
/// bottom row first.
pub fn read_field(path: &Path, nx: usize, ny: usize) -> Result<Vec<f64>> {
    let field = format!("initial.files ({})", path.display());
    let text = fs::read_to_string(path).map_err(|e| Error::config(&field, e.to_string()))?;
    let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if rows.len() != ny {
        return Err(Error::config(&field, format!("has {} rows, expected {ny}", rows.len())));
    }
    let mut out = Vec::with_capacity(nx * ny);
    for (j, row) in rows.iter().enumerate() {
        let vals = row
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::config(&field, format!("line {}: {e}", j + 1)))?;
        if vals.len() != nx {
            return Err(Error::config(
                &field,
                format!("line {} has {} values, expected {nx}", j + 1, vals.len()),
            ));
        }
        if !vals.iter().all(|v| v.is_finite()) {
            return Err(Error::config(&field, format!("line {}: non-finite value", j + 1)));
        }
        out.extend(vals);
    }
    Ok(out)
}

/// Side conditions available to custom systems.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CustomBoundary {
    #[default]
    Transmissive,
    ZeroState,
}

/// Affine potential `m . x + c0` for the exponential weight of a custom run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialConfig {
    pub m: [f64; 2],
    #[serde(default)]
    pub c0: f64,
}

/// User-supplied symmetric system `w_t + A1 w_x + A2 w_y + B w = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemMatrices {
    pub a1: Vec<Vec<f64>>,
    pub a2: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl SystemMatrices {
    pub fn to_system(&self, field: &str) -> Result<SystemSpec> {
        let sym = |name: &str, rows: &[Vec<f64>]| {
            SymMatrix::from_rows(rows).map_err(|e| Error::config(format!("{field}.{name}"), e.to_string()))
        };
        let a1 = sym("a1", &self.a1)?;
        let a2 = sym("a2", &self.a2)?;
        let b = Mat::from_rows(&self.b).map_err(|e| Error::config(format!("{field}.b"), e.to_string()))?;
        let sys = match &self.labels {
            Some(l) => SystemSpec::new(a1, a2, b, l.clone()),
            None => SystemSpec::unlabeled(a1, a2, b),
        };
        sys.map_err(|e| Error::config(field, e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomSystem {
    #[serde(flatten)]
    pub matrices: SystemMatrices,
    #[serde(default = "one")]
    pub width: f64,
    #[serde(default = "one")]
    pub height: f64,
    #[serde(default)]
    pub boundary: CustomBoundary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialConfig>,
}

fn one() -> f64 {
    1.0
}

/// Everything `run` needs. Fields left out take the defaults of the chosen
/// experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub t_end: f64,
    pub cfl: f64,
    /// Factor on the bound `L_0 e^{-C t}` in the verdict.
    pub slack: f64,
    /// Bound verdict covers `t >= bound_from`.
    pub bound_from: f64,
    /// Defaults to 1.4 (Saint-Venant), `c_l` (diagonal), 0 (custom).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_rate: Option<f64>,
    /// Defaults to `both` (Saint-Venant), `exp` (diagonal), `dia` (custom).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight: Option<WeightChoice>,
    /// Decay parameter of the diagonal example.
    pub c_l: f64,
    pub output: PathBuf,
    pub grid: GridConfig,
    /// Defaults to `(1, 1, 1)` (Saint-Venant), a unit sinusoid (diagonal),
    /// ones (custom).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial: Option<InitialData>,
    pub saint_venant: SaintVenantParams,
    /// Defaults to [`SvControlGains::defaults`].
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gains: Option<SvControlGains>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomSystem>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: Experiment::SaintVenant,
            t_end: 3.0,
            cfl: 0.5,
            slack: 1.05,
            bound_from: 0.1,
            decay_rate: None,
            weight: None,
            c_l: 4.0,
            output: PathBuf::from("out"),
            grid: GridConfig::default(),
            initial: None,
            saint_venant: SaintVenantParams::default(),
            gains: None,
            custom: None,
        }
    }
}

/// Resolved pieces of a run.
#[derive(Clone, Debug)]
pub struct Setup {
    pub system: SystemSpec,
    pub policy: BoundaryPolicy,
    pub state: GridState,
    /// Column names and weights.
    pub weights: Vec<(String, WeightFunction)>,
    pub decay_rate: f64,
}

impl RunConfig {
    pub fn for_experiment(experiment: Experiment) -> Self {
        RunConfig {
            experiment,
            ..Self::default()
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))
    }

    /// Parses a config file; relative table paths are taken relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config("config", format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(InitialData::Table { files }), Some(dir)) = (&mut cfg.initial, path.parent()) {
            for f in files.iter_mut().filter(|f| f.is_relative()) {
                *f = dir.join(&*f);
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config("config", e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |field: &str, v: f64| -> Result<()> {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
            Ok(())
        };
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::config("t_end", format!("must be nonnegative, got {}", self.t_end)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::config("cfl", format!("must lie in (0, 1], got {}", self.cfl)));
        }
        positive("slack", self.slack)?;
        if !self.bound_from.is_finite() {
            return Err(Error::config("bound_from", "must be finite"));
        }
        if let Some(r) = self.decay_rate {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::config("decay_rate", format!("must be nonnegative, got {r}")));
            }
        }
        match self.experiment {
            Experiment::SaintVenant => {
                self.saint_venant
                    .validate()
                    .map_err(|e| Error::config("saint_venant", e.to_string()))?;
                self.gains()
                    .validate(&self.saint_venant)
                    .map_err(|e| Error::config("gains", e.to_string()))?;
            }
            Experiment::Diagonal => positive("c_l", self.c_l)?,
            Experiment::Custom => {
                let c = self
                    .custom
                    .as_ref()
                    .ok_or_else(|| Error::config("custom", "required for the custom experiment"))?;
                positive("custom.width", c.width)?;
                positive("custom.height", c.height)?;
                c.matrices.to_system("custom")?;
            }
        }
        Ok(())
    }

    pub fn gains(&self) -> SvControlGains {
        self.gains
            .unwrap_or_else(|| SvControlGains::defaults(&self.saint_venant))
    }

    pub fn weight_choice(&self) -> WeightChoice {
        self.weight.unwrap_or(match self.experiment {
            Experiment::SaintVenant => WeightChoice::Both,
            Experiment::Diagonal => WeightChoice::Exp,
            Experiment::Custom => WeightChoice::Dia,
        })
    }

    pub fn initial_data(&self, n: usize) -> InitialData {
        self.initial.clone().unwrap_or(match self.experiment {
            Experiment::Diagonal => InitialData::Sinusoid {
                amplitude: vec![1.0; n],
                kx: 1.0,
                ky: 1.0,
            },
            _ => InitialData::Constant {
                value: vec![1.0; n],
            },
        })
    }

    /// Validates and assembles system, boundary policy, initial state and
    /// weights.
    pub fn setup(&self) -> Result<Setup> {
        self.validate()?;
        let weight = self.weight_choice();
        let bad_weight = |what: &str| {
            Err(Error::config(
                "weight",
                format!("{weight:?} is not available for {what}").to_lowercase(),
            ))
        };
        let (system, policy, extent, weights, rate) = match self.experiment {
            Experiment::SaintVenant => {
                let p = self.saint_venant;
                let policy = BoundaryPolicy::saint_venant(p, self.gains())?;
                let exp = || -> Result<(String, WeightFunction)> {
                    Ok(("L_exp".into(), sv_weights(&p, WeightStyle::Exponential)?))
                };
                let lin = || -> Result<(String, WeightFunction)> {
                    Ok(("L_lin".into(), sv_weights(&p, WeightStyle::Linear)?))
                };
                let weights = match weight {
                    WeightChoice::Exp => vec![exp()?],
                    WeightChoice::Linear => vec![lin()?],
                    WeightChoice::Both => vec![exp()?, lin()?],
                    WeightChoice::Dia => vec![("L_dia".into(), sv_fixed_weight(&p)?)],
                };
                (saint_venant(&p)?, policy, (p.domain_l, 1.0), weights, 1.4)
            }
            Experiment::Diagonal => {
                let spec = diagonal_example(self.c_l)?;
                let weights = match weight {
                    WeightChoice::Exp | WeightChoice::Both => {
                        vec![("L".into(), diag_weights(self.c_l)?)]
                    }
                    WeightChoice::Dia => {
                        vec![("L_dia".into(), WeightFunction::FixedMatrix(vec![1.0; 3]))]
                    }
                    WeightChoice::Linear => return bad_weight("the diagonal experiment"),
                };
                let sys = spec.to_system();
                (sys, BoundaryPolicy::diagonal(spec), (1.0, 1.0), weights, self.c_l)
            }
            Experiment::Custom => {
                let c = self.custom.as_ref().expect("validated");
                let sys = c.matrices.to_system("custom")?;
                let policy = BoundaryPolicy::uniform(match c.boundary {
                    CustomBoundary::Transmissive => SideCondition::Transmissive,
                    CustomBoundary::ZeroState => SideCondition::ZeroState,
                });
                let exp = || match c.potential {
                    Some(p) => Ok((
                        "L_exp".to_string(),
                        WeightFunction::ExpScalar(Affine { m: p.m, c0: p.c0 }),
                    )),
                    None => Err(Error::config("custom.potential", "required by the exp weight")),
                };
                let dia = ("L_dia".to_string(), WeightFunction::FixedMatrix(vec![1.0; sys.n()]));
                let weights = match weight {
                    WeightChoice::Exp => vec![exp()?],
                    WeightChoice::Both => vec![exp()?, dia],
                    WeightChoice::Dia => vec![dia],
                    WeightChoice::Linear => return bad_weight("custom systems"),
                };
                (sys, policy, (c.width, c.height), weights, 0.0)
            }
        };
        let grid = self.grid.resolve([0.0, 0.0], extent.0, extent.1)?;
        let state = self.initial_data(system.n()).build(grid, system.n())?;
        Ok(Setup {
            system,
            policy,
            state,
            weights,
            decay_rate: self.decay_rate.unwrap_or(rate),
        })
    }
}
