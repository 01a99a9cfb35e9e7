//! Lyapunov weights, volume quadrature and decay-rate fitting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{GridState, Observer, StepContext};
use crate::systems::SaintVenantParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightStyle {
    Exponential,
    Linear,
}

/// Affine exponent `m . x + c0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Affine {
    pub m: [f64; 2],
    pub c0: f64,
}

impl Affine {
    pub fn eval(&self, xy: [f64; 2]) -> f64 {
        self.m[0] * xy[0] + self.m[1] * xy[1] + self.c0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum WeightFunction {
    /// `exp(m . x + c0)` for every component.
    ExpScalar(Affine),
    /// `exp(mu_i(x))` for component `i`.
    ExpPerComponent(Vec<Affine>),
    /// `K + alpha . x`, required positive on the domain.
    Linear { k: f64, alpha: [f64; 2] },
    /// Constant diagonal matrix.
    FixedMatrix(Vec<f64>),
}

impl WeightFunction {
    /// Weight of component `i` at `xy`.
    pub fn component(&self, xy: [f64; 2], i: usize) -> f64 {
        match self {
            WeightFunction::ExpScalar(a) => a.eval(xy).exp(),
            WeightFunction::ExpPerComponent(v) => v[i].eval(xy).exp(),
            WeightFunction::Linear { k, alpha } => k + alpha[0] * xy[0] + alpha[1] * xy[1],
            WeightFunction::FixedMatrix(d) => d[i],
        }
    }

    /// Number of components the weight is defined for, `None` if scalar.
    pub fn components(&self) -> Option<usize> {
        match self {
            WeightFunction::ExpPerComponent(v) => Some(v.len()),
            WeightFunction::FixedMatrix(d) => Some(d.len()),
            _ => None,
        }
    }

    /// Checks positivity on the rectangle; affine weights are checked at the
    /// corners.
    pub fn check_positive(&self, origin: [f64; 2], width: f64, height: f64) -> Result<()> {
        match self {
            WeightFunction::Linear { .. } => {
                let [x0, y0] = origin;
                for xy in [
                    [x0, y0],
                    [x0 + width, y0],
                    [x0, y0 + height],
                    [x0 + width, y0 + height],
                ] {
                    let v = self.component(xy, 0);
                    if v.is_nan() || v <= 0.0 {
                        return Err(Error::params(format!(
                            "linear weight is {v} at ({}, {})",
                            xy[0], xy[1]
                        )));
                    }
                }
                Ok(())
            }
            WeightFunction::FixedMatrix(d) if d.iter().any(|v| v.is_nan() || *v <= 0.0) => {
                Err(Error::params("fixed weight entries must be positive"))
            }
            _ => Ok(()),
        }
    }
}

/// The two weights used for Saint-Venant: `exp(ln(2L) - x/(2L))` and
/// `2L - x`.
pub fn sv_weights(p: &SaintVenantParams, style: WeightStyle) -> Result<WeightFunction> {
    p.validate()?;
    let two_l = 2.0 * p.domain_l;
    Ok(match style {
        WeightStyle::Exponential => WeightFunction::ExpScalar(Affine {
            m: [-1.0 / two_l, 0.0],
            c0: two_l.ln(),
        }),
        WeightStyle::Linear => WeightFunction::Linear {
            k: two_l,
            alpha: [-1.0, 0.0],
        },
    })
}

/// Constant weight `diag(1, H*/g, H*/g)`.
pub fn sv_fixed_weight(p: &SaintVenantParams) -> Result<WeightFunction> {
    p.validate()?;
    let r = p.h_star / p.g;
    Ok(WeightFunction::FixedMatrix(vec![1.0, r, r]))
}

/// Per-component exponents `y - (C_L+3) x`, `y - (C_L+1) x`,
/// `y + (C_L+1) x` of the diagonal example.
pub fn diag_weights(c_l: f64) -> Result<WeightFunction> {
    if !(c_l > 0.0 && c_l.is_finite()) {
        return Err(Error::params(format!("c_l = {c_l} must be positive")));
    }
    let aff = |mx: f64| Affine {
        m: [mx, 1.0],
        c0: 0.0,
    };
    Ok(WeightFunction::ExpPerComponent(vec![
        aff(-(c_l + 3.0)),
        aff(-(c_l + 1.0)),
        aff(c_l + 1.0),
    ]))
}

/// Weight sampled at the cell centers of a state's grid.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightField {
    n: usize,
    values: Vec<f64>,
}

impl WeightField {
    pub fn sample(w: &WeightFunction, state: &GridState) -> Self {
        let g = state.grid();
        let n = state.n();
        let mut values = Vec::with_capacity(g.nx * g.ny * n);
        for j in 0..g.ny {
            for i in 0..g.nx {
                let xy = g.cell_center(i, j);
                values.extend((0..n).map(|c| w.component(xy, c)));
            }
        }
        WeightField { n, values }
    }

    /// `dx dy sum_cells sum_c weight_c w_c^2`.
    pub fn integrate(&self, state: &GridState) -> f64 {
        let g = state.grid();
        let n = self.n;
        let mut total = 0.0;
        for j in 0..g.ny {
            let row = state.interior_row(j);
            let wrow = &self.values[j * g.nx * n..(j + 1) * g.nx * n];
            total += row
                .iter()
                .zip(wrow)
                .map(|(u, d)| d * u * u)
                .sum::<f64>();
        }
        total * g.dx * g.dy
    }
}

/// Midpoint-rule Lyapunov functional of the state.
pub fn lyapunov_quadrature(state: &GridState, w: &WeightFunction) -> f64 {
    WeightField::sample(w, state).integrate(state)
}

/// `f >= g` at every cell center and `L_f >= L_g` for the state.
pub fn compare_weights(f: &WeightFunction, g: &WeightFunction, state: &GridState) -> bool {
    let grid = state.grid();
    let n = state.n();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let xy = grid.cell_center(i, j);
            if (0..n).any(|c| f.component(xy, c) < g.component(xy, c)) {
                return false;
            }
        }
    }
    lyapunov_quadrature(state, f) >= lyapunov_quadrature(state, g)
}

/// Lyapunov values over time.
#[derive(Clone, Debug, PartialEq)]
pub struct DecaySeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl DecaySeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid("times and values differ in length"));
        }
        if times.len() < 3 {
            return Err(Error::invalid("a decay series needs at least 3 samples"));
        }
        if times.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater)) {
            return Err(Error::invalid("times must be strictly increasing"));
        }
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("Lyapunov value {v} is not positive")));
        }
        Ok(DecaySeries { times, values })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Least-squares slope of `-ln L` against `t` over samples with `t >= t_min`.
pub fn fit_decay_from(series: &DecaySeries, t_min: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t >= t_min)
        .map(|(t, v)| (*t, -v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::invalid(format!(
            "only {} samples at t >= {t_min}",
            pts.len()
        )));
    }
    let k = pts.len() as f64;
    let (mt, my) = pts
        .iter()
        .fold((0.0, 0.0), |(a, b), (t, y)| (a + t / k, b + y / k));
    let (sty, stt) = pts.iter().fold((0.0, 0.0), |(a, b), (t, y)| {
        (a + (t - mt) * (y - my), b + (t - mt) * (t - mt))
    });
    Ok(sty / stt)
}

/// Fitted decay rate, skipping samples before a tenth of the final time.
pub fn fit_decay(series: &DecaySeries) -> Result<f64> {
    let t_end = *series.times.last().expect("nonempty");
    let t0 = series.times[0];
    fit_decay_from(series, t0 + 0.1 * (t_end - t0))
}

/// `L_n <= slack L_0 e^{-rate t_n}` for all samples with `t_n >= t_min`.
pub fn check_decay_bound_from(series: &DecaySeries, rate: f64, slack: f64, t_min: f64) -> bool {
    let (t0, l0) = (series.times[0], series.values[0]);
    series
        .times
        .iter()
        .zip(&series.values)
        .filter(|(t, _)| **t >= t_min)
        .all(|(t, v)| *v <= slack * l0 * (-rate * (t - t0)).exp())
}

pub fn check_decay_bound(series: &DecaySeries, rate: f64, slack: f64) -> bool {
    check_decay_bound_from(series, rate, slack, f64::NEG_INFINITY)
}

/// Observer recording Lyapunov values for several weights.
#[derive(Debug)]
pub struct LyapunovRecorder {
    names: Vec<String>,
    weights: Vec<WeightFunction>,
    fields: Vec<WeightField>,
    times: Vec<f64>,
    values: Vec<Vec<f64>>,
}

impl LyapunovRecorder {
    pub fn new(weights: Vec<(String, WeightFunction)>) -> Self {
        let (names, weights): (Vec<_>, Vec<_>) = weights.into_iter().unzip();
        let values = vec![Vec::new(); names.len()];
        LyapunovRecorder {
            names,
            weights,
            fields: Vec::new(),
            times: Vec::new(),
            values,
        }
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Recorded values for weight `k`.
    pub fn values(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn series(&self, k: usize) -> Result<DecaySeries> {
        DecaySeries::new(self.times.clone(), self.values[k].clone())
    }
}

impl Observer for LyapunovRecorder {
    fn observe(&mut self, state: &GridState, _ctx: &StepContext) -> Result<()> {
        if self.fields.is_empty() {
            self.fields = self
                .weights
                .iter()
                .map(|w| WeightField::sample(w, state))
                .collect();
        }
        self.times.push(state.time);
        for (field, vals) in self.fields.iter().zip(&mut self.values) {
            vals.push(field.integrate(state));
        }
        Ok(())
    }
}
