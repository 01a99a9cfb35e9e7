//! Boundary machinery on the rectangle `[x0, x0 + W] x [y0, y0 + H]`:
//! pencil matrices, the Saint-Venant characteristic decomposition, inflow and
//! outflow parts of the boundary, and the two control laws.

use std::f64::consts::{E, FRAC_1_SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monitor::{diag_weights, WeightFunction};
use crate::smallmat::{Mat, SymMatrix};
use crate::systems::{DiagSystemSpec, SaintVenantParams, SystemSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Outward unit normal.
    pub fn normal(self) -> [f64; 2] {
        match self {
            Side::Left => [-1.0, 0.0],
            Side::Right => [1.0, 0.0],
            Side::Bottom => [0.0, -1.0],
            Side::Top => [0.0, 1.0],
        }
    }

    /// Sides with constant x.
    pub fn is_vertical(self) -> bool {
        matches!(self, Side::Left | Side::Right)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryPoint {
    pub side: Side,
    /// Relative position along the side, in `[0, 1]`, increasing with x or y.
    pub arc: f64,
    pub xy: [f64; 2],
    pub normal: [f64; 2],
}

impl BoundaryPoint {
    pub fn new(side: Side, arc: f64, origin: [f64; 2], width: f64, height: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&arc) {
            return Err(Error::invalid(format!("arc position {arc} outside [0, 1]")));
        }
        let [x0, y0] = origin;
        let xy = match side {
            Side::Left => [x0, y0 + arc * height],
            Side::Right => [x0 + width, y0 + arc * height],
            Side::Bottom => [x0 + arc * width, y0],
            Side::Top => [x0 + arc * width, y0 + height],
        };
        Ok(BoundaryPoint {
            side,
            arc,
            xy,
            normal: side.normal(),
        })
    }
}

fn check_unit(nu: [f64; 2]) -> Result<()> {
    let norm = nu[0].hypot(nu[1]);
    if !nu.iter().all(|v| v.is_finite()) || (norm - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "direction ({}, {}) is not a unit vector",
            nu[0], nu[1]
        )));
    }
    Ok(())
}

/// `nu_1 A1 + nu_2 A2`.
pub fn pencil(sys: &SystemSpec, nu: [f64; 2]) -> Result<SymMatrix> {
    check_unit(nu)?;
    Ok(sys.a1().scale(nu[0]).add(&sys.a2().scale(nu[1])))
}

/// Closed-form eigenstructure of the Saint-Venant pencil.
#[derive(Clone, Debug, PartialEq)]
pub struct SvEigenstructure {
    pub nu: [f64; 2],
    /// `(nu_1 w* - c, nu_1 w*, nu_1 w* + c)` with `c = sqrt(g H*)`.
    pub lambdas: [f64; 3],
    /// Orthogonal, columns are the eigenvectors paired with `lambdas`.
    pub t_matrix: Mat,
}

impl SvEigenstructure {
    /// Characteristic variables `T^T w`.
    pub fn to_characteristic(&self, w: &[f64]) -> [f64; 3] {
        let t = &self.t_matrix;
        std::array::from_fn(|i| (0..3).map(|k| t[(k, i)] * w[k]).sum())
    }

    /// Inverse of [`Self::to_characteristic`]: `T v`.
    pub fn from_characteristic(&self, v: &[f64; 3]) -> [f64; 3] {
        let t = &self.t_matrix;
        std::array::from_fn(|i| (0..3).map(|k| t[(i, k)] * v[k]).sum())
    }
}

pub fn sv_eigenstructure(p: &SaintVenantParams, nu: [f64; 2]) -> Result<SvEigenstructure> {
    p.validate()?;
    check_unit(nu)?;
    let c = p.celerity();
    let base = nu[0] * p.w_star;
    let s = FRAC_1_SQRT_2;
    let [n1, n2] = nu;
    let t_matrix = Mat::from_rows(&[
        [s, 0.0, s],
        [-n1 * s, -n2, n1 * s],
        [-n2 * s, n1, n2 * s],
    ])?;
    Ok(SvEigenstructure {
        nu,
        lambdas: [base - c, base, base + c],
        t_matrix,
    })
}

/// Gains of the Saint-Venant boundary controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvControlGains {
    /// Left side, `v1 = sqrt(alpha) v3`.
    pub alpha: f64,
    /// Right side, `v1 = sqrt(beta) v3`.
    pub beta: f64,
    /// Left side tangential velocity driven by the spillway height.
    pub gamma: f64,
    /// Spillway, `v1 = sqrt(epsilon) v3`.
    pub epsilon: f64,
}

/// Upper bounds of the admissible gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GainBounds {
    pub alpha: f64,
    pub beta: f64,
    /// Bound on gamma at the given epsilon.
    pub gamma: f64,
}

impl SvControlGains {
    pub fn bounds(p: &SaintVenantParams, epsilon: f64) -> GainBounds {
        let (c, w) = (p.celerity(), p.w_star);
        GainBounds {
            alpha: (c - w) / (c + w),
            beta: (c + w) / (c - w),
            gamma: (1.0 - epsilon) * (2.0 * p.domain_l / 9.0) * c / w,
        }
    }

    /// `alpha` and `gamma` at half their bounds, `beta = 1`, `epsilon = 1/2`.
    pub fn defaults(p: &SaintVenantParams) -> Self {
        let epsilon = 0.5;
        let b = Self::bounds(p, epsilon);
        SvControlGains {
            alpha: 0.5 * b.alpha,
            beta: 1.0,
            gamma: 0.5 * b.gamma,
            epsilon,
        }
    }

    pub fn validate(&self, p: &SaintVenantParams) -> Result<()> {
        let b = Self::bounds(p, self.epsilon);
        let check = |name: &str, v: f64, hi: f64| -> Result<()> {
            if !(v.is_finite() && v >= 0.0 && v <= hi) {
                return Err(Error::params(format!("gain {name} = {v} outside [0, {hi}]")));
            }
            Ok(())
        };
        check("epsilon", self.epsilon, 1.0)?;
        check("alpha", self.alpha, b.alpha)?;
        check("beta", self.beta, b.beta)?;
        check("gamma", self.gamma, b.gamma)?;
        Ok(())
    }
}

/// Outgoing (`lambda_i >= 0`) and incoming sides per characteristic
/// component, plus the control and zero-data subsets of the incoming sides
/// where a law assigns them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaPartition {
    pub outgoing: Vec<Vec<Side>>,
    pub incoming: Vec<Vec<Side>>,
    pub control: Vec<Vec<Side>>,
    pub zero: Vec<Vec<Side>>,
}

impl GammaPartition {
    fn from_speeds(speeds: impl Fn(usize, Side) -> f64, n: usize) -> Self {
        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        for i in 0..n {
            for side in Side::ALL {
                if speeds(i, side) >= 0.0 {
                    outgoing[i].push(side);
                } else {
                    incoming[i].push(side);
                }
            }
        }
        GammaPartition {
            outgoing,
            incoming,
            control: vec![Vec::new(); n],
            zero: vec![Vec::new(); n],
        }
    }
}

/// Partition by the sign of the pencil eigenvalues; `lambda_2 = 0` on the
/// horizontal sides counts as outgoing.
pub fn sv_partition(p: &SaintVenantParams) -> Result<GammaPartition> {
    p.validate()?;
    let c = p.celerity();
    Ok(GammaPartition::from_speeds(
        |i, side| {
            let base = side.normal()[0] * p.w_star;
            [base - c, base, base + c][i]
        },
        3,
    ))
}

/// Partition of the diagonal example with its control and zero-data sets.
pub fn diag_partition() -> GammaPartition {
    let rays = crate::systems::diagonal_example(1.0)
        .expect("positive c_l")
        .rays;
    let mut part = GammaPartition::from_speeds(
        |i, side| {
            let n = side.normal();
            rays[i][0] * n[0] + rays[i][1] * n[1]
        },
        3,
    );
    part.control = vec![vec![Side::Left], vec![Side::Left], vec![Side::Top]];
    part.zero = vec![vec![Side::Bottom], vec![Side::Top], vec![Side::Right]];
    part
}

/// x-position on the bottom side whose spillway height drives the left
/// control at height `y` (relative to the lower-left corner).
pub fn spillway_source_x(p: &SaintVenantParams, y: f64) -> f64 {
    p.domain_l / 3.0 * (y + 1.0)
}

/// Bottom positions `x` (relative to the corner) with `L/3 <= x <= 2L/3`.
pub fn in_spillway(p: &SaintVenantParams, x: f64) -> bool {
    let l = p.domain_l;
    x >= l / 3.0 && x <= 2.0 * l / 3.0
}

/// Controlled boundary state on the given side. Incoming characteristic
/// components follow the control law, outgoing ones are taken from the
/// interior `trace`. On the left side the tangential component is driven by
/// `spillway_h`, the height of the controlled spillway state at
/// [`spillway_source_x`]; elsewhere it is ignored.
pub fn sv_boundary_values(
    gains: &SvControlGains,
    p: &SaintVenantParams,
    side: Side,
    arc: f64,
    trace: &[f64; 3],
    spillway_h: f64,
) -> Result<[f64; 3]> {
    if !(0.0..=1.0).contains(&arc) {
        return Err(Error::invalid(format!("arc position {arc} outside [0, 1]")));
    }
    let eig = sv_eigenstructure(p, side.normal())?;
    let mut v = eig.to_characteristic(trace);
    match side {
        Side::Left => {
            v[0] = gains.alpha.sqrt() * v[2];
            v[1] = -(2.0 * gains.gamma).sqrt() / (1.0 + gains.epsilon.sqrt()) * spillway_h;
        }
        Side::Right => v[0] = gains.beta.sqrt() * v[2],
        Side::Bottom if in_spillway(p, arc * p.domain_l) => v[0] = gains.epsilon.sqrt() * v[2],
        Side::Bottom | Side::Top => v[0] = v[2],
    }
    Ok(eig.from_characteristic(&v))
}

/// Per-side face values on the boundary of a rectangle, ordered along
/// increasing x or y, `n` components per face.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryTraces {
    n: usize,
    origin: [f64; 2],
    width: f64,
    height: f64,
    values: [Vec<f64>; 4],
}

impl BoundaryTraces {
    pub fn zeros(n: usize, nx: usize, ny: usize, origin: [f64; 2], width: f64, height: f64) -> Self {
        let values = Side::ALL.map(|s| vec![0.0; n * if s.is_vertical() { ny } else { nx }]);
        BoundaryTraces {
            n,
            origin,
            width,
            height,
            values,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of faces on `side`.
    pub fn len(&self, side: Side) -> usize {
        self.values[side.index()].len() / self.n
    }

    pub fn value(&self, side: Side, i: usize) -> &[f64] {
        &self.values[side.index()][i * self.n..(i + 1) * self.n]
    }

    pub fn value_mut(&mut self, side: Side, i: usize) -> &mut [f64] {
        let n = self.n;
        &mut self.values[side.index()][i * n..(i + 1) * n]
    }

    /// Face length on `side`.
    pub fn ds(&self, side: Side) -> f64 {
        let len = if side.is_vertical() { self.height } else { self.width };
        len / self.len(side) as f64
    }

    /// Midpoint of face `i`.
    pub fn point(&self, side: Side, i: usize) -> BoundaryPoint {
        let arc = (i as f64 + 0.5) / self.len(side) as f64;
        BoundaryPoint::new(side, arc, self.origin, self.width, self.height).expect("arc in range")
    }

    pub fn perimeter(&self) -> f64 {
        2.0 * (self.width + self.height)
    }

    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .flat_map(|v| v.iter())
            .fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Quadrature tolerance `1e-8 * perimeter * max|w|^2`.
pub fn quadrature_tolerance(traces: &BoundaryTraces) -> f64 {
    let s = traces.max_abs();
    1e-8 * traces.perimeter() * s * s
}

/// Midpoint rule for the boundary integral of `w^T sym(D A*(n)) w` where `D`
/// is the (diagonal) weight at the face midpoint.
pub fn boundary_quadrature(
    sys: &SystemSpec,
    weight: &WeightFunction,
    traces: &BoundaryTraces,
) -> Result<f64> {
    let n = sys.n();
    if traces.n() != n {
        return Err(Error::invalid(format!(
            "traces carry {} components, system has {n}",
            traces.n()
        )));
    }
    let mut total = 0.0;
    for side in Side::ALL {
        let a = pencil(sys, side.normal())?;
        let ds = traces.ds(side);
        let mut side_sum = 0.0;
        for f in 0..traces.len(side) {
            let xy = traces.point(side, f).xy;
            let w = traces.value(side, f);
            let d: Vec<f64> = (0..n).map(|i| weight.component(xy, i)).collect();
            let mut q = 0.0;
            for i in 0..n {
                for j in 0..n {
                    q += 0.5 * (d[i] + d[j]) * a[(i, j)] * w[i] * w[j];
                }
            }
            side_sum += q;
        }
        total += ds * side_sum;
    }
    Ok(total)
}

/// `2 (e - 1) + e (e^{C_L + 1} - 1) / (C_L + 1)`.
pub fn diag_control_constant(c_l: f64) -> f64 {
    2.0 * (E - 1.0) + E * ((c_l + 1.0).exp() - 1.0) / (c_l + 1.0)
}

/// Weighted outgoing flux `I(t)`: for each component, the integral of
/// `|a_i . n| e^{mu_i} w_i^2` over its outgoing sides.
pub fn diag_outflow_integral(spec: &DiagSystemSpec, traces: &BoundaryTraces) -> Result<f64> {
    if traces.n() != 3 {
        return Err(Error::invalid("diagonal control expects 3-component traces"));
    }
    let part = diag_partition();
    let weight = diag_weights(spec.c_l)?;
    let mut total = 0.0;
    for (i, sides) in part.outgoing.iter().enumerate() {
        for &side in sides {
            let nrm = side.normal();
            let speed = (spec.rays[i][0] * nrm[0] + spec.rays[i][1] * nrm[1]).abs();
            let ds = traces.ds(side);
            let sum: f64 = (0..traces.len(side))
                .map(|f| {
                    let w = traces.value(side, f)[i];
                    weight.component(traces.point(side, f).xy, i) * w * w
                })
                .sum();
            total += speed * ds * sum;
        }
    }
    Ok(total)
}

/// Scalar control `u = sqrt(I(t) / C(C_L))` from the interior traces.
pub fn diag_control_value(spec: &DiagSystemSpec, traces: &BoundaryTraces) -> Result<f64> {
    let integral = diag_outflow_integral(spec, traces)?;
    if integral < -quadrature_tolerance(traces) || !integral.is_finite() {
        return Err(Error::Numerical(format!(
            "outflow integral {integral:e} is negative or not finite"
        )));
    }
    Ok((integral.max(0.0) / diag_control_constant(spec.c_l)).sqrt())
}
