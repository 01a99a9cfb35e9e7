#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::smallmat::{eigen_sym, SymMatrix, MAX_DIM};
use crate::systems::SystemSpec;

use super::ghosts::{fill_ghosts, BoundaryPolicy};
use super::grid::GridState;

/// How the flux loops are executed. `Parallel` runs rows on the rayon pool
/// and falls back to `Sequential` when the `parallel` feature is disabled.
/// Both produce bit-identical results.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub max_wave_speed: f64,
    /// `sqrt(dx dy sum |w|^2)` after the step.
    pub norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepContext {
    /// 0 for the initial state.
    pub step: usize,
    pub report: Option<StepReport>,
}

/// Called with a read-only view of the state (ghosts filled) after every
/// step and once for the initial state.
pub trait Observer {
    fn observe(&mut self, state: &GridState, ctx: &StepContext) -> Result<()>;
}

impl<F> Observer for F
where
    F: FnMut(&GridState, &StepContext) -> Result<()>,
{
    fn observe(&mut self, state: &GridState, ctx: &StepContext) -> Result<()> {
        self(state, ctx)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    /// Nominal time step.
    pub dt: f64,
}

fn spectral_radius(a: &SymMatrix) -> f64 {
    let e = eigen_sym(a).expect("system matrices are finite");
    e.lambda_min().abs().max(e.lambda_max().abs())
}

/// Spectral radii of `A1` and `A2`.
pub fn directional_speeds(sys: &SystemSpec) -> [f64; 2] {
    [spectral_radius(sys.a1()), spectral_radius(sys.a2())]
}

/// Largest spectral radius over both Jacobians.
pub fn max_wave_speed(sys: &SystemSpec) -> f64 {
    let [a, b] = directional_speeds(sys);
    a.max(b)
}

/// `A = A+ + A-` with `A+- = T max/min(Lambda, 0) T^T`.
#[derive(Clone, Debug)]
struct FluxSplit {
    plus: Vec<f64>,
    minus: Vec<f64>,
}

impl FluxSplit {
    fn new(a: &SymMatrix) -> Self {
        let e = eigen_sym(a).expect("system matrices are finite");
        FluxSplit {
            plus: e.map_spectrum(|l| l.max(0.0)).into_mat().as_slice().to_vec(),
            minus: e.map_spectrum(|l| l.min(0.0)).into_mat().as_slice().to_vec(),
        }
    }
}

#[inline]
fn minmod(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else if a > 0.0 {
        a.min(b)
    } else {
        a.max(b)
    }
}

fn square<const N: usize>(v: &[f64]) -> [[f64; N]; N] {
    std::array::from_fn(|r| std::array::from_fn(|c| v[r * N + c]))
}

/// Face values of the limited linear reconstruction between cells `m` and
/// `p`, given the four cells `mm, m, p, pp` along the sweep direction.
#[inline(always)]
fn reconstruct<const N: usize>(
    mm: &[f64; N],
    m: &[f64; N],
    p: &[f64; N],
    pp: &[f64; N],
) -> ([f64; N], [f64; N]) {
    let left = std::array::from_fn(|c| m[c] + 0.5 * minmod(m[c] - mm[c], p[c] - m[c]));
    let right = std::array::from_fn(|c| p[c] - 0.5 * minmod(p[c] - m[c], pp[c] - p[c]));
    (left, right)
}

/// `A+ left + A- right`.
#[inline(always)]
fn upwind<const N: usize>(
    plus: &[[f64; N]; N],
    minus: &[[f64; N]; N],
    left: &[f64; N],
    right: &[f64; N],
) -> [f64; N] {
    std::array::from_fn(|r| {
        let mut acc = 0.0;
        for c in 0..N {
            acc += plus[r][c] * left[c] + minus[r][c] * right[c];
        }
        acc
    })
}

/// MUSCL finite-volume solver: minmod reconstruction, exact upwind flux
/// splitting, unsplit source `-B w` and two-stage SSP Runge-Kutta.
#[derive(Clone, Debug)]
pub struct Solver {
    sys: SystemSpec,
    policy: BoundaryPolicy,
    cfl: f64,
    exec: Execution,
    split: [FluxSplit; 2],
    b: Vec<f64>,
    speeds: [f64; 2],
}

impl Solver {
    pub fn new(sys: SystemSpec, policy: BoundaryPolicy, cfl: f64) -> Result<Self> {
        if !(cfl > 0.0 && cfl <= 1.0) {
            return Err(Error::params(format!("cfl = {cfl} outside (0, 1]")));
        }
        if sys.n() > MAX_DIM {
            return Err(Error::invalid("system too large"));
        }
        let speeds = directional_speeds(&sys);
        if speeds[0].max(speeds[1]) <= 0.0 {
            return Err(Error::invalid("system has zero wave speed"));
        }
        let split = [FluxSplit::new(sys.a1()), FluxSplit::new(sys.a2())];
        let b = sys.b().as_slice().to_vec();
        Ok(Solver {
            sys,
            policy,
            cfl,
            exec: Execution::default(),
            split,
            b,
            speeds,
        })
    }

    pub fn with_execution(mut self, exec: Execution) -> Self {
        self.exec = exec;
        self
    }

    pub fn system(&self) -> &SystemSpec {
        &self.sys
    }

    pub fn policy(&self) -> &BoundaryPolicy {
        &self.policy
    }

    pub fn max_wave_speed(&self) -> f64 {
        self.speeds[0].max(self.speeds[1])
    }

    /// `cfl / (rho_1 / dx + rho_2 / dy)`.
    pub fn time_step(&self, grid: &super::Grid) -> f64 {
        self.cfl / (self.speeds[0] / grid.dx + self.speeds[1] / grid.dy)
    }

    pub fn fill_ghosts(&self, state: &mut GridState) -> Result<()> {
        fill_ghosts(state, &self.policy, &self.sys)
    }

    fn for_chunks<F>(&self, buf: &mut [f64], chunk: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        match self.exec {
            #[cfg(feature = "parallel")]
            Execution::Parallel => buf
                .par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(k, c)| f(k, c)),
            _ => buf.chunks_mut(chunk).enumerate().for_each(|(k, c)| f(k, c)),
        }
    }

    /// Semi-discrete right-hand side on the interior, row-major.
    fn rhs(&self, state: &GridState, out: &mut [f64]) {
        match state.n() {
            1 => self.rhs_n::<1>(state, out),
            2 => self.rhs_n::<2>(state, out),
            3 => self.rhs_n::<3>(state, out),
            4 => self.rhs_n::<4>(state, out),
            5 => self.rhs_n::<5>(state, out),
            6 => self.rhs_n::<6>(state, out),
            7 => self.rhs_n::<7>(state, out),
            8 => self.rhs_n::<8>(state, out),
            n => unreachable!("{n} components exceed MAX_DIM"),
        }
    }

    fn rhs_n<const N: usize>(&self, state: &GridState, out: &mut [f64]) {
        let grid = *state.grid();
        let (nx, ny, g, stride) = (grid.nx, grid.ny, grid.ghost as isize, grid.stride());
        let (cells, _) = state.raw().as_chunks::<N>();
        let idx = |i: isize, j: isize| ((j + g) as usize) * stride + (i + g) as usize;
        let row_len = nx * N;
        let (px, mx) = (square::<N>(&self.split[0].plus), square::<N>(&self.split[0].minus));
        let (py, my) = (square::<N>(&self.split[1].plus), square::<N>(&self.split[1].minus));
        let b = square::<N>(&self.b);

        // fluxes through horizontal faces; face f lies below cell row f
        let mut gy = vec![0.0; (ny + 1) * row_len];
        self.for_chunks(&mut gy, row_len, |f, dst| {
            let (dst, _) = dst.as_chunks_mut::<N>();
            let f = f as isize;
            let rows = [idx(0, f - 2), idx(0, f - 1), idx(0, f), idx(0, f + 1)];
            for (i, d) in dst.iter_mut().enumerate() {
                let (l, r) = reconstruct(
                    &cells[rows[0] + i],
                    &cells[rows[1] + i],
                    &cells[rows[2] + i],
                    &cells[rows[3] + i],
                );
                *d = upwind(&py, &my, &l, &r);
            }
        });

        let (rdx, rdy) = (1.0 / grid.dx, 1.0 / grid.dy);
        self.for_chunks(out, row_len, |j, dst| {
            let (dst, _) = dst.as_chunks_mut::<N>();
            let jj = j as isize;
            // row[k] is cell k - 2; the face left of cell f uses row[f..f + 4]
            let row = &cells[idx(-2, jj)..idx(nx as isize + 2, jj)];
            let (below, _) = gy[j * row_len..(j + 1) * row_len].as_chunks::<N>();
            let (above, _) = gy[(j + 1) * row_len..(j + 2) * row_len].as_chunks::<N>();
            let face = |f: usize| {
                let (l, r) = reconstruct(&row[f], &row[f + 1], &row[f + 2], &row[f + 3]);
                upwind(&px, &mx, &l, &r)
            };
            let mut west = face(0);
            for (i, d) in dst.iter_mut().enumerate() {
                let east = face(i + 1);
                let w = &row[i + 2];
                for c in 0..N {
                    let mut src = 0.0;
                    for q in 0..N {
                        src += b[c][q] * w[q];
                    }
                    d[c] = -(east[c] - west[c]) * rdx - (above[i][c] - below[i][c]) * rdy - src;
                }
                west = east;
            }
        });
    }

    /// One SSP-RK2 step of size `dt`; ghosts are filled on exit.
    pub fn step(&self, state: &mut GridState, dt: f64) -> Result<StepReport> {
        let grid = *state.grid();
        let row_len = grid.nx * state.n();
        let mut k = vec![0.0; grid.ny * row_len];

        self.fill_ghosts(state)?;
        self.rhs(state, &mut k);
        let mut stage = state.clone();
        for j in 0..grid.ny {
            let kr = &k[j * row_len..(j + 1) * row_len];
            for (v, d) in stage.interior_row_mut(j).iter_mut().zip(kr) {
                *v += dt * d;
            }
        }
        self.fill_ghosts(&mut stage)?;
        self.rhs(&stage, &mut k);
        for j in 0..grid.ny {
            let kr = &k[j * row_len..(j + 1) * row_len];
            let sr = stage.interior_row(j).to_vec();
            for ((v, s), d) in state.interior_row_mut(j).iter_mut().zip(&sr).zip(kr) {
                *v = 0.5 * *v + 0.5 * (s + dt * d);
            }
        }
        state.time += dt;
        let norm = state.norm_sq().sqrt();
        if norm.is_finite() {
            self.fill_ghosts(state)?;
        }
        Ok(StepReport {
            dt,
            max_wave_speed: self.max_wave_speed(),
            norm,
        })
    }

    /// Steps until `t_end`, clipping the last step to land on it. Observers
    /// see the initial state and the state after every step.
    pub fn run(
        &self,
        state: &mut GridState,
        t_end: f64,
        observers: &mut [&mut dyn Observer],
    ) -> Result<RunSummary> {
        if !(t_end >= state.time && t_end.is_finite()) {
            return Err(Error::params(format!(
                "t_end = {t_end} precedes the initial time {}",
                state.time
            )));
        }
        if !state.is_finite() {
            return Err(Error::invalid("initial state is not finite"));
        }
        let dt = self.time_step(state.grid());
        self.fill_ghosts(state)?;
        let ctx = StepContext {
            step: 0,
            report: None,
        };
        for o in observers.iter_mut() {
            o.observe(state, &ctx)?;
        }
        let eps = 1e-12 * t_end.abs().max(1.0);
        let mut steps = 0;
        while t_end - state.time > eps {
            let remaining = t_end - state.time;
            let last = remaining <= dt * (1.0 + 1e-9);
            let h = if last { remaining } else { dt };
            let report = self.step(state, h)?;
            steps += 1;
            if last {
                state.time = t_end;
            }
            if !report.norm.is_finite() {
                return Err(Error::BlowUp {
                    step: steps,
                    time: state.time,
                });
            }
            let ctx = StepContext {
                step: steps,
                report: Some(report),
            };
            for o in observers.iter_mut() {
                o.observe(state, &ctx)?;
            }
        }
        Ok(RunSummary {
            steps,
            final_time: state.time,
            dt,
        })
    }
}

/// One step at the CFL time step.
pub fn muscl_step(
    state: &mut GridState,
    sys: &SystemSpec,
    policy: &BoundaryPolicy,
    cfl: f64,
) -> Result<StepReport> {
    let solver = Solver::new(sys.clone(), policy.clone(), cfl)?;
    let dt = solver.time_step(state.grid());
    let report = solver.step(state, dt)?;
    if !report.norm.is_finite() {
        return Err(Error::BlowUp {
            step: 1,
            time: state.time,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smallmat::Mat;
    use crate::solver::Grid;
    use crate::systems::{diagonal_example, saint_venant, SaintVenantParams};

    fn scalar_advection(speed: [f64; 2]) -> SystemSpec {
        SystemSpec::unlabeled(
            SymMatrix::diag(&[speed[0]]),
            SymMatrix::diag(&[speed[1]]),
            Mat::zeros(1, 1),
        )
        .unwrap()
    }

    #[test]
    fn wave_speeds() {
        let p = SaintVenantParams {
            g: 8.0,
            h_star: 2.0,
            ..Default::default()
        };
        assert!((max_wave_speed(&saint_venant(&p).unwrap()) - 6.0).abs() < 1e-13);
        let d = diagonal_example(4.0).unwrap().to_system();
        assert!((max_wave_speed(&d) - 1.0).abs() < 1e-15);
        let zero = SystemSpec::unlabeled(SymMatrix::zeros(2), SymMatrix::zeros(2), Mat::zeros(2, 2))
            .unwrap();
        assert_eq!(max_wave_speed(&zero), 0.0);
        assert!(Solver::new(zero, BoundaryPolicy::transmissive(), 0.5).is_err());
    }

    #[test]
    fn scalar_split_is_classical_upwind() {
        for a in [-1.5, 0.0, 2.0] {
            let s = FluxSplit::new(&SymMatrix::diag(&[a]));
            let out = upwind(&square::<1>(&s.plus), &square::<1>(&s.minus), &[0.3], &[-0.7]);
            let want = if a > 0.0 { a * 0.3 } else { a * -0.7 };
            assert_eq!(out[0], want);
        }
    }

    #[test]
    fn constant_state_is_preserved() {
        let p = SaintVenantParams::default();
        let sys = saint_venant(&p).unwrap();
        let sys0 = SystemSpec::new(sys.a1().clone(), sys.a2().clone(), Mat::zeros(3, 3), sys.labels().to_vec()).unwrap();
        let grid = Grid::new(12, 5, [0.0, 0.0], 3.0, 1.0).unwrap();
        let mut s = GridState::from_fn(grid, 3, |_| vec![1.0, -0.5, 0.25]);
        let solver = Solver::new(sys0, BoundaryPolicy::transmissive(), 0.5).unwrap();
        solver.run(&mut s, 0.2, &mut []).unwrap();
        for j in 0..5 {
            for w in s.interior_row(j).chunks(3) {
                assert!((w[0] - 1.0).abs() <= 1e-14);
                assert!((w[1] + 0.5).abs() <= 1e-14);
                assert!((w[2] - 0.25).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn zero_end_time_observes_once() {
        let sys = scalar_advection([1.0, 0.0]);
        let grid = Grid::new(4, 4, [0.0, 0.0], 1.0, 1.0).unwrap();
        let mut s = GridState::zeros(grid, 1);
        let solver = Solver::new(sys, BoundaryPolicy::transmissive(), 0.5).unwrap();
        let mut calls = 0;
        let mut obs = |_: &GridState, ctx: &StepContext| {
            assert_eq!(ctx.step, 0);
            calls += 1;
            Ok(())
        };
        let summary = solver.run(&mut s, 0.0, &mut [&mut obs]).unwrap();
        assert_eq!(summary.steps, 0);
        assert_eq!(calls, 1);
    }

    #[test]
    fn final_step_lands_on_end_time() {
        let sys = scalar_advection([1.0, 0.5]);
        let grid = Grid::new(8, 8, [0.0, 0.0], 1.0, 1.0).unwrap();
        let mut s = GridState::from_fn(grid, 1, |xy| vec![xy[0]]);
        let solver = Solver::new(sys, BoundaryPolicy::transmissive(), 0.5).unwrap();
        let summary = solver.run(&mut s, 0.137, &mut []).unwrap();
        assert_eq!(s.time, 0.137);
        assert_eq!(summary.final_time, 0.137);
    }

    #[test]
    fn blow_up_is_reported() {
        let sys = scalar_advection([1.0, 0.0]);
        let grid = Grid::new(4, 4, [0.0, 0.0], 1.0, 1.0).unwrap();
        let mut s = GridState::from_fn(grid, 1, |_| vec![1e200]);
        let b = SystemSpec::unlabeled(SymMatrix::diag(&[1.0]), SymMatrix::diag(&[0.0]), Mat::from_diag(&[-1e300]))
            .unwrap();
        let solver = Solver::new(b, BoundaryPolicy::transmissive(), 0.5).unwrap();
        let err = solver.run(&mut s, 1.0, &mut []).unwrap_err();
        assert!(matches!(err, Error::BlowUp { step: 1, .. }), "{err}");
        let _ = sys;
    }

    #[test]
    fn execution_modes_agree_bitwise() {
        let spec = diagonal_example(4.0).unwrap();
        let sys = spec.to_system();
        let grid = Grid::new(16, 16, [0.0, 0.0], 1.0, 1.0).unwrap();
        let init = GridState::from_fn(grid, 3, |xy| vec![xy[0].sin(), xy[1].cos(), xy[0] * xy[1]]);
        let run = |exec| {
            let solver = Solver::new(sys.clone(), BoundaryPolicy::diagonal(spec.clone()), 0.5)
                .unwrap()
                .with_execution(exec);
            let mut s = init.clone();
            solver.run(&mut s, 0.1, &mut []).unwrap();
            s
        };
        assert_eq!(run(Execution::Sequential).raw(), run(Execution::Parallel).raw());
    }
}
