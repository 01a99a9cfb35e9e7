use crate::boundary::{
    diag_control_value, diag_partition, sv_boundary_values, spillway_source_x, Side,
    SvControlGains,
};
use crate::error::{Error, Result};
use crate::systems::{DiagSystemSpec, SaintVenantParams, SystemSpec};

use super::grid::{Grid, GridState};

/// Per-component condition used by [`SideCondition::Components`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ComponentBc {
    /// Copy of the interior.
    Transmissive,
    /// Odd reflection, zero face value.
    Zero,
    /// Odd reflection about the scalar control `u`, face value `u`.
    Control,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SideCondition {
    Transmissive,
    /// Odd reflection of every component.
    ZeroState,
    /// Even reflection with the normal velocity negated, for the
    /// `(h, w, v)` layout.
    WallNormalZero,
    /// Controlled Saint-Venant boundary state in both ghost layers.
    SvControl,
    Components(Vec<ComponentBc>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SvControlSetup {
    pub params: SaintVenantParams,
    pub gains: SvControlGains,
}

/// Conditions for the four sides, indexed by [`Side::index`].
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryPolicy {
    pub sides: [SideCondition; 4],
    pub saint_venant: Option<SvControlSetup>,
    pub diagonal: Option<DiagSystemSpec>,
}

impl BoundaryPolicy {
    pub fn uniform(cond: SideCondition) -> Self {
        BoundaryPolicy {
            sides: std::array::from_fn(|_| cond.clone()),
            saint_venant: None,
            diagonal: None,
        }
    }

    pub fn transmissive() -> Self {
        Self::uniform(SideCondition::Transmissive)
    }

    pub fn zero_state() -> Self {
        Self::uniform(SideCondition::ZeroState)
    }

    /// Controlled Saint-Venant boundary on all four sides.
    pub fn saint_venant(params: SaintVenantParams, gains: SvControlGains) -> Result<Self> {
        gains.validate(&params)?;
        Ok(BoundaryPolicy {
            saint_venant: Some(SvControlSetup { params, gains }),
            ..Self::uniform(SideCondition::SvControl)
        })
    }

    /// Control sets driven by `u(t)`, zero sets reflected, the rest
    /// transmissive.
    pub fn diagonal(spec: DiagSystemSpec) -> Self {
        let part = diag_partition();
        let sides = Side::ALL.map(|side| {
            SideCondition::Components(
                (0..3)
                    .map(|i| {
                        if part.control[i].contains(&side) {
                            ComponentBc::Control
                        } else if part.zero[i].contains(&side) {
                            ComponentBc::Zero
                        } else {
                            ComponentBc::Transmissive
                        }
                    })
                    .collect(),
            )
        });
        BoundaryPolicy {
            sides,
            saint_venant: None,
            diagonal: Some(spec),
        }
    }

    pub fn side(&self, side: Side) -> &SideCondition {
        &self.sides[side.index()]
    }

    pub fn check(&self, sys: &SystemSpec, grid: &Grid) -> Result<()> {
        let n = sys.n();
        for side in Side::ALL {
            match self.side(side) {
                SideCondition::WallNormalZero if n != 3 => {
                    return Err(Error::invalid(
                        "wall condition needs a 3-component (h, w, v) system",
                    ))
                }
                SideCondition::SvControl => {
                    let Some(sv) = &self.saint_venant else {
                        return Err(Error::invalid("Saint-Venant control without parameters"));
                    };
                    if n != 3 {
                        return Err(Error::invalid("Saint-Venant control on a non-3x3 system"));
                    }
                    let l = sv.params.domain_l;
                    if (grid.width() - l).abs() > 1e-9 * l {
                        return Err(Error::invalid(format!(
                            "grid width {} differs from channel length {l}",
                            grid.width()
                        )));
                    }
                }
                SideCondition::Components(c) => {
                    if c.len() != n {
                        return Err(Error::invalid(format!(
                            "{} component conditions for {n} components",
                            c.len()
                        )));
                    }
                    if c.contains(&ComponentBc::Control) && self.diagonal.is_none() {
                        return Err(Error::invalid("control component without a control law"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

/// Linear interpolation in increasing `xs`, clamped at the ends.
fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    let last = xs.len() - 1;
    if x >= xs[last] {
        return ys[last];
    }
    let k = xs.partition_point(|v| *v <= x) - 1;
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

/// Populates both ghost layers of all four sides. The bottom is filled
/// first because the Saint-Venant left control reads bottom boundary
/// heights.
pub fn fill_ghosts(state: &mut GridState, policy: &BoundaryPolicy, sys: &SystemSpec) -> Result<()> {
    let grid = *state.grid();
    policy.check(sys, &grid)?;
    if state.n() != sys.n() {
        return Err(Error::invalid("state and system dimensions differ"));
    }
    let needs_u = policy.sides.iter().any(|c| {
        matches!(c, SideCondition::Components(v) if v.contains(&ComponentBc::Control))
    });
    let u = match (&policy.diagonal, needs_u) {
        (Some(spec), true) => diag_control_value(spec, &state.interior_traces())?,
        _ => 0.0,
    };
    let n = state.n();
    let mut buf = vec![0.0; n];
    for side in [Side::Bottom, Side::Top, Side::Right, Side::Left] {
        let faces = grid.faces(side);
        match policy.side(side) {
            SideCondition::SvControl => {
                let sv = policy.saint_venant.as_ref().expect("checked");
                let spill = (side == Side::Left).then(|| {
                    let xs: Vec<f64> = (0..grid.nx).map(|i| (i as f64 + 0.5) * grid.dx).collect();
                    let hs: Vec<f64> = (0..grid.nx)
                        .map(|i| state.cell(i as isize, -1)[0])
                        .collect();
                    (xs, hs)
                });
                for a in 0..faces {
                    let (oi, oj) = grid.outermost(side, a);
                    let c = state.cell(oi, oj);
                    let trace = [c[0], c[1], c[2]];
                    let arc = (a as f64 + 0.5) / faces as f64;
                    let h_sp = spill.as_ref().map_or(0.0, |(xs, hs)| {
                        interp(xs, hs, spillway_source_x(&sv.params, arc * grid.height()))
                    });
                    let b = sv_boundary_values(&sv.gains, &sv.params, side, arc, &trace, h_sp)?;
                    for layer in 1..=grid.ghost {
                        let ((gi, gj), _) = grid.ghost_and_mirror(side, a, layer);
                        state.cell_mut(gi, gj).copy_from_slice(&b);
                    }
                }
            }
            cond => {
                for a in 0..faces {
                    for layer in 1..=grid.ghost {
                        let ((gi, gj), (mi, mj)) = grid.ghost_and_mirror(side, a, layer);
                        let (oi, oj) = grid.outermost(side, a);
                        let mirror = state.cell(mi, mj);
                        let outer = state.cell(oi, oj);
                        match cond {
                            SideCondition::Transmissive => buf.copy_from_slice(outer),
                            SideCondition::ZeroState => {
                                for (b, m) in buf.iter_mut().zip(mirror) {
                                    *b = -m;
                                }
                            }
                            SideCondition::WallNormalZero => {
                                buf.copy_from_slice(mirror);
                                let k = if side.is_vertical() { 1 } else { 2 };
                                buf[k] = -buf[k];
                            }
                            SideCondition::Components(bcs) => {
                                for (c, bc) in bcs.iter().enumerate() {
                                    buf[c] = match bc {
                                        ComponentBc::Transmissive => outer[c],
                                        ComponentBc::Zero => -mirror[c],
                                        ComponentBc::Control => 2.0 * u - mirror[c],
                                    };
                                }
                            }
                            SideCondition::SvControl => unreachable!(),
                        }
                        state.cell_mut(gi, gj).copy_from_slice(&buf);
                    }
                }
            }
        }
    }
    Ok(())
}
