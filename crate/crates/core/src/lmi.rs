//! Stabilization LMI, feasible Lyapunov potentials and the Saint-Venant
//! closed-form conditions.
//!
//! For an affine potential `mu(x) = m . x + c0` and decay rate `C`, the
//! assembled matrix is
//!
//! ```text
//! A(m) = C Id - 2 chi B_sym + m_1 A1 + m_2 A2,   B_sym = (B + B^T) / 2
//! ```
//!
//! and the potential is feasible when `A(m) <= 0`.

use crate::error::{Error, Result};
use crate::smallmat::{classify_definiteness, Definiteness, SymMatrix, DEFAULT_TOL};
use crate::systems::{ssc_to_symmetric, validate_ssc, SaintVenantParams, SscSystem, SystemSpec};

/// Exponents `j` of the scaling search `K = 2^j`.
pub const K_SEARCH: std::ops::RangeInclusive<i32> = -10..=30;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialSpec {
    /// Gradient coefficients of the affine potential.
    pub m: [f64; 2],
    /// Offset of the potential.
    pub c0: f64,
    /// Proposed decay rate.
    pub decay_c: f64,
    /// Weight of the coupling term.
    pub chi: f64,
}

impl PotentialSpec {
    /// Potential with the coupling weight of the unscaled LMI (`chi = 1`).
    pub fn new(m: [f64; 2], c0: f64, decay_c: f64) -> Self {
        PotentialSpec {
            m,
            c0,
            decay_c,
            chi: 1.0,
        }
    }

    /// Saint-Venant potential `m = (m, 0)` with coupling scale `chi` as it
    /// appears in the displayed Saint-Venant matrix, whose diagonal carries
    /// `-4 chi k`. In terms of the generic assembly this is a coupling weight
    /// of `2 chi`.
    pub fn saint_venant(m: f64, chi: f64, decay_c: f64) -> Self {
        PotentialSpec {
            m: [m, 0.0],
            c0: 0.0,
            decay_c,
            chi: 2.0 * chi,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m.iter().all(|v| v.is_finite()) && self.c0.is_finite()) {
            return Err(Error::params("potential coefficients must be finite"));
        }
        if !(self.decay_c > 0.0 && self.decay_c.is_finite()) {
            return Err(Error::params(format!(
                "decay rate must be positive, got {}",
                self.decay_c
            )));
        }
        if !(self.chi >= 0.0 && self.chi.is_finite()) {
            return Err(Error::params(format!("chi must be nonnegative, got {}", self.chi)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LmiVerdict {
    /// `lambda_max(A(m)) <= tol`.
    pub feasible: bool,
    /// `lambda_max(A(m)) < -tol`.
    pub strictly_feasible: bool,
    pub lambda_max: f64,
    /// Absolute tolerance actually applied.
    pub tol: f64,
    pub matrix: SymMatrix,
}

/// `C Id - 2 chi B_sym + sum_k m_k A_k`.
pub fn assemble_lmi(sys: &SystemSpec, p: &PotentialSpec) -> Result<SymMatrix> {
    p.validate()?;
    let n = sys.n();
    let out = SymMatrix::identity(n)
        .scale(p.decay_c)
        .add(&sys.b_sym().scale(-2.0 * p.chi))
        .add(&sys.a1().scale(p.m[0]))
        .add(&sys.a2().scale(p.m[1]));
    Ok(out)
}

pub fn check_feasibility(sys: &SystemSpec, p: &PotentialSpec) -> Result<LmiVerdict> {
    let matrix = assemble_lmi(sys, p)?;
    let Definiteness {
        lambda_max, tol, ..
    } = classify_definiteness(&matrix, DEFAULT_TOL)?;
    Ok(LmiVerdict {
        feasible: lambda_max <= tol,
        strictly_feasible: lambda_max < -tol,
        lambda_max,
        tol,
        matrix,
    })
}

/// Potential built from an SSC system together with the scaling that
/// produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstructedPotential {
    pub potential: PotentialSpec,
    /// Scaling `K`; the potential has `m_k = alpha_k / K`, `c0 = ln K`.
    pub k_scale: f64,
    pub verdict: LmiVerdict,
    /// Symmetric system the verdict refers to.
    pub system: SystemSpec,
}

/// Searches `K = 2^j`, `j = -10..=30`, for the smallest scaling whose
/// potential `m_k = alpha_k / K` is feasible at decay rate `c` on the
/// symmetrized system.
pub fn construct_potential_from_ssc(s: &SscSystem, c: f64) -> Result<ConstructedPotential> {
    let report = validate_ssc(s)?;
    if !report.passes() {
        return Err(Error::invalid(report.failures().join("; ")));
    }
    let system = ssc_to_symmetric(s)?;
    for j in K_SEARCH {
        let k_scale = 2f64.powi(j);
        let potential = PotentialSpec::new(
            [s.alpha[0] / k_scale, s.alpha[1] / k_scale],
            k_scale.ln(),
            c,
        );
        let verdict = check_feasibility(&system, &potential)?;
        if verdict.feasible {
            return Ok(ConstructedPotential {
                potential,
                k_scale,
                verdict,
                system,
            });
        }
    }
    Err(Error::NoFeasibleK { rate: c })
}

/// Largest decay rate admitted by the Saint-Venant conditions for `m = -1`,
/// `chi = 2L`: `w* + 4Lk - sqrt(16 L^2 k^2 + g H*)`. May be negative.
pub fn sv_max_decay_rate(p: &SaintVenantParams) -> f64 {
    let lk = p.domain_l * p.k_drag;
    p.w_star + 4.0 * lk - (16.0 * lk * lk + p.g * p.h_star).sqrt()
}

/// Closed-form test of `A(m) <= 0` for the Saint-Venant system with
/// `m = (m, 0)`, coupling scale `chi` (see [`PotentialSpec::saint_venant`])
/// and decay rate `c`.
pub fn sv_feasibility_conditions(p: &SaintVenantParams, m: f64, chi: f64, c: f64) -> bool {
    let a = c + m * p.w_star;
    if a >= 0.0 {
        return false;
    }
    let minor_ratio = (a * a - m * m * p.g * p.h_star) / (4.0 * p.k_drag * a);
    chi >= minor_ratio
}
