//! Hyperbolic system specifications.
//!
//! All systems are two-dimensional with constant coefficients and written as
//!
//! ```text
//! w_t + A1 w_x + A2 w_y + B w = 0
//! ```
//!
//! with symmetric `A1`, `A2`. Systems in block form with a symmetrizer
//! (structural stability condition) are described by [`SscSystem`] and are
//! brought into the symmetric form by [`ssc_to_symmetric`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smallmat::{
    classify_definiteness, inv_sqrt_spd, sqrt_spd, Mat, SymMatrix, DEFAULT_TOL,
};

/// Relative tolerance for the symmetry of `A0 * Abar_k`.
pub const SYMMETRIZER_TOL: f64 = 1e-10;

/// Relative threshold for the invertibility of the relaxation block.
pub const SINGULAR_TOL: f64 = 1e-12;

/// Constant-coefficient symmetric hyperbolic system in two space dimensions.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    jacobians: [SymMatrix; 2],
    b: Mat,
    labels: Vec<String>,
}

impl SystemSpec {
    pub fn new(a1: SymMatrix, a2: SymMatrix, b: Mat, labels: Vec<String>) -> Result<Self> {
        let n = a1.dim();
        if a2.dim() != n || b.rows() != n || b.cols() != n {
            return Err(Error::invalid(format!(
                "dimension mismatch: A1 is {n}x{n}, A2 is {m}x{m}, B is {}x{}",
                b.rows(),
                b.cols(),
                m = a2.dim()
            )));
        }
        if labels.len() != n {
            return Err(Error::invalid(format!(
                "{} labels for a system of {n} components",
                labels.len()
            )));
        }
        if !(a1.as_mat().is_finite() && a2.as_mat().is_finite() && b.is_finite()) {
            return Err(Error::invalid("system matrices must be finite"));
        }
        Ok(SystemSpec {
            jacobians: [a1, a2],
            b,
            labels,
        })
    }

    /// Same as [`SystemSpec::new`] with labels `w1..wn`.
    pub fn unlabeled(a1: SymMatrix, a2: SymMatrix, b: Mat) -> Result<Self> {
        let labels = (1..=a1.dim()).map(|i| format!("w{i}")).collect();
        Self::new(a1, a2, b, labels)
    }

    pub fn n(&self) -> usize {
        self.jacobians[0].dim()
    }

    /// Jacobian in direction `k` (0 = x, 1 = y).
    pub fn jacobian(&self, k: usize) -> &SymMatrix {
        &self.jacobians[k]
    }

    pub fn a1(&self) -> &SymMatrix {
        &self.jacobians[0]
    }

    pub fn a2(&self) -> &SymMatrix {
        &self.jacobians[1]
    }

    pub fn b(&self) -> &Mat {
        &self.b
    }

    pub fn b_sym(&self) -> SymMatrix {
        SymMatrix::symmetrized(&self.b).expect("B is square")
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

/// Linearized Saint-Venant equations around a subcritical steady state.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaintVenantParams {
    /// Gravitational acceleration.
    pub g: f64,
    /// Steady water height H*.
    pub h_star: f64,
    /// Steady x-velocity w*, `0 < w* < sqrt(g H*)`.
    pub w_star: f64,
    /// Steady y-velocity, must be zero.
    pub v_star: f64,
    /// Viscous drag coefficient k.
    pub k_drag: f64,
    /// Coriolis coefficient l.
    pub l_coriolis: f64,
    /// Channel length L; the domain is `[0, L] x [0, 1]`.
    pub domain_l: f64,
}

impl Default for SaintVenantParams {
    /// g = 9.81, H* = 2, w* = 2, k = 2, l = 1, L = 3.
    fn default() -> Self {
        SaintVenantParams {
            g: 9.81,
            h_star: 2.0,
            w_star: 2.0,
            v_star: 0.0,
            k_drag: 2.0,
            l_coriolis: 1.0,
            domain_l: 3.0,
        }
    }
}

impl SaintVenantParams {
    /// Wave celerity `sqrt(g H*)`.
    pub fn celerity(&self) -> f64 {
        (self.g * self.h_star).sqrt()
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.g,
            self.h_star,
            self.w_star,
            self.v_star,
            self.k_drag,
            self.l_coriolis,
            self.domain_l,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::params("Saint-Venant parameters must be finite"));
        }
        if self.g <= 0.0 || self.h_star <= 0.0 {
            return Err(Error::params("g and h_star must be positive"));
        }
        if self.domain_l <= 0.0 {
            return Err(Error::params("domain_l must be positive"));
        }
        if !(self.w_star > 0.0 && self.w_star < self.celerity()) {
            return Err(Error::params(format!(
                "w_star = {} must satisfy 0 < w_star < sqrt(g h_star) = {}",
                self.w_star,
                self.celerity()
            )));
        }
        if self.v_star != 0.0 {
            return Err(Error::params("v_star must be 0"));
        }
        if self.k_drag <= 0.0 {
            return Err(Error::params("k_drag must be positive"));
        }
        if self.l_coriolis <= 0.0 {
            return Err(Error::params("l_coriolis must be positive"));
        }
        Ok(())
    }
}

/// Saint-Venant system in the variables `(h~, w, v)`.
pub fn saint_venant(p: &SaintVenantParams) -> Result<SystemSpec> {
    p.validate()?;
    let (w, v, c) = (p.w_star, p.v_star, p.celerity());
    let a1 = SymMatrix::from_rows(&[[w, c, 0.0], [c, w, 0.0], [0.0, 0.0, w]])?;
    let a2 = SymMatrix::from_rows(&[[v, 0.0, c], [0.0, v, 0.0], [c, 0.0, v]])?;
    let (k, l) = (p.k_drag, p.l_coriolis);
    let b = Mat::from_rows(&[[0.0, 0.0, 0.0], [0.0, k, -l], [0.0, l, k]])?;
    SystemSpec::new(a1, a2, b, vec!["h".into(), "w".into(), "v".into()])
}

/// Three-component system with diagonal Jacobians and an indefinite coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagSystemSpec {
    /// Row `i` is the transport direction of component `i`.
    pub rays: [[f64; 2]; 3],
    pub b: SymMatrix,
    /// Target decay parameter C_L.
    pub c_l: f64,
}

pub fn diagonal_example(c_l: f64) -> Result<DiagSystemSpec> {
    if !(c_l > 0.0 && c_l.is_finite()) {
        return Err(Error::params(format!("c_l = {c_l} must be positive")));
    }
    Ok(DiagSystemSpec {
        rays: [[1.0, 1.0], [1.0, -1.0], [-1.0, -1.0]],
        b: SymMatrix::from_rows(&[[-1.0, 0.0, 0.0], [0.0, 2.0, -1.0], [0.0, -1.0, 1.0]])?,
        c_l,
    })
}

impl DiagSystemSpec {
    pub fn to_system(&self) -> SystemSpec {
        let a1 = SymMatrix::diag(&self.rays.map(|r| r[0]));
        let a2 = SymMatrix::diag(&self.rays.map(|r| r[1]));
        SystemSpec::unlabeled(a1, a2, self.b.as_mat().clone()).expect("3x3 by construction")
    }
}

/// Block system `U_t + sum_k Abar_k U_x_k = Bbar U` with `U = (u, q)`,
///
/// ```text
/// Abar_k = [ a_k  b_k ]      Bbar = [ 0   0  ]
///          [ c_k  d_k ]             [ 0  -e  ]
/// ```
///
/// where `u` has `n - r` and `q` has `r` components. The relaxation block
/// enters the right-hand side as `-e q`, so that property (ii),
/// `X2 e + e^T X2 > 0`, expresses dissipation.
#[derive(Clone, Debug, PartialEq)]
pub struct SscSystem {
    pub n: usize,
    pub r: usize,
    pub a: [Mat; 2],
    pub b: [Mat; 2],
    pub c: [Mat; 2],
    pub d: [Mat; 2],
    pub e: Mat,
    pub x1: SymMatrix,
    pub x2: SymMatrix,
    pub alpha: [f64; 2],
}

impl SscSystem {
    pub fn check_dims(&self) -> Result<()> {
        let (n, r) = (self.n, self.r);
        if r == 0 || r >= n {
            return Err(Error::invalid(format!("need 0 < r < n, got n = {n}, r = {r}")));
        }
        let m = n - r;
        let shape = |name: &str, mat: &Mat, rows: usize, cols: usize| -> Result<()> {
            if mat.rows() != rows || mat.cols() != cols {
                return Err(Error::invalid(format!(
                    "{name} is {}x{}, expected {rows}x{cols}",
                    mat.rows(),
                    mat.cols()
                )));
            }
            Ok(())
        };
        for k in 0..2 {
            shape(&format!("a{}", k + 1), &self.a[k], m, m)?;
            shape(&format!("b{}", k + 1), &self.b[k], m, r)?;
            shape(&format!("c{}", k + 1), &self.c[k], r, m)?;
            shape(&format!("d{}", k + 1), &self.d[k], r, r)?;
        }
        shape("e", &self.e, r, r)?;
        shape("x1", self.x1.as_mat(), m, m)?;
        shape("x2", self.x2.as_mat(), r, r)?;
        Ok(())
    }

    /// Full Jacobian `Abar_k`.
    pub fn jacobian(&self, k: usize) -> Mat {
        let m = self.n - self.r;
        let mut out = Mat::zeros(self.n, self.n);
        out.set_block(0, 0, &self.a[k]);
        out.set_block(0, m, &self.b[k]);
        out.set_block(m, 0, &self.c[k]);
        out.set_block(m, m, &self.d[k]);
        out
    }

    /// `A0 = diag(X1, X2)`.
    pub fn symmetrizer(&self) -> SymMatrix {
        let m = self.n - self.r;
        let mut a0 = Mat::zeros(self.n, self.n);
        a0.set_block(0, 0, self.x1.as_mat());
        a0.set_block(m, m, self.x2.as_mat());
        SymMatrix::new(a0).expect("block diagonal of symmetric blocks")
    }

    /// Right-hand-side matrix `Bbar = diag(0, -e)`.
    pub fn source_matrix(&self) -> Mat {
        let m = self.n - self.r;
        let mut out = Mat::zeros(self.n, self.n);
        out.set_block(m, m, &self.e.scale(-1.0));
        out
    }

    /// `sum_k alpha_k a_k`.
    pub fn drift_block(&self) -> Mat {
        self.a[0].scale(self.alpha[0]).add(&self.a[1].scale(self.alpha[1]))
    }
}

/// Outcome of checking properties (i)-(iii) of an [`SscSystem`].
#[derive(Clone, Debug, PartialEq)]
pub struct SscValidation {
    /// (i) every `A0 Abar_k` is symmetric within tolerance.
    pub symmetrizable: bool,
    /// Largest relative asymmetry of `A0 Abar_k`.
    pub symmetry_defect: f64,
    /// `e` passes the near-singularity threshold.
    pub e_invertible: bool,
    /// (ii) `X2 e + e^T X2` is positive definite (and `e` invertible).
    pub dissipative: bool,
    pub dissipation_lambda_min: f64,
    /// (iii), real-part reading: every eigenvalue of `sum alpha_k a_k` has
    /// negative real part.
    pub drift_stable: bool,
    /// (iii), symmetric reading: the symmetric part of
    /// `X1^{1/2} (sum alpha_k a_k) X1^{-1/2}` is negative definite. Under (i)
    /// the image is symmetric and both readings coincide.
    pub drift_symmetric_negative: bool,
    pub drift_lambda_max: f64,
}

impl SscValidation {
    pub fn passes(&self) -> bool {
        self.symmetrizable && self.dissipative && self.drift_stable
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.symmetrizable {
            out.push(format!(
                "(i) A0*Abar_k not symmetric (relative defect {:e})",
                self.symmetry_defect
            ));
        }
        if !self.e_invertible {
            out.push("(ii) relaxation block e is singular".to_string());
        }
        if !self.dissipative {
            out.push(format!(
                "(ii) X2 e + e^T X2 not positive definite (lambda_min = {:e})",
                self.dissipation_lambda_min
            ));
        }
        if !self.drift_stable {
            out.push("(iii) sum alpha_k a_k has an eigenvalue with nonnegative real part".into());
        }
        out
    }
}

/// Routh-Hurwitz test: all eigenvalues of `m` have negative real part.
/// Closed form for dimensions up to 3; `None` above that.
fn hurwitz_stable(m: &Mat) -> Option<bool> {
    match m.rows() {
        1 => Some(m[(0, 0)] < 0.0),
        2 => Some(m.trace() < 0.0 && m.det() > 0.0),
        3 => {
            // lambda^3 + c2 lambda^2 + c1 lambda + c0
            let c2 = -m.trace();
            let c1 = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]
                + m[(0, 0)] * m[(2, 2)]
                - m[(0, 2)] * m[(2, 0)]
                + m[(1, 1)] * m[(2, 2)]
                - m[(1, 2)] * m[(2, 1)];
            let c0 = -m.det();
            Some(c2 > 0.0 && c0 > 0.0 && c2 * c1 > c0)
        }
        _ => None,
    }
}

pub fn validate_ssc(s: &SscSystem) -> Result<SscValidation> {
    s.check_dims()?;
    let a0 = s.symmetrizer();

    let symmetry_defect = (0..2)
        .map(|k| {
            let p = a0.as_mat().matmul(&s.jacobian(k));
            p.asymmetry() / p.norm_inf().max(1.0)
        })
        .fold(0.0, f64::max);
    let symmetrizable = symmetry_defect <= SYMMETRIZER_TOL;

    let r = s.r;
    let e_scale = s.e.max_abs();
    let e_invertible = e_scale > 0.0 && s.e.det().abs() > SINGULAR_TOL * e_scale.powi(r as i32);
    let xe = s.x2.as_mat().matmul(&s.e);
    let diss = SymMatrix::symmetrized(&xe.add(&xe.transpose()))?;
    let diss_class = classify_definiteness(&diss, DEFAULT_TOL)?;
    let dissipative = e_invertible && diss_class.is_positive_definite();

    let drift = s.drift_block();
    let x1h = sqrt_spd(&s.x1)?;
    let x1hi = inv_sqrt_spd(&s.x1)?;
    let image = x1h.as_mat().matmul(&drift).matmul(x1hi.as_mat());
    let image_class = classify_definiteness(&SymMatrix::symmetrized(&image)?, DEFAULT_TOL)?;
    let drift_symmetric_negative = image_class.is_negative_definite();
    let drift_stable = hurwitz_stable(&drift).unwrap_or(drift_symmetric_negative);

    Ok(SscValidation {
        symmetrizable,
        symmetry_defect,
        e_invertible,
        dissipative,
        dissipation_lambda_min: diss_class.lambda_min,
        drift_stable,
        drift_symmetric_negative,
        drift_lambda_max: image_class.lambda_max,
    })
}

/// Symmetric form of an SSC system in the variables `w = A0^{1/2} U`:
/// `A_k = A0^{-1/2} (A0 Abar_k) A0^{-1/2}` and
/// `B = -A0^{-1/2} (A0 Bbar) A0^{-1/2}`, so that the result reads
/// `w_t + sum_k A_k w_x_k + B w = 0`.
pub fn ssc_to_symmetric(s: &SscSystem) -> Result<SystemSpec> {
    s.check_dims()?;
    let report = validate_ssc(s)?;
    if !report.symmetrizable {
        return Err(Error::NotSymmetrizable(format!(
            "A0*Abar_k has relative asymmetry {:e} > {SYMMETRIZER_TOL:e}",
            report.symmetry_defect
        )));
    }
    let a0 = s.symmetrizer();
    let hi = inv_sqrt_spd(&a0)?;
    let transform = |m: &Mat| hi.as_mat().matmul(&a0.as_mat().matmul(m)).matmul(hi.as_mat());
    let a1 = SymMatrix::symmetrized(&transform(&s.jacobian(0)))?;
    let a2 = SymMatrix::symmetrized(&transform(&s.jacobian(1)))?;
    let b = transform(&s.source_matrix()).scale(-1.0);
    let m = s.n - s.r;
    let labels = (1..=m)
        .map(|i| format!("u{i}"))
        .chain((1..=s.r).map(|i| format!("q{i}")))
        .collect();
    SystemSpec::new(a1, a2, b, labels)
}
