//! Dense linear algebra for small real matrices.
//!
//! Everything in this crate works with Jacobians of at most a handful of
//! components, so matrices are stored as flat row-major `Vec<f64>` and all
//! algorithms are the straightforward O(n^3) ones. The symmetric eigenproblem
//! is solved with cyclic Jacobi rotations, which gives orthogonal eigenvectors
//! to machine precision and is plenty fast for n <= 8.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Largest dimension accepted by [`SymMatrix`].
pub const MAX_DIM: usize = 8;

/// Default absolute tolerance for definiteness decisions.
pub const DEFAULT_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 50;
const JACOBI_REL_TOL: f64 = 1e-14;

/// General dense real matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// Builds a matrix from row slices. All rows must have the same length.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut data = Vec::with_capacity(nrows * ncols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != ncols {
                return Err(Error::invalid(format!(
                    "row {i} has {} entries, expected {ncols}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Ok(Mat {
            rows: nrows,
            cols: ncols,
            data,
        })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, x.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn add(&self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * s).collect(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Induced infinity norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest |a_ij - a_ji|.
    pub fn asymmetry(&self) -> f64 {
        assert!(self.is_square());
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn block(&self, r0: usize, c0: usize, nr: usize, nc: usize) -> Mat {
        Mat::from_fn(nr, nc, |i, j| self[(r0 + i, c0 + j)])
    }

    pub fn set_block(&mut self, r0: usize, c0: usize, b: &Mat) {
        for i in 0..b.rows {
            for j in 0..b.cols {
                self[(r0 + i, c0 + j)] = b[(i, j)];
            }
        }
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> f64 {
        assert!(self.is_square(), "det of non-square matrix");
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].abs().total_cmp(&a[j * n + k].abs()))
                .unwrap_or(k);
            if a[p * n + k] == 0.0 {
                return 0.0;
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                det = -det;
            }
            let piv = a[k * n + k];
            det *= piv;
            for i in (k + 1)..n {
                let f = a[i * n + k] / piv;
                for j in k..n {
                    a[i * n + j] -= f * a[k * n + j];
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

/// Dense real symmetric matrix of dimension 1..=[`MAX_DIM`].
///
/// Symmetry is exact: constructors either reject asymmetric input or average
/// the two triangles.
#[derive(Clone, PartialEq)]
pub struct SymMatrix(Mat);

impl SymMatrix {
    fn check_dim(n: usize) -> Result<()> {
        if n == 0 || n > MAX_DIM {
            return Err(Error::invalid(format!(
                "symmetric matrix dimension {n} outside 1..={MAX_DIM}"
            )));
        }
        Ok(())
    }

    /// Accepts the matrix only if it is exactly symmetric.
    pub fn new(m: Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid(format!(
                "matrix is {}x{}, not square",
                m.rows(),
                m.cols()
            )));
        }
        Self::check_dim(m.rows())?;
        if m.asymmetry() != 0.0 {
            return Err(Error::invalid(format!(
                "matrix is not symmetric (max |a_ij - a_ji| = {:e})",
                m.asymmetry()
            )));
        }
        Ok(SymMatrix(m))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        Self::new(Mat::from_rows(rows)?)
    }

    /// Symmetric part `(M + M^T)/2`.
    pub fn symmetrized(m: &Mat) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("cannot symmetrize a non-square matrix"));
        }
        Self::check_dim(m.rows())?;
        let n = m.rows();
        Ok(SymMatrix(Mat::from_fn(n, n, |i, j| {
            if i == j {
                m[(i, i)]
            } else {
                0.5 * (m[(i, j)] + m[(j, i)])
            }
        })))
    }

    pub fn identity(n: usize) -> Self {
        SymMatrix(Mat::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        SymMatrix(Mat::zeros(n, n))
    }

    pub fn diag(d: &[f64]) -> Self {
        SymMatrix(Mat::from_diag(d))
    }

    pub fn dim(&self) -> usize {
        self.0.rows()
    }

    pub fn as_mat(&self) -> &Mat {
        &self.0
    }

    pub fn into_mat(self) -> Mat {
        self.0
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.norm_inf()
    }

    pub fn add(&self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix(self.0.add(&rhs.0))
    }

    pub fn scale(&self, s: f64) -> SymMatrix {
        SymMatrix(self.0.scale(s))
    }

    /// `Q^T M Q`, symmetrized to clean up rounding.
    pub fn congruence(&self, q: &Mat) -> SymMatrix {
        let m = q.transpose().matmul(&self.0).matmul(q);
        SymMatrix::symmetrized(&m).expect("congruence keeps the matrix square")
    }

    /// Quadratic form `x^T M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        let mx = self.0.matvec(x);
        mx.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    pub fn eigen(&self) -> Result<EigenDecomposition> {
        eigen_sym(self)
    }
}

impl Index<(usize, usize)> for SymMatrix {
    type Output = f64;

    fn index(&self, idx: (usize, usize)) -> &f64 {
        &self.0[idx]
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// `M = T diag(eigenvalues) T^T` with `T` orthogonal.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: Mat,
}

impl EigenDecomposition {
    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// `T diag(f(lambda)) T^T`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> SymMatrix {
        let t = &self.eigenvectors;
        let n = t.rows();
        let mut out = Mat::zeros(n, n);
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let fl = f(lam);
            for i in 0..n {
                let tik = t[(i, k)] * fl;
                for j in 0..n {
                    out[(i, j)] += tik * t[(j, k)];
                }
            }
        }
        SymMatrix::symmetrized(&out).expect("square by construction")
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.map_spectrum(|l| l)
    }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
pub fn eigen_sym(m: &SymMatrix) -> Result<EigenDecomposition> {
    if !m.as_mat().is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let n = m.dim();
    let mut a = m.as_mat().clone();
    let mut v = Mat::identity(n);
    let scale = m.norm_inf();
    let threshold = JACOBI_REL_TOL * scale;

    let off = |a: &Mat| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[(i, j)] * a[(i, j)];
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off(&a) > threshold {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::Numerical(format!(
                "Jacobi iteration did not converge in {JACOBI_MAX_SWEEPS} sweeps"
            )));
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                a[(p, q)] = 0.0;
                a[(q, p)] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]));
    let eigenvalues = order.iter().map(|&i| a[(i, i)]).collect();
    let eigenvectors = Mat::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(EigenDecomposition {
        eigenvalues,
        eigenvectors,
    })
}

fn spd_eigen(m: &SymMatrix) -> Result<EigenDecomposition> {
    let eig = eigen_sym(m)?;
    let tol = effective_tol(m, DEFAULT_TOL);
    if eig.lambda_min() <= tol {
        return Err(Error::NotSpd {
            lambda_min: eig.lambda_min(),
        });
    }
    Ok(eig)
}

/// Principal square root of a symmetric positive definite matrix.
pub fn sqrt_spd(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(spd_eigen(m)?.map_spectrum(f64::sqrt))
}

/// Inverse of the principal square root.
pub fn inv_sqrt_spd(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(spd_eigen(m)?.map_spectrum(|l| 1.0 / l.sqrt()))
}

/// Inverse of a symmetric positive definite matrix.
pub fn inv_spd(m: &SymMatrix) -> Result<SymMatrix> {
    Ok(spd_eigen(m)?.map_spectrum(|l| 1.0 / l))
}

/// Absolute tolerance `tol`, scaled by `||M||_inf` when that exceeds one.
pub fn effective_tol(m: &SymMatrix, tol: f64) -> f64 {
    tol * m.norm_inf().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DefinitenessClass {
    PositiveDefinite,
    PositiveSemi,
    Indefinite,
    NegativeSemi,
    NegativeDefinite,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Definiteness {
    pub class: DefinitenessClass,
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// The scaled tolerance actually used.
    pub tol: f64,
}

impl Definiteness {
    /// `lambda_max <= tol`; the zero matrix is both positive and negative semidefinite.
    pub fn is_negative_semidefinite(&self) -> bool {
        self.lambda_max <= self.tol
    }

    pub fn is_positive_semidefinite(&self) -> bool {
        self.lambda_min >= -self.tol
    }

    pub fn is_positive_definite(&self) -> bool {
        self.class == DefinitenessClass::PositiveDefinite
    }

    pub fn is_negative_definite(&self) -> bool {
        self.class == DefinitenessClass::NegativeDefinite
    }
}

/// Classifies `m` from its extreme eigenvalues.
///
/// `tol` is absolute and is multiplied by `||M||_inf` when that exceeds one.
/// Definite classes take precedence over semidefinite ones, and a matrix
/// with spectrum inside `[-tol, tol]` is reported as `NegativeSemi`.
pub fn classify_definiteness(m: &SymMatrix, tol: f64) -> Result<Definiteness> {
    let eig = eigen_sym(m)?;
    let tol = effective_tol(m, tol);
    let (lmin, lmax) = (eig.lambda_min(), eig.lambda_max());
    let class = if lmin > tol {
        DefinitenessClass::PositiveDefinite
    } else if lmax < -tol {
        DefinitenessClass::NegativeDefinite
    } else if lmax <= tol {
        DefinitenessClass::NegativeSemi
    } else if lmin >= -tol {
        DefinitenessClass::PositiveSemi
    } else {
        DefinitenessClass::Indefinite
    };
    Ok(Definiteness {
        class,
        lambda_min: lmin,
        lambda_max: lmax,
        tol,
    })
}
