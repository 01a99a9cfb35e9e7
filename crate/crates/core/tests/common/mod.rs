//! Independent oracles and random generators shared by the integration
//! tests. Nothing here calls the eigensolver of the crate.

#![allow(dead_code)]

use hypstab::smallmat::{Mat, SymMatrix};
use hypstab::systems::SscSystem;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rows(m: &Mat) -> Vec<Vec<f64>> {
    (0..m.rows()).map(|i| m.row(i).to_vec()).collect()
}

/// Cofactor expansion along the first row.
pub fn det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    match n {
        0 => 1.0,
        1 => a[0][0],
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        _ => (0..n)
            .map(|j| {
                let minor: Vec<Vec<f64>> = a[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, v)| *v).collect())
                    .collect();
                let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
                sign * a[0][j] * det(&minor)
            })
            .sum(),
    }
}

pub fn leading_minors(a: &[Vec<f64>]) -> Vec<f64> {
    (1..=a.len())
        .map(|k| {
            let sub: Vec<Vec<f64>> = a[..k].iter().map(|r| r[..k].to_vec()).collect();
            det(&sub)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    PositiveDefinite,
    NegativeDefinite,
    Indefinite,
}

/// Sylvester criterion; valid for nonsingular matrices.
pub fn sylvester(a: &[Vec<f64>]) -> Sign {
    let d = leading_minors(a);
    if d.iter().all(|v| *v > 0.0) {
        Sign::PositiveDefinite
    } else if d.iter().enumerate().all(|(k, v)| if k % 2 == 0 { *v < 0.0 } else { *v > 0.0 }) {
        Sign::NegativeDefinite
    } else {
        Sign::Indefinite
    }
}

/// Eigenvalues of a symmetric 3x3 matrix by the trigonometric formula,
/// ascending.
pub fn sym3_eigenvalues(a: &[Vec<f64>]) -> [f64; 3] {
    let p1 = a[0][1].powi(2) + a[0][2].powi(2) + a[1][2].powi(2);
    let q = (a[0][0] + a[1][1] + a[2][2]) / 3.0;
    if p1 == 0.0 {
        let mut d = [a[0][0], a[1][1], a[2][2]];
        d.sort_by(f64::total_cmp);
        return d;
    }
    let p2 = (a[0][0] - q).powi(2) + (a[1][1] - q).powi(2) + (a[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let b: Vec<Vec<f64>> = (0..3)
        .map(|i| (0..3).map(|j| (a[i][j] - if i == j { q } else { 0.0 }) / p).collect())
        .collect();
    let r = (det(&b) / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    let hi = q + 2.0 * p * phi.cos();
    let lo = q + 2.0 * p * (phi + 2.0 * std::f64::consts::PI / 3.0).cos();
    [lo, 3.0 * q - hi - lo, hi]
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> SymMatrix {
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-scale..scale);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    SymMatrix::new(m).unwrap()
}

/// Product of Givens rotations with random angles.
pub fn random_orthogonal(rng: &mut ChaCha8Rng, n: usize) -> Mat {
    let mut q = Mat::identity(n);
    for _ in 0..3 {
        for i in 0..n {
            for j in i + 1..n {
                let th: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let (c, s) = (th.cos(), th.sin());
                let mut g = Mat::identity(n);
                g[(i, i)] = c;
                g[(j, j)] = c;
                g[(i, j)] = -s;
                g[(j, i)] = s;
                q = q.matmul(&g);
            }
        }
    }
    q
}

/// `Q diag(d) Q^T`.
pub fn with_spectrum(q: &Mat, d: &[f64]) -> SymMatrix {
    SymMatrix::symmetrized(&q.matmul(&Mat::from_diag(d)).matmul(&q.transpose())).unwrap()
}

pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> SymMatrix {
    let q = random_orthogonal(rng, n);
    let d: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    with_spectrum(&q, &d)
}

/// Lower Cholesky factor.
pub fn cholesky(a: &Mat) -> Mat {
    let n = a.rows();
    let mut l = Mat::zeros(n, n);
    for j in 0..n {
        let s: f64 = (0..j).map(|k| l[(j, k)] * l[(j, k)]).sum();
        l[(j, j)] = (a[(j, j)] - s).sqrt();
        for i in j + 1..n {
            let s: f64 = (0..j).map(|k| l[(i, k)] * l[(j, k)]).sum();
            l[(i, j)] = (a[(i, j)] - s) / l[(j, j)];
        }
    }
    l
}

/// Inverse of a lower triangular matrix by forward substitution.
pub fn lower_inverse(l: &Mat) -> Mat {
    let n = l.rows();
    let mut inv = Mat::zeros(n, n);
    for c in 0..n {
        for i in 0..n {
            let rhs = if i == c { 1.0 } else { 0.0 };
            let s: f64 = (0..i).map(|k| l[(i, k)] * inv[(k, c)]).sum();
            inv[(i, c)] = (rhs - s) / l[(i, i)];
        }
    }
    inv
}

fn random_mat(rng: &mut ChaCha8Rng, r: usize, c: usize, scale: f64) -> Mat {
    let vals: Vec<f64> = (0..r * c).map(|_| rng.random_range(-scale..scale)).collect();
    Mat::from_fn(r, c, |i, j| vals[i * c + j])
}

/// SSC system satisfying (i)-(iii) by construction:
/// `Abar_k = A0^{-1} S_k` with symmetric `S_k`, `e = X2^{-1} (P + W)` with
/// `P` SPD and `W` skew, and `sum alpha_k S_k[u,u] = -N` with `N` SPD.
pub fn random_ssc(rng: &mut ChaCha8Rng, n: usize, r: usize) -> SscSystem {
    let m = n - r;
    let x1 = random_spd(rng, m, 0.5, 3.0);
    let x2 = random_spd(rng, r, 0.5, 3.0);
    let mut alpha = [rng.random_range(0.3..1.0), rng.random_range(-1.0..1.0)];
    if rng.random_bool(0.5) {
        alpha[0] = -alpha[0];
    }
    let big_n = random_spd(rng, m, 0.3, 2.0);
    let s2 = random_symmetric(rng, n, 1.0);
    let mut s1 = random_symmetric(rng, n, 1.0).into_mat();
    let uu = big_n
        .as_mat()
        .scale(-1.0)
        .sub(&s2.as_mat().block(0, 0, m, m).scale(alpha[1]))
        .scale(1.0 / alpha[0]);
    s1.set_block(0, 0, &uu);
    let s = [s1, s2.into_mat()];

    let mut a0 = Mat::zeros(n, n);
    a0.set_block(0, 0, x1.as_mat());
    a0.set_block(m, m, x2.as_mat());
    let l = cholesky(&a0);
    let li = lower_inverse(&l);
    let a0_inv = li.transpose().matmul(&li);
    let jac = [a0_inv.matmul(&s[0]), a0_inv.matmul(&s[1])];

    let p = random_spd(rng, r, 0.3, 2.0);
    let w = random_mat(rng, r, r, 0.5);
    let skew = w.sub(&w.transpose());
    let x2_inv = {
        let l = cholesky(x2.as_mat());
        let li = lower_inverse(&l);
        li.transpose().matmul(&li)
    };
    let e = x2_inv.matmul(&p.as_mat().add(&skew));

    SscSystem {
        n,
        r,
        a: [jac[0].block(0, 0, m, m), jac[1].block(0, 0, m, m)],
        b: [jac[0].block(0, m, m, r), jac[1].block(0, m, m, r)],
        c: [jac[0].block(m, 0, r, m), jac[1].block(m, 0, r, m)],
        d: [jac[0].block(m, m, r, r), jac[1].block(m, m, r, r)],
        e,
        x1,
        x2,
        alpha,
    }
}

/// Eigenvalues of `A0^{-1} S` through the Cholesky similarity
/// `L^T (A0^{-1} S) L^{-T} = L^{-1} S L^{-T}`; `S = A0 Abar`.
pub fn generalized_spectrum(a0: &Mat, jac: &Mat) -> Vec<f64> {
    let l = cholesky(a0);
    let li = lower_inverse(&l);
    let s = a0.matmul(jac);
    let sym = SymMatrix::symmetrized(&li.matmul(&s).matmul(&li.transpose())).unwrap();
    spectrum(&sym)
}

/// Sorted eigenvalues, via the closed form for 3x3 and a dense
/// characteristic-free bisection on Sturm counts otherwise.
pub fn spectrum(m: &SymMatrix) -> Vec<f64> {
    let a = rows(m.as_mat());
    if a.len() == 3 {
        return sym3_eigenvalues(&a).to_vec();
    }
    sturm_spectrum(&a)
}

/// Number of eigenvalues below `x` from the inertia of `A - x I` by
/// symmetric Gaussian elimination without pivoting (generic matrices).
fn count_below(a: &[Vec<f64>], x: f64) -> usize {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for (i, row) in m.iter_mut().enumerate() {
        row[i] -= x;
    }
    let mut neg = 0;
    for k in 0..n {
        let mut piv = m[k][k];
        if piv == 0.0 {
            piv = -1e-300;
        }
        if piv < 0.0 {
            neg += 1;
        }
        let pivot_row = m[k].clone();
        for row in m.iter_mut().skip(k + 1) {
            let f = row[k] / piv;
            for (v, p) in row.iter_mut().zip(&pivot_row).skip(k + 1) {
                *v -= f * p;
            }
        }
    }
    neg
}

fn sturm_spectrum(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let bound = a.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max) + 1.0;
    (0..n)
        .map(|k| {
            let (mut lo, mut hi) = (-bound, bound);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if count_below(a, mid) > k {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            0.5 * (lo + hi)
        })
        .collect()
}
