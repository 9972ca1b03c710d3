//! QR, SVD and Hermitian solves.
//!
//! The SVD is one-sided (Hestenes) Jacobi. Tall inputs are first reduced to
//! their square `R` factor by Householder QR and wide inputs are handled
//! through the adjoint, so the Jacobi sweeps only ever see a
//! `min(m, n) x min(m, n)` matrix.

use super::matrix::{ComplexMatrix, ComplexVector, C64, ONE, ZERO};
use crate::error::{LcuError, Result};

const MAX_SWEEPS: usize = 80;

/// Thin singular value decomposition `m = left * diag(singular_values) * right^dag`.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub left: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub right: ComplexMatrix,
}

impl SvdResult {
    pub fn reconstruct(&self) -> ComplexMatrix {
        self.reconstruct_rank(self.singular_values.len())
    }

    /// Sum of the leading `rank` singular triplets.
    pub fn reconstruct_rank(&self, rank: usize) -> ComplexMatrix {
        let rank = rank.min(self.singular_values.len());
        let m = self.left.rows();
        let n = self.right.rows();
        let mut out = ComplexMatrix::zeros(m, n);
        for k in 0..rank {
            let s = self.singular_values[k];
            if s == 0.0 {
                continue;
            }
            for i in 0..m {
                let u = self.left[(i, k)] * s;
                if u == ZERO {
                    continue;
                }
                let row = out.row_mut(i);
                for (j, o) in row.iter_mut().enumerate() {
                    *o += u * self.right[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Householder QR of an `m x n` matrix with `m >= n`: returns thin `Q` (`m x n`)
/// and upper-triangular `R` (`n x n`).
pub fn qr(a: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let (m, n) = a.shape();
    assert!(m >= n, "qr expects a tall or square matrix");
    // Column-major working copies: every reflector touches column tails.
    let mut r: Vec<Vec<C64>> = (0..n).map(|j| a.column(j).into_vec()).collect();
    let mut reflectors: Vec<Vec<C64>> = Vec::with_capacity(n);

    for k in 0..n {
        let norm_x = r[k][k..].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut v: Vec<C64> = r[k][k..].to_vec();
        if norm_x == 0.0 {
            reflectors.push(Vec::new());
            continue;
        }
        let x0 = v[0];
        let phase = if x0.norm() == 0.0 { ONE } else { x0 / x0.norm() };
        // v = x + phase*||x|| e1 avoids cancellation; R_kk = -phase*||x||.
        v[0] += phase * norm_x;
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        for col in &mut r[k..] {
            reflect(&v, &mut col[k..], vnorm2);
        }
        r[k][k + 1..].fill(ZERO);
        reflectors.push(v);
    }

    // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I.
    let mut q: Vec<Vec<C64>> = (0..n).map(|j| ComplexVector::basis(m, j).into_vec()).collect();
    for k in (0..n).rev() {
        let v = &reflectors[k];
        if v.is_empty() {
            continue;
        }
        let vnorm2: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        for col in &mut q {
            reflect(v, &mut col[k..], vnorm2);
        }
    }
    (
        ComplexMatrix::from_fn(m, n, |i, j| q[j][i]),
        ComplexMatrix::from_fn(n, n, |i, j| r[j][i]),
    )
}

/// `x <- (I - 2 v v^dag / |v|^2) x`.
fn reflect(v: &[C64], x: &mut [C64], vnorm2: f64) {
    let dot: C64 = v.iter().zip(x.iter()).map(|(vi, xi)| vi.conj() * xi).sum();
    let f = dot * (2.0 / vnorm2);
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi -= vi * f;
    }
}

/// Full SVD with singular values sorted in descending order.
pub fn svd(m: &ComplexMatrix) -> Result<SvdResult> {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return Err(LcuError::Dimension("svd of an empty matrix".into()));
    }
    if !m.is_finite() {
        return Err(LcuError::InvalidParameter("svd input must be finite".into()));
    }
    if rows < cols {
        let t = svd(&m.adjoint())?;
        return Ok(SvdResult {
            left: t.right,
            singular_values: t.singular_values,
            right: t.left,
        });
    }
    if rows > cols {
        let (q, r) = qr(m);
        let inner = jacobi_square(&r)?;
        return Ok(SvdResult {
            left: q.matmul(&inner.left),
            singular_values: inner.singular_values,
            right: inner.right,
        });
    }
    jacobi_square(m)
}

fn jacobi_square(a: &ComplexMatrix) -> Result<SvdResult> {
    let n = a.cols();
    // Column-major working copies make the column rotations contiguous.
    let mut w: Vec<Vec<C64>> = (0..n).map(|j| a.column(j).into_vec()).collect();
    let mut v: Vec<Vec<C64>> = (0..n)
        .map(|j| ComplexVector::basis(n, j).into_vec())
        .collect();

    let tol = f64::EPSILON * (n as f64).sqrt();
    // Columns this small are roundoff; rotating them against the rest never
    // settles, and they fall below the rank cutoff anyway.
    let frob2: f64 = w.iter().flatten().map(|z| z.norm_sqr()).sum();
    let negligible = (f64::EPSILON * n as f64).powi(2) * frob2;
    let mut sweeps = 0;
    loop {
        let mut worst = 0.0f64;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha: f64 = w[p].iter().map(|z| z.norm_sqr()).sum();
                let beta: f64 = w[q].iter().map(|z| z.norm_sqr()).sum();
                if alpha <= negligible || beta <= negligible {
                    continue;
                }
                let gamma: C64 = w[p].iter().zip(&w[q]).map(|(x, y)| x.conj() * y).sum();
                let g = gamma.norm();
                let ratio = g / (alpha * beta).sqrt();
                worst = worst.max(ratio);
                if ratio <= tol {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut w, p, q, c, s, phase);
                rotate(&mut v, p, q, c, s, phase);
            }
        }
        sweeps += 1;
        if !rotated {
            break;
        }
        if sweeps >= MAX_SWEEPS {
            return Err(LcuError::NoConvergence {
                sweeps,
                residual: worst,
            });
        }
    }

    let norms: Vec<f64> = w
        .iter()
        .map(|col| col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));

    let sigma_max = norms[order[0]];
    let cutoff = sigma_max * f64::EPSILON * n as f64;
    let mut left = ComplexMatrix::zeros(n, n);
    let mut right = ComplexMatrix::zeros(n, n);
    let mut singular_values = Vec::with_capacity(n);
    let mut filled = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        singular_values.push(norms[j]);
        right.set_column(k, &v[j]);
        if norms[j] > cutoff && norms[j] > 0.0 {
            let col: Vec<C64> = w[j].iter().map(|z| z / norms[j]).collect();
            left.set_column(k, &col);
            filled.push(k);
        }
    }
    complete_columns(&mut left, &filled);
    Ok(SvdResult {
        left,
        singular_values,
        right,
    })
}

// Real Jacobi rotation on (p, q~) with q~ = conj(phase) q, which makes the
// 2x2 Gram block real before it is diagonalized.
fn rotate(cols: &mut [Vec<C64>], p: usize, q: usize, c: f64, s: f64, phase: C64) {
    let (lo, hi) = cols.split_at_mut(q);
    let cp = &mut lo[p];
    let cq = &mut hi[0];
    let ph_conj = phase.conj();
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let yt = ph_conj * *y;
        let xn = *x * c - yt * s;
        let ytn = *x * s + yt * c;
        *x = xn;
        *y = phase * ytn;
    }
}

/// Fills the columns of `m` not listed in `filled` with unit vectors
/// orthogonal to every other column (modified Gram–Schmidt over basis vectors).
pub fn complete_columns(m: &mut ComplexMatrix, filled: &[usize]) {
    let (rows, cols) = m.shape();
    let mut have: Vec<Vec<C64>> = filled.iter().map(|&j| m.column(j).into_vec()).collect();
    let mut candidate = 0;
    for j in 0..cols {
        if filled.contains(&j) {
            continue;
        }
        loop {
            assert!(candidate < rows, "cannot complete more columns than rows");
            let mut x = ComplexVector::basis(rows, candidate).into_vec();
            candidate += 1;
            for _ in 0..2 {
                for h in &have {
                    let d: C64 = h.iter().zip(&x).map(|(a, b)| a.conj() * b).sum();
                    for (xi, hi) in x.iter_mut().zip(h) {
                        *xi -= d * hi;
                    }
                }
            }
            let nrm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if nrm > 1e-8 {
                let x: Vec<C64> = x.iter().map(|z| z / nrm).collect();
                m.set_column(j, &x);
                have.push(x);
                break;
            }
        }
    }
}

/// Number of singular values strictly above `tol * sigma_max`.
pub fn numerical_rank(m: &ComplexMatrix, tol: f64) -> Result<usize> {
    if tol <= 0.0 {
        return Err(LcuError::InvalidParameter("rank tolerance must be positive".into()));
    }
    let s = svd(m)?;
    let smax = s.singular_values.first().copied().unwrap_or(0.0);
    Ok(s.singular_values.iter().filter(|&&x| x > tol * smax).count())
}

/// Solves `a x = b` for Hermitian positive-definite `a` by Cholesky.
pub fn solve_hermitian_pd(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(LcuError::Dimension(format!(
            "solve: {}x{} system with {}x{} right-hand side",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    let mut l = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if d <= 0.0 || !d.is_finite() {
            return Err(LcuError::InvalidParameter(format!(
                "matrix not positive definite (pivot {j}: {d:e})"
            )));
        }
        let d = d.sqrt();
        l[(j, j)] = C64::new(d, 0.0);
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / d;
        }
    }
    let mut x = b.clone();
    for c in 0..b.cols() {
        for i in 0..n {
            let mut s = x[(i, c)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = x[(i, c)];
            for k in (i + 1)..n {
                s -= l[(k, i)].conj() * x[(k, c)];
            }
            x[(i, c)] = s / l[(i, i)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_matrix(rows: usize, cols: usize, seed: u64) -> ComplexMatrix {
        let mut rng = SeededRng::new(seed);
        ComplexMatrix::from_fn(rows, cols, |_, _| rng.complex_gaussian())
    }

    fn check_svd(m: &ComplexMatrix) {
        let s = svd(m).unwrap();
        let k = s.singular_values.len();
        assert_eq!(k, m.rows().min(m.cols()));
        assert!(s.left.unitarity_defect() < 1e-10, "left not orthonormal");
        assert!(s.right.unitarity_defect() < 1e-10, "right not orthonormal");
        assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        let rel = s.reconstruct().distance(m) / m.frobenius_norm().max(1e-300);
        assert!(rel < 1e-10, "reconstruction {rel:e}");
    }

    #[test]
    fn svd_identity() {
        let s = svd(&ComplexMatrix::identity(4)).unwrap();
        for x in s.singular_values {
            assert!((x - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn svd_diagonal_with_zero() {
        let m = ComplexMatrix::from_real(2, 2, &[3.0, 0.0, 0.0, 0.0]).unwrap();
        let s = svd(&m).unwrap();
        assert_eq!(s.singular_values, vec![3.0, 0.0]);
        assert!(s.left.unitarity_defect() < 1e-14);
    }

    #[test]
    fn svd_random_shapes_reconstruct() {
        check_svd(&random_matrix(6, 4, 11));
        check_svd(&random_matrix(4, 6, 12));
        check_svd(&random_matrix(9, 9, 13));
        check_svd(&random_matrix(8, 256, 14));
        check_svd(&random_matrix(1, 1, 15));
    }

    #[test]
    fn svd_rank_deficient_completes_bases() {
        let u = random_matrix(7, 2, 21);
        let v = random_matrix(2, 5, 22);
        let m = u.matmul(&v);
        check_svd(&m);
        let s = svd(&m).unwrap();
        assert!(s.singular_values[2] < 1e-12 * s.singular_values[0]);
    }

    #[test]
    fn svd_zero_matrix() {
        let s = svd(&ComplexMatrix::zeros(3, 2)).unwrap();
        assert_eq!(s.singular_values, vec![0.0, 0.0]);
        assert!(s.left.unitarity_defect() < 1e-14);
    }

    #[test]
    fn svd_rejects_empty() {
        assert!(svd(&ComplexMatrix::zeros(0, 3)).is_err());
    }

    #[test]
    fn qr_reconstructs_and_is_orthonormal() {
        let a = random_matrix(7, 4, 5);
        let (q, r) = qr(&a);
        assert!(q.unitarity_defect() < 1e-13);
        assert!(q.matmul(&r).distance(&a) < 1e-12);
        for i in 0..4 {
            for j in 0..i {
                assert_eq!(r[(i, j)], ZERO);
            }
        }
    }

    #[test]
    fn numerical_rank_cases() {
        assert_eq!(numerical_rank(&ComplexMatrix::zeros(3, 3), 1e-10).unwrap(), 0);
        assert_eq!(numerical_rank(&ComplexMatrix::identity(5), 1e-8).unwrap(), 5);
        let u = random_matrix(6, 1, 1);
        let v = random_matrix(1, 9, 2);
        assert_eq!(numerical_rank(&u.matmul(&v), 1e-10).unwrap(), 1);
        assert!(numerical_rank(&ComplexMatrix::identity(2), 0.0).is_err());
    }

    #[test]
    fn hermitian_solve() {
        let g = random_matrix(5, 3, 8);
        let a = g.adjoint_matmul(&g);
        let x = random_matrix(3, 2, 9);
        let b = a.matmul(&x);
        let xs = solve_hermitian_pd(&a, &b).unwrap();
        assert!(xs.distance(&x) < 1e-10);
        assert!(solve_hermitian_pd(&ComplexMatrix::zeros(2, 2), &ComplexMatrix::zeros(2, 1)).is_err());
    }
}
