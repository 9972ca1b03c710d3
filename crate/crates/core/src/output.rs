//! The full `2K x N` outcome matrix `Phi = C X`.
//!
//! Rows are r-major: row `i` carries outcome `(i, r=0)` and row `K + i`
//! carries `(i, r=1)`. Column `k` is the system basis state `|k>`.

use crate::circuit::{output_states, CircuitSpec, ShotDataset};
use crate::error::{LcuError, Result};
use crate::linalg::{solve_hermitian_pd, svd, ComplexMatrix, ComplexVector, C64};

/// `C`, the `2K x K` map from unitary images to outcome amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientMatrix(pub ComplexMatrix);

/// `X`, the `K x N` matrix whose row `t` is `U_t psi`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowMatrix(pub ComplexMatrix);

/// `Phi`, the `2K x N` outcome amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct OutputMatrix(pub ComplexMatrix);

impl CoefficientMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn terms(&self) -> usize {
        self.0.cols()
    }

    pub fn is_real(&self) -> bool {
        self.0.as_slice().iter().all(|z| z.im == 0.0)
    }
}

impl RowMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }
}

impl OutputMatrix {
    pub fn matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    /// Squared moduli, i.e. the exact outcome probabilities.
    pub fn magnitudes(&self) -> Vec<f64> {
        self.0.as_slice().iter().map(|z| z.norm_sqr()).collect()
    }

    /// `(Re Phi, Im Phi)`; both have rank at most `K` when `C` is real.
    pub fn real_imag(&self) -> (ComplexMatrix, ComplexMatrix) {
        (
            self.0.map(|z| C64::new(z.re, 0.0)),
            self.0.map(|z| C64::new(z.im, 0.0)),
        )
    }

    /// The `(0, 0)` row, `T psi / (K c)`.
    pub fn target_row(&self) -> ComplexVector {
        ComplexVector::new(self.0.row(0).to_vec())
    }
}

/// `C_{(r,i),t} = a_{i,t} <r|R_t|0>`; for Hadamard mixing this is
/// `s_{i,t} w_t / K` on top and `s_{i,t} r_t / K` below.
pub fn coefficient_matrix(spec: &CircuitSpec) -> CoefficientMatrix {
    let k = spec.terms();
    let amps = spec.index_amplitudes();
    let rot = spec.rotation_columns();
    CoefficientMatrix(ComplexMatrix::from_fn(2 * k, k, |row, t| {
        let (r, i) = (row / k, row % k);
        amps[(i, t)] * rot[r][t]
    }))
}

pub fn row_matrix(spec: &CircuitSpec, psi: &ComplexVector) -> Result<RowMatrix> {
    spec.check_state(psi)?;
    let rows: Vec<Vec<C64>> = spec
        .unitaries()
        .iter()
        .map(|u| u.apply(psi).into_vec())
        .collect();
    Ok(RowMatrix(ComplexMatrix::from_rows(&rows)?))
}

/// Stacks the outcome states as rows.
pub fn output_matrix(spec: &CircuitSpec, psi: &ComplexVector) -> Result<OutputMatrix> {
    let out = output_states(spec, psi)?;
    let rows: Vec<Vec<C64>> = out.states().iter().map(|s| s.as_slice().to_vec()).collect();
    Ok(OutputMatrix(ComplexMatrix::from_rows(&rows)?))
}

/// Relative threshold below which `C` counts as rank deficient.
const RANK_TOL: f64 = 1e-12;

/// Recovers `X` from `Phi`. Uses `K C^T Phi` when `C^T C = I/K` (Hadamard
/// scheme), the normal-equation pseudo-solution otherwise.
pub fn invert_with_c(c: &CoefficientMatrix, phi: &OutputMatrix) -> Result<RowMatrix> {
    let cm = c.matrix();
    let pm = phi.matrix();
    if cm.rows() != pm.rows() {
        return Err(LcuError::Dimension(format!(
            "C has {} rows but Phi has {}",
            cm.rows(),
            pm.rows()
        )));
    }
    let s = svd(cm)?;
    let smax = s.singular_values[0];
    let smin = *s.singular_values.last().expect("non-empty");
    if smax == 0.0 || smin <= RANK_TOL * smax {
        return Err(LcuError::RankDeficient {
            sigma_min: smin,
            sigma_max: smax,
        });
    }
    let k = c.terms() as f64;
    let gram = cm.adjoint_matmul(cm);
    let scaled_identity = ComplexMatrix::identity(c.terms()).scale_real(1.0 / k);
    if c.is_real() && gram.distance(&scaled_identity) < 1e-12 {
        return Ok(RowMatrix(cm.transpose().matmul(pm).scale_real(k)));
    }
    let rhs = cm.adjoint_matmul(pm);
    Ok(RowMatrix(solve_hermitian_pd(&gram, &rhs)?))
}

/// `T psi = sum_t alpha_t X_t`.
pub fn extract_target(x: &RowMatrix, alpha: &[f64]) -> Result<ComplexVector> {
    let xm = x.matrix();
    if alpha.len() != xm.rows() {
        return Err(LcuError::Dimension(format!(
            "{} coefficients for {} rows",
            alpha.len(),
            xm.rows()
        )));
    }
    let mut out = ComplexVector::zeros(xm.cols());
    for (t, &a) in alpha.iter().enumerate() {
        for (o, z) in out.as_mut_slice().iter_mut().zip(xm.row(t)) {
            *o += z * a;
        }
    }
    Ok(out)
}

/// Empirical outcome frequencies laid out like `Phi`, with per-cell counts.
#[derive(Clone, Debug, PartialEq)]
pub struct MagnitudeEstimate {
    pub rows: usize,
    pub cols: usize,
    /// Row-major `p_hat`, same layout as `Phi`.
    pub probabilities: Vec<f64>,
    pub counts: Vec<u64>,
    pub shots: u64,
}

impl MagnitudeEstimate {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.probabilities[row * self.cols + col]
    }
}

pub fn empirical_magnitudes(data: &ShotDataset) -> Result<MagnitudeEstimate> {
    if data.shots == 0 {
        return Err(LcuError::InvalidParameter("empty shot dataset".into()));
    }
    let (k, n) = (data.terms, data.dim);
    let mut counts = vec![0u64; 2 * k * n];
    for (&(i, r, col), &c) in &data.counts {
        if i >= k || r > 1 || col >= n {
            return Err(LcuError::Dimension(format!(
                "outcome ({i}, {r}, {col}) outside {k} x 2 x {n}"
            )));
        }
        counts[(r * k + i) * n + col] += c;
    }
    let total: u64 = counts.iter().sum();
    if total != data.shots {
        return Err(LcuError::InvalidParameter(format!(
            "counts sum to {total}, dataset claims {} shots",
            data.shots
        )));
    }
    let probabilities = counts
        .iter()
        .map(|&c| c as f64 / data.shots as f64)
        .collect();
    Ok(MagnitudeEstimate {
        rows: 2 * k,
        cols: n,
        probabilities,
        counts,
        shots: data.shots,
    })
}
