//! Block structure of the circuit unitary.
//!
//! Reordering the basis from `index ⊗ rotation ⊗ system` to
//! `rotation ⊗ index ⊗ system` turns `V` into
//! `U = [[A, B], [B, -A]]` (reflection variant) with
//! `A = Q (⊕ w_t U_t) Q^dag`, `B = Q (⊕ r_t U_t) Q^dag` and `Q = G ⊗ I_N`.

use crate::circuit::{circuit_unitary, rotation_gate, CircuitSpec, Variant};
use crate::error::{LcuError, Result};
use crate::linalg::{kron, svd, ComplexMatrix, ComplexVector};

/// The basis reordering `S`, kept as an index map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct IndexShuffle {
    terms: usize,
    dim: usize,
}

impl IndexShuffle {
    pub fn new(terms: usize, dim: usize) -> Self {
        Self { terms, dim }
    }

    pub fn len(&self) -> usize {
        2 * self.terms * self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Position of `|i>|r>|k>` after the shuffle.
    pub fn index(&self, pos: usize) -> usize {
        let (block, k) = (pos / self.dim, pos % self.dim);
        let (i, r) = (block / 2, block % 2);
        (r * self.terms + i) * self.dim + k
    }

    pub fn map(&self) -> Vec<usize> {
        (0..self.len()).map(|p| self.index(p)).collect()
    }

    /// `S v`.
    pub fn apply(&self, v: &ComplexVector) -> ComplexVector {
        let mut out = ComplexVector::zeros(v.dim());
        for (p, z) in v.as_slice().iter().enumerate() {
            out.as_mut_slice()[self.index(p)] = *z;
        }
        out
    }

    /// `S M S^T`.
    pub fn conjugate(&self, m: &ComplexMatrix) -> ComplexMatrix {
        let map = self.map();
        let mut out = ComplexMatrix::zeros(m.rows(), m.cols());
        for (p, &pp) in map.iter().enumerate() {
            for (q, &qq) in map.iter().enumerate() {
                out[(pp, qq)] = m[(p, q)];
            }
        }
        out
    }

    /// Dense `S`; only for tests and small reports.
    pub fn matrix(&self) -> ComplexMatrix {
        let mut s = ComplexMatrix::zeros(self.len(), self.len());
        for (p, pp) in self.map().into_iter().enumerate() {
            s[(pp, p)] = crate::linalg::ONE;
        }
        s
    }
}

#[derive(Clone, Debug)]
pub struct ShuffledUnitary {
    pub u: ComplexMatrix,
    pub a: ComplexMatrix,
    pub b: ComplexMatrix,
    pub shuffle: IndexShuffle,
    variant: Variant,
}

impl ShuffledUnitary {
    /// Largest entrywise deviation of the lower block row from `[B, -A]`
    /// (reflection) or `[-B, A]` (cyclic). Zero for exact simulation.
    pub fn block_structure_residual(&self) -> f64 {
        let h = self.a.rows();
        let lower_left = self.u.submatrix(h, 0, h, h);
        let lower_right = self.u.submatrix(h, h, h, h);
        let (ll, lr) = match self.variant {
            Variant::Reflection => (self.b.clone(), -&self.a),
            Variant::Cyclic => (-&self.b, self.a.clone()),
        };
        lower_left.max_abs_diff(&ll).max(lower_right.max_abs_diff(&lr))
    }

    /// The `N x N` sub-block `(i, j)` of `A`.
    pub fn a_block(&self, i: usize, j: usize, dim: usize) -> ComplexMatrix {
        self.a.submatrix(i * dim, j * dim, dim, dim)
    }

    pub fn b_block(&self, i: usize, j: usize, dim: usize) -> ComplexMatrix {
        self.b.submatrix(i * dim, j * dim, dim, dim)
    }
}

pub fn shuffle(spec: &CircuitSpec) -> ShuffledUnitary {
    let s = IndexShuffle::new(spec.terms(), spec.dim());
    let u = s.conjugate(&circuit_unitary(spec));
    let h = spec.terms() * spec.dim();
    ShuffledUnitary {
        a: u.submatrix(0, 0, h, h),
        b: u.submatrix(0, h, h, h),
        u,
        shuffle: s,
        variant: spec.variant(),
    }
}

/// `Q = G ⊗ I_N`.
pub fn mixing_similarity(spec: &CircuitSpec) -> ComplexMatrix {
    kron(&spec.mixing_matrix(), &ComplexMatrix::identity(spec.dim()))
}

fn weighted_direct_sum(spec: &CircuitSpec, coeffs: &[f64]) -> ComplexMatrix {
    let blocks: Vec<ComplexMatrix> = spec
        .unitaries()
        .iter()
        .zip(coeffs)
        .map(|(u, &c)| u.scale_real(c))
        .collect();
    ComplexMatrix::direct_sum(&blocks)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimilarityResiduals {
    /// `||Q^dag A Q - ⊕ w_t U_t||_F / ||A||_F`
    pub a: f64,
    /// Same for `B` against `⊕ r_t U_t`.
    pub b: f64,
}

fn relative(diff: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

pub fn similarity_check(shuffled: &ShuffledUnitary, spec: &CircuitSpec) -> SimilarityResiduals {
    let q = mixing_similarity(spec);
    let qa = q.adjoint_matmul(&shuffled.a).matmul(&q);
    let qb = q.adjoint_matmul(&shuffled.b).matmul(&q);
    let da = weighted_direct_sum(spec, spec.weights());
    let db = weighted_direct_sum(spec, &spec.complements());
    SimilarityResiduals {
        a: relative(qa.distance(&da), shuffled.a.frobenius_norm()),
        b: relative(qb.distance(&db), shuffled.b.frobenius_norm()),
    }
}

fn multiset(values: &[f64], multiplicity: usize) -> Vec<f64> {
    let mut out: Vec<f64> = values
        .iter()
        .flat_map(|v| std::iter::repeat_n(v.abs(), multiplicity))
        .collect();
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Max deviation of sorted `sigma(A)` from `{|w_t|} x N` and of `sigma(B)`
/// from `{r_t} x N`.
pub fn singular_multiset_check(
    shuffled: &ShuffledUnitary,
    spec: &CircuitSpec,
) -> Result<(f64, f64)> {
    let sa = svd(&shuffled.a)?.singular_values;
    let sb = svd(&shuffled.b)?.singular_values;
    let n = spec.dim();
    Ok((
        max_dev(&sa, &multiset(spec.weights(), n)),
        max_dev(&sb, &multiset(&spec.complements(), n)),
    ))
}

/// `A = Q1 diag(sigma_w) Q2^dag`, `B = Q1 diag(sigma_r) Q2^dag`.
///
/// `sigma_w` keeps the sign of each weight, so its absolute values are the
/// singular values of `A`; a negative weight cannot be moved into `Q1` or
/// `Q2` without also flipping the sign of `B`.
#[derive(Clone, Debug)]
pub struct CsdFactors {
    pub q1: ComplexMatrix,
    pub q2: ComplexMatrix,
    pub sigma_w: Vec<f64>,
    pub sigma_r: Vec<f64>,
    variant: Variant,
}

impl CsdFactors {
    fn product(&self, sigma: &[f64]) -> ComplexMatrix {
        let mut left = self.q1.clone();
        for (j, &s) in sigma.iter().enumerate() {
            for i in 0..left.rows() {
                left[(i, j)] *= s;
            }
        }
        left.matmul(&self.q2.adjoint())
    }

    pub fn a(&self) -> ComplexMatrix {
        self.product(&self.sigma_w)
    }

    pub fn b(&self) -> ComplexMatrix {
        self.product(&self.sigma_r)
    }

    /// `max_j |sigma_w,j^2 + sigma_r,j^2 - 1|`.
    pub fn pythagorean_defect(&self) -> f64 {
        self.sigma_w
            .iter()
            .zip(&self.sigma_r)
            .fold(0.0, |m, (w, r)| m.max((w * w + r * r - 1.0).abs()))
    }

    /// The `2 x 2` central blocks `[[c, s], [s, -c]]`.
    pub fn central_blocks(&self) -> Vec<[[f64; 2]; 2]> {
        self.sigma_w
            .iter()
            .zip(&self.sigma_r)
            .map(|(&c, &s)| [[c, s], [s, -c]])
            .collect()
    }

    /// Max of `|tr M_j|` and `|det M_j + 1|` over the central blocks.
    /// Only the reflection variant has reflection blocks.
    pub fn central_block_defect(&self) -> Result<f64> {
        if self.variant != Variant::Reflection {
            return Err(LcuError::Unsupported(
                "cyclic central blocks are rotations, not reflections".into(),
            ));
        }
        Ok(self.central_blocks().iter().fold(0.0f64, |m, b| {
            let tr = b[0][0] + b[1][1];
            let det = b[0][0] * b[1][1] - b[0][1] * b[1][0];
            m.max(tr.abs()).max((det + 1.0).abs())
        }))
    }

    /// Relative Frobenius residuals of the `A` and `B` reconstructions.
    pub fn reconstruction_residuals(&self, shuffled: &ShuffledUnitary) -> (f64, f64) {
        (
            relative(self.a().distance(&shuffled.a), shuffled.a.frobenius_norm()),
            relative(self.b().distance(&shuffled.b), shuffled.b.frobenius_norm()),
        )
    }
}

/// Explicit CSD from the polar choice `P_t = U_t`, `Q_t = I`:
/// `Q1 = (G ⊗ I) ⊕ U_t`, `Q2 = G ⊗ I`.
pub fn csd_assemble(spec: &CircuitSpec) -> CsdFactors {
    let q = mixing_similarity(spec);
    let q1 = q.matmul(&ComplexMatrix::direct_sum(spec.unitaries()));
    let n = spec.dim();
    let expand = |v: Vec<f64>| -> Vec<f64> {
        v.into_iter()
            .flat_map(|x| std::iter::repeat_n(x, n))
            .collect()
    };
    CsdFactors {
        q1,
        q2: q,
        sigma_w: expand(spec.weights().to_vec()),
        sigma_r: expand(spec.complements()),
        variant: spec.variant(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvolutionResiduals {
    /// `||U^2 - I_2 ⊗ Q (⊕ U_t^2) Q^dag||_F`
    pub structure: f64,
    /// `||U^2(spec) - U^2(spec_alt)||_F`
    pub key_cancel: f64,
}

fn same_public_params(a: &CircuitSpec, b: &CircuitSpec) -> bool {
    a.qubits() == b.qubits()
        && a.terms() == b.terms()
        && a.unitaries() == b.unitaries()
        && a.mixing() == b.mixing()
        && a.variant() == b.variant()
}

/// `I_2 ⊗ Q (⊕ U_t^2) Q^dag` in the shuffled basis.
pub fn expected_square(spec: &CircuitSpec) -> ComplexMatrix {
    let q = mixing_similarity(spec);
    let squares: Vec<ComplexMatrix> = spec.unitaries().iter().map(|u| u.matmul(u)).collect();
    let inner = q.matmul(&ComplexMatrix::direct_sum(&squares)).matmul(&q.adjoint());
    kron(&ComplexMatrix::identity(2), &inner)
}

pub fn involution_check(spec: &CircuitSpec, spec_alt: &CircuitSpec) -> Result<InvolutionResiduals> {
    if !same_public_params(spec, spec_alt) {
        return Err(LcuError::InvalidParameter(
            "involution check needs two specs that differ only in weights".into(),
        ));
    }
    if spec.variant() != Variant::Reflection {
        return Err(LcuError::Unsupported(
            "the cyclic rotation gate does not square to the identity".into(),
        ));
    }
    let u1 = shuffle(spec).u;
    let u2 = shuffle(spec_alt).u;
    let sq1 = u1.matmul(&u1);
    let sq2 = u2.matmul(&u2);
    Ok(InvolutionResiduals {
        structure: sq1.distance(&expected_square(spec)),
        key_cancel: sq1.distance(&sq2),
    })
}

/// `R_t^2 = I` for the reflection gate; exposed for reports.
pub fn rotation_square_defect(w: f64, variant: Variant) -> Result<f64> {
    let r = rotation_gate(w, variant)?;
    Ok(r.matmul(&r).distance(&ComplexMatrix::identity(2)))
}
