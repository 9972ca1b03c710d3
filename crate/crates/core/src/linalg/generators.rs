//! Structured and random matrix generators.

use super::decomp::qr;
use super::matrix::{kron, ComplexMatrix, ComplexVector, C64, ONE, ZERO};
use crate::error::{LcuError, Result};
use crate::rng::SeededRng;

/// Sylvester–Hadamard matrix scaled by `1/sqrt(k)`.
pub fn hadamard_matrix(k: usize) -> Result<ComplexMatrix> {
    if !k.is_power_of_two() {
        return Err(LcuError::InvalidParameter(format!(
            "Hadamard order must be a power of two, got {k}"
        )));
    }
    let scale = 1.0 / (k as f64).sqrt();
    Ok(ComplexMatrix::from_fn(k, k, |i, t| {
        C64::new(hadamard_sign(i, t) * scale, 0.0)
    }))
}

/// `(-1)^{popcount(i & t)}`, the unnormalized Sylvester entry.
pub fn hadamard_sign(i: usize, t: usize) -> f64 {
    if (i & t).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

/// Unitary DFT matrix `F_jt = exp(2 pi i jt / k) / sqrt(k)`.
pub fn dft_matrix(k: usize) -> Result<ComplexMatrix> {
    if k == 0 {
        return Err(LcuError::InvalidParameter("DFT order must be at least 1".into()));
    }
    let scale = 1.0 / (k as f64).sqrt();
    Ok(ComplexMatrix::from_fn(k, k, |j, t| {
        // Reduce the exponent first so that e.g. K=2 gives exact +-1.
        let e = (j * t) % k;
        let angle = std::f64::consts::TAU * e as f64 / k as f64;
        let z = if (4 * e).is_multiple_of(k) {
            [ONE, C64::new(0.0, 1.0), -ONE, C64::new(0.0, -1.0)][4 * e / k]
        } else {
            C64::from_polar(1.0, angle)
        };
        z * scale
    }))
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of `diag(R)` moved into `Q`.
pub fn haar_random_unitary(dim: usize, seed: u64) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(LcuError::InvalidParameter("dimension must be at least 1".into()));
    }
    let mut rng = SeededRng::new(seed);
    let g = ComplexMatrix::from_fn(dim, dim, |_, _| rng.complex_gaussian());
    let (mut q, r) = qr(&g);
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() == 0.0 { ONE } else { d / d.norm() };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Unit-norm state with complex Gaussian amplitudes.
pub fn random_state(dim: usize, seed: u64) -> Result<ComplexVector> {
    if dim == 0 {
        return Err(LcuError::InvalidParameter("dimension must be at least 1".into()));
    }
    let mut rng = SeededRng::new(seed);
    let v = ComplexVector::new((0..dim).map(|_| rng.complex_gaussian()).collect());
    Ok(v.scale_real(1.0 / v.norm()))
}

/// Permutation matrix `P` with `P e_j = e_{perm[j]}`.
pub fn permutation_matrix(perm: &[usize]) -> Result<ComplexMatrix> {
    let n = perm.len();
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(LcuError::InvalidParameter(format!(
                "not a permutation of 0..{n}: {perm:?}"
            )));
        }
        seen[p] = true;
    }
    let mut m = ComplexMatrix::zeros(n, n);
    for (j, &p) in perm.iter().enumerate() {
        m[(p, j)] = ONE;
    }
    Ok(m)
}

/// Random permutation of `0..n` made only of fixed points and transpositions.
pub fn random_involutory_permutation(n: usize, rng: &mut SeededRng) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut perm: Vec<usize> = (0..n).collect();
    for pair in order.chunks(2) {
        if pair.len() == 2 && rng.uniform() < 0.75 {
            perm[pair[0]] = pair[1];
            perm[pair[1]] = pair[0];
        }
    }
    perm
}

/// Tensor product of single-qubit Paulis; the first character acts on the
/// most significant qubit.
pub fn pauli_string(label: &str) -> Result<ComplexMatrix> {
    let mut out = ComplexMatrix::identity(1);
    for ch in label.chars() {
        let p = match ch {
            'I' => ComplexMatrix::identity(2),
            'X' => ComplexMatrix::from_vec(2, 2, vec![ZERO, ONE, ONE, ZERO])?,
            'Y' => ComplexMatrix::from_vec(
                2,
                2,
                vec![ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO],
            )?,
            'Z' => ComplexMatrix::from_vec(2, 2, vec![ONE, ZERO, ZERO, -ONE])?,
            other => {
                return Err(LcuError::Parse(format!("unknown Pauli letter {other:?}")));
            }
        };
        out = kron(&out, &p);
    }
    Ok(out)
}

pub fn random_pauli_label(qubits: usize, rng: &mut SeededRng) -> String {
    (0..qubits).map(|_| ['I', 'X', 'Y', 'Z'][rng.below(4)]).collect()
}
