//! Dense complex linear algebra kernel.

mod decomp;
mod generators;
mod matrix;

pub use decomp::{complete_columns, numerical_rank, qr, solve_hermitian_pd, svd, SvdResult};
pub use generators::{
    dft_matrix, hadamard_matrix, hadamard_sign, haar_random_unitary, pauli_string,
    permutation_matrix, random_involutory_permutation, random_pauli_label, random_state,
};
pub use matrix::{kron, ComplexMatrix, ComplexVector, C64, ONE, ZERO};
