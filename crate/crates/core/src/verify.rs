//! The invariant suite behind `lcu verify`.

use serde::Serialize;

use crate::circuit::{circuit_unitary, CircuitSpec, Mixing, Variant};
use crate::error::Result;
use crate::linalg::{numerical_rank, ComplexMatrix, ComplexVector};
use crate::output::{coefficient_matrix, output_matrix, row_matrix};
use crate::spectral::{
    csd_assemble, involution_check, shuffle, similarity_check, singular_multiset_check,
};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `residual < threshold`; NaN never passes.
    pub fn below(name: &str, residual: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            residual,
            threshold,
            pass: residual < threshold,
        }
    }

    /// Passes when `residual <= threshold`.
    pub fn at_most(name: &str, residual: f64, threshold: f64) -> Self {
        Self {
            name: name.to_string(),
            residual,
            threshold,
            pass: residual <= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    pub fn new(checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self { checks, pass }
    }

    pub fn failed(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Alternate weights for the key-cancellation check: reversed and damped,
/// so they differ from the originals whenever `K > 1` or `w != 0`.
fn alternate_weights(w: &[f64]) -> Vec<f64> {
    w.iter().rev().map(|x| 0.5 * x + 0.25).collect()
}

/// Runs every check that applies to `spec` on the input `psi`.
pub fn verify_spec(spec: &CircuitSpec, psi: &ComplexVector) -> Result<Report> {
    let mut checks = Vec::new();
    let k = spec.terms();

    let worst_u = spec
        .unitaries()
        .iter()
        .map(ComplexMatrix::unitarity_defect)
        .fold(0.0, f64::max);
    checks.push(Check::below("unitaries", worst_u, 1e-10));
    checks.push(Check::below("circuit_unitarity", circuit_unitary(spec).unitarity_defect(), 1e-10));

    let sh = shuffle(spec);
    checks.push(Check::at_most("block_structure", sh.block_structure_residual(), 0.0));
    let sim = similarity_check(&sh, spec);
    checks.push(Check::below("similarity_a", sim.a, 1e-10));
    checks.push(Check::below("similarity_b", sim.b, 1e-10));
    let (da, db) = singular_multiset_check(&sh, spec)?;
    checks.push(Check::below("singular_values_a", da, 1e-10));
    checks.push(Check::below("singular_values_b", db, 1e-10));

    let csd = csd_assemble(spec);
    let (ra, rb) = csd.reconstruction_residuals(&sh);
    checks.push(Check::below("csd_a", ra, 1e-10));
    checks.push(Check::below("csd_b", rb, 1e-10));
    checks.push(Check::below("csd_pythagorean", csd.pythagorean_defect(), 1e-12));

    if spec.variant() == Variant::Reflection {
        checks.push(Check::below("central_blocks", csd.central_block_defect()?, 1e-12));
        let alt = spec.with_weights(alternate_weights(spec.weights()))?;
        let inv = involution_check(spec, &alt)?;
        checks.push(Check::below("square_structure", inv.structure, 1e-10));
        checks.push(Check::below("square_key_independence", inv.key_cancel, 1e-10));
    }

    let phi = output_matrix(spec, psi)?;
    let c = coefficient_matrix(spec);
    let x = row_matrix(spec, psi)?;
    let cx = c.matrix().matmul(x.matrix());
    checks.push(Check::below("factorization", phi.matrix().distance(&cx), 1e-12));
    let rank = numerical_rank(phi.matrix(), 1e-10)?;
    checks.push(Check::at_most("rank_bound", rank as f64, k as f64));
    if matches!(spec.mixing(), Mixing::Hadamard) {
        let gram = c.matrix().adjoint_matmul(c.matrix());
        let target = ComplexMatrix::identity(k).scale_real(1.0 / k as f64);
        checks.push(Check::below("coefficient_gram", gram.distance(&target), 1e-12));
    }
    Ok(Report::new(checks))
}
