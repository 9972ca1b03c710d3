//! The Hadamard-mixing LCU circuit as explicit matrices.
//!
//! Register order is `index ⊗ rotation ⊗ system`, so the amplitude of
//! `|i>|r>|k>` sits at position `(i * 2 + r) * N + k` of the full state.
//! Outcome-indexed collections (`OutcomeStates`, rows of `Phi`) are instead
//! laid out r-major: slot `r * K + i`.

mod config;

use std::collections::BTreeMap;

pub use config::{CircuitConfig, MixingKind, UnitaryKind, UnitarySource, VariantKind};

use crate::error::{LcuError, Result};
use crate::linalg::{dft_matrix, hadamard_matrix, kron, ComplexMatrix, ComplexVector, ZERO};
use crate::rng::SeededRng;

const UNITARY_TOL: f64 = 1e-10;

/// Index-register mixing layer.
#[derive(Clone, Debug, PartialEq)]
pub enum Mixing {
    Hadamard,
    /// `F` on the way out and `F^dag` on the way in.
    Dft,
    /// Secret `K x K` unitary `W` (applied as `W^dag` then `W`).
    Secret(ComplexMatrix),
}

impl Mixing {
    pub fn name(&self) -> &'static str {
        match self {
            Mixing::Hadamard => "hadamard",
            Mixing::Dft => "dft",
            Mixing::Secret(_) => "secret",
        }
    }
}

/// Shape of the per-term rotation gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// `[[w, r], [r, -w]]`
    Reflection,
    /// `[[w, r], [-r, w]]`
    Cyclic,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Reflection => "reflection",
            Variant::Cyclic => "cyclic",
        }
    }
}

/// `sqrt(1 - w^2)`, clamped against rounding just outside `[-1, 1]`.
pub fn complement(w: f64) -> f64 {
    (1.0 - w * w).max(0.0).sqrt()
}

/// The single-qubit coefficient gate `R_t`.
pub fn rotation_gate(w: f64, variant: Variant) -> Result<ComplexMatrix> {
    if !w.is_finite() || w.abs() > 1.0 {
        return Err(LcuError::InvalidParameter(format!(
            "rotation weight must satisfy |w| <= 1, got {w}"
        )));
    }
    let r = complement(w);
    let entries = match variant {
        Variant::Reflection => [w, r, r, -w],
        Variant::Cyclic => [w, r, -r, w],
    };
    ComplexMatrix::from_real(2, 2, &entries)
}

/// `<r| R_t |0>` for `r = 0, 1`.
pub fn rotation_column(w: f64, variant: Variant) -> [f64; 2] {
    let r = complement(w);
    match variant {
        Variant::Reflection => [w, r],
        Variant::Cyclic => [w, -r],
    }
}

/// Global scale `c = max |alpha_t|` and weights `beta = alpha / c`.
pub fn scale_coefficients(alpha: &[f64]) -> Result<(f64, Vec<f64>)> {
    let c = alpha.iter().fold(0.0f64, |m, a| m.max(a.abs()));
    if c == 0.0 || !c.is_finite() {
        return Err(LcuError::InvalidParameter(
            "coefficients must be finite and not all zero".into(),
        ));
    }
    Ok((c, alpha.iter().map(|a| a / c).collect()))
}

/// Full description of one circuit instance.
#[derive(Clone, Debug)]
pub struct CircuitSpec {
    qubits: usize,
    weights: Vec<f64>,
    unitaries: Vec<ComplexMatrix>,
    mixing: Mixing,
    variant: Variant,
}

impl CircuitSpec {
    pub fn new(
        qubits: usize,
        weights: Vec<f64>,
        unitaries: Vec<ComplexMatrix>,
        mixing: Mixing,
        variant: Variant,
    ) -> Result<Self> {
        let k = weights.len();
        if !k.is_power_of_two() {
            return Err(LcuError::InvalidParameter(format!(
                "term count K must be a power of two, got {k}"
            )));
        }
        if unitaries.len() != k {
            return Err(LcuError::Dimension(format!(
                "{k} weights but {} unitaries",
                unitaries.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || w.abs() > 1.0) {
            return Err(LcuError::InvalidParameter(format!(
                "weights must satisfy |w_t| <= 1, got {w}"
            )));
        }
        let dim = 1usize
            .checked_shl(qubits as u32)
            .ok_or_else(|| LcuError::InvalidParameter(format!("{qubits} qubits")))?;
        for (t, u) in unitaries.iter().enumerate() {
            if u.shape() != (dim, dim) {
                return Err(LcuError::Dimension(format!(
                    "unitary {t} is {}x{}, expected {dim}x{dim}",
                    u.rows(),
                    u.cols()
                )));
            }
            let defect = u.unitarity_defect();
            if defect >= UNITARY_TOL {
                return Err(LcuError::NotUnitary(defect));
            }
        }
        if let Mixing::Secret(w) = &mixing {
            if w.shape() != (k, k) {
                return Err(LcuError::Dimension(format!(
                    "mixing matrix is {}x{}, expected {k}x{k}",
                    w.rows(),
                    w.cols()
                )));
            }
            let defect = w.unitarity_defect();
            if defect >= UNITARY_TOL {
                return Err(LcuError::NotUnitary(defect));
            }
        }
        Ok(Self {
            qubits,
            weights,
            unitaries,
            mixing,
            variant,
        })
    }

    /// Hadamard-mixed reflection-variant spec with seeded Haar unitaries.
    pub fn haar(weights: Vec<f64>, qubits: usize, seed: u64) -> Result<Self> {
        let dim = 1usize << qubits;
        let unitaries = haar_family(weights.len(), dim, seed)?;
        Self::new(qubits, weights, unitaries, Mixing::Hadamard, Variant::Reflection)
    }

    /// Number of terms `K`.
    pub fn terms(&self) -> usize {
        self.weights.len()
    }

    pub fn qubits(&self) -> usize {
        self.qubits
    }

    /// System dimension `N = 2^n`.
    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn complements(&self) -> Vec<f64> {
        self.weights.iter().map(|&w| complement(w)).collect()
    }

    pub fn unitaries(&self) -> &[ComplexMatrix] {
        &self.unitaries
    }

    pub fn mixing(&self) -> &Mixing {
        &self.mixing
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Same public parameters with different weights.
    pub fn with_weights(&self, weights: Vec<f64>) -> Result<Self> {
        Self::new(
            self.qubits,
            weights,
            self.unitaries.clone(),
            self.mixing.clone(),
            self.variant,
        )
    }

    pub fn with_mixing(&self, mixing: Mixing) -> Result<Self> {
        Self::new(
            self.qubits,
            self.weights.clone(),
            self.unitaries.clone(),
            mixing,
            self.variant,
        )
    }

    pub fn with_variant(&self, variant: Variant) -> Self {
        Self {
            variant,
            ..self.clone()
        }
    }

    /// The `K x K` output-layer mixing matrix `G` (the input layer is `G^dag`).
    pub fn mixing_matrix(&self) -> ComplexMatrix {
        let k = self.terms();
        match &self.mixing {
            Mixing::Hadamard => hadamard_matrix(k).expect("K validated as power of two"),
            Mixing::Dft => dft_matrix(k).expect("K >= 1"),
            Mixing::Secret(w) => w.clone(),
        }
    }

    /// `a_{i,t} = G_{it} conj(G_{0t})`: the amplitude with which term `t`
    /// reaches index outcome `i` when the index register starts in `|0>`.
    /// Equals `s_{i,t} / K` for Hadamard mixing.
    pub fn index_amplitudes(&self) -> ComplexMatrix {
        let g = self.mixing_matrix();
        let k = self.terms();
        ComplexMatrix::from_fn(k, k, |i, t| g[(i, t)] * g[(0, t)].conj())
    }

    /// `<r|R_t|0>` for every term, as `[r][t]`.
    pub fn rotation_columns(&self) -> [Vec<f64>; 2] {
        let cols: Vec<[f64; 2]> = self
            .weights
            .iter()
            .map(|&w| rotation_column(w, self.variant))
            .collect();
        [
            cols.iter().map(|c| c[0]).collect(),
            cols.iter().map(|c| c[1]).collect(),
        ]
    }

    /// `T = sum_t alpha_t U_t`.
    pub fn linear_combination(&self, alpha: &[f64]) -> ComplexMatrix {
        let n = self.dim();
        let mut t = ComplexMatrix::zeros(n, n);
        for (a, u) in alpha.iter().zip(&self.unitaries) {
            t = &t + &u.scale_real(*a);
        }
        t
    }

    pub(crate) fn check_state(&self, psi: &ComplexVector) -> Result<()> {
        if psi.dim() != self.dim() {
            return Err(LcuError::Dimension(format!(
                "input state has dimension {}, circuit acts on {}",
                psi.dim(),
                self.dim()
            )));
        }
        let nrm = psi.norm();
        if (nrm - 1.0).abs() > 1e-10 {
            return Err(LcuError::InvalidParameter(format!(
                "input state must be normalized, ||psi|| = {nrm}"
            )));
        }
        Ok(())
    }
}

/// `K` Haar unitaries of dimension `dim`, with per-term seeds drawn from `seed`.
pub fn haar_family(k: usize, dim: usize, seed: u64) -> Result<Vec<ComplexMatrix>> {
    let mut rng = SeededRng::new(seed);
    (0..k)
        .map(|_| crate::linalg::haar_random_unitary(dim, rng.next_u64()))
        .collect()
}

/// `M = ⊕_t (R_t ⊗ U_t)`, of size `2KN x 2KN`.
pub fn select_operator(spec: &CircuitSpec) -> ComplexMatrix {
    let blocks: Vec<ComplexMatrix> = spec
        .weights
        .iter()
        .zip(&spec.unitaries)
        .map(|(&w, u)| {
            let r = rotation_gate(w, spec.variant).expect("weights validated");
            kron(&r, u)
        })
        .collect();
    ComplexMatrix::direct_sum(&blocks)
}

/// `V = (G ⊗ I_2 ⊗ I_N) M (G^dag ⊗ I_2 ⊗ I_N)`, built by explicit products.
pub fn circuit_unitary(spec: &CircuitSpec) -> ComplexMatrix {
    let g = spec.mixing_matrix();
    let rest = ComplexMatrix::identity(2 * spec.dim());
    let out_layer = kron(&g, &rest);
    let in_layer = kron(&g.adjoint(), &rest);
    out_layer.matmul(&select_operator(spec)).matmul(&in_layer)
}

/// `|0>_I |0>_R |psi>` in the full register.
pub fn extended_input(spec: &CircuitSpec, psi: &ComplexVector) -> ComplexVector {
    let mut v = ComplexVector::zeros(2 * spec.terms() * spec.dim());
    v.as_mut_slice()[..psi.dim()].copy_from_slice(psi.as_slice());
    v
}

/// The `2K` unnormalized outcome states and their probabilities.
#[derive(Clone, Debug)]
pub struct OutcomeStates {
    terms: usize,
    states: Vec<ComplexVector>,
    probabilities: Vec<f64>,
}

impl OutcomeStates {
    pub fn terms(&self) -> usize {
        self.terms
    }

    pub fn state(&self, i: usize, r: usize) -> &ComplexVector {
        &self.states[r * self.terms + i]
    }

    pub fn probability(&self, i: usize, r: usize) -> f64 {
        self.probabilities[r * self.terms + i]
    }

    /// States in r-major order.
    pub fn states(&self) -> &[ComplexVector] {
        &self.states
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }
}

/// `phi_{i,r} = sum_t a_{i,t} <r|R_t|0> U_t psi`.
pub fn output_states(spec: &CircuitSpec, psi: &ComplexVector) -> Result<OutcomeStates> {
    spec.check_state(psi)?;
    let k = spec.terms();
    let images: Vec<ComplexVector> = spec.unitaries.iter().map(|u| u.apply(psi)).collect();
    let amps = spec.index_amplitudes();
    let rot = spec.rotation_columns();
    let mut states = Vec::with_capacity(2 * k);
    for rot_r in &rot {
        for i in 0..k {
            let mut phi = ComplexVector::zeros(spec.dim());
            for (t, img) in images.iter().enumerate() {
                let coeff = amps[(i, t)] * rot_r[t];
                if coeff != ZERO {
                    phi.axpy(coeff, img);
                }
            }
            states.push(phi);
        }
    }
    let probabilities = states.iter().map(ComplexVector::norm_sqr).collect();
    Ok(OutcomeStates {
        terms: k,
        states,
        probabilities,
    })
}

/// Post-selection probabilities of the new circuit and of standard LCU.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuccessProbabilities {
    /// `||T psi||^2 / (c^2 K^2)`.
    pub p00: f64,
    /// `p_{0,0}` read off the simulated outcome states.
    pub p00_simulated: f64,
    /// `p_{0,0} + p_{0,1}` (index register only).
    pub p0_any: f64,
    /// `||T psi||^2 / (sum |alpha_t|)^2`.
    pub p_std: f64,
}

pub fn success_probabilities(
    spec: &CircuitSpec,
    psi: &ComplexVector,
    alpha: &[f64],
) -> Result<SuccessProbabilities> {
    if matches!(spec.mixing, Mixing::Secret(_)) {
        return Err(LcuError::Unsupported(
            "success probabilities assume a uniform first mixing row".into(),
        ));
    }
    if alpha.len() != spec.terms() {
        return Err(LcuError::Dimension(format!(
            "{} coefficients for {} terms",
            alpha.len(),
            spec.terms()
        )));
    }
    let (c, beta) = scale_coefficients(alpha)?;
    if beta
        .iter()
        .zip(&spec.weights)
        .any(|(b, w)| (b - w).abs() > 1e-12)
    {
        return Err(LcuError::InvalidParameter(
            "circuit weights differ from the scaled coefficients".into(),
        ));
    }
    let k = spec.terms() as f64;
    let t_psi = spec.linear_combination(alpha).apply(psi);
    let t_norm2 = t_psi.norm_sqr();
    let l1: f64 = alpha.iter().map(|a| a.abs()).sum();
    let out = output_states(spec, psi)?;
    Ok(SuccessProbabilities {
        p00: t_norm2 / (c * c * k * k),
        p00_simulated: out.probability(0, 0),
        p0_any: out.probability(0, 0) + out.probability(0, 1),
        p_std: t_norm2 / (l1 * l1),
    })
}

/// Multinomial shot record over outcome triples `(i, r, k)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShotDataset {
    pub terms: usize,
    pub dim: usize,
    pub shots: u64,
    pub seed: u64,
    pub counts: BTreeMap<(usize, usize, usize), u64>,
}

impl ShotDataset {
    pub fn count(&self, i: usize, r: usize, k: usize) -> u64 {
        self.counts.get(&(i, r, k)).copied().unwrap_or(0)
    }
}

/// Exact joint distribution `p_{i,r,k} = |<k|phi_{i,r}>|^2`, flattened as
/// `(r * K + i) * N + k`.
pub fn outcome_distribution(spec: &CircuitSpec, psi: &ComplexVector) -> Result<Vec<f64>> {
    let out = output_states(spec, psi)?;
    Ok(out
        .states()
        .iter()
        .flat_map(|s| s.as_slice().iter().map(|z| z.norm_sqr()))
        .collect())
}

/// Inverse-CDF multinomial sampling of `shots` measurement records.
pub fn sample_shots(
    spec: &CircuitSpec,
    psi: &ComplexVector,
    shots: u64,
    seed: u64,
) -> Result<ShotDataset> {
    if shots == 0 {
        return Err(LcuError::InvalidParameter("shots must be at least 1".into()));
    }
    let probs = outcome_distribution(spec, psi)?;
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p;
        cdf.push(acc);
    }
    let total = acc;
    let (k, n) = (spec.terms(), spec.dim());
    let mut rng = SeededRng::new(seed);
    let mut tally = vec![0u64; probs.len()];
    for _ in 0..shots {
        let u = rng.uniform() * total;
        let mut idx = cdf.partition_point(|&c| c <= u);
        // Guard against rounding at the top end and zero-probability cells.
        idx = idx.min(probs.len() - 1);
        while probs[idx] == 0.0 && idx > 0 {
            idx -= 1;
        }
        tally[idx] += 1;
    }
    let mut counts = BTreeMap::new();
    for (idx, &c) in tally.iter().enumerate() {
        if c > 0 {
            let row = idx / n;
            counts.insert((row % k, row / k, idx % n), c);
        }
    }
    Ok(ShotDataset {
        terms: k,
        dim: n,
        shots,
        seed,
        counts,
    })
}

/// Outcome states after reading the rotation qubit in the `|+>, |->` basis.
#[derive(Clone, Debug)]
pub struct PlusMinusStates {
    pub plus: Vec<ComplexVector>,
    pub minus: Vec<ComplexVector>,
}

pub fn plusminus_states(spec: &CircuitSpec, psi: &ComplexVector) -> Result<PlusMinusStates> {
    let out = output_states(spec, psi)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let k = spec.terms();
    let mut plus = Vec::with_capacity(k);
    let mut minus = Vec::with_capacity(k);
    for i in 0..k {
        let (a, b) = (out.state(i, 0), out.state(i, 1));
        plus.push((a + b).scale_real(s));
        minus.push((a - b).scale_real(s));
    }
    Ok(PlusMinusStates { plus, minus })
}

#[cfg(test)]
mod tests;
