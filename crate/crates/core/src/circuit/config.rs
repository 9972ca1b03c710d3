//! JSON document describing a [`CircuitSpec`].
//!
//! ```json
//! {"K": 4, "n": 2, "weights": [1, 1, 0.5, 0.5],
//!  "unitaries": {"kind": "haar", "seed": 7},
//!  "mixing": "hadamard", "variant": "reflection"}
//! ```
//!
//! `unitaries.kind` is one of `haar`, `pauli_strings`, `permutation` or
//! `explicit`. Explicit matrices are nested arrays of `[re, im]` pairs.
//! Secret mixing takes either an explicit `mixing_matrix` or a completion
//! seed `gamma` from which the Householder completion of the weights is
//! derived.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{haar_family, CircuitSpec, Mixing, Variant};
use crate::error::{LcuError, Result};
use crate::io::{matrix_from_pairs, matrix_to_pairs, PairMatrix};
use crate::linalg::{
    pauli_string, permutation_matrix, random_involutory_permutation, random_pauli_label,
    ComplexMatrix,
};
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnitaryKind {
    #[default]
    Haar,
    PauliStrings,
    Permutation,
    Explicit,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UnitarySource {
    pub kind: UnitaryKind,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl UnitarySource {
    /// Materializes `k` unitaries on `n` qubits without checking them.
    pub fn matrices(&self, k: usize, n: usize) -> Result<Vec<ComplexMatrix>> {
        let dim = 1usize
            .checked_shl(n as u32)
            .ok_or_else(|| LcuError::InvalidParameter(format!("n = {n}")))?;
        match self.kind {
            UnitaryKind::Haar => haar_family(k, dim, self.seed),
            UnitaryKind::PauliStrings => {
                let labels: Vec<String> = match &self.data {
                    Some(v) => serde_json::from_value(v.clone())?,
                    None => {
                        let mut rng = SeededRng::new(self.seed);
                        (0..k).map(|_| random_pauli_label(n, &mut rng)).collect()
                    }
                };
                labels
                    .iter()
                    .map(|l| {
                        if l.chars().count() != n {
                            return Err(LcuError::Dimension(format!(
                                "Pauli label {l:?} does not act on {} qubits",
                                n
                            )));
                        }
                        pauli_string(l)
                    })
                    .collect()
            }
            UnitaryKind::Permutation => {
                let perms: Vec<Vec<usize>> = match &self.data {
                    Some(v) => serde_json::from_value(v.clone())?,
                    None => {
                        let mut rng = SeededRng::new(self.seed);
                        (0..k)
                            .map(|_| random_involutory_permutation(dim, &mut rng))
                            .collect()
                    }
                };
                perms.iter().map(|p| permutation_matrix(p)).collect()
            }
            UnitaryKind::Explicit => {
                let data = self.data.as_ref().ok_or_else(|| {
                    LcuError::Parse("explicit unitaries need a \"data\" field".into())
                })?;
                let mats: Vec<PairMatrix> = serde_json::from_value(data.clone())?;
                mats.iter().map(matrix_from_pairs).collect()
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MixingKind {
    #[default]
    Hadamard,
    Dft,
    Secret,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VariantKind {
    #[default]
    Reflection,
    Cyclic,
}

impl From<VariantKind> for Variant {
    fn from(v: VariantKind) -> Self {
        match v {
            VariantKind::Reflection => Variant::Reflection,
            VariantKind::Cyclic => Variant::Cyclic,
        }
    }
}

impl From<Variant> for VariantKind {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Reflection => VariantKind::Reflection,
            Variant::Cyclic => VariantKind::Cyclic,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitConfig {
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    pub weights: Vec<f64>,
    pub unitaries: UnitarySource,
    #[serde(default)]
    pub mixing: MixingKind,
    #[serde(default)]
    pub variant: VariantKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mixing_matrix: Option<PairMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<u64>,
}

impl CircuitConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Materializes the unitaries without checking them.
    pub fn unitary_matrices(&self) -> Result<Vec<ComplexMatrix>> {
        self.unitaries.matrices(self.k, self.n)
    }

    pub fn build(&self) -> Result<CircuitSpec> {
        if self.weights.len() != self.k {
            return Err(LcuError::Dimension(format!(
                "K = {} but {} weights given",
                self.k,
                self.weights.len()
            )));
        }
        let unitaries = self.unitary_matrices()?;
        if unitaries.len() != self.k {
            return Err(LcuError::Dimension(format!(
                "K = {} but {} unitaries given",
                self.k,
                unitaries.len()
            )));
        }
        let mixing = match self.mixing {
            MixingKind::Hadamard => Mixing::Hadamard,
            MixingKind::Dft => Mixing::Dft,
            MixingKind::Secret => match (&self.mixing_matrix, self.gamma) {
                (Some(m), _) => Mixing::Secret(matrix_from_pairs(m)?),
                (None, Some(gamma)) => {
                    Mixing::Secret(crate::trapdoor::secret_mixing_matrix(&self.weights, gamma)?)
                }
                (None, None) => {
                    return Err(LcuError::Parse(
                        "secret mixing needs \"mixing_matrix\" or \"gamma\"".into(),
                    ))
                }
            },
        };
        CircuitSpec::new(self.n, self.weights.clone(), unitaries, mixing, self.variant.into())
    }

    /// Self-contained config with every matrix written out explicitly.
    pub fn explicit(spec: &CircuitSpec) -> Self {
        let data: Vec<PairMatrix> = spec.unitaries().iter().map(matrix_to_pairs).collect();
        let (mixing, mixing_matrix) = match spec.mixing() {
            Mixing::Hadamard => (MixingKind::Hadamard, None),
            Mixing::Dft => (MixingKind::Dft, None),
            Mixing::Secret(w) => (MixingKind::Secret, Some(matrix_to_pairs(w))),
        };
        Self {
            k: spec.terms(),
            n: spec.qubits(),
            weights: spec.weights().to_vec(),
            unitaries: UnitarySource {
                kind: UnitaryKind::Explicit,
                seed: 0,
                data: Some(serde_json::to_value(data).expect("pairs serialize")),
            },
            mixing,
            variant: spec.variant().into(),
            mixing_matrix,
            gamma: None,
        }
    }
}
