//! Coefficient-hiding trapdoor built on the LCU circuit.
//!
//! The secret is the weight vector (plus, in the secret-mixing scheme, a
//! seed `gamma` that fixes the completion of the mixing unitary). Public
//! evaluation reveals only outcome magnitudes; the key holder completes
//! `Phi` and inverts `C`. With full complex amplitudes the Hadamard scheme
//! falls to a direct algebraic attack.

use serde::{Deserialize, Serialize};

use crate::circuit::{
    circuit_unitary, extended_input, haar_family, sample_shots, CircuitSpec, Mixing, Variant,
};
use crate::error::{LcuError, Result};
use crate::linalg::{hadamard_sign, ComplexMatrix, ComplexVector, C64, ZERO};
use crate::output::{
    coefficient_matrix, empirical_magnitudes, extract_target, invert_with_c, output_matrix,
    CoefficientMatrix, OutputMatrix, RowMatrix,
};
use crate::recovery::{factorized_complete, ObservedEntries};
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Hadamard,
    SecretMixing,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Hadamard => "hadamard",
            Scheme::SecretMixing => "secret_mixing",
        }
    }
}

/// Serialized as `{"scheme", "weights", "gamma"}`; `W` is always re-derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecretKey {
    pub scheme: Scheme,
    pub weights: Vec<f64>,
    pub gamma: u64,
}

impl SecretKey {
    pub fn from_json(text: &str) -> Result<Self> {
        let key: Self = serde_json::from_str(text)?;
        key.validate()?;
        Ok(key)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn validate(&self) -> Result<()> {
        if !self.weights.len().is_power_of_two() {
            return Err(LcuError::InvalidParameter(format!(
                "key has {} weights; K must be a power of two",
                self.weights.len()
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| !w.is_finite() || w.abs() > 1.0) {
            return Err(LcuError::InvalidParameter(format!("key weight {w} outside [-1, 1]")));
        }
        Ok(())
    }

    pub fn terms(&self) -> usize {
        self.weights.len()
    }

    pub fn mixing(&self) -> Result<Mixing> {
        Ok(match self.scheme {
            Scheme::Hadamard => Mixing::Hadamard,
            Scheme::SecretMixing => Mixing::Secret(secret_mixing_matrix(&self.weights, self.gamma)?),
        })
    }

    /// The circuit the key holder runs.
    pub fn spec(&self, public: &PublicParams) -> Result<CircuitSpec> {
        if public.scheme != self.scheme {
            return Err(LcuError::InvalidParameter(format!(
                "key is for the {} scheme, public parameters for {}",
                self.scheme.name(),
                public.scheme.name()
            )));
        }
        if public.unitaries.len() != self.terms() {
            return Err(LcuError::Dimension(format!(
                "key has {} weights, public parameters {} unitaries",
                self.terms(),
                public.unitaries.len()
            )));
        }
        CircuitSpec::new(
            public.qubits,
            self.weights.clone(),
            public.unitaries.clone(),
            self.mixing()?,
            public.variant,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PublicParams {
    pub qubits: usize,
    pub unitaries: Vec<ComplexMatrix>,
    pub variant: Variant,
    pub scheme: Scheme,
}

impl PublicParams {
    pub fn haar(terms: usize, qubits: usize, seed: u64, scheme: Scheme) -> Result<Self> {
        Ok(Self {
            qubits,
            unitaries: haar_family(terms, 1 << qubits, seed)?,
            variant: Variant::Reflection,
            scheme,
        })
    }

    pub fn terms(&self) -> usize {
        self.unitaries.len()
    }

    pub fn dim(&self) -> usize {
        1 << self.qubits
    }
}

/// Weights uniform in `[0.1, 1]`; `gamma` is drawn for the secret-mixing
/// scheme and zero otherwise.
pub fn keygen(terms: usize, scheme: Scheme, seed: u64) -> Result<SecretKey> {
    if !terms.is_power_of_two() {
        return Err(LcuError::InvalidParameter(format!(
            "K must be a power of two, got {terms}"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let weights = (0..terms).map(|_| rng.uniform_range(0.1, 1.0)).collect();
    let gamma = match scheme {
        Scheme::Hadamard => 0,
        Scheme::SecretMixing => rng.next_u64(),
    };
    Ok(SecretKey {
        scheme,
        weights,
        gamma,
    })
}

/// `W = (1 ⊕ V_gamma) H`, where the Householder reflection `H` swaps `e_0`
/// and `w / ||w||` and `V_gamma` is a Haar unitary on the complement.
/// Row 0 of `W` is `w / ||w||`.
pub fn secret_mixing_matrix(weights: &[f64], gamma: u64) -> Result<ComplexMatrix> {
    let k = weights.len();
    if k == 0 {
        return Err(LcuError::InvalidParameter("empty weight vector".into()));
    }
    let norm = weights.iter().map(|w| w * w).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(LcuError::InvalidParameter("weights must not all vanish".into()));
    }
    let v: Vec<f64> = weights.iter().map(|w| w / norm).collect();
    let mut u = v.iter().map(|x| -x).collect::<Vec<f64>>();
    u[0] += 1.0;
    let uu: f64 = u.iter().map(|x| x * x).sum();
    let h = if uu < 1e-30 {
        ComplexMatrix::identity(k)
    } else {
        ComplexMatrix::from_fn(k, k, |i, j| {
            let delta = if i == j { 1.0 } else { 0.0 };
            C64::new(delta - 2.0 * u[i] * u[j] / uu, 0.0)
        })
    };
    if k == 1 {
        return Ok(h);
    }
    let tail = crate::linalg::haar_random_unitary(k - 1, gamma)?;
    let complement = ComplexMatrix::direct_sum(&[ComplexMatrix::identity(1), tail]);
    Ok(complement.matmul(&h))
}

/// Outcome magnitudes laid out like `Phi`.
#[derive(Clone, Debug, PartialEq)]
pub struct EvalOutput {
    pub rows: usize,
    pub cols: usize,
    pub magnitudes: Vec<f64>,
    /// Zero for exact probabilities.
    pub shots: u64,
}

impl EvalOutput {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.magnitudes[row * self.cols + col]
    }

    /// `sqrt(p)` as a phase-free amplitude matrix.
    pub fn amplitudes(&self) -> ComplexMatrix {
        ComplexMatrix::from_fn(self.rows, self.cols, |i, j| C64::new(self.get(i, j).sqrt(), 0.0))
    }
}

/// `f_sk(psi)`: exact `|Phi|^2` for `shots = 0`, empirical frequencies
/// otherwise.
pub fn eval_trapdoor(
    key: &SecretKey,
    public: &PublicParams,
    psi: &ComplexVector,
    shots: u64,
    seed: u64,
) -> Result<EvalOutput> {
    let spec = key.spec(public)?;
    if shots == 0 {
        let phi = output_matrix(&spec, psi)?;
        return Ok(EvalOutput {
            rows: phi.matrix().rows(),
            cols: phi.matrix().cols(),
            magnitudes: phi.magnitudes(),
            shots: 0,
        });
    }
    let est = empirical_magnitudes(&sample_shots(&spec, psi, shots, seed)?)?;
    Ok(EvalOutput {
        rows: est.rows,
        cols: est.cols,
        magnitudes: est.probabilities,
        shots,
    })
}

pub enum KeyedInput<'a> {
    Exact(&'a OutputMatrix),
    Partial(&'a ObservedEntries),
}

#[derive(Clone, Debug)]
pub struct Inversion {
    pub x_hat: RowMatrix,
    /// `sum_t w_t X_t = D_w psi`.
    pub target: ComplexVector,
    pub underdetermined_columns: Vec<usize>,
}

/// The key holder's coefficient matrix.
pub fn key_coefficients(key: &SecretKey, public: &PublicParams) -> Result<CoefficientMatrix> {
    Ok(coefficient_matrix(&key.spec(public)?))
}

pub fn invert_with_key(key: &SecretKey, public: &PublicParams, input: KeyedInput) -> Result<Inversion> {
    let c = key_coefficients(key, public)?;
    let (phi, under) = match input {
        KeyedInput::Exact(phi) => (phi.clone(), Vec::new()),
        KeyedInput::Partial(obs) => {
            let (rep, _) = factorized_complete(&c, obs, None)?;
            (OutputMatrix(rep.phi_hat), rep.underdetermined_columns)
        }
    };
    let x_hat = invert_with_c(&c, &phi)?;
    let target = extract_target(&x_hat, &key.weights)?;
    Ok(Inversion {
        x_hat,
        target,
        underdetermined_columns: under,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HadamardAttack {
    /// `None` where the row of `X` is numerically zero.
    pub weights: Vec<Option<f64>>,
    /// Per-term consistency residual: how far row `t` of `S^T Phi_1` is from
    /// a real multiple of row `t` of `S^T Phi_0`, relative to their size.
    pub residuals: Vec<f64>,
}

/// A residual above this marks the recovered weights as unreliable.
pub const ATTACK_TOL: f64 = 1e-6;

impl HadamardAttack {
    pub fn succeeded(&self) -> bool {
        self.weights.iter().all(Option::is_some)
            && self.residuals.iter().all(|&r| r <= ATTACK_TOL)
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }

    /// `max_t |w_hat_t - w_t|`; unrecovered terms count as infinite error.
    pub fn max_error(&self, truth: &[f64]) -> f64 {
        self.weights.iter().zip(truth).fold(0.0, |m, (w, t)| match w {
            Some(w) => m.max((w - t).abs()),
            None => f64::INFINITY,
        })
    }
}

/// Recovers the weights from full complex `Phi` using `S^T S = K I`:
/// `S^T Phi_0 = diag(w) X` and `S^T Phi_1 = ±diag(r) X`.
pub fn hadamard_attack(phi: &ComplexMatrix, public: &PublicParams) -> Result<HadamardAttack> {
    if public.scheme != Scheme::Hadamard {
        return Err(LcuError::Unsupported("the algebraic attack needs the public Hadamard mixing".into()));
    }
    let k = public.terms();
    let n = public.dim();
    if phi.shape() != (2 * k, n) {
        return Err(LcuError::Dimension(format!(
            "Phi is {}x{}, expected {}x{n}",
            phi.rows(),
            phi.cols(),
            2 * k
        )));
    }
    let bottom_sign = match public.variant {
        Variant::Reflection => 1.0,
        Variant::Cyclic => -1.0,
    };
    let scale = phi.frobenius_norm();
    let mut weights = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    for t in 0..k {
        let mut y0 = vec![ZERO; n];
        let mut y1 = vec![ZERO; n];
        for i in 0..k {
            let s = hadamard_sign(i, t);
            for col in 0..n {
                y0[col] += phi[(i, col)] * s;
                y1[col] += phi[(k + i, col)] * (s * bottom_sign);
            }
        }
        let energy = |col: usize| y0[col].norm_sqr() + y1[col].norm_sqr();
        let best = (0..n).max_by(|&a, &b| energy(a).total_cmp(&energy(b))).expect("n >= 1");
        let row_norm = (0..n).map(energy).sum::<f64>().sqrt();
        if row_norm <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            weights.push(None);
            residuals.push(f64::INFINITY);
            continue;
        }
        // Ratio from the larger of the two entries to avoid dividing by ~0.
        let (w, complex_ratio, from_w) = if y0[best].norm() >= y1[best].norm() {
            let rho = y1[best] / y0[best]; // r / w
            // r = 0 leaves only |w| = 1 observable; report +1.
            let w = if rho.re.abs() <= 1e-13 {
                1.0
            } else {
                rho.re.signum() / (1.0 + rho.re * rho.re).sqrt()
            };
            (w, rho, true)
        } else {
            let tau = y0[best] / y1[best]; // w / r
            (tau.re / (1.0 + tau.re * tau.re).sqrt(), tau, false)
        };
        // Consistency: the ratio must be real and hold for every column.
        let real_ratio = C64::new(complex_ratio.re, 0.0);
        let mismatch: f64 = (0..n)
            .map(|col| {
                let d = if from_w {
                    y1[col] - y0[col] * real_ratio
                } else {
                    y0[col] - y1[col] * real_ratio
                };
                d.norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        weights.push(Some(w));
        residuals.push(mismatch / row_norm);
    }
    Ok(HadamardAttack { weights, residuals })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseRetrievalOptions {
    pub restarts: usize,
    pub iters: usize,
    pub seed: u64,
}

impl Default for PhaseRetrievalOptions {
    fn default() -> Self {
        Self {
            restarts: 20,
            iters: 500,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RestartResult {
    pub weights: Vec<f64>,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseRetrievalReport {
    pub best_weights: Vec<f64>,
    /// `|| |C(w) X|^2 - p ||_2` at the best restart.
    pub residual: f64,
    pub restarts: Vec<RestartResult>,
}

/// Attacker's model: `X_t = U_t psi_hat`, `w_t = cos theta_t` with
/// `theta_t` kept in `[0, pi]` so that `r_t = sin theta_t >= 0`.
struct Model<'a> {
    public: &'a PublicParams,
    target: &'a [f64],
    rows: usize,
    cols: usize,
}

impl Model<'_> {
    fn coefficients(&self, theta: &[f64]) -> ComplexMatrix {
        let k = self.public.terms();
        let sign = if self.public.variant == Variant::Cyclic { -1.0 } else { 1.0 };
        ComplexMatrix::from_fn(2 * k, k, |row, t| {
            let (r, i) = (row / k, row % k);
            let v = if r == 0 { theta[t].cos() } else { sign * theta[t].sin() };
            C64::new(hadamard_sign(i, t) * v / k as f64, 0.0)
        })
    }

    fn rows_x(&self, psi: &ComplexVector) -> ComplexMatrix {
        let rows: Vec<Vec<C64>> = self.public.unitaries.iter().map(|u| u.apply(psi).into_vec()).collect();
        ComplexMatrix::from_rows(&rows).expect("consistent shapes")
    }

    fn loss(&self, theta: &[f64], psi: &ComplexVector) -> f64 {
        let z = self.coefficients(theta).matmul(&self.rows_x(psi));
        z.as_slice()
            .iter()
            .zip(self.target)
            .map(|(z, p)| (z.norm_sqr() - p).powi(2))
            .sum()
    }

    /// Gradients in `theta` and `psi` (the latter as `df/d conj(psi)`).
    fn gradient(&self, theta: &[f64], psi: &ComplexVector) -> (f64, Vec<f64>, ComplexVector) {
        let k = self.public.terms();
        let c = self.coefficients(theta);
        let x = self.rows_x(psi);
        let z = c.matmul(&x);
        let mut loss = 0.0;
        // g = df / d conj(z) = 2 e z
        let g = ComplexMatrix::from_fn(self.rows, self.cols, |i, j| {
            let e = z[(i, j)].norm_sqr() - self.target[i * self.cols + j];
            loss += e * e;
            z[(i, j)] * (2.0 * e)
        });
        let sign = if self.public.variant == Variant::Cyclic { -1.0 } else { 1.0 };
        let mut g_theta = vec![0.0; k];
        for (t, gt) in g_theta.iter_mut().enumerate() {
            let (dw, dr) = (-theta[t].sin(), sign * theta[t].cos());
            let mut acc = 0.0;
            for row in 0..2 * k {
                let (r, i) = (row / k, row % k);
                let dc = hadamard_sign(i, t) * if r == 0 { dw } else { dr } / k as f64;
                for col in 0..self.cols {
                    acc += 2.0 * (g[(row, col)].conj() * x[(t, col)]).re * dc;
                }
            }
            *gt = acc;
        }
        let gx = c.adjoint_matmul(&g);
        let mut g_psi = ComplexVector::zeros(self.cols);
        for (t, u) in self.public.unitaries.iter().enumerate() {
            let row = ComplexVector::new(gx.row(t).to_vec());
            g_psi = &g_psi + &u.adjoint().apply(&row);
        }
        (loss, g_theta, g_psi)
    }
}

fn clamp_theta(theta: &mut [f64]) {
    for t in theta {
        *t = t.clamp(0.0, std::f64::consts::PI);
    }
}

/// One descent run with Armijo backtracking.
fn descend(
    model: &Model,
    mut theta: Vec<f64>,
    mut psi: ComplexVector,
    iters: usize,
    psi_fixed: bool,
) -> (Vec<f64>, ComplexVector, f64) {
    let mut step = 1.0;
    let (mut loss, _, _) = model.gradient(&theta, &psi);
    for _ in 0..iters {
        let (_, gt, gp) = model.gradient(&theta, &psi);
        let gnorm2 = gt.iter().map(|g| g * g).sum::<f64>() + if psi_fixed { 0.0 } else { 2.0 * gp.norm_sqr() };
        if gnorm2 == 0.0 || loss == 0.0 {
            break;
        }
        let mut accepted = false;
        while step > 1e-18 {
            let mut th = theta.clone();
            for (a, g) in th.iter_mut().zip(&gt) {
                *a -= step * g;
            }
            clamp_theta(&mut th);
            let ps = if psi_fixed { psi.clone() } else { &psi - &gp.scale_real(2.0 * step) };
            let l = model.loss(&th, &ps);
            if l <= loss - 1e-4 * step * gnorm2 {
                theta = th;
                psi = ps;
                loss = l;
                step *= 2.0;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (theta, psi, loss)
}

/// Residual of a candidate `(w, psi)` against observed magnitudes.
pub fn phase_retrieval_residual(
    eval: &EvalOutput,
    public: &PublicParams,
    weights: &[f64],
    psi: &ComplexVector,
) -> Result<f64> {
    check_eval(eval, public)?;
    let model = Model {
        public,
        target: &eval.magnitudes,
        rows: eval.rows,
        cols: eval.cols,
    };
    let theta: Vec<f64> = weights.iter().map(|w| w.clamp(-1.0, 1.0).acos()).collect();
    Ok(model.loss(&theta, psi).sqrt())
}

fn check_eval(eval: &EvalOutput, public: &PublicParams) -> Result<()> {
    if public.scheme != Scheme::Hadamard {
        return Err(LcuError::Unsupported("the phase-retrieval probe targets the Hadamard scheme".into()));
    }
    if (eval.rows, eval.cols) != (2 * public.terms(), public.dim()) {
        return Err(LcuError::Dimension(format!(
            "magnitudes are {}x{}, public parameters imply {}x{}",
            eval.rows,
            eval.cols,
            2 * public.terms(),
            public.dim()
        )));
    }
    Ok(())
}

/// Multi-restart gradient descent on `|| |C(w) X|^2 - p ||^2`. A difficulty
/// probe, not a solver: nothing guarantees the key is found. `known_psi`
/// grants the attacker the input state.
pub fn phase_retrieval_attack(
    eval: &EvalOutput,
    public: &PublicParams,
    opts: &PhaseRetrievalOptions,
    known_psi: Option<&ComplexVector>,
) -> Result<PhaseRetrievalReport> {
    check_eval(eval, public)?;
    if opts.restarts == 0 {
        return Err(LcuError::InvalidParameter("at least one restart is needed".into()));
    }
    let model = Model {
        public,
        target: &eval.magnitudes,
        rows: eval.rows,
        cols: eval.cols,
    };
    let k = public.terms();
    let mut restarts = Vec::with_capacity(opts.restarts);
    for r in 0..opts.restarts {
        let mut rng = SeededRng::with_stream(opts.seed, r as u64);
        let theta0: Vec<f64> = (0..k).map(|_| rng.uniform_range(0.0, std::f64::consts::FRAC_PI_2)).collect();
        let psi0 = match known_psi {
            Some(p) => p.clone(),
            None => crate::linalg::random_state(public.dim(), rng.next_u64())?,
        };
        let (theta, _, loss) = descend(&model, theta0, psi0, opts.iters, known_psi.is_some());
        restarts.push(RestartResult {
            weights: theta.iter().map(|t| t.cos()).collect(),
            residual: loss.sqrt(),
        });
    }
    let best = restarts
        .iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .expect("restarts >= 1")
        .clone();
    Ok(PhaseRetrievalReport {
        best_weights: best.weights,
        residual: best.residual,
        restarts,
    })
}

/// Fidelities of the encrypt-then-decrypt round trips.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvolutionDemo {
    /// `|<in| V(key) V(key) |in>|^2`
    pub fidelity_key: f64,
    /// `|<in| V(key2) V(key2) |in>|^2`
    pub fidelity_key2: f64,
    /// `||V(key)^2 - V(key2)^2||_F`: the square does not depend on the key.
    pub square_difference: f64,
    /// `|<in| V(key2) V(key) |in>|^2`, encrypting with one key and decrypting
    /// with the other. Not 1 in general: `R(w')R(w)` is a rotation.
    pub cross_fidelity: f64,
}

pub const INVOLUTION_TOL: f64 = 1e-10;

pub fn involution_encrypt_decrypt(
    public: &PublicParams,
    psi: &ComplexVector,
    key: &SecretKey,
    key2: &SecretKey,
) -> Result<InvolutionDemo> {
    let dim = public.dim();
    for (t, u) in public.unitaries.iter().enumerate() {
        let defect = u.matmul(u).distance(&ComplexMatrix::identity(dim));
        if defect >= INVOLUTION_TOL {
            return Err(LcuError::InvalidParameter(format!(
                "U_{t} is not an involution: ||U^2 - I||_F = {defect:e}"
            )));
        }
    }
    let s1 = key.spec(public)?;
    let s2 = key2.spec(public)?;
    let v1 = circuit_unitary(&s1);
    let v2 = circuit_unitary(&s2);
    let input = extended_input(&s1, psi);
    let fid = |a: &ComplexMatrix, b: &ComplexMatrix| -> f64 {
        let out = a.apply(&b.apply(&input));
        input.inner(&out).norm_sqr()
    };
    Ok(InvolutionDemo {
        fidelity_key: fid(&v1, &v1),
        fidelity_key2: fid(&v2, &v2),
        square_difference: v1.matmul(&v1).distance(&v2.matmul(&v2)),
        cross_fidelity: fid(&v2, &v1),
    })
}

/// Involutory public unitaries: seeded Pauli strings.
pub fn pauli_public(terms: usize, qubits: usize, seed: u64, scheme: Scheme) -> Result<PublicParams> {
    let mut rng = SeededRng::new(seed);
    let unitaries = (0..terms)
        .map(|_| crate::linalg::pauli_string(&crate::linalg::random_pauli_label(qubits, &mut rng)))
        .collect::<Result<_>>()?;
    Ok(PublicParams {
        qubits,
        unitaries,
        variant: Variant::Reflection,
        scheme,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random_state;
    use crate::recovery::{make_mask, observe, MaskMode};

    #[test]
    fn keygen_cases() {
        let key = keygen(1, Scheme::Hadamard, 1).unwrap();
        assert_eq!(key.weights.len(), 1);
        assert_eq!(key, keygen(1, Scheme::Hadamard, 1).unwrap());
        assert!(keygen(3, Scheme::Hadamard, 1).is_err());

        let key = keygen(8, Scheme::SecretMixing, 2).unwrap();
        assert!(key.weights.iter().all(|w| (0.1..=1.0).contains(w)));
        let w = secret_mixing_matrix(&key.weights, key.gamma).unwrap();
        assert!(w.unitarity_defect() < 1e-12);
        let norm = key.weights.iter().map(|x| x * x).sum::<f64>().sqrt();
        for t in 0..8 {
            assert!((w[(0, t)] - C64::new(key.weights[t] / norm, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn key_json_round_trip() {
        let key = keygen(4, Scheme::SecretMixing, 3).unwrap();
        let text = key.to_json().unwrap();
        assert!(!text.contains("W"));
        assert_eq!(SecretKey::from_json(&text).unwrap(), key);
        assert!(SecretKey::from_json(r#"{"scheme":"hadamard","weights":[1.5],"gamma":0}"#).is_err());
    }

    #[test]
    fn completion_freedom_changes_c() {
        let w = vec![0.3, 0.5, 0.7, 0.9];
        let public = PublicParams::haar(4, 2, 4, Scheme::SecretMixing).unwrap();
        let k1 = SecretKey { scheme: Scheme::SecretMixing, weights: w.clone(), gamma: 1 };
        let k2 = SecretKey { gamma: 2, ..k1.clone() };
        let c1 = key_coefficients(&k1, &public).unwrap();
        let c2 = key_coefficients(&k2, &public).unwrap();
        assert!(c1.matrix().distance(c2.matrix()) > 1e-3);
    }

    #[test]
    fn eval_cases() {
        let public = PublicParams {
            qubits: 1,
            unitaries: vec![ComplexMatrix::identity(2)],
            variant: Variant::Reflection,
            scheme: Scheme::Hadamard,
        };
        let key = SecretKey { scheme: Scheme::Hadamard, weights: vec![1.0], gamma: 0 };
        let e = eval_trapdoor(&key, &public, &ComplexVector::basis(2, 0), 0, 0).unwrap();
        assert_eq!(e.get(0, 0), 1.0);

        let public = PublicParams::haar(2, 2, 5, Scheme::Hadamard).unwrap();
        let key = keygen(2, Scheme::Hadamard, 6).unwrap();
        let psi = random_state(4, 7).unwrap();
        let exact = eval_trapdoor(&key, &public, &psi, 0, 0).unwrap();
        assert!((exact.magnitudes.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let emp = eval_trapdoor(&key, &public, &psi, 100_000, 8).unwrap();
        let tv: f64 = exact
            .magnitudes
            .iter()
            .zip(&emp.magnitudes)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / 2.0;
        assert!(tv < 0.05);
    }

    #[test]
    fn invert_cases() {
        for scheme in [Scheme::Hadamard, Scheme::SecretMixing] {
            let public = PublicParams::haar(4, 4, 9, scheme).unwrap();
            let key = keygen(4, scheme, 10).unwrap();
            let psi = random_state(16, 11).unwrap();
            let spec = key.spec(&public).unwrap();
            let truth = spec.linear_combination(&key.weights).apply(&psi);
            let phi = output_matrix(&spec, &psi).unwrap();
            let inv = invert_with_key(&key, &public, KeyedInput::Exact(&phi)).unwrap();
            assert!(inv.target.distance(&truth) / truth.norm() < 1e-10);

            let mask = make_mask(8, 16, MaskMode::ColumnGuaranteed { min_per_column: 4, density: 0.7 }, 12).unwrap();
            let obs = observe(phi.matrix(), &mask, 0.0, 0).unwrap();
            let inv = invert_with_key(&key, &public, KeyedInput::Partial(&obs)).unwrap();
            assert!(inv.target.distance(&truth) / truth.norm() < 1e-8);

            let mut wrong = key.clone();
            wrong.weights[0] *= 0.8;
            let inv = invert_with_key(&wrong, &public, KeyedInput::Exact(&phi)).unwrap();
            assert!(inv.target.distance(&truth) / truth.norm() > 1e-2);
        }
    }

    #[test]
    fn key_scheme_mismatch_rejected() {
        let public = PublicParams::haar(2, 1, 1, Scheme::Hadamard).unwrap();
        let key = keygen(2, Scheme::SecretMixing, 1).unwrap();
        assert!(key.spec(&public).is_err());
    }

    #[test]
    fn attack_cases() {
        let public = PublicParams::haar(4, 3, 13, Scheme::Hadamard).unwrap();
        let key = keygen(4, Scheme::Hadamard, 14).unwrap();
        let psi = random_state(8, 15).unwrap();
        let phi = output_matrix(&key.spec(&public).unwrap(), &psi).unwrap();
        let att = hadamard_attack(phi.matrix(), &public).unwrap();
        assert!(att.succeeded());
        assert!(att.max_error(&key.weights) < 1e-10);

        let boundary = SecretKey { weights: vec![1.0, 0.5, 0.0, 0.3], ..key.clone() };
        let phi = output_matrix(&boundary.spec(&public).unwrap(), &psi).unwrap();
        let att = hadamard_attack(phi.matrix(), &public).unwrap();
        assert_eq!(att.weights[0], Some(1.0));
        assert!(att.max_error(&boundary.weights) < 1e-10);

        let mags = phi.matrix().map(|z| C64::new(z.norm(), 0.0));
        let att = hadamard_attack(&mags, &public).unwrap();
        assert!(!att.succeeded());
        assert!(att.max_error(&boundary.weights) > 1e-2);
    }

    #[test]
    fn phase_retrieval_cases() {
        // K = 1: p splits into w^2 |U psi|^2 and r^2 |U psi|^2.
        let public = PublicParams::haar(1, 2, 16, Scheme::Hadamard).unwrap();
        let key = SecretKey { scheme: Scheme::Hadamard, weights: vec![0.62], gamma: 0 };
        let psi = random_state(4, 17).unwrap();
        let eval = eval_trapdoor(&key, &public, &psi, 0, 0).unwrap();
        let rep = phase_retrieval_attack(&eval, &public, &PhaseRetrievalOptions { restarts: 3, iters: 2000, seed: 1 }, None).unwrap();
        assert!((rep.best_weights[0].abs() - 0.62).abs() < 1e-6, "{rep:?}");

        let public = PublicParams::haar(4, 4, 18, Scheme::Hadamard).unwrap();
        let key = keygen(4, Scheme::Hadamard, 19).unwrap();
        let psi = random_state(16, 20).unwrap();
        let eval = eval_trapdoor(&key, &public, &psi, 0, 0).unwrap();
        assert!(phase_retrieval_residual(&eval, &public, &key.weights, &psi).unwrap() < 1e-10);
        let rep = phase_retrieval_attack(&eval, &public, &PhaseRetrievalOptions { restarts: 20, iters: 50, seed: 2 }, None).unwrap();
        assert_eq!(rep.restarts.len(), 20);
        assert_eq!(rep.best_weights.len(), 4);
        assert!(rep.residual.is_finite() && rep.residual >= 0.0);
    }

    #[test]
    fn involution_cases() {
        let public = pauli_public(4, 2, 21, Scheme::Hadamard).unwrap();
        let psi = random_state(4, 22).unwrap();
        let k1 = keygen(4, Scheme::Hadamard, 23).unwrap();
        let k2 = keygen(4, Scheme::Hadamard, 24).unwrap();
        let demo = involution_encrypt_decrypt(&public, &psi, &k1, &k1).unwrap();
        assert!((demo.fidelity_key - 1.0).abs() < 1e-10);
        assert!((demo.cross_fidelity - 1.0).abs() < 1e-10);
        let demo = involution_encrypt_decrypt(&public, &psi, &k1, &k2).unwrap();
        assert!((demo.fidelity_key - 1.0).abs() < 1e-10);
        assert!((demo.fidelity_key2 - 1.0).abs() < 1e-10);
        assert!(demo.square_difference < 1e-10);
        // Cross-key amplitude is the mean of cos(theta_t - theta'_t).
        let amp: f64 = k1
            .weights
            .iter()
            .zip(&k2.weights)
            .map(|(a, b)| a * b + (1.0 - a * a).sqrt() * (1.0 - b * b).sqrt())
            .sum::<f64>()
            / 4.0;
        assert!((demo.cross_fidelity - amp * amp).abs() < 1e-12);

        let mut bad = public.clone();
        bad.unitaries[1] = crate::linalg::haar_random_unitary(4, 1).unwrap();
        assert!(involution_encrypt_decrypt(&bad, &psi, &k1, &k2).is_err());
    }
}
