//! Low-rank completion of `Phi` from partial, noisy entries.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::CircuitSpec;
use crate::error::{LcuError, Result};
use crate::linalg::{random_state, solve_hermitian_pd, svd, ComplexMatrix, C64, ZERO};
use crate::output::{coefficient_matrix, output_matrix, CoefficientMatrix, OutputMatrix};
use crate::rng::SeededRng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum MaskMode {
    /// Each entry independently with probability `density`.
    Uniform { density: f64 },
    /// Uniform at `density`, then topped up so that every column has at
    /// least `min_per_column` entries. `density = 0` gives exactly
    /// `min_per_column` per column.
    ColumnGuaranteed { min_per_column: usize, density: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObservationMask {
    rows: usize,
    cols: usize,
    observed: Vec<bool>,
    mode: MaskMode,
}

impl ObservationMask {
    pub fn full(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            observed: vec![true; rows * cols],
            mode: MaskMode::Uniform { density: 1.0 },
        }
    }

    /// Mask from explicit pairs; duplicates are ignored.
    pub fn from_pairs(rows: usize, cols: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut observed = vec![false; rows * cols];
        for &(i, j) in pairs {
            if i >= rows || j >= cols {
                return Err(LcuError::Dimension(format!(
                    "entry ({i}, {j}) outside {rows}x{cols}"
                )));
            }
            observed[i * cols + j] = true;
        }
        let density = observed.iter().filter(|&&b| b).count() as f64 / (rows * cols) as f64;
        Ok(Self {
            rows,
            cols,
            observed,
            mode: MaskMode::Uniform { density },
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn mode(&self) -> MaskMode {
        self.mode
    }

    pub fn is_observed(&self, i: usize, j: usize) -> bool {
        self.observed[i * self.cols + j]
    }

    pub fn count(&self) -> usize {
        self.observed.iter().filter(|&&b| b).count()
    }

    pub fn fraction(&self) -> f64 {
        self.count() as f64 / self.observed.len() as f64
    }

    /// Observed pairs in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.observed
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(p, _)| (p / self.cols, p % self.cols))
    }

    pub fn column_rows(&self, j: usize) -> Vec<usize> {
        (0..self.rows).filter(|&i| self.is_observed(i, j)).collect()
    }

    pub fn row_cols(&self, i: usize) -> Vec<usize> {
        (0..self.cols).filter(|&j| self.is_observed(i, j)).collect()
    }

    pub fn column_counts(&self) -> Vec<usize> {
        (0..self.cols)
            .map(|j| (0..self.rows).filter(|&i| self.is_observed(i, j)).count())
            .collect()
    }
}

pub fn make_mask(rows: usize, cols: usize, mode: MaskMode, seed: u64) -> Result<ObservationMask> {
    if rows == 0 || cols == 0 {
        return Err(LcuError::InvalidParameter("empty mask shape".into()));
    }
    let mut rng = SeededRng::new(seed);
    let mut observed = vec![false; rows * cols];
    let mut bernoulli = |density: f64, observed: &mut Vec<bool>| {
        for o in observed.iter_mut() {
            *o = rng.uniform() < density;
        }
    };
    match mode {
        MaskMode::Uniform { density } => {
            if !(density > 0.0 && density <= 1.0) {
                return Err(LcuError::InvalidParameter(format!(
                    "density must lie in (0, 1], got {density}"
                )));
            }
            bernoulli(density, &mut observed);
        }
        MaskMode::ColumnGuaranteed {
            min_per_column,
            density,
        } => {
            if min_per_column > rows {
                return Err(LcuError::InvalidParameter(format!(
                    "cannot guarantee {min_per_column} entries in columns of height {rows}"
                )));
            }
            if !(0.0..=1.0).contains(&density) {
                return Err(LcuError::InvalidParameter(format!(
                    "density must lie in [0, 1], got {density}"
                )));
            }
            bernoulli(density, &mut observed);
            let mut top_up = SeededRng::with_stream(seed, 1);
            for j in 0..cols {
                let mut missing: Vec<usize> = (0..rows).filter(|&i| !observed[i * cols + j]).collect();
                let have = rows - missing.len();
                if have < min_per_column {
                    top_up.shuffle(&mut missing);
                    for &i in missing.iter().take(min_per_column - have) {
                        observed[i * cols + j] = true;
                    }
                }
            }
        }
    }
    Ok(ObservationMask {
        rows,
        cols,
        observed,
        mode,
    })
}

/// Noisy values on the observed entries, row-major in the mask's pair order.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedEntries {
    pub mask: ObservationMask,
    pub values: Vec<C64>,
    pub noise_sigma: f64,
}

impl ObservedEntries {
    /// Zero-filled dense matrix of the observed values.
    pub fn dense(&self) -> ComplexMatrix {
        let (rows, cols) = self.mask.shape();
        let mut m = ComplexMatrix::zeros(rows, cols);
        for ((i, j), &v) in self.mask.pairs().zip(&self.values) {
            m[(i, j)] = v;
        }
        m
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `||P_Omega(obs - m)||_F`.
    pub fn residual(&self, m: &ComplexMatrix) -> f64 {
        self.mask
            .pairs()
            .zip(&self.values)
            .map(|((i, j), v)| (v - m[(i, j)]).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Observe `Phi` on `mask` with complex Gaussian noise of total std `sigma`.
pub fn observe(phi: &ComplexMatrix, mask: &ObservationMask, sigma: f64, seed: u64) -> Result<ObservedEntries> {
    if !(sigma >= 0.0 && sigma.is_finite()) {
        return Err(LcuError::InvalidParameter(format!("noise sigma must be >= 0, got {sigma}")));
    }
    if phi.shape() != mask.shape() {
        return Err(LcuError::Dimension(format!(
            "matrix is {}x{} but mask is {}x{}",
            phi.rows(),
            phi.cols(),
            mask.rows,
            mask.cols
        )));
    }
    let mut rng = SeededRng::new(seed);
    let values = mask
        .pairs()
        .map(|(i, j)| {
            if sigma == 0.0 {
                phi[(i, j)]
            } else {
                phi[(i, j)] + rng.complex_gaussian() * sigma
            }
        })
        .collect();
    Ok(ObservedEntries {
        mask: mask.clone(),
        values,
        noise_sigma: sigma,
    })
}

#[derive(Clone, Debug)]
pub struct RecoveryReport {
    pub phi_hat: ComplexMatrix,
    pub iterations: usize,
    pub converged: bool,
    /// Final `||P_Omega(obs - phi_hat)||_F`.
    pub observed_residual: f64,
    pub underdetermined_columns: Vec<usize>,
}

impl RecoveryReport {
    pub fn errors(&self, truth: &ComplexMatrix) -> Result<RecoveryErrors> {
        recovery_errors(&self.phi_hat, truth)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecoveryErrors {
    pub rel_phi: f64,
    /// Relative error of row 0, the `(i=0, r=0)` target row `T psi / (K c)`.
    pub rel_target: f64,
}

pub fn recovery_errors(phi_hat: &ComplexMatrix, truth: &ComplexMatrix) -> Result<RecoveryErrors> {
    if phi_hat.shape() != truth.shape() {
        return Err(LcuError::Dimension("estimate and truth differ in shape".into()));
    }
    let norm = truth.frobenius_norm();
    let row_norm = truth.row(0).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || row_norm == 0.0 {
        return Err(LcuError::InvalidParameter("reference matrix or target row is zero".into()));
    }
    let row_err = phi_hat
        .row(0)
        .iter()
        .zip(truth.row(0))
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    Ok(RecoveryErrors {
        rel_phi: phi_hat.distance(truth) / norm,
        rel_target: row_err / row_norm,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvpOptions {
    pub rank: usize,
    /// Gradient step; `None` means `1 / observed fraction`.
    pub step: Option<f64>,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for SvpOptions {
    fn default() -> Self {
        Self {
            rank: 4,
            step: None,
            max_iters: 500,
            tol: 1e-12,
        }
    }
}

fn truncate(m: &ComplexMatrix, rank: usize) -> Result<ComplexMatrix> {
    let s = svd(m)?;
    Ok(s.reconstruct_rank(rank.min(s.singular_values.len())))
}

/// Singular value projection: gradient step on the observed entries, then
/// rank truncation. A step that would raise the observed residual is
/// retried with half the step size, so accepted iterates never get worse.
pub fn svp_complete(obs: &ObservedEntries, opts: &SvpOptions) -> Result<RecoveryReport> {
    if opts.rank == 0 {
        return Err(LcuError::InvalidParameter("rank must be at least 1".into()));
    }
    if obs.values.is_empty() {
        return Err(LcuError::InvalidParameter("no observed entries".into()));
    }
    let mu0 = opts.step.unwrap_or(1.0 / obs.mask.fraction());
    if mu0.is_nan() || mu0 <= 0.0 {
        return Err(LcuError::InvalidParameter(format!("step must be positive, got {mu0}")));
    }
    let (rows, cols) = obs.mask.shape();
    let scale = obs.norm();
    let mut current = ComplexMatrix::zeros(rows, cols);
    let mut res = obs.residual(&current);
    let mut mu = mu0;
    let mut iterations = 0;
    let mut converged = res <= f64::EPSILON * scale;
    while !converged && iterations < opts.max_iters {
        iterations += 1;
        let mut step = current.clone();
        for ((i, j), v) in obs.mask.pairs().zip(&obs.values) {
            step[(i, j)] += (v - current[(i, j)]) * mu;
        }
        let candidate = truncate(&step, opts.rank)?;
        let cand_res = obs.residual(&candidate);
        if cand_res > res {
            mu *= 0.5;
            if mu < mu0 * 1e-6 {
                break;
            }
            continue;
        }
        let change = res - cand_res;
        current = candidate;
        res = cand_res;
        if res <= f64::EPSILON * scale || change <= opts.tol * res {
            converged = true;
        }
    }
    Ok(RecoveryReport {
        phi_hat: current,
        iterations,
        converged,
        observed_residual: res,
        underdetermined_columns: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlsOptions {
    pub rank: usize,
    pub max_iters: usize,
    pub tol: f64,
    pub ridge: f64,
    pub seed: u64,
}

impl Default for AlsOptions {
    fn default() -> Self {
        Self {
            rank: 4,
            max_iters: 500,
            tol: 1e-12,
            ridge: 1e-12,
            seed: 0,
        }
    }
}

/// Solves `(F^dag F + ridge I) x = F^dag y` where `F` has rows `factor_rows`.
fn ridge_solve(factor: &ComplexMatrix, idx: &[usize], y: &[C64], ridge: f64) -> Result<Vec<C64>> {
    let r = factor.cols();
    let mut gram = ComplexMatrix::zeros(r, r);
    let mut rhs = ComplexMatrix::zeros(r, 1);
    for (&row, &yv) in idx.iter().zip(y) {
        let f = factor.row(row);
        for a in 0..r {
            let fa = f[a].conj();
            rhs[(a, 0)] += fa * yv;
            for b in 0..r {
                gram[(a, b)] += fa * f[b];
            }
        }
    }
    for a in 0..r {
        gram[(a, a)] += C64::new(ridge, 0.0);
    }
    Ok(solve_hermitian_pd(&gram, &rhs)?.into_vec())
}

/// Relative singular-value cutoff for the default per-column solve.
const PINV_TOL: f64 = 1e-10;

/// Minimum-norm least squares on the rows `idx` of `factor`, dropping
/// directions with `sigma < PINV_TOL sigma_max`.
fn pinv_solve(factor: &ComplexMatrix, idx: &[usize], y: &[C64]) -> Result<Vec<C64>> {
    let sub = ComplexMatrix::from_rows(&idx.iter().map(|&i| factor.row(i).to_vec()).collect::<Vec<_>>())?;
    let s = svd(&sub)?;
    let cutoff = PINV_TOL * s.singular_values[0];
    let mut x = vec![ZERO; factor.cols()];
    for (k, &sigma) in s.singular_values.iter().enumerate() {
        if sigma <= cutoff || sigma == 0.0 {
            continue;
        }
        let coef: C64 = (0..idx.len()).map(|i| s.left[(i, k)].conj() * y[i]).sum::<C64>() / sigma;
        for (a, xa) in x.iter_mut().enumerate() {
            *xa += s.right[(a, k)] * coef;
        }
    }
    Ok(x)
}

/// Alternating least squares on `Phi ≈ L R^dag`.
pub fn als_complete(obs: &ObservedEntries, opts: &AlsOptions) -> Result<RecoveryReport> {
    if opts.rank == 0 {
        return Err(LcuError::InvalidParameter("rank must be at least 1".into()));
    }
    if opts.ridge.is_nan() || opts.ridge <= 0.0 {
        return Err(LcuError::InvalidParameter("ALS needs a positive ridge".into()));
    }
    if obs.values.is_empty() {
        return Err(LcuError::InvalidParameter("no observed entries".into()));
    }
    let (rows, cols) = obs.mask.shape();
    let r = opts.rank;
    let dense = obs.dense();
    let scale = obs.norm() / (obs.values.len() as f64).sqrt();
    let mut rng = SeededRng::new(opts.seed);
    let mut left = ComplexMatrix::from_fn(rows, r, |_, _| rng.complex_gaussian() * scale);
    let mut right = ComplexMatrix::from_fn(cols, r, |_, _| rng.complex_gaussian());
    let row_cols: Vec<Vec<usize>> = (0..rows).map(|i| obs.mask.row_cols(i)).collect();
    let col_rows: Vec<Vec<usize>> = (0..cols).map(|j| obs.mask.column_rows(j)).collect();

    let mut res = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < opts.max_iters {
        iterations += 1;
        // Phi_ij = sum_a L_ia conj(R_ja): rows of L against conj(R).
        let right_conj = right.conj();
        for (i, js) in row_cols.iter().enumerate() {
            let y: Vec<C64> = js.iter().map(|&j| dense[(i, j)]).collect();
            let x = ridge_solve(&right_conj, js, &y, opts.ridge)?;
            left.row_mut(i).copy_from_slice(&x);
        }
        // conj(Phi_ij) = sum_a conj(L_ia) R_ja: rows of R against conj(L).
        let left_conj = left.conj();
        for (j, is) in col_rows.iter().enumerate() {
            let y: Vec<C64> = is.iter().map(|&i| dense[(i, j)].conj()).collect();
            let x = ridge_solve(&left_conj, is, &y, opts.ridge)?;
            right.row_mut(j).copy_from_slice(&x);
        }
        let est = left.matmul(&right.adjoint());
        let new_res = obs.residual(&est);
        let change = (res - new_res).abs();
        res = new_res;
        if res <= f64::EPSILON * obs.norm() || change <= opts.tol * res {
            converged = true;
            break;
        }
    }
    Ok(RecoveryReport {
        phi_hat: left.matmul(&right.adjoint()),
        iterations,
        converged,
        observed_residual: res,
        underdetermined_columns: Vec::new(),
    })
}

/// Completion with known `C`: per column, ridge-regularized least squares
/// on the observed rows, then `Phi_hat = C X_hat`.
///
/// `ridge = None` uses a truncated pseudo-inverse per column instead.
pub fn factorized_complete(
    c: &CoefficientMatrix,
    obs: &ObservedEntries,
    ridge: Option<f64>,
) -> Result<(RecoveryReport, ComplexMatrix)> {
    let cm = c.matrix();
    let k = cm.cols();
    let (rows, cols) = obs.mask.shape();
    if rows != cm.rows() {
        return Err(LcuError::Dimension(format!(
            "C has {} rows, observations have {rows}",
            cm.rows()
        )));
    }
    if let Some(l) = ridge {
        if l.is_nan() || l < 0.0 {
            return Err(LcuError::InvalidParameter(format!("ridge must be >= 0, got {l}")));
        }
    }
    let dense = obs.dense();
    let mut x = ComplexMatrix::zeros(k, cols);
    let mut under = Vec::new();
    for j in 0..cols {
        let idx = obs.mask.column_rows(j);
        if idx.len() < k {
            under.push(j);
        }
        if idx.is_empty() {
            continue;
        }
        let y: Vec<C64> = idx.iter().map(|&i| dense[(i, j)]).collect();
        let xj = match ridge {
            Some(lambda) => ridge_solve(cm, &idx, &y, lambda)?,
            None => pinv_solve(cm, &idx, &y)?,
        };
        x.set_column(j, &xj);
    }
    if under.len() == cols {
        return Err(LcuError::AllUnderdetermined {
            observed: obs.mask.column_counts().into_iter().max().unwrap_or(0),
            needed: k,
        });
    }
    let phi_hat = cm.matmul(&x);
    let observed_residual = obs.residual(&phi_hat);
    Ok((
        RecoveryReport {
            phi_hat,
            iterations: 1,
            converged: true,
            observed_residual,
            underdetermined_columns: under,
        },
        x,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Svp,
    Als,
    Factorized,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Svp => "svp",
            Method::Als => "als",
            Method::Factorized => "factorized",
        }
    }
}

/// What the sweep varies; the other quantity stays fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "vary", rename_all = "snake_case")]
pub enum SweepAxis {
    Fraction { values: Vec<f64>, sigma: f64 },
    Sigma { values: Vec<f64>, fraction: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepConfig {
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "K")]
    pub terms: usize,
    pub weights: Option<Vec<f64>>,
    pub methods: Vec<Method>,
    pub axis: SweepAxis,
    pub instances: usize,
    pub realizations: usize,
    /// Extra guaranteed rows per column on top of the uniform mask.
    pub min_per_column: usize,
    pub seed: u64,
    pub svp: SvpOptions,
    pub als: AlsOptions,
    pub ridge: Option<f64>,
    /// Record wall time; off by default so that tables are reproducible.
    pub timing: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            dim: 256,
            terms: 4,
            weights: None,
            methods: vec![Method::Svp, Method::Factorized],
            axis: SweepAxis::Fraction {
                values: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95],
                sigma: 0.0,
            },
            instances: 10,
            realizations: 5,
            min_per_column: 0,
            seed: 0,
            svp: SvpOptions::default(),
            als: AlsOptions::default(),
            ridge: None,
            timing: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub method: Method,
    pub param: f64,
    pub mean_err_phi: f64,
    pub std_err_phi: f64,
    pub mean_err_target: f64,
    pub std_err_target: f64,
    pub mean_iters: f64,
    /// Mean seconds per solve, `None` when timing is off.
    pub seconds: Option<f64>,
    /// Cells where the method could not produce an estimate (every column
    /// underdetermined, no convergence); the statistics skip them and are
    /// NaN when every cell failed.
    pub failures: usize,
}

pub const SWEEP_HEADER: &str =
    "method,param,mean_err_phi,std_err_phi,mean_err_target,std_err_target,mean_iters,seconds,failures";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        let secs = self.seconds.map_or_else(|| "nan".to_string(), |s| format!("{s:e}"));
        format!(
            "{},{:e},{:e},{:e},{:e},{:e},{:e},{},{}",
            self.method.name(),
            self.param,
            self.mean_err_phi,
            self.std_err_phi,
            self.mean_err_target,
            self.std_err_target,
            self.mean_iters,
            secs,
            self.failures
        )
    }
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// One completion instance: the exact `Phi` and its coefficient matrix.
#[derive(Clone, Debug)]
pub struct Instance {
    pub spec: CircuitSpec,
    pub phi: OutputMatrix,
    pub c: CoefficientMatrix,
}

pub fn make_instance(dim: usize, weights: &[f64], seed: u64) -> Result<Instance> {
    if !dim.is_power_of_two() {
        return Err(LcuError::InvalidParameter(format!("N must be a power of two, got {dim}")));
    }
    let mut rng = SeededRng::new(seed);
    let qubits = dim.trailing_zeros() as usize;
    let spec = CircuitSpec::haar(weights.to_vec(), qubits, rng.next_u64())?;
    let psi = random_state(dim, rng.next_u64())?;
    let phi = output_matrix(&spec, &psi)?;
    let c = coefficient_matrix(&spec);
    Ok(Instance { spec, phi, c })
}

/// Runs one solver on one observation set; returns (errors, iterations).
pub fn solve_once(
    method: Method,
    inst: &Instance,
    obs: &ObservedEntries,
    cfg: &SweepConfig,
) -> Result<(RecoveryErrors, usize)> {
    let report = match method {
        Method::Svp => svp_complete(obs, &cfg.svp)?,
        Method::Als => als_complete(obs, &cfg.als)?,
        Method::Factorized => factorized_complete(&inst.c, obs, cfg.ridge)?.0,
    };
    Ok((report.errors(inst.phi.matrix())?, report.iterations))
}

/// NaN for an empty slice.
fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Seeds for instance `idx` and realization `rel`.
fn cell_seeds(seed: u64, idx: usize, rel: usize) -> (u64, u64, u64) {
    let mut rng = SeededRng::with_stream(seed, idx as u64);
    let inst = rng.next_u64();
    let mut cell = SeededRng::with_stream(inst, 1 + rel as u64);
    (inst, cell.next_u64(), cell.next_u64())
}

/// Figure-style sweep over mask fraction or noise level. Cells run in
/// parallel; results are reduced in a fixed order.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.instances == 0 || cfg.realizations == 0 || cfg.methods.is_empty() {
        return Err(LcuError::InvalidParameter(
            "sweep needs at least one instance, realization and method".into(),
        ));
    }
    if let Some(w) = &cfg.weights {
        if w.len() != cfg.terms {
            return Err(LcuError::Dimension(format!(
                "K = {} but {} weights",
                cfg.terms,
                w.len()
            )));
        }
    }
    let instances: Vec<Instance> = (0..cfg.instances)
        .into_par_iter()
        .map(|idx| {
            let seed = cell_seeds(cfg.seed, idx, 0).0;
            let weights = match &cfg.weights {
                Some(w) => w.clone(),
                None => random_weights(cfg.terms, seed),
            };
            make_instance(cfg.dim, &weights, seed)
        })
        .collect::<Result<_>>()?;
    let params: Vec<(f64, f64, f64)> = match &cfg.axis {
        SweepAxis::Fraction { values, sigma } => values.iter().map(|&f| (f, f, *sigma)).collect(),
        SweepAxis::Sigma { values, fraction } => values.iter().map(|&s| (s, *fraction, s)).collect(),
    };
    let rows_n = 2 * cfg.terms;
    let mut out = Vec::new();
    for &(param, fraction, sigma) in &params {
        let mode = if cfg.min_per_column > 0 {
            MaskMode::ColumnGuaranteed {
                min_per_column: cfg.min_per_column,
                density: fraction,
            }
        } else {
            MaskMode::Uniform { density: fraction }
        };
        let cells: Vec<(usize, usize)> = (0..cfg.instances)
            .flat_map(|i| (0..cfg.realizations).map(move |r| (i, r)))
            .collect();
        let results: Vec<Vec<Option<(RecoveryErrors, usize, f64)>>> = cells
            .par_iter()
            .map(|&(i, r)| {
                let (_, mask_seed, noise_seed) = cell_seeds(cfg.seed, i, r);
                let mask = make_mask(rows_n, cfg.dim, mode, mask_seed)?;
                let obs = observe(instances[i].phi.matrix(), &mask, sigma, noise_seed)?;
                cfg.methods
                    .iter()
                    .map(|&m| {
                        let start = Instant::now();
                        match solve_once(m, &instances[i], &obs, cfg) {
                            Ok((e, it)) => Ok(Some((e, it, start.elapsed().as_secs_f64()))),
                            Err(e) if e.is_recovery_failure() => Ok(None),
                            Err(e) => Err(e),
                        }
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        for (mi, &method) in cfg.methods.iter().enumerate() {
            let col = |f: &dyn Fn(&(RecoveryErrors, usize, f64)) -> f64| -> Vec<f64> {
                results.iter().filter_map(|cell| cell[mi].as_ref().map(f)).collect()
            };
            let failures = results.iter().filter(|cell| cell[mi].is_none()).count();
            let (mean_err_phi, std_err_phi) = mean_std(&col(&|c| c.0.rel_phi));
            let (mean_err_target, std_err_target) = mean_std(&col(&|c| c.0.rel_target));
            let (mean_iters, _) = mean_std(&col(&|c| c.1 as f64));
            let (secs, _) = mean_std(&col(&|c| c.2));
            out.push(SweepRow {
                method,
                param,
                mean_err_phi,
                std_err_phi,
                mean_err_target,
                std_err_target,
                mean_iters,
                seconds: cfg.timing.then_some(secs),
                failures,
            });
        }
    }
    Ok(out)
}

/// Weights drawn from `U[0.1, 0.9]`. Generic weights keep every
/// `K`-row subset of `C` invertible; `w = 1` would zero a whole bottom column.
pub fn random_weights(k: usize, seed: u64) -> Vec<f64> {
    let mut rng = SeededRng::with_stream(seed, 7);
    (0..k).map(|_| rng.uniform_range(0.1, 0.9)).collect()
}
