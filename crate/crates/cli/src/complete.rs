use std::path::Path;

use lcu_core::io::matrix_to_csv;
use lcu_core::recovery::{
    als_complete, factorized_complete, make_instance, make_mask, observe, random_weights,
    svp_complete, AlsOptions, MaskMode, Method, SvpOptions,
};
use serde::{Deserialize, Serialize};

use crate::run::{load_config, num, CliResult, Provenance, Sink};

/// A single completion run on a seeded instance. The instance, mask and
/// noise use seeds `seed`, `seed + 1` and `seed + 2`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CompleteConfig {
    #[serde(rename = "N")]
    pub dim: usize,
    #[serde(rename = "K")]
    pub terms: usize,
    /// Drawn from `U[0.1, 0.9]` when absent.
    pub weights: Option<Vec<f64>>,
    pub mask: MaskMode,
    pub sigma: f64,
    pub seed: u64,
    pub svp: SvpOptions,
    pub als: AlsOptions,
    pub ridge: Option<f64>,
}

impl Default for CompleteConfig {
    fn default() -> Self {
        Self {
            dim: 256,
            terms: 4,
            weights: None,
            mask: MaskMode::Uniform { density: 0.7 },
            sigma: 0.0,
            seed: 0,
            svp: SvpOptions::default(),
            als: AlsOptions::default(),
            ridge: None,
        }
    }
}

pub const HEADER: &str = "method,N,K,observed_fraction,sigma,err_phi,err_target,iterations,converged,observed_residual,underdetermined_columns";

pub fn run(method: Method, config: Option<&Path>, seed: Option<u64>, sink: &Sink) -> CliResult<()> {
    let mut cfg = load_config(config, CompleteConfig::default())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let weights = cfg.weights.clone().unwrap_or_else(|| random_weights(cfg.terms, cfg.seed));
    let inst = make_instance(cfg.dim, &weights, cfg.seed)?;
    let phi = inst.phi.matrix();
    let mask = make_mask(phi.rows(), phi.cols(), cfg.mask, cfg.seed.wrapping_add(1))?;
    let obs = observe(phi, &mask, cfg.sigma, cfg.seed.wrapping_add(2))?;
    let report = match method {
        Method::Svp => svp_complete(&obs, &cfg.svp)?,
        Method::Als => als_complete(&obs, &cfg.als)?,
        Method::Factorized => factorized_complete(&inst.c, &obs, cfg.ridge)?.0,
    };
    let err = report.errors(phi)?;
    let prov = Provenance::new(&format!("complete {}", method.name()), &cfg)
        .with("seed", cfg.seed)
        .with("instance_seed", cfg.seed)
        .with("mask_seed", cfg.seed.wrapping_add(1))
        .with("noise_seed", cfg.seed.wrapping_add(2));
    let row = format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        method.name(),
        cfg.dim,
        cfg.terms,
        num(mask.fraction()),
        num(cfg.sigma),
        num(err.rel_phi),
        num(err.rel_target),
        report.iterations,
        report.converged,
        num(report.observed_residual),
        report.underdetermined_columns.len()
    );
    sink.write("", "csv", &format!("{}{HEADER}\n{row}", prov.csv_header()))?;
    // The completed matrix only goes to a file; on stdout it would bury the summary.
    if sink.has_prefix() {
        let prov = prov.with("kind", "amplitudes");
        sink.write("_phi_hat", "csv", &(prov.csv_header() + &matrix_to_csv(&report.phi_hat)))?;
    }
    Ok(())
}
