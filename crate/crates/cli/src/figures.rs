//! Figure data: success probabilities versus coefficient ratio, and the
//! completion sweeps over mask fraction and noise level.

use std::path::Path;

use lcu_core::circuit::{success_probabilities, CircuitSpec};
use lcu_core::linalg::random_state;
use lcu_core::recovery::{
    sweep, sweep_csv, AlsOptions, Method, SvpOptions, SweepAxis, SweepConfig,
};
use serde::{Deserialize, Serialize};

use crate::run::{load_config, num, CliError, CliResult, Provenance, Sink};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Fig2Config {
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    /// Ratio `a` in `alpha = (1, ..., 1, a, ..., a)`.
    pub a_values: Vec<f64>,
    pub unitary_seed: u64,
    /// Input-state seed.
    pub seed: u64,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Self {
            k: 4,
            n: 4,
            a_values: (1..=10).map(|i| i as f64 / 10.0).collect(),
            unitary_seed: 7,
            seed: 0,
        }
    }
}

pub fn fig2(config: Option<&Path>, seed: Option<u64>, sink: &Sink) -> CliResult<()> {
    let mut cfg = load_config(config, Fig2Config::default())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let prov = Provenance::new("fig2", &cfg)
        .with("seed", cfg.seed)
        .with("unitary_seed", cfg.unitary_seed);
    let psi = random_state(1usize << cfg.n, cfg.seed)?;
    let mut body = String::from("a,p00_sim,p00_analytic,p0any_sim,p_std_analytic\n");
    let mut worst = 0.0f64;
    for &a in &cfg.a_values {
        let alpha: Vec<f64> = (0..cfg.k).map(|t| if t < cfg.k.div_ceil(2) { 1.0 } else { a }).collect();
        let (_, beta) = lcu_core::circuit::scale_coefficients(&alpha)?;
        let spec = CircuitSpec::haar(beta, cfg.n, cfg.unitary_seed)?;
        let p = success_probabilities(&spec, &psi, &alpha)?;
        worst = worst.max((p.p00 - p.p00_simulated).abs());
        body.push_str(&format!(
            "{},{},{},{},{}\n",
            num(a),
            num(p.p00_simulated),
            num(p.p00),
            num(p.p0_any),
            num(p.p_std)
        ));
    }
    sink.write("", "csv", &(prov.csv_header() + &body))?;
    if worst >= 1e-10 {
        return Err(CliError::Failed(format!(
            "simulated and analytic p00 differ by {worst:e}"
        )));
    }
    Ok(())
}

/// One sweep per system size; everything else is shared.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FigureConfig {
    pub dims: Vec<usize>,
    #[serde(rename = "K")]
    pub terms: usize,
    pub weights: Option<Vec<f64>>,
    pub methods: Vec<Method>,
    pub axis: SweepAxis,
    pub instances: usize,
    pub realizations: usize,
    pub min_per_column: usize,
    pub seed: u64,
    pub svp: SvpOptions,
    pub als: AlsOptions,
    pub ridge: Option<f64>,
    pub timing: bool,
}

impl FigureConfig {
    fn base(axis: SweepAxis) -> Self {
        let d = SweepConfig::default();
        Self {
            dims: vec![256, 1024],
            terms: d.terms,
            weights: d.weights,
            methods: d.methods,
            axis,
            instances: d.instances,
            realizations: d.realizations,
            min_per_column: d.min_per_column,
            seed: d.seed,
            svp: d.svp,
            als: d.als,
            ridge: d.ridge,
            timing: d.timing,
        }
    }

    pub fn fig3() -> Self {
        let mut values: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        values.push(0.95);
        Self::base(SweepAxis::Fraction { values, sigma: 0.0 })
    }

    pub fn fig4() -> Self {
        Self::base(SweepAxis::Sigma {
            values: vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
            fraction: 0.7,
        })
    }

    fn sweep_config(&self, dim: usize) -> SweepConfig {
        SweepConfig {
            dim,
            terms: self.terms,
            weights: self.weights.clone(),
            methods: self.methods.clone(),
            axis: self.axis.clone(),
            instances: self.instances,
            realizations: self.realizations,
            min_per_column: self.min_per_column,
            seed: self.seed,
            svp: self.svp,
            als: self.als,
            ridge: self.ridge,
            timing: self.timing,
        }
    }
}

pub fn sweep_figure(
    name: &str,
    default: FigureConfig,
    config: Option<&Path>,
    seed: Option<u64>,
    sink: &Sink,
) -> CliResult<()> {
    let mut cfg = load_config(config, default)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if cfg.dims.is_empty() {
        return Err(CliError::Usage("dims must list at least one N".into()));
    }
    for &dim in &cfg.dims {
        let prov = Provenance::new(name, &cfg)
            .with("seed", cfg.seed)
            .with("N", dim)
            .with("K", cfg.terms);
        let rows = sweep(&cfg.sweep_config(dim))?;
        sink.write(&format!("_N{dim}"), "csv", &(prov.csv_header() + &sweep_csv(&rows)))?;
    }
    Ok(())
}
