//! `lcu trapdoor ...`: one config describes the public parameters, the
//! input state and the seeds; keys and evaluations travel as files.

use std::path::Path;

use lcu_core::circuit::{UnitaryKind, UnitarySource, VariantKind};
use lcu_core::io::{matrix_from_csv, matrix_to_csv};
use lcu_core::linalg::{random_state, ComplexMatrix, ComplexVector, C64};
use lcu_core::output::output_matrix;
use lcu_core::recovery::{make_mask, observe, MaskMode};
use lcu_core::trapdoor::{
    eval_trapdoor, hadamard_attack, invert_with_key, involution_encrypt_decrypt, keygen,
    phase_retrieval_attack, EvalOutput, KeyedInput, PhaseRetrievalOptions, PublicParams, Scheme,
    SecretKey, INVOLUTION_TOL,
};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::run::{load_config, num, read_text, CliError, CliResult, Provenance, Sink};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    Hadamard,
    PhaseRetrieval,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrapdoorConfig {
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    pub unitaries: UnitarySource,
    pub variant: VariantKind,
    pub scheme: Scheme,
    pub psi_seed: u64,
    /// Zero for exact probabilities.
    pub shots: u64,
    /// Key generation, shot sampling and masking.
    pub seed: u64,
    /// Partial observation for `invert`; full amplitudes when absent.
    pub mask: Option<MaskMode>,
    pub attack: AttackKind,
    pub phase_retrieval: PhaseRetrievalOptions,
    /// Give the phase-retrieval attacker the input state.
    pub grant_psi: bool,
}

impl Default for TrapdoorConfig {
    fn default() -> Self {
        Self {
            k: 4,
            n: 4,
            unitaries: UnitarySource {
                kind: UnitaryKind::Haar,
                seed: 7,
                data: None,
            },
            variant: VariantKind::Reflection,
            scheme: Scheme::Hadamard,
            psi_seed: 1,
            shots: 0,
            seed: 0,
            mask: None,
            attack: AttackKind::Hadamard,
            phase_retrieval: PhaseRetrievalOptions::default(),
            grant_psi: false,
        }
    }
}

impl TrapdoorConfig {
    fn public(&self) -> CliResult<PublicParams> {
        let unitaries = self.unitaries.matrices(self.k, self.n)?;
        if unitaries.len() != self.k {
            return Err(CliError::Usage(format!(
                "K = {} but {} unitaries given",
                self.k,
                unitaries.len()
            )));
        }
        Ok(PublicParams {
            qubits: self.n,
            unitaries,
            variant: self.variant.into(),
            scheme: self.scheme,
        })
    }

    fn psi(&self) -> CliResult<ComplexVector> {
        Ok(random_state(1usize << self.n, self.psi_seed)?)
    }
}

fn load(config: Option<&Path>, seed: Option<u64>) -> CliResult<TrapdoorConfig> {
    let mut cfg = load_config(config, TrapdoorConfig::default())?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn provenance(command: &str, cfg: &TrapdoorConfig) -> Provenance {
    Provenance::new(command, cfg)
        .with("seed", cfg.seed)
        .with("psi_seed", cfg.psi_seed)
        .with("unitary_seed", cfg.unitaries.seed)
}

fn load_key(path: &Path, cfg: &TrapdoorConfig) -> CliResult<(SecretKey, String)> {
    let text = read_text(path)?;
    let key = SecretKey::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    if key.scheme != cfg.scheme {
        return Err(CliError::Usage(format!(
            "key is for the {} scheme but the config says {}",
            key.scheme.name(),
            cfg.scheme.name()
        )));
    }
    Ok((key, hex::encode(Sha256::digest(text.as_bytes()))))
}

/// What an evaluation file holds, read from its `# kind:` header line.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Amplitudes,
    Magnitudes,
}

fn file_kind(text: &str) -> CliResult<Kind> {
    let kind = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .find_map(|l| l.trim_start_matches('#').trim().strip_prefix("kind:"))
        .map(str::trim);
    match kind {
        Some("amplitudes") => Ok(Kind::Amplitudes),
        Some("magnitudes") => Ok(Kind::Magnitudes),
        Some(other) => Err(CliError::Usage(format!("unknown data kind {other:?}"))),
        None => Err(CliError::Usage("input lacks a '# kind:' header line".into())),
    }
}

fn parse_real_rows(text: &str) -> CliResult<Vec<Vec<f64>>> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(',')
                .map(|c| c.trim().parse::<f64>().map_err(|e| CliError::Usage(format!("{c:?}: {e}"))))
                .collect()
        })
        .collect()
}

fn magnitudes_to_eval(rows: Vec<Vec<f64>>) -> CliResult<EvalOutput> {
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::Usage("magnitude rows are empty or ragged".into()));
    }
    Ok(EvalOutput {
        rows: rows.len(),
        cols,
        magnitudes: rows.into_iter().flatten().collect(),
        shots: 0,
    })
}

pub fn keygen_cmd(config: Option<&Path>, seed: Option<u64>, sink: &Sink) -> CliResult<()> {
    let cfg = load(config, seed)?;
    let key = keygen(cfg.k, cfg.scheme, cfg.seed)?;
    // The key file stays the bare key document so that it round-trips.
    sink.write("", "json", &(key.to_json()? + "\n"))?;
    Ok(())
}

pub fn eval_cmd(
    config: Option<&Path>,
    seed: Option<u64>,
    key_path: &Path,
    amplitudes: bool,
    sink: &Sink,
) -> CliResult<()> {
    let cfg = load(config, seed)?;
    let (key, key_hash) = load_key(key_path, &cfg)?;
    let public = cfg.public()?;
    let psi = cfg.psi()?;
    let prov = provenance("trapdoor eval", &cfg).with("key_sha256", key_hash);
    if amplitudes {
        if cfg.shots != 0 {
            return Err(CliError::Usage("complex amplitudes are only available with shots = 0".into()));
        }
        let phi = output_matrix(&key.spec(&public)?, &psi)?;
        let prov = prov.with("kind", "amplitudes");
        sink.write("", "csv", &(prov.csv_header() + &matrix_to_csv(phi.matrix())))?;
        return Ok(());
    }
    let out = eval_trapdoor(&key, &public, &psi, cfg.shots, cfg.seed)?;
    let mut body = String::new();
    for i in 0..out.rows {
        let cells: Vec<String> = (0..out.cols).map(|j| num(out.get(i, j))).collect();
        body.push_str(&cells.join(","));
        body.push('\n');
    }
    let prov = prov.with("kind", "magnitudes").with("shots", out.shots);
    sink.write("", "csv", &(prov.csv_header() + &body))?;
    Ok(())
}

pub fn invert_cmd(
    config: Option<&Path>,
    seed: Option<u64>,
    key_path: &Path,
    input: &Path,
    sink: &Sink,
) -> CliResult<()> {
    let cfg = load(config, seed)?;
    let (key, key_hash) = load_key(key_path, &cfg)?;
    let public = cfg.public()?;
    let text = read_text(input)?;
    if file_kind(&text)? != Kind::Amplitudes {
        return Err(CliError::Usage(
            "inversion needs complex amplitudes (trapdoor eval --amplitudes)".into(),
        ));
    }
    let phi = lcu_core::output::OutputMatrix(matrix_from_csv(&text)?);
    let inv = match cfg.mask {
        None => invert_with_key(&key, &public, KeyedInput::Exact(&phi))?,
        Some(mode) => {
            let m = phi.matrix();
            let mask = make_mask(m.rows(), m.cols(), mode, cfg.seed)?;
            let obs = observe(m, &mask, 0.0, cfg.seed)?;
            invert_with_key(&key, &public, KeyedInput::Partial(&obs))?
        }
    };
    // Reference value for the report: D_w psi for the configured input.
    let truth = key.spec(&public)?.linear_combination(&key.weights).apply(&cfg.psi()?);
    let rel = inv.target.distance(&truth) / truth.norm();
    let prov = provenance("trapdoor invert", &cfg)
        .with("key_sha256", key_hash)
        .with("rel_error", num(rel))
        .with("underdetermined_columns", inv.underdetermined_columns.len());
    let mut body = String::from("k,target_re,target_im\n");
    for (k, z) in inv.target.as_slice().iter().enumerate() {
        body.push_str(&format!("{k},{},{}\n", num(z.re), num(z.im)));
    }
    sink.write("", "csv", &(prov.csv_header() + &body))?;
    Ok(())
}

pub fn attack_cmd(
    config: Option<&Path>,
    seed: Option<u64>,
    input: &Path,
    key_path: Option<&Path>,
    sink: &Sink,
) -> CliResult<()> {
    let cfg = load(config, seed)?;
    let public = cfg.public()?;
    let truth = match key_path {
        Some(p) => Some(load_key(p, &cfg)?.0.weights),
        None => None,
    };
    let text = read_text(input)?;
    let kind = file_kind(&text)?;
    let prov = provenance("trapdoor attack", &cfg).with(
        "input_kind",
        match kind {
            Kind::Amplitudes => "amplitudes",
            Kind::Magnitudes => "magnitudes",
        },
    );
    let compare = |t: usize, w: f64| -> String {
        match &truth {
            Some(tw) => format!(",{},{}", num(tw[t]), num((w - tw[t]).abs())),
            None => String::new(),
        }
    };
    let extra_cols = if truth.is_some() { ",w_true,abs_error" } else { "" };

    match cfg.attack {
        AttackKind::Hadamard => {
            let phi = match kind {
                Kind::Amplitudes => matrix_from_csv(&text)?,
                // Phases are gone: the attack sees sqrt(p) as real amplitudes.
                Kind::Magnitudes => {
                    let eval = magnitudes_to_eval(parse_real_rows(&text)?)?;
                    ComplexMatrix::from_fn(eval.rows, eval.cols, |i, j| C64::new(eval.get(i, j).sqrt(), 0.0))
                }
            };
            let att = hadamard_attack(&phi, &public)?;
            let prov = prov
                .with("attack", "hadamard")
                .with("succeeded", att.succeeded())
                .with("max_residual", num(att.max_residual()));
            let mut body = format!("t,w_hat,residual{extra_cols}\n");
            for (t, (w, r)) in att.weights.iter().zip(&att.residuals).enumerate() {
                let w = w.unwrap_or(f64::NAN);
                body.push_str(&format!("{t},{},{}{}\n", num(w), num(*r), compare(t, w)));
            }
            sink.write("", "csv", &(prov.csv_header() + &body))?;
        }
        AttackKind::PhaseRetrieval => {
            if kind != Kind::Magnitudes {
                return Err(CliError::Usage("the phase-retrieval probe reads magnitudes".into()));
            }
            let eval = magnitudes_to_eval(parse_real_rows(&text)?)?;
            let psi = cfg.psi()?;
            let known = cfg.grant_psi.then_some(&psi);
            let rep = phase_retrieval_attack(&eval, &public, &cfg.phase_retrieval, known)?;
            let prov = prov
                .with("attack", "phase_retrieval")
                .with("restarts", cfg.phase_retrieval.restarts)
                .with("attack_seed", cfg.phase_retrieval.seed)
                .with("grant_psi", cfg.grant_psi)
                .with("residual", num(rep.residual));
            let mut body = format!("t,w_hat{extra_cols}\n");
            for (t, &w) in rep.best_weights.iter().enumerate() {
                body.push_str(&format!("{t},{}{}\n", num(w), compare(t, w)));
            }
            sink.write("", "csv", &(prov.csv_header() + &body))?;
        }
    }
    Ok(())
}

/// Encrypts with one key and decrypts with the same key, for two keys drawn
/// from `seed` and `seed + 1`; fails unless both round trips are exact.
pub fn involution_cmd(config: Option<&Path>, seed: Option<u64>, sink: &Sink) -> CliResult<()> {
    let cfg = load(config, seed)?;
    let public = cfg.public()?;
    let key = keygen(cfg.k, cfg.scheme, cfg.seed)?;
    let key2 = keygen(cfg.k, cfg.scheme, cfg.seed.wrapping_add(1))?;
    let demo = involution_encrypt_decrypt(&public, &cfg.psi()?, &key, &key2)?;
    let prov = provenance("trapdoor demo-involution", &cfg)
        .with("key_seed", cfg.seed)
        .with("key2_seed", cfg.seed.wrapping_add(1));
    let body = format!(
        "fidelity_key,fidelity_key2,square_difference,cross_fidelity\n{},{},{},{}\n",
        num(demo.fidelity_key),
        num(demo.fidelity_key2),
        num(demo.square_difference),
        num(demo.cross_fidelity)
    );
    sink.write("", "csv", &(prov.csv_header() + &body))?;
    let worst = (1.0 - demo.fidelity_key).abs().max((1.0 - demo.fidelity_key2).abs());
    if worst >= INVOLUTION_TOL || demo.square_difference >= INVOLUTION_TOL {
        return Err(CliError::Failed(format!(
            "round trip off by {worst:e}, key dependence of V^2 {:e}",
            demo.square_difference
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_header_cases() {
        assert_eq!(file_kind("# lcu 0.1.0\n# kind: amplitudes\n1e0+0e0j\n").unwrap(), Kind::Amplitudes);
        assert_eq!(file_kind("# kind: magnitudes\n").unwrap(), Kind::Magnitudes);
        assert!(file_kind("1,2\n").is_err());
        assert!(file_kind("# kind: other\n").is_err());
    }

    #[test]
    fn ragged_magnitudes_rejected() {
        assert!(magnitudes_to_eval(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
        let e = magnitudes_to_eval(parse_real_rows("# x\n0.5,0.25\n0.125,0.125\n").unwrap()).unwrap();
        assert_eq!((e.rows, e.cols), (2, 2));
        assert_eq!(e.get(1, 0), 0.125);
    }
}
