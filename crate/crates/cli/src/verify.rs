use std::path::Path;

use lcu_core::circuit::CircuitConfig;
use lcu_core::linalg::random_state;
use lcu_core::verify::{verify_spec, Check, Report};
use lcu_core::LcuError;
use serde_json::json;

use crate::run::{read_text, CliError, CliResult, Provenance, Sink};

/// K = 4, n = 4, Haar seed 7; used when no config is given.
pub const SAMPLE: &str = include_str!("../../../configs/sample.json");

/// Returns whether every check passed.
pub fn run(config: Option<&Path>, seed: Option<u64>, sink: &Sink) -> CliResult<bool> {
    let text = match config {
        Some(p) => read_text(p)?,
        None => SAMPLE.to_string(),
    };
    let cfg = CircuitConfig::from_json(&text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
    let seed = seed.unwrap_or(0);
    let prov = Provenance::new("verify", &cfg).with("seed", seed);
    let report = match cfg.build() {
        Ok(spec) => verify_spec(&spec, &random_state(spec.dim(), seed)?)?,
        // A non-unitary input is a failed check, not a malformed config.
        Err(LcuError::NotUnitary(defect)) => Report::new(vec![Check::below("unitaries", defect, 1e-10)]),
        Err(e) => return Err(e.into()),
    };
    let doc = json!({
        "meta": prov.json(),
        "pass": report.pass,
        "checks": report.checks,
    });
    let body = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
    sink.write("", "json", &body)?;
    for c in report.failed() {
        eprintln!("FAILED {}: residual {:e} (threshold {:e})", c.name, c.residual, c.threshold);
    }
    Ok(report.pass)
}
