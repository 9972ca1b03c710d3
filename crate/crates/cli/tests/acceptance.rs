mod common;

use std::fs;
use std::io::Write;
use std::time::Instant;

use common::{config, lcu};

/// Every command twice with identical configs and seeds; all outputs must
/// match byte for byte.
#[test]
fn criterion_10_determinism() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let p = |s: &str| d.join(s).to_string_lossy().into_owned();
    fs::write(d.join("fig3.json"), r#"{"dims": [32], "axis": {"vary": "fraction", "values": [0.5, 0.9], "sigma": 0.0}, "instances": 1, "realizations": 2}"#).unwrap();
    fs::write(d.join("complete.json"), r#"{"N": 64, "sigma": 1e-3}"#).unwrap();
    fs::write(d.join("shots.json"), r#"{"shots": 500, "seed": 4}"#).unwrap();
    fs::write(d.join("pr.json"), r#"{"n": 3, "attack": "phase_retrieval", "phase_retrieval": {"restarts": 2, "iters": 50, "seed": 1}}"#).unwrap();

    let trap = config("trapdoor.json");
    // Key and evaluation files feeding later commands come from the first pass.
    let setup: Vec<Vec<String>> = vec![
        vec!["trapdoor", "keygen", "--config", &trap, "--out", &p("key")],
        vec!["trapdoor", "eval", "--config", &trap, "--key", &p("key.json"), "--amplitudes", "--out", &p("amp")],
        vec!["trapdoor", "eval", "--config", &trap, "--key", &p("key.json"), "--out", &p("mag")],
        vec!["trapdoor", "keygen", "--config", &p("pr.json"), "--out", &p("prkey")],
        vec!["trapdoor", "eval", "--config", &p("pr.json"), "--key", &p("prkey.json"), "--out", &p("prmag")],
        vec!["trapdoor", "keygen", "--config", &p("shots.json"), "--out", &p("skey")],
    ]
    .into_iter()
    .map(|a| a.into_iter().map(String::from).collect())
    .collect();
    for args in &setup {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        assert!(lcu(&a).status.success(), "{a:?}");
    }

    let cases: Vec<Vec<String>> = vec![
        vec!["verify".to_string()],
        vec!["verify".into(), "--config".into(), config("minimal.json")],
        vec!["fig2".into()],
        vec!["fig3".into(), "--config".into(), p("fig3.json")],
        vec!["fig4".into(), "--config".into(), config("fig4_small.json")],
        vec!["trapdoor".into(), "keygen".into(), "--config".into(), trap.clone()],
        vec!["trapdoor".into(), "eval".into(), "--config".into(), trap.clone(), "--key".into(), p("key.json")],
        vec!["trapdoor".into(), "eval".into(), "--config".into(), trap.clone(), "--key".into(), p("key.json"), "--amplitudes".into()],
        vec!["trapdoor".into(), "eval".into(), "--config".into(), p("shots.json"), "--key".into(), p("skey.json")],
        vec!["trapdoor".into(), "invert".into(), "--config".into(), trap.clone(), "--key".into(), p("key.json"), "--input".into(), p("amp.csv")],
        vec!["trapdoor".into(), "attack".into(), "--config".into(), trap.clone(), "--input".into(), p("amp.csv")],
        vec!["trapdoor".into(), "attack".into(), "--config".into(), trap.clone(), "--input".into(), p("mag.csv")],
        vec!["trapdoor".into(), "attack".into(), "--config".into(), p("pr.json"), "--input".into(), p("prmag.csv")],
        vec!["trapdoor".into(), "demo-involution".into(), "--config".into(), config("involution.json")],
        vec!["complete".into(), "svp".into(), "--config".into(), p("complete.json")],
        vec!["complete".into(), "als".into(), "--config".into(), p("complete.json")],
        vec!["complete".into(), "factorized".into(), "--config".into(), p("complete.json")],
        vec!["plot-script".into(), "fig3".into()],
    ];

    let mut mismatched = Vec::new();
    for args in &cases {
        let a: Vec<&str> = args.iter().map(String::as_str).collect();
        let first = lcu(&a);
        let second = lcu(&a);
        assert!(first.status.success(), "{a:?}: {}", String::from_utf8_lossy(&first.stderr));
        if first.stdout.is_empty() || first.stdout != second.stdout || first.status != second.status {
            mismatched.push(args.join(" "));
        }
    }
    // The file sink must agree with stdout.
    let mut files = Vec::new();
    for run in ["a", "b"] {
        let prefix = p(run);
        let out = lcu(&["complete", "factorized", "--config", &p("complete.json"), "--out", &prefix]);
        assert!(out.status.success());
        files.push((fs::read(format!("{prefix}.csv")).unwrap(), fs::read(format!("{prefix}_phi_hat.csv")).unwrap()));
    }
    if files[0] != files[1] {
        mismatched.push("complete factorized --out".into());
    }

    let pass = mismatched.is_empty();
    // Bypasses the harness's capture so the line always shows.
    let line = format!(
        "criterion 10: {} | {} commands run twice, {} mismatched {:?} | {:.2}s\n",
        if pass { "PASS" } else { "FAIL" },
        cases.len() + 1,
        mismatched.len(),
        mismatched,
        start.elapsed().as_secs_f64()
    );
    std::io::stdout().lock().write_all(line.as_bytes()).unwrap();
    assert!(pass);
}
