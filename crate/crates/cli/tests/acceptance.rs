//! Every acceptance criterion at full path counts and stated tolerances.
//! Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

use std::path::Path;
use std::process::Command;

use mart_entropy_cli::verify::{render_table, run_check, Suite, SubCheck, VerifyOptions, CRITERIA};

const BIN: &str = env!("CARGO_BIN_EXE_mart-entropy");

fn run_binary(dir: &Path, cmd: &str, config: &str, threads: usize, tag: &str) -> Vec<u8> {
    let cfg_path = dir.join(format!("{cmd}.json"));
    std::fs::write(&cfg_path, config).unwrap();
    let out = dir.join(format!("{cmd}-{tag}.out"));
    let status = Command::new(BIN)
        .args([cmd, "--config"])
        .arg(&cfg_path)
        .args(["--threads", &threads.to_string(), "--output"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success(), "{cmd} exited with {status}");
    let mut bytes = std::fs::read(&out).unwrap();
    if let Ok(side) = std::fs::read(dir.join(format!("{cmd}-{tag}.meta.json"))) {
        bytes.extend(side);
    }
    bytes
}

/// The same artifacts written by the binary under 1 and 8 workers.
fn binary_determinism() -> Vec<SubCheck> {
    let dir = tempfile::tempdir().unwrap();
    let delayed = r#"{"family":"DelayedVolatility","dim":1,"parameters":{"n":4,"rule":{"kind":"frozen","n":4,"inner":{"kind":"sin_state","base":1.0,"amplitude":0.5}}}}"#;
    let bm = r#"{"family":"ScaledBrownian","dim":1,"parameters":{"a":[[1.0]]}}"#;
    let sde = r#"{"family":"SdeMartingale","dim":2,"parameters":{"sigma":{"kind":"sin_state","base":1.0,"amplitude":0.5},"substeps":8}}"#;
    let jobs = [
        ("simulate", format!(r#"{{"model": {sde}, "levels": [16], "paths": 3000, "seed": 11}}"#)),
        ("curve", format!(r#"{{"pair": {{"q": {delayed}, "p": {bm}}}, "levels": [4, 8, 16], "paths": 5000, "seed": 11}}"#)),
        ("report", format!(r#"{{"pair": {{"q": {delayed}, "p": {bm}}}, "levels": [4, 8, 16], "paths": 5000, "seed": 11, "time_steps": 32}}"#)),
    ];
    jobs.iter()
        .map(|(cmd, cfg)| {
            let a = run_binary(dir.path(), cmd, cfg, 1, "t1");
            let b = run_binary(dir.path(), cmd, cfg, 8, "t8");
            let c = run_binary(dir.path(), cmd, cfg, 8, "t8b");
            let same = a == b && b == c;
            SubCheck {
                label: format!("binary {cmd}: --threads 1 vs 8, rerun"),
                expected: "byte-identical".into(),
                observed: if same { "byte-identical".into() } else { "outputs differ".into() },
                tolerance: "-".into(),
                passed: same,
            }
        })
        .collect()
}

fn main() {
    let opts = VerifyOptions::new(Suite::Full, 0);
    let mut outcomes = Vec::new();
    for (id, _, _) in CRITERIA {
        let mut o = run_check(id, &opts);
        if id == 11 {
            o.subchecks.extend(binary_determinism());
            o.passed = o.subchecks.iter().all(|s| s.passed);
        }
        println!(
            "criterion {:>2} [{}] {} ({:.2}s)",
            o.id,
            if o.passed { "PASS" } else { "FAIL" },
            o.name,
            o.seconds
        );
        outcomes.push(o);
    }
    println!();
    print!("{}", render_table(&outcomes));
    let failed: Vec<u8> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
