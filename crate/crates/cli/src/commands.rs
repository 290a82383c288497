//! The `simulate`, `curve` and `report` commands. Each renders its artifacts
//! to bytes; writing them out is separate so outputs can be compared.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mart_entropy::grid_entropy::entropy_curve;
use mart_entropy::specific_entropy::{gap_report, EstimateOptions};
use mart_entropy::Execution;
use serde::Serialize;

use crate::config::{Format, RunConfig};
use crate::error::CliError;

/// Rendered output of one command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifacts {
    pub main: Vec<u8>,
    /// Metadata written next to the main output as `<stem>.meta.json`.
    pub sidecar: Option<Vec<u8>>,
}

fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn to_json<T: Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("artifact serializes");
    s.push('\n');
    s.into_bytes()
}

/// Paths at the single configured level, as CSV rows
/// `path_id,k,coord_0,…` or a JSON document, plus a metadata sidecar.
pub fn simulate(cfg: &RunConfig, base: Option<&Path>) -> Result<Artifacts, CliError> {
    let model = cfg.model(base)?;
    let level = match cfg.levels.as_slice() {
        [n] => *n,
        other => return Err(CliError::Config(format!("simulate needs exactly one level, got {}", other.len()))),
    };
    let count = cfg.paths.ok_or_else(|| CliError::Config("simulate needs `paths`".into()))?;
    let ens = model.simulate(level, count, cfg.seed, Execution::default())?;
    let dim = model.dim();
    let main = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut out = String::from("path_id,k");
            for c in 0..dim {
                let _ = write!(out, ",coord_{c}");
            }
            out.push('\n');
            for i in 0..ens.count {
                let view = ens.view(i);
                for k in 0..=level {
                    let _ = write!(out, "{i},{k}");
                    for x in view.state(k) {
                        out.push(',');
                        out.push_str(&fmt_num(*x));
                    }
                    out.push('\n');
                }
            }
            out.into_bytes()
        }
        Format::Json => {
            let paths: Vec<Vec<&[f64]>> =
                (0..ens.count).map(|i| (0..=level).map(|k| ens.view(i).state(k)).collect()).collect();
            to_json(&serde_json::json!({ "meta": &ens, "paths": paths }))
        }
    };
    Ok(Artifacts { main, sidecar: Some(to_json(&ens)) })
}

/// Restricted entropies per level as CSV `level,value,stderr,method`, or JSON.
pub fn curve(cfg: &RunConfig, base: Option<&Path>) -> Result<Artifacts, CliError> {
    let pair = cfg.pair(base)?;
    let curve = entropy_curve(&pair, &cfg.levels, cfg.method, cfg.paths, cfg.seed, Execution::default())?;
    let main = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => curve.to_csv().into_bytes(),
        Format::Json => to_json(&serde_json::json!({ "pair": pair, "method": cfg.method, "seed": cfg.seed, "points": curve.points })),
    };
    Ok(Artifacts { main, sidecar: None })
}

/// Scaling estimate, Gantert bound and verdicts as a JSON report.
pub fn report(cfg: &RunConfig, base: Option<&Path>) -> Result<Artifacts, CliError> {
    if cfg.format == Some(Format::Csv) {
        return Err(CliError::Config("report is only available as json".into()));
    }
    let pair = cfg.pair(base)?;
    let opts = EstimateOptions {
        method: cfg.method,
        paths: cfg.paths,
        seed: cfg.seed,
        execution: Execution::default(),
        base: cfg.base,
    };
    let report = gap_report(&pair, &cfg.levels, &opts, cfg.time_steps)?;
    Ok(Artifacts { main: to_json(&report), sidecar: None })
}

/// `<dir>/<stem>.meta.json` for an output file.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "output".into());
    output.with_file_name(format!("{stem}.meta.json"))
}

/// Writes the main artifact to the configured output (stdout when unset)
/// and the sidecar next to it.
pub fn write(artifacts: &Artifacts, output: Option<&Path>) -> Result<(), CliError> {
    use std::io::Write;
    match output {
        Some(p) => {
            std::fs::write(p, &artifacts.main)?;
            if let Some(side) = &artifacts.sidecar {
                std::fs::write(sidecar_path(p), side)?;
            }
        }
        None => std::io::stdout().lock().write_all(&artifacts.main)?,
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(text: &str) -> RunConfig {
        let c = RunConfig::parse(text).unwrap();
        c.validate().unwrap();
        c
    }

    #[test]
    fn simulate_layout() {
        let c = config(r#"{"model": {"family": "ScaledBrownian", "dim": 2, "parameters": {"a": [[1,0],[0,1]]}},
                           "levels": [4], "paths": 10, "seed": 7}"#);
        let a = simulate(&c, None).unwrap();
        let text = String::from_utf8(a.main).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "path_id,k,coord_0,coord_1");
        assert_eq!(lines.len(), 51);
        for row in lines[1..].iter().step_by(5) {
            let cols: Vec<&str> = row.split(',').collect();
            assert_eq!(cols[1], "0");
            assert!(cols[2..].iter().all(|c| c.parse::<f64>().unwrap() == 0.0));
        }
        let meta: serde_json::Value = serde_json::from_slice(&a.sidecar.unwrap()).unwrap();
        assert_eq!((meta["level"].as_u64(), meta["seed"].as_u64()), (Some(4), Some(7)));
        assert_eq!(meta["scheme"]["kind"], "exact");
    }

    #[test]
    fn simulate_needs_one_level() {
        let c = config(r#"{"model": {"family": "ScaledBrownian", "dim": 1, "parameters": {"a": [[1]]}}, "levels": [2, 4], "paths": 3}"#);
        assert_eq!(simulate(&c, None).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/paths.csv")), PathBuf::from("out/paths.meta.json"));
    }
}
