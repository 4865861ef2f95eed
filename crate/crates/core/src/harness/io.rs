use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::sweep::{RegionCurve, TrialRecord};
use crate::{Error, Result};

pub const CSV_COLUMNS: [&str; 12] = [
    "scheme",
    "trial",
    "seed",
    "N",
    "M",
    "A_over_lambda",
    "r_ms_bits",
    "Rc_bits",
    "R0_bits",
    "status",
    "elapsed_ms",
    "apv_json",
];

/// Run metadata written next to the records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub crate_version: String,
    pub config: ExperimentConfig,
    pub config_sha256: String,
    pub record_count: usize,
    pub columns: Vec<String>,
    /// Mean curves, one group per sweep value (a single group for region runs).
    pub curves: Vec<CurveGroup>,
    pub crossover_trials: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveGroup {
    pub axis: Option<String>,
    pub value: Option<f64>,
    pub curves: Vec<RegionCurve>,
}

impl Manifest {
    pub fn new(command: &str, config: &ExperimentConfig, record_count: usize) -> Result<Self> {
        Ok(Manifest {
            command: command.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
            config_sha256: config.content_hash(),
            record_count,
            columns: CSV_COLUMNS.iter().map(|c| c.to_string()).collect(),
            curves: Vec::new(),
            crossover_trials: Vec::new(),
        })
    }
}

pub fn write_records(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    if records.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_records(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_COLUMNS {
        return Err(Error::Config(format!("unexpected CSV header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, manifest)?;
    w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Scheme;
    use crate::inner::SolveStatus;

    fn rec(rc: Option<f64>) -> TrialRecord {
        TrialRecord {
            scheme: Scheme::SingleMa,
            trial: 3,
            seed: 7,
            n: 1,
            m: 20,
            a_over_lambda: 8.0,
            r_ms: 0.1 + 0.2,
            rc,
            r0: rc.map(|_| 0.3),
            status: if rc.is_some() { SolveStatus::Optimal } else { SolveStatus::Infeasible },
            elapsed_ms: None,
            apv_json: "[[0.0,0.015]]".into(),
        }
    }

    #[test]
    fn csv_round_trip_and_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("records.csv");
        let rows = vec![rec(Some(1.0 / 3.0)), rec(None)];
        write_records(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert!(text.contains("single-ma,3,7,1,20,8.0,0.30000000000000004,,,infeasible,,"));
        assert_eq!(read_records(&path).unwrap(), rows);
    }

    #[test]
    fn empty_table_keeps_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_records(&path, &[]).unwrap();
        assert!(read_records(&path).unwrap().is_empty());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("manifest.json");
        let cfg = ExperimentConfig::default();
        let m = Manifest::new("region", &cfg, 5).unwrap();
        write_manifest(&path, &m).unwrap();
        assert_eq!(read_manifest(&path).unwrap(), m);
        assert_eq!(m.config_sha256.len(), 64);
    }
}
