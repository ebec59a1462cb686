//! Distance sweeps over every configured protocol and topology.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use hybrid_repeater::optimizer::{optimize, settings_for_fixed};
use hybrid_repeater::pipeline::evaluate;
use hybrid_repeater::scheduling::Protocol;
use hybrid_repeater::swaps::Topology;
use hybrid_repeater::{EmissionSettings, Error};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Config;

/// Fixed CSV column order.
pub const CSV_HEADER: [&str; 9] =
    ["protocol", "topology", "L_km", "duration_s", "storage_s", "fidelity", "p_ion", "p_spdc_en", "p_spdc_bb"];

/// Marker written for cells where no setting reaches the target.
pub const UNREACHABLE: &str = "unreachable";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Ok {
        duration_s: f64,
        storage_s: Option<f64>,
        fidelity: f64,
        settings: EmissionSettings,
        evaluations: usize,
    },
    Unreachable {
        reason: String,
        /// Best fidelity seen when the optimizer gave up.
        ceiling: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub protocol: Protocol,
    pub topology: Topology,
    pub l_km: f64,
    #[serde(flatten)]
    pub outcome: Outcome,
}

/// Everything written to the JSON file; `config` is the resolved input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: Config,
    pub seed: u64,
    pub results: Vec<CellResult>,
}

fn unreachable(e: Error) -> Outcome {
    let ceiling = match e {
        Error::TargetUnreachable { ceiling, .. } if ceiling.is_finite() => Some(ceiling),
        _ => None,
    };
    Outcome::Unreachable { reason: e.to_string(), ceiling }
}

/// Optimizes (or evaluates, with fixed emission) one cell. Failures become `Unreachable`.
pub fn run_cell(cfg: &Config, protocol: Protocol, topology: Topology, l_km: f64) -> CellResult {
    let outcome = match &cfg.fixed_emission {
        Some(s) => {
            let s = settings_for_fixed(protocol, s);
            match evaluate(&cfg.hardware, protocol, topology, l_km, &s) {
                Ok(e) => Outcome::Ok {
                    duration_s: e.duration_s,
                    storage_s: e.storage_s,
                    fidelity: e.fidelity,
                    settings: s,
                    evaluations: 1,
                },
                Err(e) => unreachable(e),
            }
        }
        None => match optimize(&cfg.hardware, protocol, topology, l_km, cfg.f_target, &cfg.optimizer) {
            Ok(o) => Outcome::Ok {
                duration_s: o.duration_s,
                storage_s: o.storage_s,
                fidelity: o.fidelity,
                settings: o.settings,
                evaluations: o.evaluations,
            },
            Err(e) => unreachable(e),
        },
    };
    CellResult { protocol, topology, l_km, outcome }
}

/// All cells in (protocol, topology, distance) order, evaluated concurrently.
pub fn run_sweep(cfg: &Config) -> Vec<CellResult> {
    let mut cells = Vec::new();
    for &p in &cfg.protocols {
        for &t in &cfg.topologies {
            for &l in &cfg.distances_km {
                cells.push((p, t, l));
            }
        }
    }
    cells.par_iter().map(|&(p, t, l)| run_cell(cfg, p, t, l)).collect()
}

/// Nine significant digits.
pub fn fmt_sig(v: f64) -> String {
    format!("{v:.8e}")
}

fn csv_row(c: &CellResult) -> Vec<String> {
    let mut row = vec![c.protocol.as_str().to_string(), c.topology.as_str().to_string(), fmt_sig(c.l_km)];
    match &c.outcome {
        Outcome::Ok { duration_s, storage_s, fidelity, settings, .. } => {
            row.push(fmt_sig(*duration_s));
            row.push(storage_s.map(fmt_sig).unwrap_or_default());
            row.push(fmt_sig(*fidelity));
            row.extend([settings.p_ion, settings.p_spdc_en, settings.p_spdc_bb].map(fmt_sig));
        }
        Outcome::Unreachable { .. } => row.extend(std::iter::repeat_n(UNREACHABLE.to_string(), 6)),
    }
    row
}

pub fn write_csv<W: Write>(out: W, results: &[CellResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for c in results {
        w.write_record(csv_row(c))?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the sweep and writes `sweep.csv` and `sweep.json` into `dir`.
pub fn sweep_to_dir(cfg: &Config, dir: &Path) -> Result<(PathBuf, PathBuf)> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let results = run_sweep(cfg);
    let csv_path = dir.join("sweep.csv");
    let json_path = dir.join("sweep.json");
    write_csv(fs::File::create(&csv_path)?, &results)?;
    let report = SweepReport { config: cfg.clone(), seed: cfg.seed, results };
    fs::write(&json_path, serde_json::to_string_pretty(&report)?)?;
    Ok((csv_path, json_path))
}
