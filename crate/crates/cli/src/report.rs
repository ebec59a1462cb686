//! Plain-text table for the validation suite.

use anyhow::Result;
use hybrid_repeater::validation::{run_suite, CheckRow};

use crate::config::Config;

/// Runs the oracle and schedule checks with the configured hardware as the base point.
pub fn validate(cfg: &Config) -> Result<Vec<CheckRow>> {
    let mut opts = cfg.validation.clone();
    opts.seed = cfg.seed;
    Ok(run_suite(&cfg.hardware, &opts)?)
}

pub fn render(rows: &[CheckRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(5).max(5);
    let mut out = format!("{:<width$}  {:>11}  {:>11}  {:<6}  detail\n", "check", "deviation", "tolerance", "result");
    for r in rows {
        out += &format!(
            "{:<width$}  {:>11.4e}  {:>11.4e}  {:<6}  {}\n",
            r.name,
            r.deviation,
            r.tolerance,
            if r.passed { "PASS" } else { "FAIL" },
            r.detail
        );
    }
    let failed = rows.iter().filter(|r| !r.passed).count();
    out += &format!("{} checks, {} failed\n", rows.len(), failed);
    out
}
