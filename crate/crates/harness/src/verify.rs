//! Verification-suite driver.

use std::io::Write;

use lstd_core::verification::{run_check, CheckReport, CHECK_IDS};
use rayon::prelude::*;

use crate::error::{HarnessError, Result};

/// Expands `all` or a comma-separated id list, rejecting unknown ids.
pub fn parse_suite(selection: &str) -> Result<Vec<String>> {
    if selection.trim() == "all" {
        return Ok(CHECK_IDS.iter().map(|s| s.to_string()).collect());
    }
    let mut ids = Vec::new();
    for id in selection.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if !CHECK_IDS.contains(&id) {
            return Err(HarnessError::Config(format!(
                "unknown check id {id:?}; known: {}",
                CHECK_IDS.join(", ")
            )));
        }
        if !ids.iter().any(|s| s == id) {
            ids.push(id.to_string());
        }
    }
    if ids.is_empty() {
        return Err(HarnessError::Config("empty suite selection".into()));
    }
    Ok(ids)
}

/// Runs the checks in parallel; reports come back in selection order.
pub fn run_suite(ids: &[String], seed: u64, count: usize) -> Result<Vec<CheckReport>> {
    ids.par_iter()
        .map(|id| run_check(id, seed, count).map_err(HarnessError::from_core))
        .collect()
}

/// One compact JSON object per line.
pub fn write_reports<W: Write>(reports: &[CheckReport], mut out: W) -> std::io::Result<()> {
    for r in reports {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Exit status of a finished suite.
pub fn verdict(reports: &[CheckReport]) -> Result<()> {
    let asserted = reports.iter().filter(|r| r.asserted).count();
    let failed = reports.iter().filter(|r| !r.ok()).count();
    if failed > 0 {
        return Err(HarnessError::ChecksFailed { failed, total: asserted });
    }
    Ok(())
}
