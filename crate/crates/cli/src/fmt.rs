//! Output formatting: round-trip value printing, short error estimates,
//! comma-list parsing, and color gating.

use crate::CliError;
use std::io::IsTerminal;

/// Shortest decimal that parses back to the identical bits. This is what
/// makes logged results and emitted CSV exactly reproducible.
pub fn value(v: f64) -> String {
    format!("{v}")
}

/// Error estimates carry three significant digits; more would be noise.
pub fn error(e: f64) -> String {
    format!("{e:.2e}")
}

/// Parses a comma-separated list of reals, naming the offending token on
/// failure so `0,,1` reports component 2 rather than a bare parse error.
pub fn parse_reals(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .enumerate()
        .map(|(i, tok)| {
            let trimmed = tok.trim();
            let parsed: Option<f64> = trimmed.parse().ok();
            match parsed {
                Some(v) if v.is_finite() => Ok(v),
                _ => Err(CliError::Usage(format!(
                    "{what}: component {} ('{trimmed}') is not a finite number",
                    i + 1
                ))),
            }
        })
        .collect()
}

/// Expands a per-dimension list: a single value broadcasts to `dim` entries.
pub fn broadcast(values: Vec<f64>, dim: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if values.len() == dim {
        Ok(values)
    } else if values.len() == 1 {
        Ok(vec![values[0]; dim])
    } else {
        Err(CliError::Usage(format!(
            "{what}: expected 1 or {dim} values, got {}",
            values.len()
        )))
    }
}

pub fn color_enabled() -> bool {
    std::env::var_os("NO_COLOR").is_none() && std::io::stdout().is_terminal()
}

/// PASS in green, FAIL in red, or plain text when color is off.
pub fn verdict(passed: bool, color: bool) -> String {
    match (passed, color) {
        (true, true) => "\x1b[32mPASS\x1b[0m".into(),
        (false, true) => "\x1b[31mFAIL\x1b[0m".into(),
        (true, false) => "PASS".into(),
        (false, false) => "FAIL".into(),
    }
}
