//! Model file loading: strict JSON with exactly the keys `mu` and `sigma`.

use crate::CliError;
use normal_ratio::NormalRatioModel;
use serde::Deserialize;
use std::path::Path;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub mu: Vec<f64>,
    pub sigma: Vec<Vec<f64>>,
}

/// Reads, parses, and validates a model file. Every failure is a usage
/// error naming the file and, where possible, the offending field.
pub fn load(path: &Path) -> Result<NormalRatioModel, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read model file {}: {e}", path.display())))?;
    let file: ModelFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("model file {}: {e}", path.display())))?;
    let p = file.mu.len();
    if p < 2 {
        return Err(CliError::Usage(format!(
            "model file {}: mu has {p} entries, need at least 2",
            path.display()
        )));
    }
    if file.sigma.len() != p {
        return Err(CliError::Usage(format!(
            "model file {}: sigma has {} rows, mu has {p} entries",
            path.display(),
            file.sigma.len()
        )));
    }
    for (i, row) in file.sigma.iter().enumerate() {
        if row.len() != p {
            return Err(CliError::Usage(format!(
                "model file {}: sigma row {i} has {} entries, expected {p}",
                path.display(),
                row.len()
            )));
        }
    }
    NormalRatioModel::from_parts(file.mu, &file.sigma)
        .map_err(|e| CliError::Usage(format!("model file {}: {e}", path.display())))
}

/// The model flag is global but every subcommand needs it resolved.
pub fn require(model: &Option<std::path::PathBuf>) -> Result<NormalRatioModel, CliError> {
    match model {
        Some(path) => load(path),
        None => Err(CliError::Usage(
            "--model <path> is required for this command".into(),
        )),
    }
}
