//! Run configuration: defaults, an optional TOML file, and command-line
//! flags, merged in that order. The merged configuration is recorded in
//! every artifact together with hashes of the inputs.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Keys accepted in a `--config` file. Every key is optional; flags given on
/// the command line take precedence.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub k: Option<usize>,
    pub c: Option<usize>,
    pub k_range: Option<String>,
    pub c_range: Option<String>,
    pub scheme: Option<String>,
    pub aux: Option<String>,
    pub mirror: Option<bool>,
    pub balanced: Option<bool>,
    pub seed: Option<u64>,
    pub batch_size: Option<usize>,
    pub steps: Option<usize>,
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub hidden: Option<usize>,
    pub embed: Option<usize>,
    pub buckets: Option<usize>,
    pub window_radius: Option<usize>,
    pub cell_height: Option<usize>,
    pub strict: Option<bool>,
    pub threads: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = read_text(path)?;
        toml::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

/// The fully resolved configuration of one invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub inputs: Vec<String>,
    pub output: Option<String>,
    pub k: usize,
    pub c: usize,
    pub k_range: Vec<usize>,
    pub c_range: Vec<usize>,
    pub scheme: String,
    pub aux: String,
    pub mirror: bool,
    pub balanced: bool,
    pub seed: u64,
    pub batch_size: usize,
    pub steps: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    pub hidden: usize,
    pub embed: usize,
    pub buckets: usize,
    pub window_radius: usize,
    pub cell_height: usize,
    pub strict: bool,
    pub threads: Option<usize>,
}

/// Parses `5`, `1,2,4` or `1..8` (inclusive).
pub fn parse_range(text: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("bad range {text:?}: expected N, N,M,... or A..B"));
    let values: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        (a..=b).collect()
    } else {
        text.split(',')
            .map(|v| v.trim().parse().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if values.is_empty() || values.contains(&0) {
        return Err(bad());
    }
    Ok(values)
}

#[derive(Debug, Serialize)]
pub struct InputHash {
    pub path: String,
    pub sha256: String,
}

/// What every artifact records about how it was made.
#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub run: RunConfig,
    pub inputs: Vec<InputHash>,
}

impl Provenance {
    pub fn new(run: &RunConfig, inputs: &[(PathBuf, String)]) -> Self {
        Self {
            tool: format!("niqqud {}", env!("CARGO_PKG_VERSION")),
            run: run.clone(),
            inputs: inputs
                .iter()
                .map(|(p, h)| InputHash {
                    path: p.display().to_string(),
                    sha256: h.clone(),
                })
                .collect(),
        }
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("provenance serializes")
    }
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn sidecar(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}

/// Writes `<path>.provenance.json` next to an artifact whose own format
/// has no room for it.
pub fn write_provenance(path: &Path, provenance: &Provenance) -> Result<(), CliError> {
    let json = serde_json::to_string_pretty(&provenance.to_value()).expect("provenance serializes");
    write_bytes(&sidecar(path, ".provenance.json"), format!("{json}\n").as_bytes())
}

/// Writes the wall-clock time of the run to `<path>.timestamp.json`.
pub fn write_timestamp(path: &Path) -> Result<(), CliError> {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    write_bytes(
        &sidecar(path, ".timestamp.json"),
        format!("{{\"unix_seconds\": {secs}}}\n").as_bytes(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("5").unwrap(), vec![5]);
        assert_eq!(parse_range("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_range("1, 3,8").unwrap(), vec![1, 3, 8]);
        for bad in ["", "0", "4..1", "a", "1..x"] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("k = 3\nseed = 9\n").is_ok());
        assert!(toml::from_str::<FileConfig>("kk = 3\n").is_err());
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(sidecar(Path::new("a/lex.txt"), ".provenance.json"), PathBuf::from("a/lex.txt.provenance.json"));
    }
}
