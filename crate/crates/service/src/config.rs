use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{ServiceError, ServiceResult};

/// Environment variable overriding the listening port.
pub const PORT_ENV: &str = "SEQNOV_PORT";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    /// Directory holding all projects and job records.
    pub root: PathBuf,
    pub host: String,
    pub port: u16,
    /// Built UI bundle served at `/`.
    pub ui_dir: Option<PathBuf>,
    /// Run at most one job per project at a time.
    pub serial_jobs: bool,
    /// Seed for projects created without one.
    pub seed: u64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            root: PathBuf::from("seqnov-data"),
            host: "127.0.0.1".into(),
            port: 8080,
            ui_dir: None,
            serial_jobs: true,
            seed: 0,
        }
    }
}

impl ServiceConfig {
    /// Reads a TOML (or, by extension, JSON) config file.
    pub fn load(path: &Path) -> ServiceResult<Self> {
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e == "json") {
            return Ok(serde_json::from_str(&text)?);
        }
        toml::from_str(&text).map_err(|e| ServiceError::Unprocessable(format!("{}: {e}", path.display())))
    }

    /// Applies the port environment variable, if set.
    pub fn with_env(mut self) -> ServiceResult<Self> {
        if let Ok(p) = std::env::var(PORT_ENV) {
            self.port = p
                .parse()
                .map_err(|_| ServiceError::Unprocessable(format!("{PORT_ENV}={p} is not a port")))?;
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_with_defaults() {
        let c: ServiceConfig = toml::from_str("port = 9000\nroot = \"/tmp/x\"").unwrap();
        assert_eq!(c.port, 9000);
        assert_eq!(c.root, PathBuf::from("/tmp/x"));
        assert!(c.serial_jobs);
        assert!(toml::from_str::<ServiceConfig>("prot = 1").is_err());
    }
}
