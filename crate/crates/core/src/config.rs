//! Persisted run configuration; JSON keys mirror the field names and CLI
//! flags override file values.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::derain::{DerainConfig, EpsilonMode};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct RunConfig {
    /// Patch side in pixels.
    pub m: usize,
    /// Atoms per dictionary.
    pub k: usize,
    /// Coding sparsity for map construction and training.
    pub l: usize,
    pub th_s: f64,
    pub th_c: f64,
    /// Bounded representation error in 8-bit units; `None` means adaptive.
    pub epsilon: Option<f64>,
    pub max_atoms: Option<usize>,
    pub mean_removal: bool,
    pub dilation_radius: usize,
    pub stride: usize,
    pub threads: Option<usize>,
    pub seed: u64,
    /// Training patch count per dictionary.
    pub train_patches: usize,
    /// K-SVD sweeps.
    pub train_iters: usize,
    /// Masked-pixel fraction required to call a sampled patch rain.
    pub rain_coverage: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            m: 16,
            k: 1024,
            l: 3,
            th_s: 0.25,
            th_c: 0.8,
            epsilon: None,
            max_atoms: None,
            mean_removal: true,
            dilation_radius: 2,
            stride: 1,
            threads: None,
            seed: 0,
            train_patches: 15000,
            train_iters: 30,
            rain_coverage: 0.5,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| Error::Config {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn derain_config(&self) -> DerainConfig {
        DerainConfig {
            l: self.l,
            epsilon: match self.epsilon {
                Some(e) => EpsilonMode::Fixed(e),
                None => EpsilonMode::Adaptive,
            },
            th_s: self.th_s,
            th_c: self.th_c,
            max_atoms: self.max_atoms,
            mean_removal: self.mean_removal,
            dilation_radius: self.dilation_radius,
            stride: self.stride,
            threads: self.threads,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_published_parameters() {
        let cfg = RunConfig::default();
        assert_eq!(cfg.m, 16);
        assert_eq!(cfg.k, 1024);
        assert_eq!(cfg.l, 3);
        assert_eq!(cfg.th_s, 0.25);
        assert_eq!(cfg.th_c, 0.8);
        assert_eq!(cfg.epsilon, None); // adaptive
        assert_eq!(cfg.train_patches, 15000);
    }

    #[test]
    fn json_round_trip_and_partial_files() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(cfg, back);

        let partial: RunConfig = serde_json::from_str(r#"{"m": 8, "k": 128}"#).unwrap();
        assert_eq!(partial.m, 8);
        assert_eq!(partial.k, 128);
        assert_eq!(partial.l, 3);
    }
}
