//! Flat key-value run configuration shared by the config file format and the
//! command-line flags (they mirror each other one-to-one).

use std::fmt::Write as _;
use std::path::PathBuf;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gnn::TrainConfig;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub n_splits: usize,
    pub split_seed: u64,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dataset: None,
            out: None,
            n_splits: 10,
            split_seed: 0,
            train: TrainConfig::default(),
        }
    }
}

impl RunConfig {
    /// Apply one `key = value` assignment. Unknown keys are rejected.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("bad value `{value}` for key `{key}` ({what})"));
        match key {
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "out" => self.out = Some(PathBuf::from(value)),
            "n_splits" => self.n_splits = value.parse().map_err(|_| bad("integer"))?,
            "split_seed" => self.split_seed = value.parse().map_err(|_| bad("integer"))?,
            "layers" => self.train.layers = value.parse().map_err(|_| bad("integer"))?,
            "hidden" => self.train.hidden = value.parse().map_err(|_| bad("integer"))?,
            "alpha" => self.train.alpha = value.parse().map_err(|_| bad("real"))?,
            "beta" => self.train.beta = value.parse().map_err(|_| bad("real"))?,
            "lambda" => self.train.lambda = value.parse().map_err(|_| bad("real"))?,
            "lr" => self.train.lr = value.parse().map_err(|_| bad("real"))?,
            "weight_decay" => self.train.weight_decay = value.parse().map_err(|_| bad("real"))?,
            "dropout" => self.train.dropout = value.parse().map_err(|_| bad("real"))?,
            "pretrain_epochs" => {
                self.train.pretrain_epochs = value.parse().map_err(|_| bad("integer"))?
            }
            "joint_epochs" => self.train.joint_epochs = value.parse().map_err(|_| bad("integer"))?,
            "patience" => self.train.patience = value.parse().map_err(|_| bad("integer"))?,
            "seed" => self.train.seed = value.parse().map_err(|_| bad("integer"))?,
            "stop_gradient" => {
                self.train.stop_gradient = value.parse().map_err(|_| bad("true/false"))?
            }
            _ => return Err(Error::Config(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    /// Parse a config file: `key = value` lines, `#` comments, blank lines.
    pub fn apply_file(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Canonical serialization used for the config hash and for writing
    /// config files back out.
    pub fn canonical_string(&self) -> String {
        let mut s = String::new();
        if let Some(d) = &self.dataset {
            let _ = writeln!(s, "dataset = {}", d.display());
        }
        let t = &self.train;
        let _ = writeln!(s, "n_splits = {}", self.n_splits);
        let _ = writeln!(s, "split_seed = {}", self.split_seed);
        let _ = writeln!(s, "layers = {}", t.layers);
        let _ = writeln!(s, "hidden = {}", t.hidden);
        let _ = writeln!(s, "alpha = {}", t.alpha);
        let _ = writeln!(s, "beta = {}", t.beta);
        let _ = writeln!(s, "lambda = {}", t.lambda);
        let _ = writeln!(s, "lr = {}", t.lr);
        let _ = writeln!(s, "weight_decay = {}", t.weight_decay);
        let _ = writeln!(s, "dropout = {}", t.dropout);
        let _ = writeln!(s, "pretrain_epochs = {}", t.pretrain_epochs);
        let _ = writeln!(s, "joint_epochs = {}", t.joint_epochs);
        let _ = writeln!(s, "patience = {}", t.patience);
        let _ = writeln!(s, "seed = {}", t.seed);
        let _ = writeln!(s, "stop_gradient = {}", t.stop_gradient);
        s
    }

    pub fn config_hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_string().as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            let _ = write!(hex, "{b:02x}");
        }
        hex
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_known_keys_and_rejects_unknown() {
        let mut cfg = RunConfig::default();
        cfg.apply_file("layers = 2\nalpha = 1.5 # comment\n\nstop_gradient = true\n")
            .unwrap();
        assert_eq!(cfg.train.layers, 2);
        assert_eq!(cfg.train.alpha, 1.5);
        assert!(cfg.train.stop_gradient);

        let err = cfg.apply_file("no_such_key = 1").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(cfg.apply_file("layers ~ 2").is_err());
        assert!(cfg.apply_file("layers = banana").is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::default();
        let mut b = RunConfig::default();
        assert_eq!(a.config_hash(), b.config_hash());
        b.train.alpha = 3.0;
        assert_ne!(a.config_hash(), b.config_hash());
    }
}
