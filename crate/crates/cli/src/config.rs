use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use brokenline::MorseConfig;
use serde::Deserialize;

pub const OUT_ENV: &str = "BROKENLINE_OUT";

/// Settings shared by every subcommand. Read from a TOML file of plain
/// `key = value` lines, with an optional `[morse]` table for tolerances.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub truncation: usize,
    pub seed: u64,
    pub per_stratum: usize,
    pub max_size: usize,
    pub out_dir: PathBuf,
    pub morse: MorseConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            truncation: 4,
            seed: 20240607,
            per_stratum: 2,
            max_size: 4,
            out_dir: PathBuf::from("brokenline-out"),
            morse: MorseConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let cfg: RunConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncation == 0 || self.per_stratum == 0 || self.max_size == 0 {
            bail!("truncation, per_stratum and max_size must be positive");
        }
        let m = &self.morse;
        let positive = [m.step, m.min_step, m.tol_crit, m.tol_merge, m.tol_end, m.tol_reparam, m.tol_inv, m.tol_time, m.capture_radius, m.horizon];
        if positive.iter().any(|&x| !(x > 0.0)) || m.ring_seeds == 0 || m.grid < 4 || m.samples < 2 {
            bail!("morse tolerances and counts must be positive");
        }
        Ok(())
    }
}

/// `--out` beats the environment, which beats the config file.
pub fn resolve_out_dir(flag: Option<PathBuf>, env: Option<String>, cfg: &RunConfig) -> PathBuf {
    flag.or(env.filter(|s| !s.is_empty()).map(PathBuf::from)).unwrap_or_else(|| cfg.out_dir.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_partial_file() {
        let cfg: RunConfig = toml::from_str("truncation = 3\nseed = 7\n[morse]\nstep = 0.002\n").unwrap();
        assert_eq!(cfg.truncation, 3);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.morse.step, 0.002);
        assert_eq!(cfg.morse.tol_crit, 1e-8);
        assert!(cfg.validate().is_ok());
        assert!(toml::from_str::<RunConfig>("trunc = 3").is_err());
        let zero: RunConfig = toml::from_str("truncation = 0").unwrap();
        assert!(zero.validate().is_err());
    }

    #[test]
    fn out_dir_precedence() {
        let cfg = RunConfig { out_dir: "from-file".into(), ..RunConfig::default() };
        assert_eq!(resolve_out_dir(None, None, &cfg), PathBuf::from("from-file"));
        assert_eq!(resolve_out_dir(None, Some("env".into()), &cfg), PathBuf::from("env"));
        assert_eq!(resolve_out_dir(Some("flag".into()), Some("env".into()), &cfg), PathBuf::from("flag"));
    }
}
