use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_CANVAS: u32 = 512;

/// Patch count `k` and cell size `p` for one composite family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridConfig {
    pub k: u32,
    pub p: u32,
}

impl GridConfig {
    pub const fn new(k: u32, p: u32) -> Self {
        Self { k, p }
    }

    pub fn validate(&self, canvas: u32) -> Result<()> {
        if self.k == 0 || self.p == 0 {
            return Err(Error::Config(format!("config {self}: k and p must be positive")));
        }
        if self.p > canvas {
            return Err(Error::Config(format!("config {self}: cell {} exceeds canvas {canvas}", self.p)));
        }
        let cells = u64::from(canvas / self.p).pow(2);
        if u64::from(self.k) > cells {
            return Err(Error::Config(format!(
                "config {self}: {} patches do not fit a {}x{} grid",
                self.k,
                canvas / self.p,
                canvas / self.p
            )));
        }
        Ok(())
    }
}

impl fmt::Display for GridConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.k, self.p)
    }
}

impl FromStr for GridConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (k, p) = s
            .split_once(':')
            .ok_or_else(|| Error::Config(format!("expected k:p, got {s:?}")))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<u32>()
                .map_err(|_| Error::Config(format!("expected k:p, got {s:?}")))
        };
        Ok(Self::new(parse(k)?, parse(p)?))
    }
}

/// Parses `k:p[,k:p...]`.
pub fn parse_configs(s: &str) -> Result<Vec<GridConfig>> {
    s.split(',').map(str::parse).collect()
}

pub fn default_configs() -> Vec<GridConfig> {
    vec![
        GridConfig::new(2, 256),
        GridConfig::new(3, 256),
        GridConfig::new(4, 256),
        GridConfig::new(6, 170),
        GridConfig::new(9, 128),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PoolPolicy {
    /// Every configuration starts from the full pool.
    #[default]
    FreshPerConfig,
    /// Configurations consume one pool in order.
    Shared,
}

impl FromStr for PoolPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fresh_per_config" => Ok(Self::FreshPerConfig),
            "shared" => Ok(Self::Shared),
            _ => Err(Error::Config(format!("unknown pool policy {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComposerConfig {
    pub canvas: u32,
    pub configs: Vec<GridConfig>,
    pub seed: u64,
    pub distinct_labels: bool,
    pub pool_policy: PoolPolicy,
    pub num_classes: u32,
}

impl ComposerConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            canvas: DEFAULT_CANVAS,
            configs: default_configs(),
            seed,
            distinct_labels: false,
            pool_policy: PoolPolicy::FreshPerConfig,
            num_classes: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.canvas == 0 {
            return Err(Error::Config("canvas must be positive".into()));
        }
        if self.configs.is_empty() {
            return Err(Error::Config("at least one k:p config is required".into()));
        }
        if self.num_classes == 0 {
            return Err(Error::Config("num_classes must be positive".into()));
        }
        self.configs.iter().try_for_each(|c| c.validate(self.canvas))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_five_families() {
        let c = ComposerConfig::new(1);
        assert_eq!(c.canvas, 512);
        assert_eq!(
            c.configs.iter().map(|g| (g.k, g.p)).collect::<Vec<_>>(),
            vec![(2, 256), (3, 256), (4, 256), (6, 170), (9, 128)]
        );
        c.validate().unwrap();
    }

    #[test]
    fn too_many_patches_for_grid() {
        // floor(512/256)^2 = 4
        assert!(GridConfig::new(9, 256).validate(512).is_err());
        assert!(GridConfig::new(4, 256).validate(512).is_ok());
        assert!(GridConfig::new(1, 600).validate(512).is_err());
        assert!(GridConfig::new(0, 10).validate(512).is_err());
    }

    #[test]
    fn parses_config_lists() {
        assert_eq!(
            parse_configs("2:256,9:128").unwrap(),
            vec![GridConfig::new(2, 256), GridConfig::new(9, 128)]
        );
        assert!(parse_configs("2-256").is_err());
        assert!(parse_configs("2:x").is_err());
    }
}
