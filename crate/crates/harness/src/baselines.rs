//! Recorded empirical constants.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::suites::Summary;

pub const SAFETY_MARGIN: f64 = 1.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineStore {
    pub config_hash: String,
    pub margin: f64,
    /// Observed maximum times `margin`, per constant.
    pub constants: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub name: String,
    pub observed: f64,
    pub baseline: f64,
}

impl BaselineStore {
    pub fn from_summaries<'a>(config_hash: &str, summaries: impl IntoIterator<Item = &'a Summary>) -> Self {
        let mut constants = BTreeMap::new();
        for summary in summaries {
            for (name, stat) in &summary.constants {
                if stat.max.is_finite() {
                    constants.insert(name.clone(), stat.max * SAFETY_MARGIN);
                }
            }
        }
        Self { config_hash: config_hash.to_string(), margin: SAFETY_MARGIN, constants }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    /// Writes the store. An existing file is only replaced with `force`, and
    /// is then kept next to it under a timestamp suffix, which is returned.
    pub fn save(&self, path: &Path, force: bool) -> Result<Option<PathBuf>> {
        let mut archived = None;
        if path.exists() {
            if !force {
                bail!("{} already exists; pass --force to overwrite", path.display());
            }
            let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
            let mut name = path.file_name().unwrap_or_default().to_os_string();
            name.push(format!(".{stamp}"));
            let target = path.with_file_name(name);
            fs::rename(path, &target).with_context(|| format!("archiving {}", path.display()))?;
            archived = Some(target);
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir)?;
        }
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(archived)
    }

    /// Constants whose observed maximum exceeds the recorded value.
    pub fn check<'a>(&self, config_hash: &str, summaries: impl IntoIterator<Item = &'a Summary>) -> Result<Vec<Violation>> {
        if self.config_hash != config_hash {
            bail!(
                "baseline/config mismatch: baselines were recorded under {} but the configuration hashes to {}",
                self.config_hash,
                config_hash
            );
        }
        let mut violations = Vec::new();
        for summary in summaries {
            for (name, stat) in &summary.constants {
                if let Some(&baseline) = self.constants.get(name) {
                    if stat.max.is_nan() || stat.max > baseline {
                        violations.push(Violation { name: name.clone(), observed: stat.max, baseline });
                    }
                }
            }
        }
        Ok(violations)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.constants.get(name).copied()
    }
}
