//! Experiment configuration.

use std::fs;
use std::path::{Path, PathBuf};

use nearmin_core::wavelet::WaveletFamily;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{path}:{line}: {key}: {message}")]
    Invalid { path: PathBuf, line: usize, key: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    /// Number of random signals.
    pub size: usize,
    /// Resolution at which signals are drawn before upsampling to each level.
    pub reference_level: u32,
    pub levels: Vec<u32>,
    pub families: Vec<WaveletFamily>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoodPartConfig {
    pub p_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    /// Exponents assigned to corpus cases in rotation.
    pub p_values: Vec<f64>,
    /// Decades spanned by the geometric radius range below `‖f‖_p`.
    pub decades: f64,
    pub dilation: u32,
    /// Probability that a wavelet index belongs to the projection set.
    pub projection_density: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    Hilbert,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LongRangeConfig {
    pub levels: Vec<u32>,
    /// Exponents of the power weights `|x - ½|^β`.
    pub weight_betas: Vec<f64>,
    pub min_scale: u32,
    /// Bumps stop this many scales above the finest level.
    pub finest_margin: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedConfig {
    pub operator: OperatorKind,
    pub levels: Vec<u32>,
    pub size: usize,
    pub p_values: Vec<f64>,
    /// `(w_beta, v_beta)` pairs.
    pub triples: Vec<[f64; 2]>,
    pub dilation: u32,
    pub decades: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub cases: usize,
    pub level: u32,
    pub p: f64,
    /// Radii per sequence, geometric from the smallest admissible radius to `‖f‖_p`.
    pub steps: usize,
    pub zero_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightCase {
    pub beta: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsConfig {
    pub levels: Vec<u32>,
    pub cases: Vec<WeightCase>,
    pub include_shifted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub corpus: CorpusConfig,
    pub good_part: GoodPartConfig,
    pub wavelet_stability: StabilityConfig,
    pub long_range: LongRangeConfig,
    pub weighted: WeightedConfig,
    pub coefficient_sequence: SequenceConfig,
    pub weights: WeightsConfig,
    /// Where sweep outputs go; not part of the configuration hash.
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.into(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        if let Err((key, message)) = config.validate() {
            return Err(ConfigError::Invalid { path: path.into(), line: locate(text, &key), key, message });
        }
        Ok(config)
    }

    /// Checks ranges; on failure returns the offending key and a message.
    pub fn validate(&self) -> Result<(), (String, String)> {
        fn err<T>(key: &str, message: impl Into<String>) -> Result<T, (String, String)> {
            Err((key.to_string(), message.into()))
        }
        fn levels_ok(key: &str, levels: &[u32], min: u32) -> Result<(), (String, String)> {
            if levels.is_empty() {
                return err(key, "at least one level is required");
            }
            for &j in levels {
                if !(min..=nearmin_core::dyadic::MAX_LEVEL).contains(&j) {
                    return err(key, format!("level {j} outside {min}..={}", nearmin_core::dyadic::MAX_LEVEL));
                }
            }
            Ok(())
        }
        fn exponents_ok(key: &str, ps: &[f64], min_exclusive: f64) -> Result<(), (String, String)> {
            if ps.is_empty() {
                return err(key, "at least one exponent is required");
            }
            if let Some(p) = ps.iter().find(|p| !(p.is_finite() && **p > min_exclusive)) {
                return err(key, format!("exponent {p} must exceed {min_exclusive}"));
            }
            Ok(())
        }

        let c = &self.corpus;
        if !(2..=16).contains(&c.reference_level) {
            return err("corpus.reference_level", "must lie in 2..=16");
        }
        levels_ok("corpus.levels", &c.levels, c.reference_level)?;
        if c.families.is_empty() {
            return err("corpus.families", "at least one wavelet family is required");
        }
        exponents_ok("good_part.p_values", &self.good_part.p_values, 1.0)?;

        let t = &self.wavelet_stability;
        exponents_ok("wavelet_stability.p_values", &t.p_values, 1.0)?;
        if !(t.decades.is_finite() && t.decades > 0.0) {
            return err("wavelet_stability.decades", "must be positive");
        }
        if t.dilation == 0 {
            return err("wavelet_stability.dilation", "must be positive");
        }
        if !(0.0..=1.0).contains(&t.projection_density) {
            return err("wavelet_stability.projection_density", "must lie in [0, 1]");
        }

        let f = &self.long_range;
        levels_ok("long_range.levels", &f.levels, 4)?;
        for &j in &f.levels {
            if f.min_scale + f.finest_margin >= j || f.finest_margin == 0 {
                return err("long_range.min_scale", format!("no bump scales for level {j}"));
            }
        }
        if let Some(b) = f.weight_betas.iter().find(|b| !(b.is_finite() && **b > -1.0)) {
            return err("long_range.weight_betas", format!("exponent {b} is not locally integrable"));
        }

        let w = &self.weighted;
        levels_ok("weighted.levels", &w.levels, c.reference_level)?;
        exponents_ok("weighted.p_values", &w.p_values, 1.0)?;
        if w.triples.is_empty() {
            return err("weighted.triples", "at least one weight pair is required");
        }
        if w.triples.iter().flatten().any(|b| !(b.is_finite() && *b > -1.0)) {
            return err("weighted.triples", "exponents must be finite and above -1");
        }
        if w.dilation == 0 {
            return err("weighted.dilation", "must be positive");
        }
        if !(w.decades.is_finite() && w.decades > 0.0) {
            return err("weighted.decades", "must be positive");
        }

        let k = &self.coefficient_sequence;
        if !(3..=nearmin_core::dyadic::MAX_LEVEL).contains(&k.level) {
            return err("coefficient_sequence.level", "must be at least 3");
        }
        if !(k.p.is_finite() && k.p > 1.0) {
            return err("coefficient_sequence.p", "must exceed 1");
        }
        if k.steps < 2 {
            return err("coefficient_sequence.steps", "need at least two radii");
        }
        if !(0.0..1.0).contains(&k.zero_fraction) {
            return err("coefficient_sequence.zero_fraction", "must lie in [0, 1)");
        }

        let m = &self.weights;
        levels_ok("weights.levels", &m.levels, 1)?;
        for case in &m.cases {
            if !(case.p.is_finite() && case.p >= 1.0) {
                return err("weights.cases", format!("exponent {} below 1", case.p));
            }
            if !case.beta.is_finite() {
                return err("weights.cases", "weight exponent must be finite");
            }
        }
        Ok(())
    }

    /// SHA-256 of the scientific content (everything except output paths).
    pub fn hash(&self) -> String {
        let mut scientific = self.clone();
        scientific.output_dir = PathBuf::new();
        let mut value = serde_json::to_value(&scientific).expect("config serializes");
        if let serde_json::Value::Object(map) = &mut value {
            map.remove("output_dir");
        }
        hex::encode(Sha256::digest(value.to_string().as_bytes()))
    }
}

/// 1-based line of a dotted key path such as `weighted.levels`: each
/// component is searched for after the line of the previous one.
fn locate(text: &str, path: &str) -> usize {
    let lines: Vec<&str> = text.lines().collect();
    let mut from = 0;
    for key in path.split('.') {
        let needle = format!("\"{key}\"");
        match lines[from..].iter().position(|l| l.contains(&needle)) {
            Some(i) => from += i,
            None => break,
        }
    }
    from + 1
}
