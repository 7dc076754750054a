//! Flat `key = value` configuration files.
//!
//! Blank lines and lines starting with `#` are ignored. Unknown keys are an
//! error so that typos do not silently fall back to defaults.

use std::path::Path;

use umbra_core::detect::DetectConfig;
use umbra_core::relight::{FallbackStrategy, RelightConfig};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PipelineConfig {
    pub relight: RelightConfig,
    pub detect: DetectConfig,
    /// Worker threads, 0 for one per core.
    pub threads: usize,
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value
        .parse()
        .map_err(|_| CliError::Config(format!("cannot parse value {value:?} for key {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value.to_ascii_lowercase().as_str() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(CliError::Config(format!(
            "expected a boolean for {key}, got {value:?}"
        ))),
    }
}

impl PipelineConfig {
    /// Applies one setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let r = &mut self.relight;
        match key {
            "neighbors" => r.n_neighbors = parse(key, value)?,
            "superpixel_size" => r.superpixel_size = parse(key, value)?,
            "compactness" => r.compactness = parse(key, value)?,
            "slic_iterations" => r.slic_iterations = parse(key, value)?,
            "lab_bins" => r.histograms.lab_bins = parse(key, value)?,
            "lbp_bins" => r.histograms.lbp_bins = parse(key, value)?,
            "alpha" => r.weights.alpha = parse(key, value)?,
            "beta" => r.weights.beta = parse(key, value)?,
            "gamma" => r.weights.gamma = parse(key, value)?,
            "epsilon" => r.weights.epsilon = parse(key, value)?,
            "fallback_threshold" => r.fallback_threshold = parse(key, value)?,
            "fallback_top_k" => r.fallback_top_k = parse(key, value)?,
            "fallback_strategy" => {
                r.fallback_strategy = match value {
                    "similarity" => FallbackStrategy::SimilarityWeighted,
                    "average" => FallbackStrategy::NaiveAverage,
                    _ => {
                        return Err(CliError::Config(format!(
                            "fallback_strategy must be `similarity` or `average`, got {value:?}"
                        )))
                    }
                }
            }
            "normalize_weights" => r.normalize_weights = parse_bool(key, value)?,
            "penumbra_radius" => r.penumbra_radius = parse(key, value)?,
            "smoothing" => r.smoothing = parse_bool(key, value)?,
            "detect_value_percentile" => self.detect.value_percentile = parse(key, value)?,
            "detect_sat_min" => self.detect.sat_min = parse(key, value)?,
            "detect_min_component" => self.detect.min_component = parse(key, value)?,
            "threads" => self.threads = parse(key, value)?,
            _ => {
                return Err(CliError::Config(format!(
                    "unknown configuration key {key:?}"
                )))
            }
        }
        Ok(())
    }

    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("line {}: expected key = value", lineno + 1))
            })?;
            cfg.set(key.trim(), value.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse_str(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.relight.validate()?;
        self.detect.validate()?;
        Ok(())
    }

    /// The configuration as a file `parse_str` reads back unchanged.
    pub fn to_text(&self) -> String {
        let r = &self.relight;
        let strategy = match r.fallback_strategy {
            FallbackStrategy::SimilarityWeighted => "similarity",
            FallbackStrategy::NaiveAverage => "average",
        };
        let lines = [
            ("neighbors", r.n_neighbors.to_string()),
            ("superpixel_size", r.superpixel_size.to_string()),
            ("compactness", r.compactness.to_string()),
            ("slic_iterations", r.slic_iterations.to_string()),
            ("lab_bins", r.histograms.lab_bins.to_string()),
            ("lbp_bins", r.histograms.lbp_bins.to_string()),
            ("alpha", r.weights.alpha.to_string()),
            ("beta", r.weights.beta.to_string()),
            ("gamma", r.weights.gamma.to_string()),
            ("epsilon", r.weights.epsilon.to_string()),
            ("fallback_threshold", r.fallback_threshold.to_string()),
            ("fallback_top_k", r.fallback_top_k.to_string()),
            ("fallback_strategy", strategy.to_string()),
            ("normalize_weights", r.normalize_weights.to_string()),
            ("penumbra_radius", r.penumbra_radius.to_string()),
            ("smoothing", r.smoothing.to_string()),
            (
                "detect_value_percentile",
                self.detect.value_percentile.to_string(),
            ),
            ("detect_sat_min", self.detect.sat_min.to_string()),
            (
                "detect_min_component",
                self.detect.min_component.to_string(),
            ),
            ("threads", self.threads.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
