//! JSON experiment configuration.
//!
//! ```json
//! {
//!   "n_tx": 8, "n_rx": 8, "n_time": 64, "n_delay": 64,
//!   "snr_db": [15, 20, 25, 30],
//!   "k": ["kmax/2", "kmax", "2kmax"],
//!   "trials": 100,
//!   "seed": 0
//! }
//! ```
//!
//! Everything except the three array sizes has a default.

use std::fmt;
use std::path::{Path, PathBuf};

use cmimo::experiment::{default_thresholds, log_thresholds};
use cmimo::recovery::RecoveryOptions;
use cmimo::spectral::theorem_bounds;
use cmimo::{RadarConfig, SpacingMode};
use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_time: usize,
    /// Defaults to `n_time`.
    #[serde(default)]
    pub n_delay: Option<usize>,
    #[serde(default)]
    pub n_doppler: usize,
    #[serde(default)]
    pub spacing: SpacingMode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_snr")]
    pub snr_db: Vec<f64>,
    #[serde(default = "default_k")]
    pub k: Vec<KSpec>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub thresholds: ThresholdSpec,
    /// Modulus of every planted scatterer.
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default = "one")]
    pub c_snr: f64,
    /// Noise level used for λ and the amplitude floor in the bounds report.
    #[serde(default = "one")]
    pub sigma: f64,
    /// Waveform draws examined by `bounds`.
    #[serde(default = "default_bound_seeds")]
    pub bound_seeds: usize,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_snr() -> Vec<f64> {
    vec![15.0, 20.0, 25.0, 30.0]
}

fn default_k() -> Vec<KSpec> {
    vec![KSpec::HalfKmax, KSpec::Kmax, KSpec::TwiceKmax]
}

fn default_trials() -> usize {
    100
}

fn default_bound_seeds() -> usize {
    50
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    /// Fixed λ instead of the theorem's `2σ√(2 ln(grid size))`.
    pub lambda: Option<f64>,
    /// Solve on the unit-column operator `A D⁻¹`.
    pub normalize: bool,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub accelerated: bool,
    pub continuation: bool,
    pub support_eps: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = RecoveryOptions::default();
        SolverConfig {
            lambda: d.lambda,
            normalize: d.normalize,
            max_iters: d.max_iters,
            rel_tol: d.rel_tol,
            accelerated: d.accelerated,
            continuation: d.continuation,
            support_eps: d.support_eps,
        }
    }
}

impl From<SolverConfig> for RecoveryOptions {
    fn from(s: SolverConfig) -> Self {
        RecoveryOptions {
            lambda: s.lambda,
            normalize: s.normalize,
            max_iters: s.max_iters,
            rel_tol: s.rel_tol,
            accelerated: s.accelerated,
            continuation: s.continuation,
            support_eps: s.support_eps,
        }
    }
}

/// Either an explicit list or a log-spaced grid relative to the amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ThresholdSpec {
    List(Vec<f64>),
    Log {
        count: usize,
        #[serde(default = "default_low")]
        low: f64,
        #[serde(default = "default_high")]
        high: f64,
    },
}

fn default_low() -> f64 {
    1e-3
}

fn default_high() -> f64 {
    2.0
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        ThresholdSpec::Log {
            count: 64,
            low: default_low(),
            high: default_high(),
        }
    }
}

impl ThresholdSpec {
    pub fn resolve(&self, amplitude: f64) -> CliResult<Vec<f64>> {
        let th = match self {
            ThresholdSpec::List(v) => v.clone(),
            ThresholdSpec::Log { count, low, high } => {
                if *count == 0 || !(*low > 0.0) || !(high > low) {
                    return Err(CliError::Usage(format!(
                        "threshold grid needs count >= 1 and 0 < low < high (got count {count}, low {low}, high {high})"
                    )));
                }
                if (*low, *high) == (default_low(), default_high()) {
                    default_thresholds(amplitude, *count)
                } else {
                    log_thresholds(high * amplitude, low * amplitude, *count)
                }
            }
        };
        if th.is_empty() || th.windows(2).any(|w| w[1] >= w[0]) {
            return Err(CliError::Usage("thresholds must be non-empty and strictly descending".into()));
        }
        Ok(th)
    }
}

/// A sparsity level, possibly relative to the theorem's `K_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KSpec {
    Fixed(usize),
    HalfKmax,
    Kmax,
    TwiceKmax,
}

impl KSpec {
    /// Symbolic levels floor at 1 so `kmax/2` stays runnable when `K_max` is small.
    pub fn resolve(self, k_max: usize) -> usize {
        match self {
            KSpec::Fixed(k) => k,
            KSpec::HalfKmax => (k_max / 2).max(1),
            KSpec::Kmax => k_max.max(1),
            KSpec::TwiceKmax => (2 * k_max).max(1),
        }
    }
}

impl fmt::Display for KSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KSpec::Fixed(k) => write!(f, "{k}"),
            KSpec::HalfKmax => f.write_str("kmax/2"),
            KSpec::Kmax => f.write_str("kmax"),
            KSpec::TwiceKmax => f.write_str("2kmax"),
        }
    }
}

impl Serialize for KSpec {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            KSpec::Fixed(k) => s.serialize_u64(*k as u64),
            other => s.serialize_str(&other.to_string()),
        }
    }
}

impl<'de> Deserialize<'de> for KSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct KVisitor;

        impl Visitor<'_> for KVisitor {
            type Value = KSpec;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(r#"a positive integer or one of "kmax/2", "kmax", "2kmax""#)
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<KSpec, E> {
                if v == 0 {
                    return Err(E::custom("k must be at least 1"));
                }
                Ok(KSpec::Fixed(v as usize))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<KSpec, E> {
                if v <= 0 {
                    return Err(E::custom("k must be at least 1"));
                }
                Ok(KSpec::Fixed(v as usize))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<KSpec, E> {
                match v.trim() {
                    "kmax/2" => Ok(KSpec::HalfKmax),
                    "kmax" => Ok(KSpec::Kmax),
                    "2kmax" => Ok(KSpec::TwiceKmax),
                    other => Err(E::invalid_value(de::Unexpected::Str(other), &self)),
                }
            }
        }

        d.deserialize_any(KVisitor)
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str, path: &Path) -> CliResult<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| CliError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("cannot read {}", path.display()), e))?;
        Self::from_json(&text, path)
    }

    fn check(&self) -> CliResult<()> {
        self.radar().validate()?;
        if self.trials == 0 {
            return Err(CliError::Usage("trials must be at least 1".into()));
        }
        if self.snr_db.is_empty() || self.k.is_empty() {
            return Err(CliError::Usage("snr_db and k lists must be non-empty".into()));
        }
        if !(self.amplitude > 0.0) || !(self.sigma >= 0.0) || !(self.c0 > 0.0) || !(self.c_snr > 0.0) {
            return Err(CliError::Usage("amplitude, c0 and c_snr must be positive and sigma non-negative".into()));
        }
        self.thresholds.resolve(self.amplitude)?;
        Ok(())
    }

    pub fn radar(&self) -> RadarConfig {
        RadarConfig {
            n_tx: self.n_tx,
            n_rx: self.n_rx,
            n_time: self.n_time,
            n_delay: self.n_delay.unwrap_or(self.n_time),
            n_doppler: self.n_doppler,
            spacing: self.spacing,
            seed: self.seed,
        }
    }

    /// The `k` list with symbolic entries replaced by numbers.
    pub fn resolved_k(&self) -> Vec<usize> {
        let k_max = theorem_bounds(&self.radar(), self.sigma, self.c0, self.c_snr).k_max;
        self.k.iter().map(|k| k.resolve(k_max)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<ExperimentConfig> {
        ExperimentConfig::from_json(text, Path::new("test.json"))
    }

    #[test]
    fn defaults_and_symbolic_k() {
        let cfg = parse(r#"{"n_tx": 8, "n_rx": 8, "n_time": 64}"#).unwrap();
        assert_eq!(cfg.radar(), RadarConfig::new(8, 8, 64, 0));
        assert_eq!(cfg.resolved_k(), vec![1, 2, 4]);
        assert_eq!(cfg.trials, 100);
        assert_eq!(cfg.snr_db, vec![15.0, 20.0, 25.0, 30.0]);
        assert_eq!(cfg.thresholds.resolve(1.0).unwrap().len(), 64);
    }

    #[test]
    fn small_kmax_floors_at_one() {
        let cfg = parse(r#"{"n_tx": 4, "n_rx": 1, "n_time": 16, "k": ["kmax/2", "kmax", "2kmax", 3]}"#).unwrap();
        assert_eq!(cfg.resolved_k(), vec![1, 1, 1, 3]);
    }

    #[test]
    fn round_trips_through_json() {
        let cfg = parse(r#"{"n_tx": 2, "n_rx": 2, "n_time": 16, "k": [2, "kmax"], "thresholds": [1.0, 0.5], "solver": {"normalize": false}}"#)
            .unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(parse(&text).unwrap(), cfg);
        assert!(!cfg.solver.normalize);
        assert_eq!(cfg.solver.max_iters, 2000);
    }

    #[test]
    fn errors_carry_position() {
        let err = parse("{\n  \"n_tx\": 2,\n  \"n_rx\": x\n}").unwrap_err();
        match err {
            CliError::Parse { line, column, .. } => assert_eq!((line, column), (3, 11)),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(parse(r#"{"n_tx": 2}"#).unwrap_err().exit_code(), 2);
        assert!(matches!(parse(r#"{"n_tx": 2, "n_rx": 2, "n_time": 8, "k": ["kmin"]}"#), Err(CliError::Parse { .. })));
        assert!(matches!(parse(r#"{"n_tx": 2, "n_rx": 2, "n_time": 8, "bogus": 1}"#), Err(CliError::Parse { .. })));
        assert!(parse(r#"{"n_tx": 2, "n_rx": 2, "n_time": 8, "k": [0]}"#).is_err());
    }

    #[test]
    fn doppler_must_match_time() {
        let err = parse(r#"{"n_tx": 2, "n_rx": 2, "n_time": 16, "n_doppler": 8}"#).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("n_doppler"));
        assert!(parse(r#"{"n_tx": 2, "n_rx": 2, "n_time": 16, "n_doppler": 16}"#).is_ok());
    }

    #[test]
    fn threshold_specs() {
        let cfg = parse(r#"{"n_tx": 2, "n_rx": 2, "n_time": 8, "thresholds": {"count": 5, "low": 0.1, "high": 1.0}}"#).unwrap();
        let th = cfg.thresholds.resolve(2.0).unwrap();
        assert_eq!(th.len(), 5);
        assert!((th[0] - 2.0).abs() < 1e-12 && (th[4] - 0.2).abs() < 1e-12);
        assert!(parse(r#"{"n_tx": 2, "n_rx": 2, "n_time": 8, "thresholds": [0.1, 0.5]}"#).is_err());
    }
}
