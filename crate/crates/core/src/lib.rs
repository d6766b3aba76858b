//! Compressive MIMO radar: sensing operators for the azimuth–delay and
//! azimuth–delay–Doppler grids, debiased lasso recovery, coherence and
//! operator-norm diagnostics, and a seeded Monte-Carlo ROC harness.

pub mod config;
pub mod error;
pub mod experiment;
pub mod linop;
pub mod manifold;
pub mod operator;
pub mod random;
pub mod recovery;
pub mod scene;
pub mod spectral;
pub mod structure;
pub mod vector;
pub mod waveform;

pub use config::{GridMode, GridPoint, RadarConfig, SpacingMode};
pub use error::{Error, Result};
pub use linop::{LinearOperator, Normalized};
pub use num_complex::Complex64;
pub use operator::{ColumnScaling, SensingOperator};
pub use scene::{draw_scene, sigma_from_snr, Scene};
pub use waveform::{gen_waveforms, WaveformSet};
