use num_complex::Complex64;

use crate::config::RadarConfig;
use crate::random::{complex_gaussian, stream, Purpose};

/// Sampled transmit signals, `N_t` samples for each of the `N_T` antennas.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveformSet {
    n_time: usize,
    n_tx: usize,
    // column-major: signal `i` occupies samples[i * n_time .. (i + 1) * n_time]
    samples: Vec<Complex64>,
}

impl WaveformSet {
    pub fn from_columns(columns: Vec<Vec<Complex64>>) -> Self {
        let n_tx = columns.len();
        let n_time = columns.first().map_or(0, Vec::len);
        assert!(columns.iter().all(|c| c.len() == n_time), "ragged waveform columns");
        WaveformSet {
            n_time,
            n_tx,
            samples: columns.into_iter().flatten().collect(),
        }
    }

    pub fn n_time(&self) -> usize {
        self.n_time
    }

    pub fn n_tx(&self) -> usize {
        self.n_tx
    }

    /// Signal of transmit antenna `i`.
    pub fn signal(&self, i: usize) -> &[Complex64] {
        &self.samples[i * self.n_time..(i + 1) * self.n_time]
    }

    /// `S a` for a length-`N_T` weight vector.
    pub fn steer(&self, weights: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(weights.len(), self.n_tx);
        let mut out = vec![Complex64::new(0.0, 0.0); self.n_time];
        for (i, w) in weights.iter().enumerate() {
            for (o, s) in out.iter_mut().zip(self.signal(i)) {
                *o += s * w;
            }
        }
        out
    }

    /// `Σ_k ‖s_k‖²`.
    pub fn total_energy(&self) -> f64 {
        crate::vector::norm_sqr(&self.samples)
    }
}

/// Independent `CN(0, 1/N_T)` samples drawn from the configuration seed.
pub fn gen_waveforms(cfg: &RadarConfig) -> WaveformSet {
    let mut rng = stream(cfg.seed, Purpose::Waveforms, 0);
    let variance = 1.0 / cfg.n_tx as f64;
    let samples = (0..cfg.n_time * cfg.n_tx)
        .map(|_| complex_gaussian(&mut rng, variance))
        .collect();
    WaveformSet {
        n_time: cfg.n_time,
        n_tx: cfg.n_tx,
        samples,
    }
}
