//! Generic sparse target scenes and noise calibration.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;

use crate::config::RadarConfig;
use crate::error::{Error, Result};
use crate::random::{stream, Purpose};

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    /// Sorted, distinct grid indices.
    pub support: Vec<usize>,
    /// Amplitudes aligned with `support`.
    pub amplitudes: Vec<Complex64>,
    pub grid_size: usize,
}

impl Scene {
    pub fn new(grid_size: usize, mut entries: Vec<(usize, Complex64)>) -> Result<Self> {
        entries.sort_by_key(|e| e.0);
        if entries.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument("duplicate support index".into()));
        }
        if let Some(&(idx, _)) = entries.last() {
            if idx >= grid_size {
                return Err(Error::IndexOutOfRange { index: idx, size: grid_size });
            }
        }
        let (support, amplitudes) = entries.into_iter().unzip();
        Ok(Scene {
            support,
            amplitudes,
            grid_size,
        })
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut x = vec![Complex64::new(0.0, 0.0); self.grid_size];
        for (&i, &a) in self.support.iter().zip(&self.amplitudes) {
            x[i] = a;
        }
        x
    }

    /// Complex sign vector over the whole grid: `x_k / |x_k|`, zero off support.
    pub fn sign(&self) -> Vec<Complex64> {
        sign(&self.to_dense())
    }
}

/// Entrywise complex sign, `z / |z|` and `0` at zero.
pub fn sign(x: &[Complex64]) -> Vec<Complex64> {
    x.iter()
        .map(|z| {
            let r = z.norm();
            if r > 0.0 {
                z / r
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// Uniformly random `k`-subset of the grid with Steinhaus phases, all
/// amplitudes of modulus `amplitude`.
pub fn draw_scene(cfg: &RadarConfig, k: usize, amplitude: f64, seed: u64) -> Result<Scene> {
    let mut rng = stream(seed, Purpose::Scene, 0);
    draw_scene_with(&mut rng, cfg.grid_size(), k, amplitude)
}

pub fn draw_scene_with<R: Rng + ?Sized>(
    rng: &mut R,
    grid_size: usize,
    k: usize,
    amplitude: f64,
) -> Result<Scene> {
    if k > grid_size {
        return Err(Error::InvalidArgument(format!(
            "cannot place {k} scatterers on a grid of {grid_size} cells"
        )));
    }
    let mut support = sample(rng, grid_size, k).into_vec();
    support.sort_unstable();
    let amplitudes = support
        .iter()
        .map(|_| Complex64::from_polar(amplitude, rng.random_range(0.0..2.0 * PI)))
        .collect();
    Ok(Scene {
        support,
        amplitudes,
        grid_size,
    })
}

/// Noise level giving an output SNR `N_R N_t |x|² / σ²` of `snr_db` for a
/// scatterer of modulus `amplitude`.
pub fn sigma_from_snr(cfg: &RadarConfig, snr_db: f64, amplitude: f64) -> f64 {
    let snr = 10f64.powf(snr_db / 10.0);
    amplitude * (cfg.n_measurements() as f64 / snr).sqrt()
}
