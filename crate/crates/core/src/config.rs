//! Problem dimensions and grid geometry.
//!
//! Delays are measured in samples (the delay step equals the sampling
//! interval), Doppler bins in units of `1/T` and azimuth in `β = sin θ`
//! on a uniform grid of step `2 / (N_R N_T)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the two grating-lobe-free spacing choices the arrays use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SpacingMode {
    /// `d_T = 1/2`, `d_R = N_T / 2`.
    #[default]
    TxHalf,
    /// `d_T = N_R / 2`, `d_R = 1/2`.
    RxHalf,
}

/// Whether columns are indexed by (delay, azimuth) or (delay, Doppler, azimuth).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GridMode {
    DelayAzimuth,
    DelayDopplerAzimuth,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RadarConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_time: usize,
    pub n_delay: usize,
    /// Number of Doppler bins; zero disables Doppler.
    #[serde(default)]
    pub n_doppler: usize,
    #[serde(default)]
    pub spacing: SpacingMode,
    #[serde(default)]
    pub seed: u64,
}

impl RadarConfig {
    /// Doppler-free configuration with `N_τ = N_t` and the default spacing.
    pub fn new(n_tx: usize, n_rx: usize, n_time: usize, seed: u64) -> Self {
        RadarConfig {
            n_tx,
            n_rx,
            n_time,
            n_delay: n_time,
            n_doppler: 0,
            spacing: SpacingMode::TxHalf,
            seed,
        }
    }

    pub fn with_delays(mut self, n_delay: usize) -> Self {
        self.n_delay = n_delay;
        self
    }

    /// Enables Doppler with `N_f = N_t`.
    pub fn with_doppler(mut self) -> Self {
        self.n_doppler = self.n_time;
        self
    }

    pub fn with_spacing(mut self, spacing: SpacingMode) -> Self {
        self.spacing = spacing;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 || self.n_rx == 0 {
            return Err(Error::InvalidConfig(format!(
                "antenna counts must be positive (n_tx = {}, n_rx = {})",
                self.n_tx, self.n_rx
            )));
        }
        if self.n_time == 0 {
            return Err(Error::InvalidConfig("n_time must be positive".into()));
        }
        if self.n_delay == 0 || self.n_delay > self.n_time {
            return Err(Error::InvalidConfig(format!(
                "n_delay must lie in 1..=n_time (n_delay = {}, n_time = {}); delays are circular shifts of one period",
                self.n_delay, self.n_time
            )));
        }
        if self.n_doppler != 0 && self.n_doppler != self.n_time {
            return Err(Error::InvalidConfig(format!(
                "n_doppler must be 0 (Doppler off) or equal to n_time = {} (got {}); \
                 with Doppler step 1/T the bins only form an orthogonal set when N_f = N_t",
                self.n_time, self.n_doppler
            )));
        }
        Ok(())
    }

    pub fn mode(&self) -> GridMode {
        if self.n_doppler > 0 {
            GridMode::DelayDopplerAzimuth
        } else {
            GridMode::DelayAzimuth
        }
    }

    pub fn n_beta(&self) -> usize {
        self.n_rx * self.n_tx
    }

    /// Doppler bins on the grid (1 when Doppler is off).
    pub fn n_doppler_bins(&self) -> usize {
        self.n_doppler.max(1)
    }

    pub fn grid_size(&self) -> usize {
        self.n_delay * self.n_doppler_bins() * self.n_beta()
    }

    /// Length of the measurement vector, `N_R N_t`.
    pub fn n_measurements(&self) -> usize {
        self.n_rx * self.n_time
    }

    pub fn tx_spacing(&self) -> f64 {
        match self.spacing {
            SpacingMode::TxHalf => 0.5,
            SpacingMode::RxHalf => 0.5 * self.n_rx as f64,
        }
    }

    pub fn rx_spacing(&self) -> f64 {
        match self.spacing {
            SpacingMode::TxHalf => 0.5 * self.n_tx as f64,
            SpacingMode::RxHalf => 0.5,
        }
    }

    pub fn beta_step(&self) -> f64 {
        2.0 / self.n_beta() as f64
    }

    /// Azimuth of grid point `n`, `β_n = n Δβ`.
    pub fn beta(&self, n: usize) -> f64 {
        n as f64 * self.beta_step()
    }

    /// Number of grid cells as used inside the theorem's logarithms:
    /// `N_τ N_β`, or `N_τ N_f N_β` with Doppler.
    pub fn log_grid_size(&self) -> f64 {
        (self.grid_size() as f64).ln()
    }

    pub fn split_index(&self, index: usize) -> Result<GridPoint> {
        let size = self.grid_size();
        if index >= size {
            return Err(Error::IndexOutOfRange { index, size });
        }
        let delay = index % self.n_delay;
        let rest = index / self.n_delay;
        let doppler = rest % self.n_doppler_bins();
        let beta = rest / self.n_doppler_bins();
        Ok(GridPoint {
            delay,
            doppler,
            beta,
        })
    }

    pub fn flat_index(&self, point: GridPoint) -> Result<usize> {
        if point.delay >= self.n_delay
            || point.doppler >= self.n_doppler_bins()
            || point.beta >= self.n_beta()
        {
            return Err(Error::InvalidArgument(format!(
                "grid point {point:?} outside {}x{}x{} grid",
                self.n_delay,
                self.n_doppler_bins(),
                self.n_beta()
            )));
        }
        Ok((point.beta * self.n_doppler_bins() + point.doppler) * self.n_delay + point.delay)
    }
}

/// A cell of the delay/Doppler/azimuth grid. The flat index runs over delay
/// fastest, then Doppler, then azimuth, so each `(β, f)` pair owns a
/// contiguous run of `N_τ` delays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridPoint {
    pub delay: usize,
    pub doppler: usize,
    pub beta: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_dimensions() {
        let cfg = RadarConfig::new(8, 8, 64, 0);
        assert_eq!(cfg.n_beta(), 64);
        assert_eq!(cfg.grid_size(), 4096);
        assert_eq!(cfg.n_measurements(), 512);
        assert!((cfg.beta_step() - 2.0 / 64.0).abs() < 1e-15);
        let dop = RadarConfig::new(2, 2, 16, 0).with_doppler();
        assert_eq!(dop.grid_size(), 16 * 16 * 4);
        assert_eq!(dop.mode(), GridMode::DelayDopplerAzimuth);
    }

    #[test]
    fn spacings() {
        let cfg = RadarConfig::new(4, 3, 16, 0);
        assert_eq!(cfg.tx_spacing(), 0.5);
        assert_eq!(cfg.rx_spacing(), 2.0);
        let cfg = cfg.with_spacing(SpacingMode::RxHalf);
        assert_eq!(cfg.tx_spacing(), 1.5);
        assert_eq!(cfg.rx_spacing(), 0.5);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RadarConfig::new(0, 2, 8, 0).validate().is_err());
        assert!(RadarConfig::new(2, 2, 8, 0).with_delays(9).validate().is_err());
        assert!(RadarConfig::new(2, 2, 8, 0).with_delays(0).validate().is_err());
        let mut cfg = RadarConfig::new(2, 2, 8, 0);
        cfg.n_doppler = 4;
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("n_doppler"));
        assert!(RadarConfig::new(2, 2, 8, 0).with_doppler().validate().is_ok());
    }

    #[test]
    fn index_round_trip() {
        let cfg = RadarConfig::new(2, 3, 8, 0).with_delays(5).with_doppler();
        for idx in 0..cfg.grid_size() {
            let p = cfg.split_index(idx).unwrap();
            assert_eq!(cfg.flat_index(p).unwrap(), idx);
        }
        assert!(cfg.split_index(cfg.grid_size()).is_err());
    }
}
