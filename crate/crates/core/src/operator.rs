//! The compressive MIMO sensing matrix.
//!
//! Column `(τ, f, β)` is `a_R(β) ⊗ (M_f T_τ S a_T(β))`: receive antenna is
//! the outer index of the measurement vector, time the inner one. Products
//! are evaluated without forming the matrix. For a fixed azimuth the sum
//! over delays is a circular convolution with the steered signal
//! `S a_T(β)`, and a Doppler bin is a cyclic shift of its spectrum, so one
//! length-`N_t` FFT per `(β, f)` slice does the work.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::config::{GridMode, RadarConfig};
use crate::error::{Error, Result};
use crate::linop::{check_len, LinearOperator};
use crate::manifold::{rx_manifold, tx_manifold};
use crate::vector::{circshift, norm_sqr};
use crate::waveform::{gen_waveforms, WaveformSet};

/// Default ceiling for dense materialization: 2 GiB.
pub const DEFAULT_DENSE_BUDGET: usize = 2 << 30;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

pub struct SensingOperator {
    cfg: RadarConfig,
    waveforms: WaveformSet,
    /// `a_R(β_n)` per azimuth.
    rx: Vec<Vec<Complex64>>,
    /// `S a_T(β_n)` per azimuth.
    steered: Vec<Vec<Complex64>>,
    /// DFT of `steered`.
    spectra: Vec<Vec<Complex64>>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SensingOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SensingOperator")
            .field("cfg", &self.cfg)
            .field("rows", &self.nrows())
            .field("cols", &self.ncols())
            .finish()
    }
}

/// Per-column Euclidean norms, the diagonal of `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnScaling {
    pub norms: Vec<f64>,
}

impl ColumnScaling {
    /// Condition number of `D`, `max / min`.
    pub fn kappa(&self) -> f64 {
        let max = self.norms.iter().cloned().fold(f64::MIN, f64::max);
        let min = self.norms.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    }
}

impl SensingOperator {
    /// Draws waveforms from `cfg.seed` and builds the operator.
    pub fn new(cfg: &RadarConfig) -> Result<Self> {
        cfg.validate()?;
        Self::with_waveforms(cfg, gen_waveforms(cfg))
    }

    pub fn with_waveforms(cfg: &RadarConfig, waveforms: WaveformSet) -> Result<Self> {
        cfg.validate()?;
        if waveforms.n_time() != cfg.n_time || waveforms.n_tx() != cfg.n_tx {
            return Err(Error::InvalidArgument(format!(
                "waveforms are {}x{}, configuration needs {}x{}",
                waveforms.n_time(),
                waveforms.n_tx(),
                cfg.n_time,
                cfg.n_tx
            )));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(cfg.n_time);
        let ifft = planner.plan_fft_inverse(cfg.n_time);
        let mut rx = Vec::with_capacity(cfg.n_beta());
        let mut steered = Vec::with_capacity(cfg.n_beta());
        let mut spectra = Vec::with_capacity(cfg.n_beta());
        for n in 0..cfg.n_beta() {
            let beta = cfg.beta(n);
            rx.push(rx_manifold(cfg, beta));
            let v = waveforms.steer(&tx_manifold(cfg, beta));
            let mut spec = v.clone();
            fft.process(&mut spec);
            steered.push(v);
            spectra.push(spec);
        }
        Ok(SensingOperator {
            cfg: cfg.clone(),
            waveforms,
            rx,
            steered,
            spectra,
            fft,
            ifft,
        })
    }

    pub fn config(&self) -> &RadarConfig {
        &self.cfg
    }

    pub fn waveforms(&self) -> &WaveformSet {
        &self.waveforms
    }

    pub fn mode(&self) -> GridMode {
        self.cfg.mode()
    }

    pub fn rx_manifold_at(&self, beta_index: usize) -> &[Complex64] {
        &self.rx[beta_index]
    }

    /// `S a_T(β_n)`.
    pub fn steered_signal(&self, beta_index: usize) -> &[Complex64] {
        &self.steered[beta_index]
    }

    /// `M_f T_τ S a_T(β)`, the time-domain factor of column `(τ, f, β)`.
    pub fn time_factor(&self, delay: usize, doppler: usize, beta_index: usize) -> Vec<Complex64> {
        let n = self.cfg.n_time;
        let mut u = circshift(&self.steered[beta_index], delay);
        if doppler != 0 {
            for (l, v) in u.iter_mut().enumerate() {
                *v *= modulation(doppler, l, n);
            }
        }
        u
    }

    /// Exact column for a flat grid index.
    pub fn grid_column(&self, idx: usize) -> Result<Vec<Complex64>> {
        let p = self.cfg.split_index(idx)?;
        let u = self.time_factor(p.delay, p.doppler, p.beta);
        Ok(crate::vector::kron(&self.rx[p.beta], &u))
    }

    pub fn column_norms(&self) -> ColumnScaling {
        let n_rx = self.cfg.n_rx as f64;
        let per_beta: Vec<f64> = self.steered.iter().map(|v| (n_rx * norm_sqr(v)).sqrt()).collect();
        let per_slice = self.cfg.n_delay * self.cfg.n_doppler_bins();
        let norms = per_beta
            .iter()
            .flat_map(|&d| std::iter::repeat_n(d, per_slice))
            .collect();
        ColumnScaling { norms }
    }

    pub fn dense_bytes(&self) -> usize {
        self.nrows()
            .saturating_mul(self.ncols())
            .saturating_mul(std::mem::size_of::<Complex64>())
    }

    pub fn to_dense(&self) -> Result<DMatrix<Complex64>> {
        self.to_dense_within(DEFAULT_DENSE_BUDGET)
    }

    pub fn to_dense_within(&self, budget: usize) -> Result<DMatrix<Complex64>> {
        let bytes = self.dense_bytes();
        if bytes > budget {
            return Err(Error::BudgetExceeded {
                rows: self.nrows(),
                cols: self.ncols(),
                bytes,
                budget,
            });
        }
        let mut m = DMatrix::zeros(self.nrows(), self.ncols());
        for j in 0..self.ncols() {
            let c = self.grid_column(j)?;
            m.column_mut(j).copy_from_slice(&c);
        }
        Ok(m)
    }

    fn fft_in_place(&self, buf: &mut [Complex64]) {
        self.fft.process(buf);
    }

    fn ifft_in_place(&self, buf: &mut [Complex64]) {
        self.ifft.process(buf);
        let scale = 1.0 / buf.len() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }
}

fn modulation(doppler: usize, l: usize, n: usize) -> Complex64 {
    // e^{j 2π f l / N_t}; reduce the product first to keep the phase small
    let phase = ((doppler * l) % n) as f64 / n as f64;
    Complex64::from_polar(1.0, 2.0 * PI * phase)
}

impl LinearOperator for SensingOperator {
    fn nrows(&self) -> usize {
        self.cfg.n_measurements()
    }

    fn ncols(&self) -> usize {
        self.cfg.grid_size()
    }

    fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.ncols(), x.len())?;
        let n = self.cfg.n_time;
        let n_delay = self.cfg.n_delay;
        let n_f = self.cfg.n_doppler_bins();
        let mut out_spec = vec![ZERO; self.cfg.n_rx * n];
        let mut w = vec![ZERO; n];
        let mut buf = vec![ZERO; n];
        for (b, slices) in x.chunks(n_delay * n_f).enumerate() {
            if slices.iter().all(|v| *v == ZERO) {
                continue;
            }
            w.fill(ZERO);
            for (f, slice) in slices.chunks(n_delay).enumerate() {
                if slice.iter().all(|v| *v == ZERO) {
                    continue;
                }
                buf[..n_delay].copy_from_slice(slice);
                buf[n_delay..].fill(ZERO);
                self.fft_in_place(&mut buf);
                // modulation by f bins shifts the spectrum by f
                for (k, (xk, vk)) in buf.iter().zip(&self.spectra[b]).enumerate() {
                    w[(k + f) % n] += xk * vk;
                }
            }
            for (i, a) in self.rx[b].iter().enumerate() {
                for (o, wk) in out_spec[i * n..(i + 1) * n].iter_mut().zip(&w) {
                    *o += a * wk;
                }
            }
        }
        for chunk in out_spec.chunks_mut(n) {
            self.ifft_in_place(chunk);
        }
        Ok(out_spec)
    }

    fn apply_adjoint(&self, y: &[Complex64]) -> Result<Vec<Complex64>> {
        check_len(self.nrows(), y.len())?;
        let n = self.cfg.n_time;
        let n_delay = self.cfg.n_delay;
        let n_f = self.cfg.n_doppler_bins();
        let mut y_spec = y.to_vec();
        for chunk in y_spec.chunks_mut(n) {
            self.fft_in_place(chunk);
        }
        let mut out = vec![ZERO; self.ncols()];
        let mut r = vec![ZERO; n];
        let mut buf = vec![ZERO; n];
        for (b, slices) in out.chunks_mut(n_delay * n_f).enumerate() {
            r.fill(ZERO);
            for (i, a) in self.rx[b].iter().enumerate() {
                let ac = a.conj();
                for (rk, yk) in r.iter_mut().zip(&y_spec[i * n..(i + 1) * n]) {
                    *rk += ac * yk;
                }
            }
            for (f, slice) in slices.chunks_mut(n_delay).enumerate() {
                for (k, (bk, vk)) in buf.iter_mut().zip(&self.spectra[b]).enumerate() {
                    *bk = r[(k + f) % n] * vk.conj();
                }
                self.ifft_in_place(&mut buf);
                slice.copy_from_slice(&buf[..n_delay]);
            }
        }
        Ok(out)
    }

    fn column(&self, j: usize) -> Result<Vec<Complex64>> {
        self.grid_column(j)
    }
}
