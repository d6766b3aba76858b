//! Uniform linear array manifolds.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::config::RadarConfig;

fn ula(n: usize, spacing: f64, beta: f64) -> Vec<Complex64> {
    (0..n)
        .map(|k| Complex64::from_polar(1.0, 2.0 * PI * spacing * beta * k as f64))
        .collect()
}

/// Transmit manifold `a_T(β)`, entry `k` equal to `exp(j 2π d_T β k)`.
pub fn tx_manifold(cfg: &RadarConfig, beta: f64) -> Vec<Complex64> {
    ula(cfg.n_tx, cfg.tx_spacing(), beta)
}

/// Receive manifold `a_R(β)`, entry `k` equal to `exp(j 2π d_R β k)`.
pub fn rx_manifold(cfg: &RadarConfig, beta: f64) -> Vec<Complex64> {
    ula(cfg.n_rx, cfg.rx_spacing(), beta)
}

/// Virtual-array manifold `a_T(β) ⊗ a_R(β)`.
pub fn virtual_manifold(cfg: &RadarConfig, beta: f64) -> Vec<Complex64> {
    crate::vector::kron(&tx_manifold(cfg, beta), &rx_manifold(cfg, beta))
}
