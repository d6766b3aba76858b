//! Operator norm, coherence, and the recovery theorem's constants.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::config::{GridMode, RadarConfig};
use crate::error::{Error, Result};
use crate::linop::LinearOperator;
use crate::operator::SensingOperator;
use crate::random::{complex_gaussian_vec, stream, Purpose};
use crate::vector::{inner, norm};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSettings {
    pub tol: f64,
    pub max_iters: usize,
    pub seed: u64,
}

impl Default for PowerSettings {
    fn default() -> Self {
        PowerSettings {
            tol: 1e-8,
            max_iters: 5000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerEstimate {
    pub value: f64,
    pub iters: usize,
}

/// `‖A‖²_op = λ_max(AᴴA)` by power iteration, stopping once the Rayleigh
/// quotient changes by less than `tol` relative.
pub fn operator_norm_sq<O: LinearOperator + ?Sized>(op: &O, settings: PowerSettings) -> Result<PowerEstimate> {
    if !(settings.tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", settings.tol)));
    }
    let mut rng = stream(settings.seed, Purpose::PowerIteration, 0);
    let mut v = complex_gaussian_vec(&mut rng, op.ncols(), 1.0);
    let n0 = norm(&v);
    v.iter_mut().for_each(|z| *z /= n0);
    let mut rho = 0.0;
    let mut change = f64::INFINITY;
    for iter in 1..=settings.max_iters {
        let w = op.apply_adjoint(&op.apply(&v)?)?;
        let next = inner(&w, &v).re;
        let wn = norm(&w);
        if wn == 0.0 {
            return Ok(PowerEstimate { value: 0.0, iters: iter });
        }
        change = (next - rho).abs() / next.abs();
        rho = next;
        v = w.into_iter().map(|z| z / wn).collect();
        if change < settings.tol {
            return Ok(PowerEstimate { value: rho, iters: iter });
        }
    }
    Err(Error::NoConvergence {
        iters: settings.max_iters,
        estimate: rho,
        residual: change,
    })
}

/// Coherence quantities of a sensing matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceReport {
    /// `max |⟨A_k, A_l⟩|` over distinct columns, unnormalized.
    pub max_inner_product: f64,
    /// `μ(A)`.
    pub coherence: f64,
    /// `μ(A D⁻¹)` evaluated on the normalized columns.
    pub coherence_normalized: f64,
    /// `max ‖A_k‖ / min ‖A_k‖`.
    pub kappa_d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisReport {
    pub op_norm_sq: f64,
    pub coherence: f64,
    pub coherence_normalized: f64,
    pub kappa_d: f64,
    pub max_inner_product: f64,
}

pub fn analyze(op: &SensingOperator, power: PowerSettings) -> Result<AnalysisReport> {
    let c = coherence(op);
    let p = operator_norm_sq(op, power)?;
    Ok(AnalysisReport {
        op_norm_sq: p.value,
        coherence: c.coherence,
        coherence_normalized: c.coherence_normalized,
        kappa_d: c.kappa_d,
        max_inner_product: c.max_inner_product,
    })
}

/// Coherence through the column factorization
/// `⟨A_{τ,f,β}, A_{τ',f',β'}⟩ = ⟨a_R(β), a_R(β')⟩ · ⟨M_f T_τ v_β, M_{f'} T_{τ'} v_{β'}⟩`.
/// The second factor depends on `(τ − τ', f − f')` only up to a phase,
/// so each azimuth pair costs one cross-correlation (and one FFT per lag
/// with Doppler) instead of a Gram matrix.
pub fn coherence(op: &SensingOperator) -> CoherenceReport {
    let cfg = op.config();
    let n = cfg.n_time;
    let nb = cfg.n_beta();
    let doppler = cfg.mode() == GridMode::DelayDopplerAzimuth;
    let lags = valid_lags(cfg.n_delay, n);
    let beta_norms: Vec<f64> = (0..nb)
        .map(|b| (cfg.n_rx as f64).sqrt() * norm(op.steered_signal(b)))
        .collect();
    let fft = FftPlanner::new().plan_fft_forward(n);

    let per_pair: Vec<(f64, f64)> = (0..nb * nb)
        .into_par_iter()
        .map(|pair| {
            let (b, bp) = (pair / nb, pair % nb);
            let rho = inner(op.rx_manifold_at(b), op.rx_manifold_at(bp)).norm();
            let v = op.steered_signal(b);
            let vp = op.steered_signal(bp);
            let scale = 1.0 / (beta_norms[b] * beta_norms[bp]);
            let mut best: f64 = 0.0;
            let mut buf = vec![Complex64::new(0.0, 0.0); n];
            for &d in &lags {
                // p(m) = v(m − d) conj(v'(m)); its sum is the lag-d correlation
                for (m, slot) in buf.iter_mut().enumerate() {
                    *slot = v[(m + n - d) % n] * vp[m].conj();
                }
                if doppler {
                    fft.process(&mut buf);
                    for (k, val) in buf.iter().enumerate() {
                        if b == bp && d == 0 && k == 0 {
                            continue;
                        }
                        best = best.max(val.norm());
                    }
                } else {
                    if b == bp && d == 0 {
                        continue;
                    }
                    best = best.max(buf.iter().sum::<Complex64>().norm());
                }
            }
            (rho * best, rho * best * scale)
        })
        .collect();

    let max_inner_product = per_pair.iter().map(|p| p.0).fold(0.0, f64::max);
    let coherence = per_pair.iter().map(|p| p.1).fold(0.0, f64::max);
    let max_norm = beta_norms.iter().cloned().fold(f64::MIN, f64::max);
    let min_norm = beta_norms.iter().cloned().fold(f64::MAX, f64::min);
    CoherenceReport {
        max_inner_product,
        coherence,
        coherence_normalized: coherence,
        kappa_d: max_norm / min_norm,
    }
}

/// Residues mod `n` of `τ − τ'` for `τ, τ' < n_delay`.
fn valid_lags(n_delay: usize, n: usize) -> Vec<usize> {
    let mut lags: Vec<usize> = (0..n_delay).chain((1..n_delay).map(|d| n - d)).collect();
    lags.sort_unstable();
    lags.dedup();
    lags
}

/// Brute-force coherence of a dense matrix through its Gram matrix. Also
/// reports `μ` of the explicitly normalized matrix and via `D⁻¹ G D⁻¹`.
pub fn dense_coherence(a: &DMatrix<Complex64>) -> CoherenceReport {
    let gram = a.adjoint() * a;
    let norms: Vec<f64> = (0..a.ncols()).map(|j| a.column(j).norm()).collect();
    let max_inner_product = max_off_diagonal(&gram);
    let max_norm = norms.iter().cloned().fold(f64::MIN, f64::max);
    let min_norm = norms.iter().cloned().fold(f64::MAX, f64::min);
    CoherenceReport {
        max_inner_product,
        coherence: coherence_from_gram(&gram, &norms),
        coherence_normalized: coherence_of_matrix(a),
        kappa_d: max_norm / min_norm,
    }
}

/// `μ(A)` by normalizing the columns first.
pub fn coherence_of_matrix(a: &DMatrix<Complex64>) -> f64 {
    let mut normalized = a.clone();
    for mut col in normalized.column_iter_mut() {
        let n = col.norm();
        col /= Complex64::new(n, 0.0);
    }
    max_off_diagonal(&(normalized.adjoint() * &normalized))
}

/// `max_{k≠l} |G_kl| / (d_k d_l)`.
pub fn coherence_from_gram(gram: &DMatrix<Complex64>, norms: &[f64]) -> f64 {
    let mut best: f64 = 0.0;
    for k in 0..gram.nrows() {
        for l in 0..gram.ncols() {
            if k != l {
                best = best.max(gram[(k, l)].norm() / (norms[k] * norms[l]));
            }
        }
    }
    best
}

fn max_off_diagonal(gram: &DMatrix<Complex64>) -> f64 {
    let mut best: f64 = 0.0;
    for k in 0..gram.nrows() {
        for l in 0..gram.ncols() {
            if k != l {
                best = best.max(gram[(k, l)].norm());
            }
        }
    }
    best
}

/// Which of the theorem's side conditions hold for a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TheoremConditions {
    pub n_time_at_least_128: bool,
    pub grid_covers_azimuth: bool,
    pub log_cubed_below_n_time: bool,
}

impl TheoremConditions {
    pub fn warnings(&self) -> Vec<&'static str> {
        let mut w = Vec::new();
        if !self.n_time_at_least_128 {
            w.push("N_t < 128: below the sample count the guarantees assume");
        }
        if !self.grid_covers_azimuth {
            w.push("delay (or Doppler) grid smaller than sqrt(N_beta)");
        }
        if !self.log_cubed_below_n_time {
            w.push("(log(N_tau N_beta))^3 > N_t: coherence guarantee does not apply");
        }
        w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundsReport {
    pub mode: GridMode,
    /// `⌊K_max⌋`.
    pub k_max: usize,
    pub k_max_real: f64,
    pub lambda_default: f64,
    pub amplitude_floor: f64,
    pub snr_min: f64,
    pub snr_min_db: f64,
    pub op_norm_bound: f64,
    pub inner_product_bound: f64,
    pub normalized_coherence_bound: f64,
    pub conditions: TheoremConditions,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundFlags {
    pub op_norm: bool,
    pub inner_product: bool,
    pub normalized_coherence: bool,
}

impl BoundsReport {
    pub fn flags(&self, report: &AnalysisReport) -> BoundFlags {
        BoundFlags {
            op_norm: report.op_norm_sq <= self.op_norm_bound,
            inner_product: report.max_inner_product <= self.inner_product_bound,
            normalized_coherence: report.coherence_normalized <= self.normalized_coherence_bound,
        }
    }
}

/// The recovery theorem's constants with natural logarithms: sparsity limit,
/// regularization weight, amplitude floor, minimum output SNR and the
/// operator-norm / coherence bounds its proof relies on. Doppler
/// configurations use the delay–Doppler–azimuth versions.
pub fn theorem_bounds(cfg: &RadarConfig, sigma: f64, c0: f64, c_snr: f64) -> BoundsReport {
    let n_tx = cfg.n_tx as f64;
    let n_rx = cfg.n_rx as f64;
    let n_t = cfg.n_time as f64;
    let n_tau = cfg.n_delay as f64;
    let n_beta = cfg.n_beta() as f64;
    let log_grid = cfg.log_grid_size();
    let mode = cfg.mode();
    let (k_max_real, op_norm_bound) = match mode {
        GridMode::DelayAzimuth => (
            c0 * n_tau * n_rx / (3.0 * n_tx * log_grid),
            n_t * n_rx * n_tx * (1.0 + n_t.ln()),
        ),
        GridMode::DelayDopplerAzimuth => {
            let n_f = cfg.n_doppler as f64;
            (
                c0 * n_tau * n_f * n_rx / (6.0 * log_grid),
                2.0 * n_t * n_f * n_rx * n_tx,
            )
        }
    };
    let lambda_default = 2.0 * sigma * (2.0 * log_grid).sqrt();
    let amplitude_floor = 10.0 * sigma / (n_rx * n_t).sqrt() * (2.0 * log_grid).sqrt();
    let snr_min = c_snr * log_grid;
    let inner_product_bound = 3.0 * n_rx * (n_t * log_grid).sqrt();
    // log(N_τ [N_f] N_R N_T) equals the grid log since N_β = N_R N_T
    let normalized_coherence_bound = 6.0 * (log_grid / n_t).sqrt();
    let coverage = match mode {
        GridMode::DelayAzimuth => n_tau,
        GridMode::DelayDopplerAzimuth => {
            let n_f = cfg.n_doppler as f64;
            n_tau.max(n_f).max((n_tau * n_f).sqrt())
        }
    };
    let conditions = TheoremConditions {
        n_time_at_least_128: cfg.n_time >= 128,
        grid_covers_azimuth: coverage >= n_beta.sqrt(),
        log_cubed_below_n_time: (n_tau * n_beta).ln().powi(3) <= n_t,
    };
    BoundsReport {
        mode,
        k_max: k_max_real.max(0.0).floor() as usize,
        k_max_real,
        lambda_default,
        amplitude_floor,
        snr_min,
        snr_min_db: 10.0 * snr_min.log10(),
        op_norm_bound,
        inner_product_bound,
        normalized_coherence_bound,
        conditions,
    }
}

/// One waveform draw in a bound-verification run.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedRow {
    pub seed: u64,
    pub report: AnalysisReport,
    pub flags: BoundFlags,
    /// `Σ_k ‖s_k‖²`.
    pub waveform_energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOutcome {
    pub bounds: BoundsReport,
    pub rows: Vec<SeedRow>,
}

impl VerifyOutcome {
    fn rate(&self, pick: impl Fn(&BoundFlags) -> bool) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().filter(|r| pick(&r.flags)).count() as f64 / self.rows.len() as f64
    }

    pub fn op_norm_rate(&self) -> f64 {
        self.rate(|f| f.op_norm)
    }

    pub fn inner_product_rate(&self) -> f64 {
        self.rate(|f| f.inner_product)
    }

    pub fn normalized_coherence_rate(&self) -> f64 {
        self.rate(|f| f.normalized_coherence)
    }
}

/// Draws `n_seeds` waveform sets (seeds `cfg.seed`, `cfg.seed + 1`, ...)
/// and compares the empirical norm and coherence against the bounds.
pub fn verify_bounds(
    cfg: &RadarConfig,
    n_seeds: usize,
    c0: f64,
    c_snr: f64,
    power: PowerSettings,
) -> Result<VerifyOutcome> {
    cfg.validate()?;
    let bounds = theorem_bounds(cfg, 1.0, c0, c_snr);
    let rows = (0..n_seeds as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let op = SensingOperator::new(&cfg.clone().with_seed(seed))?;
            let report = analyze(&op, PowerSettings { seed, ..power })?;
            Ok(SeedRow {
                seed,
                flags: bounds.flags(&report),
                report,
                waveform_energy: op.waveforms().total_energy(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VerifyOutcome { bounds, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SpacingMode;
    use crate::linop::{dense_from_columns, Normalized};
    use crate::structure::doppler_gram_scale;

    #[test]
    fn theorem_constants_at_reference_configuration() {
        let cfg = RadarConfig::new(8, 8, 64, 0);
        let b = theorem_bounds(&cfg, 1.0, 1.0, 1.0);
        // 512 / (24 ln 4096)
        assert!((b.k_max_real - 2.564791183802602).abs() < 1e-12);
        assert_eq!(b.k_max, 2);
        assert!((b.lambda_default - 8.157335921350471).abs() < 1e-12);
        assert!((b.amplitude_floor - 1.8025336082511034).abs() < 1e-12);
        assert!((b.snr_min - 4096f64.ln()).abs() < 1e-12);
        assert!(!b.conditions.n_time_at_least_128);
        assert!(b.conditions.grid_covers_azimuth);
        assert!(!b.conditions.log_cubed_below_n_time);
        assert_eq!(b.conditions.warnings().len(), 2);
    }

    #[test]
    fn doppler_constants() {
        let cfg = RadarConfig::new(4, 4, 32, 0).with_doppler();
        let b = theorem_bounds(&cfg, 2.0, 1.0, 1.0);
        let lg = (32.0f64 * 32.0 * 16.0).ln();
        assert!((b.k_max_real - 32.0 * 32.0 * 4.0 / (6.0 * lg)).abs() < 1e-12);
        assert!((b.lambda_default - 4.0 * (2.0 * lg).sqrt()).abs() < 1e-12);
        assert!((b.op_norm_bound - 2.0 * 32.0 * 32.0 * 16.0).abs() < 1e-9);
        assert!((b.inner_product_bound - 12.0 * (32.0 * lg).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn power_iteration_matches_dense_svd() {
        let cfg = RadarConfig::new(2, 2, 8, 3);
        let op = SensingOperator::new(&cfg).unwrap();
        let dense = op.to_dense().unwrap();
        let smax = dense.clone().svd(false, false).singular_values.max();
        let est = operator_norm_sq(&op, PowerSettings { tol: 1e-14, max_iters: 100_000, seed: 1 }).unwrap();
        assert!((est.value - smax * smax).abs() / (smax * smax) < 1e-8, "{} vs {}", est.value, smax * smax);
    }

    #[test]
    fn power_iteration_matches_circulant_spectrum() {
        // without Doppler and with N_τ = N_t, A Aᴴ has N_R copies of a
        // circulant block whose eigenvalues are N_T N_R Σ_k |ŝ_k(ω)|²
        let cfg = RadarConfig::new(3, 2, 16, 9);
        let op = SensingOperator::new(&cfg).unwrap();
        let mut best: f64 = 0.0;
        for w in 0..16 {
            let mut total = 0.0;
            for k in 0..3 {
                let s = op.waveforms().signal(k);
                let mut acc = Complex64::new(0.0, 0.0);
                for (l, v) in s.iter().enumerate() {
                    acc += v * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * (w * l) as f64 / 16.0);
                }
                total += acc.norm_sqr();
            }
            best = best.max(6.0 * total);
        }
        let est = operator_norm_sq(&op, PowerSettings { tol: 1e-14, max_iters: 100_000, seed: 2 }).unwrap();
        assert!((est.value - best).abs() / best < 1e-8, "{} vs {best}", est.value);
    }

    #[test]
    fn doppler_power_iteration_is_immediate() {
        let cfg = RadarConfig::new(2, 2, 16, 5).with_doppler();
        let op = SensingOperator::new(&cfg).unwrap();
        let c = doppler_gram_scale(&op);
        let est = operator_norm_sq(&op, PowerSettings::default()).unwrap();
        assert!((est.value - c).abs() / c < 1e-8);
        assert!(est.iters <= 3, "iters {}", est.iters);
    }

    #[test]
    fn rank_one_operator() {
        let cfg = RadarConfig::new(1, 1, 8, 4).with_delays(1);
        let op = SensingOperator::new(&cfg).unwrap();
        assert_eq!(op.ncols(), 1);
        let energy = op.waveforms().total_energy();
        let est = operator_norm_sq(&op, PowerSettings::default()).unwrap();
        assert!((est.value - energy).abs() / energy < 1e-10);
    }

    #[test]
    fn power_iteration_errors() {
        let m = DMatrix::<Complex64>::identity(3, 3);
        assert!(operator_norm_sq(&m, PowerSettings { tol: 0.0, ..Default::default() }).is_err());
        let mut m = DMatrix::<Complex64>::identity(3, 3);
        m[(1, 1)] = Complex64::new(0.999_999, 0.0);
        let err = operator_norm_sq(&m, PowerSettings { tol: 1e-15, max_iters: 3, seed: 0 }).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iters: 3, .. }));
    }

    #[test]
    fn norm_monotone_under_added_columns() {
        let cfg = RadarConfig::new(2, 2, 16, 6);
        let op = SensingOperator::new(&cfg).unwrap();
        let dense = op.to_dense().unwrap();
        let mut prev = 0.0;
        for cols in [1, 4, 9, 20, 40, 64] {
            let sub = dense.columns(0, cols).into_owned();
            let s = sub.clone().svd(false, false).singular_values.max().powi(2);
            let est = operator_norm_sq(&sub, PowerSettings { tol: 1e-13, max_iters: 100_000, seed: 0 }).unwrap();
            assert!((est.value - s).abs() <= 1e-7 * s);
            assert!(est.value >= prev * (1.0 - 1e-9));
            prev = est.value;
        }
    }

    #[test]
    fn coherence_of_special_matrices() {
        let mut m = DMatrix::<Complex64>::from_fn(4, 3, |i, j| Complex64::new((i * 3 + j) as f64 + 1.0, 0.5));
        let c0 = m.column(0).into_owned();
        m.set_column(2, &(c0 * Complex64::new(0.0, 2.0)));
        assert!((coherence_of_matrix(&m) - 1.0).abs() < 1e-12);

        // unitary: the 4-point DFT
        let f = DMatrix::<Complex64>::from_fn(4, 4, |i, j| {
            Complex64::from_polar(0.5, -2.0 * std::f64::consts::PI * (i * j) as f64 / 4.0)
        });
        assert!(coherence_of_matrix(&f) < 1e-12);
        assert!(dense_coherence(&f).coherence < 1e-12);
    }

    #[test]
    fn factorized_coherence_matches_brute_force() {
        for cfg in [
            RadarConfig::new(2, 2, 8, 31),
            RadarConfig::new(2, 2, 8, 32).with_spacing(SpacingMode::RxHalf),
            RadarConfig::new(3, 2, 8, 33).with_delays(3),
            RadarConfig::new(2, 2, 8, 34).with_doppler(),
            RadarConfig::new(2, 3, 6, 35).with_doppler().with_delays(4),
        ] {
            let op = SensingOperator::new(&cfg).unwrap();
            let fast = coherence(&op);
            let brute = dense_coherence(&op.to_dense().unwrap());
            let rel = |a: f64, b: f64| (a - b).abs() / b;
            assert!(rel(fast.max_inner_product, brute.max_inner_product) < 1e-10, "{cfg:?}");
            assert!(rel(fast.coherence, brute.coherence) < 1e-10, "{cfg:?}");
            assert!(rel(fast.kappa_d, brute.kappa_d) < 1e-12, "{cfg:?}");
            assert!((brute.coherence - brute.coherence_normalized).abs() < 1e-12);
            assert!(brute.coherence <= 1.0 && brute.kappa_d >= 1.0);
        }
    }

    #[test]
    fn normalized_coherence_two_routes() {
        let cfg = RadarConfig::new(2, 2, 8, 40);
        let op = SensingOperator::new(&cfg).unwrap();
        let scaling = op.column_norms();
        let tilde = Normalized::new(&op, &scaling.norms).unwrap();
        let tilde_dense = dense_from_columns(&tilde).unwrap();
        let a = op.to_dense().unwrap();
        let via_normalization = coherence_of_matrix(&tilde_dense);
        let via_gram = coherence_from_gram(&(a.adjoint() * &a), &scaling.norms);
        assert!((via_normalization - via_gram).abs() < 1e-12);
        for j in 0..tilde_dense.ncols() {
            assert!((tilde_dense.column(j).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn verify_rows_are_pure_comparisons() {
        let cfg = RadarConfig::new(2, 2, 16, 100);
        let out = verify_bounds(&cfg, 4, 1.0, 1.0, PowerSettings::default()).unwrap();
        assert_eq!(out.rows.len(), 4);
        for (i, row) in out.rows.iter().enumerate() {
            assert_eq!(row.seed, 100 + i as u64);
            assert_eq!(row.flags.op_norm, row.report.op_norm_sq <= out.bounds.op_norm_bound);
            assert_eq!(
                row.flags.inner_product,
                row.report.max_inner_product <= out.bounds.inner_product_bound
            );
        }
    }

    #[test]
    fn doppler_norm_bound_rate() {
        let cfg = RadarConfig::new(4, 4, 32, 500).with_doppler();
        let out = verify_bounds(&cfg, 50, 1.0, 1.0, PowerSettings::default()).unwrap();
        for row in &out.rows {
            if row.waveform_energy <= 2.0 * cfg.n_time as f64 {
                assert!(row.flags.op_norm, "seed {}", row.seed);
            }
        }
        assert!(out.op_norm_rate() >= 0.95);
    }
}
