//! Monte-Carlo detection experiments: planted scenes, noisy measurements,
//! debiased-lasso recovery and ROC accounting.

use rayon::prelude::*;

use crate::config::RadarConfig;
use crate::error::{Error, Result};
use crate::linop::{LinearOperator, Normalized};
use crate::operator::SensingOperator;
use crate::random::{complex_gaussian_vec, stream, Purpose};
use crate::recovery::{KktReport, Recoverer, RecoveryOptions, RecoveryResult};
use crate::scene::{draw_scene_with, sigma_from_snr, Scene};
use crate::spectral::{operator_norm_sq, PowerSettings};
use crate::vector::{dist, norm};

/// Shared state of one experiment: a single waveform draw (from the
/// configuration's seed) and everything precomputed from it.
#[derive(Debug)]
pub struct Experiment {
    op: SensingOperator,
    options: RecoveryOptions,
    norms: Vec<f64>,
    lipschitz: f64,
    /// Unit of the planted scatterer moduli.
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: u64,
    pub k: usize,
    pub snr_db: f64,
    pub sigma: f64,
    pub planted: Scene,
    pub estimate: RecoveryResult,
    /// `|debiased|` at the planted cells, in support order.
    pub values_on_support: Vec<f64>,
    /// `|debiased|` at every other cell, in grid order.
    pub values_off_support: Vec<f64>,
    pub y_norm: f64,
}

impl TrialOutcome {
    pub fn exact_support(&self) -> bool {
        self.estimate.support == self.planted.support
    }

    /// `‖x̃ − x‖ / ‖x‖` for the debiased estimate.
    pub fn relative_error(&self) -> f64 {
        let x = self.planted.to_dense();
        dist(&self.estimate.debiased_estimate, &x) / norm(&x)
    }

    /// `σ √(12 N_t N_R) / ‖y‖`, the recovery error guarantee.
    pub fn error_bound(&self, cfg: &RadarConfig) -> f64 {
        self.sigma * (12.0 * cfg.n_measurements() as f64).sqrt() / self.y_norm
    }

    pub fn summary(&self, cfg: &RadarConfig) -> TrialSummary {
        TrialSummary {
            trial: self.trial,
            exact_support: self.exact_support(),
            relative_error: self.relative_error(),
            error_bound: self.error_bound(cfg),
            kkt: self.estimate.kkt,
            converged: self.estimate.converged,
            iters: self.estimate.iters,
            rank_deficient: self.estimate.rank_deficient,
        }
    }
}

/// What a ROC sweep keeps of each trial besides its detection counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialSummary {
    pub trial: u64,
    pub exact_support: bool,
    pub relative_error: f64,
    pub error_bound: f64,
    pub kkt: KktReport,
    pub converged: bool,
    pub iters: usize,
    pub rank_deficient: bool,
}

impl TrialSummary {
    pub fn within_error_bound(&self) -> bool {
        self.relative_error <= self.error_bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub snr_db: f64,
    pub k: usize,
    pub trials: usize,
    /// Strictly descending.
    pub thresholds: Vec<f64>,
    pub pd: Vec<f64>,
    /// False alarms per trial divided by `K`.
    pub pfa: Vec<f64>,
    /// False alarms per trial divided by the number of empty cells.
    pub pfa_per_cell: Vec<f64>,
    pub summaries: Vec<TrialSummary>,
}

impl Experiment {
    pub fn new(cfg: &RadarConfig, options: RecoveryOptions) -> Result<Self> {
        let op = SensingOperator::new(cfg)?;
        let norms = op.column_norms().norms;
        let power = PowerSettings {
            seed: cfg.seed,
            ..PowerSettings::default()
        };
        let l = if options.normalize {
            operator_norm_sq(&Normalized::new(&op, &norms)?, power)?.value
        } else {
            operator_norm_sq(&op, power)?.value
        };
        Ok(Experiment {
            op,
            options,
            norms,
            lipschitz: 1.01 * l,
            amplitude: 1.0,
        })
    }

    pub fn config(&self) -> &RadarConfig {
        self.op.config()
    }

    pub fn operator(&self) -> &SensingOperator {
        &self.op
    }

    fn recoverer(&self) -> Result<Recoverer<'_>> {
        Recoverer::from_parts(&self.op, self.options, self.norms.clone(), self.lipschitz)
    }

    /// One trial. The scene and the unit-variance noise depend only on the
    /// master seed, `k` and `trial`; `snr_db` only scales the noise, so
    /// sweeps over SNR compare like with like.
    pub fn run_trial(&self, k: usize, snr_db: f64, trial: u64) -> Result<TrialOutcome> {
        let cfg = self.op.config();
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let id = ((k as u64) << 32) | (trial & 0xffff_ffff);
        let mut scene_rng = stream(cfg.seed, Purpose::Scene, id);
        let planted = draw_scene_with(&mut scene_rng, cfg.grid_size(), k, self.amplitude)?;
        let sigma = sigma_from_snr(cfg, snr_db, self.amplitude);
        let mut noise_rng = stream(cfg.seed, Purpose::Noise, id);
        let noise = complex_gaussian_vec(&mut noise_rng, cfg.n_measurements(), 1.0);
        let mut y = self.op.apply(&planted.to_dense())?;
        for (v, n) in y.iter_mut().zip(&noise) {
            *v += n * sigma;
        }
        let estimate = self.recoverer()?.recover(&y, sigma)?;
        let magnitudes: Vec<f64> = estimate.debiased_estimate.iter().map(|v| v.norm()).collect();
        let values_on_support = planted.support.iter().map(|&i| magnitudes[i]).collect();
        let mut on = planted.support.iter().peekable();
        let mut values_off_support = Vec::with_capacity(cfg.grid_size() - k);
        for (i, &m) in magnitudes.iter().enumerate() {
            if on.peek() == Some(&&i) {
                on.next();
            } else {
                values_off_support.push(m);
            }
        }
        Ok(TrialOutcome {
            trial,
            k,
            snr_db,
            sigma,
            planted,
            estimate,
            values_on_support,
            values_off_support,
            y_norm: norm(&y),
        })
    }

    /// Runs `trials` trials (indices `0..trials`, in parallel) and counts
    /// detections and false alarms at every threshold.
    pub fn roc_sweep(&self, k: usize, snr_db: f64, trials: usize, thresholds: &[f64]) -> Result<RocCurve> {
        if trials == 0 {
            return Err(Error::InvalidArgument("at least one trial is required".into()));
        }
        check_descending(thresholds)?;
        let cfg = self.op.config();
        let per_trial = (0..trials as u64)
            .into_par_iter()
            .map(|t| {
                let outcome = self.run_trial(k, snr_db, t)?;
                let counts: Vec<(usize, usize)> = thresholds
                    .iter()
                    .map(|&th| {
                        (
                            outcome.values_on_support.iter().filter(|&&v| v > th).count(),
                            outcome.values_off_support.iter().filter(|&&v| v > th).count(),
                        )
                    })
                    .collect();
                Ok((counts, outcome.summary(cfg)))
            })
            .collect::<Result<Vec<_>>>()?;

        let empty_cells = (cfg.grid_size() - k) as f64;
        let n = trials as f64;
        let mut pd = vec![0.0; thresholds.len()];
        let mut pfa = vec![0.0; thresholds.len()];
        let mut pfa_per_cell = vec![0.0; thresholds.len()];
        // accumulate in trial order so the result does not depend on scheduling
        for (counts, _) in &per_trial {
            for (i, &(det, fa)) in counts.iter().enumerate() {
                pd[i] += det as f64 / k as f64;
                pfa[i] += fa as f64 / k as f64;
                pfa_per_cell[i] += fa as f64 / empty_cells;
            }
        }
        for v in pd.iter_mut().chain(pfa.iter_mut()).chain(pfa_per_cell.iter_mut()) {
            *v /= n;
        }
        Ok(RocCurve {
            snr_db,
            k,
            trials,
            thresholds: thresholds.to_vec(),
            pd,
            pfa,
            pfa_per_cell,
            summaries: per_trial.into_iter().map(|(_, s)| s).collect(),
        })
    }
}

fn check_descending(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::InvalidArgument("threshold list is empty".into()));
    }
    if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("thresholds must be finite and strictly descending".into()));
    }
    Ok(())
}

/// `count` log-spaced thresholds from `2·amplitude` down to `1e-3·amplitude`.
pub fn default_thresholds(amplitude: f64, count: usize) -> Vec<f64> {
    log_thresholds(2.0 * amplitude, 1e-3 * amplitude, count)
}

pub fn log_thresholds(high: f64, low: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![high];
    }
    let (lh, ll) = (high.ln(), low.ln());
    (0..count)
        .map(|i| (lh + (ll - lh) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Best detection probability among thresholds whose (per-`K`) false-alarm
/// rate does not exceed `target`; zero if none does.
pub fn pd_at_pfa(curve: &RocCurve, target: f64) -> f64 {
    curve
        .pd
        .iter()
        .zip(&curve.pfa)
        .filter(|(_, &fa)| fa <= target)
        .map(|(&d, _)| d)
        .fold(0.0, f64::max)
}

/// One row of the long-form ROC table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocRow {
    pub snr_db: f64,
    pub k: usize,
    pub threshold: f64,
    pub pd: f64,
    pub pfa: f64,
    pub pfa_per_cell: f64,
}

pub fn aggregate(curves: &[RocCurve]) -> Result<Vec<RocRow>> {
    if curves.is_empty() {
        return Err(Error::InvalidArgument("no curves to aggregate".into()));
    }
    Ok(curves
        .iter()
        .flat_map(|c| {
            (0..c.thresholds.len()).map(move |i| RocRow {
                snr_db: c.snr_db,
                k: c.k,
                threshold: c.thresholds[i],
                pd: c.pd[i],
                pfa: c.pfa[i],
                pfa_per_cell: c.pfa_per_cell[i],
            })
        })
        .collect())
}
