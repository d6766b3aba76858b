use std::fs;
use std::io::Write;
use std::path::Path;

use cmimo::experiment::{aggregate, pd_at_pfa, Experiment, RocCurve};
use cmimo::spectral::{verify_bounds, PowerSettings, VerifyOutcome};
use cmimo::structure::{doppler_gram_scale, identity_suite, IdentityCheck};
use cmimo::{GridMode, RadarConfig, SensingOperator};

use crate::config::ExperimentConfig;
use crate::error::{CliError, CliResult};
use crate::plot::roc_svg;

/// Largest dense sensing matrix `validate` will build before falling back
/// to a small instance of the same kind.
pub const VALIDATE_BUDGET: usize = 64 << 20;

pub const PFA_OPERATING_POINT: f64 = 0.1;

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}", dir.display()), e))
}

fn say(out: &mut (dyn Write + Send), line: std::fmt::Arguments<'_>) -> CliResult<()> {
    out.write_fmt(line)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| CliError::io("cannot write to stdout", e))
}

#[derive(Debug, Clone)]
pub struct ValidateReport {
    pub config: RadarConfig,
    /// The requested dimensions were too large to materialize.
    pub fallback: bool,
    pub checks: Vec<IdentityCheck>,
    /// `N_T N_R N_f Σ‖s_k‖²` when Doppler is on.
    pub doppler_scale: Option<f64>,
}

impl ValidateReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed != Some(false))
    }
}

pub fn cmd_validate(cfg: &ExperimentConfig, out_dir: &Path, stdout: &mut (dyn Write + Send)) -> CliResult<ValidateReport> {
    let requested = cfg.radar();
    let op = SensingOperator::new(&requested)?;
    let (op, fallback) = if op.dense_bytes() <= VALIDATE_BUDGET {
        (op, false)
    } else {
        let mut small = RadarConfig::new(2, 2, 16, requested.seed).with_spacing(requested.spacing);
        if requested.mode() == GridMode::DelayDopplerAzimuth {
            small = small.with_doppler();
        }
        (SensingOperator::new(&small)?, true)
    };
    let radar = op.config().clone();
    if fallback {
        say(
            stdout,
            format_args!(
                "dense form of ({}, {}, {}, {}) exceeds {} MiB; validating ({}, {}, {}, {}) instead",
                requested.n_tx,
                requested.n_rx,
                requested.n_time,
                requested.n_delay,
                VALIDATE_BUDGET >> 20,
                radar.n_tx,
                radar.n_rx,
                radar.n_time,
                radar.n_delay
            ),
        )?;
    }
    let checks = identity_suite(&op, VALIDATE_BUDGET, radar.seed)?;
    let doppler_scale = (radar.mode() == GridMode::DelayDopplerAzimuth).then(|| doppler_gram_scale(&op));

    ensure_dir(out_dir)?;
    let path = out_dir.join("validate.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["check", "value", "tolerance", "status", "note"])?;
    for c in &checks {
        let status = match c.passed {
            Some(true) => "pass",
            Some(false) => "fail",
            None => "skipped",
        };
        w.write_record([c.name.to_string(), c.value.to_string(), c.tolerance.to_string(), status.into(), c.note.clone()])?;
        say(stdout, format_args!("{:<8} {:<34} {:>12.3e}  {}", status.to_uppercase(), c.name, c.value, c.note))?;
    }
    w.flush().map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
    if let Some(c) = doppler_scale {
        say(stdout, format_args!("Doppler Gram scale c = N_T N_R N_f sum_k |s_k|^2 = {c}"))?;
    }
    Ok(ValidateReport {
        config: radar,
        fallback,
        checks,
        doppler_scale,
    })
}

pub fn cmd_bounds(cfg: &ExperimentConfig, out_dir: &Path, stdout: &mut (dyn Write + Send)) -> CliResult<VerifyOutcome> {
    let radar = cfg.radar();
    let mut outcome = verify_bounds(&radar, cfg.bound_seeds, cfg.c0, cfg.c_snr, PowerSettings::default())?;
    // the per-seed check uses unit noise; the footer reports λ and the
    // floor at the configured σ
    let at_sigma = cmimo::spectral::theorem_bounds(&radar, cfg.sigma, cfg.c0, cfg.c_snr);
    outcome.bounds.lambda_default = at_sigma.lambda_default;
    outcome.bounds.amplitude_floor = at_sigma.amplitude_floor;

    ensure_dir(out_dir)?;
    let path = out_dir.join("bounds.csv");
    write_bounds_csv(&outcome, &path)?;
    let b = &outcome.bounds;
    say(
        stdout,
        format_args!(
            "K_max = {} ({:.4}), lambda = {:.6}, amplitude floor = {:.6}, SNR_min = {:.3} dB",
            b.k_max, b.k_max_real, b.lambda_default, b.amplitude_floor, b.snr_min_db
        ),
    )?;
    say(
        stdout,
        format_args!(
            "{} seeds: operator norm bound held in {:.1}%, inner product bound in {:.1}%, normalized coherence bound in {:.1}%",
            outcome.rows.len(),
            100.0 * outcome.op_norm_rate(),
            100.0 * outcome.inner_product_rate(),
            100.0 * outcome.normalized_coherence_rate()
        ),
    )?;
    for w in b.conditions.warnings() {
        say(stdout, format_args!("warning: {w}"))?;
    }
    say(stdout, format_args!("wrote {}", path.display()))?;
    Ok(outcome)
}

pub const BOUNDS_HEADER: [&str; 9] = [
    "seed",
    "op_norm_sq",
    "op_norm_bound",
    "max_inner_product",
    "inner_product_bound",
    "coherence_normalized",
    "normalized_bound",
    "op_norm_ok",
    "inner_product_ok",
];

fn write_bounds_csv(outcome: &VerifyOutcome, path: &Path) -> CliResult<()> {
    let b = &outcome.bounds;
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(BOUNDS_HEADER)?;
    for r in &outcome.rows {
        w.write_record([
            r.seed.to_string(),
            r.report.op_norm_sq.to_string(),
            b.op_norm_bound.to_string(),
            r.report.max_inner_product.to_string(),
            b.inner_product_bound.to_string(),
            r.report.coherence_normalized.to_string(),
            b.normalized_coherence_bound.to_string(),
            r.flags.op_norm.to_string(),
            r.flags.inner_product.to_string(),
        ])?;
    }
    w.write_record([
        "summary".to_string(),
        format!("k_max={}", b.k_max),
        format!("lambda={}", b.lambda_default),
        format!("amplitude_floor={}", b.amplitude_floor),
        format!("snr_min_db={}", b.snr_min_db),
        format!("op_norm_rate={}", outcome.op_norm_rate()),
        format!("inner_product_rate={}", outcome.inner_product_rate()),
        format!("normalized_rate={}", outcome.normalized_coherence_rate()),
        String::new(),
    ])?;
    w.flush().map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))
}

#[derive(Debug, Clone)]
pub struct RocReport {
    pub curves: Vec<RocCurve>,
    pub csv_path: std::path::PathBuf,
    pub plots: Vec<std::path::PathBuf>,
}

pub const ROC_HEADER: [&str; 6] = ["snr_db", "k", "threshold", "pd", "pfa", "pfa_per_cell"];

pub fn cmd_roc(cfg: &ExperimentConfig, out_dir: &Path, plot: bool, stdout: &mut (dyn Write + Send)) -> CliResult<RocReport> {
    let radar = cfg.radar();
    let thresholds = cfg.thresholds.resolve(cfg.amplitude)?;
    let ks = cfg.resolved_k();
    let mut exp = Experiment::new(&radar, cfg.solver.into())?;
    exp.amplitude = cfg.amplitude;

    let mut curves = Vec::new();
    say(stdout, format_args!("{:>8} {:>4} {:>12} {:>14} {:>10}", "snr_db", "k", "pd@pfa=0.1", "exact_support", "kkt_ok"))?;
    for &snr in &cfg.snr_db {
        for &k in &ks {
            let curve = exp.roc_sweep(k, snr, cfg.trials, &thresholds)?;
            let exact = curve.summaries.iter().filter(|s| s.exact_support).count();
            let kkt = curve.summaries.iter().filter(|s| s.kkt.satisfied(1e-5)).count();
            say(
                stdout,
                format_args!(
                    "{:>8} {:>4} {:>12.3} {:>10}/{:<3} {:>6}/{:<3}",
                    snr,
                    k,
                    pd_at_pfa(&curve, PFA_OPERATING_POINT),
                    exact,
                    curve.trials,
                    kkt,
                    curve.trials
                ),
            )?;
            curves.push(curve);
        }
    }

    ensure_dir(out_dir)?;
    let csv_path = out_dir.join("roc.csv");
    let mut w = csv::Writer::from_path(&csv_path)?;
    w.write_record(ROC_HEADER)?;
    for r in aggregate(&curves)? {
        w.write_record([
            r.snr_db.to_string(),
            r.k.to_string(),
            r.threshold.to_string(),
            r.pd.to_string(),
            r.pfa.to_string(),
            r.pfa_per_cell.to_string(),
        ])?;
    }
    w.flush().map_err(|e| CliError::io(format!("cannot write {}", csv_path.display()), e))?;
    say(stdout, format_args!("wrote {}", csv_path.display()))?;

    let mut plots = Vec::new();
    if plot {
        for &snr in &cfg.snr_db {
            let at: Vec<&RocCurve> = curves.iter().filter(|c| c.snr_db == snr).collect();
            let path = out_dir.join(format!("roc_snr_{snr}.svg"));
            fs::write(&path, roc_svg(snr, &at)).map_err(|e| CliError::io(format!("cannot write {}", path.display()), e))?;
            say(stdout, format_args!("wrote {}", path.display()))?;
            plots.push(path);
        }
    }
    Ok(RocReport { curves, csv_path, plots })
}
