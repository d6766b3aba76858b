//! Debiased lasso: an accelerated proximal-gradient lasso solve, support
//! extraction, then least squares on the recovered support.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linop::{check_len, LinearOperator, Normalized};
use crate::operator::SensingOperator;
use crate::spectral::{operator_norm_sq, PowerSettings};
use crate::vector::{norm, norm_inf, norm_l1, norm_sqr};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Proximal map of `t|·|` on the complex plane: shrinks the modulus by `t`
/// and keeps the phase.
pub fn soft_threshold(z: Complex64, t: f64) -> Complex64 {
    let m = z.norm();
    if m <= t {
        ZERO
    } else {
        z * ((m - t) / m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Step {
    /// `1/L` with `L` slightly above a power-iteration estimate of `‖A‖²`.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LassoSettings {
    pub lambda: f64,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub step: Step,
    pub accelerated: bool,
    /// Solve a short decreasing sequence of `λ` values first, warm starting
    /// each from the previous one.
    pub continuation: bool,
}

impl LassoSettings {
    pub fn new(lambda: f64) -> Self {
        LassoSettings {
            lambda,
            max_iters: 2000,
            rel_tol: 1e-7,
            step: Step::Auto,
            accelerated: true,
            continuation: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be finite and non-negative, got {}", self.lambda)));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidArgument(format!("rel_tol must be positive, got {}", self.rel_tol)));
        }
        if let Step::Fixed(s) = self.step {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("step must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// Optimality check at a lasso point with gradient `g = Aᴴ(Ax − y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub lambda: f64,
    /// `max |g_k + λ sgn(x_k)|` over `x_k ≠ 0`.
    pub stationarity: f64,
    /// `max |g_k|` over `x_k = 0`.
    pub dual_max: f64,
}

impl KktReport {
    pub fn compute(x: &[Complex64], gradient: &[Complex64], lambda: f64) -> Self {
        let mut stationarity: f64 = 0.0;
        let mut dual_max: f64 = 0.0;
        for (xk, gk) in x.iter().zip(gradient) {
            let m = xk.norm();
            if m > 0.0 {
                stationarity = stationarity.max((gk + xk * (lambda / m)).norm());
            } else {
                dual_max = dual_max.max(gk.norm());
            }
        }
        KktReport {
            lambda,
            stationarity,
            dual_max,
        }
    }

    /// Largest violation relative to `λ` (absolute when `λ = 0`).
    pub fn residual(&self) -> f64 {
        if self.lambda > 0.0 {
            (self.stationarity / self.lambda).max((self.dual_max - self.lambda).max(0.0) / self.lambda)
        } else {
            self.stationarity.max(self.dual_max)
        }
    }

    pub fn satisfied(&self, tol: f64) -> bool {
        self.stationarity <= tol * self.lambda && self.dual_max <= self.lambda * (1.0 + tol)
    }
}

pub fn kkt_at<O: LinearOperator + ?Sized>(op: &O, x: &[Complex64], y: &[Complex64], lambda: f64) -> Result<KktReport> {
    let ax = op.apply(x)?;
    Ok(KktReport::compute(x, &gradient(op, &ax, y)?, lambda))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub x: Vec<Complex64>,
    /// Iterations summed over all continuation stages.
    pub iters: usize,
    pub restarts: usize,
    pub converged: bool,
    pub objective: f64,
    pub kkt: KktReport,
    /// Objective after every iteration of the final stage.
    pub history: Vec<f64>,
}

fn gradient<O: LinearOperator + ?Sized>(op: &O, ax: &[Complex64], y: &[Complex64]) -> Result<Vec<Complex64>> {
    let r: Vec<Complex64> = ax.iter().zip(y).map(|(a, b)| a - b).collect();
    op.apply_adjoint(&r)
}

fn objective(ax: &[Complex64], y: &[Complex64], x: &[Complex64], lambda: f64) -> f64 {
    let fit: f64 = ax.iter().zip(y).map(|(a, b)| (a - b).norm_sqr()).sum();
    0.5 * fit + lambda * norm_l1(x)
}

fn prox_step(z: &[Complex64], g: &[Complex64], step: f64, lambda: f64) -> Vec<Complex64> {
    z.iter().zip(g).map(|(zk, gk)| soft_threshold(zk - gk * step, step * lambda)).collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
fn relative_change(a: &[Complex64], b: &[Complex64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(u, v)| (u - v).norm_sqr()).sum::<f64>().sqrt();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        d / scale
    }
}

/// Objective increase tolerated before a plain proximal step is declared
/// divergent. Anything smaller is rounding.
const SAFEGUARD: f64 = 1e-9;

/// Relative objective changes below this are treated as noise when
/// deciding whether momentum overshot.
const ROUNDING: f64 = 1e-12;

/// `Re⟨z − x_new, x_new − x⟩ > 0`.
fn momentum_opposes(z: &[Complex64], x_new: &[Complex64], x: &[Complex64]) -> bool {
    let mut acc = 0.0;
    for ((zk, nk), xk) in z.iter().zip(x_new).zip(x) {
        acc += ((zk - nk) * (nk - xk).conj()).re;
    }
    acc > 0.0
}

struct Stage {
    iters: usize,
    restarts: usize,
    converged: bool,
    objective: f64,
    history: Vec<f64>,
}

struct Problem<'a, O: ?Sized> {
    op: &'a O,
    y: &'a [Complex64],
    step: f64,
    accelerated: bool,
}

impl<O: LinearOperator + ?Sized> Problem<'_, O> {
    /// FISTA with function-value restart from `(x, ax)`, updated in place.
    /// With `kkt_tol` set, a small iterate change only counts as convergence
    /// once the KKT check passes at that tolerance.
    fn run(
        &self,
        lambda: f64,
        x: &mut Vec<Complex64>,
        ax: &mut Vec<Complex64>,
        rel_tol: f64,
        max_iters: usize,
        kkt_tol: Option<f64>,
        first_iter: usize,
    ) -> Result<Stage> {
        let y = self.y;
        let mut x_prev = x.clone();
        let mut ax_prev = ax.clone();
        let mut t = 1.0f64;
        let mut fx = objective(ax, y, x, lambda);
        let mut restarts = 0;
        let mut history = Vec::new();
        for it in 1..=max_iters {
            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = if self.accelerated { (t - 1.0) / t_next } else { 0.0 };
            let (z, az) = if beta > 0.0 {
                (
                    extrapolate(x, &x_prev, beta),
                    extrapolate(ax, &ax_prev, beta),
                )
            } else {
                (x.clone(), ax.clone())
            };
            let g = gradient(self.op, &az, y)?;
            let mut x_new = prox_step(&z, &g, self.step, lambda);
            let mut ax_new = self.op.apply(&x_new)?;
            let mut f_new = objective(&ax_new, y, &x_new, lambda);
            let mut t_after = t_next;
            if f_new > fx * (1.0 + ROUNDING) {
                // momentum overshot: drop it and take a plain step from x
                if beta > 0.0 {
                    restarts += 1;
                    let g = gradient(self.op, ax, y)?;
                    x_new = prox_step(x, &g, self.step, lambda);
                    ax_new = self.op.apply(&x_new)?;
                    f_new = objective(&ax_new, y, &x_new, lambda);
                }
                t_after = 1.0;
                if f_new > fx * (1.0 + SAFEGUARD) + f64::MIN_POSITIVE {
                    return Err(Error::Divergence {
                        iter: first_iter + it,
                        previous: fx,
                        current: f_new,
                    });
                }
            } else if beta > 0.0 && momentum_opposes(&z, &x_new, x) {
                // near the optimum the objective stops resolving progress,
                // so also restart when the step turns against the momentum
                restarts += 1;
                t_after = 1.0;
            }
            let change = relative_change(&x_new, x);
            x_prev = std::mem::replace(x, x_new);
            ax_prev = std::mem::replace(ax, ax_new);
            fx = f_new;
            t = t_after;
            history.push(fx);
            if change < rel_tol {
                let done = match kkt_tol {
                    None => true,
                    Some(tol) => KktReport::compute(x, &gradient(self.op, ax, y)?, lambda).satisfied(tol),
                };
                if done {
                    return Ok(Stage {
                        iters: it,
                        restarts,
                        converged: true,
                        objective: fx,
                        history,
                    });
                }
            }
        }
        Ok(Stage {
            iters: max_iters,
            restarts,
            converged: false,
            objective: fx,
            history,
        })
    }
}

fn extrapolate(cur: &[Complex64], prev: &[Complex64], beta: f64) -> Vec<Complex64> {
    cur.iter().zip(prev).map(|(c, p)| c + (c - p) * beta).collect()
}

/// Minimizes `½‖Ax − y‖² + λ‖x‖₁` from `x = 0`.
///
/// Stops once the relative iterate change drops below `rel_tol` and the
/// KKT conditions hold to `10·rel_tol` relative to `λ`, or after
/// `max_iters` iterations in total (then `converged` is false).
pub fn lasso_solve<O: LinearOperator + ?Sized>(op: &O, y: &[Complex64], settings: &LassoSettings) -> Result<LassoSolution> {
    settings.validate()?;
    check_len(op.nrows(), y.len())?;
    let n = op.ncols();
    let lambda = settings.lambda;
    let zero_x = vec![ZERO; n];
    let g0 = op.apply_adjoint(y)?;
    let lambda_max = norm_inf(&g0);
    if lambda_max <= lambda {
        // x = 0 is optimal: Aᴴ(A·0 − y) = −Aᴴy lies in the λ-ball
        let kkt = KktReport::compute(&zero_x, &g0, lambda);
        return Ok(LassoSolution {
            x: zero_x,
            iters: 0,
            restarts: 0,
            converged: true,
            objective: 0.5 * norm_sqr(y),
            kkt,
            history: Vec::new(),
        });
    }
    let step = match settings.step {
        Step::Fixed(s) => s,
        Step::Auto => {
            let l = operator_norm_sq(op, PowerSettings::default())?.value;
            1.0 / (1.01 * l)
        }
    };
    let problem = Problem {
        op,
        y,
        step,
        accelerated: settings.accelerated,
    };
    let mut x = zero_x;
    let mut ax = vec![ZERO; op.nrows()];
    let mut used = 0;
    let mut restarts = 0;
    if settings.continuation {
        let mut stage_lambda = 0.2 * lambda_max;
        while stage_lambda > lambda && used < settings.max_iters {
            let cap = 200.min(settings.max_iters - used);
            let s = problem.run(stage_lambda, &mut x, &mut ax, settings.rel_tol.max(1e-4), cap, None, used)?;
            used += s.iters;
            restarts += s.restarts;
            stage_lambda *= 0.2;
        }
    }
    let last = problem.run(
        lambda,
        &mut x,
        &mut ax,
        settings.rel_tol,
        settings.max_iters - used,
        Some(10.0 * settings.rel_tol),
        used,
    )?;
    let kkt = KktReport::compute(&x, &gradient(op, &ax, y)?, lambda);
    Ok(LassoSolution {
        x,
        iters: used + last.iters,
        restarts: restarts + last.restarts,
        converged: last.converged,
        objective: last.objective,
        kkt,
        history: last.history,
    })
}

/// Indices with `|x_k| > eps · max_k |x_k|`.
pub fn extract_support(x: &[Complex64], eps: f64) -> Vec<usize> {
    let peak = norm_inf(x);
    if peak == 0.0 {
        return Vec::new();
    }
    let cut = eps * peak;
    x.iter()
        .enumerate()
        .filter(|(_, v)| v.norm() > cut)
        .map(|(i, _)| i)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct DebiasResult {
    /// Least-squares amplitudes on the support, zero elsewhere.
    pub estimate: Vec<Complex64>,
    pub ls_residual: f64,
    /// `σ_max / σ_min` of the support submatrix (infinite when singular).
    pub condition: f64,
    pub rank: usize,
    /// The submatrix had dependent columns; `estimate` is then the
    /// minimum-norm least-squares solution.
    pub rank_deficient: bool,
}

/// Least squares `min ‖A_S x_S − y‖` on the given columns, through an SVD
/// so that rank deficiency yields the minimum-norm solution.
pub fn debias<O: LinearOperator + ?Sized>(op: &O, y: &[Complex64], support: &[usize]) -> Result<DebiasResult> {
    check_len(op.nrows(), y.len())?;
    let m = op.nrows();
    let s = support.len();
    if s > m {
        return Err(Error::InvalidArgument(format!(
            "support of size {s} exceeds the {m} measurements"
        )));
    }
    let mut estimate = vec![ZERO; op.ncols()];
    if s == 0 {
        return Ok(DebiasResult {
            estimate,
            ls_residual: norm(y),
            condition: 1.0,
            rank: 0,
            rank_deficient: false,
        });
    }
    let mut a_s = DMatrix::zeros(m, s);
    for (c, &j) in support.iter().enumerate() {
        a_s.column_mut(c).copy_from_slice(&op.column(j)?);
    }
    let b = DVector::from_column_slice(y);
    let svd = a_s.clone().svd(true, true);
    let sv = &svd.singular_values;
    let smax = sv.max();
    let smin = sv.min();
    let cutoff = m.max(s) as f64 * f64::EPSILON * smax;
    let rank = sv.iter().filter(|&&v| v > cutoff).count();
    let sol = svd.solve(&b, cutoff).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let ls_residual = (&a_s * &sol - &b).norm();
    for (c, &j) in support.iter().enumerate() {
        estimate[j] = sol[c];
    }
    Ok(DebiasResult {
        estimate,
        ls_residual,
        condition: if smin > 0.0 { smax / smin } else { f64::INFINITY },
        rank,
        rank_deficient: rank < s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryOptions {
    /// Overrides the default `2σ√(2 ln(grid size))`.
    pub lambda: Option<f64>,
    /// Run the lasso on the column-normalized operator `A D⁻¹`.
    pub normalize: bool,
    pub max_iters: usize,
    pub rel_tol: f64,
    pub accelerated: bool,
    pub continuation: bool,
    pub support_eps: f64,
}

impl Default for RecoveryOptions {
    fn default() -> Self {
        RecoveryOptions {
            lambda: None,
            normalize: true,
            max_iters: 2000,
            rel_tol: 1e-7,
            accelerated: true,
            continuation: true,
            support_eps: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryResult {
    /// Lasso solution mapped back to the scene domain (`D⁻¹ z` when the
    /// normalized operator was used).
    pub lasso_estimate: Vec<Complex64>,
    pub support: Vec<usize>,
    pub debiased_estimate: Vec<Complex64>,
    pub lambda: f64,
    pub iters: usize,
    pub converged: bool,
    /// KKT check of the problem actually solved.
    pub kkt: KktReport,
    pub kkt_residual: f64,
    pub ls_residual: f64,
    pub condition: f64,
    pub rank_deficient: bool,
}

/// The full debiased-lasso pipeline bound to one operator. Column norms and
/// the step size are computed once so many measurements can share them.
#[derive(Debug)]
pub struct Recoverer<'a> {
    op: &'a SensingOperator,
    norms: Vec<f64>,
    lipschitz: f64,
    options: RecoveryOptions,
}

impl<'a> Recoverer<'a> {
    pub fn new(op: &'a SensingOperator, options: RecoveryOptions) -> Result<Self> {
        let norms = op.column_norms().norms;
        let power = PowerSettings::default();
        let l = if options.normalize {
            operator_norm_sq(&Normalized::new(op, &norms)?, power)?.value
        } else {
            operator_norm_sq(op, power)?.value
        };
        Ok(Recoverer {
            op,
            norms,
            lipschitz: 1.01 * l,
            options,
        })
    }

    /// Reuses precomputed column norms and Lipschitz constant.
    pub fn from_parts(op: &'a SensingOperator, options: RecoveryOptions, norms: Vec<f64>, lipschitz: f64) -> Result<Self> {
        check_len(op.ncols(), norms.len())?;
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(Error::InvalidArgument(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        Ok(Recoverer {
            op,
            norms,
            lipschitz,
            options,
        })
    }

    pub fn options(&self) -> &RecoveryOptions {
        &self.options
    }

    /// Lipschitz constant of the smooth part used for the step.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn column_norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn default_lambda(&self, sigma: f64) -> f64 {
        2.0 * sigma * (2.0 * self.op.config().log_grid_size()).sqrt()
    }

    pub fn recover(&self, y: &[Complex64], sigma: f64) -> Result<RecoveryResult> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be finite and non-negative, got {sigma}")));
        }
        check_len(self.op.nrows(), y.len())?;
        if self.options.normalize {
            let tilde = Normalized::new(self.op, &self.norms)?;
            self.run(&tilde, y, sigma)
        } else {
            self.run(self.op, y, sigma)
        }
    }

    fn run<O: LinearOperator + ?Sized>(&self, solved_on: &O, y: &[Complex64], sigma: f64) -> Result<RecoveryResult> {
        let lambda = match self.options.lambda {
            Some(l) => l,
            None => {
                let l = self.default_lambda(sigma);
                if l > 0.0 {
                    l
                } else {
                    // noiseless data: keep a tiny weight so the solution stays sparse
                    1e-6 * norm_inf(&solved_on.apply_adjoint(y)?)
                }
            }
        };
        let settings = LassoSettings {
            lambda,
            max_iters: self.options.max_iters,
            rel_tol: self.options.rel_tol,
            step: Step::Fixed(1.0 / self.lipschitz),
            accelerated: self.options.accelerated,
            continuation: self.options.continuation,
        };
        let sol = lasso_solve(solved_on, y, &settings)?;
        let lasso_estimate: Vec<Complex64> = if self.options.normalize {
            sol.x.iter().zip(&self.norms).map(|(z, d)| z / d).collect()
        } else {
            sol.x.clone()
        };
        let support = extract_support(&lasso_estimate, self.options.support_eps);
        let deb = debias(self.op, y, &support)?;
        Ok(RecoveryResult {
            lasso_estimate,
            support,
            debiased_estimate: deb.estimate,
            lambda,
            iters: sol.iters,
            converged: sol.converged,
            kkt_residual: sol.kkt.residual(),
            kkt: sol.kkt,
            ls_residual: deb.ls_residual,
            condition: deb.condition,
            rank_deficient: deb.rank_deficient,
        })
    }
}

/// One-shot convenience wrapper around [`Recoverer`].
pub fn recover(op: &SensingOperator, y: &[Complex64], sigma: f64, options: RecoveryOptions) -> Result<RecoveryResult> {
    Recoverer::new(op, options)?.recover(y, sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::RadarConfig;
    use crate::random::{complex_gaussian_vec, stream, Purpose};
    use crate::scene::{draw_scene, Scene};
    use crate::vector::rel_dist;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_matrix(m: usize, n: usize, seed: u64) -> DMatrix<Complex64> {
        let mut rng = stream(seed, Purpose::Test, 0);
        let v = complex_gaussian_vec(&mut rng, m * n, 1.0 / m as f64);
        DMatrix::from_vec(m, n, v)
    }

    #[test]
    fn soft_threshold_cases() {
        for theta in [0.0, 0.7, 2.0, -2.9] {
            let z = Complex64::from_polar(3.0, theta);
            let s = soft_threshold(z, 1.0);
            assert!((s - Complex64::from_polar(2.0, theta)).norm() < 1e-15);
        }
        assert_eq!(soft_threshold(c(0.5, 0.0), 1.0), ZERO);
        assert_eq!(soft_threshold(c(0.3, -0.2), 0.0), c(0.3, -0.2));
    }

    #[test]
    fn zero_data_gives_zero() {
        let a = random_matrix(12, 30, 1);
        let sol = lasso_solve(&a, &vec![ZERO; 12], &LassoSettings::new(0.1)).unwrap();
        assert!(sol.x.iter().all(|v| *v == ZERO));
        assert_eq!(sol.iters, 0);
    }

    #[test]
    fn large_lambda_gives_zero() {
        let a = random_matrix(12, 30, 2);
        let mut rng = stream(2, Purpose::Test, 1);
        let y = complex_gaussian_vec(&mut rng, 12, 1.0);
        let lmax = norm_inf(&LinearOperator::apply_adjoint(&a, &y).unwrap());
        let sol = lasso_solve(&a, &y, &LassoSettings::new(lmax)).unwrap();
        assert!(sol.x.iter().all(|v| *v == ZERO));
        assert!(sol.kkt.satisfied(0.0));
        let sol = lasso_solve(&a, &y, &LassoSettings::new(0.999 * lmax)).unwrap();
        assert!(sol.x.iter().any(|v| *v != ZERO));
    }

    #[test]
    fn settings_are_validated() {
        let a = random_matrix(4, 6, 3);
        let y = vec![c(1.0, 0.0); 4];
        let mut s = LassoSettings::new(0.1);
        s.step = Step::Fixed(0.0);
        assert!(matches!(lasso_solve(&a, &y, &s), Err(Error::InvalidArgument(_))));
        assert!(lasso_solve(&a, &y, &LassoSettings::new(-1.0)).is_err());
        assert!(lasso_solve(&a, &y[..3], &LassoSettings::new(0.1)).is_err());
    }

    #[test]
    fn oversized_step_is_reported_as_divergence() {
        let a = random_matrix(10, 20, 4);
        let mut rng = stream(4, Purpose::Test, 1);
        let y = complex_gaussian_vec(&mut rng, 10, 1.0);
        let mut s = LassoSettings::new(1e-3);
        s.step = Step::Fixed(100.0);
        s.continuation = false;
        assert!(matches!(lasso_solve(&a, &y, &s), Err(Error::Divergence { .. })));
    }

    #[test]
    fn noiseless_single_target() {
        let cfg = RadarConfig::new(2, 2, 16, 7);
        let op = SensingOperator::new(&cfg).unwrap();
        let scene = Scene::new(cfg.grid_size(), vec![(37, c(1.0, 0.0))]).unwrap();
        let y = op.apply(&scene.to_dense()).unwrap();
        let lambda = 1e-6 * norm_inf(&op.apply_adjoint(&y).unwrap());
        let sol = lasso_solve(&op, &y, &LassoSettings::new(lambda)).unwrap();
        assert!(sol.converged);
        assert_eq!(extract_support(&sol.x, 1e-6), vec![37]);
        assert!((sol.x[37] - c(1.0, 0.0)).norm() < 1e-3);

        // dense oracle: same problem on the materialized matrix
        let dense = op.to_dense().unwrap();
        let sol_dense = lasso_solve(&dense, &y, &LassoSettings::new(lambda)).unwrap();
        assert!(rel_dist(&sol.x, &sol_dense.x) < 1e-6);
    }

    #[test]
    fn kkt_and_monotone_objective() {
        let cfg = RadarConfig::new(2, 2, 16, 8);
        let op = SensingOperator::new(&cfg).unwrap();
        let scene = draw_scene(&cfg, 3, 1.0, 8).unwrap();
        let mut y = op.apply(&scene.to_dense()).unwrap();
        let mut rng = stream(8, Purpose::Noise, 0);
        for (v, n) in y.iter_mut().zip(complex_gaussian_vec(&mut rng, 32, 0.01)) {
            *v += n;
        }
        let sol = lasso_solve(&op, &y, &LassoSettings::new(0.3)).unwrap();
        assert!(sol.converged);
        assert!(sol.kkt.satisfied(1e-6), "{:?}", sol.kkt);
        for w in sol.history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + ROUNDING), "{} -> {}", w[0], w[1]);
        }
        let independent = kkt_at(&op, &sol.x, &y, 0.3).unwrap();
        assert!(independent.satisfied(1e-5));
    }

    #[test]
    fn plain_and_accelerated_agree() {
        let a = random_matrix(20, 40, 9);
        let mut rng = stream(9, Purpose::Test, 1);
        let y = complex_gaussian_vec(&mut rng, 20, 1.0);
        let fast = lasso_solve(&a, &y, &LassoSettings::new(0.2)).unwrap();
        let mut s = LassoSettings::new(0.2);
        s.accelerated = false;
        s.continuation = false;
        s.max_iters = 100_000;
        let slow = lasso_solve(&a, &y, &s).unwrap();
        assert!(fast.converged && slow.converged);
        assert!((fast.objective - slow.objective).abs() <= 1e-9 * fast.objective);
        assert_eq!(extract_support(&fast.x, 1e-6), extract_support(&slow.x, 1e-6));
    }

    #[test]
    fn support_rule() {
        assert!(extract_support(&[ZERO; 5], 1e-6).is_empty());
        let x = [c(1.0, 0.0), ZERO, c(1e-12, 0.0)];
        assert_eq!(extract_support(&x, 1e-6), vec![0]);
        assert_eq!(extract_support(&x, 0.0), vec![0, 2]);
    }

    #[test]
    fn debias_matches_qr_oracle() {
        let cfg = RadarConfig::new(2, 2, 8, 10);
        let op = SensingOperator::new(&cfg).unwrap();
        let mut rng = stream(10, Purpose::Test, 0);
        let y = complex_gaussian_vec(&mut rng, op.nrows(), 1.0);
        let support = vec![3, 17, 28];
        let deb = debias(&op, &y, &support).unwrap();

        let dense = op.to_dense().unwrap();
        let a_s = DMatrix::from_fn(op.nrows(), 3, |i, j| dense[(i, support[j])]);
        let qr = a_s.clone().qr();
        let qty = qr.q().adjoint() * DVector::from_column_slice(&y);
        let x = qr.r().solve_upper_triangular(&qty).unwrap();
        for (c, &j) in support.iter().enumerate() {
            assert!((deb.estimate[j] - x[c]).norm() < 1e-10);
        }
        let nonzero = deb.estimate.iter().filter(|v| **v != ZERO).count();
        assert_eq!(nonzero, 3);
        let resid = (&a_s * &x - DVector::from_column_slice(&y)).norm();
        assert!((deb.ls_residual - resid).abs() < 1e-10);
        assert!(!deb.rank_deficient && deb.condition.is_finite());
    }

    #[test]
    fn debias_edge_cases() {
        let cfg = RadarConfig::new(2, 2, 8, 11);
        let op = SensingOperator::new(&cfg).unwrap();
        let scene = Scene::new(cfg.grid_size(), vec![(5, c(0.3, -1.0)), (29, c(-2.0, 0.5))]).unwrap();
        let y = op.apply(&scene.to_dense()).unwrap();
        let deb = debias(&op, &y, &[]).unwrap();
        assert!((deb.ls_residual - norm(&y)).abs() < 1e-15);
        assert!(deb.estimate.iter().all(|v| *v == ZERO));

        let deb = debias(&op, &y, &scene.support).unwrap();
        assert!(rel_dist(&deb.estimate, &scene.to_dense()) < 1e-8);
        assert!(deb.ls_residual < 1e-10);

        let too_many: Vec<usize> = (0..op.nrows() + 1).collect();
        assert!(debias(&op, &y, &too_many).is_err());
    }

    #[test]
    fn debias_rank_deficient_is_minimum_norm() {
        let mut a = random_matrix(6, 3, 12);
        let col = a.column(0).into_owned();
        a.set_column(2, &col);
        let y: Vec<Complex64> = (0..6).map(|i| c(i as f64, 1.0)).collect();
        let deb = debias(&a, &y, &[0, 1, 2]).unwrap();
        assert!(deb.rank_deficient);
        assert_eq!(deb.rank, 2);
        assert!(deb.condition > 1e12);
        // the minimum-norm solution splits the duplicated column evenly
        assert!((deb.estimate[0] - deb.estimate[2]).norm() < 1e-10);
    }

    #[test]
    fn recover_noiseless() {
        let cfg = RadarConfig::new(2, 2, 16, 13);
        let op = SensingOperator::new(&cfg).unwrap();
        let scene = draw_scene(&cfg, 1, 1.0, 13).unwrap();
        let y = op.apply(&scene.to_dense()).unwrap();
        for normalize in [true, false] {
            let res = recover(&op, &y, 0.0, RecoveryOptions { normalize, ..Default::default() }).unwrap();
            assert_eq!(res.support, scene.support);
            assert!(rel_dist(&res.debiased_estimate, &scene.to_dense()) < 1e-6);
            assert!(res.lambda > 0.0);
            assert!(res.kkt.satisfied(1e-6));
        }
    }

    #[test]
    fn phase_equivariance() {
        let cfg = RadarConfig::new(2, 2, 16, 14);
        let op = SensingOperator::new(&cfg).unwrap();
        let scene = draw_scene(&cfg, 2, 1.0, 14).unwrap();
        let mut y = op.apply(&scene.to_dense()).unwrap();
        let mut rng = stream(14, Purpose::Noise, 0);
        for (v, n) in y.iter_mut().zip(complex_gaussian_vec(&mut rng, 32, 0.04)) {
            *v += n;
        }
        let rec = Recoverer::new(&op, RecoveryOptions::default()).unwrap();
        let base = rec.recover(&y, 0.2).unwrap();
        for phi in [0.3, PI / 2.0, 2.5] {
            let rot = Complex64::from_polar(1.0, phi);
            let y_rot: Vec<Complex64> = y.iter().map(|v| v * rot).collect();
            let r = rec.recover(&y_rot, 0.2).unwrap();
            assert_eq!(r.support, base.support);
            let expect: Vec<Complex64> = base.debiased_estimate.iter().map(|v| v * rot).collect();
            assert!(rel_dist(&r.debiased_estimate, &expect) < 1e-8);
            let expect: Vec<Complex64> = base.lasso_estimate.iter().map(|v| v * rot).collect();
            assert!(rel_dist(&r.lasso_estimate, &expect) < 1e-6);
        }
    }

    #[test]
    fn normalization_equivariance() {
        // with one transmitter all columns share a norm d, and the lasso on
        // A with weight λd is the lasso on A/d with weight λ after z = d·x
        let cfg = RadarConfig::new(1, 4, 16, 15);
        let op = SensingOperator::new(&cfg).unwrap();
        let norms = op.column_norms().norms;
        let d = norms[0];
        assert!(norms.iter().all(|v| (v - d).abs() < 1e-12 * d));
        let scene = draw_scene(&cfg, 2, 1.0, 15).unwrap();
        let mut y = op.apply(&scene.to_dense()).unwrap();
        let mut rng = stream(15, Purpose::Noise, 0);
        for (v, n) in y.iter_mut().zip(complex_gaussian_vec(&mut rng, 64, 0.01)) {
            *v += n;
        }
        let lambda = 0.5;
        let tilde = Normalized::new(&op, &norms).unwrap();
        let z = lasso_solve(&tilde, &y, &LassoSettings::new(lambda)).unwrap();
        let x = lasso_solve(&op, &y, &LassoSettings::new(lambda * d)).unwrap();
        let mapped: Vec<Complex64> = x.x.iter().map(|v| v * d).collect();
        assert_eq!(extract_support(&z.x, 1e-6), extract_support(&mapped, 1e-6));
        assert!(rel_dist(&mapped, &z.x) < 1e-6);

        // and the full pipeline agrees on the support either way
        let a = recover(&op, &y, 0.1, RecoveryOptions { normalize: true, ..Default::default() }).unwrap();
        let b = recover(
            &op,
            &y,
            0.1,
            RecoveryOptions {
                normalize: false,
                lambda: Some(a.lambda * d),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a.support, b.support);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn soft_threshold_is_shrinkage(re in -5.0f64..5.0, im in -5.0f64..5.0, t in 0.0f64..6.0) {
            let z = c(re, im);
            let s = soft_threshold(z, t);
            prop_assert!((s.norm() - (z.norm() - t).max(0.0)).abs() < 1e-12);
            if s != ZERO {
                prop_assert!((s / s.norm() - z / z.norm()).norm() < 1e-12);
            }
        }

        #[test]
        fn soft_threshold_is_nonexpansive(a in -5.0f64..5.0, b in -5.0f64..5.0, p in -5.0f64..5.0, q in -5.0f64..5.0, t in 0.0f64..3.0) {
            let (u, v) = (c(a, b), c(p, q));
            prop_assert!((soft_threshold(u, t) - soft_threshold(v, t)).norm() <= (u - v).norm() + 1e-12);
        }

        #[test]
        fn support_is_thresholded_subset(vals in proptest::collection::vec(-3.0f64..3.0, 1..40), eps in 0.0f64..1.0) {
            let x: Vec<Complex64> = vals.iter().map(|&v| c(v, 0.0)).collect();
            let s = extract_support(&x, eps);
            let peak = norm_inf(&x);
            for (i, v) in x.iter().enumerate() {
                prop_assert_eq!(s.contains(&i), v.norm() > eps * peak);
            }
        }

        #[test]
        fn lasso_point_is_optimal(seed in 0u64..1000, lambda_frac in 0.05f64..0.9) {
            let a = random_matrix(8, 16, seed);
            let mut rng = stream(seed, Purpose::Test, 1);
            let y = complex_gaussian_vec(&mut rng, 8, 1.0);
            let lambda = lambda_frac * norm_inf(&LinearOperator::apply_adjoint(&a, &y).unwrap());
            let sol = lasso_solve(&a, &y, &LassoSettings::new(lambda)).unwrap();
            prop_assert!(sol.converged);
            prop_assert!(sol.kkt.satisfied(1e-6));
            // no random perturbation does better
            let ax = LinearOperator::apply(&a, &sol.x).unwrap();
            let f = objective(&ax, &y, &sol.x, lambda);
            let pert = complex_gaussian_vec(&mut rng, 16, 1e-4);
            let xp: Vec<Complex64> = sol.x.iter().zip(&pert).map(|(u, v)| u + v).collect();
            let axp = LinearOperator::apply(&a, &xp).unwrap();
            prop_assert!(objective(&axp, &y, &xp, lambda) >= f - 1e-12);
        }
    }
}
