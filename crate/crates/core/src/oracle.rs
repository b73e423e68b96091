//! Analytic gradient-space testbed.
//!
//! A [`GradientScenario`] fixes a true gradient, a unit train-gradient
//! deviation orthogonal to it, and per-estimator noise with exactly known
//! inner-product statistics. Estimates `v_k = α_k·∇L* + ε_k` are sampled as
//! real d-dimensional vectors, so the Monte-Carlo ratio statistics flow
//! through honest dot products while the population optimum stays available
//! in closed form. Exhaustive simplex search over the same trials is the
//! brute-force verifier for the closed-form blend weights.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::blend::{self, GradientStats, NoiseStats};
use crate::error::{Error, Result};
use crate::fusion::BlendWeights;
use crate::linalg::SquareMatrix;
use crate::rng::RngSeed;

/// Trials whose denominator inner product falls below this are rejected.
pub const DENOMINATOR_EPSILON: f64 = 1e-12;

/// Scenario flagged degenerate when more than this fraction of trials is
/// rejected.
pub const MAX_REJECT_FRACTION: f64 = 0.01;

pub const OPTIMALITY_TOLERANCE: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradientScenario {
    pub dim: usize,
    pub true_grad: Vec<f64>,
    /// Target ⟨∇L*, v_k⟩ per estimator (realized exactly up to rounding).
    pub inner: Vec<f64>,
    /// Target second moments of the overfitting inner products ⟨∇L^T−∇L*, v_k⟩.
    pub noise: NoiseStats,
    /// Std of extra isotropic noise in the subspace orthogonal to both the
    /// true gradient and the deviation direction. Affects no statistic.
    pub ambient_noise: f64,
    pub trials: usize,
    pub seed: u64,
}

impl GradientScenario {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidArgument(
                "scenario dimension must be at least 2".into(),
            ));
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.inner.is_empty() {
            return Err(Error::InvalidArgument("scenario needs estimators".into()));
        }
        if self.true_grad.len() != self.dim {
            return Err(Error::Shape {
                context: "GradientScenario",
                detail: format!(
                    "true gradient has {} dims, expected {}",
                    self.true_grad.len(),
                    self.dim
                ),
            });
        }
        let norm2: f64 = self.true_grad.iter().map(|v| v * v).sum();
        if norm2 <= 0.0 {
            return Err(Error::InvalidArgument("true gradient must be nonzero".into()));
        }
        if self.inner.iter().any(|&g| g <= 0.0) {
            return Err(Error::InvalidArgument(
                "target inner products must be positive".into(),
            ));
        }
        let k = self.inner.len();
        match &self.noise {
            NoiseStats::Diagonal(d) => {
                if d.len() != k || d.iter().any(|&v| v < 0.0) {
                    return Err(Error::InvalidArgument(
                        "diagonal noise needs one nonnegative entry per estimator".into(),
                    ));
                }
            }
            NoiseStats::Full(m) => {
                if m.size() != k {
                    return Err(Error::InvalidArgument(
                        "noise matrix size must match estimator count".into(),
                    ));
                }
            }
        }
        if self.ambient_noise < 0.0 {
            return Err(Error::InvalidArgument(
                "ambient noise must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    pub fn estimator_count(&self) -> usize {
        self.inner.len()
    }

    /// Closed-form stats as consumed by the weight formulas.
    pub fn stats(&self) -> GradientStats {
        GradientStats {
            inner: self.inner.clone(),
            noise: self.noise.clone(),
        }
    }

    fn noise_matrix(&self) -> SquareMatrix {
        match &self.noise {
            NoiseStats::Diagonal(d) => SquareMatrix::diagonal(d),
            NoiseStats::Full(m) => m.clone(),
        }
    }

    /// Samples all trials. Per-trial streams derive from (seed, trial index),
    /// so parallel and serial execution agree bit for bit.
    pub fn realize(&self) -> Result<TrialBank> {
        self.validate()?;
        let k = self.estimator_count();
        let d = self.dim;
        let norm2: f64 = self.true_grad.iter().map(|v| v * v).sum();
        let unit_true: Vec<f64> = self.true_grad.iter().map(|v| v / norm2.sqrt()).collect();
        let deviation = orthogonal_unit(&unit_true);
        let gains: Vec<f64> = self.inner.iter().map(|g| g / norm2).collect();

        let sigma = self.noise_matrix();
        let chol = if sigma.norm_one() == 0.0 {
            SquareMatrix::zeros(k)
        } else {
            sigma.cholesky().map_err(|e| {
                Error::InvalidArgument(format!("noise matrix is not positive definite: {}", e))
            })?
        };

        let root = RngSeed(self.seed);
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..self.trials)
            .into_par_iter()
            .map(|t| {
                let mut rng = root.derive(&format!("trial:{}", t)).stream();
                let mut num_row = vec![0.0; k];
                let mut den_row = vec![0.0; k];
                // correlated latent for the deviation components
                let z: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
                let mut v = vec![0.0; d];
                for est in 0..k {
                    let mut s = 0.0;
                    for (j, zj) in z.iter().enumerate().take(est + 1) {
                        s += chol.get(est, j) * zj;
                    }
                    // v = gain·∇L* + s·e₀ + ambient noise ⊥ {∇L*, e₀}
                    for i in 0..d {
                        v[i] = gains[est] * self.true_grad[i] + s * deviation[i];
                    }
                    if self.ambient_noise > 0.0 {
                        let mut eta: Vec<f64> = (0..d)
                            .map(|_| self.ambient_noise * rng.sample::<f64, _>(StandardNormal))
                            .collect();
                        let along_true: f64 =
                            eta.iter().zip(&unit_true).map(|(a, b)| a * b).sum();
                        let along_dev: f64 =
                            eta.iter().zip(&deviation).map(|(a, b)| a * b).sum();
                        for i in 0..d {
                            eta[i] -= along_true * unit_true[i] + along_dev * deviation[i];
                            v[i] += eta[i];
                        }
                    }
                    num_row[est] = dot(&deviation, &v);
                    den_row[est] = dot(&self.true_grad, &v);
                }
                (num_row, den_row)
            })
            .collect();

        let trials = self.trials;
        let mut num = Vec::with_capacity(trials * k);
        let mut den = Vec::with_capacity(trials * k);
        for (n, dn) in rows {
            num.extend_from_slice(&n);
            den.extend_from_slice(&dn);
        }

        let mut second = SquareMatrix::zeros(k);
        for t in 0..trials {
            let row = &num[t * k..(t + 1) * k];
            for a in 0..k {
                for b in 0..k {
                    let v = second.get(a, b) + row[a] * row[b];
                    second.set(a, b, v);
                }
            }
        }
        for a in 0..k {
            for b in 0..k {
                let v = second.get(a, b) / trials as f64;
                second.set(a, b, v);
            }
        }
        let mut den_mean = vec![0.0; k];
        for t in 0..trials {
            for e in 0..k {
                den_mean[e] += den[t * k + e];
            }
        }
        for m in &mut den_mean {
            *m /= trials as f64;
        }
        let mut den_jitter = 0.0_f64;
        for t in 0..trials {
            for e in 0..k {
                den_jitter = den_jitter.max((den[t * k + e] - den_mean[e]).abs());
            }
        }

        Ok(TrialBank {
            k,
            trials,
            num,
            den,
            num_second_moment: second,
            den_mean,
            den_jitter,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Deterministic unit vector orthogonal to `unit`: Gram-Schmidt applied to
/// the standard basis axis least aligned with it.
fn orthogonal_unit(unit: &[f64]) -> Vec<f64> {
    let axis = unit
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut e: Vec<f64> = vec![0.0; unit.len()];
    e[axis] = 1.0;
    let along: f64 = dot(&e, unit);
    for (v, u) in e.iter_mut().zip(unit) {
        *v -= along * u;
    }
    let norm = dot(&e, &e).sqrt();
    for v in &mut e {
        *v /= norm;
    }
    e
}

/// Cached per-trial inner products from one realization of a scenario.
pub struct TrialBank {
    k: usize,
    trials: usize,
    /// trials × k overfitting inner products ⟨∇L^T−∇L*, v_k⟩, row-major.
    num: Vec<f64>,
    /// trials × k generalization inner products ⟨∇L*, v_k⟩.
    den: Vec<f64>,
    num_second_moment: SquareMatrix,
    den_mean: Vec<f64>,
    den_jitter: f64,
}

impl TrialBank {
    pub fn estimator_count(&self) -> usize {
        self.k
    }

    pub fn trials(&self) -> usize {
        self.trials
    }

    /// Realized second-moment matrix of the overfitting inner products; the
    /// sample estimate of the target Σ.
    pub fn realized_noise(&self) -> &SquareMatrix {
        &self.num_second_moment
    }

    /// Realized mean generalization inner products; sample estimate of the
    /// target inner vector.
    pub fn realized_inner(&self) -> &[f64] {
        &self.den_mean
    }

    fn denominators_effectively_constant(&self) -> bool {
        let min_mean = self
            .den_mean
            .iter()
            .map(|v| v.abs())
            .fold(f64::INFINITY, f64::min);
        min_mean > 0.0 && self.den_jitter / min_mean < 1e-9
    }
}

/// Monte-Carlo estimate of the squared overfitting-to-generalization ratio
/// for one weight vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ogr2Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
    pub rejected: usize,
}

/// Mean of `(⟨∇L^T−∇L*, ĝ⟩ / ⟨∇L*, ĝ⟩)²` over trials with `ĝ = Σ w_k v_k`.
/// Trials with a vanishing denominator are rejected and counted; more than
/// [`MAX_REJECT_FRACTION`] rejections flags the scenario degenerate.
pub fn empirical_ogr2(bank: &TrialBank, weights: &BlendWeights) -> Result<Ogr2Estimate> {
    if weights.len() != bank.k {
        return Err(Error::Shape {
            context: "empirical_ogr2",
            detail: format!("{} weights for {} estimators", weights.len(), bank.k),
        });
    }
    let w = weights.as_slice();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut rejected = 0usize;
    let mut accepted = 0usize;
    for t in 0..bank.trials {
        let num_row = &bank.num[t * bank.k..(t + 1) * bank.k];
        let den_row = &bank.den[t * bank.k..(t + 1) * bank.k];
        let numerator = dot(w, num_row);
        let denominator = dot(w, den_row);
        if denominator.abs() < DENOMINATOR_EPSILON {
            rejected += 1;
            continue;
        }
        let ratio = numerator / denominator;
        let x = ratio * ratio;
        sum += x;
        sum_sq += x * x;
        accepted += 1;
    }
    if (rejected as f64) > MAX_REJECT_FRACTION * bank.trials as f64 {
        return Err(Error::DegenerateScenario(format!(
            "{} of {} trials rejected for vanishing denominator",
            rejected, bank.trials
        )));
    }
    let n = accepted as f64;
    let mean = sum / n;
    let variance = (sum_sq / n - mean * mean).max(0.0);
    Ok(Ogr2Estimate {
        mean,
        std_error: (variance / n).sqrt(),
        trials: accepted,
        rejected,
    })
}

/// Evaluates the same empirical objective cheaply through the cached moment
/// matrix: with per-trial constant denominators,
/// `(1/T)Σ(wᵀs_t)²/(wᵀg)² = wᵀ[(1/T)Σ s_t s_tᵀ]w / (wᵀg)²` exactly. Falls
/// back to the per-trial loop otherwise.
fn empirical_ogr2_value(bank: &TrialBank, w: &[f64]) -> Result<f64> {
    if bank.denominators_effectively_constant() {
        let numerator = bank.num_second_moment.quadratic_form(w);
        let denominator = dot(w, &bank.den_mean);
        if denominator.abs() < DENOMINATOR_EPSILON {
            return Err(Error::DegenerateScenario(
                "denominator vanishes for weight vector".into(),
            ));
        }
        Ok(numerator / (denominator * denominator))
    } else {
        let weights = BlendWeights::new(w.to_vec())?;
        Ok(empirical_ogr2(bank, &weights)?.mean)
    }
}

fn enumerate_simplex(k: usize, steps: usize, mut visit: impl FnMut(&[f64])) {
    fn recurse(
        k: usize,
        steps: usize,
        remaining: usize,
        prefix: &mut Vec<usize>,
        visit: &mut impl FnMut(&[f64]),
    ) {
        if prefix.len() == k - 1 {
            prefix.push(remaining);
            let w: Vec<f64> = prefix.iter().map(|&c| c as f64 / steps as f64).collect();
            visit(&w);
            prefix.pop();
            return;
        }
        for c in 0..=remaining {
            prefix.push(c);
            recurse(k, steps, remaining - c, prefix, visit);
            prefix.pop();
        }
    }
    let mut prefix = Vec::with_capacity(k);
    recurse(k, steps, steps, &mut prefix, &mut visit);
}

/// Exhaustive search over the simplex lattice with the given step. Ties
/// break toward the lexicographically smallest weight vector (the lattice is
/// enumerated in ascending lexicographic order with strict improvement).
pub fn grid_search_simplex(bank: &TrialBank, step: f64) -> Result<(BlendWeights, f64)> {
    const ALLOWED: [f64; 3] = [0.05, 0.02, 0.01];
    if !ALLOWED.iter().any(|s| (s - step).abs() < 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "grid step {} not in {:?}",
            step, ALLOWED
        )));
    }
    if bank.k > 4 {
        return Err(Error::InvalidArgument(
            "grid search supports at most 4 estimators".into(),
        ));
    }
    let steps = (1.0 / step).round() as usize;
    let mut best_value = f64::INFINITY;
    let mut best_w: Option<Vec<f64>> = None;
    let mut first_err: Option<Error> = None;
    enumerate_simplex(bank.k, steps, |w| {
        if first_err.is_some() {
            return;
        }
        match empirical_ogr2_value(bank, w) {
            Ok(v) => {
                if v < best_value {
                    best_value = v;
                    best_w = Some(w.to_vec());
                }
            }
            Err(e) => first_err = Some(e),
        }
    });
    if let Some(e) = first_err {
        return Err(e);
    }
    let w = best_w.ok_or_else(|| Error::InvalidArgument("empty grid".into()))?;
    Ok((BlendWeights::new(w)?, best_value))
}

/// Outcome of checking the closed-form blend against brute force and the
/// equal-weight baseline on one scenario.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OptimalityReport {
    pub estimators: usize,
    pub grid_step: f64,
    /// Whether the scenario's target noise has zero cross terms.
    pub assumption_satisfied: bool,
    /// Matrix-form closed weights (reduces to the diagonal form when the
    /// assumption holds).
    pub closed_weights: Vec<f64>,
    pub closed_ogr2: Ogr2Estimate,
    /// Diagonal-formula weights computed from diag(Σ) only.
    pub uncorrelated_weights: Vec<f64>,
    pub uncorrelated_ogr2: Ogr2Estimate,
    pub grid_weights: Vec<f64>,
    pub grid_ogr2: f64,
    pub equal_ogr2: Ogr2Estimate,
    pub weight_linf_closed_vs_grid: f64,
    /// closed ≤ grid + tolerance
    pub optimality_pass: bool,
    /// matrix form ≤ diagonal form + Monte-Carlo standard error
    pub correlated_dominates: bool,
    /// equal weights never beat the closed form beyond tolerance
    pub equal_not_better: bool,
    pub rejected_trials: usize,
}

/// Runs the full comparison for a scenario: closed forms (both noise
/// models), exhaustive grid search, and equal weights, all on one shared
/// trial bank.
pub fn verify_closed_form_optimality(scenario: &GradientScenario, grid_step: f64) -> Result<OptimalityReport> {
    let bank = scenario.realize()?;
    let stats = scenario.stats();
    let assumption_satisfied = match &stats.noise {
        NoiseStats::Diagonal(_) => true,
        NoiseStats::Full(m) => m.is_diagonal(1e-12 * (1.0 + m.norm_one())),
    };

    let closed = blend::optimal_weights_correlated(&stats)?;
    let diag: Vec<f64> = match &stats.noise {
        NoiseStats::Diagonal(d) => d.clone(),
        NoiseStats::Full(m) => (0..m.size()).map(|i| m.get(i, i)).collect(),
    };
    let uncorrelated = blend::optimal_weights_uncorrelated(&GradientStats {
        inner: stats.inner.clone(),
        noise: NoiseStats::Diagonal(diag),
    })?;
    let equal = BlendWeights::uniform(scenario.estimator_count());

    let closed_ogr2 = empirical_ogr2(&bank, &closed)?;
    let uncorrelated_ogr2 = empirical_ogr2(&bank, &uncorrelated)?;
    let equal_ogr2 = empirical_ogr2(&bank, &equal)?;
    let (grid_weights, grid_value) = grid_search_simplex(&bank, grid_step)?;

    let weight_linf = closed.linf_distance(&grid_weights);
    let optimality_pass = closed_ogr2.mean <= grid_value + OPTIMALITY_TOLERANCE;
    let correlated_dominates =
        closed_ogr2.mean <= uncorrelated_ogr2.mean + uncorrelated_ogr2.std_error.max(1e-12);
    let equal_not_better = equal_ogr2.mean + OPTIMALITY_TOLERANCE >= closed_ogr2.mean;

    Ok(OptimalityReport {
        estimators: scenario.estimator_count(),
        grid_step,
        assumption_satisfied,
        closed_weights: closed.as_slice().to_vec(),
        closed_ogr2,
        uncorrelated_weights: uncorrelated.as_slice().to_vec(),
        uncorrelated_ogr2,
        grid_weights: grid_weights.as_slice().to_vec(),
        grid_ogr2: grid_value,
        equal_ogr2,
        weight_linf_closed_vs_grid: weight_linf,
        optimality_pass,
        correlated_dominates,
        equal_not_better,
        rejected_trials: closed_ogr2.rejected,
    })
}

impl GradientScenario {
    /// Random scenario with diagonal noise (assumption satisfied).
    pub fn random_uncorrelated(k: usize, dim: usize, trials: usize, seed: u64) -> Self {
        let root = RngSeed(seed);
        let mut rng = root.derive("scenario").stream();
        let true_grad: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let inner: Vec<f64> = (0..k).map(|_| rng.gen_range(0.5..2.0)).collect();
        let sigma2: Vec<f64> = (0..k).map(|_| rng.gen_range(0.25..4.0)).collect();
        GradientScenario {
            dim,
            true_grad,
            inner,
            noise: NoiseStats::Diagonal(sigma2),
            ambient_noise: 0.1,
            trials,
            seed: root.derive("trials").0,
        }
    }

    /// Correlated scenario with substantial off-diagonal structure, retried
    /// until Σ is positive definite and Σ⁻¹·inner stays inside the simplex
    /// cone.
    pub fn random_correlated(k: usize, dim: usize, trials: usize, seed: u64) -> Self {
        let root = RngSeed(seed);
        for attempt in 0..10_000 {
            let mut rng = root.derive(&format!("corr:{}", attempt)).stream();
            let true_grad: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let inner: Vec<f64> = (0..k).map(|_| rng.gen_range(0.8..1.6)).collect();
            let sd: Vec<f64> = (0..k).map(|_| rng.gen_range(0.6..1.8)).collect();
            let mut sigma = SquareMatrix::zeros(k);
            for (a, s) in sd.iter().enumerate() {
                sigma.set(a, a, s * s);
            }
            for a in 0..k {
                for b in (a + 1)..k {
                    let magnitude = rng.gen_range(0.25..0.55);
                    let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
                    let cov = sign * magnitude * sd[a] * sd[b];
                    sigma.set(a, b, cov);
                    sigma.set(b, a, cov);
                }
            }
            if sigma.cholesky().is_err() {
                continue;
            }
            let Ok(inv) = sigma.inverse() else { continue };
            let raw = inv.matvec(&inner);
            if raw.iter().any(|&v| v <= 0.0) {
                continue;
            }
            return GradientScenario {
                dim,
                true_grad,
                inner,
                noise: NoiseStats::Full(sigma),
                ambient_noise: 0.1,
                trials,
                seed: root.derive(&format!("trials:{}", attempt)).0,
            };
        }
        unreachable!("rejection sampling failed to terminate");
    }
}

/// Quadratic landscape with a linear train/true gap:
/// `L*(θ) = ½(θ−θ*)ᵀA(θ−θ*)` and `L^T(θ) = L*(θ) + cᵀθ`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadraticLandscape {
    pub curvature: SquareMatrix,
    pub theta_star: Vec<f64>,
    pub train_shift: Vec<f64>,
}

impl QuadraticLandscape {
    pub fn true_loss(&self, theta: &[f64]) -> f64 {
        let diff: Vec<f64> = theta
            .iter()
            .zip(&self.theta_star)
            .map(|(a, b)| a - b)
            .collect();
        0.5 * self.curvature.quadratic_form(&diff)
    }

    pub fn train_loss(&self, theta: &[f64]) -> f64 {
        self.true_loss(theta) + dot(&self.train_shift, theta)
    }

    pub fn true_grad(&self, theta: &[f64]) -> Vec<f64> {
        let diff: Vec<f64> = theta
            .iter()
            .zip(&self.theta_star)
            .map(|(a, b)| a - b)
            .collect();
        self.curvature.matvec(&diff)
    }

    pub fn train_grad(&self, theta: &[f64]) -> Vec<f64> {
        self.true_grad(theta)
            .iter()
            .zip(&self.train_shift)
            .map(|(a, b)| a + b)
            .collect()
    }
}

/// First-order check of the step approximations on the quadratic landscape.
/// The residual of ΔG ≈ η⟨∇L*, ĝ⟩ is exactly ½η²ĝᵀAĝ, so halving η must
/// quarter it; ΔO ≈ η⟨∇L^T−∇L*, ĝ⟩ is exact because the gap is linear.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TaylorReport {
    pub eta: f64,
    pub delta_g_coarse: f64,
    pub delta_o_coarse: f64,
    pub residual_g_coarse: f64,
    pub residual_g_fine: f64,
    pub residual_o_max: f64,
    pub ratio: f64,
    pub pass: bool,
}

pub fn taylor_step_check(
    landscape: &QuadraticLandscape,
    theta0: &[f64],
    step_dir: &[f64],
    eta: f64,
) -> Result<TaylorReport> {
    if eta <= 0.0 {
        return Err(Error::InvalidArgument("step size must be positive".into()));
    }
    if dot(step_dir, step_dir) == 0.0 {
        return Err(Error::InvalidArgument("step direction must be nonzero".into()));
    }
    let true_grad = landscape.true_grad(theta0);
    let gap_grad = &landscape.train_shift;

    let measure = |eta: f64| -> (f64, f64, f64, f64) {
        let theta1: Vec<f64> = theta0
            .iter()
            .zip(step_dir)
            .map(|(t, g)| t + eta * g)
            .collect();
        let delta_g = landscape.true_loss(&theta1) - landscape.true_loss(theta0);
        let delta_train = landscape.train_loss(&theta1) - landscape.train_loss(theta0);
        let delta_o = delta_train - delta_g;
        let first_order_g = eta * dot(&true_grad, step_dir);
        let first_order_o = eta * dot(gap_grad, step_dir);
        (
            delta_g,
            delta_o,
            (delta_g - first_order_g).abs(),
            (delta_o - first_order_o).abs(),
        )
    };

    let (dg, do_, res_g_coarse, res_o_coarse) = measure(eta);
    let (_, _, res_g_fine, res_o_fine) = measure(eta / 2.0);
    let ratio = if res_g_fine > 0.0 {
        res_g_coarse / res_g_fine
    } else {
        // both residuals identically zero: the first order was exact
        4.0
    };
    let scale = dg.abs().max(do_.abs()).max(1.0);
    let pass = (3.5..=4.5).contains(&ratio) && res_o_coarse.max(res_o_fine) <= 1e-10 * scale;
    Ok(TaylorReport {
        eta,
        delta_g_coarse: dg,
        delta_o_coarse: do_,
        residual_g_coarse: res_g_coarse,
        residual_g_fine: res_g_fine,
        residual_o_max: res_o_coarse.max(res_o_fine),
        ratio,
        pass,
    })
}

/// Multi-step aggregate of the per-step OGR contributions (learning-rate
/// weighted), following the step direction −∇L^T. A logged diagnostic, not
/// an objective.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AggregatedOgr {
    pub numerator: f64,
    pub denominator: f64,
    pub ratio: Option<f64>,
    pub steps: usize,
}

pub fn aggregated_ogr(
    landscape: &QuadraticLandscape,
    theta0: &[f64],
    eta: f64,
    steps: usize,
) -> AggregatedOgr {
    let mut theta = theta0.to_vec();
    let mut numerator = 0.0;
    let mut denominator = 0.0;
    for _ in 0..steps {
        let ghat: Vec<f64> = landscape.train_grad(&theta).iter().map(|g| -g).collect();
        let true_grad = landscape.true_grad(&theta);
        numerator += eta * dot(&landscape.train_shift, &ghat);
        denominator += eta * dot(&true_grad, &ghat);
        for (t, g) in theta.iter_mut().zip(&ghat) {
            *t += eta * g;
        }
    }
    let ratio = if denominator.abs() < DENOMINATOR_EPSILON {
        None
    } else {
        Some((numerator / denominator).abs())
    };
    AggregatedOgr {
        numerator,
        denominator,
        ratio,
        steps,
    }
}
