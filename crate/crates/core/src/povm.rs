//! Estimation with the three-outcome SLD measurement.
//!
//! After a rough guess `θ̂₀`, each remaining copy is measured with the
//! `{E₊, E₋, E₀}` POVM built at `θ̂₀`. For a small offset `δθ = θ - θ̂₀`,
//! `p± ≈ 1/2 ± ⟨Δn⟩ δθ` and `p₀ = O(δθ⁴)`, so almost every copy lands in one
//! of the two informative outcomes.

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{EstimationRecord, ExperimentConfig, PovmEstimator, TrialData};
use crate::fock::{OutcomeProbabilities, ThreeOutcomeModel};
use crate::gaussian::GaussianPureState;
use crate::homodyne::rough_estimate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ThreeOutcomeCounts {
    pub n_plus: u64,
    pub n_minus: u64,
    pub n_zero: u64,
}

impl ThreeOutcomeCounts {
    pub fn new(n_plus: u64, n_minus: u64, n_zero: u64) -> Self {
        Self {
            n_plus,
            n_minus,
            n_zero,
        }
    }

    pub fn total(&self) -> u64 {
        self.n_plus + self.n_minus + self.n_zero
    }

    /// `N_inf = N₊ + N₋`
    pub fn informative(&self) -> u64 {
        self.n_plus + self.n_minus
    }
}

fn binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("p in (0, 1)").sample(rng)
}

/// Multinomial draw, as a binomial for `+` and then a conditional binomial for `-`.
pub fn sample_three_outcome<R: Rng + ?Sized>(
    probs: &OutcomeProbabilities,
    copies: u64,
    rng: &mut R,
) -> ThreeOutcomeCounts {
    let n_plus = binomial(copies, probs.p_plus, rng);
    let rest = copies - n_plus;
    let remaining_mass = 1.0 - probs.p_plus;
    let p_minus = if remaining_mass > 0.0 {
        (probs.p_minus / remaining_mass).min(1.0)
    } else {
        0.0
    };
    let n_minus = binomial(rest, p_minus, rng);
    ThreeOutcomeCounts::new(n_plus, n_minus, rest - n_minus)
}

/// `θ̂₀ + (N₊ - N₋) / (2 N_inf Δn)`, or `θ̂₀` when no informative outcome occurred.
pub fn approximate_mle(counts: &ThreeOutcomeCounts, theta_guess: f64, delta_n: f64) -> f64 {
    let n_inf = counts.informative();
    if n_inf == 0 {
        return theta_guess;
    }
    theta_guess + (counts.n_plus as f64 - counts.n_minus as f64) / (2.0 * n_inf as f64 * delta_n)
}

/// Half-width of the exact-MLE search window around the rough guess.
pub const MLE_WINDOW: f64 = 0.5;
const MLE_GRID_STEP: f64 = 0.005;
const MLE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleEstimate {
    pub theta: f64,
    /// No informative outcomes: the likelihood carries no first-order
    /// information and the rough guess is returned.
    pub degenerate: bool,
}

/// Multinomial log-likelihood of `counts` for a true phase `theta`.
pub fn log_likelihood(
    model: &ThreeOutcomeModel,
    counts: &ThreeOutcomeCounts,
    theta_guess: f64,
    theta: f64,
) -> f64 {
    let p = model.probabilities(theta - theta_guess);
    let term = |n: u64, p: f64| if n == 0 { 0.0 } else { n as f64 * p.ln() };
    term(counts.n_plus, p.p_plus) + term(counts.n_minus, p.p_minus) + term(counts.n_zero, p.p_zero)
}

/// Maximizes the likelihood with a precomputed model.
///
/// A grid of step 0.005 over `θ̂₀ ± 0.5` locates the peak, and golden-section
/// search refines it within one grid step.
pub fn exact_mle_with_model(
    model: &ThreeOutcomeModel,
    counts: &ThreeOutcomeCounts,
    theta_guess: f64,
) -> MleEstimate {
    if counts.informative() == 0 {
        return MleEstimate {
            theta: theta_guess,
            degenerate: true,
        };
    }
    let ll = |theta: f64| log_likelihood(model, counts, theta_guess, theta);
    let steps = (2.0 * MLE_WINDOW / MLE_GRID_STEP).round() as i64;
    let lo = theta_guess - MLE_WINDOW;
    let (best, _) = (0..=steps)
        .map(|k| lo + k as f64 * MLE_GRID_STEP)
        .map(|t| (t, ll(t)))
        .fold((theta_guess, f64::NEG_INFINITY), |acc, x| {
            if x.1 > acc.1 {
                x
            } else {
                acc
            }
        });
    let a = (best - MLE_GRID_STEP).max(lo);
    let b = (best + MLE_GRID_STEP).min(theta_guess + MLE_WINDOW);
    MleEstimate {
        theta: golden_section_max(ll, a, b, MLE_TOLERANCE),
        degenerate: false,
    }
}

/// Builds the model and maximizes the likelihood.
pub fn exact_mle(
    counts: &ThreeOutcomeCounts,
    theta_guess: f64,
    r: f64,
    dim: usize,
) -> Result<MleEstimate> {
    Ok(exact_mle_with_model(
        &ThreeOutcomeModel::new(r, dim)?,
        counts,
        theta_guess,
    ))
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Leading-order `1 / (4 ⟨Δn⟩² N_inf)`.
///
/// `None` for `N_inf = 0`, where the caller's `δθ²` applies instead.
pub fn conditional_mse(n_informative: u64, delta_n: f64) -> Option<f64> {
    (n_informative > 0).then(|| 1.0 / (4.0 * delta_n * delta_n * n_informative as f64))
}

/// `E[1/N_inf]` over `N_inf ~ Binomial(N̄, p)` restricted to `N_inf ≥ 1`,
/// both by direct summation and by the second-order expansion
/// `(1/(N̄p)) (1 + (1-p)/(N̄p) - (1-p)^N̄)`.
pub fn averaged_inverse_ninf(copies: u64, p_informative: f64) -> Result<(f64, f64)> {
    if copies == 0 {
        return Err(Error::invalid("copies", "must be at least 1"));
    }
    let p = p_informative;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(
            "p_informative",
            format!("must lie in (0, 1], got {p}"),
        ));
    }
    let n = copies as f64;
    let q = 1.0 - p;
    let second_order = (1.0 + q / (n * p) - q.powf(n)) / (n * p);
    if q == 0.0 {
        return Ok((1.0 / n, second_order));
    }
    let (ln_p, ln_q) = (p.ln(), q.ln());
    let mut ln_choose = 0.0;
    let mut exact = 0.0;
    for k in 1..=copies {
        ln_choose += ((copies - k + 1) as f64).ln() - (k as f64).ln();
        let kf = k as f64;
        exact += (ln_choose + kf * ln_p + (n - kf) * ln_q).exp() / kf;
    }
    Ok((exact, second_order))
}

/// Prepared two-step POVM scheme for one configuration.
#[derive(Debug, Clone)]
pub struct PovmExperiment {
    model: ThreeOutcomeModel,
    state: GaussianPureState,
    rough: u64,
    second: u64,
    estimator: PovmEstimator,
}

impl PovmExperiment {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            model: ThreeOutcomeModel::new(config.r, config.truncation_dim)?,
            state: GaussianPureState::squeezed_vacuum(config.r, config.theta_true),
            rough: config.rough_copies(),
            second: config.second_step_copies(),
            estimator: config.povm_estimator,
        })
    }

    pub fn model(&self) -> &ThreeOutcomeModel {
        &self.model
    }

    pub fn run_trial<R: Rng + ?Sized>(
        &self,
        trial_index: u64,
        rng: &mut R,
    ) -> Result<EstimationRecord> {
        let theta_rough = rough_estimate(&self.state, self.rough, rng)?;
        let probs = self.model.probabilities(self.state.theta - theta_rough);
        let counts = sample_three_outcome(&probs, self.second, rng);
        let theta_approximate = approximate_mle(&counts, theta_rough, self.model.delta_n());
        let (theta_hat, degenerate) = match self.estimator {
            PovmEstimator::Approximate => (theta_approximate, counts.informative() == 0),
            PovmEstimator::Exact => {
                let est = exact_mle_with_model(&self.model, &counts, theta_rough);
                (est.theta, est.degenerate)
            }
        };
        Ok(EstimationRecord::new(
            trial_index,
            theta_rough,
            theta_hat,
            self.state.theta,
            false,
            TrialData::Povm {
                n_plus: counts.n_plus,
                n_minus: counts.n_minus,
                n_zero: counts.n_zero,
                theta_approximate,
                degenerate,
            },
        ))
    }
}

/// One trial of the two-step POVM scheme.
pub fn two_step_povm_experiment<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    rng: &mut R,
) -> Result<EstimationRecord> {
    PovmExperiment::new(config)?.run_trial(0, rng)
}
