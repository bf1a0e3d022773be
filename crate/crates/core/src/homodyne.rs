//! Homodyne detection of a squeezed vacuum and the two-step homodyne scheme.
//!
//! The measured quadrature at local-oscillator angle `θ'` is
//! `P' = Q sin θ' + P cos θ'`. For a squeezed vacuum at phase `θ` its outcomes
//! are zero-mean normal with variance
//! `σ²(θ', θ) = [1 + s⁴ + (1 - s⁴) cos 2(θ' - θ)] / (4s²)`.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::angle::{acos_checked, acos_clamped, wrap_half_pi, wrapped_distance};
use crate::dyne::limiting_angle;
use crate::error::{Error, Result};
use crate::experiment::{EstimationRecord, ExperimentConfig, LoSide, TrialData};
use crate::gaussian::GaussianPureState;

pub fn quadrature_variance(s: f64, theta_prime: f64, theta: f64) -> f64 {
    let s4 = s.powi(4);
    (1.0 + s4 + (1.0 - s4) * (2.0 * (theta_prime - theta)).cos()) / (4.0 * s * s)
}

/// Outcomes of homodyning a batch of copies at one angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomodyneBatch {
    pub theta_prime: f64,
    pub outcomes: Vec<f64>,
}

impl HomodyneBatch {
    pub fn new(theta_prime: f64, outcomes: Vec<f64>) -> Self {
        Self {
            theta_prime,
            outcomes,
        }
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// `Σ p_i² / N̄`, the sufficient statistic for a zero-mean normal.
    pub fn second_moment(&self) -> Option<f64> {
        if self.outcomes.is_empty() {
            return None;
        }
        Some(self.outcomes.iter().map(|x| x * x).sum::<f64>() / self.outcomes.len() as f64)
    }
}

pub fn sample_homodyne<R: Rng + ?Sized>(
    state: &GaussianPureState,
    theta_prime: f64,
    copies: u64,
    rng: &mut R,
) -> Result<HomodyneBatch> {
    if !state.is_squeezed_vacuum() {
        return Err(Error::invalid(
            "alpha",
            "homodyne sampling supports squeezed vacuum only",
        ));
    }
    let sd = quadrature_variance(state.s(), theta_prime, state.theta).sqrt();
    let normal = Normal::new(0.0, sd).map_err(|e| Error::invalid("sigma", e.to_string()))?;
    let outcomes = (0..copies).map(|_| normal.sample(rng)).collect();
    Ok(HomodyneBatch::new(theta_prime, outcomes))
}

/// `(∂_θ σ²)² / (2σ⁴)`
pub fn homodyne_fisher(s: f64, theta_prime: f64, theta: f64) -> f64 {
    let var = quadrature_variance(s, theta_prime, theta);
    let s4 = s.powi(4);
    let dvar = (1.0 - s4) * (2.0 * (theta_prime - theta)).sin() / (2.0 * s * s);
    dvar * dvar / (2.0 * var * var)
}

fn check_s_open(s: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(
            "s",
            format!("homodyne estimation needs a squeezed signal, s in (0, 1), got {s}"),
        ));
    }
    Ok(())
}

/// Solves `σ²(θ', θ) = v` for `cos 2(θ' - θ)`.
fn cos_argument(s: f64, v: f64) -> f64 {
    let s4 = s.powi(4);
    (4.0 * s * s * v - 1.0 - s4) / (1.0 - s4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HomodyneEstimate {
    pub theta: f64,
    /// The other root of the likelihood condition.
    pub other_branch: f64,
    /// The raw `cos 2(θ' - θ)` argument, before clamping.
    pub argument: f64,
}

/// Maximum-likelihood phase from one batch, picking the root nearer `theta_guess`.
pub fn homodyne_mle(batch: &HomodyneBatch, theta_guess: f64, s: f64) -> Result<HomodyneEstimate> {
    check_s_open(s)?;
    let v = batch
        .second_moment()
        .ok_or(Error::Empty("homodyne batch"))?;
    let argument = cos_argument(s, v);
    let half = 0.5 * acos_clamped(argument);
    let minus = wrap_half_pi(batch.theta_prime - half);
    let plus = wrap_half_pi(batch.theta_prime + half);
    let (theta, other_branch) =
        if wrapped_distance(minus, theta_guess) <= wrapped_distance(plus, theta_guess) {
            (minus, plus)
        } else {
            (plus, minus)
        };
    Ok(HomodyneEstimate {
        theta,
        other_branch,
        argument,
    })
}

/// `arccos[(4s²σ²(θ', θ) - 1 - s⁴)/(1 - s⁴)]`, the separation between the two
/// likelihood maxima, which does not shrink with the sample size.
pub fn wrong_branch_bias(s: f64, theta_prime: f64, theta: f64) -> Result<f64> {
    check_s_open(s)?;
    acos_checked(cos_argument(s, quadrature_variance(s, theta_prime, theta)))
}

/// Number of copies for the rough first step, `⌈N^α⌉`.
///
/// Values of `N^α` within float noise of an integer are rounded instead, so
/// `1000^(2/3)` gives 100 rather than 101.
pub fn rough_copies(total: u64, split_exponent: f64) -> u64 {
    let x = (total as f64).powf(split_exponent);
    let nearest = x.round();
    if (x - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest as u64
    } else {
        x.ceil() as u64
    }
}

/// Moment-based rough phase estimate.
///
/// Half the copies (the larger half) are homodyned at `θ' = 0` and the rest at
/// `θ' = π/4`. Their second moments give `cos 2θ` and `sin 2θ`, clamped to
/// `[-1, 1]`, and the estimate is `atan2(sin 2θ, cos 2θ) / 2`.
pub fn rough_estimate<R: Rng + ?Sized>(
    state: &GaussianPureState,
    copies: u64,
    rng: &mut R,
) -> Result<f64> {
    let s = state.s();
    check_s_open(s)?;
    if copies < 2 {
        return Err(Error::invalid(
            "copies",
            "the rough estimate needs at least two copies",
        ));
    }
    let first = copies.div_ceil(2);
    let b0 = sample_homodyne(state, 0.0, first, rng)?;
    let b1 = sample_homodyne(state, std::f64::consts::FRAC_PI_4, copies - first, rng)?;
    let cos2 = cos_argument(s, b0.second_moment().expect("non-empty")).clamp(-1.0, 1.0);
    // cos 2(π/4 - θ) = sin 2θ
    let sin2 = cos_argument(s, b1.second_moment().expect("non-empty")).clamp(-1.0, 1.0);
    Ok(wrap_half_pi(0.5 * sin2.atan2(cos2)))
}

/// Prepared two-step homodyne scheme for one configuration.
#[derive(Debug, Clone)]
pub struct HomodyneExperiment {
    state: GaussianPureState,
    rough: u64,
    second: u64,
    /// `Φ(s)/2`, signed by the local-oscillator side.
    offset: f64,
}

impl HomodyneExperiment {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let state = GaussianPureState::squeezed_vacuum(config.r, config.theta_true);
        check_s_open(state.s())?;
        let half = 0.5 * limiting_angle(state.s())?;
        let offset = match config.lo_side {
            LoSide::Plus => half,
            LoSide::Minus => -half,
        };
        Ok(Self {
            state,
            rough: config.rough_copies(),
            second: config.second_step_copies(),
            offset,
        })
    }

    pub fn run_trial<R: Rng + ?Sized>(
        &self,
        trial_index: u64,
        rng: &mut R,
    ) -> Result<EstimationRecord> {
        let theta_rough = rough_estimate(&self.state, self.rough, rng)?;
        let theta_prime = theta_rough + self.offset;
        let batch = sample_homodyne(&self.state, theta_prime, self.second, rng)?;
        let est = homodyne_mle(&batch, theta_rough, self.state.s())?;
        let truth = self.state.theta;
        let branch_flipped =
            wrapped_distance(est.theta, truth) > wrapped_distance(est.other_branch, truth);
        Ok(EstimationRecord::new(
            trial_index,
            theta_rough,
            est.theta,
            truth,
            branch_flipped,
            TrialData::Homodyne {
                theta_prime,
                second_moment: batch.second_moment().expect("non-empty"),
                other_branch: est.other_branch,
            },
        ))
    }
}

/// One trial of the two-step homodyne scheme.
pub fn two_step_homodyne_experiment<R: Rng + ?Sized>(
    config: &ExperimentConfig,
    rng: &mut R,
) -> Result<EstimationRecord> {
    HomodyneExperiment::new(config)?.run_trial(0, rng)
}
