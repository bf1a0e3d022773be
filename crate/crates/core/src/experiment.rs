//! Experiment configuration and per-trial records.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::angle::wrap_half_pi;
use crate::error::{Error, Result};
use crate::fock::{check_dim, DEFAULT_DIM};
use crate::homodyne::rough_copies;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Povm,
    Homodyne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Second-step estimator for the POVM scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PovmEstimator {
    /// Numerical maximization of the three-outcome likelihood.
    #[default]
    Exact,
    /// The linearized closed form `θ̂₀ + (N₊ - N₋)/(2 N_inf Δn)`.
    Approximate,
}

/// Which side of the rough estimate the homodyne local oscillator sits on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoSide {
    /// `θ' = θ̂₀ + Φ(s)/2`
    #[default]
    Plus,
    /// `θ' = θ̂₀ - Φ(s)/2`
    Minus,
}

pub const DEFAULT_SPLIT_EXPONENT: f64 = 2.0 / 3.0;

/// Full description of a two-step run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: Scheme,
    pub r: f64,
    pub theta_true: f64,
    pub total_copies: u64,
    pub split_exponent: f64,
    pub trials: u64,
    pub seed: u64,
    pub truncation_dim: usize,
    pub output_path: PathBuf,
    pub output_format: OutputFormat,
    #[serde(default)]
    pub povm_estimator: PovmEstimator,
    #[serde(default)]
    pub lo_side: LoSide,
}

impl ExperimentConfig {
    /// A config with the default split exponent, dimension and estimator.
    pub fn new(
        scheme: Scheme,
        r: f64,
        theta_true: f64,
        total_copies: u64,
        trials: u64,
        seed: u64,
    ) -> Self {
        Self {
            scheme,
            r,
            theta_true,
            total_copies,
            split_exponent: DEFAULT_SPLIT_EXPONENT,
            trials,
            seed,
            truncation_dim: DEFAULT_DIM,
            output_path: PathBuf::from("results.csv"),
            output_format: OutputFormat::Csv,
            povm_estimator: PovmEstimator::Exact,
            lo_side: LoSide::Plus,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.r.is_finite() && self.r > 0.0) {
            return Err(Error::invalid(
                "r",
                format!("must be finite and > 0, got {}", self.r),
            ));
        }
        if !self.theta_true.is_finite() {
            return Err(Error::invalid("theta_true", "must be finite"));
        }
        if self.total_copies < 4 {
            return Err(Error::invalid(
                "total_copies",
                format!("must be at least 4, got {}", self.total_copies),
            ));
        }
        if !(self.split_exponent > 0.5 && self.split_exponent < 1.0) {
            return Err(Error::invalid(
                "split_exponent",
                format!(
                    "must lie strictly between 1/2 and 1, got {}",
                    self.split_exponent
                ),
            ));
        }
        let rough = self.rough_copies();
        if rough >= self.total_copies {
            return Err(Error::invalid(
                "total_copies",
                format!("ceil(N^alpha) = {rough} leaves no copies for the second step"),
            ));
        }
        if rough < 2 {
            return Err(Error::invalid(
                "total_copies",
                "the rough step needs at least two copies",
            ));
        }
        if self.trials < 1 {
            return Err(Error::invalid("trials", "must be at least 1"));
        }
        check_dim(self.truncation_dim)?;
        Ok(())
    }

    /// `⌈N^α⌉`
    pub fn rough_copies(&self) -> u64 {
        rough_copies(self.total_copies, self.split_exponent)
    }

    /// `N̄ = N - ⌈N^α⌉`
    pub fn second_step_copies(&self) -> u64 {
        self.total_copies.saturating_sub(self.rough_copies())
    }

    /// `1/H` with `H = cosh 4r - 1`.
    pub fn heisenberg_reference(&self) -> f64 {
        1.0 / ((4.0 * self.r).cosh() - 1.0)
    }
}

/// Scheme-specific second-step data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum TrialData {
    Povm {
        n_plus: u64,
        n_minus: u64,
        n_zero: u64,
        /// The linearized estimate on the same counts, for comparison.
        theta_approximate: f64,
        degenerate: bool,
    },
    Homodyne {
        theta_prime: f64,
        second_moment: f64,
        other_branch: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRecord {
    pub trial_index: u64,
    pub theta_rough: f64,
    pub theta_hat: f64,
    /// `θ̂ - θ` wrapped into `(-π/2, π/2]`.
    pub wrapped_error: f64,
    pub squared_error: f64,
    pub branch_flipped: bool,
    pub data: TrialData,
}

impl EstimationRecord {
    pub fn new(
        trial_index: u64,
        theta_rough: f64,
        theta_hat: f64,
        theta_true: f64,
        branch_flipped: bool,
        data: TrialData,
    ) -> Self {
        let wrapped_error = wrap_half_pi(theta_hat - theta_true);
        Self {
            trial_index,
            theta_rough,
            theta_hat,
            wrapped_error,
            squared_error: wrapped_error * wrapped_error,
            branch_flipped,
            data,
        }
    }
}
