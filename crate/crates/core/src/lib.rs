//! Phase estimation with squeezed vacuum probes.
//!
//! Closed-form Gaussian quantities live in [`gaussian`] and [`dyne`], the
//! brute-force truncated Fock oracle in [`fock`], the estimators in [`povm`]
//! and [`homodyne`], and seeded Monte Carlo orchestration in [`harness`].

pub mod angle;
pub mod dyne;
pub mod error;
pub mod experiment;
pub mod fock;
pub mod gaussian;
pub mod harness;
pub mod homodyne;
pub mod povm;
pub mod quad;
pub mod stats;

pub use dyne::{BestDyne, DyneConfig, DyneRegime};
pub use error::{Error, Result};
pub use experiment::{
    EstimationRecord, ExperimentConfig, LoSide, OutputFormat, PovmEstimator, Scheme, TrialData,
};
pub use fock::{OutcomeProbabilities, ThreeOutcomeModel, TruncatedState};
pub use gaussian::{CovarianceMatrix, GaussianPureState};
pub use harness::{SweepResult, SweepRow};
pub use homodyne::HomodyneBatch;
pub use povm::{MleEstimate, ThreeOutcomeCounts};
