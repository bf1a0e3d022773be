//! Seeded, parallel Monte Carlo runs of the two-step schemes.
//!
//! Trial `k` draws from its own ChaCha8 stream seeded with the `k`-th output of
//! a splitmix64 generator started at the master seed, i.e.
//! `mix(seed + (k + 1)·0x9E3779B97F4A7C15)` with the splitmix64 finalizer.
//! Trials run on the rayon pool and are collected in index order, so results
//! do not depend on the number of worker threads.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{EstimationRecord, ExperimentConfig, OutputFormat, Scheme};
use crate::homodyne::HomodyneExperiment;
use crate::povm::PovmExperiment;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn splitmix64_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn trial_seed(seed: u64, trial_index: u64) -> u64 {
    splitmix64_mix(
        seed.wrapping_add(
            trial_index
                .wrapping_add(1)
                .wrapping_mul(0x9E37_79B9_7F4A_7C15),
        ),
    )
}

pub fn trial_rng(seed: u64, trial_index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(trial_seed(seed, trial_index))
}

enum Runner {
    Povm(PovmExperiment),
    Homodyne(HomodyneExperiment),
}

impl Runner {
    fn new(config: &ExperimentConfig) -> Result<Self> {
        Ok(match config.scheme {
            Scheme::Povm => Runner::Povm(PovmExperiment::new(config)?),
            Scheme::Homodyne => Runner::Homodyne(HomodyneExperiment::new(config)?),
        })
    }

    fn run(&self, seed: u64, k: u64) -> Result<EstimationRecord> {
        let mut rng = trial_rng(seed, k);
        match self {
            Runner::Povm(e) => e.run_trial(k, &mut rng),
            Runner::Homodyne(e) => e.run_trial(k, &mut rng),
        }
    }
}

/// Runs every trial on the current rayon pool.
pub fn run_trials(config: &ExperimentConfig) -> Result<Vec<EstimationRecord>> {
    let runner = Runner::new(config)?;
    (0..config.trials)
        .into_par_iter()
        .map(|k| runner.run(config.seed, k))
        .collect()
}

/// Runs `f` on a dedicated rayon pool with `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if workers == 0 {
        return Err(Error::invalid("workers", "must be at least 1"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid("workers", e.to_string()))?;
    Ok(pool.install(f))
}

/// [`run_trials`] on a dedicated pool with `workers` threads.
pub fn run_trials_with_workers(
    config: &ExperimentConfig,
    workers: usize,
) -> Result<Vec<EstimationRecord>> {
    with_workers(workers, || run_trials(config))?
}

/// Error moments of one batch of trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStatistics {
    pub trials: u64,
    pub mean_bias: f64,
    /// Population variance, so that `mse = variance + mean_bias²`.
    pub variance: f64,
    pub mse: f64,
    /// Sample standard deviation of the squared errors over `√trials`.
    pub mse_standard_error: f64,
}

impl ErrorStatistics {
    pub fn from_errors(errors: &[f64]) -> Result<Self> {
        if errors.is_empty() {
            return Err(Error::Empty("errors"));
        }
        let n = errors.len() as f64;
        let mean_bias = errors.iter().sum::<f64>() / n;
        let variance = errors.iter().map(|e| (e - mean_bias).powi(2)).sum::<f64>() / n;
        let (mse, se) = crate::stats::mean_and_standard_error(errors.iter().map(|e| e * e));
        Ok(Self {
            trials: errors.len() as u64,
            mean_bias,
            variance,
            mse,
            mse_standard_error: if se.is_nan() { 0.0 } else { se },
        })
    }
}

/// One aggregated row of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub total_copies: u64,
    pub trials: u64,
    pub mean_bias: f64,
    pub variance: f64,
    pub mse: f64,
    pub mse_standard_error: f64,
    pub n_times_mse: f64,
    /// `1/H`
    pub heisenberg_reference: f64,
    /// `N · MSE · H`, which tends to 1 when the Heisenberg limit is attained.
    pub ratio: f64,
    pub branch_flip_rate: f64,
}

pub fn aggregate(records: &[EstimationRecord], config: &ExperimentConfig) -> Result<SweepRow> {
    let errors: Vec<f64> = records.iter().map(|r| r.wrapped_error).collect();
    let stats = ErrorStatistics::from_errors(&errors)?;
    let n = config.total_copies as f64;
    let reference = config.heisenberg_reference();
    let flips = records.iter().filter(|r| r.branch_flipped).count();
    Ok(SweepRow {
        total_copies: config.total_copies,
        trials: stats.trials,
        mean_bias: stats.mean_bias,
        variance: stats.variance,
        mse: stats.mse,
        mse_standard_error: stats.mse_standard_error,
        n_times_mse: n * stats.mse,
        heisenberg_reference: reference,
        ratio: n * stats.mse / reference,
        branch_flip_rate: flips as f64 / records.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub version: String,
    pub config: ExperimentConfig,
    pub rows: Vec<SweepRow>,
}

/// One aggregated row per total copy count, each run with the base seed.
pub fn convergence_sweep(base: &ExperimentConfig, copies: &[u64]) -> Result<SweepResult> {
    if copies.is_empty() {
        return Err(Error::Empty("copy counts"));
    }
    if copies.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid("copies", "must be strictly ascending"));
    }
    let rows = copies
        .iter()
        .map(|&n| {
            let config = ExperimentConfig {
                total_copies: n,
                ..base.clone()
            };
            aggregate(&run_trials(&config)?, &config)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult {
        version: VERSION.to_string(),
        config: base.clone(),
        rows,
    })
}

pub const CSV_HEADER: &str =
    "trial,theta_rough,theta_hat,wrapped_error,squared_error,branch_flipped";

/// Writes per-trial records. Floats use the shortest representation that
/// parses back to the same value (`{:?}` switches to exponent form for tiny errors).
pub fn write_records_csv<W: Write>(mut out: W, records: &[EstimationRecord]) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{:?},{:?},{:?},{:?},{}",
            r.trial_index,
            r.theta_rough,
            r.theta_hat,
            r.wrapped_error,
            r.squared_error,
            r.branch_flipped
        )?;
    }
    Ok(())
}

/// A single-run document: summary plus every record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunDocument {
    #[serde(flatten)]
    pub summary: SweepResult,
    pub records: Vec<EstimationRecord>,
}

/// `<dir>/<stem>.summary.json` next to a CSV output.
pub fn summary_path(output_path: &Path) -> PathBuf {
    let stem = output_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "results".into());
    output_path.with_file_name(format!("{stem}.summary.json"))
}

/// Persists a run according to `config.output_format`: CSV records plus a
/// JSON summary alongside, or one JSON document. Returns the files written.
pub fn write_outputs(
    config: &ExperimentConfig,
    records: &[EstimationRecord],
) -> Result<Vec<PathBuf>> {
    let summary = SweepResult {
        version: VERSION.to_string(),
        config: config.clone(),
        rows: vec![aggregate(records, config)?],
    };
    let path = config.output_path.clone();
    match config.output_format {
        OutputFormat::Csv => {
            let mut out = BufWriter::new(File::create(&path)?);
            write_records_csv(&mut out, records)?;
            out.flush()?;
            let json_path = summary_path(&path);
            write_json(&json_path, &summary)?;
            Ok(vec![path, json_path])
        }
        OutputFormat::Json => {
            let doc = RunDocument {
                summary,
                records: records.to_vec(),
            };
            write_json(&path, &doc)?;
            Ok(vec![path])
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::TrialData;
    use proptest::prelude::*;

    fn record(k: u64, err: f64) -> EstimationRecord {
        let data = TrialData::Homodyne {
            theta_prime: 0.0,
            second_moment: 1.0,
            other_branch: 0.0,
        };
        EstimationRecord::new(k, 0.0, err, 0.0, false, data)
    }

    fn config(scheme: Scheme, n: u64, trials: u64) -> ExperimentConfig {
        ExperimentConfig::new(scheme, 1.0, 0.7, n, trials, 42)
    }

    #[test]
    fn seeds_differ_per_trial() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|k| trial_seed(7, k)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(trial_seed(7, 0), trial_seed(8, 0));
        // First output of splitmix64 seeded with 0.
        assert_eq!(trial_seed(0, 0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn aggregate_cases() {
        let c = config(Scheme::Homodyne, 100, 2);
        let zero = aggregate(&[record(0, 0.0), record(1, 0.0)], &c).unwrap();
        assert_eq!(zero.mse, 0.0);
        assert_eq!(zero.mse_standard_error, 0.0);
        let sym = aggregate(&[record(0, 0.1), record(1, -0.1)], &c).unwrap();
        assert!(sym.mean_bias.abs() < 1e-15);
        assert!((sym.mse - 0.01).abs() < 1e-17);
        assert!(aggregate(&[], &c).is_err());
    }

    proptest! {
        #[test]
        fn mse_decomposition(errors in prop::collection::vec(-1.5f64..1.5, 1..200)) {
            let s = ErrorStatistics::from_errors(&errors).unwrap();
            prop_assert!(s.mse >= 0.0);
            prop_assert!((s.mse - (s.variance + s.mean_bias * s.mean_bias)).abs() <= 1e-12);
        }
    }

    #[test]
    fn runs_are_reproducible_and_substreams_independent() {
        for scheme in [Scheme::Povm, Scheme::Homodyne] {
            let a = run_trials(&config(scheme, 10_000, 8)).unwrap();
            let b = run_trials(&config(scheme, 10_000, 8)).unwrap();
            assert_eq!(a, b);
            let one = run_trials(&config(scheme, 10_000, 1)).unwrap();
            let two = run_trials(&config(scheme, 10_000, 2)).unwrap();
            assert_eq!(one[0], two[0]);
            assert!(a.iter().all(|r| r.wrapped_error.is_finite()
                && r.wrapped_error.abs() <= std::f64::consts::FRAC_PI_2));
            assert!(a.iter().enumerate().all(|(k, r)| r.trial_index == k as u64));
        }
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let c = config(Scheme::Povm, 5_000, 16);
        assert_eq!(
            run_trials_with_workers(&c, 1).unwrap(),
            run_trials_with_workers(&c, 4).unwrap()
        );
    }

    #[test]
    fn standard_error_scales_with_trials() {
        let c = config(Scheme::Homodyne, 1_000, 4000);
        let big = aggregate(&run_trials(&c).unwrap(), &c).unwrap();
        let c2 = ExperimentConfig {
            trials: 2000,
            ..c.clone()
        };
        let small = aggregate(&run_trials(&c2).unwrap(), &c2).unwrap();
        let ratio = small.mse_standard_error / big.mse_standard_error;
        assert!((ratio - 2f64.sqrt()).abs() < 0.35, "{ratio}");
    }

    #[test]
    fn sweep_requires_ascending() {
        let c = config(Scheme::Homodyne, 1_000, 2);
        assert!(convergence_sweep(&c, &[1000, 100]).is_err());
        assert!(convergence_sweep(&c, &[]).is_err());
        let result = convergence_sweep(&c, &[100, 1000]).unwrap();
        assert_eq!(result.rows.len(), 2);
        assert_eq!(result.rows[1].total_copies, 1000);
    }

    #[test]
    fn csv_and_json_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = config(Scheme::Homodyne, 1_000, 5);
        c.output_path = dir.path().join("run.csv");
        let records = run_trials(&c).unwrap();
        let written = write_outputs(&c, &records).unwrap();
        assert_eq!(written[1], dir.path().join("run.summary.json"));
        let text = std::fs::read_to_string(&written[0]).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(CSV_HEADER));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[3].parse::<f64>().unwrap(), records[0].wrapped_error);
        assert_eq!(text.lines().count(), 6);
        let summary: SweepResult =
            serde_json::from_str(&std::fs::read_to_string(&written[1]).unwrap()).unwrap();
        assert_eq!(summary.config, c);
        assert_eq!(summary.version, VERSION);

        c.output_format = OutputFormat::Json;
        c.output_path = dir.path().join("run.json");
        let written = write_outputs(&c, &records).unwrap();
        let doc: RunDocument =
            serde_json::from_str(&std::fs::read_to_string(&written[0]).unwrap()).unwrap();
        assert_eq!(doc.records, records);
    }
}
