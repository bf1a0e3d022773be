//! Small summary statistics used by the estimators and the harness.

/// Sample mean and standard error (sample standard deviation over `√n`).
/// Returns `(NaN, NaN)` for an empty input and `(x, NaN)` for a single value.
pub fn mean_and_standard_error(values: impl IntoIterator<Item = f64>) -> (f64, f64) {
    // Welford
    let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    for x in values {
        n += 1;
        let d = x - mean;
        mean += d / n as f64;
        m2 += d * (x - mean);
    }
    match n {
        0 => (f64::NAN, f64::NAN),
        1 => (mean, f64::NAN),
        _ => (mean, (m2 / (n - 1) as f64 / n as f64).sqrt()),
    }
}
