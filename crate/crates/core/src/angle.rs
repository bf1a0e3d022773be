//! Phase bookkeeping for π-periodic states.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};

/// Maps a phase difference into `(-π/2, π/2]`.
///
/// A squeezed vacuum is invariant under `θ → θ + π`, so phase estimates are
/// only meaningful modulo π.
pub fn wrap_half_pi(x: f64) -> f64 {
    let y = x.rem_euclid(PI);
    if y > FRAC_PI_2 {
        y - PI
    } else {
        y
    }
}

/// Distance between two phases modulo π.
pub fn wrapped_distance(a: f64, b: f64) -> f64 {
    wrap_half_pi(a - b).abs()
}

/// Slack allowed on arccos arguments before they count as out of domain.
pub const ACOS_CLAMP_TOLERANCE: f64 = 1e-12;

/// `arccos` that absorbs rounding excursions up to [`ACOS_CLAMP_TOLERANCE`]
/// and rejects anything larger.
pub fn acos_checked(x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + ACOS_CLAMP_TOLERANCE {
        return Err(Error::ArccosDomain(x));
    }
    Ok(x.clamp(-1.0, 1.0).acos())
}

/// `arccos` of a noisy statistic: always clamps into `[-1, 1]`.
pub fn acos_clamped(x: f64) -> f64 {
    x.clamp(-1.0, 1.0).acos()
}
