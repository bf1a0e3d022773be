//! Closed-form quantities for single-mode pure Gaussian states.
//!
//! Conventions: the vacuum covariance matrix is the identity, so a quadrature
//! variance is half the matching diagonal entry. Squeezing with `r > 0`
//! narrows the `Q` quadrature: `S = diag(e^{-2r}, e^{2r})`.

use std::ops::{Add, Mul};

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `U(θ) D(α) S(r) |0⟩` with real, non-negative displacement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPureState {
    pub alpha: f64,
    pub r: f64,
    pub theta: f64,
}

impl GaussianPureState {
    pub fn new(alpha: f64, r: f64, theta: f64) -> Result<Self> {
        if !(alpha.is_finite() && r.is_finite() && theta.is_finite()) {
            return Err(Error::invalid("state", "all parameters must be finite"));
        }
        if alpha < 0.0 {
            return Err(Error::invalid("alpha", "displacement must be non-negative"));
        }
        Ok(Self { alpha, r, theta })
    }

    pub fn squeezed_vacuum(r: f64, theta: f64) -> Self {
        Self {
            alpha: 0.0,
            r,
            theta,
        }
    }

    /// `s = e^{-r}`.
    pub fn s(&self) -> f64 {
        (-self.r).exp()
    }

    pub fn is_squeezed_vacuum(&self) -> bool {
        self.alpha == 0.0
    }
}

/// Real symmetric 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix(Matrix2<f64>);

impl CovarianceMatrix {
    pub fn new(m11: f64, m12: f64, m22: f64) -> Self {
        Self(Matrix2::new(m11, m12, m12, m22))
    }

    pub fn identity() -> Self {
        Self(Matrix2::identity())
    }

    pub fn diagonal(m11: f64, m22: f64) -> Self {
        Self::new(m11, 0.0, m22)
    }

    /// Symmetrizes `m` as `(m + mᵗ)/2`.
    pub fn from_matrix(m: Matrix2<f64>) -> Self {
        let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
        Self::new(m[(0, 0)], off, m[(1, 1)])
    }

    /// Congruence `Rᵗ C R`.
    pub fn congruence(&self, rot: &Matrix2<f64>) -> Self {
        Self::from_matrix(rot.transpose() * self.0 * rot)
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn inverse(&self) -> Option<Self> {
        self.0.try_inverse().map(Self::from_matrix)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.0[(0, 0)] > 0.0 && self.determinant() > 0.0
    }

    /// `⟨ΔQ⟩²`.
    pub fn q_variance(&self) -> f64 {
        0.5 * self.0[(0, 0)]
    }

    /// `⟨ΔP⟩²`.
    pub fn p_variance(&self) -> f64 {
        0.5 * self.0[(1, 1)]
    }

    /// Lower Cholesky factor of a positive-definite matrix.
    pub fn cholesky(&self) -> Option<Matrix2<f64>> {
        self.0.cholesky().map(|c| c.l())
    }

    /// `χᵗ C χ`.
    pub fn quadratic_form(&self, q: f64, p: f64) -> f64 {
        let m = &self.0;
        m[(0, 0)] * q * q + 2.0 * m[(0, 1)] * q * p + m[(1, 1)] * p * p
    }
}

impl Add for CovarianceMatrix {
    type Output = CovarianceMatrix;

    fn add(self, rhs: Self) -> Self {
        Self::from_matrix(self.0 + rhs.0)
    }
}

impl Mul<f64> for CovarianceMatrix {
    type Output = CovarianceMatrix;

    fn mul(self, rhs: f64) -> Self {
        Self(self.0 * rhs)
    }
}

/// Phase-space rotation `[[cos θ, -sin θ], [sin θ, cos θ]]`.
pub fn rotation_matrix(theta: f64) -> Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    Matrix2::new(c, -s, s, c)
}

/// Covariance of a squeezed state `diag(e^{-2r}, e^{2r})` rotated by `theta`.
pub fn squeezed_covariance(r: f64, theta: f64) -> CovarianceMatrix {
    CovarianceMatrix::diagonal((-2.0 * r).exp(), (2.0 * r).exp())
        .congruence(&rotation_matrix(theta))
}

/// `γ_θ = Rᵗ(θ) S R(θ)`. Displacement does not enter the covariance.
pub fn covariance_of_state(state: &GaussianPureState) -> CovarianceMatrix {
    squeezed_covariance(state.r, state.theta)
}

/// `|α|² + sinh² r`.
pub fn mean_photon_number(state: &GaussianPureState) -> f64 {
    state.alpha * state.alpha + state.r.sinh().powi(2)
}

/// Quantum Fisher information of the phase family generated by `a†a`:
/// `4[|α|² (cosh r - sinh r)² + 2 sinh² r cosh² r]`. Independent of `θ`.
pub fn qfi(state: &GaussianPureState) -> f64 {
    let (sh, ch) = (state.r.sinh(), state.r.cosh());
    4.0 * (state.alpha * state.alpha * (ch - sh).powi(2) + 2.0 * sh * sh * ch * ch)
}

/// `8(n̄² + n̄)`, the squeezed-vacuum QFI expressed through its energy.
pub fn qfi_squeezed_vacuum_from_photons(nbar: f64) -> Result<f64> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::invalid(
            "nbar",
            "mean photon number must be finite and >= 0",
        ));
    }
    Ok(8.0 * (nbar * nbar + nbar))
}

/// Squeezing parameter of the vacuum state with `n̄` photons on average.
pub fn squeezing_for_photons(nbar: f64) -> Result<f64> {
    if !(nbar.is_finite() && nbar >= 0.0) {
        return Err(Error::invalid(
            "nbar",
            "mean photon number must be finite and >= 0",
        ));
    }
    Ok(nbar.sqrt().asinh())
}

/// Smallest achievable phase variance with `copies` squeezed vacua of energy `nbar`.
pub fn heisenberg_bound(nbar: f64, copies: u64) -> Result<f64> {
    if !(nbar.is_finite() && nbar > 0.0) {
        return Err(Error::invalid(
            "nbar",
            "the bound diverges without photons; nbar must be > 0",
        ));
    }
    if copies == 0 {
        return Err(Error::invalid("copies", "at least one copy is required"));
    }
    Ok(1.0 / (qfi_squeezed_vacuum_from_photons(nbar)? * copies as f64))
}

/// One point of [`fixed_energy_qfi_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergySplit {
    /// Fraction of the photons spent on displacement.
    pub displacement_fraction: f64,
    pub qfi: f64,
}

/// Scans the QFI along the fixed-energy family `|α|² = f n̄`, `sinh² r = (1-f) n̄`
/// for `f` on a uniform grid over `[0, 1]`.
pub fn fixed_energy_qfi_scan(nbar: f64, grid_points: usize) -> Result<Vec<EnergySplit>> {
    if !(nbar.is_finite() && nbar > 0.0) {
        return Err(Error::invalid("nbar", "must be finite and > 0"));
    }
    if grid_points < 3 {
        return Err(Error::invalid("grid_points", "need at least 3 grid points"));
    }
    let last = (grid_points - 1) as f64;
    Ok((0..grid_points)
        .map(|i| {
            let f = i as f64 / last;
            let state = GaussianPureState {
                alpha: (f * nbar).sqrt(),
                r: ((1.0 - f) * nbar).sqrt().asinh(),
                theta: 0.0,
            };
            EnergySplit {
                displacement_fraction: f,
                qfi: qfi(&state),
            }
        })
        .collect())
}

/// Grid point with the largest QFI (first one on ties).
pub fn argmax_split(scan: &[EnergySplit]) -> Option<EnergySplit> {
    scan.iter()
        .copied()
        .fold(None, |best: Option<EnergySplit>, p| match best {
            Some(b) if b.qfi >= p.qfi => Some(b),
            _ => Some(p),
        })
}
