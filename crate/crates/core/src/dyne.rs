//! Covariant Gaussian ("dyne") measurements of a squeezed signal.
//!
//! The ancilla is a squeezed vacuum with parameter `r'` (`t = e^{-r'}`) and
//! phase `θ'`. Outcomes `χ = (q, p)` have density
//! `√det M / π · exp(-χᵗ M χ)` with `M = (γ₀ + γ_θ)⁻¹`, so they are sampled
//! from a zero-mean normal with covariance `(γ₀ + γ_θ)/2`.
//!
//! Only `φ = 2(θ' - θ)` matters. The closed-form Fisher information satisfies
//! `F(r, -r', π - φ) = F(r, r', φ)`. For `|r'|` below
//! `r'_thr = ½ asinh(sinh 2r / 2)` the single maximum sits at `φ = 0` (`r' > 0`)
//! or `φ = π` (`r' < 0`); above it that point turns into a minimum and the
//! maxima move to `±φ₀`. In terms of `t` the switch at `φ = 0` happens at
//! `t = t_thr(s)` and its mirror at `t = 1/t_thr(s)`.

use std::f64::consts::PI;

use nalgebra::Matrix2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::angle::acos_checked;
use crate::error::{Error, Result};
use crate::gaussian::{
    covariance_of_state, squeezed_covariance, CovarianceMatrix, GaussianPureState,
};
use crate::quad::trapezoid;

/// Squeezing and phase of the ancilla state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DyneConfig {
    pub r_prime: f64,
    pub theta_prime: f64,
}

impl DyneConfig {
    pub fn new(r_prime: f64, theta_prime: f64) -> Result<Self> {
        if !(r_prime.is_finite() && theta_prime.is_finite()) {
            return Err(Error::invalid("dyne", "ancilla parameters must be finite"));
        }
        Ok(Self {
            r_prime,
            theta_prime,
        })
    }

    /// `t = e^{-r'}`
    pub fn t(&self) -> f64 {
        (-self.r_prime).exp()
    }

    /// `φ = 2(θ' - θ)` for a signal at phase `theta`.
    pub fn phi(&self, theta: f64) -> f64 {
        2.0 * (self.theta_prime - theta)
    }

    /// `γ₀ = Rᵗ(θ') T R(θ')`
    pub fn covariance(&self) -> CovarianceMatrix {
        squeezed_covariance(self.r_prime, self.theta_prime)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DyneRegime {
    /// `r' = 0`: a vacuum ancilla makes the measurement phase-covariant.
    VacuumAncilla,
    BelowThreshold,
    AboveThreshold,
}

fn sum_covariance(state: &GaussianPureState, dyne: &DyneConfig) -> CovarianceMatrix {
    dyne.covariance() + covariance_of_state(state)
}

/// `M(θ) = (γ₀ + γ_θ)⁻¹`
pub fn precision_matrix(state: &GaussianPureState, dyne: &DyneConfig) -> CovarianceMatrix {
    sum_covariance(state, dyne)
        .inverse()
        .expect("sum of two pure-state covariances is positive definite")
}

pub fn outcome_density(q: f64, p: f64, state: &GaussianPureState, dyne: &DyneConfig) -> f64 {
    let m = precision_matrix(state, dyne);
    m.determinant().sqrt() / PI * (-m.quadratic_form(q, p)).exp()
}

pub fn sample_dyne<R: Rng + ?Sized>(
    state: &GaussianPureState,
    dyne: &DyneConfig,
    rng: &mut R,
) -> (f64, f64) {
    let l = (sum_covariance(state, dyne) * 0.5)
        .cholesky()
        .expect("positive definite");
    let z0: f64 = rng.sample(StandardNormal);
    let z1: f64 = rng.sample(StandardNormal);
    (l[(0, 0)] * z0, l[(1, 0)] * z0 + l[(1, 1)] * z1)
}

const FISHER_FD_STEP: f64 = 1e-5;

/// `½ tr[M' M⁻¹ M' M⁻¹]` with `M'` from central differences in `θ`.
pub fn fisher_numeric(state: &GaussianPureState, dyne: &DyneConfig) -> f64 {
    let at = |theta: f64| *precision_matrix(&GaussianPureState { theta, ..*state }, dyne).matrix();
    let h = FISHER_FD_STEP;
    let dm = (at(state.theta + h) - at(state.theta - h)) / (2.0 * h);
    let m_inv = sum_covariance(state, dyne);
    let a = dm * m_inv.matrix();
    0.5 * (a * a).trace()
}

fn sigma1() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, 1.0, 0.0)
}

fn sigma3() -> Matrix2<f64> {
    Matrix2::new(1.0, 0.0, 0.0, -1.0)
}

/// `½ tr[Γ⁻¹ Σ Γ⁻¹ Σ]` with `Γ` and `Σ` assembled from Pauli matrices.
pub fn fisher_gamma_form(r: f64, r_prime: f64, phi: f64) -> f64 {
    let (c2r, s2r) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let (c2q, s2q) = ((2.0 * r_prime).cosh(), (2.0 * r_prime).sinh());
    let gamma = Matrix2::identity() * (c2r + c2q) - sigma3() * (s2r + s2q * phi.cos())
        + sigma1() * (s2q * phi.sin());
    let sigma = sigma1() * (2.0 * s2r);
    let gi = gamma.try_inverse().expect("Γ is positive definite");
    let a = gi * sigma;
    0.5 * (a * a).trace()
}

/// Pieces of the closed form: `F = 2k (u + c sin²φ) / u²` with
/// `u = cosh 2r cosh 2r' - sinh 2r sinh 2r' cos φ + 1`, `k = sinh² 2r`, `c = sinh² 2r'`.
struct ClosedParts {
    k: f64,
    c: f64,
    b: f64,
    u: f64,
}

fn closed_parts(r: f64, r_prime: f64, phi: f64) -> ClosedParts {
    let b = (2.0 * r).sinh() * (2.0 * r_prime).sinh();
    ClosedParts {
        k: (2.0 * r).sinh().powi(2),
        c: (2.0 * r_prime).sinh().powi(2),
        b,
        u: (2.0 * r).cosh() * (2.0 * r_prime).cosh() - b * phi.cos() + 1.0,
    }
}

/// Explicit Fisher information of the dyne measurement.
pub fn fisher_closed(r: f64, r_prime: f64, phi: f64) -> f64 {
    let ClosedParts { k, c, u, .. } = closed_parts(r, r_prime, phi);
    2.0 * k * (u + c * phi.sin().powi(2)) / (u * u)
}

/// `∂F/∂φ` of [`fisher_closed`].
pub fn fisher_phi_derivative(r: f64, r_prime: f64, phi: f64) -> f64 {
    let ClosedParts { k, c, b, u } = closed_parts(r, r_prime, phi);
    let (sp, cp) = phi.sin_cos();
    let du = b * sp;
    2.0 * k * (-du / (u * u) + 2.0 * c * sp * cp / (u * u) - 2.0 * c * sp * sp * du / (u * u * u))
}

/// `∂²F/∂φ²` at `φ = 0`: `2 sinh² 2r (2 sinh² 2r' - sinh 2r sinh 2r') / (cosh 2(r - r') + 1)²`.
pub fn fisher_phi_curvature_at_zero(r: f64, r_prime: f64) -> f64 {
    let ClosedParts { k, c, b, u } = closed_parts(r, r_prime, 0.0);
    2.0 * k * (2.0 * c - b) / (u * u)
}

fn check_s(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::invalid(
            "s",
            format!("signal squeezing s = e^-r must lie in (0, 1], got {s}"),
        ));
    }
    Ok(())
}

/// `t_thr(s) = √(s⁴ - 1 + √(s⁸ + 14 s⁴ + 1)) / (2s)`.
///
/// With `t = e^{-r'}` this is where the curvature of `F` at `φ = 0` changes
/// sign; it lies in `(0, 1]`.
pub fn threshold(s: f64) -> Result<f64> {
    check_s(s)?;
    let s4 = s.powi(4);
    Ok((s4 - 1.0 + (s4 * s4 + 14.0 * s4 + 1.0).sqrt()).sqrt() / (2.0 * s))
}

/// `r'_thr = ½ asinh(sinh 2r / 2) = -ln t_thr(e^{-r})`.
pub fn threshold_squeezing(r: f64) -> f64 {
    0.5 * (0.5 * (2.0 * r).sinh()).asinh()
}

pub fn regime(r: f64, r_prime: f64) -> DyneRegime {
    if r_prime == 0.0 {
        DyneRegime::VacuumAncilla
    } else if r_prime.abs() > threshold_squeezing(r.abs()) {
        DyneRegime::AboveThreshold
    } else {
        DyneRegime::BelowThreshold
    }
}

fn check_r(r: f64) -> Result<()> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::invalid(
            "r",
            "signal squeezing must be finite and > 0",
        ));
    }
    Ok(())
}

/// `φ₀ ≥ 0` maximizing the Fisher information above threshold:
/// `cos φ₀ = (2 cosh 4r' sinh 2r + cosh 2r' sinh 4r) / ((3 + cosh 4r) sinh 2r' + 2 cosh 2r sinh 4r')`.
pub fn optimal_angle(r: f64, r_prime: f64) -> Result<f64> {
    check_r(r)?;
    if regime(r, r_prime) != DyneRegime::AboveThreshold {
        return Err(Error::BelowThreshold { r, r_prime });
    }
    let num =
        2.0 * (4.0 * r_prime).cosh() * (2.0 * r).sinh() + (2.0 * r_prime).cosh() * (4.0 * r).sinh();
    let den = (3.0 + (4.0 * r).cosh()) * (2.0 * r_prime).sinh()
        + 2.0 * (2.0 * r).cosh() * (4.0 * r_prime).sinh();
    acos_checked(num / den)
}

/// `sinh² 2r / cosh²(r - r')`, the value at `φ = 0`.
pub fn fisher_below_threshold_max(r: f64, r_prime: f64) -> f64 {
    (2.0 * r).sinh().powi(2) / (r - r_prime).cosh().powi(2)
}

/// `sinh² 2r (3 + cosh 4r + 8 cosh 2r cosh 2r' + 4 cosh 4r') / (4 (cosh 2r + cosh 2r')²)`.
pub fn fisher_at_optimum(r: f64, r_prime: f64) -> Result<f64> {
    check_r(r)?;
    if regime(r, r_prime) != DyneRegime::AboveThreshold {
        return Err(Error::BelowThreshold { r, r_prime });
    }
    let (c2r, c2q) = ((2.0 * r).cosh(), (2.0 * r_prime).cosh());
    let num = 3.0 + (4.0 * r).cosh() + 8.0 * c2r * c2q + 4.0 * (4.0 * r_prime).cosh();
    Ok((2.0 * r).sinh().powi(2) * num / (4.0 * (c2r + c2q).powi(2)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BestDyne {
    pub regime: DyneRegime,
    /// Non-negative representative; `-phi` is equally good.
    pub phi: f64,
    pub fisher: f64,
}

/// Best local-oscillator angle for a given ancilla squeezing.
pub fn best_dyne_fisher(r: f64, r_prime: f64) -> Result<BestDyne> {
    check_r(r)?;
    let regime = regime(r, r_prime);
    Ok(match regime {
        DyneRegime::AboveThreshold => BestDyne {
            regime,
            phi: optimal_angle(r, r_prime)?,
            fisher: fisher_at_optimum(r, r_prime)?,
        },
        _ => {
            let phi = if r_prime < 0.0 { PI } else { 0.0 };
            BestDyne {
                regime,
                phi,
                fisher: fisher_closed(r, r_prime, phi),
            }
        }
    })
}

/// `Φ(s) = arccos((s⁴ - 1)/(s⁴ + 1)) = arccos(-tanh 2r)`, the optimal angle
/// for an infinitely squeezed ancilla.
pub fn limiting_angle(s: f64) -> Result<f64> {
    check_s(s)?;
    let s4 = s.powi(4);
    acos_checked((s4 - 1.0) / (s4 + 1.0))
}

/// `(1 - s⁴)² / (2 s⁴) = cosh 4r - 1`.
pub fn limiting_fisher(s: f64) -> Result<f64> {
    check_s(s)?;
    let s4 = s.powi(4);
    Ok((1.0 - s4).powi(2) / (2.0 * s4))
}

/// Squeezed-vacuum wave function `e^{r'/2} π^{-1/4} exp(-e^{2r'} q² / 2)`.
pub fn ancilla_wave_function(r_prime: f64, q: f64) -> f64 {
    (0.5 * r_prime).exp() * PI.powf(-0.25) * (-(2.0 * r_prime).exp() * q * q / 2.0).exp()
}

/// `∫ dq' ψ(q₁ - q') ψ(q₂ - q')` by quadrature against its closed form
/// `exp(-e^{2r'} (q₁ - q₂)² / 4)`.
pub fn marginal_integral_check(r_prime: f64, dq: f64) -> (f64, f64) {
    let (q1, q2) = (0.5 * dq, -0.5 * dq);
    let width = (-r_prime).exp();
    let half = dq.abs() + 40.0 * width;
    let intervals = ((2.0 * half) / (width / 8.0)).ceil() as usize;
    let numeric = trapezoid(
        |x| ancilla_wave_function(r_prime, q1 - x) * ancilla_wave_function(r_prime, q2 - x),
        -half,
        half,
        intervals,
    );
    let closed = (-(2.0 * r_prime).exp() * dq * dq / 4.0).exp();
    (numeric, closed)
}

/// Mean and standard error of the squared score over sampled outcomes.
pub fn empirical_fisher(
    samples: &[(f64, f64)],
    state: &GaussianPureState,
    dyne: &DyneConfig,
) -> (f64, f64) {
    let at = |theta: f64| *precision_matrix(&GaussianPureState { theta, ..*state }, dyne).matrix();
    let h = FISHER_FD_STEP;
    let dm = (at(state.theta + h) - at(state.theta - h)) / (2.0 * h);
    let m_inv = sum_covariance(state, dyne);
    // ∂ ln p = ½ tr(M⁻¹ M') - χᵗ M' χ
    let offset = 0.5 * (m_inv.matrix() * dm).trace();
    let dm = CovarianceMatrix::from_matrix(dm);
    crate::stats::mean_and_standard_error(samples.iter().map(|&(q, p)| {
        let score = offset - dm.quadratic_form(q, p);
        score * score
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qfi(r: f64) -> f64 {
        (4.0 * r).cosh() - 1.0
    }

    #[test]
    fn precision_cases() {
        let vac = GaussianPureState::squeezed_vacuum(0.0, 0.0);
        let m = precision_matrix(&vac, &DyneConfig::new(0.0, 0.0).unwrap());
        assert_relative_eq!(*m.matrix(), Matrix2::identity() * 0.5, epsilon = 1e-15);

        let sq = GaussianPureState::squeezed_vacuum(1.0, 0.0);
        let dyne = DyneConfig::new(0.0, 0.0).unwrap();
        let m = precision_matrix(&sq, &dyne);
        assert_relative_eq!(
            m.get(0, 0),
            1.0 / ((-2.0f64).exp() + 1.0),
            max_relative = 1e-14
        );
        assert_relative_eq!(
            m.get(1, 1),
            1.0 / (2.0f64.exp() + 1.0),
            max_relative = 1e-14
        );
        assert_relative_eq!(m.get(0, 1), 0.0, epsilon = 1e-15);

        let sq = GaussianPureState::squeezed_vacuum(0.7, 0.3);
        let dyne = DyneConfig::new(-0.4, 1.2).unwrap();
        let sum = dyne.covariance() + covariance_of_state(&sq);
        assert_relative_eq!(
            precision_matrix(&sq, &dyne).determinant(),
            1.0 / sum.determinant(),
            max_relative = 1e-13
        );
    }

    #[test]
    fn density_is_normalized_and_even() {
        let vac = GaussianPureState::squeezed_vacuum(0.0, 0.0);
        let d0 = DyneConfig::new(0.0, 0.0).unwrap();
        assert_relative_eq!(
            outcome_density(0.0, 0.0, &vac, &d0),
            1.0 / (2.0 * PI),
            max_relative = 1e-15
        );

        let state = GaussianPureState::squeezed_vacuum(1.0, 0.4);
        let dyne = DyneConfig::new(-0.5, 1.3).unwrap();
        let cov = sum_covariance(&state, &dyne) * 0.5;
        let sigma = cov.matrix().symmetric_eigenvalues().max().sqrt();
        let total = crate::quad::trapezoid_2d(
            |q, p| outcome_density(q, p, &state, &dyne),
            (-8.0 * sigma, 8.0 * sigma),
            (-8.0 * sigma, 8.0 * sigma),
            600,
        );
        assert!((total - 1.0).abs() < 1e-8, "{total}");
        assert_eq!(
            outcome_density(0.3, -1.1, &state, &dyne),
            outcome_density(-0.3, 1.1, &state, &dyne)
        );
    }

    #[test]
    fn sampling_matches_covariance() {
        let vac = GaussianPureState::squeezed_vacuum(0.0, 0.0);
        let dyne = DyneConfig::new(0.0, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000;
        let (mut sq, mut sp, mut sqp, mut mq, mut mp) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for _ in 0..n {
            let (q, p) = sample_dyne(&vac, &dyne, &mut rng);
            mq += q;
            mp += p;
            sq += q * q;
            sp += p * p;
            sqp += q * p;
        }
        let nf = n as f64;
        // Covariance (I + I)/2 = I: Var(x²) = 2, Var(qp) = 1.
        let band = |var: f64| 5.0 * (var / nf).sqrt();
        assert!((sq / nf - 1.0).abs() < band(2.0));
        assert!((sp / nf - 1.0).abs() < band(2.0));
        assert!((sqp / nf).abs() < band(1.0));
        assert!((mq / nf).abs() < band(1.0));
        assert!((mp / nf).abs() < band(1.0));

        let mut a = ChaCha8Rng::seed_from_u64(3);
        let mut b = ChaCha8Rng::seed_from_u64(3);
        let state = GaussianPureState::squeezed_vacuum(1.0, 0.2);
        assert_eq!(
            sample_dyne(&state, &dyne, &mut a),
            sample_dyne(&state, &dyne, &mut b)
        );
    }

    #[test]
    fn fisher_forms_agree() {
        for r in [0.2, 0.5, 1.0, 1.5] {
            for i in 0..=10 {
                let rp = -4.0 + 0.5 * i as f64;
                for j in 0..=12 {
                    let phi = PI * j as f64 / 12.0;
                    let closed = fisher_closed(r, rp, phi);
                    let gamma = fisher_gamma_form(r, rp, phi);
                    let state = GaussianPureState::squeezed_vacuum(r, 0.3);
                    let numeric =
                        fisher_numeric(&state, &DyneConfig::new(rp, 0.3 + phi / 2.0).unwrap());
                    assert!(
                        (closed - gamma).abs() <= 1e-9 * (1.0 + closed),
                        "{r} {rp} {phi}"
                    );
                    assert!(
                        (closed - numeric).abs() <= 1e-6 * (1.0 + closed),
                        "{r} {rp} {phi}: {closed} vs {numeric}"
                    );
                    assert!(closed <= qfi(r) * (1.0 + 1e-9));
                    assert!(closed >= 0.0);
                }
            }
        }
    }

    #[test]
    fn closed_form_cases() {
        assert_eq!(fisher_closed(0.0, -1.0, 0.7), 0.0);
        assert_eq!(fisher_gamma_form(0.0, 0.5, 0.2), 0.0);
        let f = fisher_closed(1.0, 0.0, 0.0);
        assert_relative_eq!(
            f,
            2.0 * 2.0f64.sinh().powi(2) / (2.0f64.cosh() + 1.0),
            max_relative = 1e-14
        );
        let state = GaussianPureState::squeezed_vacuum(0.0, 0.0);
        assert!(fisher_numeric(&state, &DyneConfig::new(-1.0, 0.4).unwrap()).abs() < 1e-12);
        for phi in [0.3, 1.7, 2.9] {
            assert_relative_eq!(
                fisher_closed(1.0, -0.6, phi),
                fisher_closed(1.0, -0.6, -phi),
                max_relative = 1e-14
            );
            assert_relative_eq!(
                fisher_closed(1.0, -0.6, phi),
                fisher_closed(1.0, -0.6, phi + 2.0 * PI),
                max_relative = 1e-12
            );
            assert_relative_eq!(
                fisher_closed(1.0, -0.6, phi),
                fisher_closed(1.0, 0.6, PI - phi),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let h = 1e-5;
        for (r, rp, phi) in [(1.0, -0.8, 0.4), (0.5, 1.2, 2.0), (1.5, -3.0, 2.8)] {
            let fd = (fisher_closed(r, rp, phi + h) - fisher_closed(r, rp, phi - h)) / (2.0 * h);
            let an = fisher_phi_derivative(r, rp, phi);
            assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{fd} vs {an}");
        }
        let h = 1e-4;
        for (r, rp) in [(1.0, 0.3), (1.0, 1.0), (0.4, -1.5)] {
            let fd = (fisher_closed(r, rp, h) - 2.0 * fisher_closed(r, rp, 0.0)
                + fisher_closed(r, rp, -h))
                / (h * h);
            let an = fisher_phi_curvature_at_zero(r, rp);
            assert!((fd - an).abs() < 1e-5 * (1.0 + an.abs()), "{fd} vs {an}");
        }
    }

    #[test]
    fn threshold_cases() {
        assert_relative_eq!(threshold(1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(threshold(0.0).is_err());
        assert!(threshold(1.2).is_err());
        for i in 1..100 {
            let s = i as f64 / 100.0;
            let t = threshold(s).unwrap();
            assert!(t > 0.0 && t < 1.0);
            let r = -s.ln();
            assert_relative_eq!(-t.ln(), threshold_squeezing(r), max_relative = 1e-10);
        }
    }

    #[test]
    fn curvature_flips_at_threshold() {
        let r: f64 = 1.0;
        let s = (-r).exp();
        let t_thr = threshold(s).unwrap();
        let curvature = |t: f64| fisher_phi_curvature_at_zero(r, -t.ln());
        // φ = 0 is a maximum for t_thr < t < 1 and a minimum for t < t_thr.
        assert!(curvature(t_thr * 1.01) < 0.0);
        assert!(curvature(t_thr * 0.99) > 0.0);
        let (mut lo, mut hi) = (t_thr * 0.9, t_thr * 1.1);
        while hi - lo > 1e-9 {
            let mid = 0.5 * (lo + hi);
            if curvature(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((0.5 * (lo + hi) - t_thr).abs() < 1e-6);
    }

    #[test]
    fn optimal_angle_is_stationary_maximum() {
        let r: f64 = 1.0;
        for rp in [-5.0, -3.0, -1.0, 1.0, 3.0] {
            let phi0 = optimal_angle(r, rp).unwrap();
            assert!(phi0 >= 0.0);
            assert!(fisher_phi_derivative(r, rp, phi0).abs() < 1e-8, "r' = {rp}");
            let f = fisher_closed(r, rp, phi0);
            assert!(
                f >= fisher_closed(r, rp, phi0 + 1e-3) && f >= fisher_closed(r, rp, phi0 - 1e-3)
            );
            assert_relative_eq!(fisher_at_optimum(r, rp).unwrap(), f, max_relative = 1e-9);
            // Global over a fine φ grid.
            let grid_max = (0..=2000)
                .map(|k| fisher_closed(r, rp, PI * k as f64 / 2000.0))
                .fold(0.0, f64::max);
            assert!(f >= grid_max * (1.0 - 1e-12));
        }
        assert!(matches!(
            optimal_angle(r, -0.5),
            Err(Error::BelowThreshold { .. })
        ));
        assert!(fisher_at_optimum(r, 0.2).is_err());
    }

    #[test]
    fn optimal_angle_limit_and_domain() {
        let r: f64 = 1.0;
        let limit = (-(2.0f64 * r).tanh()).acos();
        assert!((optimal_angle(r, -12.0).unwrap() - limit).abs() < 1e-8);
        for ri in 1..=15 {
            let r = 0.1 * ri as f64;
            for k in 0..=40 {
                let rp = -6.0 + 0.15 * k as f64;
                if regime(r, rp) == DyneRegime::AboveThreshold {
                    assert!(optimal_angle(r, rp).is_ok(), "r = {r}, r' = {rp}");
                }
            }
        }
    }

    #[test]
    fn below_threshold_branch() {
        let r: f64 = 1.0;
        assert_relative_eq!(
            fisher_below_threshold_max(r, r),
            (2.0 * r).sinh().powi(2),
            max_relative = 1e-15
        );
        assert_relative_eq!(
            fisher_below_threshold_max(1.0, 0.0),
            2.0f64.sinh().powi(2) / 1.0f64.cosh().powi(2),
            max_relative = 1e-15
        );
        for rp in [-2.0, -0.3, 0.0, 0.4, 0.9] {
            assert_relative_eq!(
                fisher_below_threshold_max(r, rp),
                fisher_closed(r, rp, 0.0),
                max_relative = 1e-9
            );
        }
    }

    #[test]
    fn optimum_grows_with_ancilla_squeezing() {
        let r: f64 = 1.0;
        let values: Vec<f64> = (0..40)
            .map(|k| fisher_at_optimum(r, -0.7 - 0.1 * k as f64).unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]));
        let far = fisher_at_optimum(r, -5.0).unwrap();
        assert!((far / qfi(r) - 1.0).abs() < 0.01);
        assert!(far < qfi(r));
    }

    #[test]
    fn best_dyne_dispatch() {
        let best = best_dyne_fisher(1.0, -0.3).unwrap();
        assert_eq!(best.regime, DyneRegime::BelowThreshold);
        assert_eq!(best.phi, PI);
        let best = best_dyne_fisher(1.0, 0.3).unwrap();
        assert_eq!(best.phi, 0.0);
        let grid_max = (0..=1000)
            .map(|k| fisher_closed(1.0, 0.3, PI * k as f64 / 1000.0))
            .fold(0.0, f64::max);
        assert_relative_eq!(best.fisher, grid_max, max_relative = 1e-12);
        let best = best_dyne_fisher(1.0, -3.0).unwrap();
        assert_eq!(best.regime, DyneRegime::AboveThreshold);
        assert_eq!(regime(1.0, 0.0), DyneRegime::VacuumAncilla);
    }

    #[test]
    fn limiting_quantities() {
        assert_relative_eq!(limiting_angle(1.0).unwrap(), PI / 2.0, epsilon = 1e-15);
        let s = (-1.0f64).exp();
        assert_relative_eq!(
            limiting_angle(s).unwrap(),
            (-(2.0f64).tanh()).acos(),
            epsilon = 1e-14
        );
        assert_relative_eq!(
            limiting_angle(s).unwrap(),
            2.872556662840912,
            epsilon = 1e-12
        );
        assert!(limiting_angle((-10.0f64).exp()).unwrap() > PI - 1e-8);
        assert_relative_eq!(limiting_fisher(s).unwrap(), qfi(1.0), max_relative = 1e-12);
    }

    #[test]
    fn marginal_integral() {
        for rp in [-2.0, 0.0, 1.0] {
            for dq in [0.0, 0.5, 1.0] {
                let (numeric, closed) = marginal_integral_check(rp, dq);
                assert!(
                    (numeric - closed).abs() <= 1e-8,
                    "{rp} {dq}: {numeric} vs {closed}"
                );
            }
        }
        assert_eq!(marginal_integral_check(0.3, 0.0).1, 1.0);
        assert_relative_eq!(
            marginal_integral_check(0.0, 1.0).1,
            (-0.25f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn empirical_fisher_matches_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for (r, rp, phi) in [(1.0, -1.0, 2.5), (0.5, 0.0, 0.0), (1.0, 0.5, 0.0)] {
            let state = GaussianPureState::squeezed_vacuum(r, 0.2);
            let dyne = DyneConfig::new(rp, 0.2 + phi / 2.0).unwrap();
            let samples: Vec<_> = (0..1_000_000)
                .map(|_| sample_dyne(&state, &dyne, &mut rng))
                .collect();
            let (mean, se) = empirical_fisher(&samples, &state, &dyne);
            let expected = fisher_closed(r, rp, phi);
            assert!(
                (mean - expected).abs() < 3.0 * se,
                "{mean} ± {se} vs {expected}"
            );
        }
    }
}
