//! Truncated Fock-space oracle.
//!
//! States are dense amplitude vectors over `|0⟩ … |D-1⟩`. Everything here is
//! computed by brute force so that it can serve as an independent check on the
//! closed forms elsewhere in the crate. Truncation is never silent: every state
//! carries the norm it lost, and operations refuse to continue past their
//! leakage tolerance.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const DEFAULT_DIM: usize = 128;
pub const MIN_DIM: usize = 16;
/// Leakage allowed when building a state.
pub const CONSTRUCTION_LEAKAGE_TOLERANCE: f64 = 1e-6;
/// Leakage allowed when taking photon-number moments.
pub const MOMENT_LEAKAGE_TOLERANCE: f64 = 1e-8;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedState {
    amplitudes: DVector<C64>,
    leakage: f64,
}

impl TruncatedState {
    pub fn from_amplitudes(amplitudes: DVector<C64>, leakage: f64) -> Self {
        Self {
            amplitudes,
            leakage,
        }
    }

    pub fn fock(n: usize, dim: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::invalid(
                "n",
                format!("Fock level {n} outside dimension {dim}"),
            ));
        }
        let mut amplitudes = DVector::zeros(dim);
        amplitudes[n] = C64::new(1.0, 0.0);
        Ok(Self::from_amplitudes(amplitudes, 0.0))
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::fock(0, dim).expect("dim > 0")
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm_sqr().sqrt();
        Self::from_amplitudes(self.amplitudes.unscale(n), self.leakage)
    }

    /// `U(θ) = exp(-iθ a†a)`, exact in any truncation.
    pub fn rotated(&self, theta: f64) -> Self {
        let amplitudes = DVector::from_iterator(
            self.dim(),
            self.amplitudes
                .iter()
                .enumerate()
                .map(|(n, c)| c * C64::from_polar(1.0, -(n as f64) * theta)),
        );
        Self::from_amplitudes(amplitudes, self.leakage)
    }

    fn check_leakage(&self, tolerance: f64) -> Result<()> {
        if self.leakage > tolerance {
            return Err(Error::Truncation {
                dim: self.dim(),
                leakage: self.leakage,
                tolerance,
            });
        }
        Ok(())
    }
}

pub fn check_dim(dim: usize) -> Result<()> {
    if dim < MIN_DIM || !dim.is_multiple_of(2) {
        return Err(Error::invalid(
            "dim",
            format!("truncation dimension must be even and >= {MIN_DIM}, got {dim}"),
        ));
    }
    Ok(())
}

/// Mean and variance of `a†a`.
pub fn number_operator_moments(state: &TruncatedState) -> Result<(f64, f64)> {
    state.check_leakage(MOMENT_LEAKAGE_TOLERANCE)?;
    let norm = state.norm_sqr();
    let (mut m1, mut m2) = (0.0, 0.0);
    for (n, c) in state.amplitudes.iter().enumerate() {
        let p = c.norm_sqr() / norm;
        let n = n as f64;
        m1 += n * p;
        m2 += n * n * p;
    }
    Ok((m1, (m2 - m1 * m1).max(0.0)))
}

/// `S(r)|0⟩` from its even-photon expansion
/// `c_{2n} = (-tanh r)^n √((2n)!) / (2^n n!) / √(cosh r)`.
pub fn squeeze_vacuum(r: f64, dim: usize) -> Result<TruncatedState> {
    check_dim(dim)?;
    if !r.is_finite() {
        return Err(Error::invalid("r", "must be finite"));
    }
    let t = r.tanh();
    let mut amplitudes = DVector::zeros(dim);
    let mut c = 1.0 / r.cosh().sqrt();
    for n in 0..dim / 2 {
        amplitudes[2 * n] = C64::new(c, 0.0);
        let k = n as f64;
        c *= -t * ((2.0 * k + 1.0) * (2.0 * k + 2.0)).sqrt() / (2.0 * (k + 1.0));
    }
    let leakage = 1.0 - amplitudes.norm_squared();
    let state = TruncatedState::from_amplitudes(amplitudes, leakage);
    state.check_leakage(CONSTRUCTION_LEAKAGE_TOLERANCE)?;
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Generator {
    /// `exp[(r/2)(a² - a†²)]`
    Squeeze(f64),
    /// `exp(α a† - α a)` with real α.
    Displace(f64),
    /// `exp(-iθ a†a)`
    Rotate(f64),
}

/// Real antisymmetric matrix of the truncated generator.
fn generator_matrix(generator: Generator, dim: usize) -> DMatrix<f64> {
    let sqrt = |n: usize| (n as f64).sqrt();
    let mut g = DMatrix::zeros(dim, dim);
    match generator {
        Generator::Squeeze(r) => {
            // (a²)_{n, n+2} = √((n+1)(n+2))
            for n in 0..dim.saturating_sub(2) {
                let v = 0.5 * r * sqrt(n + 1) * sqrt(n + 2);
                g[(n, n + 2)] = v;
                g[(n + 2, n)] = -v;
            }
        }
        Generator::Displace(alpha) => {
            for n in 0..dim - 1 {
                let v = alpha * sqrt(n + 1);
                g[(n + 1, n)] = v;
                g[(n, n + 1)] = -v;
            }
        }
        Generator::Rotate(_) => unreachable!("rotation is applied in closed form"),
    }
    g
}

/// Dense unitary `exp(G)` of a truncated squeeze or displacement generator.
pub fn generator_unitary(generator: Generator, dim: usize) -> DMatrix<f64> {
    generator_matrix(generator, dim).exp()
}

/// Population of the top `dim/16` (at least 2) Fock levels.
///
/// The truncated exponential is exactly unitary, so lost norm shows up as
/// weight piling up against the cutoff instead of as `1 - ‖c‖²`.
pub fn edge_population(amplitudes: &DVector<C64>) -> f64 {
    let dim = amplitudes.len();
    let width = (dim / 16).max(2).min(dim);
    amplitudes.rows(dim - width, width).norm_squared()
}

fn apply_real(u: &DMatrix<f64>, v: &DVector<C64>) -> DVector<C64> {
    let re = u * v.map(|c| c.re);
    let im = u * v.map(|c| c.im);
    re.zip_map(&im, C64::new)
}

/// Applies `exp(generator)` to a normalized state by exponentiating the dense
/// truncated generator. Rotation is exact.
pub fn apply_generator_exponential(
    state: &TruncatedState,
    generator: Generator,
) -> Result<TruncatedState> {
    let dim = state.dim();
    let norm = state.norm_sqr();
    if (norm - 1.0).abs() > 1e-8 + state.leakage.max(0.0) {
        return Err(Error::invalid(
            "state",
            format!("input must be normalized, |ψ|² = {norm}"),
        ));
    }
    if let Generator::Rotate(theta) = generator {
        return Ok(state.rotated(theta));
    }
    let u = generator_unitary(generator, dim);
    let amplitudes = apply_real(&u, &state.amplitudes);
    let leakage =
        state.leakage.max(0.0) + edge_population(&amplitudes).max(1.0 - amplitudes.norm_squared());
    let out = TruncatedState::from_amplitudes(amplitudes, leakage);
    out.check_leakage(CONSTRUCTION_LEAKAGE_TOLERANCE)?;
    Ok(out)
}

/// `|φ₀⟩ = U(θ) S(r)|0⟩`, renormalized after the leakage check.
pub fn signal_state(r: f64, theta: f64, dim: usize) -> Result<TruncatedState> {
    Ok(squeeze_vacuum(r, dim)?.normalized().rotated(theta))
}

/// `|ψ⟩ = (1 - |φ₀⟩⟨φ₀|) a†a |φ₀⟩`, left unnormalized: `4⟨ψ|ψ⟩` is the QFI.
pub fn psi_vector(r: f64, theta: f64, dim: usize) -> Result<TruncatedState> {
    let phi0 = signal_state(r, theta, dim)?;
    Ok(project_out_number(&phi0))
}

fn project_out_number(phi0: &TruncatedState) -> TruncatedState {
    let g_phi = DVector::from_iterator(
        phi0.dim(),
        phi0.amplitudes
            .iter()
            .enumerate()
            .map(|(n, c)| c * n as f64),
    );
    let mean = phi0.amplitudes.dotc(&g_phi);
    let psi = g_phi - &phi0.amplitudes * mean;
    TruncatedState::from_amplitudes(psi, phi0.leakage)
}

/// Rank-one elements `E± = |e±⟩⟨e±|` of the SLD measurement built at a guess.
/// `E₀ = 1 - E₊ - E₋` is implicit.
#[derive(Debug, Clone)]
pub struct SldPovm {
    pub theta_guess: f64,
    pub plus: TruncatedState,
    pub minus: TruncatedState,
}

/// `𝒰_{θ̂₀} (±i|0⟩ - |2⟩)/√2` with `𝒰_θ = U(θ) S(r)`.
pub fn sld_povm(r: f64, theta_guess: f64, dim: usize) -> Result<SldPovm> {
    let model = ThreeOutcomeModel::new(r, dim)?;
    Ok(model.povm(theta_guess))
}

/// Outcome probabilities of the SLD measurement.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OutcomeProbabilities {
    pub p_plus: f64,
    pub p_minus: f64,
    pub p_zero: f64,
}

impl OutcomeProbabilities {
    pub fn new(p_plus: f64, p_minus: f64, p_zero: f64) -> Result<Self> {
        let ok = |p: f64| p.is_finite() && (0.0..=1.0).contains(&p);
        if !(ok(p_plus) && ok(p_minus) && ok(p_zero)) {
            return Err(Error::invalid("probabilities", "each must lie in [0, 1]"));
        }
        if (p_plus + p_minus + p_zero - 1.0).abs() > 1e-8 {
            return Err(Error::invalid("probabilities", "must sum to 1"));
        }
        Ok(Self {
            p_plus,
            p_minus,
            p_zero,
        })
    }

    pub fn informative(&self) -> f64 {
        self.p_plus + self.p_minus
    }
}

/// Cached `S(r)|0⟩` and `S(r)|2⟩` for repeated probability evaluations.
///
/// All outcome probabilities depend only on `θ - θ̂₀` because `U(θ)` commutes
/// with `a†a`.
#[derive(Debug, Clone)]
pub struct ThreeOutcomeModel {
    r: f64,
    ground: TruncatedState,
    second: TruncatedState,
    plus: TruncatedState,
    minus: TruncatedState,
}

impl ThreeOutcomeModel {
    pub fn new(r: f64, dim: usize) -> Result<Self> {
        let ground = squeeze_vacuum(r, dim)?.normalized();
        let second =
            apply_generator_exponential(&TruncatedState::fock(2, dim)?, Generator::Squeeze(r))?;
        let combine = |sign: f64| {
            let amps = (&ground.amplitudes * (I * sign) - &second.amplitudes)
                * C64::new(FRAC_1_SQRT_2, 0.0);
            TruncatedState::from_amplitudes(amps, ground.leakage.max(second.leakage))
        };
        let plus = combine(1.0);
        let minus = combine(-1.0);
        Ok(Self {
            r,
            ground,
            second,
            plus,
            minus,
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn dim(&self) -> usize {
        self.ground.dim()
    }

    /// `⟨Δn⟩ = sinh(2r)/√2`, the slope of `p±` at zero offset.
    pub fn delta_n(&self) -> f64 {
        (2.0 * self.r).sinh() * FRAC_1_SQRT_2
    }

    pub fn squeezed_ground(&self) -> &TruncatedState {
        &self.ground
    }

    pub fn squeezed_second(&self) -> &TruncatedState {
        &self.second
    }

    pub fn povm(&self, theta_guess: f64) -> SldPovm {
        SldPovm {
            theta_guess,
            plus: self.plus.rotated(theta_guess),
            minus: self.minus.rotated(theta_guess),
        }
    }

    /// Probabilities for a true phase offset `delta = θ - θ̂₀` from the guess.
    pub fn probabilities(&self, delta: f64) -> OutcomeProbabilities {
        let state = self.ground.rotated(delta);
        let p_plus = self.plus.inner(&state).norm_sqr();
        let p_minus = self.minus.inner(&state).norm_sqr();
        OutcomeProbabilities {
            p_plus,
            p_minus,
            p_zero: (1.0 - p_plus - p_minus).max(0.0),
        }
    }
}

pub fn three_outcome_probabilities(
    r: f64,
    theta_true: f64,
    theta_guess: f64,
    dim: usize,
) -> Result<OutcomeProbabilities> {
    Ok(ThreeOutcomeModel::new(r, dim)?.probabilities(theta_true - theta_guess))
}

fn outer(a: &DVector<C64>, b: &DVector<C64>) -> DMatrix<C64> {
    a * b.adjoint()
}

/// Dense SLD `λ = 2i(|φ₀⟩⟨ψ| - |ψ⟩⟨φ₀|)` at phase `theta`.
pub fn sld_matrix(r: f64, theta: f64, dim: usize) -> Result<DMatrix<C64>> {
    let phi0 = signal_state(r, theta, dim)?;
    let psi = project_out_number(&phi0);
    Ok(
        (outer(&phi0.amplitudes, &psi.amplitudes) - outer(&psi.amplitudes, &phi0.amplitudes))
            * (I * 2.0),
    )
}

/// Sorted eigenvalues of the dense SLD.
pub fn sld_eigenvalues(r: f64, theta: f64, dim: usize) -> Result<Vec<f64>> {
    let lambda = sld_matrix(r, theta, dim)?;
    let mut ev: Vec<f64> = lambda.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// Largest violation of the POVM optimality conditions
/// `Im tr[ρ E λ] = 0` and `ρ λ E = k ρ E` (real `k`) for `E₊`, `E₋` built at the true phase.
pub fn optimality_conditions_check(r: f64, theta: f64, dim: usize) -> Result<f64> {
    let phi0 = signal_state(r, theta, dim)?;
    let psi = project_out_number(&phi0);
    if psi.norm_sqr() == 0.0 {
        // λ vanishes; both conditions hold trivially.
        return Ok(0.0);
    }
    let rho = outer(&phi0.amplitudes, &phi0.amplitudes);
    let lambda = (outer(&phi0.amplitudes, &psi.amplitudes)
        - outer(&psi.amplitudes, &phi0.amplitudes))
        * (I * 2.0);
    let povm = ThreeOutcomeModel::new(r, dim)?.povm(theta);

    let mut worst: f64 = 0.0;
    for e in [&povm.plus, &povm.minus] {
        let proj = outer(&e.amplitudes, &e.amplitudes);
        let rho_e = &rho * &proj;
        let rho_lambda_e = &rho * &lambda * &proj;
        worst = worst.max(rho_lambda_e.trace().im.abs());
        let weight = rho_e.trace().re;
        if weight <= f64::EPSILON {
            continue;
        }
        let k = rho_lambda_e.trace().re / weight;
        let residual = rho_lambda_e - rho_e * C64::new(k, 0.0);
        worst = worst.max(residual.iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn qfi_closed(r: f64) -> f64 {
        (4.0 * r).cosh() - 1.0
    }

    #[test]
    fn moments_of_simple_states() {
        let (m, v) = number_operator_moments(&TruncatedState::vacuum(32)).unwrap();
        assert_eq!((m, v), (0.0, 0.0));
        let (m, v) = number_operator_moments(&TruncatedState::fock(3, 32).unwrap()).unwrap();
        assert_eq!((m, v), (3.0, 0.0));
    }

    #[test]
    fn squeezed_vacuum_moments() {
        let s = squeeze_vacuum(1.0, 128).unwrap();
        let (m, v) = number_operator_moments(&s).unwrap();
        assert!((m - 1.0f64.sinh().powi(2)).abs() < 1e-8);
        assert!((v - 2.0f64.sinh().powi(2) / 2.0).abs() < 1e-6);
        assert!(s.leakage() > -1e-12 && s.leakage() < 1e-12);
    }

    #[test]
    fn zero_squeezing_is_vacuum() {
        let s = squeeze_vacuum(0.0, 16).unwrap();
        assert_eq!(s, TruncatedState::vacuum(16));
    }

    #[test]
    fn dimension_validation() {
        assert!(squeeze_vacuum(0.5, 15).is_err());
        assert!(squeeze_vacuum(0.5, 14).is_err());
        assert!(squeeze_vacuum(0.5, 16).is_ok());
    }

    #[test]
    fn truncation_is_reported() {
        match squeeze_vacuum(2.5, 32) {
            Err(Error::Truncation { dim, leakage, .. }) => {
                assert_eq!(dim, 32);
                assert!(leakage > 1e-6);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
        // 1.5 at D = 128 builds but is too leaky for moments.
        let s = squeeze_vacuum(1.5, 128).unwrap();
        assert!(s.leakage() > MOMENT_LEAKAGE_TOLERANCE);
        assert!(matches!(
            number_operator_moments(&s),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn route_equivalence() {
        for (r, dim) in [(0.3, 128), (1.0, 128), (1.0, 160), (1.5, 384)] {
            let closed = squeeze_vacuum(r, dim).unwrap();
            let expm =
                apply_generator_exponential(&TruncatedState::vacuum(dim), Generator::Squeeze(r))
                    .unwrap();
            let diff = (closed.amplitudes() - expm.amplitudes()).camax();
            assert!(diff < 1e-8, "r = {r}, D = {dim}: {diff:e}");
        }
    }

    #[test]
    fn rotation_phases() {
        let s = TruncatedState::fock(5, 16).unwrap();
        let out = apply_generator_exponential(&s, Generator::Rotate(0.3)).unwrap();
        assert_relative_eq!(out.amplitudes()[5].re, (-1.5f64).cos(), epsilon = 1e-15);
        assert_relative_eq!(out.amplitudes()[5].im, (-1.5f64).sin(), epsilon = 1e-15);
        assert_relative_eq!(out.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn displacement_is_poissonian() {
        let dim = 64;
        let out =
            apply_generator_exponential(&TruncatedState::vacuum(dim), Generator::Displace(1.0))
                .unwrap();
        let mut factorial = 1.0;
        for n in 0..20 {
            if n > 0 {
                factorial *= n as f64;
            }
            let expected = (-1.0f64).exp() / factorial;
            assert!(
                (out.amplitudes()[n].norm_sqr() - expected).abs() < 1e-12,
                "n = {n}"
            );
        }
    }

    #[test]
    fn apply_rejects_unnormalized_input() {
        let s = TruncatedState::from_amplitudes(DVector::from_element(16, C64::new(1.0, 0.0)), 0.0);
        assert!(apply_generator_exponential(&s, Generator::Squeeze(0.1)).is_err());
    }

    #[test]
    fn psi_vector_properties() {
        let psi = psi_vector(0.0, 0.4, 32).unwrap();
        assert_eq!(psi.norm_sqr(), 0.0);
        for (r, theta) in [(0.5, 0.0), (1.0, 0.7), (1.0, -2.0)] {
            let psi = psi_vector(r, theta, 128).unwrap();
            let phi0 = signal_state(r, theta, 128).unwrap();
            assert!(psi.inner(&phi0).norm() < 1e-10);
            assert!((4.0 * psi.norm_sqr() - qfi_closed(r)).abs() < 1e-6);
        }
    }

    #[test]
    fn psi_is_proportional_to_second_fock_image() {
        // |ψ⟩ = -√2 sinh r cosh r |φ₂⟩
        let r = 0.8;
        let model = ThreeOutcomeModel::new(r, 128).unwrap();
        let psi = psi_vector(r, 0.0, 128).unwrap();
        let scale = -(2.0f64).sqrt() * r.sinh() * r.cosh();
        let diff = (psi.amplitudes() - model.squeezed_second().amplitudes() * C64::new(scale, 0.0))
            .camax();
        assert!(diff < 1e-9, "{diff:e}");
    }

    #[test]
    fn sld_povm_vectors() {
        let povm = sld_povm(1.0, 0.3, 128).unwrap();
        assert!(povm.plus.inner(&povm.minus).norm() < 1e-10);
        assert!((povm.plus.norm_sqr() - 1.0).abs() < 1e-10);
        assert!((povm.minus.norm_sqr() - 1.0).abs() < 1e-10);

        // Unnormalized eigenvectors |ψ⟩ ± i√⟨ψ|ψ⟩|φ₀⟩ have norm √2·(√2 sinh r cosh r)
        // and normalize onto the same projectors.
        let r = 1.0;
        let phi0 = signal_state(r, 0.3, 128).unwrap();
        let psi = psi_vector(r, 0.3, 128).unwrap();
        let dn = psi.norm_sqr().sqrt();
        assert_relative_eq!(dn, 2.0f64.sqrt() * r.sinh() * r.cosh(), max_relative = 1e-9);
        let eig_plus = psi.amplitudes() + phi0.amplitudes() * (I * dn);
        assert_relative_eq!(eig_plus.norm(), 2.0f64.sqrt() * dn, max_relative = 1e-9);
        let overlap = povm.plus.amplitudes().dotc(&eig_plus).norm() / eig_plus.norm();
        assert_relative_eq!(overlap, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn probabilities_at_the_guess() {
        let p = three_outcome_probabilities(1.0, 0.3, 0.3, 128).unwrap();
        assert!((p.p_plus - 0.5).abs() < 1e-10);
        assert!((p.p_minus - 0.5).abs() < 1e-10);
        assert!(p.p_zero < 1e-10);
    }

    #[test]
    fn probability_slope_matches_number_spread() {
        let model = ThreeOutcomeModel::new(1.0, 128).unwrap();
        let h = 1e-4;
        let (a, b) = (model.probabilities(h), model.probabilities(-h));
        let slope_plus = (a.p_plus - b.p_plus) / (2.0 * h);
        let slope_minus = (a.p_minus - b.p_minus) / (2.0 * h);
        let expected = 2.0f64.sinh() / 2.0f64.sqrt();
        assert!((slope_plus - expected).abs() < 1e-4);
        assert!((slope_minus + expected).abs() < 1e-4);
    }

    #[test]
    fn null_outcome_is_quartic() {
        // The null outcome needs a |φ₄⟩ component, which first appears at O(δθ²)
        // in the amplitude: p₀ = O(δθ⁴), inside the O(δθ²) envelope.
        let model = ThreeOutcomeModel::new(1.0, 128).unwrap();
        let deltas = [1e-2, 5e-3, 2.5e-3];
        let p0: Vec<f64> = deltas
            .iter()
            .map(|&d| model.probabilities(d).p_zero)
            .collect();
        for w in 0..2 {
            let slope = (p0[w] / p0[w + 1]).ln() / (deltas[w] / deltas[w + 1]).ln();
            assert!((slope - 4.0).abs() < 0.05, "slope {slope}");
        }
        for (&d, &p) in deltas.iter().zip(&p0) {
            assert!(p <= 0.01 * d * d);
        }
    }

    #[test]
    fn normalization_over_offsets() {
        for (r, dim) in [(0.5, 128), (1.0, 128), (1.5, 256)] {
            let model = ThreeOutcomeModel::new(r, dim).unwrap();
            for k in -20..=20 {
                let d = 0.01 * k as f64;
                let p = model.probabilities(d);
                let raw = p.p_plus + p.p_minus;
                assert!(raw <= 1.0 + 1e-12, "r = {r}, δ = {d}: {raw}");
                let total = raw + p.p_zero;
                assert!((1.0 - 1e-8..=1.0 + 1e-12).contains(&total));
            }
        }
    }

    #[test]
    fn three_outcome_fisher_saturates_qfi() {
        let r = 1.0;
        let model = ThreeOutcomeModel::new(r, 128).unwrap();
        let h = 1e-4;
        for delta in [1e-3, -2e-3] {
            let (a, b, c) = (
                model.probabilities(delta + h),
                model.probabilities(delta - h),
                model.probabilities(delta),
            );
            let term = |pa: f64, pb: f64, p: f64| {
                let d = (pa - pb) / (2.0 * h);
                if p > 0.0 {
                    d * d / p
                } else {
                    0.0
                }
            };
            let fisher = term(a.p_plus, b.p_plus, c.p_plus) + term(a.p_minus, b.p_minus, c.p_minus);
            assert!((fisher / qfi_closed(r) - 1.0).abs() < 1e-3, "F = {fisher}");
        }
    }

    #[test]
    fn oracle_qfi_matches_closed_form() {
        for (r, dim) in [(0.25, 128), (0.75, 128), (1.0, 128), (1.5, 256)] {
            let (_, v) = number_operator_moments(&squeeze_vacuum(r, dim).unwrap()).unwrap();
            assert!((4.0 * v - qfi_closed(r)).abs() < 1e-6, "r = {r}");
        }
    }

    #[test]
    fn optimality_and_sld_spectrum() {
        assert!(optimality_conditions_check(1.0, 0.0, 128).unwrap() <= 1e-8);
        assert!(optimality_conditions_check(0.6, 1.1, 128).unwrap() <= 1e-8);
        assert_eq!(optimality_conditions_check(0.0, 0.0, 32).unwrap(), 0.0);

        let ev = sld_eigenvalues(1.0, 0.2, 128).unwrap();
        let expected = 2.0 * psi_vector(1.0, 0.2, 128).unwrap().norm_sqr().sqrt();
        assert!((ev[0] + expected).abs() < 1e-8);
        assert!((ev[ev.len() - 1] - expected).abs() < 1e-8);
        assert!(ev[1..ev.len() - 1].iter().all(|x| x.abs() < 1e-8));
    }
}
