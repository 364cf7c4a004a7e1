//! Exact conditional detection densities for arbitrary number mixtures.
//!
//! The cumulative effect of `m` detections at phases `φ₁..φ_m` is a product
//! of `m` two-mode operators. Expanding that product gives a polynomial
//! whose coefficients carry the whole detection history; they obey a simple
//! one-step recursion (each detection multiplies the polynomial by
//! `1 + z e^{-iφ}`). The conditional density for the next detection is then
//!
//! ```text
//! p(φ) ∝ B₁ + B₂ + Σ_k  A_k · |c_k e^{-iφ} + c_{k+1}|²
//! ```
//!
//! where the weights `A_k`, `B₁`, `B₂` are falling-factorial moments of the
//! two initial number distributions. At 500 detections the coefficients
//! reach ~10^150 and thermal weights ~10^1100, so both live in log space:
//! coefficients in log-polar form with a per-polynomial global scale
//! (rescaled each step so the largest log-magnitude sits at 0), weights as
//! plain logs, and every sum is performed log-sum-exp style.

use crate::logspace::{LogComplex, LogComplexSum, LogSum, LOG_ZERO};
use crate::model::{CondensateSpec, LogMomentTable};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExactError {
    #[error(
        "condensates exhausted: {detections} detections requested from a \
         Fock pair holding {atoms_total} atoms in total"
    )]
    CondensatesExhausted { atoms_total: u64, detections: usize },
}

/// Coefficients of the cumulative detection operator, in log-polar form.
///
/// After `m` recorded detections the polynomial has degree `m`; with all
/// detection phases zero the (unscaled) coefficient magnitudes are the
/// binomials `C(m, k)`.
#[derive(Debug, Clone)]
pub struct DetectionPolynomial {
    coeffs: Vec<LogComplex>,
    log_scale: f64,
}

impl DetectionPolynomial {
    /// The empty detection record: the constant polynomial 1.
    pub fn new() -> Self {
        DetectionPolynomial {
            coeffs: vec![LogComplex::ONE],
            log_scale: 0.0,
        }
    }

    /// Number of detections recorded so far (= polynomial degree).
    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn coefficients(&self) -> &[LogComplex] {
        &self.coeffs
    }

    /// Coefficient `k` with the global scale applied. Overflows for large
    /// degrees; meant for small polynomials and tests.
    pub fn coefficient(&self, k: usize) -> num_complex::Complex64 {
        self.coeffs[k].to_complex(self.log_scale)
    }

    /// `Σ_k c_k z^k` with the global scale applied (small degrees only).
    pub fn evaluate(&self, z: num_complex::Complex64) -> num_complex::Complex64 {
        let mut acc = num_complex::Complex64::new(0.0, 0.0);
        for k in (0..self.coeffs.len()).rev() {
            acc = acc * z + self.coefficient(k);
        }
        acc
    }

    /// Records one detection: multiplies the polynomial by `1 + z e^{-iφ}`,
    /// i.e. `c_k <- c_k + c_{k-1} e^{-iφ}` with the boundary terms carried
    /// through unchanged, then renormalizes the global scale so the largest
    /// coefficient log-magnitude is 0.
    pub fn push_detection(&mut self, phase: f64) {
        assert!(phase.is_finite(), "detection phase must be finite");
        let rotation = -phase;
        let m = self.coeffs.len();
        self.coeffs.push(LogComplex::ZERO);
        for k in (1..=m).rev() {
            let shifted = self.coeffs[k - 1].rotate(rotation);
            self.coeffs[k] = self.coeffs[k] + shifted;
        }
        let peak = self
            .coeffs
            .iter()
            .map(|c| c.log_mag)
            .fold(LOG_ZERO, f64::max);
        if peak != LOG_ZERO && peak != 0.0 {
            for c in &mut self.coeffs {
                if !c.is_zero() {
                    c.log_mag -= peak;
                }
            }
            self.log_scale += peak;
        }
    }
}

impl Default for DetectionPolynomial {
    fn default() -> Self {
        Self::new()
    }
}

/// Log-domain weights of the conditional density after `degree` detections.
///
/// `log_pair[k]` weights the interference term pairing coefficients `k` and
/// `k+1`; the two boundary terms are the pure single-condensate channels.
#[derive(Debug, Clone)]
pub struct WeightVector {
    pub degree: usize,
    pub log_pair: Vec<f64>,
    pub log_first_only: f64,
    pub log_second_only: f64,
}

impl WeightVector {
    /// Builds the weights from precomputed moment tables (both must cover
    /// order `degree`).
    pub fn from_tables(
        first: &LogMomentTable,
        second: &LogMomentTable,
        gamma: f64,
        degree: usize,
    ) -> WeightVector {
        assert!(gamma.is_finite() && gamma > 0.0, "gamma must be positive");
        assert!(
            first.max_order() >= degree && second.max_order() >= degree,
            "moment tables too short for degree {degree}"
        );
        let ln_gamma_ratio = gamma.ln();
        let log_pair = (0..degree)
            .map(|k| {
                let first_part = first.log_moment(degree - k - 1);
                let second_part = second.log_moment(k);
                if first_part == LOG_ZERO || second_part == LOG_ZERO {
                    LOG_ZERO
                } else {
                    first_part + second_part + (k + 1) as f64 * ln_gamma_ratio
                }
            })
            .collect();
        let second_only = second.log_moment(degree);
        WeightVector {
            degree,
            log_pair,
            log_first_only: first.log_moment(degree),
            log_second_only: if second_only == LOG_ZERO {
                LOG_ZERO
            } else {
                (degree + 1) as f64 * ln_gamma_ratio + second_only
            },
        }
    }

    /// All channels empty: only possible for exhausted or empty condensates.
    pub fn is_degenerate(&self) -> bool {
        self.log_first_only == LOG_ZERO
            && self.log_second_only == LOG_ZERO
            && self.log_pair.iter().all(|&w| w == LOG_ZERO)
    }
}

/// Weights for the density after `detections` detections of the given pair.
pub fn detection_weights(
    spec1: &CondensateSpec,
    spec2: &CondensateSpec,
    gamma: f64,
    detections: usize,
) -> Result<WeightVector, ExactError> {
    if let (CondensateSpec::Fock { atoms: n1 }, CondensateSpec::Fock { atoms: n2 }) = (spec1, spec2)
    {
        if detections as u64 >= n1 + n2 {
            return Err(ExactError::CondensatesExhausted {
                atoms_total: n1 + n2,
                detections,
            });
        }
    }
    let first = LogMomentTable::build(spec1, detections);
    let second = LogMomentTable::build(spec2, detections);
    Ok(WeightVector::from_tables(
        &first, &second, gamma, detections,
    ))
}

/// The single-harmonic content of a conditional density.
///
/// Every conditional density here is exactly `const + 2 Re(D e^{-iφ})`, so
/// it is fully described by its fringe amplitude and peak location:
/// `p(φ) = 1 + visibility · cos(φ - peak_phase)` after mean-normalization.
#[derive(Debug, Clone, Copy)]
pub struct FringeHarmonic {
    /// First-harmonic amplitude of the mean-normalized density, in `[0, 1]`.
    pub visibility: f64,
    /// Phase at which the density peaks, in `[0, 2π)`.
    pub peak_phase: f64,
    /// Log of the unnormalized constant part (the mean before scaling).
    pub log_mean: f64,
    /// Set when every weight vanished (empty condensates): uniform density.
    pub degenerate: bool,
}

impl FringeHarmonic {
    /// Evaluates the mean-normalized density on a uniform grid.
    pub fn density_values(&self, grid_points: usize, out: &mut Vec<f64>) {
        out.clear();
        out.reserve(grid_points);
        for j in 0..grid_points {
            let phi = TAU * j as f64 / grid_points as f64;
            out.push(1.0 + self.visibility * (phi - self.peak_phase).cos());
        }
    }
}

/// Reduces the weighted coefficient sum to its exact harmonic form.
///
/// Expanding `|c_k e^{-iφ} + c_{k+1}|²` splits each term into a constant
/// part and a single `e^{-iφ}` harmonic, so the whole density collapses to
/// one complex fringe amplitude. This is what the simulation loop uses: it
/// costs O(m) per step instead of O(m·G) and is algebraically identical to
/// [`conditional_density`] (cross-checked in the tests).
pub fn fringe_harmonic(poly: &DetectionPolynomial, weights: &WeightVector) -> FringeHarmonic {
    assert_eq!(
        poly.degree(),
        weights.degree,
        "polynomial degree must match weight degree"
    );
    if weights.is_degenerate() {
        return FringeHarmonic {
            visibility: 0.0,
            peak_phase: 0.0,
            log_mean: LOG_ZERO,
            degenerate: true,
        };
    }
    let coeffs = poly.coefficients();
    let scale2 = 2.0 * poly.log_scale();
    let mut constant = LogSum::new();
    constant.push(weights.log_first_only);
    constant.push(weights.log_second_only);
    let mut fringe = LogComplexSum::new();
    for (k, &w) in weights.log_pair.iter().enumerate() {
        if w == LOG_ZERO {
            continue;
        }
        let a = coeffs[k];
        let b = coeffs[k + 1];
        // Constant part: A_k (|c_k|^2 + |c_{k+1}|^2).
        if !a.is_zero() {
            constant.push(w + scale2 + 2.0 * a.log_mag);
        }
        if !b.is_zero() {
            constant.push(w + scale2 + 2.0 * b.log_mag);
        }
        // Harmonic part: A_k c_k conj(c_{k+1}) multiplying e^{-iφ}.
        if !a.is_zero() && !b.is_zero() {
            fringe.push(w + scale2 + a.log_mag + b.log_mag, a.angle - b.angle);
        }
    }
    let log_mean = constant.total();
    let fringe_total = fringe.total();
    let visibility = if fringe_total.is_zero() || log_mean == LOG_ZERO {
        0.0
    } else {
        (2.0 * (fringe_total.log_mag - log_mean).exp()).clamp(0.0, 1.0)
    };
    FringeHarmonic {
        visibility,
        peak_phase: fringe_total.angle,
        log_mean,
        degenerate: false,
    }
}

/// A conditional density evaluated on a uniform phase grid, normalized so
/// its grid mean is 1 ("one plus fringes").
#[derive(Debug, Clone)]
pub struct DensityProfile {
    pub values: Vec<f64>,
    /// All weights vanished; a uniform density was substituted.
    pub degenerate: bool,
}

/// Evaluates the conditional density pointwise on a uniform grid.
///
/// Each grid point sums the boundary channels and every interference term
/// `A_k |c_k e^{-iφ} + c_{k+1}|²` with the running maximum factored out, so
/// the evaluation never leaves floating range. Prefer [`fringe_harmonic`]
/// in hot loops; this direct form is the reference the engines are checked
/// against.
pub fn conditional_density(
    poly: &DetectionPolynomial,
    weights: &WeightVector,
    grid_points: usize,
) -> DensityProfile {
    assert_eq!(
        poly.degree(),
        weights.degree,
        "polynomial degree must match weight degree"
    );
    assert!(grid_points >= 2, "need at least two grid points");
    if weights.is_degenerate() {
        return DensityProfile {
            values: vec![1.0; grid_points],
            degenerate: true,
        };
    }
    let coeffs = poly.coefficients();
    let scale2 = 2.0 * poly.log_scale();
    let mut log_values = Vec::with_capacity(grid_points);
    for j in 0..grid_points {
        let phi = TAU * j as f64 / grid_points as f64;
        let mut acc = LogSum::new();
        acc.push(weights.log_first_only);
        acc.push(weights.log_second_only);
        for (k, &w) in weights.log_pair.iter().enumerate() {
            if w == LOG_ZERO {
                continue;
            }
            let sum = coeffs[k].rotate(-phi) + coeffs[k + 1];
            if !sum.is_zero() {
                acc.push(w + scale2 + 2.0 * sum.log_mag);
            }
        }
        log_values.push(acc.total());
    }
    let peak = log_values.iter().copied().fold(LOG_ZERO, f64::max);
    let mut values: Vec<f64> = log_values.iter().map(|&lv| (lv - peak).exp()).collect();
    let mean = values.iter().sum::<f64>() / grid_points as f64;
    for v in &mut values {
        *v /= mean;
    }
    DensityProfile {
        values,
        degenerate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logspace::LnFactorialTable;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn poly_from(phases: &[f64]) -> DetectionPolynomial {
        let mut poly = DetectionPolynomial::new();
        for &p in phases {
            poly.push_detection(p);
        }
        poly
    }

    #[test]
    fn first_detection_expands_the_product() {
        let poly = poly_from(&[1.3]);
        assert_eq!(poly.degree(), 1);
        let c0 = poly.coefficient(0);
        let c1 = poly.coefficient(1);
        assert_relative_eq!(c0.re, 1.0, max_relative = 1e-14);
        assert_relative_eq!(c0.im, 0.0, epsilon = 1e-14);
        let want = Complex64::from_polar(1.0, -1.3);
        assert_relative_eq!(c1.re, want.re, max_relative = 1e-14);
        assert_relative_eq!(c1.im, want.im, max_relative = 1e-14);
    }

    #[test]
    fn middle_coefficient_sums_both_phases() {
        let (p1, p2) = (0.4, 2.9);
        let poly = poly_from(&[p1, p2]);
        let want = Complex64::from_polar(1.0, -p1) + Complex64::from_polar(1.0, -p2);
        let got = poly.coefficient(1);
        assert_relative_eq!(got.re, want.re, max_relative = 1e-13);
        assert_relative_eq!(got.im, want.im, max_relative = 1e-13);
    }

    #[test]
    fn zero_phase_coefficients_are_binomials() {
        let mut poly = DetectionPolynomial::new();
        for _ in 0..500 {
            poly.push_detection(0.0);
        }
        let facts = LnFactorialTable::new(500);
        let ln_binom = facts.get(500) - facts.get(250) - facts.get(250);
        let got = poly.coefficients()[250].log_mag + poly.log_scale();
        assert_relative_eq!(got, ln_binom, max_relative = 1e-10);
    }

    #[test]
    fn polynomial_identity_at_random_points() {
        // Σ c_k z^k must reproduce Π (1 + z e^{-iφ_j}) for any z.
        let phases: Vec<f64> = (0..30)
            .map(|i| (i as f64 * 0.7321).rem_euclid(TAU))
            .collect();
        let poly = poly_from(&phases);
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for _ in 0..10 {
            let z = Complex64::new(next() * 2.0 - 1.0, next() * 2.0 - 1.0);
            let direct: Complex64 = phases
                .iter()
                .map(|&p| Complex64::new(1.0, 0.0) + z * Complex64::from_polar(1.0, -p))
                .product();
            let via_poly = poly.evaluate(z);
            assert_relative_eq!(via_poly.re, direct.re, max_relative = 1e-9, epsilon = 1e-9);
            assert_relative_eq!(via_poly.im, direct.im, max_relative = 1e-9, epsilon = 1e-9);
        }
    }

    #[test]
    fn poisson_weights_give_half_visibility() {
        let spec = CondensateSpec::poisson(4.0).unwrap();
        let w = detection_weights(&spec, &spec, 1.0, 1).unwrap();
        let poly = poly_from(&[2.0]);
        let h = fringe_harmonic(&poly, &w);
        assert_relative_eq!(h.visibility, 0.5, max_relative = 1e-12);
        assert_relative_eq!(h.peak_phase, 2.0, max_relative = 1e-12);
    }

    #[test]
    fn thermal_weights_add_factorial_prefactor() {
        let spec_t = CondensateSpec::thermal(3.0).unwrap();
        let spec_p = CondensateSpec::poisson(3.0).unwrap();
        let wt = detection_weights(&spec_t, &spec_t, 1.0, 2).unwrap();
        let wp = detection_weights(&spec_p, &spec_p, 1.0, 2).unwrap();
        // (m-k)! (k+1)! with m = 2, k = 0: 2! 1! = 2.
        assert_relative_eq!(
            wt.log_pair[0] - wp.log_pair[0],
            2.0f64.ln(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn fock_weights_match_direct_products() {
        // Direct two-mode expectation on |3,3>: weights are exact falling
        // products computed here with plain arithmetic.
        let spec = CondensateSpec::fock(3);
        let w = detection_weights(&spec, &spec, 1.0, 2).unwrap();
        assert_relative_eq!(w.log_pair[0].exp(), (3.0 * 2.0) * 3.0, max_relative = 1e-12);
        assert_relative_eq!(w.log_pair[1].exp(), 3.0 * (3.0 * 2.0), max_relative = 1e-12);
        assert_relative_eq!(
            w.log_first_only.exp(),
            3.0 * 2.0 * 1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            w.log_second_only.exp(),
            3.0 * 2.0 * 1.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn fock_pair_exhaustion_rejected() {
        let spec = CondensateSpec::fock(3);
        let err = detection_weights(&spec, &spec, 1.0, 6).unwrap_err();
        assert_eq!(
            err,
            ExactError::CondensatesExhausted {
                atoms_total: 6,
                detections: 6
            }
        );
        assert!(detection_weights(&spec, &spec, 1.0, 5).is_ok());
    }

    #[test]
    fn no_detections_gives_uniform_density() {
        let spec = CondensateSpec::thermal(2.0).unwrap();
        let poly = DetectionPolynomial::new();
        let w = detection_weights(&spec, &spec, 1.0, 0).unwrap();
        let density = conditional_density(&poly, &w, 64);
        for v in &density.values {
            assert_relative_eq!(*v, 1.0, max_relative = 1e-14);
        }
        assert!(!density.degenerate);
        assert_eq!(fringe_harmonic(&poly, &w).visibility, 0.0);
    }

    #[test]
    fn one_detection_closed_forms() {
        let grid = 256;
        let phi1 = 0.77;
        let poly = poly_from(&[phi1]);

        let poisson = CondensateSpec::poisson(5.0).unwrap();
        let w = detection_weights(&poisson, &poisson, 1.0, 1).unwrap();
        let density = conditional_density(&poly, &w, grid);
        for (j, v) in density.values.iter().enumerate() {
            let phi = TAU * j as f64 / grid as f64;
            assert_relative_eq!(
                *v,
                1.0 + 0.5 * (phi - phi1).cos(),
                max_relative = 1e-12,
                epsilon = 1e-12
            );
        }

        let thermal = CondensateSpec::thermal(5.0).unwrap();
        let w = detection_weights(&thermal, &thermal, 1.0, 1).unwrap();
        let density = conditional_density(&poly, &w, grid);
        for (j, v) in density.values.iter().enumerate() {
            let phi = TAU * j as f64 / grid as f64;
            assert_relative_eq!(
                *v,
                1.0 + (phi - phi1).cos() / 3.0,
                max_relative = 1e-12,
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn harmonic_matches_direct_evaluation() {
        let phases = [0.3, 5.9, 2.2, 2.3, 4.4, 1.0, 0.05];
        let grid = 128;
        let specs = [
            CondensateSpec::poisson(7.0).unwrap(),
            CondensateSpec::thermal(2.5).unwrap(),
            CondensateSpec::fock(9),
            CondensateSpec::gaussian(20.0, 12.0).unwrap(),
        ];
        for spec1 in &specs {
            for spec2 in &specs {
                let mut poly = DetectionPolynomial::new();
                for (m, &p) in phases.iter().enumerate() {
                    poly.push_detection(p);
                    let w = detection_weights(spec1, spec2, 0.8, m + 1).unwrap();
                    let direct = conditional_density(&poly, &w, grid);
                    let h = fringe_harmonic(&poly, &w);
                    let mut via_harmonic = Vec::new();
                    h.density_values(grid, &mut via_harmonic);
                    for (a, b) in direct.values.iter().zip(&via_harmonic) {
                        assert_relative_eq!(*a, *b, max_relative = 1e-11, epsilon = 1e-11);
                    }
                }
            }
        }
    }

    #[test]
    fn density_ignores_detection_order() {
        let spec = CondensateSpec::thermal(4.0).unwrap();
        let phases = [0.9, 3.3, 5.1, 1.7];
        let mut permuted = phases;
        permuted.reverse();
        permuted.swap(0, 1);
        let w = detection_weights(&spec, &spec, 1.0, phases.len()).unwrap();
        let a = conditional_density(&poly_from(&phases), &w, 96);
        let b = conditional_density(&poly_from(&permuted), &w, 96);
        for (x, y) in a.values.iter().zip(&b.values) {
            assert_relative_eq!(*x, *y, max_relative = 1e-11, epsilon = 1e-12);
        }
    }

    #[test]
    fn density_covariant_under_global_phase_shift() {
        let spec = CondensateSpec::poisson(6.0).unwrap();
        let phases: [f64; 3] = [0.2, 1.9, 4.0];
        let shift = 1.234;
        let shifted: Vec<f64> = phases
            .iter()
            .map(|&p| (p + shift).rem_euclid(TAU))
            .collect();
        let w = detection_weights(&spec, &spec, 1.0, phases.len()).unwrap();
        let base = fringe_harmonic(&poly_from(&phases), &w);
        let moved = fringe_harmonic(&poly_from(&shifted), &w);
        assert_relative_eq!(base.visibility, moved.visibility, max_relative = 1e-11);
        assert_relative_eq!(
            (moved.peak_phase - base.peak_phase).rem_euclid(TAU),
            shift,
            max_relative = 1e-9
        );
    }

    #[test]
    fn density_integrates_to_grid_mean() {
        let spec = CondensateSpec::thermal(3.0).unwrap();
        let phases = [0.4, 0.5, 2.8, 2.9, 2.95];
        let w = detection_weights(&spec, &spec, 1.0, phases.len()).unwrap();
        let density = conditional_density(&poly_from(&phases), &w, 512);
        // Trapezoid over the periodic grid equals the grid mean.
        let trap: f64 = density.values.iter().sum::<f64>() / 512.0;
        assert_relative_eq!(trap, 1.0, epsilon = 1e-12);
        assert!(density.values.iter().all(|&v| v > 0.0));
    }

    #[test]
    fn empty_condensates_flagged_degenerate() {
        let empty = CondensateSpec::poisson(0.0).unwrap();
        let w = detection_weights(&empty, &empty, 1.0, 1).unwrap();
        assert!(w.is_degenerate());
        let density = conditional_density(&poly_from(&[1.0]), &w, 64);
        assert!(density.degenerate);
        assert!(density.values.iter().all(|&v| v == 1.0));
    }
}
