//! Experiment configuration and the closed-form single-detection results.
//!
//! A condensate is described only by its initial atom-number distribution;
//! all positions enter through the detection phase, so the whole experiment
//! lives on the circle `[0, 2π)`. The key quantity supplied to the detection
//! engines is the family of falling-factorial moments
//! `<n (n-1) ... (n-k)>`, which takes a closed form for each supported
//! distribution:
//!
//! - Fock `n`: the exact falling product, zero once `k >= n`,
//! - Poissonian mean `n̄`: `n̄^(k+1)`,
//! - thermal mean `n̄`: `(k+1)! n̄^(k+1)`,
//! - Gaussian: second-moment relation for `k <= 1`, and numerical summation
//!   over a discretized, renormalized integer support (±8σ) for `k > 1`.

use crate::logspace::{LnFactorialTable, LogSum, LOG_ZERO};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("{field} must be finite and nonnegative, got {value}")]
    InvalidParameter { field: &'static str, value: f64 },
    #[error("gamma_ratio must be finite and positive, got {0}")]
    InvalidGamma(f64),
    #[error("{field} must be at least {min}, got {value}")]
    TooSmall {
        field: &'static str,
        min: usize,
        value: usize,
    },
    #[error("ratio grid must be strictly positive, got {0}")]
    InvalidRatio(f64),
    #[error("visibility curve needs a nonempty condensate pair")]
    EmptyCurveSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistributionKind {
    Fock,
    Poisson,
    Thermal,
    Gaussian,
}

impl std::fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            DistributionKind::Fock => "fock",
            DistributionKind::Poisson => "poisson",
            DistributionKind::Thermal => "thermal",
            DistributionKind::Gaussian => "gaussian",
        };
        write!(f, "{name}")
    }
}

/// One condensate's initial number distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CondensateSpec {
    /// Exactly `atoms` atoms.
    Fock { atoms: u64 },
    /// Poissonian number distribution with the given mean.
    Poisson { mean: f64 },
    /// Thermal (geometric) number distribution with the given mean.
    Thermal { mean: f64 },
    /// Gaussian number distribution with the given mean and variance.
    Gaussian { mean: f64, variance: f64 },
}

impl CondensateSpec {
    pub fn fock(atoms: u64) -> CondensateSpec {
        CondensateSpec::Fock { atoms }
    }

    pub fn poisson(mean: f64) -> Result<CondensateSpec, ModelError> {
        check_nonneg("mean", mean)?;
        Ok(CondensateSpec::Poisson { mean })
    }

    pub fn thermal(mean: f64) -> Result<CondensateSpec, ModelError> {
        check_nonneg("mean", mean)?;
        Ok(CondensateSpec::Thermal { mean })
    }

    pub fn gaussian(mean: f64, variance: f64) -> Result<CondensateSpec, ModelError> {
        check_nonneg("mean", mean)?;
        check_nonneg("variance", variance)?;
        Ok(CondensateSpec::Gaussian { mean, variance })
    }

    pub fn kind(&self) -> DistributionKind {
        match self {
            CondensateSpec::Fock { .. } => DistributionKind::Fock,
            CondensateSpec::Poisson { .. } => DistributionKind::Poisson,
            CondensateSpec::Thermal { .. } => DistributionKind::Thermal,
            CondensateSpec::Gaussian { .. } => DistributionKind::Gaussian,
        }
    }

    /// Mean atom number. For a Fock state this equals the exact count.
    pub fn mean(&self) -> f64 {
        match *self {
            CondensateSpec::Fock { atoms } => atoms as f64,
            CondensateSpec::Poisson { mean } => mean,
            CondensateSpec::Thermal { mean } => mean,
            CondensateSpec::Gaussian { mean, .. } => mean,
        }
    }

    /// `<n(n-1)...(n-k)>`, the falling-factorial moment with `k+1` factors.
    pub fn falling_factorial_moment(&self, order: usize) -> f64 {
        self.log_falling_factorial_moment(order).exp()
    }

    /// Natural log of [`Self::falling_factorial_moment`]; `-inf` when the
    /// moment is zero. This is the form every detection engine consumes,
    /// since the raw moments overflow `f64` after a few hundred detections.
    pub fn log_falling_factorial_moment(&self, order: usize) -> f64 {
        LogMomentTable::build(self, order).log_moment(order)
    }

    /// `<n(n-1)> = <n^2> - <n>` with its sign preserved.
    ///
    /// The closed Gaussian relation `σ² + n̄² - n̄` can dip below zero for
    /// sub-Poissonian parameters; the single-detection visibility formula
    /// wants that signed value, while the log-domain engines clamp it at
    /// zero.
    fn signed_pair_moment(&self) -> f64 {
        match *self {
            CondensateSpec::Fock { atoms } => {
                let n = atoms as f64;
                n * (n - 1.0)
            }
            CondensateSpec::Poisson { mean } => mean * mean,
            CondensateSpec::Thermal { mean } => 2.0 * mean * mean,
            CondensateSpec::Gaussian { mean, variance } => variance + mean * mean - mean,
        }
    }
}

fn check_nonneg(field: &'static str, value: f64) -> Result<(), ModelError> {
    if value.is_finite() && value >= 0.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter { field, value })
    }
}

/// Precomputed `ln <n(n-1)...(n-j)>` for `j = 0..=max_order`.
#[derive(Debug, Clone)]
pub struct LogMomentTable {
    values: Vec<f64>,
}

impl LogMomentTable {
    pub fn build(spec: &CondensateSpec, max_order: usize) -> LogMomentTable {
        let values = match *spec {
            CondensateSpec::Poisson { mean } => {
                if mean == 0.0 {
                    vec![LOG_ZERO; max_order + 1]
                } else {
                    let ln_mean = mean.ln();
                    (0..=max_order).map(|j| (j + 1) as f64 * ln_mean).collect()
                }
            }
            CondensateSpec::Thermal { mean } => {
                if mean == 0.0 {
                    vec![LOG_ZERO; max_order + 1]
                } else {
                    let ln_mean = mean.ln();
                    let facts = LnFactorialTable::new(max_order + 1);
                    (0..=max_order)
                        .map(|j| facts.get(j + 1) + (j + 1) as f64 * ln_mean)
                        .collect()
                }
            }
            CondensateSpec::Fock { atoms } => {
                let n = atoms as usize;
                let facts = LnFactorialTable::new(n);
                (0..=max_order)
                    .map(|j| facts.ln_falling(n, j + 1))
                    .collect()
            }
            CondensateSpec::Gaussian { mean, variance } => {
                gaussian_log_moments(mean, variance, max_order)
            }
        };
        LogMomentTable { values }
    }

    pub fn log_moment(&self, order: usize) -> f64 {
        self.values[order]
    }

    pub fn max_order(&self) -> usize {
        self.values.len() - 1
    }
}

/// Gaussian moments: closed form for the first two orders, discretized
/// integer summation (±8σ, renormalized) beyond that.
fn gaussian_log_moments(mean: f64, variance: f64, max_order: usize) -> Vec<f64> {
    let mut values = Vec::with_capacity(max_order + 1);
    values.push(if mean > 0.0 { mean.ln() } else { LOG_ZERO });
    if max_order >= 1 {
        let pair = variance + mean * mean - mean;
        values.push(if pair > 0.0 { pair.ln() } else { LOG_ZERO });
    }
    if max_order >= 2 {
        let sigma = variance.sqrt();
        let lo = (mean - 8.0 * sigma).floor().max(0.0) as usize;
        let hi = (mean + 8.0 * sigma).ceil().max(lo as f64) as usize;
        let facts = LnFactorialTable::new(hi);
        // Log-weights of the discretized, renormalized distribution.
        let log_weights: Vec<f64> = (lo..=hi)
            .map(|n| {
                if sigma == 0.0 {
                    if n as f64 == mean || (hi == lo && n == lo) {
                        0.0
                    } else {
                        LOG_ZERO
                    }
                } else {
                    let d = n as f64 - mean;
                    -d * d / (2.0 * variance)
                }
            })
            .collect();
        let log_norm = crate::logspace::log_sum_exp(&log_weights);
        for j in 2..=max_order {
            let mut acc = LogSum::new();
            for (idx, n) in (lo..=hi).enumerate() {
                let ff = facts.ln_falling(n, j + 1);
                if ff != LOG_ZERO && log_weights[idx] != LOG_ZERO {
                    acc.push(log_weights[idx] + ff);
                }
            }
            let total = acc.total();
            values.push(if total == LOG_ZERO || log_norm == LOG_ZERO {
                LOG_ZERO
            } else {
                total - log_norm
            });
        }
    }
    values
}

/// Conditional visibility of the interference pattern after one detection.
///
/// General moment form: `2Γ<n₁><n₂> / ([<n₁²>-<n₁>] + Γ²[<n₂²>-<n₂>] +
/// 2Γ<n₁><n₂>)`. Specializes to 1/3 (thermal), 1/2 (Poissonian) and
/// `1/(2(1-1/N))` (equal Fock states) at equal net counting rates. Returns 0
/// when either condensate is empty.
pub fn visibility_one_detection(spec1: &CondensateSpec, spec2: &CondensateSpec, gamma: f64) -> f64 {
    assert!(gamma.is_finite() && gamma > 0.0, "gamma must be positive");
    let interference = 2.0 * gamma * spec1.mean() * spec2.mean();
    if interference == 0.0 {
        return 0.0;
    }
    let denom =
        spec1.signed_pair_moment() + gamma * gamma * spec2.signed_pair_moment() + interference;
    (interference / denom).clamp(0.0, 1.0)
}

/// One point of a visibility-vs-rate-ratio curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub ratio: f64,
    pub visibility: f64,
}

/// Tabulates the one-detection visibility against the net counting-rate
/// ratio `Γ n̄₂ / n̄₁`.
///
/// The condensate pair is held fixed and the detection-rate ratio `Γ` is
/// chosen per point so that the net rate ratio matches; for the number-state
/// reference curve this means a fixed pair (e.g. 20/20 atoms) with `Γ`
/// sweeping the axis.
pub fn visibility_curve(
    spec1: &CondensateSpec,
    spec2: &CondensateSpec,
    ratios: &[f64],
) -> Result<Vec<CurvePoint>, ModelError> {
    if spec1.mean() == 0.0 || spec2.mean() == 0.0 {
        return Err(ModelError::EmptyCurveSpec);
    }
    ratios
        .iter()
        .map(|&ratio| {
            if !(ratio.is_finite() && ratio > 0.0) {
                return Err(ModelError::InvalidRatio(ratio));
            }
            let gamma = ratio * spec1.mean() / spec2.mean();
            Ok(CurvePoint {
                ratio,
                visibility: visibility_one_detection(spec1, spec2, gamma),
            })
        })
        .collect()
}

/// Full configuration of a detection experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub condensate_1: CondensateSpec,
    pub condensate_2: CondensateSpec,
    /// Detection-rate ratio `Γ = γ₂/γ₁`.
    pub gamma_ratio: f64,
    /// Number of detections per run.
    pub detections: usize,
    /// Phase-grid resolution for densities and sampling.
    pub grid_points: usize,
    pub histogram_bins: usize,
    pub runs: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if !(self.gamma_ratio.is_finite() && self.gamma_ratio > 0.0) {
            return Err(ModelError::InvalidGamma(self.gamma_ratio));
        }
        if self.grid_points < 64 {
            return Err(ModelError::TooSmall {
                field: "grid_points",
                min: 64,
                value: self.grid_points,
            });
        }
        if self.histogram_bins < 2 {
            return Err(ModelError::TooSmall {
                field: "histogram_bins",
                min: 2,
                value: self.histogram_bins,
            });
        }
        if self.detections < 1 {
            return Err(ModelError::TooSmall {
                field: "detections",
                min: 1,
                value: self.detections,
            });
        }
        if self.runs < 1 {
            return Err(ModelError::TooSmall {
                field: "runs",
                min: 1,
                value: self.runs,
            });
        }
        Ok(())
    }
}

impl Default for ExperimentConfig {
    /// Defaults mirror the reference experiments: 500 detections sorted
    /// into 25 bins, 1000 runs, equal net counting rates.
    fn default() -> Self {
        ExperimentConfig {
            condensate_1: CondensateSpec::Poisson { mean: 100.0 },
            condensate_2: CondensateSpec::Poisson { mean: 100.0 },
            gamma_ratio: 1.0,
            detections: 500,
            grid_points: 1024,
            histogram_bins: 25,
            runs: 1000,
            seed: 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Brute-force moment by probability summation, truncated at tail mass
    /// below `1e-12`; the independent oracle for the closed forms.
    fn brute_force_moment(probs: &[f64], order: usize) -> f64 {
        probs
            .iter()
            .enumerate()
            .map(|(n, &p)| {
                let mut prod = 1.0;
                for j in 0..=order {
                    prod *= n as f64 - j as f64;
                }
                if n > order {
                    p * prod
                } else {
                    0.0
                }
            })
            .sum()
    }

    fn geometric_probs(mean: f64, count: usize) -> Vec<f64> {
        let q = mean / (1.0 + mean);
        (0..count)
            .map(|n| q.powi(n as i32) / (1.0 + mean))
            .collect()
    }

    fn poisson_probs(mean: f64, count: usize) -> Vec<f64> {
        let mut probs = Vec::with_capacity(count);
        let mut p = (-mean).exp();
        for n in 0..count {
            probs.push(p);
            p *= mean / (n as f64 + 1.0);
        }
        probs
    }

    #[test]
    fn thermal_moment_closed_form() {
        let spec = CondensateSpec::thermal(2.0).unwrap();
        // (k+1)! n̄^(k+1) with k = 1: 2! * 2^2 = 8, consistent with
        // <m^2> - <m> = 2 n̄^2.
        assert_relative_eq!(spec.falling_factorial_moment(1), 8.0, max_relative = 1e-12);
    }

    #[test]
    fn poisson_moment_is_mean_power() {
        let spec = CondensateSpec::poisson(3.0).unwrap();
        assert_relative_eq!(spec.falling_factorial_moment(0), 3.0, max_relative = 1e-14);
    }

    #[test]
    fn fock_moment_exhausts() {
        let spec = CondensateSpec::fock(5);
        assert_eq!(spec.falling_factorial_moment(5), 0.0);
        assert_eq!(spec.log_falling_factorial_moment(5), LOG_ZERO);
        // 5*4*3 for order 2.
        assert_relative_eq!(spec.falling_factorial_moment(2), 60.0, max_relative = 1e-13);
    }

    #[test]
    fn thermal_moment_matches_brute_force() {
        // 4! * 1.5^4 = 121.5, cross-checked against geometric summation.
        let spec = CondensateSpec::thermal(1.5).unwrap();
        let brute = brute_force_moment(&geometric_probs(1.5, 200), 3);
        assert_relative_eq!(brute, 121.5, max_relative = 1e-10);
        assert_relative_eq!(
            spec.falling_factorial_moment(3),
            121.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn moments_match_brute_force_sweep() {
        for mean in [0.5, 2.0, 7.5, 20.0] {
            let thermal = CondensateSpec::thermal(mean).unwrap();
            let poisson = CondensateSpec::poisson(mean).unwrap();
            // Tail mass below 1e-12 well before n = 60 n̄ + 400.
            let count = (mean * 60.0) as usize + 400;
            let geo = geometric_probs(mean, count);
            let poi = poisson_probs(mean, count);
            for order in 0..=6 {
                assert_relative_eq!(
                    thermal.falling_factorial_moment(order),
                    brute_force_moment(&geo, order),
                    max_relative = 1e-8
                );
                assert_relative_eq!(
                    poisson.falling_factorial_moment(order),
                    brute_force_moment(&poi, order),
                    max_relative = 1e-8
                );
            }
        }
    }

    #[test]
    fn gaussian_moment_matches_discretized_summation() {
        let mean = 30.0;
        let variance = 25.0;
        let spec = CondensateSpec::gaussian(mean, variance).unwrap();
        // Independent discretized-Gaussian summation.
        let lo = (mean - 8.0 * variance.sqrt()).floor().max(0.0) as usize;
        let hi = (mean + 8.0 * variance.sqrt()).ceil() as usize;
        let weights: Vec<f64> = (lo..=hi)
            .map(|n| (-(n as f64 - mean).powi(2) / (2.0 * variance)).exp())
            .collect();
        let norm: f64 = weights.iter().sum();
        for order in 2..=4 {
            let brute: f64 = (lo..=hi)
                .zip(&weights)
                .map(|(n, w)| {
                    let mut prod = 1.0;
                    for j in 0..=order {
                        prod *= n as f64 - j as f64;
                    }
                    if n > order {
                        w * prod
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
                / norm;
            assert_relative_eq!(
                spec.falling_factorial_moment(order),
                brute,
                max_relative = 1e-10
            );
        }
        // Closed forms for the first two orders.
        assert_relative_eq!(spec.falling_factorial_moment(0), mean, max_relative = 1e-14);
        assert_relative_eq!(
            spec.falling_factorial_moment(1),
            variance + mean * mean - mean,
            max_relative = 1e-14
        );
    }

    #[test]
    fn visibility_closed_forms() {
        // Thermal at equal net rates: 1/3 for any mean pair with n̄₁ = Γ n̄₂.
        let t1 = CondensateSpec::thermal(6.0).unwrap();
        let t2 = CondensateSpec::thermal(2.0).unwrap();
        assert_relative_eq!(
            visibility_one_detection(&t1, &t2, 3.0),
            1.0 / 3.0,
            max_relative = 1e-14
        );

        // Poissonian at equal rates: 1/2.
        let p = CondensateSpec::poisson(4.0).unwrap();
        assert_relative_eq!(
            visibility_one_detection(&p, &p, 1.0),
            0.5,
            max_relative = 1e-14
        );

        // Equal Fock states: 1/(2(1-1/N)) with N = 40.
        let f = CondensateSpec::fock(20);
        assert_relative_eq!(
            visibility_one_detection(&f, &f, 1.0),
            1.0 / (2.0 * (1.0 - 1.0 / 40.0)),
            max_relative = 1e-14
        );

        // Gaussian with σ² = n̄ reproduces the Poissonian value.
        let g = CondensateSpec::gaussian(50.0, 50.0).unwrap();
        assert_relative_eq!(
            visibility_one_detection(&g, &g, 1.0),
            0.5,
            max_relative = 1e-14
        );

        // Single condensate shows no fringes.
        let empty = CondensateSpec::poisson(0.0).unwrap();
        assert_eq!(visibility_one_detection(&p, &empty, 1.0), 0.0);
    }

    #[test]
    fn fock_visibility_matches_brute_force_expectation() {
        // Direct two-mode expectation values on |n1, n2>: for a Fock pair
        // the visibility is 2Γn₁n₂ / (n₁(n₁-1) + Γ²n₂(n₂-1) + 2Γn₁n₂).
        let (n1, n2, gamma) = (20u64, 20u64, 1.0);
        let (a, b) = (n1 as f64, n2 as f64);
        let brute = 2.0 * gamma * a * b
            / (a * (a - 1.0) + gamma * gamma * b * (b - 1.0) + 2.0 * gamma * a * b);
        let v =
            visibility_one_detection(&CondensateSpec::fock(n1), &CondensateSpec::fock(n2), gamma);
        assert_relative_eq!(v, brute, max_relative = 1e-14);
    }

    #[test]
    fn visibility_exchange_symmetry() {
        let specs = [
            CondensateSpec::thermal(3.0).unwrap(),
            CondensateSpec::poisson(5.0).unwrap(),
            CondensateSpec::fock(9),
            CondensateSpec::gaussian(12.0, 5.0).unwrap(),
        ];
        for s1 in &specs {
            for s2 in &specs {
                for gamma in [0.25, 1.0, 3.5] {
                    assert_relative_eq!(
                        visibility_one_detection(s1, s2, gamma),
                        visibility_one_detection(s2, s1, 1.0 / gamma),
                        max_relative = 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn curve_peaks_at_equal_rates() {
        // Symmetric log-spaced grid around ratio 1.
        let ratios: Vec<f64> = (-20..=20).map(|i| 10f64.powf(i as f64 / 10.0)).collect();
        let fock = CondensateSpec::fock(20);
        let poisson = CondensateSpec::poisson(10.0).unwrap();
        let thermal = CondensateSpec::thermal(10.0).unwrap();
        for spec in [&fock, &poisson, &thermal] {
            let curve = visibility_curve(spec, spec, &ratios).unwrap();
            let argmax = curve
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.visibility.total_cmp(&b.1.visibility))
                .unwrap()
                .0;
            assert_relative_eq!(curve[argmax].ratio, 1.0, max_relative = 1e-12);
        }
        // Ordering at equal rates: thermal < Poisson <= Fock for N >= 2.
        let at_one = |spec: &CondensateSpec| visibility_one_detection(spec, spec, 1.0);
        assert!(at_one(&thermal) < at_one(&poisson));
        for n in [1u64, 2, 5, 100] {
            assert!(at_one(&poisson) <= at_one(&CondensateSpec::fock(n)));
        }
        // Thermal curve is symmetric under ratio inversion.
        let curve = visibility_curve(&thermal, &thermal, &ratios).unwrap();
        for (lo, hi) in curve.iter().zip(curve.iter().rev()) {
            assert_relative_eq!(lo.visibility, hi.visibility, max_relative = 1e-10);
        }
    }

    #[test]
    fn curve_tends_to_zero_at_small_ratio() {
        let p = CondensateSpec::poisson(10.0).unwrap();
        let curve = visibility_curve(&p, &p, &[1e-6]).unwrap();
        assert!(curve[0].visibility < 1e-5);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CondensateSpec::poisson(-1.0).is_err());
        assert!(CondensateSpec::gaussian(1.0, -0.5).is_err());
        assert!(CondensateSpec::thermal(f64::NAN).is_err());
        let p = CondensateSpec::poisson(1.0).unwrap();
        assert_eq!(
            visibility_curve(&p, &p, &[0.0]).unwrap_err(),
            ModelError::InvalidRatio(0.0)
        );

        let config = ExperimentConfig {
            grid_points: 32,
            ..Default::default()
        };
        assert!(config.validate().is_err());
        let config = ExperimentConfig {
            gamma_ratio: 0.0,
            ..Default::default()
        };
        assert!(config.validate().is_err());
        assert!(ExperimentConfig::default().validate().is_ok());
    }
}
