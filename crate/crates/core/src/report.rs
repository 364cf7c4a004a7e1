//! Cross-engine validation suite.
//!
//! Each check compares two independent routes to the same quantity and
//! reports the worst deviation against a pinned tolerance. Densities are
//! mean-normalized to 1, so deviations read as fractions of the mean level.

use crate::exact::{conditional_density, detection_weights, DetectionPolynomial};
use crate::filter::{filter_update, lambda_visibility, predictive_density, PhaseGrid};
use crate::model::{visibility_one_detection, CondensateSpec};
use crate::oracle;
use crate::rng::run_stream;
use crate::trajectory::NumberStateVector;
use rand::Rng;
use serde::Serialize;
use std::f64::consts::TAU;

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl CheckOutcome {
    fn new(name: impl Into<String>, max_deviation: f64, tolerance: f64) -> CheckOutcome {
        CheckOutcome {
            name: name.into(),
            max_deviation,
            tolerance,
            passed: max_deviation.is_finite() && max_deviation <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<CheckOutcome>,
    pub passed: bool,
}

fn max_abs_deviation(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Uniform random detection phases from a dedicated stream.
fn random_phases(seed: u64, stream: u64, count: usize) -> Vec<f64> {
    let mut rng = run_stream(seed, stream);
    (0..count).map(|_| rng.random::<f64>() * TAU).collect()
}

/// Exact-engine vs filter next-detection density for a Poissonian pair,
/// after `detections` random detections; `lambda_scale` perturbs the filter
/// contrast (1.0 for the honest comparison; used by sensitivity tests).
pub fn poisson_identity_deviation(
    mean_1: f64,
    mean_2: f64,
    gamma: f64,
    detections: usize,
    lambda_scale: f64,
    seed: u64,
) -> f64 {
    let grid_points = 512;
    let phases = random_phases(seed, 1000 + detections as u64, detections);
    let spec1 = CondensateSpec::Poisson { mean: mean_1 };
    let spec2 = CondensateSpec::Poisson { mean: mean_2 };
    let mut poly = DetectionPolynomial::new();
    let lambda = (lambda_visibility(mean_1, mean_2, gamma) * lambda_scale).min(1.0);
    let mut grid = PhaseGrid::uniform(grid_points);
    for &p in &phases {
        poly.push_detection(p);
        filter_update(&mut grid, lambda, p);
    }
    let weights = detection_weights(&spec1, &spec2, gamma, detections).expect("valid weights");
    let exact = conditional_density(&poly, &weights, grid_points);
    let filtered = predictive_density(&grid, lambda, grid_points);
    max_abs_deviation(&exact.values, &filtered)
}

/// Runs every cross-engine check and collects the outcomes.
pub fn run_validation_suite(seed: u64) -> ValidationReport {
    let mut checks = Vec::new();

    // Closed-form one-detection visibilities at equal net rates.
    {
        let thermal = CondensateSpec::Thermal { mean: 7.0 };
        let poisson = CondensateSpec::Poisson { mean: 7.0 };
        let fock = CondensateSpec::Fock { atoms: 20 };
        let gaussian = CondensateSpec::Gaussian {
            mean: 50.0,
            variance: 50.0,
        };
        let dev = [
            (visibility_one_detection(&thermal, &thermal, 1.0) - 1.0 / 3.0).abs(),
            (visibility_one_detection(&poisson, &poisson, 1.0) - 0.5).abs(),
            (visibility_one_detection(&fock, &fock, 1.0) - 1.0 / (2.0 * (1.0 - 1.0 / 40.0))).abs(),
            (visibility_one_detection(&gaussian, &gaussian, 1.0) - 0.5).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        checks.push(CheckOutcome::new("closed-form visibilities", dev, 1e-12));
    }

    // Poissonian identity: exact engine vs phase filter.
    {
        let mut worst = 0.0f64;
        for detections in [1, 5, 15, 50] {
            // Equal rates (contrast 1) and unequal rates (contrast < 1).
            worst = worst.max(poisson_identity_deviation(
                9.0, 9.0, 1.0, detections, 1.0, seed,
            ));
            worst = worst.max(poisson_identity_deviation(
                8.0, 4.0, 1.0, detections, 1.0, seed,
            ));
        }
        checks.push(CheckOutcome::new(
            "poisson engine identity (exact vs filter)",
            worst,
            1e-6,
        ));
    }

    // Exact engine vs brute-force two-mode evolution for small Fock pairs.
    {
        let grid_points = 128;
        let mut worst = 0.0f64;
        for atoms in [4u64, 6] {
            for detections in 1..=3usize {
                let phases = random_phases(seed, 2000 + atoms + detections as u64, detections);
                let mut poly = DetectionPolynomial::new();
                for &p in &phases {
                    poly.push_detection(p);
                }
                let spec = CondensateSpec::Fock { atoms };
                let weights =
                    detection_weights(&spec, &spec, 0.75, detections).expect("not exhausted");
                let engine = conditional_density(&poly, &weights, grid_points);
                let brute = oracle::fock_pair_density(atoms, atoms, 0.75, &phases, grid_points);
                worst = worst.max(max_abs_deviation(&engine.values, &brute));
            }
        }
        checks.push(CheckOutcome::new(
            "fock density vs brute-force trace",
            worst,
            1e-10,
        ));
    }

    // Sequential filter vs one-pass product evaluation.
    {
        let phases = random_phases(seed, 3000, 50);
        let lambda = 0.9;
        let mut grid = PhaseGrid::uniform(512);
        for &p in &phases {
            filter_update(&mut grid, lambda, p);
        }
        let direct = oracle::filter_product_values(lambda, &phases, 512);
        let dev = max_abs_deviation(grid.values(), &direct);
        checks.push(CheckOutcome::new(
            "filter update vs direct product",
            dev,
            1e-10,
        ));
    }

    // Number-state trajectory vs filter on the same detection record.
    {
        let (n1, n2) = (10_000u64, 10_000u64);
        let gamma = 0.5;
        let mut state = NumberStateVector::new(n1, n2).expect("nonempty");
        let lambda_n = state.lambda_number(gamma);
        let mut grid = PhaseGrid::uniform(512);
        let mut rng = run_stream(seed, 4000);
        let mut worst = 0.0f64;
        for m in 1..=60 {
            let phi = rng.random::<f64>() * TAU;
            state.step(phi, gamma).expect("within guard");
            filter_update(&mut grid, lambda_n, phi);
            if m >= 20 {
                let from_state = {
                    let (vis, peak) = state.predictive_harmonic(gamma);
                    (0..512)
                        .map(|j| {
                            let phi = TAU * j as f64 / 512.0;
                            1.0 + vis * (phi - peak).cos()
                        })
                        .collect::<Vec<_>>()
                };
                let from_filter = predictive_density(&grid, lambda_n, 512);
                worst = worst.max(max_abs_deviation(&from_state, &from_filter));
            }
        }
        checks.push(CheckOutcome::new(
            "trajectory predictive vs filter",
            worst,
            1e-3,
        ));
    }

    // Thermal mixture draws average to (π/4)·λ at equal rates.
    {
        let mut rng = run_stream(seed, 5000);
        let draws = 100_000usize;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for _ in 0..draws {
            let l = crate::filter::thermal_mixture_draw(&mut rng, 5.0, 5.0, 1.0).lambda_eff;
            sum += l;
            sum_sq += l * l;
        }
        let mean = sum / draws as f64;
        let var = sum_sq / draws as f64 - mean * mean;
        let se = (var / draws as f64).sqrt();
        let dev = (mean - std::f64::consts::PI / 4.0).abs();
        checks.push(CheckOutcome::new(
            "thermal mixture mean contrast = pi/4",
            dev,
            3.0 * se,
        ));
    }

    let passed = checks.iter().all(|c| c.passed);
    ValidationReport { checks, passed }
}
