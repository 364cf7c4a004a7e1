//! Statistical laws of the filtered phase distribution: inverse-variance
//! growth and the stability of the distribution maximum.

use condensate::analysis::fit_inverse_slope;
use condensate::filter::{filter_update, phase_stats, predictive_harmonic, PhaseGrid};
use condensate::model::{CondensateSpec, ExperimentConfig};
use condensate::montecarlo::{run_many, Engine, PhaseSampler};
use condensate::rng::run_stream;
use std::f64::consts::{PI, TAU};

/// Mean inverse variance grows linearly with slope `1 - sqrt(1 - λ²)`.
#[test]
fn inverse_variance_slope_follows_contrast() {
    // Poissonian pairs with net-rate ratios 1/4 and 1/2 give contrasts 0.8
    // and 2√2/3, hence slopes 2/5 and 2/3.
    for (mean_2, want) in [(25.0, 0.4f64), (50.0, 2.0 / 3.0)] {
        let config = ExperimentConfig {
            condensate_1: CondensateSpec::poisson(100.0).unwrap(),
            condensate_2: CondensateSpec::poisson(mean_2).unwrap(),
            gamma_ratio: 1.0,
            detections: 500,
            grid_points: 1024,
            histogram_bins: 25,
            runs: 100,
            seed: 55,
        };
        let summaries = run_many(&config, Engine::PhaseFilter).unwrap();
        // Trace of <1/σ²> expressed as a spread so the fit inverts it back.
        let trace: Vec<(usize, f64)> = (0..config.detections)
            .map(|i| {
                let mean_inv = summaries
                    .iter()
                    .map(|r| 1.0 / r.variance_trace[i])
                    .sum::<f64>()
                    / config.runs as f64;
                (i + 1, 1.0 / mean_inv)
            })
            .collect();
        let slope = fit_inverse_slope(&trace, 50).unwrap();
        assert!((slope - want).abs() < 0.1 * want, "slope {slope} vs {want}");
    }
}

/// The maximum of the filtered distribution drifts with zero mean and a
/// mean-square of order σ⁴ per step.
#[test]
fn distribution_maximum_is_stable() {
    let lambda = 0.8;
    let expected_ratio = 1.0 - (1.0f64 - lambda * lambda).sqrt(); // 0.4
    let grid_points = 1024;
    let mut drift_over_var = Vec::new();
    let mut sq_ratio = Vec::new();
    for run in 0..40u64 {
        let mut rng = run_stream(91, run);
        let mut grid = PhaseGrid::uniform(grid_points);
        let mut sampler = PhaseSampler::new(grid_points);
        let mut prev_mean: Option<f64> = None;
        for m in 1..=400usize {
            let (vis, peak) = predictive_harmonic(&grid, lambda);
            let density: Vec<f64> = (0..grid_points)
                .map(|j| {
                    let phi = TAU * j as f64 / grid_points as f64;
                    1.0 + vis * (phi - peak).cos()
                })
                .collect();
            let phi = sampler.sample(&density, &mut rng).unwrap();
            filter_update(&mut grid, lambda, phi);
            let stats = phase_stats(&grid);
            if m >= 100 {
                if let Some(prev) = prev_mean {
                    let mut step = stats.mean_phase - prev;
                    if step > PI {
                        step -= TAU;
                    } else if step < -PI {
                        step += TAU;
                    }
                    drift_over_var.push(step / stats.variance);
                    sq_ratio.push(step * step / (stats.variance * stats.variance));
                }
                prev_mean = Some(stats.mean_phase);
            }
        }
    }
    let n = drift_over_var.len() as f64;
    let mean_drift = drift_over_var.iter().sum::<f64>() / n;
    let var_drift = drift_over_var
        .iter()
        .map(|d| (d - mean_drift) * (d - mean_drift))
        .sum::<f64>()
        / (n - 1.0);
    let se = (var_drift / n).sqrt();
    assert!(
        mean_drift.abs() < 3.0 * se,
        "drift mean {mean_drift} exceeds 3 se = {}",
        3.0 * se
    );

    let mean_sq = sq_ratio.iter().sum::<f64>() / n;
    let var_sq = sq_ratio
        .iter()
        .map(|d| (d - mean_sq) * (d - mean_sq))
        .sum::<f64>()
        / (n - 1.0);
    let se_sq = (var_sq / n).sqrt();
    // Small systematic allowance for the O(σ²) correction term.
    assert!(
        (mean_sq - expected_ratio).abs() < 3.0 * se_sq + 0.01,
        "squared drift ratio {mean_sq} vs {expected_ratio} (se {se_sq})"
    );
}

/// A run with contrast pinned at zero never develops fringes.
#[test]
fn zero_contrast_runs_stay_flat() {
    let config = ExperimentConfig {
        condensate_1: CondensateSpec::poisson(10.0).unwrap(),
        condensate_2: CondensateSpec::poisson(0.0).unwrap(),
        gamma_ratio: 1.0,
        detections: 400,
        grid_points: 512,
        histogram_bins: 25,
        runs: 4,
        seed: 9,
    };
    for engine in [Engine::PiExact, Engine::PhaseFilter] {
        let summaries = run_many(&config, engine).unwrap();
        for run in &summaries {
            assert!(run.trace.per_step_visibility.iter().all(|&v| v == 0.0));
            assert!(run.fitted_visibility < 0.3);
        }
    }
}
