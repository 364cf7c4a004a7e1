//! Bayesian filtering of the relative-phase distribution.
//!
//! For Poissonian mixtures the two-mode state after `m` detections is fully
//! described by a probability distribution `f_m(ψ)` of the relative phase.
//! Each detection at phase `φ` multiplies it pointwise by
//! `1 + λ cos(φ - ψ)` and renormalizes, where the contrast
//! `λ = 2√(Γ n̄₁ n̄₂) / (n̄₁ + Γ n̄₂)` is set by the net counting rates. The
//! next-detection density is the first circular moment of `f_m`, which makes
//! this filter the cheap exact reference for the Poissonian branch of the
//! exact engine.
//!
//! A thermal state is an exponential mixture of Poissonian states, so
//! thermal runs can reuse the same filter with a per-run contrast drawn via
//! [`thermal_mixture_draw`]; at equal rates the drawn contrast averages to
//! π/4.
//!
//! The distribution lives on a uniform grid over `[0, 2π)`. Grid values are
//! exact samples of a degree-`m` trigonometric polynomial, so circular
//! moments computed by the rectangle rule are exact as long as the number of
//! detections stays below the grid size minus one.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::Serialize;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FilterError {
    #[error("phase grid needs at least 2 points, got {0}")]
    GridTooSmall(usize),
    #[error("phase grid values must be finite and nonnegative")]
    InvalidValues,
    #[error("phase grid values sum to zero")]
    ZeroMass,
}

/// Discretized relative-phase distribution on `[0, 2π)`, kept normalized to
/// grid mean 1 (the discrete form of `∫ dψ/2π f(ψ) = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseGrid {
    values: Vec<f64>,
}

impl PhaseGrid {
    pub fn uniform(points: usize) -> PhaseGrid {
        assert!(points >= 2, "phase grid needs at least 2 points");
        PhaseGrid {
            values: vec![1.0; points],
        }
    }

    /// Normalizes arbitrary nonnegative values to grid mean 1.
    pub fn from_values(values: Vec<f64>) -> Result<PhaseGrid, FilterError> {
        if values.len() < 2 {
            return Err(FilterError::GridTooSmall(values.len()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(FilterError::InvalidValues);
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        if mean <= 0.0 {
            return Err(FilterError::ZeroMass);
        }
        let mut grid = PhaseGrid { values };
        for v in &mut grid.values {
            *v /= mean;
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Phase coordinate of grid point `j`.
    pub fn phase_at(&self, j: usize) -> f64 {
        TAU * j as f64 / self.values.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// `<e^{iψ}>` under the distribution.
    pub fn first_circular_moment(&self) -> Complex64 {
        let n = self.values.len() as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &v) in self.values.iter().enumerate() {
            acc += v * Complex64::from_polar(1.0, TAU * j as f64 / n);
        }
        acc / n
    }
}

/// Filter contrast `λ = 2√(Γ n̄₁ n̄₂) / (n̄₁ + Γ n̄₂)`, in `(0, 1]` for
/// nonempty condensates; 0 when either mean vanishes.
pub fn lambda_visibility(n1_bar: f64, n2_bar: f64, gamma: f64) -> f64 {
    assert!(gamma.is_finite() && gamma > 0.0, "gamma must be positive");
    if n1_bar <= 0.0 || n2_bar <= 0.0 {
        return 0.0;
    }
    let lambda = 2.0 * (gamma * n1_bar * n2_bar).sqrt() / (n1_bar + gamma * n2_bar);
    lambda.min(1.0)
}

/// Applies one counting event: multiplies by `1 + λ cos(φ - ψ)` pointwise
/// and renormalizes. Returns the normalizer, which equals the predictive
/// density of the detection that was just applied.
pub fn filter_update(grid: &mut PhaseGrid, lambda: f64, detected_phase: f64) -> f64 {
    assert!((0.0..=1.0).contains(&lambda), "lambda must be in [0, 1]");
    assert!(detected_phase.is_finite());
    let n = grid.values.len() as f64;
    let mut total = 0.0;
    for (j, v) in grid.values.iter_mut().enumerate() {
        let psi = TAU * j as f64 / n;
        *v *= 1.0 + lambda * (detected_phase - psi).cos();
        total += *v;
    }
    let normalizer = total / n;
    if normalizer > 0.0 {
        for v in &mut grid.values {
            *v /= normalizer;
        }
    }
    normalizer
}

/// Fringe content of the next-detection density: amplitude `λ |<e^{iψ}>|`
/// and peak location `arg <e^{iψ}>`.
pub fn predictive_harmonic(grid: &PhaseGrid, lambda: f64) -> (f64, f64) {
    let moment = grid.first_circular_moment();
    let amplitude = (lambda * moment.norm()).clamp(0.0, 1.0);
    let peak = crate::logspace::wrap_angle(moment.arg());
    (amplitude, peak)
}

/// Next-detection density `1 + λ Re[<e^{iψ}> e^{-iφ}]` on a uniform grid.
pub fn predictive_density(grid: &PhaseGrid, lambda: f64, eval_points: usize) -> Vec<f64> {
    let (amplitude, peak) = predictive_harmonic(grid, lambda);
    (0..eval_points)
        .map(|j| {
            let phi = TAU * j as f64 / eval_points as f64;
            1.0 + amplitude * (phi - peak).cos()
        })
        .collect()
}

/// Location and spread of the filtered phase distribution.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhaseStats {
    /// Circular mean, in `[0, 2π)`.
    pub mean_phase: f64,
    /// Wrapped-Gaussian variance estimate `-2 ln |<e^{iψ}>|`; infinite for
    /// uniform-like distributions.
    pub variance: f64,
    /// `1 - |<e^{iψ}>|²`, in `[0, 1]`.
    pub circular_spread: f64,
}

/// Resultant lengths below this are treated as "no direction at all".
const RESULTANT_FLOOR: f64 = 1e-6;

pub fn phase_stats(grid: &PhaseGrid) -> PhaseStats {
    let moment = grid.first_circular_moment();
    let resultant = moment.norm();
    let variance = if resultant < RESULTANT_FLOOR {
        f64::INFINITY
    } else {
        -2.0 * resultant.ln()
    };
    PhaseStats {
        mean_phase: crate::logspace::wrap_angle(moment.arg()),
        variance,
        circular_spread: (1.0 - resultant * resultant).clamp(0.0, 1.0),
    }
}

/// One draw from the exponential mixture representing a thermal pair.
#[derive(Debug, Clone, Copy)]
pub struct MixtureDraw {
    pub occupation_1: f64,
    pub occupation_2: f64,
    /// Filter contrast of the drawn Poissonian component.
    pub lambda_eff: f64,
}

/// Draws Poissonian occupations from the exponential densities with means
/// `n̄₁`, `n̄₂` and returns the component's filter contrast.
pub fn thermal_mixture_draw(
    rng: &mut impl Rng,
    n1_bar: f64,
    n2_bar: f64,
    gamma: f64,
) -> MixtureDraw {
    assert!(n1_bar > 0.0 && n2_bar > 0.0, "means must be positive");
    let x1 = Exp::new(1.0 / n1_bar).expect("positive rate").sample(rng);
    let x2 = Exp::new(1.0 / n2_bar).expect("positive rate").sample(rng);
    MixtureDraw {
        occupation_1: x1,
        occupation_2: x2,
        lambda_eff: lambda_visibility(x1, x2, gamma),
    }
}
