//! Post-processing: fringe histograms, cosine fits, quartile bands and the
//! 1/m spread laws.
//!
//! The fringe fit is a plain linear least squares against
//! `{1, cos φ, sin φ}` at the bin centers — the same optimum as the
//! nonlinear `a(1 + β cos(φ - ψ₀))` fit for this model family, with no
//! iteration and no initial guess. Quartiles use the midpoint-interpolation
//! convention so ensemble bands are reproducible bit for bit.

use serde::Serialize;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("histogram needs at least {min} bins, got {got}")]
    TooFewBins { min: usize, got: usize },
    #[error("phases must lie in [0, 2π); found {0}")]
    PhaseOutOfRange(f64),
    #[error("inverse-slope fit needs at least 5 points past the cutoff, got {0}")]
    TooFewPoints(usize),
    #[error("spread values must be positive for an inverse fit")]
    NonPositiveSpread,
}

/// Detection phases sorted into equal bins over `[0, 2π)`.
#[derive(Debug, Clone, Serialize)]
pub struct FringeHistogram {
    counts: Vec<u64>,
    normalized: Vec<f64>,
}

impl FringeHistogram {
    pub fn from_phases(phases: &[f64], bins: usize) -> Result<FringeHistogram, AnalysisError> {
        if bins < 2 {
            return Err(AnalysisError::TooFewBins { min: 2, got: bins });
        }
        let mut counts = vec![0u64; bins];
        for &phi in phases {
            if !(0.0..TAU).contains(&phi) {
                return Err(AnalysisError::PhaseOutOfRange(phi));
            }
            let mut idx = (phi / TAU * bins as f64) as usize;
            if idx >= bins {
                idx = bins - 1;
            }
            counts[idx] += 1;
        }
        let total: u64 = counts.iter().sum();
        let normalized = if total == 0 {
            vec![0.0; bins]
        } else {
            // Scaled to mean 1 so the fit reads as "1 + fringes".
            counts
                .iter()
                .map(|&c| c as f64 * bins as f64 / total as f64)
                .collect()
        };
        Ok(FringeHistogram { counts, normalized })
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn bin_center(&self, j: usize) -> f64 {
        (j as f64 + 0.5) * TAU / self.counts.len() as f64
    }
}

/// Result of the linearized cosine fit `a (1 + β cos(φ - ψ₀))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FringeFit {
    /// Fringe contrast β (unclamped; sampling noise can push it above 1).
    pub amplitude: f64,
    /// Peak location ψ₀ in `[0, 2π)`.
    pub peak_phase: f64,
    /// Fitted constant level a.
    pub baseline: f64,
    /// The amplitude exceeded 1 (fit noise).
    pub overshoot: bool,
}

/// Least-squares cosine fit of a fringe histogram at its bin centers.
pub fn fit_fringe(hist: &FringeHistogram) -> FringeFit {
    fit_cosine(hist.normalized())
}

/// Least-squares cosine fit of values sampled at uniform bin centers
/// `(j + 1/2) · 2π / len` over the full circle.
pub fn fit_cosine(values: &[f64]) -> FringeFit {
    let n = values.len();
    assert!(n >= 3, "cosine fit needs at least 3 samples");
    let mut s = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for (j, &y) in values.iter().enumerate() {
        let phi = (j as f64 + 0.5) * TAU / n as f64;
        let basis = [1.0, phi.cos(), phi.sin()];
        for r in 0..3 {
            for c in 0..3 {
                s[r][c] += basis[r] * basis[c];
            }
            rhs[r] += basis[r] * y;
        }
    }
    let det = det3(&s);
    if det.abs() < 1e-9 {
        return FringeFit {
            amplitude: 0.0,
            peak_phase: 0.0,
            baseline: values.iter().sum::<f64>() / n as f64,
            overshoot: false,
        };
    }
    let solve = |col: usize| {
        let mut m = s;
        for r in 0..3 {
            m[r][col] = rhs[r];
        }
        det3(&m) / det
    };
    let (a, b, c) = (solve(0), solve(1), solve(2));
    if a <= 0.0 {
        return FringeFit {
            amplitude: 0.0,
            peak_phase: 0.0,
            baseline: a,
            overshoot: false,
        };
    }
    let amplitude = b.hypot(c) / a;
    FringeFit {
        amplitude,
        peak_phase: crate::logspace::wrap_angle(c.atan2(b)),
        baseline: a,
        overshoot: amplitude > 1.0,
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Variance recovered from the contrast loss, `σ² = 2(λ - λ')`.
///
/// Valid for small variances and many detections; `λ' > λ` (pure sampling
/// noise) clamps to zero and sets the flag.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct VarianceEstimate {
    pub value: f64,
    pub clamped: bool,
}

pub fn variance_from_visibility(lambda: f64, lambda_prime: f64) -> VarianceEstimate {
    if lambda_prime > lambda {
        VarianceEstimate {
            value: 0.0,
            clamped: true,
        }
    } else {
        VarianceEstimate {
            value: 2.0 * (lambda - lambda_prime),
            clamped: false,
        }
    }
}

/// Ordinary least-squares slope of `1/spread` against the detection count,
/// using points with `m >= fit_from`.
pub fn fit_inverse_slope(trace: &[(usize, f64)], fit_from: usize) -> Result<f64, AnalysisError> {
    let points: Vec<(f64, f64)> = trace
        .iter()
        .filter(|(m, _)| *m >= fit_from)
        .map(|&(m, spread)| (m as f64, spread))
        .collect();
    if points.len() < 5 {
        return Err(AnalysisError::TooFewPoints(points.len()));
    }
    if points.iter().any(|&(_, s)| s <= 0.0) {
        return Err(AnalysisError::NonPositiveSpread);
    }
    let n = points.len() as f64;
    let mean_x = points.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let mean_y = points.iter().map(|&(_, s)| 1.0 / s).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for &(x, s) in &points {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (1.0 / s - mean_y);
    }
    Ok(sxy / sxx)
}

/// Quantile by the midpoint-interpolation convention: for a fractional
/// position between order statistics, the midpoint of the two neighbors.
pub fn quantile_midpoint(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    assert!((0.0..=1.0).contains(&q));
    let h = q * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        0.5 * (sorted[lo] + sorted[hi])
    }
}

/// Aggregated per-step statistics over an ensemble of runs.
#[derive(Debug, Clone, Serialize)]
pub struct EnsembleSummary {
    /// Mean conditional visibility after each detection count.
    pub per_step_mean: Vec<f64>,
    pub per_step_lower_quartile: Vec<f64>,
    pub per_step_upper_quartile: Vec<f64>,
    /// Mean of the per-run histogram-fit contrasts.
    pub mean_fitted_visibility: f64,
    /// `2(λ - mean visibility)` per step, clamped at zero.
    pub variance_estimate_trace: Vec<f64>,
}

impl EnsembleSummary {
    /// Aggregates per-run visibility traces (all the same length, indexed
    /// by detection count) and per-run fitted contrasts. `lambda` is the
    /// contrast ceiling used for the variance trace.
    pub fn aggregate(traces: &[&[f64]], fitted: &[f64], lambda: f64) -> EnsembleSummary {
        assert!(!traces.is_empty(), "need at least one run");
        let steps = traces[0].len();
        assert!(traces.iter().all(|t| t.len() == steps));
        let runs = traces.len();
        let mut per_step_mean = Vec::with_capacity(steps);
        let mut lower = Vec::with_capacity(steps);
        let mut upper = Vec::with_capacity(steps);
        let mut column = vec![0.0; runs];
        for step in 0..steps {
            for (r, t) in traces.iter().enumerate() {
                column[r] = t[step];
            }
            per_step_mean.push(column.iter().sum::<f64>() / runs as f64);
            column.sort_by(f64::total_cmp);
            lower.push(quantile_midpoint(&column, 0.25));
            upper.push(quantile_midpoint(&column, 0.75));
        }
        let variance_estimate_trace = per_step_mean
            .iter()
            .map(|&v| variance_from_visibility(lambda, v).value)
            .collect();
        EnsembleSummary {
            per_step_mean,
            per_step_lower_quartile: lower,
            per_step_upper_quartile: upper,
            mean_fitted_visibility: fitted.iter().sum::<f64>() / fitted.len().max(1) as f64,
            variance_estimate_trace,
        }
    }
}
