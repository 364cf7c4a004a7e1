//! Stochastic detection simulation.
//!
//! A run starts from a uniform conditional density, then repeats: sample the
//! next detection phase from the current density, feed it to the engine,
//! record the fringe amplitude of the updated density. The three engines
//! share this loop:
//!
//! - [`Engine::PiExact`] — the exact coefficient-recursion density; works
//!   for every distribution kind.
//! - [`Engine::PhaseFilter`] — the grid filter; exact for Poissonian pairs,
//!   and for thermal pairs through one exponential mixture draw per run.
//! - [`Engine::FockTrajectory`] — number-state amplitudes; requires Fock
//!   pairs inside the counting-regime guard.
//!
//! Ensembles run embarrassingly parallel with one [`crate::rng::run_stream`]
//! per run and a deterministic ordered reduction, so results are identical
//! for any worker count.

use crate::analysis::{fit_fringe, EnsembleSummary, FringeHistogram};
use crate::exact::{fringe_harmonic, DetectionPolynomial, WeightVector};
use crate::filter::{filter_update, lambda_visibility, phase_stats, PhaseGrid};
use crate::model::{CondensateSpec, ExperimentConfig, LogMomentTable};
use crate::rng::run_stream;
use crate::trajectory::NumberStateVector;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    Config(#[from] crate::model::ModelError),
    #[error("{engine} engine does not support this condensate pair: {reason}")]
    UnsupportedPair { engine: Engine, reason: String },
    #[error("density is entirely zero; cannot sample")]
    DegenerateDensity,
    #[error("density values must be finite and nonnegative")]
    InvalidDensity,
    #[error("at detection {step}: {source}")]
    Exact {
        step: usize,
        #[source]
        source: crate::exact::ExactError,
    },
    #[error("at detection {step}: {source}")]
    Trajectory {
        step: usize,
        #[source]
        source: crate::trajectory::TrajectoryError,
    },
    #[error("run {run} failed: {source}")]
    Run {
        run: u64,
        #[source]
        source: Box<SimError>,
    },
    #[error("histogram: {0}")]
    Analysis(#[from] crate::analysis::AnalysisError),
}

/// Which conditional-density machinery drives a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    PiExact,
    PhaseFilter,
    FockTrajectory,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            Engine::PiExact => "pi-exact",
            Engine::PhaseFilter => "phase-filter",
            Engine::FockTrajectory => "fock-trajectory",
        };
        write!(f, "{name}")
    }
}

impl std::str::FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pi-exact" => Ok(Engine::PiExact),
            "phase-filter" => Ok(Engine::PhaseFilter),
            "fock-trajectory" => Ok(Engine::FockTrajectory),
            other => Err(format!(
                "unknown engine '{other}' (expected pi-exact, phase-filter or fock-trajectory)"
            )),
        }
    }
}

/// The raw output of one run.
#[derive(Debug, Clone, Serialize)]
pub struct DetectionTrace {
    /// Detected phases `φ₁..φ_m`, each in `[0, 2π)`.
    pub phases: Vec<f64>,
    /// Conditional visibility indexed by detection count: entry `i` is the
    /// fringe amplitude of the next-detection density after `i` detections
    /// (entry 0 is the uniform prior; length `m + 1`).
    pub per_step_visibility: Vec<f64>,
    pub engine: Engine,
}

/// One run plus its derived statistics.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub trace: DetectionTrace,
    /// Histogram-fit fringe contrast of the full run, in `[0, 1.05]`.
    pub fitted_visibility: f64,
    pub fitted_phase: f64,
    /// The raw fit exceeded contrast 1 (sampling noise).
    pub fit_overshoot: bool,
    /// Engine spread measure after each detection (filter variance, δφ, or
    /// contrast-loss variance; length `m`).
    pub variance_trace: Vec<f64>,
}

/// Inverse-CDF sampler over a tabulated density on `[0, 2π)`.
///
/// Builds the cumulative trapezoid over the periodic grid and inverts it
/// with per-segment quadratic interpolation (the density is linear within a
/// segment).
pub struct PhaseSampler {
    cdf: Vec<f64>,
}

impl PhaseSampler {
    pub fn new(grid_points: usize) -> PhaseSampler {
        PhaseSampler {
            cdf: vec![0.0; grid_points + 1],
        }
    }

    pub fn sample(&mut self, density: &[f64], rng: &mut impl Rng) -> Result<f64, SimError> {
        let n = density.len();
        assert!(n >= 2, "density grid too small");
        if self.cdf.len() != n + 1 {
            self.cdf.resize(n + 1, 0.0);
        }
        let h = TAU / n as f64;
        self.cdf[0] = 0.0;
        for j in 0..n {
            let left = density[j];
            let right = density[(j + 1) % n];
            if !(left.is_finite() && left >= 0.0) {
                return Err(SimError::InvalidDensity);
            }
            self.cdf[j + 1] = self.cdf[j] + 0.5 * h * (left + right);
        }
        let total = self.cdf[n];
        if total.is_nan() || total <= 0.0 {
            return Err(SimError::DegenerateDensity);
        }
        let target = rng.random::<f64>() * total;
        // Binary search for the segment holding the target mass.
        let mut lo = 0usize;
        let mut hi = n;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if self.cdf[mid] <= target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let v0 = density[lo];
        let v1 = density[(lo + 1) % n];
        let rest = (target - self.cdf[lo]) / h;
        let slope = v1 - v0;
        // Solve v0 t + slope t²/2 = rest for t in [0, 1].
        let t = if slope.abs() < 1e-12 * (v0 + 1.0) {
            if v0 > 0.0 {
                rest / v0
            } else {
                0.5
            }
        } else {
            let disc = (v0 * v0 + 2.0 * slope * rest).max(0.0);
            (disc.sqrt() - v0) / slope
        };
        Ok(crate::logspace::wrap_angle(
            (lo as f64 + t.clamp(0.0, 1.0)) * h,
        ))
    }
}

/// Draws one phase from a tabulated density (convenience wrapper around
/// [`PhaseSampler`]).
pub fn sample_phase(density: &[f64], rng: &mut impl Rng) -> Result<f64, SimError> {
    PhaseSampler::new(density.len()).sample(density, rng)
}

/// Per-engine simulation state.
enum EngineState {
    Exact {
        poly: DetectionPolynomial,
        first: LogMomentTable,
        second: LogMomentTable,
        gamma: f64,
        lambda_ref: f64,
    },
    Filter {
        grid: PhaseGrid,
        lambda: f64,
    },
    Trajectory {
        state: NumberStateVector,
        gamma: f64,
    },
}

impl EngineState {
    fn new(
        config: &ExperimentConfig,
        engine: Engine,
        rng: &mut impl Rng,
    ) -> Result<EngineState, SimError> {
        let spec1 = &config.condensate_1;
        let spec2 = &config.condensate_2;
        let gamma = config.gamma_ratio;
        match engine {
            Engine::PiExact => {
                if let (CondensateSpec::Fock { atoms: n1 }, CondensateSpec::Fock { atoms: n2 }) =
                    (spec1, spec2)
                {
                    if config.detections as u64 >= n1 + n2 {
                        return Err(SimError::Exact {
                            step: (n1 + n2) as usize,
                            source: crate::exact::ExactError::CondensatesExhausted {
                                atoms_total: n1 + n2,
                                detections: config.detections,
                            },
                        });
                    }
                }
                Ok(EngineState::Exact {
                    poly: DetectionPolynomial::new(),
                    first: LogMomentTable::build(spec1, config.detections),
                    second: LogMomentTable::build(spec2, config.detections),
                    gamma,
                    lambda_ref: lambda_visibility(spec1.mean(), spec2.mean(), gamma),
                })
            }
            Engine::PhaseFilter => {
                let lambda = match (spec1, spec2) {
                    (
                        CondensateSpec::Poisson { mean: m1 },
                        CondensateSpec::Poisson { mean: m2 },
                    ) => lambda_visibility(*m1, *m2, gamma),
                    (
                        CondensateSpec::Thermal { mean: m1 },
                        CondensateSpec::Thermal { mean: m2 },
                    ) => {
                        // Thermal pair: one Poissonian component per run.
                        crate::filter::thermal_mixture_draw(rng, *m1, *m2, gamma).lambda_eff
                    }
                    _ => {
                        return Err(SimError::UnsupportedPair {
                            engine,
                            reason: "the filter is exact for Poissonian pairs and thermal \
                                     pairs (via mixture draws) only"
                                .into(),
                        })
                    }
                };
                Ok(EngineState::Filter {
                    grid: PhaseGrid::uniform(config.grid_points),
                    lambda,
                })
            }
            Engine::FockTrajectory => match (spec1, spec2) {
                (CondensateSpec::Fock { atoms: n1 }, CondensateSpec::Fock { atoms: n2 }) => {
                    let state = NumberStateVector::new(*n1, *n2)
                        .map_err(|source| SimError::Trajectory { step: 0, source })?;
                    Ok(EngineState::Trajectory { state, gamma })
                }
                _ => Err(SimError::UnsupportedPair {
                    engine,
                    reason: "number-state trajectories need a Fock pair".into(),
                }),
            },
        }
    }

    /// Fringe amplitude and peak of the current next-detection density.
    fn harmonic(&self) -> (f64, f64) {
        match self {
            EngineState::Exact {
                poly,
                first,
                second,
                gamma,
                ..
            } => {
                let weights = WeightVector::from_tables(first, second, *gamma, poly.degree());
                let h = fringe_harmonic(poly, &weights);
                (h.visibility, h.peak_phase)
            }
            EngineState::Filter { grid, lambda } => {
                crate::filter::predictive_harmonic(grid, *lambda)
            }
            EngineState::Trajectory { state, gamma } => state.predictive_harmonic(*gamma),
        }
    }

    fn record(&mut self, phase: f64, step: usize) -> Result<(), SimError> {
        match self {
            EngineState::Exact { poly, .. } => {
                poly.push_detection(phase);
                Ok(())
            }
            EngineState::Filter { grid, lambda } => {
                filter_update(grid, *lambda, phase);
                Ok(())
            }
            EngineState::Trajectory { state, gamma } => state
                .step(phase, *gamma)
                .map_err(|source| SimError::Trajectory { step, source }),
        }
    }

    /// Spread measure after the detections recorded so far.
    fn spread(&self, current_visibility: f64) -> f64 {
        match self {
            EngineState::Exact { lambda_ref, .. } => {
                (2.0 * (lambda_ref - current_visibility)).max(0.0)
            }
            EngineState::Filter { grid, .. } => phase_stats(grid).variance,
            EngineState::Trajectory { state, .. } => state.delta_phi(),
        }
    }
}

/// Simulates one full detection run.
pub fn run_single(
    config: &ExperimentConfig,
    engine: Engine,
    rng: &mut ChaCha8Rng,
) -> Result<RunSummary, SimError> {
    config.validate()?;
    let mut state = EngineState::new(config, engine, rng)?;
    let grid_points = config.grid_points;
    let mut sampler = PhaseSampler::new(grid_points);
    let mut density = Vec::with_capacity(grid_points);
    let mut phases = Vec::with_capacity(config.detections);
    let mut visibility_trace = Vec::with_capacity(config.detections + 1);
    let mut variance_trace = Vec::with_capacity(config.detections);

    let (mut vis, mut peak) = (0.0, 0.0);
    visibility_trace.push(vis);
    for step in 1..=config.detections {
        density.clear();
        for j in 0..grid_points {
            let phi = TAU * j as f64 / grid_points as f64;
            density.push(1.0 + vis * (phi - peak).cos());
        }
        let phi = sampler.sample(&density, rng)?;
        state.record(phi, step)?;
        (vis, peak) = state.harmonic();
        phases.push(phi);
        visibility_trace.push(vis);
        variance_trace.push(state.spread(vis));
    }

    let hist = FringeHistogram::from_phases(&phases, config.histogram_bins)?;
    let fit = fit_fringe(&hist);
    Ok(RunSummary {
        trace: DetectionTrace {
            phases,
            per_step_visibility: visibility_trace,
            engine,
        },
        // Fit noise can push the raw contrast past 1; cap at 1.05.
        fitted_visibility: fit.amplitude.clamp(0.0, 1.05),
        fitted_phase: fit.peak_phase,
        fit_overshoot: fit.overshoot,
        variance_trace,
    })
}

/// Runs `config.runs` independent runs in parallel; run `i` uses the stream
/// `(config.seed, i)`. Any failure aborts the ensemble with its run index.
pub fn run_many(config: &ExperimentConfig, engine: Engine) -> Result<Vec<RunSummary>, SimError> {
    config.validate()?;
    (0..config.runs as u64)
        .into_par_iter()
        .map(|run| {
            let mut rng = run_stream(config.seed, run);
            run_single(config, engine, &mut rng).map_err(|source| SimError::Run {
                run,
                source: Box::new(source),
            })
        })
        .collect()
}

/// Reference contrast for an engine/config pair: the mixture contrast of
/// the mean occupations.
pub fn reference_lambda(config: &ExperimentConfig) -> f64 {
    lambda_visibility(
        config.condensate_1.mean(),
        config.condensate_2.mean(),
        config.gamma_ratio,
    )
}

/// Runs an ensemble and aggregates per-step means and quartile bands.
pub fn run_ensemble(
    config: &ExperimentConfig,
    engine: Engine,
) -> Result<EnsembleSummary, SimError> {
    let runs = run_many(config, engine)?;
    Ok(summarize_runs(&runs, reference_lambda(config)))
}

/// Aggregates already-computed runs into an [`EnsembleSummary`].
pub fn summarize_runs(runs: &[RunSummary], lambda: f64) -> EnsembleSummary {
    let traces: Vec<&[f64]> = runs
        .iter()
        .map(|r| r.trace.per_step_visibility.as_slice())
        .collect();
    let fitted: Vec<f64> = runs.iter().map(|r| r.fitted_visibility).collect();
    EnsembleSummary::aggregate(&traces, &fitted, lambda)
}
