//! Number-state trajectories under atom counting.
//!
//! For two large initial Fock states the post-detection state stays inside a
//! one-parameter family: after `m` detections it is a superposition over how
//! many of the counted atoms came from the first mode. This module evolves
//! those `m+1` amplitudes directly,
//!
//! ```text
//! C_n(m+1) = √N₁ C_{n-1}(m) + √(Γ N₂) e^{-iφ} C_n(m)
//! ```
//!
//! (boundary terms dropped, amplitudes renormalized each step), which is
//! valid while the number of detections stays far below both occupations —
//! the depletion factors `√(N-n) ≈ √N` are frozen. A detection-count guard
//! of one tenth of the smaller occupation enforces the regime by default.
//!
//! The Fourier transform of the amplitudes is a phase-space profile that
//! plays exactly the role of the filtered phase distribution, and the
//! ladder expectation `Σ C*_{n+1} C_n` realizes the two-mode relative-phase
//! operator: its squared magnitude gives the spread measure `δφ`.

use crate::filter::PhaseGrid;
use crate::logspace::wrap_angle;
use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TrajectoryError {
    #[error("initial occupations must be positive, got ({n1}, {n2})")]
    EmptyMode { n1: u64, n2: u64 },
    #[error(
        "step {attempted} leaves the counting regime (1 << m << N): at most \
         {limit} detections allowed for occupations ({n1}, {n2}); raise the \
         limit explicitly to override"
    )]
    RegimeViolation {
        attempted: usize,
        limit: usize,
        n1: u64,
        n2: u64,
    },
}

/// Post-detection amplitudes of an initial two-mode number state.
#[derive(Debug, Clone)]
pub struct NumberStateVector {
    occupation_1: u64,
    occupation_2: u64,
    amps: Vec<Complex64>,
    renorm_log: f64,
    detection_limit: usize,
}

impl NumberStateVector {
    /// Fresh state with the default guard `m <= min(N₁, N₂)/10`.
    pub fn new(occupation_1: u64, occupation_2: u64) -> Result<Self, TrajectoryError> {
        let limit = (occupation_1.min(occupation_2) / 10) as usize;
        Self::with_detection_limit(occupation_1, occupation_2, limit)
    }

    /// Fresh state with an explicit detection-count guard.
    pub fn with_detection_limit(
        occupation_1: u64,
        occupation_2: u64,
        detection_limit: usize,
    ) -> Result<Self, TrajectoryError> {
        if occupation_1 == 0 || occupation_2 == 0 {
            return Err(TrajectoryError::EmptyMode {
                n1: occupation_1,
                n2: occupation_2,
            });
        }
        Ok(NumberStateVector {
            occupation_1,
            occupation_2,
            amps: vec![Complex64::new(1.0, 0.0)],
            renorm_log: 0.0,
            detection_limit,
        })
    }

    pub fn occupations(&self) -> (u64, u64) {
        (self.occupation_1, self.occupation_2)
    }

    pub fn detections(&self) -> usize {
        self.amps.len() - 1
    }

    pub fn detection_limit(&self) -> usize {
        self.detection_limit
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    /// Accumulated log of the per-step normalization factors.
    pub fn renorm_log(&self) -> f64 {
        self.renorm_log
    }

    /// Contrast parameter of the counting process,
    /// `λ_N = 2√(Γ N₁ N₂) / (N₁ + Γ N₂)`.
    pub fn lambda_number(&self, gamma: f64) -> f64 {
        crate::filter::lambda_visibility(self.occupation_1 as f64, self.occupation_2 as f64, gamma)
    }

    /// Applies one detection and renormalizes.
    pub fn step(&mut self, detected_phase: f64, gamma: f64) -> Result<(), TrajectoryError> {
        assert!(detected_phase.is_finite());
        assert!(gamma.is_finite() && gamma > 0.0, "gamma must be positive");
        let next_count = self.detections() + 1;
        if next_count > self.detection_limit {
            return Err(TrajectoryError::RegimeViolation {
                attempted: next_count,
                limit: self.detection_limit,
                n1: self.occupation_1,
                n2: self.occupation_2,
            });
        }
        let shift_amp = (self.occupation_1 as f64).sqrt();
        let stay_amp =
            Complex64::from_polar((gamma * self.occupation_2 as f64).sqrt(), -detected_phase);
        let m = self.amps.len();
        let mut next = Vec::with_capacity(m + 1);
        next.push(stay_amp * self.amps[0]);
        for n in 1..m {
            next.push(shift_amp * self.amps[n - 1] + stay_amp * self.amps[n]);
        }
        next.push(shift_amp * self.amps[m - 1]);
        let norm = next.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut next {
            *a /= norm;
        }
        self.amps = next;
        self.renorm_log += norm.ln();
        Ok(())
    }

    /// Expectation of the relative-phase raising operator,
    /// `Σ_n C*_{n+1} C_n` — the unit-amplitude ladder on the explored
    /// constant-total-number subspace. Zero for a fresh number state.
    pub fn ladder_expectation(&self) -> Complex64 {
        self.amps.windows(2).map(|w| w[1].conj() * w[0]).sum()
    }

    /// Spread measure `δφ = 1 - <cos Δφ>² - <sin Δφ>²`, in `[0, 1]`:
    /// 1 for a phase-uniform state, → 0 as the phase locks.
    pub fn delta_phi(&self) -> f64 {
        (1.0 - self.ladder_expectation().norm_sqr()).clamp(0.0, 1.0)
    }

    /// Fringe content of the next-detection density:
    /// `p(φ) = 1 + λ_N |M₁| cos(φ - arg M₁)` with `M₁` the first circular
    /// moment of the phase profile (equal to the conjugated ladder
    /// expectation).
    pub fn predictive_harmonic(&self, gamma: f64) -> (f64, f64) {
        let moment = self.ladder_expectation().conj();
        let amplitude = (self.lambda_number(gamma) * moment.norm()).clamp(0.0, 1.0);
        (amplitude, wrap_angle(moment.arg()))
    }

    /// Phase profile `|F(φ)|²` from the Fourier sum of the amplitudes,
    /// normalized as a [`PhaseGrid`].
    pub fn phase_profile(&self, points: usize) -> PhaseGrid {
        let mut values = Vec::with_capacity(points);
        for j in 0..points {
            let w = Complex64::from_polar(1.0, -(TAU * j as f64 / points as f64));
            // Horner evaluation of Σ_n C_n w^n.
            let mut f = *self.amps.last().expect("nonempty amplitudes");
            for n in (0..self.amps.len() - 1).rev() {
                f = f * w + self.amps[n];
            }
            values.push(f.norm_sqr());
        }
        PhaseGrid::from_values(values).expect("profile has positive mass")
    }
}
