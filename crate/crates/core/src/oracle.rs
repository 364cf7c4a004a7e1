//! Slow, independent reference computations used to validate the engines.
//!
//! Everything here is deliberately direct: plain complex arithmetic over the
//! full two-mode basis, one-pass product evaluation, no log-domain tricks
//! and no code shared with the engines being checked. Small instances only.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Conditional density for a pure Fock pair by explicit state evolution
/// over the whole two-mode basis, mean-normalized on the grid.
///
/// The detection operator `a₁ + √Γ e^{-iφ} a₂` is applied once per recorded
/// detection and once more per evaluation phase; the density is the squared
/// norm of the result.
pub fn fock_pair_density(
    atoms_1: u64,
    atoms_2: u64,
    gamma: f64,
    detections: &[f64],
    grid_points: usize,
) -> Vec<f64> {
    let (n1, n2) = (atoms_1 as usize, atoms_2 as usize);
    let mut state = vec![vec![Complex64::new(0.0, 0.0); n2 + 1]; n1 + 1];
    state[n1][n2] = Complex64::new(1.0, 0.0);
    for &phi in detections {
        state = apply_detection(&state, gamma, phi);
    }
    let mut values = Vec::with_capacity(grid_points);
    for j in 0..grid_points {
        let phi = TAU * j as f64 / grid_points as f64;
        let after = apply_detection(&state, gamma, phi);
        let norm_sqr: f64 = after
            .iter()
            .flat_map(|row| row.iter())
            .map(|a| a.norm_sqr())
            .sum();
        values.push(norm_sqr);
    }
    let mean = values.iter().sum::<f64>() / grid_points as f64;
    values.iter().map(|v| v / mean).collect()
}

fn apply_detection(state: &[Vec<Complex64>], gamma: f64, phi: f64) -> Vec<Vec<Complex64>> {
    let rows = state.len();
    let cols = state[0].len();
    let second = Complex64::from_polar(gamma.sqrt(), -phi);
    let mut next = vec![vec![Complex64::new(0.0, 0.0); cols]; rows];
    for (k1, row) in next.iter_mut().enumerate() {
        for (k2, out) in row.iter_mut().enumerate() {
            let mut acc = Complex64::new(0.0, 0.0);
            if k1 + 1 < rows {
                acc += ((k1 + 1) as f64).sqrt() * state[k1 + 1][k2];
            }
            if k2 + 1 < cols {
                acc += second * ((k2 + 1) as f64).sqrt() * state[k1][k2 + 1];
            }
            *out = acc;
        }
    }
    next
}

/// Filtered phase distribution evaluated as one direct product
/// `Π_k [1 + λ cos(φ_k - ψ)]`, normalized to grid mean 1.
pub fn filter_product_values(lambda: f64, detections: &[f64], points: usize) -> Vec<f64> {
    let mut values: Vec<f64> = (0..points)
        .map(|j| {
            let psi = TAU * j as f64 / points as f64;
            detections
                .iter()
                .map(|&p| 1.0 + lambda * (p - psi).cos())
                .product()
        })
        .collect();
    let mean = values.iter().sum::<f64>() / points as f64;
    for v in &mut values {
        *v /= mean;
    }
    values
}

/// Next-detection density from the product-form distribution by direct
/// numerical integration of `∫ dψ/2π [1 + λ cos(φ - ψ)] f(ψ)`.
pub fn product_predictive_density(
    lambda: f64,
    detections: &[f64],
    eval_points: usize,
    integration_points: usize,
) -> Vec<f64> {
    let f = filter_product_values(lambda, detections, integration_points);
    (0..eval_points)
        .map(|j| {
            let phi = TAU * j as f64 / eval_points as f64;
            let mut acc = 0.0;
            for (k, &fv) in f.iter().enumerate() {
                let psi = TAU * k as f64 / integration_points as f64;
                acc += (1.0 + lambda * (phi - psi).cos()) * fv;
            }
            acc / integration_points as f64
        })
        .collect()
}
