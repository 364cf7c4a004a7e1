//! Log-domain scalar and complex arithmetic.
//!
//! The exact detection engine multiplies hundreds of operator factors
//! together; the resulting coefficients and weights reach magnitudes around
//! 10^150 and 10^1100, far past `f64::MAX`. Everything here therefore keeps
//! magnitudes as natural logs. A complex value is stored in log-polar form
//! and sums are performed by factoring out the largest magnitude
//! (log-sum-exp), so intermediate results never overflow.

use num_complex::Complex64;
use std::f64::consts::TAU;

/// Log-magnitude of an exact zero.
pub const LOG_ZERO: f64 = f64::NEG_INFINITY;

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// A complex number `exp(log_mag) * e^(i*angle)` stored in log-polar form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    pub log_mag: f64,
    pub angle: f64,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex {
        log_mag: LOG_ZERO,
        angle: 0.0,
    };

    pub const ONE: LogComplex = LogComplex {
        log_mag: 0.0,
        angle: 0.0,
    };

    /// Unit-modulus value `e^(i*angle)`.
    pub fn unit(angle: f64) -> Self {
        LogComplex {
            log_mag: 0.0,
            angle: wrap_angle(angle),
        }
    }

    pub fn from_complex(z: Complex64) -> Self {
        let mag = z.norm();
        if mag == 0.0 {
            LogComplex::ZERO
        } else {
            LogComplex {
                log_mag: mag.ln(),
                angle: wrap_angle(z.arg()),
            }
        }
    }

    /// Reconstructs the value, applying an extra log factor (e.g. a global
    /// scale). Overflows to infinity if the true magnitude exceeds `f64`.
    pub fn to_complex(self, extra_log: f64) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        let mag = (self.log_mag + extra_log).exp();
        Complex64::from_polar(mag, self.angle)
    }

    pub fn is_zero(self) -> bool {
        self.log_mag == LOG_ZERO
    }

    /// Rotates by `e^(i*angle)` without touching the magnitude.
    pub fn rotate(self, angle: f64) -> LogComplex {
        if self.is_zero() {
            return self;
        }
        LogComplex {
            log_mag: self.log_mag,
            angle: wrap_angle(self.angle + angle),
        }
    }
}

impl std::ops::Mul for LogComplex {
    type Output = LogComplex;

    fn mul(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() || rhs.is_zero() {
            return LogComplex::ZERO;
        }
        LogComplex {
            log_mag: self.log_mag + rhs.log_mag,
            angle: wrap_angle(self.angle + rhs.angle),
        }
    }
}

/// Complex addition by factoring out the larger magnitude.
///
/// With `r = |lo|/|hi| <= 1` and `d` the angle difference,
/// `|1 + r e^(id)|^2 = (1-r)^2 + 4 r cos^2(d/2)`, which stays accurate
/// even when the two terms nearly cancel.
impl std::ops::Add for LogComplex {
    type Output = LogComplex;

    fn add(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        let (hi, lo) = if self.log_mag >= rhs.log_mag {
            (self, rhs)
        } else {
            (rhs, self)
        };
        let d = lo.log_mag - hi.log_mag;
        let r = d.exp();
        let delta = lo.angle - hi.angle;
        let one_minus_r = -d.exp_m1();
        let half_cos = (delta * 0.5).cos();
        let mag2 = one_minus_r * one_minus_r + 4.0 * r * half_cos * half_cos;
        if mag2 == 0.0 {
            return LogComplex::ZERO;
        }
        let angle = hi.angle + (r * delta.sin()).atan2(1.0 + r * delta.cos());
        LogComplex {
            log_mag: hi.log_mag + 0.5 * mag2.ln(),
            angle: wrap_angle(angle),
        }
    }
}

/// Online log-sum-exp accumulator for nonnegative terms given as logs.
#[derive(Debug, Clone)]
pub struct LogSum {
    max: f64,
    sum: f64,
}

impl LogSum {
    pub fn new() -> Self {
        LogSum {
            max: LOG_ZERO,
            sum: 0.0,
        }
    }

    pub fn push(&mut self, log_term: f64) {
        if log_term == LOG_ZERO {
            return;
        }
        if log_term <= self.max {
            self.sum += (log_term - self.max).exp();
        } else {
            self.sum = if self.max == LOG_ZERO {
                1.0
            } else {
                self.sum * (self.max - log_term).exp() + 1.0
            };
            self.max = log_term;
        }
    }

    /// Log of the accumulated sum; `LOG_ZERO` if nothing was pushed.
    pub fn total(&self) -> f64 {
        if self.max == LOG_ZERO {
            LOG_ZERO
        } else {
            self.max + self.sum.ln()
        }
    }
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

/// Online accumulator for a sum of complex terms given in log-polar form.
#[derive(Debug, Clone)]
pub struct LogComplexSum {
    scale: f64,
    re: f64,
    im: f64,
}

impl LogComplexSum {
    pub fn new() -> Self {
        LogComplexSum {
            scale: LOG_ZERO,
            re: 0.0,
            im: 0.0,
        }
    }

    pub fn push(&mut self, log_mag: f64, angle: f64) {
        if log_mag == LOG_ZERO {
            return;
        }
        if log_mag > self.scale {
            if self.scale != LOG_ZERO {
                let shrink = (self.scale - log_mag).exp();
                self.re *= shrink;
                self.im *= shrink;
            }
            self.scale = log_mag;
        }
        let w = (log_mag - self.scale).exp();
        self.re += w * angle.cos();
        self.im += w * angle.sin();
    }

    pub fn total(&self) -> LogComplex {
        if self.scale == LOG_ZERO {
            return LogComplex::ZERO;
        }
        let mag = self.re.hypot(self.im);
        if mag == 0.0 {
            return LogComplex::ZERO;
        }
        LogComplex {
            log_mag: self.scale + mag.ln(),
            angle: wrap_angle(self.im.atan2(self.re)),
        }
    }
}

impl Default for LogComplexSum {
    fn default() -> Self {
        Self::new()
    }
}

/// Log-sum-exp of a slice of log values.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let mut acc = LogSum::new();
    for &v in values {
        acc.push(v);
    }
    acc.total()
}

/// Natural log of `n!` by direct summation.
///
/// Relative error stays near machine precision for the table sizes used
/// here (a few thousand entries); see `LnFactorialTable` for the cached
/// variant used in hot paths.
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

/// Cumulative table of `ln(k!)` for `k = 0..=max`.
#[derive(Debug, Clone)]
pub struct LnFactorialTable {
    values: Vec<f64>,
}

impl LnFactorialTable {
    pub fn new(max: usize) -> Self {
        let mut values = Vec::with_capacity(max + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for k in 1..=max {
            acc += (k as f64).ln();
            values.push(acc);
        }
        LnFactorialTable { values }
    }

    pub fn get(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// `ln(n (n-1) ... (n-len+1))`, the falling product of `len` factors.
    /// Returns `LOG_ZERO` when the product includes zero (`len > n`).
    pub fn ln_falling(&self, n: usize, len: usize) -> f64 {
        if len == 0 {
            return 0.0;
        }
        if len > n {
            return LOG_ZERO;
        }
        self.get(n) - self.get(n - len)
    }
}
