//! Inverse-Gaussian first-passage survival
//! `S(t) = 1 - [Phi((-1 + at)/sqrt(bt)) + e^{2a/b} Phi((-1 - at)/sqrt(bt))]`,
//! defective when `a < 0` with cure fraction `1 - e^{2a/b}`.
//!
//! The factor `e^{2a/b}` always travels together with `Phi` of the second argument
//! and is evaluated as `exp(2a/b + ln Phi(.))`, which stays bounded for large positive
//! `2a/b` because the second argument is then far in the lower tail.

use super::normal::{log_std_normal_cdf, std_normal_cdf, std_normal_cdf_diff};
use super::DefectiveSurvival;
use crate::error::{Error, Result};

const LOWER_BRACKET: f64 = 1e-12;
const MAX_INVERSION_ITERATIONS: usize = 200;
const INVERSION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGaussianParams {
    pub shape: f64,
    pub scale: f64,
}

impl InverseGaussianParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !shape.is_finite() {
            return Err(Error::Domain(format!(
                "inverse Gaussian parameters must be finite with scale > 0 (a = {shape}, b = {scale})"
            )));
        }
        Ok(Self { shape, scale })
    }

    /// The two `Phi` arguments at time `t`, with their limits at 0 and infinity.
    fn arguments(&self, t: f64) -> (f64, f64) {
        let a = self.shape;
        if t == 0.0 {
            return (f64::NEG_INFINITY, f64::NEG_INFINITY);
        }
        if t.is_infinite() {
            return if a < 0.0 {
                (f64::NEG_INFINITY, f64::INFINITY)
            } else if a > 0.0 {
                (f64::INFINITY, f64::NEG_INFINITY)
            } else {
                (0.0, 0.0)
            };
        }
        let root = (self.scale * t).sqrt();
        ((-1.0 + a * t) / root, (-1.0 - a * t) / root)
    }

    #[inline]
    fn exponent(&self) -> f64 {
        2.0 * self.shape / self.scale
    }

    /// `e^{2a/b} Phi(z)` without overflowing the exponential.
    #[inline]
    fn reflected_term(&self, z: f64) -> f64 {
        (self.exponent() + log_std_normal_cdf(z)).exp()
    }
}

impl DefectiveSurvival for InverseGaussianParams {
    fn shape(&self) -> f64 {
        self.shape
    }

    fn survival(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 1.0;
        }
        let (first, second) = self.arguments(t);
        // 1 - Phi(first) = Phi(-first)
        (std_normal_cdf(-first) - self.reflected_term(second)).clamp(0.0, 1.0)
    }

    fn log_survival(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        self.survival(t).ln()
    }

    /// `S(u) - S(v)` as the sum of two grouped `Phi` differences.
    fn interval_probability(&self, u: f64, v: f64) -> f64 {
        if !(v > u) {
            return 0.0;
        }
        let (first_u, second_u) = self.arguments(u);
        let (first_v, second_v) = self.arguments(v);
        let direct = std_normal_cdf_diff(first_v, first_u);
        let reflected = if second_u > 0.0 && second_v > 0.0 {
            // upper tail; a < 0 here so the exponential is below one
            self.exponent().exp() * (std_normal_cdf(-second_u) - std_normal_cdf(-second_v))
        } else {
            self.reflected_term(second_v) - self.reflected_term(second_u)
        };
        let p = direct + reflected;
        if p.is_nan() {
            return p;
        }
        p.clamp(0.0, 1.0)
    }

    fn log_interval_probability(&self, u: f64, v: f64) -> f64 {
        self.interval_probability(u, v).ln()
    }

    fn cure(&self) -> Result<f64> {
        if self.shape >= 0.0 {
            return Err(Error::NotDefective { shape: self.shape, cause: None });
        }
        Ok(-self.exponent().exp_m1())
    }

    /// Solves `S(t) = 1 - u (1 - cure)` by doubling an upper bracket from 1 and then
    /// bisecting in `ln t` over `[1e-12, t_hi]`.
    fn conditional_quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level {u} outside (0, 1)")));
        }
        let cure = self.cure()?;
        let target = 1.0 - u * (1.0 - cure);
        let residual = |t: f64| self.survival(t) - target;

        let mut lo = LOWER_BRACKET;
        if residual(lo) <= 0.0 {
            return Ok(lo);
        }
        let mut hi = 1.0_f64;
        let mut iterations = 0;
        while residual(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            iterations += 1;
            if iterations >= MAX_INVERSION_ITERATIONS || !hi.is_finite() {
                return Err(Error::Inversion { residual: residual(lo) });
            }
        }
        let (mut log_lo, mut log_hi) = (lo.ln(), hi.ln());
        let mut best = (hi, residual(hi));
        while iterations < MAX_INVERSION_ITERATIONS {
            iterations += 1;
            let mid = 0.5 * (log_lo + log_hi);
            let t = mid.exp();
            let r = residual(t);
            if r.abs() < best.1.abs() {
                best = (t, r);
            }
            if r == 0.0 || (log_hi - log_lo) < 1e-15 {
                break;
            }
            if r > 0.0 {
                log_lo = mid;
            } else {
                log_hi = mid;
            }
        }
        if best.1.abs() <= INVERSION_TOLERANCE {
            Ok(best.0)
        } else {
            Err(Error::Inversion { residual: best.1 })
        }
    }
}
