//! Gompertz survival `S(t) = exp(-(b/a)(e^{at} - 1))`, defective when `a < 0`.

use super::DefectiveSurvival;
use crate::error::{Error, Result};

/// Below this `|a|` the cumulative hazard uses its small-`a` series.
pub const SERIES_SHAPE_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GompertzParams {
    pub shape: f64,
    pub scale: f64,
}

impl GompertzParams {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !shape.is_finite() {
            return Err(Error::Domain(format!(
                "Gompertz parameters must be finite with scale > 0 (a = {shape}, b = {scale})"
            )));
        }
        Ok(Self { shape, scale })
    }

    /// `(e^{at} - 1) / a`, or its series `t (1 + at/2 + (at)^2/6)` near `a = 0`.
    #[inline]
    fn integrated_profile(&self, t: f64) -> f64 {
        let a = self.shape;
        if a.abs() < SERIES_SHAPE_THRESHOLD {
            let at = a * t;
            t * (1.0 + at / 2.0 + at * at / 6.0)
        } else {
            (a * t).exp_m1() / a
        }
    }

    /// Cumulative hazard `H(t) = b (e^{at} - 1) / a`.
    #[inline]
    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        if t == 0.0 {
            return 0.0;
        }
        self.scale * self.integrated_profile(t)
    }

    /// `H(v) - H(u)` for `u < v`, without subtracting two large hazards.
    fn hazard_increment(&self, u: f64, v: f64) -> f64 {
        let a = self.shape;
        let w = v - u;
        if a.abs() < SERIES_SHAPE_THRESHOLD {
            if v.is_infinite() {
                return f64::INFINITY;
            }
            self.scale * w * (1.0 + a * (v + u) / 2.0 + a * a * (v * v + v * u + u * u) / 6.0)
        } else {
            self.scale * (a * u).exp() * (a * w).exp_m1() / a
        }
    }
}

impl DefectiveSurvival for GompertzParams {
    fn shape(&self) -> f64 {
        self.shape
    }

    fn log_survival(&self, t: f64) -> f64 {
        -self.cumulative_hazard(t)
    }

    fn survival(&self, t: f64) -> f64 {
        self.log_survival(t).exp().clamp(0.0, 1.0)
    }

    fn interval_probability(&self, u: f64, v: f64) -> f64 {
        self.log_interval_probability(u, v).exp()
    }

    /// `ln(S(u) - S(v)) = ln S(u) + ln(1 - exp(-(H(v) - H(u))))`.
    fn log_interval_probability(&self, u: f64, v: f64) -> f64 {
        if !(v > u) {
            return f64::NEG_INFINITY;
        }
        let dh = self.hazard_increment(u, v);
        if !(dh > 0.0) {
            return f64::NEG_INFINITY;
        }
        self.log_survival(u) + (-(-dh).exp_m1()).ln()
    }

    fn cure(&self) -> Result<f64> {
        if self.shape >= 0.0 {
            return Err(Error::NotDefective { shape: self.shape, cause: None });
        }
        Ok((self.scale / self.shape).exp())
    }

    /// Closed form `t = (1/a) ln(1 - (a/b) ln(1 - u (1 - cure)))`.
    fn conditional_quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::Domain(format!("quantile level {u} outside (0, 1)")));
        }
        if self.shape >= 0.0 {
            return Err(Error::NotDefective { shape: self.shape, cause: None });
        }
        let (a, b) = (self.shape, self.scale);
        // ln(1 - u(1 - e^{b/a})) = ln1p(u * expm1(b/a))
        let log_target = (u * (b / a).exp_m1()).ln_1p();
        let t = (-(a / b) * log_target).ln_1p() / a;
        if t.is_finite() {
            Ok(t.max(0.0))
        } else {
            Ok(f64::MAX)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(a: f64, b: f64) -> GompertzParams {
        GompertzParams::new(a, b).unwrap()
    }

    #[test]
    fn survival_reference_values() {
        assert_eq!(p(-0.5, 0.3).survival(0.0), 1.0);
        // mpmath
        assert!((p(-0.5, 0.3).survival(2.0) - 0.68435921211632720).abs() < 1e-14);
        assert!((p(-1e-12, 0.3).survival(2.0) - (-0.6f64).exp()).abs() < 1e-9);
        assert!((p(-1e-12, 0.3).survival(2.0) - 0.54881163609435573).abs() < 1e-14);
    }

    #[test]
    fn series_branch_matches_exponential() {
        for &a in &[0.0, 1e-10, -1e-10, 5e-11] {
            for &t in &[0.1, 1.0, 3.0, 10.0] {
                let s = p(a, 0.7).survival(t);
                assert!((s - (-0.7 * t).exp()).abs() <= 1e-8, "a={a} t={t}");
            }
        }
    }

    #[test]
    fn cure_values() {
        assert!((p(-0.5, 0.3).cure().unwrap() - 0.54881163609402644).abs() < 1e-15);
        for &b in &[0.01, 1.0, 7.5] {
            assert!((p(-b, b).cure().unwrap() - (-1.0f64).exp()).abs() < 1e-15);
        }
        assert!(matches!(p(0.5, 0.3).cure(), Err(Error::NotDefective { .. })));
        assert!(p(-0.5, 0.3).survival(f64::INFINITY) - 0.54881163609402644 < 1e-15);
    }

    #[test]
    fn quantile_round_trip() {
        let g = p(-0.5, 0.3);
        let t = g.conditional_quantile(0.5).unwrap();
        // mpmath: t = 1.1105957558469283, S(t) = 0.77440581804701322
        assert!((t - 1.1105957558469283).abs() < 1e-12);
        assert!((g.survival(t) - 0.77440581804701322).abs() < 1e-12);
        assert!(g.conditional_quantile(1e-12).unwrap() < 1e-10);
        let far = g.conditional_quantile(1.0 - 1e-15).unwrap();
        assert!(far.is_finite() && far > 50.0);
        assert!((g.survival(far) - g.cure().unwrap()).abs() < 1e-12);
        assert!(matches!(g.conditional_quantile(0.0), Err(Error::Domain(_))));
        assert!(matches!(g.conditional_quantile(1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn interval_probability_matches_difference() {
        let g = p(-0.5, 0.3);
        // mpmath: ln(S(1) - S(2)) = -2.2504005529299867
        assert!((g.log_interval_probability(1.0, 2.0) + 2.2504005529299867).abs() < 1e-13);
        let lp = g.log_interval_probability(1.0, f64::INFINITY);
        assert!((lp.exp() - (g.survival(1.0) - g.cure().unwrap())).abs() < 1e-15);
        assert_eq!(g.log_interval_probability(1.0, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn rejects_bad_scale() {
        assert!(GompertzParams::new(-1.0, 0.0).is_err());
        assert!(GompertzParams::new(-1.0, f64::INFINITY).is_err());
    }
}
