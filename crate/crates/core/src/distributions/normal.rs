//! Standard normal CDF and helpers built on the complementary error function.

use libm::erfc;
use std::f64::consts::{PI, SQRT_2};

/// Below this argument `ln Phi(z)` switches to its asymptotic expansion.
const LOG_CDF_ASYMPTOTIC_BELOW: f64 = -30.0;

/// `Phi(z)`, evaluated as `erfc(-z / sqrt 2) / 2` so the lower tail keeps full relative precision.
#[inline]
pub fn std_normal_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    0.5 * erfc(-z / SQRT_2)
}

/// `ln Phi(z)`, finite down to `z = -1e150` or so.
pub fn log_std_normal_cdf(z: f64) -> f64 {
    if z == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if z >= LOG_CDF_ASYMPTOTIC_BELOW {
        if z > 5.0 {
            // Phi close to one: ln(1 - Phi(-z))
            return (-std_normal_cdf(-z)).ln_1p();
        }
        return std_normal_cdf(z).ln();
    }
    // Phi(z) ~ phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8 - 945/z^10)
    let z2 = z * z;
    let inv = 1.0 / z2;
    let series = 1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv * (1.0 - 9.0 * inv))));
    -0.5 * z2 - (-z).ln() - 0.5 * (2.0 * PI).ln() + series.ln()
}

/// `Phi(hi) - Phi(lo)`, evaluated on whichever tail keeps the two terms small.
#[inline]
pub fn std_normal_cdf_diff(hi: f64, lo: f64) -> f64 {
    if hi > 0.0 && lo > 0.0 {
        std_normal_cdf(-lo) - std_normal_cdf(-hi)
    } else {
        std_normal_cdf(hi) - std_normal_cdf(lo)
    }
}

/// Inverse of the standard normal CDF.
pub fn std_normal_quantile(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    // Acklam's rational approximation, polished by two Halley steps on Phi.
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.383577518672690e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e1,
        1.615858368580409e2,
        -1.556989798598866e2,
        6.680131188771972e1,
        -1.328068155288572e1,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-3,
        3.224671290700398e-1,
        2.445134137142996,
        3.754408661907416,
    ];
    const P_LOW: f64 = 0.02425;
    let tail = |q: f64| {
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    let mut x = if p < P_LOW {
        tail((-2.0 * p.ln()).sqrt())
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        -tail((-2.0 * (1.0 - p).ln()).sqrt())
    };
    for _ in 0..2 {
        let e = if x < 0.0 {
            std_normal_cdf(x) - p
        } else {
            (1.0 - p) - std_normal_cdf(-x)
        };
        let u = e * (2.0 * PI).sqrt() * (0.5 * x * x).exp();
        x -= u / (1.0 + 0.5 * x * u);
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        // mpmath, 50 digits
        assert!((std_normal_cdf(-1.5) - 0.066807201268858066).abs() < 1e-15);
        assert!((std_normal_cdf(1.959964) - 0.97500000090355760).abs() < 1e-15);
        assert!((std_normal_cdf(-8.0) / 6.2209605742717841e-16 - 1.0).abs() < 1e-12);
        assert_eq!(std_normal_cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(std_normal_cdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn symmetry() {
        for i in 0..=1600 {
            let z = -8.0 + i as f64 * 0.01;
            assert!((std_normal_cdf(z) + std_normal_cdf(-z) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn log_cdf_is_continuous_across_branch() {
        let below = log_std_normal_cdf(-30.0 - 1e-9);
        let above = log_std_normal_cdf(-30.0);
        assert!((below - above).abs() < 1e-6);
        // mpmath: ln Phi(-40) = -804.60844201375379
        assert!((log_std_normal_cdf(-40.0) + 804.60844201375379).abs() < 1e-9);
        assert!(log_std_normal_cdf(10.0) < 0.0);
        assert!(log_std_normal_cdf(-1e10).is_finite());
    }

    #[test]
    fn quantile_matches_known_z() {
        assert!((std_normal_quantile(0.975) - 1.959963984540054).abs() < 1e-12);
        assert!((std_normal_quantile(0.95) - 1.6448536269514722).abs() < 1e-12);
        assert!((std_normal_cdf(std_normal_quantile(0.3)) - 0.3).abs() < 1e-14);
    }

    #[test]
    fn diff_uses_upper_tail() {
        let d = std_normal_cdf_diff(9.0, 8.5);
        // mpmath: Phi(9) - Phi(8.5) = 9.3666759816e-18
        assert!((d / 9.3666759816e-18 - 1.0).abs() < 1e-8);
    }
}
