//! Wald intervals, cure fractions and information criteria.

use crate::distributions::{std_normal_quantile, DefectiveSurvival, LinkedParams};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// `z_{alpha/2}`, the upper `alpha/2` point of the standard normal.
pub fn critical_value(alpha: f64) -> f64 {
    std_normal_quantile(1.0 - alpha / 2.0)
}

/// `(mle - z se, mle + z se)`, or `None` for a negative or non-finite variance.
pub fn wald_interval(mle: f64, variance: f64, alpha: f64) -> Option<(f64, f64)> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return None;
    }
    let half = critical_value(alpha) * variance.sqrt();
    Some((mle - half, mle + half))
}

/// Wald intervals from the diagonal of `covariance`.
pub fn wald_intervals(mle: &[f64], covariance: &[Vec<f64>], alpha: f64) -> Vec<Option<(f64, f64)>> {
    mle.iter()
        .enumerate()
        .map(|(i, &m)| wald_interval(m, covariance[i][i], alpha))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CureFractions {
    pub overall: f64,
    pub per_cause: Vec<f64>,
}

/// Per-cause cure fractions `p_j(x)` and their product `p(x)`.
pub fn cure_fractions(lp: &LinkedParams, covariates: &[f64]) -> Result<CureFractions> {
    let mut per_cause = Vec::with_capacity(lp.num_causes());
    for j in 1..=lp.num_causes() {
        let dist = lp.distribution(j, covariates)?;
        let p = dist.cure().map_err(|e| match e {
            Error::NotDefective { shape, .. } => Error::NotDefective { shape, cause: Some(j) },
            other => other,
        })?;
        per_cause.push(p);
    }
    let overall = per_cause.iter().product();
    Ok(CureFractions { overall, per_cause })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InformationCriteria {
    pub aic: f64,
    pub bic: f64,
    pub caic: f64,
}

/// AIC `-2L + 2k`, BIC `-2L + k ln n`, CAIC `-2L + k (ln n + 1)`.
pub fn information_criteria(loglik: f64, num_params: usize, n: usize) -> InformationCriteria {
    let k = num_params as f64;
    let ln_n = (n as f64).ln();
    InformationCriteria {
        aic: -2.0 * loglik + 2.0 * k,
        bic: -2.0 * loglik + k * ln_n,
        caic: -2.0 * loglik + k * (ln_n + 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Family;

    #[test]
    fn z_values() {
        assert!((critical_value(0.05) - 1.959964).abs() < 1e-6);
        assert!((critical_value(0.10) - 1.644854).abs() < 1e-6);
    }

    #[test]
    fn wald_reference_rows() {
        let (lo, hi) = wald_interval(-0.6097, 0.0835f64.powi(2), 0.05).unwrap();
        assert!((lo + 0.7734).abs() < 2e-4 && (hi + 0.4460).abs() < 2e-4);
        let (lo, hi) = wald_interval(0.5277, 0.0712f64.powi(2), 0.05).unwrap();
        assert!((lo - 0.3881).abs() < 2e-4 && (hi - 0.6673).abs() < 2e-4);
        assert_eq!(wald_interval(1.5, 0.0, 0.05), Some((1.5, 1.5)));
        assert_eq!(wald_interval(1.5, -1e-3, 0.05), None);
    }

    #[test]
    fn nested_levels() {
        let (l95, h95) = wald_interval(0.2, 0.3, 0.05).unwrap();
        let (l90, h90) = wald_interval(0.2, 0.3, 0.10).unwrap();
        assert!(l95 < l90 && h90 < h95);
    }

    #[test]
    fn criteria() {
        let ic = information_criteria(-1923.5, 8, 1486);
        assert_eq!(ic.aic, 3863.0);
        assert_eq!(ic.bic.round(), 3905.0);
        assert_eq!(ic.caic.round(), 3913.0);
        let ic = information_criteria(0.0, 1, 1);
        assert_eq!((ic.aic, ic.bic, ic.caic), (2.0, 0.0, 1.0));
    }

    #[test]
    fn cure_fractions_reference_gompertz() {
        let lp = LinkedParams::from_pairs(
            Family::Gompertz,
            &[(&[-0.6097, 0.0143], &[-1.3028, 0.1672]), (&[-0.0706, -0.5241], &[-3.8824, 0.7063])],
        )
        .unwrap();
        let at1 = cure_fractions(&lp, &[1.0]).unwrap();
        let at0 = cure_fractions(&lp, &[0.0]).unwrap();
        assert!((at1.overall - 0.54350364).abs() < 1e-7);
        assert!((at0.overall - 0.47828577).abs() < 1e-7);
        assert_eq!(at1.overall, at1.per_cause[0] * at1.per_cause[1]);
    }

    #[test]
    fn cure_fractions_reference_ig() {
        let lp = LinkedParams::from_pairs(
            Family::InverseGaussian,
            &[(&[-0.8731, 0.1643], &[0.5277, -0.0362]), (&[-0.6479, -0.7686], &[-0.7733, 0.8154])],
        )
        .unwrap();
        assert!((cure_fractions(&lp, &[0.0]).unwrap().overall - 0.604).abs() < 5e-4);
    }

    #[test]
    fn not_defective_names_cause() {
        let lp = LinkedParams::intercepts_only(Family::Gompertz, &[(-0.5, 0.0), (0.5, 0.0)], 0);
        match cure_fractions(&lp, &[]) {
            Err(Error::NotDefective { cause: Some(2), .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
