//! Interval-censored competing-risks log-likelihood.
//!
//! A subject failing from cause `j` in `(U, V]` contributes `ln(S_j(U) - S_j(V))`;
//! a right-censored subject contributes `sum_j ln S_j(U)`. Every probability is
//! floored at `1e-300` before the logarithm and floored terms are counted.

use crate::data::{CompetingRisksDataset, IntervalObservation};
use crate::distributions::{DefectiveSurvival, LinkedParams};
use crate::error::{Error, Result};

pub const PROBABILITY_FLOOR: f64 = 1e-300;

/// `ln(1e-300)`.
pub fn log_floor() -> f64 {
    PROBABILITY_FLOOR.ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LikelihoodValue {
    /// Never NaN.
    pub loglik: f64,
    pub num_degenerate_terms: usize,
}

/// Floors one log-probability term, counting it when the floor applies.
#[inline]
fn floored(term: f64, degenerate: &mut usize) -> f64 {
    let floor = log_floor();
    if term >= floor {
        term
    } else {
        *degenerate += 1;
        floor
    }
}

/// Contribution of one observation and how many of its terms were floored.
pub fn obs_log_likelihood_counted(lp: &LinkedParams, obs: &IntervalObservation) -> Result<(f64, usize)> {
    let mut degenerate = 0;
    if obs.cause == 0 {
        let mut total = 0.0;
        for j in 1..=lp.num_causes() {
            let dist = lp.distribution(j, &obs.covariates)?;
            total += floored(dist.log_survival(obs.left), &mut degenerate);
        }
        Ok((total, degenerate))
    } else {
        let dist = lp.distribution(obs.cause, &obs.covariates)?;
        let term = dist.log_interval_probability(obs.left, obs.right);
        Ok((floored(term, &mut degenerate), degenerate))
    }
}

/// Log-likelihood contribution of a single observation.
pub fn obs_log_likelihood(lp: &LinkedParams, obs: &IntervalObservation) -> Result<f64> {
    obs_log_likelihood_counted(lp, obs).map(|(v, _)| v)
}

/// Neumaier compensated sum.
#[derive(Debug, Default, Clone, Copy)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

fn check_dimensions(lp: &LinkedParams, ds: &CompetingRisksDataset) -> Result<()> {
    if lp.num_causes() != ds.num_causes || lp.num_covariates() != ds.num_covariates {
        return Err(Error::Config(format!(
            "parameters describe {} causes and {} covariates, dataset has {} and {}",
            lp.num_causes(),
            lp.num_covariates(),
            ds.num_causes,
            ds.num_covariates
        )));
    }
    Ok(())
}

/// Sum of all observation contributions.
pub fn dataset_log_likelihood(lp: &LinkedParams, ds: &CompetingRisksDataset) -> Result<LikelihoodValue> {
    check_dimensions(lp, ds)?;
    let mut sum = CompensatedSum::default();
    let mut num_degenerate_terms = 0;
    for obs in &ds.observations {
        let (value, degenerate) = obs_log_likelihood_counted(lp, obs)?;
        sum.add(value);
        num_degenerate_terms += degenerate;
    }
    Ok(LikelihoodValue {
        loglik: sum.value(),
        num_degenerate_terms,
    })
}

/// The log-likelihood as a function of the packed parameter vector.
///
/// Parameter vectors whose links overflow evaluate to `-inf`.
#[derive(Debug, Clone, Copy)]
pub struct LogLikelihood<'a> {
    template: &'a LinkedParams,
    dataset: &'a CompetingRisksDataset,
}

impl<'a> LogLikelihood<'a> {
    pub fn new(template: &'a LinkedParams, dataset: &'a CompetingRisksDataset) -> Result<Self> {
        check_dimensions(template, dataset)?;
        Ok(Self { template, dataset })
    }

    pub fn dim(&self) -> usize {
        self.template.num_params()
    }

    pub fn evaluate(&self, theta: &[f64]) -> Result<LikelihoodValue> {
        let lp = self.template.with_vector(theta)?;
        dataset_log_likelihood(&lp, self.dataset)
    }

    pub fn value(&self, theta: &[f64]) -> f64 {
        match self.evaluate(theta) {
            Ok(v) if !v.loglik.is_nan() => v.loglik,
            _ => f64::NEG_INFINITY,
        }
    }
}
