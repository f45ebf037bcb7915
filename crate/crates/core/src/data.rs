//! Observational unit and dataset container.
//!
//! A subject is observed only through a censoring interval `(left, right]`.
//! Right censoring is encoded as `right = +inf` together with `cause = 0`;
//! a subject that failed carries the failing cause `1..=k`.

use serde::{Deserialize, Serialize};
use std::fmt;

/// One subject: censoring interval, failure cause and covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalObservation {
    /// Last inspection time before the event.
    pub left: f64,
    /// First inspection time after the event, `f64::INFINITY` when right-censored.
    pub right: f64,
    /// 0 for censored, otherwise the cause index in `1..=k`.
    pub cause: usize,
    /// Covariates without the intercept.
    pub covariates: Vec<f64>,
}

impl IntervalObservation {
    pub fn event(left: f64, right: f64, cause: usize, covariates: Vec<f64>) -> Self {
        Self {
            left,
            right,
            cause,
            covariates,
        }
    }

    pub fn censored(left: f64, covariates: Vec<f64>) -> Self {
        Self {
            left,
            right: f64::INFINITY,
            cause: 0,
            covariates,
        }
    }

    #[inline]
    pub fn is_censored(&self) -> bool {
        self.cause == 0
    }
}

/// Ordered collection of observations sharing the same number of causes and covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompetingRisksDataset {
    pub observations: Vec<IntervalObservation>,
    pub num_causes: usize,
    pub num_covariates: usize,
    pub covariate_names: Option<Vec<String>>,
}

impl CompetingRisksDataset {
    pub fn new(observations: Vec<IntervalObservation>, num_causes: usize, num_covariates: usize) -> Self {
        Self {
            observations,
            num_causes,
            num_covariates,
            covariate_names: None,
        }
    }

    pub fn with_covariate_names(mut self, names: Vec<String>) -> Self {
        self.covariate_names = Some(names);
        self
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Number of regression coefficients per cause and link, `p + 1`.
    pub fn design_width(&self) -> usize {
        self.num_covariates + 1
    }

    /// Mean covariate vector over all observations.
    pub fn covariate_means(&self) -> Vec<f64> {
        let mut means = vec![0.0; self.num_covariates];
        if self.observations.is_empty() {
            return means;
        }
        for obs in &self.observations {
            for (m, x) in means.iter_mut().zip(&obs.covariates) {
                *m += x;
            }
        }
        let n = self.observations.len() as f64;
        means.iter_mut().for_each(|m| *m /= n);
        means
    }

    /// Count of observations per cause, index 0 being censored.
    pub fn cause_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_causes + 1];
        for obs in &self.observations {
            if obs.cause <= self.num_causes {
                counts[obs.cause] += 1;
            }
        }
        counts
    }
}

/// Prepends the intercept to a covariate vector: `(1, x_1, ..., x_p)`.
pub fn design_row(covariates: &[f64]) -> Vec<f64> {
    let mut row = Vec::with_capacity(covariates.len() + 1);
    row.push(1.0);
    row.extend_from_slice(covariates);
    row
}

/// Dot product of the design row `(1, x)` with a coefficient vector of length `p + 1`.
#[inline]
pub fn linear_predictor(coefficients: &[f64], covariates: &[f64]) -> f64 {
    debug_assert_eq!(coefficients.len(), covariates.len() + 1);
    coefficients[0]
        + coefficients[1..]
            .iter()
            .zip(covariates)
            .map(|(c, x)| c * x)
            .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    NegativeLeft,
    RightNotAfterLeft,
    CensoredNeedsInfiniteRight,
    InfiniteRightNeedsCensored,
    CauseExceedsNumCauses,
    CovariateLength,
    NonFiniteCovariate,
    EmptyDataset,
    NoCauses,
}

/// One invariant violation found by [`validate_dataset`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Offending observation, `None` for dataset-level rules.
    pub index: Option<usize>,
    pub rule: Rule,
}

impl Violation {
    /// Description of the broken rule without the location.
    pub fn rule_message(&self) -> &'static str {
        match self.rule {
            Rule::NegativeLeft => "left must be >= 0",
            Rule::RightNotAfterLeft => "right must be > left",
            Rule::CensoredNeedsInfiniteRight => "censored must have right=+inf",
            Rule::InfiniteRightNeedsCensored => "right=+inf must have cause=0",
            Rule::CauseExceedsNumCauses => "cause exceeds num_causes",
            Rule::CovariateLength => "covariate length differs from num_covariates",
            Rule::NonFiniteCovariate => "covariates must be finite",
            Rule::EmptyDataset => "no observations",
            Rule::NoCauses => "num_causes must be >= 1",
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = self.rule_message();
        match self.index {
            Some(i) => write!(f, "observation {i}: {msg}"),
            None => write!(f, "dataset: {msg}"),
        }
    }
}

/// Checks every dataset invariant. An empty result means the dataset is valid.
pub fn validate_dataset(ds: &CompetingRisksDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    if ds.num_causes == 0 {
        out.push(Violation { index: None, rule: Rule::NoCauses });
    }
    if ds.observations.is_empty() {
        out.push(Violation { index: None, rule: Rule::EmptyDataset });
    }
    for (i, obs) in ds.observations.iter().enumerate() {
        let mut push = |rule| out.push(Violation { index: Some(i), rule });
        if !(obs.left >= 0.0) || obs.left.is_infinite() {
            push(Rule::NegativeLeft);
        }
        if !(obs.right > obs.left) {
            push(Rule::RightNotAfterLeft);
        }
        if obs.cause == 0 && obs.right != f64::INFINITY {
            push(Rule::CensoredNeedsInfiniteRight);
        }
        if obs.cause != 0 && obs.right == f64::INFINITY {
            push(Rule::InfiniteRightNeedsCensored);
        }
        if obs.cause > ds.num_causes {
            push(Rule::CauseExceedsNumCauses);
        }
        if obs.covariates.len() != ds.num_covariates {
            push(Rule::CovariateLength);
        }
        if obs.covariates.iter().any(|x| !x.is_finite()) {
            push(Rule::NonFiniteCovariate);
        }
    }
    out
}
