//! Maximum-likelihood fitting and Wald inference.
//!
//! The optimizer works on the packed coefficient vector
//! `(gamma_1, beta_1, gamma_2, beta_2, ...)` without box constraints: the log
//! link keeps every scale positive and the sign of each shape is left to the
//! data. Several starts are run (the configured one plus seeded Gaussian
//! perturbations of it) and the best local maximum is kept.

pub mod hessian;
pub mod inference;
pub mod optimizer;

pub use hessian::{numerical_hessian, symmetric_inverse};
pub use inference::{
    critical_value, cure_fractions, information_criteria, wald_interval, wald_intervals, CureFractions,
    InformationCriteria,
};

use crate::data::{validate_dataset, CompetingRisksDataset};
use crate::distributions::{Family, LinkedParams};
use crate::error::{Error, Result};
use crate::likelihood::LogLikelihood;
use optimizer::{minimize, BfgsOptions, BfgsOutcome};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Restarts of the best run when it stopped without meeting the gradient criterion.
const POLISH_RESTARTS: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub initial_params: LinkedParams,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    /// Relative finite-difference step of the Hessian.
    pub hessian_step: f64,
    /// Two-sided levels `alpha` of the reported Wald intervals.
    pub confidence_levels: Vec<f64>,
    pub multistart_count: usize,
    pub multistart_seed: u64,
    /// Standard deviation of the Gaussian perturbation applied to extra starts.
    pub multistart_spread: f64,
}

impl FitConfig {
    pub fn new(initial_params: LinkedParams) -> Self {
        Self {
            initial_params,
            max_iterations: 500,
            gradient_tolerance: 1e-6,
            hessian_step: 1e-4,
            confidence_levels: vec![0.05, 0.10],
            multistart_count: 5,
            multistart_seed: 0,
            multistart_spread: 0.1,
        }
    }

    pub fn family(&self) -> Family {
        self.initial_params.family
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_tolerance > 0.0) || !(self.hessian_step > 0.0) {
            return Err(Error::Config("tolerances must be positive".into()));
        }
        if self.multistart_count == 0 {
            return Err(Error::Config("multistart_count must be >= 1".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("max_iterations must be >= 1".into()));
        }
        if self.confidence_levels.iter().any(|a| !(*a > 0.0 && *a < 1.0)) {
            return Err(Error::Config("confidence levels must lie in (0, 1)".into()));
        }
        if !(self.multistart_spread >= 0.0) {
            return Err(Error::Config("multistart_spread must be >= 0".into()));
        }
        Ok(())
    }

    /// Start points: the configured one first, then seeded perturbations.
    pub fn start_points(&self) -> Vec<Vec<f64>> {
        let base = self.initial_params.to_vector();
        let mut starts = vec![base.clone()];
        let noise = Normal::new(0.0, self.multistart_spread.max(f64::MIN_POSITIVE)).expect("finite spread");
        for k in 1..self.multistart_count {
            let mut rng = ChaCha8Rng::seed_from_u64(self.multistart_seed);
            rng.set_stream(k as u64);
            starts.push(base.iter().map(|x| x + noise.sample(&mut rng)).collect());
        }
        starts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Wald intervals at one level; `None` marks a parameter with negative variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSet {
    pub alpha: f64,
    pub intervals: Vec<Option<Interval>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub family: Family,
    pub parameter_names: Vec<String>,
    pub mle: LinkedParams,
    pub estimates: Vec<f64>,
    pub loglik: f64,
    pub covariance: Vec<Vec<f64>>,
    pub std_errors: Vec<Option<f64>>,
    pub confidence_intervals: Vec<ConfidenceSet>,
    pub converged: bool,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub num_evaluations: usize,
    pub degenerate_term_count: usize,
    pub singular_directions: usize,
    pub negative_curvature_directions: usize,
    pub start_logliks: Vec<Option<f64>>,
    pub best_start: usize,
    pub n: usize,
    pub num_params: usize,
    pub information_criteria: InformationCriteria,
    pub warnings: Vec<String>,
}

impl FitResult {
    pub fn intervals_at(&self, alpha: f64) -> Option<&ConfidenceSet> {
        self.confidence_intervals.iter().find(|c| (c.alpha - alpha).abs() < 1e-12)
    }
}

struct Run {
    start_loglik: Option<f64>,
    outcome: Option<BfgsOutcome>,
}

/// Fits the model and always returns the best point found; check `converged`.
pub fn fit(ds: &CompetingRisksDataset, cfg: &FitConfig) -> Result<FitResult> {
    cfg.validate()?;
    if let Some(v) = validate_dataset(ds).first() {
        return Err(Error::Config(format!("invalid dataset: {v}")));
    }
    let objective = LogLikelihood::new(&cfg.initial_params, ds)?;
    let starts = cfg.start_points();
    if !objective.value(&starts[0]).is_finite() {
        return Err(Error::BadStart);
    }
    let opts = BfgsOptions {
        max_iterations: cfg.max_iterations,
        gradient_tolerance: cfg.gradient_tolerance,
        ..BfgsOptions::default()
    };
    let negated = |theta: &[f64]| -objective.value(theta);

    let runs: Vec<Run> = starts
        .par_iter()
        .map(|x0| {
            let start = objective.value(x0);
            Run {
                start_loglik: start.is_finite().then_some(start),
                outcome: if start.is_finite() { minimize(negated, x0, &opts) } else { None },
            }
        })
        .collect();

    let mut evaluations: usize = runs.iter().filter_map(|r| r.outcome.as_ref()).map(|o| o.evaluations).sum();
    let (best_start, best) = runs
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.outcome.as_ref().map(|o| (i, o)))
        // smallest negated loglik; ties keep the earliest start
        .fold(None::<(usize, &BfgsOutcome)>, |acc, (i, o)| match acc {
            Some((_, b)) if b.value <= o.value => acc,
            _ => Some((i, o)),
        })
        .ok_or(Error::BadStart)?;
    let mut best = best.clone();
    let mut iterations = best.iterations;
    for _ in 0..POLISH_RESTARTS {
        if best.converged {
            break;
        }
        match minimize(negated, &best.x, &opts) {
            Some(next) => {
                evaluations += next.evaluations;
                iterations += next.iterations;
                let improved = next.value <= best.value;
                if improved {
                    best = next;
                }
                if !improved {
                    break;
                }
            }
            None => break,
        }
    }

    let mle = cfg.initial_params.with_vector(&best.x)?;
    let value = objective.evaluate(&best.x)?;
    let mut warnings = Vec::new();

    let dim = best.x.len();
    let (covariance, singular_directions, negative_curvature_directions) =
        match numerical_hessian(|t| objective.value(t), &best.x, cfg.hessian_step) {
            Ok(h) => {
                evaluations += 1 + 2 * dim + 2 * dim * (dim - 1);
                let inv = symmetric_inverse(&(-h));
                let cov: Vec<Vec<f64>> = (0..dim)
                    .map(|i| (0..dim).map(|j| inv.inverse[(i, j)]).collect())
                    .collect();
                (cov, inv.singular_directions, inv.negative_directions)
            }
            Err(e) => {
                warnings.push(format!("covariance unavailable: {e}"));
                (vec![vec![f64::NAN; dim]; dim], dim, 0)
            }
        };
    if singular_directions > 0 {
        warnings.push(format!(
            "observed information is singular in {singular_directions} direction(s); pseudo-inverse used"
        ));
    }
    if negative_curvature_directions > 0 {
        warnings.push(format!(
            "Hessian is not negative definite ({negative_curvature_directions} direction(s)); not a strict local maximum"
        ));
    }

    let std_errors: Vec<Option<f64>> = (0..dim)
        .map(|i| {
            let v = covariance[i][i];
            (v >= 0.0 && v.is_finite()).then(|| v.sqrt())
        })
        .collect();
    let confidence_intervals = cfg
        .confidence_levels
        .iter()
        .map(|&alpha| ConfidenceSet {
            alpha,
            intervals: wald_intervals(&best.x, &covariance, alpha)
                .into_iter()
                .map(|ci| ci.map(|(lower, upper)| Interval { lower, upper }))
                .collect(),
        })
        .collect();

    diagnose(&mle, ds, &mut warnings);
    if value.num_degenerate_terms > 0 {
        warnings.push(format!(
            "{} likelihood term(s) floored at 1e-300",
            value.num_degenerate_terms
        ));
    }
    if !best.converged {
        warnings.push(format!(
            "optimizer stopped with gradient norm {:e} above tolerance {:e}",
            best.gradient_norm, cfg.gradient_tolerance
        ));
    }

    Ok(FitResult {
        family: cfg.family(),
        parameter_names: mle.parameter_names(),
        estimates: best.x.clone(),
        mle,
        loglik: value.loglik,
        covariance,
        std_errors,
        confidence_intervals,
        converged: best.converged,
        gradient_norm: best.gradient_norm,
        iterations,
        num_evaluations: evaluations,
        degenerate_term_count: value.num_degenerate_terms,
        singular_directions,
        negative_curvature_directions,
        start_logliks: runs.iter().map(|r| r.start_loglik).collect(),
        best_start,
        n: ds.len(),
        num_params: dim,
        information_criteria: information_criteria(value.loglik, dim, ds.len()),
        warnings,
    })
}

/// Like [`fit`], but a run that did not converge is an error.
pub fn fit_mle(ds: &CompetingRisksDataset, cfg: &FitConfig) -> Result<FitResult> {
    let result = fit(ds, cfg)?;
    if result.converged {
        Ok(result)
    } else {
        Err(Error::NonConvergence {
            best_params: result.estimates,
            best_loglik: result.loglik,
            gradient_norm: result.gradient_norm,
        })
    }
}

/// Post-hoc checks at the covariate mean.
fn diagnose(mle: &LinkedParams, ds: &CompetingRisksDataset, warnings: &mut Vec<String>) {
    const BOUNDARY_SCALE: f64 = 1e-8;
    const BOUNDARY_COEFFICIENT: f64 = 50.0;
    let xbar = ds.covariate_means();
    for j in 1..=mle.num_causes() {
        match mle.link_eval(j, &xbar) {
            Ok((a, b)) => {
                if a >= 0.0 {
                    warnings.push(format!(
                        "cause {j}: shape at the covariate mean is {a:.6} >= 0, no cure fraction there"
                    ));
                }
                if b < BOUNDARY_SCALE {
                    warnings.push(format!(
                        "cause {j}: scale at the covariate mean is {b:e}, estimate is at the parameter boundary"
                    ));
                }
            }
            Err(e) => warnings.push(format!("cause {j}: {e}")),
        }
    }
    if mle.to_vector().iter().any(|c| c.abs() > BOUNDARY_COEFFICIENT) {
        warnings.push(format!(
            "a coefficient exceeds {BOUNDARY_COEFFICIENT} in magnitude, estimate is at the parameter boundary"
        ));
    }
}

/// Whether the fit carries a boundary warning.
pub fn at_boundary(result: &FitResult) -> bool {
    result.warnings.iter().any(|w| w.contains("parameter boundary"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::IntervalObservation;

    fn small_dataset() -> CompetingRisksDataset {
        let mut obs = Vec::new();
        for i in 0..60 {
            let x = (i % 2) as f64;
            let base = 0.25 + 0.05 * (i % 7) as f64;
            match i % 5 {
                0 | 1 => obs.push(IntervalObservation::censored(2.0 + base, vec![x])),
                2 | 3 => obs.push(IntervalObservation::event(base, base + 0.5, 1, vec![x])),
                _ => obs.push(IntervalObservation::event(base * 2.0, base * 2.0 + 0.4, 2, vec![x])),
            }
        }
        CompetingRisksDataset::new(obs, 2, 1)
    }

    #[test]
    fn config_validation() {
        let lp = LinkedParams::intercepts_only(Family::Gompertz, &[(-0.5, 0.0)], 0);
        let mut cfg = FitConfig::new(lp);
        assert!(cfg.validate().is_ok());
        cfg.multistart_count = 0;
        assert!(cfg.validate().is_err());
        cfg.multistart_count = 1;
        cfg.gradient_tolerance = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn start_points_are_seeded() {
        let lp = LinkedParams::intercepts_only(Family::Gompertz, &[(-0.5, 0.0)], 0);
        let cfg = FitConfig::new(lp);
        let a = cfg.start_points();
        assert_eq!(a, cfg.start_points());
        assert_eq!(a.len(), 5);
        assert_eq!(a[0], vec![-0.5, 0.0]);
        assert_ne!(a[1], a[2]);
    }

    #[test]
    fn fits_small_dataset() {
        let ds = small_dataset();
        for family in [Family::Gompertz, Family::InverseGaussian] {
            let lp = LinkedParams::intercepts_only(family, &[(-0.5, -0.5), (-0.5, -1.5)], 1);
            let cfg = FitConfig::new(lp);
            let res = fit_mle(&ds, &cfg).unwrap();
            assert!(res.converged);
            for s in res.start_logliks.iter().flatten() {
                assert!(res.loglik >= *s);
            }
            let c95 = res.intervals_at(0.05).unwrap();
            let c90 = res.intervals_at(0.10).unwrap();
            for i in 0..res.num_params {
                let (a, b) = (c95.intervals[i].unwrap(), c90.intervals[i].unwrap());
                assert!(a.contains(res.estimates[i]));
                assert!(a.lower <= b.lower && b.upper <= a.upper);
                for j in 0..res.num_params {
                    assert_eq!(res.covariance[i][j], res.covariance[j][i]);
                }
            }
            assert_eq!(res.num_params, 8);
            assert_eq!(res.information_criteria.aic, -2.0 * res.loglik + 16.0);
        }
    }

    #[test]
    fn bad_start() {
        let ds = small_dataset();
        let lp = LinkedParams::intercepts_only(Family::Gompertz, &[(-0.5, 900.0), (-0.5, 0.0)], 1);
        assert_eq!(fit(&ds, &FitConfig::new(lp)).unwrap_err(), Error::BadStart);
    }

    #[test]
    fn all_censored_is_not_silent() {
        let obs = (0..40)
            .map(|i| IntervalObservation::censored(0.5 + 0.1 * i as f64, vec![(i % 2) as f64]))
            .collect();
        let ds = CompetingRisksDataset::new(obs, 2, 1);
        let lp = LinkedParams::intercepts_only(Family::Gompertz, &[(-0.5, -1.0), (-0.5, -1.0)], 1);
        let res = fit(&ds, &FitConfig::new(lp)).unwrap();
        assert!(!res.converged || at_boundary(&res), "{:?}", res.warnings);
    }
}
