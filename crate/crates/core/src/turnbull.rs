//! Turnbull NPMLE of a survival curve from interval-censored data.
//!
//! Mass can only sit on the innermost intervals: `(q, p]` where `q` is some left
//! endpoint, `p` some right endpoint, and no other endpoint lies strictly between.
//! The masses are found by the self-consistency (EM) iteration
//! `mu_l <- (1/n) sum_i alpha_il mu_l / sum_k alpha_ik mu_k`.
//!
//! Each observation covers a contiguous run of innermost intervals, so one sweep
//! costs `O(n + m)` via prefix sums.

use crate::error::{Error, Result};
use serde::Serialize;

#[derive(Debug, Clone, Copy)]
pub struct TurnbullOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for TurnbullOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurnbullEstimate {
    /// Finite innermost intervals `(q, p]`, ordered and disjoint. Zero-mass intervals are kept.
    pub support_intervals: Vec<(f64, f64)>,
    pub masses: Vec<f64>,
    /// Mass on `(q, +inf)`: subjects still event-free past the last finite endpoint.
    pub residual_mass: f64,
    /// Left end of the unbounded innermost interval, when there is one.
    pub residual_start: Option<f64>,
    pub iterations: usize,
    /// Largest mass update in the last iteration.
    pub final_change: f64,
    pub converged: bool,
    /// Observed-data log-likelihood before each update and at the returned masses.
    pub log_likelihood_trace: Vec<f64>,
}

/// `S(t)` together with whether `t` falls strictly inside a support interval carrying mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurvivalPoint {
    pub value: f64,
    pub ambiguous: bool,
}

/// Innermost intervals of a set of `(L, R]` intervals; `R` may be `+inf`.
pub fn innermost_intervals(intervals: &[(f64, f64)]) -> Vec<(f64, f64)> {
    // right endpoints sort before left endpoints at ties: (.., t] contains t, (t, ..] does not
    let mut ends: Vec<(f64, u8)> = intervals
        .iter()
        .flat_map(|&(l, r)| [(l, 1u8), (r, 0u8)])
        .collect();
    ends.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    ends.windows(2)
        .filter(|w| w[0].1 == 1 && w[1].1 == 0)
        .map(|w| (w[0].0, w[1].0))
        .collect()
}

fn validate(intervals: &[(f64, f64)]) -> Result<()> {
    if intervals.is_empty() {
        return Err(Error::Domain("Turnbull estimator needs at least one observation".into()));
    }
    for (i, &(l, r)) in intervals.iter().enumerate() {
        if !(l < r) || l.is_nan() || l.is_infinite() {
            return Err(Error::Domain(format!("observation {i}: interval ({l}, {r}] is empty or invalid")));
        }
    }
    Ok(())
}

pub fn turnbull_fit(intervals: &[(f64, f64)], opts: TurnbullOptions) -> Result<TurnbullEstimate> {
    validate(intervals)?;
    let inner = innermost_intervals(intervals);
    let m = inner.len();
    let n = intervals.len() as f64;

    // index range [start, end) of innermost intervals inside each observation
    let ranges: Vec<(usize, usize)> = intervals
        .iter()
        .map(|&(l, r)| {
            let start = inner.partition_point(|&(q, _)| q < l);
            let end = inner.partition_point(|&(_, p)| p <= r);
            (start, end.max(start))
        })
        .collect();
    debug_assert!(ranges.iter().all(|(s, e)| e > s));

    let mut mu = vec![1.0 / m as f64; m];
    let mut prefix = vec![0.0; m + 1];
    let mut weight = vec![0.0; m + 1];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut final_change = f64::INFINITY;

    let fill_prefix = |mu: &[f64], prefix: &mut [f64]| {
        for l in 0..m {
            prefix[l + 1] = prefix[l] + mu[l];
        }
    };

    while iterations < opts.max_iterations {
        iterations += 1;
        fill_prefix(&mu, &mut prefix);
        weight.iter_mut().for_each(|w| *w = 0.0);
        let mut loglik = 0.0;
        for &(s, e) in &ranges {
            let denom = prefix[e] - prefix[s];
            loglik += denom.ln();
            let inv = 1.0 / denom;
            weight[s] += inv;
            weight[e] -= inv;
        }
        trace.push(loglik);
        let mut running = 0.0;
        let mut change: f64 = 0.0;
        for l in 0..m {
            running += weight[l];
            let updated = mu[l] * running / n;
            change = change.max((updated - mu[l]).abs());
            mu[l] = updated;
        }
        // renormalize against drift
        let total: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|x| *x /= total);
        final_change = change;
        if change < opts.tolerance {
            break;
        }
    }
    fill_prefix(&mu, &mut prefix);
    trace.push(ranges.iter().map(|&(s, e)| (prefix[e] - prefix[s]).ln()).sum());

    let (support_intervals, masses, residual_mass, residual_start) = match inner.last() {
        Some(&(q, p)) if p.is_infinite() => (inner[..m - 1].to_vec(), mu[..m - 1].to_vec(), mu[m - 1], Some(q)),
        _ => (inner, mu, 0.0, None),
    };
    Ok(TurnbullEstimate {
        support_intervals,
        masses,
        residual_mass,
        residual_start,
        iterations,
        final_change,
        converged: final_change < opts.tolerance,
        log_likelihood_trace: trace,
    })
}

impl TurnbullEstimate {
    /// Total mass on finite support intervals.
    pub fn finite_mass(&self) -> f64 {
        self.masses.iter().sum()
    }

    /// Survival beyond every finite support interval.
    pub fn plateau(&self) -> f64 {
        (1.0 - self.finite_mass()).max(0.0)
    }

    pub fn survival_at(&self, t: f64) -> SurvivalPoint {
        let mass_up_to = |x: f64| -> f64 {
            self.support_intervals
                .iter()
                .zip(&self.masses)
                .filter(|((_, p), _)| *p <= x)
                .map(|(_, m)| m)
                .sum()
        };
        let inside = self
            .support_intervals
            .iter()
            .zip(&self.masses)
            .find(|((q, p), m)| *q < t && t < *p && **m > 0.0);
        let (value, ambiguous) = match inside {
            Some(((_, p), _)) => (1.0 - mass_up_to(*p), true),
            None => (1.0 - mass_up_to(t), false),
        };
        SurvivalPoint {
            value: value.clamp(0.0, 1.0),
            ambiguous,
        }
    }
}
