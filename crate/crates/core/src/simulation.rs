//! Interval-censored competing-risks data with a cured fraction, and the Monte
//! Carlo harness measuring bias, MSE and Wald coverage of the fitted models.
//!
//! Generation of one dataset (two covariates `X1 ~ Bernoulli(0.5)`, `X2 ~ U(0, 1)`):
//!
//! 1. per subject, draw covariates and the cure indicator with
//!    `P(cured | x) = prod_j p_j(x)`;
//! 2. a susceptible subject draws its cause with probability proportional to
//!    `1 - p_j(x)`, then a latent time `T'` from that cause's susceptible
//!    distribution; a cured subject has `T' = inf`;
//! 3. once every subject is drawn, inspection times `U' ~ U(0, max finite T')`;
//!    `U' < T'` gives a right-censored row `(U', inf]` with cause 0;
//! 4. otherwise the event is located on the lattice `(0, l], (l, l + len], ...`
//!    with `len ~ U(0.2, 0.7)` and `l ~ U(0, 1)`, giving `U < T' <= V`.
//!
//! Replication `r` of a study uses the seed `splitmix64(master_seed ^ r)`.

use crate::data::{CompetingRisksDataset, IntervalObservation};
use crate::distributions::{DefectiveSurvival, Family, LinkedParams};
use crate::error::{Error, Result};
use crate::estimation::{cure_fractions, fit_mle, FitConfig, FitResult};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Share of failed replications above which a study is aborted.
pub const MAX_FAILURE_SHARE: f64 = 0.2;

fn default_interval_len_range() -> (f64, f64) {
    (0.2, 0.7)
}

fn default_tail_rate_range() -> (f64, f64) {
    (0.1, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub true_params: LinkedParams,
    pub n: usize,
    pub replications: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_interval_len_range")]
    pub interval_len_range: (f64, f64),
    /// Range of the per-replication exponential tail rate.
    #[serde(default = "default_tail_rate_range")]
    pub tail_rate_range: (f64, f64),
}

impl SimScenario {
    pub fn new(true_params: LinkedParams, n: usize, replications: usize, seed: u64) -> Self {
        Self {
            true_params,
            n,
            replications,
            seed,
            interval_len_range: default_interval_len_range(),
            tail_rate_range: default_tail_rate_range(),
        }
    }

    pub fn family(&self) -> Family {
        self.true_params.family
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("scenario n must be >= 1".into()));
        }
        if self.replications == 0 {
            return Err(Error::Config("scenario replications must be >= 1".into()));
        }
        let (lo, hi) = self.interval_len_range;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::Config(format!("interval_len_range ({lo}, {hi}) must satisfy 0 < low < high")));
        }
        let (lo, hi) = self.tail_rate_range;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!("tail_rate_range ({lo}, {hi}) must satisfy 0 < low <= high")));
        }
        if self.true_params.num_covariates() != 2 {
            return Err(Error::Config(format!(
                "the generator draws two covariates, parameters have {}",
                self.true_params.num_covariates()
            )));
        }
        Ok(())
    }
}

/// Simulation-study truth used for the Gompertz design.
pub fn gompertz_reference_params() -> LinkedParams {
    LinkedParams::from_pairs(
        Family::Gompertz,
        &[(&[-0.2, -0.4, -0.6], &[-2.0, 1.0, 1.5]), (&[-0.2, -0.5, -0.7], &[-2.0, 1.0, 2.0])],
    )
    .expect("static parameters")
}

/// Simulation-study truth used for the inverse-Gaussian design.
pub fn inverse_gaussian_reference_params() -> LinkedParams {
    LinkedParams::from_pairs(
        Family::InverseGaussian,
        &[(&[-0.1, -0.3, -0.5], &[-1.5, 1.0, 2.0]), (&[-0.2, -0.4, -0.6], &[-1.0, 1.0, 2.0])],
    )
    .expect("static parameters")
}

/// A generated dataset together with the latent quantities behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedData {
    pub dataset: CompetingRisksDataset,
    /// `T'` per subject, `+inf` for cured subjects.
    pub latent_times: Vec<f64>,
    /// Cause drawn for susceptible subjects, 0 for cured ones.
    pub latent_causes: Vec<usize>,
    pub inspection_times: Vec<f64>,
    pub tail_rate: f64,
}

pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn replication_seed(master: u64, replication: usize) -> u64 {
    splitmix64(master ^ replication as u64)
}

/// Draw from `U(0, 1)` excluding zero.
fn open_unit<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// Lattice cell `(U, V]` with `U < t <= V` for the grid `0, l, l + len, l + 2 len, ...`.
pub fn lattice_cell(t: f64, first: f64, width: f64) -> (f64, f64) {
    if t <= first {
        return (0.0, first);
    }
    let mut m = ((t - first) / width).ceil().max(1.0);
    // guard against rounding at cell boundaries
    while first + (m - 1.0) * width >= t && m > 1.0 {
        m -= 1.0;
    }
    while first + m * width < t {
        m += 1.0;
    }
    (first + (m - 1.0) * width, first + m * width)
}

pub fn generate_with_latents(sc: &SimScenario, seed: u64) -> Result<GeneratedData> {
    sc.validate()?;
    let lp = &sc.true_params;
    let k = lp.num_causes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tail_rate = rng.random_range(sc.tail_rate_range.0..=sc.tail_rate_range.1);

    let mut covariates = Vec::with_capacity(sc.n);
    let mut latent_times = Vec::with_capacity(sc.n);
    let mut latent_causes = Vec::with_capacity(sc.n);
    for _ in 0..sc.n {
        let x1 = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let x2: f64 = rng.random();
        let x = vec![x1, x2];
        let cures = cure_fractions(lp, &x).map_err(|e| {
            Error::Generation(format!("parameters are not defective at x = ({x1}, {x2}): {e}"))
        })?;
        let susceptible = 1.0 - cures.overall;
        let u_cure: f64 = rng.random();
        if u_cure >= susceptible {
            latent_times.push(f64::INFINITY);
            latent_causes.push(0);
        } else {
            let weights: Vec<f64> = cures.per_cause.iter().map(|p| 1.0 - p).collect();
            let total: f64 = weights.iter().sum();
            let mut pick = rng.random::<f64>() * total;
            let mut cause = k;
            for (j, w) in weights.iter().enumerate() {
                if pick < *w {
                    cause = j + 1;
                    break;
                }
                pick -= w;
            }
            let u = open_unit(&mut rng);
            let t = lp.distribution(cause, &x)?.conditional_quantile(u)?;
            latent_times.push(t);
            latent_causes.push(cause);
        }
        covariates.push(x);
    }

    let max_finite = latent_times.iter().copied().filter(|t| t.is_finite()).fold(0.0_f64, f64::max);
    // nobody susceptible: inspection times on the unit interval
    let horizon = if max_finite > 0.0 { max_finite } else { 1.0 };
    let (len_lo, len_hi) = sc.interval_len_range;
    let mut observations = Vec::with_capacity(sc.n);
    let mut inspection_times = Vec::with_capacity(sc.n);
    for (i, x) in covariates.into_iter().enumerate() {
        let inspect = rng.random::<f64>() * horizon;
        inspection_times.push(inspect);
        let t = latent_times[i];
        if inspect < t {
            observations.push(IntervalObservation::censored(inspect, x));
        } else {
            let width = rng.random_range(len_lo..len_hi);
            let first = open_unit(&mut rng);
            let (left, right) = lattice_cell(t, first, width);
            observations.push(IntervalObservation::event(left, right, latent_causes[i], x));
        }
    }
    let dataset = CompetingRisksDataset::new(observations, k, 2)
        .with_covariate_names(vec!["x1".to_string(), "x2".to_string()]);
    Ok(GeneratedData {
        dataset,
        latent_times,
        latent_causes,
        inspection_times,
        tail_rate,
    })
}

pub fn generate_dataset(sc: &SimScenario, seed: u64) -> Result<CompetingRisksDataset> {
    generate_with_latents(sc, seed).map(|g| g.dataset)
}

/// A stratum of the cure-rate report: `x1` group crossed with a below/above-median `x2` group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StratumPoint {
    pub label: &'static str,
    pub x1: f64,
    pub x2: f64,
}

/// `p13`, `p14`, `p23`, `p24` evaluated at the midpoints of the `x2` half-ranges.
pub const STRATUM_POINTS: [StratumPoint; 4] = [
    StratumPoint { label: "p13", x1: 0.0, x2: 0.25 },
    StratumPoint { label: "p14", x1: 0.0, x2: 0.75 },
    StratumPoint { label: "p23", x1: 1.0, x2: 0.25 },
    StratumPoint { label: "p24", x1: 1.0, x2: 0.75 },
];

pub fn stratum_cure_rates(lp: &LinkedParams) -> Result<[f64; 4]> {
    let mut out = [0.0; 4];
    for (slot, point) in out.iter_mut().zip(STRATUM_POINTS.iter()) {
        *slot = cure_fractions(lp, &[point.x1, point.x2])
            .map_err(|e| Error::NotDefective {
                shape: match e {
                    Error::NotDefective { shape, .. } => shape,
                    _ => f64::NAN,
                },
                cause: None,
            })
            .map_err(|e| Error::Generation(format!("{} at (x1 = {}, x2 = {}): {e}", point.label, point.x1, point.x2)))?
            .overall;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSummary {
    pub name: String,
    pub truth: f64,
    /// Mean estimate minus truth.
    pub bias: f64,
    /// `|bias|`.
    pub abs_bias: f64,
    pub mse: f64,
    pub cp90: f64,
    pub cp95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CureRateSummary {
    pub name: String,
    pub x1: f64,
    pub x2: f64,
    pub truth: f64,
    pub bias: f64,
    pub abs_bias: f64,
    pub mse: f64,
    /// Replications whose fit was defective at this point.
    pub replications_used: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub family: Family,
    pub n: usize,
    pub replications: usize,
    pub successful: usize,
    pub failures: usize,
    pub master_seed: u64,
    pub parameters: Vec<ParameterSummary>,
    pub cure_rates: Vec<CureRateSummary>,
}

impl MonteCarloReport {
    pub fn mean_abs_bias(&self) -> f64 {
        self.parameters.iter().map(|p| p.abs_bias).sum::<f64>() / self.parameters.len() as f64
    }
}

/// What one replication contributes to the report.
#[derive(Debug, Clone)]
pub struct ReplicationOutcome {
    pub estimates: Vec<f64>,
    pub covered90: Vec<bool>,
    pub covered95: Vec<bool>,
    pub cure_rates: [Option<f64>; 4],
}

fn covered(fit: &FitResult, alpha: f64, truth: &[f64]) -> Vec<bool> {
    let set = fit.intervals_at(alpha).expect("levels 0.05 and 0.10 are always requested");
    set.intervals
        .iter()
        .zip(truth)
        .map(|(ci, t)| ci.map(|c| c.contains(*t)).unwrap_or(false))
        .collect()
}

/// Generates and fits replication `r`; `Err` marks a failed replication.
pub fn run_replication(sc: &SimScenario, cfg: &FitConfig, replication: usize) -> Result<ReplicationOutcome> {
    let ds = generate_dataset(sc, replication_seed(sc.seed, replication))?;
    let fit = fit_mle(&ds, cfg)?;
    let truth = sc.true_params.to_vector();
    let mut cure_rates = [None; 4];
    for (slot, point) in cure_rates.iter_mut().zip(STRATUM_POINTS.iter()) {
        *slot = cure_fractions(&fit.mle, &[point.x1, point.x2]).ok().map(|c| c.overall);
    }
    Ok(ReplicationOutcome {
        covered90: covered(&fit, 0.10, &truth),
        covered95: covered(&fit, 0.05, &truth),
        estimates: fit.estimates,
        cure_rates,
    })
}

/// Aggregates replication outcomes; failed replications are passed as `None`.
pub fn summarize(sc: &SimScenario, outcomes: &[Option<ReplicationOutcome>]) -> Result<MonteCarloReport> {
    let truth = sc.true_params.to_vector();
    let names = sc.true_params.parameter_names();
    let ok: Vec<&ReplicationOutcome> = outcomes.iter().flatten().collect();
    let failures = outcomes.len() - ok.len();
    if failures as f64 > MAX_FAILURE_SHARE * outcomes.len() as f64 || ok.is_empty() {
        return Err(Error::AbortedStudy {
            failures,
            replications: outcomes.len(),
        });
    }
    let m = ok.len() as f64;
    let parameters = (0..truth.len())
        .map(|i| {
            let errors: Vec<f64> = ok.iter().map(|o| o.estimates[i] - truth[i]).collect();
            let bias = errors.iter().sum::<f64>() / m;
            ParameterSummary {
                name: names[i].clone(),
                truth: truth[i],
                bias,
                abs_bias: bias.abs(),
                mse: errors.iter().map(|e| e * e).sum::<f64>() / m,
                cp90: ok.iter().filter(|o| o.covered90[i]).count() as f64 / m,
                cp95: ok.iter().filter(|o| o.covered95[i]).count() as f64 / m,
            }
        })
        .collect();
    let true_cures = stratum_cure_rates(&sc.true_params)?;
    let cure_rates = STRATUM_POINTS
        .iter()
        .enumerate()
        .map(|(s, point)| {
            let errors: Vec<f64> = ok.iter().filter_map(|o| o.cure_rates[s]).map(|p| p - true_cures[s]).collect();
            let used = errors.len();
            let (bias, mse) = if used == 0 {
                (f64::NAN, f64::NAN)
            } else {
                (
                    errors.iter().sum::<f64>() / used as f64,
                    errors.iter().map(|e| e * e).sum::<f64>() / used as f64,
                )
            };
            CureRateSummary {
                name: point.label.to_string(),
                x1: point.x1,
                x2: point.x2,
                truth: true_cures[s],
                bias,
                abs_bias: bias.abs(),
                mse,
                replications_used: used,
            }
        })
        .collect();
    Ok(MonteCarloReport {
        family: sc.family(),
        n: sc.n,
        replications: outcomes.len(),
        successful: ok.len(),
        failures,
        master_seed: sc.seed,
        parameters,
        cure_rates,
    })
}

/// Runs every replication (in parallel on the current rayon pool) and aggregates them in order.
pub fn run_monte_carlo(sc: &SimScenario, cfg: &FitConfig) -> Result<MonteCarloReport> {
    sc.validate()?;
    stratum_cure_rates(&sc.true_params)?;
    let mut cfg = cfg.clone();
    for alpha in [0.05, 0.10] {
        if !cfg.confidence_levels.iter().any(|a| (a - alpha).abs() < 1e-12) {
            cfg.confidence_levels.push(alpha);
        }
    }
    let outcomes: Vec<Option<ReplicationOutcome>> = (0..sc.replications)
        .into_par_iter()
        .map(|r| run_replication(sc, &cfg, r).ok())
        .collect();
    summarize(sc, &outcomes)
}
