//! Command-line front end: `fit`, `simulate` and `curves`.
//!
//! Exit codes: 0 on success, 1 on input or configuration errors, 2 when the
//! optimizer did not converge (the report is still written).

use crate::data::CompetingRisksDataset;
use crate::distributions::{Family, LinkedParams};
use crate::error::{Error, Result};
use crate::estimation::{cure_fractions, fit, FitConfig, FitResult};
use crate::io::{read_dataset_path, write_curves_csv, write_monte_carlo_csv, CurvePoint, ReadOptions};
use crate::simulation::{run_monte_carlo, MonteCarloReport, SimScenario};
use crate::turnbull::{turnbull_fit, TurnbullOptions};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;

/// Number of evenly spaced points added to every curve grid.
pub const CURVE_GRID_POINTS: usize = 200;

#[derive(Debug, Parser)]
#[command(name = "defcure", version, about = "Defective cure-rate regression for interval-censored competing risks")]
pub struct Cli {
    /// Worker threads for multistart and Monte Carlo (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a defective regression model and write a JSON report.
    Fit(FitArgs),
    /// Run a Monte Carlo study from a scenario file.
    Simulate(SimulateArgs),
    /// Export Turnbull and fitted-model survival curves as CSV.
    Curves(CurvesArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Input CSV with columns left, right, cause and covariates.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Number of causes (default: largest cause in the data).
    #[arg(long)]
    pub causes: Option<usize>,
    /// Comma-separated covariate columns (default: every other column).
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,
}

impl DataArgs {
    fn load(&self) -> Result<CompetingRisksDataset> {
        read_dataset_path(
            &self.input,
            &ReadOptions {
                num_causes: self.causes,
                covariates: self.covariates.clone(),
            },
        )
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "gompertz")]
    pub family: Family,
    /// Output JSON report.
    #[arg(long)]
    pub out: PathBuf,
    /// Wald levels as alpha (0.05) or confidence (0.95), comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.10")]
    pub levels: Vec<f64>,
    /// Covariate values for cure-fraction reporting, comma-separated; repeatable.
    #[arg(long)]
    pub profile: Vec<String>,
    /// Multistart seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of optimizer starts.
    #[arg(long, default_value_t = 5)]
    pub starts: usize,
    /// Iteration cap of each optimizer run.
    #[arg(long, default_value_t = 500)]
    pub max_iterations: usize,
    /// JSON file with initial linked parameters (default: derived from the data).
    #[arg(long)]
    pub init: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file.
    #[arg(long)]
    pub scenario: PathBuf,
    /// Output CSV; a JSON summary is written next to it unless --summary is given.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Override the scenario's replication count.
    #[arg(long)]
    pub reps: Option<usize>,
    /// Override the scenario's sample size.
    #[arg(long)]
    pub n: Option<usize>,
    /// Override the scenario's master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Optimizer starts per replication.
    #[arg(long, default_value_t = 1)]
    pub starts: usize,
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.10")]
    pub levels: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct CurvesArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Fit report JSON whose estimates provide the model_S column.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Column used to split the sample.
    #[arg(long)]
    pub stratify: Option<String>,
    /// Split point for a non-binary stratification column (default: median).
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Restrict events to one cause; other causes count as censored at their left end.
    #[arg(long)]
    pub cause: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    /// Command line without the thread count, which never changes results.
    pub invocation: Vec<String>,
}

impl Provenance {
    fn from_args(args: &[String]) -> Self {
        let mut invocation = Vec::new();
        let mut skip_next = false;
        for a in args.iter().skip(1) {
            if skip_next {
                skip_next = false;
            } else if a == "--threads" {
                skip_next = true;
            } else if !a.starts_with("--threads=") {
                invocation.push(a.clone());
            }
        }
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            invocation,
        }
    }
}

/// Parses arguments (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    let provenance = Provenance::from_args(&args);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        pool = pool.num_threads(t);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start thread pool: {e}");
            return EXIT_INPUT;
        }
    };
    let outcome = pool.install(|| match &cli.command {
        Command::Fit(a) => cmd_fit(a, &provenance),
        Command::Simulate(a) => cmd_simulate(a, &provenance),
        Command::Curves(a) => cmd_curves(a),
    });
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn normalize_levels(levels: &[f64]) -> Result<Vec<f64>> {
    levels
        .iter()
        .map(|&v| {
            let alpha = if v >= 0.5 { 1.0 - v } else { v };
            if alpha > 0.0 && alpha < 1.0 {
                Ok(alpha)
            } else {
                Err(Error::Config(format!("invalid confidence level {v}")))
            }
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?);
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json(path: &Path) -> Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let m = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    })
}

/// Intercept-only start from the data: shape `-1 / median(finite right)` and a
/// scale that reproduces the share of subjects not failing from each cause.
pub fn default_start(ds: &CompetingRisksDataset, family: Family) -> LinkedParams {
    let mut rights: Vec<f64> = ds.observations.iter().map(|o| o.right).filter(|r| r.is_finite()).collect();
    let a0 = match median(&mut rights) {
        Some(m) if m > 0.0 => -1.0 / m,
        _ => -1.0,
    };
    let counts = ds.cause_counts();
    let n = ds.len().max(1) as f64;
    let intercepts: Vec<(f64, f64)> = (1..=ds.num_causes)
        .map(|j| {
            let p = (1.0 - counts[j] as f64 / n).clamp(0.01, 0.99);
            let b0 = match family {
                Family::Gompertz => a0 * p.ln(),
                Family::InverseGaussian => 2.0 * a0 / (1.0 - p).ln(),
            };
            (a0, b0.ln())
        })
        .collect();
    LinkedParams::intercepts_only(family, &intercepts, ds.num_covariates)
}

fn parse_profile(text: &str, p: usize) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("profile '{text}': '{s}' is not a number")))
        })
        .collect::<Result<Vec<f64>>>()?;
    if values.len() != p {
        return Err(Error::Config(format!("profile '{text}' has {} values, model has {p} covariates", values.len())));
    }
    Ok(values)
}

/// Covariate mean, plus both levels of every 0/1 covariate with the others at their means.
pub fn default_profiles(ds: &CompetingRisksDataset) -> Vec<Vec<f64>> {
    let mean = ds.covariate_means();
    let mut profiles = vec![mean.clone()];
    for c in 0..ds.num_covariates {
        let binary = ds.observations.iter().all(|o| o.covariates[c] == 0.0 || o.covariates[c] == 1.0);
        if binary {
            for level in [0.0, 1.0] {
                let mut x = mean.clone();
                x[c] = level;
                profiles.push(x);
            }
        }
    }
    profiles
}

#[derive(Debug, Serialize)]
struct ProfileCure {
    covariates: Vec<f64>,
    overall: Option<f64>,
    per_cause: Option<Vec<f64>>,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct FitReport<'a> {
    provenance: &'a Provenance,
    covariates: Vec<String>,
    num_causes: usize,
    cause_counts: Vec<usize>,
    initial_params: &'a LinkedParams,
    fit: &'a FitResult,
    cure_fractions: Vec<ProfileCure>,
}

fn cmd_fit(a: &FitArgs, provenance: &Provenance) -> Result<i32> {
    let ds = a.data.load()?;
    let initial = match &a.init {
        Some(path) => {
            let value = read_json(path)?;
            let params = value.get("initial_params").cloned().unwrap_or(value);
            serde_json::from_value::<LinkedParams>(params).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => default_start(&ds, a.family),
    };
    if initial.family != a.family {
        return Err(Error::Config(format!("--init is a {} model, --family is {}", initial.family, a.family)));
    }
    let mut cfg = FitConfig::new(initial);
    cfg.confidence_levels = normalize_levels(&a.levels)?;
    cfg.multistart_seed = a.seed;
    cfg.multistart_count = a.starts;
    cfg.max_iterations = a.max_iterations;
    let profiles = if a.profile.is_empty() {
        default_profiles(&ds)
    } else {
        a.profile
            .iter()
            .map(|p| parse_profile(p, ds.num_covariates))
            .collect::<Result<Vec<_>>>()?
    };
    let result = match fit(&ds, &cfg) {
        Ok(r) => r,
        Err(Error::BadStart) => {
            return Err(Error::Config(
                "the log-likelihood is not finite at the starting point; supply --init".into(),
            ))
        }
        Err(e) => return Err(e),
    };
    let cures = profiles
        .into_iter()
        .map(|x| match cure_fractions(&result.mle, &x) {
            Ok(c) => ProfileCure {
                covariates: x,
                overall: Some(c.overall),
                per_cause: Some(c.per_cause),
                error: None,
            },
            Err(e) => ProfileCure {
                covariates: x,
                overall: None,
                per_cause: None,
                error: Some(e.to_string()),
            },
        })
        .collect();
    let report = FitReport {
        provenance,
        covariates: ds.covariate_names.clone().unwrap_or_default(),
        num_causes: ds.num_causes,
        cause_counts: ds.cause_counts(),
        initial_params: &cfg.initial_params,
        fit: &result,
        cure_fractions: cures,
    };
    write_json(&a.out, &report)?;
    for w in &result.warnings {
        eprintln!("warning: {w}");
    }
    if result.converged {
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "warning: optimizer did not converge (gradient norm {:e}); report written to {}",
            result.gradient_norm,
            a.out.display()
        );
        Ok(EXIT_NONCONVERGENCE)
    }
}

#[derive(Debug, Serialize)]
struct SimulationSummary<'a> {
    provenance: &'a Provenance,
    scenario: &'a SimScenario,
    report: &'a MonteCarloReport,
}

fn cmd_simulate(a: &SimulateArgs, provenance: &Provenance) -> Result<i32> {
    let text = std::fs::read_to_string(&a.scenario).map_err(|e| Error::Io(format!("{}: {e}", a.scenario.display())))?;
    let mut sc: SimScenario =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", a.scenario.display())))?;
    if let Some(r) = a.reps {
        sc.replications = r;
    }
    if let Some(n) = a.n {
        sc.n = n;
    }
    if let Some(s) = a.seed {
        sc.seed = s;
    }
    sc.validate()?;
    let mut cfg = FitConfig::new(sc.true_params.clone());
    cfg.multistart_count = a.starts;
    cfg.multistart_seed = sc.seed;
    cfg.confidence_levels = normalize_levels(&a.levels)?;
    let report = run_monte_carlo(&sc, &cfg)?;
    let file = File::create(&a.out).map_err(|e| Error::Io(format!("{}: {e}", a.out.display())))?;
    write_monte_carlo_csv(BufWriter::new(file), &report)?;
    let summary_path = a.summary.clone().unwrap_or_else(|| a.out.with_extension("json"));
    write_json(
        &summary_path,
        &SimulationSummary {
            provenance,
            scenario: &sc,
            report: &report,
        },
    )?;
    Ok(EXIT_OK)
}

fn format_value(v: f64) -> String {
    v.to_string()
}

/// Splits observation indices by a covariate: both levels of a 0/1 column,
/// otherwise below and at-or-above the threshold (default: median).
fn strata(ds: &CompetingRisksDataset, column: &str, threshold: Option<f64>) -> Result<Vec<(String, Vec<usize>)>> {
    let names = ds.covariate_names.clone().unwrap_or_default();
    let c = names
        .iter()
        .position(|n| n == column)
        .ok_or_else(|| Error::Config(format!("stratification column '{column}' is missing")))?;
    let values: Vec<f64> = ds.observations.iter().map(|o| o.covariates[c]).collect();
    let binary = values.iter().all(|v| *v == 0.0 || *v == 1.0);
    let groups = if binary && threshold.is_none() {
        [0.0, 1.0]
            .iter()
            .map(|level| {
                let idx = (0..values.len()).filter(|&i| values[i] == *level).collect();
                (format!("{column}={}", format_value(*level)), idx)
            })
            .collect::<Vec<_>>()
    } else {
        let cut = match threshold {
            Some(t) => t,
            None => median(&mut values.clone()).unwrap_or(0.0),
        };
        vec![
            (
                format!("{column}<{}", format_value(cut)),
                (0..values.len()).filter(|&i| values[i] < cut).collect(),
            ),
            (
                format!("{column}>={}", format_value(cut)),
                (0..values.len()).filter(|&i| values[i] >= cut).collect(),
            ),
        ]
    };
    Ok(groups.into_iter().filter(|(_, idx): &(String, Vec<usize>)| !idx.is_empty()).collect())
}

/// Curve points for one stratum on the grid of its endpoints plus evenly spaced times.
pub fn stratum_curve(
    ds: &CompetingRisksDataset,
    indices: &[usize],
    label: &str,
    cause: Option<usize>,
    model: Option<&LinkedParams>,
) -> Result<Vec<CurvePoint>> {
    let intervals: Vec<(f64, f64)> = indices
        .iter()
        .map(|&i| {
            let o = &ds.observations[i];
            match cause {
                Some(j) if o.cause != j => (o.left, f64::INFINITY),
                _ => (o.left, o.right),
            }
        })
        .collect();
    let npmle = turnbull_fit(&intervals, TurnbullOptions::default())?;
    let mut grid: Vec<f64> = intervals
        .iter()
        .flat_map(|&(l, r)| [l, r])
        .filter(|t| t.is_finite())
        .collect();
    let t_max = grid.iter().copied().fold(0.0_f64, f64::max);
    grid.extend((0..CURVE_GRID_POINTS).map(|i| t_max * i as f64 / (CURVE_GRID_POINTS - 1) as f64));
    grid.push(0.0);
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut xbar = vec![0.0; ds.num_covariates];
    for &i in indices {
        for (m, x) in xbar.iter_mut().zip(&ds.observations[i].covariates) {
            *m += x;
        }
    }
    xbar.iter_mut().for_each(|m| *m /= indices.len() as f64);

    grid.into_iter()
        .map(|t| {
            let model_s = match model {
                None => None,
                Some(lp) => Some(match cause {
                    Some(j) => {
                        use crate::distributions::DefectiveSurvival;
                        lp.distribution(j, &xbar)?.survival(t)
                    }
                    None => lp.overall_survival(t, &xbar)?,
                }),
            };
            Ok(CurvePoint {
                stratum: label.to_string(),
                t,
                turnbull: npmle.survival_at(t).value,
                model: model_s,
            })
        })
        .collect()
}

fn cmd_curves(a: &CurvesArgs) -> Result<i32> {
    let ds = a.data.load()?;
    if let Some(j) = a.cause {
        if j == 0 || j > ds.num_causes {
            return Err(Error::Config(format!("--cause {j} outside 1..={}", ds.num_causes)));
        }
    }
    let model = match &a.model {
        None => None,
        Some(path) => {
            let value = read_json(path)?;
            let mle = value
                .get("fit")
                .and_then(|f| f.get("mle"))
                .cloned()
                .ok_or_else(|| Error::Config(format!("{}: no fit.mle entry", path.display())))?;
            let lp: LinkedParams =
                serde_json::from_value(mle).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            if lp.num_covariates() != ds.num_covariates || lp.num_causes() != ds.num_causes {
                return Err(Error::Config(format!(
                    "model has {} causes and {} covariates, data has {} and {}",
                    lp.num_causes(),
                    lp.num_covariates(),
                    ds.num_causes,
                    ds.num_covariates
                )));
            }
            Some(lp)
        }
    };
    let groups = match &a.stratify {
        Some(column) => strata(&ds, column, a.threshold)?,
        None => vec![("all".to_string(), (0..ds.len()).collect())],
    };
    let mut points = Vec::new();
    for (label, idx) in &groups {
        points.extend(stratum_curve(&ds, idx, label, a.cause, model.as_ref())?);
    }
    let file = File::create(&a.out).map_err(|e| Error::Io(format!("{}: {e}", a.out.display())))?;
    write_curves_csv(BufWriter::new(file), &points)?;
    Ok(EXIT_OK)
}
