//! Defective survival families and the covariate links that drive them.
//!
//! Each cause `j` has shape `a_j(x) = (1, x) . gamma_j` (identity link) and scale
//! `b_j(x) = exp((1, x) . beta_j)` (log link). A family is defective, and carries a
//! cured sub-population, when its shape is negative.

pub mod gompertz;
pub mod inverse_gaussian;
pub mod normal;

pub use gompertz::GompertzParams;
pub use inverse_gaussian::InverseGaussianParams;
pub use normal::{std_normal_cdf, std_normal_quantile};

use crate::data::linear_predictor;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// Survival behaviour shared by both defective families.
pub trait DefectiveSurvival {
    fn shape(&self) -> f64;

    fn is_defective(&self) -> bool {
        self.shape() < 0.0
    }

    fn survival(&self, t: f64) -> f64;

    fn log_survival(&self, t: f64) -> f64;

    /// `S(u) - S(v)` for `u < v`; `v` may be infinite.
    fn interval_probability(&self, u: f64, v: f64) -> f64;

    fn log_interval_probability(&self, u: f64, v: f64) -> f64;

    /// `lim_{t -> inf} S(t)`, defined only for a negative shape.
    fn cure(&self) -> Result<f64>;

    /// Time `t` with `F(t) = u (1 - cure)`: a draw from the distribution of the
    /// susceptible sub-population when `u ~ U(0, 1)`.
    fn conditional_quantile(&self, u: f64) -> Result<f64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "gompertz")]
    Gompertz,
    #[serde(rename = "inverse-gaussian")]
    InverseGaussian,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::Gompertz => "gompertz",
            Family::InverseGaussian => "inverse-gaussian",
        }
    }

    /// Builds the cause distribution for shape `a` and scale `b`.
    pub fn distribution(&self, shape: f64, scale: f64) -> Result<CauseDistribution> {
        Ok(match self {
            Family::Gompertz => CauseDistribution::Gompertz(GompertzParams::new(shape, scale)?),
            Family::InverseGaussian => {
                CauseDistribution::InverseGaussian(InverseGaussianParams::new(shape, scale)?)
            }
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gompertz" => Ok(Family::Gompertz),
            "inverse-gaussian" | "inverse_gaussian" | "ig" => Ok(Family::InverseGaussian),
            other => Err(Error::Config(format!("unknown family '{other}'"))),
        }
    }
}

/// A single cause's distribution, either family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CauseDistribution {
    Gompertz(GompertzParams),
    InverseGaussian(InverseGaussianParams),
}

impl DefectiveSurvival for CauseDistribution {
    fn shape(&self) -> f64 {
        match self {
            Self::Gompertz(d) => d.shape(),
            Self::InverseGaussian(d) => d.shape(),
        }
    }
    fn survival(&self, t: f64) -> f64 {
        match self {
            Self::Gompertz(d) => d.survival(t),
            Self::InverseGaussian(d) => d.survival(t),
        }
    }
    fn log_survival(&self, t: f64) -> f64 {
        match self {
            Self::Gompertz(d) => d.log_survival(t),
            Self::InverseGaussian(d) => d.log_survival(t),
        }
    }
    fn interval_probability(&self, u: f64, v: f64) -> f64 {
        match self {
            Self::Gompertz(d) => d.interval_probability(u, v),
            Self::InverseGaussian(d) => d.interval_probability(u, v),
        }
    }
    fn log_interval_probability(&self, u: f64, v: f64) -> f64 {
        match self {
            Self::Gompertz(d) => d.log_interval_probability(u, v),
            Self::InverseGaussian(d) => d.log_interval_probability(u, v),
        }
    }
    fn cure(&self) -> Result<f64> {
        match self {
            Self::Gompertz(d) => d.cure(),
            Self::InverseGaussian(d) => d.cure(),
        }
    }
    fn conditional_quantile(&self, u: f64) -> Result<f64> {
        match self {
            Self::Gompertz(d) => d.conditional_quantile(u),
            Self::InverseGaussian(d) => d.conditional_quantile(u),
        }
    }
}

/// Regression coefficients of one cause, each of length `p + 1` (intercept first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseCoefficients {
    /// Shape coefficients (identity link).
    pub gamma: Vec<f64>,
    /// Scale coefficients (log link).
    pub beta: Vec<f64>,
}

/// Per-cause regression coefficients for one family.
///
/// The flat parameter vector is packed as `(gamma_1, beta_1, gamma_2, beta_2, ...)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedParams {
    pub family: Family,
    pub causes: Vec<CauseCoefficients>,
}

impl LinkedParams {
    pub fn new(family: Family, causes: Vec<CauseCoefficients>) -> Result<Self> {
        let lp = Self { family, causes };
        lp.check()?;
        Ok(lp)
    }

    /// Builds parameters from `(gamma_j, beta_j)` pairs.
    pub fn from_pairs(family: Family, pairs: &[(&[f64], &[f64])]) -> Result<Self> {
        Self::new(
            family,
            pairs
                .iter()
                .map(|(g, b)| CauseCoefficients {
                    gamma: g.to_vec(),
                    beta: b.to_vec(),
                })
                .collect(),
        )
    }

    /// All coefficients zero except the intercepts.
    pub fn intercepts_only(family: Family, intercepts: &[(f64, f64)], num_covariates: usize) -> Self {
        let causes = intercepts
            .iter()
            .map(|&(g0, b0)| {
                let mut gamma = vec![0.0; num_covariates + 1];
                let mut beta = vec![0.0; num_covariates + 1];
                gamma[0] = g0;
                beta[0] = b0;
                CauseCoefficients { gamma, beta }
            })
            .collect();
        Self { family, causes }
    }

    fn check(&self) -> Result<()> {
        let width = self
            .causes
            .first()
            .map(|c| c.gamma.len())
            .ok_or_else(|| Error::Config("at least one cause is required".into()))?;
        if width == 0 {
            return Err(Error::Config("coefficient vectors must include the intercept".into()));
        }
        for (j, c) in self.causes.iter().enumerate() {
            if c.gamma.len() != width || c.beta.len() != width {
                return Err(Error::Config(format!(
                    "cause {} coefficient lengths ({}, {}) differ from {width}",
                    j + 1,
                    c.gamma.len(),
                    c.beta.len()
                )));
            }
        }
        Ok(())
    }

    pub fn num_causes(&self) -> usize {
        self.causes.len()
    }

    /// `p`, the number of covariates excluding the intercept.
    pub fn num_covariates(&self) -> usize {
        self.causes[0].gamma.len() - 1
    }

    /// Total parameter count `2k(p + 1)`.
    pub fn num_params(&self) -> usize {
        2 * self.num_causes() * (self.num_covariates() + 1)
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.num_params());
        for c in &self.causes {
            v.extend_from_slice(&c.gamma);
            v.extend_from_slice(&c.beta);
        }
        v
    }

    pub fn from_vector(family: Family, num_causes: usize, num_covariates: usize, values: &[f64]) -> Result<Self> {
        let width = num_covariates + 1;
        if values.len() != 2 * num_causes * width {
            return Err(Error::Config(format!(
                "parameter vector has length {}, expected {}",
                values.len(),
                2 * num_causes * width
            )));
        }
        let causes = values
            .chunks(2 * width)
            .map(|chunk| CauseCoefficients {
                gamma: chunk[..width].to_vec(),
                beta: chunk[width..].to_vec(),
            })
            .collect();
        Ok(Self { family, causes })
    }

    /// Same layout, new values.
    pub fn with_vector(&self, values: &[f64]) -> Result<Self> {
        Self::from_vector(self.family, self.num_causes(), self.num_covariates(), values)
    }

    /// Parameter labels in packing order, e.g. `gamma_0_1` for the cause-1 shape intercept.
    pub fn parameter_names(&self) -> Vec<String> {
        let width = self.num_covariates() + 1;
        let mut names = Vec::with_capacity(self.num_params());
        for j in 1..=self.num_causes() {
            for link in ["gamma", "beta"] {
                for i in 0..width {
                    names.push(format!("{link}_{i}_{j}"));
                }
            }
        }
        names
    }

    /// Shape and scale of cause `j` (1-based) at covariates `x`.
    pub fn link_eval(&self, cause: usize, covariates: &[f64]) -> Result<(f64, f64)> {
        if cause == 0 || cause > self.num_causes() {
            return Err(Error::Config(format!(
                "cause {cause} outside 1..={}",
                self.num_causes()
            )));
        }
        if covariates.len() != self.num_covariates() {
            return Err(Error::Config(format!(
                "covariate vector has length {}, expected {}",
                covariates.len(),
                self.num_covariates()
            )));
        }
        let c = &self.causes[cause - 1];
        let shape = linear_predictor(&c.gamma, covariates);
        let eta = linear_predictor(&c.beta, covariates);
        let scale = eta.exp();
        if !shape.is_finite() {
            return Err(Error::NonFiniteParameter { cause, linear_predictor: shape });
        }
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::NonFiniteParameter { cause, linear_predictor: eta });
        }
        Ok((shape, scale))
    }

    /// Cause `j`'s distribution at covariates `x`.
    pub fn distribution(&self, cause: usize, covariates: &[f64]) -> Result<CauseDistribution> {
        let (a, b) = self.link_eval(cause, covariates)?;
        self.family.distribution(a, b)
    }

    /// Overall survival `prod_j S_j(t; x)`.
    pub fn overall_survival(&self, t: f64, covariates: &[f64]) -> Result<f64> {
        let mut s = 1.0;
        for j in 1..=self.num_causes() {
            s *= self.distribution(j, covariates)?.survival(t);
        }
        Ok(s)
    }
}
