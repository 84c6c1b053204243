//! Monte Carlo estimators and the exact small-instance suite.
//!
//! Every Monte Carlo estimator takes a master seed; replica `r` draws from
//! its own stream (see [`crate::seeding`]) and reductions run in replica
//! order.

mod exact;
mod mc;
mod suite;
mod window;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use exact::{
    bks_statistic, check_influence_upper_bound, check_margulis_russo, check_osss, check_schramm_steif,
    exact_function_table, exact_influence, query_profile, FunctionTable, QueryProfile, TABLE_LIMIT,
};
pub use mc::{
    conditional_variance, crossing_probability, large_cell_probability, max_color_revealment_samples, max_revealment_samples, noise_correlation,
    one_arm_probability, revealment_tail, srs_disagreement, OneArmGeometry,
};
pub use suite::{exact_suite, random_positions, validate_sweep, InstanceReport, SuiteParams, ValidationReport};
pub use window::{isotonic_fit, threshold_window, WindowEstimate};

/// Normal quantile for two-sided 95% intervals.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Tolerance used when deciding whether a checked relation holds.
pub const RELATION_TOL: f64 = 1e-9;

/// Sample mean with its standard error and the inputs that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub reps: usize,
    pub seed: u64,
    pub params: Vec<(String, String)>,
}

impl MCEstimate {
    /// `std_error` is the sample standard deviation over `√reps`.
    pub fn from_samples(samples: &[f64], seed: u64, params: Vec<(String, String)>) -> Result<Self> {
        let reps = samples.len();
        if reps < 2 {
            return Err(Error::InvalidParameter(format!("reps must be >= 2, got {reps}")));
        }
        let r = reps as f64;
        let mean = samples.iter().sum::<f64>() / r;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0);
        Ok(MCEstimate { mean, std_error: (var / r).sqrt(), reps, seed, params })
    }

    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - Z95 * self.std_error, self.mean + Z95 * self.std_error)
    }

    pub fn param(&self, key: &str) -> Option<&str> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

pub(crate) fn params(items: &[(&str, String)]) -> Vec<(String, String)> {
    items.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

pub(crate) fn rect_param(r: &crate::geometry::Rect) -> String {
    format!("{},{},{},{}", r.a, r.b, r.c, r.d)
}

pub(crate) fn check_reps(reps: usize) -> Result<()> {
    if reps < 2 {
        Err(Error::InvalidParameter(format!("reps must be >= 2, got {reps}")))
    } else {
        Ok(())
    }
}

/// Perturbation producing the second configuration of a correlated pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    /// Thin by `1 − ε` and sprinkle at intensity `εn`.
    EpsNoise,
    /// Resample each color with probability `ε`.
    Color,
    /// Move each point to a fresh location with probability `ε`.
    Position,
    /// Two independent `1/k`-thinnings of one dense sample, `k = 1/(1 − ε)`.
    ThinCouple,
}

impl NoiseKind {
    pub const ALL: [NoiseKind; 4] = [NoiseKind::EpsNoise, NoiseKind::Color, NoiseKind::Position, NoiseKind::ThinCouple];

    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::EpsNoise => "eps_noise",
            NoiseKind::Color => "color",
            NoiseKind::Position => "position",
            NoiseKind::ThinCouple => "thin_couple",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        NoiseKind::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown noise kind {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `lhs ≤ rhs`
    Le,
    /// `lhs = rhs`
    Eq,
}

/// Outcome of checking `lhs ≤ rhs` or `lhs = rhs`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `rhs − lhs`
    pub slack: f64,
    pub relation: Relation,
}

impl InequalityReport {
    pub fn le(lhs: f64, rhs: f64) -> Self {
        InequalityReport { lhs, rhs, holds: lhs <= rhs + RELATION_TOL, slack: rhs - lhs, relation: Relation::Le }
    }

    pub fn eq(lhs: f64, rhs: f64) -> Self {
        InequalityReport {
            lhs,
            rhs,
            holds: (lhs - rhs).abs() <= RELATION_TOL,
            slack: rhs - lhs,
            relation: Relation::Eq,
        }
    }
}

#[cfg(test)]
mod tests;
