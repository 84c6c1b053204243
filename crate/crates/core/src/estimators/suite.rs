use rand::Rng;
use serde::{Deserialize, Serialize};

use super::exact::{
    bks_statistic, check_influence_upper_bound, check_margulis_russo, check_osss, check_schramm_steif,
    exact_function_table, query_profile,
};
use super::InequalityReport;
use crate::error::{check_prob, Error, Result};
use crate::geometry::{
    crossing, raster_crossing_at, raster_crossing_oracle, sample_configuration, Color, ColoredPoint, Configuration,
    Point, Rect, Tessellation, ORACLE_CAP, ORACLE_START,
};
use crate::seeding::map_replicas;

/// Settings of the exact inequality suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteParams {
    pub instances: usize,
    pub min_points: usize,
    pub max_points: usize,
    pub p: f64,
    /// Line positions sampled per instance.
    pub coins: usize,
    pub eps: Vec<f64>,
    pub m_max: u32,
    pub rect: Rect,
    pub seed: u64,
}

impl Default for SuiteParams {
    fn default() -> Self {
        SuiteParams {
            instances: 100,
            min_points: 2,
            max_points: 12,
            p: 0.5,
            coins: 16,
            eps: vec![0.1, 0.3],
            m_max: 10,
            rect: Rect::unit(),
            seed: 0,
        }
    }
}

/// Every check of the suite on one random instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceReport {
    pub bits: usize,
    pub margulis_russo: InequalityReport,
    pub osss: InequalityReport,
    /// One report per `(eps, m)`, eps-major.
    pub schramm_steif: Vec<InequalityReport>,
    pub influence_bounds: [InequalityReport; 2],
    pub bks: f64,
    pub delta_max: f64,
}

impl InstanceReport {
    pub fn all_hold(&self) -> bool {
        self.margulis_russo.holds
            && self.osss.holds
            && self.schramm_steif.iter().all(|r| r.holds)
            && self.influence_bounds.iter().all(|r| r.holds)
    }
}

/// Uniform positions, all red, at intensity `count`.
pub fn random_positions<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Configuration {
    let points = (0..count)
        .map(|_| ColoredPoint { location: Point::new(rng.random(), rng.random()), color: Color::Red })
        .collect();
    Configuration::from_points(points, count as f64, 0.5)
}

/// Runs the exact checks on `instances` random position sets; revealment
/// right-hand sides use three-standard-error upper bounds on the query
/// probabilities.
pub fn exact_suite(params: &SuiteParams) -> Result<Vec<InstanceReport>> {
    check_prob("p", params.p)?;
    if !(params.p > 0.0 && params.p < 1.0) {
        return Err(Error::InvalidParameter("suite needs p in (0, 1)".into()));
    }
    if params.min_points == 0 || params.min_points > params.max_points || params.max_points > 12 {
        return Err(Error::InvalidParameter("suite needs 1 <= min_points <= max_points <= 12".into()));
    }
    for &e in &params.eps {
        check_prob("eps", e)?;
    }
    map_replicas(params.seed, params.instances, |_, r| {
        let bits = r.random_range(params.min_points..=params.max_points);
        let config = random_positions(bits, r);
        let table = exact_function_table(&config, &params.rect)?;
        let profile = query_profile(&config, &params.rect, params.p, params.coins, r.random())?;
        let delta = profile.delta_max_upper();
        let mut schramm_steif = Vec::new();
        for &e in &params.eps {
            for m in 1..=params.m_max {
                schramm_steif.push(check_schramm_steif(&table, params.p, delta, e, m)?);
            }
        }
        Ok(InstanceReport {
            bits,
            margulis_russo: check_margulis_russo(&table, params.p)?,
            osss: check_osss(&table, &profile)?,
            schramm_steif,
            influence_bounds: check_influence_upper_bound(&table, delta, params.p)?,
            bks: bks_statistic(&table, params.p),
            delta_max: profile.delta_max(),
        })
    })
    .into_iter()
    .collect()
}

/// Outcome of the duality and oracle sweep.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub reps: usize,
    /// Draws without coincident sites.
    pub generic: usize,
    /// Generic draws where exactly one of the two crossings occurs.
    pub xor_holds: usize,
    /// Draws where the converged oracle agrees with the exact decision.
    pub oracle_agree: usize,
    /// Disagreements that vanish after one further doubling.
    pub resolved_by_refinement: usize,
    /// Draws where the oracle did not converge below its cap.
    pub oracle_unresolved: usize,
}

/// Checks blue-horizontal XOR red-vertical and compares the exact blue
/// crossing with the raster oracle on `reps` draws at `p = 1/2`.
pub fn validate_sweep(n: f64, rect: &Rect, reps: usize, seed: u64) -> Result<ValidationReport> {
    if !(n.is_finite() && n >= 0.0) {
        return Err(Error::InvalidParameter(format!("n must be finite and non-negative, got {n}")));
    }
    let rows = map_replicas(seed, reps, |_, r| {
        let c = sample_configuration(n, 0.5, r).expect("validated");
        let generic = Tessellation::build(&c).map_or(true, |t| !t.jittered());
        let exact = crossing(&c, rect);
        let xor = exact.blue_horizontal != exact.red_vertical;
        let (agree, resolved, unresolved) = match raster_crossing_oracle(&c, rect, ORACLE_START) {
            Ok(o) if o.result.blue_horizontal == exact.blue_horizontal => (true, false, false),
            Ok(o) => {
                let finer = raster_crossing_at(&c, rect, (2 * o.resolution).min(2 * ORACLE_CAP));
                (false, finer.blue_horizontal == exact.blue_horizontal, false)
            }
            Err(_) => (false, false, true),
        };
        (generic, generic && xor, agree, resolved, unresolved)
    });
    let count = |f: fn(&(bool, bool, bool, bool, bool)) -> bool| rows.iter().filter(|x| f(x)).count();
    Ok(ValidationReport {
        reps,
        generic: count(|x| x.0),
        xor_holds: count(|x| x.1),
        oracle_agree: count(|x| x.2),
        resolved_by_refinement: count(|x| x.3),
        oracle_unresolved: count(|x| x.4),
    })
}
