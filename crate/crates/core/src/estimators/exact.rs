use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::InequalityReport;
use crate::error::{check_prob, Error, Result};
use crate::explorer::{draw_x0, ColorExplorer};
use crate::geometry::{Color, Configuration, Rect, Tessellation, WindowGraph};
use crate::seeding::map_replicas;

/// Largest number of color bits an exact table may have.
pub const TABLE_LIMIT: usize = 20;

/// Largest number of bits for the pairing-sum noise correlation.
pub const PAIRING_LIMIT: usize = 12;

/// Values of a Boolean function on `{0,1}^N`; bit `k` of the index is the
/// color of point `k` (1 = blue).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionTable {
    bits: usize,
    values: Vec<bool>,
}

impl FunctionTable {
    pub fn new(bits: usize, values: Vec<bool>) -> Result<Self> {
        if bits > TABLE_LIMIT {
            return Err(Error::TableTooLarge { bits, limit: TABLE_LIMIT });
        }
        if values.len() != 1 << bits {
            return Err(Error::Malformed(format!("table for {bits} bits needs {} values, got {}", 1 << bits, values.len())));
        }
        Ok(FunctionTable { bits, values })
    }

    pub fn from_fn(bits: usize, f: impl Fn(u32) -> bool) -> Result<Self> {
        if bits > TABLE_LIMIT {
            return Err(Error::TableTooLarge { bits, limit: TABLE_LIMIT });
        }
        Self::new(bits, (0..1u32 << bits).map(f).collect())
    }

    pub fn constant(bits: usize, value: bool) -> Result<Self> {
        Self::from_fn(bits, |_| value)
    }

    /// `f(ω) = ω_k`.
    pub fn dictator(bits: usize, k: usize) -> Result<Self> {
        if k >= bits {
            return Err(Error::InvalidParameter(format!("bit {k} out of range for {bits} bits")));
        }
        Self::from_fn(bits, |w| w >> k & 1 == 1)
    }

    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn value(&self, omega: u32) -> bool {
        self.values[omega as usize]
    }

    /// `P_p(ω)` for every `ω`.
    pub fn weights(&self, p: f64) -> Vec<f64> {
        let n = self.bits;
        let pw: Vec<f64> = (0..=n).map(|j| p.powi(j as i32) * (1.0 - p).powi((n - j) as i32)).collect();
        (0..self.values.len()).map(|w| pw[(w as u32).count_ones() as usize]).collect()
    }

    /// `P_p[f = 1]`.
    pub fn probability(&self, p: f64) -> f64 {
        self.weights(p).iter().zip(&self.values).filter(|(_, &v)| v).map(|(w, _)| w).sum()
    }

    pub fn variance(&self, p: f64) -> f64 {
        let q = self.probability(p);
        q * (1.0 - q)
    }

    /// `d/dp P_p[f = 1]` from the Bernstein form of the polynomial.
    pub fn derivative(&self, p: f64) -> f64 {
        let n = self.bits;
        if n == 0 {
            return 0.0;
        }
        let mut count = vec![0u64; n + 1];
        for (w, &v) in self.values.iter().enumerate() {
            if v {
                count[w.count_ones() as usize] += 1;
            }
        }
        let binom = |n: usize, k: usize| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
        let b: Vec<f64> = (0..=n).map(|j| count[j] as f64 / binom(n, j)).collect();
        (0..n)
            .map(|j| {
                (b[j + 1] - b[j]) * binom(n - 1, j) * p.powi(j as i32) * (1.0 - p).powi((n - 1 - j) as i32)
            })
            .sum::<f64>()
            * n as f64
    }

    /// `P_p[f(ω) ≠ f(σ_k ω)]`.
    pub fn influence(&self, k: usize, p: f64) -> f64 {
        let mask = 1usize << k;
        self.weights(p)
            .iter()
            .enumerate()
            .filter(|&(w, _)| self.values[w] != self.values[w ^ mask])
            .map(|(_, x)| x)
            .sum()
    }

    pub fn influences(&self, p: f64) -> Vec<f64> {
        let weights = self.weights(p);
        (0..self.bits)
            .map(|k| {
                let mask = 1usize << k;
                (0..self.values.len())
                    .filter(|&w| self.values[w] != self.values[w ^ mask])
                    .map(|w| weights[w])
                    .sum()
            })
            .collect()
    }

    /// Non-decreasing in every bit.
    pub fn is_monotone(&self) -> bool {
        (0..self.values.len()).all(|w| {
            (0..self.bits).all(|k| w >> k & 1 == 1 || self.values[w] <= self.values[w | 1 << k])
        })
    }

    /// `E_p[f(ω) f(ω^ε)] − E_p[f]²`, where `ω^ε` resamples each bit with
    /// probability `eps`; the noise operator is applied one bit at a time.
    pub fn noise_correlation(&self, p: f64, eps: f64) -> f64 {
        let mut g: Vec<f64> = self.values.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect();
        for k in 0..self.bits {
            let mask = 1usize << k;
            for w in 0..g.len() {
                if w & mask == 0 {
                    let (a, b) = (g[w], g[w | mask]);
                    let m = p * b + (1.0 - p) * a;
                    g[w] = (1.0 - eps) * a + eps * m;
                    g[w | mask] = (1.0 - eps) * b + eps * m;
                }
            }
        }
        let weights = self.weights(p);
        let e: f64 = (0..g.len()).filter(|&w| self.values[w]).map(|w| weights[w] * g[w]).sum();
        let q = self.probability(p);
        e - q * q
    }

    /// Same quantity by the explicit double sum over `(ω, ω̃)`.
    pub fn noise_correlation_pairing(&self, p: f64, eps: f64) -> Result<f64> {
        if self.bits > PAIRING_LIMIT {
            return Err(Error::TableTooLarge { bits: self.bits, limit: PAIRING_LIMIT });
        }
        let weights = self.weights(p);
        let kernel = |a: usize, b: usize| {
            let stay = if a == b { 1.0 - eps } else { 0.0 };
            stay + eps * if b == 1 { p } else { 1.0 - p }
        };
        let mut e = 0.0;
        for w in (0..self.values.len()).filter(|&w| self.values[w]) {
            for v in (0..self.values.len()).filter(|&v| self.values[v]) {
                let t: f64 = (0..self.bits).map(|k| kernel(w >> k & 1, v >> k & 1)).product();
                e += weights[w] * t;
            }
        }
        let q = self.probability(p);
        Ok(e - q * q)
    }
}

fn colors_of(omega: usize, bits: usize) -> Vec<Color> {
    (0..bits).map(|k| Color::from_bit(omega >> k & 1 == 1)).collect()
}

/// `f_R` on every coloring of the fixed positions of `config`.
pub fn exact_function_table(config: &Configuration, rect: &Rect) -> Result<FunctionTable> {
    let bits = config.len();
    if bits > TABLE_LIMIT {
        return Err(Error::TableTooLarge { bits, limit: TABLE_LIMIT });
    }
    if bits == 0 {
        return FunctionTable::new(0, vec![false]);
    }
    let tess = Tessellation::build(config)?;
    let g = WindowGraph::new(&tess, rect);
    let values = (0..1usize << bits).into_par_iter().map(|w| g.blue_horizontal(&colors_of(w, bits))).collect();
    FunctionTable::new(bits, values)
}

pub fn exact_influence(table: &FunctionTable, index: usize, p: f64) -> Result<f64> {
    check_prob("p", p)?;
    if index >= table.bits() {
        return Err(Error::InvalidParameter(format!("bit {index} out of range for {} bits", table.bits())));
    }
    Ok(table.influence(index, p))
}

/// Derivative of `P_p[f = 1]` against the sum of influences.
pub fn check_margulis_russo(table: &FunctionTable, p: f64) -> Result<InequalityReport> {
    check_prob("p", p)?;
    if !table.is_monotone() {
        return Err(Error::NonMonotone);
    }
    Ok(InequalityReport::eq(table.derivative(p), table.influences(p).iter().sum()))
}

/// Per-bit query probabilities of the color explorer: exact over colorings,
/// Monte Carlo over the line position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryProfile {
    pub delta: Vec<f64>,
    /// Standard error of each `delta` over the sampled lines.
    pub sigma: Vec<f64>,
    pub coins: usize,
    pub p: f64,
    pub seed: u64,
}

impl QueryProfile {
    pub fn delta_max(&self) -> f64 {
        self.delta.iter().copied().fold(0.0, f64::max)
    }

    /// `min(1, δ_k + 3σ_k)`
    pub fn delta_upper(&self, k: usize) -> f64 {
        (self.delta[k] + 3.0 * self.sigma[k]).min(1.0)
    }

    pub fn delta_max_upper(&self) -> f64 {
        (0..self.delta.len()).map(|k| self.delta_upper(k)).fold(0.0, f64::max)
    }
}

/// Runs the color explorer on every coloring for each of `coins` lines.
pub fn query_profile(config: &Configuration, rect: &Rect, p: f64, coins: usize, seed: u64) -> Result<QueryProfile> {
    check_prob("p", p)?;
    let bits = config.len();
    if bits > TABLE_LIMIT {
        return Err(Error::TableTooLarge { bits, limit: TABLE_LIMIT });
    }
    if coins < 2 {
        return Err(Error::InvalidParameter(format!("coins must be >= 2, got {coins}")));
    }
    let explorer = ColorExplorer::new(config, rect)?;
    let table = FunctionTable::constant(bits, false)?;
    let weights = table.weights(p);
    let per_coin = map_replicas(seed, coins, |_, r| {
        let x0 = draw_x0(rect, r);
        let mut q = vec![0.0; bits];
        for (w, &wt) in weights.iter().enumerate() {
            for i in explorer.run(&colors_of(w, bits), x0).queried {
                q[i as usize] += wt;
            }
        }
        q
    });
    let c = coins as f64;
    let mut delta = vec![0.0; bits];
    let mut sigma = vec![0.0; bits];
    for k in 0..bits {
        let mean = per_coin.iter().map(|q| q[k]).sum::<f64>() / c;
        let var = per_coin.iter().map(|q| (q[k] - mean).powi(2)).sum::<f64>() / (c - 1.0);
        delta[k] = mean;
        sigma[k] = (var / c).sqrt();
    }
    Ok(QueryProfile { delta, sigma, coins, p, seed })
}

/// `Var_p(f) ≤ p(1−p) Σ_k δ_k Inf_k` with each `δ_k` raised by three
/// standard errors.
pub fn check_osss(table: &FunctionTable, profile: &QueryProfile) -> Result<InequalityReport> {
    if profile.delta.len() != table.bits() {
        return Err(Error::InvalidParameter("profile and table differ in bit count".into()));
    }
    let p = profile.p;
    let rhs: f64 =
        table.influences(p).iter().enumerate().map(|(k, inf)| profile.delta_upper(k) * inf).sum::<f64>() * p * (1.0 - p);
    Ok(InequalityReport::le(table.variance(p), rhs))
}

/// Exact noise correlation against `e^{−εm} + m²·delta_max`.
pub fn check_schramm_steif(table: &FunctionTable, p: f64, delta_max: f64, eps: f64, m: u32) -> Result<InequalityReport> {
    check_prob("p", p)?;
    check_prob("eps", eps)?;
    check_prob("delta_max", delta_max)?;
    let m = m as f64;
    Ok(InequalityReport::le(table.noise_correlation(p, eps), (-eps * m).exp() + m * m * delta_max))
}

/// `Σ Inf ≤ √(N Σ Inf²)` and `Σ Inf ≤ √(N·delta_max) / (p(1−p))`.
pub fn check_influence_upper_bound(table: &FunctionTable, delta_max: f64, p: f64) -> Result<[InequalityReport; 2]> {
    check_prob("delta_max", delta_max)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
    }
    if !table.is_monotone() {
        return Err(Error::NonMonotone);
    }
    let inf = table.influences(p);
    let total: f64 = inf.iter().sum();
    let n = table.bits() as f64;
    let squares: f64 = inf.iter().map(|x| x * x).sum();
    Ok([
        InequalityReport::le(total, (n * squares).sqrt()),
        InequalityReport::le(total, (n * delta_max).sqrt() / (p * (1.0 - p))),
    ])
}

/// `Σ_k Inf_k²`.
pub fn bks_statistic(table: &FunctionTable, p: f64) -> f64 {
    table.influences(p).iter().map(|x| x * x).sum()
}
