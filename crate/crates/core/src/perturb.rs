//! Perturbations and couplings of colored Poisson configurations.
//!
//! Points keep their sequence index through every operation that retains
//! them, so symmetric differences and per-point statistics are positional.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_nonneg, check_prob, Error, Result};
use crate::geometry::{poisson_count, sample_configuration, uniform_point, Color, ColoredPoint, Configuration};

/// Keeps each point independently with probability `keep_prob`.
pub fn thin<R: Rng + ?Sized>(config: &Configuration, keep_prob: f64, rng: &mut R) -> Result<Configuration> {
    check_prob("keep_prob", keep_prob)?;
    let mask = bernoulli_mask(config.len(), keep_prob, rng);
    Ok(config.subset(&mask, config.intensity))
}

/// Appends an independent Poisson(`add_intensity`) sample with blue
/// probability `p`.
pub fn sprinkle<R: Rng + ?Sized>(
    config: &Configuration,
    add_intensity: f64,
    p: f64,
    rng: &mut R,
) -> Result<Configuration> {
    check_nonneg("add_intensity", add_intensity)?;
    let fresh = sample_configuration(add_intensity, p, rng)?;
    let mut out = config.clone();
    out.points.extend(fresh.points);
    Ok(out)
}

/// `η(ε)`: thin by `1 − eps`, then sprinkle at intensity `eps·n`.
pub fn epsilon_noise<R: Rng + ?Sized>(
    config: &Configuration,
    eps: f64,
    n: f64,
    p: f64,
    rng: &mut R,
) -> Result<Configuration> {
    check_prob("eps", eps)?;
    check_nonneg("n", n)?;
    let kept = thin(config, 1.0 - eps, rng)?;
    let mut out = sprinkle(&kept, eps * n, p, rng)?;
    out.intensity = n;
    out.blue_prob = p;
    Ok(out)
}

/// With probability `eps` each point gets a fresh Bernoulli color at the
/// configuration's blue probability.
pub fn resample_colors<R: Rng + ?Sized>(config: &Configuration, eps: f64, rng: &mut R) -> Result<Configuration> {
    check_prob("eps", eps)?;
    let p = config.blue_prob;
    check_prob("blue_prob", p)?;
    let mut out = config.clone();
    for pt in &mut out.points {
        if rng.random::<f64>() < eps {
            pt.color = Color::from_bit(rng.random::<f64>() < p);
        }
    }
    Ok(out)
}

/// With probability `eps` each point moves to a fresh uniform location.
pub fn resample_positions<R: Rng + ?Sized>(config: &Configuration, eps: f64, rng: &mut R) -> Result<Configuration> {
    check_prob("eps", eps)?;
    let mut out = config.clone();
    for pt in &mut out.points {
        if rng.random::<f64>() < eps {
            pt.location = uniform_point(rng);
        }
    }
    Ok(out)
}

/// A dense configuration at intensity `k·n` with a presence mask whose set
/// bits form a sample at intensity `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoStageSample {
    pub dense: Configuration,
    pub mask: Vec<bool>,
    pub k: f64,
    pub n: f64,
}

impl TwoStageSample {
    /// Presence probability of each dense point.
    pub fn keep_prob(&self) -> f64 {
        1.0 / self.k
    }

    pub fn masked(&self) -> Configuration {
        self.dense.subset(&self.mask, self.n)
    }

    pub fn masked_with(&self, mask: &[bool]) -> Configuration {
        self.dense.subset(mask, self.n)
    }

    pub fn present_count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

/// Draws `η_k ~ P_{kn,p}` and keeps each point with probability `1/k`.
pub fn two_stage_sample<R: Rng + ?Sized>(n: f64, k: f64, p: f64, rng: &mut R) -> Result<TwoStageSample> {
    if !(k.is_finite() && k > 1.0) {
        return Err(Error::InvalidParameter(format!("k must be a finite real > 1, got {k}")));
    }
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::InvalidParameter(format!("n must be positive, got {n}")));
    }
    two_stage_unchecked(n, k, p, rng)
}

/// Same as [`two_stage_sample`] but also accepts `k = 1`.
pub(crate) fn two_stage_unchecked<R: Rng + ?Sized>(n: f64, k: f64, p: f64, rng: &mut R) -> Result<TwoStageSample> {
    let dense = sample_configuration(k * n, p, rng)?;
    let mask = bernoulli_mask(dense.len(), 1.0 / k, rng);
    Ok(TwoStageSample { dense, mask, k, n })
}

/// Resamples each presence bit from Bernoulli(`1/k`) with probability `eps`.
pub fn discrete_noise<R: Rng + ?Sized>(ts: &TwoStageSample, eps: f64, rng: &mut R) -> Result<Vec<bool>> {
    check_prob("eps", eps)?;
    let q = ts.keep_prob();
    Ok(ts
        .mask
        .iter()
        .map(|&b| if rng.random::<f64>() < eps { rng.random::<f64>() < q } else { b })
        .collect())
}

/// Bit-noise level `ε′/(1 − 1/k)` matching continuum noise `ε′`.
pub fn eps_map(eps_prime: f64, k: f64) -> Result<f64> {
    if !(k.is_finite() && k > 1.0) {
        return Err(Error::InvalidParameter(format!("k must be a finite real > 1, got {k}")));
    }
    let top = 1.0 - 1.0 / k;
    if !(0.0..=top).contains(&eps_prime) {
        return Err(Error::InvalidParameter(format!("eps_prime must lie in [0, {top}], got {eps_prime}")));
    }
    Ok((eps_prime / top).min(1.0))
}

/// Three configurations at intensity `n` and `p = 1/2` such that
/// `(eta1, eta2) ~ (η, η(ε))`, `(eta1, eta3) ~ (η, η*)` and `eta2`, `eta3`
/// share their retained points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledTriple {
    pub eta1: Configuration,
    pub eta2: Configuration,
    pub eta3: Configuration,
    pub eps: f64,
    pub n: f64,
}

/// Per color: `L, M, N` independent Poisson with means `(1−ε)n/2`, `εn/2`,
/// `εn/2`; `ξ′ = X[..L+M]`, `ξ″ = X[..L] ∪ Y[..N]`, `ξ‴ = X[..L] ∪ Y[..M]`.
pub fn coupled_triple<R: Rng + ?Sized>(n: f64, eps: f64, rng: &mut R) -> Result<CoupledTriple> {
    check_prob("eps", eps)?;
    if !(n.is_finite() && n > 0.0) {
        return Err(Error::InvalidParameter(format!("n must be positive, got {n}")));
    }
    let mut eta1 = Configuration::empty(n, 0.5);
    let mut eta2 = Configuration::empty(n, 0.5);
    let mut eta3 = Configuration::empty(n, 0.5);
    for color in [Color::Red, Color::Blue] {
        let l = poisson_count((1.0 - eps) * n / 2.0, rng);
        let m = poisson_count(eps * n / 2.0, rng);
        let nn = poisson_count(eps * n / 2.0, rng);
        let x: Vec<ColoredPoint> =
            (0..l + m).map(|_| ColoredPoint { location: uniform_point(rng), color }).collect();
        let y: Vec<ColoredPoint> =
            (0..m.max(nn)).map(|_| ColoredPoint { location: uniform_point(rng), color }).collect();
        eta1.points.extend_from_slice(&x);
        eta2.points.extend_from_slice(&x[..l]);
        eta2.points.extend_from_slice(&y[..nn]);
        eta3.points.extend_from_slice(&x[..l]);
        eta3.points.extend_from_slice(&y[..m]);
    }
    Ok(CoupledTriple { eta1, eta2, eta3, eps, n })
}

pub(crate) fn bernoulli_mask<R: Rng + ?Sized>(len: usize, q: f64, rng: &mut R) -> Vec<bool> {
    (0..len).map(|_| rng.random::<f64>() < q).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn identities_at_trivial_levels() {
        let mut r = rng(1);
        let c = sample_configuration(300.0, 0.5, &mut r).unwrap();
        assert_eq!(thin(&c, 1.0, &mut r).unwrap(), c);
        assert!(thin(&c, 0.0, &mut r).unwrap().is_empty());
        assert_eq!(sprinkle(&c, 0.0, 0.5, &mut r).unwrap(), c);
        assert_eq!(epsilon_noise(&c, 0.0, 300.0, 0.5, &mut r).unwrap(), c);
        assert_eq!(resample_colors(&c, 0.0, &mut r).unwrap(), c);
        assert_eq!(resample_positions(&c, 0.0, &mut r).unwrap(), c);
        let ts = two_stage_sample(300.0, 3.0, 0.5, &mut r).unwrap();
        assert_eq!(discrete_noise(&ts, 0.0, &mut r).unwrap(), ts.mask);
    }

    #[test]
    fn thinning_count() {
        let mut r = rng(2);
        let c = sample_configuration(1000.0, 0.5, &mut r).unwrap();
        let reps = 10_000;
        let total: usize = (0..reps).map(|_| thin(&c, 0.5, &mut r).unwrap().len()).sum();
        let mean = total as f64 / reps as f64;
        let expect = 0.5 * c.len() as f64;
        let sd = (c.len() as f64 * 0.25 / reps as f64).sqrt();
        assert!((mean - expect).abs() < 3.0 * sd, "{mean} vs {expect}");
    }

    #[test]
    fn sprinkle_adds_poisson_count() {
        let mut r = rng(3);
        let c = sample_configuration(50.0, 0.5, &mut r).unwrap();
        let reps = 5000;
        let lam = 40.0;
        let added: Vec<f64> =
            (0..reps).map(|_| (sprinkle(&c, lam, 0.5, &mut r).unwrap().len() - c.len()) as f64).collect();
        let mean = added.iter().sum::<f64>() / reps as f64;
        let var = added.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        assert!((mean - lam).abs() < 3.0 * (lam / reps as f64).sqrt());
        // Poisson dispersion: variance equals mean
        assert!((var / mean - 1.0).abs() < 0.1);
        let s = sprinkle(&c, lam, 0.5, &mut r).unwrap();
        assert_eq!(&s.points[..c.len()], &c.points[..]);
    }

    #[test]
    fn epsilon_noise_keeps_expected_share() {
        let mut r = rng(4);
        let reps = 400;
        let mut shared = 0usize;
        let mut base = 0usize;
        for _ in 0..reps {
            let c = sample_configuration(1000.0, 0.5, &mut r).unwrap();
            let e = epsilon_noise(&c, 0.1, 1000.0, 0.5, &mut r).unwrap();
            shared += c.points.iter().filter(|p| e.points.contains(p)).count();
            base += c.len();
        }
        let frac = shared as f64 / base as f64;
        let sd = (0.09 / base as f64).sqrt();
        assert!((frac - 0.9).abs() < 3.0 * sd, "{frac}");
    }

    #[test]
    fn color_resampling_agreement() {
        let mut r = rng(5);
        let c = sample_configuration(2000.0, 0.5, &mut r).unwrap();
        for (eps, target) in [(1.0, 0.5), (0.5, 0.75)] {
            let reps = 20;
            let mut agree = 0usize;
            for _ in 0..reps {
                let d = resample_colors(&c, eps, &mut r).unwrap();
                assert_eq!(d.locations(), c.locations());
                agree += c.points.iter().zip(&d.points).filter(|(a, b)| a.color == b.color).count();
            }
            let total = (reps * c.len()) as f64;
            let frac = agree as f64 / total;
            let sd = (target * (1.0 - target) / total).sqrt();
            assert!((frac - target).abs() < 3.0 * sd, "eps {eps}: {frac}");
        }
    }

    #[test]
    fn position_resampling_moves_expected_count() {
        let mut r = rng(6);
        let reps = 200;
        let mut moved = 0usize;
        let mut total = 0usize;
        for _ in 0..reps {
            let c = sample_configuration(1000.0, 0.5, &mut r).unwrap();
            let d = resample_positions(&c, 0.2, &mut r).unwrap();
            assert_eq!(c.colors(), d.colors());
            moved += c.points.iter().zip(&d.points).filter(|(a, b)| a.location != b.location).count();
            total += c.len();
        }
        let frac = moved as f64 / total as f64;
        assert!((frac - 0.2).abs() < 3.0 * (0.16 / total as f64).sqrt());
    }

    #[test]
    fn two_stage_masked_count() {
        let mut r = rng(7);
        let reps = 2000;
        let total: usize = (0..reps).map(|_| two_stage_sample(100.0, 8.0, 0.5, &mut r).unwrap().present_count()).sum();
        let mean = total as f64 / reps as f64;
        assert!((mean - 100.0).abs() < 3.0 * (100.0 / reps as f64).sqrt(), "{mean}");
        let ts = two_stage_sample(100.0, 1.0 + 1e-12, 0.5, &mut r).unwrap();
        assert!(ts.present_count() + 3 >= ts.dense.len());
        assert!(two_stage_sample(100.0, 1.0, 0.5, &mut r).is_err());
    }

    #[test]
    fn discrete_noise_preserves_mask_law() {
        let mut r = rng(8);
        let ts = two_stage_sample(500.0, 4.0, 0.5, &mut r).unwrap();
        let fresh = discrete_noise(&ts, 1.0, &mut r).unwrap();
        let ones = fresh.iter().filter(|&&b| b).count() as f64;
        let len = fresh.len() as f64;
        assert!((ones / len - 0.25).abs() < 3.0 * (0.1875 / len).sqrt());
        let half = discrete_noise(&ts, 0.5, &mut r).unwrap();
        let flips = half.iter().zip(&ts.mask).filter(|(a, b)| a != b).count() as f64;
        // a bit differs when resampled and the fresh draw disagrees: 0.5 · 2·(1/4)(3/4)
        let q = 0.1875;
        assert!((flips / len - q).abs() < 3.0 * (q * (1.0 - q) / len).sqrt());
    }

    #[test]
    fn eps_map_values() {
        assert_eq!(eps_map(0.25, 2.0).unwrap(), 0.5);
        assert_eq!(eps_map(0.0, 7.5).unwrap(), 0.0);
        assert_eq!(eps_map(1.0 - 1.0 / 3.0, 3.0).unwrap(), 1.0);
        assert!(eps_map(0.6, 2.0).is_err());
        assert!(eps_map(0.1, 1.0).is_err());
    }

    #[test]
    fn coupled_triple_structure() {
        let mut r = rng(9);
        let t = coupled_triple(400.0, 0.0, &mut r).unwrap();
        assert_eq!(t.eta1, t.eta2);
        assert_eq!(t.eta1, t.eta3);
        let n = 400.0;
        let (eps, c) = (0.1, 0.5);
        let reps = 2000;
        let mut exceed = 0usize;
        for _ in 0..reps {
            let t = coupled_triple(n, eps, &mut r).unwrap();
            for color in [Color::Red, Color::Blue] {
                let pick = |c: &Configuration| -> Vec<ColoredPoint> {
                    c.points.iter().filter(|p| p.color == color).copied().collect()
                };
                let (b, d) = (pick(&t.eta2), pick(&t.eta3));
                // one of the two is a prefix of the other
                let k = b.len().min(d.len());
                assert_eq!(&b[..k], &d[..k]);
                let diff = b.len().abs_diff(d.len()) as f64;
                if color == Color::Red && diff > c * n.sqrt() {
                    exceed += 1;
                }
            }
        }
        let freq = exceed as f64 / reps as f64;
        let bound = eps / (c * c);
        assert!(freq <= bound + 3.0 * (bound * (1.0 - bound) / reps as f64).sqrt(), "{freq}");
    }

    #[test]
    fn determinism() {
        let a = {
            let mut r = rng(10);
            let c = sample_configuration(200.0, 0.4, &mut r).unwrap();
            epsilon_noise(&c, 0.3, 200.0, 0.4, &mut r).unwrap()
        };
        let b = {
            let mut r = rng(10);
            let c = sample_configuration(200.0, 0.4, &mut r).unwrap();
            epsilon_noise(&c, 0.3, 200.0, 0.4, &mut r).unwrap()
        };
        assert_eq!(a, b);
    }
}
