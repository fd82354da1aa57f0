//! Hardware imperfections: Gaussian phase noise, Poissonian shot noise on
//! coincidence counts, and broken (frozen) phase shifters.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

use crate::error::{Error, Result};
use crate::mesh::PHASE_COUNT;
use crate::state::{Arm, GeneratorParams};

/// Counting statistics of a measurement setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShotNoise {
    /// Probabilities are read out exactly.
    Exact,
    /// Counts are Poisson with expected total `total_count`.
    Poisson { total_count: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Standard deviation of the Gaussian phase error, radians.
    pub sigma: f64,
    pub shots: ShotNoise,
    /// Also shot-sample the true-state reference value. Off by default: the
    /// target is classical data handed to the protocol.
    pub sample_reference: bool,
}

impl NoiseModel {
    pub fn new(sigma: f64, shots: ShotNoise) -> Result<Self> {
        let model = Self { sigma, shots, sample_reference: false };
        model.validate()?;
        Ok(model)
    }

    pub fn noiseless() -> Self {
        Self { sigma: 0.0, shots: ShotNoise::Exact, sample_reference: false }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("phase-noise sigma must be >= 0, got {}", self.sigma)));
        }
        if let ShotNoise::Poisson { total_count } = self.shots {
            if !(total_count > 0.0 && total_count.is_finite()) {
                return Err(Error::InvalidConfig(format!("total count must be > 0, got {total_count}")));
            }
        }
        Ok(())
    }
}

/// Broken generator phase shifters and the values they are stuck at.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DefectMask {
    entries: BTreeMap<(Arm, usize), f64>,
}

impl DefectMask {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, arm: Arm, index: usize, value: f64) -> Result<()> {
        if index >= PHASE_COUNT {
            return Err(Error::PhaseIndexOutOfRange { index, len: PHASE_COUNT });
        }
        if !value.is_finite() {
            return Err(Error::InvalidConfig(format!("defect value {value} is not finite")));
        }
        self.entries.insert((arm, index), value);
        Ok(())
    }

    /// `per_arm` distinct shifters chosen uniformly in each arm, each stuck
    /// at a value uniform on `[0, 2pi)`.
    pub fn random<R: Rng + ?Sized>(per_arm: usize, rng: &mut R) -> Result<Self> {
        if per_arm > PHASE_COUNT {
            return Err(Error::InvalidConfig(format!("{per_arm} defects per arm exceeds {PHASE_COUNT} shifters")));
        }
        let mut mask = Self::empty();
        for arm in Arm::BOTH {
            let mut picked = sample(rng, PHASE_COUNT, per_arm).into_vec();
            picked.sort_unstable();
            for index in picked {
                let value = rng.random_range(0.0..TAU);
                mask.insert(arm, index, value)?;
            }
        }
        Ok(mask)
    }

    /// `total` distinct shifters chosen uniformly among all 30 generator
    /// phases, regardless of arm.
    pub fn random_total<R: Rng + ?Sized>(total: usize, rng: &mut R) -> Result<Self> {
        if total > 2 * PHASE_COUNT {
            return Err(Error::InvalidConfig(format!("{total} defects exceeds {} shifters", 2 * PHASE_COUNT)));
        }
        let mut picked = sample(rng, 2 * PHASE_COUNT, total).into_vec();
        picked.sort_unstable();
        let mut mask = Self::empty();
        for flat in picked {
            let (arm, index) = if flat < PHASE_COUNT { (Arm::Signal, flat) } else { (Arm::Idler, flat - PHASE_COUNT) };
            mask.insert(arm, index, rng.random_range(0.0..TAU))?;
        }
        Ok(mask)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, arm: Arm) -> usize {
        self.entries.keys().filter(|(a, _)| *a == arm).count()
    }

    pub fn contains(&self, arm: Arm, index: usize) -> bool {
        self.entries.contains_key(&(arm, index))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Arm, usize, f64)> + '_ {
        self.entries.iter().map(|(&(arm, index), &value)| (arm, index, value))
    }

    /// Whether flat generator index `i` (signal `0..15`, idler `15..30`) is pinned.
    pub fn is_pinned_flat(&self, i: usize) -> bool {
        if i < PHASE_COUNT {
            self.contains(Arm::Signal, i)
        } else {
            self.contains(Arm::Idler, i - PHASE_COUNT)
        }
    }
}

/// Adds independent `N(0, sigma^2)` errors to every phase.
pub fn perturb_phases<R: Rng + ?Sized>(phases: &[f64], sigma: f64, rng: &mut R) -> Vec<f64> {
    if sigma == 0.0 {
        return phases.to_vec();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated as finite and non-negative");
    phases.iter().map(|&p| p + normal.sample(rng)).collect()
}

/// Overwrites every masked phase with its stuck value.
pub fn apply_defects(g: &GeneratorParams, mask: &DefectMask) -> GeneratorParams {
    let mut out = *g;
    for (arm, index, value) in mask.iter() {
        out.arm_mut(arm).set(index, value);
    }
    out
}

/// Independent Poisson counts with means `total_count * p_j`.
pub fn sample_counts<R: Rng + ?Sized>(dist: &[f64], total_count: f64, rng: &mut R) -> Vec<u64> {
    debug_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-9, "distribution does not sum to 1");
    dist.iter()
        .map(|&p| {
            let mean = total_count * p.max(0.0);
            if mean > 0.0 {
                Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
            } else {
                0
            }
        })
        .collect()
}

/// Relative frequency of one outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub probability: f64,
    /// No counts at all were recorded; `probability` is reported as 0.
    pub empty: bool,
}

pub fn estimate_probability(counts: &[u64], outcome: usize) -> Estimate {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        Estimate { probability: 0.0, empty: true }
    } else {
        Estimate { probability: counts[outcome] as f64 / total as f64, empty: false }
    }
}

/// Normalizes counts into an empirical distribution (all zeros if empty).
pub fn empirical_distribution(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return vec![0.0; counts.len()];
    }
    counts.iter().map(|&c| c as f64 / total as f64).collect()
}

/// Total variation distance `(1/2) sum |p_i - q_i|`.
pub fn tvd(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "distributions of unequal length");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn mean_std(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
        (m, v.sqrt())
    }

    #[test]
    fn zero_sigma_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let phases = [0.1, -2.0, 7.5];
        assert_eq!(perturb_phases(&phases, 0.0, &mut rng), phases.to_vec());
    }

    #[test]
    fn gaussian_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sigma = 0.02 * PI;
        let theta = 1.3;
        let xs: Vec<f64> = (0..100_000).map(|_| perturb_phases(&[theta], sigma, &mut rng)[0]).collect();
        let (m, s) = mean_std(&xs);
        let stderr = sigma / (xs.len() as f64).sqrt();
        assert!((m - theta).abs() < 4.0 * stderr);
        assert!((s - sigma).abs() < 0.02 * sigma);
    }

    #[test]
    fn perturbations_are_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sigma = 0.1;
        let n = 100_000;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for _ in 0..n {
            let p = perturb_phases(&[0.0, 0.0], sigma, &mut rng);
            sxy += p[0] * p[1];
            sxx += p[0] * p[0];
            syy += p[1] * p[1];
        }
        let corr = sxy / (sxx * syy).sqrt();
        assert!(corr.abs() < 0.02, "correlation {corr}");
    }

    #[test]
    fn noise_is_fresh_per_call() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = perturb_phases(&[0.0], 0.1, &mut rng);
        let b = perturb_phases(&[0.0], 0.1, &mut rng);
        assert_ne!(a, b);
    }

    #[test]
    fn empty_mask_is_identity() {
        let g = GeneratorParams::from_flat(&(0..30).map(|i| i as f64 * 0.1).collect::<Vec<_>>()).unwrap();
        assert_eq!(apply_defects(&g, &DefectMask::empty()), g);
    }

    #[test]
    fn full_arm_mask_overwrites_arm() {
        let mut mask = DefectMask::empty();
        for i in 0..PHASE_COUNT {
            mask.insert(Arm::Signal, i, 0.5 + i as f64).unwrap();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let flat: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..TAU)).collect();
            let g = GeneratorParams::from_flat(&flat).unwrap();
            let pinned = apply_defects(&g, &mask);
            for i in 0..PHASE_COUNT {
                assert_eq!(pinned.signal.get(i), 0.5 + i as f64);
            }
            assert_eq!(pinned.idler, g.idler);
        }
    }

    #[test]
    fn half_defective_mask_pins_sixteen_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mask = DefectMask::random(8, &mut rng).unwrap();
        assert_eq!(mask.len(), 16);
        assert_eq!(mask.count(Arm::Signal), 8);
        assert_eq!(mask.count(Arm::Idler), 8);

        let g = GeneratorParams::from_flat(&[-1.0; 30]).unwrap();
        let pinned = apply_defects(&g, &mask).to_flat();
        let fixed = pinned.iter().filter(|&&p| p != -1.0).count();
        assert_eq!(fixed, 16);
        assert_eq!((0..30).filter(|&i| mask.is_pinned_flat(i)).count(), 16);
        for (_, _, v) in mask.iter() {
            assert!((0.0..TAU).contains(&v));
        }
    }

    #[test]
    fn total_mask_spreads_over_both_arms() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let one = DefectMask::random_total(1, &mut rng).unwrap();
        assert_eq!(one.len(), 1);
        let mut arms_hit = [false; 2];
        for _ in 0..50 {
            let m = DefectMask::random_total(1, &mut rng).unwrap();
            arms_hit[usize::from(m.count(Arm::Idler) == 1)] = true;
        }
        assert_eq!(arms_hit, [true, true]);
        assert_eq!(DefectMask::random_total(30, &mut rng).unwrap().len(), 30);
    }

    #[test]
    fn apply_defects_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mask = DefectMask::random(5, &mut rng).unwrap();
        let flat: Vec<f64> = (0..30).map(|_| rng.random_range(0.0..TAU)).collect();
        let g = GeneratorParams::from_flat(&flat).unwrap();
        let once = apply_defects(&g, &mask);
        assert_eq!(apply_defects(&once, &mask), once);
    }

    #[test]
    fn mask_validation() {
        let mut mask = DefectMask::empty();
        assert!(mask.insert(Arm::Idler, 15, 0.0).is_err());
        assert!(mask.insert(Arm::Idler, 3, f64::NAN).is_err());
        assert!(DefectMask::random(16, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
        assert!(DefectMask::random_total(31, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn one_hot_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut dist = [0.0; 16];
        dist[5] = 1.0;
        let counts = sample_counts(&dist, 1500.0, &mut rng);
        for (i, &c) in counts.iter().enumerate() {
            if i != 5 {
                assert_eq!(c, 0);
            }
        }
        assert!(counts[5] > 1000);
    }

    #[test]
    fn poisson_means() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let dist = [1.0 / 16.0; 16];
        let reps = 10_000;
        let mut per_bin: Vec<Vec<f64>> = (0..16).map(|_| Vec::with_capacity(reps)).collect();
        let mut totals = Vec::with_capacity(reps);
        for _ in 0..reps {
            let c = sample_counts(&dist, 1500.0, &mut rng);
            totals.push(c.iter().sum::<u64>() as f64);
            for (bin, &v) in per_bin.iter_mut().zip(&c) {
                bin.push(v as f64);
            }
        }
        for bin in &per_bin {
            let (m, s) = mean_std(bin);
            assert!((m - 93.75).abs() < 3.0 * s / (reps as f64).sqrt(), "bin mean {m}");
        }
        let (m, s) = mean_std(&totals);
        assert!((m - 1500.0).abs() < 3.0 * s / (reps as f64).sqrt());
    }

    #[test]
    fn estimator_cases() {
        let mut counts = vec![0u64; 16];
        counts[3] = 12;
        assert_eq!(estimate_probability(&counts, 3), Estimate { probability: 1.0, empty: false });
        assert_eq!(estimate_probability(&[100; 16], 7).probability, 1.0 / 16.0);
        assert_eq!(estimate_probability(&[0; 16], 7), Estimate { probability: 0.0, empty: true });
    }

    #[test]
    fn estimator_tracks_truth() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dist: Vec<f64> = {
            let w: Vec<f64> = (1..=16).map(|i| i as f64).collect();
            let s: f64 = w.iter().sum();
            w.iter().map(|x| x / s).collect()
        };
        let total = 10_000.0;
        for _ in 0..100 {
            let counts = sample_counts(&dist, total, &mut rng);
            for (j, &p) in dist.iter().enumerate() {
                let est = estimate_probability(&counts, j).probability;
                let sd = (p / total).sqrt();
                assert!((est - p).abs() < 5.0 * sd);
            }
        }
    }

    #[test]
    fn estimator_is_unbiased() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let dist = [0.05, 0.15, 0.3, 0.5];
        for total in [100.0, 1000.0, 10_000.0] {
            let reps = 20_000;
            let est: Vec<f64> = (0..reps)
                .map(|_| estimate_probability(&sample_counts(&dist, total, &mut rng), 2).probability)
                .collect();
            let (m, s) = mean_std(&est);
            assert!((m - 0.3).abs() < 4.0 * s / (reps as f64).sqrt(), "total {total}: mean {m}");
        }
    }

    #[test]
    fn tvd_cases() {
        let uniform = [1.0 / 16.0; 16];
        assert_eq!(tvd(&uniform, &uniform), 0.0);
        let mut hot = [0.0; 16];
        hot[0] = 1.0;
        assert!((tvd(&uniform, &hot) - 15.0 / 16.0).abs() < 1e-15);
    }

    #[test]
    fn tvd_shrinks_with_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let uniform = [1.0 / 16.0; 16];
        let mean_tvd = |total: f64, rng: &mut ChaCha8Rng| {
            (0..1000).map(|_| tvd(&uniform, &empirical_distribution(&sample_counts(&uniform, total, rng)))).sum::<f64>()
                / 1000.0
        };
        let a = mean_tvd(100.0, &mut rng);
        let b = mean_tvd(1000.0, &mut rng);
        let c = mean_tvd(10_000.0, &mut rng);
        assert!(a > b && b > c, "{a} {b} {c}");
    }

    #[test]
    fn noise_model_validation() {
        assert!(NoiseModel::new(-0.1, ShotNoise::Exact).is_err());
        assert!(NoiseModel::new(0.1, ShotNoise::Poisson { total_count: 0.0 }).is_err());
        assert!(NoiseModel::new(0.1, ShotNoise::Poisson { total_count: 1500.0 }).is_ok());
    }
}
