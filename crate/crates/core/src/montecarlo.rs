//! Continuous-time jump trajectories between the two branches.
//!
//! Each trajectory draws an exponential emission time of mean `tau`, then
//! alternates exponential dwell times in the current branch (mean
//! `1 / rate_out`) until emission. The photon is polarized along the dipole
//! of the branch occupied at emission.
//!
//! Trajectory `k` always uses random stream `(seed, Trajectory, k)`: the
//! first draw is the emission time, the following draws are dwell times.
//! The same stream therefore reproduces the branch path for occupation
//! estimates, and results do not depend on how work is split across threads.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Branch, RateSet};
use crate::rng::{self, Domain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub emission_time: f64,
    pub branch_at_emission: Branch,
    pub n_flips: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_trajectories: usize,
    pub seed: u64,
    pub rates: RateSet,
    pub tau: f64,
    pub initial_branch: Branch,
}

impl McConfig {
    pub fn new(n_trajectories: usize, seed: u64, rates: RateSet, tau: f64, initial_branch: Branch) -> Result<Self> {
        if n_trajectories == 0 {
            return Err(Error::domain("need at least one trajectory"));
        }
        if !(tau > 0.0) || tau.is_infinite() {
            return Err(Error::domain(format!("lifetime must be finite and > 0 ns, got {tau}")));
        }
        Ok(Self {
            n_trajectories,
            seed,
            rates,
            tau,
            initial_branch,
        })
    }
}

fn exponential(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    if rate > 0.0 {
        Exp::new(rate).expect("positive rate").sample(rng)
    } else {
        f64::INFINITY
    }
}

/// Walks the branch path of one trajectory.
struct Path {
    rng: ChaCha8Rng,
    rates: RateSet,
    branch: Branch,
    /// Time of the next flip.
    next_flip: f64,
    n_flips: u32,
}

impl Path {
    /// Positions the stream after the emission-time draw.
    fn start(config: &McConfig, index: u64) -> (Self, f64) {
        let mut rng = rng::stream(config.seed, Domain::Trajectory, index);
        let emission = exponential(&mut rng, 1.0 / config.tau);
        let branch = config.initial_branch;
        let first = exponential(&mut rng, config.rates.rate_out(branch));
        (
            Self {
                rng,
                rates: config.rates,
                branch,
                next_flip: first,
                n_flips: 0,
            },
            emission,
        )
    }

    /// Branch occupied at time `t`; calls must be non-decreasing in `t`.
    fn branch_at(&mut self, t: f64) -> Branch {
        while self.next_flip <= t {
            self.branch = self.branch.other();
            self.n_flips += 1;
            let dwell = exponential(&mut self.rng, self.rates.rate_out(self.branch));
            self.next_flip += dwell;
        }
        self.branch
    }
}

fn trajectory(config: &McConfig, index: u64) -> TrajectorySample {
    let (mut path, emission) = Path::start(config, index);
    let branch = path.branch_at(emission);
    TrajectorySample {
        emission_time: emission,
        branch_at_emission: branch,
        n_flips: path.n_flips,
    }
}

fn trajectories(config: &McConfig, first: u64, count: usize) -> Vec<TrajectorySample> {
    (first..first + count as u64).into_par_iter().map(|k| trajectory(config, k)).collect()
}

/// Deterministic given `config.seed`.
pub fn simulate(config: &McConfig) -> Vec<TrajectorySample> {
    trajectories(config, 0, config.n_trajectories)
}

/// Fraction of samples emitted from `branch`.
pub fn branch_fraction(samples: &[TrajectorySample], branch: Branch) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.iter().filter(|s| s.branch_at_emission == branch).count() as f64 / samples.len() as f64
}

fn photon_angle(branch: Branch, dipole_x_angle: f64) -> f64 {
    match branch {
        Branch::X => dipole_x_angle,
        Branch::Y => dipole_x_angle + 90.0,
    }
}

fn malus(theta: f64, polarization: f64) -> f64 {
    (theta - polarization).to_radians().cos().powi(2)
}

/// Every photon meets the polarizer at every angle; returns the accepted
/// fraction per angle. Acceptance draws come from stream
/// `(seed, Acceptance, angle index)`.
pub fn empirical_polarizer_sweep(
    samples: &[TrajectorySample],
    dipole_x_angle: f64,
    angles: &[f64],
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::domain("polarizer sweep needs at least one photon"));
    }
    Ok(angles
        .par_iter()
        .enumerate()
        .map(|(k, &theta)| {
            let mut rng = rng::stream(seed, Domain::Acceptance, k as u64);
            let accepted = samples
                .iter()
                .filter(|s| rng.random::<f64>() < malus(theta, photon_angle(s.branch_at_emission, dipole_x_angle)))
                .count();
            (theta, accepted as f64 / samples.len() as f64)
        })
        .collect())
}

/// Photon-counting polarizer sweep: the polarizer dwells at each angle long
/// enough to collect a Poisson number of photons with mean
/// `mean_total_photons / angles.len()`; each photon is a fresh trajectory
/// and passes with probability `cos²`. Returns detected counts per angle.
pub fn photon_counting_sweep(
    config: &McConfig,
    dipole_x_angle: f64,
    angles: &[f64],
    mean_total_photons: f64,
) -> Result<Vec<(f64, f64)>> {
    if angles.is_empty() {
        return Err(Error::domain("photon-counting sweep needs at least one angle"));
    }
    if !(mean_total_photons > 0.0) || mean_total_photons.is_infinite() {
        return Err(Error::domain(format!("mean photon number must be > 0, got {mean_total_photons}")));
    }
    let per_angle = Poisson::new(mean_total_photons / angles.len() as f64)
        .map_err(|e| Error::domain(format!("invalid photon mean: {e}")))?;
    let mut detection: Vec<ChaCha8Rng> = (0..angles.len())
        .map(|k| rng::stream(config.seed, Domain::Detection, k as u64))
        .collect();
    let arrivals: Vec<usize> = detection.iter_mut().map(|r| per_angle.sample(r) as usize).collect();
    let offsets: Vec<u64> = arrivals
        .iter()
        .scan(0u64, |acc, &n| {
            let start = *acc;
            *acc += n as u64;
            Some(start)
        })
        .collect();

    Ok(angles
        .par_iter()
        .zip(detection.into_par_iter())
        .zip(arrivals.par_iter().zip(offsets.par_iter()))
        .map(|((&theta, mut rng), (&n, &first))| {
            let photons = (first..first + n as u64).map(|k| trajectory(config, k));
            let detected = photons
                .filter(|s| rng.random::<f64>() < malus(theta, photon_angle(s.branch_at_emission, dipole_x_angle)))
                .count();
            (theta, detected as f64)
        })
        .collect())
}

/// Estimated upper-branch occupation at one time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OccupationPoint {
    pub t: f64,
    pub p_x_hat: f64,
    /// Binomial standard error.
    pub sigma: f64,
}

/// Occupation of the latent branch process on `time_grid`, emission
/// censored out: paths continue past their emission time. Emission is
/// branch independent, so this has the same law as the surviving
/// sub-ensemble while keeping all `N` trajectories at late times.
pub fn occupation_curve(config: &McConfig, time_grid: &[f64]) -> Result<Vec<OccupationPoint>> {
    if time_grid.iter().any(|t| !(*t >= 0.0) || t.is_infinite()) {
        return Err(Error::domain("occupation times must be finite and >= 0"));
    }
    let mut order: Vec<usize> = (0..time_grid.len()).collect();
    order.sort_by(|&a, &b| time_grid[a].total_cmp(&time_grid[b]));

    let counts = (0..config.n_trajectories as u64)
        .into_par_iter()
        .fold(
            || vec![0u64; time_grid.len()],
            |mut acc, k| {
                let (mut path, _) = Path::start(config, k);
                for &i in &order {
                    if path.branch_at(time_grid[i]) == Branch::X {
                        acc[i] += 1;
                    }
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; time_grid.len()],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );

    let n = config.n_trajectories as f64;
    Ok(time_grid
        .iter()
        .zip(counts)
        .map(|(&t, c)| {
            let p = c as f64 / n;
            OccupationPoint {
                t,
                p_x_hat: p,
                sigma: (p * (1.0 - p) / n).sqrt(),
            }
        })
        .collect())
}

/// Binomial standard error of a fraction `p` estimated from `n` trials.
pub fn binomial_sigma(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::fit_cosine;
    use crate::model::{rates_from_detailed_balance, ThermalBath};

    fn config(n: usize, gamma: f64, seed: u64) -> McConfig {
        McConfig::new(n, seed, RateSet::symmetric(gamma).unwrap(), 12.0, Branch::X).unwrap()
    }

    #[test]
    fn zero_rates_never_flip() {
        let samples = simulate(&config(2000, 0.0, 1));
        assert!(samples.iter().all(|s| s.branch_at_emission == Branch::X && s.n_flips == 0));
        let mean_t = samples.iter().map(|s| s.emission_time).sum::<f64>() / 2000.0;
        assert!((mean_t - 12.0).abs() < 5.0 * 12.0 / (2000f64).sqrt());
    }

    #[test]
    fn emission_fraction_matches_exponential_average() {
        let n = 100_000;
        let samples = simulate(&config(n, 0.05, 11));
        let f = branch_fraction(&samples, Branch::X);
        let target = 0.5 * (1.0 + 1.0 / 2.2);
        assert!((f - target).abs() < 3.0 * binomial_sigma(target, n), "{f}");
    }

    #[test]
    fn fixed_time_occupation_matches_closed_form() {
        let n = 100_000;
        let curve = occupation_curve(&config(n, 0.05, 5), &[12.0, 0.0, (2.0f64).ln() / 0.1]).unwrap();
        let target = 0.5 * (1.0 + (-1.2f64).exp());
        assert!((curve[0].p_x_hat - target).abs() < 3.0 * binomial_sigma(target, n));
        assert_eq!(curve[1].p_x_hat, 1.0);
        assert!((curve[2].p_x_hat - 0.75).abs() < 3.0 * binomial_sigma(0.75, n));
    }

    #[test]
    fn detailed_balance_long_time() {
        let bath = ThermalBath::new(4.0).unwrap();
        let rates = rates_from_detailed_balance(0.05, 5.0, &bath).unwrap();
        let n = 100_000;
        let cfg = McConfig::new(n, 3, rates, 12.0, Branch::X).unwrap();
        let horizon = 50.0 / rates.c_yx;
        let p = occupation_curve(&cfg, &[horizon]).unwrap()[0];
        let target = rates.c_xy / rates.total();
        assert!((p.p_x_hat - target).abs() < 3.0 * binomial_sigma(target, n));
    }

    #[test]
    fn deterministic_and_partition_independent() {
        let cfg = config(5000, 0.08, 77);
        let a = simulate(&cfg);
        assert_eq!(a, simulate(&cfg));
        let head = trajectories(&cfg, 0, 2000);
        let tail = trajectories(&cfg, 2000, 3000);
        assert_eq!(a, [head, tail].concat());
        let serial: Vec<_> = (0..5000u64).map(|k| trajectory(&cfg, k)).collect();
        assert_eq!(a, serial);
    }

    #[test]
    fn mean_flip_count() {
        // Flips form a Poisson process of rate gamma while the emitter waits:
        // E[n_flips] = gamma tau.
        let n = 100_000;
        let samples = simulate(&config(n, 0.05, 8));
        let flips: Vec<f64> = samples.iter().map(|s| s.n_flips as f64).collect();
        let mean = flips.iter().sum::<f64>() / n as f64;
        let var = flips.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / n as f64;
        assert!((mean - 0.6).abs() < 5.0 * (var / n as f64).sqrt(), "{mean}");
    }

    #[test]
    fn polarizer_acceptance() {
        let x_only = simulate(&config(20_000, 0.0, 2));
        let sw = empirical_polarizer_sweep(&x_only, 0.0, &[0.0, 90.0], 4).unwrap();
        assert_eq!(sw[0].1, 1.0);
        assert_eq!(sw[1].1, 0.0);

        let n = 20_000;
        let half: Vec<TrajectorySample> = (0..n)
            .map(|k| TrajectorySample {
                emission_time: 1.0,
                branch_at_emission: if k % 2 == 0 { Branch::X } else { Branch::Y },
                n_flips: 0,
            })
            .collect();
        let angles: Vec<f64> = (0..12).map(|k| 15.0 * k as f64).collect();
        for (_, r) in empirical_polarizer_sweep(&half, 0.0, &angles, 9).unwrap() {
            assert!((r - 0.5).abs() < 3.0 * binomial_sigma(0.5, n));
        }
        assert!(empirical_polarizer_sweep(&[], 0.0, &angles, 9).is_err());
    }

    #[test]
    fn ensemble_contrast_matches_branch_fractions() {
        let n = 100_000;
        let samples = simulate(&config(n, 0.05, 21));
        let fx = branch_fraction(&samples, Branch::X);
        let angles: Vec<f64> = (0..36).map(|k| 5.0 * k as f64).collect();
        let sweep = empirical_polarizer_sweep(&samples, 0.0, &angles, 22).unwrap();
        let fit = fit_cosine(&sweep).unwrap();
        let predicted = 2.0 * fx - 1.0;
        assert!((fit.contrast - predicted).abs() < 3.0 * fit.contrast_sigma(), "{} vs {predicted}", fit.contrast);
    }

    #[test]
    fn photon_counting_is_deterministic() {
        let cfg = config(1, 0.05, 13);
        let angles: Vec<f64> = (0..8).map(|k| 22.5 * k as f64).collect();
        let a = photon_counting_sweep(&cfg, 0.0, &angles, 8000.0).unwrap();
        assert_eq!(a, photon_counting_sweep(&cfg, 0.0, &angles, 8000.0).unwrap());
        let total: f64 = a.iter().map(|p| p.1).sum();
        // About half the photons pass an analyzer averaged over angles.
        assert!((total - 4000.0).abs() < 400.0);
    }
}
