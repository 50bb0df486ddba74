//! Excitation spectra: one Lorentzian per spin-conserving transition,
//! scaled by the dipole projection of the laser polarization.

use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Branch, LevelModel, SpinState};
use crate::optics::excitation_efficiency;
use crate::rng::{self, Domain};

/// Relative line strengths: the S_z lines are the strongest.
pub const SZ_AMPLITUDE: f64 = 1.0;
pub const SPIN_FLIP_PRONE_AMPLITUDE: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumLine {
    /// GHz detuning.
    pub center: f64,
    /// MHz.
    pub fwhm: f64,
    pub amplitude: f64,
    pub branch: Branch,
    pub spin: SpinState,
}

impl SpectrumLine {
    /// The S_z line of each branch is the one selected for polarization work.
    pub fn is_star(&self) -> bool {
        self.spin == SpinState::Sz
    }

    /// Peak-normalized Lorentzian at `f` GHz (value 1 at the centre).
    pub fn profile(&self, f: f64) -> f64 {
        let hwhm = 0.5e-3 * self.fwhm;
        let d = f - self.center;
        hwhm * hwhm / (d * d + hwhm * hwhm)
    }

    /// Integral of `amplitude * profile` over all frequencies, GHz.
    pub fn area(&self) -> f64 {
        self.amplitude * std::f64::consts::PI * 0.5e-3 * self.fwhm
    }
}

/// Six lines, three per branch, in `[Sx, Sy, Sz]` order within a branch.
pub fn build_lines(model: &LevelModel) -> Vec<SpectrumLine> {
    [Branch::Y, Branch::X]
        .into_iter()
        .flat_map(|branch| {
            let base = model.branch_center(branch);
            let offsets = model.spin_offsets(branch);
            SpinState::ALL.into_iter().zip(offsets).map(move |(spin, off)| SpectrumLine {
                center: base + off,
                fwhm: model.linewidth_mhz(),
                amplitude: if spin == SpinState::Sz { SZ_AMPLITUDE } else { SPIN_FLIP_PRONE_AMPLITUDE },
                branch,
                spin,
            })
        })
        .collect()
}

pub fn star_line(lines: &[SpectrumLine], branch: Branch) -> Option<&SpectrumLine> {
    lines.iter().find(|l| l.branch == branch && l.is_star())
}

/// Laser frequency sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPlan {
    pub f_start: f64,
    pub f_stop: f64,
    pub n_points: usize,
    pub laser_angle: f64,
    /// Laser drift, MHz per sweep; sweep `k` is offset by `k * drift_rate`.
    pub drift_rate: f64,
    /// Photon counts per unit signal for Poisson sampling; 0 is noiseless.
    pub noise: f64,
}

impl SweepPlan {
    pub fn new(f_start: f64, f_stop: f64, n_points: usize, laser_angle: f64) -> Result<Self> {
        if !(f_start < f_stop) || !f_start.is_finite() || !f_stop.is_finite() {
            return Err(Error::domain(format!("sweep needs f_start < f_stop, got [{f_start}, {f_stop}]")));
        }
        if n_points < 2 {
            return Err(Error::domain(format!("sweep needs at least 2 points, got {n_points}")));
        }
        Ok(Self {
            f_start,
            f_stop,
            n_points,
            laser_angle,
            drift_rate: 0.0,
            noise: 0.0,
        })
    }

    pub fn with_drift(mut self, mhz_per_sweep: f64) -> Self {
        self.drift_rate = mhz_per_sweep;
        self
    }

    pub fn with_noise(mut self, counts_scale: f64) -> Result<Self> {
        if !(counts_scale >= 0.0) || counts_scale.is_infinite() {
            return Err(Error::domain(format!("noise scale must be >= 0, got {counts_scale}")));
        }
        self.noise = counts_scale;
        Ok(self)
    }

    pub fn with_laser_angle(mut self, degrees: f64) -> Self {
        self.laser_angle = degrees;
        self
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let step = (self.f_stop - self.f_start) / (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|i| if i == self.n_points - 1 { self.f_stop } else { self.f_start + step * i as f64 })
            .collect()
    }
}

/// One laser sweep, `(frequency GHz, counts)`. `sweep_index` sets the drift
/// offset and selects the noise stream.
pub fn spectrum(
    plan: &SweepPlan,
    lines: &[SpectrumLine],
    model: &LevelModel,
    sweep_index: u64,
    seed: u64,
) -> Vec<(f64, f64)> {
    let shift = 1e-3 * plan.drift_rate * sweep_index as f64;
    let weights: Vec<f64> = lines
        .iter()
        .map(|l| l.amplitude * excitation_efficiency(plan.laser_angle, model.dipole_angle(l.branch)))
        .collect();
    let mut rng = (plan.noise > 0.0).then(|| rng::stream(seed, Domain::Spectrum, sweep_index));
    plan.frequencies()
        .into_iter()
        .map(|f| {
            let signal: f64 = lines.iter().zip(&weights).map(|(l, w)| w * l.profile(f - shift)).sum();
            let counts = match rng.as_mut() {
                Some(r) => poisson(plan.noise * signal, r),
                None => signal,
            };
            (f, counts)
        })
        .collect()
}

fn poisson(mean: f64, rng: &mut impl rand::Rng) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    Poisson::new(mean).map(|d| d.sample(rng)).unwrap_or(mean)
}

/// Spectra recorded while rotating the laser polarization.
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulation {
    pub angles: Vec<f64>,
    pub frequencies: Vec<f64>,
    /// `rows[k][j]`: counts at `angles[k]`, `frequencies[j]`.
    pub rows: Vec<Vec<f64>>,
}

impl Accumulation {
    /// Trapezoid integral of each row over frequency.
    pub fn integrated(&self) -> Vec<f64> {
        self.rows.iter().map(|row| trapezoid(&self.frequencies, row)).collect()
    }

    /// Line centre per row; `None` where the row carries no signal.
    pub fn fitted_centers(&self) -> Vec<Option<f64>> {
        self.rows.iter().map(|row| fit_line_center(&self.frequencies, row)).collect()
    }

    /// `(angle, integrated counts)` pairs, ready for a cosine fit.
    pub fn modulation(&self) -> Vec<(f64, f64)> {
        self.angles.iter().copied().zip(self.integrated()).collect()
    }
}

pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    x.windows(2).zip(y.windows(2)).map(|(xs, ys)| 0.5 * (xs[1] - xs[0]) * (ys[0] + ys[1])).sum()
}

/// Centre of a single Lorentzian from the three samples around the maximum.
/// `1/L(f)` is quadratic in `f`, so the vertex of the parabola through the
/// reciprocals is exact for noiseless data.
pub fn fit_line_center(freqs: &[f64], counts: &[f64]) -> Option<f64> {
    let (k, &peak) = counts.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
    if !(peak > 0.0) || freqs.len() < 3 {
        return None;
    }
    let k = k.clamp(1, freqs.len() - 2);
    let (x0, x1, x2) = (freqs[k - 1], freqs[k], freqs[k + 1]);
    let (y0, y1, y2) = (counts[k - 1], counts[k], counts[k + 1]);
    if !(y0 > 0.0 && y1 > 0.0 && y2 > 0.0) {
        return Some(x1);
    }
    let (r0, r1, r2) = (1.0 / y0, 1.0 / y1, 1.0 / y2);
    let d01 = (r1 - r0) / (x1 - x0);
    let d12 = (r2 - r1) / (x2 - x1);
    let curvature = (d12 - d01) / (x2 - x0);
    if !(curvature > 0.0) {
        return Some(x1);
    }
    Some(0.5 * (x0 + x1) - 0.5 * d01 / curvature)
}

/// Spectra around `line` for each laser angle. The plan's frequency window
/// is relative to the line centre; row `k` uses sweep index `k`, so drift
/// accumulates linearly down the rows.
pub fn polarization_accumulation(
    template: &SweepPlan,
    angles: &[f64],
    line: &SpectrumLine,
    lines: &[SpectrumLine],
    model: &LevelModel,
    seed: u64,
) -> Result<Accumulation> {
    if angles.len() < 4 {
        return Err(Error::DegenerateSampling(format!(
            "accumulation needs at least 4 laser angles, got {}",
            angles.len()
        )));
    }
    let window = SweepPlan {
        f_start: line.center + template.f_start,
        f_stop: line.center + template.f_stop,
        ..*template
    };
    let rows: Vec<Vec<f64>> = angles
        .par_iter()
        .enumerate()
        .map(|(k, &angle)| {
            let plan = window.with_laser_angle(angle);
            spectrum(&plan, lines, model, k as u64, seed).into_iter().map(|(_, c)| c).collect()
        })
        .collect();
    Ok(Accumulation {
        angles: angles.to_vec(),
        frequencies: window.frequencies(),
        rows,
    })
}
