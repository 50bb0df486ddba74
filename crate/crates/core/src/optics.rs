//! Polarization optics for partially polarized light.
//!
//! Emission from the two branches is an incoherent mixture of two
//! orthogonal linear polarizations, so the light is carried as a Stokes
//! vector and optical elements as Mueller matrices. Angles are measured
//! counterclockwise from the lab x axis.
//!
//! Rotated elements use the sandwich `M(θ) = R(-θ) M₀ R(θ)` with the frame
//! rotation
//!
//! ```text
//! R(θ) = | 1    0        0     0 |
//!        | 0  cos 2θ   sin 2θ  0 |
//!        | 0 -sin 2θ   cos 2θ  0 |
//!        | 0    0        0     1 |
//! ```

use nalgebra::{Matrix4, Vector4};

use crate::dynamics::{BranchAverages, Weighting};
use crate::error::{Error, Result};
use crate::inference::fit_cosine;
use crate::model::LevelModel;

/// Sign of V produced by a quarter-wave plate with fast axis at +45 degrees
/// acting on +Q light. With `+1`, `(1, q, 0, 0) -> (1, 0, 0, +q)`.
pub const RETARDER_V_SIGN: f64 = 1.0;

/// Polarizer angles used when a sweep must be synthesized internally
/// (QWP scans): 0 to 175 degrees in 5 degree steps.
pub fn default_polarizer_angles() -> Vec<f64> {
    (0..36).map(|i| 5.0 * i as f64).collect()
}

const PHYSICALITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesVector {
    pub i: f64,
    pub q: f64,
    pub u: f64,
    pub v: f64,
}

impl StokesVector {
    pub fn new(i: f64, q: f64, u: f64, v: f64) -> Result<Self> {
        let s = Self { i, q, u, v };
        s.check()?;
        Ok(s)
    }

    pub fn unpolarized() -> Self {
        Self { i: 1.0, q: 0.0, u: 0.0, v: 0.0 }
    }

    /// Unit intensity with linear polarization degree `dop` along `angle_deg`.
    pub fn linear(angle_deg: f64, dop: f64) -> Result<Self> {
        let t = 2.0 * angle_deg.to_radians();
        Self::new(1.0, dop * t.cos(), dop * t.sin(), 0.0)
    }

    fn check(&self) -> Result<()> {
        let Self { i, q, u, v } = *self;
        if ![i, q, u, v].iter().all(|x| x.is_finite()) {
            return Err(Error::domain("Stokes components must be finite"));
        }
        if i < 0.0 {
            return Err(Error::domain(format!("Stokes intensity must be >= 0, got {i}")));
        }
        if (q * q + u * u + v * v).sqrt() > i * (1.0 + PHYSICALITY_TOL) + 1e-15 {
            return Err(Error::domain(format!("non-physical Stokes vector ({i}, {q}, {u}, {v})")));
        }
        Ok(())
    }

    pub fn polarized_intensity(&self) -> f64 {
        (self.q * self.q + self.u * self.u + self.v * self.v).sqrt()
    }

    pub fn degree_of_polarization(&self) -> f64 {
        if self.i == 0.0 {
            0.0
        } else {
            self.polarized_intensity() / self.i
        }
    }

    pub fn degree_of_linear_polarization(&self) -> f64 {
        if self.i == 0.0 {
            0.0
        } else {
            self.q.hypot(self.u) / self.i
        }
    }

    fn as_vector(&self) -> Vector4<f64> {
        Vector4::new(self.i, self.q, self.u, self.v)
    }

    fn from_vector(v: Vector4<f64>) -> Self {
        Self { i: v[0], q: v[1], u: v[2], v: v[3] }
    }
}

/// Optical elements. Imperfection parameters default to zero (ideal).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuellerElement {
    /// Linear polarizer; `extinction` is the intensity transmission of the
    /// blocked axis relative to the pass axis.
    LinearPolarizer { axis_deg: f64, extinction: f64 },
    /// Quarter-wave plate; `retardance_error_deg` is added to the nominal
    /// 90 degree retardance.
    QuarterWavePlate { fast_axis_deg: f64, retardance_error_deg: f64 },
    /// Rotates the polarization state by `angle_deg` counterclockwise.
    Rotation { angle_deg: f64 },
}

fn frame_rotation(angle_deg: f64) -> Matrix4<f64> {
    let (s, c) = (2.0 * angle_deg.to_radians()).sin_cos();
    Matrix4::new(
        1.0, 0.0, 0.0, 0.0, //
        0.0, c, s, 0.0, //
        0.0, -s, c, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

impl MuellerElement {
    pub fn polarizer(axis_deg: f64) -> Self {
        MuellerElement::LinearPolarizer { axis_deg, extinction: 0.0 }
    }

    pub fn quarter_wave_plate(fast_axis_deg: f64) -> Self {
        MuellerElement::QuarterWavePlate { fast_axis_deg, retardance_error_deg: 0.0 }
    }

    pub fn rotation(angle_deg: f64) -> Self {
        MuellerElement::Rotation { angle_deg }
    }

    pub fn matrix(&self) -> Matrix4<f64> {
        match *self {
            MuellerElement::LinearPolarizer { axis_deg, extinction } => {
                let e = extinction.clamp(0.0, 1.0);
                let (p, m, x) = (0.5 * (1.0 + e), 0.5 * (1.0 - e), e.sqrt());
                let m0 = Matrix4::new(
                    p, m, 0.0, 0.0, //
                    m, p, 0.0, 0.0, //
                    0.0, 0.0, x, 0.0, //
                    0.0, 0.0, 0.0, x,
                );
                frame_rotation(-axis_deg) * m0 * frame_rotation(axis_deg)
            }
            MuellerElement::QuarterWavePlate { fast_axis_deg, retardance_error_deg } => {
                let (s, c) = (90.0 + retardance_error_deg).to_radians().sin_cos();
                let s = RETARDER_V_SIGN * s;
                let m0 = Matrix4::new(
                    1.0, 0.0, 0.0, 0.0, //
                    0.0, 1.0, 0.0, 0.0, //
                    0.0, 0.0, c, s, //
                    0.0, 0.0, -s, c,
                );
                frame_rotation(-fast_axis_deg) * m0 * frame_rotation(fast_axis_deg)
            }
            MuellerElement::Rotation { angle_deg } => frame_rotation(-angle_deg),
        }
    }
}

/// Applies `chain` in order: the first element acts first.
pub fn propagate(stokes: &StokesVector, chain: &[MuellerElement]) -> Result<StokesVector> {
    stokes.check()?;
    let out = chain.iter().fold(stokes.as_vector(), |s, el| el.matrix() * s);
    Ok(StokesVector::from_vector(out))
}

/// Malus-law excitation efficiency `cos²(laser - dipole)`.
pub fn excitation_efficiency(laser_angle_deg: f64, dipole_angle_deg: f64) -> f64 {
    (laser_angle_deg - dipole_angle_deg).to_radians().cos().powi(2)
}

/// Incoherent mixture of light polarized along the two dipoles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmissionMixture {
    pub weight_x: f64,
    pub weight_y: f64,
    pub dipole_x_angle: f64,
}

impl EmissionMixture {
    /// Normalizes `(weight_x, weight_y)` to unit sum.
    pub fn new(weight_x: f64, weight_y: f64, dipole_x_angle: f64) -> Result<Self> {
        if !(weight_x >= 0.0 && weight_y >= 0.0) || !(weight_x + weight_y > 0.0) {
            return Err(Error::domain("mixture weights must be >= 0 with a positive sum"));
        }
        let total = weight_x + weight_y;
        Ok(Self {
            weight_x: weight_x / total,
            weight_y: weight_y / total,
            dipole_x_angle,
        })
    }
}

/// Intensity weights from branch averages. The default `Weighting::Squared`
/// gives `I(θ) ∝ <p_x>² cos²θ + <p_y>² sin²θ`.
pub fn emission_mixture(averages: &BranchAverages, model: &LevelModel, weighting: Weighting) -> Result<EmissionMixture> {
    EmissionMixture::new(
        weighting.weight(averages.mean_p_x),
        weighting.weight(averages.mean_p_y),
        model.dipole_x_angle(),
    )
}

pub fn mixture_to_stokes(mix: &EmissionMixture) -> StokesVector {
    let in_dipole_frame = StokesVector {
        i: 1.0,
        q: mix.weight_x - mix.weight_y,
        u: 0.0,
        v: 0.0,
    };
    StokesVector::from_vector(MuellerElement::rotation(mix.dipole_x_angle).matrix() * in_dipole_frame.as_vector())
}

fn check_sweep_angles(angles: &[f64]) -> Result<()> {
    let mut sorted: Vec<f64> = angles.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if sorted.len() < 4 {
        return Err(Error::DegenerateSampling(format!(
            "polarizer sweep needs at least 4 distinct angles, got {}",
            sorted.len()
        )));
    }
    Ok(())
}

/// Transmitted intensity for each polarizer angle, optionally behind a
/// quarter-wave plate at `qwp_angle`.
pub fn polarizer_sweep(stokes: &StokesVector, qwp_angle: Option<f64>, angles: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_sweep_angles(angles)?;
    stokes.check()?;
    let after_qwp = match qwp_angle {
        Some(a) => propagate(stokes, &[MuellerElement::quarter_wave_plate(a)])?,
        None => *stokes,
    };
    angles
        .iter()
        .map(|&theta| Ok((theta, propagate(&after_qwp, &[MuellerElement::polarizer(theta)])?.i)))
        .collect()
}

/// Fitted polarizer contrast behind a quarter-wave plate at each angle.
pub fn qwp_contrast_scan(stokes: &StokesVector, qwp_angles: &[f64]) -> Result<Vec<(f64, f64)>> {
    let polarizer_angles = default_polarizer_angles();
    qwp_angles
        .iter()
        .map(|&qwp| {
            let sweep = polarizer_sweep(stokes, Some(qwp), &polarizer_angles)?;
            Ok((qwp, fit_cosine(&sweep)?.contrast))
        })
        .collect()
}

/// A fully polarized elliptical state whose linear part matches `mixture`:
/// `(1, q, u, v)` with `v = sqrt(1 - q² - u²)`. This is the coherent
/// alternative to the incoherent-mixture explanation of a reduced contrast.
pub fn elliptical_counterpart(mixture: &StokesVector) -> Result<StokesVector> {
    let lin = mixture.degree_of_linear_polarization();
    let (q, u) = if mixture.i > 0.0 { (mixture.q / mixture.i, mixture.u / mixture.i) } else { (0.0, 0.0) };
    StokesVector::new(1.0, q, u, (1.0 - lin * lin).max(0.0).sqrt())
}

/// Regular grid `start, start+step, ...` up to and including `stop`.
pub fn degree_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::domain(format!("invalid angle grid {start}:{stop}:{step}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + step * i as f64).collect())
}
