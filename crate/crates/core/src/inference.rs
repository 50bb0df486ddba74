//! Cosine fits of polarizer sweeps and inversion of contrast to a
//! relaxation rate.
//!
//! Sweeps are fitted by linear least squares on the basis
//! `{1, cos 2θ, sin 2θ}`; Malus-law data has no 360-degree component. The
//! contrast is `sqrt(a1² + a2²) / a0` and its standard error comes from the
//! coefficient covariance by the first-order delta method. Confidence
//! intervals on `1/gamma` are the image of the contrast interval under the
//! (monotone) inversion, so they are approximate near `C -> 0` and `C -> 1`.

use nalgebra::{Matrix3, Vector3};

use crate::dynamics::{Averaging, EmissionModel, Weighting};
use crate::error::{Error, Result};

/// Two-sided 95 % normal quantile used for reported intervals.
pub const CONFIDENCE_Z: f64 = 1.959963984540054;

/// Contrasts below this many standard errors are reported as fully
/// unpolarized.
pub const UNPOLARIZED_SIGMAS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub contrast: f64,
    /// Angle of maximum intensity, degrees in `(-90, 90]`.
    pub phase: f64,
    pub residual_rms: f64,
    /// Covariance of `(a0, a1, a2)` scaled by the residual variance.
    pub covariance: Matrix3<f64>,
    pub n_points: usize,
}

impl FitResult {
    pub fn evaluate(&self, angle_deg: f64) -> f64 {
        let t = 2.0 * angle_deg.to_radians();
        self.a0 + self.a1 * t.cos() + self.a2 * t.sin()
    }

    /// Standard error of the contrast.
    pub fn contrast_sigma(&self) -> f64 {
        let r = self.a1.hypot(self.a2);
        let c = &self.covariance;
        if r == 0.0 {
            // Gradient undefined at zero amplitude; use the mean harmonic
            // variance instead.
            return (0.5 * (c[(1, 1)] + c[(2, 2)])).max(0.0).sqrt() / self.a0;
        }
        let g = Vector3::new(-r / (self.a0 * self.a0), self.a1 / (r * self.a0), self.a2 / (r * self.a0));
        (g.transpose() * c * g)[(0, 0)].max(0.0).sqrt()
    }

    pub fn exceeds_unity(&self) -> bool {
        self.contrast > 1.0
    }
}

fn distinct_half_turn_angles(data: &[(f64, f64)]) -> usize {
    let mut folded: Vec<f64> = data.iter().map(|&(a, _)| a.rem_euclid(180.0)).collect();
    folded.sort_by(f64::total_cmp);
    let mut count = 0;
    let mut last: Option<f64> = None;
    for a in folded {
        if last.is_none_or(|l| (a - l).abs() > 1e-9) {
            count += 1;
        }
        last = Some(a);
    }
    // 0 and 180 - eps describe the same polarizer orientation.
    if count > 1 {
        let lo = data.iter().map(|&(a, _)| a.rem_euclid(180.0)).fold(f64::INFINITY, f64::min);
        let hi = data.iter().map(|&(a, _)| a.rem_euclid(180.0)).fold(f64::NEG_INFINITY, f64::max);
        if 180.0 - hi + lo <= 1e-9 {
            count -= 1;
        }
    }
    count
}

/// Fits `I(θ) = a0 + a1 cos 2θ + a2 sin 2θ` to `(angle_deg, intensity)`.
pub fn fit_cosine(data: &[(f64, f64)]) -> Result<FitResult> {
    if data.len() < 4 {
        return Err(Error::DegenerateSampling(format!("need at least 4 points, got {}", data.len())));
    }
    if data.iter().any(|(a, i)| !a.is_finite() || !i.is_finite()) {
        return Err(Error::InvalidData("non-finite angle or intensity".into()));
    }
    if distinct_half_turn_angles(data) < 3 {
        return Err(Error::DegenerateSampling(
            "need at least 3 polarizer angles that differ modulo 180 degrees".into(),
        ));
    }

    let basis = |a: f64| {
        let t = 2.0 * a.to_radians();
        Vector3::new(1.0, t.cos(), t.sin())
    };
    let mut normal = Matrix3::zeros();
    let mut rhs = Vector3::zeros();
    for &(a, y) in data {
        let b = basis(a);
        normal += b * b.transpose();
        rhs += b * y;
    }
    let inverse = normal
        .try_inverse()
        .ok_or_else(|| Error::DegenerateSampling("singular normal equations".into()))?;
    let coef = inverse * rhs;
    let (a0, a1, a2) = (coef[0], coef[1], coef[2]);
    if !(a0 > 0.0) {
        return Err(Error::InvalidData(format!("mean intensity must be positive, fitted a0 = {a0}")));
    }

    let rss: f64 = data.iter().map(|&(a, y)| (y - basis(a).dot(&coef)).powi(2)).sum();
    let n = data.len();
    let dof = (n - 3) as f64;
    let covariance = inverse * (rss / dof);

    Ok(FitResult {
        a0,
        a1,
        a2,
        contrast: a1.hypot(a2) / a0,
        phase: fold_phase(0.5 * a2.atan2(a1).to_degrees()),
        residual_rms: (rss / n as f64).sqrt(),
        covariance,
        n_points: n,
    })
}

fn fold_phase(p: f64) -> f64 {
    let p = p.rem_euclid(180.0);
    if p > 90.0 {
        p - 180.0
    } else {
        p
    }
}

/// Relaxation rate inferred from a contrast.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaEstimate {
    /// 1/ns.
    pub gamma: f64,
    /// ns; infinite when `gamma == 0`.
    pub gamma_inv: f64,
    pub alpha: f64,
    pub contrast: f64,
    /// Interval on `gamma_inv`, ns.
    pub ci: Option<(f64, f64)>,
}

fn check_contrast(contrast: f64) -> Result<()> {
    if contrast.is_nan() || !(0.0..=1.0).contains(&contrast) {
        return Err(Error::InvalidData(format!("contrast must lie in [0, 1], got {contrast}")));
    }
    if contrast == 0.0 {
        return Err(Error::Unresolvable { contrast });
    }
    Ok(())
}

/// `acosh(1/c)` evaluated without cancellation for `c` near 1.
fn acosh_reciprocal(c: f64) -> f64 {
    let d = (1.0 - c) / c;
    if d > 1e150 {
        std::f64::consts::LN_2 - c.ln()
    } else {
        (d + (d * (d + 2.0)).sqrt()).ln_1p()
    }
}

/// Reduced rate `gamma * tau` producing `contrast` under `model`.
pub fn reduced_rate_for_contrast(contrast: f64, model: EmissionModel) -> Result<f64> {
    check_contrast(contrast)?;
    Ok(match (model.averaging, model.weighting) {
        (Averaging::AtLifetime, Weighting::Squared) => 0.5 * acosh_reciprocal(contrast),
        (Averaging::AtLifetime, Weighting::Linear) => -0.5 * contrast.ln(),
        (Averaging::Exponential, Weighting::Linear) => 0.5 * (1.0 - contrast) / contrast,
        (Averaging::Exponential, Weighting::Squared) => {
            let alpha = ((1.0 - contrast) / (1.0 + contrast)).sqrt();
            alpha / (1.0 - alpha)
        }
    })
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || tau.is_infinite() {
        return Err(Error::domain(format!("lifetime must be finite and > 0 ns, got {tau}")));
    }
    Ok(())
}

fn gamma_inv_for(contrast: f64, tau: f64, model: EmissionModel) -> Result<f64> {
    let x = reduced_rate_for_contrast(contrast, model)?;
    Ok(if x == 0.0 { f64::INFINITY } else { tau / x })
}

/// Inverts the default contrast law: `alpha = sqrt((1-C)/(1+C))`,
/// `gamma = artanh(alpha) / tau`.
pub fn invert_contrast(contrast: f64, tau: f64) -> Result<GammaEstimate> {
    invert_contrast_with(contrast, tau, EmissionModel::default())
}

pub fn invert_contrast_with(contrast: f64, tau: f64, model: EmissionModel) -> Result<GammaEstimate> {
    check_tau(tau)?;
    let x = reduced_rate_for_contrast(contrast, model)?;
    Ok(GammaEstimate {
        gamma: x / tau,
        gamma_inv: if x == 0.0 { f64::INFINITY } else { tau / x },
        alpha: model.alpha_reduced(x),
        contrast,
        ci: None,
    })
}

/// Inversion with an interval on `1/gamma` from the contrast standard error
/// `sigma`, at `z` standard errors.
pub fn estimate_gamma(contrast: f64, sigma: f64, tau: f64, model: EmissionModel, z: f64) -> Result<GammaEstimate> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidData(format!("contrast sigma must be >= 0, got {sigma}")));
    }
    let mut est = invert_contrast_with(contrast, tau, model)?;
    let lo_c = contrast - z * sigma;
    let hi_c = contrast + z * sigma;
    let lo = if lo_c <= 0.0 { 0.0 } else { gamma_inv_for(lo_c, tau, model)? };
    let hi = if hi_c >= 1.0 { f64::INFINITY } else { gamma_inv_for(hi_c, tau, model)? };
    est.ci = Some((lo, hi));
    Ok(est)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BatchFlag {
    Ok,
    /// Contrast within `UNPOLARIZED_SIGMAS` of zero.
    FullyUnpolarized,
    /// Fitted contrast above 1, only possible through noise.
    ContrastAboveOne,
    Failed(String),
}

impl std::fmt::Display for BatchFlag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BatchFlag::Ok => f.write_str("ok"),
            BatchFlag::FullyUnpolarized => f.write_str("fully_unpolarized"),
            BatchFlag::ContrastAboveOne => f.write_str("contrast_above_one"),
            BatchFlag::Failed(msg) => write!(f, "error: {}", msg.replace([',', '\n'], ";")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatchRow {
    pub id: String,
    pub contrast: f64,
    pub contrast_sigma: f64,
    pub gamma_inv: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub flag: BatchFlag,
}

impl BatchRow {
    fn failed(id: &str, err: &Error) -> Self {
        Self {
            id: id.to_string(),
            contrast: f64::NAN,
            contrast_sigma: f64::NAN,
            gamma_inv: f64::NAN,
            ci_low: f64::NAN,
            ci_high: f64::NAN,
            flag: BatchFlag::Failed(err.to_string()),
        }
    }
}

/// One polarizer sweep to be fitted.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepDataset {
    pub id: String,
    pub points: Vec<(f64, f64)>,
}

/// Fits and inverts every dataset; per-dataset failures become flagged rows.
pub fn batch_report(datasets: &[SweepDataset], tau: f64, model: EmissionModel) -> Vec<BatchRow> {
    datasets
        .iter()
        .map(|ds| report_one(ds, tau, model).unwrap_or_else(|e| BatchRow::failed(&ds.id, &e)))
        .collect()
}

fn report_one(ds: &SweepDataset, tau: f64, model: EmissionModel) -> Result<BatchRow> {
    check_tau(tau)?;
    let fit = fit_cosine(&ds.points)?;
    let c = fit.contrast;
    let sigma = fit.contrast_sigma();
    let mut row = BatchRow {
        id: ds.id.clone(),
        contrast: c,
        contrast_sigma: sigma,
        gamma_inv: f64::INFINITY,
        ci_low: 0.0,
        ci_high: f64::INFINITY,
        flag: BatchFlag::Ok,
    };
    if c > 1.0 {
        row.flag = BatchFlag::ContrastAboveOne;
        let lo_c = c - CONFIDENCE_Z * sigma;
        if lo_c > 0.0 && lo_c < 1.0 {
            row.ci_low = gamma_inv_for(lo_c, tau, model)?;
        }
        return Ok(row);
    }
    if c < UNPOLARIZED_SIGMAS * sigma {
        row.flag = BatchFlag::FullyUnpolarized;
    }
    if c == 0.0 {
        row.gamma_inv = 0.0;
        let hi_c = CONFIDENCE_Z * sigma;
        if hi_c > 0.0 && hi_c < 1.0 {
            row.ci_high = gamma_inv_for(hi_c, tau, model)?;
        }
        return Ok(row);
    }
    let est = estimate_gamma(c, sigma, tau, model, CONFIDENCE_Z)?;
    row.gamma_inv = est.gamma_inv;
    if let Some((lo, hi)) = est.ci {
        row.ci_low = lo;
        row.ci_high = hi;
    }
    Ok(row)
}
