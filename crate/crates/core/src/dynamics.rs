//! Excited-state population dynamics between the two orbital branches.
//!
//! With `p_x + p_y = 1` the rate equations reduce to one linear ODE,
//! `dp_x/dt = c_xy p_y - c_yx p_x`, which is solved in closed form. The
//! polarization contrast seen through a rotating polarizer then depends only
//! on the reduced rate `gamma * tau`.

use crate::error::{Error, Result};
use crate::model::{Branch, RateSet};

/// Branch occupation probabilities at time `t` (ns).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PopulationState {
    pub p_x: f64,
    pub p_y: f64,
    pub t: f64,
}

impl PopulationState {
    pub fn new(p_x: f64, t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_x) {
            return Err(Error::domain(format!("population must lie in [0, 1], got {p_x}")));
        }
        if !(t >= 0.0) {
            return Err(Error::domain(format!("time must be >= 0 ns, got {t}")));
        }
        Ok(Self { p_x, p_y: 1.0 - p_x, t })
    }

    /// All population in `branch` at `t = 0`.
    pub fn pumped(branch: Branch) -> Self {
        match branch {
            Branch::X => Self { p_x: 1.0, p_y: 0.0, t: 0.0 },
            Branch::Y => Self { p_x: 0.0, p_y: 1.0, t: 0.0 },
        }
    }

    pub fn population(&self, branch: Branch) -> f64 {
        match branch {
            Branch::X => self.p_x,
            Branch::Y => self.p_y,
        }
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0) || t.is_infinite() {
        return Err(Error::domain(format!("time must be finite and >= 0 ns, got {t}")));
    }
    Ok(())
}

fn check_rate(gamma: f64) -> Result<()> {
    if !(gamma >= 0.0) || gamma.is_infinite() {
        return Err(Error::domain(format!("rate must be finite and >= 0 /ns, got {gamma}")));
    }
    Ok(())
}

fn check_lifetime(tau: f64) -> Result<()> {
    if !(tau > 0.0) || tau.is_infinite() {
        return Err(Error::domain(format!("lifetime must be finite and > 0 ns, got {tau}")));
    }
    Ok(())
}

/// Evolves `initial` by `t` ns under arbitrary (possibly asymmetric) rates.
///
/// The returned time is `initial.t + t`. The relaxation rate is
/// `c_xy + c_yx` and the stationary upper-branch population is
/// `c_xy / (c_xy + c_yx)`.
pub fn evolve_general(rates: &RateSet, initial: &PopulationState, t: f64) -> Result<PopulationState> {
    check_time(t)?;
    if (initial.p_x + initial.p_y - 1.0).abs() > 1e-12 {
        return Err(Error::domain("initial populations do not sum to 1"));
    }
    let k = rates.total();
    if k == 0.0 {
        return Ok(PopulationState { t: initial.t + t, ..*initial });
    }
    let decay = (-k * t).exp();
    let px_inf = rates.c_xy / k;
    let py_inf = rates.c_yx / k;
    Ok(PopulationState {
        p_x: px_inf + (initial.p_x - px_inf) * decay,
        p_y: py_inf + (initial.p_y - py_inf) * decay,
        t: initial.t + t,
    })
}

/// Closed-form populations for equal rates `gamma` after pumping
/// `excited`: `(1 + exp(-2 gamma t))/2` in the pumped branch.
pub fn evolve_symmetric(gamma: f64, excited: Branch, t: f64) -> Result<PopulationState> {
    check_rate(gamma)?;
    check_time(t)?;
    let x = -2.0 * gamma * t;
    let pumped = 0.5 * (1.0 + x.exp());
    let other = -0.5 * x.exp_m1();
    Ok(match excited {
        Branch::X => PopulationState { p_x: pumped, p_y: other, t },
        Branch::Y => PopulationState { p_x: other, p_y: pumped, t },
    })
}

/// How the branch populations are averaged over the time before emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Averaging {
    /// Populations evaluated at `t = tau`.
    #[default]
    AtLifetime,
    /// Populations averaged over the exponential emission-time density.
    /// Not the default; gives `alpha = gamma tau / (1 + gamma tau)`.
    Exponential,
}

impl std::str::FromStr for Averaging {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "at-lifetime" | "lifetime" => Ok(Averaging::AtLifetime),
            "exponential" => Ok(Averaging::Exponential),
            other => Err(Error::domain(format!("unknown averaging '{other}'"))),
        }
    }
}

/// How average populations weight the two polarization components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Weighting {
    /// Intensity weights proportional to squared populations. Default.
    #[default]
    Squared,
    /// Intensity weights proportional to the populations themselves.
    Linear,
}

impl Weighting {
    /// Unnormalized intensity weight of a branch with mean population `p`.
    pub fn weight(self, p: f64) -> f64 {
        match self {
            Weighting::Squared => p * p,
            Weighting::Linear => p,
        }
    }
}

impl std::str::FromStr for Weighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(Weighting::Squared),
            "linear" => Ok(Weighting::Linear),
            other => Err(Error::domain(format!("unknown weighting '{other}'"))),
        }
    }
}

/// Mean populations before emission and their ratio `alpha` (minor over
/// major branch).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchAverages {
    pub mean_p_x: f64,
    pub mean_p_y: f64,
    pub alpha: f64,
    pub excited_branch: Branch,
}

impl BranchAverages {
    pub fn mean(&self, branch: Branch) -> f64 {
        match branch {
            Branch::X => self.mean_p_x,
            Branch::Y => self.mean_p_y,
        }
    }

    fn from_pumped(pumped: f64, other: f64, alpha: f64, excited_branch: Branch) -> Self {
        let (mean_p_x, mean_p_y) = match excited_branch {
            Branch::X => (pumped, other),
            Branch::Y => (other, pumped),
        };
        Self {
            mean_p_x,
            mean_p_y,
            alpha,
            excited_branch,
        }
    }
}

/// Populations at `t = tau` with `alpha = tanh(gamma tau)`.
pub fn branch_averages(gamma: f64, tau: f64, excited: Branch) -> Result<BranchAverages> {
    check_lifetime(tau)?;
    let p = evolve_symmetric(gamma, excited, tau)?;
    let alpha = (gamma * tau).tanh();
    Ok(BranchAverages::from_pumped(
        p.population(excited),
        p.population(excited.other()),
        alpha,
        excited,
    ))
}

/// Populations averaged over an exponential emission time of mean `tau`:
/// `(1 + 1/(1 + 2 gamma tau))/2` in the pumped branch.
pub fn exp_weighted_averages(gamma: f64, tau: f64, excited: Branch) -> Result<BranchAverages> {
    check_rate(gamma)?;
    check_lifetime(tau)?;
    let x = gamma * tau;
    let denom = 1.0 + 2.0 * x;
    let pumped = 0.5 * (1.0 + 1.0 / denom);
    let other = x / denom;
    Ok(BranchAverages::from_pumped(pumped, other, x / (1.0 + x), excited))
}

pub fn averages(gamma: f64, tau: f64, excited: Branch, averaging: Averaging) -> Result<BranchAverages> {
    match averaging {
        Averaging::AtLifetime => branch_averages(gamma, tau, excited),
        Averaging::Exponential => exp_weighted_averages(gamma, tau, excited),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::domain(format!("alpha must lie in [0, 1], got {alpha}")));
    }
    Ok(())
}

/// Polarizer contrast `(1 - alpha^2) / (1 + alpha^2)` for squared weights.
pub fn contrast_from_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok((1.0 - alpha) * (1.0 + alpha) / (1.0 + alpha * alpha))
}

/// Contrast for either weighting law; linear weights give
/// `(1 - alpha) / (1 + alpha)`.
pub fn contrast_from_alpha_with(alpha: f64, weighting: Weighting) -> Result<f64> {
    match weighting {
        Weighting::Squared => contrast_from_alpha(alpha),
        Weighting::Linear => {
            check_alpha(alpha)?;
            Ok((1.0 - alpha) / (1.0 + alpha))
        }
    }
}

/// Averaging and weighting laws together fix the map from the reduced rate
/// `gamma * tau` to the observable contrast.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EmissionModel {
    pub averaging: Averaging,
    pub weighting: Weighting,
}

impl EmissionModel {
    /// The photon-counting model: emission-time averaging with each photon
    /// counted once. This is what the Monte Carlo ensemble measures.
    pub const PHOTON_COUNTING: EmissionModel = EmissionModel {
        averaging: Averaging::Exponential,
        weighting: Weighting::Linear,
    };

    /// `alpha` as a function of `x = gamma * tau`.
    pub fn alpha_reduced(&self, x: f64) -> f64 {
        match self.averaging {
            Averaging::AtLifetime => x.tanh(),
            Averaging::Exponential => x / (1.0 + x),
        }
    }

    /// Contrast as a function of `x = gamma * tau`.
    ///
    /// Written directly in `x` rather than through `alpha`: when `alpha` is
    /// within a few ulp of 1 the detour loses all relative precision.
    /// For the default model this is `sech(2x)`.
    pub fn contrast_reduced(&self, x: f64) -> f64 {
        match (self.averaging, self.weighting) {
            (Averaging::AtLifetime, Weighting::Squared) => 1.0 / (2.0 * x).cosh(),
            (Averaging::AtLifetime, Weighting::Linear) => (-2.0 * x).exp(),
            (Averaging::Exponential, Weighting::Squared) => {
                let a = 1.0 + 2.0 * x;
                a / (a + 2.0 * x * x)
            }
            (Averaging::Exponential, Weighting::Linear) => 1.0 / (1.0 + 2.0 * x),
        }
    }

    pub fn contrast(&self, gamma: f64, tau: f64) -> Result<f64> {
        check_rate(gamma)?;
        check_lifetime(tau)?;
        Ok(self.contrast_reduced(gamma * tau))
    }
}

/// One row of the contrast/alpha versus relaxation-time table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Figure4Row {
    pub gamma_inv: f64,
    pub contrast: f64,
    pub alpha: f64,
}

/// Contrast and `alpha` for each `1/gamma` (ns) in `gamma_inv_grid` at
/// fixed lifetime `tau`.
pub fn figure4_table(tau: f64, gamma_inv_grid: &[f64]) -> Result<Vec<Figure4Row>> {
    figure4_table_with(tau, gamma_inv_grid, EmissionModel::default())
}

pub fn figure4_table_with(tau: f64, gamma_inv_grid: &[f64], model: EmissionModel) -> Result<Vec<Figure4Row>> {
    check_lifetime(tau)?;
    gamma_inv_grid
        .iter()
        .map(|&gamma_inv| {
            if !(gamma_inv > 0.0) {
                return Err(Error::domain(format!("1/gamma must be > 0 ns, got {gamma_inv}")));
            }
            let x = tau / gamma_inv;
            Ok(Figure4Row {
                gamma_inv,
                contrast: model.contrast_reduced(x),
                alpha: model.alpha_reduced(x),
            })
        })
        .collect()
}

/// `n` logarithmically spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::domain(format!("log grid needs 0 < lo <= hi, got [{lo}, {hi}]")));
    }
    Ok(match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            let step = (b - a) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { (a + step * i as f64).exp() })
                .collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rates_from_detailed_balance, ThermalBath};
    use proptest::prelude::*;

    /// Fixed-step RK4 on the full two-component system, independent of the
    /// closed forms above.
    fn rk4(rates: &RateSet, p0: (f64, f64), t: f64, steps: usize) -> (f64, f64) {
        let f = |(px, py): (f64, f64)| {
            let dx = rates.c_xy * py - rates.c_yx * px;
            (dx, -dx)
        };
        let h = t / steps as f64;
        let mut p = p0;
        for _ in 0..steps {
            let k1 = f(p);
            let k2 = f((p.0 + 0.5 * h * k1.0, p.1 + 0.5 * h * k1.1));
            let k3 = f((p.0 + 0.5 * h * k2.0, p.1 + 0.5 * h * k2.1));
            let k4 = f((p.0 + h * k3.0, p.1 + h * k3.1));
            p.0 += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
            p.1 += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
        }
        p
    }

    #[test]
    fn frozen_dynamics() {
        let rates = RateSet::new(0.0, 0.0).unwrap();
        let p = evolve_general(&rates, &PopulationState::pumped(Branch::X), 100.0).unwrap();
        assert_eq!((p.p_x, p.p_y, p.t), (1.0, 0.0, 100.0));
    }

    #[test]
    fn general_symmetric_at_lifetime() {
        let rates = RateSet::symmetric(0.05).unwrap();
        let p = evolve_general(&rates, &PopulationState::pumped(Branch::X), 12.0).unwrap();
        assert!((p.p_x - 0.650597).abs() < 1e-6);
        let (rx, _) = rk4(&rates, (1.0, 0.0), 12.0, 2000);
        assert!((p.p_x - rx).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_matches_rk4_and_steady_state() {
        let bath = ThermalBath::new(4.0).unwrap();
        let rates = rates_from_detailed_balance(0.05, 5.0, &bath).unwrap();
        let init = PopulationState::pumped(Branch::X);
        for t in [0.5, 3.0, 12.0, 40.0] {
            let p = evolve_general(&rates, &init, t).unwrap();
            let (rx, ry) = rk4(&rates, (1.0, 0.0), t, 4000);
            assert!((p.p_x - rx).abs() < 1e-11 && (p.p_y - ry).abs() < 1e-11, "t={t}");
        }
        let horizon = 50.0 / rates.c_yx.max(rates.c_xy);
        let p = evolve_general(&rates, &init, horizon).unwrap();
        assert!((p.p_x - rates.c_xy / rates.total()).abs() < 1e-9);
        assert!((p.p_x - 0.485006).abs() < 2e-6);
    }

    #[test]
    fn symmetric_values() {
        let p = evolve_symmetric(0.05, Branch::X, 12.0).unwrap();
        assert!((p.p_x - 0.650597).abs() < 1e-6);
        assert!((p.p_y - 0.349403).abs() < 1e-6);
        let p0 = evolve_symmetric(0.05, Branch::X, 0.0).unwrap();
        assert_eq!((p0.p_x, p0.p_y), (1.0, 0.0));
        let late = evolve_symmetric(0.05, Branch::X, 1e4).unwrap();
        assert_eq!((late.p_x, late.p_y), (0.5, 0.5));
        assert!(evolve_symmetric(-1.0, Branch::X, 1.0).is_err());
        assert!(evolve_symmetric(1.0, Branch::X, -1.0).is_err());
    }

    #[test]
    fn averages_and_alpha() {
        let a = branch_averages(1.0 / 20.0, 12.0, Branch::X).unwrap();
        assert!((a.alpha - 0.537050).abs() < 1e-6);
        assert!((a.alpha - a.mean_p_y / a.mean_p_x).abs() < 1e-12);
        assert_eq!(branch_averages(0.0, 12.0, Branch::X).unwrap().alpha, 0.0);
        let fast = branch_averages(1.0 / 3.0, 12.0, Branch::Y).unwrap();
        assert!((fast.alpha - 0.999329).abs() < 1e-6);
        assert!((fast.alpha - fast.mean_p_x / fast.mean_p_y).abs() < 1e-12);
        assert!(branch_averages(0.05, 0.0, Branch::X).is_err());
    }

    #[test]
    fn exponential_averages() {
        let a = exp_weighted_averages(0.05, 12.0, Branch::X).unwrap();
        assert!((a.mean_p_x - 0.727273).abs() < 1e-6);
        assert_eq!(exp_weighted_averages(0.0, 12.0, Branch::X).unwrap().mean_p_x, 1.0);
        let big = exp_weighted_averages(1e9, 12.0, Branch::X).unwrap();
        assert!((big.mean_p_x - 0.5).abs() < 1e-9);
        assert!((a.alpha - a.mean_p_y / a.mean_p_x).abs() < 1e-12);
        // Differs from the at-lifetime value at the same gamma tau.
        let b = branch_averages(0.05, 12.0, Branch::X).unwrap();
        assert!((b.mean_p_x - 0.650597).abs() < 1e-6);
    }

    /// Midpoint-rule quadrature of p_x(t) exp(-t/tau)/tau, independent of
    /// the closed form in `exp_weighted_averages`.
    #[test]
    fn exponential_average_matches_quadrature() {
        let (gamma, tau) = (0.05, 12.0);
        let n = 400_000;
        let t_max = 40.0 * tau;
        let h = t_max / n as f64;
        let mut acc = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) * h;
            acc += 0.5 * (1.0 + (-2.0 * gamma * t).exp()) * (-t / tau).exp() / tau * h;
        }
        let a = exp_weighted_averages(gamma, tau, Branch::X).unwrap();
        assert!((a.mean_p_x - acc).abs() < 1e-8);
    }

    #[test]
    fn contrast_law() {
        assert!((contrast_from_alpha(0.6f64.tanh()).unwrap() - 0.552287).abs() < 1e-6);
        assert_eq!(contrast_from_alpha(0.0).unwrap(), 1.0);
        assert_eq!(contrast_from_alpha(1.0).unwrap(), 0.0);
        assert!(contrast_from_alpha(1.1).is_err());
        assert!(contrast_from_alpha(-0.1).is_err());
        assert!(contrast_from_alpha_with(-0.1, Weighting::Linear).is_err());
    }

    #[test]
    fn reduced_contrast_agrees_with_alpha_route() {
        for averaging in [Averaging::AtLifetime, Averaging::Exponential] {
            for weighting in [Weighting::Squared, Weighting::Linear] {
                let m = EmissionModel { averaging, weighting };
                for x in [0.0, 0.01, 0.3, 0.6, 1.7, 4.0] {
                    let via_alpha = contrast_from_alpha_with(m.alpha_reduced(x), weighting).unwrap();
                    assert!((m.contrast_reduced(x) - via_alpha).abs() < 1e-12, "{m:?} x={x}");
                }
            }
        }
    }

    #[test]
    fn figure4_rows() {
        let rows = figure4_table(12.0, &[20.0, 3.0, 1e6]).unwrap();
        assert!((rows[0].contrast - 0.552287).abs() < 1e-6);
        assert!((rows[0].alpha - 0.537050).abs() < 1e-6);
        assert!((rows[1].contrast - 6.71e-4).abs() < 1e-6);
        assert!((1.0 - rows[2].contrast) < 1e-4);
        assert!(figure4_table(12.0, &[0.0]).is_err());
        assert!(figure4_table(12.0, &[]).unwrap().is_empty());
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1.0, 1000.0, 200).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!((g[0], g[199]), (1.0, 1000.0));
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        assert!(log_grid(0.0, 1.0, 3).is_err());
    }

    proptest! {
        #[test]
        fn closure_and_consistency(gamma in 0.0f64..2.0, t in 0.0f64..500.0) {
            let s = evolve_symmetric(gamma, Branch::X, t).unwrap();
            prop_assert!((s.p_x + s.p_y - 1.0).abs() <= 1e-12);
            let g = evolve_general(&RateSet::symmetric(gamma).unwrap(), &PopulationState::pumped(Branch::X), t).unwrap();
            prop_assert!((g.p_x - s.p_x).abs() <= 1e-12);
            prop_assert!((g.p_y - s.p_y).abs() <= 1e-12);
        }

        #[test]
        fn general_closure(cxy in 0.0f64..1.0, cyx in 0.0f64..1.0, p0 in 0.0f64..=1.0, t in 0.0f64..200.0) {
            let rates = RateSet::new(cxy, cyx).unwrap();
            let p = evolve_general(&rates, &PopulationState::new(p0, 0.0).unwrap(), t).unwrap();
            prop_assert!((p.p_x + p.p_y - 1.0).abs() <= 1e-12);
            prop_assert!((0.0..=1.0).contains(&p.p_x));
        }

        #[test]
        fn pump_symmetry(gamma in 0.0f64..2.0, t in 0.0f64..100.0) {
            let x = evolve_symmetric(gamma, Branch::X, t).unwrap();
            let y = evolve_symmetric(gamma, Branch::Y, t).unwrap();
            prop_assert_eq!((x.p_x, x.p_y), (y.p_y, y.p_x));
            let ax = branch_averages(gamma, 12.0, Branch::X).unwrap();
            let ay = branch_averages(gamma, 12.0, Branch::Y).unwrap();
            prop_assert_eq!((ax.mean_p_x, ax.mean_p_y, ax.alpha), (ay.mean_p_y, ay.mean_p_x, ay.alpha));
        }

        #[test]
        fn contrast_decreasing_in_alpha(a in 0.0f64..0.999, da in 1e-4f64..1e-3) {
            prop_assert!(contrast_from_alpha(a + da).unwrap() < contrast_from_alpha(a).unwrap());
        }
    }
}
