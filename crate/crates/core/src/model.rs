//! Level structure of the two-branch emitter and thermal-bath rates.
//!
//! Units are fixed across the crate: GHz for frequencies and splittings, ns
//! for times (rates in 1/ns), K for temperature, degrees at public
//! interfaces. Linewidths are the one exception and are given in MHz.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Boltzmann constant over Planck constant, GHz/K (CODATA).
pub const BOLTZMANN_OVER_PLANCK_GHZ_PER_K: f64 = 20.836619;

/// Default branch splitting, GHz.
pub const DEFAULT_DELTA_GHZ: f64 = 5.0;
/// Default radiative lifetime, ns.
pub const DEFAULT_TAU_NS: f64 = 12.0;
/// Default bath temperature, K.
pub const DEFAULT_TEMPERATURE_K: f64 = 4.0;

/// Placeholder spin-line offsets, GHz, in `[Sx, Sy, Sz]` order. Illustrative
/// only; real positions depend on the defect and should come from config.
pub const DEFAULT_SPIN_OFFSETS_X_GHZ: [f64; 3] = [-1.2, 0.0, 1.1];
pub const DEFAULT_SPIN_OFFSETS_Y_GHZ: [f64; 3] = [-1.0, 0.0, 0.9];

/// Excited-state orbital branch. `X` is the upper branch, `Y` the lower one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Branch {
    X,
    Y,
}

impl Branch {
    pub fn other(self) -> Branch {
        match self {
            Branch::X => Branch::Y,
            Branch::Y => Branch::X,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::X => "X",
            Branch::Y => "Y",
        }
    }
}

impl std::str::FromStr for Branch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "x" | "X" | "upper" => Ok(Branch::X),
            "y" | "Y" | "lower" => Ok(Branch::Y),
            other => Err(Error::domain(format!("unknown branch '{other}' (expected x or y)"))),
        }
    }
}

/// Spin projection of a line; transitions are spin-conserving so one label
/// covers both ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SpinState {
    Sx,
    Sy,
    Sz,
}

impl SpinState {
    pub const ALL: [SpinState; 3] = [SpinState::Sx, SpinState::Sy, SpinState::Sz];
}

/// Lifetime-limited FWHM in MHz for a radiative lifetime in ns.
pub fn natural_linewidth_mhz(tau_ns: f64) -> f64 {
    1.0e3 / (2.0 * PI * tau_ns)
}

/// Static parameters of one emitter.
///
/// The y dipole is not stored: it is always the x dipole plus 90 degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelModel {
    delta: f64,
    tau: f64,
    zpl_detuning: f64,
    dipole_x_angle: f64,
    spin_offsets_x: [f64; 3],
    spin_offsets_y: [f64; 3],
    linewidth_mhz: f64,
}

impl LevelModel {
    /// Builds a model with default dipole orientation (0 degrees), default
    /// spin offsets and a lifetime-limited linewidth.
    pub fn new(delta_ghz: f64, tau_ns: f64) -> Result<Self> {
        if !(delta_ghz > 0.0 && delta_ghz.is_finite()) {
            return Err(Error::domain(format!("branch splitting must be > 0 GHz, got {delta_ghz}")));
        }
        if !(tau_ns > 0.0 && tau_ns.is_finite()) {
            return Err(Error::domain(format!("radiative lifetime must be > 0 ns, got {tau_ns}")));
        }
        Ok(Self {
            delta: delta_ghz,
            tau: tau_ns,
            zpl_detuning: 0.0,
            dipole_x_angle: 0.0,
            spin_offsets_x: DEFAULT_SPIN_OFFSETS_X_GHZ,
            spin_offsets_y: DEFAULT_SPIN_OFFSETS_Y_GHZ,
            linewidth_mhz: natural_linewidth_mhz(tau_ns),
        })
    }

    pub fn with_dipole_x_angle(mut self, degrees: f64) -> Result<Self> {
        if !degrees.is_finite() {
            return Err(Error::domain("dipole angle must be finite"));
        }
        self.dipole_x_angle = degrees;
        Ok(self)
    }

    pub fn with_linewidth_mhz(mut self, fwhm_mhz: f64) -> Result<Self> {
        if !(fwhm_mhz > 0.0 && fwhm_mhz.is_finite()) {
            return Err(Error::domain(format!("linewidth must be > 0 MHz, got {fwhm_mhz}")));
        }
        self.linewidth_mhz = fwhm_mhz;
        Ok(self)
    }

    pub fn with_zpl_detuning(mut self, ghz: f64) -> Result<Self> {
        if !ghz.is_finite() {
            return Err(Error::domain("zpl detuning must be finite"));
        }
        self.zpl_detuning = ghz;
        Ok(self)
    }

    /// Spin-line offsets in `[Sx, Sy, Sz]` order for each branch.
    pub fn with_spin_offsets(mut self, x_ghz: [f64; 3], y_ghz: [f64; 3]) -> Result<Self> {
        if x_ghz.iter().chain(&y_ghz).any(|v| !v.is_finite()) {
            return Err(Error::domain("spin offsets must be finite"));
        }
        self.spin_offsets_x = x_ghz;
        self.spin_offsets_y = y_ghz;
        Ok(self)
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn zpl_detuning(&self) -> f64 {
        self.zpl_detuning
    }

    pub fn linewidth_mhz(&self) -> f64 {
        self.linewidth_mhz
    }

    pub fn dipole_x_angle(&self) -> f64 {
        self.dipole_x_angle
    }

    pub fn dipole_y_angle(&self) -> f64 {
        self.dipole_x_angle + 90.0
    }

    pub fn dipole_angle(&self, branch: Branch) -> f64 {
        match branch {
            Branch::X => self.dipole_x_angle(),
            Branch::Y => self.dipole_y_angle(),
        }
    }

    pub fn spin_offsets(&self, branch: Branch) -> [f64; 3] {
        match branch {
            Branch::X => self.spin_offsets_x,
            Branch::Y => self.spin_offsets_y,
        }
    }

    /// Centre of a branch before spin offsets: the upper branch sits at
    /// `+delta/2`, the lower at `-delta/2` around the ZPL origin.
    pub fn branch_center(&self, branch: Branch) -> f64 {
        match branch {
            Branch::X => self.zpl_detuning + 0.5 * self.delta,
            Branch::Y => self.zpl_detuning - 0.5 * self.delta,
        }
    }
}

/// Returns `kT/h` in GHz.
pub fn thermal_frequency(temperature_k: f64) -> Result<f64> {
    if !(temperature_k > 0.0 && temperature_k.is_finite()) {
        return Err(Error::domain(format!("temperature must be > 0 K, got {temperature_k}")));
    }
    Ok(BOLTZMANN_OVER_PLANCK_GHZ_PER_K * temperature_k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalBath {
    temperature: f64,
    thermal_frequency: f64,
}

impl ThermalBath {
    pub fn new(temperature_k: f64) -> Result<Self> {
        Ok(Self {
            temperature: temperature_k,
            thermal_frequency: thermal_frequency(temperature_k)?,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    /// `kT/h`, GHz.
    pub fn thermal_frequency(&self) -> f64 {
        self.thermal_frequency
    }
}

/// `exp(-delta / kT)`, in `(0, 1]`.
pub fn boltzmann_factor(delta_ghz: f64, bath: &ThermalBath) -> Result<f64> {
    if !(delta_ghz >= 0.0) || delta_ghz.is_infinite() {
        return Err(Error::domain(format!("splitting must be >= 0 GHz, got {delta_ghz}")));
    }
    Ok((-delta_ghz / bath.thermal_frequency()).exp())
}

/// Bath-induced transition rates between the branches, 1/ns.
///
/// `c_xy` feeds the upper branch from the lower one, `c_yx` the reverse.
/// `gamma` is the symmetric rate used when `kT >> delta`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateSet {
    pub c_xy: f64,
    pub c_yx: f64,
    pub gamma: f64,
}

impl RateSet {
    pub fn new(c_xy: f64, c_yx: f64) -> Result<Self> {
        for (name, v) in [("c_xy", c_xy), ("c_yx", c_yx)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("rate {name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(Self {
            c_xy,
            c_yx,
            gamma: 0.5 * (c_xy + c_yx),
        })
    }

    pub fn symmetric(gamma: f64) -> Result<Self> {
        let mut rates = Self::new(gamma, gamma)?;
        rates.gamma = gamma;
        Ok(rates)
    }

    /// Rate of leaving `branch`.
    pub fn rate_out(&self, branch: Branch) -> f64 {
        match branch {
            Branch::X => self.c_yx,
            Branch::Y => self.c_xy,
        }
    }

    pub fn total(&self) -> f64 {
        self.c_xy + self.c_yx
    }
}

/// Down rate `gamma_down` from the upper branch; the up rate follows from
/// detailed balance, `c_xy = c_yx * exp(-delta/kT)`.
pub fn rates_from_detailed_balance(gamma_down: f64, delta_ghz: f64, bath: &ThermalBath) -> Result<RateSet> {
    let factor = boltzmann_factor(delta_ghz, bath)?;
    let mut rates = RateSet::new(gamma_down * factor, gamma_down)?;
    rates.gamma = gamma_down;
    Ok(rates)
}
