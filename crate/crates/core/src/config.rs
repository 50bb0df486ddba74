//! Flat `key = value` emitter configuration.
//!
//! ```text
//! # one emitter
//! delta_ghz = 5
//! tau_ns = 12
//! temperature_k = 4
//! gamma_per_ns = 0.05
//! dipole_x_deg = 0
//! linewidth_mhz = 13.26
//! spin_offsets_x_ghz = -1.2, 0, 1.1
//! spin_offsets_y_ghz = -1.0, 0, 0.9
//! ```
//!
//! Unknown keys are rejected. Spin offsets are in `[Sx, Sy, Sz]` order.

use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::{
    natural_linewidth_mhz, LevelModel, ThermalBath, DEFAULT_DELTA_GHZ, DEFAULT_SPIN_OFFSETS_X_GHZ,
    DEFAULT_SPIN_OFFSETS_Y_GHZ, DEFAULT_TAU_NS, DEFAULT_TEMPERATURE_K,
};

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "NV_POLARIMETRY_CONFIG";

/// Default symmetric relaxation rate, 1/ns (`1/gamma = 20 ns`).
pub const DEFAULT_GAMMA_PER_NS: f64 = 0.05;

/// Raw emitter parameters before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct EmitterConfig {
    pub delta_ghz: f64,
    pub tau_ns: f64,
    pub temperature_k: f64,
    pub gamma_per_ns: f64,
    pub dipole_x_deg: f64,
    /// `None` selects the lifetime-limited width.
    pub linewidth_mhz: Option<f64>,
    pub zpl_detuning_ghz: f64,
    pub spin_offsets_x_ghz: [f64; 3],
    pub spin_offsets_y_ghz: [f64; 3],
}

impl Default for EmitterConfig {
    fn default() -> Self {
        Self {
            delta_ghz: DEFAULT_DELTA_GHZ,
            tau_ns: DEFAULT_TAU_NS,
            temperature_k: DEFAULT_TEMPERATURE_K,
            gamma_per_ns: DEFAULT_GAMMA_PER_NS,
            dipole_x_deg: 0.0,
            linewidth_mhz: None,
            zpl_detuning_ghz: 0.0,
            spin_offsets_x_ghz: DEFAULT_SPIN_OFFSETS_X_GHZ,
            spin_offsets_y_ghz: DEFAULT_SPIN_OFFSETS_Y_GHZ,
        }
    }
}

fn parse_f64(value: &str) -> std::result::Result<f64, String> {
    value.trim().parse::<f64>().map_err(|e| format!("'{}': {e}", value.trim()))
}

fn parse_triplet(value: &str) -> std::result::Result<[f64; 3], String> {
    let parts: Vec<f64> = value.split(',').map(parse_f64).collect::<std::result::Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 3 comma-separated offsets, got {}", v.len()))
}

impl EmitterConfig {
    /// Sets one key; used for both file entries and command-line overrides.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "delta_ghz" => self.delta_ghz = parse_f64(value)?,
            "tau_ns" => self.tau_ns = parse_f64(value)?,
            "temperature_k" => self.temperature_k = parse_f64(value)?,
            "gamma_per_ns" => self.gamma_per_ns = parse_f64(value)?,
            "dipole_x_deg" => self.dipole_x_deg = parse_f64(value)?,
            "linewidth_mhz" => self.linewidth_mhz = Some(parse_f64(value)?),
            "zpl_detuning_ghz" => self.zpl_detuning_ghz = parse_f64(value)?,
            "spin_offsets_x_ghz" => self.spin_offsets_x_ghz = parse_triplet(value)?,
            "spin_offsets_y_ghz" => self.spin_offsets_y_ghz = parse_triplet(value)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                source_name: source_name.to_string(),
                line: idx + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key = value, got '{line}'")))?;
            cfg.set(key.trim(), value).map_err(parse_err)?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Validated level structure.
    pub fn level_model(&self) -> Result<LevelModel> {
        let linewidth = self.linewidth_mhz.unwrap_or_else(|| natural_linewidth_mhz(self.tau_ns));
        LevelModel::new(self.delta_ghz, self.tau_ns)?
            .with_dipole_x_angle(self.dipole_x_deg)?
            .with_linewidth_mhz(linewidth)?
            .with_zpl_detuning(self.zpl_detuning_ghz)?
            .with_spin_offsets(self.spin_offsets_x_ghz, self.spin_offsets_y_ghz)
    }

    pub fn bath(&self) -> Result<ThermalBath> {
        ThermalBath::new(self.temperature_k)
    }

    /// Checks every physical invariant without building anything else.
    pub fn validate(&self) -> Result<()> {
        self.level_model()?;
        self.bath()?;
        if !(self.gamma_per_ns >= 0.0) || self.gamma_per_ns.is_infinite() {
            return Err(Error::domain(format!("gamma must be finite and >= 0 /ns, got {}", self.gamma_per_ns)));
        }
        Ok(())
    }
}

impl FromStr for EmitterConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s, "<config>")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_keys() {
        let text = "# emitter\n\
            delta_ghz = 7.5\n\
            tau_ns=11 # inline\n\
            temperature_k = 5\n\
            gamma_per_ns = 0.1\n\
            dipole_x_deg = 30\n\
            linewidth_mhz = 20\n\
            \n\
            spin_offsets_x_ghz = -1, 0, 1\n\
            spin_offsets_y_ghz = -2,0,2\n";
        let cfg: EmitterConfig = text.parse().unwrap();
        assert_eq!(cfg.delta_ghz, 7.5);
        assert_eq!(cfg.tau_ns, 11.0);
        assert_eq!(cfg.linewidth_mhz, Some(20.0));
        assert_eq!(cfg.spin_offsets_y_ghz, [-2.0, 0.0, 2.0]);
        let m = cfg.level_model().unwrap();
        assert_eq!(m.dipole_y_angle(), 120.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn defaults_are_valid() {
        let cfg = EmitterConfig::default();
        cfg.validate().unwrap();
        assert!((cfg.level_model().unwrap().linewidth_mhz() - 13.26).abs() < 0.01);
    }

    #[test]
    fn reports_line_numbers() {
        let err = "delta_ghz = 5\nbogus = 1\n".parse::<EmitterConfig>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = "delta_ghz = 5\n\nspin_offsets_x_ghz = 1,2\n".parse::<EmitterConfig>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }));
        let err = "tau_ns 12".parse::<EmitterConfig>().unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn physical_checks_happen_on_validate() {
        let cfg: EmitterConfig = "temperature_k = 0".parse().unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Domain(_))));
        let cfg: EmitterConfig = "delta_ghz = -1".parse().unwrap();
        assert!(cfg.validate().is_err());
    }
}
