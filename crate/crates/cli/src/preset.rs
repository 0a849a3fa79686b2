//! Named parameter sets for the temperature curves and the noise/temperature maps.

use std::fmt;
use std::str::FromStr;

use crate::config::{
    Axis, DriveBlock, EnvironmentBlock, ModelBlock, ModelKind, RawConfig, ScanBlock, SystemBlock, SCHEMA_VERSION,
};

pub const OMEGA: f64 = 0.10;
pub const DELTA_RATIO: f64 = 0.35;
pub const LAMBDA: f64 = 2.0;
pub const MU: f64 = 0.50;
/// Drive amplitude used by presets that run the equations of motion.
pub const XI: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FigurePreset {
    Fig6a,
    Fig6a1,
    Fig6a2,
    Fig6b,
    Fig6b1,
    Fig6b2,
    Fig5a,
    Fig5b,
}

impl FigurePreset {
    pub const ALL: [FigurePreset; 8] = [
        FigurePreset::Fig6a,
        FigurePreset::Fig6a1,
        FigurePreset::Fig6a2,
        FigurePreset::Fig6b,
        FigurePreset::Fig6b1,
        FigurePreset::Fig6b2,
        FigurePreset::Fig5a,
        FigurePreset::Fig5b,
    ];

    /// The six single-curve presets.
    pub const CURVES: [FigurePreset; 6] = [
        FigurePreset::Fig6a,
        FigurePreset::Fig6a1,
        FigurePreset::Fig6a2,
        FigurePreset::Fig6b,
        FigurePreset::Fig6b1,
        FigurePreset::Fig6b2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FigurePreset::Fig6a => "fig6a",
            FigurePreset::Fig6a1 => "fig6a1",
            FigurePreset::Fig6a2 => "fig6a2",
            FigurePreset::Fig6b => "fig6b",
            FigurePreset::Fig6b1 => "fig6b1",
            FigurePreset::Fig6b2 => "fig6b2",
            FigurePreset::Fig5a => "fig5a",
            FigurePreset::Fig5b => "fig5b",
        }
    }

    fn kind(self) -> ModelKind {
        match self {
            FigurePreset::Fig6a | FigurePreset::Fig6a1 | FigurePreset::Fig6a2 | FigurePreset::Fig5a => ModelKind::Ohmic,
            _ => ModelKind::Constant,
        }
    }

    /// Noise strength of a single-curve preset; `None` for the maps.
    pub fn eta(self) -> Option<f64> {
        match self {
            FigurePreset::Fig6a => Some(0.59),
            FigurePreset::Fig6a1 => Some(0.65),
            FigurePreset::Fig6a2 => Some(0.70),
            FigurePreset::Fig6b => Some(3.5),
            FigurePreset::Fig6b1 => Some(4.5),
            FigurePreset::Fig6b2 => Some(15.0),
            FigurePreset::Fig5a | FigurePreset::Fig5b => None,
        }
    }

    pub fn default_t_axis() -> Axis {
        Axis::log(0.01, 2.0, 200)
    }

    pub fn config(self) -> RawConfig {
        let model = match self.kind() {
            ModelKind::Ohmic => ModelBlock { kind: Some(ModelKind::Ohmic), eta: self.eta(), lambda: Some(LAMBDA), mu: None },
            ModelKind::Constant => ModelBlock { kind: Some(ModelKind::Constant), eta: self.eta(), lambda: None, mu: Some(MU) },
        };
        let scan = match self {
            FigurePreset::Fig5a => Some(ScanBlock { eta_axis: Some(Axis::linear(0.3, 1.0, 100)) }),
            FigurePreset::Fig5b => Some(ScanBlock { eta_axis: Some(Axis::linear(1.0, 20.0, 100)) }),
            _ => None,
        };
        RawConfig {
            schema_version: Some(SCHEMA_VERSION),
            preset: Some(self.name().to_string()),
            system: Some(SystemBlock { delta_ratio: Some(DELTA_RATIO), ..Default::default() }),
            model: Some(model),
            environment: Some(EnvironmentBlock { t: None, t_axis: Some(Self::default_t_axis()) }),
            drive: Some(DriveBlock { xi: Some(XI), omega: Some(OMEGA) }),
            scan,
            ..Default::default()
        }
    }
}

impl fmt::Display for FigurePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownPreset(pub String);

impl fmt::Display for UnknownPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = FigurePreset::ALL.iter().map(|p| p.name()).collect();
        write!(f, "unknown preset '{}'; expected one of {}", self.0, names.join(", "))
    }
}

impl std::error::Error for UnknownPreset {}

impl FromStr for FigurePreset {
    type Err = UnknownPreset;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        FigurePreset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownPreset(s.to_string()))
    }
}
