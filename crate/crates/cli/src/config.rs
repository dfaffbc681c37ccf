//! Experiment configuration.
//!
//! The file format is flat `key = value` text, one entry per line. `#`
//! starts a comment, blank lines are ignored, keys may appear at most once
//! and unknown keys are rejected. Keys that do not apply to the selected
//! model are rejected as well.
//!
//! ```text
//! model = all-to-all        # dicke | all-to-all | amplitude-damping
//! n = 40
//! seed = 1
//! omega = 1
//! delta = -1
//! interaction = 3
//! kappa = 1
//! decay_normalization = per-spin
//! time_end = 800
//! time_points = 2001
//! fit_window = 1e-1:1e-4
//! ```
//!
//! Model keys: `omega`, `cavity_omega`, `g`, `kappa` (dicke); `omega`,
//! `delta`, `interaction`, `kappa`, `decay_normalization` (all-to-all);
//! `kappa` (amplitude-damping, which always has a single spin).
//!
//! Run keys: `n`, `seed`, `time_start`, `time_end`, `time_points`,
//! `time_spacing` (`linear` | `log`; a log grid starts at `time_start > 0`
//! and is preceded by `t = 0`), `s_start`, `s_end`, `s_points`, `tol_zero`,
//! `tol_imag`, `tol_gap`, `fit_window`, `fit_window_rotated`, `out`.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::path::PathBuf;

use mpemba_core::dynamics::TimeGrid;
use mpemba_core::spectral::SpectralTolerances;
use mpemba_core::spin::{AllToAllParams, DecayNormalization, DickeParams};

use crate::error::CliError;

const DEFAULT_TIME_POINTS: usize = 2001;
const DEFAULT_S_POINTS: usize = 201;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_N: usize = 40;
pub const DEFAULT_FIT_WINDOW: (f64, f64) = (1e-1, 1e-4);
pub const DEFAULT_FIT_WINDOW_ROTATED: (f64, f64) = (1e-2, 1e-6);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelParams {
    Dicke(DickeParams),
    AllToAll(AllToAllParams),
    AmplitudeDamping { kappa: f64 },
}

impl ModelParams {
    pub fn name(&self) -> &'static str {
        match self {
            ModelParams::Dicke(_) => "dicke",
            ModelParams::AllToAll(_) => "all-to-all",
            ModelParams::AmplitudeDamping { .. } => "amplitude-damping",
        }
    }

    fn from_name(name: &str) -> Option<Self> {
        match name {
            "dicke" => Some(ModelParams::Dicke(DickeParams::default())),
            "all-to-all" => Some(ModelParams::AllToAll(AllToAllParams::default())),
            "amplitude-damping" => Some(ModelParams::AmplitudeDamping { kappa: 1.0 }),
            _ => None,
        }
    }

    /// End of the default time grid: long enough for the un-rotated state
    /// to cross the default fit window.
    fn default_time_end(&self) -> f64 {
        match self {
            ModelParams::Dicke(_) => 1500.0,
            ModelParams::AllToAll(_) => 800.0,
            ModelParams::AmplitudeDamping { .. } => 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridSpacing {
    Linear,
    Log,
}

impl GridSpacing {
    pub fn name(self) -> &'static str {
        match self {
            GridSpacing::Linear => "linear",
            GridSpacing::Log => "log",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGridSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
    pub spacing: GridSpacing,
}

impl TimeGridSpec {
    pub fn build(&self) -> Result<TimeGrid, CliError> {
        let grid = match self.spacing {
            GridSpacing::Linear => TimeGrid::linear(self.start, self.end, self.points),
            GridSpacing::Log => TimeGrid::logarithmic(self.start, self.end, self.points, true),
        };
        grid.map_err(|e| CliError::config("INVALID_GRID", format!("time grid: {e}")))
    }
}

/// Equally spaced rotation parameters, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGridSpec {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl ScanGridSpec {
    pub fn build(&self) -> Vec<f64> {
        let step = (self.end - self.start) / (self.points - 1) as f64;
        let mut s: Vec<f64> = (0..self.points).map(|k| self.start + step * k as f64).collect();
        s[self.points - 1] = self.end;
        s
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelParams,
    pub n: usize,
    pub seed: u64,
    pub time: TimeGridSpec,
    pub scan: ScanGridSpec,
    pub tolerances: SpectralTolerances,
    /// `(E_hi, E_lo)` for the un-rotated trajectory.
    pub fit_window: (f64, f64),
    /// `(E_hi, E_lo)` for the rotated trajectory.
    pub fit_window_rotated: (f64, f64),
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(model: ModelParams) -> Self {
        Self {
            model,
            n: if matches!(model, ModelParams::AmplitudeDamping { .. }) {
                1
            } else {
                DEFAULT_N
            },
            seed: DEFAULT_SEED,
            time: TimeGridSpec {
                start: 0.0,
                end: model.default_time_end(),
                points: DEFAULT_TIME_POINTS,
                spacing: GridSpacing::Linear,
            },
            scan: ScanGridSpec {
                start: 0.0,
                end: FRAC_PI_2,
                points: DEFAULT_S_POINTS,
            },
            tolerances: SpectralTolerances::default(),
            fit_window: DEFAULT_FIT_WINDOW,
            fit_window_rotated: DEFAULT_FIT_WINDOW_ROTATED,
            out: None,
        }
    }

    /// Frozen configuration of the Dicke reproduction run.
    pub fn fig2() -> Self {
        Self::new(ModelParams::Dicke(DickeParams::default()))
    }

    /// Frozen configuration of the all-to-all reproduction run.
    pub fn fig3() -> Self {
        Self::new(ModelParams::AllToAll(AllToAllParams {
            decay: DecayNormalization::PerSpin,
            ..AllToAllParams::default()
        }))
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut entries: BTreeMap<String, (usize, String)> = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config("SYNTAX", format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(CliError::config(
                    "SYNTAX",
                    format!("line {}: empty key or value", lineno + 1),
                ));
            }
            if entries.insert(key.clone(), (lineno + 1, value)).is_some() {
                return Err(CliError::config(
                    "DUPLICATE_KEY",
                    format!("line {}: `{key}` given twice", lineno + 1),
                ));
            }
        }

        let model_name = entries.remove("model").map(|(_, v)| v).unwrap_or_else(|| "dicke".into());
        let model = ModelParams::from_name(&model_name)
            .ok_or_else(|| CliError::config("INVALID_VALUE", format!("unknown model `{model_name}`")))?;
        let mut cfg = Self::new(model);

        for (key, (lineno, value)) in entries {
            cfg.set(&key, &value)
                .map_err(|e| e.with_context(&format!("line {lineno}")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match (key, &mut self.model) {
            ("omega", ModelParams::Dicke(p)) => p.omega = float(key, value)?,
            ("cavity_omega", ModelParams::Dicke(p)) => p.cavity_omega = float(key, value)?,
            ("g", ModelParams::Dicke(p)) => p.g = float(key, value)?,
            ("kappa", ModelParams::Dicke(p)) => p.kappa = float(key, value)?,
            ("omega", ModelParams::AllToAll(p)) => p.omega = float(key, value)?,
            ("delta", ModelParams::AllToAll(p)) => p.delta = float(key, value)?,
            ("interaction", ModelParams::AllToAll(p)) => p.interaction = float(key, value)?,
            ("kappa", ModelParams::AllToAll(p)) => p.kappa = float(key, value)?,
            ("decay_normalization", ModelParams::AllToAll(p)) => {
                p.decay = DecayNormalization::from_name(value).ok_or_else(|| {
                    invalid(key, value, "expected `collective` or `per-spin`")
                })?
            }
            ("kappa", ModelParams::AmplitudeDamping { kappa }) => *kappa = float(key, value)?,
            ("n", _) => self.n = integer(key, value)?,
            ("seed", _) => self.seed = value.parse().map_err(|_| invalid(key, value, "expected an unsigned integer"))?,
            ("time_start", _) => self.time.start = float(key, value)?,
            ("time_end", _) => self.time.end = float(key, value)?,
            ("time_points", _) => self.time.points = integer(key, value)?,
            ("time_spacing", _) => {
                self.time.spacing = match value {
                    "linear" => GridSpacing::Linear,
                    "log" => GridSpacing::Log,
                    _ => return Err(invalid(key, value, "expected `linear` or `log`")),
                }
            }
            ("s_start", _) => self.scan.start = float(key, value)?,
            ("s_end", _) => self.scan.end = float(key, value)?,
            ("s_points", _) => self.scan.points = integer(key, value)?,
            ("tol_zero", _) => self.tolerances.zero = float(key, value)?,
            ("tol_imag", _) => self.tolerances.imag = float(key, value)?,
            ("tol_gap", _) => self.tolerances.gap = float(key, value)?,
            ("fit_window", _) => self.fit_window = parse_window(value)?,
            ("fit_window_rotated", _) => self.fit_window_rotated = parse_window(value)?,
            ("out", _) => self.out = Some(PathBuf::from(value)),
            _ => {
                return Err(CliError::config(
                    "UNKNOWN_KEY",
                    format!("`{key}` is not a key of model `{}`", self.model.name()),
                ))
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n == 0 {
            return Err(CliError::config("INVALID_VALUE", "n must be at least 1"));
        }
        if matches!(self.model, ModelParams::AmplitudeDamping { .. }) && self.n != 1 {
            return Err(CliError::config(
                "INVALID_VALUE",
                "the amplitude-damping model has exactly one spin",
            ));
        }
        let t = &self.tolerances;
        for (name, v) in [("tol_zero", t.zero), ("tol_imag", t.imag), ("tol_gap", t.gap)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::config("INVALID_VALUE", format!("{name} must be positive, got {v}")));
            }
        }
        for (name, (hi, lo)) in [
            ("fit_window", self.fit_window),
            ("fit_window_rotated", self.fit_window_rotated),
        ] {
            if !(lo > 0.0 && hi > lo && hi.is_finite()) {
                return Err(CliError::config(
                    "INVALID_VALUE",
                    format!("{name} needs 0 < LO < HI, got {hi}:{lo}"),
                ));
            }
        }
        self.time.build()?;
        let s = &self.scan;
        if s.points < 2 || !(s.end > s.start) || !s.start.is_finite() || !s.end.is_finite() {
            return Err(CliError::config(
                "INVALID_GRID",
                format!("s grid needs s_end > s_start and at least 2 points, got {}..{} with {}", s.start, s.end, s.points),
            ));
        }
        Ok(())
    }

    /// Every setting as canonical `key = value` pairs, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut out = vec![("model", self.model.name().to_string())];
        match &self.model {
            ModelParams::Dicke(p) => {
                out.push(("omega", p.omega.to_string()));
                out.push(("cavity_omega", p.cavity_omega.to_string()));
                out.push(("g", p.g.to_string()));
                out.push(("kappa", p.kappa.to_string()));
            }
            ModelParams::AllToAll(p) => {
                out.push(("omega", p.omega.to_string()));
                out.push(("delta", p.delta.to_string()));
                out.push(("interaction", p.interaction.to_string()));
                out.push(("kappa", p.kappa.to_string()));
                out.push(("decay_normalization", p.decay.name().to_string()));
            }
            ModelParams::AmplitudeDamping { kappa } => out.push(("kappa", kappa.to_string())),
        }
        out.extend([
            ("n", self.n.to_string()),
            ("seed", self.seed.to_string()),
            ("time_start", self.time.start.to_string()),
            ("time_end", self.time.end.to_string()),
            ("time_points", self.time.points.to_string()),
            ("time_spacing", self.time.spacing.name().to_string()),
            ("s_start", self.scan.start.to_string()),
            ("s_end", self.scan.end.to_string()),
            ("s_points", self.scan.points.to_string()),
            ("tol_zero", self.tolerances.zero.to_string()),
            ("tol_imag", self.tolerances.imag.to_string()),
            ("tol_gap", self.tolerances.gap.to_string()),
            ("fit_window", format_window(self.fit_window)),
            ("fit_window_rotated", format_window(self.fit_window_rotated)),
        ]);
        if let Some(out_dir) = &self.out {
            out.push(("out", out_dir.display().to_string()));
        }
        out
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.entries() {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}

fn invalid(key: &str, value: &str, hint: &str) -> CliError {
    CliError::config("INVALID_VALUE", format!("`{key} = {value}`: {hint}"))
}

fn float(key: &str, value: &str) -> Result<f64, CliError> {
    match value.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(invalid(key, value, "expected a finite number")),
    }
}

fn integer(key: &str, value: &str) -> Result<usize, CliError> {
    value.parse().map_err(|_| invalid(key, value, "expected a non-negative integer"))
}

/// Parses `HI:LO`.
pub fn parse_window(value: &str) -> Result<(f64, f64), CliError> {
    let bad = || invalid("fit window", value, "expected HI:LO with 0 < LO < HI");
    let (hi, lo) = value.split_once(':').ok_or_else(bad)?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(bad());
    }
    Ok((hi, lo))
}

fn format_window((hi, lo): (f64, f64)) -> String {
    format!("{hi:e}:{lo:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_dicke_defaults() {
        let cfg = ExperimentConfig::parse("# nothing\n\n").unwrap();
        assert_eq!(cfg, ExperimentConfig::fig2());
        assert_eq!(cfg.n, 40);
        assert_eq!(cfg.seed, 1);
    }

    #[test]
    fn parses_all_to_all_keys() {
        let cfg = ExperimentConfig::parse(
            "model = all-to-all\nn = 8 # small\ndelta=-2\ndecay_normalization = per-spin\nfit_window = 0.5:1e-3\n",
        )
        .unwrap();
        let ModelParams::AllToAll(p) = cfg.model else {
            panic!("wrong model")
        };
        assert_eq!(p.delta, -2.0);
        assert_eq!(p.interaction, 3.0);
        assert_eq!(p.decay, DecayNormalization::PerSpin);
        assert_eq!(cfg.n, 8);
        assert_eq!(cfg.fit_window, (0.5, 1e-3));
    }

    #[test]
    fn rejects_bad_input() {
        for (text, code) in [
            ("n = 0", "CONFIG_INVALID_VALUE"),
            ("nonsense", "CONFIG_SYNTAX"),
            ("n = 3\nn = 4", "CONFIG_DUPLICATE_KEY"),
            ("colour = red", "CONFIG_UNKNOWN_KEY"),
            ("model = dicke\ndelta = 1", "CONFIG_UNKNOWN_KEY"),
            ("model = ising", "CONFIG_INVALID_VALUE"),
            ("tol_gap = -1", "CONFIG_INVALID_VALUE"),
            ("fit_window = 1e-4:1e-1", "CONFIG_INVALID_VALUE"),
            ("time_points = 1", "CONFIG_INVALID_GRID"),
            ("kappa = nan", "CONFIG_INVALID_VALUE"),
            ("model = amplitude-damping\nn = 2", "CONFIG_INVALID_VALUE"),
        ] {
            let err = ExperimentConfig::parse(text).unwrap_err();
            assert_eq!(err.code(), code, "{text}");
            assert_eq!(err.exit_code(), 4);
        }
    }

    #[test]
    fn display_round_trips() {
        let mut cfg = ExperimentConfig::fig3();
        cfg.n = 12;
        cfg.fit_window_rotated = (3e-3, 2e-7);
        cfg.time.spacing = GridSpacing::Log;
        cfg.time.start = 1e-2;
        let again = ExperimentConfig::parse(&cfg.to_string()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn scan_grid_hits_endpoints() {
        let s = ExperimentConfig::fig2().scan.build();
        assert_eq!(s.len(), 201);
        assert_eq!(s[0], 0.0);
        assert_eq!(s[200], FRAC_PI_2);
    }
}
