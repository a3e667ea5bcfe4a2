//! Flat `key = value` experiment configuration with dotted keys.
//!
//! Sources are layered: file, then `TRIQ_*` environment variables, then
//! command-line flags. Every key is checked against [`KEYS`]; unknown keys and
//! malformed values are rejected with the line (or variable) they came from.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use triq::ddseq::{build_kddxy, build_xy16s, DDSchedule};
use triq::noise::{SpinSystem, DEFAULT_T1, DEFAULT_T2};
use triq::states::StateKind;

use crate::error::{CliError, CliResult, Origin};

pub const ENV_PREFIX: &str = "TRIQ_";

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("state", "ghz | w | wwbar"),
    ("seed", "master seed (u64); required whenever randomness is drawn"),
    ("output.dir", "directory for result files"),
    ("spins.t1_s", "T1 of qubits 1,2,3 in seconds"),
    ("spins.t2_s", "T2 of qubits 1,2,3 in seconds"),
    ("spins.offsets_hz", "resonance offsets in Hz"),
    ("spins.couplings_hz", "J12,J13,J23 in Hz"),
    ("spins.hamiltonian", "true to include offsets and couplings in the dynamics"),
    ("bath.mode", "markovian | correlated"),
    ("bath.sigma_rad_s", "OU noise strength; calibrated from T2 when absent"),
    ("bath.tau_c_s", "OU correlation time in seconds"),
    ("bath.trajectories", "number of bath trajectories"),
    ("calibrate.trajectories", "trajectories used for calibration (default: bath.trajectories)"),
    ("calibrate.sigma_min_rad_s", "lower bisection bound"),
    ("calibrate.sigma_max_rad_s", "upper bisection bound"),
    ("dd.sequence", "none | xy16s | kddxy"),
    ("dd.tau_s", "inter-pulse delay in seconds"),
    ("dd.cycles", "number of cycles; overrides grid.t_end_s for protect"),
    ("dd.flip_error", "fractional flip-angle error of every pulse"),
    ("grid.t_end_s", "last sample time in seconds; 0 gives an empty curve"),
    ("grid.step_s", "sample spacing in seconds"),
    ("integrator.dt_s", "RK4 step; chosen from the decay and delay scales when absent"),
    ("tomo.noise_sigma", "standard deviation of simulated readout noise"),
    ("tomo.records", "read records from this file instead of simulating"),
];

pub fn is_known_key(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

/// `TRIQ_BATH__TAU_C_S` -> `bath.tau_c_s`.
pub fn env_var_to_key(var: &str) -> Option<String> {
    let rest = var.strip_prefix(ENV_PREFIX)?;
    Some(rest.to_ascii_lowercase().replace("__", "."))
}

pub fn key_to_env_var(key: &str) -> String {
    format!("{ENV_PREFIX}{}", key.replace('.', "__").to_ascii_uppercase())
}

/// Unvalidated key/value pairs with their origins.
#[derive(Debug, Clone, Default)]
pub struct RawConfig {
    entries: BTreeMap<String, (String, Origin)>,
}

impl RawConfig {
    pub fn parse(text: &str, path: &Path) -> CliResult<Self> {
        let mut raw = RawConfig::default();
        for (idx, line) in text.lines().enumerate() {
            let origin = Origin::File { path: path.to_path_buf(), line: idx + 1 };
            let body = line.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let Some((key, value)) = body.split_once('=') else {
                return Err(CliError::Config {
                    origin,
                    key: body.to_string(),
                    message: "expected 'key = value'".into(),
                });
            };
            let key = key.trim();
            if raw.entries.contains_key(key) {
                return Err(CliError::Config { origin, key: key.into(), message: "duplicate key".into() });
            }
            raw.set(key, value.trim(), origin)?;
        }
        Ok(raw)
    }

    pub fn from_file(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Applies `TRIQ_*` variables; other variables are ignored.
    pub fn apply_env<I: IntoIterator<Item = (String, String)>>(&mut self, vars: I) -> CliResult<()> {
        let mut vars: Vec<(String, String)> = vars.into_iter().filter(|(k, _)| k.starts_with(ENV_PREFIX)).collect();
        vars.sort();
        for (var, value) in vars {
            let key = env_var_to_key(&var).unwrap_or_default();
            self.set(&key, value.trim(), Origin::Env(var.clone()))?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str, origin: Origin) -> CliResult<()> {
        if !is_known_key(key) {
            return Err(CliError::Config { origin, key: key.into(), message: "unknown key".into() });
        }
        if value.is_empty() {
            return Err(CliError::Config { origin, key: key.into(), message: "empty value".into() });
        }
        self.entries.insert(key.to_string(), (value.to_string(), origin));
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<(&str, &Origin)> {
        debug_assert!(is_known_key(key), "{key}");
        self.entries.get(key).map(|(v, o)| (v.as_str(), o))
    }

    fn parse_with<T>(&self, key: &str, f: impl Fn(&str) -> Result<T, String>) -> CliResult<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some((v, origin)) => f(v)
                .map(Some)
                .map_err(|message| CliError::Config { origin: origin.clone(), key: key.into(), message }),
        }
    }
}

fn positive(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x > 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a positive number, got '{v}'")),
    }
}

fn non_negative(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x >= 0.0 && x.is_finite() => Ok(x),
        _ => Err(format!("expected a non-negative number, got '{v}'")),
    }
}

fn finite(v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a number, got '{v}'")),
    }
}

fn count(v: &str) -> Result<usize, String> {
    match v.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer, got '{v}'")),
    }
}

fn triple(each: fn(&str) -> Result<f64, String>) -> impl Fn(&str) -> Result<[f64; 3], String> {
    move |v| {
        let parts: Vec<&str> = v.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected three comma-separated values, got '{v}'"));
        }
        Ok([each(parts[0])?, each(parts[1])?, each(parts[2])?])
    }
}

fn boolean(v: &str) -> Result<bool, String> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got '{v}'")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BathMode {
    Markovian,
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdKind {
    None,
    Xy16s,
    Kddxy,
}

impl DdKind {
    pub fn name(self) -> &'static str {
        match self {
            DdKind::None => "none",
            DdKind::Xy16s => "xy16s",
            DdKind::Kddxy => "kddxy",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BathConfig {
    pub mode: BathMode,
    pub sigma: Option<f64>,
    pub tau_c: f64,
    pub trajectories: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationConfig {
    pub trajectories: usize,
    pub sigma_bounds: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DdConfig {
    pub sequence: DdKind,
    pub tau: f64,
    pub cycles: Option<usize>,
    pub flip_error: f64,
}

impl DdConfig {
    /// `None` when no sequence is selected.
    pub fn schedule(&self) -> triq::Result<Option<DDSchedule>> {
        let s = match self.sequence {
            DdKind::None => return Ok(None),
            DdKind::Xy16s => build_xy16s(self.tau)?,
            DdKind::Kddxy => build_kddxy(self.tau)?,
        };
        Ok(Some(s.with_flip_error(self.flip_error)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridConfig {
    pub t_end: f64,
    pub step: f64,
}

impl GridConfig {
    /// `0, step, 2·step, ...` up to `t_end`, which is always included; empty
    /// for a zero-length grid.
    pub fn times(&self) -> Vec<f64> {
        if self.t_end <= 0.0 {
            return Vec::new();
        }
        let n = (self.t_end / self.step - 1e-9).ceil() as usize;
        let mut t: Vec<f64> = (0..n).map(|k| k as f64 * self.step).collect();
        t.push(self.t_end);
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomoConfig {
    pub noise_sigma: f64,
    pub records: Option<PathBuf>,
}

/// Validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub state: Option<StateKind>,
    pub seed: Option<u64>,
    pub output: PathBuf,
    pub spins: SpinSystem,
    pub bath: BathConfig,
    pub calibration: CalibrationConfig,
    pub dd: DdConfig,
    pub grid: GridConfig,
    pub dt: Option<f64>,
    pub tomo: TomoConfig,
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> CliResult<Self> {
        let state = raw.parse_with("state", |v| v.parse::<StateKind>().map_err(|e| e.to_string()))?;
        let seed = raw.parse_with("seed", |v| v.parse::<u64>().map_err(|_| format!("expected a u64, got '{v}'")))?;
        let output = raw.parse_with("output.dir", |v| Ok(PathBuf::from(v)))?.unwrap_or_else(|| "triq-out".into());

        let defaults = SpinSystem::default();
        let spins = SpinSystem {
            t1: raw.parse_with("spins.t1_s", triple(positive))?.unwrap_or(DEFAULT_T1),
            t2: raw.parse_with("spins.t2_s", triple(positive))?.unwrap_or(DEFAULT_T2),
            offsets_hz: raw.parse_with("spins.offsets_hz", triple(finite))?.unwrap_or(defaults.offsets_hz),
            couplings_hz: raw.parse_with("spins.couplings_hz", triple(finite))?.unwrap_or(defaults.couplings_hz),
            include_hamiltonian: raw.parse_with("spins.hamiltonian", boolean)?.unwrap_or(false),
        };
        if let Err(e) = spins.validate() {
            let origin = raw.get("spins.t2_s").map(|(_, o)| o.clone()).unwrap_or(Origin::Default);
            return Err(CliError::Config { origin, key: "spins.t2_s".into(), message: e.to_string() });
        }

        let mode = raw
            .parse_with("bath.mode", |v| match v {
                "markovian" => Ok(BathMode::Markovian),
                "correlated" => Ok(BathMode::Correlated),
                _ => Err(format!("expected markovian or correlated, got '{v}'")),
            })?
            .unwrap_or(BathMode::Markovian);
        let bath = BathConfig {
            mode,
            sigma: raw.parse_with("bath.sigma_rad_s", non_negative)?,
            tau_c: raw.parse_with("bath.tau_c_s", positive)?.unwrap_or(0.01),
            trajectories: raw.parse_with("bath.trajectories", count)?.unwrap_or(200),
        };
        let calibration = CalibrationConfig {
            trajectories: raw.parse_with("calibrate.trajectories", count)?.unwrap_or(bath.trajectories),
            sigma_bounds: (
                raw.parse_with("calibrate.sigma_min_rad_s", positive)?.unwrap_or(0.1),
                raw.parse_with("calibrate.sigma_max_rad_s", positive)?.unwrap_or(1000.0),
            ),
        };
        if calibration.sigma_bounds.0 >= calibration.sigma_bounds.1 {
            let origin = raw.get("calibrate.sigma_max_rad_s").map(|(_, o)| o.clone()).unwrap_or(Origin::Default);
            return Err(CliError::Config {
                origin,
                key: "calibrate.sigma_max_rad_s".into(),
                message: "upper bound must exceed the lower bound".into(),
            });
        }

        let dd = DdConfig {
            sequence: raw
                .parse_with("dd.sequence", |v| match v {
                    "none" => Ok(DdKind::None),
                    "xy16s" => Ok(DdKind::Xy16s),
                    "kddxy" => Ok(DdKind::Kddxy),
                    _ => Err(format!("expected none, xy16s or kddxy, got '{v}'")),
                })?
                .unwrap_or(DdKind::None),
            tau: raw.parse_with("dd.tau_s", positive)?.unwrap_or(0.25e-3),
            cycles: raw.parse_with("dd.cycles", count)?,
            flip_error: raw
                .parse_with("dd.flip_error", |v| {
                    let x = finite(v)?;
                    if x > -1.0 && x < 1.0 {
                        Ok(x)
                    } else {
                        Err(format!("flip error must lie in (-1, 1), got {x}"))
                    }
                })?
                .unwrap_or(0.0),
        };
        let grid = GridConfig {
            t_end: raw.parse_with("grid.t_end_s", non_negative)?.unwrap_or(1.5),
            step: raw.parse_with("grid.step_s", positive)?.unwrap_or(1e-3),
        };
        let dt = raw.parse_with("integrator.dt_s", positive)?;
        let tomo = TomoConfig {
            noise_sigma: raw.parse_with("tomo.noise_sigma", non_negative)?.unwrap_or(0.0),
            records: raw.parse_with("tomo.records", |v| Ok(PathBuf::from(v)))?,
        };
        Ok(Self { state, seed, output, spins, bath, calibration, dd, grid, dt, tomo })
    }

    /// Reads `path` (if any), then the environment, then explicit overrides.
    pub fn load(
        path: Option<&Path>,
        env: impl IntoIterator<Item = (String, String)>,
        overrides: &[(&'static str, &'static str, String)],
    ) -> CliResult<Self> {
        let mut raw = match path {
            Some(p) => RawConfig::from_file(p)?,
            None => RawConfig::default(),
        };
        raw.apply_env(env)?;
        for (flag, key, value) in overrides {
            raw.set(key, value, Origin::Flag(flag))?;
        }
        Self::from_raw(&raw)
    }

    pub fn require_state(&self) -> CliResult<StateKind> {
        self.state.ok_or_else(|| CliError::Config {
            origin: Origin::Default,
            key: "state".into(),
            message: "required for this command".into(),
        })
    }

    pub fn require_seed(&self) -> CliResult<u64> {
        self.seed.ok_or_else(|| CliError::Config {
            origin: Origin::Default,
            key: "seed".into(),
            message: "required for this command (set it in the file, with TRIQ_SEED or --seed)".into(),
        })
    }

    /// Target of the bath calibration: the mean configured T2.
    pub fn mean_t2(&self) -> f64 {
        self.spins.t2.iter().sum::<f64>() / 3.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> CliResult<ExperimentConfig> {
        ExperimentConfig::from_raw(&RawConfig::parse(text, Path::new("exp.conf"))?)
    }

    #[test]
    fn defaults_and_overrides() {
        let c = parse("state = w\nseed = 7\nbath.tau_c_s = 0.02 # comment\n\n").unwrap();
        assert_eq!(c.state, Some(StateKind::W));
        assert_eq!(c.seed, Some(7));
        assert_eq!(c.bath.tau_c, 0.02);
        assert_eq!(c.spins.t1, DEFAULT_T1);
        assert_eq!(c.dd.sequence, DdKind::None);
    }

    #[test]
    fn diagnostics_name_line_and_key() {
        let err = parse("state = ghz\nbath.tau_c = 0.01\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("exp.conf:2") && msg.contains("bath.tau_c") && msg.contains("unknown"), "{msg}");
        let err = parse("spins.t1_s = 1, 2\n").unwrap_err().to_string();
        assert!(err.contains(":1") && err.contains("spins.t1_s"), "{err}");
        let err = parse("seed = 1\nseed = 2\n").unwrap_err().to_string();
        assert!(err.contains("duplicate"));
        assert!(parse("state ghz\n").is_err());
        assert!(parse("spins.t2_s = 20, 0.5, 0.5\n").is_err());
        assert!(parse("calibrate.sigma_min_rad_s = 5\ncalibrate.sigma_max_rad_s = 2\n").is_err());
    }

    #[test]
    fn environment_mapping() {
        assert_eq!(env_var_to_key("TRIQ_BATH__TAU_C_S").as_deref(), Some("bath.tau_c_s"));
        assert_eq!(key_to_env_var("bath.tau_c_s"), "TRIQ_BATH__TAU_C_S");
        let mut raw = RawConfig::parse("seed = 1\n", Path::new("x")).unwrap();
        raw.apply_env([("TRIQ_SEED".to_string(), "9".to_string()), ("HOME".into(), "/".into())]).unwrap();
        assert_eq!(ExperimentConfig::from_raw(&raw).unwrap().seed, Some(9));
        let err = raw.apply_env([("TRIQ_NOPE".to_string(), "1".to_string())]).unwrap_err().to_string();
        assert!(err.contains("TRIQ_NOPE"));
    }

    #[test]
    fn grid_times() {
        let g = GridConfig { t_end: 0.0, step: 1e-3 };
        assert!(g.times().is_empty());
        let g = GridConfig { t_end: 0.0105, step: 1e-3 };
        let t = g.times();
        assert_eq!(t.len(), 12);
        assert_eq!(*t.last().unwrap(), 0.0105);
        let g = GridConfig { t_end: 0.01, step: 1e-3 };
        assert_eq!(g.times().len(), 11);
    }
}
