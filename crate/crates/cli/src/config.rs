//! Scenario files.
//!
//! A scenario is a TOML document. Every key except `kappa`, `horizon` and the
//! `[profile]` table has a default:
//!
//! ```toml
//! name = "my-run"
//! kappa = 1.0                   # required, > 0
//! horizon = [0.0, 4.0]          # required, t1 > t0
//! initial = "equilibrium"       # or { sigma = 1.0, sigma_dot = 0.0 }
//! tolerance = 1e-10             # auxiliary-equation tolerance
//! states = [[0, 0], [2, 0]]     # (n, m) pairs; default: every n <= 4
//! samples = 5                   # evenly spaced check/output times
//! dt = 1e-4                     # finite-difference step for time derivatives
//! n_max = 32                    # matrix truncation
//! checks = ["conservation"]     # default: every applicable check
//!
//! [grid]
//! points = 256
//! extent = "auto"               # or a half-width
//!
//! [profile]
//! charge = 1.0
//! theta = 0.0
//! mass = { kind = "constant", value = 1.0 }
//! omega = { kind = "sinusoid", mean = 1.0, amplitude = 0.2, frequency = 2.0 }
//! field = { kind = "tanh", before = 2.0, after = 3.0, center = 2.0, width = 0.3 }
//!
//! [thresholds]
//! schrodinger = 1e-4
//! ```
//!
//! Time functions are `constant`, `step`, `ramp`, `sinusoid`, `tanh` and
//! `tabulated` (with `times` and `values` arrays, natural cubic spline).

use std::path::PathBuf;

use lrcore::{FockIndex, InitialCondition, ParameterProfile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::checks::CHECKS;
use crate::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub kappa: f64,
    pub horizon: [f64; 2],
    #[serde(default)]
    pub initial: InitialSpec,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    #[serde(default = "default_states")]
    pub states: Vec<[i64; 2]>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_n_max")]
    pub n_max: u32,
    #[serde(default)]
    pub checks: Option<Vec<String>>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub thresholds: Thresholds,
    pub profile: ParameterProfile,
}

fn default_name() -> String {
    "custom".into()
}

fn default_tolerance() -> f64 {
    1e-10
}

fn default_states() -> Vec<[i64; 2]> {
    FockIndex::up_to(4).into_iter().map(|s| [s.n as i64, s.m as i64]).collect()
}

fn default_samples() -> usize {
    5
}

fn default_dt() -> f64 {
    1e-4
}

fn default_n_max() -> u32 {
    32
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum InitialSpec {
    #[default]
    Equilibrium,
    Explicit { sigma: f64, sigma_dot: f64 },
}

#[derive(Deserialize, Serialize)]
#[serde(untagged)]
enum RawInitial {
    Keyword(String),
    Explicit { sigma: f64, sigma_dot: f64 },
}

impl Serialize for InitialSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            InitialSpec::Equilibrium => RawInitial::Keyword("equilibrium".into()),
            InitialSpec::Explicit { sigma, sigma_dot } => RawInitial::Explicit { sigma, sigma_dot },
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for InitialSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match RawInitial::deserialize(d)? {
            RawInitial::Keyword(k) if k == "equilibrium" => Ok(InitialSpec::Equilibrium),
            RawInitial::Keyword(k) => {
                Err(serde::de::Error::custom(format!("initial: expected \"equilibrium\" or a table, got \"{k}\"")))
            }
            RawInitial::Explicit { sigma, sigma_dot } => Ok(InitialSpec::Explicit { sigma, sigma_dot }),
        }
    }
}

impl From<InitialSpec> for InitialCondition {
    fn from(s: InitialSpec) -> Self {
        match s {
            InitialSpec::Equilibrium => InitialCondition::Equilibrium,
            InitialSpec::Explicit { sigma, sigma_dot } => InitialCondition::Explicit { sigma, sigma_dot },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_points")]
    pub points: usize,
    #[serde(default)]
    pub extent: Extent,
}

fn default_points() -> usize {
    lrcore::wavefield::DEFAULT_POINTS
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { points: default_points(), extent: Extent::Auto }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Extent {
    #[default]
    Auto,
    HalfWidth(f64),
}

impl Serialize for Extent {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match *self {
            Extent::Auto => s.serialize_str("auto"),
            Extent::HalfWidth(x) => s.serialize_f64(x),
        }
    }
}

impl<'de> Deserialize<'de> for Extent {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Word(w) if w == "auto" => Ok(Extent::Auto),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("extent: expected \"auto\" or a number, got \"{w}\""))),
            Raw::Number(x) => Ok(Extent::HalfWidth(x)),
        }
    }
}

/// Pass thresholds; each check compares its measured value against one of
/// these.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// `max |γ² − αβ + κ²|`, in units of `κ²`.
    pub conservation: f64,
    pub coefficient_ode: f64,
    pub operator_algebra: f64,
    pub fock_spectrum: f64,
    /// Relative disagreement of the two matrix constructions of `H`, and
    /// out-of-band entries.
    pub hamiltonian_structure: f64,
    /// Relative `max |∂I/∂t − i[I,H]|` on the matrix interior block.
    pub invariance: f64,
    pub creation_rate: f64,
    pub grid_eigen: f64,
    /// Relative error of the diagonal matrix element of `H`.
    pub energy: f64,
    pub hermiticity: f64,
    pub dt_overlap: f64,
    pub schrodinger: f64,
    /// Used instead of `schrodinger` when the parameters are constant and
    /// `σ` starts at equilibrium.
    pub schrodinger_stationary: f64,
    /// Lower bound for the residual with the phase factor removed.
    pub negative_control: f64,
    pub phase_split: f64,
    pub phase_rate: f64,
    pub stationary: f64,
    pub norm: f64,
    pub orthonormality: f64,
    pub bopp_shift: f64,
    /// Relative difference allowed between the two coefficient maps at
    /// `θ = 0`; machine epsilon by default.
    pub nc_reduction: f64,
    pub ground_rate_angular: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            conservation: 1e-10,
            coefficient_ode: 1e-7,
            operator_algebra: 1e-13,
            fock_spectrum: 1e-13,
            hamiltonian_structure: 1e-12,
            invariance: 1e-6,
            creation_rate: 1e-6,
            grid_eigen: 1e-8,
            energy: 1e-8,
            hermiticity: 1e-10,
            dt_overlap: 1e-6,
            schrodinger: 1e-4,
            schrodinger_stationary: 1e-6,
            negative_control: 0.1,
            phase_split: 1e-10,
            phase_rate: 1e-8,
            stationary: 1e-8,
            norm: 1e-9,
            orthonormality: 1e-8,
            bopp_shift: 1e-10,
            nc_reduction: f64::EPSILON,
            ground_rate_angular: 1e-8,
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    /// SHA-256 of the canonical TOML serialization.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn indices(&self) -> Vec<FockIndex> {
        self.states.iter().map(|&[n, m]| FockIndex::new(n, m).expect("validated")).collect()
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if !(self.kappa.is_finite() && self.kappa > 0.0) {
            return bad(format!("kappa: must be positive and finite, got {}", self.kappa));
        }
        let [t0, t1] = self.horizon;
        if !(t0.is_finite() && t1.is_finite() && t1 > t0) {
            return bad(format!("horizon: need t0 < t1, got [{t0}, {t1}]"));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return bad(format!("tolerance: must be positive, got {}", self.tolerance));
        }
        if let InitialSpec::Explicit { sigma, sigma_dot } = self.initial {
            if !(sigma > 0.0 && sigma.is_finite() && sigma_dot.is_finite()) {
                return bad(format!("initial: need sigma > 0 and finite sigma_dot, got ({sigma}, {sigma_dot})"));
            }
        }
        if self.states.is_empty() {
            return bad("states: at least one (n, m) pair is required".into());
        }
        for &[n, m] in &self.states {
            if FockIndex::new(n, m).is_err() {
                return bad(format!("states: ({n}, {m}) is not a valid index (need |m| <= n, n - m even)"));
            }
        }
        if self.samples < 3 {
            return bad(format!("samples: need at least 3, got {}", self.samples));
        }
        if !(self.dt > 0.0 && 2.0 * self.dt < t1 - t0) {
            return bad(format!("dt: must be positive and well inside the horizon, got {}", self.dt));
        }
        if self.n_max < 4 {
            return bad(format!("n_max: need at least 4, got {}", self.n_max));
        }
        if self.grid.points < 8 || !self.grid.points.is_multiple_of(2) {
            return bad(format!("grid.points: need an even number >= 8, got {}", self.grid.points));
        }
        if let Extent::HalfWidth(x) = self.grid.extent {
            if !(x > 0.0 && x.is_finite()) {
                return bad(format!("grid.extent: must be positive, got {x}"));
            }
        }
        if let Some(checks) = &self.checks {
            for c in checks {
                if !CHECKS.iter().any(|k| k.name == c) {
                    return bad(format!("checks: unknown check \"{c}\""));
                }
            }
        }
        self.profile.validate().map_err(|e| CliError::Config(format!("profile: {e}")))
    }

    /// Evenly spaced sample times including both ends of the horizon.
    pub fn sample_times(&self) -> Vec<f64> {
        let [t0, t1] = self.horizon;
        let k = self.samples - 1;
        (0..=k).map(|i| if i == k { t1 } else { t0 + (t1 - t0) * i as f64 / k as f64 }).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
kappa = 1.0
horizon = [0.0, 2.0]
[profile]
mass = { kind = "constant", value = 1.0 }
omega = { kind = "constant", value = 0.0 }
field = { kind = "constant", value = 2.0 }
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.initial, InitialSpec::Equilibrium);
        assert_eq!(c.grid.extent, Extent::Auto);
        assert_eq!(c.states.len(), 15);
        assert_eq!(c.sample_times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(c.profile.charge, 1.0);
    }

    #[test]
    fn roundtrip_keeps_hash() {
        let c = ScenarioConfig::from_toml(MINIMAL).unwrap();
        let again = ScenarioConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        assert_eq!(c.hash().len(), 64);
    }

    #[test]
    fn missing_kappa_is_named() {
        let text = MINIMAL.replace("kappa = 1.0\n", "");
        let err = ScenarioConfig::from_toml(&text).unwrap_err().to_string();
        assert!(err.contains("kappa"), "{err}");
    }

    #[test]
    fn explicit_initial_and_fixed_extent() {
        let text = MINIMAL.replace(
            "horizon = [0.0, 2.0]\n",
            "horizon = [0.0, 2.0]\ninitial = { sigma = 1.5, sigma_dot = 0.1 }\n[grid]\nextent = 12.0\n",
        );
        let c = ScenarioConfig::from_toml(&text).unwrap();
        assert_eq!(c.initial, InitialSpec::Explicit { sigma: 1.5, sigma_dot: 0.1 });
        assert_eq!(c.grid.extent, Extent::HalfWidth(12.0));
    }

    #[test]
    fn rejects_invalid_entries() {
        for (from, to, field) in [
            ("kappa = 1.0", "kappa = -1.0", "kappa"),
            ("horizon = [0.0, 2.0]", "horizon = [2.0, 2.0]", "horizon"),
            ("horizon = [0.0, 2.0]", "horizon = [0.0, 2.0]\nstates = [[2, 1]]", "states"),
            ("horizon = [0.0, 2.0]", "horizon = [0.0, 2.0]\nchecks = [\"nope\"]", "checks"),
            ("horizon = [0.0, 2.0]", "horizon = [0.0, 2.0]\ninitial = \"rest\"", "initial"),
        ] {
            let err = ScenarioConfig::from_toml(&MINIMAL.replace(from, to)).unwrap_err().to_string();
            assert!(err.contains(field), "{field}: {err}");
        }
    }
}
