//! Built-in scenarios.

use lrcore::{ParameterProfile, TimeFunction};

use crate::config::{GridSpec, InitialSpec, ScenarioConfig, Thresholds};
use crate::CliError;

pub struct Scenario {
    pub name: &'static str,
    pub description: &'static str,
    build: Option<fn() -> ParameterProfile>,
    horizon: [f64; 2],
}

fn constant(v: f64) -> TimeFunction {
    TimeFunction::constant(v)
}

fn profile(mass: TimeFunction, omega: TimeFunction, field: TimeFunction, theta: f64) -> ParameterProfile {
    ParameterProfile::new(mass, omega, field, 1.0, theta).expect("built-in profiles are valid")
}

pub const SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "landau-constant",
        description: "Landau problem (Omega = 0) in a constant field B = 2, unit mass; stationary states",
        build: Some(|| profile(constant(1.0), constant(0.0), constant(2.0), 0.0)),
        horizon: [0.0, 4.0],
    },
    Scenario {
        name: "landau-quench",
        description: "Landau problem (Omega = 0) with a smooth tanh quench of B from 2 to 3 at t = 2",
        build: Some(|| {
            profile(
                constant(1.0),
                constant(0.0),
                TimeFunction::Tanh { before: 2.0, after: 3.0, center: 2.0, width: 0.3 },
                0.0,
            )
        }),
        horizon: [0.0, 4.0],
    },
    Scenario {
        name: "oscillator-sinusoidal",
        description: "oscillator with Omega(t) = 1 + 0.3 sin 2t in a weak field B = 0.5",
        build: Some(|| {
            profile(
                constant(1.0),
                TimeFunction::Sinusoid { mean: 1.0, amplitude: 0.3, frequency: 2.0, phase: 0.0 },
                constant(0.5),
                0.0,
            )
        }),
        horizon: [0.0, 4.0],
    },
    Scenario {
        name: "nc-landau",
        description: "noncommutative plane with theta = 0.1, Omega = 0, constant B = 2; stationary states",
        build: Some(|| profile(constant(1.0), constant(0.0), constant(2.0), 0.1)),
        horizon: [0.0, 4.0],
    },
    Scenario {
        name: "nc-oscillator",
        description: "noncommutative plane with theta = 0.2, oscillating mass M(t) = 1 + 0.1 sin 1.5t, Omega = 1, B = 1",
        build: Some(|| {
            profile(
                TimeFunction::Sinusoid { mean: 1.0, amplitude: 0.1, frequency: 1.5, phase: 0.0 },
                constant(1.0),
                constant(1.0),
                0.2,
            )
        }),
        horizon: [0.0, 4.0],
    },
    Scenario {
        name: "custom",
        description: "read a scenario from a TOML file: `lrinv run path/to/scenario.toml`",
        build: None,
        horizon: [0.0, 0.0],
    },
];

/// Accepted alternative names.
const ALIASES: &[(&str, &str)] = &[("b-quench", "landau-quench")];

pub fn find(name: &str) -> Option<&'static Scenario> {
    let name = ALIASES.iter().find(|(a, _)| *a == name).map(|(_, n)| *n).unwrap_or(name);
    SCENARIOS.iter().find(|s| s.name == name && s.build.is_some())
}

/// Names sorted by similarity to `name`, closest first.
pub fn suggestions(name: &str) -> Vec<&'static str> {
    let mut all: Vec<(f64, &'static str)> = SCENARIOS
        .iter()
        .map(|s| s.name)
        .chain(ALIASES.iter().map(|(a, _)| *a))
        .filter(|n| *n != "custom")
        .map(|n| (strsim::normalized_levenshtein(name, n), n))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(b.1)));
    all.into_iter().map(|(_, n)| n).collect()
}

pub fn list() -> String {
    let width = SCENARIOS.iter().map(|s| s.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for s in SCENARIOS {
        out.push_str(&format!("{:width$}  {}\n", s.name, s.description));
    }
    for (alias, target) in ALIASES {
        out.push_str(&format!("{alias:width$}  alias for {target}\n"));
    }
    out
}

impl Scenario {
    /// Default configuration with `κ = 1`.
    pub fn config(&self) -> Result<ScenarioConfig, CliError> {
        let build = self.build.ok_or_else(|| CliError::Config("custom scenarios are read from a file".into()))?;
        Ok(ScenarioConfig {
            name: self.name.into(),
            description: self.description.into(),
            kappa: 1.0,
            horizon: self.horizon,
            initial: InitialSpec::Equilibrium,
            tolerance: 1e-10,
            states: lrcore::FockIndex::up_to(4).into_iter().map(|s| [s.n as i64, s.m as i64]).collect(),
            samples: 5,
            dt: 1e-4,
            n_max: 32,
            checks: None,
            output: None,
            grid: GridSpec::default(),
            thresholds: Thresholds::default(),
            profile: build(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_ins_validate() {
        for s in SCENARIOS.iter().filter(|s| s.build.is_some()) {
            s.config().unwrap().validate().unwrap();
        }
        assert!(find("custom").is_none());
        assert_eq!(find("b-quench").unwrap().name, "landau-quench");
    }

    #[test]
    fn suggestions_rank_close_names_first() {
        assert_eq!(suggestions("landau-constnt")[0], "landau-constant");
        assert_eq!(suggestions("nc-osc")[0], "nc-oscillator");
    }

    #[test]
    fn nc_landau_description() {
        let d = find("nc-landau").unwrap().description;
        assert!(d.contains("theta") && d.contains("Omega = 0"));
    }
}
