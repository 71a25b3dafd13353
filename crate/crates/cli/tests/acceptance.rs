//! Acceptance criteria, one line each. Run with
//! `cargo test -p lrinv --test acceptance`.
//!
//! Tolerances are pinned here and do not read the configurable thresholds.

use std::process::ExitCode;

use lrcore::ermakov::{max_coefficient_residual, DEFAULT_STENCIL};
use lrcore::fockspace::{algebra_defects, build_ladder};
use lrcore::profiles::bopp_shift_check;
use lrcore::{solve_sigma, SolverOptions};
use lrinv::checks::Bound;
use lrinv::scenarios::{self, SCENARIOS};
use lrinv::{run_scenario, RunReport, ScenarioConfig};

const CONSERVATION: f64 = 1e-10;
const COEFFICIENT_ODE: f64 = 1e-7;
/// Smallest accepted convergence order of the coefficient residual in the
/// step size. The residual differentiates the quartic dense output, whose
/// derivative error is third order; 10% slack for pre-asymptotic noise.
const REFINEMENT_ORDER: f64 = 2.7;
/// Residuals below this sit at the stencil's roundoff floor and are not used
/// for order estimates.
const REFINEMENT_FLOOR: f64 = 1e-10;
const OPERATOR_ALGEBRA: f64 = 1e-13;
const FOCK_SPECTRUM: f64 = 1e-13;
const GRID_EIGEN: f64 = 1e-8;
const ENERGY: f64 = 1e-8;
const HAMILTONIAN_BAND: f64 = 1e-12;
const DT_OVERLAP: f64 = 1e-6;
const SCHRODINGER_STATIONARY: f64 = 1e-6;
const SCHRODINGER: f64 = 1e-4;
const NEGATIVE_CONTROL: f64 = 0.1;
const PHASE_SPLIT: f64 = 1e-10;
const PHASE_RATE: f64 = 1e-8;
const STATIONARY_PHASE: f64 = 1e-8;
const NC_REDUCTION: f64 = f64::EPSILON;
const BOPP: f64 = 1e-10;
const ORTHONORMALITY: f64 = 1e-8;

struct Run {
    config: ScenarioConfig,
    report: RunReport,
}

impl Run {
    fn measured(&self, check: &str) -> Option<f64> {
        self.report.checks.iter().find(|c| c.name == check).map(|c| c.measured)
    }
}

fn built_ins() -> Vec<ScenarioConfig> {
    SCENARIOS.iter().filter_map(|s| scenarios::find(s.name)).map(|s| s.config().unwrap()).collect()
}

/// A measured quantity against a pinned bound.
struct Item {
    label: String,
    value: f64,
    limit: f64,
    bound: Bound,
}

impl Item {
    fn at_most(label: impl Into<String>, value: f64, limit: f64) -> Self {
        Item { label: label.into(), value, limit, bound: Bound::AtMost }
    }

    fn at_least(label: impl Into<String>, value: f64, limit: f64) -> Self {
        Item { label: label.into(), value, limit, bound: Bound::AtLeast }
    }

    fn ok(&self) -> bool {
        match self.bound {
            Bound::AtMost => self.value <= self.limit,
            Bound::AtLeast => self.value >= self.limit,
        }
    }
}

/// Worst value of a report check over `runs`, compared with `limit`.
fn worst(runs: &[&Run], check: &str, limit: f64, bound: Bound) -> Item {
    let values: Vec<(f64, &str)> =
        runs.iter().filter_map(|r| r.measured(check).map(|v| (v, r.config.name.as_str()))).collect();
    assert!(!values.is_empty(), "no run reports {check}");
    let pick = match bound {
        Bound::AtMost => values.iter().cloned().fold((f64::NEG_INFINITY, ""), |a, b| if b.0 > a.0 { b } else { a }),
        Bound::AtLeast => values.iter().cloned().fold((f64::INFINITY, ""), |a, b| if b.0 < a.0 { b } else { a }),
    };
    Item { label: format!("{check} [{}]", pick.1), value: pick.0, limit, bound }
}

fn line(number: u32, title: &str, items: &[Item]) -> bool {
    let pass = items.iter().all(Item::ok);
    let detail: Vec<String> = items
        .iter()
        .map(|i| {
            let op = match i.bound {
                Bound::AtMost => "<=",
                Bound::AtLeast => ">=",
            };
            let mark = if i.ok() { "" } else { " (!)" };
            format!("{} {:.2e} {op} {:.1e}{mark}", i.label, i.value, i.limit)
        })
        .collect();
    println!("criterion {number:>2}: {}  {title}: {}", if pass { "PASS" } else { "FAIL" }, detail.join("; "));
    pass
}

fn conservation(configs: &[ScenarioConfig]) -> Vec<Item> {
    let mut worst = (0.0_f64, String::new());
    for cfg in configs {
        for kappa in [0.5, 1.0, 2.0] {
            let s = solve_sigma(
                &cfg.profile,
                kappa,
                cfg.initial.into(),
                (cfg.horizon[0], cfg.horizon[1]),
                &SolverOptions::with_tol(1e-10),
            )
            .unwrap();
            let r = s.max_conservation_residual().unwrap() / (kappa * kappa);
            if r >= worst.0 {
                worst = (r, format!("{} kappa = {kappa}", cfg.name));
            }
        }
    }
    vec![Item::at_most(format!("|g^2 - ab + k^2|/k^2 [{}]", worst.1), worst.0, CONSERVATION)]
}

/// Refines the tolerance from 1e-10 to 1e-11 on every time-dependent
/// scenario. The residual must shrink everywhere; where both values sit
/// above the stencil floor the observed order in the step size must reach
/// `REFINEMENT_ORDER`.
fn refinement(configs: &[ScenarioConfig]) -> Vec<Item> {
    let mut order = f64::INFINITY;
    let mut label = String::from("order in step size");
    let mut growth = 0.0_f64;
    for cfg in configs.iter().filter(|c| !c.profile.is_constant()) {
        let [coarse, fine] = [1e-10, 1e-11].map(|tol| {
            let s = solve_sigma(
                &cfg.profile,
                cfg.kappa,
                cfg.initial.into(),
                (cfg.horizon[0], cfg.horizon[1]),
                &SolverOptions::with_tol(tol),
            )
            .unwrap();
            (max_coefficient_residual(&s, DEFAULT_STENCIL).unwrap(), s.step_count() as f64)
        });
        growth = growth.max(fine.0 / coarse.0);
        if coarse.0 > REFINEMENT_FLOOR && fine.0 > REFINEMENT_FLOOR {
            let q = (coarse.0 / fine.0).ln() / (fine.1 / coarse.1).ln();
            if q < order {
                order = q;
                label = format!("order in step size, tol 1e-10 -> 1e-11 [{}]", cfg.name);
            }
        }
    }
    vec![Item::at_most("residual ratio under refinement", growth, 1.0), Item::at_least(label, order, REFINEMENT_ORDER)]
}

fn bopp(configs: &[ScenarioConfig]) -> Item {
    let mut r = 0.0_f64;
    for cfg in configs.iter().filter(|c| c.profile.theta != 0.0) {
        for theta in [0.0, 0.1, 0.5] {
            let mut p = cfg.profile.clone();
            p.theta = theta;
            for t in cfg.sample_times() {
                r = r.max(bopp_shift_check(&p, t).unwrap());
            }
        }
    }
    Item::at_most("bopp shift, theta in {0, 0.1, 0.5}", r, BOPP)
}

fn main() -> ExitCode {
    let configs = built_ins();
    let runs: Vec<Run> = configs
        .iter()
        .map(|c| Run { config: c.clone(), report: run_scenario(c).expect("scenario runs").1 })
        .collect();
    let all: Vec<&Run> = runs.iter().collect();
    let smooth: Vec<&Run> = all.clone();
    let constant: Vec<&Run> = runs.iter().filter(|r| r.config.profile.is_constant()).collect();
    let varying: Vec<&Run> = runs.iter().filter(|r| !r.config.profile.is_constant()).collect();
    let nc: Vec<&Run> = runs.iter().filter(|r| r.config.profile.theta != 0.0).collect();
    use Bound::{AtLeast, AtMost};

    let algebra = algebra_defects(&build_ladder(32).unwrap(), 1.0)
        .into_iter()
        .fold((0.0_f64, ""), |a, b| if b.1 > a.0 { (b.1, b.0) } else { a });

    let mut results = vec![
        line(1, "conservation, kappa in {0.5, 1, 2}", &conservation(&configs)),
        line(
            2,
            "coefficient equations",
            &std::iter::once(worst(&smooth, "coefficient-ode", COEFFICIENT_ODE, AtMost))
                .chain(refinement(&configs))
                .collect::<Vec<_>>(),
        ),
        line(
            3,
            "operator algebra, n_max = 32 interior",
            &[Item::at_most(format!("worst {}", algebra.1), algebra.0, OPERATOR_ALGEBRA)],
        ),
        line(
            4,
            "joint spectrum",
            &[worst(&all, "fock-spectrum", FOCK_SPECTRUM, AtMost), worst(&all, "grid-eigen", GRID_EIGEN, AtMost)],
        ),
        line(
            5,
            "matrix element of H",
            &[worst(&all, "energy", ENERGY, AtMost), worst(&all, "hamiltonian-structure", HAMILTONIAN_BAND, AtMost)],
        ),
        line(6, "time-derivative overlap", &[worst(&smooth, "dt-overlap", DT_OVERLAP, AtMost)]),
        line(
            7,
            "Schrodinger residual",
            &[
                worst(&constant, "schrodinger", SCHRODINGER_STATIONARY, AtMost),
                worst(&varying, "schrodinger", SCHRODINGER, AtMost),
                worst(&all, "negative-control", NEGATIVE_CONTROL, AtLeast),
            ],
        ),
        line(
            8,
            "phase splitting",
            &[
                worst(&all, "phase-split", PHASE_SPLIT, AtMost),
                worst(&all, "phase-rate", PHASE_RATE, AtMost),
                worst(&constant, "stationary", STATIONARY_PHASE, AtMost),
            ],
        ),
    ];

    let nc_failures: Vec<String> = nc
        .iter()
        .flat_map(|r| r.report.failures().map(move |c| format!("{}:{}", r.config.name, c.name)))
        .collect();
    results.push(line(
        9,
        "noncommutative consistency",
        &[
            worst(&all, "nc-reduction", NC_REDUCTION, AtMost),
            bopp(&configs),
            Item::at_most(
                if nc_failures.is_empty() { "failed checks on nc scenarios".into() } else { nc_failures.join(",") },
                nc_failures.len() as f64,
                0.0,
            ),
        ],
    ));
    results.push(line(10, "orthonormal evolution, n <= 3", &[worst(&all, "orthonormality", ORTHONORMALITY, AtMost)]));

    let failed = results.iter().filter(|p| !**p).count();
    println!("acceptance: {} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
