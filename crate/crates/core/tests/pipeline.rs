//! End-to-end: profile → auxiliary solution → grid states → Schrödinger check.

use std::sync::Arc;

use lrcore::phases::{self, schrodinger_residual, PhaseMode};
use lrcore::wavefield::{orthonormality_defect, Synthesis};
use lrcore::{solve_sigma, FockIndex, Grid2D, InitialCondition, ParameterProfile, SolverOptions, TimeFunction};

fn driven() -> ParameterProfile {
    ParameterProfile::new(
        TimeFunction::Sinusoid { mean: 1.0, amplitude: 0.1, frequency: 1.5, phase: 0.0 },
        TimeFunction::Sinusoid { mean: 1.0, amplitude: 0.3, frequency: 2.0, phase: 0.0 },
        TimeFunction::constant(0.8),
        1.0,
        0.1,
    )
    .unwrap()
}

#[test]
fn evolved_states_solve_the_schrodinger_equation() {
    let sol = solve_sigma(&driven(), 1.0, InitialCondition::Equilibrium, (0.0, 2.0), &SolverOptions::default())
        .unwrap();
    let grid = Arc::new(Grid2D::auto(&sol, 128).unwrap());
    for idx in [FockIndex::new(0, 0).unwrap(), FockIndex::new(3, -1).unwrap()] {
        let r = schrodinger_residual(&grid, idx, &sol, 1.3, 1e-4, Synthesis::Operator, PhaseMode::Full).unwrap();
        assert!(r < 1e-4, "{idx}: {r:e}");
        let control = schrodinger_residual(&grid, idx, &sol, 1.3, 1e-4, Synthesis::Operator, PhaseMode::Omitted)
            .unwrap();
        assert!(control > 0.1, "{idx}: {control:e}");
    }
}

#[test]
fn evolved_basis_stays_orthonormal() {
    let sol = solve_sigma(&driven(), 1.0, InitialCondition::Equilibrium, (0.0, 2.0), &SolverOptions::default())
        .unwrap();
    let grid = Arc::new(Grid2D::auto(&sol, 128).unwrap());
    for t in [0.0, 1.0, 2.0] {
        let states = phases::evolved_states(&grid, 3, &sol, t).unwrap();
        assert!(orthonormality_defect(&states) < 1e-8, "t = {t}");
    }
}

#[test]
fn constant_parameters_give_energy_phases() {
    let p = ParameterProfile::new(
        TimeFunction::constant(1.3),
        TimeFunction::constant(0.7),
        TimeFunction::constant(1.5),
        1.0,
        0.0,
    )
    .unwrap();
    let sol = solve_sigma(&p, 1.0, InitialCondition::Equilibrium, (0.0, 5.0), &SolverOptions::default()).unwrap();
    let ep = p.effective(0.0).unwrap();
    for idx in FockIndex::up_to(4) {
        let energy = (idx.n as f64 + 1.0) * (ep.omega_sq / ep.mu).sqrt() - idx.m as f64 * ep.nu;
        for t in [1.0, 2.5, 5.0] {
            let alpha = phases::phase_total(idx, &sol, t).unwrap();
            assert!((alpha + energy * t).abs() < 1e-8, "{idx} t = {t}");
        }
    }
}
