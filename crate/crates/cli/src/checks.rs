//! Named property checks and the shared sampling they draw on.

use std::sync::Arc;

use lrcore::ermakov::{interior_nodes, max_coefficient_residual, DEFAULT_STENCIL};
use lrcore::fockspace::{
    algebra_defects, build_invariants, build_ladder, creation_rate_closed_form, creation_rate_fd,
    hamiltonian_structure, invariance_residual, max_abs, max_abs_block, FockOperatorSet,
};
use lrcore::phases::{self, PhaseRecord};
use lrcore::profiles::{bopp_shift_check, effective_commutative, effective_noncommutative};
use lrcore::wavefield::{
    apply_hamiltonian, apply_invariant, basis_states, orthonormality_defect, AccuracyWarning, Grid2D, WaveField,
};
use lrcore::{solve_sigma, Complex64, FockIndex, SigmaSolution, SolverOptions};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Extent, ScenarioConfig};
use crate::CliError;

pub struct CheckSpec {
    pub name: &'static str,
    pub description: &'static str,
}

pub const CHECKS: &[CheckSpec] = &[
    CheckSpec { name: "conservation", description: "max |gamma^2 - alpha beta + kappa^2| / kappa^2 over the run" },
    CheckSpec { name: "coefficient-ode", description: "residual of the invariant-coefficient equations" },
    CheckSpec { name: "operator-algebra", description: "ladder commutators on the matrix interior block" },
    CheckSpec { name: "fock-spectrum", description: "I and L diagonal with entries 2 kappa (n+1) and m" },
    CheckSpec { name: "hamiltonian-structure", description: "two matrix forms of H agree; H couples only (n, m) to (n +- 2, m)" },
    CheckSpec { name: "invariance", description: "relative dI/dt - i[I, H] on the matrix interior block" },
    CheckSpec { name: "creation-rate", description: "closed-form time derivative of the creation operators" },
    CheckSpec { name: "grid-eigen", description: "grid eigen-residuals of I and L on the basis states" },
    CheckSpec { name: "energy", description: "quadrature <n,m|H|n,m> against the closed form (relative)" },
    CheckSpec { name: "hermiticity", description: "<phi|H psi> = conj <psi|H phi> over basis pairs" },
    CheckSpec { name: "dt-overlap", description: "finite-difference <n,m|d/dt|n,m> against the closed form" },
    CheckSpec { name: "schrodinger", description: "relative residual of the Schrodinger equation" },
    CheckSpec { name: "negative-control", description: "Schrodinger residual without the phase factor (lower bound)" },
    CheckSpec { name: "phase-split", description: "alpha = alpha_dynamical + alpha_geometric" },
    CheckSpec { name: "phase-rate", description: "d alpha/dt = -(n+1) kappa/(mu sigma^2) + m nu" },
    CheckSpec { name: "stationary", description: "constant parameters: alpha = -E (t - t0) and H psi = E psi" },
    CheckSpec { name: "norm", description: "unit norm of every evolved state" },
    CheckSpec { name: "orthonormality", description: "Gram matrix of the evolved states with n <= 3" },
    CheckSpec { name: "nc-reduction", description: "noncommutative coefficients at theta = 0 equal the commutative ones" },
    CheckSpec { name: "bopp-shift", description: "Bopp-shifted Hamiltonian matches the reduced form" },
    CheckSpec { name: "ground-rate-angular", description: "L annihilates the time derivative of the ground state" },
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub bound: Bound,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn at_most(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.into(),
            measured,
            threshold,
            bound: Bound::AtMost,
            passed: measured <= threshold,
            detail: detail.into(),
        }
    }

    fn at_least(name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        CheckOutcome {
            name: name.into(),
            measured,
            threshold,
            bound: Bound::AtLeast,
            passed: measured >= threshold,
            detail: detail.into(),
        }
    }
}

/// Grid measurements for one state at one time.
#[derive(Clone, Debug)]
pub struct StateSample {
    pub idx: FockIndex,
    pub norm_defect: f64,
    pub invariant_residual: f64,
    pub angular_residual: f64,
    pub energy_relative: f64,
    /// `‖Hψ − Eψ‖` for constant-parameter equilibrium runs.
    pub stationary_residual: Option<f64>,
    pub schrodinger: Option<f64>,
    pub control: Option<f64>,
    pub overlap_error: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct GridSample {
    pub t: f64,
    /// `t ± dt` inside the horizon and clear of profile breakpoints.
    pub interior: bool,
    pub states: Vec<StateSample>,
    pub orthonormality: f64,
    pub hermiticity: f64,
    pub ground_rate_angular: Option<f64>,
    pub warnings: Vec<AccuracyWarning>,
}

/// Everything the checks and the writers need from one run.
pub struct Context {
    pub config: ScenarioConfig,
    pub solution: SigmaSolution,
    pub grid: Arc<Grid2D>,
    pub times: Vec<f64>,
    pub indices: Vec<FockIndex>,
    pub records: Vec<PhaseRecord>,
    pub samples: Vec<GridSample>,
    pub fock: FockOperatorSet,
    pub stationary: bool,
}

impl Context {
    pub fn build(config: &ScenarioConfig) -> Result<Self, CliError> {
        let [t0, t1] = config.horizon;
        let solution = solve_sigma(
            &config.profile,
            config.kappa,
            config.initial.into(),
            (t0, t1),
            &SolverOptions::with_tol(config.tolerance),
        )?;
        let extent = match config.grid.extent {
            Extent::Auto => lrcore::wavefield::AUTO_EXTENT_FACTOR * solution.max_length_scale(),
            Extent::HalfWidth(x) => x,
        };
        let grid = Arc::new(Grid2D::new(extent, config.grid.points).map_err(|e| CliError::Config(e.to_string()))?);
        let times = config.sample_times();
        let indices = config.indices();
        let records = phases::phase_records(&indices, &solution, &times)?;
        let fock = build_ladder(config.n_max)?;
        let stationary =
            config.profile.is_constant() && matches!(config.initial, crate::config::InitialSpec::Equilibrium);
        let mut ctx = Context {
            config: config.clone(),
            solution,
            grid,
            times,
            indices,
            records,
            samples: Vec::new(),
            fock,
            stationary,
        };
        ctx.samples = ctx.times.iter().map(|&t| ctx.sample_at(t)).collect::<Result<_, _>>()?;
        Ok(ctx)
    }

    fn is_interior(&self, t: f64) -> bool {
        let dt = self.config.dt;
        let (t0, t1) = self.solution.horizon();
        t - dt >= t0
            && t + dt <= t1
            && !self.config.profile.breakpoints(t0, t1).iter().any(|b| (b - t).abs() <= 2.0 * dt)
    }

    fn sample_at(&self, t: f64) -> Result<GridSample, CliError> {
        let sol = &self.solution;
        let dt = self.config.dt;
        let kappa = self.config.kappa;
        let n_top = self.indices.iter().map(|i| i.n).max().unwrap_or(0).max(3);
        let frame = sol.frame(t)?;
        let here = basis_states(&self.grid, n_top, &frame)?;
        let interior = self.is_interior(t);
        let (plus, minus) = if interior {
            (
                Some(basis_states(&self.grid, n_top, &sol.frame(t + dt)?)?),
                Some(basis_states(&self.grid, n_top, &sol.frame(t - dt)?)?),
            )
        } else {
            (None, None)
        };
        let phase = |idx: FockIndex, s: f64| -> Result<Complex64, CliError> {
            Ok(Complex64::from_polar(1.0, phases::phase_total(idx, sol, s)?))
        };
        let stationary_energy = |idx: FockIndex| {
            (idx.n as f64 + 1.0) * (frame.omega_sq / frame.mu).sqrt() - idx.m as f64 * frame.nu
        };

        let per_state: Vec<(StateSample, WaveField)> = self
            .indices
            .par_iter()
            .map(|&idx| -> Result<(StateSample, WaveField), CliError> {
                let pos = idx.position();
                let psi = &here[pos];
                let eig = 2.0 * kappa * (idx.n as f64 + 1.0);
                let inv = apply_invariant(psi, &frame);
                let invariant_residual = inv.distance(&psi.scaled(eig.into()));
                let ang = psi.angular_momentum();
                let angular_residual = ang.distance(&psi.scaled((idx.m as f64).into()));
                let h = apply_hamiltonian(psi, &frame);
                let expected = phases::expected_energy(idx, &frame);
                let energy_relative = (psi.inner(&h) - expected).norm() / expected.abs();
                let stationary_residual =
                    self.stationary.then(|| h.distance(&psi.scaled(stationary_energy(idx).into())));
                let (mut schrodinger, mut control, mut overlap_error) = (None, None, None);
                if let (Some(p), Some(m)) = (&plus, &minus) {
                    let (pp, mm) = (&p[pos], &m[pos]);
                    control = Some(phases::residual_from(pp, mm, &h, dt));
                    let full = phases::residual_from(
                        &pp.scaled(phase(idx, t + dt)?),
                        &mm.scaled(phase(idx, t - dt)?),
                        &h.scaled(phase(idx, t)?),
                        dt,
                    );
                    schrodinger = Some(full);
                    let diff = WaveField::new(self.grid.clone(), (&pp.values - &mm.values) * (0.5 / dt));
                    let expected =
                        Complex64::new(0.0, (idx.n as f64 + 1.0) * frame.geometric_factor_from_acceleration());
                    overlap_error = Some((psi.inner(&diff) - expected).norm());
                }
                let sample = StateSample {
                    idx,
                    norm_defect: (psi.norm() - 1.0).abs(),
                    invariant_residual,
                    angular_residual,
                    energy_relative,
                    stationary_residual,
                    schrodinger,
                    control,
                    overlap_error,
                };
                Ok((sample, h))
            })
            .collect::<Result<_, _>>()?;

        let mut hermiticity = 0.0_f64;
        for (a, (sa, _)) in per_state.iter().enumerate() {
            for (sb, hb) in per_state.iter().skip(a) {
                let ha = &per_state[a].1;
                let (pa, pb) = (&here[sa.idx.position()], &here[sb.idx.position()]);
                hermiticity = hermiticity.max((pa.inner(hb) - pb.inner(ha).conj()).norm());
            }
        }

        let low: Vec<WaveField> = here
            .iter()
            .take(FockIndex::up_to(3).len())
            .map(|f| {
                let idx = f.label.expect("basis states are labelled").idx;
                phase(idx, t).map(|p| f.scaled(p))
            })
            .collect::<Result<_, _>>()?;
        let orthonormality = orthonormality_defect(&low);

        let ground_rate_angular = match (&plus, &minus) {
            (Some(p), Some(m)) => {
                let d = WaveField::new(self.grid.clone(), (&p[0].values - &m[0].values) * (0.5 / dt));
                Some(d.angular_momentum().norm())
            }
            _ => None,
        };

        let mut warnings: Vec<AccuracyWarning> = Vec::new();
        for f in here.iter().chain(plus.iter().flatten()).chain(minus.iter().flatten()) {
            for w in &f.warnings {
                if !warnings.iter().any(|x| std::mem::discriminant(x) == std::mem::discriminant(w)) {
                    warnings.push(*w);
                }
            }
        }

        Ok(GridSample {
            t,
            interior,
            states: per_state.into_iter().map(|(s, _)| s).collect(),
            orthonormality,
            hermiticity,
            ground_rate_angular,
            warnings,
        })
    }

    fn interior_times(&self) -> Vec<f64> {
        self.samples.iter().filter(|s| s.interior).map(|s| s.t).collect()
    }

    fn state_max(&self, f: impl Fn(&StateSample) -> Option<f64>) -> Option<f64> {
        self.samples.iter().flat_map(|s| s.states.iter()).filter_map(f).reduce(f64::max)
    }

    /// Names of the checks that make sense for this run.
    pub fn applicable(&self) -> Vec<&'static str> {
        let has_interior = self.samples.iter().any(|s| s.interior);
        CHECKS
            .iter()
            .map(|c| c.name)
            .filter(|&name| match name {
                "stationary" => self.stationary,
                "dt-overlap" | "schrodinger" | "negative-control" | "invariance" | "phase-rate"
                | "ground-rate-angular" | "creation-rate" => has_interior,
                _ => true,
            })
            .collect()
    }

    pub fn run(&self, name: &str) -> Result<CheckOutcome, CliError> {
        let th = &self.config.thresholds;
        let sol = &self.solution;
        let kappa = self.config.kappa;
        let none = || CliError::Config(format!("check \"{name}\" has no applicable samples in this run"));
        Ok(match name {
            "conservation" => {
                let r = sol.max_conservation_residual()? / (kappa * kappa);
                CheckOutcome::at_most(name, r, th.conservation, format!("{} steps", sol.step_count()))
            }
            "coefficient-ode" => {
                let r = max_coefficient_residual(sol, DEFAULT_STENCIL)?;
                CheckOutcome::at_most(name, r, th.coefficient_ode, format!("interior step points, 5-point stencil, h = {DEFAULT_STENCIL}"))
            }
            "operator-algebra" => {
                let defects = algebra_defects(&self.fock, kappa);
                let (worst, r) = defects.iter().fold(("", 0.0_f64), |acc, (n, d)| if *d > acc.1 { (n, *d) } else { acc });
                CheckOutcome::at_most(name, r, th.operator_algebra, format!("n_max = {}, worst {worst}", self.fock.basis.n_max))
            }
            "fock-spectrum" => {
                let (inv, ang) = build_invariants(&self.fock, kappa);
                let mut r = 0.0_f64;
                for (i, s) in self.fock.basis.states.iter().enumerate() {
                    r = r.max((inv[[i, i]].re - 2.0 * kappa * (s.n as f64 + 1.0)).abs() / (2.0 * kappa));
                    r = r.max((ang[[i, i]].re - s.m as f64).abs());
                }
                let off = |m: &lrcore::fockspace::CMatrix| {
                    m.indexed_iter().filter(|((i, j), _)| i != j).map(|(_, z)| z.norm()).fold(0.0, f64::max)
                };
                r = r.max(off(&inv)).max(off(&ang));
                CheckOutcome::at_most(name, r, th.fock_spectrum, "whole truncated basis")
            }
            "hamiltonian-structure" => {
                let mut r = 0.0_f64;
                for &t in &self.times {
                    let (dual, band) = hamiltonian_structure(&self.fock, &sol.frame(t)?);
                    r = r.max(dual).max(band);
                }
                CheckOutcome::at_most(name, r, th.hamiltonian_structure, "all sample times")
            }
            "invariance" => {
                let times = self.interior_times();
                if times.is_empty() {
                    return Err(none());
                }
                let (inv, _) = build_invariants(&self.fock, kappa);
                let scale = max_abs_block(&inv, &self.fock.basis.interior(self.fock.basis.n_max - 3));
                let mut r = 0.0_f64;
                for t in times {
                    r = r.max(invariance_residual(&self.fock, sol, t, self.config.dt)? / scale);
                }
                CheckOutcome::at_most(name, r, th.invariance, format!("central difference, dt = {}", self.config.dt))
            }
            "creation-rate" => {
                let mut r = 0.0_f64;
                for t in self.interior_times() {
                    let (cm, cp) = creation_rate_closed_form(&self.fock, &sol.frame(t)?);
                    let (fm, fp) = creation_rate_fd(&self.fock, sol, t, self.config.dt)?;
                    r = r.max(max_abs(&(cm - fm))).max(max_abs(&(cp - fp)));
                }
                CheckOutcome::at_most(name, r, th.creation_rate, "closed form against central difference")
            }
            "grid-eigen" => {
                let r = self.state_max(|s| Some(s.invariant_residual.max(s.angular_residual))).unwrap_or(0.0);
                CheckOutcome::at_most(name, r, th.grid_eigen, format!("{} states x {} times", self.indices.len(), self.times.len()))
            }
            "energy" => {
                let r = self.state_max(|s| Some(s.energy_relative)).unwrap_or(0.0);
                CheckOutcome::at_most(name, r, th.energy, "relative")
            }
            "hermiticity" => {
                let r = self.samples.iter().map(|s| s.hermiticity).fold(0.0, f64::max);
                CheckOutcome::at_most(name, r, th.hermiticity, "all configured pairs")
            }
            "dt-overlap" => {
                let r = self.state_max(|s| s.overlap_error).ok_or_else(none)?;
                CheckOutcome::at_most(name, r, th.dt_overlap, format!("dt = {}", self.config.dt))
            }
            "schrodinger" => {
                let r = self.state_max(|s| s.schrodinger).ok_or_else(none)?;
                let limit = if self.stationary { th.schrodinger_stationary } else { th.schrodinger };
                CheckOutcome::at_most(
                    name,
                    r,
                    limit,
                    format!("dt = {}, N = {}, {}", self.config.dt, self.grid.points(), if self.stationary { "stationary" } else { "time-dependent" }),
                )
            }
            "negative-control" => {
                let r = self
                    .samples
                    .iter()
                    .flat_map(|s| s.states.iter())
                    .filter_map(|s| s.control)
                    .reduce(f64::min)
                    .ok_or_else(none)?;
                CheckOutcome::at_least(name, r, th.negative_control, "smallest residual with the phase removed")
            }
            "phase-split" => {
                let r = self.records.iter().map(PhaseRecord::splitting_defect).fold(0.0, f64::max);
                CheckOutcome::at_most(name, r, th.phase_split, "every sample")
            }
            "phase-rate" => {
                let h = DEFAULT_STENCIL;
                let nodes = interior_nodes(sol, 2.5 * h);
                if nodes.is_empty() {
                    return Err(none());
                }
                let mut r = 0.0_f64;
                for &t in &nodes {
                    let frame = sol.frame(t)?;
                    for &idx in &self.indices {
                        let a = |k: f64| phases::phase_total(idx, sol, t + k * h);
                        let d = (a(-2.0)? - 8.0 * a(-1.0)? + 8.0 * a(1.0)? - a(2.0)?) / (12.0 * h);
                        r = r.max((d - phases::phase_rate(idx, &frame)).abs());
                    }
                }
                CheckOutcome::at_most(name, r, th.phase_rate, format!("interior step points, 5-point stencil, h = {h}"))
            }
            "stationary" => {
                let (t0, _) = sol.horizon();
                let frame = sol.frame(t0)?;
                let mut r = 0.0_f64;
                for rec in &self.records {
                    let idx = rec.idx;
                    let e = (idx.n as f64 + 1.0) * (frame.omega_sq / frame.mu).sqrt() - idx.m as f64 * frame.nu;
                    for (t, a) in rec.times.iter().zip(&rec.alpha_total) {
                        r = r.max((a + e * (t - t0)).abs());
                    }
                }
                r = r.max(self.state_max(|s| s.stationary_residual).unwrap_or(0.0));
                CheckOutcome::at_most(name, r, th.stationary, "phase and eigen-equation")
            }
            "norm" => {
                let r = self.state_max(|s| Some(s.norm_defect)).unwrap_or(0.0);
                CheckOutcome::at_most(name, r, th.norm, "every configured state")
            }
            "orthonormality" => {
                let r = self.samples.iter().map(|s| s.orthonormality).fold(0.0, f64::max);
                CheckOutcome::at_most(name, r, th.orthonormality, "states with n <= 3")
            }
            "nc-reduction" => {
                let mut p = self.config.profile.clone();
                p.theta = 0.0;
                let mut r = 0.0_f64;
                for &t in &self.times {
                    let a = effective_commutative(&p, t)?;
                    let b = effective_noncommutative(&p, t)?;
                    let rel = |x: f64, y: f64| if x == y { 0.0 } else { (x - y).abs() / x.abs().max(y.abs()) };
                    r = r.max(rel(a.mu, b.mu)).max(rel(a.omega_sq, b.omega_sq)).max(rel(a.nu, b.nu));
                }
                CheckOutcome::at_most(name, r, th.nc_reduction, "relative, theta set to zero")
            }
            "bopp-shift" => {
                let mut r = 0.0_f64;
                for &t in &self.times {
                    r = r.max(bopp_shift_check(&self.config.profile, t)?);
                }
                CheckOutcome::at_most(name, r, th.bopp_shift, format!("theta = {}", self.config.profile.theta))
            }
            "ground-rate-angular" => {
                let r = self.samples.iter().filter_map(|s| s.ground_rate_angular).reduce(f64::max).ok_or_else(none)?;
                CheckOutcome::at_most(name, r, th.ground_rate_angular, "norm of L d(psi_0)/dt")
            }
            other => return Err(CliError::Config(format!("unknown check \"{other}\""))),
        })
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        for s in &self.samples {
            for w in &s.warnings {
                out.push(format!("t = {}: {w}", s.t));
            }
        }
        out
    }
}
