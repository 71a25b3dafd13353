//! Phases of the invariant eigenstates and the resulting exact solutions
//! `Ψ_{n,m}(t) = e^{iα_{n,m}(t)} ||n,m⟩(t)`.
//!
//! All phases vanish at the start of the horizon. The integrals behind them
//! are carried as extra components of the auxiliary-equation state, so they
//! share its error control:
//!
//! ```text
//! α      = −(n+1) ∫ κ/(μσ²)                         + m ∫ ν
//! α_d    = −(n+1) ∫ (σ̇²μ + κ²/(μσ²) + ω²σ²)/(2κ)    + m ∫ ν      (−∫⟨H⟩)
//! α_g    = −(n+1) ∫ (κ²/(μσ²) − ω²σ² − μσ̇²)/(2κ)                (∫ i⟨∂t⟩)
//! ```

use std::io::{self, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::ermakov::{Frame, SigmaSolution};
use crate::error::Result;
use crate::fockspace::FockIndex;
use crate::wavefield::{self, apply_hamiltonian, Grid2D, Synthesis, WaveField};

fn n1(idx: FockIndex) -> f64 {
    idx.n as f64 + 1.0
}

pub fn phase_total(idx: FockIndex, sol: &SigmaSolution, t: f64) -> Result<f64> {
    Ok(-n1(idx) * sol.phase_int_kappa(t)? + idx.m as f64 * sol.phase_int_nu(t)?)
}

pub fn phase_dynamical(idx: FockIndex, sol: &SigmaSolution, t: f64) -> Result<f64> {
    Ok(-n1(idx) * sol.energy_integral(t)? + idx.m as f64 * sol.phase_int_nu(t)?)
}

pub fn phase_geometric(idx: FockIndex, sol: &SigmaSolution, t: f64) -> Result<f64> {
    Ok(-n1(idx) * sol.geometric_integral(t)?)
}

/// `dα/dt = −(n+1)κ/(μσ²) + mν`.
pub fn phase_rate(idx: FockIndex, frame: &Frame) -> f64 {
    -n1(idx) * frame.kappa_rate() + idx.m as f64 * frame.nu
}

/// `⟨n,m|H|n,m⟩ = (n+1)(σ̇²μ + κ²/(μσ²) + ω²σ²)/(2κ) − mν`.
pub fn expected_energy(idx: FockIndex, frame: &Frame) -> f64 {
    n1(idx) * frame.energy_factor() - idx.m as f64 * frame.nu
}

/// `⟨n,m|∂t|n,m⟩ = i(n+1)(κ²/(μσ²) − ω²σ² − μσ̇²)/(2κ)`.
pub fn expected_dt_overlap(idx: FockIndex, frame: &Frame) -> Complex64 {
    Complex64::new(0.0, n1(idx) * frame.geometric_factor())
}

/// Phase samples of one state.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseRecord {
    pub idx: FockIndex,
    pub times: Vec<f64>,
    pub alpha_total: Vec<f64>,
    pub alpha_dynamical: Vec<f64>,
    pub alpha_geometric: Vec<f64>,
    pub int_kappa: Vec<f64>,
    pub int_nu: Vec<f64>,
}

impl PhaseRecord {
    pub fn sample(idx: FockIndex, sol: &SigmaSolution, times: &[f64]) -> Result<Self> {
        let mut r = PhaseRecord {
            idx,
            times: times.to_vec(),
            alpha_total: Vec::with_capacity(times.len()),
            alpha_dynamical: Vec::with_capacity(times.len()),
            alpha_geometric: Vec::with_capacity(times.len()),
            int_kappa: Vec::with_capacity(times.len()),
            int_nu: Vec::with_capacity(times.len()),
        };
        for &t in times {
            r.alpha_total.push(phase_total(idx, sol, t)?);
            r.alpha_dynamical.push(phase_dynamical(idx, sol, t)?);
            r.alpha_geometric.push(phase_geometric(idx, sol, t)?);
            r.int_kappa.push(sol.phase_int_kappa(t)?);
            r.int_nu.push(sol.phase_int_nu(t)?);
        }
        Ok(r)
    }

    /// `max |α − (α_d + α_g)|`.
    pub fn splitting_defect(&self) -> f64 {
        self.alpha_total
            .iter()
            .zip(&self.alpha_dynamical)
            .zip(&self.alpha_geometric)
            .map(|((a, d), g)| (a - d - g).abs())
            .fold(0.0, f64::max)
    }

    /// Columns `t, alpha_total, alpha_dynamical, alpha_geometric, residual`;
    /// `residual` is the Schrödinger residual at that time when supplied and
    /// `nan` otherwise.
    pub fn write_csv<W: Write>(&self, mut w: W, residuals: Option<&[f64]>) -> io::Result<()> {
        writeln!(w, "t,alpha_total,alpha_dynamical,alpha_geometric,residual")?;
        for i in 0..self.times.len() {
            let r = residuals.and_then(|r| r.get(i).copied()).unwrap_or(f64::NAN);
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i], self.alpha_total[i], self.alpha_dynamical[i], self.alpha_geometric[i], r
            )?;
        }
        Ok(())
    }
}

/// One record per index, computed in parallel.
pub fn phase_records(indices: &[FockIndex], sol: &SigmaSolution, times: &[f64]) -> Result<Vec<PhaseRecord>> {
    indices.par_iter().map(|&idx| PhaseRecord::sample(idx, sol, times)).collect()
}

/// Whether the phase factor is attached; `Omitted` is the negative control.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PhaseMode {
    #[default]
    Full,
    Omitted,
}

/// `Ψ_{n,m}(t)` on the grid.
pub fn evolved_state(
    grid: &Arc<Grid2D>,
    idx: FockIndex,
    sol: &SigmaSolution,
    t: f64,
    how: Synthesis,
    mode: PhaseMode,
) -> Result<WaveField> {
    let psi = wavefield::synthesize(grid, idx, &sol.frame(t)?, how)?;
    Ok(match mode {
        PhaseMode::Full => psi.scaled(Complex64::from_polar(1.0, phase_total(idx, sol, t)?)),
        PhaseMode::Omitted => psi,
    })
}

/// `‖i(Ψ(t+dt) − Ψ(t−dt))/(2dt) − HΨ(t)‖ / ‖HΨ(t)‖`.
pub fn schrodinger_residual(
    grid: &Arc<Grid2D>,
    idx: FockIndex,
    sol: &SigmaSolution,
    t: f64,
    dt: f64,
    how: Synthesis,
    mode: PhaseMode,
) -> Result<f64> {
    let plus = evolved_state(grid, idx, sol, t + dt, how, mode)?;
    let minus = evolved_state(grid, idx, sol, t - dt, how, mode)?;
    let mid = evolved_state(grid, idx, sol, t, how, mode)?;
    let h = apply_hamiltonian(&mid, &sol.frame(t)?);
    Ok(residual_from(&plus, &minus, &h, dt))
}

/// The same residual from precomputed `Ψ(t ± dt)` and `HΨ(t)`.
pub fn residual_from(plus: &WaveField, minus: &WaveField, h_mid: &WaveField, dt: f64) -> f64 {
    let lhs = (&plus.values - &minus.values) * Complex64::new(0.0, 0.5 / dt);
    let diff = &h_mid.values - &lhs;
    WaveField::new(h_mid.grid.clone(), diff).norm() / h_mid.norm()
}

/// `Ψ_{n,m}(t)` for every `n ≤ n_max`, in basis order.
pub fn evolved_states(grid: &Arc<Grid2D>, n_max: u32, sol: &SigmaSolution, t: f64) -> Result<Vec<WaveField>> {
    let frame = sol.frame(t)?;
    wavefield::basis_states(grid, n_max, &frame)?
        .into_iter()
        .map(|f| {
            let idx = f.label.expect("basis states carry their index").idx;
            Ok(f.scaled(Complex64::from_polar(1.0, phase_total(idx, sol, t)?)))
        })
        .collect()
}
