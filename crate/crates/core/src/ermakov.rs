//! The auxiliary (Ermakov–Pinney type) equation
//!
//! ```text
//! σ̈ + (μ̇/μ) σ̇ + (ω²/μ) σ = κ² / (μ² σ³)
//! ```
//!
//! and the quadratic invariant `I = α x·x + β p·p + γ (x·p + p·x)` built from
//! its solution through `β = σ²`, `γ = −μσσ̇`, `α = μ²σ̇² + κ²/σ²`.
//!
//! The integrator carries four running integrals next to `(σ, σ̇)`:
//!
//! | index | integrand                                   |
//! |-------|---------------------------------------------|
//! | 2     | `κ / (μσ²)`                                 |
//! | 3     | `ν`                                         |
//! | 4     | `(μσ̇² + κ²/(μσ²) + ω²σ²) / (2κ)` (energy)    |
//! | 5     | `(κ²/(μσ²) − ω²σ² − μσ̇²) / (2κ)` (geometric) |
//!
//! so every phase is consistent with the same step sequence.

use crate::error::{Error, Result};
use crate::ode::{self, Settings, Trajectory};
use crate::profiles::{EffectiveParams, ParameterProfile, Side};

pub use crate::ode::StepControl;

const SIGMA: usize = 0;
const SIGMA_DOT: usize = 1;
const INT_KAPPA: usize = 2;
const INT_NU: usize = 3;
const INT_ENERGY: usize = 4;
const INT_GEOMETRIC: usize = 5;
const DIM: usize = 6;

/// Default step of the 5-point stencil used for residuals at step points.
///
/// The dense output is only fourth order, so its derivative between step
/// points carries an error of order (local error)/(step). At the accepted
/// step points the solution has full order and a short stencil sees only the
/// kink of the interpolant, which scales with the stencil step.
pub const DEFAULT_STENCIL: f64 = 2e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialCondition {
    /// `σ₀ = (κ²/(μω²))^{1/4}`, `σ̇₀ = 0` from the parameters at `t0`.
    Equilibrium,
    Explicit { sigma: f64, sigma_dot: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub control: StepControl,
    /// Abort when `σ` drops below this value.
    pub sigma_floor: f64,
    pub h_max: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions::with_tol(1e-10)
    }
}

impl SolverOptions {
    pub fn with_tol(tol: f64) -> Self {
        SolverOptions { control: StepControl::Adaptive { tol }, sigma_floor: 1e-8, h_max: f64::INFINITY }
    }

    pub fn fixed_step(h: f64) -> Self {
        SolverOptions { control: StepControl::Fixed { h }, sigma_floor: 1e-8, h_max: f64::INFINITY }
    }
}

/// Coefficients of `I = α x·x + β p·p + γ(x·p + p·x) + δ L`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvariantCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl InvariantCoeffs {
    /// `γ² − αβ`, equal to `−κ²` on every solution.
    pub fn discriminant(&self) -> f64 {
        self.gamma * self.gamma - self.alpha * self.beta
    }
}

/// `β = σ²`, `γ = −μσσ̇`, `α = σ̇²μ² + κ²/σ²`, `δ = 0`.
pub fn coeffs_from_sigma(sigma: f64, sigma_dot: f64, mu: f64, kappa: f64) -> InvariantCoeffs {
    InvariantCoeffs {
        alpha: sigma_dot * sigma_dot * mu * mu + kappa * kappa / (sigma * sigma),
        beta: sigma * sigma,
        gamma: -mu * sigma * sigma_dot,
        delta: 0.0,
    }
}

/// Everything known about the solution at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub kappa: f64,
    pub sigma: f64,
    pub sigma_dot: f64,
    /// From the auxiliary equation itself.
    pub sigma_ddot: f64,
    pub mu: f64,
    pub mu_dot: f64,
    pub omega_sq: f64,
    pub nu: f64,
}

impl Frame {
    pub fn params(&self) -> EffectiveParams {
        EffectiveParams { mu: self.mu, omega_sq: self.omega_sq, nu: self.nu }
    }

    pub fn coeffs(&self) -> InvariantCoeffs {
        coeffs_from_sigma(self.sigma, self.sigma_dot, self.mu, self.kappa)
    }

    /// Gaussian length scale `σ/√κ` of the ground state.
    pub fn length_scale(&self) -> f64 {
        self.sigma / self.kappa.sqrt()
    }

    /// `(σ̇²μ + κ²/(μσ²) + ω²σ²) / (2κ)`; `⟨n,m|H|n,m⟩ = (n+1)·this − mν`.
    pub fn energy_factor(&self) -> f64 {
        energy_factor(self.sigma, self.sigma_dot, self.mu, self.omega_sq, self.kappa)
    }

    /// `(κ²/(μσ²) − ω²σ² − μσ̇²) / (2κ)`; `⟨n,m|∂t|n,m⟩ = i(n+1)·this`.
    pub fn geometric_factor(&self) -> f64 {
        geometric_factor(self.sigma, self.sigma_dot, self.mu, self.omega_sq, self.kappa)
    }

    /// `(μ/2κ)(σσ̈ + μ̇σσ̇/μ − σ̇²)`; equal to [`Frame::geometric_factor`] on
    /// solutions of the auxiliary equation.
    pub fn geometric_factor_from_acceleration(&self) -> f64 {
        self.mu / (2.0 * self.kappa)
            * (self.sigma * self.sigma_ddot + self.mu_dot * self.sigma * self.sigma_dot / self.mu
                - self.sigma_dot * self.sigma_dot)
    }

    /// `κ/(μσ²)`.
    pub fn kappa_rate(&self) -> f64 {
        self.kappa / (self.mu * self.sigma * self.sigma)
    }
}

fn energy_factor(sigma: f64, sigma_dot: f64, mu: f64, omega_sq: f64, kappa: f64) -> f64 {
    (sigma_dot * sigma_dot * mu + kappa * kappa / (mu * sigma * sigma) + omega_sq * sigma * sigma)
        / (2.0 * kappa)
}

fn geometric_factor(sigma: f64, sigma_dot: f64, mu: f64, omega_sq: f64, kappa: f64) -> f64 {
    (kappa * kappa / (mu * sigma * sigma) - omega_sq * sigma * sigma - mu * sigma_dot * sigma_dot)
        / (2.0 * kappa)
}

fn acceleration(sigma: f64, sigma_dot: f64, ep: &EffectiveParams, mu_dot: f64, kappa: f64) -> f64 {
    kappa * kappa / (ep.mu * ep.mu * sigma * sigma * sigma)
        - ep.omega_sq / ep.mu * sigma
        - mu_dot / ep.mu * sigma_dot
}

/// Equilibrium `σ* = (κ²/(μω²))^{1/4}`, if `ω² > 0`.
pub fn equilibrium_sigma(ep: &EffectiveParams, kappa: f64) -> Option<f64> {
    (ep.omega_sq > 0.0).then(|| (kappa * kappa / (ep.mu * ep.omega_sq)).powf(0.25))
}

/// Dense solution of the auxiliary equation on `[t0, t1]`.
#[derive(Clone, Debug)]
pub struct SigmaSolution {
    pub kappa: f64,
    pub profile: ParameterProfile,
    t0: f64,
    t1: f64,
    trajectory: Trajectory<DIM>,
}

/// Integrates the auxiliary equation, restarting at every profile breakpoint.
pub fn solve_sigma(
    profile: &ParameterProfile,
    kappa: f64,
    init: InitialCondition,
    horizon: (f64, f64),
    opts: &SolverOptions,
) -> Result<SigmaSolution> {
    let (t0, t1) = horizon;
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::InvalidArgument(format!("kappa must be positive, got {kappa}")));
    }
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!("empty horizon [{t0}, {t1}]")));
    }
    if let StepControl::Adaptive { tol } = opts.control {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
    }

    profile.check_horizon(t0, t1)?;

    let (sigma0, sigma_dot0) = match init {
        InitialCondition::Equilibrium => {
            let ep = profile.effective_at(t0, Side::Right)?;
            let s = equilibrium_sigma(&ep, kappa).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "no equilibrium at t0 = {t0} because omega^2 = {}; explicit initial data required",
                    ep.omega_sq
                ))
            })?;
            (s, 0.0)
        }
        InitialCondition::Explicit { sigma, sigma_dot } => (sigma, sigma_dot),
    };
    if !(sigma0 > 0.0 && sigma0.is_finite() && sigma_dot0.is_finite()) {
        return Err(Error::InvalidArgument(format!("need sigma0 > 0, got {sigma0}")));
    }

    let settings = Settings {
        control: opts.control,
        h_max: opts.h_max,
        max_steps: 2_000_000,
    };
    let mut edges = vec![t0];
    edges.extend(profile.breakpoints(t0, t1));
    edges.push(t1);

    let mut state = [0.0; DIM];
    state[SIGMA] = sigma0;
    state[SIGMA_DOT] = sigma_dot0;
    let floor = opts.sigma_floor;
    let mut steps = Vec::new();

    for seg in edges.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        let rhs = |t: f64, y: &[f64; DIM]| -> Result<[f64; DIM]> {
            let side = Side::within(t, a, b);
            let ep = profile.effective_at(t, side)?;
            let mu_dot = profile.mu_dot(t, side)?;
            let (s, sd) = (y[SIGMA], y[SIGMA_DOT]);
            let mut dy = [0.0; DIM];
            dy[SIGMA] = sd;
            dy[SIGMA_DOT] = acceleration(s, sd, &ep, mu_dot, kappa);
            dy[INT_KAPPA] = kappa / (ep.mu * s * s);
            dy[INT_NU] = ep.nu;
            dy[INT_ENERGY] = energy_factor(s, sd, ep.mu, ep.omega_sq, kappa);
            dy[INT_GEOMETRIC] = geometric_factor(s, sd, ep.mu, ep.omega_sq, kappa);
            Ok(dy)
        };
        let accept = |t: f64, y: &[f64; DIM]| -> Result<()> {
            if y[SIGMA] < floor {
                Err(Error::Singularity { t, sigma: y[SIGMA] })
            } else {
                Ok(())
            }
        };
        let traj = ode::integrate(&settings, a, b, state, rhs, accept)?;
        state = traj.final_state();
        steps.extend(traj.steps);
    }

    log::debug!("auxiliary equation on [{t0}, {t1}]: {} accepted steps", steps.len());
    Ok(SigmaSolution { kappa, profile: profile.clone(), t0, t1, trajectory: Trajectory { steps } })
}

impl SigmaSolution {
    pub fn horizon(&self) -> (f64, f64) {
        (self.t0, self.t1)
    }

    fn check(&self, t: f64) -> Result<()> {
        if t >= self.t0 && t <= self.t1 {
            Ok(())
        } else {
            Err(Error::OutsideHorizon { t, t0: self.t0, t1: self.t1 })
        }
    }

    fn state(&self, t: f64) -> Result<[f64; DIM]> {
        self.check(t)?;
        Ok(self.trajectory.eval(t))
    }

    /// Accepted step end points, starting at `t0`.
    pub fn times(&self) -> Vec<f64> {
        std::iter::once(self.t0).chain(self.trajectory.steps.iter().map(|s| s.t_end())).collect()
    }

    fn step_states(&self) -> impl Iterator<Item = &[f64; DIM]> {
        std::iter::once(&self.trajectory.steps[0].y0).chain(self.trajectory.steps.iter().map(|s| &s.y1))
    }

    pub fn sigma_samples(&self) -> Vec<f64> {
        self.step_states().map(|y| y[SIGMA]).collect()
    }

    pub fn sigma_dot_samples(&self) -> Vec<f64> {
        self.step_states().map(|y| y[SIGMA_DOT]).collect()
    }

    pub fn step_count(&self) -> usize {
        self.trajectory.steps.len()
    }

    pub fn sigma(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?[SIGMA])
    }

    pub fn sigma_dot(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?[SIGMA_DOT])
    }

    /// `∫_{t0}^{t} κ/(μσ²) dt'`.
    pub fn phase_int_kappa(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?[INT_KAPPA])
    }

    /// `∫_{t0}^{t} ν dt'`.
    pub fn phase_int_nu(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?[INT_NU])
    }

    /// `∫ (σ̇²μ + κ²/(μσ²) + ω²σ²)/(2κ) dt'`.
    pub fn energy_integral(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?[INT_ENERGY])
    }

    /// `∫ (κ²/(μσ²) − ω²σ² − μσ̇²)/(2κ) dt'`.
    pub fn geometric_integral(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?[INT_GEOMETRIC])
    }

    pub fn frame(&self, t: f64) -> Result<Frame> {
        let y = self.state(t)?;
        let side = if t >= self.t1 { Side::Left } else { Side::Right };
        let ep = self.profile.effective_at(t, side)?;
        let mu_dot = self.profile.mu_dot(t, side)?;
        let (s, sd) = (y[SIGMA], y[SIGMA_DOT]);
        Ok(Frame {
            t,
            kappa: self.kappa,
            sigma: s,
            sigma_dot: sd,
            sigma_ddot: acceleration(s, sd, &ep, mu_dot, self.kappa),
            mu: ep.mu,
            mu_dot,
            omega_sq: ep.omega_sq,
            nu: ep.nu,
        })
    }

    pub fn coeffs(&self, t: f64) -> Result<InvariantCoeffs> {
        Ok(self.frame(t)?.coeffs())
    }

    /// `max |γ² − αβ + κ²|` over step end points and step midpoints.
    pub fn max_conservation_residual(&self) -> Result<f64> {
        let k2 = self.kappa * self.kappa;
        let mut worst = 0.0_f64;
        for step in &self.trajectory.steps {
            for t in [step.t, step.t + 0.5 * step.h, step.t_end()] {
                let c = self.coeffs(t.min(self.t1))?;
                worst = worst.max((c.discriminant() + k2).abs());
            }
        }
        Ok(worst)
    }

    pub fn min_sigma(&self) -> f64 {
        self.sigma_samples().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn max_sigma(&self) -> f64 {
        self.sigma_samples().into_iter().fold(0.0, f64::max)
    }

    /// Largest ground-state length scale `σ/√κ` over the run.
    pub fn max_length_scale(&self) -> f64 {
        let dense = self.trajectory.steps.iter().map(|s| s.eval(s.t + 0.5 * s.h)[SIGMA]);
        self.sigma_samples().into_iter().chain(dense).fold(0.0, f64::max) / self.kappa.sqrt()
    }
}

/// Residuals of the coefficient equations
/// `α̇ − 2ω²γ`, `β̇ + 2γ/μ`, `γ̇ + α/μ − ω²β`, with the time derivatives taken
/// by a 5-point centered stencil of step `h` on the dense solution.
///
/// `t ± 2h` must lie in the horizon and should not straddle a breakpoint.
pub fn coefficient_ode_residual(s: &SigmaSolution, t: f64, h: f64) -> Result<[f64; 3]> {
    let (t0, t1) = s.horizon();
    if t - 2.0 * h < t0 || t + 2.0 * h > t1 {
        return Err(Error::OutsideHorizon { t, t0, t1 });
    }
    let c: Vec<InvariantCoeffs> =
        [-2.0, -1.0, 1.0, 2.0].iter().map(|k| s.coeffs(t + k * h)).collect::<Result<_>>()?;
    let d = |f: fn(&InvariantCoeffs) -> f64| {
        (f(&c[0]) - 8.0 * f(&c[1]) + 8.0 * f(&c[2]) - f(&c[3])) / (12.0 * h)
    };
    let alpha_dot = d(|c| c.alpha);
    let beta_dot = d(|c| c.beta);
    let gamma_dot = d(|c| c.gamma);
    let fr = s.frame(t)?;
    let k = fr.coeffs();
    Ok([
        alpha_dot - 2.0 * fr.omega_sq * k.gamma,
        beta_dot + 2.0 * k.gamma / fr.mu,
        gamma_dot + k.alpha / fr.mu - fr.omega_sq * k.beta,
    ])
}

/// Accepted step points at least `margin` inside the horizon and away from
/// every breakpoint of the profile.
pub fn interior_nodes(s: &SigmaSolution, margin: f64) -> Vec<f64> {
    let (t0, t1) = s.horizon();
    let breaks = s.profile.breakpoints(t0, t1);
    s.times()
        .into_iter()
        .filter(|&t| t - margin >= t0 && t + margin <= t1 && breaks.iter().all(|b| (b - t).abs() >= margin))
        .collect()
}

/// Max of [`coefficient_ode_residual`] over the interior step points.
pub fn max_coefficient_residual(s: &SigmaSolution, h: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for t in interior_nodes(s, 2.5 * h) {
        let r = coefficient_ode_residual(s, t, h)?;
        worst = r.iter().fold(worst, |m, v| m.max(v.abs()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::TimeFunction;

    fn oscillator(m: f64, om: f64, b: f64) -> ParameterProfile {
        ParameterProfile::new(
            TimeFunction::constant(m),
            TimeFunction::constant(om),
            TimeFunction::constant(b),
            1.0,
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn coeffs_hand_example() {
        let c = coeffs_from_sigma(2.0, 0.5, 1.0, 1.0);
        assert_eq!((c.beta, c.gamma, c.alpha), (4.0, -1.0, 0.5));
        assert_eq!(c.discriminant(), -1.0);
    }

    #[test]
    fn equilibrium_is_stationary() {
        let p = oscillator(1.5, 0.8, 0.6);
        let kappa = 1.3;
        let s = solve_sigma(&p, kappa, InitialCondition::Equilibrium, (0.0, 30.0), &SolverOptions::default())
            .unwrap();
        let star = equilibrium_sigma(&p.effective(0.0).unwrap(), kappa).unwrap();
        for t in [0.0, 7.3, 30.0] {
            assert!((s.sigma(t).unwrap() - star).abs() < 1e-12);
        }
        let c = s.coeffs(3.0).unwrap();
        assert!(c.gamma.abs() < 1e-12);
        assert!((c.alpha - kappa * kappa / (star * star)).abs() < 1e-12);
        let r = coefficient_ode_residual(&s, 10.0, DEFAULT_STENCIL).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-11), "{r:?}");
    }

    #[test]
    fn landau_start_without_frequency_needs_explicit_data() {
        let p = oscillator(1.0, 0.0, 0.0);
        let r = solve_sigma(&p, 1.0, InitialCondition::Equilibrium, (0.0, 1.0), &SolverOptions::default());
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
        // free particle with explicit data: σ² grows but stays positive
        let s = solve_sigma(
            &p,
            1.0,
            InitialCondition::Explicit { sigma: 1.0, sigma_dot: 0.0 },
            (0.0, 3.0),
            &SolverOptions::default(),
        )
        .unwrap();
        // exact: σ(t)² = 1 + t² for μ = 1, κ = 1, ω = 0
        assert!((s.sigma(3.0).unwrap() - 10f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn singular_floor_aborts_with_time() {
        let p = oscillator(1.0, 1.0, 0.0);
        let opts = SolverOptions { sigma_floor: 0.5, ..SolverOptions::default() };
        let r = solve_sigma(&p, 0.1, InitialCondition::Explicit { sigma: 2.0, sigma_dot: 0.0 }, (0.0, 10.0), &opts);
        match r {
            Err(Error::Singularity { t, sigma }) => {
                assert!(t > 0.0 && t < 10.0);
                assert!(sigma < 0.5);
            }
            other => panic!("expected singularity, got {other:?}"),
        }
    }

    #[test]
    fn outside_horizon_is_rejected() {
        let p = oscillator(1.0, 1.0, 0.0);
        let s = solve_sigma(&p, 1.0, InitialCondition::Equilibrium, (0.0, 1.0), &SolverOptions::default()).unwrap();
        assert!(matches!(s.sigma(1.5), Err(Error::OutsideHorizon { .. })));
    }

    #[test]
    fn step_in_frequency_keeps_sigma_continuous() {
        let p = ParameterProfile::new(
            TimeFunction::constant(1.0),
            TimeFunction::Step { before: 1.0, after: 2.0, at: 0.0 },
            TimeFunction::constant(0.0),
            1.0,
            0.0,
        )
        .unwrap();
        let s = solve_sigma(&p, 1.0, InitialCondition::Equilibrium, (-1.0, 2.0), &SolverOptions::default()).unwrap();
        // Before the jump the equilibrium holds exactly.
        assert!((s.sigma(-1e-9).unwrap() - 1.0).abs() < 1e-12);
        assert!((s.sigma(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!(s.sigma_dot(0.0).unwrap().abs() < 1e-12);
        // After: exact solution with ω=2, κ=1, σ(0)=1, σ̇(0)=0 is
        // σ² = cos²(2t) + sin²(2t)/4.
        for t in [0.3_f64, 1.1, 2.0] {
            let exact = ((2.0 * t).cos().powi(2) + (2.0 * t).sin().powi(2) / 4.0).sqrt();
            assert!((s.sigma(t).unwrap() - exact).abs() < 1e-9, "t = {t}");
        }
        // The breakpoint is a step boundary.
        assert!(s.times().contains(&0.0));
    }
}
