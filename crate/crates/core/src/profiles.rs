//! Time-dependent physical parameters and their reduction to the effective
//! oscillator coefficients `(μ, ω², ν)`.
//!
//! Both the commutative plane and the canonical noncommutative plane
//! (`[X̂₁, X̂₂] = iθ`) reduce, after the Coulomb gauge and the Bopp shift
//! `x₁ = X̂₁ + θP̂₂/2`, `x₂ = X̂₂ − θP̂₁/2`, to
//!
//! ```text
//! H = p·p / (2μ) + ω² x·x / 2 − ν L,    L = x₁p₂ − x₂p₁.
//! ```
//!
//! Note on the sign of `ν` on the noncommutative plane: expanding the shifted
//! Hamiltonian gives `ν = (4 + eBθ)eB/(8M) + MΩ²θ/2`, which reduces to
//! `eB/(2M)` at `θ = 0`. [`bopp_shift_check`] verifies this by explicit
//! matrix expansion.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::CartesianModes;

/// Which one-sided limit to take when a function is evaluated exactly at one
/// of its breakpoints. Away from breakpoints both sides agree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Side {
    Left,
    #[default]
    Right,
}

impl Side {
    /// Side to use for a stage evaluated at `t` while integrating the
    /// segment `[start, end]`.
    pub fn within(t: f64, start: f64, end: f64) -> Side {
        debug_assert!(start <= end);
        if t >= end && t > start {
            Side::Left
        } else {
            Side::Right
        }
    }
}

/// Natural cubic spline through tabulated samples, clamped to the end values
/// outside the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineTable", into = "SplineTable")]
pub struct CubicSpline {
    times: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct SplineTable {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl TryFrom<SplineTable> for CubicSpline {
    type Error = Error;

    fn try_from(table: SplineTable) -> Result<Self> {
        CubicSpline::new(table.times, table.values)
    }
}

impl From<CubicSpline> for SplineTable {
    fn from(s: CubicSpline) -> Self {
        SplineTable { times: s.times, values: s.values }
    }
}

impl CubicSpline {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "tabulated profile: {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 2 {
            return Err(Error::InvalidArgument(
                "tabulated profile needs at least two samples".into(),
            ));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(
                "tabulated profile times must be strictly increasing".into(),
            ));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "tabulated profile contains non-finite samples".into(),
            ));
        }

        // Tridiagonal solve for the second derivatives, natural ends.
        let n = times.len();
        let mut second = vec![0.0; n];
        if n > 2 {
            let mut diag = vec![0.0; n];
            let mut rhs = vec![0.0; n];
            let mut upper = vec![0.0; n];
            for i in 1..n - 1 {
                let h0 = times[i] - times[i - 1];
                let h1 = times[i + 1] - times[i];
                let lower = h0 / 6.0;
                diag[i] = (h0 + h1) / 3.0;
                upper[i] = h1 / 6.0;
                rhs[i] = (values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0;
                if i > 1 {
                    let w = lower / diag[i - 1];
                    diag[i] -= w * upper[i - 1];
                    rhs[i] -= w * rhs[i - 1];
                }
            }
            for i in (1..n - 1).rev() {
                let next = if i + 1 < n - 1 { second[i + 1] } else { 0.0 };
                second[i] = (rhs[i] - upper[i] * next) / diag[i];
            }
        }
        Ok(CubicSpline { times, values, second })
    }

    fn interval(&self, t: f64) -> usize {
        let idx = self.times.partition_point(|&x| x <= t);
        idx.clamp(1, self.times.len() - 1) - 1
    }

    fn first(&self) -> f64 {
        self.times[0]
    }

    fn last(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn value(&self, t: f64) -> f64 {
        if t <= self.first() {
            return self.values[0];
        }
        if t >= self.last() {
            return *self.values.last().unwrap();
        }
        let i = self.interval(t);
        let h = self.times[i + 1] - self.times[i];
        let a = (self.times[i + 1] - t) / h;
        let b = (t - self.times[i]) / h;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h
                / 6.0
    }

    pub fn derivative(&self, t: f64, side: Side) -> f64 {
        let inside_left = t > self.first() || (t == self.first() && side == Side::Right);
        let inside_right = t < self.last() || (t == self.last() && side == Side::Left);
        if !(inside_left && inside_right) {
            return 0.0;
        }
        let i = if t == self.last() { self.times.len() - 2 } else { self.interval(t) };
        let h = self.times[i + 1] - self.times[i];
        let a = (self.times[i + 1] - t) / h;
        let b = (t - self.times[i]) / h;
        (self.values[i + 1] - self.values[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * self.second[i]
            + (3.0 * b * b - 1.0) / 6.0 * h * self.second[i + 1]
    }
}

/// A scalar function of time, one of a small set of built-in shapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TimeFunction {
    Constant { value: f64 },
    /// Jump from `before` to `after` at `at`; right-continuous.
    Step { before: f64, after: f64, at: f64 },
    /// Linear interpolation between `start` and `end`, constant outside.
    Ramp { from: f64, to: f64, start: f64, end: f64 },
    /// `mean + amplitude · sin(frequency · t + phase)`.
    Sinusoid { mean: f64, amplitude: f64, frequency: f64, #[serde(default)] phase: f64 },
    /// Smooth quench `before → after` centered at `center` with width `width`.
    Tanh { before: f64, after: f64, center: f64, width: f64 },
    Tabulated(CubicSpline),
}

impl TimeFunction {
    pub fn constant(value: f64) -> Self {
        TimeFunction::Constant { value }
    }

    pub fn value(&self, t: f64, side: Side) -> f64 {
        match *self {
            TimeFunction::Constant { value } => value,
            TimeFunction::Step { before, after, at } => {
                if t < at || (t == at && side == Side::Left) {
                    before
                } else {
                    after
                }
            }
            TimeFunction::Ramp { from, to, start, end } => {
                if t <= start {
                    from
                } else if t >= end {
                    to
                } else {
                    from + (to - from) * (t - start) / (end - start)
                }
            }
            TimeFunction::Sinusoid { mean, amplitude, frequency, phase } => {
                mean + amplitude * (frequency * t + phase).sin()
            }
            TimeFunction::Tanh { before, after, center, width } => {
                before + 0.5 * (after - before) * (1.0 + ((t - center) / width).tanh())
            }
            TimeFunction::Tabulated(ref spline) => spline.value(t),
        }
    }

    pub fn derivative(&self, t: f64, side: Side) -> f64 {
        match *self {
            TimeFunction::Constant { .. } | TimeFunction::Step { .. } => 0.0,
            TimeFunction::Ramp { from, to, start, end } => {
                let inside = (t > start && t < end)
                    || (t == start && side == Side::Right)
                    || (t == end && side == Side::Left);
                if inside {
                    (to - from) / (end - start)
                } else {
                    0.0
                }
            }
            TimeFunction::Sinusoid { amplitude, frequency, phase, .. } => {
                amplitude * frequency * (frequency * t + phase).cos()
            }
            TimeFunction::Tanh { before, after, center, width } => {
                let c = ((t - center) / width).cosh();
                0.5 * (after - before) / (width * c * c)
            }
            TimeFunction::Tabulated(ref spline) => spline.derivative(t, side),
        }
    }

    /// Times where the function or its derivative may jump.
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            TimeFunction::Step { at, .. } => vec![at],
            TimeFunction::Ramp { start, end, .. } => vec![start, end],
            TimeFunction::Tabulated(ref s) => vec![s.first(), s.last()],
            _ => Vec::new(),
        }
    }

    pub fn is_constant(&self) -> bool {
        match *self {
            TimeFunction::Constant { .. } => true,
            TimeFunction::Sinusoid { amplitude, frequency, .. } => amplitude == 0.0 || frequency == 0.0,
            TimeFunction::Step { before, after, .. }
            | TimeFunction::Tanh { before, after, .. } => before == after,
            TimeFunction::Ramp { from, to, .. } => from == to,
            TimeFunction::Tabulated(ref s) => s.values.iter().all(|&v| v == s.values[0]),
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidArgument(format!("{name}: {msg}")));
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match *self {
            TimeFunction::Constant { value } if !value.is_finite() => bad("non-finite value"),
            TimeFunction::Step { before, after, at } if !finite(&[before, after, at]) => {
                bad("non-finite step parameters")
            }
            TimeFunction::Ramp { from, to, start, end } => {
                if !finite(&[from, to, start, end]) {
                    bad("non-finite ramp parameters")
                } else if !(end > start) {
                    bad("ramp end must be after start")
                } else {
                    Ok(())
                }
            }
            TimeFunction::Sinusoid { mean, amplitude, frequency, phase }
                if !finite(&[mean, amplitude, frequency, phase]) =>
            {
                bad("non-finite sinusoid parameters")
            }
            TimeFunction::Tanh { before, after, center, width } => {
                if !finite(&[before, after, center, width]) {
                    bad("non-finite tanh parameters")
                } else if !(width > 0.0) {
                    bad("tanh width must be positive")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

/// Physical inputs: mass `M(t)`, trap frequency `Ω(t)`, field `B(t)`, the
/// charge `e` and the noncommutativity `θ` (zero for the ordinary plane).
///
/// Only the product `eB` enters the reduced coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterProfile {
    pub mass: TimeFunction,
    pub omega: TimeFunction,
    pub field: TimeFunction,
    #[serde(default = "unit_charge")]
    pub charge: f64,
    #[serde(default)]
    pub theta: f64,
}

fn unit_charge() -> f64 {
    1.0
}

/// Coefficients of the reduced Hamiltonian at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveParams {
    pub mu: f64,
    pub omega_sq: f64,
    pub nu: f64,
}

/// Raw parameter values at one instant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhysicalValues {
    pub mass: f64,
    pub omega: f64,
    pub field: f64,
}

impl ParameterProfile {
    pub fn new(
        mass: TimeFunction,
        omega: TimeFunction,
        field: TimeFunction,
        charge: f64,
        theta: f64,
    ) -> Result<Self> {
        let p = ParameterProfile { mass, omega, field, charge, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.mass.validate("mass")?;
        self.omega.validate("omega")?;
        self.field.validate("field")?;
        if !self.charge.is_finite() || !self.theta.is_finite() {
            return Err(Error::InvalidArgument("charge and theta must be finite".into()));
        }
        Ok(())
    }

    /// Checks `M > 0` and finiteness on a sample of the horizon, including
    /// both sides of every breakpoint.
    pub fn check_horizon(&self, t0: f64, t1: f64) -> Result<()> {
        const SAMPLES: usize = 512;
        let mut probes: Vec<(f64, Side)> = (0..=SAMPLES)
            .map(|i| (t0 + (t1 - t0) * i as f64 / SAMPLES as f64, Side::Right))
            .collect();
        for b in self.breakpoints(t0, t1) {
            probes.push((b, Side::Left));
            probes.push((b, Side::Right));
        }
        for (t, side) in probes {
            self.effective_at(t, side)?;
        }
        Ok(())
    }

    pub fn values(&self, t: f64, side: Side) -> Result<PhysicalValues> {
        let v = PhysicalValues {
            mass: self.mass.value(t, side),
            omega: self.omega.value(t, side),
            field: self.field.value(t, side),
        };
        if !(v.mass.is_finite() && v.omega.is_finite() && v.field.is_finite()) {
            return Err(Error::Domain { what: "non-finite parameter value".into(), t });
        }
        if v.mass <= 0.0 {
            return Err(Error::Domain { what: format!("non-positive mass M = {}", v.mass), t });
        }
        Ok(v)
    }

    /// Sorted, deduplicated breakpoints strictly inside `(t0, t1)`.
    pub fn breakpoints(&self, t0: f64, t1: f64) -> Vec<f64> {
        let mut b: Vec<f64> = [&self.mass, &self.omega, &self.field]
            .iter()
            .flat_map(|f| f.breakpoints())
            .filter(|&x| x > t0 && x < t1)
            .collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    pub fn is_constant(&self) -> bool {
        self.mass.is_constant() && self.omega.is_constant() && self.field.is_constant()
    }

    pub fn is_commutative(&self) -> bool {
        self.theta == 0.0
    }

    /// Reduced coefficients, choosing the commutative map when `θ = 0`.
    pub fn effective_at(&self, t: f64, side: Side) -> Result<EffectiveParams> {
        let v = self.values(t, side)?;
        if self.is_commutative() {
            Ok(commutative_map(v, self.charge))
        } else {
            noncommutative_map(v, self.charge, self.theta, t)
        }
    }

    pub fn effective(&self, t: f64) -> Result<EffectiveParams> {
        self.effective_at(t, Side::Right)
    }

    /// `dμ/dt`, from the analytic derivatives of `M`, `Ω`, `B`.
    pub fn mu_dot(&self, t: f64, side: Side) -> Result<f64> {
        let v = self.values(t, side)?;
        let m_dot = self.mass.derivative(t, side);
        if self.is_commutative() {
            return Ok(m_dot);
        }
        let (e, th) = (self.charge, self.theta);
        let om_dot = self.omega.derivative(t, side);
        let b_dot = self.field.derivative(t, side);
        let c = 4.0 + e * v.field * th;
        let inv_mu = c * c / (16.0 * v.mass) + v.mass * v.omega * v.omega * th * th / 4.0;
        let d_inv_mu = 2.0 * c * e * th * b_dot / (16.0 * v.mass)
            - c * c * m_dot / (16.0 * v.mass * v.mass)
            + th * th / 4.0 * (m_dot * v.omega * v.omega + 2.0 * v.mass * v.omega * om_dot);
        Ok(-d_inv_mu / (inv_mu * inv_mu))
    }

    /// Centered finite-difference `dμ/dt` with step `h`; used as a cross-check
    /// of [`ParameterProfile::mu_dot`] away from breakpoints.
    pub fn mu_dot_fd(&self, t: f64, h: f64) -> Result<f64> {
        let f = |s: f64| self.effective(s).map(|e| e.mu);
        Ok((-f(t + 2.0 * h)? + 8.0 * f(t + h)? - 8.0 * f(t - h)? + f(t - 2.0 * h)?) / (12.0 * h))
    }
}

fn commutative_map(v: PhysicalValues, charge: f64) -> EffectiveParams {
    let eb = charge * v.field;
    EffectiveParams {
        mu: v.mass,
        omega_sq: v.mass * v.omega * v.omega + eb * eb / (4.0 * v.mass),
        nu: eb / (2.0 * v.mass),
    }
}

fn noncommutative_map(v: PhysicalValues, charge: f64, theta: f64, t: f64) -> Result<EffectiveParams> {
    let eb = charge * v.field;
    let c = 4.0 + eb * theta;
    let m_om2 = v.mass * v.omega * v.omega;
    let inv_mu = c * c / (16.0 * v.mass) + m_om2 * theta * theta / 4.0;
    if !(inv_mu > 0.0) {
        return Err(Error::Domain {
            what: format!("degenerate inverse effective mass 1/mu = {inv_mu}"),
            t,
        });
    }
    Ok(EffectiveParams {
        mu: 1.0 / inv_mu,
        omega_sq: m_om2 + eb * eb / (4.0 * v.mass),
        nu: c * eb / (8.0 * v.mass) + m_om2 * theta / 2.0,
    })
}

/// `μ = M`, `ω² = MΩ² + (eB)²/(4M)`, `ν = eB/(2M)`; ignores `θ`.
pub fn effective_commutative(p: &ParameterProfile, t: f64) -> Result<EffectiveParams> {
    Ok(commutative_map(p.values(t, Side::Right)?, p.charge))
}

/// Coefficients after the Bopp shift:
/// `1/μ = (4+eBθ)²/(16M) + MΩ²θ²/4`, `ω² = MΩ² + (eB)²/(4M)`,
/// `ν = (4+eBθ)eB/(8M) + MΩ²θ/2`.
pub fn effective_noncommutative(p: &ParameterProfile, t: f64) -> Result<EffectiveParams> {
    noncommutative_map(p.values(t, Side::Right)?, p.charge, p.theta, t)
}

/// Expands the noncommutative Hamiltonian in the Bopp-shifted canonical
/// variables on a truncated two-mode Cartesian Fock space and compares it
/// with the reduced form built from [`effective_noncommutative`].
///
/// Returns `max|Ĥ − H_reduced| / max|Ĥ|` (entrywise max norm). Every product
/// in the expansion involves either one mode twice (identical on both sides)
/// or two different modes (which commute exactly in the tensor product), so
/// the result is pure rounding when the reduced coefficients are right.
pub fn bopp_shift_check(p: &ParameterProfile, t: f64) -> Result<f64> {
    const MODE_DIM: usize = 10;
    let v = p.values(t, Side::Right)?;
    let ep = effective_noncommutative(p, t)?;
    let modes = CartesianModes::new(MODE_DIM);
    let (x1, x2, p1, p2) = (&modes.x1, &modes.x2, &modes.p1, &modes.p2);

    let half_theta = 0.5 * p.theta;
    let big_x1 = x1 - &(p2 * half_theta);
    let big_x2 = x2 + &(p1 * half_theta);
    let half_eb = 0.5 * p.charge * v.field;

    let k1 = p1 + &(&big_x2 * half_eb);
    let k2 = p2 - &(&big_x1 * half_eb);
    let shifted = (k1.dot(&k1) + k2.dot(&k2)) * (0.5 / v.mass)
        + (big_x1.dot(&big_x1) + big_x2.dot(&big_x2)) * (0.5 * v.mass * v.omega * v.omega);

    let ang = x1.dot(p2) - x2.dot(p1);
    let reduced = (p1.dot(p1) + p2.dot(p2)) * (0.5 / ep.mu)
        + (x1.dot(x1) + x2.dot(x2)) * (0.5 * ep.omega_sq)
        - ang * ep.nu;

    let scale = shifted.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    let diff = (&shifted - &reduced).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn constant_profile(m: f64, om: f64, b: f64, e: f64, theta: f64) -> ParameterProfile {
        ParameterProfile::new(
            TimeFunction::constant(m),
            TimeFunction::constant(om),
            TimeFunction::constant(b),
            e,
            theta,
        )
        .unwrap()
    }

    #[test]
    fn commutative_examples() {
        let ep = effective_commutative(&constant_profile(1.0, 1.0, 0.0, 1.0, 0.0), 0.0).unwrap();
        assert_eq!((ep.mu, ep.omega_sq, ep.nu), (1.0, 1.0, 0.0));
        let ep = effective_commutative(&constant_profile(1.0, 0.0, 2.0, 1.0, 0.0), 0.0).unwrap();
        assert_eq!((ep.mu, ep.omega_sq, ep.nu), (1.0, 1.0, 1.0));
        let p = constant_profile(2.0, 1.0, 2.0, 1.0, 0.0);
        let ep = effective_commutative(&p, 0.0).unwrap();
        assert_eq!((ep.mu, ep.omega_sq, ep.nu), (2.0, 2.5, 0.5));
        let nc = effective_noncommutative(&p, 0.0).unwrap();
        assert_relative_eq!(nc.mu, 2.0, max_relative = 1e-15);
        assert_eq!(nc.omega_sq, 2.5);
        assert_eq!(nc.nu, 0.5);
    }

    #[test]
    fn noncommutative_examples() {
        let ep = effective_noncommutative(&constant_profile(1.0, 0.0, 2.0, 1.0, 0.1), 0.0).unwrap();
        assert_relative_eq!(1.0 / ep.mu, 1.1025, max_relative = 1e-14);
        assert_relative_eq!(ep.omega_sq, 1.0);
        assert_relative_eq!(ep.nu, 1.05, max_relative = 1e-14);

        let ep = effective_noncommutative(&constant_profile(1.0, 1.0, 0.0, 1.0, 0.5), 0.0).unwrap();
        assert_relative_eq!(1.0 / ep.mu, 1.0625, max_relative = 1e-14);
        assert_relative_eq!(ep.omega_sq, 1.0);
        assert_relative_eq!(ep.nu, 0.25, max_relative = 1e-14);
    }

    #[test]
    fn bopp_examples() {
        for (m, om, b, e, th) in
            [(1.0, 0.0, 2.0, 1.0, 0.0), (1.0, 0.0, 2.0, 1.0, 0.1), (1.0, 1.0, 0.0, 1.0, 0.5), (1.7, 0.6, -1.3, 0.8, 0.3)]
        {
            let r = bopp_shift_check(&constant_profile(m, om, b, e, th), 0.0).unwrap();
            assert!(r <= 1e-10, "residual {r} for {:?}", (m, om, b, e, th));
        }
    }

    #[test]
    fn negative_nu_sign_is_rejected_by_expansion() {
        // Same check with the opposite sign of ν must fail by O(1).
        let p = constant_profile(1.0, 1.0, 2.0, 1.0, 0.3);
        let v = p.values(0.0, Side::Right).unwrap();
        let mut ep = effective_noncommutative(&p, 0.0).unwrap();
        ep.nu = -ep.nu;
        let modes = CartesianModes::new(8);
        let ang = modes.x1.dot(&modes.p2) - modes.x2.dot(&modes.p1);
        let bx1 = &modes.x1 - &(&modes.p2 * 0.15);
        let bx2 = &modes.x2 + &(&modes.p1 * 0.15);
        let k1 = &modes.p1 + &(&bx2 * (0.5 * v.field));
        let k2 = &modes.p2 - &(&bx1 * (0.5 * v.field));
        let shifted = (k1.dot(&k1) + k2.dot(&k2)) * 0.5
            + (bx1.dot(&bx1) + bx2.dot(&bx2)) * 0.5;
        let reduced = (modes.x1.dot(&modes.x1) + modes.x2.dot(&modes.x2)) * (0.5 * ep.omega_sq)
            + (modes.p1.dot(&modes.p1) + modes.p2.dot(&modes.p2)) * (0.5 / ep.mu)
            - ang * ep.nu;
        let diff = (&shifted - &reduced).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        assert!(diff > 0.1);
    }

    #[test]
    fn landau_identity() {
        let p = constant_profile(1.3, 0.0, 0.7, 1.1, 0.0);
        let ep = p.effective(0.0).unwrap();
        assert_relative_eq!(ep.omega_sq * ep.mu, ep.nu * ep.nu * ep.mu * ep.mu, max_relative = 1e-14);
    }

    #[test]
    fn non_positive_mass_names_time() {
        let p = ParameterProfile::new(
            TimeFunction::Sinusoid { mean: 0.5, amplitude: 1.0, frequency: 1.0, phase: 0.0 },
            TimeFunction::constant(1.0),
            TimeFunction::constant(0.0),
            1.0,
            0.0,
        )
        .unwrap();
        let t = -std::f64::consts::FRAC_PI_2;
        match effective_commutative(&p, t) {
            Err(Error::Domain { t: bad, .. }) => assert_eq!(bad, t),
            other => panic!("expected domain error, got {other:?}"),
        }
        assert!(p.check_horizon(-3.0, 0.0).is_err());
    }

    #[test]
    fn step_sides_and_breakpoints() {
        let f = TimeFunction::Step { before: 1.0, after: 2.0, at: 0.5 };
        assert_eq!(f.value(0.5, Side::Left), 1.0);
        assert_eq!(f.value(0.5, Side::Right), 2.0);
        let p = ParameterProfile::new(
            TimeFunction::constant(1.0),
            f,
            TimeFunction::Ramp { from: 0.0, to: 1.0, start: 0.2, end: 0.8 },
            1.0,
            0.0,
        )
        .unwrap();
        assert_eq!(p.breakpoints(0.0, 1.0), vec![0.2, 0.5, 0.8]);
        assert_eq!(Side::within(1.0, 0.5, 1.0), Side::Left);
        assert_eq!(Side::within(0.5, 0.5, 1.0), Side::Right);
    }

    #[test]
    fn analytic_mu_dot_matches_fd() {
        let p = ParameterProfile::new(
            TimeFunction::Sinusoid { mean: 1.0, amplitude: 0.3, frequency: 0.9, phase: 0.1 },
            TimeFunction::Tanh { before: 0.5, after: 1.5, center: 1.0, width: 0.7 },
            TimeFunction::Sinusoid { mean: 1.0, amplitude: 0.4, frequency: 1.3, phase: 0.0 },
            0.9,
            0.4,
        )
        .unwrap();
        for t in [0.1, 0.7, 1.3, 2.9] {
            let a = p.mu_dot(t, Side::Right).unwrap();
            let n = p.mu_dot_fd(t, 1e-3).unwrap();
            assert!((a - n).abs() < 1e-9, "{a} vs {n}");
        }
    }

    #[test]
    fn spline_reproduces_cubic_data_and_derivative() {
        let times: Vec<f64> = (0..41).map(|i| i as f64 * 0.1).collect();
        let values: Vec<f64> = times.iter().map(|t| (1.3 * t).sin()).collect();
        let s = CubicSpline::new(times, values).unwrap();
        for t in [0.55, 1.23, 2.71, 3.33] {
            assert!((s.value(t) - (1.3 * t).sin()).abs() < 1e-4);
            assert!((s.derivative(t, Side::Right) - 1.3 * (1.3 * t).cos()).abs() < 2e-3);
        }
        assert_eq!(s.value(-1.0), 0.0);
        assert!(CubicSpline::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
    }
}
