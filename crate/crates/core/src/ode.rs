//! Dormand–Prince 5(4) integrator with the 4th-order continuous extension
//! (Hairer, Nørsett & Wanner, `DOPRI5` dense output).
//!
//! States are fixed-size arrays. Every accepted step is kept together with
//! its interpolation coefficients, so the resulting [`Trajectory`] can be
//! evaluated anywhere on the integrated interval.

use crate::error::{Error, Result};

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// b - b̂
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Nominal order of the propagated solution.
pub const ORDER: u32 = 5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepControl {
    /// Embedded error control with relative and absolute tolerance `tol`.
    Adaptive { tol: f64 },
    /// Fixed step, shortened only to land on the segment end.
    Fixed { h: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub control: StepControl,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Settings {
    pub fn adaptive(tol: f64) -> Self {
        Settings { control: StepControl::Adaptive { tol }, h_max: f64::INFINITY, max_steps: 2_000_000 }
    }
}

/// One accepted step with its dense-output polynomial.
#[derive(Clone, Debug)]
pub struct DenseStep<const D: usize> {
    pub t: f64,
    pub h: f64,
    pub y0: [f64; D],
    pub y1: [f64; D],
    cont: [[f64; D]; 4],
}

impl<const D: usize> DenseStep<D> {
    pub fn t_end(&self) -> f64 {
        self.t + self.h
    }

    /// Interpolated state at `t` (expected inside `[self.t, self.t + h]`).
    pub fn eval(&self, t: f64) -> [f64; D] {
        let s = (t - self.t) / self.h;
        let s1 = 1.0 - s;
        let mut out = [0.0; D];
        for (i, o) in out.iter_mut().enumerate() {
            let [c2, c3, c4, c5] = [self.cont[0][i], self.cont[1][i], self.cont[2][i], self.cont[3][i]];
            *o = self.y0[i] + s * (c2 + s1 * (c3 + s * (c4 + s1 * c5)));
        }
        out
    }
}

/// Sequence of contiguous accepted steps.
#[derive(Clone, Debug)]
pub struct Trajectory<const D: usize> {
    pub steps: Vec<DenseStep<D>>,
}

impl<const D: usize> Trajectory<D> {
    pub fn t_start(&self) -> f64 {
        self.steps[0].t
    }

    pub fn t_end(&self) -> f64 {
        self.steps.last().map(|s| s.t_end()).unwrap_or(f64::NAN)
    }

    /// Locates the step containing `t`; at a shared endpoint the later step
    /// is used.
    pub fn step_index(&self, t: f64) -> usize {
        let idx = self.steps.partition_point(|s| s.t <= t);
        idx.clamp(1, self.steps.len()) - 1
    }

    pub fn eval(&self, t: f64) -> [f64; D] {
        let step = &self.steps[self.step_index(t)];
        if t == step.t_end() {
            return step.y1;
        }
        if t == step.t {
            return step.y0;
        }
        step.eval(t)
    }

    pub fn final_state(&self) -> [f64; D] {
        self.steps.last().map(|s| s.y1).unwrap_or([f64::NAN; D])
    }
}

fn axpy<const D: usize>(y: &[f64; D], h: f64, terms: &[(f64, &[f64; D])]) -> [f64; D] {
    let mut out = *y;
    for i in 0..D {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        out[i] += h * acc;
    }
    out
}

fn all_finite<const D: usize>(y: &[f64; D]) -> bool {
    y.iter().all(|v| v.is_finite())
}

/// Integrates `y' = f(t, y)` on `[t0, t1]`.
///
/// `accept` is called on every accepted step end and may abort the run.
pub fn integrate<const D: usize, F, A>(
    settings: &Settings,
    t0: f64,
    t1: f64,
    y0: [f64; D],
    mut f: F,
    mut accept: A,
) -> Result<Trajectory<D>>
where
    F: FnMut(f64, &[f64; D]) -> Result<[f64; D]>,
    A: FnMut(f64, &[f64; D]) -> Result<()>,
{
    if !(t1 > t0) {
        return Err(Error::InvalidArgument(format!("empty integration interval [{t0}, {t1}]")));
    }
    let span = t1 - t0;
    let h_max = settings.h_max.min(span);

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    let mut h = match settings.control {
        StepControl::Fixed { h } => {
            if !(h > 0.0) {
                return Err(Error::InvalidArgument("fixed step must be positive".into()));
            }
            h
        }
        StepControl::Adaptive { tol } => {
            if !(tol > 0.0) {
                return Err(Error::InvalidArgument("tolerance must be positive".into()));
            }
            initial_step(&mut f, t, &y, &k1, tol, h_max)?
        }
    };

    let mut steps = Vec::new();
    let mut fac_old: f64 = 1e-4;
    let mut rejected_last = false;

    loop {
        if steps.len() >= settings.max_steps {
            return Err(Error::Integration { t, reason: "step budget exhausted".into() });
        }
        let remaining = t1 - t;
        let last = h >= remaining * (1.0 - 1e-12);
        if last {
            h = remaining;
        }
        if h <= span * 1e-14 {
            return Err(Error::Integration { t, reason: format!("step size underflow (h = {h:e})") });
        }

        let k2 = f(t + C2 * h, &axpy(&y, h, &[(A21, &k1)]))?;
        let k3 = f(t + C3 * h, &axpy(&y, h, &[(A31, &k1), (A32, &k2)]))?;
        let k4 = f(t + C4 * h, &axpy(&y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]))?;
        let k5 = f(t + C5 * h, &axpy(&y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]))?;
        let t_new = if last { t1 } else { t + h };
        let k6 = f(
            t_new,
            &axpy(&y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]),
        )?;
        let y_new = axpy(&y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(t_new, &y_new)?;

        if !all_finite(&y_new) && matches!(settings.control, StepControl::Fixed { .. }) {
            return Err(Error::Integration { t, reason: "non-finite state".into() });
        }

        let mut h_next = h;
        if let StepControl::Adaptive { tol } = settings.control {
            let err_vec =
                axpy(&[0.0; D], h, &[(E1, &k1), (E3, &k3), (E4, &k4), (E5, &k5), (E6, &k6), (E7, &k7)]);
            let mut err = 0.0;
            for i in 0..D {
                let sc = tol + tol * y[i].abs().max(y_new[i].abs());
                err += (err_vec[i] / sc).powi(2);
            }
            let err = (err / D as f64).sqrt();
            if !err.is_finite() || !all_finite(&y_new) {
                h *= 0.2;
                rejected_last = true;
                continue;
            }
            // PI controller, beta = 0.04.
            let fac11 = err.max(1e-16).powf(0.2 - 0.04 * 0.75);
            if err > 1.0 {
                h /= (fac11 / 0.9).min(10.0);
                rejected_last = true;
                continue;
            }
            let fac = (fac11 / fac_old.powf(0.04) / 0.9).clamp(0.2, 10.0);
            fac_old = err.max(1e-4);
            h_next = (h / fac).min(h_max);
            if rejected_last {
                h_next = h_next.min(h);
            }
            rejected_last = false;
        }

        let ydiff: [f64; D] = std::array::from_fn(|i| y_new[i] - y[i]);
        let bspl: [f64; D] = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
        let c4: [f64; D] = std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]);
        let c5 = axpy(&[0.0; D], h, &[(D1, &k1), (D3, &k3), (D4, &k4), (D5, &k5), (D6, &k6), (D7, &k7)]);
        accept(t_new, &y_new)?;
        steps.push(DenseStep { t, h: t_new - t, y0: y, y1: y_new, cont: [ydiff, bspl, c4, c5] });
        t = t_new;
        y = y_new;
        k1 = k7;
        if last {
            break;
        }
        h = h_next;
    }
    Ok(Trajectory { steps })
}

fn initial_step<const D: usize, F>(
    f: &mut F,
    t: f64,
    y: &[f64; D],
    k1: &[f64; D],
    tol: f64,
    h_max: f64,
) -> Result<f64>
where
    F: FnMut(f64, &[f64; D]) -> Result<[f64; D]>,
{
    let sc: [f64; D] = std::array::from_fn(|i| tol + tol * y[i].abs());
    let norm = |v: &[f64; D]| (v.iter().zip(&sc).map(|(a, s)| (a / s).powi(2)).sum::<f64>() / D as f64).sqrt();
    let dnf = norm(k1);
    let dny = norm(y);
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 { 1e-6 } else { 0.01 * dny / dnf };
    h = h.min(h_max);
    let y1 = axpy(y, h, &[(1.0, k1)]);
    let k2 = f(t + h, &y1)?;
    let diff: [f64; D] = std::array::from_fn(|i| k2[i] - k1[i]);
    let der2 = norm(&diff) / h;
    let der12 = der2.max(dnf);
    let h1 = if der12 <= 1e-15 { (h * 1e-3).max(1e-6) } else { (0.01 / der12).powf(1.0 / 5.0) };
    Ok((100.0 * h).min(h1).min(h_max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn harmonic(_t: f64, y: &[f64; 2]) -> Result<[f64; 2]> {
        Ok([y[1], -y[0]])
    }

    #[test]
    fn adaptive_harmonic_accuracy() {
        let traj = integrate(&Settings::adaptive(1e-10), 0.0, 10.0, [1.0, 0.0], harmonic, |_, _| Ok(())).unwrap();
        let y = traj.final_state();
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
        // dense output between steps
        for t in [0.123, 3.3, 7.77] {
            let y = traj.eval(t);
            assert!((y[0] - t.cos()).abs() < 1e-8, "dense error at {t}");
        }
        assert_eq!(traj.t_end(), 10.0);
    }

    #[test]
    fn fixed_step_converges_at_fifth_order() {
        let err = |h: f64| {
            let s = Settings { control: StepControl::Fixed { h }, h_max: f64::INFINITY, max_steps: 1_000_000 };
            let y = integrate(&s, 0.0, 2.0, [1.0, 0.0], harmonic, |_, _| Ok(())).unwrap().final_state();
            (y[0] - 2f64.cos()).abs()
        };
        let slope = (err(0.1) / err(0.05)).log2();
        assert!((slope - 5.0).abs() < 0.5, "slope {slope}");
    }

    #[test]
    fn accept_callback_aborts() {
        let r = integrate(&Settings::adaptive(1e-8), 0.0, 5.0, [1.0, 0.0], harmonic, |t, _| {
            if t > 1.0 {
                Err(Error::Singularity { t, sigma: 0.0 })
            } else {
                Ok(())
            }
        });
        assert!(matches!(r, Err(Error::Singularity { .. })));
    }
}
