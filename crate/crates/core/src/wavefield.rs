//! Basis states realized on a periodic square grid.
//!
//! Fields are sampled at `x_j = −X + (2X/N) j`, `j = 0..N`, on both axes
//! (array axis 0 is `x₁`, axis 1 is `x₂`). Derivatives are spectral; odd
//! derivatives drop the Nyquist mode. Integrals use the trapezoid rule, which
//! is spectrally accurate for fields that vanish at the boundary.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, Write};
use std::sync::Arc;

use ndarray::{Array2, Axis, Zip};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::ermakov::{Frame, SigmaSolution};
use crate::error::{Error, Result};
use crate::fockspace::FockIndex;

/// Default points per axis.
pub const DEFAULT_POINTS: usize = 256;
/// Automatic half-width in units of the largest ground-state length `σ/√κ`.
pub const AUTO_EXTENT_FACTOR: f64 = 10.0;
/// Smallest accepted half-width in the same units.
pub const MIN_EXTENT_FACTOR: f64 = 8.0;
/// Boundary magnitude above which a field is flagged.
pub const BOUNDARY_LIMIT: f64 = 1e-12;
/// Relative spectral magnitude in the outer wavenumber band above which a
/// field is flagged as under-resolved.
pub const SPECTRAL_TAIL_LIMIT: f64 = 1e-12;
/// Relative magnitude below which spectral coefficients are treated as
/// roundoff by the differentiation filters.
pub const SPECTRAL_FLOOR: f64 = 1e-15;

const I: Complex64 = Complex64::new(0.0, 1.0);

pub struct Grid2D {
    extent: f64,
    points: usize,
    nodes: Vec<f64>,
    wavenumbers: Vec<f64>,
    first: Vec<Complex64>,
    second: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid2D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid2D").field("extent", &self.extent).field("points", &self.points).finish()
    }
}

impl Grid2D {
    pub fn new(extent: f64, points: usize) -> Result<Self> {
        if !(extent.is_finite() && extent > 0.0) {
            return Err(Error::Grid(format!("extent must be positive, got {extent}")));
        }
        if points < 4 || !points.is_multiple_of(2) {
            return Err(Error::Grid(format!("points per axis must be even and >= 4, got {points}")));
        }
        let h = 2.0 * extent / points as f64;
        let nodes = (0..points).map(|j| -extent + h * j as f64).collect();
        let half = points as i64 / 2;
        let wavenumbers: Vec<f64> = (0..points as i64)
            .map(|j| if j < half { j } else { j - points as i64 })
            .map(|j| std::f64::consts::PI / extent * j as f64)
            .collect();
        let first = wavenumbers
            .iter()
            .enumerate()
            .map(|(j, &k)| if j as i64 == half { Complex64::default() } else { I * k })
            .collect();
        let second = wavenumbers.iter().map(|&k| Complex64::new(-k * k, 0.0)).collect();
        let mut planner = FftPlanner::new();
        Ok(Grid2D {
            extent,
            points,
            nodes,
            wavenumbers,
            first,
            second,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
        })
    }

    /// Half-width `AUTO_EXTENT_FACTOR · max_t σ/√κ` over the solution's
    /// horizon.
    pub fn auto(sol: &SigmaSolution, points: usize) -> Result<Self> {
        Grid2D::new(AUTO_EXTENT_FACTOR * sol.max_length_scale(), points)
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.points as f64
    }

    pub fn weight(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wavenumbers
    }

    /// Fails unless the half-width covers `MIN_EXTENT_FACTOR` length scales.
    pub fn check_extent(&self, length: f64) -> Result<()> {
        if self.extent < MIN_EXTENT_FACTOR * length {
            return Err(Error::Grid(format!(
                "half-width {:.4} is below {MIN_EXTENT_FACTOR} x length scale {:.4}",
                self.extent, length
            )));
        }
        Ok(())
    }

    fn sample(&self, f: impl Fn(f64, f64) -> Complex64 + Sync) -> Array2<Complex64> {
        let n = self.points;
        let mut out = Array2::zeros((n, n));
        Zip::indexed(&mut out).par_for_each(|(i, j), v| *v = f(self.nodes[i], self.nodes[j]));
        out
    }

    /// Multiplies the spectrum along `axis` by `mult`. Coefficients below
    /// `SPECTRAL_FLOOR` times the largest one are roundoff and are dropped
    /// first, so repeated differentiation does not amplify them.
    fn filter(&self, values: &Array2<Complex64>, axis: usize, mult: &[Complex64]) -> Array2<Complex64> {
        let n = self.points;
        let scale = 1.0 / n as f64;
        let mut out = self.spectrum_along(values, axis);
        let floor = SPECTRAL_FLOOR * out.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let mut buf = vec![Complex64::default(); n];
        let mut scratch = vec![Complex64::default(); self.inverse.get_inplace_scratch_len()];
        for mut lane in out.lanes_mut(Axis(axis)) {
            buf.iter_mut().zip(lane.iter()).zip(mult).for_each(|((b, v), m)| {
                *b = if v.norm() < floor { Complex64::default() } else { v * m * scale };
            });
            self.inverse.process_with_scratch(&mut buf, &mut scratch);
            lane.iter_mut().zip(&buf).for_each(|(v, b)| *v = *b);
        }
        out
    }

    fn spectrum_along(&self, values: &Array2<Complex64>, axis: usize) -> Array2<Complex64> {
        let mut out = values.clone();
        let mut buf = vec![Complex64::default(); self.points];
        for mut lane in out.lanes_mut(Axis(axis)) {
            buf.iter_mut().zip(lane.iter()).for_each(|(b, v)| *b = *v);
            self.forward.process(&mut buf);
            lane.iter_mut().zip(&buf).for_each(|(v, b)| *v = *b);
        }
        out
    }

    fn times_coordinate(&self, values: &Array2<Complex64>, axis: usize) -> Array2<Complex64> {
        let mut out = values.clone();
        Zip::indexed(&mut out).for_each(|(i, j), v| *v *= self.nodes[if axis == 0 { i } else { j }]);
        out
    }
}

/// Where a field came from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Provenance {
    pub idx: FockIndex,
    pub t: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AccuracyWarning {
    /// Largest magnitude found on the outermost grid lines.
    BoundaryContamination { magnitude: f64 },
    /// Largest relative spectral magnitude in the outer quarter of the
    /// wavenumber range.
    UnderResolved { tail: f64 },
}

impl fmt::Display for AccuracyWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AccuracyWarning::BoundaryContamination { magnitude } => {
                write!(f, "boundary contamination: |psi| = {magnitude:.3e} on the grid edge")
            }
            AccuracyWarning::UnderResolved { tail } => {
                write!(f, "under-resolved: relative spectral tail {tail:.3e}")
            }
        }
    }
}

/// Circular ladder branch: `Left` is `A₋` (raises `m`), `Right` is `A₊`
/// (lowers `m`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Circular {
    Left,
    Right,
}

/// How basis states are produced.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Synthesis {
    /// Repeated spectral application of the creation operators to `ψ₀`.
    #[default]
    Operator,
    /// Direct evaluation of the complex-Hermite closed form.
    ClosedForm,
}

#[derive(Clone, Debug)]
pub struct WaveField {
    pub grid: Arc<Grid2D>,
    pub values: Array2<Complex64>,
    pub label: Option<Provenance>,
    pub warnings: Vec<AccuracyWarning>,
}

impl WaveField {
    pub fn new(grid: Arc<Grid2D>, values: Array2<Complex64>) -> Self {
        WaveField { grid, values, label: None, warnings: Vec::new() }
    }

    fn derived(&self, values: Array2<Complex64>) -> WaveField {
        WaveField { grid: self.grid.clone(), values, label: None, warnings: self.warnings.clone() }
    }

    /// `⟨self|other⟩` by quadrature.
    pub fn inner(&self, other: &WaveField) -> Complex64 {
        let sum = Zip::from(&self.values).and(&other.values).fold(Complex64::default(), |acc, a, b| acc + a.conj() * b);
        sum * self.grid.weight()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() * self.grid.spacing()
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &WaveField) -> f64 {
        let s = Zip::from(&self.values).and(&other.values).fold(0.0, |acc, a, b| acc + (a - b).norm_sqr());
        s.sqrt() * self.grid.spacing()
    }

    pub fn scaled(&self, c: Complex64) -> WaveField {
        let mut out = self.derived(self.values.mapv(|z| z * c));
        out.label = self.label;
        out
    }

    /// Largest magnitude on the edge lines `j = 0` of either axis (the
    /// periodic image of the far edge).
    pub fn boundary_magnitude(&self) -> f64 {
        let first_row = self.values.row(0).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let first_col = self.values.column(0).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let n = self.grid.points - 1;
        let last_row = self.values.row(n).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        let last_col = self.values.column(n).iter().fold(0.0_f64, |m, z| m.max(z.norm()));
        first_row.max(first_col).max(last_row).max(last_col)
    }

    /// Largest spectral magnitude with `|k| ≥ 3/4 k_Nyquist` relative to the
    /// largest overall, checked along both axes.
    pub fn spectral_tail(&self) -> f64 {
        let n = self.grid.points as i64;
        let cut = 3 * n / 8;
        let mut worst = 0.0_f64;
        for axis in 0..2 {
            let spec = self.grid.spectrum_along(&self.values, axis);
            let mut peak = 0.0_f64;
            let mut tail = 0.0_f64;
            for (idx, z) in spec.indexed_iter() {
                let j = if axis == 0 { idx.0 } else { idx.1 } as i64;
                let k = if j < n / 2 { j } else { n - j };
                peak = peak.max(z.norm());
                if k >= cut {
                    tail = tail.max(z.norm());
                }
            }
            if peak > 0.0 {
                worst = worst.max(tail / peak);
            }
        }
        worst
    }

    /// Re-runs the boundary and resolution checks and records any new
    /// warnings.
    pub fn audit(&mut self) {
        let b = self.boundary_magnitude();
        if b > BOUNDARY_LIMIT {
            self.push_warning(AccuracyWarning::BoundaryContamination { magnitude: b });
        }
        let tail = self.spectral_tail();
        if tail > SPECTRAL_TAIL_LIMIT {
            self.push_warning(AccuracyWarning::UnderResolved { tail });
        }
    }

    fn push_warning(&mut self, w: AccuracyWarning) {
        let same_kind = |a: &AccuracyWarning| std::mem::discriminant(a) == std::mem::discriminant(&w);
        match self.warnings.iter_mut().find(|a| same_kind(a)) {
            Some(existing) => {
                *existing = match (*existing, w) {
                    (
                        AccuracyWarning::BoundaryContamination { magnitude: a },
                        AccuracyWarning::BoundaryContamination { magnitude: b },
                    ) => AccuracyWarning::BoundaryContamination { magnitude: a.max(b) },
                    (AccuracyWarning::UnderResolved { tail: a }, AccuracyWarning::UnderResolved { tail: b }) => {
                        AccuracyWarning::UnderResolved { tail: a.max(b) }
                    }
                    (_, w) => w,
                }
            }
            None => self.warnings.push(w),
        }
    }

    /// `∂ψ/∂x_a`, `a ∈ {0, 1}`.
    pub fn derivative(&self, axis: usize) -> WaveField {
        self.derived(self.grid.filter(&self.values, axis, &self.grid.first))
    }

    /// `p_a ψ = −i ∂_a ψ`.
    pub fn momentum(&self, axis: usize) -> WaveField {
        self.derived(self.grid.filter(&self.values, axis, &self.grid.first).mapv(|z| -I * z))
    }

    /// `x_a ψ`.
    pub fn position(&self, axis: usize) -> WaveField {
        self.derived(self.grid.times_coordinate(&self.values, axis))
    }

    pub fn laplacian(&self) -> WaveField {
        let a = self.grid.filter(&self.values, 0, &self.grid.second);
        let b = self.grid.filter(&self.values, 1, &self.grid.second);
        self.derived(a + b)
    }

    /// `L ψ = x₁ p₂ ψ − x₂ p₁ ψ`.
    pub fn angular_momentum(&self) -> WaveField {
        let p2 = self.grid.filter(&self.values, 1, &self.grid.first);
        let p1 = self.grid.filter(&self.values, 0, &self.grid.first);
        let v = self.grid.times_coordinate(&p2, 0) - self.grid.times_coordinate(&p1, 1);
        self.derived(v.mapv(|z| -I * z))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "# extent={:.16e} points={}", self.grid.extent, self.grid.points)?;
        if let Some(p) = self.label {
            writeln!(w, "# n={} m={} t={:.16e}", p.idx.n, p.idx.m, p.t)?;
        }
        writeln!(w, "x1,x2,re,im")?;
        for (i, x1) in self.grid.nodes.iter().enumerate() {
            for (j, x2) in self.grid.nodes.iter().enumerate() {
                let z = self.values[[i, j]];
                writeln!(w, "{x1:.16e},{x2:.16e},{:.16e},{:.16e}", z.re, z.im)?;
            }
        }
        Ok(())
    }
}

/// `ψ₀(x) = √(κ/π)/σ · exp[−(κ/σ² − iσ̇μ/σ) x·x/2]`, unit norm for every κ.
pub fn ground_state(grid: &Arc<Grid2D>, frame: &Frame) -> Result<WaveField> {
    if !(frame.sigma > 0.0) {
        return Err(Error::Singularity { t: frame.t, sigma: frame.sigma });
    }
    grid.check_extent(frame.length_scale())?;
    let pref = (frame.kappa / std::f64::consts::PI).sqrt() / frame.sigma;
    let lambda = Complex64::new(frame.kappa / (frame.sigma * frame.sigma), -frame.sigma_dot * frame.mu / frame.sigma);
    let values = grid.sample(|x1, x2| pref * (-0.5 * lambda * (x1 * x1 + x2 * x2)).exp());
    let mut f = WaveField::new(grid.clone(), values);
    f.label = Some(Provenance { idx: FockIndex { n: 0, m: 0 }, t: frame.t });
    f.audit();
    Ok(f)
}

/// `a_a ψ` (`raise = false`) or `a_a† ψ` (`raise = true`) with
/// `a_a = [(σ̇μ + iκ/σ) x_a + iσ ∂_a]/√(2κ)` and
/// `a_a† = [(σ̇μ − iκ/σ) x_a + iσ ∂_a]/√(2κ)`.
pub fn apply_cartesian(field: &WaveField, axis: usize, raise: bool, frame: &Frame) -> WaveField {
    let sign = if raise { -1.0 } else { 1.0 };
    let cx = Complex64::new(frame.sigma_dot * frame.mu, sign * frame.kappa / frame.sigma);
    let d = field.grid.filter(&field.values, axis, &field.grid.first);
    let x = field.grid.times_coordinate(&field.values, axis);
    let s = 1.0 / (2.0 * frame.kappa).sqrt();
    field.derived((x * cx + d * (I * frame.sigma)) * s)
}

/// `A₋† = (a₁† + i a₂†)/√2` for `Left`, `A₊† = (a₁† − i a₂†)/√2` for `Right`.
pub fn apply_creation(field: &WaveField, which: Circular, frame: &Frame) -> WaveField {
    circular(field, which, true, frame)
}

/// `A₋ = (a₁ − i a₂)/√2` for `Left`, `A₊ = (a₁ + i a₂)/√2` for `Right`.
pub fn apply_annihilation(field: &WaveField, which: Circular, frame: &Frame) -> WaveField {
    circular(field, which, false, frame)
}

fn circular(field: &WaveField, which: Circular, raise: bool, frame: &Frame) -> WaveField {
    let a1 = apply_cartesian(field, 0, raise, frame);
    let a2 = apply_cartesian(field, 1, raise, frame);
    let sign = match (which, raise) {
        (Circular::Left, true) | (Circular::Right, false) => 1.0,
        _ => -1.0,
    };
    let v = (a1.values + a2.values * (I * sign)) * std::f64::consts::FRAC_1_SQRT_2;
    let mut out = field.derived(v);
    out.audit();
    out
}

/// `𝒩 (A₋†)^{r₊} (A₊†)^{r₋} ψ₀` by repeated operator application.
pub fn basis_state(grid: &Arc<Grid2D>, idx: FockIndex, frame: &Frame) -> Result<WaveField> {
    let mut f = ground_state(grid, frame)?;
    for k in 1..=idx.r_minus() {
        f = apply_creation(&f, Circular::Right, frame).scaled((1.0 / (k as f64).sqrt()).into());
    }
    for k in 1..=idx.r_plus() {
        f = apply_creation(&f, Circular::Left, frame).scaled((1.0 / (k as f64).sqrt()).into());
    }
    f.label = Some(Provenance { idx, t: frame.t });
    Ok(f)
}

/// Every basis state with `n ≤ n_max`, in basis order, sharing the ladder
/// chain between states.
pub fn basis_states(grid: &Arc<Grid2D>, n_max: u32, frame: &Frame) -> Result<Vec<WaveField>> {
    let mut by_quanta: HashMap<(u32, u32), WaveField> = HashMap::new();
    let mut column = ground_state(grid, frame)?;
    for q in 0..=n_max {
        if q > 0 {
            column = apply_creation(&column, Circular::Right, frame).scaled((1.0 / (q as f64).sqrt()).into());
        }
        let mut f = column.clone();
        by_quanta.insert((0, q), f.clone());
        for p in 1..=(n_max - q) {
            f = apply_creation(&f, Circular::Left, frame).scaled((1.0 / (p as f64).sqrt()).into());
            by_quanta.insert((p, q), f.clone());
        }
    }
    Ok(FockIndex::up_to(n_max)
        .into_iter()
        .map(|idx| {
            let mut f = by_quanta.remove(&(idx.r_plus(), idx.r_minus())).expect("every quanta pair was built");
            f.label = Some(Provenance { idx, t: frame.t });
            f
        })
        .collect())
}

/// Complex Hermite polynomial
/// `H_{p,q}(ζ, ζ̄) = Σ_k (−1)^k k! C(p,k) C(q,k) ζ^{p−k} ζ̄^{q−k}`.
pub fn complex_hermite(p: u32, q: u32, z: Complex64) -> Complex64 {
    let mut sum = Complex64::default();
    let mut coeff = 1.0;
    for k in 0..=p.min(q) {
        if k > 0 {
            coeff *= -((p - k + 1) as f64) * ((q - k + 1) as f64) / k as f64;
        }
        sum += coeff * z.powu(p - k) * z.conj().powu(q - k);
    }
    sum
}

/// `(−i)ⁿ H_{r₊,r₋}(ζ, ζ̄) ψ₀ / √(r₊! r₋!)` with `ζ = √κ (x₁ + i x₂)/σ`.
pub fn basis_state_closed_form(grid: &Arc<Grid2D>, idx: FockIndex, frame: &Frame) -> Result<WaveField> {
    let psi0 = ground_state(grid, frame)?;
    let (p, q) = (idx.r_plus(), idx.r_minus());
    let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
    let phase = (-I).powu(idx.n) / (fact(p) * fact(q)).sqrt();
    let scale = frame.kappa.sqrt() / frame.sigma;
    let poly = grid.sample(|x1, x2| phase * complex_hermite(p, q, Complex64::new(x1, x2) * scale));
    let mut f = psi0.derived(poly * &psi0.values);
    f.label = Some(Provenance { idx, t: frame.t });
    f.audit();
    Ok(f)
}

pub fn synthesize(grid: &Arc<Grid2D>, idx: FockIndex, frame: &Frame, how: Synthesis) -> Result<WaveField> {
    match how {
        Synthesis::Operator => basis_state(grid, idx, frame),
        Synthesis::ClosedForm => basis_state_closed_form(grid, idx, frame),
    }
}

/// `Hψ = −∇²ψ/(2μ) + ω² x·x ψ/2 − ν L ψ`.
pub fn apply_hamiltonian(field: &WaveField, frame: &Frame) -> WaveField {
    let lap = field.laplacian().values;
    let r2 = field.grid.times_coordinate(&field.grid.times_coordinate(&field.values, 0), 0)
        + field.grid.times_coordinate(&field.grid.times_coordinate(&field.values, 1), 1);
    let l = field.angular_momentum().values;
    let v = lap * (-0.5 / frame.mu) + r2 * (0.5 * frame.omega_sq) - l * frame.nu;
    let mut out = field.derived(v);
    out.audit();
    out
}

/// `Iψ = Σ_a [(σ̇μ x_a − σ p_a)² + (κ²/σ²) x_a²] ψ`.
pub fn apply_invariant(field: &WaveField, frame: &Frame) -> WaveField {
    let g = &field.grid;
    let q = |v: &Array2<Complex64>, axis: usize| {
        g.times_coordinate(v, axis) * frame.sigma_dot * frame.mu + g.filter(v, axis, &g.first) * (I * frame.sigma)
    };
    let c = frame.kappa * frame.kappa / (frame.sigma * frame.sigma);
    let mut v = Array2::zeros(field.values.raw_dim());
    for axis in 0..2 {
        v = v + q(&q(&field.values, axis), axis)
            + g.times_coordinate(&g.times_coordinate(&field.values, axis), axis) * c;
    }
    let mut out = field.derived(v);
    out.audit();
    out
}

/// `⟨n,m|∂t|n,m⟩` from basis states synthesized at `t − dt`, `t`, `t + dt`
/// on a common grid.
pub fn dt_overlap(
    grid: &Arc<Grid2D>,
    idx: FockIndex,
    sol: &SigmaSolution,
    t: f64,
    dt: f64,
    how: Synthesis,
) -> Result<Complex64> {
    let at = |s: f64| -> Result<WaveField> { synthesize(grid, idx, &sol.frame(s)?, how) };
    let (plus, mid, minus) = (at(t + dt)?, at(t)?, at(t - dt)?);
    let diff = plus.derived((&plus.values - &minus.values) * (0.5 / dt));
    Ok(mid.inner(&diff))
}

/// Gram matrix `G_ij = ⟨f_i|f_j⟩`.
pub fn gram_matrix(fields: &[WaveField]) -> Array2<Complex64> {
    let n = fields.len();
    Array2::from_shape_fn((n, n), |(i, j)| fields[i].inner(&fields[j]))
}

/// `max |G − 1|`.
pub fn orthonormality_defect(fields: &[WaveField]) -> f64 {
    let g = gram_matrix(fields);
    g.indexed_iter()
        .map(|((i, j), z)| (z - if i == j { Complex64::new(1.0, 0.0) } else { Complex64::default() }).norm())
        .fold(0.0, f64::max)
}
