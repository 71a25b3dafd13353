//! Truncated matrix representations on the joint eigenbasis `||n,m⟩` of the
//! invariants `I` and `L`.
//!
//! Conventions, fixed so that the eigenvalue relations and the ladder actions
//! agree with `r₊ = (n+m)/2` counting applications of `A₋†`:
//!
//! ```text
//! A₋  ||n,m⟩ = √((n+m)/2)     ||n−1, m−1⟩     A₋† ||n,m⟩ = √((n+m)/2 + 1) ||n+1, m+1⟩
//! A₊  ||n,m⟩ = √((n−m)/2)     ||n−1, m+1⟩     A₊† ||n,m⟩ = √((n−m)/2 + 1) ||n+1, m−1⟩
//! I = 2κ(A₊†A₊ + A₋†A₋ + 1) = 2κ(n+1),        L = A₋†A₋ − A₊†A₊ = m
//! ```
//!
//! Basis order is lexicographic in `(n, m)` with `m` ascending. Entries that
//! would leave the truncation `n ≤ n_max` are dropped, so identities that
//! involve products are only exact on an interior block; each check below
//! states which.

use std::io::{self, Write};

use ndarray::{linalg::kron, Array1, Array2};
use num_complex::Complex64;

use crate::ermakov::{Frame, SigmaSolution};
use crate::error::{Error, Result};

pub type CMatrix = Array2<Complex64>;

const I: Complex64 = Complex64::new(0.0, 1.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Quantum numbers of `||n,m⟩`: `n ≥ 0`, `|m| ≤ n`, `n − m` even.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FockIndex {
    pub n: u32,
    pub m: i32,
}

impl FockIndex {
    pub fn new(n: i64, m: i64) -> Result<Self> {
        if n < 0 || m.abs() > n || (n - m) % 2 != 0 || n > u32::MAX as i64 {
            return Err(Error::InvalidIndex { n, m });
        }
        Ok(FockIndex { n: n as u32, m: m as i32 })
    }

    pub fn from_circular(r_plus: u32, r_minus: u32) -> Self {
        FockIndex { n: r_plus + r_minus, m: r_plus as i32 - r_minus as i32 }
    }

    /// Number of `A₋†` quanta, `(n+m)/2`.
    pub fn r_plus(&self) -> u32 {
        ((self.n as i64 + self.m as i64) / 2) as u32
    }

    /// Number of `A₊†` quanta, `(n−m)/2`.
    pub fn r_minus(&self) -> u32 {
        ((self.n as i64 - self.m as i64) / 2) as u32
    }

    /// All indices with `n ≤ n_max` in basis order.
    pub fn up_to(n_max: u32) -> Vec<FockIndex> {
        (0..=n_max)
            .flat_map(|n| (0..=n).map(move |k| FockIndex { n, m: 2 * k as i32 - n as i32 }))
            .collect()
    }

    /// Position in the lexicographic basis.
    pub fn position(&self) -> usize {
        let n = self.n as usize;
        n * (n + 1) / 2 + self.r_plus() as usize
    }
}

impl std::fmt::Display for FockIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.n, self.m)
    }
}

/// Truncated basis `{ ||n,m⟩ : n ≤ n_max }`.
#[derive(Clone, Debug, PartialEq)]
pub struct FockBasis {
    pub n_max: u32,
    pub states: Vec<FockIndex>,
}

impl FockBasis {
    pub fn new(n_max: u32) -> Self {
        FockBasis { n_max, states: FockIndex::up_to(n_max) }
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn position(&self, idx: FockIndex) -> Option<usize> {
        (idx.n <= self.n_max).then(|| idx.position())
    }

    /// Positions of the states with `n ≤ n_cap`.
    pub fn interior(&self, n_cap: u32) -> Vec<usize> {
        self.states.iter().enumerate().filter(|(_, s)| s.n <= n_cap).map(|(i, _)| i).collect()
    }
}

/// Ladder operators on the truncated basis.
#[derive(Clone, Debug)]
pub struct FockOperatorSet {
    pub basis: FockBasis,
    pub a_minus: CMatrix,
    pub a_plus: CMatrix,
    pub a_minus_dag: CMatrix,
    pub a_plus_dag: CMatrix,
}

/// Position and momentum matrices built from the ladder operators at one
/// instant.
#[derive(Clone, Debug)]
pub struct PositionMomentum {
    pub x1: CMatrix,
    pub x2: CMatrix,
    pub p1: CMatrix,
    pub p2: CMatrix,
}

pub fn dagger(a: &CMatrix) -> CMatrix {
    a.t().mapv(|z| z.conj())
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.dot(b) - b.dot(a)
}

pub fn identity(dim: usize) -> CMatrix {
    Array2::from_diag_elem(dim, re(1.0))
}

/// Largest entry modulus of `a` restricted to the square block `idx × idx`.
pub fn max_abs_block(a: &CMatrix, idx: &[usize]) -> f64 {
    let mut worst = 0.0_f64;
    for &i in idx {
        for &j in idx {
            worst = worst.max(a[[i, j]].norm());
        }
    }
    worst
}

pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// `max |A − A†|`.
pub fn hermiticity_defect(a: &CMatrix) -> f64 {
    max_abs(&(a - &dagger(a)))
}

/// Writes the nonzero entries of `a` as `row,col,re,im`, row-major, in basis
/// order, with 17 significant digits.
pub fn write_matrix_csv<W: Write>(a: &CMatrix, mut w: W) -> io::Result<()> {
    writeln!(w, "row,col,re,im")?;
    for ((i, j), z) in a.indexed_iter() {
        if *z != Complex64::default() {
            writeln!(w, "{i},{j},{:.16e},{:.16e}", z.re, z.im)?;
        }
    }
    Ok(())
}

/// Builds `A±`, `A±†` on `n ≤ n_max`.
pub fn build_ladder(n_max: u32) -> Result<FockOperatorSet> {
    if n_max < 1 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let basis = FockBasis::new(n_max);
    let dim = basis.dim();
    let mut a_minus = CMatrix::zeros((dim, dim));
    let mut a_plus = CMatrix::zeros((dim, dim));
    for (col, s) in basis.states.iter().enumerate() {
        if s.n == 0 {
            continue;
        }
        let (rp, rm) = (s.r_plus(), s.r_minus());
        if rp > 0 {
            let target = FockIndex::from_circular(rp - 1, rm);
            a_minus[[target.position(), col]] = re((rp as f64).sqrt());
        }
        if rm > 0 {
            let target = FockIndex::from_circular(rp, rm - 1);
            a_plus[[target.position(), col]] = re((rm as f64).sqrt());
        }
    }
    let a_minus_dag = dagger(&a_minus);
    let a_plus_dag = dagger(&a_plus);
    Ok(FockOperatorSet { basis, a_minus, a_plus, a_minus_dag, a_plus_dag })
}

/// `(I, L)` with `I = 2κ(A₊†A₊ + A₋†A₋ + 1)` and `L = A₋†A₋ − A₊†A₊`; both
/// exact on the whole truncated basis.
pub fn build_invariants(set: &FockOperatorSet, kappa: f64) -> (CMatrix, CMatrix) {
    let nm = set.a_minus_dag.dot(&set.a_minus);
    let np = set.a_plus_dag.dot(&set.a_plus);
    let inv = (&np + &nm + &identity(set.basis.dim())) * re(2.0 * kappa);
    let ang = nm - np;
    (inv, ang)
}

impl FockOperatorSet {
    /// `a₁ = (A₋ + A₊)/√2`, `a₂ = i(A₋ − A₊)/√2`.
    pub fn cartesian_lowering(&self) -> (CMatrix, CMatrix) {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let a1 = (&self.a_minus + &self.a_plus) * re(s);
        let a2 = (&self.a_minus - &self.a_plus) * (I * s);
        (a1, a2)
    }

    /// `𝒩 (A₋†)^{r₊} (A₊†)^{r₋} ||0,0⟩` as a column vector.
    pub fn construct_state(&self, idx: FockIndex) -> Array1<Complex64> {
        let mut v = Array1::zeros(self.basis.dim());
        v[0] = re(1.0);
        let mut norm = 1.0;
        for k in 0..idx.r_minus() {
            v = self.a_plus_dag.dot(&v);
            norm *= (k + 1) as f64;
        }
        for k in 0..idx.r_plus() {
            v = self.a_minus_dag.dot(&v);
            norm *= (k + 1) as f64;
        }
        v * re(1.0 / norm.sqrt())
    }
}

/// `x_a = −iσ(a_a − a_a†)/√(2κ)`,
/// `p_a = −iσ̇μ(a_a − a_a†)/√(2κ) − √(2κ)(a_a + a_a†)/(2σ)`.
///
/// Hermitian by construction; `[x_a, p_b] = iδ_ab` holds for `n ≤ n_max − 1`.
pub fn build_position_momentum(set: &FockOperatorSet, frame: &Frame) -> PositionMomentum {
    let (a1, a2) = set.cartesian_lowering();
    let rk = (2.0 * frame.kappa).sqrt();
    let cx = -I * (frame.sigma / rk);
    let cp_odd = -I * (frame.sigma_dot * frame.mu / rk);
    let cp_even = re(-rk / (2.0 * frame.sigma));
    let build = |a: &CMatrix| {
        let ad = dagger(a);
        let diff = a - &ad;
        let sum = a + &ad;
        (&diff * cx, &diff * cp_odd + &sum * cp_even)
    };
    let (x1, p1) = build(&a1);
    let (x2, p2) = build(&a2);
    PositionMomentum { x1, x2, p1, p2 }
}

impl PositionMomentum {
    pub fn angular_momentum(&self) -> CMatrix {
        self.x1.dot(&self.p2) - self.x2.dot(&self.p1)
    }

    fn r2(&self) -> CMatrix {
        self.x1.dot(&self.x1) + self.x2.dot(&self.x2)
    }

    fn p2_total(&self) -> CMatrix {
        self.p1.dot(&self.p1) + self.p2.dot(&self.p2)
    }

    /// `Σ_a (σ̇μ x_a − σ p_a)² + (κ²/σ²) x_a²` with the given scalars.
    pub fn invariant(&self, sigma: f64, sigma_dot: f64, mu: f64, kappa: f64) -> CMatrix {
        let mut out = CMatrix::zeros(self.x1.raw_dim());
        for (x, p) in [(&self.x1, &self.p1), (&self.x2, &self.p2)] {
            let q = x * re(sigma_dot * mu) - p * re(sigma);
            out = out + q.dot(&q) + x.dot(x) * re(kappa * kappa / (sigma * sigma));
        }
        out
    }
}

/// `H = (p₁²+p₂²)/(2μ) + ω²(x₁²+x₂²)/2 − νL` from the position/momentum
/// matrices; exact for `n ≤ n_max − 1`.
pub fn build_hamiltonian(set: &FockOperatorSet, frame: &Frame) -> CMatrix {
    let pm = build_position_momentum(set, frame);
    hamiltonian_from(&pm, frame)
}

fn hamiltonian_from(pm: &PositionMomentum, frame: &Frame) -> CMatrix {
    pm.p2_total() * re(0.5 / frame.mu) + pm.r2() * re(0.5 * frame.omega_sq)
        - pm.angular_momentum() * re(frame.nu)
}

/// Coefficients of the ladder form
/// `H = d(A₋†A₋ + A₊†A₊ + 1) − ν(A₋†A₋ − A₊†A₊) + c_low A₊A₋ + c_up A₋†A₊†`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderHamiltonian {
    pub diagonal: f64,
    pub lowering: Complex64,
    pub raising: Complex64,
}

/// `d = (σ̇²μ + κ²/(μσ²) + ω²σ²)/(2κ)`,
/// `c_low = (√κ/σ + iσ̇μ/√κ)²/(2μ) − ω²σ²/(2κ)`, `c_up = conj(c_low)`.
pub fn ladder_coefficients(frame: &Frame) -> LadderHamiltonian {
    let rk = frame.kappa.sqrt();
    let w = Complex64::new(rk / frame.sigma, frame.sigma_dot * frame.mu / rk);
    let shift = frame.omega_sq * frame.sigma * frame.sigma / (2.0 * frame.kappa);
    let lowering = w * w / (2.0 * frame.mu) - shift;
    LadderHamiltonian { diagonal: frame.energy_factor(), lowering, raising: lowering.conj() }
}

/// Closed ladder form of `H`.
pub fn hamiltonian_ladder_form(set: &FockOperatorSet, frame: &Frame) -> CMatrix {
    let c = ladder_coefficients(frame);
    let nm = set.a_minus_dag.dot(&set.a_minus);
    let np = set.a_plus_dag.dot(&set.a_plus);
    let id = identity(set.basis.dim());
    (&nm + &np + &id) * re(c.diagonal) - (&nm - &np) * re(frame.nu)
        + set.a_plus.dot(&set.a_minus) * c.lowering
        + set.a_minus_dag.dot(&set.a_plus_dag) * c.raising
}

/// `max |∂I/∂t − i[I, H]|` on the block `n ≤ n_max − 3`.
///
/// `I(t ± dt)` is rebuilt from its position-representation form on the fixed
/// `x, p` matrices of time `t`, and differentiated centrally. Requires
/// `n_max ≥ 3`.
pub fn invariance_residual(set: &FockOperatorSet, sol: &SigmaSolution, t: f64, dt: f64) -> Result<f64> {
    let n_max = set.basis.n_max;
    if n_max < 3 {
        return Err(Error::InvalidArgument("invariance residual needs n_max >= 3".into()));
    }
    let frame = sol.frame(t)?;
    let fp = sol.frame(t + dt)?;
    let fm = sol.frame(t - dt)?;
    let pm = build_position_momentum(set, &frame);
    let inv_at = |f: &Frame| pm.invariant(f.sigma, f.sigma_dot, f.mu, f.kappa);
    let d_inv = (inv_at(&fp) - inv_at(&fm)) * re(0.5 / dt);
    let inv = inv_at(&frame);
    let h = hamiltonian_from(&pm, &frame);
    let res = d_inv - commutator(&inv, &h) * I;
    let block = set.basis.interior(n_max - 3);
    Ok(max_abs_block(&res, &block))
}

/// Closed forms of `(∂A₋†/∂t, ∂A₊†/∂t)`:
/// `∂A₋†/∂t = (iμ/2κ)[c A₋† − (c + 2iκσ̇/(μσ)) A₊]` and the mirror image,
/// with `c = σσ̈ + μ̇σσ̇/μ − σ̇²`.
pub fn creation_rate_closed_form(set: &FockOperatorSet, frame: &Frame) -> (CMatrix, CMatrix) {
    let c = frame.sigma * frame.sigma_ddot + frame.mu_dot * frame.sigma * frame.sigma_dot / frame.mu
        - frame.sigma_dot * frame.sigma_dot;
    let pref = I * (frame.mu / (2.0 * frame.kappa));
    let mix = Complex64::new(c, 2.0 * frame.kappa * frame.sigma_dot / (frame.mu * frame.sigma));
    let dm = (&set.a_minus_dag * (pref * c)) - (&set.a_plus * (pref * mix));
    let dp = (&set.a_plus_dag * (pref * c)) - (&set.a_minus * (pref * mix));
    (dm, dp)
}

/// Central-difference `(∂A₋†/∂t, ∂A₊†/∂t)` with the creation operators at
/// `t ± dt` written over the fixed `x, p` matrices of time `t`.
pub fn creation_rate_fd(set: &FockOperatorSet, sol: &SigmaSolution, t: f64, dt: f64) -> Result<(CMatrix, CMatrix)> {
    let frame = sol.frame(t)?;
    let pm = build_position_momentum(set, &frame);
    let creators = |f: &Frame| {
        let rk = (2.0 * f.kappa).sqrt();
        let cx = Complex64::new(f.sigma_dot * f.mu, -f.kappa / f.sigma) / rk;
        let cp = re(-f.sigma / rk);
        let a1d = &pm.x1 * cx + &pm.p1 * cp;
        let a2d = &pm.x2 * cx + &pm.p2 * cp;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ((&a1d + &(&a2d * I)) * re(s), (&a1d - &(&a2d * I)) * re(s))
    };
    let (mp, pp) = creators(&sol.frame(t + dt)?);
    let (mm, pmm) = creators(&sol.frame(t - dt)?);
    let k = re(0.5 / dt);
    Ok(((mp - mm) * k, (pp - pmm) * k))
}

/// Defects of the ladder algebra on the block `n ≤ n_max − 3`:
/// `[A₋,A₋†] = [A₊,A₊†] = 1`, `[A₋,A₊] = [A₋,A₊†] = 0`, `[I,A±†] = 2κA±†`,
/// `[L,A±] = ±A±`.
pub fn algebra_defects(set: &FockOperatorSet, kappa: f64) -> Vec<(&'static str, f64)> {
    let block = set.basis.interior(set.basis.n_max.saturating_sub(3));
    let id = identity(set.basis.dim());
    let (inv, ang) = build_invariants(set, kappa);
    let two_kappa = re(2.0 * kappa);
    let d = |m: CMatrix| max_abs_block(&m, &block);
    vec![
        ("[A-,A-^+] - 1", d(commutator(&set.a_minus, &set.a_minus_dag) - &id)),
        ("[A+,A+^+] - 1", d(commutator(&set.a_plus, &set.a_plus_dag) - &id)),
        ("[A-,A+]", d(commutator(&set.a_minus, &set.a_plus))),
        ("[A-,A+^+]", d(commutator(&set.a_minus, &set.a_plus_dag))),
        ("[I,A-^+] - 2k A-^+", d(commutator(&inv, &set.a_minus_dag) - &set.a_minus_dag * two_kappa)),
        ("[I,A+^+] - 2k A+^+", d(commutator(&inv, &set.a_plus_dag) - &set.a_plus_dag * two_kappa)),
        ("[L,A-] + A-", d(commutator(&ang, &set.a_minus) + &set.a_minus)),
        ("[L,A+] - A+", d(commutator(&ang, &set.a_plus) - &set.a_plus)),
    ]
}

/// `(dual, band)` for `H` at one instant on the block `n ≤ n_max − 1`:
/// `dual` is the largest difference between the position/momentum and
/// ladder constructions relative to the largest entry, `band` the largest
/// entry coupling states other than `(n, m) ↔ (n ± 2, m)` or the state
/// itself.
pub fn hamiltonian_structure(set: &FockOperatorSet, frame: &Frame) -> (f64, f64) {
    let block = set.basis.interior(set.basis.n_max - 1);
    let h = build_hamiltonian(set, frame);
    let ladder = hamiltonian_ladder_form(set, frame);
    let scale = max_abs_block(&h, &block);
    let dual = max_abs_block(&(&h - &ladder), &block) / scale;
    let mut band = 0.0_f64;
    for &i in &block {
        for &j in &block {
            let (a, b) = (set.basis.states[i], set.basis.states[j]);
            let dn = (a.n as i64 - b.n as i64).abs();
            if a.m != b.m || (dn != 0 && dn != 2) {
                band = band.max(h[[i, j]].norm());
            }
        }
    }
    (dual, band)
}

/// Two independent Cartesian oscillator modes truncated at `dim` levels each,
/// with `x = (a + a†)/√2`, `p = i(a† − a)/√2` on the tensor product.
#[derive(Clone, Debug)]
pub struct CartesianModes {
    pub x1: CMatrix,
    pub x2: CMatrix,
    pub p1: CMatrix,
    pub p2: CMatrix,
}

impl CartesianModes {
    pub fn new(dim: usize) -> Self {
        let mut a = CMatrix::zeros((dim, dim));
        for k in 1..dim {
            a[[k - 1, k]] = re((k as f64).sqrt());
        }
        let ad = dagger(&a);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let x = (&a + &ad) * re(s);
        let p = (&ad - &a) * (I * s);
        let one = identity(dim);
        CartesianModes { x1: kron(&x, &one), x2: kron(&one, &x), p1: kron(&p, &one), p2: kron(&one, &p) }
    }
}
