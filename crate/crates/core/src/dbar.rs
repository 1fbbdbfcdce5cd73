//! Shift-equivariant solution of `dbar u = a` on a horizontal strip in `C`,
//! as the weighted Cauchy–Pompeiu transform
//! `u(z) = C \iint exp(-(z - zeta)^2) a(zeta) / (zeta - z) dA(zeta)`
//! over `[x - X, x + X] x (y-, y+)`.
//!
//! The window moves with `x`, so the truncated operator commutes with real
//! shifts exactly. Near `zeta = z` the integrand is split by a smooth radial
//! cutoff: the far part goes to tensor Gauss–Legendre, the near part to
//! polar coordinates, where the `1/r` singularity cancels against `r dr`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DbarError {
    #[error("strip bounds must satisfy y- < y-' < y+' < y+")]
    BadStrip,
    #[error("window half-width must be at least {MIN_HALF_WIDTH}")]
    NarrowWindow,
    #[error("quadrature order and panel width must be positive")]
    BadQuadrature,
    #[error("point {0} lies outside the inner strip")]
    OutsideStrip(Complex64),
    #[error("non-finite integrand sample near {0}")]
    NonFinite(Complex64),
    #[error("input vanishes at every calibration probe")]
    Degenerate,
}

pub type Input = Arc<dyn Fn(Complex64) -> Complex64 + Send + Sync>;

pub const MIN_HALF_WIDTH: f64 = 6.0;
pub const DEFAULT_PANEL: f64 = 0.25;
pub const DEFAULT_ORDER: usize = 12;
/// Angular nodes of the polar rule.
const POLAR_ANGLES: usize = 64;

#[derive(Clone)]
pub struct StripProblem {
    pub a: Input,
    pub omega: (f64, f64),
    pub omega_prime: (f64, f64),
    pub half_width: f64,
    pub order: usize,
    pub panel: f64,
}

impl fmt::Debug for StripProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StripProblem")
            .field("omega", &self.omega)
            .field("omega_prime", &self.omega_prime)
            .field("half_width", &self.half_width)
            .field("order", &self.order)
            .field("panel", &self.panel)
            .finish()
    }
}

impl StripProblem {
    pub fn new(a: Input, omega: (f64, f64), omega_prime: (f64, f64)) -> Result<StripProblem, DbarError> {
        let p = StripProblem { a, omega, omega_prime, half_width: MIN_HALF_WIDTH, order: DEFAULT_ORDER, panel: DEFAULT_PANEL };
        p.validate()?;
        Ok(p)
    }

    pub fn with_input(&self, a: Input) -> StripProblem {
        StripProblem { a, ..self.clone() }
    }

    pub fn validate(&self) -> Result<(), DbarError> {
        let (lo, hi) = self.omega;
        let (ilo, ihi) = self.omega_prime;
        if !(lo < ilo && ilo < ihi && ihi < hi) {
            return Err(DbarError::BadStrip);
        }
        if !(self.half_width >= MIN_HALF_WIDTH) {
            return Err(DbarError::NarrowWindow);
        }
        if self.order == 0 || !(self.panel > 0.0) {
            return Err(DbarError::BadQuadrature);
        }
        Ok(())
    }

    /// Radius of the polar region; never reaches past the outer strip.
    fn cutoff_radius(&self, z: Complex64) -> f64 {
        let room = (z.im - self.omega.0).min(self.omega.1 - z.im);
        (2.0 * self.panel).min(room)
    }
}

/// `1` on `[0, 1/2]`, `0` on `[1, inf)`, smooth in between.
fn cutoff(s: f64) -> f64 {
    if s <= 0.5 {
        return 1.0;
    }
    if s >= 1.0 {
        return 0.0;
    }
    let t = 2.0 * (s - 0.5);
    let f = |x: f64| if x <= 0.0 { 0.0 } else { (-1.0 / x).exp() };
    1.0 - f(t) / (f(t) + f(1.0 - t))
}

/// The unnormalized transform `u_1(z)` (`C = 1`).
pub fn transform(p: &StripProblem, z: Complex64) -> Result<Complex64, DbarError> {
    if !(z.im > p.omega.0 && z.im < p.omega.1) {
        return Err(DbarError::OutsideStrip(z));
    }
    let rho = p.cutoff_radius(z);
    let kernel = |zeta: Complex64| {
        let d = z - zeta;
        (-(d * d)).exp() * (p.a)(zeta)
    };
    let (x0, x1) = (z.re - p.half_width, z.re + p.half_width);
    let px = ((x1 - x0) / p.panel).ceil() as usize;
    let py = ((p.omega.1 - p.omega.0) / p.panel).ceil().max(1.0) as usize;
    let xs = quad::composite(x0, x1, px, p.order);
    let ys = quad::composite(p.omega.0, p.omega.1, py, p.order);
    // far part, one task per x panel, summed in panel order
    let far: Vec<Complex64> = xs
        .par_chunks(p.order)
        .map(|chunk| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(x, wx) in chunk {
                for &(y, wy) in &ys {
                    let zeta = Complex64::new(x, y);
                    let d = zeta - z;
                    let r = d.norm();
                    let keep = 1.0 - cutoff(r / rho);
                    if keep > 0.0 {
                        acc += kernel(zeta) / d * (keep * wx * wy);
                    }
                }
            }
            acc
        })
        .collect();
    let far: Complex64 = far.iter().sum();
    // near part: \int_0^rho \int g psi e^{-i theta} dtheta dr
    let rs = quad::composite(0.0, rho, 4, p.order.max(8));
    let mut near = Complex64::new(0.0, 0.0);
    for &(r, wr) in &rs {
        let psi = cutoff(r / rho);
        if psi == 0.0 {
            continue;
        }
        let mut ring = Complex64::new(0.0, 0.0);
        for k in 0..POLAR_ANGLES {
            let e = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / POLAR_ANGLES as f64);
            ring += kernel(z + r * e) * e.conj();
        }
        near += ring * (2.0 * PI / POLAR_ANGLES as f64) * psi * wr;
    }
    let total = far + near;
    if !(total.re.is_finite() && total.im.is_finite()) {
        return Err(DbarError::NonFinite(z));
    }
    Ok(total)
}

/// `u = C u_1`.
#[derive(Debug, Clone)]
pub struct Solution {
    pub problem: StripProblem,
    pub constant: Complex64,
}

impl Solution {
    pub fn eval(&self, z: Complex64) -> Result<Complex64, DbarError> {
        Ok(self.constant * transform(&self.problem, z)?)
    }
}

pub fn dbar_solve(p: &StripProblem, constant: Complex64) -> Result<Solution, DbarError> {
    p.validate()?;
    Ok(Solution { problem: p.clone(), constant })
}

pub const FD_STEP: f64 = 1e-3;

/// `(u_x + i u_y) / 2` by central differences.
pub fn dbar_fd<U>(u: U, z: Complex64, h: f64) -> Result<Complex64, DbarError>
where
    U: Fn(Complex64) -> Result<Complex64, DbarError>,
{
    let ux = (u(z + h)? - u(z - h)?) / (2.0 * h);
    let i = Complex64::i();
    let uy = (u(z + i * h)? - u(z - i * h)?) / (2.0 * h);
    Ok(0.5 * (ux + i * uy))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub constant: Complex64,
    /// Largest relative deviation of a probe ratio from the median.
    pub spread: f64,
    pub ratios: Vec<Complex64>,
    /// `-1/pi`, the value predicted by the Cauchy–Pompeiu formula.
    pub expected: Complex64,
}

/// Probe points: a 3 x 3 grid in the middle of the inner strip.
pub fn probe_points(p: &StripProblem) -> Vec<Complex64> {
    let (lo, hi) = p.omega_prime;
    let mut out = Vec::with_capacity(9);
    for x in [-0.6, 0.1, 0.7] {
        for s in [0.25, 0.5, 0.75] {
            out.push(Complex64::new(x, lo + s * (hi - lo)));
        }
    }
    out
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

pub fn calibrate_constant(p: &StripProblem) -> Result<Calibration, DbarError> {
    p.validate()?;
    let probes = probe_points(p);
    let mut ratios = Vec::with_capacity(probes.len());
    for z in &probes {
        let a = (p.a)(*z);
        if a.norm() < 1e-12 {
            continue;
        }
        let d = dbar_fd(|w| transform(p, w), *z, FD_STEP)?;
        ratios.push(a / d);
    }
    if ratios.is_empty() {
        return Err(DbarError::Degenerate);
    }
    let constant = Complex64::new(median(ratios.iter().map(|r| r.re).collect()), median(ratios.iter().map(|r| r.im).collect()));
    let spread = ratios.iter().map(|r| (r - constant).norm()).fold(0.0, f64::max) / constant.norm();
    Ok(Calibration { constant, spread, ratios, expected: Complex64::new(-1.0 / PI, 0.0) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    /// `max |dbar u - a| / max |a|` over the grid.
    pub relative: f64,
    pub max_abs: f64,
    pub max_a: f64,
    pub points: usize,
}

/// `nx x ny` grid over `[x0, x1] x` the inner strip, kept `margin` inside it.
pub fn inner_grid(p: &StripProblem, x: (f64, f64), nx: usize, ny: usize, margin: f64) -> Vec<Complex64> {
    let (lo, hi) = (p.omega_prime.0 + margin, p.omega_prime.1 - margin);
    let lin = |a: f64, b: f64, n: usize, i: usize| if n == 1 { 0.5 * (a + b) } else { a + (b - a) * i as f64 / (n - 1) as f64 };
    (0..nx).flat_map(|i| (0..ny).map(move |j| Complex64::new(lin(x.0, x.1, nx, i), lin(lo, hi, ny, j)))).collect()
}

pub fn residual_check(sol: &Solution, grid: &[Complex64]) -> Result<ResidualReport, DbarError> {
    let mut max_abs = 0.0f64;
    let mut max_a = 0.0f64;
    for z in grid {
        let d = dbar_fd(|w| sol.eval(w), *z, FD_STEP)?;
        let a = (sol.problem.a)(*z);
        max_abs = max_abs.max((d - a).norm());
        max_a = max_a.max(a.norm());
    }
    let relative = if max_a > 0.0 { max_abs / max_a } else { max_abs };
    Ok(ResidualReport { relative, max_abs, max_a, points: grid.len() })
}

/// `S_t a (zeta) = a(zeta + t)`.
pub fn shifted(a: &Input, t: f64) -> Input {
    let a = a.clone();
    Arc::new(move |z| a(z + t))
}

/// Largest `|u[S_t a](z) - u[a](z + t)|` over the points.
pub fn shift_discrepancy(sol: &Solution, t: f64, points: &[Complex64]) -> Result<f64, DbarError> {
    let moved = Solution { problem: sol.problem.with_input(shifted(&sol.problem.a, t)), constant: sol.constant };
    let mut worst = 0.0f64;
    for z in points {
        worst = worst.max((moved.eval(*z)? - sol.eval(*z + t)?).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SupBound {
    pub ratio: f64,
    pub sup_u: f64,
    pub sup_a: f64,
}

/// `sup |u|` on the inner strip over `sup |a|` on the strip, both sampled
/// over the x window.
pub fn sup_bound_check(sol: &Solution, window: (f64, f64), nx: usize, ny: usize) -> Result<SupBound, DbarError> {
    let p = &sol.problem;
    let inner = inner_grid(p, window, nx, ny, 0.0);
    let mut sup_u = 0.0f64;
    for z in &inner {
        sup_u = sup_u.max(sol.eval(*z)?.norm());
    }
    let eps = 1e-9 * (p.omega.1 - p.omega.0);
    let outer_lo = p.omega.0 + eps;
    let outer_hi = p.omega.1 - eps;
    let mut sup_a = 0.0f64;
    for i in 0..nx {
        for j in 0..ny {
            let x = window.0 + (window.1 - window.0) * i as f64 / (nx - 1).max(1) as f64;
            let y = outer_lo + (outer_hi - outer_lo) * j as f64 / (ny - 1).max(1) as f64;
            sup_a = sup_a.max((p.a)(Complex64::new(x, y)).norm());
        }
    }
    let ratio = if sup_a > 0.0 { sup_u / sup_a } else { 0.0 };
    Ok(SupBound { ratio, sup_u, sup_a })
}

/// Grids and tolerances for a full verification run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyOptions {
    pub residual_window: (f64, f64),
    pub residual_grid: (usize, usize),
    pub shifts: Vec<f64>,
    pub windows: Vec<(f64, f64)>,
    pub sup_grid: (usize, usize),
    pub spread_tol: f64,
    pub residual_tol: f64,
    pub shift_tol: f64,
    pub window_tol: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            residual_window: (-4.0, 4.0),
            residual_grid: (20, 10),
            shifts: vec![0.7, -2.3],
            windows: vec![(-10.0, 10.0), (-5.0, 15.0)],
            sup_grid: (81, 9),
            spread_tol: 1e-2,
            residual_tol: 1e-3,
            shift_tol: 5e-3,
            window_tol: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub calibration: Calibration,
    pub residual: ResidualReport,
    /// `(t, discrepancy)`.
    pub shifts: Vec<(f64, f64)>,
    pub sup: Vec<SupBound>,
    pub calibration_ok: bool,
    pub residual_ok: bool,
    pub shift_ok: bool,
    pub sup_ok: bool,
    pub pass: bool,
}

/// Calibrates the constant, then checks the residual, shift equivariance and
/// the stability of the sup ratio across windows.
pub fn verify(p: &StripProblem, opts: &VerifyOptions) -> Result<VerifyReport, DbarError> {
    let calibration = calibrate_constant(p)?;
    let sol = dbar_solve(p, calibration.constant)?;
    let grid = inner_grid(p, opts.residual_window, opts.residual_grid.0, opts.residual_grid.1, 0.0);
    let residual = residual_check(&sol, &grid)?;
    let probes = inner_grid(p, (-1.0, 1.0), 3, 3, 0.0);
    let shifts = opts
        .shifts
        .iter()
        .map(|&t| Ok((t, shift_discrepancy(&sol, t, &probes)?)))
        .collect::<Result<Vec<_>, DbarError>>()?;
    let sup = opts
        .windows
        .iter()
        .map(|&w| sup_bound_check(&sol, w, opts.sup_grid.0, opts.sup_grid.1))
        .collect::<Result<Vec<_>, _>>()?;
    let calibration_ok = calibration.spread < opts.spread_tol;
    let residual_ok = residual.relative <= opts.residual_tol;
    let shift_ok = shifts.iter().all(|(_, d)| *d <= opts.shift_tol);
    let sup_ok = sup.iter().all(|s| s.ratio.is_finite()) && {
        let lo = sup.iter().map(|s| s.ratio).fold(f64::INFINITY, f64::min);
        let hi = sup.iter().map(|s| s.ratio).fold(0.0, f64::max);
        hi - lo <= opts.window_tol * hi
    };
    let pass = calibration_ok && residual_ok && shift_ok && sup_ok;
    Ok(VerifyReport { calibration, residual, shifts, sup, calibration_ok, residual_ok, shift_ok, sup_ok, pass })
}

/// Named inputs for the command line and tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TestInput {
    Zero,
    /// `scale exp(-xi^2) / (1 + eta^2)`.
    Gaussian { scale: f64 },
    /// `exp(-(xi - 1)^2 / 2) (1 + 0.3 i eta)`.
    Tilted,
    /// Smooth bump supported in `|xi| <= 2`.
    Bump,
}

impl TestInput {
    pub fn build(self) -> Input {
        match self {
            TestInput::Zero => Arc::new(|_| Complex64::new(0.0, 0.0)),
            TestInput::Gaussian { scale } => {
                Arc::new(move |z: Complex64| Complex64::new(scale * (-z.re * z.re).exp() / (1.0 + z.im * z.im), 0.0))
            }
            TestInput::Tilted => Arc::new(|z: Complex64| {
                let d = z.re - 1.0;
                Complex64::new(1.0, 0.3 * z.im) * (-0.5 * d * d).exp()
            }),
            TestInput::Bump => Arc::new(|z: Complex64| {
                let s = z.re / 2.0;
                if s.abs() >= 1.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    Complex64::new((1.0 - 1.0 / (1.0 - s * s)).exp() * (1.0 + z.im), 0.0)
                }
            }),
        }
    }
}
