//! Weierstrass sigma function of the Gaussian lattice `Z + iZ`.
//!
//! The quasi-period constants are computed from lattice sums at
//! initialization. Evaluation reduces the argument to the cell
//! `[-1/2, 1/2)^2` and then uses the Hadamard product grouped by lattice rows:
//! each row of the product has a closed form, and rows converge
//! geometrically in `exp(-2 pi n)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SigmaError {
    #[error("accuracy {0} outside [1e-14, 1e-4]")]
    AccuracyOutOfRange(f64),
    #[error("lattice constants failed the consistency check: {0}")]
    Inconsistent(String),
}

pub const MIN_ACCURACY: f64 = 1e-14;
pub const MAX_ACCURACY: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaContext {
    rows: usize,
    eta1: Complex64,
    eta_i: Complex64,
    accuracy: f64,
    legendre_residual: f64,
    g3_residual: f64,
    /// `q^{2n}` for n = 1..rows, with `q = exp(-pi)`.
    q2n: Vec<f64>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// `cot w`, stable for large `|Im w|`.
fn cot(w: Complex64) -> Complex64 {
    let i = Complex64::i();
    if w.im > 0.0 {
        let e = (2.0 * i * w).exp();
        i * (e + 1.0) / (e - 1.0)
    } else {
        let e = (-2.0 * i * w).exp();
        i * (1.0 + e) / (1.0 - e)
    }
}

/// `csc^2 w`, stable for large `|Im w|`.
fn csc2(w: Complex64) -> Complex64 {
    let i = Complex64::i();
    let e = if w.im > 0.0 { (2.0 * i * w).exp() } else { (-2.0 * i * w).exp() };
    -4.0 * e / ((e - 1.0) * (e - 1.0))
}

/// `zeta(2)` from the partial sum to 1000 plus an Euler–Maclaurin tail.
fn zeta_two() -> f64 {
    let m = 1000.0f64;
    let head: f64 = (1..=1000).rev().map(|k| 1.0 / (k as f64 * k as f64)).sum();
    let tail = 1.0 / m - 1.0 / (2.0 * m * m) + 1.0 / (6.0 * m.powi(3)) - 1.0 / (30.0 * m.powi(5));
    head + tail
}

/// Weierstrass zeta of `Z + iZ`, summed row by row: the row `Im w = n`
/// contributes `pi cot(pi(z - ni)) + pi cot(pi ni) + z pi^2 csc^2(pi ni)`.
fn weierstrass_zeta(z: Complex64, rows: usize, zeta2: f64) -> Complex64 {
    let mut acc = PI * cot(PI * z) + 2.0 * zeta2 * z;
    // small rows last so the tiny terms are added first
    for n in (1..=rows).rev() {
        for s in [-1.0, 1.0] {
            let ni = c(0.0, s * n as f64);
            acc += PI * cot(PI * (z - ni)) + PI * cot(PI * ni) + z * PI * PI * csc2(PI * ni);
        }
    }
    acc
}

/// Smallest row count whose tail bound `scale * sum_{n > R} exp(-2 pi n)`
/// is below `tol`.
fn rows_for(tol: f64, scale: f64) -> usize {
    let r = (-2.0 * PI).exp();
    (1..200).find(|&n| scale * r.powi(n as i32 + 1) / (1.0 - r) < tol).unwrap_or(200)
}

/// `sum' w^{-6}` over the square `|m|, |n| <= radius`.
pub fn g3_lattice_sum(radius: i64) -> Complex64 {
    let mut acc = c(0.0, 0.0);
    for m in -radius..=radius {
        for n in -radius..=radius {
            if m != 0 || n != 0 {
                acc += c(m as f64, n as f64).powi(-6);
            }
        }
    }
    acc
}

pub fn sigma_init(accuracy: f64) -> Result<SigmaContext, SigmaError> {
    if !(MIN_ACCURACY..=MAX_ACCURACY).contains(&accuracy) {
        return Err(SigmaError::AccuracyOutOfRange(accuracy));
    }
    let zeta2 = zeta_two();
    let eta_rows = rows_for(1e-3 * accuracy, 40.0);
    let eta1 = 2.0 * weierstrass_zeta(c(0.5, 0.0), eta_rows, zeta2);
    let eta_i = 2.0 * weierstrass_zeta(c(0.0, 0.5), eta_rows, zeta2);
    let symmetry = (eta_i + Complex64::i() * eta1).norm();
    if symmetry > accuracy {
        return Err(SigmaError::Inconsistent(format!("|etaI + i eta1| = {symmetry:e}")));
    }
    // periods 1 and i: eta(1) * i - eta(i) * 1 = 2 pi i
    let legendre_residual = (eta1 * Complex64::i() - eta_i - c(0.0, 2.0 * PI)).norm();
    if legendre_residual > accuracy {
        return Err(SigmaError::Inconsistent(format!("Legendre residual {legendre_residual:e}")));
    }
    let g3_residual = g3_lattice_sum(40).norm();
    if g3_residual > accuracy {
        return Err(SigmaError::Inconsistent(format!("g3 lattice sum {g3_residual:e}")));
    }
    // |cos 2 pi z| <= cosh(pi) on the cell
    let rows = rows_for(1e-2 * accuracy, 4.0 * PI.cosh());
    let q2 = (-2.0 * PI).exp();
    let q2n = (1..=rows).map(|n| q2.powi(n as i32)).collect();
    Ok(SigmaContext { rows, eta1, eta_i, accuracy, legendre_residual, g3_residual, q2n })
}

/// `(m, n, zeta0)` with `zeta = m + n i + zeta0` and `zeta0` in `[-1/2, 1/2)^2`.
fn reduce(zeta: Complex64) -> (f64, f64, Complex64) {
    let m = (zeta.re + 0.5).floor();
    let n = (zeta.im + 0.5).floor();
    (m, n, c(zeta.re - m, zeta.im - n))
}

impl SigmaContext {
    /// Number of lattice rows kept in the product.
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn eta1(&self) -> Complex64 {
        self.eta1
    }

    pub fn eta_i(&self) -> Complex64 {
        self.eta_i
    }

    pub fn accuracy(&self) -> f64 {
        self.accuracy
    }

    pub fn legendre_residual(&self) -> f64 {
        self.legendre_residual
    }

    pub fn g3_residual(&self) -> f64 {
        self.g3_residual
    }

    /// `eta(m + n i)`, the Z-linear extension of `(eta1, etaI)`.
    pub fn eta(&self, m: f64, n: f64) -> Complex64 {
        m * self.eta1 + n * self.eta_i
    }

    /// Product formula, valid for all `zeta` but accurate only near the cell.
    fn eval_cell(&self, z: Complex64) -> Complex64 {
        let cos2 = (2.0 * PI * z).cos();
        let mut prod = c(1.0, 0.0);
        for &q in self.q2n.iter().rev() {
            prod *= (1.0 - 2.0 * q * cos2 + q * q) / ((1.0 - q) * (1.0 - q));
        }
        (PI * z).sin() / PI * (0.5 * self.eta1 * z * z).exp() * prod
    }

    /// Sign `(-1)^{m + n + mn}` in the quasi-periodicity law.
    fn psi(m: f64, n: f64) -> f64 {
        let parity = (m.rem_euclid(2.0) + n.rem_euclid(2.0) + (m * n).rem_euclid(2.0)) as i64 % 2;
        if parity == 0 {
            1.0
        } else {
            -1.0
        }
    }

    pub fn eval(&self, zeta: Complex64) -> Complex64 {
        let (m, n, z0) = reduce(zeta);
        if m == 0.0 && n == 0.0 {
            return self.eval_cell(z0);
        }
        let omega = c(m, n);
        let factor = (self.eta(m, n) * (z0 + 0.5 * omega)).exp();
        Self::psi(m, n) * factor * self.eval_cell(z0)
    }

    /// `sigma(zeta) exp(-Re(eta1) |zeta|^2 / 2)`: same phase as `sigma`, but
    /// with a lattice-periodic modulus, so it never overflows.
    pub fn eval_normalized(&self, zeta: Complex64) -> Complex64 {
        let (m, n, z0) = reduce(zeta);
        let k = 0.5 * self.eta1.re;
        let omega = c(m, n);
        let exponent = self.eta(m, n) * (z0 + 0.5 * omega) - k * zeta.norm_sqr() + k * z0.norm_sqr();
        Self::psi(m, n) * exponent.exp() * self.eval_cell(z0) * (-k * z0.norm_sqr()).exp()
    }
}

pub fn sigma_eval(ctx: &SigmaContext, zeta: Complex64) -> Complex64 {
    ctx.eval(zeta)
}
