//! Finite exponential sums `sum a_n exp(i<z, lambda_n>)` on tube domains and
//! trigonometric polynomials in periodic coordinates.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::exactlin::{ExactError, Frequency, GeneratorContext};
use crate::quad;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExpSumError {
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("point has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("Bohr mean supports m <= 2, got m = {0}")]
    DimensionTooLarge(usize),
    #[error("averaging half-width must be positive and finite")]
    BadWindow,
    #[error("quadrature produced a non-finite value")]
    NonFinite,
}

/// A value together with a bound on the error inherited from the generator
/// approximations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub value: Complex64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum {
    ctx: GeneratorContext,
    dim: usize,
    terms: Vec<(Complex64, Frequency)>,
}

fn dot(z: &[Complex64], x: &[f64]) -> Complex64 {
    z.iter().zip(x).map(|(a, b)| a * b).sum()
}

impl ExpSum {
    /// Builds a sum, merging equal frequencies and dropping zero coefficients.
    pub fn new(
        ctx: &GeneratorContext,
        dim: usize,
        terms: Vec<(Complex64, Frequency)>,
    ) -> Result<ExpSum, ExpSumError> {
        for (_, f) in &terms {
            if f.context() != ctx {
                return Err(ExactError::ContextMismatch.into());
            }
            if f.dim() != dim {
                return Err(ExactError::DimensionMismatch { expected: dim, found: f.dim() }.into());
            }
        }
        let mut terms = terms;
        terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut merged: Vec<(Complex64, Frequency)> = Vec::with_capacity(terms.len());
        for (a, f) in terms {
            match merged.last_mut() {
                Some((acc, g)) if *g == f => *acc += a,
                _ => merged.push((a, f)),
            }
        }
        merged.retain(|(a, _)| *a != Complex64::new(0.0, 0.0));
        Ok(ExpSum { ctx: ctx.clone(), dim, terms: merged })
    }

    pub fn constant(ctx: &GeneratorContext, dim: usize, c: Complex64) -> ExpSum {
        ExpSum::new(ctx, dim, vec![(c, ctx.zero_frequency(dim))]).expect("zero frequency matches context")
    }

    pub fn context(&self) -> &GeneratorContext {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(Complex64, Frequency)] {
        &self.terms
    }

    fn check_point(&self, z: &[Complex64]) -> Result<(), ExpSumError> {
        if z.len() != self.dim {
            return Err(ExpSumError::Dimension { expected: self.dim, found: z.len() });
        }
        Ok(())
    }

    pub fn eval(&self, z: &[Complex64]) -> Result<Evaluation, ExpSumError> {
        self.check_point(z)?;
        let mut value = Complex64::new(0.0, 0.0);
        let mut error_bound = 0.0;
        for (a, f) in &self.terms {
            let term = a * (Complex64::i() * dot(z, &f.approx())).exp();
            value += term;
            let drift: f64 = z.iter().zip(f.approx_error()).map(|(zj, e)| zj.norm() * e).sum();
            error_bound += term.norm() * (drift + 4.0 * f64::EPSILON);
        }
        Ok(Evaluation { value, error_bound })
    }

    pub fn mul(&self, other: &ExpSum) -> Result<ExpSum, ExpSumError> {
        if self.ctx != other.ctx {
            return Err(ExactError::ContextMismatch.into());
        }
        if self.dim != other.dim {
            return Err(ExactError::DimensionMismatch { expected: self.dim, found: other.dim }.into());
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (a, f) in &self.terms {
            for (b, g) in &other.terms {
                terms.push((a * b, f.add(g)?));
            }
        }
        ExpSum::new(&self.ctx, self.dim, terms)
    }

    /// `S_t f(z) = f(z + t)` for real `t`.
    pub fn shift(&self, t: &[f64]) -> Result<ExpSum, ExpSumError> {
        if t.len() != self.dim {
            return Err(ExpSumError::Dimension { expected: self.dim, found: t.len() });
        }
        let terms = self
            .terms
            .iter()
            .map(|(a, f)| {
                let phase: f64 = t.iter().zip(f.approx()).map(|(x, l)| x * l).sum();
                (a * Complex64::from_polar(1.0, phase), f.clone())
            })
            .collect();
        Ok(ExpSum { ctx: self.ctx.clone(), dim: self.dim, terms })
    }

    /// Frequencies with nonzero coefficient, in canonical order.
    pub fn spectrum(&self) -> Vec<Frequency> {
        self.terms.iter().map(|(_, f)| f.clone()).collect()
    }

    /// Exact Fourier coefficient at `lambda` (zero off the spectrum).
    pub fn coefficient(&self, lambda: &Frequency) -> Complex64 {
        self.terms.iter().find(|(_, f)| f == lambda).map_or(Complex64::new(0.0, 0.0), |(a, _)| *a)
    }
}

/// Numerical Bohr mean over `[-T, T]^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BohrMean {
    pub value: Complex64,
    /// Difference to the same rule on twice as many panels.
    pub error_estimate: f64,
    pub panels_per_axis: usize,
}

pub const BOHR_ORDER: usize = 8;

/// `(2T)^{-m} int_{[-T,T]^m} f(x + iy) exp(-i<x, lambda>) dx` by composite
/// Gauss–Legendre. Panels are `2 pi / Omega` wide, where `Omega` is the
/// largest per-axis frequency of the integrand.
pub fn bohr_mean(f: &ExpSum, lambda: &Frequency, y: &[f64], half_width: f64) -> Result<BohrMean, ExpSumError> {
    let m = f.dim;
    if m > 2 {
        return Err(ExpSumError::DimensionTooLarge(m));
    }
    if y.len() != m || lambda.dim() != m {
        return Err(ExpSumError::Dimension { expected: m, found: y.len().min(lambda.dim()) });
    }
    if lambda.context() != &f.ctx {
        return Err(ExactError::ContextMismatch.into());
    }
    if !(half_width > 0.0 && half_width.is_finite()) {
        return Err(ExpSumError::BadWindow);
    }
    let target = lambda.approx();
    // shifted integrand: sum a_n exp(-<y, l_n>) exp(i<x, l_n - lambda>)
    let terms: Vec<(Complex64, Vec<f64>)> = f
        .terms
        .iter()
        .map(|(a, fr)| {
            let l = fr.approx();
            let damp: f64 = y.iter().zip(&l).map(|(yj, lj)| yj * lj).sum();
            let rel: Vec<f64> = l.iter().zip(&target).map(|(a, b)| a - b).collect();
            (a * (-damp).exp(), rel)
        })
        .collect();
    let omega = terms.iter().flat_map(|(_, r)| r.iter().map(|x| x.abs())).fold(1.0f64, f64::max);
    let width = 2.0 * PI / omega;
    let panels = ((2.0 * half_width / width).ceil() as usize).max(1);
    let coarse = mean_on_panels(&terms, m, half_width, panels);
    let fine = mean_on_panels(&terms, m, half_width, 2 * panels);
    if !(fine.re.is_finite() && fine.im.is_finite() && coarse.re.is_finite() && coarse.im.is_finite()) {
        return Err(ExpSumError::NonFinite);
    }
    Ok(BohrMean { value: fine, error_estimate: (fine - coarse).norm(), panels_per_axis: 2 * panels })
}

fn mean_on_panels(terms: &[(Complex64, Vec<f64>)], m: usize, t: f64, panels: usize) -> Complex64 {
    let rule = quad::composite(-t, t, panels, BOHR_ORDER);
    let integrand = |x: &[f64]| -> Complex64 {
        terms
            .iter()
            .map(|(a, r)| {
                let ph: f64 = x.iter().zip(r).map(|(xi, ri)| xi * ri).sum();
                a * Complex64::from_polar(1.0, ph)
            })
            .sum()
    };
    // one task per outer panel, summed in panel order
    let partial: Vec<Complex64> = rule
        .par_chunks(BOHR_ORDER)
        .map(|chunk| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(x0, w0) in chunk {
                if m == 1 {
                    acc += integrand(&[x0]) * w0;
                } else {
                    for &(x1, w1) in &rule {
                        acc += integrand(&[x0, x1]) * (w0 * w1);
                    }
                }
            }
            acc
        })
        .collect();
    let total: Complex64 = partial.iter().sum();
    total / (2.0 * t).powi(m as i32)
}

/// `F(w) = sum c_k exp(2 pi i <w, k>)` with integer index vectors `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolyW {
    n: usize,
    terms: Vec<(Complex64, Vec<i64>)>,
}

impl TrigPolyW {
    pub fn new(n: usize, terms: Vec<(Complex64, Vec<i64>)>) -> Result<TrigPolyW, ExpSumError> {
        if let Some((_, k)) = terms.iter().find(|(_, k)| k.len() != n) {
            return Err(ExpSumError::Dimension { expected: n, found: k.len() });
        }
        let mut terms = terms;
        terms.sort_by(|a, b| a.1.cmp(&b.1));
        let mut merged: Vec<(Complex64, Vec<i64>)> = Vec::new();
        for (c, k) in terms {
            match merged.last_mut() {
                Some((acc, kk)) if *kk == k => *acc += c,
                _ => merged.push((c, k)),
            }
        }
        merged.retain(|(c, _)| *c != Complex64::new(0.0, 0.0));
        Ok(TrigPolyW { n, terms: merged })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[(Complex64, Vec<i64>)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, w: &[Complex64]) -> Result<Complex64, ExpSumError> {
        if w.len() != self.n {
            return Err(ExpSumError::Dimension { expected: self.n, found: w.len() });
        }
        Ok(self.eval_unchecked(w))
    }

    pub(crate) fn eval_unchecked(&self, w: &[Complex64]) -> Complex64 {
        self.terms
            .iter()
            .map(|(c, k)| {
                let s: Complex64 = w.iter().zip(k).map(|(wj, kj)| wj * *kj as f64).sum();
                c * (Complex64::new(0.0, 2.0 * PI) * s).exp()
            })
            .sum()
    }
}
