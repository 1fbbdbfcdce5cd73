//! Argument increments along closed paths, zero counting on circles, and
//! local Weierstrass polynomials from power sums of `f'/f`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContourError {
    #[error("path must be closed with at least 3 distinct vertices of equal dimension")]
    BadPath,
    #[error("function vanishes on the path (min modulus {min_modulus:e}, max {max_modulus:e})")]
    ZeroOnPath { min_modulus: f64, max_modulus: f64 },
    #[error("phase tracking did not converge within {samples} samples")]
    NonConvergent { samples: usize },
    #[error("winding {raw} is not within the rounding guard of an integer")]
    RoundingGuard { raw: f64 },
    #[error("Newton identities residual {residual:e} above tolerance")]
    IllConditioned { residual: f64 },
    #[error("power sums did not stabilize (last change {change:e})")]
    QuadratureNotStable { change: f64 },
    #[error("indices p = {p}, q = {q} invalid for dimension {n}")]
    BadIndex { p: usize, q: usize, n: usize },
    #[error("all {attempts} base points failed; last: {last}")]
    RetriesExhausted { attempts: usize, last: Box<ContourError> },
    #[error("radius must be positive and finite")]
    BadRadius,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    vertices: Vec<Vec<Complex64>>,
}

impl PathSpec {
    pub fn new(vertices: Vec<Vec<Complex64>>) -> Result<PathSpec, ContourError> {
        let n = vertices.first().map(Vec::len).ok_or(ContourError::BadPath)?;
        if vertices.iter().any(|v| v.len() != n) || vertices.first() != vertices.last() {
            return Err(ContourError::BadPath);
        }
        let mut distinct: Vec<&Vec<Complex64>> = Vec::new();
        for v in &vertices {
            if !distinct.contains(&v) {
                distinct.push(v);
            }
        }
        if distinct.len() < 3 {
            return Err(ContourError::BadPath);
        }
        Ok(PathSpec { vertices })
    }

    /// Loop `w0 -> w0 + e_p -> w0 + e_p + e_q -> w0 + e_q -> w0`.
    pub fn rectangle(w0: &[Complex64], p: usize, q: usize) -> Result<PathSpec, ContourError> {
        let n = w0.len();
        if p >= n || q >= n || p == q {
            return Err(ContourError::BadIndex { p, q, n });
        }
        let mut a = w0.to_vec();
        a[p] += 1.0;
        let mut b = a.clone();
        b[q] += 1.0;
        let mut c = w0.to_vec();
        c[q] += 1.0;
        PathSpec::new(vec![w0.to_vec(), a, b, c, w0.to_vec()])
    }

    pub fn vertices(&self) -> &[Vec<Complex64>] {
        &self.vertices
    }

    pub fn dim(&self) -> usize {
        self.vertices[0].len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindingOptions {
    /// Initial equal subdivisions per segment.
    pub initial_samples: usize,
    /// Total evaluation budget.
    pub max_samples: usize,
    /// Minimum allowed modulus relative to the largest sampled modulus.
    pub floor: f64,
    /// Largest accepted distance between the raw winding and its rounding.
    pub guard: f64,
    /// Keep the accepted samples in the result.
    pub record: bool,
}

impl Default for WindingOptions {
    fn default() -> Self {
        WindingOptions { initial_samples: 32, max_samples: 1 << 21, floor: 1e-8, guard: 0.1, record: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSample {
    pub segment: usize,
    pub t: f64,
    pub value: Complex64,
    /// Accumulated argument from the start of the path.
    pub phase: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindingResult {
    pub value: i64,
    pub raw: f64,
    pub min_modulus: f64,
    pub samples: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub trace: Vec<TraceSample>,
}

struct Segment {
    increment: f64,
    min: f64,
    max: f64,
    samples: Vec<(f64, Complex64)>,
}

const MIN_STEP: f64 = 1e-13;

/// Tracks the argument of `g(t)` for `t` in `[0, 1]`.
fn track_segment<G: FnMut(f64) -> Complex64>(mut g: G, opts: &WindingOptions, budget: usize) -> Result<Segment, ContourError> {
    let n0 = opts.initial_samples.max(2);
    let start = g(0.0);
    let mut count = 1usize;
    let mut min = start.norm();
    let mut max = start.norm();
    let mut samples = vec![(0.0, start)];
    let mut increment = 0.0;
    // pending intervals, processed left to right
    let mut stack: Vec<(f64, Option<Complex64>)> = (1..=n0).rev().map(|k| (k as f64 / n0 as f64, None)).collect();
    let (mut t_prev, mut f_prev) = (0.0, start);
    while let Some((t1, cached)) = stack.pop() {
        let f1 = match cached {
            Some(v) => v,
            None => {
                count += 1;
                g(t1)
            }
        };
        if count > budget {
            return Err(ContourError::NonConvergent { samples: count });
        }
        let m1 = f1.norm();
        if !m1.is_finite() || !f1.re.is_finite() || !f1.im.is_finite() {
            return Err(ContourError::NonConvergent { samples: count });
        }
        min = min.min(m1);
        max = max.max(m1);
        let step = (f1 / f_prev).arg();
        let degenerate = m1 == 0.0 || f_prev.norm() == 0.0;
        if degenerate || step.abs() >= PI / 2.0 {
            if t1 - t_prev < MIN_STEP || degenerate {
                if min < opts.floor * max || degenerate {
                    return Err(ContourError::ZeroOnPath { min_modulus: min, max_modulus: max });
                }
                return Err(ContourError::NonConvergent { samples: count });
            }
            stack.push((t1, Some(f1)));
            stack.push((0.5 * (t_prev + t1), None));
            continue;
        }
        increment += step;
        t_prev = t1;
        f_prev = f1;
        samples.push((t1, f1));
    }
    Ok(Segment { increment, min, max, samples })
}

/// Sums per-segment increments in order and applies the floor and rounding
/// guard.
fn combine(segments: Vec<Segment>, opts: &WindingOptions) -> Result<WindingResult, ContourError> {
    let min = segments.iter().map(|s| s.min).fold(f64::INFINITY, f64::min);
    let max = segments.iter().map(|s| s.max).fold(0.0, f64::max);
    if min < opts.floor * max {
        return Err(ContourError::ZeroOnPath { min_modulus: min, max_modulus: max });
    }
    let total: f64 = segments.iter().map(|s| s.increment).sum();
    let raw = total / (2.0 * PI);
    let value = raw.round();
    if (raw - value).abs() > opts.guard {
        return Err(ContourError::RoundingGuard { raw });
    }
    let samples = segments.iter().map(|s| s.samples.len()).sum();
    let mut trace = Vec::new();
    if opts.record {
        let mut phase = 0.0;
        for (k, s) in segments.iter().enumerate() {
            let mut prev = s.samples[0].1;
            for &(t, v) in &s.samples {
                phase += (v / prev).arg();
                prev = v;
                trace.push(TraceSample { segment: k, t, value: v, phase });
            }
        }
    }
    Ok(WindingResult { value: value as i64, raw, min_modulus: min, samples, trace })
}

/// Winding number of `f` along a closed polygonal path in `C^N`.
pub fn arg_increment<F>(f: &F, path: &PathSpec, opts: &WindingOptions) -> Result<WindingResult, ContourError>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    let verts = &path.vertices;
    let nseg = verts.len() - 1;
    let budget = opts.max_samples / nseg.max(1);
    let segments: Vec<Result<Segment, ContourError>> = (0..nseg)
        .into_par_iter()
        .map(|k| {
            let (a, b) = (&verts[k], &verts[k + 1]);
            let mut buf = vec![Complex64::new(0.0, 0.0); a.len()];
            let g = move |t: f64| {
                for (j, x) in buf.iter_mut().enumerate() {
                    *x = a[j] + (b[j] - a[j]) * t;
                }
                f(&buf)
            };
            track_segment(g, opts, budget)
        })
        .collect();
    combine(segments.into_iter().collect::<Result<_, _>>()?, opts)
}

fn circle_winding<F>(f: &F, center: Complex64, radius: f64, opts: &WindingOptions) -> Result<WindingResult, ContourError>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(ContourError::BadRadius);
    }
    let budget = opts.max_samples / 4;
    let segments: Vec<Result<Segment, ContourError>> = (0..4)
        .into_par_iter()
        .map(|k| {
            let g = |t: f64| f(center + Complex64::from_polar(radius, 0.5 * PI * (k as f64 + t)));
            track_segment(g, opts, budget)
        })
        .collect();
    combine(segments.into_iter().collect::<Result<_, _>>()?, opts)
}

/// Number of zeros of `f` inside the circle, with multiplicity.
pub fn zero_count<F>(f: &F, center: Complex64, radius: f64) -> Result<i64, ContourError>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    Ok(circle_winding(f, center, radius, &WindingOptions::default())?.value)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntryOptions {
    pub max_retries: usize,
    pub winding: WindingOptions,
}

impl Default for EntryOptions {
    fn default() -> Self {
        EntryOptions { max_retries: 50, winding: WindingOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntryResult {
    pub value: i64,
    /// Base point that succeeded.
    pub base_point: Vec<Complex64>,
    /// Number of base points tried, including the successful one.
    pub attempts: usize,
    pub winding: WindingResult,
}

/// `(1/2 pi)` times the argument increment of a 1-periodic `F` along the
/// rectangle spanned by `e_p` and `e_q` at `w0`. A base point whose rectangle
/// meets the zero set is replaced by a random perturbation of `w0`, shifted by
/// up to one period in each real direction and by up to 1/2 in each
/// imaginary direction.
pub fn chern_entry<F, R>(
    f: &F,
    p: usize,
    q: usize,
    w0: &[Complex64],
    opts: &EntryOptions,
    rng: &mut R,
) -> Result<EntryResult, ContourError>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
    R: Rng + ?Sized,
{
    let mut base = w0.to_vec();
    let mut last = None;
    for attempt in 1..=opts.max_retries.max(1) {
        let path = PathSpec::rectangle(&base, p, q)?;
        match arg_increment(f, &path, &opts.winding) {
            Ok(winding) => return Ok(EntryResult { value: winding.value, base_point: base, attempts: attempt, winding }),
            Err(e @ (ContourError::ZeroOnPath { .. } | ContourError::NonConvergent { .. } | ContourError::RoundingGuard { .. })) => {
                last = Some(e);
            }
            Err(e) => return Err(e),
        }
        base = w0
            .iter()
            .map(|w| w + Complex64::new(rng.gen_range(0.0..1.0), rng.gen_range(-0.5..0.5)))
            .collect();
    }
    Err(ContourError::RetriesExhausted { attempts: opts.max_retries.max(1), last: Box::new(last.expect("at least one attempt")) })
}

/// Monic polynomial whose roots are the zeros of `f` in a disc.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalPoly {
    /// Ascending coefficients; the last one is 1.
    pub coefficients: Vec<Complex64>,
    pub roots: Vec<Complex64>,
    /// Power sums `sum (zeta_j - center)^s`, s = 0..=k+1.
    pub power_sums: Vec<Complex64>,
    pub residual: f64,
    pub panels: usize,
}

impl LocalPoly {
    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coefficients.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, c| acc * z + c)
    }
}

pub const POWER_SUM_TOL: f64 = 1e-10;
const MAX_PANELS: usize = 1 << 16;

/// Normalized power sums `(1/2 pi i) \oint f'/f t^s dzeta`, `t = (zeta - c)/r`,
/// for `s = 0..=smax` on `panels` trapezoid nodes.
fn power_sums<F, D>(f: &F, df: &D, center: Complex64, radius: f64, smax: usize, panels: usize) -> Vec<Complex64>
where
    F: Fn(Complex64) -> Complex64 + Sync,
    D: Fn(Complex64) -> Complex64 + Sync,
{
    let parts: Vec<Vec<Complex64>> = (0..panels)
        .into_par_iter()
        .map(|j| {
            let e = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / panels as f64);
            let z = center + radius * e;
            // dzeta / (2 pi i) = r e dtheta / (2 pi)
            let g = df(z) / f(z) * radius * e / panels as f64;
            let mut out = Vec::with_capacity(smax + 1);
            let mut tp = Complex64::new(1.0, 0.0);
            for _ in 0..=smax {
                out.push(g * tp);
                tp *= e;
            }
            out
        })
        .collect();
    (0..=smax).map(|s| parts.iter().map(|v| v[s]).sum()).collect()
}

fn central_difference<F: Fn(Complex64) -> Complex64>(f: &F, h: f64) -> impl Fn(Complex64) -> Complex64 + '_ {
    move |z| (f(z + h) - f(z - h)) / (2.0 * h)
}

/// Local polynomial using central differences for `f'`.
pub fn local_poly<F>(f: &F, center: Complex64, radius: f64) -> Result<LocalPoly, ContourError>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    let df = central_difference(f, 1e-6 * radius);
    local_poly_with_derivative(f, &df, center, radius)
}

pub fn local_poly_with_derivative<F, D>(f: &F, df: &D, center: Complex64, radius: f64) -> Result<LocalPoly, ContourError>
where
    F: Fn(Complex64) -> Complex64 + Sync,
    D: Fn(Complex64) -> Complex64 + Sync,
{
    let k = circle_winding(f, center, radius, &WindingOptions::default())?.value;
    let k = usize::try_from(k).map_err(|_| ContourError::IllConditioned { residual: f64::INFINITY })?;
    let mut panels = 256;
    let mut sums = power_sums(f, df, center, radius, k + 1, panels);
    loop {
        let next = power_sums(f, df, center, radius, k + 1, 2 * panels);
        let change = sums.iter().zip(&next).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        panels *= 2;
        sums = next;
        if change < POWER_SUM_TOL {
            break;
        }
        if panels >= MAX_PANELS {
            return Err(ContourError::QuadratureNotStable { change });
        }
    }
    // Newton identities: j e_j = sum_{i=1}^{j} (-1)^{i-1} e_{j-i} p_i
    let mut e = vec![Complex64::new(1.0, 0.0)];
    for j in 1..=k {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 1..=j {
            let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
            acc += sign * e[j - i] * sums[i];
        }
        e.push(acc / j as f64);
    }
    // p_{k+1} predicted from e_1..e_k (e_{k+1} = 0)
    let mut predicted = Complex64::new(0.0, 0.0);
    for i in 1..=k {
        let sign = if i % 2 == 1 { 1.0 } else { -1.0 };
        predicted += sign * e[i] * sums[k + 1 - i];
    }
    let residual = (predicted - sums[k + 1]).norm() + (sums[0] - k as f64).norm();
    if residual > 1e-6 * (k as f64 + 1.0) {
        return Err(ContourError::IllConditioned { residual });
    }
    // normalized polynomial t^k - e_1 t^{k-1} + ...
    let normalized: Vec<Complex64> = (0..=k).map(|i| if i % 2 == 0 { e[i] } else { -e[i] }).collect();
    let mut roots_t = aberth(&normalized);
    let mut roots: Vec<Complex64> = roots_t.iter_mut().map(|t| center + radius * *t).collect();
    polish(f, df, &mut roots, center, radius);
    let mut coefficients = vec![Complex64::new(1.0, 0.0)];
    for r in &roots {
        // multiply by (z - r)
        let mut next = vec![Complex64::new(0.0, 0.0); coefficients.len() + 1];
        for (i, c) in coefficients.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        coefficients = next;
    }
    let power_sums = sums.iter().enumerate().map(|(s, p)| p * radius.powi(s as i32)).collect();
    Ok(LocalPoly { coefficients, roots, power_sums, residual, panels })
}

/// Roots of `sum_i c_i t^{k-i}` (descending, `c_0 = 1`) by Aberth iteration.
fn aberth(desc: &[Complex64]) -> Vec<Complex64> {
    let k = desc.len() - 1;
    if k == 0 {
        return Vec::new();
    }
    let eval = |t: Complex64| -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut d = Complex64::new(0.0, 0.0);
        for c in desc {
            d = d * t + p;
            p = p * t + c;
        }
        (p, d)
    };
    let mut z: Vec<Complex64> =
        (0..k).map(|j| Complex64::from_polar(0.5, 2.0 * PI * j as f64 / k as f64 + 0.4)).collect();
    for _ in 0..500 {
        let mut moved = 0.0f64;
        for j in 0..k {
            let (p, d) = eval(z[j]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / d;
            let repulsion: Complex64 = (0..k).filter(|&i| i != j).map(|i| 1.0 / (z[j] - z[i])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.re.is_finite() && step.im.is_finite() {
                z[j] -= step;
                moved = moved.max(step.norm());
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Newton steps on `f` itself for roots well separated from the others.
fn polish<F, D>(f: &F, df: &D, roots: &mut [Complex64], center: Complex64, radius: f64)
where
    F: Fn(Complex64) -> Complex64,
    D: Fn(Complex64) -> Complex64,
{
    for j in 0..roots.len() {
        let sep = (0..roots.len()).filter(|&i| i != j).map(|i| (roots[i] - roots[j]).norm()).fold(f64::INFINITY, f64::min);
        if sep < 1e-3 * radius {
            continue;
        }
        let mut z = roots[j];
        let mut fz = f(z);
        for _ in 0..8 {
            let step = fz / df(z);
            let cand = z - step;
            let fc = f(cand);
            if !(fc.norm() < fz.norm()) || (cand - center).norm() >= radius || step.norm() > 0.25 * sep {
                break;
            }
            z = cand;
            fz = fc;
        }
        roots[j] = z;
    }
}
