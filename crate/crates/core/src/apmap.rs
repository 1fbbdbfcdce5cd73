//! Coordinate divisors of almost periodic maps into projective space:
//! equal Chern classes, uniform separation of supports, and the classical
//! counterexample built from shifted sigma factors.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::chern::ChernClass;
use crate::contour::EntryOptions;
use crate::divisor::{
    decide_realizable, divisor_class, factor_functional, support_distance, DecideOptions, DivisorError, DivisorSpec, Method,
    PeriodicFunctionSpec, RealizabilityCertificate, SigmaFactor,
};
use crate::exactlin::{declare_generators, ExactError, GeneratorContext, RealScalar};
use crate::sigma::SigmaContext;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error(transparent)]
    Divisor(#[from] DivisorError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("need at least two divisors, got {0}")]
    TooFewDivisors(usize),
    #[error("divisor {0} has a trigonometric part; separation needs sigma factors only")]
    Unsupported(usize),
    #[error("separation scans need m <= 2, got {0}")]
    DimensionTooLarge(usize),
    #[error("delta must be positive and the grid step at most delta / 4")]
    BadGrid,
    #[error("box must have one nonempty interval per coordinate")]
    BadBox,
    #[error("k must lie in 1..=8, got {0}")]
    BadK(usize),
    #[error("generated shifts violate the non-integrality condition")]
    ConditionViolated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapDivisorData {
    pub divisors: Vec<DivisorSpec>,
    /// Scanned range of each real coordinate `x_j`; one period for periodic data.
    pub x_window: Vec<(f64, f64)>,
    /// The inner box of imaginary parts.
    pub y_box: Vec<(f64, f64)>,
    pub delta: f64,
    pub grid_step: f64,
}

impl MapDivisorData {
    pub fn k(&self) -> usize {
        self.divisors.len().saturating_sub(1)
    }

    fn validate(&self) -> Result<usize, MapError> {
        if self.divisors.len() < 2 {
            return Err(MapError::TooFewDivisors(self.divisors.len()));
        }
        let m = self.divisors[0].dim();
        if self.x_window.len() != m || self.y_box.len() != m {
            return Err(MapError::BadBox);
        }
        if self.x_window.iter().chain(&self.y_box).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(MapError::BadBox);
        }
        if !(self.delta > 0.0) || !(self.grid_step > 0.0) || self.grid_step > self.delta / 4.0 + 1e-15 {
            return Err(MapError::BadGrid);
        }
        Ok(m)
    }
}

#[derive(Debug, Clone)]
pub struct SameClassResult {
    pub same: bool,
    pub classes: Vec<ChernClass>,
}

pub fn same_class_check<R: Rng + ?Sized>(
    data: &MapDivisorData,
    sigma: &SigmaContext,
    opts: &EntryOptions,
    rng: &mut R,
) -> Result<SameClassResult, MapError> {
    if data.divisors.len() < 2 {
        return Err(MapError::TooFewDivisors(data.divisors.len()));
    }
    let classes = data
        .divisors
        .iter()
        .map(|d| divisor_class(d, Method::Algebraic, sigma, opts, rng))
        .collect::<Result<Vec<_>, _>>()?;
    let mut same = true;
    for c in &classes[1..] {
        same &= c.same_class(&classes[0]).map_err(DivisorError::from)?;
    }
    Ok(SameClassResult { same, classes })
}

/// A grid cell centre close to every support.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub point: Vec<Complex64>,
    /// Distance to each support, in divisor order.
    pub distances: Vec<f64>,
    /// All distances are at most `delta`, so the ball of radius `delta`
    /// around the point meets every support.
    pub certain: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    pub pass: bool,
    pub witness: Option<Witness>,
    pub grid_points: usize,
    pub step: f64,
    /// Distances are compared with `delta + inflation`, the half diagonal of
    /// a grid cell, so a pass covers every point of the box.
    pub inflation: f64,
}

/// A sigma-factor zero set `<z, a> + shift in Z + iZ`.
#[derive(Debug, Clone)]
struct Hyperplanes {
    a: Vec<Complex64>,
    norm: f64,
    shift: Complex64,
}

impl Hyperplanes {
    fn distance(&self, z: &[Complex64]) -> f64 {
        let w: Complex64 = z.iter().zip(&self.a).map(|(x, y)| x * y).sum::<Complex64>() + self.shift;
        (w - Complex64::new(w.re.round(), w.im.round())).norm() / self.norm
    }
}

/// Each divisor's support as a union of hyperplane families.
fn supports(divisors: &[DivisorSpec]) -> Result<Vec<Vec<Hyperplanes>>, MapError> {
    divisors
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let mut out = Vec::new();
            for c in d.components() {
                if c.spec.trig().is_some() {
                    return Err(MapError::Unsupported(i));
                }
                for f in c.spec.factors() {
                    // validates the functional and its norm
                    let zero = vec![Complex64::new(0.0, 0.0); d.dim()];
                    support_distance(f, c.spec.lambda(), &zero)?;
                    let a = factor_functional(f, c.spec.lambda())?;
                    let norm = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                    out.push(Hyperplanes { a, norm, shift: f.shift });
                }
            }
            Ok(out)
        })
        .collect()
}

fn distance_to(support: &[Hyperplanes], z: &[Complex64]) -> f64 {
    support.iter().map(|h| h.distance(z)).fold(f64::INFINITY, f64::min)
}

/// Scans cell centres over the x window and y box and reports the first
/// centre (lexicographic in `x_1, .., x_m, y_1, .., y_m`) lying within
/// `delta` plus the cell half diagonal of every support.
pub fn separation_check(data: &MapDivisorData) -> Result<SeparationResult, MapError> {
    let m = data.validate()?;
    separation_scan(&supports(&data.divisors)?, m, &data.x_window, &data.y_box, data.delta, data.grid_step)
}

fn separation_scan(
    supports: &[Vec<Hyperplanes>],
    m: usize,
    x_window: &[(f64, f64)],
    y_box: &[(f64, f64)],
    delta: f64,
    step: f64,
) -> Result<SeparationResult, MapError> {
    if m > 2 {
        return Err(MapError::DimensionTooLarge(m));
    }
    let axes: Vec<(f64, f64)> = x_window.iter().chain(y_box).copied().collect();
    let counts: Vec<usize> = axes.iter().map(|(a, b)| (((b - a) / step).ceil() as usize).max(1)).collect();
    let widths: Vec<f64> = axes.iter().zip(&counts).map(|((a, b), n)| (b - a) / *n as f64).collect();
    let inflation = 0.5 * widths.iter().map(|w| w * w).sum::<f64>().sqrt();
    let total: usize = counts.iter().product();
    let point = |mut idx: usize| -> Vec<Complex64> {
        let mut coords = vec![0.0; axes.len()];
        for a in (0..axes.len()).rev() {
            let i = idx % counts[a];
            idx /= counts[a];
            coords[a] = axes[a].0 + (i as f64 + 0.5) * widths[a];
        }
        (0..m).map(|j| Complex64::new(coords[j], coords[m + j])).collect()
    };
    if supports.iter().any(Vec::is_empty) {
        // an empty support is never met
        return Ok(SeparationResult { pass: true, witness: None, grid_points: total, step, inflation });
    }
    let reach = delta + inflation;
    let hit = (0..total).into_par_iter().find_first(|&idx| {
        let z = point(idx);
        supports.iter().all(|s| distance_to(s, &z) <= reach)
    });
    let witness = match hit {
        None => None,
        Some(idx) => {
            let z = point(idx);
            let distances: Vec<f64> = supports.iter().map(|s| distance_to(s, &z)).collect();
            let certain = distances.iter().all(|d| *d <= delta);
            Some(Witness { point: z, distances, certain })
        }
    };
    Ok(SeparationResult { pass: witness.is_none(), witness, grid_points: total, step, inflation })
}

#[derive(Debug, Clone)]
pub struct MapCertificate {
    /// Almost periodicity of the divisors holds by construction for model specs.
    pub condition_a: bool,
    pub same_class: SameClassResult,
    pub separation: SeparationResult,
    pub admissible: bool,
}

pub const SEPARATION_NOTE: &str =
    "grid scan with analytic hyperplane distances; exact for sigma-factor supports, inflated by the cell half diagonal";

pub fn map_admissible<R: Rng + ?Sized>(
    data: &MapDivisorData,
    sigma: &SigmaContext,
    opts: &EntryOptions,
    rng: &mut R,
) -> Result<MapCertificate, MapError> {
    data.validate()?;
    let same_class = same_class_check(data, sigma, opts, rng)?;
    let separation = separation_check(data)?;
    let admissible = same_class.same && separation.pass;
    Ok(MapCertificate { condition_a: true, same_class, separation, admissible })
}

/// Zeros and poles of a meromorphic product are uniformly separated.
pub fn meromorphic_product_check(
    zeros: &DivisorSpec,
    poles: &DivisorSpec,
    x_window: &[(f64, f64)],
    y_box: &[(f64, f64)],
    delta: f64,
) -> Result<SeparationResult, MapError> {
    let m = zeros.dim();
    if x_window.len() != m || y_box.len() != m {
        return Err(MapError::BadBox);
    }
    if !(delta > 0.0) {
        return Err(MapError::BadGrid);
    }
    let s = supports(&[zeros.clone(), poles.clone()])?;
    separation_scan(&s, m, x_window, y_box, delta, delta / 4.0)
}

/// Output of the counterexample generator.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub data: MapDivisorData,
    /// `zeta_l` exactly, as (real, imaginary) parts.
    pub shifts: Vec<(RealScalar, RealScalar)>,
    /// Smallest distance from a shift difference to `Z + iZ`.
    pub min_difference_distance: f64,
}

/// `frac` of `q + r sqrt2` with `q, r` rational, as an exact scalar.
fn reduce_mod_one(ctx: &GeneratorContext, q: BigRational, r: BigRational) -> Result<RealScalar, ExactError> {
    let approx = q.to_f64().unwrap_or(0.0) + r.to_f64().unwrap_or(0.0) * std::f64::consts::SQRT_2;
    let shift = BigRational::from_integer(BigInt::from(approx.floor() as i64));
    ctx.scalar(&[("one", q - shift), ("sqrt2", r)])
}

/// Divisors of `phi(z^1 - i z^2 + zeta_l)`, `l = 0..=k`, with
/// `zeta_l = l (sqrt2 - 1)(1 + i) / 2` reduced mod the lattice.
pub fn counterexample_generate(k: usize) -> Result<Counterexample, MapError> {
    if !(1..=8).contains(&k) {
        return Err(MapError::BadK(k));
    }
    let ctx = declare_generators(&["one", "sqrt2"], &[1.0, std::f64::consts::SQRT_2])?;
    let lambda = vec![ctx.integer_frequency("one", &[1, 0])?, ctx.integer_frequency("one", &[0, 1])?];
    let mut shifts = Vec::with_capacity(k + 1);
    for l in 0..=k as i64 {
        let half = BigRational::new(BigInt::from(l), BigInt::from(2));
        let part = reduce_mod_one(&ctx, -half.clone(), half)?;
        shifts.push((part.clone(), part));
    }
    // pairwise differences have a nonzero sqrt2 coefficient, so no
    // coordinate is an integer; nonzero shifts likewise
    let sqrt2 = ctx.index_of("sqrt2").expect("declared");
    let irrational = |s: &RealScalar| s.coeffs().get(&sqrt2).is_some_and(|c| !c.is_zero());
    for a in 0..shifts.len() {
        if a > 0 && !(irrational(&shifts[a].0) && irrational(&shifts[a].1)) {
            return Err(MapError::ConditionViolated);
        }
        for b in 0..a {
            let dr = shifts[a].0.add(&ctx, &shifts[b].0.neg());
            let di = shifts[a].1.add(&ctx, &shifts[b].1.neg());
            if !(irrational(&dr) && irrational(&di)) {
                return Err(MapError::ConditionViolated);
            }
        }
    }
    let numeric: Vec<Complex64> = shifts.iter().map(|(r, i)| Complex64::new(r.approx(), i.approx())).collect();
    let mut min_diff = f64::INFINITY;
    for a in 0..numeric.len() {
        for b in 0..a {
            let d = numeric[a] - numeric[b];
            let nearest = Complex64::new(d.re.round(), d.im.round());
            min_diff = min_diff.min((d - nearest).norm());
        }
    }
    let divisors = numeric
        .iter()
        .map(|s| {
            let f = SigmaFactor::new(vec![1, 0], vec![0, -1], *s);
            PeriodicFunctionSpec::new(lambda.clone(), vec![f], None).map(DivisorSpec::single)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let delta = min_diff / 4.0;
    let data = MapDivisorData {
        divisors,
        x_window: vec![(0.0, 1.0); 2],
        y_box: vec![(-0.5, 0.5); 2],
        delta,
        grid_step: delta / 4.0,
    };
    Ok(Counterexample { data, shifts, min_difference_distance: min_diff })
}

/// Realizability of each divisor separately.
pub fn individual_verdicts<R: Rng + ?Sized>(
    data: &MapDivisorData,
    sigma: &SigmaContext,
    opts: &DecideOptions,
    rng: &mut R,
) -> Result<Vec<RealizabilityCertificate>, MapError> {
    data.divisors.iter().map(|d| decide_realizable(d, sigma, opts, rng).map_err(MapError::from)).collect()
}
