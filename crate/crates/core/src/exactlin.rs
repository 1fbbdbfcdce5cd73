//! Exact arithmetic for frequency vectors.
//!
//! A real number is modelled as a finite rational combination of
//! user-declared generators (for example `1` and `sqrt(2)`), which the caller
//! asserts to be linearly independent over the rationals. A frequency in
//! `R^m` is a vector of such numbers. Under this model integer relations,
//! subgroup bases and coordinates are decided exactly by rational linear
//! algebra and the Hermite normal form over the integers.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExactError {
    #[error("duplicate generator name `{0}`")]
    DuplicateGenerator(String),
    #[error("generator `{0}` has a non-finite approximation")]
    NonFiniteApprox(String),
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),
    #[error("frequencies belong to different generator contexts")]
    ContextMismatch,
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("zero denominator")]
    ZeroDenominator,
    #[error("operation needs at least one frequency")]
    Empty,
    #[error("exact verification failed: {0}")]
    Verification(String),
}

/// One declared generator of the real-number model.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub name: String,
    pub approx: f64,
    /// Absolute error of `approx`.
    pub precision: f64,
}

/// The set of generators shared by every number of one problem instance.
#[derive(Debug, Clone)]
pub struct GeneratorContext(Arc<Vec<Generator>>);

impl PartialEq for GeneratorContext {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || *self.0 == *other.0
    }
}

/// Declares generators with approximations accurate to double precision.
pub fn declare_generators(names: &[&str], approxs: &[f64]) -> Result<GeneratorContext, ExactError> {
    let precisions: Vec<f64> = approxs.iter().map(|a| a.abs().max(1.0) * f64::EPSILON).collect();
    declare_generators_with_precision(names, approxs, &precisions)
}

pub fn declare_generators_with_precision(
    names: &[&str],
    approxs: &[f64],
    precisions: &[f64],
) -> Result<GeneratorContext, ExactError> {
    if names.len() != approxs.len() || names.len() != precisions.len() {
        return Err(ExactError::DimensionMismatch { expected: names.len(), found: approxs.len() });
    }
    let mut gens: Vec<Generator> = Vec::with_capacity(names.len());
    for ((name, &approx), &precision) in names.iter().zip(approxs).zip(precisions) {
        if gens.iter().any(|g| g.name == *name) {
            return Err(ExactError::DuplicateGenerator(name.to_string()));
        }
        if !approx.is_finite() || !precision.is_finite() {
            return Err(ExactError::NonFiniteApprox(name.to_string()));
        }
        gens.push(Generator { name: name.to_string(), approx, precision: precision.abs() });
    }
    Ok(GeneratorContext(Arc::new(gens)))
}

impl GeneratorContext {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn generators(&self) -> &[Generator] {
        &self.0
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.0.iter().position(|g| g.name == name)
    }

    /// Builds `sum q_g * g` from `(name, q)` pairs.
    pub fn scalar(&self, terms: &[(&str, BigRational)]) -> Result<RealScalar, ExactError> {
        let mut coeffs = BTreeMap::new();
        for (name, q) in terms {
            let idx = self.index_of(name).ok_or_else(|| ExactError::UnknownGenerator(name.to_string()))?;
            let e: &mut BigRational = coeffs.entry(idx).or_insert_with(BigRational::zero);
            *e += q;
        }
        Ok(RealScalar::from_coeffs(self, coeffs))
    }

    /// `num/den` times the named generator.
    pub fn multiple(&self, name: &str, num: i64, den: i64) -> Result<RealScalar, ExactError> {
        if den == 0 {
            return Err(ExactError::ZeroDenominator);
        }
        self.scalar(&[(name, BigRational::new(num.into(), den.into()))])
    }

    pub fn zero_scalar(&self) -> RealScalar {
        RealScalar { coeffs: BTreeMap::new(), approx: 0.0 }
    }

    pub fn frequency(&self, comps: Vec<RealScalar>) -> Frequency {
        Frequency { ctx: self.clone(), comps }
    }

    pub fn zero_frequency(&self, dim: usize) -> Frequency {
        Frequency { ctx: self.clone(), comps: vec![self.zero_scalar(); dim] }
    }

    /// Frequency whose components are integer multiples of one generator.
    pub fn integer_frequency(&self, name: &str, comps: &[i64]) -> Result<Frequency, ExactError> {
        let comps = comps.iter().map(|&c| self.multiple(name, c, 1)).collect::<Result<Vec<_>, _>>()?;
        Ok(self.frequency(comps))
    }

    /// Small integer relation among the generator approximations, if one is
    /// visible at working precision. This is a diagnostic for a violated
    /// independence assertion, never a proof either way.
    pub fn suspect_relation(&self) -> Option<Vec<i64>> {
        const HEIGHT: i64 = 12;
        let vals: Vec<f64> = self.0.iter().map(|g| g.approx).collect();
        let n = vals.len();
        if n < 2 {
            return None;
        }
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        let tol = 1e-10 * scale * HEIGHT as f64;
        let hit = |coeffs: &[i64]| {
            let s: f64 = coeffs.iter().zip(&vals).map(|(c, v)| *c as f64 * v).sum();
            coeffs.iter().any(|&c| c != 0) && s.abs() <= tol
        };
        if n <= 3 {
            let mut coeffs = vec![-HEIGHT; n];
            loop {
                let first_nonzero = coeffs.iter().find(|&&c| c != 0);
                if matches!(first_nonzero, Some(&c) if c > 0) && hit(&coeffs) {
                    let g = coeffs.iter().fold(0i64, |g, &c| g.gcd(&c));
                    return Some(coeffs.iter().map(|c| c / g).collect());
                }
                let mut i = 0;
                loop {
                    if i == n {
                        return None;
                    }
                    coeffs[i] += 1;
                    if coeffs[i] > HEIGHT {
                        coeffs[i] = -HEIGHT;
                        i += 1;
                    } else {
                        break;
                    }
                }
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                for a in 1..=HEIGHT {
                    for b in -HEIGHT..=HEIGHT {
                        let mut coeffs = vec![0; n];
                        coeffs[i] = a;
                        coeffs[j] = b;
                        if b != 0 && a.gcd(&b) == 1 && hit(&coeffs) {
                            return Some(coeffs);
                        }
                    }
                }
            }
        }
        None
    }

    fn approx_of(&self, coeffs: &BTreeMap<usize, BigRational>) -> f64 {
        coeffs.iter().map(|(i, q)| rat_to_f64(q) * self.0[*i].approx).sum()
    }
}

pub(crate) fn rat_to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or_else(|| {
        let n = q.numer().to_f64().unwrap_or(f64::NAN);
        let d = q.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// A real number `sum_g q_g * g` over the declared generators.
#[derive(Debug, Clone)]
pub struct RealScalar {
    coeffs: BTreeMap<usize, BigRational>,
    approx: f64,
}

impl PartialEq for RealScalar {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs
    }
}

impl Eq for RealScalar {}

impl RealScalar {
    fn from_coeffs(ctx: &GeneratorContext, mut coeffs: BTreeMap<usize, BigRational>) -> Self {
        coeffs.retain(|_, q| !q.is_zero());
        let approx = ctx.approx_of(&coeffs);
        RealScalar { coeffs, approx }
    }

    pub fn coeffs(&self) -> &BTreeMap<usize, BigRational> {
        &self.coeffs
    }

    pub fn approx(&self) -> f64 {
        self.approx + 0.0
    }

    /// Bound on `|approx - true value|` implied by the generator precisions.
    pub fn approx_error(&self, ctx: &GeneratorContext) -> f64 {
        self.coeffs.iter().map(|(i, q)| rat_to_f64(q).abs() * ctx.0[*i].precision).sum::<f64>()
            + 4.0 * f64::EPSILON * self.approx.abs()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// The rational value when only the named generator occurs.
    pub fn as_multiple_of(&self, ctx: &GeneratorContext, name: &str) -> Option<BigRational> {
        let idx = ctx.index_of(name)?;
        match self.coeffs.len() {
            0 => Some(BigRational::zero()),
            1 => self.coeffs.get(&idx).cloned(),
            _ => None,
        }
    }

    pub fn add(&self, ctx: &GeneratorContext, other: &RealScalar) -> RealScalar {
        let mut coeffs = self.coeffs.clone();
        for (i, q) in &other.coeffs {
            *coeffs.entry(*i).or_insert_with(BigRational::zero) += q;
        }
        RealScalar::from_coeffs(ctx, coeffs)
    }

    pub fn scale(&self, ctx: &GeneratorContext, k: &BigRational) -> RealScalar {
        let coeffs = self.coeffs.iter().map(|(i, q)| (*i, q * k)).collect();
        RealScalar::from_coeffs(ctx, coeffs)
    }

    pub fn neg(&self) -> RealScalar {
        RealScalar { coeffs: self.coeffs.iter().map(|(i, q)| (*i, -q)).collect(), approx: -self.approx }
    }
}

/// A frequency vector in `R^m`.
#[derive(Debug, Clone)]
pub struct Frequency {
    ctx: GeneratorContext,
    comps: Vec<RealScalar>,
}

impl PartialEq for Frequency {
    fn eq(&self, other: &Self) -> bool {
        self.ctx == other.ctx && self.comps == other.comps
    }
}

impl Eq for Frequency {}

impl Hash for Frequency {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.comps.len().hash(state);
        for c in &self.comps {
            for (i, q) in &c.coeffs {
                i.hash(state);
                q.hash(state);
            }
            usize::MAX.hash(state);
        }
    }
}

impl PartialOrd for Frequency {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Frequency {
    /// Lexicographic on the flattened rational coordinates.
    fn cmp(&self, other: &Self) -> Ordering {
        self.flat().cmp(&other.flat()).then(self.dim().cmp(&other.dim()))
    }
}

impl fmt::Display for Frequency {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.comps.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            if c.coeffs.is_empty() {
                write!(f, "0")?;
            }
            for (j, (i, q)) in c.coeffs.iter().enumerate() {
                if j > 0 {
                    write!(f, " + ")?;
                }
                write!(f, "{}*{}", q, self.ctx.0[*i].name)?;
            }
        }
        write!(f, ")")
    }
}

impl Frequency {
    pub fn context(&self) -> &GeneratorContext {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn components(&self) -> &[RealScalar] {
        &self.comps
    }

    pub fn approx(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.approx()).collect()
    }

    pub fn approx_error(&self) -> Vec<f64> {
        self.comps.iter().map(|c| c.approx_error(&self.ctx)).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(RealScalar::is_zero)
    }

    /// Dense rational coordinates, component-major: index `c * g + gen`.
    pub fn flat(&self) -> Vec<BigRational> {
        let g = self.ctx.len();
        let mut out = vec![BigRational::zero(); self.comps.len() * g];
        for (c, s) in self.comps.iter().enumerate() {
            for (i, q) in &s.coeffs {
                out[c * g + i] = q.clone();
            }
        }
        out
    }

    pub fn from_flat(ctx: &GeneratorContext, dim: usize, flat: &[BigRational]) -> Frequency {
        let g = ctx.len();
        let comps = (0..dim)
            .map(|c| {
                let coeffs = (0..g).map(|i| (i, flat[c * g + i].clone())).collect();
                RealScalar::from_coeffs(ctx, coeffs)
            })
            .collect();
        Frequency { ctx: ctx.clone(), comps }
    }

    fn check_compatible(&self, other: &Frequency) -> Result<(), ExactError> {
        if self.ctx != other.ctx {
            return Err(ExactError::ContextMismatch);
        }
        if self.dim() != other.dim() {
            return Err(ExactError::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        Ok(())
    }

    pub fn add(&self, other: &Frequency) -> Result<Frequency, ExactError> {
        self.check_compatible(other)?;
        let comps = self.comps.iter().zip(&other.comps).map(|(a, b)| a.add(&self.ctx, b)).collect();
        Ok(Frequency { ctx: self.ctx.clone(), comps })
    }

    pub fn sub(&self, other: &Frequency) -> Result<Frequency, ExactError> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Frequency {
        Frequency { ctx: self.ctx.clone(), comps: self.comps.iter().map(RealScalar::neg).collect() }
    }

    pub fn scale(&self, k: &BigRational) -> Frequency {
        Frequency { ctx: self.ctx.clone(), comps: self.comps.iter().map(|c| c.scale(&self.ctx, k)).collect() }
    }

    pub fn scale_int(&self, k: i64) -> Frequency {
        self.scale(&BigRational::from_integer(k.into()))
    }

    /// `sum_i coeffs[i] * freqs[i]`.
    pub fn combination(freqs: &[Frequency], coeffs: &[BigInt]) -> Result<Frequency, ExactError> {
        let (ctx, dim) = shared_shape(freqs)?;
        if coeffs.len() != freqs.len() {
            return Err(ExactError::DimensionMismatch { expected: freqs.len(), found: coeffs.len() });
        }
        let mut acc = vec![BigRational::zero(); dim * ctx.len()];
        for (f, k) in freqs.iter().zip(coeffs) {
            if k.is_zero() {
                continue;
            }
            let k = BigRational::from_integer(k.clone());
            for (a, x) in acc.iter_mut().zip(f.flat()) {
                *a += x * &k;
            }
        }
        Ok(Frequency::from_flat(&ctx, dim, &acc))
    }
}

pub(crate) fn shared_shape(freqs: &[Frequency]) -> Result<(GeneratorContext, usize), ExactError> {
    let first = freqs.first().ok_or(ExactError::Empty)?;
    for f in &freqs[1..] {
        first.check_compatible(f)?;
    }
    Ok((first.ctx.clone(), first.dim()))
}

// ---------------------------------------------------------------------------
// Rational and integer matrix kernels

fn lcm_of_denominators<'a>(entries: impl Iterator<Item = &'a BigRational>) -> BigInt {
    entries.fold(BigInt::one(), |l, q| l.lcm(q.denom()))
}

/// Reduced row echelon form over Q; returns the pivot columns.
fn rref(m: &mut [Vec<BigRational>]) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else { continue };
        m.swap(r, p);
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                let (top, rest) = if i < r {
                    let (a, b) = m.split_at_mut(r);
                    (&mut a[i], &b[0])
                } else {
                    let (a, b) = m.split_at_mut(i);
                    (&mut b[0], &a[r])
                };
                for (x, y) in top.iter_mut().zip(rest.iter()) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Row-style Hermite normal form of an integer lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hnf {
    /// Nonzero rows in echelon order; pivots positive, entries above each
    /// pivot reduced into `[0, pivot)`.
    pub rows: Vec<Vec<BigInt>>,
    pub pivots: Vec<usize>,
}

pub fn hermite_normal_form(input: &[Vec<BigInt>]) -> Hnf {
    let mut a: Vec<Vec<BigInt>> = input.to_vec();
    let nr = a.len();
    let nc = a.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..nc {
        if r == nr {
            break;
        }
        loop {
            // smallest nonzero |entry| at or below r; ties go to the upper row
            let piv = (r..nr)
                .filter(|&i| !a[i][c].is_zero())
                .min_by(|&i, &j| a[i][c].abs().cmp(&a[j][c].abs()).then(i.cmp(&j)));
            let Some(piv) = piv else { break };
            a.swap(r, piv);
            let mut clean = true;
            for i in r + 1..nr {
                if a[i][c].is_zero() {
                    continue;
                }
                let q = a[i][c].div_floor(&a[r][c]);
                let pivot_row = a[r].clone();
                for (x, y) in a[i].iter_mut().zip(&pivot_row) {
                    *x -= &q * y;
                }
                if !a[i][c].is_zero() {
                    clean = false;
                }
            }
            if clean {
                break;
            }
        }
        if r >= nr || a[r][c].is_zero() {
            continue;
        }
        if a[r][c].is_negative() {
            for x in a[r].iter_mut() {
                *x = -&*x;
            }
        }
        let pivot_row = a[r].clone();
        for row in a.iter_mut().take(r) {
            let q = row[c].div_floor(&pivot_row[c]);
            if !q.is_zero() {
                for (x, y) in row.iter_mut().zip(&pivot_row) {
                    *x -= &q * y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    a.truncate(r);
    Hnf { rows: a, pivots }
}

// ---------------------------------------------------------------------------
// Frequency-level operations

/// A nonzero integer relation `sum r_i * freqs[i] = 0`, or `None` when the
/// frequencies are Z-independent. Integer and rational dependence coincide
/// after clearing denominators.
pub fn z_dependent(freqs: &[Frequency]) -> Result<Option<Vec<BigInt>>, ExactError> {
    if freqs.is_empty() {
        return Ok(None);
    }
    let (_, _) = shared_shape(freqs)?;
    let flats: Vec<Vec<BigRational>> = freqs.iter().map(Frequency::flat).collect();
    let n = freqs.len();
    let len = flats[0].len();
    // columns are the frequencies: solve A r = 0
    let mut a: Vec<Vec<BigRational>> = (0..len).map(|k| flats.iter().map(|f| f[k].clone()).collect()).collect();
    let pivots = rref(&mut a);
    if pivots.len() == n {
        return Ok(None);
    }
    let free = (0..n).find(|c| !pivots.contains(c)).expect("rank deficiency implies a free column");
    let mut sol = vec![BigRational::zero(); n];
    sol[free] = BigRational::one();
    for (row, &p) in pivots.iter().enumerate() {
        sol[p] = -a[row][free].clone();
    }
    let l = lcm_of_denominators(sol.iter());
    let mut ints: Vec<BigInt> = sol.iter().map(|q| (q * BigRational::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    for x in ints.iter_mut() {
        *x = &*x / &g;
    }
    if let Some(first) = ints.iter().find(|x| !x.is_zero()) {
        if first.is_negative() {
            for x in ints.iter_mut() {
                *x = -&*x;
            }
        }
    }
    let check = Frequency::combination(freqs, &ints)?;
    if !check.is_zero() {
        return Err(ExactError::Verification("integer relation does not vanish".into()));
    }
    Ok(Some(ints))
}

/// Rank of the rational coordinate matrix.
pub fn q_rank(freqs: &[Frequency]) -> Result<usize, ExactError> {
    if freqs.is_empty() {
        return Ok(0);
    }
    shared_shape(freqs)?;
    let mut a: Vec<Vec<BigRational>> = freqs.iter().map(Frequency::flat).collect();
    Ok(rref(&mut a).len())
}

/// A finitely generated subgroup of `R^m` with its canonical Z-basis.
#[derive(Debug, Clone)]
pub struct FrequencyGroup {
    ctx: GeneratorContext,
    dim: usize,
    pub generators: Vec<Frequency>,
    pub basis: Vec<Frequency>,
    /// `generators[i] = sum_j coord[i][j] * basis[j]`.
    pub coord: Vec<Vec<BigInt>>,
    basis_flat: Vec<Vec<BigRational>>,
    pivots: Vec<usize>,
}

/// Canonical Z-basis of the group generated by `freqs`.
pub fn group_basis(freqs: &[Frequency]) -> Result<FrequencyGroup, ExactError> {
    let (ctx, dim) = shared_shape(freqs)?;
    let flats: Vec<Vec<BigRational>> = freqs.iter().map(Frequency::flat).collect();
    let l = lcm_of_denominators(flats.iter().flatten());
    let lq = BigRational::from_integer(l.clone());
    let ints: Vec<Vec<BigInt>> =
        flats.iter().map(|row| row.iter().map(|q| (q * &lq).to_integer()).collect()).collect();
    let hnf = hermite_normal_form(&ints);
    let basis_flat: Vec<Vec<BigRational>> = hnf
        .rows
        .iter()
        .map(|row| row.iter().map(|x| BigRational::new(x.clone(), l.clone())).collect())
        .collect();
    let basis = basis_flat.iter().map(|f| Frequency::from_flat(&ctx, dim, f)).collect();
    let mut group = FrequencyGroup {
        ctx,
        dim,
        generators: freqs.to_vec(),
        basis,
        coord: Vec::new(),
        basis_flat,
        pivots: hnf.pivots,
    };
    let mut coord = Vec::with_capacity(freqs.len());
    for (f, flat) in freqs.iter().zip(&flats) {
        let c = group
            .solve_flat(flat)
            .ok_or_else(|| ExactError::Verification(format!("generator {f} not reconstructed by its basis")))?;
        coord.push(c);
    }
    group.coord = coord;
    group.verify()?;
    Ok(group)
}

impl FrequencyGroup {
    pub fn context(&self) -> &GeneratorContext {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    fn solve_flat(&self, v: &[BigRational]) -> Option<Vec<BigInt>> {
        let mut rest: Vec<BigRational> = v.to_vec();
        let mut out = Vec::with_capacity(self.basis_flat.len());
        for (row, &p) in self.basis_flat.iter().zip(&self.pivots) {
            let x = &rest[p] / &row[p];
            if !x.is_integer() {
                return None;
            }
            if !x.is_zero() {
                for (r, b) in rest.iter_mut().zip(row) {
                    *r -= &x * b;
                }
            }
            out.push(x.to_integer());
        }
        rest.iter().all(Zero::is_zero).then_some(out)
    }

    /// Exact reconstruction check of every generator from its coordinate row.
    pub fn verify(&self) -> Result<(), ExactError> {
        for (g, c) in self.generators.iter().zip(&self.coord) {
            let rebuilt = if self.basis.is_empty() {
                self.ctx.zero_frequency(self.dim)
            } else {
                Frequency::combination(&self.basis, c)?
            };
            if &rebuilt != g {
                return Err(ExactError::Verification(format!("generator {g} != coord x basis")));
            }
        }
        if z_dependent(&self.basis)?.is_some() {
            return Err(ExactError::Verification("basis is Z-dependent".into()));
        }
        Ok(())
    }
}

/// Integer coordinates of `freq` in `group.basis`, or `None` when `freq` is
/// not in the group.
pub fn express(freq: &Frequency, group: &FrequencyGroup) -> Result<Option<Vec<BigInt>>, ExactError> {
    if freq.ctx != group.ctx {
        return Err(ExactError::ContextMismatch);
    }
    if freq.dim() != group.dim {
        return Err(ExactError::DimensionMismatch { expected: group.dim, found: freq.dim() });
    }
    Ok(group.solve_flat(&freq.flat()))
}

/// Outcome of an R-proportionality test between two frequencies.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Proportionality {
    pub parallel: bool,
    /// `true` when decided exactly (rational ratio inside the generator
    /// model, or a zero vector); `false` for the floating test.
    pub exact: bool,
    /// Sine of the angle between the approximations.
    pub sine: f64,
}

pub const PARALLEL_REL_TOL: f64 = 1e-9;

pub fn real_parallel(a: &Frequency, b: &Frequency) -> Result<Proportionality, ExactError> {
    a.check_compatible(b)?;
    let fa = a.flat();
    let fb = b.flat();
    let sine = approx_sine(&a.approx(), &b.approx());
    if a.is_zero() || b.is_zero() {
        return Ok(Proportionality { parallel: true, exact: true, sine });
    }
    let k = fa.iter().position(|q| !q.is_zero()).expect("nonzero vector");
    let ratio = &fb[k] / &fa[k];
    if fa.iter().zip(&fb).all(|(x, y)| &(x * &ratio) == y) {
        return Ok(Proportionality { parallel: true, exact: true, sine });
    }
    Ok(Proportionality { parallel: sine <= PARALLEL_REL_TOL, exact: false, sine })
}

fn approx_sine(a: &[f64], b: &[f64]) -> f64 {
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let mut cross = 0.0;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let t = a[i] * b[j] - a[j] * b[i];
            cross += t * t;
        }
    }
    cross.sqrt() / (na * nb)
}
