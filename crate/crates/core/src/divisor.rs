//! Divisors given by defining functions built from sigma factors
//! `phi(<u, w> + i<v, w> + shift)` and trigonometric polynomials, pulled
//! back along `w = Lambda z`.

use num_bigint::BigInt;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::chern::{self, ChernClass, ChernError, Completion, WedgePair};
use crate::contour::{chern_entry, ContourError, EntryOptions, EntryResult};
use crate::exactlin::{shared_shape, z_dependent, ExactError, Frequency, GeneratorContext};
use crate::expsum::TrigPolyW;
use crate::sigma::SigmaContext;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DivisorError {
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error(transparent)]
    Chern(#[from] ChernError),
    #[error("winding entry ({p}, {q}): {source}")]
    Winding { p: usize, q: usize, source: ContourError },
    #[error("Lambda must have at least one row")]
    EmptyLambda,
    #[error("Lambda rows are Z-dependent")]
    DependentLambda,
    #[error("factor {0}: u and v must have length N and not both vanish")]
    BadFactor(usize),
    #[error("trigonometric part must have dimension N and be nonzero")]
    BadTrig,
    #[error("a component needs sigma factors or a trigonometric part")]
    EmptyComponent,
    #[error("component weights must be nonzero")]
    ZeroWeight,
    #[error("winding classes need N <= {max}, got {found}")]
    TooManyRows { max: usize, found: usize },
    #[error("component {component}: algebraic and winding classes disagree")]
    Integrity { component: usize },
    #[error("the functional <z, lambda> + i<z, mu> vanishes")]
    Degenerate,
    #[error("point has dimension {found}, expected {expected}")]
    Dimension { expected: usize, found: usize },
}

/// `phi(<u, w> + i<v, w> + shift)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaFactor {
    pub u: Vec<i64>,
    pub v: Vec<i64>,
    pub shift: Complex64,
}

impl SigmaFactor {
    pub fn new(u: Vec<i64>, v: Vec<i64>, shift: Complex64) -> SigmaFactor {
        SigmaFactor { u, v, shift }
    }

    /// `phi(w^p + i w^q)`, 0-based indices.
    pub fn basic(n: usize, p: usize, q: usize) -> SigmaFactor {
        let mut u = vec![0; n];
        let mut v = vec![0; n];
        u[p] = 1;
        v[q] = 1;
        SigmaFactor { u, v, shift: Complex64::new(0.0, 0.0) }
    }

    fn argument(&self, w: &[Complex64]) -> Complex64 {
        let mut acc = self.shift;
        for ((wj, uj), vj) in w.iter().zip(&self.u).zip(&self.v) {
            acc += wj * Complex64::new(*uj as f64, *vj as f64);
        }
        acc
    }

    /// `conj(phi(conj(...)))`: `v` and the shift are conjugated.
    pub fn mirrored(&self) -> SigmaFactor {
        SigmaFactor { u: self.u.clone(), v: self.v.iter().map(|x| -x).collect(), shift: self.shift.conj() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicFunctionSpec {
    ctx: GeneratorContext,
    dim: usize,
    lambda: Vec<Frequency>,
    factors: Vec<SigmaFactor>,
    trig: Option<TrigPolyW>,
}

impl PeriodicFunctionSpec {
    pub fn new(
        lambda: Vec<Frequency>,
        factors: Vec<SigmaFactor>,
        trig: Option<TrigPolyW>,
    ) -> Result<PeriodicFunctionSpec, DivisorError> {
        if lambda.is_empty() {
            return Err(DivisorError::EmptyLambda);
        }
        let (ctx, dim) = shared_shape(&lambda)?;
        if z_dependent(&lambda)?.is_some() {
            return Err(DivisorError::DependentLambda);
        }
        let n = lambda.len();
        for (i, f) in factors.iter().enumerate() {
            if f.u.len() != n || f.v.len() != n || f.u.iter().chain(&f.v).all(|x| *x == 0) {
                return Err(DivisorError::BadFactor(i));
            }
        }
        if let Some(t) = &trig {
            if t.dim() != n || t.is_zero() {
                return Err(DivisorError::BadTrig);
            }
        }
        if factors.is_empty() && trig.is_none() {
            return Err(DivisorError::EmptyComponent);
        }
        Ok(PeriodicFunctionSpec { ctx, dim, lambda, factors, trig })
    }

    pub fn context(&self) -> &GeneratorContext {
        &self.ctx
    }

    /// Dimension `m` of the tube domain.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number `N` of periodic coordinates.
    pub fn n(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[Frequency] {
        &self.lambda
    }

    pub fn factors(&self) -> &[SigmaFactor] {
        &self.factors
    }

    pub fn trig(&self) -> Option<&TrigPolyW> {
        self.trig.as_ref()
    }

    /// `F(w)` with each sigma factor in the normalized form, which keeps the
    /// phase and avoids overflow.
    pub fn eval_w(&self, sigma: &SigmaContext, w: &[Complex64]) -> Complex64 {
        let mut acc = Complex64::new(1.0, 0.0);
        for f in &self.factors {
            acc *= sigma.eval_normalized(f.argument(w));
        }
        if let Some(t) = &self.trig {
            acc *= t.eval_unchecked(w);
        }
        acc
    }

    /// `F(Lambda z)` on `C^m`.
    pub fn eval_z(&self, sigma: &SigmaContext, z: &[Complex64]) -> Result<Complex64, DivisorError> {
        if z.len() != self.dim {
            return Err(DivisorError::Dimension { expected: self.dim, found: z.len() });
        }
        let w: Vec<Complex64> =
            self.lambda.iter().map(|l| l.approx().iter().zip(z).map(|(a, b)| b * *a).sum()).collect();
        Ok(self.eval_w(sigma, &w))
    }

    /// Spec of `w -> conj(F(conj w))`.
    pub fn mirrored(&self) -> PeriodicFunctionSpec {
        let trig = self.trig.as_ref().map(|t| {
            let terms = t.terms().iter().map(|(c, k)| (c.conj(), k.iter().map(|x| -x).collect())).collect();
            TrigPolyW::new(t.dim(), terms).expect("same shape")
        });
        PeriodicFunctionSpec {
            ctx: self.ctx.clone(),
            dim: self.dim,
            lambda: self.lambda.clone(),
            factors: self.factors.iter().map(SigmaFactor::mirrored).collect(),
            trig,
        }
    }
}

fn combine(lambda: &[Frequency], coeffs: &[i64]) -> Result<Frequency, DivisorError> {
    let ks: Vec<BigInt> = coeffs.iter().map(|&k| BigInt::from(k)).collect();
    Ok(Frequency::combination(lambda, &ks)?)
}

/// `wedge(u^T Lambda, v^T Lambda)`; the shift does not enter.
pub fn class_of_sigma_factor(f: &SigmaFactor, lambda: &[Frequency]) -> Result<ChernClass, DivisorError> {
    if f.u.len() != lambda.len() || f.v.len() != lambda.len() {
        return Err(DivisorError::BadFactor(0));
    }
    let l = combine(lambda, &f.u)?;
    let m = combine(lambda, &f.v)?;
    Ok(chern::wedge(&l, &m)?)
}

pub const MAX_WINDING_ROWS: usize = 6;

/// Winding class with the entries it was assembled from.
#[derive(Debug, Clone)]
pub struct WindingClass {
    pub class: ChernClass,
    /// Entry matrix `m_{pq}` with respect to the rows of Lambda.
    pub matrix: Vec<Vec<i64>>,
    /// One record per `p < q`, 0-based.
    pub entries: Vec<(usize, usize, EntryResult)>,
}

/// Default base point `(-1/2, ..., -1/2)`.
pub fn default_base_point(n: usize) -> Vec<Complex64> {
    vec![Complex64::new(-0.5, 0.0); n]
}

fn winding_matrix<F, R>(
    f: &F,
    n: usize,
    opts: &EntryOptions,
    rng: &mut R,
) -> Result<(Vec<Vec<i64>>, Vec<(usize, usize, EntryResult)>), DivisorError>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
    R: Rng + ?Sized,
{
    // seeds drawn in entry order keep the result independent of scheduling
    let pairs: Vec<(usize, usize, u64)> =
        (0..n).flat_map(|p| ((p + 1)..n).map(move |q| (p, q))).map(|(p, q)| (p, q, rng.gen())).collect();
    let w0 = default_base_point(n);
    let results: Vec<Result<(usize, usize, EntryResult), DivisorError>> = pairs
        .par_iter()
        .map(|&(p, q, seed)| {
            let mut local = ChaCha8Rng::seed_from_u64(seed);
            chern_entry(f, p, q, &w0, opts, &mut local)
                .map(|r| (p, q, r))
                .map_err(|source| DivisorError::Winding { p, q, source })
        })
        .collect();
    let entries: Vec<(usize, usize, EntryResult)> = results.into_iter().collect::<Result<_, _>>()?;
    let mut matrix = vec![vec![0i64; n]; n];
    for (p, q, r) in &entries {
        matrix[*p][*q] = r.value;
        matrix[*q][*p] = -r.value;
    }
    Ok((matrix, entries))
}

fn class_from_matrix(ctx: &GeneratorContext, dim: usize, lambda: &[Frequency], m: &[Vec<i64>]) -> Result<ChernClass, DivisorError> {
    let big = m.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    Ok(ChernClass::from_parts(ctx, dim, lambda.to_vec(), big)?)
}

/// Class assembled from winding entries of an arbitrary 1-periodic function
/// of `w`, pulled back along the rows of `lambda`.
pub fn class_via_winding_fn<F, R>(
    f: &F,
    lambda: &[Frequency],
    opts: &EntryOptions,
    rng: &mut R,
) -> Result<WindingClass, DivisorError>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
    R: Rng + ?Sized,
{
    let n = lambda.len();
    if n > MAX_WINDING_ROWS {
        return Err(DivisorError::TooManyRows { max: MAX_WINDING_ROWS, found: n });
    }
    if n == 0 {
        return Err(DivisorError::EmptyLambda);
    }
    let (ctx, dim) = shared_shape(lambda)?;
    let (matrix, entries) = winding_matrix(f, n, opts, rng)?;
    let class = class_from_matrix(&ctx, dim, lambda, &matrix)?;
    Ok(WindingClass { class, matrix, entries })
}

pub fn class_via_winding<R: Rng + ?Sized>(
    spec: &PeriodicFunctionSpec,
    sigma: &SigmaContext,
    opts: &EntryOptions,
    rng: &mut R,
) -> Result<WindingClass, DivisorError> {
    let f = |w: &[Complex64]| spec.eval_w(sigma, w);
    class_via_winding_fn(&f, &spec.lambda, opts, rng)
}

/// Sum of the sigma-factor classes, plus the winding class of the
/// trigonometric part when there is one (no algebraic rule exists for it).
pub fn class_algebraic<R: Rng + ?Sized>(
    spec: &PeriodicFunctionSpec,
    opts: &EntryOptions,
    rng: &mut R,
) -> Result<ChernClass, DivisorError> {
    let mut acc = ChernClass::zero(&spec.ctx, spec.dim);
    for f in &spec.factors {
        acc = chern::add(&acc, &class_of_sigma_factor(f, &spec.lambda)?)?;
    }
    if let Some(t) = &spec.trig {
        let g = |w: &[Complex64]| t.eval_unchecked(w);
        acc = chern::add(&acc, &class_via_winding_fn(&g, &spec.lambda, opts, rng)?.class)?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DivisorComponent {
    pub spec: PeriodicFunctionSpec,
    pub weight: i64,
}

/// Formal integer combination of divisors of periodic functions.
#[derive(Debug, Clone, PartialEq)]
pub struct DivisorSpec {
    ctx: GeneratorContext,
    dim: usize,
    components: Vec<DivisorComponent>,
}

impl DivisorSpec {
    pub fn new(ctx: &GeneratorContext, dim: usize, components: Vec<DivisorComponent>) -> Result<DivisorSpec, DivisorError> {
        for c in &components {
            if c.weight == 0 {
                return Err(DivisorError::ZeroWeight);
            }
            if c.spec.context() != ctx {
                return Err(ExactError::ContextMismatch.into());
            }
            if c.spec.dim() != dim {
                return Err(ExactError::DimensionMismatch { expected: dim, found: c.spec.dim() }.into());
            }
        }
        Ok(DivisorSpec { ctx: ctx.clone(), dim, components })
    }

    pub fn single(spec: PeriodicFunctionSpec) -> DivisorSpec {
        DivisorSpec { ctx: spec.ctx.clone(), dim: spec.dim, components: vec![DivisorComponent { spec, weight: 1 }] }
    }

    pub fn context(&self) -> &GeneratorContext {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[DivisorComponent] {
        &self.components
    }

    pub fn mirrored(&self) -> DivisorSpec {
        let components =
            self.components.iter().map(|c| DivisorComponent { spec: c.spec.mirrored(), weight: c.weight }).collect();
        DivisorSpec { ctx: self.ctx.clone(), dim: self.dim, components }
    }

    /// Sum of both specs' components.
    pub fn plus(&self, other: &DivisorSpec) -> Result<DivisorSpec, DivisorError> {
        let mut components = self.components.clone();
        components.extend(other.components.iter().cloned());
        DivisorSpec::new(&self.ctx, self.dim, components)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Algebraic,
    Winding,
}

pub fn divisor_class<R: Rng + ?Sized>(
    d: &DivisorSpec,
    method: Method,
    sigma: &SigmaContext,
    opts: &EntryOptions,
    rng: &mut R,
) -> Result<ChernClass, DivisorError> {
    let mut acc = ChernClass::zero(&d.ctx, d.dim);
    for c in &d.components {
        let class = match method {
            Method::Algebraic => class_algebraic(&c.spec, opts, rng)?,
            Method::Winding => class_via_winding(&c.spec, sigma, opts, rng)?.class,
        };
        acc = chern::add(&acc, &class.scale(&BigInt::from(c.weight)))?;
    }
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossCheck {
    /// Components with `N <= DEFAULT_CROSS_CHECK_ROWS`.
    Auto,
    On,
    Off,
}

pub const DEFAULT_CROSS_CHECK_ROWS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecideOptions {
    pub entry: EntryOptions,
    pub cross_check: CrossCheck,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions { entry: EntryOptions::default(), cross_check: CrossCheck::Auto }
    }
}

#[derive(Debug, Clone)]
pub struct ComponentReport {
    pub weight: i64,
    pub class: ChernClass,
    /// Present when the winding cross-check ran.
    pub winding: Option<WindingClass>,
}

#[derive(Debug, Clone)]
pub struct RealizabilityCertificate {
    pub total_class: ChernClass,
    pub realizable: bool,
    /// Empty iff realizable; `total_class + sum completion = 0`.
    pub completion: Vec<WedgePair>,
    pub completion_details: Option<Completion>,
    pub components: Vec<ComponentReport>,
}

pub fn decide_realizable<R: Rng + ?Sized>(
    d: &DivisorSpec,
    sigma: &SigmaContext,
    opts: &DecideOptions,
    rng: &mut R,
) -> Result<RealizabilityCertificate, DivisorError> {
    let mut total = ChernClass::zero(&d.ctx, d.dim);
    let mut components = Vec::with_capacity(d.components.len());
    for (i, c) in d.components.iter().enumerate() {
        let class = class_algebraic(&c.spec, &opts.entry, rng)?;
        let check = match opts.cross_check {
            CrossCheck::On => c.spec.n() <= MAX_WINDING_ROWS,
            CrossCheck::Auto => c.spec.n() <= DEFAULT_CROSS_CHECK_ROWS,
            CrossCheck::Off => false,
        };
        let winding = if check {
            let w = class_via_winding(&c.spec, sigma, &opts.entry, rng)?;
            if !w.class.same_class(&class)? {
                return Err(DivisorError::Integrity { component: i });
            }
            Some(w)
        } else {
            None
        };
        total = chern::add(&total, &class.scale(&BigInt::from(c.weight)))?;
        components.push(ComponentReport { weight: c.weight, class, winding });
    }
    if total.is_zero() {
        return Ok(RealizabilityCertificate {
            total_class: total,
            realizable: true,
            completion: Vec::new(),
            completion_details: None,
            components,
        });
    }
    let completion = chern::complete(&total, d.dim > 1, rng)?;
    let closing = chern::add(&total, &chern::recombine(&d.ctx, d.dim, &completion.pairs)?)?;
    if !closing.is_zero() {
        return Err(ChernError::CompletionMismatch.into());
    }
    Ok(RealizabilityCertificate {
        total_class: total,
        realizable: false,
        completion: completion.pairs.clone(),
        completion_details: Some(completion),
        components,
    })
}

/// `a = sum_p (u_p + i v_p) lambda_p`, so the factor argument is `<z, a> + shift`.
pub fn factor_functional(f: &SigmaFactor, lambda: &[Frequency]) -> Result<Vec<Complex64>, DivisorError> {
    if f.u.len() != lambda.len() || f.v.len() != lambda.len() {
        return Err(DivisorError::BadFactor(0));
    }
    let (_, dim) = shared_shape(lambda)?;
    let mut a = vec![Complex64::new(0.0, 0.0); dim];
    for (p, l) in lambda.iter().enumerate() {
        let c = Complex64::new(f.u[p] as f64, f.v[p] as f64);
        for (aj, lj) in a.iter_mut().zip(l.approx()) {
            *aj += c * lj;
        }
    }
    Ok(a)
}

/// Euclidean distance from `z` to the zero set of the factor, a union of
/// complex hyperplanes `<z, a> + shift = gamma`, `gamma` in `Z + iZ`.
pub fn support_distance(f: &SigmaFactor, lambda: &[Frequency], z: &[Complex64]) -> Result<f64, DivisorError> {
    let a = factor_functional(f, lambda)?;
    if z.len() != a.len() {
        return Err(DivisorError::Dimension { expected: a.len(), found: z.len() });
    }
    let norm = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let scale = lambda.iter().flat_map(|l| l.approx()).fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    if norm <= 1e-12 * scale {
        return Err(DivisorError::Degenerate);
    }
    let w: Complex64 = z.iter().zip(&a).map(|(x, y)| x * y).sum::<Complex64>() + f.shift;
    let gamma = Complex64::new(w.re.round(), w.im.round());
    Ok((w - gamma).norm() / norm)
}

/// Distance from `z` to the support of a spec (nearest factor); `None` when
/// the function has a trigonometric part.
pub fn spec_support_distance(spec: &PeriodicFunctionSpec, z: &[Complex64]) -> Result<Option<f64>, DivisorError> {
    if spec.trig.is_some() {
        return Ok(None);
    }
    let mut best = f64::INFINITY;
    for f in &spec.factors {
        best = best.min(support_distance(f, &spec.lambda, z)?);
    }
    Ok(Some(best))
}

/// Zeros of a factor for `m = 1` inside the disc `|z - center| <= radius`,
/// in lexicographic order of the lattice index.
pub fn factor_zeros_1d(
    f: &SigmaFactor,
    lambda: &[Frequency],
    center: Complex64,
    radius: f64,
) -> Result<Vec<Complex64>, DivisorError> {
    let a = factor_functional(f, lambda)?;
    if a.len() != 1 {
        return Err(DivisorError::Dimension { expected: 1, found: a.len() });
    }
    let a = a[0];
    if a.norm() == 0.0 {
        return Err(DivisorError::Degenerate);
    }
    // z = (gamma - shift) / a; |gamma - (a center + shift)| <= |a| radius
    let mid = a * center + f.shift;
    let reach = a.norm() * radius;
    let mut out = Vec::new();
    let (lo_m, hi_m) = ((mid.re - reach).floor() as i64, (mid.re + reach).ceil() as i64);
    let (lo_n, hi_n) = ((mid.im - reach).floor() as i64, (mid.im + reach).ceil() as i64);
    for m in lo_m..=hi_m {
        for n in lo_n..=hi_n {
            let z = (Complex64::new(m as f64, n as f64) - f.shift) / a;
            if (z - center).norm() <= radius {
                out.push(z);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactlin::declare_generators;
    use crate::sigma::sigma_init;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn setup() -> (GeneratorContext, SigmaContext) {
        (declare_generators(&["one", "sqrt2"], &[1.0, std::f64::consts::SQRT_2]).unwrap(), sigma_init(1e-12).unwrap())
    }

    /// Rows `e_1, sqrt2 e_1 + e_2, ...` in R^m.
    fn lambda(ctx: &GeneratorContext, n: usize, m: usize) -> Vec<Frequency> {
        (0..n)
            .map(|p| {
                let comps = (0..m)
                    .map(|j| {
                        let mut s = if j == p % m { ctx.multiple("one", 1, 1).unwrap() } else { ctx.zero_scalar() };
                        if p >= m && j == (p + 1) % m {
                            s = s.add(ctx, &ctx.multiple("sqrt2", 1, 1).unwrap());
                        }
                        s
                    })
                    .collect();
                ctx.frequency(comps)
            })
            .collect()
    }

    #[test]
    fn factor_classes() {
        let (ctx, _) = setup();
        let l = lambda(&ctx, 3, 2);
        let basic = class_of_sigma_factor(&SigmaFactor::basic(3, 0, 1), &l).unwrap();
        assert_eq!(basic, chern::wedge(&l[0], &l[1]).unwrap());
        let diag = SigmaFactor::new(vec![1, 2, 0], vec![1, 2, 0], c(0.3, 0.0));
        assert!(class_of_sigma_factor(&diag, &l).unwrap().is_zero());
        let mixed = SigmaFactor::new(vec![1, 0, 1], vec![0, 1, 0], c(0.0, 0.0));
        let expect = chern::add(&chern::wedge(&l[0], &l[1]).unwrap(), &chern::wedge(&l[2], &l[1]).unwrap()).unwrap();
        assert_eq!(class_of_sigma_factor(&mixed, &l).unwrap(), expect);
    }

    #[test]
    fn spec_validation() {
        let (ctx, _) = setup();
        let l = lambda(&ctx, 2, 1);
        assert_eq!(PeriodicFunctionSpec::new(l.clone(), vec![], None), Err(DivisorError::EmptyComponent));
        let bad = SigmaFactor::new(vec![0, 0], vec![0, 0], c(0.0, 0.0));
        assert_eq!(PeriodicFunctionSpec::new(l.clone(), vec![bad], None), Err(DivisorError::BadFactor(0)));
        let dep = vec![l[0].clone(), l[0].scale_int(2)];
        assert_eq!(
            PeriodicFunctionSpec::new(dep, vec![SigmaFactor::basic(2, 0, 1)], None),
            Err(DivisorError::DependentLambda)
        );
        let zero = TrigPolyW::new(2, vec![]).unwrap();
        assert_eq!(PeriodicFunctionSpec::new(l, vec![], Some(zero)), Err(DivisorError::BadTrig));
    }

    #[test]
    fn winding_matches_algebra_for_model_factors() {
        let (ctx, sigma) = setup();
        let opts = EntryOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l = lambda(&ctx, 2, 2);
        let spec = PeriodicFunctionSpec::new(l.clone(), vec![SigmaFactor::basic(2, 0, 1)], None).unwrap();
        let w = class_via_winding(&spec, &sigma, &opts, &mut rng).unwrap();
        assert_eq!(w.matrix, vec![vec![0, 1], vec![-1, 0]]);
        assert_eq!(w.class, class_of_sigma_factor(&spec.factors()[0], &l).unwrap());

        let two = PeriodicFunctionSpec::new(
            l.clone(),
            vec![SigmaFactor::basic(2, 0, 1), SigmaFactor::new(vec![2, 1], vec![0, 1], c(0.1, 0.2))],
            None,
        )
        .unwrap();
        let w2 = class_via_winding(&two, &sigma, &opts, &mut rng).unwrap();
        let alg = class_algebraic(&two, &opts, &mut rng).unwrap();
        assert_eq!(w2.class, alg);
        assert_eq!(w2.matrix[0][1], 3);
    }

    #[test]
    fn zero_free_trig_part() {
        let (ctx, sigma) = setup();
        let l = lambda(&ctx, 2, 1);
        let t = TrigPolyW::new(2, vec![(c(1.0, 0.0), vec![0, 0]), (c(0.5, 0.0), vec![1, 0])]).unwrap();
        let spec = PeriodicFunctionSpec::new(l, vec![], Some(t)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = class_via_winding(&spec, &sigma, &EntryOptions::default(), &mut rng).unwrap();
        assert!(w.class.is_zero());
    }

    #[test]
    fn trig_part_with_zeros_contributes_by_winding() {
        let (ctx, sigma) = setup();
        let l = lambda(&ctx, 2, 2);
        // 1 + 2 e^{2 pi i w^1} vanishes on hyperplanes in w^1 alone
        let t = TrigPolyW::new(2, vec![(c(1.0, 0.0), vec![0, 0]), (c(2.0, 0.0), vec![1, 0])]).unwrap();
        let spec = PeriodicFunctionSpec::new(l.clone(), vec![SigmaFactor::basic(2, 1, 0)], Some(t)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let opts = EntryOptions::default();
        let alg = class_algebraic(&spec, &opts, &mut rng).unwrap();
        let win = class_via_winding(&spec, &sigma, &opts, &mut rng).unwrap().class;
        assert_eq!(alg, win);
        assert_eq!(alg, chern::wedge(&l[1], &l[0]).unwrap());
    }

    #[test]
    fn divisor_sums_and_weights() {
        let (ctx, sigma) = setup();
        let opts = EntryOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let empty = DivisorSpec::new(&ctx, 2, vec![]).unwrap();
        assert!(divisor_class(&empty, Method::Algebraic, &sigma, &opts, &mut rng).unwrap().is_zero());
        let l = lambda(&ctx, 2, 2);
        let spec = PeriodicFunctionSpec::new(l, vec![SigmaFactor::basic(2, 0, 1)], None).unwrap();
        let d = DivisorSpec::single(spec.clone());
        let cls = divisor_class(&d, Method::Algebraic, &sigma, &opts, &mut rng).unwrap();
        let neg = DivisorSpec::new(&ctx, 2, vec![DivisorComponent { spec, weight: -1 }]).unwrap();
        assert_eq!(divisor_class(&neg, Method::Algebraic, &sigma, &opts, &mut rng).unwrap(), chern::negate(&cls));
        let both = d.plus(&d.mirrored()).unwrap();
        assert!(divisor_class(&both, Method::Winding, &sigma, &opts, &mut rng).unwrap().is_zero());
        let mirrored = divisor_class(&d.mirrored(), Method::Algebraic, &sigma, &opts, &mut rng).unwrap();
        assert_eq!(mirrored, chern::mirrored_class(&cls));
        assert_eq!(
            DivisorSpec::new(&ctx, 2, vec![DivisorComponent { spec: d.components()[0].spec.clone(), weight: 0 }]),
            Err(DivisorError::ZeroWeight)
        );
    }

    #[test]
    fn realizability_decisions() {
        let (ctx, sigma) = setup();
        let opts = DecideOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let l = lambda(&ctx, 2, 2);
        // phi(k w^1 + i w^1) depends on one variable only
        let one_var = SigmaFactor::new(vec![3, 0], vec![1, 0], c(0.0, 0.0));
        let d = DivisorSpec::single(PeriodicFunctionSpec::new(l.clone(), vec![one_var], None).unwrap());
        assert!(decide_realizable(&d, &sigma, &opts, &mut rng).unwrap().realizable);

        let single = DivisorSpec::single(PeriodicFunctionSpec::new(l.clone(), vec![SigmaFactor::basic(2, 0, 1)], None).unwrap());
        let cert = decide_realizable(&single, &sigma, &opts, &mut rng).unwrap();
        assert!(!cert.realizable);
        assert_eq!(cert.completion, vec![WedgePair { lambda: l[1].clone(), mu: l[0].clone(), multiplicity: 1.into() }]);
        assert!(cert.components[0].winding.is_some());

        let pair = DivisorSpec::single(
            PeriodicFunctionSpec::new(l, vec![SigmaFactor::basic(2, 0, 1), SigmaFactor::basic(2, 1, 0)], None).unwrap(),
        );
        assert!(decide_realizable(&pair, &sigma, &opts, &mut rng).unwrap().realizable);
    }

    #[test]
    fn rebasing_lambda_keeps_the_class() {
        let (ctx, sigma) = setup();
        let l = lambda(&ctx, 2, 2);
        // U = [[2, 1], [1, 1]], rows of U Lambda; factor vectors transform by U^{-T}
        let ul = vec![l[0].scale_int(2).add(&l[1]).unwrap(), l[0].add(&l[1]).unwrap()];
        let f = SigmaFactor::new(vec![1, 0], vec![0, 1], c(0.0, 0.0));
        // U^{-T} = [[1, -1], [-1, 2]]
        let g = SigmaFactor::new(vec![1, -1], vec![-1, 2], c(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let opts = DecideOptions::default();
        let a = decide_realizable(&DivisorSpec::single(PeriodicFunctionSpec::new(l, vec![f], None).unwrap()), &sigma, &opts, &mut rng)
            .unwrap();
        let b = decide_realizable(&DivisorSpec::single(PeriodicFunctionSpec::new(ul, vec![g], None).unwrap()), &sigma, &opts, &mut rng)
            .unwrap();
        assert_eq!(a.realizable, b.realizable);
        assert_eq!(a.total_class, b.total_class);
    }

    #[test]
    fn distances() {
        let (ctx, _) = setup();
        let l = vec![ctx.integer_frequency("one", &[1]).unwrap()];
        let f = SigmaFactor::new(vec![1], vec![0], c(0.0, 0.0));
        assert!((support_distance(&f, &l, &[c(0.5, 0.0)]).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(support_distance(&f, &l, &[c(2.0, -3.0)]).unwrap(), 0.0);
        let zs = factor_zeros_1d(&f, &l, c(0.0, 0.0), 1.0).unwrap();
        assert_eq!(zs.len(), 5);
    }

    #[test]
    fn distance_matches_brute_force() {
        let (ctx, _) = setup();
        let l = lambda(&ctx, 2, 2);
        let f = SigmaFactor::new(vec![1, 0], vec![1, -1], c(0.21, -0.4));
        let a = factor_functional(&f, &l).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let z: Vec<Complex64> = (0..2).map(|_| c(rng.gen_range(-2.0..2.0), rng.gen_range(-1.0..1.0))).collect();
            let got = support_distance(&f, &l, &z).unwrap();
            let w: Complex64 = z.iter().zip(&a).map(|(x, y)| x * y).sum::<Complex64>() + f.shift;
            // along a unit direction d the hyperplane for gamma is reached at
            // |gamma - w| / |<d, a>|; minimize over gamma and over directions
            let reach = |d: &[Complex64]| -> f64 {
                let norm = d.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
                let dl: Complex64 = d.iter().zip(&a).map(|(x, y)| x * y).sum::<Complex64>() / norm;
                let mut best = f64::INFINITY;
                for m in -10..=10 {
                    for n in -10..=10 {
                        best = best.min((c(m as f64, n as f64) - w).norm() / dl.norm());
                    }
                }
                best
            };
            let mut dir: Vec<Complex64> = (0..2).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
            let mut best = reach(&dir);
            for _ in 0..4000 {
                let cand: Vec<Complex64> = (0..2).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                let v = reach(&cand);
                if v < best {
                    best = v;
                    dir = cand;
                }
            }
            let mut step = 0.1;
            while step > 1e-9 {
                let cand: Vec<Complex64> =
                    dir.iter().map(|x| x + c(rng.gen_range(-step..step), rng.gen_range(-step..step))).collect();
                let v = reach(&cand);
                if v < best {
                    best = v;
                    dir = cand;
                } else {
                    step *= 0.97;
                }
            }
            assert!((got - best).abs() < 1e-8 * best.max(1.0), "{got} vs {best}");
        }
    }
}
