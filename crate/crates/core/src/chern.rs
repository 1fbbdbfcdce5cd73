//! Chern classes as skew-symmetric integer matrices.
//!
//! A class is stored as a Z-basis `b_1..b_n` of a frequency group together
//! with a skew matrix `M`; it stands for `sum_{p<q} M[p][q] * b_p ^ b_q`,
//! where `lambda ^ mu` is the class of the divisor of
//! `phi(<z,lambda> + i<z,mu>)`. The wedge is antisymmetric, additive in each
//! slot, and vanishes on Z-dependent pairs, so a class is an element of the
//! second exterior power of the frequency group. Two classes are compared by
//! re-expressing both in the canonical basis of their joint group.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use thiserror::Error;

use crate::exactlin::{
    group_basis, real_parallel, z_dependent, ExactError, Frequency, FrequencyGroup, GeneratorContext,
    Proportionality,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChernError {
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("matrix is not skew-symmetric at ({0}, {1})")]
    NotSkew(usize, usize),
    #[error("matrix shape does not match a basis of length {0}")]
    Shape(usize),
    #[error("class basis is Z-dependent")]
    DependentBasis,
    #[error("entry ({row}, {col}) = {value} is not an integer")]
    NonIntegral { row: usize, col: usize, value: String },
    #[error("pairwise R-independent completion needs dimension m > 1")]
    DimensionTooSmall,
    #[error("no auxiliary frequency found after {0} attempts")]
    AuxiliarySearchExhausted(usize),
    #[error("completion does not cancel the class")]
    CompletionMismatch,
}

pub type Matrix = Vec<Vec<BigInt>>;

#[derive(Debug, Clone)]
pub struct ChernClass {
    ctx: GeneratorContext,
    dim: usize,
    basis: Vec<Frequency>,
    matrix: Matrix,
}

/// `multiplicity * (lambda ^ mu)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WedgePair {
    pub lambda: Frequency,
    pub mu: Frequency,
    pub multiplicity: BigInt,
}

fn zero_matrix(n: usize) -> Matrix {
    vec![vec![BigInt::zero(); n]; n]
}

/// `C^T M C` for `C` of shape `n x r`.
fn congruence(m: &Matrix, c: &[Vec<BigInt>], r: usize) -> Matrix {
    let n = m.len();
    let mut mc = vec![vec![BigInt::zero(); r]; n];
    for i in 0..n {
        for k in 0..n {
            if m[i][k].is_zero() {
                continue;
            }
            for j in 0..r {
                if !c[k][j].is_zero() {
                    mc[i][j] += &m[i][k] * &c[k][j];
                }
            }
        }
    }
    let mut out = zero_matrix(r);
    for i in 0..n {
        for a in 0..r {
            if c[i][a].is_zero() {
                continue;
            }
            for b in 0..r {
                if !mc[i][b].is_zero() {
                    out[a][b] += &c[i][a] * &mc[i][b];
                }
            }
        }
    }
    out
}

impl ChernClass {
    pub fn zero(ctx: &GeneratorContext, dim: usize) -> ChernClass {
        ChernClass { ctx: ctx.clone(), dim, basis: Vec::new(), matrix: Vec::new() }
    }

    /// Class `sum_{p<q} matrix[p][q] basis_p ^ basis_q`, brought to canonical
    /// form. The basis must be Z-independent and the matrix skew.
    pub fn from_parts(
        ctx: &GeneratorContext,
        dim: usize,
        basis: Vec<Frequency>,
        matrix: Matrix,
    ) -> Result<ChernClass, ChernError> {
        let n = basis.len();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(ChernError::Shape(n));
        }
        for i in 0..n {
            for j in 0..n {
                if matrix[i][j] != -&matrix[j][i] {
                    return Err(ChernError::NotSkew(i, j));
                }
            }
        }
        for b in &basis {
            if b.context() != ctx {
                return Err(ExactError::ContextMismatch.into());
            }
            if b.dim() != dim {
                return Err(ExactError::DimensionMismatch { expected: dim, found: b.dim() }.into());
            }
        }
        if matrix.iter().flatten().all(Zero::is_zero) {
            return Ok(ChernClass::zero(ctx, dim));
        }
        if z_dependent(&basis)?.is_some() {
            return Err(ChernError::DependentBasis);
        }
        let group = group_basis(&basis)?;
        let m = congruence(&matrix, &group.coord, group.rank());
        Ok(ChernClass { ctx: ctx.clone(), dim, basis: group.basis, matrix: m })
    }

    pub fn context(&self) -> &GeneratorContext {
        &self.ctx
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn basis(&self) -> &[Frequency] {
        &self.basis
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    /// The matrix of this class in `group.basis`. Every basis vector of the
    /// class must lie in the group.
    pub fn matrix_in(&self, group: &FrequencyGroup) -> Result<Matrix, ChernError> {
        let r = group.rank();
        if self.basis.is_empty() {
            return Ok(zero_matrix(r));
        }
        let mut c = Vec::with_capacity(self.basis.len());
        for b in &self.basis {
            let row = crate::exactlin::express(b, group)?
                .ok_or_else(|| ExactError::Verification(format!("{b} is outside the target group")))?;
            c.push(row);
        }
        Ok(congruence(&self.matrix, &c, r))
    }

    fn check_compatible(&self, other: &ChernClass) -> Result<(), ChernError> {
        if self.ctx != other.ctx {
            return Err(ExactError::ContextMismatch.into());
        }
        if self.dim != other.dim {
            return Err(ExactError::DimensionMismatch { expected: self.dim, found: other.dim }.into());
        }
        Ok(())
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().flatten().all(Zero::is_zero)
    }

    /// Exact equality of classes (not of representations).
    pub fn same_class(&self, other: &ChernClass) -> Result<bool, ChernError> {
        Ok(add(self, &negate(other))?.is_zero())
    }

    pub fn scale(&self, k: &BigInt) -> ChernClass {
        if k.is_zero() {
            return ChernClass::zero(&self.ctx, self.dim);
        }
        let matrix = self.matrix.iter().map(|r| r.iter().map(|x| x * k).collect()).collect();
        ChernClass { matrix, ..self.clone() }
    }

    /// Rational multiple; fails unless every entry stays integral.
    pub fn scale_rational(&self, k: &BigRational) -> Result<ChernClass, ChernError> {
        let mut matrix = zero_matrix(self.basis.len());
        for (i, row) in self.matrix.iter().enumerate() {
            for (j, x) in row.iter().enumerate() {
                let v = BigRational::from_integer(x.clone()) * k;
                if !v.is_integer() {
                    return Err(ChernError::NonIntegral { row: i, col: j, value: v.to_string() });
                }
                matrix[i][j] = v.to_integer();
            }
        }
        ChernClass::from_parts(&self.ctx, self.dim, self.basis.clone(), matrix)
    }
}

impl PartialEq for ChernClass {
    fn eq(&self, other: &Self) -> bool {
        self.same_class(other).unwrap_or(false)
    }
}

/// `lambda ^ mu`: zero for Z-dependent pairs, otherwise the 2x2 minors of the
/// coordinates of `lambda` and `mu` in the canonical basis of the group they
/// generate.
pub fn wedge(lambda: &Frequency, mu: &Frequency) -> Result<ChernClass, ChernError> {
    let pair = [lambda.clone(), mu.clone()];
    if z_dependent(&pair)?.is_some() {
        return Ok(ChernClass::zero(lambda.context(), lambda.dim()));
    }
    let group = group_basis(&pair)?;
    let (c, d) = (&group.coord[0], &group.coord[1]);
    let n = group.rank();
    let mut m = zero_matrix(n);
    for k in 0..n {
        for l in 0..n {
            m[k][l] = &c[k] * &d[l] - &c[l] * &d[k];
        }
    }
    Ok(ChernClass { ctx: lambda.context().clone(), dim: lambda.dim(), basis: group.basis, matrix: m })
}

pub fn add(c1: &ChernClass, c2: &ChernClass) -> Result<ChernClass, ChernError> {
    c1.check_compatible(c2)?;
    if c2.basis.is_empty() {
        return Ok(c1.clone());
    }
    if c1.basis.is_empty() {
        return Ok(c2.clone());
    }
    let joint: Vec<Frequency> = c1.basis.iter().chain(&c2.basis).cloned().collect();
    let group = group_basis(&joint)?;
    let m1 = c1.matrix_in(&group)?;
    let m2 = c2.matrix_in(&group)?;
    let sum: Matrix = m1.iter().zip(&m2).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect();
    if sum.iter().flatten().all(Zero::is_zero) {
        return Ok(ChernClass::zero(&c1.ctx, c1.dim));
    }
    Ok(ChernClass { ctx: c1.ctx.clone(), dim: c1.dim, basis: group.basis, matrix: sum })
}

pub fn negate(c: &ChernClass) -> ChernClass {
    c.scale(&-BigInt::one())
}

/// The class of the mirrored divisor `d(2 y0 - y)`, which is `-c`.
pub fn mirrored_class(c: &ChernClass) -> ChernClass {
    negate(c)
}

pub fn is_zero(c: &ChernClass) -> bool {
    c.is_zero()
}

/// `{(b_p, b_q, m_pq) : p < q, m_pq != 0}` in the canonical basis.
pub fn decompose(c: &ChernClass) -> Vec<WedgePair> {
    let n = c.basis.len();
    let mut out = Vec::new();
    for p in 0..n {
        for q in p + 1..n {
            if !c.matrix[p][q].is_zero() {
                out.push(WedgePair {
                    lambda: c.basis[p].clone(),
                    mu: c.basis[q].clone(),
                    multiplicity: c.matrix[p][q].clone(),
                });
            }
        }
    }
    out
}

/// `sum multiplicity * (lambda ^ mu)`.
pub fn recombine(ctx: &GeneratorContext, dim: usize, pairs: &[WedgePair]) -> Result<ChernClass, ChernError> {
    let mut acc = ChernClass::zero(ctx, dim);
    for p in pairs {
        acc = add(&acc, &wedge(&p.lambda, &p.mu)?.scale(&p.multiplicity))?;
    }
    Ok(acc)
}

pub const AUX_MAX_DENOMINATOR: i64 = 16;
pub const AUX_MAX_NUMERATOR: i64 = 4;
pub const AUX_MAX_ATTEMPTS: usize = 1000;

/// Pairs whose wedges cancel a class, with the evidence behind them.
#[derive(Debug, Clone)]
pub struct Completion {
    pub pairs: Vec<WedgePair>,
    /// Auxiliary frequency used to re-basis, when one was needed.
    pub auxiliary: Option<Frequency>,
    /// R-proportionality test of each returned pair, in order.
    pub independence: Vec<Proportionality>,
    /// `true` when some independence verdict came from the floating test.
    pub numeric_independence: bool,
    pub attempts: usize,
}

fn pair_tests(pairs: &[WedgePair]) -> Result<Vec<Proportionality>, ChernError> {
    pairs.iter().map(|p| real_parallel(&p.lambda, &p.mu).map_err(ChernError::from)).collect()
}

fn random_frequency<R: Rng + ?Sized>(ctx: &GeneratorContext, dim: usize, rng: &mut R) -> Frequency {
    let g = ctx.len();
    let flat: Vec<BigRational> = (0..dim * g)
        .map(|_| {
            let num = rng.gen_range(-AUX_MAX_NUMERATOR..=AUX_MAX_NUMERATOR);
            let den = rng.gen_range(1..=AUX_MAX_DENOMINATOR);
            BigRational::new(num.into(), den.into())
        })
        .collect();
    Frequency::from_flat(ctx, dim, &flat)
}

/// Pairs `(lambda_s, mu_s, k_s)` with `c + sum k_s lambda_s ^ mu_s = 0`.
///
/// With `want_pairwise_r_independent` every returned pair is linearly
/// independent over R, so each completing divisor is periodic. The direct
/// decomposition is used when it already has that property; otherwise an
/// auxiliary `lambda_0` is drawn and the class is rewritten over
/// `lambda_0, b_1 - lambda_0, ..., b_n - lambda_0`.
pub fn complete<R: Rng + ?Sized>(
    c: &ChernClass,
    want_pairwise_r_independent: bool,
    rng: &mut R,
) -> Result<Completion, ChernError> {
    if want_pairwise_r_independent && c.dim <= 1 {
        return Err(ChernError::DimensionTooSmall);
    }
    let direct: Vec<WedgePair> = decompose(c)
        .into_iter()
        .map(|p| WedgePair { lambda: p.mu, mu: p.lambda, multiplicity: p.multiplicity })
        .collect();
    let direct_tests = pair_tests(&direct)?;
    if !want_pairwise_r_independent || direct_tests.iter().all(|t| !t.parallel) {
        return finish(c, direct, None, direct_tests, 0);
    }

    let n = c.basis.len();
    for attempt in 1..=AUX_MAX_ATTEMPTS {
        let aux = random_frequency(&c.ctx, c.dim, rng);
        if aux.is_zero() {
            continue;
        }
        let mut family = vec![aux.clone()];
        for b in &c.basis {
            family.push(b.sub(&aux)?);
        }
        let mut ok = true;
        'scan: for i in 0..family.len() {
            for j in i + 1..family.len() {
                if real_parallel(&family[i], &family[j])?.parallel {
                    ok = false;
                    break 'scan;
                }
            }
        }
        if !ok {
            continue;
        }
        // b_p ^ b_q = a_p ^ a_q + a_p ^ a_0 + a_0 ^ a_q with a_0 = aux.
        let mut coef = zero_matrix(n + 1);
        for p in 0..n {
            for q in p + 1..n {
                let m = &c.matrix[p][q];
                if m.is_zero() {
                    continue;
                }
                coef[p + 1][q + 1] += m;
                coef[0][p + 1] -= m;
                coef[0][q + 1] += m;
            }
        }
        let mut pairs = Vec::new();
        for i in 0..=n {
            for j in i + 1..=n {
                if !coef[i][j].is_zero() {
                    pairs.push(WedgePair {
                        lambda: family[j].clone(),
                        mu: family[i].clone(),
                        multiplicity: coef[i][j].clone(),
                    });
                }
            }
        }
        let tests = pair_tests(&pairs)?;
        return finish(c, pairs, Some(aux), tests, attempt);
    }
    Err(ChernError::AuxiliarySearchExhausted(AUX_MAX_ATTEMPTS))
}

fn finish(
    c: &ChernClass,
    pairs: Vec<WedgePair>,
    auxiliary: Option<Frequency>,
    independence: Vec<Proportionality>,
    attempts: usize,
) -> Result<Completion, ChernError> {
    let total = add(c, &recombine(&c.ctx, c.dim, &pairs)?)?;
    if !total.is_zero() {
        return Err(ChernError::CompletionMismatch);
    }
    let numeric_independence = independence.iter().any(|t| !t.exact);
    Ok(Completion { pairs, auxiliary, independence, numeric_independence, attempts })
}
