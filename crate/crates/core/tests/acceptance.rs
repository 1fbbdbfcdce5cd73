//! Acceptance criteria 1-10. One line per criterion; nonzero exit on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use apdiv::apmap::{self, MapDivisorData};
use apdiv::chern::{self, ChernClass};
use apdiv::contour::{chern_entry, local_poly, zero_count, EntryOptions};
use apdiv::dbar::{self, StripProblem, TestInput, VerifyOptions};
use apdiv::divisor::{
    class_of_sigma_factor, class_via_winding, default_base_point, DecideOptions, DivisorSpec, PeriodicFunctionSpec,
    SigmaFactor,
};
use apdiv::exactlin::{declare_generators, group_basis, real_parallel, z_dependent, Frequency, GeneratorContext};
use apdiv::expsum::{bohr_mean, ExpSum};
use apdiv::sigma::{sigma_init, SigmaContext};
use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SIGMA_ACCURACY: f64 = 1e-12;
const SEED: u64 = 20_240_601;

const LIMIT_1: Duration = Duration::from_secs(10);
const LIMIT_2: Duration = Duration::from_secs(120);
const LIMIT_3: Duration = Duration::from_secs(600);
const LIMIT_8: Duration = Duration::from_secs(900);

const RANDOM_SPECS_3: usize = 20;
const RANDOM_CLASSES_4: usize = 50;
const RANDOM_SPECS_5: usize = 10;
const ROOT_TOL_6: f64 = 1e-8;
const HALVING_BAND_7: (f64, f64) = (2.0 / 1.3, 2.0 / 0.7);
const ABS_TOL_7: f64 = 1e-2;
const QUADRATURE_TOL_7: f64 = 1e-9;
const RANDOM_SETS_10: usize = 100;

type Outcome = Result<String, String>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn gens() -> GeneratorContext {
    declare_generators(&["one", "sqrt2", "sqrt3"], &[1.0, std::f64::consts::SQRT_2, 3f64.sqrt()]).unwrap()
}

/// Standard basis of R^n over the generator `one`.
fn unit_rows(ctx: &GeneratorContext, n: usize) -> Vec<Frequency> {
    (0..n)
        .map(|p| {
            let mut e = vec![0; n];
            e[p] = 1;
            ctx.integer_frequency("one", &e).unwrap()
        })
        .collect()
}

/// `n` random Z-independent rows in R^m with small coefficients over all generators.
fn random_rows(ctx: &GeneratorContext, n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<Frequency> {
    loop {
        let rows: Vec<Frequency> = (0..n)
            .map(|_| {
                let flat: Vec<BigRational> = (0..m * ctx.len())
                    .map(|_| BigRational::new(rng.gen_range(-3..=3).into(), rng.gen_range(1..=2).into()))
                    .collect();
                Frequency::from_flat(ctx, m, &flat)
            })
            .collect();
        if z_dependent(&rows).unwrap().is_none() {
            return rows;
        }
    }
}

fn winding_matrix(spec: &PeriodicFunctionSpec, sigma: &SigmaContext, rng: &mut ChaCha8Rng) -> Result<Vec<Vec<i64>>, String> {
    Ok(class_via_winding(spec, sigma, &EntryOptions::default(), rng).map_err(err)?.matrix)
}

fn factor(u: &[i64], v: &[i64]) -> SigmaFactor {
    SigmaFactor::new(u.to_vec(), v.to_vec(), c(0.0, 0.0))
}

// 1 ------------------------------------------------------------------------

fn criterion_1(sigma: &SigmaContext) -> Outcome {
    let ctx = gens();
    let spec = PeriodicFunctionSpec::new(unit_rows(&ctx, 2), vec![SigmaFactor::basic(2, 0, 1)], None).map_err(err)?;
    let f = |w: &[Complex64]| spec.eval_w(sigma, w);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let e = chern_entry(&f, 0, 1, &default_base_point(2), &EntryOptions::default(), &mut rng).map_err(err)?;
    ensure(e.value == 1, || format!("entry {} (raw {})", e.value, e.winding.raw))?;
    Ok(format!("entry = 1, raw {:.3e} off, {} samples", (e.winding.raw - 1.0).abs(), e.winding.samples))
}

// 2 ------------------------------------------------------------------------

fn criterion_2(sigma: &SigmaContext) -> Outcome {
    let ctx = gens();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let two = unit_rows(&ctx, 2);
    let three = unit_rows(&ctx, 3);
    let spec = |rows: &[Frequency], f: SigmaFactor| PeriodicFunctionSpec::new(rows.to_vec(), vec![f], None).map_err(err);

    // swap
    let base = spec(&two, factor(&[1, 0], &[0, 1]))?;
    let f = |w: &[Complex64]| base.eval_w(sigma, w);
    let swapped = chern_entry(&f, 1, 0, &default_base_point(2), &EntryOptions::default(), &mut rng).map_err(err)?;
    ensure(swapped.value == -1, || format!("swap gave {}", swapped.value))?;

    // multiples in the real slot
    for k in [2, 3] {
        let m = winding_matrix(&spec(&two, factor(&[k, 0], &[0, 1]))?, sigma, &mut rng)?;
        ensure(m[0][1] == k, || format!("phi({k} w1 + i w2) gave {}", m[0][1]))?;
    }

    // phi(w1 + w3 + i w2): entries (1,2), (3,2), (1,3)
    let m = winding_matrix(&spec(&three, factor(&[1, 0, 1], &[0, 1, 0]))?, sigma, &mut rng)?;
    let got = (m[0][1], m[2][1], m[0][2]);
    ensure(got == (1, 1, 0), || format!("phi(w1 + w3 + i w2) gave {got:?}"))?;

    // the same row in both slots
    let m = winding_matrix(&spec(&two, factor(&[2, 0], &[1, 0]))?, sigma, &mut rng)?;
    ensure(m.iter().flatten().all(|x| *x == 0), || format!("phi(2 w1 + i w1) gave {m:?}"))?;

    // adding the imaginary row to the real one changes nothing
    let a = winding_matrix(&spec(&two, factor(&[1, 1], &[0, 1]))?, sigma, &mut rng)?;
    let b = winding_matrix(&spec(&two, factor(&[1, 0], &[0, 1]))?, sigma, &mut rng)?;
    ensure(a == b, || format!("phi(w1 + w2 + i w2) gave {a:?}, phi(w1 + i w2) gave {b:?}"))?;
    Ok("swap -1, k in {2,3}, (1,1,0), zero, equal".into())
}

// 3 ------------------------------------------------------------------------

fn random_factor(n: usize, rng: &mut ChaCha8Rng) -> SigmaFactor {
    loop {
        let u: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
        let v: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=3)).collect();
        // u = v = 0 is not a factor; u, v parallel gives a zero class and is kept
        if u.iter().chain(&v).any(|x| *x != 0) {
            return SigmaFactor::new(u, v, c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)));
        }
    }
}

fn criterion_3(sigma: &SigmaContext) -> Outcome {
    let ctx = gens();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 3);
    let mut nonzero = 0;
    for i in 0..RANDOM_SPECS_3 {
        let n = 2 + i % 3;
        let rows = random_rows(&ctx, n, 2, &mut rng);
        let f = random_factor(n, &mut rng);
        let spec = PeriodicFunctionSpec::new(rows.clone(), vec![f.clone()], None).map_err(err)?;
        let algebra = class_of_sigma_factor(&f, &rows).map_err(err)?;
        let analysis = class_via_winding(&spec, sigma, &EntryOptions::default(), &mut rng).map_err(err)?;
        ensure(analysis.class.same_class(&algebra).map_err(err)?, || {
            format!("spec {i} (u {:?}, v {:?}): winding matrix {:?}", f.u, f.v, analysis.matrix)
        })?;
        nonzero += usize::from(!algebra.is_zero());
    }
    Ok(format!("{RANDOM_SPECS_3} specs, N in 2..=4, {nonzero} with nonzero class"))
}

// 4 ------------------------------------------------------------------------

/// `sum k (flat lambda ^ flat mu)` as an antisymmetric rational matrix, an
/// embedding of the exterior square of the frequency group.
fn flat_two_form(pairs: &[(Frequency, Frequency, BigInt)], size: usize) -> Vec<Vec<BigRational>> {
    let mut w = vec![vec![BigRational::zero(); size]; size];
    for (l, m, k) in pairs {
        let (a, b) = (l.flat(), m.flat());
        let k = BigRational::from_integer(k.clone());
        for i in 0..size {
            for j in 0..size {
                w[i][j] += &k * (&a[i] * &b[j] - &a[j] * &b[i]);
            }
        }
    }
    w
}

fn criterion_4() -> Outcome {
    let ctx = gens();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 4);
    let mut pairs_seen = 0;
    for i in 0..RANDOM_CLASSES_4 {
        let n = 2 + i % 4;
        let rows = random_rows(&ctx, n, 2, &mut rng);
        let mut m = vec![vec![BigInt::zero(); n]; n];
        for p in 0..n {
            for q in p + 1..n {
                let x: i64 = rng.gen_range(-10..=10);
                m[p][q] = x.into();
                m[q][p] = (-x).into();
            }
        }
        let class = ChernClass::from_parts(&ctx, 2, rows.clone(), m.clone()).map_err(err)?;
        let completion = chern::complete(&class, true, &mut rng).map_err(err)?;
        let total = chern::add(&class, &chern::recombine(&ctx, 2, &completion.pairs).map_err(err)?).map_err(err)?;
        ensure(chern::is_zero(&total), || format!("matrix {i}: class + completion is not zero"))?;
        for (j, p) in completion.pairs.iter().enumerate() {
            let t = real_parallel(&p.lambda, &p.mu).map_err(err)?;
            ensure(!t.parallel, || format!("matrix {i}: pair {j} is R-parallel"))?;
        }
        // independent check on the flattened coordinates
        let mut all: Vec<(Frequency, Frequency, BigInt)> = Vec::new();
        for p in 0..n {
            for q in p + 1..n {
                all.push((rows[p].clone(), rows[q].clone(), m[p][q].clone()));
            }
        }
        all.extend(completion.pairs.iter().map(|p| (p.lambda.clone(), p.mu.clone(), p.multiplicity.clone())));
        let w = flat_two_form(&all, 2 * ctx.len());
        ensure(w.iter().flatten().all(Zero::is_zero), || format!("matrix {i}: flattened two-form does not vanish"))?;
        pairs_seen += completion.pairs.len();
    }
    Ok(format!("{RANDOM_CLASSES_4} classes, N in 2..=5, {pairs_seen} completing pairs, all R-independent"))
}

// 5 ------------------------------------------------------------------------

fn entry_matrix<F>(f: &F, n: usize, w0: &[Complex64], rng: &mut ChaCha8Rng) -> Result<Vec<Vec<i64>>, String>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    let mut m = vec![vec![0; n]; n];
    for p in 0..n {
        for q in p + 1..n {
            let e = chern_entry(f, p, q, w0, &EntryOptions::default(), rng).map_err(err)?;
            m[p][q] = e.value;
            m[q][p] = -e.value;
        }
    }
    Ok(m)
}

fn criterion_5(sigma: &SigmaContext) -> Outcome {
    let ctx = gens();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 5);
    let mut nonzero = 0;
    for i in 0..RANDOM_SPECS_5 {
        let n = 2 + i % 2;
        let factors = (0..1 + i % 2).map(|_| random_factor(n, &mut rng)).collect();
        let spec = PeriodicFunctionSpec::new(unit_rows(&ctx, n), factors, None).map_err(err)?;
        let f = |w: &[Complex64]| spec.eval_w(sigma, w);
        // F*(w) = conj F(conj w)
        let mirror = |w: &[Complex64]| {
            let cw: Vec<Complex64> = w.iter().map(|z| z.conj()).collect();
            spec.eval_w(sigma, &cw).conj()
        };
        // off the real subspace, so the two rectangles are not the same set
        let w0: Vec<Complex64> = (0..n).map(|k| c(-0.5, 0.13 + 0.07 * k as f64)).collect();
        let a = entry_matrix(&f, n, &w0, &mut rng)?;
        let b = entry_matrix(&mirror, n, &w0, &mut rng)?;
        let neg: Vec<Vec<i64>> = a.iter().map(|r| r.iter().map(|x| -x).collect()).collect();
        ensure(b == neg, || format!("spec {i}: {a:?} vs mirrored {b:?}"))?;
        nonzero += usize::from(a.iter().flatten().any(|x| *x != 0));
    }
    Ok(format!("{RANDOM_SPECS_5} specs, {nonzero} with nonzero matrix"))
}

// 6 ------------------------------------------------------------------------

fn criterion_6() -> Outcome {
    let (r1, r2) = (c(0.3, 0.0), c(0.1, 0.2));
    let f = move |z: Complex64| (z - r1) * (z - r2) * z.exp();
    let lp = local_poly(&f, c(0.0, 0.0), 1.0).map_err(err)?;
    ensure(lp.roots.len() == 2, || format!("found {} roots", lp.roots.len()))?;
    let worst = [r1, r2]
        .iter()
        .map(|r| lp.roots.iter().map(|x| (x - r).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    ensure(worst <= ROOT_TOL_6, || format!("root error {worst:.3e}"))?;
    let sin = |z: Complex64| (z * std::f64::consts::PI).sin();
    let count = zero_count(&sin, c(0.0, 0.0), 1.5).map_err(err)?;
    ensure(count == 3, || format!("zero count {count}"))?;
    Ok(format!("root error {worst:.2e}, sin count 3"))
}

// 7 ------------------------------------------------------------------------

/// Random 1-D sum of five terms with pairwise frequency gaps of at least 1/2.
fn gapped_sum(ctx: &GeneratorContext, rng: &mut ChaCha8Rng) -> ExpSum {
    loop {
        let freqs: Vec<Frequency> = (0..5)
            .map(|_| {
                ctx.frequency(vec![ctx
                    .scalar(&[
                        ("one", BigRational::new(rng.gen_range(-8..=8).into(), 2.into())),
                        ("sqrt2", BigRational::new(rng.gen_range(-2..=2).into(), 1.into())),
                    ])
                    .unwrap()])
            })
            .collect();
        let x: Vec<f64> = freqs.iter().map(|f| f.approx()[0]).collect();
        let gapped = (0..5).all(|i| (i + 1..5).all(|j| (x[i] - x[j]).abs() >= 0.5));
        if !gapped {
            continue;
        }
        let terms = freqs
            .into_iter()
            .map(|f| (Complex64::from_polar(rng.gen_range(0.2..1.0), rng.gen_range(0.0..std::f64::consts::TAU)), f))
            .collect();
        return ExpSum::new(ctx, 1, terms).unwrap();
    }
}

/// `(2T)^{-1} int_{-T}^{T} f(x) e^{-i lambda x} dx` in closed form.
fn exact_mean(f: &ExpSum, lambda: &Frequency, t: f64) -> Complex64 {
    let l = lambda.approx()[0];
    f.terms()
        .iter()
        .map(|(a, mu)| {
            let d = mu.approx()[0] - l;
            if mu == lambda {
                *a
            } else {
                a * ((d * t).sin() / (d * t))
            }
        })
        .sum()
}

/// RMS deviation from the true coefficient over `T' in [T, 1.25 T]`.
fn rms_error(f: &ExpSum, lambda: &Frequency, t: f64, samples: usize) -> Result<f64, String> {
    let target = f.coefficient(lambda);
    let mut acc = 0.0;
    for s in 0..samples {
        let tt = t * (1.0 + 0.25 * s as f64 / (samples - 1) as f64);
        let m = bohr_mean(f, lambda, &[0.0], tt).map_err(err)?;
        let exact = exact_mean(f, lambda, tt);
        ensure((m.value - exact).norm() <= QUADRATURE_TOL_7, || format!("quadrature error {:.2e} at T {tt}", (m.value - exact).norm()))?;
        acc += (m.value - target).norm_sqr();
    }
    Ok((acc / samples as f64).sqrt())
}

fn criterion_7() -> Outcome {
    let ctx = gens();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut ratios = Vec::new();
    let mut worst_800 = 0.0f64;
    for _ in 0..5 {
        let f = gapped_sum(&ctx, &mut rng);
        let lambda = f.terms()[rng.gen_range(0..5)].1.clone();
        let e200 = rms_error(&f, &lambda, 200.0, 64)?;
        let e400 = rms_error(&f, &lambda, 400.0, 64)?;
        let ratio = e200 / e400;
        ensure(ratio >= HALVING_BAND_7.0 && ratio <= HALVING_BAND_7.1, || format!("error ratio {ratio:.3}"))?;
        ratios.push(ratio);
        let m = bohr_mean(&f, &lambda, &[0.0], 800.0).map_err(err)?;
        let e800 = (m.value - f.coefficient(&lambda)).norm();
        ensure(e800 <= ABS_TOL_7, || format!("error {e800:.3e} at T = 800"))?;
        worst_800 = worst_800.max(e800);
    }
    let shown: Vec<String> = ratios.iter().map(|r| format!("{r:.2}")).collect();
    Ok(format!("RMS ratios 200/400 [{}], worst error at 800 {worst_800:.2e}", shown.join(", ")))
}

// 8 ------------------------------------------------------------------------

fn criterion_8() -> Outcome {
    let p = StripProblem::new(TestInput::Gaussian { scale: 1.0 }.build(), (-1.0, 1.0), (-0.5, 0.5)).map_err(err)?;
    let opts = VerifyOptions::default();
    let r = dbar::verify(&p, &opts).map_err(err)?;
    ensure(r.calibration_ok, || format!("spread {:.3e}", r.calibration.spread))?;
    ensure(r.residual_ok, || format!("relative residual {:.3e}", r.residual.relative))?;
    ensure(r.shift_ok, || format!("shift discrepancies {:?}", r.shifts))?;
    ensure(r.sup_ok, || format!("sup ratios {:?}", r.sup.iter().map(|s| s.ratio).collect::<Vec<_>>()))?;
    let worst_shift = r.shifts.iter().map(|(_, d)| *d).fold(0.0, f64::max);
    Ok(format!(
        "C = {:.7} (expected {:.7}), spread {:.1e}, residual {:.2e}, shift {:.1e}, sup ratios {:.4}/{:.4}",
        r.calibration.constant.re,
        r.calibration.expected.re,
        r.calibration.spread,
        r.residual.relative,
        worst_shift,
        r.sup[0].ratio,
        r.sup[1].ratio
    ))
}

// 9 ------------------------------------------------------------------------

fn criterion_9(sigma: &SigmaContext) -> Outcome {
    let ce = apmap::counterexample_generate(2).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let cert = apmap::map_admissible(&ce.data, sigma, &EntryOptions::default(), &mut rng).map_err(err)?;
    ensure(cert.admissible, || format!("not admissible: same class {}, separation {}", cert.same_class.same, cert.separation.pass))?;
    let common = &cert.same_class.classes[0];
    ensure(!common.is_zero(), || "common class is zero".into())?;
    let verdicts = apmap::individual_verdicts(&ce.data, sigma, &DecideOptions::default(), &mut rng).map_err(err)?;
    ensure(verdicts.iter().all(|v| !v.realizable), || "some divisor is realizable".into())?;

    // the unshifted divisor repeated: every support coincides
    let unshifted: Vec<DivisorSpec> = ce
        .data
        .divisors
        .iter()
        .map(|d| {
            let spec = &d.components()[0].spec;
            let f = SigmaFactor::new(spec.factors()[0].u.clone(), spec.factors()[0].v.clone(), c(0.0, 0.0));
            DivisorSpec::single(PeriodicFunctionSpec::new(spec.lambda().to_vec(), vec![f], None).unwrap())
        })
        .collect();
    let collapsed = MapDivisorData { divisors: unshifted, ..ce.data.clone() };
    let sep = apmap::separation_check(&collapsed).map_err(err)?;
    ensure(!sep.pass, || "separation passes with zero shifts".into())?;
    Ok(format!(
        "delta {:.4}, {} grid points, admissible; 3 x not realizable; zero shifts fail",
        ce.data.delta, cert.separation.grid_points
    ))
}

// 10 -----------------------------------------------------------------------

/// Canonical Hermite form over i128, written independently of the library.
fn oracle_hnf(mut a: Vec<Vec<i128>>) -> Vec<Vec<i128>> {
    let cols = a.first().map_or(0, Vec::len);
    let mut r = 0;
    for col in 0..cols {
        loop {
            let piv = (r..a.len()).filter(|&i| a[i][col] != 0).min_by_key(|&i| a[i][col].abs());
            let Some(piv) = piv else { break };
            a.swap(r, piv);
            let mut done = true;
            for i in r + 1..a.len() {
                let q = a[i][col].div_euclid(a[r][col]);
                let pr = a[r].clone();
                for (x, y) in a[i].iter_mut().zip(&pr) {
                    *x -= q * y;
                }
                done &= a[i][col] == 0;
            }
            if done {
                break;
            }
        }
        if r < a.len() && a[r][col] != 0 {
            if a[r][col] < 0 {
                a[r].iter_mut().for_each(|x| *x = -*x);
            }
            let pr = a[r].clone();
            for row in a.iter_mut().take(r) {
                let q = row[col].div_euclid(pr[col]);
                for (x, y) in row.iter_mut().zip(&pr) {
                    *x -= q * y;
                }
            }
            r += 1;
        }
    }
    a.truncate(r);
    a
}

fn scaled(freqs: &[Frequency], l: &BigInt) -> Vec<Vec<i128>> {
    freqs
        .iter()
        .map(|f| f.flat().iter().map(|q| (q * BigRational::from_integer(l.clone())).to_integer().to_i128().unwrap()).collect())
        .collect()
}

fn criterion_10() -> Outcome {
    let ctx = gens();
    let g = group_basis(&[ctx.integer_frequency("one", &[2, 0]).unwrap(), ctx.integer_frequency("one", &[3, 0]).unwrap()])
        .map_err(err)?;
    ensure(g.basis == vec![ctx.integer_frequency("one", &[1, 0]).unwrap()], || format!("basis {:?}", g.basis))?;

    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
    let mut ranks = 0;
    for i in 0..RANDOM_SETS_10 {
        let m = rng.gen_range(1..=3);
        let k = rng.gen_range(1..=5);
        let freqs: Vec<Frequency> = (0..k)
            .map(|_| {
                let flat: Vec<BigRational> = (0..m * ctx.len())
                    .map(|_| {
                        if rng.gen_bool(0.4) {
                            BigRational::zero()
                        } else {
                            BigRational::new(rng.gen_range(-6..=6).into(), rng.gen_range(1..=4).into())
                        }
                    })
                    .collect();
                Frequency::from_flat(&ctx, m, &flat)
            })
            .collect();
        let group = group_basis(&freqs).map_err(err)?;
        // reconstruction
        for (f, coord) in freqs.iter().zip(&group.coord) {
            let rebuilt = if group.basis.is_empty() {
                ctx.zero_frequency(m)
            } else {
                Frequency::combination(&group.basis, coord).map_err(err)?
            };
            ensure(&rebuilt == f, || format!("set {i}: generator not reconstructed"))?;
        }
        // idempotence
        if !group.basis.is_empty() {
            let again = group_basis(&group.basis).map_err(err)?;
            ensure(again.basis == group.basis, || format!("set {i}: basis of the basis differs"))?;
        }
        // same lattice, by an independent canonical form
        let l = freqs
            .iter()
            .chain(&group.basis)
            .flat_map(|f| f.flat())
            .fold(BigInt::one(), |l, q| l.lcm(q.denom()));
        let lhs = oracle_hnf(scaled(&freqs, &l));
        let rhs = oracle_hnf(scaled(&group.basis, &l));
        ensure(lhs == rhs, || format!("set {i}: lattices differ"))?;
        ensure(lhs.len() == group.basis.len(), || format!("set {i}: rank {} vs {}", group.basis.len(), lhs.len()))?;
        ensure(lhs.iter().all(|r| r.iter().any(|x| x.is_positive())), || format!("set {i}: zero row"))?;
        ranks += group.basis.len();
    }
    Ok(format!("{{(2,0),(3,0)}} -> {{(1,0)}}; {RANDOM_SETS_10} random sets, total rank {ranks}"))
}

// ---------------------------------------------------------------------------

fn main() -> ExitCode {
    let sigma = match sigma_init(SIGMA_ACCURACY) {
        Ok(s) => s,
        Err(e) => {
            println!("sigma initialisation failed: {e}");
            return ExitCode::FAILURE;
        }
    };
    type Check<'a> = (u32, &'a str, Option<Duration>, Box<dyn Fn() -> Outcome + 'a>);
    let s = &sigma;
    let checks: Vec<Check> = vec![
        (1, "winding ground truth", Some(LIMIT_1), Box::new(move || criterion_1(s))),
        (2, "winding rule suite", Some(LIMIT_2), Box::new(move || criterion_2(s))),
        (3, "algebra and winding agree", Some(LIMIT_3), Box::new(move || criterion_3(s))),
        (4, "completion cancels the class", None, Box::new(criterion_4)),
        (5, "mirror law", None, Box::new(move || criterion_5(s))),
        (6, "local polynomial and zero count", None, Box::new(criterion_6)),
        (7, "Bohr mean convergence", None, Box::new(criterion_7)),
        (8, "dbar solver", Some(LIMIT_8), Box::new(criterion_8)),
        (9, "shifted family counterexample", None, Box::new(move || criterion_9(s))),
        (10, "Hermite normal form", None, Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (n, name, limit, check) in checks {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(msg), Some(l)) if elapsed > l => Err(format!("{msg}; took {:.1} s, limit {} s", elapsed.as_secs_f64(), l.as_secs())),
            (r, _) => r,
        };
        match result {
            Ok(msg) => println!("criterion {n:>2} PASS  {name}: {msg} ({:.2} s)", elapsed.as_secs_f64()),
            Err(msg) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {msg} ({:.2} s)", elapsed.as_secs_f64());
            }
        }
    }
    if failed == 0 {
        println!("acceptance: all 10 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria fail");
        ExitCode::FAILURE
    }
}
