use apdiv::chern;
use apdiv::divisor::{decide_realizable, DecideOptions, DivisorComponent, DivisorSpec, PeriodicFunctionSpec, SigmaFactor};
use apdiv::exactlin::{declare_generators, Frequency, GeneratorContext};
use apdiv::json;
use apdiv::sigma::sigma_init;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ctx() -> GeneratorContext {
    declare_generators(&["one", "sqrt2"], &[1.0, std::f64::consts::SQRT_2]).unwrap()
}

fn rows(ctx: &GeneratorContext) -> Vec<Frequency> {
    let s2 = ctx.multiple("sqrt2", 1, 1).unwrap();
    vec![
        ctx.integer_frequency("one", &[1, 0]).unwrap(),
        ctx.integer_frequency("one", &[0, 1]).unwrap(),
        ctx.frequency(vec![s2, ctx.zero_scalar()]),
    ]
}

fn completed(d: &DivisorSpec, pairs: &[chern::WedgePair]) -> DivisorSpec {
    let mut comps = d.components().to_vec();
    for p in pairs {
        let spec = PeriodicFunctionSpec::new(vec![p.lambda.clone(), p.mu.clone()], vec![SigmaFactor::basic(2, 0, 1)], None).unwrap();
        comps.push(DivisorComponent { spec, weight: i64::try_from(&p.multiplicity).unwrap() });
    }
    DivisorSpec::new(d.context(), d.dim(), comps).unwrap()
}

#[test]
fn completion_makes_a_divisor_realizable() {
    let ctx = ctx();
    let sigma = sigma_init(1e-12).unwrap();
    let spec = PeriodicFunctionSpec::new(
        rows(&ctx),
        vec![
            SigmaFactor::new(vec![1, 0, 2], vec![0, 1, -1], Complex64::new(0.2, 0.1)),
            SigmaFactor::new(vec![0, 1, 0], vec![0, 0, 3], Complex64::new(0.0, 0.0)),
        ],
        None,
    )
    .unwrap();
    let d = DivisorSpec::new(&ctx, 2, vec![DivisorComponent { spec, weight: 2 }]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cert = decide_realizable(&d, &sigma, &DecideOptions::default(), &mut rng).unwrap();
    assert!(!cert.realizable);
    assert!(cert.components[0].winding.is_some());
    let total = completed(&d, &cert.completion);
    let again = decide_realizable(&total, &sigma, &DecideOptions::default(), &mut rng).unwrap();
    assert!(again.realizable);
    assert!(again.total_class.is_zero());
}

#[test]
fn divisor_and_mirror_cancel() {
    let ctx = ctx();
    let sigma = sigma_init(1e-12).unwrap();
    let spec = PeriodicFunctionSpec::new(rows(&ctx), vec![SigmaFactor::basic(3, 2, 1)], None).unwrap();
    let d = DivisorSpec::single(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let both = d.plus(&d.mirrored()).unwrap();
    assert!(decide_realizable(&both, &sigma, &DecideOptions::default(), &mut rng).unwrap().realizable);
}

#[test]
fn certificate_classes_survive_json() {
    let ctx = ctx();
    let sigma = sigma_init(1e-12).unwrap();
    let spec = PeriodicFunctionSpec::new(rows(&ctx), vec![SigmaFactor::basic(3, 0, 2)], None).unwrap();
    let d = DivisorSpec::single(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cert = decide_realizable(&d, &sigma, &DecideOptions::default(), &mut rng).unwrap();
    let v = json::class_json(&cert.total_class);
    let text = serde_json::to_string(&v).unwrap();
    let back = json::parse_class(&ctx, None, &serde_json::from_str(&text).unwrap(), "").unwrap();
    assert_eq!(back, cert.total_class);
    let dj = json::divisor_json(&d);
    assert_eq!(json::parse_divisor(&ctx, &dj, "").unwrap(), d);
}
