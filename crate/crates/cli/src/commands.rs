use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use apdiv::apmap::{self, MapDivisorData, SeparationResult};
use apdiv::chern::{self, ChernClass, Completion};
use apdiv::contour::{chern_entry, EntryOptions, EntryResult, WindingOptions};
use apdiv::dbar::{self, StripProblem, TestInput, VerifyOptions};
use apdiv::divisor::{
    self, decide_realizable, default_base_point, CrossCheck, DecideOptions, DivisorComponent, DivisorSpec,
    PeriodicFunctionSpec, RealizabilityCertificate, SigmaFactor, WindingClass,
};
use apdiv::exactlin::GeneratorContext;
use apdiv::expsum::bohr_mean;
use apdiv::json::{self as schema, array, field, number, opt_field, SchemaError};
use apdiv::sigma::{sigma_init, SigmaContext};
use num_complex::Complex64;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::plot::Table;

pub struct Settings {
    pub seed: u64,
    pub accuracy: f64,
    pub cross_check: Option<bool>,
    pub plot: bool,
    pub max_retries: usize,
}

impl Settings {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn sigma(&self) -> Result<SigmaContext> {
        sigma_init(self.accuracy).context("sigma initialisation")
    }

    fn entry(&self) -> EntryOptions {
        EntryOptions { max_retries: self.max_retries, winding: WindingOptions { record: self.plot, ..WindingOptions::default() } }
    }

    fn decide(&self) -> DecideOptions {
        let cross_check = match self.cross_check {
            None => CrossCheck::Auto,
            Some(true) => CrossCheck::On,
            Some(false) => CrossCheck::Off,
        };
        DecideOptions { entry: EntryOptions { max_retries: self.max_retries, ..EntryOptions::default() }, cross_check }
    }
}

pub struct Outcome {
    pub output: Value,
    /// Not realizable, not admissible, or a failed verification.
    pub negative: bool,
    pub plot: Option<Table>,
}

impl Outcome {
    fn positive(output: Value) -> Outcome {
        Outcome { output, negative: false, plot: None }
    }
}

pub fn load(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// Version, kind and generator context of a problem file.
fn header(doc: &Value, kind: &str) -> Result<GeneratorContext, SchemaError> {
    schema::check_version(doc)?;
    let found = schema::string(field(doc, "", "kind")?, "/kind")?;
    if found != kind {
        return Err(SchemaError { pointer: "/kind".into(), message: format!("expected {kind:?}, found {found:?}") });
    }
    schema::parse_generators(field(doc, "", "generators")?, "/generators")
}

fn envelope(ctx: &GeneratorContext, kind: &str, settings: &Settings, body: Value) -> Value {
    let mut doc = schema::document(ctx, kind, body);
    doc["seed"] = json!(settings.seed);
    doc
}

fn class_of_document(ctx: &GeneratorContext, doc: &Value, settings: &Settings) -> Result<ChernClass> {
    if let Some(c) = opt_field(doc, "class") {
        return Ok(schema::parse_class(ctx, None, c, "/class")?);
    }
    if let Some(p) = opt_field(doc, "pairs") {
        let pairs = schema::parse_pairs(ctx, p, "/pairs")?;
        let dim = match (pairs.first(), opt_field(doc, "dim")) {
            (Some(p), _) => p.lambda.dim(),
            (None, Some(d)) => schema::integer(d, "/dim")? as usize,
            (None, None) => return Err(SchemaError { pointer: "/dim".into(), message: "an empty pair list needs \"dim\"".into() }.into()),
        };
        return Ok(chern::recombine(ctx, dim, &pairs)?);
    }
    if let Some(d) = opt_field(doc, "divisor") {
        let d = schema::parse_divisor(ctx, d, "/divisor")?;
        let sigma = settings.sigma()?;
        return Ok(divisor::divisor_class(&d, divisor::Method::Algebraic, &sigma, &settings.entry(), &mut settings.rng())?);
    }
    Err(SchemaError { pointer: "/class".into(), message: "expected one of \"class\", \"pairs\" or \"divisor\"".into() }.into())
}

pub fn chern_compute(settings: &Settings, doc: &Value) -> Result<Outcome> {
    let ctx = header(doc, "chern")?;
    let class = class_of_document(&ctx, doc, settings)?;
    let body = json!({"class": schema::class_json(&class), "is_zero": class.is_zero(), "rank": class.basis().len()});
    Ok(Outcome::positive(envelope(&ctx, "chern-class", settings, body)))
}

pub fn chern_decompose(settings: &Settings, doc: &Value) -> Result<Outcome> {
    let ctx = header(doc, "chern")?;
    let class = class_of_document(&ctx, doc, settings)?;
    let pairs = chern::decompose(&class);
    let back = chern::recombine(&ctx, class.dim(), &pairs)?;
    let body = json!({
        "class": schema::class_json(&class),
        "pairs": pairs.iter().map(schema::pair_json).collect::<Vec<_>>(),
        "recombines": back.same_class(&class)?,
    });
    Ok(Outcome::positive(envelope(&ctx, "chern-decomposition", settings, body)))
}

fn completion_json(c: &Completion) -> Value {
    json!({
        "pairs": c.pairs.iter().map(schema::pair_json).collect::<Vec<_>>(),
        "auxiliary": c.auxiliary.as_ref().map(schema::frequency_json),
        "independence": c.independence,
        "numeric_independence": c.numeric_independence,
        "attempts": c.attempts,
    })
}

/// A divisor whose class is `lambda ^ mu` times the multiplicity: the model
/// `phi(<z, lambda> + i <z, mu>)`.
fn model_component(pair: &chern::WedgePair) -> Result<DivisorComponent> {
    let weight: i64 = (&pair.multiplicity).try_into().map_err(|_| anyhow!("multiplicity {} too large", pair.multiplicity))?;
    let spec = PeriodicFunctionSpec::new(vec![pair.lambda.clone(), pair.mu.clone()], vec![SigmaFactor::basic(2, 0, 1)], None)?;
    Ok(DivisorComponent { spec, weight })
}

pub fn chern_complete(settings: &Settings, doc: &Value, allow_r_dependent: bool) -> Result<Outcome> {
    let ctx = header(doc, "chern")?;
    let class = class_of_document(&ctx, doc, settings)?;
    let want = class.dim() > 1 && !allow_r_dependent;
    let completion = chern::complete(&class, want, &mut settings.rng())?;
    let total = chern::add(&class, &chern::recombine(&ctx, class.dim(), &completion.pairs)?)?;
    let body = json!({
        "class": schema::class_json(&class),
        "pairwise_r_independent": want,
        "completion": completion_json(&completion),
        "cancels": total.is_zero(),
    });
    Ok(Outcome::positive(envelope(&ctx, "chern-completion", settings, body)))
}

fn winding_json(w: &WindingClass) -> Value {
    json!({
        "matrix": w.matrix,
        "entries": w.entries.iter().map(|(p, q, e)| entry_json(*p, *q, e)).collect::<Vec<_>>(),
    })
}

fn entry_json(p: usize, q: usize, e: &EntryResult) -> Value {
    json!({
        "p": p + 1,
        "q": q + 1,
        "value": e.value,
        "raw": e.winding.raw,
        "attempts": e.attempts,
        "base_point": e.base_point.iter().map(|z| schema::complex_json(*z)).collect::<Vec<_>>(),
        "min_modulus": e.winding.min_modulus,
        "samples": e.winding.samples,
    })
}

fn certificate_json(d: &DivisorSpec, cert: &RealizabilityCertificate) -> Result<Value> {
    let mut completed = None;
    if !cert.realizable {
        let mut components = d.components().to_vec();
        for p in &cert.completion {
            components.push(model_component(p)?);
        }
        let total = DivisorSpec::new(d.context(), d.dim(), components)?;
        completed = Some(schema::document(d.context(), "realize", json!({"divisor": schema::divisor_json(&total)})));
    }
    Ok(json!({
        "realizable": cert.realizable,
        "total_class": schema::class_json(&cert.total_class),
        "completion": cert.completion.iter().map(schema::pair_json).collect::<Vec<_>>(),
        "completion_details": cert.completion_details.as_ref().map(completion_json),
        "completed_divisor": completed,
        "components": cert
            .components
            .iter()
            .map(|c| json!({"weight": c.weight, "class": schema::class_json(&c.class), "winding": c.winding.as_ref().map(winding_json)}))
            .collect::<Vec<_>>(),
    }))
}

const DEFAULT_PLOT_RADIUS: f64 = 3.0;

fn plot_radius(doc: &Value) -> Result<f64> {
    match opt_field(doc, "plot_radius") {
        Some(r) => {
            let r = number(r, "/plot_radius")?;
            if !(r > 0.0) {
                bail!(SchemaError { pointer: "/plot_radius".into(), message: "expected a positive radius".into() });
            }
            Ok(r)
        }
        None => Ok(DEFAULT_PLOT_RADIUS),
    }
}

/// Zeros of every sigma factor of one-dimensional divisors in `|z| <= radius`.
fn zero_table(divisors: &[DivisorSpec], radius: f64) -> Result<Table> {
    let mut t = Table::new(&["divisor", "component", "factor", "weight", "re", "im"]);
    for (i, d) in divisors.iter().enumerate() {
        if d.dim() != 1 {
            bail!("zero-set plots need one-dimensional divisors, divisor {i} has dimension {}", d.dim());
        }
        for (j, c) in d.components().iter().enumerate() {
            for (k, f) in c.spec.factors().iter().enumerate() {
                for z in divisor::factor_zeros_1d(f, c.spec.lambda(), Complex64::new(0.0, 0.0), radius)? {
                    t.push(vec![i.to_string(), j.to_string(), k.to_string(), c.weight.to_string(), z.re.to_string(), z.im.to_string()]);
                }
            }
        }
    }
    Ok(t)
}

pub fn realize_check(settings: &Settings, doc: &Value) -> Result<Outcome> {
    let ctx = header(doc, "realize")?;
    let d = schema::parse_divisor(&ctx, field(doc, "", "divisor")?, "/divisor")?;
    let sigma = settings.sigma()?;
    let cert = decide_realizable(&d, &sigma, &settings.decide(), &mut settings.rng())?;
    let plot = if settings.plot { Some(zero_table(std::slice::from_ref(&d), plot_radius(doc)?)?) } else { None };
    let body = certificate_json(&d, &cert)?;
    Ok(Outcome { output: envelope(&ctx, "realize-certificate", settings, body), negative: !cert.realizable, plot })
}

fn parse_box(v: &Value, pointer: &str, dim: usize) -> Result<Vec<(f64, f64)>, SchemaError> {
    let items = array(v, pointer)?;
    if items.len() != dim {
        return Err(SchemaError { pointer: pointer.into(), message: format!("expected {dim} intervals") });
    }
    items
        .iter()
        .enumerate()
        .map(|(i, iv)| {
            let p = format!("{pointer}/{i}");
            let pair = array(iv, &p)?;
            if pair.len() != 2 {
                return Err(SchemaError { pointer: p, message: "expected [lo, hi]".into() });
            }
            Ok((number(&pair[0], &format!("{p}/0"))?, number(&pair[1], &format!("{p}/1"))?))
        })
        .collect()
}

fn box_json(b: &[(f64, f64)]) -> Value {
    json!(b.iter().map(|(lo, hi)| [*lo, *hi]).collect::<Vec<_>>())
}

fn separation_json(s: &SeparationResult) -> Value {
    json!({
        "pass": s.pass,
        "grid_points": s.grid_points,
        "step": s.step,
        "inflation": s.inflation,
        "witness": s.witness.as_ref().map(|w| json!({
            "point": w.point.iter().map(|z| schema::complex_json(*z)).collect::<Vec<_>>(),
            "distances": w.distances,
            "certain": w.certain,
        })),
        "method": apmap::SEPARATION_NOTE,
    })
}

fn map_data_json(data: &MapDivisorData) -> Value {
    json!({
        "divisors": data.divisors.iter().map(schema::divisor_json).collect::<Vec<_>>(),
        "x_window": box_json(&data.x_window),
        "y_box": box_json(&data.y_box),
        "delta": data.delta,
        "grid_step": data.grid_step,
    })
}

pub fn map_check(settings: &Settings, doc: &Value) -> Result<Outcome> {
    let ctx = header(doc, "map")?;
    let items = array(field(doc, "", "divisors")?, "/divisors")?;
    let divisors = items
        .iter()
        .enumerate()
        .map(|(i, d)| schema::parse_divisor(&ctx, d, &format!("/divisors/{i}")))
        .collect::<Result<Vec<_>, _>>()?;
    let dim = divisors.first().map(DivisorSpec::dim).ok_or_else(|| SchemaError { pointer: "/divisors".into(), message: "expected at least two divisors".into() })?;
    let delta = number(field(doc, "", "delta")?, "/delta")?;
    let grid_step = match opt_field(doc, "grid_step") {
        Some(s) => number(s, "/grid_step")?,
        None => delta / 4.0,
    };
    let x_window = match opt_field(doc, "x_window") {
        Some(w) => parse_box(w, "/x_window", dim)?,
        None => vec![(0.0, 1.0); dim],
    };
    let y_box = parse_box(field(doc, "", "y_box")?, "/y_box", dim)?;
    let data = MapDivisorData { divisors, x_window, y_box, delta, grid_step };
    let sigma = settings.sigma()?;
    let cert = apmap::map_admissible(&data, &sigma, &settings.entry(), &mut settings.rng())?;
    let plot = if settings.plot { Some(zero_table(&data.divisors, plot_radius(doc)?)?) } else { None };
    let body = json!({
        "admissible": cert.admissible,
        "condition_a": cert.condition_a,
        "same_class": cert.same_class.same,
        "classes": cert.same_class.classes.iter().map(schema::class_json).collect::<Vec<_>>(),
        "separation": separation_json(&cert.separation),
    });
    Ok(Outcome { output: envelope(&ctx, "map-certificate", settings, body), negative: !cert.admissible, plot })
}

pub fn map_counterexample(settings: &Settings, k: usize) -> Result<Outcome> {
    let ce = apmap::counterexample_generate(k)?;
    let ctx = ce.data.divisors[0].context().clone();
    let sigma = settings.sigma()?;
    let mut rng = settings.rng();
    let cert = apmap::map_admissible(&ce.data, &sigma, &settings.entry(), &mut rng)?;
    let verdicts = apmap::individual_verdicts(&ce.data, &sigma, &settings.decide(), &mut rng)?;
    let unshifted = MapDivisorData { divisors: vec![ce.data.divisors[0].clone(); ce.data.divisors.len()], ..ce.data.clone() };
    let collapsed = apmap::separation_check(&unshifted)?;
    let body = json!({
        "k": k,
        "problem": schema::document(&ctx, "map", map_data_json(&ce.data)),
        "shifts": ce
            .shifts
            .iter()
            .map(|(re, im)| json!({"re": schema::scalar_json(&ctx, re), "im": schema::scalar_json(&ctx, im), "approx": schema::complex_json(Complex64::new(re.approx(), im.approx()))}))
            .collect::<Vec<_>>(),
        "min_difference_distance": ce.min_difference_distance,
        "admissible": cert.admissible,
        "common_class": schema::class_json(&cert.same_class.classes[0]),
        "common_class_zero": cert.same_class.classes[0].is_zero(),
        "separation": separation_json(&cert.separation),
        "individually_realizable": verdicts.iter().map(|v| v.realizable).collect::<Vec<_>>(),
        "separation_without_shifts": separation_json(&collapsed),
    });
    Ok(Outcome::positive(envelope(&ctx, "map-counterexample", settings, body)))
}

fn index_field(doc: &Value, key: &str, n: usize) -> Result<usize> {
    let pointer = format!("/{key}");
    let i = schema::integer(field(doc, "", key)?, &pointer)?;
    if i < 1 || i as usize > n {
        bail!(SchemaError { pointer, message: format!("expected an index in 1..={n}") });
    }
    Ok(i as usize - 1)
}

pub fn winding_entry(settings: &Settings, doc: &Value) -> Result<Outcome> {
    let ctx = header(doc, "winding")?;
    let spec = schema::parse_function_spec(&ctx, None, field(doc, "", "function")?, "/function")?;
    let n = spec.n();
    let p = index_field(doc, "p", n)?;
    let q = index_field(doc, "q", n)?;
    let w0 = match opt_field(doc, "base_point") {
        Some(b) => {
            let w = schema::parse_complex_vec(b, "/base_point")?;
            if w.len() != n {
                bail!(SchemaError { pointer: "/base_point".into(), message: format!("expected {n} entries") });
            }
            w
        }
        None => default_base_point(n),
    };
    let sigma = settings.sigma()?;
    let f = |w: &[Complex64]| spec.eval_w(&sigma, w);
    let e = chern_entry(&f, p, q, &w0, &settings.entry(), &mut settings.rng())?;
    let plot = settings.plot.then(|| {
        let mut t = Table::new(&["segment", "t", "re", "im", "phase"]);
        for s in &e.winding.trace {
            t.push(vec![s.segment.to_string(), s.t.to_string(), s.value.re.to_string(), s.value.im.to_string(), s.phase.to_string()]);
        }
        t
    });
    let body = json!({"entry": entry_json(p, q, &e), "function": schema::function_spec_json(&spec)});
    Ok(Outcome { output: envelope(&ctx, "winding-entry", settings, body), negative: false, plot })
}

pub fn sigma_eval(settings: &Settings, doc: &Value) -> Result<Outcome> {
    let ctx = header(doc, "sigma")?;
    let points = schema::parse_complex_vec(field(doc, "", "points")?, "/points")?;
    let sigma = settings.sigma()?;
    let mut table = Table::new(&["z_re", "z_im", "sigma_re", "sigma_im"]);
    let values: Vec<Value> = points
        .iter()
        .map(|&z| {
            let s = sigma.eval(z);
            table.push(vec![z.re.to_string(), z.im.to_string(), s.re.to_string(), s.im.to_string()]);
            json!({"z": schema::complex_json(z), "sigma": schema::complex_json(s), "normalized": schema::complex_json(sigma.eval_normalized(z))})
        })
        .collect();
    let body = json!({
        "values": values,
        "eta1": schema::complex_json(sigma.eta1()),
        "eta_i": schema::complex_json(sigma.eta_i()),
        "legendre_residual": sigma.legendre_residual(),
        "g3_residual": sigma.g3_residual(),
        "rows": sigma.rows(),
        "accuracy": sigma.accuracy(),
    });
    Ok(Outcome { output: envelope(&ctx, "sigma-values", settings, body), negative: false, plot: settings.plot.then_some(table) })
}

pub fn spectrum(settings: &Settings, doc: &Value) -> Result<Outcome> {
    let ctx = header(doc, "spectrum")?;
    let f = schema::parse_expsum(&ctx, field(doc, "", "sum")?, "/sum")?;
    let mut means = Vec::new();
    if let Some(qs) = opt_field(doc, "bohr") {
        for (i, q) in array(qs, "/bohr")?.iter().enumerate() {
            let p = format!("/bohr/{i}");
            let lambda = schema::parse_frequency(&ctx, field(q, &p, "freq")?, &format!("{p}/freq"))?;
            let y = match opt_field(q, "y") {
                Some(y) => array(y, &format!("{p}/y"))?.iter().enumerate().map(|(j, v)| number(v, &format!("{p}/y/{j}"))).collect::<Result<Vec<_>, _>>()?,
                None => vec![0.0; f.dim()],
            };
            let t = number(field(q, &p, "T")?, &format!("{p}/T"))?;
            let m = bohr_mean(&f, &lambda, &y, t)?;
            let exact = f.coefficient(&lambda);
            // the Bohr mean at height y sees c e^{-<y, lambda>}
            let weight = (-lambda.approx().iter().zip(&y).map(|(l, y)| l * y).sum::<f64>()).exp();
            means.push(json!({
                "freq": schema::frequency_json(&lambda),
                "y": y,
                "T": t,
                "value": schema::complex_json(m.value),
                "error_estimate": m.error_estimate,
                "panels_per_axis": m.panels_per_axis,
                "coefficient": schema::complex_json(exact),
                "deviation": (m.value - exact * weight).norm(),
            }));
        }
    }
    let body = json!({
        "spectrum": f.spectrum().iter().map(|l| json!({"freq": schema::frequency_json(l), "coefficient": schema::complex_json(f.coefficient(l))})).collect::<Vec<_>>(),
        "bohr": means,
    });
    Ok(Outcome::positive(envelope(&ctx, "spectrum-report", settings, body)))
}

fn parse_input(v: &Value) -> Result<TestInput, SchemaError> {
    let name = schema::string(field(v, "/input", "name")?, "/input/name")?;
    Ok(match name {
        "zero" => TestInput::Zero,
        "gaussian" => TestInput::Gaussian {
            scale: match opt_field(v, "scale") {
                Some(s) => number(s, "/input/scale")?,
                None => 1.0,
            },
        },
        "tilted" => TestInput::Tilted,
        "bump" => TestInput::Bump,
        other => return Err(SchemaError { pointer: "/input/name".into(), message: format!("unknown input {other:?}") }),
    })
}

fn interval(doc: &Value, key: &str) -> Result<(f64, f64), SchemaError> {
    Ok(parse_box(&json!([field(doc, "", key)?]), &format!("/{key}"), 1)
        .map_err(|e| SchemaError { pointer: format!("/{key}"), message: e.message })?[0])
}

pub fn dbar_verify(settings: &Settings, doc: &Value) -> Result<Outcome> {
    schema::check_version(doc)?;
    let kind = schema::string(field(doc, "", "kind")?, "/kind")?;
    if kind != "dbar" {
        bail!(SchemaError { pointer: "/kind".into(), message: format!("expected \"dbar\", found {kind:?}") });
    }
    let input = parse_input(field(doc, "", "input")?)?;
    let mut p = StripProblem::new(input.build(), interval(doc, "omega")?, interval(doc, "omega_prime")?)?;
    if let Some(h) = opt_field(doc, "half_width") {
        p.half_width = number(h, "/half_width")?;
    }
    if let Some(o) = opt_field(doc, "order") {
        p.order = schema::integer(o, "/order")? as usize;
    }
    p.validate()?;
    let mut opts = VerifyOptions::default();
    if let Some(s) = opt_field(doc, "shifts") {
        opts.shifts = array(s, "/shifts")?.iter().enumerate().map(|(i, t)| number(t, &format!("/shifts/{i}"))).collect::<Result<_, _>>()?;
    }
    if let Some(w) = opt_field(doc, "windows") {
        let n = array(w, "/windows")?.len();
        opts.windows = parse_box(w, "/windows", n)?;
    }
    let report = dbar::verify(&p, &opts)?;
    let body = json!({
        "problem": {"omega": [p.omega.0, p.omega.1], "omega_prime": [p.omega_prime.0, p.omega_prime.1], "half_width": p.half_width, "order": p.order, "panel": p.panel},
        "options": opts,
        "report": report,
    });
    let mut out = json!({"version": schema::VERSION, "kind": "dbar-report", "seed": settings.seed});
    if let (Some(o), Value::Object(b)) = (out.as_object_mut(), body) {
        o.extend(b);
    }
    Ok(Outcome { output: out, negative: !report.pass, plot: None })
}
