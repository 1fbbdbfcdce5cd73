//! The `apdiv/1` JSON encoding of generators, frequencies, classes and
//! divisor specifications. Parse errors name the offending JSON pointer.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde_json::{json, Map, Value};
use thiserror::Error;

use crate::chern::{ChernClass, WedgePair};
use crate::divisor::{DivisorComponent, DivisorSpec, PeriodicFunctionSpec, SigmaFactor};
use crate::exactlin::{declare_generators_with_precision, Frequency, GeneratorContext, RealScalar};
use crate::expsum::{ExpSum, TrigPolyW};

pub const VERSION: &str = "apdiv/1";

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{pointer}: {message}")]
pub struct SchemaError {
    pub pointer: String,
    pub message: String,
}

fn err(pointer: &str, message: impl Into<String>) -> SchemaError {
    SchemaError { pointer: if pointer.is_empty() { "/".into() } else { pointer.into() }, message: message.into() }
}

fn child(pointer: &str, key: &str) -> String {
    format!("{pointer}/{}", key.replace('~', "~0").replace('/', "~1"))
}

fn index(pointer: &str, i: usize) -> String {
    format!("{pointer}/{i}")
}

pub fn field<'a>(v: &'a Value, pointer: &str, key: &str) -> Result<&'a Value, SchemaError> {
    let obj = v.as_object().ok_or_else(|| err(pointer, "expected an object"))?;
    obj.get(key).ok_or_else(|| err(&child(pointer, key), "missing field"))
}

pub fn opt_field<'a>(v: &'a Value, key: &str) -> Option<&'a Value> {
    v.as_object().and_then(|o| o.get(key)).filter(|x| !x.is_null())
}

pub fn array<'a>(v: &'a Value, pointer: &str) -> Result<&'a Vec<Value>, SchemaError> {
    v.as_array().ok_or_else(|| err(pointer, "expected an array"))
}

pub fn number(v: &Value, pointer: &str) -> Result<f64, SchemaError> {
    let x = v.as_f64().ok_or_else(|| err(pointer, "expected a number"))?;
    if !x.is_finite() {
        return Err(err(pointer, "expected a finite number"));
    }
    Ok(x)
}

pub fn integer(v: &Value, pointer: &str) -> Result<i64, SchemaError> {
    v.as_i64().ok_or_else(|| err(pointer, "expected an integer"))
}

pub fn big_integer(v: &Value, pointer: &str) -> Result<BigInt, SchemaError> {
    if let Some(i) = v.as_i64() {
        return Ok(BigInt::from(i));
    }
    if let Some(s) = v.as_str() {
        return s.parse().map_err(|_| err(pointer, "expected an integer string"));
    }
    Err(err(pointer, "expected an integer"))
}

fn big_json(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(i) => json!(i),
        None => json!(x.to_string()),
    }
}

pub fn string<'a>(v: &'a Value, pointer: &str) -> Result<&'a str, SchemaError> {
    v.as_str().ok_or_else(|| err(pointer, "expected a string"))
}

pub fn check_version(doc: &Value) -> Result<(), SchemaError> {
    let v = string(field(doc, "", "version")?, "/version")?;
    if v != VERSION {
        return Err(err("/version", format!("unsupported version {v:?}, expected {VERSION:?}")));
    }
    Ok(())
}

pub fn parse_generators(v: &Value, pointer: &str) -> Result<GeneratorContext, SchemaError> {
    let items = array(v, pointer)?;
    let mut names = Vec::with_capacity(items.len());
    let mut approx = Vec::with_capacity(items.len());
    let mut precision = Vec::with_capacity(items.len());
    for (i, g) in items.iter().enumerate() {
        let p = index(pointer, i);
        names.push(string(field(g, &p, "name")?, &child(&p, "name"))?.to_string());
        approx.push(number(field(g, &p, "approx")?, &child(&p, "approx"))?);
        precision.push(match opt_field(g, "precision") {
            Some(x) => number(x, &child(&p, "precision"))?,
            None => 0.0,
        });
    }
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    declare_generators_with_precision(&refs, &approx, &precision).map_err(|e| err(pointer, e.to_string()))
}

pub fn generators_json(ctx: &GeneratorContext) -> Value {
    Value::Array(
        ctx.generators()
            .iter()
            .map(|g| json!({"name": g.name, "approx": g.approx, "precision": g.precision}))
            .collect(),
    )
}

fn parse_scalar(ctx: &GeneratorContext, v: &Value, pointer: &str) -> Result<RealScalar, SchemaError> {
    let mut terms: Vec<(String, BigRational)> = Vec::new();
    for (i, t) in array(v, pointer)?.iter().enumerate() {
        let p = index(pointer, i);
        let gen = string(field(t, &p, "gen")?, &child(&p, "gen"))?;
        if ctx.index_of(gen).is_none() {
            return Err(err(&child(&p, "gen"), format!("unknown generator {gen:?}")));
        }
        let num = big_integer(field(t, &p, "num")?, &child(&p, "num"))?;
        let den = match opt_field(t, "den") {
            Some(d) => big_integer(d, &child(&p, "den"))?,
            None => BigInt::from(1),
        };
        if den.is_zero() {
            return Err(err(&child(&p, "den"), "zero denominator"));
        }
        terms.push((gen.to_string(), BigRational::new(num, den)));
    }
    let refs: Vec<(&str, BigRational)> = terms.iter().map(|(g, q)| (g.as_str(), q.clone())).collect();
    ctx.scalar(&refs).map_err(|e| err(pointer, e.to_string()))
}

pub fn scalar_json(ctx: &GeneratorContext, s: &RealScalar) -> Value {
    Value::Array(
        s.coeffs()
            .iter()
            .map(|(g, q)| json!({"gen": ctx.generators()[*g].name, "num": big_json(q.numer()), "den": big_json(q.denom())}))
            .collect(),
    )
}

pub fn parse_frequency(ctx: &GeneratorContext, v: &Value, pointer: &str) -> Result<Frequency, SchemaError> {
    let p = child(pointer, "coords");
    let coords = array(field(v, pointer, "coords")?, &p)?;
    let comps = coords.iter().enumerate().map(|(i, c)| parse_scalar(ctx, c, &index(&p, i))).collect::<Result<Vec<_>, _>>()?;
    Ok(ctx.frequency(comps))
}

pub fn frequency_json(f: &Frequency) -> Value {
    json!({"coords": f.components().iter().map(|s| scalar_json(f.context(), s)).collect::<Vec<_>>(), "approx": f.approx()})
}

fn parse_frequency_list(ctx: &GeneratorContext, v: &Value, pointer: &str) -> Result<Vec<Frequency>, SchemaError> {
    array(v, pointer)?.iter().enumerate().map(|(i, f)| parse_frequency(ctx, f, &index(pointer, i))).collect()
}

fn dim_of(freqs: &[Frequency], pointer: &str) -> Result<usize, SchemaError> {
    let dim = freqs.first().map(Frequency::dim).ok_or_else(|| err(pointer, "expected at least one frequency"))?;
    if let Some(i) = freqs.iter().position(|f| f.dim() != dim) {
        return Err(err(&index(pointer, i), format!("dimension {} differs from {dim}", freqs[i].dim())));
    }
    Ok(dim)
}

pub fn parse_class(ctx: &GeneratorContext, dim: Option<usize>, v: &Value, pointer: &str) -> Result<ChernClass, SchemaError> {
    let bp = child(pointer, "basis");
    let basis = parse_frequency_list(ctx, field(v, pointer, "basis")?, &bp)?;
    let mp = child(pointer, "matrix");
    let rows = array(field(v, pointer, "matrix")?, &mp)?;
    let mut matrix = Vec::with_capacity(rows.len());
    for (i, r) in rows.iter().enumerate() {
        let rp = index(&mp, i);
        matrix.push(array(r, &rp)?.iter().enumerate().map(|(j, x)| big_integer(x, &index(&rp, j))).collect::<Result<Vec<_>, _>>()?);
    }
    let dim = match (basis.is_empty(), dim) {
        (false, _) => dim_of(&basis, &bp)?,
        (true, Some(d)) => d,
        (true, None) => match opt_field(v, "dim") {
            Some(d) => integer(d, &child(pointer, "dim"))? as usize,
            None => return Err(err(&child(pointer, "dim"), "an empty basis needs \"dim\"")),
        },
    };
    ChernClass::from_parts(ctx, dim, basis, matrix).map_err(|e| err(pointer, e.to_string()))
}

pub fn class_json(c: &ChernClass) -> Value {
    json!({
        "dim": c.dim(),
        "basis": c.basis().iter().map(frequency_json).collect::<Vec<_>>(),
        "matrix": c.matrix().iter().map(|r| r.iter().map(big_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

pub fn parse_pairs(ctx: &GeneratorContext, v: &Value, pointer: &str) -> Result<Vec<WedgePair>, SchemaError> {
    let mut out = Vec::new();
    for (i, p) in array(v, pointer)?.iter().enumerate() {
        let pp = index(pointer, i);
        let lambda = parse_frequency(ctx, field(p, &pp, "lambda")?, &child(&pp, "lambda"))?;
        let mu = parse_frequency(ctx, field(p, &pp, "mu")?, &child(&pp, "mu"))?;
        let multiplicity = match opt_field(p, "multiplicity") {
            Some(k) => big_integer(k, &child(&pp, "multiplicity"))?,
            None => BigInt::from(1),
        };
        if lambda.dim() != mu.dim() {
            return Err(err(&child(&pp, "mu"), "dimension differs from lambda"));
        }
        out.push(WedgePair { lambda, mu, multiplicity });
    }
    Ok(out)
}

pub fn pair_json(p: &WedgePair) -> Value {
    json!({"lambda": frequency_json(&p.lambda), "mu": frequency_json(&p.mu), "multiplicity": big_json(&p.multiplicity)})
}

pub fn parse_complex(v: &Value, pointer: &str) -> Result<Complex64, SchemaError> {
    let re = match opt_field(v, "re") {
        Some(x) => number(x, &child(pointer, "re"))?,
        None => 0.0,
    };
    let im = match opt_field(v, "im") {
        Some(x) => number(x, &child(pointer, "im"))?,
        None => 0.0,
    };
    if !v.is_object() {
        return Err(err(pointer, "expected {\"re\", \"im\"}"));
    }
    Ok(Complex64::new(re, im))
}

pub fn complex_json(z: Complex64) -> Value {
    json!({"re": z.re, "im": z.im})
}

pub fn parse_complex_vec(v: &Value, pointer: &str) -> Result<Vec<Complex64>, SchemaError> {
    array(v, pointer)?.iter().enumerate().map(|(i, z)| parse_complex(z, &index(pointer, i))).collect()
}

pub fn parse_expsum(ctx: &GeneratorContext, v: &Value, pointer: &str) -> Result<ExpSum, SchemaError> {
    let tp = child(pointer, "terms");
    let mut terms = Vec::new();
    for (i, t) in array(field(v, pointer, "terms")?, &tp)?.iter().enumerate() {
        let p = index(&tp, i);
        let c = parse_complex(t, &p)?;
        terms.push((c, parse_frequency(ctx, field(t, &p, "freq")?, &child(&p, "freq"))?));
    }
    let dim = match opt_field(v, "dim") {
        Some(d) => integer(d, &child(pointer, "dim"))? as usize,
        None => terms.first().map(|(_, f)| f.dim()).ok_or_else(|| err(&tp, "empty sum needs \"dim\""))?,
    };
    ExpSum::new(ctx, dim, terms).map_err(|e| err(pointer, e.to_string()))
}

pub fn expsum_json(f: &ExpSum) -> Value {
    json!({
        "dim": f.dim(),
        "terms": f.terms().iter().map(|(c, l)| json!({"re": c.re, "im": c.im, "freq": frequency_json(l)})).collect::<Vec<_>>(),
    })
}

fn parse_int_vec(v: &Value, pointer: &str) -> Result<Vec<i64>, SchemaError> {
    array(v, pointer)?.iter().enumerate().map(|(i, x)| integer(x, &index(pointer, i))).collect()
}

pub fn parse_trig(v: &Value, pointer: &str, n: usize) -> Result<TrigPolyW, SchemaError> {
    let tp = child(pointer, "terms");
    let mut terms = Vec::new();
    for (i, t) in array(field(v, pointer, "terms")?, &tp)?.iter().enumerate() {
        let p = index(&tp, i);
        let c = parse_complex(t, &p)?;
        let k = parse_int_vec(field(t, &p, "k")?, &child(&p, "k"))?;
        if k.len() != n {
            return Err(err(&child(&p, "k"), format!("expected {n} entries")));
        }
        terms.push((c, k));
    }
    TrigPolyW::new(n, terms).map_err(|e| err(pointer, e.to_string()))
}

pub fn trig_json(t: &TrigPolyW) -> Value {
    json!({"terms": t.terms().iter().map(|(c, k)| json!({"re": c.re, "im": c.im, "k": k})).collect::<Vec<_>>()})
}

fn parse_factor(v: &Value, pointer: &str) -> Result<SigmaFactor, SchemaError> {
    let u = parse_int_vec(field(v, pointer, "u")?, &child(pointer, "u"))?;
    let w = parse_int_vec(field(v, pointer, "v")?, &child(pointer, "v"))?;
    let shift = match opt_field(v, "shift") {
        Some(s) => parse_complex(s, &child(pointer, "shift"))?,
        None => Complex64::new(0.0, 0.0),
    };
    Ok(SigmaFactor::new(u, w, shift))
}

fn factor_json(f: &SigmaFactor) -> Value {
    json!({"u": f.u, "v": f.v, "shift": complex_json(f.shift)})
}

/// `{"Lambda": [...], "factors": [...], "trig": {...}}`; `lambda` is used
/// when the object has no `Lambda` of its own.
pub fn parse_function_spec(
    ctx: &GeneratorContext,
    lambda: Option<&[Frequency]>,
    v: &Value,
    pointer: &str,
) -> Result<PeriodicFunctionSpec, SchemaError> {
    let own;
    let lambda = match opt_field(v, "Lambda") {
        Some(l) => {
            own = parse_frequency_list(ctx, l, &child(pointer, "Lambda"))?;
            own.as_slice()
        }
        None => lambda.ok_or_else(|| err(&child(pointer, "Lambda"), "missing field"))?,
    };
    let n = lambda.len();
    let mut factors = Vec::new();
    if let Some(fs) = opt_field(v, "factors") {
        let fp = child(pointer, "factors");
        for (i, f) in array(fs, &fp)?.iter().enumerate() {
            let p = index(&fp, i);
            let factor = parse_factor(f, &p)?;
            if factor.u.len() != n || factor.v.len() != n {
                return Err(err(&p, format!("u and v need {n} entries")));
            }
            factors.push(factor);
        }
    }
    let trig = match opt_field(v, "trig") {
        Some(t) => Some(parse_trig(t, &child(pointer, "trig"), n)?),
        None => None,
    };
    PeriodicFunctionSpec::new(lambda.to_vec(), factors, trig).map_err(|e| err(pointer, e.to_string()))
}

pub fn function_spec_json(s: &PeriodicFunctionSpec) -> Value {
    let mut obj = Map::new();
    obj.insert("Lambda".into(), Value::Array(s.lambda().iter().map(frequency_json).collect()));
    obj.insert("factors".into(), Value::Array(s.factors().iter().map(factor_json).collect()));
    if let Some(t) = s.trig() {
        obj.insert("trig".into(), trig_json(t));
    }
    Value::Object(obj)
}

pub fn parse_divisor(ctx: &GeneratorContext, v: &Value, pointer: &str) -> Result<DivisorSpec, SchemaError> {
    let lambda = match opt_field(v, "Lambda") {
        Some(l) => Some(parse_frequency_list(ctx, l, &child(pointer, "Lambda"))?),
        None => None,
    };
    let cp = child(pointer, "components");
    let mut components = Vec::new();
    for (i, c) in array(field(v, pointer, "components")?, &cp)?.iter().enumerate() {
        let p = index(&cp, i);
        let weight = match opt_field(c, "weight") {
            Some(w) => integer(w, &child(&p, "weight"))?,
            None => 1,
        };
        if weight == 0 {
            return Err(err(&child(&p, "weight"), "weight must be nonzero"));
        }
        let spec = parse_function_spec(ctx, lambda.as_deref(), c, &p)?;
        components.push(DivisorComponent { spec, weight });
    }
    let dim = match (&lambda, components.first(), opt_field(v, "dim")) {
        (_, _, Some(d)) => integer(d, &child(pointer, "dim"))? as usize,
        (Some(l), _, None) => dim_of(l, &child(pointer, "Lambda"))?,
        (None, Some(c), None) => c.spec.dim(),
        (None, None, None) => return Err(err(&child(pointer, "dim"), "an empty divisor needs \"dim\" or \"Lambda\"")),
    };
    DivisorSpec::new(ctx, dim, components).map_err(|e| err(pointer, e.to_string()))
}

pub fn divisor_json(d: &DivisorSpec) -> Value {
    json!({
        "dim": d.dim(),
        "components": d
            .components()
            .iter()
            .map(|c| {
                let mut v = function_spec_json(&c.spec);
                v["weight"] = json!(c.weight);
                v
            })
            .collect::<Vec<_>>(),
    })
}

/// A complete problem document around a payload.
pub fn document(ctx: &GeneratorContext, kind: &str, payload: Value) -> Value {
    let mut obj = Map::new();
    obj.insert("version".into(), json!(VERSION));
    obj.insert("generators".into(), generators_json(ctx));
    obj.insert("kind".into(), json!(kind));
    if let Value::Object(p) = payload {
        obj.extend(p);
    }
    Value::Object(obj)
}
