//! Series serialization, LaTeX and text rendering, and the result cache.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::git::{format_degree, SectorLabel};
use crate::model::{get_int_vec, get_rational_vec, value_to_rational, GlsmModel};
use crate::poly::{Mono, Poly};
use crate::scalar::{format_rational, Cyclotomic, ExactScalar, Rational};
use crate::series::{Engine, GradedSeries, InsertionSet, LaurentZ, SeriesState, TermKey};

pub const ENGINE_VERSION: &str = env!("CARGO_PKG_VERSION");

// ---------------------------------------------------------------------------
// JSON

pub fn scalar_to_json(s: &ExactScalar) -> Value {
    match s {
        ExactScalar::Rational(q) => Value::String(format_rational(q)),
        ExactScalar::Cyclotomic(c) => json!({
            "root_order": c.order(),
            "coeffs": c.coeffs().iter().map(format_rational).collect::<Vec<_>>(),
        }),
    }
}

pub fn scalar_from_json(v: &Value) -> Result<ExactScalar> {
    match v {
        Value::Object(obj) => {
            let order = obj
                .get("root_order")
                .and_then(Value::as_u64)
                .filter(|&n| n > 0)
                .ok_or_else(|| Error::Schema("\"root_order\" must be a positive integer".into()))?;
            let coeffs = get_rational_vec(obj.get("coeffs"), "coeffs")?;
            Ok(ExactScalar::Cyclotomic(Cyclotomic::new(order, coeffs)))
        }
        other => Ok(ExactScalar::Rational(value_to_rational(other, "coefficient")?)),
    }
}

fn poly_to_json(p: &Poly) -> Value {
    let map: Map<String, Value> = p.terms().map(|(m, c)| (m.name(), scalar_to_json(c))).collect();
    Value::Object(map)
}

fn laurent_to_json(v: &LaurentZ) -> Value {
    let map: Map<String, Value> = v.coeffs().iter().map(|(e, p)| (e.to_string(), poly_to_json(p))).collect();
    Value::Object(map)
}

fn strings(d: &[Rational]) -> Vec<String> {
    d.iter().map(format_rational).collect()
}

pub fn series_to_json(s: &GradedSeries) -> Value {
    let terms: Vec<Value> = s
        .terms
        .iter()
        .map(|(k, v)| {
            json!({
                "degree": strings(&k.degree),
                "theta_degree": format_rational(&k.theta_degree),
                "sector_lambda": v.sector().to_strings(),
                "t_exponent": k.t_exponent,
                "z": laurent_to_json(v),
            })
        })
        .collect();
    json!({
        "state": s.state.as_str(),
        "model": s.model.to_json(),
        "model_hash": s.model.hash(),
        "insertions": s.insertions.to_json(),
        "hat_i": s.hat_i.iter().map(|i| i + 1).collect::<Vec<_>>(),
        "twist": s.twist,
        "derivative": s.derivative,
        "vanishing": s.vanishing.iter().map(|d| strings(d)).collect::<Vec<_>>(),
        "truncation": {"q_bound": format_rational(&s.q_bound), "t_order": s.t_order},
        "terms": terms,
    })
}

/// Pretty JSON with sorted keys and a trailing newline.
pub fn series_to_string(s: &GradedSeries) -> String {
    let mut out = serde_json::to_string_pretty(&series_to_json(s)).expect("values serialize");
    out.push('\n');
    out
}

fn int_rows(v: Option<&Value>, key: &str) -> Result<Vec<Vec<i64>>> {
    match v {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(rows)) => rows.iter().map(|r| get_int_vec(Some(r), key)).collect(),
        Some(_) => Err(Error::Schema(format!("\"{key}\" must be an array"))),
    }
}

pub fn series_from_json(v: &Value) -> Result<GradedSeries> {
    let obj = v.as_object().ok_or_else(|| Error::Schema("series must be a JSON object".into()))?;
    let model = GlsmModel::from_json(obj.get("model").ok_or_else(|| Error::Schema("series lacks \"model\"".into()))?)?;
    if let Some(h) = obj.get("model_hash").and_then(Value::as_str) {
        if h != model.hash() {
            return Err(Error::Schema("model_hash does not match the embedded model".into()));
        }
    }
    let state = match obj.get("state").and_then(Value::as_str) {
        Some("ambient") => SeriesState::Ambient,
        Some("glsm") => SeriesState::Glsm,
        _ => return Err(Error::Schema("\"state\" must be \"ambient\" or \"glsm\"".into())),
    };
    let insertions = match obj.get("insertions") {
        None | Some(Value::Null) => InsertionSet::new(),
        Some(x) => InsertionSet::from_json(x)?,
    };
    let hat_i = match obj.get("hat_i") {
        None | Some(Value::Null) => Vec::new(),
        Some(x) => get_int_vec(Some(x), "hat_i")?
            .into_iter()
            .map(|i| if i >= 1 && (i as usize) <= model.r { Ok(i as usize - 1) } else { Err(Error::Schema(format!("hat_i entry {i} out of range"))) })
            .collect::<Result<_>>()?,
    };
    let twist = int_rows(obj.get("twist"), "twist")?;
    let derivative = int_rows(obj.get("derivative"), "derivative")?;
    let vanishing = match obj.get("vanishing") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::Array(rows)) => rows.iter().map(|r| get_rational_vec(Some(r), "vanishing")).collect::<Result<_>>()?,
        Some(_) => return Err(Error::Schema("\"vanishing\" must be an array".into())),
    };
    let trunc = obj.get("truncation").and_then(Value::as_object).ok_or_else(|| Error::Schema("series lacks \"truncation\"".into()))?;
    let q_bound = value_to_rational(trunc.get("q_bound").unwrap_or(&Value::Null), "q_bound")?;
    let t_order = trunc
        .get("t_order")
        .and_then(Value::as_u64)
        .and_then(|t| u32::try_from(t).ok())
        .ok_or_else(|| Error::Schema("\"t_order\" must be a nonnegative integer".into()))?;

    let engine = Engine::new(&model)?;
    let mut terms = BTreeMap::new();
    let items = obj.get("terms").and_then(Value::as_array).ok_or_else(|| Error::Schema("series lacks \"terms\"".into()))?;
    for t in items {
        let degree = get_rational_vec(t.get("degree"), "degree")?;
        if degree.len() != model.k {
            return Err(Error::DimensionMismatch(format!("degree has length {} but k = {}", degree.len(), model.k)));
        }
        let t_exponent: Vec<u32> = get_int_vec(t.get("t_exponent"), "t_exponent")?
            .into_iter()
            .map(|x| u32::try_from(x).map_err(|_| Error::Schema("negative t exponent".into())))
            .collect::<Result<_>>()?;
        if t_exponent.len() != insertions.len() {
            return Err(Error::DimensionMismatch("t_exponent length differs from the insertion count".into()));
        }
        let lambda = match t.get("sector_lambda") {
            None | Some(Value::Null) => crate::git::sector_of_degree(&degree),
            Some(x) => SectorLabel::new(get_rational_vec(Some(x), "sector_lambda")?),
        };
        let ring = engine.ring(&lambda)?;
        let z = t.get("z").and_then(Value::as_object).ok_or_else(|| Error::Schema("term lacks \"z\"".into()))?;
        let mut coeffs = BTreeMap::new();
        for (e, p) in z {
            let e: i64 = e.parse().map_err(|_| Error::Schema(format!("invalid z exponent {e:?}")))?;
            let monos = p.as_object().ok_or_else(|| Error::Schema("z coefficients must be objects".into()))?;
            let mut poly = Poly::zero(model.k);
            for (name, c) in monos {
                poly.add_term(Mono::parse(name, model.k)?, &scalar_from_json(c)?);
            }
            coeffs.insert(e, poly);
        }
        let theta_degree = model.theta_degree(&degree);
        terms.insert(TermKey { theta_degree, degree, t_exponent }, LaurentZ::from_coeffs(ring, coeffs));
    }
    Ok(GradedSeries { model, insertions, q_bound, t_order, state, hat_i, twist, derivative, vanishing, terms })
}

pub fn parse_series(text: &str) -> Result<GradedSeries> {
    let v: Value = serde_json::from_str(text).map_err(Error::from_json)?;
    series_from_json(&v)
}

// ---------------------------------------------------------------------------
// LaTeX and text

fn latex_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        let sign = if q.numer().sign() == num_bigint::Sign::Minus { "-" } else { "" };
        format!("{sign}\\frac{{{}}}{{{}}}", q.numer().magnitude(), q.denom())
    }
}

fn latex_mono(m: &Mono) -> String {
    if m.is_one() {
        return String::new();
    }
    let single = m.0.len() == 1;
    m.0.iter()
        .enumerate()
        .filter(|(_, &e)| e > 0)
        .map(|(a, &e)| {
            let v = if single { "H".to_string() } else { format!("H_{{{}}}", a + 1) };
            if e == 1 {
                v
            } else {
                format!("{v}^{{{e}}}")
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// `(negative, body)` for one `c·m`, with unit coefficients suppressed.
fn latex_term(c: &ExactScalar, m: &Mono) -> (bool, String) {
    let mono = latex_mono(m);
    match c {
        ExactScalar::Rational(q) => {
            let neg = q.numer().sign() == num_bigint::Sign::Minus;
            let a = if neg { -q.clone() } else { q.clone() };
            let body = if mono.is_empty() {
                latex_rational(&a)
            } else if a == Rational::from_integer(1.into()) {
                mono
            } else {
                format!("{}{mono}", latex_rational(&a))
            };
            (neg, body)
        }
        ExactScalar::Cyclotomic(cy) => {
            let n = cy.order();
            let parts: Vec<(bool, String)> = cy
                .coeffs()
                .iter()
                .enumerate()
                .filter(|(_, q)| !num_traits::Zero::is_zero(*q))
                .map(|(i, q)| {
                    let zeta = match i {
                        0 => String::new(),
                        1 => format!("\\zeta_{{{n}}}"),
                        _ => format!("\\zeta_{{{n}}}^{{{i}}}"),
                    };
                    let (neg, b) = latex_term(&ExactScalar::Rational(q.clone()), &Mono::one(0));
                    if zeta.is_empty() {
                        (neg, b)
                    } else if b == "1" {
                        (neg, zeta)
                    } else {
                        (neg, format!("{b}{zeta}"))
                    }
                })
                .collect();
            (false, format!("\\left({}\\right){mono}", join_signed(&parts)))
        }
    }
}

fn join_signed(parts: &[(bool, String)]) -> String {
    let mut out = String::new();
    for (i, (neg, body)) in parts.iter().enumerate() {
        match (i, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str(" - "),
            (_, false) => out.push_str(" + "),
        }
        out.push_str(body);
    }
    out
}

fn latex_poly(p: &Poly) -> Vec<(bool, String)> {
    p.terms().map(|(m, c)| latex_term(c, m)).collect()
}

fn latex_laurent(v: &LaurentZ) -> String {
    let mut parts = Vec::new();
    for (&e, p) in v.coeffs().iter().rev() {
        let z = match e {
            0 => String::new(),
            1 => "z".to_string(),
            _ => format!("z^{{{e}}}"),
        };
        let terms = latex_poly(p);
        if z.is_empty() {
            parts.extend(terms);
        } else if terms.len() == 1 {
            let (neg, body) = &terms[0];
            let body = if body == "1" { z } else { format!("{body} {z}") };
            parts.push((*neg, body));
        } else {
            parts.push((false, format!("\\left({}\\right) {z}", join_signed(&terms))));
        }
    }
    join_signed(&parts)
}

fn latex_lambda(g: &SectorLabel) -> String {
    g.lambda().iter().map(latex_rational).collect::<Vec<_>>().join(",")
}

fn latex_monomial_prefix(key: &TermKey, names: &[String]) -> String {
    let mut parts = Vec::new();
    let single = key.degree.len() == 1;
    for (a, d) in key.degree.iter().enumerate() {
        if num_traits::Zero::is_zero(d) {
            continue;
        }
        let q = if single { "q".to_string() } else { format!("q_{{{}}}", a + 1) };
        if *d == Rational::from_integer(1.into()) {
            parts.push(q);
        } else {
            parts.push(format!("{q}^{{{}}}", latex_rational(d)));
        }
    }
    for (name, &e) in names.iter().zip(&key.t_exponent) {
        match e {
            0 => {}
            1 => parts.push(name.clone()),
            _ => parts.push(format!("{name}^{{{e}}}")),
        }
    }
    parts.join("\\,")
}

/// One summand per line, in the order of the JSON terms.
pub fn render_latex(s: &GradedSeries) -> String {
    let names = s.insertions.names();
    let mut lines: Vec<(bool, String)> = Vec::new();
    for (key, v) in &s.terms {
        let prefix = latex_monomial_prefix(key, &names);
        let unit = format!("\\mathbb{{1}}_{{({})}}", latex_lambda(v.sector()));
        let coeff = latex_laurent(v);
        let (neg, body) = if coeff == "1" {
            (false, String::new())
        } else if coeff == "-1" {
            (true, String::new())
        } else {
            (false, format!("\\left({coeff}\\right)"))
        };
        let body = [prefix, body, unit].into_iter().filter(|x| !x.is_empty()).collect::<Vec<_>>().join("\\,");
        lines.push((neg, body));
    }
    if lines.is_empty() {
        return "0\n".into();
    }
    let mut out = String::new();
    for (i, (neg, body)) in lines.iter().enumerate() {
        match (i, neg) {
            (0, true) => out.push('-'),
            (0, false) => {}
            (_, true) => out.push_str("\n- "),
            (_, false) => out.push_str("\n+ "),
        }
        out.push_str(body);
    }
    out.push('\n');
    out
}

/// Plain listing: one line per term.
pub fn render_text(s: &GradedSeries) -> String {
    let mut out = format!(
        "{} series, q_bound {}, t_order {}, {} terms\n",
        s.state.as_str(),
        format_rational(&s.q_bound),
        s.t_order,
        s.terms.len()
    );
    for (key, v) in &s.terms {
        out.push_str(&format!(
            "d=({}) theta={} t={:?} sector=({}): {}\n",
            format_degree(&key.degree).join(", "),
            format_rational(&key.theta_degree),
            key.t_exponent,
            v.sector().to_strings().join(", "),
            v
        ));
    }
    out
}

// ---------------------------------------------------------------------------
// cache

/// Content hash of everything that determines a command's output.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct JobKey(String);

impl JobKey {
    pub fn new(model: &GlsmModel, command: &str, q_bound: &Rational, t_order: u32, insertions: &InsertionSet, extra: &Value) -> JobKey {
        let payload = json!({
            "model": model.to_json(),
            "command": command,
            "truncation": {"q_bound": format_rational(q_bound), "t_order": t_order},
            "insertions": insertions.to_json(),
            "extra": extra,
            "version": ENGINE_VERSION,
        });
        JobKey(hex::encode(Sha256::digest(payload.to_string().as_bytes())))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Directory of `<key>.json` artifacts written atomically.
#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl Cache {
    pub fn new(dir: impl Into<PathBuf>) -> Cache {
        Cache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &JobKey) -> PathBuf {
        self.dir.join(format!("{}.json", key.as_str()))
    }

    pub fn get(&self, key: &JobKey) -> Option<String> {
        fs::read_to_string(self.path(key)).ok()
    }

    pub fn put(&self, key: &JobKey, content: &str) -> Result<()> {
        fs::create_dir_all(&self.dir)?;
        let n = TMP_COUNTER.fetch_add(1, Ordering::Relaxed);
        let tmp = self.dir.join(format!(".{}.{}.{n}.tmp", key.as_str(), std::process::id()));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(content.as_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, self.path(key))?;
        Ok(())
    }
}
