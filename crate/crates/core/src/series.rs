//! Laurent series in `z` over sector rings, insertion data, and assembly of
//! big and GLSM I-functions together with the operators acting on them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::git::{effective_degrees_from, inertia_sectors_from, semistable_supports, sector_of_degree, Degree, SectorLabel, SupportSet};
use crate::model::{invariants_trivial, GlsmModel, InvariantCertificate, InvariantCheck};
use crate::poly::{Mono, Poly};
use crate::ring::{build_ring_from, divides_ideal, CohClass, SectorRing};
use crate::scalar::{format_rational, int, parse_rational, ExactScalar, Rational};

/// A Laurent polynomial in `z` with coefficients in one sector ring, stored
/// in normal form without zero coefficients.
#[derive(Clone, Debug)]
pub struct LaurentZ {
    ring: Arc<SectorRing>,
    coeffs: BTreeMap<i64, Poly>,
}

impl PartialEq for LaurentZ {
    fn eq(&self, other: &Self) -> bool {
        self.ring.compatible(&other.ring) && self.coeffs == other.coeffs
    }
}

impl LaurentZ {
    pub fn zero(ring: &Arc<SectorRing>) -> Self {
        LaurentZ { ring: ring.clone(), coeffs: BTreeMap::new() }
    }

    pub fn one(ring: &Arc<SectorRing>) -> Self {
        LaurentZ::monomial(ring, 0, &Poly::one(ring.k))
    }

    pub fn monomial(ring: &Arc<SectorRing>, exp: i64, class: &Poly) -> Self {
        let mut out = LaurentZ::zero(ring);
        out.add_at(exp, class);
        out
    }

    pub fn from_coeffs(ring: &Arc<SectorRing>, coeffs: BTreeMap<i64, Poly>) -> Self {
        let mut out = LaurentZ::zero(ring);
        for (e, p) in coeffs {
            out.add_at(e, &p);
        }
        out
    }

    /// `class + a z`.
    pub fn linear(ring: &Arc<SectorRing>, class: &Poly, a: &Rational) -> Self {
        let mut out = LaurentZ::monomial(ring, 0, class);
        out.add_at(1, &Poly::constant(ring.k, a.clone().into()));
        out
    }

    /// `(class + a z)^{-1}` for nilpotent `class` and `a ≠ 0`.
    pub fn inverse_linear(ring: &Arc<SectorRing>, class: &Poly, a: &Rational) -> Result<Self> {
        if a.is_zero() {
            return Err(Error::Internal("denominator factor with zero z-coefficient".into()));
        }
        let mut out = LaurentZ::zero(ring);
        let mut power = ring.normal_form(&Poly::one(ring.k));
        let inv = a.recip();
        let mut scale = inv.clone();
        let mut j = 0i64;
        while !power.is_zero() {
            out.add_at(-j - 1, &power.scale(&scale.clone().into()));
            power = ring.normal_form(&power.mul(class));
            scale = -(scale * &inv);
            j += 1;
            if j as u32 > ring.top_degree() + 1 {
                return Err(Error::Internal("linear class is not nilpotent".into()));
            }
        }
        Ok(out)
    }

    fn add_at(&mut self, exp: i64, class: &Poly) {
        let nf = self.ring.normal_form(class);
        if nf.is_zero() {
            return;
        }
        let sum = match self.coeffs.remove(&exp) {
            Some(p) => p.add(&nf),
            None => nf,
        };
        if !sum.is_zero() {
            self.coeffs.insert(exp, sum);
        }
    }

    pub fn ring(&self) -> &Arc<SectorRing> {
        &self.ring
    }

    pub fn sector(&self) -> &SectorLabel {
        &self.ring.sector
    }

    pub fn coeffs(&self) -> &BTreeMap<i64, Poly> {
        &self.coeffs
    }

    pub fn coefficient(&self, exp: i64) -> CohClass {
        match self.coeffs.get(&exp) {
            Some(p) => CohClass::new(&self.ring, p),
            None => CohClass::zero(&self.ring),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn compatible(&self, other: &LaurentZ) -> bool {
        Arc::ptr_eq(&self.ring, &other.ring) || self.ring.compatible(&other.ring)
    }

    pub fn add(&self, other: &LaurentZ) -> LaurentZ {
        debug_assert!(self.compatible(other));
        let mut out = self.clone();
        for (e, p) in &other.coeffs {
            let sum = match out.coeffs.remove(e) {
                Some(q) => q.add(p),
                None => p.clone(),
            };
            if !sum.is_zero() {
                out.coeffs.insert(*e, sum);
            }
        }
        out
    }

    pub fn sub(&self, other: &LaurentZ) -> LaurentZ {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> LaurentZ {
        LaurentZ { ring: self.ring.clone(), coeffs: self.coeffs.iter().map(|(e, p)| (*e, p.neg())).collect() }
    }

    pub fn scale(&self, s: &ExactScalar) -> LaurentZ {
        if s.is_zero() {
            return LaurentZ::zero(&self.ring);
        }
        LaurentZ { ring: self.ring.clone(), coeffs: self.coeffs.iter().map(|(e, p)| (*e, p.scale(s))).collect() }
    }

    /// Multiplies by `z^n`.
    pub fn shift(&self, n: i64) -> LaurentZ {
        LaurentZ { ring: self.ring.clone(), coeffs: self.coeffs.iter().map(|(e, p)| (e + n, p.clone())).collect() }
    }

    pub fn mul(&self, other: &LaurentZ) -> LaurentZ {
        debug_assert!(self.compatible(other));
        let mut raw: BTreeMap<i64, Poly> = BTreeMap::new();
        for (e, p) in &self.coeffs {
            for (f, q) in &other.coeffs {
                let entry = raw.entry(e + f).or_insert_with(|| Poly::zero(self.ring.k));
                *entry = entry.add(&p.mul(q));
            }
        }
        LaurentZ::from_coeffs(&self.ring, raw)
    }

    pub fn pow(&self, n: u32) -> LaurentZ {
        (0..n).fold(LaurentZ::one(&self.ring), |acc, _| acc.mul(self))
    }
}

impl fmt::Display for LaurentZ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .map(|(e, p)| match e {
                0 => format!("({p})"),
                _ => format!("({p})*z^{e}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

// ---------------------------------------------------------------------------
// insertions

/// One formal variable `t^j` with its polynomial `p_j` in the shared characters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Insertion {
    pub name: String,
    /// `(coefficient, exponents over the shared η list)`.
    pub terms: Vec<(Rational, Vec<u32>)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InsertionSet {
    pub eta: Vec<Vec<i64>>,
    pub items: Vec<Insertion>,
}

impl InsertionSet {
    pub fn new() -> Self {
        InsertionSet::default()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn names(&self) -> Vec<String> {
        self.items.iter().map(|i| i.name.clone()).collect()
    }

    fn eta_index(&mut self, xi: &[i64]) -> usize {
        if let Some(pos) = self.eta.iter().position(|e| e == xi) {
            return pos;
        }
        self.eta.push(xi.to_vec());
        for item in &mut self.items {
            for (_, e) in &mut item.terms {
                e.push(0);
            }
        }
        self.eta.len() - 1
    }

    fn push(&mut self, name: &str, terms: Vec<(Rational, Vec<Vec<i64>>, Vec<u32>)>) -> Result<()> {
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') || name.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(Error::Insertion(format!("invalid variable name {name:?}")));
        }
        if self.items.iter().any(|i| i.name == name) {
            return Err(Error::Insertion(format!("duplicate variable {name}")));
        }
        let mut resolved = Vec::new();
        for (c, chars, pows) in terms {
            let idx: Vec<usize> = chars.iter().map(|xi| self.eta_index(xi)).collect();
            let mut e = vec![0u32; self.eta.len()];
            for (i, p) in idx.into_iter().zip(pows) {
                e[i] += p;
            }
            resolved.push((c, e));
        }
        let mut merged: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (c, e) in resolved {
            *merged.entry(e).or_insert_with(Rational::zero) += c;
        }
        let terms = merged.into_iter().filter(|(_, c)| !c.is_zero()).map(|(e, c)| (c, e)).collect();
        self.items.push(Insertion { name: name.into(), terms });
        Ok(())
    }

    /// Parses `NAME=POLY` where `POLY` is a sum of products of rationals and
    /// characters written `[a1,…,ak]` or `rhoN`.
    pub fn parse(specs: &[String], m: &GlsmModel) -> Result<Self> {
        let mut set = InsertionSet::new();
        for spec in specs {
            set.add_spec(spec, m)?;
        }
        Ok(set)
    }

    pub fn add_spec(&mut self, spec: &str, m: &GlsmModel) -> Result<()> {
        let (name, poly) = spec.split_once('=').ok_or_else(|| Error::Insertion(format!("expected NAME=POLY, got {spec:?}")))?;
        let terms = InsertionParser { chars: poly.chars().collect(), pos: 0, m }.parse()?;
        self.push(name.trim(), terms)
    }

    /// Appends `name = Π chars`.
    pub fn push_product(&mut self, name: &str, chars: &[Vec<i64>]) -> Result<()> {
        let pows = vec![1; chars.len()];
        self.push(name, vec![(Rational::one(), chars.to_vec(), pows)])
    }

    pub fn to_json(&self) -> Value {
        json!({
            "eta": self.eta,
            "polys": self.items.iter().map(|it| json!({
                "name": it.name,
                "terms": it.terms.iter().map(|(c, e)| json!({"coeff": format_rational(c), "exponents": e})).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let bad = |msg: &str| Error::Schema(format!("insertions: {msg}"));
        let eta_v = v.get("eta").and_then(Value::as_array).ok_or_else(|| bad("missing eta"))?;
        let eta = eta_v.iter().map(|x| crate::model::get_int_vec(Some(x), "eta")).collect::<Result<Vec<_>>>()?;
        let polys = v.get("polys").and_then(Value::as_array).ok_or_else(|| bad("missing polys"))?;
        let mut items = Vec::new();
        for p in polys {
            let name = p.get("name").and_then(Value::as_str).ok_or_else(|| bad("missing name"))?.to_string();
            let terms_v = p.get("terms").and_then(Value::as_array).ok_or_else(|| bad("missing terms"))?;
            let mut terms = Vec::new();
            for t in terms_v {
                let c = parse_rational(t.get("coeff").and_then(Value::as_str).ok_or_else(|| bad("missing coeff"))?)?;
                let e: Vec<u32> = crate::model::get_int_vec(t.get("exponents"), "exponents")?.into_iter().map(|x| x as u32).collect();
                if e.len() != eta.len() {
                    return Err(bad("exponent length differs from eta"));
                }
                terms.push((c, e));
            }
            items.push(Insertion { name, terms });
        }
        Ok(InsertionSet { eta, items })
    }

    /// `name = poly` with characters written inline.
    pub fn describe(&self, idx: usize) -> String {
        let it = &self.items[idx];
        let body: Vec<String> = it
            .terms
            .iter()
            .map(|(c, e)| {
                let mut f = Vec::new();
                if !c.is_one() || e.iter().all(|&x| x == 0) {
                    f.push(format_rational(c));
                }
                for (s, &p) in e.iter().enumerate() {
                    let ch = format!("[{}]", self.eta[s].iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","));
                    match p {
                        0 => {}
                        1 => f.push(ch),
                        _ => f.push(format!("{ch}^{p}")),
                    }
                }
                f.join("*")
            })
            .collect();
        format!("{}={}", it.name, if body.is_empty() { "0".into() } else { body.join("+") })
    }
}

struct InsertionParser<'a> {
    chars: Vec<char>,
    pos: usize,
    m: &'a GlsmModel,
}

type ParsedTerm = (Rational, Vec<Vec<i64>>, Vec<u32>);

impl InsertionParser<'_> {
    fn err(&self, msg: &str) -> Error {
        Error::Insertion(format!("{msg} at position {}", self.pos))
    }

    fn peek(&mut self) -> Option<char> {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
        self.chars.get(self.pos).copied()
    }

    fn signed_int(&mut self) -> Result<i64> {
        let neg = if self.peek() == Some('-') {
            self.pos += 1;
            true
        } else {
            false
        };
        self.peek();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(char::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        let v: i64 = s.parse().map_err(|_| self.err("integer too large"))?;
        Ok(if neg { -v } else { v })
    }

    fn parse(mut self) -> Result<Vec<ParsedTerm>> {
        let mut out = Vec::new();
        let mut sign = Rational::one();
        match self.peek() {
            Some('-') => {
                sign = -sign;
                self.pos += 1;
            }
            Some('+') => self.pos += 1,
            None => return Err(self.err("empty polynomial")),
            _ => {}
        }
        loop {
            let (c, chars, pows) = self.term()?;
            out.push((c * &sign, chars, pows));
            match self.peek() {
                None => break,
                Some('+') => sign = Rational::one(),
                Some('-') => sign = -Rational::one(),
                Some(_) => return Err(self.err("expected '+' or '-'")),
            }
            self.pos += 1;
        }
        Ok(out)
    }

    fn term(&mut self) -> Result<ParsedTerm> {
        let mut coeff = Rational::one();
        let mut chars = Vec::new();
        let mut pows = Vec::new();
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_digit() => {
                    let n = self.signed_int()?;
                    if self.peek() == Some('/') {
                        self.pos += 1;
                        let d = self.signed_int()?;
                        if d <= 0 {
                            return Err(self.err("denominator must be positive"));
                        }
                        coeff *= Rational::new(n.into(), d.into());
                    } else {
                        coeff *= int(n);
                    }
                }
                Some('[') => {
                    self.pos += 1;
                    let mut xi = Vec::new();
                    loop {
                        xi.push(self.signed_int()?);
                        match self.peek() {
                            Some(',') => self.pos += 1,
                            Some(']') => {
                                self.pos += 1;
                                break;
                            }
                            _ => return Err(self.err("expected ',' or ']'")),
                        }
                    }
                    if xi.len() != self.m.k {
                        return Err(self.err(&format!("character has length {} but k = {}", xi.len(), self.m.k)));
                    }
                    chars.push(xi);
                    pows.push(self.power()?);
                }
                Some('r') => {
                    let rest: String = self.chars[self.pos..].iter().take(3).collect();
                    if rest != "rho" {
                        return Err(self.err("expected 'rho'"));
                    }
                    self.pos += 3;
                    let i = self.signed_int()?;
                    if i < 1 || i as usize > self.m.r {
                        return Err(self.err(&format!("rho index {i} out of range 1..{}", self.m.r)));
                    }
                    chars.push(self.m.column(i as usize - 1));
                    pows.push(self.power()?);
                }
                _ => return Err(self.err("expected a coefficient or character")),
            }
            if self.peek() == Some('*') {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok((coeff, chars, pows))
    }

    fn power(&mut self) -> Result<u32> {
        if self.peek() == Some('^') {
            self.pos += 1;
            let e = self.signed_int()?;
            return u32::try_from(e).map_err(|_| self.err("negative exponent"));
        }
        Ok(1)
    }
}

/// All `α ∈ N^n` with `|α| ≤ order`, in lexicographic order.
pub fn multi_exponents(n: usize, order: u32) -> Vec<Vec<u32>> {
    fn rec(n: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(n, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, order, &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// engine

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    Ambient,
    /// The GLSM ranges on the coordinates `hat_i`.
    Glsm { hat_i: Vec<usize> },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EngineOptions {
    /// Worker threads for degree evaluation; 0 uses the global pool.
    pub threads: usize,
}

/// A model with its semistable supports and frozen sector rings.
pub struct Engine {
    model: GlsmModel,
    supports: Vec<SupportSet>,
    rings: BTreeMap<SectorLabel, Arc<SectorRing>>,
}

impl Engine {
    pub fn new(m: &GlsmModel) -> Result<Engine> {
        let supports = semistable_supports(m)?;
        let sectors = inertia_sectors_from(m, &supports)?;
        let mut rings = BTreeMap::new();
        for g in sectors {
            let ring = build_ring_from(m, &supports, &g)?;
            rings.insert(g, ring);
        }
        Ok(Engine { model: m.clone(), supports, rings })
    }

    pub fn model(&self) -> &GlsmModel {
        &self.model
    }

    pub fn supports(&self) -> &[SupportSet] {
        &self.supports
    }

    pub fn rings(&self) -> &BTreeMap<SectorLabel, Arc<SectorRing>> {
        &self.rings
    }

    pub fn ring(&self, g: &SectorLabel) -> Result<&Arc<SectorRing>> {
        self.rings.get(g).ok_or_else(|| Error::EmptySector(g.to_strings()))
    }

    pub fn degree_ring(&self, d: &[Rational]) -> Result<&Arc<SectorRing>> {
        self.ring(&sector_of_degree(d))
    }

    pub fn effective_degrees(&self, bound: &Rational) -> Result<Vec<Degree>> {
        effective_degrees_from(&self.model, &self.supports, bound)
    }

    pub fn rho_class(&self, ring: &Arc<SectorRing>, xi: &[i64]) -> Poly {
        ring.normal_form(&Poly::linear(&xi.iter().map(|&x| int(x)).collect::<Vec<_>>()))
    }

    pub fn hyper_factor(&self, d: &[Rational], mode: &Mode) -> Result<LaurentZ> {
        let m = &self.model;
        let ring = self.degree_ring(d)?;
        let mut num = LaurentZ::one(ring);
        let mut dens: Vec<(Poly, Rational)> = Vec::new();
        for i in 0..m.r {
            let a = m.pairing(d, i);
            let rho = self.rho_class(ring, &m.column(i));
            let hat = matches!(mode, Mode::Glsm { hat_i } if hat_i.contains(&i));
            let ceil = a.ceil().to_integer().to_i64().ok_or_else(|| Error::Internal("degree too large".into()))?;
            let (num_range, den_range) = match (hat, a.is_positive(), a.is_negative()) {
                (true, false, _) => ((ceil, 0), (1, 0)),
                (true, true, _) => ((1, 0), (1, ceil - 1)),
                (false, _, true) => ((ceil, -1), (1, 0)),
                (false, true, _) => ((1, 0), (0, ceil - 1)),
                (false, false, false) => ((1, 0), (1, 0)),
            };
            for nu in num_range.0..=num_range.1 {
                num = num.mul(&LaurentZ::linear(ring, &rho, &(&a - int(nu))));
                if num.is_zero() {
                    return Ok(num);
                }
            }
            for nu in den_range.0..=den_range.1 {
                dens.push((rho.clone(), &a - int(nu)));
            }
        }
        for (rho, c) in dens {
            num = num.mul(&LaurentZ::inverse_linear(ring, &rho, &c)?);
        }
        Ok(num)
    }

    /// Coefficients of `t^α` in `exp(z^{-1} Σ_j t^j p_j(η + z⟨d,η⟩))`.
    pub fn exp_factor(&self, d: &[Rational], ins: &InsertionSet, t_order: u32) -> Result<Vec<(Vec<u32>, LaurentZ)>> {
        let ring = self.degree_ring(d)?;
        for xi in &ins.eta {
            if xi.len() != self.model.k {
                return Err(Error::DimensionMismatch(format!("insertion character {xi:?} has length {} but k = {}", xi.len(), self.model.k)));
            }
        }
        let shifted: Vec<LaurentZ> = ins
            .eta
            .iter()
            .map(|xi| LaurentZ::linear(ring, &self.rho_class(ring, xi), &GlsmModel::pair_character(d, xi)))
            .collect();
        let xs: Vec<LaurentZ> = ins
            .items
            .iter()
            .map(|it| {
                it.terms
                    .iter()
                    .fold(LaurentZ::zero(ring), |acc, (c, e)| {
                        let mono = e.iter().zip(&shifted).fold(LaurentZ::one(ring), |p, (&k, l)| p.mul(&l.pow(k)));
                        acc.add(&mono.scale(&c.clone().into()))
                    })
                    .shift(-1)
            })
            .collect();
        // X_j^n / n!
        let powers: Vec<Vec<LaurentZ>> = xs
            .iter()
            .map(|x| {
                let mut out = vec![LaurentZ::one(ring)];
                for n in 1..=t_order {
                    let next = out[n as usize - 1].mul(x).scale(&Rational::new(BigInt::one(), BigInt::from(n)).into());
                    out.push(next);
                }
                out
            })
            .collect();
        Ok(multi_exponents(ins.len(), t_order)
            .into_iter()
            .map(|alpha| {
                let v = alpha.iter().zip(&powers).fold(LaurentZ::one(ring), |acc, (&a, p)| acc.mul(&p[a as usize]));
                (alpha, v)
            })
            .collect())
    }

    pub fn series(&self, ins: &InsertionSet, q_bound: &Rational, t_order: u32, mode: &Mode, opts: EngineOptions) -> Result<GradedSeries> {
        let degrees = self.effective_degrees(q_bound)?;
        let per_degree = run_in_pool(opts.threads, || {
            degrees
                .par_iter()
                .map(|d| -> Result<(Degree, Option<Vec<(Vec<u32>, LaurentZ)>>)> {
                    let hf = self.hyper_factor(d, mode)?;
                    if hf.is_zero() {
                        return Ok((d.clone(), None));
                    }
                    let terms = self
                        .exp_factor(d, ins, t_order)?
                        .into_iter()
                        .map(|(alpha, e)| (alpha, e.mul(&hf)))
                        .filter(|(_, v)| !v.is_zero())
                        .collect();
                    Ok((d.clone(), Some(terms)))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let (state, hat_i) = match mode {
            Mode::Ambient => (SeriesState::Ambient, Vec::new()),
            Mode::Glsm { hat_i } => (SeriesState::Glsm, hat_i.clone()),
        };
        let mut terms = BTreeMap::new();
        let mut vanishing = Vec::new();
        for (d, entry) in per_degree {
            match entry {
                None => vanishing.push(d),
                Some(list) => {
                    let theta_degree = self.model.theta_degree(&d);
                    for (alpha, v) in list {
                        terms.insert(TermKey { theta_degree: theta_degree.clone(), degree: d.clone(), t_exponent: alpha }, v);
                    }
                }
            }
        }
        Ok(GradedSeries {
            model: self.model.clone(),
            insertions: ins.clone(),
            q_bound: q_bound.clone(),
            t_order,
            state,
            hat_i,
            twist: Vec::new(),
            derivative: Vec::new(),
            vanishing,
            terms,
        })
    }
}

pub(crate) fn run_in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        return f();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

pub fn hyper_factor(m: &GlsmModel, d: &[Rational], mode: &Mode) -> Result<LaurentZ> {
    Engine::new(m)?.hyper_factor(d, mode)
}

pub fn exp_factor(m: &GlsmModel, d: &[Rational], ins: &InsertionSet, t_order: u32) -> Result<Vec<(Vec<u32>, LaurentZ)>> {
    Engine::new(m)?.exp_factor(d, ins, t_order)
}

#[allow(non_snake_case)]
pub fn big_I(m: &GlsmModel, ins: &InsertionSet, q_bound: &Rational, t_order: u32) -> Result<GradedSeries> {
    big_I_with(m, ins, q_bound, t_order, EngineOptions::default())
}

#[allow(non_snake_case)]
pub fn big_I_with(m: &GlsmModel, ins: &InsertionSet, q_bound: &Rational, t_order: u32, opts: EngineOptions) -> Result<GradedSeries> {
    Engine::new(m)?.series(ins, q_bound, t_order, &Mode::Ambient, opts)
}

#[allow(non_snake_case)]
pub fn glsm_I(m: &GlsmModel, ins: &InsertionSet, q_bound: &Rational, t_order: u32) -> Result<GradedSeries> {
    glsm_I_with(m, ins, q_bound, t_order, None, EngineOptions::default())
}

/// `hat_i` defaults to the R-charged coordinates. Refuses when a nonconstant
/// invariant monomial lives on the complement of `hat_i`.
#[allow(non_snake_case)]
pub fn glsm_I_with(
    m: &GlsmModel,
    ins: &InsertionSet,
    q_bound: &Rational,
    t_order: u32,
    hat_i: Option<Vec<usize>>,
    opts: EngineOptions,
) -> Result<GradedSeries> {
    let hat_i = hat_i.unwrap_or_else(|| m.r_charged());
    if let Some(&bad) = hat_i.iter().find(|&&i| i >= m.r) {
        return Err(Error::DimensionMismatch(format!("coordinate {} out of range 1..{}", bad + 1, m.r)));
    }
    let check = hypothesis_check(m, &hat_i);
    if let InvariantCertificate::Monomial(e) = check.certificate {
        return Err(Error::Hypothesis(e));
    }
    Engine::new(m)?.series(ins, q_bound, t_order, &Mode::Glsm { hat_i }, opts)
}

pub fn hypothesis_check(m: &GlsmModel, hat_i: &[usize]) -> InvariantCheck {
    let keep: Vec<usize> = (0..m.r).filter(|i| !hat_i.contains(i)).collect();
    invariants_trivial(m, &keep, false)
}

// ---------------------------------------------------------------------------
// graded series

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeriesState {
    Ambient,
    Glsm,
}

impl SeriesState {
    pub fn as_str(self) -> &'static str {
        match self {
            SeriesState::Ambient => "ambient",
            SeriesState::Glsm => "glsm",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TermKey {
    pub theta_degree: Rational,
    pub degree: Degree,
    pub t_exponent: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct GradedSeries {
    pub model: GlsmModel,
    pub insertions: InsertionSet,
    pub q_bound: Rational,
    pub t_order: u32,
    pub state: SeriesState,
    /// Coordinates carrying the GLSM ranges; empty for ambient series.
    pub hat_i: Vec<usize>,
    /// Characters of an applied Novikov twist.
    pub twist: Vec<Vec<i64>>,
    /// Characters of applied `z∂` operators.
    pub derivative: Vec<Vec<i64>>,
    /// Degrees whose coefficient vanishes identically.
    pub vanishing: Vec<Degree>,
    pub terms: BTreeMap<TermKey, LaurentZ>,
}

impl GradedSeries {
    pub fn term(&self, d: &[Rational], alpha: &[u32]) -> Option<&LaurentZ> {
        let key = TermKey { theta_degree: self.model.theta_degree(d), degree: d.to_vec(), t_exponent: alpha.to_vec() };
        self.terms.get(&key)
    }

    /// Restriction to a smaller truncation region.
    pub fn restrict(&self, q_bound: &Rational, t_order: u32) -> GradedSeries {
        let mut out = self.clone();
        out.q_bound = q_bound.clone().min(self.q_bound.clone());
        out.t_order = t_order.min(self.t_order);
        out.terms.retain(|k, _| k.theta_degree <= out.q_bound && k.t_exponent.iter().sum::<u32>() <= out.t_order);
        let m = &self.model;
        out.vanishing.retain(|d| m.theta_degree(d) <= out.q_bound);
        out
    }

    fn with_terms(&self, terms: BTreeMap<TermKey, LaurentZ>) -> GradedSeries {
        GradedSeries { terms, ..self.clone() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZMethod {
    ByInsertion,
    ByMultiplication,
    /// Computes both and fails unless they agree.
    Verify,
}

/// Applies `Π_ρ z∂_ρ` to an ambient series.
pub fn z_partial(s: &GradedSeries, rho: &[Vec<i64>], method: ZMethod) -> Result<GradedSeries> {
    if s.state != SeriesState::Ambient {
        return Err(Error::Precondition("z_partial acts on ambient series".into()));
    }
    if let Some(xi) = rho.iter().find(|xi| xi.len() != s.model.k) {
        return Err(Error::DimensionMismatch(format!("character {xi:?} has length {} but k = {}", xi.len(), s.model.k)));
    }
    match method {
        ZMethod::ByMultiplication => Ok(by_multiplication(s, rho)),
        ZMethod::ByInsertion => by_insertion(s, rho),
        ZMethod::Verify => {
            let a = by_multiplication(s, rho);
            let b = by_insertion(s, rho)?;
            let diff = series_compare(&a, &b, None)?;
            if diff.is_empty() {
                Ok(a)
            } else {
                Err(Error::Internal(format!("z-derivative methods disagree at {} coefficients", diff.entries.len())))
            }
        }
    }
}

fn derivative_factor(ring: &Arc<SectorRing>, d: &[Rational], rho: &[Vec<i64>]) -> LaurentZ {
    rho.iter().fold(LaurentZ::one(ring), |acc, xi| {
        let class = ring.normal_form(&Poly::linear(&xi.iter().map(|&x| int(x)).collect::<Vec<_>>()));
        acc.mul(&LaurentZ::linear(ring, &class, &GlsmModel::pair_character(d, xi)))
    })
}

fn by_multiplication(s: &GradedSeries, rho: &[Vec<i64>]) -> GradedSeries {
    let terms = s
        .terms
        .iter()
        .map(|(k, v)| (k.clone(), v.mul(&derivative_factor(v.ring(), &k.degree, rho))))
        .filter(|(_, v)| !v.is_zero())
        .collect();
    let mut out = s.with_terms(terms);
    out.derivative.extend(rho.iter().cloned());
    out
}

fn by_insertion(s: &GradedSeries, rho: &[Vec<i64>]) -> Result<GradedSeries> {
    if rho.is_empty() {
        return Ok(s.clone());
    }
    if !s.twist.is_empty() {
        return Err(Error::Precondition("by_insertion cannot recompute a twisted series".into()));
    }
    let mut ins = s.insertions.clone();
    let mut aux = "u".to_string();
    while ins.names().contains(&aux) {
        aux.push('_');
    }
    ins.push_product(&aux, rho)?;
    let engine = Engine::new(&s.model)?;
    let bigger = engine.series(&ins, &s.q_bound, s.t_order + 1, &Mode::Ambient, EngineOptions::default())?;
    let n = s.insertions.len();
    let mut terms = BTreeMap::new();
    for (k, v) in bigger.terms {
        if k.t_exponent[n] != 1 {
            continue;
        }
        let key = TermKey { theta_degree: k.theta_degree, degree: k.degree, t_exponent: k.t_exponent[..n].to_vec() };
        terms.insert(key, v.shift(1));
    }
    let mut out = s.with_terms(terms);
    // re-apply earlier derivatives
    let earlier = std::mem::take(&mut out.derivative);
    if !earlier.is_empty() {
        out = by_multiplication(&out, &earlier);
    }
    out.derivative.extend(rho.iter().cloned());
    Ok(out)
}

/// Multiplies each degree-`d` term by `e^{πi Σ_j ⟨d,τ_j⟩}`.
pub fn twist_novikov(s: &GradedSeries, tau: &[Vec<i64>]) -> Result<GradedSeries> {
    if let Some(xi) = tau.iter().find(|xi| xi.len() != s.model.k) {
        return Err(Error::DimensionMismatch(format!("character {xi:?} has length {} but k = {}", xi.len(), s.model.k)));
    }
    let exponent = |d: &[Rational]| tau.iter().fold(Rational::zero(), |acc, xi| acc + GlsmModel::pair_character(d, xi));
    let den = s.terms.keys().fold(BigInt::one(), |acc, k| acc.lcm(exponent(&k.degree).denom()));
    let order = 2 * den.to_u64().ok_or_else(|| Error::Internal("twist denominator too large".into()))?;
    let terms = s
        .terms
        .iter()
        .map(|(k, v)| (k.clone(), v.scale(&ExactScalar::exp_pi_i(&exponent(&k.degree), order))))
        .collect();
    let mut out = s.with_terms(terms);
    out.twist.extend(tau.iter().cloned());
    Ok(out)
}

// ---------------------------------------------------------------------------
// compact type

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub degree: Degree,
    pub t_exponent: Vec<u32>,
    pub z_exponent: i64,
    pub required: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct CompactTypeReport {
    pub hat_i: Vec<usize>,
    pub hypothesis: InvariantCheck,
    pub checked_terms: usize,
    pub violations: Vec<Violation>,
    pub structurally_vanishing: Vec<Degree>,
}

impl CompactTypeReport {
    pub fn passes(&self) -> bool {
        self.hypothesis.trivial && self.violations.is_empty()
    }

    pub fn to_json(&self) -> Value {
        let cert = match &self.hypothesis.certificate {
            InvariantCertificate::Lambda(l) => json!({"lambda": l.iter().map(format_rational).collect::<Vec<_>>()}),
            InvariantCertificate::Monomial(e) => json!({"invariant_monomial": e}),
        };
        json!({
            "overall": if self.passes() { "pass" } else { "fail" },
            "hat_i": self.hat_i.iter().map(|i| i + 1).collect::<Vec<_>>(),
            "hypothesis": {"holds": self.hypothesis.trivial, "certificate": cert},
            "checked_terms": self.checked_terms,
            "violations": self.violations.iter().map(|v| json!({
                "degree": v.degree.iter().map(format_rational).collect::<Vec<_>>(),
                "t_exponent": v.t_exponent,
                "z_exponent": v.z_exponent,
                "required_factors": v.required.iter().map(|i| format!("rho{}", i + 1)).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
            "structurally_vanishing": self.structurally_vanishing.iter().map(|d| d.iter().map(format_rational).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "full_compact_type_membership": "unverified",
        })
    }
}

/// Hypothesis test plus divisibility of each coefficient by its endpoint factors.
pub fn compact_type_report(s: &GradedSeries, m: &GlsmModel) -> Result<CompactTypeReport> {
    let hat_i = if s.hat_i.is_empty() { m.r_charged() } else { s.hat_i.clone() };
    let hypothesis = hypothesis_check(m, &hat_i);
    let mut violations = Vec::new();
    for (k, v) in &s.terms {
        let g = v.sector();
        let fixed = g.fixed(m);
        let required: Vec<usize> = hat_i
            .iter()
            .copied()
            .filter(|i| fixed.contains(i))
            .filter(|&i| {
                let a = m.pairing(&k.degree, i);
                a.is_integer() && !a.is_positive()
            })
            .collect();
        if required.is_empty() {
            continue;
        }
        let factors: Vec<CohClass> = required.iter().map(|&i| CohClass::new(v.ring(), &Poly::linear(&m.column_q(i)))).collect();
        for (&e, p) in v.coeffs() {
            if !divides_ideal(&CohClass::new(v.ring(), p), &factors)? {
                violations.push(Violation { degree: k.degree.clone(), t_exponent: k.t_exponent.clone(), z_exponent: e, required: required.clone() });
            }
        }
    }
    Ok(CompactTypeReport { hat_i, hypothesis, checked_terms: s.terms.len(), violations, structurally_vanishing: s.vanishing.clone() })
}

// ---------------------------------------------------------------------------
// comparison

/// Reindexing applied to the first series before comparison: degrees map by
/// `d ↦ degree · d` and insertion `j` of the first series becomes insertion
/// `t_map[j]` of the second.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeriesMap {
    pub degree: Vec<Vec<Rational>>,
    pub t_map: Vec<usize>,
}

impl SeriesMap {
    pub fn from_json(v: &Value) -> Result<Self> {
        let rows = v.get("degree").and_then(Value::as_array).ok_or_else(|| Error::Schema("map needs \"degree\"".into()))?;
        let degree = rows.iter().map(|r| crate::model::get_rational_vec(Some(r), "degree")).collect::<Result<Vec<_>>>()?;
        let t_map = match v.get("t") {
            None => Vec::new(),
            Some(t) => crate::model::get_int_vec(Some(t), "t")?.into_iter().map(|x| x as usize).collect(),
        };
        Ok(SeriesMap { degree, t_map })
    }

    fn apply_degree(&self, d: &[Rational]) -> Degree {
        self.degree.iter().map(|row| row.iter().zip(d).fold(Rational::zero(), |acc, (a, b)| acc + a * b)).collect()
    }

    fn apply_alpha(&self, alpha: &[u32], n_target: usize) -> Option<Vec<u32>> {
        if self.t_map.is_empty() {
            return (alpha.len() == n_target).then(|| alpha.to_vec());
        }
        let mut out = vec![0; n_target];
        for (j, &a) in alpha.iter().enumerate() {
            let target = *self.t_map.get(j)?;
            *out.get_mut(target)? += a;
        }
        Some(out)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiffEntry {
    pub degree: Degree,
    pub t_exponent: Vec<u32>,
    pub z_exponent: i64,
    pub left: String,
    pub right: String,
}

#[derive(Clone, Debug, Default)]
pub struct SeriesDiff {
    pub compared_keys: usize,
    pub entries: Vec<DiffEntry>,
}

impl SeriesDiff {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "equal": self.is_empty(),
            "compared_keys": self.compared_keys,
            "differences": self.entries.iter().map(|e| json!({
                "degree": e.degree.iter().map(format_rational).collect::<Vec<_>>(),
                "t_exponent": e.t_exponent,
                "z_exponent": e.z_exponent,
                "left": e.left,
                "right": e.right,
            })).collect::<Vec<_>>(),
        })
    }
}

/// Reports every `(d, α, z-exponent)` in the common truncation region where
/// the normal forms differ. Keys are in the second series' coordinates.
pub fn series_compare(a: &GradedSeries, b: &GradedSeries, map: Option<&SeriesMap>) -> Result<SeriesDiff> {
    let t_order = a.t_order.min(b.t_order);
    let n_b = b.insertions.len();
    let mut left: BTreeMap<TermKey, &LaurentZ> = BTreeMap::new();
    for (k, v) in &a.terms {
        let (degree, alpha) = match map {
            None => (k.degree.clone(), Some(k.t_exponent.clone())),
            Some(mp) => (mp.apply_degree(&k.degree), mp.apply_alpha(&k.t_exponent, n_b)),
        };
        let Some(alpha) = alpha else {
            return Err(Error::Schema("insertion map does not cover the first series".into()));
        };
        left.insert(TermKey { theta_degree: b.model.theta_degree(&degree), degree, t_exponent: alpha }, v);
    }
    // the first series' region, expressed through its own θ-degrees
    let a_bound_ok = |key: &TermKey| -> bool {
        match map {
            None => key.theta_degree <= a.q_bound,
            Some(mp) => match invert(&mp.degree) {
                Some(inv) => {
                    let back: Degree = inv.iter().map(|row| row.iter().zip(&key.degree).fold(Rational::zero(), |acc, (x, y)| acc + x * y)).collect();
                    a.model.theta_degree(&back) <= a.q_bound
                }
                None => true,
            },
        }
    };
    let in_region = |key: &TermKey| key.theta_degree <= b.q_bound && key.t_exponent.iter().sum::<u32>() <= t_order && a_bound_ok(key);
    let keys: BTreeSet<TermKey> = left.keys().cloned().chain(b.terms.keys().cloned()).filter(|k| in_region(k)).collect();
    let mut diff = SeriesDiff { compared_keys: keys.len(), entries: Vec::new() };
    for key in keys {
        let (l, r) = (left.get(&key).copied(), b.terms.get(&key));
        if let (Some(l), Some(r)) = (l, r) {
            if !l.compatible(r) {
                return Err(Error::RingMismatch(format!("sector rings differ at degree {:?}", crate::git::format_degree(&key.degree))));
            }
        }
        let exps: BTreeSet<i64> = l.iter().chain(r.iter()).flat_map(|v| v.coeffs().keys().copied()).collect();
        for e in exps {
            let lp = l.and_then(|v| v.coeffs().get(&e));
            let rp = r.and_then(|v| v.coeffs().get(&e));
            if lp != rp {
                diff.entries.push(DiffEntry {
                    degree: key.degree.clone(),
                    t_exponent: key.t_exponent.clone(),
                    z_exponent: e,
                    left: lp.map_or("0".into(), |p| p.to_string()),
                    right: rp.map_or("0".into(), |p| p.to_string()),
                });
            }
        }
    }
    Ok(diff)
}

fn invert(m: &[Vec<Rational>]) -> Option<Vec<Vec<Rational>>> {
    let n = m.len();
    if m.iter().any(|r| r.len() != n) {
        return None;
    }
    let cols: Option<Vec<Vec<Rational>>> = (0..n)
        .map(|j| {
            let e: Vec<Rational> = (0..n).map(|i| if i == j { Rational::one() } else { Rational::zero() }).collect();
            crate::lattice::solve(&m.to_vec(), &e)
        })
        .collect();
    cols.map(|c| crate::lattice::transpose(&c))
}

/// Staircase monomial helper used by serializers.
pub fn staircase_names(ring: &SectorRing) -> Vec<String> {
    ring.staircase.iter().map(Mono::name).collect()
}
