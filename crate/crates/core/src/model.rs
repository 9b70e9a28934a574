//! Torus GLSM data: the model type, its JSON file format, the potential
//! grammar, and the algorithmically checkable axioms.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::git::cone_contains;
use crate::lattice::{int_matrix, primitive_integer_vector, smith_normal_form, transpose};
use crate::lp::feasible_point;
use crate::scalar::{format_rational, frac, int, parse_rational, Rational};

/// Subset-enumeration cap for the genericity check (all subsets for r <= 16).
pub const DEFAULT_SUBSET_BUDGET: u64 = 1 << 16;

/// A polynomial in the coordinates `x1..xr` with rational coefficients.
/// Terms are sorted by exponent vector; no duplicates, no zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PotentialPolynomial {
    terms: Vec<(Rational, Vec<u32>)>,
}

impl PotentialPolynomial {
    pub fn new(terms: impl IntoIterator<Item = (Rational, Vec<u32>)>) -> Self {
        let mut merged: BTreeMap<Vec<u32>, Rational> = BTreeMap::new();
        for (c, e) in terms {
            *merged.entry(e).or_insert_with(Rational::zero) += c;
        }
        PotentialPolynomial {
            terms: merged.into_iter().filter(|(_, c)| !c.is_zero()).map(|(e, c)| (c, e)).collect(),
        }
    }

    pub fn terms(&self) -> &[(Rational, Vec<u32>)] {
        &self.terms
    }

    /// Parses `coeff*xI^e*...` sums. `x` abbreviates `x1` and `p` abbreviates `xr`.
    pub fn parse(text: &str, r: usize) -> Result<Self> {
        PotentialParser { chars: text.chars().collect(), pos: 0, r }.parse()
    }

    /// Multiplies every term by the monomial `extra`.
    pub fn times_monomial(&self, extra: &[u32]) -> Self {
        PotentialPolynomial::new(
            self.terms
                .iter()
                .map(|(c, e)| (c.clone(), e.iter().zip(extra).map(|(a, b)| a + b).collect())),
        )
    }

    /// Re-embeds into `new_r` coordinates, sending coordinate `i` to `map[i]`.
    pub fn reindex(&self, new_r: usize, map: &[usize]) -> Self {
        PotentialPolynomial::new(self.terms.iter().map(|(c, e)| {
            let mut ne = vec![0; new_r];
            for (i, &a) in e.iter().enumerate() {
                ne[map[i]] += a;
            }
            (c.clone(), ne)
        }))
    }
}

impl fmt::Display for PotentialPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (idx, (c, e)) in self.terms.iter().enumerate() {
            let neg = c.is_negative();
            if idx == 0 {
                if neg {
                    write!(f, "-")?;
                }
            } else {
                write!(f, "{}", if neg { " - " } else { " + " })?;
            }
            let mag = c.abs();
            let mut factors = Vec::new();
            if !mag.is_one() || e.iter().all(|&a| a == 0) {
                factors.push(format_rational(&mag));
            }
            for (i, &a) in e.iter().enumerate() {
                match a {
                    0 => {}
                    1 => factors.push(format!("x{}", i + 1)),
                    _ => factors.push(format!("x{}^{}", i + 1, a)),
                }
            }
            write!(f, "{}", factors.join("*"))?;
        }
        Ok(())
    }
}

struct PotentialParser {
    chars: Vec<char>,
    pos: usize,
    r: usize,
}

impl PotentialParser {
    fn err(&self, msg: &str) -> Error {
        Error::Potential(format!("{msg} at position {}", self.pos))
    }

    fn skip_ws(&mut self) {
        while self.chars.get(self.pos).is_some_and(|c| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.chars.get(self.pos).is_some_and(char::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer"));
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        Ok(s.parse().unwrap())
    }

    fn parse(mut self) -> Result<PotentialPolynomial> {
        let mut terms = Vec::new();
        let mut sign = Rational::one();
        match self.peek() {
            Some('-') => {
                sign = -sign;
                self.pos += 1;
            }
            Some('+') => self.pos += 1,
            None => return Err(self.err("empty potential")),
            _ => {}
        }
        loop {
            let (c, e) = self.term()?;
            terms.push((c * &sign, e));
            match self.peek() {
                None => break,
                Some('+') => sign = Rational::one(),
                Some('-') => sign = -Rational::one(),
                Some(_) => return Err(self.err("expected '+' or '-'")),
            }
            self.pos += 1;
        }
        Ok(PotentialPolynomial::new(terms))
    }

    fn term(&mut self) -> Result<(Rational, Vec<u32>)> {
        let mut coeff = Rational::one();
        let mut exps = vec![0u32; self.r];
        loop {
            match self.peek() {
                Some(c) if c.is_ascii_digit() => {
                    let n = self.integer()?;
                    let q = if self.peek() == Some('/') {
                        self.pos += 1;
                        let d = self.integer()?;
                        if d.is_zero() {
                            return Err(self.err("zero denominator"));
                        }
                        Rational::new(n, d)
                    } else {
                        Rational::from_integer(n)
                    };
                    coeff *= q;
                }
                Some('x') | Some('p') => {
                    let var = self.variable()?;
                    let mut e = 1u32;
                    if self.peek() == Some('^') {
                        self.pos += 1;
                        e = self.integer()?.to_u32().ok_or_else(|| self.err("exponent too large"))?;
                    }
                    exps[var] += e;
                }
                _ => return Err(self.err("expected a coefficient or variable")),
            }
            if self.peek() == Some('*') {
                self.pos += 1;
            } else {
                break;
            }
        }
        Ok((coeff, exps))
    }

    fn variable(&mut self) -> Result<usize> {
        let head = self.chars[self.pos];
        self.pos += 1;
        let has_index = self.chars.get(self.pos).is_some_and(char::is_ascii_digit);
        let idx = match (head, has_index) {
            ('x', false) => 1,
            ('p', false) => self.r,
            ('x', true) => self.integer()?.to_usize().unwrap_or(0),
            _ => return Err(self.err("variables are x1..xr (x = x1, p = xr)")),
        };
        if idx == 0 || idx > self.r {
            return Err(self.err(&format!("variable index {idx} out of range 1..{}", self.r)));
        }
        Ok(idx - 1)
    }
}

/// The tuple (V, G, θ, w) for `G = (C*)^k` acting on `V = C^r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlsmModel {
    pub r: usize,
    pub k: usize,
    /// `k × r`; column `i` is the character `ρ_i`.
    pub weights: Vec<Vec<i64>>,
    pub r_charges: Vec<i64>,
    pub d_w: i64,
    pub theta: Vec<Rational>,
    pub potential: Option<PotentialPolynomial>,
    pub assert_critical_proper: bool,
}

impl GlsmModel {
    /// Structural constructor: checks shapes and `d_w > 0` only.
    pub fn new(
        weights: Vec<Vec<i64>>,
        r_charges: Vec<i64>,
        d_w: i64,
        theta: Vec<Rational>,
        potential: Option<PotentialPolynomial>,
    ) -> Result<Self> {
        let k = weights.len();
        let r = r_charges.len();
        if k == 0 {
            return Err(Error::DimensionMismatch("torus rank k must be positive".into()));
        }
        if let Some(row) = weights.iter().find(|row| row.len() != r) {
            return Err(Error::DimensionMismatch(format!(
                "weights row has {} columns but r_charges has length {r}",
                row.len()
            )));
        }
        if theta.len() != k {
            return Err(Error::DimensionMismatch(format!("theta has length {} but k = {k}", theta.len())));
        }
        if d_w <= 0 {
            return Err(Error::Schema(format!("d_w must be positive, got {d_w}")));
        }
        if let Some(p) = &potential {
            if p.terms().iter().any(|(_, e)| e.len() != r) {
                return Err(Error::DimensionMismatch("potential exponent length differs from r".into()));
            }
        }
        Ok(GlsmModel { r, k, weights, r_charges, d_w, theta, potential, assert_critical_proper: false })
    }

    pub fn with_critical_proper(mut self, asserted: bool) -> Self {
        self.assert_critical_proper = asserted;
        self
    }

    pub fn column(&self, i: usize) -> Vec<i64> {
        self.weights.iter().map(|row| row[i]).collect()
    }

    pub fn column_q(&self, i: usize) -> Vec<Rational> {
        self.weights.iter().map(|row| int(row[i])).collect()
    }

    /// `⟨d, ρ_i⟩`.
    pub fn pairing(&self, d: &[Rational], i: usize) -> Rational {
        d.iter().zip(&self.weights).fold(Rational::zero(), |acc, (da, row)| acc + da * int(row[i]))
    }

    /// `⟨d, ξ⟩` for an arbitrary integer character.
    pub fn pair_character(d: &[Rational], xi: &[i64]) -> Rational {
        d.iter().zip(xi).fold(Rational::zero(), |acc, (da, &x)| acc + da * int(x))
    }

    pub fn theta_degree(&self, d: &[Rational]) -> Rational {
        d.iter().zip(&self.theta).fold(Rational::zero(), |acc, (a, b)| acc + a * b)
    }

    /// Indices with nonzero R-charge, the default choice of `Î`.
    pub fn r_charged(&self) -> Vec<usize> {
        (0..self.r).filter(|&i| self.r_charges[i] != 0).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "r": self.r,
            "k": self.k,
            "weights": self.weights,
            "r_charges": self.r_charges,
            "d_w": self.d_w,
            "theta": self.theta.iter().map(format_rational).collect::<Vec<_>>(),
            "potential": self.potential.as_ref().map(|p| p.to_string()),
            "assert_critical_proper": self.assert_critical_proper,
        })
    }

    /// Compact, key-sorted serialization.
    pub fn canonical_string(&self) -> String {
        self.to_json().to_string()
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let obj = value.as_object().ok_or_else(|| Error::Schema("model must be a JSON object".into()))?;
        let r = get_usize(obj, "r")?;
        let k = get_usize(obj, "k")?;
        let weights = get_int_matrix(obj, "weights")?;
        let r_charges = get_int_vec(obj.get("r_charges"), "r_charges")?;
        let d_w = obj
            .get("d_w")
            .and_then(Value::as_i64)
            .ok_or_else(|| Error::Schema("\"d_w\" must be an integer".into()))?;
        let theta = get_rational_vec(obj.get("theta"), "theta")?;
        if weights.len() != k {
            return Err(Error::DimensionMismatch(format!("weights has {} rows but k = {k}", weights.len())));
        }
        if r_charges.len() != r {
            return Err(Error::DimensionMismatch(format!("r_charges has length {} but r = {r}", r_charges.len())));
        }
        let potential = match obj.get("potential") {
            None | Some(Value::Null) => None,
            Some(Value::String(s)) => Some(PotentialPolynomial::parse(s, r)?),
            Some(_) => return Err(Error::Schema("\"potential\" must be a string or null".into())),
        };
        let proper = match obj.get("assert_critical_proper") {
            None | Some(Value::Null) => false,
            Some(Value::Bool(b)) => *b,
            Some(_) => return Err(Error::Schema("\"assert_critical_proper\" must be a boolean".into())),
        };
        Ok(GlsmModel::new(weights, r_charges, d_w, theta, potential)?.with_critical_proper(proper))
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.canonical_string().as_bytes()))
    }
}

/// Parses model-file content.
pub fn parse_model(text: &str) -> Result<GlsmModel> {
    let value: Value = serde_json::from_str(text).map_err(Error::from_json)?;
    GlsmModel::from_json(&value)
}

pub(crate) fn get_usize(obj: &Map<String, Value>, key: &str) -> Result<usize> {
    obj.get(key)
        .and_then(Value::as_u64)
        .map(|v| v as usize)
        .ok_or_else(|| Error::Schema(format!("\"{key}\" must be a nonnegative integer")))
}

pub(crate) fn get_int_vec(v: Option<&Value>, key: &str) -> Result<Vec<i64>> {
    let arr = v
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Schema(format!("\"{key}\" must be an array of integers")))?;
    arr.iter()
        .map(|x| x.as_i64().ok_or_else(|| Error::Schema(format!("\"{key}\" must contain integers"))))
        .collect()
}

pub(crate) fn get_int_matrix(obj: &Map<String, Value>, key: &str) -> Result<Vec<Vec<i64>>> {
    let arr = obj
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Schema(format!("\"{key}\" must be an array of integer arrays")))?;
    arr.iter().map(|row| get_int_vec(Some(row), key)).collect()
}

pub(crate) fn get_rational_vec(v: Option<&Value>, key: &str) -> Result<Vec<Rational>> {
    let arr = v
        .and_then(Value::as_array)
        .ok_or_else(|| Error::Schema(format!("\"{key}\" must be an array of \"p/q\" strings")))?;
    arr.iter().map(|x| value_to_rational(x, key)).collect()
}

pub(crate) fn value_to_rational(x: &Value, key: &str) -> Result<Rational> {
    match x {
        Value::String(s) => parse_rational(s),
        Value::Number(n) if n.is_i64() => Ok(int(n.as_i64().unwrap())),
        _ => Err(Error::Schema(format!("\"{key}\" entries must be \"p/q\" strings"))),
    }
}

// ---------------------------------------------------------------------------
// validation

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Warning,
    Skipped,
}

impl CheckStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => "fail",
            CheckStatus::Warning => "warning",
            CheckStatus::Skipped => "skipped",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub status: CheckStatus,
    pub detail: String,
}

/// Aggregated check results. Warnings and skipped checks do not fail the report.
#[derive(Clone, Debug)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    pub overall: bool,
}

impl ValidationReport {
    pub fn new(checks: Vec<Check>) -> Self {
        let overall = checks.iter().all(|c| c.status != CheckStatus::Fail);
        ValidationReport { checks, overall }
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "overall": if self.overall { "pass" } else { "fail" },
            "checks": self.checks.iter().map(|c| json!({
                "name": c.name,
                "status": c.status.as_str(),
                "detail": c.detail,
            })).collect::<Vec<_>>(),
        })
    }
}

fn check(name: &str, status: CheckStatus, detail: impl Into<String>) -> Check {
    Check { name: name.into(), status, detail: detail.into() }
}

fn fmt_vec(v: &[Rational]) -> String {
    format!("({})", v.iter().map(format_rational).collect::<Vec<_>>().join(", "))
}

pub fn validate_model(m: &GlsmModel) -> ValidationReport {
    let mut checks = Vec::new();

    let bad: Vec<usize> = (0..m.r).filter(|&i| m.r_charges[i] < 0 || m.r_charges[i] > m.d_w).collect();
    checks.push(if bad.is_empty() {
        check("r_charge_bounds", CheckStatus::Pass, format!("0 <= c_i <= d_w = {}", m.d_w))
    } else {
        check("r_charge_bounds", CheckStatus::Fail, format!("coordinates {:?} have R-charge outside [0, {}]", one_based(&bad), m.d_w))
    });

    checks.push(if m.theta.iter().all(Zero::is_zero) {
        check("theta_nonzero", CheckStatus::Fail, "theta = 0")
    } else {
        check("theta_nonzero", CheckStatus::Pass, format!("theta = {}", fmt_vec(&m.theta)))
    });

    let factors = smith_normal_form(&int_matrix(&transpose(&m.weights)));
    let inv = factors.invariant_factors();
    checks.push(if factors.rank == m.k && inv.iter().all(One::is_one) {
        check("faithfulness", CheckStatus::Pass, "Smith invariant factors of Q^T are all 1")
    } else {
        check(
            "faithfulness",
            CheckStatus::Fail,
            format!("Q^T has rank {} of {} with invariant factors {:?}", factors.rank, m.k, inv.iter().map(|x| x.to_string()).collect::<Vec<_>>()),
        )
    });

    let jm = j_membership(m);
    checks.push(match (&jm.witness, jm.is_member) {
        (Some(w), true) => check(
            "j_membership",
            CheckStatus::Pass,
            format!("J = exp(2 pi i lambda) with lambda = {}, order {}", fmt_vec(w), jm.order.unwrap_or(1)),
        ),
        _ => check("j_membership", CheckStatus::Fail, "no lambda with <rho_i, lambda> = c_i/d_w mod 1"),
    });

    checks.push(match (j_intersection_order(m), jm.order) {
        (Some(n), Some(ord)) if n == ord && n == m.d_w as u64 => {
            check("j_generates_intersection", CheckStatus::Pass, format!("G ∩ C*_R is cyclic of order {n}, generated by J"))
        }
        (Some(n), ord) => check(
            "j_generates_intersection",
            CheckStatus::Warning,
            format!("G ∩ C*_R is cyclic of order {n}; J has order {}; d_w = {}", ord.map_or("-".into(), |o| o.to_string()), m.d_w),
        ),
        (None, _) => check("j_generates_intersection", CheckStatus::Warning, "G ∩ C*_R is infinite"),
    });

    checks.push(match no_strict_semistable(m) {
        Ok(true) => check("no_strict_semistable", CheckStatus::Pass, "theta is generic"),
        Ok(false) => check(
            "no_strict_semistable",
            CheckStatus::Fail,
            "theta lies in the cone of a subset of weights spanning less than rank k",
        ),
        Err(e) => check("no_strict_semistable", CheckStatus::Fail, e.to_string()),
    });

    match &m.potential {
        None => checks.push(check("potential", CheckStatus::Skipped, "no potential supplied")),
        Some(_) => {
            let sub = potential_check(m);
            let failing: Vec<&Check> = sub.checks.iter().filter(|c| c.status == CheckStatus::Fail).collect();
            checks.push(if failing.is_empty() {
                check("potential", CheckStatus::Pass, format!("{} terms are G-invariant and R-homogeneous of degree {}", sub.checks.len(), m.d_w))
            } else {
                check("potential", CheckStatus::Fail, failing.iter().map(|c| c.detail.clone()).collect::<Vec<_>>().join("; "))
            });
        }
    }

    checks.push(if m.assert_critical_proper {
        check("critical_locus_proper", CheckStatus::Pass, "asserted by the model file (not verified)")
    } else {
        check("critical_locus_proper", CheckStatus::Warning, "not asserted; properness of Z(dw) is not checked")
    });

    ValidationReport::new(checks)
}

fn one_based(idx: &[usize]) -> Vec<usize> {
    idx.iter().map(|i| i + 1).collect()
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JMembership {
    pub is_member: bool,
    /// Entries in `[0, 1)`.
    pub witness: Option<Vec<Rational>>,
    /// Order of the witness in `(Q/Z)^k`.
    pub order: Option<u64>,
}

/// Decides whether `J = diag(e^{2πi c_i/d_w})` lies in the torus.
pub fn j_membership(m: &GlsmModel) -> JMembership {
    let qt = int_matrix(&transpose(&m.weights));
    let s = smith_normal_form(&qt);
    let b: Vec<Rational> = m.r_charges.iter().map(|&c| Rational::new(c.into(), m.d_w.into())).collect();
    let ub = crate::lattice::mat_vec(&s.u, &b);
    if ub[s.rank..].iter().any(|x| !x.is_integer()) {
        return JMembership { is_member: false, witness: None, order: None };
    }
    let mu: Vec<Rational> = (0..m.k)
        .map(|i| if i < s.rank { &ub[i] / Rational::from_integer(s.d[i][i].clone()) } else { Rational::zero() })
        .collect();
    let lambda: Vec<Rational> = crate::lattice::mat_vec(&s.v, &mu).iter().map(frac).collect();
    debug_assert!((0..m.r).all(|i| (m.pairing(&lambda, i) - &b[i]).is_integer()));
    let order = lambda.iter().fold(BigInt::one(), |acc, q| acc.lcm(q.denom()));
    JMembership { is_member: true, witness: Some(lambda), order: order.to_u64() }
}

/// Order of the cyclic group `G ∩ C*_R`, or `None` if it is infinite.
pub fn j_intersection_order(m: &GlsmModel) -> Option<u64> {
    let g = m.r_charges.iter().fold(0i64, |acc, &c| acc.gcd(&c));
    if g == 0 {
        return Some(1);
    }
    let primitive: Vec<Rational> = m.r_charges.iter().map(|&c| int(c / g)).collect();
    let s = smith_normal_form(&int_matrix(&transpose(&m.weights)));
    let u = crate::lattice::mat_vec(&s.u, &primitive);
    let n = u[s.rank..].iter().fold(BigInt::zero(), |acc, x| acc.gcd(&x.to_integer()));
    if n.is_zero() {
        None
    } else {
        n.to_u64()
    }
}

/// Checks every potential term for G-invariance and R-homogeneity.
pub fn potential_check(m: &GlsmModel) -> ValidationReport {
    let Some(p) = &m.potential else {
        return ValidationReport::new(vec![check("potential", CheckStatus::Skipped, "no potential supplied")]);
    };
    let checks = p
        .terms()
        .iter()
        .map(|(_, e)| {
            let mono = PotentialPolynomial::new([(Rational::one(), e.clone())]).to_string();
            let charge: Vec<i64> = m.weights.iter().map(|row| row.iter().zip(e).map(|(q, &a)| q * a as i64).sum()).collect();
            let r_deg: i64 = m.r_charges.iter().zip(e).map(|(c, &a)| c * a as i64).sum();
            let mut problems = Vec::new();
            if charge.iter().any(|&x| x != 0) {
                problems.push(format!("Q·a = {charge:?} ≠ 0"));
            }
            if r_deg != m.d_w {
                problems.push(format!("c·a = {r_deg} ≠ d_w = {}", m.d_w));
            }
            if problems.is_empty() {
                check(&mono, CheckStatus::Pass, format!("{mono}: invariant, R-degree {r_deg}"))
            } else {
                check(&mono, CheckStatus::Fail, format!("{mono}: {}", problems.join(", ")))
            }
        })
        .collect();
    ValidationReport::new(checks)
}

pub fn no_strict_semistable(m: &GlsmModel) -> Result<bool> {
    no_strict_semistable_with_budget(m, DEFAULT_SUBSET_BUDGET)
}

/// θ is generic iff it lies in no cone spanned by fewer than `k` weights
/// (every cone of rank < k is a union of such cones by Carathéodory).
pub fn no_strict_semistable_with_budget(m: &GlsmModel, budget: u64) -> Result<bool> {
    if m.theta.iter().all(Zero::is_zero) {
        return Ok(false);
    }
    let total: u64 = (1..m.k).map(|j| binomial(m.r as u64, j as u64)).sum();
    if total > budget {
        return Err(Error::BudgetExceeded(format!("{total} subsets of size < {} needed, cap {budget}", m.k)));
    }
    for size in 1..m.k {
        for subset in subsets_of_size(m.r, size) {
            let gens: Vec<Vec<Rational>> = subset.iter().map(|&i| m.column_q(i)).collect();
            if cone_contains(&m.theta, &gens) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

pub(crate) fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All `size`-element subsets of `0..n` in lexicographic order.
pub(crate) fn subsets_of_size(n: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < size - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, size, &mut Vec::new(), &mut out);
    out
}

/// Certificate returned by [`invariants_trivial`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum InvariantCertificate {
    /// `λ` with `⟨λ, column_i⟩ >= 1` on the kept coordinates.
    Lambda(Vec<Rational>),
    /// Exponent vector (length r, zero off `keep`) of a nonconstant invariant monomial.
    Monomial(Vec<i64>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InvariantCheck {
    pub trivial: bool,
    pub certificate: InvariantCertificate,
}

/// Decides whether the only invariant monomial supported on `keep` is 1.
/// Indices are zero-based.
pub fn invariants_trivial(m: &GlsmModel, keep: &[usize], include_r_charge: bool) -> InvariantCheck {
    let mut rows: Vec<Vec<i64>> = m.weights.clone();
    if include_r_charge {
        rows.push(m.r_charges.clone());
    }
    let dim = rows.len();
    if keep.is_empty() {
        return InvariantCheck { trivial: true, certificate: InvariantCertificate::Lambda(vec![Rational::zero(); dim]) };
    }
    // variables: λ⁺ (dim), λ⁻ (dim), slack (|keep|); ⟨λ, col_i⟩ - s_i = 1
    let nvar = 2 * dim + keep.len();
    let a: Vec<Vec<Rational>> = keep
        .iter()
        .enumerate()
        .map(|(row_idx, &i)| {
            let mut row = vec![Rational::zero(); nvar];
            for a in 0..dim {
                row[a] = int(rows[a][i]);
                row[dim + a] = -int(rows[a][i]);
            }
            row[2 * dim + row_idx] = -Rational::one();
            row
        })
        .collect();
    let b = vec![Rational::one(); keep.len()];
    if let Some(x) = feasible_point(&a, &b) {
        let lambda = (0..dim).map(|a| &x[a] - &x[dim + a]).collect();
        return InvariantCheck { trivial: true, certificate: InvariantCertificate::Lambda(lambda) };
    }
    // Gordan alternative: y >= 0, Σ y_i col_i = 0, Σ y_i = 1
    let mut alt: Vec<Vec<Rational>> = (0..dim).map(|a| keep.iter().map(|&i| int(rows[a][i])).collect()).collect();
    alt.push(vec![Rational::one(); keep.len()]);
    let mut rhs = vec![Rational::zero(); dim];
    rhs.push(Rational::one());
    let y = feasible_point(&alt, &rhs).expect("Gordan alternative must be feasible");
    let ints = primitive_integer_vector(&y);
    let mut exps = vec![0i64; m.r];
    for (&i, v) in keep.iter().zip(ints) {
        exps[i] = v.to_i64().expect("certificate entry fits in i64");
    }
    InvariantCheck { trivial: false, certificate: InvariantCertificate::Monomial(exps) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    pub(crate) const QUINTIC: &str = r#"{"r": 6, "k": 1, "weights": [[1,1,1,1,1,-5]], "r_charges": [0,0,0,0,0,1],
        "d_w": 1, "theta": ["1"], "potential": "p*x1^5+p*x2^5+p*x3^5+p*x4^5+p*x5^5", "assert_critical_proper": true}"#;

    fn cubic() -> GlsmModel {
        GlsmModel::new(vec![vec![1, -3]], vec![1, 0], 3, vec![int(-1)], None).unwrap()
    }

    #[test]
    fn parses_quintic_file() {
        let m = parse_model(QUINTIC).unwrap();
        assert_eq!((m.r, m.k, m.d_w), (6, 1, 1));
        assert_eq!(m.weights, vec![vec![1, 1, 1, 1, 1, -5]]);
        let p = m.potential.as_ref().unwrap();
        assert_eq!(p.terms().len(), 5);
        assert!(p.terms().iter().all(|(_, e)| e[5] == 1 && e.iter().sum::<u32>() == 6));
        assert!(validate_model(&m).overall);
    }

    #[test]
    fn parse_errors() {
        let bad = r#"{"r": 2, "k": 1, "weights": [[1,1,1]], "r_charges": [0,0], "d_w": 1, "theta": ["1"]}"#;
        assert!(matches!(parse_model(bad), Err(Error::DimensionMismatch(_))));
        let bad = r#"{"r": 2, "k": 1, "weights": [[1,1]], "r_charges": [0,0], "d_w": 1, "theta": ["2/4"]}"#;
        assert!(matches!(parse_model(bad), Err(Error::Rational(_))));
        let bad = r#"{"r": 2, "k": 1, "weights": [[1,1]], "r_charges": [0,0], "d_w": 1, "theta": ["1/0"]}"#;
        assert!(matches!(parse_model(bad), Err(Error::Rational(_))));
        let bad = "{\"r\": 2,\n \"k\": }";
        match parse_model(bad) {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn potential_grammar() {
        let p = PotentialPolynomial::parse("-1/2*x1^2*x2 + 3 x1 ", 2);
        assert!(p.is_err());
        let p = PotentialPolynomial::parse("-1/2*x1^2*x2 + 3*x1 - x1", 2).unwrap();
        assert_eq!(p.terms(), &[(int(2), vec![1, 0]), (rat(-1, 2), vec![2, 1])]);
        assert_eq!(p.to_string(), "2*x1 - 1/2*x1^2*x2");
        let p = PotentialPolynomial::parse("p*x^3", 2).unwrap();
        assert_eq!(p.terms(), &[(int(1), vec![3, 1])]);
        assert!(PotentialPolynomial::parse("x3", 2).is_err());
        assert!(PotentialPolynomial::parse("", 2).is_err());
    }

    #[test]
    fn minimal_model_passes_with_skip() {
        let m = GlsmModel::new(vec![vec![1, 1]], vec![0, 0], 1, vec![int(1)], None).unwrap();
        let rep = validate_model(&m);
        assert!(rep.overall);
        assert_eq!(rep.check("potential").unwrap().status, CheckStatus::Skipped);
    }

    #[test]
    fn j_membership_examples() {
        let q = parse_model(QUINTIC).unwrap();
        let jm = j_membership(&q);
        assert!(jm.is_member);
        assert_eq!(jm.witness, Some(vec![int(0)]));
        assert_eq!(jm.order, Some(1));

        let jm = j_membership(&cubic());
        assert_eq!(jm.witness, Some(vec![rat(1, 3)]));
        assert_eq!(jm.order, Some(3));
        assert_eq!(j_intersection_order(&cubic()), Some(3));

        let bad = GlsmModel::new(vec![vec![2, 2]], vec![1, 0], 2, vec![int(1)], None).unwrap();
        assert_eq!(j_membership(&bad), JMembership { is_member: false, witness: None, order: None });
        let rep = validate_model(&bad);
        assert!(!rep.overall);
        assert_eq!(rep.check("j_membership").unwrap().status, CheckStatus::Fail);
    }

    #[test]
    fn potential_checks() {
        let q = parse_model(QUINTIC).unwrap();
        assert!(potential_check(&q).overall);
        let c = GlsmModel::new(vec![vec![1, -3]], vec![1, 0], 3, vec![int(-1)], Some(PotentialPolynomial::parse("p*x^3", 2).unwrap())).unwrap();
        assert!(potential_check(&c).overall);
        let mut stray = q.clone();
        stray.potential = Some(PotentialPolynomial::parse("p*x1^5 + x1^2", 6).unwrap());
        let rep = potential_check(&stray);
        assert!(!rep.overall);
        let failing: Vec<_> = rep.checks.iter().filter(|c| c.status == CheckStatus::Fail).collect();
        assert_eq!(failing.len(), 1);
        assert!(failing[0].detail.contains("c·a = 0"));
    }

    #[test]
    fn genericity() {
        let p1 = GlsmModel::new(vec![vec![1, 1]], vec![0, 0], 1, vec![int(1)], None).unwrap();
        assert!(no_strict_semistable(&p1).unwrap());
        let q = parse_model(QUINTIC).unwrap();
        assert!(no_strict_semistable(&q).unwrap());
        let m = GlsmModel::new(vec![vec![1, 0, 1], vec![0, 1, 1]], vec![0, 0, 0], 1, vec![int(1), int(1)], None).unwrap();
        assert!(!no_strict_semistable(&m).unwrap());
        let mut scaled = m.clone();
        scaled.theta = vec![rat(7, 3), rat(7, 3)];
        assert!(!no_strict_semistable(&scaled).unwrap());
        let big = GlsmModel::new(vec![vec![1; 30], vec![0; 30], vec![0; 30]], vec![0; 30], 1, vec![int(1), int(1), int(1)], None).unwrap();
        assert!(matches!(no_strict_semistable_with_budget(&big, 100), Err(Error::BudgetExceeded(_))));
    }

    #[test]
    fn invariants_examples() {
        let q = parse_model(QUINTIC).unwrap();
        let res = invariants_trivial(&q, &[0, 1, 2, 3, 4], false);
        assert!(res.trivial);
        let m = GlsmModel::new(vec![vec![1, -1]], vec![0, 0], 1, vec![int(1)], None).unwrap();
        let res = invariants_trivial(&m, &[0, 1], false);
        assert!(!res.trivial);
        assert_eq!(res.certificate, InvariantCertificate::Monomial(vec![1, 1]));
        assert!(invariants_trivial(&m, &[], false).trivial);
        // the R-charge row can kill invariants: x1 x2 has R-degree 1
        let m = GlsmModel::new(vec![vec![1, -1]], vec![0, 1], 1, vec![int(1)], None).unwrap();
        assert!(invariants_trivial(&m, &[0, 1], true).trivial);
    }

    #[test]
    fn round_trip() {
        let q = parse_model(QUINTIC).unwrap();
        let again = parse_model(&q.canonical_string()).unwrap();
        assert_eq!(q, again);
        assert_eq!(q.hash(), again.hash());
    }
}
