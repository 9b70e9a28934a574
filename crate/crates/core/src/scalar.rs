//! Exact scalars: arbitrary-precision rationals, optionally extended to a
//! cyclotomic field `Q(ζ_N)`.
//!
//! Cyclotomic elements are stored on the power basis `1, ζ, …, ζ^{φ(N)-1}`
//! and are always fully reduced modulo `Φ_N`. An element whose coordinates
//! beyond the constant term vanish is demoted back to a plain rational, so
//! every value has a single variant for its "rational-ness".

use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Parses `"p/q"` or `"p"`. Rejects zero or negative denominators and
/// fractions that are not in lowest terms.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = |why: &str| Error::Rational(format!("{why}: {text:?}"));
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s, None),
    };
    let num: BigInt = num.parse().map_err(|_| bad("malformed numerator"))?;
    let Some(den) = den else {
        return Ok(Rational::from_integer(num));
    };
    if den.starts_with('-') || den.starts_with('+') {
        return Err(bad("denominator must be an unsigned integer"));
    }
    let den: BigInt = den.parse().map_err(|_| bad("malformed denominator"))?;
    if den.is_zero() {
        return Err(bad("zero denominator"));
    }
    if !num.gcd(&den).is_one() {
        return Err(bad("rational not in lowest terms"));
    }
    Ok(Rational::new_raw(num, den))
}

/// Canonical `"p/q"` text (`"p"` for integers).
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Fractional part in `[0, 1)`.
pub fn frac(q: &Rational) -> Rational {
    q - q.floor()
}

pub fn to_i64(q: &Rational) -> Option<i64> {
    if q.is_integer() {
        q.numer().to_i64()
    } else {
        None
    }
}

// ---------------------------------------------------------------------------
// univariate helpers over Q, coefficients low to high, trailing zeros trimmed

fn trim(p: &mut Vec<Rational>) {
    while p.last().is_some_and(|c| c.is_zero()) {
        p.pop();
    }
}

fn upoly_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    trim(&mut out);
    out
}

fn upoly_sub(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let n = a.len().max(b.len());
    let mut out: Vec<Rational> = (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(Rational::zero);
            let y = b.get(i).cloned().unwrap_or_else(Rational::zero);
            x - y
        })
        .collect();
    trim(&mut out);
    out
}

fn upoly_divrem(a: &[Rational], b: &[Rational]) -> (Vec<Rational>, Vec<Rational>) {
    let mut rem = a.to_vec();
    trim(&mut rem);
    let db = b.len() - 1;
    let lead = b[db].clone();
    if rem.len() < b.len() {
        return (Vec::new(), rem);
    }
    let mut quo = vec![Rational::zero(); rem.len() - db];
    while rem.len() >= b.len() {
        let shift = rem.len() - 1 - db;
        let c = rem.last().unwrap() / &lead;
        for (j, bj) in b.iter().enumerate() {
            rem[shift + j] -= &c * bj;
        }
        quo[shift] = c;
        rem.pop();
        trim(&mut rem);
    }
    trim(&mut quo);
    (quo, rem)
}

fn cyclotomic_cache() -> &'static Mutex<HashMap<u64, Arc<Vec<Rational>>>> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<Vec<Rational>>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// The cyclotomic polynomial `Φ_n`, monic, coefficients low to high.
pub fn cyclotomic_polynomial(n: u64) -> Arc<Vec<Rational>> {
    assert!(n > 0, "cyclotomic order must be positive");
    if let Some(p) = cyclotomic_cache().lock().unwrap().get(&n) {
        return p.clone();
    }
    let mut p = vec![Rational::zero(); n as usize + 1];
    p[0] = -Rational::one();
    p[n as usize] = Rational::one();
    for d in 1..n {
        if n % d == 0 {
            let (q, r) = upoly_divrem(&p, &cyclotomic_polynomial(d));
            debug_assert!(r.is_empty());
            p = q;
        }
    }
    let p = Arc::new(p);
    cyclotomic_cache().lock().unwrap().insert(n, p.clone());
    p
}

pub fn euler_phi(n: u64) -> usize {
    cyclotomic_polynomial(n).len() - 1
}

fn reduce_mod(mut p: Vec<Rational>, modulus: &[Rational]) -> Vec<Rational> {
    let deg = modulus.len() - 1;
    while p.len() > deg {
        let top = p.pop().unwrap();
        if top.is_zero() {
            continue;
        }
        let shift = p.len() - deg;
        for j in 0..deg {
            p[shift + j] -= &top * &modulus[j];
        }
    }
    p.resize(deg, Rational::zero());
    p
}

/// An element of `Q(ζ_N)` on the power basis, reduced modulo `Φ_N`.
#[derive(Clone, Debug)]
pub struct Cyclotomic {
    order: u64,
    coeffs: Vec<Rational>,
}

impl Cyclotomic {
    pub fn new(order: u64, coeffs: Vec<Rational>) -> Self {
        let modulus = cyclotomic_polynomial(order);
        Cyclotomic { order, coeffs: reduce_mod(coeffs, &modulus) }
    }

    pub fn order(&self) -> u64 {
        self.order
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    fn lift(&self, order: u64) -> Cyclotomic {
        if order == self.order {
            return self.clone();
        }
        debug_assert_eq!(order % self.order, 0);
        let step = (order / self.order) as usize;
        let mut p = vec![Rational::zero(); (self.coeffs.len().max(1) - 1) * step + 1];
        for (i, c) in self.coeffs.iter().enumerate() {
            p[i * step] = c.clone();
        }
        Cyclotomic::new(order, p)
    }

    fn from_rational(order: u64, q: &Rational) -> Cyclotomic {
        Cyclotomic::new(order, vec![q.clone()])
    }
}

#[derive(Clone, Debug)]
pub enum ExactScalar {
    Rational(Rational),
    Cyclotomic(Cyclotomic),
}

impl ExactScalar {
    pub fn zero() -> Self {
        ExactScalar::Rational(Rational::zero())
    }

    pub fn one() -> Self {
        ExactScalar::Rational(Rational::one())
    }

    pub fn from_int(n: i64) -> Self {
        ExactScalar::Rational(int(n))
    }

    /// `ζ_order^exponent`, demoted to a rational when it is `±1`.
    pub fn root_of_unity(order: u64, exponent: i64) -> Self {
        assert!(order > 0);
        let e = exponent.rem_euclid(order as i64) as usize;
        let mut p = vec![Rational::zero(); e + 1];
        p[e] = Rational::one();
        ExactScalar::Cyclotomic(Cyclotomic::new(order, p)).normalized()
    }

    /// `e^{πi x}` written in `Q(ζ_order)`; `order` must be a multiple of
    /// twice the denominator of `x`.
    pub fn exp_pi_i(x: &Rational, order: u64) -> Self {
        let two_den = 2 * x.denom().to_u64().expect("denominator fits in u64");
        assert_eq!(order % two_den, 0, "field order {order} cannot express e^(pi i {x})");
        let scale = (order / two_den) as i64;
        let num = x.numer().mod_floor(&BigInt::from(two_den)).to_i64().unwrap();
        ExactScalar::root_of_unity(order, num * scale)
    }

    pub fn is_zero(&self) -> bool {
        match self {
            ExactScalar::Rational(q) => q.is_zero(),
            ExactScalar::Cyclotomic(c) => c.coeffs.iter().all(Zero::is_zero),
        }
    }

    pub fn is_one(&self) -> bool {
        matches!(self, ExactScalar::Rational(q) if q.is_one())
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            ExactScalar::Rational(q) => Some(q),
            ExactScalar::Cyclotomic(_) => None,
        }
    }

    fn normalized(self) -> Self {
        match self {
            ExactScalar::Cyclotomic(c) if c.order <= 2 || c.coeffs[1..].iter().all(Zero::is_zero) => {
                ExactScalar::Rational(c.coeffs.into_iter().next().unwrap_or_else(Rational::zero))
            }
            other => other,
        }
    }

    fn common(a: &ExactScalar, b: &ExactScalar) -> Option<(Cyclotomic, Cyclotomic)> {
        match (a, b) {
            (ExactScalar::Rational(_), ExactScalar::Rational(_)) => None,
            (ExactScalar::Rational(x), ExactScalar::Cyclotomic(y)) => {
                Some((Cyclotomic::from_rational(y.order, x), y.clone()))
            }
            (ExactScalar::Cyclotomic(x), ExactScalar::Rational(y)) => {
                Some((x.clone(), Cyclotomic::from_rational(x.order, y)))
            }
            (ExactScalar::Cyclotomic(x), ExactScalar::Cyclotomic(y)) => {
                let n = x.order.lcm(&y.order);
                Some((x.lift(n), y.lift(n)))
            }
        }
    }

    pub fn add(&self, other: &ExactScalar) -> ExactScalar {
        match Self::common(self, other) {
            None => ExactScalar::Rational(self.as_rational().unwrap() + other.as_rational().unwrap()),
            Some((x, y)) => {
                let coeffs = x.coeffs.iter().zip(&y.coeffs).map(|(a, b)| a + b).collect();
                ExactScalar::Cyclotomic(Cyclotomic { order: x.order, coeffs }).normalized()
            }
        }
    }

    pub fn sub(&self, other: &ExactScalar) -> ExactScalar {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> ExactScalar {
        match self {
            ExactScalar::Rational(q) => ExactScalar::Rational(-q),
            ExactScalar::Cyclotomic(c) => ExactScalar::Cyclotomic(Cyclotomic {
                order: c.order,
                coeffs: c.coeffs.iter().map(|x| -x).collect(),
            }),
        }
    }

    pub fn mul(&self, other: &ExactScalar) -> ExactScalar {
        match (self, other) {
            (ExactScalar::Rational(a), ExactScalar::Rational(b)) => ExactScalar::Rational(a * b),
            (ExactScalar::Rational(a), ExactScalar::Cyclotomic(c))
            | (ExactScalar::Cyclotomic(c), ExactScalar::Rational(a)) => {
                if a.is_zero() {
                    return ExactScalar::zero();
                }
                ExactScalar::Cyclotomic(Cyclotomic {
                    order: c.order,
                    coeffs: c.coeffs.iter().map(|x| x * a).collect(),
                })
            }
            _ => {
                let (x, y) = Self::common(self, other).unwrap();
                let prod = upoly_mul(&x.coeffs, &y.coeffs);
                ExactScalar::Cyclotomic(Cyclotomic::new(x.order, prod)).normalized()
            }
        }
    }

    pub fn mul_rational(&self, q: &Rational) -> ExactScalar {
        self.mul(&ExactScalar::Rational(q.clone()))
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self) -> Option<ExactScalar> {
        if self.is_zero() {
            return None;
        }
        match self {
            ExactScalar::Rational(q) => Some(ExactScalar::Rational(q.recip())),
            ExactScalar::Cyclotomic(c) => {
                // extended Euclid: s·a + t·Φ = g, with g a nonzero constant
                let modulus = cyclotomic_polynomial(c.order);
                let mut a = c.coeffs.clone();
                trim(&mut a);
                let (mut r0, mut r1) = (modulus.to_vec(), a);
                let (mut s0, mut s1) = (Vec::<Rational>::new(), vec![Rational::one()]);
                while r1.len() > 1 {
                    let (q, r) = upoly_divrem(&r0, &r1);
                    let s2 = upoly_sub(&s0, &upoly_mul(&q, &s1));
                    r0 = std::mem::replace(&mut r1, r);
                    s0 = std::mem::replace(&mut s1, s2);
                }
                let g = r1[0].clone();
                let inv: Vec<Rational> = s1.iter().map(|x| x / &g).collect();
                Some(ExactScalar::Cyclotomic(Cyclotomic::new(c.order, inv)).normalized())
            }
        }
    }

    /// Field order the value is stored in; 1 for rationals.
    pub fn field_order(&self) -> u64 {
        match self {
            ExactScalar::Rational(_) => 1,
            ExactScalar::Cyclotomic(c) => c.order,
        }
    }
}

impl PartialEq for ExactScalar {
    fn eq(&self, other: &Self) -> bool {
        match Self::common(self, other) {
            None => self.as_rational() == other.as_rational(),
            Some((x, y)) => x.coeffs == y.coeffs,
        }
    }
}

impl Eq for ExactScalar {}

impl From<Rational> for ExactScalar {
    fn from(q: Rational) -> Self {
        ExactScalar::Rational(q)
    }
}

impl From<i64> for ExactScalar {
    fn from(n: i64) -> Self {
        ExactScalar::from_int(n)
    }
}

impl Add for &ExactScalar {
    type Output = ExactScalar;
    fn add(self, rhs: &ExactScalar) -> ExactScalar {
        ExactScalar::add(self, rhs)
    }
}

impl Sub for &ExactScalar {
    type Output = ExactScalar;
    fn sub(self, rhs: &ExactScalar) -> ExactScalar {
        ExactScalar::sub(self, rhs)
    }
}

impl Mul for &ExactScalar {
    type Output = ExactScalar;
    fn mul(self, rhs: &ExactScalar) -> ExactScalar {
        ExactScalar::mul(self, rhs)
    }
}

impl Neg for &ExactScalar {
    type Output = ExactScalar;
    fn neg(self) -> ExactScalar {
        ExactScalar::neg(self)
    }
}

impl fmt::Display for ExactScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactScalar::Rational(q) => write!(f, "{}", format_rational(q)),
            ExactScalar::Cyclotomic(c) => {
                let mut first = true;
                for (i, q) in c.coeffs.iter().enumerate() {
                    if q.is_zero() {
                        continue;
                    }
                    let sign = if q.is_negative() { "-" } else if first { "" } else { "+" };
                    let mag = format_rational(&q.abs());
                    let body = match (i, mag.as_str()) {
                        (0, _) => mag.clone(),
                        (1, "1") => format!("z{}", c.order),
                        (_, "1") => format!("z{}^{}", c.order, i),
                        (1, _) => format!("{mag}*z{}", c.order),
                        _ => format!("{mag}*z{}^{}", c.order, i),
                    };
                    write!(f, "{sign}{body}")?;
                    first = false;
                }
                Ok(())
            }
        }
    }
}
