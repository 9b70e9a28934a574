//! Builders and closed formulas for the FJRW, hybrid and complete
//! intersection families, used as features and as oracles for the engine.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::git::{iota, semistable_supports, Degree, SectorLabel};
use crate::model::{get_int_matrix, get_int_vec, GlsmModel, PotentialPolynomial};
use crate::poly::{Mono, Poly};
use crate::ring::{divides_ideal, CohClass, SectorRing};
use crate::scalar::{int, ExactScalar, Rational};
use crate::series::{
    glsm_I_with, multi_exponents, series_compare, twist_novikov, Engine, EngineOptions, GradedSeries, InsertionSet,
    LaurentZ, Mode, SeriesDiff, SeriesState, TermKey,
};

// ---------------------------------------------------------------------------
// truncated arithmetic in one class H with H^nil = 0

#[derive(Clone, Debug, PartialEq, Eq)]
struct Trunc {
    nil: usize,
    coeffs: BTreeMap<i64, Vec<Rational>>,
}

impl Trunc {
    fn constant(nil: usize, c: Rational) -> Self {
        let mut t = Trunc { nil, coeffs: BTreeMap::new() };
        if nil > 0 && !c.is_zero() {
            let mut v = vec![Rational::zero(); nil];
            v[0] = c;
            t.coeffs.insert(0, v);
        }
        t
    }

    /// `aH + bz`.
    fn linear(nil: usize, a: Rational, b: Rational) -> Self {
        let mut t = Trunc { nil, coeffs: BTreeMap::new() };
        if nil > 1 && !a.is_zero() {
            let mut v = vec![Rational::zero(); nil];
            v[1] = a;
            t.coeffs.insert(0, v);
        }
        if nil > 0 && !b.is_zero() {
            let mut v = vec![Rational::zero(); nil];
            v[0] = b;
            t.coeffs.insert(1, v);
        }
        t
    }

    /// `(aH + bz)^{-1}` for `b ≠ 0`.
    fn inverse_linear(nil: usize, a: &Rational, b: &Rational) -> Self {
        let mut t = Trunc { nil, coeffs: BTreeMap::new() };
        let mut c = b.recip();
        for j in 0..nil {
            let mut v = vec![Rational::zero(); nil];
            v[j] = c.clone();
            t.coeffs.insert(-(j as i64) - 1, v);
            c = -(&c * a) / b;
        }
        t.prune();
        t
    }

    fn prune(&mut self) {
        self.coeffs.retain(|_, v| v.iter().any(|c| !c.is_zero()));
    }

    fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn mul(&self, other: &Trunc) -> Trunc {
        let nil = self.nil;
        let mut out: BTreeMap<i64, Vec<Rational>> = BTreeMap::new();
        for (ea, va) in &self.coeffs {
            for (eb, vb) in &other.coeffs {
                let slot = out.entry(ea + eb).or_insert_with(|| vec![Rational::zero(); nil]);
                for (i, x) in va.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
                    for (j, y) in vb.iter().enumerate().take(nil - i) {
                        slot[i + j] += x * y;
                    }
                }
            }
        }
        let mut t = Trunc { nil, coeffs: out };
        t.prune();
        t
    }

    fn scale(&self, c: &Rational) -> Trunc {
        let mut t = self.clone();
        for v in t.coeffs.values_mut() {
            for x in v.iter_mut() {
                *x *= c;
            }
        }
        t.prune();
        t
    }

    /// Rewrites in a rank-one sector ring with `H ↦ sign·H`.
    fn to_laurent(&self, ring: &Arc<SectorRing>, sign: i64) -> LaurentZ {
        let coeffs = self
            .coeffs
            .iter()
            .map(|(&e, v)| {
                let mut p = Poly::zero(1);
                for (j, c) in v.iter().enumerate() {
                    let s = if j % 2 == 1 && sign < 0 { -c.clone() } else { c.clone() };
                    p.add_term(Mono(vec![j as u32]), &s.into());
                }
                (e, ring.normal_form(&p))
            })
            .collect();
        LaurentZ::from_coeffs(ring, coeffs)
    }
}

fn factorial(n: i64) -> Rational {
    (1..=n).fold(Rational::one(), |acc, i| acc * int(i))
}

fn lcm_all(xs: &[i64]) -> i64 {
    xs.iter().fold(1i64, |acc, &x| acc.lcm(&x))
}

fn floor_i64(q: &Rational) -> i64 {
    q.floor().to_integer().to_i64().unwrap_or(i64::MAX)
}

fn empty_series(model: GlsmModel, insertions: InsertionSet, q_bound: &Rational, t_order: u32, hat_i: Vec<usize>) -> GradedSeries {
    GradedSeries {
        model,
        insertions,
        q_bound: q_bound.clone(),
        t_order,
        state: SeriesState::Glsm,
        hat_i,
        twist: Vec::new(),
        derivative: Vec::new(),
        vanishing: Vec::new(),
        terms: BTreeMap::new(),
    }
}

// ---------------------------------------------------------------------------
// FJRW

/// One cyclic factor of the group: order `r_j` and its weights on `x_1..x_n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CyclicFactor {
    pub order: i64,
    pub action: Vec<i64>,
}

/// Landau-Ginzburg data `(w, G)` with `G = Π μ_{r_j}` and the first factor
/// generated by `J`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FjrwSpec {
    pub n: usize,
    pub r_charges: Vec<i64>,
    pub d_w: i64,
    pub group: Vec<CyclicFactor>,
    pub potential: Option<PotentialPolynomial>,
}

impl FjrwSpec {
    pub fn new(r_charges: Vec<i64>, d_w: i64, group: Vec<CyclicFactor>, potential: Option<PotentialPolynomial>) -> Result<Self> {
        let n = r_charges.len();
        if n == 0 {
            return Err(Error::DimensionMismatch("at least one x-variable is required".into()));
        }
        if d_w <= 0 {
            return Err(Error::Schema(format!("d_w must be positive, got {d_w}")));
        }
        let first = group.first().ok_or_else(|| Error::Schema("group needs at least one generator".into()))?;
        for f in &group {
            if f.order <= 0 {
                return Err(Error::Schema(format!("generator order must be positive, got {}", f.order)));
            }
            if f.action.len() != n {
                return Err(Error::DimensionMismatch(format!("action has length {} but n = {n}", f.action.len())));
            }
        }
        if first.order != d_w {
            return Err(Error::Schema(format!("first generator must be J, of order d_w = {d_w}, got {}", first.order)));
        }
        if let Some(i) = (0..n).find(|&i| first.action[i].rem_euclid(d_w) != r_charges[i].rem_euclid(d_w)) {
            return Err(Error::Schema(format!("first generator acts on x{} by {} but J acts by {}", i + 1, first.action[i], r_charges[i])));
        }
        if let Some(p) = &potential {
            if p.terms().iter().any(|(_, e)| e.len() != n) {
                return Err(Error::DimensionMismatch("potential exponent length differs from n".into()));
            }
        }
        Ok(FjrwSpec { n, r_charges, d_w, group, potential })
    }

    /// `G = ⟨J⟩`.
    pub fn cyclic(r_charges: Vec<i64>, d_w: i64, potential: Option<PotentialPolynomial>) -> Result<Self> {
        let action = r_charges.iter().map(|c| c.rem_euclid(d_w)).collect();
        FjrwSpec::new(r_charges, d_w, vec![CyclicFactor { order: d_w, action }], potential)
    }

    fn s(&self) -> usize {
        self.group.len()
    }

    /// `a_i = Σ_j c_{ij} d_j / r_j`.
    fn exponents(&self, ds: &[i64]) -> Vec<Rational> {
        (0..self.n)
            .map(|i| {
                self.group.iter().zip(ds).fold(Rational::zero(), |acc, (f, &d)| acc + Rational::new(BigInt::from(f.action[i] * d), BigInt::from(f.order)))
            })
            .collect()
    }

    /// The engine degree `−(d_1/r_1, …, d_s/r_s)`.
    pub fn engine_degree(&self, ds: &[i64]) -> Degree {
        self.group.iter().zip(ds).map(|(f, &d)| -Rational::new(BigInt::from(d), BigInt::from(f.order))).collect()
    }

    /// The insertion `t·η_{p_1}`.
    pub fn insertions(&self) -> InsertionSet {
        let mut eta = vec![0; self.s()];
        eta[0] = -self.group[0].order;
        let mut ins = InsertionSet::new();
        ins.push_product("t", &[eta]).expect("fixed insertion name");
        ins
    }

    /// `Î = {p_1}`.
    pub fn hat_i(&self) -> Vec<usize> {
        vec![self.n]
    }
}

pub fn fjrw_build(spec: &FjrwSpec) -> Result<GlsmModel> {
    let (n, s) = (spec.n, spec.s());
    let r = n + s;
    let weights = spec
        .group
        .iter()
        .enumerate()
        .map(|(j, f)| {
            let mut row = f.action.clone();
            row.extend((0..s).map(|l| if l == j { -f.order } else { 0 }));
            row
        })
        .collect();
    let mut r_charges = spec.r_charges.clone();
    r_charges.extend(std::iter::repeat(0).take(s));
    let potential = spec.potential.as_ref().map(|w| {
        let map: Vec<usize> = (0..n).collect();
        let mut ps = vec![0u32; n];
        ps.extend(std::iter::repeat(1).take(s));
        w.reindex(r, &map).times_monomial(&ps)
    });
    GlsmModel::new(weights, r_charges, spec.d_w, vec![-Rational::one(); s], potential)
}

/// Index vectors `(d_1 ≥ 1, d_2.., d_s ≥ 0)` with `Σ d_j/r_j ≤ bound`.
fn fjrw_indices(spec: &FjrwSpec, bound: &Rational) -> Vec<Vec<i64>> {
    fn go(spec: &FjrwSpec, bound: &Rational, j: usize, used: Rational, cur: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if j == spec.s() {
            out.push(cur.clone());
            return;
        }
        let r = spec.group[j].order;
        let mut d = if j == 0 { 1 } else { 0 };
        loop {
            let next = &used + Rational::new(BigInt::from(d), BigInt::from(r));
            if &next > bound {
                break;
            }
            cur.push(d);
            go(spec, bound, j + 1, next, cur, out);
            cur.pop();
            d += 1;
        }
    }
    let mut out = Vec::new();
    go(spec, bound, 0, Rational::zero(), &mut Vec::new(), &mut out);
    out
}

/// The closed FJRW I-function, placed at engine degrees in the built model.
#[allow(non_snake_case)]
pub fn fjrw_I_direct(spec: &FjrwSpec, bound: &Rational, t_order: u32) -> Result<GradedSeries> {
    let model = fjrw_build(spec)?;
    let engine = Engine::new(&model)?;
    let mut out = empty_series(model.clone(), spec.insertions(), bound, t_order, spec.hat_i());
    for ds in fjrw_indices(spec, bound) {
        let degree = spec.engine_degree(&ds);
        let a = spec.exponents(&ds);
        if a.iter().any(|x| x.is_integer()) {
            out.vanishing.push(degree);
            continue;
        }
        let mut coeff = Rational::one();
        let mut zexp = 0i64;
        for ai in &a {
            for nu in 1..=floor_i64(ai) {
                coeff *= int(nu) - ai;
                zexp += 1;
            }
        }
        coeff /= factorial(ds[0] - 1);
        zexp -= ds[0] - 1;
        for &d in &ds[1..] {
            coeff /= factorial(d);
            zexp -= d;
        }
        let ring = engine.degree_ring(&degree)?;
        let theta_degree = model.theta_degree(&degree);
        for alpha in 0..=t_order {
            let c = &coeff * Rational::from_integer(BigInt::from(ds[0]).pow(alpha)) / factorial(alpha as i64);
            let v = LaurentZ::monomial(ring, zexp, &Poly::constant(model.k, c.into()));
            out.terms.insert(TermKey { theta_degree: theta_degree.clone(), degree: degree.clone(), t_exponent: vec![alpha] }, v);
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// hybrid

/// A bundle over `P(d_1..d_n)` with fibre coordinates of weights `w_i` and
/// sections `f_j` of degree `d_j`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HybridSpec {
    pub x_weights: Vec<i64>,
    pub p_weights: Vec<i64>,
    pub f: Vec<PotentialPolynomial>,
}

impl HybridSpec {
    pub fn new(x_weights: Vec<i64>, p_weights: Vec<i64>, f: Vec<PotentialPolynomial>) -> Result<Self> {
        if x_weights.is_empty() || p_weights.is_empty() {
            return Err(Error::DimensionMismatch("hybrid model needs x- and p-variables".into()));
        }
        if let Some(w) = x_weights.iter().chain(&p_weights).find(|&&w| w <= 0) {
            return Err(Error::Schema(format!("hybrid weights must be positive, got {w}")));
        }
        if !f.is_empty() && f.len() != p_weights.len() {
            return Err(Error::DimensionMismatch(format!("{} sections for {} p-variables", f.len(), p_weights.len())));
        }
        if f.iter().any(|p| p.terms().iter().any(|(_, e)| e.len() != x_weights.len())) {
            return Err(Error::DimensionMismatch("section exponent length differs from m".into()));
        }
        Ok(HybridSpec { x_weights, p_weights, f })
    }

    fn m(&self) -> usize {
        self.x_weights.len()
    }

    fn lcm(&self) -> i64 {
        lcm_all(&self.p_weights)
    }

    /// `d = −k / lcm(d_j)`.
    pub fn engine_degree(&self, k: i64) -> Degree {
        vec![-Rational::new(BigInt::from(k), BigInt::from(self.lcm()))]
    }

    /// `t_j·η_{p_j}`.
    pub fn insertions(&self) -> InsertionSet {
        let mut ins = InsertionSet::new();
        for (j, &d) in self.p_weights.iter().enumerate() {
            ins.push_product(&format!("t{}", j + 1), &[vec![-d]]).expect("distinct insertion names");
        }
        ins
    }

    pub fn hat_i(&self) -> Vec<usize> {
        (self.m()..self.m() + self.p_weights.len()).collect()
    }
}

pub fn hybrid_build(spec: &HybridSpec) -> Result<GlsmModel> {
    let (m, n) = (spec.m(), spec.p_weights.len());
    let r = m + n;
    let mut row = spec.x_weights.clone();
    row.extend(spec.p_weights.iter().map(|d| -d));
    let mut r_charges = vec![0; m];
    r_charges.extend(std::iter::repeat(1).take(n));
    let potential = if spec.f.is_empty() {
        None
    } else {
        let map: Vec<usize> = (0..m).collect();
        let mut terms = Vec::new();
        for (j, f) in spec.f.iter().enumerate() {
            let mut p = vec![0u32; r];
            p[m + j] = 1;
            terms.extend(f.reindex(r, &map).times_monomial(&p).terms().iter().cloned());
        }
        Some(PotentialPolynomial::new(terms))
    };
    GlsmModel::new(vec![row], r_charges, 1, vec![-Rational::one()], potential)
}

/// The closed hybrid I-function in its own truncated arithmetic, mapped to
/// the built model through `H ↦ −H` and `k ↦ −k/lcm(d_j)`.
#[allow(non_snake_case)]
pub fn hybrid_I_direct(spec: &HybridSpec, bound: &Rational, t_order: u32) -> Result<GradedSeries> {
    let model = hybrid_build(spec)?;
    let engine = Engine::new(&model)?;
    let ins = spec.insertions();
    let mut out = empty_series(model.clone(), ins, bound, t_order, spec.hat_i());
    let l = spec.lcm();
    let frac_of = |w: i64, k: i64| Rational::new(BigInt::from(w * k), BigInt::from(l));
    let mut k = 0i64;
    loop {
        let degree = spec.engine_degree(k);
        if model.theta_degree(&degree) > *bound {
            break;
        }
        let nil = spec.p_weights.iter().filter(|&&d| frac_of(d, k).is_integer()).count();
        if nil == 0 {
            k += 1;
            continue;
        }
        let mut base = Trunc::constant(nil, Rational::one());
        for &w in &spec.x_weights {
            let a = frac_of(w, k);
            for nu in 1..=floor_i64(&a) {
                base = base.mul(&Trunc::linear(nil, int(-w), int(nu) - &a));
            }
        }
        for &d in &spec.p_weights {
            let a = frac_of(d, k);
            for nu in 1..=(a.ceil().to_integer().to_i64().unwrap_or(0) - 1) {
                base = base.mul(&Trunc::inverse_linear(nil, &int(d), &(&a - int(nu))));
            }
        }
        if k == 0 {
            // endpoint factor of the p-coordinates at the identity
            for &d in &spec.p_weights {
                base = base.mul(&Trunc::linear(nil, int(d), Rational::zero()));
            }
        }
        if base.is_zero() {
            out.vanishing.push(degree);
            k += 1;
            continue;
        }
        // X_j = d_j H z^{-1} + d_j k / lcm
        let xs: Vec<Trunc> = spec
            .p_weights
            .iter()
            .map(|&d| {
                let mut x = Trunc::constant(nil, frac_of(d, k));
                if nil > 1 {
                    let mut v = vec![Rational::zero(); nil];
                    v[1] = int(d);
                    x.coeffs.insert(-1, v);
                }
                x
            })
            .collect();
        let ring = engine.degree_ring(&degree)?;
        let theta_degree = model.theta_degree(&degree);
        for alpha in multi_exponents(xs.len(), t_order) {
            let mut v = base.clone();
            for (x, &e) in xs.iter().zip(&alpha) {
                for _ in 0..e {
                    v = v.mul(x);
                }
                v = v.scale(&factorial(e as i64).recip());
            }
            let v = v.to_laurent(ring, -1);
            if !v.is_zero() {
                out.terms.insert(TermKey { theta_degree: theta_degree.clone(), degree: degree.clone(), t_exponent: alpha }, v);
            }
        }
        k += 1;
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// complete intersections

/// An ambient toric model `X` with line bundle characters `τ_j` and sections
/// `f_j` cutting out `Z ⊂ X`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CiSpec {
    pub ambient: GlsmModel,
    pub tau: Vec<Vec<i64>>,
    pub f: Vec<PotentialPolynomial>,
    pub insertions: InsertionSet,
    pub assert_semipositive: bool,
    pub assert_pairing_nondegenerate: bool,
}

impl CiSpec {
    pub fn new(ambient: GlsmModel, tau: Vec<Vec<i64>>, f: Vec<PotentialPolynomial>) -> Result<Self> {
        if let Some(t) = tau.iter().find(|t| t.len() != ambient.k) {
            return Err(Error::DimensionMismatch(format!("character {t:?} has length {} but k = {}", t.len(), ambient.k)));
        }
        if !f.is_empty() && f.len() != tau.len() {
            return Err(Error::DimensionMismatch(format!("{} sections for {} characters", f.len(), tau.len())));
        }
        if f.iter().any(|p| p.terms().iter().any(|(_, e)| e.len() != ambient.r)) {
            return Err(Error::DimensionMismatch("section exponent length differs from r".into()));
        }
        Ok(CiSpec {
            ambient,
            tau,
            f,
            insertions: InsertionSet::new(),
            assert_semipositive: false,
            assert_pairing_nondegenerate: false,
        })
    }

    /// The ambient model with vanishing R-charges.
    pub fn ambient_model(&self) -> Result<GlsmModel> {
        let x = &self.ambient;
        GlsmModel::new(x.weights.clone(), vec![0; x.r], 1, x.theta.clone(), None)
    }
}

/// `V_1 × V_2` with `p_j` of weight `−τ_j` and R-charge 1, potential `Σ p_j f_j`.
pub fn ci_build(spec: &CiSpec) -> Result<GlsmModel> {
    let x = &spec.ambient;
    let (r1, s) = (x.r, spec.tau.len());
    let r = r1 + s;
    let weights = x
        .weights
        .iter()
        .enumerate()
        .map(|(a, row)| {
            let mut row = row.clone();
            row.extend(spec.tau.iter().map(|t| -t[a]));
            row
        })
        .collect();
    let mut r_charges = vec![0; r1];
    r_charges.extend(std::iter::repeat(1).take(s));
    let potential = if spec.f.is_empty() {
        None
    } else {
        let map: Vec<usize> = (0..r1).collect();
        let mut terms = Vec::new();
        for (j, f) in spec.f.iter().enumerate() {
            let mut p = vec![0u32; r];
            p[r1 + j] = 1;
            terms.extend(f.reindex(r, &map).times_monomial(&p).terms().iter().cloned());
        }
        Some(PotentialPolynomial::new(terms))
    };
    GlsmModel::new(weights, r_charges, 1, x.theta.clone(), potential)
}

fn check_ci_preconditions(spec: &CiSpec, bound: &Rational) -> Result<()> {
    let x = spec.ambient_model()?;
    let y = ci_build(spec)?;
    let sx = semistable_supports(&x)?;
    let sy = semistable_supports(&y)?;
    if sx != sy {
        return Err(Error::Precondition("the p-coordinates change the semistable locus".into()));
    }
    for d in Engine::new(&x)?.effective_degrees(bound)? {
        if let Some(t) = spec.tau.iter().find(|t| GlsmModel::pair_character(&d, t).is_negative()) {
            return Err(Error::Precondition(format!(
                "not semipositive: ⟨d,τ⟩ < 0 for τ = {t:?} at degree {}",
                crate::git::format_degree(&d).join(", ")
            )));
        }
    }
    Ok(())
}

/// `Σ_d q^d 𝕀^X_d Π_j Π_{0≤ν<⟨d,τ_j⟩} (τ_j + (⟨d,τ_j⟩−ν)z)` in the ambient rings.
pub fn ci_wang_rhs(spec: &CiSpec, bound: &Rational, t_order: u32) -> Result<GradedSeries> {
    ci_wang_rhs_with(spec, bound, t_order, EngineOptions::default())
}

pub fn ci_wang_rhs_with(spec: &CiSpec, bound: &Rational, t_order: u32, opts: EngineOptions) -> Result<GradedSeries> {
    let x = spec.ambient_model()?;
    let engine = Engine::new(&x)?;
    let mut s = engine.series(&spec.insertions, bound, t_order, &Mode::Ambient, opts)?;
    let mut factors: BTreeMap<Degree, LaurentZ> = BTreeMap::new();
    for key in s.terms.keys() {
        if factors.contains_key(&key.degree) {
            continue;
        }
        let ring = engine.degree_ring(&key.degree)?;
        let mut f = LaurentZ::one(ring);
        for t in &spec.tau {
            let a = GlsmModel::pair_character(&key.degree, t);
            let class = engine.rho_class(ring, t);
            let top = a.ceil().to_integer().to_i64().unwrap_or(0);
            for nu in 0..top {
                f = f.mul(&LaurentZ::linear(ring, &class, &(&a - int(nu))));
            }
        }
        factors.insert(key.degree.clone(), f);
    }
    for (key, v) in s.terms.iter_mut() {
        *v = v.mul(&factors[&key.degree]);
    }
    s.terms.retain(|_, v| !v.is_zero());
    Ok(s)
}

fn euler_factors(ring: &Arc<SectorRing>, g: &SectorLabel, tau: &[Vec<i64>]) -> Vec<CohClass> {
    tau.iter()
        .filter(|t| iota(g, t).is_zero())
        .map(|t| CohClass::new(ring, &Poly::linear(&t.iter().map(|&c| int(-c)).collect::<Vec<_>>())))
        .collect()
}

/// `glsm_I` of the CI model after the Novikov twist by `τ` and the sector
/// phase `e^{πi Σ_j ι_g(τ_j)}`, still carrying the Euler factors.
pub fn ci_normalized(spec: &CiSpec, bound: &Rational, t_order: u32, opts: EngineOptions) -> Result<GradedSeries> {
    check_ci_preconditions(spec, bound)?;
    let y = ci_build(spec)?;
    let glsm = glsm_I_with(&y, &spec.insertions, bound, t_order, None, opts)?;
    let mut s = twist_novikov(&glsm, &spec.tau)?;
    for (key, v) in s.terms.iter_mut() {
        let g = v.sector().clone();
        let phase = spec.tau.iter().fold(Rational::zero(), |acc, t| acc + iota(&g, t));
        let den = phase.denom().to_u64().ok_or_else(|| Error::Internal("phase denominator too large".into()))?;
        *v = v.scale(&ExactScalar::exp_pi_i(&phase, 2 * den));
        let factors = euler_factors(v.ring(), &g, &spec.tau);
        for (&e, p) in v.coeffs() {
            if !divides_ideal(&CohClass::new(v.ring(), p), &factors)? {
                return Err(Error::Internal(format!(
                    "coefficient at degree {} and z^{e} is not divisible by its Euler factor",
                    crate::git::format_degree(&key.degree).join(", ")
                )));
            }
        }
    }
    Ok(s)
}

#[derive(Clone, Debug)]
pub struct CiReport {
    pub diff: SeriesDiff,
    pub semipositive_asserted: bool,
    pub pairing_nondegenerate_asserted: bool,
}

impl CiReport {
    pub fn to_json(&self) -> Value {
        json!({
            "level": "ambient-level equality",
            "diff": self.diff.to_json(),
            "semipositive": if self.semipositive_asserted { "asserted and checked" } else { "checked within truncation" },
            "pairing_nondegenerate": if self.pairing_nondegenerate_asserted { "asserted" } else { "assumed, unverified" },
        })
    }
}

/// Compares the normalized CI series with the Euler factor times the
/// ambient hypersurface series, term by term.
pub fn ci_compare(spec: &CiSpec, bound: &Rational, t_order: u32) -> Result<CiReport> {
    ci_compare_with(spec, bound, t_order, EngineOptions::default())
}

pub fn ci_compare_with(spec: &CiSpec, bound: &Rational, t_order: u32, opts: EngineOptions) -> Result<CiReport> {
    let lhs = ci_normalized(spec, bound, t_order, opts)?;
    let mut rhs = ci_wang_rhs_with(spec, bound, t_order, opts)?;
    for v in rhs.terms.values_mut() {
        let g = v.sector().clone();
        let e = euler_factors(v.ring(), &g, &spec.tau)
            .into_iter()
            .fold(LaurentZ::one(v.ring()), |acc, c| acc.mul(&LaurentZ::monomial(v.ring(), 0, c.poly())));
        *v = v.mul(&e);
    }
    rhs.terms.retain(|_, v| !v.is_zero());
    let diff = series_compare(&lhs, &rhs, None)?;
    Ok(CiReport { diff, semipositive_asserted: spec.assert_semipositive, pairing_nondegenerate_asserted: spec.assert_pairing_nondegenerate })
}

// ---------------------------------------------------------------------------
// "specialize" blocks

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Specialization {
    Fjrw(FjrwSpec),
    Hybrid(HybridSpec),
    Ci(CiSpec),
}

impl Specialization {
    pub fn kind(&self) -> &'static str {
        match self {
            Specialization::Fjrw(_) => "fjrw",
            Specialization::Hybrid(_) => "hybrid",
            Specialization::Ci(_) => "ci",
        }
    }

    pub fn model(&self) -> Result<GlsmModel> {
        match self {
            Specialization::Fjrw(s) => fjrw_build(s),
            Specialization::Hybrid(s) => hybrid_build(s),
            Specialization::Ci(s) => ci_build(s),
        }
    }
}

fn get_block<'a>(obj: &'a Map<String, Value>, key: &str) -> Option<&'a Value> {
    obj.get(key).filter(|v| !v.is_null())
}

fn polys(v: Option<&Value>, r: usize, key: &str) -> Result<Vec<PotentialPolynomial>> {
    match v {
        None | Some(Value::Null) => Ok(Vec::new()),
        Some(Value::Array(items)) => items
            .iter()
            .map(|s| s.as_str().ok_or_else(|| Error::Schema(format!("\"{key}\" entries must be strings"))).and_then(|s| PotentialPolynomial::parse(s, r)))
            .collect(),
        Some(_) => Err(Error::Schema(format!("\"{key}\" must be an array of strings"))),
    }
}

fn flag(obj: &Map<String, Value>, key: &str) -> Result<bool> {
    match obj.get(key) {
        None | Some(Value::Null) => Ok(false),
        Some(Value::Bool(b)) => Ok(*b),
        Some(_) => Err(Error::Schema(format!("\"{key}\" must be a boolean"))),
    }
}

/// Reads the `"specialize"` block of a model file. A `ci` block takes its
/// ambient model from the enclosing file.
pub fn parse_specialization(text: &str) -> Result<Specialization> {
    let value: Value = serde_json::from_str(text).map_err(Error::from_json)?;
    let root = value.as_object().ok_or_else(|| Error::Schema("model file must be a JSON object".into()))?;
    let block = get_block(root, "specialize")
        .and_then(Value::as_object)
        .ok_or_else(|| Error::Schema("missing \"specialize\" object".into()))?;
    let kind = block.get("kind").and_then(Value::as_str).ok_or_else(|| Error::Schema("\"specialize\" needs a \"kind\"".into()))?;
    match kind {
        "fjrw" => {
            let r_charges = get_int_vec(block.get("r_charges"), "r_charges")?;
            let d_w = block.get("d_w").and_then(Value::as_i64).ok_or_else(|| Error::Schema("\"d_w\" must be an integer".into()))?;
            let n = r_charges.len();
            let potential = match block.get("potential") {
                None | Some(Value::Null) => None,
                Some(Value::String(s)) => Some(PotentialPolynomial::parse(s, n)?),
                Some(_) => return Err(Error::Schema("\"potential\" must be a string".into())),
            };
            let spec = match block.get("group") {
                None | Some(Value::Null) => FjrwSpec::cyclic(r_charges, d_w, potential)?,
                Some(Value::Array(items)) => {
                    let group = items
                        .iter()
                        .map(|g| {
                            let order = g.get("order").and_then(Value::as_i64).ok_or_else(|| Error::Schema("group entries need an integer \"order\"".into()))?;
                            let action = get_int_vec(g.get("action"), "action")?;
                            Ok(CyclicFactor { order, action })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    FjrwSpec::new(r_charges, d_w, group, potential)?
                }
                Some(_) => return Err(Error::Schema("\"group\" must be an array".into())),
            };
            Ok(Specialization::Fjrw(spec))
        }
        "hybrid" => {
            let x_weights = get_int_vec(block.get("x_weights"), "x_weights")?;
            let p_weights = get_int_vec(block.get("p_weights"), "p_weights")?;
            let f = polys(block.get("f"), x_weights.len(), "f")?;
            Ok(Specialization::Hybrid(HybridSpec::new(x_weights, p_weights, f)?))
        }
        "ci" => {
            let ambient = GlsmModel::from_json(&value)?;
            let tau = get_int_matrix(block, "tau")?;
            let f = polys(block.get("f"), ambient.r, "f")?;
            let mut spec = CiSpec::new(ambient, tau, f)?;
            if let Some(items) = block.get("insertions") {
                let specs: Vec<String> = items
                    .as_array()
                    .ok_or_else(|| Error::Schema("\"insertions\" must be an array of strings".into()))?
                    .iter()
                    .map(|s| s.as_str().map(String::from).ok_or_else(|| Error::Schema("\"insertions\" must be an array of strings".into())))
                    .collect::<Result<_>>()?;
                spec.insertions = InsertionSet::parse(&specs, &spec.ambient)?;
            }
            spec.assert_semipositive = flag(block, "assert_semipositive")?;
            spec.assert_pairing_nondegenerate = flag(block, "assert_pairing_nondegenerate")?;
            Ok(Specialization::Ci(spec))
        }
        other => Err(Error::Schema(format!("unknown specialization kind {other:?}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::git::tests::quintic;
    use crate::scalar::rat;
    use crate::series::glsm_I_with;

    fn cubic_spec() -> FjrwSpec {
        FjrwSpec::cyclic(vec![1], 3, Some(PotentialPolynomial::parse("x1^3", 1).unwrap())).unwrap()
    }

    fn engine_fjrw(spec: &FjrwSpec, bound: &Rational, t: u32) -> GradedSeries {
        let m = fjrw_build(spec).unwrap();
        glsm_I_with(&m, &spec.insertions(), bound, t, Some(spec.hat_i()), EngineOptions::default()).unwrap()
    }

    fn scalar_term(s: &GradedSeries, d: &[Rational], alpha: u32) -> Vec<(i64, Rational)> {
        s.term(d, &[alpha])
            .map(|v| v.coeffs().iter().map(|(&e, p)| (e, p.coeff(&Mono::one(s.model.k)).as_rational().unwrap().clone())).collect())
            .unwrap_or_default()
    }

    #[test]
    fn fjrw_build_examples() {
        let m = fjrw_build(&cubic_spec()).unwrap();
        assert_eq!(m.weights, vec![vec![1, -3]]);
        assert_eq!(m.r_charges, vec![1, 0]);
        assert_eq!(m.theta, vec![int(-1)]);
        assert_eq!(m.potential.unwrap().to_string(), "x1^3*x2");

        let fermat = FjrwSpec::cyclic(vec![1, 1], 2, Some(PotentialPolynomial::parse("x1^2+x2^2", 2).unwrap())).unwrap();
        let m = fjrw_build(&fermat).unwrap();
        assert_eq!(m.weights, vec![vec![1, 1, -2]]);
        assert_eq!(m.r_charges, vec![1, 1, 0]);

        let two = FjrwSpec::new(
            vec![1, 1],
            3,
            vec![CyclicFactor { order: 3, action: vec![1, 1] }, CyclicFactor { order: 3, action: vec![1, 2] }],
            Some(PotentialPolynomial::parse("x1^3+x2^3", 2).unwrap()),
        )
        .unwrap();
        let m = fjrw_build(&two).unwrap();
        assert_eq!(m.weights, vec![vec![1, 1, -3, 0], vec![1, 2, 0, -3]]);
        assert_eq!(m.theta, vec![int(-1), int(-1)]);
    }

    #[test]
    fn first_generator_must_be_j() {
        assert!(FjrwSpec::new(vec![1], 3, vec![CyclicFactor { order: 2, action: vec![1] }], None).is_err());
        assert!(FjrwSpec::new(vec![1], 3, vec![CyclicFactor { order: 3, action: vec![2] }], None).is_err());
    }

    #[test]
    fn cubic_direct_values() {
        let s = fjrw_I_direct(&cubic_spec(), &int(4), 1).unwrap();
        assert_eq!(scalar_term(&s, &[rat(-1, 3)], 0), vec![(0, int(1))]);
        assert_eq!(scalar_term(&s, &[rat(-2, 3)], 0), vec![(-1, int(1))]);
        assert_eq!(scalar_term(&s, &[rat(-4, 3)], 0), vec![(-2, rat(-1, 18))]);
        assert_eq!(scalar_term(&s, &[rat(-4, 3)], 1), vec![(-2, rat(-4, 18))]);
        for k in [3, 6, 9, 12] {
            assert!(s.term(&[rat(-k, 3)], &[0]).is_none());
        }
    }

    #[test]
    fn fjrw_engine_agrees() {
        let bound = int(4);
        for spec in [
            cubic_spec(),
            FjrwSpec::cyclic(vec![1, 1], 2, None).unwrap(),
            FjrwSpec::cyclic(vec![1, 2], 5, None).unwrap(),
            FjrwSpec::new(vec![1, 1], 3, vec![CyclicFactor { order: 3, action: vec![1, 1] }, CyclicFactor { order: 3, action: vec![1, 2] }], None).unwrap(),
        ] {
            let direct = fjrw_I_direct(&spec, &bound, 2).unwrap();
            let engine = engine_fjrw(&spec, &bound, 2);
            assert!(series_compare(&engine, &direct, None).unwrap().is_empty(), "{spec:?}");
            for d in &direct.vanishing {
                assert!(engine.vanishing.contains(d));
            }
        }
    }

    #[test]
    fn hybrid_examples() {
        let spec = HybridSpec::new(vec![1], vec![3], Vec::new()).unwrap();
        let m = hybrid_build(&spec).unwrap();
        assert_eq!(m.weights, vec![vec![1, -3]]);
        assert_eq!(m.r_charges, vec![0, 1]);
        let s = hybrid_I_direct(&spec, &int(1), 0).unwrap();
        let v = s.term(&[rat(-1, 3)], &[0]).unwrap();
        assert_eq!(v.coeffs().len(), 1);
        assert!(s.term(&[int(-1)], &[0]).is_none());
        assert!(s.vanishing.contains(&vec![int(0)]));
    }

    #[test]
    fn hybrid_engine_agrees() {
        for spec in [
            HybridSpec::new(vec![1], vec![3], Vec::new()).unwrap(),
            HybridSpec::new(vec![1, 1], vec![2], Vec::new()).unwrap(),
            HybridSpec::new(vec![1, 1, 1], vec![1, 2], Vec::new()).unwrap(),
        ] {
            let bound = int(3);
            let direct = hybrid_I_direct(&spec, &bound, 2).unwrap();
            let m = hybrid_build(&spec).unwrap();
            let engine = glsm_I_with(&m, &spec.insertions(), &bound, 2, None, EngineOptions::default()).unwrap();
            assert!(series_compare(&engine, &direct, None).unwrap().is_empty(), "{spec:?}");
        }
    }

    fn quintic_ci() -> CiSpec {
        CiSpec::new(quintic_ambient(), vec![vec![5]], Vec::new()).unwrap()
    }

    fn quintic_ambient() -> GlsmModel {
        GlsmModel::new(vec![vec![1; 5]], vec![0; 5], 1, vec![int(1)], None).unwrap()
    }

    #[test]
    fn ci_build_matches_quintic() {
        let y = ci_build(&quintic_ci()).unwrap();
        assert_eq!(y.weights, quintic().weights);
        assert_eq!(y.r_charges, quintic().r_charges);
    }

    #[test]
    fn wang_rhs_degree_one() {
        let s = ci_wang_rhs(&quintic_ci(), &int(1), 0).unwrap();
        let v = s.term(&[int(1)], &[]).unwrap();
        // Π_{m=1}^5 (5H + mz) / (H+z)^5: leading coefficient 120 at z^0
        assert_eq!(v.coeffs().get(&0).unwrap().coeff(&Mono(vec![0])), ExactScalar::from(int(120)));
        let one = s.term(&[int(0)], &[]).unwrap();
        assert_eq!(*one, LaurentZ::one(one.ring()));
    }

    #[test]
    fn ci_compare_examples() {
        assert!(ci_compare(&quintic_ci(), &int(3), 0).unwrap().diff.is_empty());
        let p3 = GlsmModel::new(vec![vec![1; 4]], vec![0; 4], 1, vec![int(1)], None).unwrap();
        let spec = CiSpec::new(p3, vec![vec![2], vec![2]], Vec::new()).unwrap();
        assert!(ci_compare(&spec, &int(2), 0).unwrap().diff.is_empty());
        let p112 = GlsmModel::new(vec![vec![1, 1, 2]], vec![0; 3], 1, vec![int(1)], None).unwrap();
        let spec = CiSpec::new(p112, vec![vec![1]], Vec::new()).unwrap();
        assert!(ci_compare(&spec, &int(2), 1).unwrap().diff.is_empty());
    }

    #[test]
    fn ci_with_insertion() {
        let mut spec = quintic_ci();
        spec.insertions = InsertionSet::parse(&["t=rho1".to_string()], &spec.ambient).unwrap();
        assert!(ci_compare(&spec, &int(2), 2).unwrap().diff.is_empty());
    }

    #[test]
    fn ci_rejects_negative_tau() {
        let spec = CiSpec::new(quintic_ambient(), vec![vec![-1]], Vec::new()).unwrap();
        assert!(matches!(ci_compare(&spec, &int(1), 0), Err(Error::Precondition(_))));
    }

    #[test]
    fn parse_blocks() {
        let text = r#"{"specialize": {"kind": "fjrw", "r_charges": [1], "d_w": 3, "potential": "x^3"}}"#;
        assert_eq!(parse_specialization(text).unwrap(), Specialization::Fjrw(cubic_spec()));
        let text = r#"{"specialize": {"kind": "hybrid", "x_weights": [1, 1], "p_weights": [2], "f": ["x1^2+x2^2"]}}"#;
        let Specialization::Hybrid(h) = parse_specialization(text).unwrap() else { panic!() };
        assert_eq!(hybrid_build(&h).unwrap().potential.unwrap().to_string(), "x2^2*x3 + x1^2*x3");
        let text = r#"{"r": 5, "k": 1, "weights": [[1,1,1,1,1]], "r_charges": [0,0,0,0,0], "d_w": 1, "theta": ["1"],
            "specialize": {"kind": "ci", "tau": [[5]], "assert_semipositive": true}}"#;
        let Specialization::Ci(c) = parse_specialization(text).unwrap() else { panic!() };
        assert!(c.assert_semipositive);
        assert_eq!(c.tau, vec![vec![5]]);
        assert!(parse_specialization(r#"{"specialize": {"kind": "other"}}"#).is_err());
    }
}
