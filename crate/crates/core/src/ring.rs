//! Presented sector cohomology rings `Q[H_1..H_k]/SR` and their classes.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::git::{sr_generators, sr_generators_from, SectorLabel, SupportSet};
use crate::model::GlsmModel;
use crate::poly::{groebner_basis, Mono, Poly};
use crate::scalar::{ExactScalar, Rational};

#[derive(Debug)]
pub struct SectorRing {
    pub sector: SectorLabel,
    pub k: usize,
    pub sr_generators: Vec<SupportSet>,
    pub relations: Vec<Poly>,
    pub groebner: Vec<Poly>,
    /// Standard monomials in increasing order.
    pub staircase: Vec<Mono>,
}

pub fn build_ring(m: &GlsmModel, g: &SectorLabel) -> Result<Arc<SectorRing>> {
    let gens = sr_generators(m, g)?;
    ring_from_generators(m, g, gens)
}

pub(crate) fn build_ring_from(m: &GlsmModel, supports: &[SupportSet], g: &SectorLabel) -> Result<Arc<SectorRing>> {
    let gens = sr_generators_from(m, supports, g)?;
    ring_from_generators(m, g, gens)
}

fn ring_from_generators(m: &GlsmModel, g: &SectorLabel, gens: Vec<SupportSet>) -> Result<Arc<SectorRing>> {
    let relations = gens
        .iter()
        .map(|t| t.iter().fold(Poly::one(m.k), |acc, &i| acc.mul(&Poly::linear(&m.column_q(i)))))
        .collect();
    let mut ring = SectorRing::from_relations(m.k, g.clone(), relations)?;
    ring.sr_generators = gens;
    Ok(Arc::new(ring))
}

impl SectorRing {
    pub fn from_relations(k: usize, sector: SectorLabel, relations: Vec<Poly>) -> Result<SectorRing> {
        let groebner = groebner_basis(&relations);
        let staircase = staircase(k, &groebner)?;
        Ok(SectorRing { sector, k, sr_generators: Vec::new(), relations, groebner, staircase })
    }

    pub fn dimension(&self) -> usize {
        self.staircase.len()
    }

    /// Largest degree of a standard monomial; every homogeneous class of
    /// higher degree vanishes.
    pub fn top_degree(&self) -> u32 {
        self.staircase.iter().map(Mono::degree).max().unwrap_or(0)
    }

    pub fn normal_form(&self, p: &Poly) -> Poly {
        p.reduce(&self.groebner)
    }

    pub fn compatible(&self, other: &SectorRing) -> bool {
        self.k == other.k && self.groebner == other.groebner
    }
}

fn staircase(k: usize, groebner: &[Poly]) -> Result<Vec<Mono>> {
    let leads: Vec<&Mono> = groebner.iter().map(|g| g.leading().unwrap().0).collect();
    if leads.iter().any(|m| m.is_one()) {
        return Ok(Vec::new());
    }
    let mut caps = Vec::with_capacity(k);
    for a in 0..k {
        let pure = leads.iter().filter(|m| m.0.iter().enumerate().all(|(b, &e)| b == a || e == 0)).map(|m| m.0[a]).min();
        caps.push(pure.ok_or(Error::InfiniteRing(a + 1))?);
    }
    let mut out = Vec::new();
    let mut e = vec![0u32; k];
    loop {
        let m = Mono(e.clone());
        if !leads.iter().any(|l| l.divides(&m)) {
            out.push(m);
        }
        let mut pos = 0;
        while pos < k {
            e[pos] += 1;
            if e[pos] < caps[pos] {
                break;
            }
            e[pos] = 0;
            pos += 1;
        }
        if pos == k {
            break;
        }
    }
    out.sort();
    Ok(out)
}

/// An element of a sector ring, kept in normal form.
#[derive(Clone, Debug)]
pub struct CohClass {
    ring: Arc<SectorRing>,
    poly: Poly,
}

impl PartialEq for CohClass {
    fn eq(&self, other: &Self) -> bool {
        self.ring.compatible(&other.ring) && self.poly == other.poly
    }
}

impl CohClass {
    pub fn new(ring: &Arc<SectorRing>, p: &Poly) -> Self {
        CohClass { ring: ring.clone(), poly: ring.normal_form(p) }
    }

    pub fn zero(ring: &Arc<SectorRing>) -> Self {
        CohClass { ring: ring.clone(), poly: Poly::zero(ring.k) }
    }

    pub fn one(ring: &Arc<SectorRing>) -> Self {
        CohClass::new(ring, &Poly::one(ring.k))
    }

    pub fn scalar(ring: &Arc<SectorRing>, s: ExactScalar) -> Self {
        CohClass::new(ring, &Poly::constant(ring.k, s))
    }

    pub fn ring(&self) -> &Arc<SectorRing> {
        &self.ring
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    fn check(&self, other: &CohClass) -> Result<()> {
        if Arc::ptr_eq(&self.ring, &other.ring) || self.ring.compatible(&other.ring) {
            Ok(())
        } else {
            Err(Error::RingMismatch(format!(
                "sector {:?} vs sector {:?}",
                self.ring.sector.to_strings(),
                other.ring.sector.to_strings()
            )))
        }
    }

    pub fn add(&self, other: &CohClass) -> Result<CohClass> {
        self.check(other)?;
        Ok(CohClass { ring: self.ring.clone(), poly: self.poly.add(&other.poly) })
    }

    pub fn sub(&self, other: &CohClass) -> Result<CohClass> {
        self.check(other)?;
        Ok(CohClass { ring: self.ring.clone(), poly: self.poly.sub(&other.poly) })
    }

    pub fn mul(&self, other: &CohClass) -> Result<CohClass> {
        self.check(other)?;
        Ok(CohClass::new(&self.ring, &self.poly.mul(&other.poly)))
    }

    pub fn scale(&self, s: &ExactScalar) -> CohClass {
        CohClass { ring: self.ring.clone(), poly: self.poly.scale(s) }
    }

    pub fn neg(&self) -> CohClass {
        CohClass { ring: self.ring.clone(), poly: self.poly.neg() }
    }

    /// Coefficient on a standard monomial.
    pub fn coeff(&self, m: &Mono) -> ExactScalar {
        self.poly.coeff(m)
    }
}

impl fmt::Display for CohClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.poly)
    }
}

/// The class of the linear form `Σ_a xi_a H_a`.
pub fn class_from_character(ring: &Arc<SectorRing>, xi: &[Rational]) -> CohClass {
    CohClass::new(ring, &Poly::linear(xi))
}

/// Whether `a` lies in the ideal generated by `Π factors` in the ring.
pub fn divides_ideal(a: &CohClass, factors: &[CohClass]) -> Result<bool> {
    let mut product = CohClass::one(&a.ring);
    for f in factors {
        product = product.mul(f)?;
    }
    let mut gens = a.ring.groebner.clone();
    gens.push(product.poly);
    let extended = groebner_basis(&gens);
    Ok(a.poly.reduce(&extended).is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::git::tests::{cubic, f1, p1, quintic};
    use crate::scalar::{int, rat};
    use proptest::prelude::*;

    fn h(ring: &Arc<SectorRing>, e: u32) -> CohClass {
        CohClass::new(ring, &Poly::monomial(Mono(vec![e]), ExactScalar::one()))
    }

    #[test]
    fn ring_examples() {
        let r = build_ring(&p1(), &SectorLabel::identity(1)).unwrap();
        assert_eq!(r.staircase, vec![Mono(vec![0]), Mono(vec![1])]);
        let r = build_ring(&quintic(), &SectorLabel::identity(1)).unwrap();
        assert_eq!(r.dimension(), 5);
        let r = build_ring(&cubic(), &SectorLabel(vec![rat(1, 3)])).unwrap();
        assert_eq!(r.staircase, vec![Mono(vec![0])]);
        let r = build_ring(&f1(), &SectorLabel::identity(2)).unwrap();
        assert_eq!(r.staircase, vec![Mono(vec![0, 0]), Mono(vec![0, 1]), Mono(vec![1, 0]), Mono(vec![0, 2])]);
    }

    #[test]
    fn infinite_ring_detected() {
        let err = SectorRing::from_relations(2, SectorLabel::identity(2), vec![Poly::linear(&[int(1), int(0)])]).unwrap_err();
        assert!(matches!(err, Error::InfiniteRing(2)));
    }

    #[test]
    fn character_classes() {
        let r = build_ring(&p1(), &SectorLabel::identity(1)).unwrap();
        assert_eq!(class_from_character(&r, &[int(1)]), h(&r, 1));
        let r3 = build_ring(&cubic(), &SectorLabel(vec![rat(1, 3)])).unwrap();
        assert!(class_from_character(&r3, &[int(1)]).is_zero());
        let q = build_ring(&quintic(), &SectorLabel::identity(1)).unwrap();
        assert_eq!(class_from_character(&q, &[int(-5)]), h(&q, 1).scale(&ExactScalar::from_int(-5)));
    }

    #[test]
    fn arithmetic_examples() {
        let r = build_ring(&p1(), &SectorLabel::identity(1)).unwrap();
        assert!(h(&r, 1).mul(&h(&r, 1)).unwrap().is_zero());
        let p = Poly::monomial(Mono(vec![2]), ExactScalar::from_int(3))
            .add(&Poly::monomial(Mono(vec![1]), ExactScalar::from_int(2)))
            .sub(&Poly::monomial(Mono(vec![1]), ExactScalar::one()));
        assert_eq!(CohClass::new(&r, &p), h(&r, 1));
        let q = build_ring(&quintic(), &SectorLabel::identity(1)).unwrap();
        assert!(h(&q, 3).mul(&h(&q, 2)).unwrap().is_zero());
        assert_eq!(h(&q, 2).mul(&h(&q, 2)).unwrap(), h(&q, 4));
        let other = build_ring(&cubic(), &SectorLabel(vec![rat(1, 3)])).unwrap();
        assert!(matches!(h(&q, 1).add(&CohClass::one(&other)), Err(Error::RingMismatch(_))));
    }

    #[test]
    fn divisibility_examples() {
        let q = build_ring(&quintic(), &SectorLabel::identity(1)).unwrap();
        let a = h(&q, 1).scale(&ExactScalar::from_int(-5)).mul(&h(&q, 1).add(&CohClass::one(&q)).unwrap()).unwrap();
        assert!(divides_ideal(&a, &[h(&q, 1).scale(&ExactScalar::from_int(-5))]).unwrap());
        assert!(divides_ideal(&h(&q, 4), &[h(&q, 1), h(&q, 1)]).unwrap());
        assert!(!divides_ideal(&h(&q, 1), &[h(&q, 1), h(&q, 1)]).unwrap());
        let r = build_ring(&p1(), &SectorLabel::identity(1)).unwrap();
        assert!(!divides_ideal(&CohClass::one(&r), &[h(&r, 1)]).unwrap());
        assert!(divides_ideal(&CohClass::one(&r), &[]).unwrap());
    }

    #[test]
    fn sr_generators_vanish() {
        for m in [p1(), quintic(), cubic(), f1()] {
            for g in crate::git::inertia_sectors(&m).unwrap() {
                let ring = build_ring(&m, &g).unwrap();
                for t in &ring.sr_generators {
                    let prod = t.iter().fold(CohClass::one(&ring), |acc, &i| acc.mul(&class_from_character(&ring, &m.column_q(i))).unwrap());
                    assert!(prod.is_zero());
                }
                for a in 0..m.k {
                    let var = CohClass::new(&ring, &Poly::monomial(Mono::var(m.k, a), ExactScalar::one()));
                    let pow = (0..ring.dimension()).fold(CohClass::one(&ring), |acc, _| acc.mul(&var).unwrap());
                    assert!(pow.is_zero());
                }
            }
        }
    }

    fn staircase_poly(coeffs: &[i64], ring: &Arc<SectorRing>) -> CohClass {
        let mut p = Poly::zero(ring.k);
        for (m, &c) in ring.staircase.iter().zip(coeffs) {
            p.add_term(m.clone(), &ExactScalar::from_int(c));
        }
        CohClass::new(ring, &p)
    }

    proptest! {
        #[test]
        fn ring_axioms(a in proptest::collection::vec(-4i64..=4, 4), b in proptest::collection::vec(-4i64..=4, 4), c in proptest::collection::vec(-4i64..=4, 4)) {
            let ring = build_ring(&f1(), &SectorLabel::identity(2)).unwrap();
            let (x, y, z) = (staircase_poly(&a, &ring), staircase_poly(&b, &ring), staircase_poly(&c, &ring));
            prop_assert_eq!(x.mul(&y).unwrap().mul(&z).unwrap(), x.mul(&y.mul(&z).unwrap()).unwrap());
            prop_assert_eq!(x.mul(&y).unwrap(), y.mul(&x).unwrap());
            prop_assert_eq!(x.mul(&y.add(&z).unwrap()).unwrap(), x.mul(&y).unwrap().add(&x.mul(&z).unwrap()).unwrap());
            prop_assert_eq!(x.mul(&CohClass::one(&ring)).unwrap(), x.clone());
            prop_assert_eq!(CohClass::new(&ring, x.poly()), x);
        }
    }
}
