//! Sparse polynomials in `H_1..H_k` under grevlex with `H_1 > … > H_k`, and
//! Buchberger's algorithm.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

use crate::error::{Error, Result};
use crate::scalar::{ExactScalar, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mono(pub Vec<u32>);

impl Mono {
    pub fn one(k: usize) -> Self {
        Mono(vec![0; k])
    }

    pub fn var(k: usize, a: usize) -> Self {
        let mut e = vec![0; k];
        e[a] = 1;
        Mono(e)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_one(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn divides(&self, other: &Mono) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `other / self`; caller guarantees divisibility.
    pub fn quotient(&self, other: &Mono) -> Mono {
        Mono(other.0.iter().zip(&self.0).map(|(a, b)| a - b).collect())
    }

    pub fn lcm(&self, other: &Mono) -> Mono {
        Mono(self.0.iter().zip(&other.0).map(|(a, b)| *a.max(b)).collect())
    }

    pub fn coprime(&self, other: &Mono) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| *a == 0 || *b == 0)
    }

    /// `H`, `H^2` for one generator; `H1^2*H3` otherwise.
    pub fn name(&self) -> String {
        if self.is_one() {
            return "1".into();
        }
        let single = self.0.len() == 1;
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(a, &e)| {
                let v = if single { "H".to_string() } else { format!("H{}", a + 1) };
                if e == 1 {
                    v
                } else {
                    format!("{v}^{e}")
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    pub fn parse(text: &str, k: usize) -> Result<Mono> {
        let bad = || Error::Schema(format!("invalid monomial {text:?}"));
        let mut e = vec![0u32; k];
        if text == "1" {
            return Ok(Mono(e));
        }
        for factor in text.split('*') {
            let (var, pow) = match factor.split_once('^') {
                Some((v, p)) => (v, p.parse::<u32>().map_err(|_| bad())?),
                None => (factor, 1),
            };
            let idx = match var.strip_prefix('H').ok_or_else(bad)? {
                "" if k == 1 => 0,
                digits => digits.parse::<usize>().map_err(|_| bad())?.checked_sub(1).ok_or_else(bad)?,
            };
            if idx >= k {
                return Err(bad());
            }
            e[idx] += pow;
        }
        Ok(Mono(e))
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree().cmp(&other.degree()).then_with(|| {
            // reverse lex: at the last differing index the smaller exponent wins
            for (a, b) in self.0.iter().zip(&other.0).rev() {
                if a != b {
                    return b.cmp(a);
                }
            }
            Ordering::Equal
        })
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Polynomial with no stored zero coefficients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    k: usize,
    terms: BTreeMap<Mono, ExactScalar>,
}

impl Poly {
    pub fn zero(k: usize) -> Self {
        Poly { k, terms: BTreeMap::new() }
    }

    pub fn constant(k: usize, c: ExactScalar) -> Self {
        Poly::monomial(Mono::one(k), c)
    }

    pub fn one(k: usize) -> Self {
        Poly::constant(k, ExactScalar::one())
    }

    pub fn monomial(m: Mono, c: ExactScalar) -> Self {
        let k = m.0.len();
        let mut p = Poly::zero(k);
        p.add_term(m, &c);
        p
    }

    /// `Σ_a xi_a H_a`.
    pub fn linear(xi: &[Rational]) -> Self {
        let k = xi.len();
        let mut p = Poly::zero(k);
        for (a, c) in xi.iter().enumerate() {
            p.add_term(Mono::var(k, a), &ExactScalar::from(c.clone()));
        }
        p
    }

    pub fn nvars(&self) -> usize {
        self.k
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Mono, &ExactScalar)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, m: &Mono) -> ExactScalar {
        self.terms.get(m).cloned().unwrap_or_else(ExactScalar::zero)
    }

    pub fn leading(&self) -> Option<(&Mono, &ExactScalar)> {
        self.terms.iter().next_back()
    }

    pub fn add_term(&mut self, m: Mono, c: &ExactScalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(existing) => {
                let sum = existing.add(c);
                if sum.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *existing = sum;
                }
            }
            None => {
                self.terms.insert(m, c.clone());
            }
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Poly {
        Poly { k: self.k, terms: self.terms.iter().map(|(m, c)| (m.clone(), c.neg())).collect() }
    }

    pub fn scale(&self, s: &ExactScalar) -> Poly {
        if s.is_zero() {
            return Poly::zero(self.k);
        }
        Poly { k: self.k, terms: self.terms.iter().map(|(m, c)| (m.clone(), c.mul(s))).collect() }
    }

    pub fn mul_term(&self, m: &Mono, s: &ExactScalar) -> Poly {
        if s.is_zero() {
            return Poly::zero(self.k);
        }
        Poly { k: self.k, terms: self.terms.iter().map(|(n, c)| (n.mul(m), c.mul(s))).collect() }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        let mut out = Poly::zero(self.k);
        for (m, c) in &self.terms {
            for (n, d) in &other.terms {
                out.add_term(m.mul(n), &c.mul(d));
            }
        }
        out
    }

    pub fn monic(&self) -> Poly {
        match self.leading() {
            None => self.clone(),
            Some((_, c)) => self.scale(&c.inv().expect("nonzero leading coefficient")),
        }
    }

    /// Remainder of full reduction by a monic basis.
    pub fn reduce(&self, basis: &[Poly]) -> Poly {
        let mut p = self.clone();
        let mut rem = Poly::zero(self.k);
        while let Some((lm, lc)) = p.terms.pop_last() {
            match basis.iter().find(|g| g.leading().is_some_and(|(gm, _)| gm.divides(&lm))) {
                Some(g) => {
                    let (gm, gc) = g.leading().unwrap();
                    let q = gm.quotient(&lm);
                    let f = lc.mul(&gc.inv().expect("nonzero leading coefficient")).neg();
                    for (m, c) in g.terms.iter().rev().skip(1) {
                        p.add_term(m.mul(&q), &c.mul(&f));
                    }
                }
                None => {
                    rem.terms.insert(lm, lc);
                }
            }
        }
        rem
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .terms
            .iter()
            .rev()
            .map(|(m, c)| if m.is_one() { format!("{c}") } else if c.is_one() { m.name() } else { format!("({c})*{}", m.name()) })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

fn s_poly(f: &Poly, g: &Poly) -> Poly {
    let (fm, fc) = f.leading().unwrap();
    let (gm, gc) = g.leading().unwrap();
    let l = fm.lcm(gm);
    let a = f.mul_term(&fm.quotient(&l), &fc.inv().unwrap());
    let b = g.mul_term(&gm.quotient(&l), &gc.inv().unwrap());
    a.sub(&b)
}

/// Reduced, monic Gröbner basis, sorted by leading monomial.
pub fn groebner_basis(generators: &[Poly]) -> Vec<Poly> {
    let mut basis: Vec<Poly> = generators.iter().filter(|g| !g.is_zero()).map(Poly::monic).collect();
    let mut pairs: Vec<(usize, usize)> = (0..basis.len()).flat_map(|j| (0..j).map(move |i| (i, j))).collect();
    while let Some((i, j)) = pairs.pop() {
        let (fm, _) = basis[i].leading().unwrap();
        let (gm, _) = basis[j].leading().unwrap();
        if fm.coprime(gm) {
            continue;
        }
        let r = s_poly(&basis[i], &basis[j]).reduce(&basis);
        if !r.is_zero() {
            let n = basis.len();
            basis.push(r.monic());
            pairs.extend((0..n).map(|i| (i, n)));
        }
    }
    // minimize
    let mut minimal: Vec<Poly> = Vec::new();
    for (idx, g) in basis.iter().enumerate() {
        let gm = g.leading().unwrap().0;
        let redundant = basis.iter().enumerate().any(|(j, h)| {
            let hm = h.leading().unwrap().0;
            j != idx && hm.divides(gm) && (hm != gm || j < idx)
        });
        if !redundant {
            minimal.push(g.clone());
        }
    }
    // interreduce
    let mut reduced: Vec<Poly> = Vec::with_capacity(minimal.len());
    for (idx, g) in minimal.iter().enumerate() {
        let (lm, _) = g.leading().unwrap();
        let others: Vec<Poly> = minimal.iter().enumerate().filter(|(j, _)| *j != idx).map(|(_, h)| h.clone()).collect();
        let mut tail = g.clone();
        tail.terms.remove(lm);
        let mut out = tail.reduce(&others);
        out.add_term(lm.clone(), &ExactScalar::one());
        reduced.push(out);
    }
    reduced.sort_by(|a, b| a.leading().unwrap().0.cmp(b.leading().unwrap().0));
    reduced
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};
    use proptest::prelude::*;

    fn lin(xi: &[i64]) -> Poly {
        Poly::linear(&xi.iter().map(|&x| int(x)).collect::<Vec<_>>())
    }

    #[test]
    fn grevlex_order() {
        // H1 > H2 > H3; degree first
        assert!(Mono(vec![1, 0, 0]) > Mono(vec![0, 1, 0]));
        assert!(Mono(vec![0, 1, 0]) > Mono(vec![0, 0, 1]));
        assert!(Mono(vec![0, 0, 2]) > Mono(vec![1, 0, 0]));
        // x1 x3 < x2^2 in grevlex
        assert!(Mono(vec![1, 0, 1]) < Mono(vec![0, 2, 0]));
        assert!(Mono(vec![2, 0, 0]) > Mono(vec![1, 1, 0]));
    }

    #[test]
    fn monomial_names_round_trip() {
        for (e, k) in [(vec![0], 1), (vec![2], 1), (vec![1, 3], 2), (vec![0, 0, 1], 3)] {
            let m = Mono(e);
            assert_eq!(Mono::parse(&m.name(), k).unwrap(), m);
        }
        assert_eq!(Mono(vec![2]).name(), "H^2");
        assert_eq!(Mono(vec![1, 2]).name(), "H1*H2^2");
        assert!(Mono::parse("H4", 2).is_err());
    }

    #[test]
    fn f1_basis() {
        // (H1)(H1) and (H2)(H1+H2) from the supports of a rank-2 example
        let g1 = lin(&[1, 0]).mul(&lin(&[1, 0]));
        let g2 = lin(&[0, 1]).mul(&lin(&[1, 1]));
        let gb = groebner_basis(&[g1, g2]);
        let leads: Vec<Mono> = gb.iter().map(|g| g.leading().unwrap().0.clone()).collect();
        assert_eq!(leads, vec![Mono(vec![1, 1]), Mono(vec![2, 0]), Mono(vec![0, 3])]);
        assert_eq!(gb[0], Poly::monomial(Mono(vec![1, 1]), int(1).into()).add(&Poly::monomial(Mono(vec![0, 2]), int(1).into())));
    }

    #[test]
    fn reduction_with_scalars() {
        let gb = groebner_basis(&[lin(&[-3])]);
        assert_eq!(gb, vec![lin(&[1])]);
        let p = lin(&[7]).add(&Poly::constant(1, rat(1, 2).into()));
        assert_eq!(p.reduce(&gb), Poly::constant(1, rat(1, 2).into()));
        let zeta = ExactScalar::root_of_unity(3, 1);
        let p = Poly::monomial(Mono(vec![0]), zeta.clone()).add(&lin(&[2]).scale(&zeta));
        assert_eq!(p.reduce(&gb), Poly::constant(1, zeta));
    }

    proptest! {
        #[test]
        fn basis_is_order_independent(a in -3i64..=3, b in -3i64..=3, c in 1i64..=3) {
            let gens = vec![lin(&[1, a]).mul(&lin(&[b, 1])), lin(&[c, 0]).mul(&lin(&[0, 1])).mul(&lin(&[1, 1]))];
            let rev: Vec<Poly> = gens.iter().rev().cloned().collect();
            let g1 = groebner_basis(&gens);
            prop_assert_eq!(&g1, &groebner_basis(&rev));
            for g in &gens {
                prop_assert!(g.reduce(&g1).is_zero());
            }
        }
    }
}
