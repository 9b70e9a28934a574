//! Toric GIT combinatorics: semistable supports, twisted sectors, effective
//! degrees and Stanley–Reisner generators.

use std::collections::BTreeSet;

use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{int_matrix, kernel, mat_vec, smith_normal_form, solve, transpose};
use crate::lp::feasible_point;
use crate::model::{binomial, subsets_of_size, GlsmModel, DEFAULT_SUBSET_BUDGET};
use crate::scalar::{format_rational, frac, int, Rational};

/// A degree `d ∈ Hom(Ĝ, Q) = Q^k`.
pub type Degree = Vec<Rational>;

/// Sorted zero-based coordinate indices.
pub type SupportSet = Vec<usize>;

/// A group element `exp(2πiλ)` with canonical `λ ∈ [0,1)^k`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SectorLabel(pub Vec<Rational>);

impl SectorLabel {
    pub fn identity(k: usize) -> Self {
        SectorLabel(vec![Rational::zero(); k])
    }

    pub fn new(lambda: Vec<Rational>) -> Self {
        SectorLabel(lambda.iter().map(frac).collect())
    }

    pub fn lambda(&self) -> &[Rational] {
        &self.0
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(Zero::is_zero)
    }

    /// `frac(⟨ρ_i, λ⟩)` for every coordinate.
    pub fn action(&self, m: &GlsmModel) -> Vec<Rational> {
        (0..m.r).map(|i| frac(&m.pairing(&self.0, i))).collect()
    }

    /// The fixed coordinates `I(g)`.
    pub fn fixed(&self, m: &GlsmModel) -> Vec<usize> {
        (0..m.r).filter(|&i| frac(&m.pairing(&self.0, i)).is_zero()).collect()
    }

    pub fn age(&self, m: &GlsmModel) -> Rational {
        self.action(m).into_iter().sum()
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.0.iter().map(format_rational).collect()
    }
}

/// True iff `v` is a nonnegative rational combination of `gens`.
pub fn cone_contains(v: &[Rational], gens: &[Vec<Rational>]) -> bool {
    if v.iter().all(Zero::is_zero) {
        return true;
    }
    if gens.is_empty() {
        return false;
    }
    let a: Vec<Vec<Rational>> = (0..v.len()).map(|row| gens.iter().map(|g| g[row].clone()).collect()).collect();
    feasible_point(&a, v).is_some()
}

pub fn semistable_supports(m: &GlsmModel) -> Result<Vec<SupportSet>> {
    semistable_supports_with_budget(m, DEFAULT_SUBSET_BUDGET)
}

/// Inclusion-minimal `S` with `θ ∈ cone(ρ_S)`. Minimal supports are linearly
/// independent, so only subsets of size at most `k` are examined.
pub fn semistable_supports_with_budget(m: &GlsmModel, budget: u64) -> Result<Vec<SupportSet>> {
    let total: u64 = (1..=m.k.min(m.r)).map(|j| binomial(m.r as u64, j as u64)).sum();
    if total > budget {
        return Err(Error::BudgetExceeded(format!("{total} candidate supports, cap {budget}")));
    }
    let mut found: Vec<SupportSet> = Vec::new();
    for size in 1..=m.k.min(m.r) {
        let candidates: Vec<SupportSet> = subsets_of_size(m.r, size)
            .into_iter()
            .filter(|s| !found.iter().any(|f| is_subset(f, s)))
            .collect();
        let hits: Vec<SupportSet> = candidates
            .into_par_iter()
            .filter(|s| {
                let gens: Vec<Vec<Rational>> = s.iter().map(|&i| m.column_q(i)).collect();
                cone_contains(&m.theta, &gens)
            })
            .collect();
        found.extend(hits);
    }
    Ok(found)
}

pub(crate) fn is_subset(small: &[usize], big: &[usize]) -> bool {
    small.iter().all(|i| big.contains(i))
}

fn support_matrix(m: &GlsmModel, s: &[usize]) -> Vec<Vec<i64>> {
    // rows are the characters ρ_i, i ∈ S
    s.iter().map(|&i| m.column(i)).collect()
}

fn require_full_rank(m: &GlsmModel, s: &[usize]) -> Result<()> {
    let rows: Vec<Vec<Rational>> = s.iter().map(|&i| m.column_q(i)).collect();
    if s.len() == m.k && crate::lattice::rank(&rows) == m.k {
        return Ok(());
    }
    let ray = kernel(&rows, m.k).into_iter().next().unwrap_or_else(|| vec![Rational::zero(); m.k]);
    Err(Error::Unbounded { support: s.iter().map(|i| i + 1).collect(), ray: ray.iter().map(format_rational).collect() })
}

/// All `g` whose fixed locus meets the semistable locus.
pub fn inertia_sectors(m: &GlsmModel) -> Result<Vec<SectorLabel>> {
    let supports = semistable_supports(m)?;
    inertia_sectors_from(m, &supports)
}

pub(crate) fn inertia_sectors_from(m: &GlsmModel, supports: &[SupportSet]) -> Result<Vec<SectorLabel>> {
    let mut out = BTreeSet::new();
    for s in supports {
        if require_full_rank(m, s).is_err() {
            return Err(Error::Internal(format!(
                "support {:?} spans less than the full character lattice; infinite sector family",
                s.iter().map(|i| i + 1).collect::<Vec<_>>()
            )));
        }
        // ⟨ρ_i, λ⟩ ∈ Z for i ∈ S  ⇔  D μ ∈ Z^k with λ = V μ
        let snf = smith_normal_form(&int_matrix(&support_matrix(m, s)));
        let orders: Vec<i64> = snf.invariant_factors().iter().map(|d| d.to_i64().expect("small invariant factor")).collect();
        let mut mu = vec![0i64; m.k];
        loop {
            let mu_q: Vec<Rational> = mu.iter().zip(&orders).map(|(&a, &n)| Rational::new(a.into(), n.into())).collect();
            out.insert(SectorLabel::new(mat_vec(&snf.v, &mu_q)));
            // odometer over Π Z/d_i
            let mut pos = 0;
            loop {
                if pos == m.k {
                    break;
                }
                mu[pos] += 1;
                if mu[pos] < orders[pos] {
                    break;
                }
                mu[pos] = 0;
                pos += 1;
            }
            if pos == m.k {
                break;
            }
        }
    }
    Ok(out.into_iter().collect())
}

/// The sector of `g_d^{-1}`, where the degree-`d` coefficient lives.
pub fn sector_of_degree(d: &[Rational]) -> SectorLabel {
    SectorLabel::new(d.iter().map(|x| -x).collect())
}

/// `ι_g(ξ) = frac(⟨ξ, λ⟩)`.
pub fn iota(g: &SectorLabel, xi: &[i64]) -> Rational {
    frac(&GlsmModel::pair_character(g.lambda(), xi))
}

/// Degrees `d` with `⟨d,θ⟩ ≤ bound` admitting a minimal support `S` with
/// `⟨d,ρ_i⟩ ∈ Z_{≥0}` on `S`, sorted by `(⟨d,θ⟩, d)`. Includes `d = 0`.
pub fn effective_degrees(m: &GlsmModel, bound: &Rational) -> Result<Vec<Degree>> {
    let supports = semistable_supports(m)?;
    effective_degrees_from(m, &supports, bound)
}

pub(crate) fn effective_degrees_from(m: &GlsmModel, supports: &[SupportSet], bound: &Rational) -> Result<Vec<Degree>> {
    for s in supports {
        require_full_rank(m, s)?;
    }
    let per_support: Vec<Vec<Degree>> = supports
        .par_iter()
        .map(|s| {
            // y = Mᵀd ∈ Z_{≥0}^k, ⟨d,θ⟩ = β·y with Mβ = θ
            let rows: Vec<Vec<Rational>> = s.iter().map(|&i| m.column_q(i)).collect();
            let cols = transpose(&rows);
            let beta = solve(&cols, &m.theta).expect("full-rank support");
            debug_assert!(beta.iter().all(Signed::is_positive));
            let mut ys = Vec::new();
            enumerate_weighted(&beta, bound, &mut vec![0; m.k], 0, &Rational::zero(), &mut ys);
            ys.into_iter()
                .map(|y| {
                    let yq: Vec<Rational> = y.iter().map(|&v| int(v)).collect();
                    solve(&rows, &yq).expect("full-rank support")
                })
                .collect()
        })
        .collect();
    let mut all: BTreeSet<(Rational, Degree)> = BTreeSet::new();
    for d in per_support.into_iter().flatten() {
        all.insert((m.theta_degree(&d), d));
    }
    if all.is_empty() && !bound.is_negative() {
        all.insert((Rational::zero(), vec![Rational::zero(); m.k]));
    }
    Ok(all.into_iter().map(|(_, d)| d).collect())
}

fn enumerate_weighted(beta: &[Rational], bound: &Rational, cur: &mut Vec<i64>, pos: usize, acc: &Rational, out: &mut Vec<Vec<i64>>) {
    if pos == beta.len() {
        out.push(cur.clone());
        return;
    }
    let mut value = acc.clone();
    let mut n = 0;
    while value <= *bound {
        cur[pos] = n;
        enumerate_weighted(beta, bound, cur, pos + 1, &value, out);
        n += 1;
        value += &beta[pos];
    }
    cur[pos] = 0;
}

/// Minimal `T ⊆ I(g)` meeting every minimal support inside `I(g)`.
pub fn sr_generators(m: &GlsmModel, g: &SectorLabel) -> Result<Vec<SupportSet>> {
    let supports = semistable_supports(m)?;
    sr_generators_from(m, &supports, g)
}

pub(crate) fn sr_generators_from(m: &GlsmModel, supports: &[SupportSet], g: &SectorLabel) -> Result<Vec<SupportSet>> {
    let fixed = g.fixed(m);
    let inside: Vec<&SupportSet> = supports.iter().filter(|s| is_subset(s, &fixed)).collect();
    if inside.is_empty() {
        return Err(Error::EmptySector(g.to_strings()));
    }
    let universe: Vec<usize> = inside.iter().flat_map(|s| s.iter().copied()).collect::<BTreeSet<_>>().into_iter().collect();
    if universe.len() > 24 {
        return Err(Error::BudgetExceeded(format!("{} coordinates in the Stanley–Reisner transversal search", universe.len())));
    }
    let mut out: Vec<SupportSet> = Vec::new();
    for size in 1..=universe.len() {
        for pick in subsets_of_size(universe.len(), size) {
            let t: Vec<usize> = pick.iter().map(|&j| universe[j]).collect();
            if out.iter().any(|f| is_subset(f, &t)) {
                continue;
            }
            if inside.iter().all(|s| s.iter().any(|i| t.contains(i))) {
                out.push(t);
            }
        }
    }
    Ok(out)
}

/// Checks that the degree is effective by the support criterion.
pub fn is_criterion_effective(m: &GlsmModel, supports: &[SupportSet], d: &[Rational]) -> bool {
    supports.iter().any(|s| {
        s.iter().all(|&i| {
            let v = m.pairing(d, i);
            v.is_integer() && !v.is_negative()
        })
    })
}

pub fn format_degree(d: &[Rational]) -> Vec<String> {
    d.iter().map(format_rational).collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::scalar::rat;
    use proptest::prelude::*;

    pub fn p1() -> GlsmModel {
        GlsmModel::new(vec![vec![1, 1]], vec![0, 0], 1, vec![int(1)], None).unwrap()
    }

    pub fn quintic() -> GlsmModel {
        GlsmModel::new(vec![vec![1, 1, 1, 1, 1, -5]], vec![0, 0, 0, 0, 0, 1], 1, vec![int(1)], None).unwrap()
    }

    pub fn cubic() -> GlsmModel {
        GlsmModel::new(vec![vec![1, -3]], vec![1, 0], 3, vec![int(-1)], None).unwrap()
    }

    pub fn f1() -> GlsmModel {
        GlsmModel::new(
            vec![vec![1, 1, 0, 1, -3], vec![0, 0, 1, 1, -2]],
            vec![0, 0, 0, 0, 1],
            1,
            vec![int(2), int(1)],
            None,
        )
        .unwrap()
    }

    #[test]
    fn cone_examples() {
        assert!(cone_contains(&[int(1)], &[vec![int(1)], vec![int(1)]]));
        assert!(!cone_contains(&[int(1), int(1)], &[vec![int(1), int(0)]]));
        assert!(!cone_contains(&[int(1)], &[vec![int(-5)]]));
    }

    #[test]
    fn supports() {
        assert_eq!(semistable_supports(&p1()).unwrap(), vec![vec![0], vec![1]]);
        assert_eq!(semistable_supports(&quintic()).unwrap(), (0..5).map(|i| vec![i]).collect::<Vec<_>>());
        assert_eq!(semistable_supports(&cubic()).unwrap(), vec![vec![1]]);
        assert_eq!(semistable_supports(&f1()).unwrap(), vec![vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3]]);
    }

    #[test]
    fn sectors() {
        assert_eq!(inertia_sectors(&p1()).unwrap(), vec![SectorLabel::identity(1)]);
        assert_eq!(inertia_sectors(&quintic()).unwrap(), vec![SectorLabel::identity(1)]);
        assert_eq!(
            inertia_sectors(&cubic()).unwrap(),
            vec![SectorLabel(vec![int(0)]), SectorLabel(vec![rat(1, 3)]), SectorLabel(vec![rat(2, 3)])]
        );
        assert_eq!(inertia_sectors(&f1()).unwrap(), vec![SectorLabel::identity(2)]);
    }

    #[test]
    fn degree_sectors_and_iota() {
        assert!(sector_of_degree(&[int(0)]).is_identity());
        let g = sector_of_degree(&[rat(-1, 3)]);
        assert_eq!(g, SectorLabel(vec![rat(1, 3)]));
        assert_eq!(g.action(&cubic()), vec![rat(1, 3), int(0)]);
        assert_eq!(g.fixed(&cubic()), vec![1]);
        assert!(sector_of_degree(&[int(3)]).is_identity());
        assert_eq!(iota(&SectorLabel::identity(1), &[7]), int(0));
        assert_eq!(iota(&g, &[1]), rat(1, 3));
        assert_eq!(iota(&g, &[-3]), int(0));
    }

    #[test]
    fn effective_examples() {
        assert_eq!(effective_degrees(&p1(), &int(2)).unwrap(), vec![vec![int(0)], vec![int(1)], vec![int(2)]]);
        assert_eq!(
            effective_degrees(&cubic(), &int(1)).unwrap(),
            vec![vec![int(0)], vec![rat(-1, 3)], vec![rat(-2, 3)], vec![int(-1)]]
        );
        assert_eq!(effective_degrees(&quintic(), &int(2)).unwrap(), vec![vec![int(0)], vec![int(1)], vec![int(2)]]);
        let f = effective_degrees(&f1(), &int(2)).unwrap();
        assert!(f.contains(&vec![int(1), int(-1)]));
        assert!(f.iter().all(|d| f1().theta_degree(d) <= int(2)));
    }

    #[test]
    fn unbounded_support_reports_ray() {
        // θ on a rank-1 face of a rank-2 torus
        let m = GlsmModel::new(vec![vec![1, 0], vec![0, 1]], vec![0, 0], 1, vec![int(1), int(0)], None).unwrap();
        match effective_degrees(&m, &int(1)) {
            Err(Error::Unbounded { support, ray }) => {
                assert_eq!(support, vec![1]);
                assert_eq!(ray, vec!["0".to_string(), "1".to_string()]);
            }
            other => panic!("expected unbounded error, got {other:?}"),
        }
    }

    #[test]
    fn sr_examples() {
        let id = SectorLabel::identity(1);
        assert_eq!(sr_generators(&p1(), &id).unwrap(), vec![vec![0, 1]]);
        assert_eq!(sr_generators(&quintic(), &id).unwrap(), vec![vec![0, 1, 2, 3, 4]]);
        assert_eq!(sr_generators(&cubic(), &SectorLabel(vec![rat(1, 3)])).unwrap(), vec![vec![1]]);
        assert_eq!(sr_generators(&f1(), &SectorLabel::identity(2)).unwrap(), vec![vec![0, 1], vec![2, 3]]);
        assert!(matches!(sr_generators(&quintic(), &SectorLabel(vec![rat(1, 2)])), Err(Error::EmptySector(_))));
    }

    proptest! {
        #[test]
        fn iota_is_additive(l in 0i64..12, a in -20i64..20, b in -20i64..20, c in -20i64..20, e in -20i64..20) {
            let g = SectorLabel::new(vec![rat(l, 12), rat(5 * l, 12)]);
            let lhs = iota(&g, &[a + c, b + e]);
            let rhs = frac(&(iota(&g, &[a, b]) + iota(&g, &[c, e])));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn effective_degrees_have_nonempty_sectors(which in 0usize..4, bound_num in 0i64..10) {
            let m = [p1(), quintic(), cubic(), f1()][which].clone();
            let bound = rat(bound_num, 3);
            let sectors = inertia_sectors(&m).unwrap();
            let supports = semistable_supports(&m).unwrap();
            let degs = effective_degrees(&m, &bound).unwrap();
            for d in &degs {
                prop_assert!(sectors.contains(&sector_of_degree(d)));
                prop_assert!(is_criterion_effective(&m, &supports, d));
                prop_assert!(m.theta_degree(d) <= bound);
            }
            // semigroup closure on a shared support
            for d1 in &degs {
                for d2 in &degs {
                    let sum: Vec<Rational> = d1.iter().zip(d2).map(|(a, b)| a + b).collect();
                    let shared = supports.iter().any(|s| s.iter().all(|&i| {
                        let (x, y) = (m.pairing(d1, i), m.pairing(d2, i));
                        x.is_integer() && y.is_integer() && !x.is_negative() && !y.is_negative()
                    }));
                    if shared && m.theta_degree(&sum) <= bound {
                        prop_assert!(degs.contains(&sum));
                    }
                }
            }
        }

        #[test]
        fn supports_are_minimal(which in 0usize..4) {
            let m = [p1(), quintic(), cubic(), f1()][which].clone();
            for s in semistable_supports(&m).unwrap() {
                let gens: Vec<Vec<Rational>> = s.iter().map(|&i| m.column_q(i)).collect();
                prop_assert!(cone_contains(&m.theta, &gens));
                for skip in 0..s.len() {
                    let sub: Vec<Vec<Rational>> = gens.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, g)| g.clone()).collect();
                    prop_assert!(!cone_contains(&m.theta, &sub));
                }
            }
        }
    }
}
