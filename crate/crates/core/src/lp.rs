//! Exact rational feasibility for `{x >= 0 : A x = b}` by phase-one simplex
//! with Bland's rule.

use num_traits::{One, Signed, Zero};

use crate::scalar::Rational;

/// Returns a nonnegative solution of `a x = b`, or `None` if there is none.
pub fn feasible_point(a: &[Vec<Rational>], b: &[Rational]) -> Option<Vec<Rational>> {
    let m = a.len();
    let n = a.first().map_or(0, Vec::len);
    if m == 0 {
        return Some(vec![Rational::zero(); n]);
    }
    let width = n + m + 1;
    let rhs = n + m;
    let mut tab: Vec<Vec<Rational>> = Vec::with_capacity(m);
    for (i, row) in a.iter().enumerate() {
        let flip = b[i].is_negative();
        let mut t = vec![Rational::zero(); width];
        for (j, x) in row.iter().enumerate() {
            t[j] = if flip { -x } else { x.clone() };
        }
        t[n + i] = Rational::one();
        t[rhs] = if flip { -&b[i] } else { b[i].clone() };
        tab.push(t);
    }
    let mut basis: Vec<usize> = (n..n + m).collect();
    // phase-one objective row: sum of artificial rows, restricted to structural columns
    let mut obj = vec![Rational::zero(); width];
    for t in &tab {
        for j in 0..n {
            obj[j] += &t[j];
        }
        obj[rhs] += &t[rhs];
    }

    loop {
        let Some(enter) = (0..n).find(|&j| obj[j].is_positive() && !basis.contains(&j)) else {
            break;
        };
        let mut leave: Option<(usize, Rational)> = None;
        for i in 0..m {
            if !tab[i][enter].is_positive() {
                continue;
            }
            let ratio = &tab[i][rhs] / &tab[i][enter];
            let better = match &leave {
                None => true,
                Some((li, lr)) => ratio < *lr || (ratio == *lr && basis[i] < basis[*li]),
            };
            if better {
                leave = Some((i, ratio));
            }
        }
        // the phase-one objective is bounded below, so a leaving row always exists
        let (row, _) = leave.expect("phase-one simplex is bounded");
        pivot(&mut tab, &mut obj, row, enter);
        basis[row] = enter;
    }

    if !obj[rhs].is_zero() {
        return None;
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = tab[i][rhs].clone();
        }
    }
    Some(x)
}

fn pivot(tab: &mut [Vec<Rational>], obj: &mut [Rational], row: usize, col: usize) {
    let inv = tab[row][col].recip();
    for x in tab[row].iter_mut() {
        *x *= &inv;
    }
    let pivot_row = tab[row].clone();
    for (i, t) in tab.iter_mut().enumerate() {
        if i == row || t[col].is_zero() {
            continue;
        }
        let f = t[col].clone();
        for (x, p) in t.iter_mut().zip(&pivot_row) {
            *x -= &f * p;
        }
    }
    if !obj[col].is_zero() {
        let f = obj[col].clone();
        for (x, p) in obj.iter_mut().zip(&pivot_row) {
            *x -= &f * p;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{int, rat};

    fn check(a: &[Vec<Rational>], b: &[Rational], x: &[Rational]) {
        for (row, bi) in a.iter().zip(b) {
            let lhs = row.iter().zip(x).fold(Rational::zero(), |acc, (p, q)| acc + p * q);
            assert_eq!(&lhs, bi);
        }
        assert!(x.iter().all(|v| !v.is_negative()));
    }

    #[test]
    fn finds_points() {
        let a = vec![vec![int(1), int(1)]];
        let b = vec![int(1)];
        check(&a, &b, &feasible_point(&a, &b).unwrap());

        let a = vec![vec![int(1), int(0), int(1)], vec![int(0), int(1), int(1)]];
        let b = vec![int(1), int(1)];
        check(&a, &b, &feasible_point(&a, &b).unwrap());

        let a = vec![vec![int(3), int(-2)]];
        let b = vec![rat(-1, 2)];
        check(&a, &b, &feasible_point(&a, &b).unwrap());
    }

    #[test]
    fn detects_infeasibility() {
        // x = -5 y with x, y >= 0 and x + y = 1
        let a = vec![vec![int(-5)]];
        assert!(feasible_point(&a, &[int(1)]).is_none());
        let a = vec![vec![int(1), int(0)], vec![int(0), int(0)]];
        assert!(feasible_point(&a, &[int(1), int(1)]).is_none());
    }

    #[test]
    fn degenerate_system() {
        let a = vec![vec![int(1), int(-1), int(0)], vec![int(1), int(-1), int(0)], vec![int(0), int(1), int(1)]];
        let b = vec![int(0), int(0), int(2)];
        check(&a, &b, &feasible_point(&a, &b).unwrap());
    }
}
