//! Exact least-structure linear solving over Q for coefficient fits.

use num_traits::Zero;

use crate::series::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearSolution {
    /// A solution with free variables set to zero, if the system is consistent.
    pub solution: Option<Vec<Rational>>,
    pub rank: usize,
    /// First equation (row index) that cannot be satisfied.
    pub inconsistent_row: Option<usize>,
}

impl LinearSolution {
    pub fn is_unique(&self, unknowns: usize) -> bool {
        self.solution.is_some() && self.rank == unknowns
    }
}

/// Solves `Σ_j x_j columns[j][r] = rhs[r]` for every row `r`, by Gaussian
/// elimination on the full (possibly over-determined) system.
pub fn solve(columns: &[Vec<Rational>], rhs: &[Rational]) -> LinearSolution {
    let n = columns.len();
    let rows = rhs.len();
    assert!(columns.iter().all(|c| c.len() == rows), "ragged system");
    // augmented matrix, one Vec per equation
    let mut m: Vec<(usize, Vec<Rational>)> = (0..rows)
        .map(|r| {
            let mut row: Vec<Rational> = columns.iter().map(|c| c[r].clone()).collect();
            row.push(rhs[r].clone());
            (r, row)
        })
        .collect();
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in 0..n {
        let Some(p) = (next..rows).find(|&r| !m[r].1[col].is_zero()) else {
            continue;
        };
        m.swap(next, p);
        let inv = m[next].1[col].recip();
        for x in m[next].1.iter_mut() {
            *x *= &inv;
        }
        let pivot_row = m[next].1.clone();
        for (r, (_, row)) in m.iter_mut().enumerate() {
            if r != next && !row[col].is_zero() {
                let f = row[col].clone();
                for (x, p) in row.iter_mut().zip(pivot_row.iter()) {
                    *x -= &f * p;
                }
            }
        }
        pivots.push(col);
        next += 1;
    }
    let rank = pivots.len();
    let bad = m[rank..]
        .iter()
        .filter(|(_, row)| !row[n].is_zero())
        .map(|(r, _)| *r)
        .min();
    if bad.is_some() {
        return LinearSolution { solution: None, rank, inconsistent_row: bad };
    }
    let mut x = vec![Rational::zero(); n];
    for (i, &c) in pivots.iter().enumerate() {
        x[c] = m[i].1[n].clone();
    }
    LinearSolution { solution: Some(x), rank, inconsistent_row: None }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::int;

    fn v(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    #[test]
    fn solves_overdetermined_consistent_system() {
        // x + 2y, 3x − y, x + y with x=2, y=−1
        let cols = vec![v(&[1, 3, 1]), v(&[2, -1, 1])];
        let s = solve(&cols, &v(&[0, 7, 1]));
        assert_eq!(s.solution, Some(v(&[2, -1])));
        assert!(s.is_unique(2));
    }

    #[test]
    fn reports_inconsistent_row() {
        let cols = vec![v(&[1, 0, 1])];
        let s = solve(&cols, &v(&[1, 0, 2]));
        assert_eq!(s.solution, None);
        assert_eq!(s.inconsistent_row, Some(2));
    }

    #[test]
    fn rank_deficiency_is_visible() {
        let cols = vec![v(&[1, 1]), v(&[2, 2])];
        let s = solve(&cols, &v(&[3, 3]));
        assert_eq!(s.rank, 1);
        assert!(!s.is_unique(2));
    }
}
