//! Two-phase dense tableau simplex over exact rationals, using Bland's rule
//! for both entering and leaving variables (no cycling).

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::Relation;

type Q = BigRational;

#[derive(Debug, Clone)]
pub(crate) struct LpRow {
    pub terms: Vec<(usize, BigInt)>,
    pub relation: Relation,
    pub rhs: BigInt,
}

#[derive(Debug, Clone)]
pub(crate) enum LpOutcome {
    Optimal { values: Vec<Q>, objective: Q },
    Infeasible,
}

struct Tableau {
    rows: Vec<Vec<Q>>,
    basis: Vec<usize>,
    /// Reduced costs; the last entry holds minus the objective value.
    cost: Vec<Q>,
    width: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> &Q {
        &self.rows[r][self.width]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.rows[r][c].clone();
        if !p.is_one() {
            for v in self.rows[r].iter_mut() {
                if !v.is_zero() {
                    *v /= &p;
                }
            }
        }
        let pivot_row = std::mem::take(&mut self.rows[r]);
        let nz: Vec<usize> = (0..=self.width)
            .filter(|&j| !pivot_row[j].is_zero())
            .collect();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for &j in &nz {
                row[j] -= &f * &pivot_row[j];
            }
        }
        if !self.cost[c].is_zero() {
            let f = self.cost[c].clone();
            for &j in &nz {
                self.cost[j] -= &f * &pivot_row[j];
            }
        }
        self.rows[r] = pivot_row;
        self.basis[r] = c;
    }

    /// Runs simplex iterations over columns `allowed`. Returns false if the
    /// problem is unbounded in some direction.
    fn optimize(&mut self, allowed: &[bool]) -> bool {
        loop {
            let entering = (0..self.width).find(|&j| allowed[j] && self.cost[j].is_negative());
            let Some(c) = entering else { return true };
            let mut best: Option<(usize, Q)> = None;
            for r in 0..self.rows.len() {
                let a = &self.rows[r][c];
                if !a.is_positive() {
                    continue;
                }
                let ratio = self.rhs(r) / a;
                let better = match &best {
                    None => true,
                    Some((br, bq)) => {
                        ratio < *bq || (ratio == *bq && self.basis[r] < self.basis[*br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
            match best {
                Some((r, _)) => self.pivot(r, c),
                None => return false,
            }
        }
    }
}

/// Minimizes `cost · y` subject to `rows` and `0 <= y_j <= upper_j`.
pub(crate) fn solve_lp(upper: &[BigInt], rows: &[LpRow], cost: &[BigInt]) -> LpOutcome {
    let n = upper.len();
    // Constraint rows plus one upper-bound row per variable, normalized to a
    // non-negative right-hand side.
    let mut normalized: Vec<(Vec<(usize, BigInt)>, Relation, BigInt)> = Vec::new();
    for row in rows {
        let (mut terms, mut rel, mut rhs) = (row.terms.clone(), row.relation, row.rhs.clone());
        if rhs.is_negative() || (rhs.is_zero() && rel == Relation::Ge) {
            for t in terms.iter_mut() {
                t.1 = -&t.1;
            }
            rhs = -rhs;
            rel = match rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
        normalized.push((terms, rel, rhs));
    }
    for (j, u) in upper.iter().enumerate() {
        normalized.push((vec![(j, BigInt::from(1))], Relation::Le, u.clone()));
    }

    let slack_count = normalized.iter().filter(|r| r.1 != Relation::Eq).count();
    let artificial_count = normalized.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + slack_count + artificial_count;
    let mut is_artificial = vec![false; width];
    let mut tab = Tableau {
        rows: Vec::with_capacity(normalized.len()),
        basis: Vec::with_capacity(normalized.len()),
        cost: vec![Q::zero(); width + 1],
        width,
    };
    let (mut next_slack, mut next_art) = (n, n + slack_count);
    for (terms, rel, rhs) in normalized {
        let mut row = vec![Q::zero(); width + 1];
        for (j, a) in terms {
            row[j] += Q::from_integer(a);
        }
        row[width] = Q::from_integer(rhs);
        let basic = match rel {
            Relation::Le => {
                row[next_slack] = Q::from_integer(1.into());
                next_slack += 1;
                next_slack - 1
            }
            Relation::Ge => {
                row[next_slack] = Q::from_integer((-1).into());
                next_slack += 1;
                row[next_art] = Q::from_integer(1.into());
                next_art += 1;
                next_art - 1
            }
            Relation::Eq => {
                row[next_art] = Q::from_integer(1.into());
                next_art += 1;
                next_art - 1
            }
        };
        if basic >= n + slack_count {
            is_artificial[basic] = true;
            for j in 0..=width {
                if j != basic {
                    tab.cost[j] -= &row[j];
                }
            }
        }
        tab.rows.push(row);
        tab.basis.push(basic);
    }

    if artificial_count > 0 {
        let all = vec![true; width];
        let bounded = tab.optimize(&all);
        debug_assert!(bounded, "phase one is always bounded");
        if !tab.cost[width].is_zero() {
            return LpOutcome::Infeasible;
        }
        // Drive remaining (zero-valued) artificials out of the basis; rows
        // with no other support are redundant.
        let mut r = 0;
        while r < tab.rows.len() {
            if is_artificial[tab.basis[r]] {
                match (0..width).find(|&j| !is_artificial[j] && !tab.rows[r][j].is_zero()) {
                    Some(c) => tab.pivot(r, c),
                    None => {
                        tab.rows.remove(r);
                        tab.basis.remove(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    // Phase two reduced costs.
    let mut c_full = vec![Q::zero(); width + 1];
    for (j, c) in cost.iter().enumerate() {
        c_full[j] = Q::from_integer(c.clone());
    }
    let mut reduced = c_full.clone();
    reduced[width] = Q::zero();
    for (r, &b) in tab.basis.iter().enumerate() {
        if c_full[b].is_zero() {
            continue;
        }
        for j in 0..=width {
            if !tab.rows[r][j].is_zero() {
                reduced[j] -= &c_full[b] * &tab.rows[r][j];
            }
        }
    }
    tab.cost = reduced;
    let allowed: Vec<bool> = (0..width).map(|j| !is_artificial[j]).collect();
    let bounded = tab.optimize(&allowed);
    assert!(bounded, "LP with bounded variables cannot be unbounded");

    let mut values = vec![Q::zero(); n];
    for (r, &b) in tab.basis.iter().enumerate() {
        if b < n {
            values[b] = tab.rhs(r).clone();
        }
    }
    LpOutcome::Optimal {
        values,
        objective: -tab.cost[width].clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(terms: &[(usize, i64)], relation: Relation, rhs: i64) -> LpRow {
        LpRow {
            terms: terms.iter().map(|&(j, a)| (j, BigInt::from(a))).collect(),
            relation,
            rhs: rhs.into(),
        }
    }

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn fractional_vertex() {
        // min -x - y  s.t. 2x + 2y <= 3, x,y in [0,1]  -> objective -3/2
        let out = solve_lp(
            &big(&[1, 1]),
            &[row(&[(0, 2), (1, 2)], Relation::Le, 3)],
            &big(&[-1, -1]),
        );
        match out {
            LpOutcome::Optimal { objective, .. } => {
                assert_eq!(objective, Q::new((-3).into(), 2.into()))
            }
            _ => panic!("expected optimum"),
        }
    }

    #[test]
    fn infeasible_equality() {
        let out = solve_lp(&big(&[1]), &[row(&[(0, 1)], Relation::Eq, 2)], &big(&[0]));
        assert!(matches!(out, LpOutcome::Infeasible));
    }

    #[test]
    fn redundant_equalities() {
        let rows = [
            row(&[(0, 1), (1, -1)], Relation::Eq, 0),
            row(&[(0, 2), (1, -2)], Relation::Eq, 0),
            row(&[(0, 1), (1, 1)], Relation::Ge, 2),
        ];
        match solve_lp(&big(&[3, 3]), &rows, &big(&[1, 1])) {
            LpOutcome::Optimal { values, objective } => {
                assert_eq!(objective, Q::from_integer(2.into()));
                assert_eq!(values[0], values[1]);
            }
            _ => panic!("expected optimum"),
        }
    }
}
