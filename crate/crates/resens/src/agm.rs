//! Global-sensitivity upper bound from worst-case join sizes.
//!
//! For every private group and every nonempty dropped subset of its atoms,
//! the boundary variables of the residual are fixed; treating each remaining
//! logical copy as an independent relation of size N, the residual result is
//! at most N^{rho*}, where rho* is the minimum fractional edge cover of the
//! stripped residual hypergraph. Summing per group and maximizing over groups
//! bounds how much one edit can change the query result.

use std::collections::BTreeSet;

use num_rational::Ratio;
use num_traits::{ToPrimitive, Zero};

use crate::query::{Query, Var};
use crate::{Error, Result};

type Rat = Ratio<i64>;

#[derive(Debug, Clone)]
pub struct GsTerm {
    /// Private group index this term belongs to.
    pub group: usize,
    /// Dropped atom subset E.
    pub dropped: BTreeSet<usize>,
    /// Minimum fractional edge cover exponent of the stripped residual.
    pub rho: Rat,
    /// N^rho.
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct GsBound {
    /// max over private groups of the sum of the group's term bounds.
    pub value: f64,
    pub terms: Vec<GsTerm>,
}

impl GsBound {
    /// Largest exponent across all terms: the asymptotic order in N.
    pub fn max_exponent(&self) -> Rat {
        self.terms
            .iter()
            .map(|t| t.rho)
            .max()
            .unwrap_or_else(Rat::zero)
    }
}

/// Minimum fractional edge cover: minimize sum of atom weights subject to
/// every variable being covered with total weight >= 1, weights >= 0.
/// Solved exactly by vertex enumeration over the (tiny) constraint polytope.
fn min_fractional_edge_cover(atom_vars: &[BTreeSet<Var>]) -> Result<Rat> {
    let k = atom_vars.len();
    if k == 0 {
        return Ok(Rat::zero());
    }
    let vars: BTreeSet<Var> = atom_vars.iter().flatten().copied().collect();
    // Constraint rows as (coefficients, rhs) with sense >=.
    let mut rows: Vec<(Vec<Rat>, Rat)> = Vec::new();
    for &v in &vars {
        let coeffs: Vec<Rat> = atom_vars
            .iter()
            .map(|a| {
                if a.contains(&v) {
                    Rat::from_integer(1)
                } else {
                    Rat::zero()
                }
            })
            .collect();
        rows.push((coeffs, Rat::from_integer(1)));
    }
    for a in 0..k {
        let mut coeffs = vec![Rat::zero(); k];
        coeffs[a] = Rat::from_integer(1);
        rows.push((coeffs, Rat::zero()));
    }

    let feasible = |w: &[Rat]| {
        rows.iter().all(|(c, rhs)| {
            let lhs = c
                .iter()
                .zip(w)
                .fold(Rat::zero(), |acc, (a, b)| acc + *a * *b);
            lhs >= *rhs
        })
    };

    let mut best: Option<Rat> = None;
    let mut combo: Vec<usize> = (0..k).collect();
    if rows.len() < k {
        return Err(Error::Internal("edge cover system underdetermined".into()));
    }
    loop {
        if let Some(w) = solve_square(&combo, &rows, k) {
            if feasible(&w) {
                let obj = w.iter().fold(Rat::zero(), |acc, x| acc + *x);
                if best.map(|b| obj < b).unwrap_or(true) {
                    best = Some(obj);
                }
            }
        }
        // Next k-combination of the row indices.
        let n = rows.len();
        let mut i = k;
        let mut advanced = false;
        while i > 0 {
            i -= 1;
            if combo[i] < n - k + i {
                combo[i] += 1;
                for j in i + 1..k {
                    combo[j] = combo[j - 1] + 1;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
    }
    best.ok_or_else(|| Error::Internal("edge cover polytope has no vertex".into()))
}

/// Solve the k x k system formed by the chosen tight rows; None if singular.
fn solve_square(chosen: &[usize], rows: &[(Vec<Rat>, Rat)], k: usize) -> Option<Vec<Rat>> {
    let mut m: Vec<Vec<Rat>> = chosen
        .iter()
        .map(|&r| {
            let mut row = rows[r].0.clone();
            row.push(rows[r].1);
            row
        })
        .collect();
    for col in 0..k {
        let pivot = (col..k).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        let p = m[col][col];
        for c in col..=k {
            m[col][c] /= p;
        }
        for r in 0..k {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col];
                for c in col..=k {
                    let sub = f * m[col][c];
                    m[r][c] -= sub;
                }
            }
        }
    }
    Some((0..k).map(|r| m[r][k]).collect())
}

/// AGM-based GS upper bound for instance size `n`. Only valid in the relaxed
/// setting where N is public; strict tuple-DP has no finite GS for joins.
pub fn gs_upper_agm(q: &Query, n: u64) -> Result<GsBound> {
    let mut terms: Vec<GsTerm> = Vec::new();
    for (group, dropped) in q.enumerate_private_subsets() {
        let keep: BTreeSet<usize> = (0..q.n()).filter(|i| !dropped.contains(i)).collect();
        let spec = q.residual_spec(&keep);
        let stripped: Vec<BTreeSet<Var>> = keep
            .iter()
            .map(|&a| {
                q.atom(a)
                    .vars
                    .iter()
                    .copied()
                    .filter(|v| !spec.boundary.contains(v))
                    .collect::<BTreeSet<Var>>()
            })
            .filter(|s| !s.is_empty())
            .collect();
        let rho = min_fractional_edge_cover(&stripped)?;
        let bound = (n as f64).powf(rho.to_f64().unwrap_or(0.0));
        terms.push(GsTerm {
            group,
            dropped,
            rho,
            bound,
        });
    }
    let value = q
        .private_groups()
        .iter()
        .map(|&g| {
            terms
                .iter()
                .filter(|t| t.group == g)
                .map(|t| t.bound)
                .sum::<f64>()
        })
        .fold(0.0f64, f64::max);
    Ok(GsBound { value, terms })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> Rat {
        Rat::new(n, d)
    }

    #[test]
    fn cover_single_atom() {
        let sets = vec![[0usize, 1].into_iter().collect::<BTreeSet<_>>()];
        assert_eq!(min_fractional_edge_cover(&sets).unwrap(), rat(1, 1));
    }

    #[test]
    fn cover_triangle_hypergraph() {
        // Three edges pairwise sharing a vertex: the classic 3/2 cover.
        let sets: Vec<BTreeSet<usize>> = vec![
            [0, 1].into_iter().collect(),
            [1, 2].into_iter().collect(),
            [0, 2].into_iter().collect(),
        ];
        assert_eq!(min_fractional_edge_cover(&sets).unwrap(), rat(3, 2));
    }

    #[test]
    fn cover_disjoint_edges() {
        let sets: Vec<BTreeSet<usize>> = vec![
            [0, 1].into_iter().collect(),
            [2, 3].into_iter().collect(),
        ];
        assert_eq!(min_fractional_edge_cover(&sets).unwrap(), rat(2, 1));
    }

    #[test]
    fn cover_empty() {
        assert_eq!(min_fractional_edge_cover(&[]).unwrap(), rat(0, 1));
    }

    #[test]
    fn triangle_bound_is_linear() {
        let q = Query::parse("q() :- Edge(a,b), Edge(b,c), Edge(a,c); private Edge").unwrap();
        let n = 1000u64;
        let gs = gs_upper_agm(&q, n).unwrap();
        // Dropping one atom leaves two copies sharing the middle variable:
        // cover weight 1, bound N. Dropping two or three leaves nothing.
        assert_eq!(gs.max_exponent(), rat(1, 1));
        let single_drops: Vec<&GsTerm> =
            gs.terms.iter().filter(|t| t.dropped.len() == 1).collect();
        assert_eq!(single_drops.len(), 3);
        for t in single_drops {
            assert_eq!(t.rho, rat(1, 1));
            assert_eq!(t.bound, n as f64);
        }
        assert_eq!(gs.value, 3.0 * n as f64 + 4.0);
    }

    #[test]
    fn path4_bound_is_quadratic() {
        let q = Query::parse(
            "q() :- Edge(x1,x2), Edge(x2,x3), Edge(x3,x4), Edge(x4,x5); private Edge",
        )
        .unwrap();
        let gs = gs_upper_agm(&q, 100).unwrap();
        assert_eq!(gs.max_exponent(), rat(2, 1));
    }

    #[test]
    fn single_unary_relation_bound_one() {
        let q = Query::parse("q() :- R(x); private R").unwrap();
        let gs = gs_upper_agm(&q, 50).unwrap();
        assert_eq!(gs.value, 1.0);
        assert_eq!(gs.terms.len(), 1);
        assert_eq!(gs.terms[0].rho, rat(0, 1));
    }

    #[test]
    fn no_private_relations_zero() {
        let q = Query::parse("q() :- R(x)").unwrap();
        let gs = gs_upper_agm(&q, 50).unwrap();
        assert_eq!(gs.value, 0.0);
        assert!(gs.terms.is_empty());
    }
}
