//! Elastic sensitivity: a coarser smooth bound built from per-attribute
//! maximum frequencies instead of boundary multiplicities. Cheaper than the
//! residual bound and never tighter; kept for comparison output.

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};

use crate::query::Query;
use crate::store::{Instance, Relation};
use crate::{Error, Result};

/// Maximum number of tuples agreeing on the given attribute positions.
/// An empty attribute list groups everything together: the relation size.
pub fn max_frequency(rel: &Relation, attrs: &[usize]) -> u64 {
    if attrs.is_empty() {
        return rel.len() as u64;
    }
    use std::collections::BTreeMap;
    let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    for t in &rel.tuples {
        let key: Vec<i64> = attrs.iter().map(|&a| t[a]).collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    counts.values().copied().max().unwrap_or(0)
}

/// Worst single-attribute frequency of the relation behind each atom. Unary
/// relations degrade to the relation size (every tuple shares the empty rest).
fn atom_max_frequencies(q: &Query, inst: &Instance) -> Result<Vec<u64>> {
    let mut out = Vec::with_capacity(q.n());
    for atom in q.atoms() {
        let rel = inst
            .relation(&atom.relation)
            .ok_or_else(|| Error::Schema(format!("missing relation {}", atom.relation)))?;
        let mf = (0..rel.arity)
            .map(|p| max_frequency(rel, &[p]))
            .max()
            .unwrap_or(rel.len() as u64);
        out.push(mf);
    }
    Ok(out)
}

/// Elastic analogue of hatLS^(k): for each private group, sum over nonempty
/// dropped subsets the product of (mf_j + k) over the kept atoms. Predicates
/// and projection are ignored; both only shrink the true count, so the bound
/// stays valid.
pub fn elastic_hat_lsk(q: &Query, inst: &Instance, k: u64) -> Result<BigUint> {
    let mf = atom_max_frequencies(q, inst)?;
    let mut best = BigUint::zero();
    for &g in q.private_groups() {
        let atoms: Vec<usize> = q.groups()[g].atoms().collect();
        let mut sum = BigUint::zero();
        for pick in 1u64..(1u64 << atoms.len()) {
            let dropped: Vec<usize> = atoms
                .iter()
                .enumerate()
                .filter(|(b, _)| pick >> b & 1 == 1)
                .map(|(_, &a)| a)
                .collect();
            let mut prod = BigUint::from(1u32);
            for j in 0..q.n() {
                if !dropped.contains(&j) {
                    prod *= BigUint::from(mf[j] + k);
                }
            }
            sum += prod;
        }
        if sum > best {
            best = sum;
        }
    }
    Ok(best)
}

/// Elastic sensitivity: max over k of e^{-beta k} times the elastic hatLS.
/// The curve is a polynomial of degree < n times a decaying exponential, so
/// searching up to ceil(n_p / beta) + 1 covers the maximum.
pub fn elastic_sensitivity(q: &Query, inst: &Instance, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(Error::Data(format!("beta must be positive, got {beta}")));
    }
    if q.m_p() == 0 {
        return Ok(0.0);
    }
    let k_max = (q.n_p() as f64 / beta).ceil() as u64 + 1;
    let mut best = 0.0f64;
    for k in 0..=k_max {
        let v = elastic_hat_lsk(q, inst, k)?;
        let smoothed = (-beta * k as f64).exp() * v.to_f64().unwrap_or(f64::MAX);
        if smoothed > best {
            best = smoothed;
        }
    }
    Ok(best)
}
