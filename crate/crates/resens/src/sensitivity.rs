//! Residual sensitivity: combine boundary multiplicities T_E into the
//! smooth upper bound RS(I) = max_k e^{-beta k} hatLS^(k)(I).
//!
//! All integer arithmetic is arbitrary precision: the hatLS terms multiply
//! multiplicities by distance-vector products and can exceed 64 bits.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::engine::{
    compute_te, compute_te_projected, compute_te_with_predicates, BoundaryProfile,
    EngineLimits, TeMode,
};
use crate::query::Query;
use crate::store::{valid_distance_vectors, Instance};
use crate::{Error, Result};

pub fn mask_of(set: &BTreeSet<usize>) -> u64 {
    set.iter().fold(0u64, |m, &i| m | 1 << i)
}

pub fn set_of(mask: u64, n: usize) -> BTreeSet<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// T values (and full profiles) for every kept-atom subset the RS formula
/// touches, keyed by kept-set bitmask.
#[derive(Debug, Clone, Default)]
pub struct TeTable {
    pub values: BTreeMap<u64, u64>,
    pub profiles: BTreeMap<u64, BoundaryProfile>,
}

/// T_E dispatch: plain, projected, or predicate-aware depending on the query.
pub fn compute_te_auto(
    q: &Query,
    inst: &Instance,
    keep: &BTreeSet<usize>,
    limits: &EngineLimits,
) -> Result<BoundaryProfile> {
    if q.has_predicates() {
        compute_te_with_predicates(q, inst, keep, TeMode::auto(q), limits)
    } else if q.is_full() {
        compute_te(q, inst, keep, limits)
    } else {
        compute_te_projected(q, inst, keep, limits)
    }
}

/// Kept-set masks needed by the RS formula: complements of nonempty dropped
/// subsets within each private group, closed under removing private atoms
/// (the hat-T expansion indexes those).
fn needed_masks(q: &Query) -> BTreeSet<u64> {
    let n = q.n();
    let private = mask_of(&q.private_atoms());
    let mut out = BTreeSet::new();
    for (_, dropped) in q.enumerate_private_subsets() {
        let kept = !mask_of(&dropped) & ((1u64 << n) - 1);
        // All subsets obtainable by removing private kept atoms.
        let removable = kept & private;
        let mut sub = removable;
        loop {
            out.insert(kept & !sub);
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & removable;
        }
    }
    out
}

pub fn compute_te_table(q: &Query, inst: &Instance, limits: &EngineLimits) -> Result<TeTable> {
    let mut table = TeTable::default();
    for mask in needed_masks(q) {
        let keep = set_of(mask, q.n());
        let profile = compute_te_auto(q, inst, &keep, limits)?;
        table.values.insert(mask, profile.value);
        table.profiles.insert(mask, profile);
    }
    Ok(table)
}

/// hat-T for the kept set: sum over subsets E' of the kept atoms of
/// T_{kept \ E'} times the product of s_j over E' (empty product = 1).
/// Terms with any s_j = 0 vanish, so only positive-budget positions branch.
pub fn hat_tes(values: &BTreeMap<u64, u64>, kept_mask: u64, s: &[u64]) -> Result<BigUint> {
    let positive: Vec<usize> = (0..s.len())
        .filter(|&j| kept_mask >> j & 1 == 1 && s[j] > 0)
        .collect();
    let mut total = BigUint::zero();
    let count = 1u64 << positive.len();
    for pick in 0..count {
        let mut sub_mask = 0u64;
        let mut prod = BigUint::from(1u32);
        for (b, &j) in positive.iter().enumerate() {
            if pick >> b & 1 == 1 {
                sub_mask |= 1 << j;
                prod *= BigUint::from(s[j]);
            }
        }
        let rest = kept_mask & !sub_mask;
        let t = values.get(&rest).ok_or_else(|| {
            Error::Internal(format!("missing T table entry for kept mask {rest:#b}"))
        })?;
        total += prod * BigUint::from(*t);
    }
    Ok(total)
}

/// hatLS^(k): max over valid distance vectors and private groups of the sum
/// of hat-T over nonempty dropped subsets of the group.
pub fn hat_lsk(q: &Query, values: &BTreeMap<u64, u64>, k: u64) -> Result<BigUint> {
    let full = (1u64 << q.n()) - 1;
    let mut best = BigUint::zero();
    for s in valid_distance_vectors(q, k) {
        for &g in q.private_groups() {
            let mut sum = BigUint::zero();
            let atoms: Vec<usize> = q.groups()[g].atoms().collect();
            for pick in 1u64..(1u64 << atoms.len()) {
                let mut dropped = 0u64;
                for (b, &a) in atoms.iter().enumerate() {
                    if pick >> b & 1 == 1 {
                        dropped |= 1 << a;
                    }
                }
                sum += hat_tes(values, full & !dropped, &s)?;
            }
            if sum > best {
                best = sum;
            }
        }
    }
    Ok(best)
}

/// Cutoff beyond which e^{-beta k} hatLS^(k) cannot increase.
pub fn k_hat(q: &Query, beta: f64) -> f64 {
    if q.m_p() == 0 {
        return 0.0;
    }
    let nmax = q.max_group_size() as f64;
    q.m_p() as f64 / (1.0 - (-beta / nmax).exp())
}

#[derive(Debug, Clone)]
pub struct SensitivityOptions {
    pub beta: f64,
    pub epsilon: Option<f64>,
    pub limits: EngineLimits,
    /// Extra search steps past the cutoff (used by the cutoff-soundness test).
    pub extra_k: u64,
}

impl SensitivityOptions {
    pub fn from_beta(beta: f64) -> Self {
        SensitivityOptions {
            beta,
            epsilon: None,
            limits: EngineLimits::default(),
            extra_k: 0,
        }
    }

    /// beta = epsilon / 10, the calibration used by the release mechanism.
    pub fn from_epsilon(epsilon: f64) -> Self {
        SensitivityOptions {
            beta: epsilon / 10.0,
            epsilon: Some(epsilon),
            limits: EngineLimits::default(),
            extra_k: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HatLsPoint {
    pub k: u64,
    pub value: BigUint,
}

impl Serialize for HatLsPoint {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut s = ser.serialize_struct("HatLsPoint", 2)?;
        s.serialize_field("k", &self.k)?;
        // Exact decimal string: the values can exceed any float's mantissa.
        s.serialize_field("value", &self.value.to_string())?;
        s.end()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TeEntry {
    pub value: u64,
    pub witness: Option<BTreeMap<String, i64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SensitivityReport {
    pub beta: f64,
    pub epsilon: Option<f64>,
    pub k_hat: f64,
    pub hat_ls: Vec<HatLsPoint>,
    pub rs: f64,
    pub gs_upper: Option<f64>,
    pub es: Option<f64>,
    pub te: BTreeMap<String, TeEntry>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl SensitivityReport {
    /// k attaining the RS maximum.
    pub fn rs_argmax(&self) -> u64 {
        let mut best = (0u64, f64::NEG_INFINITY);
        for p in &self.hat_ls {
            let v = (-self.beta * p.k as f64).exp() * p.value.to_f64().unwrap_or(f64::MAX);
            if v > best.1 {
                best = (p.k, v);
            }
        }
        best.0
    }
}

fn te_key(q: &Query, mask: u64) -> String {
    set_of(mask, q.n())
        .iter()
        .map(|a| (a + 1).to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Compute the full RS report: T table, hatLS curve for k = 0..ceil(k_hat)+1
/// (+ extra), and RS as the curve's smoothed maximum.
pub fn residual_sensitivity(
    q: &Query,
    inst: &Instance,
    opts: &SensitivityOptions,
) -> Result<SensitivityReport> {
    if !(opts.beta > 0.0) {
        return Err(Error::Data(format!(
            "beta must be positive, got {}",
            opts.beta
        )));
    }
    let t0 = Instant::now();
    let table = compute_te_table(q, inst, &opts.limits)?;
    let te_ms = t0.elapsed().as_secs_f64() * 1e3;

    let t1 = Instant::now();
    let kh = k_hat(q, opts.beta);
    // Ceiling plus one conservative guard step, plus any requested extension.
    let k_max = kh.ceil() as u64 + 1 + opts.extra_k;
    let mut hat_ls = Vec::new();
    let mut rs = 0.0f64;
    for k in 0..=k_max {
        let v = hat_lsk(q, &table.values, k)?;
        let smoothed = (-opts.beta * k as f64).exp() * v.to_f64().unwrap_or(f64::MAX);
        if smoothed > rs {
            rs = smoothed;
        }
        hat_ls.push(HatLsPoint { k, value: v });
    }
    let curve_ms = t1.elapsed().as_secs_f64() * 1e3;

    let te = table
        .profiles
        .iter()
        .map(|(&mask, p)| {
            let witness = p.witness.as_ref().map(|w| {
                w.iter()
                    .map(|&(v, x)| (q.var_name(v).to_string(), x))
                    .collect()
            });
            (
                te_key(q, mask),
                TeEntry {
                    value: p.value,
                    witness,
                },
            )
        })
        .collect();
    let mut timings_ms = BTreeMap::new();
    timings_ms.insert("te_table".to_string(), te_ms);
    timings_ms.insert("curve".to_string(), curve_ms);

    Ok(SensitivityReport {
        beta: opts.beta,
        epsilon: opts.epsilon,
        k_hat: kh,
        hat_ls,
        rs,
        gs_upper: None,
        es: None,
        te,
        timings_ms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Query {
        Query::parse("q() :- Edge(a,b), Edge(b,c), Edge(a,c); private Edge").unwrap()
    }

    fn edges(list: &[(i64, i64)]) -> Instance {
        let tuples: Vec<Vec<i64>> = list.iter().map(|&(a, b)| vec![a, b]).collect();
        let refs: Vec<&[i64]> = tuples.iter().map(|t| t.as_slice()).collect();
        Instance::from_tuples(&[("Edge", 2, &refs)])
    }

    fn big(x: u64) -> BigUint {
        BigUint::from(x)
    }

    #[test]
    fn hat_tes_zero_vector_is_te() {
        let mut values = BTreeMap::new();
        values.insert(0b011u64, 7u64);
        let s = vec![0, 0, 0];
        assert_eq!(hat_tes(&values, 0b011, &s).unwrap(), big(7));
    }

    #[test]
    fn hat_tes_empty_kept_is_one() {
        let mut values = BTreeMap::new();
        values.insert(0u64, 1u64);
        assert_eq!(hat_tes(&values, 0, &[5, 5, 5]).unwrap(), big(1));
    }

    #[test]
    fn hat_tes_triangle_expansion() {
        // Kept {2,3} with unit budgets: T_{23} + T_2 + T_3 + 1.
        let mut values = BTreeMap::new();
        values.insert(0b110u64, 10u64); // a
        values.insert(0b010u64, 4u64); // b
        values.insert(0b100u64, 5u64); // c
        values.insert(0b000u64, 1u64);
        let s = vec![1, 1, 1];
        assert_eq!(hat_tes(&values, 0b110, &s).unwrap(), big(10 + 4 + 5 + 1));
    }

    #[test]
    fn hat_tes_missing_entry_errors() {
        let values = BTreeMap::new();
        assert!(hat_tes(&values, 0b1, &[0]).is_err());
    }

    #[test]
    fn hat_lsk_zero_is_sum_of_te() {
        let q = triangle();
        let i = edges(&[(1, 2), (2, 3), (1, 3)]);
        let table = compute_te_table(&q, &i, &EngineLimits::default()).unwrap();
        let manual: u64 = (1u64..8)
            .map(|dropped| table.values[&(0b111 & !dropped)])
            .sum();
        assert_eq!(hat_lsk(&q, &table.values, 0).unwrap(), big(manual));
    }

    #[test]
    fn hat_lsk_triangle_polynomial() {
        // For the triangle, hatLS^(k) expands to a cubic-free polynomial:
        // sum over pair-kept terms (T_ab + 2k T_single + k^2) etc.
        let q = triangle();
        let i = edges(&[(1, 2), (2, 3), (1, 3), (1, 4), (4, 3)]);
        let table = compute_te_table(&q, &i, &EngineLimits::default()).unwrap();
        let v = &table.values;
        for k in 0u64..6 {
            let mut expect: u64 = 0;
            // Dropped singletons: kept pairs.
            for (kept, s1, s2) in [(0b011u64, 0b001u64, 0b010u64), (0b101, 0b001, 0b100), (0b110, 0b010, 0b100)]
            {
                expect += v[&kept] + k * (v[&s1] + v[&s2]) + k * k;
            }
            // Dropped pairs: kept singletons.
            for kept in [0b001u64, 0b010, 0b100] {
                expect += v[&kept] + k;
            }
            // Dropped all: empty kept.
            expect += 1;
            assert_eq!(hat_lsk(&q, v, k).unwrap(), big(expect), "k={k}");
        }
    }

    #[test]
    fn k_hat_triangle() {
        let q = triangle();
        assert!((k_hat(&q, 0.1) - 30.51).abs() < 0.01);
        let nopriv = Query::parse("q() :- R(a)").unwrap();
        assert_eq!(k_hat(&nopriv, 0.1), 0.0);
    }

    #[test]
    fn report_structure_and_serialization() {
        let q = triangle();
        let i = edges(&[(1, 2), (2, 3), (1, 3)]);
        let rep = residual_sensitivity(&q, &i, &SensitivityOptions::from_epsilon(1.0)).unwrap();
        assert!((rep.beta - 0.1).abs() < 1e-12);
        assert_eq!(rep.epsilon, Some(1.0));
        assert_eq!(rep.hat_ls.len() as u64, rep.k_hat.ceil() as u64 + 2);
        assert!(rep.rs > 0.0);
        // RS is the max of the smoothed curve.
        let manual = rep
            .hat_ls
            .iter()
            .map(|p| (-rep.beta * p.k as f64).exp() * p.value.to_f64().unwrap())
            .fold(0.0f64, f64::max);
        assert!((rep.rs - manual).abs() < 1e-9);
        let json = serde_json::to_value(&rep).unwrap();
        for field in [
            "beta", "epsilon", "k_hat", "hat_ls", "rs", "gs_upper", "es", "te", "timings_ms",
        ] {
            assert!(json.get(field).is_some(), "missing field {field}");
        }
        assert_eq!(json["hat_ls"][0]["k"], 0);
        assert!(json["hat_ls"][0]["value"].is_string());
        // Witness entries decode variable names.
        let te = json["te"].as_object().unwrap();
        assert!(te.contains_key("1,2"));
    }

    #[test]
    fn beta_must_be_positive() {
        let q = triangle();
        let i = edges(&[(1, 2)]);
        assert!(residual_sensitivity(&q, &i, &SensitivityOptions::from_beta(0.0)).is_err());
    }

    #[test]
    fn rs_zero_without_private_relations() {
        let q = Query::parse("q() :- Edge(a,b), Edge(b,c), Edge(a,c)").unwrap();
        let i = edges(&[(1, 2), (2, 3), (1, 3)]);
        let rep = residual_sensitivity(&q, &i, &SensitivityOptions::from_beta(0.1)).unwrap();
        assert_eq!(rep.rs, 0.0);
    }
}
