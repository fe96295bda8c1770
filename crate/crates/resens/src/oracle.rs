//! Brute-force oracles used to validate the production bounds. Nothing here
//! shares evaluation code with the engine: counting is plain nested
//! enumeration over active-domain valuations, and sensitivities come from
//! explicit neighbor enumeration.

use std::collections::{BTreeSet, HashMap, HashSet};

use crate::query::{Query, Var};
use crate::store::{edit_domain, single_edits, Instance};
use crate::{Error, Result};

/// Size caps for the exhaustive oracles. Exceeding any cap is a refusal,
/// never a truncation.
#[derive(Debug, Clone, Copy)]
pub struct OracleGuard {
    pub max_tuples: usize,
    pub max_k: usize,
    pub max_domain: usize,
}

impl Default for OracleGuard {
    fn default() -> Self {
        OracleGuard {
            max_tuples: 12,
            max_k: 3,
            max_domain: 8,
        }
    }
}

const ORACLE_WORK_CAP: u64 = 50_000_000;

fn domain_of(q: &Query, inst: &Instance) -> Vec<i64> {
    let mut dom = inst.active_domain();
    dom.extend(q.constants());
    dom.into_iter().collect()
}

fn checked_pow(base: usize, exp: usize) -> Option<u64> {
    (base as u64).checked_pow(u32::try_from(exp).ok()?)
}

/// Count the query result by enumerating every valuation of every variable
/// over the active domain and testing atom membership and predicates.
pub fn oracle_count(q: &Query, inst: &Instance) -> Result<u64> {
    let dom = domain_of(q, inst);
    let nv = q.var_count();
    if nv == 0 || dom.is_empty() {
        return Ok(0);
    }
    match checked_pow(dom.len(), nv) {
        Some(w) if w <= ORACLE_WORK_CAP => {}
        _ => {
            return Err(Error::Guard(format!(
                "oracle count space {}^{} exceeds cap {}",
                dom.len(),
                nv,
                ORACLE_WORK_CAP
            )))
        }
    }
    let out: Vec<Var> = q.output_vars().into_iter().collect();
    let full = q.is_full();
    let mut count = 0u64;
    let mut projections: HashSet<Vec<i64>> = HashSet::new();
    let mut idx = vec![0usize; nv];
    'outer: loop {
        let vals: Vec<i64> = idx.iter().map(|&i| dom[i]).collect();
        if satisfies(q, inst, &vals) {
            if full {
                count += 1;
            } else {
                projections.insert(out.iter().map(|&v| vals[v]).collect());
            }
        }
        let mut i = 0;
        loop {
            if i == nv {
                break 'outer;
            }
            idx[i] += 1;
            if idx[i] < dom.len() {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
    Ok(if full { count } else { projections.len() as u64 })
}

fn satisfies(q: &Query, inst: &Instance, vals: &[i64]) -> bool {
    for atom in q.atoms() {
        let rel = match inst.relation(&atom.relation) {
            Some(r) => r,
            None => return false,
        };
        let tuple: Vec<i64> = atom.vars.iter().map(|&v| vals[v]).collect();
        if !rel.tuples.contains(&tuple) {
            return false;
        }
    }
    q.predicates().iter().all(|p| p.eval(&|v| vals[v]))
}

type CanonKey = Vec<(String, Vec<Vec<i64>>)>;

fn memo_count(
    q: &Query,
    inst: &Instance,
    memo: &mut HashMap<CanonKey, u64>,
) -> Result<u64> {
    let key = inst.canon_key();
    if let Some(&c) = memo.get(&key) {
        return Ok(c);
    }
    let c = oracle_count(q, inst)?;
    memo.insert(key, c);
    Ok(c)
}

/// Local sensitivity: max count change over single edits of private tuples.
pub fn oracle_ls(q: &Query, inst: &Instance, guard: &OracleGuard) -> Result<u64> {
    oracle_lsk(q, inst, 0, guard)
}

/// Local sensitivity at distance: max LS over all instances within edit
/// distance k. Breadth-first over the edit ball, counts memoized per
/// canonical instance key so shared neighbors are evaluated once.
pub fn oracle_lsk(q: &Query, inst: &Instance, k: usize, guard: &OracleGuard) -> Result<u64> {
    if k > guard.max_k {
        return Err(Error::Guard(format!(
            "oracle distance {k} exceeds cap {}",
            guard.max_k
        )));
    }
    if inst.total_tuples() > guard.max_tuples {
        return Err(Error::Guard(format!(
            "instance has {} tuples, cap is {}",
            inst.total_tuples(),
            guard.max_tuples
        )));
    }
    // The ball itself has radius k; edits of its boundary reach k + 1, so the
    // edit domain carries k + 1 fresh values.
    let dom = edit_domain(inst, q, k + 1);
    if dom.len() > guard.max_domain {
        return Err(Error::Guard(format!(
            "oracle edit domain has {} values, cap is {}",
            dom.len(),
            guard.max_domain
        )));
    }
    let private: BTreeSet<&str> = q
        .private_groups()
        .iter()
        .map(|&g| q.groups()[g].name.as_str())
        .collect();

    let mut counts: HashMap<CanonKey, u64> = HashMap::new();
    let mut seen: HashSet<CanonKey> = HashSet::new();
    let mut frontier = vec![inst.clone()];
    seen.insert(inst.canon_key());
    let mut best = 0u64;
    for layer in 0..=k {
        let mut next = Vec::new();
        for cur in &frontier {
            let c = memo_count(q, cur, &mut counts)?;
            for edited in single_edits(cur, &private, &dom) {
                let c2 = memo_count(q, &edited, &mut counts)?;
                best = best.max(c.abs_diff(c2));
                if layer < k && seen.insert(edited.canon_key()) {
                    next.push(edited);
                }
            }
        }
        frontier = next;
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy)]
pub struct SsEstimate {
    /// max over k <= guard.max_k of e^{-beta k} LS^(k).
    pub value: f64,
    /// Whether the crude tail bound shows no larger term can exist past the
    /// search horizon, making `value` the exact smooth sensitivity.
    pub tail_dominated: bool,
}

/// Truncated smooth sensitivity from the brute-force LS^(k) oracle.
pub fn oracle_ss(
    q: &Query,
    inst: &Instance,
    beta: f64,
    guard: &OracleGuard,
) -> Result<SsEstimate> {
    if !(beta > 0.0) {
        return Err(Error::Data(format!("beta must be positive, got {beta}")));
    }
    let mut value = 0.0f64;
    for k in 0..=guard.max_k {
        let ls = oracle_lsk(q, inst, k, guard)? as f64;
        value = value.max((-beta * k as f64).exp() * ls);
    }
    // Tail bound: an instance at distance k has at most T0 + k tuples, and a
    // count is at most (tuples)^n (each atom picks a tuple), so
    // LS^(k) <= (T0 + k + 1)^n. The smoothed tail terms peak at
    // k = n / beta - T0 - 1 and decay after; scan a bit past that point.
    let t0 = inst.total_tuples() as f64;
    let n = q.n() as f64;
    let horizon = guard.max_k + 1;
    let peak = (n / beta).ceil() as usize + 2;
    let mut tail = 0.0f64;
    for k in horizon..=horizon.max(peak) {
        let cap = (t0 + k as f64 + 1.0).powf(n);
        tail = tail.max((-beta * k as f64).exp() * cap);
    }
    Ok(SsEstimate {
        value,
        tail_dominated: tail <= value,
    })
}

/// Brute-force boundary multiplicity: maximize the residual count over
/// explicit boundary assignments. Join-boundary variables range over the
/// active domain plus query constants; predicate-only boundary variables
/// range over a window widened past the active values far enough to satisfy
/// any chain of comparisons.
pub fn oracle_te(
    q: &Query,
    inst: &Instance,
    keep: &BTreeSet<usize>,
    guard: &OracleGuard,
) -> Result<u64> {
    if inst.total_tuples() > guard.max_tuples {
        return Err(Error::Guard(format!(
            "instance has {} tuples, cap is {}",
            inst.total_tuples(),
            guard.max_tuples
        )));
    }
    let spec = q.residual_spec(keep);
    if keep.is_empty() {
        return Ok(1);
    }
    let projected = !q.is_full();
    if projected && spec.output_vars.is_empty() {
        return Ok(1);
    }
    let core: Vec<Var> = spec.core_vars.iter().copied().collect();
    let boundary: Vec<Var> = spec.boundary.iter().copied().collect();
    let free: Vec<Var> = spec.boundary2.iter().copied().collect();
    let out: Vec<Var> = spec.output_vars.iter().copied().collect();
    let dom = domain_of(q, inst);
    let rho = free.len() as i64;
    let window: Vec<i64> = {
        let lo = dom.first().copied().unwrap_or(0) - (rho + 2);
        let hi = dom.last().copied().unwrap_or(0) + (rho + 2);
        (lo..=hi).collect()
    };
    let work = checked_pow(dom.len().max(1), core.len())
        .zip(checked_pow(window.len(), free.len()))
        .and_then(|(a, b)| a.checked_mul(b));
    match work {
        Some(w) if w <= ORACLE_WORK_CAP => {}
        _ => {
            return Err(Error::Guard(format!(
                "oracle T space {}^{} x {}^{} exceeds cap {}",
                dom.len(),
                core.len(),
                window.len(),
                free.len(),
                ORACLE_WORK_CAP
            )))
        }
    }

    // Predicates whose variables all live in the residual (core plus free
    // boundary); anything touching other dropped variables falls away.
    let live: BTreeSet<Var> = core.iter().chain(free.iter()).copied().collect();
    let preds: Vec<_> = q
        .predicates()
        .iter()
        .filter(|p| p.vars().iter().all(|v| live.contains(v)))
        .collect();

    let mut best = 0u64;
    let mut free_idx = vec![0usize; free.len()];
    loop {
        // Group residual matches by join-boundary assignment for this free
        // assignment; the overall max ranges over both.
        let mut counts: HashMap<Vec<i64>, u64> = HashMap::new();
        let mut sets: HashMap<Vec<i64>, HashSet<Vec<i64>>> = HashMap::new();
        let t2: Vec<i64> = free_idx.iter().map(|&i| window[i]).collect();
        if dom.is_empty() {
            best = best.max(0);
        } else {
            let mut core_idx = vec![0usize; core.len()];
            'core: loop {
                let assign = |v: Var| -> i64 {
                    if let Some(i) = core.iter().position(|&c| c == v) {
                        dom[core_idx[i]]
                    } else {
                        let i = free.iter().position(|&f| f == v).unwrap();
                        t2[i]
                    }
                };
                let ok = keep.iter().all(|&a| {
                    let atom = q.atom(a);
                    match inst.relation(&atom.relation) {
                        Some(rel) => {
                            let t: Vec<i64> = atom.vars.iter().map(|&v| assign(v)).collect();
                            rel.tuples.contains(&t)
                        }
                        None => false,
                    }
                }) && preds.iter().all(|p| p.eval(&assign));
                if ok {
                    let key: Vec<i64> = boundary.iter().map(|&v| assign(v)).collect();
                    if projected {
                        let proj: Vec<i64> = out.iter().map(|&v| assign(v)).collect();
                        sets.entry(key).or_default().insert(proj);
                    } else {
                        *counts.entry(key).or_insert(0) += 1;
                    }
                }
                let mut i = 0;
                loop {
                    if i == core_idx.len() {
                        break 'core;
                    }
                    core_idx[i] += 1;
                    if core_idx[i] < dom.len() {
                        break;
                    }
                    core_idx[i] = 0;
                    i += 1;
                }
            }
        }
        if projected {
            for s in sets.values() {
                best = best.max(s.len() as u64);
            }
        } else {
            for &c in counts.values() {
                best = best.max(c);
            }
        }
        let mut i = 0;
        loop {
            if i == free_idx.len() {
                return Ok(best);
            }
            free_idx[i] += 1;
            if free_idx[i] < window.len() {
                break;
            }
            free_idx[i] = 0;
            i += 1;
        }
    }
}
