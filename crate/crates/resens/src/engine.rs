//! Join evaluation and boundary-multiplicity (T_E) computation, including the
//! projection and predicate variants.
//!
//! The evaluator is a plain backtracking join over hash indexes built per
//! atom; atom order is chosen greedily (most bound variables first). This is
//! not width-optimal and does not need to be: correctness is independent of
//! the order, and every caller is either desk-scale or guarded.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use crate::query::{Predicate, Query, ResidualSpec, Term, Var};
use crate::store::{Dictionary, Instance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct EngineLimits {
    /// Cap on tuples visited during a scan; exceeded -> guard error.
    pub max_work: u64,
    /// Cap on |core result| in the general-predicate path.
    pub general_cap: usize,
    /// Cap on the number of boundary2 assignments tried in comparison mode.
    pub t2_cap: u64,
}

impl Default for EngineLimits {
    fn default() -> Self {
        EngineLimits {
            max_work: 200_000_000,
            general_cap: 20,
            t2_cap: 2_000_000,
        }
    }
}

/// T_E result: the maximum residual multiplicity over boundary assignments,
/// with an argmax boundary assignment when the boundary is nonempty.
#[derive(Debug, Clone)]
pub struct BoundaryProfile {
    pub spec: ResidualSpec,
    pub value: u64,
    /// Argmax assignment of the (join) boundary variables, lexicographically
    /// smallest among ties; absent when the boundary is empty.
    pub witness: Option<Vec<(Var, i64)>>,
}

/// T_E evaluation strategy for queries with predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TeMode {
    /// All predicates are `!=`: free boundary2 variables are always
    /// satisfiable over an infinite domain, so a plain count group-by of the
    /// core with the core-local predicates is exact.
    InequalityOnly,
    /// Binary `<`, `<=`, `!=`: search boundary2 assignments over the
    /// augmented active domain.
    Comparison,
    /// Arbitrary predicates: subset search with a satisfiability checker.
    General,
}

impl TeMode {
    /// Weakest mode that handles every predicate of `q`.
    pub fn auto(q: &Query) -> TeMode {
        use crate::query::PredKind;
        let mut mode = TeMode::InequalityOnly;
        for p in q.predicates() {
            match p {
                Predicate::Binary { kind: PredKind::Ne, .. } => {}
                Predicate::Binary { .. } => {
                    if mode == TeMode::InequalityOnly {
                        mode = TeMode::Comparison;
                    }
                }
                Predicate::General(_) => return TeMode::General,
            }
        }
        mode
    }
}

fn check_schema(q: &Query, inst: &Instance) -> Result<()> {
    for atom in q.atoms() {
        match inst.relation(&atom.relation) {
            None => {
                return Err(Error::Schema(format!(
                    "relation {} not present in the instance",
                    atom.relation
                )))
            }
            Some(r) if r.arity != atom.vars.len() => {
                return Err(Error::Schema(format!(
                    "relation {}: arity {} in instance, {} in query",
                    atom.relation,
                    r.arity,
                    atom.vars.len()
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

/// Backtracking scan over `atoms`, applying `preds` as soon as their
/// variables are bound, invoking `on_row` once per satisfying assignment.
/// Every predicate must be fully bound by the scanned atoms.
fn scan_join(
    q: &Query,
    inst: &Instance,
    atoms: &[usize],
    preds: &[&Predicate],
    limits: &EngineLimits,
    on_row: &mut dyn FnMut(&[Option<i64>]) -> Result<()>,
) -> Result<()> {
    check_schema(q, inst)?;
    if atoms.is_empty() {
        let assignment = vec![None; q.var_count()];
        for p in preds {
            if !p.vars().is_empty() {
                return Err(Error::Internal(
                    "predicate variable not bound by scanned atoms".into(),
                ));
            }
            if !p.eval(&|_| unreachable!()) {
                return Ok(());
            }
        }
        return on_row(&assignment);
    }

    // Greedy order: start from the smallest relation, then prefer atoms with
    // the most already-bound variables (ties: smaller relation, lower index).
    let mut order: Vec<usize> = Vec::new();
    let mut remaining: Vec<usize> = atoms.to_vec();
    let mut bound: BTreeSet<Var> = BTreeSet::new();
    while !remaining.is_empty() {
        let pick = remaining
            .iter()
            .enumerate()
            .min_by_key(|(_, &a)| {
                let atom = q.atom(a);
                let nbound = atom.vars.iter().filter(|v| bound.contains(v)).count();
                let size = inst.relation(&atom.relation).unwrap().len();
                (usize::MAX - nbound, size, a)
            })
            .map(|(i, _)| i)
            .unwrap();
        let a = remaining.remove(pick);
        bound.extend(q.atom(a).vars.iter().copied());
        order.push(a);
    }

    // Per step: positions already bound (index key) and the step at which
    // each predicate becomes fully bound.
    let mut bound_before: BTreeSet<Var> = BTreeSet::new();
    let mut key_positions: Vec<Vec<usize>> = Vec::new();
    let mut bind_step: HashMap<Var, usize> = HashMap::new();
    for (step, &a) in order.iter().enumerate() {
        let atom = q.atom(a);
        let keyed: Vec<usize> = (0..atom.vars.len())
            .filter(|&p| bound_before.contains(&atom.vars[p]))
            .collect();
        key_positions.push(keyed);
        for &v in &atom.vars {
            bind_step.entry(v).or_insert(step);
            bound_before.insert(v);
        }
    }
    let mut preds_at: Vec<Vec<&Predicate>> = vec![Vec::new(); order.len()];
    for p in preds {
        let step = p
            .vars()
            .iter()
            .map(|v| {
                bind_step.get(v).copied().ok_or_else(|| {
                    Error::Internal("predicate variable not bound by scanned atoms".into())
                })
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .max()
            .unwrap_or(0);
        preds_at[step].push(p);
    }

    // Hash indexes on the bound positions of each step.
    let mut indexes: Vec<HashMap<Vec<i64>, Vec<&Vec<i64>>>> = Vec::new();
    for (step, &a) in order.iter().enumerate() {
        let atom = q.atom(a);
        let rel = inst.relation(&atom.relation).unwrap();
        let mut index: HashMap<Vec<i64>, Vec<&Vec<i64>>> = HashMap::new();
        for t in &rel.tuples {
            let key: Vec<i64> = key_positions[step].iter().map(|&p| t[p]).collect();
            index.entry(key).or_default().push(t);
        }
        indexes.push(index);
    }

    struct Ctx<'a> {
        q: &'a Query,
        order: &'a [usize],
        key_positions: &'a [Vec<usize>],
        preds_at: &'a [Vec<&'a Predicate>],
        indexes: &'a [HashMap<Vec<i64>, Vec<&'a Vec<i64>>>],
        limits: &'a EngineLimits,
        work: u64,
    }

    fn descend(
        ctx: &mut Ctx<'_>,
        step: usize,
        assignment: &mut Vec<Option<i64>>,
        on_row: &mut dyn FnMut(&[Option<i64>]) -> Result<()>,
    ) -> Result<()> {
        if step == ctx.order.len() {
            return on_row(assignment);
        }
        let atom = ctx.q.atom(ctx.order[step]);
        let key: Vec<i64> = ctx.key_positions[step]
            .iter()
            .map(|&p| assignment[atom.vars[p]].unwrap())
            .collect();
        let Some(tuples) = ctx.indexes[step].get(&key) else {
            return Ok(());
        };
        'tuples: for t in tuples {
            ctx.work += 1;
            if ctx.work > ctx.limits.max_work {
                return Err(Error::Guard(format!(
                    "join scan exceeded work limit {}",
                    ctx.limits.max_work
                )));
            }
            let mut newly: Vec<Var> = Vec::new();
            for (p, &v) in atom.vars.iter().enumerate() {
                match assignment[v] {
                    Some(x) if x == t[p] => {}
                    Some(_) => {
                        for &nv in &newly {
                            assignment[nv] = None;
                        }
                        continue 'tuples;
                    }
                    None => {
                        assignment[v] = Some(t[p]);
                        newly.push(v);
                    }
                }
            }
            let mut ok = true;
            for p in &ctx.preds_at[step] {
                if !p.eval(&|v| assignment[v].unwrap()) {
                    ok = false;
                    break;
                }
            }
            if ok {
                descend(ctx, step + 1, assignment, on_row)?;
            }
            for &nv in &newly {
                assignment[nv] = None;
            }
        }
        Ok(())
    }

    let mut ctx = Ctx {
        q,
        order: &order,
        key_positions: &key_positions,
        preds_at: &preds_at,
        indexes: &indexes,
        limits,
        work: 0,
    };
    let mut assignment = vec![None; q.var_count()];
    descend(&mut ctx, 0, &mut assignment, on_row)
}

/// Exact |q(I)|: join all atoms, filter all predicates, project (distinct)
/// when the query is non-full.
pub fn eval_count(q: &Query, inst: &Instance, limits: &EngineLimits) -> Result<u64> {
    let atoms: Vec<usize> = (0..q.n()).collect();
    let preds: Vec<&Predicate> = q.predicates().iter().collect();
    if q.is_full() {
        let mut count = 0u64;
        scan_join(q, inst, &atoms, &preds, limits, &mut |_| {
            count += 1;
            Ok(())
        })?;
        Ok(count)
    } else {
        let out: Vec<Var> = q.output_vars().into_iter().collect();
        let mut seen: HashSet<Vec<i64>> = HashSet::new();
        scan_join(q, inst, &atoms, &preds, limits, &mut |row| {
            seen.insert(out.iter().map(|&v| row[v].unwrap()).collect());
            Ok(())
        })?;
        Ok(seen.len() as u64)
    }
}

fn profile_from_counts(
    spec: ResidualSpec,
    boundary: &[Var],
    counts: BTreeMap<Vec<i64>, u64>,
) -> BoundaryProfile {
    if boundary.is_empty() {
        let value = counts.values().copied().next().unwrap_or(0);
        return BoundaryProfile {
            spec,
            value,
            witness: None,
        };
    }
    let mut best: Option<(&Vec<i64>, u64)> = None;
    for (key, &c) in &counts {
        // BTreeMap iterates keys ascending, so the first strict improvement
        // is the lexicographically smallest witness.
        if best.map(|(_, b)| c > b).unwrap_or(true) {
            best = Some((key, c));
        }
    }
    match best {
        None => BoundaryProfile {
            spec,
            value: 0,
            witness: None,
        },
        Some((key, value)) => BoundaryProfile {
            spec,
            value,
            witness: Some(boundary.iter().copied().zip(key.iter().copied()).collect()),
        },
    }
}

/// T_E for a full CQ without predicates: join the kept atoms, group by the
/// boundary, take the maximum group size.
pub fn compute_te(
    q: &Query,
    inst: &Instance,
    keep: &BTreeSet<usize>,
    limits: &EngineLimits,
) -> Result<BoundaryProfile> {
    let spec = q.residual_spec(keep);
    if keep.is_empty() {
        return Ok(BoundaryProfile {
            spec,
            value: 1,
            witness: None,
        });
    }
    let boundary: Vec<Var> = spec.boundary.iter().copied().collect();
    let atoms: Vec<usize> = keep.iter().copied().collect();
    let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    scan_join(q, inst, &atoms, &[], limits, &mut |row| {
        let key: Vec<i64> = boundary.iter().map(|&v| row[v].unwrap()).collect();
        *counts.entry(key).or_insert(0) += 1;
        Ok(())
    })?;
    Ok(profile_from_counts(spec, &boundary, counts))
}

/// Projected T_E: group sizes count DISTINCT projections of the residual
/// rows onto the kept output variables. An empty kept output set fixes the
/// value to 1 by convention.
pub fn compute_te_projected(
    q: &Query,
    inst: &Instance,
    keep: &BTreeSet<usize>,
    limits: &EngineLimits,
) -> Result<BoundaryProfile> {
    let spec = q.residual_spec(keep);
    if keep.is_empty() || spec.output_vars.is_empty() {
        return Ok(BoundaryProfile {
            spec,
            value: 1,
            witness: None,
        });
    }
    let boundary: Vec<Var> = spec.boundary.iter().copied().collect();
    let out: Vec<Var> = spec.output_vars.iter().copied().collect();
    let atoms: Vec<usize> = keep.iter().copied().collect();
    let mut groups: BTreeMap<Vec<i64>, HashSet<Vec<i64>>> = BTreeMap::new();
    scan_join(q, inst, &atoms, &[], limits, &mut |row| {
        let key: Vec<i64> = boundary.iter().map(|&v| row[v].unwrap()).collect();
        let proj: Vec<i64> = out.iter().map(|&v| row[v].unwrap()).collect();
        groups.entry(key).or_default().insert(proj);
        Ok(())
    })?;
    let counts: BTreeMap<Vec<i64>, u64> = groups
        .into_iter()
        .map(|(k, s)| (k, s.len() as u64))
        .collect();
    Ok(profile_from_counts(spec, &boundary, counts))
}

/// Active-plus-filler integer domain for boundary2 maximization: the active
/// values of all predicate columns and predicate constants, at most
/// `2 * kappa` smallest fillers inserted per gap, and one sentinel on each
/// side standing in for arbitrarily small/large integers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentedDomain {
    pub values: Vec<i64>,
}

pub const NEG_SENTINEL: i64 = i64::MIN;
pub const POS_SENTINEL: i64 = i64::MAX;

impl AugmentedDomain {
    /// Active values only (no sentinels, no fillers).
    pub fn actives(q: &Query, inst: &Instance) -> Result<Vec<i64>> {
        check_schema(q, inst)?;
        let pred_vars: BTreeSet<Var> = q.predicates().iter().flat_map(|p| p.vars()).collect();
        let mut values: BTreeSet<i64> = q.constants().into_iter().collect();
        for atom in q.atoms() {
            let rel = inst.relation(&atom.relation).unwrap();
            for (p, v) in atom.vars.iter().enumerate() {
                if !pred_vars.contains(v) {
                    continue;
                }
                for t in &rel.tuples {
                    if Dictionary::is_code(t[p]) {
                        return Err(Error::Data(format!(
                            "non-integer value in predicate column {} of {}",
                            p, atom.relation
                        )));
                    }
                    values.insert(t[p]);
                }
            }
        }
        Ok(values.into_iter().collect())
    }
}

pub fn build_augmented_domain(q: &Query, inst: &Instance) -> Result<AugmentedDomain> {
    let actives = AugmentedDomain::actives(q, inst)?;
    let kappa = q.predicates().len() as i64;
    let mut values: BTreeSet<i64> = actives.iter().copied().collect();
    for w in actives.windows(2) {
        let (a, b) = (w[0], w[1]);
        let gap = (b - a - 1).max(0);
        for f in 1..=gap.min(2 * kappa) {
            values.insert(a + f);
        }
    }
    values.insert(NEG_SENTINEL);
    values.insert(POS_SENTINEL);
    Ok(AugmentedDomain {
        values: values.into_iter().collect(),
    })
}

/// Comparison-mode T_E with an explicit boundary2 search domain. Exposed so
/// tests can compare the augmented domain against restricted or widened ones.
pub fn compute_te_comparison_over(
    q: &Query,
    inst: &Instance,
    keep: &BTreeSet<usize>,
    t2_domain: &[i64],
    limits: &EngineLimits,
) -> Result<BoundaryProfile> {
    for p in q.predicates() {
        if !p.is_binary() {
            return Err(Error::Unsupported(
                "comparison mode requires binary predicates only".into(),
            ));
        }
    }
    let spec = q.residual_spec(keep);
    if keep.is_empty() {
        return Ok(BoundaryProfile {
            spec,
            value: 1,
            witness: None,
        });
    }
    let projected = !q.is_full();
    if projected && spec.output_vars.is_empty() {
        return Ok(BoundaryProfile {
            spec,
            value: 1,
            witness: None,
        });
    }
    let boundary: Vec<Var> = spec.boundary.iter().copied().collect();
    let free: Vec<Var> = spec.boundary2.iter().copied().collect();
    let out: Vec<Var> = spec.output_vars.iter().copied().collect();
    let atoms: Vec<usize> = keep.iter().copied().collect();

    let (core_preds, free_preds): (Vec<&Predicate>, Vec<&Predicate>) = q
        .predicates()
        .iter()
        .partition(|p| p.vars().iter().all(|v| spec.core_vars.contains(v)));
    for p in &free_preds {
        for v in p.vars() {
            if !spec.core_vars.contains(&v) && !spec.boundary2.contains(&v) {
                return Err(Error::Internal(
                    "predicate variable outside core and boundary2".into(),
                ));
            }
        }
    }

    // Materialize core rows once (with core-local predicates applied).
    let mut rows: Vec<(Vec<i64>, Vec<i64>, Vec<i64>)> = Vec::new(); // (key, row vars, projection)
    scan_join(q, inst, &atoms, &core_preds, limits, &mut |row| {
        let key: Vec<i64> = boundary.iter().map(|&v| row[v].unwrap()).collect();
        let vals: Vec<i64> = (0..q.var_count())
            .map(|v| row.get(v).and_then(|x| *x).unwrap_or(0))
            .collect();
        let proj: Vec<i64> = out.iter().map(|&v| row[v].unwrap()).collect();
        rows.push((key, vals, proj));
        Ok(())
    })?;

    if free.is_empty() {
        // Predicates with boundary2 variables but rho = 0 cannot exist here.
        let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
        let mut sets: BTreeMap<Vec<i64>, HashSet<Vec<i64>>> = BTreeMap::new();
        for (key, _, proj) in rows {
            if projected {
                sets.entry(key).or_default().insert(proj);
            } else {
                *counts.entry(key).or_insert(0) += 1;
            }
        }
        if projected {
            counts = sets.into_iter().map(|(k, s)| (k, s.len() as u64)).collect();
        }
        return Ok(profile_from_counts(spec, &boundary, counts));
    }

    let total = (t2_domain.len() as u64).checked_pow(free.len() as u32);
    match total {
        Some(t) if t <= limits.t2_cap => {}
        _ => {
            return Err(Error::Guard(format!(
                "boundary2 search space {}^{} exceeds cap {}",
                t2_domain.len(),
                free.len(),
                limits.t2_cap
            )))
        }
    }

    let mut best: Option<(u64, Option<Vec<(Var, i64)>>)> = None;
    let mut t2_idx = vec![0usize; free.len()];
    loop {
        let t2: Vec<i64> = t2_idx.iter().map(|&i| t2_domain[i]).collect();
        let mut counts: BTreeMap<&Vec<i64>, u64> = BTreeMap::new();
        let mut sets: BTreeMap<&Vec<i64>, HashSet<&Vec<i64>>> = BTreeMap::new();
        for (key, vals, proj) in &rows {
            let lookup = |v: Var| -> i64 {
                match free.iter().position(|&f| f == v) {
                    Some(i) => t2[i],
                    None => vals[v],
                }
            };
            if free_preds.iter().all(|p| p.eval(&lookup)) {
                if projected {
                    sets.entry(key).or_default().insert(proj);
                } else {
                    *counts.entry(key).or_insert(0) += 1;
                }
            }
        }
        let iter: Vec<(&Vec<i64>, u64)> = if projected {
            sets.into_iter().map(|(k, s)| (k, s.len() as u64)).collect()
        } else {
            counts.into_iter().collect()
        };
        for (key, c) in iter {
            let better = match &best {
                None => c > 0,
                Some((b, w)) => {
                    c > *b
                        || (c == *b
                            && !boundary.is_empty()
                            && w.as_ref()
                                .map(|w| {
                                    let wk: Vec<i64> = w.iter().map(|&(_, x)| x).collect();
                                    *key < wk
                                })
                                .unwrap_or(false))
                }
            };
            if better {
                let witness = if boundary.is_empty() {
                    None
                } else {
                    Some(boundary.iter().copied().zip(key.iter().copied()).collect())
                };
                best = Some((c, witness));
            }
        }
        // Advance the mixed-radix counter over t2_domain^rho.
        let mut i = 0;
        loop {
            if i == t2_idx.len() {
                let (value, witness) = best.unwrap_or((0, None));
                return Ok(BoundaryProfile {
                    spec,
                    value,
                    witness,
                });
            }
            t2_idx[i] += 1;
            if t2_idx[i] < t2_domain.len() {
                break;
            }
            t2_idx[i] = 0;
            i += 1;
        }
    }
}

/// Grounded constraint terms handed to a satisfiability checker: free
/// variables are boundary2 variables, indexed densely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum CTerm {
    Const(i64),
    Free(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Constraint {
    pub kind: crate::query::PredKind,
    pub lhs: CTerm,
    pub rhs: CTerm,
}

/// A general predicate grounded on a row but still containing free variables.
#[derive(Clone)]
pub struct GroundedGeneral {
    pub name: String,
    pub args: Vec<CTerm>,
    pub func: std::sync::Arc<dyn Fn(&[i64]) -> bool + Send + Sync>,
}

pub struct SatProblem {
    pub n_free: usize,
    pub constraints: Vec<Constraint>,
    pub general: Vec<GroundedGeneral>,
}

pub trait SatChecker {
    fn is_satisfiable(&self, problem: &SatProblem) -> Result<bool>;
}

/// Bundled checker for conjunctions of integer `<`, `<=`, `!=` constraints:
/// difference-constraint feasibility via Bellman-Ford, with `!=` handled by
/// branching on the two strict orderings.
pub struct DifferenceConstraintChecker;

impl DifferenceConstraintChecker {
    fn feasible(n_free: usize, edges: &[(usize, usize, i64)]) -> bool {
        // Node 0 is the zero reference; free var f is node f + 1.
        // Edge (y, x, c) encodes value(x) - value(y) <= c.
        let n = n_free + 1;
        let mut dist = vec![0i64; n];
        for _ in 0..n {
            let mut changed = false;
            for &(y, x, c) in edges {
                if dist[y].saturating_add(c) < dist[x] {
                    dist[x] = dist[y].saturating_add(c);
                    changed = true;
                }
            }
            if !changed {
                return true;
            }
        }
        false
    }
}

impl SatChecker for DifferenceConstraintChecker {
    fn is_satisfiable(&self, problem: &SatProblem) -> Result<bool> {
        use crate::query::PredKind;
        if !problem.general.is_empty() {
            return Err(Error::Unsupported(
                "no satisfiability checker registered for general predicates with free variables"
                    .into(),
            ));
        }
        let mut edges: Vec<(usize, usize, i64)> = Vec::new();
        let mut nes: BTreeSet<(CTerm, CTerm)> = BTreeSet::new();
        // value(x) - value(y) <= c for `x <= y + c`-shaped facts.
        let push = |edges: &mut Vec<(usize, usize, i64)>, lhs: CTerm, rhs: CTerm, slack: i64| -> Option<bool> {
            // Encodes lhs <= rhs + slack.
            match (lhs, rhs) {
                (CTerm::Const(a), CTerm::Const(b)) => Some(a <= b + slack),
                (CTerm::Free(f), CTerm::Const(c)) => {
                    edges.push((0, f + 1, c + slack));
                    None
                }
                (CTerm::Const(c), CTerm::Free(f)) => {
                    edges.push((f + 1, 0, slack - c));
                    None
                }
                (CTerm::Free(a), CTerm::Free(b)) => {
                    edges.push((b + 1, a + 1, slack));
                    None
                }
            }
        };
        for c in &problem.constraints {
            let verdict = match c.kind {
                PredKind::Le => push(&mut edges, c.lhs, c.rhs, 0),
                PredKind::Lt => push(&mut edges, c.lhs, c.rhs, -1),
                PredKind::Ne => {
                    match (c.lhs, c.rhs) {
                        (CTerm::Const(a), CTerm::Const(b)) => Some(a != b),
                        (l, r) => {
                            let (a, b) = if l <= r { (l, r) } else { (r, l) };
                            if a == b {
                                Some(false) // x != x
                            } else {
                                nes.insert((a, b));
                                None
                            }
                        }
                    }
                }
            };
            if verdict == Some(false) {
                return Ok(false);
            }
        }
        let nes: Vec<(CTerm, CTerm)> = nes.into_iter().collect();
        if nes.len() > 20 {
            return Err(Error::Guard(format!(
                "too many distinct != constraints to branch over: {}",
                nes.len()
            )));
        }
        for mask in 0u64..(1u64 << nes.len()) {
            let mut branch = edges.clone();
            let mut dead = false;
            for (i, &(a, b)) in nes.iter().enumerate() {
                let (l, r) = if mask >> i & 1 == 1 { (a, b) } else { (b, a) };
                if push(&mut branch, l, r, -1) == Some(false) {
                    dead = true;
                    break;
                }
            }
            if !dead && Self::feasible(problem.n_free, &branch) {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

/// T_E for queries with predicates, dispatching on `mode`. Uses the bundled
/// difference-constraint checker in general mode; see
/// [`compute_te_general_with_checker`] to supply another.
pub fn compute_te_with_predicates(
    q: &Query,
    inst: &Instance,
    keep: &BTreeSet<usize>,
    mode: TeMode,
    limits: &EngineLimits,
) -> Result<BoundaryProfile> {
    match mode {
        TeMode::InequalityOnly => {
            use crate::query::PredKind;
            for p in q.predicates() {
                if !matches!(p, Predicate::Binary { kind: PredKind::Ne, .. }) {
                    return Err(Error::Unsupported(
                        "inequality-only mode requires all predicates to be !=".into(),
                    ));
                }
            }
            compute_te_inequality_only(q, inst, keep, limits)
        }
        TeMode::Comparison => {
            let dom = build_augmented_domain(q, inst)?;
            compute_te_comparison_over(q, inst, keep, &dom.values, limits)
        }
        TeMode::General => {
            compute_te_general_with_checker(q, inst, keep, &DifferenceConstraintChecker, limits)
        }
    }
}

fn compute_te_inequality_only(
    q: &Query,
    inst: &Instance,
    keep: &BTreeSet<usize>,
    limits: &EngineLimits,
) -> Result<BoundaryProfile> {
    let spec = q.residual_spec(keep);
    if keep.is_empty() {
        return Ok(BoundaryProfile {
            spec,
            value: 1,
            witness: None,
        });
    }
    let projected = !q.is_full();
    if projected && spec.output_vars.is_empty() {
        return Ok(BoundaryProfile {
            spec,
            value: 1,
            witness: None,
        });
    }
    // != predicates touching a free boundary2 variable are always
    // satisfiable over the integers and drop out; the rest filter the core.
    let core_preds: Vec<&Predicate> = q
        .predicates()
        .iter()
        .filter(|p| p.vars().iter().all(|v| spec.core_vars.contains(v)))
        .collect();
    let boundary: Vec<Var> = spec.boundary.iter().copied().collect();
    let out: Vec<Var> = spec.output_vars.iter().copied().collect();
    let atoms: Vec<usize> = keep.iter().copied().collect();
    let mut counts: BTreeMap<Vec<i64>, u64> = BTreeMap::new();
    let mut sets: BTreeMap<Vec<i64>, HashSet<Vec<i64>>> = BTreeMap::new();
    scan_join(q, inst, &atoms, &core_preds, limits, &mut |row| {
        let key: Vec<i64> = boundary.iter().map(|&v| row[v].unwrap()).collect();
        if projected {
            let proj: Vec<i64> = out.iter().map(|&v| row[v].unwrap()).collect();
            sets.entry(key).or_default().insert(proj);
        } else {
            *counts.entry(key).or_insert(0) += 1;
        }
        Ok(())
    })?;
    if projected {
        counts = sets.into_iter().map(|(k, s)| (k, s.len() as u64)).collect();
    }
    Ok(profile_from_counts(spec, &boundary, counts))
}

/// General-predicate T_E: enumerate subsets B of each boundary group of the
/// core result in decreasing size and return the largest satisfiable one
/// (largest distinct projection when the query is non-full). Exponential by
/// design and guarded accordingly.
pub fn compute_te_general_with_checker(
    q: &Query,
    inst: &Instance,
    keep: &BTreeSet<usize>,
    checker: &dyn SatChecker,
    limits: &EngineLimits,
) -> Result<BoundaryProfile> {
    let spec = q.residual_spec(keep);
    if keep.is_empty() {
        return Ok(BoundaryProfile {
            spec,
            value: 1,
            witness: None,
        });
    }
    let projected = !q.is_full();
    if projected && spec.output_vars.is_empty() {
        return Ok(BoundaryProfile {
            spec,
            value: 1,
            witness: None,
        });
    }
    let boundary: Vec<Var> = spec.boundary.iter().copied().collect();
    let free: Vec<Var> = spec.boundary2.iter().copied().collect();
    let out: Vec<Var> = spec.output_vars.iter().copied().collect();
    let atoms: Vec<usize> = keep.iter().copied().collect();
    let (core_preds, free_preds): (Vec<&Predicate>, Vec<&Predicate>) = q
        .predicates()
        .iter()
        .partition(|p| p.vars().iter().all(|v| spec.core_vars.contains(v)));

    let mut groups: BTreeMap<Vec<i64>, Vec<Vec<i64>>> = BTreeMap::new();
    let mut nrows = 0usize;
    scan_join(q, inst, &atoms, &core_preds, limits, &mut |row| {
        nrows += 1;
        if nrows > limits.general_cap {
            return Err(Error::Guard(format!(
                "core result exceeds the general-predicate cap of {} rows",
                limits.general_cap
            )));
        }
        let key: Vec<i64> = boundary.iter().map(|&v| row[v].unwrap()).collect();
        let vals: Vec<i64> = (0..q.var_count())
            .map(|v| row.get(v).and_then(|x| *x).unwrap_or(0))
            .collect();
        groups.entry(key).or_default().push(vals);
        Ok(())
    })?;

    let ground = |rows: &[&Vec<i64>]| -> Result<Option<SatProblem>> {
        let mut problem = SatProblem {
            n_free: free.len(),
            constraints: Vec::new(),
            general: Vec::new(),
        };
        for vals in rows {
            for p in &free_preds {
                match p {
                    Predicate::Binary { kind, lhs, rhs } => {
                        let term = |t: &Term| match t {
                            Term::Const(c) => CTerm::Const(*c),
                            Term::Var(v) => match free.iter().position(|f| f == v) {
                                Some(i) => CTerm::Free(i),
                                None => CTerm::Const(vals[*v]),
                            },
                        };
                        problem.constraints.push(Constraint {
                            kind: *kind,
                            lhs: term(lhs),
                            rhs: term(rhs),
                        });
                    }
                    Predicate::General(g) => {
                        let args: Vec<CTerm> = g
                            .vars
                            .iter()
                            .map(|v| match free.iter().position(|f| f == v) {
                                Some(i) => CTerm::Free(i),
                                None => CTerm::Const(vals[*v]),
                            })
                            .collect();
                        if args.iter().all(|a| matches!(a, CTerm::Const(_))) {
                            let vals: Vec<i64> = args
                                .iter()
                                .map(|a| match a {
                                    CTerm::Const(c) => *c,
                                    CTerm::Free(_) => unreachable!(),
                                })
                                .collect();
                            if !(g.func)(&vals) {
                                return Ok(None); // grounded conjunct false
                            }
                        } else {
                            problem.general.push(GroundedGeneral {
                                name: g.name.clone(),
                                args,
                                func: g.func.clone(),
                            });
                        }
                    }
                }
            }
        }
        problem.constraints.sort();
        problem.constraints.dedup();
        Ok(Some(problem))
    };

    let mut best: u64 = 0;
    let mut witness: Option<Vec<(Var, i64)>> = None;
    // Groups iterate in ascending key order and only strict improvements
    // replace the witness, so ties resolve to the smallest boundary tuple.
    for (key, rows) in &groups {
        let n = rows.len();
        let mut group_best = 0u64;
        'sizes: for size in (1..=n).rev() {
            if !projected && (size as u64) <= group_best {
                break;
            }
            let mut combo: Vec<usize> = (0..size).collect();
            loop {
                let chosen: Vec<&Vec<i64>> = combo.iter().map(|&i| &rows[i]).collect();
                let candidate = if projected {
                    let distinct: HashSet<Vec<i64>> = chosen
                        .iter()
                        .map(|vals| out.iter().map(|&v| vals[v]).collect())
                        .collect();
                    distinct.len() as u64
                } else {
                    size as u64
                };
                if candidate > group_best {
                    if let Some(problem) = ground(&chosen)? {
                        if checker.is_satisfiable(&problem)? {
                            group_best = candidate;
                            if !projected {
                                break 'sizes;
                            }
                        }
                    }
                }
                if !next_combination(&mut combo, n) {
                    break;
                }
            }
        }
        if group_best > best {
            best = group_best;
            witness = if boundary.is_empty() {
                None
            } else {
                Some(boundary.iter().copied().zip(key.iter().copied()).collect())
            };
        }
    }
    Ok(BoundaryProfile {
        spec,
        value: best,
        witness,
    })
}

/// Advance a k-combination of {0..n} in lexicographic order.
fn next_combination(combo: &mut [usize], n: usize) -> bool {
    let k = combo.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if combo[i] < n - k + i {
            combo[i] += 1;
            for j in i + 1..k {
                combo[j] = combo[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn lim() -> EngineLimits {
        EngineLimits::default()
    }

    fn edges(list: &[(i64, i64)]) -> Instance {
        let tuples: Vec<Vec<i64>> = list.iter().map(|&(a, b)| vec![a, b]).collect();
        let refs: Vec<&[i64]> = tuples.iter().map(|t| t.as_slice()).collect();
        Instance::from_tuples(&[("Edge", 2, &refs)])
    }

    fn triangle() -> Query {
        Query::parse("q() :- Edge(a,b), Edge(b,c), Edge(a,c); private Edge").unwrap()
    }

    fn keep(is: &[usize]) -> BTreeSet<usize> {
        is.iter().copied().collect()
    }

    #[test]
    fn eval_count_triangle() {
        let i = edges(&[(1, 2), (2, 3), (1, 3)]);
        assert_eq!(eval_count(&triangle(), &i, &lim()).unwrap(), 1);
        let q = Query::parse(
            "q() :- Edge(a,b), Edge(b,c), Edge(a,c), a != b, b != c, a != c; private Edge",
        )
        .unwrap();
        assert_eq!(eval_count(&q, &i, &lim()).unwrap(), 1);
    }

    #[test]
    fn eval_count_projection() {
        let q = Query::parse("q(x2) :- R1(x1), R2(x1,x2); private R1, R2").unwrap();
        let i = Instance::from_tuples(&[
            ("R1", 1, &[&[1i64][..]]),
            ("R2", 2, &[&[1i64, 5][..], &[1, 6], &[2, 7]]),
        ]);
        assert_eq!(eval_count(&q, &i, &lim()).unwrap(), 2);
    }

    #[test]
    fn eval_count_missing_relation_is_schema_error() {
        let q = triangle();
        let i = Instance::from_tuples(&[("Other", 2, &[])]);
        assert!(matches!(eval_count(&q, &i, &lim()), Err(Error::Schema(_))));
    }

    #[test]
    fn eval_count_work_guard() {
        let q = triangle();
        let mut list = Vec::new();
        for a in 0..6i64 {
            for b in 0..6i64 {
                list.push((a, b));
            }
        }
        let i = edges(&list);
        let tight = EngineLimits {
            max_work: 10,
            ..lim()
        };
        assert!(matches!(
            eval_count(&q, &i, &tight),
            Err(Error::Guard(_))
        ));
    }

    #[test]
    fn te_triangle_two_path() {
        let q = triangle();
        let i = edges(&[(1, 2), (2, 3), (1, 3)]);
        let p = compute_te(&q, &i, &keep(&[0, 1]), &lim()).unwrap();
        assert_eq!(p.value, 1);
        let a = q.var_id("a").unwrap();
        let c = q.var_id("c").unwrap();
        assert_eq!(p.witness, Some(vec![(a, 1), (c, 3)]));
    }

    #[test]
    fn te_keep_empty_is_one() {
        let q = triangle();
        let i = edges(&[(1, 2)]);
        let p = compute_te(&q, &i, &keep(&[]), &lim()).unwrap();
        assert_eq!(p.value, 1);
        assert!(p.witness.is_none());
    }

    #[test]
    fn te_star_degree() {
        let q = Query::parse("q() :- Edge(x1,x2), Edge(x1,x3); private Edge").unwrap();
        let i = edges(&[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        let p = compute_te(&q, &i, &keep(&[0]), &lim()).unwrap();
        assert_eq!(p.value, 5);
        let x1 = q.var_id("x1").unwrap();
        assert_eq!(p.witness, Some(vec![(x1, 0)]));
    }

    #[test]
    fn te_projected_example() {
        let q = Query::parse("q(x2) :- R1(x1), R2(x1,x2); private R1, R2").unwrap();
        let i = Instance::from_tuples(&[
            ("R1", 1, &[&[1i64][..]]),
            ("R2", 2, &[&[1i64, 5][..], &[1, 6], &[2, 7]]),
        ]);
        let p = compute_te_projected(&q, &i, &keep(&[1]), &lim()).unwrap();
        assert_eq!(p.value, 2);
        // Keeping only R1: output var x2 is not among kept vars -> 1.
        let p = compute_te_projected(&q, &i, &keep(&[0]), &lim()).unwrap();
        assert_eq!(p.value, 1);
    }

    #[test]
    fn te_projected_degenerates_to_full() {
        let q = triangle();
        let i = edges(&[(1, 2), (2, 3), (1, 3), (2, 4), (4, 3)]);
        for mask in 0u32..8 {
            let ks: BTreeSet<usize> = (0..3).filter(|i| mask >> i & 1 == 1).collect();
            let a = compute_te(&q, &i, &ks, &lim()).unwrap();
            let b = compute_te_projected(&q, &i, &ks, &lim()).unwrap();
            assert_eq!(a.value, b.value, "keep {ks:?}");
        }
    }

    #[test]
    fn te_monotone_in_instance_seed_5() {
        let q = triangle();
        let mut rng = StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let mut small = Vec::new();
            let mut big = Vec::new();
            for a in 1..=3i64 {
                for b in 1..=3i64 {
                    if rng.gen_bool(0.35) {
                        small.push((a, b));
                        big.push((a, b));
                    } else if rng.gen_bool(0.3) {
                        big.push((a, b));
                    }
                }
            }
            let si = edges(&small);
            let bi = edges(&big);
            for mask in 1u32..8 {
                let ks: BTreeSet<usize> = (0..3).filter(|i| mask >> i & 1 == 1).collect();
                let ts = compute_te(&q, &si, &ks, &lim()).unwrap().value;
                let tb = compute_te(&q, &bi, &ks, &lim()).unwrap().value;
                assert!(ts <= tb, "keep {ks:?}: {ts} > {tb}");
            }
        }
    }

    #[test]
    fn te_lipschitz_bound_seed_9() {
        // |T_E(I) - T_E(I')| bounded by sums of smaller residual multiplicities
        // weighted by per-logical-relation distances.
        let q = triangle();
        let mut rng = StdRng::seed_from_u64(9);
        for _ in 0..60 {
            let mut ea = Vec::new();
            let mut eb = Vec::new();
            for a in 1..=3i64 {
                for b in 1..=3i64 {
                    if rng.gen_bool(0.4) {
                        ea.push((a, b));
                    }
                    if rng.gen_bool(0.4) {
                        eb.push((a, b));
                    }
                }
            }
            let ia = edges(&ea);
            let ib = edges(&eb);
            // Same relation for all three atoms, so every logical distance
            // equals the physical relation distance.
            let d = crate::store::distance(&ia, &ib).unwrap();
            for mask in 1u32..8 {
                let e: Vec<usize> = (0..3).filter(|i| mask >> i & 1 == 1).collect();
                let eset: BTreeSet<usize> = e.iter().copied().collect();
                let ta = compute_te(&q, &ia, &eset, &lim()).unwrap().value as i64;
                let tb = compute_te(&q, &ib, &eset, &lim()).unwrap().value as i64;
                for (base, basename) in [(&ia, "I"), (&ib, "I2")] {
                    let mut rhs: i64 = 0;
                    for sub in 1u32..(1 << e.len()) {
                        let drop: Vec<usize> = e
                            .iter()
                            .enumerate()
                            .filter(|(j, _)| sub >> j & 1 == 1)
                            .map(|(_, &x)| x)
                            .collect();
                        let rest: BTreeSet<usize> =
                            e.iter().filter(|x| !drop.contains(x)).copied().collect();
                        let t = compute_te(&q, base, &rest, &lim()).unwrap().value as i64;
                        rhs += t * (d as i64).pow(drop.len() as u32);
                    }
                    assert!(
                        (ta - tb).abs() <= rhs,
                        "E {e:?} base {basename}: |{ta}-{tb}| > {rhs}"
                    );
                }
            }
        }
    }

    #[test]
    fn augmented_domain_examples() {
        // Z* = {0,10}, kappa = 1 -> two fillers after 0.
        let q = Query::parse("q() :- R(a,b), a < b; private R").unwrap();
        let i = Instance::from_tuples(&[("R", 2, &[&[0i64, 10][..]])]);
        let d = build_augmented_domain(&q, &i).unwrap();
        assert_eq!(d.values, vec![NEG_SENTINEL, 0, 1, 2, 10, POS_SENTINEL]);

        // Z* = {0,1} -> nothing fits in between.
        let i = Instance::from_tuples(&[("R", 2, &[&[0i64, 1][..]])]);
        let d = build_augmented_domain(&q, &i).unwrap();
        assert_eq!(d.values, vec![NEG_SENTINEL, 0, 1, POS_SENTINEL]);

        // Z* = {5}, kappa = 2 -> sentinels only.
        let q2 = Query::parse("q() :- R(a,b), a < b, a != b; private R").unwrap();
        let i = Instance::from_tuples(&[("R", 2, &[&[5i64, 5][..]])]);
        let d = build_augmented_domain(&q2, &i).unwrap();
        assert_eq!(d.values, vec![NEG_SENTINEL, 5, POS_SENTINEL]);
    }

    #[test]
    fn augmented_domain_rejects_dictionary_codes() {
        let q = Query::parse("q() :- R(a,b), a < b; private R").unwrap();
        let code = crate::store::DICT_BASE - 1;
        let i = Instance::from_tuples(&[("R", 2, &[&[code, 3][..]])]);
        assert!(matches!(
            build_augmented_domain(&q, &i),
            Err(Error::Data(_))
        ));
    }

    fn worked_example() -> (Query, Instance) {
        let q = Query::parse(
            "q() :- R1(x1,x2,x3), R2(x3,x4,x5), R3(x5,x6,x7), R4(x1,x7,x8), \
             x4 < x2, x2 < x8; private R1, R2, R3, R4",
        )
        .unwrap();
        let i = Instance::from_tuples(&[
            ("R1", 3, &[&[0i64, 3, 0][..], &[0, 5, 0]]),
            ("R2", 3, &[&[0i64, 1, 0][..], &[0, 2, 0], &[0, 3, 0]]),
            ("R3", 3, &[&[0i64, 0, 0][..]]),
            ("R4", 3, &[&[0i64, 0, 5][..], &[0, 0, 6], &[0, 0, 7]]),
        ]);
        (q, i)
    }

    #[test]
    fn comparison_optimum_between_active_values() {
        // Dropping the first atom leaves x2 free; the count 3*3 = 9 needs
        // x2 = 4, which lies strictly between the active values 3 and 5.
        let (q, i) = worked_example();
        let ks = keep(&[1, 2, 3]);
        let p = compute_te_with_predicates(&q, &i, &ks, TeMode::Comparison, &lim()).unwrap();
        assert_eq!(p.value, 9);
        let dom = build_augmented_domain(&q, &i).unwrap();
        assert!(dom.values.contains(&4));
        // Restricting the search to active values only is strictly worse.
        let actives = AugmentedDomain::actives(&q, &i).unwrap();
        assert!(!actives.contains(&4));
        let restricted =
            compute_te_comparison_over(&q, &i, &ks, &actives, &lim()).unwrap();
        assert!(restricted.value < p.value);
        assert_eq!(restricted.value, 6);
    }

    #[test]
    fn comparison_filler_values_interchangeable() {
        // Any boundary2 value inside the same active-domain gap produces the
        // same count: the order type against actives is all that matters.
        let (q, i) = worked_example();
        let ks = keep(&[1, 2, 3]);
        let mut by_gap_value = Vec::new();
        for x2 in [4i64] {
            let p = compute_te_comparison_over(&q, &i, &ks, &[x2], &lim()).unwrap();
            by_gap_value.push(p.value);
        }
        assert!(by_gap_value.iter().all(|&v| v == by_gap_value[0]));
        // Wider window search agrees with the augmented domain.
        let wide: Vec<i64> = (-20..30).collect();
        let wide_p = compute_te_comparison_over(&q, &i, &ks, &wide, &lim()).unwrap();
        let dom = build_augmented_domain(&q, &i).unwrap();
        let aug_p = compute_te_comparison_over(&q, &i, &ks, &dom.values, &lim()).unwrap();
        assert_eq!(wide_p.value, aug_p.value);
    }

    #[test]
    fn inequality_only_matches_general_and_comparison() {
        let q = Query::parse(
            "q() :- Edge(a,b), Edge(b,c), Edge(a,c), a != b, b != c, a != c; private Edge",
        )
        .unwrap();
        let i = edges(&[(1, 2), (2, 3), (1, 3), (3, 1), (2, 1), (1, 1)]);
        for mask in 0u32..8 {
            let ks: BTreeSet<usize> = (0..3).filter(|i| mask >> i & 1 == 1).collect();
            let a = compute_te_with_predicates(&q, &i, &ks, TeMode::InequalityOnly, &lim())
                .unwrap()
                .value;
            let b = compute_te_with_predicates(&q, &i, &ks, TeMode::Comparison, &lim())
                .unwrap()
                .value;
            let c = compute_te_with_predicates(&q, &i, &ks, TeMode::General, &lim())
                .unwrap()
                .value;
            assert_eq!(a, b, "keep {ks:?}");
            assert_eq!(a, c, "keep {ks:?}");
        }
    }

    #[test]
    fn always_false_general_predicate() {
        let mut q = triangle();
        q.add_general_predicate("never", &["a"], std::sync::Arc::new(|_| false))
            .unwrap();
        let i = edges(&[(1, 2), (2, 3), (1, 3)]);
        assert_eq!(eval_count(&q, &i, &lim()).unwrap(), 0);
        let p = compute_te_with_predicates(&q, &i, &keep(&[0, 1]), TeMode::General, &lim())
            .unwrap();
        assert_eq!(p.value, 0);
    }

    #[test]
    fn general_mode_guard_and_missing_checker() {
        let mut q = triangle();
        q.add_general_predicate("odd_c", &["c"], std::sync::Arc::new(|xs| xs[0] % 2 == 1))
            .unwrap();
        let i = edges(&[(1, 2), (2, 3), (1, 3)]);
        // Dropping atom 2 makes c free in the general predicate: the bundled
        // difference checker cannot decide it.
        let r = compute_te_with_predicates(&q, &i, &keep(&[0]), TeMode::General, &lim());
        assert!(matches!(r, Err(Error::Unsupported(_))), "{r:?}");
        // Tiny row cap trips the guard.
        let tight = EngineLimits {
            general_cap: 0,
            ..lim()
        };
        let r = compute_te_with_predicates(&q, &i, &keep(&[0, 1, 2]), TeMode::General, &tight);
        assert!(matches!(r, Err(Error::Guard(_))));
    }

    #[test]
    fn auto_mode_selection() {
        let q = Query::parse("q() :- R(a,b), a != b; private R").unwrap();
        assert_eq!(TeMode::auto(&q), TeMode::InequalityOnly);
        let q = Query::parse("q() :- R(a,b), a != b, a < 5; private R").unwrap();
        assert_eq!(TeMode::auto(&q), TeMode::Comparison);
        let mut q = Query::parse("q() :- R(a,b); private R").unwrap();
        q.add_general_predicate("p", &["a"], std::sync::Arc::new(|_| true))
            .unwrap();
        assert_eq!(TeMode::auto(&q), TeMode::General);
    }

    #[test]
    fn difference_checker_cases() {
        use crate::query::PredKind::*;
        let chk = DifferenceConstraintChecker;
        let sat = |cons: Vec<Constraint>, n_free: usize| {
            chk.is_satisfiable(&SatProblem {
                n_free,
                constraints: cons,
                general: vec![],
            })
            .unwrap()
        };
        let c = |kind, lhs, rhs| Constraint { kind, lhs, rhs };
        let f = CTerm::Free;
        let k = CTerm::Const;
        // x < y, y < x: unsat.
        assert!(!sat(vec![c(Lt, f(0), f(1)), c(Lt, f(1), f(0))], 2));
        // x < 5, 5 < x: unsat.
        assert!(!sat(vec![c(Lt, f(0), k(5)), c(Lt, k(5), f(0))], 1));
        // x != y alone: sat.
        assert!(sat(vec![c(Ne, f(0), f(1))], 2));
        // x <= 3, 3 <= x, x != 3: unsat (the != forces off the only point).
        assert!(!sat(
            vec![c(Le, f(0), k(3)), c(Le, k(3), f(0)), c(Ne, f(0), k(3))],
            1
        ));
        // 3 < x, x < 5, x != 4: unsat over the integers.
        assert!(!sat(
            vec![c(Lt, k(3), f(0)), c(Lt, f(0), k(5)), c(Ne, f(0), k(4))],
            1
        ));
        // 3 < x, x < 6, x != 4: sat (x = 5).
        assert!(sat(
            vec![c(Lt, k(3), f(0)), c(Lt, f(0), k(6)), c(Ne, f(0), k(4))],
            1
        ));
        // Chain x < y <= z with z < x + 1 is unsat.
        assert!(!sat(
            vec![c(Lt, f(0), f(1)), c(Le, f(1), f(2)), c(Le, f(2), f(0))],
            3
        ));
        // x != x: unsat.
        assert!(!sat(vec![c(Ne, f(0), f(0))], 1));
        // Constant facts.
        assert!(sat(vec![c(Lt, k(1), k(2))], 0));
        assert!(!sat(vec![c(Le, k(3), k(2))], 0));
    }
}
