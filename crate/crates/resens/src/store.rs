//! Physical instances: relations as tuple sets, dictionary encoding of raw
//! tokens, file ingestion, instance distance, and the neighbor enumeration
//! backing the brute-force oracles.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::sync::Arc;

use crate::oracle::OracleGuard;
use crate::query::Query;
use crate::{Error, Result};

/// Codes below this value are dictionary codes for non-integer tokens;
/// everything at or above is a raw integer value. Comparison predicates
/// therefore act on raw integer values, never on dictionary codes.
pub const DICT_BASE: i64 = i64::MIN / 2;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionary {
    tokens: Vec<String>,
}

impl Dictionary {
    /// Encode a raw token: integer tokens map to themselves, anything else
    /// gets a code below [`DICT_BASE`].
    pub fn encode(&mut self, token: &str) -> Result<i64> {
        if let Ok(v) = token.parse::<i64>() {
            if v <= DICT_BASE {
                return Err(Error::Data(format!(
                    "integer value {v} collides with the dictionary code range"
                )));
            }
            return Ok(v);
        }
        let idx = match self.tokens.iter().position(|t| t == token) {
            Some(i) => i,
            None => {
                self.tokens.push(token.to_string());
                self.tokens.len() - 1
            }
        };
        Ok(DICT_BASE - idx as i64)
    }

    /// Decode back to a display token.
    pub fn decode(&self, value: i64) -> String {
        if Self::is_code(value) {
            let idx = (DICT_BASE - value) as usize;
            self.tokens
                .get(idx)
                .cloned()
                .unwrap_or_else(|| format!("<code {value}>"))
        } else {
            value.to_string()
        }
    }

    pub fn is_code(value: i64) -> bool {
        value <= DICT_BASE
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub name: String,
    pub arity: usize,
    pub tuples: BTreeSet<Vec<i64>>,
}

impl Relation {
    pub fn new(name: &str, arity: usize) -> Relation {
        Relation {
            name: name.to_string(),
            arity,
            tuples: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    /// Whitespace-separated integer fields, `#` comments (SNAP-compatible).
    EdgeList,
    /// Comma- or tab-separated fields, optional header line.
    Delimited { has_header: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadStats {
    pub rows_read: usize,
    pub distinct: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Instance {
    relations: BTreeMap<String, Relation>,
    dictionary: Arc<Dictionary>,
}

impl Instance {
    pub fn new() -> Instance {
        Instance::default()
    }

    /// Build from (name, tuples) lists; integer data only.
    pub fn from_tuples(rels: &[(&str, usize, &[&[i64]])]) -> Instance {
        let mut inst = Instance::new();
        for (name, arity, tuples) in rels {
            let mut r = Relation::new(name, *arity);
            for t in *tuples {
                assert_eq!(t.len(), *arity);
                r.tuples.insert(t.to_vec());
            }
            inst.relations.insert(name.to_string(), r);
        }
        inst
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name)
    }

    pub fn relation_mut(&mut self, name: &str) -> Option<&mut Relation> {
        self.relations.get_mut(name)
    }

    pub fn add_relation(&mut self, rel: Relation) {
        self.relations.insert(rel.name.clone(), rel);
    }

    pub fn ensure_relation(&mut self, name: &str, arity: usize) {
        self.relations
            .entry(name.to_string())
            .or_insert_with(|| Relation::new(name, arity));
    }

    pub fn dictionary(&self) -> &Dictionary {
        &self.dictionary
    }

    /// Total tuple count N across all relations.
    pub fn total_tuples(&self) -> usize {
        self.relations.values().map(|r| r.len()).sum()
    }

    /// All values appearing anywhere in the instance.
    pub fn active_domain(&self) -> BTreeSet<i64> {
        self.relations
            .values()
            .flat_map(|r| r.tuples.iter().flatten().copied())
            .collect()
    }

    /// Canonical content key (ignores the dictionary), used for dedup.
    pub fn canon_key(&self) -> Vec<(String, Vec<Vec<i64>>)> {
        self.relations
            .iter()
            .map(|(n, r)| (n.clone(), r.tuples.iter().cloned().collect()))
            .collect()
    }

    /// Ingest a file into (or over) the named relation.
    pub fn load_relation(
        &mut self,
        path: &Path,
        format: Format,
        name: &str,
        arity: usize,
    ) -> Result<LoadStats> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::Data(format!("cannot open {}: {e}", path.display())))?;
        let reader = BufReader::new(file);
        let mut rel = Relation::new(name, arity);
        let dict = Arc::make_mut(&mut self.dictionary);
        let mut rows_read = 0usize;
        let mut first_data_line = true;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = match line.find('#') {
                Some(i) => &line[..i],
                None => &line[..],
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = match format {
                Format::EdgeList => line.split_whitespace().collect(),
                Format::Delimited { has_header } => {
                    let fs: Vec<&str> = if line.contains('\t') {
                        line.split('\t').map(str::trim).collect()
                    } else {
                        line.split(',').map(str::trim).collect()
                    };
                    if has_header && first_data_line {
                        first_data_line = false;
                        if fs.len() != arity {
                            return Err(Error::Data(format!(
                                "{}:{}: header has {} fields, expected {arity}",
                                path.display(),
                                lineno + 1,
                                fs.len()
                            )));
                        }
                        continue;
                    }
                    fs
                }
            };
            first_data_line = false;
            if fields.len() != arity {
                return Err(Error::Data(format!(
                    "{}:{}: malformed row: {} fields, expected {arity}",
                    path.display(),
                    lineno + 1,
                    fields.len()
                )));
            }
            let mut tuple = Vec::with_capacity(arity);
            for f in &fields {
                match format {
                    Format::EdgeList => {
                        let v: i64 = f.parse().map_err(|_| {
                            Error::Data(format!(
                                "{}:{}: non-integer field {f:?} in edge list",
                                path.display(),
                                lineno + 1
                            ))
                        })?;
                        if v <= DICT_BASE {
                            return Err(Error::Data(format!(
                                "{}:{}: value {v} collides with the dictionary code range",
                                path.display(),
                                lineno + 1
                            )));
                        }
                        tuple.push(v);
                    }
                    Format::Delimited { .. } => tuple.push(dict.encode(f)?),
                }
            }
            rows_read += 1;
            rel.tuples.insert(tuple);
        }
        let distinct = rel.len();
        self.relations.insert(name.to_string(), rel);
        Ok(LoadStats {
            rows_read,
            distinct,
        })
    }
}

/// Edit distance between instances: per relation, deletions and insertions
/// pair up into substitutions, so the cost is max(|A\B|, |B\A|).
pub fn distance(a: &Instance, b: &Instance) -> Result<u64> {
    let names_a: BTreeSet<(&str, usize)> = a
        .relations()
        .map(|r| (r.name.as_str(), r.arity))
        .collect();
    let names_b: BTreeSet<(&str, usize)> = b
        .relations()
        .map(|r| (r.name.as_str(), r.arity))
        .collect();
    if names_a != names_b {
        return Err(Error::Schema(format!(
            "instances have different schemas: {names_a:?} vs {names_b:?}"
        )));
    }
    let mut total = 0u64;
    for ra in a.relations() {
        let rb = b.relation(&ra.name).unwrap();
        let only_a = ra.tuples.difference(&rb.tuples).count() as u64;
        let only_b = rb.tuples.difference(&ra.tuples).count() as u64;
        total += only_a.max(only_b);
    }
    Ok(total)
}

/// Sum of per-atom (logical) distances; at least the physical distance, and
/// strictly larger when self-joins replicate one physical edit.
pub fn logical_distance(q: &Query, a: &Instance, b: &Instance) -> Result<u64> {
    let mut total = 0u64;
    for atom in q.atoms() {
        let ra = a
            .relation(&atom.relation)
            .ok_or_else(|| Error::Schema(format!("missing relation {}", atom.relation)))?;
        let rb = b
            .relation(&atom.relation)
            .ok_or_else(|| Error::Schema(format!("missing relation {}", atom.relation)))?;
        let only_a = ra.tuples.difference(&rb.tuples).count() as u64;
        let only_b = rb.tuples.difference(&ra.tuples).count() as u64;
        total += only_a.max(only_b);
    }
    Ok(total)
}

/// Enumeration domain for neighbor edits: active domain of instance and
/// query constants, plus `k` fresh values. Fresh values are interchangeable
/// for counting queries; one per edit realizes any isomorphism class.
pub fn edit_domain(i: &Instance, q: &Query, k: usize) -> Vec<i64> {
    let mut dom = i.active_domain();
    dom.extend(q.constants());
    let start = dom.iter().next_back().copied().unwrap_or(0).max(0) + 1;
    for f in 0..k as i64 {
        dom.insert(start + f);
    }
    dom.into_iter().collect()
}

/// All instances at distance at most `k` from `i`, editing only private
/// physical relations. Guarded: refuses (never truncates) oversized inputs.
pub fn enumerate_neighbors(
    i: &Instance,
    q: &Query,
    k: usize,
    guard: &OracleGuard,
) -> Result<Vec<Instance>> {
    if k > guard.max_k {
        return Err(Error::Guard(format!(
            "neighbor enumeration distance {k} exceeds cap {}",
            guard.max_k
        )));
    }
    if i.total_tuples() > guard.max_tuples {
        return Err(Error::Guard(format!(
            "instance has {} tuples, cap is {}",
            i.total_tuples(),
            guard.max_tuples
        )));
    }
    let dom = edit_domain(i, q, k);
    if dom.len() > guard.max_domain {
        return Err(Error::Guard(format!(
            "enumeration domain has {} values, cap is {}",
            dom.len(),
            guard.max_domain
        )));
    }
    let private: BTreeSet<&str> = q
        .private_groups()
        .iter()
        .map(|&g| q.groups()[g].name.as_str())
        .collect();

    let mut seen: HashSet<Vec<(String, Vec<Vec<i64>>)>> = HashSet::new();
    let mut out = Vec::new();
    let mut frontier = vec![i.clone()];
    seen.insert(i.canon_key());
    out.push(i.clone());
    for _ in 0..k {
        let mut next = Vec::new();
        for inst in &frontier {
            for edited in single_edits(inst, &private, &dom) {
                let key = edited.canon_key();
                if seen.insert(key) {
                    out.push(edited.clone());
                    next.push(edited);
                }
            }
        }
        frontier = next;
    }
    Ok(out)
}

/// All single-edit variants (insert, delete, substitute) of private relations.
pub(crate) fn single_edits(inst: &Instance, private: &BTreeSet<&str>, dom: &[i64]) -> Vec<Instance> {
    let mut out = Vec::new();
    for rel in inst.relations() {
        if !private.contains(rel.name.as_str()) {
            continue;
        }
        let candidates = all_tuples(dom, rel.arity);
        // Deletions.
        for t in &rel.tuples {
            let mut e = inst.clone();
            e.relation_mut(&rel.name).unwrap().tuples.remove(t);
            out.push(e);
        }
        // Insertions.
        for c in &candidates {
            if rel.tuples.contains(c) {
                continue;
            }
            let mut e = inst.clone();
            e.relation_mut(&rel.name)
                .unwrap()
                .tuples
                .insert(c.clone());
            out.push(e);
        }
        // Substitutions (one delete paired with one insert, cost 1).
        for t in &rel.tuples {
            for c in &candidates {
                if rel.tuples.contains(c) {
                    continue;
                }
                let mut e = inst.clone();
                let r = e.relation_mut(&rel.name).unwrap();
                r.tuples.remove(t);
                r.tuples.insert(c.clone());
                out.push(e);
            }
        }
    }
    out
}

fn all_tuples(dom: &[i64], arity: usize) -> Vec<Vec<i64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..arity {
        let mut next = Vec::with_capacity(out.len() * dom.len());
        for t in &out {
            for &v in dom {
                let mut t2 = t.clone();
                t2.push(v);
                next.push(t2);
            }
        }
        out = next;
    }
    out
}

/// All valid distance vectors for budget `k`: zero on public positions,
/// copy-consistent within each group, private group budgets summing to `k`.
pub fn valid_distance_vectors(q: &Query, k: u64) -> Vec<Vec<u64>> {
    let privates: Vec<usize> = q.private_groups().iter().copied().collect();
    let mut out = Vec::new();
    if privates.is_empty() {
        if k == 0 {
            out.push(vec![0; q.n()]);
        }
        return out;
    }
    let mut budgets = vec![0u64; privates.len()];
    compositions(k, 0, &mut budgets, &mut |budgets| {
        let mut s = vec![0u64; q.n()];
        for (gi, &g) in privates.iter().enumerate() {
            for a in q.groups()[g].atoms() {
                s[a] = budgets[gi];
            }
        }
        out.push(s);
    });
    out
}

fn compositions(rest: u64, idx: usize, buf: &mut Vec<u64>, emit: &mut impl FnMut(&Vec<u64>)) {
    if idx + 1 == buf.len() {
        buf[idx] = rest;
        emit(buf);
        return;
    }
    for v in 0..=rest {
        buf[idx] = v;
        compositions(rest - v, idx + 1, buf, emit);
    }
}
