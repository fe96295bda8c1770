//! Conjunctive-query model: atoms, self-join groups, predicates, projection,
//! and the residual-query boundary machinery.
//!
//! Variables are interned to dense ids. Atoms over the same relation are kept
//! consecutive, so each relation name owns a contiguous index range
//! (its group); a single physical edit touches every atom of a group at once.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::{Error, Result};

pub type Var = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub relation: String,
    pub vars: Vec<Var>,
}

/// One side of a binary predicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Var(Var),
    Const(i64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum PredKind {
    /// `!=`
    Ne,
    /// `<`
    Lt,
    /// `<=`
    Le,
}

/// Opaque predicate: an arbitrary computable boolean over some variables.
/// Cannot be written in query text; attached programmatically.
#[derive(Clone)]
pub struct GeneralPred {
    pub name: String,
    pub vars: Vec<Var>,
    pub func: Arc<dyn Fn(&[i64]) -> bool + Send + Sync>,
}

impl fmt::Debug for GeneralPred {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GeneralPred({} over {:?})", self.name, self.vars)
    }
}

#[derive(Debug, Clone)]
pub enum Predicate {
    Binary { kind: PredKind, lhs: Term, rhs: Term },
    General(GeneralPred),
}

impl Predicate {
    /// Distinct variables mentioned, ascending.
    pub fn vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        match self {
            Predicate::Binary { lhs, rhs, .. } => {
                for t in [lhs, rhs] {
                    if let Term::Var(v) = t {
                        out.insert(*v);
                    }
                }
            }
            Predicate::General(g) => out.extend(g.vars.iter().copied()),
        }
        out
    }

    pub fn constants(&self) -> Vec<i64> {
        match self {
            Predicate::Binary { lhs, rhs, .. } => [lhs, rhs]
                .iter()
                .filter_map(|t| match t {
                    Term::Const(c) => Some(*c),
                    Term::Var(_) => None,
                })
                .collect(),
            Predicate::General(_) => Vec::new(),
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self, Predicate::Binary { .. })
    }

    /// Evaluate with every variable bound through `lookup`.
    pub fn eval(&self, lookup: &dyn Fn(Var) -> i64) -> bool {
        match self {
            Predicate::Binary { kind, lhs, rhs } => {
                let get = |t: &Term| match t {
                    Term::Var(v) => lookup(*v),
                    Term::Const(c) => *c,
                };
                let (a, b) = (get(lhs), get(rhs));
                match kind {
                    PredKind::Ne => a != b,
                    PredKind::Lt => a < b,
                    PredKind::Le => a <= b,
                }
            }
            Predicate::General(g) => {
                let args: Vec<i64> = g.vars.iter().map(|v| lookup(*v)).collect();
                (g.func)(&args)
            }
        }
    }
}

/// Contiguous atom range over one relation name. `start..start + len` are the
/// atom indices of the group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Group {
    pub name: String,
    pub start: usize,
    pub len: usize,
}

impl Group {
    pub fn atoms(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Output {
    /// No projection: the result is the full set of satisfying assignments.
    Full,
    /// Count distinct projections onto this variable set.
    Project(BTreeSet<Var>),
}

/// Residual-query structure for a kept/dropped split of the atoms.
///
/// `boundary` is the set of variables shared between kept and dropped atoms
/// (identical from either side). `boundary2` adds variables that dropped
/// atoms share with predicates only; those are free during boundary
/// maximization because no kept atom constrains them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResidualSpec {
    pub keep: BTreeSet<usize>,
    pub drop: BTreeSet<usize>,
    pub boundary: BTreeSet<Var>,
    pub boundary2: BTreeSet<Var>,
    /// Variables of the kept atoms.
    pub core_vars: BTreeSet<Var>,
    /// Output variables restricted to the kept atoms.
    pub output_vars: BTreeSet<Var>,
}

impl ResidualSpec {
    /// Alias: the join-boundary half of the predicate-extended boundary.
    pub fn boundary1(&self) -> &BTreeSet<Var> {
        &self.boundary
    }

    /// Number of free boundary2 variables.
    pub fn rho(&self) -> usize {
        self.boundary2.len()
    }
}

#[derive(Debug, Clone)]
pub struct Query {
    var_names: Vec<String>,
    atoms: Vec<Atom>,
    groups: Vec<Group>,
    private_groups: BTreeSet<usize>,
    predicates: Vec<Predicate>,
    output: Output,
    warnings: Vec<String>,
}

impl Query {
    pub fn parse(text: &str) -> Result<Query> {
        parse::parse(text)
    }

    /// Number of atoms (logical relations).
    pub fn n(&self) -> usize {
        self.atoms.len()
    }

    /// Number of groups (physical relations).
    pub fn m(&self) -> usize {
        self.groups.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Atom {
        &self.atoms[i]
    }

    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    pub fn group_of_atom(&self, atom: usize) -> usize {
        self.groups
            .iter()
            .position(|g| g.atoms().contains(&atom))
            .expect("atom index in range")
    }

    /// Indices of private groups (subset of 0..m).
    pub fn private_groups(&self) -> &BTreeSet<usize> {
        &self.private_groups
    }

    /// Atom indices belonging to private groups.
    pub fn private_atoms(&self) -> BTreeSet<usize> {
        self.private_groups
            .iter()
            .flat_map(|&g| self.groups[g].atoms())
            .collect()
    }

    pub fn n_p(&self) -> usize {
        self.private_atoms().len()
    }

    pub fn m_p(&self) -> usize {
        self.private_groups.len()
    }

    pub fn is_private_atom(&self, atom: usize) -> bool {
        self.private_groups.contains(&self.group_of_atom(atom))
    }

    pub fn var_count(&self) -> usize {
        self.var_names.len()
    }

    pub fn var_name(&self, v: Var) -> &str {
        &self.var_names[v]
    }

    pub fn var_id(&self, name: &str) -> Option<Var> {
        self.var_names.iter().position(|n| n == name)
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn has_predicates(&self) -> bool {
        !self.predicates.is_empty()
    }

    /// Attach an opaque predicate over named variables.
    pub fn add_general_predicate(
        &mut self,
        name: &str,
        var_names: &[&str],
        func: Arc<dyn Fn(&[i64]) -> bool + Send + Sync>,
    ) -> Result<()> {
        let mut vars = Vec::new();
        for vn in var_names {
            let v = self.var_id(vn).ok_or_else(|| Error::Parse {
                pos: 0,
                msg: format!("predicate {name} over unknown variable {vn}"),
            })?;
            vars.push(v);
        }
        self.predicates.push(Predicate::General(GeneralPred {
            name: name.to_string(),
            vars,
            func,
        }));
        Ok(())
    }

    pub fn output(&self) -> &Output {
        &self.output
    }

    pub fn is_full(&self) -> bool {
        matches!(self.output, Output::Full)
    }

    /// Output variables; for a full query, all variables.
    pub fn output_vars(&self) -> BTreeSet<Var> {
        match &self.output {
            Output::Full => (0..self.var_count()).collect(),
            Output::Project(o) => o.clone(),
        }
    }

    /// Integer constants appearing in predicates.
    pub fn constants(&self) -> BTreeSet<i64> {
        self.predicates
            .iter()
            .flat_map(|p| p.constants())
            .collect()
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn max_group_size(&self) -> usize {
        self.groups.iter().map(|g| g.len).max().unwrap_or(0)
    }

    fn vars_of_atoms(&self, set: &BTreeSet<usize>) -> BTreeSet<Var> {
        set.iter()
            .flat_map(|&i| self.atoms[i].vars.iter().copied())
            .collect()
    }

    /// Residual structure for keeping exactly the atoms in `keep`.
    pub fn residual_spec(&self, keep: &BTreeSet<usize>) -> ResidualSpec {
        let drop: BTreeSet<usize> = (0..self.n()).filter(|i| !keep.contains(i)).collect();
        let kept_vars = self.vars_of_atoms(keep);
        let dropped_vars = self.vars_of_atoms(&drop);
        let boundary: BTreeSet<Var> =
            kept_vars.intersection(&dropped_vars).copied().collect();
        let pred_vars: BTreeSet<Var> =
            self.predicates.iter().flat_map(|p| p.vars()).collect();
        let boundary2: BTreeSet<Var> = dropped_vars
            .intersection(&pred_vars)
            .filter(|v| !boundary.contains(v))
            .copied()
            .collect();
        let output_vars: BTreeSet<Var> = self
            .output_vars()
            .intersection(&kept_vars)
            .copied()
            .collect();
        ResidualSpec {
            keep: keep.clone(),
            drop,
            boundary,
            boundary2,
            core_vars: kept_vars,
            output_vars,
        }
    }

    /// All (private group i, nonempty E subset of D_i) pairs, duplicate-free.
    /// These index the terms of the residual-sensitivity sum.
    pub fn enumerate_private_subsets(&self) -> Vec<(usize, BTreeSet<usize>)> {
        let mut out = Vec::new();
        for &g in &self.private_groups {
            let atoms: Vec<usize> = self.groups[g].atoms().collect();
            for mask in 1u64..(1u64 << atoms.len()) {
                let subset: BTreeSet<usize> = atoms
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| mask >> b & 1 == 1)
                    .map(|(_, &a)| a)
                    .collect();
                out.push((g, subset));
            }
        }
        out
    }

    /// Text form that reparses to a structurally identical query. General
    /// predicates have no text form and are omitted.
    pub fn pretty(&self) -> String {
        let mut s = String::from("q(");
        if let Output::Project(o) = &self.output {
            let names: Vec<&str> = o.iter().map(|&v| self.var_name(v)).collect();
            s.push_str(&names.join(", "));
        }
        s.push_str(") :- ");
        let mut parts: Vec<String> = self
            .atoms
            .iter()
            .map(|a| {
                let vs: Vec<&str> = a.vars.iter().map(|&v| self.var_name(v)).collect();
                format!("{}({})", a.relation, vs.join(", "))
            })
            .collect();
        for p in &self.predicates {
            if let Predicate::Binary { kind, lhs, rhs } = p {
                let t = |t: &Term| match t {
                    Term::Var(v) => self.var_name(*v).to_string(),
                    Term::Const(c) => c.to_string(),
                };
                let op = match kind {
                    PredKind::Ne => "!=",
                    PredKind::Lt => "<",
                    PredKind::Le => "<=",
                };
                parts.push(format!("{} {} {}", t(lhs), op, t(rhs)));
            }
        }
        s.push_str(&parts.join(", "));
        if !self.private_groups.is_empty() {
            let names: Vec<&str> = self
                .private_groups
                .iter()
                .map(|&g| self.groups[g].name.as_str())
                .collect();
            s.push_str("; private ");
            s.push_str(&names.join(", "));
        }
        s
    }
}

mod parse {
    use super::*;

    #[derive(Debug, Clone, PartialEq)]
    enum Tok {
        Ident(String),
        Int(i64),
        LParen,
        RParen,
        Comma,
        Semi,
        ColonDash,
        Ne,
        Lt,
        Le,
    }

    fn lex(text: &str) -> Result<Vec<(usize, Tok)>> {
        let bytes = text.as_bytes();
        let mut toks = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_whitespace() {
                i += 1;
            } else if c == '#' {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = i;
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                toks.push((start, Tok::Ident(text[start..i].to_string())));
            } else if c.is_ascii_digit()
                || (c == '-' && i + 1 < bytes.len() && (bytes[i + 1] as char).is_ascii_digit())
            {
                let start = i;
                i += 1;
                while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                    i += 1;
                }
                let v: i64 = text[start..i].parse().map_err(|_| Error::Parse {
                    pos: start,
                    msg: format!("integer literal out of range: {}", &text[start..i]),
                })?;
                toks.push((start, Tok::Int(v)));
            } else {
                let two = text.get(i..i + 2).unwrap_or("");
                match two {
                    ":-" => {
                        toks.push((i, Tok::ColonDash));
                        i += 2;
                    }
                    "!=" => {
                        toks.push((i, Tok::Ne));
                        i += 2;
                    }
                    "<=" => {
                        toks.push((i, Tok::Le));
                        i += 2;
                    }
                    _ => {
                        let tok = match c {
                            '(' => Tok::LParen,
                            ')' => Tok::RParen,
                            ',' => Tok::Comma,
                            ';' => Tok::Semi,
                            '<' => Tok::Lt,
                            _ => {
                                return Err(Error::Parse {
                                    pos: i,
                                    msg: format!("unexpected character {c:?}"),
                                })
                            }
                        };
                        toks.push((i, tok));
                        i += 1;
                    }
                }
            }
        }
        Ok(toks)
    }

    struct Cursor {
        toks: Vec<(usize, Tok)>,
        at: usize,
        end: usize,
    }

    impl Cursor {
        fn peek(&self) -> Option<&Tok> {
            self.toks.get(self.at).map(|(_, t)| t)
        }

        fn pos(&self) -> usize {
            self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
        }

        fn next(&mut self) -> Option<Tok> {
            let t = self.toks.get(self.at).map(|(_, t)| t.clone());
            if t.is_some() {
                self.at += 1;
            }
            t
        }

        fn expect(&mut self, want: &Tok, what: &str) -> Result<()> {
            let pos = self.pos();
            match self.next() {
                Some(t) if t == *want => Ok(()),
                other => Err(Error::Parse {
                    pos,
                    msg: format!("expected {what}, found {other:?}"),
                }),
            }
        }

        fn ident(&mut self, what: &str) -> Result<String> {
            let pos = self.pos();
            match self.next() {
                Some(Tok::Ident(s)) => Ok(s),
                other => Err(Error::Parse {
                    pos,
                    msg: format!("expected {what}, found {other:?}"),
                }),
            }
        }
    }

    /// Raw body item before variable resolution.
    enum Item {
        Atom { name: String, vars: Vec<String> },
        Pred { kind: PredKind, lhs: String, rhs: RawTerm, pos: usize },
    }

    enum RawTerm {
        Var(String),
        Const(i64),
    }

    pub fn parse(text: &str) -> Result<Query> {
        let toks = lex(text)?;
        let mut c = Cursor {
            toks,
            at: 0,
            end: text.len(),
        };

        c.ident("head relation name")?;
        c.expect(&Tok::LParen, "'('")?;
        let mut head_vars = Vec::new();
        if c.peek() != Some(&Tok::RParen) {
            loop {
                head_vars.push(c.ident("head variable")?);
                match c.peek() {
                    Some(Tok::Comma) => {
                        c.next();
                    }
                    _ => break,
                }
            }
        }
        c.expect(&Tok::RParen, "')'")?;
        c.expect(&Tok::ColonDash, "':-'")?;

        let mut items = Vec::new();
        loop {
            let pos = c.pos();
            let name = c.ident("atom or predicate")?;
            match c.peek() {
                Some(Tok::LParen) => {
                    c.next();
                    let mut vars = Vec::new();
                    if c.peek() != Some(&Tok::RParen) {
                        loop {
                            vars.push(c.ident("atom variable")?);
                            match c.peek() {
                                Some(Tok::Comma) => {
                                    c.next();
                                }
                                _ => break,
                            }
                        }
                    }
                    c.expect(&Tok::RParen, "')'")?;
                    items.push(Item::Atom { name, vars });
                }
                Some(Tok::Ne) | Some(Tok::Lt) | Some(Tok::Le) => {
                    let kind = match c.next().unwrap() {
                        Tok::Ne => PredKind::Ne,
                        Tok::Lt => PredKind::Lt,
                        Tok::Le => PredKind::Le,
                        _ => unreachable!(),
                    };
                    let rpos = c.pos();
                    let rhs = match c.next() {
                        Some(Tok::Ident(s)) => RawTerm::Var(s),
                        Some(Tok::Int(v)) => RawTerm::Const(v),
                        other => {
                            return Err(Error::Parse {
                                pos: rpos,
                                msg: format!(
                                    "expected variable or integer, found {other:?}"
                                ),
                            })
                        }
                    };
                    items.push(Item::Pred {
                        kind,
                        lhs: name,
                        rhs,
                        pos,
                    });
                }
                other => {
                    return Err(Error::Parse {
                        pos: c.pos(),
                        msg: format!(
                            "expected '(' or comparison operator after {name:?}, found {other:?}"
                        ),
                    })
                }
            }
            match c.peek() {
                Some(Tok::Comma) => {
                    c.next();
                }
                _ => break,
            }
        }

        let mut private_names = Vec::new();
        if c.peek() == Some(&Tok::Semi) {
            c.next();
            let kw_pos = c.pos();
            let kw = c.ident("'private'")?;
            if kw != "private" {
                return Err(Error::Parse {
                    pos: kw_pos,
                    msg: format!("expected 'private', found {kw:?}"),
                });
            }
            loop {
                private_names.push(c.ident("relation name")?);
                match c.peek() {
                    Some(Tok::Comma) => {
                        c.next();
                    }
                    _ => break,
                }
            }
        }
        if let Some(t) = c.peek() {
            return Err(Error::Parse {
                pos: c.pos(),
                msg: format!("trailing input: {t:?}"),
            });
        }

        build(text.len(), head_vars, items, private_names)
    }

    fn build(
        end: usize,
        head_vars: Vec<String>,
        items: Vec<Item>,
        private_names: Vec<String>,
    ) -> Result<Query> {
        // Reorder atoms so same-name atoms are consecutive, preserving
        // first-occurrence order of names and relative order within a name.
        let mut name_order: Vec<String> = Vec::new();
        for it in &items {
            if let Item::Atom { name, .. } = it {
                if !name_order.contains(name) {
                    name_order.push(name.clone());
                }
            }
        }
        if name_order.is_empty() {
            return Err(Error::Parse {
                pos: end,
                msg: "query body has no atoms".into(),
            });
        }

        let mut var_names: Vec<String> = Vec::new();
        let intern = |name: &str, var_names: &mut Vec<String>| -> Var {
            match var_names.iter().position(|n| n == name) {
                Some(v) => v,
                None => {
                    var_names.push(name.to_string());
                    var_names.len() - 1
                }
            }
        };

        let mut atoms: Vec<Atom> = Vec::new();
        let mut groups: Vec<Group> = Vec::new();
        for rel in &name_order {
            let start = atoms.len();
            let mut arity: Option<usize> = None;
            for it in &items {
                if let Item::Atom { name, vars } = it {
                    if name != rel {
                        continue;
                    }
                    match arity {
                        None => arity = Some(vars.len()),
                        Some(a) if a != vars.len() => {
                            return Err(Error::Parse {
                                pos: end,
                                msg: format!(
                                    "arity mismatch for relation {rel}: {a} vs {}",
                                    vars.len()
                                ),
                            })
                        }
                        _ => {}
                    }
                    let ids: Vec<Var> =
                        vars.iter().map(|v| intern(v, &mut var_names)).collect();
                    if atoms[start..].iter().any(|a| a.vars == ids) {
                        return Err(Error::Parse {
                            pos: end,
                            msg: format!(
                                "redundant atom: {rel} appears twice with identical variables"
                            ),
                        });
                    }
                    atoms.push(Atom {
                        relation: rel.clone(),
                        vars: ids,
                    });
                }
            }
            groups.push(Group {
                name: rel.clone(),
                start,
                len: atoms.len() - start,
            });
        }

        let mut predicates = Vec::new();
        for it in &items {
            if let Item::Pred { kind, lhs, rhs, pos } = it {
                let resolve = |name: &str| -> Result<Var> {
                    var_names.iter().position(|n| n == name).ok_or_else(|| {
                        Error::Parse {
                            pos: *pos,
                            msg: format!("predicate over unknown variable {name}"),
                        }
                    })
                };
                let l = Term::Var(resolve(lhs)?);
                let r = match rhs {
                    RawTerm::Var(name) => Term::Var(resolve(name)?),
                    RawTerm::Const(c) => Term::Const(*c),
                };
                predicates.push(Predicate::Binary {
                    kind: *kind,
                    lhs: l,
                    rhs: r,
                });
            }
        }

        let mut head_ids = BTreeSet::new();
        for hv in &head_vars {
            let v = var_names.iter().position(|n| n == hv).ok_or_else(|| {
                Error::Parse {
                    pos: end,
                    msg: format!("head variable {hv} does not appear in the body"),
                }
            })?;
            head_ids.insert(v);
        }
        // Empty head or a head listing every body variable is a full CQ.
        let output = if head_ids.is_empty() || head_ids.len() == var_names.len() {
            Output::Full
        } else {
            Output::Project(head_ids)
        };

        let mut private_groups = BTreeSet::new();
        for pn in &private_names {
            let g = groups.iter().position(|g| &g.name == pn).ok_or_else(|| {
                Error::Parse {
                    pos: end,
                    msg: format!("private clause names unknown relation {pn}"),
                }
            })?;
            private_groups.insert(g);
        }
        let mut warnings = Vec::new();
        if private_groups.is_empty() {
            warnings
                .push("no private relations declared: the query has zero sensitivity".into());
        }

        Ok(Query {
            var_names,
            atoms,
            groups,
            private_groups,
            predicates,
            output,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triangle() -> Query {
        Query::parse(
            "q() :- Edge(a,b), Edge(b,c), Edge(a,c); private Edge",
        )
        .unwrap()
    }

    #[test]
    fn parse_triangle_structure() {
        let q = triangle();
        assert_eq!(q.n(), 3);
        assert_eq!(q.m(), 1);
        assert_eq!(q.groups()[0].atoms(), 0..3);
        assert_eq!(q.private_groups().iter().copied().collect::<Vec<_>>(), [0]);
        assert_eq!(q.n_p(), 3);
        assert_eq!(q.m_p(), 1);
        assert!(q.is_full());
        assert!(q.warnings().is_empty());
    }

    #[test]
    fn parse_projection() {
        let q = Query::parse("q(x2) :- R1(x1), R2(x1,x2); private R1, R2").unwrap();
        assert!(!q.is_full());
        assert_eq!(q.n(), 2);
        assert_eq!(q.m(), 2);
        let o = q.output_vars();
        assert_eq!(o.len(), 1);
        assert!(o.contains(&q.var_id("x2").unwrap()));
    }

    #[test]
    fn duplicate_atom_rejected() {
        let err = Query::parse("q() :- R(a,b), R(a,b)").unwrap_err();
        assert!(err.to_string().contains("redundant"), "{err}");
    }

    #[test]
    fn arity_mismatch_rejected() {
        assert!(Query::parse("q() :- R(a,b), R(a)").is_err());
    }

    #[test]
    fn unknown_predicate_variable_rejected() {
        let err = Query::parse("q() :- R(a,b), a < z").unwrap_err();
        assert!(err.to_string().contains("unknown variable"), "{err}");
    }

    #[test]
    fn missing_private_clause_warns() {
        let q = Query::parse("q() :- R(a,b)").unwrap();
        assert_eq!(q.warnings().len(), 1);
        assert_eq!(q.m_p(), 0);
    }

    #[test]
    fn head_listing_all_vars_is_full() {
        let q = Query::parse("q(a,b) :- R(a,b); private R").unwrap();
        assert!(q.is_full());
    }

    #[test]
    fn same_name_atoms_made_consecutive() {
        let q = Query::parse("q() :- R(a), S(a,b), R(b); private R").unwrap();
        assert_eq!(q.atoms()[0].relation, "R");
        assert_eq!(q.atoms()[1].relation, "R");
        assert_eq!(q.atoms()[2].relation, "S");
        assert_eq!(q.groups().len(), 2);
    }

    #[test]
    fn comments_and_constants() {
        let q = Query::parse(
            "q() :- R(a,b), a != b, b < 10, a <= -3 # trailing comment\n; private R",
        )
        .unwrap();
        assert_eq!(q.predicates().len(), 3);
        assert_eq!(q.constants().iter().copied().collect::<Vec<_>>(), [-3, 10]);
    }

    #[test]
    fn pretty_round_trip() {
        for text in [
            "q() :- Edge(a,b), Edge(b,c), Edge(a,c), a != c; private Edge",
            "q(x2) :- R1(x1), R2(x1,x2), x2 <= 7; private R1, R2",
            "q() :- R(a), S(a,b), R(b), a < b; private R, S",
        ] {
            let q = Query::parse(text).unwrap();
            let q2 = Query::parse(&q.pretty()).unwrap();
            assert_eq!(q.pretty(), q2.pretty());
            assert_eq!(q.n(), q2.n());
            assert_eq!(q.atoms(), q2.atoms());
            assert_eq!(q.output(), q2.output());
        }
    }

    #[test]
    fn triangle_boundary() {
        let q = triangle();
        let keep: BTreeSet<usize> = [0, 1].into_iter().collect();
        let spec = q.residual_spec(&keep);
        let a = q.var_id("a").unwrap();
        let c = q.var_id("c").unwrap();
        assert_eq!(spec.boundary, [a, c].into_iter().collect());
        assert!(spec.boundary2.is_empty());
    }

    #[test]
    fn keep_empty_boundary_empty() {
        let q = triangle();
        let spec = q.residual_spec(&BTreeSet::new());
        assert!(spec.boundary.is_empty());
        assert!(spec.core_vars.is_empty());
    }

    #[test]
    fn chain_with_predicates_boundary_split() {
        // Dropping the first atom: join boundary {x1, x3}; x2 only survives
        // through the two comparison predicates, so it lands in boundary2.
        let q = Query::parse(
            "q() :- R1(x1,x2,x3), R2(x3,x4,x5), R3(x5,x6,x7), R4(x1,x7,x8), \
             x4 < x2, x2 < x8; private R1, R2, R3, R4",
        )
        .unwrap();
        let keep: BTreeSet<usize> = [1, 2, 3].into_iter().collect();
        let spec = q.residual_spec(&keep);
        let v = |n: &str| q.var_id(n).unwrap();
        assert_eq!(spec.boundary, [v("x1"), v("x3")].into_iter().collect());
        assert_eq!(spec.boundary2, [v("x2")].into_iter().collect());
        assert_eq!(spec.rho(), 1);
    }

    #[test]
    fn boundary_symmetry() {
        let q = Query::parse(
            "q() :- R(a,b), R(b,c), S(c,d), S(d,a), T(b,d); private R, S",
        )
        .unwrap();
        for mask in 0u32..(1 << q.n()) {
            let keep: BTreeSet<usize> =
                (0..q.n()).filter(|i| mask >> i & 1 == 1).collect();
            let comp: BTreeSet<usize> =
                (0..q.n()).filter(|i| !keep.contains(i)).collect();
            assert_eq!(
                q.residual_spec(&keep).boundary,
                q.residual_spec(&comp).boundary
            );
        }
    }

    #[test]
    fn private_subset_counts() {
        assert_eq!(triangle().enumerate_private_subsets().len(), 7);
        let q = Query::parse("q() :- R(a), S(a); private R, S").unwrap();
        assert_eq!(q.enumerate_private_subsets().len(), 2);
        let q = Query::parse("q() :- R(a), S(a)").unwrap();
        assert!(q.enumerate_private_subsets().is_empty());
    }

    #[test]
    fn general_predicate_attaches_and_evaluates() {
        let mut q = Query::parse("q() :- R(a,b); private R").unwrap();
        q.add_general_predicate("sum_even", &["a", "b"], Arc::new(|xs| (xs[0] + xs[1]) % 2 == 0))
            .unwrap();
        assert_eq!(q.predicates().len(), 1);
        let a = q.var_id("a").unwrap();
        let lookup = move |v: Var| if v == a { 1 } else { 3 };
        assert!(q.predicates()[0].eval(&lookup));
        assert!(q
            .add_general_predicate("bad", &["zz"], Arc::new(|_| true))
            .is_err());
    }
}
