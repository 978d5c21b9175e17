//! Merged, name-indexed view of one or more [`SpecUnit`]s, with the
//! conformance (subtype) relation between constructs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use indexmap::IndexMap;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::spec_lang::{
    Condition, ConstructDef, FixExpr, NodeExpr, Pattern, SpecUnit, SyntaxRule, Template, Term,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("construct `{0}` is already defined")]
    ConstructRedefined(String),
    #[error("pattern `{0}` is already defined")]
    PatternRedefined(String),
    #[error("syntax for `{0}` in language `{1}` is already defined")]
    SyntaxRedefined(String, String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Diagnostic {
    /// Construct or pattern the diagnostic is about.
    pub name: String,
    pub message: String,
    pub severity: Severity,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev}: {}: {}", self.name, self.message)
    }
}

#[derive(Debug, Clone, Default)]
pub struct Registry {
    constructs: IndexMap<String, ConstructDef>,
    syntaxes: IndexMap<(String, String), SyntaxRule>,
    patterns: IndexMap<String, Pattern>,
    /// Reflexive-transitive ancestors of each construct.
    ancestors: BTreeMap<String, BTreeSet<String>>,
}

/// Merges units in order. Later units may add syntax rules and patterns for
/// constructs defined earlier but may not redefine any name.
pub fn build_registry(units: &[SpecUnit]) -> Result<Registry, RegistryError> {
    let mut reg = Registry::default();
    for unit in units {
        for c in &unit.constructs {
            if reg.constructs.contains_key(&c.name) {
                return Err(RegistryError::ConstructRedefined(c.name.clone()));
            }
            reg.constructs.insert(c.name.clone(), c.clone());
        }
        for s in &unit.syntaxes {
            let key = (s.construct.clone(), s.language.clone());
            if reg.syntaxes.contains_key(&key) {
                return Err(RegistryError::SyntaxRedefined(key.0, key.1));
            }
            reg.syntaxes.insert(key, s.clone());
        }
        for p in &unit.patterns {
            if reg.patterns.contains_key(&p.name) {
                return Err(RegistryError::PatternRedefined(p.name.clone()));
            }
            reg.patterns.insert(p.name.clone(), p.clone());
        }
    }
    reg.ancestors = reg
        .constructs
        .keys()
        .map(|name| (name.clone(), reg.closure(name)))
        .collect();
    Ok(reg)
}

impl Registry {
    fn closure(&self, start: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        let mut stack = vec![start.to_string()];
        while let Some(n) = stack.pop() {
            if !seen.insert(n.clone()) {
                continue;
            }
            if let Some(c) = self.constructs.get(&n) {
                stack.extend(c.parents.iter().cloned());
            }
        }
        seen
    }

    pub fn construct(&self, name: &str) -> Option<&ConstructDef> {
        self.constructs.get(name)
    }

    pub fn constructs(&self) -> impl Iterator<Item = &ConstructDef> {
        self.constructs.values()
    }

    pub fn pattern(&self, name: &str) -> Option<&Pattern> {
        self.patterns.get(name)
    }

    /// Patterns in registration order.
    pub fn patterns(&self) -> impl Iterator<Item = &Pattern> {
        self.patterns.values()
    }

    pub fn syntax(&self, construct: &str, language: &str) -> Option<&SyntaxRule> {
        self.syntaxes
            .get(&(construct.to_string(), language.to_ascii_lowercase()))
    }

    pub fn syntaxes(&self) -> impl Iterator<Item = &SyntaxRule> {
        self.syntaxes.values()
    }

    pub fn is_atom(&self, construct: &str) -> bool {
        self.constructs.get(construct).is_some_and(|c| c.is_atom)
    }

    /// `true` when `sub` is `sup` or inherits from it, directly or not.
    pub fn conforms(&self, sub: &str, sup: &str) -> bool {
        sub == sup
            || self
                .ancestors
                .get(sub)
                .is_some_and(|set| set.contains(sup))
    }

    /// Hash of the construct definitions, identifying which tree shapes the
    /// registry accepts.
    pub fn fingerprint(&self) -> String {
        let mut names: Vec<&ConstructDef> = self.constructs.values().collect();
        names.sort_by(|a, b| a.name.cmp(&b.name));
        let mut hasher = Sha256::new();
        for c in names {
            hasher.update(c.name.as_bytes());
            hasher.update([u8::from(c.is_atom)]);
            for p in &c.parents {
                hasher.update(b"<");
                hasher.update(p.as_bytes());
            }
            for f in &c.fields {
                hasher.update(b"|");
                hasher.update(f.name.as_bytes());
                hasher.update(b":");
                hasher.update(f.ty.as_bytes());
                hasher.update([u8::from(f.is_list())]);
            }
            hasher.update(b";");
        }
        hasher
            .finalize()
            .iter()
            .take(8)
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// Checks every registry invariant. Returns an empty list when the registry
/// is consistent; diagnostics are sorted by name then message.
pub fn validate_registry(reg: &Registry) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut err = |name: &str, message: String| {
        out.push(Diagnostic {
            name: name.to_string(),
            message,
            severity: Severity::Error,
        })
    };

    for c in reg.constructs.values() {
        for p in &c.parents {
            if reg.construct(p).is_none() {
                err(&c.name, format!("unknown construct {p}"));
            }
        }
        for f in &c.fields {
            if reg.construct(&f.ty).is_none() {
                err(&c.name, format!("unknown construct {}", f.ty));
            }
        }
    }

    for cycle in conformance_cycles(reg) {
        let name = cycle[0].clone();
        let mut path = cycle.clone();
        path.push(cycle[0].clone());
        err(&name, format!("conformance cycle {}", path.join(" -> ")));
    }

    for s in reg.syntaxes.values() {
        let Some(c) = reg.construct(&s.construct) else {
            err(
                &s.construct,
                format!("syntax rule for `{}` names an unknown construct", s.language),
            );
            continue;
        };
        check_template(c, &s.language, &s.template, &mut err);
    }

    for p in reg.patterns.values() {
        check_pattern(reg, p, &mut err);
    }

    out.sort();
    out.dedup();
    out
}

/// Each cycle is reported once, rotated to start at its smallest name.
fn conformance_cycles(reg: &Registry) -> Vec<Vec<String>> {
    let mut cycles = BTreeSet::new();
    for start in reg.constructs.keys() {
        // DFS looking for a path back to `start` through names >= start, so
        // every cycle is found exactly from its minimum element.
        let mut stack: Vec<(String, Vec<String>)> = vec![(start.clone(), vec![start.clone()])];
        while let Some((node, path)) = stack.pop() {
            let Some(c) = reg.construct(&node) else {
                continue;
            };
            for p in &c.parents {
                if p == start {
                    cycles.insert(path.clone());
                } else if p > start && !path.contains(p) {
                    let mut next = path.clone();
                    next.push(p.clone());
                    stack.push((p.clone(), next));
                }
            }
        }
    }
    cycles.into_iter().collect()
}

fn check_template(
    c: &ConstructDef,
    language: &str,
    t: &Template,
    err: &mut impl FnMut(&str, String),
) {
    match t {
        Template::Literal(_) => {}
        Template::Field(f) => {
            if !(c.is_atom && f == "value") && c.field(f).is_none() {
                err(
                    &c.name,
                    format!("syntax for {language} references unknown field `{f}`"),
                );
            }
        }
        Template::Join { field, .. } => match c.field(field) {
            Some(fd) if fd.is_list() => {}
            Some(_) => err(
                &c.name,
                format!("syntax for {language} joins single field `{field}`"),
            ),
            None => err(
                &c.name,
                format!("syntax for {language} references unknown field `{field}`"),
            ),
        },
        Template::Cond {
            guard,
            then,
            otherwise,
        } => {
            use crate::spec_lang::GuardSubject;
            match (&guard.subject, c.field(guard.field())) {
                (_, None) => err(
                    &c.name,
                    format!(
                        "syntax for {language} guard references unknown field `{}`",
                        guard.field()
                    ),
                ),
                (GuardSubject::Count(f), Some(fd)) if !fd.is_list() => err(
                    &c.name,
                    format!("syntax for {language} guard uses `.count` on single field `{f}`"),
                ),
                (GuardSubject::Value(f), Some(fd)) if fd.is_list() => err(
                    &c.name,
                    format!("syntax for {language} guard uses `.value` on list field `{f}`"),
                ),
                _ => {}
            }
            check_template(c, language, then, err);
            check_template(c, language, otherwise, err);
        }
        Template::Seq(parts) => parts
            .iter()
            .for_each(|p| check_template(c, language, p, err)),
    }
}

/// Static knowledge about a term: `Some(ty, is_list)` when the construct is
/// known, `None` when it can only be decided at match time.
type Shape = Option<(String, bool)>;

fn check_pattern(reg: &Registry, p: &Pattern, err: &mut impl FnMut(&str, String)) {
    let name = p.name.as_str();
    let mut declared = BTreeSet::new();
    for b in std::iter::once(&p.subject).chain(&p.metavars) {
        if !declared.insert(b.name.as_str()) {
            err(name, format!("name `{}` is declared twice", b.name));
        }
        if reg.construct(&b.construct).is_none() {
            err(name, format!("unknown construct {}", b.construct));
        }
    }

    fn term_shape(
        reg: &Registry,
        p: &Pattern,
        t: &Term,
        err: &mut impl FnMut(&str, String),
    ) -> Shape {
        match t {
            Term::Var(v) => match p.type_of(v) {
                Some(ty) => Some((ty.to_string(), false)),
                None => {
                    err(&p.name, format!("undeclared name `{v}`"));
                    None
                }
            },
            Term::Field(inner, f) => {
                let (ty, is_list) = term_shape(reg, p, inner, err)?;
                if is_list {
                    err(&p.name, format!("field access `.{f}` on a list"));
                    return None;
                }
                let c = reg.construct(&ty)?;
                match c.field(f) {
                    Some(fd) => Some((fd.ty.clone(), fd.is_list())),
                    None => {
                        err(&p.name, format!("construct {ty} has no field `{f}`"));
                        None
                    }
                }
            }
            Term::Count(inner) => {
                if let Some((_, false)) = term_shape(reg, p, inner, err) {
                    err(&p.name, "`.count` applied to a single node".to_string());
                }
                None
            }
            Term::Index(inner) | Term::Value(inner) | Term::Parent(inner) => {
                term_shape(reg, p, inner, err);
                None
            }
            Term::Descendants(inner) => {
                term_shape(reg, p, inner, err);
                None
            }
            Term::Lit(_) => None,
        }
    }

    fn check_condition(
        reg: &Registry,
        p: &Pattern,
        c: &Condition,
        err: &mut impl FnMut(&str, String),
    ) {
        match c {
            Condition::Compare { lhs, rhs, .. } => {
                term_shape(reg, p, lhs, err);
                term_shape(reg, p, rhs, err);
            }
            Condition::Member {
                element,
                collection,
            } => {
                term_shape(reg, p, element, err);
                if let Some((_, false)) = term_shape(reg, p, collection, err) {
                    err(&p.name, "membership test against a single node".to_string());
                }
            }
            Condition::Is { term, construct } => {
                term_shape(reg, p, term, err);
                if reg.construct(construct).is_none() {
                    err(&p.name, format!("unknown construct {construct}"));
                }
            }
            Condition::Not(inner) => inner
                .iter()
                .for_each(|c| check_condition(reg, p, c, err)),
        }
    }

    for c in &p.where_clauses {
        check_condition(reg, p, c, err);
    }

    match &p.fix {
        FixExpr::Update {
            binder,
            substitutions,
        } => {
            if binder != &p.subject.name {
                err(
                    name,
                    format!("update fix must target the subject `{}`, not `{binder}`", p.subject.name),
                );
            }
            let mut targets = BTreeSet::new();
            for (target, value) in substitutions {
                if !targets.insert(target.as_str()) {
                    err(name, format!("`{target}` is assigned twice"));
                }
                if target == &p.subject.name {
                    err(name, "the subject cannot be an update target".to_string());
                } else if p.type_of(target).is_none() {
                    err(name, format!("undeclared name `{target}`"));
                }
                check_node_expr(reg, p, value, err);
            }
        }
        FixExpr::Instantiate { construct, fields } => {
            check_instantiation(reg, p, construct, fields, err);
        }
        FixExpr::Replace(e) => check_node_expr(reg, p, e, err),
    }
}

fn check_node_expr(reg: &Registry, p: &Pattern, e: &NodeExpr, err: &mut impl FnMut(&str, String)) {
    match e {
        NodeExpr::Var(v) | NodeExpr::Old(v) => {
            if p.type_of(v).is_none() {
                err(&p.name, format!("undeclared name `{v}`"));
            }
        }
        NodeExpr::Field(v, f) => match p.type_of(v) {
            None => err(&p.name, format!("undeclared name `{v}`")),
            Some(ty) => {
                if let Some(c) = reg.construct(ty) {
                    if c.field(f).is_none() {
                        err(&p.name, format!("construct {ty} has no field `{f}`"));
                    }
                }
            }
        },
        NodeExpr::Instantiate { construct, fields } => {
            check_instantiation(reg, p, construct, fields, err)
        }
        NodeExpr::Atom { construct, .. } => match reg.construct(construct) {
            None => err(&p.name, format!("unknown construct {construct}")),
            Some(c) if !c.is_atom => err(
                &p.name,
                format!("literal value given for non-atom construct {construct}"),
            ),
            _ => {}
        },
    }
}

fn check_instantiation(
    reg: &Registry,
    p: &Pattern,
    construct: &str,
    fields: &[(String, NodeExpr)],
    err: &mut impl FnMut(&str, String),
) {
    let Some(c) = reg.construct(construct) else {
        err(&p.name, format!("unknown construct {construct}"));
        return;
    };
    if c.is_atom {
        err(
            &p.name,
            format!("atom construct {construct} must be built from a literal value"),
        );
    }
    let mut assigned = BTreeSet::new();
    for (f, value) in fields {
        if !assigned.insert(f.as_str()) {
            err(&p.name, format!("field `{f}` of {construct} is assigned twice"));
        }
        if c.field(f).is_none() {
            err(&p.name, format!("construct {construct} has no field `{f}`"));
        }
        check_node_expr(reg, p, value, err);
    }
    for fd in &c.fields {
        if !fd.is_list() && !assigned.contains(fd.name.as_str()) {
            err(
                &p.name,
                format!("mandatory field `{}` of {construct} is not assigned", fd.name),
            );
        }
    }
}
