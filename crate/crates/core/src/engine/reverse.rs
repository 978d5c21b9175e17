//! Derivation of bug-introducing patterns from bug-fixing ones.
//!
//! Two shapes of fix are invertible. A permutation update (every target is
//! also a source, each exactly once) inverts to the inverse permutation. An
//! instantiation whose fields are fed one-to-one from fields of the subject
//! (through `x = e.f` clauses) inverts to the mirrored instantiation. Every
//! other fix loses information and is rejected.

use std::collections::{HashMap, HashSet};

use super::EngineError;
use crate::registry::Registry;
use crate::spec_lang::{CmpOp, Condition, FixExpr, NodeExpr, Pattern, Term};

/// The pattern undoing `p`, named `<p>_REV`.
pub fn reverse_pattern(p: &Pattern, reg: &Registry) -> Result<Pattern, EngineError> {
    let fail = |reason: &str| EngineError::NotInvertible {
        pattern: p.name.clone(),
        reason: reason.to_string(),
    };
    let mut out = p.clone();
    out.name = format!("{}_REV", p.name);
    match &p.fix {
        FixExpr::Update {
            binder,
            substitutions,
        } => {
            let targets: Vec<&str> = substitutions.iter().map(|(t, _)| t.as_str()).collect();
            let mut sources = Vec::with_capacity(substitutions.len());
            for (_, e) in substitutions {
                match e.as_var() {
                    Some(v) if v != p.subject.name => sources.push(v),
                    _ => return Err(fail("information loss: a substituted node is not bound by the pattern")),
                }
            }
            let tset: HashSet<&str> = targets.iter().copied().collect();
            let sset: HashSet<&str> = sources.iter().copied().collect();
            if tset != sset || sset.len() != sources.len() || tset.len() != targets.len() {
                return Err(fail("information loss: the update is not a permutation of bound nodes"));
            }
            // new[t_k] = old[s_k]; undoing it sets new[s_k] = old[t_k].
            let inverse: HashMap<&str, &str> = sources.iter().copied().zip(targets.iter().copied()).collect();
            let substitutions = substitutions
                .iter()
                .map(|(t, e)| {
                    let src = inverse[t.as_str()].to_string();
                    let e = match e {
                        NodeExpr::Old(_) => NodeExpr::Old(src),
                        _ => NodeExpr::Var(src),
                    };
                    (t.clone(), e)
                })
                .collect();
            out.fix = FixExpr::Update {
                binder: binder.clone(),
                substitutions,
            };
            Ok(out)
        }
        FixExpr::Instantiate { construct, fields } => {
            let subject = &p.subject.name;
            let sdef = reg
                .construct(&p.subject.construct)
                .ok_or_else(|| fail("unknown subject construct"))?;
            let fdef = reg
                .construct(construct)
                .ok_or_else(|| fail("unknown fix construct"))?;

            // metavariable -> (clause position, subject field)
            let mut feeds: HashMap<&str, (usize, &str)> = HashMap::new();
            for (i, c) in p.where_clauses.iter().enumerate() {
                if let Some((v, f)) = feed(c, subject) {
                    feeds.entry(v).or_insert((i, f));
                }
            }
            let mut used_vars = HashSet::new();
            let mut used_fields = HashSet::new();
            let mut mirror: HashMap<usize, Condition> = HashMap::new();
            let mut rebuilt = Vec::new();
            for (g, e) in fields {
                let v = match e.as_var() {
                    Some(v) if v != subject => v,
                    _ => return Err(fail("information loss: a field of the fix is not a bound metavariable")),
                };
                let Some(&(pos, f)) = feeds.get(v) else {
                    return Err(fail("non-bijective mapping: a fix field is not fed from a subject field"));
                };
                if !used_vars.insert(v) || !used_fields.insert(f) {
                    return Err(fail("non-bijective mapping: a subject field is used twice"));
                }
                let (Some(sf), Some(ff)) = (sdef.field(f), fdef.field(g)) else {
                    return Err(fail("non-bijective mapping: unknown field"));
                };
                if sf.multiplicity != ff.multiplicity {
                    return Err(fail("non-bijective mapping: field multiplicities differ"));
                }
                mirror.insert(
                    pos,
                    Condition::Compare {
                        lhs: Term::var(v),
                        op: CmpOp::Eq,
                        rhs: Term::var(subject).field(g),
                    },
                );
                rebuilt.push((f.to_string(), e.clone(), v));
            }
            if sdef.is_atom
                || fdef.is_atom
                || used_fields.len() != sdef.fields.len()
                || fields.len() != fdef.fields.len()
            {
                return Err(fail("information loss: not every field is carried over"));
            }
            let mut clauses = Vec::with_capacity(p.where_clauses.len());
            for (i, c) in p.where_clauses.iter().enumerate() {
                if let Some(m) = mirror.remove(&i) {
                    clauses.push(m);
                } else if c.vars().contains(&subject.as_str()) {
                    return Err(fail("guard not expressible: a residual clause mentions the subject"));
                } else {
                    clauses.push(c.clone());
                }
            }
            rebuilt.sort_by_key(|(f, _, _)| sdef.fields.iter().position(|d| d.name == *f));
            out.subject.construct = construct.clone();
            out.where_clauses = clauses;
            out.fix = FixExpr::Instantiate {
                construct: p.subject.construct.clone(),
                fields: rebuilt.into_iter().map(|(f, e, _)| (f, e)).collect(),
            };
            Ok(out)
        }
        FixExpr::Replace(_) => Err(fail("information loss: the fix discards the subject")),
    }
}

/// `x = e.f` or `e.f = x`, with `e` the subject.
fn feed<'c>(c: &'c Condition, subject: &str) -> Option<(&'c str, &'c str)> {
    let Condition::Compare {
        lhs,
        op: CmpOp::Eq,
        rhs,
    } = c
    else {
        return None;
    };
    match (lhs, rhs) {
        (Term::Var(x), Term::Field(inner, f)) | (Term::Field(inner, f), Term::Var(x))
            if x != subject && matches!(inner.as_ref(), Term::Var(e) if e == subject) =>
        {
            Some((x, f))
        }
        _ => None,
    }
}
