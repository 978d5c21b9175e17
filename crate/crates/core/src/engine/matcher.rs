//! Constraint-first matching.
//!
//! Subjects are tried in pre-order. Metavariables are bound one at a time;
//! when some clause `m = T` or `m in T` has every other variable bound, it
//! fixes the candidates for `m` directly, otherwise `m` ranges over the
//! subject's strict descendants of the declared type. Clauses are checked
//! as soon as all their variables are bound.

use std::collections::HashSet;

use super::{EngineError, Evaluator, Match, Val};
use crate::registry::Registry;
use crate::spec_lang::{CmpOp, Condition, Pattern, Term};
use crate::tree::{NodeId, Tree, TreeIndex};

/// Matches a registered pattern by name.
pub fn match_named(name: &str, t: &Tree, reg: &Registry) -> Result<Vec<Match>, EngineError> {
    let p = reg
        .pattern(name)
        .ok_or_else(|| EngineError::UnknownPattern(name.to_string()))?;
    match_pattern(p, t, reg)
}

/// All matches of `p` in `t`, sorted by subject id and then by the bound ids
/// in metavariable declaration order.
pub fn match_pattern(p: &Pattern, t: &Tree, reg: &Registry) -> Result<Vec<Match>, EngineError> {
    let fp = reg.fingerprint();
    if t.fingerprint != fp {
        return Err(EngineError::FingerprintMismatch {
            tree: t.fingerprint.clone(),
            registry: fp,
        });
    }
    let idx = t.index();
    let clause_vars: Vec<HashSet<&str>> = p
        .where_clauses
        .iter()
        .map(|c| c.vars().into_iter().collect())
        .collect();
    let mut out = Vec::new();
    for &sid in idx.preorder() {
        let node = idx.node(sid).expect("indexed node");
        if !reg.conforms(&node.construct, &p.subject.construct) {
            continue;
        }
        let mut search = Search {
            p,
            idx: &idx,
            reg,
            clause_vars: &clause_vars,
            subject: sid,
            bindings: vec![(p.subject.name.clone(), sid)],
            out: &mut out,
        };
        if search.clauses_hold(|vars| vars.iter().all(|v| *v == p.subject.name)) {
            search.extend();
        }
    }
    out.sort_by(|a, b| {
        (a.subject_id, a.bindings.iter().map(|(_, id)| *id).collect::<Vec<_>>())
            .cmp(&(b.subject_id, b.bindings.iter().map(|(_, id)| *id).collect()))
    });
    Ok(out)
}

struct Search<'a, 't> {
    p: &'a Pattern,
    idx: &'a TreeIndex<'t>,
    reg: &'a Registry,
    clause_vars: &'a [HashSet<&'a str>],
    subject: NodeId,
    bindings: Vec<(String, NodeId)>,
    out: &'a mut Vec<Match>,
}

impl Search<'_, '_> {
    fn eval(&self) -> Evaluator<'_, '_, Vec<(String, NodeId)>> {
        Evaluator {
            idx: self.idx,
            reg: self.reg,
            bindings: &self.bindings,
        }
    }

    fn is_bound(&self, v: &str) -> bool {
        self.bindings.iter().any(|(n, _)| n == v)
    }

    fn clauses_hold(&self, select: impl Fn(&HashSet<&str>) -> bool) -> bool {
        let ev = self.eval();
        self.p
            .where_clauses
            .iter()
            .zip(self.clause_vars)
            .filter(|(_, vars)| select(vars))
            .all(|(c, _)| ev.condition(c))
    }

    /// Candidates for `m` fixed by a single clause, if any clause does.
    fn determined(&self, m: &str) -> Option<Vec<NodeId>> {
        let ev = self.eval();
        for (c, vars) in self.p.where_clauses.iter().zip(self.clause_vars) {
            if !vars.iter().all(|v| *v == m || self.is_bound(v)) {
                continue;
            }
            let other = match c {
                Condition::Compare {
                    lhs,
                    op: CmpOp::Eq,
                    rhs,
                } => match (lhs, rhs) {
                    (Term::Var(v), o) | (o, Term::Var(v)) if v == m && !o.vars().contains(&m) => o,
                    _ => continue,
                },
                Condition::Member {
                    element: Term::Var(v),
                    collection,
                } if v == m && !collection.vars().contains(&m) => collection,
                _ => continue,
            };
            return Some(match (c, ev.term(other)) {
                (Condition::Compare { .. }, Val::Node(id)) => vec![id],
                (Condition::Member { .. }, Val::Nodes(ids)) => ids,
                _ => Vec::new(),
            });
        }
        None
    }

    fn extend(&mut self) {
        let unbound: Vec<(String, String)> = self
            .p
            .metavars
            .iter()
            .filter(|b| !self.is_bound(&b.name))
            .map(|b| (b.name.clone(), b.construct.clone()))
            .collect();
        if unbound.is_empty() {
            if self.clauses_hold(|_| true) {
                let bindings = self
                    .p
                    .metavars
                    .iter()
                    .map(|b| {
                        let id = self.bindings.iter().find(|(n, _)| *n == b.name).unwrap().1;
                        (b.name.clone(), id)
                    })
                    .collect();
                self.out.push(Match {
                    pattern: self.p.name.clone(),
                    subject_id: self.subject,
                    bindings,
                });
            }
            return;
        }
        let (name, ty, fixed) = unbound
            .iter()
            .find_map(|(n, ty)| self.determined(n).map(|c| (n, ty, Some(c))))
            .unwrap_or((&unbound[0].0, &unbound[0].1, None));
        let base = self.idx.descendants(self.subject);
        let candidates: Vec<NodeId> = match fixed {
            Some(ids) => ids
                .into_iter()
                .filter(|id| self.idx.in_subtree(*id, self.subject) && *id != self.subject)
                .collect(),
            None => base.to_vec(),
        };
        for id in candidates {
            let node = self.idx.node(id).expect("indexed node");
            if !self.reg.conforms(&node.construct, ty) {
                continue;
            }
            self.bindings.push((name.clone(), id));
            let newly = name.as_str();
            let ok = self.clauses_hold(|vars| {
                vars.contains(newly) && vars.iter().all(|v| self.is_bound(v))
            });
            if ok {
                self.extend();
            }
            self.bindings.pop();
        }
    }
}
