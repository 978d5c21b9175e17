//! Fix application.
//!
//! Every node expression is evaluated against the tree as it was before the
//! fix, so the substitutions of an update are simultaneous. The replacement
//! root keeps the subject's id; nodes that are new, or that appear a second
//! time, get fresh ids above the tree's current maximum.

use std::collections::{HashMap, HashSet};

use super::{EngineError, FixProposal, Match};
use crate::registry::Registry;
use crate::spec_lang::{FixExpr, NodeExpr, Pattern};
use crate::tree::{Child, Node, NodeId, Tree, TreeIndex};

/// Applies the fix of `p` at match `m`, returning the before and after trees.
pub fn apply_fix(p: &Pattern, m: &Match, t: &Tree, reg: &Registry) -> Result<FixProposal, EngineError> {
    let idx = t.index();
    let subject = idx.node(m.subject_id).ok_or_else(|| bad(p, "subject is not in the tree"))?;
    let mut bindings: HashMap<&str, NodeId> = m.bindings.iter().map(|(n, id)| (n.as_str(), *id)).collect();
    bindings.insert(p.subject.name.as_str(), m.subject_id);
    let ctx = Ctx {
        p,
        idx: &idx,
        reg,
        bindings,
    };

    let mut replacement = match &p.fix {
        FixExpr::Update {
            binder,
            substitutions,
        } => {
            if ctx.lookup(binder)? != m.subject_id {
                return Err(bad(p, format!("`{binder}` does not name the subject")));
            }
            let mut targets: HashMap<NodeId, Node> = HashMap::new();
            for (target, expr) in substitutions {
                let tid = ctx.lookup(target)?;
                let node = ctx.single(expr)?;
                ctx.check_position(tid, &node)?;
                targets.insert(tid, node);
            }
            substitute(subject, &targets)
        }
        FixExpr::Instantiate { construct, fields } => ctx.instantiate(construct, fields)?,
        FixExpr::Replace(expr) => ctx.single(expr)?,
    };
    if !matches!(p.fix, FixExpr::Update { .. }) {
        ctx.check_position(m.subject_id, &replacement)?;
        if replacement.id == 0 {
            replacement.span = subject.span;
        }
    }

    replacement.id = m.subject_id;
    let mut seen: HashSet<NodeId> = idx
        .preorder()
        .iter()
        .copied()
        .filter(|id| !idx.in_subtree(*id, m.subject_id))
        .collect();
    let mut next = t.root.max_id();
    replacement.visit_mut(&mut |n| {
        if n.id == 0 || !seen.insert(n.id) {
            next += 1;
            n.id = next;
            seen.insert(n.id);
        }
    });

    let mut root = t.root.clone();
    if root.replace(m.subject_id, replacement.clone()).is_err() {
        return Err(bad(p, "subject is not in the tree"));
    }
    let after = Tree::new(root, reg)?;
    Ok(FixProposal {
        matched: m.clone(),
        before: t.clone(),
        after,
        replacement,
    })
}

fn bad(p: &Pattern, message: impl Into<String>) -> EngineError {
    EngineError::BadFix {
        pattern: p.name.clone(),
        message: message.into(),
    }
}

fn substitute(n: &Node, targets: &HashMap<NodeId, Node>) -> Node {
    let mut out = Node {
        construct: n.construct.clone(),
        id: n.id,
        span: n.span,
        value: n.value.clone(),
        fields: Vec::with_capacity(n.fields.len()),
    };
    for (name, child) in &n.fields {
        let pick = |c: &Node| targets.get(&c.id).cloned().unwrap_or_else(|| substitute(c, targets));
        let child = match child {
            Child::Single(c) => Child::Single(Box::new(pick(c))),
            Child::List(items) => Child::List(items.iter().map(pick).collect()),
        };
        out.fields.push((name.clone(), child));
    }
    out
}

struct Ctx<'a, 't> {
    p: &'a Pattern,
    idx: &'a TreeIndex<'t>,
    reg: &'a Registry,
    bindings: HashMap<&'a str, NodeId>,
}

impl Ctx<'_, '_> {
    fn lookup(&self, name: &str) -> Result<NodeId, EngineError> {
        self.bindings
            .get(name)
            .copied()
            .ok_or_else(|| bad(self.p, format!("`{name}` is not bound")))
    }

    fn bound(&self, name: &str) -> Result<&Node, EngineError> {
        let id = self.lookup(name)?;
        self.idx
            .node(id)
            .ok_or_else(|| bad(self.p, format!("`{name}` is not in the tree")))
    }

    fn eval(&self, e: &NodeExpr) -> Result<Child, EngineError> {
        Ok(match e {
            NodeExpr::Var(v) | NodeExpr::Old(v) => Child::Single(Box::new(self.bound(v)?.clone())),
            NodeExpr::Field(v, f) => self
                .bound(v)?
                .child(f)
                .cloned()
                .ok_or_else(|| bad(self.p, format!("`{v}` has no field `{f}`")))?,
            NodeExpr::Atom { construct, value } => {
                if !self.reg.is_atom(construct) {
                    return Err(bad(self.p, format!("{construct} is not an atom")));
                }
                Child::Single(Box::new(Node::atom(construct, value.clone())))
            }
            NodeExpr::Instantiate { construct, fields } => {
                Child::Single(Box::new(self.instantiate(construct, fields)?))
            }
        })
    }

    fn single(&self, e: &NodeExpr) -> Result<Node, EngineError> {
        match self.eval(e)? {
            Child::Single(n) => Ok(*n),
            Child::List(_) => Err(bad(self.p, "a list cannot stand for a single node")),
        }
    }

    fn instantiate(&self, construct: &str, assigned: &[(String, NodeExpr)]) -> Result<Node, EngineError> {
        let def = self
            .reg
            .construct(construct)
            .ok_or_else(|| bad(self.p, format!("unknown construct {construct}")))?;
        let mut fields = Vec::with_capacity(def.fields.len());
        for fd in &def.fields {
            let child = match assigned.iter().find(|(f, _)| *f == fd.name) {
                Some((_, e)) => match (self.eval(e)?, fd.is_list()) {
                    (Child::Single(n), true) => Child::List(vec![*n]),
                    (c @ Child::List(_), true) | (c @ Child::Single(_), false) => c,
                    (Child::List(_), false) => {
                        return Err(self.mismatch(format!("{construct}.{} takes a single node", fd.name)))
                    }
                },
                None if fd.is_list() => Child::List(Vec::new()),
                None => return Err(bad(self.p, format!("{construct}.{} is not assigned", fd.name))),
            };
            for n in child.nodes() {
                if !self.reg.conforms(&n.construct, &fd.ty) {
                    return Err(self.mismatch(format!(
                        "{} does not conform to {} required by {construct}.{}",
                        n.construct, fd.ty, fd.name
                    )));
                }
            }
            fields.push((fd.name.clone(), child));
        }
        if let Some((f, _)) = assigned.iter().find(|(f, _)| def.field(f).is_none()) {
            return Err(bad(self.p, format!("{construct} has no field `{f}`")));
        }
        let mut n = Node::branch(construct, Vec::new());
        n.fields = fields;
        Ok(n)
    }

    fn mismatch(&self, message: String) -> EngineError {
        EngineError::RhsConformance {
            pattern: self.p.name.clone(),
            message,
        }
    }

    /// The node placed at `target`'s position must conform to the type that
    /// position requires.
    fn check_position(&self, target: NodeId, node: &Node) -> Result<(), EngineError> {
        let Some(info) = self.idx.get(target) else {
            return Err(bad(self.p, format!("node {target} is not in the tree")));
        };
        let (Some(parent), Some(field)) = (info.parent, info.field) else {
            return Ok(());
        };
        let parent = self.idx.node(parent).expect("indexed parent");
        let ty = self
            .reg
            .construct(&parent.construct)
            .and_then(|d| d.field(field))
            .map(|f| f.ty.clone())
            .unwrap_or_default();
        if self.reg.conforms(&node.construct, &ty) {
            Ok(())
        } else {
            Err(self.mismatch(format!(
                "{} does not conform to {ty} required by {}.{field}",
                node.construct, parent.construct
            )))
        }
    }
}
