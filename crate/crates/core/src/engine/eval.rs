//! Evaluation of where-clause terms against a bound tree.
//!
//! Anything that cannot be evaluated (field of an atom, parent of the root,
//! `.value` of a non-atom, an unbound name) is undefined, and an atomic
//! clause over an undefined operand is false.

use crate::registry::Registry;
use crate::spec_lang::{CmpOp, Condition, Literal, Term};
use crate::tree::{Child, NodeId, TreeIndex};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Val {
    Node(NodeId),
    Nodes(Vec<NodeId>),
    Lit(Literal),
    Undef,
}

/// Variable lookup for evaluation.
pub(crate) trait Bindings {
    fn lookup(&self, name: &str) -> Option<NodeId>;
}

impl Bindings for [(String, NodeId)] {
    fn lookup(&self, name: &str) -> Option<NodeId> {
        self.iter().find(|(n, _)| n == name).map(|(_, id)| *id)
    }
}

impl Bindings for Vec<(String, NodeId)> {
    fn lookup(&self, name: &str) -> Option<NodeId> {
        self.as_slice().lookup(name)
    }
}

pub(crate) struct Evaluator<'a, 't, B: ?Sized> {
    pub idx: &'a TreeIndex<'t>,
    pub reg: &'a Registry,
    pub bindings: &'a B,
}

/// Ordering comparison between literals of the same kind; literals of
/// different kinds are only ever unequal.
pub fn compare_literals(a: &Literal, op: CmpOp, b: &Literal) -> bool {
    match (a, b) {
        (Literal::Int(x), Literal::Int(y)) => op.holds(x.cmp(y)),
        (Literal::Text(x), Literal::Text(y)) => op.holds(x.cmp(y)),
        _ => op == CmpOp::Ne,
    }
}

impl<B: Bindings + ?Sized> Evaluator<'_, '_, B> {
    pub fn term(&self, t: &Term) -> Val {
        match t {
            Term::Var(v) => self.bindings.lookup(v).map_or(Val::Undef, Val::Node),
            Term::Lit(l) => Val::Lit(l.clone()),
            Term::Field(inner, f) => match self.term(inner) {
                Val::Node(id) => match self.idx.node(id).and_then(|n| n.child(f)) {
                    Some(Child::Single(c)) => Val::Node(c.id),
                    Some(Child::List(items)) => Val::Nodes(items.iter().map(|c| c.id).collect()),
                    None => Val::Undef,
                },
                _ => Val::Undef,
            },
            Term::Index(inner) => match self.term(inner) {
                Val::Node(id) => self
                    .idx
                    .get(id)
                    .map_or(Val::Undef, |i| Val::Lit(Literal::Int(i.index as i64))),
                _ => Val::Undef,
            },
            Term::Count(inner) => match self.term(inner) {
                Val::Nodes(v) => Val::Lit(Literal::Int(v.len() as i64)),
                _ => Val::Undef,
            },
            Term::Value(inner) => match self.term(inner) {
                Val::Node(id) => self
                    .idx
                    .node(id)
                    .and_then(|n| n.value.clone())
                    .map_or(Val::Undef, Val::Lit),
                _ => Val::Undef,
            },
            Term::Parent(inner) => match self.term(inner) {
                Val::Node(id) => self
                    .idx
                    .get(id)
                    .and_then(|i| i.parent)
                    .map_or(Val::Undef, Val::Node),
                _ => Val::Undef,
            },
            Term::Descendants(inner) => match self.term(inner) {
                Val::Node(id) => Val::Nodes(self.idx.descendants(id).to_vec()),
                _ => Val::Undef,
            },
        }
    }

    pub fn condition(&self, c: &Condition) -> bool {
        match c {
            Condition::Compare { lhs, op, rhs } => match (self.term(lhs), self.term(rhs)) {
                (Val::Node(a), Val::Node(b)) => match op {
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    _ => false,
                },
                (Val::Nodes(a), Val::Nodes(b)) => match op {
                    CmpOp::Eq => a == b,
                    CmpOp::Ne => a != b,
                    _ => false,
                },
                (Val::Lit(a), Val::Lit(b)) => compare_literals(&a, *op, &b),
                _ => false,
            },
            Condition::Member {
                element,
                collection,
            } => match (self.term(element), self.term(collection)) {
                (Val::Node(a), Val::Nodes(set)) => set.contains(&a),
                _ => false,
            },
            Condition::Is { term, construct } => match self.term(term) {
                Val::Node(id) => self
                    .idx
                    .node(id)
                    .is_some_and(|n| self.reg.conforms(&n.construct, construct)),
                _ => false,
            },
            Condition::Not(inner) => !inner.iter().all(|c| self.condition(c)),
        }
    }
}
