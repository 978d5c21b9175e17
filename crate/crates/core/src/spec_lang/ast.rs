//! In-memory form of a `.bugfix` source unit.

use std::fmt;

use serde::{Deserialize, Serialize};

/// One parsed `.bugfix` file: constructs, syntax rules and patterns in source order.
///
/// Equality is structural over the declarations; `source_name` is ignored.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SpecUnit {
    pub constructs: Vec<ConstructDef>,
    pub syntaxes: Vec<SyntaxRule>,
    pub patterns: Vec<Pattern>,
    pub source_name: String,
}

impl PartialEq for SpecUnit {
    fn eq(&self, other: &Self) -> bool {
        self.constructs == other.constructs
            && self.syntaxes == other.syntaxes
            && self.patterns == other.patterns
    }
}

impl Eq for SpecUnit {}

impl SpecUnit {
    pub fn is_empty(&self) -> bool {
        self.constructs.is_empty() && self.syntaxes.is_empty() && self.patterns.is_empty()
    }

    pub fn pattern(&self, name: &str) -> Option<&Pattern> {
        self.patterns.iter().find(|p| p.name == name)
    }

    pub fn construct(&self, name: &str) -> Option<&ConstructDef> {
        self.constructs.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstructDef {
    pub name: String,
    pub fields: Vec<FieldDef>,
    pub parents: Vec<String>,
    pub is_atom: bool,
}

impl ConstructDef {
    pub fn field(&self, name: &str) -> Option<&FieldDef> {
        self.fields.iter().find(|f| f.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Multiplicity {
    Single,
    List,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDef {
    pub name: String,
    pub ty: String,
    pub multiplicity: Multiplicity,
}

impl FieldDef {
    pub fn is_list(&self) -> bool {
        self.multiplicity == Multiplicity::List
    }
}

/// Concrete syntax of one construct in one language.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SyntaxRule {
    pub construct: String,
    /// Lower-cased language tag (`java`, `eiffel`, `mini`, ...).
    pub language: String,
    pub template: Template,
}

/// A rendering template. Values built through [`Template::seq`] are normalized:
/// adjacent literals merged, empty literals dropped, nested sequences flattened.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Template {
    Literal(String),
    /// A field of the construct; for atoms, `value` names the atom's value.
    /// A list field rendered through a bare reference is joined with `", "`.
    Field(String),
    Join { field: String, separator: String },
    Cond {
        guard: Guard,
        then: Box<Template>,
        otherwise: Box<Template>,
    },
    Seq(Vec<Template>),
}

impl Template {
    pub fn empty() -> Self {
        Template::Seq(Vec::new())
    }

    pub fn seq(parts: impl IntoIterator<Item = Template>) -> Self {
        let mut out: Vec<Template> = Vec::new();
        fn push(out: &mut Vec<Template>, t: Template) {
            match t {
                Template::Seq(inner) => inner.into_iter().for_each(|t| push(out, t)),
                Template::Literal(s) if s.is_empty() => {}
                Template::Literal(s) => {
                    if let Some(Template::Literal(prev)) = out.last_mut() {
                        prev.push_str(&s);
                    } else {
                        out.push(Template::Literal(s));
                    }
                }
                other => out.push(other),
            }
        }
        for p in parts {
            push(&mut out, p);
        }
        if out.len() == 1 {
            out.pop().unwrap()
        } else {
            Template::Seq(out)
        }
    }

    /// Field names referenced anywhere in the template, guards included.
    pub fn field_refs(&self) -> Vec<&str> {
        let mut acc = Vec::new();
        self.collect_refs(&mut acc);
        acc
    }

    fn collect_refs<'a>(&'a self, acc: &mut Vec<&'a str>) {
        match self {
            Template::Literal(_) => {}
            Template::Field(f) | Template::Join { field: f, .. } => acc.push(f),
            Template::Cond {
                guard,
                then,
                otherwise,
            } => {
                acc.push(guard.field());
                then.collect_refs(acc);
                otherwise.collect_refs(acc);
            }
            Template::Seq(parts) => parts.iter().for_each(|p| p.collect_refs(acc)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum GuardSubject {
    /// `field.count` on a list field.
    Count(String),
    /// `field.value` on an atom-valued field.
    Value(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Guard {
    pub subject: GuardSubject,
    pub op: CmpOp,
    pub literal: Literal,
}

impl Guard {
    pub fn field(&self) -> &str {
        match &self.subject {
            GuardSubject::Count(f) | GuardSubject::Value(f) => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub const ALL: [CmpOp; 6] = [
        CmpOp::Eq,
        CmpOp::Ne,
        CmpOp::Lt,
        CmpOp::Le,
        CmpOp::Gt,
        CmpOp::Ge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "/=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Eq => ord == Equal,
            CmpOp::Ne => ord != Equal,
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Gt => ord == Greater,
            CmpOp::Ge => ord != Less,
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Integer or text literal, also used as the value carried by atom nodes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Literal {
    Int(i64),
    Text(String),
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pattern {
    pub name: String,
    pub subject: Binder,
    pub metavars: Vec<Binder>,
    pub where_clauses: Vec<Condition>,
    pub fix: FixExpr,
}

impl Pattern {
    /// Declared type of a binder or metavariable.
    pub fn type_of(&self, name: &str) -> Option<&str> {
        if self.subject.name == name {
            return Some(&self.subject.construct);
        }
        self.metavars
            .iter()
            .find(|m| m.name == name)
            .map(|m| m.construct.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Binder {
    pub name: String,
    pub construct: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Condition {
    /// Node identity for node operands, value ordering for scalar operands.
    Compare { lhs: Term, op: CmpOp, rhs: Term },
    Member { element: Term, collection: Term },
    /// Conformance test of a node against a construct.
    Is { term: Term, construct: String },
    /// Negated conjunction.
    Not(Vec<Condition>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    Var(String),
    Field(Box<Term>, String),
    Index(Box<Term>),
    Count(Box<Term>),
    Value(Box<Term>),
    Parent(Box<Term>),
    Descendants(Box<Term>),
    Lit(Literal),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(name.to_string())
    }

    pub fn field(self, name: &str) -> Term {
        Term::Field(Box::new(self), name.to_string())
    }

    /// Metavariable names referenced by the term.
    pub fn vars(&self) -> Vec<&str> {
        match self {
            Term::Var(v) => vec![v.as_str()],
            Term::Field(t, _)
            | Term::Index(t)
            | Term::Count(t)
            | Term::Value(t)
            | Term::Parent(t)
            | Term::Descendants(t) => t.vars(),
            Term::Lit(_) => Vec::new(),
        }
    }
}

impl Condition {
    pub fn vars(&self) -> Vec<&str> {
        match self {
            Condition::Compare { lhs, rhs, .. } => {
                let mut v = lhs.vars();
                v.extend(rhs.vars());
                v
            }
            Condition::Member {
                element,
                collection,
            } => {
                let mut v = element.vars();
                v.extend(collection.vars());
                v
            }
            Condition::Is { term, .. } => term.vars(),
            Condition::Not(cs) => cs.iter().flat_map(|c| c.vars()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixExpr {
    /// `c [a1 <- a2, a2 <- old a1]`: substitutions inside the subject's subtree.
    Update {
        binder: String,
        substitutions: Vec<(String, NodeExpr)>,
    },
    /// `DIFFERENCE [first <- e1, second <- e2]`: a fresh node replaces the subject.
    Instantiate {
        construct: String,
        fields: Vec<(String, NodeExpr)>,
    },
    /// A bare node expression replaces the subject (`fix s end`).
    Replace(NodeExpr),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeExpr {
    Var(String),
    Old(String),
    Instantiate {
        construct: String,
        fields: Vec<(String, NodeExpr)>,
    },
    Field(String, String),
    Atom { construct: String, value: Literal },
}

impl NodeExpr {
    pub fn vars(&self) -> Vec<&str> {
        match self {
            NodeExpr::Var(v) | NodeExpr::Old(v) | NodeExpr::Field(v, _) => vec![v.as_str()],
            NodeExpr::Instantiate { fields, .. } => {
                fields.iter().flat_map(|(_, e)| e.vars()).collect()
            }
            NodeExpr::Atom { .. } => Vec::new(),
        }
    }

    /// The metavariable named by a plain or `old` reference.
    pub fn as_var(&self) -> Option<&str> {
        match self {
            NodeExpr::Var(v) | NodeExpr::Old(v) => Some(v),
            _ => None,
        }
    }
}
