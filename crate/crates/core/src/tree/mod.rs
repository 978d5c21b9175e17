//! Generic program trees: construct instances and atoms with stable ids.

mod index;
mod json;
mod minilang;
mod render;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::registry::Registry;
use crate::spec_lang::Literal;

pub use index::{NodeInfo, TreeIndex};
pub use json::{decode_tree, encode_node, encode_tree};
pub use minilang::{parse_minilang, MiniLangError};
pub use render::{render, RenderError};

pub type NodeId = u64;

/// Byte range `[start, end)` in the source a node was parsed from.
pub type Span = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Child {
    Single(Box<Node>),
    List(Vec<Node>),
}

impl Child {
    pub fn nodes(&self) -> &[Node] {
        match self {
            Child::Single(n) => std::slice::from_ref(n),
            Child::List(v) => v,
        }
    }

    fn nodes_mut(&mut self) -> &mut [Node] {
        match self {
            Child::Single(n) => std::slice::from_mut(n),
            Child::List(v) => v,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub construct: String,
    pub id: NodeId,
    pub span: Option<Span>,
    pub value: Option<Literal>,
    /// Children in construct-declaration order.
    pub fields: Vec<(String, Child)>,
}

impl Node {
    pub fn atom(construct: &str, value: Literal) -> Node {
        Node {
            construct: construct.to_string(),
            id: 0,
            span: None,
            value: Some(value),
            fields: Vec::new(),
        }
    }

    pub fn branch(construct: &str, fields: Vec<(&str, Child)>) -> Node {
        Node {
            construct: construct.to_string(),
            id: 0,
            span: None,
            value: None,
            fields: fields
                .into_iter()
                .map(|(n, c)| (n.to_string(), c))
                .collect(),
        }
    }

    pub fn child(&self, field: &str) -> Option<&Child> {
        self.fields.iter().find(|(n, _)| n == field).map(|(_, c)| c)
    }

    pub fn single(&self, field: &str) -> Option<&Node> {
        match self.child(field)? {
            Child::Single(n) => Some(n),
            Child::List(_) => None,
        }
    }

    pub fn list(&self, field: &str) -> Option<&[Node]> {
        match self.child(field)? {
            Child::List(v) => Some(v),
            Child::Single(_) => None,
        }
    }

    pub fn children(&self) -> impl Iterator<Item = &Node> {
        self.fields.iter().flat_map(|(_, c)| c.nodes().iter())
    }

    /// Nodes of the subtree in pre-order (node, then fields in declaration
    /// order, list elements in order).
    pub fn preorder(&self) -> Vec<&Node> {
        let mut out = Vec::new();
        let mut stack = vec![self];
        while let Some(n) = stack.pop() {
            out.push(n);
            let kids: Vec<&Node> = n.children().collect();
            stack.extend(kids.into_iter().rev());
        }
        out
    }

    pub fn size(&self) -> usize {
        1 + self.children().map(Node::size).sum::<usize>()
    }

    pub fn max_id(&self) -> NodeId {
        self.children()
            .map(Node::max_id)
            .fold(self.id, NodeId::max)
    }

    pub fn find(&self, id: NodeId) -> Option<&Node> {
        if self.id == id {
            return Some(self);
        }
        self.children().find_map(|c| c.find(id))
    }

    /// Replaces the node with the given id; returns the node that was there.
    pub fn replace(&mut self, id: NodeId, replacement: Node) -> Result<Node, Node> {
        if self.id == id {
            return Ok(std::mem::replace(self, replacement));
        }
        let mut replacement = replacement;
        for (_, child) in &mut self.fields {
            for n in child.nodes_mut() {
                match n.replace(id, replacement) {
                    Ok(old) => return Ok(old),
                    Err(r) => replacement = r,
                }
            }
        }
        Err(replacement)
    }

    pub fn visit_mut(&mut self, f: &mut impl FnMut(&mut Node)) {
        f(self);
        for (_, child) in &mut self.fields {
            for n in child.nodes_mut() {
                n.visit_mut(f);
            }
        }
    }

    /// Assigns ids 1, 2, ... in pre-order.
    pub fn renumber(&mut self) {
        let mut next = 0;
        self.visit_mut(&mut |n| {
            next += 1;
            n.id = next;
        });
    }

    /// Copy with ids and spans cleared; equal shapes compare equal.
    pub fn shape(&self) -> Node {
        let mut copy = self.clone();
        copy.visit_mut(&mut |n| {
            n.id = 0;
            n.span = None;
        });
        copy
    }

    pub fn same_shape(&self, other: &Node) -> bool {
        self.shape() == other.shape()
    }

    pub fn contains_id(&self, id: NodeId) -> bool {
        self.find(id).is_some()
    }
}

/// A validated program tree together with the fingerprint of the registry it
/// was validated against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tree {
    pub root: Node,
    pub fingerprint: String,
}

impl Tree {
    /// Validates `root` against the registry and wraps it.
    pub fn new(root: Node, reg: &Registry) -> Result<Tree, TreeError> {
        validate_node(&root, reg)?;
        Ok(Tree {
            root,
            fingerprint: reg.fingerprint(),
        })
    }

    pub fn index(&self) -> TreeIndex<'_> {
        TreeIndex::new(&self.root)
    }

    pub fn find(&self, id: NodeId) -> Option<&Node> {
        self.root.find(id)
    }

    /// Copy renumbered in pre-order, with the old-to-new id mapping.
    pub fn renumbered(&self) -> (Tree, std::collections::HashMap<NodeId, NodeId>) {
        let mut root = self.root.clone();
        let mut map = std::collections::HashMap::new();
        let mut next = 0;
        root.visit_mut(&mut |n| {
            next += 1;
            map.insert(n.id, next);
            n.id = next;
        });
        (
            Tree {
                root,
                fingerprint: self.fingerprint.clone(),
            },
            map,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("{path}: malformed document: {message}")]
    Malformed { path: String, message: String },
    #[error("{path}: unknown construct {name}")]
    UnknownConstruct { path: String, name: String },
    #[error("{path}: {message}")]
    Arity { path: String, message: String },
    #[error("{path}: {message}")]
    Conformance { path: String, message: String },
    #[error("{path}: duplicate node id {id}")]
    DuplicateId { path: String, id: NodeId },
}

/// Checks a subtree against the registry's construct definitions.
pub fn validate_node(root: &Node, reg: &Registry) -> Result<(), TreeError> {
    let mut seen = HashSet::new();
    validate_at(root, reg, "$", &mut seen)
}

fn validate_at(
    n: &Node,
    reg: &Registry,
    path: &str,
    seen: &mut HashSet<NodeId>,
) -> Result<(), TreeError> {
    let Some(def) = reg.construct(&n.construct) else {
        return Err(TreeError::UnknownConstruct {
            path: format!("{path}.construct"),
            name: n.construct.clone(),
        });
    };
    if !seen.insert(n.id) {
        return Err(TreeError::DuplicateId {
            path: path.to_string(),
            id: n.id,
        });
    }
    if def.is_atom {
        if n.value.is_none() {
            return Err(TreeError::Arity {
                path: path.to_string(),
                message: format!("atom {} has no value", n.construct),
            });
        }
        if !n.fields.is_empty() {
            return Err(TreeError::Arity {
                path: path.to_string(),
                message: format!("atom {} cannot have fields", n.construct),
            });
        }
        return Ok(());
    }
    if n.value.is_some() {
        return Err(TreeError::Arity {
            path: path.to_string(),
            message: format!("non-atom {} cannot carry a value", n.construct),
        });
    }
    if n.fields.len() != def.fields.len()
        || n.fields.iter().zip(&def.fields).any(|((a, _), b)| a != &b.name)
    {
        let have: Vec<&str> = n.fields.iter().map(|(f, _)| f.as_str()).collect();
        let want: Vec<&str> = def.fields.iter().map(|f| f.name.as_str()).collect();
        return Err(TreeError::Arity {
            path: path.to_string(),
            message: format!(
                "{} expects fields [{}], found [{}]",
                n.construct,
                want.join(", "),
                have.join(", ")
            ),
        });
    }
    for ((name, child), fd) in n.fields.iter().zip(&def.fields) {
        let fpath = format!("{path}.fields.{name}");
        match (child, fd.is_list()) {
            (Child::Single(c), false) => {
                check_conforms(c, &fd.ty, reg, &fpath)?;
                validate_at(c, reg, &fpath, seen)?;
            }
            (Child::List(items), true) => {
                for (i, c) in items.iter().enumerate() {
                    let ipath = format!("{fpath}[{i}]");
                    check_conforms(c, &fd.ty, reg, &ipath)?;
                    validate_at(c, reg, &ipath, seen)?;
                }
            }
            (_, is_list) => {
                return Err(TreeError::Arity {
                    path: fpath,
                    message: format!(
                        "field `{name}` of {} must be a {}",
                        n.construct,
                        if is_list { "list" } else { "single node" }
                    ),
                })
            }
        }
    }
    Ok(())
}

fn check_conforms(n: &Node, ty: &str, reg: &Registry, path: &str) -> Result<(), TreeError> {
    if reg.construct(&n.construct).is_some() && !reg.conforms(&n.construct, ty) {
        return Err(TreeError::Conformance {
            path: path.to_string(),
            message: format!("{} does not conform to {ty}", n.construct),
        });
    }
    Ok(())
}
