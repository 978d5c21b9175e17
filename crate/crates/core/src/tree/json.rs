//! JSON exchange format.
//!
//! Each node is an object with keys, in this order: `"construct"`, optional
//! `"value"` (atoms), `"fields"` (non-atoms; list fields are arrays, single
//! fields nested objects), optional `"id"` and optional `"span"`
//! (`[start, end]` byte offsets). The canonical encoding has no whitespace and
//! omits `"id"` when it equals the node's 1-based pre-order position, which is
//! also the id the decoder assigns when the key is absent.

use serde_json::{Map, Value};

use super::{Child, Node, NodeId, Tree, TreeError};
use crate::registry::Registry;
use crate::spec_lang::Literal;

pub fn decode_tree(document: &str, reg: &Registry) -> Result<Tree, TreeError> {
    let value: Value = serde_json::from_str(document).map_err(|e| TreeError::Malformed {
        path: "$".into(),
        message: e.to_string(),
    })?;
    let mut position = 0;
    let root = decode_node(&value, "$", reg, &mut position)?;
    Tree::new(root, reg)
}

fn malformed(path: &str, message: impl Into<String>) -> TreeError {
    TreeError::Malformed {
        path: path.to_string(),
        message: message.into(),
    }
}

fn decode_node(
    v: &Value,
    path: &str,
    reg: &Registry,
    position: &mut NodeId,
) -> Result<Node, TreeError> {
    let obj = v
        .as_object()
        .ok_or_else(|| malformed(path, "expected an object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "construct" | "value" | "fields" | "id" | "span") {
            return Err(malformed(path, format!("unexpected key `{key}`")));
        }
    }
    let cpath = format!("{path}.construct");
    let construct = obj
        .get("construct")
        .and_then(Value::as_str)
        .ok_or_else(|| malformed(&cpath, "expected a construct name"))?;
    let def = reg
        .construct(construct)
        .ok_or_else(|| TreeError::UnknownConstruct {
            path: cpath,
            name: construct.to_string(),
        })?;

    *position += 1;
    let id = match obj.get("id") {
        None => *position,
        Some(v) => v
            .as_u64()
            .filter(|&i| i > 0)
            .ok_or_else(|| malformed(&format!("{path}.id"), "expected a positive integer"))?,
    };
    let span = match obj.get("span") {
        None => None,
        Some(v) => Some(decode_span(v, &format!("{path}.span"))?),
    };
    let value = match obj.get("value") {
        None => None,
        Some(Value::String(s)) => Some(Literal::Text(s.clone())),
        Some(Value::Number(n)) => Some(Literal::Int(n.as_i64().ok_or_else(|| {
            malformed(&format!("{path}.value"), "expected an integer or string")
        })?)),
        Some(_) => {
            return Err(malformed(
                &format!("{path}.value"),
                "expected an integer or string",
            ))
        }
    };

    let empty = Map::new();
    let raw_fields = match obj.get("fields") {
        None => &empty,
        Some(Value::Object(m)) => m,
        Some(_) => return Err(malformed(&format!("{path}.fields"), "expected an object")),
    };
    if def.is_atom && !raw_fields.is_empty() {
        return Err(TreeError::Arity {
            path: format!("{path}.fields"),
            message: format!("atom {construct} cannot have fields"),
        });
    }
    for key in raw_fields.keys() {
        if def.field(key).is_none() {
            return Err(TreeError::Arity {
                path: format!("{path}.fields.{key}"),
                message: format!("{construct} has no field `{key}`"),
            });
        }
    }
    let mut fields = Vec::with_capacity(def.fields.len());
    for fd in &def.fields {
        let fpath = format!("{path}.fields.{}", fd.name);
        let raw = raw_fields.get(&fd.name);
        let child = if fd.is_list() {
            let items = match raw {
                None => Vec::new(),
                Some(Value::Array(items)) => items.iter().collect(),
                Some(_) => {
                    return Err(TreeError::Arity {
                        path: fpath,
                        message: format!("field `{}` is a list", fd.name),
                    })
                }
            };
            let mut nodes = Vec::with_capacity(items.len());
            for (i, item) in items.into_iter().enumerate() {
                nodes.push(decode_node(item, &format!("{fpath}[{i}]"), reg, position)?);
            }
            Child::List(nodes)
        } else {
            match raw {
                Some(item @ Value::Object(_)) => {
                    Child::Single(Box::new(decode_node(item, &fpath, reg, position)?))
                }
                Some(_) => {
                    return Err(TreeError::Arity {
                        path: fpath,
                        message: format!("field `{}` takes a single node", fd.name),
                    })
                }
                None => {
                    return Err(TreeError::Arity {
                        path: fpath,
                        message: format!("missing field `{}`", fd.name),
                    })
                }
            }
        };
        fields.push((fd.name.clone(), child));
    }
    Ok(Node {
        construct: construct.to_string(),
        id,
        span,
        value,
        fields,
    })
}

fn decode_span(v: &Value, path: &str) -> Result<(usize, usize), TreeError> {
    let pair = v
        .as_array()
        .filter(|a| a.len() == 2)
        .ok_or_else(|| malformed(path, "expected [start, end]"))?;
    let start = pair[0].as_u64().ok_or_else(|| malformed(path, "expected offsets"))?;
    let end = pair[1].as_u64().ok_or_else(|| malformed(path, "expected offsets"))?;
    if start > end {
        return Err(malformed(path, "span start exceeds end"));
    }
    Ok((start as usize, end as usize))
}

/// Canonical JSON text of a tree.
pub fn encode_tree(t: &Tree) -> String {
    encode_node(&t.root)
}

/// Canonical JSON text of a subtree; ids are compared against pre-order
/// positions within this subtree.
pub fn encode_node(n: &Node) -> String {
    let mut out = String::new();
    let mut position = 0;
    write_node(n, &mut out, &mut position);
    out
}

fn write_str(out: &mut String, s: &str) {
    out.push_str(&serde_json::to_string(s).expect("string serialization"));
}

fn write_node(n: &Node, out: &mut String, position: &mut NodeId) {
    *position += 1;
    let here = *position;
    out.push_str("{\"construct\":");
    write_str(out, &n.construct);
    match &n.value {
        Some(Literal::Text(s)) => {
            out.push_str(",\"value\":");
            write_str(out, s);
        }
        Some(Literal::Int(i)) => {
            out.push_str(",\"value\":");
            out.push_str(&i.to_string());
        }
        None => {
            out.push_str(",\"fields\":{");
            for (i, (name, child)) in n.fields.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_str(out, name);
                out.push(':');
                match child {
                    Child::Single(c) => write_node(c, out, position),
                    Child::List(items) => {
                        out.push('[');
                        for (j, c) in items.iter().enumerate() {
                            if j > 0 {
                                out.push(',');
                            }
                            write_node(c, out, position);
                        }
                        out.push(']');
                    }
                }
            }
            out.push('}');
        }
    }
    if n.id != here {
        out.push_str(",\"id\":");
        out.push_str(&n.id.to_string());
    }
    if let Some((s, e)) = n.span {
        out.push_str(&format!(",\"span\":[{s},{e}]"));
    }
    out.push('}');
}
