use thiserror::Error;

use super::{Child, Node};
use crate::registry::Registry;
use crate::spec_lang::{GuardSubject, Literal, Template};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RenderError {
    #[error("no syntax rule for {construct} in language `{language}`")]
    MissingSyntax { construct: String, language: String },
    #[error("{construct} has no field `{field}`")]
    MissingField { construct: String, field: String },
}

/// Renders a subtree as concrete text of `language` by instantiating the
/// registry's syntax templates. Atoms without a rule render their value.
pub fn render(n: &Node, language: &str, reg: &Registry) -> Result<String, RenderError> {
    let mut out = String::new();
    render_into(n, &language.to_ascii_lowercase(), reg, &mut out)?;
    Ok(out)
}

fn render_into(n: &Node, lang: &str, reg: &Registry, out: &mut String) -> Result<(), RenderError> {
    match reg.syntax(&n.construct, lang) {
        Some(rule) => instantiate(&rule.template, n, lang, reg, out),
        None => match &n.value {
            Some(v) if reg.is_atom(&n.construct) => {
                out.push_str(&v.to_string());
                Ok(())
            }
            _ => Err(RenderError::MissingSyntax {
                construct: n.construct.clone(),
                language: lang.to_string(),
            }),
        },
    }
}

fn field<'n>(n: &'n Node, name: &str) -> Result<&'n Child, RenderError> {
    n.child(name).ok_or_else(|| RenderError::MissingField {
        construct: n.construct.clone(),
        field: name.to_string(),
    })
}

fn join(items: &[Node], sep: &str, lang: &str, reg: &Registry, out: &mut String) -> Result<(), RenderError> {
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            out.push_str(sep);
        }
        render_into(item, lang, reg, out)?;
    }
    Ok(())
}

fn instantiate(
    t: &Template,
    n: &Node,
    lang: &str,
    reg: &Registry,
    out: &mut String,
) -> Result<(), RenderError> {
    match t {
        Template::Literal(s) => out.push_str(s),
        Template::Field(name) => {
            if name == "value" && n.fields.is_empty() {
                if let Some(v) = &n.value {
                    out.push_str(&v.to_string());
                    return Ok(());
                }
            }
            match field(n, name)? {
                Child::Single(c) => render_into(c, lang, reg, out)?,
                Child::List(items) => join(items, ", ", lang, reg, out)?,
            }
        }
        Template::Join { field: name, separator } => {
            let items = field(n, name)?.nodes();
            join(items, separator, lang, reg, out)?;
        }
        Template::Cond {
            guard,
            then,
            otherwise,
        } => {
            let child = field(n, guard.field())?;
            let observed = match (&guard.subject, child) {
                (GuardSubject::Count(_), c) => Some(Literal::Int(c.nodes().len() as i64)),
                (GuardSubject::Value(_), Child::Single(c)) => c.value.clone(),
                (GuardSubject::Value(_), Child::List(_)) => None,
            };
            let holds = observed
                .map(|v| crate::engine::compare_literals(&v, guard.op, &guard.literal))
                .unwrap_or(false);
            let branch = if holds { then } else { otherwise };
            instantiate(branch, n, lang, reg, out)?;
        }
        Template::Seq(parts) => {
            for p in parts {
                instantiate(p, n, lang, reg, out)?;
            }
        }
    }
    Ok(())
}
