use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

/// Canonical DSL text for a unit: constructs, then syntax rules, then
/// patterns, separated by blank lines.
pub fn render_spec(unit: &SpecUnit) -> String {
    let mut blocks = Vec::new();
    blocks.extend(unit.constructs.iter().map(construct));
    blocks.extend(unit.syntaxes.iter().map(syntax));
    blocks.extend(unit.patterns.iter().map(pattern));
    let mut out = blocks.join("\n");
    if !out.is_empty() {
        debug_assert!(out.ends_with('\n'));
    }
    out.shrink_to_fit();
    out
}

fn construct(c: &ConstructDef) -> String {
    let mut out = format!("construct {}", c.name);
    if c.is_atom {
        out.push_str(" atom");
    }
    if !c.parents.is_empty() {
        let _ = write!(out, " inherit {}", c.parents.join(", "));
    }
    if !c.fields.is_empty() {
        out.push_str(" feature");
    }
    out.push('\n');
    for f in &c.fields {
        let star = if f.is_list() { "*" } else { "" };
        let _ = writeln!(out, "{INDENT}{}: {}{star}", f.name, f.ty);
    }
    out.push_str("end\n");
    out
}

fn syntax(s: &SyntaxRule) -> String {
    format!(
        "syntax {} for {}:\n{INDENT}{}\n",
        s.construct,
        s.language,
        render_template(&s.template)
    )
}

fn pattern(p: &Pattern) -> String {
    let mut out = format!(
        "pattern {} for\n{INDENT}{}: {}\n",
        p.name, p.subject.name, p.subject.construct
    );
    if !p.metavars.is_empty() {
        out.push_str("with\n");
        for m in &p.metavars {
            let _ = writeln!(out, "{INDENT}{}: {}", m.name, m.construct);
        }
    }
    if !p.where_clauses.is_empty() {
        out.push_str("where\n");
        for c in &p.where_clauses {
            let _ = writeln!(out, "{INDENT}{}", condition(c));
        }
    }
    let _ = writeln!(out, "fix\n{INDENT}{}\nend", fix(&p.fix));
    out
}

fn condition(c: &Condition) -> String {
    match c {
        Condition::Compare { lhs, op, rhs } => format!("{} {} {}", term(lhs), op, term(rhs)),
        Condition::Member {
            element,
            collection,
        } => format!("{} in {}", term(element), term(collection)),
        Condition::Is { term: t, construct } => format!("{} is {construct}", term(t)),
        Condition::Not(inner) => {
            let parts: Vec<String> = inner.iter().map(condition).collect();
            format!("not ({})", parts.join("; "))
        }
    }
}

fn term(t: &Term) -> String {
    match t {
        Term::Var(v) => v.clone(),
        Term::Field(inner, f) => format!("{}.{f}", term(inner)),
        Term::Index(inner) => format!("{}.index", term(inner)),
        Term::Count(inner) => format!("{}.count", term(inner)),
        Term::Value(inner) => format!("{}.value", term(inner)),
        Term::Parent(inner) => format!("{}.parent", term(inner)),
        Term::Descendants(inner) => format!("descendants({})", term(inner)),
        Term::Lit(l) => literal(l),
    }
}

fn literal(l: &Literal) -> String {
    match l {
        Literal::Int(i) => i.to_string(),
        Literal::Text(s) => quote(s),
    }
}

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn fix(f: &FixExpr) -> String {
    match f {
        FixExpr::Update {
            binder,
            substitutions,
        } => format!("{binder} {}", assignments(substitutions)),
        FixExpr::Instantiate { construct, fields } => {
            format!("{construct} {}", assignments(fields))
        }
        FixExpr::Replace(e) => node_expr(e),
    }
}

fn assignments(items: &[(String, NodeExpr)]) -> String {
    let parts: Vec<String> = items
        .iter()
        .map(|(target, e)| format!("{target} <- {}", node_expr(e)))
        .collect();
    format!("[{}]", parts.join(", "))
}

fn node_expr(e: &NodeExpr) -> String {
    match e {
        NodeExpr::Var(v) => v.clone(),
        NodeExpr::Old(v) => format!("old {v}"),
        NodeExpr::Field(v, f) => format!("{v}.{f}"),
        NodeExpr::Instantiate { construct, fields } => {
            format!("{construct} {}", assignments(fields))
        }
        NodeExpr::Atom { construct, value } => format!("{construct} {}", literal(value)),
    }
}

/// Canonical single-line text of a template.
pub fn render_template(t: &Template) -> String {
    let parts: &[Template] = match t {
        Template::Seq(parts) => parts,
        single => std::slice::from_ref(single),
    };
    if parts.is_empty() {
        return "\"\"".to_string();
    }
    let mut out = String::new();
    for (i, part) in parts.iter().enumerate() {
        let first = i == 0;
        let last = i + 1 == parts.len();
        let prev = if first { None } else { Some(&parts[i - 1]) };
        match part {
            Template::Literal(s) => {
                let after_join_word = matches!(prev, Some(Template::Field(f)) if f == "join");
                let raw_ok = is_raw_safe(s)
                    && !(first && s.starts_with(char::is_whitespace))
                    && !(last && s.ends_with(char::is_whitespace))
                    && !(after_join_word && s.starts_with('('));
                if raw_ok {
                    out.push_str(s);
                } else {
                    out.push_str(&quote(s));
                }
            }
            Template::Field(f) => {
                // Two adjacent names would lex as one identifier.
                if matches!(prev, Some(Template::Field(_))) {
                    out.push_str("\"\"");
                }
                out.push_str(f);
            }
            Template::Join { field, separator } => {
                if matches!(prev, Some(Template::Field(_))) {
                    out.push_str("\"\"");
                }
                let _ = write!(out, "join({field}, {})", quote(separator));
            }
            Template::Cond {
                guard,
                then,
                otherwise,
            } => {
                let subject = match &guard.subject {
                    GuardSubject::Count(f) => format!("{f}.count"),
                    GuardSubject::Value(f) => format!("{f}.value"),
                };
                let _ = write!(
                    out,
                    "[{subject} {} {} -> {} | {}]",
                    guard.op,
                    literal(&guard.literal),
                    render_template(then),
                    render_template(otherwise)
                );
            }
            Template::Seq(_) => out.push_str(&render_template(part)),
        }
    }
    out
}

fn is_raw_safe(s: &str) -> bool {
    !s.is_empty()
        && !s.contains("->")
        && s.chars().all(|c| {
            !(c.is_ascii_alphanumeric()
                || c == '_'
                || matches!(c, '[' | ']' | '|' | '"' | '\\' | '→')
                || c.is_control())
        })
}
