//! Recursive descent parser for `.bugfix` sources. The grammar is frozen in
//! `docs/grammar.md`.

use std::collections::HashSet;

use super::ast::*;
use super::lexer::{Lexer, Tok, Token};
use super::SpecError;

const KEYWORDS: &[&str] = &[
    "construct",
    "atom",
    "inherit",
    "feature",
    "end",
    "syntax",
    "for",
    "pattern",
    "with",
    "where",
    "fix",
    "old",
    "not",
    "is",
    "descendants",
];

/// Names that would shadow term accessors if used as field names.
pub const RESERVED_FIELDS: &[&str] = &["index", "count", "value", "parent"];

pub fn parse_spec(text: &str, source_name: &str) -> Result<SpecUnit, SpecError> {
    let mut parser = Parser {
        lexer: Lexer::new(text),
        peeked: None,
    };
    let mut unit = SpecUnit {
        source_name: source_name.to_string(),
        ..SpecUnit::default()
    };
    let mut seen_constructs = HashSet::new();
    let mut seen_patterns = HashSet::new();
    let mut seen_syntax = HashSet::new();
    loop {
        let token = parser.peek()?.clone();
        match &token.tok {
            Tok::Eof => break,
            Tok::Lower(k) if k == "construct" => {
                let c = parser.construct()?;
                if !seen_constructs.insert(c.name.clone()) {
                    return Err(parser.duplicate("construct", &c.name, token.offset));
                }
                unit.constructs.push(c);
            }
            Tok::Lower(k) if k == "syntax" => {
                let s = parser.syntax()?;
                let key = (s.construct.clone(), s.language.clone());
                if !seen_syntax.insert(key) {
                    let name = format!("{} for {}", s.construct, s.language);
                    return Err(parser.duplicate("syntax", &name, token.offset));
                }
                unit.syntaxes.push(s);
            }
            Tok::Lower(k) if k == "pattern" => {
                let p = parser.pattern()?;
                if !seen_patterns.insert(p.name.clone()) {
                    return Err(parser.duplicate("pattern", &p.name, token.offset));
                }
                unit.patterns.push(p);
            }
            _ => {
                return Err(parser.unexpected(&token, "expected `construct`, `syntax` or `pattern`"))
            }
        }
    }
    Ok(unit)
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    peeked: Option<Token>,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Result<&Token, SpecError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lexer.next_token()?);
        }
        Ok(self.peeked.as_ref().unwrap())
    }

    fn next(&mut self) -> Result<Token, SpecError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lexer.next_token(),
        }
    }

    fn unexpected(&self, token: &Token, message: &str) -> SpecError {
        self.lexer
            .error(token.offset, &token.tok.describe(), message)
    }

    fn duplicate(&self, kind: &'static str, name: &str, offset: usize) -> SpecError {
        let (line, col) = self.lexer.line_col(offset);
        SpecError::Duplicate {
            kind,
            name: name.to_string(),
            line,
            col,
        }
    }

    fn at_keyword(&mut self, kw: &str) -> Result<bool, SpecError> {
        Ok(matches!(&self.peek()?.tok, Tok::Lower(k) if k == kw))
    }

    fn eat_keyword(&mut self, kw: &str) -> Result<bool, SpecError> {
        if self.at_keyword(kw)? {
            self.next()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), SpecError> {
        let t = self.next()?;
        match &t.tok {
            Tok::Lower(k) if k == kw => Ok(()),
            _ => Err(self.unexpected(&t, &format!("expected `{kw}`"))),
        }
    }

    fn eat(&mut self, tok: &Tok) -> Result<bool, SpecError> {
        if &self.peek()?.tok == tok {
            self.next()?;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    fn expect(&mut self, tok: Tok) -> Result<(), SpecError> {
        let t = self.next()?;
        if t.tok == tok {
            Ok(())
        } else {
            Err(self.unexpected(&t, &format!("expected `{}`", tok.describe())))
        }
    }

    fn upper(&mut self, what: &str) -> Result<String, SpecError> {
        let t = self.next()?;
        match t.tok {
            Tok::Upper(s) => Ok(s),
            _ => Err(self.unexpected(&t, &format!("expected {what} (upper-case name)"))),
        }
    }

    fn lower(&mut self, what: &str) -> Result<String, SpecError> {
        let t = self.next()?;
        match t.tok {
            Tok::Lower(s) if !KEYWORDS.contains(&s.as_str()) => Ok(s),
            _ => Err(self.unexpected(&t, &format!("expected {what} (lower-case name)"))),
        }
    }

    fn at_lower_name(&mut self) -> Result<bool, SpecError> {
        Ok(matches!(&self.peek()?.tok, Tok::Lower(s) if !KEYWORDS.contains(&s.as_str())))
    }

    fn skip_semis(&mut self) -> Result<(), SpecError> {
        while self.eat(&Tok::Semi)? {}
        Ok(())
    }

    fn construct(&mut self) -> Result<ConstructDef, SpecError> {
        self.expect_keyword("construct")?;
        let name = self.upper("construct name")?;
        let is_atom = self.eat_keyword("atom")?;
        let mut parents = Vec::new();
        if self.eat_keyword("inherit")? {
            loop {
                parents.push(self.upper("parent construct")?);
                if !self.eat(&Tok::Comma)? {
                    break;
                }
            }
        }
        let mut fields: Vec<FieldDef> = Vec::new();
        if self.eat_keyword("feature")? {
            self.skip_semis()?;
            while self.at_lower_name()? {
                let start = self.peek()?.offset;
                let names = self.name_group("field name")?;
                self.expect(Tok::Colon)?;
                let ty = self.upper("field type")?;
                let multiplicity = if self.eat(&Tok::Star)? {
                    Multiplicity::List
                } else {
                    Multiplicity::Single
                };
                for n in names {
                    if RESERVED_FIELDS.contains(&n.as_str()) {
                        return Err(self.lexer.error(
                            start,
                            &n,
                            "field name is reserved for an accessor",
                        ));
                    }
                    if fields.iter().any(|f| f.name == n) {
                        return Err(self.duplicate("field", &format!("{name}.{n}"), start));
                    }
                    fields.push(FieldDef {
                        name: n,
                        ty: ty.clone(),
                        multiplicity,
                    });
                }
                self.skip_semis()?;
            }
        }
        let end = self.peek()?.clone();
        self.expect_keyword("end")?;
        if is_atom && !fields.is_empty() {
            return Err(self.unexpected(&end, "atom constructs cannot declare fields"));
        }
        Ok(ConstructDef {
            name,
            fields,
            parents,
            is_atom,
        })
    }

    fn name_group(&mut self, what: &str) -> Result<Vec<String>, SpecError> {
        let mut names = vec![self.lower(what)?];
        while self.eat(&Tok::Comma)? {
            names.push(self.lower(what)?);
        }
        Ok(names)
    }

    fn syntax(&mut self) -> Result<SyntaxRule, SpecError> {
        self.expect_keyword("syntax")?;
        let construct = self.upper("construct name")?;
        self.expect_keyword("for")?;
        let t = self.next()?;
        let language = match t.tok {
            Tok::Upper(s) | Tok::Lower(s) => s.to_ascii_lowercase(),
            _ => return Err(self.unexpected(&t, "expected a language name")),
        };
        self.expect(Tok::Colon)?;
        debug_assert!(self.peeked.is_none());
        let (offset, line) = self.lexer.raw_line();
        let template = TemplateParser {
            lexer: &self.lexer,
            src: line,
            base: offset,
            pos: 0,
        }
        .parse()?;
        Ok(SyntaxRule {
            construct,
            language,
            template,
        })
    }

    fn pattern(&mut self) -> Result<Pattern, SpecError> {
        self.expect_keyword("pattern")?;
        let t = self.next()?;
        let name = match t.tok {
            Tok::Upper(s) => s,
            Tok::Lower(s) if !KEYWORDS.contains(&s.as_str()) => s,
            _ => return Err(self.unexpected(&t, "expected a pattern name")),
        };
        self.expect_keyword("for")?;
        let bname = self.lower("subject binder")?;
        self.expect(Tok::Colon)?;
        let subject = Binder {
            name: bname,
            construct: self.upper("subject construct")?,
        };
        let mut metavars = Vec::new();
        if self.eat_keyword("with")? {
            self.skip_semis()?;
            while self.at_lower_name()? {
                let names = self.name_group("metavariable")?;
                self.expect(Tok::Colon)?;
                let ty = self.upper("metavariable type")?;
                metavars.extend(names.into_iter().map(|name| Binder {
                    name,
                    construct: ty.clone(),
                }));
                self.skip_semis()?;
            }
        }
        let mut where_clauses = Vec::new();
        if self.eat_keyword("where")? {
            self.skip_semis()?;
            while !self.at_keyword("fix")? {
                where_clauses.push(self.condition()?);
                self.skip_semis()?;
            }
        }
        self.expect_keyword("fix")?;
        let fix = self.fix_expr()?;
        self.expect_keyword("end")?;
        Ok(Pattern {
            name,
            subject,
            metavars,
            where_clauses,
            fix,
        })
    }

    fn condition(&mut self) -> Result<Condition, SpecError> {
        if self.eat_keyword("not")? {
            self.expect(Tok::LParen)?;
            let mut inner = Vec::new();
            self.skip_semis()?;
            while !self.eat(&Tok::RParen)? {
                inner.push(self.condition()?);
                self.skip_semis()?;
            }
            return Ok(Condition::Not(inner));
        }
        let lhs = self.term()?;
        if self.eat_keyword("is")? {
            let construct = self.upper("construct name")?;
            return Ok(Condition::Is {
                term: lhs,
                construct,
            });
        }
        if self.eat(&Tok::Member)? {
            let collection = self.term()?;
            return Ok(Condition::Member {
                element: lhs,
                collection,
            });
        }
        let t = self.next()?;
        let op = cmp_of(&t.tok)
            .ok_or_else(|| self.unexpected(&t, "expected a comparison, `in` or `is`"))?;
        let rhs = self.term()?;
        Ok(Condition::Compare { lhs, op, rhs })
    }

    fn term(&mut self) -> Result<Term, SpecError> {
        let t = self.next()?;
        let mut term = match t.tok {
            Tok::Lower(ref s) if s == "descendants" => {
                self.expect(Tok::LParen)?;
                let inner = self.term()?;
                self.expect(Tok::RParen)?;
                Term::Descendants(Box::new(inner))
            }
            Tok::Lower(s) if !KEYWORDS.contains(&s.as_str()) => Term::Var(s),
            Tok::Int(i) => Term::Lit(Literal::Int(i)),
            Tok::Minus => {
                let n = self.next()?;
                match n.tok {
                    Tok::Int(i) => Term::Lit(Literal::Int(-i)),
                    _ => return Err(self.unexpected(&n, "expected an integer")),
                }
            }
            Tok::Str(s) => Term::Lit(Literal::Text(s)),
            _ => return Err(self.unexpected(&t, "expected a term")),
        };
        while self.eat(&Tok::Dot)? {
            let t = self.next()?;
            let name = match t.tok {
                Tok::Lower(s) if !KEYWORDS.contains(&s.as_str()) => s,
                _ => return Err(self.unexpected(&t, "expected a field or accessor name")),
            };
            let inner = Box::new(term);
            term = match name.as_str() {
                "index" => Term::Index(inner),
                "count" => Term::Count(inner),
                "value" => Term::Value(inner),
                "parent" => Term::Parent(inner),
                _ => Term::Field(inner, name),
            };
        }
        Ok(term)
    }

    fn fix_expr(&mut self) -> Result<FixExpr, SpecError> {
        let t = self.peek()?.clone();
        if let Tok::Lower(name) = &t.tok {
            if !KEYWORDS.contains(&name.as_str()) {
                self.next()?;
                if self.eat(&Tok::LBracket)? {
                    let substitutions = self.assignments()?;
                    return Ok(FixExpr::Update {
                        binder: name.clone(),
                        substitutions,
                    });
                }
                let expr = self.node_expr_after_lower(name.clone())?;
                return Ok(FixExpr::Replace(expr));
            }
        }
        match self.node_expr()? {
            NodeExpr::Instantiate { construct, fields } => {
                Ok(FixExpr::Instantiate { construct, fields })
            }
            other => Ok(FixExpr::Replace(other)),
        }
    }

    fn assignments(&mut self) -> Result<Vec<(String, NodeExpr)>, SpecError> {
        let mut out = Vec::new();
        if self.eat(&Tok::RBracket)? {
            return Ok(out);
        }
        loop {
            let target = self.lower("assignment target")?;
            self.expect(Tok::Assign)?;
            let value = self.node_expr()?;
            out.push((target, value));
            if self.eat(&Tok::Comma)? {
                continue;
            }
            self.expect(Tok::RBracket)?;
            return Ok(out);
        }
    }

    fn node_expr(&mut self) -> Result<NodeExpr, SpecError> {
        let t = self.next()?;
        match t.tok {
            Tok::Lower(ref k) if k == "old" => Ok(NodeExpr::Old(self.lower("metavariable")?)),
            Tok::Lower(s) if !KEYWORDS.contains(&s.as_str()) => self.node_expr_after_lower(s),
            Tok::Upper(construct) => {
                if self.eat(&Tok::LBracket)? {
                    let fields = self.assignments()?;
                    return Ok(NodeExpr::Instantiate { construct, fields });
                }
                let v = self.next()?;
                let value = match v.tok {
                    Tok::Int(i) => Literal::Int(i),
                    Tok::Minus => match self.next()? {
                        Token {
                            tok: Tok::Int(i), ..
                        } => Literal::Int(-i),
                        other => return Err(self.unexpected(&other, "expected an integer")),
                    },
                    Tok::Str(s) => Literal::Text(s),
                    _ => {
                        return Err(self.unexpected(&v, "expected `[` or an atom literal value"))
                    }
                };
                Ok(NodeExpr::Atom { construct, value })
            }
            _ => Err(self.unexpected(&t, "expected a node expression")),
        }
    }

    fn node_expr_after_lower(&mut self, name: String) -> Result<NodeExpr, SpecError> {
        if self.eat(&Tok::Dot)? {
            let field = self.lower("field name")?;
            return Ok(NodeExpr::Field(name, field));
        }
        Ok(NodeExpr::Var(name))
    }
}

fn cmp_of(tok: &Tok) -> Option<CmpOp> {
    Some(match tok {
        Tok::Eq => CmpOp::Eq,
        Tok::Ne => CmpOp::Ne,
        Tok::Lt => CmpOp::Lt,
        Tok::Le => CmpOp::Le,
        Tok::Gt => CmpOp::Gt,
        Tok::Ge => CmpOp::Ge,
        _ => return None,
    })
}

/// Raw-text parser for one template line.
struct TemplateParser<'l, 's> {
    lexer: &'l Lexer<'s>,
    src: &'s str,
    base: usize,
    pos: usize,
}

enum Piece {
    Raw(String),
    Fixed(Template),
}

fn push_raw(pieces: &mut Vec<Piece>, text: &str) {
    if let Some(Piece::Raw(prev)) = pieces.last_mut() {
        prev.push_str(text);
    } else {
        pieces.push(Piece::Raw(text.to_string()));
    }
}

impl TemplateParser<'_, '_> {
    fn parse(mut self) -> Result<Template, SpecError> {
        let t = self.sequence(false)?;
        if self.pos < self.src.len() {
            let c = self.rest().chars().next().unwrap();
            return Err(self.err(self.pos, &c.to_string(), "unexpected character in template"));
        }
        Ok(t)
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn err(&self, pos: usize, token: &str, message: &str) -> SpecError {
        self.lexer.error(self.base + pos, token, message)
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn sequence(&mut self, nested: bool) -> Result<Template, SpecError> {
        let mut pieces: Vec<Piece> = Vec::new();
        self.skip_ws();
        loop {
            let rest = self.rest();
            let Some(c) = rest.chars().next() else {
                if nested {
                    return Err(self.err(self.pos, "end of line", "unterminated conditional"));
                }
                break;
            };
            if nested && (c == '|' || c == ']') {
                break;
            }
            if nested && rest.starts_with("->") {
                return Err(self.err(self.pos, "->", "unexpected `->` in template branch"));
            }
            match c {
                '"' => {
                    let (s, len) = self.lexer.scan_string(self.base + self.pos)?;
                    self.pos += len;
                    pieces.push(Piece::Fixed(Template::Literal(s)));
                }
                '[' => {
                    self.pos += 1;
                    pieces.push(Piece::Fixed(self.conditional()?));
                }
                ']' | '|' => {
                    return Err(self.err(self.pos, &c.to_string(), "unexpected character in template"))
                }
                c if c.is_ascii_lowercase() || c == '_' => {
                    let len = rest
                        .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                        .unwrap_or(rest.len());
                    let word = rest[..len].to_string();
                    self.pos += len;
                    if word == "join" && self.rest().starts_with('(') {
                        pieces.push(Piece::Fixed(self.join()?));
                    } else {
                        pieces.push(Piece::Fixed(Template::Field(word)));
                    }
                }
                c if c.is_ascii_alphanumeric() => {
                    // Upper-case words and digits are literal text.
                    let len = rest
                        .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                        .unwrap_or(rest.len());
                    push_raw(&mut pieces, &rest[..len]);
                    self.pos += len;
                }
                c => {
                    push_raw(&mut pieces, &c.to_string());
                    self.pos += c.len_utf8();
                }
            }
        }
        // Whitespace is insignificant at sequence boundaries.
        if let Some(Piece::Raw(last)) = pieces.last_mut() {
            let trimmed = last.trim_end().len();
            last.truncate(trimmed);
        }
        Ok(Template::seq(pieces.into_iter().map(|p| match p {
            Piece::Raw(s) => Template::Literal(s),
            Piece::Fixed(t) => t,
        })))
    }

    fn ident(&mut self) -> Option<String> {
        let rest = self.rest();
        let len = rest
            .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
            .unwrap_or(rest.len());
        if len == 0 || !rest.starts_with(|c: char| c.is_ascii_lowercase() || c == '_') {
            return None;
        }
        let word = rest[..len].to_string();
        self.pos += len;
        Some(word)
    }

    fn expect_char(&mut self, c: char) -> Result<(), SpecError> {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += 1;
            Ok(())
        } else {
            let found = self
                .rest()
                .chars()
                .next()
                .map(|c| c.to_string())
                .unwrap_or_else(|| "end of line".into());
            Err(self.err(self.pos, &found, &format!("expected `{c}`")))
        }
    }

    fn join(&mut self) -> Result<Template, SpecError> {
        self.expect_char('(')?;
        self.skip_ws();
        let field = self
            .ident()
            .ok_or_else(|| self.err(self.pos, self.rest(), "expected a list field name"))?;
        self.expect_char(',')?;
        self.skip_ws();
        if !self.rest().starts_with('"') {
            return Err(self.err(self.pos, self.rest(), "expected a quoted separator"));
        }
        let (separator, len) = self.lexer.scan_string(self.base + self.pos)?;
        self.pos += len;
        self.expect_char(')')?;
        Ok(Template::Join { field, separator })
    }

    fn conditional(&mut self) -> Result<Template, SpecError> {
        self.skip_ws();
        let field = self
            .ident()
            .ok_or_else(|| self.err(self.pos, self.rest(), "expected a guard field"))?;
        self.expect_char('.')?;
        let accessor = self.ident().unwrap_or_default();
        let subject = match accessor.as_str() {
            "count" => GuardSubject::Count(field),
            "value" => GuardSubject::Value(field),
            _ => {
                return Err(self.err(
                    self.pos,
                    &accessor,
                    "guards support only `.count` and `.value`",
                ))
            }
        };
        self.skip_ws();
        let op = self.guard_op()?;
        self.skip_ws();
        let literal = self.guard_literal()?;
        self.skip_ws();
        if let Some(r) = self.rest().strip_prefix("->") {
            self.pos = self.src.len() - r.len();
        } else if let Some(r) = self.rest().strip_prefix('→') {
            self.pos = self.src.len() - r.len();
        } else {
            return Err(self.err(self.pos, self.rest(), "expected `->`"));
        }
        let then = self.sequence(true)?;
        self.expect_char('|')?;
        let otherwise = self.sequence(true)?;
        self.expect_char(']')?;
        Ok(Template::Cond {
            guard: Guard {
                subject,
                op,
                literal,
            },
            then: Box::new(then),
            otherwise: Box::new(otherwise),
        })
    }

    fn guard_op(&mut self) -> Result<CmpOp, SpecError> {
        let table: [(&str, CmpOp); 10] = [
            ("/=", CmpOp::Ne),
            ("!=", CmpOp::Ne),
            ("≠", CmpOp::Ne),
            ("<=", CmpOp::Le),
            ("≤", CmpOp::Le),
            (">=", CmpOp::Ge),
            ("≥", CmpOp::Ge),
            ("=", CmpOp::Eq),
            ("<", CmpOp::Lt),
            (">", CmpOp::Gt),
        ];
        for (text, op) in table {
            if self.rest().starts_with(text) {
                self.pos += text.len();
                return Ok(op);
            }
        }
        Err(self.err(self.pos, self.rest(), "expected a comparison operator"))
    }

    fn guard_literal(&mut self) -> Result<Literal, SpecError> {
        let rest = self.rest();
        if rest.starts_with('"') {
            let (s, len) = self.lexer.scan_string(self.base + self.pos)?;
            self.pos += len;
            return Ok(Literal::Text(s));
        }
        let neg = rest.starts_with('-');
        let digits = &rest[neg as usize..];
        let len = digits
            .find(|c: char| !c.is_ascii_digit())
            .unwrap_or(digits.len());
        if len == 0 {
            return Err(self.err(self.pos, rest, "expected an integer or string literal"));
        }
        let value: i64 = digits[..len]
            .parse()
            .map_err(|_| self.err(self.pos, &digits[..len], "integer literal out of range"))?;
        self.pos += neg as usize + len;
        Ok(Literal::Int(if neg { -value } else { value }))
    }
}
