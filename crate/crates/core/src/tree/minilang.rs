//! Frontend for MiniLang, the small demonstration language used to run
//! patterns end to end. Grammar: `docs/minilang.md`.
//!
//! There are no grouping parentheses; operator precedence and left
//! associativity fully determine the tree, so rendering a parsed tree with
//! the `mini` templates and parsing it again yields the same shape.

use thiserror::Error;

use super::{Child, Node, Span, Tree, TreeError};
use crate::registry::Registry;
use crate::spec_lang::Literal;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MiniLangError {
    #[error("{line}:{col}: syntax error at `{token}`: {message}")]
    Syntax {
        line: usize,
        col: usize,
        token: String,
        message: String,
    },
    #[error(transparent)]
    Tree(#[from] TreeError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(i64),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

const KEYWORDS: [&str; 6] = ["if", "else", "return", "true", "false", "null"];
const SYMBOLS: [&str; 18] = [
    "==", "!=", "<=", ">=", "(", ")", "{", "}", ",", ";", ".", "=", "<", ">", "+", "-", "*", "!",
];

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().unwrap_or("").chars().count() + 1;
    (line, col)
}

fn syntax_error(src: &str, offset: usize, token: &str, message: &str) -> MiniLangError {
    let (line, col) = line_col(src, offset);
    MiniLangError::Syntax {
        line,
        col,
        token: token.to_string(),
        message: message.to_string(),
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>, MiniLangError> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < src.len() {
        let rest = &src[pos..];
        let c = rest.chars().next().unwrap();
        if c.is_whitespace() {
            pos += c.len_utf8();
            continue;
        }
        if rest.starts_with("//") {
            pos += rest.find('\n').unwrap_or(rest.len());
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            let word = &rest[..len];
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word.to_string()),
            };
            out.push(Token {
                tok,
                span: (pos, pos + len),
            });
            pos += len;
            continue;
        }
        if c.is_ascii_digit() {
            let len = rest
                .find(|ch: char| !ch.is_ascii_digit())
                .unwrap_or(rest.len());
            let value = rest[..len]
                .parse()
                .map_err(|_| syntax_error(src, pos, &rest[..len], "integer out of range"))?;
            out.push(Token {
                tok: Tok::Int(value),
                span: (pos, pos + len),
            });
            pos += len;
            continue;
        }
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) if *s != "!" => {
                out.push(Token {
                    tok: Tok::Sym(s),
                    span: (pos, pos + s.len()),
                });
                pos += s.len();
            }
            _ => return Err(syntax_error(src, pos, &c.to_string(), "unexpected character")),
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: (src.len(), src.len()),
    });
    Ok(out)
}

/// Parses MiniLang source into a validated tree; ids follow pre-order.
pub fn parse_minilang(source: &str, reg: &Registry) -> Result<Tree, MiniLangError> {
    let tokens = tokenize(source)?;
    let mut p = Parser {
        src: source,
        tokens,
        pos: 0,
    };
    let mut stmts = Vec::new();
    while p.peek() != &Tok::Eof {
        stmts.push(p.statement()?);
    }
    let span = match (stmts.first(), stmts.last()) {
        (Some(a), Some(b)) => (a.span.unwrap().0, b.span.unwrap().1),
        _ => (0, 0),
    };
    let mut root = spanned(Node::branch("PROGRAM", vec![("stmts", Child::List(stmts))]), span);
    root.renumber();
    Ok(Tree::new(root, reg)?)
}

fn spanned(mut n: Node, span: Span) -> Node {
    n.span = Some(span);
    n
}

fn single(n: Node) -> Child {
    Child::Single(Box::new(n))
}

struct Parser<'s> {
    src: &'s str,
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: &str) -> MiniLangError {
        let t = &self.tokens[self.pos];
        let text = match &t.tok {
            Tok::Eof => "end of input".to_string(),
            _ => self.src[t.span.0..t.span.1].to_string(),
        };
        syntax_error(self.src, t.span.0, &text, message)
    }

    fn expect(&mut self, sym: &str) -> Result<Token, MiniLangError> {
        if matches!(self.peek(), Tok::Sym(s) if *s == sym) {
            Ok(self.advance())
        } else {
            Err(self.error(&format!("expected `{sym}`")))
        }
    }

    fn at_sym(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Sym(s) if *s == sym)
    }

    fn statement(&mut self) -> Result<Node, MiniLangError> {
        let start = self.tokens[self.pos].span.0;
        match self.peek().clone() {
            Tok::Kw("if") => {
                self.advance();
                self.expect("(")?;
                let cond = self.expression()?;
                self.expect(")")?;
                let (then, mut end) = self.block()?;
                let mut otherwise = Vec::new();
                if self.peek() == &Tok::Kw("else") {
                    self.advance();
                    let (stmts, e) = self.block()?;
                    otherwise = stmts;
                    end = e;
                }
                Ok(spanned(
                    Node::branch(
                        "IF",
                        vec![
                            ("cond", single(cond)),
                            ("then", Child::List(then)),
                            ("else", Child::List(otherwise)),
                        ],
                    ),
                    (start, end),
                ))
            }
            Tok::Kw("return") => {
                self.advance();
                let expr = self.expression()?;
                let end = self.expect(";")?.span.1;
                Ok(spanned(
                    Node::branch("RETURN", vec![("expr", single(expr))]),
                    (start, end),
                ))
            }
            Tok::Ident(name) if self.peek_at(1) == &Tok::Sym("=") => {
                let t = self.advance();
                self.advance();
                let lhs = spanned(Node::atom("IDENTIFIER", Literal::Text(name)), t.span);
                let rhs = self.expression()?;
                let end = self.expect(";")?.span.1;
                Ok(spanned(
                    Node::branch("ASSIGN", vec![("lhs", single(lhs)), ("rhs", single(rhs))]),
                    (start, end),
                ))
            }
            _ => {
                let call = self.expression()?;
                if !matches!(call.construct.as_str(), "CALL" | "QUALIFIED_CALL") {
                    return Err(self.error("expected `=` or `;` after a call; only calls may be used as statements"));
                }
                let end = self.expect(";")?.span.1;
                Ok(spanned(
                    Node::branch("CALL_STMT", vec![("call", single(call))]),
                    (start, end),
                ))
            }
        }
    }

    fn block(&mut self) -> Result<(Vec<Node>, usize), MiniLangError> {
        self.expect("{")?;
        let mut stmts = Vec::new();
        while !self.at_sym("}") {
            if self.peek() == &Tok::Eof {
                return Err(self.error("expected `}`"));
            }
            stmts.push(self.statement()?);
        }
        let end = self.advance().span.1;
        Ok((stmts, end))
    }

    fn expression(&mut self) -> Result<Node, MiniLangError> {
        let lhs = self.additive()?;
        let construct = match self.peek() {
            Tok::Sym("==") => "EQ_BIN_OP",
            Tok::Sym("!=") => "NEQ_BIN_OP",
            Tok::Sym("<") => "LT_BIN_OP",
            Tok::Sym("<=") => "LE_BIN_OP",
            Tok::Sym(">") => "GT_BIN_OP",
            Tok::Sym(">=") => "GE_BIN_OP",
            _ => return Ok(lhs),
        };
        self.advance();
        let rhs = self.additive()?;
        Ok(binary(construct, lhs, rhs))
    }

    fn additive(&mut self) -> Result<Node, MiniLangError> {
        let mut lhs = self.multiplicative()?;
        loop {
            let construct = match self.peek() {
                Tok::Sym("+") => "SUM",
                Tok::Sym("-") => "DIFFERENCE",
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.multiplicative()?;
            lhs = binary(construct, lhs, rhs);
        }
    }

    fn multiplicative(&mut self) -> Result<Node, MiniLangError> {
        let mut lhs = self.unary()?;
        while self.at_sym("*") {
            self.advance();
            let rhs = self.unary()?;
            lhs = binary("PRODUCT", lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, MiniLangError> {
        if self.at_sym("-") {
            let minus = self.advance();
            return match self.peek().clone() {
                Tok::Int(i) => {
                    let t = self.advance();
                    Ok(spanned(
                        Node::atom("INT_LIT", Literal::Int(-i)),
                        (minus.span.0, t.span.1),
                    ))
                }
                _ => Err(self.error("unary minus applies only to integer literals")),
            };
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Node, MiniLangError> {
        let t = self.tokens[self.pos].clone();
        let atom = |construct: &str, value: Literal| spanned(Node::atom(construct, value), t.span);
        match t.tok {
            Tok::Int(i) => {
                self.advance();
                Ok(atom("INT_LIT", Literal::Int(i)))
            }
            Tok::Kw("true") => {
                self.advance();
                Ok(atom("TRUE_LIT", Literal::Text("true".into())))
            }
            Tok::Kw("false") => {
                self.advance();
                Ok(atom("FALSE_LIT", Literal::Text("false".into())))
            }
            Tok::Kw("null") => {
                self.advance();
                Ok(atom("NULL_LIT", Literal::Text("null".into())))
            }
            Tok::Ident(name) => {
                self.advance();
                if self.at_sym("(") {
                    let routine = atom("ROUTINE", Literal::Text(name));
                    let (args, end) = self.arguments()?;
                    return Ok(spanned(
                        Node::branch("CALL", vec![("r", single(routine)), ("args", Child::List(args))]),
                        (t.span.0, end),
                    ));
                }
                let ident = atom("IDENTIFIER", Literal::Text(name));
                if self.at_sym(".") {
                    self.advance();
                    let m = self.tokens[self.pos].clone();
                    let Tok::Ident(method) = m.tok else {
                        return Err(self.error("expected a method name"));
                    };
                    self.advance();
                    if !self.at_sym("(") {
                        return Err(self.error("expected `(` after a method name"));
                    }
                    let routine = spanned(Node::atom("ROUTINE", Literal::Text(method)), m.span);
                    let (args, end) = self.arguments()?;
                    return Ok(spanned(
                        Node::branch(
                            "QUALIFIED_CALL",
                            vec![
                                ("recv", single(ident)),
                                ("r", single(routine)),
                                ("args", Child::List(args)),
                            ],
                        ),
                        (t.span.0, end),
                    ));
                }
                Ok(ident)
            }
            _ => Err(self.error("expected an expression")),
        }
    }

    fn arguments(&mut self) -> Result<(Vec<Node>, usize), MiniLangError> {
        self.expect("(")?;
        let mut args = Vec::new();
        if !self.at_sym(")") {
            loop {
                args.push(self.expression()?);
                if self.at_sym(",") {
                    self.advance();
                    continue;
                }
                break;
            }
        }
        let end = self.expect(")")?.span.1;
        Ok((args, end))
    }
}

fn binary(construct: &str, lhs: Node, rhs: Node) -> Node {
    let span = (lhs.span.unwrap().0, rhs.span.unwrap().1);
    spanned(
        Node::branch(construct, vec![("first", single(lhs)), ("second", single(rhs))]),
        span,
    )
}
