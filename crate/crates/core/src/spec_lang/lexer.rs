use super::SpecError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Upper(String),
    Lower(String),
    Int(i64),
    Str(String),
    Colon,
    Comma,
    Semi,
    Star,
    Dot,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Arrow,
    Bar,
    Assign,
    Member,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Minus,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Upper(s) | Tok::Lower(s) => s.clone(),
            Tok::Int(i) => i.to_string(),
            Tok::Str(s) => format!("{s:?}"),
            Tok::Colon => ":".into(),
            Tok::Comma => ",".into(),
            Tok::Semi => ";".into(),
            Tok::Star => "*".into(),
            Tok::Dot => ".".into(),
            Tok::LBracket => "[".into(),
            Tok::RBracket => "]".into(),
            Tok::LParen => "(".into(),
            Tok::RParen => ")".into(),
            Tok::Arrow => "->".into(),
            Tok::Bar => "|".into(),
            Tok::Assign => "<-".into(),
            Tok::Member => "in".into(),
            Tok::Eq => "=".into(),
            Tok::Ne => "/=".into(),
            Tok::Lt => "<".into(),
            Tok::Le => "<=".into(),
            Tok::Gt => ">".into(),
            Tok::Ge => ">=".into(),
            Tok::Minus => "-".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub offset: usize,
}

/// Tokenizer over DSL source. Newlines are insignificant except for
/// template lines, which are read raw through [`Lexer::raw_line`].
pub(crate) struct Lexer<'a> {
    src: &'a str,
    pos: usize,
    line_starts: Vec<usize>,
}

impl<'a> Lexer<'a> {
    pub fn new(src: &'a str) -> Self {
        let mut line_starts = vec![0];
        line_starts.extend(src.match_indices('\n').map(|(i, _)| i + 1));
        Lexer {
            src,
            pos: 0,
            line_starts,
        }
    }

    /// 1-based line and column (in characters) of a byte offset.
    pub fn line_col(&self, offset: usize) -> (usize, usize) {
        let offset = offset.min(self.src.len());
        let line = match self.line_starts.binary_search(&offset) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let col = self.src[self.line_starts[line]..offset].chars().count() + 1;
        (line + 1, col)
    }

    pub fn error(&self, offset: usize, token: &str, message: impl Into<String>) -> SpecError {
        let (line, col) = self.line_col(offset);
        SpecError::Syntax {
            line,
            col,
            token: token.to_string(),
            message: message.into(),
        }
    }

    fn peek_char(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn skip_trivia(&mut self) {
        loop {
            let rest = &self.src[self.pos..];
            if rest.starts_with("--") {
                self.pos += rest.find('\n').unwrap_or(rest.len());
                continue;
            }
            match self.peek_char() {
                Some(c) if c.is_whitespace() => self.pos += c.len_utf8(),
                _ => break,
            }
        }
    }

    pub fn next_token(&mut self) -> Result<Token, SpecError> {
        self.skip_trivia();
        let start = self.pos;
        let rest = &self.src[start..];
        let Some(c) = rest.chars().next() else {
            return Ok(Token {
                tok: Tok::Eof,
                offset: start,
            });
        };
        let two = |s: &str| rest.starts_with(s);
        let (tok, len) = if c.is_ascii_alphabetic() || c == '_' {
            let len = rest
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(rest.len());
            let word = &rest[..len];
            let tok = if word == "in" {
                Tok::Member
            } else if c.is_ascii_uppercase() {
                Tok::Upper(word.to_string())
            } else {
                Tok::Lower(word.to_string())
            };
            (tok, len)
        } else if c.is_ascii_digit() {
            let len = rest
                .find(|ch: char| !ch.is_ascii_digit())
                .unwrap_or(rest.len());
            let value = rest[..len]
                .parse::<i64>()
                .map_err(|_| self.error(start, &rest[..len], "integer literal out of range"))?;
            (Tok::Int(value), len)
        } else if c == '"' {
            let (s, len) = self.scan_string(start)?;
            (Tok::Str(s), len)
        } else if two("<-") {
            (Tok::Assign, 2)
        } else if two("->") {
            (Tok::Arrow, 2)
        } else if two("/=") || two("!=") {
            (Tok::Ne, 2)
        } else if two("<=") {
            (Tok::Le, 2)
        } else if two(">=") {
            (Tok::Ge, 2)
        } else {
            let tok = match c {
                ':' => Tok::Colon,
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '*' => Tok::Star,
                '.' => Tok::Dot,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '|' => Tok::Bar,
                '=' => Tok::Eq,
                '<' => Tok::Lt,
                '>' => Tok::Gt,
                '-' => Tok::Minus,
                '←' => Tok::Assign,
                '→' => Tok::Arrow,
                '∈' => Tok::Member,
                '≠' => Tok::Ne,
                '≤' => Tok::Le,
                '≥' => Tok::Ge,
                _ => return Err(self.error(start, &c.to_string(), "unexpected character")),
            };
            (tok, c.len_utf8())
        };
        self.pos = start + len;
        Ok(Token { tok, offset: start })
    }

    /// Scans a double-quoted string starting at `start`; returns the unescaped
    /// contents and the byte length consumed.
    pub fn scan_string(&self, start: usize) -> Result<(String, usize), SpecError> {
        let mut out = String::new();
        let mut chars = self.src[start..].char_indices().skip(1);
        while let Some((i, ch)) = chars.next() {
            match ch {
                '"' => return Ok((out, i + 1)),
                '\n' => break,
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, '"')) => out.push('"'),
                    Some((_, '\\')) => out.push('\\'),
                    Some((j, other)) => {
                        return Err(self.error(
                            start + j,
                            &other.to_string(),
                            "unknown escape sequence",
                        ))
                    }
                    None => break,
                },
                c => out.push(c),
            }
        }
        Err(self.error(start, "\"", "unterminated string literal"))
    }

    /// Returns the raw text of the rest of the current line, or of the next
    /// non-blank line when the current one is empty. Used for syntax templates.
    pub fn raw_line(&mut self) -> (usize, &'a str) {
        let rest = &self.src[self.pos..];
        let line_end = rest.find('\n').unwrap_or(rest.len());
        if !rest[..line_end].trim().is_empty() {
            let start = self.pos;
            self.pos += line_end;
            return (start, &rest[..line_end]);
        }
        let mut cursor = self.pos + line_end;
        while cursor < self.src.len() {
            cursor += 1; // newline
            let r = &self.src[cursor..];
            let end = r.find('\n').unwrap_or(r.len());
            if !r[..end].trim().is_empty() {
                self.pos = cursor + end;
                return (cursor, &r[..end]);
            }
            cursor += end;
        }
        self.pos = self.src.len();
        (self.src.len(), "")
    }
}
