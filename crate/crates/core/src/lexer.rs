//! Tokenizer shared by the model DSL and the workbook formula grammar.

use std::fmt;

/// 1-based position of a token or error in the source text.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub column: usize,
    pub length: usize,
}

impl SourceSpan {
    pub fn new(line: usize, column: usize, length: usize) -> Self {
        SourceSpan {
            line: line.max(1),
            column: column.max(1),
            length: length.max(1),
        }
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

impl ParseError {
    pub fn new(span: SourceSpan, message: impl Into<String>) -> Self {
        ParseError {
            span,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(String),
    Str(String),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Colon,
    Bang,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    Arrow,
    Newline,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(s) => format!("number `{s}`"),
            Tok::Str(_) => "string".to_string(),
            Tok::Newline => "end of line".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => format!("'{}'", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Bang => "!",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Eq => "=",
            Tok::Ne => "<>",
            Tok::Arrow => "->",
            _ => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

/// Splits `src` into tokens. `#` comments are honoured only when
/// `comments` is set (the DSL); formula text has no comment syntax.
pub fn tokenize(src: &str, comments: bool) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);

    while i < chars.len() {
        let c = chars[i];
        let start_col = col;
        let single = |tok: Tok| Token {
            tok,
            span: SourceSpan::new(line, start_col, 1),
        };
        match c {
            '\n' => {
                out.push(single(Tok::Newline));
                i += 1;
                line += 1;
                col = 1;
            }
            '\r' => {
                // CRLF: the '\n' that follows produces the newline token.
                i += 1;
                col += 1;
            }
            ' ' | '\t' => {
                i += 1;
                col += 1;
            }
            '#' if comments => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
            }
            '"' => {
                let mut text = String::new();
                let mut j = i + 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') | Some('\r') => {
                            return Err(ParseError::new(
                                SourceSpan::new(line, start_col, j - i),
                                "unterminated string",
                            ));
                        }
                        Some('"') => break,
                        Some('\\') => match chars.get(j + 1) {
                            Some(&e @ ('"' | '\\')) => {
                                text.push(e);
                                j += 2;
                            }
                            _ => {
                                return Err(ParseError::new(
                                    SourceSpan::new(line, col + (j - i), 1),
                                    "invalid escape; only \\\" and \\\\ are allowed",
                                ));
                            }
                        },
                        Some(&ch) => {
                            text.push(ch);
                            j += 1;
                        }
                    }
                }
                let len = j + 1 - i;
                out.push(Token {
                    tok: Tok::Str(text),
                    span: SourceSpan::new(line, start_col, len),
                });
                i = j + 1;
                col += len;
            }
            c if c.is_ascii_digit() => {
                let mut j = i;
                while j < chars.len() && chars[j].is_ascii_digit() {
                    j += 1;
                }
                if j + 1 < chars.len() && chars[j] == '.' && chars[j + 1].is_ascii_digit() {
                    j += 1;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                }
                if j < chars.len()
                    && chars[j] == ','
                    && chars.get(j + 1).is_some_and(|c| c.is_ascii_digit())
                {
                    return Err(ParseError::new(
                        SourceSpan::new(line, col + (j - i), 1),
                        "thousands separators are not allowed in numbers",
                    ));
                }
                let text: String = chars[i..j].iter().collect();
                let len = j - i;
                out.push(Token {
                    tok: Tok::Number(text),
                    span: SourceSpan::new(line, start_col, len),
                });
                i = j;
                col += len;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut j = i;
                while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                    j += 1;
                }
                let text: String = chars[i..j].iter().collect();
                let len = j - i;
                out.push(Token {
                    tok: Tok::Ident(text),
                    span: SourceSpan::new(line, start_col, len),
                });
                i = j;
                col += len;
            }
            _ => {
                let next = chars.get(i + 1).copied();
                let (tok, len) = match (c, next) {
                    ('<', Some('=')) => (Tok::Le, 2),
                    ('<', Some('>')) => (Tok::Ne, 2),
                    ('>', Some('=')) => (Tok::Ge, 2),
                    ('-', Some('>')) => (Tok::Arrow, 2),
                    ('<', _) => (Tok::Lt, 1),
                    ('>', _) => (Tok::Gt, 1),
                    ('=', _) => (Tok::Eq, 1),
                    ('+', _) => (Tok::Plus, 1),
                    ('-', _) => (Tok::Minus, 1),
                    ('*', _) => (Tok::Star, 1),
                    ('/', _) => (Tok::Slash, 1),
                    ('(', _) => (Tok::LParen, 1),
                    (')', _) => (Tok::RParen, 1),
                    ('{', _) => (Tok::LBrace, 1),
                    ('}', _) => (Tok::RBrace, 1),
                    (';', _) => (Tok::Semi, 1),
                    (':', _) => (Tok::Colon, 1),
                    ('!', _) => (Tok::Bang, 1),
                    _ => {
                        return Err(ParseError::new(
                            SourceSpan::new(line, start_col, 1),
                            format!("unexpected character '{c}'"),
                        ));
                    }
                };
                out.push(Token {
                    tok,
                    span: SourceSpan::new(line, start_col, len),
                });
                i += len;
                col += len;
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        span: SourceSpan::new(line, col, 1),
    });
    Ok(out)
}

/// Cursor over a token vector with the usual peek/expect helpers.
pub struct Cursor {
    tokens: Vec<Token>,
    pos: usize,
}

impl Cursor {
    pub fn new(tokens: Vec<Token>) -> Self {
        Cursor { tokens, pos: 0 }
    }

    pub fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    pub fn peek_tok(&self) -> &Tok {
        &self.peek().tok
    }

    pub fn peek_nth(&self, n: usize) -> &Tok {
        &self.tokens[(self.pos + n).min(self.tokens.len() - 1)].tok
    }

    pub fn bump(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    pub fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek_tok() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    pub fn expect(&mut self, tok: &Tok, what: &str) -> Result<Token, ParseError> {
        if self.peek_tok() == tok {
            Ok(self.bump())
        } else {
            Err(self.unexpected(what))
        }
    }

    pub fn unexpected(&self, what: &str) -> ParseError {
        let t = self.peek();
        ParseError::new(
            t.span,
            format!("expected {what}, found {}", t.tok.describe()),
        )
    }

    pub fn skip_newlines(&mut self) {
        while self.peek_tok() == &Tok::Newline {
            self.bump();
        }
    }
}
