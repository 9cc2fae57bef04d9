//! Lexer for the supported JavaScript subset.
//!
//! Produces a flat token stream with byte spans into the original source.
//! Whitespace and comments are discarded; everything else is kept verbatim,
//! so concatenating token texts reproduces the non-whitespace source.

use crate::error::{Error, Result};

/// Identity of a resolved local declaration. Assigned during scope analysis.
pub type BindingId = usize;

/// Syntactic category of a lexical token.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Identifier,
    Keyword,
    Punctuator,
    NumericLiteral,
    StringLiteral,
    RegexLiteral,
    TemplateLiteral,
}

/// One lexical token.
///
/// `binding` is `None` straight out of the lexer; scope analysis fills it in
/// for every identifier occurrence that resolves to a local declaration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub kind: TokenKind,
    /// Half-open byte range `[start, end)` into the source.
    pub span: (usize, usize),
    pub binding: Option<BindingId>,
    /// Whether a line terminator appears between the previous token and this
    /// one. Drives semicolon insertion and restricted productions.
    pub nl_before: bool,
}

/// Reserved words of the supported subset. Words like `class` lex as keywords
/// even though the parser rejects the constructs, so the mangler and the
/// recovery step can never emit them as identifiers.
pub const KEYWORDS: &[&str] = &[
    "break", "case", "catch", "class", "const", "continue", "debugger", "default", "delete", "do",
    "else", "enum", "export", "extends", "false", "finally", "for", "function", "if", "import",
    "in", "instanceof", "let", "new", "null", "return", "super", "switch", "this", "throw",
    "true", "try", "typeof", "var", "void", "while", "with",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.binary_search(&word).is_ok()
}

/// Lexes `source` into a token stream.
///
/// Fails with [`Error::Lex`] (carrying the byte offset) on any character
/// sequence outside the subset: unterminated literals, template
/// substitutions, or stray non-ASCII outside literals and comments.
pub fn tokenize(source: &str) -> Result<Vec<Token>> {
    Lexer::new(source).run()
}

struct Lexer<'s> {
    src: &'s str,
    bytes: &'s [u8],
    pos: usize,
    tokens: Vec<Token>,
    nl_pending: bool,
}

impl<'s> Lexer<'s> {
    fn new(src: &'s str) -> Self {
        Lexer { src, bytes: src.as_bytes(), pos: 0, tokens: Vec::new(), nl_pending: false }
    }

    fn err(&self, offset: usize, message: &str) -> Error {
        Error::Lex { offset, message: message.to_string() }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn peek_at(&self, off: usize) -> Option<u8> {
        self.bytes.get(self.pos + off).copied()
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        let text = self.src[start..self.pos].to_string();
        self.tokens.push(Token {
            text,
            kind,
            span: (start, self.pos),
            binding: None,
            nl_before: self.nl_pending,
        });
        self.nl_pending = false;
    }

    fn run(mut self) -> Result<Vec<Token>> {
        loop {
            self.skip_trivia()?;
            let start = self.pos;
            let Some(b) = self.peek() else { break };
            match b {
                b'a'..=b'z' | b'A'..=b'Z' | b'_' | b'$' => self.lex_identifier(start),
                b'0'..=b'9' => self.lex_number(start)?,
                b'.' => {
                    if matches!(self.peek_at(1), Some(b'0'..=b'9')) {
                        self.lex_number(start)?;
                    } else {
                        self.pos += 1;
                        self.push(TokenKind::Punctuator, start);
                    }
                }
                b'"' | b'\'' => self.lex_string(start, b)?,
                b'`' => self.lex_template(start)?,
                b'/' => {
                    if self.regex_allowed() {
                        self.lex_regex(start)?;
                    } else {
                        self.lex_punctuator(start)?;
                    }
                }
                _ => self.lex_punctuator(start)?,
            }
        }
        Ok(self.tokens)
    }

    fn skip_trivia(&mut self) -> Result<()> {
        loop {
            match self.peek() {
                Some(b' ') | Some(b'\t') | Some(0x0b) | Some(0x0c) => self.pos += 1,
                Some(b'\n') | Some(b'\r') => {
                    self.nl_pending = true;
                    self.pos += 1;
                }
                Some(b'/') if self.peek_at(1) == Some(b'/') => {
                    while let Some(b) = self.peek() {
                        if b == b'\n' || b == b'\r' {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                Some(b'/') if self.peek_at(1) == Some(b'*') => {
                    let start = self.pos;
                    self.pos += 2;
                    loop {
                        match self.peek() {
                            None => return Err(self.err(start, "unterminated block comment")),
                            Some(b'*') if self.peek_at(1) == Some(b'/') => {
                                self.pos += 2;
                                break;
                            }
                            Some(b'\n') | Some(b'\r') => {
                                self.nl_pending = true;
                                self.pos += 1;
                            }
                            _ => self.pos += 1,
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn lex_identifier(&mut self, start: usize) {
        while let Some(b) = self.peek() {
            match b {
                b'a'..=b'z' | b'A'..=b'Z' | b'0'..=b'9' | b'_' | b'$' => self.pos += 1,
                _ => break,
            }
        }
        let kind = if is_keyword(&self.src[start..self.pos]) {
            TokenKind::Keyword
        } else {
            TokenKind::Identifier
        };
        self.push(kind, start);
    }

    fn lex_number(&mut self, start: usize) -> Result<()> {
        if self.peek() == Some(b'0')
            && matches!(self.peek_at(1), Some(b'x') | Some(b'X'))
        {
            self.pos += 2;
            let digits_start = self.pos;
            while matches!(self.peek(), Some(b) if b.is_ascii_hexdigit()) {
                self.pos += 1;
            }
            if self.pos == digits_start {
                return Err(self.err(start, "missing hex digits"));
            }
        } else {
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
            if self.peek() == Some(b'.') {
                self.pos += 1;
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            }
            if matches!(self.peek(), Some(b'e') | Some(b'E')) {
                let mark = self.pos;
                self.pos += 1;
                if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                    self.pos += 1;
                }
                if !matches!(self.peek(), Some(b'0'..=b'9')) {
                    return Err(self.err(mark, "missing exponent digits"));
                }
                while matches!(self.peek(), Some(b'0'..=b'9')) {
                    self.pos += 1;
                }
            }
        }
        if matches!(self.peek(), Some(b) if b.is_ascii_alphanumeric() || b == b'_' || b == b'$') {
            return Err(self.err(self.pos, "identifier character after number"));
        }
        self.push(TokenKind::NumericLiteral, start);
        Ok(())
    }

    fn lex_string(&mut self, start: usize, quote: u8) -> Result<()> {
        self.pos += 1;
        loop {
            match self.peek() {
                None => return Err(self.err(start, "unterminated string literal")),
                Some(b'\n') | Some(b'\r') => {
                    return Err(self.err(self.pos, "line break in string literal"))
                }
                Some(b'\\') => {
                    self.pos += 2;
                    if self.pos > self.bytes.len() {
                        return Err(self.err(start, "unterminated string literal"));
                    }
                }
                Some(b) if b == quote => {
                    self.pos += 1;
                    break;
                }
                Some(_) => self.pos += 1,
            }
        }
        self.push(TokenKind::StringLiteral, start);
        Ok(())
    }

    fn lex_template(&mut self, start: usize) -> Result<()> {
        self.pos += 1;
        loop {
            match self.peek() {
                None => return Err(self.err(start, "unterminated template literal")),
                Some(b'\\') => {
                    self.pos += 2;
                    if self.pos > self.bytes.len() {
                        return Err(self.err(start, "unterminated template literal"));
                    }
                }
                Some(b'$') if self.peek_at(1) == Some(b'{') => {
                    return Err(self.err(self.pos, "template substitutions are not supported"));
                }
                Some(b'`') => {
                    self.pos += 1;
                    break;
                }
                Some(_) => self.pos += 1,
            }
        }
        self.push(TokenKind::TemplateLiteral, start);
        Ok(())
    }

    fn lex_regex(&mut self, start: usize) -> Result<()> {
        self.pos += 1;
        let mut in_class = false;
        loop {
            match self.peek() {
                None => return Err(self.err(start, "unterminated regex literal")),
                Some(b'\n') | Some(b'\r') => {
                    return Err(self.err(self.pos, "line break in regex literal"))
                }
                Some(b'\\') => {
                    self.pos += 2;
                    if self.pos > self.bytes.len() {
                        return Err(self.err(start, "unterminated regex literal"));
                    }
                }
                Some(b'[') => {
                    in_class = true;
                    self.pos += 1;
                }
                Some(b']') => {
                    in_class = false;
                    self.pos += 1;
                }
                Some(b'/') if !in_class => {
                    self.pos += 1;
                    break;
                }
                Some(_) => self.pos += 1,
            }
        }
        while matches!(self.peek(), Some(b) if b.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        self.push(TokenKind::RegexLiteral, start);
        Ok(())
    }

    /// Whether `/` at the current position starts a regex literal rather than
    /// a division operator, judged from the previous significant token.
    fn regex_allowed(&self) -> bool {
        match self.tokens.last() {
            None => true,
            Some(t) => match t.kind {
                TokenKind::Identifier
                | TokenKind::NumericLiteral
                | TokenKind::StringLiteral
                | TokenKind::RegexLiteral
                | TokenKind::TemplateLiteral => false,
                TokenKind::Keyword => !matches!(t.text.as_str(), "this" | "null" | "true" | "false"),
                TokenKind::Punctuator => !matches!(t.text.as_str(), ")" | "]" | "++" | "--"),
            },
        }
    }

    fn lex_punctuator(&mut self, start: usize) -> Result<()> {
        // Longest match first.
        const PUNCTUATORS: &[&str] = &[
            ">>>=", "===", "!==", ">>>", "<<=", ">>=", "&&", "||", "==", "!=", "<=", ">=", "<<",
            ">>", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "{", "}", "(", ")",
            "[", "]", ";", ",", "<", ">", "+", "-", "*", "%", "&", "|", "^", "!", "~", "?", ":",
            "=", "/",
        ];
        let rest = &self.src[self.pos..];
        for p in PUNCTUATORS {
            if rest.starts_with(p) {
                self.pos += p.len();
                self.push(TokenKind::Punctuator, start);
                return Ok(());
            }
        }
        Err(self.err(self.pos, "unrecognizable character"))
    }
}
