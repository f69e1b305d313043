//! Tokenizer for the Python subset generated snippets are written in.

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Name(String),
    Int(i64),
    Float(f64),
    /// String literal; `formatted` marks f-strings.
    Str {
        value: String,
        formatted: bool,
    },
    Op(&'static str),
    Newline,
    Indent,
    Dedent,
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}, column {col}: {message}")]
pub struct SyntaxError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

const OPS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", "**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", ":=",
    "<<", ">>", "+", "-", "*", "/", "%", "<", ">", "=", "(", ")", "[", "]", "{", "}", ",", ":", ".", ";", "@", "&", "|", "^", "~",
];

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    Lexer { chars: src.chars().collect(), pos: 0, line: 1, col: 1, out: Vec::new() }.run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
    out: Vec<Token>,
}

impl Lexer {
    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, SyntaxError> {
        Err(SyntaxError { line: self.line, col: self.col, message: message.into() })
    }

    fn push(&mut self, tok: Tok, line: usize, col: usize) {
        self.out.push(Token { tok, line, col });
    }

    fn run(mut self) -> Result<Vec<Token>, SyntaxError> {
        let mut indents = vec![0usize];
        let mut depth = 0usize;
        let mut at_line_start = true;

        loop {
            if at_line_start && depth == 0 {
                let mut width = 0;
                while let Some(c) = self.peek(0) {
                    match c {
                        ' ' => width += 1,
                        '\t' => width = (width / 8 + 1) * 8,
                        '\x0c' => width = 0,
                        _ => break,
                    }
                    self.bump();
                }
                match self.peek(0) {
                    None => break,
                    Some('\n') | Some('#') | Some('\r') => {
                        self.skip_comment();
                        if self.peek(0) == Some('\r') {
                            self.bump();
                        }
                        if self.peek(0) == Some('\n') {
                            self.bump();
                        }
                        continue;
                    }
                    Some('\\') if self.peek(1) == Some('\n') => {
                        self.bump();
                        self.bump();
                        continue;
                    }
                    _ => {}
                }
                let current = *indents.last().unwrap();
                if width > current {
                    indents.push(width);
                    self.push(Tok::Indent, self.line, 1);
                } else {
                    while width < *indents.last().unwrap() {
                        indents.pop();
                        self.push(Tok::Dedent, self.line, 1);
                    }
                    if width != *indents.last().unwrap() {
                        return self.err("unindent does not match any outer indentation level");
                    }
                }
                at_line_start = false;
            }

            let Some(c) = self.peek(0) else { break };
            let (line, col) = (self.line, self.col);
            match c {
                ' ' | '\t' | '\r' | '\x0c' => {
                    self.bump();
                }
                '#' => self.skip_comment(),
                '\n' => {
                    self.bump();
                    if depth == 0 {
                        if !matches!(self.out.last().map(|t| &t.tok), Some(Tok::Newline) | None) {
                            self.push(Tok::Newline, line, col);
                        }
                        at_line_start = true;
                    }
                }
                '\\' => {
                    self.bump();
                    if self.peek(0) == Some('\r') {
                        self.bump();
                    }
                    if self.bump() != Some('\n') {
                        return self.err("unexpected character after line continuation");
                    }
                }
                c if c.is_ascii_digit() || (c == '.' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) => {
                    let tok = self.number()?;
                    self.push(tok, line, col);
                }
                c if c == '_' || c.is_alphabetic() => {
                    let mut name = String::new();
                    while let Some(c) = self.peek(0) {
                        if c == '_' || c.is_alphanumeric() {
                            name.push(c);
                            self.bump();
                        } else {
                            break;
                        }
                    }
                    if matches!(self.peek(0), Some('\'' | '"')) && is_string_prefix(&name) {
                        let lower = name.to_ascii_lowercase();
                        let value = self.string(lower.contains('r'))?;
                        if lower.contains('b') {
                            return self.err("bytes literals are not supported");
                        }
                        self.push(Tok::Str { value, formatted: lower.contains('f') }, line, col);
                    } else {
                        self.push(Tok::Name(name), line, col);
                    }
                }
                '\'' | '"' => {
                    let value = self.string(false)?;
                    self.push(Tok::Str { value, formatted: false }, line, col);
                }
                _ => {
                    let rest: String = self.chars[self.pos..self.chars.len().min(self.pos + 3)].iter().collect();
                    let Some(op) = OPS.iter().find(|op| rest.starts_with(**op)) else {
                        return self.err(format!("unexpected character {c:?}"));
                    };
                    for _ in 0..op.chars().count() {
                        self.bump();
                    }
                    match *op {
                        "(" | "[" | "{" => depth += 1,
                        ")" | "]" | "}" => {
                            if depth == 0 {
                                return Err(SyntaxError { line, col, message: format!("unmatched '{op}'") });
                            }
                            depth -= 1;
                        }
                        _ => {}
                    }
                    self.push(Tok::Op(op), line, col);
                }
            }
        }

        if depth > 0 {
            return self.err("unexpected end of input inside brackets");
        }
        if !matches!(self.out.last().map(|t| &t.tok), Some(Tok::Newline) | None) {
            self.push(Tok::Newline, self.line, self.col);
        }
        while indents.len() > 1 {
            indents.pop();
            self.push(Tok::Dedent, self.line, self.col);
        }
        self.push(Tok::Eof, self.line, self.col);
        Ok(self.out)
    }

    fn skip_comment(&mut self) {
        if self.peek(0) == Some('#') {
            while let Some(c) = self.peek(0) {
                if c == '\n' {
                    break;
                }
                self.bump();
            }
        }
    }

    fn number(&mut self) -> Result<Tok, SyntaxError> {
        let mut text = String::new();
        if self.peek(0) == Some('0') && matches!(self.peek(1), Some('x' | 'X' | 'o' | 'O' | 'b' | 'B')) {
            self.bump();
            let radix = match self.bump() {
                Some('x' | 'X') => 16,
                Some('o' | 'O') => 8,
                _ => 2,
            };
            while let Some(c) = self.peek(0) {
                if c.is_digit(radix) || c == '_' {
                    if c != '_' {
                        text.push(c);
                    }
                    self.bump();
                } else {
                    break;
                }
            }
            return i64::from_str_radix(&text, radix).map(Tok::Int).or_else(|_| self.err("invalid integer literal"));
        }
        let mut is_float = false;
        while let Some(c) = self.peek(0) {
            match c {
                '0'..='9' => text.push(c),
                '_' => {}
                '.' if !is_float => {
                    is_float = true;
                    text.push(c);
                }
                'e' | 'E' => {
                    is_float = true;
                    text.push(c);
                    self.bump();
                    if let Some(s @ ('+' | '-')) = self.peek(0) {
                        text.push(s);
                        self.bump();
                    }
                    continue;
                }
                _ => break,
            }
            self.bump();
        }
        if self.peek(0).is_some_and(|c| c == 'j' || c == 'J' || c.is_alphabetic() || c == '_') {
            return self.err("invalid number literal");
        }
        if is_float {
            text.parse().map(Tok::Float).or_else(|_| self.err("invalid float literal"))
        } else {
            match text.parse::<i64>() {
                Ok(i) => Ok(Tok::Int(i)),
                Err(_) => text.parse().map(Tok::Float).or_else(|_| self.err("invalid integer literal")),
            }
        }
    }

    fn string(&mut self, raw: bool) -> Result<String, SyntaxError> {
        let quote = self.bump().unwrap();
        let triple = self.peek(0) == Some(quote) && self.peek(1) == Some(quote);
        if triple {
            self.bump();
            self.bump();
        }
        let (start_line, start_col) = (self.line, self.col);
        let mut out = String::new();
        loop {
            let Some(c) = self.bump() else {
                return Err(SyntaxError { line: start_line, col: start_col, message: "unterminated string literal".into() });
            };
            if c == quote {
                if !triple {
                    return Ok(out);
                }
                if self.peek(0) == Some(quote) && self.peek(1) == Some(quote) {
                    self.bump();
                    self.bump();
                    return Ok(out);
                }
                out.push(c);
            } else if c == '\n' && !triple {
                return Err(SyntaxError { line: start_line, col: start_col, message: "unterminated string literal".into() });
            } else if c == '\\' {
                let Some(e) = self.bump() else { continue };
                if raw {
                    out.push('\\');
                    out.push(e);
                    continue;
                }
                match e {
                    'n' => out.push('\n'),
                    't' => out.push('\t'),
                    'r' => out.push('\r'),
                    '0' => out.push('\0'),
                    '\\' => out.push('\\'),
                    '\'' => out.push('\''),
                    '"' => out.push('"'),
                    '\n' => {}
                    other => {
                        out.push('\\');
                        out.push(other);
                    }
                }
            } else {
                out.push(c);
            }
        }
    }
}

fn is_string_prefix(name: &str) -> bool {
    let lower = name.to_ascii_lowercase();
    matches!(lower.as_str(), "r" | "u" | "f" | "b" | "rb" | "br" | "fr" | "rf")
}
