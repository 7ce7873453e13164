use crate::diag::{Code, Diagnostic, Span};
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    /// Numeric literal with its source text (path segments like `joints.0`
    /// need the raw digits).
    Number(f64, String),
    Str(String),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Dot,
    Assign,
    ColonAssign,
    Arrow,
    Plus,
    Minus,
    Star,
    Slash,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Number(_, s) => format!("number `{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Eof => "end of file".into(),
            other => format!("`{}`", punct(other)),
        }
    }
}

fn punct(t: &Tok) -> &'static str {
    match t {
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBracket => "[",
        Tok::RBracket => "]",
        Tok::Semi => ";",
        Tok::Comma => ",",
        Tok::Dot => ".",
        Tok::Assign => "=",
        Tok::ColonAssign => ":=",
        Tok::Arrow => "->",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Star => "*",
        Tok::Slash => "/",
        Tok::Lt => "<",
        Tok::Le => "<=",
        Tok::Gt => ">",
        Tok::Ge => ">=",
        Tok::EqEq => "==",
        Tok::Ne => "!=",
        _ => "?",
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: Span,
}

pub(crate) fn lex(text: &str, file: &Path) -> (Vec<Token>, Vec<Diagnostic>) {
    let chars: Vec<char> = text.chars().collect();
    let mut toks = Vec::new();
    let mut diags = Vec::new();
    let mut i = 0usize;
    let mut line = 1u32;
    let mut col = 1u32;

    // Columns count chars; a CR before LF is skipped like whitespace.
    macro_rules! bump {
        () => {{
            let c = chars[i];
            i += 1;
            if c == '\n' {
                line += 1;
                col = 1;
            } else {
                col += 1;
            }
        }};
    }

    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            bump!();
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                bump!();
            }
            continue;
        }
        let start = (line, col);
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                bump!();
            }
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                bump!();
            }
            if i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit() {
                s.push('.');
                bump!();
                while i < chars.len() && chars[i].is_ascii_digit() {
                    s.push(chars[i]);
                    bump!();
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = (i, line, col);
                let mut exp = String::from("e");
                bump!();
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    exp.push(chars[i]);
                    bump!();
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        exp.push(chars[i]);
                        bump!();
                    }
                    s.push_str(&exp);
                } else {
                    (i, line, col) = save;
                }
            }
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Tok::Number(v, s),
                _ => {
                    diags.push(Diagnostic::new(
                        Code::E000,
                        Span::new(file, start, (line, col)),
                        format!("numeric literal `{s}` out of range"),
                    ));
                    Tok::Number(0.0, s)
                }
            }
        } else if c == '"' {
            bump!();
            let mut s = String::new();
            let mut closed = false;
            while i < chars.len() {
                let d = chars[i];
                if d == '"' {
                    bump!();
                    closed = true;
                    break;
                }
                if d == '\n' {
                    break;
                }
                if d == '\\' && i + 1 < chars.len() {
                    bump!();
                    let e = chars[i];
                    s.push(match e {
                        'n' => '\n',
                        't' => '\t',
                        other => other,
                    });
                    bump!();
                    continue;
                }
                s.push(d);
                bump!();
            }
            if !closed {
                diags.push(Diagnostic::new(
                    Code::E000,
                    Span::new(file, start, (line, col)),
                    "unterminated string literal",
                ));
            }
            Tok::Str(s)
        } else {
            let next = chars.get(i + 1).copied();
            let (tok, width) = match (c, next) {
                (':', Some('=')) => (Tok::ColonAssign, 2),
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('=', Some('=')) => (Tok::EqEq, 2),
                ('!', Some('=')) => (Tok::Ne, 2),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBracket, 1),
                (']', _) => (Tok::RBracket, 1),
                (';', _) => (Tok::Semi, 1),
                (',', _) => (Tok::Comma, 1),
                ('.', _) => (Tok::Dot, 1),
                ('=', _) => (Tok::Assign, 1),
                ('+', _) => (Tok::Plus, 1),
                ('-', _) => (Tok::Minus, 1),
                ('*', _) => (Tok::Star, 1),
                ('/', _) => (Tok::Slash, 1),
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                _ => {
                    bump!();
                    diags.push(Diagnostic::new(
                        Code::E000,
                        Span::new(file, start, (line, col)),
                        format!("unexpected character `{c}`"),
                    ));
                    continue;
                }
            };
            for _ in 0..width {
                bump!();
            }
            tok
        };
        toks.push(Token { tok, span: Span::new(file, start, (line, col)) });
    }
    toks.push(Token { tok: Tok::Eof, span: Span::new(file, (line, col), (line, col)) });
    (toks, diags)
}
