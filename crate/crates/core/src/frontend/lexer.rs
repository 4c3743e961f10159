use super::error::{Loc, ParseError, ParseErrorKind};

#[derive(Clone, Debug, PartialEq)]
pub enum Tok {
    Utry,
    Ident(String),
    Int(String),
    Dot,
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LAngle,
    RAngle,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Tilde,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Utry => "`utry`".into(),
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(s) => format!("integer `{s}`"),
            Tok::Eof => "end of input".into(),
            other => format!("`{}`", other.symbol()),
        }
    }

    fn symbol(&self) -> &'static str {
        match self {
            Tok::Dot => ".",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::LAngle => "<",
            Tok::RAngle => ">",
            Tok::Comma => ",",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Caret => "^",
            Tok::Tilde => "~",
            _ => "",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

/// Greek and Coptic plus Greek Extended blocks.
pub fn is_greek(c: char) -> bool {
    matches!(c, '\u{0370}'..='\u{03FF}' | '\u{1F00}'..='\u{1FFF}')
}

pub fn is_letter(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_' || is_greek(c)
}

/// ASCII digits and the Unicode subscript digits `₀`..`₉` (identifiers only).
fn is_ident_digit(c: char) -> bool {
    c.is_ascii_digit() || ('\u{2080}'..='\u{2089}').contains(&c)
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);
    while let Some(&c) = chars.peek() {
        let loc = Loc::new(line, col);
        if c == '\n' {
            chars.next();
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            chars.next();
            col += 1;
            continue;
        }
        if c == '#' {
            while let Some(&c) = chars.peek() {
                if c == '\n' {
                    break;
                }
                chars.next();
                col += 1;
            }
            continue;
        }
        if is_letter(c) {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if is_letter(c) || is_ident_digit(c) {
                    s.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            let tok = if s == "utry" { Tok::Utry } else { Tok::Ident(s) };
            out.push(Token { tok, loc });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&c) = chars.peek() {
                if c.is_ascii_digit() {
                    s.push(c);
                    chars.next();
                    col += 1;
                } else {
                    break;
                }
            }
            out.push(Token { tok: Tok::Int(s), loc });
            continue;
        }
        let tok = match c {
            '.' => Tok::Dot,
            '(' => Tok::LParen,
            ')' => Tok::RParen,
            '{' => Tok::LBrace,
            '}' => Tok::RBrace,
            '[' => Tok::LBracket,
            ']' => Tok::RBracket,
            '<' => Tok::LAngle,
            '>' => Tok::RAngle,
            ',' => Tok::Comma,
            '+' => Tok::Plus,
            '-' => Tok::Minus,
            '*' => Tok::Star,
            '/' => Tok::Slash,
            '^' => Tok::Caret,
            '~' => Tok::Tilde,
            other => {
                return Err(ParseError::new(ParseErrorKind::Lex, loc, format!("unexpected character `{other}`")));
            }
        };
        chars.next();
        col += 1;
        out.push(Token { tok, loc });
    }
    out.push(Token { tok: Tok::Eof, loc: Loc::new(line, col) });
    Ok(out)
}
