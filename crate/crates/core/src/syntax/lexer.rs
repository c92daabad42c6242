use super::error::{ErrorKind, SyntaxError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(u32),
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Comma,
    Colon,
    Dot,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Diamond,
    /// `<>_name`
    DiamondIn(String),
    Eq,
    Lt,
    Le,
    Gt,
    Ge,
    Minus,
    /// `+inf`
    PlusInf,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(n) => format!("`{n}`"),
            Tok::DiamondIn(s) => format!("`<>_{s}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrack => "[",
            Tok::RBrack => "]",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Comma => ",",
            Tok::Colon => ":",
            Tok::Dot => ".",
            Tok::Bang => "!",
            Tok::Amp => "&",
            Tok::Pipe => "|",
            Tok::Arrow => "->",
            Tok::Diamond => "<>",
            Tok::Eq => "=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Minus => "-",
            Tok::PlusInf => "+inf",
            _ => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
    pub column: usize,
    /// Byte range in the source.
    pub start: usize,
    pub end: usize,
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let chars: Vec<(usize, char)> = src.char_indices().collect();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;
    let byte_at = |i: usize| chars.get(i).map(|c| c.0).unwrap_or(src.len());

    while i < chars.len() {
        let c = chars[i].1;
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i].1 != '\n' {
                i += 1;
            }
            continue;
        }
        let (start_line, start_col, start) = (line, col, i);
        let peek = |k: usize| chars.get(i + k).map(|c| c.1);
        let tok = if is_ident_start(c) {
            let mut j = i;
            while j < chars.len() && is_ident_char(chars[j].1) {
                j += 1;
            }
            let s: String = chars[i..j].iter().map(|c| c.1).collect();
            i = j;
            Tok::Ident(s)
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            let s: String = chars[i..j].iter().map(|c| c.1).collect();
            if j < chars.len() && is_ident_start(chars[j].1) {
                return Err(SyntaxError::new(line, col, ErrorKind::UnexpectedChar(chars[j].1)));
            }
            let n = s
                .parse::<u32>()
                .map_err(|_| SyntaxError::new(line, col, ErrorKind::IntegerOverflow(s.clone())))?;
            i = j;
            Tok::Int(n)
        } else {
            let (tok, len) = match (c, peek(1)) {
                ('<', Some('>')) => {
                    if peek(2) == Some('_') && peek(3).is_some_and(is_ident_char) {
                        let mut j = i + 3;
                        while j < chars.len() && is_ident_char(chars[j].1) {
                            j += 1;
                        }
                        let s: String = chars[i + 3..j].iter().map(|c| c.1).collect();
                        (Tok::DiamondIn(s), j - i)
                    } else {
                        (Tok::Diamond, 2)
                    }
                }
                ('<', Some('=')) => (Tok::Le, 2),
                ('>', Some('=')) => (Tok::Ge, 2),
                ('-', Some('>')) => (Tok::Arrow, 2),
                ('+', Some('i')) if peek(2) == Some('n') && peek(3) == Some('f') => {
                    if peek(4).is_some_and(is_ident_char) {
                        return Err(SyntaxError::new(line, col, ErrorKind::UnexpectedChar('+')));
                    }
                    (Tok::PlusInf, 4)
                }
                ('<', _) => (Tok::Lt, 1),
                ('>', _) => (Tok::Gt, 1),
                ('=', _) => (Tok::Eq, 1),
                ('-', _) => (Tok::Minus, 1),
                ('(', _) => (Tok::LParen, 1),
                (')', _) => (Tok::RParen, 1),
                ('[', _) => (Tok::LBrack, 1),
                (']', _) => (Tok::RBrack, 1),
                ('{', _) => (Tok::LBrace, 1),
                ('}', _) => (Tok::RBrace, 1),
                (',', _) => (Tok::Comma, 1),
                (':', _) => (Tok::Colon, 1),
                ('.', _) => (Tok::Dot, 1),
                ('!', _) => (Tok::Bang, 1),
                ('&', _) => (Tok::Amp, 1),
                ('|', _) => (Tok::Pipe, 1),
                _ => return Err(SyntaxError::new(line, col, ErrorKind::UnexpectedChar(c))),
            };
            i += len;
            tok
        };
        col += i - start;
        out.push(Token {
            tok,
            line: start_line,
            column: start_col,
            start: byte_at(start),
            end: byte_at(i),
        });
    }
    out.push(Token { tok: Tok::Eof, line, column: col, start: src.len(), end: src.len() });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn diamond_with_interval_subscript() {
        assert_eq!(
            toks("<>_school_time ReturnBook"),
            vec![Tok::DiamondIn("school_time".into()), Tok::Ident("ReturnBook".into()), Tok::Eof]
        );
        assert_eq!(toks("<> p"), vec![Tok::Diamond, Tok::Ident("p".into()), Tok::Eof]);
    }

    #[test]
    fn interval_delimiters() {
        assert_eq!(
            toks("Graduate+inf A-+inf B-C"),
            vec![
                Tok::Ident("Graduate".into()),
                Tok::PlusInf,
                Tok::Ident("A".into()),
                Tok::Minus,
                Tok::PlusInf,
                Tok::Ident("B".into()),
                Tok::Minus,
                Tok::Ident("C".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("# header\n  bbc >= 2 -> x").unwrap();
        assert_eq!((t[0].line, t[0].column), (2, 3));
        assert_eq!(t[1].tok, Tok::Ge);
        assert_eq!(t[3].tok, Tok::Arrow);
    }

    #[test]
    fn rejects_stray_characters() {
        let e = tokenize("action A\n  $").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        assert!(tokenize("30DaysAfter").is_err());
    }
}
