use super::ast::Span;
use super::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    /// Source text of a numeric literal, sign included.
    Number(String),
    Arrow,
    LArrow,
    Union,
    Sym(char),
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Number(s) => write!(f, "number {s}"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::LArrow => f.write_str("`<-`"),
            Tok::Union => f.write_str("`∪`"),
            Tok::Sym(c) => write!(f, "`{c}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub span: Span,
}

fn is_ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

pub fn lex(text: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    let bump = |i: &mut usize, line: &mut usize, col: &mut usize| {
        if chars[*i] == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
        *i += 1;
    };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            bump(&mut i, &mut line, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump(&mut i, &mut line, &mut col);
            }
            continue;
        }
        let next = chars.get(i + 1).copied();
        let negative = (c == '-' || c == '−') && next.is_some_and(|d| d.is_ascii_digit() || d == '.');
        if c.is_ascii_digit() || negative || (c == '.' && next.is_some_and(|d| d.is_ascii_digit())) {
            let mut s = String::new();
            if negative {
                s.push('-');
                bump(&mut i, &mut line, &mut col);
            }
            let mut seen_exp = false;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = seen_exp && (d == '+' || d == '-') && matches!(s.chars().last(), Some('e' | 'E'));
                if d.is_ascii_digit() || d == '.' || exp_sign {
                    s.push(d);
                } else if (d == 'e' || d == 'E') && !seen_exp {
                    seen_exp = true;
                    s.push(d);
                } else {
                    break;
                }
                bump(&mut i, &mut line, &mut col);
            }
            if s.parse::<f64>().is_err() {
                return Err(Diagnostic::error(span, format!("malformed number `{s}`")));
            }
            out.push(Token { tok: Tok::Number(s), span });
            continue;
        }
        if is_ident_start(c) {
            let mut s = String::new();
            while i < chars.len() && is_ident_char(chars[i]) {
                s.push(chars[i]);
                bump(&mut i, &mut line, &mut col);
            }
            out.push(Token { tok: Tok::Ident(s), span });
            continue;
        }
        let tok = match (c, next) {
            ('-', Some('>')) | ('<', Some('-')) => {
                bump(&mut i, &mut line, &mut col);
                if c == '-' {
                    Tok::Arrow
                } else {
                    Tok::LArrow
                }
            }
            ('∪' | '|', _) => Tok::Union,
            ('{' | '}' | '(' | ')' | '[' | ']' | ',' | ';' | ':' | '=' | '.', _) => Tok::Sym(c),
            _ => return Err(Diagnostic::error(span, format!("unexpected character `{c}`"))),
        };
        bump(&mut i, &mut line, &mut col);
        out.push(Token { tok, span });
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, col } });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        lex(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn arrows_and_numbers() {
        assert_eq!(
            toks("a->-0.313 <- 1e-3 −2"),
            vec![
                Tok::Ident("a".into()),
                Tok::Arrow,
                Tok::Number("-0.313".into()),
                Tok::LArrow,
                Tok::Number("1e-3".into()),
                Tok::Number("-2".into()),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn comments_and_spans() {
        let t = lex("# header\n  s' ∪ x").unwrap();
        assert_eq!(t[0].tok, Tok::Ident("s'".into()));
        assert_eq!((t[0].span.line, t[0].span.col), (2, 3));
        assert_eq!(t[1].tok, Tok::Union);
        assert_eq!((t[2].span.line, t[2].span.col), (2, 8));
    }

    #[test]
    fn bad_character() {
        let d = lex("box @").unwrap_err();
        assert_eq!((d.line, d.col), (1, 5));
    }
}
