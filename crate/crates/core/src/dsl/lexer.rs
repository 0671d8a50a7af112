use super::{Pos, RawDiag};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Int(i64),
    /// `?name`
    Var(String),
    Punct(&'static str),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Var(v) => format!("`?{v}`"),
            Tok::Punct(p) => format!("`{p}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub pos: Pos,
}

const PUNCT: [&str; 20] =
    ["->", "==", "!=", "<=", ">=", "≤", "≥", "{", "}", "(", ")", "[", "]", ",", ";", ":", ".", "~", "<", ">"];

/// On-demand tokenizer with one token of lookahead. Raw text capture is
/// available when no token is buffered.
pub(crate) struct Lexer<'a> {
    src: &'a str,
    offset: usize,
    line: usize,
    col: usize,
    peeked: Option<Token>,
}

impl<'a> Lexer<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        Lexer { src, offset: 0, line: 1, col: 1, peeked: None }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.offset..]
    }

    fn here(&self, len: usize) -> Pos {
        Pos { offset: self.offset, line: self.line, column: self.col, length: len }
    }

    fn bump(&mut self, bytes: usize) {
        for c in self.src[self.offset..self.offset + bytes].chars() {
            if c == '\n' {
                self.line += 1;
                self.col = 1;
            } else {
                self.col += 1;
            }
        }
        self.offset += bytes;
    }

    fn skip_trivia(&mut self, stop_at_newline: bool) {
        loop {
            let rest = self.rest();
            let Some(c) = rest.chars().next() else { return };
            if c == '#' {
                let len = rest.find('\n').unwrap_or(rest.len());
                self.bump(len);
            } else if c.is_whitespace() && !(stop_at_newline && c == '\n') {
                self.bump(c.len_utf8());
            } else {
                return;
            }
        }
    }

    pub(crate) fn peek(&mut self) -> Result<&Token, RawDiag> {
        if self.peeked.is_none() {
            let t = self.lex()?;
            self.peeked = Some(t);
        }
        Ok(self.peeked.as_ref().expect("just filled"))
    }

    pub(crate) fn next(&mut self) -> Result<Token, RawDiag> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lex(),
        }
    }

    /// Text up to the end of the line, a `;`, a `}` or a comment, trimmed.
    /// Must not be called with a buffered token.
    pub(crate) fn raw_line(&mut self) -> (String, Pos) {
        debug_assert!(self.peeked.is_none());
        self.skip_trivia(true);
        let rest = self.rest();
        let len = rest.find(['\n', ';', '}', '#']).unwrap_or(rest.len());
        let text = rest[..len].trim_end().to_string();
        let pos = self.here(text.len());
        self.bump(len);
        (text, pos)
    }

    fn lex(&mut self) -> Result<Token, RawDiag> {
        self.skip_trivia(false);
        let rest = self.rest();
        let Some(c) = rest.chars().next() else {
            return Ok(Token { tok: Tok::Eof, pos: self.here(0) });
        };
        if c == '"' {
            return self.string();
        }
        let ident_len = |s: &str| s.find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_')).unwrap_or(s.len());
        if c.is_ascii_alphabetic() || c == '_' {
            let len = ident_len(rest);
            let pos = self.here(len);
            let tok = Tok::Ident(rest[..len].to_string());
            self.bump(len);
            return Ok(Token { tok, pos });
        }
        if c == '?' && rest[1..].starts_with('"') {
            self.bump(1);
            let t = self.string()?;
            let Tok::Str(name) = t.tok else { unreachable!("string() yields strings") };
            let pos = Pos { offset: t.pos.offset - 1, column: t.pos.column - 1, length: t.pos.length + 1, ..t.pos };
            return Ok(Token { tok: Tok::Var(name), pos });
        }
        if c == '?' {
            let len = ident_len(&rest[1..]);
            if len == 0 || !rest[1..].starts_with(|ch: char| ch.is_ascii_alphabetic() || ch == '_') {
                return Err(RawDiag::at(self.here(1), "expected a variable name after `?`"));
            }
            let pos = self.here(len + 1);
            let tok = Tok::Var(rest[1..=len].to_string());
            self.bump(len + 1);
            return Ok(Token { tok, pos });
        }
        let negative = c == '-' && rest[1..].starts_with(|ch: char| ch.is_ascii_digit());
        if c.is_ascii_digit() || negative {
            let start = usize::from(negative);
            let len = start + rest[start..].find(|ch: char| !ch.is_ascii_digit()).unwrap_or(rest.len() - start);
            let pos = self.here(len);
            let value: i64 =
                rest[..len].parse().map_err(|_| RawDiag::at(pos, format!("integer `{}` is out of range", &rest[..len])))?;
            self.bump(len);
            return Ok(Token { tok: Tok::Int(value), pos });
        }
        for p in PUNCT {
            if rest.starts_with(p) {
                let pos = self.here(p.len());
                self.bump(p.len());
                let p = match p {
                    "≤" => "<=",
                    "≥" => ">=",
                    other => other,
                };
                return Ok(Token { tok: Tok::Punct(p), pos });
            }
        }
        Err(RawDiag::at(self.here(c.len_utf8()), format!("unexpected character `{c}`")))
    }

    fn string(&mut self) -> Result<Token, RawDiag> {
        let start = self.here(1);
        let rest = self.rest();
        let mut out = String::new();
        let mut chars = rest.char_indices().skip(1);
        while let Some((i, c)) = chars.next() {
            match c {
                '"' => {
                    let pos = Pos { length: i + 1, ..start };
                    self.bump(i + 1);
                    return Ok(Token { tok: Tok::Str(out), pos });
                }
                '\\' => match chars.next() {
                    Some((_, 'n')) => out.push('\n'),
                    Some((_, 't')) => out.push('\t'),
                    Some((_, '"')) => out.push('"'),
                    Some((_, '\\')) => out.push('\\'),
                    Some((j, other)) => {
                        let pos = Pos {
                            offset: start.offset + j - 1,
                            column: start.column + rest[..j - 1].chars().count(),
                            length: 1 + other.len_utf8(),
                            ..start
                        };
                        return Err(RawDiag::at(pos, format!("unknown escape `\\{other}`")));
                    }
                    None => break,
                },
                '\n' => break,
                other => out.push(other),
            }
        }
        Err(RawDiag::at(start, "unterminated string literal"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        let mut lx = Lexer::new(src);
        let mut out = Vec::new();
        loop {
            let t = lx.next().unwrap();
            if t.tok == Tok::Eof {
                return out;
            }
            out.push(t.tok);
        }
    }

    #[test]
    fn basic_tokens() {
        assert_eq!(
            toks("class A { name: ?x } # c\nedge inherits A -> B [\"l\"] -3"),
            vec![
                Tok::Ident("class".into()),
                Tok::Ident("A".into()),
                Tok::Punct("{"),
                Tok::Ident("name".into()),
                Tok::Punct(":"),
                Tok::Var("x".into()),
                Tok::Punct("}"),
                Tok::Ident("edge".into()),
                Tok::Ident("inherits".into()),
                Tok::Ident("A".into()),
                Tok::Punct("->"),
                Tok::Ident("B".into()),
                Tok::Punct("["),
                Tok::Str("l".into()),
                Tok::Punct("]"),
                Tok::Int(-3),
            ]
        );
    }

    #[test]
    fn positions_are_one_based() {
        let mut lx = Lexer::new("a\n  bb");
        lx.next().unwrap();
        let t = lx.next().unwrap();
        assert_eq!((t.pos.line, t.pos.column, t.pos.length), (2, 3, 2));
    }

    #[test]
    fn raw_line_stops_at_brace() {
        let mut lx = Lexer::new("equations P>=0, x>1 }");
        lx.next().unwrap();
        let (text, pos) = lx.raw_line();
        assert_eq!(text, "P>=0, x>1");
        assert_eq!(pos.column, 11);
        assert_eq!(lx.next().unwrap().tok, Tok::Punct("}"));
    }

    #[test]
    fn errors_have_positions() {
        let mut lx = Lexer::new("  \"abc");
        let e = lx.next().unwrap_err();
        assert_eq!((e.pos.line, e.pos.column), (1, 3));
        let mut lx = Lexer::new("x @");
        lx.next().unwrap();
        assert!(lx.next().unwrap_err().message.contains('@'));
        assert!(Lexer::new("99999999999999999999").next().is_err());
        assert!(Lexer::new("? ").next().is_err());
    }
}
