use std::fmt;

use super::ParseError;

/// 1-based line and column (columns count characters, not bytes).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenKind {
    Ident(String),
    Int(u64),
    Str(String),
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    LParen,
    RParen,
    Eq,
    Comma,
    Colon,
    Tilde,
    Eof,
}

impl TokenKind {
    pub fn describe(&self) -> String {
        match self {
            TokenKind::Ident(s) => format!("identifier `{s}`"),
            TokenKind::Int(n) => format!("integer {n}"),
            TokenKind::Str(s) => format!("string {s:?}"),
            TokenKind::LBrace => "`{`".into(),
            TokenKind::RBrace => "`}`".into(),
            TokenKind::LBracket => "`[`".into(),
            TokenKind::RBracket => "`]`".into(),
            TokenKind::LParen => "`(`".into(),
            TokenKind::RParen => "`)`".into(),
            TokenKind::Eq => "`=`".into(),
            TokenKind::Comma => "`,`".into(),
            TokenKind::Colon => "`:`".into(),
            TokenKind::Tilde => "`~`".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

struct Cursor<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    pos: Pos,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_continue(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `source` into tokens, skipping whitespace and `#` comments.
/// The returned list always ends with an `Eof` token.
pub fn tokenize(source: &str) -> Result<Vec<Token>, ParseError> {
    let mut cur = Cursor {
        chars: source.chars().peekable(),
        pos: Pos { line: 1, column: 1 },
    };
    let mut tokens = Vec::new();
    loop {
        let start = cur.pos;
        let Some(c) = cur.peek() else {
            tokens.push(Token {
                kind: TokenKind::Eof,
                pos: start,
            });
            return Ok(tokens);
        };
        let kind = match c {
            c if c.is_whitespace() => {
                cur.bump();
                continue;
            }
            '#' => {
                while cur.peek().is_some_and(|c| c != '\n') {
                    cur.bump();
                }
                continue;
            }
            '{' | '}' | '[' | ']' | '(' | ')' | '=' | ',' | ':' | '~' => {
                cur.bump();
                match c {
                    '{' => TokenKind::LBrace,
                    '}' => TokenKind::RBrace,
                    '[' => TokenKind::LBracket,
                    ']' => TokenKind::RBracket,
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    '=' => TokenKind::Eq,
                    ',' => TokenKind::Comma,
                    ':' => TokenKind::Colon,
                    _ => TokenKind::Tilde,
                }
            }
            '"' => lex_string(&mut cur, start)?,
            c if c.is_ascii_digit() => {
                let mut value: u64 = 0;
                while let Some(d) = cur.peek().and_then(|c| c.to_digit(10)) {
                    value = value
                        .checked_mul(10)
                        .and_then(|v| v.checked_add(u64::from(d)))
                        .ok_or_else(|| ParseError::new(start, "integer literal is too large"))?;
                    cur.bump();
                }
                TokenKind::Int(value)
            }
            c if is_ident_start(c) => {
                let mut ident = String::new();
                while let Some(c) = cur.peek().filter(|&c| is_ident_continue(c)) {
                    ident.push(c);
                    cur.bump();
                }
                TokenKind::Ident(ident)
            }
            other => {
                return Err(ParseError::new(
                    start,
                    format!("illegal character {other:?}"),
                ))
            }
        };
        tokens.push(Token { kind, pos: start });
    }
}

fn lex_string(cur: &mut Cursor<'_>, start: Pos) -> Result<TokenKind, ParseError> {
    cur.bump();
    let mut text = String::new();
    loop {
        let here = cur.pos;
        match cur.bump() {
            None => return Err(ParseError::new(start, "unterminated string literal")),
            Some('"') => return Ok(TokenKind::Str(text)),
            Some('\\') => match cur.bump() {
                Some('"') => text.push('"'),
                Some('\\') => text.push('\\'),
                Some('n') => text.push('\n'),
                Some('t') => text.push('\t'),
                Some(other) => {
                    return Err(ParseError::new(
                        here,
                        format!("unknown escape sequence `\\{other}`"),
                    ))
                }
                None => return Err(ParseError::new(start, "unterminated string literal")),
            },
            Some(c) => text.push(c),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<TokenKind> {
        tokenize(src).unwrap().into_iter().map(|t| t.kind).collect()
    }

    #[test]
    fn minimal_assignment() {
        assert_eq!(
            kinds("patch = 36"),
            vec![
                TokenKind::Ident("patch".into()),
                TokenKind::Eq,
                TokenKind::Int(36),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn per_parent_count() {
        assert_eq!(
            kinds("1 ~ 21"),
            vec![
                TokenKind::Int(1),
                TokenKind::Tilde,
                TokenKind::Int(21),
                TokenKind::Eof
            ]
        );
    }

    #[test]
    fn unterminated_string() {
        let err = tokenize("\"basal").unwrap_err();
        assert_eq!((err.line, err.column), (1, 1));
        assert!(err.message.contains("unterminated"));
    }

    #[test]
    fn escapes_and_comments() {
        let toks = kinds("# heading\n\"he said \\\"hi\\\"\" # trailing\n");
        assert_eq!(
            toks,
            vec![TokenKind::Str("he said \"hi\"".into()), TokenKind::Eof]
        );
    }

    #[test]
    fn positions_count_characters() {
        let toks = tokenize("é = 1").unwrap_err();
        assert_eq!((toks.line, toks.column), (1, 1));
        let toks = tokenize("\"é\" @").unwrap_err();
        assert_eq!((toks.line, toks.column), (1, 5));
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!(toks[1].pos, Pos { line: 2, column: 3 });
    }

    #[test]
    fn integer_overflow_is_an_error() {
        assert!(tokenize("99999999999999999999999").is_err());
        assert_eq!(kinds("18446744073709551615")[0], TokenKind::Int(u64::MAX));
    }
}
