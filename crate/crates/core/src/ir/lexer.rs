use super::parser::{ErrorCode, ParseError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    /// Identifier; may contain `.` and `$` (qualified names, `x.f`).
    Ident(String),
    Str(String),
    Number(u32),
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Colon,
    Eq,
    Star,
    Newline,
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

fn ident_start(c: char) -> bool {
    c.is_alphabetic() || c == '_' || c == '$'
}

fn ident_part(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '$' || c == '.'
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    for (lineno, line) in src.lines().enumerate() {
        let line_no = lineno + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            let single = |tok| Token { tok, line: line_no, col };
            match c {
                '#' => break,
                c if c.is_whitespace() => {
                    i += 1;
                }
                '{' => { out.push(single(Tok::LBrace)); i += 1; }
                '}' => { out.push(single(Tok::RBrace)); i += 1; }
                '(' => { out.push(single(Tok::LParen)); i += 1; }
                ')' => { out.push(single(Tok::RParen)); i += 1; }
                '[' => { out.push(single(Tok::LBracket)); i += 1; }
                ']' => { out.push(single(Tok::RBracket)); i += 1; }
                ',' => { out.push(single(Tok::Comma)); i += 1; }
                ':' => { out.push(single(Tok::Colon)); i += 1; }
                '=' => { out.push(single(Tok::Eq)); i += 1; }
                '*' => { out.push(single(Tok::Star)); i += 1; }
                '"' => {
                    let mut text = String::new();
                    i += 1;
                    let mut closed = false;
                    while i < chars.len() {
                        match chars[i] {
                            '"' => {
                                closed = true;
                                i += 1;
                                break;
                            }
                            '\\' if i + 1 < chars.len() => {
                                text.push(match chars[i + 1] {
                                    'n' => '\n',
                                    't' => '\t',
                                    other => other,
                                });
                                i += 2;
                            }
                            other => {
                                text.push(other);
                                i += 1;
                            }
                        }
                    }
                    if !closed {
                        return Err(ParseError::new(ErrorCode::Syntax, line_no, col, "unterminated string literal"));
                    }
                    out.push(single(Tok::Str(text)));
                }
                c if c.is_ascii_digit() => {
                    let start = i;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let text: String = chars[start..i].iter().collect();
                    let n = text.parse().map_err(|_| {
                        ParseError::new(ErrorCode::Syntax, line_no, col, format!("number out of range: {text}"))
                    })?;
                    out.push(single(Tok::Number(n)));
                }
                c if ident_start(c) => {
                    let start = i;
                    while i < chars.len() && ident_part(chars[i]) {
                        i += 1;
                    }
                    let text: String = chars[start..i].iter().collect();
                    if text.ends_with('.') || text.contains("..") {
                        return Err(ParseError::new(ErrorCode::Syntax, line_no, col, format!("malformed name `{text}`")));
                    }
                    out.push(single(Tok::Ident(text)));
                }
                other => {
                    return Err(ParseError::new(ErrorCode::Syntax, line_no, col, format!("unexpected character `{other}`")));
                }
            }
        }
        out.push(Token { tok: Tok::Newline, line: line_no, col: chars.len() + 1 });
    }
    Ok(out)
}
