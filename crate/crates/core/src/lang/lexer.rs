use num_bigint::BigInt;

use super::SyntaxError;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Int(BigInt),
    Name(String),
    MetaVar(String),
    Def,
    Return,
    If,
    Elif,
    Else,
    While,
    And,
    Or,
    Not,
    Lambda,
    Pass,
    True,
    False,
    NoneKw,
    Plus,
    Minus,
    Star,
    SlashSlash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    LtE,
    Gt,
    GtE,
    Assign,
    LParen,
    RParen,
    Comma,
    Colon,
    Newline,
    Indent,
    Dedent,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Int(v) => format!("integer {v}"),
            Tok::Name(n) => format!("name '{n}'"),
            Tok::MetaVar(n) => format!("metavariable '?{n}'"),
            Tok::Newline => "end of line".to_string(),
            Tok::Indent => "indent".to_string(),
            Tok::Dedent => "dedent".to_string(),
            Tok::Eof => "end of input".to_string(),
            other => format!("'{}'", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Def => "def",
            Tok::Return => "return",
            Tok::If => "if",
            Tok::Elif => "elif",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::And => "and",
            Tok::Or => "or",
            Tok::Not => "not",
            Tok::Lambda => "lambda",
            Tok::Pass => "pass",
            Tok::True => "True",
            Tok::False => "False",
            Tok::NoneKw => "None",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::SlashSlash => "//",
            Tok::Percent => "%",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::LtE => "<=",
            Tok::Gt => ">",
            Tok::GtE => ">=",
            Tok::Assign => "=",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Comma => ",",
            Tok::Colon => ":",
            _ => "",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub line: u32,
    pub col_start: u32,
    pub col_end: u32,
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "def" => Tok::Def,
        "return" => Tok::Return,
        "if" => Tok::If,
        "elif" => Tok::Elif,
        "else" => Tok::Else,
        "while" => Tok::While,
        "and" => Tok::And,
        "or" => Tok::Or,
        "not" => Tok::Not,
        "lambda" => Tok::Lambda,
        "pass" => Tok::Pass,
        "True" => Tok::True,
        "False" => Tok::False,
        "None" => Tok::NoneKw,
        _ => return None,
    })
}

/// Tokenizes MiniLang source with Python-style indentation tokens.
///
/// `allow_metavars` enables `?name` tokens for rewrite-rule templates.
pub fn tokenize(source: &str, allow_metavars: bool) -> Result<Vec<Token>, SyntaxError> {
    let mut out = Vec::new();
    let mut indents: Vec<u32> = vec![0];
    let mut last_line = 0u32;

    for (idx, raw_line) in source.split('\n').enumerate() {
        let line_no = idx as u32 + 1;
        let line = raw_line.strip_suffix('\r').unwrap_or(raw_line);
        let bytes = line.as_bytes();

        let mut width = 0usize;
        while width < bytes.len() && (bytes[width] == b' ' || bytes[width] == b'\t') {
            if bytes[width] == b'\t' {
                return Err(SyntaxError::new(
                    line_no,
                    width as u32,
                    "tabs are not allowed in indentation",
                ));
            }
            width += 1;
        }
        let rest = &line[width..];
        if rest.is_empty() || rest.starts_with('#') {
            continue;
        }
        last_line = line_no;

        let width = width as u32;
        let current = *indents.last().unwrap();
        if width > current {
            indents.push(width);
            out.push(Token {
                tok: Tok::Indent,
                line: line_no,
                col_start: 0,
                col_end: width,
            });
        } else {
            while width < *indents.last().unwrap() {
                indents.pop();
                out.push(Token {
                    tok: Tok::Dedent,
                    line: line_no,
                    col_start: 0,
                    col_end: width,
                });
            }
            if width != *indents.last().unwrap() {
                return Err(SyntaxError::new(
                    line_no,
                    width,
                    "unindent does not match any outer indentation level",
                ));
            }
        }

        lex_line(line, width as usize, line_no, allow_metavars, &mut out)?;
        out.push(Token {
            tok: Tok::Newline,
            line: line_no,
            col_start: line.len() as u32,
            col_end: line.len() as u32,
        });
    }

    let end_line = last_line.max(1);
    while indents.len() > 1 {
        indents.pop();
        out.push(Token {
            tok: Tok::Dedent,
            line: end_line,
            col_start: 0,
            col_end: 0,
        });
    }
    out.push(Token {
        tok: Tok::Eof,
        line: end_line,
        col_start: 0,
        col_end: 0,
    });
    Ok(out)
}

fn lex_line(
    line: &str,
    start: usize,
    line_no: u32,
    allow_metavars: bool,
    out: &mut Vec<Token>,
) -> Result<(), SyntaxError> {
    let bytes = line.as_bytes();
    let mut i = start;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b' ' {
            i += 1;
            continue;
        }
        if c == b'\t' {
            return Err(SyntaxError::new(line_no, i as u32, "tabs are not allowed"));
        }
        if c == b'#' {
            break;
        }
        let begin = i;
        let tok = if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && (bytes[i].is_ascii_alphabetic() || bytes[i] == b'_') {
                return Err(SyntaxError::new(line_no, i as u32, "invalid decimal literal"));
            }
            Tok::Int(line[begin..i].parse::<BigInt>().expect("digits"))
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &line[begin..i];
            keyword(word).unwrap_or_else(|| Tok::Name(word.to_string()))
        } else if c == b'?' && allow_metavars {
            i += 1;
            let name_start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            if i == name_start {
                return Err(SyntaxError::new(line_no, begin as u32, "expected metavariable name after '?'"));
            }
            Tok::MetaVar(line[name_start..i].to_string())
        } else {
            let two = if i + 1 < bytes.len() { &line[i..i + 2] } else { "" };
            let (tok, len) = match two {
                "//" => (Tok::SlashSlash, 2),
                "==" => (Tok::EqEq, 2),
                "!=" => (Tok::NotEq, 2),
                "<=" => (Tok::LtE, 2),
                ">=" => (Tok::GtE, 2),
                _ => match c {
                    b'+' => (Tok::Plus, 1),
                    b'-' => (Tok::Minus, 1),
                    b'*' => (Tok::Star, 1),
                    b'%' => (Tok::Percent, 1),
                    b'<' => (Tok::Lt, 1),
                    b'>' => (Tok::Gt, 1),
                    b'=' => (Tok::Assign, 1),
                    b'(' => (Tok::LParen, 1),
                    b')' => (Tok::RParen, 1),
                    b',' => (Tok::Comma, 1),
                    b':' => (Tok::Colon, 1),
                    _ => {
                        let ch = line[i..].chars().next().unwrap_or('?');
                        return Err(SyntaxError::new(
                            line_no,
                            i as u32,
                            format!("invalid character '{ch}'"),
                        ));
                    }
                },
            };
            i += len;
            tok
        };
        out.push(Token {
            tok,
            line: line_no,
            col_start: begin as u32,
            col_end: i as u32,
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<Tok> {
        tokenize(src, false).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn indentation_tokens() {
        let toks = kinds("def f(x):\n    return x\nf(2)\n");
        assert!(toks.contains(&Tok::Indent));
        assert!(toks.contains(&Tok::Dedent));
        assert_eq!(toks.last(), Some(&Tok::Eof));
    }

    #[test]
    fn tabs_rejected() {
        let err = tokenize("def f():\n\treturn 1", false).unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn metavars_only_in_template_mode() {
        assert!(tokenize("?x == 1", false).is_err());
        let toks: Vec<_> = tokenize("?x == 1", true).unwrap().into_iter().map(|t| t.tok).collect();
        assert_eq!(toks[0], Tok::MetaVar("x".into()));
    }

    #[test]
    fn comments_and_blank_lines_skipped() {
        let toks = kinds("# header\n\nx = 1  # trailing\n");
        assert_eq!(
            toks,
            vec![
                Tok::Name("x".into()),
                Tok::Assign,
                Tok::Int(1.into()),
                Tok::Newline,
                Tok::Eof
            ]
        );
    }

    #[test]
    fn inconsistent_dedent() {
        assert!(tokenize("if x:\n    y = 1\n  z = 2\n", false).is_err());
    }
}
