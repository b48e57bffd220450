use super::PlanError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Word(String),
    Str(String),
    Semi,
    Newline,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Token {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

impl Token {
    pub fn describe(&self) -> String {
        match &self.tok {
            Tok::Word(w) => format!("`{w}`"),
            Tok::Str(s) => format!("\"{s}\""),
            Tok::Semi => "`;`".into(),
            Tok::Newline => "end of line".into(),
        }
    }
}

/// Splits plan text into tokens; line ends are tokens too.
///
/// `#` at the start of a token begins a comment running to end of line.
/// Strings have no escapes and cannot span lines. Line and column are
/// 1-based, columns counted in characters.
pub(crate) fn tokenize(text: &str) -> Result<Vec<Token>, PlanError> {
    let mut out = Vec::new();
    for (li, line) in text.lines().enumerate() {
        let line_no = li + 1;
        let chars: Vec<char> = line.chars().collect();
        let mut i = 0;
        while i < chars.len() {
            let c = chars[i];
            let col = i + 1;
            if c.is_whitespace() {
                i += 1;
            } else if c == '#' {
                break;
            } else if c == ';' {
                out.push(Token {
                    tok: Tok::Semi,
                    line: line_no,
                    col,
                });
                i += 1;
            } else if c == '"' {
                let start = i + 1;
                let end = chars[start..]
                    .iter()
                    .position(|&d| d == '"')
                    .map(|p| start + p)
                    .ok_or_else(|| PlanError::Syntax {
                        line: line_no,
                        col,
                        expected: "closing `\"`".into(),
                        found: "end of line".into(),
                    })?;
                out.push(Token {
                    tok: Tok::Str(chars[start..end].iter().collect()),
                    line: line_no,
                    col,
                });
                i = end + 1;
            } else {
                let start = i;
                while i < chars.len()
                    && !chars[i].is_whitespace()
                    && chars[i] != ';'
                    && chars[i] != '"'
                {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Word(chars[start..i].iter().collect()),
                    line: line_no,
                    col,
                });
            }
        }
        out.push(Token {
            tok: Tok::Newline,
            line: line_no,
            col: chars.len() + 1,
        });
    }
    Ok(out)
}
