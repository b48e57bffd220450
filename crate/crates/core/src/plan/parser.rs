use std::collections::HashSet;

use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use super::PlanError;

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn skip_newlines(&mut self) {
        while matches!(self.peek(), Some(Token { tok: Tok::Newline, .. })) {
            self.pos += 1;
        }
    }

    /// Position for an error at the current token, or end of input.
    fn error(&self, expected: &str) -> PlanError {
        match self.peek() {
            Some(t) => PlanError::Syntax {
                line: t.line,
                col: t.col,
                expected: expected.into(),
                found: t.describe(),
            },
            None => {
                let (line, col) = self.toks.last().map_or((1, 1), |t| (t.line, t.col));
                PlanError::Syntax {
                    line,
                    col,
                    expected: expected.into(),
                    found: "end of input".into(),
                }
            }
        }
    }

    /// Next significant token inside a statement that may span lines.
    fn stmt_token(&mut self) -> Option<Token> {
        self.skip_newlines();
        self.next()
    }

    fn stmt_peek(&mut self) -> Option<&Token> {
        self.skip_newlines();
        self.peek()
    }

    fn expect_word(&mut self, expected: &str) -> Result<String, PlanError> {
        self.skip_newlines();
        match self.peek() {
            Some(Token {
                tok: Tok::Word(w), ..
            }) => {
                let w = w.clone();
                self.pos += 1;
                Ok(w)
            }
            _ => Err(self.error(expected)),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), PlanError> {
        self.skip_newlines();
        match self.peek() {
            Some(Token {
                tok: Tok::Word(w), ..
            }) if w == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error(&format!("`{kw}`"))),
        }
    }

    fn expect_int(&mut self, what: &str) -> Result<i64, PlanError> {
        self.skip_newlines();
        if let Some(Token {
            tok: Tok::Word(w), ..
        }) = self.peek()
        {
            if let Ok(v) = w.parse::<i64>() {
                self.pos += 1;
                return Ok(v);
            }
        }
        Err(self.error(what))
    }

    fn expect_semi(&mut self) -> Result<(), PlanError> {
        match self.stmt_peek() {
            Some(Token { tok: Tok::Semi, .. }) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.error("`;`")),
        }
    }
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    matches!(cs.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses plan text into declarations and task scripts.
pub fn parse_plan(text: &str) -> Result<PlanAst, PlanError> {
    let mut p = Parser {
        toks: tokenize(text)?,
        pos: 0,
    };
    let mut ast = PlanAst::default();
    let mut names = HashSet::new();
    loop {
        p.skip_newlines();
        let Some(tok) = p.peek().cloned() else { break };
        match &tok.tok {
            Tok::Word(w) if w == "parameter" => {
                p.pos += 1;
                let decl = parse_parameter(&mut p)?;
                if !names.insert(decl.name.clone()) {
                    return Err(PlanError::DuplicateParameter {
                        name: decl.name,
                        line: tok.line,
                    });
                }
                ast.parameters.push(decl);
            }
            Tok::Word(w) if w == "task" => {
                p.pos += 1;
                ast.tasks.push(parse_task(&mut p)?);
            }
            _ => return Err(p.error("`parameter` or `task`")),
        }
    }
    Ok(ast)
}

fn parse_parameter(p: &mut Parser) -> Result<ParameterDecl, PlanError> {
    let name = p.expect_word("parameter name")?;
    if !is_identifier(&name) {
        p.pos -= 1;
        return Err(p.error("parameter name"));
    }
    let mut label = None;
    if matches!(p.stmt_peek(), Some(Token { tok: Tok::Word(w), .. }) if w == "label") {
        p.pos += 1;
        match p.stmt_token() {
            Some(Token {
                tok: Tok::Str(s), ..
            }) => label = Some(s),
            _ => {
                p.pos -= 1;
                return Err(p.error("quoted label"));
            }
        }
    }
    let ty = match p.expect_word("`integer`, `float` or `text`")?.as_str() {
        "integer" => ParamType::Integer,
        "float" => ParamType::Float,
        "text" => ParamType::Text,
        _ => {
            p.pos -= 1;
            return Err(p.error("`integer`, `float` or `text`"));
        }
    };
    let kind_word = p.expect_word("`range`, `default` or `select`")?;
    let kind = match kind_word.as_str() {
        "range" => {
            if ty != ParamType::Integer {
                return Err(PlanError::BadRange {
                    name,
                    reason: format!("{} ranges are not supported", ty.keyword()),
                });
            }
            p.expect_keyword("from")?;
            let from = p.expect_int("integer bound")?;
            p.expect_keyword("to")?;
            let to = p.expect_int("integer bound")?;
            let step = if matches!(p.stmt_peek(), Some(Token { tok: Tok::Word(w), .. }) if w == "step")
            {
                p.pos += 1;
                p.expect_int("integer step")?
            } else {
                1
            };
            if step == 0 {
                return Err(PlanError::BadRange {
                    name,
                    reason: "step must be non-zero".into(),
                });
            }
            if (to as i128 - from as i128).signum() * (step.signum() as i128) < 0 {
                return Err(PlanError::BadRange {
                    name,
                    reason: format!("step {step} never reaches {to} from {from}"),
                });
            }
            ParamKind::Range { from, to, step }
        }
        "default" => {
            let t = p.stmt_token();
            let lit = match (&t, ty) {
                (Some(Token { tok: Tok::Str(s), .. }), ParamType::Text) => {
                    Some(Literal::Text(s.clone()))
                }
                (Some(Token { tok: Tok::Word(w), .. }), _) => Literal::parse(ty, w),
                _ => None,
            };
            match lit {
                Some(l) => ParamKind::Default(l),
                None => {
                    p.pos -= 1;
                    return Err(p.error(&format!("{} literal", ty.keyword())));
                }
            }
        }
        "select" => {
            p.expect_keyword("oneof")?;
            let mut options = Vec::new();
            while let Some(Token {
                tok: Tok::Str(s), ..
            }) = p.stmt_peek()
            {
                let s = s.clone();
                if Literal::parse(ty, &s).is_none() {
                    return Err(p.error(&format!("{} option", ty.keyword())));
                }
                options.push(s);
                p.pos += 1;
            }
            if options.is_empty() {
                return Err(p.error("quoted option"));
            }
            let mut default = None;
            if matches!(p.stmt_peek(), Some(Token { tok: Tok::Word(w), .. }) if w == "default") {
                p.pos += 1;
                match p.stmt_peek() {
                    Some(Token {
                        tok: Tok::Str(s), ..
                    }) if options.contains(s) => {
                        default = Some(s.clone());
                        p.pos += 1;
                    }
                    _ => return Err(p.error("one of the listed options")),
                }
            }
            ParamKind::SelectOneOf { options, default }
        }
        _ => {
            p.pos -= 1;
            return Err(p.error("`range`, `default` or `select`"));
        }
    };
    p.expect_semi()?;
    Ok(ParameterDecl {
        name,
        label,
        ty,
        kind,
    })
}

/// Words of one source line, up to its newline token.
fn line_words(p: &mut Parser) -> Vec<Token> {
    let mut words = Vec::new();
    while let Some(t) = p.next() {
        if t.tok == Tok::Newline {
            break;
        }
        words.push(t);
    }
    words
}

fn parse_task(p: &mut Parser) -> Result<TaskScript, PlanError> {
    let header = line_words(p);
    let name = match header.as_slice() {
        [Token {
            tok: Tok::Word(n), ..
        }] => n.clone(),
        [] => {
            p.pos -= 1;
            return Err(p.error("task name"));
        }
        [_, extra, ..] | [extra] => {
            return Err(PlanError::Syntax {
                line: extra.line,
                col: extra.col,
                expected: "task name followed by end of line".into(),
                found: extra.describe(),
            })
        }
    };
    let mut commands = Vec::new();
    loop {
        p.skip_newlines();
        let Some(first) = p.peek().cloned() else {
            return Err(p.error("`endtask`"));
        };
        let words = line_words(p);
        let verb = match &first.tok {
            Tok::Word(w) => w.as_str(),
            _ => "",
        };
        let mut args = Vec::new();
        for t in &words[1..] {
            match &t.tok {
                Tok::Word(w) | Tok::Str(w) => args.push(w.clone()),
                _ => {
                    return Err(PlanError::Syntax {
                        line: t.line,
                        col: t.col,
                        expected: "command argument".into(),
                        found: t.describe(),
                    })
                }
            }
        }
        let arity = |n: usize| -> Result<(), PlanError> {
            if args.len() == n {
                Ok(())
            } else {
                let at = words.get(n + 1).unwrap_or(&first);
                Err(PlanError::Syntax {
                    line: at.line,
                    col: at.col,
                    expected: format!("`{verb}` with {n} arguments"),
                    found: format!("{} arguments", args.len()),
                })
            }
        };
        let (on_node, bare) = match verb.strip_prefix("node:") {
            Some(rest) => (true, rest),
            None => (false, verb),
        };
        let cmd = match bare {
            "endtask" if !on_node && args.is_empty() => break,
            "copy" if !on_node => {
                arity(2)?;
                Command::Copy {
                    src: args[0].clone(),
                    dst: args[1].clone(),
                }
            }
            "substitute" => {
                arity(2)?;
                Command::Substitute {
                    on_node,
                    template: args[0].clone(),
                    output: args[1].clone(),
                }
            }
            "execute" if !args.is_empty() => Command::Execute { on_node, args },
            _ => {
                return Err(PlanError::Syntax {
                    line: first.line,
                    col: first.col,
                    expected: "`copy`, `substitute`, `execute` or `endtask`".into(),
                    found: first.describe(),
                })
            }
        };
        commands.push(cmd);
    }
    Ok(TaskScript { name, commands })
}
