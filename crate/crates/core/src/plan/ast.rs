use std::fmt::{self, Write as _};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    Integer,
    Float,
    Text,
}

impl ParamType {
    pub fn keyword(self) -> &'static str {
        match self {
            ParamType::Integer => "integer",
            ParamType::Float => "float",
            ParamType::Text => "text",
        }
    }
}

/// A typed parameter value.
#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Integer(i64),
    Float(f64),
    Text(String),
}

impl Literal {
    /// Parses `raw` as a value of type `ty`.
    pub fn parse(ty: ParamType, raw: &str) -> Option<Literal> {
        match ty {
            ParamType::Integer => raw.parse().ok().map(Literal::Integer),
            ParamType::Float => raw
                .parse::<f64>()
                .ok()
                .filter(|f| f.is_finite())
                .map(Literal::Float),
            ParamType::Text => Some(Literal::Text(raw.to_string())),
        }
    }
}

/// Value text as substituted into templates.
impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Integer(i) => write!(f, "{i}"),
            Literal::Float(x) => write!(f, "{x}"),
            Literal::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ParamKind {
    /// Inclusive integer range.
    Range { from: i64, to: i64, step: i64 },
    Default(Literal),
    SelectOneOf {
        options: Vec<String>,
        default: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParameterDecl {
    pub name: String,
    pub label: Option<String>,
    pub ty: ParamType,
    pub kind: ParamKind,
}

impl ParameterDecl {
    /// Values used when the parameter is not overridden.
    pub fn natural_values(&self) -> Vec<Literal> {
        match &self.kind {
            ParamKind::Range { from, to, step } => {
                let n = (*to as i128 - *from as i128) / *step as i128 + 1;
                (0..n)
                    .map(|k| Literal::Integer((*from as i128 + k * *step as i128) as i64))
                    .collect()
            }
            ParamKind::Default(lit) => vec![lit.clone()],
            ParamKind::SelectOneOf { options, default } => {
                let pick = default.as_ref().unwrap_or(&options[0]);
                vec![Literal::parse(self.ty, pick).expect("options validated at parse time")]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Command {
    Copy { src: String, dst: String },
    Substitute {
        on_node: bool,
        template: String,
        output: String,
    },
    Execute { on_node: bool, args: Vec<String> },
}

impl Command {
    /// Every argument of the command, in order.
    pub fn args(&self) -> Vec<&str> {
        match self {
            Command::Copy { src, dst } => vec![src, dst],
            Command::Substitute {
                template, output, ..
            } => vec![template, output],
            Command::Execute { args, .. } => args.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskScript {
    pub name: String,
    pub commands: Vec<Command>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlanAst {
    pub parameters: Vec<ParameterDecl>,
    pub tasks: Vec<TaskScript>,
}

impl PlanAst {
    pub fn parameter(&self, name: &str) -> Option<&ParameterDecl> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn task(&self, name: &str) -> Option<&TaskScript> {
        self.tasks.iter().find(|t| t.name == name)
    }
}

fn quote(s: &str) -> String {
    format!("\"{s}\"")
}

fn arg(s: &str) -> String {
    if s.is_empty() || s.contains(|c: char| c.is_whitespace() || c == ';') || s.starts_with('#') {
        quote(s)
    } else {
        s.to_string()
    }
}

/// Canonical plan text. Parsing the output yields the same AST.
pub fn unparse(ast: &PlanAst) -> String {
    let mut out = String::new();
    for p in &ast.parameters {
        let _ = write!(out, "parameter {}", p.name);
        if let Some(label) = &p.label {
            let _ = write!(out, " label {}", quote(label));
        }
        let _ = write!(out, " {}", p.ty.keyword());
        match &p.kind {
            ParamKind::Range { from, to, step } => {
                let _ = write!(out, " range from {from} to {to} step {step}");
            }
            ParamKind::Default(lit) => {
                let _ = match lit {
                    Literal::Text(s) => write!(out, " default {}", quote(s)),
                    Literal::Integer(i) => write!(out, " default {i}"),
                    Literal::Float(x) => write!(out, " default {x:?}"),
                };
            }
            ParamKind::SelectOneOf { options, default } => {
                out.push_str(" select oneof");
                for o in options {
                    let _ = write!(out, " {}", quote(o));
                }
                if let Some(d) = default {
                    let _ = write!(out, " default {}", quote(d));
                }
            }
        }
        out.push_str(";\n");
    }
    for t in &ast.tasks {
        if !out.is_empty() {
            out.push('\n');
        }
        let _ = writeln!(out, "task {}", t.name);
        for c in &t.commands {
            let (prefix, words) = match c {
                Command::Copy { src, dst } => ("copy", vec![src.as_str(), dst]),
                Command::Substitute {
                    on_node,
                    template,
                    output,
                } => (
                    if *on_node { "node:substitute" } else { "substitute" },
                    vec![template.as_str(), output],
                ),
                Command::Execute { on_node, args } => (
                    if *on_node { "node:execute" } else { "execute" },
                    args.iter().map(String::as_str).collect(),
                ),
            };
            out.push_str("    ");
            out.push_str(prefix);
            for w in words {
                out.push(' ');
                out.push_str(&arg(w));
            }
            out.push('\n');
        }
        out.push_str("endtask\n");
    }
    out
}
