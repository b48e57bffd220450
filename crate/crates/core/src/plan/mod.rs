//! Parameter-sweep plan files.
//!
//! A plan declares parameters and task scripts:
//!
//! ```text
//! parameter angle integer range from 1 to 3 step 1;
//! parameter db label "database" text select oneof "a" "b" default "a";
//! task main
//!     node:execute ./calc $angle ${db}
//! endtask
//! ```
//!
//! Parameter declarations end with `;` and may span lines; task commands
//! are one per line. `#` starts a comment. Expansion takes the cross
//! product of parameter values. Task commands are kept structurally and
//! never executed.

mod ast;
mod expand;
mod lexer;
mod parser;

pub use ast::{
    unparse, Command, Literal, ParamKind, ParamType, ParameterDecl, PlanAst, TaskScript,
};
pub use expand::{
    binding_table, generate_jobs, job_count, substitute, value_sets, JobBinding, NodeEnv,
    Overrides,
};
pub use parser::parse_plan;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("syntax error at {line}:{col}: expected {expected}, found {found}")]
    Syntax {
        line: usize,
        col: usize,
        expected: String,
        found: String,
    },
    #[error("parameter `{name}` declared twice (line {line})")]
    DuplicateParameter { name: String, line: usize },
    #[error("bad range for `{name}`: {reason}")]
    BadRange { name: String, reason: String },
    #[error("override names undeclared parameter `{0}`")]
    UnknownOverride(String),
    #[error("value `{value}` is not valid for parameter `{name}`")]
    BadOverrideValue { name: String, value: String },
    #[error("unbound place marker `{name}` at offset {position}")]
    UnboundMarker { name: String, position: usize },
}
