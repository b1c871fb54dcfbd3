//! Adaptable choreography toolchain.
//!
//! A single global program (a choreography) describes the interactions of all
//! participants of a distributed system. This crate parses such programs,
//! checks the well-formedness conditions that make them compilable, projects
//! them to one message-passing endpoint program per participant, and runs the
//! projected system — either as a deterministic in-process simulation or
//! distributed over sockets — under a runtime that supports coordinator-driven
//! adaptation: delimited scopes whose bodies can be replaced at runtime by
//! rules held in connectable repositories.
//!
//! A bounded explorer enumerates scheduler interleavings of the projected
//! system, reports deadlocks, and compares outcome sets against a reference
//! interpreter that executes the global program directly.

pub mod adapt;
pub mod ast;
pub mod checker;
pub mod diag;
pub mod endpoint;
pub mod explore;
pub mod expr;
pub mod format;
pub mod parser;
pub mod project;
pub mod runtime;
pub mod teastore;
pub mod value;

pub use ast::{ChorStmt, Include, Program, Role, RoleSet, RuleDef};
pub use diag::{Diagnostic, Severity, Span};
pub use endpoint::{Action, RoleCodeMap, ScopeSignature};
pub use expr::{eval_expr, BinOp, EvalError, Expr, InputProvider, ScriptedInput, ServiceRegistry};
pub use value::{decode_value, encode_value, Value};

/// Placeholder until the CLI lands.
pub fn run_cli() -> i32 {
    eprintln!("cli not wired yet");
    2
}
