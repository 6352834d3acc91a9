//! The discrete probabilistic language: syntax, parser, checker, printer.

pub mod ast;
pub mod parser;
pub mod printer;
pub mod typecheck;

pub use ast::{bits_needed, categorical_chain, BoolOp, Expr, Param, Program, ScalarType, Type};
pub use parser::{parse, ParseError};
pub use printer::render_program;
pub use typecheck::{validate, TypedExpr, TypedExprKind, ValidateError, ValidatedProgram};
