//! The Albert intermediate language: syntax, linear type system, reference
//! interpreter, and compilation to a Michelson subset.

pub mod eval;
pub mod compiler;
pub mod michelson;
pub mod syntax;
pub mod typer;
pub mod types;

use syntax::{parse_program, ParseError, Program};
use typer::{typecheck_program, TypeError, TypedProgram};
use types::{for_each_type, inline_aliases, normalize_program, well_formed, TypeFormError};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FrontendError {
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("{0}")]
    TypeForm(#[from] TypeFormError),
    #[error("{0}")]
    Type(#[from] TypeError),
}

/// Inlines aliases, normalizes and checks well-formedness of every type
/// annotation.
pub fn prepare(p: &Program) -> Result<Program, TypeFormError> {
    let p = normalize_program(&inline_aliases(p)?);
    for f in &p.functions {
        let mut res = Ok(());
        for_each_type(f, &mut |t| {
            if res.is_ok() {
                res = well_formed(t).map_err(|e| match e {
                    TypeFormError::IllFormed { path, detail } => TypeFormError::IllFormed {
                        path: format!("{} > {path}", f.name),
                        detail,
                    },
                    other => other,
                });
            }
        });
        res?;
    }
    Ok(p)
}

/// Prepares and typechecks a parsed program.
pub fn check(p: &Program) -> Result<TypedProgram, FrontendError> {
    Ok(typecheck_program(&prepare(p)?)?)
}

/// Parses, prepares and typechecks a source text.
pub fn frontend(src: &str) -> Result<(Program, TypedProgram), FrontendError> {
    let parsed = parse_program(src)?;
    let prepared = prepare(&parsed)?;
    let typed = typecheck_program(&prepared)?;
    Ok((prepared, typed))
}
