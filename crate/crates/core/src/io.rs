//! JSON formats for algebras, extensions and actions, and report output.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::algebra::{Elem, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::extensions::{Action, Extension, GroupView};

pub const FORMAT: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperationFile {
    symbol: String,
    arity: usize,
    table: Vec<Elem>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AlgebraFile {
    #[serde(default = "default_format")]
    format: u32,
    name: String,
    size: usize,
    operations: Vec<OperationFile>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtensionFile {
    #[serde(default = "default_format")]
    format: u32,
    #[serde(rename = "A")]
    a: AlgebraFile,
    #[serde(rename = "X")]
    x: AlgebraFile,
    #[serde(rename = "Q")]
    q: AlgebraFile,
    iota: Vec<Elem>,
    pi: Vec<Elem>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ActionFile {
    #[serde(default = "default_format")]
    format: u32,
    table: Vec<Vec<Elem>>,
}

fn default_format() -> u32 {
    FORMAT
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn check_format(format: u32) -> Result<()> {
    if format == FORMAT {
        Ok(())
    } else {
        Err(Error::Validation(format!("unsupported format {format}, expected {FORMAT}")))
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn build_algebra(file: AlgebraFile) -> Result<FiniteAlgebra> {
    check_format(file.format)?;
    let ops = file
        .operations
        .into_iter()
        .map(|op| (op.symbol, op.arity, op.table))
        .collect();
    FiniteAlgebra::new(file.name, file.size, ops)
}

pub fn parse_algebra_str(text: &str) -> Result<FiniteAlgebra> {
    build_algebra(parse_json(text)?)
}

pub fn parse_algebra(path: impl AsRef<Path>) -> Result<FiniteAlgebra> {
    parse_algebra_str(&read(path.as_ref())?)
}

fn algebra_file(alg: &FiniteAlgebra) -> AlgebraFile {
    AlgebraFile {
        format: FORMAT,
        name: alg.name().to_string(),
        size: alg.size(),
        operations: (0..alg.op_count())
            .map(|op| OperationFile {
                symbol: alg.symbol(op).to_string(),
                arity: alg.arity(op),
                table: alg.table(op).to_vec(),
            })
            .collect(),
    }
}

pub fn algebra_to_json(alg: &FiniteAlgebra) -> Value {
    serde_json::to_value(algebra_file(alg)).expect("algebra serializes")
}

pub fn parse_extension_str(text: &str) -> Result<Extension> {
    let file: ExtensionFile = parse_json(text)?;
    check_format(file.format)?;
    Extension::new(
        Arc::new(build_algebra(file.a)?),
        Arc::new(build_algebra(file.x)?),
        Arc::new(build_algebra(file.q)?),
        file.iota,
        file.pi,
    )
}

pub fn parse_extension(path: impl AsRef<Path>) -> Result<Extension> {
    parse_extension_str(&read(path.as_ref())?)
}

pub fn extension_to_json(e: &Extension) -> Value {
    let mut v = serde_json::json!({
        "A": algebra_to_json(e.a().algebra()),
        "X": algebra_to_json(e.x().algebra()),
        "Q": algebra_to_json(e.q().algebra()),
        "iota": e.iota(),
        "pi": e.pi(),
    });
    v["format"] = FORMAT.into();
    v
}

/// `{"format": 1, "table": [[q·a for a in A] for q in Q]}`.
pub fn parse_action_str(q: &GroupView, a: &GroupView, text: &str) -> Result<Action> {
    let file: ActionFile = parse_json(text)?;
    check_format(file.format)?;
    if file.table.len() != q.size() || file.table.iter().any(|row| row.len() != a.size()) {
        return Err(Error::Validation(format!(
            "action table must have {} rows of length {}",
            q.size(),
            a.size()
        )));
    }
    Action::new(q, a, file.table.concat())
}

pub fn parse_action(q: &GroupView, a: &GroupView, path: impl AsRef<Path>) -> Result<Action> {
    parse_action_str(q, a, &read(path.as_ref())?)
}

/// Pretty JSON with keys sorted and a trailing newline.
pub fn to_stable_string(v: &Value) -> String {
    // serde_json's default map is ordered by key
    let mut s = serde_json::to_string_pretty(v).expect("values serialize");
    s.push('\n');
    s
}

/// A command report: the echoed command, the seed if any, the tool
/// version and a command-specific body.
#[derive(Clone, Debug)]
pub struct Report {
    pub command: Vec<String>,
    pub seed: Option<u64>,
    pub body: Value,
}

impl Report {
    pub fn new(command: Vec<String>, seed: Option<u64>, body: Value) -> Self {
        Report { command, seed, body }
    }

    pub fn to_json(&self) -> Value {
        serde_json::json!({
            "command": self.command,
            "seed": self.seed,
            "version": env!("CARGO_PKG_VERSION"),
            "result": self.body,
        })
    }

    pub fn render(&self) -> String {
        to_stable_string(&self.to_json())
    }
}

/// Error object written to standard error by the CLI.
pub fn error_json(err: &Error) -> Value {
    let mut v = serde_json::json!({"error": err.kind(), "message": err.to_string()});
    if let Error::Parse { line, column, .. } = err {
        v["line"] = (*line).into();
        v["column"] = (*column).into();
    }
    v
}
