//! YAML pattern bank loading.

use std::path::Path;

use argugraph_core::critique::{BankViolation, PatternBank};
use thiserror::Error;

const DEFAULT_BANK: &str = include_str!("../assets/default_bank.yaml");

#[derive(Debug, Error)]
pub enum BankError {
    #[error("cannot read pattern bank {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("pattern bank parse error{}: {message}", location_suffix(*.line, *.column))]
    Parse {
        line: Option<usize>,
        column: Option<usize>,
        message: String,
    },
    #[error("pattern bank is invalid: {}", join(.0))]
    Invalid(Vec<BankViolation>),
}

fn location_suffix(line: Option<usize>, column: Option<usize>) -> String {
    match (line, column) {
        (Some(l), Some(c)) => format!(" at line {l}, column {c}"),
        _ => String::new(),
    }
}

fn join(violations: &[BankViolation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

pub fn load_pattern_bank(text: &str) -> Result<PatternBank, BankError> {
    let bank: PatternBank = serde_yaml::from_str(text).map_err(|err| {
        let location = err.location();
        BankError::Parse {
            line: location.as_ref().map(|l| l.line()),
            column: location.as_ref().map(|l| l.column()),
            message: err.to_string(),
        }
    })?;
    let violations = bank.validate();
    if violations.is_empty() {
        Ok(bank)
    } else {
        Err(BankError::Invalid(violations))
    }
}

pub fn load_pattern_bank_file(path: &Path) -> Result<PatternBank, BankError> {
    let text = std::fs::read_to_string(path).map_err(|source| BankError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_pattern_bank(&text)
}

/// The bank shipped with the crate.
pub fn default_bank() -> PatternBank {
    load_pattern_bank(DEFAULT_BANK).expect("built-in pattern bank is valid")
}

pub fn default_bank_source() -> &'static str {
    DEFAULT_BANK
}
