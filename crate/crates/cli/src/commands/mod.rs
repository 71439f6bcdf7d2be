pub mod analyze;
pub mod bench;
pub mod compress;
pub mod expand;
pub mod gen;
pub mod verify;

use std::path::Path;
use std::time::Instant;

use ziptrace_core::trace::Trace;
use ziptrace_core::Slp;

/// Exit code 2 for usage/IO problems, 3 for malformed inputs.
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn malformed(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }
}

pub fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

pub fn write_file(path: &Path, content: &str) -> Result<(), CliError> {
    std::fs::write(path, content)
        .map_err(|e| CliError::usage(format!("cannot write {}: {e}", path.display())))
}

/// A trace or grammar file, told apart by the `slp v1` header.
pub enum Input {
    Trace(Trace),
    Grammar(Slp),
}

pub fn looks_like_slp(text: &str) -> bool {
    text.lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .find(|l| !l.is_empty() && !l.trim_start().starts_with('#'))
        == Some("slp v1")
}

pub fn load_input(path: &Path) -> Result<Input, CliError> {
    let text = read_file(path)?;
    if looks_like_slp(&text) {
        let slp = ziptrace_core::parse_slp(&text)
            .map_err(|e| CliError::malformed(format!("{}: {e}", path.display())))?;
        Ok(Input::Grammar(slp))
    } else {
        let trace = ziptrace_core::parse_trace(&text)
            .map_err(|e| CliError::malformed(format!("{}: {e}", path.display())))?;
        Ok(Input::Trace(trace))
    }
}

/// Brute-force cap, overridable through `ZIPTRACE_ORACLE_CAP`.
pub fn oracle_cap() -> usize {
    std::env::var("ZIPTRACE_ORACLE_CAP")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(ziptrace_core::DEFAULT_ORACLE_CAP)
}

pub fn time_ms<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64() * 1e3)
}
