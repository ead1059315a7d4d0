use thiserror::Error;

/// Errors produced by the latency model, simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid index ({i}, {j}) outside {rows}x{cols} matrix")]
    Index {
        i: usize,
        j: usize,
        rows: usize,
        cols: usize,
    },

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("{name} = {value} is out of range ({expected})")]
    Range {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("line {line}: {message}")]
    Format { line: u64, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    ok: bool,
    expected: &'static str,
) -> Result<()> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Range {
            name,
            value,
            expected,
        })
    }
}

pub(crate) fn check_fraction(name: &'static str, value: f64) -> Result<()> {
    check_range(name, value, (0.0..=1.0).contains(&value), "0 <= value <= 1")
}
