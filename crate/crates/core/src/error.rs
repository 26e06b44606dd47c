use thiserror::Error;

pub type Result<T> = std::result::Result<T, ModelError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    /// A numeric argument fell outside the domain of the model.
    #[error("{name} = {value} is out of range: {constraint}")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    /// The PLOB capacity diverges at unit transmissivity.
    #[error("capacity diverges at transmissivity 1")]
    Saturated,

    #[error("invalid quantum state: {0}")]
    InvalidState(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("search space is empty: {0}")]
    EmptySearch(&'static str),

    #[error("{0}")]
    Io(String),
}

/// Checks `lo <= value <= hi` and reports `name` otherwise.
pub(crate) fn check_range(
    name: &'static str,
    value: f64,
    lo: f64,
    hi: f64,
    constraint: &'static str,
) -> Result<()> {
    if value.is_nan() || value < lo || value > hi {
        return Err(ModelError::Domain {
            name,
            value,
            constraint,
        });
    }
    Ok(())
}
