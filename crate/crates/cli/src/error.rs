use thiserror::Error;

/// Command failure, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad input: unreadable or malformed files, missing paths, invalid parameters.
    #[error("{0}")]
    Validation(String),
    /// The computation itself failed.
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Validation(_) => 1,
            Self::Numerical(_) => 2,
        }
    }
}

impl From<tetsdf::Error> for CliError {
    fn from(e: tetsdf::Error) -> Self {
        use tetsdf::Error as E;
        let msg = e.to_string();
        match e {
            E::Divergence { .. }
            | E::NonFinite(_)
            | E::DegenerateTet(_)
            | E::DegenerateNormal(_)
            | E::UnclampedField { .. }
            | E::GradientClampViolated { .. }
            | E::BehindCamera(_)
            | E::DegeneratePoints(_)
            | E::MissingProvenance
            | E::MissingFragment(..) => Self::Numerical(msg),
            E::EmptyDomain
            | E::InvalidArgument(_)
            | E::LengthMismatch { .. }
            | E::DimensionMismatch { .. }
            | E::Format(_)
            | E::Io(_)
            | E::Image(_)
            | E::Json(_) => Self::Validation(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Validation(e.to_string())
    }
}

impl From<image::ImageError> for CliError {
    fn from(e: image::ImageError) -> Self {
        Self::Validation(e.to_string())
    }
}
