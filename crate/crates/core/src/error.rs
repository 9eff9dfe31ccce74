use std::path::PathBuf;

use crate::corpus::Attribute;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("pool field `{field}` is missing")]
    MissingField { field: String },
    #[error("pool field `{field}` has unexpected shape: {detail}")]
    BadField { field: String, detail: String },
    #[error("pool field `{field}` is empty")]
    EmptyList { field: String },
    #[error("pool field `{field}` has duplicate entry `{value}`")]
    DuplicateEntry { field: String, value: String },
    #[error("pool field `{field}` has invalid entry `{value}`: {reason}")]
    InvalidEntry {
        field: String,
        value: String,
        reason: &'static str,
    },
    #[error("name space exhausted: {taken} of {capacity} full names already taken")]
    NameSpaceExhausted { taken: usize, capacity: usize },
    #[error("invalid age range [{min}, {max}]")]
    InvalidAgeRange { min: u32, max: u32 },

    #[error("no template for attribute `{attribute}` in style `{style}`")]
    MissingTemplate { attribute: String, style: String },
    #[error("template placeholder mismatch in `{template}`: {reason}")]
    PlaceholderMismatch { template: String, reason: String },
    #[error("attribute `{0}` is not present in the biography")]
    AttributeAbsent(Attribute),
    #[error("a biography cannot reference its own person `{0}`")]
    SelfReference(String),

    #[error("token counter unavailable: {0}")]
    CounterUnavailable(String),
    #[error("token budget {budget} is smaller than the reserved {reserve} tokens")]
    BudgetTooSmall { budget: usize, reserve: usize },
    #[error("needle depth {0} outside [0, 1]")]
    DepthOutOfRange(f64),
    #[error("distractor density {0} outside [0, 1]")]
    DensityOutOfRange(f64),
    #[error("invalid context spec: {0}")]
    InvalidSpec(String),
    #[error("essay corpus too short: {available} tokens available, {needed} needed")]
    CorpusTooShort { available: usize, needed: usize },

    #[error("unsatisfiable task: {0}")]
    Unsatisfiable(String),
    #[error("no prompt template registered for task `{0}`")]
    UnregisteredKind(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("endpoint error: {0}")]
    Endpoint(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
            Error::MissingField { .. } => "missing_field",
            Error::BadField { .. } => "bad_field",
            Error::EmptyList { .. } => "empty_list",
            Error::DuplicateEntry { .. } => "duplicate_entry",
            Error::InvalidEntry { .. } => "invalid_entry",
            Error::NameSpaceExhausted { .. } => "name_space_exhausted",
            Error::InvalidAgeRange { .. } => "invalid_age_range",
            Error::MissingTemplate { .. } => "missing_template",
            Error::PlaceholderMismatch { .. } => "placeholder_mismatch",
            Error::AttributeAbsent(_) => "attribute_absent",
            Error::SelfReference(_) => "self_reference",
            Error::CounterUnavailable(_) => "counter_unavailable",
            Error::BudgetTooSmall { .. } => "budget_too_small",
            Error::DepthOutOfRange(_) => "depth_out_of_range",
            Error::DensityOutOfRange(_) => "density_out_of_range",
            Error::InvalidSpec(_) => "invalid_spec",
            Error::CorpusTooShort { .. } => "corpus_too_short",
            Error::Unsatisfiable(_) => "unsatisfiable",
            Error::UnregisteredKind(_) => "unregistered_kind",
            Error::Config(_) => "config",
            Error::Endpoint(_) => "endpoint",
        }
    }
}
