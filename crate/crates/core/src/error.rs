use std::path::PathBuf;

use crate::map::Shape;

/// Errors produced by map construction, metric evaluation, synthesis and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A label map was constructed with zero pixels.
    #[error("label map must contain at least one pixel")]
    EmptyMap,
    /// The label buffer does not match the declared dimensions.
    #[error("label buffer holds {got} values but shape {shape} needs {expected}")]
    BufferSize {
        shape: Shape,
        expected: usize,
        got: usize,
    },
    /// Two maps (or a map and a mask) that must be aligned have different shapes.
    #[error("shape mismatch: truth is {truth}, prediction is {pred}")]
    ShapeMismatch { truth: Shape, pred: Shape },
    /// The foreground mask keeps too few pixels to evaluate.
    #[error("foreground selection keeps {kept} pixel(s); at least {needed} required")]
    EmptySelection { kept: usize, needed: usize },
    /// Pair-based quantities are undefined for fewer than two pixels.
    #[error("pair statistics need at least 2 pixels, got {m}")]
    DegenerateTotal { m: u64 },
    /// A zero denominator met a nonzero numerator. Unreachable for tables
    /// built from real label maps.
    #[error("inconsistent contingency table: {0}")]
    ImpossibleTable(String),
    /// Square sums would overflow 128-bit arithmetic.
    #[error("table with {m} pixels is too large for exact arithmetic")]
    Overflow { m: u64 },
    #[error("exact permutation enumeration supports at most {max} pixels, got {m}")]
    TooLargeForExact { m: u64, max: u64 },
    #[error("Monte-Carlo estimation needs at least one sample")]
    InvalidSampleCount,
    #[error("k = {k} is outside the admissible range [{min}, {max}]")]
    InvalidK { k: usize, min: usize, max: usize },
    #[error("invalid grid spec: {0}")]
    InvalidGrid(String),
    #[error("class {label} does not fill its bounding box and cannot be bisected")]
    NonRectangularClass { label: u32 },
    #[error("cannot aggregate an empty report list")]
    EmptyInput,
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },
    #[error("truncated data in {path}: expected {expected} samples, found {got}")]
    TruncatedData {
        path: PathBuf,
        expected: usize,
        got: usize,
    },
    #[error("malformed data in {path}: {reason}")]
    MalformedData { path: PathBuf, reason: String },
    #[error("label {label} exceeds the format maximum {max}")]
    LabelOutOfRange { label: u32, max: u32 },
    #[error("duplicate sample id {0:?} in manifest")]
    DuplicateSampleId(String),
    #[error("manifest {0} has no entries")]
    EmptyManifest(PathBuf),
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("JSON error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Short stable name of the variant, used in diagnostics and report columns.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptyMap => "EmptyMap",
            Error::BufferSize { .. } => "BufferSize",
            Error::ShapeMismatch { .. } => "ShapeMismatch",
            Error::EmptySelection { .. } => "EmptySelection",
            Error::DegenerateTotal { .. } => "DegenerateTotal",
            Error::ImpossibleTable(_) => "ImpossibleTable",
            Error::Overflow { .. } => "Overflow",
            Error::TooLargeForExact { .. } => "TooLargeForExact",
            Error::InvalidSampleCount => "InvalidSampleCount",
            Error::InvalidK { .. } => "InvalidK",
            Error::InvalidGrid(_) => "InvalidGrid",
            Error::NonRectangularClass { .. } => "NonRectangularClass",
            Error::EmptyInput => "EmptyInput",
            Error::UnsupportedFormat(_) => "UnsupportedFormat",
            Error::MalformedHeader { .. } => "MalformedHeader",
            Error::TruncatedData { .. } => "TruncatedData",
            Error::MalformedData { .. } => "MalformedData",
            Error::LabelOutOfRange { .. } => "LabelOutOfRange",
            Error::DuplicateSampleId(_) => "DuplicateSampleId",
            Error::EmptyManifest(_) => "EmptyManifest",
            Error::Io { .. } => "IoFailure",
            Error::Csv { .. } => "Csv",
            Error::Json { .. } => "Json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
