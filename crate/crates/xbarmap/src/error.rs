//! Error type shared by every stage of the pipeline.

use std::fmt;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// File could not be read or written.
    Io { path: PathBuf, source: std::io::Error },
    /// Manifest JSON is syntactically or semantically invalid.
    Manifest(String),
    /// Weight/feature blob is shorter than the manifest promises.
    BlobLengthMismatch {
        name: String,
        needed_bytes: u64,
        available_bytes: u64,
    },
    /// Manifest declares a dtype this tool does not read.
    UnsupportedDtype(String),
    /// A dimension or count that must be positive is not, or sizes disagree.
    InvalidDimension(String),
    /// A weight does not fit the declared fixed-point width.
    WeightOutOfRange { value: i64, weight_bits: u32 },
    /// Hardware configuration violates its own constraints.
    InvalidConfig(String),
    /// Sparsity target outside [0, 1).
    SparsityOutOfRange(f64),
    /// Histogram or candidate list is empty where at least one entry is required.
    EmptyHistogram,
    EmptyCandidates,
    /// A kernel carries a nonzero weight outside its assigned pattern mask.
    SupportOutsideMask { out_channel: usize, in_channel: usize },
    /// A pattern is taller than the crossbar; it can never be placed.
    BlockTooTall { height: usize, crossbar_rows: usize },
    /// Index stream bytes cannot be decoded back into a placement.
    MalformedStream(String),
    /// A stored output-channel index is not below the layer's output count.
    IndexOutOfRange { index: u32, out_channels: usize },
    /// Feature map shape does not match the layer being executed.
    DimensionMismatch(String),
    /// The index stream does not describe the placement it was paired with.
    StreamPlacementMismatch,
    /// Convolution window reaches outside the padded feature map.
    WindowOutOfBounds { y: isize, x: isize },
    /// Baseline energy is zero; the comparison ratio is undefined.
    ZeroBaseline,
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io { path, source } => write!(f, "{}: {source}", path.display()),
            Error::Manifest(msg) => write!(f, "manifest: {msg}"),
            Error::BlobLengthMismatch { name, needed_bytes, available_bytes } => write!(
                f,
                "blob length mismatch for '{name}': need {needed_bytes} bytes, blob has {available_bytes}"
            ),
            Error::UnsupportedDtype(tag) => write!(f, "unsupported dtype tag '{tag}'"),
            Error::InvalidDimension(msg) => write!(f, "invalid dimension: {msg}"),
            Error::WeightOutOfRange { value, weight_bits } => {
                write!(f, "weight {value} does not fit in {weight_bits} bits")
            }
            Error::InvalidConfig(msg) => write!(f, "invalid hardware config: {msg}"),
            Error::SparsityOutOfRange(v) => {
                write!(f, "sparsity target {v} outside [0, 1)")
            }
            Error::EmptyHistogram => write!(f, "pattern histogram is empty"),
            Error::EmptyCandidates => write!(f, "candidate pattern list is empty"),
            Error::SupportOutsideMask { out_channel, in_channel } => write!(
                f,
                "kernel ({out_channel}, {in_channel}) has a nonzero weight outside its assigned pattern"
            ),
            Error::BlockTooTall { height, crossbar_rows } => write!(
                f,
                "pattern block height {height} exceeds crossbar rows {crossbar_rows}"
            ),
            Error::MalformedStream(msg) => write!(f, "malformed index stream: {msg}"),
            Error::IndexOutOfRange { index, out_channels } => write!(
                f,
                "output channel index {index} out of range for {out_channels} channels"
            ),
            Error::DimensionMismatch(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::StreamPlacementMismatch => {
                write!(f, "index stream does not reconstruct to the given placement")
            }
            Error::WindowOutOfBounds { y, x } => {
                write!(f, "window origin ({y}, {x}) outside padded feature map")
            }
            Error::ZeroBaseline => write!(f, "baseline energy is zero"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
