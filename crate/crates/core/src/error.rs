use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid {width}x{height}: both dimensions must be at least 1")]
    InvalidGrid { width: usize, height: usize },

    #[error("pixel {index} lies outside a grid with {len} pixels")]
    OffGrid { index: usize, len: usize },

    #[error("grid mismatch: expected {expected:?}, found {found:?}")]
    GridMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("shape masks must contain at least one pixel")]
    EmptyMask,

    #[error("image has {values} values but the grid holds {pixels} pixels")]
    ValueCount { values: usize, pixels: usize },

    #[error("non-finite image value at observed pixel {0}")]
    NonFinite(usize),

    #[error("region levels coincide (u_in = u_ex = {0}); every pixel would be tied")]
    DegenerateLevels(f64),

    #[error("quantile fractions must satisfy 0 <= lo < hi <= 1, got ({lo}, {hi})")]
    InvalidQuantiles { lo: f64, hi: f64 },

    #[error("image has no observed pixels")]
    NoObservedPixels,

    #[error("at least one shape is required")]
    EmptyShapeList,

    #[error("invalid composition: {0}")]
    InvalidComposition(String),

    #[error("composition is redundant: removing shape {0} leaves the region unchanged")]
    Redundant(usize),

    #[error("shape index {index} out of range for a dictionary of {count} shapes")]
    ShapeIndex { index: usize, count: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("linear program is unbounded")]
    Unbounded,

    #[error("simplex exceeded {0} pivots")]
    PivotLimit(usize),

    #[error("dictionary has {count} shapes; exhaustive search is limited to {limit}")]
    TooManyShapes { count: usize, limit: usize },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("coefficient {value} on cell {index} lies strictly inside (0, 1)")]
    InBand { index: usize, value: f64 },

    #[error("rank-deficient system: rank {rank}, required {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("singular linear system")]
    Singular,

    #[error("composition is not basic: {0}")]
    NotBasic(String),

    #[error("lucid object condition fails on {0} pixels")]
    LocViolated(usize),

    #[error("no tangent witness found after {0} rounds")]
    WitnessNotFound(usize),

    #[error("PGM error: {0}")]
    Pgm(String),

    #[error("dictionary error at line {line}: {message}")]
    DictionarySyntax { line: usize, message: String },

    #[error("dictionary entry '{label}': {message}")]
    DictionaryEntry { label: String, message: String },

    #[error("I/O error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
