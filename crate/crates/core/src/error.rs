use thiserror::Error;

pub type Result<T, E = DriveError> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DriveError {
    /// A state or derivative component became NaN or infinite.
    #[error("simulation diverged: component {component} is {value}")]
    Diverged { component: usize, value: f64 },

    #[error("simulation diverged at t = {t} s (last state: {state:?})")]
    DivergedAt { t: f64, state: Vec<f64> },

    #[error("window [{start}, {end}) outside recorded range [{t0}, {t_last})")]
    Range {
        start: f64,
        end: f64,
        t0: f64,
        t_last: f64,
    },

    #[error("need at least {needed} samples, got {got}")]
    Size { needed: usize, got: usize },

    #[error("fundamental magnitude is zero")]
    UndefinedFundamental,

    #[error("frequency {f1} Hz is not aligned to bin width {bin_width} Hz")]
    Alignment { f1: f64, bin_width: f64 },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    /// Reference lies outside the inverter hexagon; multiplying it by
    /// `scale` brings it back onto the boundary.
    #[error("over-modulation: reference must be scaled by {scale}")]
    OverModulation { scale: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl DriveError {
    /// Short machine-readable tag used by the CLI error line.
    pub fn kind(&self) -> &'static str {
        match self {
            DriveError::Diverged { .. } | DriveError::DivergedAt { .. } => "diverged",
            DriveError::Range { .. } => "range",
            DriveError::Size { .. } => "size",
            DriveError::UndefinedFundamental => "undefined_fundamental",
            DriveError::Alignment { .. } => "alignment",
            DriveError::DivisionByZero(_) => "division_by_zero",
            DriveError::Domain(_) => "domain",
            DriveError::OverModulation { .. } => "over_modulation",
            DriveError::Config(_) => "config",
            DriveError::Io(_) => "io",
        }
    }
}

impl From<std::io::Error> for DriveError {
    fn from(e: std::io::Error) -> Self {
        DriveError::Io(e.to_string())
    }
}
