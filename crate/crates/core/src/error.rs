use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix determinant {0} differs from 1")]
    InvalidMatrix(f64),

    #[error("point ({x}, {y}) is not in the open upper half-plane")]
    NotInHalfPlane { x: f64, y: f64 },

    #[error("invalid horoball: {0}")]
    InvalidHoroball(String),

    #[error("unbounded excursion: the ray runs into the horoball's point at infinity")]
    UnboundedExcursion,

    #[error("no intersection between the ray and the horoball")]
    NoIntersection,

    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("fraction {p}/{q} is not in lowest terms")]
    NotReduced { p: String, q: String },

    #[error("surface is disconnected, orbits {0:?}")]
    Disconnected(Vec<Vec<usize>>),

    #[error("parse error at `{token}`: {reason}")]
    Parse { token: String, reason: String },

    #[error("eps = {eps} exceeds the structural bound eps0 = {eps0}")]
    EpsTooLarge { eps: f64, eps0: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}
