use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("`{what}` = {value} lies outside {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("window is empty: {0}")]
    EmptyWindow(String),

    #[error("window is undefined: {0}")]
    Undefined(String),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("mu = {mu} does not strictly exceed the threshold {threshold}")]
    BelowThreshold { mu: f64, threshold: f64 },

    #[error("degenerate parameters are not admissible for {0}")]
    Degenerate(&'static str),

    #[error("singular evaluation: {0}")]
    Singular(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("grid: {0}")]
    Grid(String),

    #[error("dt = {dt} exceeds the stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("need at least {required} samples, found {found}")]
    InsufficientSamples { required: usize, found: usize },

    #[error("oracle quadrature did not converge: {0}")]
    Oracle(String),

    #[error("initial data: {0}")]
    InitialData(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}
