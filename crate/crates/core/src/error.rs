use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("gamma function pole at z = {0}")]
    GammaPole(f64),

    #[error("series did not converge within {terms} terms (last term {last:e})")]
    SeriesNonConvergence { terms: usize, last: f64 },

    #[error("argument |y| = {abs:.3} outside the series radius {radius}")]
    SeriesRadius { abs: f64, radius: f64 },

    #[error("argument {y} outside the sector |arg y| <= {max_arg:.4} where the recessive evaluation is stable")]
    Sector { y: String, max_arg: f64 },

    #[error("quadrature did not reach tolerance {tol:e} (estimate {estimate:e}) after {subdivisions} subdivisions")]
    Quadrature {
        tol: f64,
        estimate: f64,
        subdivisions: usize,
    },

    #[error("initial data does not decay at the grid ends: |q(edge)| = {edge:e}, max |q| = {max:e}")]
    DecayViolation { edge: f64, max: f64 },

    #[error("step size underflow at x = {x} (h = {h:e})")]
    StepUnderflow { x: f64, h: f64 },

    #[error("point {value} outside the grid range [{lo}, {hi}]")]
    OutOfGrid { value: f64, lo: f64, hi: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("evaluation point {0} lies on the branch cut")]
    OnCut(String),

    #[error("tail of F does not decay at the left grid end: |F| = {0:e}")]
    TailDecay(f64),

    #[error("{what}: values disagree ({lhs} vs {rhs}, tolerance {tol:e})")]
    Disagreement {
        what: &'static str,
        lhs: String,
        rhs: String,
        tol: f64,
    },

    #[error("inconsistent inputs: {0}")]
    Inconsistent(String),

    #[error("wrap-around contamination at t = {t}: edge {edge:e} vs max {max:e}")]
    BoxContamination { t: f64, edge: f64, max: f64 },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("unknown {kind} '{name}' (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("assertion failed: {0}")]
    Assertion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
