use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure mode surfaced by the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge after {iterations} iterations")]
    NonConvergence { what: &'static str, iterations: usize },

    #[error("result overflows f64: {0}")]
    Overflow(String),

    #[error("y = {y} is below the oscillatory-quadrature floor {floor}; use the small-time asymptotics")]
    OscillationBudgetExceeded { y: f64, floor: f64 },

    #[error("2 nu^2 t = {y} is below the finite-time floor {floor}; use mass_smalltime")]
    RegimeTooSmall { y: f64, floor: f64 },

    #[error("quadrature returned a negative value {value} beyond tolerance {tolerance}")]
    NegativeValue { value: f64, tolerance: f64 },

    #[error("saddlepoint equation has no positive root (y = {y}, z = {z}); residual signs scanned: {profile}")]
    NoRoot { y: f64, z: f64, profile: String },

    #[error("saddlepoint curvature M_y = {0} is not positive")]
    CurvatureNonpositive(f64),

    #[error("series diverges: y0^2 (beta-1)^2 / (nu^2 x0^(2(1-beta))) = {ratio}")]
    DivergentRegime { ratio: f64 },

    #[error("correlation rho = {0} is not supported; only rho = 0 is implemented")]
    Correlated(f64),

    #[error("option price {price} outside no-arbitrage bounds [{lower}, {upper}]")]
    PriceOutOfBounds { price: f64, lower: f64, upper: f64 },

    #[error("truncated wing expansion is nonpositive ({0}); strike not small enough")]
    NonpositiveVol(f64),

    #[error("finite-difference stencil at k = {k} leaves the curve domain [{lo}, {hi}]")]
    StencilOutOfDomain { k: f64, lo: f64, hi: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
