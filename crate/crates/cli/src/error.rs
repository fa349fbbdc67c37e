use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Model(#[from] sabr_atom::Error),

    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("cannot write JSON: {0}")]
    Json(#[from] serde_json::Error),
}

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

impl CliError {
    pub fn exit_code(&self) -> u8 {
        use sabr_atom::Error as E;
        match self {
            CliError::Clap(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Model(e) => match e {
                E::Domain(_)
                | E::OscillationBudgetExceeded { .. }
                | E::RegimeTooSmall { .. }
                | E::DivergentRegime { .. }
                | E::Correlated(_)
                | E::PriceOutOfBounds { .. }
                | E::StencilOutOfDomain { .. }
                | E::InvalidConfig(_) => EXIT_USAGE,
                E::NonConvergence { .. }
                | E::Overflow(_)
                | E::NegativeValue { .. }
                | E::NoRoot { .. }
                | E::CurvatureNonpositive(_)
                | E::NonpositiveVol(_) => EXIT_NUMERICAL,
            },
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }
}
