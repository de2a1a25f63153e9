use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("infeasible parameters: {0}")]
    InfeasibleParameters(&'static str),

    #[error("integration diverged at t = {time}")]
    IntegrationDiverged { time: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate moment fit: {0}")]
    FitDegenerate(String),

    #[error("sampler initialization failed: no finite start after {attempts} attempts")]
    InitializationFailed { attempts: usize },

    #[error("degenerate chain: {0}")]
    DegenerateChain(&'static str),

    #[error("forecast unstable: {dropped} of {total} draws diverged")]
    ForecastUnstable { dropped: usize, total: usize },

    #[error("window {window}: {source}")]
    Window {
        window: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable snake-case name of the innermost variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InfeasibleParameters(_) => "infeasible_parameters",
            Error::IntegrationDiverged { .. } => "integration_diverged",
            Error::InvalidConfig(_) => "invalid_config",
            Error::FitDegenerate(_) => "fit_degenerate",
            Error::InitializationFailed { .. } => "initialization_failed",
            Error::DegenerateChain(_) => "degenerate_chain",
            Error::ForecastUnstable { .. } => "forecast_unstable",
            Error::Window { source, .. } => source.kind(),
        }
    }

    /// Window index attached by the sequential driver, if any.
    pub fn window(&self) -> Option<usize> {
        match self {
            Error::Window { window, .. } => Some(*window),
            _ => None,
        }
    }

    pub(crate) fn in_window(self, window: usize) -> Self {
        match self {
            e @ Error::Window { .. } => e,
            e => Error::Window {
                window,
                source: Box::new(e),
            },
        }
    }
}
