use thiserror::Error;

/// Errors produced by the solvers, the instance builders and the file layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("undefined map: no image for point `{0}`")]
    UndefinedMap(String),

    #[error("measures coincide; Bayes function is already fair")]
    MeasuresCoincide,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("quantile level {0} is outside [0, 1]")]
    QuantileLevel(f64),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("violates mass bound: sum of w/|d| over both sides is {total} > 1")]
    MassBound { total: f64 },

    #[error("unbalanced masses: source total {source_mass} vs target total {target_mass}")]
    Unbalanced { source_mass: f64, target_mass: f64 },

    #[error("no finite-cost transport plan exists")]
    NoFinitePlan,

    #[error("oracle domain exceeded: {0}")]
    OracleDomain(String),

    #[error("cost undefined on the zero-density set (d = 0)")]
    CostUndefined,

    #[error("awareness structure required: {0}")]
    NotAwareness(String),

    #[error("empty grid: {0}")]
    EmptyGrid(String),

    #[error("construction invalid: the classification problem is not nested on this grid")]
    NotNested,

    #[error("schema: {0}")]
    Schema(String),

    #[error("internal invariant breach: {0}")]
    Internal(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MassBound { .. }
            | Error::MeasuresCoincide
            | Error::NoFinitePlan
            | Error::Unbalanced { .. }
            | Error::NotNested
            | Error::NotAwareness(_) => 3,
            Error::Internal(_) => 4,
            _ => 2,
        }
    }

    /// Short stable identifier for machine-readable error objects.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UndefinedMap(_) => "undefined_map",
            Error::MeasuresCoincide => "measures_coincide",
            Error::InvalidMeasure(_) => "invalid_measure",
            Error::QuantileLevel(_) => "quantile_level",
            Error::InvalidInstance(_) => "invalid_instance",
            Error::MassBound { .. } => "mass_bound",
            Error::Unbalanced { .. } => "unbalanced",
            Error::NoFinitePlan => "no_finite_plan",
            Error::OracleDomain(_) => "oracle_domain",
            Error::CostUndefined => "cost_undefined",
            Error::NotAwareness(_) => "not_awareness",
            Error::EmptyGrid(_) => "empty_grid",
            Error::NotNested => "not_nested",
            Error::Schema(_) => "schema",
            Error::Internal(_) => "internal",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
