use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A single failed model invariant, with the sample point that exposed it.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub field: String,
    pub message: String,
    pub point: Option<Vec<f64>>,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)?;
        if let Some(p) = &self.point {
            write!(f, " (at {p:?})")?;
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("non-finite value {value} at sample point {point:?}")]
    Evaluation { point: Vec<f64>, value: f64 },

    #[error("schema error in field `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("invalid model: {}", join(.0))]
    InvalidModel(Vec<Violation>),

    #[error("regime error: {0}")]
    Regime(String),

    #[error("regime classification inconclusive; refine probes: {}", .0.join("; "))]
    Inconclusive(Vec<String>),

    #[error("covariance not PSD within tolerance (jitter up to {max_jitter:e})")]
    NotPsd { max_jitter: f64 },

    #[error("embedding failed; increase padding or use chol_paths (min eigenvalue {min:e}, max {max:e})")]
    Embedding { min: f64, max: f64 },

    #[error("mesh too coarse: {detail}; suggested mesh {suggested:e}")]
    MeshTooCoarse { suggested: f64, detail: String },

    #[error("normal window not saturated at S = {s_max}; use a larger S")]
    NotSaturated { s_max: f64 },

    #[error("capped mass {capped:e} exceeds 1e-6 of the estimate {estimate:e}")]
    CappedMass { capped: f64, estimate: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("partition error: {0}")]
    Partition(String),

    #[error("constant estimation failed at {location}: {source}")]
    Constant {
        location: String,
        #[source]
        source: Box<Error>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}
