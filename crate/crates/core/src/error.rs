use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    Dimensions(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid Lévy measure: {}", .0.join("; "))]
    LevyMeasure(Vec<String>),

    #[error("positivity condition violated: minimum eigenvalue of A + iB is {min_eigenvalue:e}")]
    Positivity { min_eigenvalue: f64 },

    #[error("reduced dynamics is not autonomous: {0}")]
    NotAutonomous(String),

    #[error("quadrature did not converge after {subdivisions} subdivisions (error estimate {estimate:e})")]
    Quadrature { subdivisions: usize, estimate: f64 },

    #[error("no equilibrium along this direction: {0}")]
    NoEquilibrium(String),

    #[error("grid refused: {0}")]
    Grid(String),

    #[error("conditioning probability {0:e} below threshold")]
    VanishingProbability(f64),

    #[error("model file: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
