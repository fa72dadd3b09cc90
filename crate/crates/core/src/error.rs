use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("tensor has non-finite components {0:?}")]
    NonFinite([f64; 6]),
    #[error("invalid eigenvalue bounds: eps = {eps} must be < kappa = {kappa}")]
    InvalidBounds { eps: f64, kappa: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeshError {
    #[error("structured mesh needs p >= 2 points per side, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate domain [{x0}, {x1}] x [{y0}, {y1}]")]
    DegenerateDomain { x0: f64, x1: f64, y0: f64, y1: f64 },
    #[error("unsupported polynomial degree {0} (expected 1 or 2)")]
    UnsupportedDegree(usize),
    #[error("triangle {0} has non-positive signed area")]
    Inverted(usize),
    #[error("edge ({0}, {1}) is shared by more than two triangles")]
    NonManifold(usize, usize),
    #[error("field value at node {node} is not finite")]
    NonFiniteValue { node: usize },
    #[error("field has {got} nodes but the dof map has {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssemblyError {
    #[error("diffusion tensor is not symmetric positive semidefinite at ({x}, {y})")]
    DiffusionNotPsd { x: f64, y: f64 },
    #[error("negative {name} coefficient {value}")]
    NegativeCoefficient { name: &'static str, value: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("time step must be positive, got {0}")]
    NonPositiveTimeStep(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("non-finite iterate at extragradient iteration {iteration}")]
    NonFinite { iteration: usize },
    #[error("extragradient diverged at iteration {iteration}: increment {increment:e} vs initial {initial:e}")]
    Diverged { iteration: usize, increment: f64, initial: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("singular pivot in column {column} of the direct factorization")]
    SingularPivot { column: usize },
    #[error("linear solve residual {residual:e} exceeds tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Crate-level error.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("VI solve failed at time step {step}: {source}")]
    StepFailed { step: usize, source: SolveError },
    #[error("analysis error: {0}")]
    Analysis(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
