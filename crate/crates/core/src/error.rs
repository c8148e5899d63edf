use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("scenario has no categories")]
    NoCategories,
    #[error("category {0:?} is empty (n must be at least 1)")]
    EmptyCategory(String),
    #[error("p out of range for category {id:?}: {value}")]
    PriorOutOfRange { id: String, value: f64 },
    #[error("v out of range for category {id:?}: {value}")]
    VulnerabilityOutOfRange { id: String, value: f64 },
    #[error("duplicate category id {0:?}")]
    DuplicateCategory(String),
    #[error("exposure dimension: matrix {matrix} must be {expected}x{expected}")]
    ExposureDimension { matrix: &'static str, expected: usize },
    #[error("contact count d[{i}][{j}] out of range: {value}")]
    ContactOutOfRange { i: usize, j: usize, value: f64 },
    #[error("transmission probability pi[{i}][{j}] out of range: {value}")]
    TransmissionOutOfRange { i: usize, j: usize, value: f64 },
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("max_group must be at least 1")]
    ZeroMaxGroup,
    #[error("group menu entry {size} must be between 1 and max_group {max_group}")]
    GroupMenu { size: u32, max_group: u32 },
    #[error("strategy dimension: expected {expected} categories, got t={t} g={g}")]
    StrategyDimension { expected: usize, t: usize, g: usize },
    #[error("infeasible strategy: {0}")]
    Infeasible(Violation),
}

impl ModelError {
    /// Short stable name of the violated invariant.
    pub fn invariant(&self) -> &'static str {
        match self {
            ModelError::NoCategories => "categories",
            ModelError::EmptyCategory(_) => "n out of range",
            ModelError::PriorOutOfRange { .. } => "p out of range",
            ModelError::VulnerabilityOutOfRange { .. } => "v out of range",
            ModelError::DuplicateCategory(_) => "duplicate category",
            ModelError::ExposureDimension { .. } => "exposure dimension",
            ModelError::ContactOutOfRange { .. } => "d out of range",
            ModelError::TransmissionOutOfRange { .. } => "pi out of range",
            ModelError::ZeroBudget => "budget",
            ModelError::ZeroMaxGroup => "max_group",
            ModelError::GroupMenu { .. } => "group menu",
            ModelError::StrategyDimension { .. } => "strategy dimension",
            ModelError::Infeasible(_) => "infeasible strategy",
        }
    }
}

#[derive(Debug, Error)]
pub enum FrontierError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no feasible strategy: the categories cannot absorb a budget of {budget} tests")]
    Infeasible { budget: u32 },
    #[error("{count} feasible strategies exceed the cap of {cap}")]
    TooManyStrategies { count: u128, cap: u64 },
    #[error("objective dimension mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },
    #[error("bucket sizes must be positive and finite")]
    InvalidBucketSpec,
}

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("line {line}: unknown category {category:?}")]
    UnknownCategory { line: u64, category: String },
    #[error("person {person:?} appears in categories {first:?} and {second:?}")]
    PersonInTwoCategories { person: String, first: String, second: String },
    #[error("line {line}: {positive} positives exceed {tested} tests")]
    PositivesExceedTests { line: u64, positive: u32, tested: u32 },
    #[error("smoothing must be finite and non-negative")]
    Smoothing,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("contact matrix is inconsistent for block ({i},{j}): n_i*d_ij = {forward} but n_j*d_ji = {backward}")]
    InconsistentBlock { i: usize, j: usize, forward: f64, backward: f64 },
    #[error("block ({i},{j}) needs edge density {density} > 1")]
    TooDense { i: usize, j: usize, density: f64 },
    #[error("contact matrix must be {k}x{k}")]
    Dimension { k: usize },
    #[error("invalid simulation parameter: {0}")]
    Parameter(String),
}
