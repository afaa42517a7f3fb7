//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("polynomial degree {0} outside supported range 1..={1}")]
    UnsupportedDegree(usize, usize),

    #[error("quadrature family parameter {0} outside [0, 1]")]
    FamilyParameterOutOfRange(f64),

    #[error("quadrature rule invalid: {0}")]
    InvalidRule(String),

    #[error("quadrature rule not exact to degree {degree}: defect {defect:e}")]
    InexactRule { degree: usize, defect: f64 },

    #[error("sample count {got} does not match rule size {expected}")]
    SampleCountMismatch { expected: usize, got: usize },

    #[error("invalid basis nodes: {0}")]
    InvalidNodes(String),

    #[error("basis index {index} out of range for degree {degree}")]
    IndexOutOfRange { index: usize, degree: usize },

    #[error("matrix numerically singular: {0}")]
    SingularMatrix(String),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("degenerate mesh: {0}")]
    DegenerateMesh(String),

    #[error("time {t} outside partition ({t_start}, {t_end}]")]
    TimeOutsidePartition { t: f64, t_start: f64, t_end: f64 },

    #[error("point x = {x} outside domain [{x_min}, {x_max}]")]
    OutsideDomain { x: f64, x_min: f64, x_max: f64 },

    #[error("node trajectories cross in partition {partition}: {detail}")]
    CrossingTrajectories { partition: usize, detail: String },

    #[error("invalid reconfiguration: {0}")]
    InvalidReconfiguration(String),

    #[error("field length {got} does not match space dof count {expected}")]
    FieldSizeMismatch { expected: usize, got: usize },

    #[error("shift undefined: source has {source_dofs} dofs, target has {target_dofs}")]
    ShiftTopologyMismatch {
        source_dofs: usize,
        target_dofs: usize,
    },

    #[error("invalid problem data: {0}")]
    InvalidProblem(String),

    #[error("exact solution bundle required but not present")]
    MissingExactSolution,

    #[error("time step {dt} exceeds ceiling {ceiling} in partition {partition}")]
    TimeStepCeiling {
        partition: usize,
        dt: f64,
        ceiling: f64,
    },

    #[error("linear solve failed in partition {partition}: {detail}")]
    SolveFailed { partition: usize, detail: String },

    #[error("run aborted in partition {partition}: {source}")]
    PartitionFailed {
        partition: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Index of the partition a run aborted in, if the failure is tied to one.
    pub fn partition_index(&self) -> Option<usize> {
        match self {
            Error::PartitionFailed { partition, .. }
            | Error::SolveFailed { partition, .. }
            | Error::TimeStepCeiling { partition, .. }
            | Error::CrossingTrajectories { partition, .. } => Some(*partition),
            _ => None,
        }
    }
}
