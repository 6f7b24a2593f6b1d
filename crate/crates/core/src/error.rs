use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid entity id {0}")]
    InvalidId(usize),
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("subset {subset:?} of pair ({i}, {j}) is empty")]
    EmptySubset { i: usize, j: usize, subset: crate::constraints::SubsetId },
    #[error("every subset of pair ({0}, {1}) is empty")]
    NoFeasibleSubset(usize, usize),
    #[error("placement is not a member of subset {subset:?} of pair ({i}, {j})")]
    NotMember { i: usize, j: usize, subset: crate::constraints::SubsetId },
    #[error("relaxation parameter {0} outside (0, 2]")]
    InvalidLambda(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("all preference weights of pair ({0}, {1}) vanished")]
    AllWeightsZero(usize, usize),
    #[error("every subset of pair ({0}, {1}) is active")]
    AllActive(usize, usize),
    #[error("placement is infeasible: pair ({i}, {j}) overlaps by {area}")]
    Infeasible { i: usize, j: usize, area: f64 },
    #[error("connected component containing variable {0} has no fixed anchor")]
    FloatingComponent(usize),
    #[error("PCG did not converge in {iterations} iterations (relative residual {residual:e})")]
    PcgDiverged { iterations: usize, residual: f64 },
    #[error("side {side:?} holds {pins} pins but only {slots} slots")]
    TooManyPins { side: crate::model::Side, pins: usize, slots: usize },
    #[error("unknown synthetic instance {0:?}")]
    UnknownInstance(String),
    #[error("{file}:{line}: {msg}")]
    Parse { file: String, line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
