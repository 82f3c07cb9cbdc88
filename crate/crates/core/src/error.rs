use thiserror::Error;

use crate::graph::Vertex;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("vertices {0} and {1} are not adjacent")]
    NotAdjacent(Vertex, Vertex),
    #[error("vertex {0} is not in the graph")]
    UnknownVertex(Vertex),
    #[error("vertex {0} has no neighbours")]
    IsolatedVertex(Vertex),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("weight functions are defined for n >= 1, got {0}")]
    WeightDomain(u64),
    #[error("invalid weight function: {0}")]
    InvalidWeight(String),
    #[error("weight function has no exact rational form: {0}")]
    NotRational(String),
    #[error("path enumeration limited to {limit} steps, asked for {requested}")]
    EnumerationTooLong { requested: usize, limit: usize },
    #[error("payoff must be positive, got {0}")]
    InvalidPayoff(f64),
    #[error("bitwise-simultaneous alarms at time {time} (jump {jump})")]
    SimultaneousAlarms { time: f64, jump: u64 },
    #[error("coupling requires a nondecreasing weight function")]
    NonMonotoneWeight,
    #[error("tracker expected step {expected}, saw {seen}")]
    MissedStep { expected: u64, seen: u64 },
    #[error("logit undefined: alpha = {0}")]
    LogitDomain(f64),
    #[error("empty sample")]
    EmptySample,
    #[error("expected probability of cell {0} is not positive")]
    ZeroExpectedCell(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),
    #[error("replication {replication}: {source}")]
    Replication {
        replication: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("i/o: {0}")]
    Io(String),
}

impl Error {
    /// True when the root cause is a simultaneous-alarm abort.
    pub fn is_tie(&self) -> bool {
        match self {
            Error::SimultaneousAlarms { .. } => true,
            Error::Replication { source, .. } => source.is_tie(),
            _ => false,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
