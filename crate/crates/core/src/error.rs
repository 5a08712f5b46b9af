use thiserror::Error;

use crate::case::{BusId, LineId, Violation};

#[derive(Debug, Error)]
pub enum CaseError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("invalid case: {}", join(.0))]
    Semantic(Vec<Violation>),
    #[error("unsupported construct: section `{0}`")]
    Unsupported(String),
    #[error("matpower line {line}: {message}")]
    Matpower { line: usize, message: String },
}

fn join(v: &[Violation]) -> String {
    v.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error, PartialEq)]
pub enum TopologyError {
    #[error("connectivity between a node and itself is undefined ({0})")]
    IdenticalNodes(BusId),
    #[error("{0} is not in the graph")]
    UnknownNode(BusId),
    #[error("{0} has an endpoint outside the node set")]
    DanglingEdge(LineId),
}

#[derive(Debug, Error, PartialEq)]
pub enum DispatchError {
    #[error("{0} has non-positive reactance")]
    ZeroReactance(LineId),
    #[error("injections in the island containing {bus} are unbalanced by {mismatch} MW")]
    Unbalanced { bus: BusId, mismatch: f64 },
    #[error("{0} is not part of the case")]
    UnknownBus(BusId),
}

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("schedule is empty")]
    Empty,
    #[error("schedule references unknown {0}")]
    UnknownLine(LineId),
    #[error("schedule lists {0} twice")]
    Duplicate(LineId),
    #[error("{0} has no energized endpoint when it is reached")]
    Infeasible(LineId),
}
