//! Transmission restoration planning: black-start schedules that account for
//! cyber-attack N-k contingencies during restoration.

pub mod attack;
pub mod case;
pub mod cli;
pub mod dispatch;
pub mod error;
pub mod lp;
pub mod optimizer;
pub mod par;
pub mod report;
pub mod sim;
pub mod topology;

pub use attack::{cascade, robustness_indices, AttackIncident, AttackTarget, CascadeOutcome};
pub use case::{parse_case, serialize_case, validate, BusId, GenId, GridCase, LineId};
pub use error::{CaseError, DispatchError, ScheduleError, TopologyError};
pub use optimizer::{evaluate_schedule, optimize, ObjectiveConfig, SearchConfig};
pub use sim::{simulate, simulate_sequence, SimConfig, SystemState, Trajectory};
