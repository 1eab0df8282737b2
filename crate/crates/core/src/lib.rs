//! Spreading of single-bus power perturbations through a grid, measured with
//! graph-signal tools under DC and AC power flow.
//!
//! Records ([`case::GridCase`]) keep MW, MVAr and degrees as read from the
//! case file. Operators, signals and solvers work in per-unit on the case
//! base and radians; sensitivities are reported in deg/MW.

pub mod ac;
pub mod analysis;
pub mod case;
pub mod dc;
pub mod error;
pub mod graph;
pub mod signal;

pub use case::{parse_case_json, parse_case_matpower, validate_case, BusKind, GridCase};
pub use dc::{Model, PerturbationKind, PerturbationSpec};
pub use error::{AnalysisError, CaseError, GraphError};
pub use graph::{build_graph, reduced_susceptance_inverse, BetaMatrix, GridGraph};
pub use signal::{GraphSignal, Unit};
