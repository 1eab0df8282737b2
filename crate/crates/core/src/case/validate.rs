use std::collections::VecDeque;
use std::fmt;

use super::{BusKind, GridCase};

#[derive(Debug, Clone, PartialEq)]
pub enum Finding {
    NoSlack,
    /// Sizes of the connected components of the in-service network, largest first.
    Disconnected { component_sizes: Vec<usize> },
    ZeroReactance { from: i64, to: i64 },
    SelfLoop { bus: i64 },
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Finding::NoSlack => write!(f, "no slack bus"),
            Finding::Disconnected { component_sizes } => {
                write!(f, "disconnected: component sizes {component_sizes:?}")
            }
            Finding::ZeroReactance { from, to } => write!(f, "zero reactance on branch {from}-{to}"),
            Finding::SelfLoop { bus } => write!(f, "branch connects bus {bus} to itself"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Checks the modeling invariants of a parsed case; an empty report means the
/// case can be handed to the graph and solver layers.
pub fn validate_case(case: &GridCase) -> ValidationReport {
    let mut findings = Vec::new();

    if !case.buses.iter().any(|b| b.kind == BusKind::Slack) {
        findings.push(Finding::NoSlack);
    }

    for br in case.in_service_branches() {
        if br.from_bus == br.to_bus {
            findings.push(Finding::SelfLoop { bus: br.from_bus });
        } else if br.x == 0.0 {
            findings.push(Finding::ZeroReactance {
                from: br.from_bus,
                to: br.to_bus,
            });
        }
    }

    let sizes = component_sizes(case);
    if sizes.len() > 1 {
        findings.push(Finding::Disconnected { component_sizes: sizes });
    }

    ValidationReport { findings }
}

/// Connected-component sizes of the in-service topology, largest first.
pub(crate) fn component_sizes(case: &GridCase) -> Vec<usize> {
    let index = case.bus_index();
    let n = case.n_buses();
    let mut adj = vec![Vec::new(); n];
    for br in case.in_service_branches() {
        if let (Some(i), Some(j)) = (index.index_of(br.from_bus), index.index_of(br.to_bus)) {
            adj[i].push(j);
            adj[j].push(i);
        }
    }

    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut size = 0;
        while let Some(v) = queue.pop_front() {
            size += 1;
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::fixtures::path3;
    use crate::case::Status;

    #[test]
    fn path3_is_valid() {
        assert!(validate_case(&path3()).is_valid());
    }

    #[test]
    fn outage_splits_path3() {
        let mut case = path3();
        case.branches[1].status = Status::Out;
        let report = validate_case(&case);
        assert_eq!(
            report.findings,
            vec![Finding::Disconnected {
                component_sizes: vec![2, 1]
            }]
        );
    }

    #[test]
    fn zero_reactance_is_flagged() {
        let mut case = path3();
        case.branches[0].x = 0.0;
        assert_eq!(
            validate_case(&case).findings,
            vec![Finding::ZeroReactance { from: 1, to: 2 }]
        );
    }

    #[test]
    fn missing_slack_is_flagged() {
        let mut case = path3();
        case.buses[0].kind = BusKind::Pv;
        assert_eq!(validate_case(&case).findings, vec![Finding::NoSlack]);
    }
}
