//! Grid case data: buses, branches and generators as read from case files.
//!
//! Case records keep the units of the source data (MW, MVAr, degrees, p.u.
//! impedances). Everything downstream of [`GridCase`] works in per-unit on
//! `base_mva` and radians; use the `*_pu` helpers to cross that boundary.

mod json;
mod matpower;
pub(crate) mod validate;

use std::collections::HashMap;

pub use json::{emit_case_json, parse_case_json};
pub use matpower::parse_case_matpower;
pub use validate::{validate_case, Finding, ValidationReport};

use crate::error::GraphError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BusKind {
    Slack,
    Pv,
    Pq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    In,
    Out,
}

impl Status {
    pub fn is_in(self) -> bool {
        self == Status::In
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    /// External bus number.
    pub id: i64,
    pub kind: BusKind,
    pub p_load: f64,
    pub q_load: f64,
    /// Initial voltage magnitude, p.u.
    pub v_mag_setpoint: f64,
    /// Initial voltage angle, degrees. For the slack bus this is the
    /// reference angle of the AC solution.
    pub v_ang_init: f64,
    /// Shunt conductance, MW consumed at 1 p.u.
    pub shunt_g: f64,
    /// Shunt susceptance, MVAr injected at 1 p.u.
    pub shunt_b: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from_bus: i64,
    pub to_bus: i64,
    pub r: f64,
    pub x: f64,
    /// Total line charging susceptance, p.u.
    pub b_charging: f64,
    /// Off-nominal turns ratio; 1.0 for lines.
    pub tap: f64,
    /// Phase shift, degrees.
    pub shift: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: i64,
    pub p_gen: f64,
    pub q_gen: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub v_setpoint: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridCase {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub gens: Vec<Generator>,
}

/// Stable map from external bus ids to internal indices `0..N`.
#[derive(Debug, Clone, PartialEq)]
pub struct BusIndex {
    ids: Vec<i64>,
    lookup: HashMap<i64, usize>,
}

impl BusIndex {
    pub fn new(ids: impl IntoIterator<Item = i64>) -> Self {
        let ids: Vec<i64> = ids.into_iter().collect();
        let lookup = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        Self { ids, lookup }
    }

    pub fn index_of(&self, id: i64) -> Option<usize> {
        self.lookup.get(&id).copied()
    }

    pub fn try_index_of(&self, id: i64) -> Result<usize, GraphError> {
        self.index_of(id).ok_or(GraphError::UnknownBus(id))
    }

    pub fn id_of(&self, index: usize) -> i64 {
        self.ids[index]
    }

    pub fn ids(&self) -> &[i64] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

impl GridCase {
    pub fn bus_index(&self) -> BusIndex {
        BusIndex::new(self.buses.iter().map(|b| b.id))
    }

    pub fn n_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn bus(&self, id: i64) -> Option<&Bus> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn slack_buses(&self) -> impl Iterator<Item = &Bus> {
        self.buses.iter().filter(|b| b.kind == BusKind::Slack)
    }

    pub fn slack_id(&self) -> Option<i64> {
        self.slack_buses().next().map(|b| b.id)
    }

    pub fn in_service_branches(&self) -> impl Iterator<Item = &Branch> {
        self.branches.iter().filter(|b| b.status.is_in())
    }

    pub fn in_service_gens(&self) -> impl Iterator<Item = &Generator> {
        self.gens.iter().filter(|g| g.status.is_in())
    }

    /// Buses with positive real-power demand, in case order.
    pub fn load_bus_ids(&self) -> Vec<i64> {
        self.buses.iter().filter(|b| b.p_load > 0.0).map(|b| b.id).collect()
    }

    /// Buses carrying at least one in-service generator, in case order.
    pub fn generator_bus_ids(&self) -> Vec<i64> {
        self.buses
            .iter()
            .filter(|b| self.in_service_gens().any(|g| g.bus == b.id))
            .map(|b| b.id)
            .collect()
    }

    /// Net real-power injection `p_g - p_d` per bus, p.u. on `base_mva`.
    pub fn injections_pu(&self) -> Vec<f64> {
        self.net_injection_pu(|g| g.p_gen, |b| b.p_load)
    }

    /// Net reactive-power injection `q_g - q_d` per bus, p.u.
    pub fn reactive_injections_pu(&self) -> Vec<f64> {
        self.net_injection_pu(|g| g.q_gen, |b| b.q_load)
    }

    fn net_injection_pu(&self, gen: impl Fn(&Generator) -> f64, load: impl Fn(&Bus) -> f64) -> Vec<f64> {
        let index = self.bus_index();
        let mut p: Vec<f64> = self.buses.iter().map(|b| -load(b)).collect();
        for g in self.in_service_gens() {
            if let Some(i) = index.index_of(g.bus) {
                p[i] += gen(g);
            }
        }
        p.iter().map(|v| v / self.base_mva).collect()
    }

    /// Case angle of the slack bus in radians (0 when there is none).
    pub fn reference_angle(&self) -> f64 {
        self.slack_buses().next().map_or(0.0, |b| b.v_ang_init.to_radians())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    /// Three buses in a line, unit reactances, 1 -- 2 -- 3 with bus 1 as slack.
    pub fn path3() -> GridCase {
        let bus = |id, kind| Bus {
            id,
            kind,
            p_load: 0.0,
            q_load: 0.0,
            v_mag_setpoint: 1.0,
            v_ang_init: 0.0,
            shunt_g: 0.0,
            shunt_b: 0.0,
        };
        let line = |from, to| Branch {
            from_bus: from,
            to_bus: to,
            r: 0.0,
            x: 1.0,
            b_charging: 0.0,
            tap: 1.0,
            shift: 0.0,
            status: Status::In,
        };
        GridCase {
            name: "path3".into(),
            base_mva: 100.0,
            buses: vec![bus(1, BusKind::Slack), bus(2, BusKind::Pq), bus(3, BusKind::Pq)],
            branches: vec![line(1, 2), line(2, 3)],
            gens: vec![Generator {
                bus: 1,
                p_gen: 0.0,
                q_gen: 0.0,
                q_min: -100.0,
                q_max: 100.0,
                v_setpoint: 1.0,
                status: Status::In,
            }],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::path3;
    use super::*;

    #[test]
    fn injections_follow_generation_minus_load() {
        let mut case = path3();
        case.buses[2].p_load = 100.0;
        case.gens[0].p_gen = 40.0;
        assert_eq!(case.injections_pu(), vec![0.4, 0.0, -1.0]);
    }

    #[test]
    fn bus_index_is_stable() {
        let idx = BusIndex::new([10, 3, 7]);
        assert_eq!(idx.index_of(3), Some(1));
        assert_eq!(idx.id_of(2), 7);
        assert!(idx.index_of(4).is_none());
    }
}
