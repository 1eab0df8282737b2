use serde::{Deserialize, Serialize};

use super::{Branch, Bus, BusKind, Generator, GridCase, Status};
use crate::error::CaseError;

#[derive(Serialize, Deserialize)]
struct CaseDoc {
    name: String,
    base_mva: f64,
    buses: Vec<BusDoc>,
    branches: Vec<BranchDoc>,
    #[serde(default)]
    gens: Vec<GenDoc>,
}

#[derive(Serialize, Deserialize, Clone, Copy)]
#[serde(rename_all = "lowercase")]
enum KindDoc {
    Slack,
    Pv,
    Pq,
}

#[derive(Serialize, Deserialize)]
struct BusDoc {
    id: i64,
    kind: KindDoc,
    p_load_mw: f64,
    #[serde(default)]
    q_load_mvar: f64,
    #[serde(default)]
    shunt_g_mw: f64,
    #[serde(default)]
    shunt_b_mvar: f64,
    #[serde(default = "one")]
    v_mag_pu: f64,
    #[serde(default)]
    v_ang_deg: f64,
}

#[derive(Serialize, Deserialize)]
struct BranchDoc {
    from: i64,
    to: i64,
    #[serde(default)]
    r_pu: f64,
    x_pu: f64,
    #[serde(default)]
    b_pu: f64,
    #[serde(default = "one")]
    tap: f64,
    #[serde(default)]
    shift_deg: f64,
    #[serde(default = "in_service")]
    status: u8,
}

#[derive(Serialize, Deserialize)]
struct GenDoc {
    bus: i64,
    p_mw: f64,
    #[serde(default)]
    q_mvar: f64,
    #[serde(default)]
    q_min_mvar: f64,
    #[serde(default)]
    q_max_mvar: f64,
    #[serde(default = "one")]
    v_setpoint_pu: f64,
    #[serde(default = "in_service")]
    status: u8,
}

fn one() -> f64 {
    1.0
}

fn in_service() -> u8 {
    1
}

fn status_from(code: u8, path: String) -> Result<Status, CaseError> {
    match code {
        1 => Ok(Status::In),
        0 => Ok(Status::Out),
        other => Err(CaseError::InvalidValue {
            path,
            message: format!("status must be 0 or 1, got {other}"),
        }),
    }
}

/// Parses the canonical JSON case format.
///
/// Missing optional fields take their defaults (`tap = 1`, `shift_deg = 0`,
/// `status = 1`, zero loads/shunts, `v_mag_pu = 1`). A tap of 0 is read as 1,
/// as in MATPOWER data.
pub fn parse_case_json(text: &str) -> Result<GridCase, CaseError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: CaseDoc = serde_path_to_error::deserialize(de).map_err(|e| CaseError::Json {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;

    let buses = doc
        .buses
        .into_iter()
        .map(|b| Bus {
            id: b.id,
            kind: match b.kind {
                KindDoc::Slack => BusKind::Slack,
                KindDoc::Pv => BusKind::Pv,
                KindDoc::Pq => BusKind::Pq,
            },
            p_load: b.p_load_mw,
            q_load: b.q_load_mvar,
            v_mag_setpoint: b.v_mag_pu,
            v_ang_init: b.v_ang_deg,
            shunt_g: b.shunt_g_mw,
            shunt_b: b.shunt_b_mvar,
        })
        .collect();

    let branches = doc
        .branches
        .into_iter()
        .enumerate()
        .map(|(i, br)| {
            Ok(Branch {
                from_bus: br.from,
                to_bus: br.to,
                r: br.r_pu,
                x: br.x_pu,
                b_charging: br.b_pu,
                tap: if br.tap == 0.0 { 1.0 } else { br.tap },
                shift: br.shift_deg,
                status: status_from(br.status, format!("branches[{i}].status"))?,
            })
        })
        .collect::<Result<Vec<_>, CaseError>>()?;

    let gens = doc
        .gens
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            Ok(Generator {
                bus: g.bus,
                p_gen: g.p_mw,
                q_gen: g.q_mvar,
                q_min: g.q_min_mvar,
                q_max: g.q_max_mvar,
                v_setpoint: g.v_setpoint_pu,
                status: status_from(g.status, format!("gens[{i}].status"))?,
            })
        })
        .collect::<Result<Vec<_>, CaseError>>()?;

    let case = GridCase {
        name: doc.name,
        base_mva: doc.base_mva,
        buses,
        branches,
        gens,
    };
    check_structure(&case)?;
    Ok(case)
}

/// Serializes a case to the canonical JSON format.
pub fn emit_case_json(case: &GridCase) -> String {
    let doc = CaseDoc {
        name: case.name.clone(),
        base_mva: case.base_mva,
        buses: case
            .buses
            .iter()
            .map(|b| BusDoc {
                id: b.id,
                kind: match b.kind {
                    BusKind::Slack => KindDoc::Slack,
                    BusKind::Pv => KindDoc::Pv,
                    BusKind::Pq => KindDoc::Pq,
                },
                p_load_mw: b.p_load,
                q_load_mvar: b.q_load,
                shunt_g_mw: b.shunt_g,
                shunt_b_mvar: b.shunt_b,
                v_mag_pu: b.v_mag_setpoint,
                v_ang_deg: b.v_ang_init,
            })
            .collect(),
        branches: case
            .branches
            .iter()
            .map(|br| BranchDoc {
                from: br.from_bus,
                to: br.to_bus,
                r_pu: br.r,
                x_pu: br.x,
                b_pu: br.b_charging,
                tap: br.tap,
                shift_deg: br.shift,
                status: br.status.is_in() as u8,
            })
            .collect(),
        gens: case
            .gens
            .iter()
            .map(|g| GenDoc {
                bus: g.bus,
                p_mw: g.p_gen,
                q_mvar: g.q_gen,
                q_min_mvar: g.q_min,
                q_max_mvar: g.q_max,
                v_setpoint_pu: g.v_setpoint,
                status: g.status.is_in() as u8,
            })
            .collect(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("case document is always serializable");
    out.push('\n');
    out
}

/// Structural checks shared by both parsers: unique ids, at most one slack,
/// resolvable references and a positive base.
pub(super) fn check_structure(case: &GridCase) -> Result<(), CaseError> {
    if !(case.base_mva > 0.0 && case.base_mva.is_finite()) {
        return Err(CaseError::InvalidValue {
            path: "base_mva".into(),
            message: format!("must be positive, got {}", case.base_mva),
        });
    }

    let mut seen = std::collections::HashSet::new();
    for (i, b) in case.buses.iter().enumerate() {
        if !seen.insert(b.id) {
            return Err(CaseError::DuplicateBus {
                id: b.id,
                path: format!("buses[{i}].id"),
            });
        }
    }

    let slacks: Vec<i64> = case.slack_buses().map(|b| b.id).collect();
    if slacks.len() > 1 {
        return Err(CaseError::MultipleSlack { ids: slacks });
    }

    for (i, br) in case.branches.iter().enumerate() {
        for id in [br.from_bus, br.to_bus] {
            if !seen.contains(&id) {
                return Err(CaseError::UnknownBus {
                    id,
                    context: format!("branches[{i}]"),
                });
            }
        }
    }
    for (i, g) in case.gens.iter().enumerate() {
        if !seen.contains(&g.bus) {
            return Err(CaseError::UnknownBus {
                id: g.bus,
                context: format!("gens[{i}]"),
            });
        }
    }
    Ok(())
}
