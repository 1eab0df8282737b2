//! Reader for MATPOWER-style case scripts (`mpc.baseMVA`, `mpc.bus`,
//! `mpc.branch`, `mpc.gen`). Only the power-flow columns are used; cost data,
//! names and any other assignments are skipped.

use super::json::check_structure;
use super::{Branch, Bus, BusKind, Generator, GridCase, Status};
use crate::error::CaseError;

// bus columns
const BUS_I: usize = 0;
const BUS_TYPE: usize = 1;
const PD: usize = 2;
const QD: usize = 3;
const GS: usize = 4;
const BS: usize = 5;
const VM: usize = 7;
const VA: usize = 8;

// branch columns
const F_BUS: usize = 0;
const T_BUS: usize = 1;
const BR_R: usize = 2;
const BR_X: usize = 3;
const BR_B: usize = 4;
const TAP: usize = 8;
const SHIFT: usize = 9;
const BR_STATUS: usize = 10;

// gen columns
const GEN_BUS: usize = 0;
const PG: usize = 1;
const QG: usize = 2;
const QMAX: usize = 3;
const QMIN: usize = 4;
const VG: usize = 5;
const GEN_STATUS: usize = 7;

struct Row {
    line: usize,
    values: Vec<f64>,
}

#[derive(Default)]
struct Script {
    name: Option<String>,
    base_mva: Option<f64>,
    bus: Option<Vec<Row>>,
    branch: Option<Vec<Row>>,
    gen: Option<Vec<Row>>,
}

fn strip_comment(line: &str) -> &str {
    line.split('%').next().unwrap_or("")
}

fn parse_row(text: &str, line: usize) -> Result<Option<Row>, CaseError> {
    let text = text.trim();
    if text.is_empty() {
        return Ok(None);
    }
    let values = text
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<f64>().map_err(|_| CaseError::Matpower {
                line,
                message: format!("cannot parse `{t}` as a number"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(Row { line, values }))
}

fn scan(text: &str) -> Result<Script, CaseError> {
    let mut script = Script::default();
    let mut open: Option<(&'static str, Vec<Row>)> = None;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = strip_comment(raw);

        if let Some((name, rows)) = open.as_mut() {
            let (body, closed) = match line.find(']') {
                Some(pos) => (&line[..pos], true),
                None => (line, false),
            };
            for piece in body.split(';') {
                if let Some(row) = parse_row(piece, line_no)? {
                    rows.push(row);
                }
            }
            if closed {
                let (name, rows) = (*name, std::mem::take(rows));
                match name {
                    "bus" => script.bus = Some(rows),
                    "branch" => script.branch = Some(rows),
                    _ => script.gen = Some(rows),
                }
                open = None;
            }
            continue;
        }

        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix("function") {
            if let Some((_, name)) = rest.split_once('=') {
                script.name = Some(name.trim().trim_end_matches(';').to_string());
            }
            continue;
        }
        let Some(rest) = trimmed.strip_prefix("mpc.") else {
            continue;
        };
        let Some((key, value)) = rest.split_once('=') else {
            continue;
        };
        let key = key.trim();
        let value = value.trim();
        match key {
            "baseMVA" => {
                let v = value.trim_end_matches(';').trim();
                script.base_mva = Some(v.parse().map_err(|_| CaseError::Matpower {
                    line: line_no,
                    message: format!("cannot parse baseMVA `{v}`"),
                })?);
            }
            "bus" | "branch" | "gen" => {
                let name: &'static str = match key {
                    "bus" => "bus",
                    "branch" => "branch",
                    _ => "gen",
                };
                let Some(body) = value.strip_prefix('[') else {
                    return Err(CaseError::Matpower {
                        line: line_no,
                        message: format!("expected `[` after mpc.{name} ="),
                    });
                };
                open = Some((name, Vec::new()));
                // matrices written on a single line
                let (inner, closed) = match body.find(']') {
                    Some(pos) => (&body[..pos], true),
                    None => (body, false),
                };
                let rows = &mut open.as_mut().expect("just opened").1;
                for piece in inner.split(';') {
                    if let Some(row) = parse_row(piece, line_no)? {
                        rows.push(row);
                    }
                }
                if closed {
                    let rows = open.take().expect("just opened").1;
                    match name {
                        "bus" => script.bus = Some(rows),
                        "branch" => script.branch = Some(rows),
                        _ => script.gen = Some(rows),
                    }
                }
            }
            _ => {}
        }
    }

    if let Some((name, rows)) = open {
        return Err(CaseError::Matpower {
            line: rows.last().map_or(0, |r| r.line),
            message: format!("mpc.{name} matrix is not closed with `]`"),
        });
    }
    Ok(script)
}

fn require_columns(row: &Row, min: usize, table: &str) -> Result<(), CaseError> {
    if row.values.len() < min {
        return Err(CaseError::Matpower {
            line: row.line,
            message: format!("{table} row has {} columns, need at least {min}", row.values.len()),
        });
    }
    Ok(())
}

fn as_id(v: f64, line: usize) -> Result<i64, CaseError> {
    if v.fract() != 0.0 || !v.is_finite() {
        return Err(CaseError::Matpower {
            line,
            message: format!("bus number {v} is not an integer"),
        });
    }
    Ok(v as i64)
}

/// Parses a MATPOWER case script into a [`GridCase`].
pub fn parse_case_matpower(text: &str) -> Result<GridCase, CaseError> {
    let script = scan(text)?;
    let base_mva = script.base_mva.ok_or(CaseError::MissingMatrix("baseMVA"))?;
    let bus_rows = script.bus.ok_or(CaseError::MissingMatrix("bus"))?;
    let branch_rows = script.branch.ok_or(CaseError::MissingMatrix("branch"))?;
    let gen_rows = script.gen.unwrap_or_default();

    let mut buses = Vec::with_capacity(bus_rows.len());
    for row in &bus_rows {
        require_columns(row, VA + 1, "bus")?;
        let v = &row.values;
        let kind = match v[BUS_TYPE] as i64 {
            1 => BusKind::Pq,
            2 => BusKind::Pv,
            3 => BusKind::Slack,
            other => {
                return Err(CaseError::Matpower {
                    line: row.line,
                    message: format!("unsupported bus type {other}"),
                })
            }
        };
        buses.push(Bus {
            id: as_id(v[BUS_I], row.line)?,
            kind,
            p_load: v[PD],
            q_load: v[QD],
            v_mag_setpoint: v[VM],
            v_ang_init: v[VA],
            shunt_g: v[GS],
            shunt_b: v[BS],
        });
    }

    let ids: std::collections::HashSet<i64> = buses.iter().map(|b| b.id).collect();
    let known = |id: i64, line: usize, table: &str| {
        if ids.contains(&id) {
            Ok(id)
        } else {
            Err(CaseError::UnknownBus {
                id,
                context: format!("{table} row at line {line}"),
            })
        }
    };

    let mut branches = Vec::with_capacity(branch_rows.len());
    for row in &branch_rows {
        require_columns(row, BR_STATUS + 1, "branch")?;
        let v = &row.values;
        branches.push(Branch {
            from_bus: known(as_id(v[F_BUS], row.line)?, row.line, "branch")?,
            to_bus: known(as_id(v[T_BUS], row.line)?, row.line, "branch")?,
            r: v[BR_R],
            x: v[BR_X],
            b_charging: v[BR_B],
            tap: if v[TAP] == 0.0 { 1.0 } else { v[TAP] },
            shift: v[SHIFT],
            status: if v[BR_STATUS] > 0.0 { Status::In } else { Status::Out },
        });
    }

    let mut gens = Vec::with_capacity(gen_rows.len());
    for row in &gen_rows {
        require_columns(row, GEN_STATUS + 1, "gen")?;
        let v = &row.values;
        gens.push(Generator {
            bus: known(as_id(v[GEN_BUS], row.line)?, row.line, "gen")?,
            p_gen: v[PG],
            q_gen: v[QG],
            q_min: v[QMIN],
            q_max: v[QMAX],
            v_setpoint: v[VG],
            status: if v[GEN_STATUS] > 0.0 { Status::In } else { Status::Out },
        });
    }

    let case = GridCase {
        name: script.name.unwrap_or_else(|| "case".to_string()),
        base_mva,
        buses,
        branches,
        gens,
    };
    check_structure(&case)?;
    Ok(case)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = "function mpc = two_bus
mpc.version = '2';
mpc.baseMVA = 100;
%% bus data
%	bus_i	type	Pd	Qd	Gs	Bs	area	Vm	Va	baseKV	zone	Vmax	Vmin
mpc.bus = [
	1	3	0	0	0	0	1	1	0	230	1	1.1	0.9;
	2	1	50	10	0	0	1	1	0	230	1	1.1	0.9;
];
mpc.gen = [
	1	0	0	300	-300	1	100	1	250	10	0	0	0	0	0	0	0	0	0	0	0;
];
mpc.branch = [
	1	2	0	0.1	0	250	250	250	0	0	1	-360	360;
];
";

    #[test]
    fn minimal_two_bus_case() {
        let case = parse_case_matpower(TWO_BUS).unwrap();
        assert_eq!(case.name, "two_bus");
        assert_eq!(case.buses.len(), 2);
        assert_eq!(case.buses[0].kind, BusKind::Slack);
        assert_eq!(case.buses[1].p_load, 50.0);
        assert_eq!(case.branches[0].tap, 1.0);
        assert_eq!(case.gens[0].q_max, 300.0);
        assert_eq!(case.gens[0].q_min, -300.0);
    }

    #[test]
    fn branch_to_missing_bus_is_unknown_bus() {
        let text = TWO_BUS.replace("\t1\t2\t0\t0.1", "\t1\t999\t0\t0.1");
        let err = parse_case_matpower(&text).unwrap_err();
        assert!(matches!(err, CaseError::UnknownBus { id: 999, .. }), "{err:?}");
        assert!(err.to_string().contains("unknown bus"));
    }

    #[test]
    fn garbage_in_a_row_reports_the_line() {
        let text = TWO_BUS.replace("2\t1\t50\t10", "2\t1\tfifty\t10");
        match parse_case_matpower(&text).unwrap_err() {
            CaseError::Matpower { line, .. } => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn single_line_matrices_and_commas() {
        let text = "mpc.baseMVA = 10;\nmpc.bus = [1, 3, 0, 0, 0, 0, 1, 1, 0; 2, 1, 5, 0, 0, 0, 1, 1, 0];\nmpc.branch = [1 2 0 0.2 0 0 0 0 0 0 1];\n";
        let case = parse_case_matpower(text).unwrap();
        assert_eq!(case.buses.len(), 2);
        assert!(case.gens.is_empty());
        assert_eq!(case.base_mva, 10.0);
    }

    #[test]
    fn missing_bus_matrix() {
        let err = parse_case_matpower("mpc.baseMVA = 100;").unwrap_err();
        assert!(matches!(err, CaseError::MissingMatrix("bus")));
    }
}
