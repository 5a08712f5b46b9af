//! MATPOWER-style import and export, restricted to the `bus`, `gen` and
//! `branch` matrices on a single MVA base.
//!
//! Restoration data without a MATPOWER column is mapped as follows: the
//! generator on the reference bus (type 3) is the black-start unit, the rated
//! power is `Pmax`, and the ramp rate is twice `RAMP_30` (MW per 30 min) when
//! that column is present and positive, otherwise `0.6 * Pmax` per hour.
//! `rateA = 0` means unlimited, as in MATPOWER.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{
    round_centi, validate, Bus, BusId, GenId, Generator, GridCase, Line, LineId, Load,
    DEFAULT_CRANK_FRACTION, DEFAULT_RESTORE_MINUTES,
};
use crate::error::CaseError;

const DEFAULT_RAMP_PER_HOUR: f64 = 0.6;

struct Matrix {
    first_line: usize,
    rows: Vec<(usize, Vec<f64>)>,
}

fn err(line: usize, message: impl Into<String>) -> CaseError {
    CaseError::Matpower {
        line,
        message: message.into(),
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Splits the file into `mpc.<name>` assignments.
fn sections(text: &str) -> Result<(BTreeMap<String, Matrix>, Option<f64>), CaseError> {
    let mut out = BTreeMap::new();
    let mut base = None;
    let mut open: Option<(String, Matrix)> = None;

    for (no, raw) in text.lines().enumerate() {
        let no = no + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some((name, mut m)) = open.take() {
            let (body, closed) = match line.find(']') {
                Some(i) => (&line[..i], true),
                None => (line, false),
            };
            push_rows(&mut m, body, no)?;
            if closed {
                out.insert(name, m);
            } else {
                open = Some((name, m));
            }
            continue;
        }
        if line.starts_with("function") {
            continue;
        }
        let Some(rest) = line.strip_prefix("mpc.") else {
            return Err(err(no, format!("unexpected statement `{line}`")));
        };
        let Some((name, value)) = rest.split_once('=') else {
            return Err(err(no, "expected an assignment"));
        };
        let name = name.trim();
        let value = value.trim();
        match name {
            "version" => {}
            "baseMVA" => {
                let v = value.trim_end_matches(';').trim();
                base = Some(v.parse().map_err(|_| err(no, format!("bad baseMVA `{v}`")))?);
            }
            "bus" | "gen" | "branch" => {
                let Some(body) = value.strip_prefix('[') else {
                    return Err(err(no, format!("expected `[` after mpc.{name}")));
                };
                let mut m = Matrix {
                    first_line: no,
                    rows: Vec::new(),
                };
                match body.find(']') {
                    Some(i) => {
                        push_rows(&mut m, &body[..i], no)?;
                        out.insert(name.to_owned(), m);
                    }
                    None => {
                        push_rows(&mut m, body, no)?;
                        open = Some((name.to_owned(), m));
                    }
                }
            }
            other => return Err(CaseError::Unsupported(other.to_owned())),
        }
    }
    if let Some((name, m)) = open {
        return Err(err(m.first_line, format!("unterminated matrix mpc.{name}")));
    }
    Ok((out, base))
}

fn push_rows(m: &mut Matrix, body: &str, no: usize) -> Result<(), CaseError> {
    for row in body.split(';') {
        let fields: Result<Vec<f64>, _> = row
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f64>())
            .collect();
        let fields = fields.map_err(|_| err(no, format!("non-numeric entry in `{}`", row.trim())))?;
        if !fields.is_empty() {
            m.rows.push((no, fields));
        }
    }
    Ok(())
}

fn need<'a>(cols: &'a [f64], n: usize, line: usize, what: &str) -> Result<&'a [f64], CaseError> {
    if cols.len() < n {
        Err(err(line, format!("{what} row needs at least {n} columns, found {}", cols.len())))
    } else {
        Ok(cols)
    }
}

fn as_id(v: f64, line: usize) -> Result<u32, CaseError> {
    if v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64 {
        Ok(v as u32)
    } else {
        Err(err(line, format!("`{v}` is not a valid id")))
    }
}

/// Imports a MATPOWER-style case and validates it.
pub fn import_matpower(text: &str) -> Result<GridCase, CaseError> {
    let (mut secs, base) = sections(text)?;
    let base = base.unwrap_or(100.0);
    let missing = |s: &str| err(0, format!("missing mpc.{s} section"));
    let bus_m = secs.remove("bus").ok_or_else(|| missing("bus"))?;
    let gen_m = secs.remove("gen").ok_or_else(|| missing("gen"))?;
    let branch_m = secs.remove("branch").ok_or_else(|| missing("branch"))?;

    let mut buses = Vec::new();
    let mut loads = Vec::new();
    let mut reference = None;
    for (no, row) in &bus_m.rows {
        let c = need(row, 3, *no, "bus")?;
        let id = BusId(as_id(c[0], *no)?);
        buses.push(Bus { id, name: None });
        if c[1] == 3.0 {
            reference = Some(id);
        }
        if c[2] > 0.0 {
            loads.push(Load {
                bus: id,
                demand: c[2],
                is_critical: false,
            });
        }
    }

    let mut gen_rows = Vec::new();
    for (no, row) in &gen_m.rows {
        let c = need(row, 10, *no, "gen")?;
        if c[7] <= 0.0 {
            continue;
        }
        gen_rows.push((*no, c));
    }
    let mut gen_buses: Vec<u32> = Vec::new();
    for (no, c) in &gen_rows {
        gen_buses.push(as_id(c[0], *no)?);
    }
    let unique = {
        let mut s = gen_buses.clone();
        s.sort_unstable();
        s.dedup();
        s.len() == gen_buses.len()
    };
    let mut generators = Vec::new();
    for (i, ((_, c), &bus)) in gen_rows.iter().zip(&gen_buses).enumerate() {
        let pmax = c[8];
        let ramp = match c.get(18) {
            Some(&r30) if r30 > 0.0 => 2.0 * r30,
            _ => DEFAULT_RAMP_PER_HOUR * pmax,
        };
        generators.push(Generator {
            id: GenId(if unique { bus } else { i as u32 + 1 }),
            bus: BusId(bus),
            rated_power: pmax,
            ramp_rate: ramp,
            cranking_power: round_centi(DEFAULT_CRANK_FRACTION * pmax),
            hot_start_limit: f64::INFINITY,
            cold_start_limit: 0.0,
            is_black_start: Some(BusId(bus)) == reference,
        });
    }

    let mut lines = Vec::new();
    for (no, row) in &branch_m.rows {
        let c = need(row, 6, *no, "branch")?;
        if c.get(10).is_some_and(|&s| s <= 0.0) {
            continue;
        }
        let rate = if c[5] == 0.0 { f64::INFINITY } else { c[5] };
        lines.push(Line {
            id: LineId(lines.len() as u32 + 1),
            from_bus: BusId(as_id(c[0], *no)?),
            to_bus: BusId(as_id(c[1], *no)?),
            reactance: c[3],
            flow_limit: rate,
            restoration_minutes: DEFAULT_RESTORE_MINUTES,
        });
    }

    let case = GridCase::from_parts(base, buses, lines, generators, loads);
    let v = validate(&case);
    if v.is_empty() {
        Ok(case)
    } else {
        Err(CaseError::Semantic(v))
    }
}

/// Writes a case as MATPOWER-style matrices. The black-start bus is marked as
/// the reference bus and ramp rates are carried in `RAMP_30`, so cases with
/// default cranking data and 5-minute lines import back unchanged.
pub fn export_matpower(case: &GridCase) -> String {
    let mut s = String::new();
    let bsu = case.black_start().map(|g| g.bus);
    let gen_buses: Vec<BusId> = case.generators().iter().map(|g| g.bus).collect();
    writeln!(s, "function mpc = exported").unwrap();
    writeln!(s, "mpc.version = '2';").unwrap();
    writeln!(s, "mpc.baseMVA = {};", case.mva_base()).unwrap();
    writeln!(s, "%% bus_i type Pd Qd Gs Bs area Vm Va baseKV zone Vmax Vmin").unwrap();
    writeln!(s, "mpc.bus = [").unwrap();
    for b in case.buses() {
        let kind = if Some(b.id) == bsu {
            3
        } else if gen_buses.contains(&b.id) {
            2
        } else {
            1
        };
        let pd = case
            .loads()
            .iter()
            .find(|l| l.bus == b.id)
            .map_or(0.0, |l| l.demand);
        writeln!(s, "\t{}\t{}\t{}\t0\t0\t0\t1\t1\t0\t345\t1\t1.06\t0.94;", b.id.0, kind, pd).unwrap();
    }
    writeln!(s, "];").unwrap();
    writeln!(
        s,
        "%% bus Pg Qg Qmax Qmin Vg mBase status Pmax Pmin Pc1 Pc2 Qc1min Qc1max Qc2min Qc2max ramp_agc ramp_10 ramp_30 ramp_q apf"
    )
    .unwrap();
    writeln!(s, "mpc.gen = [").unwrap();
    for g in case.generators() {
        writeln!(
            s,
            "\t{}\t0\t0\t0\t0\t1\t100\t1\t{}\t0\t0\t0\t0\t0\t0\t0\t0\t0\t{}\t0\t0;",
            g.bus.0,
            g.rated_power,
            g.ramp_rate / 2.0
        )
        .unwrap();
    }
    writeln!(s, "];").unwrap();
    writeln!(s, "%% fbus tbus r x b rateA rateB rateC ratio angle status angmin angmax").unwrap();
    writeln!(s, "mpc.branch = [").unwrap();
    for l in case.lines() {
        let rate = if l.flow_limit.is_finite() { l.flow_limit } else { 0.0 };
        writeln!(
            s,
            "\t{}\t{}\t0\t{}\t0\t{}\t0\t0\t0\t0\t1\t-360\t360;",
            l.from_bus.0, l.to_bus.0, l.reactance, rate
        )
        .unwrap();
    }
    writeln!(s, "];").unwrap();
    s
}
