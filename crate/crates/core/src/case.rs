//! Grid data model: buses, lines, generators and loads, plus the native
//! TOML case format and a MATPOWER-style importer.

mod matpower;

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::CaseError;

pub use matpower::{export_matpower, import_matpower};

/// Bundled IEEE 39-bus restoration case in the native format.
pub const IEEE39_TOML: &str = include_str!("../data/ieee39.toml");

/// Default line energization time in minutes.
pub const DEFAULT_RESTORE_MINUTES: f64 = 5.0;
/// Cranking power as a fraction of rated power when the case omits it.
pub const DEFAULT_CRANK_FRACTION: f64 = 0.05;

macro_rules! id_type {
    ($name:ident, $prefix:literal) => {
        #[derive(
            Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
        )]
        #[serde(transparent)]
        pub struct $name(pub u32);

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}{}", $prefix, self.0)
            }
        }
    };
}

id_type!(BusId, "bus ");
id_type!(LineId, "line ");
id_type!(GenId, "generator ");

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: BusId,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: LineId,
    pub from_bus: BusId,
    pub to_bus: BusId,
    /// Series reactance, per unit on the case MVA base.
    pub reactance: f64,
    /// Thermal limit in MW.
    pub flow_limit: f64,
    pub restoration_minutes: f64,
}

impl Line {
    pub fn other_end(&self, bus: BusId) -> BusId {
        if bus == self.from_bus {
            self.to_bus
        } else {
            self.from_bus
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: GenId,
    pub bus: BusId,
    /// Rated active power in MW.
    pub rated_power: f64,
    /// Ramp rate in MW/h.
    pub ramp_rate: f64,
    /// Power drawn from the grid while the unit is being cranked, MW.
    pub cranking_power: f64,
    /// Latest hot-start time in minutes (infinite when not binding).
    pub hot_start_limit: f64,
    /// Earliest cold-start time in minutes.
    pub cold_start_limit: f64,
    pub is_black_start: bool,
}

impl Generator {
    /// Minutes needed to ramp from zero to rated power.
    pub fn ramp_minutes(&self) -> f64 {
        self.rated_power / self.ramp_rate * 60.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Load {
    pub bus: BusId,
    /// Outage demand to be restored, MW.
    pub demand: f64,
    pub is_critical: bool,
}

/// A single validation failure, naming the offending entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub entity: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.entity, self.message)
    }
}

fn violation(entity: impl fmt::Display, message: impl Into<String>) -> Violation {
    Violation {
        entity: entity.to_string(),
        message: message.into(),
    }
}

/// Static network description. Immutable once built; dense indices
/// (position in the respective vectors) are used by the solvers.
#[derive(Debug, Clone)]
pub struct GridCase {
    mva_base: f64,
    buses: Vec<Bus>,
    lines: Vec<Line>,
    generators: Vec<Generator>,
    loads: Vec<Load>,
    total_load: f64,
    bus_pos: HashMap<BusId, usize>,
    line_pos: HashMap<LineId, usize>,
    gen_pos: HashMap<GenId, usize>,
    line_ends: Vec<(usize, usize)>,
    gen_bus: Vec<usize>,
    load_bus: Vec<usize>,
    load_at_bus: Vec<Option<usize>>,
    gens_at_bus: Vec<Vec<usize>>,
    incident: Vec<Vec<usize>>,
}

impl PartialEq for GridCase {
    fn eq(&self, other: &Self) -> bool {
        self.mva_base == other.mva_base
            && self.buses == other.buses
            && self.lines == other.lines
            && self.generators == other.generators
            && self.loads == other.loads
    }
}

const MISSING: usize = usize::MAX;

impl GridCase {
    /// Assembles a case and its lookup tables without validating it.
    pub fn from_parts(
        mva_base: f64,
        buses: Vec<Bus>,
        lines: Vec<Line>,
        generators: Vec<Generator>,
        loads: Vec<Load>,
    ) -> Self {
        let mut bus_pos = HashMap::new();
        for (i, b) in buses.iter().enumerate() {
            bus_pos.entry(b.id).or_insert(i);
        }
        let mut line_pos = HashMap::new();
        for (i, l) in lines.iter().enumerate() {
            line_pos.entry(l.id).or_insert(i);
        }
        let mut gen_pos = HashMap::new();
        for (i, g) in generators.iter().enumerate() {
            gen_pos.entry(g.id).or_insert(i);
        }
        let at = |b: BusId| bus_pos.get(&b).copied().unwrap_or(MISSING);
        let line_ends: Vec<_> = lines.iter().map(|l| (at(l.from_bus), at(l.to_bus))).collect();
        let gen_bus: Vec<_> = generators.iter().map(|g| at(g.bus)).collect();
        let load_bus: Vec<_> = loads.iter().map(|l| at(l.bus)).collect();

        let n = buses.len();
        let mut load_at_bus = vec![None; n];
        for (i, &b) in load_bus.iter().enumerate() {
            if b != MISSING && load_at_bus[b].is_none() {
                load_at_bus[b] = Some(i);
            }
        }
        let mut gens_at_bus = vec![Vec::new(); n];
        for (i, &b) in gen_bus.iter().enumerate() {
            if b != MISSING {
                gens_at_bus[b].push(i);
            }
        }
        let mut incident = vec![Vec::new(); n];
        for (i, &(a, b)) in line_ends.iter().enumerate() {
            if a != MISSING {
                incident[a].push(i);
            }
            if b != MISSING && b != a {
                incident[b].push(i);
            }
        }
        let total_load = exact_sum(loads.iter().map(|l| l.demand));

        Self {
            mva_base,
            buses,
            lines,
            generators,
            loads,
            total_load,
            bus_pos,
            line_pos,
            gen_pos,
            line_ends,
            gen_bus,
            load_bus,
            load_at_bus,
            gens_at_bus,
            incident,
        }
    }

    /// The bundled IEEE 39-bus case.
    pub fn ieee39() -> Self {
        parse_case(IEEE39_TOML).expect("bundled IEEE 39-bus case is valid")
    }

    pub fn mva_base(&self) -> f64 {
        self.mva_base
    }
    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }
    pub fn lines(&self) -> &[Line] {
        &self.lines
    }
    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }
    pub fn loads(&self) -> &[Load] {
        &self.loads
    }
    /// Total outage load, MW.
    pub fn total_load(&self) -> f64 {
        self.total_load
    }

    pub fn bus_index(&self, id: BusId) -> Option<usize> {
        self.bus_pos.get(&id).copied()
    }
    pub fn line_index(&self, id: LineId) -> Option<usize> {
        self.line_pos.get(&id).copied()
    }
    pub fn gen_index(&self, id: GenId) -> Option<usize> {
        self.gen_pos.get(&id).copied()
    }
    pub fn line(&self, id: LineId) -> Option<&Line> {
        self.line_index(id).map(|i| &self.lines[i])
    }
    pub fn generator(&self, id: GenId) -> Option<&Generator> {
        self.gen_index(id).map(|i| &self.generators[i])
    }

    pub(crate) fn line_ends(&self, line: usize) -> (usize, usize) {
        self.line_ends[line]
    }
    pub(crate) fn gen_bus(&self, gen: usize) -> usize {
        self.gen_bus[gen]
    }
    pub(crate) fn load_bus(&self, load: usize) -> usize {
        self.load_bus[load]
    }
    pub(crate) fn load_at_bus(&self, bus: usize) -> Option<usize> {
        self.load_at_bus[bus]
    }
    pub(crate) fn gens_at_bus(&self, bus: usize) -> &[usize] {
        &self.gens_at_bus[bus]
    }
    pub(crate) fn incident_lines(&self, bus: usize) -> &[usize] {
        &self.incident[bus]
    }

    /// Dense index of the black-start unit, if exactly one is flagged.
    pub(crate) fn black_start_index(&self) -> Option<usize> {
        let mut it = self.generators.iter().enumerate().filter(|(_, g)| g.is_black_start);
        match (it.next(), it.next()) {
            (Some((i, _)), None) => Some(i),
            _ => None,
        }
    }

    pub fn black_start(&self) -> Option<&Generator> {
        self.black_start_index().map(|i| &self.generators[i])
    }
}

/// Sums MW values; amounts with at most two fraction digits are summed
/// exactly in hundredths.
fn exact_sum(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let centi: Option<i128> = values
        .clone()
        .map(|v| {
            let c = (v * 100.0).round();
            (c.is_finite() && (v * 100.0 - c).abs() < 1e-6).then_some(c as i128)
        })
        .sum();
    match centi {
        Some(c) => c as f64 / 100.0,
        None => values.sum(),
    }
}

/// Checks every data-model invariant and returns the violations found.
pub fn validate(case: &GridCase) -> Vec<Violation> {
    let mut out = Vec::new();
    if !(case.mva_base > 0.0) {
        out.push(violation("case", "mva_base must be positive"));
    }
    if case.buses.is_empty() {
        out.push(violation("case", "no buses"));
    }

    let mut seen = HashSet::new();
    for b in &case.buses {
        if !seen.insert(b.id) {
            out.push(violation(b.id, "duplicate bus id"));
        }
    }
    let has_bus = |b: BusId| case.bus_pos.contains_key(&b);

    let mut seen = HashSet::new();
    for l in &case.lines {
        if !seen.insert(l.id) {
            out.push(violation(l.id, "duplicate line id"));
        }
        for end in [l.from_bus, l.to_bus] {
            if !has_bus(end) {
                out.push(violation(l.id, format!("dangling reference to {end}")));
            }
        }
        if l.from_bus == l.to_bus {
            out.push(violation(l.id, "from_bus equals to_bus"));
        }
        if !(l.reactance > 0.0) {
            out.push(violation(l.id, "reactance must be positive"));
        }
        if !(l.flow_limit > 0.0) {
            out.push(violation(l.id, "flow limit must be positive"));
        }
        if !(l.restoration_minutes > 0.0) {
            out.push(violation(l.id, "restoration time must be positive"));
        }
    }

    let mut seen = HashSet::new();
    for g in &case.generators {
        if !seen.insert(g.id) {
            out.push(violation(g.id, "duplicate generator id"));
        }
        if !has_bus(g.bus) {
            out.push(violation(g.id, format!("dangling reference to {}", g.bus)));
        }
        if !(g.rated_power > 0.0) {
            out.push(violation(g.id, "rated power must be positive"));
        }
        if !(g.ramp_rate > 0.0) {
            out.push(violation(g.id, "ramp rate must be positive"));
        }
        if !(g.cranking_power >= 0.0) {
            out.push(violation(g.id, "cranking power must be non-negative"));
        }
        if !(g.cold_start_limit >= 0.0) {
            out.push(violation(g.id, "cold-start limit must be non-negative"));
        }
        if g.hot_start_limit.is_finite() && !(g.cold_start_limit < g.hot_start_limit) {
            out.push(violation(g.id, "cold-start limit must be below hot-start limit"));
        }
    }
    match case.generators.iter().filter(|g| g.is_black_start).count() {
        1 => {}
        0 => out.push(violation("case", "no black-start generator")),
        n => out.push(violation("case", format!("{n} black-start generators, expected one"))),
    }

    let mut seen = HashSet::new();
    for l in &case.loads {
        let name = format!("load at {}", l.bus);
        if !has_bus(l.bus) {
            out.push(violation(&name, format!("dangling reference to {}", l.bus)));
        }
        if !seen.insert(l.bus) {
            out.push(violation(&name, "duplicate load bus"));
        }
        if !(l.demand >= 0.0) {
            out.push(violation(&name, "demand must be non-negative"));
        }
    }

    if !case.buses.is_empty() && !is_connected(case) {
        out.push(violation("case", "disconnected graph"));
    }
    out
}

fn is_connected(case: &GridCase) -> bool {
    let n = case.buses.len();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut count = 1;
    while let Some(b) = queue.pop_front() {
        for &l in &case.incident[b] {
            let (x, y) = case.line_ends[l];
            if x == MISSING || y == MISSING {
                continue;
            }
            let o = if x == b { y } else { x };
            if !seen[o] {
                seen[o] = true;
                count += 1;
                queue.push_back(o);
            }
        }
    }
    count == n
}

// ---- native document format ----

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CaseDocument {
    #[serde(default = "default_mva_base")]
    mva_base: f64,
    #[serde(default)]
    buses: Vec<BusRow>,
    #[serde(default)]
    lines: Vec<LineRow>,
    #[serde(default)]
    generators: Vec<GenRow>,
    #[serde(default)]
    loads: Vec<LoadRow>,
}

fn default_mva_base() -> f64 {
    100.0
}
fn default_restore() -> f64 {
    DEFAULT_RESTORE_MINUTES
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusRow {
    id: BusId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineRow {
    id: LineId,
    from: BusId,
    to: BusId,
    x: f64,
    limit_mw: f64,
    #[serde(default = "default_restore")]
    restore_min: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GenRow {
    id: GenId,
    bus: BusId,
    pgn_mw: f64,
    ramp_mw_per_h: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    crank_mw: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tch_min: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tcc_min: Option<f64>,
    #[serde(default)]
    black_start: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LoadRow {
    bus: BusId,
    p0_mw: f64,
    #[serde(default)]
    critical: bool,
}

/// Parses and validates a native case document.
pub fn parse_case(text: &str) -> Result<GridCase, CaseError> {
    let doc: CaseDocument =
        toml::from_str(text).map_err(|e| CaseError::Syntax(e.to_string().trim_end().to_owned()))?;
    let case = from_document(doc);
    let violations = validate(&case);
    if violations.is_empty() {
        Ok(case)
    } else {
        Err(CaseError::Semantic(violations))
    }
}

fn from_document(doc: CaseDocument) -> GridCase {
    let buses = doc
        .buses
        .into_iter()
        .map(|b| Bus { id: b.id, name: b.name })
        .collect();
    let lines = doc
        .lines
        .into_iter()
        .map(|l| Line {
            id: l.id,
            from_bus: l.from,
            to_bus: l.to,
            reactance: l.x,
            flow_limit: l.limit_mw,
            restoration_minutes: l.restore_min,
        })
        .collect();
    let generators = doc
        .generators
        .into_iter()
        .map(|g| Generator {
            id: g.id,
            bus: g.bus,
            rated_power: g.pgn_mw,
            ramp_rate: g.ramp_mw_per_h,
            cranking_power: g
                .crank_mw
                .unwrap_or_else(|| round_centi(DEFAULT_CRANK_FRACTION * g.pgn_mw)),
            hot_start_limit: g.tch_min.unwrap_or(f64::INFINITY),
            cold_start_limit: g.tcc_min.unwrap_or(0.0),
            is_black_start: g.black_start,
        })
        .collect();
    let loads = doc
        .loads
        .into_iter()
        .map(|l| Load {
            bus: l.bus,
            demand: l.p0_mw,
            is_critical: l.critical,
        })
        .collect();
    GridCase::from_parts(doc.mva_base, buses, lines, generators, loads)
}

pub(crate) fn round_centi(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Writes a case in the native format. Field order is fixed, so the output
/// is byte-stable; parsing it back yields an equal case.
pub fn serialize_case(case: &GridCase) -> String {
    let doc = CaseDocument {
        mva_base: case.mva_base,
        buses: case
            .buses
            .iter()
            .map(|b| BusRow {
                id: b.id,
                name: b.name.clone(),
            })
            .collect(),
        lines: case
            .lines
            .iter()
            .map(|l| LineRow {
                id: l.id,
                from: l.from_bus,
                to: l.to_bus,
                x: l.reactance,
                limit_mw: l.flow_limit,
                restore_min: l.restoration_minutes,
            })
            .collect(),
        generators: case
            .generators
            .iter()
            .map(|g| GenRow {
                id: g.id,
                bus: g.bus,
                pgn_mw: g.rated_power,
                ramp_mw_per_h: g.ramp_rate,
                crank_mw: Some(g.cranking_power),
                tch_min: g.hot_start_limit.is_finite().then_some(g.hot_start_limit),
                tcc_min: (g.cold_start_limit != 0.0).then_some(g.cold_start_limit),
                black_start: g.is_black_start,
            })
            .collect(),
        loads: case
            .loads
            .iter()
            .map(|l| LoadRow {
                bus: l.bus,
                p0_mw: l.demand,
                critical: l.is_critical,
            })
            .collect(),
    };
    toml::to_string(&doc).expect("case document serializes")
}
