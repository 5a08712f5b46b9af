//! Anticipated attack incidents on a restoration snapshot, cascading
//! overload propagation, and the robustness indices of the aftermath.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::case::{BusId, GenId, GridCase, LineId};
use crate::dispatch::{dense_islands, solve_island, DcNetwork, Island, IslandInputs, BALANCE_TOL};
use crate::sim::{connectedness_of, redundancy_of, GenStatus, SystemState, LOAD_EPS};
use crate::topology::reconnection_plan;

/// Lines trip when their flow exceeds the limit by more than this, MW.
pub const TRIP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "kind", content = "id", rename_all = "snake_case")]
pub enum AttackTarget {
    Line(LineId),
    /// Removes the bus with every line incident to it.
    Bus(BusId),
    Gen(GenId),
}

impl fmt::Display for AttackTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttackTarget::Line(l) => write!(f, "line:{}", l.0),
            AttackTarget::Bus(b) => write!(f, "bus:{}", b.0),
            AttackTarget::Gen(g) => write!(f, "gen:{}", g.0),
        }
    }
}

impl FromStr for AttackTarget {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, id) = s
            .split_once(':')
            .ok_or_else(|| format!("expected kind:id, got `{s}`"))?;
        let id: u32 = id
            .trim()
            .parse()
            .map_err(|_| format!("bad element id in `{s}`"))?;
        match kind.trim() {
            "line" => Ok(AttackTarget::Line(LineId(id))),
            "bus" => Ok(AttackTarget::Bus(BusId(id))),
            "gen" | "generator" => Ok(AttackTarget::Gen(GenId(id))),
            other => Err(format!("unknown element kind `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AttackIncident {
    pub targets: Vec<AttackTarget>,
    /// Occurrence weight, `mu^k`.
    pub probability: f64,
}

impl AttackIncident {
    pub fn new(targets: Vec<AttackTarget>, mu: f64) -> Self {
        let probability = mu.powi(targets.len() as i32);
        Self {
            targets,
            probability,
        }
    }

    pub fn k(&self) -> usize {
        self.targets.len()
    }

    /// Lines failed directly by the incident, including bus-incident lines.
    pub fn failed_lines(&self, case: &GridCase) -> BTreeSet<LineId> {
        let mut out = BTreeSet::new();
        for t in &self.targets {
            match *t {
                AttackTarget::Line(l) => {
                    out.insert(l);
                }
                AttackTarget::Bus(b) => {
                    if let Some(bi) = case.bus_index(b) {
                        out.extend(case.incident_lines(bi).iter().map(|&l| case.lines()[l].id));
                    }
                }
                AttackTarget::Gen(_) => {}
            }
        }
        out
    }

    /// `line:4+bus:3` style label.
    pub fn label(&self) -> String {
        self.targets
            .iter()
            .map(|t| t.to_string())
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Energized lines ranked by |flow| descending (ties by lower id); the top
/// `ceil(fraction * count)` are returned.
pub fn select_targets(s: &SystemState, case: &GridCase, fraction: f64) -> Vec<LineId> {
    select_target_indices(s, case, fraction)
        .into_iter()
        .map(|l| case.lines()[l].id)
        .collect()
}

pub(crate) fn select_target_indices(s: &SystemState, case: &GridCase, fraction: f64) -> Vec<usize> {
    let mut on: Vec<usize> = (0..s.line_energized.len())
        .filter(|&l| s.line_energized[l])
        .collect();
    on.sort_by(|&a, &b| {
        s.line_flow[b]
            .abs()
            .total_cmp(&s.line_flow[a].abs())
            .then(case.lines()[a].id.cmp(&case.lines()[b].id))
    });
    let n = (fraction * on.len() as f64 - 1e-9).ceil().max(0.0) as usize;
    on.truncate(n.min(on.len()));
    on
}

/// Every subset of `targets` of size 1..=k_max, in lexicographic order of
/// target positions within each size.
pub fn enumerate_incidents(targets: &[AttackTarget], k_max: usize, mu: f64) -> Vec<AttackIncident> {
    let mut out = Vec::new();
    for k in 1..=k_max.min(targets.len()) {
        let mut pick: Vec<usize> = (0..k).collect();
        loop {
            out.push(AttackIncident::new(pick.iter().map(|&i| targets[i]).collect(), mu));
            // next combination
            let mut i = k;
            while i > 0 && pick[i - 1] == targets.len() - k + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            pick[i - 1] += 1;
            for j in i..k {
                pick[j] = pick[j - 1] + 1;
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeOutcome {
    pub final_state: SystemState,
    /// Lines removed by the incident itself (bus targets expand to lines).
    pub failed_lines: Vec<LineId>,
    pub failed_buses: Vec<BusId>,
    /// Overload trips, in round order then id order.
    pub tripped_lines: Vec<LineId>,
    pub shed_load_per_bus: BTreeMap<BusId, f64>,
    /// Generators producing before the attack and not after.
    pub lost_generators: Vec<GenId>,
    /// Cranking starts aborted because their island lost supply.
    pub aborted_starts: Vec<GenId>,
    pub rounds: usize,
    /// False when the incident touched only de-energized equipment.
    pub effective: bool,
}

impl CascadeOutcome {
    pub fn total_shed(&self) -> f64 {
        self.shed_load_per_bus.values().sum()
    }
}

struct Attacked {
    lines: Vec<usize>,
    buses: Vec<usize>,
    gens: Vec<usize>,
}

fn resolve(inc: &AttackIncident, case: &GridCase) -> Attacked {
    let mut a = Attacked {
        lines: Vec::new(),
        buses: Vec::new(),
        gens: Vec::new(),
    };
    for t in &inc.targets {
        match *t {
            AttackTarget::Line(l) => a.lines.extend(case.line_index(l)),
            AttackTarget::Bus(b) => {
                if let Some(bi) = case.bus_index(b) {
                    a.buses.push(bi);
                    a.lines.extend_from_slice(case.incident_lines(bi));
                }
            }
            AttackTarget::Gen(g) => a.gens.extend(case.gen_index(g)),
        }
    }
    a.lines.sort_unstable();
    a.lines.dedup();
    a
}

/// Applies `inc` to the stable snapshot `s` and propagates overload trips.
/// Each round recomputes the steady state of every island from the prior
/// setpoints (units pick up deficits within headroom, then load is shed
/// proportionally) and trips every overloaded line at once. The surviving
/// network is then re-dispatched within pre-attack limits.
pub fn cascade(s: &SystemState, inc: &AttackIncident, case: &GridCase) -> CascadeOutcome {
    let attacked = resolve(inc, case);
    let effective = attacked.lines.iter().any(|&l| s.line_energized[l])
        || attacked.buses.iter().any(|&b| s.bus_energized[b])
        || attacked.gens.iter().any(|&g| s.gen_status[g].is_started());
    let failed_lines: Vec<LineId> = attacked.lines.iter().map(|&l| case.lines()[l].id).collect();
    let failed_buses: Vec<BusId> = attacked.buses.iter().map(|&b| case.buses()[b].id).collect();
    if !effective {
        return CascadeOutcome {
            final_state: s.clone(),
            failed_lines,
            failed_buses,
            tripped_lines: Vec::new(),
            shed_load_per_bus: BTreeMap::new(),
            lost_generators: Vec::new(),
            aborted_starts: Vec::new(),
            rounds: 0,
            effective,
        };
    }

    let mut st = s.clone();
    for &l in &attacked.lines {
        st.line_energized[l] = false;
        st.line_flow[l] = 0.0;
    }
    for &b in &attacked.buses {
        st.bus_energized[b] = false;
        for &g in case.gens_at_bus(b) {
            st.gen_status[g] = GenStatus::Offline;
            st.gen_output[g] = 0.0;
        }
        if let Some(l) = case.load_at_bus(b) {
            st.restored_load[l] = 0.0;
        }
    }
    for &g in &attacked.gens {
        st.gen_status[g] = GenStatus::Offline;
        st.gen_output[g] = 0.0;
    }

    let mut tripped = Vec::new();
    let mut rounds = 0;
    loop {
        let islands = dense_islands(case, &st.bus_energized, &st.line_energized);
        let mut overloaded = Vec::new();
        for island in &islands {
            steady_state(case, &mut st, island);
            for &l in &island.lines {
                if st.line_flow[l].abs() > case.lines()[l].flow_limit + TRIP_TOL {
                    overloaded.push(l);
                }
            }
        }
        if overloaded.is_empty() {
            break;
        }
        overloaded.sort_unstable_by_key(|&l| case.lines()[l].id);
        for &l in &overloaded {
            st.line_energized[l] = false;
            st.line_flow[l] = 0.0;
            tripped.push(case.lines()[l].id);
        }
        rounds += 1;
        if !st.line_energized.iter().any(|&on| on) {
            break;
        }
    }

    let mut aborted = Vec::new();
    for island in dense_islands(case, &st.bus_energized, &st.line_energized) {
        redispatch(case, s, &mut st, &island, &mut aborted);
    }
    // anything dead was cleared by redispatch; record outcome
    let mut shed = BTreeMap::new();
    for (l, load) in case.loads().iter().enumerate() {
        let d = s.restored_load[l] - st.restored_load[l];
        if d > LOAD_EPS {
            shed.insert(load.bus, d);
        }
    }
    let lost = case
        .generators()
        .iter()
        .enumerate()
        .filter(|&(g, _)| s.gen_status[g].is_online() && !st.gen_status[g].is_online())
        .map(|(_, gen)| gen.id)
        .collect();
    aborted.sort();
    CascadeOutcome {
        final_state: st,
        failed_lines,
        failed_buses,
        tripped_lines: tripped,
        shed_load_per_bus: shed,
        lost_generators: lost,
        aborted_starts: aborted,
        rounds,
        effective,
    }
}

/// Steady-state recalculation of one island from the current setpoints.
fn steady_state(case: &GridCase, st: &mut SystemState, island: &Island) {
    let online: Vec<usize> = island
        .buses
        .iter()
        .flat_map(|&b| case.gens_at_bus(b).iter().copied())
        .filter(|&g| st.gen_status[g].is_online())
        .collect();
    let loads: Vec<usize> = island
        .buses
        .iter()
        .filter_map(|&b| case.load_at_bus(b))
        .collect();
    let cranking: Vec<usize> = island
        .buses
        .iter()
        .flat_map(|&b| case.gens_at_bus(b).iter().copied())
        .filter(|&g| matches!(st.gen_status[g], GenStatus::Starting { .. }))
        .collect();

    if online.is_empty() {
        for &l in &loads {
            st.restored_load[l] = 0.0;
        }
        for &l in &island.lines {
            st.line_flow[l] = 0.0;
        }
        return;
    }

    let crank: f64 = cranking.iter().map(|&g| case.generators()[g].cranking_power).sum();
    let load: f64 = loads.iter().map(|&l| st.restored_load[l]).sum();
    let supply: f64 = online.iter().map(|&g| st.gen_output[g]).sum();
    let demand = load + crank;
    if demand > supply {
        let caps: Vec<f64> = online.iter().map(|&g| st.gen_cap(case, g)).collect();
        let headroom: f64 = online
            .iter()
            .zip(&caps)
            .map(|(&g, &c)| (c - st.gen_output[g]).max(0.0))
            .sum();
        let raise = (demand - supply).min(headroom);
        if headroom > 0.0 {
            for (&g, &c) in online.iter().zip(&caps) {
                st.gen_output[g] += raise * (c - st.gen_output[g]).max(0.0) / headroom;
            }
        }
        let deficit = demand - supply - raise;
        if deficit > 0.0 && load > 0.0 {
            let keep = ((load - deficit) / load).max(0.0);
            for &l in &loads {
                st.restored_load[l] *= keep;
            }
        }
    } else if supply > demand && supply > 0.0 {
        let f = demand / supply;
        for &g in &online {
            st.gen_output[g] *= f;
        }
    }

    let Ok(net) = DcNetwork::new(case, island) else {
        return;
    };
    let mut inj = vec![0.0; island.buses.len()];
    for &g in &online {
        inj[net.local(case.gen_bus(g))] += st.gen_output[g];
    }
    for &l in &loads {
        inj[net.local(case.load_bus(l))] -= st.restored_load[l];
    }
    for &g in &cranking {
        inj[net.local(case.gen_bus(g))] -= case.generators()[g].cranking_power;
    }
    // absorb any leftover imbalance (cranking beyond all capacity) at the
    // reference so the flow solve stays well-posed
    let residual: f64 = inj.iter().sum();
    if residual.abs() > BALANCE_TOL {
        inj[0] -= residual;
    }
    for (&l, f) in island.lines.iter().zip(net.flows(&inj)) {
        st.line_flow[l] = f;
    }
}

/// Minimum-curtailment redispatch of one surviving island within the
/// pre-attack load levels. Islands without a producing unit go dark.
fn redispatch(
    case: &GridCase,
    pre: &SystemState,
    st: &mut SystemState,
    island: &Island,
    aborted: &mut Vec<GenId>,
) {
    let gens_here: Vec<usize> = island
        .buses
        .iter()
        .flat_map(|&b| case.gens_at_bus(b).iter().copied())
        .collect();
    let dark = |st: &mut SystemState, aborted: &mut Vec<GenId>| {
        for &b in &island.buses {
            st.bus_energized[b] = false;
            if let Some(l) = case.load_at_bus(b) {
                st.restored_load[l] = 0.0;
            }
        }
        for &l in &island.lines {
            st.line_energized[l] = false;
            st.line_flow[l] = 0.0;
        }
        for &g in &gens_here {
            if st.gen_status[g].is_started() {
                if !st.gen_status[g].is_online() {
                    aborted.push(case.generators()[g].id);
                }
                st.gen_status[g] = GenStatus::Offline;
            }
            st.gen_output[g] = 0.0;
        }
    };
    if !gens_here.iter().any(|&g| st.gen_status[g].is_online()) {
        dark(st, aborted);
        return;
    }

    // the loop left no overloads; if nothing was shed and the balance holds,
    // the steady state already is the minimum-curtailment dispatch
    if steady_state_is_optimal(case, pre, st, island, &gens_here) {
        return;
    }

    let limits: Vec<f64> = island.lines.iter().map(|&l| case.lines()[l].flow_limit).collect();
    let mut drop_cranking = false;
    loop {
        let mut inputs = IslandInputs::default();
        for &g in &gens_here {
            match st.gen_status[g] {
                GenStatus::Online { .. } => inputs.gens.push((g, st.gen_cap(case, g))),
                GenStatus::Starting { .. } if !drop_cranking => {
                    let p = case.generators()[g].cranking_power;
                    if p > 0.0 {
                        inputs.fixed.push((case.gen_bus(g), p));
                    }
                }
                _ => {}
            }
        }
        for &b in &island.buses {
            if let Some(l) = case.load_at_bus(b) {
                inputs.loads.push((l, 0.0, pre.restored_load[l].min(case.loads()[l].demand)));
            }
        }
        let sol = solve_island(case, island, &limits, &inputs).expect("validated case reactances");
        if sol.blocking.is_some() {
            if drop_cranking {
                // cannot happen with zero load and no fixed demand; keep safe
                dark(st, aborted);
                return;
            }
            drop_cranking = true;
            for &g in &gens_here {
                if matches!(st.gen_status[g], GenStatus::Starting { .. }) {
                    st.gen_status[g] = GenStatus::Offline;
                    aborted.push(case.generators()[g].id);
                }
            }
            continue;
        }
        for &g in &gens_here {
            st.gen_output[g] = 0.0;
        }
        for (&(g, _), &p) in inputs.gens.iter().zip(&sol.gen_out) {
            st.gen_output[g] = p;
        }
        for (&(l, _, _), &p) in inputs.loads.iter().zip(&sol.load_out) {
            st.restored_load[l] = p;
        }
        for (&l, &f) in island.lines.iter().zip(&sol.flows) {
            st.line_flow[l] = f;
        }
        return;
    }
}

fn steady_state_is_optimal(
    case: &GridCase,
    pre: &SystemState,
    st: &SystemState,
    island: &Island,
    gens_here: &[usize],
) -> bool {
    let mut demand = 0.0;
    for &b in &island.buses {
        if let Some(l) = case.load_at_bus(b) {
            let cap = pre.restored_load[l].min(case.loads()[l].demand);
            if st.restored_load[l] < cap - LOAD_EPS {
                return false;
            }
            demand += st.restored_load[l];
        }
    }
    let mut supply = 0.0;
    for &g in gens_here {
        match st.gen_status[g] {
            GenStatus::Online { .. } => {
                if st.gen_output[g] > st.gen_cap(case, g) + BALANCE_TOL {
                    return false;
                }
                supply += st.gen_output[g];
            }
            GenStatus::Starting { .. } => demand += case.generators()[g].cranking_power,
            GenStatus::Offline => {}
        }
    }
    (supply - demand).abs() <= BALANCE_TOL
}

/// Per-incident robustness indices. Percentages are `None` when the
/// pre-attack index is zero; the delay is `None` when the lost equipment
/// cannot be reconnected.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RobustnessIndices {
    /// Reconnection delay, minutes.
    pub r1_min: Option<f64>,
    /// Nameplate ramp rate lost, MW/h.
    pub r2_mw_per_h: f64,
    /// Load curtailed, % of restored load.
    pub r3_pct: Option<f64>,
    /// Connectedness drop, %.
    pub r4_pct: Option<f64>,
    /// Redundancy drop, %.
    pub r5_pct: Option<f64>,
}

fn pct(before: f64, after: f64) -> Option<f64> {
    (before > 0.0).then(|| (before - after) / before * 100.0)
}

/// Robustness indices of `out`, which must derive from `pre`.
pub fn robustness_indices(pre: &SystemState, out: &CascadeOutcome, case: &GridCase) -> RobustnessIndices {
    if !out.effective {
        return RobustnessIndices {
            r1_min: Some(0.0),
            r2_mw_per_h: 0.0,
            r3_pct: (pre.total_load() > 0.0).then_some(0.0),
            r4_pct: (connectedness_of(case, pre) > 0.0).then_some(0.0),
            r5_pct: (redundancy_of(case, pre) > 0.0).then_some(0.0),
        };
    }
    let post = &out.final_state;

    // reconnection may use any intact line; tripped lines count as lost
    let mut unusable: BTreeSet<LineId> = out.failed_lines.iter().copied().collect();
    unusable.extend(out.tripped_lines.iter().copied());
    let failed_bus: BTreeSet<BusId> = out.failed_buses.iter().copied().collect();
    let mut anchors = BTreeSet::new();
    for (g, gen) in case.generators().iter().enumerate() {
        if pre.gen_status[g].is_started() {
            anchors.insert(gen.bus);
        }
    }
    for (l, load) in case.loads().iter().enumerate() {
        if pre.restored_load[l] > LOAD_EPS {
            anchors.insert(load.bus);
        }
    }
    let anchors: Vec<BusId> = anchors.into_iter().filter(|b| !failed_bus.contains(b)).collect();
    let r1 = case.black_start().and_then(|bsu| {
        if failed_bus.contains(&bsu.bus) {
            return None;
        }
        let mut graph = post.restored_graph(case);
        if !graph.contains(bsu.bus) {
            // the black-start bus itself went dark: restart from it
            graph = crate::topology::RestoredGraph::new(
                graph.nodes().iter().copied().chain([bsu.bus]),
                graph.edges().iter().copied(),
            )
            .ok()?;
        }
        reconnection_plan(case, &unusable, &graph, bsu.bus, &anchors).delay_minutes(case)
    });

    let r2 = out
        .lost_generators
        .iter()
        .filter_map(|&g| case.generator(g))
        .map(|g| g.ramp_rate)
        .sum();

    RobustnessIndices {
        r1_min: r1,
        r2_mw_per_h: r2,
        r3_pct: pct(pre.total_load(), post.total_load()),
        r4_pct: pct(connectedness_of(case, pre), connectedness_of(case, post)),
        r5_pct: pct(redundancy_of(case, pre), redundancy_of(case, post)),
    }
}

/// Anticipated incidents for snapshot `s`: subsets of the top-flow lines.
pub fn anticipated_incidents(
    s: &SystemState,
    case: &GridCase,
    fraction: f64,
    k_max: usize,
    mu: f64,
) -> Vec<AttackIncident> {
    let mut targets = select_targets(s, case, fraction);
    targets.sort();
    let targets: Vec<AttackTarget> = targets.into_iter().map(AttackTarget::Line).collect();
    enumerate_incidents(&targets, k_max, mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dispatch::tests::small_case;
    use crate::sim::{dispatch_state, SimConfig};

    #[test]
    fn target_grammar() {
        assert_eq!("line:4".parse(), Ok(AttackTarget::Line(LineId(4))));
        assert_eq!("bus:3".parse(), Ok(AttackTarget::Bus(BusId(3))));
        assert_eq!("gen:30".parse(), Ok(AttackTarget::Gen(GenId(30))));
        assert!("pump:1".parse::<AttackTarget>().is_err());
        assert!("line".parse::<AttackTarget>().is_err());
        assert_eq!(AttackTarget::Gen(GenId(30)).to_string(), "gen:30");
    }

    #[test]
    fn incident_counts_and_weights() {
        let t: Vec<AttackTarget> = (1..=3).map(|i| AttackTarget::Line(LineId(i))).collect();
        let inc = enumerate_incidents(&t, 2, 0.25);
        assert_eq!(inc.len(), 6);
        assert!(inc[..3].iter().all(|i| i.k() == 1 && i.probability == 0.25));
        assert!(inc[3..].iter().all(|i| i.k() == 2 && i.probability == 0.0625));
        assert_eq!(enumerate_incidents(&t, 1, 0.25).len(), 3);
        assert!(enumerate_incidents(&[], 2, 0.25).is_empty());
        assert_eq!(enumerate_incidents(&t, 3, 0.5).len(), 7);
    }

    fn state_with_flows(n: usize, flows: &[f64]) -> SystemState {
        let case = crate::case::GridCase::ieee39();
        let mut s = SystemState::initial(&case);
        for (l, &f) in flows.iter().enumerate().take(n) {
            s.line_energized[l] = true;
            s.line_flow[l] = f;
        }
        s
    }

    #[test]
    fn top_fraction_and_ties() {
        let case = crate::case::GridCase::ieee39();
        let flows: Vec<f64> = (0..10).map(|i| i as f64 * 10.0 - 45.0).collect();
        let s = state_with_flows(10, &flows);
        let t = select_targets(&s, &case, 0.3);
        assert_eq!(t, vec![LineId(1), LineId(10), LineId(2)]);
        let s = state_with_flows(10, &[7.0; 10]);
        assert_eq!(select_targets(&s, &case, 0.3), vec![LineId(1), LineId(2), LineId(3)]);
        let s = state_with_flows(1, &[1.0]);
        assert_eq!(select_targets(&s, &case, 0.3), vec![LineId(1)]);
    }

    /// Snapshot of a small case with everything energized and dispatched.
    fn energized(case: &GridCase) -> SystemState {
        let mut s = SystemState::initial(case);
        s.time_min = 1e4;
        s.bus_energized.iter_mut().for_each(|b| *b = true);
        s.line_energized.iter_mut().for_each(|l| *l = true);
        for (g, st) in s.gen_status.iter_mut().enumerate() {
            *st = GenStatus::Online { start_min: 0.0 };
            let _ = g;
        }
        let d = dispatch_state(case, &s, None, 1.0).ok().unwrap();
        s.gen_output = d.gen_output;
        s.restored_load = d.restored_load;
        s.line_flow = d.line_flow;
        s
    }

    #[test]
    fn dead_line_attack_is_ineffective() {
        let case = small_case(&[(1, 2, 0.1, 100.0), (2, 3, 0.1, 100.0)], &[(1, 100.0)], &[(2, 20.0)]);
        let mut s = energized(&case);
        s.line_energized[1] = false;
        s.bus_energized[2] = false;
        s.line_flow[1] = 0.0;
        let out = cascade(&s, &AttackIncident::new(vec![AttackTarget::Line(LineId(2))], 0.25), &case);
        assert!(!out.effective);
        assert_eq!(out.final_state, s);
        let r = robustness_indices(&s, &out, &case);
        assert_eq!(r.r1_min, Some(0.0));
        assert_eq!(r.r2_mw_per_h, 0.0);
        assert_eq!(r.r3_pct, Some(0.0));
    }

    #[test]
    fn cutting_radial_feeder_sheds_its_load() {
        let case = small_case(
            &[(1, 2, 0.1, 500.0), (2, 3, 0.1, 500.0)],
            &[(1, 200.0)],
            &[(2, 30.0), (3, 50.0)],
        );
        let s = energized(&case);
        assert_eq!(s.total_load(), 80.0);
        let out = cascade(&s, &AttackIncident::new(vec![AttackTarget::Line(LineId(2))], 0.25), &case);
        assert!((out.total_shed() - 50.0).abs() < 1e-9);
        assert!(out.tripped_lines.is_empty());
        assert_eq!(out.rounds, 0);
        assert!(!out.final_state.bus_energized[2]);
    }

    #[test]
    fn triangle_overload_trips_second_line() {
        // gen at 1, 150 MW load at 3, triangle with equal reactances: 1-3
        // carries 100, 1-2-3 carries 50. Losing 1-3 pushes 150 over 1-2 and 2-3.
        let case = small_case(
            &[(1, 2, 0.1, 120.0), (2, 3, 0.1, 200.0), (1, 3, 0.1, 200.0)],
            &[(1, 300.0)],
            &[(3, 150.0)],
        );
        let s = energized(&case);
        assert!((s.line_flow[2] - 100.0).abs() < 1e-9);
        let out = cascade(&s, &AttackIncident::new(vec![AttackTarget::Line(LineId(3))], 0.25), &case);
        assert_eq!(out.rounds, 1);
        assert_eq!(out.tripped_lines, vec![LineId(1)]);
        assert!((out.total_shed() - 150.0).abs() < 1e-9);
        assert_eq!(out.final_state.gen_status[0], GenStatus::Online { start_min: 0.0 });
        let again = cascade(&out.final_state, &AttackIncident::new(vec![], 0.25), &case);
        assert_eq!(again.final_state, out.final_state);
    }

    #[test]
    fn generator_loss_reports_nameplate_ramp() {
        let case = crate::case::GridCase::ieee39();
        let tr = crate::sim::simulate_sequence(
            &case,
            &crate::sim::greedy_baseline(&case),
            &SimConfig::default(),
        )
        .unwrap();
        let s = tr.steps.last().unwrap();
        let out = cascade(s, &AttackIncident::new(vec![AttackTarget::Gen(GenId(30))], 0.25), &case);
        let r = robustness_indices(s, &out, &case);
        assert_eq!(r.r2_mw_per_h, 624.0);
        assert!(out.final_state.line_flow.iter().zip(case.lines()).all(|(f, l)| f.abs() <= l.flow_limit + TRIP_TOL));
    }
}
