//! Discrete-time restoration simulation. A line permutation is decoded into a
//! feasible energization order; each step energizes one line, starts every
//! eligible generator and re-dispatches load.

use serde::Serialize;

use crate::case::{BusId, GenId, Generator, GridCase, LineId};
use crate::dispatch::{dense_islands, solve_island, Blocking, IslandInputs, DEFAULT_TAU};
use crate::error::ScheduleError;
use crate::topology::{connectedness_index, redundancy_index, RestoredGraph};

/// Loads below this are treated as not restored, MW.
pub(crate) const LOAD_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum GenStatus {
    Offline,
    /// Drawing cranking power; not yet producing.
    Starting { start_min: f64 },
    Online { start_min: f64 },
}

impl GenStatus {
    pub fn start_time(self) -> Option<f64> {
        match self {
            GenStatus::Offline => None,
            GenStatus::Starting { start_min } | GenStatus::Online { start_min } => Some(start_min),
        }
    }
    pub fn is_started(self) -> bool {
        !matches!(self, GenStatus::Offline)
    }
    pub fn is_online(self) -> bool {
        matches!(self, GenStatus::Online { .. })
    }
}

/// Output cap of a generator at time `t` given its start time: zero before
/// start, linear ramp at `r_g` until rated power, rated power afterwards.
pub fn gen_output_at(g: &Generator, start_min: Option<f64>, t: f64) -> f64 {
    let Some(ts) = start_min else {
        return 0.0;
    };
    if t <= ts {
        return 0.0;
    }
    (g.ramp_rate * (t - ts) / 60.0).min(g.rated_power)
}

/// One restoration time-section. Vectors are indexed like the case's buses,
/// lines, generators and loads.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub time_min: f64,
    pub bus_energized: Vec<bool>,
    pub line_energized: Vec<bool>,
    pub gen_status: Vec<GenStatus>,
    pub gen_output: Vec<f64>,
    pub restored_load: Vec<f64>,
    pub line_flow: Vec<f64>,
}

impl SystemState {
    /// Black-start bus energized and the black-start unit running from t = 0.
    pub fn initial(case: &GridCase) -> Self {
        let mut s = Self {
            time_min: 0.0,
            bus_energized: vec![false; case.buses().len()],
            line_energized: vec![false; case.lines().len()],
            gen_status: vec![GenStatus::Offline; case.generators().len()],
            gen_output: vec![0.0; case.generators().len()],
            restored_load: vec![0.0; case.loads().len()],
            line_flow: vec![0.0; case.lines().len()],
        };
        if let Some(b) = case.black_start_index() {
            s.bus_energized[case.gen_bus(b)] = true;
            s.gen_status[b] = GenStatus::Online { start_min: 0.0 };
        }
        s
    }

    pub fn total_load(&self) -> f64 {
        self.restored_load.iter().sum()
    }

    pub fn restored_graph(&self, case: &GridCase) -> RestoredGraph {
        RestoredGraph::from_masks(case, &self.bus_energized, &self.line_energized)
    }

    pub fn energized_lines(&self, case: &GridCase) -> Vec<LineId> {
        ids(&self.line_energized, |i| case.lines()[i].id)
    }

    pub fn energized_buses(&self, case: &GridCase) -> Vec<BusId> {
        ids(&self.bus_energized, |i| case.buses()[i].id)
    }

    /// Generators that have been restarted (cranking or producing).
    pub fn started_gens(&self, case: &GridCase) -> Vec<GenId> {
        self.gen_status
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_started())
            .map(|(i, _)| case.generators()[i].id)
            .collect()
    }

    /// Load buses currently serving a positive load.
    pub fn restored_load_buses(&self, case: &GridCase) -> Vec<BusId> {
        self.restored_load
            .iter()
            .enumerate()
            .filter(|&(i, &p)| p > LOAD_EPS && self.bus_energized[case.load_bus(i)])
            .map(|(i, _)| case.loads()[i].bus)
            .collect()
    }

    pub fn flow(&self, case: &GridCase, line: LineId) -> Option<f64> {
        case.line_index(line).map(|i| self.line_flow[i])
    }

    pub(crate) fn gen_cap(&self, case: &GridCase, g: usize) -> f64 {
        match self.gen_status[g] {
            GenStatus::Online { start_min } => {
                gen_output_at(&case.generators()[g], Some(start_min), self.time_min)
            }
            _ => 0.0,
        }
    }
}

fn ids<T>(mask: &[bool], f: impl Fn(usize) -> T) -> Vec<T> {
    mask.iter()
        .enumerate()
        .filter(|(_, &on)| on)
        .map(|(i, _)| f(i))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StartBlock {
    NotOffline,
    BusDeEnergized,
    CrankingPower,
    StartWindow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StartCheck {
    pub allowed: bool,
    pub reason: Option<StartBlock>,
}

impl StartCheck {
    fn deny(why: StartBlock) -> Self {
        Self {
            allowed: false,
            reason: Some(why),
        }
    }
}

/// Whether generator `gen` may start at time `t` in state `s`: the cranking
/// power of units being started plus the restored load plus this unit's
/// cranking power must be strictly below the available output, and the
/// start must fall in the hot (`t < T_CH`) or cold (`t > T_CC`) window.
pub fn can_start(case: &GridCase, gen: GenId, t: f64, s: &SystemState) -> StartCheck {
    let Some(gi) = case.gen_index(gen) else {
        return StartCheck::deny(StartBlock::NotOffline);
    };
    let g = &case.generators()[gi];
    if s.gen_status[gi].is_started() {
        return StartCheck::deny(StartBlock::NotOffline);
    }
    if !s.bus_energized[case.gen_bus(gi)] {
        return StartCheck::deny(StartBlock::BusDeEnergized);
    }
    let mut available = 0.0;
    let mut cranking = 0.0;
    for (i, st) in s.gen_status.iter().enumerate() {
        let other = &case.generators()[i];
        match *st {
            GenStatus::Online { start_min } => available += gen_output_at(other, Some(start_min), t),
            GenStatus::Starting { .. } => cranking += other.cranking_power,
            GenStatus::Offline => {}
        }
    }
    if !(cranking + s.total_load() + g.cranking_power < available) {
        return StartCheck::deny(StartBlock::CrankingPower);
    }
    if !(t < g.hot_start_limit || t > g.cold_start_limit) {
        return StartCheck::deny(StartBlock::StartWindow);
    }
    StartCheck {
        allowed: true,
        reason: None,
    }
}

/// Turns a permutation of line ids into a prefix-feasible energization order:
/// at each pick, the earliest remaining line in permutation order that
/// touches an energized bus. Lines never reachable are left out.
pub fn decode(perm: &[LineId], case: &GridCase) -> Vec<LineId> {
    let idx: Vec<usize> = perm.iter().filter_map(|&l| case.line_index(l)).collect();
    decode_indices(&idx, case)
        .into_iter()
        .map(|i| case.lines()[i].id)
        .collect()
}

pub(crate) fn decode_indices(perm: &[usize], case: &GridCase) -> Vec<usize> {
    let mut energized = vec![false; case.buses().len()];
    if let Some(b) = case.black_start_index() {
        energized[case.gen_bus(b)] = true;
    }
    let mut used = vec![false; perm.len()];
    let mut out = Vec::with_capacity(perm.len());
    loop {
        let next = perm.iter().enumerate().find(|&(k, &l)| {
            let (a, b) = case.line_ends(l);
            !used[k] && (energized[a] || energized[b])
        });
        let Some((k, &l)) = next else {
            break;
        };
        used[k] = true;
        let (a, b) = case.line_ends(l);
        energized[a] = true;
        energized[b] = true;
        out.push(l);
    }
    out
}

/// Checks that every line of `sequence` touches an already energized bus
/// when its turn comes.
pub fn check_sequence(case: &GridCase, sequence: &[LineId]) -> Result<Vec<usize>, ScheduleError> {
    if sequence.is_empty() {
        return Err(ScheduleError::Empty);
    }
    let mut energized = vec![false; case.buses().len()];
    if let Some(b) = case.black_start_index() {
        energized[case.gen_bus(b)] = true;
    }
    // unknown and repeated ids are reported ahead of ordering problems
    let mut seen = vec![false; case.lines().len()];
    let mut out = Vec::with_capacity(sequence.len());
    for &id in sequence {
        let l = case.line_index(id).ok_or(ScheduleError::UnknownLine(id))?;
        if seen[l] {
            return Err(ScheduleError::Duplicate(id));
        }
        seen[l] = true;
        out.push(l);
    }
    for (&l, &id) in out.iter().zip(sequence) {
        let (a, b) = case.line_ends(l);
        if !energized[a] && !energized[b] {
            return Err(ScheduleError::Infeasible(id));
        }
        energized[a] = true;
        energized[b] = true;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimConfig {
    pub step_minutes: f64,
    pub max_steps: usize,
    pub tau: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            step_minutes: 5.0,
            max_steps: 96,
            tau: DEFAULT_TAU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    LineEnergized,
    GeneratorStarted,
    GeneratorOnline,
    LoadShed,
    StartAborted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Event {
    pub time_min: f64,
    pub kind: EventKind,
    /// Line or generator id, or the bus id for load events.
    pub element: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<SystemState>,
    pub events: Vec<Event>,
    /// Time at which the last non-black-start unit started; `None` when the
    /// step budget ran out first.
    pub completion_time: Option<f64>,
    pub step_minutes: f64,
    /// Lines energized, in order (one per step from step 1).
    pub sequence: Vec<LineId>,
}

impl Trajectory {
    pub fn is_complete(&self) -> bool {
        self.completion_time.is_some()
    }

    /// Snapshot at `time_min`, if it lies on the step grid.
    pub fn state_at(&self, time_min: f64) -> Option<&SystemState> {
        self.steps.iter().find(|s| (s.time_min - time_min).abs() < 1e-9)
    }

    /// Line energized at step `k` (step 0 has none).
    pub fn line_at_step(&self, k: usize) -> Option<LineId> {
        k.checked_sub(1).and_then(|i| self.sequence.get(i)).copied()
    }

    pub fn events_at(&self, time_min: f64) -> impl Iterator<Item = &Event> {
        self.events
            .iter()
            .filter(move |e| (e.time_min - time_min).abs() < 1e-9)
    }
}

pub(crate) struct DenseDispatch {
    pub gen_output: Vec<f64>,
    pub restored_load: Vec<f64>,
    pub line_flow: Vec<f64>,
}

/// Restoration dispatch over all energized islands of `s`, with loads bounded
/// below by `floors` when given.
pub(crate) fn dispatch_state(
    case: &GridCase,
    s: &SystemState,
    floors: Option<&[f64]>,
    tau: f64,
) -> Result<DenseDispatch, Blocking> {
    let mut out = DenseDispatch {
        gen_output: vec![0.0; case.generators().len()],
        restored_load: vec![0.0; case.loads().len()],
        line_flow: vec![0.0; case.lines().len()],
    };
    for island in dense_islands(case, &s.bus_energized, &s.line_energized) {
        let mut inputs = IslandInputs {
            tau: Some(tau),
            ..Default::default()
        };
        for &b in &island.buses {
            for &g in case.gens_at_bus(b) {
                match s.gen_status[g] {
                    GenStatus::Online { .. } => inputs.gens.push((g, s.gen_cap(case, g))),
                    GenStatus::Starting { .. } => {
                        let p = case.generators()[g].cranking_power;
                        if p > 0.0 {
                            inputs.fixed.push((b, p));
                        }
                    }
                    GenStatus::Offline => {}
                }
            }
            if let Some(l) = case.load_at_bus(b) {
                let cap = case.loads()[l].demand;
                let floor = floors.map_or(0.0, |f| f[l].min(cap));
                inputs.loads.push((l, floor, cap));
            }
        }
        let limits: Vec<f64> = island.lines.iter().map(|&l| case.lines()[l].flow_limit).collect();
        let sol = solve_island(case, &island, &limits, &inputs).expect("validated case reactances");
        if let Some(b) = sol.blocking {
            return Err(b);
        }
        for (&(g, _), &p) in inputs.gens.iter().zip(&sol.gen_out) {
            out.gen_output[g] = p;
        }
        for (&(l, _, _), &p) in inputs.loads.iter().zip(&sol.load_out) {
            out.restored_load[l] = p;
        }
        for (&l, &f) in island.lines.iter().zip(&sol.flows) {
            out.line_flow[l] = f;
        }
    }
    Ok(out)
}

fn apply(s: &mut SystemState, d: DenseDispatch) {
    s.gen_output = d.gen_output;
    s.restored_load = d.restored_load;
    s.line_flow = d.line_flow;
}

fn all_started(case: &GridCase, s: &SystemState) -> bool {
    case.generators()
        .iter()
        .zip(&s.gen_status)
        .all(|(g, st)| g.is_black_start || st.is_started())
}

/// Decodes `perm` and simulates the resulting schedule.
pub fn simulate(case: &GridCase, perm: &[LineId], cfg: &SimConfig) -> Trajectory {
    let idx: Vec<usize> = perm.iter().filter_map(|&l| case.line_index(l)).collect();
    simulate_indices(case, &decode_indices(&idx, case), cfg)
}

/// Simulates an explicit energization order, which must be prefix-feasible.
pub fn simulate_sequence(
    case: &GridCase,
    sequence: &[LineId],
    cfg: &SimConfig,
) -> Result<Trajectory, ScheduleError> {
    let idx = check_sequence(case, sequence)?;
    Ok(simulate_indices(case, &idx, cfg))
}

/// Step-by-step simulation over a prefix-feasible sequence of line indices.
/// `on_step` is called for every snapshot with the step number.
pub(crate) fn run_steps(
    case: &GridCase,
    sequence: &[usize],
    cfg: &SimConfig,
    mut on_step: impl FnMut(usize, &SystemState),
) -> Trajectory {
    let dt = cfg.step_minutes;
    let mut events = Vec::new();
    let mut state = SystemState::initial(case);
    if let Ok(d) = dispatch_state(case, &state, None, cfg.tau) {
        apply(&mut state, d);
    }
    on_step(0, &state);
    let mut steps = vec![state.clone()];
    let mut completion = all_started(case, &state).then_some(0.0);
    let mut used = Vec::new();

    let mut k = 0;
    while completion.is_none() && k < cfg.max_steps {
        k += 1;
        let t = k as f64 * dt;
        let prev_load = state.restored_load.clone();
        state.time_min = t;

        if let Some(&l) = sequence.get(k - 1) {
            let (a, b) = case.line_ends(l);
            state.line_energized[l] = true;
            state.bus_energized[a] = true;
            state.bus_energized[b] = true;
            used.push(case.lines()[l].id);
            events.push(Event {
                time_min: t,
                kind: EventKind::LineEnergized,
                element: case.lines()[l].id.0,
            });
        }

        for (g, gen) in case.generators().iter().enumerate() {
            if let GenStatus::Starting { start_min } = state.gen_status[g] {
                if gen_output_at(gen, Some(start_min), t) >= gen.cranking_power {
                    state.gen_status[g] = GenStatus::Online { start_min };
                    events.push(Event {
                        time_min: t,
                        kind: EventKind::GeneratorOnline,
                        element: gen.id.0,
                    });
                }
            }
        }

        for (g, gen) in case.generators().iter().enumerate() {
            if gen.is_black_start || state.gen_status[g].is_started() {
                continue;
            }
            if !can_start(case, gen.id, t, &state).allowed {
                continue;
            }
            state.gen_status[g] = if gen.cranking_power <= 0.0 {
                GenStatus::Online { start_min: t }
            } else {
                GenStatus::Starting { start_min: t }
            };
            if dispatch_state(case, &state, Some(&prev_load), cfg.tau).is_err() {
                state.gen_status[g] = GenStatus::Offline;
                continue;
            }
            events.push(Event {
                time_min: t,
                kind: EventKind::GeneratorStarted,
                element: gen.id.0,
            });
        }

        match dispatch_state(case, &state, Some(&prev_load), cfg.tau) {
            Ok(d) => apply(&mut state, d),
            Err(_) => {
                // committed load no longer fits: allow shedding, and abort the
                // most recent starts if even that fails
                loop {
                    if let Ok(d) = dispatch_state(case, &state, None, cfg.tau) {
                        for (l, (&before, &after)) in prev_load.iter().zip(&d.restored_load).enumerate() {
                            if after < before - LOAD_EPS {
                                events.push(Event {
                                    time_min: t,
                                    kind: EventKind::LoadShed,
                                    element: case.loads()[l].bus.0,
                                });
                            }
                        }
                        apply(&mut state, d);
                        break;
                    }
                    let latest = (0..case.generators().len())
                        .filter(|&g| matches!(state.gen_status[g], GenStatus::Starting { .. }))
                        .max_by(|&a, &b| {
                            let ta = state.gen_status[a].start_time().unwrap_or(0.0);
                            let tb = state.gen_status[b].start_time().unwrap_or(0.0);
                            ta.total_cmp(&tb).then(a.cmp(&b))
                        });
                    let Some(g) = latest else {
                        break;
                    };
                    state.gen_status[g] = GenStatus::Offline;
                    events.push(Event {
                        time_min: t,
                        kind: EventKind::StartAborted,
                        element: case.generators()[g].id.0,
                    });
                }
            }
        }

        on_step(k, &state);
        steps.push(state.clone());
        if all_started(case, &state) {
            completion = Some(t);
        }
    }

    Trajectory {
        steps,
        events,
        completion_time: completion,
        step_minutes: dt,
        sequence: used,
    }
}

pub(crate) fn simulate_indices(case: &GridCase, sequence: &[usize], cfg: &SimConfig) -> Trajectory {
    run_steps(case, sequence, cfg, |_, _| {})
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestorabilityIndices {
    /// Total restoration time, minutes.
    pub r1_min: f64,
    /// Time-averaged total ramp rate of ramping units, MW/h.
    pub r2_mw_per_h: f64,
    pub times_min: Vec<f64>,
    /// Total restored load per step, MW.
    pub r3_mw: Vec<f64>,
    /// Generator-to-load connectedness per step.
    pub r4: Vec<f64>,
    /// Network redundancy per step.
    pub r5: Vec<f64>,
}

impl RestorabilityIndices {
    pub fn final_r3(&self) -> f64 {
        self.r3_mw.last().copied().unwrap_or(0.0)
    }
    pub fn final_r4(&self) -> f64 {
        self.r4.last().copied().unwrap_or(0.0)
    }
    pub fn final_r5(&self) -> f64 {
        self.r5.last().copied().unwrap_or(0.0)
    }
}

/// Sum of ramp rates of generators on their ramp at `t`.
pub(crate) fn active_ramp(case: &GridCase, s: &SystemState, t: f64) -> f64 {
    case.generators()
        .iter()
        .zip(&s.gen_status)
        .filter_map(|(g, st)| {
            let ts = st.start_time()?;
            (t >= ts && t < ts + g.ramp_minutes()).then_some(g.ramp_rate)
        })
        .sum()
}

pub fn connectedness_of(case: &GridCase, s: &SystemState) -> f64 {
    connectedness_index(
        &s.restored_graph(case),
        case,
        &s.started_gens(case),
        &s.restored_load_buses(case),
    )
}

pub fn redundancy_of(case: &GridCase, s: &SystemState) -> f64 {
    redundancy_index(&s.restored_graph(case), case.buses().len())
}

/// Restorability indices of a trajectory. Time integrals use the left
/// rectangle rule over the steps before completion; for a non-completing
/// trajectory the horizon is its last step.
pub fn restorability_indices(tr: &Trajectory, case: &GridCase) -> RestorabilityIndices {
    let horizon = tr
        .completion_time
        .or_else(|| tr.steps.last().map(|s| s.time_min))
        .unwrap_or(0.0);
    let ramp_integral: f64 = tr
        .steps
        .iter()
        .filter(|s| s.time_min < horizon - 1e-9)
        .map(|s| active_ramp(case, s, s.time_min) * tr.step_minutes)
        .sum();
    RestorabilityIndices {
        r1_min: horizon,
        r2_mw_per_h: if horizon > 0.0 { ramp_integral / horizon } else { 0.0 },
        times_min: tr.steps.iter().map(|s| s.time_min).collect(),
        r3_mw: tr.steps.iter().map(|s| s.total_load()).collect(),
        r4: tr.steps.iter().map(|s| connectedness_of(case, s)).collect(),
        r5: tr.steps.iter().map(|s| redundancy_of(case, s)).collect(),
    }
}

/// Shortest-path greedy schedule: repeatedly energizes the fewest-line path
/// to the nearest generator not yet reached, then any remaining lines in id
/// order.
pub fn greedy_baseline(case: &GridCase) -> Vec<LineId> {
    use std::collections::VecDeque;
    let n = case.buses().len();
    let mut energized = vec![false; n];
    let Some(bsu) = case.black_start_index() else {
        return Vec::new();
    };
    energized[case.gen_bus(bsu)] = true;
    let mut used = vec![false; case.lines().len()];
    let mut order = Vec::new();
    loop {
        let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut seen = energized.clone();
        let mut queue: VecDeque<usize> = (0..n).filter(|&b| energized[b]).collect();
        let mut hit = None;
        while let Some(u) = queue.pop_front() {
            if !energized[u] && !case.gens_at_bus(u).is_empty() {
                hit = Some(u);
                break;
            }
            for &l in case.incident_lines(u) {
                let (a, b) = case.line_ends(l);
                let v = if a == u { b } else { a };
                if !seen[v] {
                    seen[v] = true;
                    prev[v] = Some((u, l));
                    queue.push_back(v);
                }
            }
        }
        let Some(mut v) = hit else {
            break;
        };
        let mut path = Vec::new();
        while let Some((u, l)) = prev[v] {
            path.push(l);
            energized[v] = true;
            v = u;
        }
        path.reverse();
        for l in path {
            used[l] = true;
            order.push(l);
        }
    }
    let rest: Vec<usize> = (0..case.lines().len()).filter(|&l| !used[l]).collect();
    let mut full = order.clone();
    full.extend(rest);
    decode_indices(&full, case)
        .into_iter()
        .map(|l| case.lines()[l].id)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{Bus, Line, Load};

    fn gen(id: u32, p: f64, r: f64) -> Generator {
        Generator {
            id: GenId(id),
            bus: BusId(id),
            rated_power: p,
            ramp_rate: r,
            cranking_power: 0.05 * p,
            hot_start_limit: f64::INFINITY,
            cold_start_limit: 0.0,
            is_black_start: false,
        }
    }

    #[test]
    fn ramp_matches_table_parameters() {
        let g30 = gen(30, 1040.0, 624.0);
        assert_eq!(gen_output_at(&g30, Some(0.0), 50.0), 520.0);
        assert_eq!(gen_output_at(&g30, Some(10.0), 5.0), 0.0);
        assert_eq!(gen_output_at(&g30, None, 50.0), 0.0);
        let g39 = gen(39, 1100.0, 660.0);
        assert_eq!(gen_output_at(&g39, Some(15.0), 115.0), 1100.0);
        assert_eq!(gen_output_at(&g39, Some(15.0), 300.0), 1100.0);
        assert!(gen_output_at(&g39, Some(15.0), 114.0) < 1100.0);
    }

    fn two_bus() -> GridCase {
        let mut bsu = gen(1, 100.0, 600.0);
        bsu.is_black_start = true;
        let mut nbsu = gen(2, 50.0, 30.0);
        nbsu.cranking_power = 10.0;
        GridCase::from_parts(
            100.0,
            vec![
                Bus { id: BusId(1), name: None },
                Bus { id: BusId(2), name: None },
            ],
            vec![Line {
                id: LineId(1),
                from_bus: BusId(1),
                to_bus: BusId(2),
                reactance: 0.1,
                flow_limit: 200.0,
                restoration_minutes: 5.0,
            }],
            vec![bsu, nbsu],
            vec![Load { bus: BusId(2), demand: 20.0, is_critical: false }],
        )
    }

    #[test]
    fn cranking_check_is_strict() {
        let case = GridCase::ieee39();
        let mut s = SystemState::initial(&case);
        let g = case.gen_index(GenId(39)).unwrap();
        s.bus_energized[case.gen_bus(g)] = true;
        // BSU at 5 min offers 52 MW; a 52 MW crank is not strictly below it
        let mut probe = case.generators().to_vec();
        probe[g].cranking_power = 52.0;
        let probe_case = GridCase::from_parts(
            100.0,
            case.buses().to_vec(),
            case.lines().to_vec(),
            probe,
            case.loads().to_vec(),
        );
        let c = can_start(&probe_case, GenId(39), 5.0, &s);
        assert_eq!(c.reason, Some(StartBlock::CrankingPower));
    }

    #[test]
    fn cranking_check_allows_margin() {
        let case = two_bus();
        let mut s = SystemState::initial(&case);
        s.bus_energized[1] = true;
        s.time_min = 10.0; // BSU: 600 MW/h * 10 min = 100 MW
        s.restored_load[0] = 20.0;
        let mut gens = case.generators().to_vec();
        gens[1].cranking_power = 50.0;
        let c2 = GridCase::from_parts(100.0, case.buses().to_vec(), case.lines().to_vec(), gens, case.loads().to_vec());
        assert!(can_start(&c2, GenId(2), 10.0, &s).allowed);
    }

    #[test]
    fn start_window_blocks() {
        let case = two_bus();
        let mut gens = case.generators().to_vec();
        gens[1].hot_start_limit = 30.0;
        gens[1].cold_start_limit = 60.0;
        let c2 = GridCase::from_parts(100.0, case.buses().to_vec(), case.lines().to_vec(), gens, case.loads().to_vec());
        let mut s = SystemState::initial(&c2);
        s.bus_energized[1] = true;
        let c = can_start(&c2, GenId(2), 40.0, &s);
        assert_eq!(c.reason, Some(StartBlock::StartWindow));
        assert!(can_start(&c2, GenId(2), 20.0, &s).allowed);
    }

    #[test]
    fn nbsu_starts_when_its_bus_is_reached() {
        let case = two_bus();
        let tr = simulate(&case, &[LineId(1)], &SimConfig::default());
        assert_eq!(tr.completion_time, Some(5.0));
        let s1 = &tr.steps[1];
        assert_eq!(s1.gen_status[1], GenStatus::Starting { start_min: 5.0 });
        assert!(tr.steps[0].line_energized.iter().all(|&on| !on));
    }

    #[test]
    fn unreachable_generator_does_not_complete() {
        let case = two_bus();
        let cfg = SimConfig {
            max_steps: 10,
            ..Default::default()
        };
        let tr = simulate_sequence(&case, &[LineId(1)], &cfg).unwrap();
        assert!(tr.is_complete());
        let mut gens = case.generators().to_vec();
        gens[1].cranking_power = 1e6;
        let heavy = GridCase::from_parts(100.0, case.buses().to_vec(), case.lines().to_vec(), gens, case.loads().to_vec());
        let tr = simulate(&heavy, &[LineId(1)], &cfg);
        assert!(!tr.is_complete());
        assert_eq!(tr.steps.len(), 11);
    }

    #[test]
    fn sequence_errors() {
        let case = GridCase::ieee39();
        assert_eq!(check_sequence(&case, &[]), Err(ScheduleError::Empty));
        assert_eq!(check_sequence(&case, &[LineId(99)]), Err(ScheduleError::UnknownLine(LineId(99))));
        assert_eq!(
            check_sequence(&case, &[LineId(5), LineId(20)]),
            Err(ScheduleError::Infeasible(LineId(20)))
        );
    }

    #[test]
    fn feasible_permutation_decodes_to_itself() {
        let case = GridCase::ieee39();
        let seq = greedy_baseline(&case);
        assert_eq!(decode(&seq, &case), seq);
    }

    #[test]
    fn decode_forces_hub_first() {
        // star: hub line 5 (2-30) must precede 1 (1-2), 3 (2-3), 4 (2-25)
        let case = GridCase::ieee39();
        let perm = [LineId(1), LineId(3), LineId(4), LineId(5)];
        assert_eq!(
            decode(&perm, &case),
            vec![LineId(5), LineId(1), LineId(3), LineId(4)]
        );
    }

    #[test]
    fn ramp_index_for_single_unit() {
        let case = two_bus();
        let mut gens = case.generators().to_vec();
        gens[0].ramp_rate = 624.0;
        gens[0].rated_power = 1040.0;
        let c2 = GridCase::from_parts(100.0, case.buses().to_vec(), case.lines().to_vec(), gens, case.loads().to_vec());
        // only the BSU ramps over [0, 100) when nothing else starts
        let mut s = SystemState::initial(&c2);
        let mut steps = Vec::new();
        for k in 0..=20 {
            s.time_min = 5.0 * k as f64;
            steps.push(s.clone());
        }
        let tr = Trajectory {
            steps,
            events: Vec::new(),
            completion_time: Some(100.0),
            step_minutes: 5.0,
            sequence: Vec::new(),
        };
        let idx = restorability_indices(&tr, &c2);
        assert_eq!(idx.r2_mw_per_h, 624.0);
        assert!(idx.r3_mw.iter().all(|&p| p == 0.0));
        s.bus_energized = vec![true; 2];
        assert_eq!(idx.r1_min, 100.0);
    }

    #[test]
    fn bundled_baseline_completes() {
        let case = GridCase::ieee39();
        let tr = simulate_sequence(&case, &greedy_baseline(&case), &SimConfig::default()).unwrap();
        let t = tr.completion_time.expect("baseline completes");
        assert_eq!(t % 5.0, 0.0);
        assert!(tr.steps.last().unwrap().gen_status.iter().all(|s| s.is_started()));
        for w in tr.steps.windows(2) {
            assert!(w[1].total_load() >= w[0].total_load() - 1e-9);
        }
    }
}
