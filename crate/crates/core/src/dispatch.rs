//! DC (B-theta) power flow and the linear dispatch problems solved on each
//! island: maximum load pickup during restoration and minimum-curtailment
//! redispatch after an attack.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::case::{BusId, GenId, GridCase, LineId};
use crate::error::DispatchError;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::topology::RestoredGraph;

/// Power balance and flow-limit tolerance, MW.
pub const BALANCE_TOL: f64 = 1e-6;

/// Default share of available generation that may be picked up as load.
pub const DEFAULT_TAU: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct DispatchProblem {
    pub island: RestoredGraph,
    /// Upper output bound per generator, MW.
    pub gen_caps: BTreeMap<GenId, f64>,
    /// Upper bound on restored load per bus, MW.
    pub load_caps: BTreeMap<BusId, f64>,
    /// Load that must stay served (monotone pickup), MW.
    pub load_floors: BTreeMap<BusId, f64>,
    /// Fixed consumption of generators being cranked, MW.
    pub cranking_demands: BTreeMap<GenId, f64>,
    /// Pickup ratio against total available generation, in [0, 1].
    pub tau: f64,
    /// Per-line overrides of the case thermal limits, MW.
    pub line_limits: BTreeMap<LineId, f64>,
}

impl DispatchProblem {
    pub fn new(island: RestoredGraph) -> Self {
        Self {
            island,
            gen_caps: BTreeMap::new(),
            load_caps: BTreeMap::new(),
            load_floors: BTreeMap::new(),
            cranking_demands: BTreeMap::new(),
            tau: DEFAULT_TAU,
            line_limits: BTreeMap::new(),
        }
    }
}

/// The constraint that made an island infeasible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Blocking {
    /// Generation cannot cover cranking demand plus committed load.
    Capacity,
    /// Committed load exceeds the pickup ratio of available generation.
    PickupRatio,
    /// No dispatch satisfies the line thermal limits.
    LineLimits,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DispatchResult {
    pub gen_output: BTreeMap<GenId, f64>,
    pub restored_load: BTreeMap<BusId, f64>,
    pub line_flows: BTreeMap<LineId, f64>,
    pub feasible: bool,
    pub blocking: Option<Blocking>,
}

impl DispatchResult {
    pub fn total_load(&self) -> f64 {
        self.restored_load.values().sum()
    }
}

// ---- dense island machinery ----

/// A connected set of buses and the lines among them, as case indices in
/// ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Island {
    pub buses: Vec<usize>,
    pub lines: Vec<usize>,
}

/// Connected components of the sub-network selected by the masks. A line is
/// part of the network only if it and both endpoints are on.
pub(crate) fn dense_islands(case: &GridCase, buses: &[bool], lines: &[bool]) -> Vec<Island> {
    let n = buses.len();
    let mut comp = vec![usize::MAX; n];
    let mut out = Vec::new();
    for s in 0..n {
        if !buses[s] || comp[s] != usize::MAX {
            continue;
        }
        let id = out.len();
        comp[s] = id;
        let mut stack = vec![s];
        let mut members = vec![s];
        let mut edges = Vec::new();
        while let Some(u) = stack.pop() {
            for &l in case.incident_lines(u) {
                if !lines[l] {
                    continue;
                }
                let (a, b) = case.line_ends(l);
                if !buses[a] || !buses[b] {
                    continue;
                }
                let v = if a == u { b } else { a };
                if comp[v] == usize::MAX {
                    comp[v] = id;
                    members.push(v);
                    stack.push(v);
                }
                if u == a {
                    edges.push(l);
                }
            }
        }
        members.sort_unstable();
        edges.sort_unstable();
        edges.dedup();
        out.push(Island {
            buses: members,
            lines: edges,
        });
    }
    out
}

/// DC network of one island. Radial branches are peeled off leaf by leaf
/// (their flows follow from accumulated injections); only the meshed core
/// is factorized, with its lowest bus as angle reference.
pub(crate) struct DcNetwork {
    local: Vec<usize>,
    ends: Vec<(usize, usize)>,
    susceptance: Vec<f64>,
    /// (node, line, parent) in peeling order
    peel: Vec<(usize, usize, usize)>,
    /// core node -> row in the reduced core matrix (reference has none)
    core_row: Vec<Option<usize>>,
    core_lines: Vec<usize>,
    core_size: usize,
    lu: Option<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>>,
    n: usize,
    base: f64,
}

impl DcNetwork {
    pub fn new(case: &GridCase, island: &Island) -> Result<Self, DispatchError> {
        let mut local = vec![usize::MAX; case.buses().len()];
        for (i, &b) in island.buses.iter().enumerate() {
            local[b] = i;
        }
        let n = island.buses.len();
        let mut ends = Vec::with_capacity(island.lines.len());
        let mut susceptance = Vec::with_capacity(island.lines.len());
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
        for (k, &l) in island.lines.iter().enumerate() {
            let line = &case.lines()[l];
            if !(line.reactance > 0.0) {
                return Err(DispatchError::ZeroReactance(line.id));
            }
            let (a, b) = case.line_ends(l);
            let (a, b) = (local[a], local[b]);
            ends.push((a, b));
            susceptance.push(1.0 / line.reactance);
            adj[a].push((b, k));
            adj[b].push((a, k));
        }

        let mut degree: Vec<usize> = adj.iter().map(Vec::len).collect();
        let mut removed = vec![false; n];
        let mut line_done = vec![false; ends.len()];
        let mut stack: Vec<usize> = (0..n).filter(|&i| degree[i] == 1).collect();
        let mut peel = Vec::new();
        let mut remaining = n;
        while let Some(u) = stack.pop() {
            if removed[u] || degree[u] != 1 || remaining == 1 {
                continue;
            }
            let &(v, k) = adj[u]
                .iter()
                .find(|&&(_, k)| !line_done[k])
                .expect("leaf keeps one live line");
            removed[u] = true;
            remaining -= 1;
            line_done[k] = true;
            degree[u] = 0;
            degree[v] -= 1;
            peel.push((u, k, v));
            if degree[v] == 1 {
                stack.push(v);
            }
        }

        let mut core_row = vec![None; n];
        let core: Vec<usize> = (0..n).filter(|&i| !removed[i]).collect();
        for (r, &c) in core.iter().skip(1).enumerate() {
            core_row[c] = Some(r);
        }
        let core_lines: Vec<usize> = (0..ends.len()).filter(|&k| !line_done[k]).collect();
        let m = core.len().saturating_sub(1);
        let lu = (m > 0).then(|| {
            let mut bmat = DMatrix::<f64>::zeros(m, m);
            for &k in &core_lines {
                let (a, b) = ends[k];
                let y = susceptance[k];
                if let Some(i) = core_row[a] {
                    bmat[(i, i)] += y;
                }
                if let Some(j) = core_row[b] {
                    bmat[(j, j)] += y;
                }
                if let (Some(i), Some(j)) = (core_row[a], core_row[b]) {
                    bmat[(i, j)] -= y;
                    bmat[(j, i)] -= y;
                }
            }
            bmat.lu()
        });
        Ok(Self {
            local,
            ends,
            susceptance,
            peel,
            core_row,
            core_lines,
            core_size: m,
            lu,
            n,
            base: case.mva_base(),
        })
    }

    pub fn local(&self, bus: usize) -> usize {
        self.local[bus]
    }

    /// Line flows in MW (positive from the line's `from` bus) for balanced
    /// injections given per local bus.
    pub fn flows(&self, injection_mw: &[f64]) -> Vec<f64> {
        let mut p = injection_mw.to_vec();
        let mut flow = vec![0.0; self.ends.len()];
        for &(u, k, v) in &self.peel {
            flow[k] = if self.ends[k].0 == u { p[u] } else { -p[u] };
            p[v] += p[u];
            p[u] = 0.0;
        }
        if let Some(lu) = &self.lu {
            let mut rhs = DVector::zeros(self.core_size);
            for (i, row) in self.core_row.iter().enumerate() {
                if let Some(r) = row {
                    rhs[*r] = p[i] / self.base;
                }
            }
            let theta = lu.solve(&rhs).expect("island susceptance matrix is non-singular");
            let angle = |i: usize| self.core_row[i].map_or(0.0, |r| theta[r]);
            for &k in &self.core_lines {
                let (a, b) = self.ends[k];
                flow[k] = (angle(a) - angle(b)) * self.susceptance[k] * self.base;
            }
        }
        flow
    }

    /// Flow sensitivity of each line to an injection at each local bus,
    /// withdrawn at local bus 0.
    pub fn ptdf(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let m = self.ends.len();
        let mut h = vec![vec![0.0; n]; m];
        if n < 2 {
            return h;
        }
        let mut bmat = DMatrix::<f64>::zeros(n - 1, n - 1);
        for (&(a, b), &y) in self.ends.iter().zip(&self.susceptance) {
            if a > 0 {
                bmat[(a - 1, a - 1)] += y;
            }
            if b > 0 {
                bmat[(b - 1, b - 1)] += y;
            }
            if a > 0 && b > 0 {
                bmat[(a - 1, b - 1)] -= y;
                bmat[(b - 1, a - 1)] -= y;
            }
        }
        let inv = bmat
            .try_inverse()
            .expect("island susceptance matrix is non-singular");
        let x = |i: usize, j: usize| if i == 0 || j == 0 { 0.0 } else { inv[(i - 1, j - 1)] };
        for (k, (&(a, b), &y)) in self.ends.iter().zip(&self.susceptance).enumerate() {
            for (j, hj) in h[k].iter_mut().enumerate() {
                let v = (x(a, j) - x(b, j)) * y;
                *hj = if v.abs() < 1e-12 { 0.0 } else { v };
            }
        }
        h
    }
}

/// Inputs for one island, in case indices.
#[derive(Debug, Clone, Default)]
pub(crate) struct IslandInputs {
    /// (generator index, output cap MW)
    pub gens: Vec<(usize, f64)>,
    /// (load index, floor MW, cap MW)
    pub loads: Vec<(usize, f64, f64)>,
    /// (bus index, fixed demand MW)
    pub fixed: Vec<(usize, f64)>,
    pub tau: Option<f64>,
}

#[derive(Debug, Clone)]
pub(crate) struct IslandSolution {
    pub gen_out: Vec<f64>,
    pub load_out: Vec<f64>,
    pub flows: Vec<f64>,
    pub blocking: Option<Blocking>,
}

impl IslandSolution {
    fn blocked(inputs: &IslandInputs, island: &Island, why: Blocking) -> Self {
        Self {
            gen_out: vec![0.0; inputs.gens.len()],
            load_out: vec![0.0; inputs.loads.len()],
            flows: vec![0.0; island.lines.len()],
            blocking: Some(why),
        }
    }
}

/// Maximizes served load on one island subject to generator caps, load
/// bounds, fixed demand, the optional pickup ratio and DC line limits.
pub(crate) fn solve_island(
    case: &GridCase,
    island: &Island,
    limits: &[f64],
    inputs: &IslandInputs,
) -> Result<IslandSolution, DispatchError> {
    let cap_sum: f64 = inputs.gens.iter().map(|g| g.1).sum();
    let floor_sum: f64 = inputs.loads.iter().map(|l| l.1).sum();
    let load_cap_sum: f64 = inputs.loads.iter().map(|l| l.2).sum();
    let fixed_sum: f64 = inputs.fixed.iter().map(|f| f.1).sum();

    if cap_sum + BALANCE_TOL < fixed_sum + floor_sum {
        return Ok(IslandSolution::blocked(inputs, island, Blocking::Capacity));
    }
    let ratio_cap = inputs.tau.map_or(f64::INFINITY, |t| t * cap_sum);
    if ratio_cap + BALANCE_TOL < floor_sum {
        return Ok(IslandSolution::blocked(inputs, island, Blocking::PickupRatio));
    }
    let target = load_cap_sum
        .min(ratio_cap)
        .min(cap_sum - fixed_sum)
        .max(floor_sum);

    let net = DcNetwork::new(case, island)?;
    let n_local = island.buses.len();
    let within = |flows: &[f64]| {
        flows
            .iter()
            .zip(limits)
            .all(|(f, lim)| f.abs() <= lim + BALANCE_TOL)
    };

    // proportional candidate; optimal whenever it respects the line limits
    let headroom: f64 = inputs.loads.iter().map(|l| l.2 - l.1).sum();
    let extra = target - floor_sum;
    let load_out: Vec<f64> = inputs
        .loads
        .iter()
        .map(|&(_, floor, cap)| {
            if headroom > 0.0 {
                (floor + extra * (cap - floor) / headroom).min(cap)
            } else {
                floor
            }
        })
        .collect();
    let served: f64 = load_out.iter().sum();
    let gen_total = served + fixed_sum;
    let gen_out: Vec<f64> = inputs
        .gens
        .iter()
        .map(|&(_, cap)| if cap_sum > 0.0 { gen_total * cap / cap_sum } else { 0.0 })
        .collect();

    let injections = |gen_out: &[f64], load_out: &[f64]| {
        let mut inj = vec![0.0; n_local];
        for (&(g, _), &p) in inputs.gens.iter().zip(gen_out) {
            inj[net.local(case.gen_bus(g))] += p;
        }
        for (&(l, _, _), &p) in inputs.loads.iter().zip(load_out) {
            inj[net.local(case.load_bus(l))] -= p;
        }
        for &(b, p) in &inputs.fixed {
            inj[net.local(b)] -= p;
        }
        inj
    };

    let flows = net.flows(&injections(&gen_out, &load_out));
    if within(&flows) {
        return Ok(IslandSolution {
            gen_out,
            load_out,
            flows,
            blocking: None,
        });
    }

    // LP over generator outputs and load above its floor
    let ng = inputs.gens.len();
    let nl = inputs.loads.len();
    let mut lp = LinearProgram::new(ng + nl);
    for j in 0..nl {
        lp.objective[ng + j] = 1.0;
    }
    for (i, &(_, cap)) in inputs.gens.iter().enumerate() {
        lp.add(vec![(i, 1.0)], Relation::Le, cap);
    }
    for (j, &(_, floor, cap)) in inputs.loads.iter().enumerate() {
        lp.add(vec![(ng + j, 1.0)], Relation::Le, (cap - floor).max(0.0));
    }
    let mut balance: Vec<(usize, f64)> = (0..ng).map(|i| (i, 1.0)).collect();
    balance.extend((0..nl).map(|j| (ng + j, -1.0)));
    lp.add(balance, Relation::Eq, floor_sum + fixed_sum);
    if inputs.tau.is_some() {
        lp.add(
            (0..nl).map(|j| (ng + j, 1.0)).collect(),
            Relation::Le,
            (ratio_cap - floor_sum).max(0.0),
        );
    }
    let ptdf = net.ptdf();
    for (k, row) in ptdf.iter().enumerate() {
        if !limits[k].is_finite() {
            continue;
        }
        let mut coefs = Vec::new();
        for (i, &(g, _)) in inputs.gens.iter().enumerate() {
            let h = row[net.local(case.gen_bus(g))];
            if h != 0.0 {
                coefs.push((i, h));
            }
        }
        let mut constant = 0.0;
        for (j, &(l, floor, _)) in inputs.loads.iter().enumerate() {
            let h = row[net.local(case.load_bus(l))];
            if h != 0.0 {
                coefs.push((ng + j, -h));
                constant -= h * floor;
            }
        }
        for &(b, p) in &inputs.fixed {
            constant -= row[net.local(b)] * p;
        }
        if coefs.is_empty() {
            if constant.abs() > limits[k] + BALANCE_TOL {
                return Ok(IslandSolution::blocked(inputs, island, Blocking::LineLimits));
            }
            continue;
        }
        lp.add(coefs.clone(), Relation::Le, limits[k] - constant);
        lp.add(coefs, Relation::Ge, -limits[k] - constant);
    }

    match lp.solve() {
        LpOutcome::Optimal { x, .. } => {
            let gen_out: Vec<f64> = x[..ng].to_vec();
            let load_out: Vec<f64> = inputs
                .loads
                .iter()
                .zip(&x[ng..])
                .map(|(&(_, floor, cap), &y)| (floor + y).min(cap))
                .collect();
            // restore exact balance on the largest unit to absorb round-off
            let mut gen_out = gen_out;
            let mismatch = load_out.iter().sum::<f64>() + fixed_sum - gen_out.iter().sum::<f64>();
            if let Some(i) = (0..ng).max_by(|&a, &b| gen_out[a].total_cmp(&gen_out[b])) {
                gen_out[i] += mismatch;
            }
            let flows = net.flows(&injections(&gen_out, &load_out));
            Ok(IslandSolution {
                gen_out,
                load_out,
                flows,
                blocking: None,
            })
        }
        _ => Ok(IslandSolution::blocked(inputs, island, Blocking::LineLimits)),
    }
}

// ---- public API over ids ----

fn islands_of(case: &GridCase, g: &RestoredGraph) -> Result<Vec<Island>, DispatchError> {
    let mut buses = vec![false; case.buses().len()];
    for &b in g.nodes() {
        buses[case.bus_index(b).ok_or(DispatchError::UnknownBus(b))?] = true;
    }
    let mut lines = vec![false; case.lines().len()];
    for &(l, _, _) in g.edges() {
        if let Some(i) = case.line_index(l) {
            lines[i] = true;
        }
    }
    Ok(dense_islands(case, &buses, &lines))
}

/// DC power flow: `flow = (theta_from - theta_to) / x * base` with the
/// lowest bus of every island as angle reference.
pub fn dc_power_flow(
    g: &RestoredGraph,
    injections: &BTreeMap<BusId, f64>,
    case: &GridCase,
) -> Result<BTreeMap<LineId, f64>, DispatchError> {
    let mut out = BTreeMap::new();
    for island in islands_of(case, g)? {
        let net = DcNetwork::new(case, &island)?;
        let mut inj = vec![0.0; island.buses.len()];
        for (i, &b) in island.buses.iter().enumerate() {
            inj[i] = injections.get(&case.buses()[b].id).copied().unwrap_or(0.0);
        }
        let mismatch: f64 = inj.iter().sum();
        if mismatch.abs() > BALANCE_TOL {
            return Err(DispatchError::Unbalanced {
                bus: case.buses()[island.buses[0]].id,
                mismatch,
            });
        }
        for (&l, f) in island.lines.iter().zip(net.flows(&inj)) {
            out.insert(case.lines()[l].id, f);
        }
    }
    Ok(out)
}

fn limits_for(case: &GridCase, island: &Island, overrides: &BTreeMap<LineId, f64>) -> Vec<f64> {
    island
        .lines
        .iter()
        .map(|&l| {
            let line = &case.lines()[l];
            overrides.get(&line.id).copied().unwrap_or(line.flow_limit)
        })
        .collect()
}

fn solve_problem(
    case: &GridCase,
    p: &DispatchProblem,
    load_cap: impl Fn(BusId) -> f64,
    with_floors: bool,
    tau: Option<f64>,
) -> Result<DispatchResult, DispatchError> {
    let mut result = DispatchResult {
        feasible: true,
        ..Default::default()
    };
    for island in islands_of(case, &p.island)? {
        let mut member = vec![false; case.buses().len()];
        for &b in &island.buses {
            member[b] = true;
        }
        let mut inputs = IslandInputs {
            tau,
            ..Default::default()
        };
        for (&gid, &cap) in &p.gen_caps {
            if let Some(gi) = case.gen_index(gid) {
                if member[case.gen_bus(gi)] {
                    inputs.gens.push((gi, cap.max(0.0)));
                }
            }
        }
        for (&gid, &mw) in &p.cranking_demands {
            if let Some(gi) = case.gen_index(gid) {
                if member[case.gen_bus(gi)] && mw > 0.0 {
                    inputs.fixed.push((case.gen_bus(gi), mw));
                }
            }
        }
        for &b in &island.buses {
            let Some(li) = case.load_at_bus(b) else {
                continue;
            };
            let id = case.buses()[b].id;
            if !p.load_caps.contains_key(&id) {
                continue;
            }
            let cap = load_cap(id).max(0.0);
            let floor = if with_floors {
                p.load_floors.get(&id).copied().unwrap_or(0.0).min(cap)
            } else {
                0.0
            };
            inputs.loads.push((li, floor, cap));
        }
        let limits = limits_for(case, &island, &p.line_limits);
        let sol = solve_island(case, &island, &limits, &inputs)?;
        if sol.blocking.is_some() {
            result.feasible = false;
            result.blocking = result.blocking.or(sol.blocking);
        }
        for (&(gi, _), &v) in inputs.gens.iter().zip(&sol.gen_out) {
            result.gen_output.insert(case.generators()[gi].id, v);
        }
        for (&(li, _, _), &v) in inputs.loads.iter().zip(&sol.load_out) {
            result.restored_load.insert(case.loads()[li].bus, v);
        }
        for (&l, &f) in island.lines.iter().zip(&sol.flows) {
            result.line_flows.insert(case.lines()[l].id, f);
        }
    }
    Ok(result)
}

/// Maximum load restoration on every island of the problem.
pub fn restoration_dispatch(
    case: &GridCase,
    p: &DispatchProblem,
) -> Result<DispatchResult, DispatchError> {
    let cap = |b: BusId| p.load_caps.get(&b).copied().unwrap_or(0.0);
    solve_problem(case, p, cap, true, Some(p.tau))
}

/// Minimum-curtailment redispatch using only surviving restored equipment:
/// outputs stay within their pre-attack caps and loads within their prior
/// restored values.
pub fn post_attack_redispatch(
    case: &GridCase,
    p: &DispatchProblem,
    prior: &DispatchResult,
) -> Result<DispatchResult, DispatchError> {
    let cap = |b: BusId| {
        let c = p.load_caps.get(&b).copied().unwrap_or(0.0);
        c.min(prior.restored_load.get(&b).copied().unwrap_or(0.0))
    };
    solve_problem(case, p, cap, false, None)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::case::{Bus, Generator, Line, Load};

    pub(crate) fn small_case(lines: &[(u32, u32, f64, f64)], gens: &[(u32, f64)], loads: &[(u32, f64)]) -> GridCase {
        let mut buses: Vec<u32> = lines.iter().flat_map(|l| [l.0, l.1]).collect();
        buses.sort_unstable();
        buses.dedup();
        GridCase::from_parts(
            100.0,
            buses.iter().map(|&b| Bus { id: BusId(b), name: None }).collect(),
            lines
                .iter()
                .enumerate()
                .map(|(i, &(a, b, x, lim))| Line {
                    id: LineId(i as u32 + 1),
                    from_bus: BusId(a),
                    to_bus: BusId(b),
                    reactance: x,
                    flow_limit: lim,
                    restoration_minutes: 5.0,
                })
                .collect(),
            gens.iter()
                .enumerate()
                .map(|(i, &(b, p))| Generator {
                    id: GenId(b),
                    bus: BusId(b),
                    rated_power: p,
                    ramp_rate: 0.6 * p,
                    cranking_power: 0.0,
                    hot_start_limit: f64::INFINITY,
                    cold_start_limit: 0.0,
                    is_black_start: i == 0,
                })
                .collect(),
            loads
                .iter()
                .map(|&(b, d)| Load { bus: BusId(b), demand: d, is_critical: false })
                .collect(),
        )
    }

    fn full_problem(case: &GridCase) -> DispatchProblem {
        let mut p = DispatchProblem::new(RestoredGraph::full(case));
        for g in case.generators() {
            p.gen_caps.insert(g.id, g.rated_power);
        }
        for l in case.loads() {
            p.load_caps.insert(l.bus, l.demand);
        }
        p
    }

    #[test]
    fn two_bus_flow() {
        let case = small_case(&[(1, 2, 0.1, 100.0)], &[(1, 100.0)], &[]);
        let inj = BTreeMap::from([(BusId(1), 50.0), (BusId(2), -50.0)]);
        let f = dc_power_flow(&RestoredGraph::full(&case), &inj, &case).unwrap();
        assert!((f[&LineId(1)] - 50.0).abs() < 1e-9);
    }

    #[test]
    fn triangle_splits_two_to_one() {
        let case = small_case(
            &[(1, 2, 0.1, 100.0), (2, 3, 0.1, 100.0), (1, 3, 0.1, 100.0)],
            &[(1, 100.0)],
            &[],
        );
        let inj = BTreeMap::from([(BusId(1), 90.0), (BusId(2), -90.0)]);
        let f = dc_power_flow(&RestoredGraph::full(&case), &inj, &case).unwrap();
        assert!((f[&LineId(1)] - 60.0).abs() < 1e-9);
        assert!((f[&LineId(2)] + 30.0).abs() < 1e-9);
        assert!((f[&LineId(3)] - 30.0).abs() < 1e-9);
    }

    #[test]
    fn zero_injection_zero_flow() {
        let case = small_case(&[(1, 2, 0.1, 100.0), (2, 3, 0.2, 100.0)], &[(1, 100.0)], &[]);
        let f = dc_power_flow(&RestoredGraph::full(&case), &BTreeMap::new(), &case).unwrap();
        assert!(f.values().all(|&v| v == 0.0));
    }

    #[test]
    fn power_flow_errors() {
        let case = small_case(&[(1, 2, 0.1, 100.0)], &[(1, 100.0)], &[]);
        let inj = BTreeMap::from([(BusId(1), 50.0)]);
        assert!(matches!(
            dc_power_flow(&RestoredGraph::full(&case), &inj, &case),
            Err(DispatchError::Unbalanced { .. })
        ));
        let bad = small_case(&[(1, 2, 0.0, 100.0)], &[(1, 100.0)], &[]);
        assert_eq!(
            dc_power_flow(&RestoredGraph::full(&bad), &BTreeMap::new(), &bad),
            Err(DispatchError::ZeroReactance(LineId(1)))
        );
    }

    #[test]
    fn binding_line_limits_load() {
        let case = small_case(&[(1, 2, 0.1, 50.0)], &[(1, 100.0)], &[(2, 80.0)]);
        let r = restoration_dispatch(&case, &full_problem(&case)).unwrap();
        assert!(r.feasible);
        assert!((r.total_load() - 50.0).abs() < 1e-6);
    }

    #[test]
    fn ratio_not_binding() {
        let case = small_case(&[(1, 2, 0.1, 200.0)], &[(1, 100.0)], &[(2, 80.0)]);
        let r = restoration_dispatch(&case, &full_problem(&case)).unwrap();
        assert!((r.total_load() - 80.0).abs() < 1e-6);
    }

    #[test]
    fn ratio_binding() {
        let case = small_case(&[(1, 2, 0.1, 200.0)], &[(1, 100.0)], &[(2, 120.0)]);
        let r = restoration_dispatch(&case, &full_problem(&case)).unwrap();
        assert!((r.total_load() - 95.0).abs() < 1e-6);
    }

    #[test]
    fn no_generators_is_all_zero() {
        let case = small_case(&[(1, 2, 0.1, 200.0)], &[(1, 100.0)], &[(2, 80.0)]);
        let mut p = full_problem(&case);
        p.gen_caps.clear();
        let r = restoration_dispatch(&case, &p).unwrap();
        assert!(r.feasible);
        assert_eq!(r.total_load(), 0.0);
    }

    #[test]
    fn unservable_cranking_is_infeasible() {
        let case = small_case(&[(1, 2, 0.1, 200.0)], &[(1, 100.0), (2, 50.0)], &[(2, 80.0)]);
        let mut p = full_problem(&case);
        p.gen_caps.insert(GenId(1), 10.0);
        p.gen_caps.insert(GenId(2), 0.0);
        p.cranking_demands.insert(GenId(2), 20.0);
        let r = restoration_dispatch(&case, &p).unwrap();
        assert!(!r.feasible);
        assert_eq!(r.blocking, Some(Blocking::Capacity));
    }

    #[test]
    fn redispatch_without_attack_keeps_prior() {
        let case = small_case(&[(1, 2, 0.1, 50.0)], &[(1, 100.0)], &[(2, 80.0)]);
        let p = full_problem(&case);
        let prior = restoration_dispatch(&case, &p).unwrap();
        let after = post_attack_redispatch(&case, &p, &prior).unwrap();
        assert!((after.total_load() - prior.total_load()).abs() < 1e-9);
    }

    #[test]
    fn generatorless_island_sheds_everything() {
        let case = small_case(&[(1, 2, 0.1, 500.0)], &[(1, 200.0)], &[(2, 100.0)]);
        let p = full_problem(&case);
        let prior = restoration_dispatch(&case, &p).unwrap();
        let mut cut = p.clone();
        cut.island = RestoredGraph::new([BusId(1), BusId(2)], []).unwrap();
        let after = post_attack_redispatch(&case, &cut, &prior).unwrap();
        assert_eq!(after.restored_load[&BusId(2)], 0.0);
        assert!((prior.total_load() - after.total_load() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn losing_a_line_forces_twenty_mw_shed() {
        // gen at 1, 60 MW load at 3. Intact, 1-3 carries 40 and 1-2-3
        // carries 20. Without 1-3 everything goes over 1-2, limited to 40.
        let case = small_case(
            &[(1, 2, 0.1, 40.0), (2, 3, 0.1, 100.0), (1, 3, 0.1, 60.0)],
            &[(1, 200.0)],
            &[(3, 60.0)],
        );
        let p = full_problem(&case);
        let prior = restoration_dispatch(&case, &p).unwrap();
        // 60 MW load: 1-3 carries 40, 1-2-3 carries 20; all within limits
        assert!((prior.total_load() - 60.0).abs() < 1e-6);
        let mut cut = p.clone();
        cut.island = RestoredGraph::new(
            [BusId(1), BusId(2), BusId(3)],
            [(LineId(1), BusId(1), BusId(2)), (LineId(2), BusId(2), BusId(3))],
        )
        .unwrap();
        let after = post_attack_redispatch(&case, &cut, &prior).unwrap();
        assert!((prior.total_load() - after.total_load() - 20.0).abs() < 1e-6);
    }

    #[test]
    fn islands_group_masks() {
        let case = GridCase::ieee39();
        let n = case.buses().len();
        let mut lines = vec![true; case.lines().len()];
        for &l in case.incident_lines(case.bus_index(BusId(3)).unwrap()) {
            lines[l] = false;
        }
        let isl = dense_islands(&case, &vec![true; n], &lines);
        assert_eq!(isl.iter().map(|i| i.buses.len()).sum::<usize>(), n);
        assert!(isl.iter().any(|i| i.buses == vec![case.bus_index(BusId(3)).unwrap()]));
    }
}
