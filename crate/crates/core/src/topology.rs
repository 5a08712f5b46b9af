//! Graph algorithms over restored-grid snapshots: islanding, pairwise edge
//! connectivity, the connectedness and redundancy indices, and the
//! reconnection path search used for restoration delay.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use crate::case::{BusId, GenId, GridCase, LineId};
use crate::error::TopologyError;

/// An energized sub-network: restored buses and the energized, non-failed
/// lines between them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RestoredGraph {
    nodes: Vec<BusId>,
    edges: Vec<(LineId, BusId, BusId)>,
}

impl RestoredGraph {
    pub fn new(
        nodes: impl IntoIterator<Item = BusId>,
        edges: impl IntoIterator<Item = (LineId, BusId, BusId)>,
    ) -> Result<Self, TopologyError> {
        let nodes: BTreeSet<BusId> = nodes.into_iter().collect();
        let mut edges: Vec<_> = edges.into_iter().collect();
        edges.sort_by_key(|e| e.0);
        for &(id, a, b) in &edges {
            if !nodes.contains(&a) || !nodes.contains(&b) {
                return Err(TopologyError::DanglingEdge(id));
            }
        }
        Ok(Self {
            nodes: nodes.into_iter().collect(),
            edges,
        })
    }

    /// The whole case as a graph.
    pub fn full(case: &GridCase) -> Self {
        Self {
            nodes: {
                let mut v: Vec<_> = case.buses().iter().map(|b| b.id).collect();
                v.sort();
                v
            },
            edges: {
                let mut e: Vec<_> = case
                    .lines()
                    .iter()
                    .map(|l| (l.id, l.from_bus, l.to_bus))
                    .collect();
                e.sort_by_key(|e| e.0);
                e
            },
        }
    }

    /// Builds the graph from dense bus/line masks; lines with a dead endpoint
    /// are dropped.
    pub(crate) fn from_masks(case: &GridCase, buses: &[bool], lines: &[bool]) -> Self {
        let mut nodes: Vec<BusId> = case
            .buses()
            .iter()
            .zip(buses)
            .filter(|(_, &on)| on)
            .map(|(b, _)| b.id)
            .collect();
        nodes.sort();
        let mut edges: Vec<_> = case
            .lines()
            .iter()
            .enumerate()
            .filter(|&(i, _)| {
                let (a, b) = case.line_ends(i);
                lines[i] && buses[a] && buses[b]
            })
            .map(|(_, l)| (l.id, l.from_bus, l.to_bus))
            .collect();
        edges.sort_by_key(|e| e.0);
        Self { nodes, edges }
    }

    pub fn nodes(&self) -> &[BusId] {
        &self.nodes
    }
    pub fn edges(&self) -> &[(LineId, BusId, BusId)] {
        &self.edges
    }
    pub fn contains(&self, bus: BusId) -> bool {
        self.nodes.binary_search(&bus).is_ok()
    }

    fn index(&self) -> Indexed {
        let pos: HashMap<BusId, usize> =
            self.nodes.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for (e, &(_, a, b)) in self.edges.iter().enumerate() {
            let (a, b) = (pos[&a], pos[&b]);
            adj[a].push((b, e));
            adj[b].push((a, e));
        }
        Indexed { pos, adj }
    }
}

struct Indexed {
    pos: HashMap<BusId, usize>,
    adj: Vec<Vec<(usize, usize)>>,
}

impl Indexed {
    fn components(&self) -> Vec<usize> {
        let n = self.adj.len();
        let mut comp = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            let mut stack = vec![s];
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adj[u] {
                    if comp[v] == usize::MAX {
                        comp[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// Connected components, each sorted, ordered by their smallest bus id.
pub fn islands(g: &RestoredGraph) -> Vec<Vec<BusId>> {
    let idx = g.index();
    let comp = idx.components();
    let mut groups: BTreeMap<usize, Vec<BusId>> = BTreeMap::new();
    // nodes are sorted, so component numbers appear in ascending-min order
    for (i, &c) in comp.iter().enumerate() {
        groups.entry(c).or_default().push(g.nodes[i]);
    }
    groups.into_values().collect()
}

/// Minimum number of edges whose removal disconnects `i` from `j`, computed
/// as a unit-capacity undirected max flow.
pub fn edge_connectivity(g: &RestoredGraph, i: BusId, j: BusId) -> Result<u32, TopologyError> {
    if i == j {
        return Err(TopologyError::IdenticalNodes(i));
    }
    let idx = g.index();
    let s = *idx.pos.get(&i).ok_or(TopologyError::UnknownNode(i))?;
    let t = *idx.pos.get(&j).ok_or(TopologyError::UnknownNode(j))?;
    Ok(max_flow_unit(&idx.adj, g.edges.len(), s, t))
}

/// Augmenting-path max flow where each undirected edge carries one unit in
/// either direction.
fn max_flow_unit(adj: &[Vec<(usize, usize)>], n_edges: usize, s: usize, t: usize) -> u32 {
    // flow[e] in {-1, 0, 1}, positive meaning from the lower-indexed adjacency
    // endpoint recorded in `dir`.
    let n = adj.len();
    let mut flow = vec![0i8; n_edges];
    let mut tail = vec![usize::MAX; n_edges];
    for (u, list) in adj.iter().enumerate() {
        for &(_, e) in list {
            if tail[e] == usize::MAX {
                tail[e] = u;
            }
        }
    }
    let residual = |flow: &[i8], e: usize, from: usize| -> bool {
        // capacity 1 each way: f(u->v) <= 1 with f(v->u) = -f(u->v)
        let f = if tail[e] == from { flow[e] } else { -flow[e] };
        f < 1
    };
    let mut total = 0;
    loop {
        let mut prev = vec![None; n];
        let mut queue = VecDeque::from([s]);
        let mut seen = vec![false; n];
        seen[s] = true;
        while let Some(u) = queue.pop_front() {
            if u == t {
                break;
            }
            for &(v, e) in &adj[u] {
                if !seen[v] && residual(&flow, e, u) {
                    seen[v] = true;
                    prev[v] = Some((u, e));
                    queue.push_back(v);
                }
            }
        }
        if !seen[t] {
            return total;
        }
        let mut v = t;
        while let Some((u, e)) = prev[v] {
            if tail[e] == u {
                flow[e] += 1;
            } else {
                flow[e] -= 1;
            }
            v = u;
        }
        total += 1;
    }
}

/// Share of (restarted generator, restored load) pairs that are connected in
/// `g`, relative to the (generator, load) pairs connected in the full case.
pub fn connectedness_index(
    g: &RestoredGraph,
    case: &GridCase,
    online_gens: &[GenId],
    online_loads: &[BusId],
) -> f64 {
    let full = RestoredGraph::full(case);
    let full_idx = full.index();
    let full_comp = full_idx.components();
    let mut denominator = 0u64;
    for gen in case.generators() {
        for load in case.loads() {
            if full_comp[full_idx.pos[&gen.bus]] == full_comp[full_idx.pos[&load.bus]] {
                denominator += 1;
            }
        }
    }
    if denominator == 0 {
        return 0.0;
    }
    let idx = g.index();
    let comp = idx.components();
    let comp_of = |b: BusId| idx.pos.get(&b).map(|&i| comp[i]);
    let mut numerator = 0u64;
    for gid in online_gens {
        let Some(gc) = case.generator(*gid).and_then(|gen| comp_of(gen.bus)) else {
            continue;
        };
        numerator += online_loads
            .iter()
            .filter(|&&l| comp_of(l) == Some(gc))
            .count() as u64;
    }
    numerator as f64 / denominator as f64
}

/// Average edge connectivity over ordered pairs of restored nodes,
/// normalized by `N(N-1)` for the initial grid's node count `N`.
pub fn redundancy_index(g: &RestoredGraph, total_nodes: usize) -> f64 {
    if total_nodes < 2 {
        return 0.0;
    }
    let idx = g.index();
    let comp = idx.components();
    let n = g.nodes.len();
    let mut sum = 0u64;
    for a in 0..n {
        for b in a + 1..n {
            if comp[a] == comp[b] {
                sum += max_flow_unit(&idx.adj, g.edges.len(), a, b) as u64;
            }
        }
    }
    (2 * sum) as f64 / (total_nodes as f64 * (total_nodes as f64 - 1.0))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReconnectionPlan {
    /// Lines to energize, in the order the greedy merge selected them.
    pub lines: Vec<LineId>,
    /// False when some island cannot be reached without failed lines.
    pub reconnectable: bool,
}

impl ReconnectionPlan {
    /// Single-crew sequential energization time of the plan, minutes.
    pub fn delay_minutes(&self, case: &GridCase) -> Option<f64> {
        self.reconnectable.then(|| {
            self.lines
                .iter()
                .filter_map(|&l| case.line(l))
                .map(|l| l.restoration_minutes)
                .sum()
        })
    }
}

/// Finds de-energized, non-failed lines that reconnect every island holding
/// one of `anchors` to the island containing `root`. Islands are merged
/// greedily, nearest first by line count; each merge uses a shortest path.
pub fn reconnection_plan(
    full: &GridCase,
    failed_lines: &BTreeSet<LineId>,
    g: &RestoredGraph,
    root: BusId,
    anchors: &[BusId],
) -> ReconnectionPlan {
    let unreachable = ReconnectionPlan {
        lines: Vec::new(),
        reconnectable: false,
    };
    let n = full.buses().len();
    let Some(root) = full.bus_index(root) else {
        return unreachable;
    };

    let in_g: BTreeSet<LineId> = g.edges.iter().map(|e| e.0).collect();
    // island label per case bus; usize::MAX for buses outside g
    let idx = g.index();
    let comp = idx.components();
    let mut label = vec![usize::MAX; n];
    for (b, &i) in &idx.pos {
        if let Some(cb) = full.bus_index(*b) {
            label[cb] = comp[i];
        }
    }
    if label[root] == usize::MAX {
        return unreachable;
    }

    let mut reached = vec![false; n];
    let absorb = |reached: &mut Vec<bool>, island: usize| {
        for b in 0..n {
            if label[b] == island {
                reached[b] = true;
            }
        }
    };
    absorb(&mut reached, label[root]);

    let mut pending: BTreeSet<usize> = anchors
        .iter()
        .filter_map(|&a| full.bus_index(a))
        .filter(|&a| !reached[a])
        .collect();
    let mut plan = Vec::new();

    while !pending.is_empty() {
        // 0-1 BFS: energized lines cost nothing, de-energized intact ones cost one
        let mut dist = vec![usize::MAX; n];
        let mut via: Vec<Option<(usize, usize)>> = vec![None; n];
        let mut dq = VecDeque::new();
        for b in 0..n {
            if reached[b] {
                dist[b] = 0;
                dq.push_back(b);
            }
        }
        while let Some(u) = dq.pop_front() {
            for &li in full.incident_lines(u) {
                let line = &full.lines()[li];
                if failed_lines.contains(&line.id) {
                    continue;
                }
                let (a, b) = full.line_ends(li);
                let v = if a == u { b } else { a };
                let w = usize::from(!in_g.contains(&line.id));
                if dist[u] + w < dist[v] {
                    dist[v] = dist[u] + w;
                    via[v] = Some((u, li));
                    if w == 0 {
                        dq.push_front(v);
                    } else {
                        dq.push_back(v);
                    }
                }
            }
        }
        let Some(&target) = pending
            .iter()
            .filter(|&&a| dist[a] != usize::MAX)
            .min_by_key(|&&a| (dist[a], full.buses()[a].id))
        else {
            return unreachable;
        };
        let before = reached.clone();
        let mut v = target;
        let mut path = Vec::new();
        while let Some((u, li)) = via[v] {
            if before[v] {
                break;
            }
            reached[v] = true;
            let id = full.lines()[li].id;
            if !in_g.contains(&id) {
                path.push(id);
            }
            if label[v] != usize::MAX {
                absorb(&mut reached, label[v]);
            }
            v = u;
        }
        path.reverse();
        plan.extend(path);
        pending.retain(|&a| !reached[a]);
    }
    ReconnectionPlan {
        lines: plan,
        reconnectable: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(nodes: &[u32], edges: &[(u32, u32)]) -> RestoredGraph {
        RestoredGraph::new(
            nodes.iter().map(|&b| BusId(b)),
            edges
                .iter()
                .enumerate()
                .map(|(i, &(a, b))| (LineId(i as u32 + 1), BusId(a), BusId(b))),
        )
        .unwrap()
    }

    #[test]
    fn empty_graph_has_no_islands() {
        assert!(islands(&graph(&[], &[])).is_empty());
    }

    #[test]
    fn removed_edge_splits_path() {
        let g = graph(&[1, 2, 3], &[(1, 2)]);
        assert_eq!(
            islands(&g),
            vec![vec![BusId(1), BusId(2)], vec![BusId(3)]]
        );
    }

    #[test]
    fn dangling_edge_rejected() {
        let e = RestoredGraph::new([BusId(1)], [(LineId(1), BusId(1), BusId(2))]).unwrap_err();
        assert_eq!(e, TopologyError::DanglingEdge(LineId(1)));
    }

    #[test]
    fn path_has_unit_connectivity() {
        let g = graph(&[1, 2, 3], &[(1, 2), (2, 3)]);
        assert_eq!(edge_connectivity(&g, BusId(1), BusId(3)), Ok(1));
        assert_eq!(
            edge_connectivity(&g, BusId(2), BusId(2)),
            Err(TopologyError::IdenticalNodes(BusId(2)))
        );
    }

    #[test]
    fn triangle_and_square() {
        let t = graph(&[1, 2, 3], &[(1, 2), (2, 3), (1, 3)]);
        for (a, b) in [(1, 2), (1, 3), (2, 3)] {
            assert_eq!(edge_connectivity(&t, BusId(a), BusId(b)), Ok(2));
        }
        let sq = graph(&[1, 2, 3, 4], &[(1, 2), (2, 3), (3, 4), (4, 1)]);
        assert_eq!(edge_connectivity(&sq, BusId(1), BusId(3)), Ok(2));
        assert_eq!(redundancy_index(&t, 3), 2.0);
    }

    #[test]
    fn disconnected_pair_is_zero() {
        let g = graph(&[1, 2, 3], &[(1, 2)]);
        assert_eq!(edge_connectivity(&g, BusId(1), BusId(3)), Ok(0));
    }

    #[test]
    fn single_node_redundancy_is_zero() {
        assert_eq!(redundancy_index(&graph(&[5], &[]), 39), 0.0);
    }

    #[test]
    fn loop_raises_redundancy() {
        let tree = graph(&[1, 2, 3, 4], &[(1, 2), (2, 3), (3, 4)]);
        let looped = graph(&[1, 2, 3, 4], &[(1, 2), (2, 3), (3, 4), (4, 1)]);
        assert!(redundancy_index(&looped, 10) > redundancy_index(&tree, 10));
    }

    #[test]
    fn full_grid_connectedness_is_one() {
        let case = GridCase::ieee39();
        let g = RestoredGraph::full(&case);
        let gens: Vec<_> = case.generators().iter().map(|g| g.id).collect();
        let loads: Vec<_> = case.loads().iter().map(|l| l.bus).collect();
        assert_eq!(connectedness_index(&g, &case, &gens, &loads), 1.0);
        assert_eq!(connectedness_index(&g, &case, &[], &loads), 0.0);
    }
}
