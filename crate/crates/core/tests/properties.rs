use std::collections::BTreeSet;

use netrestore::case::{parse_case, serialize_case, BusId, GridCase, LineId};
use netrestore::optimizer::{argsort, genome_permutation};
use netrestore::sim::{decode, simulate, EventKind, SimConfig};
use netrestore::topology::{edge_connectivity, islands, redundancy_index, RestoredGraph};
use proptest::prelude::*;

fn graph_strategy() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..=7).prop_flat_map(|n| {
        let edge = (0..n, 1..n).prop_map(move |(a, d)| (a, (a + d) % n));
        (Just(n), prop::collection::vec(edge, 0..=10))
    })
}

fn build(n: usize, edges: &[(usize, usize)], label: impl Fn(usize) -> u32) -> RestoredGraph {
    RestoredGraph::new(
        (0..n).map(|b| BusId(label(b))),
        edges
            .iter()
            .enumerate()
            .map(|(i, &(a, b))| (LineId(i as u32 + 1), BusId(label(a)), BusId(label(b)))),
    )
    .unwrap()
}

/// A pair is never better connected than its lower-degree end.
fn degree(edges: &[(usize, usize)], v: usize) -> u32 {
    edges.iter().filter(|&&(a, b)| a == v || b == v).count() as u32
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn connectivity_symmetric_and_bounded((n, edges) in graph_strategy()) {
        let g = build(n, &edges, |b| b as u32 + 1);
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (BusId(i as u32 + 1), BusId(j as u32 + 1));
                let k = edge_connectivity(&g, a, b).unwrap();
                prop_assert_eq!(k, edge_connectivity(&g, b, a).unwrap());
                prop_assert!(k <= degree(&edges, i).min(degree(&edges, j)));
            }
        }
    }

    #[test]
    fn adding_an_edge_never_lowers_connectivity((n, edges) in graph_strategy(), extra in (0usize..7, 1usize..7)) {
        let (a, d) = (extra.0 % n, extra.1 % n);
        prop_assume!(d != 0);
        let mut more = edges.clone();
        more.push((a, (a + d) % n));
        let g = build(n, &edges, |b| b as u32 + 1);
        let h = build(n, &more, |b| b as u32 + 1);
        for i in 0..n {
            for j in i + 1..n {
                let (x, y) = (BusId(i as u32 + 1), BusId(j as u32 + 1));
                prop_assert!(edge_connectivity(&h, x, y).unwrap() >= edge_connectivity(&g, x, y).unwrap());
            }
        }
        prop_assert!(redundancy_index(&h, n) >= redundancy_index(&g, n));
    }

    #[test]
    fn islands_partition_the_nodes((n, edges) in graph_strategy()) {
        let g = build(n, &edges, |b| b as u32 + 1);
        let parts = islands(&g);
        let mut all: Vec<BusId> = parts.iter().flatten().copied().collect();
        let total = all.len();
        all.sort();
        all.dedup();
        prop_assert_eq!(total, n);
        prop_assert_eq!(all.len(), n);
        let island_of = |b: BusId| parts.iter().position(|p| p.contains(&b)).unwrap();
        for &(a, b) in &edges {
            prop_assert_eq!(island_of(BusId(a as u32 + 1)), island_of(BusId(b as u32 + 1)));
        }
    }

    #[test]
    fn relabelling_preserves_connectivity((n, edges) in graph_strategy(), shift in 1u32..50) {
        let g = build(n, &edges, |b| b as u32 + 1);
        // reverse the order and offset the ids
        let relabel = |b: usize| (n - b) as u32 * 3 + shift;
        let h = build(n, &edges, relabel);
        for i in 0..n {
            for j in i + 1..n {
                prop_assert_eq!(
                    edge_connectivity(&g, BusId(i as u32 + 1), BusId(j as u32 + 1)).unwrap(),
                    edge_connectivity(&h, BusId(relabel(i)), BusId(relabel(j))).unwrap()
                );
            }
        }
        prop_assert!((redundancy_index(&g, n) - redundancy_index(&h, n)).abs() < 1e-12);
    }

    #[test]
    fn argsort_is_a_stable_permutation(keys in prop::collection::vec(prop::sample::select(vec![0.0, 0.25, 0.5, 0.75, 1.0]), 0..40)) {
        let idx = argsort(&keys);
        let set: BTreeSet<usize> = idx.iter().copied().collect();
        prop_assert_eq!(set.len(), keys.len());
        for w in idx.windows(2) {
            prop_assert!(keys[w[0]] < keys[w[1]] || (keys[w[0]] == keys[w[1]] && w[0] < w[1]));
        }
    }

    #[test]
    fn genome_decoding_ignores_monotone_rescaling(genome in prop::collection::vec(0.0f64..1.0, 46)) {
        let case = GridCase::ieee39();
        let scaled: Vec<f64> = genome.iter().map(|x| 3.0 * x + 7.0).collect();
        let a = genome_permutation(&genome, &case);
        prop_assert_eq!(&a, &genome_permutation(&scaled, &case));
        let seq = decode(&a, &case);
        let distinct: BTreeSet<LineId> = seq.iter().copied().collect();
        prop_assert_eq!(distinct.len(), seq.len());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn load_only_drops_with_a_shed_event(genome in prop::collection::vec(0.0f64..1.0, 46)) {
        let case = GridCase::ieee39();
        let tr = simulate(&case, &genome_permutation(&genome, &case), &SimConfig::default());
        for w in tr.steps.windows(2) {
            let shed = tr.events_at(w[1].time_min).any(|e| e.kind == EventKind::LoadShed);
            prop_assert!(
                shed || w[1].total_load() >= w[0].total_load() - 1e-6,
                "load fell from {} to {} at {} min without a shed event",
                w[0].total_load(), w[1].total_load(), w[1].time_min
            );
            prop_assert!(w[1].time_min > w[0].time_min);
        }
    }
}

#[test]
fn case_text_round_trips() {
    let case = GridCase::ieee39();
    let again = parse_case(&serialize_case(&case)).unwrap();
    assert_eq!(case, again);
    assert_eq!(serialize_case(&again), serialize_case(&case));
}
