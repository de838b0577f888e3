//! Backtracking counter against the exhaustive oracle, plus structural
//! properties of exact counts.

use proptest::prelude::*;

use tmotif::count::{brute_force_count, exact_count, exact_count_with_threads, local_count};
use tmotif::motif::{matches_instance, DeltaQuery, MotifSpec};
use tmotif::stream::{NodeId, NodeRegistry, TemporalEdge, TemporalStream};

fn build(n: usize, raw: &[(u32, u32, f64)]) -> TemporalStream {
    let edges = raw
        .iter()
        .enumerate()
        .map(|(i, &(s, d, t))| TemporalEdge::new(NodeId(s), NodeId(d), t, i as u64))
        .collect();
    TemporalStream::new(edges, NodeRegistry::numbered(n)).unwrap()
}

/// Streams over few nodes with integer-ish times so that ties and dense
/// windows are common.
fn arb_stream(max_m: usize) -> impl Strategy<Value = TemporalStream> {
    (2usize..=6).prop_flat_map(move |n| {
        let edge = (0..n as u32, 0..n as u32 - 1, 0u32..40, prop::bool::ANY).prop_map(
            |(s, d, t, half)| {
                let d = if d >= s { d + 1 } else { d };
                (s, d, t as f64 + if half { 0.5 } else { 0.0 })
            },
        );
        prop::collection::vec(edge, 0..=max_m).prop_map(move |raw| build(n, &raw))
    })
}

fn arb_motif() -> impl Strategy<Value = MotifSpec> {
    (2usize..=4, 1usize..=3)
        .prop_flat_map(|(k, l)| {
            let e = (0..k, 0..k - 1).prop_map(|(u, v)| (u, if v >= u { v + 1 } else { v }));
            (Just(k), prop::collection::vec(e, l))
        })
        .prop_filter_map("motif must be valid", |(k, edges)| MotifSpec::new(k, edges, None).ok())
}

fn arb_delta() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.5), Just(1.0), Just(2.0), 0.1f64..15.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn backtracking_matches_oracle(s in arb_stream(60), motif in arb_motif(), delta in arb_delta()) {
        let q = DeltaQuery::new(motif, delta).unwrap();
        let fast = exact_count(&s, &q).unwrap();
        let slow = brute_force_count(&s, &q);
        prop_assert_eq!(fast.total, slow.total);
        prop_assert_eq!(&fast.eta, &slow.eta);
        let l = q.motif.l() as u64;
        prop_assert_eq!(fast.eta.iter().sum::<u64>(), l * fast.total);
    }

    #[test]
    fn monotone_in_delta(s in arb_stream(50), motif in arb_motif(), d1 in 0.1f64..10.0, extra in 0.0f64..10.0) {
        let a = exact_count(&s, &DeltaQuery::new(motif.clone(), d1).unwrap()).unwrap();
        let b = exact_count(&s, &DeltaQuery::new(motif, d1 + extra).unwrap()).unwrap();
        prop_assert!(a.total <= b.total);
    }

    #[test]
    fn relabeling_invariance(s in arb_stream(50), motif in arb_motif(), delta in arb_delta(), shift in 1u32..5) {
        let n = s.node_count() as u32;
        let relabeled: Vec<(u32, u32, f64)> = s
            .edges()
            .iter()
            .map(|e| ((e.src.0 + shift) % n, (e.dst.0 + shift) % n, e.time))
            .collect();
        // seq order is preserved because edges are rebuilt in stream order
        let t = build(n as usize, &relabeled);
        let q = DeltaQuery::new(motif, delta).unwrap();
        prop_assert_eq!(exact_count(&s, &q).unwrap().eta, exact_count(&t, &q).unwrap().eta);
    }

    #[test]
    fn appending_never_decreases(s in arb_stream(50), motif in arb_motif(), delta in arb_delta(), cut in 0usize..50) {
        let q = DeltaQuery::new(motif, delta).unwrap();
        let cut = cut.min(s.len());
        let raw: Vec<(u32, u32, f64)> = s.edges().iter().map(|e| (e.src.0, e.dst.0, e.time)).collect();
        let prefix = build(s.node_count(), &raw[..cut]);
        prop_assert!(exact_count(&prefix, &q).unwrap().total <= exact_count(&s, &q).unwrap().total);
    }

    #[test]
    fn single_edge_matches_everything(s in arb_stream(40), delta in 0.01f64..5.0) {
        let q = DeltaQuery::new(MotifSpec::single_edge(), delta).unwrap();
        for e in s.edges() {
            prop_assert!(matches_instance(&q, &[*e]));
        }
        prop_assert_eq!(exact_count(&s, &q).unwrap().total, s.len() as u64);
    }

    #[test]
    fn matching_invariant_under_relabeling(
        motif in arb_motif(),
        nodes in prop::collection::vec(0u32..5, 8),
        perm_seed in 0u32..120,
    ) {
        // Build a candidate from motif positions through an arbitrary node
        // assignment, then relabel with a permutation of 0..5.
        let l = motif.l();
        let cand: Vec<TemporalEdge> = motif
            .edges()
            .iter()
            .enumerate()
            .filter_map(|(i, &(u, v))| {
                let (s, d) = (nodes[u], nodes[v]);
                (s != d).then(|| TemporalEdge::new(NodeId(s), NodeId(d), i as f64, i as u64))
            })
            .collect();
        prop_assume!(cand.len() == l);
        let mut perm: Vec<u32> = (0..5).collect();
        let mut x = perm_seed;
        for i in (1..5).rev() {
            perm.swap(i, (x % (i as u32 + 1)) as usize);
            x /= i as u32 + 1;
        }
        let relabeled: Vec<TemporalEdge> = cand
            .iter()
            .map(|e| TemporalEdge::new(NodeId(perm[e.src.index()]), NodeId(perm[e.dst.index()]), e.time, e.seq))
            .collect();
        let q = DeltaQuery::new(motif, 100.0).unwrap();
        prop_assert_eq!(matches_instance(&q, &cand), matches_instance(&q, &relabeled));
    }
}

#[test]
fn worker_count_does_not_change_profiles() {
    let raw: Vec<(u32, u32, f64)> = (0..400u32)
        .map(|i| {
            let s = (i * 7) % 5;
            let d = (s + 1 + (i * 3) % 4) % 5;
            (s, d, (i / 3) as f64 * 0.25)
        })
        .collect();
    let s = build(5, &raw);
    let q = DeltaQuery::new(MotifSpec::cyclic_triangle(), 3.0).unwrap();
    let one = exact_count_with_threads(&s, &q, 1).unwrap();
    assert!(one.total > 0);
    for threads in [2, 3, 8] {
        assert_eq!(exact_count_with_threads(&s, &q, threads).unwrap(), one);
    }
    for i in (0..s.len()).step_by(37) {
        assert_eq!(local_count(&s, &q, i), one.eta[i]);
    }
}
