//! Motif templates and the δ-instance predicate.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stream::{NodeId, TemporalEdge};

/// Motif description as it appears in a JSON motif file, before validation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct RawMotif {
    #[serde(default)]
    pub name: Option<String>,
    pub k: usize,
    pub edges: Vec<[usize; 2]>,
}

/// A validated temporal motif: `l` ordered directed edges over `k` abstract
/// nodes. Edge position is temporal order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MotifSpec {
    name: Option<String>,
    k: usize,
    edges: Vec<(usize, usize)>,
}

impl MotifSpec {
    pub fn new(k: usize, edges: Vec<(usize, usize)>, name: Option<String>) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidMotif(msg));
        if k < 2 {
            return bad(format!("k must be at least 2, got {k}"));
        }
        if edges.is_empty() {
            return bad("motif has no edges".into());
        }
        for (pos, &(u, v)) in edges.iter().enumerate() {
            if u >= k || v >= k {
                return bad(format!("edge {pos} ({u},{v}) references a node >= k={k}"));
            }
            if u == v {
                return bad(format!("edge {pos} is a self-loop on node {u}"));
            }
        }

        // Connectivity of the undirected static multigraph, which also checks
        // that every node in 0..k is used.
        let mut parent: Vec<usize> = (0..k).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(u, v) in &edges {
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            parent[ru] = rv;
        }
        let root = find(&mut parent, 0);
        if (1..k).any(|x| find(&mut parent, x) != root) {
            return bad("induced static graph is disconnected or has unused nodes".into());
        }
        Ok(Self { name, k, edges })
    }

    pub fn from_raw(raw: RawMotif) -> Result<Self> {
        let edges = raw.edges.into_iter().map(|[u, v]| (u, v)).collect();
        Self::new(raw.k, edges, raw.name)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_raw(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }

    pub fn to_raw(&self) -> RawMotif {
        RawMotif {
            name: self.name.clone(),
            k: self.k,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }

    /// The directed cyclic triangle `0→1, 1→2, 2→0`.
    pub fn cyclic_triangle() -> Self {
        Self::new(3, vec![(0, 1), (1, 2), (2, 0)], Some("cyclic-triangle".into())).unwrap()
    }

    /// A single directed edge; every stream edge is an instance.
    pub fn single_edge() -> Self {
        Self::new(2, vec![(0, 1)], Some("single-edge".into())).unwrap()
    }

    /// Looks up a motif shipped with the library by name.
    pub fn builtin(name: &str) -> Option<Self> {
        match name {
            "cyclic-triangle" | "triangle" => Some(Self::cyclic_triangle()),
            "single-edge" | "edge" => Some(Self::single_edge()),
            _ => None,
        }
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    /// Node count.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Edge count.
    pub fn l(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
}

/// A motif together with its duration bound δ.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaQuery {
    pub motif: MotifSpec,
    pub delta: f64,
}

impl DeltaQuery {
    pub fn new(motif: MotifSpec, delta: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::arg(format!("delta must be positive and finite, got {delta}")));
        }
        Ok(Self { motif, delta })
    }
}

/// Whether `candidate` (time-ordered, exactly `l` edges) is a δ-instance of the
/// query motif: the edge-by-edge node map must be well defined and injective,
/// and the time span must be strictly less than δ.
///
/// Panics if `candidate.len() != l`.
pub fn matches_instance(query: &DeltaQuery, candidate: &[TemporalEdge]) -> bool {
    let pattern = query.motif.edges();
    assert_eq!(
        candidate.len(),
        pattern.len(),
        "candidate length must equal motif edge count"
    );
    let span = candidate[candidate.len() - 1].time - candidate[0].time;
    if !(span < query.delta) {
        return false;
    }

    let mut forward: HashMap<NodeId, usize> = HashMap::new();
    let mut backward: HashMap<usize, NodeId> = HashMap::new();
    let mut bind = |s: NodeId, m: usize| -> bool {
        match (forward.get(&s), backward.get(&m)) {
            (Some(&fm), Some(&bs)) => fm == m && bs == s,
            (None, None) => {
                forward.insert(s, m);
                backward.insert(m, s);
                true
            }
            _ => false,
        }
    };
    candidate
        .iter()
        .zip(pattern)
        .all(|(e, &(u, v))| bind(e.src, u) && bind(e.dst, v))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(src: u32, dst: u32, time: f64) -> TemporalEdge {
        TemporalEdge::new(NodeId(src), NodeId(dst), time, time as u64)
    }

    #[test]
    fn validation() {
        assert!(MotifSpec::new(2, vec![(0, 1)], None).is_ok());
        assert!(MotifSpec::new(4, vec![(0, 1), (2, 3)], None).is_err());
        let tri = MotifSpec::new(3, vec![(0, 1), (1, 2), (2, 0)], None).unwrap();
        assert_eq!(tri.l(), 3);
        assert!(MotifSpec::new(2, vec![(0, 0)], None).is_err());
        assert!(MotifSpec::new(2, vec![(0, 2)], None).is_err());
        assert!(MotifSpec::new(2, vec![], None).is_err());
        assert!(MotifSpec::new(1, vec![(0, 0)], None).is_err());
        // node 2 unused
        assert!(MotifSpec::new(3, vec![(0, 1)], None).is_err());
        // multi-edge motifs are fine
        assert!(MotifSpec::new(2, vec![(0, 1), (0, 1), (1, 0)], None).is_ok());
    }

    #[test]
    fn json_roundtrip() {
        let m = MotifSpec::from_json(r#"{"name":"t","k":3,"edges":[[0,1],[1,2],[2,0]]}"#).unwrap();
        assert_eq!(m, MotifSpec::new(3, vec![(0, 1), (1, 2), (2, 0)], Some("t".into())).unwrap());
        assert_eq!(MotifSpec::from_raw(m.to_raw()).unwrap(), m);
        assert!(MotifSpec::from_json(r#"{"k":4,"edges":[[0,1],[2,3]]}"#).is_err());
    }

    #[test]
    fn delta_must_be_positive() {
        assert!(DeltaQuery::new(MotifSpec::single_edge(), 0.0).is_err());
        assert!(DeltaQuery::new(MotifSpec::single_edge(), f64::NAN).is_err());
    }

    #[test]
    fn cyclic_triangle_instances() {
        let q3 = DeltaQuery::new(MotifSpec::cyclic_triangle(), 3.0).unwrap();
        let cand = [e(0, 1, 1.0), e(1, 2, 2.0), e(2, 0, 3.0)];
        assert!(matches_instance(&q3, &cand));

        let q2 = DeltaQuery::new(MotifSpec::cyclic_triangle(), 2.0).unwrap();
        assert!(!matches_instance(&q2, &cand));

        let wrong_dir = [e(0, 1, 1.0), e(1, 2, 2.0), e(0, 2, 3.0)];
        assert!(!matches_instance(&q3, &wrong_dir));
    }

    #[test]
    fn injectivity_required() {
        // a→b, b→a cannot be a 3-node path 0→1, 1→2
        let q = DeltaQuery::new(MotifSpec::new(3, vec![(0, 1), (1, 2)], None).unwrap(), 10.0)
            .unwrap();
        assert!(!matches_instance(&q, &[e(0, 1, 1.0), e(1, 0, 2.0)]));
        assert!(matches_instance(&q, &[e(0, 1, 1.0), e(1, 5, 2.0)]));
    }

    #[test]
    fn single_edge_always_matches() {
        let q = DeltaQuery::new(MotifSpec::single_edge(), 1e-9).unwrap();
        assert!(matches_instance(&q, &[e(3, 7, 100.0)]));
    }

    #[test]
    #[should_panic]
    fn wrong_length_panics() {
        let q = DeltaQuery::new(MotifSpec::cyclic_triangle(), 3.0).unwrap();
        matches_instance(&q, &[e(0, 1, 1.0)]);
    }
}
