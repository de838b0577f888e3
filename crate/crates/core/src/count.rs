//! Exact motif counting.
//!
//! [`MotifCounter`] computes the local count η(eᵢ) of every stream edge by
//! chronological backtracking: the anchor edge is pinned to each motif
//! position in turn, later positions are filled forward in stream order and
//! earlier positions backward, extending a partial node map one edge at a
//! time. The global count is Σηᵢ / l, since each instance is seen once from
//! each of its `l` edges.
//!
//! [`brute_force_count`] is an independent oracle that enumerates every
//! windowed `l`-subset and tests it with [`matches_instance`].

use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::motif::{matches_instance, DeltaQuery};
use crate::stream::{NodeId, TemporalEdge, TemporalStream};

/// Per-edge local counts and the global motif count for one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCountProfile {
    /// η(eᵢ), aligned with the stream's edge order.
    pub eta: Vec<u64>,
    /// C(H, T).
    pub total: u64,
    pub query: DeltaQuery,
}

impl LocalCountProfile {
    /// Builds a profile from local counts, checking Ση = l·C.
    pub fn from_eta(eta: Vec<u64>, query: DeltaQuery) -> Result<Self> {
        let l = query.motif.l() as u64;
        let mut sum: u64 = 0;
        for &x in &eta {
            sum = sum
                .checked_add(x)
                .ok_or_else(|| Error::Invariant("local count sum overflows u64".into()))?;
        }
        if !sum.is_multiple_of(l) {
            return Err(Error::Invariant(format!(
                "local counts sum to {sum}, not divisible by l={l}"
            )));
        }
        Ok(Self {
            eta,
            total: sum / l,
            query,
        })
    }

    pub fn l(&self) -> usize {
        self.query.motif.l()
    }

    pub fn m(&self) -> usize {
        self.eta.len()
    }

    /// Σ ηᵢ^power, accumulated exactly.
    pub fn power_sum(&self, power: u32) -> u128 {
        self.eta.iter().map(|&x| (x as u128).pow(power)).sum()
    }

    pub fn max_eta(&self) -> u64 {
        self.eta.iter().copied().max().unwrap_or(0)
    }

    /// Writes `index,src,dst,time,eta` rows for every stream edge.
    pub fn write_eta_csv<W: Write>(&self, stream: &TemporalStream, out: W) -> Result<()> {
        if stream.len() != self.eta.len() {
            return Err(Error::arg("profile does not belong to this stream"));
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["index", "src", "dst", "time", "eta"])?;
        for (i, (e, eta)) in stream.edges().iter().zip(&self.eta).enumerate() {
            w.write_record([
                i.to_string(),
                stream.nodes().label(e.src).to_owned(),
                stream.nodes().label(e.dst).to_owned(),
                e.time.to_string(),
                eta.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Stream indexed for repeated local-count queries.
pub struct MotifCounter<'a> {
    edges: &'a [TemporalEdge],
    query: &'a DeltaQuery,
    out_edges: Vec<Vec<u32>>,
    in_edges: Vec<Vec<u32>>,
}

impl<'a> MotifCounter<'a> {
    pub fn new(stream: &'a TemporalStream, query: &'a DeltaQuery) -> Self {
        let n = stream.node_count();
        let mut out_edges = vec![Vec::new(); n];
        let mut in_edges = vec![Vec::new(); n];
        for (i, e) in stream.edges().iter().enumerate() {
            out_edges[e.src.index()].push(i as u32);
            in_edges[e.dst.index()].push(i as u32);
        }
        Self {
            edges: stream.edges(),
            query,
            out_edges,
            in_edges,
        }
    }

    /// η(e_anchor): the number of δ-instances containing edge `anchor`.
    pub fn local_count(&self, anchor: usize) -> u64 {
        assert!(anchor < self.edges.len(), "anchor index out of range");
        let l = self.query.motif.l();
        let mut total = 0;
        for pos in 0..l {
            let mut search = Search::new(self, anchor, pos);
            let (u, v) = self.query.motif.edges()[pos];
            let e = self.edges[anchor];
            if search.map.bind(u, e.src).is_some() && search.map.bind(v, e.dst).is_some() {
                total += search.forward(pos + 1);
            }
        }
        total
    }

    /// Local counts of every edge on the current rayon pool.
    pub fn all_local_counts(&self) -> Vec<u64> {
        (0..self.edges.len())
            .into_par_iter()
            .map(|i| self.local_count(i))
            .collect()
    }
}

/// Partial map from motif nodes to stream nodes, injective at every step.
#[derive(Debug, Clone)]
struct NodeMap {
    slots: Vec<Option<NodeId>>,
}

impl NodeMap {
    fn new(k: usize) -> Self {
        Self {
            slots: vec![None; k],
        }
    }

    /// Binds `motif` to `node`. Returns `Some(true)` for a fresh binding,
    /// `Some(false)` if it was already bound identically, `None` on conflict.
    fn bind(&mut self, motif: usize, node: NodeId) -> Option<bool> {
        match self.slots[motif] {
            Some(bound) if bound == node => Some(false),
            Some(_) => None,
            None if self.slots.contains(&Some(node)) => None,
            None => {
                self.slots[motif] = Some(node);
                Some(true)
            }
        }
    }

    fn get(&self, motif: usize) -> Option<NodeId> {
        self.slots[motif]
    }

    fn unbind(&mut self, motif: usize) {
        self.slots[motif] = None;
    }
}

enum Candidates<'c> {
    Indexed(&'c [u32]),
    All,
}

struct Search<'c, 'a> {
    counter: &'c MotifCounter<'a>,
    map: NodeMap,
    chosen: Vec<usize>,
    anchor_pos: usize,
}

impl<'c, 'a> Search<'c, 'a> {
    fn new(counter: &'c MotifCounter<'a>, anchor: usize, anchor_pos: usize) -> Self {
        let mut chosen = vec![usize::MAX; counter.query.motif.l()];
        chosen[anchor_pos] = anchor;
        Self {
            counter,
            map: NodeMap::new(counter.query.motif.k()),
            chosen,
            anchor_pos,
        }
    }

    fn candidates(&self, pos: usize) -> Candidates<'c> {
        let (u, v) = self.counter.query.motif.edges()[pos];
        let out = self.map.get(u).map(|s| &self.counter.out_edges[s.index()][..]);
        let inc = self.map.get(v).map(|d| &self.counter.in_edges[d.index()][..]);
        match (out, inc) {
            (Some(a), Some(b)) => Candidates::Indexed(if a.len() <= b.len() { a } else { b }),
            (Some(a), None) | (None, Some(a)) => Candidates::Indexed(a),
            (None, None) => Candidates::All,
        }
    }

    /// Tries edge `idx` at motif position `pos`, recursing via `next`.
    fn try_place(&mut self, pos: usize, idx: usize, next: impl FnOnce(&mut Self) -> u64) -> u64 {
        let (u, v) = self.counter.query.motif.edges()[pos];
        let e = self.counter.edges[idx];
        let Some(new_u) = self.map.bind(u, e.src) else {
            return 0;
        };
        let Some(new_v) = self.map.bind(v, e.dst) else {
            if new_u {
                self.map.unbind(u);
            }
            return 0;
        };
        self.chosen[pos] = idx;
        let found = next(self);
        if new_v {
            self.map.unbind(v);
        }
        if new_u {
            self.map.unbind(u);
        }
        found
    }

    /// Fills positions after the anchor, in increasing stream order.
    fn forward(&mut self, pos: usize) -> u64 {
        let l = self.chosen.len();
        if pos == l {
            let t_last = self.counter.edges[self.chosen[l - 1]].time;
            return self.backward(self.anchor_pos, t_last);
        }
        let edges = self.counter.edges;
        let prev = self.chosen[pos - 1];
        // The first edge is no later than the anchor, so every later edge
        // must fall strictly before t_anchor + δ.
        let limit = edges[self.chosen[self.anchor_pos]].time + self.counter.query.delta;
        let mut found = 0;
        match self.candidates(pos) {
            Candidates::Indexed(list) => {
                let start = list.partition_point(|&x| x as usize <= prev);
                for &idx in &list[start..] {
                    let idx = idx as usize;
                    if edges[idx].time >= limit {
                        break;
                    }
                    found += self.try_place(pos, idx, |s| s.forward(pos + 1));
                }
            }
            Candidates::All => {
                for (idx, e) in edges.iter().enumerate().skip(prev + 1) {
                    if e.time >= limit {
                        break;
                    }
                    found += self.try_place(pos, idx, |s| s.forward(pos + 1));
                }
            }
        }
        found
    }

    /// Fills positions before the anchor (`pos` exclusive), in decreasing
    /// stream order, keeping every edge strictly after `t_last - δ`.
    fn backward(&mut self, pos: usize, t_last: f64) -> u64 {
        if pos == 0 {
            return 1;
        }
        let pos = pos - 1;
        let edges = self.counter.edges;
        let next = self.chosen[pos + 1];
        let floor = t_last - self.counter.query.delta;
        let mut found = 0;
        match self.candidates(pos) {
            Candidates::Indexed(list) => {
                let end = list.partition_point(|&x| (x as usize) < next);
                for &idx in list[..end].iter().rev() {
                    let idx = idx as usize;
                    if edges[idx].time <= floor {
                        break;
                    }
                    found += self.try_place(pos, idx, |s| s.backward(pos, t_last));
                }
            }
            Candidates::All => {
                for idx in (0..next).rev() {
                    if edges[idx].time <= floor {
                        break;
                    }
                    found += self.try_place(pos, idx, |s| s.backward(pos, t_last));
                }
            }
        }
        found
    }
}

/// η(eᵢ) for a single anchor edge.
pub fn local_count(stream: &TemporalStream, query: &DeltaQuery, anchor: usize) -> u64 {
    MotifCounter::new(stream, query).local_count(anchor)
}

/// Exact local counts and global count, parallel over anchors on the current
/// rayon pool. The result does not depend on the worker count.
pub fn exact_count(stream: &TemporalStream, query: &DeltaQuery) -> Result<LocalCountProfile> {
    let eta = MotifCounter::new(stream, query).all_local_counts();
    LocalCountProfile::from_eta(eta, query.clone())
}

/// [`exact_count`] on a dedicated pool of `threads` workers.
pub fn exact_count_with_threads(
    stream: &TemporalStream,
    query: &DeltaQuery,
    threads: usize,
) -> Result<LocalCountProfile> {
    crate::parallel::pool(threads)?.install(|| exact_count(stream, query))
}

/// Exhaustive count over every `l`-subset of edges whose span is below δ.
/// Intended for small streams.
pub fn brute_force_count(stream: &TemporalStream, query: &DeltaQuery) -> LocalCountProfile {
    let edges = stream.edges();
    let l = query.motif.l();
    let mut eta = vec![0u64; edges.len()];
    let mut total = 0u64;
    let mut picked: Vec<usize> = Vec::with_capacity(l);
    let mut cand: Vec<TemporalEdge> = Vec::with_capacity(l);

    fn extend(
        edges: &[TemporalEdge],
        query: &DeltaQuery,
        end: usize,
        picked: &mut Vec<usize>,
        cand: &mut Vec<TemporalEdge>,
        eta: &mut [u64],
        total: &mut u64,
    ) {
        let l = query.motif.l();
        if picked.len() == l {
            cand.clear();
            cand.extend(picked.iter().map(|&i| edges[i]));
            if matches_instance(query, cand) {
                *total += 1;
                for &i in picked.iter() {
                    eta[i] += 1;
                }
            }
            return;
        }
        let from = picked.last().map_or(0, |&i| i + 1);
        for i in from..end {
            picked.push(i);
            extend(edges, query, end, picked, cand, eta, total);
            picked.pop();
        }
    }

    for first in 0..edges.len() {
        let t0 = edges[first].time;
        let end = first + edges[first..].partition_point(|e| e.time - t0 < query.delta);
        picked.clear();
        picked.push(first);
        extend(edges, query, end, &mut picked, &mut cand, &mut eta, &mut total);
    }
    LocalCountProfile {
        eta,
        total,
        query: query.clone(),
    }
}
