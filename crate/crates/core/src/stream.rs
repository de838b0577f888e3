//! Temporal graph types and edge-list ingestion.
//!
//! A [`TemporalStream`] is an immutable, time-ordered sequence of directed
//! edges. Edges are ordered by `(time, seq)`, where `seq` is the ingestion
//! ordinal, so the order stays strict even when timestamps tie.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use log::warn;

use crate::error::{Error, Result};

/// Dense node index assigned at ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Bijection between external node labels and dense [`NodeId`]s.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NodeRegistry {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl NodeRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registry with labels `"0"`, `"1"`, ... `"n-1"`.
    pub fn numbered(n: usize) -> Self {
        let mut reg = Self::new();
        for i in 0..n {
            reg.intern(&i.to_string());
        }
        reg
    }

    /// Returns the id for `label`, assigning the next free index on first sight.
    pub fn intern(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = NodeId(self.labels.len() as u32);
        self.labels.push(label.to_owned());
        self.index.insert(label.to_owned(), id);
        id
    }

    pub fn get(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id.index()]
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// A directed, timestamped edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TemporalEdge {
    pub src: NodeId,
    pub dst: NodeId,
    pub time: f64,
    pub seq: u64,
}

impl TemporalEdge {
    pub fn new(src: NodeId, dst: NodeId, time: f64, seq: u64) -> Self {
        Self {
            src,
            dst,
            time,
            seq,
        }
    }

    /// The stream's strict total order.
    #[inline]
    pub fn order(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.seq.cmp(&other.seq))
    }
}

/// Immutable time-ordered edge stream with its node registry.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalStream {
    edges: Vec<TemporalEdge>,
    nodes: NodeRegistry,
}

impl TemporalStream {
    /// Builds a stream from edges in any order. Edges are sorted by
    /// `(time, seq)`; self-loops, non-finite times, duplicate `seq` values and
    /// node ids outside the registry are rejected.
    pub fn new(mut edges: Vec<TemporalEdge>, nodes: NodeRegistry) -> Result<Self> {
        for e in &edges {
            if e.src == e.dst {
                return Err(Error::arg(format!("self-loop on node {}", e.src)));
            }
            if !e.time.is_finite() {
                return Err(Error::arg(format!("non-finite timestamp {}", e.time)));
            }
            if e.src.index() >= nodes.len() || e.dst.index() >= nodes.len() {
                return Err(Error::arg("edge references an unregistered node"));
            }
        }
        let mut seqs: Vec<u64> = edges.iter().map(|e| e.seq).collect();
        seqs.sort_unstable();
        if seqs.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::arg("duplicate edge sequence number"));
        }
        edges.sort_by(|a, b| a.order(b));
        Ok(Self { edges, nodes })
    }

    pub fn empty() -> Self {
        Self {
            edges: Vec::new(),
            nodes: NodeRegistry::new(),
        }
    }

    pub fn edges(&self) -> &[TemporalEdge] {
        &self.edges
    }

    pub fn nodes(&self) -> &NodeRegistry {
        &self.nodes
    }

    /// Number of edges `m`.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Contiguous view of the edges with `t_lo <= time <= t_hi`.
    pub fn slice(&self, t_lo: f64, t_hi: f64) -> StreamSlice<'_> {
        debug_assert!(t_lo <= t_hi, "slice bounds reversed");
        let start = self.edges.partition_point(|e| e.time < t_lo);
        let end = self.edges.partition_point(|e| e.time <= t_hi).max(start);
        StreamSlice {
            offset: start,
            edges: &self.edges[start..end],
        }
    }

    /// Writes the stream in the `SRC DST TIME` edge-list format.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<()> {
        for e in &self.edges {
            writeln!(
                out,
                "{} {} {}",
                self.nodes.label(e.src),
                self.nodes.label(e.dst),
                e.time
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

/// A borrowed window of a [`TemporalStream`].
#[derive(Debug, Clone, Copy)]
pub struct StreamSlice<'a> {
    /// Index of the first edge of the view in the parent stream.
    pub offset: usize,
    pub edges: &'a [TemporalEdge],
}

impl StreamSlice<'_> {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }
}

/// Result of parsing an edge-list file.
#[derive(Debug, Clone)]
pub struct ParsedStream {
    pub stream: TemporalStream,
    pub dropped_self_loops: usize,
}

/// Parses a whitespace-separated `SRC DST TIME` edge list.
///
/// Lines starting with `#` or `%` and blank lines are skipped, trailing fields
/// are ignored. Timestamps are multiplied by `time_unit` when given. Self-loop
/// lines are dropped and counted.
pub fn parse_stream(path: impl AsRef<Path>, time_unit: Option<f64>) -> Result<ParsedStream> {
    let path = path.as_ref();
    let file = File::open(path)?;
    parse_reader(BufReader::new(file), path, time_unit)
}

pub fn parse_reader<R: BufRead>(
    reader: R,
    origin: &Path,
    time_unit: Option<f64>,
) -> Result<ParsedStream> {
    let scale = time_unit.unwrap_or(1.0);
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::arg(format!("time unit must be positive, got {scale}")));
    }
    let parse_err = |line: usize, reason: String| Error::Parse {
        path: PathBuf::from(origin),
        line,
        reason,
    };

    let mut nodes = NodeRegistry::new();
    let mut edges = Vec::new();
    let mut dropped = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = lineno + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') || trimmed.starts_with('%') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(src), Some(dst), Some(time)) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(parse_err(lineno, "expected at least 3 fields".into()));
        };
        let time: f64 = time
            .parse()
            .map_err(|_| parse_err(lineno, format!("non-numeric timestamp {time:?}")))?;
        if !time.is_finite() {
            return Err(parse_err(lineno, format!("non-finite timestamp {time}")));
        }
        let src = nodes.intern(src);
        let dst = nodes.intern(dst);
        if src == dst {
            dropped += 1;
            continue;
        }
        let seq = edges.len() as u64;
        edges.push(TemporalEdge::new(src, dst, time * scale, seq));
    }
    if dropped > 0 {
        warn!("{}: dropped {} self-loop line(s)", origin.display(), dropped);
    }
    Ok(ParsedStream {
        stream: TemporalStream::new(edges, nodes)?,
        dropped_self_loops: dropped,
    })
}
