//! Directed socket multigraph built from flow records.
//!
//! Nodes are distinct `(ip, port)` tuples, indexed in first-appearance order
//! (a row's source endpoint before its destination endpoint). Every record
//! becomes one directed edge from its source socket to its destination
//! socket; parallel edges and self-flows are kept as-is. In-neighbor
//! adjacency is stored CSR-style:
//!
//!   in_offsets[v] .. in_offsets[v+1]  →  slice of in_edge_ids
//!   in_edge_ids                       →  edge ids grouped by destination,
//!                                        insertion order within each group

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::{vec, vec::Vec};

use crate::record::FlowRecord;
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SocketKey {
    pub ip: String,
    pub port: u16,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SocketNode {
    pub key: SocketKey,
    pub index: usize,
    /// Initial node feature vector, length `F_N` (= the edge feature dim).
    pub h0: Vec<f64>,
}

/// Whether an edge counts toward training loss, evaluation, or neither.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeMask {
    Train,
    Test,
    None,
}

impl EdgeMask {
    pub fn as_str(&self) -> &'static str {
        match self {
            EdgeMask::Train => "train",
            EdgeMask::Test => "test",
            EdgeMask::None => "none",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowEdge {
    pub src: usize,
    pub dst: usize,
    pub features: Vec<f64>,
    pub label: usize,
    /// `row_index` of the originating record.
    pub record_index: usize,
    pub mask: EdgeMask,
}

/// Initial node feature rule. The convolution layers carry all signal on the
/// edges, so node features start content-free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitRule {
    Ones,
    Zeros,
    Constant(f64),
}

impl InitRule {
    fn fill(&self) -> f64 {
        match self {
            InitRule::Ones => 1.0,
            InitRule::Zeros => 0.0,
            InitRule::Constant(c) => *c,
        }
    }

    pub fn parse(s: &str) -> Option<InitRule> {
        match s {
            "ones" => Some(InitRule::Ones),
            "zeros" => Some(InitRule::Zeros),
            other => other.parse::<f64>().ok().map(InitRule::Constant),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphError {
    NodeOutOfRange { node: usize, nodes: usize },
    MixedFeatureDims { expected: usize, actual: usize, record_index: usize },
    OverlappingRecordIndex(usize),
}

impl core::fmt::Display for GraphError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GraphError::NodeOutOfRange { node, nodes } => {
                write!(f, "node {node} out of range for {nodes} nodes")
            }
            GraphError::MixedFeatureDims {
                expected,
                actual,
                record_index,
            } => write!(
                f,
                "record {record_index} has feature dim {actual}, expected {expected}"
            ),
            GraphError::OverlappingRecordIndex(i) => {
                write!(f, "record index {i} appears in both train and test")
            }
        }
    }
}

impl core::error::Error for GraphError {}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowGraph {
    pub nodes: Vec<SocketNode>,
    pub edges: Vec<FlowEdge>,
    in_offsets: Vec<usize>,
    in_edge_ids: Vec<usize>,
}

impl FlowGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Feature dimension shared by all edges (and by `h0`).
    pub fn feature_dim(&self) -> usize {
        self.edges
            .first()
            .map(|e| e.features.len())
            .or_else(|| self.nodes.first().map(|n| n.h0.len()))
            .unwrap_or(0)
    }

    /// Edge ids arriving at `node`, in insertion order.
    pub fn in_edges(&self, node: usize) -> Result<&[usize], GraphError> {
        if node >= self.nodes.len() {
            return Err(GraphError::NodeOutOfRange {
                node,
                nodes: self.nodes.len(),
            });
        }
        Ok(&self.in_edge_ids[self.in_offsets[node]..self.in_offsets[node + 1]])
    }

    /// Node feature matrix `[|V| × F_N]`.
    pub fn node_feature_matrix(&self) -> Tensor {
        let dim = self.feature_dim();
        let mut data = Vec::with_capacity(self.nodes.len() * dim);
        for n in &self.nodes {
            data.extend_from_slice(&n.h0);
        }
        Tensor::new(&[self.nodes.len(), dim], data)
    }

    /// Edge feature matrix `[|E| × F_E]`.
    pub fn edge_feature_matrix(&self) -> Tensor {
        let dim = self.feature_dim();
        let mut data = Vec::with_capacity(self.edges.len() * dim);
        for e in &self.edges {
            data.extend_from_slice(&e.features);
        }
        Tensor::new(&[self.edges.len(), dim], data)
    }

    pub fn edge_sources(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.src).collect()
    }

    pub fn edge_destinations(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.dst).collect()
    }

    pub fn edge_labels(&self) -> Vec<usize> {
        self.edges.iter().map(|e| e.label).collect()
    }

    /// Edge ids carrying `mask`.
    pub fn masked_edges(&self, mask: EdgeMask) -> Vec<usize> {
        self.edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.mask == mask)
            .map(|(i, _)| i)
            .collect()
    }

    /// Debug dump: one `node` line per socket, one `edge` line per flow.
    pub fn dump_text(&self) -> String {
        let mut out = String::new();
        for n in &self.nodes {
            out.push_str(&format!("node {} {} {}\n", n.index, n.key.ip, n.key.port));
        }
        for (id, e) in self.edges.iter().enumerate() {
            out.push_str(&format!(
                "edge {} {} {} {} {}\n",
                id,
                e.src,
                e.dst,
                e.label,
                e.mask.as_str()
            ));
        }
        out
    }
}

struct GraphBuilder {
    interner: BTreeMap<SocketKey, usize>,
    nodes: Vec<SocketNode>,
    edges: Vec<FlowEdge>,
    feature_dim: Option<usize>,
    init: InitRule,
}

impl GraphBuilder {
    fn new(init: InitRule) -> Self {
        GraphBuilder {
            interner: BTreeMap::new(),
            nodes: Vec::new(),
            edges: Vec::new(),
            feature_dim: None,
            init,
        }
    }

    fn intern(&mut self, ip: &str, port: u16, dim: usize) -> usize {
        let key = SocketKey {
            ip: String::from(ip),
            port,
        };
        if let Some(&idx) = self.interner.get(&key) {
            return idx;
        }
        let idx = self.nodes.len();
        self.nodes.push(SocketNode {
            key: key.clone(),
            index: idx,
            h0: vec![self.init.fill(); dim],
        });
        self.interner.insert(key, idx);
        idx
    }

    fn add(&mut self, record: &FlowRecord, mask: EdgeMask) -> Result<(), GraphError> {
        let dim = *self.feature_dim.get_or_insert(record.features.len());
        if record.features.len() != dim {
            return Err(GraphError::MixedFeatureDims {
                expected: dim,
                actual: record.features.len(),
                record_index: record.row_index,
            });
        }
        let src = self.intern(&record.src_ip, record.src_port, dim);
        let dst = self.intern(&record.dst_ip, record.dst_port, dim);
        self.edges.push(FlowEdge {
            src,
            dst,
            features: record.features.clone(),
            label: record.label,
            record_index: record.row_index,
            mask,
        });
        Ok(())
    }

    fn finish(self) -> FlowGraph {
        let n = self.nodes.len();
        let mut in_degree = vec![0usize; n];
        for e in &self.edges {
            in_degree[e.dst] += 1;
        }
        let mut in_offsets = vec![0usize; n + 1];
        for v in 0..n {
            in_offsets[v + 1] = in_offsets[v] + in_degree[v];
        }
        let mut cursor = in_offsets.clone();
        let mut in_edge_ids = vec![0usize; self.edges.len()];
        for (id, e) in self.edges.iter().enumerate() {
            in_edge_ids[cursor[e.dst]] = id;
            cursor[e.dst] += 1;
        }
        FlowGraph {
            nodes: self.nodes,
            edges: self.edges,
            in_offsets,
            in_edge_ids,
        }
    }
}

/// Build the socket graph over `records`, all edges unmasked.
pub fn build_graph(records: &[FlowRecord], init: InitRule) -> Result<FlowGraph, GraphError> {
    let mut b = GraphBuilder::new(init);
    for r in records {
        b.add(r, EdgeMask::None)?;
    }
    Ok(b.finish())
}

/// Single graph over train ∪ test; edges carry their origin as the mask.
/// Train records are ingested first, so shared sockets collapse to one node.
pub fn assemble_transductive(
    train: &[FlowRecord],
    test: &[FlowRecord],
    init: InitRule,
) -> Result<FlowGraph, GraphError> {
    check_disjoint(train, test)?;
    let mut b = GraphBuilder::new(init);
    for r in train {
        b.add(r, EdgeMask::Train)?;
    }
    for r in test {
        b.add(r, EdgeMask::Test)?;
    }
    Ok(b.finish())
}

/// Two independent graphs with unrelated node index spaces.
pub fn assemble_inductive(
    train: &[FlowRecord],
    test: &[FlowRecord],
    init: InitRule,
) -> Result<(FlowGraph, FlowGraph), GraphError> {
    check_disjoint(train, test)?;
    let mut tb = GraphBuilder::new(init);
    for r in train {
        tb.add(r, EdgeMask::Train)?;
    }
    let mut sb = GraphBuilder::new(init);
    for r in test {
        sb.add(r, EdgeMask::Test)?;
    }
    Ok((tb.finish(), sb.finish()))
}

fn check_disjoint(train: &[FlowRecord], test: &[FlowRecord]) -> Result<(), GraphError> {
    let mut seen: Vec<usize> = train.iter().map(|r| r.row_index).collect();
    seen.sort_unstable();
    for r in test {
        if seen.binary_search(&r.row_index).is_ok() {
            return Err(GraphError::OverlappingRecordIndex(r.row_index));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    fn record(src: (&str, u16), dst: (&str, u16), row_index: usize) -> FlowRecord {
        FlowRecord {
            src_ip: src.0.to_string(),
            src_port: src.1,
            dst_ip: dst.0.to_string(),
            dst_port: dst.1,
            features: vec![row_index as f64, 1.0],
            label: 0,
            row_index,
        }
    }

    #[test]
    fn empty_input_empty_graph() {
        let g = build_graph(&[], InitRule::Ones).unwrap();
        assert_eq!(g.node_count(), 0);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn single_record_two_nodes_one_edge() {
        let g = build_graph(
            &[record(("192.168.1.1", 80), ("10.0.0.2", 443), 0)],
            InitRule::Ones,
        )
        .unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.nodes[0].key.ip, "192.168.1.1");
        assert_eq!(g.nodes[0].key.port, 80);
        assert_eq!(g.edges[0].src, 0);
        assert_eq!(g.edges[0].dst, 1);
        assert_eq!(g.nodes[0].h0, vec![1.0, 1.0]);
    }

    #[test]
    fn parallel_edges_and_in_degree() {
        let records = [
            record(("A", 1), ("B", 2), 0),
            record(("B", 2), ("C", 3), 1),
            record(("A", 1), ("B", 2), 2),
        ];
        let g = build_graph(&records, InitRule::Ones).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 3);
        // B:2 is node 1 (dst of row 0), its in-edges are the two parallel flows
        assert_eq!(g.in_edges(1).unwrap(), &[0, 2]);
        assert_eq!(g.in_edges(0).unwrap(), &[] as &[usize]);
        let total: usize = (0..3).map(|v| g.in_edges(v).unwrap().len()).sum();
        assert_eq!(total, g.edge_count());
    }

    #[test]
    fn in_edges_rejects_out_of_range() {
        let g = build_graph(&[record(("A", 1), ("B", 2), 0)], InitRule::Ones).unwrap();
        assert!(matches!(
            g.in_edges(5),
            Err(GraphError::NodeOutOfRange { node: 5, nodes: 2 })
        ));
    }

    #[test]
    fn rebuild_is_bit_identical() {
        let records: Vec<FlowRecord> = (0..40)
            .map(|i| {
                record(
                    (["A", "B", "C"][i % 3], (i % 4) as u16),
                    (["B", "C", "D"][i % 3], (i % 5) as u16),
                    i,
                )
            })
            .collect();
        let a = build_graph(&records, InitRule::Ones).unwrap();
        let b = build_graph(&records, InitRule::Ones).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn transductive_merges_and_masks() {
        let train = [record(("A", 1), ("B", 2), 0)];
        let test = [record(("C", 3), ("D", 4), 1)];
        let g = assemble_transductive(&train, &test, InitRule::Ones).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.edges[0].mask, EdgeMask::Train);
        assert_eq!(g.edges[1].mask, EdgeMask::Test);

        // shared socket collapses to one node
        let test2 = [record(("B", 2), ("E", 5), 1)];
        let g = assemble_transductive(&train, &test2, InitRule::Ones).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edges[1].src, 1);
    }

    #[test]
    fn transductive_empty_test_matches_build_graph() {
        let train = [record(("A", 1), ("B", 2), 0), record(("B", 2), ("A", 1), 1)];
        let merged = assemble_transductive(&train, &[], InitRule::Ones).unwrap();
        let plain = build_graph(&train, InitRule::Ones).unwrap();
        assert_eq!(merged.node_count(), plain.node_count());
        assert_eq!(merged.edge_count(), plain.edge_count());
        assert!(merged.edges.iter().all(|e| e.mask == EdgeMask::Train));
    }

    #[test]
    fn transductive_rejects_overlapping_indices() {
        let train = [record(("A", 1), ("B", 2), 7)];
        let test = [record(("C", 3), ("D", 4), 7)];
        assert!(matches!(
            assemble_transductive(&train, &test, InitRule::Ones),
            Err(GraphError::OverlappingRecordIndex(7))
        ));
    }

    #[test]
    fn inductive_index_spaces_are_independent() {
        let train = [record(("A", 1), ("B", 2), 0)];
        let test = [record(("B", 2), ("A", 1), 1)];
        let (gt, gs) = assemble_inductive(&train, &test, InitRule::Ones).unwrap();
        assert_eq!(gt.node_count(), 2);
        assert_eq!(gs.node_count(), 2);
        // B:2 is node 1 in the train graph but node 0 in the test graph
        assert_eq!(gt.nodes[1].key.ip, "B");
        assert_eq!(gs.nodes[0].key.ip, "B");

        let (_, empty) = assemble_inductive(&train, &[], InitRule::Ones).unwrap();
        assert_eq!(empty.node_count(), 0);
        assert_eq!(empty.edge_count(), 0);
    }

    #[test]
    fn self_flows_are_kept() {
        let g = build_graph(&[record(("A", 1), ("A", 1), 0)], InitRule::Zeros).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.in_edges(0).unwrap(), &[0]);
        assert_eq!(g.nodes[0].h0, vec![0.0, 0.0]);
    }

    #[test]
    fn dump_text_layout() {
        let g = assemble_transductive(
            &[record(("A", 1), ("B", 2), 0)],
            &[record(("B", 2), ("A", 1), 1)],
            InitRule::Ones,
        )
        .unwrap();
        let dump = g.dump_text();
        assert!(dump.contains("node 0 A 1\n"));
        assert!(dump.contains("edge 0 0 1 0 train\n"));
        assert!(dump.contains("edge 1 1 0 0 test\n"));
    }

    #[test]
    fn mixed_feature_dims_rejected() {
        let mut bad = record(("A", 1), ("B", 2), 1);
        bad.features = vec![1.0];
        let records = [record(("A", 1), ("B", 2), 0), bad];
        assert!(matches!(
            build_graph(&records, InitRule::Ones),
            Err(GraphError::MixedFeatureDims { .. })
        ));
    }
}
