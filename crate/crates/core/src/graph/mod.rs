//! Text-attributed graph data model: loading/saving, train/val/test splits,
//! relation-typed substructures, and the synthetic planted-relation generator.

mod synth;

pub use synth::{synth_planted_graph, SynthConfig};

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pipeline::EdgeDecomposition;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed graph file: {0}")]
    Parse(String),
    #[error("invalid graph: {0}")]
    Validation(String),
    #[error("graph has no labeled nodes")]
    MissingLabels,
    #[error("edge ({0}, {1}) not covered by the decomposition")]
    Coverage(usize, usize),
    #[error("relation index {index} out of range (R = {num_relations})")]
    RelationIndex { index: usize, num_relations: usize },
    #[error("invalid config: {0}")]
    Config(String),
}

/// Free-text description of how the graph was put together. This is what the
/// relation generator prompt gets to see.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphMeta {
    pub description: String,
    pub node_kind: String,
    pub edge_rule: String,
    pub class_names: Vec<String>,
}

/// An undirected graph whose nodes carry raw text attributes and optional
/// class labels. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct TextAttributedGraph {
    meta: GraphMeta,
    texts: Vec<String>,
    edges: Vec<(usize, usize)>,
    labels: Vec<Option<usize>>,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: usize,
    text: String,
    label: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    meta: GraphMeta,
    nodes: Vec<NodeRecord>,
    edges: Vec<(usize, usize)>,
}

impl TextAttributedGraph {
    /// Validates and constructs a graph. Edges are normalized to `(min, max)`
    /// order; duplicate undirected pairs are dropped with a warning.
    pub fn new(
        meta: GraphMeta,
        texts: Vec<String>,
        edges: Vec<(usize, usize)>,
        labels: Vec<Option<usize>>,
    ) -> Result<Self, GraphError> {
        let n = texts.len();
        if labels.len() != n {
            return Err(GraphError::Validation(format!(
                "labels length {} does not match node count {}",
                labels.len(),
                n
            )));
        }
        let mut seen = BTreeSet::new();
        let mut normalized = Vec::with_capacity(edges.len());
        for (idx, &(a, b)) in edges.iter().enumerate() {
            if a == b {
                return Err(GraphError::Validation(format!("self-loop at edge {idx}")));
            }
            if a >= n || b >= n {
                return Err(GraphError::Validation(format!(
                    "endpoint out of range at edge {idx}: ({a}, {b}) with {n} nodes"
                )));
            }
            let key = (a.min(b), a.max(b));
            if !seen.insert(key) {
                log::warn!("dropping duplicate edge ({a}, {b}) at index {idx}");
                continue;
            }
            normalized.push(key);
        }
        let graph = Self {
            meta,
            texts,
            edges: normalized,
            labels,
        };
        if let Some(k) = graph.num_classes() {
            for (i, label) in graph.labels.iter().enumerate() {
                if let Some(y) = label {
                    if *y >= k {
                        return Err(GraphError::Validation(format!(
                            "label {y} at node {i} out of range (K = {k})"
                        )));
                    }
                }
            }
        }
        Ok(graph)
    }

    pub fn meta(&self) -> &GraphMeta {
        &self.meta
    }

    pub fn node_count(&self) -> usize {
        self.texts.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn texts(&self) -> &[String] {
        &self.texts
    }

    pub fn text(&self, node: usize) -> &str {
        &self.texts[node]
    }

    /// Undirected edges, normalized to `(min, max)` and deduplicated.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> Option<usize> {
        self.labels[node]
    }

    pub fn has_labels(&self) -> bool {
        self.labels.iter().any(Option::is_some)
    }

    /// Number of classes: the declared class names when present, otherwise
    /// inferred from the largest label.
    pub fn num_classes(&self) -> Option<usize> {
        if !self.meta.class_names.is_empty() {
            return Some(self.meta.class_names.len());
        }
        self.labels.iter().flatten().max().map(|&m| m + 1)
    }

    /// Symmetrized neighbor lists, each sorted ascending.
    pub fn neighbor_lists(&self) -> Vec<Vec<usize>> {
        let mut lists = vec![Vec::new(); self.node_count()];
        for &(a, b) in &self.edges {
            lists[a].push(b);
            lists[b].push(a);
        }
        for list in &mut lists {
            list.sort_unstable();
        }
        lists
    }
}

/// Loads a graph from the JSON interchange format.
pub fn load_graph(path: impl AsRef<Path>) -> Result<TextAttributedGraph, GraphError> {
    let file = fs::File::open(path)?;
    let parsed: GraphFile = serde_json::from_reader(BufReader::new(file))
        .map_err(|e| GraphError::Parse(e.to_string()))?;
    for (idx, node) in parsed.nodes.iter().enumerate() {
        if node.id != idx {
            return Err(GraphError::Validation(format!(
                "node id {} at position {idx}: ids must be 0..N-1 in order",
                node.id
            )));
        }
    }
    let texts = parsed.nodes.iter().map(|n| n.text.clone()).collect();
    let labels = parsed.nodes.iter().map(|n| n.label).collect();
    TextAttributedGraph::new(parsed.meta, texts, parsed.edges, labels)
}

/// Saves a graph to the JSON interchange format. `load_graph` of the result
/// reproduces the input exactly.
pub fn save_graph(graph: &TextAttributedGraph, path: impl AsRef<Path>) -> Result<(), GraphError> {
    let file = GraphFile {
        meta: graph.meta.clone(),
        nodes: graph
            .texts
            .iter()
            .enumerate()
            .map(|(id, text)| NodeRecord {
                id,
                text: text.clone(),
                label: graph.labels[id],
            })
            .collect(),
        edges: graph.edges.clone(),
    };
    let out = fs::File::create(path)?;
    let mut writer = BufWriter::new(out);
    serde_json::to_writer_pretty(&mut writer, &file)
        .map_err(|e| GraphError::Parse(e.to_string()))?;
    writer.write_all(b"\n")?;
    Ok(())
}

// ============================================================================
// Splits
// ============================================================================

/// Disjoint train/val/test node-index lists covering all labeled nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

impl Split {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), GraphError> {
        let out = fs::File::create(path)?;
        let mut writer = BufWriter::new(out);
        serde_json::to_writer_pretty(&mut writer, self)
            .map_err(|e| GraphError::Parse(e.to_string()))?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, GraphError> {
        let file = fs::File::open(path)?;
        serde_json::from_reader(BufReader::new(file)).map_err(|e| GraphError::Parse(e.to_string()))
    }
}

/// Uniform-random 60/20/20 split of the labeled nodes, deterministic per seed.
pub fn make_split(graph: &TextAttributedGraph, seed: u64) -> Result<Split, GraphError> {
    let mut labeled: Vec<usize> = (0..graph.node_count())
        .filter(|&i| graph.label(i).is_some())
        .collect();
    if labeled.is_empty() {
        return Err(GraphError::MissingLabels);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    labeled.shuffle(&mut rng);
    let n = labeled.len();
    let n_train = (n as f64 * 0.6).round() as usize;
    let n_val = (n as f64 * 0.2).round() as usize;
    let mut train: Vec<usize> = labeled[..n_train].to_vec();
    let mut val: Vec<usize> = labeled[n_train..n_train + n_val].to_vec();
    let mut test: Vec<usize> = labeled[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        seed,
        train,
        val,
        test,
    })
}

// ============================================================================
// Relation-typed structures for message passing
// ============================================================================

/// Per-relation directed edge lists obtained by symmetrizing each undirected
/// edge into every relation it was assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationSubstructures {
    num_relations: usize,
    edge_lists: Vec<Vec<(usize, usize)>>,
    neighbors: Vec<Vec<Vec<usize>>>,
}

impl RelationSubstructures {
    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    /// Directed edges assigned to relation `r`.
    pub fn edges(&self, r: usize) -> &[(usize, usize)] {
        &self.edge_lists[r]
    }

    /// Neighbors of `node` connected via relation `r`, sorted ascending.
    pub fn neighbors(&self, r: usize, node: usize) -> &[usize] {
        &self.neighbors[r][node]
    }
}

/// Splits the graph into `num_relations` directed substructures according to
/// the decomposition. An edge assigned multiple relations appears in each.
pub fn build_substructures(
    graph: &TextAttributedGraph,
    decomposition: &EdgeDecomposition,
    num_relations: usize,
) -> Result<RelationSubstructures, GraphError> {
    let mut edge_lists = vec![Vec::new(); num_relations];
    let mut neighbors = vec![vec![Vec::new(); graph.node_count()]; num_relations];
    for &(a, b) in graph.edges() {
        let relations = decomposition
            .relations(a, b)
            .ok_or(GraphError::Coverage(a, b))?;
        for &r in relations {
            if r >= num_relations {
                return Err(GraphError::RelationIndex {
                    index: r,
                    num_relations,
                });
            }
            edge_lists[r].push((a, b));
            edge_lists[r].push((b, a));
            neighbors[r][a].push(b);
            neighbors[r][b].push(a);
        }
    }
    for rel in &mut neighbors {
        for list in rel {
            list.sort_unstable();
        }
    }
    Ok(RelationSubstructures {
        num_relations,
        edge_lists,
        neighbors,
    })
}

/// Expands each undirected edge into one `(src, dst, relation)` entry per
/// direction and assigned relation, for edge-featured aggregation.
pub fn duplicate_for_edge_features(
    graph: &TextAttributedGraph,
    decomposition: &EdgeDecomposition,
) -> Result<Vec<(usize, usize, usize)>, GraphError> {
    let mut entries = Vec::new();
    for &(a, b) in graph.edges() {
        let relations = decomposition
            .relations(a, b)
            .ok_or(GraphError::Coverage(a, b))?;
        for &r in relations {
            entries.push((a, b, r));
            entries.push((b, a, r));
        }
    }
    Ok(entries)
}
