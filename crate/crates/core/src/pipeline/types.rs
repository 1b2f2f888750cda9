//! Shared value types for relation identification and edge decomposition.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineError;

/// A named semantic relation with its textual description.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub name: String,
    pub description: String,
}

/// Ordered list of relation types. Names are unique case-insensitively and
/// descriptions nonempty.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RelationSetFile", into = "RelationSetFile")]
pub struct RelationSet {
    relations: Vec<Relation>,
}

#[derive(Serialize, Deserialize)]
struct RelationSetFile {
    relations: Vec<Relation>,
}

impl TryFrom<RelationSetFile> for RelationSet {
    type Error = PipelineError;

    fn try_from(file: RelationSetFile) -> Result<Self, Self::Error> {
        RelationSet::new(file.relations)
    }
}

impl From<RelationSet> for RelationSetFile {
    fn from(set: RelationSet) -> Self {
        RelationSetFile {
            relations: set.relations,
        }
    }
}

impl RelationSet {
    pub fn new(relations: Vec<Relation>) -> Result<Self, PipelineError> {
        if relations.is_empty() {
            return Err(PipelineError::Config("relation set is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for rel in &relations {
            if rel.description.trim().is_empty() {
                return Err(PipelineError::Config(format!(
                    "relation \"{}\" has an empty description",
                    rel.name
                )));
            }
            if !seen.insert(rel.name.to_lowercase()) {
                return Err(PipelineError::Config(format!(
                    "duplicate relation name \"{}\"",
                    rel.name
                )));
            }
        }
        Ok(Self { relations })
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn relations(&self) -> &[Relation] {
        &self.relations
    }

    pub fn names(&self) -> Vec<String> {
        self.relations.iter().map(|r| r.name.clone()).collect()
    }

    /// Numbered "1. Name: Description" block used in prompts.
    pub fn enumerated_block(&self) -> String {
        self.relations
            .iter()
            .enumerate()
            .map(|(i, r)| format!("{}. {}: {}", i + 1, r.name, r.description))
            .collect::<Vec<_>>()
            .join("\n")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let out = fs::File::create(path)?;
        let mut writer = BufWriter::new(out);
        serde_json::to_writer_pretty(&mut writer, self)
            .map_err(|e| PipelineError::Parse(e.to_string()))?;
        writer.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let file = fs::File::open(path)?;
        serde_json::from_reader(BufReader::new(file))
            .map_err(|e| PipelineError::Parse(e.to_string()))
    }
}

/// How an edge got its relation assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Answered directly by the decomposer backend.
    Queried,
    /// Copied from the nearest annotated neighbor.
    Pseudo,
    /// Produced by a rule-based baseline.
    Baseline,
    /// Decomposer output was unparseable; corpus-mode relation substituted.
    Fallback,
}

/// Per-edge nonempty relation assignments, keyed by the normalized
/// `(min, max)` node pair. Truth files produced by the synthetic generator
/// carry no provenance.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EdgeDecomposition {
    entries: BTreeMap<(usize, usize), EdgeAssignment>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeAssignment {
    pub relations: BTreeSet<usize>,
    pub provenance: Option<Provenance>,
}

#[derive(Serialize, Deserialize)]
struct DecompositionLine {
    edge: (usize, usize),
    relations: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

impl EdgeDecomposition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        a: usize,
        b: usize,
        relations: impl IntoIterator<Item = usize>,
        provenance: Option<Provenance>,
    ) {
        let relations: BTreeSet<usize> = relations.into_iter().collect();
        assert!(!relations.is_empty(), "edge relation set must be nonempty");
        self.entries.insert(
            (a.min(b), a.max(b)),
            EdgeAssignment {
                relations,
                provenance,
            },
        );
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, a: usize, b: usize) -> bool {
        self.entries.contains_key(&(a.min(b), a.max(b)))
    }

    pub fn relations(&self, a: usize, b: usize) -> Option<&BTreeSet<usize>> {
        self.entries
            .get(&(a.min(b), a.max(b)))
            .map(|e| &e.relations)
    }

    pub fn provenance(&self, a: usize, b: usize) -> Option<Provenance> {
        self.entries
            .get(&(a.min(b), a.max(b)))
            .and_then(|e| e.provenance)
    }

    /// Entries in sorted edge order.
    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &EdgeAssignment)> {
        self.entries.iter()
    }

    /// Smallest R consistent with the stored indices.
    pub fn num_relations(&self) -> usize {
        self.entries
            .values()
            .flat_map(|e| e.relations.iter())
            .max()
            .map_or(0, |&m| m + 1)
    }

    /// One JSON object per line, sorted by edge; provenance omitted when absent.
    pub fn save_jsonl(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let out = fs::File::create(path)?;
        let mut writer = BufWriter::new(out);
        for (&edge, assignment) in &self.entries {
            let line = DecompositionLine {
                edge,
                relations: assignment.relations.iter().copied().collect(),
                provenance: assignment.provenance,
            };
            serde_json::to_writer(&mut writer, &line)
                .map_err(|e| PipelineError::Parse(e.to_string()))?;
            writer.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let file = fs::File::open(path)?;
        let mut dec = Self::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let parsed: DecompositionLine = serde_json::from_str(&line)
                .map_err(|e| PipelineError::Parse(format!("line {}: {e}", idx + 1)))?;
            if parsed.relations.is_empty() {
                return Err(PipelineError::Parse(format!(
                    "line {}: empty relation set",
                    idx + 1
                )));
            }
            dec.insert(
                parsed.edge.0,
                parsed.edge.1,
                parsed.relations,
                parsed.provenance,
            );
        }
        Ok(dec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relation_set_rejects_duplicates_and_empty() {
        let rel = |n: &str| Relation {
            name: n.into(),
            description: "d".into(),
        };
        assert!(RelationSet::new(vec![]).is_err());
        assert!(RelationSet::new(vec![rel("A"), rel("a")]).is_err());
        assert!(RelationSet::new(vec![rel("A"), rel("B")]).is_ok());
        let blank = Relation {
            name: "A".into(),
            description: "  ".into(),
        };
        assert!(RelationSet::new(vec![blank]).is_err());
    }

    #[test]
    fn decomposition_jsonl_round_trip() {
        let mut dec = EdgeDecomposition::new();
        dec.insert(3, 1, [0, 2], Some(Provenance::Queried));
        dec.insert(0, 2, [1], Some(Provenance::Pseudo));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dec.jsonl");
        dec.save_jsonl(&path).unwrap();
        let loaded = EdgeDecomposition::load_jsonl(&path).unwrap();
        assert_eq!(loaded, dec);
        // keys are normalized
        assert!(loaded.contains(1, 3));
        assert_eq!(loaded.provenance(0, 2), Some(Provenance::Pseudo));
    }

    #[test]
    fn truth_lines_have_no_provenance_field() {
        let mut dec = EdgeDecomposition::new();
        dec.insert(0, 1, [1], None);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("truth.jsonl");
        dec.save_jsonl(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "{\"edge\":[0,1],\"relations\":[1]}\n");
    }
}
