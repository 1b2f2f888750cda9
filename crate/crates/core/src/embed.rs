//! Node and relation feature encoding: a deterministic hashed bag-of-words
//! encoder plus ingestion of precomputed embedding files.

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::gnn::matrix::DenseMatrix;
use crate::pipeline::RelationSet;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("embedding file: {0}")]
    Parse(String),
    #[error("expected {expected} rows, found {found}")]
    Shape { expected: usize, found: usize },
    #[error("invalid embedding: {0}")]
    Validation(String),
}

/// Feature rows for nodes or relations, with the encoder that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: DenseMatrix,
    pub encoder: String,
}

impl FeatureMatrix {
    pub fn rows(&self) -> usize {
        self.values.rows()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.values.row(i)
    }
}

/// The encoder applied to node texts; relation descriptions must go through
/// the same one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoder {
    /// Hashed bag-of-words over lowercased alphanumeric tokens.
    Hashed { dim: usize },
}

impl Encoder {
    pub fn tag(&self) -> String {
        match self {
            Encoder::Hashed { dim } => format!("hashed-bow-{dim}"),
        }
    }
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Hashed bag-of-words: tokens are lowercased runs of alphanumeric
/// characters, bucketed by FNV-1a 64 mod `dim`, counted, then each row is
/// L2-normalized. Empty texts produce a zero row.
pub fn encode_texts<S: AsRef<str>>(texts: &[S], dim: usize) -> FeatureMatrix {
    assert!(dim >= 8, "encoder dimension must be >= 8");
    let mut values = DenseMatrix::zeros(texts.len(), dim);
    for (i, text) in texts.iter().enumerate() {
        let row = values.row_mut(i);
        let lowered = text.as_ref().to_lowercase();
        for token in lowered.split(|c: char| !c.is_alphanumeric()) {
            if token.is_empty() {
                continue;
            }
            let bucket = (fnv1a64(token.as_bytes()) % dim as u64) as usize;
            row[bucket] += 1.0;
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in row.iter_mut() {
                *v /= norm;
            }
        } else {
            log::warn!("text {i} produced an empty token stream; zero feature row");
        }
    }
    FeatureMatrix {
        values,
        encoder: Encoder::Hashed { dim }.tag(),
    }
}

/// Encodes each relation as "name: description" with the node encoder.
pub fn encode_relation_features(relations: &RelationSet, encoder: Encoder) -> FeatureMatrix {
    let texts: Vec<String> = relations
        .relations()
        .iter()
        .map(|r| format!("{}: {}", r.name, r.description))
        .collect();
    match encoder {
        Encoder::Hashed { dim } => encode_texts(&texts, dim),
    }
}

/// Loads a CSV embedding file (`row_id,v0,...,v{F-1}`) and checks the row
/// count and that every entry is finite.
pub fn load_embeddings(
    path: impl AsRef<Path>,
    expected_rows: usize,
) -> Result<FeatureMatrix, EmbedError> {
    let file = fs::File::open(path)?;
    let mut reader = csv::Reader::from_reader(file);
    let dim = reader
        .headers()
        .map_err(|e| EmbedError::Parse(e.to_string()))?
        .len()
        .saturating_sub(1);
    if dim == 0 {
        return Err(EmbedError::Parse("header has no value columns".into()));
    }
    let mut data = Vec::new();
    let mut rows = 0usize;
    for record in reader.records() {
        let record = record.map_err(|e| EmbedError::Parse(e.to_string()))?;
        if record.len() != dim + 1 {
            return Err(EmbedError::Parse(format!(
                "row {rows} has {} fields, expected {}",
                record.len(),
                dim + 1
            )));
        }
        for field in record.iter().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| EmbedError::Parse(format!("row {rows}: bad number {field:?}")))?;
            if !v.is_finite() {
                return Err(EmbedError::Validation(format!(
                    "non-finite value at row {rows}"
                )));
            }
            data.push(v);
        }
        rows += 1;
    }
    if rows != expected_rows {
        return Err(EmbedError::Shape {
            expected: expected_rows,
            found: rows,
        });
    }
    Ok(FeatureMatrix {
        values: DenseMatrix::from_vec(rows, dim, data),
        encoder: "external-csv".into(),
    })
}

/// Writes features in the CSV interchange format.
pub fn save_embeddings(
    features: &FeatureMatrix,
    path: impl AsRef<Path>,
) -> Result<(), EmbedError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| EmbedError::Parse(e.to_string()))?;
    let mut header = vec!["row_id".to_string()];
    header.extend((0..features.dim()).map(|i| format!("v{i}")));
    writer
        .write_record(&header)
        .map_err(|e| EmbedError::Parse(e.to_string()))?;
    for i in 0..features.rows() {
        let mut record = vec![i.to_string()];
        record.extend(features.row(i).iter().map(|v| v.to_string()));
        writer
            .write_record(&record)
            .map_err(|e| EmbedError::Parse(e.to_string()))?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::Relation;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    #[test]
    fn counts_and_normalization() {
        let features = encode_texts(&["a a b"], 64);
        let a = (fnv1a64(b"a") % 64) as usize;
        let b = (fnv1a64(b"b") % 64) as usize;
        assert_ne!(a, b, "test assumes a and b land in distinct buckets");
        let row = features.row(0);
        let norm = 5.0_f64.sqrt();
        assert_abs_diff_eq!(row[a], 2.0 / norm, epsilon = 1e-12);
        assert_abs_diff_eq!(row[b], 1.0 / norm, epsilon = 1e-12);
    }

    #[test]
    fn identical_texts_identical_rows() {
        let features = encode_texts(&["Deep graphs!", "deep GRAPHS"], 32);
        assert_eq!(features.row(0), features.row(1));
    }

    #[test]
    fn token_order_does_not_matter() {
        let f1 = encode_texts(&["a b"], 32);
        let f2 = encode_texts(&["b a"], 32);
        assert_eq!(f1.row(0), f2.row(0));
    }

    #[test]
    fn empty_text_is_zero_row() {
        let features = encode_texts(&["", "!!"], 16);
        assert!(features.row(0).iter().all(|&v| v == 0.0));
        assert!(features.row(1).iter().all(|&v| v == 0.0));
    }

    /// Independent brute-force re-implementation used as an oracle.
    fn brute_force(text: &str, dim: usize) -> Vec<f64> {
        let mut row = vec![0.0; dim];
        for token in text
            .to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let mut h: u64 = 0xcbf29ce484222325;
            for &byte in token.as_bytes() {
                h ^= byte as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
            row[(h % dim as u64) as usize] += 1.0;
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.iter_mut().for_each(|v| *v /= norm);
        }
        row
    }

    #[test]
    fn agrees_with_brute_force_on_random_strings() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let len = rng.gen_range(0..60);
            let text: String = (0..len)
                .map(|_| {
                    let c = rng.gen_range(0u8..80);
                    (b' ' + c) as char
                })
                .collect();
            let ours = encode_texts(&[text.clone()], 37);
            assert_eq!(ours.row(0), brute_force(&text, 37).as_slice(), "{text:?}");
        }
    }

    #[test]
    fn nonzero_rows_are_unit_norm() {
        let features = encode_texts(&["some words here", "more words"], 64);
        for i in 0..2 {
            let norm: f64 = features.row(i).iter().map(|v| v * v).sum::<f64>().sqrt();
            assert_abs_diff_eq!(norm, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn relation_features_follow_descriptions() {
        let set = RelationSet::new(vec![
            Relation {
                name: "Alpha".into(),
                description: "first kind".into(),
            },
            Relation {
                name: "Beta".into(),
                description: "second kind".into(),
            },
        ])
        .unwrap();
        let features = encode_relation_features(&set, Encoder::Hashed { dim: 64 });
        assert_eq!(features.rows(), 2);
        assert_ne!(features.row(0), features.row(1));

        let same = RelationSet::new(vec![
            Relation {
                name: "Alpha".into(),
                description: "shared".into(),
            },
            Relation {
                name: "alpha two".into(),
                description: "shared".into(),
            },
        ])
        .unwrap();
        let f = encode_relation_features(&same, Encoder::Hashed { dim: 64 });
        // same tokens modulo the name; descriptions drive most of the mass
        assert_eq!(f.rows(), 2);
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.csv");
        let features = encode_texts(&["a b", "c d", "e f"], 8);
        save_embeddings(&features, &path).unwrap();
        let loaded = load_embeddings(&path, 3).unwrap();
        assert_eq!(loaded.rows(), 3);
        assert_eq!(loaded.dim(), 8);
        for i in 0..3 {
            for (x, y) in loaded.row(i).iter().zip(features.row(i)) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
        assert!(matches!(
            load_embeddings(&path, 4),
            Err(EmbedError::Shape {
                expected: 4,
                found: 3
            })
        ));

        let bad = dir.path().join("bad.csv");
        let mut f = std::fs::File::create(&bad).unwrap();
        writeln!(f, "row_id,v0,v1").unwrap();
        writeln!(f, "0,nan,1.0").unwrap();
        assert!(matches!(
            load_embeddings(&bad, 1),
            Err(EmbedError::Validation(_))
        ));
    }
}
