//! Embedding extraction from trained clause banks, vector similarity
//! and text export formats.
//!
//! The embedding uses the full automaton state space: every state
//! contributes, included or not. Feature `i` of a token's vector is the
//! weight-sign-aggregated difference between the original literal's
//! state and the corresponding negated literal's state:
//! `values[i] = sum_j sign(w_j) * (state(j, i) - state(j, V + i))`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::clause_bank::ClauseBank;
use crate::error::{Error, Result};

/// Static embedding of one token: a length-V signed integer vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingVector {
    pub token: String,
    pub values: Vec<i64>,
}

/// Token-keyed embedding rows of uniform width, in insertion order.
#[derive(Debug, Clone, Default)]
pub struct EmbeddingMatrix {
    features: usize,
    rows: Vec<EmbeddingVector>,
    index: HashMap<String, usize>,
}

impl EmbeddingMatrix {
    pub fn new(features: usize) -> Self {
        Self {
            features,
            rows: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn insert(&mut self, vector: EmbeddingVector) -> Result<()> {
        if vector.values.len() != self.features {
            return Err(Error::DimensionMismatch(format!(
                "embedding for '{}' has {} values, matrix expects {}",
                vector.token,
                vector.values.len(),
                self.features
            )));
        }
        match self.index.get(&vector.token) {
            Some(&i) => self.rows[i] = vector,
            None => {
                self.index.insert(vector.token.clone(), self.rows.len());
                self.rows.push(vector);
            }
        }
        Ok(())
    }

    pub fn get(&self, token: &str) -> Option<&EmbeddingVector> {
        self.index.get(token).map(|&i| &self.rows[i])
    }

    pub fn rows(&self) -> &[EmbeddingVector] {
        &self.rows
    }
}

/// Extracts the embedding for `token` from its trained bank.
pub fn extract_embedding(bank: &ClauseBank, token: &str) -> EmbeddingVector {
    let v = bank.config().features as usize;
    let mut values = vec![0i64; v];
    for j in 0..bank.config().clauses as usize {
        let sign = bank.weight(j).signum() as i64;
        if sign == 0 {
            continue;
        }
        for (i, value) in values.iter_mut().enumerate() {
            *value += sign * (bank.state(j, i) as i64 - bank.state(j, v + i) as i64);
        }
    }
    EmbeddingVector {
        token: token.to_string(),
        values,
    }
}

/// Cosine similarity of two integer vectors, in floating point.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64> {
    if a.values.len() != b.values.len() {
        return Err(Error::DimensionMismatch(format!(
            "'{}' has {} values, '{}' has {}",
            a.token,
            a.values.len(),
            b.token,
            b.values.len()
        )));
    }
    let norm = |e: &EmbeddingVector| -> f64 {
        e.values.iter().map(|&x| (x as f64) * (x as f64)).sum::<f64>().sqrt()
    };
    let na = norm(a);
    if na == 0.0 {
        return Err(Error::ZeroVector {
            token: a.token.clone(),
        });
    }
    let nb = norm(b);
    if nb == 0.0 {
        return Err(Error::ZeroVector {
            token: b.token.clone(),
        });
    }
    let dot: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(&x, &y)| x as f64 * y as f64)
        .sum();
    Ok(dot / (na * nb))
}

/// Text export formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    /// Header `token\tv0...v{V-1}`, then one tab-separated row per token.
    Tsv,
    /// First line `<rows> <V>`, then space-separated `token v0 .. v{V-1}`.
    W2vText,
}

impl std::str::FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "tsv" => Ok(ExportFormat::Tsv),
            "w2v-text" => Ok(ExportFormat::W2vText),
            other => Err(format!("unknown format '{other}' (expected 'tsv' or 'w2v-text')")),
        }
    }
}

/// Writes the matrix in the chosen format. Refuses an empty matrix and
/// creates no file in that case.
pub fn export_embeddings(matrix: &EmbeddingMatrix, path: &Path, format: ExportFormat) -> Result<()> {
    if matrix.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let mut w = BufWriter::new(File::create(path)?);
    write_embeddings(matrix, &mut w, format)?;
    w.flush()?;
    Ok(())
}

pub fn write_embeddings(
    matrix: &EmbeddingMatrix,
    w: &mut impl Write,
    format: ExportFormat,
) -> Result<()> {
    if matrix.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    match format {
        ExportFormat::Tsv => {
            write!(w, "token")?;
            for i in 0..matrix.features() {
                write!(w, "\tv{i}")?;
            }
            writeln!(w)?;
            for row in matrix.rows() {
                write!(w, "{}", row.token)?;
                for value in &row.values {
                    write!(w, "\t{value}")?;
                }
                writeln!(w)?;
            }
        }
        ExportFormat::W2vText => {
            writeln!(w, "{} {}", matrix.len(), matrix.features())?;
            for row in matrix.rows() {
                write!(w, "{}", row.token)?;
                for value in &row.values {
                    write!(w, " {value}")?;
                }
                writeln!(w)?;
            }
        }
    }
    Ok(())
}

/// Loads a matrix previously written by [`export_embeddings`]. The
/// format is detected from the first line.
pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let display = path.display().to_string();
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let first = lines
        .next()
        .ok_or_else(|| Error::MalformedFile {
            path: display.clone(),
            detail: "empty file".into(),
        })??;

    let malformed = |line: usize, detail: String| Error::MalformedLine {
        path: display.clone(),
        line,
        detail,
    };

    let header: Vec<&str> = first.split_whitespace().collect();
    let (tsv, features) = if header.first() == Some(&"token") {
        (true, header.len() - 1)
    } else if header.len() == 2 {
        let v: usize = header[1]
            .parse()
            .map_err(|_| malformed(1, format!("bad feature count '{}'", header[1])))?;
        (false, v)
    } else {
        return Err(malformed(1, "unrecognized header".into()));
    };

    let mut matrix = EmbeddingMatrix::new(features);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut parts = if tsv {
            line.split('\t')
        } else {
            // split on single spaces: w2v rows are single-space separated
            line.split(' ')
        };
        let token = parts
            .next()
            .ok_or_else(|| malformed(i + 2, "missing token".into()))?
            .to_string();
        let values: std::result::Result<Vec<i64>, _> = parts.map(str::parse).collect();
        let values = values.map_err(|e| malformed(i + 2, format!("bad value: {e}")))?;
        if values.len() != features {
            return Err(malformed(
                i + 2,
                format!("expected {} values, found {}", features, values.len()),
            ));
        }
        matrix.insert(EmbeddingVector { token, values })?;
    }
    if matrix.is_empty() {
        return Err(Error::MalformedFile {
            path: display,
            detail: "no embedding rows".into(),
        });
    }
    Ok(matrix)
}
