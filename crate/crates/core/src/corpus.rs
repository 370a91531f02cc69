//! Vocabulary construction, document binarization, training-example
//! synthesis, and the per-token example file format.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::rng::{DrawKind, TokenRng};

/// Dense token -> feature-index mapping. Index `i` is feature `x_i`.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from raw token lists. Indices are assigned in
    /// the given order; duplicates are rejected.
    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate token '{t}'")));
            }
        }
        if tokens.is_empty() {
            return Err(Error::EmptyVocabulary { min_count: 0 });
        }
        Ok(Self { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, i: usize) -> &str {
        &self.tokens[i]
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    /// One token per line, in index order.
    pub fn write_file(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for t in &self.tokens {
            writeln!(w, "{t}")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        let tokens: Vec<String> = text
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        Self::from_tokens(tokens)
    }
}

/// Lowercased whitespace tokenization, the corpus input convention.
pub fn tokenize(line: &str) -> Vec<String> {
    line.split_whitespace().map(|t| t.to_lowercase()).collect()
}

/// Counts token frequencies over the documents, keeps tokens with
/// frequency >= `min_count`, and truncates to the `max_vocab` most
/// frequent. Equal frequencies are broken lexicographically so the
/// result is deterministic for a given corpus.
pub fn build_vocabulary<I, S>(docs: I, min_count: usize, max_vocab: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    assert!(min_count >= 1 && max_vocab >= 1);
    let mut counts: HashMap<String, usize> = HashMap::new();
    for doc in docs {
        for tok in tokenize(doc.as_ref()) {
            *counts.entry(tok).or_insert(0) += 1;
        }
    }
    let mut survivors: Vec<(String, usize)> = counts
        .into_iter()
        .filter(|(_, c)| *c >= min_count)
        .collect();
    if survivors.is_empty() {
        return Err(Error::EmptyVocabulary { min_count });
    }
    survivors.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    survivors.truncate(max_vocab);
    Vocabulary::from_tokens(survivors.into_iter().map(|(t, _)| t).collect())
}

/// Presence encoding of one document: bit `i` set iff token `i` occurs
/// at least once. Out-of-vocabulary tokens are dropped.
pub fn binarize_document(text: &str, vocab: &Vocabulary) -> Bitset {
    let mut bits = Bitset::new(vocab.len());
    for tok in tokenize(text) {
        if let Some(i) = vocab.index_of(&tok) {
            bits.set(i, true);
        }
    }
    bits
}

/// One training example: the autoencoder label and the accumulated
/// input feature set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub label: bool,
    pub input: Bitset,
}

/// Synthesizes `count` labeled examples for one target feature.
///
/// Each example samples a uniform label, then ORs `accumulation`
/// documents drawn with replacement from the label-matching pool
/// (label 1: documents containing the target; label 0: documents
/// lacking it). The target's own bit is cleared from every input so the
/// task cannot be solved by reading the answer off the input.
pub fn prepare_examples(
    docs: &[Bitset],
    target: usize,
    target_name: &str,
    count: usize,
    accumulation: usize,
    rng: &TokenRng,
) -> Result<Vec<Example>> {
    assert!(accumulation >= 1, "accumulation must be >= 1");
    let v = docs.first().map(Bitset::len).unwrap_or(0);
    let mut with_target = Vec::new();
    let mut without_target = Vec::new();
    for (i, d) in docs.iter().enumerate() {
        assert_eq!(d.len(), v, "document feature counts differ");
        if d.get(target) {
            with_target.push(i);
        } else {
            without_target.push(i);
        }
    }
    if with_target.is_empty() {
        return Err(Error::PositivePoolEmpty {
            token: target_name.to_string(),
        });
    }
    if without_target.is_empty() {
        return Err(Error::NegativePoolEmpty {
            token: target_name.to_string(),
        });
    }

    let mut examples = Vec::with_capacity(count);
    for ex in 0..count {
        let ex = ex as u32;
        let label = rng.draw(0, ex, 0, DrawKind::Label, 0) & 1 == 1;
        let pool = if label { &with_target } else { &without_target };
        let mut input = Bitset::new(v);
        for slot in 0..accumulation {
            let pick = rng.draw(0, ex, 0, DrawKind::Pick, slot as u32) as u64;
            input.or_assign(&docs[pool[(pick % pool.len() as u64) as usize]]);
        }
        input.set(target, false);
        examples.push(Example { label, input });
    }
    Ok(examples)
}

const EXAMPLE_MAGIC: [u8; 4] = *b"TMEX";
const EXAMPLE_VERSION: u16 = 1;

/// Header of a per-token example file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExampleHeader {
    pub feature_count: u32,
    pub example_count: u32,
    pub accumulation: u16,
    pub target_index: u32,
}

/// Binary layout: magic "TMEX", version u16, V u32, example_count u32,
/// accumulation u16, target_index u32 (all little-endian), then
/// `example_count` records of 1 label byte + ceil(V/8) input bytes with
/// bit `i` of byte `k` holding feature `8k + i`.
pub fn write_example_file(path: &Path, header: &ExampleHeader, examples: &[Example]) -> Result<()> {
    assert_eq!(
        header.example_count as usize,
        examples.len(),
        "declared example_count does not match payload"
    );
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&EXAMPLE_MAGIC)?;
    w.write_all(&EXAMPLE_VERSION.to_le_bytes())?;
    w.write_all(&header.feature_count.to_le_bytes())?;
    w.write_all(&header.example_count.to_le_bytes())?;
    w.write_all(&header.accumulation.to_le_bytes())?;
    w.write_all(&header.target_index.to_le_bytes())?;
    for ex in examples {
        assert_eq!(
            ex.input.len(),
            header.feature_count as usize,
            "example feature count differs from header"
        );
        w.write_all(&[ex.label as u8])?;
        w.write_all(&ex.input.to_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_example_file(path: &Path) -> Result<(ExampleHeader, Vec<Example>)> {
    let display = path.display().to_string();
    let mut r = BufReader::new(File::open(path)?);

    let mut magic = [0u8; 4];
    read_exact(&mut r, &mut magic, &display)?;
    if magic != EXAMPLE_MAGIC {
        return Err(Error::BadMagic {
            path: display,
            expected: EXAMPLE_MAGIC,
        });
    }
    let version = read_u16(&mut r, &display)?;
    if version != EXAMPLE_VERSION {
        return Err(Error::BadVersion {
            path: display,
            found: version,
            expected: EXAMPLE_VERSION,
        });
    }
    let header = ExampleHeader {
        feature_count: read_u32(&mut r, &display)?,
        example_count: read_u32(&mut r, &display)?,
        accumulation: read_u16(&mut r, &display)?,
        target_index: read_u32(&mut r, &display)?,
    };

    let v = header.feature_count as usize;
    let record = 1 + v.div_ceil(8);
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != record * header.example_count as usize {
        return Err(Error::MalformedFile {
            path: display,
            detail: format!(
                "payload is {} bytes, expected {} ({} records of {} bytes)",
                payload.len(),
                record * header.example_count as usize,
                header.example_count,
                record
            ),
        });
    }

    let mut examples = Vec::with_capacity(header.example_count as usize);
    for (i, chunk) in payload.chunks_exact(record).enumerate() {
        let label = match chunk[0] {
            0 => false,
            1 => true,
            other => {
                return Err(Error::MalformedFile {
                    path: display,
                    detail: format!("record {i}: label byte {other} is not 0 or 1"),
                })
            }
        };
        let input = Bitset::from_bytes(v, &chunk[1..]).ok_or_else(|| Error::MalformedFile {
            path: display.clone(),
            detail: format!("record {i}: input bits set past feature count"),
        })?;
        examples.push(Example { label, input });
    }
    Ok((header, examples))
}

fn read_exact(r: &mut impl Read, buf: &mut [u8], path: &str) -> Result<()> {
    r.read_exact(buf).map_err(|_| Error::MalformedFile {
        path: path.to_string(),
        detail: "truncated header".to_string(),
    })
}

fn read_u16(r: &mut impl Read, path: &str) -> Result<u16> {
    let mut b = [0u8; 2];
    read_exact(r, &mut b, path)?;
    Ok(u16::from_le_bytes(b))
}

fn read_u32(r: &mut impl Read, path: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, path)?;
    Ok(u32::from_le_bytes(b))
}
