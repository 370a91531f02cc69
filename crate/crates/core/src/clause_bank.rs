//! Clause storage and the per-clause learning operations.
//!
//! Automaton states are stored packed at `b` bits each, one word-aligned
//! row per clause; the payload is exactly `C x 2V x b` bits plus row
//! alignment padding reported separately. Alongside the states each
//! clause keeps an include bitmask (literals with state above the
//! inclusion threshold), so evaluation is a handful of word operations
//! instead of a walk over every automaton.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bitset::Bitset;
use crate::error::{Error, Result};
use crate::rng::{probability_threshold, DrawKind, TokenRng};

/// Structural and training hyperparameters of one clause bank.
#[derive(Debug, Clone, PartialEq)]
pub struct BankConfig {
    /// Clause count C.
    pub clauses: u32,
    /// Feature count V; the literal space has size 2V.
    pub features: u32,
    /// State bits per automaton b, giving states in [0, 2^b - 1].
    pub state_bits: u32,
    /// Inclusion threshold N: a literal participates iff state > N.
    pub inclusion_threshold: u32,
    /// Vote clip bound T.
    pub vote_clip: i32,
    /// Specificity s, controlling feedback probabilities.
    pub specificity: f64,
    /// Scaling factor in the update-probability denominator.
    pub scaling_factor: f64,
}

impl BankConfig {
    /// C, V, b, N with the canonical defaults T = 20000, s = 1.0 and
    /// scaling factor 2.
    pub fn new(clauses: u32, features: u32, state_bits: u32, inclusion_threshold: u32) -> Self {
        Self {
            clauses,
            features,
            state_bits,
            inclusion_threshold,
            vote_clip: 20_000,
            specificity: 1.0,
            scaling_factor: 2.0,
        }
    }

    /// N placed just below the midpoint so inclusion is the upper half
    /// of the state space (127 for b = 8).
    pub fn default_inclusion_threshold(state_bits: u32) -> u32 {
        (1u32 << (state_bits - 1)) - 1
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.clauses < 1 {
            return fail("clauses must be >= 1".into());
        }
        if self.features < 1 {
            return fail("features must be >= 1".into());
        }
        if !(1..=16).contains(&self.state_bits) {
            return fail(format!("state_bits must be in 1..=16, got {}", self.state_bits));
        }
        if self.inclusion_threshold >= self.max_state() {
            return fail(format!(
                "inclusion_threshold must be < 2^b - 1 = {}, got {}",
                self.max_state(),
                self.inclusion_threshold
            ));
        }
        if self.vote_clip < 1 {
            return fail("vote_clip must be >= 1".into());
        }
        if self.specificity.is_nan() || self.specificity < 1.0 {
            return fail(format!("specificity must be >= 1, got {}", self.specificity));
        }
        if self.scaling_factor.is_nan() || self.scaling_factor <= 0.0 {
            return fail(format!("scaling_factor must be > 0, got {}", self.scaling_factor));
        }
        Ok(())
    }

    /// Literal count L = 2V.
    pub fn literal_count(&self) -> u32 {
        2 * self.features
    }

    /// Highest representable state, 2^b - 1.
    pub fn max_state(&self) -> u32 {
        (1u32 << self.state_bits) - 1
    }

    /// Words per packed state row.
    fn row_words(&self) -> usize {
        (self.literal_count() as usize * self.state_bits as usize).div_ceil(64)
    }

    /// Words per include-mask row (original half then negated half).
    fn mask_row_words(&self) -> usize {
        2 * (self.features as usize).div_ceil(64)
    }
}

/// Automata state memory in bits: C x 2V x b.
pub fn memory_footprint(config: &BankConfig) -> u64 {
    config.clauses as u64 * config.literal_count() as u64 * config.state_bits as u64
}

/// Value of literal `k` on input `x`: `x[k]` for k < V, `!x[k - V]`
/// for the negated half.
#[inline(always)]
pub fn literal_value(x: &Bitset, k: usize) -> bool {
    let v = x.len();
    assert!(k < 2 * v, "literal index {k} out of range (L = {})", 2 * v);
    if k < v {
        x.get(k)
    } else {
        !x.get(k - v)
    }
}

/// Keyed draw source for one (epoch, example) of feedback.
#[derive(Debug, Clone, Copy)]
pub struct FeedbackRng {
    pub rng: TokenRng,
    pub epoch: u32,
    pub example: u32,
}

impl FeedbackRng {
    #[inline(always)]
    pub fn draw(&self, kind: DrawKind, clause: u32, literal: u32) -> u32 {
        self.rng.feedback_draw(kind, self.epoch, self.example, clause, literal)
    }
}

/// Packed automaton states and signed clause weights for one target
/// token.
#[derive(Debug, Clone, PartialEq)]
pub struct ClauseBank {
    config: BankConfig,
    states: Vec<u64>,
    masks: Vec<u64>,
    include_counts: Vec<u32>,
    weights: Vec<i32>,
}

impl ClauseBank {
    /// Fresh bank: every automaton at N or N + 1 with probability 1/2,
    /// weights alternating +1, -1 over the clause index.
    pub fn new(config: BankConfig, rng: &TokenRng) -> Result<Self> {
        config.validate()?;
        let c = config.clauses as usize;
        let mut bank = Self {
            states: vec![0; c * config.row_words()],
            masks: vec![0; c * config.mask_row_words()],
            include_counts: vec![0; c],
            weights: (0..c).map(|j| if j % 2 == 0 { 1 } else { -1 }).collect(),
            config,
        };
        let n = bank.config.inclusion_threshold;
        for j in 0..bank.config.clauses {
            for k in 0..bank.config.literal_count() {
                let up = rng.init_draw(j, k) & 1 == 1;
                bank.set_state(j as usize, k as usize, if up { n + 1 } else { n });
            }
        }
        Ok(bank)
    }

    pub fn config(&self) -> &BankConfig {
        &self.config
    }

    pub fn weights(&self) -> &[i32] {
        &self.weights
    }

    pub fn weight(&self, j: usize) -> i32 {
        self.weights[j]
    }

    pub fn set_weight(&mut self, j: usize, w: i32) {
        self.weights[j] = w;
    }

    /// Number of included literals in clause `j`.
    pub fn include_count(&self, j: usize) -> u32 {
        self.include_counts[j]
    }

    pub fn state(&self, j: usize, k: usize) -> u32 {
        self.row(j).state(k)
    }

    pub fn set_state(&mut self, j: usize, k: usize, value: u32) {
        self.row_mut(j).set_state(k, value);
    }

    fn row(&self, j: usize) -> ClauseRow<'_> {
        assert!(j < self.config.clauses as usize, "clause index {j} out of range");
        let rw = self.config.row_words();
        let mw = self.config.mask_row_words();
        ClauseRow {
            config: &self.config,
            states: &self.states[j * rw..(j + 1) * rw],
            masks: &self.masks[j * mw..(j + 1) * mw],
        }
    }

    pub(crate) fn row_mut(&mut self, j: usize) -> ClauseRowMut<'_> {
        assert!(j < self.config.clauses as usize, "clause index {j} out of range");
        let rw = self.config.row_words();
        let mw = self.config.mask_row_words();
        ClauseRowMut {
            index: j as u32,
            config: &self.config,
            states: &mut self.states[j * rw..(j + 1) * rw],
            masks: &mut self.masks[j * mw..(j + 1) * mw],
            include_count: &mut self.include_counts[j],
            weight: &mut self.weights[j],
        }
    }

    /// Splits the bank into independent per-clause mutable rows. Rows
    /// touch disjoint memory, so the trainer may update them from
    /// different workers without locks.
    pub(crate) fn rows_mut(&mut self) -> Vec<ClauseRowMut<'_>> {
        let rw = self.config.row_words();
        let mw = self.config.mask_row_words();
        let config = &self.config;
        self.states
            .chunks_mut(rw)
            .zip(self.masks.chunks_mut(mw))
            .zip(self.include_counts.iter_mut())
            .zip(self.weights.iter_mut())
            .enumerate()
            .map(|(j, (((states, masks), include_count), weight))| ClauseRowMut {
                index: j as u32,
                config,
                states,
                masks,
                include_count,
                weight,
            })
            .collect()
    }

    /// Clause output under the training convention: an empty clause
    /// outputs 1 so it can receive feedback and grow.
    pub fn evaluate_clause(&self, j: usize, x: &Bitset) -> bool {
        self.row(j).evaluate(x)
    }

    /// All clause outputs, training convention.
    pub fn evaluate_all(&self, x: &Bitset) -> Bitset {
        let mut out = Bitset::new(self.config.clauses as usize);
        for j in 0..self.config.clauses as usize {
            out.set(j, self.evaluate_clause(j, x));
        }
        out
    }

    /// All clause outputs under the inference convention: an empty
    /// clause outputs 0 so it cannot vote vacuously.
    pub fn evaluate_all_inference(&self, x: &Bitset) -> Bitset {
        let mut out = Bitset::new(self.config.clauses as usize);
        for j in 0..self.config.clauses as usize {
            out.set(j, self.include_counts[j] > 0 && self.evaluate_clause(j, x));
        }
        out
    }

    /// Type Ia (memorizing) feedback for clause `j` on input `x`:
    /// literals true in `x` are reinforced with probability (s-1)/s,
    /// false literals forgotten with probability 1/s.
    pub fn type_ia_feedback(&mut self, j: usize, x: &Bitset, fr: &FeedbackRng) {
        self.row_mut(j).type_ia(x, fr);
    }

    /// Type Ib (forgetting) feedback: every literal state decremented
    /// with probability 1/s.
    pub fn type_ib_feedback(&mut self, j: usize, fr: &FeedbackRng) {
        self.row_mut(j).type_ib(fr);
    }

    /// Type II (invalidating) feedback: literals false in `x` with
    /// state <= N are incremented by one, deterministically.
    pub fn type_ii_feedback(&mut self, j: usize, x: &Bitset) {
        self.row_mut(j).type_ii(x);
    }

    /// Per-clause state histograms split at the original/negated
    /// literal boundary. Each half sums to V.
    pub fn state_histogram(&self) -> Vec<ClauseStateHistogram> {
        let v = self.config.features as usize;
        let bins = self.config.max_state() as usize + 1;
        (0..self.config.clauses as usize)
            .map(|j| {
                let mut h = ClauseStateHistogram {
                    original: vec![0; bins],
                    negated: vec![0; bins],
                };
                for k in 0..v {
                    h.original[self.state(j, k) as usize] += 1;
                }
                for k in v..2 * v {
                    h.negated[self.state(j, k) as usize] += 1;
                }
                h
            })
            .collect()
    }

    /// Alignment padding in bits: allocated row storage beyond the
    /// C x 2V x b payload reported by [`memory_footprint`].
    pub fn padding_bits(&self) -> u64 {
        self.states.len() as u64 * 64 - memory_footprint(&self.config)
    }

    /// Writes the snapshot format: magic "TMBK", version u16, C u32,
    /// V u32, b u16, N u16 (little-endian), packed state rows
    /// (ceil(2V*b/8) bytes per clause, bit i of byte k = row bit
    /// 8k + i), then C little-endian i32 weights.
    pub fn write_snapshot(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(&BANK_MAGIC)?;
        w.write_all(&BANK_VERSION.to_le_bytes())?;
        w.write_all(&self.config.clauses.to_le_bytes())?;
        w.write_all(&self.config.features.to_le_bytes())?;
        w.write_all(&(self.config.state_bits as u16).to_le_bytes())?;
        w.write_all(&(self.config.inclusion_threshold as u16).to_le_bytes())?;
        let rw = self.config.row_words();
        let row_bytes = (self.config.literal_count() as usize * self.config.state_bits as usize)
            .div_ceil(8);
        let mut buf = vec![0u8; rw * 8];
        for j in 0..self.config.clauses as usize {
            for (i, word) in self.states[j * rw..(j + 1) * rw].iter().enumerate() {
                buf[i * 8..(i + 1) * 8].copy_from_slice(&word.to_le_bytes());
            }
            w.write_all(&buf[..row_bytes])?;
        }
        for weight in &self.weights {
            w.write_all(&weight.to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    /// Loads a snapshot. The file carries only the structural fields
    /// (C, V, b, N); training parameters are taken from `config`, whose
    /// structural fields must match the file.
    pub fn read_snapshot_with(path: &Path, config: BankConfig) -> Result<Self> {
        let display = path.display().to_string();
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| Error::MalformedFile {
            path: display.clone(),
            detail: "truncated header".into(),
        })?;
        if magic != BANK_MAGIC {
            return Err(Error::BadMagic {
                path: display,
                expected: BANK_MAGIC,
            });
        }
        let mut header = [0u8; 14];
        r.read_exact(&mut header).map_err(|_| Error::MalformedFile {
            path: display.clone(),
            detail: "truncated header".into(),
        })?;
        let version = u16::from_le_bytes([header[0], header[1]]);
        if version != BANK_VERSION {
            return Err(Error::BadVersion {
                path: display,
                found: version,
                expected: BANK_VERSION,
            });
        }
        let clauses = u32::from_le_bytes([header[2], header[3], header[4], header[5]]);
        let features = u32::from_le_bytes([header[6], header[7], header[8], header[9]]);
        let state_bits = u16::from_le_bytes([header[10], header[11]]) as u32;
        let threshold = u16::from_le_bytes([header[12], header[13]]) as u32;
        if (clauses, features, state_bits, threshold)
            != (
                config.clauses,
                config.features,
                config.state_bits,
                config.inclusion_threshold,
            )
        {
            return Err(Error::ConfigMismatch(format!(
                "snapshot {display} has C={clauses} V={features} b={state_bits} N={threshold}, \
                 expected C={} V={} b={} N={}",
                config.clauses, config.features, config.state_bits, config.inclusion_threshold
            )));
        }
        config.validate()?;

        let rw = config.row_words();
        let row_bytes =
            (config.literal_count() as usize * config.state_bits as usize).div_ceil(8);
        let c = config.clauses as usize;
        let mut bank = Self {
            states: vec![0; c * rw],
            masks: vec![0; c * config.mask_row_words()],
            include_counts: vec![0; c],
            weights: vec![0; c],
            config,
        };
        let mut buf = vec![0u8; row_bytes];
        for j in 0..c {
            r.read_exact(&mut buf).map_err(|_| Error::MalformedFile {
                path: display.clone(),
                detail: format!("truncated state row {j}"),
            })?;
            let row = &mut bank.states[j * rw..(j + 1) * rw];
            for (i, byte) in buf.iter().enumerate() {
                row[i / 8] |= (*byte as u64) << ((i % 8) * 8);
            }
        }
        let mut wbuf = [0u8; 4];
        for j in 0..c {
            r.read_exact(&mut wbuf).map_err(|_| Error::MalformedFile {
                path: display.clone(),
                detail: format!("truncated weight {j}"),
            })?;
            bank.weights[j] = i32::from_le_bytes(wbuf);
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing)? != 0 {
            return Err(Error::MalformedFile {
                path: display,
                detail: "trailing bytes after weights".into(),
            });
        }
        bank.rebuild_masks();
        Ok(bank)
    }

    /// Loads a snapshot with default training parameters (T = 1,
    /// s = 1, factor 2); enough for evaluation and embedding
    /// extraction, which only read states and weights.
    pub fn read_snapshot(path: &Path) -> Result<Self> {
        let (clauses, features, state_bits, threshold) = Self::peek_snapshot_dims(path)?;
        let mut config = BankConfig::new(clauses, features, state_bits, threshold);
        config.vote_clip = 1;
        Self::read_snapshot_with(path, config)
    }

    fn peek_snapshot_dims(path: &Path) -> Result<(u32, u32, u32, u32)> {
        let display = path.display().to_string();
        let mut r = BufReader::new(File::open(path)?);
        let mut head = [0u8; 18];
        r.read_exact(&mut head).map_err(|_| Error::MalformedFile {
            path: display.clone(),
            detail: "truncated header".into(),
        })?;
        if head[0..4] != BANK_MAGIC {
            return Err(Error::BadMagic {
                path: display,
                expected: BANK_MAGIC,
            });
        }
        Ok((
            u32::from_le_bytes([head[6], head[7], head[8], head[9]]),
            u32::from_le_bytes([head[10], head[11], head[12], head[13]]),
            u16::from_le_bytes([head[14], head[15]]) as u32,
            u16::from_le_bytes([head[16], head[17]]) as u32,
        ))
    }

    fn rebuild_masks(&mut self) {
        let c = self.config.clauses as usize;
        let l = self.config.literal_count() as usize;
        let n = self.config.inclusion_threshold;
        for j in 0..c {
            let mut count = 0;
            for k in 0..l {
                if self.state(j, k) > n {
                    let mw = self.config.mask_row_words();
                    set_mask_bit(&mut self.masks[j * mw..(j + 1) * mw], self.config.features, k, true);
                    count += 1;
                }
            }
            self.include_counts[j] = count;
        }
    }
}

const BANK_MAGIC: [u8; 4] = *b"TMBK";
const BANK_VERSION: u16 = 1;

/// Per-clause state histogram halves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClauseStateHistogram {
    pub original: Vec<u64>,
    pub negated: Vec<u64>,
}

impl ClauseStateHistogram {
    pub fn mean_original(&self) -> f64 {
        mean_of_histogram(&self.original)
    }

    pub fn mean_negated(&self) -> f64 {
        mean_of_histogram(&self.negated)
    }
}

fn mean_of_histogram(h: &[u64]) -> f64 {
    let total: u64 = h.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let weighted: u64 = h.iter().enumerate().map(|(s, &c)| s as u64 * c).sum();
    weighted as f64 / total as f64
}

#[inline(always)]
fn field_get(words: &[u64], idx: usize, bits: u32) -> u32 {
    let bit = idx * bits as usize;
    let w = bit / 64;
    let off = (bit % 64) as u32;
    let mask = (1u64 << bits) - 1;
    let lo = words[w] >> off;
    let val = if off + bits <= 64 {
        lo
    } else {
        lo | (words[w + 1] << (64 - off))
    };
    (val & mask) as u32
}

#[inline(always)]
fn field_set(words: &mut [u64], idx: usize, bits: u32, value: u32) {
    debug_assert!(value < 1u32.wrapping_shl(bits) || bits == 32);
    let bit = idx * bits as usize;
    let w = bit / 64;
    let off = (bit % 64) as u32;
    let mask = (1u64 << bits) - 1;
    words[w] = (words[w] & !(mask << off)) | ((value as u64) << off);
    if off + bits > 64 {
        let hi = off + bits - 64;
        let hi_mask = (1u64 << hi) - 1;
        words[w + 1] = (words[w + 1] & !hi_mask) | ((value as u64) >> (64 - off));
    }
}

#[inline(always)]
fn set_mask_bit(masks: &mut [u64], features: u32, k: usize, on: bool) {
    let vw = (features as usize).div_ceil(64);
    let (half, i) = if k < features as usize {
        (0, k)
    } else {
        (vw, k - features as usize)
    };
    let word = half + i / 64;
    let bit = 1u64 << (i % 64);
    if on {
        masks[word] |= bit;
    } else {
        masks[word] &= !bit;
    }
}

struct ClauseRow<'a> {
    config: &'a BankConfig,
    states: &'a [u64],
    masks: &'a [u64],
}

impl ClauseRow<'_> {
    #[inline(always)]
    fn state(&self, k: usize) -> u32 {
        assert!(
            k < self.config.literal_count() as usize,
            "literal index {k} out of range"
        );
        field_get(self.states, k, self.config.state_bits)
    }

    fn evaluate(&self, x: &Bitset) -> bool {
        evaluate_masks(self.masks, x)
    }
}

#[inline(always)]
fn evaluate_masks(masks: &[u64], x: &Bitset) -> bool {
    let vw = x.words().len();
    debug_assert_eq!(masks.len(), 2 * vw);
    let (orig, neg) = masks.split_at(vw);
    let mut violation = 0u64;
    for i in 0..vw {
        let xw = x.words()[i];
        // an included original literal needs its bit present, an
        // included negated literal needs it absent
        violation |= (orig[i] & !xw) | (neg[i] & xw);
    }
    violation == 0
}

/// Mutable view of one clause: its packed states, include mask and
/// weight. Disjoint from every other clause's view.
pub(crate) struct ClauseRowMut<'a> {
    pub(crate) index: u32,
    config: &'a BankConfig,
    states: &'a mut [u64],
    masks: &'a mut [u64],
    include_count: &'a mut u32,
    weight: &'a mut i32,
}

impl ClauseRowMut<'_> {
    #[inline(always)]
    pub(crate) fn state(&self, k: usize) -> u32 {
        field_get(self.states, k, self.config.state_bits)
    }

    pub(crate) fn set_state(&mut self, k: usize, value: u32) {
        assert!(
            k < self.config.literal_count() as usize,
            "literal index {k} out of range"
        );
        assert!(value <= self.config.max_state(), "state {value} out of range");
        let n = self.config.inclusion_threshold;
        let was = self.state(k) > n;
        let now = value > n;
        field_set(self.states, k, self.config.state_bits, value);
        if was != now {
            set_mask_bit(self.masks, self.config.features, k, now);
            if now {
                *self.include_count += 1;
            } else {
                *self.include_count -= 1;
            }
        }
    }

    #[inline(always)]
    fn increment(&mut self, k: usize) {
        let s = self.state(k);
        if s < self.config.max_state() {
            self.set_state(k, s + 1);
        }
    }

    #[inline(always)]
    fn decrement(&mut self, k: usize) {
        let s = self.state(k);
        if s > 0 {
            self.set_state(k, s - 1);
        }
    }

    #[inline(always)]
    pub(crate) fn evaluate(&self, x: &Bitset) -> bool {
        evaluate_masks(self.masks, x)
    }

    #[inline(always)]
    pub(crate) fn weight(&self) -> i32 {
        *self.weight
    }

    pub(crate) fn set_weight(&mut self, w: i32) {
        *self.weight = w;
    }

    pub(crate) fn type_ia(&mut self, x: &Bitset, fr: &FeedbackRng) {
        let s = self.config.specificity;
        let reinforce = probability_threshold((s - 1.0) / s);
        let forget = probability_threshold(1.0 / s);
        for k in 0..self.config.literal_count() as usize {
            let draw = fr.draw(DrawKind::TypeIa, self.index, k as u32) as u64;
            if literal_value(x, k) {
                if draw < reinforce {
                    self.increment(k);
                }
            } else if draw < forget {
                self.decrement(k);
            }
        }
    }

    pub(crate) fn type_ib(&mut self, fr: &FeedbackRng) {
        let forget = probability_threshold(1.0 / self.config.specificity);
        for k in 0..self.config.literal_count() as usize {
            if (fr.draw(DrawKind::TypeIb, self.index, k as u32) as u64) < forget {
                self.decrement(k);
            }
        }
    }

    pub(crate) fn type_ii(&mut self, x: &Bitset) {
        let n = self.config.inclusion_threshold;
        for k in 0..self.config.literal_count() as usize {
            if !literal_value(x, k) && self.state(k) <= n {
                self.increment(k);
            }
        }
    }
}
