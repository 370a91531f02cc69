//! The two training procedures.
//!
//! Omni mode follows the original flow: evaluate every clause, reduce
//! the weighted outputs into a clipped class sum, derive one shared
//! update probability, then update. The reduction is a global barrier:
//! no state changes until every clause has been evaluated.
//!
//! Fast mode removes that barrier. Each clause computes its own
//! contribution `r_j = clip(w_j * o_j, -T, T)`, derives a local update
//! probability, and decides its own update, so clause rows proceed
//! independently within an example.
//!
//! Every random draw is keyed by (seed, token, epoch, example, clause,
//! kind, literal), which makes training bit-identical across worker
//! counts and scheduling orders.

use std::io::Write as IoWrite;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rayon::prelude::*;

use crate::bitset::Bitset;
use crate::clause_bank::{BankConfig, ClauseBank, FeedbackRng};
use crate::corpus::{read_example_file, Example};
use crate::error::{Error, Result};
use crate::rng::{sample_update, TokenRng};

/// Which training procedure to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainMode {
    Omni,
    Fast,
}

impl std::str::FromStr for TrainMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "omni" => Ok(TrainMode::Omni),
            "fast" => Ok(TrainMode::Fast),
            other => Err(format!("unknown mode '{other}' (expected 'fast' or 'omni')")),
        }
    }
}

/// Everything that governs a training run.
#[derive(Debug, Clone)]
pub struct Hyperparams {
    pub bank: BankConfig,
    /// Documents OR-combined per example (recorded for provenance; the
    /// accumulation itself happens during example preparation).
    pub accumulation: u32,
    pub epochs: u32,
    pub examples_per_epoch: u32,
    pub mode: TrainMode,
    pub seed: u64,
    pub workers: u32,
    /// Fast mode only: skip feedback and weight updates for clauses
    /// with negative weight. On by default, matching the local-update
    /// procedure as written; negative-weight clauses then stay frozen.
    /// Disable to let every clause train regardless of weight sign.
    pub weight_gate: bool,
}

impl Hyperparams {
    pub fn new(bank: BankConfig, mode: TrainMode, seed: u64) -> Self {
        Self {
            bank,
            accumulation: 24,
            epochs: 4,
            examples_per_epoch: 2000,
            mode,
            seed,
            workers: 1,
            weight_gate: true,
        }
    }

    fn validate(&self) -> Result<()> {
        self.bank.validate()?;
        if self.accumulation < 1 || self.epochs < 1 || self.examples_per_epoch < 1 || self.workers < 1
        {
            return Err(Error::InvalidConfig(
                "accumulation, epochs, examples_per_epoch and workers must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Timing, convergence trace and final weights of one token's training.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub eval_seconds: f64,
    pub update_seconds: f64,
    pub total_seconds: f64,
    /// Mean update probability per epoch (over examples in omni mode,
    /// over example-clause pairs in fast mode).
    pub mean_update_p: Vec<f64>,
    pub final_weights: Vec<i32>,
    /// Number of cross-clause class-sum reductions performed. Zero in
    /// fast mode by construction.
    pub class_sum_reductions: u64,
}

impl TrainReport {
    /// Line-delimited log: one `epoch=` line per epoch, then a `stage`
    /// line with the evaluate/update/total split.
    pub fn write_log(&self, w: &mut impl IoWrite) -> std::io::Result<()> {
        for (e, p) in self.mean_update_p.iter().enumerate() {
            writeln!(w, "epoch={e} mean_update_p={p:.6}")?;
        }
        writeln!(
            w,
            "stage eval_s={:.6} update_s={:.6} total_s={:.6}",
            self.eval_seconds, self.update_seconds, self.total_seconds
        )
    }
}

/// Clipped weighted vote: `clip(sum_j w_j * o_j, -T, T)`.
pub fn class_sum(outputs: &Bitset, weights: &[i32], t: i32) -> i32 {
    assert_eq!(outputs.len(), weights.len(), "outputs/weights length mismatch");
    let sum: i64 = weights
        .iter()
        .enumerate()
        .map(|(j, &w)| if outputs.get(j) { w as i64 } else { 0 })
        .sum();
    sum.clamp(-(t as i64), t as i64) as i32
}

/// Update probability from a clipped vote: `(T - vote) / (factor * T)`
/// for label 1, `(T + vote) / (factor * T)` for label 0, clamped to
/// [0, 1].
pub fn update_probability(vote: i32, t: i32, label: bool, factor: f64) -> f64 {
    debug_assert!(vote.unsigned_abs() <= t.unsigned_abs());
    let t = t as f64;
    let raw = if label {
        (t - vote as f64) / (factor * t)
    } else {
        (t + vote as f64) / (factor * t)
    };
    raw.clamp(0.0, 1.0)
}

/// Local clause contribution: `clip(w_j * o_j, -T, T)`.
pub fn local_contribution(weight: i32, output: bool, t: i32) -> i32 {
    if output {
        weight.clamp(-t, t)
    } else {
        0
    }
}

/// Weight update: a selected, firing clause moves one step toward the
/// label (+1 for label 1, -1 for label 0); anything else is unchanged.
pub fn update_weight(weight: i32, label: bool, output: bool, selected: bool) -> i32 {
    if selected && output {
        if label {
            weight.saturating_add(1)
        } else {
            weight.saturating_sub(1)
        }
    } else {
        weight
    }
}

/// Trains one token with the global class-sum barrier.
pub fn train_token_omni(
    bank: &mut ClauseBank,
    examples: &[Example],
    hp: &Hyperparams,
    token_index: u32,
) -> Result<TrainReport> {
    check_inputs(bank, examples, hp)?;
    let pool = build_pool(hp.workers)?;
    Ok(pool.install(|| train_inner(bank, examples, hp, token_index, TrainMode::Omni)))
}

/// Trains one token with per-clause local updates.
pub fn train_token_fast(
    bank: &mut ClauseBank,
    examples: &[Example],
    hp: &Hyperparams,
    token_index: u32,
) -> Result<TrainReport> {
    check_inputs(bank, examples, hp)?;
    let pool = build_pool(hp.workers)?;
    Ok(pool.install(|| train_inner(bank, examples, hp, token_index, TrainMode::Fast)))
}

/// Dispatches on `hp.mode`.
pub fn train_token(
    bank: &mut ClauseBank,
    examples: &[Example],
    hp: &Hyperparams,
    token_index: u32,
) -> Result<TrainReport> {
    match hp.mode {
        TrainMode::Omni => train_token_omni(bank, examples, hp, token_index),
        TrainMode::Fast => train_token_fast(bank, examples, hp, token_index),
    }
}

/// One trained token: its bank and training report.
#[derive(Debug)]
pub struct TrainedToken {
    pub token: String,
    pub bank: ClauseBank,
    pub report: TrainReport,
}

/// Trains every token from its example file. Tokens run concurrently;
/// each derives its draw stream from (seed, position in the list), so
/// the result is independent of scheduling order.
pub fn train_vocabulary(
    files: &[(String, PathBuf)],
    hp: &Hyperparams,
) -> Result<Vec<TrainedToken>> {
    hp.validate()?;
    let pool = build_pool(hp.workers)?;
    pool.install(|| {
        files
            .par_iter()
            .enumerate()
            .map(|(idx, (token, path))| {
                if !path.exists() {
                    return Err(Error::MissingExampleFile {
                        token: token.clone(),
                        path: path.display().to_string(),
                    });
                }
                let (header, examples) = read_example_file(path)?;
                if header.feature_count != hp.bank.features {
                    return Err(Error::FeatureCountMismatch {
                        path: path.display().to_string(),
                        found: header.feature_count,
                        expected: hp.bank.features,
                    });
                }
                let rng = TokenRng::new(hp.seed, idx as u32);
                let mut bank = ClauseBank::new(hp.bank.clone(), &rng)?;
                check_inputs(&bank, &examples, hp)?;
                let report = train_inner(&mut bank, &examples, hp, idx as u32, hp.mode);
                Ok(TrainedToken {
                    token: token.clone(),
                    bank,
                    report,
                })
            })
            .collect()
    })
}

fn check_inputs(bank: &ClauseBank, examples: &[Example], hp: &Hyperparams) -> Result<()> {
    hp.validate()?;
    if bank.config() != &hp.bank {
        return Err(Error::ConfigMismatch(
            "bank config differs from hyperparameters".into(),
        ));
    }
    if examples.is_empty() {
        return Err(Error::ConfigMismatch("no training examples".into()));
    }
    if let Some(ex) = examples.iter().find(|e| e.input.len() != hp.bank.features as usize) {
        return Err(Error::DimensionMismatch(format!(
            "example has {} features, bank expects {}",
            ex.input.len(),
            hp.bank.features
        )));
    }
    Ok(())
}

fn build_pool(workers: u32) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers as usize)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))
}

fn train_inner(
    bank: &mut ClauseBank,
    examples: &[Example],
    hp: &Hyperparams,
    token_index: u32,
    mode: TrainMode,
) -> TrainReport {
    let start = Instant::now();
    let rng = TokenRng::new(hp.seed, token_index);
    let clauses = hp.bank.clauses as usize;
    let t = hp.bank.vote_clip;
    let factor = hp.bank.scaling_factor;
    let chunk = clauses.div_ceil(hp.workers as usize).max(1);
    let chunk_count = clauses.div_ceil(chunk) as u32;

    let mut rows = bank.rows_mut();
    let mut outputs = vec![false; clauses];
    let mut probs = vec![0.0f64; clauses];
    let mut mean_update_p = Vec::with_capacity(hp.epochs as usize);
    let mut class_sum_reductions = 0u64;
    let mut eval_ns = 0u64;
    let mut update_ns = 0u64;
    let worker_eval_ns = AtomicU64::new(0);
    let worker_update_ns = AtomicU64::new(0);

    for epoch in 0..hp.epochs {
        let mut p_sum = 0.0f64;
        for i in 0..hp.examples_per_epoch {
            let example =
                &examples[(epoch as usize * hp.examples_per_epoch as usize + i as usize) % examples.len()];
            let x = &example.input;
            let y = example.label;
            let fr = FeedbackRng {
                rng,
                epoch,
                example: i,
            };

            match mode {
                TrainMode::Omni => {
                    // stage 1: evaluate every clause
                    let t0 = Instant::now();
                    rows.par_chunks(chunk)
                        .zip(outputs.par_chunks_mut(chunk))
                        .for_each(|(row_chunk, out_chunk)| {
                            for (row, out) in row_chunk.iter().zip(out_chunk) {
                                *out = row.evaluate(x);
                            }
                        });
                    let t1 = Instant::now();
                    // global barrier: the weighted reduction over all
                    // clause outputs
                    let mut sum = 0i64;
                    for (row, &o) in rows.iter().zip(&outputs) {
                        if o {
                            sum += row.weight() as i64;
                        }
                    }
                    class_sum_reductions += 1;
                    let vote = sum.clamp(-(t as i64), t as i64) as i32;
                    let p = update_probability(vote, t, y, factor);
                    p_sum += p;
                    // stage 2: update every clause under the shared p
                    let t2 = Instant::now();
                    rows.par_chunks_mut(chunk)
                        .zip(outputs.par_chunks(chunk))
                        .for_each(|(row_chunk, out_chunk)| {
                            for (row, &o) in row_chunk.iter_mut().zip(out_chunk) {
                                let selected =
                                    sample_update(p, rng.select_draw(epoch, i, row.index));
                                if selected {
                                    apply_feedback(row, y, o, x, &fr);
                                }
                                row.set_weight(update_weight(row.weight(), y, o, selected));
                            }
                        });
                    let t3 = Instant::now();
                    eval_ns += (t1 - t0).as_nanos() as u64;
                    update_ns += (t3 - t2).as_nanos() as u64;
                }
                TrainMode::Fast => {
                    // single dispatch: each worker evaluates and updates
                    // its clause rows with no cross-clause exchange
                    rows.par_chunks_mut(chunk)
                        .zip(outputs.par_chunks_mut(chunk))
                        .zip(probs.par_chunks_mut(chunk))
                        .for_each(|((row_chunk, out_chunk), p_chunk)| {
                            let t0 = Instant::now();
                            for (row, out) in row_chunk.iter_mut().zip(out_chunk.iter_mut()) {
                                *out = row.evaluate(x);
                            }
                            let t1 = Instant::now();
                            for (row, (&o, p_slot)) in row_chunk
                                .iter_mut()
                                .zip(out_chunk.iter().zip(p_chunk.iter_mut()))
                            {
                                let r = local_contribution(row.weight(), o, t);
                                let p = update_probability(r, t, y, factor);
                                *p_slot = p;
                                let selected =
                                    sample_update(p, rng.select_draw(epoch, i, row.index));
                                if selected && (!hp.weight_gate || row.weight() >= 0) {
                                    apply_feedback(row, y, o, x, &fr);
                                    row.set_weight(update_weight(row.weight(), y, o, true));
                                }
                            }
                            let t2 = Instant::now();
                            worker_eval_ns
                                .fetch_add((t1 - t0).as_nanos() as u64, Ordering::Relaxed);
                            worker_update_ns
                                .fetch_add((t2 - t1).as_nanos() as u64, Ordering::Relaxed);
                        });
                    // deterministic trace accumulation, fixed clause order
                    p_sum += probs.iter().sum::<f64>();
                }
            }
        }
        let denom = match mode {
            TrainMode::Omni => hp.examples_per_epoch as f64,
            TrainMode::Fast => hp.examples_per_epoch as f64 * clauses as f64,
        };
        mean_update_p.push(p_sum / denom);
    }

    if mode == TrainMode::Fast {
        // per-worker stage times averaged over the chunk tasks so the
        // stage split stays below total wall time
        eval_ns = worker_eval_ns.load(Ordering::Relaxed) / chunk_count as u64;
        update_ns = worker_update_ns.load(Ordering::Relaxed) / chunk_count as u64;
    }

    let final_weights = rows.iter().map(|r| r.weight()).collect();
    drop(rows);

    TrainReport {
        eval_seconds: eval_ns as f64 / 1e9,
        update_seconds: update_ns as f64 / 1e9,
        total_seconds: start.elapsed().as_secs_f64(),
        mean_update_p,
        final_weights,
        class_sum_reductions,
    }
}

#[inline]
fn apply_feedback(
    row: &mut crate::clause_bank::ClauseRowMut<'_>,
    label: bool,
    output: bool,
    x: &Bitset,
    fr: &FeedbackRng,
) {
    match (label, output) {
        (true, true) => row.type_ia(x, fr),
        (true, false) => row.type_ib(fr),
        (false, true) => row.type_ii(x),
        (false, false) => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DrawKind;

    fn bank_config(c: u32, v: u32) -> BankConfig {
        let mut cfg = BankConfig::new(c, v, 8, 127);
        cfg.specificity = 2.0;
        cfg.vote_clip = 100;
        cfg
    }

    fn synthetic_examples(v: usize, count: usize, seed: u64) -> Vec<Example> {
        // label 1: features {0, 1} plus noise; label 0: features {2, 3}
        // plus noise
        let rng = TokenRng::new(seed, 0);
        (0..count)
            .map(|i| {
                let label = rng.draw(0, i as u32, 0, DrawKind::Label, 0) & 1 == 1;
                let mut input = Bitset::new(v);
                if label {
                    input.set(0, true);
                    input.set(1, true);
                } else {
                    input.set(2, true);
                    input.set(3, true);
                }
                let noise = rng.draw(0, i as u32, 0, DrawKind::Pick, 0) as usize % v;
                if noise > 3 {
                    input.set(noise, true);
                }
                Example { label, input }
            })
            .collect()
    }

    #[test]
    fn class_sum_basics() {
        let w = [1, -1, 1];
        assert_eq!(class_sum(&Bitset::new(3), &w, 10), 0);
        assert_eq!(class_sum(&Bitset::from_indices(3, &[0, 1, 2]), &w, 10), 1);
        // clipping
        let big: Vec<i32> = vec![25_000];
        assert_eq!(
            class_sum(&Bitset::from_indices(1, &[0]), &big, 20_000),
            20_000
        );
        let neg: Vec<i32> = vec![-25_000];
        assert_eq!(
            class_sum(&Bitset::from_indices(1, &[0]), &neg, 20_000),
            -20_000
        );
    }

    #[test]
    fn update_probability_anchor_points() {
        for t in [1, 100, 20_000] {
            assert_eq!(update_probability(0, t, true, 2.0), 0.5);
            assert_eq!(update_probability(0, t, false, 2.0), 0.5);
            assert_eq!(update_probability(t, t, true, 2.0), 0.0);
            assert_eq!(update_probability(-t, t, true, 2.0), 1.0);
            assert_eq!(update_probability(t, t, false, 2.0), 1.0);
            assert_eq!(update_probability(0, t, true, 1.0), 1.0);
        }
        // clamping for factors below 2
        assert_eq!(update_probability(-100, 100, true, 0.5), 1.0);
    }

    #[test]
    fn update_probability_monotonicity() {
        let t = 50;
        let mut prev_y1 = f64::INFINITY;
        let mut prev_y0 = f64::NEG_INFINITY;
        for vote in -t..=t {
            let p1 = update_probability(vote, t, true, 2.0);
            let p0 = update_probability(vote, t, false, 2.0);
            assert!(p1 <= prev_y1, "non-increasing in vote for label 1");
            assert!(p0 >= prev_y0, "non-decreasing in vote for label 0");
            assert!((0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&p0));
            prev_y1 = p1;
            prev_y0 = p0;
        }
    }

    #[test]
    fn local_contribution_matches_clip() {
        assert_eq!(local_contribution(123, false, 20_000), 0);
        assert_eq!(local_contribution(1, true, 20_000), 1);
        assert_eq!(local_contribution(-30_000, true, 20_000), -20_000);
    }

    #[test]
    fn update_weight_rule() {
        assert_eq!(update_weight(5, true, false, true), 5);
        assert_eq!(update_weight(5, true, true, true), 6);
        assert_eq!(update_weight(5, false, true, true), 4);
        assert_eq!(update_weight(5, true, true, false), 5);
    }

    #[test]
    fn omni_noop_on_silent_bank() {
        // all clauses forced non-firing (include an impossible literal),
        // label 0 everywhere: only the no-op branch runs
        let cfg = bank_config(4, 4);
        let rng = TokenRng::new(5, 0);
        let mut bank = ClauseBank::new(cfg.clone(), &rng).unwrap();
        for j in 0..4 {
            bank.set_state(j, 0, 200); // include x_0
            bank.set_state(j, 4, 200); // include not x_0: contradiction
        }
        let before = bank.clone();
        let examples: Vec<Example> = (0..16)
            .map(|_| Example {
                label: false,
                input: Bitset::new(4),
            })
            .collect();
        let mut hp = Hyperparams::new(cfg, TrainMode::Omni, 5);
        hp.epochs = 2;
        hp.examples_per_epoch = 16;
        let report = train_token_omni(&mut bank, &examples, &hp, 0).unwrap();
        assert_eq!(bank, before, "no state may change");
        // class_sum = 0 -> p = 0.5 for every example
        for p in report.mean_update_p {
            assert!((p - 0.5).abs() < 1e-12);
        }
    }

    /// Positive-label stream: the clause weight can only grow, so the
    /// single-clause fast/omni equivalence premise (w >= 0) holds for
    /// the whole run.
    fn positive_label_examples(v: usize, count: usize, seed: u64) -> Vec<Example> {
        let rng = TokenRng::new(seed, 7);
        (0..count)
            .map(|i| {
                let mut input = Bitset::new(v);
                input.set(0, true);
                input.set(1, true);
                for draw in 0..2 {
                    let f = rng.draw(0, i as u32, 0, DrawKind::Pick, draw) as usize % (v - 2);
                    input.set(2 + f, true);
                }
                Example { label: true, input }
            })
            .collect()
    }

    #[test]
    fn single_clause_modes_agree() {
        for seed in 0..5 {
            let cfg = bank_config(1, 8);
            let rng = TokenRng::new(seed, 0);
            let bank0 = ClauseBank::new(cfg.clone(), &rng).unwrap();
            let examples = positive_label_examples(8, 100, seed ^ 0x55);

            let mut omni_bank = bank0.clone();
            let mut hp = Hyperparams::new(cfg.clone(), TrainMode::Omni, seed);
            hp.epochs = 2;
            hp.examples_per_epoch = 100;
            train_token_omni(&mut omni_bank, &examples, &hp, 0).unwrap();

            let mut fast_bank = bank0.clone();
            hp.mode = TrainMode::Fast;
            train_token_fast(&mut fast_bank, &examples, &hp, 0).unwrap();

            assert_eq!(omni_bank, fast_bank, "seed {seed}");
            assert!(omni_bank.weight(0) >= 1, "premise: weight stays positive");
        }
    }

    #[test]
    fn single_clause_modes_agree_with_mixed_labels_from_high_weight() {
        // covers the Type II dispatch path of the equivalence; a high
        // starting weight keeps the fast-mode gate from ever engaging
        for seed in 0..5 {
            let cfg = bank_config(1, 8);
            let rng = TokenRng::new(seed, 0);
            let mut bank0 = ClauseBank::new(cfg.clone(), &rng).unwrap();
            bank0.set_weight(0, 100);
            let examples = synthetic_examples(8, 100, seed ^ 0x55);

            let mut omni_bank = bank0.clone();
            let mut hp = Hyperparams::new(cfg.clone(), TrainMode::Omni, seed);
            hp.epochs = 2;
            hp.examples_per_epoch = 100;
            train_token_omni(&mut omni_bank, &examples, &hp, 0).unwrap();

            let mut fast_bank = bank0;
            hp.mode = TrainMode::Fast;
            train_token_fast(&mut fast_bank, &examples, &hp, 0).unwrap();

            assert_eq!(omni_bank, fast_bank, "seed {seed}");
            assert!(omni_bank.weight(0) >= 0, "premise: weight stayed non-negative");
        }
    }

    #[test]
    fn fast_gate_freezes_negative_weights() {
        let cfg = bank_config(4, 6);
        let rng = TokenRng::new(13, 0);
        let mut bank = ClauseBank::new(cfg.clone(), &rng).unwrap();
        for j in 0..4 {
            bank.set_weight(j, -1);
        }
        let before = bank.clone();
        let examples = synthetic_examples(6, 64, 99);
        let mut hp = Hyperparams::new(cfg, TrainMode::Fast, 13);
        hp.epochs = 3;
        hp.examples_per_epoch = 64;
        train_token_fast(&mut bank, &examples, &hp, 0).unwrap();
        assert_eq!(bank, before, "gate must block all feedback and weight change");
    }

    #[test]
    fn fast_performs_no_class_sum_reductions() {
        let cfg = bank_config(8, 6);
        let rng = TokenRng::new(3, 0);
        let mut bank = ClauseBank::new(cfg.clone(), &rng).unwrap();
        let examples = synthetic_examples(6, 32, 7);
        let mut hp = Hyperparams::new(cfg, TrainMode::Fast, 3);
        hp.epochs = 1;
        hp.examples_per_epoch = 32;
        let report = train_token_fast(&mut bank, &examples, &hp, 0).unwrap();
        assert_eq!(report.class_sum_reductions, 0);

        let mut hp_omni = hp.clone();
        hp_omni.mode = TrainMode::Omni;
        let rng = TokenRng::new(3, 0);
        let mut bank = ClauseBank::new(hp_omni.bank.clone(), &rng).unwrap();
        let report = train_token_omni(&mut bank, &examples, &hp_omni, 0).unwrap();
        assert_eq!(report.class_sum_reductions, 32);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let cfg = bank_config(10, 12);
        let examples = synthetic_examples(12, 128, 21);
        let mut reference: Option<ClauseBank> = None;
        for workers in [1u32, 2, 8] {
            let rng = TokenRng::new(77, 0);
            let mut bank = ClauseBank::new(cfg.clone(), &rng).unwrap();
            let mut hp = Hyperparams::new(cfg.clone(), TrainMode::Fast, 77);
            hp.epochs = 2;
            hp.examples_per_epoch = 128;
            hp.workers = workers;
            train_token_fast(&mut bank, &examples, &hp, 0).unwrap();
            match &reference {
                None => reference = Some(bank),
                Some(r) => assert_eq!(r, &bank, "workers={workers}"),
            }
        }
    }

    #[test]
    fn omni_update_p_starts_near_half_and_decreases() {
        // learnable task; the clip bound is sized so the vote saturates
        // within a few epochs and the update rate falls away from 1/2
        let mut cfg = bank_config(16, 8);
        cfg.vote_clip = 400;
        let rng = TokenRng::new(1, 0);
        let mut bank = ClauseBank::new(cfg.clone(), &rng).unwrap();
        let examples = synthetic_examples(8, 200, 3);
        let mut hp = Hyperparams::new(cfg, TrainMode::Omni, 1);
        hp.epochs = 10;
        hp.examples_per_epoch = 100;
        let report = train_token_omni(&mut bank, &examples, &hp, 0).unwrap();
        let trace = &report.mean_update_p;
        assert!(
            (trace[0] - 0.5).abs() < 0.05,
            "epoch-0 mean p = {}",
            trace[0]
        );
        assert!(
            trace.last().unwrap() < &(trace[0] - 0.05),
            "trace must decrease: {trace:?}"
        );
    }

    #[test]
    fn report_invariants() {
        let cfg = bank_config(4, 4);
        let rng = TokenRng::new(2, 0);
        let mut bank = ClauseBank::new(cfg.clone(), &rng).unwrap();
        let examples = synthetic_examples(4, 50, 5);
        let mut hp = Hyperparams::new(cfg, TrainMode::Fast, 2);
        hp.epochs = 1;
        hp.examples_per_epoch = 50;
        hp.workers = 2;
        let report = train_token_fast(&mut bank, &examples, &hp, 0).unwrap();
        assert!(report.eval_seconds >= 0.0 && report.update_seconds >= 0.0);
        assert!(report.total_seconds >= report.eval_seconds + report.update_seconds);
        assert_eq!(report.final_weights.len(), 4);
        assert_eq!(report.final_weights, bank.weights());
    }

    #[test]
    fn train_vocabulary_is_schedule_independent() {
        let dir = tempfile::tempdir().unwrap();
        let mut files = Vec::new();
        for t in 0..3 {
            let examples = synthetic_examples(6, 64, t as u64 + 40);
            let path = dir.path().join(format!("tok{t}.tmex"));
            crate::corpus::write_example_file(
                &path,
                &crate::corpus::ExampleHeader {
                    feature_count: 6,
                    example_count: 64,
                    accumulation: 1,
                    target_index: t,
                },
                &examples,
            )
            .unwrap();
            files.push((format!("tok{t}"), path));
        }
        let mut hp = Hyperparams::new(bank_config(4, 6), TrainMode::Fast, 11);
        hp.epochs = 2;
        hp.examples_per_epoch = 64;

        hp.workers = 1;
        let sequential = train_vocabulary(&files, &hp).unwrap();
        hp.workers = 4;
        let concurrent = train_vocabulary(&files, &hp).unwrap();
        assert_eq!(sequential.len(), 3);
        for (a, b) in sequential.iter().zip(&concurrent) {
            assert_eq!(a.token, b.token);
            assert_eq!(a.bank, b.bank);
        }
    }

    #[test]
    fn weight_grows_monotonically_when_positive_examples_fire() {
        // token whose positive examples reliably fire the clause: the
        // per-epoch weight trajectory only ever steps toward the label
        let cfg = bank_config(1, 8);
        let examples = positive_label_examples(8, 100, 9);
        let mut trajectory = Vec::new();
        for epochs in 1..=8u32 {
            let rng = TokenRng::new(15, 0);
            let mut bank = ClauseBank::new(cfg.clone(), &rng).unwrap();
            let mut hp = Hyperparams::new(cfg.clone(), TrainMode::Fast, 15);
            hp.epochs = epochs;
            hp.examples_per_epoch = 100;
            train_token_fast(&mut bank, &examples, &hp, 0).unwrap();
            trajectory.push(bank.weight(0));
        }
        assert!(
            trajectory.windows(2).all(|w| w[1] >= w[0]),
            "weight must not decrease: {trajectory:?}"
        );
        assert!(trajectory.last().unwrap() > &1, "weight must actually grow");
    }

    #[test]
    fn train_vocabulary_single_token_equals_direct_call() {
        let dir = tempfile::tempdir().unwrap();
        let examples = synthetic_examples(6, 64, 3);
        let path = dir.path().join("tok.tmex");
        crate::corpus::write_example_file(
            &path,
            &crate::corpus::ExampleHeader {
                feature_count: 6,
                example_count: 64,
                accumulation: 1,
                target_index: 0,
            },
            &examples,
        )
        .unwrap();
        let mut hp = Hyperparams::new(bank_config(4, 6), TrainMode::Fast, 8);
        hp.epochs = 2;
        hp.examples_per_epoch = 64;
        let trained = train_vocabulary(&[("tok".to_string(), path)], &hp).unwrap();

        let rng = TokenRng::new(8, 0);
        let mut direct = ClauseBank::new(hp.bank.clone(), &rng).unwrap();
        train_token_fast(&mut direct, &examples, &hp, 0).unwrap();
        assert_eq!(trained[0].bank, direct);
    }

    #[test]
    fn train_vocabulary_rejects_feature_count_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let examples = synthetic_examples(6, 8, 3);
        let path = dir.path().join("tok.tmex");
        crate::corpus::write_example_file(
            &path,
            &crate::corpus::ExampleHeader {
                feature_count: 6,
                example_count: 8,
                accumulation: 1,
                target_index: 0,
            },
            &examples,
        )
        .unwrap();
        let hp = Hyperparams::new(bank_config(4, 7), TrainMode::Fast, 8);
        assert!(matches!(
            train_vocabulary(&[("tok".to_string(), path)], &hp).unwrap_err(),
            Error::FeatureCountMismatch { .. }
        ));
    }

    #[test]
    fn train_vocabulary_missing_file_error() {
        let hp = Hyperparams::new(bank_config(2, 4), TrainMode::Fast, 1);
        let files = vec![("ghost".to_string(), PathBuf::from("/nonexistent/g.tmex"))];
        assert!(matches!(
            train_vocabulary(&files, &hp).unwrap_err(),
            Error::MissingExampleFile { .. }
        ));
    }

    #[test]
    fn config_mismatch_is_rejected() {
        let cfg = bank_config(2, 4);
        let rng = TokenRng::new(0, 0);
        let mut bank = ClauseBank::new(cfg, &rng).unwrap();
        let hp = Hyperparams::new(bank_config(2, 5), TrainMode::Omni, 0);
        let examples = synthetic_examples(4, 4, 1);
        assert!(matches!(
            train_token_omni(&mut bank, &examples, &hp, 0).unwrap_err(),
            Error::ConfigMismatch(_)
        ));
    }
}
