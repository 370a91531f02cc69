//! Embedding-quality benchmarks (classification, word similarity,
//! cluster export) and the two-stage training-time benchmark.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::clause_bank::ClauseBank;
use crate::corpus::Example;
use crate::embedding::{cosine_similarity, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::trainer::{class_sum, train_vocabulary, Hyperparams, TrainMode};

/// Human-scored word pairs.
#[derive(Debug, Clone)]
pub struct SimilarityDataset {
    pub name: String,
    pub pairs: Vec<(String, String, f64)>,
}

impl SimilarityDataset {
    pub fn distinct_tokens(&self) -> usize {
        let mut tokens: Vec<&str> = self
            .pairs
            .iter()
            .flat_map(|(a, b, _)| [a.as_str(), b.as_str()])
            .collect();
        tokens.sort_unstable();
        tokens.dedup();
        tokens.len()
    }
}

/// Average ranks (1-based) with ties receiving the mean of their rank
/// span.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 share the average
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn check_correlation_input(xs: &[f64], ys: &[f64], what: &'static str) -> Result<()> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch(format!(
            "{what}: {} vs {} values",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::DegenerateInput {
            what,
            detail: format!("need at least 2 observations, got {}", xs.len()),
        });
    }
    for (side, v) in [("x", xs), ("y", ys)] {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateInput {
                what,
                detail: format!("non-finite value in {side}"),
            });
        }
        if v.iter().all(|&x| x == v[0]) {
            return Err(Error::DegenerateInput {
                what,
                detail: format!("all {side} values are equal"),
            });
        }
    }
    Ok(())
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_correlation_input(xs, ys, "spearman")?;
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        let dx = a - mx;
        let dy = b - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    Ok(cov / (vx * vy).sqrt())
}

/// Counts inversions in `values` by merge sort.
fn count_inversions(values: &mut [f64]) -> u64 {
    let n = values.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let (left, right) = values.split_at_mut(mid);
    let mut inversions = count_inversions(left) + count_inversions(right);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, 0);
    while i < left.len() && j < right.len() {
        if left[i] <= right[j] {
            merged.push(left[i]);
            i += 1;
        } else {
            inversions += (left.len() - i) as u64;
            merged.push(right[j]);
            j += 1;
        }
    }
    merged.extend_from_slice(&left[i..]);
    merged.extend_from_slice(&right[j..]);
    values.copy_from_slice(&merged);
    inversions
}

fn tied_pair_count<K: PartialEq>(sorted: &[K]) -> u64 {
    let mut total = 0u64;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let run = (j - i + 1) as u64;
        total += run * (run - 1) / 2;
        i = j + 1;
    }
    total
}

/// Kendall tau-b via sorting and inversion counting:
/// `(C - D) / sqrt((n0 - t_x)(n0 - t_y))` with tie corrections.
pub fn kendall_tau_b(xs: &[f64], ys: &[f64]) -> Result<f64> {
    check_correlation_input(xs, ys, "kendall")?;
    let n = xs.len() as u64;
    let n0 = n * (n - 1) / 2;

    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| {
        xs[a].partial_cmp(&xs[b])
            .unwrap()
            .then(ys[a].partial_cmp(&ys[b]).unwrap())
    });
    let sorted_x: Vec<f64> = order.iter().map(|&i| xs[i]).collect();
    let mut sorted_y: Vec<f64> = order.iter().map(|&i| ys[i]).collect();
    let joint: Vec<(f64, f64)> = sorted_x.iter().copied().zip(sorted_y.iter().copied()).collect();

    let t_x = tied_pair_count(&sorted_x) as i64;
    let n3 = tied_pair_count(&joint) as i64;
    let discordant = count_inversions(&mut sorted_y) as i64;
    // sorted_y is now globally sorted; reuse it for the y tie count
    let t_y = tied_pair_count(&sorted_y) as i64;

    let n0 = n0 as i64;
    let strict = n0 - t_x - t_y + n3; // pairs strictly ordered in both
    let concordant = strict - discordant;
    let numer = (concordant - discordant) as f64;
    let denom = (((n0 - t_x) as f64) * ((n0 - t_y) as f64)).sqrt();
    Ok(numer / denom)
}

/// Parses `word1 <sep> word2 <sep> score` lines, separator auto-detected
/// per line from tab, comma, semicolon or whitespace. `#` lines are
/// comments; words are lowercased.
pub fn load_similarity_dataset(path: &Path) -> Result<SimilarityDataset> {
    let display = path.display().to_string();
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display.clone());
    let reader = BufReader::new(File::open(path)?);
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = if trimmed.contains('\t') {
            trimmed.split('\t').map(str::trim).collect()
        } else if trimmed.contains(',') {
            trimmed.split(',').map(str::trim).collect()
        } else if trimmed.contains(';') {
            trimmed.split(';').map(str::trim).collect()
        } else {
            trimmed.split_whitespace().collect()
        };
        if fields.len() != 3 {
            return Err(Error::MalformedLine {
                path: display,
                line: i + 1,
                detail: format!("expected 'word1 word2 score', found {} fields", fields.len()),
            });
        }
        let score: f64 = fields[2].parse().map_err(|_| Error::MalformedLine {
            path: display.clone(),
            line: i + 1,
            detail: format!("bad score '{}'", fields[2]),
        })?;
        if !score.is_finite() {
            return Err(Error::MalformedLine {
                path: display,
                line: i + 1,
                detail: "score is not finite".into(),
            });
        }
        pairs.push((fields[0].to_lowercase(), fields[1].to_lowercase(), score));
    }
    if pairs.is_empty() {
        return Err(Error::EmptyDataset { path: display });
    }
    Ok(SimilarityDataset { name, pairs })
}

/// Outcome of scoring a dataset against an embedding matrix.
#[derive(Debug, Clone)]
pub struct SimilarityReport {
    pub rho: f64,
    pub tau: f64,
    pub covered_pairs: usize,
    pub skipped_pairs: usize,
}

/// Scores each covered pair by embedding cosine and correlates with the
/// human scores. Pairs with a missing token are skipped and counted;
/// pairs whose embedding is the zero vector cannot be scored and are
/// skipped the same way.
pub fn eval_similarity(
    embeddings: &EmbeddingMatrix,
    dataset: &SimilarityDataset,
) -> Result<SimilarityReport> {
    let mut human = Vec::new();
    let mut model = Vec::new();
    let mut skipped = 0usize;
    for (a, b, score) in &dataset.pairs {
        let (ea, eb) = match (embeddings.get(a), embeddings.get(b)) {
            (Some(ea), Some(eb)) => (ea, eb),
            _ => {
                skipped += 1;
                continue;
            }
        };
        match cosine_similarity(ea, eb) {
            Ok(cos) => {
                human.push(*score);
                model.push(cos);
            }
            Err(Error::ZeroVector { .. }) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    if human.len() < 2 {
        return Err(Error::InsufficientCoverage {
            covered: human.len(),
            skipped,
        });
    }
    Ok(SimilarityReport {
        rho: spearman(&model, &human)?,
        tau: kendall_tau_b(&model, &human)?,
        covered_pairs: human.len(),
        skipped_pairs: skipped,
    })
}

/// Per-example predictions: 1 iff the clipped weighted vote is strictly
/// positive, with empty clauses voting 0.
pub fn classify_documents(bank: &ClauseBank, examples: &[Example]) -> Result<Vec<bool>> {
    let v = bank.config().features as usize;
    let t = bank.config().vote_clip;
    examples
        .iter()
        .map(|ex| {
            if ex.input.len() != v {
                return Err(Error::DimensionMismatch(format!(
                    "example has {} features, bank expects {v}",
                    ex.input.len()
                )));
            }
            let outputs = bank.evaluate_all_inference(&ex.input);
            Ok(class_sum(&outputs, bank.weights(), t) > 0)
        })
        .collect()
}

/// Standard binary classification metrics with positive class = 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

pub fn precision_recall_f1(predictions: &[bool], labels: &[bool]) -> ClassificationMetrics {
    assert_eq!(predictions.len(), labels.len(), "length mismatch");
    assert!(!predictions.is_empty(), "need at least one example");
    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0, 0, 0);
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    ClassificationMetrics {
        precision,
        recall,
        f1,
        tp,
        fp,
        fn_,
        tn,
    }
}

/// Cluster export outcome: the separation score and its two components.
#[derive(Debug, Clone)]
pub struct ClusterReport {
    /// Mean cosine over same-group pairs; absent when no group has two
    /// scorable tokens.
    pub intra_mean: Option<f64>,
    /// Mean cosine over cross-group pairs; absent with fewer than two
    /// groups of scorable tokens.
    pub inter_mean: Option<f64>,
    /// intra minus inter, with absent terms contributing zero.
    pub separation: f64,
    /// Listed tokens with no embedding (reported, not fatal).
    pub missing: Vec<String>,
    pub exported_rows: usize,
}

/// Writes a tsv of (token, group, v0..v{V-1}) rows for external
/// projection and computes the group-separation score: mean intra-group
/// cosine minus mean inter-group cosine.
pub fn export_cluster_vectors(
    embeddings: &EmbeddingMatrix,
    groups: &[(String, Vec<String>)],
    path: &Path,
) -> Result<ClusterReport> {
    let mut w = BufWriter::new(File::create(path)?);
    write!(w, "token\tgroup")?;
    for i in 0..embeddings.features() {
        write!(w, "\tv{i}")?;
    }
    writeln!(w)?;

    let mut missing = Vec::new();
    let mut rows: Vec<(usize, &crate::embedding::EmbeddingVector)> = Vec::new();
    let mut exported = 0usize;
    for (gi, (group, tokens)) in groups.iter().enumerate() {
        for token in tokens {
            match embeddings.get(token) {
                Some(e) => {
                    write!(w, "{token}\t{group}")?;
                    for value in &e.values {
                        write!(w, "\t{value}")?;
                    }
                    writeln!(w)?;
                    exported += 1;
                    rows.push((gi, e));
                }
                None => missing.push(token.clone()),
            }
        }
    }
    w.flush()?;

    let mut intra = (0.0f64, 0usize);
    let mut inter = (0.0f64, 0usize);
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let cos = match cosine_similarity(rows[i].1, rows[j].1) {
                Ok(c) => c,
                Err(Error::ZeroVector { .. }) => continue,
                Err(e) => return Err(e),
            };
            let slot = if rows[i].0 == rows[j].0 { &mut intra } else { &mut inter };
            slot.0 += cos;
            slot.1 += 1;
        }
    }
    let mean = |(sum, count): (f64, usize)| if count == 0 { None } else { Some(sum / count as f64) };
    let intra_mean = mean(intra);
    let inter_mean = mean(inter);
    Ok(ClusterReport {
        intra_mean,
        inter_mean,
        separation: intra_mean.unwrap_or(0.0) - inter_mean.unwrap_or(0.0),
        missing,
        exported_rows: exported,
    })
}

/// Wall-clock seconds of one benchmark run, split by stage. `total_s`
/// sums the per-token training totals; `wall_s` is the elapsed time of
/// the whole run.
#[derive(Debug, Clone, Copy, Default)]
pub struct StageSeconds {
    pub eval_s: f64,
    pub update_s: f64,
    pub total_s: f64,
    pub wall_s: f64,
}

/// Timings over repeated runs of the same workload.
#[derive(Debug, Clone)]
pub struct BenchTimings {
    pub mode: TrainMode,
    pub runs: Vec<StageSeconds>,
    pub mean: StageSeconds,
    pub std: StageSeconds,
}

fn summarize(mode: TrainMode, runs: Vec<StageSeconds>) -> BenchTimings {
    let n = runs.len() as f64;
    let mean_of = |f: fn(&StageSeconds) -> f64| runs.iter().map(f).sum::<f64>() / n;
    let mean = StageSeconds {
        eval_s: mean_of(|r| r.eval_s),
        update_s: mean_of(|r| r.update_s),
        total_s: mean_of(|r| r.total_s),
        wall_s: mean_of(|r| r.wall_s),
    };
    let std_of = |f: fn(&StageSeconds) -> f64, m: f64| {
        (runs.iter().map(|r| (f(r) - m).powi(2)).sum::<f64>() / n).sqrt()
    };
    let std = StageSeconds {
        eval_s: std_of(|r| r.eval_s, mean.eval_s),
        update_s: std_of(|r| r.update_s, mean.update_s),
        total_s: std_of(|r| r.total_s, mean.total_s),
        wall_s: std_of(|r| r.wall_s, mean.wall_s),
    };
    BenchTimings {
        mode,
        runs,
        mean,
        std,
    }
}

/// Times training only: examples come from pre-generated files, and the
/// reported stages are the per-token evaluate/update splits. Returns
/// the timings and the banks of the final run for downstream embedding
/// evaluation.
pub fn benchmark_training(
    hp: &Hyperparams,
    files: &[(String, PathBuf)],
    runs: usize,
) -> Result<(BenchTimings, Vec<crate::trainer::TrainedToken>)> {
    assert!(runs >= 1, "runs must be >= 1");
    let mut rows = Vec::with_capacity(runs);
    let mut last = None;
    for _ in 0..runs {
        let start = Instant::now();
        let trained = train_vocabulary(files, hp)?;
        let wall_s = start.elapsed().as_secs_f64();
        let mut row = StageSeconds {
            wall_s,
            ..Default::default()
        };
        for t in &trained {
            row.eval_s += t.report.eval_seconds;
            row.update_s += t.report.update_seconds;
            row.total_s += t.report.total_seconds;
        }
        rows.push(row);
        last = Some(trained);
    }
    Ok((summarize(hp.mode, rows), last.expect("runs >= 1")))
}

/// Fast and omni timings over the same example files, with the
/// fast-to-omni wall-time ratio.
#[derive(Debug, Clone)]
pub struct BenchComparison {
    pub fast: Option<BenchTimings>,
    pub omni: Option<BenchTimings>,
    pub wall_ratio_fast_to_omni: Option<f64>,
}

pub fn benchmark_modes(
    hp: &Hyperparams,
    files: &[(String, PathBuf)],
    runs: usize,
    modes: &[TrainMode],
) -> Result<(BenchComparison, Vec<crate::trainer::TrainedToken>)> {
    let mut fast = None;
    let mut omni = None;
    let mut last_trained = Vec::new();
    for &mode in modes {
        let mut hp_mode = hp.clone();
        hp_mode.mode = mode;
        let (timings, trained) = benchmark_training(&hp_mode, files, runs)?;
        match mode {
            TrainMode::Fast => fast = Some(timings),
            TrainMode::Omni => omni = Some(timings),
        }
        last_trained = trained;
    }
    let ratio = match (&fast, &omni) {
        (Some(f), Some(o)) if o.mean.wall_s > 0.0 => Some(f.mean.wall_s / o.mean.wall_s),
        _ => None,
    };
    Ok((
        BenchComparison {
            fast,
            omni,
            wall_ratio_fast_to_omni: ratio,
        },
        last_trained,
    ))
}
