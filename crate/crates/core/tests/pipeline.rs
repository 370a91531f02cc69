//! End-to-end pipeline tests over the bundled synthetic corpora.

use std::path::PathBuf;

use tmae::*;

fn train_embeddings(
    corpus: &tmae::synth::SyntheticCorpus,
    epochs: u32,
    examples_per_epoch: u32,
    seed: u64,
) -> (Vocabulary, EmbeddingMatrix) {
    let vocab = build_vocabulary(corpus.documents.iter(), 1, 40_000).unwrap();
    let docs: Vec<Bitset> = corpus
        .documents
        .iter()
        .map(|d| binarize_document(d, &vocab))
        .collect();
    let mut cfg = BankConfig::new(32, vocab.len() as u32, 8, 127);
    cfg.vote_clip = 20_000;
    cfg.specificity = 1.0;
    let mut hp = Hyperparams::new(cfg.clone(), TrainMode::Fast, seed);
    hp.epochs = epochs;
    hp.examples_per_epoch = examples_per_epoch;
    hp.workers = 4;
    hp.weight_gate = false;

    let mut matrix = EmbeddingMatrix::new(vocab.len());
    for (ti, token) in corpus.target_tokens().iter().enumerate() {
        let target = vocab.index_of(token).unwrap();
        let rng = TokenRng::new(seed, target as u32);
        let examples = prepare_examples(
            &docs,
            target,
            token,
            (epochs * examples_per_epoch) as usize,
            24,
            &rng,
        )
        .unwrap();
        let trng = TokenRng::new(seed, ti as u32);
        let mut bank = ClauseBank::new(cfg.clone(), &trng).unwrap();
        train_token_fast(&mut bank, &examples, &hp, ti as u32).unwrap();
        matrix.insert(extract_embedding(&bank, token)).unwrap();
    }
    (vocab, matrix)
}

#[test]
fn two_topic_corpus_recovers_designed_similarity() {
    let config = tmae::synth::SynthConfig {
        groups: 2,
        documents: 4000,
        ..Default::default()
    };
    let corpus = tmae::synth::generate(&config);
    let (_, matrix) = train_embeddings(&corpus, 2, 1000, 42);

    // binary human scores: intra-topic 1.0, every cross-topic pair 0.0
    let mut pairs = Vec::new();
    let (ga, gb) = (&corpus.groups[0].1, &corpus.groups[1].1);
    for g in [ga, gb] {
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                pairs.push((g[i].clone(), g[j].clone(), 1.0));
            }
        }
    }
    for a in ga {
        for b in gb {
            pairs.push((a.clone(), b.clone(), 0.0));
        }
    }
    let dataset = SimilarityDataset {
        name: "two-topic".into(),
        pairs,
    };
    let report = eval_similarity(&matrix, &dataset).unwrap();
    // pilot run scored rho = 0.864, the ceiling imposed by the tied
    // human scores (perfect two-block separation); gate at 0.8
    assert!(report.rho > 0.8, "rho = {:.4}", report.rho);
    assert_eq!(report.covered_pairs, 120);
    assert_eq!(report.skipped_pairs, 0);
}

#[test]
fn forty_four_token_workload_emits_all_snapshots() {
    let corpus = tmae::synth::generate(&tmae::synth::SynthConfig {
        documents: 2500,
        ..Default::default()
    });
    let vocab = build_vocabulary(corpus.documents.iter(), 1, 40_000).unwrap();
    let docs: Vec<Bitset> = corpus
        .documents
        .iter()
        .map(|d| binarize_document(d, &vocab))
        .collect();
    // a 44-token workload: every token of the vocabulary that appears in
    // at least one and not every document, truncated to 44
    let tokens: Vec<String> = vocab
        .tokens()
        .iter()
        .filter(|t| {
            let idx = vocab.index_of(t).unwrap();
            let present = docs.iter().filter(|d| d.get(idx)).count();
            present > 0 && present < docs.len()
        })
        .take(44)
        .cloned()
        .collect();
    assert_eq!(tokens.len(), 44);

    let dir = tempfile::tempdir().unwrap();
    let mut files: Vec<(String, PathBuf)> = Vec::new();
    for token in &tokens {
        let target = vocab.index_of(token).unwrap();
        let rng = TokenRng::new(7, target as u32);
        let examples = prepare_examples(&docs, target, token, 400, 24, &rng).unwrap();
        let path = dir.path().join(format!("{token}.tmex"));
        write_example_file(
            &path,
            &ExampleHeader {
                feature_count: vocab.len() as u32,
                example_count: 400,
                accumulation: 24,
                target_index: target as u32,
            },
            &examples,
        )
        .unwrap();
        files.push((token.clone(), path));
    }

    let mut cfg = BankConfig::new(32, vocab.len() as u32, 8, 127);
    cfg.vote_clip = 20_000;
    cfg.specificity = 1.0;
    let mut hp = Hyperparams::new(cfg, TrainMode::Fast, 7);
    hp.epochs = 1;
    hp.examples_per_epoch = 400;
    hp.workers = 4;

    let trained = train_vocabulary(&files, &hp).unwrap();
    assert_eq!(trained.len(), 44);
    let banks_dir = dir.path().join("banks");
    std::fs::create_dir_all(&banks_dir).unwrap();
    for t in &trained {
        let path = banks_dir.join(format!("{}.tmbk", t.token));
        t.bank.write_snapshot(&path).unwrap();
        assert!(path.exists());
        // the log format stays parseable
        let mut log = Vec::new();
        t.report.write_log(&mut log).unwrap();
        let text = String::from_utf8(log).unwrap();
        assert!(text.lines().any(|l| l.starts_with("epoch=0 mean_update_p=")));
        assert!(text.lines().any(|l| l.starts_with("stage eval_s=")));
    }
    assert_eq!(std::fs::read_dir(&banks_dir).unwrap().count(), 44);
}

/// Minimal independent snapshot reader: decodes the header, unpacks the
/// b-bit state fields and the weights without touching the library's
/// loader.
struct RawSnapshot {
    clauses: usize,
    features: usize,
    state_bits: u32,
    threshold: u32,
    states: Vec<Vec<u32>>,
    weights: Vec<i32>,
}

fn read_raw_snapshot(path: &std::path::Path) -> RawSnapshot {
    let bytes = std::fs::read(path).unwrap();
    assert_eq!(&bytes[0..4], b"TMBK");
    assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
    let clauses = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let features = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let state_bits = u16::from_le_bytes([bytes[14], bytes[15]]) as u32;
    let threshold = u16::from_le_bytes([bytes[16], bytes[17]]) as u32;
    let literals = 2 * features;
    let row_bytes = (literals * state_bits as usize).div_ceil(8);
    let mut states = Vec::with_capacity(clauses);
    let mut offset = 18;
    for _ in 0..clauses {
        let row = &bytes[offset..offset + row_bytes];
        let mut decoded = Vec::with_capacity(literals);
        for k in 0..literals {
            let mut value = 0u32;
            for bit in 0..state_bits as usize {
                let pos = k * state_bits as usize + bit;
                if row[pos / 8] >> (pos % 8) & 1 == 1 {
                    value |= 1 << bit;
                }
            }
            decoded.push(value);
        }
        states.push(decoded);
        offset += row_bytes;
    }
    let mut weights = Vec::with_capacity(clauses);
    for _ in 0..clauses {
        weights.push(i32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap()));
        offset += 4;
    }
    assert_eq!(offset, bytes.len());
    RawSnapshot {
        clauses,
        features,
        state_bits,
        threshold,
        states,
        weights,
    }
}

#[test]
fn classification_predictions_match_snapshot_oracle() {
    // train one strongly-structured token, snapshot it, and compare the
    // library's predictions on 500 held-out examples against a from-
    // scratch evaluation of the snapshot bytes
    let v = 32usize;
    let doc_rng = TokenRng::new(3, 3);
    let docs: Vec<Bitset> = (0..400)
        .map(|i| {
            let mut d = Bitset::new(v);
            if i % 2 == 0 {
                d.set(0, true);
                d.set(1, true);
                d.set(2, true);
            }
            for k in 0..3 {
                let f = 3 + doc_rng.draw(0, i as u32, 0, DrawKind::Pick, k) as usize % (v - 3);
                d.set(f, true);
            }
            d
        })
        .collect();

    let mut cfg = BankConfig::new(40, v as u32, 8, 127);
    cfg.vote_clip = 800;
    cfg.specificity = 2.0;
    let train_rng = TokenRng::new(5, 0);
    let train_ex = prepare_examples(&docs, 0, "t", 400, 3, &train_rng).unwrap();
    let held_rng = TokenRng::new(6, 1);
    let held_out = prepare_examples(&docs, 0, "t", 500, 3, &held_rng).unwrap();

    let mut hp = Hyperparams::new(cfg.clone(), TrainMode::Fast, 5);
    hp.epochs = 3;
    hp.examples_per_epoch = 400;
    let trng = TokenRng::new(5, 0);
    let mut bank = ClauseBank::new(cfg.clone(), &trng).unwrap();
    train_token_fast(&mut bank, &train_ex, &hp, 0).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let snapshot_path = dir.path().join("t.tmbk");
    bank.write_snapshot(&snapshot_path).unwrap();

    let reloaded = ClauseBank::read_snapshot_with(&snapshot_path, cfg).unwrap();
    let predictions = classify_documents(&reloaded, &held_out).unwrap();

    let raw = read_raw_snapshot(&snapshot_path);
    assert_eq!(raw.clauses, 40);
    assert_eq!(raw.features, v);
    assert_eq!(raw.state_bits, 8);
    let oracle: Vec<bool> = held_out
        .iter()
        .map(|ex| {
            let mut vote = 0i64;
            for j in 0..raw.clauses {
                let included: Vec<usize> = (0..2 * raw.features)
                    .filter(|&k| raw.states[j][k] > raw.threshold)
                    .collect();
                // inference convention: an empty clause does not vote
                let fires = !included.is_empty()
                    && included.iter().all(|&k| {
                        if k < raw.features {
                            ex.input.get(k)
                        } else {
                            !ex.input.get(k - raw.features)
                        }
                    });
                if fires {
                    vote += raw.weights[j] as i64;
                }
            }
            vote.clamp(-800, 800) > 0
        })
        .collect();
    assert_eq!(predictions, oracle);
    // sanity: the task is learnable, so the classifier is not trivial
    let labels: Vec<bool> = held_out.iter().map(|e| e.label).collect();
    let metrics = precision_recall_f1(&predictions, &labels);
    assert!(metrics.f1 > 0.9, "f1 = {}", metrics.f1);

    // the embedding read from the snapshot bytes matches the library:
    // sum over clauses of sign(w) * (original state - negated state)
    let embedding = extract_embedding(&reloaded, "t");
    for i in 0..raw.features {
        let expect: i64 = (0..raw.clauses)
            .map(|j| {
                raw.weights[j].signum() as i64
                    * (raw.states[j][i] as i64 - raw.states[j][raw.features + i] as i64)
            })
            .sum();
        assert_eq!(embedding.values[i], expect, "feature {i}");
    }
}
