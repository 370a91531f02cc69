//! Bundled synthetic corpus with engineered co-occurrence.
//!
//! Tokens are organized into semantic groups laid out on a line. Each
//! group document samples a position on that line and includes group
//! tokens with probability decaying in the distance to the position, so
//! tokens with nearby indices co-occur often and distant ones rarely.
//! Designed pair scores mirror exactly that structure: within a group
//! the score decays linearly with index distance, across groups it is
//! zero. Background documents carry only filler tokens, keeping group
//! features sparse in negative accumulations.

use crate::rng::{draw_u64, DrawKind};

/// Generator parameters. The defaults produce the bundled corpus used
/// by the desk-scale quality checks: 3 groups x 8 tokens, ~5000
/// documents.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub groups: usize,
    pub targets_per_group: usize,
    pub context_per_group: usize,
    pub fillers: usize,
    pub documents: usize,
    /// Fraction of documents that belong to a group (the rest are
    /// filler-only background).
    pub group_share: f64,
    /// Distance scale of the co-occurrence decay, in index units.
    pub spread: f64,
    /// Peak inclusion probability for the token at the sampled position.
    pub peak: f64,
    /// Cross-group pairs (scored 0) sampled into the pair list, per
    /// unordered group pair.
    pub cross_pairs_per_group_pair: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            groups: 3,
            targets_per_group: 8,
            context_per_group: 12,
            fillers: 400,
            documents: 5000,
            group_share: 0.3,
            spread: 4.0,
            peak: 0.55,
            cross_pairs_per_group_pair: 12,
        }
    }
}

/// A generated corpus: documents, the designed similarity pairs, and
/// the group membership of the target tokens.
#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub documents: Vec<String>,
    /// (word1, word2, designed score)
    pub pairs: Vec<(String, String, f64)>,
    /// (group name, target tokens)
    pub groups: Vec<(String, Vec<String>)>,
}

impl SyntheticCorpus {
    pub fn target_tokens(&self) -> Vec<String> {
        self.groups.iter().flat_map(|(_, t)| t.clone()).collect()
    }
}

const GROUP_NAMES: &[&str] = &["alpha", "beta", "gamma", "delta", "epsilon", "zeta"];

fn group_name(g: usize) -> String {
    GROUP_NAMES
        .get(g)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("group{g}"))
}

struct Draws {
    seed: u64,
    counter: u32,
}

impl Draws {
    fn next_f64(&mut self) -> f64 {
        self.counter += 1;
        let bits = draw_u64(self.seed, 0, 0, self.counter, 0, DrawKind::Pick, 0);
        (bits >> 11) as f64 / (1u64 << 53) as f64
    }

    fn next_index(&mut self, n: usize) -> usize {
        self.counter += 1;
        let bits = draw_u64(self.seed, 0, 0, self.counter, 0, DrawKind::Pick, 1);
        (bits % n as u64) as usize
    }
}

/// Deterministic corpus generation for a given config.
pub fn generate(config: &SynthConfig) -> SyntheticCorpus {
    let mut draws = Draws {
        seed: config.seed,
        counter: 0,
    };
    let targets: Vec<Vec<String>> = (0..config.groups)
        .map(|g| {
            (0..config.targets_per_group)
                .map(|i| format!("{}{i}", group_name(g)))
                .collect()
        })
        .collect();
    let contexts: Vec<Vec<String>> = (0..config.groups)
        .map(|g| {
            (0..config.context_per_group)
                .map(|i| format!("{}ctx{i}", group_name(g)))
                .collect()
        })
        .collect();
    let fillers: Vec<String> = (0..config.fillers).map(|i| format!("w{i:04}")).collect();

    // inclusion probability of index `i` for a document at position `pos`
    let affinity = |pos: f64, i: usize, count: usize| -> f64 {
        let scaled = pos * (count.saturating_sub(1)) as f64;
        let d = (scaled - i as f64).abs() / config.spread;
        (config.peak * (1.0 - d)).max(0.0)
    };

    let mut documents = Vec::with_capacity(config.documents);
    for _ in 0..config.documents {
        let mut words: Vec<String> = Vec::new();
        if draws.next_f64() < config.group_share {
            let g = draws.next_index(config.groups);
            let pos = draws.next_f64();
            for (i, tok) in targets[g].iter().enumerate() {
                if draws.next_f64() < affinity(pos, i, config.targets_per_group) {
                    words.push(tok.clone());
                }
            }
            for (i, tok) in contexts[g].iter().enumerate() {
                let scaled = i as f64 / config.context_per_group.max(1) as f64
                    * config.targets_per_group as f64;
                let d = (pos * (config.targets_per_group - 1) as f64 - scaled).abs() / config.spread;
                if draws.next_f64() < (config.peak * (1.0 - d)).max(0.0) {
                    words.push(tok.clone());
                }
            }
            // group docs carry a couple of fillers
            for _ in 0..1 + draws.next_index(2) {
                words.push(fillers[draws.next_index(config.fillers)].clone());
            }
        } else {
            for _ in 0..4 + draws.next_index(5) {
                words.push(fillers[draws.next_index(config.fillers)].clone());
            }
        }
        if words.is_empty() {
            words.push(fillers[draws.next_index(config.fillers)].clone());
        }
        documents.push(words.join(" "));
    }

    // designed pair scores: intra-group decays with index distance,
    // sampled cross-group pairs score zero
    let mut pairs = Vec::new();
    for group in &targets {
        for i in 0..config.targets_per_group {
            for j in i + 1..config.targets_per_group {
                let score = 1.0 - (j - i) as f64 / config.targets_per_group as f64;
                pairs.push((group[i].clone(), group[j].clone(), score));
            }
        }
    }
    for g in 0..config.groups {
        for h in g + 1..config.groups {
            for c in 0..config.cross_pairs_per_group_pair {
                let i = c % config.targets_per_group;
                let j = (c * 5 + 3) % config.targets_per_group;
                pairs.push((targets[g][i].clone(), targets[h][j].clone(), 0.0));
            }
        }
    }

    let groups = (0..config.groups)
        .map(|g| (group_name(g), targets[g].clone()))
        .collect();

    SyntheticCorpus {
        documents,
        pairs,
        groups,
    }
}

/// Writes the corpus as the three artifact files the command-line
/// pipeline consumes: one document per line, `word1\tword2\tscore`
/// pairs, and `group token` lines.
pub fn write_files(
    corpus: &SyntheticCorpus,
    corpus_path: &std::path::Path,
    pairs_path: &std::path::Path,
    groups_path: &std::path::Path,
) -> std::io::Result<()> {
    std::fs::write(corpus_path, corpus.documents.join("\n") + "\n")?;
    let pairs: String = corpus
        .pairs
        .iter()
        .map(|(a, b, s)| format!("{a}\t{b}\t{s}\n"))
        .collect();
    std::fs::write(pairs_path, pairs)?;
    let groups: String = corpus
        .groups
        .iter()
        .flat_map(|(g, toks)| toks.iter().map(move |t| format!("{g} {t}\n")))
        .collect();
    std::fs::write(groups_path, groups)
}
