//! Command-line front end for reproducible embedding runs: corpus
//! preparation, training, embedding export and the evaluation suites.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod config;

use std::collections::HashSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::FileConfig;
use tmae::{
    binarize_document, build_vocabulary, eval_similarity, export_cluster_vectors,
    export_embeddings, extract_embedding, load_embeddings, load_similarity_dataset,
    precision_recall_f1, prepare_examples, read_example_file, write_example_file, BankConfig,
    ClauseBank, EmbeddingMatrix, ExampleHeader, ExportFormat, Hyperparams, TokenRng, TrainMode,
    Vocabulary,
};

#[derive(Parser)]
#[command(
    name = "tmae",
    version,
    about = "Tsetlin-machine autoencoder embeddings: training and evaluation",
    after_help = "Config file: key = value lines ('#' comments); command-line flags win."
)]
struct Cli {
    /// key=value config file providing defaults for any flag
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a vocabulary file from a corpus (one document per line)
    BuildVocab(BuildVocabArgs),
    /// Synthesize per-token labeled example files from a corpus
    PrepareExamples(PrepareExamplesArgs),
    /// Train per-token clause banks from example files
    Train(TrainArgs),
    /// Extract embeddings from bank snapshots into a text file
    Embed(EmbedArgs),
    /// Score embeddings against a human-annotated word-pair dataset
    EvalSimilarity(EvalSimilarityArgs),
    /// Evaluate one bank on held-out labeled examples
    EvalClassify(EvalClassifyArgs),
    /// Export grouped vectors for projection plus a separation score
    ExportClusters(ExportClustersArgs),
    /// Time training runs (evaluate/update stages, mean over runs)
    Bench(BenchArgs),
}

#[derive(Args)]
struct BuildVocabArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    min_count: Option<usize>,
    #[arg(long)]
    max_vocab: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PrepareExamplesArgs {
    #[arg(long)]
    corpus: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    /// Token list file (one per line); defaults to every vocabulary token
    #[arg(long)]
    tokens: Option<PathBuf>,
    /// Examples per token
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    accumulation: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args, Clone)]
struct HyperArgs {
    #[arg(long)]
    clauses: Option<u32>,
    /// Vote clip bound T
    #[arg(long)]
    threshold: Option<i32>,
    #[arg(long)]
    specificity: Option<f64>,
    #[arg(long)]
    state_bits: Option<u32>,
    /// Inclusion threshold N; defaults to 2^(b-1) - 1
    #[arg(long)]
    inclusion_threshold: Option<u32>,
    #[arg(long)]
    scaling_factor: Option<f64>,
    #[arg(long)]
    epochs: Option<u32>,
    #[arg(long)]
    examples_per_epoch: Option<u32>,
    #[arg(long)]
    accumulation: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    workers: Option<u32>,
    /// Fast mode: skip updates for negative-weight clauses
    #[arg(long)]
    weight_gate: Option<bool>,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    examples_dir: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    tokens: Option<PathBuf>,
    /// fast | omni
    #[arg(long)]
    mode: Option<TrainMode>,
    #[arg(long)]
    banks_dir: Option<PathBuf>,
    /// Training log destination ('-' for standard output)
    #[arg(long)]
    report: Option<String>,
    #[command(flatten)]
    hyper: HyperArgs,
}

#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    banks_dir: Option<PathBuf>,
    #[arg(long)]
    tokens: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// tsv | w2v-text
    #[arg(long)]
    format: Option<ExportFormat>,
}

#[derive(Args)]
struct EvalSimilarityArgs {
    #[arg(long)]
    embeddings: Option<PathBuf>,
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Report destination ('-' for standard output)
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct EvalClassifyArgs {
    #[arg(long)]
    bank: Option<PathBuf>,
    #[arg(long)]
    examples: Option<PathBuf>,
    #[arg(long)]
    out: Option<String>,
}

#[derive(Args)]
struct ExportClustersArgs {
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// Groups file: `group token` per line, '#' comments
    #[arg(long)]
    groups: Option<PathBuf>,
    /// tsv destination for the grouped vectors
    #[arg(long)]
    out: Option<PathBuf>,
    /// Separation report destination ('-' for standard output)
    #[arg(long)]
    report: Option<String>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    examples_dir: Option<PathBuf>,
    #[arg(long)]
    vocab: Option<PathBuf>,
    #[arg(long)]
    tokens: Option<PathBuf>,
    /// Comma-separated subset of fast,omni
    #[arg(long)]
    modes: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    /// Optional similarity dataset scored on the final run's banks
    #[arg(long)]
    dataset: Option<PathBuf>,
    #[arg(long)]
    platform_label: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[command(flatten)]
    hyper: HyperArgs,
}

/// Usage errors exit 1, data errors exit 2.
enum Failure {
    Usage(String),
    Data(String),
}

impl From<tmae::Error> for Failure {
    fn from(e: tmae::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Data(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    ExitCode::SUCCESS
                }
                _ => {
                    eprint!("{e}");
                    ExitCode::from(1)
                }
            };
        }
    };

    let file = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e:#}");
                return ExitCode::from(1);
            }
        },
        None => FileConfig::default(),
    };

    let result = match cli.command {
        Command::BuildVocab(args) => cmd_build_vocab(args, &file),
        Command::PrepareExamples(args) => cmd_prepare_examples(args, &file),
        Command::Train(args) => cmd_train(args, &file),
        Command::Embed(args) => cmd_embed(args, &file),
        Command::EvalSimilarity(args) => cmd_eval_similarity(args, &file),
        Command::EvalClassify(args) => cmd_eval_classify(args, &file),
        Command::ExportClusters(args) => cmd_export_clusters(args, &file),
        Command::Bench(args) => cmd_bench(args, &file),
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

// ------- flag/config resolution helpers -------

fn resolve<T: std::str::FromStr>(
    file: &FileConfig,
    flag: Option<T>,
    key: &str,
) -> Result<Option<T>, Failure>
where
    T::Err: std::fmt::Display,
{
    file.resolve(flag, key).map_err(|e| Failure::Usage(format!("{e:#}")))
}

fn required<T: std::str::FromStr>(
    file: &FileConfig,
    flag: Option<T>,
    key: &str,
    flag_name: &str,
) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    resolve(file, flag, key)?
        .ok_or_else(|| Failure::Usage(format!("{flag_name} is required (flag or config key '{key}')")))
}

fn or_default<T: std::str::FromStr>(
    file: &FileConfig,
    flag: Option<T>,
    key: &str,
    default: T,
) -> Result<T, Failure>
where
    T::Err: std::fmt::Display,
{
    Ok(resolve(file, flag, key)?.unwrap_or(default))
}

fn required_seed(file: &FileConfig, flag: Option<u64>) -> Result<u64, Failure> {
    resolve(file, flag, "seed")?.ok_or_else(|| {
        Failure::Usage(
            "--seed is required: runs must be reproducible, no implicit time-based seeding".into(),
        )
    })
}

fn build_hyperparams(
    args: &HyperArgs,
    file: &FileConfig,
    features: u32,
    mode: TrainMode,
) -> Result<Hyperparams, Failure> {
    let state_bits = or_default(file, args.state_bits, "state-bits", 8)?;
    let default_n = if (1..=16).contains(&state_bits) {
        BankConfig::default_inclusion_threshold(state_bits)
    } else {
        0 // config validation reports the bad state_bits
    };
    let mut bank = BankConfig::new(
        or_default(file, args.clauses, "clauses", 32)?,
        features,
        state_bits,
        or_default(file, args.inclusion_threshold, "inclusion-threshold", default_n)?,
    );
    bank.vote_clip = or_default(file, args.threshold, "threshold", 20_000)?;
    bank.specificity = or_default(file, args.specificity, "specificity", 1.0)?;
    bank.scaling_factor = or_default(file, args.scaling_factor, "scaling-factor", 2.0)?;

    let mut hp = Hyperparams::new(bank, mode, required_seed(file, args.seed)?);
    hp.accumulation = or_default(file, args.accumulation, "accumulation", 24)?;
    hp.epochs = or_default(file, args.epochs, "epochs", 4)?;
    hp.examples_per_epoch = or_default(file, args.examples_per_epoch, "examples-per-epoch", 2000)?;
    hp.workers = or_default(file, args.workers, "workers", 1)?;
    hp.weight_gate = or_default(file, args.weight_gate, "weight-gate", true)?;
    Ok(hp)
}

// ------- shared file helpers -------

fn read_lines(path: &Path, what: &str) -> Result<Vec<String>, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Data(format!("cannot read {what} {}: {e}", path.display())))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn token_list(
    file: &FileConfig,
    flag: Option<PathBuf>,
    vocab: &Vocabulary,
) -> Result<Vec<String>, Failure> {
    match resolve(file, flag, "tokens")? {
        Some(path) => {
            let tokens = read_lines(&path, "token list")?;
            if tokens.is_empty() {
                return Err(Failure::Data(format!("token list {} is empty", path.display())));
            }
            for t in &tokens {
                if vocab.index_of(t).is_none() {
                    return Err(Failure::Data(format!("token '{t}' is not in the vocabulary")));
                }
            }
            Ok(tokens)
        }
        None => Ok(vocab.tokens().to_vec()),
    }
}

/// Stable per-token artifact file stem.
fn token_file_stem(token: &str) -> String {
    token
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

fn unique_stems(tokens: &[String]) -> Result<(), Failure> {
    let mut seen = HashSet::new();
    for t in tokens {
        if !seen.insert(token_file_stem(t)) {
            return Err(Failure::Data(format!(
                "tokens '{t}' and another entry map to the same file name '{}'",
                token_file_stem(t)
            )));
        }
    }
    Ok(())
}

/// Opens `-` as standard output, anything else as a file.
fn open_out(target: &str) -> Result<Box<dyn Write>, Failure> {
    if target == "-" {
        Ok(Box::new(std::io::stdout().lock()))
    } else {
        Ok(Box::new(std::io::BufWriter::new(
            std::fs::File::create(target).map_err(|e| Failure::Data(format!("{target}: {e}")))?,
        )))
    }
}

// ------- subcommands -------

fn cmd_build_vocab(args: BuildVocabArgs, file: &FileConfig) -> CmdResult {
    let corpus: PathBuf = required(file, args.corpus, "corpus", "--corpus")?;
    let min_count = or_default(file, args.min_count, "min-count", 1)?;
    let max_vocab = or_default(file, args.max_vocab, "max-vocab", 40_000)?;
    let out: PathBuf = required(file, args.out, "out", "--out")?;
    if min_count < 1 || max_vocab < 1 {
        return Err(Failure::Usage("--min-count and --max-vocab must be >= 1".into()));
    }

    let docs = read_lines(&corpus, "corpus")?;
    let vocab = build_vocabulary(docs.iter(), min_count, max_vocab)?;
    vocab.write_file(&out)?;
    println!("vocab tokens={} out={}", vocab.len(), out.display());
    Ok(())
}

fn cmd_prepare_examples(args: PrepareExamplesArgs, file: &FileConfig) -> CmdResult {
    let corpus: PathBuf = required(file, args.corpus, "corpus", "--corpus")?;
    let vocab_path: PathBuf = required(file, args.vocab, "vocab", "--vocab")?;
    let count = or_default(file, args.count, "count", 8000)?;
    let accumulation = or_default(file, args.accumulation, "accumulation", 24)?;
    let seed = required_seed(file, args.seed)?;
    let out_dir: PathBuf = required(file, args.out_dir, "out-dir", "--out-dir")?;
    if count < 1 || accumulation < 1 {
        return Err(Failure::Usage("--count and --accumulation must be >= 1".into()));
    }

    let vocab = Vocabulary::read_file(&vocab_path)?;
    let tokens = token_list(file, args.tokens, &vocab)?;
    unique_stems(&tokens)?;
    let docs: Vec<tmae::Bitset> = read_lines(&corpus, "corpus")?
        .iter()
        .map(|d| binarize_document(d, &vocab))
        .collect();

    std::fs::create_dir_all(&out_dir)?;
    for token in &tokens {
        let target = vocab.index_of(token).expect("validated above");
        // the draw stream is keyed by the vocabulary index, so the same
        // seed yields the same examples whatever subset is requested
        let rng = TokenRng::new(seed, target as u32);
        let examples = prepare_examples(&docs, target, token, count, accumulation as usize, &rng)?;
        let path = out_dir.join(format!("{}.tmex", token_file_stem(token)));
        write_example_file(
            &path,
            &ExampleHeader {
                feature_count: vocab.len() as u32,
                example_count: count as u32,
                accumulation: accumulation as u16,
                target_index: target as u32,
            },
            &examples,
        )?;
    }
    println!(
        "prepared tokens={} examples_per_token={count} out_dir={}",
        tokens.len(),
        out_dir.display()
    );
    Ok(())
}

fn example_files(dir: &Path, tokens: &[String]) -> Result<Vec<(String, PathBuf)>, Failure> {
    unique_stems(tokens)?;
    Ok(tokens
        .iter()
        .map(|t| (t.clone(), dir.join(format!("{}.tmex", token_file_stem(t)))))
        .collect())
}

fn cmd_train(args: TrainArgs, file: &FileConfig) -> CmdResult {
    required_seed(file, args.hyper.seed)?; // fail fast, before touching data
    let examples_dir: PathBuf = required(file, args.examples_dir, "examples-dir", "--examples-dir")?;
    let vocab_path: PathBuf = required(file, args.vocab, "vocab", "--vocab")?;
    let banks_dir: PathBuf = required(file, args.banks_dir, "banks-dir", "--banks-dir")?;
    let mode = or_default(file, args.mode, "mode", TrainMode::Fast)?;

    let vocab = Vocabulary::read_file(&vocab_path)?;
    let tokens = token_list(file, args.tokens, &vocab)?;
    let hp = build_hyperparams(&args.hyper, file, vocab.len() as u32, mode)?;
    let files = example_files(&examples_dir, &tokens)?;

    let trained = tmae::train_vocabulary(&files, &hp)?;

    std::fs::create_dir_all(&banks_dir)?;
    for t in &trained {
        t.bank
            .write_snapshot(&banks_dir.join(format!("{}.tmbk", token_file_stem(&t.token))))?;
    }
    if let Some(report) = resolve(file, args.report, "report")? {
        let mut w = open_out(&report)?;
        for t in &trained {
            writeln!(w, "token={}", t.token)?;
            t.report.write_log(&mut w)?;
        }
        w.flush()?;
    }
    let total: f64 = trained.iter().map(|t| t.report.total_seconds).sum();
    println!(
        "trained tokens={} mode={} total_s={total:.3} banks_dir={}",
        trained.len(),
        if mode == TrainMode::Fast { "fast" } else { "omni" },
        banks_dir.display()
    );
    Ok(())
}

fn cmd_embed(args: EmbedArgs, file: &FileConfig) -> CmdResult {
    let banks_dir: PathBuf = required(file, args.banks_dir, "banks-dir", "--banks-dir")?;
    let tokens_path: PathBuf = required(file, args.tokens, "tokens", "--tokens")?;
    let out: PathBuf = required(file, args.out, "out", "--out")?;
    let format = or_default(file, args.format, "format", ExportFormat::Tsv)?;

    let tokens = read_lines(&tokens_path, "token list")?;
    if tokens.is_empty() {
        return Err(Failure::Data(format!("token list {} is empty", tokens_path.display())));
    }
    let mut matrix: Option<EmbeddingMatrix> = None;
    for token in &tokens {
        let path = banks_dir.join(format!("{}.tmbk", token_file_stem(token)));
        let bank = ClauseBank::read_snapshot(&path)?;
        let vector = extract_embedding(&bank, token);
        let matrix = matrix.get_or_insert_with(|| EmbeddingMatrix::new(vector.values.len()));
        matrix.insert(vector)?;
    }
    let matrix = matrix.expect("token list is nonempty");
    export_embeddings(&matrix, &out, format)?;
    println!(
        "embedded tokens={} features={} out={}",
        matrix.len(),
        matrix.features(),
        out.display()
    );
    Ok(())
}

fn cmd_eval_similarity(args: EvalSimilarityArgs, file: &FileConfig) -> CmdResult {
    let embeddings_path: PathBuf = required(file, args.embeddings, "embeddings", "--embeddings")?;
    let dataset_path: PathBuf = required(file, args.dataset, "dataset", "--dataset")?;
    let out = or_default(file, args.out, "out", "-".to_string())?;

    let embeddings = load_embeddings(&embeddings_path)?;
    let dataset = load_similarity_dataset(&dataset_path)?;
    let report = eval_similarity(&embeddings, &dataset)?;
    let mut w = open_out(&out)?;
    writeln!(
        w,
        "similarity dataset={} pairs={} distinct_tokens={} covered={} skipped={} rho={:.6} tau={:.6}",
        dataset.name,
        dataset.pairs.len(),
        dataset.distinct_tokens(),
        report.covered_pairs,
        report.skipped_pairs,
        report.rho,
        report.tau
    )?;
    w.flush()?;
    Ok(())
}

fn cmd_eval_classify(args: EvalClassifyArgs, file: &FileConfig) -> CmdResult {
    let bank_path: PathBuf = required(file, args.bank, "bank", "--bank")?;
    let examples_path: PathBuf = required(file, args.examples, "examples", "--examples")?;
    let out = or_default(file, args.out, "out", "-".to_string())?;

    let bank = ClauseBank::read_snapshot(&bank_path)?;
    let (_, examples) = read_example_file(&examples_path)?;
    if examples.is_empty() {
        return Err(Failure::Data(format!("{} holds no examples", examples_path.display())));
    }
    let predictions = tmae::classify_documents(&bank, &examples)?;
    let labels: Vec<bool> = examples.iter().map(|e| e.label).collect();
    let m = precision_recall_f1(&predictions, &labels);
    let mut w = open_out(&out)?;
    writeln!(
        w,
        "classify examples={} tp={} fp={} fn={} tn={} precision={:.6} recall={:.6} f1={:.6}",
        examples.len(),
        m.tp,
        m.fp,
        m.fn_,
        m.tn,
        m.precision,
        m.recall,
        m.f1
    )?;
    w.flush()?;
    Ok(())
}

fn parse_groups_file(path: &Path) -> Result<Vec<(String, Vec<String>)>, Failure> {
    let mut groups: Vec<(String, Vec<String>)> = Vec::new();
    for line in read_lines(path, "groups file")? {
        let mut parts = line.split_whitespace();
        let (Some(group), Some(token), None) = (parts.next(), parts.next(), parts.next()) else {
            return Err(Failure::Data(format!(
                "{}: expected 'group token' per line, found '{line}'",
                path.display()
            )));
        };
        match groups.iter_mut().find(|(g, _)| g == group) {
            Some((_, tokens)) => tokens.push(token.to_string()),
            None => groups.push((group.to_string(), vec![token.to_string()])),
        }
    }
    if groups.is_empty() {
        return Err(Failure::Data(format!("groups file {} is empty", path.display())));
    }
    Ok(groups)
}

fn cmd_export_clusters(args: ExportClustersArgs, file: &FileConfig) -> CmdResult {
    let embeddings_path: PathBuf = required(file, args.embeddings, "embeddings", "--embeddings")?;
    let groups_path: PathBuf = required(file, args.groups, "groups", "--groups")?;
    let out: PathBuf = required(file, args.out, "out", "--out")?;
    let report_target = or_default(file, args.report, "report", "-".to_string())?;

    let embeddings = load_embeddings(&embeddings_path)?;
    let groups = parse_groups_file(&groups_path)?;
    let report = export_cluster_vectors(&embeddings, &groups, &out)?;
    let fmt = |v: Option<f64>| v.map_or("na".to_string(), |x| format!("{x:.6}"));
    let mut w = open_out(&report_target)?;
    writeln!(
        w,
        "clusters groups={} exported={} missing={} intra_mean={} inter_mean={} separation={:.6}",
        groups.len(),
        report.exported_rows,
        report.missing.len(),
        fmt(report.intra_mean),
        fmt(report.inter_mean),
        report.separation
    )?;
    for token in &report.missing {
        writeln!(w, "missing token={token}")?;
    }
    w.flush()?;
    Ok(())
}

fn cmd_bench(args: BenchArgs, file: &FileConfig) -> CmdResult {
    required_seed(file, args.hyper.seed)?; // fail fast, before touching data
    let examples_dir: PathBuf = required(file, args.examples_dir, "examples-dir", "--examples-dir")?;
    let vocab_path: PathBuf = required(file, args.vocab, "vocab", "--vocab")?;
    let runs = or_default(file, args.runs, "runs", 5)?;
    let modes_raw = or_default(file, args.modes, "modes", "fast,omni".to_string())?;
    let platform = or_default(file, args.platform_label, "platform-label", "cpu".to_string())?;
    let out = or_default(file, args.out, "out", "-".to_string())?;
    if runs < 1 {
        return Err(Failure::Usage("--runs must be >= 1".into()));
    }
    let modes: Vec<TrainMode> = modes_raw
        .split(',')
        .map(|m| m.trim().parse())
        .collect::<Result<_, String>>()
        .map_err(Failure::Usage)?;
    if modes.is_empty() {
        return Err(Failure::Usage("--modes must name at least one of fast,omni".into()));
    }

    let vocab = Vocabulary::read_file(&vocab_path)?;
    let tokens = token_list(file, args.tokens, &vocab)?;
    let hp = build_hyperparams(&args.hyper, file, vocab.len() as u32, modes[0])?;
    let files = example_files(&examples_dir, &tokens)?;

    let dataset = resolve(file, args.dataset, "dataset")?
        .map(|p: PathBuf| load_similarity_dataset(&p))
        .transpose()?;

    let mut w = open_out(&out)?;
    let mut wall_means = Vec::new();
    for &mode in &modes {
        let mut hp_mode = hp.clone();
        hp_mode.mode = mode;
        let (timings, trained) = tmae::benchmark_training(&hp_mode, &files, runs)?;

        let (rho, tau) = match &dataset {
            Some(ds) => {
                let mut matrix = EmbeddingMatrix::new(vocab.len());
                for t in &trained {
                    matrix.insert(extract_embedding(&t.bank, &t.token))?;
                }
                let r = eval_similarity(&matrix, ds)?;
                (format!("{:.6}", r.rho), format!("{:.6}", r.tau))
            }
            None => ("na".to_string(), "na".to_string()),
        };
        writeln!(
            w,
            "bench platform={platform} mode={} workers={} runs={runs} \
             eval_s={:.6} eval_s_std={:.6} update_s={:.6} update_s_std={:.6} \
             total_s={:.6} total_s_std={:.6} wall_s={:.6} wall_s_std={:.6} rho={rho} tau={tau}",
            if mode == TrainMode::Fast { "fast" } else { "omni" },
            hp_mode.workers,
            timings.mean.eval_s,
            timings.std.eval_s,
            timings.mean.update_s,
            timings.std.update_s,
            timings.mean.total_s,
            timings.std.total_s,
            timings.mean.wall_s,
            timings.std.wall_s,
        )?;
        wall_means.push((mode, timings.mean.wall_s));
    }
    let fast = wall_means.iter().find(|(m, _)| *m == TrainMode::Fast);
    let omni = wall_means.iter().find(|(m, _)| *m == TrainMode::Omni);
    if let (Some((_, f)), Some((_, o))) = (fast, omni) {
        if *o > 0.0 {
            writeln!(w, "bench wall_ratio_fast_to_omni={:.6}", f / o)?;
        }
    }
    w.flush()?;
    Ok(())
}
