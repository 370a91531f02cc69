//! Tsetlin-machine autoencoder word embeddings.
//!
//! Per-token clause banks are trained on accumulated document bitsets,
//! either with the original globally-synchronized procedure (class-sum
//! barrier per example) or the reformulated clause-local procedure that
//! removes the barrier. Embeddings are read directly out of the full
//! automaton state space and scored on classification, word-similarity
//! and clustering tasks.

pub mod bitset;
pub mod clause_bank;
pub mod corpus;
pub mod embedding;
pub mod error;
pub mod evalbench;
pub mod rng;
pub mod synth;
pub mod trainer;

pub use bitset::Bitset;
pub use clause_bank::{literal_value, memory_footprint, BankConfig, ClauseBank, FeedbackRng};
pub use corpus::{
    binarize_document, build_vocabulary, prepare_examples, read_example_file, write_example_file,
    Example, ExampleHeader, Vocabulary,
};
pub use embedding::{
    cosine_similarity, export_embeddings, extract_embedding, load_embeddings, EmbeddingMatrix,
    EmbeddingVector, ExportFormat,
};
pub use error::{Error, Result};
pub use evalbench::{
    benchmark_modes, benchmark_training, classify_documents, eval_similarity, export_cluster_vectors,
    kendall_tau_b, load_similarity_dataset, precision_recall_f1, spearman, BenchComparison,
    BenchTimings, ClassificationMetrics, ClusterReport, SimilarityDataset, SimilarityReport,
};
pub use rng::{sample_update, DrawKind, TokenRng};
pub use trainer::{
    class_sum, local_contribution, train_token, train_token_fast, train_token_omni,
    train_vocabulary, update_probability, update_weight, Hyperparams, TrainMode, TrainReport,
    TrainedToken,
};
