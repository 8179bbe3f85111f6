//! Embedding files, corpora, query sets and the synthetic planted corpus.

mod corpus;
mod queries;
pub mod sge1;
mod synth;

pub use corpus::{
    load_corpus, read_manifest, write_corpus, Corpus, ManifestEntry, ParticipantRecord, Split,
};
pub use queries::{pseudo_queries, QuerySet};
pub use sge1::{read_embedding_file, write_embedding_file};
pub use synth::{
    generate_synthetic, planted_count, Dispersion, NoiseLevels, PlantStyle, Relevance,
    SynthConfig, SyntheticCorpus,
};
