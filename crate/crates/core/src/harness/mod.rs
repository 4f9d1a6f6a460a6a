//! Synthetic corpora with planted ground truth and the metrics used to
//! score the aligner, the margin filter and the trainer against them.

mod metrics;
mod synth;
mod text;

pub use metrics::{alignment_f1, link_matches, precision_at_1, ranking_auc, F1Score};
pub use synth::{
    gen_hub_corpus, gen_pair_corpus, gen_synthetic, HubSpec, PairCorpus,
    SyntheticCorpus, SyntheticSpec,
};
pub use text::gen_sentences;
