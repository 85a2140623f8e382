//! A word-level recurrent language model whose softmax output layer is
//! factorized into many small shared layers.
//!
//! Instead of one |V|-wide softmax, every input word routes to a compact
//! output layer covering the words observed to follow it (its bigram
//! "follow list"). Words with overlapping follow lists share a layer; the
//! grouping is found by repeated 0/1-knapsack passes within size categories.
//! The crate provides the full pipeline: corpus statistics, layer packing,
//! training, perplexity evaluation and the cost model quantifying the
//! speedup over a full softmax.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod follow;
pub mod hash;
pub mod linalg;
pub mod packing;
pub mod rnn;

pub use corpus::{
    encode_corpus, encode_word, normalize_and_tokenize, InputEncoding, TokenSequence,
    TokenizerOptions, Vocabulary, WordId, BOS, EOS, UNK,
};
pub use error::{Error, Result};
pub use eval::{expected_layer_size, perplexity, speedup_report, SizeMode, SpeedupReport};
pub use follow::{bin_histogram, BinHistogram, FollowTable, SizeBin};
pub use packing::{
    assign_layers, generate_output_layers, knapsack_pack_once, pack_report, truncate_follow_list,
    Category, LayerAssignment, LayerId, OutputLayerSpec, TShirtConfig,
};
pub use rnn::{word_probability, EpochStats, Gradients, Model, SequenceLoss, TrainConfig};
