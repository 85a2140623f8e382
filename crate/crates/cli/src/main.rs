mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use config::RunConfig;

/// Recurrent language model with a knapsack-packed factorized softmax.
#[derive(Parser)]
#[command(name = "factored-lm", version, about)]
struct Cli {
    /// Line-oriented `key = value` config file; flags override its keys.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Random seed (initialization and optional shuffling).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for artifacts and reports.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the vocabulary and export follow-list statistics.
    Analyze {
        /// Corpus file (UTF-8 text, one sentence per line).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Unigram threshold below which words collapse to __unk__.
        #[arg(long)]
        min_count: Option<u64>,
        /// Do not wrap sentences in <s> / </s>.
        #[arg(long)]
        no_markers: bool,
        /// Split sentences on .!? instead of one per line.
        #[arg(long)]
        split_sentences: bool,
    },
    /// Assign every word an output layer via knapsack packing.
    Pack {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long)]
        min_count: Option<u64>,
        #[arg(long)]
        no_markers: bool,
        #[arg(long)]
        split_sentences: bool,
    },
    /// Train the factorized RNN and write the model file.
    Train {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Held-out corpus driving the learning-rate decay.
        #[arg(long)]
        validation: Option<PathBuf>,
        #[arg(long)]
        hidden: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        lr: Option<f64>,
        /// BPTT truncation depth.
        #[arg(long)]
        bptt: Option<usize>,
        #[arg(long)]
        min_count: Option<u64>,
        /// Shuffle sentence order each epoch (seeded).
        #[arg(long)]
        shuffle: bool,
        /// Disable gradient clipping.
        #[arg(long)]
        no_clip: bool,
        #[arg(long)]
        no_markers: bool,
        #[arg(long)]
        split_sentences: bool,
    },
    /// Perplexity plus layer-size and speedup estimates.
    Eval {
        /// Model file (defaults to <out>/model.flm).
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        test: Option<PathBuf>,
        /// Leave each sentence's final </s> prediction out of the tally.
        #[arg(long)]
        skip_eos: bool,
        /// Class count for the class-layer cost estimate.
        #[arg(long)]
        classes: Option<usize>,
    },
    /// Top-k next-word distribution after a context.
    Predict {
        #[arg(long)]
        model: Option<PathBuf>,
        /// How many candidates to print.
        #[arg(long)]
        k: Option<usize>,
        /// Context words.
        #[arg(required = true)]
        context: Vec<String>,
    },
}

fn run(cli: Cli) -> factored_lm::Result<()> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.train_cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out = out;
    }

    match cli.command {
        Command::Analyze { corpus, min_count, no_markers, split_sentences } => {
            apply_corpus_flags(&mut config, min_count, no_markers, split_sentences);
            commands::cmd_analyze(&config, &corpus)
        }
        Command::Pack { corpus, min_count, no_markers, split_sentences } => {
            apply_corpus_flags(&mut config, min_count, no_markers, split_sentences);
            commands::cmd_pack(&config, &corpus)
        }
        Command::Train {
            corpus,
            validation,
            hidden,
            epochs,
            lr,
            bptt,
            min_count,
            shuffle,
            no_clip,
            no_markers,
            split_sentences,
        } => {
            apply_corpus_flags(&mut config, min_count, no_markers, split_sentences);
            if let Some(v) = validation {
                config.validation = Some(v);
            }
            if let Some(h) = hidden {
                config.hidden = h;
            }
            if let Some(e) = epochs {
                config.train_cfg.epochs = e;
            }
            if let Some(lr) = lr {
                config.train_cfg.learning_rate = lr;
            }
            if let Some(tau) = bptt {
                config.train_cfg.bptt_steps = tau;
            }
            if shuffle {
                config.train_cfg.shuffle = true;
            }
            if no_clip {
                config.train_cfg.clip_gradients = false;
            }
            commands::cmd_train(&config, &corpus)
        }
        Command::Eval { model, test, skip_eos, classes } => {
            if skip_eos {
                config.skip_eos = true;
            }
            if let Some(c) = classes {
                config.classes = Some(c);
            }
            commands::cmd_eval(&config, &model, &test)
        }
        Command::Predict { model, k, context } => {
            let k = k.unwrap_or(config.top_k);
            commands::cmd_predict(&config, &model, &context.join(" "), k)
        }
    }
}

fn apply_corpus_flags(
    config: &mut RunConfig,
    min_count: Option<u64>,
    no_markers: bool,
    split_sentences: bool,
) {
    if let Some(m) = min_count {
        config.min_count = m;
    }
    if no_markers {
        config.markers = false;
    }
    if split_sentences {
        config.split_sentences = true;
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {}: {}", e.category(), e);
        std::process::exit(1);
    }
}
