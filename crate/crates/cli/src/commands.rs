//! The five pipeline commands: analyze, pack, train, eval, predict.
//!
//! Artifacts live in the output directory under fixed names (vocab.tsv,
//! assignment.txt, model.flm) and are cross-checked by content hash, so a
//! stale mix of files fails loudly instead of silently mispredicting.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use factored_lm::{
    assign_layers, bin_histogram, encode_corpus, normalize_and_tokenize, pack_report, perplexity,
    speedup_report, InputEncoding, LayerAssignment, Model, SizeBin, TokenSequence, Vocabulary,
};
use factored_lm::{Error, Result};

use crate::config::{EncodingMode, RunConfig};

pub const VOCAB_FILE: &str = "vocab.tsv";
pub const ASSIGNMENT_FILE: &str = "assignment.txt";
pub const MODEL_FILE: &str = "model.flm";
pub const TRAIN_LOG_FILE: &str = "train_log.csv";

struct Pipeline {
    vocab: Vocabulary,
    seqs: Vec<TokenSequence>,
    table: factored_lm::FollowTable,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn corpus_path<'a>(override_path: &'a Option<PathBuf>, config: &'a RunConfig) -> Result<&'a Path> {
    override_path
        .as_deref()
        .or(config.train.as_deref())
        .ok_or_else(|| Error::Config("no corpus given: pass --corpus or set train= in the config".into()))
}

fn tokenize_corpus(path: &Path, config: &RunConfig) -> Result<Vec<Vec<String>>> {
    let sentences = normalize_and_tokenize(&read_text(path)?, &config.tokenizer_options());
    if sentences.is_empty() {
        return Err(Error::EmptyInput(format!("corpus {} contains no sentences", path.display())));
    }
    Ok(sentences)
}

/// Tokenize the corpus and produce vocabulary, sequences and follow table.
/// With `reuse_vocab` an existing vocab.tsv is loaded instead of rebuilt, so
/// pack/train stay consistent with a previous analyze.
fn build_pipeline(path: &Path, config: &RunConfig, reuse_vocab: bool) -> Result<Pipeline> {
    let sentences = tokenize_corpus(path, config)?;
    let vocab_path = config.out.join(VOCAB_FILE);
    let vocab = if reuse_vocab && vocab_path.exists() {
        Vocabulary::load(&vocab_path)?
    } else {
        Vocabulary::build(&sentences, config.min_count)
    };
    let seqs = encode_corpus(&sentences, &vocab);
    let table = factored_lm::FollowTable::build(&seqs, &vocab);
    Ok(Pipeline { vocab, seqs, table })
}

fn input_encoding(config: &RunConfig, vocab: &Vocabulary) -> Result<InputEncoding> {
    let encoding = match config.encoding_mode {
        EncodingMode::BinaryIndex => InputEncoding::BinaryIndex { width: config.width },
        EncodingMode::OneHot => InputEncoding::one_hot(vocab),
    };
    encoding.validate(vocab)?;
    Ok(encoding)
}

fn ensure_out_dir(config: &RunConfig) -> Result<()> {
    std::fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))
}

fn write_out(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn cmd_analyze(config: &RunConfig, corpus: &Option<PathBuf>) -> Result<()> {
    ensure_out_dir(config)?;
    let path = corpus_path(corpus, config)?;
    let pipeline = build_pipeline(path, config, false)?;
    input_encoding(config, &pipeline.vocab)?;

    let vocab_path = config.out.join(VOCAB_FILE);
    pipeline.vocab.save(&vocab_path)?;

    let hist = bin_histogram(&pipeline.table, &pipeline.vocab);
    write_out(&config.out.join("histogram.csv"), &hist.to_csv())?;

    let mut follow_csv = String::from("word_id,word,count,follow_size,bin\n");
    for w in 0..pipeline.vocab.len() {
        let size = pipeline.table.follow_size(w);
        let _ = writeln!(
            follow_csv,
            "{},{},{},{},{}",
            w,
            pipeline.vocab.word(w),
            pipeline.vocab.count(w),
            size,
            SizeBin::of(size).label()
        );
    }
    write_out(&config.out.join("follow.csv"), &follow_csv)?;

    println!(
        "analyzed {}: {} sentences, {} tokens, vocabulary {} words (min_count {})",
        path.display(),
        pipeline.seqs.len(),
        pipeline.vocab.total_tokens(),
        pipeline.vocab.len(),
        config.min_count
    );
    print!("{}", hist.to_csv());
    Ok(())
}

pub fn cmd_pack(config: &RunConfig, corpus: &Option<PathBuf>) -> Result<()> {
    ensure_out_dir(config)?;
    let path = corpus_path(corpus, config)?;
    let pipeline = build_pipeline(path, config, true)?;

    let vocab_path = config.out.join(VOCAB_FILE);
    if !vocab_path.exists() {
        pipeline.vocab.save(&vocab_path)?;
    }
    let assignment = assign_layers(&pipeline.vocab, &pipeline.table, &config.tshirt)?;
    assignment.save(&config.out.join(ASSIGNMENT_FILE))?;

    let report = pack_report(&assignment, &config.tshirt);
    write_out(&config.out.join("pack_report.csv"), &report)?;
    println!("packed {} words into {} layers", pipeline.vocab.len(), assignment.layer_count());
    print!("{report}");
    Ok(())
}

pub fn cmd_train(config: &RunConfig, corpus: &Option<PathBuf>) -> Result<()> {
    ensure_out_dir(config)?;
    let path = corpus_path(corpus, config)?;
    let pipeline = build_pipeline(path, config, true)?;

    let vocab_path = config.out.join(VOCAB_FILE);
    if !vocab_path.exists() {
        pipeline.vocab.save(&vocab_path)?;
    }
    let assignment_path = config.out.join(ASSIGNMENT_FILE);
    let assignment = if assignment_path.exists() {
        LayerAssignment::load(&assignment_path, &pipeline.vocab)?
    } else {
        let assignment = assign_layers(&pipeline.vocab, &pipeline.table, &config.tshirt)?;
        assignment.save(&assignment_path)?;
        assignment
    };

    let encoding = input_encoding(config, &pipeline.vocab)?;
    let validation = match &config.validation {
        Some(vpath) => {
            let sentences = tokenize_corpus(vpath, config)?;
            Some(encode_corpus(&sentences, &pipeline.vocab))
        }
        None => None,
    };

    let mut model = Model::init(
        config.hidden,
        encoding,
        assignment,
        pipeline.vocab.content_hash(),
        config.train_cfg.init_scale,
        config.train_cfg.seed,
    );
    let log = model.train(&pipeline.seqs, &config.train_cfg, validation.as_deref())?;

    let mut log_csv = String::from("epoch,lr,train_pp,val_pp,seconds\n");
    for entry in &log {
        let val = entry
            .validation_perplexity
            .map(|v| format!("{v:.4}"))
            .unwrap_or_default();
        let _ = writeln!(
            log_csv,
            "{},{:.6},{:.4},{},{:.3}",
            entry.epoch, entry.learning_rate, entry.train_perplexity, val, entry.seconds
        );
        println!(
            "epoch {}: lr {:.4} train perplexity {:.3}{}",
            entry.epoch,
            entry.learning_rate,
            entry.train_perplexity,
            entry
                .validation_perplexity
                .map(|v| format!(" validation perplexity {v:.3}"))
                .unwrap_or_default()
        );
    }
    write_out(&config.out.join(TRAIN_LOG_FILE), &log_csv)?;

    let model_path = config.out.join(MODEL_FILE);
    model.save(&model_path)?;
    println!("model written to {}", model_path.display());
    Ok(())
}

fn load_artifacts(config: &RunConfig, model: &Option<PathBuf>) -> Result<(Vocabulary, Model)> {
    let vocab = Vocabulary::load(&config.out.join(VOCAB_FILE))?;
    let assignment = LayerAssignment::load(&config.out.join(ASSIGNMENT_FILE), &vocab)?;
    let model_path = model.clone().unwrap_or_else(|| config.out.join(MODEL_FILE));
    let model = Model::load(&model_path, &vocab, assignment)?;
    Ok((vocab, model))
}

/// Total training seconds from the train log, when one is present.
fn logged_train_seconds(config: &RunConfig) -> f64 {
    let Ok(text) = std::fs::read_to_string(config.out.join(TRAIN_LOG_FILE)) else {
        return 0.0;
    };
    text.lines()
        .skip(1)
        .filter_map(|l| l.rsplit(',').next()?.parse::<f64>().ok())
        .sum()
}

pub fn cmd_eval(config: &RunConfig, model: &Option<PathBuf>, test: &Option<PathBuf>) -> Result<()> {
    ensure_out_dir(config)?;
    let (vocab, model) = load_artifacts(config, model)?;
    let test_path = test
        .as_deref()
        .or(config.test.as_deref())
        .ok_or_else(|| Error::Config("no test corpus: pass --test or set test= in the config".into()))?;
    let sentences = tokenize_corpus(test_path, config)?;
    let test_seqs = encode_corpus(&sentences, &vocab);
    let test_tokens: usize = test_seqs.iter().map(|s| s.len()).sum();

    let pp = perplexity(&model, &test_seqs, !config.skip_eos)?;
    let classes = config
        .classes
        .unwrap_or_else(|| (vocab.len() as f64).sqrt().round().max(1.0) as usize);
    let report = speedup_report(
        &model.assignment,
        &vocab,
        &config.tshirt,
        model.hidden,
        config.train_cfg.bptt_steps,
        classes,
    )?;

    let mut metrics = String::from("hidden,train_minutes,train_tokens,test_tokens,perplexity\n");
    let _ = writeln!(
        metrics,
        "{},{:.2},{},{},{:.4}",
        model.hidden,
        logged_train_seconds(config) / 60.0,
        model.train_tokens,
        test_tokens,
        pp
    );
    write_out(&config.out.join("metrics.csv"), &metrics)?;
    write_out(&config.out.join("speedup.csv"), &report.to_csv())?;

    print!("{metrics}");
    print!("{}", report.to_csv());
    Ok(())
}

pub fn cmd_predict(
    config: &RunConfig,
    model: &Option<PathBuf>,
    context: &str,
    k: usize,
) -> Result<()> {
    let (vocab, model) = load_artifacts(config, model)?;

    // The context is a sentence prefix: marker at the start, no </s>.
    let opts = factored_lm::TokenizerOptions {
        split_sentences: false,
        sentence_markers: false,
    };
    let mut tokens: Vec<String> = normalize_and_tokenize(context, &opts).into_iter().flatten().collect();
    if config.markers {
        tokens.insert(0, factored_lm::BOS.to_string());
    }
    if tokens.is_empty() {
        return Err(Error::EmptyInput("empty prediction context".into()));
    }
    let ids: Vec<usize> = tokens.iter().map(|t| vocab.lookup(t)).collect();

    let mut h = vec![0.0; model.hidden];
    let mut y = Vec::new();
    let mut layer_id = 0;
    for &w in &ids {
        layer_id = model.assignment.input_map()[w];
        let x = factored_lm::encode_word(&vocab, w, &model.encoding)?;
        let (h_next, y_next) = model.forward_step(&x, &h, layer_id)?;
        h = h_next;
        y = y_next;
    }

    let layer = model.assignment.layer(layer_id);
    let mut ranked: Vec<(usize, f64)> =
        layer.members().iter().map(|&w| (w, y[layer.unit_of(w).unwrap()])).collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(k);

    println!("rank,word_id,word,probability");
    for (rank, (w, p)) in ranked.iter().enumerate() {
        println!("{},{},{},{:.6}", rank + 1, w, vocab.word(*w), p);
    }
    Ok(())
}
