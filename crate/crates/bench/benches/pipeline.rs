use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use factored_lm::{
    assign_layers, encode_corpus, knapsack_pack_once, normalize_and_tokenize, FollowTable,
    InputEncoding, Model, TShirtConfig, TokenSequence, TokenizerOptions, TrainConfig, Vocabulary,
};

/// Zipf-flavored synthetic corpus: low word indices dominate, as in text.
fn synthetic_corpus(sentences: usize, vocab: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut text = String::new();
    for _ in 0..sentences {
        let len = rng.random_range(4..16);
        for i in 0..len {
            if i > 0 {
                text.push(' ');
            }
            let r: f64 = rng.random();
            let idx = ((r * r) * vocab as f64) as usize;
            text.push_str(&format!("w{idx:03}"));
        }
        text.push('\n');
    }
    text
}

struct Fixture {
    vocab: Vocabulary,
    seqs: Vec<TokenSequence>,
    table: FollowTable,
}

fn fixture() -> Fixture {
    let text = synthetic_corpus(800, 300, 99);
    let sentences = normalize_and_tokenize(&text, &TokenizerOptions::default());
    let vocab = Vocabulary::build(&sentences, 1);
    let seqs = encode_corpus(&sentences, &vocab);
    let table = FollowTable::build(&seqs, &vocab);
    Fixture { vocab, seqs, table }
}

fn bench_knapsack(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let costs: Vec<usize> = (0..400).map(|_| rng.random_range(1..=32)).collect();
    c.bench_function("knapsack_pack_once/400x320", |b| {
        b.iter(|| knapsack_pack_once(black_box(&costs), black_box(320)))
    });
}

fn bench_follow_table(c: &mut Criterion) {
    let text = synthetic_corpus(800, 300, 99);
    let sentences = normalize_and_tokenize(&text, &TokenizerOptions::default());
    let vocab = Vocabulary::build(&sentences, 1);
    let seqs = encode_corpus(&sentences, &vocab);
    c.bench_function("follow_table_build/800_sentences", |b| {
        b.iter(|| FollowTable::build(black_box(&seqs), black_box(&vocab)))
    });
}

fn bench_assign_layers(c: &mut Criterion) {
    let f = fixture();
    let config = TShirtConfig::default();
    c.bench_function("assign_layers/300_words", |b| {
        b.iter(|| assign_layers(black_box(&f.vocab), black_box(&f.table), black_box(&config)))
    });
}

fn bench_forward_step(c: &mut Criterion) {
    let f = fixture();
    let assignment = assign_layers(&f.vocab, &f.table, &TShirtConfig::default()).unwrap();
    let model = Model::init(
        64,
        InputEncoding::binary_default(),
        assignment,
        f.vocab.content_hash(),
        None,
        1,
    );
    let w = f.seqs[0].ids()[1];
    let layer_id = model.assignment.input_map()[w];
    let x = factored_lm::encode_word(&f.vocab, w, &model.encoding).unwrap();
    let h = vec![0.1; 64];
    c.bench_function("forward_step/h64", |b| {
        b.iter(|| model.forward_step(black_box(&x), black_box(&h), black_box(layer_id)))
    });
}

fn bench_bptt_sentence(c: &mut Criterion) {
    let f = fixture();
    let assignment = assign_layers(&f.vocab, &f.table, &TShirtConfig::default()).unwrap();
    let model = Model::init(
        64,
        InputEncoding::binary_default(),
        assignment,
        f.vocab.content_hash(),
        None,
        1,
    );
    let sentence = f.seqs.iter().max_by_key(|s| s.len()).unwrap();
    let tau = TrainConfig::default().bptt_steps;
    c.bench_function("bptt_gradients/h64_sentence", |b| {
        b.iter(|| model.bptt_gradients(black_box(sentence), black_box(tau)))
    });
}

criterion_group!(
    benches,
    bench_knapsack,
    bench_follow_table,
    bench_assign_layers,
    bench_forward_step,
    bench_bptt_sentence
);
criterion_main!(benches);
