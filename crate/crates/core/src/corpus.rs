//! Text normalization, tokenization, vocabulary construction and input
//! encoding.
//!
//! Text is lowercased, punctuation is split off into standalone tokens, and
//! each sentence is wrapped in `<s>`/`</s>` markers (optional). Words whose
//! unigram count falls below `min_count` collapse to `__unk__` at lookup
//! time. Ids are assigned by descending count with lexicographic
//! tie-breaking, so identical input always yields identical ids.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::hash::fnv1a;

pub const UNK: &str = "__unk__";
pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";

pub type WordId = usize;

#[derive(Debug, Clone, Copy)]
pub struct TokenizerOptions {
    /// Split the input on `.!?` instead of one-sentence-per-line.
    pub split_sentences: bool,
    /// Wrap each sentence in `<s>` / `</s>`.
    pub sentence_markers: bool,
}

impl Default for TokenizerOptions {
    fn default() -> Self {
        TokenizerOptions { split_sentences: false, sentence_markers: true }
    }
}

/// Lowercase, segment into sentences and tokenize.
///
/// Tokens are whitespace-separated after leading/trailing ASCII punctuation
/// has been peeled off into standalone tokens ("sat." -> "sat", ".").
/// Interior punctuation ("don't") is left alone. Empty input gives an empty
/// list; blank lines are skipped.
pub fn normalize_and_tokenize(raw_text: &str, opts: &TokenizerOptions) -> Vec<Vec<String>> {
    let lowered = raw_text.to_lowercase();
    let mut sentences = Vec::new();
    if opts.split_sentences {
        let mut current = String::new();
        let mut chars = lowered.chars().peekable();
        while let Some(c) = chars.next() {
            current.push(c);
            if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| !matches!(n, '.' | '!' | '?')) {
                push_sentence(&mut sentences, &current, opts);
                current.clear();
            }
        }
        push_sentence(&mut sentences, &current, opts);
    } else {
        for line in lowered.lines() {
            push_sentence(&mut sentences, line, opts);
        }
    }
    sentences
}

fn push_sentence(out: &mut Vec<Vec<String>>, text: &str, opts: &TokenizerOptions) {
    let mut tokens = Vec::new();
    if opts.sentence_markers {
        tokens.push(BOS.to_string());
    }
    let body_start = tokens.len();
    for raw in text.split_whitespace() {
        split_punctuation(raw, &mut tokens);
    }
    if tokens.len() == body_start {
        return; // blank line, not a sentence
    }
    if opts.sentence_markers {
        tokens.push(EOS.to_string());
    }
    out.push(tokens);
}

fn split_punctuation(raw: &str, out: &mut Vec<String>) {
    let chars: Vec<char> = raw.chars().collect();
    let mut start = 0;
    let mut end = chars.len();
    while start < end && chars[start].is_ascii_punctuation() {
        start += 1;
    }
    while end > start && chars[end - 1].is_ascii_punctuation() {
        end -= 1;
    }
    for &c in &chars[..start] {
        out.push(c.to_string());
    }
    if start < end {
        out.push(chars[start..end].iter().collect());
    }
    for &c in &chars[end..] {
        out.push(c.to_string());
    }
}

/// Word <-> id map with unigram counts and the three special tokens.
///
/// Ids form a bijection onto `0..len()`. `__unk__` carries the total count
/// of all collapsed rare tokens, so token mass is conserved.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    ids: HashMap<String, WordId>,
    counts: Vec<u64>,
    min_count: u64,
    unk: WordId,
    bos: WordId,
    eos: WordId,
}

impl Vocabulary {
    /// Build from tokenized sentences, collapsing words with count below
    /// `min_count` into `__unk__`.
    pub fn build(sentences: &[Vec<String>], min_count: u64) -> Vocabulary {
        assert!(min_count >= 1, "min_count must be >= 1");
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for sentence in sentences {
            for tok in sentence {
                *counts.entry(tok.as_str()).or_insert(0) += 1;
            }
        }

        let mut unk_mass = counts.remove(UNK).unwrap_or(0);
        let bos_count = counts.remove(BOS).unwrap_or(0);
        let eos_count = counts.remove(EOS).unwrap_or(0);

        let mut kept: Vec<(&str, u64)> = Vec::new();
        for (word, count) in counts {
            if count >= min_count {
                kept.push((word, count));
            } else {
                unk_mass += count;
            }
        }
        kept.push((UNK, unk_mass));
        kept.push((BOS, bos_count));
        kept.push((EOS, eos_count));
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let words: Vec<String> = kept.iter().map(|(w, _)| w.to_string()).collect();
        let counts: Vec<u64> = kept.iter().map(|&(_, c)| c).collect();
        let ids: HashMap<String, WordId> =
            words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        let unk = ids[UNK];
        let bos = ids[BOS];
        let eos = ids[EOS];
        Vocabulary { words, ids, counts, min_count, unk, bos, eos }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id]
    }

    pub fn id_of(&self, word: &str) -> Option<WordId> {
        self.ids.get(word).copied()
    }

    /// Id of `word`, falling back to `__unk__` for out-of-vocabulary words.
    pub fn lookup(&self, word: &str) -> WordId {
        self.id_of(word).unwrap_or(self.unk)
    }

    pub fn count(&self, id: WordId) -> u64 {
        self.counts[id]
    }

    /// Total token count over the build corpus (collapsed mass included).
    pub fn total_tokens(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    pub fn unk_id(&self) -> WordId {
        self.unk
    }

    pub fn bos_id(&self) -> WordId {
        self.bos
    }

    pub fn eos_id(&self) -> WordId {
        self.eos
    }

    pub fn is_special(&self, id: WordId) -> bool {
        id == self.unk || id == self.bos || id == self.eos
    }

    /// Canonical file serialization; also the hashing pre-image.
    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "#vocab v1 min_count={}", self.min_count);
        for (id, word) in self.words.iter().enumerate() {
            let _ = writeln!(s, "{}\t{}\t{}", id, word, self.counts[id]);
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Vocabulary> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file_string(&text)
    }

    pub fn from_file_string(text: &str) -> Result<Vocabulary> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        let min_count = header
            .strip_prefix("#vocab v1 min_count=")
            .and_then(|v| v.parse::<u64>().ok())
            .ok_or_else(|| Error::Format(format!("bad vocabulary header: {header:?}")))?;

        let mut words = Vec::new();
        let mut counts = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t');
            let (id, word, count) = match (fields.next(), fields.next(), fields.next()) {
                (Some(id), Some(word), Some(count)) => (id, word, count),
                _ => return Err(Error::Format(format!("vocabulary line {}: expected 3 fields", n + 2))),
            };
            let id: usize = id
                .parse()
                .map_err(|_| Error::Format(format!("vocabulary line {}: bad id", n + 2)))?;
            if id != words.len() {
                return Err(Error::Format(format!("vocabulary line {}: ids must be consecutive", n + 2)));
            }
            let count: u64 = count
                .parse()
                .map_err(|_| Error::Format(format!("vocabulary line {}: bad count", n + 2)))?;
            words.push(word.to_string());
            counts.push(count);
        }

        let ids: HashMap<String, WordId> =
            words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        if ids.len() != words.len() {
            return Err(Error::Format("vocabulary contains duplicate words".into()));
        }
        let special = |w: &str| {
            ids.get(w)
                .copied()
                .ok_or_else(|| Error::Format(format!("vocabulary is missing special token {w}")))
        };
        let (unk, bos, eos) = (special(UNK)?, special(BOS)?, special(EOS)?);
        Ok(Vocabulary { words, ids, counts, min_count, unk, bos, eos })
    }

    pub fn content_hash(&self) -> u64 {
        fnv1a(self.to_file_string().as_bytes())
    }
}

/// One encoded sentence: word ids, including the sentence markers when the
/// tokenizer emitted them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSequence {
    ids: Vec<WordId>,
}

impl TokenSequence {
    /// A sequence needs at least two tokens to define one prediction.
    pub fn new(ids: Vec<WordId>) -> Result<TokenSequence> {
        if ids.len() < 2 {
            return Err(Error::EmptyInput(format!(
                "token sequence of length {} cannot define a prediction",
                ids.len()
            )));
        }
        Ok(TokenSequence { ids })
    }

    pub fn encode(tokens: &[String], vocab: &Vocabulary) -> Result<TokenSequence> {
        Self::new(tokens.iter().map(|t| vocab.lookup(t)).collect())
    }

    pub fn ids(&self) -> &[WordId] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Encode tokenized sentences, silently dropping ones too short to predict
/// anything (possible only when sentence markers are disabled).
pub fn encode_corpus(sentences: &[Vec<String>], vocab: &Vocabulary) -> Vec<TokenSequence> {
    sentences
        .iter()
        .filter(|s| s.len() >= 2)
        .map(|s| TokenSequence::encode(s, vocab).expect("length checked"))
        .collect()
}

/// How input words are presented to the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputEncoding {
    /// Word id as a `width`-bit little-endian binary vector.
    BinaryIndex { width: usize },
    /// Standard one-hot; width must equal the vocabulary size.
    OneHot { width: usize },
}

pub const DEFAULT_BINARY_WIDTH: usize = 15;

impl InputEncoding {
    pub fn binary_default() -> InputEncoding {
        InputEncoding::BinaryIndex { width: DEFAULT_BINARY_WIDTH }
    }

    pub fn one_hot(vocab: &Vocabulary) -> InputEncoding {
        InputEncoding::OneHot { width: vocab.len() }
    }

    pub fn width(&self) -> usize {
        match *self {
            InputEncoding::BinaryIndex { width } | InputEncoding::OneHot { width } => width,
        }
    }

    /// Check the encoding can address every id of `vocab`.
    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        match *self {
            InputEncoding::BinaryIndex { width } => {
                if width >= usize::BITS as usize || vocab.len() > (1usize << width) {
                    return Err(Error::Config(format!(
                        "binary-index width {} cannot address a vocabulary of {} words",
                        width,
                        vocab.len()
                    )));
                }
            }
            InputEncoding::OneHot { width } => {
                if width != vocab.len() {
                    return Err(Error::Config(format!(
                        "one-hot width {} != vocabulary size {}",
                        width,
                        vocab.len()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn encode_into(&self, id: WordId, out: &mut [f64]) -> Result<()> {
        debug_assert_eq!(out.len(), self.width());
        out.fill(0.0);
        match *self {
            InputEncoding::BinaryIndex { width } => {
                if width < usize::BITS as usize && id >= (1usize << width) {
                    return Err(Error::Capacity { id, bits: width });
                }
                for (bit, slot) in out.iter_mut().enumerate() {
                    if id >> bit & 1 == 1 {
                        *slot = 1.0;
                    }
                }
            }
            InputEncoding::OneHot { width } => {
                if id >= width {
                    return Err(Error::Capacity { id, bits: width });
                }
                out[id] = 1.0;
            }
        }
        Ok(())
    }
}

/// Encode a single word id as an input vector.
pub fn encode_word(vocab: &Vocabulary, id: WordId, encoding: &InputEncoding) -> Result<Vec<f64>> {
    debug_assert!(id < vocab.len(), "word id out of range");
    let mut out = vec![0.0; encoding.width()];
    encoding.encode_into(id, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(sentences: &[&str]) -> Vec<Vec<String>> {
        sentences
            .iter()
            .map(|s| s.split_whitespace().map(str::to_string).collect())
            .collect()
    }

    #[test]
    fn tokenize_lowercases_and_splits_punctuation() {
        let got = normalize_and_tokenize("The Cat sat.", &TokenizerOptions::default());
        assert_eq!(got, vec![vec!["<s>", "the", "cat", "sat", ".", "</s>"]]);
    }

    #[test]
    fn tokenize_empty_input() {
        assert!(normalize_and_tokenize("", &TokenizerOptions::default()).is_empty());
        assert!(normalize_and_tokenize("\n  \n", &TokenizerOptions::default()).is_empty());
    }

    #[test]
    fn tokenize_without_markers() {
        let opts = TokenizerOptions { sentence_markers: false, ..Default::default() };
        let got = normalize_and_tokenize("a b", &opts);
        assert_eq!(got, vec![vec!["a", "b"]]);
    }

    #[test]
    fn tokenize_sentence_splitting() {
        let opts = TokenizerOptions { split_sentences: true, ..Default::default() };
        let got = normalize_and_tokenize("One. Two! Three?", &opts);
        assert_eq!(
            got,
            vec![
                vec!["<s>", "one", ".", "</s>"],
                vec!["<s>", "two", "!", "</s>"],
                vec!["<s>", "three", "?", "</s>"],
            ]
        );
    }

    #[test]
    fn tokenize_keeps_interior_punctuation() {
        let got = normalize_and_tokenize("don't \"stop\"", &TokenizerOptions::default());
        assert_eq!(got, vec![vec!["<s>", "don't", "\"", "stop", "\"", "</s>"]]);
    }

    #[test]
    fn vocab_threshold_filters_rare_words() {
        // "a" x10, "b" x3 with min_count 5: b collapses into __unk__.
        let sentences: Vec<Vec<String>> = std::iter::repeat_n("a", 10)
            .chain(std::iter::repeat_n("b", 3))
            .map(|w| vec![w.to_string()])
            .collect();
        let vocab = Vocabulary::build(&sentences, 5);
        assert_eq!(vocab.len(), 4); // a, __unk__, <s>, </s>
        assert!(vocab.id_of("a").is_some());
        assert!(vocab.id_of("b").is_none());
        assert_eq!(vocab.lookup("b"), vocab.unk_id());
        assert_eq!(vocab.count(vocab.unk_id()), 3);
    }

    #[test]
    fn vocab_min_count_one_keeps_everything() {
        let vocab = Vocabulary::build(&toks(&["x y z", "x"]), 1);
        assert!(vocab.id_of("z").is_some());
        assert_eq!(vocab.count(vocab.unk_id()), 0);
    }

    #[test]
    fn vocab_conserves_token_mass() {
        let sentences = toks(&["<s> a a b c </s>", "<s> a b d </s>"]);
        let total: usize = sentences.iter().map(Vec::len).sum();
        let vocab = Vocabulary::build(&sentences, 2);
        assert_eq!(vocab.total_tokens(), total as u64);
    }

    #[test]
    fn vocab_ids_ordered_by_descending_count() {
        let vocab = Vocabulary::build(&toks(&["b b b a a c"]), 1);
        let id_a = vocab.id_of("a").unwrap();
        let id_b = vocab.id_of("b").unwrap();
        assert!(id_b < id_a);
        for id in 1..vocab.len() {
            assert!(vocab.count(id - 1) >= vocab.count(id));
        }
    }

    #[test]
    fn vocab_roundtrips_through_file_format() {
        let vocab = Vocabulary::build(&toks(&["<s> the cat sat . </s>", "<s> the dog sat . </s>"]), 1);
        let text = vocab.to_file_string();
        let back = Vocabulary::from_file_string(&text).unwrap();
        assert_eq!(back.to_file_string(), text);
        assert_eq!(back.content_hash(), vocab.content_hash());
    }

    #[test]
    fn vocab_load_rejects_unknown_version() {
        assert!(Vocabulary::from_file_string("#vocab v9 min_count=5\n").is_err());
    }

    #[test]
    fn encode_binary_index_little_endian() {
        let vocab = Vocabulary::build(&toks(&["a b c d e f"]), 1);
        let enc = InputEncoding::binary_default();
        let zero = encode_word(&vocab, 0, &enc).unwrap();
        assert_eq!(zero, vec![0.0; 15]);
        let five = encode_word(&vocab, 5, &enc).unwrap();
        let mut expect = vec![0.0; 15];
        expect[0] = 1.0;
        expect[2] = 1.0;
        assert_eq!(five, expect);
    }

    #[test]
    fn encode_one_hot() {
        let enc = InputEncoding::OneHot { width: 6 };
        let mut out = vec![0.0; 6];
        enc.encode_into(3, &mut out).unwrap();
        assert_eq!(out, vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn encode_rejects_overflowing_id() {
        let enc = InputEncoding::BinaryIndex { width: 3 };
        let mut out = vec![0.0; 3];
        assert!(matches!(enc.encode_into(8, &mut out), Err(Error::Capacity { .. })));
        assert!(enc.encode_into(7, &mut out).is_ok());
    }

    #[test]
    fn token_sequence_rejects_singletons() {
        assert!(TokenSequence::new(vec![0]).is_err());
        assert!(TokenSequence::new(vec![0, 1]).is_ok());
    }
}
