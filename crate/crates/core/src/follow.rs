//! Per-word bigram follow lists and their size-bin histograms.
//!
//! The follow list of a word is the set of distinct words observed
//! immediately after it, with counts. Follow-list sizes drive both the
//! histogram reports and the output-layer packing.

use std::fmt::Write as _;

use crate::corpus::{TokenSequence, Vocabulary, WordId};

/// Follow lists for every vocabulary word, sorted by descending bigram
/// count with ascending-id tie-breaking.
#[derive(Debug, Clone)]
pub struct FollowTable {
    entries: Vec<Vec<(WordId, u64)>>,
    total_tokens: u64,
}

impl FollowTable {
    /// Count adjacent token pairs within each sequence. Pairs never cross
    /// sentence boundaries.
    pub fn build(sequences: &[TokenSequence], vocab: &Vocabulary) -> FollowTable {
        let mut counts: Vec<std::collections::HashMap<WordId, u64>> =
            vec![Default::default(); vocab.len()];
        let mut total_tokens = 0u64;
        for seq in sequences {
            let ids = seq.ids();
            total_tokens += ids.len() as u64;
            for pair in ids.windows(2) {
                *counts[pair[0]].entry(pair[1]).or_insert(0) += 1;
            }
        }
        let entries = counts
            .into_iter()
            .map(|m| {
                let mut list: Vec<(WordId, u64)> = m.into_iter().collect();
                list.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
                list
            })
            .collect();
        FollowTable { entries, total_tokens }
    }

    pub fn follow_list(&self, w: WordId) -> &[(WordId, u64)] {
        &self.entries[w]
    }

    pub fn follow_size(&self, w: WordId) -> usize {
        self.entries[w].len()
    }

    pub fn word_count(&self) -> usize {
        self.entries.len()
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    /// Total number of observed (position-counted) bigram pairs.
    pub fn pair_occurrences(&self) -> u64 {
        self.entries.iter().flatten().map(|&(_, c)| c).sum()
    }

    /// Did `w` ever occur in sentence-final position?
    pub fn ends_sentence(&self, w: WordId, vocab: &Vocabulary) -> bool {
        self.entries[w].iter().any(|&(f, _)| f == vocab.eos_id())
    }
}

/// Follow-list size bins. `Single` exists only in histograms; packing
/// categories start at `Tiny`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SizeBin {
    Single,
    Tiny,
    Small,
    Medium,
    Large,
    XLarge,
    XXLarge,
    Ultra,
}

pub const SIZE_BINS: [SizeBin; 8] = [
    SizeBin::Single,
    SizeBin::Tiny,
    SizeBin::Small,
    SizeBin::Medium,
    SizeBin::Large,
    SizeBin::XLarge,
    SizeBin::XXLarge,
    SizeBin::Ultra,
];

/// Inclusive upper bounds; `Ultra` is unbounded.
const BIN_UPPER: [usize; 7] = [1, 32, 64, 128, 256, 512, 1024];

impl SizeBin {
    /// Bin for a follow-list size. Empty lists count as `Single`.
    pub fn of(follow_size: usize) -> SizeBin {
        for (i, &upper) in BIN_UPPER.iter().enumerate() {
            if follow_size <= upper {
                return SIZE_BINS[i];
            }
        }
        SizeBin::Ultra
    }

    pub fn label(&self) -> &'static str {
        match self {
            SizeBin::Single => "single",
            SizeBin::Tiny => "tiny",
            SizeBin::Small => "small",
            SizeBin::Medium => "medium",
            SizeBin::Large => "large",
            SizeBin::XLarge => "xlarge",
            SizeBin::XXLarge => "xxlarge",
            SizeBin::Ultra => "ultra",
        }
    }

    pub fn index(&self) -> usize {
        SIZE_BINS.iter().position(|b| b == self).unwrap()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct BinRow {
    /// Number of word types in the bin.
    pub type_count: usize,
    /// Number of distinct bigram pairs contributed by the bin's words.
    pub pair_count: u64,
    /// Fraction of corpus tokens carried by the bin's words.
    pub token_mass: f64,
}

/// Vocabulary partition by follow-list size, with token mass per bin.
#[derive(Debug, Clone)]
pub struct BinHistogram {
    pub rows: [BinRow; 8],
}

/// Assign every vocabulary word to its bin and weigh bins by unigram mass.
pub fn bin_histogram(table: &FollowTable, vocab: &Vocabulary) -> BinHistogram {
    let mut rows = [BinRow::default(); 8];
    let total = vocab.total_tokens();
    for w in 0..vocab.len() {
        let size = table.follow_size(w);
        let row = &mut rows[SizeBin::of(size).index()];
        row.type_count += 1;
        row.pair_count += size as u64;
        if total > 0 {
            row.token_mass += vocab.count(w) as f64 / total as f64;
        }
    }
    BinHistogram { rows }
}

impl BinHistogram {
    /// The four columns named in the export contract, plus the bigram pair
    /// count since the figures' y-axis could be read either way.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("bin,label,type_count,token_mass,pair_count\n");
        for (i, bin) in SIZE_BINS.iter().enumerate() {
            let row = &self.rows[i];
            let _ = writeln!(
                s,
                "{},{},{},{:.9},{}",
                i,
                bin.label(),
                row.type_count,
                row.token_mass,
                row.pair_count
            );
        }
        s
    }

    pub fn total_types(&self) -> usize {
        self.rows.iter().map(|r| r.type_count).sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.rows.iter().map(|r| r.token_mass).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{encode_corpus, normalize_and_tokenize, TokenizerOptions, Vocabulary};

    fn fixture(lines: &str) -> (Vocabulary, Vec<TokenSequence>) {
        let sentences = normalize_and_tokenize(lines, &TokenizerOptions::default());
        let vocab = Vocabulary::build(&sentences, 1);
        let seqs = encode_corpus(&sentences, &vocab);
        (vocab, seqs)
    }

    #[test]
    fn follow_lists_count_direct_bigrams() {
        let (vocab, seqs) = fixture("a b\na c\n");
        let table = FollowTable::build(&seqs, &vocab);
        let a = vocab.id_of("a").unwrap();
        let b = vocab.id_of("b").unwrap();
        let c = vocab.id_of("c").unwrap();
        let list = table.follow_list(a);
        assert_eq!(list.len(), 2);
        assert!(list.contains(&(b, 1)));
        assert!(list.contains(&(c, 1)));
        assert_eq!(table.follow_list(vocab.bos_id()), &[(a, 2)]);
    }

    #[test]
    fn self_bigrams_and_sentence_end() {
        let (vocab, seqs) = fixture("x x x\n");
        let table = FollowTable::build(&seqs, &vocab);
        let x = vocab.id_of("x").unwrap();
        let list = table.follow_list(x);
        assert_eq!(list, &[(x, 2), (vocab.eos_id(), 1)]);
        assert!(table.ends_sentence(x, &vocab));
    }

    #[test]
    fn bos_never_follows_anything() {
        let (vocab, seqs) = fixture("a b\nb a\n");
        let table = FollowTable::build(&seqs, &vocab);
        let bos = vocab.bos_id();
        for w in 0..vocab.len() {
            assert!(table.follow_list(w).iter().all(|&(f, _)| f != bos));
        }
        assert!(!table.follow_list(bos).is_empty());
    }

    #[test]
    fn pair_occurrences_conserved() {
        let (vocab, seqs) = fixture("a b c\nc b a\na a\n");
        let table = FollowTable::build(&seqs, &vocab);
        let expected: u64 = seqs.iter().map(|s| s.len() as u64 - 1).sum();
        assert_eq!(table.pair_occurrences(), expected);
    }

    #[test]
    fn bin_boundaries_are_inclusive() {
        assert_eq!(SizeBin::of(0), SizeBin::Single);
        assert_eq!(SizeBin::of(1), SizeBin::Single);
        assert_eq!(SizeBin::of(2), SizeBin::Tiny);
        assert_eq!(SizeBin::of(10), SizeBin::Tiny);
        assert_eq!(SizeBin::of(32), SizeBin::Tiny);
        assert_eq!(SizeBin::of(33), SizeBin::Small);
        assert_eq!(SizeBin::of(1024), SizeBin::XXLarge);
        assert_eq!(SizeBin::of(1025), SizeBin::Ultra);
    }

    #[test]
    fn histogram_partitions_vocabulary() {
        let (vocab, seqs) = fixture("a b c d\nb c d a\nd c\n");
        let table = FollowTable::build(&seqs, &vocab);
        let hist = bin_histogram(&table, &vocab);
        assert_eq!(hist.total_types(), vocab.len());
        assert!((hist.total_mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn histogram_csv_shape() {
        let (vocab, seqs) = fixture("a b\n");
        let table = FollowTable::build(&seqs, &vocab);
        let csv = bin_histogram(&table, &vocab).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 9);
        assert_eq!(lines[0], "bin,label,type_count,token_mass,pair_count");
        assert!(lines[1].starts_with("0,single,"));
        assert!(lines[8].starts_with("7,ultra,"));
    }
}
