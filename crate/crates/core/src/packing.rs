//! Output-layer assignment: t-shirt categorization, follow-list truncation,
//! 0/1-knapsack packing and the resulting input-word -> layer map.
//!
//! Words are grouped by the size of their follow list into categories whose
//! capacity (threshold x factor) acts as a knapsack bin. Each knapsack pass
//! selects as many words as fit, their truncated follow lists are unioned
//! into one shared output layer, and the pass repeats until the category is
//! exhausted. Layers from different passes may share output words.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::corpus::{Vocabulary, WordId};
use crate::error::{Error, Result};
use crate::follow::FollowTable;
use crate::hash::fnv1a;

pub type LayerId = usize;

/// Packing categories, ordered by threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Category {
    Tiny,
    Small,
    Medium,
    Large,
    XLarge,
    XXLarge,
    Ultra,
}

pub const CATEGORIES: [Category; 7] = [
    Category::Tiny,
    Category::Small,
    Category::Medium,
    Category::Large,
    Category::XLarge,
    Category::XXLarge,
    Category::Ultra,
];

impl Category {
    pub fn label(&self) -> &'static str {
        match self {
            Category::Tiny => "tiny",
            Category::Small => "small",
            Category::Medium => "medium",
            Category::Large => "large",
            Category::XLarge => "xlarge",
            Category::XXLarge => "xxlarge",
            Category::Ultra => "ultra",
        }
    }

    pub fn index(&self) -> usize {
        CATEGORIES.iter().position(|c| c == self).unwrap()
    }

    pub fn from_label(label: &str) -> Option<Category> {
        CATEGORIES.iter().copied().find(|c| c.label() == label)
    }
}

/// Category thresholds and the per-category integer factors; the product is
/// a category's output-layer capacity (the knapsack bin size).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TShirtConfig {
    pub thresholds: [usize; 7],
    pub factors: [usize; 7],
}

impl Default for TShirtConfig {
    fn default() -> Self {
        TShirtConfig {
            thresholds: [32, 64, 128, 256, 512, 1024, 2048],
            factors: [10, 8, 5, 4, 4, 3, 3],
        }
    }
}

impl TShirtConfig {
    pub fn validate(&self) -> Result<()> {
        for pair in self.thresholds.windows(2) {
            if pair[0] >= pair[1] {
                return Err(Error::Config("t-shirt thresholds must be strictly increasing".into()));
            }
        }
        if self.thresholds[0] == 0 {
            return Err(Error::Config("t-shirt thresholds must be positive".into()));
        }
        for (i, &f) in self.factors.iter().enumerate() {
            if f < 1 {
                return Err(Error::Config("t-shirt factors must be >= 1".into()));
            }
            if self.thresholds[i] * f < 2 {
                return Err(Error::Config(format!(
                    "category {} capacity {} is below the minimum of 2",
                    CATEGORIES[i].label(),
                    self.thresholds[i] * f
                )));
            }
        }
        Ok(())
    }

    pub fn capacity(&self, category: Category) -> usize {
        let i = category.index();
        self.thresholds[i] * self.factors[i]
    }

    /// Smallest category whose threshold covers `follow_size`; oversized
    /// follow lists clamp to `Ultra`.
    pub fn categorize(&self, follow_size: usize) -> Category {
        for (i, &t) in self.thresholds.iter().enumerate() {
            if follow_size <= t {
                return CATEGORIES[i];
            }
        }
        Category::Ultra
    }
}

/// Keep the `cap` most frequent followers (the list is already sorted by
/// descending count).
pub fn truncate_follow_list(list: &[(WordId, u64)], cap: usize) -> &[(WordId, u64)] {
    &list[..list.len().min(cap)]
}

/// One 0/1-knapsack pass with unit benefit per word.
///
/// Returns the indices (ascending) of a selection maximizing the number of
/// words subject to the cost sum staying within `capacity`. The DP table is
/// `benefits[i][j]` over words `i` and budgets `j`, recovered by
/// backtracking; whenever some cost fits the budget at least one word is
/// selected. All costs must be >= 1.
pub fn knapsack_pack_once(costs: &[usize], capacity: usize) -> Vec<usize> {
    debug_assert!(costs.iter().all(|&c| c >= 1));
    let n = costs.len();
    if n == 0 || capacity == 0 {
        return Vec::new();
    }
    let width = capacity + 1;
    let mut benefits = vec![0u32; (n + 1) * width];
    for i in 1..=n {
        let cost = costs[i - 1];
        let (prev_rows, rest) = benefits.split_at_mut(i * width);
        let prev = &prev_rows[(i - 1) * width..];
        let cur = &mut rest[..width];
        for j in 0..width {
            cur[j] = if cost > j {
                prev[j]
            } else {
                prev[j].max(prev[j - cost] + 1)
            };
        }
    }

    let mut selected = Vec::new();
    let mut i = n;
    let mut j = capacity;
    while i > 0 && j > 0 {
        if benefits[i * width + j] != benefits[(i - 1) * width + j] {
            selected.push(i - 1);
            j -= costs[i - 1];
        }
        i -= 1;
    }
    selected.reverse();
    selected
}

/// A packed layer before the special-token appends: the input words that
/// share it and the union of their truncated follow lists.
#[derive(Debug, Clone)]
pub struct PackedLayer {
    pub inputs: Vec<WordId>,
    pub outputs: Vec<WordId>,
}

/// Repeatedly knapsack-pack `words` (all of one category) into layers of at
/// most `capacity` output words.
///
/// Costs are truncated follow-list sizes, ignoring overlap; the union step
/// then shrinks the actual layer. Every word must have a nonempty follow
/// list no larger than `capacity`.
pub fn generate_output_layers(
    words: &[WordId],
    table: &FollowTable,
    capacity: usize,
) -> Vec<PackedLayer> {
    let mut remaining: Vec<WordId> = words.to_vec();
    let mut layers = Vec::new();
    while !remaining.is_empty() {
        let costs: Vec<usize> = remaining
            .iter()
            .map(|&w| table.follow_size(w).min(capacity))
            .collect();
        let picked = knapsack_pack_once(&costs, capacity);
        assert!(!picked.is_empty(), "every cost fits the bin, so a pass must select words");

        let mut inputs = Vec::with_capacity(picked.len());
        let mut union: BTreeSet<WordId> = BTreeSet::new();
        for &i in &picked {
            let w = remaining[i];
            inputs.push(w);
            for &(f, _) in truncate_follow_list(table.follow_list(w), capacity) {
                union.insert(f);
            }
        }
        layers.push(PackedLayer { inputs, outputs: union.into_iter().collect() });

        let picked_set: HashSet<usize> = picked.into_iter().collect();
        remaining = remaining
            .iter()
            .enumerate()
            .filter(|(i, _)| !picked_set.contains(i))
            .map(|(_, &w)| w)
            .collect();
    }
    layers
}

/// One shared softmax output layer: its member words and their unit order.
#[derive(Debug, Clone)]
pub struct OutputLayerSpec {
    id: LayerId,
    category: Category,
    members: Vec<WordId>,
    unit_index: HashMap<WordId, usize>,
    unk_unit: usize,
}

impl OutputLayerSpec {
    pub fn new(id: LayerId, category: Category, members: Vec<WordId>, unk: WordId) -> Result<OutputLayerSpec> {
        let unit_index: HashMap<WordId, usize> =
            members.iter().enumerate().map(|(i, &w)| (w, i)).collect();
        if unit_index.len() != members.len() {
            return Err(Error::Format(format!("layer {id} has duplicate members")));
        }
        let unk_unit = *unit_index
            .get(&unk)
            .ok_or_else(|| Error::Format(format!("layer {id} is missing __unk__")))?;
        Ok(OutputLayerSpec { id, category, members, unit_index, unk_unit })
    }

    pub fn id(&self) -> LayerId {
        self.id
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn members(&self) -> &[WordId] {
        &self.members
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn unit_of(&self, w: WordId) -> Option<usize> {
        self.unit_index.get(&w).copied()
    }

    /// Unit position of `__unk__`, the fallback prediction target.
    pub fn unk_unit(&self) -> usize {
        self.unk_unit
    }

    pub fn contains(&self, w: WordId) -> bool {
        self.unit_index.contains_key(&w)
    }
}

/// The complete output-layer assignment: all layers plus the total map from
/// input word to layer.
#[derive(Debug, Clone)]
pub struct LayerAssignment {
    layers: Vec<OutputLayerSpec>,
    input_map: Vec<LayerId>,
    vocab_hash: u64,
}

impl LayerAssignment {
    pub fn from_parts(
        layers: Vec<OutputLayerSpec>,
        input_map: Vec<LayerId>,
        vocab: &Vocabulary,
    ) -> Result<LayerAssignment> {
        if input_map.len() != vocab.len() {
            return Err(Error::Format(format!(
                "input map covers {} words, vocabulary has {}",
                input_map.len(),
                vocab.len()
            )));
        }
        for (i, layer) in layers.iter().enumerate() {
            if layer.id != i {
                return Err(Error::Format("layer ids must be consecutive from 0".into()));
            }
            if let Some(&w) = layer.members.iter().find(|&&w| w >= vocab.len()) {
                return Err(Error::Format(format!("layer {i} member id {w} out of range")));
            }
        }
        for (w, &l) in input_map.iter().enumerate() {
            if l >= layers.len() {
                return Err(Error::Format(format!("word {w} mapped to unknown layer {l}")));
            }
        }
        Ok(LayerAssignment { layers, input_map, vocab_hash: vocab.content_hash() })
    }

    pub fn layers(&self) -> &[OutputLayerSpec] {
        &self.layers
    }

    pub fn layer(&self, id: LayerId) -> &OutputLayerSpec {
        &self.layers[id]
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn input_map(&self) -> &[LayerId] {
        &self.input_map
    }

    /// The layer that predicts successors of input word `w`.
    pub fn layer_of(&self, w: WordId) -> &OutputLayerSpec {
        &self.layers[self.input_map[w]]
    }

    pub fn vocab_hash(&self) -> u64 {
        self.vocab_hash
    }

    pub fn to_file_string(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "#assignment v1 vocab={:016x}", self.vocab_hash);
        for layer in &self.layers {
            let _ = write!(s, "layer {} {}", layer.id, layer.category.label());
            for &m in &layer.members {
                let _ = write!(s, " {m}");
            }
            s.push('\n');
        }
        for (w, &l) in self.input_map.iter().enumerate() {
            let _ = writeln!(s, "map {w} {l}");
        }
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_file_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<LayerAssignment> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_file_string(&text, vocab)
    }

    pub fn from_file_string(text: &str, vocab: &Vocabulary) -> Result<LayerAssignment> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        let stored_hash = header
            .strip_prefix("#assignment v1 vocab=")
            .and_then(|h| u64::from_str_radix(h, 16).ok())
            .ok_or_else(|| Error::Format(format!("bad assignment header: {header:?}")))?;
        if stored_hash != vocab.content_hash() {
            return Err(Error::Incompatible(
                "assignment was built against a different vocabulary".into(),
            ));
        }

        let mut layers = Vec::new();
        let mut input_map = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split_ascii_whitespace();
            let err = |msg: &str| Error::Format(format!("assignment line {}: {msg}", n + 2));
            match fields.next() {
                Some("layer") => {
                    let id: LayerId = fields
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| err("bad layer id"))?;
                    if id != layers.len() {
                        return Err(err("layer ids must be consecutive"));
                    }
                    let category = fields
                        .next()
                        .and_then(Category::from_label)
                        .ok_or_else(|| err("bad category"))?;
                    let members: Vec<WordId> = fields
                        .map(|v| v.parse().map_err(|_| err("bad member id")))
                        .collect::<Result<_>>()?;
                    layers.push(OutputLayerSpec::new(id, category, members, vocab.unk_id())?);
                }
                Some("map") => {
                    let w: WordId = fields
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| err("bad word id"))?;
                    if w != input_map.len() {
                        return Err(err("map lines must cover word ids in order"));
                    }
                    let l: LayerId = fields
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| err("bad layer id"))?;
                    input_map.push(l);
                }
                _ => return Err(err("expected 'layer' or 'map'")),
            }
        }
        Self::from_parts(layers, input_map, vocab)
    }

    pub fn content_hash(&self) -> u64 {
        fnv1a(self.to_file_string().as_bytes())
    }
}

/// Categorize, truncate and pack every vocabulary word into output layers.
///
/// `__unk__` is appended to every layer so out-of-layer targets stay
/// predictable, and `</s>` is appended to any layer serving a word with
/// sentence-final occurrences. Words that never precede anything (usually
/// just `</s>`) are mapped to the first layer already containing both
/// specials, or to a dedicated minimal layer when none exists.
pub fn assign_layers(
    vocab: &Vocabulary,
    table: &FollowTable,
    config: &TShirtConfig,
) -> Result<LayerAssignment> {
    config.validate()?;
    if vocab.is_empty() {
        return LayerAssignment::from_parts(Vec::new(), Vec::new(), vocab);
    }

    // Ascending id order is descending unigram count, so frequent words
    // anchor layers early.
    let mut by_category: Vec<Vec<WordId>> = vec![Vec::new(); CATEGORIES.len()];
    let mut unfollowed: Vec<WordId> = Vec::new();
    for w in 0..vocab.len() {
        let size = table.follow_size(w);
        if size == 0 {
            unfollowed.push(w);
        } else {
            by_category[config.categorize(size).index()].push(w);
        }
    }

    let unk = vocab.unk_id();
    let eos = vocab.eos_id();
    let mut layers: Vec<OutputLayerSpec> = Vec::new();
    let mut input_map = vec![usize::MAX; vocab.len()];

    for (ci, words) in by_category.iter().enumerate() {
        if words.is_empty() {
            continue;
        }
        let category = CATEGORIES[ci];
        let capacity = config.capacity(category);
        for packed in generate_output_layers(words, table, capacity) {
            let mut members: BTreeSet<WordId> = packed.outputs.iter().copied().collect();
            members.insert(unk);
            if packed.inputs.iter().any(|&w| table.ends_sentence(w, vocab)) {
                members.insert(eos);
            }
            let id = layers.len();
            for &w in &packed.inputs {
                input_map[w] = id;
            }
            layers.push(OutputLayerSpec::new(id, category, members.into_iter().collect(), unk)?);
        }
    }

    if !unfollowed.is_empty() {
        let id = match layers.iter().find(|l| l.contains(unk) && l.contains(eos)) {
            Some(layer) => layer.id(),
            None => {
                let id = layers.len();
                let mut members: BTreeSet<WordId> = BTreeSet::new();
                members.insert(unk);
                members.insert(eos);
                layers.push(OutputLayerSpec::new(
                    id,
                    Category::Tiny,
                    members.into_iter().collect(),
                    unk,
                )?);
                id
            }
        };
        for &w in &unfollowed {
            input_map[w] = id;
        }
    }

    LayerAssignment::from_parts(layers, input_map, vocab)
}

/// Per-category layer counts and capacities, as CSV.
pub fn pack_report(assignment: &LayerAssignment, config: &TShirtConfig) -> String {
    let mut counts = [0usize; 7];
    let mut largest = [0usize; 7];
    for layer in assignment.layers() {
        let i = layer.category().index();
        counts[i] += 1;
        largest[i] = largest[i].max(layer.size());
    }
    let mut s = String::from("category,layers,max_size,largest_actual\n");
    for (i, cat) in CATEGORIES.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            cat.label(),
            counts[i],
            config.capacity(*cat),
            largest[i]
        );
    }
    s
}
