//! The factorized-output recurrent network.
//!
//! A single tanh hidden layer is shared across time steps; the softmax
//! output layer is not one |V|-wide block but one small block per layer of
//! the assignment, selected by the current input word. Training is plain
//! per-sentence SGD with truncated backpropagation through time.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{InputEncoding, TokenSequence, Vocabulary, WordId};
use crate::error::{Error, Result};
use crate::linalg::{add_scaled_slice, clamp_slice, softmax_in_place, Mat};
use crate::packing::{LayerAssignment, LayerId, OutputLayerSpec};

const GRAD_CLIP: f64 = 5.0;

/// Hidden->output parameters of one output layer.
#[derive(Debug, Clone)]
pub struct LayerParams {
    pub v: Mat,
    pub b: Vec<f64>,
}

/// All network parameters plus the layer assignment they are shaped by.
#[derive(Debug, Clone)]
pub struct Model {
    pub hidden: usize,
    pub encoding: InputEncoding,
    /// Input -> hidden weights, `hidden x encoding.width()`.
    pub u: Mat,
    /// Hidden -> hidden recurrence, `hidden x hidden`.
    pub w: Mat,
    pub b_h: Vec<f64>,
    /// One (V, b) pair per output layer, dimensioned to its member count.
    pub layers: Vec<LayerParams>,
    pub assignment: LayerAssignment,
    pub vocab_hash: u64,
    /// Token count of the training corpus; 0 until trained.
    pub train_tokens: u64,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    /// Multiplied into the learning rate when validation (or, lacking one,
    /// training) perplexity fails to improve.
    pub lr_decay: f64,
    /// BPTT truncation depth.
    pub bptt_steps: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Uniform init bound; `None` selects sqrt(6 / (fan_in + fan_out)).
    pub init_scale: Option<f64>,
    /// Element-wise gradient clip to [-5, 5]; disable for purity tests.
    pub clip_gradients: bool,
    /// Seeded sentence shuffling per epoch; off keeps corpus order.
    pub shuffle: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            lr_decay: 0.5,
            bptt_steps: 4,
            epochs: 3,
            seed: 42,
            init_scale: None,
            clip_gradients: true,
            shuffle: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate < 0.0 || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning rate must be finite and >= 0".into()));
        }
        if self.bptt_steps < 1 {
            return Err(Error::Config("bptt_steps must be >= 1".into()));
        }
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        Ok(())
    }
}

/// Accumulated loss over one or more sequences, in bits.
#[derive(Debug, Clone, Copy, Default)]
pub struct SequenceLoss {
    pub bits: f64,
    pub tokens: usize,
    /// Number of probabilities clamped away from zero (softmax underflow).
    pub clamped: usize,
}

impl SequenceLoss {
    pub fn add(&mut self, other: SequenceLoss) {
        self.bits += other.bits;
        self.tokens += other.tokens;
        self.clamped += other.clamped;
    }

    pub fn perplexity(&self) -> f64 {
        (self.bits / self.tokens as f64).exp2()
    }
}

/// Gradients of the bit loss; only layers active in the batch appear.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub u: Mat,
    pub w: Mat,
    pub b_h: Vec<f64>,
    pub layers: BTreeMap<LayerId, LayerParams>,
}

impl Gradients {
    fn zeros_like(model: &Model) -> Gradients {
        Gradients {
            u: Mat::zeros(model.hidden, model.encoding.width()),
            w: Mat::zeros(model.hidden, model.hidden),
            b_h: vec![0.0; model.hidden],
            layers: BTreeMap::new(),
        }
    }

    fn layer_mut(&mut self, id: LayerId, model: &Model) -> &mut LayerParams {
        self.layers.entry(id).or_insert_with(|| LayerParams {
            v: Mat::zeros(model.layers[id].v.rows(), model.hidden),
            b: vec![0.0; model.layers[id].b.len()],
        })
    }

    pub fn accumulate(&mut self, other: &Gradients, model: &Model) {
        self.u.add_scaled(1.0, &other.u);
        self.w.add_scaled(1.0, &other.w);
        add_scaled_slice(&mut self.b_h, 1.0, &other.b_h);
        for (&id, grad) in &other.layers {
            let slot = self.layer_mut(id, model);
            slot.v.add_scaled(1.0, &grad.v);
            add_scaled_slice(&mut slot.b, 1.0, &grad.b);
        }
    }

    fn clamp(&mut self, bound: f64) {
        self.u.clamp_elements(bound);
        self.w.clamp_elements(bound);
        clamp_slice(&mut self.b_h, bound);
        for grad in self.layers.values_mut() {
            grad.v.clamp_elements(bound);
            clamp_slice(&mut grad.b, bound);
        }
    }
}

/// Per-epoch training record.
#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    pub learning_rate: f64,
    pub train_perplexity: f64,
    pub validation_perplexity: Option<f64>,
    pub seconds: f64,
}

/// Probability of `target` under a layer's softmax output: its own unit if
/// it is a member, the `__unk__` unit otherwise.
pub fn word_probability(y: &[f64], layer: &OutputLayerSpec, target: WordId) -> f64 {
    match layer.unit_of(target) {
        Some(unit) => y[unit],
        None => y[layer.unk_unit()],
    }
}

impl Model {
    /// Seeded random initialization. Weights are uniform within the init
    /// bound, biases start at zero.
    pub fn init(
        hidden: usize,
        encoding: InputEncoding,
        assignment: LayerAssignment,
        vocab_hash: u64,
        init_scale: Option<f64>,
        seed: u64,
    ) -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let width = encoding.width();
        let bound = |fan_in: usize, fan_out: usize| {
            init_scale.unwrap_or_else(|| (6.0 / (fan_in + fan_out) as f64).sqrt())
        };

        let mut uniform = |rows: usize, cols: usize, b: f64| {
            Mat::from_fn(rows, cols, |_, _| rng.random_range(-b..=b))
        };
        let u = uniform(hidden, width, bound(width, hidden));
        let w = uniform(hidden, hidden, bound(hidden, hidden));
        let layers = assignment
            .layers()
            .iter()
            .map(|spec| {
                let rows = spec.size();
                LayerParams {
                    v: uniform(rows, hidden, bound(hidden, rows)),
                    b: vec![0.0; rows],
                }
            })
            .collect();

        Model {
            hidden,
            encoding,
            u,
            w,
            b_h: vec![0.0; hidden],
            layers,
            assignment,
            vocab_hash,
            train_tokens: 0,
        }
    }

    /// All-zero parameters; predictions are uniform over each layer.
    pub fn zeroed(
        hidden: usize,
        encoding: InputEncoding,
        assignment: LayerAssignment,
        vocab_hash: u64,
    ) -> Model {
        let layers = assignment
            .layers()
            .iter()
            .map(|spec| LayerParams { v: Mat::zeros(spec.size(), hidden), b: vec![0.0; spec.size()] })
            .collect();
        Model {
            hidden,
            encoding,
            u: Mat::zeros(hidden, encoding.width()),
            w: Mat::zeros(hidden, hidden),
            b_h: vec![0.0; hidden],
            layers,
            assignment,
            vocab_hash,
            train_tokens: 0,
        }
    }

    pub fn param_count(&self) -> usize {
        let h = self.hidden;
        h * self.encoding.width()
            + h * h
            + h
            + self.layers.iter().map(|l| l.v.rows() * h + l.b.len()).sum::<usize>()
    }

    /// One recurrence step: `h_t = tanh(U x + W h_prev + b_h)` and the
    /// softmax distribution of the selected output layer.
    pub fn forward_step(
        &self,
        x: &[f64],
        h_prev: &[f64],
        layer_id: LayerId,
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut pre = vec![0.0; self.hidden];
        self.u.matvec(x, &mut pre);
        let mut rec = vec![0.0; self.hidden];
        self.w.matvec(h_prev, &mut rec);
        let mut h = vec![0.0; self.hidden];
        for i in 0..self.hidden {
            h[i] = (pre[i] + rec[i] + self.b_h[i]).tanh();
        }

        let params = &self.layers[layer_id];
        let mut logits = vec![0.0; params.b.len()];
        params.v.matvec(&h, &mut logits);
        for (l, b) in logits.iter_mut().zip(&params.b) {
            *l += b;
        }
        if !h.iter().all(|v| v.is_finite()) || !logits.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("non-finite activation in forward step".into()));
        }
        softmax_in_place(&mut logits);
        Ok((h, logits))
    }

    /// Total negative log2 probability of a sentence and the number of
    /// predicted tokens. `<s>` is never a target; `</s>` is.
    pub fn sequence_nll(&self, sentence: &TokenSequence) -> Result<SequenceLoss> {
        self.sequence_nll_opts(sentence, true)
    }

    /// As `sequence_nll`, optionally leaving the final `</s>` prediction out
    /// of the tally.
    pub fn sequence_nll_opts(&self, sentence: &TokenSequence, count_eos: bool) -> Result<SequenceLoss> {
        let ids = sentence.ids();
        let mut steps = ids.len() - 1;
        if !count_eos && steps > 0 {
            steps -= 1;
        }
        let mut loss = SequenceLoss::default();
        let mut h = vec![0.0; self.hidden];
        let mut x = vec![0.0; self.encoding.width()];
        for t in 0..steps {
            let layer_id = self.assignment.input_map()[ids[t]];
            self.encoding.encode_into(ids[t], &mut x)?;
            let (h_next, y) = self.forward_step(&x, &h, layer_id)?;
            let p = word_probability(&y, self.assignment.layer(layer_id), ids[t + 1]);
            let p = if p > 0.0 {
                p
            } else {
                loss.clamped += 1;
                1e-30
            };
            loss.bits -= p.log2();
            loss.tokens += 1;
            h = h_next;
        }
        Ok(loss)
    }

    /// Sum of `sequence_nll` over a corpus.
    pub fn corpus_nll(&self, corpus: &[TokenSequence], count_eos: bool) -> Result<SequenceLoss> {
        let mut total = SequenceLoss::default();
        for sentence in corpus {
            total.add(self.sequence_nll_opts(sentence, count_eos)?);
        }
        Ok(total)
    }

    /// Gradients of the sentence bit loss, truncated to `tau` time steps
    /// back from each output. Only layers routed in this sentence appear.
    pub fn bptt_gradients(&self, sentence: &TokenSequence, tau: usize) -> Result<Gradients> {
        Ok(self.backward_pass(sentence, tau)?.0)
    }

    fn backward_pass(&self, sentence: &TokenSequence, tau: usize) -> Result<(Gradients, SequenceLoss)> {
        assert!(tau >= 1, "bptt truncation depth must be >= 1");
        let ids = sentence.ids();
        let steps = ids.len() - 1;
        let h_dim = self.hidden;

        // Forward pass, caching inputs, hidden states and outputs.
        let mut xs: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut hs: Vec<Vec<f64>> = Vec::with_capacity(steps + 1);
        hs.push(vec![0.0; h_dim]);
        let mut ys: Vec<Vec<f64>> = Vec::with_capacity(steps);
        let mut routed: Vec<LayerId> = Vec::with_capacity(steps);
        let mut loss = SequenceLoss::default();
        for t in 0..steps {
            let layer_id = self.assignment.input_map()[ids[t]];
            let mut x = vec![0.0; self.encoding.width()];
            self.encoding.encode_into(ids[t], &mut x)?;
            let (h, y) = self.forward_step(&x, &hs[t], layer_id)?;
            let p = word_probability(&y, self.assignment.layer(layer_id), ids[t + 1]);
            let p = if p > 0.0 {
                p
            } else {
                loss.clamped += 1;
                1e-30
            };
            loss.bits -= p.log2();
            loss.tokens += 1;
            xs.push(x);
            hs.push(h);
            ys.push(y);
            routed.push(layer_id);
        }

        // Backward: the loss is in bits, so the softmax delta picks up a
        // 1/ln 2 factor.
        let mut grads = Gradients::zeros_like(self);
        let mut delta = vec![0.0; h_dim];
        for t in (0..steps).rev() {
            let layer_id = routed[t];
            let layer = self.assignment.layer(layer_id);
            let target_unit = layer.unit_of(ids[t + 1]).unwrap_or(layer.unk_unit());

            let mut dz = ys[t].clone();
            dz[target_unit] -= 1.0;
            for v in dz.iter_mut() {
                *v *= std::f64::consts::LOG2_E;
            }

            {
                let lg = grads.layer_mut(layer_id, self);
                lg.v.add_outer(1.0, &dz, &hs[t + 1]);
                add_scaled_slice(&mut lg.b, 1.0, &dz);
            }

            // dh at step t from this output, then back through time for at
            // most tau steps.
            let mut dh = vec![0.0; h_dim];
            self.layers[layer_id].v.matvec_t_add(&dz, &mut dh);
            let lowest = (t + 1).saturating_sub(tau);
            for s in (lowest..=t).rev() {
                for i in 0..h_dim {
                    let h = hs[s + 1][i];
                    delta[i] = dh[i] * (1.0 - h * h);
                }
                grads.u.add_outer(1.0, &delta, &xs[s]);
                grads.w.add_outer(1.0, &delta, &hs[s]);
                add_scaled_slice(&mut grads.b_h, 1.0, &delta);
                if s > lowest {
                    dh.fill(0.0);
                    self.w.matvec_t_add(&delta, &mut dh);
                }
            }
        }
        Ok((grads, loss))
    }

    fn apply_update(&mut self, grads: &Gradients, lr: f64) {
        self.u.add_scaled(-lr, &grads.u);
        self.w.add_scaled(-lr, &grads.w);
        add_scaled_slice(&mut self.b_h, -lr, &grads.b_h);
        for (&id, grad) in &grads.layers {
            self.layers[id].v.add_scaled(-lr, &grad.v);
            add_scaled_slice(&mut self.layers[id].b, -lr, &grad.b);
        }
    }

    /// Plain per-sentence SGD. Deterministic given the seed: sentences are
    /// visited in corpus order unless the seeded shuffle is enabled.
    ///
    /// When a validation corpus is given its perplexity drives the decay
    /// schedule and is logged per epoch; otherwise training perplexity does.
    pub fn train(
        &mut self,
        corpus: &[TokenSequence],
        config: &TrainConfig,
        validation: Option<&[TokenSequence]>,
    ) -> Result<Vec<EpochStats>> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(Error::EmptyInput("training corpus is empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        let mut lr = config.learning_rate;
        let mut best = f64::INFINITY;
        let mut log = Vec::with_capacity(config.epochs);

        for epoch in 1..=config.epochs {
            let started = std::time::Instant::now();
            if config.shuffle {
                shuffle(&mut order, &mut rng);
            }
            let mut epoch_loss = SequenceLoss::default();
            for &si in &order {
                let (mut grads, loss) = match self.backward_pass(&corpus[si], config.bptt_steps) {
                    Ok(ok) => ok,
                    Err(Error::Numeric(_)) => return Err(Error::Divergence { epoch, sentence: si }),
                    Err(e) => return Err(e),
                };
                if !loss.bits.is_finite() {
                    return Err(Error::Divergence { epoch, sentence: si });
                }
                epoch_loss.add(loss);
                if config.clip_gradients {
                    grads.clamp(GRAD_CLIP);
                }
                self.apply_update(&grads, lr);
            }

            let train_pp = epoch_loss.perplexity();
            let val_pp = match validation {
                Some(v) if !v.is_empty() => Some(self.corpus_nll(v, true)?.perplexity()),
                _ => None,
            };
            log.push(EpochStats {
                epoch,
                learning_rate: lr,
                train_perplexity: train_pp,
                validation_perplexity: val_pp,
                seconds: started.elapsed().as_secs_f64(),
            });

            let metric = val_pp.unwrap_or(train_pp);
            if metric >= best {
                lr *= config.lr_decay;
            } else {
                best = metric;
            }
        }
        self.train_tokens = corpus.iter().map(|s| s.len() as u64).sum();
        Ok(log)
    }

    // -- persistence -------------------------------------------------------

    fn manifest(&self) -> String {
        let mut named: Vec<(String, usize, usize)> = vec![
            ("u".to_string(), self.u.rows(), self.u.cols()),
            ("w".to_string(), self.w.rows(), self.w.cols()),
            ("b_h".to_string(), self.b_h.len(), 1),
        ];
        for (i, layer) in self.layers.iter().enumerate() {
            named.push((format!("v_{i}"), layer.v.rows(), layer.v.cols()));
            named.push((format!("b_{i}"), layer.b.len(), 1));
        }

        let encoding = match self.encoding {
            InputEncoding::BinaryIndex { width } => format!("binary-index {width}"),
            InputEncoding::OneHot { width } => format!("one-hot {width}"),
        };
        let mut s = String::new();
        let _ = writeln!(s, "#model v1");
        let _ = writeln!(s, "vocab_hash {:016x}", self.vocab_hash);
        let _ = writeln!(s, "assignment_hash {:016x}", self.assignment.content_hash());
        let _ = writeln!(s, "hidden {}", self.hidden);
        let _ = writeln!(s, "encoding {encoding}");
        let _ = writeln!(s, "train_tokens {}", self.train_tokens);
        let mut offset = 0usize;
        for (name, rows, cols) in &named {
            let _ = writeln!(s, "tensor {name} {rows} {cols} f64 {offset}");
            offset += rows * cols * 8;
        }
        let _ = writeln!(s, "data {offset}");
        s
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut bytes = self.manifest().into_bytes();
        let mut push = |values: &[f64]| {
            for v in values {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
        };
        push(self.u.data());
        push(self.w.data());
        push(&self.b_h);
        for layer in &self.layers {
            push(layer.v.data());
            push(&layer.b);
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    /// Load a model, verifying it matches the given vocabulary and
    /// assignment by content hash.
    pub fn load(path: &Path, vocab: &Vocabulary, assignment: LayerAssignment) -> Result<Model> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let bad = |msg: &str| Error::Format(format!("{}: {msg}", path.display()));

        // The manifest is newline-terminated text; the raw tensor data
        // starts right after the "data <n>" line.
        let mut pos = 0usize;
        let mut next_line = |bytes: &[u8]| -> Result<String> {
            let end = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::Format(format!("{}: truncated manifest", path.display())))?;
            let line = String::from_utf8(bytes[pos..pos + end].to_vec())
                .map_err(|_| Error::Format(format!("{}: manifest is not utf-8", path.display())))?;
            pos += end + 1;
            Ok(line)
        };

        if next_line(&bytes)? != "#model v1" {
            return Err(bad("bad model header"));
        }
        let mut vocab_hash = None;
        let mut assignment_hash = None;
        let mut hidden = None;
        let mut encoding = None;
        let mut train_tokens = 0u64;
        let mut tensors: Vec<(String, usize, usize, usize)> = Vec::new();
        let data_len;
        loop {
            let line = next_line(&bytes)?;
            let mut fields = line.split_ascii_whitespace();
            match fields.next() {
                Some("vocab_hash") => {
                    vocab_hash = fields.next().and_then(|v| u64::from_str_radix(v, 16).ok());
                }
                Some("assignment_hash") => {
                    assignment_hash = fields.next().and_then(|v| u64::from_str_radix(v, 16).ok());
                }
                Some("hidden") => hidden = fields.next().and_then(|v| v.parse().ok()),
                Some("encoding") => {
                    let mode = fields.next().unwrap_or("");
                    let width: usize =
                        fields.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad encoding"))?;
                    encoding = Some(match mode {
                        "binary-index" => InputEncoding::BinaryIndex { width },
                        "one-hot" => InputEncoding::OneHot { width },
                        _ => return Err(bad("unknown encoding mode")),
                    });
                }
                Some("train_tokens") => {
                    train_tokens = fields.next().and_then(|v| v.parse().ok()).unwrap_or(0);
                }
                Some("tensor") => {
                    let name = fields.next().ok_or_else(|| bad("tensor missing name"))?.to_string();
                    let rows: usize =
                        fields.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("tensor rows"))?;
                    let cols: usize =
                        fields.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("tensor cols"))?;
                    if fields.next() != Some("f64") {
                        return Err(bad("unsupported tensor element type"));
                    }
                    let offset: usize =
                        fields.next().and_then(|v| v.parse().ok()).ok_or_else(|| bad("tensor offset"))?;
                    tensors.push((name, rows, cols, offset));
                }
                Some("data") => {
                    data_len = fields
                        .next()
                        .and_then(|v| v.parse::<usize>().ok())
                        .ok_or_else(|| bad("bad data length"))?;
                    break;
                }
                _ => return Err(bad("unknown manifest line")),
            }
        }

        let vocab_hash = vocab_hash.ok_or_else(|| bad("missing vocab_hash"))?;
        let assignment_hash = assignment_hash.ok_or_else(|| bad("missing assignment_hash"))?;
        let hidden: usize = hidden.ok_or_else(|| bad("missing hidden"))?;
        let encoding = encoding.ok_or_else(|| bad("missing encoding"))?;
        if vocab_hash != vocab.content_hash() {
            return Err(Error::Incompatible("model was trained against a different vocabulary".into()));
        }
        if assignment_hash != assignment.content_hash() {
            return Err(Error::Incompatible("model was trained against a different assignment".into()));
        }
        let data = &bytes[pos..];
        if data.len() != data_len {
            return Err(bad("data section length mismatch"));
        }

        let read_tensor = |rows: usize, cols: usize, offset: usize| -> Result<Mat> {
            let n = rows * cols * 8;
            let slice = data
                .get(offset..offset + n)
                .ok_or_else(|| Error::Format(format!("{}: tensor out of bounds", path.display())))?;
            let values = slice
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            Ok(Mat::from_vec(rows, cols, values))
        };

        let find = |name: &str| -> Result<(usize, usize, usize)> {
            tensors
                .iter()
                .find(|(n, ..)| n == name)
                .map(|&(_, rows, cols, offset)| (rows, cols, offset))
                .ok_or_else(|| Error::Format(format!("{}: missing tensor {name}", path.display())))
        };
        let (ur, uc, uo) = find("u")?;
        let (wr, wc, wo) = find("w")?;
        let (br, _, bo) = find("b_h")?;
        if ur != hidden || uc != encoding.width() || wr != hidden || wc != hidden || br != hidden {
            return Err(bad("tensor dimensions disagree with header"));
        }
        let u = read_tensor(ur, uc, uo)?;
        let w = read_tensor(wr, wc, wo)?;
        let b_h = read_tensor(br, 1, bo)?.data().to_vec();

        let mut layers = Vec::with_capacity(assignment.layer_count());
        for (i, spec) in assignment.layers().iter().enumerate() {
            let (vr, vc, vo) = find(&format!("v_{i}"))?;
            let (brr, _, bro) = find(&format!("b_{i}"))?;
            if vr != spec.size() || vc != hidden || brr != spec.size() {
                return Err(bad("layer tensor dimensions disagree with assignment"));
            }
            layers.push(LayerParams {
                v: read_tensor(vr, vc, vo)?,
                b: read_tensor(brr, 1, bro)?.data().to_vec(),
            });
        }

        Ok(Model {
            hidden,
            encoding,
            u,
            w,
            b_h,
            layers,
            assignment,
            vocab_hash,
            train_tokens,
        })
    }
}

// Fisher-Yates with our own rng so the trait surface stays minimal.
fn shuffle(xs: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..xs.len()).rev() {
        let j = rng.random_range(0..=i);
        xs.swap(i, j);
    }
}
