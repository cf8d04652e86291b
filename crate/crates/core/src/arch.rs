//! The four classifiers and their composition from [`crate::nn`] layers.
//!
//! | arch        | layers                                                                 |
//! |-------------|------------------------------------------------------------------------|
//! | `lstm`      | embedding, LSTM (last state), dense + ReLU, dense                      |
//! | `lstm-conv` | embedding, conv k=3, LSTM (all states), global max pool, dense         |
//! | `bilstm`    | embedding, BiLSTM, conv k=3, [global avg pool, global max pool], dense |
//! | `cnn`       | embedding, conv k=3/4/5 in parallel, max pool each, concat, dense + ReLU, dense |
//!
//! Every model ends in three logits; probabilities come from a softmax.

use std::fmt;
use std::str::FromStr;

use crate::corpus::Sentiment;
use crate::error::{Error, Result};
use crate::nn::init::{glorot_uniform, rng_from_seed, uniform, SeededRng};
use crate::nn::ops::{AvgPoolCache, ConcatCache, Conv1dCache, DenseCache, MaxPoolCache};
use crate::nn::{self, Activation, BiLstmCache, LstmCache, LstmParams, Tensor};
use crate::scalar::Scalar;
use crate::vocab::{IdSequence, DEFAULT_SEQ_LEN, DEFAULT_VOCAB_SIZE};
use crate::NUM_CLASSES;

/// Kernel width of the single convolution in `lstm-conv` and `bilstm`.
pub const CONV_KERNEL: usize = 3;
/// Kernel widths of the three `cnn` branches.
pub const CNN_KERNELS: [usize; 3] = [3, 4, 5];

const EMBEDDING_INIT_LIMIT: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ArchId {
    Lstm,
    LstmConv,
    BiLstm,
    Cnn,
}

impl ArchId {
    pub const ALL: [ArchId; 4] = [ArchId::Lstm, ArchId::LstmConv, ArchId::BiLstm, ArchId::Cnn];

    pub fn name(self) -> &'static str {
        match self {
            ArchId::Lstm => "lstm",
            ArchId::LstmConv => "lstm-conv",
            ArchId::BiLstm => "bilstm",
            ArchId::Cnn => "cnn",
        }
    }

    /// Position in [`ArchId::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }

    fn min_seq_len(self) -> usize {
        match self {
            ArchId::Lstm => 1,
            ArchId::LstmConv | ArchId::BiLstm => CONV_KERNEL,
            ArchId::Cnn => CNN_KERNELS[2],
        }
    }
}

impl fmt::Display for ArchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ArchId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ArchId::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown architecture {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub seq_len: usize,
    pub embedding_dim: usize,
    pub lstm_units: usize,
    pub conv_filters: usize,
    pub dense_hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            vocab_size: DEFAULT_VOCAB_SIZE,
            seq_len: DEFAULT_SEQ_LEN,
            embedding_dim: 128,
            lstm_units: 64,
            conv_filters: 64,
            dense_hidden: 32,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self, arch: ArchId) -> Result<()> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("seq_len", self.seq_len),
            ("embedding_dim", self.embedding_dim),
            ("lstm_units", self.lstm_units),
            ("conv_filters", self.conv_filters),
            ("dense_hidden", self.dense_hidden),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidArgument(format!("{name} must be at least 1")));
        }
        if self.seq_len < arch.min_seq_len() {
            return Err(Error::InvalidArgument(format!(
                "{arch} needs seq_len >= {}, got {}",
                arch.min_seq_len(),
                self.seq_len
            )));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// layer parameter groups

#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T> {
    /// `[outputs, inputs]`
    pub weight: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Dense<T> {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense { weight: Tensor::zeros(&[outputs, inputs]), bias: Tensor::zeros(&[outputs]) }
    }

    fn init(rng: &mut SeededRng, inputs: usize, outputs: usize) -> Self {
        Dense { weight: glorot_uniform(rng, &[outputs, inputs], inputs, outputs), bias: Tensor::zeros(&[outputs]) }
    }

    fn forward(&self, x: &Tensor<T>, act: Activation) -> Result<(Tensor<T>, DenseCache<T>)> {
        nn::dense_forward(&self.weight, &self.bias, x, act)
    }

    fn backward(&self, cache: &DenseCache<T>, grad: &Tensor<T>, grads: &mut Self) -> Result<Tensor<T>> {
        nn::dense_grad(&self.weight, cache, grad, &mut grads.weight, &mut grads.bias)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Conv<T> {
    /// `[filters, width, channels]`
    pub kernel: Tensor<T>,
    pub bias: Tensor<T>,
}

impl<T: Scalar> Conv<T> {
    fn zeros(channels: usize, width: usize, filters: usize) -> Self {
        Conv { kernel: Tensor::zeros(&[filters, width, channels]), bias: Tensor::zeros(&[filters]) }
    }

    fn init(rng: &mut SeededRng, channels: usize, width: usize, filters: usize) -> Self {
        Conv {
            kernel: glorot_uniform(rng, &[filters, width, channels], width * channels, width * filters),
            bias: Tensor::zeros(&[filters]),
        }
    }

    fn forward(&self, x: &Tensor<T>) -> Result<(Tensor<T>, Conv1dCache<T>)> {
        nn::conv1d_forward(&self.kernel, &self.bias, x)
    }

    fn backward(&self, cache: &Conv1dCache<T>, grad: &Tensor<T>, grads: &mut Self) -> Result<Tensor<T>> {
        nn::conv1d_grad(&self.kernel, cache, grad, &mut grads.kernel, &mut grads.bias)
    }
}

fn init_lstm<T: Scalar>(rng: &mut SeededRng, input_dim: usize, hidden: usize) -> LstmParams<T> {
    let mut bias = Tensor::zeros(&[4 * hidden]);
    // forget gate starts open
    bias.data_mut()[hidden..2 * hidden].iter_mut().for_each(|b| *b = T::one());
    LstmParams {
        w_input: glorot_uniform(rng, &[input_dim, 4 * hidden], input_dim, 4 * hidden),
        w_recurrent: glorot_uniform(rng, &[hidden, 4 * hidden], hidden, 4 * hidden),
        bias,
    }
}

fn init_embedding<T: Scalar>(rng: &mut SeededRng, config: &ModelConfig) -> Tensor<T> {
    uniform(rng, &[config.vocab_size, config.embedding_dim], EMBEDDING_INIT_LIMIT)
}

// ---------------------------------------------------------------------------
// networks

#[derive(Clone, Debug, PartialEq)]
pub struct LstmNet<T> {
    pub embedding: Tensor<T>,
    pub lstm: LstmParams<T>,
    pub hidden: Dense<T>,
    pub output: Dense<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmConvNet<T> {
    pub embedding: Tensor<T>,
    pub conv: Conv<T>,
    pub lstm: LstmParams<T>,
    pub output: Dense<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BiLstmNet<T> {
    pub embedding: Tensor<T>,
    pub forward: LstmParams<T>,
    pub backward: LstmParams<T>,
    pub conv: Conv<T>,
    pub output: Dense<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CnnNet<T> {
    pub embedding: Tensor<T>,
    /// One branch per entry of [`CNN_KERNELS`].
    pub branches: Vec<Conv<T>>,
    pub hidden: Dense<T>,
    pub output: Dense<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Network<T> {
    Lstm(LstmNet<T>),
    LstmConv(LstmConvNet<T>),
    BiLstm(BiLstmNet<T>),
    Cnn(CnnNet<T>),
}

// one short-lived cache per example, so boxing the large variants buys nothing
#[allow(clippy::large_enum_variant)]
enum Cache<T> {
    Lstm {
        lstm: LstmCache<T>,
        hidden: DenseCache<T>,
        output: DenseCache<T>,
    },
    LstmConv {
        conv: Conv1dCache<T>,
        lstm: LstmCache<T>,
        pool: MaxPoolCache,
        output: DenseCache<T>,
    },
    BiLstm {
        bilstm: BiLstmCache<T>,
        conv: Conv1dCache<T>,
        avg: AvgPoolCache,
        max: MaxPoolCache,
        concat: ConcatCache,
        output: DenseCache<T>,
    },
    Cnn {
        branches: Vec<(Conv1dCache<T>, MaxPoolCache)>,
        concat: ConcatCache,
        hidden: DenseCache<T>,
        output: DenseCache<T>,
    },
}

impl<T: Scalar> Network<T> {
    fn build(arch: ArchId, c: &ModelConfig, rng: Option<&mut SeededRng>) -> Self {
        let (e, h, f, d) = (c.embedding_dim, c.lstm_units, c.conv_filters, c.dense_hidden);
        let Some(rng) = rng else {
            let embedding = Tensor::zeros(&[c.vocab_size, e]);
            return match arch {
                ArchId::Lstm => Network::Lstm(LstmNet {
                    embedding,
                    lstm: LstmParams::zeros(e, h),
                    hidden: Dense::zeros(h, d),
                    output: Dense::zeros(d, NUM_CLASSES),
                }),
                ArchId::LstmConv => Network::LstmConv(LstmConvNet {
                    embedding,
                    conv: Conv::zeros(e, CONV_KERNEL, f),
                    lstm: LstmParams::zeros(f, h),
                    output: Dense::zeros(h, NUM_CLASSES),
                }),
                ArchId::BiLstm => Network::BiLstm(BiLstmNet {
                    embedding,
                    forward: LstmParams::zeros(e, h),
                    backward: LstmParams::zeros(e, h),
                    conv: Conv::zeros(2 * h, CONV_KERNEL, f),
                    output: Dense::zeros(2 * f, NUM_CLASSES),
                }),
                ArchId::Cnn => Network::Cnn(CnnNet {
                    embedding,
                    branches: CNN_KERNELS.iter().map(|&k| Conv::zeros(e, k, f)).collect(),
                    hidden: Dense::zeros(CNN_KERNELS.len() * f, d),
                    output: Dense::zeros(d, NUM_CLASSES),
                }),
            };
        };
        let embedding = init_embedding(rng, c);
        match arch {
            ArchId::Lstm => {
                let lstm = init_lstm(rng, e, h);
                let hidden = Dense::init(rng, h, d);
                let output = Dense::init(rng, d, NUM_CLASSES);
                Network::Lstm(LstmNet { embedding, lstm, hidden, output })
            }
            ArchId::LstmConv => {
                let conv = Conv::init(rng, e, CONV_KERNEL, f);
                let lstm = init_lstm(rng, f, h);
                let output = Dense::init(rng, h, NUM_CLASSES);
                Network::LstmConv(LstmConvNet { embedding, conv, lstm, output })
            }
            ArchId::BiLstm => {
                let forward = init_lstm(rng, e, h);
                let backward = init_lstm(rng, e, h);
                let conv = Conv::init(rng, 2 * h, CONV_KERNEL, f);
                let output = Dense::init(rng, 2 * f, NUM_CLASSES);
                Network::BiLstm(BiLstmNet { embedding, forward, backward, conv, output })
            }
            ArchId::Cnn => {
                let branches = CNN_KERNELS.iter().map(|&k| Conv::init(rng, e, k, f)).collect();
                let hidden = Dense::init(rng, CNN_KERNELS.len() * f, d);
                let output = Dense::init(rng, d, NUM_CLASSES);
                Network::Cnn(CnnNet { embedding, branches, hidden, output })
            }
        }
    }

    pub fn arch(&self) -> ArchId {
        match self {
            Network::Lstm(_) => ArchId::Lstm,
            Network::LstmConv(_) => ArchId::LstmConv,
            Network::BiLstm(_) => ArchId::BiLstm,
            Network::Cnn(_) => ArchId::Cnn,
        }
    }

    /// Named parameter tensors in a fixed order.
    pub fn tensors(&self) -> Vec<(String, &Tensor<T>)> {
        fn lstm<'a, T>(prefix: &str, p: &'a LstmParams<T>, out: &mut Vec<(String, &'a Tensor<T>)>) {
            out.push((format!("{prefix}.w_input"), &p.w_input));
            out.push((format!("{prefix}.w_recurrent"), &p.w_recurrent));
            out.push((format!("{prefix}.bias"), &p.bias));
        }
        fn dense<'a, T>(prefix: &str, p: &'a Dense<T>, out: &mut Vec<(String, &'a Tensor<T>)>) {
            out.push((format!("{prefix}.weight"), &p.weight));
            out.push((format!("{prefix}.bias"), &p.bias));
        }
        fn conv<'a, T>(prefix: &str, p: &'a Conv<T>, out: &mut Vec<(String, &'a Tensor<T>)>) {
            out.push((format!("{prefix}.kernel"), &p.kernel));
            out.push((format!("{prefix}.bias"), &p.bias));
        }
        let mut out = Vec::new();
        match self {
            Network::Lstm(n) => {
                out.push(("embedding".into(), &n.embedding));
                lstm("lstm", &n.lstm, &mut out);
                dense("hidden", &n.hidden, &mut out);
                dense("output", &n.output, &mut out);
            }
            Network::LstmConv(n) => {
                out.push(("embedding".into(), &n.embedding));
                conv("conv", &n.conv, &mut out);
                lstm("lstm", &n.lstm, &mut out);
                dense("output", &n.output, &mut out);
            }
            Network::BiLstm(n) => {
                out.push(("embedding".into(), &n.embedding));
                lstm("lstm_forward", &n.forward, &mut out);
                lstm("lstm_backward", &n.backward, &mut out);
                conv("conv", &n.conv, &mut out);
                dense("output", &n.output, &mut out);
            }
            Network::Cnn(n) => {
                out.push(("embedding".into(), &n.embedding));
                for (k, branch) in CNN_KERNELS.iter().zip(&n.branches) {
                    conv(&format!("conv{k}"), branch, &mut out);
                }
                dense("hidden", &n.hidden, &mut out);
                dense("output", &n.output, &mut out);
            }
        }
        out
    }

    /// Mutable parameter tensors, same order as [`Network::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        fn lstm<'a, T>(p: &'a mut LstmParams<T>, out: &mut Vec<&'a mut Tensor<T>>) {
            out.extend([&mut p.w_input, &mut p.w_recurrent, &mut p.bias]);
        }
        fn dense<'a, T>(p: &'a mut Dense<T>, out: &mut Vec<&'a mut Tensor<T>>) {
            out.extend([&mut p.weight, &mut p.bias]);
        }
        fn conv<'a, T>(p: &'a mut Conv<T>, out: &mut Vec<&'a mut Tensor<T>>) {
            out.extend([&mut p.kernel, &mut p.bias]);
        }
        let mut out = Vec::new();
        match self {
            Network::Lstm(n) => {
                out.push(&mut n.embedding);
                lstm(&mut n.lstm, &mut out);
                dense(&mut n.hidden, &mut out);
                dense(&mut n.output, &mut out);
            }
            Network::LstmConv(n) => {
                out.push(&mut n.embedding);
                conv(&mut n.conv, &mut out);
                lstm(&mut n.lstm, &mut out);
                dense(&mut n.output, &mut out);
            }
            Network::BiLstm(n) => {
                out.push(&mut n.embedding);
                lstm(&mut n.forward, &mut out);
                lstm(&mut n.backward, &mut out);
                conv(&mut n.conv, &mut out);
                dense(&mut n.output, &mut out);
            }
            Network::Cnn(n) => {
                out.push(&mut n.embedding);
                for branch in n.branches.iter_mut() {
                    conv(branch, &mut out);
                }
                dense(&mut n.hidden, &mut out);
                dense(&mut n.output, &mut out);
            }
        }
        out
    }

    fn forward(&self, ids: &[usize]) -> Result<(Tensor<T>, Cache<T>)> {
        match self {
            Network::Lstm(n) => {
                let x = nn::embedding_forward(&n.embedding, ids)?;
                let (h, lstm) = nn::lstm_forward(&n.lstm, &x, false)?;
                let (a, hidden) = n.hidden.forward(&h, Activation::Relu)?;
                let (logits, output) = n.output.forward(&a, Activation::Linear)?;
                Ok((logits, Cache::Lstm { lstm, hidden, output }))
            }
            Network::LstmConv(n) => {
                let x = nn::embedding_forward(&n.embedding, ids)?;
                let (features, conv) = n.conv.forward(&x)?;
                let (states, lstm) = nn::lstm_forward(&n.lstm, &features, true)?;
                let (pooled, pool) = nn::global_max_pool(&states)?;
                let (logits, output) = n.output.forward(&pooled, Activation::Linear)?;
                Ok((logits, Cache::LstmConv { conv, lstm, pool, output }))
            }
            Network::BiLstm(n) => {
                let x = nn::embedding_forward(&n.embedding, ids)?;
                let (states, bilstm) = nn::bilstm_forward(&n.forward, &n.backward, &x)?;
                let (features, conv) = n.conv.forward(&states)?;
                let (avg_out, avg) = nn::global_avg_pool(&features)?;
                let (max_out, max) = nn::global_max_pool(&features)?;
                let (joined, concat) = nn::concat(&[&avg_out, &max_out], 0)?;
                let (logits, output) = n.output.forward(&joined, Activation::Linear)?;
                Ok((logits, Cache::BiLstm { bilstm, conv, avg, max, concat, output }))
            }
            Network::Cnn(n) => {
                let x = nn::embedding_forward(&n.embedding, ids)?;
                let mut pooled = Vec::with_capacity(n.branches.len());
                let mut branches = Vec::with_capacity(n.branches.len());
                for branch in &n.branches {
                    let (features, conv) = branch.forward(&x)?;
                    let (p, pool) = nn::global_max_pool(&features)?;
                    pooled.push(p);
                    branches.push((conv, pool));
                }
                let refs: Vec<&Tensor<T>> = pooled.iter().collect();
                let (joined, concat) = nn::concat(&refs, 0)?;
                let (a, hidden) = n.hidden.forward(&joined, Activation::Relu)?;
                let (logits, output) = n.output.forward(&a, Activation::Linear)?;
                Ok((logits, Cache::Cnn { branches, concat, hidden, output }))
            }
        }
    }

    fn backward(&self, ids: &[usize], cache: &Cache<T>, grad_logits: &Tensor<T>, grads: &mut Self) -> Result<()> {
        match (self, cache, grads) {
            (Network::Lstm(n), Cache::Lstm { lstm, hidden, output }, Network::Lstm(g)) => {
                let d_a = n.output.backward(output, grad_logits, &mut g.output)?;
                let d_h = n.hidden.backward(hidden, &d_a, &mut g.hidden)?;
                let d_x = nn::lstm_grad(&n.lstm, lstm, &d_h, &mut g.lstm)?;
                nn::embedding_grad(ids, &d_x, &mut g.embedding)
            }
            (Network::LstmConv(n), Cache::LstmConv { conv, lstm, pool, output }, Network::LstmConv(g)) => {
                let d_pooled = n.output.backward(output, grad_logits, &mut g.output)?;
                let d_states = nn::global_max_pool_grad(pool, &d_pooled)?;
                let d_features = nn::lstm_grad(&n.lstm, lstm, &d_states, &mut g.lstm)?;
                let d_x = n.conv.backward(conv, &d_features, &mut g.conv)?;
                nn::embedding_grad(ids, &d_x, &mut g.embedding)
            }
            (Network::BiLstm(n), Cache::BiLstm { bilstm, conv, avg, max, concat, output }, Network::BiLstm(g)) => {
                let d_joined = n.output.backward(output, grad_logits, &mut g.output)?;
                let parts = nn::concat_grad(concat, &d_joined)?;
                let mut d_features = nn::global_avg_pool_grad(avg, &parts[0])?;
                d_features.add_assign(&nn::global_max_pool_grad(max, &parts[1])?)?;
                let d_states = n.conv.backward(conv, &d_features, &mut g.conv)?;
                let d_x = nn::bilstm_grad(&n.forward, &n.backward, bilstm, &d_states, &mut g.forward, &mut g.backward)?;
                nn::embedding_grad(ids, &d_x, &mut g.embedding)
            }
            (Network::Cnn(n), Cache::Cnn { branches, concat, hidden, output }, Network::Cnn(g)) => {
                let d_a = n.output.backward(output, grad_logits, &mut g.output)?;
                let d_joined = n.hidden.backward(hidden, &d_a, &mut g.hidden)?;
                let parts = nn::concat_grad(concat, &d_joined)?;
                let mut d_x: Option<Tensor<T>> = None;
                for (((branch, (conv, pool)), part), g_branch) in
                    n.branches.iter().zip(branches).zip(&parts).zip(g.branches.iter_mut())
                {
                    let d_features = nn::global_max_pool_grad(pool, part)?;
                    let d = branch.backward(conv, &d_features, g_branch)?;
                    match d_x.as_mut() {
                        Some(acc) => acc.add_assign(&d)?,
                        None => d_x = Some(d),
                    }
                }
                let d_x = d_x.expect("cnn has branches");
                nn::embedding_grad(ids, &d_x, &mut g.embedding)
            }
            _ => Err(Error::Shape("gradient buffer does not match the network".into())),
        }
    }
}

/// A classifier: architecture, dimensions and parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    arch: ArchId,
    config: ModelConfig,
    net: Network<T>,
}

/// Loss and accuracy numbers from one gradient pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BatchOutcome<T> {
    /// Mean cross-entropy over the batch.
    pub loss: T,
    /// Examples whose argmax matched the gold label.
    pub correct: usize,
}

impl<T: Scalar> Model<T> {
    /// Seeded initialization; the same `(arch, config, seed)` always gives
    /// the same parameters.
    pub fn build(arch: ArchId, config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate(arch)?;
        let mut rng = rng_from_seed(seed);
        Ok(Model { arch, config, net: Network::build(arch, &config, Some(&mut rng)) })
    }

    /// All-zero parameters; used for gradient buffers and loading.
    pub fn zeros(arch: ArchId, config: ModelConfig) -> Result<Self> {
        config.validate(arch)?;
        Ok(Model { arch, config, net: Network::build(arch, &config, None) })
    }

    pub fn zeros_like(&self) -> Self {
        Model { arch: self.arch, config: self.config, net: Network::build(self.arch, &self.config, None) }
    }

    pub fn arch(&self) -> ArchId {
        self.arch
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn network(&self) -> &Network<T> {
        &self.net
    }

    pub fn network_mut(&mut self) -> &mut Network<T> {
        &mut self.net
    }

    pub fn parameters(&self) -> Vec<(String, &Tensor<T>)> {
        self.net.tensors()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.net.tensors_mut()
    }

    pub fn num_parameters(&self) -> usize {
        self.parameters().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn zero(&mut self) {
        for t in self.parameters_mut() {
            t.fill(T::zero());
        }
    }

    fn check_ids(&self, ids: &[usize]) -> Result<()> {
        if ids.len() != self.config.seq_len {
            return Err(Error::Shape(format!("sequence has {} ids, model expects {}", ids.len(), self.config.seq_len)));
        }
        if let Some(&bad) = ids.iter().find(|&&id| id >= self.config.vocab_size) {
            return Err(Error::IndexOutOfRange { index: bad, bound: self.config.vocab_size });
        }
        Ok(())
    }

    /// Unnormalized class scores for one sequence.
    pub fn logits(&self, ids: &[usize]) -> Result<Tensor<T>> {
        self.check_ids(ids)?;
        let (logits, _) = self.net.forward(ids)?;
        logits.ensure_finite("logits")?;
        Ok(logits)
    }

    /// Class probabilities for one sequence.
    pub fn probabilities(&self, ids: &[usize]) -> Result<[T; NUM_CLASSES]> {
        let probs = nn::softmax(&self.logits(ids)?)?;
        let mut row = [T::zero(); NUM_CLASSES];
        row.copy_from_slice(probs.data());
        Ok(row)
    }

    /// One probability row per input sequence.
    pub fn forward(&self, batch: &[IdSequence]) -> Result<Vec<[T; NUM_CLASSES]>> {
        batch.iter().map(|seq| self.probabilities(&seq.ids)).collect()
    }

    /// Mean cross-entropy of `batch` against `gold`.
    pub fn mean_loss(&self, batch: &[&[usize]], gold: &[Sentiment]) -> Result<T> {
        if batch.len() != gold.len() || batch.is_empty() {
            return Err(Error::LengthMismatch { what: "batch and labels", left: batch.len(), right: gold.len() });
        }
        let mut total = T::zero();
        for (ids, label) in batch.iter().zip(gold) {
            let (loss, _) = nn::softmax_xent(&self.logits(ids)?, label.code())?;
            total += loss;
        }
        Ok(total / T::lit(batch.len() as f64))
    }

    /// Adds the gradient of the mean batch loss into `grads`, which must
    /// be shaped like `self` (see [`Model::zeros_like`]).
    pub fn accumulate_gradients(
        &self,
        batch: &[&[usize]],
        gold: &[Sentiment],
        grads: &mut Model<T>,
    ) -> Result<BatchOutcome<T>> {
        if batch.len() != gold.len() || batch.is_empty() {
            return Err(Error::LengthMismatch { what: "batch and labels", left: batch.len(), right: gold.len() });
        }
        if grads.arch != self.arch || grads.config != self.config {
            return Err(Error::Shape("gradient buffer built for a different model".into()));
        }
        let scale = T::one() / T::lit(batch.len() as f64);
        let mut total = T::zero();
        let mut correct = 0;
        for (ids, label) in batch.iter().zip(gold) {
            self.check_ids(ids)?;
            let (logits, cache) = self.net.forward(ids)?;
            logits.ensure_finite("logits")?;
            let (loss, probs) = nn::softmax_xent(&logits, label.code())?;
            total += loss;
            if argmax(probs.data()) == label.code() {
                correct += 1;
            }
            let mut grad = nn::softmax_xent_grad(&probs, label.code())?;
            grad.scale(scale);
            self.net.backward(ids, &cache, &grad, &mut grads.net)?;
        }
        Ok(BatchOutcome { loss: total * scale, correct })
    }
}

/// Index of the largest value, lowest index on ties.
pub fn argmax<T: PartialOrd + Copy>(xs: &[T]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelConfig {
        ModelConfig { vocab_size: 20, seq_len: 7, embedding_dim: 4, lstm_units: 5, conv_filters: 6, dense_hidden: 5 }
    }

    #[test]
    fn names_round_trip() {
        for a in ArchId::ALL {
            assert_eq!(a.name().parse::<ArchId>().unwrap(), a);
        }
        assert!("transformer".parse::<ArchId>().is_err());
    }

    #[test]
    fn seeds_determine_parameters() {
        for a in ArchId::ALL {
            let m1 = Model::<f64>::build(a, tiny(), 11).unwrap();
            let m2 = Model::<f64>::build(a, tiny(), 11).unwrap();
            let m3 = Model::<f64>::build(a, tiny(), 12).unwrap();
            assert_eq!(m1, m2);
            assert_ne!(m1, m3);
        }
    }

    #[test]
    fn invalid_configs() {
        let mut c = tiny();
        c.embedding_dim = 0;
        assert!(Model::<f64>::build(ArchId::Lstm, c, 0).is_err());
        let mut c = tiny();
        c.seq_len = 4;
        assert!(Model::<f64>::build(ArchId::Cnn, c, 0).is_err());
        assert!(Model::<f64>::build(ArchId::Lstm, c, 0).is_ok());
    }

    #[test]
    fn lstm_forget_bias_is_one() {
        let m = Model::<f64>::build(ArchId::Lstm, tiny(), 0).unwrap();
        let Network::Lstm(n) = m.network() else { unreachable!() };
        let h = tiny().lstm_units;
        assert!(n.lstm.bias.data()[h..2 * h].iter().all(|&b| b == 1.0));
        assert!(n.lstm.bias.data()[..h].iter().all(|&b| b == 0.0));
    }

    #[test]
    fn out_of_range_id() {
        let m = Model::<f64>::build(ArchId::Cnn, tiny(), 0).unwrap();
        let err = m.logits(&[0, 0, 0, 0, 0, 0, 20]).unwrap_err();
        assert!(matches!(err, Error::IndexOutOfRange { index: 20, bound: 20 }));
    }

    #[test]
    fn argmax_ties_pick_lowest() {
        assert_eq!(argmax(&[0.4, 0.4, 0.2]), 0);
        assert_eq!(argmax(&[0.1, 0.6, 0.3]), 1);
    }

    #[test]
    fn f32_models_run() {
        let m = Model::<f32>::build(ArchId::BiLstm, tiny(), 3).unwrap();
        let p = m.probabilities(&[1, 2, 3, 4, 5, 6, 7]).unwrap();
        assert!((p.iter().sum::<f32>() - 1.0).abs() < 1e-6);
    }
}
