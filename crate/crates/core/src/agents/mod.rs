//! Learned schedulers: a pair-token transformer, a fully connected baseline
//! and a qubit-level transformer, with training and checkpoints.

pub mod adam;
pub mod checkpoint;
pub mod fc;
pub mod layout;
pub mod qubit;
pub mod real;
pub mod tokens;
pub mod train;
pub mod transformer;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::EnvState;
use crate::error::{Error, Result};
use crate::harness::episode::Policy;
use crate::metrics::expected_link_error;
use crate::preinfo::PreInfo;
use crate::schedulers::{ActionMatrix, MASKED};

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use fc::{Fc, FcDims};
pub use qubit::{encode_qubit_tokens, QUBIT_DIM};
pub use tokens::{encode_tokens, TokenSequence, N_DIM};
pub use train::{masked_mse, train, EpochStats, Sample, TrainConfig, TrainOutcome};
pub use transformer::{Encoder, EncoderDims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    QuPairs,
    Qubit,
    Fc,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::QuPairs => "qupairs",
            Variant::Qubit => "qubit",
            Variant::Fc => "fc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Variant::QuPairs, Variant::Qubit, Variant::Fc].into_iter().find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub blocks: usize,
    pub embed_dim: usize,
    pub heads: usize,
    pub ff_dim: usize,
    pub variant: Variant,
    pub qubit_variant_embed: usize,
    pub fc_hidden: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            blocks: 3,
            embed_dim: 32,
            heads: 1,
            ff_dim: 64,
            variant: Variant::QuPairs,
            qubit_variant_embed: 320,
            fc_hidden: 1000,
        }
    }
}

impl ModelConfig {
    pub fn encoder_dims(&self) -> EncoderDims {
        match self.variant {
            Variant::Qubit => EncoderDims {
                input_dim: QUBIT_DIM,
                blocks: self.blocks,
                embed_dim: self.qubit_variant_embed,
                heads: self.heads,
                ff_dim: self.ff_dim,
            },
            _ => EncoderDims {
                input_dim: N_DIM,
                blocks: self.blocks,
                embed_dim: self.embed_dim,
                heads: self.heads,
                ff_dim: self.ff_dim,
            },
        }
    }
}

/// A trainable network in `f64`.
#[derive(Debug, Clone)]
pub enum Net {
    Transformer(Encoder<f64>),
    Qubit(Encoder<f64>),
    Fc(Fc<f64>),
}

/// An inference model in `f32`; this is what checkpoints hold.
#[derive(Debug, Clone)]
pub enum Model {
    Transformer(Encoder<f32>),
    Qubit(Encoder<f32>),
    Fc(Fc<f32>),
}

impl Net {
    /// Fresh weights. `n_qubits` fixes the input size of the fully connected
    /// variant and is ignored otherwise.
    pub fn new<R: Rng>(config: &ModelConfig, n_qubits: usize, rng: &mut R) -> Result<Self> {
        Ok(match config.variant {
            Variant::QuPairs => Net::Transformer(Encoder::new(config.encoder_dims(), rng)?),
            Variant::Qubit => Net::Qubit(Encoder::new(config.encoder_dims(), rng)?),
            Variant::Fc => Net::Fc(Fc::new(FcDims { n_qubits, token_dim: N_DIM, hidden: config.fc_hidden }, rng)?),
        })
    }

    pub fn variant(&self) -> Variant {
        match self {
            Net::Transformer(_) => Variant::QuPairs,
            Net::Qubit(_) => Variant::Qubit,
            Net::Fc(_) => Variant::Fc,
        }
    }

    pub fn params(&self) -> &[f64] {
        match self {
            Net::Transformer(e) | Net::Qubit(e) => &e.params,
            Net::Fc(f) => &f.params,
        }
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        match self {
            Net::Transformer(e) | Net::Qubit(e) => &mut e.params,
            Net::Fc(f) => &mut f.params,
        }
    }

    pub fn predict(&self, tokens: &TokenSequence) -> Result<Vec<f64>> {
        match self {
            Net::Transformer(e) | Net::Qubit(e) => e.forward(&tokens.data, tokens.len),
            Net::Fc(f) => f.forward(&tokens.data),
        }
    }

    /// Masked MSE of one sample; its gradient is added to `grad`.
    pub fn loss_grad(&self, sample: &Sample, grad: &mut [f64]) -> Result<f64> {
        let t = &sample.tokens;
        match self {
            Net::Transformer(e) | Net::Qubit(e) => {
                let (y, cache) = e.forward_cached(&t.data, t.len)?;
                let (loss, dy) = masked_mse(&y, &sample.target, &sample.mask)?;
                e.backward(&cache, &dy, grad);
                Ok(loss)
            }
            Net::Fc(f) => {
                let (y, cache) = f.forward_cached(&t.data)?;
                let (loss, dy) = masked_mse(&y, &sample.target, &sample.mask)?;
                f.backward(&cache, &dy, grad);
                Ok(loss)
            }
        }
    }

    /// Quantize to `f32` for inference and storage.
    pub fn to_model(&self) -> Model {
        match self {
            Net::Transformer(e) => Model::Transformer(e.cast()),
            Net::Qubit(e) => Model::Qubit(e.cast()),
            Net::Fc(f) => Model::Fc(f.cast()),
        }
    }

    pub fn from_model(model: &Model) -> Self {
        match model {
            Model::Transformer(e) => Net::Transformer(e.cast()),
            Model::Qubit(e) => Net::Qubit(e.cast()),
            Model::Fc(f) => Net::Fc(f.cast()),
        }
    }
}

impl Model {
    pub fn variant(&self) -> Variant {
        match self {
            Model::Transformer(_) => Variant::QuPairs,
            Model::Qubit(_) => Variant::Qubit,
            Model::Fc(_) => Variant::Fc,
        }
    }

    /// Raw per-token outputs.
    pub fn forward(&self, tokens: &TokenSequence) -> Result<Vec<f64>> {
        let data: Vec<f32> = tokens.cast();
        let y = match self {
            Model::Transformer(e) | Model::Qubit(e) => e.forward(&data, tokens.len)?,
            Model::Fc(f) => f.forward(&data)?,
        };
        Ok(y.into_iter().map(f64::from).collect())
    }

    /// Per ordered pair predictions (`N_q²`) for the pair-level variants.
    pub fn predict_pairs(&self, state: &EnvState, preinfo: &PreInfo, t_mem_steps: f64) -> Result<Vec<f64>> {
        match self {
            Model::Qubit(_) => Err(Error::Config("qubit-level model has no pair predictions".into())),
            _ => self.forward(&encode_tokens(state, preinfo, t_mem_steps)),
        }
    }
}

/// Expected link error plus the symmetrized prediction weighted by
/// `mixing_weight`, floored at zero.
pub fn action_matrix_from_predictions(
    predictions: &[f64],
    state: &EnvState,
    preinfo: &PreInfo,
    t_mem_steps: f64,
    mixing_weight: f64,
) -> Result<ActionMatrix> {
    let n = state.n_qubits();
    if predictions.len() != n * n {
        return Err(Error::Shape(format!("expected {} predictions, got {}", n * n, predictions.len())));
    }
    if !(0.0..=1.0).contains(&mixing_weight) {
        return Err(Error::Config(format!("mixing_weight must be in [0, 1], got {mixing_weight}")));
    }
    Ok(ActionMatrix::from_legal(state, |i, j| {
        let base = expected_link_error(preinfo.f(i, j), preinfo.r(i, j), t_mem_steps);
        let learned = 0.5 * (predictions[i * n + j] + predictions[j * n + i]);
        (base + mixing_weight * learned).max(0.0)
    }))
}

/// Pair-level learned strategy (transformer or fully connected).
pub struct AgentPolicy<'a> {
    model: &'a Model,
    mixing_weight: f64,
    cached: Option<(u64, ActionMatrix)>,
}

impl<'a> AgentPolicy<'a> {
    pub fn new(model: &'a Model, mixing_weight: f64) -> Result<Self> {
        if model.variant() == Variant::Qubit {
            return Err(Error::Config("AgentPolicy needs a pair-level model".into()));
        }
        Ok(Self { model, mixing_weight, cached: None })
    }
}

impl Policy for AgentPolicy<'_> {
    fn action_matrix(&mut self, state: &EnvState) -> Result<ActionMatrix> {
        if let Some((v, m)) = &self.cached {
            if *v == state.version {
                return Ok(m.clone());
            }
        }
        let t_mem = state.config.t_mem_steps;
        let pred = self.model.predict_pairs(state, &state.preinfo, t_mem)?;
        let m = action_matrix_from_predictions(&pred, state, &state.preinfo, t_mem, self.mixing_weight)?;
        self.cached = Some((state.version, m.clone()));
        Ok(m)
    }
}

/// Two-pass qubit-level strategy: the first pass picks qubit `i`, the second,
/// anchored at `i`, picks its partner. The resulting matrix holds that one
/// pair, so the threshold decides between the pair and idling.
pub struct QubitPolicy<'a> {
    model: &'a Encoder<f32>,
    mixing_weight: f64,
}

impl<'a> QubitPolicy<'a> {
    pub fn new(model: &'a Encoder<f32>, mixing_weight: f64) -> Self {
        Self { model, mixing_weight }
    }

    fn scores(&self, state: &EnvState, anchor: Option<usize>) -> Result<Vec<f64>> {
        let t = encode_qubit_tokens(state, &state.preinfo, state.config.t_mem_steps, anchor);
        let y = self.model.forward(&t.cast::<f32>(), t.len)?;
        Ok(y.into_iter().map(f64::from).collect())
    }
}

/// Cheapest assignable pair and the cost of the qubit-level choice.
pub fn qubit_level_select(
    model: &Encoder<f32>,
    state: &EnvState,
    mixing_weight: f64,
) -> Result<Option<(usize, usize, f64)>> {
    let policy = QubitPolicy::new(model, mixing_weight);
    let n = state.n_qubits();
    let pre = &state.preinfo;
    let t_mem = state.config.t_mem_steps;
    let base = |i: usize, j: usize| expected_link_error(pre.f(i, j), pre.r(i, j), t_mem);
    let first = policy.scores(state, None)?;
    let mut pick: Option<(usize, f64)> = None;
    for i in 0..n {
        let best = (0..n).filter(|&j| state.is_assignable(i, j)).map(|j| base(i, j)).fold(f64::INFINITY, f64::min);
        if best.is_finite() {
            let c = best + mixing_weight * first[i];
            if pick.is_none_or(|(_, pc)| c < pc) {
                pick = Some((i, c));
            }
        }
    }
    let Some((i, _)) = pick else { return Ok(None) };
    let second = policy.scores(state, Some(i))?;
    let mut out: Option<(usize, usize, f64)> = None;
    for j in (0..n).filter(|&j| state.is_assignable(i, j)) {
        let c = (base(i, j) + mixing_weight * second[j]).max(0.0);
        if out.is_none_or(|(_, _, oc)| c < oc) {
            out = Some((i.min(j), i.max(j), c));
        }
    }
    Ok(out)
}

impl Policy for QubitPolicy<'_> {
    fn action_matrix(&mut self, state: &EnvState) -> Result<ActionMatrix> {
        let mut m = ActionMatrix::masked(state.n_qubits());
        if let Some((i, j, c)) = qubit_level_select(self.model, state, self.mixing_weight)? {
            debug_assert!(c != MASKED);
            m.cost.set_sym(i, j, c);
        }
        Ok(m)
    }
}
