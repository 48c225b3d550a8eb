//! Negative sampling, binary cross-entropy, gradients and the fit loop.
//!
//! Gradients are computed analytically by chaining the backward passes of
//! the distance, the relation operator and the manifold map. Within a batch,
//! samples are split into fixed-size chunks that may run on different
//! threads; chunk gradients are then summed in chunk order, so results do not
//! depend on the number of threads.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::enforce_time_guard;
use crate::kgdata::{Triple, TripleStore};
use crate::model::{Geometry, Model, ParamBlock, ParamSet};

/// Probabilities are clamped to `[PROB_CLAMP, 1 - PROB_CLAMP]` inside logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// Samples per work chunk inside a batch.
const CHUNK: usize = 32;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(&'static str),
    #[error("training diverged at epoch {epoch} (loss {loss}); model restored to the last good epoch")]
    Diverged { epoch: usize, loss: f64 },
    #[error("training split is empty")]
    EmptyTrain,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("model has {model} entities / {model_rel} relations but the store has {store} / {store_rel}")]
    Shape {
        model: usize,
        model_rel: usize,
        store: usize,
        store_rel: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OptimizerKind {
    #[default]
    Adam,
    Adagrad,
}

impl std::str::FromStr for OptimizerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adam" => Ok(OptimizerKind::Adam),
            "adagrad" => Ok(OptimizerKind::Adagrad),
            other => Err(format!("unknown optimizer '{other}' (expected adam or adagrad)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub neg_samples: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    /// Compare analytic and finite-difference gradients on the first batch
    /// before training.
    pub grad_check: bool,
    /// Pin the work to one thread.
    pub deterministic: bool,
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 500,
            neg_samples: 50,
            learning_rate: 5e-3,
            epochs: 100,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            grad_check: false,
            deterministic: false,
            threads: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.neg_samples < 1 {
            return Err(TrainError::Config("need at least one negative sample".into()));
        }
        if self.batch_size < 1 {
            return Err(TrainError::Config("batch size must be positive".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(TrainError::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// One positive triple and its corruptions.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub positive: Triple,
    pub negatives: Vec<Triple>,
}

/// `k` corruptions of `triple`; each replaces the head or the tail (fair
/// coin) with a uniformly drawn entity. Known positives are not filtered.
pub fn sample_negatives<R: Rng>(triple: Triple, k: usize, n_entities: usize, rng: &mut R) -> Vec<Triple> {
    (0..k)
        .map(|_| {
            let corrupt_head = rng.random_bool(0.5);
            let e = rng.random_range(0..n_entities);
            if corrupt_head {
                Triple { head: e, ..triple }
            } else {
                Triple { tail: e, ..triple }
            }
        })
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-log(clamp(p))` and its derivative with respect to the score, for a
/// positive (`label = true`) or negative triple. The derivative is zero in
/// the clamped region.
fn bce_term(score: f64, label: bool) -> (f64, f64) {
    let p = sigmoid(score);
    let lo = PROB_CLAMP;
    let hi = 1.0 - PROB_CLAMP;
    if label {
        if p < lo {
            (-lo.ln(), 0.0)
        } else if p > hi {
            (-hi.ln(), 0.0)
        } else {
            (-p.ln(), -(1.0 - p))
        }
    } else {
        let q = 1.0 - p;
        if q < lo {
            (-lo.ln(), 0.0)
        } else if q > hi {
            (-hi.ln(), 0.0)
        } else {
            (-q.ln(), p)
        }
    }
}

/// `-(1/N) sum_i [log p_i + sum_j log(1 - p~_ij)]` over a batch of `N`
/// samples.
pub fn bce_loss(m: &Model, batch: &[Sample]) -> f64 {
    if batch.is_empty() {
        return 0.0;
    }
    let n = batch.len() as f64;
    let total: f64 = batch
        .iter()
        .map(|s| {
            let pos = score_unchecked(m, s.positive);
            let mut acc = bce_term(pos, true).0;
            for &neg in &s.negatives {
                acc += bce_term(score_unchecked(m, neg), false).0;
            }
            acc
        })
        .sum();
    total / n
}

fn score_unchecked(m: &Model, t: Triple) -> f64 {
    m.score(t.head, t.relation, t.tail).expect("triple ids in range")
}

/// Gradient contributions of one chunk, keyed by the entities and
/// relations it touched.
#[derive(Default)]
struct SparseGrad {
    loss: f64,
    entity: HashMap<usize, Vec<f64>>,
    bias: HashMap<usize, f64>,
    relation: HashMap<usize, Vec<f64>>,
    delta: f64,
}

impl SparseGrad {
    fn add_triple(&mut self, m: &Model, t: Triple, upstream: f64) {
        if upstream == 0.0 {
            return;
        }
        let (p, q) = (m.sig.p(), m.sig.q());
        let d = p + q;
        let half = d / 2;
        let (_, g) = m.score_with_grad(t.head, t.relation, t.tail);
        let mut add_entity = |e: usize, space: &[f64], time: &[f64]| {
            let slot = self.entity.entry(e).or_insert_with(|| vec![0.0; d]);
            for (s, v) in slot.iter_mut().zip(space.iter().chain(time)) {
                *s += upstream * v;
            }
        };
        add_entity(t.head, &g.head_space, &g.head_time);
        add_entity(t.tail, &g.tail_space, &g.tail_time);
        *self.bias.entry(t.head).or_default() += upstream;
        *self.bias.entry(t.tail).or_default() += upstream;
        let slot = self
            .relation
            .entry(t.relation)
            .or_insert_with(|| vec![0.0; d + q]);
        let (st, rest) = slot.split_at_mut(half);
        let (sp, sm) = rest.split_at_mut(half);
        for (s, v) in st.iter_mut().zip(&g.theta) {
            *s += upstream * v;
        }
        for (s, v) in sp.iter_mut().zip(&g.phi) {
            *s += upstream * v;
        }
        for (s, v) in sm.iter_mut().zip(&g.mu) {
            *s += upstream * v;
        }
        self.delta += upstream;
    }

    fn add_into(&self, m: &Model, dense: &mut ParamSet) {
        let (p, q) = (m.sig.p(), m.sig.q());
        let half = (p + q) / 2;
        for (&e, g) in &self.entity {
            for i in 0..p {
                dense.entity_space[e * p + i] += g[i];
            }
            for j in 0..q {
                dense.entity_time[e * q + j] += g[p + j];
            }
        }
        for (&e, g) in &self.bias {
            dense.biases[e] += g;
        }
        for (&r, g) in &self.relation {
            for i in 0..half {
                dense.theta[r * half + i] += g[i];
                dense.phi[r * half + i] += g[half + i];
            }
            for j in 0..q {
                dense.mu[r * q + j] += g[2 * half + j];
            }
        }
        dense.delta += self.delta;
    }
}

fn chunk_grad(m: &Model, chunk: &[Sample], inv_n: f64) -> SparseGrad {
    let mut acc = SparseGrad::default();
    for s in chunk {
        let pos = score_unchecked(m, s.positive);
        let (l, dl) = bce_term(pos, true);
        acc.loss += l * inv_n;
        acc.add_triple(m, s.positive, dl * inv_n);
        for &neg in &s.negatives {
            let sc = score_unchecked(m, neg);
            let (l, dl) = bce_term(sc, false);
            acc.loss += l * inv_n;
            acc.add_triple(m, neg, dl * inv_n);
        }
    }
    acc
}

/// Loss of a batch and the gradient of that loss for every parameter
/// family, margin included.
#[derive(Debug, Clone)]
pub struct LossAndGrad {
    pub loss: f64,
    pub grads: ParamSet,
}

/// Exact gradients of [`bce_loss`]. Fails if any gradient block is not
/// finite, naming the block.
pub fn gradients(m: &Model, batch: &[Sample]) -> Result<LossAndGrad, TrainError> {
    let mut grads = ParamSet::zeros(&m.sig, m.n_entities, m.n_relations);
    let loss = accumulate_gradients(m, batch, &mut grads);
    if let Some(block) = grads.first_non_finite() {
        return Err(TrainError::NonFiniteGradient(block.name()));
    }
    Ok(LossAndGrad { loss, grads })
}

fn accumulate_gradients(m: &Model, batch: &[Sample], grads: &mut ParamSet) -> f64 {
    grads.fill(0.0);
    if batch.is_empty() {
        return 0.0;
    }
    let inv_n = 1.0 / batch.len() as f64;
    let parts: Vec<SparseGrad> = batch
        .par_chunks(CHUNK)
        .map(|c| chunk_grad(m, c, inv_n))
        .collect();
    let mut loss = 0.0;
    for part in &parts {
        loss += part.loss;
        part.add_into(m, grads);
    }
    loss
}

/// First-order optimizer state.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    step: u64,
    first: ParamSet,
    second: ParamSet,
}

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const ADAGRAD_EPS: f64 = 1e-10;

/// Blocks the optimizer updates. The margin is a fixed hyperparameter.
fn trainable(m: &Model) -> impl Iterator<Item = ParamBlock> + '_ {
    ParamBlock::ALL.into_iter().filter(move |&b| {
        b != ParamBlock::Delta && !(b == ParamBlock::Mu && m.geometry == Geometry::Euclidean)
    })
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, m: &Model) -> Self {
        let zeros = ParamSet::zeros(&m.sig, m.n_entities, m.n_relations);
        Self {
            kind,
            lr,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn step(&mut self, m: &mut Model, grads: &ParamSet) {
        self.step += 1;
        let blocks: Vec<ParamBlock> = trainable(m).collect();
        match self.kind {
            OptimizerKind::Adam => {
                let bc1 = 1.0 - ADAM_BETA1.powi(self.step as i32);
                let bc2 = 1.0 - ADAM_BETA2.powi(self.step as i32);
                for b in blocks {
                    let g = grads.block(b);
                    let m1 = self.first.block_mut(b);
                    let m2 = self.second.block_mut(b);
                    for (i, w) in m.params.block_mut(b).iter_mut().enumerate() {
                        m1[i] = ADAM_BETA1 * m1[i] + (1.0 - ADAM_BETA1) * g[i];
                        m2[i] = ADAM_BETA2 * m2[i] + (1.0 - ADAM_BETA2) * g[i] * g[i];
                        let mhat = m1[i] / bc1;
                        let vhat = m2[i] / bc2;
                        *w -= self.lr * mhat / (vhat.sqrt() + ADAM_EPS);
                    }
                }
            }
            OptimizerKind::Adagrad => {
                for b in blocks {
                    let g = grads.block(b);
                    let acc = self.second.block_mut(b);
                    for (i, w) in m.params.block_mut(b).iter_mut().enumerate() {
                        acc[i] += g[i] * g[i];
                        *w -= self.lr * g[i] / (acc[i].sqrt() + ADAGRAD_EPS);
                    }
                }
            }
        }
        let q = m.sig.q();
        for time in m.params.entity_time.chunks_mut(q) {
            enforce_time_guard(time);
        }
    }
}

/// Per-epoch progress handed to the fit callback.
#[derive(Debug, Clone, Copy)]
pub struct EpochReport {
    pub epoch: usize,
    pub loss: f64,
}

/// Loss trace of a fit run.
#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub losses: Vec<f64>,
}

fn build_pool(cfg: &TrainConfig) -> rayon::ThreadPool {
    let threads = if cfg.deterministic { 1 } else { cfg.threads };
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

/// Trains `m` on the store's train split. The loss trace is a pure function
/// of data, config and seed. On divergence the model is rolled back to the
/// state at the start of the failing epoch.
pub fn fit<F: FnMut(&EpochReport, &Model)>(
    m: &mut Model,
    store: &TripleStore,
    cfg: &TrainConfig,
    mut on_epoch: F,
) -> Result<FitReport, TrainError> {
    cfg.validate()?;
    if store.train().is_empty() {
        return Err(TrainError::EmptyTrain);
    }
    if m.n_entities < store.num_entities() || m.n_relations < store.num_relations() {
        return Err(TrainError::Shape {
            model: m.n_entities,
            model_rel: m.n_relations,
            store: store.num_entities(),
            store_rel: store.num_relations(),
        });
    }
    let pool = build_pool(cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, m);
    let mut grads = ParamSet::zeros(&m.sig, m.n_entities, m.n_relations);
    let mut order: Vec<Triple> = store.train().to_vec();
    let mut losses = Vec::with_capacity(cfg.epochs);

    if cfg.grad_check && cfg.epochs > 0 {
        let batch: Vec<Sample> = order
            .iter()
            .take(cfg.batch_size.min(8))
            .map(|&t| Sample {
                positive: t,
                negatives: sample_negatives(t, cfg.neg_samples.min(4), m.n_entities, &mut rng),
            })
            .collect();
        let report = pool.install(|| check_gradients(m, &batch, 1e-5));
        if let Some((block, err)) = report.into_iter().find(|(_, e)| *e > 1e-4) {
            return Err(TrainError::Config(format!(
                "gradient check failed for {}: relative error {err:e}",
                block.name()
            )));
        }
    }

    for epoch in 1..=cfg.epochs {
        let snapshot = m.params.clone();
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<Sample> = chunk
                .iter()
                .map(|&t| Sample {
                    positive: t,
                    negatives: sample_negatives(t, cfg.neg_samples, m.n_entities, &mut rng),
                })
                .collect();
            let loss = pool.install(|| accumulate_gradients(m, &batch, &mut grads));
            if let Some(block) = grads.first_non_finite() {
                m.params = snapshot;
                return Err(TrainError::NonFiniteGradient(block.name()));
            }
            total += loss * batch.len() as f64;
            opt.step(m, &grads);
        }
        let loss = total / order.len() as f64;
        if !loss.is_finite() || m.params.first_non_finite().is_some() {
            m.params = snapshot;
            return Err(TrainError::Diverged { epoch, loss });
        }
        losses.push(loss);
        on_epoch(&EpochReport { epoch, loss }, m);
    }
    Ok(FitReport { losses })
}

/// Relative error per parameter family between analytic gradients and
/// central differences with step `h`, measured as
/// `|g - g_fd| / max(|g_fd|, 1e-8)` over the whole block.
pub fn check_gradients(m: &Model, batch: &[Sample], h: f64) -> Vec<(ParamBlock, f64)> {
    let analytic = gradients(m, batch).map(|g| g.grads);
    let Ok(analytic) = analytic else {
        return ParamBlock::ALL.iter().map(|&b| (b, f64::INFINITY)).collect();
    };
    let mut probe = m.clone();
    ParamBlock::ALL
        .iter()
        .map(|&b| {
            let n = m.params.block(b).len();
            let mut fd = vec![0.0; n];
            for (i, slot) in fd.iter_mut().enumerate() {
                let orig = m.params.block(b)[i];
                probe.params.block_mut(b)[i] = orig + h;
                let up = bce_loss(&probe, batch);
                probe.params.block_mut(b)[i] = orig - h;
                let down = bce_loss(&probe, batch);
                probe.params.block_mut(b)[i] = orig;
                *slot = (up - down) / (2.0 * h);
            }
            let g = analytic.block(b);
            let diff: f64 = g.iter().zip(&fd).map(|(a, f)| (a - f).powi(2)).sum::<f64>().sqrt();
            let scale: f64 = fd.iter().map(|f| f * f).sum::<f64>().sqrt();
            (b, diff / scale.max(1e-8))
        })
        .collect()
}
