//! Embedding storage, the triple score, initialization and checkpoints.
//!
//! The score of `(h, r, t)` is
//!
//! ```text
//! s = -d(f_r(phi(e_h)), phi(e_t))^2 + b_h + b_t + delta
//! ```
//!
//! with one scalar bias per entity (used in both head and tail roles) and a
//! global margin `delta`.

mod checkpoint;

pub use checkpoint::{load, load_expecting, save, CheckpointError, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, phi_backward, phi_into, Signature};
use crate::operators::{self, relation_in_place, NoCount, OperatorKind, RelationParams, RelationRef};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("entity id {0} out of range")]
    EntityOutOfRange(usize),
    #[error("relation id {0} out of range")]
    RelationOutOfRange(usize),
}

/// How entity vectors are embedded and compared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// Pseudo-hyperboloid with the two-leg distance.
    #[default]
    Ultra,
    /// Plain `R^d` with Euclidean distance and no hyperbolic rotation;
    /// the rotation/reflection baseline.
    Euclidean,
}

impl Geometry {
    pub fn as_str(self) -> &'static str {
        match self {
            Geometry::Ultra => "ultra",
            Geometry::Euclidean => "euclidean",
        }
    }
}

impl std::str::FromStr for Geometry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ultra" => Ok(Geometry::Ultra),
            "euclidean" => Ok(Geometry::Euclidean),
            other => Err(format!("unknown geometry '{other}' (expected ultra or euclidean)")),
        }
    }
}

/// Names of the parameter families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamBlock {
    EntitySpace,
    EntityTime,
    Bias,
    Theta,
    Phi,
    Mu,
    Delta,
}

impl ParamBlock {
    pub const ALL: [ParamBlock; 7] = [
        ParamBlock::EntitySpace,
        ParamBlock::EntityTime,
        ParamBlock::Bias,
        ParamBlock::Theta,
        ParamBlock::Phi,
        ParamBlock::Mu,
        ParamBlock::Delta,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamBlock::EntitySpace => "entity space",
            ParamBlock::EntityTime => "entity time",
            ParamBlock::Bias => "bias",
            ParamBlock::Theta => "rotation angles",
            ParamBlock::Phi => "reflection angles",
            ParamBlock::Mu => "boosts",
            ParamBlock::Delta => "margin",
        }
    }
}

/// Flat storage for every parameter family. Used for the model itself, for
/// gradients and for optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    /// `n_entities x p`, row-major.
    pub entity_space: Vec<f64>,
    /// `n_entities x q`, row-major.
    pub entity_time: Vec<f64>,
    pub biases: Vec<f64>,
    /// `n_relations x d/2`.
    pub theta: Vec<f64>,
    /// `n_relations x d/2`.
    pub phi: Vec<f64>,
    /// `n_relations x q`.
    pub mu: Vec<f64>,
    pub delta: f64,
}

impl ParamSet {
    pub fn zeros(sig: &Signature, n_entities: usize, n_relations: usize) -> Self {
        let half = sig.dim() / 2;
        Self {
            entity_space: vec![0.0; n_entities * sig.p()],
            entity_time: vec![0.0; n_entities * sig.q()],
            biases: vec![0.0; n_entities],
            theta: vec![0.0; n_relations * half],
            phi: vec![0.0; n_relations * half],
            mu: vec![0.0; n_relations * sig.q()],
            delta: 0.0,
        }
    }

    pub fn block(&self, b: ParamBlock) -> &[f64] {
        match b {
            ParamBlock::EntitySpace => &self.entity_space,
            ParamBlock::EntityTime => &self.entity_time,
            ParamBlock::Bias => &self.biases,
            ParamBlock::Theta => &self.theta,
            ParamBlock::Phi => &self.phi,
            ParamBlock::Mu => &self.mu,
            ParamBlock::Delta => std::slice::from_ref(&self.delta),
        }
    }

    pub fn block_mut(&mut self, b: ParamBlock) -> &mut [f64] {
        match b {
            ParamBlock::EntitySpace => &mut self.entity_space,
            ParamBlock::EntityTime => &mut self.entity_time,
            ParamBlock::Bias => &mut self.biases,
            ParamBlock::Theta => &mut self.theta,
            ParamBlock::Phi => &mut self.phi,
            ParamBlock::Mu => &mut self.mu,
            ParamBlock::Delta => std::slice::from_mut(&mut self.delta),
        }
    }

    pub fn fill(&mut self, v: f64) {
        for b in ParamBlock::ALL {
            self.block_mut(b).iter_mut().for_each(|x| *x = v);
        }
    }

    /// First block containing a non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<ParamBlock> {
        ParamBlock::ALL
            .into_iter()
            .find(|&b| self.block(b).iter().any(|v| !v.is_finite()))
    }
}

/// Entity and relation names carried along with a model for checkpoints.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Names {
    pub entities: Vec<String>,
    pub relations: Vec<String>,
}

/// A complete embedding model.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub sig: Signature,
    pub kind: OperatorKind,
    pub geometry: Geometry,
    pub n_entities: usize,
    pub n_relations: usize,
    pub params: ParamSet,
    pub names: Option<Names>,
}

/// Standard deviation of the Gaussian init for entities and boosts.
pub const INIT_STD: f64 = 0.01;

/// Default global margin.
pub const DEFAULT_MARGIN: f64 = 6.0;

/// Builds a seeded model. Entities are `N(0, 0.01^2)` with `1` added to the
/// first time coordinate; biases are zero; angles are `U(-pi, pi)`; boosts
/// are `N(0, 0.01^2)`.
///
/// # Panics
///
/// If `p` or `q` is odd, since the relation operators pair coordinates.
pub fn init(sig: Signature, n_entities: usize, n_relations: usize, delta: f64, seed: u64) -> Model {
    Model::init(sig, n_entities, n_relations, delta, seed)
}

impl Model {
    pub fn init(sig: Signature, n_entities: usize, n_relations: usize, delta: f64, seed: u64) -> Self {
        if let Err(e) = sig.require_even() {
            panic!("{e}");
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, INIT_STD).expect("valid std");
        let angle = Uniform::new(-std::f64::consts::PI, std::f64::consts::PI).expect("valid range");
        let mut params = ParamSet::zeros(&sig, n_entities, n_relations);
        let (p, q) = (sig.p(), sig.q());
        for e in 0..n_entities {
            for v in &mut params.entity_space[e * p..(e + 1) * p] {
                *v = normal.sample(&mut rng);
            }
            let time = &mut params.entity_time[e * q..(e + 1) * q];
            for v in time.iter_mut() {
                *v = normal.sample(&mut rng);
            }
            time[0] += 1.0;
        }
        for v in params.theta.iter_mut().chain(params.phi.iter_mut()) {
            *v = angle.sample(&mut rng);
        }
        for v in params.mu.iter_mut() {
            *v = normal.sample(&mut rng);
        }
        params.delta = delta;
        Self {
            sig,
            kind: OperatorKind::RotRef,
            geometry: Geometry::Ultra,
            n_entities,
            n_relations,
            params,
            names: None,
        }
    }

    pub fn with_operator(mut self, kind: OperatorKind) -> Self {
        self.kind = kind;
        self
    }

    /// Switches geometry. The Euclidean baseline has no hyperbolic rotation,
    /// so its boosts are zeroed.
    pub fn with_geometry(mut self, geometry: Geometry) -> Self {
        self.geometry = geometry;
        if geometry == Geometry::Euclidean {
            self.params.mu.iter_mut().for_each(|v| *v = 0.0);
        }
        self
    }

    pub fn with_names(mut self, names: Names) -> Self {
        self.names = Some(names);
        self
    }

    /// Random draw of everything; `rng` state decides the result.
    pub fn randomize<R: Rng>(&mut self, rng: &mut R, scale: f64) {
        let normal = Normal::new(0.0, scale).expect("valid std");
        for b in ParamBlock::ALL {
            if b == ParamBlock::Delta {
                continue;
            }
            for v in self.params.block_mut(b) {
                *v = normal.sample(rng);
            }
        }
        let q = self.sig.q();
        for e in 0..self.n_entities {
            self.params.entity_time[e * q] += 1.0;
        }
        if self.geometry == Geometry::Euclidean {
            self.params.mu.iter_mut().for_each(|v| *v = 0.0);
        }
    }

    pub fn entity_space(&self, e: usize) -> &[f64] {
        let p = self.sig.p();
        &self.params.entity_space[e * p..(e + 1) * p]
    }

    pub fn entity_time(&self, e: usize) -> &[f64] {
        let q = self.sig.q();
        &self.params.entity_time[e * q..(e + 1) * q]
    }

    pub fn relation(&self, r: usize) -> RelationRef<'_> {
        let half = self.sig.dim() / 2;
        let q = self.sig.q();
        RelationRef {
            theta: &self.params.theta[r * half..(r + 1) * half],
            phi: &self.params.phi[r * half..(r + 1) * half],
            mu: &self.params.mu[r * q..(r + 1) * q],
        }
    }

    pub fn relation_params(&self, r: usize) -> RelationParams {
        let view = self.relation(r);
        RelationParams {
            theta: view.theta.to_vec(),
            phi: view.phi.to_vec(),
            mu: view.mu.to_vec(),
        }
    }

    /// Total number of scalar parameters, margin excluded.
    pub fn param_count(&self) -> usize {
        ParamBlock::ALL
            .iter()
            .filter(|&&b| b != ParamBlock::Delta)
            .map(|&b| self.params.block(b).len())
            .sum()
    }

    fn check_ids(&self, h: usize, r: usize, t: usize) -> Result<(), ModelError> {
        for e in [h, t] {
            if e >= self.n_entities {
                return Err(ModelError::EntityOutOfRange(e));
            }
        }
        if r >= self.n_relations {
            return Err(ModelError::RelationOutOfRange(r));
        }
        Ok(())
    }

    /// Embedding of an entity: `phi(s, t)` on the manifold, or the raw
    /// concatenation in the Euclidean baseline.
    pub fn embed_into(&self, e: usize, out: &mut Vec<f64>) {
        match self.geometry {
            Geometry::Ultra => phi_into(self.entity_space(e), self.entity_time(e), self.sig.alpha(), out),
            Geometry::Euclidean => {
                out.clear();
                out.extend_from_slice(self.entity_space(e));
                out.extend_from_slice(self.entity_time(e));
            }
        }
    }

    pub fn embed(&self, e: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.sig.dim());
        self.embed_into(e, &mut out);
        out
    }

    /// Embeddings of all entities, row-major `n_entities x d`.
    pub fn embed_all(&self) -> Vec<f64> {
        let d = self.sig.dim();
        let mut all = Vec::with_capacity(self.n_entities * d);
        let mut buf = Vec::with_capacity(d);
        for e in 0..self.n_entities {
            self.embed_into(e, &mut buf);
            all.extend_from_slice(&buf);
        }
        all
    }

    /// `f_r` applied to an embedded head.
    pub fn transform(&self, r: usize, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        let kind = self.kind;
        let rel = self.relation(r);
        match self.geometry {
            Geometry::Ultra => relation_in_place(rel, &mut y, self.sig.p(), kind, &mut NoCount),
            Geometry::Euclidean => {
                let zero = vec![0.0; self.sig.q()];
                let rel = RelationRef { mu: &zero, ..rel };
                relation_in_place(rel, &mut y, self.sig.p(), kind, &mut NoCount)
            }
        }
        y
    }

    /// Squared distance between a transformed head and an embedded tail.
    pub fn sq_distance(&self, y: &[f64], x_t: &[f64]) -> f64 {
        match self.geometry {
            Geometry::Ultra => geometry::dist_manhattan(y, x_t, &self.sig).powi(2),
            Geometry::Euclidean => y.iter().zip(x_t).map(|(a, b)| (a - b) * (a - b)).sum(),
        }
    }

    pub fn score(&self, h: usize, r: usize, t: usize) -> Result<f64, ModelError> {
        self.check_ids(h, r, t)?;
        let y = self.transform(r, &self.embed(h));
        let x_t = self.embed(t);
        Ok(self.score_from_parts(&y, &x_t, h, t))
    }

    pub(crate) fn score_from_parts(&self, y: &[f64], x_t: &[f64], h: usize, t: usize) -> f64 {
        -self.sq_distance(y, x_t) + self.params.biases[h] + self.params.biases[t] + self.params.delta
    }

    /// Scores of `(h, r, e)` for every entity `e`, given precomputed
    /// embeddings from [`Model::embed_all`].
    pub fn score_all_tails(&self, h: usize, r: usize, embeddings: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_ids(h, r, h)?;
        let d = self.sig.dim();
        let y = self.transform(r, &embeddings[h * d..(h + 1) * d]);
        Ok((0..self.n_entities)
            .map(|e| self.score_from_parts(&y, &embeddings[e * d..(e + 1) * d], h, e))
            .collect())
    }

    /// Score of one triple and the gradient of that score with respect to
    /// the parameters it touches. Bias and margin gradients are all 1 and
    /// are left to the caller.
    pub(crate) fn score_with_grad(&self, h: usize, r: usize, t: usize) -> (f64, ScoreGrad) {
        let sig = &self.sig;
        let x_h = self.embed(h);
        let x_t = self.embed(t);
        let y = self.transform(r, &x_h);
        let (sq, g_y, g_xt) = match self.geometry {
            Geometry::Ultra => {
                let dg = geometry::dist_manhattan_backward(&y, &x_t, sig);
                // d(-D^2) = -2 D dD
                let k = -2.0 * dg.value;
                (
                    dg.value * dg.value,
                    dg.grad_x.iter().map(|g| k * g).collect::<Vec<_>>(),
                    dg.grad_y.iter().map(|g| k * g).collect::<Vec<_>>(),
                )
            }
            Geometry::Euclidean => {
                let diff: Vec<f64> = y.iter().zip(&x_t).map(|(a, b)| a - b).collect();
                let sq = diff.iter().map(|v| v * v).sum();
                (
                    sq,
                    diff.iter().map(|v| -2.0 * v).collect(),
                    diff.iter().map(|v| 2.0 * v).collect(),
                )
            }
        };
        let score = -sq + self.params.biases[h] + self.params.biases[t] + self.params.delta;

        let mut rel = self.relation(r);
        let zero;
        if self.geometry == Geometry::Euclidean {
            zero = vec![0.0; sig.q()];
            rel.mu = &zero;
        }
        let rg = operators::relation_backward(rel, &x_h, sig, self.kind, &g_y);
        let (head, tail) = match self.geometry {
            Geometry::Ultra => (
                phi_backward(self.entity_space(h), self.entity_time(h), sig, &rg.x),
                phi_backward(self.entity_space(t), self.entity_time(t), sig, &g_xt),
            ),
            Geometry::Euclidean => {
                let p = sig.p();
                (
                    (rg.x[..p].to_vec(), rg.x[p..].to_vec()),
                    (g_xt[..p].to_vec(), g_xt[p..].to_vec()),
                )
            }
        };
        let mu = if self.geometry == Geometry::Euclidean {
            vec![0.0; sig.q()]
        } else {
            rg.mu
        };
        (
            score,
            ScoreGrad {
                head_space: head.0,
                head_time: head.1,
                tail_space: tail.0,
                tail_time: tail.1,
                theta: rg.theta,
                phi: rg.phi,
                mu,
            },
        )
    }
}

/// Gradient of one triple score with respect to the entity and relation
/// parameters involved.
#[derive(Debug, Clone)]
pub(crate) struct ScoreGrad {
    pub head_space: Vec<f64>,
    pub head_time: Vec<f64>,
    pub tail_space: Vec<f64>,
    pub tail_time: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::EPS_TIME;

    fn sig(p: usize, q: usize) -> Signature {
        Signature::new(p, q, 1.0).unwrap()
    }

    #[test]
    fn identity_relation_self_score_is_zero() {
        let s = sig(2, 2);
        let mut m = init(s, 2, 1, 0.0, 3);
        m.params.theta.iter_mut().for_each(|v| *v = 0.0);
        m.params.phi.iter_mut().for_each(|v| *v = 0.0);
        m.params.mu.iter_mut().for_each(|v| *v = 0.0);
        // a zero-angle reflection is diag(1, -1) per pair, so drop V
        m.kind = OperatorKind::Rot;
        assert_eq!(m.score(0, 0, 0).unwrap(), 0.0);
    }

    #[test]
    fn margin_shifts_score() {
        let s = sig(2, 2);
        let mut m = init(s, 3, 2, 6.0, 1);
        let before = m.score(0, 1, 2).unwrap();
        m.params.delta += 2.5;
        let after = m.score(0, 1, 2).unwrap();
        assert!((after - before - 2.5).abs() < 1e-12);
    }

    #[test]
    fn hand_built_pair_score() {
        // two points that only use the first space and first time axis
        let s = Signature::new(2, 2, 1.0).unwrap();
        let mut params = ParamSet::zeros(&s, 2, 1);
        params.entity_space = vec![0.0, 0.0, 3.0, 0.0];
        params.entity_time = vec![1.0, 0.0, 0.5, 0.0];
        params.biases = vec![0.25, -0.5];
        params.delta = 2.0;
        let m = Model {
            sig: s,
            kind: OperatorKind::Rot,
            geometry: Geometry::Ultra,
            n_entities: 2,
            n_relations: 1,
            params,
            names: None,
        };
        // x_h = (0,0,1,0), x_t = (3,0,sqrt(10),0), <x_h,x_t>_q = -sqrt(10)
        let expected = -(10f64.sqrt().acosh()).powi(2) + 0.25 - 0.5 + 2.0;
        assert!((m.score(0, 0, 1).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn lookup_errors() {
        let m = init(sig(2, 2), 3, 2, 6.0, 1);
        assert_eq!(m.score(3, 0, 0), Err(ModelError::EntityOutOfRange(3)));
        assert_eq!(m.score(0, 2, 0), Err(ModelError::RelationOutOfRange(2)));
    }

    #[test]
    fn init_is_seeded() {
        let s = sig(4, 2);
        assert_eq!(init(s, 5, 3, 6.0, 9), init(s, 5, 3, 6.0, 9));
        assert_ne!(init(s, 5, 3, 6.0, 9).params, init(s, 5, 3, 6.0, 10).params);
        let m = init(s, 50, 3, 6.0, 9);
        for e in 0..50 {
            assert!(geometry::norm(m.entity_time(e)) >= EPS_TIME);
        }
        assert!(m.params.biases.iter().all(|&b| b == 0.0));
        let pi = std::f64::consts::PI;
        assert!(m.params.theta.iter().all(|a| (-pi..pi).contains(a)));
    }

    #[test]
    fn tails_batch_matches_single_scores() {
        let s = sig(4, 2);
        let m = init(s, 6, 2, 4.0, 2);
        let emb = m.embed_all();
        let all = m.score_all_tails(1, 1, &emb).unwrap();
        for (e, v) in all.iter().enumerate() {
            assert!((v - m.score(1, 1, e).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn euclidean_baseline_ignores_boosts() {
        let s = sig(2, 2);
        let m = init(s, 3, 1, 2.0, 4).with_geometry(Geometry::Euclidean);
        assert!(m.params.mu.iter().all(|&v| v == 0.0));
        let x = m.embed(0);
        assert_eq!(&x[..2], m.entity_space(0));
    }
}
