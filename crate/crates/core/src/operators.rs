//! Relation operators `f_r = U(theta) * H(mu) * V(phi)`.
//!
//! * `U` is a block-diagonal Givens rotation, `V` a block-diagonal Givens
//!   reflection. Both pair consecutive coordinates `(0,1), (2,3), ...`
//!   separately inside the space block and inside the time block, so the two
//!   blocks never mix.
//! * `H` is a hyperbolic rotation coupling space coordinate `i` with time
//!   coordinate `p + i` for `i < q`; space coordinates `q..p` pass through.
//!
//! All three are applied in `O(d)` without building matrices. The dense
//! forms here exist for checking the pseudo-orthogonality `M^T J M = J`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ManifoldPoint, Signature};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("configuration error: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GivensMode {
    Rotation,
    Reflection,
}

/// Which factors of `U H V` a relation uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OperatorKind {
    /// `U H V`
    #[default]
    RotRef,
    /// `U H`
    Rot,
    /// `H V`
    Ref,
}

impl OperatorKind {
    pub fn uses_rotation(self) -> bool {
        matches!(self, OperatorKind::RotRef | OperatorKind::Rot)
    }

    pub fn uses_reflection(self) -> bool {
        matches!(self, OperatorKind::RotRef | OperatorKind::Ref)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            OperatorKind::RotRef => "rotref",
            OperatorKind::Rot => "rot",
            OperatorKind::Ref => "ref",
        }
    }
}

impl std::str::FromStr for OperatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rotref" => Ok(OperatorKind::RotRef),
            "rot" => Ok(OperatorKind::Rot),
            "ref" => Ok(OperatorKind::Ref),
            other => Err(format!("unknown operator '{other}' (expected rot, ref or rotref)")),
        }
    }
}

/// Parameters of one relation: `d/2` rotation angles, `d/2` reflection
/// angles and `q` boost magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct RelationParams {
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Borrowed view of [`RelationParams`], used on hot paths.
#[derive(Debug, Clone, Copy)]
pub struct RelationRef<'a> {
    pub theta: &'a [f64],
    pub phi: &'a [f64],
    pub mu: &'a [f64],
}

impl RelationParams {
    pub fn new(
        theta: Vec<f64>,
        phi: Vec<f64>,
        mu: Vec<f64>,
        sig: &Signature,
    ) -> Result<Self, OperatorError> {
        sig.require_even()
            .map_err(|e| OperatorError::Config(e.to_string()))?;
        let half = sig.dim() / 2;
        if theta.len() != half || phi.len() != half || mu.len() != sig.q() {
            return Err(OperatorError::Dimension(format!(
                "expected {half} rotation angles, {half} reflection angles and {} boosts, got {}, {}, {}",
                sig.q(),
                theta.len(),
                phi.len(),
                mu.len()
            )));
        }
        if theta.iter().chain(&phi).chain(&mu).any(|v| !v.is_finite()) {
            return Err(OperatorError::Config("non-finite relation parameter".into()));
        }
        Ok(Self { theta, phi, mu })
    }

    /// All angles and boosts zero. Without the reflection factor this is the
    /// identity map; with it, each pair becomes `diag(1, -1)`.
    pub fn identity(sig: &Signature) -> Self {
        let half = sig.dim() / 2;
        Self {
            theta: vec![0.0; half],
            phi: vec![0.0; half],
            mu: vec![0.0; sig.q()],
        }
    }

    pub fn as_ref(&self) -> RelationRef<'_> {
        RelationRef {
            theta: &self.theta,
            phi: &self.phi,
            mu: &self.mu,
        }
    }

    pub fn param_count(&self) -> usize {
        self.theta.len() + self.phi.len() + self.mu.len()
    }
}

/// Number of parameters per relation for a signature: `d + q`.
pub fn relation_param_count(sig: &Signature) -> usize {
    sig.dim() + sig.q()
}

/// Counts arithmetic work done by the operator kernels.
pub trait OpCounter {
    fn add(&mut self, ops: u64);
}

/// Counter that discards everything.
pub struct NoCount;

impl OpCounter for NoCount {
    #[inline(always)]
    fn add(&mut self, _: u64) {}
}

/// Counter that tallies multiplies, adds and transcendental evaluations.
#[derive(Debug, Default, Clone, Copy)]
pub struct FlopCounter(pub u64);

impl OpCounter for FlopCounter {
    fn add(&mut self, ops: u64) {
        self.0 += ops;
    }
}

// 2 trig + 4 mul + 2 add per 2x2 block
const BLOCK_OPS: u64 = 8;

fn givens_in_place<C: OpCounter>(angles: &[f64], v: &mut [f64], mode: GivensMode, c: &mut C) {
    for (k, &theta) in angles.iter().enumerate() {
        let (s, co) = theta.sin_cos();
        let a = v[2 * k];
        let b = v[2 * k + 1];
        match mode {
            GivensMode::Rotation => {
                v[2 * k] = co * a - s * b;
                v[2 * k + 1] = s * a + co * b;
            }
            GivensMode::Reflection => {
                v[2 * k] = co * a + s * b;
                v[2 * k + 1] = s * a - co * b;
            }
        }
        c.add(BLOCK_OPS);
    }
}

/// Backward of [`givens_in_place`]: `input` is the vector before the map,
/// `g` holds the output gradient and is overwritten with the input gradient.
/// Angle gradients are added to `g_angles`.
fn givens_backward(angles: &[f64], input: &[f64], g: &mut [f64], g_angles: &mut [f64], mode: GivensMode) {
    for (k, &theta) in angles.iter().enumerate() {
        let (s, co) = theta.sin_cos();
        let a = input[2 * k];
        let b = input[2 * k + 1];
        let g1 = g[2 * k];
        let g2 = g[2 * k + 1];
        match mode {
            GivensMode::Rotation => {
                g_angles[k] += g1 * (-s * a - co * b) + g2 * (co * a - s * b);
                g[2 * k] = co * g1 + s * g2;
                g[2 * k + 1] = -s * g1 + co * g2;
            }
            GivensMode::Reflection => {
                g_angles[k] += g1 * (-s * a + co * b) + g2 * (co * a + s * b);
                g[2 * k] = co * g1 + s * g2;
                g[2 * k + 1] = s * g1 - co * g2;
            }
        }
    }
}

/// Applies `diag(G(angle_1), ..., G(angle_n))` to a vector of length `2n`.
pub fn givens_apply(angles: &[f64], v: &[f64], mode: GivensMode) -> Result<Vec<f64>, OperatorError> {
    if !v.len().is_multiple_of(2) {
        return Err(OperatorError::Dimension(format!(
            "Givens blocks need an even-length vector, got {}",
            v.len()
        )));
    }
    if v.len() != 2 * angles.len() {
        return Err(OperatorError::Dimension(format!(
            "{} angles cannot act on a vector of length {}",
            angles.len(),
            v.len()
        )));
    }
    let mut out = v.to_vec();
    givens_in_place(angles, &mut out, mode, &mut NoCount);
    Ok(out)
}

fn block_in_place<C: OpCounter>(angles: &[f64], x: &mut [f64], p: usize, mode: GivensMode, c: &mut C) {
    let (ang_p, ang_q) = angles.split_at(p / 2);
    let (xp, xq) = x.split_at_mut(p);
    givens_in_place(ang_p, xp, mode, c);
    givens_in_place(ang_q, xq, mode, c);
}

fn block_backward(angles: &[f64], input: &[f64], g: &mut [f64], g_angles: &mut [f64], p: usize, mode: GivensMode) {
    let (ang_p, ang_q) = angles.split_at(p / 2);
    let (ga_p, ga_q) = g_angles.split_at_mut(p / 2);
    let (in_p, in_q) = input.split_at(p);
    let (g_p, g_q) = g.split_at_mut(p);
    givens_backward(ang_p, in_p, g_p, ga_p, mode);
    givens_backward(ang_q, in_q, g_q, ga_q, mode);
}

/// Block-orthogonal map: the first `p/2` angles act on the space block, the
/// remaining `q/2` on the time block.
pub fn block_orthogonal_apply(
    angles: &[f64],
    x: &[f64],
    sig: &Signature,
    mode: GivensMode,
) -> Result<Vec<f64>, OperatorError> {
    sig.require_even()
        .map_err(|e| OperatorError::Config(e.to_string()))?;
    if x.len() != sig.dim() || angles.len() != sig.dim() / 2 {
        return Err(OperatorError::Dimension(format!(
            "expected a vector of length {} and {} angles, got {} and {}",
            sig.dim(),
            sig.dim() / 2,
            x.len(),
            angles.len()
        )));
    }
    let mut out = x.to_vec();
    block_in_place(angles, &mut out, sig.p(), mode, &mut NoCount);
    Ok(out)
}

fn hyper_in_place<C: OpCounter>(mu: &[f64], x: &mut [f64], p: usize, c: &mut C) {
    for (i, &m) in mu.iter().enumerate() {
        let (ch, sh) = (m.cosh(), m.sinh());
        let a = x[i];
        let b = x[p + i];
        x[i] = ch * a + sh * b;
        x[p + i] = sh * a + ch * b;
        c.add(BLOCK_OPS);
    }
}

fn hyper_backward(mu: &[f64], input: &[f64], g: &mut [f64], g_mu: &mut [f64], p: usize) {
    for (i, &m) in mu.iter().enumerate() {
        let (ch, sh) = (m.cosh(), m.sinh());
        let a = input[i];
        let b = input[p + i];
        let g1 = g[i];
        let g2 = g[p + i];
        g_mu[i] += g1 * (sh * a + ch * b) + g2 * (ch * a + sh * b);
        g[i] = ch * g1 + sh * g2;
        g[p + i] = sh * g1 + ch * g2;
    }
}

/// Hyperbolic rotation `H(mu)`: couples `(x_i, x_{p+i})` with
/// `[[cosh, sinh], [sinh, cosh]]` for each `i < q`.
pub fn hyper_rot_apply(mu: &[f64], x: &[f64], sig: &Signature) -> Result<Vec<f64>, OperatorError> {
    if sig.q() > sig.p() {
        return Err(OperatorError::Config(format!(
            "hyperbolic rotation needs q <= p (p={}, q={})",
            sig.p(),
            sig.q()
        )));
    }
    if mu.len() != sig.q() || x.len() != sig.dim() {
        return Err(OperatorError::Dimension(format!(
            "expected {} boosts and a vector of length {}, got {} and {}",
            sig.q(),
            sig.dim(),
            mu.len(),
            x.len()
        )));
    }
    let mut out = x.to_vec();
    hyper_in_place(mu, &mut out, sig.p(), &mut NoCount);
    Ok(out)
}

/// In-place forward pass of `f_r`, generic over an operation counter.
pub(crate) fn relation_in_place<C: OpCounter>(
    r: RelationRef<'_>,
    x: &mut [f64],
    p: usize,
    kind: OperatorKind,
    c: &mut C,
) {
    if kind.uses_reflection() {
        block_in_place(r.phi, x, p, GivensMode::Reflection, c);
    }
    hyper_in_place(r.mu, x, p, c);
    if kind.uses_rotation() {
        block_in_place(r.theta, x, p, GivensMode::Rotation, c);
    }
}

/// Gradients of `f_r(x)` pulled back from an output gradient.
#[derive(Debug, Clone)]
pub struct RelationGrad {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
    pub phi: Vec<f64>,
    pub mu: Vec<f64>,
}

/// Backward pass of `f_r` at input `x` for output gradient `g_out`.
pub fn relation_backward(
    r: RelationRef<'_>,
    x: &[f64],
    sig: &Signature,
    kind: OperatorKind,
    g_out: &[f64],
) -> RelationGrad {
    let p = sig.p();
    // replay the forward pass keeping intermediates
    let mut after_v = x.to_vec();
    if kind.uses_reflection() {
        block_in_place(r.phi, &mut after_v, p, GivensMode::Reflection, &mut NoCount);
    }
    let mut after_h = after_v.clone();
    hyper_in_place(r.mu, &mut after_h, p, &mut NoCount);

    let mut g = g_out.to_vec();
    let mut theta = vec![0.0; r.theta.len()];
    let mut phi = vec![0.0; r.phi.len()];
    let mut mu = vec![0.0; r.mu.len()];
    if kind.uses_rotation() {
        block_backward(r.theta, &after_h, &mut g, &mut theta, p, GivensMode::Rotation);
    }
    hyper_backward(r.mu, &after_v, &mut g, &mut mu, p);
    if kind.uses_reflection() {
        block_backward(r.phi, x, &mut g, &mut phi, p, GivensMode::Reflection);
    }
    RelationGrad { x: g, theta, phi, mu }
}

/// Applies `f_r = U H V` to an ambient vector.
pub fn relation_apply_kind(r: RelationRef<'_>, x: &[f64], sig: &Signature, kind: OperatorKind) -> Vec<f64> {
    let mut out = x.to_vec();
    relation_in_place(r, &mut out, sig.p(), kind, &mut NoCount);
    out
}

/// Like [`relation_apply_kind`] but tallies the work into `counter`.
pub fn relation_apply_counted(
    r: RelationRef<'_>,
    x: &[f64],
    sig: &Signature,
    kind: OperatorKind,
    counter: &mut FlopCounter,
) -> Vec<f64> {
    let mut out = x.to_vec();
    relation_in_place(r, &mut out, sig.p(), kind, counter);
    out
}

/// Applies the full relation operator `U H V` to a manifold point. The
/// operator is pseudo-orthogonal, so the result stays on the manifold.
pub fn relation_apply(r: &RelationParams, x: &ManifoldPoint, sig: &Signature) -> ManifoldPoint {
    ManifoldPoint::from_vec_unchecked(relation_apply_kind(r.as_ref(), x.coords(), sig, OperatorKind::RotRef))
}

/// A materialized `d x d` operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator(pub DMatrix<f64>);

impl DenseOperator {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }
}

/// `J = diag(I_p, -I_q)`.
pub fn signature_matrix(sig: &Signature) -> DMatrix<f64> {
    DMatrix::from_fn(sig.dim(), sig.dim(), |i, j| match (i == j, i < sig.p()) {
        (true, true) => 1.0,
        (true, false) => -1.0,
        _ => 0.0,
    })
}

/// Materializes `U H V` column by column from basis vectors.
pub fn as_dense(r: &RelationParams, sig: &Signature) -> DenseOperator {
    as_dense_kind(r.as_ref(), sig, OperatorKind::RotRef)
}

pub fn as_dense_kind(r: RelationRef<'_>, sig: &Signature, kind: OperatorKind) -> DenseOperator {
    let d = sig.dim();
    let mut m = DMatrix::zeros(d, d);
    let mut e = vec![0.0; d];
    for j in 0..d {
        e.iter_mut().for_each(|v| *v = 0.0);
        e[j] = 1.0;
        let col = relation_apply_kind(r, &e, sig, kind);
        for (i, v) in col.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    DenseOperator(m)
}

/// Largest absolute entry of `M^T J M - J`.
pub fn j_orth_defect(m: &DenseOperator, sig: &Signature) -> f64 {
    let j = signature_matrix(sig);
    let m = m.matrix();
    assert_eq!(m.nrows(), sig.dim(), "j_orth_defect: matrix must be d x d");
    assert_eq!(m.ncols(), sig.dim(), "j_orth_defect: matrix must be d x d");
    (m.transpose() * &j * m - j).amax()
}

/// Lorentz boost for signature `(p, 1)`:
///
/// ```text
/// [ (I + b b^T)^{1/2}   b              ]
/// [ b^T                 sqrt(1 + |b|^2) ]
/// ```
pub fn lorentz_boost(b: &[f64], sig: &Signature) -> Result<DenseOperator, OperatorError> {
    if sig.q() != 1 {
        return Err(OperatorError::Config(format!(
            "Lorentz boosts are defined for q = 1, got q = {}",
            sig.q()
        )));
    }
    if b.len() != sig.p() {
        return Err(OperatorError::Dimension(format!(
            "boost vector must have length p = {}, got {}",
            sig.p(),
            b.len()
        )));
    }
    let p = sig.p();
    let nb2: f64 = b.iter().map(|v| v * v).sum();
    let c = (1.0 + nb2).sqrt();
    // (I + b b^T)^{1/2} = I + (c - 1) / |b|^2 * b b^T
    let k = if nb2 > 0.0 { (c - 1.0) / nb2 } else { 0.0 };
    let m = DMatrix::from_fn(p + 1, p + 1, |i, j| match (i < p, j < p) {
        (true, true) => (i == j) as u8 as f64 + k * b[i] * b[j],
        (true, false) => b[i],
        (false, true) => b[j],
        (false, false) => c,
    });
    Ok(DenseOperator(m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sig(p: usize, q: usize) -> Signature {
        Signature::new(p, q, 1.0).unwrap()
    }

    #[test]
    fn givens_examples() {
        let v = [0.3, -1.2, 4.0, 0.5];
        assert_eq!(givens_apply(&[0.0, 0.0], &v, GivensMode::Rotation).unwrap(), v);
        let r = givens_apply(&[FRAC_PI_2], &[1.0, 0.0], GivensMode::Rotation).unwrap();
        assert!(r[0].abs() < 1e-16 && (r[1] - 1.0).abs() < 1e-16);
        let once = givens_apply(&[0.7, -2.0], &v, GivensMode::Reflection).unwrap();
        let twice = givens_apply(&[0.7, -2.0], &once, GivensMode::Reflection).unwrap();
        for (a, b) in twice.iter().zip(&v) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(givens_apply(&[0.1], &[1.0, 2.0, 3.0], GivensMode::Rotation).is_err());
        assert!(givens_apply(&[0.1], &[1.0, 2.0, 3.0, 4.0], GivensMode::Rotation).is_err());
    }

    #[test]
    fn block_orthogonal_examples() {
        let s = sig(2, 2);
        let x = [1.0, 0.0, 5.0, 6.0];
        let y = block_orthogonal_apply(&[FRAC_PI_2, 0.0], &x, &s, GivensMode::Rotation).unwrap();
        let expected = [0.0, 1.0, 5.0, 6.0];
        for (a, b) in y.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(
            block_orthogonal_apply(&[0.0, 0.0], &x, &s, GivensMode::Rotation).unwrap(),
            x
        );
        let s = sig(4, 2);
        let x = [1.0, 2.0, -3.0, 0.5, 2.0, -1.0];
        let y = block_orthogonal_apply(&[0.3, 1.1, -2.2], &x, &s, GivensMode::Reflection).unwrap();
        let n = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>();
        assert!((n(&y[..4]) - n(&x[..4])).abs() < 1e-12);
        assert!((n(&y[4..]) - n(&x[4..])).abs() < 1e-12);
        let odd = Signature::new(3, 1, 1.0).unwrap();
        assert!(matches!(
            block_orthogonal_apply(&[0.0, 0.0], &[0.0; 4], &odd, GivensMode::Rotation),
            Err(OperatorError::Config(_))
        ));
    }

    #[test]
    fn hyper_rotation_examples() {
        let s = sig(1, 1);
        let y = hyper_rot_apply(&[2f64.ln()], &[0.0, 1.0], &s).unwrap();
        assert!((y[0] - 0.75).abs() < 1e-15 && (y[1] - 1.25).abs() < 1e-15);
        let s = sig(4, 2);
        let x = [1.0, 2.0, -3.0, 0.5, 2.0, -1.0];
        assert_eq!(hyper_rot_apply(&[0.0, 0.0], &x, &s).unwrap(), x);
        let y = hyper_rot_apply(&[0.4, -1.3], &x, &s).unwrap();
        let qx = crate::geometry::qdot(&x, &x, &s).unwrap();
        let qy = crate::geometry::qdot(&y, &y, &s).unwrap();
        assert!((qx - qy).abs() < 1e-12);
        // surplus space dims untouched
        assert_eq!(&y[2..4], &x[2..4]);
    }

    #[test]
    fn zero_params_without_reflection_is_identity() {
        let s = sig(4, 2);
        let r = RelationParams::identity(&s);
        let x = crate::geometry::phi(&[0.1, 0.2, 0.3, 0.4], &[1.0, 0.5], &s);
        assert_eq!(relation_apply_kind(r.as_ref(), x.coords(), &s, OperatorKind::Rot), x.coords());
        let m = as_dense_kind(r.as_ref(), &s, OperatorKind::Rot);
        assert_eq!(m.0, DMatrix::identity(6, 6));
        assert_eq!(relation_param_count(&s), r.param_count());
    }

    #[test]
    fn zero_reflection_flips_every_second_axis() {
        // G^-(0) = diag(1, -1), so V can never be the identity
        let s = sig(4, 2);
        let m = as_dense(&RelationParams::identity(&s), &s);
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, -1.0, 1.0, -1.0, 1.0, -1.0]));
        assert_eq!(m.0, expected);
    }

    #[test]
    fn dense_columns_are_images_of_basis() {
        let s = sig(2, 2);
        let r = RelationParams::new(vec![0.3, -1.0], vec![2.0, 0.1], vec![0.5, -0.2], &s).unwrap();
        let m = as_dense(&r, &s);
        let e2 = [0.0, 0.0, 1.0, 0.0];
        let col = relation_apply_kind(r.as_ref(), &e2, &s, OperatorKind::RotRef);
        for i in 0..4 {
            assert_eq!(m.0[(i, 2)], col[i]);
        }
        assert!(j_orth_defect(&m, &s) < 1e-12);
    }

    #[test]
    fn j_orth_defect_examples() {
        let s = sig(2, 2);
        assert_eq!(j_orth_defect(&DenseOperator(DMatrix::identity(4, 4)), &s), 0.0);
        let mut m = DMatrix::identity(4, 4);
        m[(0, 0)] = 2.0;
        assert_eq!(j_orth_defect(&DenseOperator(m), &s), 3.0);
    }

    #[test]
    fn boost_examples() {
        let s1 = sig(1, 1);
        let m = lorentz_boost(&[0.75], &s1).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.25, 0.75, 0.75, 1.25]);
        assert!((m.0 - expected).amax() < 1e-15);
        assert_eq!(lorentz_boost(&[0.0], &s1).unwrap().0, DMatrix::identity(2, 2));
        assert!(j_orth_defect(&lorentz_boost(&[0.3], &s1).unwrap(), &s1) <= 1e-12);
        assert!(lorentz_boost(&[0.1, 0.2], &sig(2, 2)).is_err());
    }

    #[test]
    fn reflection_at_minus_pi_is_involution() {
        let s = sig(2, 2);
        let r = RelationParams::new(vec![0.0; 2], vec![-PI, 0.0], vec![0.0; 2], &s).unwrap();
        let x = [0.4, -0.3, 1.2, 0.6];
        let once = relation_apply_kind(r.as_ref(), &x, &s, OperatorKind::RotRef);
        let twice = relation_apply_kind(r.as_ref(), &once, &s, OperatorKind::RotRef);
        for (a, b) in twice.iter().zip(&x) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn operator_kind_parses() {
        assert_eq!("rot".parse::<OperatorKind>().unwrap(), OperatorKind::Rot);
        assert_eq!("ref".parse::<OperatorKind>().unwrap(), OperatorKind::Ref);
        assert_eq!("rotref".parse::<OperatorKind>().unwrap(), OperatorKind::RotRef);
        assert!("att".parse::<OperatorKind>().is_err());
    }
}
