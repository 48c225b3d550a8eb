//! Geometry of the pseudo-hyperboloid of signature `(p, q)`.
//!
//! Points live in `R^{p,q}` with coordinates ordered space-first: indices
//! `0..p` are space-like and `p..p+q` are time-like. The bilinear form is
//!
//! ```text
//! <x, y>_q = sum_{i<p} x_i y_i - sum_{j>=p} x_j y_j
//! ```
//!
//! and the manifold is the level set `<x, x>_q = -alpha^2`.
//!
//! Entities are never optimized on the manifold directly. They are stored as
//! unconstrained pairs `(s, t)` with `t != 0` and mapped onto the manifold by
//! [`phi`]. Distances are the two-leg "Manhattan-like" construction: a great
//! circle arc inside the time sphere followed by a hyperbolic leg along the
//! time ray, minimized over both orders.
//!
//! Every kernel that takes part in training has a hand-written backward pass
//! (vector-Jacobian product) next to it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Maximum `|<x,x>_q + alpha^2|` accepted for a manifold point.
pub const TOL_MANIFOLD: f64 = 1e-9;

/// Minimum time-part norm of a free parameter before the guard kicks in.
pub const EPS_TIME: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: expected length {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid signature: {0}")]
    Signature(String),
    #[error("degenerate point: time part has zero norm")]
    Degenerate,
    #[error("point is off the manifold (defect {0:e})")]
    OffManifold(f64),
    #[error("precondition violated: {0}")]
    Precondition(String),
}

/// The `(p, q, alpha)` triple: space dimensions, time dimensions and
/// curvature radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Signature {
    p: usize,
    q: usize,
    alpha: f64,
}

impl Signature {
    pub fn new(p: usize, q: usize, alpha: f64) -> Result<Self, GeometryError> {
        if q < 1 {
            return Err(GeometryError::Signature(format!(
                "need at least one time dimension, got q={q}"
            )));
        }
        if q > p {
            return Err(GeometryError::Signature(format!(
                "time dimensions must not exceed space dimensions (p={p}, q={q})"
            )));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(GeometryError::Signature(format!(
                "curvature radius must be positive and finite, got {alpha}"
            )));
        }
        Ok(Self { p, q, alpha })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Ambient dimension `p + q`.
    pub fn dim(&self) -> usize {
        self.p + self.q
    }

    /// Relation operators pair coordinates, so both blocks must be even.
    pub fn require_even(&self) -> Result<(), GeometryError> {
        if !self.p.is_multiple_of(2) || !self.q.is_multiple_of(2) {
            return Err(GeometryError::Signature(format!(
                "relation operators need even p and q, got p={}, q={}",
                self.p, self.q
            )));
        }
        Ok(())
    }

    /// Splits an ambient vector into its space and time parts.
    pub fn split<'a>(&self, x: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        x.split_at(self.p)
    }

    fn check_len(&self, x: &[f64]) -> Result<(), GeometryError> {
        if x.len() != self.dim() {
            return Err(GeometryError::Dimension {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

/// A vector of `R^{p,q}` known to satisfy `<x,x>_q = -alpha^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint(Vec<f64>);

impl ManifoldPoint {
    pub fn new(coords: Vec<f64>, sig: &Signature) -> Result<Self, GeometryError> {
        sig.check_len(&coords)?;
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::Precondition("non-finite coordinate".into()));
        }
        let defect = manifold_defect(&coords, sig);
        if defect > TOL_MANIFOLD {
            return Err(GeometryError::OffManifold(defect));
        }
        Ok(Self(coords))
    }

    pub(crate) fn from_vec_unchecked(coords: Vec<f64>) -> Self {
        Self(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for ManifoldPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Unconstrained entity parameter `(s, t)` in `R^p x R^q_*`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreeParam {
    pub space: Vec<f64>,
    pub time: Vec<f64>,
}

impl FreeParam {
    pub fn to_manifold(&self, sig: &Signature) -> ManifoldPoint {
        phi(&self.space, &self.time, sig)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn qdot_unchecked(x: &[f64], y: &[f64], p: usize) -> f64 {
    dot(&x[..p], &y[..p]) - dot(&x[p..], &y[p..])
}

/// The indefinite bilinear form `<x, y>_q`.
pub fn qdot(x: &[f64], y: &[f64], sig: &Signature) -> Result<f64, GeometryError> {
    sig.check_len(x)?;
    sig.check_len(y)?;
    Ok(qdot_unchecked(x, y, sig.p))
}

/// `|<x,x>_q + alpha^2|`, zero exactly on the manifold.
///
/// Panics if `x` does not have length `p + q`.
pub fn manifold_defect(x: &[f64], sig: &Signature) -> f64 {
    assert_eq!(x.len(), sig.dim(), "manifold_defect: wrong vector length");
    (qdot_unchecked(x, x, sig.p) + sig.alpha * sig.alpha).abs()
}

/// `psi(x) = (s, alpha * t / |t|)`: maps an ambient point to `R^p x S^q_alpha`.
pub fn psi(x: &[f64], sig: &Signature) -> Result<(Vec<f64>, Vec<f64>), GeometryError> {
    sig.check_len(x)?;
    let (s, t) = sig.split(x);
    let n = norm(t);
    if n == 0.0 {
        return Err(GeometryError::Degenerate);
    }
    let scale = sig.alpha / n;
    Ok((s.to_vec(), t.iter().map(|v| v * scale).collect()))
}

/// Inverse of [`psi`]: `(v, u) -> (v, sqrt(alpha^2 + |v|^2) / alpha * u)`.
pub fn psi_inv(
    space: &[f64],
    sphere_time: &[f64],
    sig: &Signature,
) -> Result<ManifoldPoint, GeometryError> {
    if space.len() != sig.p {
        return Err(GeometryError::Dimension {
            expected: sig.p,
            got: space.len(),
        });
    }
    if sphere_time.len() != sig.q {
        return Err(GeometryError::Dimension {
            expected: sig.q,
            got: sphere_time.len(),
        });
    }
    let un = norm(sphere_time);
    if (un - sig.alpha).abs() > TOL_MANIFOLD * sig.alpha.max(1.0) {
        return Err(GeometryError::Precondition(format!(
            "time part must lie on the sphere of radius {}, has norm {un}",
            sig.alpha
        )));
    }
    let scale = (sig.alpha * sig.alpha + dot(space, space)).sqrt() / sig.alpha;
    let mut out = Vec::with_capacity(sig.dim());
    out.extend_from_slice(space);
    out.extend(sphere_time.iter().map(|u| u * scale));
    Ok(ManifoldPoint(out))
}

/// Returns the time part with the `EPS_TIME` guard applied.
pub(crate) fn guarded_time(time: &[f64]) -> std::borrow::Cow<'_, [f64]> {
    if norm(time) < EPS_TIME {
        let mut t = time.to_vec();
        t[0] += EPS_TIME;
        std::borrow::Cow::Owned(t)
    } else {
        std::borrow::Cow::Borrowed(time)
    }
}

/// Applies the time-norm guard in place. Returns true if it fired.
pub fn enforce_time_guard(time: &mut [f64]) -> bool {
    if norm(time) < EPS_TIME {
        time[0] += EPS_TIME;
        true
    } else {
        false
    }
}

pub(crate) fn phi_into(space: &[f64], time: &[f64], alpha: f64, out: &mut Vec<f64>) {
    let time = guarded_time(time);
    let n = norm(&time);
    let r = (alpha * alpha + dot(space, space)).sqrt();
    out.clear();
    out.extend_from_slice(space);
    out.extend(time.iter().map(|t| r * t / n));
}

/// The double projection `psi^{-1} o psi` from free parameters onto the
/// manifold: `(s, t) -> (s, sqrt(alpha^2 + |s|^2) * t / |t|)`.
///
/// A time part with norm below [`EPS_TIME`] is nudged along its first axis
/// before mapping.
pub fn phi(space: &[f64], time: &[f64], sig: &Signature) -> ManifoldPoint {
    assert_eq!(space.len(), sig.p, "phi: space part length");
    assert_eq!(time.len(), sig.q, "phi: time part length");
    let mut out = Vec::with_capacity(sig.dim());
    phi_into(space, time, sig.alpha, &mut out);
    ManifoldPoint(out)
}

/// Vector-Jacobian product of [`phi`]. Given the gradient `g` with respect to
/// the output point, returns the gradients for `(space, time)`.
pub fn phi_backward(
    space: &[f64],
    time: &[f64],
    sig: &Signature,
    g: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let time = guarded_time(time);
    let n = norm(&time);
    let r = (sig.alpha * sig.alpha + dot(space, space)).sqrt();
    let (g_s, g_t) = g.split_at(sig.p);
    // u = t / |t|
    let gu: f64 = g_t.iter().zip(time.iter()).map(|(a, b)| a * b / n).sum();
    let grad_space = g_s
        .iter()
        .zip(space)
        .map(|(gs, s)| gs + gu * s / r)
        .collect();
    let grad_time = g_t
        .iter()
        .zip(time.iter())
        .map(|(gt, t)| r / n * (gt - gu * t / n))
        .collect();
    (grad_space, grad_time)
}

fn conic_radius(space: &[f64], alpha: f64) -> f64 {
    (dot(space, space) + alpha * alpha).sqrt()
}

/// Projection of `y` onto the circular conic section through `x`: keeps the
/// space part of `x` and rescales the time direction of `y` to norm
/// `sqrt(|x_p|^2 + alpha^2)`, so the result is again on the manifold.
pub fn project_conic(x: &[f64], y: &[f64], sig: &Signature) -> ManifoldPoint {
    let mut out = Vec::with_capacity(sig.dim());
    project_conic_into(x, y, sig, &mut out);
    ManifoldPoint(out)
}

fn project_conic_into(x: &[f64], y: &[f64], sig: &Signature, out: &mut Vec<f64>) {
    let (xp, _) = sig.split(x);
    let (_, yq) = sig.split(y);
    let scale = conic_radius(xp, sig.alpha) / norm(yq);
    out.clear();
    out.extend_from_slice(xp);
    out.extend(yq.iter().map(|v| v * scale));
}

/// Angle between two nonzero vectors, via `2 atan2(|u^ - v^|, |u^ + v^|)`.
/// Accurate near 0 and pi where `acos` of the cosine is not.
fn angle_between(u: &[f64], v: &[f64]) -> f64 {
    let nu = norm(u);
    let nv = norm(v);
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (a, b) = (a / nu, b / nv);
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}

/// Gradient of [`angle_between`]. Zero at parallel and antiparallel pairs.
fn angle_between_grad(u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nu = norm(u);
    let nv = norm(v);
    let uh: Vec<f64> = u.iter().map(|a| a / nu).collect();
    let vh: Vec<f64> = v.iter().map(|b| b / nv).collect();
    let c = dot(&uh, &vh);
    let wu: Vec<f64> = vh.iter().zip(&uh).map(|(b, a)| b - c * a).collect();
    let wv: Vec<f64> = uh.iter().zip(&vh).map(|(a, b)| a - c * b).collect();
    let s = norm(&wu);
    if s <= f64::MIN_POSITIVE {
        return (vec![0.0; u.len()], vec![0.0; v.len()]);
    }
    (
        wu.iter().map(|w| -w / (s * nu)).collect(),
        wv.iter().map(|w| -w / (s * nv)).collect(),
    )
}

/// Great-circle distance inside the time sphere of radius
/// `r = sqrt(|a_p|^2 + alpha^2)`. Both points must share their space part.
pub fn dist_sphere(a: &[f64], b: &[f64], sig: &Signature) -> Result<f64, GeometryError> {
    sig.check_len(a)?;
    sig.check_len(b)?;
    let (ap, aq) = sig.split(a);
    let (bp, bq) = sig.split(b);
    let gap = ap
        .iter()
        .zip(bp)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max);
    if gap > TOL_MANIFOLD * (1.0 + norm(ap)) {
        return Err(GeometryError::Precondition(format!(
            "spherical leg needs identical space parts (differ by {gap:e})"
        )));
    }
    Ok(conic_radius(ap, sig.alpha) * angle_between(aq, bq))
}

/// `acosh(1 + e)` for `e >= 0`, evaluated without forming `1 + e`.
fn acosh1p(e: f64) -> f64 {
    (e + (e * (2.0 + e)).sqrt()).ln_1p()
}

/// Half the squared pseudo-norm of `a - b`, divided by `alpha^2`. For two
/// manifold points this equals `-<a,b>_q / alpha^2 - 1`.
fn hyper_excess(a: &[f64], b: &[f64], sig: &Signature) -> f64 {
    let p = sig.p;
    let mut acc = 0.0;
    for i in 0..a.len() {
        let d = a[i] - b[i];
        if i < p {
            acc += d * d;
        } else {
            acc -= d * d;
        }
    }
    acc / (2.0 * sig.alpha * sig.alpha)
}

/// The raw argument `-<a,b>_q / alpha^2` of the hyperbolic leg, before any
/// clamping.
pub fn hyper_cosh_argument(a: &[f64], b: &[f64], sig: &Signature) -> f64 {
    -qdot_unchecked(a, b, sig.p) / (sig.alpha * sig.alpha)
}

/// Lorentz geodesic distance `alpha * acosh(-<a,b>_q / alpha^2)` between two
/// manifold points with parallel time parts. The argument is clamped to
/// `[1, inf)`.
pub fn dist_hyper(a: &[f64], b: &[f64], sig: &Signature) -> f64 {
    sig.alpha * acosh1p(hyper_excess(a, b, sig).max(0.0))
}

/// Which ordering won the minimum in [`dist_manhattan`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Spherical leg at `x`, then hyperbolic leg to `y`.
    XToY,
    /// Spherical leg at `y`, then hyperbolic leg to `x`.
    YToX,
}

fn leg(x: &[f64], y: &[f64], sig: &Signature, scratch: &mut Vec<f64>) -> f64 {
    let (xp, xq) = sig.split(x);
    let (_, yq) = sig.split(y);
    let sphere = conic_radius(xp, sig.alpha) * angle_between(xq, yq);
    project_conic_into(x, y, sig, scratch);
    sphere + dist_hyper(scratch, y, sig)
}

/// Two-leg distance on the pseudo-hyperboloid, minimized over both orders.
/// Symmetric by construction; zero only for identical points.
pub fn dist_manhattan(x: &[f64], y: &[f64], sig: &Signature) -> f64 {
    let mut scratch = Vec::with_capacity(sig.dim());
    let xy = leg(x, y, sig, &mut scratch);
    let yx = leg(y, x, sig, &mut scratch);
    xy.min(yx)
}

/// Value and gradient of [`dist_manhattan`].
#[derive(Debug, Clone)]
pub struct DistanceGrad {
    pub value: f64,
    pub grad_x: Vec<f64>,
    pub grad_y: Vec<f64>,
    pub branch: Branch,
}

/// Backward pass of one leg `x -> y`; accumulates into `gx`, `gy`.
fn leg_backward(x: &[f64], y: &[f64], sig: &Signature, gx: &mut [f64], gy: &mut [f64]) {
    let p = sig.p;
    let alpha = sig.alpha;
    let (xp, xq) = sig.split(x);
    let (_, yq) = sig.split(y);
    let rx = conic_radius(xp, alpha);

    // spherical leg: rx * angle(xq, yq)
    let ang = angle_between(xq, yq);
    for (g, v) in gx[..p].iter_mut().zip(xp) {
        *g += ang * v / rx;
    }
    let (ga_x, ga_y) = angle_between_grad(xq, yq);
    for (g, v) in gx[p..].iter_mut().zip(&ga_x) {
        *g += rx * v;
    }
    for (g, v) in gy[p..].iter_mut().zip(&ga_y) {
        *g += rx * v;
    }

    // hyperbolic leg between a = project_conic(x, y) and y
    let mut a = Vec::with_capacity(sig.dim());
    project_conic_into(x, y, sig, &mut a);
    let e = hyper_excess(&a, y, sig);
    if e <= 0.0 {
        return;
    }
    let k = alpha / (e * (2.0 + e)).sqrt() / (alpha * alpha);
    // d e / d a = J (a - y) / alpha^2, d e / d y = -J (a - y) / alpha^2
    let mut g_a = vec![0.0; sig.dim()];
    for i in 0..sig.dim() {
        let j = if i < p { 1.0 } else { -1.0 };
        let v = k * j * (a[i] - y[i]);
        g_a[i] = v;
        gy[i] -= v;
    }
    // back through the projection: a = (x_p, rx * yq / |yq|)
    let nyq = norm(yq);
    let (ga_p, ga_q) = g_a.split_at(p);
    let ga_dot_u: f64 = ga_q.iter().zip(yq).map(|(g, v)| g * v / nyq).sum();
    for i in 0..p {
        gx[i] += ga_p[i] + ga_dot_u * xp[i] / rx;
    }
    for (j, g) in gy[p..].iter_mut().enumerate() {
        let u = yq[j] / nyq;
        *g += rx / nyq * (ga_q[j] - ga_dot_u * u);
    }
}

/// [`dist_manhattan`] together with its gradient. The gradient follows the
/// branch that attains the minimum; exact ties take [`Branch::XToY`].
pub fn dist_manhattan_backward(x: &[f64], y: &[f64], sig: &Signature) -> DistanceGrad {
    let mut scratch = Vec::with_capacity(sig.dim());
    let xy = leg(x, y, sig, &mut scratch);
    let yx = leg(y, x, sig, &mut scratch);
    let mut grad_x = vec![0.0; sig.dim()];
    let mut grad_y = vec![0.0; sig.dim()];
    if xy <= yx {
        leg_backward(x, y, sig, &mut grad_x, &mut grad_y);
        DistanceGrad {
            value: xy,
            grad_x,
            grad_y,
            branch: Branch::XToY,
        }
    } else {
        leg_backward(y, x, sig, &mut grad_y, &mut grad_x);
        DistanceGrad {
            value: yx,
            grad_x,
            grad_y,
            branch: Branch::YToX,
        }
    }
}
