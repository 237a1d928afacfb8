//! Approximate Hessians for the composite quadratic model
//! `Q_H(u, v) = f(v) + <grad f(v), u - v> + ||u - v||_H^2 / 2 + g(u)`.
//!
//! Every model reduces to a scalar multiple of a [`DiagLowRank`] matrix
//! `delta * I + Q W Q^T`, which is what the coordinate descent subsolver
//! consumes.

use std::borrow::Cow;
use std::collections::VecDeque;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, norm2};

pub const DEFAULT_MEMORY: usize = 10;
pub const DEFAULT_CURVATURE_EPS: f64 = 1e-8;
pub const DEFAULT_DENSE_LIMIT: usize = 500;

/// `delta * I + Q W Q^T` with `Q` of shape `n x p` and symmetric `W` of shape `p x p`.
///
/// `Q`, `W` and the product `Q W` are shared behind `Arc`s so that shifting
/// `delta` (as every backtracking step does) is cheap.
#[derive(Debug, Clone)]
pub struct DiagLowRank {
    n: usize,
    p: usize,
    delta: f64,
    /// Row-major `n x p`.
    q: Arc<[f64]>,
    /// Row-major `p x p`.
    w: Arc<[f64]>,
    /// Row-major `n x p`, equal to `Q W`.
    qw: Arc<[f64]>,
}

impl DiagLowRank {
    pub fn identity(n: usize, delta: f64) -> Self {
        DiagLowRank {
            n,
            p: 0,
            delta,
            q: Arc::from(Vec::new()),
            w: Arc::from(Vec::new()),
            qw: Arc::from(Vec::new()),
        }
    }

    /// Builds the matrix from a row-major `n x p` factor and a `p x p` middle matrix.
    pub fn new(n: usize, delta: f64, q: Vec<f64>, w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            if !q.is_empty() {
                return Err(Error::invalid("factor without middle matrix"));
            }
            return Ok(Self::identity(n, delta));
        }
        let p = (w.len() as f64).sqrt().round() as usize;
        if p * p != w.len() || q.len() != n * p {
            return Err(Error::invalid(format!(
                "inconsistent shapes: n={n}, |Q|={}, |W|={}",
                q.len(),
                w.len()
            )));
        }
        for a in 0..p {
            for b in (a + 1)..p {
                let (x, y) = (w[a * p + b], w[b * p + a]);
                if (x - y).abs() > 1e-12 * (1.0 + x.abs().max(y.abs())) {
                    return Err(Error::invalid("middle matrix is not symmetric"));
                }
            }
        }
        let mut qw = vec![0.0; n * p];
        for i in 0..n {
            let qi = &q[i * p..(i + 1) * p];
            for c in 0..p {
                qw[i * p + c] = (0..p).map(|r| qi[r] * w[r * p + c]).sum();
            }
        }
        Ok(DiagLowRank {
            n,
            p,
            delta,
            q: Arc::from(q),
            w: Arc::from(w),
            qw: Arc::from(qw),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.p
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Same low-rank part with `delta` replaced.
    pub fn with_delta(&self, delta: f64) -> Self {
        DiagLowRank {
            delta,
            ..self.clone()
        }
    }

    /// `self + c * I`.
    pub fn shifted(&self, c: f64) -> Self {
        self.with_delta(self.delta + c)
    }

    #[inline]
    pub fn q_row(&self, j: usize) -> &[f64] {
        &self.q[j * self.p..(j + 1) * self.p]
    }

    #[inline]
    pub fn qw_row(&self, j: usize) -> &[f64] {
        &self.qw[j * self.p..(j + 1) * self.p]
    }

    pub fn middle(&self) -> &[f64] {
        &self.w
    }

    /// True when both matrices share the same low-rank storage and `delta`.
    pub fn same_matrix(&self, other: &DiagLowRank) -> bool {
        self.n == other.n
            && self.p == other.p
            && self.delta == other.delta
            && Arc::ptr_eq(&self.q, &other.q)
            && Arc::ptr_eq(&self.w, &other.w)
    }

    /// `Q^T v`
    pub fn qt_mul(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.p];
        for (j, &vj) in v.iter().enumerate() {
            if vj != 0.0 {
                for (o, &qv) in out.iter_mut().zip(self.q_row(j)) {
                    *o += qv * vj;
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let qtv = self.qt_mul(v);
        (0..self.n)
            .map(|j| self.delta * v[j] + dot(self.qw_row(j), &qtv))
            .collect()
    }

    #[inline]
    pub fn diag(&self, j: usize) -> f64 {
        self.delta + dot(self.q_row(j), self.qw_row(j))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n;
        let mut m = DMatrix::<f64>::identity(n, n) * self.delta;
        for a in 0..n {
            for b in 0..n {
                m[(a, b)] += dot(self.qw_row(a), self.q_row(b));
            }
        }
        m.symmetrize();
        m
    }

    /// Smallest and largest eigenvalue, from the `p x p` projection onto the
    /// range of `Q`. Exact up to rounding when `p < n`.
    pub fn spectrum_bounds(&self) -> (f64, f64) {
        if self.p == 0 {
            return (self.delta, self.delta);
        }
        let p = self.p;
        let mut gram = DMatrix::<f64>::zeros(p, p);
        for j in 0..self.n {
            let row = self.q_row(j);
            for a in 0..p {
                for b in 0..p {
                    gram[(a, b)] += row[a] * row[b];
                }
            }
        }
        let eig = gram.symmetric_eigen();
        let sqrt_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
        let root = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
        let w = DMatrix::from_row_slice(p, p, &self.w);
        let mut core = &root * w * &root;
        core.symmetrize();
        let vals = core.symmetric_eigenvalues();
        let lo = self.delta + vals.min().min(0.0);
        let hi = self.delta + vals.max().max(0.0);
        (lo, hi)
    }
}

trait Symmetrize {
    fn symmetrize(&mut self);
}

impl Symmetrize for DMatrix<f64> {
    fn symmetrize(&mut self) {
        let n = self.nrows();
        for a in 0..n {
            for b in (a + 1)..n {
                let v = 0.5 * (self[(a, b)] + self[(b, a)]);
                self[(a, b)] = v;
                self[(b, a)] = v;
            }
        }
    }
}

/// Ring buffer of L-BFGS correction pairs `(s, y)`.
#[derive(Debug, Clone)]
pub struct CorrectionPairs {
    memory: usize,
    curvature_eps: f64,
    s: VecDeque<Vec<f64>>,
    y: VecDeque<Vec<f64>>,
}

impl CorrectionPairs {
    pub fn new(memory: usize, curvature_eps: f64) -> Self {
        CorrectionPairs {
            memory,
            curvature_eps,
            s: VecDeque::with_capacity(memory),
            y: VecDeque::with_capacity(memory),
        }
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    /// Pairs oldest first.
    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], &[f64])> {
        self.s.iter().zip(&self.y).map(|(s, y)| (s.as_slice(), y.as_slice()))
    }

    /// Stores `(s, y)` when `s^T y > eps * ||s|| ||y||`, evicting the oldest
    /// pair at capacity. Returns whether the pair was accepted.
    pub fn update(&mut self, s: &[f64], y: &[f64]) -> Result<bool> {
        check_dim(s.len(), y.len())?;
        if let Some(first) = self.s.front() {
            check_dim(first.len(), s.len())?;
        }
        if self.memory == 0 {
            return Ok(false);
        }
        let sy = dot(s, y);
        if !(sy > self.curvature_eps * norm2(s) * norm2(y)) {
            return Ok(false);
        }
        if self.s.len() == self.memory {
            self.s.pop_front();
            self.y.pop_front();
        }
        self.s.push_back(s.to_vec());
        self.y.push_back(y.to_vec());
        Ok(true)
    }

    fn drop_oldest(&mut self) {
        self.s.pop_front();
        self.y.pop_front();
    }

    /// Compact L-BFGS matrix `B = delta I - [delta S, Y] M^{-1} [delta S, Y]^T`
    /// with `M = [[delta S^T S, L], [L^T, -D]]`.
    ///
    /// Numerically dependent pairs are discarded oldest first until the middle
    /// matrix inverts and the result is positive definite. With no pairs the
    /// result is the identity.
    pub fn compile(&mut self, n: usize) -> DiagLowRank {
        loop {
            if self.is_empty() {
                return DiagLowRank::identity(n, 1.0);
            }
            match self.try_compile() {
                Some(b) => return b,
                None => {
                    log::debug!("dropping oldest correction pair ({} stored)", self.len());
                    self.drop_oldest();
                }
            }
        }
    }

    fn try_compile(&self) -> Option<DiagLowRank> {
        let k = self.len();
        let n = self.s[0].len();
        let (s_new, y_new) = (&self.s[k - 1], &self.y[k - 1]);
        let delta = dot(y_new, y_new) / dot(s_new, y_new);
        if !(delta.is_finite() && delta > 0.0) {
            return None;
        }
        let p = 2 * k;
        let mut m = DMatrix::<f64>::zeros(p, p);
        for a in 0..k {
            for b in 0..k {
                m[(a, b)] = delta * dot(&self.s[a], &self.s[b]);
                if a > b {
                    let l = dot(&self.s[a], &self.y[b]);
                    m[(a, k + b)] = l;
                    m[(k + b, a)] = l;
                }
            }
            m[(k + a, k + a)] = -dot(&self.s[a], &self.y[a]);
        }
        let inv = m.clone().try_inverse()?;
        let resid = (&m * &inv - DMatrix::<f64>::identity(p, p)).abs().max();
        if !(resid < 1e-6) {
            return None;
        }
        let mut w = vec![0.0; p * p];
        for a in 0..p {
            for b in 0..p {
                w[a * p + b] = -0.5 * (inv[(a, b)] + inv[(b, a)]);
            }
        }
        let mut q = vec![0.0; n * p];
        for j in 0..n {
            for c in 0..k {
                q[j * p + c] = delta * self.s[c][j];
                q[j * p + k + c] = self.y[c][j];
            }
        }
        let b = DiagLowRank::new(n, delta, q, w).ok()?;
        let (lo, _) = b.spectrum_bounds();
        if !(lo > 1e-12 * delta) {
            return None;
        }
        Some(b)
    }
}

/// Approximate Hessian `H_k`.
#[derive(Debug, Clone)]
pub enum HessianModel {
    /// `coef * I`, i.e. `(1/mu) I`.
    ScaledIdentity { n: usize, coef: f64 },
    /// `(1/sigma) * base`.
    ScaledFixed { sigma: f64, base: DiagLowRank },
    /// Compact L-BFGS matrix, possibly with a diagonal shift folded into `delta`.
    LbfgsCompact(DiagLowRank),
}

impl HessianModel {
    pub fn identity(n: usize) -> Self {
        HessianModel::ScaledIdentity { n, coef: 1.0 }
    }

    pub fn dim(&self) -> usize {
        match self {
            HessianModel::ScaledIdentity { n, .. } => *n,
            HessianModel::ScaledFixed { base, .. } => base.dim(),
            HessianModel::LbfgsCompact(b) => b.dim(),
        }
    }

    /// `(scale, B)` with `H = scale * B`.
    pub fn as_scaled_low_rank(&self) -> (f64, Cow<'_, DiagLowRank>) {
        match self {
            HessianModel::ScaledIdentity { n, coef } => (1.0, Cow::Owned(DiagLowRank::identity(*n, *coef))),
            HessianModel::ScaledFixed { sigma, base } => (1.0 / sigma, Cow::Borrowed(base)),
            HessianModel::LbfgsCompact(b) => (1.0, Cow::Borrowed(b)),
        }
    }

    /// `Some(c)` when `H = c I`.
    pub fn isotropic_coef(&self) -> Option<f64> {
        match self {
            HessianModel::ScaledIdentity { coef, .. } => Some(*coef),
            HessianModel::ScaledFixed { sigma, base } if base.rank() == 0 => Some(base.delta() / sigma),
            HessianModel::LbfgsCompact(b) if b.rank() == 0 => Some(b.delta()),
            _ => None,
        }
    }

    /// `(divisor, base)` with `H = base / divisor`, when the model is a pure
    /// scalar multiple of a low-rank matrix.
    fn divisor_form(&self) -> Option<(f64, &DiagLowRank)> {
        match self {
            HessianModel::ScaledFixed { sigma, base } => Some((*sigma, base)),
            HessianModel::LbfgsCompact(b) => Some((1.0, b)),
            HessianModel::ScaledIdentity { .. } => None,
        }
    }

    /// `H / beta`, as used by backtracking on the Hessian itself.
    pub fn inflate(&self, beta: f64) -> Self {
        match self {
            HessianModel::ScaledIdentity { n, coef } => HessianModel::ScaledIdentity { n: *n, coef: coef / beta },
            HessianModel::ScaledFixed { sigma, base } => HessianModel::ScaledFixed {
                sigma: sigma * beta,
                base: base.clone(),
            },
            HessianModel::LbfgsCompact(b) => HessianModel::ScaledFixed {
                sigma: beta,
                base: b.clone(),
            },
        }
    }

    pub fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), v.len())?;
        Ok(match self {
            HessianModel::ScaledIdentity { coef, .. } => v.iter().map(|x| coef * x).collect(),
            HessianModel::ScaledFixed { sigma, base } => base.apply(v).into_iter().map(|x| x / sigma).collect(),
            HessianModel::LbfgsCompact(b) => b.apply(v),
        })
    }

    pub fn diag_element(&self, j: usize) -> Result<f64> {
        if j >= self.dim() {
            return Err(Error::invalid(format!("index {j} out of range for dimension {}", self.dim())));
        }
        Ok(match self {
            HessianModel::ScaledIdentity { coef, .. } => *coef,
            HessianModel::ScaledFixed { sigma, base } => base.diag(j) / sigma,
            HessianModel::LbfgsCompact(b) => b.diag(j),
        })
    }

    /// `v^T H v`
    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        Ok(dot(v, &self.apply(v)?))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let (scale, b) = self.as_scaled_low_rank();
        b.to_dense() * scale
    }

    /// Exact extreme eigenvalues through a dense eigensolve.
    pub fn dense_extreme_eigenvalues(&self) -> (f64, f64) {
        let vals = self.to_dense().symmetric_eigenvalues();
        (vals.min(), vals.max())
    }
}

/// `f_v + <grad_v, u - v> + ||u - v||_H^2 / 2 + g(u)`
pub fn model_value(h: &HessianModel, u: &[f64], v: &[f64], f_v: f64, grad_v: &[f64], g_of_u: f64) -> Result<f64> {
    check_dim(h.dim(), u.len())?;
    check_dim(h.dim(), v.len())?;
    check_dim(h.dim(), grad_v.len())?;
    let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    Ok(f_v + dot(grad_v, &d) + 0.5 * h.quad_form(&d)? + g_of_u)
}

fn power_iteration(n: usize, iterations: usize, rng: &mut ChaCha8Rng, mut op: impl FnMut(&[f64]) -> Vec<f64>) -> f64 {
    let mut x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let nx = norm2(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut rayleigh = 0.0;
    for _ in 0..iterations.max(1) {
        let y = op(&x);
        rayleigh = dot(&x, &y);
        let ny = norm2(&y);
        if ny == 0.0 || !ny.is_finite() {
            break;
        }
        x = y.into_iter().map(|v| v / ny).collect();
    }
    rayleigh
}

/// Power-iteration estimates `(m_est, M_est)` of the extreme eigenvalues.
///
/// `M_est` is the Rayleigh quotient of power iteration on `H`; `m_est` comes
/// from power iteration on `M_est I - H`, so no solves are needed.
pub fn estimate_extreme_eigenvalues(h: &HessianModel, iterations: usize, seed: u64) -> (f64, f64) {
    if let Some(c) = h.isotropic_coef() {
        return (c, c);
    }
    let n = h.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let apply = |x: &[f64]| h.apply(x).expect("dimension checked");
    let upper = power_iteration(n, iterations, &mut rng, apply);
    let shifted = power_iteration(n, iterations, &mut rng, |x| {
        let hx = apply(x);
        x.iter().zip(hx).map(|(a, b)| upper * a - b).collect()
    });
    let lower = (upper - shifted).min(upper);
    (lower, upper)
}

/// Largest `sigma_new` with `sigma_new * H_new <= sigma_prev * H_prev` in the
/// Loewner order.
///
/// Scalar multiples of a shared base are resolved exactly; anything else goes
/// through a dense generalized eigenproblem, refused above `dense_limit`.
pub fn enforce_domination(h_new: &HessianModel, sigma_prev: f64, h_prev: &HessianModel, dense_limit: usize) -> Result<f64> {
    check_dim(h_prev.dim(), h_new.dim())?;
    if let (HessianModel::ScaledIdentity { coef: cn, .. }, HessianModel::ScaledIdentity { coef: cp, .. }) = (h_new, h_prev) {
        return Ok(sigma_prev * (cp / cn));
    }
    if let (Some((div_new, b_new)), Some((div_prev, b_prev))) = (h_new.divisor_form(), h_prev.divisor_form()) {
        if b_new.same_matrix(b_prev) {
            return Ok(div_new * (sigma_prev / div_prev));
        }
    }
    let n = h_new.dim();
    if n > dense_limit {
        return Err(Error::DenseLimit { n, limit: dense_limit });
    }
    let chol = h_new
        .to_dense()
        .cholesky()
        .ok_or_else(|| Error::Numerical("new Hessian is not positive definite".into()))?;
    let l = chol.l();
    let prev = h_prev.to_dense();
    // C = L^{-1} H_prev L^{-T}
    let left = l
        .solve_lower_triangular(&prev)
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    let mut c = l
        .solve_lower_triangular(&left.transpose())
        .ok_or_else(|| Error::Numerical("triangular solve failed".into()))?;
    c.symmetrize();
    let lam = c.symmetric_eigenvalues().min();
    if !(lam > 0.0) {
        return Err(Error::Numerical("previous Hessian is not positive definite".into()));
    }
    Ok(sigma_prev * lam)
}

/// Dense `n x n` helper for tests and diagnostics.
pub fn dense_from_rows(rows: &[&[f64]]) -> DMatrix<f64> {
    let n = rows.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// Dense `diag(values)` expressed as `min(values) I + Q W Q^T`.
pub fn diagonal_model(values: &[f64]) -> Result<HessianModel> {
    let n = values.len();
    let base = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let cols: Vec<usize> = (0..n).filter(|&j| values[j] > base).collect();
    let p = cols.len();
    let mut q = vec![0.0; n * p];
    let mut w = vec![0.0; p * p];
    for (c, &j) in cols.iter().enumerate() {
        q[j * p + c] = 1.0;
        w[c * p + c] = values[j] - base;
    }
    Ok(HessianModel::LbfgsCompact(DiagLowRank::new(n, base, q, w)?))
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
