//! Composite objectives `F = f + g` with `g = lambda * ||x||_1`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::dataset::{Dataset, QuadraticFixture};
use crate::error::{check_dim, Error, Result};

/// Smooth convex part `f` of a composite objective.
pub trait SmoothLoss: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Writes `grad f(x)` into `out`.
    fn gradient(&self, x: &[f64], out: &mut [f64]);

    /// `f(x)` and `grad f(x)` together; implementations may share work.
    fn value_and_gradient(&self, x: &[f64], out: &mut [f64]) -> f64 {
        self.gradient(x, out);
        self.value(x)
    }

    /// Upper bound on the Lipschitz constant of the gradient, if cheap to get.
    fn lipschitz_bound(&self) -> Option<f64> {
        None
    }
}

/// `log(1 + exp(z))` without overflow.
#[inline]
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `1 / (1 + exp(-z))` evaluated on the stable branch.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Average logistic loss `(1/m) sum log(1 + exp(-y_i w^T x_i))`.
#[derive(Debug, Clone)]
pub struct LogisticLoss {
    data: Arc<Dataset>,
}

impl LogisticLoss {
    pub fn new(data: Arc<Dataset>) -> Self {
        LogisticLoss { data }
    }

    pub fn dataset(&self) -> &Dataset {
        &self.data
    }
}

pub fn logistic_value(data: &Dataset, w: &[f64]) -> Result<f64> {
    check_dim(data.n_features(), w.len())?;
    Ok(LogisticLoss::value_of(data, w))
}

pub fn logistic_gradient(data: &Dataset, w: &[f64]) -> Result<Vec<f64>> {
    check_dim(data.n_features(), w.len())?;
    let mut g = vec![0.0; w.len()];
    LogisticLoss::value_grad_of(data, w, &mut g);
    Ok(g)
}

impl LogisticLoss {
    fn value_of(data: &Dataset, w: &[f64]) -> f64 {
        let dots = data.row_dots(w);
        let total: f64 = dots
            .iter()
            .zip(data.labels())
            .map(|(d, y)| softplus(-y * d))
            .sum();
        total / data.n_points() as f64
    }

    fn value_grad_of(data: &Dataset, w: &[f64], out: &mut [f64]) -> f64 {
        out.iter_mut().for_each(|g| *g = 0.0);
        let m = data.n_points() as f64;
        let mut total = 0.0;
        for (i, (idx, val)) in data.rows().enumerate() {
            let y = data.labels()[i];
            let d: f64 = idx.iter().zip(val).map(|(&j, &v)| v * w[j]).sum();
            let z = -y * d;
            total += softplus(z);
            let coef = -y * sigmoid(z) / m;
            for (&j, &v) in idx.iter().zip(val) {
                out[j] += coef * v;
            }
        }
        total / m
    }
}

impl SmoothLoss for LogisticLoss {
    fn dim(&self) -> usize {
        self.data.n_features()
    }

    fn value(&self, x: &[f64]) -> f64 {
        Self::value_of(&self.data, x)
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        Self::value_grad_of(&self.data, x, out);
    }

    fn value_and_gradient(&self, x: &[f64], out: &mut [f64]) -> f64 {
        Self::value_grad_of(&self.data, x, out)
    }

    /// `lambda_max(X^T X) / (4 m)`, from a dense eigensolve when the feature
    /// count is small and from row norms otherwise.
    fn lipschitz_bound(&self) -> Option<f64> {
        let n = self.data.n_features();
        if n <= 1000 {
            let g = self.data.gram_over_m();
            Some(g.symmetric_eigenvalues().max() / 4.0)
        } else {
            let frob: f64 = self
                .data
                .rows()
                .map(|(_, v)| v.iter().map(|x| x * x).sum::<f64>())
                .sum();
            Some(frob / (4.0 * self.data.n_points() as f64))
        }
    }
}

/// `f(x) = x^T A x / 2 - b^T x` with dense symmetric `A`.
#[derive(Debug, Clone)]
pub struct QuadraticLoss {
    matrix: DMatrix<f64>,
    b: Vec<f64>,
    lipschitz: f64,
}

impl QuadraticLoss {
    pub fn new(matrix: DMatrix<f64>, b: Vec<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::invalid("quadratic matrix must be square"));
        }
        check_dim(matrix.nrows(), b.len())?;
        let lipschitz = matrix.clone().symmetric_eigenvalues().max();
        Ok(QuadraticLoss { matrix, b, lipschitz })
    }

    pub fn from_fixture(q: &QuadraticFixture) -> Self {
        QuadraticLoss {
            matrix: q.matrix.clone(),
            b: q.b.clone(),
            lipschitz: q.lipschitz(),
        }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    fn ax(&self, x: &[f64]) -> DVector<f64> {
        &self.matrix * DVector::from_column_slice(x)
    }
}

impl SmoothLoss for QuadraticLoss {
    fn dim(&self) -> usize {
        self.b.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let ax = self.ax(x);
        x.iter()
            .zip(ax.iter())
            .zip(&self.b)
            .map(|((xi, ai), bi)| 0.5 * xi * ai - bi * xi)
            .sum()
    }

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let ax = self.ax(x);
        for ((o, a), b) in out.iter_mut().zip(ax.iter()).zip(&self.b) {
            *o = a - b;
        }
    }

    fn value_and_gradient(&self, x: &[f64], out: &mut [f64]) -> f64 {
        let ax = self.ax(x);
        let mut v = 0.0;
        for i in 0..x.len() {
            out[i] = ax[i] - self.b[i];
            v += 0.5 * x[i] * ax[i] - self.b[i] * x[i];
        }
        v
    }

    fn lipschitz_bound(&self) -> Option<f64> {
        Some(self.lipschitz)
    }
}

/// `F(x) = f(x) + lambda * ||x||_1`.
#[derive(Clone)]
pub struct CompositeProblem {
    smooth: Arc<dyn SmoothLoss>,
    lambda: f64,
}

impl std::fmt::Debug for CompositeProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CompositeProblem")
            .field("dim", &self.dim())
            .field("lambda", &self.lambda)
            .finish()
    }
}

impl CompositeProblem {
    pub fn new(smooth: Arc<dyn SmoothLoss>, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be >= 0, got {lambda}")));
        }
        Ok(CompositeProblem { smooth, lambda })
    }

    pub fn logistic(data: Arc<Dataset>, lambda: f64) -> Result<Self> {
        Self::new(Arc::new(LogisticLoss::new(data)), lambda)
    }

    pub fn quadratic(q: &QuadraticFixture, lambda: f64) -> Result<Self> {
        Self::new(Arc::new(QuadraticLoss::from_fixture(q)), lambda)
    }

    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn smooth(&self) -> &dyn SmoothLoss {
        self.smooth.as_ref()
    }

    pub fn f(&self, x: &[f64]) -> f64 {
        self.smooth.value(x)
    }

    pub fn f_and_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        self.smooth.value_and_gradient(x, grad)
    }

    pub fn g(&self, x: &[f64]) -> f64 {
        l1_value(x, self.lambda)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.f(x) + self.g(x)
    }

    /// Infinity norm of the minimum-norm subgradient at `x`, given `grad f(x)`.
    pub fn subgrad_inf(&self, x: &[f64], grad: &[f64]) -> f64 {
        x.iter()
            .zip(grad)
            .map(|(&w, &g)| min_norm_component(g, w, self.lambda).abs())
            .fold(0.0, f64::max)
    }
}

pub fn l1_value(w: &[f64], lambda: f64) -> f64 {
    lambda * w.iter().map(|v| v.abs()).sum::<f64>()
}

/// `sign(v) * max(|v| - tau, 0)`.
#[inline]
pub fn soft_threshold(v: f64, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

/// Checked form of [`soft_threshold`].
pub fn try_soft_threshold(v: f64, tau: f64) -> Result<f64> {
    if tau < 0.0 || tau.is_nan() {
        return Err(Error::invalid(format!("threshold must be >= 0, got {tau}")));
    }
    Ok(soft_threshold(v, tau))
}

/// `prox_g^mu(v)` for `g = lambda ||.||_1`: componentwise soft thresholding at `mu * lambda`.
pub fn prox_l1_scaled_identity(v: &[f64], mu: f64, lambda: f64) -> Result<Vec<f64>> {
    if !(mu > 0.0) {
        return Err(Error::invalid(format!("prox step must be > 0, got {mu}")));
    }
    let tau = mu * lambda;
    Ok(v.iter().map(|&x| soft_threshold(x, tau)).collect())
}

#[inline]
pub(crate) fn min_norm_component(g: f64, w: f64, lambda: f64) -> f64 {
    if w > 0.0 {
        g + lambda
    } else if w < 0.0 {
        g - lambda
    } else {
        soft_threshold(g, lambda)
    }
}

/// Minimum-norm element of `grad + lambda * d||w||_1`.
pub fn min_norm_subgradient(grad: &[f64], w: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_dim(w.len(), grad.len())?;
    Ok(grad
        .iter()
        .zip(w)
        .map(|(&g, &x)| min_norm_component(g, x, lambda))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Dataset;

    fn one_point(x: f64, y: f64) -> Dataset {
        Dataset::from_rows(1, vec![vec![(0, x)]], vec![y]).unwrap()
    }

    #[test]
    fn logistic_value_at_zero_is_log2() {
        let d = crate::dataset::synthesize_logistic(30, 5, 0.5, 1).unwrap();
        let v = logistic_value(&d, &[0.0; 5]).unwrap();
        assert!((v - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn logistic_value_single_point() {
        let v = logistic_value(&one_point(1.0, 1.0), &[1.0]).unwrap();
        assert!((v - 0.313_261_687_518_222_8).abs() < 1e-12);
        let v = logistic_value(&one_point(1.0, -1.0), &[1.0]).unwrap();
        assert!((v - 1.313_261_687_518_222_8).abs() < 1e-12);
    }

    #[test]
    fn logistic_value_is_stable_for_large_margins() {
        let v = logistic_value(&one_point(1.0, -1.0), &[800.0]).unwrap();
        assert!((v - 800.0).abs() < 1e-9);
        let v = logistic_value(&one_point(1.0, 1.0), &[800.0]).unwrap();
        assert!(v >= 0.0 && v < 1e-300);
    }

    #[test]
    fn logistic_gradient_examples() {
        assert_eq!(logistic_gradient(&one_point(1.0, 1.0), &[0.0]).unwrap(), vec![-0.5]);
        assert_eq!(logistic_gradient(&one_point(2.0, -1.0), &[0.0]).unwrap(), vec![1.0]);
        let d = Dataset::from_rows(2, vec![vec![(0, 1.0), (1, 2.0)]; 2], vec![1.0, -1.0]).unwrap();
        assert_eq!(logistic_gradient(&d, &[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(logistic_gradient(&d, &[0.0]).is_err());
    }

    #[test]
    fn l1_examples() {
        assert_eq!(l1_value(&[0.0, 0.0], 3.0), 0.0);
        assert_eq!(l1_value(&[1.0, -2.0], 0.5), 1.5);
        assert_eq!(l1_value(&[1.0, -2.0], 0.0), 0.0);
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(soft_threshold(0.0, 1.0), 0.0);
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-0.4, 1.0), 0.0);
        assert!(try_soft_threshold(1.0, -0.1).is_err());
    }

    #[test]
    fn prox_examples() {
        let v = [0.3, -1.7, 4.0];
        assert_eq!(prox_l1_scaled_identity(&v, 0.7, 0.0).unwrap(), v.to_vec());
        assert_eq!(prox_l1_scaled_identity(&[2.0, -2.0], 1.0, 1.0).unwrap(), vec![1.0, -1.0]);
        assert_eq!(prox_l1_scaled_identity(&[0.3], 2.0, 0.5).unwrap(), vec![0.0]);
        assert!(prox_l1_scaled_identity(&v, 0.0, 1.0).is_err());
    }

    #[test]
    fn min_norm_subgradient_examples() {
        assert_eq!(min_norm_subgradient(&[0.3], &[0.0], 1.0).unwrap(), vec![0.0]);
        assert_eq!(min_norm_subgradient(&[1.5], &[0.0], 1.0).unwrap(), vec![0.5]);
        assert_eq!(min_norm_subgradient(&[0.3], &[2.0], 1.0).unwrap(), vec![1.3]);
        assert_eq!(min_norm_subgradient(&[0.3], &[-2.0], 1.0).unwrap(), vec![0.3 - 1.0]);
        assert!(min_norm_subgradient(&[0.3], &[0.0, 1.0], 1.0).is_err());
    }

    #[test]
    fn quadratic_gradient_matches_formula() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let q = QuadraticLoss::new(a, vec![1.0, -1.0]).unwrap();
        let mut g = [0.0; 2];
        let v = q.value_and_gradient(&[1.0, 1.0], &mut g);
        assert_eq!(g, [2.0, 5.0]);
        assert_eq!(v, 3.5);
    }

    #[test]
    fn negative_lambda_rejected() {
        let d = Arc::new(one_point(1.0, 1.0));
        assert!(CompositeProblem::logistic(d, -1.0).is_err());
    }
}
