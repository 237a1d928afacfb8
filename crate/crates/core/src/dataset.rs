//! Sparse binary classification data and synthetic test fixtures.
//!
//! Rows are stored in compressed sparse row form. Labels are always `+1.0` or
//! `-1.0` after ingestion.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{io_at, Error, Result};

/// Immutable design matrix plus labels in `{-1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n_features: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    labels: Vec<f64>,
}

/// Summary counts of a [`Dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetStats {
    pub n_features: usize,
    pub n_points: usize,
    pub nnz: usize,
    pub n_positive: usize,
    pub n_negative: usize,
}

impl Dataset {
    /// Builds a dataset from per-row `(index, value)` lists with 0-based indices.
    pub fn from_rows(n_features: usize, rows: Vec<Vec<(usize, f64)>>, labels: Vec<f64>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("dataset has no points"));
        }
        if rows.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(Error::invalid(format!("label {bad} is not +1 or -1")));
        }
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (i, row) in rows.iter().enumerate() {
            let mut last: Option<usize> = None;
            for &(j, v) in row {
                if j >= n_features {
                    return Err(Error::invalid(format!(
                        "row {i}: feature index {j} out of range for {n_features} features"
                    )));
                }
                if last.is_some_and(|l| j <= l) {
                    return Err(Error::invalid(format!("row {i}: indices not strictly increasing")));
                }
                last = Some(j);
                indices.push(j);
                values.push(v);
            }
            indptr.push(indices.len());
        }
        Ok(Dataset {
            n_features,
            indptr,
            indices,
            values,
            labels,
        })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_points(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Sparse row `i` as parallel index and value slices.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn rows(&self) -> impl Iterator<Item = (&[usize], &[f64])> + '_ {
        (0..self.n_points()).map(move |i| self.row(i))
    }

    /// `x_i^T w` for every row.
    pub fn row_dots(&self, w: &[f64]) -> Vec<f64> {
        self.rows()
            .map(|(idx, val)| idx.iter().zip(val).map(|(&j, &v)| v * w[j]).sum())
            .collect()
    }

    pub fn stats(&self) -> DatasetStats {
        let n_positive = self.labels.iter().filter(|&&y| y > 0.0).count();
        DatasetStats {
            n_features: self.n_features,
            n_points: self.n_points(),
            nnz: self.nnz(),
            n_positive,
            n_negative: self.n_points() - n_positive,
        }
    }

    /// Dense `X^T X / m`, used to bound the logistic Lipschitz constant.
    pub fn gram_over_m(&self) -> DMatrix<f64> {
        let n = self.n_features;
        let mut g = DMatrix::<f64>::zeros(n, n);
        for (idx, val) in self.rows() {
            for (a, (&ja, &va)) in idx.iter().zip(val).enumerate() {
                for (&jb, &vb) in idx[a..].iter().zip(&val[a..]) {
                    g[(ja, jb)] += va * vb;
                }
            }
        }
        let m = self.n_points() as f64;
        for a in 0..n {
            for b in a..n {
                let v = g[(a, b)] / m;
                g[(a, b)] = v;
                g[(b, a)] = v;
            }
        }
        g
    }

    /// Renders the dataset as LIBSVM text with 17 significant digits.
    pub fn to_libsvm_string(&self) -> String {
        let mut out = String::new();
        for (i, (idx, val)) in self.rows().enumerate() {
            out.push_str(if self.labels[i] > 0.0 { "+1" } else { "-1" });
            for (&j, &v) in idx.iter().zip(val) {
                let _ = write!(out, " {}:{:.16e}", j + 1, v);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_libsvm(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = fs::File::create(path).map_err(io_at(path))?;
        f.write_all(self.to_libsvm_string().as_bytes()).map_err(io_at(path))?;
        Ok(())
    }
}

/// Options for [`read_libsvm`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LibsvmOptions {
    /// Raw label treated as the positive class; everything else becomes -1.
    pub positive_label: Option<String>,
    /// Explicit feature count, overriding the largest index seen.
    pub n_features: Option<usize>,
}

pub fn read_libsvm(path: impl AsRef<Path>, opts: &LibsvmOptions) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    parse_libsvm(&text, opts).map_err(|e| match e {
        Error::Parse { line, msg, .. } => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        },
        other => other,
    })
}

/// Parses LIBSVM text. `<label> <idx>:<val> ...` with 1-based ascending indices.
pub fn parse_libsvm(text: &str, opts: &LibsvmOptions) -> Result<Dataset> {
    let parse_err = |line: usize, msg: String| Error::Parse {
        path: "<input>".into(),
        line,
        msg,
    };
    let mut raw_labels: Vec<String> = Vec::new();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut max_index = 0usize;

    for (lineno, line) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label = tokens.next().expect("nonempty line has a token");
        if label.parse::<f64>().is_err() {
            return Err(parse_err(lineno, format!("label {label:?} is not numeric")));
        }
        let mut row = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected <index>:<value>, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature index {idx:?}")))?;
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad feature value {val:?}")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "feature indices are 1-based".into()));
            }
            if idx <= last {
                return Err(parse_err(lineno, "feature indices must be strictly increasing".into()));
            }
            last = idx;
            max_index = max_index.max(idx);
            row.push((idx - 1, val));
        }
        raw_labels.push(label.to_string());
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::invalid("LIBSVM input contains no data lines"));
    }

    let n_features = match opts.n_features {
        Some(n) if n < max_index => {
            return Err(Error::invalid(format!(
                "--n-features {n} is smaller than the largest index {max_index}"
            )))
        }
        Some(n) => n,
        None => max_index,
    };
    let labels = binarize_labels(&raw_labels, opts.positive_label.as_deref())?;
    Dataset::from_rows(n_features, rows, labels)
}

fn same_label(a: &str, b: &str) -> bool {
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => x == y,
        _ => a == b,
    }
}

fn binarize_labels(raw: &[String], positive: Option<&str>) -> Result<Vec<f64>> {
    if let Some(pos) = positive {
        return Ok(raw
            .iter()
            .map(|l| if same_label(l, pos) { 1.0 } else { -1.0 })
            .collect());
    }
    let numeric: Vec<f64> = raw.iter().map(|l| l.parse::<f64>().expect("validated")).collect();
    let distinct: BTreeSet<u64> = numeric.iter().map(|v| v.to_bits()).collect();
    if distinct.len() > 2 {
        return Err(Error::invalid(format!(
            "{} distinct labels; pass a positive class for one-vs-rest",
            distinct.len()
        )));
    }
    let all_pm = numeric.iter().all(|&v| v == 1.0 || v == -1.0);
    let all_01 = numeric.iter().all(|&v| v == 1.0 || v == 0.0);
    if all_pm || all_01 {
        return Ok(numeric.iter().map(|&v| if v == 1.0 { 1.0 } else { -1.0 }).collect());
    }
    // Two arbitrary classes: the larger value is the positive class.
    let hi = numeric.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(numeric.iter().map(|&v| if v == hi { 1.0 } else { -1.0 }).collect())
}

/// Strongly convex quadratic `f(x) = x^T A x / 2 - b^T x` with a known spectrum.
#[derive(Debug, Clone)]
pub struct QuadraticFixture {
    /// Eigenvalues of `A`, ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthogonal eigenbasis of `A` (columns).
    pub basis: DMatrix<f64>,
    pub b: Vec<f64>,
    /// `A = V diag(eigenvalues) V^T`, symmetrized.
    pub matrix: DMatrix<f64>,
}

impl QuadraticFixture {
    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn gamma(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lipschitz(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    /// Unregularized minimizer `A^{-1} b`.
    pub fn unregularized_minimizer(&self) -> Vec<f64> {
        let vt_b = self.basis.transpose() * nalgebra::DVector::from_column_slice(&self.b);
        let scaled = nalgebra::DVector::from_iterator(
            vt_b.len(),
            vt_b.iter().zip(&self.eigenvalues).map(|(c, l)| c / l),
        );
        (&self.basis * scaled).iter().cloned().collect()
    }
}

/// Builds a random quadratic with spectrum spanning `[gamma, l_max]`.
///
/// The extreme eigenvalues are pinned to `gamma` and `l_max`; interior ones are
/// log-uniform. The basis is the Q factor of a Gaussian matrix.
pub fn synthesize_quadratic(n: usize, gamma: f64, l_max: f64, seed: u64) -> Result<QuadraticFixture> {
    if n == 0 {
        return Err(Error::invalid("quadratic dimension must be positive"));
    }
    if !(gamma > 0.0 && gamma <= l_max && l_max.is_finite()) {
        return Err(Error::invalid(format!(
            "need 0 < gamma <= L, got gamma={gamma}, L={l_max}"
        )));
    }
    if n == 1 && gamma != l_max {
        return Err(Error::invalid("a 1-dimensional quadratic needs gamma == L"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut eigenvalues = Vec::with_capacity(n);
    eigenvalues.push(gamma);
    let (lo, hi) = (gamma.ln(), l_max.ln());
    for _ in 1..n.saturating_sub(1) {
        let u: f64 = rng.random();
        eigenvalues.push((lo + u * (hi - lo)).exp());
    }
    if n > 1 {
        eigenvalues.push(l_max);
    }
    eigenvalues.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let gauss = DMatrix::<f64>::from_fn(n, n, |_, _| rng.sample(StandardNormal));
    let basis = gauss.qr().q();
    let b: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();

    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&eigenvalues));
    let mut matrix = &basis * diag * basis.transpose();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
            matrix[(i, j)] = v;
            matrix[(j, i)] = v;
        }
    }
    Ok(QuadraticFixture {
        eigenvalues,
        basis,
        b,
        matrix,
    })
}

/// Random sparse logistic-regression data drawn from a planted linear model.
///
/// Each row has about `density * n_features` nonzeros with values in `(0, 1]`;
/// labels follow a logistic draw around a sparse planted weight vector.
pub fn synthesize_logistic(n_points: usize, n_features: usize, density: f64, seed: u64) -> Result<Dataset> {
    if n_points == 0 || n_features == 0 {
        return Err(Error::invalid("need at least one point and one feature"));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::invalid("density must be in (0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let planted: Vec<f64> = (0..n_features)
        .map(|_| {
            if rng.random::<f64>() < 0.3 {
                2.0 * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            }
        })
        .collect();
    let mut rows = Vec::with_capacity(n_points);
    let mut labels = Vec::with_capacity(n_points);
    for _ in 0..n_points {
        let mut row = Vec::new();
        for j in 0..n_features {
            if rng.random::<f64>() < density {
                let v: f64 = 1.0 - rng.random::<f64>();
                row.push((j, v));
            }
        }
        if row.is_empty() {
            row.push((rng.random_range(0..n_features), 1.0));
        }
        let margin: f64 = row.iter().map(|&(j, v)| planted[j] * v).sum();
        let p = 1.0 / (1.0 + (-margin).exp());
        labels.push(if rng.random::<f64>() < p { 1.0 } else { -1.0 });
        rows.push(row);
    }
    Dataset::from_rows(n_features, rows, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_libsvm(text, &LibsvmOptions::default())
    }

    #[test]
    fn parses_single_line() {
        let d = parse("+1 1:0.5 3:2.0\n").unwrap();
        assert_eq!(d.labels(), &[1.0]);
        assert_eq!(d.row(0), (&[0usize, 2][..], &[0.5, 2.0][..]));
        assert_eq!(d.n_features(), 3);
    }

    #[test]
    fn maps_zero_one_labels() {
        let d = parse("0 1:1\n1 2:1\n0 1:2\n").unwrap();
        assert_eq!(d.labels(), &[-1.0, 1.0, -1.0]);
    }

    #[test]
    fn positive_label_one_vs_rest() {
        let opts = LibsvmOptions {
            positive_label: Some("3".into()),
            n_features: None,
        };
        let d = parse_libsvm("1 1:1\n3 1:1\n2 2:1\n3.0 2:1\n", &opts).unwrap();
        assert_eq!(d.labels(), &[-1.0, 1.0, -1.0, 1.0]);
    }

    #[test]
    fn multiclass_without_positive_label_fails() {
        assert!(parse("1 1:1\n2 1:1\n3 1:1\n").is_err());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        match parse("+1 1:1\n\n-1 2:x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse("+1 0:1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("+1 3:1 2:1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_input_fails() {
        assert!(parse("").is_err());
        assert!(parse("\n  \n").is_err());
    }

    #[test]
    fn feature_override() {
        let opts = LibsvmOptions {
            positive_label: None,
            n_features: Some(10),
        };
        assert_eq!(parse_libsvm("+1 2:1\n", &opts).unwrap().n_features(), 10);
        let opts = LibsvmOptions {
            positive_label: None,
            n_features: Some(1),
        };
        assert!(parse_libsvm("+1 2:1\n", &opts).is_err());
    }

    #[test]
    fn stats_count_fields() {
        let d = parse("+1 1:0.5 3:2.0 7:1\n").unwrap();
        let s = d.stats();
        assert_eq!(s.nnz, 3);
        assert_eq!((s.n_points, s.n_positive, s.n_negative), (1, 1, 0));
    }

    #[test]
    fn quadratic_identity_when_spectrum_forced() {
        let q = synthesize_quadratic(2, 1.0, 1.0, 3).unwrap();
        let eye = DMatrix::<f64>::identity(2, 2);
        assert!((&q.matrix - eye).abs().max() < 1e-12);
    }

    #[test]
    fn quadratic_spectrum_matches_dense_eigensolver() {
        let q = synthesize_quadratic(50, 0.1, 10.0, 7).unwrap();
        let eig = q.matrix.clone().symmetric_eigen();
        let min = eig.eigenvalues.min();
        let max = eig.eigenvalues.max();
        assert!((min - 0.1).abs() < 1e-10, "min {min}");
        assert!((max - 10.0).abs() < 1e-10, "max {max}");
    }

    #[test]
    fn quadratic_deterministic() {
        let a = synthesize_quadratic(8, 0.5, 4.0, 11).unwrap();
        let b = synthesize_quadratic(8, 0.5, 4.0, 11).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.b, b.b);
        assert!(synthesize_quadratic(3, 2.0, 1.0, 0).is_err());
        assert!(synthesize_quadratic(3, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn gram_matches_direct() {
        let d = parse("+1 1:1 2:2\n-1 2:3\n").unwrap();
        let g = d.gram_over_m();
        assert_eq!(g[(0, 0)], 0.5);
        assert_eq!(g[(0, 1)], 1.0);
        assert_eq!(g[(1, 1)], 6.5);
    }
}
