//! Dense symmetric linear algebra and log-domain primitives shared by the
//! distribution and fitting layers. Everything here is a pure function of
//! its inputs; values are immutable after construction.

use crate::error::{Error, Result};

/// Relative tolerance allowed between `m[i][j]` and `m[j][i]` on input.
const SYMMETRY_REL_TOL: f64 = 1e-12;

/// A symmetric `d x d` matrix stored row-major.
///
/// Construction symmetrizes the entries as `(M + M^T) / 2` after checking
/// that the asymmetry does not exceed `1e-12` relative to the largest
/// entry; iterative covariance updates accumulate rounding asymmetry of
/// exactly that order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a symmetric matrix from row-major entries.
    pub fn from_row_major(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("matrix dimension must be >= 1".into()));
        }
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, got: data.len() });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("matrix entries must be finite".into()));
        }
        let scale = data.iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut max_rel = 0.0_f64;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let diff = (data[i * dim + j] - data[j * dim + i]).abs();
                max_rel = max_rel.max(diff / scale);
            }
        }
        if max_rel > SYMMETRY_REL_TOL {
            return Err(Error::NotSymmetric { max_rel });
        }
        let mut sym = data;
        for i in 0..dim {
            for j in (i + 1)..dim {
                let avg = 0.5 * (sym[i * dim + j] + sym[j * dim + i]);
                sym[i * dim + j] = avg;
                sym[j * dim + i] = avg;
            }
        }
        Ok(Self { dim, data: sym })
    }

    /// Builds a symmetric matrix from slices of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: row.len() });
            }
            data.extend_from_slice(row);
        }
        Self::from_row_major(dim, data)
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let dim = diag.len();
        let mut data = vec![0.0; dim * dim];
        for (i, v) in diag.iter().enumerate() {
            data[i * dim + i] = *v;
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// Extracts the principal submatrix indexed by `idx` (strictly
    /// increasing, in range).
    pub fn submatrix(&self, idx: &[usize]) -> Result<Self> {
        if idx.is_empty()
            || idx.iter().any(|&i| i >= self.dim)
            || idx.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::BadIndexSet);
        }
        let m = idx.len();
        let mut data = Vec::with_capacity(m * m);
        for &i in idx {
            for &j in idx {
                data.push(self.get(i, j));
            }
        }
        Ok(Self { dim: m, data })
    }

    /// `v^T M v` without factoring.
    pub fn quadratic(&self, v: &[f64]) -> Result<f64> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        let mut acc = 0.0;
        for i in 0..self.dim {
            let mut row = 0.0;
            for j in 0..self.dim {
                row += self.get(i, j) * v[j];
            }
            acc += v[i] * row;
        }
        Ok(acc)
    }

    /// Adds `eps` to every diagonal entry.
    pub(crate) fn with_diagonal_shift(&self, eps: f64) -> Self {
        let mut out = self.clone();
        for i in 0..self.dim {
            out.data[i * self.dim + i] += eps;
        }
        out
    }
}

/// Lower-triangular Cholesky factor of a positive-definite matrix together
/// with the log-determinant of the factored matrix.
#[derive(Debug, Clone)]
pub struct CholFactor {
    dim: usize,
    lower: Vec<f64>,
    logdet: f64,
}

impl CholFactor {
    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    #[inline]
    pub fn lower(&self, i: usize, j: usize) -> f64 {
        self.lower[i * self.dim + j]
    }

    /// Solves `L y = v` by forward substitution.
    pub fn solve_lower(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        let mut y = v.to_vec();
        for i in 0..self.dim {
            for j in 0..i {
                y[i] -= self.lower(i, j) * y[j];
            }
            y[i] /= self.lower(i, i);
        }
        Ok(y)
    }

    /// Solves `L^T x = y` by back substitution.
    pub fn solve_upper(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: y.len() });
        }
        let mut x = y.to_vec();
        for i in (0..self.dim).rev() {
            for j in (i + 1)..self.dim {
                x[i] -= self.lower(j, i) * x[j];
            }
            x[i] /= self.lower(i, i);
        }
        Ok(x)
    }

    /// Solves `M x = v` for the factored matrix `M = L L^T`.
    pub fn solve(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.solve_upper(&self.solve_lower(v)?)
    }

    /// Inverse of the factored matrix, returned as a symmetric matrix.
    pub fn inverse(&self) -> SymMatrix {
        let d = self.dim;
        let mut data = vec![0.0; d * d];
        let mut e = vec![0.0; d];
        for j in 0..d {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.solve(&e).expect("dimension fixed by construction");
            for i in 0..d {
                data[i * d + j] = col[i];
            }
        }
        // symmetrize away the rounding skew of column-wise solves
        for i in 0..d {
            for j in (i + 1)..d {
                let avg = 0.5 * (data[i * d + j] + data[j * d + i]);
                data[i * d + j] = avg;
                data[j * d + i] = avg;
            }
        }
        SymMatrix { dim: d, data }
    }
}

/// Cholesky factorization `M = L L^T` of a positive-definite symmetric
/// matrix. Never repairs its input: a non-positive pivot is reported as
/// [`Error::NotPositiveDefinite`] and callers decide whether to jitter.
pub fn cholesky(m: &SymMatrix) -> Result<CholFactor> {
    let d = m.dim;
    let mut lower = vec![0.0; d * d];
    let mut logdet = 0.0;
    for i in 0..d {
        for j in 0..=i {
            let mut sum = m.get(i, j);
            for k in 0..j {
                sum -= lower[i * d + k] * lower[j * d + k];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(Error::NotPositiveDefinite);
                }
                let pivot = sum.sqrt();
                lower[i * d + i] = pivot;
                logdet += 2.0 * pivot.ln();
            } else {
                lower[i * d + j] = sum / lower[j * d + j];
            }
        }
    }
    Ok(CholFactor { dim: d, lower, logdet })
}

/// `v^T M^{-1} v` for the factored matrix, computed as `||L^{-1} v||^2` by
/// a triangular solve; the explicit inverse is never formed.
pub fn quad_form(f: &CholFactor, v: &[f64]) -> Result<f64> {
    let y = f.solve_lower(v)?;
    Ok(y.iter().map(|t| t * t).sum())
}

pub(crate) const LN_2PI: f64 = 1.837877066409345483560659472811;

/// Log-density of the d-variate normal distribution at `x`.
pub fn mvn_logpdf(x: &[f64], mean: &[f64], cov: &SymMatrix) -> Result<f64> {
    if x.len() != mean.len() {
        return Err(Error::DimensionMismatch { expected: mean.len(), got: x.len() });
    }
    let f = cholesky(cov)?;
    let diff: Vec<f64> = x.iter().zip(mean).map(|(a, b)| a - b).collect();
    let q = quad_form(&f, &diff)?;
    let d = cov.dim() as f64;
    Ok(-0.5 * (d * LN_2PI + f.logdet() + q))
}

/// `ln(sum(exp(t_i)))` with the usual max shift, exact under constant
/// shifts of the input.
pub fn logsumexp(terms: &[f64]) -> Result<f64> {
    if terms.is_empty() {
        return Err(Error::EmptyInput);
    }
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    Ok(max + sum.ln())
}

/// Streaming form of [`logsumexp`]: `ln(exp(a) + exp(b))`.
pub(crate) fn logaddexp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method,
/// descending order. Intended for the small matrices that arise in the
/// canonical-correlation computation.
pub(crate) fn sym_eigenvalues(m: &SymMatrix) -> Vec<f64> {
    let d = m.dim;
    let mut a = m.data.clone();
    let idx = |i: usize, j: usize| i * d + j;
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..d {
            for j in (i + 1)..d {
                off += a[idx(i, j)] * a[idx(i, j)];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + m.trace().abs()) {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[idx(p, q)];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[idx(q, q)] - a[idx(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[idx(k, p)];
                    let akq = a[idx(k, q)];
                    a[idx(k, p)] = c * akp - s * akq;
                    a[idx(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[idx(p, k)];
                    let aqk = a[idx(q, k)];
                    a[idx(p, k)] = c * apk - s * aqk;
                    a[idx(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..d).map(|i| a[idx(i, i)]).collect();
    eig.sort_by(|x, y| y.partial_cmp(x).unwrap());
    eig
}
