//! Maximum-likelihood fitting: the observed-data log-likelihood, EM for a
//! fixed geometric parameter (unconstrained, zero-location and diagonal
//! dispersion variants), and the profile search over `p` with warm starts
//! and golden-section refinement.

use crate::dist::{cond_n_both, mgsn_logpdf, MgsnParams, SeriesControl};
use crate::error::{Error, Result};
use crate::linalg::{cholesky, SymMatrix, LN_2PI};

/// An `n x d` observation matrix with column labels, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
    labels: Vec<String>,
}

impl DataMatrix {
    pub fn new(values: Vec<f64>, n: usize, d: usize, labels: Vec<String>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidParameter("data matrix must be non-empty".into()));
        }
        if values.len() != n * d {
            return Err(Error::DimensionMismatch { expected: n * d, got: values.len() });
        }
        if labels.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: labels.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("data entries must be finite".into()));
        }
        Ok(Self { n, d, values, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<String>) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(n * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: row.len() });
            }
            values.extend_from_slice(row);
        }
        Self::new(values, n, d, labels)
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Column means.
    pub fn sample_mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.d];
        for i in 0..self.n {
            for (m, v) in mean.iter_mut().zip(self.row(i)) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= self.n as f64);
        mean
    }

    /// Maximum-likelihood covariance (divisor `n`).
    pub fn sample_cov(&self) -> Result<SymMatrix> {
        let mean = self.sample_mean();
        self.scatter_about(&mean)
    }

    /// Uncentered second-moment matrix `sum x x^T / n`.
    pub fn second_moment(&self) -> Result<SymMatrix> {
        self.scatter_about(&vec![0.0; self.d])
    }

    fn scatter_about(&self, center: &[f64]) -> Result<SymMatrix> {
        let d = self.d;
        let mut acc = vec![0.0; d * d];
        let mut diff = vec![0.0; d];
        for r in 0..self.n {
            for (i, v) in diff.iter_mut().enumerate() {
                *v = self.row(r)[i] - center[i];
            }
            for i in 0..d {
                for j in 0..=i {
                    acc[i * d + j] += diff[i] * diff[j];
                }
            }
        }
        let nf = self.n as f64;
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let v = acc[i * d + j] / nf;
                data[i * d + j] = v;
                data[j * d + i] = v;
            }
        }
        SymMatrix::from_row_major(d, data)
    }

    /// A copy with every entry multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(
            self.values.iter().map(|v| v * c).collect(),
            self.n,
            self.d,
            self.labels.clone(),
        )
    }
}

/// Which parameter restriction a fit was run under.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    None,
    MuZero,
    DiagSigma,
    NormalP1,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Constraint::None => "none",
            Constraint::MuZero => "mu_zero",
            Constraint::DiagSigma => "diag_sigma",
            Constraint::NormalP1 => "normal_p1",
        };
        f.write_str(s)
    }
}

/// How the EM iteration is initialized at each `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMethod {
    /// Sample mean and maximum-likelihood covariance.
    #[default]
    SampleMoments,
    /// Invert the moment relation: `mu0 = p xbar`,
    /// `sigma0 = p S - p(1-p) xbar xbar^T`, falling back to sample
    /// moments when that matrix is not positive definite.
    MomentMatching,
}

/// EM iteration policy. `jitter` is the base relative ridge added to a
/// covariance update that fails to factor, escalating tenfold per retry
/// up to `1e-4 * trace / d`. With `paper_mode` set the loop runs exactly
/// `max_iter` iterations with no convergence test.
#[derive(Debug, Clone, PartialEq)]
pub struct EmControl {
    pub max_iter: usize,
    pub rel_tol: f64,
    pub jitter: f64,
    pub paper_mode: bool,
    pub init: InitMethod,
}

impl EmControl {
    /// Fixed 20-iteration runs matching the published analyses.
    pub fn paper() -> Self {
        Self { max_iter: 20, paper_mode: true, ..Self::default() }
    }
}

impl Default for EmControl {
    fn default() -> Self {
        Self {
            max_iter: 500,
            rel_tol: 1e-8,
            jitter: 1e-10,
            paper_mode: false,
            init: InitMethod::SampleMoments,
        }
    }
}

/// A completed fit: parameters, the observed-data log-likelihood they
/// attain, iteration bookkeeping and (for profile searches) the
/// `(p, loglik)` trace in increasing `p`.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub params: MgsnParams,
    pub loglik: f64,
    pub n_iter: usize,
    pub converged: bool,
    pub profile_trace: Vec<(f64, f64)>,
    pub constraint: Constraint,
}

/// Per-row conditional expectations of the latent count and its
/// reciprocal under the current parameters.
#[derive(Debug, Clone)]
pub struct EStep {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Location/dispersion update produced by one M-step.
#[derive(Debug, Clone)]
pub struct MStep {
    pub mu: Vec<f64>,
    pub sigma: SymMatrix,
}

/// Observed-data log-likelihood: the sum of the series log-density over
/// rows. Deterministic given the truncation policy.
pub fn observed_loglik(data: &DataMatrix, params: &MgsnParams, ctl: &SeriesControl) -> Result<f64> {
    if data.n_cols() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), got: data.n_cols() });
    }
    let mut ll = 0.0;
    for i in 0..data.n_rows() {
        ll += mgsn_logpdf(data.row(i), params, ctl)?;
    }
    Ok(ll)
}

/// E-step: `a_i = E(N | X = x_i)` and `b_i = E(1/N | X = x_i)`, both from
/// one shared weight vector per row. At `p = 1` both are identically one.
pub fn em_e_step(data: &DataMatrix, params: &MgsnParams, ctl: &SeriesControl) -> Result<EStep> {
    if data.n_cols() != params.dim() {
        return Err(Error::DimensionMismatch { expected: params.dim(), got: data.n_cols() });
    }
    let n = data.n_rows();
    if params.p() == 1.0 {
        return Ok(EStep { a: vec![1.0; n], b: vec![1.0; n] });
    }
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let (ai, bi) = cond_n_both(data.row(i), params, ctl).map_err(|e| match e {
            Error::SeriesUnderflow { .. } => Error::SeriesUnderflow { row: Some(i) },
            other => other,
        })?;
        a.push(ai);
        b.push(bi);
    }
    Ok(EStep { a, b })
}

/// The bracketed M-step matrix
/// `sum_i b_i x_i x_i^T - sum_i (x_i mu^T + mu x_i^T) + (sum_i a_i) mu mu^T`,
/// divided by `n` and symmetrized.
fn m_step_matrix(data: &DataMatrix, b: &[f64], mu: &[f64], a_sum: f64) -> Vec<f64> {
    let d = data.n_cols();
    let n = data.n_rows();
    let mut acc = vec![0.0; d * d];
    for r in 0..n {
        let x = data.row(r);
        let br = b[r];
        for i in 0..d {
            for j in 0..=i {
                acc[i * d + j] += br * x[i] * x[j] - x[i] * mu[j] - mu[i] * x[j];
            }
        }
    }
    let nf = n as f64;
    let mut out = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let v = (acc[i * d + j] + a_sum * mu[i] * mu[j]) / nf;
            out[i * d + j] = v;
            out[j * d + i] = v;
        }
    }
    out
}

/// Escalating-ridge factorization guard: returns a positive-definite
/// version of `sigma` (possibly jittered) or reports a degenerate update.
fn ensure_pd(sigma: SymMatrix, base_jitter: f64) -> Result<SymMatrix> {
    if cholesky(&sigma).is_ok() {
        return Ok(sigma);
    }
    let scale = (sigma.trace() / sigma.dim() as f64).abs().max(f64::MIN_POSITIVE);
    let mut eps = base_jitter.max(1e-300);
    while eps <= 1e-4 {
        let shifted = sigma.with_diagonal_shift(eps * scale);
        if cholesky(&shifted).is_ok() {
            return Ok(shifted);
        }
        eps *= 10.0;
    }
    Err(Error::DegenerateUpdate { iteration: 0 })
}

/// M-step of the unconstrained EM: `mu = sum x_i / sum a_j` and the
/// bracketed dispersion update, jittered if necessary.
pub fn em_m_step(data: &DataMatrix, a: &[f64], b: &[f64], base_jitter: f64) -> Result<MStep> {
    let n = data.n_rows();
    let d = data.n_cols();
    if a.len() != n || b.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: a.len().min(b.len()) });
    }
    let a_sum: f64 = a.iter().sum();
    if !(a_sum > 0.0) {
        return Err(Error::InvalidParameter("sum of a_i must be positive".into()));
    }
    let mut mu = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mu.iter_mut().zip(data.row(r)) {
            *m += v;
        }
    }
    mu.iter_mut().for_each(|m| *m /= a_sum);
    let raw = m_step_matrix(data, b, &mu, a_sum);
    let sigma = ensure_pd(SymMatrix::from_row_major(d, raw)?, base_jitter)?;
    Ok(MStep { mu, sigma })
}

/// M-step under the zero-location restriction: only the dispersion moves,
/// `sigma = sum_i b_i x_i x_i^T / n`.
fn m_step_mu_zero(data: &DataMatrix, b: &[f64], base_jitter: f64) -> Result<MStep> {
    let d = data.n_cols();
    let raw = m_step_matrix(data, b, &vec![0.0; d], 0.0);
    let sigma = ensure_pd(SymMatrix::from_row_major(d, raw)?, base_jitter)?;
    Ok(MStep { mu: vec![0.0; d], sigma })
}

/// M-step under the diagonal-dispersion restriction: the location update
/// is unchanged and each variance is the matching diagonal entry of the
/// bracketed matrix.
fn m_step_diag(data: &DataMatrix, a: &[f64], b: &[f64], base_jitter: f64) -> Result<MStep> {
    let n = data.n_rows();
    let d = data.n_cols();
    let a_sum: f64 = a.iter().sum();
    if !(a_sum > 0.0) {
        return Err(Error::InvalidParameter("sum of a_i must be positive".into()));
    }
    let mut mu = vec![0.0; d];
    for r in 0..n {
        for (m, v) in mu.iter_mut().zip(data.row(r)) {
            *m += v;
        }
    }
    mu.iter_mut().for_each(|m| *m /= a_sum);
    let raw = m_step_matrix(data, b, &mu, a_sum);
    let diag: Vec<f64> = (0..d).map(|i| raw[i * d + i]).collect();
    let sigma = ensure_pd(SymMatrix::diagonal(&diag), base_jitter)?;
    Ok(MStep { mu, sigma })
}

/// Gaussian log-likelihood at its own maximum: with the MLE plugged in,
/// the quadratic terms contribute exactly `n d`.
fn gaussian_loglik_at_mle(n: usize, logdet: f64, d: usize) -> f64 {
    -(n as f64) * 0.5 * (d as f64 * LN_2PI + logdet + d as f64)
}

fn closed_form_p1(data: &DataMatrix, variant: Constraint) -> Result<FitResult> {
    let n = data.n_rows();
    let d = data.n_cols();
    let (mu, sigma) = match variant {
        Constraint::MuZero => (vec![0.0; d], data.second_moment()?),
        Constraint::DiagSigma => {
            let cov = data.sample_cov()?;
            let diag: Vec<f64> = (0..d).map(|i| cov.get(i, i)).collect();
            (data.sample_mean(), SymMatrix::diagonal(&diag))
        }
        _ => (data.sample_mean(), data.sample_cov()?),
    };
    let chol = cholesky(&sigma).map_err(|_| Error::DegenerateUpdate { iteration: 0 })?;
    let loglik = gaussian_loglik_at_mle(n, chol.logdet(), d);
    Ok(FitResult {
        params: MgsnParams::new(1.0, mu, sigma)?,
        loglik,
        n_iter: 1,
        converged: true,
        profile_trace: Vec::new(),
        constraint: variant,
    })
}

/// Closed-form Gaussian fit (the `p = 1` boundary model): sample mean and
/// maximum-likelihood covariance.
pub fn gaussian_fit(data: &DataMatrix) -> Result<FitResult> {
    closed_form_p1(data, Constraint::NormalP1)
}

fn initial_guess(
    data: &DataMatrix,
    p: f64,
    variant: Constraint,
    method: InitMethod,
) -> Result<(Vec<f64>, SymMatrix)> {
    let fallback = |data: &DataMatrix| -> Result<(Vec<f64>, SymMatrix)> {
        match variant {
            Constraint::MuZero => Ok((vec![0.0; data.n_cols()], data.second_moment()?)),
            Constraint::DiagSigma => {
                let cov = data.sample_cov()?;
                let diag: Vec<f64> = (0..data.n_cols()).map(|i| cov.get(i, i)).collect();
                Ok((data.sample_mean(), SymMatrix::diagonal(&diag)))
            }
            _ => Ok((data.sample_mean(), data.sample_cov()?)),
        }
    };
    match method {
        InitMethod::SampleMoments => fallback(data),
        InitMethod::MomentMatching => {
            if variant != Constraint::None {
                return fallback(data);
            }
            let xbar = data.sample_mean();
            let cov = data.sample_cov()?;
            match MgsnParams::from_moments(p, &xbar, &cov) {
                Ok(params) => Ok((params.mu().to_vec(), params.sigma().clone())),
                Err(_) => fallback(data),
            }
        }
    }
}

/// Shared EM loop for all three fit variants at a fixed `p`.
fn em_core(
    data: &DataMatrix,
    p: f64,
    variant: Constraint,
    init: Option<(Vec<f64>, SymMatrix)>,
    ctl: &EmControl,
    sctl: &SeriesControl,
) -> Result<FitResult> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1], got {p}")));
    }
    if data.n_rows() < 2 {
        return Err(Error::DegenerateUpdate { iteration: 0 });
    }
    if p == 1.0 {
        return closed_form_p1(data, variant);
    }
    let (mut mu, mut sigma) = match init {
        Some(pair) => pair,
        None => initial_guess(data, p, variant, ctl.init)?,
    };
    // a sample covariance that cannot factor means the data are too few
    // or collinear; jitter is reserved for mid-iteration drift
    if cholesky(&sigma).is_err() {
        return Err(Error::DegenerateUpdate { iteration: 0 });
    }
    let mut params = MgsnParams::new(p, mu, sigma)?;
    let mut prev_ll = f64::NEG_INFINITY;
    let mut loglik = f64::NEG_INFINITY;
    let mut n_iter = 0;
    let mut converged = false;
    for t in 1..=ctl.max_iter {
        let es = em_e_step(data, &params, sctl)?;
        let ms = match variant {
            Constraint::MuZero => m_step_mu_zero(data, &es.b, ctl.jitter),
            Constraint::DiagSigma => m_step_diag(data, &es.a, &es.b, ctl.jitter),
            _ => em_m_step(data, &es.a, &es.b, ctl.jitter),
        }
        .map_err(|e| match e {
            Error::DegenerateUpdate { .. } => Error::DegenerateUpdate { iteration: t },
            other => other,
        })?;
        mu = ms.mu;
        sigma = ms.sigma;
        params = MgsnParams::new(p, mu, sigma)?;
        loglik = observed_loglik(data, &params, sctl)?;
        n_iter = t;
        if !ctl.paper_mode && prev_ll.is_finite() {
            if (loglik - prev_ll).abs() <= ctl.rel_tol * prev_ll.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        prev_ll = loglik;
    }
    Ok(FitResult {
        params,
        loglik,
        n_iter,
        converged: converged || ctl.paper_mode,
        profile_trace: Vec::new(),
        constraint: variant,
    })
}

/// EM fit at a fixed `p`. The default initial guess is the sample mean
/// and covariance; `init` overrides it (used by warm starts). At `p = 1`
/// the closed-form Gaussian fit is returned in one step.
pub fn em_fit_fixed_p(
    data: &DataMatrix,
    p: f64,
    init: Option<(Vec<f64>, SymMatrix)>,
    ctl: &EmControl,
    sctl: &SeriesControl,
) -> Result<FitResult> {
    em_core(data, p, Constraint::None, init, ctl, sctl)
}

/// EM fit at fixed `p` with the location pinned to zero.
pub fn em_fit_mu_zero(
    data: &DataMatrix,
    p: f64,
    ctl: &EmControl,
    sctl: &SeriesControl,
) -> Result<FitResult> {
    em_core(data, p, Constraint::MuZero, None, ctl, sctl)
}

/// EM fit at fixed `p` with the dispersion constrained diagonal.
pub fn em_fit_diag(
    data: &DataMatrix,
    p: f64,
    ctl: &EmControl,
    sctl: &SeriesControl,
) -> Result<FitResult> {
    em_core(data, p, Constraint::DiagSigma, None, ctl, sctl)
}

/// The default profile grid: `0.02, 0.04, ..., 1.00`.
pub fn default_p_grid() -> Vec<f64> {
    (1..=50).map(|i| i as f64 / 50.0).collect()
}

/// Golden-section refinement stops once the bracket is this narrow.
const REFINE_TOL: f64 = 1e-4;

/// Profile-likelihood fit over a grid of `p` values for any variant.
///
/// Grid points are visited in ascending order; outside paper mode each
/// point warm-starts from the previous solution and the best grid cell
/// is refined by golden-section search. Per-point failures are skipped;
/// only a fully failed grid is an error. The returned trace contains
/// every evaluated `(p, loglik)` pair in increasing `p`, and the
/// reported fit attains the trace maximum.
pub fn profile_fit_variant(
    data: &DataMatrix,
    grid: &[f64],
    variant: Constraint,
    ctl: &EmControl,
    sctl: &SeriesControl,
) -> Result<FitResult> {
    if grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) || grid.iter().any(|&p| !(p > 0.0 && p <= 1.0)) {
        return Err(Error::InvalidParameter(
            "profile grid must be strictly increasing within (0, 1]".into(),
        ));
    }
    if *grid.last().unwrap() != 1.0 {
        return Err(Error::InvalidParameter("profile grid must include p = 1".into()));
    }
    let mut trace: Vec<(f64, f64)> = Vec::with_capacity(grid.len());
    let mut best: Option<FitResult> = None;
    let mut warm: Option<(Vec<f64>, SymMatrix)> = None;
    let mut grid_index_of_best = 0usize;
    for (gi, &p) in grid.iter().enumerate() {
        let init = if ctl.paper_mode { None } else { warm.clone() };
        match em_core(data, p, variant, init, ctl, sctl) {
            Ok(fr) => {
                trace.push((p, fr.loglik));
                if p < 1.0 {
                    warm = Some((fr.params.mu().to_vec(), fr.params.sigma().clone()));
                }
                if best.as_ref().map_or(true, |b| fr.loglik > b.loglik) {
                    grid_index_of_best = gi;
                    best = Some(fr);
                }
            }
            Err(_) => continue,
        }
    }
    let mut best = best.ok_or(Error::AllGridPointsFailed(grid.len()))?;
    if !ctl.paper_mode {
        let lo = if grid_index_of_best == 0 {
            grid[0] * 0.5
        } else {
            grid[grid_index_of_best - 1]
        };
        let hi = if grid_index_of_best + 1 < grid.len() {
            grid[grid_index_of_best + 1]
        } else {
            1.0
        };
        let warm_best = (best.params.mu().to_vec(), best.params.sigma().clone());
        let eval = |p: f64, trace: &mut Vec<(f64, f64)>, best: &mut FitResult| -> f64 {
            match em_core(data, p, variant, Some(warm_best.clone()), ctl, sctl) {
                Ok(fr) => {
                    trace.push((p, fr.loglik));
                    if fr.loglik > best.loglik {
                        *best = fr;
                    }
                    trace.last().unwrap().1
                }
                Err(_) => f64::NEG_INFINITY,
            }
        };
        let inv_phi = 0.5 * (5.0_f64.sqrt() - 1.0);
        let (mut a, mut b) = (lo, hi);
        let mut c = b - inv_phi * (b - a);
        let mut d = a + inv_phi * (b - a);
        let mut fc = eval(c, &mut trace, &mut best);
        let mut fd = eval(d, &mut trace, &mut best);
        while b - a > REFINE_TOL {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - inv_phi * (b - a);
                fc = eval(c, &mut trace, &mut best);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + inv_phi * (b - a);
                fd = eval(d, &mut trace, &mut best);
            }
        }
    }
    trace.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    trace.dedup_by(|a, b| {
        if a.0 == b.0 {
            b.1 = b.1.max(a.1);
            true
        } else {
            false
        }
    });
    best.profile_trace = trace;
    Ok(best)
}

/// Unconstrained profile-likelihood fit over the grid.
pub fn profile_fit(
    data: &DataMatrix,
    grid: &[f64],
    ctl: &EmControl,
    sctl: &SeriesControl,
) -> Result<FitResult> {
    profile_fit_variant(data, grid, Constraint::None, ctl, sctl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_data() -> DataMatrix {
        DataMatrix::from_rows(
            &[
                vec![1.0, 2.0],
                vec![-0.5, 0.3],
                vec![2.0, 1.0],
                vec![0.0, -1.0],
                vec![1.5, 0.5],
                vec![0.25, 0.75],
            ],
            vec!["x1".into(), "x2".into()],
        )
        .unwrap()
    }

    #[test]
    fn e_step_p_one_is_ones() {
        let data = toy_data();
        let params = MgsnParams::new(1.0, vec![0.0, 0.0], SymMatrix::identity(2)).unwrap();
        let es = em_e_step(&data, &params, &SeriesControl::default()).unwrap();
        assert_eq!(es.a, vec![1.0; 6]);
        assert_eq!(es.b, vec![1.0; 6]);
    }

    #[test]
    fn e_step_ranges() {
        let data = toy_data();
        let params = MgsnParams::new(0.4, vec![0.2, 0.1], SymMatrix::identity(2)).unwrap();
        let es = em_e_step(&data, &params, &SeriesControl::default()).unwrap();
        for (a, b) in es.a.iter().zip(&es.b) {
            assert!(*a >= 1.0);
            assert!(*b <= 1.0 && *b > 0.0);
        }
    }

    #[test]
    fn m_step_unit_weights_is_gaussian_mle() {
        let data = toy_data();
        let ones = vec![1.0; 6];
        let ms = em_m_step(&data, &ones, &ones, 1e-10).unwrap();
        let mean = data.sample_mean();
        let cov = data.sample_cov().unwrap();
        for i in 0..2 {
            assert_relative_eq!(ms.mu[i], mean[i], max_relative = 1e-14);
            for j in 0..2 {
                assert_relative_eq!(
                    ms.sigma.get(i, j),
                    cov.get(i, j),
                    max_relative = 1e-12,
                    epsilon = 1e-14
                );
            }
        }
    }

    #[test]
    fn m_step_hand_case() {
        let data = DataMatrix::from_rows(
            &[vec![-1.0], vec![1.0]],
            vec!["x1".into()],
        )
        .unwrap();
        let ms = em_m_step(&data, &[1.0, 1.0], &[1.0, 1.0], 1e-10).unwrap();
        assert_eq!(ms.mu, vec![0.0]);
        assert_relative_eq!(ms.sigma.get(0, 0), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn fit_p_one_closed_form() {
        let data = toy_data();
        let fr = em_fit_fixed_p(&data, 1.0, None, &EmControl::default(), &SeriesControl::default())
            .unwrap();
        assert!(fr.converged);
        assert_eq!(fr.n_iter, 1);
        let mean = data.sample_mean();
        for i in 0..2 {
            assert_relative_eq!(fr.params.mu()[i], mean[i], max_relative = 1e-14);
        }
        // closed form equals the series evaluation at p = 1
        let series =
            observed_loglik(&data, &fr.params, &SeriesControl::default()).unwrap();
        assert_relative_eq!(fr.loglik, series, max_relative = 1e-12);
    }

    #[test]
    fn fit_mu_zero_p_one_uncentered() {
        let data = toy_data();
        let fr =
            em_fit_mu_zero(&data, 1.0, &EmControl::default(), &SeriesControl::default()).unwrap();
        let m2 = data.second_moment().unwrap();
        for i in 0..2 {
            assert_eq!(fr.params.mu()[i], 0.0);
            for j in 0..2 {
                assert_relative_eq!(fr.params.sigma().get(i, j), m2.get(i, j), max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn fit_diag_p_one_column_variances() {
        let data = toy_data();
        let fr = em_fit_diag(&data, 1.0, &EmControl::default(), &SeriesControl::default()).unwrap();
        let cov = data.sample_cov().unwrap();
        for i in 0..2 {
            assert_relative_eq!(fr.params.sigma().get(i, i), cov.get(i, i), max_relative = 1e-13);
        }
        assert_eq!(fr.params.sigma().get(0, 1), 0.0);
    }

    #[test]
    fn nested_fits_ordered() {
        let data = toy_data();
        let ctl = EmControl::default();
        let sctl = SeriesControl::default();
        let free = em_fit_fixed_p(&data, 0.6, None, &ctl, &sctl).unwrap();
        let muz = em_fit_mu_zero(&data, 0.6, &ctl, &sctl).unwrap();
        let diag = em_fit_diag(&data, 0.6, &ctl, &sctl).unwrap();
        assert!(muz.loglik <= free.loglik + 1e-8);
        assert!(diag.loglik <= free.loglik + 1e-8);
    }

    #[test]
    fn two_rows_degenerate() {
        let data = DataMatrix::from_rows(
            &[vec![1.0, 2.0], vec![1.1, 2.2]],
            vec!["x1".into(), "x2".into()],
        )
        .unwrap();
        let r = em_fit_fixed_p(&data, 0.5, None, &EmControl::default(), &SeriesControl::default());
        assert!(matches!(r, Err(Error::DegenerateUpdate { .. })), "{r:?}");
    }

    #[test]
    fn profile_grid_validation() {
        let data = toy_data();
        let ctl = EmControl::default();
        let sctl = SeriesControl::default();
        assert!(profile_fit(&data, &[], &ctl, &sctl).is_err());
        assert!(profile_fit(&data, &[0.5, 0.4, 1.0], &ctl, &sctl).is_err());
        assert!(profile_fit(&data, &[0.5, 0.9], &ctl, &sctl).is_err());
        assert!(profile_fit(&data, &[0.0, 1.0], &ctl, &sctl).is_err());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_p_grid();
        assert_eq!(g.len(), 50);
        assert_eq!(g[0], 0.02);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn scaled_data_and_equivariance_shift() {
        let data = toy_data();
        let scaled = data.scaled(10.0).unwrap();
        let f1 = gaussian_fit(&data).unwrap();
        let f2 = gaussian_fit(&scaled).unwrap();
        let n = data.n_rows() as f64;
        let d = data.n_cols() as f64;
        assert_relative_eq!(
            f2.loglik,
            f1.loglik - n * d * 10.0_f64.ln(),
            max_relative = 1e-12
        );
        for i in 0..2 {
            assert_relative_eq!(f2.params.mu()[i], 10.0 * f1.params.mu()[i], max_relative = 1e-13);
        }
    }
}
