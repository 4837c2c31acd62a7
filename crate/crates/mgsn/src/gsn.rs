//! The univariate geometric skew-normal distribution GSN(mu, sigma, p):
//! a geometric number of i.i.d. N(mu, sigma^2) steps. Used directly and
//! as the projection target in the characterization checks of the
//! multivariate family.

use crate::dist::SeriesControl;
use crate::error::{Error, Result};
use crate::linalg::{logsumexp, LN_2PI};

/// Parameters of GSN(mu, sigma, p): location increment, positive scale
/// increment and geometric success probability in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsnParams {
    mu: f64,
    sigma: f64,
    p: f64,
}

impl GsnParams {
    pub fn new(mu: f64, sigma: f64, p: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidParameter("mu must be finite".into()));
        }
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!("p must lie in (0, 1], got {p}")));
        }
        Ok(Self { mu, sigma, p })
    }

    #[inline]
    pub fn mu(&self) -> f64 {
        self.mu
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Mean, variance, skewness and kurtosis (the normal distribution has
/// kurtosis 3 under this convention).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GsnMoments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

/// Density at `x`, summed as
/// `sum_k p (1-p)^{k-1} phi((x - k mu) / (sigma sqrt(k))) / (sigma sqrt(k))`
/// with truncation per `ctl`. At `p = 1` the single normal term is exact.
pub fn gsn_pdf(x: f64, params: &GsnParams, ctl: &SeriesControl) -> f64 {
    let GsnParams { mu, sigma, p } = *params;
    if p == 1.0 {
        let z = (x - mu) / sigma;
        return (-0.5 * (LN_2PI + z * z)).exp() / sigma;
    }
    let ln_1mp = (1.0 - p).ln();
    let mut lw = Vec::with_capacity(32);
    let mut running = f64::NEG_INFINITY;
    let mut peak = f64::NEG_INFINITY;
    for k in 1..=ctl.k_max {
        let kf = k as f64;
        let z = (x - kf * mu) / (sigma * kf.sqrt());
        let m_k = -0.5 * z * z - 0.5 * kf.ln();
        let w_k = (kf - 1.0) * ln_1mp + m_k;
        lw.push(w_k);
        if ctl.paper_mode {
            continue;
        }
        running = crate::linalg::logaddexp(running, w_k);
        let past_peak = m_k <= peak;
        peak = peak.max(m_k);
        if k >= 8 && past_peak {
            let log_tail = kf * ln_1mp + peak + ((kf + 2.0) / (p * p)).ln();
            if log_tail < ctl.rel_tol.ln() + running {
                break;
            }
        }
    }
    let lse = logsumexp(&lw).expect("non-empty by construction");
    (p.ln() - sigma.ln() - 0.5 * LN_2PI + lse).exp()
}

/// Moment generating function
/// `p e^{mu t + sigma^2 t^2 / 2} / (1 - (1-p) e^{mu t + sigma^2 t^2 / 2})`
/// on the region where `2 mu t + sigma^2 t^2 + 2 ln(1-p) < 0`; the plain
/// Gaussian MGF at `p = 1`.
pub fn gsn_mgf(t: f64, params: &GsnParams) -> Result<f64> {
    let GsnParams { mu, sigma, p } = *params;
    let g = mu * t + 0.5 * sigma * sigma * t * t;
    if p == 1.0 {
        return Ok(g.exp());
    }
    if 2.0 * g + 2.0 * (1.0 - p).ln() >= 0.0 {
        return Err(Error::OutsideDomain);
    }
    let e = g.exp();
    Ok(p * e / (1.0 - (1.0 - p) * e))
}

/// Closed-form moments via the raw moments of the geometric count
/// `E N^m = (sum_j A(m, j) q^j) / p^m` (Eulerian weights, `q = 1 - p`),
/// composed with the conditional normal moments of the sum.
pub fn gsn_moments(params: &GsnParams) -> GsnMoments {
    let GsnParams { mu, sigma, p } = *params;
    let q = 1.0 - p;
    let s2 = sigma * sigma;
    let n1 = 1.0 / p;
    let n2 = (1.0 + q) / (p * p);
    let n3 = (1.0 + 4.0 * q + q * q) / (p * p * p);
    let n4 = (1.0 + 11.0 * q + 11.0 * q * q + q * q * q) / (p * p * p * p);

    let ex = mu * n1;
    let ex2 = mu * mu * n2 + s2 * n1;
    let ex3 = mu * mu * mu * n3 + 3.0 * mu * s2 * n2;
    let ex4 = mu * mu * mu * mu * n4 + 6.0 * mu * mu * s2 * n3 + 3.0 * s2 * s2 * n2;

    let variance = ex2 - ex * ex;
    let m3 = ex3 - 3.0 * ex2 * ex + 2.0 * ex * ex * ex;
    let m4 = ex4 - 4.0 * ex3 * ex + 6.0 * ex2 * ex * ex - 3.0 * ex * ex * ex * ex;
    GsnMoments {
        mean: ex,
        variance,
        skewness: m3 / variance.powf(1.5),
        kurtosis: m4 / (variance * variance),
    }
}
