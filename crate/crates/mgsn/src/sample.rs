//! Reproducible random generation: the direct geometric-sum sampler plus
//! the two decomposition-based samplers, all driven by a seedable,
//! splittable counter-based stream.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Gamma, Poisson, StandardNormal};

use crate::dist::MgsnParams;
use crate::error::{Error, Result};
use crate::fit::DataMatrix;

/// Name of the pinned generator, recorded in run manifests.
pub const RNG_ALGORITHM: &str = "chacha12";
/// Version of the crate providing the generator, recorded alongside.
pub const RNG_VERSION: &str = "rand_chacha 0.3";

/// A seeded random stream. Identical `(seed, stream_id)` pairs reproduce
/// identical draw sequences bit-for-bit on every platform; distinct
/// stream ids give statistically independent streams, one per worker.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: ChaCha12Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_id);
        Self { seed, stream_id, rng }
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Uniform draw on (0, 1]; the open lower end protects `ln(u)`.
    #[inline]
    fn uniform_open(&mut self) -> f64 {
        1.0 - self.rng.gen::<f64>()
    }

    #[inline]
    fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

/// Geometric draw on {1, 2, ...} with success probability `p`, by
/// inversion: `floor(ln U / ln(1-p)) + 1`. Deterministically 1 at `p = 1`.
pub fn sample_geometric(rng: &mut RngStream, p: f64) -> Result<u64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1], got {p}")));
    }
    if p == 1.0 {
        return Ok(1);
    }
    let u = rng.uniform_open();
    let n = (u.ln() / (1.0 - p).ln()).floor() + 1.0;
    Ok(n as u64)
}

/// One multivariate normal draw `N_d(center + scale * L z, .)` given the
/// lower Cholesky factor `L` of the step dispersion.
fn normal_step(rng: &mut RngStream, params: &MgsnParams, count: f64, out: &mut [f64]) {
    let d = params.dim();
    let chol = params.chol();
    let z: Vec<f64> = (0..d).map(|_| rng.standard_normal()).collect();
    let scale = count.sqrt();
    for i in 0..d {
        let mut acc = 0.0;
        for j in 0..=i {
            acc += chol.lower(i, j) * z[j];
        }
        out[i] = count * params.mu()[i] + scale * acc;
    }
}

/// `n` independent draws by the direct construction: a geometric count
/// `N`, then one draw from `N_d(N mu, N Sigma)`.
pub fn sample_mgsn(rng: &mut RngStream, params: &MgsnParams, n: usize) -> DataMatrix {
    let d = params.dim();
    let mut values = vec![0.0; n * d];
    for i in 0..n {
        let count = sample_geometric(rng, params.p()).expect("validated p") as f64;
        normal_step(rng, params, count, &mut values[i * d..(i + 1) * d]);
    }
    let labels = (1..=d).map(|j| format!("x{j}")).collect();
    DataMatrix::new(values, n, d, labels).expect("finite draws")
}

/// Logarithmic-series draw with `P(Z = k) = (1-p)^k / (lambda k)`,
/// `lambda = -ln p`, by sequential CDF inversion; the running term is
/// updated incrementally rather than recomputed.
pub fn sample_logarithmic(rng: &mut RngStream, p: f64) -> Result<u64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
    }
    let lambda = -p.ln();
    let q = 1.0 - p;
    let u = rng.uniform_open();
    let mut term = q / lambda; // k = 1
    let mut cum = term;
    let mut k = 1u64;
    // p >= 0.05 keeps k below ~100; the cap only guards pathological p
    while cum < u && k < 100_000 {
        term *= q * k as f64 / (k + 1) as f64;
        cum += term;
        k += 1;
    }
    Ok(k)
}

/// Negative-binomial draw with real-valued order `r` and MGF
/// `((1-p) / (1 - p e^t))^r`, realized as Poisson(Lambda) with
/// `Lambda ~ Gamma(shape r, scale p / (1-p))` so that non-integer orders
/// are exact in distribution.
pub fn sample_negbin_real(rng: &mut RngStream, r: f64, p: f64) -> Result<u64> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("r must be > 0, got {r}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!("p must lie in (0, 1), got {p}")));
    }
    let gamma = Gamma::new(r, p / (1.0 - p))
        .map_err(|e| Error::InvalidParameter(format!("gamma mixing draw: {e}")))?;
    let lambda: f64 = gamma.sample(&mut rng.rng);
    if lambda <= 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(lambda)
        .map_err(|e| Error::InvalidParameter(format!("poisson draw: {e}")))?;
    let t: f64 = poisson.sample(&mut rng.rng);
    Ok(t as u64)
}

/// One draw assembled from `n_parts` independent infinitely-divisible
/// components: part k is a sum of `1 + n_parts * T_k` normal steps of
/// size `1/n_parts`, with `T_k` negative-binomial of order `1/n_parts`
/// and MGF parameter `1 - p`.
pub fn sample_decomp1(rng: &mut RngStream, params: &MgsnParams, n_parts: usize) -> Result<Vec<f64>> {
    if params.p() >= 1.0 {
        return Err(Error::InvalidParameter("decomposition sampler needs p < 1".into()));
    }
    if n_parts == 0 {
        return Err(Error::InvalidParameter("n_parts must be >= 1".into()));
    }
    let d = params.dim();
    let r = 1.0 / n_parts as f64;
    let mut total = vec![0.0; d];
    let mut step = vec![0.0; d];
    for _ in 0..n_parts {
        let t = sample_negbin_real(rng, r, 1.0 - params.p())?;
        let steps = 1 + n_parts as u64 * t;
        for _ in 0..steps {
            normal_step(rng, params, r, &mut step);
            for i in 0..d {
                total[i] += step[i];
            }
        }
    }
    Ok(total)
}

/// One draw assembled as a single normal step plus a Poisson(-ln p)
/// number of logarithmic-mixed normal components.
pub fn sample_decomp2(rng: &mut RngStream, params: &MgsnParams) -> Result<Vec<f64>> {
    if params.p() >= 1.0 {
        return Err(Error::InvalidParameter("decomposition sampler needs p < 1".into()));
    }
    let d = params.dim();
    let lambda = -params.p().ln();
    let poisson = Poisson::new(lambda)
        .map_err(|e| Error::InvalidParameter(format!("poisson draw: {e}")))?;
    let q_draws: f64 = poisson.sample(&mut rng.rng);
    let mut total = vec![0.0; d];
    normal_step(rng, params, 1.0, &mut total);
    let mut step = vec![0.0; d];
    for _ in 0..q_draws as u64 {
        let z = sample_logarithmic(rng, params.p())?;
        normal_step(rng, params, z as f64, &mut step);
        for i in 0..d {
            total[i] += step[i];
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;

    #[test]
    fn geometric_p_one_is_degenerate() {
        let mut rng = RngStream::new(1, 0);
        for _ in 0..100 {
            assert_eq!(sample_geometric(&mut rng, 1.0).unwrap(), 1);
        }
    }

    #[test]
    fn geometric_empirical_mean() {
        let mut rng = RngStream::new(7, 0);
        let n = 1_000_000;
        let sum: u64 = (0..n).map(|_| sample_geometric(&mut rng, 0.5).unwrap()).sum();
        let mean = sum as f64 / n as f64;
        // Var = (1-p)/p^2 = 2, se = sqrt(2/n)
        let se = (2.0 / n as f64).sqrt();
        assert!((mean - 2.0).abs() < 3.0 * se, "mean = {mean}");
    }

    #[test]
    fn geometric_pmf_at_one() {
        let mut rng = RngStream::new(11, 3);
        let n = 1_000_000;
        let hits = (0..n).filter(|_| sample_geometric(&mut rng, 0.25).unwrap() == 1).count();
        let frac = hits as f64 / n as f64;
        let se = (0.25 * 0.75 / n as f64).sqrt();
        assert!((frac - 0.25).abs() < 3.0 * se, "frac = {frac}");
    }

    #[test]
    fn determinism_bit_for_bit() {
        let params = MgsnParams::new(
            0.5,
            vec![0.0, 1.0],
            SymMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
        )
        .unwrap();
        let mut a = RngStream::new(42, 9);
        let mut b = RngStream::new(42, 9);
        let da = sample_mgsn(&mut a, &params, 64);
        let db = sample_mgsn(&mut b, &params, 64);
        assert_eq!(da.values(), db.values());

        let mut c = RngStream::new(42, 10);
        let dc = sample_mgsn(&mut c, &params, 64);
        assert_ne!(da.values(), dc.values());
    }

    #[test]
    fn logarithmic_pmf_and_mean() {
        let mut rng = RngStream::new(5, 0);
        let n = 1_000_000;
        let mut ones = 0usize;
        let mut sum = 0u64;
        for _ in 0..n {
            let z = sample_logarithmic(&mut rng, 0.5).unwrap();
            if z == 1 {
                ones += 1;
            }
            sum += z;
        }
        let p1 = 0.5 / (2.0_f64.ln());
        let frac = ones as f64 / n as f64;
        assert!((frac - p1).abs() < 3.0 * (p1 * (1.0 - p1) / n as f64).sqrt(), "frac = {frac}");
        let mean = sum as f64 / n as f64;
        let expect = 0.5 / (0.5 * 2.0_f64.ln());
        // second moment (1-p)/(lambda p^2) gives the variance bound
        let var = (1.0 - 0.5) / (2.0_f64.ln() * 0.25) - expect * expect;
        assert!((mean - expect).abs() < 3.0 * (var / n as f64).sqrt(), "mean = {mean}");
    }

    #[test]
    fn logarithmic_mass_collapses_near_one() {
        let mut rng = RngStream::new(6, 0);
        let n = 100_000;
        let ones = (0..n).filter(|_| sample_logarithmic(&mut rng, 0.999).unwrap() == 1).count();
        assert!(ones as f64 / n as f64 > 0.999);
    }

    #[test]
    fn negbin_geometric_link() {
        // order 1 with mgf parameter 1/2: T + 1 is geometric(1/2)
        let mut rng = RngStream::new(9, 0);
        let n = 1_000_000;
        let sum: u64 = (0..n).map(|_| sample_negbin_real(&mut rng, 1.0, 0.5).unwrap()).sum();
        let mean = sum as f64 / n as f64;
        // mean r p/(1-p) = 1, variance r p/(1-p)^2 = 2
        assert!((mean - 1.0).abs() < 3.0 * (2.0 / n as f64).sqrt(), "mean = {mean}");
    }

    #[test]
    fn negbin_non_integer_order() {
        let mut rng = RngStream::new(10, 0);
        let n = 1_000_000;
        let sum: u64 = (0..n).map(|_| sample_negbin_real(&mut rng, 0.5, 0.5).unwrap()).sum();
        let mean = sum as f64 / n as f64;
        // mean 0.5, variance r p/(1-p)^2 = 1
        assert!((mean - 0.5).abs() < 3.0 * (1.0 / n as f64).sqrt(), "mean = {mean}");
    }

    #[test]
    fn negbin_mgf_oracle() {
        let mut rng = RngStream::new(12, 0);
        let n = 1_000_000;
        let (r, p, t) = (0.25, 0.5, 0.2);
        let mut acc = 0.0;
        let mut acc2 = 0.0;
        for _ in 0..n {
            let v = (t * sample_negbin_real(&mut rng, r, p).unwrap() as f64).exp();
            acc += v;
            acc2 += v * v;
        }
        let emp = acc / n as f64;
        let theo = ((1.0 - p) / (1.0 - p * t.exp())).powf(r);
        let se = ((acc2 / n as f64 - emp * emp) / n as f64).sqrt();
        assert!((emp - theo).abs() < 3.0 * se, "emp = {emp}, theo = {theo}");
    }
}
