//! EM behavior: ascent of the observed log-likelihood, local maximality
//! of the M-step, profile-trace structure, nesting and equivariance.

use mgsn::{
    cholesky, em_e_step, em_fit_diag, em_fit_fixed_p, em_fit_mu_zero, em_m_step, observed_loglik,
    profile_fit, sample_mgsn, DataMatrix, EmControl, MgsnParams, RngStream, SeriesControl,
    SymMatrix,
};

fn synthetic(seed: u64, n: usize, d: usize, p: f64) -> (DataMatrix, MgsnParams) {
    let mut rows = Vec::new();
    for i in 0..d {
        let mut row = vec![0.0; d];
        row[i] = 1.0 + 0.5 * i as f64;
        for j in 0..d {
            if i != j {
                row[j] = 0.3 / (1.0 + (i as f64 - j as f64).abs());
            }
        }
        rows.push(row);
    }
    let sigma = SymMatrix::from_rows(&rows).unwrap();
    let mu: Vec<f64> = (0..d).map(|i| 0.5 * (i as f64 + 1.0)).collect();
    let params = MgsnParams::new(p, mu, sigma).unwrap();
    let mut rng = RngStream::new(seed, 0);
    (sample_mgsn(&mut rng, &params, n), params)
}

#[test]
fn em_ascends_for_all_variants() {
    let sctl = SeriesControl::default();
    for (seed, d, p) in [(1u64, 1usize, 0.3), (2, 2, 0.6), (3, 2, 0.9), (4, 4, 0.6)] {
        let (data, _) = synthetic(seed, 80, d, p);
        // manual unconstrained iteration with a per-step likelihood trace
        let mut mu = data.sample_mean();
        let mut sigma = data.sample_cov().unwrap();
        let mut last = f64::NEG_INFINITY;
        for _ in 0..40 {
            let params = MgsnParams::new(p, mu.clone(), sigma.clone()).unwrap();
            let es = em_e_step(&data, &params, &sctl).unwrap();
            let ms = em_m_step(&data, &es.a, &es.b, 1e-10).unwrap();
            mu = ms.mu;
            sigma = ms.sigma;
            let ll = observed_loglik(
                &data,
                &MgsnParams::new(p, mu.clone(), sigma.clone()).unwrap(),
                &sctl,
            )
            .unwrap();
            assert!(ll >= last - 1e-8, "descent at d={d} p={p}: {last} -> {ll}");
            last = ll;
        }
    }
}

#[test]
fn m_step_is_local_max_of_q() {
    // Q(theta) = -n/2 ln|Sigma| - 1/2 tr(Sigma^{-1} B(mu)) with the
    // bracketed matrix B; the M-step output should beat random nudges
    let (data, _) = synthetic(9, 60, 2, 0.5);
    let n = data.n_rows();
    let d = data.n_cols();
    let mut state = 12345u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let a: Vec<f64> = (0..n).map(|_| 1.0 + next().abs()).collect();
    let b: Vec<f64> = (0..n).map(|_| 1.0 / (1.0 + next().abs())).collect();
    let q_value = |mu: &[f64], sigma: &SymMatrix| -> f64 {
        let f = cholesky(sigma).unwrap();
        let inv = f.inverse();
        let mut bracket = vec![0.0; d * d];
        let a_sum: f64 = a.iter().sum();
        for r in 0..n {
            let x = data.row(r);
            for i in 0..d {
                for j in 0..d {
                    bracket[i * d + j] +=
                        b[r] * x[i] * x[j] - x[i] * mu[j] - mu[i] * x[j];
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                bracket[i * d + j] += a_sum * mu[i] * mu[j];
            }
        }
        let mut tr = 0.0;
        for i in 0..d {
            for j in 0..d {
                tr += inv.get(i, j) * bracket[j * d + i];
            }
        }
        -(n as f64) * 0.5 * f.logdet() - 0.5 * tr
    };
    let ms = em_m_step(&data, &a, &b, 1e-10).unwrap();
    let q_star = q_value(&ms.mu, &ms.sigma);
    for _ in 0..100 {
        let mu_p: Vec<f64> = ms.mu.iter().map(|m| m + 0.05 * next()).collect();
        let mut pert = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..=i {
                let e = 0.05 * next();
                pert[i * d + j] = e;
                pert[j * d + i] = e;
            }
        }
        let sigma_p = SymMatrix::from_row_major(
            d,
            ms.sigma
                .as_slice()
                .iter()
                .zip(&pert)
                .map(|(s, e)| s + e)
                .collect(),
        )
        .unwrap();
        if cholesky(&sigma_p).is_err() {
            continue;
        }
        let q = q_value(&mu_p, &sigma_p);
        assert!(q <= q_star + 1e-9, "perturbation beat the M-step: {q} > {q_star}");
    }
}

#[test]
fn profile_trace_is_complete_and_maximized() {
    let (data, _) = synthetic(17, 100, 2, 0.5);
    let grid = mgsn::default_p_grid();
    let fit = profile_fit(&data, &grid, &EmControl::default(), &SeriesControl::default()).unwrap();
    assert!(fit.profile_trace.len() >= grid.len());
    assert!(fit.profile_trace.windows(2).all(|w| w[0].0 < w[1].0));
    assert!(fit.profile_trace.iter().all(|(_, ll)| ll.is_finite()));
    let max = fit.profile_trace.iter().map(|(_, ll)| *ll).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(fit.loglik, max);
    assert!(fit.params.p() > 0.0 && fit.params.p() <= 1.0);
}

#[test]
fn profile_on_gaussian_truth_prefers_large_p() {
    let sigma = SymMatrix::from_rows(&[vec![1.0, 0.3], vec![0.3, 1.0]]).unwrap();
    let truth = MgsnParams::new(1.0, vec![1.0, -1.0], sigma).unwrap();
    let grid = mgsn::default_p_grid();
    let mut wins = 0;
    for rep in 0..20 {
        let mut rng = RngStream::new(400, rep);
        let data = sample_mgsn(&mut rng, &truth, 150);
        let fit =
            profile_fit(&data, &grid, &EmControl::default(), &SeriesControl::default()).unwrap();
        if fit.params.p() >= 0.95 {
            wins += 1;
        }
    }
    assert!(wins > 10, "only {wins}/20 runs recovered a near-Gaussian p");
}

#[test]
fn constrained_profiles_nest_under_unconstrained() {
    let (data, _) = synthetic(23, 90, 2, 0.5);
    let ctl = EmControl::default();
    let sctl = SeriesControl::default();
    let grid = mgsn::default_p_grid();
    let free = profile_fit(&data, &grid, &ctl, &sctl).unwrap();
    let gauss = mgsn::gaussian_fit(&data).unwrap();
    assert!(gauss.loglik <= free.loglik + 1e-6);
    for p in [0.4, 0.7] {
        let fixed = em_fit_fixed_p(&data, p, None, &ctl, &sctl).unwrap();
        let muz = em_fit_mu_zero(&data, p, &ctl, &sctl).unwrap();
        let diag = em_fit_diag(&data, p, &ctl, &sctl).unwrap();
        assert!(muz.loglik <= fixed.loglik + 1e-6);
        assert!(diag.loglik <= fixed.loglik + 1e-6);
        assert!(fixed.loglik <= free.loglik + 1e-6);
    }
}

#[test]
fn fixed_p_fit_is_scale_equivariant() {
    // fixed iteration count makes the equivariance exact up to rounding;
    // a relative-change stopping rule would halt the two runs at
    // different iterations because the likelihood shifts by -n d ln(c)
    let (data, _) = synthetic(31, 80, 2, 0.6);
    let ctl = EmControl::paper();
    let sctl = SeriesControl::default();
    let c = 100.0;
    let scaled = data.scaled(c).unwrap();
    let f1 = em_fit_fixed_p(&data, 0.6, None, &ctl, &sctl).unwrap();
    let f2 = em_fit_fixed_p(&scaled, 0.6, None, &ctl, &sctl).unwrap();
    for i in 0..2 {
        assert!(
            (f2.params.mu()[i] - c * f1.params.mu()[i]).abs() < 1e-8 * c,
            "mu not equivariant: {} vs {}",
            f2.params.mu()[i],
            c * f1.params.mu()[i]
        );
        for j in 0..2 {
            assert!(
                (f2.params.sigma().get(i, j) - c * c * f1.params.sigma().get(i, j)).abs()
                    < 1e-8 * c * c,
                "sigma not equivariant"
            );
        }
    }
    let n = data.n_rows() as f64;
    let d = data.n_cols() as f64;
    assert!(
        (f2.loglik - (f1.loglik - n * d * c.ln())).abs() < 1e-6,
        "loglik shift mismatch: {} vs {}",
        f2.loglik,
        f1.loglik - n * d * c.ln()
    );
}

#[test]
fn moment_matching_init_reaches_same_fixed_point() {
    let (data, _) = synthetic(37, 120, 2, 0.4);
    let sctl = SeriesControl::default();
    let default_ctl = EmControl::default();
    let mm_ctl = EmControl { init: mgsn::InitMethod::MomentMatching, ..EmControl::default() };
    let f1 = em_fit_fixed_p(&data, 0.4, None, &default_ctl, &sctl).unwrap();
    let f2 = em_fit_fixed_p(&data, 0.4, None, &mm_ctl, &sctl).unwrap();
    assert!((f1.loglik - f2.loglik).abs() < 1e-5, "{} vs {}", f1.loglik, f2.loglik);
}
