use mgcpp_core::point_process::{
    estimate_lambda_bar, estimate_sigma_sq, hawkes_count_covariance, hawkes_limit_params,
    read_binary, simulate_hawkes, simulate_poisson, window_count_covariance, write_binary,
    HawkesSpec,
};

#[test]
fn poisson_day_counts_in_band() {
    // λ = 0.1366/s over a 23400 s day: mean 3196.4, sd 56.5
    let (lambda, horizon) = (0.1366, 23_400.0);
    let mean = lambda * horizon;
    let days = 200;
    let counts: Vec<f64> = (0..days)
        .map(|s| simulate_poisson(&[lambda], horizon, s).unwrap().counts()[0] as f64)
        .collect();
    for c in &counts {
        assert!((c - mean).abs() < 5.0 * mean.sqrt(), "count {c}");
    }
    let avg = counts.iter().sum::<f64>() / days as f64;
    assert!(
        (avg - mean).abs() < 4.0 * (mean / days as f64).sqrt(),
        "mean {avg}"
    );
}

fn ks_exponential(gaps: &[f64], rate: f64) -> f64 {
    let mut g = gaps.to_vec();
    g.sort_by(f64::total_cmp);
    let n = g.len() as f64;
    g.iter()
        .enumerate()
        .map(|(i, x)| {
            let f = 1.0 - (-rate * x).exp();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn hawkes_without_excitation_is_poisson() {
    let spec = HawkesSpec::univariate(2.0, 0.0, 1.0).unwrap();
    let ev = simulate_hawkes(&spec, 5_000.0, 11).unwrap();
    let t = ev.times(0);
    let gaps: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let d = ks_exponential(&gaps, 2.0);
    // 1% critical value of the one-sample KS statistic
    assert!(d * (gaps.len() as f64).sqrt() < 1.63, "KS D = {d}");
    let lam = estimate_lambda_bar(&ev)[0];
    assert!((lam - 2.0).abs() < 4.0 * (2.0f64 / 5_000.0).sqrt());
}

#[test]
fn excited_gaps_are_not_exponential() {
    let spec = HawkesSpec::univariate(1.0, 0.5, 1.0).unwrap();
    let ev = simulate_hawkes(&spec, 5_000.0, 11).unwrap();
    let gaps: Vec<f64> = ev.times(0).windows(2).map(|w| w[1] - w[0]).collect();
    let rate = gaps.len() as f64 / gaps.iter().sum::<f64>();
    assert!(ks_exponential(&gaps, rate) * (gaps.len() as f64).sqrt() > 1.63);
}

#[test]
fn bivariate_hawkes_rates() {
    let spec = HawkesSpec::new(
        vec![0.5, 0.3],
        vec![vec![0.4, 0.2], vec![0.1, 0.3]],
        vec![vec![1.0, 1.0], vec![1.0, 1.0]],
    )
    .unwrap();
    let limits = hawkes_limit_params(&spec).unwrap();
    let horizon = 200_000.0;
    let ev = simulate_hawkes(&spec, horizon, 5).unwrap();
    let lam = estimate_lambda_bar(&ev);
    for i in 0..2 {
        let se = (limits.sigma_sq[i] / horizon).sqrt();
        assert!(
            (lam[i] - limits.lambda_bar[i]).abs() < 4.0 * se,
            "dim {i}: {} vs {}",
            lam[i],
            limits.lambda_bar[i]
        );
    }
}

#[test]
fn cross_excitation_correlates_counts() {
    let beta = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
    let coupled = HawkesSpec::new(
        vec![1.0, 1.0],
        vec![vec![0.0, 0.4], vec![0.4, 0.0]],
        beta.clone(),
    )
    .unwrap();
    let cov = hawkes_count_covariance(&coupled).unwrap();
    let limit_corr = cov[(0, 1)] / (cov[(0, 0)] * cov[(1, 1)]).sqrt();
    // (I-K)^{-1} ∝ [[1, .4], [.4, 1]], so corr = 0.8 / 1.16
    assert!((limit_corr - 0.8 / 1.16).abs() < 1e-12);

    let corr = |spec: &HawkesSpec| {
        let ev = simulate_hawkes(spec, 200_000.0, 3).unwrap();
        let c = window_count_covariance(&ev, 50.0).unwrap();
        c[0][1] / (c[0][0] * c[1][1]).sqrt()
    };
    let coupled_corr = corr(&coupled);
    assert!(
        (coupled_corr - limit_corr).abs() < 0.08,
        "corr {coupled_corr}"
    );
    let independent =
        HawkesSpec::new(vec![1.0, 1.0], vec![vec![0.4, 0.0], vec![0.0, 0.4]], beta).unwrap();
    assert!(corr(&independent).abs() < 0.07);
}

#[test]
fn finite_window_count_variance() {
    // λ=1, α=.5, β=1: Var N(w) / w = 8 - 12 (1 - e^{-w/2}) / w
    let spec = HawkesSpec::univariate(1.0, 0.5, 1.0).unwrap();
    let ev = simulate_hawkes(&spec, 200_000.0, 21).unwrap();
    for w in [2.0f64, 20.0] {
        let expect = 8.0 - 12.0 * (1.0 - (-w / 2.0).exp()) / w;
        let got = estimate_sigma_sq(&ev, w).unwrap()[0];
        assert!(
            (got - expect).abs() < 0.06 * expect,
            "w={w}: {got} vs {expect}"
        );
    }
}

#[test]
fn simulated_streams_survive_binary_round_trip() {
    let spec = HawkesSpec::univariate(1.0, 0.5, 1.0).unwrap();
    let ev = simulate_hawkes(&spec, 1_000.0, 2).unwrap();
    let mut buf = Vec::new();
    write_binary(&ev, &mut buf).unwrap();
    assert_eq!(read_binary(&buf[..]).unwrap(), ev);
}

#[test]
fn unstable_specs_are_rejected() {
    let err = HawkesSpec::new(
        vec![1.0, 1.0],
        vec![vec![0.6, 0.6], vec![0.6, 0.6]],
        vec![vec![1.0, 1.0], vec![1.0, 1.0]],
    )
    .unwrap_err();
    assert!(matches!(err, mgcpp_core::Error::Unstable(r) if (r - 1.2).abs() < 1e-9));
}
