use gle_core::dynamics::GaussianStream;
use gle_core::equilibrium::{
    divergence_report, drift_proposal, estimate_fisher, estimate_l1, estimate_relative_entropy, fit_confining_spec,
    lyapunov_drift_check, sample_gibbs, Binning, BootstrapOptions, LyapunovSpec, Marginal,
};
use gle_core::{DomainKind, GleModel, Potential, State};
use proptest::prelude::*;

fn free(beta: f64) -> GleModel {
    GleModel::torus(vec![1.0], vec![1.0], beta, Potential::free()).unwrap()
}

fn shifted_momenta(n: usize, mu: f64, beta: f64, seed: u64) -> Vec<f64> {
    let mut s = GaussianStream::new(seed, 0, 1);
    (0..n).map(|_| mu + s.normal() / beta.sqrt()).collect()
}

#[test]
fn relative_entropy_of_a_shifted_gaussian() {
    let (beta, mu) = (1.0, 0.5);
    let model = free(beta);
    let binning = Binning::with_bins(&model, Marginal::P, 128);
    let x = shifted_momenta(1_000_000, mu, beta, 1);
    let h = estimate_relative_entropy(&x, &model, &binning, BootstrapOptions::default()).unwrap();
    let exact = 0.5 * beta * mu * mu;
    assert!((h.value - exact).abs() <= 0.05 * exact, "{} vs {exact}", h.value);
    assert!(h.lo <= h.value && h.value <= h.hi);
}

#[test]
fn fisher_information_of_a_shifted_gaussian() {
    for (beta, mu) in [(1.0, 0.5), (2.0, 0.3)] {
        let model = free(beta);
        let binning = Binning::with_bins(&model, Marginal::P, 128);
        let x = shifted_momenta(1_000_000, mu, beta, 2);
        let f = estimate_fisher(&x, &model, &binning, BootstrapOptions::default()).unwrap();
        let exact = beta * beta * mu * mu;
        assert!((f.value - exact).abs() <= 0.05 * exact, "beta {beta}: {} vs {exact}", f.value);
    }
}

#[test]
fn gibbs_samples_are_close_to_the_reference() {
    let model = GleModel::torus(vec![1.0], vec![1.0], 1.0, Potential::cosine(1.0)).unwrap();
    let states = sample_gibbs(&model, 200_000, 3).unwrap().states;
    for marginal in [Marginal::Q, Marginal::P] {
        let x: Vec<f64> = states
            .iter()
            .map(|s| if marginal == Marginal::Q { s.q[0] } else { s.p[0] })
            .collect();
        let binning = Binning::default_for(&model, marginal);
        let h = estimate_relative_entropy(&x, &model, &binning, BootstrapOptions::default()).unwrap();
        assert!(h.lo <= 1e-3, "{marginal:?}: {h:?}");
        assert!(estimate_l1(&x, &model, &binning).unwrap() < 0.02);
    }
}

#[test]
fn pinsker_holds_for_binned_distributions() {
    let model = free(1.0);
    let binning = Binning::with_bins(&model, Marginal::P, 64);
    for (k, mu) in [0.0, 0.1, 0.5, 1.0, 2.0].into_iter().enumerate() {
        let x = shifted_momenta(50_000, mu, 1.0, 10 + k as u64);
        let rep = divergence_report(&x, &model, &binning, BootstrapOptions::default()).unwrap();
        assert!(rep.pinsker_holds, "mu {mu}: {rep:?}");
    }
}

/// `LG` by central differences of `G`.
fn generator_fd(model: &GleModel, spec: &LyapunovSpec, x: &State) -> f64 {
    let h = 1e-4;
    let g = |q: f64, p: f64, r: f64| spec.g(model, &State { q: vec![q], p: vec![p], z: vec![r] });
    let (q, p, r) = (x.q[0], x.p[0], x.z[0]);
    let gq = (g(q + h, p, r) - g(q - h, p, r)) / (2.0 * h);
    let gp = (g(q, p + h, r) - g(q, p - h, r)) / (2.0 * h);
    let gr = (g(q, p, r + h) - g(q, p, r - h)) / (2.0 * h);
    let grr = (g(q, p, r + h) - 2.0 * g(q, p, r) + g(q, p, r - h)) / (h * h);
    let (lam, alpha) = (model.lambda[0], model.alpha[0]);
    let v1 = model.potential.profile_derivative(q, 1);
    p * gq + (-v1 + lam * r) * gp + (-lam * p - alpha * r) * gr + alpha / model.beta * grr
}

fn forms() -> Vec<(GleModel, LyapunovSpec)> {
    let torus = GleModel::torus(vec![1.0], vec![1.0], 1.0, Potential::cosine(1.0)).unwrap();
    let conf = GleModel::new(1, vec![1.0], vec![1.0], 1.0, Potential::quadratic(1.0), DomainKind::Confining).unwrap();
    let spec = fit_confining_spec(&conf).unwrap();
    vec![(torus, LyapunovSpec::torus_reference()), (conf, spec)]
}

#[test]
fn closed_form_drift_matches_finite_differences() {
    for (model, spec) in forms() {
        for x in drift_proposal(&model, 500, 5.0, 8) {
            let (a, b) = (spec.lg(&model, &x), generator_fd(&model, &spec, &x));
            assert!((a - b).abs() <= 1e-4 * (1.0 + a.abs()), "{x:?}: {a} vs {b}");
        }
    }
}

#[test]
fn lyapunov_functions_are_norm_like() {
    for (model, spec) in forms() {
        let pts = drift_proposal(&model, 5_000, 20.0, 9);
        for x in &pts {
            assert!(spec.g(&model, x) >= 1.0, "{x:?}");
        }
        let rep = lyapunov_drift_check(&model, &spec, &pts).unwrap();
        assert!(rep.min_g >= 1.0);
        assert!(rep.passed, "{rep:?}");
    }
}

proptest! {
    #[test]
    fn lyapunov_grows_along_rays(q in 0.0..6.28f64, p in -1.0..1.0f64, r in -1.0..1.0f64) {
        prop_assume!(p * p + r * r > 0.01);
        for (model, spec) in forms() {
            let q0 = if model.domain_kind == DomainKind::Torus { q } else { q - 3.14 };
            let at = |s: f64| {
                let q = if model.domain_kind == DomainKind::Torus { q0 } else { s * q0 };
                spec.g(&model, &State { q: vec![q], p: vec![s * p], z: vec![s * r] })
            };
            let mut prev = at(10.0);
            for k in 11..40 {
                let next = at(k as f64);
                prop_assert!(next > prev);
                prev = next;
            }
        }
    }
}
