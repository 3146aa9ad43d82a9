use gle_core::dynamics::{simulate_paths, GaussianStream, InitialCondition, IntegratorScheme, PathOptions, Trajectory};
use gle_core::equilibrium::BootstrapOptions;
use gle_core::estimators::*;
use gle_core::{GleError, GleModel, Potential, State};
use proptest::prelude::*;

fn synthetic(q: Vec<f64>, p: Vec<f64>, dt: f64, replica: u64) -> Trajectory {
    let n = q.len();
    Trajectory {
        times: (0..n).map(|k| k as f64 * dt).collect(),
        states: (0..n)
            .map(|k| State {
                q: vec![q[k]],
                p: vec![p[k]],
                z: vec![0.0],
            })
            .collect(),
        lifted_q: q,
        replica_id: replica,
        rng_stream_id: replica,
        seed: 1,
        model_fingerprint: "synthetic".into(),
    }
}

fn brownian(n_rep: usize, n: usize, dt: f64, d: f64, seed: u64) -> Vec<Trajectory> {
    (0..n_rep)
        .map(|r| {
            let mut s = GaussianStream::new(seed, r as u64, 2);
            let mut q = vec![0.0; n];
            for k in 1..n {
                q[k] = q[k - 1] + (2.0 * d * dt).sqrt() * s.normal();
            }
            synthetic(q, vec![0.0; n], dt, r as u64)
        })
        .collect()
}

fn ou_velocity(n_rep: usize, n: usize, dt: f64, gamma: f64, seed: u64) -> Vec<Trajectory> {
    let a = (-gamma * dt).exp();
    let b = (1.0 - a * a).sqrt();
    (0..n_rep)
        .map(|r| {
            let mut s = GaussianStream::new(seed, r as u64, 2);
            let mut p = vec![s.normal(); n];
            let mut q = vec![0.0; n];
            for k in 1..n {
                p[k] = a * p[k - 1] + b * s.normal();
                q[k] = q[k - 1] + 0.5 * dt * (p[k] + p[k - 1]);
            }
            synthetic(q, p, dt, r as u64)
        })
        .collect()
}

#[test]
fn msd_on_brownian_paths() {
    let paths = brownian(200, 2000, 0.01, 0.5, 3);
    let opts = MsdOptions {
        window: Some((0.5, 4.0)),
        ..Default::default()
    };
    let est = msd_diffusion(&paths, &opts).unwrap();
    assert!(est.relative_error(0.5) < 0.05, "{est:?}");
    assert!(est.contains(0.5), "{est:?}");
}

#[test]
fn msd_ci_shrinks_with_replicas() {
    let opts = MsdOptions {
        window: Some((0.5, 4.0)),
        ..Default::default()
    };
    let small = msd_diffusion(&brownian(50, 2000, 0.01, 0.5, 4), &opts).unwrap();
    let large = msd_diffusion(&brownian(800, 2000, 0.01, 0.5, 4), &opts).unwrap();
    let ratio = small.half_width() / large.half_width();
    // √16 = 4 up to bootstrap noise
    assert!(ratio > 2.8 && ratio < 5.5, "ratio {ratio}");
}

#[test]
fn msd_rejects_ballistic_motion() {
    let n = 400;
    let q: Vec<f64> = (0..n).map(|k| k as f64 * 0.01).collect();
    let paths = vec![synthetic(q.clone(), vec![1.0; n], 0.01, 0), synthetic(q, vec![1.0; n], 0.01, 1)];
    let auto = msd_diffusion(&paths, &MsdOptions::default()).unwrap_err();
    assert!(matches!(auto, GleError::Estimator(ref m) if m.contains("window too early")));
    let fixed = MsdOptions {
        window: Some((0.1, 0.99)),
        ..Default::default()
    };
    let err = msd_diffusion(&paths, &fixed).unwrap_err();
    assert!(matches!(err, GleError::Estimator(ref m) if m.contains("window too early")), "{err:?}");
}

#[test]
fn green_kubo_on_ou_velocity() {
    let paths = ou_velocity(400, 20_000, 0.01, 2.0, 5);
    let est = green_kubo(
        &paths,
        &GreenKuboOptions {
            horizon: Some(5.0),
            ..Default::default()
        },
    )
    .unwrap();
    assert!(est.relative_error(0.5) < 0.05, "{est:?}");
}

#[test]
fn green_kubo_rejects_persistent_correlation() {
    let n = 400;
    let paths: Vec<_> = (0..3)
        .map(|r| synthetic((0..n).map(|k| k as f64).collect(), vec![1.0; n], 1.0, r))
        .collect();
    assert!(matches!(green_kubo(&paths, &GreenKuboOptions::default()), Err(GleError::Estimator(_))));
}

#[test]
fn analytic_green_kubo() {
    let one = GleModel::torus(vec![1.0], vec![1.0], 1.0, Potential::free()).unwrap();
    assert!((green_kubo_analytic(&one).unwrap().value - 1.0).abs() < 1e-14);
    let two = GleModel::torus(vec![1.0, 2.0], vec![2.0, 4.0], 1.0, Potential::free()).unwrap();
    assert!((green_kubo_analytic(&two).unwrap().value - 2.0 / 3.0).abs() < 1e-14);
    let cos = GleModel::torus(vec![1.0], vec![1.0], 1.0, Potential::cosine(1.0)).unwrap();
    assert!(green_kubo_analytic(&cos).is_err());
}

#[test]
fn free_gle_msd_and_green_kubo() {
    let model = GleModel::torus(vec![1.0], vec![1.0], 1.0, Potential::free()).unwrap();
    let paths = simulate_paths(
        &model,
        IntegratorScheme::ou_splitting(0.1),
        1000.0,
        200,
        11,
        &InitialCondition::Gibbs,
        PathOptions {
            stride: 2,
            max_total_steps: 10_000_000,
        },
    )
    .unwrap();
    let msd = msd_diffusion(&paths, &MsdOptions::default()).unwrap();
    let gk = green_kubo(&paths, &GreenKuboOptions { horizon: Some(30.0), ..Default::default() }).unwrap();
    assert!(msd.relative_error(1.0) < 0.05, "{msd:?}");
    assert!(gk.relative_error(1.0) < 0.05, "{gk:?}");
    // joint 2σ agreement, half-widths standing in for 2σ
    let joint = (msd.half_width().powi(2) + gk.half_width().powi(2)).sqrt();
    assert!((msd.value - gk.value).abs() <= joint, "{msd:?} {gk:?}");
}

#[test]
fn decay_fit_examples() {
    let t: Vec<f64> = (0..=50).map(|i| i as f64 * 0.1).collect();
    let y: Vec<f64> = t.iter().map(|t| (-2.0 * t).exp()).collect();
    let f = fit_exponential_decay(&t, &y, None).unwrap();
    assert!((f.rate - 2.0).abs() < 1e-12 && (f.r2 - 1.0).abs() < 1e-12);
    let f = fit_exponential_decay(&t, &vec![3.0; t.len()], None).unwrap();
    assert!(f.rate.abs() < 1e-14);
    let mut s = GaussianStream::new(9, 0, 2);
    let t: Vec<f64> = (0..50).map(|i| i as f64 * 0.1).collect();
    let y: Vec<f64> = t.iter().map(|t| (-t as f64).exp() * (1.0 + 0.05 * s.normal())).collect();
    let f = fit_exponential_decay(&t, &y, None).unwrap();
    assert!(f.rate > 0.9 && f.rate < 1.1);
    assert!(matches!(fit_exponential_decay(&t[..5], &y[..5], None), Err(GleError::Precondition(_))));
    let mut bad = y.clone();
    bad[3] = 0.0;
    assert!(matches!(fit_exponential_decay(&t, &bad, None), Err(GleError::Estimator(_))));
}

proptest! {
    #[test]
    fn decay_fit_exact_on_exponentials(log_rate in -3.0f64..3.0) {
        let rate = 10f64.powf(log_rate);
        let t: Vec<f64> = (0..20).map(|i| i as f64 * 0.25 / rate).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.5 * (-rate * t).exp()).collect();
        let f = fit_exponential_decay(&t, &y, None).unwrap();
        prop_assert!((f.rate - rate).abs() <= 1e-9 * rate);
    }
}

fn offset(paths: &[Trajectory], dq: f64) -> Vec<Trajectory> {
    paths
        .iter()
        .map(|t| {
            let mut t = t.clone();
            t.lifted_q.iter_mut().for_each(|q| *q += dq);
            t
        })
        .collect()
}

#[test]
fn strong_error_examples() {
    let a = ou_velocity(20, 100, 0.01, 1.0, 2);
    let boot = BootstrapOptions::default();
    assert_eq!(strong_error(&a, &a, 2.0, boot).unwrap().value, 0.0);
    for r in [2.0, 4.0] {
        let e = strong_error(&a, &offset(&a, 0.3), r, boot).unwrap();
        assert!((e.value - 0.3f64.powf(r)).abs() < 1e-12);
    }
    let mut other = a.clone();
    other[0].seed = 99;
    assert!(matches!(strong_error(&a, &other, 2.0, boot), Err(GleError::Precondition(_))));
    let mut other = a.clone();
    other[1].times[5] += 1e-3;
    assert!(matches!(strong_error(&a, &other, 2.0, boot), Err(GleError::Precondition(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn strong_error_symmetric_and_monotone(seed in 0u64..1000, scale in 0.05f64..1.0) {
        let a = ou_velocity(30, 60, 0.05, 1.0, seed);
        let b = ou_velocity(30, 60, 0.05, 1.0, seed + 1)
            .into_iter()
            .zip(&a)
            .map(|(mut t, s)| { t.replica_id = s.replica_id; t.rng_stream_id = s.rng_stream_id; t })
            .collect::<Vec<_>>();
        let boot = BootstrapOptions::default();
        let ab = strong_error(&a, &b, 2.0, boot).unwrap().value;
        let ba = strong_error(&b, &a, 2.0, boot).unwrap().value;
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
        // an independent perturbation of scale s added on top of identical copies
        let mut s = GaussianStream::new(seed, 77, 2);
        let shift: Vec<f64> = (0..a.len()).map(|_| scale * if s.uniform() < 0.5 { -1.0 } else { 1.0 }).collect();
        let pert: Vec<Trajectory> = a.iter().zip(&shift).map(|(t, d)| offset(std::slice::from_ref(t), *d).remove(0)).collect();
        let base = strong_error(&a, &a, 2.0, boot).unwrap().value;
        let bumped = strong_error(&a, &pert, 2.0, boot).unwrap().value;
        prop_assert!(bumped >= base + scale * scale * (1.0 - 1e-9));
    }
}
