//! Fast structural suite, the symbolic commutator table and the friction formula.

use nalgebra::DMatrix;
use num_rational::Rational64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::RunConfig;
use crate::dynamics::{Ensemble, Integrator, IntegratorScheme, LangevinSystem};
use crate::equilibrium::sample_gibbs;
use crate::error::Result;
use crate::estimators::green_kubo_analytic;
use crate::model::{canonical_embedding, check_fdt, kernel_mass, DomainKind, GleModel, Potential};
use crate::spectral::{
    assemble_dissipation, assemble_generator, assemble_transport, derivative_ops, diffusion_from_poisson,
    random_smooth_state, semigroup_apply, solve_poisson, PoissonOptions, SpectralBasis,
};
use crate::stats::{mean, variance};
use crate::symbolic::{commutator_table, generator_decomposition_holds};

use super::relaxation::gibbs_potential_mean;
use super::report::ExperimentReport;

/// Moments must stay within this many standard errors of their Gibbs values.
pub const MOMENT_SIGMAS: f64 = 5.0;

#[derive(Debug, Clone)]
pub struct FrictionCheck {
    pub sets: usize,
    /// Largest relative gap between `kernel_mass` or the limit friction and the exact rational sum.
    pub exact_residual: f64,
    /// Largest relative gap between `β (M⁻¹)_pp` and `1/γ`.
    pub green_kubo_residual: f64,
    pub passed: bool,
}

fn to_rational(x: f64) -> Option<Rational64> {
    Rational64::approximate_float(x).filter(|r| (*r.numer() as f64 / *r.denom() as f64 - x).abs() <= 1e-15 * x.abs())
}

/// Compares `Σ λ²/α` in exact arithmetic with `kernel_mass`, the limit system and the
/// analytic Green–Kubo integral, for `model` (if its constants are rational) and `n_sets`
/// random parameter sets with up to three modes.
pub fn friction_formula_check(model: &GleModel, n_sets: usize, seed: u64) -> Result<FrictionCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf41c);
    let mut sets: Vec<(Vec<f64>, Vec<f64>)> = vec![(model.lambda.clone(), model.alpha.clone())];
    for _ in 0..n_sets {
        let m = rng.random_range(1..=3);
        let lambda = (0..m).map(|_| rng.random_range(1..=24) as f64 / 8.0).collect();
        let alpha = (0..m).map(|_| rng.random_range(1..=32) as f64 / 8.0).collect();
        sets.push((lambda, alpha));
    }
    let (mut exact_res, mut gk_res): (f64, f64) = (0.0, 0.0);
    for (lambda, alpha) in &sets {
        let free = GleModel::torus(lambda.clone(), alpha.clone(), 1.0, Potential::free())?;
        let gamma = kernel_mass(&free);
        let limit = LangevinSystem::limit_of(&free).gamma;
        let exact: Option<Rational64> = lambda
            .iter()
            .zip(alpha)
            .map(|(&l, &a)| Some(to_rational(l)? * to_rational(l)? / to_rational(a)?))
            .sum();
        if let Some(ex) = exact {
            let ex = *ex.numer() as f64 / *ex.denom() as f64;
            exact_res = exact_res.max((gamma - ex).abs() / ex).max((limit - ex).abs() / ex);
        }
        let gk = green_kubo_analytic(&free)?.value * free.beta;
        gk_res = gk_res.max((gk - 1.0 / gamma).abs() * gamma);
    }
    Ok(FrictionCheck {
        sets: sets.len(),
        exact_residual: exact_res,
        green_kubo_residual: gk_res,
        passed: exact_res <= 1e-12 && gk_res <= 1e-12,
    })
}

/// Verifies the eleven bracket relations of the unit operators.
pub fn run_commutators(cfg: &RunConfig) -> Result<ExperimentReport> {
    let mut rep = ExperimentReport::new("commutators", cfg, "symbolic");
    for c in commutator_table() {
        rep.verdict(
            4,
            &c.name,
            c.holds,
            if c.holds { 0.0 } else { 1.0 },
            "exact equality",
            format!("computed {} ; expected {}", c.computed, c.expected),
        );
    }
    rep.value("generator_decomposition", if generator_decomposition_holds() { 1.0 } else { 0.0 });
    rep.note("identities use unit constants with V kept symbolic");
    Ok(rep)
}

fn spectral_model(model: &GleModel) -> GleModel {
    let capable = model.d == 1
        && model.m <= 2
        && (model.domain_kind == DomainKind::Torus || matches!(model.potential, Potential::Quadratic { .. }));
    if capable {
        model.clone()
    } else {
        GleModel::torus(vec![1.0], vec![1.0], 1.0, Potential::cosine(1.0)).expect("valid")
    }
}

fn gibbs_stationarity(rep: &mut ExperimentReport, model: &GleModel, seed: u64) -> Result<()> {
    const N: usize = 20_000;
    const T: f64 = 2.0;
    let fastest = model.alpha.iter().cloned().fold(1.0, f64::max);
    let dt = 0.01 / fastest;
    let steps = (T / dt).round() as u64;
    let sample = sample_gibbs(model, N, seed)?;
    let v_ref = model.d as f64 * gibbs_potential_mean(model)?;
    let kt = 1.0 / model.beta;
    for scheme in [IntegratorScheme::euler_maruyama(dt), IntegratorScheme::ou_splitting(dt)] {
        let mut ens = Ensemble::new(Integrator::new(model, scheme)?, &sample.states, seed ^ 0x9e37)?;
        ens.advance(steps);
        let mut moments: Vec<(String, Vec<f64>, f64)> = Vec::new();
        let sq = |v: Vec<f64>| v.into_iter().map(|x| x * x).collect::<Vec<_>>();
        moments.push(("p^2".into(), sq(ens.momenta(0)), kt));
        for j in 0..model.m {
            moments.push((format!("z{j}^2"), sq(ens.auxiliary(j, 0)), kt));
        }
        let qs: Vec<Vec<f64>> = (0..model.d).map(|i| ens.positions(i)).collect();
        let v: Vec<f64> = (0..ens.len())
            .map(|k| model.potential.eval(&qs.iter().map(|c| c[k]).collect::<Vec<_>>()))
            .collect();
        moments.push(("V".into(), v, v_ref));
        let p = ens.momenta(0);
        let z = ens.auxiliary(0, 0);
        moments.push(("p z".into(), p.iter().zip(&z).map(|(a, b)| a * b).collect(), 0.0));
        let mut worst: f64 = 0.0;
        let mut detail = Vec::new();
        for (name, x, reference) in &moments {
            let se = (variance(x) / x.len() as f64).sqrt().max(1e-12);
            let dev = (mean(x) - reference).abs() / se;
            worst = worst.max(dev);
            detail.push(format!("{name}: {:.5} vs {:.5}", mean(x), reference));
        }
        rep.verdict(
            9,
            &format!("Gibbs moments stationary under {:?}", scheme.kind),
            worst <= MOMENT_SIGMAS,
            worst,
            &format!("<= {MOMENT_SIGMAS} standard errors"),
            format!("{N} samples, t = {T}, dt = {dt}; {}", detail.join(", ")),
        );
    }
    Ok(())
}

/// Invariants that must hold for any admissible model; finishes in seconds.
pub fn run_check(cfg: &RunConfig) -> Result<ExperimentReport> {
    let cfg = cfg.for_kind("check")?;
    let model = cfg.model()?;
    let mut rep = ExperimentReport::new("check", &cfg, &model.fingerprint());

    // fluctuation-dissipation for the auxiliary block and the full (p, z) block
    let (a, c) = canonical_embedding(&model.alpha, model.beta);
    let fdt = check_fdt(&a, &c, model.beta)?;
    let drift = model.drift_block();
    let mut noise = DMatrix::zeros(model.m + 1, model.m + 1);
    for j in 0..model.m {
        noise[(j + 1, j + 1)] = (2.0 * model.alpha[j] / model.beta).sqrt();
    }
    let full = check_fdt(&drift, &noise, model.beta)?;
    rep.verdict(
        9,
        "fluctuation-dissipation residual",
        fdt.passed && full.passed,
        fdt.residual.max(full.residual),
        &format!("<= {:e}", fdt.tolerance.max(full.tolerance)),
        format!("canonical embedding {:e}, full block {:e}", fdt.residual, full.residual),
    );

    // operator structure on a small basis
    let sm = spectral_model(&model);
    if sm != model {
        rep.note("spectral checks use the unit cosine model; the configured model has no spectral basis");
    }
    let basis = SpectralBasis::new(&sm, 8, 8, 4)?;
    let b = assemble_transport(&sm, &basis)?;
    let asym = b.matrix.add(&b.matrix.transpose()).norm_inf();
    rep.verdict(
        9,
        "transport part antisymmetric",
        asym <= 1e-12,
        asym,
        "row-sum norm of B + B^T <= 1e-12",
        format!("dimension {}", basis.dim()),
    );
    let s = assemble_dissipation(&sm, &basis)?;
    let l = assemble_generator(&sm, &basis)?;
    let ops = derivative_ops(&sm, &basis)?;
    let mut worst: f64 = 0.0;
    let mut min_form = f64::INFINITY;
    for k in 0..50u64 {
        let u = random_smooth_state(&basis, cfg.seed.wrapping_add(k));
        let lu = l.apply_vec(&u);
        let form: f64 = lu.iter().zip(&u).map(|(a, b)| a * b).sum();
        let au = ops.a.apply_vec(&u);
        let norm: f64 = au.iter().map(|x| x * x).sum();
        let su: f64 = s.apply_vec(&u).iter().zip(&u).map(|(a, b)| a * b).sum();
        worst = worst.max((form - norm).abs() / norm.max(1e-300)).max((su - norm).abs() / norm.max(1e-300));
        min_form = min_form.min(form);
    }
    rep.verdict(
        9,
        "<Lu, u> = |Au|^2 >= 0 on 50 random vectors",
        worst <= 1e-10 && min_form >= 0.0,
        worst,
        "relative residual <= 1e-10 and form >= 0",
        format!("smallest form {min_form:e}"),
    );

    // semigroup keeps constants and rho-means
    let one = basis.constant();
    let e_one = semigroup_apply(&l, &one, 1.0)?;
    let const_err = e_one.iter().zip(&one).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let mut mean_err: f64 = 0.0;
    for k in 0..5u64 {
        let mut u = random_smooth_state(&basis, cfg.seed ^ (0xabc + k));
        u[0] = 0.3 + 0.1 * k as f64;
        let w = semigroup_apply(&l, &u, 0.7)?;
        mean_err = mean_err.max((basis.mean(&w) - basis.mean(&u)).abs());
    }
    rep.verdict(
        9,
        "semigroup preserves constants and rho-means",
        const_err <= 1e-9 && mean_err <= 1e-9,
        const_err.max(mean_err),
        "<= 1e-9",
        format!("constants {const_err:e}, means {mean_err:e}"),
    );

    gibbs_stationarity(&mut rep, &model, cfg.seed)?;

    // closed-form references for the free unit model
    let free = GleModel::torus(vec![1.0], vec![1.0], 1.0, Potential::free())?;
    let fb = SpectralBasis::new(&free, 0, 4, 4)?;
    let fl = assemble_generator(&free, &fb)?;
    let sol = solve_poisson(&fl, &fb, &fb.momentum_power(1)?, PoissonOptions::default())?;
    let fd = diffusion_from_poisson(&sol, &fb, &free)?.d;
    let gk = green_kubo_analytic(&free)?.value;
    let err = (fd - 1.0).abs().max((gk - 1.0).abs());
    rep.verdict(
        1,
        "free unit model: spectral and analytic Green-Kubo D = 1",
        err <= 1e-8,
        err,
        "absolute error <= 1e-8",
        format!("spectral {fd}, Green-Kubo {gk}"),
    );

    let fc = friction_formula_check(&model, 10, cfg.seed)?;
    rep.verdict(
        2,
        "friction formula on random parameter sets",
        fc.passed,
        fc.exact_residual.max(fc.green_kubo_residual),
        "relative residual <= 1e-12",
        format!("{} sets", fc.sets),
    );

    let table = commutator_table();
    let held = table.iter().filter(|c| c.holds).count();
    rep.verdict(
        4,
        "commutator table",
        held == table.len(),
        (table.len() - held) as f64,
        "all identities exact",
        format!("{held} of {} hold", table.len()),
    );
    Ok(rep)
}
