use rayon::prelude::*;
use std::f64::consts::TAU;

use crate::config::{ExperimentConfig, InitialLaw, RunConfig};
use crate::dynamics::{Ensemble, Integrator, StreamKind};
use crate::equilibrium::{divergence_report, Binning, BootstrapOptions, GibbsSampler, Marginal};
use crate::error::{GleError, Result};
use crate::estimators::{fit_exponential_decay, DecayFit};
use crate::model::{DomainKind, GleModel, State};
use crate::spectral::{assemble_generator, spectral_gap, GapOptions, Parity, SpectralBasis};
use crate::stats::{mean, variance};

use super::report::ExperimentReport;

/// Minimum `R²` of the log-linear entropy fit.
pub const ENTROPY_MIN_R2: f64 = 0.9;
/// Allowed distance between the observable decay rate and the gap, in standard errors.
pub const GAP_SIGMAS: f64 = 2.0;

/// Mean of the one-dimensional potential profile under its Gibbs weight `e^{−βv}`.
pub fn gibbs_potential_mean(model: &GleModel) -> Result<f64> {
    let pot = &model.potential;
    let vmin = pot.profile_min();
    let w = |x: f64| (-model.beta * (pot.profile(x) - vmin)).exp();
    let (lo, hi) = match model.domain_kind {
        DomainKind::Torus => (0.0, TAU),
        DomainKind::Confining => {
            let mut r = 1.0;
            while w(r).max(w(-r)) > 1e-18 {
                r *= 2.0;
                if r > 1e6 {
                    return Err(GleError::NonFinite("Gibbs weight does not decay".into()));
                }
            }
            (-r, r)
        }
    };
    const N: usize = 20_000;
    let h = (hi - lo) / N as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..N {
        // midpoint rule, spectrally accurate for periodic integrands
        let x = lo + (i as f64 + 0.5) * h;
        let wx = w(x);
        num += wx * pot.profile(x);
        den += wx;
    }
    Ok(num / den)
}

fn initial_states(model: &GleModel, law: &InitialLaw, n: usize, seed: u64) -> Result<Vec<State>> {
    let sampler = GibbsSampler::new(model)?;
    let draw = |i: usize| sampler.draw_indexed(seed, i as u64, StreamKind::Initial).0;
    Ok(match law {
        InitialLaw::Gibbs => (0..n).into_par_iter().map(draw).collect(),
        InitialLaw::ShiftedGibbs { shift } => (0..n)
            .into_par_iter()
            .map(|i| {
                let mut s = draw(i);
                s.q.iter_mut().for_each(|q| *q += shift);
                s.wrap(model.domain_kind);
                s
            })
            .collect(),
        InitialLaw::Point { q, p } => {
            if q.len() != model.d || p.len() != model.d {
                return Err(GleError::Dimension(format!("point start needs {} coordinates", model.d)));
            }
            let mut s = State::zeros(model.d, model.m);
            s.q.clone_from(q);
            s.p.clone_from(p);
            s.wrap(model.domain_kind);
            vec![s; n]
        }
    })
}

fn is_equilibrium(model: &GleModel, law: &InitialLaw) -> bool {
    match law {
        InitialLaw::Gibbs => true,
        InitialLaw::ShiftedGibbs { shift } => {
            *shift == 0.0 || (model.domain_kind == DomainKind::Torus && (shift / TAU).fract() == 0.0)
        }
        InitialLaw::Point { .. } => false,
    }
}

fn marginal_samples(ens: &Ensemble, marginal: Marginal) -> Vec<f64> {
    match marginal {
        Marginal::Q => ens.positions(0),
        Marginal::P => ens.momenta(0),
        Marginal::Qp => ens
            .positions(0)
            .into_iter()
            .zip(ens.momenta(0))
            .flat_map(|(q, p)| [q, p])
            .collect(),
    }
}

/// Per-particle observables averaged over coordinates: `|p|²/d` and `V(q)/d`.
fn observables(ens: &Ensemble, model: &GleModel) -> (Vec<f64>, Vec<f64>) {
    let d = model.d;
    let ps: Vec<Vec<f64>> = (0..d).map(|i| ens.momenta(i)).collect();
    let qs: Vec<Vec<f64>> = (0..d).map(|i| ens.positions(i)).collect();
    let n = ens.len();
    let p2 = (0..n).map(|k| ps.iter().map(|c| c[k] * c[k]).sum::<f64>() / d as f64).collect();
    let v = (0..n)
        .map(|k| qs.iter().map(|c| model.potential.profile(c[k])).sum::<f64>() / d as f64)
        .collect();
    (p2, v)
}

/// Decay fit of `|dev|` after the peak plus one relaxation time, while the signal
/// stays above three standard errors.
fn observable_fit(t: &[f64], dev: &[f64], se: &[f64], settle: f64) -> Result<(DecayFit, (f64, f64))> {
    let peak = (0..t.len())
        .max_by(|&a, &b| dev[a].abs().partial_cmp(&dev[b].abs()).expect("finite"))
        .unwrap_or(0);
    let start = t[peak] + settle;
    let idx: Vec<usize> = (0..t.len())
        .filter(|&k| t[k] >= start)
        .take_while(|&k| dev[k].abs() > 3.0 * se[k])
        .collect();
    if idx.len() < 6 {
        return Err(GleError::Estimator(format!(
            "only {} resolved points after t = {start:.3}; more particles or a longer horizon needed",
            idx.len()
        )));
    }
    let x: Vec<f64> = idx.iter().map(|&k| t[k]).collect();
    let y: Vec<f64> = idx.iter().map(|&k| dev[k].abs()).collect();
    let w: Vec<f64> = idx.iter().map(|&k| (dev[k] / se[k]).powi(2)).collect();
    let fit = fit_exponential_decay(&x, &y, Some(&w))?;
    Ok((fit, (x[0], x[x.len() - 1])))
}

/// Distances to equilibrium and observable decay from an off-equilibrium start.
pub fn run_relaxation(cfg: &RunConfig) -> Result<ExperimentReport> {
    let cfg = cfg.for_kind("relaxation")?;
    let Some(ExperimentConfig::Relaxation {
        initial,
        particles,
        horizon,
        record_every,
        marginal,
        bins,
        gap_basis,
    }) = &cfg.experiment
    else {
        unreachable!("for_kind fills the block")
    };
    let model = cfg.model()?;
    let scheme = cfg.numerics.scheme();
    let dt = scheme.dt;
    let per_record = (record_every / dt).round() as u64;
    if per_record == 0 || (per_record as f64 * dt - record_every).abs() > 1e-9 * record_every {
        return Err(GleError::domain("experiment.record_every", "must be a multiple of numerics.dt"));
    }
    let records = (horizon / record_every).round() as u64;
    let total = records * per_record * *particles as u64;
    if total > cfg.budget.max_total_steps {
        return Err(GleError::Budget {
            what: "integrator steps".into(),
            requested: total,
            limit: cfg.budget.max_total_steps,
        });
    }
    let mut rep = ExperimentReport::new("relaxation", &cfg, &model.fingerprint());
    let binning = Binning::with_bins(&model, *marginal, *bins);
    let states = initial_states(&model, initial, *particles, cfg.seed)?;
    let mut ens = Ensemble::new(Integrator::new(&model, scheme)?, &states, cfg.seed)?;
    drop(states);
    let kt = 1.0 / model.beta;
    let v_ref = gibbs_potential_mean(&model)?;
    let sqrt_n = (*particles as f64).sqrt();

    let mut rows = Vec::new();
    let (mut t, mut h, mut h_lo, mut h_hi) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let (mut p_dev, mut p_se, mut v_dev, mut v_se) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut pinsker_ok = true;
    for k in 0..=records {
        if k > 0 {
            ens.advance(per_record);
        }
        let div = divergence_report(
            &marginal_samples(&ens, *marginal),
            &model,
            &binning,
            BootstrapOptions {
                seed: cfg.seed ^ (0x5eed + k),
                ..Default::default()
            },
        )?;
        let (p2, v) = observables(&ens, &model);
        let time = ens.time();
        let row = vec![
            time,
            div.entropy.value,
            div.entropy.lo,
            div.entropy.hi,
            div.plugin_entropy,
            div.fisher.value,
            div.fisher.lo,
            div.fisher.hi,
            div.l1,
            0.5 * div.l1 * div.l1,
            mean(&p2) - kt,
            variance(&p2).sqrt() / sqrt_n,
            mean(&v) - v_ref,
            variance(&v).sqrt() / sqrt_n,
        ];
        pinsker_ok &= div.pinsker_holds;
        t.push(time);
        h.push(row[1]);
        h_lo.push(row[2]);
        h_hi.push(row[3]);
        p_dev.push(row[10]);
        p_se.push(row[11]);
        v_dev.push(row[12]);
        v_se.push(row[13]);
        rows.push(row);
    }
    rep.series(
        "relaxation",
        &[
            "t", "entropy", "entropy_lo", "entropy_hi", "entropy_plugin", "fisher", "fisher_lo", "fisher_hi", "l1",
            "pinsker_lhs", "p2_dev", "p2_se", "v_dev", "v_se",
        ],
        rows,
    );

    // non-increasing within the bootstrap intervals
    let worst_rise = (1..h.len()).map(|k| h_lo[k] - h_hi[k - 1]).fold(f64::NEG_INFINITY, f64::max);
    rep.verdict(
        7,
        "relative entropy non-increasing within CI",
        worst_rise <= 0.0,
        worst_rise,
        "lower bound at t_k <= upper bound at t_(k-1)",
        format!("{} recorded times", h.len()),
    );
    rep.verdict(
        7,
        "Pinsker inequality between binned laws",
        pinsker_ok,
        if pinsker_ok { 0.0 } else { 1.0 },
        "L1^2 / 2 <= plug-in entropy at every time",
        String::new(),
    );

    if is_equilibrium(&model, initial) {
        let common_lo = h_lo.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let common_hi = h_hi.iter().cloned().fold(f64::INFINITY, f64::min);
        rep.verdict(
            7,
            "equilibrium start gives a flat entropy series",
            common_lo <= common_hi,
            common_lo - common_hi,
            "all bootstrap intervals share a point",
            String::new(),
        );
        return Ok(rep);
    }

    // exponential fit over the times where the entropy is resolved from zero
    let resolved: Vec<usize> = (0..h.len()).filter(|&k| h_lo[k] > 0.0).collect();
    match fit_exponential_decay(
        &resolved.iter().map(|&k| t[k]).collect::<Vec<_>>(),
        &resolved.iter().map(|&k| h[k]).collect::<Vec<_>>(),
        None,
    ) {
        Ok(fit) => {
            rep.value("entropy_rate", fit.rate);
            rep.value("entropy_r2", fit.r2);
            rep.verdict(
                7,
                "entropy decays exponentially",
                fit.r2 >= ENTROPY_MIN_R2 && fit.rate > 0.0,
                fit.r2,
                &format!("R^2 >= {ENTROPY_MIN_R2} and rate > 0"),
                format!("rate {} [{}, {}] over {} points", fit.rate, fit.lo, fit.hi, fit.n),
            );
        }
        Err(e) => rep.verdict(7, "entropy decays exponentially", false, f64::NAN, "R^2 >= 0.9 and rate > 0", e.to_string()),
    }

    // spectral gap in the even sector, where |p|² and V live
    let gap = if model.d == 1 {
        let [nq, np, nz] = *gap_basis;
        let basis = SpectralBasis::with_budget(&model, nq, np, nz, cfg.budget.max_spectral_dim)?;
        let l = assemble_generator(&model, &basis)?;
        let sector = model.potential.is_even().then_some(Parity::Even);
        let est = spectral_gap(
            &l,
            &basis,
            GapOptions {
                sector,
                ..Default::default()
            },
        )?;
        rep.value("spectral_gap", est.gap);
        rep.value("spectral_gap_imag", est.eigenvalue.1);
        Some(est.gap)
    } else {
        rep.note("d > 1: no spectral gap, observable rates reported without comparison");
        None
    };
    let settle = gap.map_or(1.0, |g| 1.0 / g);
    for (name, dev, se) in [("p2", &p_dev, &p_se), ("potential", &v_dev, &v_se)] {
        match observable_fit(&t, dev, se, settle) {
            Ok((fit, window)) => {
                rep.value(&format!("{name}_rate"), fit.rate);
                rep.value(&format!("{name}_rate_se"), fit.se);
                rep.value(&format!("{name}_fit_start"), window.0);
                rep.value(&format!("{name}_fit_end"), window.1);
                if let (Some(g), "p2") = (gap, name) {
                    let z = (fit.rate - g).abs() / fit.se.max(1e-300);
                    rep.target("p2_rate", Some(g), None, "spectral gap of the generator in the even sector");
                    rep.verdict(
                        7,
                        "p^2 decay rate matches the spectral gap",
                        z <= GAP_SIGMAS,
                        z,
                        &format!("|rate - gap| <= {GAP_SIGMAS} standard errors"),
                        format!("rate {} ± {} on [{}, {}], gap {g}", fit.rate, fit.se, window.0, window.1),
                    );
                }
            }
            Err(e) => {
                if name == "p2" && gap.is_some() {
                    rep.verdict(7, "p^2 decay rate matches the spectral gap", false, f64::NAN, "within 2 standard errors", e.to_string());
                } else {
                    rep.note(format!("{name} decay not resolved: {e}"));
                }
            }
        }
    }
    Ok(rep)
}
