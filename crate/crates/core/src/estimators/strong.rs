use crate::dynamics::Trajectory;
use crate::equilibrium::BootstrapOptions;
use crate::error::{GleError, Result};
use crate::stats::{bootstrap_indices, mean, percentile_interval, EstimateWithCI};

/// Per-replica `sup_t (|Δq(t)|^r + |Δp(t)|^r)` for coupled path sets, paired by replica id.
pub fn sup_discrepancies(paths_eps: &[Trajectory], paths_limit: &[Trajectory], r: f64) -> Result<Vec<f64>> {
    if !(r > 0.0) {
        return Err(GleError::domain("r", "must be > 0"));
    }
    if paths_eps.len() != paths_limit.len() || paths_eps.is_empty() {
        return Err(GleError::Precondition(format!(
            "path sets have {} and {} replicas",
            paths_eps.len(),
            paths_limit.len()
        )));
    }
    let mut a: Vec<&Trajectory> = paths_eps.iter().collect();
    let mut b: Vec<&Trajectory> = paths_limit.iter().collect();
    a.sort_by_key(|t| t.replica_id);
    b.sort_by_key(|t| t.replica_id);
    a.iter()
        .zip(&b)
        .map(|(x, y)| {
            if x.replica_id != y.replica_id || x.seed != y.seed || x.rng_stream_id != y.rng_stream_id {
                return Err(GleError::Precondition(format!(
                    "uncoupled noise: replica {}/{} seed {}/{} stream {}/{}",
                    x.replica_id, y.replica_id, x.seed, y.seed, x.rng_stream_id, y.rng_stream_id
                )));
            }
            if x.times.len() != y.times.len()
                || x.times.iter().zip(&y.times).any(|(s, t)| (s - t).abs() > 1e-9 * t.abs().max(1.0))
            {
                return Err(GleError::Precondition("path sets use different time grids".into()));
            }
            if x.dim() != y.dim() {
                return Err(GleError::Dimension("path sets differ in dimension".into()));
            }
            let d = x.dim();
            let mut sup: f64 = 0.0;
            for k in 0..x.len() {
                let dq: f64 = (0..d).map(|i| (x.lifted(k, i) - y.lifted(k, i)).powi(2)).sum::<f64>().sqrt();
                let dp: f64 = (0..d)
                    .map(|i| (x.states[k].p[i] - y.states[k].p[i]).powi(2))
                    .sum::<f64>()
                    .sqrt();
                sup = sup.max(dq.powf(r) + dp.powf(r));
            }
            Ok(sup)
        })
        .collect()
}

/// `E sup_{t ≤ T} (|Δq|^r + |Δp|^r)` over coupled replicas, with bootstrap CI.
pub fn strong_error(
    paths_eps: &[Trajectory],
    paths_limit: &[Trajectory],
    r: f64,
    boot: BootstrapOptions,
) -> Result<EstimateWithCI> {
    let sups = sup_discrepancies(paths_eps, paths_limit, r)?;
    let value = mean(&sups);
    let boots = bootstrap_indices(sups.len(), boot.resamples, boot.seed, &|idx| {
        idx.iter().map(|&i| sups[i]).sum::<f64>() / idx.len() as f64
    });
    let (lo, hi) = percentile_interval(&boots, 0.95);
    Ok(EstimateWithCI::new(value, lo, hi, &format!("strong_error_r{r}"), sups.len()))
}
