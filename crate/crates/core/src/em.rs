//! Weighted Gaussian-mixture EM for extracting point estimates from a
//! particle cloud.
//!
//! Diagonal covariances with a variance floor: the benchmark scenarios
//! keep targets on the x axis, so the y components are numerically
//! degenerate and a full covariance would go singular.

use rand::Rng;

/// Floors the per-dimension variance so responsibilities stay finite on
/// degenerate dimensions.
const VAR_FLOOR: f64 = 1e-6;

/// Convergence threshold on the relative change of the weighted
/// log-likelihood.
const LL_TOL: f64 = 1e-9;

const MAX_ITERS: usize = 80;

#[derive(Clone, Debug)]
pub struct GmmFit {
    /// Component means, one `dim`-vector per component.
    pub means: Vec<Vec<f64>>,
    /// Mixing weights, summing to 1.
    pub weights: Vec<f64>,
    /// Weighted log-likelihood after each iteration (non-decreasing).
    pub log_likelihood: Vec<f64>,
    /// Number of components actually fitted; may be below the request if
    /// the cloud has fewer distinct points.
    pub component_count: usize,
}

/// Fit a weighted mixture of `k` diagonal Gaussians to `points`.
///
/// `weights` need not be normalized but must be nonnegative with a
/// positive sum. Initialization is a weighted k-means++ seeding drawn
/// from `rng`, so the fit is deterministic given the RNG state. If the
/// points have fewer than `k` distinct values the component count is
/// reduced to match.
pub fn weighted_gmm<R: Rng>(
    points: &[Vec<f64>],
    weights: &[f64],
    k: usize,
    rng: &mut R,
) -> GmmFit {
    assert_eq!(points.len(), weights.len());
    assert!(!points.is_empty(), "cannot fit a mixture to no points");
    assert!(k >= 1);
    let dim = points[0].len();
    let total_w: f64 = weights.iter().sum();
    assert!(total_w > 0.0, "weights must carry positive mass");

    let k = k.min(count_distinct(points));

    // k-means++ style seeding on the weighted empirical distribution.
    let mut means = Vec::with_capacity(k);
    means.push(points[sample_index(weights, total_w, rng)].clone());
    while means.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .zip(weights)
            .map(|(p, &w)| {
                let nearest = means
                    .iter()
                    .map(|m| sq_dist(p, m))
                    .fold(f64::INFINITY, f64::min);
                w * nearest
            })
            .collect();
        let mass: f64 = d2.iter().sum();
        let idx = if mass > 0.0 {
            sample_index(&d2, mass, rng)
        } else {
            sample_index(weights, total_w, rng)
        };
        means.push(points[idx].clone());
    }

    // Initial shared spherical variance from the weighted scatter.
    let global_mean = weighted_mean(points, weights, total_w, dim);
    let mut scatter = 0.0;
    for (p, &w) in points.iter().zip(weights) {
        scatter += w * sq_dist(p, &global_mean);
    }
    let init_var = (scatter / total_w / dim as f64).max(VAR_FLOOR);
    let mut vars = vec![vec![init_var; dim]; k];
    let mut mix = vec![1.0 / k as f64; k];

    let mut resp = vec![vec![0.0f64; k]; points.len()];
    let mut ll_trace = Vec::new();
    for _ in 0..MAX_ITERS {
        // E step in the log domain.
        let mut ll = 0.0;
        for (n, p) in points.iter().enumerate() {
            let mut logs = vec![0.0f64; k];
            for c in 0..k {
                logs[c] = mix[c].ln() + log_diag_normal(p, &means[c], &vars[c]);
            }
            let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let sum_exp: f64 = logs.iter().map(|&l| (l - m).exp()).sum();
            let log_norm = m + sum_exp.ln();
            ll += weights[n] * log_norm;
            for c in 0..k {
                resp[n][c] = (logs[c] - log_norm).exp();
            }
        }
        // M step with particle weights folded into the responsibilities.
        for c in 0..k {
            let mut nc = 0.0;
            let mut mean = vec![0.0; dim];
            for (n, p) in points.iter().enumerate() {
                let r = weights[n] * resp[n][c];
                nc += r;
                for d in 0..dim {
                    mean[d] += r * p[d];
                }
            }
            if nc <= 1e-300 {
                // Dead component: re-seed on the heaviest point.
                let idx = sample_index(weights, total_w, rng);
                means[c] = points[idx].clone();
                vars[c] = vec![init_var; dim];
                mix[c] = 1e-6;
                continue;
            }
            for d in 0..dim {
                mean[d] /= nc;
            }
            let mut var = vec![0.0; dim];
            for (n, p) in points.iter().enumerate() {
                let r = weights[n] * resp[n][c];
                for d in 0..dim {
                    let e = p[d] - mean[d];
                    var[d] += r * e * e;
                }
            }
            for d in 0..dim {
                var[d] = (var[d] / nc).max(VAR_FLOOR);
            }
            means[c] = mean;
            vars[c] = var;
            mix[c] = nc / total_w;
        }
        let sum_mix: f64 = mix.iter().sum();
        for m in &mut mix {
            *m /= sum_mix;
        }
        if let Some(&prev) = ll_trace.last() {
            if ll < prev {
                // Floored variances can break the EM guarantee by a hair;
                // keep the trace monotone by stopping instead.
                break;
            }
            if (ll - prev).abs() <= LL_TOL * prev.abs().max(1.0) {
                ll_trace.push(ll);
                break;
            }
        }
        ll_trace.push(ll);
    }

    GmmFit {
        means,
        weights: mix,
        log_likelihood: ll_trace,
        component_count: k,
    }
}

fn log_diag_normal(p: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let mut acc = 0.0;
    for d in 0..p.len() {
        let e = p[d] - mean[d];
        acc += -0.5 * (2.0 * std::f64::consts::PI * var[d]).ln() - 0.5 * e * e / var[d];
    }
    acc
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn weighted_mean(points: &[Vec<f64>], weights: &[f64], total: f64, dim: usize) -> Vec<f64> {
    let mut mean = vec![0.0; dim];
    for (p, &w) in points.iter().zip(weights) {
        for d in 0..dim {
            mean[d] += w * p[d];
        }
    }
    for m in &mut mean {
        *m /= total;
    }
    mean
}

fn sample_index<R: Rng>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

fn count_distinct(points: &[Vec<f64>]) -> usize {
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    'outer: for p in points {
        for q in &distinct {
            if p.iter().zip(q.iter()).all(|(a, b)| a == b) {
                continue 'outer;
            }
        }
        distinct.push(p);
        if distinct.len() > 64 {
            break; // plenty; callers never ask for more components
        }
    }
    distinct.len()
}
