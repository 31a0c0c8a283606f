//! Fisher class-separability analysis and selection of the shrinkage
//! scale.
//!
//! Thresholded measurements form two classes: target returns (Rician
//! power) and surviving noise (shifted exponential). At low SNR their
//! Fisher separability is small and the filter cannot tell them apart.
//! Replacing the noise scale `sigma0` with a smaller `sigma_s` in the
//! clutter density enlarges the separability; the optimal `sigma_s` is
//! the largest one that still classifies the weakest admissible target
//! return (the `beta`-quantile of the target power) as target rather
//! than noise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::likelihood::{detection_probability, intensity_to_snr, snr_to_intensity, solve_threshold};

/// Lower end of the shrinkage search, as a fraction of `sigma0`. Below
/// this the noise class degenerates (its variance enters as `sigma_s^4`).
const SIGMA_FLOOR_RATIO: f64 = 0.05;

/// Relative tolerance of the bisection on `sigma_s`.
const SIGMA_TOL_RATIO: f64 = 1e-6;

/// Bisection tolerance on the target-power quantile.
const QUANTILE_TOL: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum ShrinkageError {
    #[error(
        "no feasible shrinkage scale in ({lo:.4}, {hi:.4}]: the SNR is below \
         the working range of the shrinkage criterion"
    )]
    Infeasible { lo: f64, hi: f64 },
    #[error("separability difference is not monotone on the search interval")]
    NonMonotone,
}

/// Fisher separability of target and (truncated) noise powers:
/// squared distance of the class means over the summed class variances.
pub fn fisher_separability(intensity: f64, sigma0: f64, theta: f64) -> f64 {
    let two_s2 = 2.0 * sigma0 * sigma0;
    let num = intensity * intensity / two_s2 - theta / two_s2;
    num * num / (2.0 * (1.0 + intensity * intensity / two_s2))
}

/// Fisher separability after replacing the noise scale by `sigma_s` in
/// the noise-class statistics.
pub fn shrunk_separability(intensity: f64, sigma0: f64, sigma_s: f64, theta: f64) -> f64 {
    let s0sq = sigma0 * sigma0;
    let ssq = sigma_s * sigma_s;
    let i2 = intensity * intensity;
    let num = 2.0 * s0sq + i2 - theta - 2.0 * ssq;
    num * num / (4.0 * s0sq * (s0sq + i2) + 4.0 * ssq * ssq)
}

/// Squared Mahalanobis distance of a power `z` from the shrunk noise
/// class (mean `theta + 2 sigma_s^2`, variance `4 sigma_s^4`).
pub fn mahalanobis_noise(z: f64, sigma_s: f64, theta: f64) -> f64 {
    let ssq = sigma_s * sigma_s;
    let dev = z - theta - 2.0 * ssq;
    dev * dev / (4.0 * ssq * ssq)
}

/// Squared Mahalanobis distance of a power `z` from the target class
/// (mean `2 sigma0^2 + I^2`, variance `4 sigma0^2 (sigma0^2 + I^2)`).
pub fn mahalanobis_target(z: f64, intensity: f64, sigma0: f64) -> f64 {
    let s0sq = sigma0 * sigma0;
    let i2 = intensity * intensity;
    let dev = z - 2.0 * s0sq - i2;
    dev * dev / (4.0 * s0sq * (s0sq + i2))
}

/// `beta`-quantile of the target power density, by bisection against the
/// quadrature CDF.
pub fn target_quantile(intensity: f64, sigma0: f64, beta: f64) -> f64 {
    assert!(beta > 0.0 && beta < 1.0, "quantile level must be in (0, 1)");
    let hi0 = (intensity + 14.0 * sigma0).powi(2);
    let mut lo = 0.0;
    let mut hi = hi0;
    // CDF(z) = 1 - detection_probability(z): monotone increasing.
    while hi - lo > QUANTILE_TOL {
        let mid = 0.5 * (lo + hi);
        if 1.0 - detection_probability(mid, intensity, sigma0) < beta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Largest shrinkage scale `sigma_s <= sigma0` for which the
/// `beta`-quantile of the target power is still closer (in Mahalanobis
/// distance) to the target class than to the shrunk noise class.
///
/// The comparison is meaningful only while the quantile lies above the
/// shrunk noise mean (`z_s > theta + 2 sigma_s^2`); on that branch the
/// noise distance is strictly decreasing in `sigma_s`, so a single sign
/// change separates feasible from infeasible scales and bisection finds
/// it. If the constraint already holds at `sigma0`, no shrinkage is
/// needed and `sigma0` is returned.
pub fn optimal_sigma(
    intensity: f64,
    sigma0: f64,
    theta: f64,
    beta: f64,
) -> Result<f64, ShrinkageError> {
    let z_s = target_quantile(intensity, sigma0, beta);
    let target_dist = mahalanobis_target(z_s, intensity, sigma0);
    let margin = |sigma_s: f64| mahalanobis_noise(z_s, sigma_s, theta) - target_dist;

    let floor = SIGMA_FLOOR_RATIO * sigma0;
    // Upper end of the valid branch: the quantile must sit above the
    // shrunk noise mean.
    let branch_top = if z_s > theta {
        ((z_s - theta) / 2.0).sqrt()
    } else {
        0.0
    };
    let hi = sigma0.min(branch_top * (1.0 - 1e-9));
    if hi >= sigma0 && margin(sigma0) > 0.0 {
        return Ok(sigma0);
    }
    if hi <= floor || margin(floor) <= 0.0 {
        return Err(ShrinkageError::Infeasible {
            lo: floor,
            hi: sigma0,
        });
    }
    // The noise distance must fall monotonically toward the crossing;
    // a non-monotone margin would mean several crossings, which the
    // criterion does not define. Checked on a coarse grid.
    let mut prev = margin(floor);
    for k in 1..=16 {
        let s = floor + (hi - floor) * f64::from(k) / 16.0;
        let m = margin(s);
        if m > prev + 1e-9 * prev.abs().max(1.0) {
            return Err(ShrinkageError::NonMonotone);
        }
        prev = m;
    }
    // Sign-change bisection: margin > 0 at the floor, <= 0 at hi.
    let mut lo = floor;
    let mut hi = hi;
    let tol = SIGMA_TOL_RATIO * sigma0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if margin(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Precomputed map from SNR (dB) to the shrinkage ratio
/// `sigma_s / sigma0`, with linear interpolation between grid points and
/// clamping outside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkageTable {
    pub sigma0: f64,
    pub snr_db: Vec<f64>,
    pub ratio: Vec<f64>,
}

impl ShrinkageTable {
    /// Build the table over an SNR grid. Each grid point solves the full
    /// chain: threshold at the point's SNR, quantile, then the largest
    /// feasible shrinkage scale. Infeasible points (SNR below the working
    /// range) clamp to the search floor.
    pub fn build(snr_grid: &[f64], sigma0: f64, beta: f64) -> Self {
        assert!(!snr_grid.is_empty());
        debug_assert!(snr_grid.windows(2).all(|w| w[0] < w[1]));
        let ratio = snr_grid
            .iter()
            .map(|&snr| {
                let intensity = snr_to_intensity(snr, sigma0);
                let theta = solve_threshold(intensity, sigma0, 0.99);
                match optimal_sigma(intensity, sigma0, theta, beta) {
                    Ok(s) => s / sigma0,
                    Err(_) => SIGMA_FLOOR_RATIO,
                }
            })
            .collect();
        Self {
            sigma0,
            snr_db: snr_grid.to_vec(),
            ratio,
        }
    }

    /// Table whose every entry is `sigma0` (no shrinkage); with it the
    /// shrinkage update reduces exactly to the plain update.
    pub fn identity(sigma0: f64) -> Self {
        Self {
            sigma0,
            snr_db: vec![0.0],
            ratio: vec![1.0],
        }
    }

    /// Shrinkage scale for a target at `snr_db`, interpolated linearly and
    /// clamped to the grid ends.
    pub fn sigma_at_snr(&self, snr_db: f64) -> f64 {
        self.sigma0 * self.ratio_at_snr(snr_db)
    }

    /// Shrinkage scale for a particle carrying amplitude `intensity`.
    pub fn sigma_at_intensity(&self, intensity: f64) -> f64 {
        self.sigma_at_snr(intensity_to_snr(intensity, self.sigma0))
    }

    fn ratio_at_snr(&self, snr_db: f64) -> f64 {
        let grid = &self.snr_db;
        if snr_db <= grid[0] {
            return self.ratio[0];
        }
        if snr_db >= *grid.last().unwrap() {
            return *self.ratio.last().unwrap();
        }
        let k = grid.partition_point(|&s| s <= snr_db) - 1;
        let t = (snr_db - grid[k]) / (grid[k + 1] - grid[k]);
        self.ratio[k] + t * (self.ratio[k + 1] - self.ratio[k])
    }
}
