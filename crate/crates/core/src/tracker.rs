//! High-level tracker: builds the scan threshold, clutter rate and
//! shrinkage table for a scenario and drives the PHD filter frame by
//! frame. This is the surface the harness, the replay path and the C API
//! share.

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{extract_measurement_set, GridSpec, PowerFrame};
use crate::likelihood::{expected_clutter_count, snr_to_intensity, solve_threshold};
use crate::phd::{FilterConfig, PhdFilter, StepResult, UpdateMode};
use crate::shrinkage::ShrinkageTable;

/// Default SNR grid of the shrinkage table: 6 to 16 dB every half dB.
fn default_table_grid() -> Vec<f64> {
    (0..=20).map(|k| 6.0 + 0.5 * f64::from(k)).collect()
}

#[derive(Debug, Error)]
pub enum TrackerError {
    #[error("invalid tracker parameter {field}: {reason}")]
    InvalidParameter {
        field: &'static str,
        reason: String,
    },
}

/// Everything needed to stand up a tracker for one sensor and SNR
/// bracket.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrackerParams {
    pub grid: GridSpec,
    pub sigma0: f64,
    /// Scan interval in seconds.
    pub dt: f64,
    /// SNR bracket of the targets (degenerate when known and equal).
    pub snr_lo_db: f64,
    pub snr_hi_db: f64,
    /// Detection probability the scan threshold is solved for.
    pub p_d_target: f64,
    pub filter: FilterConfig,
    /// Target-loss level of the shrinkage optimization.
    pub shrinkage_beta: f64,
    pub seed: u64,
}

impl TrackerParams {
    pub fn validate(&self) -> Result<(), TrackerError> {
        let err = |field: &'static str, reason: String| {
            Err(TrackerError::InvalidParameter { field, reason })
        };
        if !(self.sigma0 > 0.0) {
            return err("sigma0", format!("must be positive, got {}", self.sigma0));
        }
        if !(self.dt > 0.0) {
            return err("dt", format!("must be positive, got {}", self.dt));
        }
        if self.snr_hi_db < self.snr_lo_db {
            return err(
                "snr_hi_db",
                format!("bracket [{}, {}] is empty", self.snr_lo_db, self.snr_hi_db),
            );
        }
        if !(self.p_d_target > 0.0 && self.p_d_target < 1.0) {
            return err(
                "p_d_target",
                format!("must be in (0, 1), got {}", self.p_d_target),
            );
        }
        if !(self.shrinkage_beta > 0.0 && self.shrinkage_beta < 1.0) {
            return err(
                "shrinkage_beta",
                format!("must be in (0, 1), got {}", self.shrinkage_beta),
            );
        }
        if self.filter.persistent_count == 0 {
            return err("filter.persistent_count", "must be positive".into());
        }
        Ok(())
    }
}

/// A configured filter plus the derived scan constants.
pub struct Tracker {
    pub params: TrackerParams,
    pub theta: f64,
    pub clutter_rate: f64,
    pub filter: PhdFilter,
}

impl Tracker {
    /// Derive threshold, clutter rate and (in shrinkage mode) the
    /// per-SNR table, then stand up the filter with the given stream.
    pub fn new(params: TrackerParams, rng: ChaCha12Rng) -> Result<Self, TrackerError> {
        params.validate()?;
        let i_min = snr_to_intensity(params.snr_lo_db, params.sigma0);
        let i_max = snr_to_intensity(params.snr_hi_db, params.sigma0);
        // The threshold keeps the weakest scheduled target detectable.
        let theta = solve_threshold(i_min, params.sigma0, params.p_d_target);
        let clutter_rate =
            expected_clutter_count(theta, params.sigma0, params.grid.cell_count());
        let table = match params.filter.mode {
            UpdateMode::Plain => ShrinkageTable::identity(params.sigma0),
            UpdateMode::Shrinkage => ShrinkageTable::build(
                &default_table_grid(),
                params.sigma0,
                params.shrinkage_beta,
            ),
        };
        let filter = PhdFilter::new(
            params.grid.clone(),
            params.sigma0,
            theta,
            clutter_rate,
            params.filter.clone(),
            table,
            i_min,
            i_max,
            rng,
        );
        Ok(Self {
            params,
            theta,
            clutter_rate,
            filter,
        })
    }

    /// Run one scan: threshold the frame and advance the recursion.
    pub fn step_frame(&mut self, frame: &PowerFrame) -> StepResult {
        let measurements = extract_measurement_set(frame, self.theta);
        self.filter.step(&measurements, self.params.dt)
    }
}
