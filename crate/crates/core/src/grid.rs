//! Sensor grid geometry, power-frame simulation and thresholded
//! measurement-set extraction.
//!
//! The sensor reports one nonnegative power per range-Doppler-bearing cell
//! per scan. A target contributes its amplitude to exactly one cell (the
//! measurement is a "nail" on the map); every cell also carries complex
//! Gaussian noise. Cells whose power exceeds the scan threshold form the
//! finite measurement set handed to the filter.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::TargetState;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("cell counts must all be at least 1 (got {0} x {1} x {2})")]
    EmptyGrid(usize, usize, usize),
    #[error("{axis} extent must be positive (min {min}, max {max})")]
    BadExtent {
        axis: &'static str,
        min: f64,
        max: f64,
    },
}

#[derive(Debug, Error)]
pub enum FrameError {
    #[error(
        "scenario-model violation: two targets map to cell ({0}, {1}, {2}); \
         the nail measurement model admits at most one target per cell"
    )]
    CellCollision(usize, usize, usize),
    #[error("target state carries no intensity, cannot render it")]
    MissingIntensity,
    #[error("frame holds {got} values but the grid has {want} cells")]
    LengthMismatch { got: usize, want: usize },
}

/// Index of one range-Doppler-bearing cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellIndex {
    pub range: usize,
    pub doppler: usize,
    pub bearing: usize,
}

/// Geometry of the surveillance grid.
///
/// Cell `(i, j, l)` covers the half-open box
/// `[min + k*size, min + (k+1)*size)` on each axis, with the cell center
/// at `min + (k + 0.5) * size`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub d_min: f64,
    pub d_max: f64,
    pub b_min: f64,
    pub b_max: f64,
    pub n_range: usize,
    pub n_doppler: usize,
    pub n_bearing: usize,
}

impl GridSpec {
    pub fn new(
        r_min: f64,
        r_max: f64,
        d_min: f64,
        d_max: f64,
        b_min: f64,
        b_max: f64,
        n_range: usize,
        n_doppler: usize,
        n_bearing: usize,
    ) -> Result<Self, GridError> {
        if n_range == 0 || n_doppler == 0 || n_bearing == 0 {
            return Err(GridError::EmptyGrid(n_range, n_doppler, n_bearing));
        }
        for (axis, min, max) in [
            ("range", r_min, r_max),
            ("doppler", d_min, d_max),
            ("bearing", b_min, b_max),
        ] {
            if !(max > min) || !min.is_finite() || !max.is_finite() {
                return Err(GridError::BadExtent { axis, min, max });
            }
        }
        Ok(Self {
            r_min,
            r_max,
            d_min,
            d_max,
            b_min,
            b_max,
            n_range,
            n_doppler,
            n_bearing,
        })
    }

    /// Total cell count `N`.
    pub fn cell_count(&self) -> usize {
        self.n_range * self.n_doppler * self.n_bearing
    }

    /// Range cell size `R` in meters.
    pub fn range_size(&self) -> f64 {
        (self.r_max - self.r_min) / self.n_range as f64
    }

    /// Doppler cell size `D` in m/s.
    pub fn doppler_size(&self) -> f64 {
        (self.d_max - self.d_min) / self.n_doppler as f64
    }

    /// Bearing cell size `B` in radians.
    pub fn bearing_size(&self) -> f64 {
        (self.b_max - self.b_min) / self.n_bearing as f64
    }

    /// Volume of one cell in `(r, d, b)` coordinates.
    pub fn cell_volume(&self) -> f64 {
        self.range_size() * self.doppler_size() * self.bearing_size()
    }

    /// Center coordinates `(r_i, d_j, b_l)` of a cell.
    pub fn cell_center(&self, cell: CellIndex) -> (f64, f64, f64) {
        (
            self.r_min + (cell.range as f64 + 0.5) * self.range_size(),
            self.d_min + (cell.doppler as f64 + 0.5) * self.doppler_size(),
            self.b_min + (cell.bearing as f64 + 0.5) * self.bearing_size(),
        )
    }

    /// Bin `(r, d, b)` into a cell, or `None` outside the surveillance
    /// window.
    pub fn cell_of(&self, r: f64, d: f64, b: f64) -> Option<CellIndex> {
        let bin = |v: f64, min: f64, size: f64, n: usize| -> Option<usize> {
            if !v.is_finite() {
                return None;
            }
            let k = ((v - min) / size).floor();
            if k < 0.0 || k >= n as f64 {
                None
            } else {
                Some(k as usize)
            }
        };
        Some(CellIndex {
            range: bin(r, self.r_min, self.range_size(), self.n_range)?,
            doppler: bin(d, self.d_min, self.doppler_size(), self.n_doppler)?,
            bearing: bin(b, self.b_min, self.bearing_size(), self.n_bearing)?,
        })
    }

    /// Row-major linear index of a cell.
    pub fn linear_index(&self, cell: CellIndex) -> usize {
        (cell.range * self.n_doppler + cell.doppler) * self.n_bearing + cell.bearing
    }

    /// Inverse of [`GridSpec::linear_index`].
    pub fn cell_at(&self, linear: usize) -> CellIndex {
        let bearing = linear % self.n_bearing;
        let rest = linear / self.n_bearing;
        CellIndex {
            range: rest / self.n_doppler,
            doppler: rest % self.n_doppler,
            bearing,
        }
    }
}

/// Map a kinematic state to its observed cell.
///
/// The sensor sees range `r = sqrt(x^2 + y^2)`, range rate
/// `d = (x vx + y vy) / r` and bearing `b = atan2(y, x)`. A state at the
/// origin (r = 0) has no defined Doppler or bearing and is treated as
/// out of grid.
pub fn state_to_cell(state: &TargetState, grid: &GridSpec) -> Option<CellIndex> {
    let (r, d, b) = state_to_polar(state)?;
    grid.cell_of(r, d, b)
}

/// `(range, range-rate, bearing)` of a state, or `None` at the origin.
pub fn state_to_polar(state: &TargetState) -> Option<(f64, f64, f64)> {
    let r = (state.x * state.x + state.y * state.y).sqrt();
    if r == 0.0 {
        return None;
    }
    let d = (state.x * state.vx + state.y * state.vy) / r;
    let b = state.y.atan2(state.x);
    Some((r, d, b))
}

/// One scan of the sensor: `N` nonnegative powers in row-major
/// `(range, doppler, bearing)` order.
#[derive(Clone, Debug, PartialEq)]
pub struct PowerFrame {
    pub grid: GridSpec,
    pub time_step: u32,
    values: Vec<f64>,
}

impl PowerFrame {
    pub fn new(grid: GridSpec, time_step: u32, values: Vec<f64>) -> Result<Self, FrameError> {
        if values.len() != grid.cell_count() {
            return Err(FrameError::LengthMismatch {
                got: values.len(),
                want: grid.cell_count(),
            });
        }
        Ok(Self {
            grid,
            time_step,
            values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value_at(&self, cell: CellIndex) -> f64 {
        self.values[self.grid.linear_index(cell)]
    }

    /// FNV-1a hash of the raw power bytes; used by the harness to verify
    /// that paired algorithm runs saw identical frames.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for v in &self.values {
            for byte in v.to_le_bytes() {
                h ^= u64::from(byte);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

/// One thresholded measurement: the cell centers and the observed power.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub r: f64,
    pub d: f64,
    pub b: f64,
    pub z: f64,
    pub cell: CellIndex,
}

/// The finite measurement set of one scan: every cell with power at or
/// above the threshold, at most one element per cell.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementSet {
    pub threshold: f64,
    pub time_step: u32,
    pub elements: Vec<Measurement>,
}

impl MeasurementSet {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }
}

/// Simulate one scan: every cell receives complex Gaussian noise (variance
/// `sigma0^2` per component); a cell holding a target of amplitude `I`
/// receives `|I + n|^2`, all others `|n|^2`.
///
/// Two targets in one cell violate the nail measurement model and are
/// reported as a scenario error rather than silently superposed.
pub fn render_frame<R: Rng>(
    truth: &[TargetState],
    grid: &GridSpec,
    sigma0: f64,
    time_step: u32,
    rng: &mut R,
) -> Result<PowerFrame, FrameError> {
    let n = grid.cell_count();
    let mut amplitude = vec![0.0f64; n];
    for state in truth {
        let Some(cell) = state_to_cell(state, grid) else {
            continue; // outside the surveillance window: contributes nothing
        };
        let intensity = state.intensity.ok_or(FrameError::MissingIntensity)?;
        let idx = grid.linear_index(cell);
        if amplitude[idx] != 0.0 {
            return Err(FrameError::CellCollision(
                cell.range,
                cell.doppler,
                cell.bearing,
            ));
        }
        amplitude[idx] = intensity;
    }
    let values = amplitude
        .into_iter()
        .map(|h| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let re = h + sigma0 * re;
            let im = sigma0 * im;
            re * re + im * im
        })
        .collect();
    PowerFrame::new(grid.clone(), time_step, values)
}

/// Extract the thresholded measurement set of a frame: one element per
/// cell with `z >= theta`, carrying the cell centers.
pub fn extract_measurement_set(frame: &PowerFrame, theta: f64) -> MeasurementSet {
    let mut elements = Vec::new();
    for (linear, &z) in frame.values().iter().enumerate() {
        if z >= theta {
            let cell = frame.grid.cell_at(linear);
            let (r, d, b) = frame.grid.cell_center(cell);
            elements.push(Measurement { r, d, b, z, cell });
        }
    }
    MeasurementSet {
        threshold: theta,
        time_step: frame.time_step,
        elements,
    }
}
