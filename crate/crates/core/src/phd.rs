//! Sequential Monte Carlo PHD recursion over thresholded power maps.
//!
//! The intensity (first moment) of the multitarget posterior is carried by
//! a weighted particle set. One recursion step is
//!
//! 1. **predict** — survive and move persistent particles, fold in the
//!    spawn intensity, inject birth particles;
//! 2. **update** — reweight against the scan's measurement set with the
//!    detection probability pinned at 1 (the scan threshold is chosen to
//!    make that nearly exact);
//! 3. **resample** — systematic resampling back to the nominal particle
//!    count, preserving total mass;
//! 4. **extract** — cardinality from the total mass, states from a
//!    weighted Gaussian-mixture fit.
//!
//! The update exists in two flavors: `Plain` divides by the clutter
//! intensity at the ambient noise scale, `Shrinkage` looks the scale up
//! from a per-SNR table, which suppresses the clutter term for strong
//! returns and keeps weak targets separable from noise.
//!
//! A target return lives in exactly one cell (nail model), so a
//! measurement's single-target likelihood is the Rician power density
//! when the particle occupies the measurement's cell and zero otherwise;
//! a measurement with no supporting particles is explained entirely by
//! the clutter term.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::em::weighted_gmm;
use crate::grid::{state_to_cell, CellIndex, GridSpec, Measurement, MeasurementSet};
use crate::likelihood::{log_truncated_noise_density, target_likelihood};
use crate::scenario::{cv_log_density, cv_transition, TargetState};
use crate::shrinkage::ShrinkageTable;

/// Which clutter scale the update uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateMode {
    Plain,
    Shrinkage,
}

/// One weighted sample of the PHD intensity. The state always carries an
/// intensity component inside the filter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle {
    pub state: TargetState,
    pub weight: f64,
}

/// Weighted particle approximation of the PHD intensity.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParticleCloud {
    pub particles: Vec<Particle>,
    pub time_step: u32,
    /// Persistent particles at the head of the vector after a predict.
    pub persistent_count: usize,
    /// Birth particles at the tail after a predict.
    pub birth_count: usize,
}

impl ParticleCloud {
    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    /// Expected target count: the total particle mass, accumulated with a
    /// fixed pairwise reduction so results do not depend on summation
    /// luck.
    pub fn cardinality(&self) -> f64 {
        pairwise_sum_by(&self.particles, |p| p.weight)
    }

    /// Effective sample size `("sum w")^2 / sum w^2`; zero for an empty or
    /// massless cloud.
    pub fn effective_sample_size(&self) -> f64 {
        let w = self.cardinality();
        let w2 = pairwise_sum_by(&self.particles, |p| p.weight * p.weight);
        if w2 > 0.0 {
            w * w / w2
        } else {
            0.0
        }
    }
}

/// Tuning of the PHD recursion. Every quantity the update equations leave
/// free is explicit here and serializable with the run configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    /// Survival probability per scan.
    pub survival: f64,
    /// Total birth intensity mass per scan, spread uniformly over the
    /// grid in `(r, d, b)` coordinates.
    pub birth_mass: f64,
    /// Birth particles injected per scan.
    pub birth_count: usize,
    /// Particle count after resampling.
    pub persistent_count: usize,
    /// Spawn intensity mass per scan and unit of parent mass.
    pub spawn_mass: f64,
    /// Spawn kernel position spread (meters).
    pub spawn_pos_std: f64,
    /// Spawn kernel velocity spread (m/s). Wide enough to cover a
    /// separating target's velocity offset.
    pub spawn_vel_std: f64,
    /// Process noise of the filter's motion model (m/s^2).
    pub accel_noise_std: f64,
    /// Multiplicative intensity jitter per scan (fraction of I), so the
    /// amplitude estimate can follow a drifting SNR.
    pub intensity_jitter: f64,
    /// Fraction of the birth proposal directed at current measurement
    /// cells; the remainder samples the grid uniformly. Weights are
    /// importance-corrected, so this changes variance, not the birth
    /// intensity.
    pub directed_birth_fraction: f64,
    /// Initial particles (drawn uniformly) and their total mass.
    pub initial_count: usize,
    pub initial_mass: f64,
    pub mode: UpdateMode,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            survival: 0.99,
            birth_mass: 0.2,
            birth_count: 800,
            persistent_count: 2000,
            spawn_mass: 0.05,
            spawn_pos_std: 25.0,
            spawn_vel_std: 100.0,
            accel_noise_std: 1.0,
            intensity_jitter: 0.02,
            directed_birth_fraction: 0.5,
            initial_count: 0,
            initial_mass: 0.0,
            mode: UpdateMode::Shrinkage,
        }
    }
}

/// Per-step bookkeeping the harness records.
#[derive(Clone, Debug, Default)]
pub struct StepDiagnostics {
    pub n_hat: f64,
    pub measurement_count: usize,
    pub ess: f64,
    /// Posterior mass contributed by each measurement, in set order.
    pub mass_per_measurement: Vec<f64>,
    /// The scan's measurement set was empty, so every weight collapsed to
    /// zero (a consequence of running with unit detection probability).
    pub empty_measurement_set: bool,
    /// Resampling found no mass and emptied the cloud.
    pub degenerate: bool,
}

/// Output of one full recursion step.
#[derive(Clone, Debug)]
pub struct StepResult {
    pub estimates: Vec<TargetState>,
    pub diagnostics: StepDiagnostics,
}

/// Single-target likelihood of a thresholded measurement given a particle:
/// the Rician power density at the particle's intensity when the particle
/// occupies the measurement's cell, zero otherwise (a nail return cannot
/// appear in another cell, and out-of-grid states produce no return).
pub fn measurement_likelihood(
    m: &Measurement,
    p: &Particle,
    grid: &GridSpec,
    sigma0: f64,
) -> f64 {
    match state_to_cell(&p.state, grid) {
        Some(cell) if cell == m.cell => {
            target_likelihood(m.z, p.state.intensity.unwrap_or(0.0), sigma0)
        }
        _ => 0.0,
    }
}

/// The SMC-PHD filter bound to one sensor geometry and scan threshold.
pub struct PhdFilter {
    pub grid: GridSpec,
    pub sigma0: f64,
    /// Scan threshold the measurement sets were extracted with.
    pub theta: f64,
    /// Expected clutter count per scan at that threshold.
    pub clutter_rate: f64,
    pub config: FilterConfig,
    /// Shrinkage scale per SNR; the identity table makes the shrinkage
    /// update coincide with the plain one.
    pub table: ShrinkageTable,
    /// Intensity bracket particles live in.
    pub intensity_lo: f64,
    pub intensity_hi: f64,
    pub cloud: ParticleCloud,
    rng: ChaCha12Rng,
}

impl PhdFilter {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: GridSpec,
        sigma0: f64,
        theta: f64,
        clutter_rate: f64,
        config: FilterConfig,
        table: ShrinkageTable,
        intensity_lo: f64,
        intensity_hi: f64,
        rng: ChaCha12Rng,
    ) -> Self {
        assert!(intensity_lo > 0.0 && intensity_hi >= intensity_lo);
        assert!(
            config.spawn_mass == 0.0 || config.accel_noise_std > 0.0,
            "spawn weighting needs a nondegenerate motion density"
        );
        let mut filter = Self {
            grid,
            sigma0,
            theta,
            clutter_rate,
            config,
            table,
            intensity_lo,
            intensity_hi,
            cloud: ParticleCloud::default(),
            rng,
        };
        filter.initialize();
        filter
    }

    /// Populate the initial cloud: empty by default, or `initial_count`
    /// particles drawn uniformly over the grid carrying `initial_mass` in
    /// total.
    pub fn initialize(&mut self) {
        let count = self.config.initial_count;
        let mut particles = Vec::with_capacity(count);
        let w = if count > 0 {
            self.config.initial_mass / count as f64
        } else {
            0.0
        };
        for _ in 0..count {
            let state = self.sample_uniform_state();
            particles.push(Particle { state, weight: w });
        }
        self.cloud = ParticleCloud {
            particles,
            time_step: 0,
            persistent_count: count,
            birth_count: 0,
        };
    }

    /// One full recursion against a scan's measurement set. `dt` is the
    /// time since the previous scan.
    pub fn step(&mut self, measurements: &MeasurementSet, dt: f64) -> StepResult {
        self.predict(dt, Some(measurements));
        let mut diagnostics = self.update(measurements);
        let n_hat = diagnostics.n_hat;
        diagnostics.degenerate = !self.resample(self.config.persistent_count);
        let components = (n_hat.round() as i64).max(1) as usize;
        let estimates = self.extract_states(components);
        self.cloud.time_step = measurements.time_step;
        StepResult {
            estimates,
            diagnostics,
        }
    }

    /// Prediction: move persistent particles through the proposal (the
    /// motion model mixed with the spawn kernel), reweight with the
    /// intensity ratio `(survival * f + spawn) / proposal`, then append
    /// birth particles whose weights integrate the birth mass.
    ///
    /// `directed` supplies the scan's measurement set; when present, a
    /// configurable fraction of birth proposals lands inside measurement
    /// cells (importance-corrected, see [`FilterConfig`]).
    pub fn predict(&mut self, dt: f64, directed: Option<&MeasurementSet>) {
        let cfg = self.config.clone();
        let spawn_pi = if cfg.spawn_mass > 0.0 {
            cfg.spawn_mass / (cfg.survival + cfg.spawn_mass)
        } else {
            0.0
        };
        let persistent = self.cloud.particles.len();
        let mut next = Vec::with_capacity(persistent + cfg.birth_count);

        for idx in 0..persistent {
            let prior = self.cloud.particles[idx];
            let from = prior.state;
            let take_spawn = spawn_pi > 0.0 && self.rng.gen::<f64>() < spawn_pi;
            let mut state = if take_spawn {
                self.sample_spawn_kernel(&from, dt)
            } else {
                cv_transition(&from, dt, cfg.accel_noise_std, &mut self.rng)
            };
            let multiplier = if spawn_pi == 0.0 {
                // Bootstrap proposal: the motion density cancels exactly.
                cfg.survival
            } else {
                let log_f = cv_log_density(&from, &state, dt, cfg.accel_noise_std);
                let log_b = self.spawn_kernel_log_density(&from, &state, dt);
                let m = log_f.max(log_b);
                let ef = (log_f - m).exp();
                let eb = (log_b - m).exp();
                (cfg.survival * ef + cfg.spawn_mass * eb)
                    / ((1.0 - spawn_pi) * ef + spawn_pi * eb)
            };
            // Intensity random walk, clamped to the scenario bracket.
            let jitter: f64 = self.rng.sample(StandardNormal);
            let i0 = state.intensity.unwrap_or(self.intensity_lo);
            let i1 = (i0 * (1.0 + cfg.intensity_jitter * jitter))
                .clamp(self.intensity_lo, self.intensity_hi);
            state.intensity = Some(i1);
            next.push(Particle {
                state,
                weight: prior.weight * multiplier,
            });
        }

        // Birth proposal: a mixture of uniform-over-grid and
        // uniform-within-measurement-cells draws, weighted back to the
        // uniform birth intensity.
        let meas: Option<&MeasurementSet> = directed.filter(|m| !m.is_empty());
        let alpha = if meas.is_some() {
            cfg.directed_birth_fraction.clamp(0.0, 1.0)
        } else {
            0.0
        };
        let meas_cells: HashSet<CellIndex> = meas
            .map(|m| m.elements.iter().map(|e| e.cell).collect())
            .unwrap_or_default();
        let grid_density = 1.0
            / ((self.grid.r_max - self.grid.r_min)
                * (self.grid.d_max - self.grid.d_min)
                * (self.grid.b_max - self.grid.b_min));
        let cell_density = meas
            .map(|m| 1.0 / (m.len() as f64 * self.grid.cell_volume()))
            .unwrap_or(0.0);
        for _ in 0..cfg.birth_count {
            let use_directed = alpha > 0.0 && self.rng.gen::<f64>() < alpha;
            let (r, d, b) = if use_directed {
                let set = meas.expect("directed birth requires measurements");
                let pick = self.rng.gen_range(0..set.len());
                let m = &set.elements[pick];
                (
                    m.r + (self.rng.gen::<f64>() - 0.5) * self.grid.range_size(),
                    m.d + (self.rng.gen::<f64>() - 0.5) * self.grid.doppler_size(),
                    m.b + (self.rng.gen::<f64>() - 0.5) * self.grid.bearing_size(),
                )
            } else {
                (
                    self.rng.gen_range(self.grid.r_min..self.grid.r_max),
                    self.rng.gen_range(self.grid.d_min..self.grid.d_max),
                    self.rng.gen_range(self.grid.b_min..self.grid.b_max),
                )
            };
            let in_meas_cell = self
                .grid
                .cell_of(r, d, b)
                .is_some_and(|c| meas_cells.contains(&c));
            let proposal = (1.0 - alpha) * grid_density
                + if in_meas_cell { alpha * cell_density } else { 0.0 };
            let weight = cfg.birth_mass * grid_density
                / (cfg.birth_count as f64 * proposal);
            let intensity = self.sample_intensity();
            next.push(Particle {
                state: polar_to_state(r, d, b).with_intensity(intensity),
                weight,
            });
        }

        self.cloud = ParticleCloud {
            particles: next,
            time_step: self.cloud.time_step,
            persistent_count: persistent,
            birth_count: cfg.birth_count,
        };
    }

    /// Measurement update with unit detection probability:
    ///
    /// `w*_p = sum_z g(z | x_p) w_p / (lambda p0*(z; sigma_p) + sum_q g(z | x_q) w_q)`
    ///
    /// The clutter scale `sigma_p` is the ambient noise scale in `Plain`
    /// mode and the table lookup at the particle's intensity in
    /// `Shrinkage` mode. With the nail model only particles inside a
    /// measurement's cell contribute to (or gain from) that measurement,
    /// so the update groups particles by cell once per scan.
    pub fn update(&mut self, measurements: &MeasurementSet) -> StepDiagnostics {
        let n = self.cloud.particles.len();
        let mut new_weights = vec![0.0f64; n];
        let mut diagnostics = StepDiagnostics {
            measurement_count: measurements.len(),
            ..Default::default()
        };
        if measurements.is_empty() {
            diagnostics.empty_measurement_set = true;
            for p in &mut self.cloud.particles {
                p.weight = 0.0;
            }
            return diagnostics;
        }

        // Particle indices per occupied cell, in index order.
        let mut occupancy: HashMap<CellIndex, Vec<usize>> = HashMap::new();
        for (idx, p) in self.cloud.particles.iter().enumerate() {
            if let Some(cell) = state_to_cell(&p.state, &self.grid) {
                occupancy.entry(cell).or_default().push(idx);
            }
        }

        let lambda = self.clutter_rate;
        for m in &measurements.elements {
            let Some(indices) = occupancy.get(&m.cell) else {
                // No particle explains this measurement; all its mass goes
                // to the clutter hypothesis.
                diagnostics.mass_per_measurement.push(0.0);
                continue;
            };
            // g(z | x_p) w_p for the in-cell particles.
            let gw: Vec<(usize, f64)> = indices
                .iter()
                .map(|&idx| {
                    let p = &self.cloud.particles[idx];
                    let g = target_likelihood(m.z, p.state.intensity.unwrap_or(0.0), self.sigma0);
                    (idx, g * p.weight)
                })
                .collect();
            let total_gw = pairwise_sum_by(&gw, |&(_, v)| v);
            let mut mass = 0.0;
            for &(idx, gwp) in &gw {
                if gwp == 0.0 {
                    continue;
                }
                let sigma_c = match self.config.mode {
                    UpdateMode::Plain => self.sigma0,
                    UpdateMode::Shrinkage => self
                        .table
                        .sigma_at_intensity(
                            self.cloud.particles[idx].state.intensity.unwrap_or(0.0),
                        ),
                };
                let clutter =
                    lambda * log_truncated_noise_density(m.z, sigma_c, self.theta).exp();
                let contribution = gwp / (clutter + total_gw);
                new_weights[idx] += contribution;
                mass += contribution;
            }
            diagnostics.mass_per_measurement.push(mass);
        }

        for (p, &w) in self.cloud.particles.iter_mut().zip(&new_weights) {
            p.weight = w;
        }
        diagnostics.n_hat = self.cloud.cardinality();
        diagnostics.ess = self.cloud.effective_sample_size();
        diagnostics
    }

    /// Systematic resampling to `target_count` particles, each carrying
    /// `total/target_count` so the total mass is preserved. Returns false
    /// (and empties the cloud) if there is no mass to resample.
    pub fn resample(&mut self, target_count: usize) -> bool {
        let total = self.cloud.cardinality();
        if !(total > 0.0) || target_count == 0 {
            self.cloud.particles.clear();
            self.cloud.persistent_count = 0;
            self.cloud.birth_count = 0;
            return false;
        }
        let offset: f64 = self.rng.gen();
        let stride = total / target_count as f64;
        let mut out = Vec::with_capacity(target_count);
        let mut cum = 0.0;
        let mut source = self.cloud.particles.iter();
        let mut current = source.next().expect("positive mass implies particles");
        cum += current.weight;
        let new_weight = total / target_count as f64;
        for k in 0..target_count {
            let position = (k as f64 + offset) * stride;
            while position >= cum {
                match source.next() {
                    Some(p) => {
                        current = p;
                        cum += current.weight;
                    }
                    None => break, // float round-off at the very end
                }
            }
            out.push(Particle {
                state: current.state,
                weight: new_weight,
            });
        }
        self.cloud.particles = out;
        self.cloud.persistent_count = target_count;
        self.cloud.birth_count = 0;
        true
    }

    /// Expected target count.
    pub fn estimate_cardinality(&self) -> f64 {
        self.cloud.cardinality()
    }

    /// Point estimates: means of a weighted Gaussian-mixture fit over the
    /// kinematic components, one component per expected target.
    pub fn extract_states(&mut self, components: usize) -> Vec<TargetState> {
        if self.cloud.is_empty() || components == 0 {
            return Vec::new();
        }
        let total = self.cloud.cardinality();
        if !(total > 0.0) {
            return Vec::new();
        }
        let points: Vec<Vec<f64>> = self
            .cloud
            .particles
            .iter()
            .map(|p| vec![p.state.x, p.state.vx, p.state.y, p.state.vy])
            .collect();
        let weights: Vec<f64> = self.cloud.particles.iter().map(|p| p.weight).collect();
        let em_seed = self.rng.gen::<u64>();
        let mut em_rng = ChaCha12Rng::seed_from_u64(em_seed);
        let fit = weighted_gmm(&points, &weights, components, &mut em_rng);
        fit.means
            .iter()
            .map(|m| TargetState::new(m[0], m[1], m[2], m[3]))
            .collect()
    }

    fn sample_intensity(&mut self) -> f64 {
        if self.intensity_hi > self.intensity_lo {
            self.rng.gen_range(self.intensity_lo..self.intensity_hi)
        } else {
            self.intensity_lo
        }
    }

    fn sample_uniform_state(&mut self) -> TargetState {
        let r = self.rng.gen_range(self.grid.r_min..self.grid.r_max);
        let d = self.rng.gen_range(self.grid.d_min..self.grid.d_max);
        let b = self.rng.gen_range(self.grid.b_min..self.grid.b_max);
        let i = self.sample_intensity();
        polar_to_state(r, d, b).with_intensity(i)
    }

    /// Draw from the spawn kernel: Gaussian around the parent's moved
    /// position with independent position/velocity spreads.
    fn sample_spawn_kernel(&mut self, parent: &TargetState, dt: f64) -> TargetState {
        let cfg = &self.config;
        let n1: f64 = self.rng.sample(StandardNormal);
        let n2: f64 = self.rng.sample(StandardNormal);
        let n3: f64 = self.rng.sample(StandardNormal);
        let n4: f64 = self.rng.sample(StandardNormal);
        TargetState {
            x: parent.x + parent.vx * dt + cfg.spawn_pos_std * n1,
            vx: parent.vx + cfg.spawn_vel_std * n2,
            y: parent.y + parent.vy * dt + cfg.spawn_pos_std * n3,
            vy: parent.vy + cfg.spawn_vel_std * n4,
            intensity: parent.intensity,
        }
    }

    /// Log density of [`Self::sample_spawn_kernel`].
    fn spawn_kernel_log_density(&self, parent: &TargetState, to: &TargetState, dt: f64) -> f64 {
        let cfg = &self.config;
        let norm = |e: f64, s: f64| -> f64 {
            -0.5 * (2.0 * std::f64::consts::PI * s * s).ln() - 0.5 * e * e / (s * s)
        };
        norm(to.x - parent.x - parent.vx * dt, cfg.spawn_pos_std)
            + norm(to.vx - parent.vx, cfg.spawn_vel_std)
            + norm(to.y - parent.y - parent.vy * dt, cfg.spawn_pos_std)
            + norm(to.vy - parent.vy, cfg.spawn_vel_std)
    }
}

/// Map grid coordinates to a kinematic state with purely radial motion.
fn polar_to_state(r: f64, d: f64, b: f64) -> TargetState {
    TargetState::new(r * b.cos(), d * b.cos(), r * b.sin(), d * b.sin())
}

/// Pairwise (tree) summation in a fixed order.
pub(crate) fn pairwise_sum_by<T>(items: &[T], f: impl Fn(&T) -> f64 + Copy) -> f64 {
    match items.len() {
        0 => 0.0,
        1 => f(&items[0]),
        2 => f(&items[0]) + f(&items[1]),
        n => {
            let mid = n / 2;
            pairwise_sum_by(&items[..mid], f) + pairwise_sum_by(&items[mid..], f)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::extract_measurement_set;
    use crate::likelihood::{expected_clutter_count, snr_to_intensity, solve_threshold};
    use crate::scenario::bench_grid;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    const SIGMA0: f64 = 0.25;

    fn test_filter(config: FilterConfig) -> PhdFilter {
        let grid = bench_grid();
        let i9 = snr_to_intensity(9.0, SIGMA0);
        let theta = solve_threshold(i9, SIGMA0, 0.99);
        let lambda = expected_clutter_count(theta, SIGMA0, grid.cell_count());
        PhdFilter::new(
            grid,
            SIGMA0,
            theta,
            lambda,
            config,
            ShrinkageTable::identity(SIGMA0),
            i9,
            i9,
            ChaCha12Rng::seed_from_u64(77),
        )
    }

    fn measurement_at(filter: &PhdFilter, state: &TargetState, z: f64) -> Measurement {
        let cell = state_to_cell(state, &filter.grid).unwrap();
        let (r, d, b) = filter.grid.cell_center(cell);
        Measurement { r, d, b, z, cell }
    }

    fn single_measurement_set(m: Measurement, step: u32, theta: f64) -> MeasurementSet {
        MeasurementSet {
            threshold: theta,
            time_step: step,
            elements: vec![m],
        }
    }

    #[test]
    fn empty_initialization() {
        let f = test_filter(FilterConfig::default());
        assert_eq!(f.estimate_cardinality(), 0.0);
        assert!(f.cloud.is_empty());
    }

    #[test]
    fn seeded_initialization_is_deterministic() {
        let cfg = FilterConfig {
            initial_count: 500,
            initial_mass: 1.5,
            ..FilterConfig::default()
        };
        let a = test_filter(cfg.clone());
        let b = test_filter(cfg);
        assert_eq!(a.cloud, b.cloud);
        assert_relative_eq!(a.estimate_cardinality(), 1.5, max_relative = 1e-12);
    }

    #[test]
    fn zero_mass_initial_cloud_still_receives_births() {
        let cfg = FilterConfig {
            initial_count: 2000,
            initial_mass: 0.0,
            ..FilterConfig::default()
        };
        let mut f = test_filter(cfg);
        f.predict(1.0, None);
        assert_eq!(f.cloud.len(), 2000 + f.config.birth_count);
        assert!(f.estimate_cardinality() > 0.0);
    }

    #[test]
    fn birth_mass_is_exact_with_uniform_proposal() {
        let mut f = test_filter(FilterConfig::default());
        f.predict(1.0, None);
        assert_eq!(f.cloud.persistent_count, 0);
        assert_eq!(f.cloud.birth_count, 800);
        assert_abs_diff_eq!(f.estimate_cardinality(), 0.2, epsilon = 1e-12);
    }

    #[test]
    fn directed_birth_mass_is_unbiased() {
        // With the measurement-directed proposal the realized birth mass
        // fluctuates around the configured intensity mass.
        let mut f = test_filter(FilterConfig::default());
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let frame =
            crate::grid::render_frame(&[], &f.grid, SIGMA0, 1, &mut rng).unwrap();
        let z = extract_measurement_set(&frame, f.theta);
        let trials = 200;
        let mut total = 0.0;
        for _ in 0..trials {
            f.cloud = ParticleCloud::default();
            f.predict(1.0, Some(&z));
            total += f.estimate_cardinality();
        }
        let mean = total / f64::from(trials);
        assert_abs_diff_eq!(mean, 0.2, epsilon = 0.01);
    }

    #[test]
    fn survival_only_weight_scaling() {
        // No birth, no spawn: the bootstrap ratio collapses to the
        // survival probability exactly.
        let cfg = FilterConfig {
            birth_mass: 0.0,
            birth_count: 0,
            spawn_mass: 0.0,
            initial_count: 300,
            initial_mass: 2.0,
            ..FilterConfig::default()
        };
        let mut f = test_filter(cfg);
        let before = f.estimate_cardinality();
        f.predict(1.0, None);
        assert_relative_eq!(
            f.estimate_cardinality(),
            0.99 * before,
            max_relative = 1e-12
        );
    }

    #[test]
    fn deterministic_cv_advance_with_unit_survival() {
        let cfg = FilterConfig {
            survival: 1.0,
            birth_mass: 0.0,
            birth_count: 0,
            spawn_mass: 0.0,
            accel_noise_std: 0.0,
            intensity_jitter: 0.0,
            initial_count: 0,
            ..FilterConfig::default()
        };
        let mut f = test_filter(cfg);
        let state = TargetState::new(89_000.0, -200.0, 0.0, 0.0).with_intensity(1.0);
        f.cloud.particles.push(Particle { state, weight: 0.7 });
        f.predict(1.0, None);
        let moved = f.cloud.particles[0];
        assert_eq!(moved.state.x, 88_800.0);
        assert_eq!(moved.state.vx, -200.0);
        assert_relative_eq!(f.estimate_cardinality(), 0.7, max_relative = 1e-15);
    }

    #[test]
    fn spawn_mixture_preserves_mass_in_expectation() {
        // survival + spawn mass: predicted mass must average
        // (e + spawn) * prior mass over proposal randomness.
        let cfg = FilterConfig {
            birth_mass: 0.0,
            birth_count: 0,
            spawn_mass: 0.05,
            initial_count: 0,
            ..FilterConfig::default()
        };
        let mut f = test_filter(cfg);
        let state = TargetState::new(85_000.0, -250.0, 0.0, 0.0).with_intensity(1.0);
        let trials = 3000;
        let mut total = 0.0;
        for _ in 0..trials {
            f.cloud = ParticleCloud {
                particles: vec![Particle { state, weight: 1.0 }],
                time_step: 0,
                persistent_count: 1,
                birth_count: 0,
            };
            f.predict(1.0, None);
            total += f.estimate_cardinality();
        }
        let mean = total / f64::from(trials);
        assert_abs_diff_eq!(mean, 0.99 + 0.05, epsilon = 0.02);
    }

    #[test]
    fn nail_likelihood_branches() {
        let f = test_filter(FilterConfig::default());
        let i9 = snr_to_intensity(9.0, SIGMA0);
        let state = TargetState::new(89_000.0, -200.0, 0.0, 0.0).with_intensity(i9);
        let p = Particle { state, weight: 1.0 };
        let m = measurement_at(&f, &state, 1.1);
        // In-cell: the Rician power density at the particle's intensity.
        assert_relative_eq!(
            measurement_likelihood(&m, &p, &f.grid, SIGMA0),
            target_likelihood(1.1, i9, SIGMA0),
            max_relative = 1e-14
        );
        // In-cell with zero intensity: the (untruncated) noise density.
        let mut p0 = p;
        p0.state.intensity = Some(0.0);
        assert_relative_eq!(
            measurement_likelihood(&m, &p0, &f.grid, SIGMA0),
            crate::likelihood::noise_density(1.1, SIGMA0),
            max_relative = 1e-14
        );
        // Another cell: a nail return cannot appear there.
        let elsewhere = TargetState::new(85_000.0, -300.0, 0.0, 0.0).with_intensity(i9);
        let m2 = measurement_at(&f, &elsewhere, 1.1);
        assert_eq!(measurement_likelihood(&m2, &p, &f.grid, SIGMA0), 0.0);
        // Out of grid entirely.
        let outside = Particle {
            state: TargetState::new(10.0, 0.0, 0.0, 0.0).with_intensity(i9),
            weight: 1.0,
        };
        assert_eq!(measurement_likelihood(&m, &outside, &f.grid, SIGMA0), 0.0);
    }

    #[test]
    fn update_agrees_with_naive_evaluation() {
        // The grouped fast path must reproduce the direct per-particle,
        // per-measurement formula.
        let mut f = test_filter(FilterConfig::default());
        let i9 = snr_to_intensity(9.0, SIGMA0);
        let s1 = TargetState::new(89_000.0, -200.0, 0.0, 0.0).with_intensity(i9);
        let s2 = TargetState::new(85_000.0, -300.0, 0.0, 0.0).with_intensity(i9);
        let s3 = TargetState::new(89_010.0, -201.0, 0.0, 0.0).with_intensity(i9 * 0.9);
        f.cloud.particles = vec![
            Particle { state: s1, weight: 0.4 },
            Particle { state: s2, weight: 0.3 },
            Particle { state: s3, weight: 0.3 },
        ];
        let set = MeasurementSet {
            threshold: f.theta,
            time_step: 1,
            elements: vec![
                measurement_at(&f, &s1, 1.2),
                measurement_at(&f, &s2, 0.6),
            ],
        };
        let prior = f.cloud.particles.clone();
        f.update(&set);
        for (idx, p) in prior.iter().enumerate() {
            let mut want = 0.0;
            for m in &set.elements {
                let g = measurement_likelihood(m, p, &f.grid, SIGMA0);
                if g == 0.0 {
                    continue;
                }
                let denom: f64 = f.clutter_rate
                    * crate::likelihood::truncated_noise_density(m.z, SIGMA0, f.theta)
                    + prior
                        .iter()
                        .map(|q| measurement_likelihood(m, q, &f.grid, SIGMA0) * q.weight)
                        .sum::<f64>();
                want += g * p.weight / denom;
            }
            assert_relative_eq!(f.cloud.particles[idx].weight, want, max_relative = 1e-12);
        }
    }

    #[test]
    fn update_mass_bounded_by_measurement_count() {
        let mut f = test_filter(FilterConfig::default());
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let i9 = snr_to_intensity(9.0, SIGMA0);
        let truth = TargetState::new(88_000.0, -200.0, 0.0, 0.0).with_intensity(i9);
        let frame = crate::grid::render_frame(
            std::slice::from_ref(&truth),
            &f.grid,
            SIGMA0,
            1,
            &mut rng,
        )
        .unwrap();
        let set = extract_measurement_set(&frame, f.theta);
        f.predict(1.0, Some(&set));
        let d = f.update(&set);
        assert!(d.n_hat <= set.len() as f64);
        assert_eq!(d.mass_per_measurement.len(), set.len());
        assert!(d.mass_per_measurement.iter().all(|&m| (0.0..1.0).contains(&m)));
    }

    #[test]
    fn identical_particles_get_identical_updates() {
        let mut f = test_filter(FilterConfig::default());
        let i9 = snr_to_intensity(9.0, SIGMA0);
        let s = TargetState::new(89_000.0, -200.0, 0.0, 0.0).with_intensity(i9);
        f.cloud.particles = vec![
            Particle { state: s, weight: 0.25 },
            Particle { state: s, weight: 0.25 },
        ];
        let set = single_measurement_set(measurement_at(&f, &s, 1.3), 1, f.theta);
        f.update(&set);
        assert_eq!(
            f.cloud.particles[0].weight,
            f.cloud.particles[1].weight
        );
    }

    #[test]
    fn saturation_limit_for_dominant_particle() {
        // With sum g w far above the clutter term, one particle keeps
        // nearly the whole unit of measurement mass.
        let mut f = test_filter(FilterConfig::default());
        let i9 = snr_to_intensity(9.0, SIGMA0);
        let s = TargetState::new(89_000.0, -200.0, 0.0, 0.0).with_intensity(i9);
        f.cloud.particles = vec![Particle { state: s, weight: 1e6 }];
        let set = single_measurement_set(measurement_at(&f, &s, 1.1), 1, f.theta);
        let d = f.update(&set);
        assert_relative_eq!(d.n_hat, 1.0, max_relative = 1e-6);
    }

    #[test]
    fn empty_measurement_set_zeroes_the_cloud() {
        let mut f = test_filter(FilterConfig {
            initial_count: 100,
            initial_mass: 1.0,
            ..FilterConfig::default()
        });
        let set = MeasurementSet {
            threshold: f.theta,
            time_step: 1,
            elements: vec![],
        };
        let d = f.update(&set);
        assert!(d.empty_measurement_set);
        assert_eq!(d.n_hat, 0.0);
    }

    #[test]
    fn shrinkage_with_identity_table_matches_plain_bitwise() {
        let mk = |mode: UpdateMode| {
            let mut f = test_filter(FilterConfig {
                mode,
                ..FilterConfig::default()
            });
            let mut rng = ChaCha12Rng::seed_from_u64(9);
            let i9 = snr_to_intensity(9.0, SIGMA0);
            let truth = TargetState::new(88_000.0, -200.0, 0.0, 0.0).with_intensity(i9);
            let mut weights = Vec::new();
            for step in 1..=5 {
                let frame = crate::grid::render_frame(
                    std::slice::from_ref(&truth),
                    &f.grid,
                    SIGMA0,
                    step,
                    &mut rng,
                )
                .unwrap();
                let set = extract_measurement_set(&frame, f.theta);
                f.step(&set, 1.0);
                weights.extend(f.cloud.particles.iter().map(|p| p.weight.to_bits()));
                weights.extend(f.cloud.particles.iter().map(|p| p.state.x.to_bits()));
            }
            weights
        };
        assert_eq!(mk(UpdateMode::Plain), mk(UpdateMode::Shrinkage));
    }

    #[test]
    fn shrinkage_boosts_strong_measurement_weights() {
        // A shrunk clutter scale shrinks the clutter density at powers
        // well above the threshold, so a particle matching a strong
        // measurement gains strictly more weight than under the plain
        // update.
        let i8 = snr_to_intensity(8.0, SIGMA0);
        let grid = bench_grid();
        let theta = solve_threshold(i8, SIGMA0, 0.99);
        let lambda = expected_clutter_count(theta, SIGMA0, grid.cell_count());
        let table = ShrinkageTable::build(&[6.0, 7.0, 8.0, 9.0], SIGMA0, 0.05);
        let state = TargetState::new(89_000.0, -200.0, 0.0, 0.0).with_intensity(i8);
        let mk = |mode: UpdateMode, table: ShrinkageTable| {
            let mut f = PhdFilter::new(
                grid.clone(),
                SIGMA0,
                theta,
                lambda,
                FilterConfig {
                    mode,
                    ..FilterConfig::default()
                },
                table,
                i8,
                i8,
                ChaCha12Rng::seed_from_u64(1),
            );
            f.cloud.particles = vec![Particle {
                state,
                weight: 0.01,
            }];
            let m = measurement_at(&f, &state, 1.2);
            f.update(&single_measurement_set(m, 1, theta));
            f.cloud.particles[0].weight
        };
        let plain = mk(UpdateMode::Plain, ShrinkageTable::identity(SIGMA0));
        let shrunk = mk(UpdateMode::Shrinkage, table);
        assert!(
            shrunk > plain,
            "shrinkage weight {shrunk} must exceed plain {plain}"
        );
    }

    #[test]
    fn resample_conserves_mass_and_count() {
        let mut f = test_filter(FilterConfig {
            initial_count: 1200,
            initial_mass: 2.7,
            ..FilterConfig::default()
        });
        // Spread the weights unevenly.
        for (k, p) in f.cloud.particles.iter_mut().enumerate() {
            p.weight = (k % 7) as f64 * 1e-3 + 1e-5;
        }
        let before = f.estimate_cardinality();
        assert!(f.resample(2000));
        assert_eq!(f.cloud.len(), 2000);
        assert_relative_eq!(f.estimate_cardinality(), before, max_relative = 1e-12);
        let w = f.cloud.particles[0].weight;
        assert!(f.cloud.particles.iter().all(|p| p.weight == w));
    }

    #[test]
    fn resample_of_point_mass_copies_it() {
        let mut f = test_filter(FilterConfig::default());
        let state = TargetState::new(85_000.0, -250.0, 0.0, 0.0).with_intensity(1.0);
        f.cloud.particles = vec![
            Particle { state, weight: 3.0 },
            Particle {
                state: TargetState::new(81_000.0, -300.0, 0.0, 0.0).with_intensity(1.0),
                weight: 0.0,
            },
        ];
        assert!(f.resample(50));
        assert_eq!(f.cloud.len(), 50);
        assert!(f.cloud.particles.iter().all(|p| p.state == state));
    }

    #[test]
    fn resample_copy_counts_are_unbiased() {
        // Expected copy count of a particle is L w / W; check the
        // empirical mean over repeated resamplings within 3 sigma.
        let state_a = TargetState::new(85_000.0, -250.0, 0.0, 0.0).with_intensity(1.0);
        let state_b = TargetState::new(81_000.0, -300.0, 0.0, 0.0).with_intensity(1.0);
        let l = 100usize;
        let w_a = 0.3;
        let w_b = 0.7;
        let mut f = test_filter(FilterConfig::default());
        let trials = 10_000;
        let mut copies_a = 0usize;
        for _ in 0..trials {
            f.cloud.particles = vec![
                Particle { state: state_a, weight: w_a },
                Particle { state: state_b, weight: w_b },
            ];
            f.resample(l);
            copies_a += f
                .cloud
                .particles
                .iter()
                .filter(|p| p.state == state_a)
                .count();
        }
        let mean = copies_a as f64 / f64::from(trials);
        let want = l as f64 * w_a / (w_a + w_b);
        // Systematic resampling has at most unit variance per position.
        let sigma = (l as f64 * 0.25 / f64::from(trials)).sqrt().max(0.02);
        assert!(
            (mean - want).abs() < 4.0 * sigma,
            "copy count {mean} vs expected {want}"
        );
    }

    #[test]
    fn degenerate_resample_empties_cloud() {
        let mut f = test_filter(FilterConfig {
            initial_count: 10,
            initial_mass: 0.0,
            ..FilterConfig::default()
        });
        assert!(!f.resample(100));
        assert!(f.cloud.is_empty());
    }

    #[test]
    fn extraction_on_point_cloud() {
        let mut f = test_filter(FilterConfig::default());
        let state = TargetState::new(85_000.0, -250.0, 0.0, 0.0).with_intensity(1.0);
        f.cloud.particles = vec![Particle { state, weight: 1.0 }; 40];
        let est = f.extract_states(1);
        assert_eq!(est.len(), 1);
        assert_abs_diff_eq!(est[0].x, 85_000.0, epsilon = 1e-9);
        assert_abs_diff_eq!(est[0].vx, -250.0, epsilon = 1e-9);
    }

    #[test]
    fn permutation_of_particles_changes_estimates_within_tolerance() {
        let mut f = test_filter(FilterConfig {
            initial_count: 1000,
            initial_mass: 1.3,
            ..FilterConfig::default()
        });
        for (k, p) in f.cloud.particles.iter_mut().enumerate() {
            p.weight = 1e-3 + (k % 11) as f64 * 1e-4;
        }
        let before = f.estimate_cardinality();
        f.cloud.particles.reverse();
        let after = f.estimate_cardinality();
        assert_relative_eq!(before, after, max_relative = 1e-9);
    }

    #[test]
    fn full_steps_are_reproducible() {
        let run = || {
            let mut f = test_filter(FilterConfig::default());
            let mut rng = ChaCha12Rng::seed_from_u64(13);
            let i9 = snr_to_intensity(9.0, SIGMA0);
            let truth = TargetState::new(89_000.0, -200.0, 0.0, 0.0).with_intensity(i9);
            let mut out = Vec::new();
            for step in 1..=6 {
                let frame = crate::grid::render_frame(
                    std::slice::from_ref(&truth),
                    &f.grid,
                    SIGMA0,
                    step,
                    &mut rng,
                )
                .unwrap();
                let set = extract_measurement_set(&frame, f.theta);
                let res = f.step(&set, 1.0);
                out.push((
                    res.diagnostics.n_hat.to_bits(),
                    res.estimates.len(),
                    res.estimates.first().map(|e| e.x.to_bits()),
                ));
            }
            out
        };
        assert_eq!(run(), run());
    }
}
