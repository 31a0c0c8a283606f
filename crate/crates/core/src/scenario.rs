//! Ground-truth target motion, birth/spawn scheduling and the bundled
//! benchmark scenarios.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridSpec;
use crate::likelihood::snr_to_intensity;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("event {event}: spawn references parent track {parent} which does not exist yet")]
    UnknownParent { event: usize, parent: usize },
    #[error("event {event}: spawn at step {step} references parent {parent} which is not alive then")]
    DeadParent {
        event: usize,
        parent: usize,
        step: u32,
    },
    #[error("event {event}: step {step} outside scenario duration 1..={duration}")]
    StepOutOfRange {
        event: usize,
        step: u32,
        duration: u32,
    },
    #[error("event {event}: SNR schedule is empty")]
    EmptySchedule { event: usize },
    #[error("unknown preset '{0}' (known: paper-6.2, paper-6.3, paper-6.4)")]
    UnknownPreset(String),
}

/// Kinematic target state, optionally augmented with the return amplitude
/// when the filter estimates SNR alongside kinematics.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub x: f64,
    pub vx: f64,
    pub y: f64,
    pub vy: f64,
    /// Return amplitude; `None` for purely kinematic states.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensity: Option<f64>,
}

impl TargetState {
    pub fn new(x: f64, vx: f64, y: f64, vy: f64) -> Self {
        Self {
            x,
            vx,
            y,
            vy,
            intensity: None,
        }
    }

    pub fn with_intensity(mut self, intensity: f64) -> Self {
        self.intensity = Some(intensity);
        self
    }
}

/// Piecewise-constant SNR schedule: each point applies from its step
/// (inclusive) until the next point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrSchedule(pub Vec<SnrPoint>);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub from_step: u32,
    pub snr_db: f64,
}

impl SnrSchedule {
    pub fn constant(snr_db: f64) -> Self {
        Self(vec![SnrPoint {
            from_step: 0,
            snr_db,
        }])
    }

    /// SNR in effect at `step`; before the first point the first value
    /// applies.
    pub fn at(&self, step: u32) -> f64 {
        let mut snr = self.0.first().map_or(0.0, |p| p.snr_db);
        for p in &self.0 {
            if p.from_step <= step {
                snr = p.snr_db;
            }
        }
        snr
    }

    /// Smallest scheduled SNR.
    pub fn min_snr(&self) -> f64 {
        self.0.iter().map(|p| p.snr_db).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioEvent {
    /// A target appears at `step` with the given state.
    Birth {
        step: u32,
        state: [f64; 4],
        snr: SnrSchedule,
    },
    /// A target separates from a living parent at `step`: it copies the
    /// parent position and adds `velocity_offset` to the parent velocity.
    Spawn {
        step: u32,
        parent: usize,
        velocity_offset: [f64; 2],
        snr: SnrSchedule,
    },
}

impl ScenarioEvent {
    fn step(&self) -> u32 {
        match self {
            ScenarioEvent::Birth { step, .. } | ScenarioEvent::Spawn { step, .. } => *step,
        }
    }

    fn schedule(&self) -> &SnrSchedule {
        match self {
            ScenarioEvent::Birth { snr, .. } | ScenarioEvent::Spawn { snr, .. } => snr,
        }
    }
}

/// How the filter is told about target SNRs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SnrMode {
    /// All targets share one known SNR.
    Known,
    /// Each target's SNR is known; the filter works over the spanned range.
    PerTarget,
    /// Only a bracket `[low, high]` in dB is known.
    UnknownRange { low_db: f64, high_db: f64 },
}

/// Declarative description of one benchmark scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub grid: GridSpec,
    pub sigma0: f64,
    /// Number of scans, steps 1..=duration.
    pub duration: u32,
    /// Scan interval in seconds.
    pub dt: f64,
    /// Truth process noise (acceleration std, m/s^2). The bundled
    /// scenarios use 0 so truth is exactly constant-velocity.
    pub accel_noise_std: f64,
    pub events: Vec<ScenarioEvent>,
    pub snr_mode: SnrMode,
    /// Detection probability the threshold is solved for.
    pub p_d_target: f64,
}

impl ScenarioSpec {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        for (idx, ev) in self.events.iter().enumerate() {
            let step = ev.step();
            if step < 1 || step > self.duration {
                return Err(ScenarioError::StepOutOfRange {
                    event: idx,
                    step,
                    duration: self.duration,
                });
            }
            if ev.schedule().0.is_empty() {
                return Err(ScenarioError::EmptySchedule { event: idx });
            }
        }
        Ok(())
    }

    /// Smallest SNR any target ever takes; the scan threshold must keep
    /// this weakest return detectable.
    pub fn min_snr_db(&self) -> f64 {
        self.events
            .iter()
            .map(|e| e.schedule().min_snr())
            .fold(f64::INFINITY, f64::min)
    }

    /// SNR bracket the filter should assume, per the scenario's SNR mode.
    pub fn snr_bracket_db(&self) -> (f64, f64) {
        match self.snr_mode {
            SnrMode::UnknownRange { low_db, high_db } => (low_db, high_db),
            SnrMode::Known | SnrMode::PerTarget => {
                let lo = self.min_snr_db();
                let hi = self
                    .events
                    .iter()
                    .flat_map(|e| e.schedule().0.iter().map(|p| p.snr_db))
                    .fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
        }
    }
}

/// One simulated target: contiguous lifetime and one state per step.
#[derive(Clone, Debug, PartialEq)]
pub struct TruthTrack {
    pub id: usize,
    pub birth_step: u32,
    /// Last step the target exists (inclusive); the bundled scenarios
    /// never kill targets, so this equals the scenario duration.
    pub death_step: u32,
    /// States at steps `birth_step..=death_step`.
    pub states: Vec<TargetState>,
}

impl TruthTrack {
    pub fn state_at(&self, step: u32) -> Option<&TargetState> {
        if step < self.birth_step || step > self.death_step {
            return None;
        }
        self.states.get((step - self.birth_step) as usize)
    }

    pub fn alive_at(&self, step: u32) -> bool {
        step >= self.birth_step && step <= self.death_step
    }
}

/// Nearly-constant-velocity transition: positions advance by velocity,
/// and white acceleration noise of strength `accel_noise_std` enters
/// through the standard discretized covariance
/// `q^2 [[dt^3/3, dt^2/2], [dt^2/2, dt]]` per axis.
///
/// The intensity component, when present, is carried over unchanged:
/// truth follows its SNR schedule exactly, and the filter applies its own
/// intensity jitter during prediction.
pub fn cv_transition<R: Rng>(
    state: &TargetState,
    dt: f64,
    accel_noise_std: f64,
    rng: &mut R,
) -> TargetState {
    debug_assert!(dt > 0.0);
    let l11 = accel_noise_std * dt.powi(3).sqrt() / 3f64.sqrt();
    let l21 = accel_noise_std * 0.75f64.sqrt() * dt.sqrt();
    let l22 = accel_noise_std * 0.5 * dt.sqrt();
    let mut advance = |p: f64, v: f64| -> (f64, f64) {
        let n1: f64 = rng.sample(StandardNormal);
        let n2: f64 = rng.sample(StandardNormal);
        (p + v * dt + l11 * n1, v + l21 * n1 + l22 * n2)
    };
    let (x, vx) = advance(state.x, state.vx);
    let (y, vy) = advance(state.y, state.vy);
    TargetState {
        x,
        vx,
        y,
        vy,
        intensity: state.intensity,
    }
}

/// Log density of [`cv_transition`] moving `from` to `to` (kinematic
/// components only). Requires `accel_noise_std > 0`.
pub fn cv_log_density(from: &TargetState, to: &TargetState, dt: f64, accel_noise_std: f64) -> f64 {
    debug_assert!(accel_noise_std > 0.0 && dt > 0.0);
    let q2 = accel_noise_std * accel_noise_std;
    // Per-axis covariance Q = q^2 M with M = [[dt^3/3, dt^2/2], [dt^2/2, dt]];
    // det M = dt^4 / 12, M^-1 = [[dt, -dt^2/2], [-dt^2/2, dt^3/3]] / det M.
    let m_det = dt.powi(4) / 12.0;
    let scale = q2 * m_det;
    let inv_a = dt / scale;
    let inv_b = -(dt * dt / 2.0) / scale;
    let inv_c = (dt.powi(3) / 3.0) / scale;
    let log_det_q = (q2 * q2 * m_det).ln();
    let axis = |p0: f64, v0: f64, p1: f64, v1: f64| -> f64 {
        let dp = p1 - (p0 + v0 * dt);
        let dv = v1 - v0;
        let quad = inv_a * dp * dp + 2.0 * inv_b * dp * dv + inv_c * dv * dv;
        -(2.0 * std::f64::consts::PI).ln() - 0.5 * log_det_q - 0.5 * quad
    };
    axis(from.x, from.vx, to.x, to.vx) + axis(from.y, from.vy, to.y, to.vy)
}

/// Generate the ground-truth tracks of a scenario. Deterministic given
/// the RNG state; with zero process noise every state is exact
/// constant-velocity propagation.
pub fn generate_scenario<R: Rng>(
    spec: &ScenarioSpec,
    rng: &mut R,
) -> Result<Vec<TruthTrack>, ScenarioError> {
    spec.validate()?;
    let mut tracks: Vec<TruthTrack> = Vec::new();
    // Events sorted by step so spawns can reference earlier births; ties
    // keep declaration order.
    let mut order: Vec<usize> = (0..spec.events.len()).collect();
    order.sort_by_key(|&i| (spec.events[i].step(), i));
    for idx in order {
        let event = &spec.events[idx];
        let (step, initial, schedule) = match event {
            ScenarioEvent::Birth { step, state, snr } => (
                *step,
                TargetState::new(state[0], state[1], state[2], state[3]),
                snr,
            ),
            ScenarioEvent::Spawn {
                step,
                parent,
                velocity_offset,
                snr,
            } => {
                let parent_track =
                    tracks
                        .get(*parent)
                        .ok_or(ScenarioError::UnknownParent {
                            event: idx,
                            parent: *parent,
                        })?;
                let parent_state =
                    parent_track
                        .state_at(*step)
                        .ok_or(ScenarioError::DeadParent {
                            event: idx,
                            parent: *parent,
                            step: *step,
                        })?;
                (
                    *step,
                    TargetState::new(
                        parent_state.x,
                        parent_state.vx + velocity_offset[0],
                        parent_state.y,
                        parent_state.vy + velocity_offset[1],
                    ),
                    snr,
                )
            }
        };
        let mut states = Vec::with_capacity((spec.duration - step + 1) as usize);
        let mut current = initial
            .with_intensity(snr_to_intensity(schedule.at(step), spec.sigma0));
        states.push(current);
        for k in step + 1..=spec.duration {
            current = cv_transition(&current, spec.dt, spec.accel_noise_std, rng)
                .with_intensity(snr_to_intensity(schedule.at(k), spec.sigma0));
            states.push(current);
        }
        tracks.push(TruthTrack {
            id: tracks.len(),
            birth_step: step,
            death_step: spec.duration,
            states,
        });
    }
    Ok(tracks)
}

/// Truth states of all tracks alive at `step`.
pub fn alive_states(tracks: &[TruthTrack], step: u32) -> Vec<TargetState> {
    tracks
        .iter()
        .filter_map(|t| t.state_at(step))
        .copied()
        .collect()
}

/// The benchmark surveillance grid: 200 range cells over [80000, 90000] m,
/// 10 Doppler cells over [-400, -150] m/s and a single bearing cell
/// centered on zero.
pub fn bench_grid() -> GridSpec {
    GridSpec::new(
        80_000.0, 90_000.0, -400.0, -150.0, -0.005, 0.005, 200, 10, 1,
    )
    .expect("benchmark grid is valid")
}

/// Bundled scenario presets, addressable by name.
pub fn preset(name: &str) -> Result<ScenarioSpec, ScenarioError> {
    match name {
        // Two targets at the same SNR: birth at step 1, spawn at step 10
        // with a -100 m/s velocity offset (child moves at -300 m/s).
        "paper-6.2" => Ok(ScenarioSpec {
            grid: bench_grid(),
            sigma0: 0.25,
            duration: 20,
            dt: 1.0,
            accel_noise_std: 0.0,
            events: vec![
                ScenarioEvent::Birth {
                    step: 1,
                    state: [89_000.0, -200.0, 0.0, 0.0],
                    snr: SnrSchedule::constant(9.0),
                },
                ScenarioEvent::Spawn {
                    step: 10,
                    parent: 0,
                    velocity_offset: [-100.0, 0.0],
                    snr: SnrSchedule::constant(9.0),
                },
            ],
            snr_mode: SnrMode::Known,
            p_d_target: 0.99,
        }),
        // Three targets at 8/9/10 dB: spawn at step 7, a separate birth
        // far from the others at step 13.
        "paper-6.3" => Ok(ScenarioSpec {
            grid: bench_grid(),
            sigma0: 0.25,
            duration: 20,
            dt: 1.0,
            accel_noise_std: 0.0,
            events: vec![
                ScenarioEvent::Birth {
                    step: 1,
                    state: [89_000.0, -200.0, 0.0, 0.0],
                    snr: SnrSchedule::constant(8.0),
                },
                ScenarioEvent::Spawn {
                    step: 7,
                    parent: 0,
                    velocity_offset: [-100.0, 0.0],
                    snr: SnrSchedule::constant(9.0),
                },
                ScenarioEvent::Birth {
                    step: 13,
                    state: [89_000.0, -250.0, 0.0, 0.0],
                    snr: SnrSchedule::constant(10.0),
                },
            ],
            snr_mode: SnrMode::PerTarget,
            p_d_target: 0.99,
        }),
        // Like paper-6.2 but the SNRs are only known as a bracket and the
        // spawned target strengthens from 9 to 10 dB at step 11.
        "paper-6.4" => Ok(ScenarioSpec {
            grid: bench_grid(),
            sigma0: 0.25,
            duration: 20,
            dt: 1.0,
            accel_noise_std: 0.0,
            events: vec![
                ScenarioEvent::Birth {
                    step: 1,
                    state: [89_000.0, -200.0, 0.0, 0.0],
                    snr: SnrSchedule::constant(9.0),
                },
                ScenarioEvent::Spawn {
                    step: 10,
                    parent: 0,
                    velocity_offset: [-100.0, 0.0],
                    snr: SnrSchedule(vec![
                        SnrPoint {
                            from_step: 10,
                            snr_db: 9.0,
                        },
                        SnrPoint {
                            from_step: 11,
                            snr_db: 10.0,
                        },
                    ]),
                },
            ],
            snr_mode: SnrMode::UnknownRange {
                low_db: 9.0,
                high_db: 10.0,
            },
            p_d_target: 0.99,
        }),
        other => Err(ScenarioError::UnknownPreset(other.to_string())),
    }
}

/// Names of the bundled presets.
pub const PRESET_NAMES: &[&str] = &["paper-6.2", "paper-6.3", "paper-6.4"];
