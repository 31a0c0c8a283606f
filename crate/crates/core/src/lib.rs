//! Track-before-detect (TBD) multitarget tracking on simulated
//! range-Doppler-bearing power maps.
//!
//! The toolkit simulates a pulsed radar sensor that reports a grid of
//! reflected-power measurements per scan, thresholds the grid into a finite
//! measurement set, and tracks an unknown, time-varying number of targets
//! with a sequential Monte Carlo probability hypothesis density (PHD)
//! filter. Two update operators are provided: the plain PHD update and a
//! shrinkage update that replaces the noise scale in the clutter term with
//! an optimized smaller scale, which separates weak targets from noise far
//! more reliably at low SNR.
//!
//! Main pieces:
//!
//! * [`grid`] — sensor grid geometry, frame simulation, thresholded
//!   measurement-set extraction.
//! * [`likelihood`] — Rician/exponential power likelihoods, detection
//!   probability, threshold selection, expected clutter count.
//! * [`scenario`] — ground-truth target motion, birth/spawn scheduling and
//!   bundled benchmark scenarios.
//! * [`shrinkage`] — Fisher separability analysis and the constrained
//!   optimization that yields the shrinkage scale per SNR.
//! * [`phd`] — the SMC-PHD recursion (predict, update, resample, extract).
//! * [`ospa`] — OSPA miss distance via optimal assignment.
//! * [`harness`] — configuration, seeded Monte Carlo orchestration and CSV
//!   emission.

pub mod assignment;
pub mod bessel;
pub mod em;
pub mod framefile;
pub mod grid;
pub mod harness;
pub mod likelihood;
pub mod ospa;
pub mod phd;
pub mod rng;
pub mod scenario;
pub mod shrinkage;
pub mod tracker;

pub use grid::{CellIndex, GridSpec, Measurement, MeasurementSet, PowerFrame};
pub use likelihood::{
    detection_probability, expected_clutter_count, intensity_to_snr, noise_density,
    snr_to_intensity, solve_threshold, target_likelihood, truncated_noise_density,
};
pub use ospa::ospa;
pub use phd::{FilterConfig, Particle, ParticleCloud, PhdFilter, UpdateMode};
pub use scenario::{ScenarioSpec, TargetState, TruthTrack};
pub use shrinkage::{optimal_sigma, ShrinkageTable};
