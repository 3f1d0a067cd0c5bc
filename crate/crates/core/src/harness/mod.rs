//! Synthetic data, baseline detectors, metrics and timing probes for the
//! benchmark experiments.

pub mod baseline;
pub mod experiment;
pub mod metrics;
pub mod synthetic;
pub mod timing;

pub use baseline::mahalanobis_chi2_baseline;
pub use experiment::{run_synthetic_benchmark, SeedOutcome, SyntheticBenchConfig, SyntheticBenchReport};
pub use metrics::{ci95, precision, recall, MetricReport};
pub use synthetic::{generate, generate_two_class, SyntheticSpec};
pub use timing::{timing_probe_wstep, TimingAxis, TimingConfig, TimingRow, TimingTable};
