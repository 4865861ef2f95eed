//! Monte Carlo experiments: configuration, sweeps and result files.

pub mod config;
pub mod io;
pub mod sweep;

pub use config::{parse_schemes, ExperimentConfig, Scheme};
pub use io::{read_records, write_manifest, write_records, Manifest, CSV_COLUMNS};
pub use sweep::{
    paired_means, region_curves, run_parameter_sweep, run_region_sweep, run_single_ma_demo, CurvePoint,
    RegionCurve, SweepAxis, SweepOutput, TrialRecord,
};
