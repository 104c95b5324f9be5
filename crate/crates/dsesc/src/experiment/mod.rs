//! Config-driven experiment runner: modes, result schema, and artifact
//! emission.

mod config;
mod pgm;
mod results;
mod runner;

pub use config::{
    AffinitySource, AutoencoderConfig, DatasetConfig, ExperimentConfig, Mode, Modules,
    DEFAULT_GAMMA_GRID,
};
pub use pgm::emit_heatmap;
pub use results::{
    AblationCell, CurveData, Interpretation, ResultsFile, SourceEvaluation, SweepRow,
};
pub use runner::{run, CHECKPOINT_FILE, GAMMA_SWEEP_FILE, LOSS_CURVES_FILE, RESULTS_FILE};
