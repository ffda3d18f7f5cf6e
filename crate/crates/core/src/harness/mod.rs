//! Seeded experiments: configuration, buyer environments, runs and outputs.

pub mod adversary;
pub mod config;
pub mod output;
pub mod run;

pub use adversary::adversary_sequence;
pub use config::{AdversarySpec, ExperimentConfig, Setting};
pub use output::{read_trace, sweep, sweep_means, write_outputs, write_run, write_sweep, OutputPaths, SweepRow};
pub use run::{
    prepare, run_adversarial, run_adversarial_prepared, run_stochastic, run_stochastic_prepared, Prepared,
    RoundRecord, RunOutput, RunSummary,
};
