//! Experiment configuration, instance generators, runners and CSV output.

mod config;
mod generate;
mod records;
mod runners;

pub use config::{Experiment, ExperimentConfig, ModeChoice};
pub use generate::{gen_lp_instance, gen_query_instance, planted_solution};
pub use records::{emit_csv, read_csv, RunRecord, CSV_COLUMNS};
pub use runners::{
    run_experiment, run_lp_experiments, run_margin_study, run_n_ablation, run_query_error_indices,
    run_query_parity, run_query_scaling,
};

/// Independent random stream `stream` of a run seeded with `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> crate::Rng {
    let mut rng = crate::seeded_rng(seed);
    rng.set_stream(stream);
    rng
}
