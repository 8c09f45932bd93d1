//! Datasets, experiment configuration, replicated runs and their summaries.

mod config;
mod data;
mod runner;
mod summary;

pub use config::{DatasetSource, ExperimentConfig, PriorChoice};
pub use data::{galaxy, generate_dataset, load_dataset, parse_dataset, write_dataset, MixtureSpec};
pub use runner::{run_experiment, ChainDiagnostics, EstimateRow, Replicate, RunRecord};
pub use summary::{read_summary_csv, summarize, write_outputs, write_summary_csv, SummaryRow};
