//! Experiment orchestration: configs, seeded training runs, evaluation,
//! metrics files and checkpoints.
//!
//! A training run writes into its output directory:
//!
//! | file | content |
//! |---|---|
//! | `config.txt` | canonical `key = value` config |
//! | `metrics.csv` | one row per episode, appended and flushed as it finishes |
//! | `metrics.json` | the same table, written at the end |
//! | `checkpoint_epNNNNNN.bin` | every `checkpoint_every` episodes |
//! | `checkpoint.bin` | final parameters |
//! | `timing.txt` | wall-clock seconds (kept apart so metrics stay reproducible) |

mod config;
mod eval;
mod metrics;
mod rng;
mod train;

pub use config::{desk_learner, ExperimentConfig, CONFIG_KEYS};
pub use eval::{evaluate_learners, run_evaluation, EvalReport, EVAL_CSV, EVAL_JSON, RANDOM_EVAL_CSV, RANDOM_EVAL_JSON, RANDOM_POLICY};
pub use metrics::{export_metrics, fmt_f64, mean, trailing_mean, MetricsFormat, MetricsTable, MetricsWriter, RunMetrics, MOVING_WINDOW};
pub use rng::{stream, Stream};
pub use train::{
    build_learners, load_run_config, periodic_checkpoint_name, run_many, run_many_seq, run_training, run_training_with, TrainOutcome,
    CONFIG_FILE, FINAL_CHECKPOINT, METRICS_CSV, METRICS_JSON, TIMING_FILE,
};
