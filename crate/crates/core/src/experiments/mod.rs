//! Experiment harnesses shared by the command-line tool and the test suite.

mod pipeline;
mod predictor_eval;

pub use pipeline::{
    processor_heuristic, processor_report, recovery_eval, sweep_latency, ExperimentError, ProcessorReport,
    RecoveryEvalConfig, RecoveryRow, SweepConfig, SweepRow, RECOVERY_CSV_HEADER, SWEEP_CSV_HEADER,
};
pub use predictor_eval::{predictor_eval, PredictorEvalConfig, PredictorRow, PREDICTOR_CSV_HEADER};
