//! Per-student engagement metrics: watched intervals, attempt histories,
//! ScoreR, and the aggregate fed to the classifier.

mod aggregate;
mod intervals;
mod problems;

pub use aggregate::{aggregate_student, AggregationState, StudentAggregate};
pub use intervals::{reconstruct_intervals, WatchRecord};
pub use problems::{problem_history, score_r, Attempt, NoAttempts, ProblemRecord, ScoreR};

pub(crate) use problems::score_r_for;

use serde::{Deserialize, Serialize};

pub const DEFAULT_PASSING_THRESHOLD: f64 = 0.7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsConfig {
    /// Minimum normalized final score that counts as passing.
    pub passing_threshold: f64,
    /// Treat `problem_graded` events as attempts.
    pub count_graded_as_attempt: bool,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        MetricsConfig {
            passing_threshold: DEFAULT_PASSING_THRESHOLD,
            count_graded_as_attempt: false,
        }
    }
}
