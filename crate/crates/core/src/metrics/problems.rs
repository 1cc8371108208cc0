//! Attempt histories and the ScoreR difficulty index.

use chrono::{DateTime, Utc};
use serde::Serialize;
use thiserror::Error;

use super::MetricsConfig;
use crate::event::{Event, EventType};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct ProblemObs {
    pub timestamp_ms: i64,
    pub event_type: EventType,
    pub score: Option<f64>,
}

impl ProblemObs {
    pub fn from_event(e: &Event) -> Option<Self> {
        let p = e.payload.problem()?;
        Some(ProblemObs {
            timestamp_ms: e.timestamp_ms(),
            event_type: e.event_type,
            score: p.normalized_score(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Attempt {
    pub timestamp: DateTime<Utc>,
    /// Normalized to `[0, 1]`; `None` when the submission carried no grade.
    pub score: Option<f64>,
}

/// Difficulty index in `1..=4`; higher means more struggle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct ScoreR(u8);

impl ScoreR {
    pub fn get(self) -> u8 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("problem has no attempts")]
pub struct NoAttempts;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemRecord {
    pub user_id: String,
    pub problem_id: String,
    pub attempts: Vec<Attempt>,
    pub first_score: Option<f64>,
    pub final_score: Option<f64>,
    pub n_attempts: usize,
    pub score_r: Option<ScoreR>,
}

/// Attempt history for one user's events on one problem, in timestamp
/// order. `problem_check` and `problem_check_fail` are attempts (plus
/// `problem_graded` when configured); a failed check without a grade scores 0.
pub fn problem_history(
    user_id: &str,
    problem_id: &str,
    events: &[Event],
    cfg: &MetricsConfig,
) -> ProblemRecord {
    let obs: Vec<ProblemObs> = events.iter().filter_map(ProblemObs::from_event).collect();
    problem_record(user_id, problem_id, &obs, cfg)
}

pub(crate) fn is_attempt(kind: EventType, cfg: &MetricsConfig) -> bool {
    match kind {
        EventType::ProblemCheck | EventType::ProblemCheckFail => true,
        EventType::ProblemGraded => cfg.count_graded_as_attempt,
        _ => false,
    }
}

pub(crate) fn problem_record(
    user_id: &str,
    problem_id: &str,
    obs: &[ProblemObs],
    cfg: &MetricsConfig,
) -> ProblemRecord {
    let attempts: Vec<Attempt> = obs
        .iter()
        .filter(|o| is_attempt(o.event_type, cfg))
        .map(|o| Attempt {
            timestamp: DateTime::from_timestamp_millis(o.timestamp_ms).expect("valid millis"),
            score: match (o.score, o.event_type) {
                (None, EventType::ProblemCheckFail) => Some(0.0),
                (s, _) => s,
            },
        })
        .collect();
    let first_score = attempts.iter().find_map(|a| a.score);
    let final_score = attempts.iter().rev().find_map(|a| a.score);
    let mut record = ProblemRecord {
        user_id: user_id.to_owned(),
        problem_id: problem_id.to_owned(),
        n_attempts: attempts.len(),
        attempts,
        first_score,
        final_score,
        score_r: None,
    };
    record.score_r = score_r(&record, cfg.passing_threshold).ok();
    record
}

/// ScoreR for a record. A passing final score maps attempt counts
/// 1 → 1, 2 → 2, 3–4 → 3, 5+ → 4; a final score below `passing_threshold`
/// (or no scored attempt at all) is 4.
pub fn score_r(record: &ProblemRecord, passing_threshold: f64) -> Result<ScoreR, NoAttempts> {
    if record.n_attempts == 0 {
        return Err(NoAttempts);
    }
    let passing = record.final_score.is_some_and(|s| s >= passing_threshold);
    Ok(ScoreR(score_r_for(record.n_attempts, passing)))
}

pub(crate) fn score_r_for(attempts: usize, passing: bool) -> u8 {
    if !passing {
        return 4;
    }
    match attempts {
        0 | 1 => 1,
        2 => 2,
        3 | 4 => 3,
        _ => 4,
    }
}
