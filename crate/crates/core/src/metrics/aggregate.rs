use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::intervals::{watch_record, VideoObs};
use super::problems::{is_attempt, problem_record, ProblemObs};
use super::MetricsConfig;
use crate::event::{Event, EventType, Payload};
use crate::manifest::{BlockKind, CourseManifest};

/// Engagement summary for one user in one course instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentAggregate {
    pub user_id: String,
    pub course_instance: String,
    pub n_videos: usize,
    pub n_problems: usize,
    pub total_attempts: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_watch_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_score_r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_first_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_final_score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_attempts_per_problem: Option<f64>,
}

impl StudentAggregate {
    pub fn empty(user_id: &str, course_instance: &str) -> Self {
        StudentAggregate {
            user_id: user_id.to_owned(),
            course_instance: course_instance.to_owned(),
            n_videos: 0,
            n_problems: 0,
            total_attempts: 0,
            mean_watch_fraction: None,
            mean_score_r: None,
            mean_first_score: None,
            mean_final_score: None,
            order_fraction: None,
            mean_attempts_per_problem: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
struct StudentState {
    videos: BTreeMap<String, Vec<VideoObs>>,
    problems: BTreeMap<String, Vec<ProblemObs>>,
}

impl StudentState {
    fn absorb(&mut self, e: &Event) {
        match &e.payload {
            Payload::Video(v) => {
                if let Some(o) = VideoObs::from_event(e) {
                    self.videos.entry(v.video_id.clone()).or_default().push(o);
                }
            }
            Payload::Problem(p) => {
                if let Some(o) = ProblemObs::from_event(e) {
                    self.problems.entry(p.problem_id.clone()).or_default().push(o);
                }
            }
            Payload::None => {}
        }
    }

    fn merge(&mut self, other: StudentState) {
        for (k, v) in other.videos {
            self.videos.entry(k).or_default().extend(v);
        }
        for (k, v) in other.problems {
            self.problems.entry(k).or_default().extend(v);
        }
    }
}

/// Partial per-student state over any subset of events.
///
/// Absorbing events and merging states form a commutative monoid: the
/// aggregates produced by [`AggregationState::finish`] do not depend on
/// how the input was sharded or the order shards are merged in.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AggregationState {
    students: BTreeMap<(String, String), StudentState>,
}

impl AggregationState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_events<'a>(events: impl IntoIterator<Item = &'a Event>) -> Self {
        let mut state = Self::new();
        for e in events {
            state.absorb(e);
        }
        state
    }

    pub fn absorb(&mut self, event: &Event) {
        self.students
            .entry((event.course_id.clone(), event.user_id.clone()))
            .or_default()
            .absorb(event);
    }

    pub fn merge(&mut self, other: AggregationState) {
        for (k, v) in other.students {
            match self.students.get_mut(&k) {
                Some(s) => s.merge(v),
                None => {
                    self.students.insert(k, v);
                }
            }
        }
    }

    pub fn len(&self) -> usize {
        self.students.len()
    }

    pub fn is_empty(&self) -> bool {
        self.students.is_empty()
    }

    /// One aggregate per (course, user), ordered by course then user.
    pub fn finish(
        &self,
        manifest: Option<&CourseManifest>,
        cfg: &MetricsConfig,
    ) -> Vec<StudentAggregate> {
        let entries: Vec<_> = self.students.iter().collect();
        entries
            .into_par_iter()
            .map(|((course, user), state)| summarize(user, course, state, manifest, cfg))
            .collect()
    }
}

/// Aggregate for a single (user, course instance) from its events.
pub fn aggregate_student(
    user_id: &str,
    course_instance: &str,
    events: &[Event],
    manifest: Option<&CourseManifest>,
    cfg: &MetricsConfig,
) -> StudentAggregate {
    let mut state = StudentState::default();
    for e in events {
        state.absorb(e);
    }
    summarize(user_id, course_instance, &state, manifest, cfg)
}

fn cmp_opt(a: Option<f64>, b: Option<f64>) -> Ordering {
    match (a, b) {
        (Some(x), Some(y)) => x.total_cmp(&y),
        (a, b) => a.is_some().cmp(&b.is_some()),
    }
}

fn cmp_video(a: &VideoObs, b: &VideoObs) -> Ordering {
    a.timestamp_ms
        .cmp(&b.timestamp_ms)
        .then(a.event_type.lifecycle_rank().cmp(&b.event_type.lifecycle_rank()))
        .then_with(|| cmp_opt(a.current_time, b.current_time))
        .then_with(|| cmp_opt(a.old_time, b.old_time))
        .then_with(|| cmp_opt(a.new_time, b.new_time))
        .then_with(|| cmp_opt(a.duration, b.duration))
}

fn cmp_problem(a: &ProblemObs, b: &ProblemObs) -> Ordering {
    a.timestamp_ms
        .cmp(&b.timestamp_ms)
        .then(a.event_type.lifecycle_rank().cmp(&b.event_type.lifecycle_rank()))
        .then_with(|| cmp_opt(a.score, b.score))
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values
        .into_iter()
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn summarize(
    user_id: &str,
    course_instance: &str,
    state: &StudentState,
    manifest: Option<&CourseManifest>,
    cfg: &MetricsConfig,
) -> StudentAggregate {
    let mut agg = StudentAggregate::empty(user_id, course_instance);

    let mut fractions = Vec::new();
    // Earliest play per video, for ordering problems against videos.
    let mut first_play: HashMap<&str, i64> = HashMap::new();
    for (video_id, obs) in &state.videos {
        let mut obs = obs.clone();
        obs.sort_by(cmp_video);
        let Some(play) = obs
            .iter()
            .find(|o| o.event_type == EventType::PlayVideo)
            .map(|o| o.timestamp_ms)
        else {
            continue;
        };
        first_play.insert(video_id.as_str(), play);
        agg.n_videos += 1;
        if let Some(f) = watch_record(user_id, video_id, &obs).watch_fraction {
            fractions.push(f);
        }
    }
    agg.mean_watch_fraction = mean(fractions);

    let mut score_rs = Vec::new();
    let mut firsts = Vec::new();
    let mut finals = Vec::new();
    let mut first_attempts: Vec<(&str, i64)> = Vec::new();
    for (problem_id, obs) in &state.problems {
        if !obs.iter().any(|o| is_attempt(o.event_type, cfg)) {
            continue;
        }
        let mut obs = obs.clone();
        obs.sort_by(cmp_problem);
        let record = problem_record(user_id, problem_id, &obs, cfg);
        agg.n_problems += 1;
        agg.total_attempts += record.n_attempts;
        if let Some(s) = record.score_r {
            score_rs.push(s.get() as f64);
        }
        firsts.extend(record.first_score);
        finals.extend(record.final_score);
        if let Some(a) = record.attempts.first() {
            first_attempts.push((problem_id.as_str(), a.timestamp.timestamp_millis()));
        }
    }
    agg.mean_score_r = mean(score_rs);
    agg.mean_first_score = mean(firsts);
    agg.mean_final_score = mean(finals);
    if agg.n_problems > 0 {
        agg.mean_attempts_per_problem = Some(agg.total_attempts as f64 / agg.n_problems as f64);
    }
    if let Some(m) = manifest {
        agg.order_fraction = order_fraction(m, &first_play, &first_attempts);
    }
    agg
}

/// Share of attempted problems whose first attempt comes after a play of
/// some video in the same section. Only problems whose section contains a
/// video block are counted.
fn order_fraction(
    manifest: &CourseManifest,
    first_play: &HashMap<&str, i64>,
    first_attempts: &[(&str, i64)],
) -> Option<f64> {
    let mut eligible = 0usize;
    let mut studied = 0usize;
    for &(problem_id, attempt_ts) in first_attempts {
        let Some(pos) = manifest.locate_block(problem_id) else {
            continue;
        };
        let Some(section) = manifest.section(pos.section_key()) else {
            continue;
        };
        let videos: Vec<&str> = section
            .blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Video)
            .map(|b| b.block_id.as_str())
            .collect();
        if videos.is_empty() {
            continue;
        }
        eligible += 1;
        if videos
            .iter()
            .any(|v| first_play.get(v).is_some_and(|&t| t < attempt_ts))
        {
            studied += 1;
        }
    }
    (eligible > 0).then(|| studied as f64 / eligible as f64)
}
