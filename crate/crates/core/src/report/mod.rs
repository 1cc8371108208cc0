//! Cohort-level report tables: enrollment, class breakdown, first/final
//! scores, ScoreR distribution and weekly new/returning users.
//!
//! Every table is flat so it can be written as CSV or JSON lines; the
//! cohort appears as `modality` and `term_label` columns.

mod output;
mod stats;

pub use output::{write_csv, write_table, OutputFormat, Row};
pub use stats::{quantile, Summary};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use chrono::{Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::classify::OrdinalClass;
use crate::event::Event;
use crate::metrics::StudentAggregate;
use crate::session::{build_sessions, PresenceState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modality {
    OnCampus,
    Online,
}

impl FromStr for Modality {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "on_campus" => Ok(Modality::OnCampus),
            "online" => Ok(Modality::Online),
            other => Err(format!("unknown modality {other:?} (expected on_campus or online)")),
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Modality::OnCampus => "on_campus",
            Modality::Online => "online",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CohortId {
    pub modality: Modality,
    pub term_label: String,
}

impl CohortId {
    pub fn new(modality: Modality, term_label: impl Into<String>) -> Self {
        CohortId {
            modality,
            term_label: term_label.into(),
        }
    }
}

impl fmt::Display for CohortId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.modality, self.term_label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EnrollmentRow {
    pub modality: Modality,
    pub term_label: String,
    pub users: usize,
    pub user_events: usize,
    pub sessions: usize,
}

impl Row for EnrollmentRow {
    const HEADER: &'static [&'static str] =
        &["modality", "term_label", "users", "user_events", "sessions"];
}

/// Distinct users, retained events and sessions for one cohort.
pub fn enrollment_table(cohort: &CohortId, events: &[Event], gap: Duration) -> EnrollmentRow {
    let mut by_user: BTreeMap<&str, Vec<Event>> = BTreeMap::new();
    for e in events {
        by_user.entry(&e.user_id).or_default().push(e.clone());
    }
    let sessions = by_user
        .values()
        .map(|evs| build_sessions(evs, gap).len())
        .sum();
    EnrollmentRow {
        modality: cohort.modality,
        term_label: cohort.term_label.clone(),
        users: by_user.len(),
        user_events: events.len(),
        sessions,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BreakdownRow {
    pub modality: Modality,
    pub term_label: String,
    pub class: OrdinalClass,
    pub count: usize,
    pub proportion: f64,
    pub proportion_excluding_no_show: Option<f64>,
}

impl Row for BreakdownRow {
    const HEADER: &'static [&'static str] = &[
        "modality",
        "term_label",
        "class",
        "count",
        "proportion",
        "proportion_excluding_no_show",
    ];
}

/// One row per class for a cohort with at least one student. With
/// `exclude_no_show`, the extra column renormalizes over the other seven
/// classes (absent for the no-show row, or when every student is a no-show).
pub fn categorical_breakdown(
    cohort: &CohortId,
    classes: &[OrdinalClass],
    exclude_no_show: bool,
) -> Vec<BreakdownRow> {
    if classes.is_empty() {
        return Vec::new();
    }
    let mut counts: BTreeMap<OrdinalClass, usize> = BTreeMap::new();
    for c in classes {
        *counts.entry(*c).or_default() += 1;
    }
    let total = classes.len() as f64;
    let engaged = classes.len() - counts.get(&OrdinalClass::NoShow).copied().unwrap_or(0);
    OrdinalClass::ALL
        .iter()
        .map(|&class| {
            let count = counts.get(&class).copied().unwrap_or(0);
            let proportion_excluding_no_show = (exclude_no_show
                && class != OrdinalClass::NoShow
                && engaged > 0)
                .then(|| count as f64 / engaged as f64);
            BreakdownRow {
                modality: cohort.modality,
                term_label: cohort.term_label.clone(),
                class,
                count,
                proportion: count as f64 / total,
                proportion_excluding_no_show,
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreMetric {
    FirstScore,
    FinalScore,
    ScoreR,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreStatsRow {
    pub modality: Modality,
    pub term_label: String,
    pub metric: ScoreMetric,
    /// `all` or a class name.
    pub group: String,
    pub mean: Option<f64>,
    pub variance: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub n: usize,
}

impl Row for ScoreStatsRow {
    const HEADER: &'static [&'static str] = &[
        "modality",
        "term_label",
        "metric",
        "group",
        "mean",
        "variance",
        "q1",
        "median",
        "q3",
        "n",
    ];
}

impl ScoreStatsRow {
    fn new(cohort: &CohortId, metric: ScoreMetric, group: String, values: &[f64]) -> Self {
        let s = Summary::of(values);
        ScoreStatsRow {
            modality: cohort.modality,
            term_label: cohort.term_label.clone(),
            metric,
            group,
            mean: s.map(|s| s.mean),
            variance: s.map(|s| s.variance),
            q1: s.map(|s| s.q1),
            median: s.map(|s| s.median),
            q3: s.map(|s| s.q3),
            n: values.len(),
        }
    }
}

/// First- and final-score statistics over per-student means. Students
/// without a scored attempt are left out; an empty cohort gives `n = 0`.
pub fn score_comparison(cohort: &CohortId, aggregates: &[StudentAggregate]) -> Vec<ScoreStatsRow> {
    let firsts: Vec<f64> = aggregates.iter().filter_map(|a| a.mean_first_score).collect();
    let finals: Vec<f64> = aggregates.iter().filter_map(|a| a.mean_final_score).collect();
    vec![
        ScoreStatsRow::new(cohort, ScoreMetric::FirstScore, "all".into(), &firsts),
        ScoreStatsRow::new(cohort, ScoreMetric::FinalScore, "all".into(), &finals),
    ]
}

/// `mean_score_r` statistics per class. Classes with no members are
/// omitted; members without attempts do not contribute to `n`.
pub fn scorer_distribution(
    cohort: &CohortId,
    students: &[(&StudentAggregate, OrdinalClass)],
) -> Vec<ScoreStatsRow> {
    let mut by_class: BTreeMap<OrdinalClass, Vec<f64>> = BTreeMap::new();
    for (agg, class) in students {
        let values = by_class.entry(*class).or_default();
        values.extend(agg.mean_score_r);
    }
    by_class
        .into_iter()
        .map(|(class, values)| {
            ScoreStatsRow::new(cohort, ScoreMetric::ScoreR, class.to_string(), &values)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct WeeklyRow {
    pub modality: Modality,
    pub term_label: String,
    pub week_index: u32,
    pub new_users: usize,
    pub returning_users: usize,
}

impl Row for WeeklyRow {
    const HEADER: &'static [&'static str] = &[
        "modality",
        "term_label",
        "week_index",
        "new_users",
        "returning_users",
    ];
}

/// Weekly new/returning counts for a cohort, plus the number of events
/// dropped for preceding the anchor.
pub fn weekly_report(cohort: &CohortId, events: &[Event], anchor: NaiveDate) -> (Vec<WeeklyRow>, usize) {
    let mut state = PresenceState::default();
    for e in events {
        state.absorb(e, anchor);
    }
    let rows = state
        .finish()
        .into_iter()
        .map(|w| WeeklyRow {
            modality: cohort.modality,
            term_label: cohort.term_label.clone(),
            week_index: w.week_index,
            new_users: w.new_users,
            returning_users: w.returning_users,
        })
        .collect();
    (rows, state.before_anchor())
}

/// Distinct users in a slice of events.
pub fn distinct_users(events: &[Event]) -> usize {
    events.iter().map(|e| e.user_id.as_str()).collect::<BTreeSet<_>>().len()
}
