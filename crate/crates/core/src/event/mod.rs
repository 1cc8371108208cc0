//! Typed tracking-log events.
//!
//! Only the user-generated video and problem-check event names are retained;
//! everything else is recognized as [`EventType::Other`] and filtered out at
//! parse time. Events have a flat canonical JSON form (one object per line)
//! used for intermediate files and round-trip tests.

mod parse;
mod reader;

use std::fmt;
use std::ops::AddAssign;
use std::str::FromStr;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

pub use parse::{classify_event_type, parse_line, FilterReason, MalformedReason, ParseOutcome};
pub use reader::{open_log, read_log, read_logs, LogBatch};

/// Which column of the retained event table an event type belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EventTag {
    Video,
    ProblemCheck,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventType {
    LoadVideo,
    PlayVideo,
    SeekVideo,
    StopVideo,
    PauseVideo,
    CompleteVideo,
    HideTranscript,
    SpeedChange,
    ProblemShow,
    ProblemGraded,
    SaveProblemFail,
    ProblemCheckFail,
    SaveProblemSuccess,
    Showanswer,
    ProblemCheck,
    Other,
}

impl EventType {
    /// The retained event types, video column first.
    pub const RETAINED: [EventType; 15] = [
        EventType::LoadVideo,
        EventType::PlayVideo,
        EventType::SeekVideo,
        EventType::StopVideo,
        EventType::PauseVideo,
        EventType::CompleteVideo,
        EventType::HideTranscript,
        EventType::SpeedChange,
        EventType::ProblemShow,
        EventType::ProblemGraded,
        EventType::SaveProblemFail,
        EventType::ProblemCheckFail,
        EventType::SaveProblemSuccess,
        EventType::Showanswer,
        EventType::ProblemCheck,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EventType::LoadVideo => "load_video",
            EventType::PlayVideo => "play_video",
            EventType::SeekVideo => "seek_video",
            EventType::StopVideo => "stop_video",
            EventType::PauseVideo => "pause_video",
            EventType::CompleteVideo => "complete_video",
            EventType::HideTranscript => "hide_transcript",
            EventType::SpeedChange => "speed_change",
            EventType::ProblemShow => "problem_show",
            EventType::ProblemGraded => "problem_graded",
            EventType::SaveProblemFail => "save_problem_fail",
            EventType::ProblemCheckFail => "problem_check_fail",
            EventType::SaveProblemSuccess => "save_problem_success",
            EventType::Showanswer => "showanswer",
            EventType::ProblemCheck => "problem_check",
            EventType::Other => "other",
        }
    }

    /// `None` for [`EventType::Other`].
    pub fn tag(self) -> Option<EventTag> {
        match self {
            EventType::LoadVideo
            | EventType::PlayVideo
            | EventType::SeekVideo
            | EventType::StopVideo
            | EventType::PauseVideo
            | EventType::CompleteVideo
            | EventType::HideTranscript
            | EventType::SpeedChange => Some(EventTag::Video),
            EventType::ProblemShow
            | EventType::ProblemGraded
            | EventType::SaveProblemFail
            | EventType::ProblemCheckFail
            | EventType::SaveProblemSuccess
            | EventType::Showanswer
            | EventType::ProblemCheck => Some(EventTag::ProblemCheck),
            EventType::Other => None,
        }
    }

    pub fn is_retained(self) -> bool {
        self != EventType::Other
    }

    /// Ordering used to break timestamp ties: the order in which a player
    /// or problem widget would plausibly emit these within one millisecond.
    pub(crate) fn lifecycle_rank(self) -> u8 {
        match self {
            EventType::LoadVideo => 0,
            EventType::HideTranscript => 1,
            EventType::SpeedChange => 2,
            EventType::PlayVideo => 3,
            EventType::SeekVideo => 4,
            EventType::PauseVideo => 5,
            EventType::StopVideo => 6,
            EventType::CompleteVideo => 7,
            EventType::ProblemShow => 8,
            EventType::SaveProblemFail => 9,
            EventType::SaveProblemSuccess => 10,
            EventType::ProblemCheckFail => 11,
            EventType::ProblemCheck => 12,
            EventType::ProblemGraded => 13,
            EventType::Showanswer => 14,
            EventType::Other => 15,
        }
    }
}

impl fmt::Display for EventType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventSource {
    Browser,
    Server,
    Other,
}

impl EventSource {
    pub fn as_str(self) -> &'static str {
        match self {
            EventSource::Browser => "browser",
            EventSource::Server => "server",
            EventSource::Other => "other",
        }
    }
}

impl FromStr for EventSource {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "browser" => EventSource::Browser,
            "server" => EventSource::Server,
            _ => EventSource::Other,
        })
    }
}

/// Player state carried by a video event. Positions are content seconds.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct VideoPayload {
    pub video_id: String,
    pub duration: Option<f64>,
    pub current_time: Option<f64>,
    pub old_time: Option<f64>,
    pub new_time: Option<f64>,
    pub new_speed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProblemPayload {
    pub problem_id: String,
    pub grade: Option<f64>,
    pub max_grade: Option<f64>,
    pub success: Option<bool>,
    pub attempts: Option<u32>,
}

impl ProblemPayload {
    /// `grade / max_grade` when both are known.
    pub fn normalized_score(&self) -> Option<f64> {
        match (self.grade, self.max_grade) {
            (Some(g), Some(m)) if m > 0.0 => Some((g / m).clamp(0.0, 1.0)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Payload {
    Video(VideoPayload),
    Problem(ProblemPayload),
    #[default]
    None,
}

impl Payload {
    pub fn video(&self) -> Option<&VideoPayload> {
        match self {
            Payload::Video(v) => Some(v),
            _ => None,
        }
    }

    pub fn problem(&self) -> Option<&ProblemPayload> {
        match self {
            Payload::Problem(p) => Some(p),
            _ => None,
        }
    }
}

/// One retained, typed log record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "FlatEvent", try_from = "FlatEvent")]
pub struct Event {
    pub user_id: String,
    pub course_id: String,
    pub org_id: String,
    pub session_id: Option<String>,
    pub timestamp: DateTime<Utc>,
    pub event_type: EventType,
    pub source: EventSource,
    pub payload: Payload,
}

impl Event {
    pub fn timestamp_ms(&self) -> i64 {
        self.timestamp.timestamp_millis()
    }

    /// Canonical single-line JSON form.
    pub fn to_canonical_json(&self) -> String {
        serde_json::to_string(self).expect("event serialization is infallible")
    }

    /// Total order used wherever event processing must not depend on input
    /// order: timestamp, then lifecycle rank, then canonical form.
    pub fn canonical_cmp(&self, other: &Event) -> std::cmp::Ordering {
        self.timestamp
            .cmp(&other.timestamp)
            .then_with(|| {
                self.event_type
                    .lifecycle_rank()
                    .cmp(&other.event_type.lifecycle_rank())
            })
            .then_with(|| self.to_canonical_json().cmp(&other.to_canonical_json()))
    }
}

pub(crate) fn format_timestamp(ts: &DateTime<Utc>) -> String {
    ts.to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlatEvent {
    user_id: String,
    course_id: String,
    org_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    session_id: Option<String>,
    timestamp: String,
    event_type: EventType,
    source: EventSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    video_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    duration: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    current_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    old_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    new_time: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    new_speed: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    problem_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    grade: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    max_grade: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    success: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attempts: Option<u32>,
}

impl From<Event> for FlatEvent {
    fn from(e: Event) -> Self {
        let mut flat = FlatEvent {
            user_id: e.user_id,
            course_id: e.course_id,
            org_id: e.org_id,
            session_id: e.session_id,
            timestamp: format_timestamp(&e.timestamp),
            event_type: e.event_type,
            source: e.source,
            video_id: None,
            duration: None,
            current_time: None,
            old_time: None,
            new_time: None,
            new_speed: None,
            problem_id: None,
            grade: None,
            max_grade: None,
            success: None,
            attempts: None,
        };
        match e.payload {
            Payload::Video(v) => {
                flat.video_id = Some(v.video_id);
                flat.duration = v.duration;
                flat.current_time = v.current_time;
                flat.old_time = v.old_time;
                flat.new_time = v.new_time;
                flat.new_speed = v.new_speed;
            }
            Payload::Problem(p) => {
                flat.problem_id = Some(p.problem_id);
                flat.grade = p.grade;
                flat.max_grade = p.max_grade;
                flat.success = p.success;
                flat.attempts = p.attempts;
            }
            Payload::None => {}
        }
        flat
    }
}

impl TryFrom<FlatEvent> for Event {
    type Error = String;

    fn try_from(f: FlatEvent) -> Result<Self, Self::Error> {
        let timestamp = parse::parse_timestamp(&f.timestamp)
            .ok_or_else(|| format!("bad timestamp {:?}", f.timestamp))?;
        let payload = match (f.event_type.tag(), f.video_id, f.problem_id) {
            (Some(EventTag::Video), Some(video_id), None) => Payload::Video(VideoPayload {
                video_id,
                duration: f.duration,
                current_time: f.current_time,
                old_time: f.old_time,
                new_time: f.new_time,
                new_speed: f.new_speed,
            }),
            (Some(EventTag::ProblemCheck), None, Some(problem_id)) => {
                Payload::Problem(ProblemPayload {
                    problem_id,
                    grade: f.grade,
                    max_grade: f.max_grade,
                    success: f.success,
                    attempts: f.attempts,
                })
            }
            (_, None, None) => Payload::None,
            (tag, _, _) => {
                return Err(format!(
                    "payload does not match event type {} ({tag:?})",
                    f.event_type
                ))
            }
        };
        Ok(Event {
            user_id: f.user_id,
            course_id: f.course_id,
            org_id: f.org_id,
            session_id: f.session_id,
            timestamp,
            event_type: f.event_type,
            source: f.source,
            payload,
        })
    }
}

/// Line tallies for one or more log files.
///
/// `lines_read = parsed + malformed` and `parsed = retained + filtered_out`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseStats {
    pub lines_read: u64,
    pub parsed: u64,
    pub retained: u64,
    pub malformed: u64,
    pub filtered_out: u64,
}

impl ParseStats {
    pub fn record(&mut self, outcome: &ParseOutcome) {
        self.lines_read += 1;
        match outcome {
            ParseOutcome::Event(_) => {
                self.parsed += 1;
                self.retained += 1;
            }
            ParseOutcome::FilteredOut(_) => {
                self.parsed += 1;
                self.filtered_out += 1;
            }
            ParseOutcome::Malformed(_) => self.malformed += 1,
        }
    }

    pub fn is_consistent(&self) -> bool {
        self.lines_read == self.parsed + self.malformed
            && self.parsed == self.retained + self.filtered_out
    }
}

impl AddAssign for ParseStats {
    fn add_assign(&mut self, rhs: Self) {
        self.lines_read += rhs.lines_read;
        self.parsed += rhs.parsed;
        self.retained += rhs.retained;
        self.malformed += rhs.malformed;
        self.filtered_out += rhs.filtered_out;
    }
}

impl std::iter::Sum for ParseStats {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(ParseStats::default(), |mut acc, s| {
            acc += s;
            acc
        })
    }
}
