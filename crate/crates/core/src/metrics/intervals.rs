//! Watched-interval reconstruction for one (user, video) pair.

use serde::Serialize;

use crate::event::{Event, EventType};

/// The subset of a video event needed to track playback position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct VideoObs {
    pub timestamp_ms: i64,
    pub event_type: EventType,
    pub duration: Option<f64>,
    pub current_time: Option<f64>,
    pub old_time: Option<f64>,
    pub new_time: Option<f64>,
}

impl VideoObs {
    pub fn from_event(e: &Event) -> Option<Self> {
        let v = e.payload.video()?;
        Some(VideoObs {
            timestamp_ms: e.timestamp_ms(),
            event_type: e.event_type,
            duration: v.duration,
            current_time: v.current_time,
            old_time: v.old_time,
            new_time: v.new_time,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WatchRecord {
    pub user_id: String,
    pub video_id: String,
    /// Disjoint, sorted `[start, end]` content-second ranges.
    pub intervals: Vec<[f64; 2]>,
    pub duration: Option<f64>,
    pub watch_fraction: Option<f64>,
    pub played: bool,
}

impl WatchRecord {
    pub fn watched_seconds(&self) -> f64 {
        self.intervals.iter().map(|[s, e]| e - s).sum()
    }
}

/// Rebuilds the watched ranges from one user's events on one video.
///
/// Events must already be in timestamp order and belong to a single
/// (user, video) pair; non-video events are ignored.
pub fn reconstruct_intervals(user_id: &str, video_id: &str, events: &[Event]) -> WatchRecord {
    let obs: Vec<VideoObs> = events.iter().filter_map(VideoObs::from_event).collect();
    watch_record(user_id, video_id, &obs)
}

pub(crate) fn watch_record(user_id: &str, video_id: &str, obs: &[VideoObs]) -> WatchRecord {
    let duration = obs.iter().find_map(|o| o.duration);
    let played = obs.iter().any(|o| o.event_type == EventType::PlayVideo);
    let raw = raw_segments(obs, duration);
    let intervals = union(clamp(raw, duration));
    let watched: f64 = intervals.iter().map(|[s, e]| e - s).sum();
    let watch_fraction = duration
        .filter(|d| *d > 0.0)
        .map(|d| (watched / d).clamp(0.0, 1.0));
    WatchRecord {
        user_id: user_id.to_owned(),
        video_id: video_id.to_owned(),
        intervals,
        duration,
        watch_fraction,
        played,
    }
}

/// Player state machine. A play opens a segment at its position; the next
/// pause/stop closes it at `current_time`, a seek at `old_time`, a complete
/// at the duration, and another play at its own position (then reopens).
/// Missing positions fall back to the last known position. A trailing open
/// segment contributes nothing.
fn raw_segments(obs: &[VideoObs], duration: Option<f64>) -> Vec<[f64; 2]> {
    let mut segments = Vec::new();
    let mut open: Option<f64> = None;
    let mut position: Option<f64> = None;

    for o in obs {
        let close_at = match o.event_type {
            EventType::PlayVideo => {
                let at = o.current_time.or(position);
                if let Some(start) = open.take() {
                    segments.push([start, at.unwrap_or(start)]);
                }
                open = at;
                position = at;
                continue;
            }
            EventType::PauseVideo | EventType::StopVideo => o.current_time,
            EventType::SeekVideo => {
                let close = o.old_time;
                if let Some(start) = open.take() {
                    segments.push([start, close.unwrap_or(start)]);
                }
                position = o.new_time.or(close).or(position);
                continue;
            }
            EventType::CompleteVideo => duration.or(o.current_time),
            _ => continue,
        };
        if let Some(start) = open.take() {
            let end = close_at.unwrap_or(start);
            segments.push([start, end]);
            position = Some(end);
        } else if let Some(p) = close_at {
            position = Some(p);
        }
    }
    segments
}

fn clamp(segments: Vec<[f64; 2]>, duration: Option<f64>) -> Vec<[f64; 2]> {
    segments
        .into_iter()
        .filter_map(|[s, e]| {
            let (s, e) = match duration {
                Some(d) => (s.clamp(0.0, d), e.clamp(0.0, d)),
                None => (s.max(0.0), e.max(0.0)),
            };
            (s < e).then_some([s, e])
        })
        .collect()
}

/// Merges overlapping or touching ranges.
pub(crate) fn union(mut segments: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    segments.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(segments.len());
    for [s, e] in segments {
        match out.last_mut() {
            Some(last) if s <= last[1] => last[1] = last[1].max(e),
            _ => out.push([s, e]),
        }
    }
    out
}
