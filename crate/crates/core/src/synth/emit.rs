use chrono::{DateTime, Utc};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::report::Modality;

use super::{PersonaSpec, SynthError};

const MINUTE_MS: i64 = 60_000;
const DAY_MS: i64 = 86_400_000;
/// Online learners finish within this many days of their first visit.
const ONLINE_SPAN_DAYS: i64 = 14;

#[derive(Debug, Clone)]
pub(crate) struct SectionContent {
    /// (block id, duration in seconds)
    pub videos: Vec<(String, f64)>,
    pub problems: Vec<String>,
}

pub(crate) struct Layout<'a> {
    pub course_id: &'a str,
    pub org_id: &'a str,
    pub sections: &'a [SectionContent],
    pub start_ms: i64,
    pub weeks: u32,
    pub modality: Modality,
    pub passing_threshold: f64,
}

#[derive(Default)]
struct Visit {
    videos: Vec<usize>,
    problems: Vec<usize>,
}

fn range_usize(rng: &mut ChaCha8Rng, r: [usize; 2]) -> usize {
    rng.gen_range(r[0]..=r[1])
}

fn range_f64(rng: &mut ChaCha8Rng, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.gen_range(r[0]..=r[1])
    }
}

fn round_ms(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

fn hex_id(rng: &mut ChaCha8Rng) -> String {
    format!("{:016x}{:016x}", rng.gen::<u64>(), rng.gen::<u64>())
}

/// Spread `count` items round-robin over the first `n_sections` sections,
/// capped by what each section offers.
fn allocate(
    sections: &[SectionContent],
    n_sections: usize,
    count: usize,
    available: impl Fn(&SectionContent) -> usize,
) -> Vec<usize> {
    let mut taken = vec![0usize; n_sections];
    let mut left = count;
    while left > 0 {
        let before = left;
        for (i, s) in sections[..n_sections].iter().enumerate() {
            if left > 0 && taken[i] < available(s) {
                taken[i] += 1;
                left -= 1;
            }
        }
        assert!(left < before, "allocation must make progress");
    }
    taken
}

fn sections_needed(sections: &[SectionContent], videos: usize, problems: usize) -> Option<usize> {
    let (mut v, mut p) = (0, 0);
    if videos == 0 && problems == 0 {
        return Some(0);
    }
    for (i, s) in sections.iter().enumerate() {
        v += s.videos.len();
        p += s.problems.len();
        if v >= videos && p >= problems {
            return Some(i + 1);
        }
    }
    None
}

struct Emitter<'a> {
    layout: &'a Layout<'a>,
    user_id: &'a str,
    session: String,
    out: Vec<(i64, String)>,
}

impl Emitter<'_> {
    fn push(&mut self, ts: i64, event_type: &str, payload: Value) {
        let time = DateTime::<Utc>::from_timestamp_millis(ts)
            .expect("timestamp in range")
            .format("%Y-%m-%dT%H:%M:%S%.3fZ")
            .to_string();
        let record = json!({
            "name": event_type,
            "event_type": event_type,
            "event_source": "browser",
            "time": time,
            "host": "courses.edx.org",
            "context": {
                "user_id": self.user_id,
                "course_id": self.layout.course_id,
                "org_id": self.layout.org_id,
                "session": self.session,
            },
            "event": payload,
        });
        self.out.push((ts, record.to_string()));
    }

    fn video(&mut self, ts: i64, event_type: &str, id: &str, duration: f64, position: f64) {
        // Browser video events carry their payload as an encoded string.
        let payload = json!({
            "id": id,
            "code": "hls",
            "duration": duration,
            "currentTime": position,
        });
        self.push(ts, event_type, Value::String(payload.to_string()));
    }

    fn check(&mut self, ts: i64, problem_id: &str, score: f64, attempt: usize) {
        let success = if score >= self.layout.passing_threshold {
            "correct"
        } else {
            "incorrect"
        };
        let payload = json!({
            "problem_id": problem_id,
            "grade": score,
            "max_grade": 1.0,
            "success": success,
            "attempts": attempt,
        });
        self.push(ts, "problem_check", payload);
    }
}

/// Every event for one generated learner, as (timestamp ms, JSON line).
pub(crate) fn user_events(
    persona: &PersonaSpec,
    user_id: &str,
    layout: &Layout<'_>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(i64, String)>, SynthError> {
    let n_videos = range_usize(rng, persona.videos_watched_range);
    let n_problems = range_usize(rng, persona.problems_attempted_range);
    let n_sections = sections_needed(layout.sections, n_videos, n_problems)
        .ok_or(SynthError::ManifestTooSmall {
            videos: n_videos,
            problems: n_problems,
        })?;
    let per_video = allocate(layout.sections, n_sections, n_videos, |s| s.videos.len());
    let per_problem = allocate(layout.sections, n_sections, n_problems, |s| s.problems.len());

    let mut visits: Vec<(usize, Visit)> = Vec::new();
    for i in 0..n_sections {
        if per_video[i] == 0 && per_problem[i] == 0 {
            continue;
        }
        if persona.watch_before_problems && per_problem[i] > 0 && per_video[i] == 0 {
            return Err(SynthError::AmbiguousPersona {
                class: persona.target_class,
                reason: "too few videos to precede every attempted problem".into(),
            });
        }
        visits.push((
            i,
            Visit {
                videos: (0..per_video[i]).collect(),
                problems: (0..per_problem[i]).collect(),
            },
        ));
    }

    let n_visits = visits.len().max(1) as i64;
    let first_day = match layout.modality {
        Modality::OnCampus => 0,
        Modality::Online => rng.gen_range(0..layout.weeks as i64 * 7),
    };
    let span_days = match layout.modality {
        Modality::OnCampus => layout.weeks as i64 * 7,
        Modality::Online => ONLINE_SPAN_DAYS,
    };

    let mut em = Emitter {
        layout,
        user_id,
        session: String::new(),
        out: Vec::new(),
    };
    let mut cursor = i64::MIN;

    if visits.is_empty() {
        // A learner who only opened a page once.
        em.session = hex_id(rng);
        let ts = layout.start_ms + first_day * DAY_MS + rng.gen_range(8 * 60..22 * 60) * MINUTE_MS;
        let (id, duration) = &layout.sections[0].videos[0];
        em.video(ts, "load_video", id, *duration, 0.0);
        return Ok(em.out);
    }

    for (j, (section, visit)) in visits.iter().enumerate() {
        let day = first_day + j as i64 * span_days / n_visits;
        let planned = layout.start_ms + day * DAY_MS + rng.gen_range(8 * 60..20 * 60) * MINUTE_MS;
        let mut t = planned.max(cursor.saturating_add(45 * MINUTE_MS));
        em.session = hex_id(rng);
        let content = &layout.sections[*section];

        let watch = |em: &mut Emitter<'_>, t: &mut i64, rng: &mut ChaCha8Rng| {
            for &v in &visit.videos {
                let (id, duration) = &content.videos[v];
                let fraction = range_f64(rng, persona.video_watch_range);
                let position = round_ms((fraction * duration).min(*duration));
                em.video(*t, "load_video", id, *duration, 0.0);
                *t += 1_000;
                em.video(*t, "play_video", id, *duration, 0.0);
                *t += (position * 1000.0).round() as i64;
                em.video(*t, "pause_video", id, *duration, position);
                *t += rng.gen_range(2_000..10_000);
            }
        };
        let solve = |em: &mut Emitter<'_>, t: &mut i64, rng: &mut ChaCha8Rng| {
            for &p in &visit.problems {
                let id = &content.problems[p];
                em.push(*t, "problem_show", json!({ "problem_id": id }));
                let attempts = range_usize(rng, persona.attempts_per_problem_range);
                for k in 1..=attempts {
                    *t += rng.gen_range(20_000..90_000);
                    let score = if k == attempts && attempts > 1 {
                        1.0
                    } else {
                        round_ms(range_f64(rng, persona.first_score_range))
                    };
                    em.check(*t, id, score, k);
                }
                *t += rng.gen_range(5_000..30_000);
            }
        };
        if persona.watch_before_problems {
            watch(&mut em, &mut t, rng);
            solve(&mut em, &mut t, rng);
        } else {
            solve(&mut em, &mut t, rng);
            watch(&mut em, &mut t, rng);
        }
        cursor = t;
    }
    Ok(em.out)
}
