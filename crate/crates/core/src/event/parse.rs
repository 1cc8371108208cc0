use std::borrow::Cow;
use std::fmt;

use chrono::{DateTime, NaiveDateTime, SubsecRound, Utc};
use serde::de::{self, Deserializer, IgnoredAny, MapAccess, SeqAccess, Visitor};
use serde::Deserialize;
use serde_json::value::RawValue;

use super::{Event, EventSource, EventTag, EventType, Payload, ProblemPayload, VideoPayload};

#[derive(Debug, Clone, PartialEq)]
#[allow(clippy::large_enum_variant)]
pub enum ParseOutcome {
    Event(Event),
    Malformed(MalformedReason),
    FilteredOut(FilterReason),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MalformedReason {
    Empty,
    InvalidJson,
    MissingEventType,
    MissingUser,
    MissingCourse,
    BadTimestamp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterReason {
    NotRetained,
    NotUserGenerated,
}

/// Map an event name onto the retained set. Matching is exact and
/// case-sensitive.
pub fn classify_event_type(name: &str) -> EventType {
    match name {
        "load_video" => EventType::LoadVideo,
        "play_video" => EventType::PlayVideo,
        "seek_video" => EventType::SeekVideo,
        "stop_video" => EventType::StopVideo,
        "pause_video" => EventType::PauseVideo,
        "complete_video" => EventType::CompleteVideo,
        "hide_transcript" => EventType::HideTranscript,
        "speed_change" => EventType::SpeedChange,
        "problem_show" => EventType::ProblemShow,
        "problem_graded" => EventType::ProblemGraded,
        "save_problem_fail" => EventType::SaveProblemFail,
        "problem_check_fail" => EventType::ProblemCheckFail,
        "save_problem_success" => EventType::SaveProblemSuccess,
        "showanswer" => EventType::Showanswer,
        "problem_check" => EventType::ProblemCheck,
        _ => EventType::Other,
    }
}

#[derive(Deserialize)]
struct RawRecord<'a> {
    #[serde(borrow, default)]
    event_type: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    name: Option<Cow<'a, str>>,
    #[serde(default, deserialize_with = "lenient_id")]
    user_id: Option<String>,
    #[serde(default, deserialize_with = "lenient_id")]
    course_id: Option<String>,
    #[serde(default, deserialize_with = "lenient_id")]
    org_id: Option<String>,
    #[serde(default, deserialize_with = "lenient_id")]
    session: Option<String>,
    #[serde(borrow, default)]
    time: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    event_source: Option<Cow<'a, str>>,
    #[serde(borrow, default)]
    event: Option<&'a RawValue>,
    #[serde(borrow, default)]
    context: Option<&'a RawValue>,
}

#[derive(Deserialize, Default)]
struct RawContext {
    #[serde(default, deserialize_with = "lenient_id")]
    user_id: Option<String>,
    #[serde(default, deserialize_with = "lenient_id")]
    course_id: Option<String>,
    #[serde(default, deserialize_with = "lenient_id")]
    org_id: Option<String>,
    #[serde(default, deserialize_with = "lenient_id")]
    session: Option<String>,
}

#[derive(Deserialize, Default)]
struct RawPayload {
    #[serde(default, deserialize_with = "lenient_id")]
    id: Option<String>,
    #[serde(default, deserialize_with = "lenient_num")]
    duration: Option<f64>,
    #[serde(default, alias = "current_time", deserialize_with = "lenient_num")]
    #[serde(rename = "currentTime")]
    current_time: Option<f64>,
    #[serde(default, deserialize_with = "lenient_num")]
    old_time: Option<f64>,
    #[serde(default, deserialize_with = "lenient_num")]
    new_time: Option<f64>,
    #[serde(default, deserialize_with = "lenient_num")]
    new_speed: Option<f64>,
    #[serde(default, alias = "problem", deserialize_with = "lenient_id")]
    problem_id: Option<String>,
    #[serde(default, deserialize_with = "lenient_num")]
    grade: Option<f64>,
    #[serde(default, deserialize_with = "lenient_num")]
    max_grade: Option<f64>,
    #[serde(default, deserialize_with = "lenient_bool")]
    success: Option<bool>,
    #[serde(default, deserialize_with = "lenient_num")]
    attempts: Option<f64>,
}

/// Parse one raw log line.
///
/// Trailing `\r`/`\n` are ignored. Never panics on arbitrary bytes.
pub fn parse_line(line: &[u8]) -> ParseOutcome {
    let line = trim_line_end(line);
    if line.iter().all(u8::is_ascii_whitespace) {
        return ParseOutcome::Malformed(MalformedReason::Empty);
    }
    let raw: RawRecord<'_> = match serde_json::from_slice(line) {
        Ok(r) => r,
        Err(_) => return ParseOutcome::Malformed(MalformedReason::InvalidJson),
    };

    let type_name = match raw.event_type.as_deref().or(raw.name.as_deref()) {
        Some(n) => n,
        None => return ParseOutcome::Malformed(MalformedReason::MissingEventType),
    };
    let event_type = classify_event_type(type_name);
    if !event_type.is_retained() {
        return ParseOutcome::FilteredOut(FilterReason::NotRetained);
    }
    let source: EventSource = raw
        .event_source
        .as_deref()
        .unwrap_or("")
        .parse()
        .unwrap_or(EventSource::Other);
    if source != EventSource::Browser {
        return ParseOutcome::FilteredOut(FilterReason::NotUserGenerated);
    }

    let context: RawContext = raw
        .context
        .and_then(|c| serde_json::from_str(c.get()).ok())
        .unwrap_or_default();
    let user_id = match non_empty(raw.user_id).or_else(|| non_empty(context.user_id)) {
        Some(u) => u,
        None => return ParseOutcome::Malformed(MalformedReason::MissingUser),
    };
    let course_id = match non_empty(raw.course_id).or_else(|| non_empty(context.course_id)) {
        Some(c) => c,
        None => return ParseOutcome::Malformed(MalformedReason::MissingCourse),
    };
    let timestamp = match raw.time.as_deref().and_then(parse_timestamp) {
        Some(t) => t,
        None => return ParseOutcome::Malformed(MalformedReason::BadTimestamp),
    };
    let org_id = non_empty(raw.org_id)
        .or_else(|| non_empty(context.org_id))
        .unwrap_or_default();
    let session_id = non_empty(raw.session).or_else(|| non_empty(context.session));

    let payload = raw
        .event
        .map(|r| build_payload(event_type, decode_payload(r)))
        .unwrap_or(Payload::None);

    ParseOutcome::Event(Event {
        user_id,
        course_id,
        org_id,
        session_id,
        timestamp,
        event_type,
        source,
        payload,
    })
}

fn trim_line_end(mut line: &[u8]) -> &[u8] {
    while let [rest @ .., b'\n' | b'\r'] = line {
        line = rest;
    }
    line
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|s| !s.is_empty())
}

/// The nested payload is sometimes a JSON document encoded as a string.
fn decode_payload(raw: &RawValue) -> RawPayload {
    let text = raw.get();
    if text.starts_with('"') {
        let inner: Cow<'_, str> = match serde_json::from_str(text) {
            Ok(s) => s,
            Err(_) => return RawPayload::default(),
        };
        serde_json::from_str(&inner).unwrap_or_default()
    } else {
        serde_json::from_str(text).unwrap_or_default()
    }
}

fn build_payload(event_type: EventType, raw: RawPayload) -> Payload {
    let non_negative = |v: Option<f64>| v.filter(|x| *x >= 0.0);
    match event_type.tag() {
        Some(EventTag::Video) => match non_empty(raw.id) {
            Some(video_id) => Payload::Video(VideoPayload {
                video_id,
                duration: non_negative(raw.duration),
                current_time: non_negative(raw.current_time),
                old_time: non_negative(raw.old_time),
                new_time: non_negative(raw.new_time),
                new_speed: raw.new_speed.filter(|s| *s > 0.0),
            }),
            None => Payload::None,
        },
        Some(EventTag::ProblemCheck) => match non_empty(raw.problem_id) {
            Some(problem_id) => {
                let max_grade = raw.max_grade.filter(|m| *m > 0.0);
                let grade = non_negative(raw.grade).map(|g| match max_grade {
                    Some(m) => g.min(m),
                    None => g,
                });
                let attempts = raw
                    .attempts
                    .filter(|a| *a >= 0.0 && a.fract() == 0.0 && *a <= u32::MAX as f64)
                    .map(|a| a as u32);
                Payload::Problem(ProblemPayload {
                    problem_id,
                    grade,
                    max_grade,
                    success: raw.success,
                    attempts,
                })
            }
            None => Payload::None,
        },
        None => Payload::None,
    }
}

/// ISO-8601 with offset (`2021-08-26T00:46:55.696Z`), or a naive
/// timestamp taken as UTC. Truncated to milliseconds.
pub(crate) fn parse_timestamp(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    let ts = match DateTime::parse_from_rfc3339(s) {
        Ok(t) => t.with_timezone(&Utc),
        Err(_) => NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S%.f")
            .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S%.f"))
            .ok()?
            .and_utc(),
    };
    Some(ts.trunc_subsecs(3))
}

fn lenient_id<'de, D: Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    struct IdVisitor;
    impl<'de> Visitor<'de> for IdVisitor {
        type Value = Option<String>;
        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("an identifier")
        }
        fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
            Ok(Some(v.to_owned()))
        }
        fn visit_string<E: de::Error>(self, v: String) -> Result<Self::Value, E> {
            Ok(Some(v))
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
            Ok(Some(v.to_string()))
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
            Ok(Some(v.to_string()))
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
            Ok(Some(v.to_string()))
        }
        fn visit_bool<E: de::Error>(self, _: bool) -> Result<Self::Value, E> {
            Ok(None)
        }
        fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }
        fn visit_none<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }
        fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
            d.deserialize_any(self)
        }
        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
            while map.next_entry::<IgnoredAny, IgnoredAny>()?.is_some() {}
            Ok(None)
        }
        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
            while seq.next_element::<IgnoredAny>()?.is_some() {}
            Ok(None)
        }
    }
    d.deserialize_any(IdVisitor)
}

/// Numbers may arrive as JSON numbers or numeric strings ("53.4").
fn lenient_num<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    struct NumVisitor;
    impl<'de> Visitor<'de> for NumVisitor {
        type Value = Option<f64>;
        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a number")
        }
        fn visit_f64<E: de::Error>(self, v: f64) -> Result<Self::Value, E> {
            Ok(Some(v).filter(|v| v.is_finite()))
        }
        fn visit_u64<E: de::Error>(self, v: u64) -> Result<Self::Value, E> {
            Ok(Some(v as f64))
        }
        fn visit_i64<E: de::Error>(self, v: i64) -> Result<Self::Value, E> {
            Ok(Some(v as f64))
        }
        fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
            Ok(v.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        }
        fn visit_bool<E: de::Error>(self, _: bool) -> Result<Self::Value, E> {
            Ok(None)
        }
        fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }
        fn visit_none<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }
        fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
            d.deserialize_any(self)
        }
        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
            while map.next_entry::<IgnoredAny, IgnoredAny>()?.is_some() {}
            Ok(None)
        }
        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
            while seq.next_element::<IgnoredAny>()?.is_some() {}
            Ok(None)
        }
    }
    d.deserialize_any(NumVisitor)
}

fn lenient_bool<'de, D: Deserializer<'de>>(d: D) -> Result<Option<bool>, D::Error> {
    struct BoolVisitor;
    impl<'de> Visitor<'de> for BoolVisitor {
        type Value = Option<bool>;
        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a boolean or correctness string")
        }
        fn visit_bool<E: de::Error>(self, v: bool) -> Result<Self::Value, E> {
            Ok(Some(v))
        }
        fn visit_str<E: de::Error>(self, v: &str) -> Result<Self::Value, E> {
            Ok(match v {
                "correct" | "true" => Some(true),
                "incorrect" | "false" => Some(false),
                _ => None,
            })
        }
        fn visit_u64<E: de::Error>(self, _: u64) -> Result<Self::Value, E> {
            Ok(None)
        }
        fn visit_i64<E: de::Error>(self, _: i64) -> Result<Self::Value, E> {
            Ok(None)
        }
        fn visit_f64<E: de::Error>(self, _: f64) -> Result<Self::Value, E> {
            Ok(None)
        }
        fn visit_unit<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }
        fn visit_none<E: de::Error>(self) -> Result<Self::Value, E> {
            Ok(None)
        }
        fn visit_some<D: Deserializer<'de>>(self, d: D) -> Result<Self::Value, D::Error> {
            d.deserialize_any(self)
        }
        fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Self::Value, A::Error> {
            while map.next_entry::<IgnoredAny, IgnoredAny>()?.is_some() {}
            Ok(None)
        }
        fn visit_seq<A: SeqAccess<'de>>(self, mut seq: A) -> Result<Self::Value, A::Error> {
            while seq.next_element::<IgnoredAny>()?.is_some() {}
            Ok(None)
        }
    }
    d.deserialize_any(BoolVisitor)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// The example record, with the nested fields flattened as displayed.
    const FIG1: &str = r#"{"id":"62df84ea4d3a211a3c8c8efc","name":"play_video","context":{"user_id":39071876,"course_id":"course-v1:GTX+CS1301+1T2021a","org_id":"GTX","path":"/event","module":{}},"user_id":39071876,"course_id":"course-v1:GTX+CS1301+1T2021a","org_id":"GTX","session":"c8789c2a8eed52a5924f5d6c4c234ea2","agent":"Mozilla/5.0 (Windows NT 10.0; Win64; x64; rv:91.0) Gecko/20100101 Firefox/91.0","host":"courses.edx.org","referer":"https://courses.edx.org/xblock/block-v1:GTX+CS1301+1T2021a+type","accept_language":"en-US,en;q=0.5","event":{"id":"7b8771ce82464140ba1e0d24c1a10e68","code":"hls","duration":53.4,"currentTime":0},"time":"2021-08-26T00:46:55.696Z","event_type":"play_video","event_source":"browser","page":"https://courses.edx.org/xblock/block-v1:GTX+CS1301+1T2021a+type"}"#;

    fn minimal(name: &str) -> String {
        format!(
            r#"{{"event_type":"{name}","user_id":"u1","course_id":"c1","time":"2021-08-26T00:46:55.696Z","event_source":"browser","event":{{}}}}"#
        )
    }

    fn expect_event(line: &str) -> Event {
        match parse_line(line.as_bytes()) {
            ParseOutcome::Event(e) => e,
            other => panic!("expected event, got {other:?}"),
        }
    }

    #[test]
    fn example_record_parses() {
        let e = expect_event(FIG1);
        assert_eq!(e.event_type, EventType::PlayVideo);
        assert_eq!(e.user_id, "39071876");
        assert_eq!(e.org_id, "GTX");
        assert_eq!(e.session_id.as_deref(), Some("c8789c2a8eed52a5924f5d6c4c234ea2"));
        assert_eq!(super::super::format_timestamp(&e.timestamp), "2021-08-26T00:46:55.696Z");
        let v = e.payload.video().unwrap();
        assert_eq!(v.video_id, "7b8771ce82464140ba1e0d24c1a10e68");
        assert_eq!(v.duration, Some(53.4));
        assert_eq!(v.current_time, Some(0.0));
    }

    #[test]
    fn empty_line_is_malformed() {
        assert_eq!(
            parse_line(b""),
            ParseOutcome::Malformed(MalformedReason::Empty)
        );
        assert_eq!(
            parse_line(b"  \r\n"),
            ParseOutcome::Malformed(MalformedReason::Empty)
        );
    }

    #[test]
    fn enrollment_event_is_filtered() {
        assert_eq!(
            parse_line(minimal("edx.course.enrollment.activated").as_bytes()),
            ParseOutcome::FilteredOut(FilterReason::NotRetained)
        );
    }

    #[test]
    fn classify_examples() {
        assert_eq!(classify_event_type("play_video"), EventType::PlayVideo);
        assert_eq!(EventType::PlayVideo.tag(), Some(EventTag::Video));
        assert_eq!(classify_event_type("problem_check"), EventType::ProblemCheck);
        assert_eq!(EventType::ProblemCheck.tag(), Some(EventTag::ProblemCheck));
        assert_eq!(classify_event_type(""), EventType::Other);
        assert_eq!(classify_event_type("Play_Video"), EventType::Other);
    }

    #[test]
    fn every_retained_name_parses() {
        for t in EventType::RETAINED {
            let e = expect_event(&minimal(t.as_str()));
            assert_eq!(e.event_type, t);
        }
    }

    #[test]
    fn event_type_wins_over_name() {
        let line = r#"{"name":"pause_video","event_type":"play_video","user_id":"u","course_id":"c","time":"2021-08-26T00:46:55.696Z","event_source":"browser"}"#;
        assert_eq!(expect_event(line).event_type, EventType::PlayVideo);
        let line = r#"{"name":"pause_video","user_id":"u","course_id":"c","time":"2021-08-26T00:46:55.696Z","event_source":"browser"}"#;
        assert_eq!(expect_event(line).event_type, EventType::PauseVideo);
    }

    #[test]
    fn server_events_are_filtered() {
        let line = minimal("problem_check").replace("browser", "server");
        assert_eq!(
            parse_line(line.as_bytes()),
            ParseOutcome::FilteredOut(FilterReason::NotUserGenerated)
        );
    }

    #[test]
    fn missing_identity_is_malformed() {
        let line = minimal("play_video").replace(r#""user_id":"u1","#, "");
        assert_eq!(
            parse_line(line.as_bytes()),
            ParseOutcome::Malformed(MalformedReason::MissingUser)
        );
        let line = minimal("play_video").replace(r#""course_id":"c1""#, r#""course_id":"""#);
        assert_eq!(
            parse_line(line.as_bytes()),
            ParseOutcome::Malformed(MalformedReason::MissingCourse)
        );
        let line = minimal("play_video").replace("2021-08-26T00:46:55.696Z", "yesterday");
        assert_eq!(
            parse_line(line.as_bytes()),
            ParseOutcome::Malformed(MalformedReason::BadTimestamp)
        );
        assert_eq!(
            parse_line(br#"{"user_id":"u"}"#),
            ParseOutcome::Malformed(MalformedReason::MissingEventType)
        );
        assert_eq!(
            parse_line(b"{not json"),
            ParseOutcome::Malformed(MalformedReason::InvalidJson)
        );
    }

    #[test]
    fn identity_falls_back_to_context() {
        let line = r#"{"event_type":"load_video","context":{"user_id":7,"course_id":"c","org_id":"o"},"time":"2021-08-26T00:46:55Z","event_source":"browser","event":"{\"id\":\"v\"}"}"#;
        let e = expect_event(line);
        assert_eq!((e.user_id.as_str(), e.course_id.as_str(), e.org_id.as_str()), ("7", "c", "o"));
        assert_eq!(e.payload.video().unwrap().video_id, "v");
    }

    #[test]
    fn string_encoded_payload_and_numbers() {
        let as_num = r#"{"event_type":"pause_video","user_id":"u","course_id":"c","time":"2021-08-26T00:46:55.696Z","event_source":"browser","event":{"id":"v","duration":53.4,"currentTime":12}}"#;
        let as_str = r#"{"event_type":"pause_video","user_id":"u","course_id":"c","time":"2021-08-26T00:46:55.696Z","event_source":"browser","event":"{\"id\":\"v\",\"duration\":\"53.4\",\"currentTime\":\"12\"}"}"#;
        assert_eq!(expect_event(as_num), expect_event(as_str));
    }

    #[test]
    fn problem_payload_fields() {
        let line = r#"{"event_type":"problem_check","user_id":"u","course_id":"c","time":"2021-08-26T00:46:55.696Z","event_source":"browser","event":{"problem_id":"p1","grade":"3","max_grade":4,"success":"incorrect","attempts":2}}"#;
        let e = expect_event(line);
        let p = e.payload.problem().unwrap();
        assert_eq!(p.problem_id, "p1");
        assert_eq!(p.grade, Some(3.0));
        assert_eq!(p.max_grade, Some(4.0));
        assert_eq!(p.success, Some(false));
        assert_eq!(p.attempts, Some(2));
        assert_eq!(p.normalized_score(), Some(0.75));
    }

    #[test]
    fn grade_is_clamped_to_max() {
        let line = r#"{"event_type":"problem_check","user_id":"u","course_id":"c","time":"2021-08-26T00:46:55.696Z","event_source":"browser","event":{"problem_id":"p1","grade":5,"max_grade":4}}"#;
        let e = expect_event(line);
        assert_eq!(e.payload.problem().unwrap().grade, Some(4.0));
    }

    #[test]
    fn unparseable_payload_is_tolerated() {
        let line = r#"{"event_type":"problem_check","user_id":"u","course_id":"c","time":"2021-08-26T00:46:55.696Z","event_source":"browser","event":"input_abc=1&input_def=2"}"#;
        assert_eq!(expect_event(line).payload, Payload::None);
    }

    #[test]
    fn timestamps_truncate_to_millis() {
        let t = parse_timestamp("2021-08-26T00:46:55.696999+00:00").unwrap();
        assert_eq!(t.timestamp_subsec_millis(), 696);
        assert_eq!(t.timestamp_subsec_nanos(), 696_000_000);
        assert!(parse_timestamp("2021-08-26 00:46:55").is_some());
    }

    proptest! {
        #[test]
        fn arbitrary_bytes_never_panic_and_are_deterministic(bytes in proptest::collection::vec(any::<u8>(), 0..256)) {
            let a = parse_line(&bytes);
            let b = parse_line(&bytes);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn non_member_names_are_filtered(name in "[a-zA-Z_.]{0,24}") {
            prop_assume!(classify_event_type(&name) == EventType::Other);
            prop_assert_eq!(
                parse_line(minimal(&name).as_bytes()),
                ParseOutcome::FilteredOut(FilterReason::NotRetained)
            );
        }

        #[test]
        fn canonical_form_round_trips(
            idx in 0usize..15,
            ms in 0i64..4_000_000_000_000,
            dur in proptest::option::of(0.0f64..1e4),
            pos in proptest::option::of(0.0f64..1e4),
            grade in proptest::option::of(0.0f64..10.0),
            session in proptest::option::of("[a-f0-9]{8}"),
        ) {
            let event_type = EventType::RETAINED[idx];
            let payload = match event_type.tag().unwrap() {
                EventTag::Video => Payload::Video(VideoPayload {
                    video_id: "vid".into(),
                    duration: dur,
                    current_time: pos,
                    old_time: pos,
                    new_time: dur,
                    new_speed: Some(1.5),
                }),
                EventTag::ProblemCheck => Payload::Problem(ProblemPayload {
                    problem_id: "p".into(),
                    grade,
                    max_grade: Some(10.0),
                    success: Some(true),
                    attempts: Some(3),
                }),
            };
            let event = Event {
                user_id: "u".into(),
                course_id: "course-v1:GTX+CS1301+1T2021a".into(),
                org_id: "GTX".into(),
                session_id: session,
                timestamp: DateTime::from_timestamp_millis(ms).unwrap(),
                event_type,
                source: EventSource::Browser,
                payload,
            };
            let text = event.to_canonical_json();
            let back: Event = serde_json::from_str(&text).unwrap();
            prop_assert_eq!(back, event);
        }
    }
}
