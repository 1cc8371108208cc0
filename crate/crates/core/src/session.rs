//! Sessionization and week bucketing.

use std::collections::{BTreeMap, BTreeSet};

use chrono::{DateTime, Duration, NaiveDate, Utc};
use serde::Serialize;
use thiserror::Error;

use crate::event::Event;

pub const DEFAULT_GAP_MINUTES: i64 = 30;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Session {
    pub session_key: String,
    pub user_id: String,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub event_count: usize,
}

/// Session key for each event, in input order.
///
/// Events carrying a session id use it verbatim. Id-less events are split on
/// inactivity: a new fallback session starts whenever the interval since the
/// previous id-less event is strictly greater than `gap`.
pub fn session_keys(events: &[Event], gap: Duration) -> Vec<String> {
    let mut order: Vec<usize> = (0..events.len())
        .filter(|&i| events[i].session_id.is_none())
        .collect();
    order.sort_by_key(|&i| events[i].timestamp);

    let mut keys: Vec<Option<String>> = events.iter().map(|e| e.session_id.clone()).collect();
    let mut seq = 0usize;
    let mut last: Option<DateTime<Utc>> = None;
    for i in order {
        let ts = events[i].timestamp;
        if let Some(prev) = last {
            if ts - prev > gap {
                seq += 1;
            }
        }
        last = Some(ts);
        keys[i] = Some(fallback_key(&events[i].user_id, seq));
    }
    keys.into_iter().map(|k| k.unwrap_or_default()).collect()
}

fn fallback_key(user_id: &str, seq: usize) -> String {
    format!("~{user_id}#{seq}")
}

/// Sessions for one user's events, ordered by start time then key.
pub fn build_sessions(events: &[Event], gap: Duration) -> Vec<Session> {
    let keys = session_keys(events, gap);
    let mut by_key: BTreeMap<&str, Session> = BTreeMap::new();
    for (e, key) in events.iter().zip(&keys) {
        by_key
            .entry(key)
            .and_modify(|s| {
                s.start = s.start.min(e.timestamp);
                s.end = s.end.max(e.timestamp);
                s.event_count += 1;
            })
            .or_insert_with(|| Session {
                session_key: key.clone(),
                user_id: e.user_id.clone(),
                start: e.timestamp,
                end: e.timestamp,
                event_count: 1,
            });
    }
    let mut sessions: Vec<Session> = by_key.into_values().collect();
    sessions.sort_by(|a, b| a.start.cmp(&b.start).then_with(|| a.session_key.cmp(&b.session_key)));
    sessions
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("timestamp {timestamp} precedes anchor {anchor}")]
pub struct BeforeAnchor {
    pub timestamp: DateTime<Utc>,
    pub anchor: NaiveDate,
}

/// Whole weeks elapsed since midnight UTC of `anchor`.
pub fn week_index(timestamp: DateTime<Utc>, anchor: NaiveDate) -> Result<u32, BeforeAnchor> {
    let start = anchor.and_hms_opt(0, 0, 0).expect("midnight exists").and_utc();
    let elapsed = timestamp - start;
    if elapsed < Duration::zero() {
        return Err(BeforeAnchor { timestamp, anchor });
    }
    Ok((elapsed.num_milliseconds() / Duration::weeks(1).num_milliseconds()) as u32)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct WeekActivity {
    pub week_index: u32,
    pub new_users: usize,
    pub returning_users: usize,
}

/// Mergeable per-user active-week sets for one anchor.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PresenceState {
    weeks_by_user: BTreeMap<String, BTreeSet<u32>>,
    before_anchor: usize,
}

impl PresenceState {
    pub fn absorb(&mut self, event: &Event, anchor: NaiveDate) {
        match week_index(event.timestamp, anchor) {
            Ok(w) => {
                self.weeks_by_user
                    .entry(event.user_id.clone())
                    .or_default()
                    .insert(w);
            }
            Err(_) => self.before_anchor += 1,
        }
    }

    pub fn merge(&mut self, other: PresenceState) {
        for (user, weeks) in other.weeks_by_user {
            self.weeks_by_user.entry(user).or_default().extend(weeks);
        }
        self.before_anchor += other.before_anchor;
    }

    /// Events dropped because they precede the anchor.
    pub fn before_anchor(&self) -> usize {
        self.before_anchor
    }

    /// One row per week from 0 to the last active week, gaps included.
    pub fn finish(&self) -> Vec<WeekActivity> {
        let last = self
            .weeks_by_user
            .values()
            .filter_map(|w| w.last().copied())
            .max();
        let Some(last) = last else {
            return Vec::new();
        };
        let mut rows: Vec<WeekActivity> = (0..=last)
            .map(|week_index| WeekActivity {
                week_index,
                new_users: 0,
                returning_users: 0,
            })
            .collect();
        for weeks in self.weeks_by_user.values() {
            let mut it = weeks.iter();
            if let Some(&first) = it.next() {
                rows[first as usize].new_users += 1;
            }
            for &w in it {
                rows[w as usize].returning_users += 1;
            }
        }
        rows
    }
}

/// Weekly new/returning user counts. A user is new in the week of their
/// earliest on-or-after-anchor event and returning in every later active
/// week. Returns the rows and the number of events dropped for preceding
/// the anchor.
pub fn weekly_presence(events: &[Event], anchor: NaiveDate) -> (Vec<WeekActivity>, usize) {
    let mut state = PresenceState::default();
    for e in events {
        state.absorb(e, anchor);
    }
    (state.finish(), state.before_anchor())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{EventSource, EventType, Payload};
    use proptest::prelude::*;

    fn at(user: &str, minutes: i64, session: Option<&str>) -> Event {
        Event {
            user_id: user.into(),
            course_id: "c".into(),
            org_id: "o".into(),
            session_id: session.map(Into::into),
            timestamp: DateTime::from_timestamp(1_630_000_000, 0).unwrap()
                + Duration::minutes(minutes),
            event_type: EventType::PlayVideo,
            source: EventSource::Browser,
            payload: Payload::None,
        }
    }

    fn day(date: NaiveDate, days: i64) -> DateTime<Utc> {
        date.and_hms_opt(0, 0, 0).unwrap().and_utc() + Duration::days(days)
    }

    #[test]
    fn shared_session_id_is_one_session() {
        let evs = vec![at("u", 0, Some("s")), at("u", 100, Some("s")), at("u", 500, Some("s"))];
        let s = build_sessions(&evs, Duration::minutes(30));
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].event_count, 3);
        assert_eq!(s[0].session_key, "s");
    }

    #[test]
    fn gap_rule_is_strict() {
        let gap = Duration::minutes(30);
        assert_eq!(build_sessions(&[at("u", 0, None), at("u", 31, None)], gap).len(), 2);
        assert_eq!(build_sessions(&[at("u", 0, None), at("u", 29, None)], gap).len(), 1);
        assert_eq!(build_sessions(&[at("u", 0, None), at("u", 30, None)], gap).len(), 1);
    }

    #[test]
    fn mixed_explicit_and_fallback() {
        let evs = vec![
            at("u", 0, Some("a")),
            at("u", 5, None),
            at("u", 10, Some("b")),
            at("u", 200, None),
        ];
        let s = build_sessions(&evs, Duration::minutes(30));
        assert_eq!(s.len(), 4);
        assert!(s.iter().all(|s| s.start <= s.end && s.event_count >= 1));
    }

    #[test]
    fn week_index_examples() {
        let anchor = NaiveDate::from_ymd_opt(2021, 8, 23).unwrap();
        assert_eq!(week_index(day(anchor, 0), anchor), Ok(0));
        assert_eq!(week_index(day(anchor, 13), anchor), Ok(1));
        assert_eq!(week_index(day(anchor, 14), anchor), Ok(2));
        assert!(week_index(day(anchor, 0) - Duration::milliseconds(1), anchor).is_err());
    }

    fn on(user: &str, anchor: NaiveDate, days: i64) -> Event {
        let mut e = at(user, 0, None);
        e.timestamp = day(anchor, days) + Duration::hours(3);
        e
    }

    #[test]
    fn weekly_examples() {
        let a = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap();
        let (rows, _) = weekly_presence(&[on("u", a, 0), on("u", a, 3)], a);
        assert_eq!(
            rows,
            vec![WeekActivity {
                week_index: 0,
                new_users: 1,
                returning_users: 0
            }]
        );

        let (rows, _) = weekly_presence(&[on("u", a, 1), on("u", a, 15)], a);
        assert_eq!(rows.len(), 3);
        assert_eq!((rows[2].new_users, rows[2].returning_users), (0, 1));
        assert_eq!((rows[1].new_users, rows[1].returning_users), (0, 0));

        let (rows, _) = weekly_presence(&[on("u", a, 1), on("v", a, 8)], a);
        assert_eq!(
            rows.iter().map(|r| r.new_users).collect::<Vec<_>>(),
            vec![1, 1]
        );
    }

    #[test]
    fn events_before_anchor_are_counted_not_fatal() {
        let a = NaiveDate::from_ymd_opt(2022, 1, 10).unwrap();
        let (rows, dropped) = weekly_presence(&[on("u", a, -3), on("u", a, 2)], a);
        assert_eq!(dropped, 1);
        assert_eq!(rows[0].new_users, 1);
    }

    proptest! {
        #[test]
        fn new_users_sum_to_distinct_users(days in proptest::collection::vec((0u8..6, 0i64..100), 0..60)) {
            let a = NaiveDate::from_ymd_opt(2022, 1, 1).unwrap();
            let evs: Vec<Event> = days.iter().map(|(u, d)| on(&format!("u{u}"), a, *d)).collect();
            let (rows, _) = weekly_presence(&evs, a);
            let users: BTreeSet<_> = evs.iter().map(|e| e.user_id.clone()).collect();
            prop_assert_eq!(rows.iter().map(|r| r.new_users).sum::<usize>(), users.len());
            for r in &rows {
                prop_assert!(r.new_users + r.returning_users <= users.len());
            }
        }

        #[test]
        fn duplication_keeps_boundaries(mins in proptest::collection::vec(0i64..600, 1..30), dup in 0usize..30) {
            let gap = Duration::minutes(30);
            let mut evs: Vec<Event> = mins.iter().map(|m| at("u", *m, None)).collect();
            let before = build_sessions(&evs, gap);
            evs.push(evs[dup % evs.len()].clone());
            let after = build_sessions(&evs, gap);
            prop_assert_eq!(before.len(), after.len());
            for (b, a) in before.iter().zip(&after) {
                prop_assert_eq!((b.start, b.end), (a.start, a.end));
            }
            prop_assert_eq!(after.iter().map(|s| s.event_count).sum::<usize>(), evs.len());
        }

        #[test]
        fn larger_gap_never_adds_sessions(mins in proptest::collection::vec(0i64..2000, 1..40), g1 in 1i64..120, extra in 0i64..120) {
            let evs: Vec<Event> = mins.iter().map(|m| at("u", *m, None)).collect();
            let small = build_sessions(&evs, Duration::minutes(g1)).len();
            let large = build_sessions(&evs, Duration::minutes(g1 + extra)).len();
            prop_assert!(small >= large);
        }
    }
}
