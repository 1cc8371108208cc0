//! Batch engagement analytics for edX tracking logs.
//!
//! The pipeline parses newline-delimited tracking events, keeps the video
//! and problem-check events learners generate in the browser, rebuilds
//! per-student engagement metrics, assigns each student one of eight
//! ordinal behavior classes, and writes cohort-level report tables.
//! Frequent event sequences per class can be mined with PrefixSpan, and a
//! seeded generator produces labelled corpora for end-to-end checks.

pub mod classify;
pub mod cli;
pub mod error;
pub mod event;
pub mod manifest;
pub mod metrics;
pub mod mining;
pub mod report;
pub mod session;
pub mod synth;

pub use classify::{classify, OrdinalClass, RuleConfig};
pub use error::{Error, Result};
pub use event::{parse_line, Event, EventType, ParseOutcome, ParseStats};
pub use manifest::CourseManifest;
pub use metrics::{AggregationState, MetricsConfig, StudentAggregate};
