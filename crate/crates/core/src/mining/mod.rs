//! Frequent interaction-sequence mining per student class.

mod prefixspan;

pub use prefixspan::{contains_subsequence, prefixspan, SequencePattern};

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::Duration;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::OrdinalClass;
use crate::event::{Event, EventType};
use crate::session::session_keys;

/// One element of an interaction sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Event(EventType),
    CheckPass,
    CheckFail,
}

impl Symbol {
    pub fn name(self) -> &'static str {
        match self {
            Symbol::Event(t) => t.as_str(),
            Symbol::CheckPass => "check_pass",
            Symbol::CheckFail => "check_fail",
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl Serialize for Symbol {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

/// Renders a pattern as symbol names joined by `>`.
pub fn pattern_string(symbols: &[Symbol]) -> String {
    symbols.iter().map(|s| s.name()).collect::<Vec<_>>().join(">")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolSequence {
    pub owner: String,
    pub symbols: Vec<Symbol>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Granularity {
    PerUser,
    #[default]
    PerSession,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeOptions {
    pub granularity: Granularity,
    pub split_check_outcome: bool,
    pub passing_threshold: f64,
    pub collapse_runs: bool,
    pub session_gap: Duration,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            granularity: Granularity::PerSession,
            split_check_outcome: false,
            passing_threshold: crate::metrics::DEFAULT_PASSING_THRESHOLD,
            collapse_runs: false,
            session_gap: Duration::minutes(crate::session::DEFAULT_GAP_MINUTES),
        }
    }
}

fn symbol_for(e: &Event, opts: &EncodeOptions) -> Option<Symbol> {
    if !e.event_type.is_retained() {
        return None;
    }
    if opts.split_check_outcome && e.event_type == EventType::ProblemCheck {
        if let Some(score) = e.payload.problem().and_then(|p| p.normalized_score()) {
            return Some(if score >= opts.passing_threshold {
                Symbol::CheckPass
            } else {
                Symbol::CheckFail
            });
        }
    }
    Some(Symbol::Event(e.event_type))
}

/// One symbol sequence per owner (user or session), in timestamp order,
/// sorted by owner. Owners with no symbols are omitted.
pub fn encode_sequences(events: &[Event], opts: &EncodeOptions) -> Vec<SymbolSequence> {
    let mut by_user: BTreeMap<&str, Vec<&Event>> = BTreeMap::new();
    for e in events {
        by_user.entry(&e.user_id).or_default().push(e);
    }
    let mut by_owner: BTreeMap<String, Vec<&Event>> = BTreeMap::new();
    for (user, evs) in by_user {
        match opts.granularity {
            Granularity::PerUser => {
                by_owner.entry(user.to_owned()).or_default().extend(evs);
            }
            Granularity::PerSession => {
                let owned: Vec<Event> = evs.iter().map(|e| (*e).clone()).collect();
                let keys = session_keys(&owned, opts.session_gap);
                for (e, key) in evs.into_iter().zip(keys) {
                    by_owner.entry(format!("{user}/{key}")).or_default().push(e);
                }
            }
        }
    }
    by_owner
        .into_iter()
        .filter_map(|(owner, mut evs)| {
            evs.sort_by(|a, b| a.canonical_cmp(b));
            let mut symbols: Vec<Symbol> = evs.iter().filter_map(|e| symbol_for(e, opts)).collect();
            if opts.collapse_runs {
                symbols.dedup();
            }
            (!symbols.is_empty()).then_some(SymbolSequence { owner, symbols })
        })
        .collect()
}

/// Minimum support as an absolute count or a fraction of the database.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MinSupport {
    Count(usize),
    Fraction(f64),
}

impl MinSupport {
    pub fn resolve(self, n_sequences: usize) -> usize {
        match self {
            MinSupport::Count(c) => c.max(1),
            MinSupport::Fraction(f) => ((f * n_sequences as f64).ceil() as usize).max(1),
        }
    }
}

impl Default for MinSupport {
    fn default() -> Self {
        MinSupport::Fraction(0.05)
    }
}

impl FromStr for MinSupport {
    type Err = String;

    /// Integers are counts; decimals in `(0, 1]` are fractions.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(n) = s.parse::<usize>() {
            return if n >= 1 {
                Ok(MinSupport::Count(n))
            } else {
                Err("min support must be at least 1".into())
            };
        }
        match s.parse::<f64>() {
            Ok(f) if f > 0.0 && f <= 1.0 => Ok(MinSupport::Fraction(f)),
            _ => Err(format!(
                "invalid min support {s:?}: expected a count >= 1 or a fraction in (0, 1]"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MiningParams {
    pub min_support: MinSupport,
    pub max_len: usize,
    pub granularity: Granularity,
    pub split_check_outcome: bool,
    pub collapse_runs: bool,
}

impl Default for MiningParams {
    fn default() -> Self {
        MiningParams {
            min_support: MinSupport::default(),
            max_len: 6,
            granularity: Granularity::PerSession,
            split_check_outcome: false,
            collapse_runs: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MiningResult {
    pub params: MiningParams,
    pub n_sequences: usize,
    pub patterns: Vec<SequencePattern<Symbol>>,
}

impl MiningResult {
    pub fn relative_support(&self, support: usize) -> f64 {
        if self.n_sequences == 0 {
            0.0
        } else {
            support as f64 / self.n_sequences as f64
        }
    }
}

pub fn mine(sequences: &[SymbolSequence], params: MiningParams) -> MiningResult {
    let symbols: Vec<&[Symbol]> = sequences.iter().map(|s| s.symbols.as_slice()).collect();
    let min_support = params.min_support.resolve(sequences.len());
    MiningResult {
        params,
        n_sequences: sequences.len(),
        patterns: prefixspan(&symbols, min_support, params.max_len),
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContrastError {
    #[error("class {0} was mined with different parameters")]
    ParameterMismatch(OrdinalClass),
    #[error("class {0} appears more than once")]
    DuplicateClass(OrdinalClass),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassSupport {
    pub class: OrdinalClass,
    pub support: usize,
    pub relative_support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContrastRow {
    pub symbols: Vec<Symbol>,
    pub per_class: Vec<ClassSupport>,
    /// Largest minus smallest relative support across classes.
    pub gap: f64,
}

/// Joins per-class pattern sets. A pattern missing from a class counts as
/// relative support 0 there. Rows are ordered by descending gap, then
/// canonical pattern order.
pub fn contrast_patterns(
    per_class: &[(OrdinalClass, MiningResult)],
) -> Result<Vec<ContrastRow>, ContrastError> {
    let mut classes: Vec<OrdinalClass> = Vec::with_capacity(per_class.len());
    for (class, result) in per_class {
        if classes.contains(class) {
            return Err(ContrastError::DuplicateClass(*class));
        }
        if result.params != per_class[0].1.params {
            return Err(ContrastError::ParameterMismatch(*class));
        }
        classes.push(*class);
    }

    let mut table: BTreeMap<(usize, Vec<Symbol>), BTreeMap<OrdinalClass, usize>> = BTreeMap::new();
    for (class, result) in per_class {
        for p in &result.patterns {
            table
                .entry((p.symbols.len(), p.symbols.clone()))
                .or_default()
                .insert(*class, p.support);
        }
    }

    let mut ordered: Vec<(OrdinalClass, &MiningResult)> =
        per_class.iter().map(|(c, r)| (*c, r)).collect();
    ordered.sort_by_key(|(c, _)| *c);

    let mut rows: Vec<ContrastRow> = table
        .into_iter()
        .map(|((_, symbols), supports)| {
            let per_class: Vec<ClassSupport> = ordered
                .iter()
                .map(|(class, result)| {
                    let support = supports.get(class).copied().unwrap_or(0);
                    ClassSupport {
                        class: *class,
                        support,
                        relative_support: result.relative_support(support),
                    }
                })
                .collect();
            let (lo, hi) = per_class.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), c| {
                (lo.min(c.relative_support), hi.max(c.relative_support))
            });
            ContrastRow {
                symbols,
                per_class,
                gap: if hi >= lo { hi - lo } else { 0.0 },
            }
        })
        .collect();
    // Stable sort keeps canonical pattern order among equal gaps.
    rows.sort_by(|a, b| b.gap.total_cmp(&a.gap));
    Ok(rows)
}
