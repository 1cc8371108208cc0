use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{Datelike, Duration, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::Resolved;
use crate::classify::{classify, OrdinalClass};
use crate::error::{Error, Result};
use crate::event::{read_logs, Event, ParseStats};
use crate::metrics::{AggregationState, StudentAggregate};
use crate::report::{
    categorical_breakdown, enrollment_table, score_comparison, scorer_distribution,
    weekly_report, write_table, BreakdownRow, CohortId, EnrollmentRow, Modality, OutputFormat,
    Row, ScoreStatsRow, WeeklyRow,
};

const SHARD_EVENTS: usize = 64 * 1024;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationRow {
    pub user_id: String,
    pub course_instance: String,
    pub class: OrdinalClass,
}

impl Row for ClassificationRow {
    const HEADER: &'static [&'static str] = &["user_id", "course_instance", "class"];
}

#[derive(Debug, Clone, Serialize)]
struct CohortMeta {
    modality: Modality,
    term_label: String,
    anchor: Option<NaiveDate>,
    events: usize,
    students: usize,
    events_before_anchor: usize,
}

#[derive(Debug, Clone, Serialize)]
struct ReportMeta {
    parse: ParseStats,
    files: Vec<(String, ParseStats)>,
    events_without_cohort: usize,
    cohorts: Vec<CohortMeta>,
    score_statistic: &'static str,
    quartiles: &'static str,
    variance: &'static str,
    passing_threshold: f64,
    session_gap_minutes: i64,
    exclude_no_show: bool,
}

pub(crate) struct PipelineOptions {
    pub format: OutputFormat,
    pub exclude_no_show: bool,
}

/// What a pipeline run produced.
#[derive(Debug, Clone)]
pub struct PipelineSummary {
    pub parse: ParseStats,
    pub students: usize,
    pub classes: BTreeMap<OrdinalClass, usize>,
    pub outputs: Vec<PathBuf>,
}

/// Parallel aggregation over event shards merged in shard order.
pub fn aggregate_events(events: &[Event]) -> AggregationState {
    events
        .par_chunks(SHARD_EVENTS)
        .map(AggregationState::from_events)
        .reduce(AggregationState::new, |mut a, b| {
            a.merge(b);
            a
        })
}

fn default_anchor(modality: Modality, manifest_start: Option<NaiveDate>, events: &[Event]) -> Option<NaiveDate> {
    let earliest = events.iter().map(|e| e.timestamp).min()?.date_naive();
    Some(match modality {
        Modality::Online => NaiveDate::from_ymd_opt(earliest.year(), 1, 1).expect("valid date"),
        Modality::OnCampus => manifest_start.filter(|s| *s <= earliest).unwrap_or(earliest),
    })
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for row in rows {
        serde_json::to_writer(&mut out, row).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub(crate) fn run(
    cfg: &Resolved,
    logs: &[PathBuf],
    out_dir: &Path,
    opts: &PipelineOptions,
) -> Result<PipelineSummary> {
    let batches = read_logs(logs)?;
    let parse: ParseStats = batches.iter().map(|b| b.stats).sum();
    if !parse.is_consistent() {
        return Err(Error::Invariant(format!("inconsistent parse tallies: {parse:?}")));
    }
    let files: Vec<(String, ParseStats)> = batches
        .iter()
        .map(|b| (b.path.display().to_string(), b.stats))
        .collect();

    let mut by_cohort: Vec<Vec<Event>> = vec![Vec::new(); cfg.cohorts.len()];
    let mut unmatched = 0usize;
    for batch in batches {
        for e in batch.events {
            match cfg.cohort_of(&e.course_id) {
                Some(i) => by_cohort[i].push(e),
                None => unmatched += 1,
            }
        }
    }

    let gap = Duration::minutes(cfg.gap_minutes);
    let manifest = cfg.manifest.as_ref();
    let manifest_start = manifest.and_then(|m| m.course_start());

    let mut order: Vec<usize> = (0..cfg.cohorts.len()).collect();
    order.sort_by(|&a, &b| cfg.cohorts[a].id.cmp(&cfg.cohorts[b].id));

    let mut aggregates: Vec<StudentAggregate> = Vec::new();
    let mut classifications = Vec::new();
    let mut enrollment: Vec<EnrollmentRow> = Vec::new();
    let mut breakdown: Vec<BreakdownRow> = Vec::new();
    let mut scores: Vec<ScoreStatsRow> = Vec::new();
    let mut scorer: Vec<ScoreStatsRow> = Vec::new();
    let mut weekly: Vec<WeeklyRow> = Vec::new();
    let mut cohort_meta = Vec::new();

    for i in order {
        let cohort = &cfg.cohorts[i];
        let events = &by_cohort[i];
        let id: &CohortId = &cohort.id;
        let aggs = aggregate_events(events).finish(manifest, &cfg.metrics);
        let classes: Vec<OrdinalClass> = aggs.iter().map(|a| classify(a, &cfg.rules)).collect();

        enrollment.push(enrollment_table(id, events, gap));
        breakdown.extend(categorical_breakdown(id, &classes, opts.exclude_no_show));
        scores.extend(score_comparison(id, &aggs));
        let paired: Vec<(&StudentAggregate, OrdinalClass)> =
            aggs.iter().zip(classes.iter().copied()).collect();
        scorer.extend(scorer_distribution(id, &paired));

        let anchor = cohort
            .anchor
            .or_else(|| default_anchor(id.modality, manifest_start, events));
        let mut before_anchor = 0;
        if let Some(anchor) = anchor {
            let (rows, before) = weekly_report(id, events, anchor);
            weekly.extend(rows);
            before_anchor = before;
        }
        cohort_meta.push(CohortMeta {
            modality: id.modality,
            term_label: id.term_label.clone(),
            anchor,
            events: events.len(),
            students: aggs.len(),
            events_before_anchor: before_anchor,
        });

        for (agg, class) in aggs.iter().zip(&classes) {
            classifications.push(ClassificationRow {
                user_id: agg.user_id.clone(),
                course_instance: agg.course_instance.clone(),
                class: *class,
            });
        }
        aggregates.extend(aggs);
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ext = opts.format.extension();
    let path = |name: &str| out_dir.join(format!("{name}.{ext}"));
    let mut outputs = Vec::new();

    let agg_path = out_dir.join("aggregates.jsonl");
    write_jsonl(&agg_path, &aggregates)?;
    outputs.push(agg_path);
    for (name, written) in [
        ("classifications", write_table(&path("classifications"), &classifications, opts.format)),
        ("enrollment", write_table(&path("enrollment"), &enrollment, opts.format)),
        ("breakdown", write_table(&path("breakdown"), &breakdown, opts.format)),
        ("scores", write_table(&path("scores"), &scores, opts.format)),
        ("scorer", write_table(&path("scorer"), &scorer, opts.format)),
        ("weekly", write_table(&path("weekly"), &weekly, opts.format)),
    ] {
        written?;
        outputs.push(path(name));
    }

    let meta = ReportMeta {
        parse,
        files,
        events_without_cohort: unmatched,
        cohorts: cohort_meta,
        score_statistic: "per-student mean of per-problem first and final scores",
        quartiles: "linear interpolation between closest ranks",
        variance: "population",
        passing_threshold: cfg.metrics.passing_threshold,
        session_gap_minutes: cfg.gap_minutes,
        exclude_no_show: opts.exclude_no_show,
    };
    let meta_path = out_dir.join("report_meta.json");
    let mut text = serde_json::to_string_pretty(&meta).map_err(|source| Error::Json {
        path: meta_path.clone(),
        source,
    })?;
    text.push('\n');
    fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;
    outputs.push(meta_path);

    let mut class_counts = BTreeMap::new();
    for row in &classifications {
        *class_counts.entry(row.class).or_default() += 1;
    }
    Ok(PipelineSummary {
        parse,
        students: classifications.len(),
        classes: class_counts,
        outputs,
    })
}

/// Reads a classifications table written by the pipeline.
pub fn read_classifications(path: &Path) -> Result<Vec<ClassificationRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "jsonl") {
        return text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                serde_json::from_str(l).map_err(|source| Error::Json {
                    path: path.to_path_buf(),
                    source,
                })
            })
            .collect();
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    reader
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}
