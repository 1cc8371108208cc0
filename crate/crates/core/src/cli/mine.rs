use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::pipeline::read_classifications;
use crate::classify::OrdinalClass;
use crate::error::{Error, Result};
use crate::event::{read_logs, Event};
use crate::mining::{
    contrast_patterns, encode_sequences, mine, pattern_string, EncodeOptions, MiningParams,
    MiningResult,
};
use crate::report::{write_table, OutputFormat, Row};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatternRow {
    pub pattern: String,
    pub support: usize,
    pub relative_support: f64,
    pub class: OrdinalClass,
}

impl Row for PatternRow {
    const HEADER: &'static [&'static str] = &["pattern", "support", "relative_support", "class"];
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContrastTableRow {
    pub pattern: String,
    pub class: OrdinalClass,
    pub support: usize,
    pub relative_support: f64,
    pub gap: f64,
}

impl Row for ContrastTableRow {
    const HEADER: &'static [&'static str] =
        &["pattern", "class", "support", "relative_support", "gap"];
}

pub(crate) struct MineOptions {
    pub classes: Vec<OrdinalClass>,
    pub params: MiningParams,
    pub encode: EncodeOptions,
    pub format: OutputFormat,
}

pub(crate) fn run(
    classifications: &Path,
    logs: &[PathBuf],
    out_dir: &Path,
    opts: &MineOptions,
) -> Result<Vec<(OrdinalClass, MiningResult)>> {
    let labels = read_classifications(classifications)?;
    let mut class_of: BTreeMap<(String, String), OrdinalClass> = BTreeMap::new();
    for row in labels {
        class_of.insert((row.course_instance, row.user_id), row.class);
    }
    let classes: BTreeSet<OrdinalClass> = if opts.classes.is_empty() {
        class_of.values().copied().collect()
    } else {
        opts.classes.iter().copied().collect()
    };

    let mut by_class: BTreeMap<OrdinalClass, Vec<Event>> =
        classes.iter().map(|c| (*c, Vec::new())).collect();
    for batch in read_logs(logs)? {
        for e in batch.events {
            let key = (e.course_id.clone(), e.user_id.clone());
            if let Some(events) = class_of.get(&key).and_then(|c| by_class.get_mut(c)) {
                events.push(e);
            }
        }
    }

    let mut results = Vec::new();
    for (class, events) in by_class {
        // Owners are namespaced by course so users in two instances stay apart.
        let mut per_course: BTreeMap<&str, Vec<Event>> = BTreeMap::new();
        for e in &events {
            per_course.entry(&e.course_id).or_default().push(e.clone());
        }
        let mut sequences = Vec::new();
        for (course, evs) in per_course {
            for mut s in encode_sequences(&evs, &opts.encode) {
                s.owner = format!("{course}|{}", s.owner);
                sequences.push(s);
            }
        }
        results.push((class, mine(&sequences, opts.params)));
    }

    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let ext = opts.format.extension();
    for (class, result) in &results {
        let rows: Vec<PatternRow> = result
            .patterns
            .iter()
            .map(|p| PatternRow {
                pattern: pattern_string(&p.symbols),
                support: p.support,
                relative_support: result.relative_support(p.support),
                class: *class,
            })
            .collect();
        write_table(&out_dir.join(format!("patterns_{class}.{ext}")), &rows, opts.format)?;
    }

    let contrast = contrast_patterns(&results)?;
    let rows: Vec<ContrastTableRow> = contrast
        .iter()
        .flat_map(|row| {
            let pattern = pattern_string(&row.symbols);
            row.per_class.iter().map(move |c| ContrastTableRow {
                pattern: pattern.clone(),
                class: c.class,
                support: c.support,
                relative_support: c.relative_support,
                gap: row.gap,
            })
        })
        .collect();
    write_table(&out_dir.join(format!("contrast.{ext}")), &rows, opts.format)?;
    Ok(results)
}
