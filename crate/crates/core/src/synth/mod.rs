//! Seeded generator of edX-style tracking logs with known class labels.
//!
//! Each persona samples users from one classifier rule region. Every user
//! draws from its own ChaCha8 stream keyed by the corpus seed, so output is
//! identical across runs and worker counts.

mod emit;
mod persona;

pub use persona::{default_personas, PersonaSpec, MARGIN};

use std::path::Path;

use chrono::{NaiveDate, NaiveTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{OrdinalClass, RuleConfig};
use crate::error::{Error, Result};
use crate::manifest::{Block, BlockKind, Chapter, CourseManifest, Section, SubModule};
use crate::metrics::DEFAULT_PASSING_THRESHOLD;
use crate::report::Modality;

use emit::{Layout, SectionContent};

/// A generated user: id, intended class and timestamped log lines.
type UserStream = (String, OrdinalClass, Vec<(i64, String)>);

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("{class} persona is not unambiguously inside its rule region: {reason}")]
    AmbiguousPersona { class: OrdinalClass, reason: String },
    #[error("manifest cannot supply {videos} videos and {problems} graded problems")]
    ManifestTooSmall { videos: usize, problems: usize },
    #[error("{0}")]
    InvalidSpec(String),
}

fn default_weeks() -> u32 {
    15
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusSpec {
    /// Course structure the learners move through. Defaults to
    /// [`synthetic_manifest`].
    #[serde(default = "synthetic_manifest")]
    pub manifest: CourseManifest,
    /// Course id stamped on events; defaults to the manifest's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub course_id: Option<String>,
    pub personas: Vec<PersonaSpec>,
    pub term_start: NaiveDate,
    #[serde(default = "default_weeks")]
    pub weeks: u32,
    #[serde(default)]
    pub seed: u64,
    pub modality: Modality,
}

impl CorpusSpec {
    /// Every default persona with `n_users` users each.
    pub fn with_default_personas(n_users: usize, modality: Modality, seed: u64) -> Self {
        CorpusSpec {
            manifest: synthetic_manifest(),
            course_id: None,
            personas: default_personas(n_users),
            term_start: NaiveDate::from_ymd_opt(2021, 8, 23).expect("valid date"),
            weeks: default_weeks(),
            seed,
            modality,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn course_id(&self) -> &str {
        self.course_id.as_deref().unwrap_or(self.manifest.course_id())
    }

    pub fn n_users(&self) -> usize {
        self.personas.iter().map(|p| p.n_users).sum()
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.n_users() == 0 {
            return Err(SynthError::InvalidSpec("corpus needs at least one user".into()));
        }
        if self.weeks == 0 {
            return Err(SynthError::InvalidSpec("weeks must be at least 1".into()));
        }
        let rules = RuleConfig::default();
        for p in &self.personas {
            p.validate(&rules, DEFAULT_PASSING_THRESHOLD)?;
        }
        let sections = section_contents(&self.manifest, 0);
        let videos: usize = sections.iter().map(|s| s.videos.len()).sum();
        let problems: usize = sections.iter().map(|s| s.problems.len()).sum();
        for p in &self.personas {
            let need_v = p.videos_watched_range[1].max(1);
            let need_p = p.problems_attempted_range[1];
            if need_v > videos || need_p > problems {
                return Err(SynthError::ManifestTooSmall {
                    videos: need_v,
                    problems: need_p,
                });
            }
        }
        Ok(())
    }
}

/// Generated log lines in timestamp order, and the intended class of
/// every user in generation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub lines: Vec<String>,
    pub labels: Vec<(String, OrdinalClass)>,
}

impl Corpus {
    /// The log as newline-terminated JSON lines.
    pub fn log_text(&self) -> String {
        let mut out = String::with_capacity(self.lines.iter().map(|l| l.len() + 1).sum());
        for l in &self.lines {
            out.push_str(l);
            out.push('\n');
        }
        out
    }

    /// Labels as CSV with a `user_id,class` header.
    pub fn labels_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["user_id", "class"]).expect("in-memory write");
        for (user, class) in &self.labels {
            w.write_record([user.as_str(), class.as_str()]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Videos with seeded durations and graded problems, per section in
/// course order.
fn section_contents(manifest: &CourseManifest, seed: u64) -> Vec<SectionContent> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut out = Vec::new();
    for sm in manifest.submodules() {
        for ch in &sm.chapters {
            for sec in &ch.sections {
                let mut content = SectionContent {
                    videos: Vec::new(),
                    problems: Vec::new(),
                };
                for b in &sec.blocks {
                    match b.kind {
                        BlockKind::Video => {
                            let duration = rng.gen_range(60_000..=600_000) as f64 / 1000.0;
                            content.videos.push((b.block_id.clone(), duration));
                        }
                        BlockKind::GradedProblem => content.problems.push(b.block_id.clone()),
                        _ => {}
                    }
                }
                out.push(content);
            }
        }
    }
    out
}

fn org_of(course_id: &str) -> &str {
    course_id
        .split_once(':')
        .map_or(course_id, |(_, rest)| rest)
        .split('+')
        .next()
        .unwrap_or("")
}

/// Generate the corpus described by `spec`.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Corpus, SynthError> {
    spec.validate()?;
    let sections = section_contents(&spec.manifest, spec.seed);
    if sections.iter().all(|s| s.videos.is_empty()) {
        return Err(SynthError::ManifestTooSmall {
            videos: 1,
            problems: 0,
        });
    }
    // Sections without content are never visited.
    let sections: Vec<SectionContent> = sections
        .into_iter()
        .filter(|s| !s.videos.is_empty() || !s.problems.is_empty())
        .collect();
    let course_id = spec.course_id();
    let layout = Layout {
        course_id,
        org_id: org_of(course_id),
        sections: &sections,
        start_ms: spec
            .term_start
            .and_time(NaiveTime::MIN)
            .and_utc()
            .timestamp_millis(),
        weeks: spec.weeks,
        modality: spec.modality,
        passing_threshold: DEFAULT_PASSING_THRESHOLD,
    };
    let id_prefix = splitmix64(spec.seed);

    let jobs: Vec<(usize, &PersonaSpec, usize)> = spec
        .personas
        .iter()
        .enumerate()
        .flat_map(|(pi, p)| (0..p.n_users).map(move |u| (pi, p, u)))
        .collect();
    let per_user: Vec<UserStream> = jobs
        .par_iter()
        .map(|&(pi, persona, u)| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream((persona.seed_offset << 32) | u as u64);
            let user_id = format!("{id_prefix:016x}-{pi:02}-{u:05}");
            let events = emit::user_events(persona, &user_id, &layout, &mut rng)?;
            Ok((user_id, persona.target_class, events))
        })
        .collect::<Result<_, SynthError>>()?;

    let mut stamped: Vec<(i64, usize, usize)> = Vec::new();
    for (ui, (_, _, events)) in per_user.iter().enumerate() {
        stamped.extend(events.iter().enumerate().map(|(k, (ts, _))| (*ts, ui, k)));
    }
    stamped.sort_unstable();
    let lines = stamped
        .into_iter()
        .map(|(_, ui, k)| per_user[ui].2[k].1.clone())
        .collect();
    let labels = per_user
        .into_iter()
        .map(|(user, class, _)| (user, class))
        .collect();
    Ok(Corpus { lines, labels })
}

/// 4 sub-modules × 3 chapters × 4 sections. Each section holds three
/// videos, two graded problems, an ungraded exercise, a coding exercise
/// and a text page.
pub fn synthetic_manifest() -> CourseManifest {
    let kinds = [
        (BlockKind::Video, "video", 3),
        (BlockKind::GradedProblem, "problem", 2),
        (BlockKind::UngradedExercise, "exercise", 1),
        (BlockKind::CodingExercise, "coding", 1),
        (BlockKind::Text, "text", 1),
    ];
    let submodules = (1..=4)
        .map(|m| SubModule {
            name: format!("Unit {m}"),
            chapters: (1..=3)
                .map(|c| Chapter {
                    name: format!("Chapter {m}.{c}"),
                    sections: (1..=4)
                        .map(|s| Section {
                            name: format!("Section {m}.{c}.{s}"),
                            blocks: kinds
                                .iter()
                                .flat_map(|&(kind, tag, n)| {
                                    (1..=n).map(move |i| Block {
                                        block_id: format!("{tag}-{m}-{c}-{s}-{i}"),
                                        kind,
                                    })
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect(),
        })
        .collect();
    CourseManifest::new(
        "course-v1:GTx+CS1301xS+synthetic",
        Some(NaiveDate::from_ymd_opt(2021, 8, 23).expect("valid date")),
        submodules,
    )
    .expect("synthetic block ids are unique")
}
