use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::classify::RuleConfig;
use crate::error::{Error, Result};
use crate::manifest::{load_manifest, CourseManifest};
use crate::metrics::{MetricsConfig, DEFAULT_PASSING_THRESHOLD};
use crate::report::{CohortId, Modality};
use crate::session::DEFAULT_GAP_MINUTES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortDef {
    /// Regular expression searched for in each event's course id.
    pub course_id_pattern: String,
    pub modality: Modality,
    pub term_label: String,
    /// Day that starts week 0 for this cohort.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<NaiveDate>,
}

fn default_passing() -> f64 {
    DEFAULT_PASSING_THRESHOLD
}

fn default_gap() -> i64 {
    DEFAULT_GAP_MINUTES
}

/// Run configuration file. Relative paths resolve against the file's
/// directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default)]
    pub cohorts: Vec<CohortDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub thresholds: RuleConfig,
    #[serde(default = "default_passing")]
    pub passing_threshold: f64,
    #[serde(default = "default_gap")]
    pub session_gap_minutes: i64,
    #[serde(default)]
    pub count_graded_as_attempt: bool,
}

impl Default for RunManifest {
    fn default() -> Self {
        RunManifest {
            cohorts: Vec::new(),
            manifest: None,
            thresholds: RuleConfig::default(),
            passing_threshold: DEFAULT_PASSING_THRESHOLD,
            session_gap_minutes: DEFAULT_GAP_MINUTES,
            count_graded_as_attempt: false,
        }
    }
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut run: RunManifest = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        if let Some(m) = &run.manifest {
            run.manifest = Some(base.join(m));
        }
        Ok(run)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Cohort {
    pub id: CohortId,
    pub pattern: Regex,
    pub anchor: Option<NaiveDate>,
}

/// A checked run configuration ready for the pipeline.
#[derive(Debug, Clone)]
pub(crate) struct Resolved {
    pub cohorts: Vec<Cohort>,
    pub manifest: Option<CourseManifest>,
    pub rules: RuleConfig,
    pub metrics: MetricsConfig,
    pub gap_minutes: i64,
}

impl Resolved {
    pub fn new(run: &RunManifest) -> Result<Self> {
        run.thresholds.validate()?;
        if !(run.passing_threshold > 0.0 && run.passing_threshold <= 1.0) {
            return Err(Error::Config(format!(
                "passing_threshold must be in (0, 1], got {}",
                run.passing_threshold
            )));
        }
        if run.session_gap_minutes <= 0 {
            return Err(Error::Config(format!(
                "session_gap_minutes must be positive, got {}",
                run.session_gap_minutes
            )));
        }
        let manifest = match &run.manifest {
            Some(p) => {
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "manifest {} does not exist",
                        p.display()
                    )));
                }
                Some(load_manifest(p)?)
            }
            None => None,
        };
        let mut cohorts = Vec::new();
        for def in &run.cohorts {
            let pattern = Regex::new(&def.course_id_pattern).map_err(|e| {
                Error::Config(format!("course_id_pattern {:?}: {e}", def.course_id_pattern))
            })?;
            let id = CohortId::new(def.modality, def.term_label.clone());
            if cohorts.iter().any(|c: &Cohort| c.id == id) {
                return Err(Error::Config(format!("cohort {id} is declared twice")));
            }
            cohorts.push(Cohort {
                id,
                pattern,
                anchor: def.anchor,
            });
        }
        if cohorts.is_empty() {
            cohorts.push(Cohort {
                id: CohortId::new(Modality::Online, "all"),
                pattern: Regex::new("").expect("empty regex"),
                anchor: None,
            });
        }
        Ok(Resolved {
            cohorts,
            manifest,
            rules: run.thresholds,
            metrics: MetricsConfig {
                passing_threshold: run.passing_threshold,
                count_graded_as_attempt: run.count_graded_as_attempt,
            },
            gap_minutes: run.session_gap_minutes,
        })
    }

    /// Index of the first cohort whose pattern matches `course_id`.
    pub fn cohort_of(&self, course_id: &str) -> Option<usize> {
        self.cohorts.iter().position(|c| c.pattern.is_match(course_id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_rejected() {
        let err = serde_json::from_str::<RunManifest>(r#"{"cohort": []}"#);
        assert!(err.is_err());
        let err = serde_json::from_str::<RunManifest>(r#"{"thresholds": {"watch_top": 0.9}}"#);
        assert!(err.is_err());
    }

    #[test]
    fn defaults() {
        let run: RunManifest = serde_json::from_str("{}").unwrap();
        assert_eq!(run, RunManifest::default());
        let resolved = Resolved::new(&run).unwrap();
        assert_eq!(resolved.cohorts.len(), 1);
        assert_eq!(resolved.cohort_of("anything"), Some(0));
    }

    #[test]
    fn first_matching_cohort_wins() {
        let run: RunManifest = serde_json::from_str(
            r#"{"cohorts": [
                {"course_id_pattern": "1T2021$", "modality": "online", "term_label": "2021"},
                {"course_id_pattern": "2021", "modality": "on_campus", "term_label": "Fall 2021"}
            ]}"#,
        )
        .unwrap();
        let r = Resolved::new(&run).unwrap();
        assert_eq!(r.cohort_of("GTx+CS1301+1T2021"), Some(0));
        assert_eq!(r.cohort_of("GTx+CS1301+2021_Fall"), Some(1));
        assert_eq!(r.cohort_of("GTx+CS1301+2022"), None);
    }

    #[test]
    fn missing_manifest_and_bad_values() {
        let mut run = RunManifest {
            manifest: Some(PathBuf::from("/nonexistent/course.json")),
            ..RunManifest::default()
        };
        assert!(matches!(Resolved::new(&run), Err(Error::Config(_))));
        run.manifest = None;
        run.passing_threshold = 0.0;
        assert!(Resolved::new(&run).is_err());
        run.passing_threshold = 0.7;
        run.session_gap_minutes = 0;
        assert!(Resolved::new(&run).is_err());
        run.session_gap_minutes = 30;
        run.cohorts.push(CohortDef {
            course_id_pattern: "(".into(),
            modality: Modality::Online,
            term_label: "x".into(),
            anchor: None,
        });
        assert!(Resolved::new(&run).is_err());
    }
}
