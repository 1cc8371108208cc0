//! Course content tree: sub-modules, chapters, sections and blocks.
//!
//! Log records only carry opaque content ids, so the manifest supplies the
//! structure they are joined against. Joins are exact string matches on
//! `block_id`.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid manifest: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("duplicate block_id {0:?}")]
    DuplicateBlock(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Video,
    GradedProblem,
    UngradedExercise,
    CodingExercise,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Block {
    pub block_id: String,
    pub kind: BlockKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    pub name: String,
    #[serde(default)]
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chapter {
    pub name: String,
    #[serde(default)]
    pub sections: Vec<Section>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubModule {
    pub name: String,
    #[serde(default)]
    pub chapters: Vec<Chapter>,
}

/// Position of a block as (submodule, chapter, section, block) indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockPosition {
    pub submodule: usize,
    pub chapter: usize,
    pub section: usize,
    pub block: usize,
}

impl BlockPosition {
    /// Key identifying the enclosing section.
    pub fn section_key(&self) -> (usize, usize, usize) {
        (self.submodule, self.chapter, self.section)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestDoc {
    course_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    course_start: Option<NaiveDate>,
    #[serde(default)]
    submodules: Vec<SubModule>,
}

/// A validated, indexed course manifest. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ManifestDoc", into = "ManifestDoc")]
pub struct CourseManifest {
    doc: ManifestDoc,
    index: HashMap<String, BlockPosition>,
}

impl TryFrom<ManifestDoc> for CourseManifest {
    type Error = ManifestError;

    fn try_from(doc: ManifestDoc) -> Result<Self, Self::Error> {
        let mut index = HashMap::new();
        for (si, sm) in doc.submodules.iter().enumerate() {
            for (ci, ch) in sm.chapters.iter().enumerate() {
                for (xi, sec) in ch.sections.iter().enumerate() {
                    for (bi, block) in sec.blocks.iter().enumerate() {
                        let pos = BlockPosition {
                            submodule: si,
                            chapter: ci,
                            section: xi,
                            block: bi,
                        };
                        if index.insert(block.block_id.clone(), pos).is_some() {
                            return Err(ManifestError::DuplicateBlock(block.block_id.clone()));
                        }
                    }
                }
            }
        }
        Ok(CourseManifest { doc, index })
    }
}

impl From<CourseManifest> for ManifestDoc {
    fn from(m: CourseManifest) -> Self {
        m.doc
    }
}

impl CourseManifest {
    pub fn new(
        course_id: impl Into<String>,
        course_start: Option<NaiveDate>,
        submodules: Vec<SubModule>,
    ) -> Result<Self, ManifestError> {
        ManifestDoc {
            course_id: course_id.into(),
            course_start,
            submodules,
        }
        .try_into()
    }

    pub fn from_json(text: &str) -> Result<Self, ManifestError> {
        let doc: ManifestDoc = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn course_id(&self) -> &str {
        &self.doc.course_id
    }

    pub fn course_start(&self) -> Option<NaiveDate> {
        self.doc.course_start
    }

    pub fn submodules(&self) -> &[SubModule] {
        &self.doc.submodules
    }

    pub fn block_count(&self) -> usize {
        self.index.len()
    }

    pub fn locate_block(&self, block_id: &str) -> Option<BlockPosition> {
        self.index.get(block_id).copied()
    }

    pub fn block_at(&self, pos: BlockPosition) -> Option<&Block> {
        self.doc
            .submodules
            .get(pos.submodule)?
            .chapters
            .get(pos.chapter)?
            .sections
            .get(pos.section)?
            .blocks
            .get(pos.block)
    }

    pub fn section(&self, key: (usize, usize, usize)) -> Option<&Section> {
        self.doc
            .submodules
            .get(key.0)?
            .chapters
            .get(key.1)?
            .sections
            .get(key.2)
    }

    /// All blocks in course order, with their positions.
    pub fn blocks(&self) -> impl Iterator<Item = (BlockPosition, &Block)> + '_ {
        self.doc
            .submodules
            .iter()
            .enumerate()
            .flat_map(|(si, sm)| {
                sm.chapters.iter().enumerate().flat_map(move |(ci, ch)| {
                    ch.sections.iter().enumerate().flat_map(move |(xi, sec)| {
                        sec.blocks.iter().enumerate().map(move |(bi, b)| {
                            (
                                BlockPosition {
                                    submodule: si,
                                    chapter: ci,
                                    section: xi,
                                    block: bi,
                                },
                                b,
                            )
                        })
                    })
                })
            })
    }

    pub fn content_counts(&self) -> ContentCounts {
        let per_submodule: Vec<(String, KindCounts)> = self
            .doc
            .submodules
            .iter()
            .map(|sm| {
                let mut counts = KindCounts::default();
                sm.chapters
                    .iter()
                    .flat_map(|c| &c.sections)
                    .flat_map(|s| &s.blocks)
                    .for_each(|b| counts.add(b.kind));
                (sm.name.clone(), counts)
            })
            .collect();
        let mut totals = KindCounts::default();
        for (_, c) in &per_submodule {
            totals += *c;
        }
        ContentCounts {
            per_submodule,
            totals,
        }
    }
}

pub fn load_manifest(path: &Path) -> Result<CourseManifest, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.display().to_string(),
        source,
    })?;
    CourseManifest::from_json(&text)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct KindCounts {
    pub video: usize,
    pub ungraded_exercise: usize,
    pub coding_exercise: usize,
    pub graded_problem: usize,
    pub text: usize,
}

impl KindCounts {
    pub fn add(&mut self, kind: BlockKind) {
        match kind {
            BlockKind::Video => self.video += 1,
            BlockKind::GradedProblem => self.graded_problem += 1,
            BlockKind::UngradedExercise => self.ungraded_exercise += 1,
            BlockKind::CodingExercise => self.coding_exercise += 1,
            BlockKind::Text => self.text += 1,
        }
    }
}

impl std::ops::AddAssign for KindCounts {
    fn add_assign(&mut self, o: Self) {
        self.video += o.video;
        self.ungraded_exercise += o.ungraded_exercise;
        self.coding_exercise += o.coding_exercise;
        self.graded_problem += o.graded_problem;
        self.text += o.text;
    }
}

/// Block counts per sub-module plus totals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContentCounts {
    pub per_submodule: Vec<(String, KindCounts)>,
    pub totals: KindCounts,
}

impl fmt::Display for ContentCounts {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "submodule\tvideos\tungraded\tcoding\tgraded\ttext")?;
        let row = |f: &mut fmt::Formatter<'_>, name: &str, c: &KindCounts| {
            writeln!(
                f,
                "{name}\t{}\t{}\t{}\t{}\t{}",
                c.video, c.ungraded_exercise, c.coding_exercise, c.graded_problem, c.text
            )
        };
        for (name, c) in &self.per_submodule {
            row(f, name, c)?;
        }
        row(f, "Totals", &self.totals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn section(name: &str, blocks: Vec<(&str, BlockKind)>) -> Section {
        Section {
            name: name.into(),
            blocks: blocks
                .into_iter()
                .map(|(id, kind)| Block {
                    block_id: id.into(),
                    kind,
                })
                .collect(),
        }
    }

    /// One chapter per sub-module holding a single section with the given
    /// numbers of (videos, ungraded, coding, graded) blocks.
    fn counts_manifest(rows: &[(&str, [usize; 4])]) -> CourseManifest {
        let kinds = [
            BlockKind::Video,
            BlockKind::UngradedExercise,
            BlockKind::CodingExercise,
            BlockKind::GradedProblem,
        ];
        let submodules = rows
            .iter()
            .enumerate()
            .map(|(si, (name, counts))| {
                let blocks = kinds
                    .iter()
                    .zip(counts)
                    .flat_map(|(kind, n)| {
                        (0..*n).map(move |i| Block {
                            block_id: format!("{si}-{kind:?}-{i}"),
                            kind: *kind,
                        })
                    })
                    .collect();
                SubModule {
                    name: name.to_string(),
                    chapters: vec![Chapter {
                        name: "ch".into(),
                        sections: vec![Section {
                            name: "sec".into(),
                            blocks,
                        }],
                    }],
                }
            })
            .collect();
        CourseManifest::new("course-v1:GTX+CS1301+1T2021a", None, submodules).unwrap()
    }

    #[test]
    fn course_content_table_rows() {
        let m = counts_manifest(&[
            ("Fundamentals", [160, 56, 54, 67]),
            ("Control Structure", [122, 85, 77, 85]),
            ("Data Structures", [117, 58, 44, 111]),
            ("Objects and Algorithms", [43, 17, 60, 32]),
        ]);
        let counts = m.content_counts();
        let fundamentals = counts.per_submodule[0].1;
        assert_eq!(
            (
                fundamentals.video,
                fundamentals.ungraded_exercise,
                fundamentals.coding_exercise,
                fundamentals.graded_problem
            ),
            (160, 56, 54, 67)
        );
        // Totals are the sums of the per-unit rows.
        assert_eq!(counts.totals.video, 442);
        assert_eq!(counts.totals.coding_exercise, 235);
        assert_eq!(counts.totals.ungraded_exercise, 216);
        assert_eq!(counts.totals.graded_problem, 295);
    }

    #[test]
    fn empty_manifest_has_zero_counts() {
        let m = CourseManifest::from_json(r#"{"course_id":"c","submodules":[]}"#).unwrap();
        assert_eq!(m.content_counts().totals, KindCounts::default());
        assert!(m.content_counts().per_submodule.is_empty());
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let text = r#"{"course_id":"c","submodules":[{"name":"a","chapters":[{"name":"c","sections":[
            {"name":"s","blocks":[{"block_id":"x","kind":"video"}]},
            {"name":"t","blocks":[{"block_id":"x","kind":"text"}]}]}]}]}"#;
        assert!(matches!(
            CourseManifest::from_json(text),
            Err(ManifestError::DuplicateBlock(id)) if id == "x"
        ));
    }

    #[test]
    fn syntax_errors_and_unknown_kinds() {
        assert!(matches!(
            CourseManifest::from_json("{"),
            Err(ManifestError::Syntax(_))
        ));
        let bad_kind = r#"{"course_id":"c","submodules":[{"name":"a","chapters":[{"name":"c","sections":[{"name":"s","blocks":[{"block_id":"x","kind":"quiz"}]}]}]}]}"#;
        assert!(CourseManifest::from_json(bad_kind).is_err());
    }

    #[test]
    fn locate_first_and_unknown() {
        let m = CourseManifest::new(
            "c",
            NaiveDate::from_ymd_opt(2021, 1, 11),
            vec![SubModule {
                name: "a".into(),
                chapters: vec![Chapter {
                    name: "c".into(),
                    sections: vec![section(
                        "s",
                        vec![("v1", BlockKind::Video), ("p1", BlockKind::GradedProblem)],
                    )],
                }],
            }],
        )
        .unwrap();
        assert_eq!(
            m.locate_block("v1"),
            Some(BlockPosition {
                submodule: 0,
                chapter: 0,
                section: 0,
                block: 0
            })
        );
        assert_eq!(m.locate_block("nope"), None);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(CourseManifest::from_json(&json).unwrap(), m);
    }

    fn arb_kind() -> impl Strategy<Value = BlockKind> {
        prop_oneof![
            Just(BlockKind::Video),
            Just(BlockKind::GradedProblem),
            Just(BlockKind::UngradedExercise),
            Just(BlockKind::CodingExercise),
            Just(BlockKind::Text),
        ]
    }

    /// Random tree shapes; block ids are assigned sequentially so they are
    /// unique.
    fn arb_manifest() -> impl Strategy<Value = CourseManifest> {
        proptest::collection::vec(
            proptest::collection::vec(
                proptest::collection::vec(proptest::collection::vec(arb_kind(), 0..5), 0..4),
                0..3,
            ),
            0..4,
        )
        .prop_map(|tree| {
            let mut next = 0usize;
            let submodules = tree
                .into_iter()
                .enumerate()
                .map(|(si, chapters)| SubModule {
                    name: format!("sm{si}"),
                    chapters: chapters
                        .into_iter()
                        .map(|sections| Chapter {
                            name: "ch".into(),
                            sections: sections
                                .into_iter()
                                .map(|kinds| Section {
                                    name: "sec".into(),
                                    blocks: kinds
                                        .into_iter()
                                        .map(|kind| {
                                            next += 1;
                                            Block {
                                                block_id: format!("b{next}"),
                                                kind,
                                            }
                                        })
                                        .collect(),
                                })
                                .collect(),
                        })
                        .collect(),
                })
                .collect();
            CourseManifest::new("c", None, submodules).unwrap()
        })
    }

    proptest! {
        #[test]
        fn locate_agrees_with_traversal(m in arb_manifest()) {
            // Exhaustive nested-loop traversal as the oracle.
            let mut seen = 0;
            for (si, sm) in m.submodules().iter().enumerate() {
                for (ci, ch) in sm.chapters.iter().enumerate() {
                    for (xi, sec) in ch.sections.iter().enumerate() {
                        for (bi, b) in sec.blocks.iter().enumerate() {
                            let pos = m.locate_block(&b.block_id).unwrap();
                            prop_assert_eq!(pos, BlockPosition { submodule: si, chapter: ci, section: xi, block: bi });
                            prop_assert_eq!(m.block_at(pos), Some(b));
                            seen += 1;
                        }
                    }
                }
            }
            prop_assert_eq!(seen, m.block_count());
        }

        #[test]
        fn counts_match_enumeration(m in arb_manifest()) {
            let counts = m.content_counts();
            for (i, sm) in m.submodules().iter().enumerate() {
                let all: Vec<BlockKind> = sm.chapters.iter()
                    .flat_map(|c| &c.sections).flat_map(|s| &s.blocks).map(|b| b.kind).collect();
                let n = |k| all.iter().filter(|x| **x == k).count();
                let c = counts.per_submodule[i].1;
                prop_assert_eq!(c.video, n(BlockKind::Video));
                prop_assert_eq!(c.graded_problem, n(BlockKind::GradedProblem));
                prop_assert_eq!(c.ungraded_exercise, n(BlockKind::UngradedExercise));
                prop_assert_eq!(c.coding_exercise, n(BlockKind::CodingExercise));
                prop_assert_eq!(c.text, n(BlockKind::Text));
            }
            let total: usize = m.blocks().count();
            let t = counts.totals;
            prop_assert_eq!(t.video + t.graded_problem + t.ungraded_exercise + t.coding_exercise + t.text, total);
        }

        #[test]
        fn counts_ignore_section_order(m in arb_manifest()) {
            let mut doc: ManifestDoc = m.clone().into();
            for sm in &mut doc.submodules {
                for ch in &mut sm.chapters {
                    ch.sections.reverse();
                }
            }
            let shuffled = CourseManifest::try_from(doc).unwrap();
            prop_assert_eq!(shuffled.content_counts(), m.content_counts());
        }
    }
}
