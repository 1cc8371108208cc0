//! Ordinal behavior classes and first-match rule evaluation.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::StudentAggregate;

/// Declaration order is rule evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrdinalClass {
    NoShow,
    BoxChecker,
    Voyeur,
    Studier,
    HighEngagement,
    NormalEngagement,
    PotentiallyAtRisk,
    AtRisk,
}

impl OrdinalClass {
    pub const ALL: [OrdinalClass; 8] = [
        OrdinalClass::NoShow,
        OrdinalClass::BoxChecker,
        OrdinalClass::Voyeur,
        OrdinalClass::Studier,
        OrdinalClass::HighEngagement,
        OrdinalClass::NormalEngagement,
        OrdinalClass::PotentiallyAtRisk,
        OrdinalClass::AtRisk,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OrdinalClass::NoShow => "no_show",
            OrdinalClass::BoxChecker => "box_checker",
            OrdinalClass::Voyeur => "voyeur",
            OrdinalClass::Studier => "studier",
            OrdinalClass::HighEngagement => "high_engagement",
            OrdinalClass::NormalEngagement => "normal_engagement",
            OrdinalClass::PotentiallyAtRisk => "potentially_at_risk",
            OrdinalClass::AtRisk => "at_risk",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Self::as_str).join(", ")
    }
}

impl fmt::Display for OrdinalClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownClass(pub String);

impl fmt::Display for UnknownClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "unknown class {:?}; valid names: {}",
            self.0,
            OrdinalClass::valid_names()
        )
    }
}

impl std::error::Error for UnknownClass {}

impl FromStr for OrdinalClass {
    type Err = UnknownClass;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OrdinalClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| UnknownClass(s.to_owned()))
    }
}

/// Rule thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RuleConfig {
    pub no_show_total: usize,
    pub ratio_threshold: f64,
    pub voyeur_min_videos: usize,
    pub attempts_per_problem_max: f64,
    pub watch_hi: f64,
    pub watch_mid: f64,
    pub watch_lo: f64,
    pub scorer_hi: f64,
    pub scorer_mid: f64,
    pub scorer_lo: f64,
    pub order_min: f64,
    /// Evaluate the box-checker attempt clause as total attempts divided by
    /// videos instead of attempts per problem.
    pub box_checker_literal: bool,
}

impl Default for RuleConfig {
    fn default() -> Self {
        RuleConfig {
            no_show_total: 10,
            ratio_threshold: 0.10,
            voyeur_min_videos: 20,
            attempts_per_problem_max: 2.0,
            watch_hi: 0.8,
            watch_mid: 0.6,
            watch_lo: 0.4,
            scorer_hi: 2.0,
            scorer_mid: 3.0,
            scorer_lo: 4.0,
            order_min: 0.8,
            box_checker_literal: false,
        }
    }
}

impl RuleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.watch_lo < self.watch_mid && self.watch_mid < self.watch_hi) {
            return Err(Error::Config(
                "watch thresholds must satisfy watch_lo < watch_mid < watch_hi".into(),
            ));
        }
        if !(self.scorer_hi < self.scorer_mid && self.scorer_mid <= self.scorer_lo) {
            return Err(Error::Config(
                "ScoreR thresholds must satisfy scorer_hi < scorer_mid <= scorer_lo".into(),
            ));
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: RuleConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `numerator / denominator < threshold`, where a zero denominator passes
/// only with a zero numerator.
fn scarce(numerator: f64, denominator: f64, threshold: f64) -> bool {
    if denominator == 0.0 {
        numerator == 0.0
    } else {
        numerator / denominator < threshold
    }
}

fn above(metric: Option<f64>, threshold: f64) -> bool {
    metric.is_some_and(|m| m > threshold)
}

fn below(metric: Option<f64>, threshold: f64) -> bool {
    metric.is_some_and(|m| m < threshold)
}

/// First matching rule wins; `AtRisk` is the default. Rules that reference
/// an absent metric do not match.
pub fn classify(agg: &StudentAggregate, cfg: &RuleConfig) -> OrdinalClass {
    let videos = agg.n_videos as f64;
    let problems = agg.n_problems as f64;

    if agg.n_videos + agg.n_problems < cfg.no_show_total {
        return OrdinalClass::NoShow;
    }

    let attempts_ok = if cfg.box_checker_literal {
        scarce(
            agg.total_attempts as f64,
            videos,
            cfg.attempts_per_problem_max,
        )
    } else {
        below(agg.mean_attempts_per_problem, cfg.attempts_per_problem_max)
    };
    if agg.n_problems > 0 && scarce(videos, problems, cfg.ratio_threshold) && attempts_ok {
        return OrdinalClass::BoxChecker;
    }

    if agg.n_videos > 0
        && scarce(problems, videos, cfg.ratio_threshold)
        && agg.n_videos > cfg.voyeur_min_videos
    {
        return OrdinalClass::Voyeur;
    }

    let watch = agg.mean_watch_fraction;
    let score_r = agg.mean_score_r;
    if above(watch, cfg.watch_hi) && below(score_r, cfg.scorer_hi) {
        return if agg.order_fraction.is_some_and(|o| o >= cfg.order_min) {
            OrdinalClass::Studier
        } else {
            OrdinalClass::HighEngagement
        };
    }
    if above(watch, cfg.watch_mid) && below(score_r, cfg.scorer_mid) {
        return OrdinalClass::NormalEngagement;
    }
    if above(watch, cfg.watch_lo) && below(score_r, cfg.scorer_lo) {
        return OrdinalClass::PotentiallyAtRisk;
    }
    OrdinalClass::AtRisk
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn agg(videos: usize, problems: usize) -> StudentAggregate {
        let mut a = StudentAggregate::empty("u", "c");
        a.n_videos = videos;
        a.n_problems = problems;
        a
    }

    fn engaged(watch: f64, score_r: f64, order: Option<f64>) -> StudentAggregate {
        let mut a = agg(40, 20);
        a.total_attempts = 20;
        a.mean_attempts_per_problem = Some(1.0);
        a.mean_watch_fraction = Some(watch);
        a.mean_score_r = Some(score_r);
        a.order_fraction = order;
        a
    }

    #[test]
    fn examples() {
        let cfg = RuleConfig::default();
        assert_eq!(classify(&agg(3, 2), &cfg), OrdinalClass::NoShow);
        assert_eq!(classify(&agg(25, 1), &cfg), OrdinalClass::Voyeur);

        let mut box_checker = agg(2, 40);
        box_checker.total_attempts = 60;
        box_checker.mean_attempts_per_problem = Some(1.5);
        assert_eq!(classify(&box_checker, &cfg), OrdinalClass::BoxChecker);

        assert_eq!(classify(&engaged(0.9, 1.5, Some(0.9)), &cfg), OrdinalClass::Studier);
        assert_eq!(
            classify(&engaged(0.9, 1.5, Some(0.3)), &cfg),
            OrdinalClass::HighEngagement
        );
        assert_eq!(
            classify(&engaged(0.65, 2.5, None), &cfg),
            OrdinalClass::NormalEngagement
        );
        assert_eq!(classify(&engaged(0.2, 3.9, None), &cfg), OrdinalClass::AtRisk);
    }

    #[test]
    fn literal_box_checker_form() {
        let cfg = RuleConfig {
            box_checker_literal: true,
            ..RuleConfig::default()
        };
        let mut a = agg(2, 40);
        a.total_attempts = 60;
        a.mean_attempts_per_problem = Some(1.5);
        // 60 attempts over 2 videos is 30, not < 2.
        assert_ne!(classify(&a, &cfg), OrdinalClass::BoxChecker);
        a.n_videos = 0;
        // Zero videos with nonzero attempts fails the literal clause.
        assert_ne!(classify(&a, &cfg), OrdinalClass::BoxChecker);
    }

    #[test]
    fn zero_denominators() {
        let cfg = RuleConfig::default();
        // No videos satisfies the box-checker ratio.
        let mut a = agg(0, 12);
        a.mean_attempts_per_problem = Some(1.0);
        assert_eq!(classify(&a, &cfg), OrdinalClass::BoxChecker);
        // No problems satisfies the voyeur ratio.
        assert_eq!(classify(&agg(21, 0), &cfg), OrdinalClass::Voyeur);
    }

    #[test]
    fn absent_metrics_fall_to_default() {
        assert_eq!(classify(&agg(15, 15), &RuleConfig::default()), OrdinalClass::AtRisk);
    }

    #[test]
    fn class_names_round_trip() {
        for c in OrdinalClass::ALL {
            assert_eq!(c.as_str().parse::<OrdinalClass>().unwrap(), c);
            assert_eq!(serde_json::to_string(&c).unwrap(), format!("\"{c}\""));
        }
        let err = "lurker".parse::<OrdinalClass>().unwrap_err();
        assert!(err.to_string().contains("no_show"));
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg: RuleConfig = serde_json::from_str(r#"{"watch_hi":0.85}"#).unwrap();
        assert_eq!(cfg.watch_hi, 0.85);
        assert_eq!(cfg.no_show_total, 10);
        assert!(serde_json::from_str::<RuleConfig>(r#"{"bogus":1}"#).is_err());
        let bad = RuleConfig {
            watch_lo: 0.7,
            ..RuleConfig::default()
        };
        assert!(bad.validate().is_err());
        RuleConfig::default().validate().unwrap();
    }

    fn rank(c: OrdinalClass) -> usize {
        OrdinalClass::ALL.iter().position(|x| *x == c).unwrap()
    }

    proptest! {
        #[test]
        fn higher_score_r_never_raises_engagement(
            watch in 0.0f64..1.0,
            s1 in 1.0f64..4.0,
            ds in 0.0f64..3.0,
            order in proptest::option::of(0.0f64..1.0),
        ) {
            let cfg = RuleConfig::default();
            let lo = classify(&engaged(watch, s1, order), &cfg);
            let hi = classify(&engaged(watch, (s1 + ds).min(4.0), order), &cfg);
            // Studier and high engagement share a tier.
            let tier = |c| if c == OrdinalClass::Studier { rank(OrdinalClass::HighEngagement) } else { rank(c) };
            prop_assert!(tier(hi) >= tier(lo));
        }

        #[test]
        fn classify_is_total_and_pure(
            v in 0usize..60, p in 0usize..60, attempts in 0usize..200,
            watch in proptest::option::of(0.0f64..1.0),
            sr in proptest::option::of(1.0f64..4.0),
            order in proptest::option::of(0.0f64..1.0),
        ) {
            let mut a = agg(v, p);
            a.total_attempts = attempts;
            a.mean_attempts_per_problem = (p > 0).then(|| attempts as f64 / p as f64);
            a.mean_watch_fraction = watch;
            a.mean_score_r = sr;
            a.order_fraction = order;
            let cfg = RuleConfig::default();
            prop_assert_eq!(classify(&a, &cfg), classify(&a.clone(), &cfg));
        }
    }
}
