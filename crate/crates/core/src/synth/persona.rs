use serde::{Deserialize, Serialize};

use crate::classify::{OrdinalClass, RuleConfig};
use crate::metrics::score_r_for;

use super::SynthError;

/// Minimum distance between any persona range and any rule threshold.
pub const MARGIN: f64 = 0.05;

const EPS: f64 = 1e-9;

/// A sampler for one rule region. Each generated user draws its counts,
/// attempt numbers, scores and watch fractions uniformly from these ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonaSpec {
    pub target_class: OrdinalClass,
    pub n_users: usize,
    /// Per-video watch fraction.
    pub video_watch_range: [f64; 2],
    /// Number of distinct videos played.
    pub videos_watched_range: [usize; 2],
    pub problems_attempted_range: [usize; 2],
    pub attempts_per_problem_range: [usize; 2],
    pub first_score_range: [f64; 2],
    /// Play some video of a section before attempting its problems.
    pub watch_before_problems: bool,
    #[serde(default)]
    pub seed_offset: u64,
}

impl PersonaSpec {
    fn check_shape(&self) -> Result<(), SynthError> {
        let bad = |what: &str| {
            Err(SynthError::InvalidSpec(format!(
                "{} persona: {what}",
                self.target_class
            )))
        };
        let f_ok = |r: [f64; 2]| (0.0..=1.0).contains(&r[0]) && r[0] <= r[1] && r[1] <= 1.0;
        if !f_ok(self.video_watch_range) {
            return bad("video_watch_range must be an ordered pair within [0, 1]");
        }
        if !f_ok(self.first_score_range) {
            return bad("first_score_range must be an ordered pair within [0, 1]");
        }
        if self.video_watch_range[0] <= 0.0 && self.videos_watched_range[1] > 0 {
            return bad("played videos need a positive watch fraction");
        }
        for (name, r) in [
            ("videos_watched_range", self.videos_watched_range),
            ("problems_attempted_range", self.problems_attempted_range),
            ("attempts_per_problem_range", self.attempts_per_problem_range),
        ] {
            if r[0] > r[1] {
                return bad(&format!("{name} is reversed"));
            }
        }
        if self.attempts_per_problem_range[0] == 0 {
            return bad("attempts_per_problem_range must start at 1");
        }
        Ok(())
    }

    /// Checks that every user this persona can produce lands in
    /// `target_class`, with every deciding comparison at least [`MARGIN`]
    /// away from its threshold.
    pub fn validate(&self, rules: &RuleConfig, passing_threshold: f64) -> Result<(), SynthError> {
        self.check_shape()?;
        let region = Region::of(self, passing_threshold);
        let ambiguous = |reason: String| SynthError::AmbiguousPersona {
            class: self.target_class,
            reason,
        };
        let decided = |rule: OrdinalClass, t: Tri| -> Result<(), SynthError> {
            match (rule == self.target_class, t) {
                (true, Tri::True) | (false, Tri::False) => Ok(()),
                (true, _) => Err(ambiguous(format!("the {rule} rule is not certain to match"))),
                (false, Tri::True) => Err(ambiguous(format!("the earlier {rule} rule matches"))),
                (false, Tri::Unknown) => {
                    Err(ambiguous(format!("the earlier {rule} rule may match")))
                }
            }
        };

        let total = region.videos.add(region.problems);
        let no_show = total.lt(rules.no_show_total as f64);
        decided(OrdinalClass::NoShow, no_show)?;
        if no_show == Tri::True {
            return Ok(());
        }

        let attempts_ok = if rules.box_checker_literal {
            scarce(region.total_attempts, region.videos, rules.attempts_per_problem_max)
        } else {
            region
                .attempts_per_problem
                .map_or(Tri::False, |iv| iv.lt(rules.attempts_per_problem_max))
                .and(present(region.problems))
        };
        let box_checker = nonzero(region.problems)
            .and(scarce(region.videos, region.problems, rules.ratio_threshold))
            .and(attempts_ok);
        decided(OrdinalClass::BoxChecker, box_checker)?;
        if box_checker == Tri::True {
            return Ok(());
        }

        let voyeur = nonzero(region.videos)
            .and(scarce(region.problems, region.videos, rules.ratio_threshold))
            .and(region.videos.gt(rules.voyeur_min_videos as f64));
        decided(OrdinalClass::Voyeur, voyeur)?;
        if voyeur == Tri::True {
            return Ok(());
        }

        let watch = region.watch.map_or(Tri::False, |w| w.gt(rules.watch_hi));
        let engaged = region
            .score_r
            .map_or(Tri::False, |s| s.lt(rules.scorer_hi))
            .and(watch)
            .and(present(region.videos))
            .and(present(region.problems));
        let studied = region.order.map_or(Tri::False, |o| o.ge(rules.order_min));
        match self.target_class {
            OrdinalClass::Studier => decided(OrdinalClass::Studier, engaged.and(studied))?,
            OrdinalClass::HighEngagement => {
                decided(OrdinalClass::HighEngagement, engaged.and(studied.not()))?
            }
            _ => decided(OrdinalClass::HighEngagement, engaged)?,
        }
        if engaged == Tri::True {
            return Ok(());
        }

        for (class, watch_t, score_t) in [
            (OrdinalClass::NormalEngagement, rules.watch_mid, rules.scorer_mid),
            (OrdinalClass::PotentiallyAtRisk, rules.watch_lo, rules.scorer_lo),
        ] {
            let t = region
                .watch
                .map_or(Tri::False, |w| w.gt(watch_t))
                .and(region.score_r.map_or(Tri::False, |s| s.lt(score_t)))
                .and(present(region.videos))
                .and(present(region.problems));
            decided(class, t)?;
            if t == Tri::True {
                return Ok(());
            }
        }
        if self.target_class == OrdinalClass::AtRisk {
            Ok(())
        } else {
            Err(ambiguous("falls through to at_risk".into()))
        }
    }
}

/// Three-valued truth for a predicate over a range of metric values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Tri {
    True,
    False,
    Unknown,
}

impl Tri {
    fn and(self, other: Tri) -> Tri {
        match (self, other) {
            (Tri::False, _) | (_, Tri::False) => Tri::False,
            (Tri::True, Tri::True) => Tri::True,
            _ => Tri::Unknown,
        }
    }

    fn not(self) -> Tri {
        match self {
            Tri::True => Tri::False,
            Tri::False => Tri::True,
            Tri::Unknown => Tri::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    fn counts(r: [usize; 2]) -> Self {
        Interval::new(r[0] as f64, r[1] as f64)
    }

    fn add(self, o: Interval) -> Interval {
        Interval::new(self.lo + o.lo, self.hi + o.hi)
    }

    fn gt(self, t: f64) -> Tri {
        if self.lo >= t + MARGIN - EPS {
            Tri::True
        } else if self.hi <= t - MARGIN + EPS {
            Tri::False
        } else {
            Tri::Unknown
        }
    }

    fn ge(self, t: f64) -> Tri {
        self.gt(t)
    }

    fn lt(self, t: f64) -> Tri {
        if self.hi <= t - MARGIN + EPS {
            Tri::True
        } else if self.lo >= t + MARGIN - EPS {
            Tri::False
        } else {
            Tri::Unknown
        }
    }
}

fn nonzero(iv: Interval) -> Tri {
    if iv.lo > 0.0 {
        Tri::True
    } else if iv.hi == 0.0 {
        Tri::False
    } else {
        Tri::Unknown
    }
}

/// A metric that exists only when `count` is positive.
fn present(count: Interval) -> Tri {
    match nonzero(count) {
        Tri::True => Tri::True,
        _ => Tri::Unknown,
    }
}

/// `num / den < t` with the classifier's zero-denominator convention.
fn scarce(num: Interval, den: Interval, t: f64) -> Tri {
    if num.hi == 0.0 {
        return Tri::True;
    }
    if den.hi == 0.0 {
        return if num.lo > 0.0 { Tri::False } else { Tri::Unknown };
    }
    let lo = num.lo / den.hi;
    let hi = if den.lo > 0.0 { num.hi / den.lo } else { f64::INFINITY };
    let r = Interval::new(lo, hi).lt(t);
    if den.lo == 0.0 && num.lo > 0.0 && r != Tri::False {
        // A zero denominator with a positive numerator fails outright.
        Tri::Unknown
    } else {
        r
    }
}

/// Reachable ranges of every classifier input for a persona. Optional
/// metrics are `None` when they can never be present.
struct Region {
    videos: Interval,
    problems: Interval,
    total_attempts: Interval,
    attempts_per_problem: Option<Interval>,
    watch: Option<Interval>,
    score_r: Option<Interval>,
    order: Option<Interval>,
}

impl Region {
    fn of(p: &PersonaSpec, passing: f64) -> Self {
        let videos = Interval::counts(p.videos_watched_range);
        let problems = Interval::counts(p.problems_attempted_range);
        let attempts = Interval::counts(p.attempts_per_problem_range);
        let any_problems = p.problems_attempted_range[1] > 0;
        let any_videos = p.videos_watched_range[1] > 0;

        let mut score_values = Vec::new();
        for n in p.attempts_per_problem_range[0]..=p.attempts_per_problem_range[1].min(64) {
            if n == 1 {
                if p.first_score_range[1] >= passing {
                    score_values.push(score_r_for(1, true));
                }
                if p.first_score_range[0] < passing {
                    score_values.push(score_r_for(1, false));
                }
            } else {
                score_values.push(score_r_for(n, true));
            }
        }
        if p.attempts_per_problem_range[1] > 64 {
            score_values.push(score_r_for(65, true));
        }
        let score_r = any_problems.then(|| {
            let lo = *score_values.iter().min().unwrap_or(&4) as f64;
            let hi = *score_values.iter().max().unwrap_or(&4) as f64;
            Interval::new(lo, hi)
        });

        let order = any_problems.then(|| {
            if p.watch_before_problems {
                Interval::new(1.0, 1.0)
            } else {
                Interval::new(0.0, 0.0)
            }
        });

        Region {
            videos,
            problems,
            total_attempts: Interval::new(problems.lo * attempts.lo, problems.hi * attempts.hi),
            attempts_per_problem: any_problems.then_some(attempts),
            watch: any_videos.then(|| Interval::new(p.video_watch_range[0], p.video_watch_range[1])),
            score_r,
            order,
        }
    }
}

/// One persona per class, `n_users` users each.
pub fn default_personas(n_users: usize) -> Vec<PersonaSpec> {
    let engaged = |class, watch: [f64; 2], attempts: [usize; 2], first: [f64; 2], before| {
        PersonaSpec {
            target_class: class,
            n_users,
            video_watch_range: watch,
            videos_watched_range: [25, 40],
            problems_attempted_range: [12, 20],
            attempts_per_problem_range: attempts,
            first_score_range: first,
            watch_before_problems: before,
            seed_offset: 0,
        }
    };
    let mut personas = vec![
        PersonaSpec {
            target_class: OrdinalClass::NoShow,
            n_users,
            video_watch_range: [0.05, 0.5],
            videos_watched_range: [0, 4],
            problems_attempted_range: [0, 4],
            attempts_per_problem_range: [1, 2],
            first_score_range: [0.0, 1.0],
            watch_before_problems: false,
            seed_offset: 0,
        },
        PersonaSpec {
            target_class: OrdinalClass::BoxChecker,
            n_users,
            video_watch_range: [0.05, 0.3],
            videos_watched_range: [0, 1],
            problems_attempted_range: [21, 30],
            attempts_per_problem_range: [1, 1],
            first_score_range: [0.75, 1.0],
            watch_before_problems: false,
            seed_offset: 0,
        },
        PersonaSpec {
            target_class: OrdinalClass::Voyeur,
            n_users,
            video_watch_range: [0.3, 1.0],
            videos_watched_range: [25, 40],
            problems_attempted_range: [0, 1],
            attempts_per_problem_range: [1, 1],
            first_score_range: [0.75, 1.0],
            watch_before_problems: true,
            seed_offset: 0,
        },
        PersonaSpec {
            videos_watched_range: [30, 45],
            ..engaged(OrdinalClass::Studier, [0.85, 0.95], [1, 1], [0.8, 1.0], true)
        },
        PersonaSpec {
            videos_watched_range: [30, 45],
            ..engaged(OrdinalClass::HighEngagement, [0.85, 0.95], [1, 1], [0.8, 1.0], false)
        },
        engaged(OrdinalClass::NormalEngagement, [0.66, 0.74], [2, 2], [0.2, 0.6], false),
        engaged(OrdinalClass::PotentiallyAtRisk, [0.46, 0.54], [3, 4], [0.1, 0.5], false),
        engaged(OrdinalClass::AtRisk, [0.1, 0.35], [5, 8], [0.0, 0.3], false),
    ];
    for (i, p) in personas.iter_mut().enumerate() {
        p.seed_offset = i as u64;
    }
    personas
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::DEFAULT_PASSING_THRESHOLD;

    fn check(p: &PersonaSpec) -> Result<(), SynthError> {
        p.validate(&RuleConfig::default(), DEFAULT_PASSING_THRESHOLD)
    }

    #[test]
    fn defaults_are_unambiguous() {
        for p in default_personas(5) {
            check(&p).unwrap_or_else(|e| panic!("{}: {e}", p.target_class));
        }
    }

    #[test]
    fn watch_range_touching_threshold_is_rejected() {
        let mut p = default_personas(1)[5].clone();
        assert_eq!(p.target_class, OrdinalClass::NormalEngagement);
        p.video_watch_range = [0.62, 0.7];
        assert!(matches!(check(&p), Err(SynthError::AmbiguousPersona { .. })));
        p.video_watch_range = [0.66, 0.78];
        assert!(matches!(check(&p), Err(SynthError::AmbiguousPersona { .. })));
    }

    #[test]
    fn wrong_region_is_rejected() {
        let mut p = default_personas(1)[3].clone();
        p.attempts_per_problem_range = [2, 2];
        assert!(matches!(check(&p), Err(SynthError::AmbiguousPersona { .. })));
        let mut p = default_personas(1)[0].clone();
        p.videos_watched_range = [0, 9];
        assert!(matches!(check(&p), Err(SynthError::AmbiguousPersona { .. })));
    }

    #[test]
    fn single_attempt_straddling_pass_mark_is_rejected() {
        let mut p = default_personas(1)[3].clone();
        p.first_score_range = [0.5, 1.0];
        assert!(matches!(check(&p), Err(SynthError::AmbiguousPersona { .. })));
    }

    #[test]
    fn shape_errors() {
        let mut p = default_personas(1)[1].clone();
        p.first_score_range = [0.9, 0.8];
        assert!(matches!(check(&p), Err(SynthError::InvalidSpec(_))));
        let mut p = default_personas(1)[1].clone();
        p.attempts_per_problem_range = [0, 1];
        assert!(matches!(check(&p), Err(SynthError::InvalidSpec(_))));
    }

    #[test]
    fn scarce_zero_denominators() {
        let zero = Interval::new(0.0, 0.0);
        let some = Interval::new(3.0, 5.0);
        assert_eq!(scarce(zero, zero, 0.1), Tri::True);
        assert_eq!(scarce(some, zero, 0.1), Tri::False);
        assert_eq!(scarce(some, Interval::new(0.0, 1.0), 0.1), Tri::False);
        assert_eq!(scarce(Interval::new(0.0, 1.0), Interval::new(25.0, 40.0), 0.1), Tri::True);
    }
}
