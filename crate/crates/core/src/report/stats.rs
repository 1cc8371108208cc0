use serde::Serialize;

/// Descriptive statistics over a sample. Variance is the population
/// variance; quantiles interpolate linearly between closest ranks, so the
/// median of an even-sized sample is the mean of the middle pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub variance: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mean = sorted.iter().sum::<f64>() / n as f64;
        let variance = sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        Some(Summary {
            n,
            mean,
            variance,
            q1: quantile(&sorted, 0.25),
            median: quantile(&sorted, 0.5),
            q3: quantile(&sorted, 0.75),
        })
    }
}

/// `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_element_fixture() {
        // Ranks 0..4: q1 at rank 1, median at 2, q3 at 3.
        let s = Summary::of(&[7.0, 1.0, 3.0, 9.0, 5.0]).unwrap();
        assert_eq!((s.q1, s.median, s.q3), (3.0, 5.0, 7.0));
        assert_eq!(s.mean, 5.0);
        assert_eq!(s.variance, 8.0);
    }

    #[test]
    fn interpolated_fixture() {
        // h = 0.75, 1.5, 2.25 for n = 4.
        let s = Summary::of(&[1.0, 2.0, 4.0, 8.0]).unwrap();
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.median, 3.0);
        assert_eq!(s.q3, 5.0);
    }

    #[test]
    fn small_samples() {
        let s = Summary::of(&[0.8, 1.0]).unwrap();
        assert!((s.mean - 0.9).abs() < 1e-12);
        assert!((s.median - 0.9).abs() < 1e-12);
        let one = Summary::of(&[2.0]).unwrap();
        assert_eq!((one.variance, one.q1, one.q3), (0.0, 2.0, 2.0));
        assert!(Summary::of(&[]).is_none());
        assert_eq!(Summary::of(&[1.0, 2.0, 3.0]).unwrap().median, 2.0);
    }
}
