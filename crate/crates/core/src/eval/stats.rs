use super::EvalError;

/// Box-plot statistics of one error series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatSummary {
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub lower_whisker: f64,
    pub upper_whisker: f64,
    /// Fraction of the series inside the whiskers.
    pub effective_rate: f64,
}

/// Quantile by linear interpolation between closest ranks, position q·(n−1).
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median, quartiles and 1.5·IQR whiskers (clamped to the data range).
pub fn summarize(series: &[f64]) -> Result<StatSummary, EvalError> {
    if series.is_empty() {
        return Err(EvalError::EmptySeries);
    }
    if series.iter().any(|v| v.is_nan()) {
        return Err(EvalError::NonFinite);
    }
    let mut s = series.to_vec();
    s.sort_by(f64::total_cmp);
    let q1 = quantile(&s, 0.25);
    let median = quantile(&s, 0.5);
    let q3 = quantile(&s, 0.75);
    let iqr = q3 - q1;
    let lower_whisker = (q1 - 1.5 * iqr).max(s[0]);
    let upper_whisker = (q3 + 1.5 * iqr).min(s[s.len() - 1]);
    let inside = s.iter().filter(|&&v| v >= lower_whisker && v <= upper_whisker).count();
    Ok(StatSummary {
        count: s.len(),
        median,
        q1,
        q3,
        lower_whisker,
        upper_whisker,
        effective_rate: inside as f64 / s.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_series() {
        let s = summarize(&[2.5; 7]).unwrap();
        for v in [s.median, s.q1, s.q3, s.lower_whisker, s.upper_whisker] {
            assert_eq!(v, 2.5);
        }
        assert_eq!(s.effective_rate, 1.0);
    }

    #[test]
    fn one_to_hundred() {
        let data: Vec<f64> = (1..=100).map(f64::from).collect();
        let s = summarize(&data).unwrap();
        assert!((s.median - 50.5).abs() < 1e-12);
        assert!((s.q1 - 25.75).abs() < 1e-12);
        assert!((s.q3 - 75.25).abs() < 1e-12);
        // Q1 - 1.5 IQR = -48.5 and Q3 + 1.5 IQR = 149.5 both clamp
        assert_eq!(s.lower_whisker, 1.0);
        assert_eq!(s.upper_whisker, 100.0);
    }

    #[test]
    fn single_outlier() {
        let mut data = vec![0.0; 99];
        data.push(1e6);
        let s = summarize(&data).unwrap();
        assert_eq!(s.effective_rate, 0.99);
        assert_eq!(s.upper_whisker, 0.0);
    }

    #[test]
    fn hand_computed_whiskers() {
        // sorted: 1 2 3 4 5 6 7 8 9 40; Q1 = 3.25, Q3 = 7.75, IQR = 4.5
        let data = [9.0, 1.0, 40.0, 3.0, 5.0, 2.0, 8.0, 4.0, 7.0, 6.0];
        let s = summarize(&data).unwrap();
        assert!((s.q1 - 3.25).abs() < 1e-12);
        assert!((s.q3 - 7.75).abs() < 1e-12);
        assert!((s.upper_whisker - 14.5).abs() < 1e-12);
        assert_eq!(s.lower_whisker, 1.0);
        assert!((s.effective_rate - 0.9).abs() < 1e-12);
    }

    #[test]
    fn empty_series() {
        assert!(matches!(summarize(&[]), Err(EvalError::EmptySeries)));
    }

    proptest! {
        #[test]
        fn ordering_permutation_and_scaling(
            data in prop::collection::vec(-100.0f64..100.0, 1..60),
            k in 0.01f64..50.0,
            rot in 0usize..60,
        ) {
            let s = summarize(&data).unwrap();
            prop_assert!(s.lower_whisker <= s.q1 && s.q1 <= s.median);
            prop_assert!(s.median <= s.q3 && s.q3 <= s.upper_whisker);

            let mut shuffled = data.clone();
            let r = rot % shuffled.len();
            shuffled.rotate_left(r);
            shuffled.reverse();
            prop_assert_eq!(summarize(&shuffled).unwrap(), s);

            let scaled: Vec<f64> = data.iter().map(|v| v * k).collect();
            let t = summarize(&scaled).unwrap();
            let tol = 1e-9 * (1.0 + s.median.abs() * k);
            prop_assert!((t.median - k * s.median).abs() < tol);
            prop_assert!((t.q1 - k * s.q1).abs() < 1e-9 * (1.0 + s.q1.abs() * k));
            prop_assert!((t.q3 - k * s.q3).abs() < 1e-9 * (1.0 + s.q3.abs() * k));
        }
    }
}
