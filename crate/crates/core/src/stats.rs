//! Small descriptive statistics helpers.

/// Mean and sample standard deviation (`n - 1` denominator).
///
/// Values are shifted by the first element before accumulating, so a
/// constant input yields exactly that constant and a zero deviation.
/// Empty input gives `(NaN, NaN)`; a single value has zero deviation.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let Some(&first) = values.first() else {
        return (f64::NAN, f64::NAN);
    };
    let n = values.len() as f64;
    let shifted_mean = values.iter().map(|v| v - first).sum::<f64>() / n;
    let mean = first + shifted_mean;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = values
        .iter()
        .map(|v| (v - first - shifted_mean).powi(2))
        .sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Optimal 1-D two-means split: returns `(low_mean, high_mean, low_count)`
/// for the partition of the sorted values minimising within-cluster sum of
/// squares. `None` for fewer than two values.
pub fn two_means(values: &[f64]) -> Option<(f64, f64, usize)> {
    if values.len() < 2 {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut prefix = Vec::with_capacity(n + 1);
    let mut prefix_sq = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    prefix_sq.push(0.0);
    for v in &sorted {
        prefix.push(prefix.last().unwrap() + v);
        prefix_sq.push(prefix_sq.last().unwrap() + v * v);
    }
    let sse = |a: usize, b: usize| {
        let k = (b - a) as f64;
        let s = prefix[b] - prefix[a];
        (prefix_sq[b] - prefix_sq[a]) - s * s / k
    };
    let (best_k, _) = (1..n)
        .map(|k| (k, sse(0, k) + sse(k, n)))
        .min_by(|a, b| a.1.total_cmp(&b.1))?;
    let low = prefix[best_k] / best_k as f64;
    let high = (prefix[n] - prefix[best_k]) / (n - best_k) as f64;
    Some((low, high, best_k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_input_is_exact() {
        let v = vec![0.1; 1000];
        assert_eq!(mean_sd(&v), (0.1, 0.0));
    }

    #[test]
    fn sample_sd() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_sd(&[7.0]), (7.0, 0.0));
        assert!(mean_sd(&[]).0.is_nan());
    }

    #[test]
    fn two_means_splits_clusters() {
        let (lo, hi, k) = two_means(&[143.0, 117.0, 118.0, 144.0, 116.0]).unwrap();
        assert_eq!(k, 3);
        assert_eq!(lo, 117.0);
        assert_eq!(hi, 143.5);
        assert!(two_means(&[1.0]).is_none());
    }
}
