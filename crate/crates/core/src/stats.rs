//! Small descriptive-statistics helpers.

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Two-pass sample variance with divisor `n - 1`.
pub fn sample_var(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    xs.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / (n - 1) as f64
}

pub fn sample_std(xs: &[f64]) -> f64 {
    sample_var(xs).sqrt()
}

/// Sample standard deviation over `sqrt(n)`: the standard error of a mean
/// of per-unit influence terms.
pub fn std_error(xs: &[f64]) -> f64 {
    sample_std(xs) / (xs.len() as f64).sqrt()
}

/// The 1-based rank `ceil(tau * n)`, clamped to `[1, n]`.
///
/// Products that land within rounding distance of an integer are snapped
/// to it, so `0.3 * 100` is rank 30 rather than 31.
pub fn rank(tau: f64, n: usize) -> usize {
    let x = tau * n as f64;
    let r = x.round();
    let k = if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    };
    if k < 1.0 {
        1
    } else if k > n as f64 {
        n
    } else {
        k as usize
    }
}

/// The `k`-th smallest value (1-based) by selection; `xs` is reordered.
pub fn select_kth(xs: &mut [f64], k: usize) -> f64 {
    debug_assert!(k >= 1 && k <= xs.len());
    let (_, v, _) = xs.select_nth_unstable_by(k - 1, f64::total_cmp);
    *v
}

/// Sorted copy of `xs` under the IEEE total order.
pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}
