//! Rank statistics shared by the sampler diagnostics and the fitting code.

/// Mid-ranks (ties get their average rank), 1-based.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut indexed: Vec<(usize, f64)> = values.iter().copied().enumerate().collect();
    indexed.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < indexed.len() {
        let mut j = i;
        while j + 1 < indexed.len() && indexed[j + 1].1 == indexed[i].1 {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            out[indexed[k].0] = avg;
        }
        i = j + 1;
    }
    out
}

/// Sample Spearman rank correlation (Pearson correlation of mid-ranks).
/// Returns `None` on fewer than two pairs or degenerate marginals.
pub fn spearman_rho_hat(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    pearson(&ranks(x), &ranks(y))
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// One-sample Kolmogorov–Smirnov statistic against the uniform law on [0,1].
pub fn ks_statistic_uniform(sample: &[f64]) -> f64 {
    let mut sorted = sample.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let hi = (i + 1) as f64 / n - x;
        let lo = x - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Asymptotic Kolmogorov p-value P(D_n > d) ≈ 2 Σ (-1)^{k-1} exp(-2 k² n d²).
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let lambda = (n as f64).sqrt() * d;
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64).powi(2) * lambda * lambda).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_average_ties() {
        assert_eq!(ranks(&[10.0, 20.0, 20.0, 30.0]), vec![1.0, 2.5, 2.5, 4.0]);
    }

    #[test]
    fn spearman_of_monotone_map_is_one() {
        let x: Vec<f64> = (0..100).map(|i| i as f64 / 100.0).collect();
        let y: Vec<f64> = x.iter().map(|&v| v.powi(3) + 1.0).collect();
        assert!((spearman_rho_hat(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let y_rev: Vec<f64> = x.iter().map(|&v| -v).collect();
        assert!((spearman_rho_hat(&x, &y_rev).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_of_perfect_uniform_grid_is_small() {
        let n = 1000;
        let sample: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        let d = ks_statistic_uniform(&sample);
        assert!(d <= 0.5 / n as f64 + 1e-12);
        assert!(ks_pvalue(d, n) > 0.99);
    }

    #[test]
    fn ks_detects_non_uniform_sample() {
        let n = 1000;
        let sample: Vec<f64> = (0..n).map(|i| ((i as f64 + 0.5) / n as f64).powi(3)).collect();
        let d = ks_statistic_uniform(&sample);
        assert!(ks_pvalue(d, n) < 1e-6);
    }
}
