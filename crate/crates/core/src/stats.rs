//! Small statistics helpers: means, standard errors, rank correlation and
//! percentile bootstrap.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sample mean and standard error (`sd / sqrt(len)`). `None` for empty input.
pub fn mean_stderr(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, (var / n).sqrt()))
}

/// Ranks starting at 1, ties get their average rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    pearson(&ranks(x), &ranks(y))
}

/// Resamples every group with replacement and evaluates `statistic` on the
/// vector of resampled group means.
pub fn bootstrap_group_means<F>(groups: &[Vec<f64>], resamples: usize, seed: u64, statistic: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut means = vec![0.0; groups.len()];
    (0..resamples)
        .map(|_| {
            for (g, slot) in groups.iter().zip(means.iter_mut()) {
                let sum: f64 = (0..g.len()).map(|_| g[rng.random_range(0..g.len())]).sum();
                *slot = sum / g.len() as f64;
            }
            statistic(&means)
        })
        .collect()
}

/// Fraction of bootstrap replicates for which `predicate` holds.
pub fn bootstrap_support<F>(groups: &[Vec<f64>], resamples: usize, seed: u64, predicate: F) -> f64
where
    F: Fn(&[f64]) -> bool,
{
    let hits = bootstrap_group_means(groups, resamples, seed, |m| if predicate(m) { 1.0 } else { 0.0 });
    hits.iter().sum::<f64>() / resamples as f64
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}
