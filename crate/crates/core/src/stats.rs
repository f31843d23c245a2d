//! Small descriptive statistics shared by the pipeline and its reports.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

fn std_normal() -> Normal {
    Normal::standard()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Standard normal quantile function. `p` must lie in (0, 1).
///
/// The library inverse is only good to about 1e-10, so two Newton steps on
/// the CDF polish it to near machine precision.
pub fn normal_quantile(p: f64) -> f64 {
    let n = std_normal();
    let mut x = n.inverse_cdf(p);
    for _ in 0..2 {
        let density = n.pdf(x);
        if !x.is_finite() || density <= 0.0 {
            break;
        }
        x -= (n.cdf(x) - p) / density;
    }
    x
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population standard deviation.
pub fn std_dev(xs: &[f64]) -> f64 {
    let m = mean(xs);
    (xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64).sqrt()
}

/// Sample skewness (third standardized moment).
pub fn skewness(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let n = xs.len() as f64;
    let m2 = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n;
    let m3 = xs.iter().map(|x| (x - m).powi(3)).sum::<f64>() / n;
    if m2 == 0.0 {
        return 0.0;
    }
    m3 / m2.powf(1.5)
}

/// Ranks starting at 1, ties receive their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let ma = mean(a);
    let mb = mean(b);
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spearman: length mismatch");
    pearson(&average_ranks(a), &average_ranks(b))
}

/// Kolmogorov–Smirnov distance between the empirical distribution of `xs`
/// and uniform(0, 1).
pub fn ks_uniform(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = x.clamp(0.0, 1.0);
            let lo = i as f64 / n;
            let hi = (i + 1) as f64 / n;
            (f - lo).abs().max((hi - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Anderson–Darling A² of `xs` against the standard normal after
/// standardizing by the sample mean and standard deviation.
pub fn anderson_darling_normal(xs: &[f64]) -> f64 {
    let n = xs.len();
    let m = mean(xs);
    let s = std_dev(xs);
    if n < 2 || s == 0.0 {
        return f64::INFINITY;
    }
    let mut z: Vec<f64> = xs.iter().map(|x| (x - m) / s).collect();
    z.sort_by(f64::total_cmp);
    let nf = n as f64;
    let tiny = 1e-300;
    let mut acc = 0.0;
    for i in 0..n {
        let lo = normal_cdf(z[i]).max(tiny);
        let hi = (1.0 - normal_cdf(z[n - 1 - i])).max(tiny);
        acc += (2 * i + 1) as f64 * (lo.ln() + hi.ln());
    }
    -nf - acc / nf
}
