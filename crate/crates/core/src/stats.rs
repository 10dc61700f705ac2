//! Pairwise significance protocol for comparing architectures across seeds.
//!
//! For every ordered pair, both samples are first checked for normality with Shapiro-Wilk. If
//! neither rejects, a one-sided Welch t-test is used, otherwise a one-sided Wilcoxon signed-rank
//! test on the seed-paired differences.

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapiroWilk {
    pub w: f64,
    pub p_value: f64,
}

fn poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

/// Shapiro-Wilk normality test, Royston's AS R94 algorithm.
///
/// Accepts `3 <= n <= 5000`. A constant sample is reported as `W = 1`, `p = 0` (non-normal).
pub fn shapiro_wilk(sample: &[f64]) -> Result<ShapiroWilk> {
    let n = sample.len();
    if !(3..=5000).contains(&n) {
        return Err(Error::Sample(format!("Shapiro-Wilk needs 3..=5000 values, got {n}")));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::Sample("non-finite value".into()));
    }
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let range = x[n - 1] - x[0];
    if range < 1e-19 * x[n - 1].abs().max(1.0) {
        return Ok(ShapiroWilk { w: 1.0, p_value: 0.0 });
    }

    let std_normal = Normal::standard();
    let half = n / 2;
    let an = n as f64;
    // coefficients a[0..half] for the lower half, all positive
    let mut a = vec![0.0; half];
    if n == 3 {
        a[0] = 0.5f64.sqrt();
    } else {
        let m: Vec<f64> = (1..=half)
            .map(|i| -std_normal.inverse_cdf((i as f64 - 0.375) / (an + 0.25)))
            .collect();
        let summ2 = 2.0 * m.iter().map(|v| v * v).sum::<f64>();
        let ssumm2 = summ2.sqrt();
        let rsn = 1.0 / an.sqrt();
        const C1: [f64; 6] = [0.0, 0.221157, -0.147981, -2.071190, 4.434685, -2.706056];
        const C2: [f64; 6] = [0.0, 0.042981, -0.293762, -1.752461, 5.682633, -3.582633];
        let a1 = poly(&C1, rsn) + m[0] / ssumm2;
        let (first_free, fac) = if n > 5 {
            let a2 = poly(&C2, rsn) + m[1] / ssumm2;
            a[1] = a2;
            let fac = ((summ2 - 2.0 * m[0] * m[0] - 2.0 * m[1] * m[1])
                / (1.0 - 2.0 * a1 * a1 - 2.0 * a2 * a2))
                .sqrt();
            (2, fac)
        } else {
            (1, ((summ2 - 2.0 * m[0] * m[0]) / (1.0 - 2.0 * a1 * a1)).sqrt())
        };
        a[0] = a1;
        for i in first_free..half {
            a[i] = m[i] / fac;
        }
    }

    let mean = x.iter().sum::<f64>() / an;
    let ssq: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    let num: f64 = (0..half).map(|i| a[i] * (x[n - 1 - i] - x[i])).sum();
    let w = (num * num / ssq).min(1.0);

    if n == 3 {
        let p = 6.0 / std::f64::consts::PI * (w.sqrt().asin() - std::f64::consts::PI / 3.0);
        return Ok(ShapiroWilk { w, p_value: p.clamp(0.0, 1.0) });
    }
    let mut y = (1.0 - w).ln();
    let (mu, sigma) = if n <= 11 {
        let gamma = poly(&[-2.273, 0.459], an);
        if y >= gamma {
            return Ok(ShapiroWilk { w, p_value: 1e-99 });
        }
        y = -(gamma - y).ln();
        (poly(&[0.5440, -0.39978, 0.025054, -6.714e-4], an), poly(&[1.3822, -0.77857, 0.062767, -0.0020322], an).exp())
    } else {
        let ln_n = an.ln();
        (poly(&[-1.5861, -0.31082, -0.083751, 0.0038915], ln_n), poly(&[-0.4803, -0.082676, 0.0030302], ln_n).exp())
    };
    let p_value = 1.0 - std_normal.cdf((y - mu) / sigma);
    Ok(ShapiroWilk { w, p_value })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// One-sided Welch t-test of `mean(a) > mean(b)`.
pub fn welch_t_one_sided(a: &[f64], b: &[f64]) -> Result<TestOutcome> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::Sample("Welch's test needs at least 2 values per sample".into()));
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        let p = if ma > mb { 0.0 } else { 1.0 };
        let t = if ma > mb { f64::INFINITY } else if ma < mb { f64::NEG_INFINITY } else { 0.0 };
        return Ok(TestOutcome { statistic: t, p_value: p });
    }
    let t = (ma - mb) / se2.sqrt();
    let df = se2 * se2
        / (sa * sa / (a.len() as f64 - 1.0) + sb * sb / (b.len() as f64 - 1.0));
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| Error::Sample(e.to_string()))?;
    Ok(TestOutcome { statistic: t, p_value: dist.sf(t) })
}

/// Ranks of `|d|` with ties averaged, doubled so every rank is an integer.
fn doubled_ranks(diffs: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..diffs.len()).collect();
    order.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0u64; diffs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && diffs[order[end + 1]].abs() == diffs[order[start]].abs() {
            end += 1;
        }
        // ranks start+1..=end+1, average doubled = start + end + 2
        for &idx in &order[start..=end] {
            ranks[idx] = (start + end + 2) as u64;
        }
        start = end + 1;
    }
    ranks
}

/// Largest number of non-zero differences accepted by the exact Wilcoxon test.
pub const WILCOXON_MAX_N: usize = 62;

/// One-sided Wilcoxon signed-rank test that the paired values `a` are shifted above `b`.
///
/// Zero differences are dropped and tied magnitudes share their average rank. The statistic is
/// the positive rank sum `W+`; the p-value is exact, `P(W+ >= observed)` over all `2^n` equally
/// likely sign assignments.
pub fn wilcoxon_one_sided(a: &[f64], b: &[f64]) -> Result<TestOutcome> {
    if a.len() != b.len() {
        return Err(Error::Sample("Wilcoxon needs paired samples of equal length".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if diffs.is_empty() {
        return Ok(TestOutcome { statistic: 0.0, p_value: 0.5 });
    }
    if diffs.len() > WILCOXON_MAX_N {
        return Err(Error::Sample(format!(
            "exact Wilcoxon supports at most {WILCOXON_MAX_N} non-zero differences"
        )));
    }
    let ranks = doubled_ranks(&diffs);
    let observed: u64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total: u64 = ranks.iter().sum();

    // counts[s] = number of sign assignments with doubled positive rank sum s
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in &ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let tail: u64 = counts[observed as usize..].iter().sum();
    let p_value = tail as f64 / (1u64 << diffs.len()) as f64;
    Ok(TestOutcome { statistic: observed as f64 / 2.0, p_value })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TestKind {
    Welch,
    Wilcoxon,
}

/// Outcome of testing whether architecture `better` outperforms `worse`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonResult {
    pub better: usize,
    pub worse: usize,
    pub normal_better: bool,
    pub normal_worse: bool,
    pub test: TestKind,
    pub p_value: f64,
    pub significant: bool,
}

/// Normality gate followed by the matching one-sided test of `a > b`.
pub fn compare_pair(a: &[f64], b: &[f64], alpha: f64) -> Result<(TestKind, f64)> {
    let normal_a = is_normal(a, alpha)?;
    let normal_b = is_normal(b, alpha)?;
    if normal_a && normal_b {
        Ok((TestKind::Welch, welch_t_one_sided(a, b)?.p_value))
    } else {
        Ok((TestKind::Wilcoxon, wilcoxon_one_sided(a, b)?.p_value))
    }
}

/// True when Shapiro-Wilk does not reject normality at `alpha`.
pub fn is_normal(sample: &[f64], alpha: f64) -> Result<bool> {
    Ok(shapiro_wilk(sample)?.p_value >= alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Flags {
    /// Significantly better than every other architecture.
    pub best: bool,
    /// Every other architecture is significantly better.
    pub worst: bool,
    /// Shapiro-Wilk rejected normality.
    pub non_normal: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub flags: Vec<Flags>,
    pub comparisons: Vec<ComparisonResult>,
}

/// Runs the protocol on per-seed accuracies of each architecture (paired by index).
pub fn protocol_compare(samples: &[Vec<f64>], alpha: f64) -> Result<ProtocolResult> {
    let k = samples.len();
    let Some(first) = samples.first() else {
        return Ok(ProtocolResult { flags: vec![], comparisons: vec![] });
    };
    if samples.iter().any(|s| s.len() != first.len()) {
        return Err(Error::Sample("all architectures need the same number of runs".into()));
    }
    let normal = samples.iter().map(|s| is_normal(s, alpha)).collect::<Result<Vec<bool>>>()?;
    let mut flags: Vec<Flags> = normal.iter().map(|&n| Flags { non_normal: !n, ..Flags::default() }).collect();
    if k < 2 {
        return Ok(ProtocolResult { flags, comparisons: vec![] });
    }
    let mut comparisons = Vec::with_capacity(k * (k - 1));
    let mut wins = vec![0usize; k];
    let mut losses = vec![0usize; k];
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let test = if normal[i] && normal[j] { TestKind::Welch } else { TestKind::Wilcoxon };
            let p_value = match test {
                TestKind::Welch => welch_t_one_sided(&samples[i], &samples[j])?.p_value,
                TestKind::Wilcoxon => wilcoxon_one_sided(&samples[i], &samples[j])?.p_value,
            };
            let significant = p_value < alpha;
            if significant {
                wins[i] += 1;
                losses[j] += 1;
            }
            comparisons.push(ComparisonResult {
                better: i,
                worse: j,
                normal_better: normal[i],
                normal_worse: normal[j],
                test,
                p_value,
                significant,
            });
        }
    }
    for (i, f) in flags.iter_mut().enumerate() {
        f.best = wins[i] == k - 1;
        f.worst = losses[i] == k - 1;
    }
    Ok(ProtocolResult { flags, comparisons })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shapiro_accepts_even_spacing() {
        let x: Vec<f64> = (1..=10).map(f64::from).collect();
        let r = shapiro_wilk(&x).unwrap();
        assert!(r.w > 0.95 && r.p_value > 0.05, "{r:?}");
    }

    #[test]
    fn shapiro_rejects_outlier() {
        let mut x: Vec<f64> = (0..9).map(|i| 0.001 * i as f64).collect();
        x.push(100.0);
        let r = shapiro_wilk(&x).unwrap();
        assert!(r.p_value < 0.05, "{r:?}");
    }

    #[test]
    fn shapiro_degenerate_and_bounds() {
        let r = shapiro_wilk(&[0.7; 10]).unwrap();
        assert_eq!(r.p_value, 0.0);
        assert!(shapiro_wilk(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn welch_symmetry_and_separation() {
        let a = [0.91, 0.93, 0.9, 0.95, 0.92];
        let r = welch_t_one_sided(&a, &a).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 0.5).abs() < 1e-12);

        let b: Vec<f64> = a.iter().map(|v| v - 10.0).collect();
        assert!(welch_t_one_sided(&a, &b).unwrap().p_value < 1e-6);

        let c = [1.0, 1.0];
        assert_eq!(welch_t_one_sided(&c, &[0.5, 0.5]).unwrap().p_value, 0.0);
        assert_eq!(welch_t_one_sided(&[0.5, 0.5], &c).unwrap().p_value, 1.0);
    }

    #[test]
    fn wilcoxon_exact_extremes() {
        let b: Vec<f64> = (0..10).map(|i| i as f64 * 0.01).collect();
        let a: Vec<f64> = b.iter().enumerate().map(|(i, v)| v + 0.1 + 0.01 * i as f64).collect();
        let r = wilcoxon_one_sided(&a, &b).unwrap();
        assert_eq!(r.statistic, 55.0);
        assert_eq!(r.p_value, 1.0 / 1024.0);

        let mut a2 = a.clone();
        a2[0] = b[0] - 0.05; // smallest magnitude, negative
        let r = wilcoxon_one_sided(&a2, &b).unwrap();
        assert_eq!(r.statistic, 54.0);
        assert_eq!(r.p_value, 2.0 / 1024.0);

        assert_eq!(wilcoxon_one_sided(&b, &b).unwrap().p_value, 0.5);
    }

    #[test]
    fn tied_ranks_are_averaged() {
        assert_eq!(doubled_ranks(&[0.1, -0.1, 0.3, 0.2]), vec![3, 3, 8, 6]);
    }

    #[test]
    fn protocol_flags() {
        let base = [0.90, 0.91, 0.89, 0.905, 0.895, 0.90, 0.91, 0.9, 0.902, 0.898];
        let same = vec![base.to_vec(); 3];
        let r = protocol_compare(&same, 0.05).unwrap();
        assert!(r.flags.iter().all(|f| !f.best && !f.worst));

        let mut dominated = same.clone();
        dominated[1] = base.iter().map(|v| v + 0.1).collect();
        let r = protocol_compare(&dominated, 0.05).unwrap();
        assert!(r.flags[1].best);
        assert!(!r.flags[0].best && !r.flags[2].best);
        assert_eq!(r.comparisons.len(), 6);
    }

    #[test]
    fn protocol_single_sample() {
        let r = protocol_compare(&[vec![0.1, 0.2, 0.3]], 0.05).unwrap();
        assert_eq!(r.flags.len(), 1);
        assert!(!r.flags[0].best && !r.flags[0].worst);
    }
}
