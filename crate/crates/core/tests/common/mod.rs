//! Oracles shared by the integration tests.

/// Exact one-sided Wilcoxon signed-rank test by enumerating every sign assignment. Zero
/// differences are dropped, tied magnitudes share their average rank. Returns `(W+, p)`.
pub fn brute_force_wilcoxon(a: &[f64], b: &[f64]) -> (f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return (0.0, 0.5);
    }
    let ranks: Vec<f64> = d
        .iter()
        .map(|v| {
            let below = d.iter().filter(|u| u.abs() < v.abs()).count() as f64;
            let equal = d.iter().filter(|u| u.abs() == v.abs()).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect();
    let observed: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let mut hits = 0u64;
    for mask in 0u32..(1 << n) {
        let s: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if s >= observed - 1e-9 {
            hits += 1;
        }
    }
    (observed, hits as f64 / (1u64 << n) as f64)
}
