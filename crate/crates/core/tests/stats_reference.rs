//! Reference values frozen from scipy 1.15 (`shapiro`, `ttest_ind(equal_var=False,
//! alternative="greater")`, `wilcoxon(alternative="greater", method="exact")`).

use cpnn::stats::{protocol_compare, shapiro_wilk, welch_t_one_sided, wilcoxon_one_sided};
use proptest::prelude::*;

mod common;
use common::brute_force_wilcoxon;

const A: [f64; 10] = [0.912, 0.934, 0.921, 0.948, 0.905, 0.927, 0.931, 0.919, 0.940, 0.925];
const B: [f64; 10] = [0.901, 0.899, 0.915, 0.920, 0.890, 0.911, 0.908, 0.902, 0.917, 0.906];
const C: [f64; 10] = [0.95, 0.951, 0.949, 0.95, 0.952, 0.95, 0.70, 0.951, 0.95, 0.949];
const D: [f64; 5] = [0.1, 0.4, 0.2, 0.3, 0.5];
const E: [f64; 13] = [2.1, 3.4, 1.9, 5.6, 2.2, 2.8, 3.1, 9.7, 2.5, 3.3, 2.0, 4.4, 2.9];
const F: [f64; 3] = [1.0, 2.0, 4.0];

fn close(got: f64, want: f64, tol: f64) -> bool {
    (got - want).abs() <= tol * want.abs().max(1.0)
}

#[test]
fn shapiro_matches_reference() {
    // scipy computes in single precision
    let cases: [(&[f64], f64, f64); 6] = [
        (&A, 0.9954667573853889, 0.9998765773197558),
        (&B, 0.9757251994454015, 0.9382725073876109),
        (&C, 0.37648223253366964, 1.335139248886801e-07),
        (&D, 0.9867621552115592, 0.9671739349728593),
        (&E, 0.7188656705243295, 0.0008626067821176654),
        (&F, 0.9642857142857142, 0.6368868450289689),
    ];
    for (x, w, p) in cases {
        let r = shapiro_wilk(x).unwrap();
        assert!(close(r.w, w, 1e-5), "W {} vs {w} for {x:?}", r.w);
        assert!((r.p_value - p).abs() < 1e-5, "p {} vs {p} for {x:?}", r.p_value);
    }
}

#[test]
fn welch_matches_reference() {
    let cases: [(&[f64], &[f64], f64, f64); 4] = [
        (&A, &B, 3.8630057293614013, 0.0006654382792320201),
        (&B, &A, -3.8630057293614013, 0.999334561720768),
        (&A, &C, 0.03944664902721666, 0.48467659878377156),
        (&D, &F, -2.2982080222546686, 0.9266381609565064),
    ];
    for (a, b, t, p) in cases {
        let r = welch_t_one_sided(a, b).unwrap();
        assert!(close(r.statistic, t, 1e-10), "t {} vs {t}", r.statistic);
        assert!((r.p_value - p).abs() < 1e-8, "p {} vs {p}", r.p_value);
    }
}

#[test]
fn wilcoxon_matches_reference() {
    let cases: [(&[f64], &[f64], f64, f64); 4] = [
        (&A, &B, 55.0, 0.0009765625),
        (&B, &A, 0.0, 1.0),
        (&A, &C, 10.0, 0.9677734375),
        (&C, &A, 45.0, 0.0419921875),
    ];
    for (a, b, w, p) in cases {
        let r = wilcoxon_one_sided(a, b).unwrap();
        assert_eq!(r.statistic, w);
        assert!((r.p_value - p).abs() < 1e-15, "p {} vs {p}", r.p_value);
    }
}

fn paired(max_n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    // coarse grid so ties and zero differences actually occur
    (3..=max_n).prop_flat_map(|n| {
        (
            prop::collection::vec((0i32..8).prop_map(|v| v as f64 * 0.25), n),
            prop::collection::vec((0i32..8).prop_map(|v| v as f64 * 0.25), n),
        )
    })
}

fn samples(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn wilcoxon_matches_enumeration((a, b) in paired(12)) {
        let r = wilcoxon_one_sided(&a, &b).unwrap();
        let (w, p) = brute_force_wilcoxon(&a, &b);
        prop_assert!((r.statistic - w).abs() < 1e-9);
        prop_assert!((r.p_value - p).abs() < 1e-12, "{} vs {}", r.p_value, p);
    }

    #[test]
    fn welch_directions_are_complementary(a in samples(10), b in samples(10)) {
        let ab = welch_t_one_sided(&a, &b).unwrap().p_value;
        let ba = welch_t_one_sided(&b, &a).unwrap().p_value;
        prop_assert!((ab + ba - 1.0).abs() < 1e-10);
    }

    #[test]
    fn shapiro_w_in_unit_interval(x in samples(10)) {
        let r = shapiro_wilk(&x).unwrap();
        prop_assert!(r.w > 0.0 && r.w <= 1.0);
        prop_assert!((0.0..=1.0).contains(&r.p_value));
    }

    #[test]
    fn protocol_is_permutation_equivariant(
        runs in prop::collection::vec(samples(10), 3),
        shift in prop::collection::vec(0.0f64..3.0, 3),
        perm_idx in 0usize..6,
    ) {
        let runs: Vec<Vec<f64>> = runs.iter().zip(&shift).map(|(r, s)| r.iter().map(|v| v + s).collect()).collect();
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let perm = PERMS[perm_idx];
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| runs[i].clone()).collect();
        let base = protocol_compare(&runs, 0.05).unwrap();
        let moved = protocol_compare(&permuted, 0.05).unwrap();
        for (slot, &orig) in perm.iter().enumerate() {
            prop_assert_eq!(moved.flags[slot], base.flags[orig]);
        }
    }
}

#[test]
fn shapiro_w_falls_as_outlier_grows() {
    let base: Vec<f64> = (0..11).map(|i| (i as f64 * 0.7).sin()).collect();
    let mut last = f64::INFINITY;
    for k in 1..8 {
        let mut x = base.clone();
        x.push(2.0 * k as f64);
        let w = shapiro_wilk(&x).unwrap().w;
        assert!(w < last, "W did not decrease at k={k}: {w} >= {last}");
        last = w;
    }
}
