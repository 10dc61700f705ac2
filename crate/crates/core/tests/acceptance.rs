//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any criterion fails.
//!
//! The full-scale spot check takes hours and only runs with `CPNN_FULL_SCALE=1`.

use std::process::ExitCode;
use std::time::Instant;

use cpnn::io::{write_records, RunRecords};
use cpnn::prequential::{case_accuracy, run_stream, BatchRecord, Case};
use cpnn::rnn::{gradient_check, init_column};
use cpnn::seed::{generator_seed, model_seed, rng_from_seed};
use cpnn::stats::{protocol_compare, shapiro_wilk, welch_t_one_sided, wilcoxon_one_sided};
use cpnn::streamgen::{generate_concept, generate_scenario, label_agreement, label_runs, lag1_autocorrelation};
use cpnn::windowing::build_sequences;
use cpnn::{ClassificationFn, DriftScenario, Mode, ProgressiveNet, TrainConfig, WalkConfig};
use ndarray::Array2;
use rand::Rng;

mod common;

type Check = fn() -> Verdict;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn gradient_oracle() -> Verdict {
    let mut worst = 0.0f64;
    let mut configs = 0;
    for seed in 0..24u64 {
        let d = if seed < 12 { 2 } else { 5 };
        let mut rng = rng_from_seed(1000 + seed);
        let mut col = init_column(d, 3, &mut rng);
        col.bias.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        col.head_b.mapv_inplace(|_| rng.random_range(-0.5..0.5));
        let n = 1 + seed as usize % 3;
        let inputs: Vec<Array2<f64>> = (0..4)
            .map(|_| Array2::from_shape_simple_fn((n, d), || rng.random_range(-1.0..1.0)))
            .collect();
        let labels = Array2::from_shape_simple_fn((n, 4), || rng.random_range(0..2u8));
        worst = worst.max(gradient_check(&col, &inputs, &labels, 1e-5, 1e-6));
        configs += 1;
    }
    verdict(worst < 1e-4, format!("{configs} configs (H=3, W=4, D in {{2,5}}), max relative error {worst:.2e}"))
}

const FUNCS: [ClassificationFn; 4] =
    [ClassificationFn::S1_PLUS, ClassificationFn::S1_MINUS, ClassificationFn::S2_PLUS, ClassificationFn::S2_MINUS];

fn paper_scale_walk(func: ClassificationFn, root: u64) -> Vec<cpnn::LabeledPoint> {
    let cfg = WalkConfig::new(generator_seed(root, &func.to_string()));
    generate_concept(func, 50_000, &cfg, rng_from_seed(cfg.seed), None).expect("generation")
}

fn generator_properties() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for func in FUNCS {
        let points = paper_scale_walk(func, 1);
        let balance = points.iter().filter(|p| p.y == 1).count() as f64 / points.len() as f64;
        let runs = label_runs(&points);
        let longest = runs.iter().copied().max().unwrap_or(0);
        let short = runs.iter().filter(|&&r| r <= 5).count() as f64 / runs.len() as f64;
        let ac1 = lag1_autocorrelation(&points.iter().map(|p| p.x1).collect::<Vec<_>>());
        let ac2 = lag1_autocorrelation(&points.iter().map(|p| p.x2).collect::<Vec<_>>());
        ok &= (0.45..=0.55).contains(&balance) && longest <= 10 && short >= 0.5 && ac1 >= 0.9 && ac2 >= 0.9;
        parts.push(format!("{func}: bal {balance:.3} maxrun {longest} le5 {short:.3} ac {ac1:.3}/{ac2:.3}"));
    }
    verdict(ok, parts.join("; "))
}

fn label_agreement_check() -> Verdict {
    let points = paper_scale_walk(ClassificationFn::S1_PLUS, 1);
    let s2p = label_agreement(&points, ClassificationFn::S1_PLUS, ClassificationFn::S2_PLUS);
    let s2m = label_agreement(&points, ClassificationFn::S1_PLUS, ClassificationFn::S2_MINUS);
    let s1m = label_agreement(&points, ClassificationFn::S1_PLUS, ClassificationFn::S1_MINUS);
    let ok = (s2p - 0.65).abs() <= 0.05 && (s2m - 0.35).abs() <= 0.05 && s1m == 0.0;
    verdict(ok, format!("S1+ vs S2+ {s2p:.4}, S1+ vs S2- {s2m:.4}, S1+ vs S1- {s1m}"))
}

fn structural_invariants() -> Verdict {
    let mut failures = Vec::new();
    let walk = WalkConfig::new(7);
    let batch = generate_concept(ClassificationFn::S1_PLUS, 128, &walk, rng_from_seed(7), None).expect("generation");
    let sb = build_sequences(batch, 10).expect("full batch");
    if sb.n_sequences() != 119 {
        failures.push(format!("{} sequences per full batch", sb.n_sequences()));
    }
    if (9..=118).any(|t| sb.membership(t).count() != 10) {
        failures.push("interior point outside exactly 10 sequences".into());
    }

    let scenario = DriftScenario::parse("s1+,s2-,s1-,s2+", 640).expect("scenario");
    let stream = generate_scenario(&scenario, &WalkConfig::new(11)).expect("generation");
    let cfg = TrainConfig::default();
    for mode in Mode::ALL {
        let mut net = ProgressiveNet::new(mode, 8, rng_from_seed(3));
        let first_concept: Vec<_> = stream.iter().copied().filter(|p| p.concept == 0).collect();
        run_stream(&mut net, first_concept, &cfg).expect("run");
        let after_first = net.columns()[0].clone();
        let mut net2 = ProgressiveNet::new(mode, 8, rng_from_seed(3));
        run_stream(&mut net2, stream.clone(), &cfg).expect("run");
        let expected = if mode == Mode::Clstm { 1 } else { 4 };
        if net2.num_columns() != expected {
            failures.push(format!("{mode} ended with {} columns", net2.num_columns()));
        }
        if mode != Mode::Clstm {
            // the first column stops changing once the first drift freezes it
            let frozen = &net2.columns()[0];
            let bits = |c: &cpnn::LstmColumn| c.flat_params().iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
            if bits(frozen) != bits(&after_first) || !frozen.frozen {
                failures.push(format!("{mode} first column changed after freezing"));
            }
        }
    }
    verdict(failures.is_empty(), if failures.is_empty() { "119 sequences, membership 10, freezing and growth rules hold".into() } else { failures.join("; ") })
}

/// Records of every mode on the shared stream of `seed`.
fn run_modes(spec: &str, ppc: usize, seed: u64) -> Vec<(Mode, Vec<BatchRecord>)> {
    let scenario = DriftScenario::parse(spec, ppc).expect("scenario");
    let stream = generate_scenario(&scenario, &WalkConfig::new(generator_seed(seed, &scenario.spec()))).expect("generation");
    Mode::ALL
        .iter()
        .map(|&mode| {
            let mut net = ProgressiveNet::new(mode, 50, rng_from_seed(model_seed(seed, mode.as_str())));
            (mode, run_stream(&mut net, stream.iter().copied(), &TrainConfig::default()).expect("run"))
        })
        .collect()
}

struct Study {
    /// per mode, per seed: concept-2 [1,50] accuracy
    first50: Vec<Vec<f64>>,
    /// per seed: cLSTM accuracy on the first batch after the drift
    clstm_first_batch: Vec<f64>,
}

fn study(ppc: usize, seeds: std::ops::RangeInclusive<u64>) -> Study {
    let mut first50 = vec![Vec::new(); Mode::ALL.len()];
    let mut clstm_first_batch = Vec::new();
    for seed in seeds {
        for (i, (mode, records)) in run_modes("s1+,s1-", ppc, seed).into_iter().enumerate() {
            first50[i].push(case_accuracy(&records, 1, Case::First50).expect("concept 2 present"));
            if mode == Mode::Clstm {
                let first = records.iter().find(|r| r.concept == 1 && r.batch_index == 1).expect("first batch");
                clstm_first_batch.push(first.accuracy);
            }
        }
    }
    Study { first50, clstm_first_batch }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn ordering_detail(s: &Study) -> (bool, String) {
    let means: Vec<f64> = s.first50.iter().map(|v| mean(v)).collect();
    let collapse = mean(&s.clstm_first_batch);
    let ok = means[0] > means[1] && means[0] > means[2] && collapse < 0.5;
    let detail = format!(
        "concept 2 [1,50]: cPNN {:.3}, cLSTM {:.3}, mcLSTM {:.3}; cLSTM first post-drift batch {:.3}",
        means[0], means[1], means[2], collapse
    );
    (ok, detail)
}

fn desk_scale_ordering() -> Verdict {
    let s = study(12_800, 1..=5);
    let (ok, detail) = ordering_detail(&s);
    verdict(ok, format!("5 seeds, {detail}"))
}

fn full_scale_spot_check() -> Verdict {
    if std::env::var("CPNN_FULL_SCALE").as_deref() != Ok("1") {
        return Verdict::Skip("hours-scale; set CPNN_FULL_SCALE=1 to run".into());
    }
    let s = study(50_000, 1..=10);
    let (ordered, detail) = ordering_detail(&s);
    let cpnn_mean = mean(&s.first50[0]);
    let best = protocol_compare(&s.first50, 0.05).map(|r| r.flags[0].best).unwrap_or(false);
    let ok = ordered && (0.90..=0.99).contains(&cpnn_mean) && best;
    verdict(ok, format!("10 seeds, {detail}; cPNN flagged best: {best}"))
}

fn stats_correctness() -> Verdict {
    let mut rng = rng_from_seed(77);
    let mut mismatches = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=12usize);
        let grid = |rng: &mut rand_chacha::ChaCha8Rng| f64::from(rng.random_range(0..6u8)) * 0.1;
        let a: Vec<f64> = (0..n).map(|_| grid(&mut rng)).collect();
        let b: Vec<f64> = (0..n).map(|_| grid(&mut rng)).collect();
        let got = wilcoxon_one_sided(&a, &b).expect("wilcoxon");
        let (w, p) = common::brute_force_wilcoxon(&a, &b);
        if (got.p_value - p).abs() > 1e-12 || (got.statistic - w).abs() > 1e-9 {
            mismatches += 1;
        }
    }
    let mut worst_welch = 0.0f64;
    for _ in 0..100 {
        let a: Vec<f64> = (0..10).map(|_| rng.random_range(0.8..1.0)).collect();
        let b: Vec<f64> = (0..10).map(|_| rng.random_range(0.8..1.0)).collect();
        let ab = welch_t_one_sided(&a, &b).expect("welch").p_value;
        let ba = welch_t_one_sided(&b, &a).expect("welch").p_value;
        worst_welch = worst_welch.max((ab + ba - 1.0).abs());
    }
    let spaced: Vec<f64> = (1..=10).map(f64::from).collect();
    let mut outlier = vec![0.90, 0.91, 0.905, 0.895, 0.9, 0.902, 0.898, 0.901, 0.899];
    outlier.push(0.2);
    let p_spaced = shapiro_wilk(&spaced).expect("shapiro").p_value;
    let p_outlier = shapiro_wilk(&outlier).expect("shapiro").p_value;
    let ok = mismatches == 0 && worst_welch < 1e-10 && p_spaced >= 0.05 && p_outlier < 0.05;
    verdict(
        ok,
        format!(
            "Wilcoxon mismatches {mismatches}/100, Welch |p+p-1| max {worst_welch:.1e}, Shapiro p spaced {p_spaced:.3} outlier {p_outlier:.1e}"
        ),
    )
}

fn record_bytes(seed: u64, mode: Mode, records: Vec<BatchRecord>) -> Vec<u8> {
    let run = RunRecords { seed, mode, scenario: "s1+,s2-".into(), records };
    let mut buf = Vec::new();
    write_records(&mut buf, &[("seed".into(), seed.to_string())], &run).expect("write");
    buf
}

fn determinism() -> Verdict {
    let first = run_modes("s1+,s2-", 640, 9);
    let second = run_modes("s1+,s2-", 640, 9);
    let identical = first
        .into_iter()
        .zip(second)
        .all(|((m1, r1), (m2, r2))| m1 == m2 && record_bytes(9, m1, r1) == record_bytes(9, m2, r2));
    verdict(identical, "three modes, two executions, byte-identical record CSVs".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 8] = [
        ("1 gradient oracle", gradient_oracle),
        ("2 generator properties", generator_properties),
        ("3 label agreement", label_agreement_check),
        ("4 structural invariants", structural_invariants),
        ("5 desk-scale ordering", desk_scale_ordering),
        ("6 full-scale spot check", full_scale_spot_check),
        ("7 stats correctness", stats_correctness),
        ("8 determinism", determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !only.is_empty() && !only.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let v = check();
        let secs = start.elapsed().as_secs_f64();
        match v {
            Verdict::Pass(d) => println!("PASS criterion {name}: {d} ({secs:.1}s)"),
            Verdict::Fail(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d} ({secs:.1}s)");
            }
            Verdict::Skip(d) => println!("SKIP criterion {name}: {d}"),
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
