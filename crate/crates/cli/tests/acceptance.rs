//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Lines prefixed `info` are context, not verdicts.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::{Duration, Instant};

use ema_core::grad::transpose_rows;
use ema_core::heterogeneity::one_hot;
use ema_core::normality::{anderson_darling_statistic, TestKind};
use ema_core::{
    aggregate_ema, aggregate_krum, aggregate_mean, aggregate_median, aggregate_trimmed_mean, anderson_darling,
    detect_non_iid, estimated_mean, estimator_weight, evaluate_model_on_client, pretest_round, quartiles_with,
    shapiro_wilk, AggregationRuleConfig, ClientLossRecord, ClientUpdate, CoordinateSample, GradientVector, Predictor,
    QuartileRule, RuleKind, SortedSample, Verdict,
};
use ema_sim::{run_simulation, AttackKind, AttackSpec, SimConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal, StandardNormal, Uniform};
use serde::Deserialize;

struct Report {
    passed: bool,
    detail: String,
    info: Vec<String>,
}

impl Report {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
            info: Vec::new(),
        }
    }

    fn with_info(mut self, line: impl Into<String>) -> Self {
        self.info.push(line.into());
        self
    }
}

fn sorted(values: Vec<f64>) -> SortedSample {
    SortedSample::from_unsorted(values).unwrap()
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn insertion_sort(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            j -= 1;
        }
    }
    v
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn one_coordinate(values: &[f64]) -> Vec<CoordinateSample> {
    vec![CoordinateSample::new(0, values.to_vec()).unwrap()]
}

fn grand_mean_bias(mu: f64, sigma: f64, reps: usize, seed: u64, rule: QuartileRule) -> f64 {
    let normal = Normal::new(mu, sigma).unwrap();
    let mut r = rng(seed);
    let w = estimator_weight(50).unwrap();
    let total: f64 = (0..reps)
        .map(|_| {
            let s = sorted((0..50).map(|_| normal.sample(&mut r)).collect());
            estimated_mean(&quartiles_with(&s, rule).unwrap(), w)
        })
        .sum();
    total / reps as f64 - mu
}

fn criterion_1() -> Report {
    let start = Instant::now();
    let (n, reps, c): (f64, f64, f64) = (50.0, 10_000.0, 3.0);
    let mut ok = true;
    let mut parts = Vec::new();
    let mut symmetric = Vec::new();
    for (i, (mu, sigma)) in [(0.0, 1.0), (5.0, 2.0), (-3.0, 0.5)].into_iter().enumerate() {
        let tol = 4.0 * sigma * (1.0 / (n * reps)).sqrt() * c;
        let bias = grand_mean_bias(mu, sigma, reps as usize, 100 + i as u64, QuartileRule::FloorIndex);
        ok &= bias.abs() < tol;
        parts.push(format!("({mu},{sigma}): |bias| {:.4} vs tol {:.4}", bias.abs(), tol));
        let sym = grand_mean_bias(mu, sigma, reps as usize, 100 + i as u64, QuartileRule::SymmetricRank);
        symmetric.push(format!(
            "({mu},{sigma}): |bias| {:.4} {}",
            sym.abs(),
            if sym.abs() < tol { "ok" } else { "over" }
        ));
    }
    let elapsed = start.elapsed();
    // Elapsed covers both rules; the criterion's own runtime is about half.
    ok &= elapsed < Duration::from_secs(10);
    Report::new(ok, format!("default quartile index rule: {}; {:.2?}", parts.join(", "), elapsed))
        .with_info(format!("symmetric-rank quartiles: {}", symmetric.join(", ")))
        .with_info("the index rule q3 = x[3*floor(n/4)-1] sits lower than q1's mirror, biasing the estimate by about -0.063 sigma at n=50")
}

fn criterion_2() -> Report {
    let worst = (400..=100_000)
        .map(|n| estimator_weight(n).unwrap().get() - 0.70)
        .fold(f64::NEG_INFINITY, f64::max);
    let at_50 = estimator_weight(50).unwrap().get();
    let ok = worst < 1e-3 && (at_50 - 0.7078).abs() < 1e-12;
    Report::new(
        ok,
        format!("max w(n)-0.70 over n in [400, 100000] = {worst:.6}; w(50) = {at_50}"),
    )
}

fn criterion_3() -> Report {
    let mut r = rng(3);
    let mut median_ok = 0;
    let mut trimmed_ok = 0;
    let mut ema_worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = r.random_range(1..=200);
        let values: Vec<f64> = (0..n).map(|_| r.random_range(-50.0..50.0)).collect();
        let sorted_values = insertion_sort(&values);
        let got = aggregate_median(&one_coordinate(&values))
            .unwrap()
            .global_update
            .values()[0];
        median_ok += usize::from(got == median_of_sorted(&sorted_values));

        let beta: f64 = r.random_range(0.0..0.45);
        let cut = (beta * n as f64 - 1e-9 * (beta * n as f64).max(1.0)).ceil().max(0.0) as usize;
        let kept: &[f64] = if 2 * cut >= n {
            &[]
        } else {
            &sorted_values[cut..n - cut]
        };
        let got = aggregate_trimmed_mean(&one_coordinate(&values), beta);
        trimmed_ok += usize::from(match got {
            Ok(out) if !kept.is_empty() => {
                out.global_update.values()[0] == kept.iter().sum::<f64>() / kept.len() as f64
            }
            Err(_) => kept.is_empty(),
            Ok(_) => false,
        });

        let k = r.random_range(0.1..3.0);
        let got = aggregate_ema(&one_coordinate(&values), k)
            .unwrap()
            .global_update
            .values()[0];
        ema_worst = ema_worst.max((got - ema_straight_line(&values, k)).abs());
    }
    let ok = median_ok == 1000 && trimmed_ok == 1000 && ema_worst <= 1e-12;
    Report::new(
        ok,
        format!("median exact {median_ok}/1000, trimmed mean exact {trimmed_ok}/1000, EMA max |diff| {ema_worst:e}"),
    )
}

/// Trim to the IQR fences, then the three-point estimate on what is left.
fn ema_straight_line(values: &[f64], k: f64) -> f64 {
    let sg = insertion_sort(values);
    let len = sg.len();
    let m = median_of_sorted(&sg);
    if len < 4 {
        return m;
    }
    let quar1 = len / 4;
    let quar3 = quar1 * 3;
    let iqr = sg[quar3 - 1] - sg[quar1 - 1];
    let lower = sg[quar1 - 1] - k * iqr;
    let upper = sg[quar3 - 1] + k * iqr;
    let kept: Vec<f64> = sg.iter().copied().filter(|g| *g >= lower && *g <= upper).collect();
    if kept.len() < 4 {
        return m;
    }
    let quar1 = kept.len() / 4;
    let quar3 = quar1 * 3;
    let w = 0.70 + 0.39 / len as f64;
    w * (kept[quar1 - 1] + kept[quar3 - 1]) / 2.0 + (1.0 - w) * m
}

fn breakdown_rows(seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..50)
        .map(|client| {
            (0..100)
                .map(|_| {
                    if client < 10 {
                        if r.random::<bool>() {
                            1e6
                        } else {
                            -1e6
                        }
                    } else {
                        r.sample::<f64, _>(StandardNormal)
                    }
                })
                .collect()
        })
        .collect()
}

fn criterion_4() -> Report {
    let start = Instant::now();
    let samples = transpose_rows(&breakdown_rows(4));
    let ema = aggregate_ema(&samples, 1.5).unwrap();
    let mean = aggregate_mean(&samples).unwrap();
    let elapsed = start.elapsed();
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let (e, m) = (
        max_abs(ema.global_update.values()),
        max_abs(mean.global_update.values()),
    );
    let again = aggregate_ema(&transpose_rows(&breakdown_rows(4)), 1.5).unwrap();
    let deterministic = again.global_update == ema.global_update;
    let ok = e < 5.0 && m > 1e5 && deterministic && elapsed < Duration::from_secs(1);
    Report::new(
        ok,
        format!("EMA max|coord| {e:.3}, mean max|coord| {m:.3e}, repeatable {deterministic}, {elapsed:.2?}"),
    )
}

fn updates(rows: &[Vec<f64>]) -> Vec<ClientUpdate> {
    rows.iter()
        .enumerate()
        .map(|(i, r)| ClientUpdate::new(i as u32, 0, GradientVector::from_flat(r.clone()).unwrap(), b"t"))
        .collect()
}

fn brute_force_krum(rows: &[Vec<f64>], f: usize) -> usize {
    let n = rows.len();
    let scores: Vec<f64> = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect();
            d = insertion_sort(&d);
            d[..n - f - 2].iter().sum()
        })
        .collect();
    let mut best = 0;
    for i in 1..n {
        if scores[i] < scores[best] {
            best = i;
        }
    }
    best
}

fn criterion_5() -> Report {
    let fixture: Vec<Vec<f64>> = [0.0, 0.1, 0.2, 10.0].iter().map(|&v| vec![v]).collect();
    let picked = aggregate_krum(&updates(&fixture), 1)
        .unwrap()
        .diagnostics
        .selected_client;
    let oracle = brute_force_krum(&fixture, 1);
    let mut r = rng(5);
    let mut outlier_picked = 0;
    let mut disagreements = 0;
    for _ in 0..100 {
        let mut rows: Vec<Vec<f64>> = (0..10)
            .map(|_| (0..5).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let planted = r.random_range(0..10);
        rows[planted] = rows[planted].iter().map(|v| v + 100.0).collect();
        let pick = aggregate_krum(&updates(&rows), 1)
            .unwrap()
            .diagnostics
            .selected_client
            .unwrap() as usize;
        outlier_picked += usize::from(pick == planted);
        disagreements += usize::from(pick != brute_force_krum(&rows, 1));
    }
    let ok = picked == Some(0) && oracle == 0 && outlier_picked == 0 && disagreements == 0;
    Report::new(
        ok,
        format!("fixture pick {picked:?} (brute force {oracle}); outlier selected {outlier_picked}/100; oracle disagreements {disagreements}"),
    )
}

#[derive(Deserialize)]
struct Golden {
    cases: Vec<GoldenCase>,
}

#[derive(Deserialize)]
struct GoldenCase {
    values: Vec<f64>,
    sw_w: f64,
    sw_p: f64,
    ad_a2: Option<f64>,
}

fn pass_rate(seed: u64, dist: &dyn Fn(&mut ChaCha8Rng) -> f64, test: &dyn Fn(&SortedSample) -> bool) -> f64 {
    let mut r = rng(seed);
    let passes = (0..2000)
        .filter(|_| test(&sorted((0..50).map(|_| dist(&mut r)).collect())))
        .count();
    passes as f64 / 2000.0
}

fn criterion_6() -> Report {
    let start = Instant::now();
    let normal = Normal::new(0.0, 1.0).unwrap();
    let exp = Exp::new(1.0).unwrap();
    let sw = pass_rate(61, &|r| normal.sample(r), &|s| shapiro_wilk(s, 0.05).unwrap().is_normal);
    let ad = pass_rate(62, &|r| normal.sample(r), &|s| {
        anderson_darling(s, 0.05).unwrap().is_normal
    });
    let exp_reject = 1.0
        - pass_rate(63, &|r| exp.sample(r), &|s| {
            anderson_darling(s, 0.05).unwrap().is_normal
        });

    let golden: Golden = serde_json::from_str(include_str!("../../core/tests/fixtures/normality_golden.json")).unwrap();
    let mut worst: f64 = 0.0;
    for case in &golden.cases {
        let s = sorted(case.values.clone());
        let r = shapiro_wilk(&s, 0.05).unwrap();
        worst = worst
            .max((r.statistic - case.sw_w).abs())
            .max((r.p_value.unwrap() - case.sw_p).abs());
        if let Some(a2) = case.ad_a2 {
            worst = worst.max((anderson_darling_statistic(&s).unwrap() - a2).abs());
        }
    }
    let elapsed = start.elapsed();
    let band = 0.93..=0.97;
    let ok = band.contains(&sw)
        && band.contains(&ad)
        && exp_reject >= 0.8
        && worst < 1e-4
        && elapsed < Duration::from_secs(30);
    Report::new(
        ok,
        format!(
            "SW pass {sw:.4}, AD pass {ad:.4}, exponential AD rejection {exp_reject:.4}, golden max |diff| {worst:.1e} over {} cases, {elapsed:.2?}",
            golden.cases.len()
        ),
    )
}

fn criterion_7() -> Report {
    let mut r = rng(7);
    let unif = Uniform::new(0.0, 1.0).unwrap();
    let dim = 5000;
    let gauss_rows: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..dim).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let unif_rows: Vec<Vec<f64>> = (0..50)
        .map(|_| (0..dim).map(|_| unif.sample(&mut r)).collect())
        .collect();
    let gauss = transpose_rows(&gauss_rows);
    let uniform = transpose_rows(&unif_rows);
    let mut mixture = gauss[..dim * 4 / 5].to_vec();
    mixture.extend_from_slice(&uniform[..dim / 5]);

    let mut ok = true;
    let mut parts = Vec::new();
    for kind in [TestKind::ShapiroWilk, TestKind::AndersonDarling, TestKind::Both] {
        let reports = [&gauss, &uniform, &mixture].map(|s| pretest_round(s, 0.05, kind).unwrap());
        let totals_ok = reports.iter().all(|p| p.passed + p.failed + p.error_count == p.total);
        let [g, u, m] = reports.map(|p| p.rate);
        ok &= u < m && m < g && totals_ok;
        parts.push(format!(
            "{}: uniform {u:.4} < mixture {m:.4} < gaussian {g:.4}, totals {totals_ok}",
            kind.short_name()
        ));
    }
    Report::new(ok, parts.join("; "))
}

fn losses(values: &[f64]) -> Vec<ClientLossRecord> {
    values
        .iter()
        .enumerate()
        .map(|(i, &l)| ClientLossRecord::new(i as u32, l).unwrap())
        .collect()
}

fn criterion_8() -> Report {
    let report = detect_non_iid(&losses(&[2.4, 1.4]), 0.25).unwrap();
    let expected = 0.5 / 1.9;
    let cv = report.cv.unwrap();
    let anchor = (cv - expected).abs() < 1e-12 && report.verdict == Verdict::LikelyNonIid;
    let equal = detect_non_iid(&losses(&[0.7; 6]), 0.25).unwrap().verdict == Verdict::LikelyIid;
    let base = [2.4, 1.4, 1.9, 3.3, 0.8];
    let reference = detect_non_iid(&losses(&base), 0.25).unwrap();
    let scale_ok = [0.01, 1.0, 100.0].iter().all(|c| {
        let scaled: Vec<f64> = base.iter().map(|v| v * c).collect();
        let r = detect_non_iid(&losses(&scaled), 0.25).unwrap();
        (r.cv.unwrap() - reference.cv.unwrap()).abs() < 1e-12 * reference.cv.unwrap() && r.verdict == reference.verdict
    });
    Report::new(
        anchor && equal && scale_ok,
        format!(
            "cv {cv:.6} (expected {expected:.6}) -> {:?}; all-equal iid {equal}; scale invariant {scale_ok}",
            report.verdict
        ),
    )
}

fn final_accuracy(rule: AggregationRuleConfig, attack: AttackSpec, seeds: &[u64]) -> f64 {
    let total: f64 = seeds
        .iter()
        .map(|&seed| {
            let cfg = SimConfig {
                seed,
                rule: rule.clone(),
                attack,
                ..SimConfig::default()
            };
            run_simulation(&cfg).unwrap().last().unwrap().test_accuracy
        })
        .sum();
    total / seeds.len() as f64
}

fn criterion_9() -> Report {
    let start = Instant::now();
    let seeds = [0, 1, 2, 3, 4];
    let rule = AggregationRuleConfig::for_rule;
    let clean = AttackSpec::new(0.0, AttackKind::None);
    let flip = |f| AttackSpec::new(f, AttackKind::SignFlip);

    let ema_clean = final_accuracy(rule(RuleKind::Ema), clean, &seeds);
    let mean_clean = final_accuracy(rule(RuleKind::Mean), clean, &seeds);
    let a = (ema_clean - mean_clean).abs() <= 0.02;

    let ema_20 = final_accuracy(rule(RuleKind::Ema), flip(0.2), &seeds);
    let mean_20 = final_accuracy(rule(RuleKind::Mean), flip(0.2), &seeds);
    let mut trimmed = rule(RuleKind::TrimmedMean);
    trimmed.trim_fraction = 0.2;
    let trimmed_20 = final_accuracy(trimmed, flip(0.2), &seeds);
    let b_margin = ema_20 >= mean_20 + 0.10;
    let b_trimmed = (ema_20 - trimmed_20).abs() <= 0.05;

    let curve: Vec<f64> = [0.0, 0.1, 0.2, 0.3, 0.4]
        .iter()
        .map(|&f| final_accuracy(rule(RuleKind::Ema), flip(f), &seeds))
        .collect();
    let c = curve.windows(2).all(|w| w[1] <= w[0]);
    let elapsed = start.elapsed();

    let scaled = AttackSpec::new(0.2, AttackKind::ScaleUp { factor: -10.0 });
    let ema_scaled = final_accuracy(rule(RuleKind::Ema), scaled, &seeds);
    let mean_scaled = final_accuracy(rule(RuleKind::Mean), scaled, &seeds);

    let ok = a && b_margin && b_trimmed && c && elapsed < Duration::from_secs(300);
    Report::new(
        ok,
        format!(
            "(a) clean EMA {ema_clean:.4} vs Mean {mean_clean:.4}: {}; (b) sign-flip 20% EMA {ema_20:.4}, Mean {mean_20:.4}, TrimmedMean {trimmed_20:.4}: margin>=0.10 {}, |EMA-TM|<=0.05 {}; (c) EMA by fraction {:?}: non-increasing {}; {elapsed:.1?}",
            verdict(a),
            verdict(b_margin),
            verdict(b_trimmed),
            curve.iter().map(|v| format!("{v:.4}")).collect::<Vec<_>>(),
            verdict(c),
        ),
    )
    .with_info("sign-flip sends -g, so with 20% attackers the mean still moves along 0.6*g and the blob task saturates for every rule; the 0.10 margin cannot open")
    .with_info(format!("scaled sign-flip (factor -10) at 20%: EMA {ema_scaled:.4}, Mean {mean_scaled:.4}"))
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "not met"
    }
}

const DETERMINISM_CONFIG: &str = r#"
rounds = 10
seed = 11

[attack]
fraction = 0.2
kind = "gaussian_noise"
sigma = 1.0

[rule]
rule = "ema"
"#;

fn criterion_10() -> Report {
    let bin = env!("CARGO_BIN_EXE_ema");
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(&config, DETERMINISM_CONFIG).unwrap();
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let status = Command::new(bin)
            .arg("simulate")
            .arg("--config")
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .args(extra)
            .output()
            .unwrap()
            .status;
        assert!(status.success(), "simulate exited with {status}");
        std::fs::read(out.join("metrics.csv")).unwrap()
    };
    let a = run("a", &[]);
    let b = run("b", &[]);
    let c = run("c", &["--set", "seed=12"]);
    let ok = a == b && a != c;
    Report::new(
        ok,
        format!(
            "identical configs byte-identical: {}; seed change alters CSV: {}",
            a == b,
            a != c
        ),
    )
}

struct Fixed {
    input: usize,
    outputs: Vec<Vec<f64>>,
}

impl Predictor for Fixed {
    fn input_dim(&self) -> usize {
        self.input
    }

    fn output_dim(&self) -> usize {
        self.outputs[0].len()
    }

    /// Looks up the row whose first feature holds its index.
    fn predict(&self, features: &[f64]) -> Vec<f64> {
        self.outputs[features[0] as usize].clone()
    }
}

fn criterion_11() -> Report {
    let labels = [2usize, 0, 1, 1, 2, 0, 2];
    let c = 3;
    let features: Vec<Vec<f64>> = (0..labels.len()).map(|i| vec![i as f64, 0.5]).collect();
    let targets = one_hot(&labels, c).unwrap();
    let perfect = Fixed {
        input: 2,
        outputs: targets.clone(),
    };
    let perfect_mse = evaluate_model_on_client(&perfect, &features, &targets).unwrap();

    let mut zero_exact = true;
    for classes in 2..=10 {
        let labels: Vec<usize> = (0..25).map(|i| i % classes).collect();
        let t = one_hot(&labels, classes).unwrap();
        let x: Vec<Vec<f64>> = (0..25).map(|i| vec![i as f64]).collect();
        let zero = Fixed {
            input: 1,
            outputs: vec![vec![0.0; classes]; 25],
        };
        zero_exact &= evaluate_model_on_client(&zero, &x, &t).unwrap() == 1.0 / classes as f64;
    }

    let mut r = rng(11);
    let outputs: Vec<Vec<f64>> = (0..labels.len())
        .map(|_| (0..c).map(|_| r.random_range(-2.0..2.0)).collect())
        .collect();
    let random = Fixed {
        input: 2,
        outputs: outputs.clone(),
    };
    let got = evaluate_model_on_client(&random, &features, &targets).unwrap();
    let mut sum = 0.0;
    for i in 0..labels.len() {
        for k in 0..c {
            let diff = outputs[i][k] - targets[i][k];
            sum += diff * diff;
        }
    }
    let oracle = sum / (labels.len() * c) as f64;
    let ok = perfect_mse == 0.0 && zero_exact && (got - oracle).abs() < 1e-10;
    Report::new(
        ok,
        format!(
            "perfect fit {perfect_mse}; zero model == 1/C for C=2..10: {zero_exact}; random |diff| {:.1e}",
            (got - oracle).abs()
        ),
    )
}

type Criterion = (&'static str, fn() -> Report);

fn main() {
    let criteria: [Criterion; 11] = [
        ("estimator unbiasedness", criterion_1),
        ("weight anchor", criterion_2),
        ("oracle equivalence", criterion_3),
        ("robustness breakdown", criterion_4),
        ("krum selection", criterion_5),
        ("normality calibration", criterion_6),
        ("pre-testing rate mechanics", criterion_7),
        ("heterogeneity anchor", criterion_8),
        ("end-to-end simulation", criterion_9),
        ("determinism", criterion_10),
        ("mse evaluation", criterion_11),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let id = i + 1;
        let report = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Report::new(false, format!("panicked: {msg}"))
        });
        println!(
            "{} [{id:>2}] {name}: {}",
            if report.passed { "PASS" } else { "FAIL" },
            report.detail
        );
        for line in &report.info {
            println!("     info: {line}");
        }
        if !report.passed {
            failed.push(id);
        }
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed.len(),
        criteria.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
