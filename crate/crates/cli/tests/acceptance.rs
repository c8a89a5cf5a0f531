//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion ids (e.g. `C3 C7`) to run a subset.

use std::cell::OnceCell;
use std::collections::BTreeMap;
use std::rc::Rc;
use std::time::Instant;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde_json::{json, Value};

use npcs::classifiers::{train_logistic_weighted, StratifyMode};
use npcs::correspondence::rebalance_cost;
use npcs::data::empirical_errors;
use npcs::np::{np_order, violation_bound};
use npcs::selectors::CostGrid;
use npcs::simgen::{
    generate, run_experiment, Algorithm, DistributionKind, DistributionSpec, ExperimentConfig, ExperimentReport,
    GroupSummary, LeftoutSize,
};
use npcs::tube::plugin_alpha;
use npcs::{CostPair, CsApproach, CsRecipe, LabeledSample, Method, ScoringFunction, Seed, ThresholdClassifier};
use npcs_cli::config::{with_file, Command, RunConfig};
use npcs_cli::report::ReportDocument;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn two_sigma(p: f64, reps: usize) -> f64 {
    2.0 * (p * (1.0 - p) / reps as f64).sqrt()
}

fn experiment(kind: DistributionKind, n_train: usize, reps: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        distribution: DistributionSpec::new(kind, 30).unwrap(),
        n_train,
        n_eval: 100_000,
        reps,
        alpha: 0.1,
        delta: 0.1,
        methods: vec![Method::Lr],
        approach: CsApproach::Stratification,
        stratify_mode: StratifyMode::Oversample0,
        algorithms: vec![Algorithm::Np],
        grid: CostGrid::default(),
        leftout: LeftoutSize::Fraction(0.5),
        bootstrap: 1000,
        splits: 30,
        seed,
    }
}

fn run(cfg: &ExperimentConfig) -> ExperimentReport {
    cfg.validate().expect("acceptance configuration is valid");
    run_experiment(cfg).expect("experiment runs")
}

fn group<'a>(report: &'a ExperimentReport, algorithm: &str, method: Method, setting: Option<&str>) -> &'a GroupSummary {
    report
        .summary(algorithm, method, setting)
        .unwrap_or_else(|| panic!("missing group {algorithm} {method} {setting:?}"))
}

fn rate(s: &GroupSummary) -> f64 {
    s.population_violation_rate.unwrap_or(f64::NAN)
}

// ---------------------------------------------------------------------------

/// `P(Bin(m, 1 - alpha) >= k)` for every `k`, in exact rational arithmetic.
fn exact_tails(m: usize, alpha: f64) -> Vec<f64> {
    let a = BigRational::from_float(alpha).unwrap();
    let q = BigRational::one() - &a;
    let mut a_pow = vec![BigRational::one()];
    for _ in 0..m {
        let next = a_pow.last().unwrap() * &a;
        a_pow.push(next);
    }
    let (mut choose, mut q_pow) = (BigInt::one(), BigRational::one());
    let mut terms = Vec::with_capacity(m + 1);
    for j in 0..=m {
        if j > 0 {
            choose = choose * BigInt::from(m - j + 1) / BigInt::from(j);
            q_pow *= &q;
        }
        terms.push(BigRational::from_integer(choose.clone()) * &q_pow * &a_pow[m - j]);
    }
    let mut out = vec![0.0; m + 1];
    let mut acc = BigRational::zero();
    for j in (0..=m).rev() {
        acc += &terms[j];
        out[j] = acc.to_f64().unwrap();
    }
    out
}

fn c1_exact_bound() -> Verdict {
    let mut worst = 0.0f64;
    let mut at = (0, 0, 0.0);
    let mut checked = 0;
    for alpha in [0.01, 0.05, 0.1, 0.25] {
        for m in 1..=60 {
            let tails = exact_tails(m, alpha);
            for k in 1..=m {
                let err = (violation_bound(k, m, alpha).unwrap() - tails[k]).abs();
                checked += 1;
                if err > worst {
                    worst = err;
                    at = (k, m, alpha);
                }
            }
        }
    }
    verdict(
        worst <= 1e-12,
        format!("{checked} (k, m, alpha) triples, max |error| = {worst:.3e} at {at:?} (tolerance 1e-12)"),
    )
}

fn c2_min_sample_size() -> Verdict {
    let mut mismatches = 0;
    for alpha in [0.01, 0.05, 0.1, 0.2, 0.3] {
        for delta in [0.01, 0.05, 0.1, 0.2] {
            for m in 1..=600 {
                let infeasible = (1.0f64 - alpha).powi(m) > delta;
                if np_order(m as usize, alpha, delta).is_err() != infeasible {
                    mismatches += 1;
                }
            }
        }
    }
    let boundary = np_order(21, 0.1, 0.1).is_err() && np_order(22, 0.1, 0.1).is_ok();
    verdict(
        mismatches == 0 && boundary,
        format!(
            "error iff (1-alpha)^m > delta: {mismatches} mismatches over 12000 cases; alpha = delta = 0.1 boundary at m = 22: {boundary}"
        ),
    )
}

/// Shared run for the NP guarantee and the vanilla-CS failure.
fn np_and_vanilla() -> ExperimentReport {
    run(&ExperimentConfig {
        methods: vec![Method::Lda, Method::Lr],
        algorithms: vec![Algorithm::Np, Algorithm::VanillaCs],
        reps: 200,
        ..experiment(DistributionKind::Gaussian, 1000, 200, 3000)
    })
}

fn c3_np_guarantee(report: &ExperimentReport) -> Verdict {
    let limit = 0.1 + two_sigma(0.1, 200);
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [Method::Lda, Method::Lr] {
        let s = group(report, "np", m, None);
        pass &= s.failures == 0 && rate(s) <= limit;
        parts.push(format!("{m} {:.3} ({} failed)", rate(s), s.failures));
    }
    verdict(pass, format!("NP violation rates {} (limit {limit:.4})", parts.join(", ")))
}

fn c4_vanilla_failure(report: &ExperimentReport) -> Verdict {
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [Method::Lda, Method::Lr] {
        let v = group(report, "vanilla-cs", m, None);
        let np = group(report, "np", m, None);
        pass &= v.failures == 0 && rate(v) > 0.2 && rate(v) > rate(np);
        parts.push(format!("{m} {:.3} vs NP {:.3}", rate(v), rate(np)));
    }
    verdict(pass, format!("vanilla-CS violation rates {} (must exceed 0.2 and NP)", parts.join(", ")))
}

fn c5_correspondence() -> Verdict {
    let kinds = [DistributionKind::Gaussian, DistributionKind::MultivariateT, DistributionKind::Mixture];
    let methods = [Method::Lda, Method::Qda, Method::Gnb, Method::Lr];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, kind) in kinds.into_iter().enumerate() {
        let report = run(&ExperimentConfig {
            alpha: 0.05,
            methods: methods.to_vec(),
            algorithms: vec![Algorithm::Correspondence],
            leftout: LeftoutSize::Size(200),
            ..experiment(kind, 1000, 200, 5000 + i as u64)
        });
        for m in methods {
            let s = group(&report, "correspondence", m, None);
            let disagreements = s.total_disagreements.unwrap_or(usize::MAX);
            pass &= s.failures == 0 && disagreements == 0;
            if s.failures > 0 || disagreements > 0 {
                parts.push(format!("{kind}/{m}: {disagreements} disagreements, {} failed", s.failures));
            }
        }
        let mismatched = report
            .records
            .iter()
            .filter(|r| {
                r.estimates.get("np_population_type1") != r.population_type1.as_ref()
                    || r.estimates.get("np_population_type2") != r.population_type2.as_ref()
            })
            .count();
        pass &= mismatched == 0;
        if mismatched > 0 {
            parts.push(format!("{kind}: {mismatched} reps with differing errors"));
        }
    }
    let detail = if parts.is_empty() {
        "0 disagreements across 3 distributions x 4 methods x 200 reps x 1e5 points; identical type I/II errors".to_string()
    } else {
        parts.join("; ")
    };
    verdict(pass, detail)
}

fn c6_tubec_calibration() -> Verdict {
    let kinds = [DistributionKind::Gaussian, DistributionKind::MultivariateT, DistributionKind::Mixture];
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, kind) in kinds.into_iter().enumerate() {
        let report = run(&ExperimentConfig {
            algorithms: vec![Algorithm::TubecEstimators {
                c0s: vec![0.7],
                leftout_sizes: vec![50, 100, 200],
            }],
            ..experiment(kind, 500, 100, 6000 + i as u64)
        });
        for m in [50, 100, 200] {
            let setting = format!("c0=0.7 m={m}");
            let s = group(&report, "tubec-estimators", Method::Lr, Some(&setting));
            let get = |k: &str| s.exceedance_rates.get(k).copied().unwrap_or(f64::NAN);
            let (t, p, e) = (get("tubec"), get("plug-in"), get("empirical"));
            let ok = s.failures == 0 && (0.02..=0.20).contains(&t) && p > t && e > t;
            pass &= ok;
            parts.push(format!(
                "{kind} m={m}: tubec {t:.2} plug-in {p:.2} empirical {e:.2}{}",
                if ok { "" } else { " <-" }
            ));
        }
    }
    verdict(pass, format!("exceedance frequencies (tubec in [0.02, 0.20], others above): {}", parts.join("; ")))
}

fn c7_tube_calibration() -> Verdict {
    let loose = 0.15 + two_sigma(0.15, 100);
    let tight = 0.1 + two_sigma(0.1, 100);
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, n) in [250, 500, 1000].into_iter().enumerate() {
        let report = run(&ExperimentConfig {
            algorithms: vec![Algorithm::TubeEstimators { c0s: vec![0.7, 0.8, 0.9] }],
            ..experiment(DistributionKind::Gaussian, n, 100, 7000 + i as u64)
        });
        for c0 in [0.7, 0.8, 0.9] {
            let s = group(&report, "tube-estimators", Method::Lr, Some(&format!("c0={c0}")));
            let f = s.exceedance_rates.get("tube").copied().unwrap_or(f64::NAN);
            let limit = if n == 1000 { tight } else { loose };
            let ok = s.failures == 0 && f <= limit;
            pass &= ok;
            parts.push(format!("n={n} c0={c0}: {f:.2}{}", if ok { "" } else { " <-" }));
        }
    }
    verdict(
        pass,
        format!("TUBE violation frequencies (limit {loose:.4}, {tight:.4} at n = 1000): {}", parts.join("; ")),
    )
}

fn c8_tube_cs_trade() -> Verdict {
    let report = run(&ExperimentConfig {
        alpha: 0.05,
        methods: vec![Method::Lr, Method::Gnb],
        algorithms: vec![Algorithm::TubeCs, Algorithm::Np],
        ..experiment(DistributionKind::Gaussian, 1000, 100, 8000)
    });
    let mut pass = true;
    let mut parts = Vec::new();
    for m in [Method::Lr, Method::Gnb] {
        let t = group(&report, "tube-cs", m, None);
        let np = group(&report, "np", m, None);
        let (t2, np2) = (
            t.median_population_type2.unwrap_or(f64::NAN),
            np.median_population_type2.unwrap_or(f64::NAN),
        );
        let ok = t.failures == 0 && np.failures == 0 && rate(t) <= 0.2 && t2 <= np2;
        pass &= ok;
        parts.push(format!(
            "{m}: TUBE-CS violation {:.2}, median type II {t2:.4} vs NP {np2:.4}",
            rate(t)
        ));
    }
    verdict(pass, parts.join("; "))
}

fn c9_properties() -> Verdict {
    let mut failures = Vec::new();
    let mut check = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    for m in [1, 7, 50, 200, 1000] {
        for delta in [0.01, 0.1, 0.5] {
            let want = 1.0 - f64::powf(delta, 1.0 / m as f64);
            check((plugin_alpha(1.0, m, delta).unwrap() - want).abs() < 1e-12, "plug-in at F = 1");
        }
    }
    for i in 0..=100 {
        let t = i as f64 / 100.0;
        check((rebalance_cost(t, 0.5).unwrap() - t).abs() < 1e-12, "rebalance cost at pi0 = 1/2");
    }
    for alpha in [0.01, 0.05, 0.1, 0.25] {
        for m in [1, 10, 60, 300] {
            let v: Vec<f64> = (1..=m).map(|k| violation_bound(k, m, alpha).unwrap()).collect();
            check(v.windows(2).all(|w| w[1] <= w[0]), "violation bound monotone in k");
        }
    }
    for m in [10, 100, 500] {
        let p: Vec<f64> = (0..=200).map(|i| plugin_alpha(i as f64 / 200.0, m, 0.1).unwrap()).collect();
        check(p.windows(2).all(|w| w[1] <= w[0] + 1e-15), "plug-in monotone in F");
    }

    let spec = DistributionSpec::new(DistributionKind::Gaussian, 4).unwrap();
    let sample = generate(&spec, 300, Seed::new(9)).unwrap();
    let recipe = CsRecipe::new(CsApproach::PostTraining, Method::Lr);
    let grid: Vec<ThresholdClassifier> = (1..20)
        .map(|i| recipe.build(&sample, CostPair::new(i as f64 / 20.0).unwrap(), Seed::new(0)).unwrap())
        .collect();
    for x in sample.rows() {
        let labels: Vec<u8> = grid.iter().map(|c| c.predict(x)).collect();
        if !labels.windows(2).all(|w| w[1] <= w[0]) {
            check(false, "post-training labels monotone in c0");
            break;
        }
    }

    let mut worst = 0.0f64;
    for s in 0..5u64 {
        let sample = generate(&spec, 120, Seed::new(100 + s)).unwrap();
        let mult: Vec<usize> = (0..sample.n()).map(|i| (i * 7 + s as usize) % 4).collect();
        let weights: Vec<f64> = mult.iter().map(|&k| k as f64).collect();
        let idx: Vec<usize> = mult.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k)).collect();
        let copy = sample.select(&idx).unwrap();
        let a = train_logistic_weighted(&sample, &weights).unwrap();
        let b = train_logistic_weighted(&copy, &vec![1.0; copy.n()]).unwrap();
        worst = worst.max((a.intercept - b.intercept).abs());
        for (x, y) in a.coef.iter().zip(&b.coef) {
            worst = worst.max((x - y).abs());
        }
    }
    check(worst <= 1e-8, "weighting/replication equivalence");

    let c = ThresholdClassifier::new(ScoringFunction::external(|x: &[f64]| x[0] + 0.5 * x[1], false), 0.7);
    let base = empirical_errors(&c, &sample).unwrap();
    let mut order: Vec<usize> = (0..sample.n()).collect();
    for step in [1usize, 7, 13] {
        order.rotate_left(step);
        order.reverse();
        let permuted: LabeledSample = sample.select(&order).unwrap();
        check(empirical_errors(&c, &permuted).unwrap() == base, "empirical errors permutation invariant");
    }

    failures.dedup();
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("all identities and monotonicity checks hold; replication gap {worst:.2e}")
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

fn c10_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let spec = DistributionSpec::new(DistributionKind::Gaussian, 3).unwrap();
    let s = generate(&spec, 400, Seed::new(10_000)).unwrap();
    let mut text = String::from("a,b,c,label\n");
    for (row, &y) in s.rows().zip(s.labels()) {
        text += &format!("{},{},{},{}\n", row[0], row[1], row[2], if y == 0 { "severe" } else { "mild" });
    }
    let csv = dir.path().join("data.csv");
    std::fs::write(&csv, text).unwrap();
    let data = json!({ "path": csv, "label_column": "label", "class0_value": "severe" });
    let synthetic = json!({ "distribution": "mixture", "dim": 4, "n": 300 });

    let cases: Vec<(Command, Value)> = vec![
        (Command::NpTrain, json!({ "data": data, "alpha": 0.1 })),
        (Command::VanillaCs, json!({ "synthetic": synthetic, "alpha": 0.1 })),
        (Command::Tubec, json!({ "data": data, "bootstrap": 300 })),
        (Command::Tube, json!({ "synthetic": synthetic, "bootstrap": 100, "splits": 4 })),
        (Command::TubeCs, json!({ "data": data, "alpha": 0.2, "bootstrap": 50, "splits": 2, "grid": [0.6, 0.7, 0.8, 0.9] })),
        (Command::TubecCs, json!({ "synthetic": synthetic, "alpha": 0.2, "bootstrap": 200 })),
        (Command::Correspond, json!({ "data": data, "alpha": 0.1, "methods": ["qda"], "approach": "rebalancing" })),
        (Command::Simulate, json!({
            "synthetic": { "distribution": "gaussian", "dim": 3, "n": 200 },
            "n_eval": 2000, "reps": 3, "alpha": 0.1, "methods": ["lr", "gnb"], "bootstrap": 100, "splits": 2,
            "algorithms": ["np", "vanilla-cs", "tubec-estimators", "constant1"], "leftout_sizes": [40],
        })),
        (Command::Evaluate, json!({ "data": data, "constant": 1 })),
        (Command::Compare, json!({ "data": data, "reps": 3, "alpha": 0.2, "bootstrap": 50, "splits": 2 })),
    ];
    let serial = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let parallel = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let mut problems = Vec::new();
    for (command, file) in cases {
        let cfg: RunConfig = match with_file(command, Some(file)).and_then(|c| c.validate().map(|_| c)) {
            Ok(c) => c,
            Err(e) => {
                problems.push(format!("{command}: config rejected ({e})"));
                continue;
            }
        };
        let one = serial.install(|| npcs_cli::run(cfg.clone()));
        let four = parallel.install(|| npcs_cli::run(cfg.clone()));
        let (one, four) = match (one, four) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => {
                problems.push(format!("{command}: {e}"));
                continue;
            }
        };
        if one.stable_json() != four.stable_json() {
            problems.push(format!("{command}: 1 vs 4 threads differ"));
        }
        let reread: ReportDocument = serde_json::from_str(&one.to_json()).unwrap();
        if let Err(e) = npcs_cli::replay(&reread) {
            problems.push(format!("{command}: {e}"));
        }
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            "10 subcommands: 1- and 4-thread runs identical; embedded configs replay byte-identically".to_string()
        } else {
            problems.join("; ")
        },
    )
}

// ---------------------------------------------------------------------------

type Check = Box<dyn FnOnce() -> Verdict>;

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |id: &str| filters.is_empty() || filters.iter().any(|f| f.eq_ignore_ascii_case(id));

    // C3 and C4 read the same experiment; it runs once, on first use.
    let shared: Rc<OnceCell<ExperimentReport>> = Rc::default();
    let (for_c3, for_c4) = (shared.clone(), shared);

    let mut checks: BTreeMap<usize, (&str, Check)> = BTreeMap::new();
    checks.insert(1, ("exact violation bound", Box::new(c1_exact_bound)));
    checks.insert(2, ("minimum sample size", Box::new(c2_min_sample_size)));
    checks.insert(3, ("NP guarantee", Box::new(move || c3_np_guarantee(for_c3.get_or_init(np_and_vanilla)))));
    checks.insert(4, ("vanilla-CS failure", Box::new(move || c4_vanilla_failure(for_c4.get_or_init(np_and_vanilla)))));
    checks.insert(5, ("correspondence exactness", Box::new(c5_correspondence)));
    checks.insert(6, ("TUBEc calibration", Box::new(c6_tubec_calibration)));
    checks.insert(7, ("TUBE calibration", Box::new(c7_tube_calibration)));
    checks.insert(8, ("TUBE-CS vs NP trade", Box::new(c8_tube_cs_trade)));
    checks.insert(9, ("property suites", Box::new(c9_properties)));
    checks.insert(10, ("determinism and replay", Box::new(c10_determinism)));

    let mut failed = 0;
    let mut ran = 0;
    for (id, (name, check)) in checks {
        let label = format!("C{id}");
        if !wanted(&label) {
            continue;
        }
        let started = Instant::now();
        let v = check();
        ran += 1;
        if !v.pass {
            failed += 1;
        }
        println!(
            "[{}] {label} {name}: {} [{:.1}s]",
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            started.elapsed().as_secs_f64()
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
