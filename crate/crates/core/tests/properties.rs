use npcs::classifiers::{train_logistic_weighted, StratifyMode};
use npcs::correspondence::{posttrain_cost, rebalance_cost};
use npcs::data::{empirical_errors, split_class0};
use npcs::np::{min_sample_size, np_order, violation_bound};
use npcs::simgen::{generate, DistributionKind, DistributionSpec};
use npcs::tube::plugin_alpha;
use npcs::{CostPair, CsApproach, CsRecipe, LabeledSample, Method, ScoringFunction, Seed, ThresholdClassifier};
use proptest::prelude::*;

fn small_sample(seed: u64, n: usize, d: usize) -> LabeledSample {
    let spec = DistributionSpec::new(DistributionKind::Gaussian, d.max(2)).unwrap();
    generate(&spec, n, Seed::new(seed)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn violation_bound_decreases_in_k(m in 1usize..80, alpha in 0.01f64..0.5) {
        let mut prev = 1.0;
        for k in 1..=m {
            let v = violation_bound(k, m, alpha).unwrap();
            prop_assert!((0.0..=1.0).contains(&v));
            prop_assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn violation_bound_decreases_in_alpha(k in 1usize..40, extra in 0usize..40, a in 0.01f64..0.5, b in 0.01f64..0.5) {
        let m = k + extra;
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        // summed tails carry a few ulps of rounding
        prop_assert!(violation_bound(k, m, hi).unwrap() <= violation_bound(k, m, lo).unwrap() + 1e-13);
    }

    #[test]
    fn np_order_is_minimal(m in 1usize..300, alpha in 0.02f64..0.4, delta in 0.02f64..0.4) {
        match np_order(m, alpha, delta) {
            Ok(k) => {
                prop_assert!(violation_bound(k, m, alpha).unwrap() <= delta);
                if k > 1 {
                    prop_assert!(violation_bound(k - 1, m, alpha).unwrap() > delta);
                }
            }
            Err(_) => prop_assert!((1.0 - alpha).powi(m as i32) > delta),
        }
        prop_assert_eq!(np_order(m, alpha, delta).is_ok(), m >= min_sample_size(alpha, delta));
    }

    #[test]
    fn plugin_alpha_decreases_in_f(m in 1usize..500, delta in 0.01f64..0.5, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let at_lo = plugin_alpha(lo, m, delta).unwrap();
        let at_hi = plugin_alpha(hi, m, delta).unwrap();
        prop_assert!((0.0..=1.0).contains(&at_lo));
        prop_assert!(at_hi <= at_lo + 1e-12);
    }

    #[test]
    fn plugin_alpha_at_full_mass(m in 1usize..2000, delta in 0.001f64..0.999) {
        let expected = 1.0 - delta.powf(1.0 / m as f64);
        prop_assert!((plugin_alpha(1.0, m, delta).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn rebalance_cost_identities(t in 0.0f64..=1.0, pi0 in 0.01f64..0.99) {
        prop_assert!((rebalance_cost(t, 0.5).unwrap() - t).abs() < 1e-12);
        prop_assert_eq!(rebalance_cost(0.0, pi0).unwrap(), 0.0);
        prop_assert!((rebalance_cost(1.0, pi0).unwrap() - 1.0).abs() < 1e-15);
        prop_assert_eq!(posttrain_cost(t).unwrap(), t);
    }

    #[test]
    fn rebalance_cost_monotone(a in 0.0f64..=1.0, b in 0.0f64..=1.0, pi0 in 0.01f64..0.99) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(rebalance_cost(lo, pi0).unwrap() <= rebalance_cost(hi, pi0).unwrap() + 1e-15);
    }

    #[test]
    fn rebalance_cost_increases_with_prior(t in 0.01f64..0.99, a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assert!(rebalance_cost(t, lo).unwrap() <= rebalance_cost(t, hi).unwrap() + 1e-15);
    }

    #[test]
    fn weights_match_replication(seed in 0u64..1000, mult in proptest::collection::vec(0usize..4, 60)) {
        let sample = small_sample(seed, 60, 3);
        let weights: Vec<f64> = mult.iter().map(|&k| k as f64).collect();
        let replicated: Vec<usize> = mult.iter().enumerate().flat_map(|(i, &k)| std::iter::repeat_n(i, k)).collect();
        let copy = sample.select(&replicated).unwrap();
        prop_assume!(copy.n0() > 0 && copy.n1() > 0);
        let a = train_logistic_weighted(&sample, &weights);
        let b = train_logistic_weighted(&copy, &vec![1.0; copy.n()]);
        prop_assume!(a.is_ok() && b.is_ok());
        let (a, b) = (a.unwrap(), b.unwrap());
        prop_assert!((a.intercept - b.intercept).abs() < 1e-8);
        for (x, y) in a.coef.iter().zip(&b.coef) {
            prop_assert!((x - y).abs() < 1e-8, "{x} vs {y}");
        }
    }

    #[test]
    fn empirical_errors_ignore_row_order(seed in 0u64..1000, t in 0.05f64..0.95) {
        let sample = small_sample(seed, 80, 2);
        prop_assume!(sample.n0() > 0 && sample.n1() > 0);
        let c = ThresholdClassifier::new(ScoringFunction::external(|x: &[f64]| 1.0 / (1.0 + (-x[0] - x[1]).exp()), true), t);
        let mut order: Vec<usize> = (0..sample.n()).collect();
        order.reverse();
        order.rotate_left((seed as usize) % sample.n());
        let shuffled = sample.select(&order).unwrap();
        prop_assert_eq!(empirical_errors(&c, &sample).unwrap(), empirical_errors(&c, &shuffled).unwrap());
    }

    #[test]
    fn split_partitions_class0(seed in 0u64..1000, take in 1usize..20) {
        let sample = small_sample(seed, 60, 2);
        prop_assume!(take < sample.n0());
        let (mixed, left) = split_class0(&sample, take, Seed::new(seed)).unwrap();
        prop_assert_eq!(left.n(), take);
        prop_assert_eq!(left.n0(), take);
        prop_assert_eq!(mixed.n1(), sample.n1());
        prop_assert_eq!(mixed.n0() + left.n0(), sample.n0());
        let mut all: Vec<Vec<u64>> = mixed
            .rows()
            .chain(left.rows())
            .map(|r| r.iter().map(|v| v.to_bits()).collect())
            .collect();
        let mut original: Vec<Vec<u64>> = sample.rows().map(|r| r.iter().map(|v| v.to_bits()).collect()).collect();
        all.sort();
        original.sort();
        prop_assert_eq!(all, original);
    }

    #[test]
    fn post_training_labels_monotone_in_cost(seed in 0u64..1000, a in 0.01f64..0.99, b in 0.01f64..0.99) {
        let sample = small_sample(seed, 120, 3);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let recipe = CsRecipe::new(CsApproach::PostTraining, Method::Lr);
        let at_lo = recipe.build(&sample, CostPair::new(lo).unwrap(), Seed::new(0)).unwrap();
        let at_hi = recipe.build(&sample, CostPair::new(hi).unwrap(), Seed::new(0)).unwrap();
        for x in sample.rows() {
            prop_assert!(at_hi.predict(x) <= at_lo.predict(x));
        }
    }
}

#[test]
fn generator_is_deterministic() {
    for kind in [DistributionKind::Gaussian, DistributionKind::MultivariateT, DistributionKind::Mixture] {
        let spec = DistributionSpec::new(kind, 5).unwrap();
        let a = generate(&spec, 300, Seed::new(9)).unwrap();
        let b = generate(&spec, 300, Seed::new(9)).unwrap();
        let c = generate(&spec, 300, Seed::new(10)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}

fn class_moments(sample: &LabeledSample, class: u8) -> (Vec<f64>, Vec<Vec<f64>>) {
    let rows: Vec<&[f64]> = sample.rows().zip(sample.labels()).filter(|(_, &y)| y == class).map(|(r, _)| r).collect();
    let d = sample.d();
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..d).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let cov = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| rows.iter().map(|r| (r[a] - mean[a]) * (r[b] - mean[b])).sum::<f64>() / (n - 1.0))
                .collect()
        })
        .collect();
    (mean, cov)
}

#[test]
fn gaussian_moments() {
    let spec = DistributionSpec::new(DistributionKind::Gaussian, 4).unwrap();
    let s = generate(&spec, 200_000, Seed::new(1)).unwrap();
    let (m0, c0) = class_moments(&s, 0);
    let (m1, c1) = class_moments(&s, 1);
    for j in 0..4 {
        assert!(m0[j].abs() < 0.02);
        let shift = if j < 2 { 1.5 } else { 0.0 };
        assert!((m1[j] - shift).abs() < 0.02);
        for k in 0..4 {
            let identity = if j == k { 1.0 } else { 0.0 };
            let banded = match j.abs_diff(k) {
                0 => 1.0,
                1 => 0.5,
                _ => 0.0,
            };
            assert!((c0[j][k] - identity).abs() < 0.03, "class-0 cov[{j}][{k}] = {}", c0[j][k]);
            assert!((c1[j][k] - banded).abs() < 0.03, "class-1 cov[{j}][{k}] = {}", c1[j][k]);
        }
    }
    assert!((s.n0() as f64 / s.n() as f64 - 0.5).abs() < 0.01);
}

#[test]
fn mixture_is_symmetric_about_its_centre() {
    let spec = DistributionSpec::new(DistributionKind::Mixture, 3).unwrap();
    let s = generate(&spec, 100_000, Seed::new(2)).unwrap();
    let (m0, _) = class_moments(&s, 0);
    let (m1, _) = class_moments(&s, 1);
    let a = spec.mixture_offset();
    for j in 0..3 {
        assert!(m0[j].abs() < 0.03, "class-0 mean {}", m0[j]);
        assert!((m1[j] - a).abs() < 0.03, "class-1 mean {}", m1[j]);
    }
}

#[test]
fn stratify_modes_parse() {
    assert_eq!("oversample0".parse::<StratifyMode>().unwrap(), StratifyMode::Oversample0);
}
