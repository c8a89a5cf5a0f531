use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use npcs::np::{min_sample_size, np_order, violation_bound};
use npcs::tube::{plugin_alpha, surrogate_delta};

/// `P(Bin(m, 1 - alpha) >= k)` for `k = 0..=m`, summed in exact arithmetic.
fn exact_tails(m: usize, alpha: f64) -> Vec<f64> {
    let a = BigRational::from_float(alpha).unwrap();
    let q = BigRational::one() - &a;
    let mut a_pow = vec![BigRational::one()];
    for _ in 0..m {
        let next = a_pow.last().unwrap() * &a;
        a_pow.push(next);
    }
    let mut terms = Vec::with_capacity(m + 1);
    let (mut choose, mut q_pow) = (BigInt::one(), BigRational::one());
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

#[test]
fn bound_matches_rational_sum() {
    for alpha in [0.01, 0.05, 0.1, 0.25] {
        for m in [1, 2, 5, 13, 22, 40] {
            let tails = exact_tails(m, alpha);
            for k in 1..=m {
                let got = violation_bound(k, m, alpha).unwrap();
                let want = tails[k];
                assert!((got - want).abs() <= 1e-12, "k={k} m={m} alpha={alpha}: {got} vs {want}");
            }
        }
    }
}

#[test]
fn order_matches_rational_scan() {
    for (m, alpha, delta) in [(22, 0.1, 0.1), (50, 0.05, 0.1), (200, 0.05, 0.1), (100, 0.1, 0.05)] {
        let tails = exact_tails(m, alpha);
        let want = (1..=m).find(|&k| tails[k] <= delta).unwrap();
        assert_eq!(np_order(m, alpha, delta).unwrap(), want);
    }
}

#[test]
fn feasibility_boundary() {
    // ceil(ln 0.1 / ln 0.9) = 22
    assert_eq!(min_sample_size(0.1, 0.1), 22);
    assert!(np_order(21, 0.1, 0.1).is_err());
    assert!(np_order(22, 0.1, 0.1).is_ok());
    // ceil(ln 0.1 / ln 0.95) = 45
    assert_eq!(min_sample_size(0.05, 0.1), 45);
}

#[test]
fn plugin_alpha_inverts_surrogate_delta() {
    for (f, m, delta) in [(1.0, 50usize, 0.1), (0.95, 100, 0.05), (0.9, 200, 0.2), (0.8, 60, 0.1)] {
        let a = plugin_alpha(f, m, delta).unwrap();
        assert!(a > 0.0 && a < 1.0);
        assert!((surrogate_delta(f, m, a).unwrap() - delta).abs() < 1e-10, "F={f} m={m}");
    }
    // F = 1 reduces to 1 - delta^(1/m)
    assert!((plugin_alpha(1.0, 22, 0.1).unwrap() - (1.0 - 0.1f64.powf(1.0 / 22.0))).abs() < 1e-15);
}
