//! Binomial upper tails `P(Bin(m, p) >= k)`.
//!
//! Up to `m = 1000` the tail is summed term by term in log space, smallest
//! terms first. Larger `m` goes through the regularized incomplete beta
//! identity `P(Bin(m, p) >= k) = I_p(k, m - k + 1)` with a continued fraction.

use statrs::function::gamma::ln_gamma;

pub(crate) const DIRECT_SUM_LIMIT: usize = 1000;

/// All upper tails `t[k] = P(Bin(m, p) >= k)` for `k = 0..=m+1`.
pub(crate) fn upper_tails(m: usize, p: f64) -> Vec<f64> {
    let mut tails = vec![0.0; m + 2];
    if p <= 0.0 {
        tails[0] = 1.0;
        return tails;
    }
    if p >= 1.0 {
        tails[..=m].iter_mut().for_each(|t| *t = 1.0);
        return tails;
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let mut log_terms = Vec::with_capacity(m + 1);
    let mut log_choose = 0.0;
    for j in 0..=m {
        if j > 0 {
            log_choose += ((m - j + 1) as f64).ln() - (j as f64).ln();
        }
        log_terms.push(log_choose + j as f64 * lp + (m - j) as f64 * lq);
    }
    let mut acc = 0.0;
    for j in (0..=m).rev() {
        acc += log_terms[j].exp();
        tails[j] = acc.min(1.0);
    }
    tails[0] = 1.0;
    tails
}

pub(crate) fn upper_tail(k: usize, m: usize, p: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if k > m {
        return 0.0;
    }
    if m <= DIRECT_SUM_LIMIT {
        upper_tails(m, p)[k]
    } else {
        beta_reg(k as f64, (m - k + 1) as f64, p)
    }
}

/// Regularized incomplete beta `I_x(a, b)`.
pub(crate) fn beta_reg(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (-x).ln_1p();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        (front * continued_fraction(a, b, x) / a).clamp(0.0, 1.0)
    } else {
        (1.0 - front * continued_fraction(b, a, 1.0 - x) / b).clamp(0.0, 1.0)
    }
}

/// Modified Lentz evaluation of the incomplete beta continued fraction.
fn continued_fraction(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for i in 1..=10_000 {
        let m = i as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}
