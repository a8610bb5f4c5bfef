use serde::Serialize;

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Paired sign test of `a > b`. Ties are dropped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignTest {
    pub wins: usize,
    pub losses: usize,
    pub ties: usize,
    /// One-sided P(X >= wins) for X ~ Binomial(wins + losses, 1/2).
    pub p_value: f64,
}

pub fn sign_test(a: &[f64], b: &[f64]) -> SignTest {
    let (mut wins, mut losses, mut ties) = (0, 0, 0);
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Greater => wins += 1,
            std::cmp::Ordering::Less => losses += 1,
            std::cmp::Ordering::Equal => ties += 1,
        }
    }
    SignTest {
        wins,
        losses,
        ties,
        p_value: binomial_upper_tail(wins + losses, wins),
    }
}

/// P(X >= k) for X ~ Binomial(n, 1/2), summed in log space.
pub fn binomial_upper_tail(n: usize, k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let ln_fact = |m: usize| (1..=m).map(|i| (i as f64).ln()).sum::<f64>();
    let ln_half_n = n as f64 * 0.5f64.ln();
    (k..=n)
        .map(|i| (ln_fact(n) - ln_fact(i) - ln_fact(n - i) + ln_half_n).exp())
        .sum::<f64>()
        .min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn binomial_tail_values() {
        assert!((binomial_upper_tail(10, 10) - 1.0 / 1024.0).abs() < 1e-15);
        assert!((binomial_upper_tail(10, 0) - 1.0).abs() < 1e-15);
        // sum_{i>=20} C(30, i) / 2^30, exact integer arithmetic
        assert!((binomial_upper_tail(30, 20) - 0.049_368_573_352_694_51).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn tail_is_monotone(n in 1usize..60, k in 0usize..60) {
            let k = k.min(n);
            let p = binomial_upper_tail(n, k);
            prop_assert!((0.0..=1.0).contains(&p));
            if k < n {
                prop_assert!(binomial_upper_tail(n, k + 1) <= p + 1e-15);
            }
        }
    }
}
