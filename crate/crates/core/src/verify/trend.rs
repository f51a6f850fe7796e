//! Order statistics and a small exact trend test used by verdict logic.

/// Exact one-sided p-value for a *decreasing* trend in `ys` against their
/// index: the probability, under a uniformly random ordering, that the
/// Kendall S statistic is at most the observed one. The null distribution
/// comes from the inversion-count generating polynomial
/// `prod_{i=1..n} (1 + x + ... + x^{i-1})`, so no asymptotic approximation
/// is involved. Ties contribute zero to S, which only makes the test more
/// conservative.
pub fn kendall_decreasing_p(ys: &[f64]) -> f64 {
    let n = ys.len();
    if n < 2 {
        return 1.0;
    }
    assert!(n <= 20, "exact trend null is tabulated up to n = 20");
    let mut s_obs: i64 = 0;
    for i in 0..n {
        for j in i + 1..n {
            let d = ys[j] - ys[i];
            if d < 0.0 {
                s_obs -= 1;
            } else if d > 0.0 {
                s_obs += 1;
            }
        }
    }
    let max_inv = n * (n - 1) / 2;
    let mut coef = vec![0u128; max_inv + 1];
    coef[0] = 1;
    for i in 2..=n {
        // multiply by (1 + x + ... + x^{i-1}) via a sliding window sum
        let mut next = vec![0u128; max_inv + 1];
        let mut run = 0u128;
        for d in 0..=max_inv {
            run += coef[d];
            if d >= i {
                run -= coef[d - i];
            }
            next[d] = run;
        }
        coef = next;
    }
    let total: u128 = coef.iter().sum();
    let pairs = max_inv as i64;
    let mut acc: u128 = 0;
    for (k, &c) in coef.iter().enumerate() {
        // a ranking with k inversions has S = pairs - 2k
        if pairs - 2 * k as i64 <= s_obs {
            acc += c;
        }
    }
    acc as f64 / total as f64
}

/// Least-squares slope of `ys` against `xs`.
pub fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    assert!(xs.len() >= 2);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    sxy / sxx
}

/// p-th percentile (0..=100) with linear interpolation between order
/// statistics.
pub fn percentile(xs: &[f64], p: f64) -> f64 {
    assert!(!xs.is_empty() && (0.0..=100.0).contains(&p));
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = p / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let w = pos - lo as f64;
    v[lo] * (1.0 - w) + v[hi] * w
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kendall_matches_hand_counts_on_tiny_cases() {
        // n = 2: P(S <= -1) = 1/2
        assert_eq!(kendall_decreasing_p(&[2.0, 1.0]), 0.5);
        // n = 3 fully decreasing: 1/3! = 1/6
        assert!((kendall_decreasing_p(&[3.0, 2.0, 1.0]) - 1.0 / 6.0).abs() < 1e-15);
        // fully increasing: S is the maximum, so P(S <= max) = 1
        assert_eq!(kendall_decreasing_p(&[1.0, 2.0, 3.0]), 1.0);
    }

    #[test]
    fn kendall_null_agrees_with_brute_force_enumeration() {
        // enumerate all 6! orderings and compare P(S <= s) for every s
        let n = 6usize;
        let mut dist = std::collections::HashMap::<i64, u64>::new();
        let mut perm: Vec<usize> = (0..n).collect();
        fn heap(perm: &mut Vec<usize>, k: usize, out: &mut dyn FnMut(&[usize])) {
            if k == 1 {
                out(perm);
                return;
            }
            for i in 0..k {
                heap(perm, k - 1, out);
                if k % 2 == 0 {
                    perm.swap(i, k - 1);
                } else {
                    perm.swap(0, k - 1);
                }
            }
        }
        heap(&mut perm, n, &mut |p: &[usize]| {
            let mut s = 0i64;
            for i in 0..n {
                for j in i + 1..n {
                    if p[j] > p[i] {
                        s += 1;
                    } else {
                        s -= 1;
                    }
                }
            }
            *dist.entry(s).or_insert(0) += 1;
        });
        let total: u64 = dist.values().sum();
        assert_eq!(total, 720);
        for (&s_obs, _) in &dist {
            let brute: u64 = dist
                .iter()
                .filter(|(&s, _)| s <= s_obs)
                .map(|(_, &c)| c)
                .sum();
            // any sample with that S value yields the same p
            let ys: Vec<f64> = {
                // build a concrete sequence with S = s_obs by scanning perms
                let mut found = None;
                let mut perm: Vec<usize> = (0..n).collect();
                heap(&mut perm, n, &mut |p: &[usize]| {
                    if found.is_some() {
                        return;
                    }
                    let mut s = 0i64;
                    for i in 0..n {
                        for j in i + 1..n {
                            if p[j] > p[i] {
                                s += 1;
                            } else {
                                s -= 1;
                            }
                        }
                    }
                    if s == s_obs {
                        found = Some(p.iter().map(|&v| v as f64).collect::<Vec<_>>());
                    }
                });
                found.unwrap()
            };
            let p = kendall_decreasing_p(&ys);
            assert!(
                (p - brute as f64 / total as f64).abs() < 1e-12,
                "S={s_obs}: {p} vs {}",
                brute as f64 / total as f64
            );
        }
    }

    #[test]
    fn monotone_run_of_eight_is_significant() {
        let ys: Vec<f64> = (0..8).map(|i| 10.0 - i as f64).collect();
        let p = kendall_decreasing_p(&ys);
        assert!((p - 1.0 / 40_320.0).abs() < 1e-12);
        // one adjacent swap at the end stays well under 10%
        let mut y2 = ys.clone();
        y2.swap(6, 7);
        assert!(kendall_decreasing_p(&y2) < 0.10);
    }

    #[test]
    fn slope_and_percentile_are_exact_on_simple_data() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [1.0, 3.0, 5.0, 7.0];
        assert!((ls_slope(&xs, &ys) - 2.0).abs() < 1e-14);
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 100.0), 4.0);
        assert!((percentile(&v, 50.0) - 2.5).abs() < 1e-14);
    }
}
