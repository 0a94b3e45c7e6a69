//! Small statistical toolbox: incomplete gamma, chi-square tests,
//! two-sample Kolmogorov-Smirnov, and normal quantiles.
//!
//! Nothing here is exotic; the implementations follow the classical series /
//! continued-fraction treatments so the crate does not need a statistics
//! dependency for a handful of p-values.

/// ln Gamma(x) for x > 0 (Lanczos approximation, ~15 significant digits).
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COEF {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Regularized lower incomplete gamma P(a, x).
pub fn gamma_p(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_cf(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn gamma_q(a: f64, x: f64) -> f64 {
    debug_assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_cf(a, x)
    }
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-15 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_q_cf(a: f64, x: f64) -> f64 {
    const FPMIN: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / FPMIN;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = b + an / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Survival function of the chi-square distribution with `dof` degrees of
/// freedom: `P[X > x]`.
pub fn chi_square_sf(x: f64, dof: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_q(dof / 2.0, x / 2.0)
}

/// Standard normal cdf via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Complementary error function, from the incomplete gamma identity
/// `erfc(x) = Q(1/2, x^2)` for `x >= 0`.
pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        gamma_q(0.5, x * x)
    } else {
        2.0 - gamma_q(0.5, x * x)
    }
}

/// Two-sided standard-normal critical value for a confidence level in (0, 1),
/// e.g. `0.95 -> 1.95996...`.
pub fn normal_two_sided(level: f64) -> f64 {
    debug_assert!((0.0..1.0).contains(&level));
    let target = 0.5 + level / 2.0;
    let (mut lo, mut hi) = (0.0f64, 10.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Result of a chi-square test.
#[derive(Debug, Clone, Copy)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Goodness-of-fit test of observed counts against expected counts.
/// Cells with expected count below `min_expected` are pooled into their
/// neighbor to keep the asymptotics honest.
pub fn chi_square_gof(observed: &[f64], expected: &[f64], min_expected: f64) -> ChiSquare {
    debug_assert_eq!(observed.len(), expected.len());
    let mut obs_pool = Vec::new();
    let mut exp_pool = Vec::new();
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        acc_o += o;
        acc_e += e;
        if acc_e >= min_expected {
            obs_pool.push(acc_o);
            exp_pool.push(acc_e);
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 {
        if let (Some(o), Some(e)) = (obs_pool.last_mut(), exp_pool.last_mut()) {
            *o += acc_o;
            *e += acc_e;
        } else {
            obs_pool.push(acc_o);
            exp_pool.push(acc_e);
        }
    }
    let statistic: f64 = obs_pool
        .iter()
        .zip(&exp_pool)
        .map(|(&o, &e)| (o - e) * (o - e) / e)
        .sum();
    let dof = obs_pool.len().saturating_sub(1).max(1);
    ChiSquare {
        statistic,
        dof,
        p_value: chi_square_sf(statistic, dof as f64),
    }
}

/// Chi-square test of independence on a contingency table (rows x cols of
/// counts). Expected cells come from the margins.
pub fn chi_square_independence(table: &[Vec<f64>]) -> ChiSquare {
    let rows = table.len();
    let cols = table[0].len();
    let total: f64 = table.iter().flatten().sum();
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut statistic = 0.0;
    for i in 0..rows {
        for j in 0..cols {
            let e = row_sums[i] * col_sums[j] / total;
            if e > 0.0 {
                let d = table[i][j] - e;
                statistic += d * d / e;
            }
        }
    }
    let dof = (rows - 1) * (cols - 1);
    ChiSquare {
        statistic,
        dof: dof.max(1),
        p_value: chi_square_sf(statistic, dof.max(1) as f64),
    }
}

/// Quantile bin edges over integer samples such that each bin's observed
/// count is at least `min_count`. Returns upper-inclusive cut points; a value
/// `v` belongs to the first bin whose cut is `>= v`.
pub fn quantile_bins(samples: &[u64], target_bins: usize, min_count: usize) -> Vec<u64> {
    let mut sorted = samples.to_vec();
    sorted.sort_unstable();
    let n = sorted.len();
    if n == 0 {
        return vec![u64::MAX];
    }
    let per_bin = (n / target_bins.max(1)).max(min_count).max(1);
    let mut edges = Vec::new();
    let mut idx = per_bin;
    while idx < n {
        let cut = sorted[idx - 1];
        // advance past ties so bins stay disjoint
        while idx < n && sorted[idx] == cut {
            idx += 1;
        }
        if idx < n {
            edges.push(cut);
        }
        idx += per_bin;
    }
    edges.push(u64::MAX);
    edges
}

pub fn bin_index(edges: &[u64], value: u64) -> usize {
    edges.iter().position(|&e| value <= e).unwrap_or(edges.len() - 1)
}

/// Result of a two-sample Kolmogorov-Smirnov test.
#[derive(Debug, Clone, Copy)]
pub struct KsTest {
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic two-sample KS test (with the usual small-sample correction of
/// the argument to the Kolmogorov distribution).
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> KsTest {
    let mut xa = a.to_vec();
    let mut xb = b.to_vec();
    xa.sort_by(|u, v| u.partial_cmp(v).unwrap());
    xb.sort_by(|u, v| u.partial_cmp(v).unwrap());
    let (n, m) = (xa.len(), xb.len());
    let mut i = 0;
    let mut j = 0;
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xa[i].min(xb[j]);
        while i < n && xa[i] <= x {
            i += 1;
        }
        while j < m && xb[j] <= x {
            j += 1;
        }
        let fa = i as f64 / n as f64;
        let fb = j as f64 / m as f64;
        d = d.max((fa - fb).abs());
    }
    let ne = (n as f64 * m as f64) / (n as f64 + m as f64);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    KsTest {
        statistic: d,
        p_value: kolmogorov_sf(lambda),
    }
}

/// Kolmogorov distribution survival function `Q(lambda) = 2 sum (-1)^(k-1) exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda < 1e-8 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..=100 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        sign = -sign;
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn gamma_p_q_complement() {
        for (a, x) in [(0.5, 0.3), (1.0, 1.0), (2.5, 4.0), (10.0, 7.0)] {
            assert_abs_diff_eq!(gamma_p(a, x) + gamma_q(a, x), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn chi_square_sf_known_values() {
        // P[chi2_1 > 3.841459] = 0.05
        assert_abs_diff_eq!(chi_square_sf(3.8414588206941227, 1.0), 0.05, epsilon = 1e-9);
        // P[chi2_10 > 18.307] = 0.05
        assert_abs_diff_eq!(chi_square_sf(18.307038053275146, 10.0), 0.05, epsilon = 1e-9);
    }

    #[test]
    fn normal_quantile_matches_table() {
        assert_abs_diff_eq!(normal_two_sided(0.95), 1.959963984540054, epsilon = 1e-9);
        assert_abs_diff_eq!(normal_two_sided(0.99), 2.5758293035489004, epsilon = 1e-9);
    }

    #[test]
    fn chi_square_gof_uniform_counts() {
        let obs = [98.0, 105.0, 97.0, 100.0];
        let exp = [100.0, 100.0, 100.0, 100.0];
        let t = chi_square_gof(&obs, &exp, 5.0);
        assert_eq!(t.dof, 3);
        assert!(t.p_value > 0.9, "p {}", t.p_value);
    }

    #[test]
    fn independence_detects_diagonal_table() {
        let table = vec![vec![100.0, 0.0], vec![0.0, 100.0]];
        let t = chi_square_independence(&table);
        assert!(t.p_value < 1e-10);
    }

    #[test]
    fn ks_identical_samples_have_high_p() {
        let a: Vec<f64> = (0..500).map(|i| (i as f64 * 0.618).fract()).collect();
        let t = ks_two_sample(&a, &a);
        assert_eq!(t.statistic, 0.0);
        assert!(t.p_value > 0.999);
    }

    #[test]
    fn ks_shifted_samples_have_low_p() {
        let a: Vec<f64> = (0..500).map(|i| (i as f64 * 0.618).fract()).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 0.4).collect();
        let t = ks_two_sample(&a, &b);
        assert!(t.p_value < 1e-6);
    }
}
