//! Small numerically-careful statistics helpers shared by the estimators.

/// Pairwise (cascade) summation: O(log n) error growth and a fixed reduction
/// tree, so results do not depend on thread scheduling.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Moment summary of an i.i.d. sample.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SampleStats {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance (n - 1 denominator).
    pub variance: f64,
    /// Fourth central moment (biased, n denominator); drives the variance CI.
    pub m4: f64,
    /// Half-width of the 95% normal CI for the mean.
    pub ci95_half: f64,
    /// Half-width of the 95% CI for the *variance*, from the asymptotic
    /// normal theory of S^2: Var(S^2) ~ (m4 - sigma^4 (n-3)/(n-1)) / n.
    pub var_ci95_half: f64,
}

impl SampleStats {
    pub fn from_sample(xs: &[f64]) -> SampleStats {
        let n = xs.len();
        assert!(n >= 2, "need at least two observations");
        let nf = n as f64;
        let mean = pairwise_sum(xs) / nf;
        let dev2: Vec<f64> = xs.iter().map(|&x| (x - mean) * (x - mean)).collect();
        let m2 = pairwise_sum(&dev2) / nf;
        let dev4: Vec<f64> = dev2.iter().map(|&d| d * d).collect();
        let m4 = pairwise_sum(&dev4) / nf;
        let variance = m2 * nf / (nf - 1.0);
        let ci95_half = 1.96 * (variance / nf).sqrt();
        let var_var = (m4 - variance * variance * (nf - 3.0) / (nf - 1.0)).max(0.0) / nf;
        let var_ci95_half = 1.96 * var_var.sqrt();
        SampleStats { n, mean, variance, m4, ci95_half, var_ci95_half }
    }
}

/// Wilson 95% confidence interval for a binomial proportion.
pub fn wilson_ci(successes: u32, trials: u32) -> (f64, f64) {
    assert!(trials > 0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z = 1.959_963_984_540_054; // Phi^{-1}(0.975)
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = p + z2 / (2.0 * n);
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (((centre - half) / denom).max(0.0), ((centre + half) / denom).min(1.0))
}

/// Upper quantile of the chi-square distribution by the Wilson-Hilferty
/// approximation (relative error well under 1% for df >= 3, plenty for
/// goodness-of-fit thresholds).
pub fn chi_square_quantile(df: usize, upper_tail: f64) -> f64 {
    assert!(df >= 1);
    // z for the matching standard-normal upper tail; table for the tails we use.
    let z = match upper_tail {
        t if (t - 0.01).abs() < 1e-12 => 2.326_347_874_040_841,
        t if (t - 0.001).abs() < 1e-12 => 3.090_232_306_167_813,
        t if (t - 0.05).abs() < 1e-12 => 1.644_853_626_951_472,
        _ => panic!("chi_square_quantile supports tails 0.05, 0.01, 0.001"),
    };
    let d = df as f64;
    let a = 2.0 / (9.0 * d);
    d * (1.0 - a + z * a.sqrt()).powi(3)
}

/// Result of a chi-square goodness-of-fit test.
#[derive(Debug, Clone)]
pub struct GofReport {
    pub stat: f64,
    pub df: usize,
    pub critical: f64,
    pub reject: bool,
}

/// Chi-square GOF of observed non-negative integer counts against a Poisson
/// law with the given mean. Cells with expected count < 5 are pooled into
/// their neighbours; `alpha` is the test level (0.05, 0.01 or 0.001).
pub fn poisson_gof(observations: &[u64], mean: f64, alpha: f64) -> GofReport {
    assert!(!observations.is_empty() && mean > 0.0);
    let n = observations.len() as f64;
    let kmax = *observations.iter().max().unwrap() as usize;
    // Poisson pmf computed iteratively, histogram of observations.
    let mut hist = vec![0u64; kmax + 1];
    for &x in observations {
        hist[x as usize] += 1;
    }
    let mut pmf = Vec::with_capacity(kmax + 2);
    let mut p = (-mean).exp();
    pmf.push(p);
    for k in 1..=kmax {
        p *= mean / k as f64;
        pmf.push(p);
    }
    let tail = (1.0 - pmf.iter().sum::<f64>()).max(0.0);

    // Pool low-expectation cells left to right; the final cell absorbs the tail.
    let mut cells: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for k in 0..=kmax {
        acc_o += hist[k] as f64;
        acc_e += pmf[k] * n;
        if acc_e >= 5.0 {
            cells.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    acc_e += tail * n;
    if let Some(last) = cells.last_mut() {
        if acc_e < 5.0 {
            last.0 += acc_o;
            last.1 += acc_e;
        } else {
            cells.push((acc_o, acc_e));
        }
    } else {
        cells.push((acc_o, acc_e));
    }

    let stat: f64 = cells
        .iter()
        .map(|&(o, e)| {
            let d = o - e;
            d * d / e
        })
        .sum();
    let df = cells.len().saturating_sub(1).max(1);
    let critical = chi_square_quantile(df, alpha);
    GofReport { stat, df, critical, reject: stat > critical }
}
