//! Exact and approximate tests used in the evaluation tables.

use serde::Serialize;
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;
use statrs::function::factorial::ln_factorial;

use crate::error::StatsError;

const BISECTION_STEPS: usize = 200;

/// Upper tail of the standard normal.
pub fn normal_sf(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Quantile of Beta(a, b) by bisection on the regularized incomplete beta
/// function, which is monotone in x.
pub fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if beta_reg(a, b, mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact two-sided binomial interval.
pub fn clopper_pearson_interval(successes: u64, n: u64, alpha: f64) -> Result<(f64, f64), StatsError> {
    if n == 0 {
        return Err(StatsError::Domain("n must be at least 1".into()));
    }
    if successes > n {
        return Err(StatsError::Domain(format!("successes {successes} exceed n {n}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::Domain(format!("alpha {alpha} outside (0, 1)")));
    }
    let (x, nf) = (successes as f64, n as f64);
    let half = alpha / 2.0;
    let lower = match successes {
        0 => 0.0,
        s if s == n => half.powf(1.0 / nf),
        _ => beta_quantile(half, x, nf - x + 1.0),
    };
    let upper = match successes {
        s if s == n => 1.0,
        0 => 1.0 - half.powf(1.0 / nf),
        _ => beta_quantile(1.0 - half, x + 1.0, nf - x),
    };
    Ok((lower, upper))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    /// The first sample tends to be larger.
    Greater,
    Less,
    TwoSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PMethod {
    /// Normal approximation with tie and continuity correction.
    Normal,
    /// Exact permutation distribution.
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MannWhitney {
    /// U statistic of the first sample.
    pub u: f64,
    pub p: f64,
    pub z: Option<f64>,
    pub method: PMethod,
}

/// Midranks (1-based) of the pooled sample, plus the tie groups' sizes.
fn midranks(pooled: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            ranks[order[k]] = rank;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

fn u_statistic(ranks: &[f64], n1: usize) -> f64 {
    let r1: f64 = ranks[..n1].iter().sum();
    r1 - (n1 * (n1 + 1)) as f64 / 2.0
}

pub fn mann_whitney(a: &[f64], b: &[f64], alternative: Alternative, method: PMethod) -> Result<MannWhitney, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::Domain("both samples must be non-empty".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::Domain("samples must be finite".into()));
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let u = u_statistic(&ranks, n1);
    match method {
        PMethod::Normal => {
            let n = (n1 + n2) as f64;
            let (n1f, n2f) = (n1 as f64, n2 as f64);
            let mu = n1f * n2f / 2.0;
            let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0));
            let var = n1f * n2f / 12.0 * ((n + 1.0) - tie_term);
            if var <= 0.0 {
                return Err(StatsError::Undefined("all observations are tied".into()));
            }
            let sd = var.sqrt();
            let z_of = |delta: f64| (delta - 0.5).max(0.0) / sd;
            let (z, p) = match alternative {
                Alternative::Greater => {
                    let z = (u - mu - 0.5) / sd;
                    (z, normal_sf(z))
                }
                Alternative::Less => {
                    let z = (u - mu + 0.5) / sd;
                    (z, 1.0 - normal_sf(z))
                }
                Alternative::TwoSided => {
                    let z = z_of((u - mu).abs());
                    (z, (2.0 * normal_sf(z)).min(1.0))
                }
            };
            Ok(MannWhitney {
                u,
                p,
                z: Some(z),
                method,
            })
        }
        PMethod::Exact => {
            let dist = exact_u_distribution(&ranks, n1)?;
            let total: f64 = dist.iter().map(|(_, c)| c).sum();
            let tail = |pred: &dyn Fn(f64) -> bool| dist.iter().filter(|(v, _)| pred(*v)).map(|(_, c)| c).sum::<f64>() / total;
            let eps = 1e-9;
            let mu = (n1 * n2) as f64 / 2.0;
            let p = match alternative {
                Alternative::Greater => tail(&|v| v >= u - eps),
                Alternative::Less => tail(&|v| v <= u + eps),
                Alternative::TwoSided => {
                    let d = (u - mu).abs();
                    tail(&|v| (v - mu).abs() >= d - eps).min(1.0)
                }
            };
            Ok(MannWhitney {
                u,
                p,
                z: None,
                method,
            })
        }
    }
}

/// Largest number of rank assignments enumerated when ties are present.
const MAX_ENUMERATION: f64 = 5.0e6;

/// `(u, count)` pairs of the permutation distribution of U.
fn exact_u_distribution(ranks: &[f64], n1: usize) -> Result<Vec<(f64, f64)>, StatsError> {
    let n = ranks.len();
    let n2 = n - n1;
    let tied = {
        let mut r = ranks.to_vec();
        r.sort_by(f64::total_cmp);
        r.windows(2).any(|w| w[0] == w[1])
    };
    if !tied {
        // Counts of U = k over all C(n, n1) splits, by the usual recurrence
        // on (n1, n2).
        let max_u = n1 * n2;
        let mut table = vec![vec![vec![0.0_f64; max_u + 1]; n2 + 1]; n1 + 1];
        for (i, row) in table.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                if i == 0 || j == 0 {
                    cell[0] = 1.0;
                }
            }
        }
        for i in 1..=n1 {
            for j in 1..=n2 {
                for k in 0..=i * j {
                    let take = if k >= j { table[i - 1][j][k - j] } else { 0.0 };
                    let skip = table[i][j - 1][k];
                    table[i][j][k] = take + skip;
                }
            }
        }
        return Ok(table[n1][n2]
            .iter()
            .enumerate()
            .filter(|(_, c)| **c > 0.0)
            .map(|(k, c)| (k as f64, *c))
            .collect());
    }
    let combos = (ln_factorial(n as u64) - ln_factorial(n1 as u64) - ln_factorial(n2 as u64)).exp();
    if combos > MAX_ENUMERATION {
        return Err(StatsError::Undefined(format!(
            "exact distribution with ties needs {combos:.0} enumerations"
        )));
    }
    let mut counts: Vec<(f64, f64)> = Vec::new();
    let mut chosen = Vec::with_capacity(n1);
    enumerate_subsets(ranks, n1, 0, &mut chosen, &mut |rank_sum| {
        let u = rank_sum - (n1 * (n1 + 1)) as f64 / 2.0;
        match counts.iter_mut().find(|(v, _)| (*v - u).abs() < 1e-9) {
            Some((_, c)) => *c += 1.0,
            None => counts.push((u, 1.0)),
        }
    });
    Ok(counts)
}

fn enumerate_subsets(ranks: &[f64], k: usize, start: usize, chosen: &mut Vec<f64>, visit: &mut dyn FnMut(f64)) {
    if chosen.len() == k {
        visit(chosen.iter().sum());
        return;
    }
    let need = k - chosen.len();
    for i in start..=ranks.len() - need {
        chosen.push(ranks[i]);
        enumerate_subsets(ranks, k, i + 1, chosen, visit);
        chosen.pop();
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Variance with divisor `n - ddof`.
pub fn variance(xs: &[f64], ddof: usize) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - ddof) as f64
}

pub fn sd_population(xs: &[f64]) -> f64 {
    variance(xs, 0).sqrt()
}

pub fn sd_sample(xs: &[f64]) -> f64 {
    variance(xs, 1).sqrt()
}

/// Standardized mean difference with the pooled sample variance.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::Domain("each sample needs at least two values".into()));
    }
    cohens_d_from_summary(
        mean(a),
        sd_sample(a),
        a.len(),
        mean(b),
        sd_sample(b),
        b.len(),
    )
}

pub fn cohens_d_from_summary(
    mean_a: f64,
    sd_a: f64,
    n_a: usize,
    mean_b: f64,
    sd_b: f64,
    n_b: usize,
) -> Result<f64, StatsError> {
    if n_a < 2 || n_b < 2 {
        return Err(StatsError::Domain("each sample needs at least two values".into()));
    }
    let (na, nb) = (n_a as f64, n_b as f64);
    let pooled = (((na - 1.0) * sd_a * sd_a + (nb - 1.0) * sd_b * sd_b) / (na + nb - 2.0)).sqrt();
    if pooled == 0.0 {
        return Err(StatsError::Undefined("pooled standard deviation is zero".into()));
    }
    Ok((mean_a - mean_b) / pooled)
}

fn ln_choose(n: u64, k: u64) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Two-sided Fisher exact test on `[[a, b], [c, d]]`.
pub fn fishers_exact_2x2(table: [[u64; 2]; 2]) -> f64 {
    let [[a, b], [c, d]] = table;
    let (r1, r2, c1) = (a + b, c + d, a + c);
    let n = r1 + r2;
    if r1 == 0 || r2 == 0 || c1 == 0 || c1 == n {
        return 1.0;
    }
    let ln_total = ln_choose(n, c1);
    let prob = |x: u64| (ln_choose(r1, x) + ln_choose(r2, c1 - x) - ln_total).exp();
    let observed = prob(a);
    let lo = c1.saturating_sub(r2);
    let hi = c1.min(r1);
    let p: f64 = (lo..=hi)
        .map(prob)
        .filter(|&q| q <= observed * (1.0 + 1e-7))
        .sum();
    p.min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub sd_population: f64,
    pub sd_sample: Option<f64>,
    pub min: f64,
    pub max: f64,
}

pub fn summarize(xs: &[f64]) -> Option<Summary> {
    if xs.is_empty() {
        return None;
    }
    Some(Summary {
        n: xs.len(),
        mean: mean(xs),
        sd_population: sd_population(xs),
        sd_sample: (xs.len() > 1).then(|| sd_sample(xs)),
        min: xs.iter().copied().fold(f64::INFINITY, f64::min),
        max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}
