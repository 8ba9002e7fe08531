//! Replica orchestration, estimators and trend regressions.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::numeric::{csum, quantile_sorted};
use crate::stream::Stream;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("slope fit needs at least 4 grid points, got {0}")]
    DegenerateGrid(usize),
    #[error("could not build a worker pool: {0}")]
    Pool(String),
}

/// Monte Carlo estimate with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McResult {
    pub estimate: f64,
    pub stderr: f64,
    pub ci95: (f64, f64),
    pub n_replicas: usize,
    pub n_discarded: usize,
    pub seed: u64,
    pub config_hash: String,
}

impl McResult {
    pub fn new(estimate: f64, stderr: f64, n_replicas: usize, n_discarded: usize) -> Self {
        McResult {
            estimate,
            stderr,
            ci95: (estimate - 1.96 * stderr, estimate + 1.96 * stderr),
            n_replicas,
            n_discarded,
            seed: 0,
            config_hash: String::new(),
        }
    }

    /// Sample mean and its standard error. Values are reduced in order with
    /// compensated sums, so the result does not depend on scheduling.
    pub fn from_samples(values: &[f64], n_discarded: usize) -> Self {
        let n = values.len();
        if n == 0 {
            return McResult::new(f64::NAN, f64::NAN, 0, n_discarded);
        }
        let mean = csum(values.iter().copied()) / n as f64;
        let se = if n > 1 {
            let ss = csum(values.iter().map(|v| (v - mean) * (v - mean)));
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        McResult::new(mean, se, n, n_discarded)
    }

    pub fn with_provenance(mut self, seed: u64, config_hash: &str) -> Self {
        self.seed = seed;
        self.config_hash = config_hash.to_string();
        self
    }

    /// Number of standard errors between the estimate and `target`.
    pub fn z_to(&self, target: f64) -> f64 {
        z_score(self.estimate - target, self.stderr)
    }

    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.estimate - target).abs() <= k * self.stderr
    }
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

/// Median with a normal-theory standard error `1.2533·σ̂/√n`, where the
/// scale is estimated robustly as `IQR/1.349`.
pub fn median_result(values: &[f64], n_discarded: usize) -> McResult {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    if v.is_empty() {
        return McResult::new(f64::NAN, f64::NAN, 0, n_discarded);
    }
    let med = quantile_sorted(&v, 0.5);
    let iqr = quantile_sorted(&v, 0.75) - quantile_sorted(&v, 0.25);
    let se = 1.2533 * (iqr / 1.349) / (v.len() as f64).sqrt();
    McResult::new(med, se, v.len(), n_discarded)
}

/// Mean after dropping the given fraction from each tail.
pub fn trimmed_mean(values: &[f64], frac: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let k = (v.len() as f64 * frac).floor() as usize;
    let kept = &v[k..v.len() - k];
    csum(kept.iter().copied()) / kept.len() as f64
}

/// Ratio of two sample means over paired replicas, with a delta-method
/// standard error.
pub fn ratio_of_means(num: &[f64], den: &[f64]) -> McResult {
    assert_eq!(num.len(), den.len(), "paired samples required");
    let n = num.len();
    let mx = csum(num.iter().copied()) / n as f64;
    let my = csum(den.iter().copied()) / n as f64;
    let r = mx / my;
    let resid: Vec<f64> = num.iter().zip(den).map(|(x, y)| x - r * y).collect();
    let ss = csum(resid.iter().map(|e| e * e));
    let se = (ss / (n - 1) as f64 / n as f64).sqrt() / my.abs();
    McResult::new(r, se, n, 0)
}

/// Runs `f` for replicas `0..n`, each with its own stream keyed by
/// `(seed, purpose, index)`, on at most `workers` threads. Results come back
/// in index order.
pub fn run_replicas<T, F>(
    n: usize,
    seed: u64,
    purpose: &str,
    workers: usize,
    f: F,
) -> Result<Vec<T>, McError>
where
    T: Send,
    F: Fn(u64, &mut Stream) -> T + Sync,
{
    let job = || {
        (0..n as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = Stream::new(seed, purpose, i);
                f(i, &mut rng)
            })
            .collect::<Vec<T>>()
    };
    if workers == 0 {
        return Ok(job());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| McError::Pool(e.to_string()))?;
    Ok(pool.install(job))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verdict {
    pub pass: bool,
    pub z: f64,
    pub diff: f64,
    pub joint_se: f64,
}

/// Two independent estimates agree when they differ by at most three joint
/// standard errors.
pub fn equivalence_test(a: &McResult, b: &McResult) -> Verdict {
    let diff = a.estimate - b.estimate;
    let joint_se = (a.stderr * a.stderr + b.stderr * b.stderr).sqrt();
    Verdict {
        pass: diff.abs() <= 3.0 * joint_se,
        z: z_score(diff, joint_se),
        diff,
        joint_se,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrendReport {
    /// `(x, statistic, stderr)` rows.
    pub grid: Vec<(f64, f64, f64)>,
    pub slope: f64,
    pub slope_se: f64,
    pub intercept: f64,
    pub intercept_se: f64,
    pub band: (f64, f64),
    pub pass: bool,
}

/// Weighted least squares with weights `1/se²`; plain least squares with
/// residual-based errors when any standard error is zero.
pub fn slope_fit(
    xs: &[f64],
    ys: &[f64],
    ses: &[f64],
    band: (f64, f64),
) -> Result<TrendReport, McError> {
    let n = xs.len();
    if n < 4 || ys.len() != n || ses.len() != n {
        return Err(McError::DegenerateGrid(n.min(ys.len()).min(ses.len())));
    }
    let weighted = ses.iter().all(|&s| s > 0.0 && s.is_finite());
    let w: Vec<f64> = if weighted {
        ses.iter().map(|s| 1.0 / (s * s)).collect()
    } else {
        vec![1.0; n]
    };
    let sw = csum(w.iter().copied());
    let xbar = csum(xs.iter().zip(&w).map(|(x, w)| w * x)) / sw;
    let ybar = csum(ys.iter().zip(&w).map(|(y, w)| w * y)) / sw;
    let sxx = csum(xs.iter().zip(&w).map(|(x, w)| w * (x - xbar) * (x - xbar)));
    let sxy = csum(
        xs.iter()
            .zip(ys)
            .zip(&w)
            .map(|((x, y), w)| w * (x - xbar) * (y - ybar)),
    );
    if sxx == 0.0 {
        return Err(McError::DegenerateGrid(n));
    }
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let (slope_var, scale) = if weighted {
        (1.0 / sxx, 1.0)
    } else {
        let rss = csum(
            xs.iter()
                .zip(ys)
                .map(|(x, y)| (y - intercept - slope * x).powi(2)),
        );
        let s2 = rss / (n - 2) as f64;
        (s2 / sxx, s2)
    };
    let intercept_var = scale / sw + xbar * xbar * slope_var;
    Ok(TrendReport {
        grid: xs
            .iter()
            .zip(ys)
            .zip(ses)
            .map(|((&x, &y), &s)| (x, y, s))
            .collect(),
        slope,
        slope_se: slope_var.sqrt(),
        intercept,
        intercept_se: intercept_var.sqrt(),
        band,
        pass: slope >= band.0 && slope <= band.1,
    })
}
