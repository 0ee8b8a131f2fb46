//! Poisson-limit diagnostics for Monte-Carlo cycle counts.
//!
//! The per-class counts of a [`TrialBatch`](crate::randcomplex::TrialBatch)
//! should approach independent Poisson laws with the predicted intensities.
//! This module measures how close a batch is: factorial moments, z-scores
//! of the mean, total-variation distance to the predicted law, and pairwise
//! covariances. All reductions use compensated summation so results are
//! stable to 1e-12 under reordering.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::kahan::{self, KahanSum};
use crate::randcomplex::TrialBatch;

fn falling_factorial(x: u64, order: u32) -> f64 {
    let mut product = 1.0f64;
    for step in 0..order as u64 {
        if step >= x {
            return 0.0;
        }
        product *= (x - step) as f64;
    }
    product
}

/// Sample means of the falling factorials `X(X−1)⋯(X−m+1)` for each
/// requested order `m`.
pub fn factorial_moments(counts: &[u64], orders: &[u32]) -> BTreeMap<u32, f64> {
    orders
        .iter()
        .map(|&m| {
            (
                m,
                kahan::mean(counts.iter().map(|&x| falling_factorial(x, m))),
            )
        })
        .collect()
}

fn mean_and_variance(values: impl Iterator<Item = f64> + Clone, count: usize) -> (f64, f64) {
    let mean = kahan::mean(values.clone());
    if count < 2 {
        return (mean, 0.0);
    }
    let mut acc = KahanSum::default();
    for v in values {
        let d = v - mean;
        acc.add(d * d);
    }
    (mean, acc.value() / (count - 1) as f64)
}

/// Fit of one count sequence against a Poisson law.
#[derive(Clone, Debug, Serialize)]
pub struct PoissonFit {
    pub lambda: f64,
    pub mean: f64,
    pub variance: f64,
    /// `sqrt(sample variance / trials)`
    pub std_error: f64,
    /// `(mean − λ) / std_error`, 0 when the standard error vanishes
    pub z_score: f64,
    /// total-variation distance between the empirical histogram and
    /// Poisson(λ), truncated where the predicted mass drops below 1e-12
    pub tv_distance: f64,
    /// sample mean of `X(X−1)` (→ λ² for a Poisson law)
    pub fact2_mean: f64,
    pub fact2_std_error: f64,
}

const PMF_TRUNCATION: f64 = 1e-12;

fn poisson_pmf_table(lambda: f64, at_least: usize) -> Vec<f64> {
    let mut table = vec![(-lambda).exp()];
    let mut k = 0usize;
    loop {
        let last = *table.last().unwrap();
        if k >= at_least && (last < PMF_TRUNCATION || k > 10_000) {
            break;
        }
        k += 1;
        table.push(last * lambda / k as f64);
    }
    table
}

/// Compare counts with a Poisson(λ) law.
pub fn poisson_fit(counts: &[u64], lambda: f64) -> PoissonFit {
    assert!(lambda >= 0.0);
    let trials = counts.len();
    let (mean, variance) = mean_and_variance(counts.iter().map(|&x| x as f64), trials);
    let std_error = if trials > 0 {
        (variance / trials as f64).sqrt()
    } else {
        0.0
    };
    let z_score = if std_error > 0.0 {
        (mean - lambda) / std_error
    } else {
        0.0
    };
    let max_count = counts.iter().copied().max().unwrap_or(0) as usize;
    let pmf = poisson_pmf_table(lambda, max_count);
    let mut histogram = vec![0u64; pmf.len().max(max_count + 1)];
    for &x in counts {
        histogram[x as usize] += 1;
    }
    let mut tv = KahanSum::default();
    for k in 0..histogram.len() {
        let empirical = if trials > 0 {
            histogram[k] as f64 / trials as f64
        } else {
            0.0
        };
        let predicted = pmf.get(k).copied().unwrap_or(0.0);
        tv.add((empirical - predicted).abs());
    }
    // mass of the predicted law beyond the table is below the truncation
    let tv_distance = (0.5 * tv.value()).min(1.0);
    let (fact2_mean, fact2_var) = mean_and_variance(
        counts.iter().map(|&x| falling_factorial(x, 2)),
        trials,
    );
    let fact2_std_error = if trials > 0 {
        (fact2_var / trials as f64).sqrt()
    } else {
        0.0
    };
    PoissonFit {
        lambda,
        mean,
        variance,
        std_error,
        z_score,
        tv_distance,
        fact2_mean,
        fact2_std_error,
    }
}

/// Sample covariance matrix of class-major count rows.
pub fn cross_covariance(rows: &[Vec<u64>]) -> Vec<Vec<f64>> {
    let classes = rows.len();
    if classes == 0 {
        return Vec::new();
    }
    let trials = rows[0].len();
    let means: Vec<f64> = rows
        .iter()
        .map(|r| kahan::mean(r.iter().map(|&x| x as f64)))
        .collect();
    let mut cov = vec![vec![0.0f64; classes]; classes];
    for i in 0..classes {
        for j in i..classes {
            let mut acc = KahanSum::default();
            for t in 0..trials {
                acc.add((rows[i][t] as f64 - means[i]) * (rows[j][t] as f64 - means[j]));
            }
            let value = if trials > 1 {
                acc.value() / (trials - 1) as f64
            } else {
                0.0
            };
            cov[i][j] = value;
            cov[j][i] = value;
        }
    }
    cov
}

/// Fit summary for one class of a batch.
#[derive(Clone, Debug, Serialize)]
pub struct ClassFit {
    pub canonical: String,
    pub word_len: usize,
    #[serde(flatten)]
    pub fit: PoissonFit,
}

/// Tolerances for the verification gates: `multiplier`·SE windows plus an
/// absolute `slack_coefficient / n` allowance for finite-size bias, and a
/// hard cap on the total-variation distance.
#[derive(Clone, Copy, Debug)]
pub struct GatePolicy {
    pub se_multiplier: f64,
    pub slack_coefficient: f64,
    pub tv_max: f64,
}

impl Default for GatePolicy {
    fn default() -> Self {
        GatePolicy {
            se_multiplier: 4.0,
            slack_coefficient: 10.0,
            tv_max: 0.05,
        }
    }
}

/// Full comparison of a Monte-Carlo batch against its Poisson predictions.
#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub n: usize,
    pub trials: usize,
    pub master_seed: u64,
    pub conditioned: bool,
    pub classes: Vec<ClassFit>,
    /// sample covariance matrix of the per-trial counts, class order as in
    /// `classes`
    pub covariance: Vec<Vec<f64>>,
}

impl FitReport {
    /// Build the report for a batch; `lambdas` aligns with `batch.classes`.
    pub fn from_batch(batch: &TrialBatch, lambdas: &[f64]) -> FitReport {
        assert_eq!(batch.classes.len(), lambdas.len());
        let classes = batch
            .classes
            .iter()
            .zip(batch.counts.iter().zip(lambdas))
            .map(|(word, (counts, &lambda))| ClassFit {
                canonical: word.to_string(),
                word_len: word.len(),
                fit: poisson_fit(counts, lambda),
            })
            .collect();
        FitReport {
            n: batch.n,
            trials: batch.trials,
            master_seed: batch.master_seed,
            conditioned: batch.conditioned,
            classes,
            covariance: cross_covariance(&batch.counts),
        }
    }

    /// Human-readable list of violated gates; empty when everything passes.
    pub fn gate_failures(&self, policy: &GatePolicy) -> Vec<String> {
        let mut failures = Vec::new();
        let slack = policy.slack_coefficient / self.n as f64;
        for class in &self.classes {
            let f = &class.fit;
            let mean_window = policy.se_multiplier * f.std_error + slack;
            if (f.mean - f.lambda).abs() > mean_window {
                failures.push(format!(
                    "{}: mean {:.6} outside {:.6} ± {:.6}",
                    class.canonical, f.mean, f.lambda, mean_window
                ));
            }
            let fact2_window = policy.se_multiplier * f.fact2_std_error + slack;
            if (f.fact2_mean - f.lambda * f.lambda).abs() > fact2_window {
                failures.push(format!(
                    "{}: second factorial moment {:.6} outside {:.6} ± {:.6}",
                    class.canonical,
                    f.fact2_mean,
                    f.lambda * f.lambda,
                    fact2_window
                ));
            }
            if f.tv_distance >= policy.tv_max {
                failures.push(format!(
                    "{}: TV distance {:.4} ≥ {:.4}",
                    class.canonical, f.tv_distance, policy.tv_max
                ));
            }
        }
        for i in 0..self.classes.len() {
            for j in (i + 1)..self.classes.len() {
                let var_i = self.covariance[i][i];
                let var_j = self.covariance[j][j];
                let cov = self.covariance[i][j];
                let se = ((var_i * var_j + cov * cov) / self.trials as f64).sqrt();
                if cov.abs() > policy.se_multiplier * se + slack {
                    failures.push(format!(
                        "cov({}, {}) = {:.6} not consistent with independence",
                        self.classes[i].canonical, self.classes[j].canonical, cov
                    ));
                }
            }
        }
        failures
    }

    /// CSV rendering: one row per class, 12 significant digits, LF endings.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("canonical,word_len,lambda,mean,var,z,tv\n");
        for class in &self.classes {
            let f = &class.fit;
            out.push_str(&format!(
                "{},{},{:.11e},{:.11e},{:.11e},{:.11e},{:.11e}\n",
                class.canonical, class.word_len, f.lambda, f.mean, f.variance, f.z_score,
                f.tv_distance
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Poisson};

    fn poisson_draws(lambda: f64, count: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = Poisson::new(lambda).unwrap();
        (0..count).map(|_| dist.sample(&mut rng) as u64).collect()
    }

    #[test]
    fn factorial_moment_examples() {
        let m = factorial_moments(&[2, 0, 1], &[1, 2]);
        assert!((m[&1] - 1.0).abs() < 1e-15);
        assert!((m[&2] - 2.0 / 3.0).abs() < 1e-15);
        let zeros = factorial_moments(&[0; 10], &[1, 2, 3]);
        assert!(zeros.values().all(|&v| v == 0.0));
    }

    #[test]
    fn first_factorial_moment_is_the_mean() {
        let counts = [3u64, 1, 4, 1, 5, 9, 2, 6];
        let m = factorial_moments(&counts, &[1]);
        let mean = kahan::mean(counts.iter().map(|&x| x as f64));
        assert_eq!(m[&1], mean);
    }

    #[test]
    fn synthetic_poisson_factorial_moments() {
        let lambda = 0.8;
        let draws = poisson_draws(lambda, 40_000, 12);
        let m = factorial_moments(&draws, &[1, 2, 3]);
        for order in 1..=3u32 {
            let expected = lambda.powi(order as i32);
            let sample: Vec<f64> = draws
                .iter()
                .map(|&x| falling_factorial(x, order))
                .collect();
            let (_, var) = mean_and_variance(sample.iter().copied(), sample.len());
            let se = (var / draws.len() as f64).sqrt();
            assert!(
                (m[&order] - expected).abs() < 4.0 * se,
                "order {order}: {} vs {expected} (se {se})",
                m[&order]
            );
        }
    }

    #[test]
    fn fit_of_all_zero_counts() {
        let fit = poisson_fit(&[0; 100], 0.0);
        assert_eq!(fit.tv_distance, 0.0);
        assert_eq!(fit.z_score, 0.0);
        assert_eq!(fit.mean, 0.0);
    }

    #[test]
    fn fit_of_synthetic_poisson_half() {
        let draws = poisson_draws(0.5, 10_000, 3);
        let fit = poisson_fit(&draws, 0.5);
        assert!(fit.z_score.abs() < 4.0, "z = {}", fit.z_score);
        assert!(fit.tv_distance < 0.02, "tv = {}", fit.tv_distance);
    }

    #[test]
    fn poisson_mean_and_variance_agree() {
        let draws = poisson_draws(1.3, 20_000, 8);
        let fit = poisson_fit(&draws, 1.3);
        // SE of (X−μ)² − X, the statistic whose mean vanishes for a Poisson
        let mean = fit.mean;
        let stat: Vec<f64> = draws
            .iter()
            .map(|&x| {
                let d = x as f64 - mean;
                d * d - x as f64
            })
            .collect();
        let (stat_mean, stat_var) = mean_and_variance(stat.iter().copied(), stat.len());
        let se = (stat_var / stat.len() as f64).sqrt();
        assert!(
            stat_mean.abs() < 4.0 * se,
            "variance/mean mismatch: {stat_mean} (se {se})"
        );
        assert!((fit.variance / fit.mean - 1.0).abs() < 0.1);
    }

    #[test]
    fn duplicated_class_covariance_equals_variance() {
        let draws = poisson_draws(0.7, 5_000, 21);
        let rows = vec![draws.clone(), draws.clone()];
        let cov = cross_covariance(&rows);
        assert!((cov[0][1] - cov[0][0]).abs() < 1e-12);
        let fit = poisson_fit(&draws, 0.7);
        assert!((cov[0][0] - fit.variance).abs() < 1e-12);
    }

    #[test]
    fn independent_columns_have_small_covariance() {
        let rows = vec![
            poisson_draws(0.6, 20_000, 31),
            poisson_draws(1.1, 20_000, 32),
        ];
        let cov = cross_covariance(&rows);
        let se = ((cov[0][0] * cov[1][1] + cov[0][1] * cov[0][1]) / 20_000f64).sqrt();
        assert!(cov[0][1].abs() < 4.0 * se, "cov {} se {se}", cov[0][1]);
    }

    #[test]
    fn report_is_stable_under_trial_permutation() {
        let counts = poisson_draws(0.9, 4_000, 77);
        let fit = poisson_fit(&counts, 0.9);
        let mut reversed = counts.clone();
        reversed.reverse();
        let fit_rev = poisson_fit(&reversed, 0.9);
        assert!((fit.mean - fit_rev.mean).abs() < 1e-12);
        assert!((fit.variance - fit_rev.variance).abs() < 1e-12);
        assert!((fit.tv_distance - fit_rev.tv_distance).abs() < 1e-12);
        assert!((fit.fact2_mean - fit_rev.fact2_mean).abs() < 1e-12);
    }

    #[test]
    fn gates_pass_on_faithful_synthetic_batches() {
        let batch = TrialBatch {
            n: 2000,
            trials: 5_000,
            master_seed: 0,
            conditioned: true,
            max_word_len: 3,
            classes: vec!["SSS1".parse().unwrap(), "SSR1".parse().unwrap()],
            counts: vec![
                poisson_draws(0.5, 5_000, 41),
                poisson_draws(1.0, 5_000, 42),
            ],
        };
        let report = FitReport::from_batch(&batch, &[0.5, 1.0]);
        let failures = report.gate_failures(&GatePolicy::default());
        assert!(failures.is_empty(), "{failures:?}");
        // a wrong prediction trips the mean gate
        let wrong = FitReport::from_batch(&batch, &[0.9, 1.0]);
        assert!(!wrong.gate_failures(&GatePolicy::default()).is_empty());
    }

    #[test]
    fn csv_shape() {
        let batch = TrialBatch {
            n: 100,
            trials: 50,
            master_seed: 1,
            conditioned: false,
            max_word_len: 3,
            classes: vec!["SSS1".parse().unwrap()],
            counts: vec![vec![0; 50]],
        };
        let report = FitReport::from_batch(&batch, &[0.5]);
        let csv = report.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "canonical,word_len,lambda,mean,var,z,tv");
        assert_eq!(lines.count(), 1);
        assert!(csv.ends_with('\n'));
        assert!(!csv.contains('\r'));
    }
}
