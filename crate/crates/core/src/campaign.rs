//! Experiment orchestration: multi-trial averaged optimization runs,
//! terminal confidence intervals, baseline comparisons and the
//! common-random-number correlation probe.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dspsa::{
    self, draw_perturbation, eval_pair, NoisyLossOracle, RunConfig, RunTrace,
};
use crate::error::{Error, Result};
use crate::seed::{mix, PERTURB_TAG, TRIAL_TAG};
use crate::trace;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignConfig {
    /// Number of independent optimization trials.
    pub runs: usize,
    pub run_config: RunConfig,
    pub ci_replicates: usize,
    pub ci_level: f64,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("campaign needs at least one trial".into()));
        }
        if self.ci_replicates < 2 {
            return Err(Error::Config("confidence interval needs at least 2 replicates".into()));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::Config(format!("CI level must lie in (0, 1), got {}", self.ci_level)));
        }
        self.run_config.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub half_width: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub sample_min: f64,
    pub sample_max: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CampaignResult {
    pub trials: Vec<RunTrace>,
    /// Per-iteration mean of `(y+ + y-)/2` across successful trials;
    /// this is the quantity plotted as the loss trend.
    pub averaged: Vec<f64>,
    pub solutions: Vec<Vec<i64>>,
    /// Failed trials as `(trial index, message)`; failed trials do not
    /// contribute to the average.
    pub failures: Vec<(usize, String)>,
}

/// Run `config.runs` independent optimization trials with disjoint base
/// seeds derived from the master seed in `run_config.base_seed`.
pub fn run_campaign<P>(
    config: &CampaignConfig,
    oracle: &dyn NoisyLossOracle,
    project: P,
    repair: Option<&(dyn Fn(&mut [f64]) + Sync)>,
) -> Result<CampaignResult>
where
    P: Fn(&[f64]) -> Vec<f64> + Sync,
{
    config.validate()?;
    let master = config.run_config.base_seed;
    let trial_run = |t: usize| {
        let mut rc = config.run_config.clone();
        rc.base_seed = mix(master ^ TRIAL_TAG, t as u64);
        dspsa::run(&rc, oracle, &project, repair)
    };
    let outcomes: Vec<std::result::Result<RunTrace, Error>> = if oracle.parallel_safe() {
        (0..config.runs).into_par_iter().map(trial_run).collect()
    } else {
        (0..config.runs).map(trial_run).collect()
    };

    let mut trials = Vec::new();
    let mut failures = Vec::new();
    for (t, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(trace) => trials.push(trace),
            Err(e) => failures.push((t, e.to_string())),
        }
    }
    if trials.is_empty() {
        let (t, msg) = failures.remove(0);
        return Err(Error::Config(format!("all trials failed; trial {t}: {msg}")));
    }

    let iters = config.run_config.iterations;
    let mut averaged = vec![0.0; iters];
    for trace in &trials {
        for rec in &trace.records {
            averaged[rec.k] += (rec.y_plus + rec.y_minus) / 2.0;
        }
    }
    for v in averaged.iter_mut() {
        *v /= trials.len() as f64;
    }
    let solutions = trials.iter().map(|t| t.solution.clone()).collect();
    Ok(CampaignResult { trials, averaged, solutions, failures })
}

/// Student-t confidence interval for the mean loss at a fixed integer
/// solution, over `n` independent oracle evaluations.
pub fn terminal_ci(
    solution: &[i64],
    oracle: &dyn NoisyLossOracle,
    n: usize,
    level: f64,
    seed: u64,
) -> Result<ConfidenceInterval> {
    if n < 2 {
        return Err(Error::Config("terminal CI needs n >= 2".into()));
    }
    let point: Vec<f64> = solution.iter().map(|v| *v as f64).collect();
    let samples = sample_losses(&point, oracle, n, seed)?;
    Ok(ci_from_samples(&samples, level))
}

fn sample_losses(point: &[f64], oracle: &dyn NoisyLossOracle, n: usize, seed: u64) -> Result<Vec<f64>> {
    let eval = |i: usize| {
        oracle.evaluate(point, mix(seed, i as u64)).map_err(|source| Error::Oracle {
            k: i,
            point: point.to_vec(),
            source,
        })
    };
    if oracle.parallel_safe() {
        (0..n).into_par_iter().map(eval).collect()
    } else {
        (0..n).map(eval).collect()
    }
}

fn ci_from_samples(samples: &[f64], level: f64) -> ConfidenceInterval {
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let half_width = if var == 0.0 {
        0.0
    } else {
        let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("valid dof")
            .inverse_cdf((1.0 + level) / 2.0);
        t * (var / n as f64).sqrt()
    };
    let sample_min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let sample_max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    ConfidenceInterval {
        mean,
        half_width,
        lo: mean - half_width,
        hi: mean + half_width,
        n,
        sample_min,
        sample_max,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaselineResult {
    pub name: String,
    pub theta: Vec<i64>,
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
    /// Set when this plan's evaluations failed; failures are isolated
    /// per plan.
    pub error: Option<String>,
}

/// Mean loss per baseline plan over `n` evaluations each. All plans see
/// the same seed sequence, so identical plans get identical means.
pub fn evaluate_baselines(
    plans: &[(String, Vec<i64>)],
    oracle: &dyn NoisyLossOracle,
    n: usize,
    seed: u64,
) -> Vec<BaselineResult> {
    plans
        .iter()
        .map(|(name, theta)| {
            let point: Vec<f64> = theta.iter().map(|v| *v as f64).collect();
            match sample_losses(&point, oracle, n, seed) {
                Ok(samples) => {
                    let ci = ci_from_samples(&samples, 0.95);
                    let std_error = if samples.len() > 1 {
                        let var = samples.iter().map(|x| (x - ci.mean) * (x - ci.mean)).sum::<f64>()
                            / (samples.len() - 1) as f64;
                        (var / samples.len() as f64).sqrt()
                    } else {
                        0.0
                    };
                    BaselineResult {
                        name: name.clone(),
                        theta: theta.clone(),
                        mean: ci.mean,
                        std_error,
                        n,
                        error: None,
                    }
                }
                Err(e) => BaselineResult {
                    name: name.clone(),
                    theta: theta.clone(),
                    mean: f64::NAN,
                    std_error: f64::NAN,
                    n,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

/// Ranking table, cheapest first; failed plans sort last.
pub fn rank_baselines(results: &[BaselineResult]) -> Vec<&BaselineResult> {
    let mut sorted: Vec<&BaselineResult> = results.iter().collect();
    sorted.sort_by(|a, b| {
        a.mean
            .partial_cmp(&b.mean)
            .unwrap_or(std::cmp::Ordering::Greater)
    });
    sorted
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CrnProbe {
    pub n_pairs: usize,
    pub correlation: f64,
    pub t_statistic: f64,
    /// True when the one-sided test finds significantly positive
    /// correlation at the 5% level.
    pub significant_positive: bool,
    /// None when the samples were degenerate (zero variance).
    pub recommend_crn: Option<bool>,
}

/// Probe whether paired evaluations with shared seeds are positively
/// correlated at `theta`'s hypercube midpoint; CRN is recommended only
/// when they are, significantly.
pub fn crn_probe(
    oracle: &dyn NoisyLossOracle,
    theta: &[i64],
    n_pairs: usize,
    seed: u64,
) -> Result<CrnProbe> {
    if n_pairs < 10 {
        return Err(Error::Config("CRN probe needs at least 10 pairs".into()));
    }
    let mid: Vec<f64> = theta.iter().map(|v| *v as f64 + 0.5).collect();
    let mut ys_plus = Vec::with_capacity(n_pairs);
    let mut ys_minus = Vec::with_capacity(n_pairs);
    for j in 0..n_pairs {
        let mut rng = ChaCha8Rng::seed_from_u64(mix(seed ^ PERTURB_TAG, j as u64));
        let delta = draw_perturbation(theta.len(), &mut rng);
        let (y_plus, y_minus) = eval_pair(&mid, &delta, oracle, true, j, seed)?;
        ys_plus.push(y_plus);
        ys_minus.push(y_minus);
    }
    let n = n_pairs as f64;
    let mean_p = ys_plus.iter().sum::<f64>() / n;
    let mean_m = ys_minus.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut var_p = 0.0;
    let mut var_m = 0.0;
    for (yp, ym) in ys_plus.iter().zip(&ys_minus) {
        cov += (yp - mean_p) * (ym - mean_m);
        var_p += (yp - mean_p) * (yp - mean_p);
        var_m += (ym - mean_m) * (ym - mean_m);
    }
    if var_p == 0.0 || var_m == 0.0 {
        return Ok(CrnProbe {
            n_pairs,
            correlation: f64::NAN,
            t_statistic: f64::NAN,
            significant_positive: false,
            recommend_crn: None,
        });
    }
    let r = cov / (var_p.sqrt() * var_m.sqrt());
    let df = n - 2.0;
    let t_statistic = r * (df / (1.0 - r * r).max(f64::MIN_POSITIVE)).sqrt();
    let t_crit = StudentsT::new(0.0, 1.0, df).expect("valid dof").inverse_cdf(0.95);
    let significant_positive = t_statistic > t_crit;
    Ok(CrnProbe {
        n_pairs,
        correlation: r,
        t_statistic,
        significant_positive,
        recommend_crn: Some(significant_positive),
    })
}

/// Classic herd-immunity threshold `1 - 1/R0`.
pub fn herd_threshold(r0: f64) -> f64 {
    debug_assert!(r0 > 0.0);
    1.0 - 1.0 / r0
}

/// Write trial traces and the averaged trend into `dir`.
pub fn write_campaign_dir(dir: &Path, result: &CampaignResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (t, trial) in result.trials.iter().enumerate() {
        let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("trace_{t:03}.csv")))?);
        trace::write_trace_csv(trial, &mut f)?;
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(dir.join("averaged.csv"))?);
    trace::write_averaged_csv(&result.averaged, &mut f)?;
    Ok(())
}
