//! Monte Carlo studies: coverage of the lower bound, consistency of the estimate and
//! the deviation bound on the discrepancy.
//!
//! Replicate `i` draws its path from generator stream `i` of the master seed, so every
//! report is a deterministic function of its configuration and replicates can run in
//! parallel. Reports serialize to CSV with `# key=value` comment lines carrying the
//! configuration and aggregates, followed by a header row and one row per record.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use statrs::distribution::{Binomial, DiscreteCDF};
use thiserror::Error;

use crate::counts::CountsTrie;
use crate::estimator::{discrepancy_within, tlb, EstimatorConfig, EstimatorError};
use crate::trees::{ContextTree, TreeError, WeightFunction};
use crate::vlmc::{ModelError, Simulator, VlmcModel};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("at least one replicate is required")]
    NoReplicates,
    #[error("sample size must exceed 2, got {0}")]
    SampleTooShort(usize),
    #[error("consistency needs c > 2(|A|-1) = {bound}, got {c}")]
    ConstantTooSmall { c: f64, bound: f64 },
    #[error("weight function is not summable over the alphabet")]
    NotSummable,
    #[error("empty {0} list")]
    EmptyList(&'static str),
    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile(&v, 0.5)
}

/// One-sided sign test: `P(X ≥ wins)` for `X ~ Binomial(wins + losses, 1/2)`.
pub fn sign_test_p(wins: u64, losses: u64) -> f64 {
    if wins == 0 {
        return 1.0;
    }
    let dist = Binomial::new(0.5, wins + losses).expect("valid binomial");
    dist.sf(wins - 1)
}

/// `p - 3·sqrt(p(1-p)/m)`: a frequency floor allowing three binomial standard deviations.
pub fn three_sigma_floor(p: f64, reps: usize) -> f64 {
    p - 3.0 * (p * (1.0 - p) / reps as f64).sqrt()
}

/// Deviation bound `1 - (|A|-1) / n^{c/(|A|-1) - 2}` on `P(d_n ≤ c·log2 n)`.
pub fn deviation_bound(alphabet_size: usize, n: usize, c: f64) -> f64 {
    let m = (alphabet_size - 1) as f64;
    1.0 - m / (n as f64).powf(c / m - 2.0)
}

fn write_csv<R: serde::Serialize>(comments: &[(String, String)], records: &[R]) -> Result<String, ExperimentError> {
    let mut out = String::new();
    for (k, v) in comments {
        out.push_str(&format!("# {k}={v}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    out.push_str(&String::from_utf8(bytes).expect("CSV is UTF-8"));
    Ok(out)
}

fn check_common(n: usize, reps: usize) -> Result<(), ExperimentError> {
    if reps == 0 {
        return Err(ExperimentError::NoReplicates);
    }
    if n <= 2 {
        return Err(ExperimentError::SampleTooShort(n));
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct CoverageConfig {
    /// Label echoed in the report (usually the model file path).
    pub model_label: String,
    pub n: usize,
    pub alpha: f64,
    pub reps: usize,
    pub seed: u64,
    /// Weight function for the reported distance to the true tree.
    pub phi: WeightFunction<f64>,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CoverageRecord {
    pub replicate: usize,
    pub covered: bool,
    pub distance: f64,
    pub leaves: usize,
    pub depth: usize,
    #[serde(skip)]
    pub runtime: Duration,
}

#[derive(Debug, Clone)]
pub struct CoverageReport {
    pub config: CoverageConfig,
    pub c: f64,
    pub window_ok: bool,
    pub true_tree: ContextTree,
    pub records: Vec<CoverageRecord>,
}

impl CoverageReport {
    /// Fraction of replicates whose estimate precedes the true context tree.
    pub fn coverage(&self) -> f64 {
        self.records.iter().filter(|r| r.covered).count() as f64 / self.records.len() as f64
    }

    /// Nominal level minus three binomial standard deviations.
    pub fn coverage_floor(&self) -> f64 {
        three_sigma_floor(1.0 - self.config.alpha, self.records.len())
    }

    pub fn distance_quantiles(&self) -> [f64; 3] {
        let mut d: Vec<f64> = self.records.iter().map(|r| r.distance).collect();
        d.sort_by(f64::total_cmp);
        [quantile(&d, 0.25), quantile(&d, 0.5), quantile(&d, 0.75)]
    }

    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        let cfg = &self.config;
        let [q1, q2, q3] = self.distance_quantiles();
        let comments = vec![
            ("experiment".into(), "coverage".into()),
            ("model".into(), cfg.model_label.clone()),
            ("n".into(), cfg.n.to_string()),
            ("alpha".into(), cfg.alpha.to_string()),
            ("c".into(), self.c.to_string()),
            ("window_ok".into(), self.window_ok.to_string()),
            ("replicates".into(), cfg.reps.to_string()),
            ("seed".into(), cfg.seed.to_string()),
            ("coverage".into(), self.coverage().to_string()),
            ("coverage_floor".into(), self.coverage_floor().to_string()),
            ("distance_quartiles".into(), format!("{q1};{q2};{q3}")),
        ];
        write_csv(&comments, &self.records)
    }
}

/// Simulates `reps` paths, estimates the lower bound at level `alpha` for each, and
/// records whether it precedes the model's (minimized) context tree.
pub fn coverage_experiment(model: &VlmcModel<f64>, config: &CoverageConfig) -> Result<CoverageReport, ExperimentError> {
    check_common(config.n, config.reps)?;
    let truth = model.minimize()?;
    let sim = Simulator::new(&truth)?;
    let est_cfg = EstimatorConfig::from_alpha(model.alphabet().size(), config.n, config.alpha)?;
    let records = (0..config.reps)
        .into_par_iter()
        .map(|i| {
            let start = Instant::now();
            let sample = sim.sample(config.n, config.seed, i as u64);
            let trie = CountsTrie::build(&sample, est_cfg.prune_floor(config.n));
            let tree = tlb(&trie, &est_cfg)?;
            Ok(CoverageRecord {
                replicate: i,
                covered: tree.precedes(truth.tree())?,
                distance: tree.hamming(truth.tree(), &config.phi)?,
                leaves: tree.leaves().len(),
                depth: tree.depth(),
                runtime: start.elapsed(),
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    Ok(CoverageReport {
        config: config.clone(),
        c: est_cfg.c,
        window_ok: est_cfg.window_ok().unwrap_or(true),
        true_tree: truth.tree().clone(),
        records,
    })
}

#[derive(Debug, Clone)]
pub struct CurveConfig {
    pub model_label: String,
    pub grid: Vec<usize>,
    pub c: f64,
    pub phi: WeightFunction<f64>,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CurveRecord {
    pub n: usize,
    pub replicate: usize,
    pub distance: f64,
    pub covered: bool,
    pub leaves: usize,
    #[serde(skip)]
    pub runtime: Duration,
}

#[derive(Debug, Clone)]
pub struct CurveReport {
    pub config: CurveConfig,
    pub true_tree: ContextTree,
    /// Distance from the root tree to the true tree: the largest possible distance
    /// for an estimate that precedes it.
    pub root_distance: f64,
    pub records: Vec<CurveRecord>,
}

impl CurveReport {
    pub fn distances_at(&self, n: usize) -> Vec<f64> {
        let mut rows: Vec<&CurveRecord> = self.records.iter().filter(|r| r.n == n).collect();
        rows.sort_by_key(|r| r.replicate);
        rows.into_iter().map(|r| r.distance).collect()
    }

    pub fn median_at(&self, n: usize) -> f64 {
        median(&self.distances_at(n))
    }

    /// Sign test that distances at `large` are below those at `small`, pairing
    /// replicates; ties are dropped. Returns `(wins, losses, p)`.
    pub fn paired_sign_test(&self, small: usize, large: usize) -> (u64, u64, f64) {
        let a = self.distances_at(small);
        let b = self.distances_at(large);
        let wins = a.iter().zip(&b).filter(|(x, y)| y < x).count() as u64;
        let losses = a.iter().zip(&b).filter(|(x, y)| y > x).count() as u64;
        (wins, losses, sign_test_p(wins, losses))
    }

    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        let cfg = &self.config;
        let grid: Vec<String> = cfg.grid.iter().map(usize::to_string).collect();
        let medians: Vec<String> = cfg.grid.iter().map(|&n| self.median_at(n).to_string()).collect();
        let comments = vec![
            ("experiment".into(), "curve".into()),
            ("model".into(), cfg.model_label.clone()),
            ("grid".into(), grid.join(";")),
            ("c".into(), cfg.c.to_string()),
            ("phi".into(), format!("{:?}", cfg.phi)),
            ("replicates".into(), cfg.reps.to_string()),
            ("seed".into(), cfg.seed.to_string()),
            ("root_distance".into(), self.root_distance.to_string()),
            ("median_distance".into(), medians.join(";")),
        ];
        write_csv(&comments, &self.records)
    }
}

/// Distance between the estimate and the true tree along a grid of sample sizes.
/// Replicate `i` uses the same generator stream at every grid point.
pub fn consistency_curve(model: &VlmcModel<f64>, config: &CurveConfig) -> Result<CurveReport, ExperimentError> {
    if config.grid.is_empty() {
        return Err(ExperimentError::EmptyList("grid"));
    }
    for &n in &config.grid {
        check_common(n, config.reps)?;
    }
    let k = model.alphabet().size();
    let bound = 2.0 * (k - 1) as f64;
    if !(config.c > bound) {
        return Err(ExperimentError::ConstantTooSmall { c: config.c, bound });
    }
    if !config.phi.is_summable(k) {
        return Err(ExperimentError::NotSummable);
    }
    let truth = model.minimize()?;
    let sim = Simulator::new(&truth)?;
    let est_cfg = EstimatorConfig::with_c(config.c)?;
    let jobs: Vec<(usize, usize)> = config
        .grid
        .iter()
        .flat_map(|&n| (0..config.reps).map(move |i| (n, i)))
        .collect();
    let records = jobs
        .into_par_iter()
        .map(|(n, i)| {
            let start = Instant::now();
            let sample = sim.sample(n, config.seed, i as u64);
            let trie = CountsTrie::build(&sample, est_cfg.prune_floor(n));
            let tree = tlb(&trie, &est_cfg)?;
            Ok(CurveRecord {
                n,
                replicate: i,
                distance: tree.hamming(truth.tree(), &config.phi)?,
                covered: tree.precedes(truth.tree())?,
                leaves: tree.leaves().len(),
                runtime: start.elapsed(),
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;
    let root_distance = ContextTree::root(model.alphabet()).hamming(truth.tree(), &config.phi)?;
    Ok(CurveReport {
        config: config.clone(),
        true_tree: truth.tree().clone(),
        root_distance,
        records,
    })
}

#[derive(Debug, Clone)]
pub struct DeviationConfig {
    pub model_label: String,
    pub n: usize,
    pub c_list: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct DeviationRecord {
    pub c: f64,
    pub threshold: f64,
    pub satisfied: usize,
    pub replicates: usize,
    pub frequency: f64,
    pub bound: f64,
    pub floor: f64,
}

#[derive(Debug, Clone)]
pub struct DeviationReport {
    pub config: DeviationConfig,
    pub records: Vec<DeviationRecord>,
}

impl DeviationReport {
    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        let cfg = &self.config;
        let cs: Vec<String> = cfg.c_list.iter().map(f64::to_string).collect();
        let comments = vec![
            ("experiment".into(), "deviation".into()),
            ("model".into(), cfg.model_label.clone()),
            ("n".into(), cfg.n.to_string()),
            ("c_list".into(), cs.join(";")),
            ("replicates".into(), cfg.reps.to_string()),
            ("seed".into(), cfg.seed.to_string()),
        ];
        write_csv(&comments, &self.records)
    }
}

/// Frequency of `d_n(X, P) ≤ c·log2(n)` for each `c`, next to the analytic bound.
pub fn deviation_check(model: &VlmcModel<f64>, config: &DeviationConfig) -> Result<DeviationReport, ExperimentError> {
    check_common(config.n, config.reps)?;
    if config.c_list.is_empty() {
        return Err(ExperimentError::EmptyList("c"));
    }
    let configs = config
        .c_list
        .iter()
        .map(|&c| EstimatorConfig::with_c(c))
        .collect::<Result<Vec<_>, _>>()?;
    let truth = model.minimize()?;
    let sim = Simulator::new(&truth)?;
    let n = config.n;
    let floor = configs
        .iter()
        .map(|cfg| cfg.prune_floor(n))
        .fold(f64::INFINITY, f64::min);
    let hits: Vec<Vec<bool>> = (0..config.reps)
        .into_par_iter()
        .map(|i| {
            let sample = sim.sample(n, config.seed, i as u64);
            let trie = CountsTrie::build(&sample, floor);
            configs
                .iter()
                .map(|cfg| discrepancy_within(&trie, &truth, cfg.threshold(n)))
                .collect::<Result<Vec<bool>, _>>()
        })
        .collect::<Result<_, EstimatorError>>()?;
    let k = model.alphabet().size();
    let records = configs
        .iter()
        .enumerate()
        .map(|(j, cfg)| {
            let satisfied = hits.iter().filter(|h| h[j]).count();
            let bound = deviation_bound(k, n, cfg.c);
            DeviationRecord {
                c: cfg.c,
                threshold: cfg.threshold(n),
                satisfied,
                replicates: config.reps,
                frequency: satisfied as f64 / config.reps as f64,
                bound,
                floor: three_sigma_floor(bound.max(0.0), config.reps),
            }
        })
        .collect();
    Ok(DeviationReport {
        config: config.clone(),
        records,
    })
}
