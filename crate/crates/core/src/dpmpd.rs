//! Best-of-`w` search over rotated densest-packing designs, and empirical
//! convergence-rate studies built on it.

use std::fmt::Write as _;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::designgen::{generate_with_attempts, Design, PointSet, DEFAULT_MAX_ATTEMPTS};
use crate::error::{Error, Result};
use crate::lattices::BaseLattice;
use crate::metrics::{metrics_report, score, score_serde, ProjectionMetrics, DEFAULT_FILL_SAMPLES};
use crate::rotations::{build, sample_random_givens, sample_spec, validate_spec, MagicRotationSpec};
use crate::textfmt::format_f64;

/// Recommended number of trials.
pub const DEFAULT_W: usize = 100;
/// Trials per design in rate studies.
pub const RATE_STUDY_W: usize = 20;

/// How each trial chooses its rotation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RotationPolicy {
    /// Magic families where they exist (p in {2, 3, 4, 6, 8}), random Givens otherwise.
    Magic,
    /// Random Givens products in every dimension.
    Random,
    /// The same rotation in every trial; only the perturbation varies.
    Fixed(MagicRotationSpec),
}

/// Alternative score functions receive the point set and return a value to maximize.
pub type ScoreFn = dyn Fn(&PointSet) -> f64 + Sync + Send;

#[derive(Clone, Debug)]
pub struct ConstructConfig {
    pub p: usize,
    pub n: usize,
    pub w: usize,
    pub master_seed: u64,
    pub base: BaseLattice,
    pub policy: RotationPolicy,
    pub max_delta_attempts: usize,
}

impl ConstructConfig {
    pub fn new(p: usize, n: usize, w: usize, master_seed: u64) -> Self {
        ConstructConfig {
            p,
            n,
            w,
            master_seed,
            base: BaseLattice::DensestPacking,
            policy: RotationPolicy::Magic,
            max_delta_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub spec: Option<MagicRotationSpec>,
    #[serde(with = "score_serde")]
    pub score: f64,
    /// The trial became the running best when trials are taken in index order.
    pub accepted: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub best: Design,
    #[serde(with = "score_serde")]
    pub best_score: f64,
    pub trials: Vec<TrialRecord>,
    pub w: usize,
    pub master_seed: u64,
}

/// SplitMix64 finalizer.
fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of trial `index` under `master_seed`; independent of scheduling.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    splitmix(master_seed ^ splitmix(index.wrapping_add(0x243f_6a88_85a3_08d3)))
}

fn validate_config(cfg: &ConstructConfig) -> Result<()> {
    if !(2..=8).contains(&cfg.p) {
        return Err(Error::Dimension { p: cfg.p, min: 2, max: 8 });
    }
    if cfg.n < 2 {
        return Err(Error::Precondition(format!("need n >= 2, got {}", cfg.n)));
    }
    if cfg.w == 0 {
        return Err(Error::Precondition("need w >= 1".into()));
    }
    if let RotationPolicy::Fixed(spec) = &cfg.policy {
        if spec.dimension() != cfg.p {
            return Err(Error::Shape(format!(
                "rotation spec is for p = {}, design has p = {}",
                spec.dimension(),
                cfg.p
            )));
        }
        let report = validate_spec(spec, cfg.base);
        if !report.is_valid() {
            return Err(Error::InvalidSpec(report));
        }
    }
    Ok(())
}

fn run_trial(
    cfg: &ConstructConfig,
    seed: u64,
    score_fn: Option<&ScoreFn>,
) -> (Option<MagicRotationSpec>, Result<(Design, f64)>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = match &cfg.policy {
        RotationPolicy::Magic => sample_spec(cfg.p, cfg.base, &mut rng),
        RotationPolicy::Random => Ok(sample_random_givens(cfg.p, &mut rng)),
        RotationPolicy::Fixed(spec) => Ok(spec.clone()),
    };
    let spec = match spec {
        Ok(s) => s,
        Err(e) => return (None, Err(e)),
    };
    let design_seed = rng.next_u64();
    let outcome = (|| {
        let r = build(&spec)?;
        let g = cfg.base.generator(cfg.p)?.rotated(&r, cfg.base, spec.clone())?;
        let design = generate_with_attempts(&g, cfg.n, Some(spec.clone()), design_seed, cfg.max_delta_attempts)?;
        let s = match score_fn {
            Some(f) => f(&design.points),
            None => score(&design.points)?,
        };
        Ok((design, s))
    })();
    (Some(spec), outcome)
}

/// Runs `w` independent trials and keeps the highest-scoring design; ties go
/// to the lowest trial index.
pub fn construct(cfg: &ConstructConfig) -> Result<SearchReport> {
    construct_with_score(cfg, None)
}

pub fn construct_with_score(cfg: &ConstructConfig, score_fn: Option<&ScoreFn>) -> Result<SearchReport> {
    validate_config(cfg)?;
    let results: Vec<_> = (0..cfg.w)
        .into_par_iter()
        .map(|t| {
            let seed = trial_seed(cfg.master_seed, t as u64);
            (seed, run_trial(cfg, seed, score_fn))
        })
        .collect();
    let mut best: Option<(usize, f64)> = None;
    let mut trials = Vec::with_capacity(cfg.w);
    for (index, (seed, (spec, outcome))) in results.iter().enumerate() {
        let (score, error) = match outcome {
            Ok((_, s)) => (*s, None),
            Err(e) => (f64::NEG_INFINITY, Some(e.to_string())),
        };
        let accepted = outcome.is_ok()
            && match best {
                None => true,
                Some((_, b)) => score > b,
            };
        if accepted {
            best = Some((index, score));
        }
        trials.push(TrialRecord {
            index,
            seed: *seed,
            spec: spec.clone(),
            score,
            accepted,
            error,
        });
    }
    let (best_index, best_score) = best.ok_or(Error::SearchExhausted)?;
    let best = match &results[best_index].1 .1 {
        Ok((design, _)) => design.clone(),
        Err(_) => unreachable!("accepted trials succeeded"),
    };
    Ok(SearchReport {
        best,
        best_score,
        trials,
        w: cfg.w,
        master_seed: cfg.master_seed,
    })
}

#[derive(Clone, Debug)]
pub struct RateStudyConfig {
    pub p: usize,
    pub base: BaseLattice,
    /// `Magic` or `Random`.
    pub policy: RotationPolicy,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub master_seed: u64,
    pub w: usize,
    pub fill_samples: usize,
}

impl RateStudyConfig {
    pub fn new(p: usize, policy: RotationPolicy, n_list: Vec<usize>, reps: usize, master_seed: u64) -> Self {
        RateStudyConfig {
            p,
            base: BaseLattice::DensestPacking,
            policy,
            n_list,
            reps,
            master_seed,
            w: RATE_STUDY_W,
            fill_samples: DEFAULT_FILL_SAMPLES,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateRecord {
    pub n: usize,
    pub rep: usize,
    pub metrics: ProjectionMetrics,
}

/// OLS slope of `ln(median metric)` against `ln n`; `None` when a median is
/// zero or not finite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub metric: String,
    pub k: usize,
    pub medians: Vec<f64>,
    pub slope: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub family: String,
    pub policy: String,
    pub p: usize,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub w: usize,
    pub master_seed: u64,
    pub records: Vec<RateRecord>,
    pub slopes: Vec<SlopeFit>,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Ordinary least squares slope of `y` on `x`.
pub fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

type Extractor = Box<dyn Fn(&ProjectionMetrics) -> f64>;

impl RateStudy {
    pub fn slope(&self, metric: &str, k: usize) -> Option<f64> {
        self.slopes
            .iter()
            .find(|s| s.metric == metric && s.k == k)
            .and_then(|s| s.slope)
    }

    /// Per-`n` medians of `f` across replicates, in `n_list` order.
    pub fn medians_by<F: Fn(&ProjectionMetrics) -> f64>(&self, f: F) -> Vec<f64> {
        self.n_list
            .iter()
            .map(|&n| {
                let vals: Vec<f64> = self.records.iter().filter(|r| r.n == n).map(|r| f(&r.metrics)).collect();
                median(&vals)
            })
            .collect()
    }

    fn fit_slopes(&mut self) {
        let mut targets: Vec<(String, usize, Extractor)> = Vec::new();
        for k in 1..=self.p {
            targets.push(("min_proj_sep".into(), k, Box::new(move |m| m.min_proj_sep[k - 1])));
        }
        targets.push(("max_uni_fill".into(), 0, Box::new(|m| m.max_uni_fill())));
        targets.push(("sep".into(), 0, Box::new(|m| m.sep)));
        targets.push(("fill_estimate".into(), 0, Box::new(|m| m.fill_estimate)));
        let ln_n: Vec<f64> = self.n_list.iter().map(|&n| (n as f64).ln()).collect();
        self.slopes = targets
            .into_iter()
            .map(|(metric, k, f)| {
                let medians = self.medians_by(f);
                let slope = medians
                    .iter()
                    .all(|m| m.is_finite() && *m > 0.0)
                    .then(|| ols_slope(&ln_n, &medians.iter().map(|m| m.ln()).collect::<Vec<_>>()));
                SlopeFit { metric, k, medians, slope }
            })
            .collect();
    }

    /// Long-format CSV with header `n,rep,k,metric_name,value`; scalar
    /// metrics use `k = 0`.
    pub fn to_long_csv(&self) -> String {
        let mut out = String::from("n,rep,k,metric_name,value\n");
        for r in &self.records {
            let m = &r.metrics;
            let mut row = |k: usize, name: &str, v: f64| {
                writeln!(out, "{},{},{},{},{}", r.n, r.rep, k, name, format_f64(v)).expect("write to string");
            };
            for (i, v) in m.min_proj_sep.iter().enumerate() {
                row(i + 1, "min_proj_sep", *v);
            }
            for (i, v) in m.uni_fill.iter().enumerate() {
                row(i + 1, "uni_fill", *v);
            }
            for (i, v) in m.c_hat.iter().enumerate() {
                row(i + 1, "c_hat", *v);
            }
            row(0, "sep", m.sep);
            row(0, "fill_estimate", m.fill_estimate);
            row(0, "score", m.score);
        }
        out
    }
}

/// Runs one search per `(n, replicate)` and fits log-log slopes to the
/// per-`n` medians.
pub fn rate_study(cfg: &RateStudyConfig) -> Result<RateStudy> {
    if cfg.n_list.len() < 3 {
        return Err(Error::Precondition(format!(
            "rate studies need at least three sizes, got {}",
            cfg.n_list.len()
        )));
    }
    if cfg.n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition("sizes must be strictly increasing".into()));
    }
    if cfg.reps == 0 {
        return Err(Error::Precondition("need at least one replicate".into()));
    }
    if matches!(cfg.policy, RotationPolicy::Fixed(_)) {
        return Err(Error::Precondition("rate studies use the magic or random policy".into()));
    }
    let mut records = Vec::with_capacity(cfg.n_list.len() * cfg.reps);
    for (ni, &n) in cfg.n_list.iter().enumerate() {
        for rep in 0..cfg.reps {
            let seed = trial_seed(cfg.master_seed, (ni * cfg.reps + rep) as u64);
            let construct_cfg = ConstructConfig {
                p: cfg.p,
                n,
                w: cfg.w,
                master_seed: seed,
                base: cfg.base,
                policy: cfg.policy.clone(),
                max_delta_attempts: DEFAULT_MAX_ATTEMPTS,
            };
            let report = construct(&construct_cfg)?;
            let metrics = metrics_report(&report.best.points, cfg.fill_samples)?;
            records.push(RateRecord { n, rep, metrics });
        }
    }
    let mut study = RateStudy {
        family: cfg.base.short_name().to_string(),
        policy: match cfg.policy {
            RotationPolicy::Magic => "magic",
            _ => "random",
        }
        .to_string(),
        p: cfg.p,
        n_list: cfg.n_list.clone(),
        reps: cfg.reps,
        w: cfg.w,
        master_seed: cfg.master_seed,
        records,
        slopes: Vec::new(),
    };
    study.fit_slopes();
    Ok(study)
}
