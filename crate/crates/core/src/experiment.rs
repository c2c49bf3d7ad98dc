//! Monte-Carlo experiments, presets, file-based screening and CSV reports.
//!
//! Every trial draws its data from `derive_trial_rng(master_seed, trial, 0)`
//! and its grouping and cross-validation seeds from streams 1 and 2, so a
//! trial's output does not depend on which worker runs it. Rows are sorted by
//! `(method, K, m, beta_min, trial)` before writing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array2;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datagen::{generate_beta, load_design_csv, load_vector_csv, observe, perturb_one_entry, DesignKind, SimSpec};
use crate::error::{MugError, Result};
use crate::grouping::{derive_trial_rng, random_grouping, GroupingKind};
use crate::metrics::{aggregate, mean_std, SummaryRow, TrialRecord};
use crate::partition::Grouping;
use crate::problem::{normalize_matrix, DesignProblem, GroundTruth};
use crate::screening::{
    combine_mug_lcv, lcv_screen, sis_screen, LcvConfig, Method, MugConfig, MugScreener, ScreeningResult,
};
use crate::solver::{compute_lambda_max, kkt_check, solve_group_lasso, solve_lasso, SolverConfig};

const STREAM_DATA: u64 = 0;
const STREAM_GROUPING: u64 = 1;
const STREAM_LCV: u64 = 2;

/// Which experiment `simulate` runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Protocol {
    /// Vary the number of groupings `K`, redrawing data per trial.
    #[default]
    KSweep,
    /// Vary the group size `m` at the largest `K` of `k_sweep`.
    MSweep,
    /// Vary the magnitude of one coefficient.
    BetaMinSweep,
    /// Fixed `(X, w)`, repeated over grouping seeds, random and adaptive.
    FixedDesign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub protocol: Protocol,
    pub sim: SimSpec,
    pub methods: Vec<Method>,
    pub mug: MugConfig,
    pub lcv: LcvConfig,
    pub k_sweep: Vec<usize>,
    pub m_sweep: Vec<usize>,
    pub beta_min_sweep: Vec<f64>,
    pub trials: usize,
    pub output_dir: PathBuf,
    pub master_seed: u64,
    /// Write measured wall-clock times; otherwise `wall_time_s` is 0 so that
    /// outputs are byte-reproducible.
    pub record_timings: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            protocol: Protocol::KSweep,
            sim: SimSpec::default(),
            methods: vec![Method::Mug, Method::Sis, Method::Lcv, Method::MugPlusLcv],
            mug: MugConfig::default(),
            lcv: LcvConfig::default(),
            k_sweep: vec![0, 10, 20, 30, 40, 50],
            m_sweep: (2..=10).collect(),
            beta_min_sweep: vec![0.1, 0.5, 1.0, 2.0],
            trials: 50,
            output_dir: PathBuf::from("results"),
            master_seed: 0,
            record_timings: false,
        }
    }
}

/// Names accepted by [`preset`].
pub const PRESET_NAMES: &[&str] = &[
    "fig3", "ind_a", "ind_b", "ind_c", "ind_d", "ind_e", "ind_f", "top_a", "top_b", "top_c", "top_d", "top_e",
    "top_f", "rl_a", "rl_b", "m_sweep", "bmin_sweep",
];

/// Experiment presets.
///
/// `ind_a..c` and `top_a..c` are the Gaussian-design K sweeps with
/// `(n, k) = (100, 10), (300, 30), (500, 50)` at `p = 1000`. Since the TOP
/// panels follow the IND panels, `ind_d..f` and `top_d..f` are accepted as
/// aliases of `top_a..c`. `rl_a`/`rl_b` use `p = 587`, `n = 148` and
/// `k = 10`/`20`; without a CSV design they fall back to a Toeplitz design of
/// the same shape.
pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let base = ExperimentConfig::default();
    let gaussian = |design: DesignKind, n: usize, k: usize| ExperimentConfig {
        sim: SimSpec {
            design,
            n,
            k,
            ..SimSpec::default()
        },
        ..ExperimentConfig::default()
    };
    let cfg = match name {
        "fig3" => ExperimentConfig {
            protocol: Protocol::FixedDesign,
            sim: SimSpec {
                p: 100,
                n: 30,
                k: 5,
                sigma: 1.0,
                beta_min_magnitude: 1.0,
                ..SimSpec::default()
            },
            methods: vec![Method::Mug],
            mug: MugConfig {
                big_k: 50,
                m_max: 2,
                ..MugConfig::default()
            },
            k_sweep: vec![50],
            trials: 200,
            ..base
        },
        "ind_a" => gaussian(DesignKind::Ind, 100, 10),
        "ind_b" => gaussian(DesignKind::Ind, 300, 30),
        "ind_c" => gaussian(DesignKind::Ind, 500, 50),
        "top_a" | "top_d" | "ind_d" => gaussian(DesignKind::Top, 100, 10),
        "top_b" | "top_e" | "ind_e" => gaussian(DesignKind::Top, 300, 30),
        "top_c" | "top_f" | "ind_f" => gaussian(DesignKind::Top, 500, 50),
        "rl_a" | "rl_b" => ExperimentConfig {
            sim: SimSpec {
                design: DesignKind::Top,
                p: 587,
                n: 148,
                k: if name == "rl_a" { 10 } else { 20 },
                ..SimSpec::default()
            },
            ..base
        },
        "m_sweep" => ExperimentConfig {
            protocol: Protocol::MSweep,
            sim: SimSpec {
                beta_min_magnitude: 2.0,
                ..SimSpec::default()
            },
            methods: vec![Method::Mug],
            k_sweep: vec![100],
            ..base
        },
        "bmin_sweep" => ExperimentConfig {
            protocol: Protocol::BetaMinSweep,
            sim: SimSpec {
                beta_min_magnitude: 2.0,
                ..SimSpec::default()
            },
            methods: vec![Method::Mug],
            k_sweep: vec![50],
            ..base
        },
        other => {
            return Err(MugError::config(
                "preset",
                format!("unknown preset {other:?}; expected one of {}", PRESET_NAMES.join(", ")),
            ))
        }
    };
    Ok(cfg)
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(MugError::config("trials", "must be at least 1"));
        }
        if self.methods.is_empty() {
            return Err(MugError::config("methods", "must list at least one method"));
        }
        self.sim.validate()?;
        self.mug.validate()?;
        if self.methods.iter().any(|m| matches!(m, Method::Lcv | Method::MugPlusLcv)) {
            self.lcv.validate()?;
        }
        match self.protocol {
            Protocol::KSweep | Protocol::FixedDesign if self.k_sweep.is_empty() => {
                Err(MugError::config("k_sweep", "must not be empty"))
            }
            Protocol::MSweep if self.m_sweep.is_empty() || self.m_sweep.contains(&0) => {
                Err(MugError::config("m_sweep", "must be nonempty with entries >= 1"))
            }
            Protocol::BetaMinSweep
                if self.beta_min_sweep.is_empty() || self.beta_min_sweep.iter().any(|b| !(*b >= 0.0)) =>
            {
                Err(MugError::config("beta_min_sweep", "must be nonempty with nonnegative entries"))
            }
            Protocol::MSweep | Protocol::BetaMinSweep if self.k_sweep.is_empty() => {
                Err(MugError::config("k_sweep", "must hold the K used for the sweep"))
            }
            _ => Ok(()),
        }
    }

    fn max_k(&self) -> usize {
        self.k_sweep.iter().copied().max().unwrap_or(0)
    }

    fn wants(&self, m: Method) -> bool {
        self.methods.contains(&m)
    }
}

/// Output of a Monte-Carlo sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub records: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    /// Distinct warnings raised by the screening runs.
    pub warnings: Vec<String>,
}

struct Instance {
    problem: DesignProblem,
    truth: GroundTruth,
}

/// Designs are redrawn per trial unless they come from a file.
fn fixed_design(config: &ExperimentConfig) -> Result<Option<Array2<f64>>> {
    match config.sim.design {
        DesignKind::Csv => {
            let path = config.sim.csv_path.as_deref().ok_or_else(|| MugError::config("sim.csv_path", "missing"))?;
            let x = load_design_csv(path, config.sim.csv_header)?;
            if config.sim.k > x.ncols() {
                return Err(MugError::config(
                    "sim.k",
                    format!("k = {} exceeds p = {} of {}", config.sim.k, x.ncols(), path.display()),
                ));
            }
            Ok(Some(x))
        }
        _ => Ok(None),
    }
}

fn draw_design(config: &ExperimentConfig, fixed: Option<&Array2<f64>>, rng: &mut impl rand::Rng) -> Result<Array2<f64>> {
    match fixed {
        Some(x) => Ok(x.clone()),
        None => config.sim.design_matrix(rng),
    }
}

fn draw_instance(config: &ExperimentConfig, fixed: Option<&Array2<f64>>, trial: usize) -> Result<Instance> {
    let mut rng = derive_trial_rng(config.master_seed, trial as u64, STREAM_DATA);
    let x = draw_design(config, fixed, &mut rng)?;
    let truth = generate_beta(x.ncols(), config.sim.k, config.sim.beta_min_magnitude, config.sim.sigma, &mut rng)?;
    let problem = observe(&x, &truth, &mut rng)?;
    Ok(Instance { problem, truth })
}

fn stream_seed(master: u64, trial: usize, stream: u64) -> u64 {
    derive_trial_rng(master, trial as u64, stream).next_u64()
}

fn seconds(config: &ExperimentConfig, start: Instant) -> f64 {
    if config.record_timings {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    }
}

/// One trial's records for every requested method at the given `K` values
/// and one group size.
struct TrialRun<'a> {
    config: &'a ExperimentConfig,
    trial: usize,
    instance: &'a Instance,
    lcv: Option<(ScreeningResult, f64)>,
    records: Vec<TrialRecord>,
    warnings: Vec<String>,
}

impl<'a> TrialRun<'a> {
    fn new(config: &'a ExperimentConfig, trial: usize, instance: &'a Instance) -> Result<Self> {
        let lcv = if config.wants(Method::Lcv) || config.wants(Method::MugPlusLcv) {
            let start = Instant::now();
            let cfg = LcvConfig {
                seed: stream_seed(config.master_seed, trial, STREAM_LCV),
                ..config.lcv.clone()
            };
            let res = lcv_screen(&instance.problem, &cfg)?;
            Some((res, seconds(config, start)))
        } else {
            None
        };
        Ok(TrialRun {
            config,
            trial,
            instance,
            lcv,
            records: Vec::new(),
            warnings: Vec::new(),
        })
    }

    fn push(&mut self, method: Method, k: usize, m: usize, estimate: &crate::SupportSet, time: f64) {
        let mut r = TrialRecord::score(method, k, m, self.trial, estimate, &self.instance.truth.support);
        r.wall_time_s = time;
        self.records.push(r);
    }

    /// Runs the stepper for group size `m` and records each `K` in `ks`.
    fn run(&mut self, m: usize, ks: &[usize]) -> Result<()> {
        let cfg = self.config;
        let needs_mug = cfg.wants(Method::Mug)
            || cfg.wants(Method::Sis)
            || cfg.wants(Method::MugPlusLcv)
            || cfg.wants(Method::LassoOnly);
        if let Some((lcv, t)) = self.lcv.clone() {
            if cfg.wants(Method::Lcv) {
                for &k in ks {
                    self.push(Method::Lcv, k, m, &lcv.estimate, t);
                }
            }
        }
        if !needs_mug {
            return Ok(());
        }
        let mug_cfg = MugConfig {
            m_max: m,
            seed: stream_seed(cfg.master_seed, self.trial, STREAM_GROUPING),
            ..cfg.mug.clone()
        };
        let start = Instant::now();
        let mut screener = MugScreener::new(&self.instance.problem, &mug_cfg)?;
        let mut sorted: Vec<usize> = ks.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for k in sorted {
            while screener.iterations() < k {
                screener.step()?;
            }
            let elapsed = seconds(cfg, start);
            let estimate = screener.estimate().clone();
            if k == 0 && (cfg.wants(Method::Mug) || cfg.wants(Method::LassoOnly)) {
                self.push(Method::LassoOnly, 0, m, &estimate, elapsed);
            } else if k > 0 && cfg.wants(Method::Mug) {
                self.push(Method::Mug, k, m, &estimate, elapsed);
            }
            if cfg.wants(Method::Sis) {
                let t = Instant::now();
                let sis = sis_screen(&self.instance.problem, estimate.len())?;
                let st = seconds(cfg, t);
                self.push(Method::Sis, k, m, &sis.estimate, st);
            }
            if cfg.wants(Method::MugPlusLcv) {
                if let Some((lcv, lt)) = self.lcv.clone() {
                    let mug = ScreeningResult {
                        estimate,
                        ..lcv.clone()
                    };
                    let both = combine_mug_lcv(&mug, &lcv);
                    self.push(Method::MugPlusLcv, k, m, &both.estimate, elapsed + lt);
                }
            }
        }
        self.warnings.extend(screener.into_result().warnings);
        // lasso_only rows at K = 0 even when the sweep starts above 0.
        if cfg.wants(Method::LassoOnly) && !ks.contains(&0) {
            let lasso = crate::screening::lasso_screen(&self.instance.problem, &cfg.mug.solver)?;
            self.push(Method::LassoOnly, 0, m, &lasso.estimate, 0.0);
        }
        Ok(())
    }
}

fn finish(mut records: Vec<TrialRecord>, warnings: Vec<Vec<String>>) -> Result<SweepOutput> {
    records.sort_by(|a, b| {
        (a.method, a.k_groupings, a.m)
            .cmp(&(b.method, b.k_groupings, b.m))
            .then(a.beta_min.unwrap_or(0.0).total_cmp(&b.beta_min.unwrap_or(0.0)))
            .then(a.trial.cmp(&b.trial))
    });
    for r in &records {
        r.check_invariants()?;
    }
    let summary = aggregate(&records)?;
    let mut all: Vec<String> = warnings.into_iter().flatten().collect();
    all.sort();
    all.dedup();
    Ok(SweepOutput {
        records,
        summary,
        warnings: all,
    })
}

fn run_trials<F>(config: &ExperimentConfig, per_trial: F) -> Result<SweepOutput>
where
    F: Fn(usize) -> Result<(Vec<TrialRecord>, Vec<String>)> + Sync,
{
    config.validate()?;
    let results = (0..config.trials)
        .into_par_iter()
        .map(|t| per_trial(t))
        .collect::<Result<Vec<_>>>()?;
    let (records, warnings): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    finish(records.into_iter().flatten().collect(), warnings)
}

/// FPR/FNR of every method as a function of `K`.
pub fn run_k_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.validate()?;
    let fixed = fixed_design(config)?;
    run_trials(config, |trial| {
        let instance = draw_instance(config, fixed.as_ref(), trial)?;
        let mut run = TrialRun::new(config, trial, &instance)?;
        run.run(config.mug.m_max, &config.k_sweep)?;
        Ok((run.records, run.warnings))
    })
}

/// FPR/FNR as a function of the group size at `K = max(k_sweep)`.
pub fn run_m_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.validate()?;
    let fixed = fixed_design(config)?;
    let k = config.max_k();
    run_trials(config, |trial| {
        let instance = draw_instance(config, fixed.as_ref(), trial)?;
        let mut run = TrialRun::new(config, trial, &instance)?;
        for &m in &config.m_sweep {
            run.run(m, &[k])?;
        }
        Ok((run.records, run.warnings))
    })
}

/// Changes one coefficient's magnitude across `beta_min_sweep`, keeping the
/// design, the other coefficients, the perturbed position and the noise
/// fixed within a trial.
pub fn run_beta_min_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    config.validate()?;
    let fixed = fixed_design(config)?;
    let k = config.max_k();
    run_trials(config, |trial| {
        let mut rng = derive_trial_rng(config.master_seed, trial as u64, STREAM_DATA);
        let x = draw_design(config, fixed.as_ref(), &mut rng)?;
        let base = generate_beta(x.ncols(), config.sim.k, config.sim.beta_min_magnitude, config.sim.sigma, &mut rng)?;
        let mut records = Vec::new();
        let mut warnings = Vec::new();
        for &b in &config.beta_min_sweep {
            let mut local = rng.clone();
            let truth = perturb_one_entry(&base, b, &mut local);
            let problem = observe(&x, &truth, &mut local)?;
            let instance = Instance { problem, truth };
            let mut run = TrialRun::new(config, trial, &instance)?;
            run.run(config.mug.m_max, &[k])?;
            for mut r in run.records {
                r.beta_min = Some(b);
                records.push(r);
            }
            warnings.extend(run.warnings);
        }
        Ok((records, warnings))
    })
}

/// Runs the sweep selected by `config.protocol` (except the fixed-design
/// protocol, see [`run_fixed_design`]).
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepOutput> {
    match config.protocol {
        Protocol::KSweep => run_k_sweep(config),
        Protocol::MSweep => run_m_sweep(config),
        Protocol::BetaMinSweep => run_beta_min_sweep(config),
        Protocol::FixedDesign => Err(MugError::config("protocol", "fixed_design is run by run_fixed_design")),
    }
}

/// One repetition of the fixed-design protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepetitionRecord {
    pub strategy: GroupingKind,
    pub repetition: usize,
    pub cardinality: usize,
    pub fpr: f64,
    pub fnr: f64,
    pub contains_truth: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategySummary {
    pub strategy: GroupingKind,
    pub card_mean: f64,
    pub card_std: f64,
    pub card_min: usize,
    pub card_max: usize,
    pub containment_rate: f64,
    pub repetitions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedDesignOutput {
    pub records: Vec<RepetitionRecord>,
    pub summary: Vec<StrategySummary>,
    /// `|S|` of the initial Lasso stage (shared by all repetitions).
    pub lasso_cardinality: usize,
    pub truth: GroundTruth,
}

/// Fixes `(X, beta*, w)` from the master seed and repeats multiple-grouping
/// screening `trials` times per strategy, varying only the grouping seed.
pub fn run_fixed_design(config: &ExperimentConfig) -> Result<FixedDesignOutput> {
    config.validate()?;
    let fixed = fixed_design(config)?;
    let instance = draw_instance(config, fixed.as_ref(), 0)?;
    let k = config.max_k();
    let strategies = [GroupingKind::Random, GroupingKind::Adaptive];
    let jobs: Vec<(GroupingKind, usize)> = strategies
        .iter()
        .flat_map(|&s| (0..config.trials).map(move |r| (s, r)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(strategy, repetition)| -> Result<(RepetitionRecord, usize)> {
            let cfg = MugConfig {
                big_k: k,
                strategy,
                seed: stream_seed(config.master_seed, repetition, STREAM_GROUPING),
                ..config.mug.clone()
            };
            let res = crate::screening::mug_screen(&instance.problem, &cfg)?;
            let r = TrialRecord::score(Method::Mug, k, cfg.m_max, repetition, &res.estimate, &instance.truth.support);
            Ok((
                RepetitionRecord {
                    strategy,
                    repetition,
                    cardinality: r.cardinality,
                    fpr: r.fpr,
                    fnr: r.fnr,
                    contains_truth: r.contains_truth,
                },
                res.per_iteration_sizes[0],
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let lasso_cardinality = results.first().map_or(0, |r| r.1);
    let records: Vec<RepetitionRecord> = results.into_iter().map(|r| r.0).collect();
    let summary = strategies
        .iter()
        .map(|&s| {
            let rows: Vec<&RepetitionRecord> = records.iter().filter(|r| r.strategy == s).collect();
            let cards: Vec<f64> = rows.iter().map(|r| r.cardinality as f64).collect();
            let (card_mean, card_std) = mean_std(&cards);
            StrategySummary {
                strategy: s,
                card_mean,
                card_std,
                card_min: rows.iter().map(|r| r.cardinality).min().unwrap_or(0),
                card_max: rows.iter().map(|r| r.cardinality).max().unwrap_or(0),
                containment_rate: rows.iter().filter(|r| r.contains_truth).count() as f64 / rows.len() as f64,
                repetitions: rows.len(),
            }
        })
        .collect();
    Ok(FixedDesignOutput {
        records,
        summary,
        lasso_cardinality,
        truth: instance.truth,
    })
}

fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

fn create(path: &Path) -> Result<csv::Writer<fs::File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    Ok(csv::Writer::from_path(path)?)
}

/// Writes `trials.csv`; a `beta_min` column is appended when any record has one.
pub fn write_trials_csv(path: &Path, records: &[TrialRecord]) -> Result<()> {
    let with_b = records.iter().any(|r| r.beta_min.is_some());
    let mut w = create(path)?;
    let mut header = vec!["method", "K", "m", "trial", "cardinality", "fpr", "fnr", "contains_truth", "wall_time_s"];
    if with_b {
        header.push("beta_min");
    }
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.method.to_string(),
            r.k_groupings.to_string(),
            r.m.to_string(),
            r.trial.to_string(),
            r.cardinality.to_string(),
            fmt_f64(r.fpr),
            fmt_f64(r.fnr),
            r.contains_truth.to_string(),
            fmt_f64(r.wall_time_s),
        ];
        if with_b {
            row.push(r.beta_min.map_or_else(String::new, fmt_f64));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes `summary.csv`; a `beta_min` column is appended when any row has one.
pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let with_b = rows.iter().any(|r| r.beta_min.is_some());
    let mut w = create(path)?;
    let mut header = vec![
        "method",
        "K",
        "m",
        "fpr_mean",
        "fpr_std",
        "fnr_mean",
        "fnr_std",
        "card_mean",
        "containment_rate",
        "trials",
    ];
    if with_b {
        header.push("beta_min");
    }
    w.write_record(&header)?;
    for r in rows {
        let mut row = vec![
            r.method.to_string(),
            r.k_groupings.to_string(),
            r.m.to_string(),
            fmt_f64(r.fpr_mean),
            fmt_f64(r.fpr_std),
            fmt_f64(r.fnr_mean),
            fmt_f64(r.fnr_std),
            fmt_f64(r.card_mean),
            fmt_f64(r.containment_rate),
            r.trials.to_string(),
        ];
        if with_b {
            row.push(r.beta_min.map_or_else(String::new, fmt_f64));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `trials.csv` written by [`write_trials_csv`].
pub fn read_trials_csv(path: &Path) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::Reader::from_path(path)?;
    let has_b = reader.headers()?.iter().any(|h| h == "beta_min");
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let field = |k: usize| row.get(k).unwrap_or("");
        let bad = |k: usize| MugError::NonNumericCell {
            path: path.to_path_buf(),
            row: i + 2,
            column: k + 1,
            value: field(k).to_string(),
        };
        let uint = |k: usize| field(k).parse::<usize>().map_err(|_| bad(k));
        let real = |k: usize| field(k).parse::<f64>().map_err(|_| bad(k));
        out.push(TrialRecord {
            method: field(0).parse()?,
            k_groupings: uint(1)?,
            m: uint(2)?,
            trial: uint(3)?,
            cardinality: uint(4)?,
            fpr: real(5)?,
            fnr: real(6)?,
            contains_truth: field(7).parse().map_err(|_| bad(7))?,
            wall_time_s: real(8)?,
            beta_min: if has_b && !field(9).is_empty() { Some(real(9)?) } else { None },
        });
    }
    if out.is_empty() {
        return Err(MugError::EmptyInput("trial records"));
    }
    Ok(out)
}

/// Writes `trials.csv` and `summary.csv` into `dir`.
pub fn write_sweep(dir: &Path, output: &SweepOutput) -> Result<()> {
    write_trials_csv(&dir.join("trials.csv"), &output.records)?;
    write_summary_csv(&dir.join("summary.csv"), &output.summary)
}

/// Writes `repetitions.csv` and `strategies.csv` into `dir`.
pub fn write_fixed_design(dir: &Path, output: &FixedDesignOutput) -> Result<()> {
    let mut w = create(&dir.join("repetitions.csv"))?;
    for r in &output.records {
        w.serialize(r)?;
    }
    w.flush()?;
    let mut w = create(&dir.join("strategies.csv"))?;
    for s in &output.summary {
        w.serialize(s)?;
    }
    w.flush()?;
    Ok(())
}

/// Re-aggregates a `trials.csv` file.
pub fn report(trials_csv: &Path) -> Result<Vec<SummaryRow>> {
    aggregate(&read_trials_csv(trials_csv)?)
}

/// Loads `X` (normalized) and `y` from two CSV files with matching row counts.
pub fn load_problem(x_path: &Path, y_path: &Path, header: bool) -> Result<DesignProblem> {
    let x = crate::datagen::read_design_csv(x_path, header)?;
    let y = load_vector_csv(y_path, header)?;
    if x.nrows() != y.len() {
        return Err(MugError::RowMismatch {
            x_path: x_path.display().to_string(),
            x_rows: x.nrows(),
            y_path: y_path.display().to_string(),
            y_rows: y.len(),
        });
    }
    let (x, _) = normalize_matrix(x)?;
    DesignProblem::new_normalized(x, y)
}

/// Runs the requested screeners on one problem. SIS is matched to the
/// multiple-grouping cardinality when that method runs, and to `n` otherwise.
pub fn screen_problem(
    problem: &DesignProblem,
    methods: &[Method],
    mug: &MugConfig,
    lcv: &LcvConfig,
) -> Result<Vec<ScreeningResult>> {
    if methods.is_empty() {
        return Err(MugError::config("methods", "must list at least one method"));
    }
    let wants = |m: Method| methods.contains(&m);
    let mug_res = if wants(Method::Mug) || wants(Method::MugPlusLcv) {
        Some(crate::screening::mug_screen(problem, mug)?)
    } else {
        None
    };
    let lcv_res = if wants(Method::Lcv) || wants(Method::MugPlusLcv) {
        Some(lcv_screen(problem, lcv)?)
    } else {
        None
    };
    let mut out = Vec::new();
    let mut sorted = methods.to_vec();
    sorted.sort();
    sorted.dedup();
    for m in sorted {
        let res = match m {
            Method::Mug => mug_res.clone().expect("computed above"),
            Method::Lcv => lcv_res.clone().expect("computed above"),
            Method::MugPlusLcv => combine_mug_lcv(mug_res.as_ref().expect("mug"), lcv_res.as_ref().expect("lcv")),
            Method::Sis => {
                let target = mug_res.as_ref().map_or(problem.n().min(problem.p()), |r| r.estimate.len());
                sis_screen(problem, target)?
            }
            Method::LassoOnly => crate::screening::lasso_screen(problem, &mug.solver)?,
        };
        out.push(res);
    }
    Ok(out)
}

/// `method,cardinality,indices` with space-separated 1-based indices.
pub fn write_supports_csv<W: Write>(out: W, results: &[ScreeningResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "cardinality", "indices"])?;
    for r in results {
        let idx: Vec<String> = r.estimate.to_one_based().iter().map(usize::to_string).collect();
        w.write_record([r.method.to_string(), r.estimate.len().to_string(), idx.join(" ")])?;
    }
    w.flush()?;
    Ok(())
}

/// Diagnostics of a single penalized fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub n: usize,
    pub p: usize,
    pub groups: usize,
    pub group_size: usize,
    pub lambda: f64,
    pub lambda_max: f64,
    pub objective: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub selected_groups: usize,
    /// 1-based indices of nonzero coefficients.
    pub selected_variables: Vec<usize>,
}

/// Fits the Lasso (`group_size = 1`) or the group Lasso over a random
/// grouping at `lambda = ratio * lambda_max`.
pub fn solve_single(
    problem: &DesignProblem,
    group_size: usize,
    ratio: f64,
    solver: &SolverConfig,
    seed: u64,
) -> Result<SolveReport> {
    if !(ratio >= 0.0) {
        return Err(MugError::config("lambda_ratio", "must be nonnegative"));
    }
    if group_size == 0 {
        return Err(MugError::config("group_size", "must be at least 1"));
    }
    let grouping = if group_size == 1 {
        Grouping::singletons(problem.p())
    } else {
        random_grouping(problem.p(), group_size, &mut derive_trial_rng(seed, 0, STREAM_GROUPING))
    };
    let lambda_max = compute_lambda_max(problem, &grouping);
    let lambda = ratio * lambda_max;
    let sol = if group_size == 1 {
        solve_lasso(problem, lambda, solver, None)?
    } else {
        solve_group_lasso(problem, &grouping, lambda, solver, None)?
    };
    if !sol.converged {
        log::warn!("fit stopped at the iteration cap with KKT residual {:e}", sol.kkt_residual);
    }
    let support = crate::SupportSet::of_nonzeros(&sol.beta_hat);
    Ok(SolveReport {
        n: problem.n(),
        p: problem.p(),
        groups: grouping.d(),
        group_size,
        lambda,
        lambda_max,
        objective: sol.objective,
        kkt_residual: kkt_check(problem, &grouping, &sol),
        iterations: sol.iterations,
        converged: sol.converged,
        selected_groups: sol.active_groups.len(),
        selected_variables: support.to_one_based(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(protocol: Protocol) -> ExperimentConfig {
        ExperimentConfig {
            protocol,
            sim: SimSpec {
                p: 60,
                n: 20,
                k: 3,
                beta_min_magnitude: 1.5,
                sigma: 0.3,
                ..SimSpec::default()
            },
            lcv: LcvConfig {
                repeats: 3,
                ..LcvConfig::default()
            },
            k_sweep: vec![0, 2, 4],
            m_sweep: vec![1, 2, 3],
            trials: 3,
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn presets_validate() {
        for name in PRESET_NAMES {
            preset(name).unwrap().validate().unwrap();
        }
        assert!(preset("ind_z").is_err());
        let fig3 = preset("fig3").unwrap();
        assert_eq!((fig3.sim.p, fig3.sim.n, fig3.sim.k), (100, 30, 5));
        assert_eq!((fig3.mug.big_k, fig3.mug.m_max, fig3.trials), (50, 2, 200));
    }

    #[test]
    fn degenerate_k_sweep_is_one_lasso_row() {
        let cfg = ExperimentConfig {
            methods: vec![Method::Mug],
            k_sweep: vec![0],
            trials: 1,
            ..small(Protocol::KSweep)
        };
        let out = run_k_sweep(&cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        assert_eq!(out.records[0].method, Method::LassoOnly);
        assert_eq!(out.summary.len(), 1);
    }

    #[test]
    fn k_sweep_rows_and_matching() {
        let out = run_k_sweep(&small(Protocol::KSweep)).unwrap();
        // lasso_only at K=0, mug at K=2,4; sis, lcv, mug+lcv at every K.
        assert_eq!(out.records.len(), 3 * (3 + 3 * 3));
        for trial in 0..3 {
            for k in [2, 4] {
                let get = |m: Method| {
                    out.records
                        .iter()
                        .find(|r| r.method == m && r.k_groupings == k && r.trial == trial)
                        .unwrap()
                        .clone()
                };
                assert_eq!(get(Method::Mug).cardinality, get(Method::Sis).cardinality);
                assert!(get(Method::MugPlusLcv).cardinality <= get(Method::Mug).cardinality);
            }
        }
        let keys: Vec<_> = out.records.iter().map(|r| (r.method, r.k_groupings, r.m, r.trial)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn m_sweep_with_singletons() {
        let cfg = ExperimentConfig {
            methods: vec![Method::Mug],
            k_sweep: vec![3],
            ..small(Protocol::MSweep)
        };
        let out = run_m_sweep(&cfg).unwrap();
        assert_eq!(out.summary.len(), 3);
        assert_eq!(out.summary.iter().map(|r| r.m).collect::<Vec<_>>(), vec![1, 2, 3]);
    }

    #[test]
    fn beta_min_sweep_zero_shrinks_truth() {
        let cfg = ExperimentConfig {
            methods: vec![Method::Mug],
            k_sweep: vec![2],
            beta_min_sweep: vec![0.0, 2.0],
            ..small(Protocol::BetaMinSweep)
        };
        let out = run_beta_min_sweep(&cfg).unwrap();
        assert_eq!(out.summary.len(), 2);
        assert!(out.records.iter().all(|r| r.beta_min.is_some()));
    }

    #[test]
    fn csv_round_trip_and_report() {
        let out = run_k_sweep(&small(Protocol::KSweep)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_sweep(dir.path(), &out).unwrap();
        let back = read_trials_csv(&dir.path().join("trials.csv")).unwrap();
        assert_eq!(back, out.records);
        assert_eq!(report(&dir.path().join("trials.csv")).unwrap(), out.summary);
    }

    #[test]
    fn validation_names_fields() {
        let cfg = ExperimentConfig {
            trials: 0,
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("trials"));
        let cfg = ExperimentConfig {
            protocol: Protocol::MSweep,
            m_sweep: vec![],
            ..ExperimentConfig::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("m_sweep"));
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = preset("ind_a").unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: ExperimentConfig = serde_json::from_str(r#"{"trials": 3, "mug": {"k": 7}}"#).unwrap();
        assert_eq!((partial.trials, partial.mug.big_k, partial.mug.m_max), (3, 7, 2));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"trails": 3}"#).is_err());
    }
}
