//! Deterministic Monte Carlo campaigns over `(n, k, p_level, beta)` grids.
//!
//! Every trial draws its point cloud from a seed derived from the master
//! seed and the trial's coordinates, so a campaign's output depends only on
//! its configuration. Trials run on the rayon pool and are sorted before
//! they are returned.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{
    corrected_scale, fit_power_law, fit_scale_mle, ks_statistic, residual_energy,
    transmission_costs, uncorrected_scale, CostModel, PowerLawFit,
};
use crate::error::{Result, SwarmError};
use crate::geometry::{baseline_lengths, generate_points, max_baseline};
use crate::graph::{build_knn_graph, classify, scc, DirectedGraph};
use crate::protocol::{allocate, alpha_theory, budget_from_quantile, coverage, prune};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Connectivity,
    Baselines,
    PowerDist,
    FitCorrection,
    Coverage,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Connectivity,
        Experiment::Baselines,
        Experiment::PowerDist,
        Experiment::FitCorrection,
        Experiment::Coverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Connectivity => "connectivity",
            Experiment::Baselines => "baselines",
            Experiment::PowerDist => "power_dist",
            Experiment::FitCorrection => "fit_correction",
            Experiment::Coverage => "coverage",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = SwarmError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().replace('-', "_");
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == norm)
            .ok_or_else(|| SwarmError::invalid(format!("unknown experiment '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub experiment: Experiment,
    pub n_grid: Vec<usize>,
    pub k_grid: Vec<usize>,
    pub p_grid: Vec<f64>,
    pub beta_grid: Vec<f64>,
    pub trials: usize,
    pub master_seed: u64,
}

pub const DEFAULT_MASTER_SEED: u64 = 2024;

fn n_hundreds() -> Vec<usize> {
    (1..=10).map(|i| i * 100).collect()
}

impl CampaignConfig {
    /// Grids used for each experiment unless overridden.
    pub fn defaults_for(experiment: Experiment) -> Self {
        let (n_grid, k_grid, p_grid, beta_grid, trials) = match experiment {
            Experiment::Connectivity => (n_hundreds(), (2..=12).collect(), vec![0.99], vec![0.5], 100),
            Experiment::Baselines => (n_hundreds(), vec![4, 5, 6], vec![0.99], vec![0.5], 50),
            Experiment::PowerDist => (vec![600], vec![5], vec![0.99], vec![0.5], 50),
            Experiment::FitCorrection => (n_hundreds(), vec![4, 5, 6], vec![0.99], vec![0.5], 20),
            Experiment::Coverage => (
                vec![500],
                vec![5],
                vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.99],
                (1..=10).map(|i| i as f64 / 10.0).collect(),
                50,
            ),
        };
        CampaignConfig {
            experiment,
            n_grid,
            k_grid,
            p_grid,
            beta_grid,
            trials,
            master_seed: DEFAULT_MASTER_SEED,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let grids = [
            ("n", self.n_grid.is_empty()),
            ("k", self.k_grid.is_empty()),
            ("p", self.p_grid.is_empty()),
            ("beta", self.beta_grid.is_empty()),
        ];
        if let Some((name, _)) = grids.iter().find(|g| g.1) {
            return Err(SwarmError::invalid(format!("{name} grid is empty")));
        }
        if self.trials == 0 {
            return Err(SwarmError::invalid("trials must be at least 1"));
        }
        if let Some(n) = self.n_grid.iter().find(|&&n| n < 2) {
            return Err(SwarmError::invalid(format!("n = {n} is too small")));
        }
        let min_n = *self.n_grid.iter().min().expect("nonempty");
        if let Some(k) = self.k_grid.iter().find(|&&k| k == 0 || k >= min_n) {
            return Err(SwarmError::invalid(format!(
                "k = {k} must lie in [1, {}]",
                min_n - 1
            )));
        }
        if let Some(p) = self.p_grid.iter().find(|&&p| !(p > 0.0 && p < 1.0)) {
            return Err(SwarmError::invalid(format!("p = {p} must lie in (0, 1)")));
        }
        if let Some(b) = self.beta_grid.iter().find(|&&b| !(b > 0.0 && b <= 1.0)) {
            return Err(SwarmError::invalid(format!("beta = {b} must lie in (0, 1]")));
        }
        Ok(())
    }

    /// Grid cells in `(n, k, p_level, beta)` order.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &n in &self.n_grid {
            for &k in &self.k_grid {
                for &p_level in &self.p_grid {
                    for &beta in &self.beta_grid {
                        out.push(Cell { n, k, p_level, beta });
                    }
                }
            }
        }
        out.sort_by(Cell::order);
        out.dedup();
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub n: usize,
    pub k: usize,
    pub p_level: f64,
    pub beta: f64,
}

impl Cell {
    fn order(a: &Cell, b: &Cell) -> std::cmp::Ordering {
        a.n.cmp(&b.n)
            .then(a.k.cmp(&b.k))
            .then(a.p_level.total_cmp(&b.p_level))
            .then(a.beta.total_cmp(&b.beta))
    }
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Trial seed: the master seed and each cell coordinate (floats by bit
/// pattern) folded through the SplitMix64 finalizer in a fixed order.
pub fn derive_seed(master_seed: u64, cell: &Cell, trial_index: u64) -> u64 {
    [
        cell.n as u64,
        cell.k as u64,
        cell.p_level.to_bits(),
        cell.beta.to_bits(),
        trial_index,
    ]
    .iter()
    .fold(mix64(master_seed.wrapping_add(GOLDEN)), |h, &field| {
        mix64(h.wrapping_add(GOLDEN) ^ field)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub n: usize,
    pub k: usize,
    pub p_level: f64,
    pub beta: f64,
    pub trial_index: u64,
    pub seed: u64,
    pub lscc_fraction_pre: f64,
    pub lscc_fraction_post: f64,
    #[serde(rename = "rho_L")]
    pub rho_l: f64,
    #[serde(rename = "alpha_L")]
    pub alpha_l: f64,
    pub alpha: f64,
    pub alpha_theory: f64,
    /// Longest baseline inside the post-pruning LSCC (0 below two members).
    pub max_baseline: f64,
    pub e_max: f64,
    /// Mean unpruned transmission cost (squared k-th neighbour distance).
    pub mean_cost: f64,
    pub removed_edges: usize,
    /// `ok`, or `error: <message>` for a failed trial.
    pub status: String,
    /// Whether the in-component classification of the unpruned graph picks
    /// out exactly the LSCC found by the SCC decomposition.
    pub lscc_agrees: bool,
}

impl TrialRecord {
    pub const CSV_HEADER: [&'static str; 18] = [
        "n",
        "k",
        "p_level",
        "beta",
        "trial_index",
        "seed",
        "lscc_fraction_pre",
        "lscc_fraction_post",
        "rho_L",
        "alpha_L",
        "alpha",
        "alpha_theory",
        "max_baseline",
        "e_max",
        "mean_cost",
        "removed_edges",
        "status",
        "lscc_agrees",
    ];

    fn blank(cell: &Cell, trial_index: u64, seed: u64) -> Self {
        TrialRecord {
            n: cell.n,
            k: cell.k,
            p_level: cell.p_level,
            beta: cell.beta,
            trial_index,
            seed,
            lscc_fraction_pre: 0.0,
            lscc_fraction_post: 0.0,
            rho_l: 0.0,
            alpha_l: 0.0,
            alpha: 0.0,
            alpha_theory: 0.0,
            max_baseline: 0.0,
            e_max: 0.0,
            mean_cost: 0.0,
            removed_edges: 0,
            status: String::new(),
            lscc_agrees: false,
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    pub fn cell(&self) -> Cell {
        Cell {
            n: self.n,
            k: self.k,
            p_level: self.p_level,
            beta: self.beta,
        }
    }

    /// Named numeric outputs, in column order.
    pub fn metrics(&self) -> [(&'static str, f64); 10] {
        [
            ("lscc_fraction_pre", self.lscc_fraction_pre),
            ("lscc_fraction_post", self.lscc_fraction_post),
            ("rho_L", self.rho_l),
            ("alpha_L", self.alpha_l),
            ("alpha", self.alpha),
            ("alpha_theory", self.alpha_theory),
            ("max_baseline", self.max_baseline),
            ("e_max", self.e_max),
            ("mean_cost", self.mean_cost),
            ("removed_edges", self.removed_edges as f64),
        ]
    }

    fn sort_key(a: &TrialRecord, b: &TrialRecord) -> std::cmp::Ordering {
        Cell::order(&a.cell(), &b.cell()).then(a.trial_index.cmp(&b.trial_index))
    }
}

/// Everything a full protocol trial computes, for callers that need more
/// than the summary record.
#[derive(Debug, Clone)]
pub struct TrialArtifacts {
    pub record: TrialRecord,
    pub unpruned: DirectedGraph,
    pub pruned: DirectedGraph,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// generate → k-NN graph → SCC → budget → prune → classify → residuals →
/// allocate → coverage → analytic coverage → baselines.
pub fn run_trial_detailed(cell: &Cell, trial_index: u64, seed: u64) -> Result<TrialArtifacts> {
    let mut rec = TrialRecord::blank(cell, trial_index, seed);
    let n = cell.n;
    let points = generate_points(n, seed)?;
    let graph = build_knn_graph(&points, cell.k)?;
    let pre = scc(&graph);
    rec.lscc_fraction_pre = pre.lscc_size() as f64 / n as f64;
    rec.lscc_agrees = classify(&graph)?.lscc == pre.lscc_members();
    rec.mean_cost = mean(
        &(0..n)
            .map(|v| {
                let r = graph.out_edges(v).last().map_or(0.0, |e| e.length);
                r * r
            })
            .collect::<Vec<_>>(),
    );

    let budget = budget_from_quantile(cell.p_level, n, cell.k, cell.beta)?;
    rec.e_max = budget.e_max;
    let pruned = prune(&graph, budget.e_max);
    rec.removed_edges = pruned.removed_edges;
    let post_scc = scc(&pruned.graph);
    rec.lscc_fraction_post = post_scc.lscc_size() as f64 / n as f64;
    let post = classify(&pruned.graph)?;

    let residuals: Vec<f64> = pruned
        .realized_cost
        .iter()
        .map(|&c| residual_energy(budget.e_max, c))
        .collect();
    let alloc = allocate(&post, &residuals, budget.job_cost)?;
    let cov = coverage(&pre, &post_scc, &alloc, n)?;
    rec.rho_l = cov.rho_l;
    rec.alpha_l = cov.alpha_l;
    rec.alpha = cov.alpha;
    rec.alpha_theory = alpha_theory(
        n,
        cell.k,
        budget.e_max,
        budget.job_cost,
        post.eta_plus,
        post.eta_minus,
    )?;
    let lscc = post_scc.lscc_members();
    rec.max_baseline = if lscc.len() >= 2 {
        max_baseline(&points, &lscc)?
    } else {
        0.0
    };

    let finite = rec.metrics().iter().all(|(_, v)| v.is_finite());
    if !finite {
        return Err(SwarmError::invalid("trial produced a non-finite output"));
    }
    rec.status = "ok".into();
    Ok(TrialArtifacts {
        record: rec,
        unpruned: graph,
        pruned: pruned.graph,
    })
}

/// One protocol trial. Failures are reported through `status` rather than
/// returned, so a campaign keeps every trial.
pub fn run_trial(cell: &Cell, trial_index: u64, seed: u64) -> TrialRecord {
    match run_trial_detailed(cell, trial_index, seed) {
        Ok(art) => art.record,
        Err(e) => {
            let mut rec = TrialRecord::blank(cell, trial_index, seed);
            rec.status = format!("error: {e}");
            rec
        }
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| SwarmError::invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn trial_jobs(config: &CampaignConfig) -> Vec<(Cell, u64, u64)> {
    config
        .cells()
        .into_iter()
        .flat_map(|cell| {
            (0..config.trials as u64)
                .map(move |t| (cell, t, derive_seed(config.master_seed, &cell, t)))
        })
        .collect()
}

pub fn run_campaign(config: &CampaignConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let mut records: Vec<TrialRecord> = trial_jobs(config)
        .into_par_iter()
        .map(|(cell, t, seed)| run_trial(&cell, t, seed))
        .collect();
    records.sort_by(TrialRecord::sort_key);
    Ok(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub mean: f64,
    /// Sample standard deviation (0 for a single value).
    pub sd: f64,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Stats {
    pub fn of(xs: &[f64]) -> Result<Stats> {
        if xs.is_empty() {
            return Err(SwarmError::invalid("no values to summarize"));
        }
        let count = xs.len();
        let m = mean(xs);
        let sd = if count > 1 {
            (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Stats {
            mean: m,
            sd,
            min: xs.iter().cloned().fold(f64::INFINITY, f64::min),
            max: xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            count,
        })
    }

    pub fn std_error(&self) -> f64 {
        self.sd / (self.count as f64).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub n: usize,
    pub k: usize,
    pub p_level: f64,
    pub beta: f64,
    pub failed: usize,
    /// Per metric, in [`TrialRecord::metrics`] order; failed trials excluded.
    pub metrics: Vec<(String, Stats)>,
}

impl CellSummary {
    pub fn get(&self, metric: &str) -> Option<&Stats> {
        self.metrics.iter().find(|(m, _)| m == metric).map(|(_, s)| s)
    }
}

#[derive(PartialEq, Eq, PartialOrd, Ord)]
struct CellKey(usize, usize, u64, u64);

fn float_key(x: f64) -> u64 {
    // order-preserving map of an f64 onto u64
    let b = x.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

/// Per-cell statistics of every metric, ordered by cell.
pub fn summarize(records: &[TrialRecord]) -> Result<Vec<CellSummary>> {
    if records.is_empty() {
        return Err(SwarmError::invalid("no records to summarize"));
    }
    let mut groups: BTreeMap<CellKey, Vec<&TrialRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry(CellKey(r.n, r.k, float_key(r.p_level), float_key(r.beta)))
            .or_default()
            .push(r);
    }
    Ok(groups
        .into_values()
        .map(|rs| {
            let first = rs[0];
            let ok: Vec<&TrialRecord> = rs.iter().copied().filter(|r| r.is_ok()).collect();
            let metrics = if ok.is_empty() {
                Vec::new()
            } else {
                (0..first.metrics().len())
                    .map(|i| {
                        let name = first.metrics()[i].0.to_string();
                        let xs: Vec<f64> = ok.iter().map(|r| r.metrics()[i].1).collect();
                        (name, Stats::of(&xs).expect("nonempty"))
                    })
                    .collect()
            };
            CellSummary {
                n: first.n,
                k: first.k,
                p_level: first.p_level,
                beta: first.beta,
                failed: rs.len() - ok.len(),
                metrics,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineRecord {
    pub n: usize,
    pub k: usize,
    pub trial_index: u64,
    pub seed: u64,
    pub lscc_size: usize,
    pub max_baseline: f64,
    pub mean_baseline: f64,
}

/// Baselines within the LSCC of the unpruned k-NN graph.
pub fn baseline_trial(n: usize, k: usize, trial_index: u64, seed: u64) -> Result<(BaselineRecord, Vec<f64>)> {
    let points = generate_points(n, seed)?;
    let graph = build_knn_graph(&points, k)?;
    let lscc = scc(&graph).lscc_members();
    let lengths = if lscc.len() >= 2 {
        baseline_lengths(&points, &lscc)?
    } else {
        Vec::new()
    };
    let rec = BaselineRecord {
        n,
        k,
        trial_index,
        seed,
        lscc_size: lscc.len(),
        max_baseline: lengths.iter().cloned().fold(0.0, f64::max),
        mean_baseline: if lengths.is_empty() { 0.0 } else { mean(&lengths) },
    };
    Ok((rec, lengths))
}

fn nk_jobs(config: &CampaignConfig) -> Vec<(usize, usize, u64, u64)> {
    let p = config.p_grid[0];
    let beta = config.beta_grid[0];
    let mut out = Vec::new();
    for &n in &config.n_grid {
        for &k in &config.k_grid {
            let cell = Cell { n, k, p_level: p, beta };
            for t in 0..config.trials as u64 {
                out.push((n, k, t, derive_seed(config.master_seed, &cell, t)));
            }
        }
    }
    out.sort_by_key(|&(n, k, t, _)| (n, k, t));
    out.dedup_by_key(|j| (j.0, j.1, j.2));
    out
}

/// Baseline records for every `(n, k)` pair and trial. Only the first
/// entries of the `p` and `beta` grids enter seed derivation.
pub fn run_baselines(config: &CampaignConfig) -> Result<Vec<BaselineRecord>> {
    config.validate()?;
    nk_jobs(config)
        .into_par_iter()
        .map(|(n, k, t, seed)| baseline_trial(n, k, t, seed).map(|r| r.0))
        .collect()
}

/// Transmission costs of every vertex over `trials` point clouds, pooled
/// in trial order.
pub fn pooled_costs(n: usize, k: usize, trials: usize, master_seed: u64, cell: Option<Cell>) -> Result<Vec<f64>> {
    let cell = cell.unwrap_or(Cell {
        n,
        k,
        p_level: 0.99,
        beta: 0.5,
    });
    let per_trial: Vec<Vec<f64>> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let seed = derive_seed(master_seed, &cell, t);
            transmission_costs(&generate_points(n, seed)?, k)
        })
        .collect::<Result<_>>()?;
    Ok(per_trial.concat())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostLawComparison {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub uncorrected_scale: f64,
    pub corrected_scale: f64,
    pub mle_scale: f64,
    pub ks_uncorrected: f64,
    pub ks_corrected: f64,
    pub ks_mle: f64,
    pub empirical_median: f64,
    pub corrected_median: f64,
}

pub fn compare_cost_law(n: usize, k: usize, costs: &[f64]) -> Result<CostLawComparison> {
    let uncorrected = CostModel::new(n, k, false)?;
    let corrected = CostModel::new(n, k, true)?;
    let mle = fit_scale_mle(costs, k)?;
    let fitted = CostModel::with_scale(n, k, mle)?;
    let ks = |m: &CostModel| ks_statistic(costs, |c| m.cdf(c).unwrap_or(0.0));
    let mut sorted = costs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    let empirical_median = if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    };
    Ok(CostLawComparison {
        n,
        k,
        samples: costs.len(),
        uncorrected_scale: uncorrected_scale(n),
        corrected_scale: corrected_scale(n)?,
        mle_scale: mle,
        ks_uncorrected: ks(&uncorrected)?,
        ks_corrected: ks(&corrected)?,
        ks_mle: ks(&fitted)?,
        empirical_median,
        corrected_median: corrected.quantile(0.5)?,
    })
}

/// Cost samples and model comparison for every `(n, k)` of the config.
pub fn run_power_dist(config: &CampaignConfig) -> Result<Vec<(CostLawComparison, Vec<f64>)>> {
    config.validate()?;
    let mut out = Vec::new();
    for &n in &config.n_grid {
        for &k in &config.k_grid {
            let cell = Cell {
                n,
                k,
                p_level: config.p_grid[0],
                beta: config.beta_grid[0],
            };
            let costs = pooled_costs(n, k, config.trials, config.master_seed, Some(cell))?;
            out.push((compare_cost_law(n, k, &costs)?, costs));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaleFit {
    pub n: usize,
    pub k: usize,
    pub samples: usize,
    pub mle_scale: f64,
    pub corrected_scale: f64,
    pub uncorrected_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCorrectionReport {
    pub fits: Vec<ScaleFit>,
    /// Power law over every `(n, â)` pair of every `k`.
    pub pooled: PowerLawFit,
    pub per_k: Vec<(usize, PowerLawFit)>,
}

/// Fits the scale per `(n, k)` cell by maximum likelihood, then a power law
/// in `n` through the fitted scales.
pub fn run_fit_correction(config: &CampaignConfig) -> Result<FitCorrectionReport> {
    config.validate()?;
    if config.n_grid.len() < 2 {
        return Err(SwarmError::invalid("a power-law fit needs at least two values of n"));
    }
    let mut fits = Vec::new();
    for &n in &config.n_grid {
        for &k in &config.k_grid {
            let cell = Cell {
                n,
                k,
                p_level: config.p_grid[0],
                beta: config.beta_grid[0],
            };
            let costs = pooled_costs(n, k, config.trials, config.master_seed, Some(cell))?;
            fits.push(ScaleFit {
                n,
                k,
                samples: costs.len(),
                mle_scale: fit_scale_mle(&costs, k)?,
                corrected_scale: corrected_scale(n)?,
                uncorrected_scale: uncorrected_scale(n),
            });
        }
    }
    fits.sort_by_key(|f| (f.n, f.k));
    let pooled = fit_power_law(&fits.iter().map(|f| (f.n as f64, f.mle_scale)).collect::<Vec<_>>())?;
    let mut ks: Vec<usize> = config.k_grid.clone();
    ks.sort_unstable();
    ks.dedup();
    let per_k = ks
        .into_iter()
        .map(|k| {
            let pts: Vec<(f64, f64)> = fits
                .iter()
                .filter(|f| f.k == k)
                .map(|f| (f.n as f64, f.mle_scale))
                .collect();
            fit_power_law(&pts).map(|fit| (k, fit))
        })
        .collect::<Result<_>>()?;
    Ok(FitCorrectionReport { fits, pooled, per_k })
}
