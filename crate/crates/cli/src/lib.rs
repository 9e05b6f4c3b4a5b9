//! Command-line front end for the swarm experiments.

pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use swarm_core::energy::{within_correction_range, CostModel};
use swarm_core::harness::{
    run_baselines, run_campaign, run_fit_correction, run_power_dist, summarize, with_threads,
    CampaignConfig, CellSummary, Experiment, TrialRecord,
};
use swarm_core::output::{
    baseline_table, cost_comparison_table, cost_sample_table, power_law_table, scale_fit_table,
    summary_table, to_json, trial_table, write_atomic, Table,
};
use swarm_core::SwarmError;

use config::{Format, Settings};
use svg::{render_svg, Figure, Layer};

pub const THREADS_ENV: &str = "SWARM_SIM_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] SwarmError),
    #[error("all {0} trials failed")]
    AllTrialsFailed(usize),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::AllTrialsFailed(_) => 3,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "swarm-sim", version, about = "Monte Carlo experiments on k-nearest-neighbour satellite swarms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// LSCC fraction of the k-NN graph over (n, k)
    Connectivity(RunArgs),
    /// Baseline lengths inside the LSCC
    Baselines(RunArgs),
    /// Pooled transmission costs against the cost model
    PowerDist(RunArgs),
    /// Scale fits per (n, k) and the power law through them
    FitCorrection(RunArgs),
    /// Full protocol: pruning, allocation and coverage over (p, beta)
    Coverage(RunArgs),
    /// The experiment named by the `experiment` key, or all of them
    Campaign(RunArgs),
    /// Print the corrected-model cost quantile for one (n, k, p)
    Quantile(QuantileArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Config file (`key = value` lines, or JSON)
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Swarm sizes, comma separated
    #[arg(long)]
    pub n: Option<String>,
    /// Neighbour counts, comma separated
    #[arg(long)]
    pub k: Option<String>,
    /// Budget quantile levels in (0, 1), comma separated
    #[arg(long)]
    pub p: Option<String>,
    /// Computation energy fractions in (0, 1], comma separated
    #[arg(long)]
    pub beta: Option<String>,
    /// Trials per grid cell
    #[arg(long)]
    pub trials: Option<String>,
    /// Master seed
    #[arg(long)]
    pub seed: Option<String>,
    /// Output directory [default: results]
    #[arg(long)]
    pub out: Option<String>,
    /// Output formats: csv, json, svg [default: csv]
    #[arg(long)]
    pub format: Option<String>,
    /// `key=value` settings, applied after the config file
    #[arg(value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct QuantileArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub k: usize,
    /// Probability level in (0, 1)
    #[arg(long)]
    pub p: f64,
}

fn grid_text(v: &[impl ToString]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Help epilogue listing every experiment's default grid.
pub fn defaults_help() -> String {
    let mut s = String::from("Default grids:\n");
    for e in Experiment::ALL {
        let c = CampaignConfig::defaults_for(e);
        s.push_str(&format!(
            "  {:<15} n={} k={} p={} beta={} trials={}\n",
            e.name().replace('_', "-"),
            grid_text(&c.n_grid),
            grid_text(&c.k_grid),
            grid_text(&c.p_grid),
            grid_text(&c.beta_grid),
            c.trials
        ));
    }
    s.push_str(&format!(
        "\nConfig keys: {}\nEnvironment: {THREADS_ENV} caps worker threads.\nExit codes: 0 ok, 1 runtime error, 2 config error, 3 all trials failed.\n",
        config::KEYS.join(", ")
    ));
    s
}

impl RunArgs {
    /// File settings, then `key=value` overrides, then flags.
    pub fn settings(&self) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(path) => Settings::load(path)?,
            None => Settings::default(),
        };
        let mut cli = Settings::default();
        for o in &self.overrides {
            cli.apply_override(o)?;
        }
        let flags = [
            ("n", &self.n),
            ("k", &self.k),
            ("p", &self.p),
            ("beta", &self.beta),
            ("trials", &self.trials),
            ("seed", &self.seed),
            ("out", &self.out),
            ("format", &self.format),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cli.set(key, v)?;
            }
        }
        s.merge(cli);
        Ok(s)
    }
}

fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) if !v.trim().is_empty() => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&t| t > 0)
            .map(Some)
            .ok_or_else(|| CliError::Config(format!("{THREADS_ENV}={v} is not a positive integer"))),
        _ => Ok(None),
    }
}

struct Writer {
    dir: PathBuf,
    formats: Vec<Format>,
    written: Vec<PathBuf>,
}

impl Writer {
    fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.written.push(path);
        Ok(())
    }

    fn table(&mut self, stem: &str, table: &Table) -> Result<(), CliError> {
        if self.wants(Format::Csv) {
            self.put(&format!("{stem}.csv"), table.to_csv()?.as_bytes())?;
        }
        Ok(())
    }

    fn json<T: serde::Serialize + ?Sized>(&mut self, stem: &str, value: &T) -> Result<(), CliError> {
        if self.wants(Format::Json) {
            self.put(&format!("{stem}.json"), to_json(value)?.as_bytes())?;
        }
        Ok(())
    }

    fn figure(&mut self, stem: &str, fig: impl FnOnce() -> Figure) -> Result<(), CliError> {
        if self.wants(Format::Svg) {
            self.put(&format!("{stem}.svg"), render_svg(&fig())?.as_bytes())?;
        }
        Ok(())
    }
}

fn check_trials(records: &[TrialRecord]) -> Result<(), CliError> {
    let failed = records.iter().filter(|r| !r.is_ok()).count();
    for r in records.iter().filter(|r| !r.is_ok()) {
        eprintln!(
            "trial n={} k={} p={} beta={} #{} failed: {}",
            r.n, r.k, r.p_level, r.beta, r.trial_index, r.status
        );
    }
    if !records.is_empty() && failed == records.len() {
        return Err(CliError::AllTrialsFailed(failed));
    }
    Ok(())
}

fn trial_experiment(
    w: &mut Writer,
    config: &CampaignConfig,
    figure: impl FnOnce(&[CellSummary]) -> Figure,
) -> Result<(), CliError> {
    let stem = config.experiment.name();
    let records = run_campaign(config)?;
    let summary = summarize(&records)?;
    w.table(&format!("{stem}_trials"), &trial_table(&records))?;
    w.table(&format!("{stem}_summary"), &summary_table(&summary))?;
    w.json(&format!("{stem}_trials"), &records)?;
    w.json(&format!("{stem}_summary"), &summary)?;
    // failed trials keep their rows; the plot needs at least one success
    if records.iter().any(TrialRecord::is_ok) {
        w.figure(stem, || figure(&summary))?;
    }
    check_trials(&records)
}

fn mean_points(
    summary: &[CellSummary],
    x: impl Fn(&CellSummary) -> f64,
    metric: &str,
) -> Vec<(f64, f64)> {
    summary
        .iter()
        .filter_map(|s| s.get(metric).map(|st| (x(s), st.mean)))
        .collect()
}

fn run_experiment(w: &mut Writer, config: &CampaignConfig, bins: Option<usize>) -> Result<(), CliError> {
    match config.experiment {
        Experiment::Connectivity => trial_experiment(w, config, |s| Figure {
            title: "Mean fraction of vertices in the LSCC".into(),
            x_label: "k".into(),
            y_label: "LSCC fraction".into(),
            layer: Layer::Scatter(mean_points(s, |c| c.k as f64, "lscc_fraction_pre")),
        }),
        Experiment::Coverage => trial_experiment(w, config, |s| Figure {
            title: "Mean coverage by computation fraction".into(),
            x_label: "beta".into(),
            y_label: "alpha".into(),
            layer: Layer::Scatter(mean_points(s, |c| c.beta, "alpha")),
        }),
        Experiment::Baselines => {
            let records = run_baselines(config)?;
            w.table("baselines", &baseline_table(&records))?;
            w.json("baselines", &records)?;
            w.figure("baselines", || Figure {
                title: "Maximal baseline lengths".into(),
                x_label: "n".into(),
                y_label: "max baseline".into(),
                layer: Layer::Scatter(records.iter().map(|r| (r.n as f64, r.max_baseline)).collect()),
            })
        }
        Experiment::PowerDist => {
            let results = run_power_dist(config)?;
            let comparisons: Vec<_> = results.iter().map(|r| r.0.clone()).collect();
            w.table("power_dist", &cost_comparison_table(&comparisons))?;
            w.json("power_dist", &comparisons)?;
            for (c, costs) in &results {
                let stem = format!("power_dist_costs_n{}_k{}", c.n, c.k);
                w.table(&stem, &cost_sample_table(c.n, c.k, costs))?;
                w.figure(&stem, || Figure {
                    title: format!("Transmission costs, n={} k={}", c.n, c.k),
                    x_label: "cost".into(),
                    y_label: "count".into(),
                    layer: Layer::Histogram {
                        values: costs.clone(),
                        bins,
                    },
                })?;
            }
            Ok(())
        }
        Experiment::FitCorrection => {
            let report = run_fit_correction(config)?;
            w.table("scale_fits", &scale_fit_table(&report))?;
            w.table("power_law", &power_law_table(&report))?;
            w.json("fit_correction", &report)?;
            w.figure("fit_correction", || Figure {
                title: "Fitted cost scale".into(),
                x_label: "n".into(),
                y_label: "scale".into(),
                layer: Layer::Scatter(report.fits.iter().map(|f| (f.n as f64, f.mle_scale)).collect()),
            })
        }
    }
}

fn run(experiments: &[Experiment], args: &RunArgs) -> Result<Vec<PathBuf>, CliError> {
    let settings = args.settings()?;
    let configs = experiments
        .iter()
        .map(|&e| settings.campaign(e))
        .collect::<Result<Vec<_>, _>>()?;
    let threads = threads_from_env()?;
    let mut w = Writer {
        dir: settings.out_dir(),
        formats: settings.formats(),
        written: Vec::new(),
    };
    with_threads(threads, || {
        configs
            .iter()
            .try_for_each(|c| run_experiment(&mut w, c, settings.bins))
    })??;
    Ok(w.written)
}

fn quantile(args: &QuantileArgs) -> Result<f64, CliError> {
    if !(args.p > 0.0 && args.p < 1.0) {
        return Err(CliError::Config(format!("p = {} must lie in (0, 1)", args.p)));
    }
    if args.n < 2 || args.k == 0 || args.k >= args.n {
        return Err(CliError::Config(format!("need n >= 2 and 1 <= k < n, got n={} k={}", args.n, args.k)));
    }
    if !within_correction_range(args.n) {
        eprintln!("warning: n={} is outside the range the scale correction was fitted on", args.n);
    }
    let model = CostModel::new(args.n, args.k, true)?;
    Ok(swarm_core::energy::gg_quantile(args.p, &model.params)?)
}

/// Parses `args` and runs the command, returning the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().after_help(defaults_help()).try_get_matches_from(args) {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match &cli.command {
        Command::Quantile(q) => quantile(q).map(|v| {
            println!("{v}");
            Vec::new()
        }),
        Command::Connectivity(a) => run(&[Experiment::Connectivity], a),
        Command::Baselines(a) => run(&[Experiment::Baselines], a),
        Command::PowerDist(a) => run(&[Experiment::PowerDist], a),
        Command::FitCorrection(a) => run(&[Experiment::FitCorrection], a),
        Command::Coverage(a) => run(&[Experiment::Coverage], a),
        Command::Campaign(a) => a.settings().and_then(|s| {
            let list = s.experiment.map_or(Experiment::ALL.to_vec(), |e| vec![e]);
            run(&list, a)
        }),
    };
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use swarm_core::harness::{run_trial, Cell};

    #[test]
    fn all_failed_trials_exit_three() {
        let cell = Cell {
            n: 50,
            k: 4,
            p_level: 0.5,
            beta: 0.5,
        };
        let mut recs: Vec<TrialRecord> = (0..3).map(|t| run_trial(&cell, t, t)).collect();
        assert!(check_trials(&recs).is_ok());
        recs[0].status = "error: injected".into();
        assert!(check_trials(&recs).is_ok());
        for r in &mut recs {
            r.status = "error: injected".into();
        }
        assert_eq!(check_trials(&recs).unwrap_err().exit_code(), 3);
    }

    #[test]
    fn help_epilogue_lists_every_experiment() {
        let text = defaults_help();
        for e in Experiment::ALL {
            assert!(text.contains(&e.name().replace('_', "-")));
        }
        assert!(text.contains("k=2,3,4,5,6,7,8,9,10,11,12"));
    }
}
