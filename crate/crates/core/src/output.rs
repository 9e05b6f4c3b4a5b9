//! CSV/JSON serialization of campaign results.
//!
//! CSV files have a header row, comma separators and `.` decimals; floats
//! are written with 17 significant digits so they parse back bit-exactly.
//! Files are written to a temporary sibling and renamed into place.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::energy::PowerLawFit;
use crate::error::{Result, SwarmError};
use crate::graph::DirectedGraph;
use crate::harness::{
    BaselineRecord, CellSummary, CostLawComparison, FitCorrectionReport, TrialRecord,
};

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Table {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let ser = |e: csv::Error| SwarmError::Serialization(e.to_string());
        w.write_record(&self.header).map_err(ser)?;
        for row in &self.rows {
            w.write_record(row).map_err(ser)?;
        }
        let bytes = w
            .into_inner()
            .map_err(|e| SwarmError::Serialization(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| SwarmError::Serialization(e.to_string()))
    }
}

pub fn trial_table(records: &[TrialRecord]) -> Table {
    let mut t = Table::new(TrialRecord::CSV_HEADER);
    for r in records {
        let mut row = vec![
            r.n.to_string(),
            r.k.to_string(),
            fmt_f64(r.p_level),
            fmt_f64(r.beta),
            r.trial_index.to_string(),
            r.seed.to_string(),
        ];
        row.extend(
            r.metrics()
                .iter()
                .filter(|(name, _)| *name != "removed_edges")
                .map(|(_, v)| fmt_f64(*v)),
        );
        row.push(r.removed_edges.to_string());
        row.push(r.status.clone());
        row.push(r.lscc_agrees.to_string());
        t.push(row);
    }
    t
}

pub fn summary_table(summaries: &[CellSummary]) -> Table {
    let mut t = Table::new([
        "n", "k", "p_level", "beta", "metric", "mean", "sd", "min", "max", "count", "failed",
    ]);
    for s in summaries {
        for (name, st) in &s.metrics {
            t.push(vec![
                s.n.to_string(),
                s.k.to_string(),
                fmt_f64(s.p_level),
                fmt_f64(s.beta),
                name.clone(),
                fmt_f64(st.mean),
                fmt_f64(st.sd),
                fmt_f64(st.min),
                fmt_f64(st.max),
                st.count.to_string(),
                s.failed.to_string(),
            ]);
        }
    }
    t
}

pub fn baseline_table(records: &[BaselineRecord]) -> Table {
    let mut t = Table::new([
        "n",
        "k",
        "trial_index",
        "seed",
        "lscc_size",
        "max_baseline",
        "mean_baseline",
    ]);
    for r in records {
        t.push(vec![
            r.n.to_string(),
            r.k.to_string(),
            r.trial_index.to_string(),
            r.seed.to_string(),
            r.lscc_size.to_string(),
            fmt_f64(r.max_baseline),
            fmt_f64(r.mean_baseline),
        ]);
    }
    t
}

pub fn cost_comparison_table(rows: &[CostLawComparison]) -> Table {
    let mut t = Table::new([
        "n",
        "k",
        "samples",
        "uncorrected_scale",
        "corrected_scale",
        "mle_scale",
        "ks_uncorrected",
        "ks_corrected",
        "ks_mle",
        "empirical_median",
        "corrected_median",
    ]);
    for c in rows {
        t.push(vec![
            c.n.to_string(),
            c.k.to_string(),
            c.samples.to_string(),
            fmt_f64(c.uncorrected_scale),
            fmt_f64(c.corrected_scale),
            fmt_f64(c.mle_scale),
            fmt_f64(c.ks_uncorrected),
            fmt_f64(c.ks_corrected),
            fmt_f64(c.ks_mle),
            fmt_f64(c.empirical_median),
            fmt_f64(c.corrected_median),
        ]);
    }
    t
}

/// Long-format cost samples: one row per vertex per trial.
pub fn cost_sample_table(n: usize, k: usize, costs: &[f64]) -> Table {
    let mut t = Table::new(["n", "k", "trial_index", "vertex", "cost"]);
    for (i, c) in costs.iter().enumerate() {
        t.push(vec![
            n.to_string(),
            k.to_string(),
            (i / n).to_string(),
            (i % n).to_string(),
            fmt_f64(*c),
        ]);
    }
    t
}

pub fn scale_fit_table(report: &FitCorrectionReport) -> Table {
    let mut t = Table::new([
        "n",
        "k",
        "samples",
        "mle_scale",
        "corrected_scale",
        "uncorrected_scale",
    ]);
    for f in &report.fits {
        t.push(vec![
            f.n.to_string(),
            f.k.to_string(),
            f.samples.to_string(),
            fmt_f64(f.mle_scale),
            fmt_f64(f.corrected_scale),
            fmt_f64(f.uncorrected_scale),
        ]);
    }
    t
}

pub fn power_law_table(report: &FitCorrectionReport) -> Table {
    let mut t = Table::new([
        "k",
        "prefactor",
        "exponent",
        "log_prefactor_se",
        "exponent_se",
    ]);
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    let mut row = |label: String, f: &PowerLawFit| {
        t.push(vec![
            label,
            fmt_f64(f.prefactor),
            fmt_f64(f.exponent),
            opt(f.log_prefactor_se),
            opt(f.exponent_se),
        ])
    };
    row("all".into(), &report.pooled);
    for (k, f) in &report.per_k {
        row(k.to_string(), f);
    }
    t
}

/// `source,target,length` rows in source order.
pub fn edge_list_table(graph: &DirectedGraph) -> Table {
    let mut t = Table::new(["source", "target", "length"]);
    for (s, d, l) in graph.edges() {
        t.push(vec![s.to_string(), d.to_string(), fmt_f64(l)]);
    }
    t
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value).map_err(|e| SwarmError::Serialization(e.to_string()))
}

/// Writes through a temporary file in the destination directory and renames
/// it over `path`.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| SwarmError::Io(e.to_string()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Edge;
    use crate::harness::{run_campaign, CampaignConfig, Experiment};

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1e-300, 123456.789, 0.0, -2.5] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn trial_csv_header_and_json_names() {
        let mut cfg = CampaignConfig::defaults_for(Experiment::Coverage);
        cfg.n_grid = vec![50];
        cfg.p_grid = vec![0.9];
        cfg.beta_grid = vec![0.3];
        cfg.trials = 2;
        let recs = run_campaign(&cfg).unwrap();
        let csv = trial_table(&recs).to_csv().unwrap();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), TrialRecord::CSV_HEADER.join(","));
        assert_eq!(lines.count(), 2);
        let json: serde_json::Value = serde_json::from_str(&to_json(&recs).unwrap()).unwrap();
        let obj = json[0].as_object().unwrap();
        for name in TrialRecord::CSV_HEADER {
            assert!(obj.contains_key(name), "missing {name}");
        }
    }

    #[test]
    fn edge_list_rows() {
        let g = DirectedGraph::new(vec![
            vec![Edge {
                target: 1,
                length: 0.5,
            }],
            vec![],
        ])
        .unwrap();
        let csv = edge_list_table(&g).to_csv().unwrap();
        assert_eq!(csv, "source,target,length\n0,1,5.0000000000000000e-1\n");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("out.csv");
        write_atomic(&path, b"first").unwrap();
        write_atomic(&path, b"second").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "second");
        assert_eq!(std::fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }
}
