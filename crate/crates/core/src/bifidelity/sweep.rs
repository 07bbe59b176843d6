use std::fmt::Write as _;
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, DenseMatrix};
use crate::selectors::{self, Method, SelectionResult, SelectorConfig};

use super::{evaluate_error_on, Ensemble};

/// Which columns enter the error metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoringMode {
    /// Only columns that were not selected.
    #[default]
    HeldOut,
    /// Every column, selected ones included.
    AllColumns,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub scoring: ScoringMode,
    /// Number of seeds for the random selector; seeds are `rng_seed + t`.
    pub random_trials: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            scoring: ScoringMode::HeldOut,
            random_trials: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub method: String,
    pub subset_size: usize,
    pub low_error: f64,
    pub high_error: f64,
    pub seed: Option<u64>,
}

/// Reconstruction errors ordered by method, then subset size, then seed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
}

/// Mean, minimum and maximum over the seeds of one (method, size) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub method: String,
    pub subset_size: usize,
    pub trials: usize,
    pub low_mean: f64,
    pub low_min: f64,
    pub low_max: f64,
    pub high_mean: f64,
    pub high_min: f64,
    pub high_max: f64,
}

pub const CSV_HEADER: &str = "method,subset_size,low_error,high_error,seed";

impl ErrorReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            // Debug formatting of f64 is the shortest string that round-trips.
            let _ = write!(
                out,
                "{},{},{:?},{:?},",
                r.method, r.subset_size, r.low_error, r.high_error
            );
            if let Some(seed) = r.seed {
                let _ = write!(out, "{seed}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_csv().as_bytes())
    }

    /// Parses the CSV produced by [`Self::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(CSV_HEADER) {
            return Err(Error::Format("missing or wrong CSV header".into()));
        }
        let bad = |line: &str| Error::Format(format!("bad CSV row `{line}`"));
        let rows = lines
            .filter(|l| !l.is_empty())
            .map(|line| {
                let f: Vec<&str> = line.split(',').collect();
                if f.len() != 5 {
                    return Err(bad(line));
                }
                Ok(ErrorRow {
                    method: f[0].to_string(),
                    subset_size: f[1].parse().map_err(|_| bad(line))?,
                    low_error: f[2].parse().map_err(|_| bad(line))?,
                    high_error: f[3].parse().map_err(|_| bad(line))?,
                    seed: if f[4].is_empty() {
                        None
                    } else {
                        Some(f[4].parse().map_err(|_| bad(line))?)
                    },
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ErrorReport { rows })
    }

    /// Rows for one method, in report order.
    pub fn method_rows<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a ErrorRow> + 'a {
        self.rows.iter().filter(move |r| r.method == method)
    }

    /// Aggregates rows sharing a (method, size) pair.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut out: Vec<SummaryRow> = Vec::new();
        for r in &self.rows {
            match out.last_mut() {
                Some(s) if s.method == r.method && s.subset_size == r.subset_size => {
                    s.trials += 1;
                    s.low_mean += r.low_error;
                    s.high_mean += r.high_error;
                    s.low_min = s.low_min.min(r.low_error);
                    s.low_max = s.low_max.max(r.low_error);
                    s.high_min = s.high_min.min(r.high_error);
                    s.high_max = s.high_max.max(r.high_error);
                }
                _ => out.push(SummaryRow {
                    method: r.method.clone(),
                    subset_size: r.subset_size,
                    trials: 1,
                    low_mean: r.low_error,
                    low_min: r.low_error,
                    low_max: r.low_error,
                    high_mean: r.high_error,
                    high_min: r.high_error,
                    high_max: r.high_error,
                }),
            }
        }
        for s in &mut out {
            s.low_mean /= s.trials as f64;
            s.high_mean /= s.trials as f64;
        }
        out
    }

    /// Whitespace-separated table for gnuplot: one row per subset size, one
    /// column per method and fidelity. Multi-seed methods get mean, min and
    /// max columns. `floor`, when given, adds the low-fidelity rank-k error
    /// for each size.
    pub fn plot_table(&self, floor: Option<&[(usize, f64)]>) -> String {
        let summary = self.summary();
        let mut methods: Vec<(String, bool)> = Vec::new();
        let mut sizes: Vec<usize> = Vec::new();
        for s in &summary {
            match methods.iter_mut().find(|(m, _)| *m == s.method) {
                Some(entry) => entry.1 |= s.trials > 1,
                None => methods.push((s.method.clone(), s.trials > 1)),
            }
            if !sizes.contains(&s.subset_size) {
                sizes.push(s.subset_size);
            }
        }
        sizes.sort_unstable();

        let mut out = String::from("# m");
        for (name, multi) in &methods {
            if *multi {
                for fid in ["low", "high"] {
                    for stat in ["mean", "min", "max"] {
                        let _ = write!(out, " {name}_{fid}_{stat}");
                    }
                }
            } else {
                let _ = write!(out, " {name}_low {name}_high");
            }
        }
        if floor.is_some() {
            out.push_str(" rank_k_low");
        }
        out.push('\n');

        for &m in &sizes {
            let _ = write!(out, "{m}");
            for (name, multi) in &methods {
                let cell = summary
                    .iter()
                    .find(|s| s.method == *name && s.subset_size == m);
                let values: Vec<f64> = match (cell, multi) {
                    (Some(s), true) => vec![
                        s.low_mean,
                        s.low_min,
                        s.low_max,
                        s.high_mean,
                        s.high_min,
                        s.high_max,
                    ],
                    (Some(s), false) => vec![s.low_mean, s.high_mean],
                    (None, true) => vec![f64::NAN; 6],
                    (None, false) => vec![f64::NAN; 2],
                };
                for v in values {
                    let _ = write!(out, " {v:?}");
                }
            }
            if let Some(floor) = floor {
                let v = floor
                    .iter()
                    .find(|(k, _)| *k == m)
                    .map_or(f64::NAN, |(_, e)| *e);
                let _ = write!(out, " {v:?}");
            }
            out.push('\n');
        }
        out
    }
}

// One cell of the sweep: a method, a size and, for random sampling, a seed.
struct Cell {
    method: usize,
    size: usize,
    seed: Option<u64>,
}

/// Selects on the low-fidelity ensemble only, then scores the low-fidelity
/// projection and the high-fidelity surrogate for every (method, size) pair.
///
/// Greedy methods run once at the largest size and reuse prefixes. Leverage
/// and random selection are rerun per size. Cells are evaluated on the
/// current rayon pool; row order does not depend on scheduling.
pub fn sweep(
    low: &Ensemble,
    high: &Ensemble,
    methods: &[SelectorConfig],
    sizes: &[usize],
    options: &SweepOptions,
) -> Result<ErrorReport> {
    let n = low.len();
    if high.len() != n || low.parameters != high.parameters {
        return Err(Error::DimensionMismatch(
            "low- and high-fidelity ensembles have different parameter grids".into(),
        ));
    }
    if sizes.is_empty() {
        return Err(Error::InvalidArgument("no subset sizes given".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "subset sizes must be strictly increasing".into(),
        ));
    }
    let max_size = *sizes.last().unwrap();
    if sizes[0] == 0 || max_size > n {
        return Err(Error::InvalidArgument(format!(
            "subset sizes must lie in 1..={n}"
        )));
    }
    if methods.iter().any(|c| c.method == Method::Random) && options.random_trials == 0 {
        return Err(Error::InvalidArgument(
            "random trials must be positive".into(),
        ));
    }

    let greedy: Vec<Option<SelectionResult>> = methods
        .par_iter()
        .map(|cfg| {
            if cfg.method.is_greedy() {
                let mut cfg = cfg.clone();
                cfg.target_size = max_size;
                selectors::select(&low.snapshots, &cfg).map(Some)
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::new();
    for (mi, cfg) in methods.iter().enumerate() {
        for &size in sizes {
            if cfg.method == Method::Random {
                for t in 0..options.random_trials as u64 {
                    cells.push(Cell {
                        method: mi,
                        size,
                        seed: Some(cfg.rng_seed.wrapping_add(t)),
                    });
                }
            } else {
                cells.push(Cell {
                    method: mi,
                    size,
                    seed: None,
                });
            }
        }
    }

    let rows = cells
        .par_iter()
        .map(|cell| {
            let cfg = &methods[cell.method];
            let subset: Vec<usize> = match &greedy[cell.method] {
                Some(sel) => sel.prefix(cell.size).to_vec(),
                None => {
                    let mut c = cfg.clone();
                    c.target_size = cell.size;
                    if let Some(seed) = cell.seed {
                        c.rng_seed = seed;
                    }
                    selectors::select(&low.snapshots, &c)?.ordered_indices
                }
            };
            let (low_error, high_error) = score_subset(low, high, &subset, options.scoring)?;
            Ok(ErrorRow {
                method: cfg.method.name().to_string(),
                subset_size: cell.size,
                low_error,
                high_error,
                seed: cell.seed,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ErrorReport { rows })
}

/// Low- and high-fidelity errors of the surrogate built on `subset`.
pub(crate) fn score_subset(
    low: &Ensemble,
    high: &Ensemble,
    subset: &[usize],
    scoring: ScoringMode,
) -> Result<(f64, f64)> {
    let n = low.len();
    let columns: Vec<usize> = match scoring {
        ScoringMode::AllColumns => (0..n).collect(),
        ScoringMode::HeldOut => (0..n).filter(|j| !subset.contains(j)).collect(),
    };
    if columns.is_empty() {
        return Ok((0.0, 0.0));
    }
    let low_basis = low.snapshots.select_columns(subset);
    let coeffs: DenseMatrix = linalg::pseudoinverse(&low_basis)? * &low.snapshots;
    let low_pred = &low_basis * &coeffs;
    let high_pred = high.snapshots.select_columns(subset) * &coeffs;
    Ok((
        evaluate_error_on(&low.snapshots, &low_pred, &columns)?,
        evaluate_error_on(&high.snapshots, &high_pred, &columns)?,
    ))
}
