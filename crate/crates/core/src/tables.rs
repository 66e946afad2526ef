//! Golden fixtures for the three synthetic tables and the comparison report.

use std::fmt;
use std::str::FromStr;

use crate::criteria::Family;
use crate::engine::{EvidenceModel, QueryScheme};
use crate::error::{Error, Result};
use crate::montecarlo::{run_experiment, ExperimentConfig, ExperimentResult, PriorSpec};
use crate::simplex::SimplexPoint;

/// Absolute tolerance for every probability cell.
pub const CELL_TOLERANCE: f64 = 0.03;
pub const DEFAULT_SEED: u64 = 20_190_601;
pub const TRIALS: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TableId {
    T2,
    T3,
    T4,
}

impl TableId {
    pub const ALL: [TableId; 3] = [TableId::T2, TableId::T3, TableId::T4];

    pub fn as_str(self) -> &'static str {
        match self {
            TableId::T2 => "T2",
            TableId::T3 => "T3",
            TableId::T4 => "T4",
        }
    }
}

impl fmt::Display for TableId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TableId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T2" => Ok(TableId::T2),
            "T3" => Ok(TableId::T3),
            "T4" => Ok(TableId::T4),
            other => Err(Error::Config(format!("unknown table `{other}` (expected T2, T3 or T4)"))),
        }
    }
}

/// Printed values for one method: `(p_stop, p_true_given_stop)` per column.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenRow {
    pub family: Family,
    pub p_stop: &'static [f64],
    pub p_true: &'static [f64],
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldenTable {
    pub id: TableId,
    /// Sequence index of each printed column.
    pub columns: Vec<u32>,
    pub rows: Vec<GoldenRow>,
}

const fn row(family: Family, p_stop: &'static [f64], p_true: &'static [f64]) -> GoldenRow {
    GoldenRow { family, p_stop, p_true }
}

pub fn golden(id: TableId) -> GoldenTable {
    use Family::*;
    match id {
        TableId::T2 => GoldenTable {
            id,
            columns: (1..=7).collect(),
            rows: vec![
                row(MP, &[0.00, 0.06, 0.22, 0.43, 0.59, 0.67, 0.77], &[0.00, 0.67, 0.86, 0.96, 0.97, 0.98, 0.99]),
                row(M1, &[0.00, 0.06, 0.22, 0.43, 0.59, 0.67, 0.77], &[0.00, 0.67, 0.86, 0.96, 0.97, 0.98, 0.99]),
                row(M2, &[0.00, 0.08, 0.27, 0.47, 0.62, 0.70, 0.79], &[0.00, 0.67, 0.85, 0.95, 0.95, 0.97, 0.98]),
                row(M3, &[0.00, 0.34, 0.56, 0.70, 0.80, 0.85, 0.90], &[0.00, 0.20, 0.48, 0.63, 0.74, 0.80, 0.87]),
                row(M4, &[1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00], &[0.00, 0.55, 0.72, 0.82, 0.87, 0.90, 0.94]),
                row(M5, &[0.00, 0.00, 0.37, 0.41, 0.46, 0.55, 0.66], &[0.00, 0.00, 0.58, 0.76, 0.87, 0.91, 0.95]),
                row(M1Bar, &[0.00, 0.16, 0.37, 0.56, 0.71, 0.77, 0.84], &[0.00, 0.64, 0.84, 0.93, 0.95, 0.97, 0.98]),
            ],
        },
        TableId::T3 => GoldenTable {
            id,
            columns: (1..=9).collect(),
            rows: vec![
                row(MP, &[0.00, 0.08, 0.26, 0.42, 0.61, 0.70, 0.78, 0.82, 0.88], &[0.00, 0.36, 0.78, 0.89, 0.94, 0.96, 0.97, 0.98, 0.98]),
                row(M1, &[0.00, 0.03, 0.18, 0.35, 0.54, 0.66, 0.76, 0.81, 0.86], &[0.00, 0.29, 0.83, 0.90, 0.94, 0.97, 0.97, 0.98, 0.98]),
                row(M2, &[0.00, 0.05, 0.23, 0.41, 0.61, 0.72, 0.81, 0.85, 0.88], &[0.00, 0.32, 0.80, 0.89, 0.94, 0.96, 0.97, 0.98, 0.98]),
                row(M3, &[1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00], &[0.00, 0.43, 0.63, 0.74, 0.84, 0.87, 0.91, 0.93, 0.94]),
                row(M4, &[1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00, 1.00], &[0.00, 0.43, 0.63, 0.74, 0.84, 0.87, 0.91, 0.93, 0.94]),
                row(M5, &[0.00, 0.00, 0.35, 0.40, 0.47, 0.55, 0.62, 0.69, 0.76], &[0.00, 0.00, 0.46, 0.65, 0.82, 0.88, 0.92, 0.95, 0.96]),
                row(M1Bar, &[0.00, 0.48, 0.67, 0.79, 0.88, 0.92, 0.94, 0.95, 0.97], &[0.00, 0.38, 0.70, 0.80, 0.87, 0.90, 0.93, 0.95, 0.96]),
            ],
        },
        TableId::T4 => GoldenTable {
            id,
            columns: (10..=17).collect(),
            rows: vec![
                row(MP, &[0.09, 0.18, 0.31, 0.45, 0.60, 0.70, 0.77, 0.86], &[0.95, 0.98, 0.98, 0.99, 0.99, 0.99, 1.00, 1.00]),
                row(M1, &[0.05, 0.11, 0.21, 0.33, 0.48, 0.60, 0.70, 0.81], &[1.00, 0.99, 0.99, 1.00, 1.00, 1.00, 1.00, 1.00]),
                row(M2, &[0.05, 0.11, 0.21, 0.33, 0.48, 0.61, 0.70, 0.81], &[1.00, 0.99, 0.99, 1.00, 1.00, 1.00, 1.00, 1.00]),
                row(M3, &[0.05, 0.12, 0.22, 0.34, 0.49, 0.61, 0.71, 0.81], &[1.00, 0.99, 0.99, 1.00, 1.00, 1.00, 1.00, 1.00]),
                row(M4, &[0.05, 0.13, 0.23, 0.35, 0.49, 0.62, 0.72, 0.82], &[0.98, 0.99, 0.99, 1.00, 1.00, 1.00, 1.00, 1.00]),
                row(M5, &[0.00, 0.00, 0.00, 0.00, 0.00, 0.01, 0.03, 0.08], &[0.00, 0.00, 0.00, 0.00, 0.00, 1.00, 1.00, 1.00]),
                row(M1Bar, &[0.10, 0.20, 0.33, 0.47, 0.61, 0.72, 0.79, 0.88], &[0.94, 0.98, 0.98, 0.99, 0.99, 0.99, 0.99, 1.00]),
            ],
        },
    }
}

/// The experiment behind each table.
pub fn table_config(id: TableId, master_seed: u64) -> ExperimentConfig {
    let (prior, tau, model) = match id {
        TableId::T2 => (
            PriorSpec::Explicit(SimplexPoint::new(vec![0.42, 0.55, 0.03]).expect("valid prior")),
            0.8,
            EvidenceModel::new(0.6, 0.5, 0.0, 0.5).expect("valid model"),
        ),
        TableId::T3 => {
            let mut w = vec![0.13, 0.52, 0.30];
            w.extend(std::iter::repeat(0.05 / 7.0).take(7));
            (
                PriorSpec::Explicit(SimplexPoint::from_weights(&w).expect("valid prior")),
                0.75,
                EvidenceModel::new(0.8, 0.5, -0.3, 0.5).expect("valid model"),
            )
        }
        TableId::T4 => (
            PriorSpec::RandomRemainder { n: 10, true_mass: 0.1 },
            0.85,
            EvidenceModel::new(0.8, 0.5, -0.3, 0.5).expect("valid model"),
        ),
    };
    let golden = golden(id);
    ExperimentConfig {
        prior,
        true_index: 0,
        methods: golden.rows.iter().map(|r| r.family).collect(),
        tau,
        model,
        scheme: QueryScheme::Broadcast,
        n_trials: TRIALS,
        max_sequences: *golden.columns.last().expect("non-empty"),
        master_seed,
        common_random_numbers: true,
        check_prior: true,
        store_trajectories: 0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    PStop,
    PTrueGivenStop,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::PStop => "p_stop",
            Metric::PTrueGivenStop => "p_true_given_stop",
        }
    }
}

/// One compared cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub table: TableId,
    pub family: Family,
    pub sequence: u32,
    pub metric: Metric,
    pub published: f64,
    pub repro: f64,
    pub abs_delta: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableReport {
    pub id: TableId,
    pub result: ExperimentResult,
    pub rows: Vec<ComparisonRow>,
}

impl TableReport {
    pub fn failures(&self) -> impl Iterator<Item = &ComparisonRow> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn cell(&self, family: Family, sequence: u32, metric: Metric) -> Option<&ComparisonRow> {
        self.rows
            .iter()
            .find(|r| r.family == family && r.sequence == sequence && r.metric == metric)
    }
}

/// Compares an experiment against the printed values of `id`.
pub fn compare(id: TableId, result: &ExperimentResult) -> Vec<ComparisonRow> {
    let golden = golden(id);
    let mut out = Vec::new();
    for grow in &golden.rows {
        let Some(m) = result.method(grow.family) else { continue };
        for (k, &s) in golden.columns.iter().enumerate() {
            let idx = s as usize - 1;
            for (metric, published, repro) in [
                (Metric::PStop, grow.p_stop[k], m.p_stop[idx]),
                (Metric::PTrueGivenStop, grow.p_true[k], m.p_true_given_stop[idx]),
            ] {
                let abs_delta = (published - repro).abs();
                out.push(ComparisonRow {
                    table: id,
                    family: grow.family,
                    sequence: s,
                    metric,
                    published,
                    repro,
                    abs_delta,
                    pass: abs_delta <= CELL_TOLERANCE,
                });
            }
        }
    }
    out
}

pub fn reproduce_table(id: TableId, master_seed: u64) -> Result<TableReport> {
    reproduce_table_with(id, master_seed, TRIALS)
}

/// [`reproduce_table`] with a custom trial count.
pub fn reproduce_table_with(id: TableId, master_seed: u64, n_trials: usize) -> Result<TableReport> {
    let mut cfg = table_config(id, master_seed);
    cfg.n_trials = n_trials;
    let result = run_experiment(&cfg)?;
    let rows = compare(id, &result);
    Ok(TableReport { id, result, rows })
}
