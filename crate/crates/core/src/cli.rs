//! Command-line front end.
//!
//! Configuration files are flat `key = value` documents; `#` starts a
//! comment. Every run writes its CSV outputs and a `manifest.cfg` (the fully
//! resolved configuration, in the same format) under the output directory.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::bounds::{verify_prop5_ordering, BoundQuery};
use crate::criteria::{boundary_sample, calibrate, Family};
use crate::engine::{EvidenceModel, QueryScheme, DEFAULT_MAX_SEQUENCES};
use crate::error::{Error, Result};
use crate::montecarlo::{
    default_sweep_methods, letters_projection, run_experiment, speed_accuracy_sweep,
    trajectory_ensemble, EnsembleConfig, ExperimentConfig, ExperimentResult, PriorSpec,
    SweepPoint,
};
use crate::simplex::SimplexPoint;
use crate::tables::{ComparisonRow, TableId, DEFAULT_SEED, TRIALS};

/// Environment variable that fixes the worker count.
pub const THREADS_ENV: &str = "RBC_STOPLAB_THREADS";
pub const DEFAULT_OUT_DIR: &str = "out";
pub const MANIFEST_FILE: &str = "manifest.cfg";

/// Exit code for configuration errors and unreadable inputs.
pub const EXIT_CONFIG: u8 = 2;
/// Exit code when `table` finds cells outside tolerance, or a run fails.
pub const EXIT_FAILURE: u8 = 1;

/// How the prior is given in a config file.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorValue {
    Vector(Vec<f64>),
    RandomRemainder(f64),
}

/// Parsed and validated configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub prior: PriorValue,
    pub true_index: usize,
    pub tau: f64,
    pub methods: Vec<Family>,
    pub model: EvidenceModel,
    pub scheme: QueryScheme,
    pub trials: usize,
    pub max_sequences: u32,
    pub seed: u64,
    pub out_dir: PathBuf,
}

const KEYS: [&str; 14] = [
    "n",
    "prior",
    "true_index",
    "tau",
    "methods",
    "mu_pos",
    "c_pos",
    "mu_neg",
    "c_neg",
    "scheme",
    "trials",
    "max_sequences",
    "seed",
    "out_dir",
];

fn line_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("line {line}: {msg}"))
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>().map_err(|e| line_err(line, format!("`{key}`: cannot parse `{v}`: {e}")))
}

fn parse_f64_list(line: usize, key: &str, v: &str) -> Result<Vec<f64>> {
    let inner = v.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_num::<f64>(line, key, s))
        .collect()
}

fn parse_scheme(v: &str) -> std::result::Result<QueryScheme, String> {
    let lower = v.to_ascii_lowercase();
    if lower == "broadcast" {
        return Ok(QueryScheme::Broadcast);
    }
    if let Some(rest) = lower.strip_prefix("topn:") {
        return rest
            .trim()
            .parse::<usize>()
            .map(QueryScheme::TopN)
            .map_err(|e| format!("bad topN count `{rest}`: {e}"));
    }
    Err(format!("unknown scheme `{v}` (expected broadcast or topN:<N>)"))
}

fn scheme_str(s: QueryScheme) -> String {
    match s {
        QueryScheme::Broadcast => "broadcast".into(),
        QueryScheme::TopN(k) => format!("topN:{k}"),
    }
}

impl RunConfig {
    /// Parses a config document; errors name the offending line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen: Vec<(&'static str, usize, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| line_err(line, format!("expected `key = value`, got `{body}`")))?;
            let k = k.trim();
            let key = KEYS
                .iter()
                .find(|known| **known == k)
                .ok_or_else(|| line_err(line, format!("unknown key `{k}`")))?;
            if let Some((_, first, _)) = seen.iter().find(|(sk, _, _)| sk == key) {
                return Err(line_err(line, format!("duplicate key `{k}` (first set on line {first})")));
            }
            seen.push((key, line, v.trim().to_string()));
        }
        let get = |k: &str| seen.iter().find(|(sk, _, _)| *sk == k).map(|(_, l, v)| (*l, v.as_str()));
        let require = |k: &str| get(k).ok_or_else(|| Error::Config(format!("missing required key `{k}`")));

        let (prior_line, prior_raw) = require("prior")?;
        let prior = match prior_raw.strip_prefix("random_remainder:") {
            Some(m) => PriorValue::RandomRemainder(parse_num(prior_line, "prior", m.trim())?),
            None => PriorValue::Vector(parse_f64_list(prior_line, "prior", prior_raw)?),
        };
        let n = match (get("n"), &prior) {
            (Some((l, v)), PriorValue::Vector(p)) => {
                let n: usize = parse_num(l, "n", v)?;
                if n != p.len() {
                    return Err(line_err(
                        prior_line,
                        format!("prior has {} entries but n = {n}", p.len()),
                    ));
                }
                n
            }
            (Some((l, v)), PriorValue::RandomRemainder(_)) => parse_num(l, "n", v)?,
            (None, PriorValue::Vector(p)) => p.len(),
            (None, PriorValue::RandomRemainder(_)) => {
                return Err(line_err(prior_line, "a random_remainder prior needs `n`"))
            }
        };
        if n < 2 {
            return Err(Error::Config(format!("n = {n}: need at least two classes")));
        }

        let true_index = match get("true_index") {
            Some((l, v)) => {
                let i: usize = parse_num(l, "true_index", v)?;
                if i >= n {
                    return Err(line_err(l, format!("true_index {i} out of range for n = {n}")));
                }
                i
            }
            None => 0,
        };

        match &prior {
            PriorValue::Vector(p) => {
                SimplexPoint::new(p.clone()).map_err(|e| line_err(prior_line, e))?;
            }
            PriorValue::RandomRemainder(m) => {
                if !(*m > 0.0 && *m < 1.0) {
                    return Err(line_err(prior_line, format!("true mass {m} must lie in (0, 1)")));
                }
            }
        }

        let (tau_line, tau_raw) = require("tau")?;
        let tau: f64 = parse_num(tau_line, "tau", tau_raw)?;
        let methods = match get("methods") {
            Some((l, v)) => {
                let list: Vec<Family> = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse::<Family>().map_err(|e| line_err(l, e)))
                    .collect::<Result<_>>()?;
                if list.is_empty() {
                    return Err(line_err(l, "`methods` is empty"));
                }
                list
            }
            None => Family::ALL.to_vec(),
        };
        for &f in &methods {
            calibrate(f, tau, n).map_err(|e| line_err(tau_line, e))?;
        }

        let mut model_vals = [0.0; 4];
        let mut model_line = 0;
        for (slot, key) in model_vals.iter_mut().zip(["mu_pos", "c_pos", "mu_neg", "c_neg"]) {
            let (l, v) = require(key)?;
            *slot = parse_num(l, key, v)?;
            model_line = model_line.max(l);
        }
        let model = EvidenceModel::new(model_vals[0], model_vals[1], model_vals[2], model_vals[3])
            .map_err(|e| line_err(model_line, e))?;

        let scheme = match get("scheme") {
            Some((l, v)) => {
                let s = parse_scheme(v).map_err(|e| line_err(l, e))?;
                s.validate(n).map_err(|e| line_err(l, e))?;
                s
            }
            None => QueryScheme::Broadcast,
        };
        let positive = |k: &str, default: u64| -> Result<u64> {
            match get(k) {
                Some((l, v)) => {
                    let x: u64 = parse_num(l, k, v)?;
                    if x == 0 {
                        return Err(line_err(l, format!("`{k}` must be >= 1")));
                    }
                    Ok(x)
                }
                None => Ok(default),
            }
        };
        let trials = positive("trials", TRIALS as u64)? as usize;
        let max_sequences = u32::try_from(positive("max_sequences", DEFAULT_MAX_SEQUENCES as u64)?)
            .map_err(|_| Error::Config("`max_sequences` too large".into()))?;
        let seed = match get("seed") {
            Some((l, v)) => parse_num(l, "seed", v)?,
            None => DEFAULT_SEED,
        };
        let out_dir = get("out_dir").map_or_else(|| PathBuf::from(DEFAULT_OUT_DIR), |(_, v)| PathBuf::from(v));

        Ok(Self {
            n,
            prior,
            true_index,
            tau,
            methods,
            model,
            scheme,
            trials,
            max_sequences,
            seed,
            out_dir,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Serializes back to the config format; `parse(to_config_string())`
    /// round-trips.
    pub fn to_config_string(&self) -> String {
        let mut s = String::new();
        let prior = match &self.prior {
            PriorValue::Vector(p) => join(p.iter().map(|v| v.to_string())),
            PriorValue::RandomRemainder(m) => format!("random_remainder:{m}"),
        };
        let methods = join(self.methods.iter().map(|f| f.as_str().to_string()));
        let m = &self.model;
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "prior = {prior}");
        let _ = writeln!(s, "true_index = {}", self.true_index);
        let _ = writeln!(s, "tau = {}", self.tau);
        let _ = writeln!(s, "methods = {methods}");
        let _ = writeln!(s, "mu_pos = {}", m.mu_pos);
        let _ = writeln!(s, "c_pos = {}", m.c_pos);
        let _ = writeln!(s, "mu_neg = {}", m.mu_neg);
        let _ = writeln!(s, "c_neg = {}", m.c_neg);
        let _ = writeln!(s, "scheme = {}", scheme_str(self.scheme));
        let _ = writeln!(s, "trials = {}", self.trials);
        let _ = writeln!(s, "max_sequences = {}", self.max_sequences);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "out_dir = {}", self.out_dir.display());
        s
    }

    pub fn prior_spec(&self) -> Result<PriorSpec> {
        Ok(match &self.prior {
            PriorValue::Vector(p) => PriorSpec::Explicit(SimplexPoint::new(p.clone())?),
            PriorValue::RandomRemainder(m) => PriorSpec::RandomRemainder { n: self.n, true_mass: *m },
        })
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            prior: self.prior_spec()?,
            true_index: self.true_index,
            methods: self.methods.clone(),
            tau: self.tau,
            model: self.model,
            scheme: self.scheme,
            n_trials: self.trials,
            max_sequences: self.max_sequences,
            master_seed: self.seed,
            common_random_numbers: true,
            check_prior: true,
            store_trajectories: 0,
        })
    }
}

fn join(items: impl Iterator<Item = String>) -> String {
    items.collect::<Vec<_>>().join(",")
}

#[derive(Debug, Parser)]
#[command(name = "rbc-stoplab", version, about = "Stopping criteria for recursive Bayesian classification")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte-Carlo experiment described by a config file.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Reproduce one of the synthetic tables and compare it cell by cell.
    Table {
        id: TableId,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = TRIALS)]
        trials: usize,
        #[arg(long, default_value = DEFAULT_OUT_DIR)]
        out_dir: PathBuf,
    },
    /// Speed/accuracy trade-off over a list of confidence levels.
    Sweep {
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_values_t = [0.65, 0.69, 0.72, 0.76, 0.79, 0.83, 0.86, 0.9])]
        tau_list: Vec<f64>,
        /// Include every configured method, M5 too.
        #[arg(long)]
        all_methods: bool,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Closed-form stop and false-stop probabilities with ordering checks.
    Bounds {
        config: PathBuf,
        /// Inclusive range such as `1..20` or `1-20`.
        #[arg(long, default_value = "1..20")]
        s_range: String,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Points on a rule's stopping boundary in the 3-class simplex.
    Boundary {
        method: Family,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 360)]
        resolution: usize,
        #[arg(long, default_value = DEFAULT_OUT_DIR)]
        out_dir: PathBuf,
    },
    /// Expected sequences to type a fixed number of letters.
    Letters {
        #[arg(long)]
        acc: f64,
        #[arg(long)]
        eseq: f64,
        #[arg(long, default_value_t = 100)]
        total: u32,
        /// Charge only the letters left after each round.
        #[arg(long)]
        literal_pseudocode: bool,
    },
    /// Simulated posterior trajectories and their mean.
    Trajectories {
        config: PathBuf,
        #[arg(long, default_value_t = EnsembleConfig::DEFAULT_COUNT)]
        count: usize,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Configures the global worker pool from [`THREADS_ENV`], if set.
pub fn init_threads() -> Result<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("{THREADS_ENV}={v}: {e}")))?;
    // A pool may already exist (e.g. in tests); keep it in that case.
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Entry point used by the binary.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match init_threads().and_then(|_| run(cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            })
        }
    }
}

pub fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::Simulate { config, out_dir } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(d) = out_dir {
                cfg.out_dir = d;
            }
            let result = run_experiment(&cfg.experiment()?)?;
            prepare_dir(&cfg.out_dir)?;
            write_result(&cfg.out_dir, "", &result)?;
            write_manifest(&cfg.out_dir, &cfg.to_config_string())?;
            for m in &result.methods {
                println!(
                    "{:<6} mean_sequences={:.3} accuracy={:.4}",
                    m.family.as_str(),
                    m.mean_sequences,
                    m.accuracy
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Table { id, seed, trials, out_dir } => {
            let report = crate::tables::reproduce_table_with(id, seed, trials)?;
            prepare_dir(&out_dir)?;
            let prefix = format!("{id}_");
            write_result(&out_dir, &prefix, &report.result)?;
            write_comparison(&out_dir.join(format!("{id}_comparison.csv")), &report.rows)?;
            write_manifest(
                &out_dir,
                &format!("table = {id}\nseed = {seed}\ntrials = {trials}\nout_dir = {}\n", out_dir.display()),
            )?;
            let failed = report.failures().count();
            println!("{id}: {} cells, {failed} outside tolerance", report.rows.len());
            for r in report.failures() {
                println!(
                    "  FAIL {} s={} {}: published={:.2} repro={:.4} |delta|={:.4}",
                    r.family.as_str(),
                    r.sequence,
                    r.metric.as_str(),
                    r.published,
                    r.repro,
                    r.abs_delta
                );
            }
            Ok(if failed == 0 { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILURE) })
        }
        Command::Sweep { config, tau_list, all_methods, out_dir } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(d) = out_dir {
                cfg.out_dir = d;
            }
            if !all_methods {
                let keep = default_sweep_methods();
                cfg.methods.retain(|f| keep.contains(f));
                if cfg.methods.is_empty() {
                    return Err(Error::Config("no methods left to sweep (pass --all-methods)".into()));
                }
            }
            let points = speed_accuracy_sweep(&cfg.experiment()?, &tau_list)?;
            prepare_dir(&cfg.out_dir)?;
            write_sweep(&cfg.out_dir.join("sweep.csv"), &points)?;
            let taus = join(tau_list.iter().map(|t| t.to_string()));
            write_manifest(&cfg.out_dir, &format!("{}# tau_list = {taus}\n", cfg.to_config_string()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Bounds { config, s_range, out_dir } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(d) = out_dir {
                cfg.out_dir = d;
            }
            let range = parse_range(&s_range)?;
            let PriorValue::Vector(p) = &cfg.prior else {
                return Err(Error::Config("bounds need an explicit prior vector".into()));
            };
            let q = BoundQuery::new(
                SimplexPoint::new(p.clone())?,
                cfg.true_index,
                cfg.tau,
                cfg.model.mu_pos,
                cfg.model.c_pos,
            )?;
            let report = verify_prop5_ordering(&q, &range)?;
            prepare_dir(&cfg.out_dir)?;
            let mut w = csv::Writer::from_path(cfg.out_dir.join("bounds.csv"))?;
            w.write_record(["s", "tp_m1", "tp_mp", "fa_m1", "fa_mp", "fa_m1bar"])?;
            for r in &report.rows {
                w.write_record([
                    r.s.to_string(),
                    r.tp_m1.to_string(),
                    r.tp_mp.to_string(),
                    r.fa_m1.to_string(),
                    r.fa_mp.to_string(),
                    r.fa_m1bar.to_string(),
                ])?;
            }
            w.flush()?;
            write_manifest(&cfg.out_dir, &format!("{}# s_range = {s_range}\n", cfg.to_config_string()))?;
            for v in &report.violations {
                println!("ordering violation: {v}");
            }
            Ok(if report.holds() { ExitCode::SUCCESS } else { ExitCode::from(EXIT_FAILURE) })
        }
        Command::Boundary { method, tau, resolution, out_dir } => {
            let rule = calibrate(method, tau, 3).map_err(|e| Error::Config(e.to_string()))?;
            let pts = boundary_sample(&rule, resolution)?;
            prepare_dir(&out_dir)?;
            let mut w = csv::Writer::from_path(out_dir.join(format!("boundary_{}.csv", method.as_str())))?;
            w.write_record(["p1", "p2", "p3"])?;
            for p in &pts {
                w.write_record(p.probs().iter().map(|v| v.to_string()))?;
            }
            w.flush()?;
            write_manifest(
                &out_dir,
                &format!(
                    "method = {method}\ntau = {tau}\nresolution = {resolution}\nout_dir = {}\n",
                    out_dir.display()
                ),
            )?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Letters { acc, eseq, total, literal_pseudocode } => {
            let v = letters_projection(acc, eseq, total, literal_pseudocode)
                .map_err(|e| Error::Config(e.to_string()))?;
            println!("{v}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Trajectories { config, count, out_dir } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(d) = out_dir {
                cfg.out_dir = d;
            }
            let PriorValue::Vector(p) = &cfg.prior else {
                return Err(Error::Config("trajectories need an explicit prior vector".into()));
            };
            let ens = trajectory_ensemble(
                &[SimplexPoint::new(p.clone())?],
                &EnsembleConfig {
                    true_index: cfg.true_index,
                    model: cfg.model,
                    scheme: cfg.scheme,
                    count,
                    sequences: cfg.max_sequences,
                    master_seed: cfg.seed,
                },
            )?;
            prepare_dir(&cfg.out_dir)?;
            let mut w = csv::Writer::from_path(cfg.out_dir.join("trajectories.csv"))?;
            let mut header = vec!["trajectory".to_string(), "s".to_string()];
            header.extend((1..=cfg.n).map(|i| format!("p{i}")));
            w.write_record(&header)?;
            for e in &ens {
                let labelled = e
                    .trajectories
                    .iter()
                    .enumerate()
                    .map(|(i, t)| (i.to_string(), t))
                    .chain(std::iter::once(("mean".to_string(), &e.mean)));
                for (label, path) in labelled {
                    for (s, p) in path.iter().enumerate() {
                        let mut rec = vec![label.clone(), s.to_string()];
                        rec.extend(p.probs().iter().map(|v| v.to_string()));
                        w.write_record(&rec)?;
                    }
                }
            }
            w.flush()?;
            write_manifest(&cfg.out_dir, &format!("{}# count = {count}\n", cfg.to_config_string()))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Parses `a..b`, `a..=b` or `a-b` (inclusive) into the list of integers.
pub fn parse_range(s: &str) -> Result<Vec<u32>> {
    let t = s.trim();
    let (a, b) = t
        .split_once("..=")
        .or_else(|| t.split_once(".."))
        .or_else(|| t.split_once('-'))
        .ok_or_else(|| Error::Config(format!("bad range `{s}` (expected a..b)")))?;
    let parse = |x: &str| {
        x.trim()
            .parse::<u32>()
            .map_err(|e| Error::Config(format!("bad range `{s}`: {e}")))
    };
    let (a, b) = (parse(a)?, parse(b)?);
    if a == 0 || a > b {
        return Err(Error::Config(format!("bad range `{s}`: need 1 <= a <= b")));
    }
    Ok((a..=b).collect())
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn write_manifest(dir: &Path, body: &str) -> Result<()> {
    fs::write(dir.join(MANIFEST_FILE), body)?;
    Ok(())
}

/// Writes one matrix per metric (`method,s1,s2,...`) plus a summary.
pub fn write_result(dir: &Path, prefix: &str, result: &ExperimentResult) -> Result<()> {
    let mut header = vec!["method".to_string()];
    header.extend((1..=result.max_sequences).map(|s| format!("s{s}")));
    for (name, pick) in [
        ("p_stop", (|m: &crate::montecarlo::MethodResult| &m.p_stop) as fn(&_) -> &Vec<f64>),
        ("p_true_given_stop", |m| &m.p_true_given_stop),
    ] {
        let mut w = csv::Writer::from_path(dir.join(format!("{prefix}{name}.csv")))?;
        w.write_record(&header)?;
        for m in &result.methods {
            let mut rec = vec![m.family.as_str().to_string()];
            rec.extend(pick(m).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush()?;
    }
    let mut w = csv::Writer::from_path(dir.join(format!("{prefix}summary.csv")))?;
    w.write_record(["method", "mean_sequences", "accuracy"])?;
    for m in &result.methods {
        w.write_record([m.family.as_str().to_string(), m.mean_sequences.to_string(), m.accuracy.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["table", "method", "sequence", "metric", "published", "repro", "abs_delta", "pass"])?;
    for r in rows {
        w.write_record([
            r.table.to_string(),
            r.family.as_str().to_string(),
            r.sequence.to_string(),
            r.metric.as_str().to_string(),
            format!("{:.2}", r.published),
            r.repro.to_string(),
            r.abs_delta.to_string(),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep(path: &Path, points: &[SweepPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "tau", "mean_sequences", "accuracy"])?;
    for p in points {
        w.write_record([
            p.family.as_str().to_string(),
            p.tau.to_string(),
            p.mean_sequences.to_string(),
            p.accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a matrix written by [`write_result`] back as `(method, values)`.
pub fn read_matrix(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut it = rec.iter();
        let name = it.next().unwrap_or_default().to_string();
        let vals = it
            .map(|v| v.parse::<f64>().map_err(|e| Error::Io(format!("{}: {e}", path.display()))))
            .collect::<Result<_>>()?;
        out.push((name, vals));
    }
    Ok(out)
}
