//! The `simil` command line: compute groups, generate datasets, fit
//! exponents and collapse data. Every run writes its artifacts into
//! `--out-dir` and finishes with `manifest.json` listing them.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Map, Value};

use crate::config::load_problem;
use crate::dataset::DimensionlessDataset;
use crate::error::{Error, Result};
use crate::flows::{generate_hb_dataset, generate_laminar_dataset, load_rough_pipe_csv, HbGridSpec, LaminarGridSpec};
use crate::groups::{buckingham_group, renormalization_group, verify_invariance, DEFAULT_INVARIANCE_SEED};
use crate::learner::{collapse, collapse_quality, train, TrainConfig};
use crate::linalg::Matrix;
use crate::rational::{snap_string, Exponent};

/// Random trials used when checking group invariance.
pub const INVARIANCE_TRIALS: usize = 100;
/// Default bin count for collapse quality.
pub const DEFAULT_BINS: usize = 50;

#[derive(Debug, Parser)]
#[command(name = "simil", version, about = "Similarity groups and incomplete-similarity exponent fitting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Buckingham group of a construction, plus its renormalization group
    /// when the config has an `incomplete` block.
    Groups {
        #[arg(long)]
        config: PathBuf,
        /// Seed of the invariance check.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Write an analytic dataset as CSV.
    Generate {
        kind: DatasetKind,
        /// Grid settings; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Fit incomplete-similarity exponents to a dataset.
    Fit {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the training config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Renormalize a dataset with given exponents and score the collapse.
    Collapse {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DatasetKind {
    Laminar,
    Hb,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
enum DataFormat {
    #[default]
    Table,
    RoughPipe,
}

/// Dataset reference shared by `fit` and `collapse` configs.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FitConfig {
    data: PathBuf,
    #[serde(default)]
    format: DataFormat,
    retained: Option<usize>,
    #[serde(default)]
    train: TrainConfig,
    #[serde(default = "default_bins")]
    bins: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CollapseConfig {
    data: PathBuf,
    #[serde(default)]
    format: DataFormat,
    retained: Option<usize>,
    /// A JSON file holding `xi_matrix` and `xi_target`, e.g. a fit result.
    exponents: Option<PathBuf>,
    xi_matrix: Option<Vec<Vec<Exponent>>>,
    xi_target: Option<Vec<Exponent>>,
    #[serde(default = "default_bins")]
    bins: usize,
}

fn default_bins() -> usize {
    DEFAULT_BINS
}

/// Tracks written artifacts for the manifest.
struct Run {
    command: &'static str,
    config: Option<PathBuf>,
    seed: Option<u64>,
    out_dir: PathBuf,
    artifacts: Vec<String>,
    started: u64,
}

impl Run {
    fn new(command: &'static str, config: Option<&Path>, out_dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(out_dir)?;
        Ok(Self {
            command,
            config: config.map(Path::to_path_buf),
            seed: None,
            out_dir: out_dir.to_path_buf(),
            artifacts: Vec::new(),
            started: unix_seconds(),
        })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.artifacts.push(name.to_string());
        self.out_dir.join(name)
    }

    fn write_json(&mut self, name: &str, value: &Value) -> Result<()> {
        let path = self.path(name);
        let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    fn write_csv<F>(&mut self, name: &str, write: F) -> Result<()>
    where
        F: FnOnce(std::io::BufWriter<std::fs::File>) -> Result<()>,
    {
        let file = std::fs::File::create(self.path(name))?;
        write(std::io::BufWriter::new(file))
    }

    fn finish(self) -> Result<()> {
        let manifest = json!({
            "command": self.command,
            "config": self.config.as_ref().map(|p| p.display().to_string()),
            "seed": self.seed,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "artifacts": self.artifacts,
            "started_at": self.started,
            "finished_at": unix_seconds(),
        });
        let mut text = serde_json::to_string_pretty(&manifest).map_err(std::io::Error::other)?;
        text.push('\n');
        std::fs::write(self.out_dir.join("manifest.json"), text)?;
        Ok(())
    }
}

fn unix_seconds() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// Resolves `p` relative to the directory of the config file.
fn relative_to(config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn load_data(config: &Path, data: &Path, format: DataFormat, retained: Option<usize>) -> Result<DimensionlessDataset> {
    let path = relative_to(config, data);
    match format {
        DataFormat::RoughPipe => {
            let ds = load_rough_pipe_csv(&path)?;
            match retained {
                Some(n) if n != ds.retained() => ds.with_retained(n),
                _ => Ok(ds),
            }
        }
        DataFormat::Table => {
            let n = retained.ok_or_else(|| {
                Error::Config("`retained` is required for table datasets".into())
            })?;
            DimensionlessDataset::load_csv(&path, n)
        }
    }
}

fn snapped_rows(rows: &[Vec<f64>]) -> Value {
    Value::Array(rows.iter().map(|r| snapped(r)).collect())
}

fn snapped(v: &[f64]) -> Value {
    Value::Array(
        v.iter()
            .map(|x| snap_string(*x).map_or(Value::Null, Value::String))
            .collect(),
    )
}

fn format_exponents(rows: &[Vec<f64>], target: &[f64]) -> String {
    let show = |x: &f64| match snap_string(*x) {
        Some(s) => format!("{x:.6} (~{s})"),
        None => format!("{x:.6}"),
    };
    let mut out = String::new();
    for (j, r) in rows.iter().enumerate() {
        let items: Vec<String> = r.iter().map(show).collect();
        out += &format!("argument exponents, row {}: {}\n", j + 1, items.join(", "));
    }
    let items: Vec<String> = target.iter().map(show).collect();
    out += &format!("prefactor exponents: {}\n", items.join(", "));
    out
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Groups { config, seed, out_dir } => cmd_groups(&config, seed, &out_dir),
        Command::Generate { kind, config, out_dir } => cmd_generate(kind, config.as_deref(), &out_dir),
        Command::Fit { config, seed, out_dir } => cmd_fit(&config, seed, &out_dir),
        Command::Collapse { config, out_dir } => cmd_collapse(&config, &out_dir),
    }
}

fn cmd_groups(config: &Path, seed: Option<u64>, out_dir: &Path) -> Result<()> {
    let problem = load_problem(config)?;
    let mut run = Run::new("groups", Some(config), out_dir)?;
    let seed = seed.unwrap_or(DEFAULT_INVARIANCE_SEED);
    run.seed = Some(seed);
    let c = &problem.construction;

    let bg = buckingham_group(c)?;
    let mut buck = bg.table().to_json();
    let dev = verify_invariance(c, bg.table(), None, INVARIANCE_TRIALS, seed)?;
    buck["invariance_deviation"] = json!(dev);
    println!("buckingham group: invariance deviation {dev:.3e}");

    let mut out = Map::new();
    out.insert("buckingham".into(), buck);
    if let Some(spec) = &problem.incomplete {
        let rg = renormalization_group(c, spec)?;
        let mut ren = rg.table().to_json();
        let dev = verify_invariance(c, rg.table(), Some(spec), INVARIANCE_TRIALS, seed)?;
        ren["invariance_deviation"] = json!(dev);
        println!("renormalization group: invariance deviation {dev:.3e}");
        out.insert("renormalization".into(), ren);
    }
    out.insert("seed".into(), json!(seed));
    out.insert("trials".into(), json!(INVARIANCE_TRIALS));
    run.write_json("groups.json", &Value::Object(out))?;
    run.finish()
}

fn cmd_generate(kind: DatasetKind, config: Option<&Path>, out_dir: &Path) -> Result<()> {
    match kind {
        DatasetKind::Laminar => {
            let spec: LaminarGridSpec = config.map(read_json).transpose()?.unwrap_or_default();
            let ds = generate_laminar_dataset(&spec)?;
            let mut run = Run::new("generate laminar", config, out_dir)?;
            run.write_csv("laminar.csv", |w| ds.write_csv(w))?;
            println!("laminar: {} rows", ds.len());
            run.finish()
        }
        DatasetKind::Hb => {
            let spec: HbGridSpec = config.map(read_json).transpose()?.unwrap_or_default();
            let sets = generate_hb_dataset(&spec)?;
            let mut run = Run::new("generate hb", config, out_dir)?;
            for set in &sets {
                let name = format!("hb_n{}.csv", set.n);
                run.write_csv(&name, |w| set.dataset.write_csv(w))?;
                println!(
                    "{name}: {} rows, {} grid points skipped (plug fills the pipe)",
                    set.dataset.len(),
                    set.skipped
                );
            }
            run.finish()
        }
    }
}

fn cmd_fit(config: &Path, seed: Option<u64>, out_dir: &Path) -> Result<()> {
    let mut cfg: FitConfig = read_json(config)?;
    if let Some(s) = seed {
        cfg.train.seed = s;
    }
    let data = load_data(config, &cfg.data, cfg.format, cfg.retained)?;
    if data.rejected() > 0 {
        println!("{} rows rejected (non-positive entries)", data.rejected());
    }
    let trained = train(&data, &cfg.train)?;
    let result = &trained.result;

    let table = collapse(&data, &result.xi_matrix(), &result.xi_target)?;
    let quality = collapse_quality(&table, cfg.bins).ok();

    let mut run = Run::new("fit", Some(config), out_dir)?;
    run.seed = Some(cfg.train.seed);
    let mut out = serde_json::to_value(result).map_err(std::io::Error::other)?;
    out["snapped"] = json!({
        "xi_matrix": snapped_rows(&result.xi_matrix),
        "xi_target": snapped(&result.xi_target),
    });
    out["collapse_quality"] = json!(quality);
    out["bins"] = json!(cfg.bins);
    run.write_json("fit.json", &out)?;
    run.write_csv("collapsed.csv", |w| table.write_csv(w))?;
    print!("{}", format_exponents(&result.xi_matrix, &result.xi_target));
    println!("loss {:.6e} -> {:.6e}", result.initial_loss, result.final_loss);
    run.finish()
}

fn cmd_collapse(config: &Path, out_dir: &Path) -> Result<()> {
    let cfg: CollapseConfig = read_json(config)?;
    let data = load_data(config, &cfg.data, cfg.format, cfg.retained)?;

    let (rows, target): (Vec<Vec<f64>>, Vec<f64>) = match (&cfg.exponents, &cfg.xi_matrix, &cfg.xi_target) {
        (Some(path), None, None) => {
            #[derive(Deserialize)]
            struct Exps {
                #[serde(default)]
                xi_matrix: Vec<Vec<Exponent>>,
                xi_target: Vec<Exponent>,
            }
            let e: Exps = read_json(&relative_to(config, path))?;
            (
                e.xi_matrix.iter().map(|r| r.iter().map(|x| x.0).collect()).collect(),
                e.xi_target.iter().map(|x| x.0).collect(),
            )
        }
        (None, m, Some(t)) => (
            m.as_deref()
                .unwrap_or_default()
                .iter()
                .map(|r| r.iter().map(|x| x.0).collect())
                .collect(),
            t.iter().map(|x| x.0).collect(),
        ),
        _ => {
            return Err(Error::Config(
                "give either `exponents` or `xi_target` (with `xi_matrix`)".into(),
            ))
        }
    };
    if rows.len() != data.retained() || rows.iter().any(|r| r.len() != data.scaling()) {
        return Err(Error::Config(format!(
            "xi_matrix must be {} x {}",
            data.retained(),
            data.scaling()
        )));
    }
    let matrix = if rows.is_empty() {
        Matrix::zeros(0, target.len())
    } else {
        Matrix::from_rows(&rows)
    };
    let table = collapse(&data, &matrix, &target)?;
    let quality = collapse_quality(&table, cfg.bins)?;

    let mut run = Run::new("collapse", Some(config), out_dir)?;
    run.write_csv("collapsed.csv", |w| table.write_csv(w))?;
    run.write_json(
        "quality.json",
        &json!({"collapse_quality": quality, "bins": cfg.bins, "rows": data.len()}),
    )?;
    println!("collapse quality {quality:.6} ({} bins)", cfg.bins);
    run.finish()
}

/// Machine-readable error report for stderr.
pub fn error_json(e: &Error) -> Value {
    let mut v = json!({
        "error": e.kind(),
        "message": e.to_string(),
        "exit_code": e.exit_code(),
    });
    match e {
        Error::SingularRenormMatrix { matrix, rank, size } => {
            v["matrix"] = json!(matrix);
            v["rank"] = json!(rank);
            v["size"] = json!(size);
        }
        Error::NonFiniteLoss { epoch } => v["epoch"] = json!(epoch),
        Error::Parse { line, .. } => v["line"] = json!(line),
        Error::DependentRows { rank, expected } => {
            v["rank"] = json!(rank);
            v["expected"] = json!(expected);
        }
        _ => {}
    }
    v
}
