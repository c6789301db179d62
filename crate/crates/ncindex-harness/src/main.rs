use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ncindex_harness::config::{ModelKind, Suite, SuiteConfig, THREADS_ENV};
use ncindex_harness::{suites, table, Report, Result};

/// Verification suites for the even local index formula.
#[derive(Parser, Debug)]
#[command(name = "ncindex-harness", version, after_long_help = SuiteConfig::documented_defaults())]
struct Cli {
    /// TOML configuration file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance overriding every per-check default.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Worker threads (default 1; reports are bit-reproducible at a fixed count).
    #[arg(long, global = true, env = THREADS_ENV)]
    threads: Option<usize>,
    /// Report directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a suite and write `<out>/<suite>.jsonl`.
    Verify {
        suite: Suite,
        #[arg(long)]
        instances: Option<usize>,
    },
    /// Compare the residue-cocycle pairing with the index on a model.
    Pair(ModelArgs),
    /// Print the Laurent data of ζ_b at its critical point as JSON.
    Zeta {
        #[command(flatten)]
        model: ModelArgs,
        /// Operator word, e.g. "gamma p" or "gamma 2p-1 [D,p] [D,p]".
        #[arg(long)]
        b_word: String,
        #[arg(long, default_value_t = 0.0)]
        offset: f64,
        #[arg(long, default_value_t = 2)]
        max_j: usize,
    },
    /// Print the pairing table `r,sum_phi,remainder,c_norm,ratio` as CSV.
    Table {
        #[command(flatten)]
        model: ModelArgs,
        /// `a:b:n` or a comma-separated list.
        #[arg(long)]
        r_grid: String,
    },
}

#[derive(Args, Debug)]
struct ModelArgs {
    #[arg(long)]
    model: ModelKind,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    index: Option<i64>,
    #[arg(long)]
    plus: Option<usize>,
    #[arg(long)]
    minus: Option<usize>,
    #[arg(long)]
    max_dim: Option<usize>,
    #[arg(long)]
    projection: Option<f64>,
}

impl ModelArgs {
    fn apply(&self, cfg: &mut SuiteConfig) {
        let m = &mut cfg.model;
        m.id = self.model;
        m.cutoff = self.cutoff.unwrap_or(m.cutoff);
        m.index = self.index.unwrap_or(m.index);
        m.plus = self.plus.unwrap_or(m.plus);
        m.minus = self.minus.unwrap_or(m.minus);
        m.max_dim = self.max_dim.unwrap_or(m.max_dim);
        m.projection = self.projection.unwrap_or(m.projection);
    }
}

fn base_config(cli: &Cli) -> Result<SuiteConfig> {
    let mut cfg = match &cli.config {
        Some(path) => SuiteConfig::load(path)?,
        None => SuiteConfig::default(),
    };
    cfg.seed = cli.seed.unwrap_or(cfg.seed);
    cfg.tol = cli.tol.or(cfg.tol);
    cfg.threads = cli.threads.unwrap_or(cfg.threads);
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    Ok(cfg)
}

/// Writes to stdout, ignoring a closed pipe (e.g. output piped into `head`).
fn emit_text(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn emit(report: &Report, cfg: &SuiteConfig) -> Result<ExitCode> {
    let path = report.write(&cfg.output.dir)?;
    emit_text(&format!("{}report: {}\n", report.summary(), path.display()));
    Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut cfg = base_config(&cli)?;
    match cli.command {
        Command::Verify { suite, instances } => {
            cfg.suite = Some(suite);
            cfg.instances = instances.unwrap_or(cfg.instances);
            let report = suites::run_suite(&cfg)?;
            emit(&report, &cfg)
        }
        Command::Pair(model) => {
            model.apply(&mut cfg);
            let report = suites::pair(&cfg)?;
            emit(&report, &cfg)
        }
        Command::Zeta { model, b_word, offset, max_j } => {
            model.apply(&mut cfg);
            let data = suites::zeta_data(&cfg, &b_word, offset, max_j)?;
            emit_text(&format!("{}\n", data.to_json()?));
            Ok(ExitCode::SUCCESS)
        }
        Command::Table { model, r_grid } => {
            model.apply(&mut cfg);
            let grid = table::parse_r_grid(&r_grid)?;
            let rows = table::residue_table(&cfg, &grid)?;
            emit_text(&table::to_csv(&grid, &rows));
            Ok(if rows.iter().all(|r| r.is_ok()) { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
