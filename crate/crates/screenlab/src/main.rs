use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use screenlab::{AppError, AppResult, Coarseness, Command, ExperimentConfig, Format};

/// Buyer-optimal information and robust bundling experiments.
#[derive(Debug, Parser)]
#[command(name = "screenlab", version)]
struct Cli {
    /// buyer_optimal | robust | comparative_statics | verify_minmax |
    /// verify_guarantee | export_lp (hyphens accepted)
    command: String,
    /// Experiment config (TOML, or JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent. Plot and witness files are written
    /// next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<String>,
    /// Grid points per dimension.
    #[arg(long)]
    grid: Option<usize>,
    /// Comma-separated seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Comma-separated coarseness levels (`full` allowed).
    #[arg(long, value_delimiter = ',')]
    coarseness: Option<Vec<String>>,
    /// Largest number of goods in comparative statics.
    #[arg(long)]
    n_max: Option<usize>,
    /// Worker threads; overrides SCREENLAB_THREADS.
    #[arg(long, env = "SCREENLAB_THREADS")]
    threads: Option<usize>,
}

fn parse_coarseness(s: &str) -> AppResult<Coarseness> {
    match s.trim() {
        "full" => Ok(Coarseness::Full),
        t => match t.parse::<usize>() {
            Ok(k) if k > 0 => Ok(Coarseness::Cells(k)),
            _ => Err(AppError::Config(format!("coarseness {s:?} is neither a positive count nor \"full\""))),
        },
    }
}

fn configure(cli: &Cli) -> AppResult<(ExperimentConfig, Format)> {
    let command: Command = cli.command.parse()?;
    let mut cfg = ExperimentConfig::load(&cli.config)?;
    if cfg.command != command {
        return Err(AppError::Config(format!("config is for {}, command line asks for {command}", cfg.command)));
    }
    if let Some(g) = cli.grid {
        cfg.grid = Some(g);
    }
    if let Some(s) = &cli.seeds {
        cfg.seeds = Some(s.clone());
    }
    if let Some(c) = &cli.coarseness {
        cfg.coarseness = Some(c.iter().map(|s| parse_coarseness(s)).collect::<AppResult<_>>()?);
    }
    if let Some(n) = cli.n_max {
        cfg.n_max = n;
    }
    if let Some(o) = &cli.out {
        cfg.output.path = Some(o.clone());
    } else if let Some(p) = cfg.output.path.take() {
        cfg.output.path = Some(cfg.resolve(&p));
    }
    if let Some(f) = &cli.format {
        cfg.output.format = f.parse()?;
    }
    cfg.validate()?;
    let format = cfg.output.format;
    Ok((cfg, format))
}

fn main_inner(cli: Cli) -> AppResult<bool> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(AppError::Config("thread count must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| AppError::Config(format!("worker pool: {e}")))?;
    }
    let (cfg, format) = configure(&cli)?;
    let out = screenlab::run(&cfg)?;
    for p in out.emit(cfg.output.path.as_deref(), format)? {
        eprintln!("wrote {}", p.display());
    }
    let failed = out.failed();
    for c in &failed {
        eprintln!("{c}");
    }
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("screenlab: {e}");
            e.exit_code()
        }
    }
}
