use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use stokes_core::solvers::CoarseChoice;
use stokes_core::{Formulation, SolverKind};
use stokesbench::commands::{
    cmd_fmg, cmd_measure_lups, cmd_predict, cmd_run, LupsArgs, PredictArgs,
};
use stokesbench::report::emit;
use stokesbench::{BenchConfig, FmgVariant, Format, LevelRange};

#[derive(Parser)]
#[command(
    name = "stokesbench",
    version,
    about = "Matrix-free multigrid Stokes solver benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compare solvers on zero data from a random start.
    Run(Common),
    /// Accuracy of full-multigrid variants on a manufactured solution.
    Fmg {
        #[command(flatten)]
        common: Common,
        /// Semicolon-separated subset, e.g. `"Vvar(1,1);2Vvar(2,2)"`.
        #[arg(long, value_delimiter = ';')]
        variants: Option<Vec<FmgVariant>>,
    },
    /// Closed-form work, count and memory predictions.
    Predict {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 6)]
        finest: usize,
        #[arg(long, default_value_t = 8)]
        cycles: usize,
        #[arg(long, default_value_t = 3)]
        smoothing: usize,
        #[arg(long, default_value_t = 7)]
        memory_level: usize,
        /// Measured solve time in seconds, for the parallel efficiency.
        #[arg(long, requires_all = ["threads", "dofs"])]
        time: Option<f64>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        dofs: Option<f64>,
    },
    /// Measure scalar smoother throughput in node updates per second.
    MeasureLups {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 4)]
        level: usize,
        #[arg(long, default_value_t = 10)]
        sweeps: usize,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
    },
}

#[derive(Args)]
struct Common {
    /// JSON file with configuration fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Coarse mesh file.
    #[arg(long, conflicts_with = "unit_cube")]
    mesh: Option<PathBuf>,
    /// Use the built-in unit cube (the default).
    #[arg(long)]
    unit_cube: bool,
    #[arg(long)]
    formulation: Option<Formulation>,
    #[arg(long, value_delimiter = ',')]
    solvers: Option<Vec<SolverKind>>,
    /// Inclusive level range `A..B`.
    #[arg(long)]
    levels: Option<LevelRange>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    seed: Option<Vec<u64>>,
    /// Coarse-grid stopping: `tol` or `fixed5`.
    #[arg(long)]
    coarse: Option<CoarseChoice>,
    #[arg(long)]
    format: Option<Format>,
    /// Output directory; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report setup time next to the solve time.
    #[arg(long)]
    include_setup: bool,
    /// Outer iteration cap for every solver.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Independent runs executed concurrently.
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn resolve(&self) -> Result<BenchConfig> {
        let mut c = match &self.config {
            Some(p) => BenchConfig::load(p)?,
            None => BenchConfig::default(),
        };
        if self.unit_cube {
            c.mesh = None;
        }
        if let Some(m) = &self.mesh {
            c.mesh = Some(m.clone());
        }
        if let Some(f) = self.formulation {
            c.formulation = f;
        }
        if let Some(s) = &self.solvers {
            c.solvers = s.clone();
        }
        if let Some(l) = self.levels {
            c.levels = l;
        }
        if let Some(e) = self.eps {
            c.eps = e;
        }
        if let Some(s) = &self.seed {
            c.seeds = s.clone();
        }
        if let Some(k) = self.coarse {
            c.coarse = k;
        }
        if let Some(f) = self.format {
            c.format = f;
        }
        if let Some(o) = &self.out {
            c.out = Some(o.clone());
        }
        c.include_setup |= self.include_setup;
        if let Some(m) = self.max_iters {
            c.max_iters = Some(m);
        }
        if let Some(j) = self.jobs {
            c.jobs = j;
        }
        c.validate()?;
        Ok(c)
    }
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<bool> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(common) => {
            let cfg = common.resolve()?;
            let (table, ok) = cmd_run(&cfg)?;
            emit(
                &table.render(cfg.format)?,
                cfg.out.as_deref(),
                "run",
                cfg.format,
            )?;
            Ok(ok)
        }
        Command::Fmg { common, variants } => {
            let mut cfg = common.resolve()?;
            if let Some(v) = variants {
                cfg.fmg_variants = v;
            }
            let (table, ok) = cmd_fmg(&cfg)?;
            emit(
                &table.render(cfg.format)?,
                cfg.out.as_deref(),
                "fmg",
                cfg.format,
            )?;
            Ok(ok)
        }
        Command::Predict {
            common,
            finest,
            cycles,
            smoothing,
            memory_level,
            time,
            threads,
            dofs,
        } => {
            let cfg = common.resolve()?;
            let measured = match (time, threads, dofs) {
                (Some(t), Some(n_c), Some(n)) => Some((t, n_c, n)),
                _ => None,
            };
            let args = PredictArgs {
                finest,
                cycles,
                smoothing,
                memory_level,
                measured,
            };
            let table = cmd_predict(&cfg, &args)?;
            emit(
                &table.render(cfg.format)?,
                cfg.out.as_deref(),
                "predict",
                cfg.format,
            )?;
            Ok(true)
        }
        Command::MeasureLups {
            common,
            level,
            sweeps,
            repeats,
        } => {
            let cfg = common.resolve()?;
            let table = cmd_measure_lups(
                &cfg,
                &LupsArgs {
                    level,
                    sweeps,
                    repeats,
                },
            )?;
            emit(
                &table.render(cfg.format)?,
                cfg.out.as_deref(),
                "lups",
                cfg.format,
            )?;
            Ok(true)
        }
    }
}
