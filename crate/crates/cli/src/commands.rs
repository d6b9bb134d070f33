//! The four subcommands. Each returns a table plus whether every run
//! succeeded.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use anyhow::{Context, Result};
use stokes_core::mesh::{load_coarse_mesh, refine_hierarchy, CoarseMesh, GridHierarchy};
use stokes_core::metrics::{
    e_partme, e_tme_default, gamma_ratio, memory_model, predict_umg_counts, unit_cube_dofs,
    weighted_op_count,
};
use stokes_core::multigrid::{CoarseSolverSpec, CycleSpec, Multigrid};
use stokes_core::problem::homogeneous_problem;
use stokes_core::smoothers::{gs_sweep, Direction};
use stokes_core::solvers::{initial_guess, solve, CoarseChoice, SolverConfig};
use stokes_core::{ManufacturedSolution, SolverKind, StokesOperators};

use crate::config::BenchConfig;
use crate::report::{FmgRow, MetricRow, RunRow, Table};

pub fn coarse_mesh(cfg: &BenchConfig) -> Result<CoarseMesh> {
    match &cfg.mesh {
        Some(p) => load_coarse_mesh(p).with_context(|| format!("loading mesh {}", p.display())),
        None => Ok(CoarseMesh::unit_cube()),
    }
}

/// Runs `f` on every item, `jobs` at a time, keeping the input order.
fn run_all<T: Sync, R: Send>(items: &[T], jobs: usize, f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let out: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..jobs.min(items.len()) {
            s.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(item) = items.get(k) else { break };
                let r = f(item);
                out.lock().expect("no worker panics while holding the lock")[k] = Some(r);
            });
        }
    });
    out.into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every item ran"))
        .collect()
}

fn failed_row(cfg: &BenchConfig, kind: SolverKind, level: usize, seed: u64, err: String) -> RunRow {
    RunRow {
        solver: kind.to_string(),
        formulation: cfg.formulation.to_string(),
        level,
        dofs: 0,
        seed,
        iterations: 0,
        converged: false,
        final_residual: f64::NAN,
        time_s: 0.0,
        setup_s: 0.0,
        coarse_solves: 0,
        coarse_iterations: 0,
        a_count: 0.0,
        b_count: 0.0,
        c_count: 0.0,
        m_count: 0.0,
        memory_bytes: 0.0,
        error: err,
    }
}

fn run_one(
    cfg: &BenchConfig,
    mesh: &CoarseMesh,
    kind: SolverKind,
    level: usize,
    seed: u64,
) -> Result<RunRow> {
    let t = Instant::now();
    let h = refine_hierarchy(mesh, level)?;
    let ops = StokesOperators::new(&h, cfg.formulation, 1.0)?;
    let prob = homogeneous_problem(&ops, level);
    let x0 = initial_guess(&ops, level, seed);
    let setup = t.elapsed().as_secs_f64();
    let mut scfg = SolverConfig::new(kind, cfg.formulation)
        .with_coarse(cfg.coarse)
        .with_eps(cfg.eps)
        .with_seed(seed);
    if let Some(m) = cfg.max_iters {
        scfg.max_iters = m;
    }
    let r = solve(&scfg, &ops, &prob.rhs, &x0)?.result;
    let w = weighted_op_count(&r.raw_counts(), level, 0)?.totals();
    Ok(RunRow {
        solver: kind.to_string(),
        formulation: cfg.formulation.to_string(),
        level,
        dofs: h.free_dofs(level) as u64,
        seed,
        iterations: r.iterations,
        converged: r.converged,
        final_residual: r.final_residual(),
        time_s: r.wall_time,
        setup_s: if cfg.include_setup { setup } else { 0.0 },
        coarse_solves: r.coarse_iterations.len(),
        coarse_iterations: r.coarse_iterations.iter().sum(),
        a_count: w.a,
        b_count: w.b,
        c_count: w.c,
        m_count: w.m,
        memory_bytes: r.memory_model,
        error: String::new(),
    })
}

/// Every `(level, solver, seed)` with zero data from a random start.
pub fn cmd_run(cfg: &BenchConfig) -> Result<(Table<RunRow>, bool)> {
    cfg.validate()?;
    let mesh = coarse_mesh(cfg)?;
    let mut tasks = Vec::new();
    for level in cfg.levels.iter() {
        for &kind in &cfg.solvers {
            for &seed in &cfg.seeds {
                tasks.push((level, kind, seed));
            }
        }
    }
    let rows = run_all(&tasks, cfg.jobs, |&(level, kind, seed)| {
        run_one(cfg, &mesh, kind, level, seed)
            .unwrap_or_else(|e| failed_row(cfg, kind, level, seed, format!("{e:#}")))
    });
    let ok = rows.iter().all(|r| r.converged);
    let mut table = Table::new(rows)
        .with_meta("eps", cfg.eps)
        .with_meta("jobs", cfg.jobs);
    if cfg.jobs > 1 {
        table = table.with_meta(
            "note",
            "runs shared the machine; times are not comparable to sequential runs",
        );
    }
    Ok((table, ok))
}

fn fmg_level(cfg: &BenchConfig, mesh: &CoarseMesh, level: usize) -> Result<Vec<FmgRow>> {
    let h: GridHierarchy = refine_hierarchy(mesh, level)?;
    let ops = StokesOperators::new(&h, cfg.formulation, 1.0)?;
    let ms = ManufacturedSolution::new(1.0);
    let problems: Vec<_> = (0..=level).map(|l| ms.problem(&ops, l)).collect();
    let fine = &problems[level];
    let exact_cfg = SolverConfig::new(SolverKind::Umg, cfg.formulation).with_eps(1e-12);
    let discrete = solve(&exact_cfg, &ops, &fine.rhs, &fine.rhs.zeros_like())?.solution;
    let reference = fine.full_solution(&discrete);
    let interp = ms.interpolant(h.level(level));
    let mass = &ops.level(level).mass;
    let coarse = match cfg.coarse {
        CoarseChoice::Tol => CoarseSolverSpec::PMINRES,
        CoarseChoice::Fixed5 => CoarseSolverSpec::fixed(5),
    };
    let mut rows = Vec::new();
    for v in &cfg.fmg_variants {
        let mut mg = Multigrid::new(&ops, CycleSpec::vvar(v.n, v.n, coarse));
        let t = Instant::now();
        let res = mg.fmg(&problems, v.cycles);
        let time_s = t.elapsed().as_secs_f64();
        let row = res
            .and_then(|out| gamma_ratio(&interp, &out[level], &reference, h.level(level).h, mass));
        rows.push(match row {
            Ok(a) => FmgRow {
                variant: v.to_string(),
                level,
                dofs: h.free_dofs(level) as u64,
                gamma: a.gamma,
                total_error: a.total_error,
                discretization_error: a.discretization_error,
                time_s,
                error: String::new(),
            },
            Err(e) => FmgRow {
                variant: v.to_string(),
                level,
                dofs: h.free_dofs(level) as u64,
                gamma: f64::NAN,
                total_error: f64::NAN,
                discretization_error: f64::NAN,
                time_s,
                error: e.to_string(),
            },
        });
    }
    Ok(rows)
}

/// Accuracy of the FMG variants on the manufactured solution, one row per
/// variant and finest level.
pub fn cmd_fmg(cfg: &BenchConfig) -> Result<(Table<FmgRow>, bool)> {
    cfg.validate()?;
    let mesh = coarse_mesh(cfg)?;
    let levels: Vec<usize> = cfg.levels.iter().filter(|&l| l >= 1).collect();
    anyhow::ensure!(!levels.is_empty(), "FMG needs a finest level of at least 1");
    let per_level = run_all(&levels, cfg.jobs, |&l| {
        fmg_level(cfg, &mesh, l).unwrap_or_else(|e| {
            cfg.fmg_variants
                .iter()
                .map(|v| FmgRow {
                    variant: v.to_string(),
                    level: l,
                    dofs: 0,
                    gamma: f64::NAN,
                    total_error: f64::NAN,
                    discretization_error: f64::NAN,
                    time_s: 0.0,
                    error: format!("{e:#}"),
                })
                .collect()
        })
    });
    let mut rows: Vec<FmgRow> = per_level.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (
            cfg.fmg_variants
                .iter()
                .position(|v| v.to_string() == a.variant),
            a.level,
        )
            .cmp(&(
                cfg.fmg_variants
                    .iter()
                    .position(|v| v.to_string() == b.variant),
                b.level,
            ))
    });
    let ok = rows.iter().all(|r| r.error.is_empty());
    Ok((
        Table::new(rows).with_meta("formulation", cfg.formulation.to_string()),
        ok,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictArgs {
    pub finest: usize,
    pub cycles: usize,
    pub smoothing: usize,
    pub memory_level: usize,
    /// Measured solve time `t`, thread count `n_c` and unknowns `n` for the
    /// parallel efficiency.
    pub measured: Option<(f64, usize, f64)>,
}

impl Default for PredictArgs {
    fn default() -> Self {
        PredictArgs {
            finest: 6,
            cycles: 8,
            smoothing: 3,
            memory_level: 7,
            measured: None,
        }
    }
}

fn metric(q: impl Into<String>, value: f64, unit: &str) -> MetricRow {
    MetricRow {
        quantity: q.into(),
        value,
        unit: unit.to_string(),
    }
}

/// Closed-form predictions.
pub fn cmd_predict(cfg: &BenchConfig, args: &PredictArgs) -> Result<Table<MetricRow>> {
    let mut rows = vec![metric("E_TME (Uzawa FMG)", e_tme_default(), "work units")];
    let p = predict_umg_counts(args.finest, args.cycles, args.smoothing);
    let tag = format!(
        "L={} cycles={} Vvar({2},{2})",
        args.finest, args.cycles, args.smoothing
    );
    rows.push(metric(
        format!("n_A, {tag}"),
        p.a,
        "finest-level applications",
    ));
    rows.push(metric(
        format!("n_B, {tag}"),
        p.b,
        "finest-level applications",
    ));
    rows.push(metric(
        format!("n_C, {tag}"),
        p.c,
        "finest-level applications",
    ));
    rows.push(metric(
        format!("n_total laplace, {tag}"),
        p.total(1.0),
        "finest-level blocks",
    ));
    rows.push(metric(
        format!("n_total dop, {tag}"),
        p.total(cfg.mu_d),
        "finest-level blocks",
    ));
    let (n_u, n_p) = unit_cube_dofs(args.memory_level);
    let l = args.memory_level;
    rows.push(metric(
        format!("unit cube DoFs, L={l}"),
        n_u + n_p,
        "unknowns",
    ));
    rows.push(metric(
        format!("memory, L={l}"),
        memory_model(n_u, n_p, l, false).gib(),
        "GiB",
    ));
    rows.push(metric(
        format!("memory with on-the-fly rhs, L={l}"),
        memory_model(n_u, n_p, l, true).gib(),
        "GiB",
    ));
    if let Some((t, n_c, n)) = args.measured {
        rows.push(metric(
            "E_parTME",
            e_partme(t, n_c, n, cfg.mu_sm)?,
            "work units",
        ));
    }
    Ok(Table::new(rows)
        .with_meta("mu_sm", cfg.mu_sm)
        .with_meta("mu_d", cfg.mu_d))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LupsArgs {
    pub level: usize,
    pub sweeps: usize,
    pub repeats: usize,
}

impl Default for LupsArgs {
    fn default() -> Self {
        LupsArgs {
            level: 4,
            sweeps: 10,
            repeats: 5,
        }
    }
}

/// Scalar forward Gauss-Seidel sweeps on the `A1` velocity component.
/// Reports node updates per second; warns when the timed total is below
/// 50 ms.
pub fn cmd_measure_lups(cfg: &BenchConfig, args: &LupsArgs) -> Result<Table<MetricRow>> {
    anyhow::ensure!(
        args.sweeps > 0 && args.repeats > 0,
        "sweeps and repeats must be positive"
    );
    let mesh = coarse_mesh(cfg)?;
    let h = refine_hierarchy(&mesh, args.level)?;
    let ops = StokesOperators::new(&h, cfg.formulation, 1.0)?;
    let l = args.level;
    let lo = ops.level(l);
    let n = lo.nodes();
    let x0 = initial_guess(&ops, l, cfg.seeds[0]);
    let b = vec![0.0; n];
    let mut rates = Vec::with_capacity(args.repeats);
    let mut total = 0.0;
    for _ in 0..args.repeats {
        let mut u = x0.u()[..n].to_vec();
        let t = Instant::now();
        for _ in 0..args.sweeps {
            gs_sweep::<1>(
                &h,
                &lo.laplace,
                &mut u,
                &b,
                Direction::Forward,
                1.0,
                Some(&lo.constraints),
            );
        }
        let dt = t.elapsed().as_secs_f64();
        std::hint::black_box(&u);
        total += dt;
        rates.push((n * args.sweeps) as f64 / dt);
    }
    if total < 0.05 {
        eprintln!(
            "warning: timed {:.1} ms in total; raise --sweeps for a reliable rate",
            total * 1e3
        );
    }
    let mean = rates.iter().sum::<f64>() / rates.len() as f64;
    let min = rates.iter().copied().fold(f64::INFINITY, f64::min);
    let max = rates.iter().copied().fold(0.0, f64::max);
    let rows = vec![
        metric("nodes", n as f64, "nodes"),
        metric("mu_sm mean", mean, "node updates/s"),
        metric("mu_sm min", min, "node updates/s"),
        metric("mu_sm max", max, "node updates/s"),
        metric("spread (max-min)/mean", (max - min) / mean, "ratio"),
        metric("timed total", total, "s"),
    ];
    Ok(Table::new(rows)
        .with_meta(
            "units",
            "node updates per second of one scalar Gauss-Seidel sweep, single thread",
        )
        .with_meta("level", l)
        .with_meta("sweeps", args.sweeps)
        .with_meta("repeats", args.repeats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{FmgVariant, LevelRange};

    fn small() -> BenchConfig {
        BenchConfig {
            levels: LevelRange { min: 1, max: 2 },
            ..BenchConfig::default()
        }
    }

    #[test]
    fn run_produces_one_row_per_level_and_solver() {
        let cfg = BenchConfig { jobs: 2, ..small() };
        let (t, ok) = cmd_run(&cfg).unwrap();
        assert!(ok);
        assert_eq!(t.rows.len(), 6);
        let seq = cmd_run(&small()).unwrap().0;
        for (a, b) in t.rows.iter().zip(&seq.rows) {
            assert_eq!(
                (&a.solver, a.level, a.iterations),
                (&b.solver, b.level, b.iterations)
            );
        }
        for r in &t.rows {
            assert!(r.final_residual <= 1e-8 && r.error.is_empty());
        }
    }

    #[test]
    fn empty_solver_list_is_rejected() {
        let cfg = BenchConfig {
            solvers: vec![],
            ..small()
        };
        assert!(cmd_run(&cfg).is_err());
    }

    #[test]
    fn fmg_subset() {
        let cfg = BenchConfig {
            levels: LevelRange { min: 2, max: 2 },
            fmg_variants: vec![FmgVariant { cycles: 2, n: 2 }],
            ..BenchConfig::default()
        };
        let (t, ok) = cmd_fmg(&cfg).unwrap();
        assert!(ok);
        assert_eq!(t.rows.len(), 1);
        assert!(
            t.rows[0].gamma > 0.5 && t.rows[0].gamma < 2.0,
            "{:?}",
            t.rows[0]
        );
    }

    #[test]
    fn predict_defaults() {
        let t = cmd_predict(&BenchConfig::default(), &PredictArgs::default()).unwrap();
        let get = |q: &str| {
            t.rows
                .iter()
                .find(|r| r.quantity.starts_with(q))
                .unwrap()
                .value
        };
        assert!((get("E_TME") - 9.07).abs() < 0.01);
        assert!((get("n_A") - 129.31).abs() < 0.01);
        assert!((get("memory, L=7") - 13.63).abs() / 13.63 < 0.01);
    }

    #[test]
    fn lups_is_positive() {
        let args = LupsArgs {
            level: 2,
            sweeps: 2,
            repeats: 2,
        };
        let t = cmd_measure_lups(&BenchConfig::default(), &args).unwrap();
        assert!(t.rows.iter().all(|r| r.value.is_finite() && r.value >= 0.0));
        assert!(t.rows[1].value > 0.0);
    }
}
