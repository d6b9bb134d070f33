//! Outer solvers for the saddle-point system: Schur-complement CG (SCG),
//! block-preconditioned MINRES (PMINRES) and all-at-once Uzawa multigrid
//! (UMG).
//!
//! All three stop on the same criterion: the Euclidean residual of the
//! constrained system relative to that of the initial guess. Stopping
//! checks are not counted as operator evaluations.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{
    axpy_slices, mean_zero_project, mean_zero_project_uniform, random_initial, StokesVector,
};
use crate::krylov::{self, Stop};
use crate::mesh::node_counts;
use crate::metrics::memory_model;
use crate::multigrid::{CoarseSolverSpec, CycleSpec, Multigrid};
use crate::operators::{Formulation, OperatorTag, StokesOperators};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Scg,
    Pminres,
    Umg,
}

impl SolverKind {
    pub const ALL: [SolverKind; 3] = [SolverKind::Scg, SolverKind::Pminres, SolverKind::Umg];
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::Scg => "scg",
            SolverKind::Pminres => "pminres",
            SolverKind::Umg => "umg",
        })
    }
}

impl FromStr for SolverKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "scg" => Ok(SolverKind::Scg),
            "pminres" => Ok(SolverKind::Pminres),
            "umg" => Ok(SolverKind::Umg),
            other => Err(format!(
                "unknown solver `{other}` (expected scg, pminres or umg)"
            )),
        }
    }
}

/// How coarse-grid Krylov solves terminate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseChoice {
    /// Relative accuracy `1e-3` for CG, `5e-3` for MINRES.
    #[default]
    Tol,
    /// Five iterations.
    Fixed5,
}

impl FromStr for CoarseChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "tol" => Ok(CoarseChoice::Tol),
            "fixed5" => Ok(CoarseChoice::Fixed5),
            other => Err(format!(
                "unknown coarse mode `{other}` (expected tol or fixed5)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub kind: SolverKind,
    pub formulation: Formulation,
    pub eps: f64,
    /// SCG: velocity multigrid iterations per outer step.
    pub n_a: usize,
    /// SCG: Schur-complement CG steps per outer step.
    pub n_s: usize,
    /// SCG: multigrid iterations per inner velocity solve.
    pub n_i: usize,
    /// Velocity cycle for SCG and PMINRES, saddle cycle for UMG.
    pub cycle: CycleSpec,
    pub seed: u64,
    pub max_iters: usize,
    /// Post-smooth velocity cycles with the exact adjoint of FHGS instead
    /// of BHGS. Only PMINRES reads this; it needs a symmetric
    /// preconditioner and defaults to `true`.
    pub adjoint_post: bool,
}

impl SolverConfig {
    /// The standard setup of each solver.
    pub fn new(kind: SolverKind, formulation: Formulation) -> Self {
        let (cycle, max_iters) = match kind {
            SolverKind::Scg => (CycleSpec::v(3, 3, CoarseSolverSpec::CG), 200),
            SolverKind::Pminres => (CycleSpec::v(1, 1, CoarseSolverSpec::CG), 1000),
            SolverKind::Umg => (CycleSpec::vvar(3, 3, CoarseSolverSpec::PMINRES), 100),
        };
        SolverConfig {
            kind,
            formulation,
            eps: 1e-8,
            n_a: 3,
            n_s: 3,
            n_i: 1,
            cycle,
            seed: 0,
            max_iters,
            adjoint_post: kind == SolverKind::Pminres,
        }
    }

    pub fn with_coarse(mut self, choice: CoarseChoice) -> Self {
        self.cycle.coarse = match (choice, self.kind) {
            (CoarseChoice::Fixed5, _) => CoarseSolverSpec::fixed(5),
            (CoarseChoice::Tol, SolverKind::Umg) => CoarseSolverSpec::PMINRES,
            (CoarseChoice::Tol, _) => CoarseSolverSpec::CG,
        };
        self
    }

    pub fn with_eps(mut self, eps: f64) -> Self {
        self.eps = eps;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "eps must lie in (0, 1), got {}",
                self.eps
            )));
        }
        if self.n_a == 0 || self.n_s == 0 || self.n_i == 0 {
            return Err(Error::InvalidArgument(
                "n_A, n_S and n_I must be at least 1".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument(
                "max_iters must be at least 1".into(),
            ));
        }
        self.cycle.coarse.validate()
    }
}

/// Operator evaluations on one level.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelOpCounts {
    pub level: usize,
    pub a1: u64,
    pub a2: u64,
    pub b: u64,
    pub bt: u64,
    pub c: u64,
    pub m: u64,
}

impl LevelOpCounts {
    pub fn from_raw(level: usize, c: [u64; 6]) -> Self {
        LevelOpCounts {
            level,
            a1: c[0],
            a2: c[1],
            b: c[2],
            bt: c[3],
            c: c[4],
            m: c[5],
        }
    }

    pub fn raw(&self) -> [u64; 6] {
        [self.a1, self.a2, self.b, self.bt, self.c, self.m]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    /// Outer iterations.
    pub iterations: usize,
    /// Iterations of every coarse-grid solve, in call order.
    pub coarse_iterations: Vec<usize>,
    /// Relative residual after each outer iteration, starting with the
    /// initial guess.
    pub residual_history: Vec<f64>,
    /// Solve time in seconds.
    pub wall_time: f64,
    pub op_counts: Vec<LevelOpCounts>,
    /// Modeled bytes for unknowns, right-hand side and residual.
    pub memory_model: f64,
    pub converged: bool,
}

const CSV_FIELDS: [&str; 7] = [
    "iterations",
    "coarse_iterations",
    "residual_history",
    "wall_time_s",
    "op_counts",
    "memory_model_bytes",
    "converged",
];

fn join<T: ToString>(v: &[T]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn split<T: FromStr>(s: &str, what: &str) -> Result<Vec<T>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(';')
        .map(|x| {
            x.parse()
                .map_err(|_| Error::InvalidArgument(format!("bad {what} entry `{x}`")))
        })
        .collect()
}

impl RunResult {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(0.0)
    }

    pub fn raw_counts(&self) -> Vec<[u64; 6]> {
        self.op_counts.iter().map(|c| c.raw()).collect()
    }

    pub fn csv_header() -> &'static [&'static str] {
        &CSV_FIELDS
    }

    /// One CSV record; list fields are `;`-separated and the counts of a
    /// level are `/`-separated in `OperatorTag::ALL` order.
    pub fn to_csv_record(&self) -> Vec<String> {
        let counts: Vec<String> = self
            .op_counts
            .iter()
            .map(|c| join(&c.raw()).replace(';', "/"))
            .collect();
        vec![
            self.iterations.to_string(),
            join(&self.coarse_iterations),
            join(&self.residual_history),
            self.wall_time.to_string(),
            counts.join(";"),
            self.memory_model.to_string(),
            self.converged.to_string(),
        ]
    }

    pub fn from_csv_record<S: AsRef<str>>(rec: &[S]) -> Result<Self> {
        if rec.len() != CSV_FIELDS.len() {
            return Err(Error::LengthMismatch {
                expected: CSV_FIELDS.len(),
                found: rec.len(),
            });
        }
        let f = |i: usize| rec[i].as_ref();
        let bad = |what: &str| Error::InvalidArgument(format!("bad {what} field"));
        let mut op_counts = Vec::new();
        for (level, lv) in split::<String>(f(4), "op_counts")?.iter().enumerate() {
            let vals: Vec<u64> = split(&lv.replace('/', ";"), "op_counts")?;
            let raw: [u64; 6] = vals.try_into().map_err(|_| bad("op_counts"))?;
            op_counts.push(LevelOpCounts::from_raw(level, raw));
        }
        Ok(RunResult {
            iterations: f(0).parse().map_err(|_| bad("iterations"))?,
            coarse_iterations: split(f(1), "coarse_iterations")?,
            residual_history: split(f(2), "residual_history")?,
            wall_time: f(3).parse().map_err(|_| bad("wall_time_s"))?,
            op_counts,
            memory_model: f(5).parse().map_err(|_| bad("memory_model_bytes"))?,
            converged: f(6).parse().map_err(|_| bad("converged"))?,
        })
    }
}

/// A finished solve: statistics plus the homogeneous-constraint solution,
/// pressure shifted to zero weighted mean when the pressure is determined
/// only up to a constant.
#[derive(Clone, Debug)]
pub struct Solve {
    pub result: RunResult,
    pub solution: StokesVector,
}

/// Relative residual `|K x_k - f| / |K x_0 - f|` and whether it is at most
/// `eps`; computed without counting.
pub fn check_stop(
    ops: &StokesOperators,
    x0: &StokesVector,
    xk: &StokesVector,
    rhs: &StokesVector,
    eps: f64,
) -> (f64, bool) {
    let r0 = ops.residual(x0, rhs, false).norm();
    if r0 == 0.0 {
        return (0.0, true);
    }
    let ratio = ops.residual(xk, rhs, false).norm() / r0;
    (ratio, ratio <= eps)
}

/// The random initial guess, projected onto the constrained subspace.
pub fn initial_guess(ops: &StokesOperators, l: usize, seed: u64) -> StokesVector {
    let mut x = random_initial(ops.hierarchy, l, seed);
    ops.make_admissible(&mut x);
    x
}

/// Runs the configured solver from `x0`.
pub fn solve(
    cfg: &SolverConfig,
    ops: &StokesOperators,
    rhs: &StokesVector,
    x0: &StokesVector,
) -> Result<Solve> {
    cfg.validate()?;
    if cfg.formulation != ops.formulation {
        return Err(Error::InvalidArgument(format!(
            "solver configured for {} but operators use {}",
            cfg.formulation, ops.formulation
        )));
    }
    if rhs.level() != x0.level() || rhs.nodes() != x0.nodes() {
        return Err(Error::LevelMismatch {
            expected: rhs.level(),
            found: x0.level(),
        });
    }
    if rhs.level() >= ops.levels.len() {
        return Err(Error::LevelMismatch {
            expected: ops.finest(),
            found: rhs.level(),
        });
    }
    match cfg.kind {
        SolverKind::Scg => solve_scg(cfg, ops, rhs, x0),
        SolverKind::Pminres => solve_pminres(cfg, ops, rhs, x0),
        SolverKind::Umg => solve_umg(cfg, ops, rhs, x0),
    }
}

/// Bookkeeping shared by the three solvers.
struct Run<'a, 'h> {
    ops: &'a StokesOperators<'h>,
    rhs: &'a StokesVector,
    r0: f64,
    history: Vec<f64>,
    start: Instant,
}

impl<'a, 'h> Run<'a, 'h> {
    fn new(ops: &'a StokesOperators<'h>, rhs: &'a StokesVector, x0: &StokesVector) -> Self {
        ops.counter.reset();
        let r0 = ops.residual(x0, rhs, false).norm();
        Run {
            ops,
            rhs,
            r0,
            history: vec![1.0],
            start: Instant::now(),
        }
    }

    fn ratio(&self, x: &StokesVector) -> f64 {
        self.ops.residual(x, self.rhs, false).norm() / self.r0
    }

    fn fix_pressure(&self, x: &mut StokesVector) {
        let l = x.level();
        if !self.ops.constraints(l).has_outflow {
            mean_zero_project(x.p_mut(), &self.ops.level(l).mass).expect("lumped mass is positive");
        }
    }

    fn finish(
        self,
        mut x: StokesVector,
        iterations: usize,
        converged: bool,
        coarse: Vec<usize>,
    ) -> Solve {
        let wall_time = self.start.elapsed().as_secs_f64();
        self.fix_pressure(&mut x);
        let l = x.level();
        let (n_u, n_p) = node_counts(self.ops.hierarchy.level(l));
        let op_counts = self
            .ops
            .counter
            .snapshot()
            .into_iter()
            .enumerate()
            .take(l + 1)
            .map(|(k, c)| LevelOpCounts::from_raw(k, c))
            .collect();
        let result = RunResult {
            iterations,
            coarse_iterations: coarse,
            residual_history: self.history,
            wall_time,
            op_counts,
            memory_model: memory_model(n_u as f64, n_p as f64, l, false).bytes,
            converged,
        };
        Solve {
            result,
            solution: x,
        }
    }
}

/// Schur-complement CG: per outer step `n_A` velocity cycles on
/// `A u = f - B^T p`, then `n_S` mass-preconditioned CG steps on
/// `S dp = B u - C p - g` with `S = B A^-1 B^T + C` and `A^-1` replaced by
/// `n_I` cycles.
pub fn solve_scg(
    cfg: &SolverConfig,
    ops: &StokesOperators,
    rhs: &StokesVector,
    x0: &StokesVector,
) -> Result<Solve> {
    let mut run = Run::new(ops, rhs, x0);
    let mut x = x0.clone();
    if run.r0 == 0.0 {
        run.history.clear();
        return Ok(run.finish(x, 0, true, Vec::new()));
    }
    let l = x.level();
    let n = x.nodes();
    let mut mg = Multigrid::new(ops, cfg.cycle);
    let mass = ops.level(l).mass.clone();
    let fix_mean = !ops.constraints(l).has_outflow;
    let mut fu = vec![0.0; 3 * n];
    let mut r = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    for k in 1..=cfg.max_iters {
        {
            let (u, p) = x.split_mut();
            ops.apply_bt(l, p, &mut fu, true);
            for (v, f) in fu.iter_mut().zip(rhs.u()) {
                *v = f - *v;
            }
            for _ in 0..cfg.n_a {
                mg.velocity_cycle(l, u, &fu);
            }
            ops.apply_b(l, u, &mut r, true);
            ops.apply_c(l, p, &mut tmp, true);
            for ((ri, ci), gi) in r.iter_mut().zip(&tmp).zip(rhs.p()) {
                *ri -= ci + gi;
            }
        }
        let mut dp = vec![0.0; n];
        let mut tu = vec![0.0; 3 * n];
        let mut vu = vec![0.0; 3 * n];
        let mut cd = vec![0.0; n];
        krylov::pcg(
            |d, y| {
                ops.apply_bt(l, d, &mut tu, true);
                vu.fill(0.0);
                for _ in 0..cfg.n_i {
                    mg.velocity_cycle(l, &mut vu, &tu);
                }
                ops.apply_b(l, &vu, y, true);
                ops.apply_c(l, d, &mut cd, true);
                axpy_slices(1.0, &cd, y);
            },
            |res, z| {
                ops.counter.bump(OperatorTag::M, l);
                for ((zi, ri), m) in z.iter_mut().zip(res).zip(&mass) {
                    *zi = ri / m;
                }
                if fix_mean {
                    mean_zero_project_uniform(z);
                }
            },
            &r,
            &mut dp,
            Stop::Fixed(cfg.n_s),
        );
        axpy_slices(1.0, &dp, x.p_mut());
        run.fix_pressure(&mut x);
        let ratio = run.ratio(&x);
        run.history.push(ratio);
        if ratio <= cfg.eps {
            let coarse = std::mem::take(&mut mg.coarse_iterations);
            return Ok(run.finish(x, k, true, coarse));
        }
        if !ratio.is_finite() {
            break;
        }
    }
    let coarse = std::mem::take(&mut mg.coarse_iterations);
    let iters = run.history.len() - 1;
    Ok(run.finish(x, iters, false, coarse))
}

/// `diag(V, M^-1)`: one velocity cycle from a zero start and the inverse
/// lumped mass, followed by removal of the pressure mean when the pressure
/// is only determined up to a constant. Counted.
pub struct BlockPreconditioner<'a, 'h> {
    pub mg: Multigrid<'a, 'h>,
    level: usize,
    mass: &'a [f64],
    fix_mean: bool,
}

impl<'a, 'h> BlockPreconditioner<'a, 'h> {
    pub fn new(cfg: &SolverConfig, ops: &'a StokesOperators<'h>, level: usize) -> Self {
        let mut mg = Multigrid::new(ops, cfg.cycle);
        if cfg.adjoint_post {
            mg = mg.with_adjoint_post();
        }
        let fix_mean = !ops.constraints(level).has_outflow;
        BlockPreconditioner {
            mg,
            level,
            mass: &ops.level(level).mass,
            fix_mean,
        }
    }

    pub fn apply(&mut self, r: &[f64], z: &mut [f64]) {
        let l = self.level;
        let n = self.mass.len();
        let (ru, rp) = r.split_at(3 * n);
        let (zu, zp) = z.split_at_mut(3 * n);
        zu.fill(0.0);
        self.mg.velocity_cycle(l, zu, ru);
        self.mg.ops.counter.bump(OperatorTag::M, l);
        for ((zi, ri), m) in zp.iter_mut().zip(rp).zip(self.mass) {
            *zi = ri / m;
        }
        if self.fix_mean {
            mean_zero_project_uniform(zp);
        }
    }
}

/// MINRES on the saddle system preconditioned by [`BlockPreconditioner`].
pub fn solve_pminres(
    cfg: &SolverConfig,
    ops: &StokesOperators,
    rhs: &StokesVector,
    x0: &StokesVector,
) -> Result<Solve> {
    let mut run = Run::new(ops, rhs, x0);
    let mut x = x0.clone();
    if run.r0 == 0.0 {
        run.history.clear();
        return Ok(run.finish(x, 0, true, Vec::new()));
    }
    let l = x.level();
    let mut prec = BlockPreconditioner::new(cfg, ops, l);
    let mut probe = x.zeros_like();
    let mut history = Vec::new();
    let info = krylov::pminres(
        |a, b| ops.apply_saddle_slices(l, a, b, true),
        |r, z| prec.apply(r, z),
        rhs.as_slice(),
        x.as_mut_slice(),
        cfg.max_iters,
        |_, xs| {
            probe.as_mut_slice().copy_from_slice(xs);
            let ratio = run.ratio(&probe);
            history.push(ratio);
            (ratio <= cfg.eps || !ratio.is_finite()).then_some(ratio)
        },
    )?;
    run.history.extend(history);
    let converged = info.converged && run.history.last().is_some_and(|r| *r <= cfg.eps);
    let coarse = std::mem::take(&mut prec.mg.coarse_iterations);
    Ok(run.finish(x, info.iterations, converged, coarse))
}

/// Repeated saddle-point cycles with Uzawa smoothing.
pub fn solve_umg(
    cfg: &SolverConfig,
    ops: &StokesOperators,
    rhs: &StokesVector,
    x0: &StokesVector,
) -> Result<Solve> {
    let mut run = Run::new(ops, rhs, x0);
    let mut x = x0.clone();
    if run.r0 == 0.0 {
        run.history.clear();
        return Ok(run.finish(x, 0, true, Vec::new()));
    }
    let mut mg = Multigrid::new(ops, cfg.cycle);
    for k in 1..=cfg.max_iters {
        mg.saddle_cycle(&mut x, rhs)?;
        run.fix_pressure(&mut x);
        let ratio = run.ratio(&x);
        run.history.push(ratio);
        if ratio <= cfg.eps {
            let coarse = std::mem::take(&mut mg.coarse_iterations);
            return Ok(run.finish(x, k, true, coarse));
        }
        if !ratio.is_finite() {
            break;
        }
    }
    let coarse = std::mem::take(&mut mg.coarse_iterations);
    let iters = run.history.len() - 1;
    Ok(run.finish(x, iters, false, coarse))
}
