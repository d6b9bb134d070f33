//! Geometric multigrid for the velocity block and for the full saddle-point
//! system, with Krylov coarse-grid solvers and full multigrid.
//!
//! Coarse operators are re-discretized on every level. Corrections move
//! between levels by linear interpolation `P` and restriction `P^T`. All
//! work on level 0 is coarse-grid work.

pub mod transfer;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{axpy_slices, mean_zero_project_uniform, StokesVector};
use crate::krylov::{self, KrylovInfo, Stop};
use crate::operators::{OperatorTag, StokesOperators, StokesProblem};
use crate::smoothers::{uzawa_step, velocity_sweep, Direction};

pub use transfer::{prolongate, restrict, restrict_normalized};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleKind {
    V,
    /// Two extra pre- and post-smoothing steps per coarser level.
    Vvar,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoarseMode {
    /// Relative residual tolerance.
    Tolerance(f64),
    /// Fixed iteration count.
    Fixed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoarseSolverSpec {
    pub mode: CoarseMode,
    pub max_iters: usize,
}

impl CoarseSolverSpec {
    /// CG on the velocity block to a relative accuracy of `1e-3`.
    pub const CG: CoarseSolverSpec = CoarseSolverSpec {
        mode: CoarseMode::Tolerance(1e-3),
        max_iters: 2000,
    };
    /// Block-preconditioned MINRES on the saddle system to `5e-3`.
    pub const PMINRES: CoarseSolverSpec = CoarseSolverSpec {
        mode: CoarseMode::Tolerance(5e-3),
        max_iters: 2000,
    };

    pub fn fixed(n: usize) -> Self {
        CoarseSolverSpec {
            mode: CoarseMode::Fixed(n),
            max_iters: n,
        }
    }

    pub fn stop(&self) -> Stop {
        match self.mode {
            CoarseMode::Tolerance(tol) => Stop::Relative {
                tol,
                max_iters: self.max_iters,
            },
            CoarseMode::Fixed(n) => Stop::Fixed(n),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            CoarseMode::Tolerance(t) if !(t > 0.0 && t < 1.0) => Err(Error::InvalidArgument(
                format!("coarse tolerance must lie in (0, 1), got {t}"),
            )),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    pub kind: CycleKind,
    pub n_pre: usize,
    pub n_post: usize,
    pub coarse: CoarseSolverSpec,
}

impl CycleSpec {
    pub fn v(n_pre: usize, n_post: usize, coarse: CoarseSolverSpec) -> Self {
        CycleSpec {
            kind: CycleKind::V,
            n_pre,
            n_post,
            coarse,
        }
    }

    pub fn vvar(n_pre: usize, n_post: usize, coarse: CoarseSolverSpec) -> Self {
        CycleSpec {
            kind: CycleKind::Vvar,
            n_pre,
            n_post,
            coarse,
        }
    }

    /// Pre- and post-smoothing steps on level `l` of a cycle whose finest
    /// level is `top`.
    pub fn smoothing(&self, l: usize, top: usize) -> (usize, usize) {
        match self.kind {
            CycleKind::V => (self.n_pre, self.n_post),
            CycleKind::Vvar => {
                let extra = 2 * (top - l);
                (self.n_pre + extra, self.n_post + extra)
            }
        }
    }
}

impl fmt::Display for CycleSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = match self.kind {
            CycleKind::V => "V",
            CycleKind::Vvar => "Vvar",
        };
        write!(f, "{k}({},{})", self.n_pre, self.n_post)
    }
}

/// One visited level of a cycle. Residual norms are Euclidean over the
/// system the cycle solves on that level, computed without counting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceLine {
    pub level: usize,
    pub pre: usize,
    pub post: usize,
    pub residual_before: f64,
    pub residual_after: f64,
}

impl fmt::Display for TraceLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "level={} pre={} post={} residual_before={:.6e} residual_after={:.6e}",
            self.level, self.pre, self.post, self.residual_before, self.residual_after
        )
    }
}

/// Multigrid driver over one operator set. Collects coarse-solver
/// iteration counts and, if enabled, a cycle trace.
pub struct Multigrid<'a, 'h> {
    pub ops: &'a StokesOperators<'h>,
    pub spec: CycleSpec,
    pub coarse_iterations: Vec<usize>,
    pub trace: Option<Vec<TraceLine>>,
    /// Sweep direction of velocity post-smoothing; `Backward` (BHGS) by
    /// default.
    pub post_direction: Direction,
}

fn norm(v: &[f64]) -> f64 {
    crate::fields::dot_slices(v, v).sqrt()
}

impl<'a, 'h> Multigrid<'a, 'h> {
    pub fn new(ops: &'a StokesOperators<'h>, spec: CycleSpec) -> Self {
        Multigrid {
            ops,
            spec,
            coarse_iterations: Vec::new(),
            trace: None,
            post_direction: Direction::Backward,
        }
    }

    /// Post-smooths with the exact adjoint of FHGS, which makes the cycle
    /// from a zero start a symmetric operator when the coarse solve is
    /// linear and symmetric.
    pub fn with_adjoint_post(mut self) -> Self {
        self.post_direction = Direction::Adjoint;
        self
    }

    pub fn with_trace(mut self) -> Self {
        self.trace = Some(Vec::new());
        self
    }

    fn velocity_residual(&self, l: usize, u: &[f64], f: &[f64], counted: bool) -> Vec<f64> {
        let mut r = vec![0.0; u.len()];
        self.ops.apply_a(l, u, &mut r, counted);
        for (ri, fi) in r.iter_mut().zip(f) {
            *ri = fi - *ri;
        }
        r
    }

    /// One cycle on `P A u = f` from level `l`, FHGS before and BHGS after
    /// the coarse correction.
    pub fn velocity_cycle(&mut self, l: usize, u: &mut [f64], f: &[f64]) {
        self.velocity_cycle_from(l, l, u, f);
    }

    fn velocity_cycle_from(&mut self, l: usize, top: usize, u: &mut [f64], f: &[f64]) {
        let ops = self.ops;
        let before = self
            .trace
            .as_ref()
            .map(|_| norm(&self.velocity_residual(l, u, f, false)));
        if l == 0 {
            let info = self.coarse_velocity(u, f, self.spec.coarse.stop());
            self.coarse_iterations.push(info.iterations);
            self.record(0, 0, 0, before, |s| {
                norm(&s.velocity_residual(0, u, f, false))
            });
            return;
        }
        let (pre, post) = self.spec.smoothing(l, top);
        for _ in 0..pre {
            velocity_sweep(ops, l, u, f, Direction::Forward);
        }
        let r = self.velocity_residual(l, u, f, true);
        let nc = ops.nodes(l - 1);
        let mut rc = vec![0.0; 3 * nc];
        restrict(ops.hierarchy, l, &r, &mut rc, 3).expect("consecutive levels");
        ops.constraints(l - 1).project(&mut rc);
        let mut ec = vec![0.0; 3 * nc];
        self.velocity_cycle_from(l - 1, top, &mut ec, &rc);
        let mut ef = vec![0.0; u.len()];
        prolongate(ops.hierarchy, l, &ec, &mut ef, 3).expect("consecutive levels");
        ops.constraints(l).project(&mut ef);
        axpy_slices(1.0, &ef, u);
        for _ in 0..post {
            velocity_sweep(ops, l, u, f, self.post_direction);
        }
        self.record(l, pre, post, before, |s| {
            norm(&s.velocity_residual(l, u, f, false))
        });
    }

    fn record<F: FnOnce(&Self) -> f64>(
        &mut self,
        level: usize,
        pre: usize,
        post: usize,
        before: Option<f64>,
        after: F,
    ) {
        if let Some(residual_before) = before {
            let residual_after = after(self);
            if let Some(t) = self.trace.as_mut() {
                t.push(TraceLine {
                    level,
                    pre,
                    post,
                    residual_before,
                    residual_after,
                });
            }
        }
    }

    /// CG on the level-0 velocity block.
    pub fn coarse_velocity(&self, u: &mut [f64], f: &[f64], stop: Stop) -> KrylovInfo {
        let ops = self.ops;
        krylov::cg(|x, y| ops.apply_a(0, x, y, true), f, u, stop)
    }

    /// One saddle-point cycle from level `l` with Uzawa smoothing.
    pub fn saddle_cycle(&mut self, x: &mut StokesVector, rhs: &StokesVector) -> Result<()> {
        let l = x.level();
        self.saddle_cycle_from(l, x, rhs)
    }

    fn saddle_cycle_from(
        &mut self,
        top: usize,
        x: &mut StokesVector,
        rhs: &StokesVector,
    ) -> Result<()> {
        let ops = self.ops;
        let l = x.level();
        let before = self
            .trace
            .as_ref()
            .map(|_| ops.residual(x, rhs, false).norm());
        if l == 0 {
            let info = self.coarse_saddle(x, rhs, self.spec.coarse.stop())?;
            self.coarse_iterations.push(info.iterations);
            self.record(0, 0, 0, before, |s| s.ops.residual(x, rhs, false).norm());
            return Ok(());
        }
        let (pre, post) = self.spec.smoothing(l, top);
        for _ in 0..pre {
            uzawa_step(ops, x, rhs, 1);
        }
        let r = ops.residual(x, rhs, true);
        let h = ops.hierarchy;
        let nc = ops.nodes(l - 1);
        let mut rc = StokesVector::zeros(l - 1, nc);
        {
            let (cu, cp) = rc.split_mut();
            restrict(h, l, r.u(), cu, 3)?;
            restrict(h, l, r.p(), cp, 1)?;
        }
        ops.make_admissible(&mut rc);
        let mut ec = rc.zeros_like();
        self.saddle_cycle_from(top, &mut ec, &rc)?;
        let mut ef = x.zeros_like();
        {
            let (fu, fp) = ef.split_mut();
            prolongate(h, l, ec.u(), fu, 3)?;
            prolongate(h, l, ec.p(), fp, 1)?;
        }
        ops.make_admissible(&mut ef);
        axpy_slices(1.0, ef.as_slice(), x.as_mut_slice());
        for _ in 0..post {
            uzawa_step(ops, x, rhs, 1);
        }
        self.record(l, pre, post, before, |s| {
            s.ops.residual(x, rhs, false).norm()
        });
        Ok(())
    }

    /// Block-diagonally preconditioned MINRES on the level-0 saddle system:
    /// three CG iterations on the velocity block and the inverse lumped mass
    /// on the pressure.
    pub fn coarse_saddle(
        &self,
        x: &mut StokesVector,
        rhs: &StokesVector,
        stop: Stop,
    ) -> Result<KrylovInfo> {
        let ops = self.ops;
        let n = ops.nodes(0);
        let mass = &ops.level(0).mass;
        let fix_mean = !ops.constraints(0).has_outflow;
        let info = krylov::pminres_relative(
            |a, b| ops.apply_saddle_slices(0, a, b, true),
            |r, z| {
                let (ru, rp) = r.split_at(3 * n);
                let (zu, zp) = z.split_at_mut(3 * n);
                zu.fill(0.0);
                krylov::cg(|a, b| ops.apply_a(0, a, b, true), ru, zu, Stop::Fixed(3));
                ops.counter.bump(OperatorTag::M, 0);
                for ((zi, ri), m) in zp.iter_mut().zip(rp).zip(mass) {
                    *zi = ri / m;
                }
                if fix_mean {
                    mean_zero_project_uniform(zp);
                }
            },
            rhs.as_slice(),
            x.as_mut_slice(),
            stop,
        )?;
        if fix_mean {
            mean_zero_project_uniform(x.p_mut());
        }
        Ok(info)
    }

    /// Full multigrid on `problems[0..=L]`: a coarse solve on level 0, then
    /// on every finer level the interpolated full solution followed by
    /// `inner` cycles. Returns the full solutions (lifting included) of
    /// every level.
    pub fn fmg(&mut self, problems: &[StokesProblem], inner: usize) -> Result<Vec<StokesVector>> {
        let ops = self.ops;
        let h = ops.hierarchy;
        if problems.is_empty() {
            return Err(Error::InvalidArgument(
                "full multigrid needs at least one level".into(),
            ));
        }
        for (l, p) in problems.iter().enumerate() {
            if p.level() != l {
                return Err(Error::LevelMismatch {
                    expected: l,
                    found: p.level(),
                });
            }
        }
        let mut x = problems[0].rhs.zeros_like();
        let info = self.coarse_saddle(&mut x, &problems[0].rhs, self.spec.coarse.stop())?;
        self.coarse_iterations.push(info.iterations);
        let mut out = vec![problems[0].full_solution(&x)];
        for l in 1..problems.len() {
            let prev = out.last().expect("nonempty");
            let mut full = problems[l].rhs.zeros_like();
            {
                let (fu, fp) = full.split_mut();
                prolongate(h, l, prev.u(), fu, 3)?;
                prolongate(h, l, prev.p(), fp, 1)?;
            }
            let mut xl = full;
            axpy_slices(-1.0, problems[l].lifting.as_slice(), xl.as_mut_slice());
            ops.make_admissible(&mut xl);
            for _ in 0..inner {
                self.saddle_cycle(&mut xl, &problems[l].rhs)?;
            }
            out.push(problems[l].full_solution(&xl));
        }
        Ok(out)
    }
}
