//! Discrete Stokes operators on every level of a hierarchy.
//!
//! The saddle-point system is
//!
//! ```text
//! [ A  B^T ] [u]   [f]
//! [ B  -C  ] [p] = [g]
//! ```
//!
//! with `A` either the vector Laplacian (`A1`) or the symmetric-gradient
//! operator (`A2`). Solvers work on velocities that satisfy the homogeneous
//! constraints (zero at dirichlet nodes, tangential at free-slip nodes);
//! every velocity-valued product is projected back onto that subspace.

pub mod bc;
pub mod local;
mod rhs;
pub mod sparse;
pub mod stencil;

pub use bc::Constraints;
pub use rhs::{assemble_rhs, lumped_mass, StokesProblem};
pub use stencil::BlockStencil;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::StokesVector;
use crate::mesh::GridHierarchy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OperatorTag {
    A1,
    A2,
    B,
    Bt,
    C,
    M,
}

impl OperatorTag {
    pub const ALL: [OperatorTag; 6] = [
        OperatorTag::A1,
        OperatorTag::A2,
        OperatorTag::B,
        OperatorTag::Bt,
        OperatorTag::C,
        OperatorTag::M,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    /// `(input components, output components)` per node.
    pub fn shape(self) -> (usize, usize) {
        match self {
            OperatorTag::A1 | OperatorTag::A2 => (3, 3),
            OperatorTag::B => (3, 1),
            OperatorTag::Bt => (1, 3),
            OperatorTag::C | OperatorTag::M => (1, 1),
        }
    }
}

impl fmt::Display for OperatorTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Velocity-velocity block of the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    /// Vector Laplacian `a1(u, v) = <nu grad u, grad v>`.
    #[default]
    Laplace,
    /// Symmetric gradient `a2(u, v) = 2 <nu D(u), D(v)>`.
    Dop,
}

impl Formulation {
    pub fn tag(self) -> OperatorTag {
        match self {
            Formulation::Laplace => OperatorTag::A1,
            Formulation::Dop => OperatorTag::A2,
        }
    }
}

impl fmt::Display for Formulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Formulation::Laplace => "laplace",
            Formulation::Dop => "dop",
        })
    }
}

impl FromStr for Formulation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "laplace" => Ok(Formulation::Laplace),
            "dop" => Ok(Formulation::Dop),
            other => Err(format!(
                "unknown formulation `{other}` (expected laplace or dop)"
            )),
        }
    }
}

/// Operator applications per `(tag, level)`.
#[derive(Debug)]
pub struct OpCounter {
    counts: Vec<[AtomicU64; 6]>,
}

impl OpCounter {
    pub fn new(levels: usize) -> Self {
        OpCounter {
            counts: (0..levels).map(|_| Default::default()).collect(),
        }
    }

    pub fn bump(&self, tag: OperatorTag, level: usize) {
        self.counts[level][tag.index()].fetch_add(1, Ordering::Relaxed);
    }

    pub fn get(&self, tag: OperatorTag, level: usize) -> u64 {
        self.counts[level][tag.index()].load(Ordering::Relaxed)
    }

    /// Counts indexed `[level][tag]`.
    pub fn snapshot(&self) -> Vec<[u64; 6]> {
        self.counts
            .iter()
            .map(|c| std::array::from_fn(|k| c[k].load(Ordering::Relaxed)))
            .collect()
    }

    pub fn reset(&self) {
        for c in &self.counts {
            for v in c {
                v.store(0, Ordering::Relaxed);
            }
        }
    }
}

/// Stencils, lumped mass and constraints of one level.
#[derive(Clone, Debug)]
pub struct LevelOperators {
    pub level: usize,
    /// `nu`-scaled scalar Laplacian, applied per velocity component for `A1`.
    pub laplace: BlockStencil<1, 1>,
    /// `laplace` as a block-diagonal 3x3 operator, for pointwise smoothing.
    pub laplace3: BlockStencil<3, 3>,
    pub epsilon: BlockStencil<3, 3>,
    pub div: BlockStencil<1, 3>,
    pub grad: BlockStencil<3, 1>,
    pub stab: BlockStencil<1, 1>,
    pub mass: Vec<f64>,
    pub constraints: Constraints,
}

impl LevelOperators {
    pub fn build(h: &GridHierarchy, l: usize, nu: f64) -> Result<Self> {
        if !(nu > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "viscosity must be positive, got {nu}"
            )));
        }
        let laplace = BlockStencil::assemble(h, l, |g| local::laplace(g, nu))?;
        let epsilon = BlockStencil::assemble(h, l, |g| local::epsilon(g, nu))?;
        let div = BlockStencil::assemble(h, l, local::divergence)?;
        let grad = BlockStencil::assemble(h, l, local::gradient)?;
        let stab = BlockStencil::assemble(h, l, local::stabilization)?;
        let laplace3 = laplace.expand3();
        for bad in [
            stencil::find_bad_diagonal(h, &laplace),
            stencil::find_bad_diagonal(h, &epsilon),
            stencil::find_bad_diagonal(h, &stab),
        ] {
            if let Some(node) = bad {
                return Err(Error::ZeroDiagonal { node });
            }
        }
        let mass = lumped_mass(h, l)?;
        let n = h.level(l).num_nodes();
        let ones = vec![1.0; n];
        let mut g1 = vec![0.0; 3 * n];
        {
            let (gx, rest) = g1.split_at_mut(n);
            let (gy, gz) = rest.split_at_mut(n);
            grad.apply(h, [&ones], &mut [gx, gy, gz]);
        }
        let constraints = Constraints::new(h, l, &g1)?;
        Ok(LevelOperators {
            level: l,
            laplace,
            laplace3,
            epsilon,
            div,
            grad,
            stab,
            mass,
            constraints,
        })
    }

    pub fn nodes(&self) -> usize {
        self.mass.len()
    }

    pub fn laplace_blocks(&self) -> &BlockStencil<3, 3> {
        &self.laplace3
    }
}

/// All operators of a hierarchy together with the application counter.
#[derive(Debug)]
pub struct StokesOperators<'h> {
    pub hierarchy: &'h GridHierarchy,
    pub formulation: Formulation,
    pub nu: f64,
    pub levels: Vec<LevelOperators>,
    pub counter: OpCounter,
}

fn split3(v: &mut [f64]) -> [&mut [f64]; 3] {
    let n = v.len() / 3;
    let (a, rest) = v.split_at_mut(n);
    let (b, c) = rest.split_at_mut(n);
    [a, b, c]
}

fn parts3(v: &[f64]) -> [&[f64]; 3] {
    let n = v.len() / 3;
    [&v[..n], &v[n..2 * n], &v[2 * n..]]
}

impl<'h> StokesOperators<'h> {
    pub fn new(hierarchy: &'h GridHierarchy, formulation: Formulation, nu: f64) -> Result<Self> {
        let levels = (0..hierarchy.levels.len())
            .map(|l| LevelOperators::build(hierarchy, l, nu))
            .collect::<Result<Vec<_>>>()?;
        let counter = OpCounter::new(levels.len());
        Ok(StokesOperators {
            hierarchy,
            formulation,
            nu,
            levels,
            counter,
        })
    }

    pub fn finest(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, l: usize) -> &LevelOperators {
        &self.levels[l]
    }

    pub fn nodes(&self, l: usize) -> usize {
        self.levels[l].nodes()
    }

    pub fn constraints(&self, l: usize) -> &Constraints {
        &self.levels[l].constraints
    }

    /// `y = Op x` for one tag, without constraints; counted.
    pub fn apply(&self, tag: OperatorTag, l: usize, x: &[f64], y: &mut [f64]) -> Result<()> {
        let n = self.nodes(l);
        let (cin, cout) = tag.shape();
        if x.len() != cin * n {
            return Err(Error::LengthMismatch {
                expected: cin * n,
                found: x.len(),
            });
        }
        if y.len() != cout * n {
            return Err(Error::LengthMismatch {
                expected: cout * n,
                found: y.len(),
            });
        }
        self.counter.bump(tag, l);
        self.apply_raw(tag, l, x, y);
        Ok(())
    }

    pub(crate) fn apply_raw(&self, tag: OperatorTag, l: usize, x: &[f64], y: &mut [f64]) {
        let h = self.hierarchy;
        let ops = &self.levels[l];
        match tag {
            OperatorTag::A1 => {
                let xs = parts3(x);
                let ys = split3(y);
                for (xc, yc) in xs.into_iter().zip(ys) {
                    ops.laplace.apply(h, [xc], &mut [yc]);
                }
            }
            OperatorTag::A2 => ops.epsilon.apply(h, parts3(x), &mut split3(y)),
            OperatorTag::B => ops.div.apply(h, parts3(x), &mut [y]),
            OperatorTag::Bt => ops.grad.apply(h, [x], &mut split3(y)),
            OperatorTag::C => ops.stab.apply(h, [x], &mut [y]),
            OperatorTag::M => {
                for ((yi, xi), m) in y.iter_mut().zip(x).zip(&ops.mass) {
                    *yi = m * xi;
                }
            }
        }
    }

    fn bump_if(&self, counted: bool, tag: OperatorTag, l: usize) {
        if counted {
            self.counter.bump(tag, l);
        }
    }

    /// Constrained velocity block `P A u`.
    pub fn apply_a(&self, l: usize, u: &[f64], y: &mut [f64], counted: bool) {
        let tag = self.formulation.tag();
        self.bump_if(counted, tag, l);
        self.apply_raw(tag, l, u, y);
        self.levels[l].constraints.project(y);
    }

    /// Constrained gradient `P B^T p`.
    pub fn apply_bt(&self, l: usize, p: &[f64], y: &mut [f64], counted: bool) {
        self.bump_if(counted, OperatorTag::Bt, l);
        self.apply_raw(OperatorTag::Bt, l, p, y);
        self.levels[l].constraints.project(y);
    }

    pub fn apply_b(&self, l: usize, u: &[f64], y: &mut [f64], counted: bool) {
        self.bump_if(counted, OperatorTag::B, l);
        self.apply_raw(OperatorTag::B, l, u, y);
    }

    pub fn apply_c(&self, l: usize, p: &[f64], y: &mut [f64], counted: bool) {
        self.bump_if(counted, OperatorTag::C, l);
        self.apply_raw(OperatorTag::C, l, p, y);
    }

    /// `y = K x = (P(A u + B^T p), B u - C p)`.
    pub fn apply_saddle_into(&self, x: &StokesVector, y: &mut StokesVector, counted: bool) {
        self.apply_saddle_slices(x.level(), x.as_slice(), y.as_mut_slice(), counted);
    }

    /// `apply_saddle_into` on raw `[u | p]` vectors of level `l`.
    pub fn apply_saddle_slices(&self, l: usize, x: &[f64], y: &mut [f64], counted: bool) {
        let n = self.nodes(l);
        let (xu, xp) = x.split_at(3 * n);
        let (yu, yp) = y.split_at_mut(3 * n);
        let mut tu = vec![0.0; 3 * n];
        let mut tp = vec![0.0; n];
        self.apply_a(l, xu, yu, counted);
        self.apply_bt(l, xp, &mut tu, counted);
        crate::fields::axpy_slices(1.0, &tu, yu);
        self.apply_b(l, xu, yp, counted);
        self.apply_c(l, xp, &mut tp, counted);
        crate::fields::axpy_slices(-1.0, &tp, yp);
    }

    /// Counted saddle-point product.
    pub fn apply_saddle(&self, x: &StokesVector) -> Result<StokesVector> {
        self.check_level(x)?;
        let mut y = x.zeros_like();
        self.apply_saddle_into(x, &mut y, true);
        Ok(y)
    }

    /// `r = rhs - K x`.
    pub fn residual_into(
        &self,
        x: &StokesVector,
        rhs: &StokesVector,
        r: &mut StokesVector,
        counted: bool,
    ) {
        self.apply_saddle_into(x, r, counted);
        for (ri, bi) in r.as_mut_slice().iter_mut().zip(rhs.as_slice()) {
            *ri = bi - *ri;
        }
        self.levels[x.level()].constraints.project(r.u_mut());
    }

    pub fn residual(&self, x: &StokesVector, rhs: &StokesVector, counted: bool) -> StokesVector {
        let mut r = x.zeros_like();
        self.residual_into(x, rhs, &mut r, counted);
        r
    }

    /// Projects the velocity onto the constrained subspace.
    pub fn make_admissible(&self, x: &mut StokesVector) {
        self.levels[x.level()].constraints.project(x.u_mut());
    }

    fn check_level(&self, x: &StokesVector) -> Result<()> {
        let l = x.level();
        if l >= self.levels.len() {
            return Err(Error::LevelMismatch {
                expected: self.finest(),
                found: l,
            });
        }
        if x.nodes() != self.nodes(l) {
            return Err(Error::LengthMismatch {
                expected: self.nodes(l),
                found: x.nodes(),
            });
        }
        Ok(())
    }

    /// Product with dirichlet rows replaced by identity rows and dirichlet
    /// columns removed, for the velocity block.
    pub fn apply_dirichlet_constrained(&self, l: usize, u: &[f64], y: &mut [f64]) {
        let c = &self.levels[l].constraints;
        let mut masked = u.to_vec();
        c.mask_dirichlet(&mut masked);
        self.apply_raw(self.formulation.tag(), l, &masked, y);
        let n = self.nodes(l);
        for &i in &c.dirichlet_nodes {
            let i = i as usize;
            for d in 0..3 {
                y[d * n + i] = u[d * n + i];
            }
        }
    }
}
