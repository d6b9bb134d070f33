//! Hybrid Gauss-Seidel smoothers and the inexact Uzawa step.
//!
//! A sweep visits the primitive classes in the order vertex, edge, face,
//! volume. Primitives of one class are decoupled: couplings between two
//! different primitives of the class being swept read values frozen at the
//! start of that class. Inside a primitive, even-parity nodes are relaxed
//! before odd-parity nodes, each in increasing node order. The backward
//! sweep reverses the order inside every primitive but keeps the class
//! order.

use serde::{Deserialize, Serialize};

use crate::fields::{axpy_slices, StokesVector};
use crate::mesh::GridHierarchy;
use crate::operators::bc::{Constraints, DIRICHLET, SLIP};
use crate::operators::stencil::BlockStencil;
use crate::operators::{Formulation, OperatorTag, StokesOperators};

/// Default relaxation of the pressure smoother.
pub const PRESSURE_OMEGA: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SmootherKind {
    Fhgs,
    Bhgs,
    Shgs,
    FhgsRelaxed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
    /// Backward inside every primitive with the class order reversed as
    /// well: the exact adjoint of `Forward`.
    Adjoint,
}

/// One relaxation sweep of `st x = b`, `x` and `b` component-major with
/// `K` components. Dirichlet nodes are skipped and slip nodes are
/// projected after their update when `constraints` is given.
pub fn gs_sweep<const K: usize>(
    h: &GridHierarchy,
    st: &BlockStencil<K, K>,
    x: &mut [f64],
    b: &[f64],
    dir: Direction,
    omega: f64,
    constraints: Option<&Constraints>,
) {
    let lev = h.level(st.level);
    let n = lev.num_nodes();

    let reversed = dir == Direction::Adjoint;
    if reversed {
        sweep_volumes(h, st, x, b, dir, omega, constraints);
    }
    // lower classes: vertices, edges, faces
    let mut snap = Vec::new();
    let classes: [usize; 3] = if reversed { [2, 1, 0] } else { [0, 1, 2] };
    for class in classes {
        let range = lev.class_ranges[class].clone();
        if range.is_empty() {
            continue;
        }
        snap.clear();
        for c in 0..K {
            snap.extend_from_slice(&x[c * n + range.start..c * n + range.end]);
        }
        let len = range.len();
        let prims =
            lev.node_primitive[range.start] as usize..=lev.node_primitive[range.end - 1] as usize;
        for prim in prims {
            let r = lev.primitive_ranges[prim].clone();
            let mut update = |i: usize| {
                if let Some(c) = constraints {
                    if c.kind[i] == DIRICHLET {
                        return;
                    }
                }
                let diag = st.vals[st.diag_pos[i]];
                let mut s = [0.0; K];
                for k in 0..K {
                    s[k] = b[k * n + i];
                }
                for e in st.row_ptr[i]..st.row_ptr[i + 1] {
                    let j = st.cols[e] as usize;
                    if j == i {
                        continue;
                    }
                    let blk = &st.vals[e];
                    let frozen = range.contains(&j) && lev.node_primitive[j] as usize != prim;
                    for d in 0..K {
                        let v = if frozen {
                            snap[d * len + j - range.start]
                        } else {
                            x[d * n + j]
                        };
                        for k in 0..K {
                            s[k] -= blk[k][d] * v;
                        }
                    }
                }
                relax_node(
                    x,
                    n,
                    i,
                    &s,
                    &diag,
                    omega,
                    constraints,
                    dir != Direction::Forward,
                );
            };
            match dir {
                Direction::Forward => {
                    for color in [0u8, 1] {
                        for i in r.clone() {
                            if lev.color[i] == color {
                                update(i);
                            }
                        }
                    }
                }
                Direction::Backward | Direction::Adjoint => {
                    for color in [1u8, 0] {
                        for i in r.clone().rev() {
                            if lev.color[i] == color {
                                update(i);
                            }
                        }
                    }
                }
            }
        }
    }

    if !reversed {
        sweep_volumes(h, st, x, b, dir, omega, constraints);
    }
}

// Interior rows only couple within their volume and to lower nodes, so
// volumes are independent of each other.
fn sweep_volumes<const K: usize>(
    h: &GridHierarchy,
    st: &BlockStencil<K, K>,
    x: &mut [f64],
    b: &[f64],
    dir: Direction,
    omega: f64,
    constraints: Option<&Constraints>,
) {
    let lev = h.level(st.level);
    let n = lev.num_nodes();
    let n_vol = lev.volume_maps.len();
    let first_volume_prim = lev.primitive_ranges.len() - n_vol;
    for t in 0..n_vol {
        debug_assert_eq!(
            lev.primitive_ranges[first_volume_prim + t],
            lev.volume_range(t)
        );
        let vs = &st.volumes[t];
        let map = &lev.volume_maps[t];
        let start = lev.volume_range(t).start;
        let slots = &lev.interior[t];
        let diag = vs.blocks[vs.center];
        let mut update = |k: usize| {
            let i = start + k;
            if let Some(c) = constraints {
                if c.kind[i] == DIRICHLET {
                    return;
                }
            }
            let slot = slots[k] as isize;
            let mut s = [0.0; K];
            for c in 0..K {
                s[c] = b[c * n + i];
            }
            for (e, (&off, blk)) in vs.offsets.iter().zip(&vs.blocks).enumerate() {
                if e == vs.center {
                    continue;
                }
                let j = map[(slot + off) as usize] as usize;
                for d in 0..K {
                    let v = x[d * n + j];
                    for c in 0..K {
                        s[c] -= blk[c][d] * v;
                    }
                }
            }
            relax_node(
                x,
                n,
                i,
                &s,
                &diag,
                omega,
                constraints,
                dir != Direction::Forward,
            );
        };
        match dir {
            Direction::Forward => {
                for color in [0u8, 1] {
                    for k in 0..slots.len() {
                        if lev.color[start + k] == color {
                            update(k);
                        }
                    }
                }
            }
            Direction::Backward | Direction::Adjoint => {
                for color in [1u8, 0] {
                    for k in (0..slots.len()).rev() {
                        if lev.color[start + k] == color {
                            update(k);
                        }
                    }
                }
            }
        }
    }
}

/// Solves the node's `K x K` diagonal block by one pointwise Gauss-Seidel
/// pass over its components, last component first when `reverse`. `s`
/// holds the rhs minus all off-node couplings.
#[inline]
fn relax_node<const K: usize>(
    x: &mut [f64],
    n: usize,
    i: usize,
    s: &[f64; K],
    diag: &[[f64; K]; K],
    omega: f64,
    constraints: Option<&Constraints>,
    reverse: bool,
) {
    for step in 0..K {
        let c = if reverse { K - 1 - step } else { step };
        let mut r = s[c];
        for d in 0..K {
            if d != c {
                r -= diag[c][d] * x[d * n + i];
            }
        }
        let old = x[c * n + i];
        x[c * n + i] = (1.0 - omega) * old + omega * r / diag[c][c];
    }
    if K == 3 {
        if let Some(cons) = constraints {
            if cons.kind[i] == SLIP {
                let mut v = [x[i], x[n + i], x[2 * n + i]];
                cons.project_node(i, &mut v);
                x[i] = v[0];
                x[n + i] = v[1];
                x[2 * n + i] = v[2];
            }
        }
    }
}

/// One sweep on the velocity system `P A u = f`, counted as one
/// application of `A`.
pub fn velocity_sweep(ops: &StokesOperators, l: usize, u: &mut [f64], f: &[f64], dir: Direction) {
    let h = ops.hierarchy;
    let lo = ops.level(l);
    let cons = &lo.constraints;
    ops.counter.bump(ops.formulation.tag(), l);
    match ops.formulation {
        Formulation::Laplace if cons.slip_nodes.is_empty() => {
            let n = lo.nodes();
            for c in 0..3 {
                gs_sweep::<1>(
                    h,
                    &lo.laplace,
                    &mut u[c * n..(c + 1) * n],
                    &f[c * n..(c + 1) * n],
                    dir,
                    1.0,
                    Some(cons),
                );
            }
        }
        Formulation::Laplace => {
            gs_sweep::<3>(h, lo.laplace_blocks(), u, f, dir, 1.0, Some(cons));
        }
        Formulation::Dop => gs_sweep::<3>(h, &lo.epsilon, u, f, dir, 1.0, Some(cons)),
    }
}

/// One relaxed sweep on `C p = b`, counted as one application of `C`.
pub fn pressure_sweep(
    ops: &StokesOperators,
    l: usize,
    p: &mut [f64],
    b: &[f64],
    dir: Direction,
    omega: f64,
) {
    ops.counter.bump(OperatorTag::C, l);
    gs_sweep::<1>(ops.hierarchy, &ops.level(l).stab, p, b, dir, omega, None);
}

/// Velocity smoothing of the given kind.
pub fn smooth_velocity(
    ops: &StokesOperators,
    l: usize,
    u: &mut [f64],
    f: &[f64],
    kind: SmootherKind,
) {
    match kind {
        SmootherKind::Fhgs => velocity_sweep(ops, l, u, f, Direction::Forward),
        SmootherKind::Bhgs => velocity_sweep(ops, l, u, f, Direction::Backward),
        SmootherKind::Shgs => {
            velocity_sweep(ops, l, u, f, Direction::Forward);
            velocity_sweep(ops, l, u, f, Direction::Backward);
        }
        SmootherKind::FhgsRelaxed(omega) => {
            let h = ops.hierarchy;
            let lo = ops.level(l);
            ops.counter.bump(ops.formulation.tag(), l);
            match ops.formulation {
                Formulation::Laplace => gs_sweep::<3>(
                    h,
                    lo.laplace_blocks(),
                    u,
                    f,
                    Direction::Forward,
                    omega,
                    Some(&lo.constraints),
                ),
                Formulation::Dop => gs_sweep::<3>(
                    h,
                    &lo.epsilon,
                    u,
                    f,
                    Direction::Forward,
                    omega,
                    Some(&lo.constraints),
                ),
            }
        }
    }
}

/// Pressure smoothing of the given kind on `C p = b`.
pub fn smooth_pressure(
    ops: &StokesOperators,
    l: usize,
    p: &mut [f64],
    b: &[f64],
    kind: SmootherKind,
) {
    match kind {
        SmootherKind::Fhgs => pressure_sweep(ops, l, p, b, Direction::Forward, 1.0),
        SmootherKind::Bhgs => pressure_sweep(ops, l, p, b, Direction::Backward, 1.0),
        SmootherKind::Shgs => {
            pressure_sweep(ops, l, p, b, Direction::Forward, 1.0);
            pressure_sweep(ops, l, p, b, Direction::Backward, 1.0);
        }
        SmootherKind::FhgsRelaxed(omega) => pressure_sweep(ops, l, p, b, Direction::Forward, omega),
    }
}

/// Inexact Uzawa step: `n_sweeps` SHGS sweeps on `A u = f - B^T p`, then
/// `n_sweeps` relaxed forward sweeps on `C p = B u - g`.
pub fn uzawa_step(
    ops: &StokesOperators,
    x: &mut StokesVector,
    rhs: &StokesVector,
    n_sweeps: usize,
) {
    let l = x.level();
    let n = x.nodes();
    let mut fu = vec![0.0; 3 * n];
    ops.apply_bt(l, x.p(), &mut fu, true);
    for (v, r) in fu.iter_mut().zip(rhs.u()) {
        *v = r - *v;
    }
    let (u, p) = x.split_mut();
    for _ in 0..n_sweeps {
        smooth_velocity(ops, l, u, &fu, SmootherKind::Shgs);
    }
    let mut bp = vec![0.0; n];
    ops.apply_b(l, u, &mut bp, true);
    axpy_slices(-1.0, rhs.p(), &mut bp);
    for _ in 0..n_sweeps {
        pressure_sweep(ops, l, p, &bp, Direction::Forward, PRESSURE_OMEGA);
    }
}
