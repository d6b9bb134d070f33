use crate::error::Result;
use crate::fields::{axpy_slices, mean_zero_project_uniform, StokesVector};
use crate::mesh::{GridHierarchy, Point};

use super::local::{ElementGeometry, DELTA};
use super::{OperatorTag, StokesOperators};

/// Lumped P1 mass: a quarter of every adjacent element volume.
pub fn lumped_mass(h: &GridHierarchy, l: usize) -> Result<Vec<f64>> {
    let lev = h.level(l);
    let mut m = vec![0.0; lev.num_nodes()];
    for t in 0..lev.volume_maps.len() {
        let vol = h.coarse_mesh.tet_volume(t) / (lev.intervals.pow(3)) as f64;
        lev.for_each_element(t, h.diagonals[t], false, |_, _, ids| {
            for i in ids {
                m[i] += vol / 4.0;
            }
        });
    }
    Ok(m)
}

/// The discrete system for homogeneous constraints plus the lifting that
/// carries the dirichlet data: the full solution is `x + lifting` where
/// `K x = rhs` on the constrained subspace.
#[derive(Clone, Debug)]
pub struct StokesProblem {
    pub rhs: StokesVector,
    pub lifting: StokesVector,
}

impl StokesProblem {
    /// Adds the lifting to a solution of the homogeneous problem.
    pub fn full_solution(&self, x: &StokesVector) -> StokesVector {
        let mut s = x.clone();
        axpy_slices(1.0, self.lifting.as_slice(), s.as_mut_slice());
        s
    }

    pub fn level(&self) -> usize {
        self.rhs.level()
    }
}

/// Load vector `<f, v>`, stabilization rhs `g(q) = -sum_T delta h_T^2 <f, grad q>_T`
/// and dirichlet lifting `boundary` at the dirichlet nodes.
pub fn assemble_rhs<F, G>(ops: &StokesOperators, l: usize, force: F, boundary: G) -> StokesProblem
where
    F: Fn(Point) -> [f64; 3],
    G: Fn(Point) -> [f64; 3],
{
    let h = ops.hierarchy;
    let lev = h.level(l);
    let n = lev.num_nodes();
    let mut fu = vec![0.0; 3 * n];
    let mut gp = vec![0.0; n];

    for t in 0..lev.volume_maps.len() {
        lev.for_each_element(t, h.diagonals[t], false, |ty, anchor, ids| {
            let geo = ElementGeometry::new(h.element_points(l, t, ty, anchor))
                .expect("element validated during stencil assembly");
            let (q, w) = geo.quadrature();
            let mut total = [0.0; 3];
            for (k, &xq) in q.iter().enumerate() {
                let fx = force(xq);
                for d in 0..3 {
                    total[d] += w * fx[d];
                }
                for (a, &i) in ids.iter().enumerate() {
                    let phi = ElementGeometry::quad_shape(a, k);
                    for d in 0..3 {
                        fu[d * n + i] += w * phi * fx[d];
                    }
                }
            }
            let s = DELTA * geo.size().powi(2);
            for (a, &i) in ids.iter().enumerate() {
                let gr = geo.grads[a];
                gp[i] -= s * (gr[0] * total[0] + gr[1] * total[1] + gr[2] * total[2]);
            }
        });
    }

    let c = ops.constraints(l);
    let mut lift_u = vec![0.0; 3 * n];
    for &i in &c.dirichlet_nodes {
        let i = i as usize;
        let v = boundary(lev.coords[i]);
        for d in 0..3 {
            lift_u[d * n + i] = v[d];
        }
    }
    let mut tmp = vec![0.0; 3 * n];
    ops.apply_raw(ops.formulation.tag(), l, &lift_u, &mut tmp);
    axpy_slices(-1.0, &tmp, &mut fu);
    c.project(&mut fu);
    let mut tp = vec![0.0; n];
    ops.apply_raw(OperatorTag::B, l, &lift_u, &mut tp);
    axpy_slices(-1.0, &tp, &mut gp);
    if !c.has_outflow {
        // the constant pressure is in the kernel; keep the system consistent
        mean_zero_project_uniform(&mut gp);
    }

    let rhs = StokesVector::from_parts(l, &fu, &gp).expect("lengths agree by construction");
    let lifting =
        StokesVector::from_parts(l, &lift_u, &vec![0.0; n]).expect("lengths agree by construction");
    StokesProblem { rhs, lifting }
}
