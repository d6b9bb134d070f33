//! Velocity constraints: dirichlet nodes and free-slip nodes with their
//! mass-conservative normals.

use crate::error::{Error, Result};
use crate::mesh::{BoundaryTag, GridHierarchy};

pub const FREE: u8 = 0;
pub const DIRICHLET: u8 = 1;
pub const SLIP: u8 = 2;

#[derive(Clone, Debug)]
pub struct Constraints {
    /// `FREE`, `DIRICHLET` or `SLIP` per node.
    pub kind: Vec<u8>,
    pub dirichlet_nodes: Vec<u32>,
    pub slip_nodes: Vec<u32>,
    pub slip_normals: Vec<[f64; 3]>,
    /// Index into `slip_nodes` for slip nodes, `u32::MAX` otherwise.
    pub slip_index: Vec<u32>,
    /// True if some boundary part is a do-nothing outflow.
    pub has_outflow: bool,
}

impl Constraints {
    /// Classifies the nodes of level `l`. `gradient_of_one` is `B^T 1`,
    /// component-major; slip normals are `-B^T 1` normalized, which points
    /// outward.
    pub fn new(h: &GridHierarchy, l: usize, gradient_of_one: &[f64]) -> Result<Self> {
        let lev = h.level(l);
        let n = lev.num_nodes();
        let mut kind = vec![FREE; n];
        let mut dirichlet_nodes = Vec::new();
        let mut slip_nodes = Vec::new();
        let mut slip_normals = Vec::new();
        let mut slip_index = vec![u32::MAX; n];
        for i in 0..n {
            match h.node_tag(l, i) {
                Some(BoundaryTag::Dirichlet) => {
                    kind[i] = DIRICHLET;
                    dirichlet_nodes.push(i as u32);
                }
                Some(BoundaryTag::FreeSlip) => {
                    let v = [
                        -gradient_of_one[i],
                        -gradient_of_one[n + i],
                        -gradient_of_one[2 * n + i],
                    ];
                    let len = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                    if !(len > 0.0) {
                        return Err(Error::DegenerateNormal { node: i });
                    }
                    kind[i] = SLIP;
                    slip_index[i] = slip_nodes.len() as u32;
                    slip_nodes.push(i as u32);
                    slip_normals.push([v[0] / len, v[1] / len, v[2] / len]);
                }
                _ => {}
            }
        }
        let has_outflow = h
            .primitive_tags
            .iter()
            .any(|t| *t == Some(BoundaryTag::Outflow));
        Ok(Constraints {
            kind,
            dirichlet_nodes,
            slip_nodes,
            slip_normals,
            slip_index,
            has_outflow,
        })
    }

    pub fn nodes(&self) -> usize {
        self.kind.len()
    }

    pub fn normal(&self, i: usize) -> Option<[f64; 3]> {
        match self.slip_index[i] {
            u32::MAX => None,
            k => Some(self.slip_normals[k as usize]),
        }
    }

    /// Zeroes dirichlet entries and removes the normal component at slip
    /// nodes of a component-major velocity vector.
    pub fn project(&self, u: &mut [f64]) {
        let n = self.nodes();
        for &i in &self.dirichlet_nodes {
            let i = i as usize;
            u[i] = 0.0;
            u[n + i] = 0.0;
            u[2 * n + i] = 0.0;
        }
        for (&i, nrm) in self.slip_nodes.iter().zip(&self.slip_normals) {
            let i = i as usize;
            let un = u[i] * nrm[0] + u[n + i] * nrm[1] + u[2 * n + i] * nrm[2];
            u[i] -= un * nrm[0];
            u[n + i] -= un * nrm[1];
            u[2 * n + i] -= un * nrm[2];
        }
    }

    /// Pointwise tangential projection of one velocity value.
    pub fn project_node(&self, i: usize, v: &mut [f64; 3]) {
        match self.kind[i] {
            DIRICHLET => *v = [0.0; 3],
            SLIP => {
                let nrm = self.slip_normals[self.slip_index[i] as usize];
                let un = v[0] * nrm[0] + v[1] * nrm[1] + v[2] * nrm[2];
                for d in 0..3 {
                    v[d] -= un * nrm[d];
                }
            }
            _ => {}
        }
    }

    /// Zeroes only dirichlet entries.
    pub fn mask_dirichlet(&self, u: &mut [f64]) {
        let n = self.nodes();
        for &i in &self.dirichlet_nodes {
            let i = i as usize;
            u[i] = 0.0;
            u[n + i] = 0.0;
            u[2 * n + i] = 0.0;
        }
    }

    /// Number of velocity degrees of freedom left free by the constraints.
    pub fn free_velocity_dofs(&self) -> usize {
        3 * (self.nodes() - self.dirichlet_nodes.len() - self.slip_nodes.len())
            + 2 * self.slip_nodes.len()
    }
}

/// Removes the component of `u` along the unit vector `n`.
pub fn project_tangential(u: [f64; 3], n: [f64; 3]) -> [f64; 3] {
    let un = u[0] * n[0] + u[1] * n[1] + u[2] * n[2];
    [u[0] - un * n[0], u[1] - un * n[1], u[2] - un * n[2]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tangential_projection() {
        let n = [0.0, 0.6, 0.8];
        let par = [0.0, 1.2, 1.6];
        assert!(project_tangential(par, n).iter().all(|v| v.abs() < 1e-15));
        let orth = [1.0, 0.8, -0.6];
        let p = project_tangential(orth, n);
        for d in 0..3 {
            assert!((p[d] - orth[d]).abs() < 1e-15);
        }
        let u = [0.3, -1.0, 2.0];
        let once = project_tangential(u, n);
        let twice = project_tangential(once, n);
        for d in 0..3 {
            assert!((once[d] - twice[d]).abs() < 1e-15);
        }
    }
}
