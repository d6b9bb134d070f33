//! Element matrices of the P1 tetrahedron.

use crate::error::{Error, Result};
use crate::mesh::{signed_volume, Point};

/// Stabilization weight of the pressure-Laplacian term.
pub const DELTA: f64 = 1.0 / 12.0;

/// Weights of the degree-2 four-point rule in barycentric coordinates.
const QUAD_A: f64 = 0.585_410_196_624_968_5;
const QUAD_B: f64 = 0.138_196_601_125_010_5;

#[derive(Clone, Copy, Debug)]
pub struct ElementGeometry {
    pub points: [Point; 4],
    pub volume: f64,
    /// Gradients of the four barycentric hat functions.
    pub grads: [[f64; 3]; 4],
}

impl ElementGeometry {
    pub fn new(points: [Point; 4]) -> Result<Self> {
        let [p0, p1, p2, p3] = points;
        let vol = signed_volume(p0, p1, p2, p3);
        let scale =
            (0..3).map(|d| (p1[d] - p0[d]).abs() + (p2[d] - p0[d]).abs() + (p3[d] - p0[d]).abs());
        let scale = scale.fold(0.0f64, f64::max);
        if vol.abs() <= 1e-14 * scale.powi(3) {
            return Err(Error::DegenerateElement { tet: usize::MAX });
        }
        let e = [sub(p1, p0), sub(p2, p0), sub(p3, p0)];
        // rows of J^{-T}: gradients of lambda_1..3 are the dual basis of e
        let det = 6.0 * vol;
        let g1 = scale3(cross(e[1], e[2]), 1.0 / det);
        let g2 = scale3(cross(e[2], e[0]), 1.0 / det);
        let g3 = scale3(cross(e[0], e[1]), 1.0 / det);
        let g0 = [
            -(g1[0] + g2[0] + g3[0]),
            -(g1[1] + g2[1] + g3[1]),
            -(g1[2] + g2[2] + g3[2]),
        ];
        Ok(ElementGeometry {
            points,
            volume: vol.abs(),
            grads: [g0, g1, g2, g3],
        })
    }

    /// `h_T = |T|^(1/3)`.
    pub fn size(&self) -> f64 {
        self.volume.cbrt()
    }

    /// Quadrature points and the common weight of the four-point rule.
    pub fn quadrature(&self) -> ([Point; 4], f64) {
        let mut q = [[0.0; 3]; 4];
        for (k, qk) in q.iter_mut().enumerate() {
            for (a, p) in self.points.iter().enumerate() {
                let w = if a == k { QUAD_A } else { QUAD_B };
                for d in 0..3 {
                    qk[d] += w * p[d];
                }
            }
        }
        (q, self.volume / 4.0)
    }

    /// Value of hat function `a` at quadrature point `k`.
    pub fn quad_shape(a: usize, k: usize) -> f64 {
        if a == k {
            QUAD_A
        } else {
            QUAD_B
        }
    }
}

fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn scale3(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub type Local<const R: usize, const C: usize> = [[[[f64; C]; R]; 4]; 4];

/// `nu <grad phi_j, grad phi_i>`.
pub fn laplace(g: &ElementGeometry, nu: f64) -> Local<1, 1> {
    let mut k = [[[[0.0]]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            k[i][j][0][0] = nu * g.volume * dot(g.grads[i], g.grads[j]);
        }
    }
    k
}

/// `2 nu <D(u), D(v)>` with `D(u) = (grad u + grad u^T) / 2`; row index
/// `(i, c)`, column `(j, d)`.
pub fn epsilon(g: &ElementGeometry, nu: f64) -> Local<3, 3> {
    let mut k = [[[[0.0; 3]; 3]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let gij = dot(g.grads[i], g.grads[j]);
            for c in 0..3 {
                for d in 0..3 {
                    let iso = if c == d { gij } else { 0.0 };
                    k[i][j][c][d] = nu * g.volume * (iso + g.grads[j][c] * g.grads[i][d]);
                }
            }
        }
    }
    k
}

/// `-<div phi_(j,d), psi_i>`: pressure row `i`, velocity column `(j, d)`.
pub fn divergence(g: &ElementGeometry) -> Local<1, 3> {
    let mut k = [[[[0.0; 3]; 1]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for d in 0..3 {
                k[i][j][0][d] = -g.grads[j][d] * g.volume / 4.0;
            }
        }
    }
    k
}

/// Transpose of [`divergence`]: velocity row `(i, c)`, pressure column `j`.
pub fn gradient(g: &ElementGeometry) -> Local<3, 1> {
    let mut k = [[[[0.0; 1]; 3]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for c in 0..3 {
                k[i][j][c][0] = -g.grads[i][c] * g.volume / 4.0;
            }
        }
    }
    k
}

/// `delta h_T^2 <grad p, grad q>`.
pub fn stabilization(g: &ElementGeometry) -> Local<1, 1> {
    let h = g.size();
    let mut k = laplace(g, 1.0);
    for row in k.iter_mut() {
        for v in row.iter_mut() {
            v[0][0] *= DELTA * h * h;
        }
    }
    k
}
