//! Test problems on the unit cube.

use crate::fields::{nodal_interpolate, StokesVector};
use crate::mesh::{GridLevel, Point};
use crate::operators::{assemble_rhs, StokesOperators, StokesProblem};

/// Smooth divergence-free flow with trigonometric pressure on `(0,1)^3`:
/// `u = (-4 cos 4z, 8 cos 8x, -2 cos 2y)`,
/// `p = sin 4x sin 8y sin 2z` minus its mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ManufacturedSolution {
    pub nu: f64,
}

impl ManufacturedSolution {
    pub fn new(nu: f64) -> Self {
        ManufacturedSolution { nu }
    }

    pub fn velocity(&self, x: Point) -> [f64; 3] {
        [
            -4.0 * (4.0 * x[2]).cos(),
            8.0 * (8.0 * x[0]).cos(),
            -2.0 * (2.0 * x[1]).cos(),
        ]
    }

    /// Mean of the unshifted pressure over the unit cube.
    pub fn pressure_mean(&self) -> f64 {
        let m = |k: f64| (1.0 - k.cos()) / k;
        m(4.0) * m(8.0) * m(2.0)
    }

    pub fn pressure(&self, x: Point) -> f64 {
        (4.0 * x[0]).sin() * (8.0 * x[1]).sin() * (2.0 * x[2]).sin() - self.pressure_mean()
    }

    fn pressure_gradient(&self, x: Point) -> [f64; 3] {
        let (s0, c0) = (4.0 * x[0]).sin_cos();
        let (s1, c1) = (8.0 * x[1]).sin_cos();
        let (s2, c2) = (2.0 * x[2]).sin_cos();
        [4.0 * c0 * s1 * s2, 8.0 * s0 * c1 * s2, 2.0 * s0 * s1 * c2]
    }

    /// `-nu lap u + grad p`. The velocity is divergence free, so the
    /// symmetric-gradient form has the same force.
    pub fn force(&self, x: Point) -> [f64; 3] {
        let g = self.pressure_gradient(x);
        let nu = self.nu;
        [
            nu * -64.0 * (4.0 * x[2]).cos() + g[0],
            nu * 512.0 * (8.0 * x[0]).cos() + g[1],
            nu * -8.0 * (2.0 * x[1]).cos() + g[2],
        ]
    }

    pub fn interpolant(&self, level: &GridLevel) -> StokesVector {
        nodal_interpolate(|x| self.velocity(x), |x| self.pressure(x), level)
    }

    /// Discrete problem on level `l` with the exact velocity as dirichlet data.
    pub fn problem(&self, ops: &StokesOperators, l: usize) -> StokesProblem {
        assemble_rhs(ops, l, |x| self.force(x), |x| self.velocity(x))
    }
}

/// Zero force and zero boundary data.
pub fn homogeneous_problem(ops: &StokesOperators, l: usize) -> StokesProblem {
    assemble_rhs(ops, l, |_| [0.0; 3], |_| [0.0; 3])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_at_the_origin() {
        let m = ManufacturedSolution::new(1.0);
        assert_eq!(m.velocity([0.0; 3]), [-4.0, 8.0, -2.0]);
        assert!((m.pressure([0.0; 3]) + m.pressure_mean()).abs() < 1e-15);
    }

    #[test]
    fn pressure_mean_matches_quadrature() {
        let m = ManufacturedSolution::new(1.0);
        let k = 60;
        let h = 1.0 / k as f64;
        let mut s = 0.0;
        for i in 0..k {
            for j in 0..k {
                for l in 0..k {
                    let x = [
                        (i as f64 + 0.5) * h,
                        (j as f64 + 0.5) * h,
                        (l as f64 + 0.5) * h,
                    ];
                    s += m.pressure(x);
                }
            }
        }
        assert!((s * h * h * h).abs() < 1e-3);
    }

    #[test]
    fn force_is_the_strong_residual() {
        // finite-difference check of -nu lap u + grad p
        let m = ManufacturedSolution::new(0.7);
        let x = [0.3, 0.45, 0.8];
        let e = 1e-4;
        let mut lap = [0.0; 3];
        for d in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += e;
            xm[d] -= e;
            let (up, um, u0) = (m.velocity(xp), m.velocity(xm), m.velocity(x));
            for c in 0..3 {
                lap[c] += (up[c] - 2.0 * u0[c] + um[c]) / (e * e);
            }
        }
        let mut grad = [0.0; 3];
        for d in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[d] += e;
            xm[d] -= e;
            grad[d] = (m.pressure(xp) - m.pressure(xm)) / (2.0 * e);
        }
        let f = m.force(x);
        for c in 0..3 {
            assert!((f[c] - (-0.7 * lap[c] + grad[c])).abs() < 1e-3, "{c}");
        }
    }
}
