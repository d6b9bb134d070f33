//! Nodal velocity and pressure storage and the vector algebra on it.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{GridHierarchy, GridLevel, Point};

/// Velocity (three components per node) and pressure (one per node) of one
/// level, stored contiguously as `[u_x | u_y | u_z | p]`.
#[derive(Clone, Debug, PartialEq)]
pub struct StokesVector {
    level: usize,
    nodes: usize,
    data: Vec<f64>,
}

impl StokesVector {
    pub fn zeros(level: usize, nodes: usize) -> Self {
        StokesVector {
            level,
            nodes,
            data: vec![0.0; 4 * nodes],
        }
    }

    pub fn zeros_like(&self) -> Self {
        StokesVector::zeros(self.level, self.nodes)
    }

    pub fn from_parts(level: usize, u: &[f64], p: &[f64]) -> Result<Self> {
        let nodes = p.len();
        if u.len() != 3 * nodes {
            return Err(Error::LengthMismatch {
                expected: 3 * nodes,
                found: u.len(),
            });
        }
        let mut data = Vec::with_capacity(4 * nodes);
        data.extend_from_slice(u);
        data.extend_from_slice(p);
        Ok(StokesVector { level, nodes, data })
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// All velocity entries, component-major.
    pub fn u(&self) -> &[f64] {
        &self.data[..3 * self.nodes]
    }

    pub fn u_mut(&mut self) -> &mut [f64] {
        &mut self.data[..3 * self.nodes]
    }

    pub fn p(&self) -> &[f64] {
        &self.data[3 * self.nodes..]
    }

    pub fn p_mut(&mut self) -> &mut [f64] {
        &mut self.data[3 * self.nodes..]
    }

    pub fn split_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        self.data.split_at_mut(3 * self.nodes)
    }

    /// Velocity at node `i`.
    pub fn velocity(&self, i: usize) -> [f64; 3] {
        let n = self.nodes;
        [self.data[i], self.data[n + i], self.data[2 * n + i]]
    }

    pub fn set_velocity(&mut self, i: usize, v: [f64; 3]) {
        let n = self.nodes;
        self.data[i] = v[0];
        self.data[n + i] = v[1];
        self.data[2 * n + i] = v[2];
    }

    fn check(&self, other: &StokesVector) -> Result<()> {
        if self.level != other.level {
            return Err(Error::LevelMismatch {
                expected: self.level,
                found: other.level,
            });
        }
        if self.nodes != other.nodes {
            return Err(Error::LengthMismatch {
                expected: self.nodes,
                found: other.nodes,
            });
        }
        Ok(())
    }

    pub fn fill(&mut self, v: f64) {
        self.data.fill(v);
    }

    pub fn scale(&mut self, a: f64) {
        scal(a, &mut self.data);
    }

    pub fn copy_from(&mut self, x: &StokesVector) -> Result<()> {
        self.check(x)?;
        self.data.copy_from_slice(&x.data);
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        dot_slices(&self.data, &self.data).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

/// `y <- y + alpha x`.
pub fn axpy(alpha: f64, x: &StokesVector, y: &mut StokesVector) -> Result<()> {
    y.check(x)?;
    axpy_slices(alpha, &x.data, &mut y.data);
    Ok(())
}

pub fn dot(x: &StokesVector, y: &StokesVector) -> Result<f64> {
    x.check(y)?;
    Ok(dot_slices(&x.data, &y.data))
}

/// Mesh-dependent norm `(|u|^2 + h^2 |p|^2)^(1/2)`.
pub fn h_norm(x: &StokesVector, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "mesh size must be positive, got {h}"
        )));
    }
    let u = dot_slices(x.u(), x.u());
    let p = dot_slices(x.p(), x.p());
    Ok((u + h * h * p).sqrt())
}

/// Removes the weighted mean: afterwards `sum_i w_i p_i = 0`.
pub fn mean_zero_project(p: &mut [f64], weights: &[f64]) -> Result<()> {
    if p.len() != weights.len() {
        return Err(Error::LengthMismatch {
            expected: p.len(),
            found: weights.len(),
        });
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument(
            "total weight must be positive".into(),
        ));
    }
    let mean = dot_slices(p, weights) / total;
    for v in p.iter_mut() {
        *v -= mean;
    }
    Ok(())
}

/// Removes the arithmetic mean.
pub fn mean_zero_project_uniform(p: &mut [f64]) {
    if p.is_empty() {
        return;
    }
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    for v in p.iter_mut() {
        *v -= mean;
    }
}

/// Velocity uniform in `[0, 1]`, pressure uniform in `[0, 1/h_min]`.
pub fn random_initial(hierarchy: &GridHierarchy, level: usize, seed: u64) -> StokesVector {
    let lev = hierarchy.level(level);
    let n = lev.num_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = StokesVector::zeros(level, n);
    let scale = 1.0 / lev.h_min;
    let (u, p) = x.split_mut();
    for v in u.iter_mut() {
        *v = rng.random::<f64>();
    }
    for v in p.iter_mut() {
        *v = scale * rng.random::<f64>();
    }
    x
}

/// Values of `f` at the nodes, component-major.
pub fn interpolate_velocity<F: Fn(Point) -> [f64; 3]>(f: F, level: &GridLevel) -> Vec<f64> {
    let n = level.num_nodes();
    let mut out = vec![0.0; 3 * n];
    for (i, &x) in level.coords.iter().enumerate() {
        let v = f(x);
        out[i] = v[0];
        out[n + i] = v[1];
        out[2 * n + i] = v[2];
    }
    out
}

pub fn interpolate_scalar<F: Fn(Point) -> f64>(f: F, level: &GridLevel) -> Vec<f64> {
    level.coords.iter().map(|&x| f(x)).collect()
}

/// Nodal interpolant of a velocity and pressure pair.
pub fn nodal_interpolate<U, P>(u: U, p: P, level: &GridLevel) -> StokesVector
where
    U: Fn(Point) -> [f64; 3],
    P: Fn(Point) -> f64,
{
    let uu = interpolate_velocity(u, level);
    let pp = interpolate_scalar(p, level);
    StokesVector::from_parts(level.index, &uu, &pp).expect("lengths agree by construction")
}

const MAGIC: &[u8; 4] = b"SKVF";

/// Writes `[magic | level: u32 | count: u64 | values: f64...]`, little endian.
pub fn write_field<W: Write>(w: &mut W, level: usize, values: &[f64]) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(level as u32).to_le_bytes())?;
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_field<R: Read>(r: &mut R) -> Result<(usize, Vec<f64>)> {
    let mut head = [0u8; 16];
    r.read_exact(&mut head)?;
    if &head[..4] != MAGIC {
        return Err(Error::InvalidArgument("not a field dump".into()));
    }
    let level = u32::from_le_bytes(head[4..8].try_into().expect("4 bytes")) as usize;
    let count = u64::from_le_bytes(head[8..16].try_into().expect("8 bytes")) as usize;
    let mut bytes = vec![0u8; 8 * count];
    r.read_exact(&mut bytes)?;
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((level, values))
}

pub fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn axpy_slices(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scal(alpha: f64, x: &mut [f64]) {
    for v in x.iter_mut() {
        *v *= alpha;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{refine_hierarchy, CoarseMesh};
    use proptest::prelude::*;

    fn unit(level: usize, nodes: usize, k: usize) -> StokesVector {
        let mut x = StokesVector::zeros(level, nodes);
        x.as_mut_slice()[k] = 1.0;
        x
    }

    #[test]
    fn axpy_basics() {
        let x = unit(0, 2, 0);
        let mut y = unit(0, 2, 1);
        let y0 = y.clone();
        axpy(0.0, &x, &mut y).unwrap();
        assert_eq!(y, y0);
        let mut z = StokesVector::zeros(0, 2);
        axpy(1.0, &x, &mut z).unwrap();
        assert_eq!(z, x);
        axpy(2.0, &x, &mut y).unwrap();
        assert_eq!(&y.as_slice()[..2], &[2.0, 1.0]);
        let other = StokesVector::zeros(1, 2);
        assert!(matches!(
            axpy(1.0, &other, &mut y),
            Err(Error::LevelMismatch { .. })
        ));
    }

    #[test]
    fn dot_basics() {
        let e = unit(0, 3, 4);
        assert_eq!(dot(&e, &e).unwrap(), 1.0);
        assert_eq!(dot(&e, &StokesVector::zeros(0, 3)).unwrap(), 0.0);
    }

    #[test]
    fn h_norm_cases() {
        let m = 7;
        let mut x = StokesVector::zeros(0, m);
        x.p_mut().fill(1.0);
        let h = 0.25;
        assert!((h_norm(&x, h).unwrap() - h * (m as f64).sqrt()).abs() < 1e-15);
        let mut y = StokesVector::zeros(0, m);
        y.u_mut()[3] = 3.0;
        y.u_mut()[9] = 4.0;
        assert_eq!(h_norm(&y, h).unwrap(), 5.0);
        assert!(h_norm(&y, 0.0).is_err());
        // scaling identity
        x.u_mut()[0] = 2.0;
        let p2 = dot_slices(x.p(), x.p());
        let d = h_norm(&x, 2.0 * h).unwrap().powi(2) - h_norm(&x, h).unwrap().powi(2);
        assert!((d - 3.0 * h * h * p2).abs() < 1e-14);
    }

    #[test]
    fn mean_zero_cases() {
        let w = vec![0.5, 1.0, 2.0, 0.5];
        let mut c = vec![3.0; 4];
        mean_zero_project(&mut c, &w).unwrap();
        assert!(c.iter().all(|v| v.abs() < 1e-15));
        let mut e = vec![1.0, 0.0, 0.0, 0.0];
        mean_zero_project_uniform(&mut e);
        assert_eq!(e, vec![0.75, -0.25, -0.25, -0.25]);
        assert!(mean_zero_project(&mut e, &[0.0; 4]).is_err());
    }

    #[test]
    fn random_initial_ranges_and_determinism() {
        let h = refine_hierarchy(&CoarseMesh::unit_cube(), 1).unwrap();
        let a = random_initial(&h, 1, 42);
        let b = random_initial(&h, 1, 42);
        let c = random_initial(&h, 1, 43);
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert!(a.u().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let hi = 1.0 / h.level(1).h_min;
        assert!(a.p().iter().all(|&v| (0.0..=hi).contains(&v)));
        assert!(a.p().iter().any(|&v| v > 1.0));
    }

    #[test]
    fn interpolation() {
        let h = refine_hierarchy(&CoarseMesh::unit_cube(), 0).unwrap();
        let lev = h.level(0);
        assert!(interpolate_scalar(|_| 1.0, lev).iter().all(|&v| v == 1.0));
        let lin = interpolate_scalar(|x| 1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2], lev);
        for (i, x) in lev.coords.iter().enumerate() {
            assert!((lin[i] - (1.0 + 2.0 * x[0] - x[1] + 0.5 * x[2])).abs() < 1e-15);
        }
        let u = |x: Point| {
            [
                -4.0 * (4.0 * x[2]).cos(),
                8.0 * (8.0 * x[0]).cos(),
                -2.0 * (2.0 * x[1]).cos(),
            ]
        };
        let v = interpolate_velocity(u, lev);
        let n = lev.num_nodes();
        let origin = lev
            .coords
            .iter()
            .position(|x| x.iter().all(|&c| c == 0.0))
            .unwrap();
        assert_eq!(
            [v[origin], v[n + origin], v[2 * n + origin]],
            [-4.0, 8.0, -2.0]
        );
    }

    #[test]
    fn dump_round_trip() {
        let values: Vec<f64> = (0..17).map(|i| i as f64 * 0.3 - 1.0).collect();
        let mut buf = Vec::new();
        write_field(&mut buf, 3, &values).unwrap();
        assert_eq!(buf.len(), 16 + 8 * values.len());
        let (l, back) = read_field(&mut buf.as_slice()).unwrap();
        assert_eq!(l, 3);
        assert_eq!(back, values);
    }

    fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, 4 * n)
    }

    proptest! {
        #[test]
        fn dot_is_symmetric_and_bilinear(a in vec_strategy(5), b in vec_strategy(5), c in vec_strategy(5), s in -3.0f64..3.0) {
            let mk = |v: &Vec<f64>| StokesVector::from_parts(0, &v[..15], &v[15..]).unwrap();
            let (x, y, z) = (mk(&a), mk(&b), mk(&c));
            prop_assert!((dot(&x, &y).unwrap() - dot(&y, &x).unwrap()).abs() < 1e-12);
            let mut w = y.clone();
            axpy(s, &z, &mut w).unwrap();
            let lhs = dot(&x, &w).unwrap();
            let rhs = dot(&x, &y).unwrap() + s * dot(&x, &z).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + lhs.abs()));
            let n2 = x.norm().powi(2);
            prop_assert!((dot(&x, &x).unwrap() - n2).abs() <= 1e-14 * n2.max(1e-300));
        }

        #[test]
        fn h_norm_is_definite(a in vec_strategy(4), h in 0.01f64..2.0) {
            let x = StokesVector::from_parts(0, &a[..12], &a[12..]).unwrap();
            let v = h_norm(&x, h).unwrap();
            prop_assert!(v >= 0.0);
            prop_assert_eq!(v == 0.0, a.iter().all(|&t| t == 0.0));
        }

        #[test]
        fn mean_zero_is_idempotent(p in proptest::collection::vec(-5.0f64..5.0, 6), w in proptest::collection::vec(0.1f64..2.0, 6)) {
            let mut q = p.clone();
            mean_zero_project(&mut q, &w).unwrap();
            let norm = dot_slices(&p, &p).sqrt();
            prop_assert!(dot_slices(&q, &w).abs() <= 1e-12 * norm.max(1.0));
            let mut r = q.clone();
            mean_zero_project(&mut r, &w).unwrap();
            for (a, b) in q.iter().zip(&r) {
                prop_assert!((a - b).abs() < 1e-13);
            }
        }
    }
}
