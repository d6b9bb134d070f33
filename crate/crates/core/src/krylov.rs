//! Conjugate gradients and preconditioned MINRES on flat vectors.
//!
//! Operators and preconditioners are closures `f(x, y)` writing `y = Op x`,
//! so callers decide what is counted.

use crate::error::{Error, Result};
use crate::fields::{axpy_slices, dot_slices};

/// When an iteration stops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Stop {
    /// Residual norm relative to the initial one.
    Relative { tol: f64, max_iters: usize },
    /// Exactly this many iterations, unless the residual vanishes first.
    Fixed(usize),
}

impl Stop {
    fn max_iters(self) -> usize {
        match self {
            Stop::Relative { max_iters, .. } => max_iters,
            Stop::Fixed(n) => n,
        }
    }

    fn reached(self, ratio: f64) -> bool {
        match self {
            Stop::Relative { tol, .. } => ratio <= tol,
            Stop::Fixed(_) => false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovInfo {
    pub iterations: usize,
    /// Final residual norm over the initial one, in the norm the method
    /// monitors.
    pub relative_residual: f64,
    pub converged: bool,
}

impl KrylovInfo {
    fn trivial() -> Self {
        KrylovInfo {
            iterations: 0,
            relative_residual: 0.0,
            converged: true,
        }
    }
}

/// `b - A x`, skipping the product for a zero start.
fn initial_residual<A: FnMut(&[f64], &mut [f64])>(apply: &mut A, b: &[f64], x: &[f64]) -> Vec<f64> {
    if x.iter().all(|&v| v == 0.0) {
        return b.to_vec();
    }
    let mut r = vec![0.0; b.len()];
    apply(x, &mut r);
    for (ri, bi) in r.iter_mut().zip(b) {
        *ri = bi - *ri;
    }
    r
}

/// Preconditioned CG for an SPD operator, monitoring the Euclidean residual.
pub fn pcg<A, P>(mut apply: A, mut precond: P, b: &[f64], x: &mut [f64], stop: Stop) -> KrylovInfo
where
    A: FnMut(&[f64], &mut [f64]),
    P: FnMut(&[f64], &mut [f64]),
{
    let n = b.len();
    let mut r = initial_residual(&mut apply, b, x);
    let r0 = dot_slices(&r, &r).sqrt();
    if r0 == 0.0 {
        return KrylovInfo::trivial();
    }
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut d = z.clone();
    let mut rz = dot_slices(&r, &z);
    let mut q = vec![0.0; n];
    let mut ratio = 1.0;
    for it in 1..=stop.max_iters() {
        apply(&d, &mut q);
        let dq = dot_slices(&d, &q);
        if !(dq > 0.0) {
            return KrylovInfo {
                iterations: it - 1,
                relative_residual: ratio,
                converged: false,
            };
        }
        let alpha = rz / dq;
        axpy_slices(alpha, &d, x);
        axpy_slices(-alpha, &q, &mut r);
        ratio = dot_slices(&r, &r).sqrt() / r0;
        if ratio == 0.0 || stop.reached(ratio) {
            return KrylovInfo {
                iterations: it,
                relative_residual: ratio,
                converged: true,
            };
        }
        if it == stop.max_iters() {
            break;
        }
        precond(&r, &mut z);
        let rz_new = dot_slices(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (di, zi) in d.iter_mut().zip(&z) {
            *di = zi + beta * *di;
        }
    }
    let converged = matches!(stop, Stop::Fixed(_));
    KrylovInfo {
        iterations: stop.max_iters(),
        relative_residual: ratio,
        converged,
    }
}

/// Unpreconditioned CG.
pub fn cg<A>(apply: A, b: &[f64], x: &mut [f64], stop: Stop) -> KrylovInfo
where
    A: FnMut(&[f64], &mut [f64]),
{
    pcg(apply, |r, z| z.copy_from_slice(r), b, x, stop)
}

/// What MINRES reports to the stopping callback after each iteration.
#[derive(Clone, Copy, Debug)]
pub struct MinresState {
    pub iteration: usize,
    /// Preconditioned residual norm relative to the initial one.
    pub estimate: f64,
}

/// Preconditioned MINRES for a symmetric operator and an SPD
/// preconditioner. `stop(state, x)` returns `Some(ratio)` to terminate with
/// that reported residual ratio; iteration ends unconverged after
/// `max_iters`.
pub fn pminres<A, P, S>(
    mut apply: A,
    mut precond: P,
    b: &[f64],
    x: &mut [f64],
    max_iters: usize,
    mut stop: S,
) -> Result<KrylovInfo>
where
    A: FnMut(&[f64], &mut [f64]),
    P: FnMut(&[f64], &mut [f64]),
    S: FnMut(MinresState, &[f64]) -> Option<f64>,
{
    let n = b.len();
    let mut v = initial_residual(&mut apply, b, x);
    let mut z = vec![0.0; n];
    precond(&v, &mut z);
    let zv = dot_slices(&z, &v);
    if zv < 0.0 {
        return Err(Error::IndefinitePreconditioner { iteration: 0 });
    }
    let mut gamma = zv.sqrt();
    if gamma == 0.0 {
        return Ok(KrylovInfo::trivial());
    }
    let eta0 = gamma;
    let mut eta = gamma;
    let mut v_old = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut w_old = vec![0.0; n];
    let mut az = vec![0.0; n];
    let (mut gamma_old, mut c_old, mut c, mut s_old, mut s) = (1.0, 1.0, 1.0, 0.0, 0.0);
    let mut estimate = 1.0;

    for it in 1..=max_iters {
        for zi in z.iter_mut() {
            *zi /= gamma;
        }
        apply(&z, &mut az);
        let delta = dot_slices(&az, &z);
        // v_new = A z - delta/gamma v - gamma/gamma_old v_old, stored in v_old
        for k in 0..n {
            v_old[k] = az[k] - delta / gamma * v[k] - gamma / gamma_old * v_old[k];
        }
        std::mem::swap(&mut v, &mut v_old);
        let mut z_new = vec![0.0; n];
        precond(&v, &mut z_new);
        let zv = dot_slices(&z_new, &v);
        if zv < 0.0 {
            return Err(Error::IndefinitePreconditioner { iteration: it });
        }
        let gamma_new = zv.sqrt();

        let a0 = c * delta - c_old * s * gamma;
        let a1 = (a0 * a0 + gamma_new * gamma_new).sqrt();
        let a2 = s * delta + c_old * c * gamma;
        let a3 = s_old * gamma;
        let c_new = a0 / a1;
        let s_new = gamma_new / a1;
        // w_new = (z - a3 w_old - a2 w) / a1, stored in w_old
        for k in 0..n {
            w_old[k] = (z[k] - a3 * w_old[k] - a2 * w[k]) / a1;
        }
        std::mem::swap(&mut w, &mut w_old);
        axpy_slices(c_new * eta, &w, x);
        eta = -s_new * eta;
        estimate = eta.abs() / eta0;

        if let Some(ratio) = stop(
            MinresState {
                iteration: it,
                estimate,
            },
            x,
        ) {
            return Ok(KrylovInfo {
                iterations: it,
                relative_residual: ratio,
                converged: true,
            });
        }
        if gamma_new == 0.0 {
            return Ok(KrylovInfo {
                iterations: it,
                relative_residual: 0.0,
                converged: true,
            });
        }
        gamma_old = gamma;
        gamma = gamma_new;
        z = z_new;
        c_old = c;
        c = c_new;
        s_old = s;
        s = s_new;
    }
    Ok(KrylovInfo {
        iterations: max_iters,
        relative_residual: estimate,
        converged: false,
    })
}

/// MINRES stopping on its own residual estimate.
pub fn pminres_relative<A, P>(
    apply: A,
    precond: P,
    b: &[f64],
    x: &mut [f64],
    stop: Stop,
) -> Result<KrylovInfo>
where
    A: FnMut(&[f64], &mut [f64]),
    P: FnMut(&[f64], &mut [f64]),
{
    let info = pminres(apply, precond, b, x, stop.max_iters(), |st, _| {
        stop.reached(st.estimate).then_some(st.estimate)
    })?;
    Ok(match stop {
        Stop::Fixed(_) => KrylovInfo {
            converged: true,
            ..info
        },
        Stop::Relative { .. } => info,
    })
}
