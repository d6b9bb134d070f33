//! Linear interpolation between consecutive levels and its transpose.
//!
//! Every fine node carries two coarse parents and takes their average;
//! nodes coinciding with a coarse node list it twice.

use crate::error::{Error, Result};
use crate::mesh::GridHierarchy;

fn check(
    h: &GridHierarchy,
    fine_level: usize,
    coarse: usize,
    fine: usize,
    comps: usize,
) -> Result<()> {
    if fine_level == 0 || fine_level >= h.levels.len() {
        return Err(Error::LevelMismatch {
            expected: 1,
            found: fine_level,
        });
    }
    let nc = h.level(fine_level - 1).num_nodes() * comps;
    let nf = h.level(fine_level).num_nodes() * comps;
    if coarse != nc {
        return Err(Error::LengthMismatch {
            expected: nc,
            found: coarse,
        });
    }
    if fine != nf {
        return Err(Error::LengthMismatch {
            expected: nf,
            found: fine,
        });
    }
    Ok(())
}

/// `fine = P coarse` for `comps` component-major components.
pub fn prolongate(
    h: &GridHierarchy,
    fine_level: usize,
    coarse: &[f64],
    fine: &mut [f64],
    comps: usize,
) -> Result<()> {
    check(h, fine_level, coarse.len(), fine.len(), comps)?;
    let parents = &h.level(fine_level).parents;
    let (nf, nc) = (parents.len(), coarse.len() / comps);
    for c in 0..comps {
        let src = &coarse[c * nc..(c + 1) * nc];
        for (v, pr) in fine[c * nf..(c + 1) * nf].iter_mut().zip(parents) {
            *v = 0.5 * (src[pr[0] as usize] + src[pr[1] as usize]);
        }
    }
    Ok(())
}

/// `coarse = P^T fine` for `comps` component-major components.
pub fn restrict(
    h: &GridHierarchy,
    fine_level: usize,
    fine: &[f64],
    coarse: &mut [f64],
    comps: usize,
) -> Result<()> {
    check(h, fine_level, coarse.len(), fine.len(), comps)?;
    let parents = &h.level(fine_level).parents;
    let (nf, nc) = (parents.len(), coarse.len() / comps);
    coarse.fill(0.0);
    for c in 0..comps {
        let dst = &mut coarse[c * nc..(c + 1) * nc];
        for (v, pr) in fine[c * nf..(c + 1) * nf].iter().zip(parents) {
            dst[pr[0] as usize] += 0.5 * v;
            dst[pr[1] as usize] += 0.5 * v;
        }
    }
    Ok(())
}

/// Restriction scaled so that constants map to constants; used to inject
/// fine data on coarse grids.
pub fn restrict_normalized(
    h: &GridHierarchy,
    fine_level: usize,
    fine: &[f64],
    coarse: &mut [f64],
    comps: usize,
) -> Result<()> {
    restrict(h, fine_level, fine, coarse, comps)?;
    let nc = coarse.len() / comps;
    let ones = vec![1.0; h.level(fine_level).num_nodes()];
    let mut w = vec![0.0; nc];
    restrict(h, fine_level, &ones, &mut w, 1)?;
    for c in 0..comps {
        for (v, wi) in coarse[c * nc..(c + 1) * nc].iter_mut().zip(&w) {
            *v /= wi;
        }
    }
    Ok(())
}
