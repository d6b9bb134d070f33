//! Explicit element-by-element assembly for small levels and a Matrix
//! Market writer, used for cross-checks of the matrix-free operators.

use std::collections::BTreeMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::mesh::GridHierarchy;

use super::local::{self, ElementGeometry};
use super::OperatorTag;

/// Largest level accepted by [`assemble_sparse`].
pub const MAX_SPARSE_LEVEL: usize = 1;

/// Coordinate-format matrix with sorted, merged entries. Velocity indices
/// are component-major (`d * n + i`).
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseMatrix {
    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.rows];
        for &(i, j, v) in &self.entries {
            y[i] += v * x[j];
        }
        y
    }

    pub fn write_matrix_market<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "%%MatrixMarket matrix coordinate real general")?;
        writeln!(w, "{} {} {}", self.rows, self.cols, self.entries.len())?;
        for &(i, j, v) in &self.entries {
            writeln!(w, "{} {} {:e}", i + 1, j + 1, v)?;
        }
        Ok(())
    }
}

pub fn assemble_sparse(
    h: &GridHierarchy,
    l: usize,
    tag: OperatorTag,
    nu: f64,
) -> Result<SparseMatrix> {
    if l > MAX_SPARSE_LEVEL {
        return Err(Error::InvalidArgument(format!(
            "explicit assembly is limited to levels <= {MAX_SPARSE_LEVEL}, got {l}"
        )));
    }
    let lev = h.level(l);
    let n = lev.num_nodes();
    let (cin, cout) = tag.shape();
    let mut acc: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for t in 0..lev.volume_maps.len() {
        let mut result = Ok(());
        lev.for_each_element(t, h.diagonals[t], false, |ty, anchor, ids| {
            let geo = match ElementGeometry::new(h.element_points(l, t, ty, anchor)) {
                Ok(g) => g,
                Err(_) => {
                    result = Err(Error::DegenerateElement { tet: t });
                    return;
                }
            };
            let mut put = |i: usize, j: usize, v: f64| *acc.entry((i, j)).or_default() += v;
            match tag {
                OperatorTag::A1 => {
                    let k = local::laplace(&geo, nu);
                    for a in 0..4 {
                        for b in 0..4 {
                            for d in 0..3 {
                                put(d * n + ids[a], d * n + ids[b], k[a][b][0][0]);
                            }
                        }
                    }
                }
                OperatorTag::A2 => {
                    let k = local::epsilon(&geo, nu);
                    for a in 0..4 {
                        for b in 0..4 {
                            for c in 0..3 {
                                for d in 0..3 {
                                    put(c * n + ids[a], d * n + ids[b], k[a][b][c][d]);
                                }
                            }
                        }
                    }
                }
                OperatorTag::B => {
                    let k = local::divergence(&geo);
                    for a in 0..4 {
                        for b in 0..4 {
                            for d in 0..3 {
                                put(ids[a], d * n + ids[b], k[a][b][0][d]);
                            }
                        }
                    }
                }
                OperatorTag::Bt => {
                    let k = local::gradient(&geo);
                    for a in 0..4 {
                        for b in 0..4 {
                            for c in 0..3 {
                                put(c * n + ids[a], ids[b], k[a][b][c][0]);
                            }
                        }
                    }
                }
                OperatorTag::C => {
                    let k = local::stabilization(&geo);
                    for a in 0..4 {
                        for b in 0..4 {
                            put(ids[a], ids[b], k[a][b][0][0]);
                        }
                    }
                }
                OperatorTag::M => {
                    for &i in &ids {
                        put(i, i, geo.volume / 4.0);
                    }
                }
            }
        });
        result?;
    }
    let entries = acc.into_iter().map(|((i, j), v)| (i, j, v)).collect();
    Ok(SparseMatrix {
        rows: cout * n,
        cols: cin * n,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{refine_hierarchy, CoarseMesh};

    #[test]
    fn matrix_market_header() {
        let h = refine_hierarchy(&CoarseMesh::reference_tet(), 0).unwrap();
        let m = assemble_sparse(&h, 0, OperatorTag::M, 1.0).unwrap();
        assert_eq!(m.entries.len(), 35);
        let mut out = Vec::new();
        m.write_matrix_market(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("%%MatrixMarket"));
        assert_eq!(lines.next().unwrap(), "35 35 35");
    }

    #[test]
    fn level_cap() {
        let h = refine_hierarchy(&CoarseMesh::reference_tet(), 2).unwrap();
        assert!(assemble_sparse(&h, 2, OperatorTag::C, 1.0).is_err());
    }
}
