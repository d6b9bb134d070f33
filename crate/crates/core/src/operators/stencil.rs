//! Matrix-free block operators.
//!
//! Rows of volume-interior nodes use one translation-invariant stencil per
//! macro volume, indexed by cube-layout offsets. Rows of nodes on macro
//! vertices, edges and faces couple across several macro volumes and are
//! stored explicitly.

use crate::error::Result;
use crate::mesh::lattice::CubeLayout;
use crate::mesh::{ElementType, GridHierarchy};

use super::local::{ElementGeometry, Local};

pub type Block<const R: usize, const C: usize> = [[f64; C]; R];

#[derive(Clone, Debug)]
pub struct VolumeStencil<const R: usize, const C: usize> {
    pub offsets: Vec<isize>,
    pub blocks: Vec<Block<R, C>>,
    /// Position of the zero offset.
    pub center: usize,
}

/// An `R x C` block operator on nodal fields of one level.
#[derive(Clone, Debug)]
pub struct BlockStencil<const R: usize, const C: usize> {
    pub level: usize,
    pub nodes: usize,
    pub volumes: Vec<VolumeStencil<R, C>>,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<Block<R, C>>,
    /// Position of the diagonal entry in each explicit row.
    pub diag_pos: Vec<usize>,
}

fn zero<const R: usize, const C: usize>() -> Block<R, C> {
    [[0.0; C]; R]
}

fn add_block<const R: usize, const C: usize>(acc: &mut Block<R, C>, b: &Block<R, C>) {
    for r in 0..R {
        for c in 0..C {
            acc[r][c] += b[r][c];
        }
    }
}

impl<const R: usize, const C: usize> BlockStencil<R, C> {
    /// Sums element matrices `local(geometry)` over all micro elements of
    /// level `l`.
    pub fn assemble<F>(h: &GridHierarchy, l: usize, local: F) -> Result<Self>
    where
        F: Fn(&ElementGeometry) -> Local<R, C>,
    {
        let lev = h.level(l);
        let layout = lev.layout();
        let n_lower = lev.num_lower();
        let mut rows: Vec<Vec<(u32, Block<R, C>)>> = vec![Vec::new(); n_lower];
        let mut volumes = Vec::with_capacity(lev.volume_maps.len());

        for t in 0..lev.volume_maps.len() {
            let diag = h.diagonals[t];
            let mut locals: Vec<(ElementType, Local<R, C>)> = Vec::with_capacity(6);
            let mut stencil = VolumeStencil {
                offsets: Vec::new(),
                blocks: Vec::new(),
                center: 0,
            };
            for ty in ElementType::ALL {
                if ty.max_anchor_sum(lev.intervals).is_none() {
                    continue;
                }
                let geo = ElementGeometry::new(h.element_points(l, t, ty, [0, 0, 0]))
                    .map_err(|_| crate::Error::DegenerateElement { tet: t })?;
                let k = local(&geo);
                let offs = ty.offsets(diag);
                for a in 0..4 {
                    for b in 0..4 {
                        let o = [
                            offs[b][0] - offs[a][0],
                            offs[b][1] - offs[a][1],
                            offs[b][2] - offs[a][2],
                        ];
                        push(&mut stencil, layout.offset(o), &k[a][b]);
                    }
                }
                locals.push((ty, k));
            }
            stencil.center = stencil
                .offsets
                .iter()
                .position(|&o| o == 0)
                .expect("diagonal entry");
            volumes.push(stencil);

            lev.for_each_element(t, diag, true, |ty, _, ids| {
                let k = &locals
                    .iter()
                    .find(|(u, _)| *u == ty)
                    .expect("local matrix")
                    .1;
                for a in 0..4 {
                    if ids[a] < n_lower {
                        for b in 0..4 {
                            rows[ids[a]].push((ids[b] as u32, k[a][b]));
                        }
                    }
                }
            });
        }

        let mut row_ptr = Vec::with_capacity(n_lower + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag_pos = Vec::with_capacity(n_lower);
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            let start = cols.len();
            for (j, b) in row {
                if cols.len() > start && *cols.last().expect("nonempty") == j {
                    add_block(vals.last_mut().expect("nonempty"), &b);
                } else {
                    cols.push(j);
                    vals.push(b);
                }
            }
            let d = cols[start..]
                .iter()
                .position(|&j| j as usize == i)
                .expect("diagonal entry");
            diag_pos.push(start + d);
            row_ptr.push(cols.len());
        }

        Ok(BlockStencil {
            level: l,
            nodes: lev.num_nodes(),
            volumes,
            row_ptr,
            cols,
            vals,
            diag_pos,
        })
    }

    pub fn num_lower(&self) -> usize {
        self.diag_pos.len()
    }

    /// `y = Op x`, each of `x`, `y` given per component.
    pub fn apply(&self, h: &GridHierarchy, x: [&[f64]; C], y: &mut [&mut [f64]; R]) {
        let lev = h.level(self.level);
        for i in 0..self.num_lower() {
            let mut acc = [0.0; R];
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.cols[k] as usize;
                let b = &self.vals[k];
                for r in 0..R {
                    for c in 0..C {
                        acc[r] += b[r][c] * x[c][j];
                    }
                }
            }
            for r in 0..R {
                y[r][i] = acc[r];
            }
        }
        for (t, st) in self.volumes.iter().enumerate() {
            let map = &lev.volume_maps[t];
            let start = lev.volume_range(t).start;
            for (k, &slot) in lev.interior[t].iter().enumerate() {
                let mut acc = [0.0; R];
                for (off, b) in st.offsets.iter().zip(&st.blocks) {
                    let j = map[(slot as isize + off) as usize] as usize;
                    for r in 0..R {
                        for c in 0..C {
                            acc[r] += b[r][c] * x[c][j];
                        }
                    }
                }
                for r in 0..R {
                    y[r][start + k] = acc[r];
                }
            }
        }
    }

    /// Diagonal block of row `i`.
    pub fn diagonal(&self, h: &GridHierarchy, i: usize) -> Block<R, C> {
        if i < self.num_lower() {
            return self.vals[self.diag_pos[i]];
        }
        let lev = h.level(self.level);
        let t =
            lev.node_primitive[i] as usize - (lev.primitive_ranges.len() - lev.volume_maps.len());
        self.volumes[t].blocks[self.volumes[t].center]
    }

    /// Calls `f(column, block)` for every entry of row `i`.
    pub fn for_each_in_row<F: FnMut(usize, &Block<R, C>)>(
        &self,
        h: &GridHierarchy,
        i: usize,
        mut f: F,
    ) {
        if i < self.num_lower() {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                f(self.cols[k] as usize, &self.vals[k]);
            }
            return;
        }
        let lev = h.level(self.level);
        let t =
            lev.node_primitive[i] as usize - (lev.primitive_ranges.len() - lev.volume_maps.len());
        let slot = lev.interior[t][i - lev.volume_range(t).start] as isize;
        let map = &lev.volume_maps[t];
        let st = &self.volumes[t];
        for (off, b) in st.offsets.iter().zip(&st.blocks) {
            f(map[(slot + off) as usize] as usize, b);
        }
    }

    /// Number of interior stencil entries of macro volume `t`.
    pub fn stencil_size(&self, t: usize) -> usize {
        self.volumes[t].offsets.len()
    }

    pub fn layout(&self, h: &GridHierarchy) -> CubeLayout {
        h.level(self.level).layout()
    }
}

impl BlockStencil<1, 1> {
    /// The same scalar operator acting on each of three components.
    pub fn expand3(&self) -> BlockStencil<3, 3> {
        let diag = |b: &Block<1, 1>| {
            let v = b[0][0];
            [[v, 0.0, 0.0], [0.0, v, 0.0], [0.0, 0.0, v]]
        };
        BlockStencil {
            level: self.level,
            nodes: self.nodes,
            volumes: self
                .volumes
                .iter()
                .map(|v| VolumeStencil {
                    offsets: v.offsets.clone(),
                    blocks: v.blocks.iter().map(diag).collect(),
                    center: v.center,
                })
                .collect(),
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: self.vals.iter().map(diag).collect(),
            diag_pos: self.diag_pos.clone(),
        }
    }
}

/// Finds a row whose diagonal block has a non-positive diagonal entry.
pub fn find_bad_diagonal<const K: usize>(
    h: &GridHierarchy,
    st: &BlockStencil<K, K>,
) -> Option<usize> {
    let bad = |b: &Block<K, K>| (0..K).any(|c| !(b[c][c] > 0.0));
    if let Some(i) = st.diag_pos.iter().position(|&p| bad(&st.vals[p])) {
        return Some(i);
    }
    let lev = h.level(st.level);
    for (t, v) in st.volumes.iter().enumerate() {
        if bad(&v.blocks[v.center]) {
            if let Some(i) = lev.volume_range(t).next() {
                return Some(i);
            }
        }
    }
    None
}

fn push<const R: usize, const C: usize>(st: &mut VolumeStencil<R, C>, off: isize, b: &Block<R, C>) {
    match st.offsets.iter().position(|&o| o == off) {
        Some(k) => add_block(&mut st.blocks[k], b),
        None => {
            st.offsets.push(off);
            let mut z = zero::<R, C>();
            add_block(&mut z, b);
            st.blocks.push(z);
        }
    }
}
