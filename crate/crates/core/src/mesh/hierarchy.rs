use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::lattice::{for_each_anchor, CubeLayout, Diagonal, ElementType};
use super::{norm3, sub, BoundaryTag, CoarseMesh, Point, PrimitiveGraph};
use crate::error::{Error, Result};

/// Marks cube-layout slots outside the lattice.
pub const NO_NODE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PrimitiveClass {
    Vertex,
    Edge,
    Face,
    Volume,
}

impl PrimitiveClass {
    pub const ALL: [PrimitiveClass; 4] = [
        PrimitiveClass::Vertex,
        PrimitiveClass::Edge,
        PrimitiveClass::Face,
        PrimitiveClass::Volume,
    ];
}

#[derive(Clone, Copy, Debug)]
pub struct RefineOptions {
    /// Upper bound on the number of nodes of any level.
    pub max_nodes: usize,
}

impl Default for RefineOptions {
    fn default() -> Self {
        RefineOptions {
            max_nodes: 20_000_000,
        }
    }
}

/// One level of the hierarchy.
///
/// Nodes are numbered class by class (all vertex nodes, then edge, face and
/// volume nodes), each primitive owning a contiguous range. Inside an edge
/// the nodes run from the lower to the higher global vertex; inside a face
/// with sorted vertices `(a, b, c)` they are ordered lexicographically by the
/// barycentric weights of `b` and `c`; inside a volume lexicographically by
/// lattice index.
#[derive(Clone, Debug)]
pub struct GridLevel {
    pub index: usize,
    /// Intervals per macro edge, `4 * 2^index`.
    pub intervals: usize,
    pub coords: Vec<Point>,
    /// Flat primitive id (see [`PrimitiveGraph`]) owning each node.
    pub node_primitive: Vec<u32>,
    /// Parity of the primitive-local structured index.
    pub color: Vec<u8>,
    pub class_ranges: [Range<usize>; 4],
    pub primitive_ranges: Vec<Range<usize>>,
    /// Per macro volume: global node id at every cube-layout slot.
    pub volume_maps: Vec<Vec<u32>>,
    /// Per macro volume: cube-layout slots of the interior nodes, in global order.
    pub interior: Vec<Vec<u32>>,
    /// Largest element size `h_T = |T|^(1/3)`.
    pub h: f64,
    /// Smallest element size.
    pub h_min: f64,
    /// Per macro volume: congruence class of each entry of `ElementType::ALL`.
    pub element_classes: Vec<[u8; 6]>,
    /// For levels above 0: the two coarse nodes each node interpolates from
    /// (equal for nodes that coincide with a coarse node).
    pub parents: Vec<[u32; 2]>,
}

impl GridLevel {
    pub fn num_nodes(&self) -> usize {
        self.coords.len()
    }

    pub fn layout(&self) -> CubeLayout {
        CubeLayout { n: self.intervals }
    }

    pub fn class_range(&self, c: PrimitiveClass) -> Range<usize> {
        self.class_ranges[c as usize].clone()
    }

    /// Nodes owned by vertices, edges and faces precede all volume nodes.
    pub fn num_lower(&self) -> usize {
        self.class_ranges[3].start
    }

    pub fn num_tets(&self) -> usize {
        self.volume_maps.len() * self.intervals.pow(3)
    }

    /// Interior nodes of macro volume `t`.
    pub fn volume_range(&self, t: usize) -> Range<usize> {
        let nt = self.volume_maps.len();
        self.primitive_ranges[self.primitive_ranges.len() - nt + t].clone()
    }

    /// Calls `f(type, anchor, node ids)` for every micro element of macro
    /// volume `t`. With `boundary_only`, elements whose vertices are all
    /// volume-interior nodes are skipped.
    pub fn for_each_element<F>(&self, t: usize, diag: Diagonal, boundary_only: bool, mut f: F)
    where
        F: FnMut(ElementType, [usize; 3], [usize; 4]),
    {
        let n = self.intervals;
        let layout = self.layout();
        let map = &self.volume_maps[t];
        for ty in ElementType::ALL {
            let Some(max) = ty.max_anchor_sum(n) else {
                continue;
            };
            let offs = ty.offsets(diag).map(|o| layout.offset(o));
            for_each_anchor(max, |p| {
                if boundary_only && p.iter().all(|&c| c >= 1) && p[0] + p[1] + p[2] + 4 <= n {
                    return;
                }
                let base = layout.index(p) as isize;
                let ids = offs.map(|o| map[(base + o) as usize] as usize);
                f(ty, p, ids);
            });
        }
    }

    /// Number of distinct element congruence classes in macro volume `t`.
    pub fn num_element_classes(&self, t: usize) -> usize {
        *self.element_classes[t]
            .iter()
            .max()
            .expect("six element types") as usize
            + 1
    }
}

#[derive(Clone, Debug)]
pub struct GridHierarchy {
    pub coarse_mesh: CoarseMesh,
    pub graph: PrimitiveGraph,
    /// Interior-diagonal choice per macro volume, shared by all levels.
    pub diagonals: Vec<Diagonal>,
    /// Boundary tag of each flat primitive, resolved by priority where
    /// differently tagged faces meet; `None` in the interior.
    pub primitive_tags: Vec<Option<BoundaryTag>>,
    pub levels: Vec<GridLevel>,
}

impl GridHierarchy {
    pub fn finest(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, l: usize) -> &GridLevel {
        &self.levels[l]
    }

    /// Boundary tag of the node `i` on level `l`.
    pub fn node_tag(&self, l: usize, i: usize) -> Option<BoundaryTag> {
        self.primitive_tags[self.levels[l].node_primitive[i] as usize]
    }

    /// Number of velocity nodes not on the boundary.
    pub fn interior_node_count(&self, l: usize) -> usize {
        let lev = &self.levels[l];
        lev.primitive_ranges
            .iter()
            .zip(&self.primitive_tags)
            .filter(|(_, t)| t.is_none())
            .map(|(r, _)| r.len())
            .sum()
    }

    /// Velocity plus pressure unknowns when boundary velocities are not
    /// counted as unknowns.
    pub fn free_dofs(&self, l: usize) -> usize {
        3 * self.interior_node_count(l) + self.levels[l].num_nodes()
    }

    /// Affine frame `(x0, a, b, c)` of macro volume `t`: lattice point
    /// `(i, j, k)` at level `l` sits at `x0 + (i a + j b + k c) / N`.
    pub fn frame(&self, t: usize) -> [Point; 4] {
        frame(&self.coarse_mesh, t)
    }

    /// Physical vertices of the micro element of type `ty` anchored at
    /// `anchor` in macro volume `t` on level `l`.
    pub fn element_points(
        &self,
        l: usize,
        t: usize,
        ty: ElementType,
        anchor: [usize; 3],
    ) -> [Point; 4] {
        let [x0, a, b, c] = self.frame(t);
        let n = self.levels[l].intervals as f64;
        ty.offsets(self.diagonals[t]).map(|o| {
            let w = [0, 1, 2].map(|d| (anchor[d] as f64 + o[d] as f64) / n);
            [0, 1, 2].map(|d| x0[d] + w[0] * a[d] + w[1] * b[d] + w[2] * c[d])
        })
    }
}

/// `(n_u, n_p)` with every node carrying three velocity components.
pub fn node_counts(level: &GridLevel) -> (usize, usize) {
    let n = level.num_nodes();
    (3 * n, n)
}

fn frame(mesh: &CoarseMesh, t: usize) -> [Point; 4] {
    let v = mesh.vertices();
    let [i0, i1, i2, i3] = mesh.tets()[t];
    [
        v[i0],
        sub(v[i1], v[i0]),
        sub(v[i2], v[i0]),
        sub(v[i3], v[i0]),
    ]
}

/// Nodes of a level with `n` intervals per macro edge.
pub fn predicted_nodes(graph: &PrimitiveGraph, n: usize) -> usize {
    let per_edge = n - 1;
    let per_face = (n - 1) * (n - 2) / 2;
    let per_vol = (n - 1) * (n - 2) * (n - 3) / 6;
    graph.num_vertices
        + graph.edges.len() * per_edge
        + graph.faces.len() * per_face
        + graph.volumes.len() * per_vol
}

pub fn refine_hierarchy(mesh: &CoarseMesh, finest: usize) -> Result<GridHierarchy> {
    refine_hierarchy_with(mesh, finest, RefineOptions::default())
}

pub fn refine_hierarchy_with(
    mesh: &CoarseMesh,
    finest: usize,
    opts: RefineOptions,
) -> Result<GridHierarchy> {
    let graph = PrimitiveGraph::build(mesh);
    for l in 0..=finest {
        let nodes = predicted_nodes(&graph, 4 << l);
        if nodes > opts.max_nodes || nodes > NO_NODE as usize {
            return Err(Error::ResourceLimit {
                level: l,
                nodes,
                cap: opts.max_nodes,
            });
        }
    }
    let diagonals = (0..mesh.tets().len())
        .map(|t| {
            let [_, a, b, c] = frame(mesh, t);
            Diagonal::shortest(a, b, c)
        })
        .collect::<Vec<_>>();
    let primitive_tags = primitive_tags(&graph);

    let mut levels: Vec<GridLevel> = Vec::with_capacity(finest + 1);
    for l in 0..=finest {
        let mut level = build_level(l, mesh, &graph, &diagonals)?;
        if let Some(coarse) = levels.last() {
            level.parents = parents(&level, coarse, &diagonals);
        }
        levels.push(level);
    }
    Ok(GridHierarchy {
        coarse_mesh: mesh.clone(),
        graph,
        diagonals,
        primitive_tags,
        levels,
    })
}

fn primitive_tags(g: &PrimitiveGraph) -> Vec<Option<BoundaryTag>> {
    let mut tags: Vec<Option<BoundaryTag>> = vec![None; g.num_primitives()];
    let mut put = |slot: usize, tag: BoundaryTag| {
        let cur = &mut tags[slot];
        if cur.is_none_or(|c| tag.priority() > c.priority()) {
            *cur = Some(tag);
        }
    };
    for (f, tag) in g.face_tags.iter().enumerate() {
        let Some(tag) = *tag else { continue };
        put(g.face_prim(f), tag);
        for &e in &g.face_edges[f] {
            put(g.edge_prim(e), tag);
        }
        for &v in &g.faces[f] {
            put(g.vertex_prim(v), tag);
        }
    }
    tags
}

/// Per-tet lookup from a mask of nonzero barycentric weights to the owning
/// primitive.
#[derive(Clone, Copy)]
enum Owner {
    None,
    Vertex(usize),
    /// Range start and the local slot of the higher global vertex.
    Edge(usize, usize),
    /// Range start and the local slots of the second and third sorted vertex.
    Face(usize, usize, usize),
    Volume,
}

fn build_level(
    index: usize,
    mesh: &CoarseMesh,
    g: &PrimitiveGraph,
    diagonals: &[Diagonal],
) -> Result<GridLevel> {
    let n = 4usize << index;
    let per_edge = n - 1;
    let per_face = (n - 1) * (n - 2) / 2;
    let per_vol = (n - 1) * (n - 2) * (n - 3) / 6;
    let nv = g.num_vertices;
    let ne = g.edges.len();
    let nf = g.faces.len();
    let nt = g.volumes.len();

    let e0 = nv;
    let f0 = e0 + ne * per_edge;
    let t0 = f0 + nf * per_face;
    let total = t0 + nt * per_vol;
    let class_ranges = [0..e0, e0..f0, f0..t0, t0..total];

    let mut primitive_ranges = Vec::with_capacity(g.num_primitives());
    primitive_ranges.extend((0..nv).map(|v| v..v + 1));
    primitive_ranges.extend((0..ne).map(|e| e0 + e * per_edge..e0 + (e + 1) * per_edge));
    primitive_ranges.extend((0..nf).map(|f| f0 + f * per_face..f0 + (f + 1) * per_face));
    primitive_ranges.extend((0..nt).map(|t| t0 + t * per_vol..t0 + (t + 1) * per_vol));

    let verts = mesh.vertices();
    let nf64 = n as f64;
    let mut coords = Vec::with_capacity(total);
    let mut node_primitive = Vec::with_capacity(total);
    let mut color = Vec::with_capacity(total);

    for v in 0..nv {
        coords.push(verts[v]);
        node_primitive.push(g.vertex_prim(v) as u32);
        color.push(0);
    }
    for (e, &[a, b]) in g.edges.iter().enumerate() {
        for t in 1..n {
            let w = t as f64 / nf64;
            coords.push(lerp(&[(verts[a], 1.0 - w), (verts[b], w)]));
            node_primitive.push(g.edge_prim(e) as u32);
            color.push((t % 2) as u8);
        }
    }
    for (f, &[a, b, c]) in g.faces.iter().enumerate() {
        for s in 1..n {
            for t in 1..n - s {
                let (ws, wt) = (s as f64 / nf64, t as f64 / nf64);
                coords.push(lerp(&[
                    (verts[a], 1.0 - ws - wt),
                    (verts[b], ws),
                    (verts[c], wt),
                ]));
                node_primitive.push(g.face_prim(f) as u32);
                color.push(((s + t) % 2) as u8);
            }
        }
    }

    let layout = CubeLayout { n };
    let mut volume_maps = Vec::with_capacity(nt);
    let mut interior = Vec::with_capacity(nt);
    let mut element_classes = Vec::with_capacity(nt);
    let face_offset = |s: usize| (s - 1) * (n - 1) - (s - 1) * s / 2;

    for (t, tet) in g.volumes.iter().enumerate() {
        let owners = owner_table(g, tet, e0, f0, per_edge, per_face);
        let [x0, a, b, c] = frame(mesh, t);
        let mut map = vec![NO_NODE; layout.len()];
        let mut inner = Vec::with_capacity(per_vol);
        let mut next = t0 + t * per_vol;
        for_each_anchor(n, |p| {
            let lam = [n - p[0] - p[1] - p[2], p[0], p[1], p[2]];
            let mask = (0..4).fold(0usize, |m, q| m | (((lam[q] > 0) as usize) << q));
            let id = match owners[mask] {
                Owner::Vertex(v) => v,
                Owner::Edge(start, hi) => start + lam[hi] - 1,
                Owner::Face(start, mid, hi) => start + face_offset(lam[mid]) + lam[hi] - 1,
                Owner::Volume => {
                    let id = next;
                    next += 1;
                    inner.push(layout.index(p) as u32);
                    let w = [p[0] as f64 / nf64, p[1] as f64 / nf64, p[2] as f64 / nf64];
                    coords.push([
                        x0[0] + w[0] * a[0] + w[1] * b[0] + w[2] * c[0],
                        x0[1] + w[0] * a[1] + w[1] * b[1] + w[2] * c[1],
                        x0[2] + w[0] * a[2] + w[1] * b[2] + w[2] * c[2],
                    ]);
                    node_primitive.push(g.volume_prim(t) as u32);
                    color.push(((p[0] + p[1] + p[2]) % 2) as u8);
                    id
                }
                Owner::None => unreachable!("lattice points have a nonzero weight"),
            };
            map[layout.index(p)] = id as u32;
        });
        volume_maps.push(map);
        interior.push(inner);
        element_classes.push(classify_elements(a, b, c, diagonals[t], t)?);
    }
    debug_assert_eq!(coords.len(), total);

    let (mut h, mut h_min) = (0.0f64, f64::INFINITY);
    for t in 0..nt {
        let ht = (mesh.tet_volume(t) / (n * n * n) as f64).cbrt();
        h = h.max(ht);
        h_min = h_min.min(ht);
    }

    Ok(GridLevel {
        index,
        intervals: n,
        coords,
        node_primitive,
        color,
        class_ranges,
        primitive_ranges,
        volume_maps,
        interior,
        h,
        h_min,
        element_classes,
        parents: Vec::new(),
    })
}

fn lerp(terms: &[(Point, f64)]) -> Point {
    let mut out = [0.0; 3];
    for (p, w) in terms {
        for d in 0..3 {
            out[d] += w * p[d];
        }
    }
    out
}

fn owner_table(
    g: &PrimitiveGraph,
    tet: &[usize; 4],
    e0: usize,
    f0: usize,
    per_edge: usize,
    per_face: usize,
) -> [Owner; 16] {
    let mut owners = [Owner::None; 16];
    for (mask, owner) in owners.iter_mut().enumerate() {
        let slots: Vec<usize> = (0..4).filter(|q| mask & (1 << q) != 0).collect();
        *owner = match slots.len() {
            1 => Owner::Vertex(tet[slots[0]]),
            2 => {
                let (p, q) = (slots[0], slots[1]);
                let e = g.edge_id(tet[p], tet[q]).expect("tet edge in graph");
                let hi = if tet[p] > tet[q] { p } else { q };
                Owner::Edge(e0 + e * per_edge, hi)
            }
            3 => {
                let mut s = [slots[0], slots[1], slots[2]];
                s.sort_by_key(|&q| tet[q]);
                let f = g
                    .face_id([tet[s[0]], tet[s[1]], tet[s[2]]])
                    .expect("tet face in graph");
                Owner::Face(f0 + f * per_face, s[1], s[2])
            }
            4 => Owner::Volume,
            _ => Owner::None,
        };
    }
    owners
}

/// Groups the six element types of a macro volume by sorted edge lengths.
fn classify_elements(a: Point, b: Point, c: Point, diag: Diagonal, t: usize) -> Result<[u8; 6]> {
    let pos = |o: [i64; 3]| {
        let w = [o[0] as f64, o[1] as f64, o[2] as f64];
        [
            w[0] * a[0] + w[1] * b[0] + w[2] * c[0],
            w[0] * a[1] + w[1] * b[1] + w[2] * c[1],
            w[0] * a[2] + w[1] * b[2] + w[2] * c[2],
        ]
    };
    let scale = norm3(a).max(norm3(b)).max(norm3(c));
    let mut keys: Vec<[f64; 6]> = Vec::new();
    let mut classes = [0u8; 6];
    for (slot, ty) in ElementType::ALL.iter().enumerate() {
        let p = ty.offsets(diag).map(pos);
        let vol = super::signed_volume(p[0], p[1], p[2], p[3]).abs();
        if vol <= 1e-14 * scale.powi(3) {
            return Err(Error::DegenerateElement { tet: t });
        }
        let mut len = [0.0; 6];
        let mut q = 0;
        for i in 0..4 {
            for j in i + 1..4 {
                len[q] = norm3(sub(p[i], p[j]));
                q += 1;
            }
        }
        len.sort_by(f64::total_cmp);
        let found = keys.iter().position(|k| {
            k.iter()
                .zip(&len)
                .all(|(x, y)| (x - y).abs() <= 1e-10 * scale)
        });
        classes[slot] = match found {
            Some(i) => i as u8,
            None => {
                keys.push(len);
                (keys.len() - 1) as u8
            }
        };
    }
    Ok(classes)
}

/// Interpolation parents of every fine node.
fn parents(fine: &GridLevel, coarse: &GridLevel, diagonals: &[Diagonal]) -> Vec<[u32; 2]> {
    let fl = fine.layout();
    let cl = coarse.layout();
    let mut out = vec![[NO_NODE; 2]; fine.num_nodes()];
    for (t, fmap) in fine.volume_maps.iter().enumerate() {
        let cmap = &coarse.volume_maps[t];
        let dir = diagonals[t].direction();
        // endpoints of the diagonal relative to the cube anchor
        let d0: [i64; 3] = [
            (dir[0] < 0) as i64,
            (dir[1] < 0) as i64,
            (dir[2] < 0) as i64,
        ];
        let d1: [i64; 3] = [d0[0] + dir[0], d0[1] + dir[1], d0[2] + dir[2]];
        let cid = |p: [i64; 3]| cmap[cl.index([p[0] as usize, p[1] as usize, p[2] as usize])];
        for_each_anchor(fine.intervals, |p| {
            let id = fmap[fl.index(p)] as usize;
            if out[id][0] != NO_NODE {
                return;
            }
            let q = [p[0] as i64, p[1] as i64, p[2] as i64];
            let odd: Vec<usize> = (0..3).filter(|&d| q[d] % 2 == 1).collect();
            let half = |v: [i64; 3]| [v[0] / 2, v[1] / 2, v[2] / 2];
            let pair = match odd.len() {
                0 => {
                    let c = cid(half(q));
                    [c, c]
                }
                1 => {
                    let mut lo = q;
                    let mut hi = q;
                    lo[odd[0]] -= 1;
                    hi[odd[0]] += 1;
                    [cid(half(lo)), cid(half(hi))]
                }
                2 => {
                    let (d, e) = (odd[0], odd[1]);
                    let mut x = q;
                    let mut y = q;
                    x[d] -= 1;
                    x[e] += 1;
                    y[d] += 1;
                    y[e] -= 1;
                    [cid(half(x)), cid(half(y))]
                }
                _ => {
                    let anchor = [(q[0] - 1) / 2, (q[1] - 1) / 2, (q[2] - 1) / 2];
                    [cid(add_i(anchor, d0)), cid(add_i(anchor, d1))]
                }
            };
            out[id] = pair;
        });
    }
    out
}

fn add_i(a: [i64; 3], b: [i64; 3]) -> [i64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::lattice::add;
    use proptest::prelude::*;
    use std::collections::{BTreeMap, HashMap, HashSet};

    fn cube(l: usize) -> GridHierarchy {
        refine_hierarchy(&CoarseMesh::unit_cube(), l).unwrap()
    }

    /// Every lattice point of every macro volume, with its physical position.
    fn lattice_points(h: &GridHierarchy, l: usize) -> Vec<(u32, Point)> {
        let lev = h.level(l);
        let n = lev.intervals;
        let mut out = Vec::new();
        for t in 0..lev.volume_maps.len() {
            let [x0, a, b, c] = h.frame(t);
            for_each_anchor(n, |p| {
                let w = p.map(|v| v as f64 / n as f64);
                let x = [0, 1, 2].map(|d| x0[d] + w[0] * a[d] + w[1] * b[d] + w[2] * c[d]);
                out.push((lev.volume_maps[t][lev.layout().index(p)], x));
            });
        }
        out
    }

    #[test]
    fn unit_cube_levels_have_structured_node_counts() {
        let h = cube(2);
        for l in 0..=2 {
            let k = 4usize << l;
            assert_eq!(h.level(l).num_nodes(), (k + 1).pow(3));
            assert_eq!(h.level(l).num_tets(), 6 * 8usize.pow(l as u32 + 2));
        }
        assert_eq!(h.level(2).num_tets(), 24576);
    }

    #[test]
    fn single_tet_level_zero() {
        let h = refine_hierarchy(&CoarseMesh::reference_tet(), 0).unwrap();
        assert_eq!(h.level(0).num_tets(), 64);
        // (N+1)(N+2)(N+3)/6 lattice points for N = 4
        assert_eq!(node_counts(h.level(0)), (105, 35));
    }

    #[test]
    fn table_dof_counts() {
        let h = cube(2);
        assert_eq!(h.free_dofs(2), 3 * 15usize.pow(3) + 17usize.pow(3));
        let (nu, np) = node_counts(h.level(2));
        assert_eq!(nu, 3 * np);
        let total = (nu + np) as f64;
        assert!(total > 1.4e4 && total < 2.0e4, "{total}");
        // L=4 from the closed form
        let g = PrimitiveGraph::build(&CoarseMesh::unit_cube());
        let nodes = predicted_nodes(&g, 64);
        assert_eq!(nodes, 65usize.pow(3));
        let free = 3 * 63usize.pow(3) + nodes;
        assert!((free as f64 - 1.0e6).abs() < 0.05e6, "{free}");
    }

    #[test]
    fn ids_agree_with_coordinates() {
        let h = cube(1);
        for l in 0..=1 {
            let lev = h.level(l);
            for (id, x) in lattice_points(&h, l) {
                let y = lev.coords[id as usize];
                assert!(
                    (0..3).all(|d| (x[d] - y[d]).abs() < 1e-13),
                    "{x:?} vs {y:?}"
                );
            }
        }
    }

    #[test]
    fn distinct_positions_have_distinct_ids() {
        let h = cube(1);
        let lev = h.level(1);
        let n = lev.intervals as f64;
        let mut by_pos: HashMap<[i64; 3], u32> = HashMap::new();
        for (id, x) in lattice_points(&h, 1) {
            let key = x.map(|v| (v * n).round() as i64);
            let prev = *by_pos.entry(key).or_insert(id);
            assert_eq!(prev, id);
        }
        assert_eq!(by_pos.len(), lev.num_nodes());
    }

    #[test]
    fn refined_faces_are_shared_by_at_most_two_elements() {
        let h = cube(0);
        let lev = h.level(0);
        let l = lev.layout();
        let mut faces: BTreeMap<[u32; 3], usize> = BTreeMap::new();
        for t in 0..lev.volume_maps.len() {
            let [_, a, b, c] = h.frame(t);
            assert!(super::super::signed_volume([0.0; 3], a, b, c) > 0.0);
            for ty in ElementType::ALL {
                let offs = ty.offsets(h.diagonals[t]);
                let Some(max) = ty.max_anchor_sum(lev.intervals) else {
                    continue;
                };
                for_each_anchor(max, |p| {
                    let ids = offs.map(|o| lev.volume_maps[t][l.index(add(p, o))]);
                    for skip in 0..4 {
                        let mut f: Vec<u32> =
                            (0..4).filter(|&q| q != skip).map(|q| ids[q]).collect();
                        f.sort_unstable();
                        *faces.entry([f[0], f[1], f[2]]).or_default() += 1;
                    }
                });
            }
        }
        assert!(faces.values().all(|&c| c <= 2));
        // closed surface: boundary faces are exactly the refined cube faces
        let boundary = faces.values().filter(|&&c| c == 1).count();
        assert_eq!(boundary, 6 * 2 * 16);
    }

    #[test]
    fn parents_interpolate_midpoints() {
        let h = cube(2);
        for l in 1..=2 {
            let fine = h.level(l);
            let coarse = h.level(l - 1);
            for (i, pr) in fine.parents.iter().enumerate() {
                let a = coarse.coords[pr[0] as usize];
                let b = coarse.coords[pr[1] as usize];
                let x = fine.coords[i];
                for d in 0..3 {
                    assert!((0.5 * (a[d] + b[d]) - x[d]).abs() < 1e-13);
                }
                if pr[0] != pr[1] {
                    let len = norm3(sub(a, b));
                    // coarse micro edges are at most a macro diagonal over N_c
                    assert!(len < 2.0 * 3f64.sqrt() / fine.intervals as f64 + 1e-12);
                }
            }
        }
    }

    #[test]
    fn element_classes_are_few_and_stable() {
        for mesh in [
            CoarseMesh::unit_cube(),
            CoarseMesh::reference_tet(),
            CoarseMesh::icosahedron_ball(1.0),
        ] {
            let h = refine_hierarchy(&mesh, 2).unwrap();
            for t in 0..mesh.tets().len() {
                let k = h.level(0).num_element_classes(t);
                assert!(k <= 3);
                for l in 1..=2 {
                    assert_eq!(h.level(l).element_classes[t], h.level(0).element_classes[t]);
                }
            }
        }
    }

    #[test]
    fn boundary_tags_cover_cube_surface() {
        let h = cube(0);
        let lev = h.level(0);
        for i in 0..lev.num_nodes() {
            let x = lev.coords[i];
            let on_surface = x
                .iter()
                .any(|&v| v.abs() < 1e-13 || (v - 1.0).abs() < 1e-13);
            assert_eq!(h.node_tag(0, i).is_some(), on_surface, "{x:?}");
        }
    }

    #[test]
    fn resource_cap_is_enforced() {
        let err = refine_hierarchy_with(
            &CoarseMesh::unit_cube(),
            3,
            RefineOptions { max_nodes: 10_000 },
        )
        .unwrap_err();
        // 17^3 nodes at level 2 fit, 33^3 at level 3 do not
        assert!(matches!(err, Error::ResourceLimit { level: 3, .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(4))]

        #[test]
        fn tet_count_and_partition(l in 0usize..=3) {
            let h = cube(l);
            let lev = h.level(l);
            prop_assert_eq!(lev.num_tets(), 6 * 8usize.pow(l as u32 + 2));
            let covered: usize = lev.primitive_ranges.iter().map(|r| r.len()).sum();
            prop_assert_eq!(covered, lev.num_nodes());
            let mut seen = HashSet::new();
            for (p, r) in lev.primitive_ranges.iter().enumerate() {
                for i in r.clone() {
                    prop_assert!(seen.insert(i));
                    prop_assert_eq!(lev.node_primitive[i] as usize, p);
                }
            }
            prop_assert!((h.level(0).h / lev.h - (1u32 << l) as f64).abs() < 1e-12);
        }
    }
}
