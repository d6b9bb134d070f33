//! Coarse tetrahedral meshes, the macro-primitive graph and the uniformly
//! refined level hierarchy.
//!
//! The input mesh is the level `-2` grid. Level 0 of the hierarchy is the
//! twice refined input, and each further level halves the mesh size. Nodes of
//! every level are stored in containers owned by the macro primitive
//! (vertex, edge, face or volume) they lie in.

mod hierarchy;
pub mod lattice;
mod primitives;

pub use hierarchy::{
    node_counts, predicted_nodes, refine_hierarchy, refine_hierarchy_with, GridHierarchy,
    GridLevel, PrimitiveClass, RefineOptions, NO_NODE,
};
pub use lattice::{Diagonal, ElementType};
pub use primitives::PrimitiveGraph;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryTag {
    Dirichlet,
    Outflow,
    FreeSlip,
}

impl BoundaryTag {
    /// Priority used where boundary parts with different tags meet.
    pub(crate) fn priority(self) -> u8 {
        match self {
            BoundaryTag::Dirichlet => 2,
            BoundaryTag::FreeSlip => 1,
            BoundaryTag::Outflow => 0,
        }
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryTag::Dirichlet => "dirichlet",
            BoundaryTag::Outflow => "outflow",
            BoundaryTag::FreeSlip => "freeslip",
        })
    }
}

impl FromStr for BoundaryTag {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dirichlet" => Ok(BoundaryTag::Dirichlet),
            "outflow" => Ok(BoundaryTag::Outflow),
            "freeslip" => Ok(BoundaryTag::FreeSlip),
            other => Err(format!("unknown boundary tag `{other}`")),
        }
    }
}

pub(crate) fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn dot3(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm3(a: Point) -> f64 {
    dot3(a, a).sqrt()
}

/// Signed volume of the tetrahedron `(a, b, c, d)`.
pub fn signed_volume(a: Point, b: Point, c: Point, d: Point) -> f64 {
    dot3(sub(b, a), cross(sub(c, a), sub(d, a))) / 6.0
}

/// A validated conforming tetrahedral mesh with tagged boundary faces.
#[derive(Clone, Debug, PartialEq)]
pub struct CoarseMesh {
    vertices: Vec<Point>,
    tets: Vec<[usize; 4]>,
    boundary_tags: BTreeMap<[usize; 3], BoundaryTag>,
}

impl CoarseMesh {
    /// Validates the mesh. Boundary faces without an explicit tag are
    /// tagged dirichlet; tags on faces that are not boundary faces are an
    /// error.
    pub fn new(
        vertices: Vec<Point>,
        tets: Vec<[usize; 4]>,
        tags: BTreeMap<[usize; 3], BoundaryTag>,
    ) -> Result<Self> {
        if tets.is_empty() {
            return Err(Error::InvalidMesh("mesh has no tetrahedra".into()));
        }
        for (t, tet) in tets.iter().enumerate() {
            for &v in tet {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!(
                        "tetrahedron {t} references vertex {v}, mesh has {}",
                        vertices.len()
                    )));
                }
            }
            let mut s = *tet;
            s.sort_unstable();
            if s.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidMesh(format!(
                    "tetrahedron {t} repeats a vertex"
                )));
            }
            let vol = signed_volume(
                vertices[tet[0]],
                vertices[tet[1]],
                vertices[tet[2]],
                vertices[tet[3]],
            );
            if !(vol > 0.0) {
                return Err(Error::InvertedElement {
                    tet: t,
                    volume: vol,
                });
            }
        }

        let mut face_count: BTreeMap<[usize; 3], usize> = BTreeMap::new();
        for tet in &tets {
            for f in tet_faces(tet) {
                *face_count.entry(sorted3(f)).or_default() += 1;
            }
        }
        if let Some((face, &count)) = face_count.iter().find(|(_, &c)| c > 2) {
            return Err(Error::NonConforming { face: *face, count });
        }

        let mut boundary_tags = BTreeMap::new();
        for (face, tag) in tags {
            let face = sorted3(face);
            match face_count.get(&face) {
                Some(1) => {
                    boundary_tags.insert(face, tag);
                }
                _ => {
                    return Err(Error::InvalidMesh(format!(
                        "tagged face {face:?} is not a boundary face"
                    )))
                }
            }
        }
        for (face, &count) in &face_count {
            if count == 1 {
                boundary_tags.entry(*face).or_insert(BoundaryTag::Dirichlet);
            }
        }

        Ok(CoarseMesh {
            vertices,
            tets,
            boundary_tags,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    /// Boundary faces (sorted vertex triples) and their tags.
    pub fn boundary_tags(&self) -> &BTreeMap<[usize; 3], BoundaryTag> {
        &self.boundary_tags
    }

    /// Replaces every boundary tag with `tag`.
    pub fn with_uniform_tag(mut self, tag: BoundaryTag) -> Self {
        for t in self.boundary_tags.values_mut() {
            *t = tag;
        }
        self
    }

    /// Retags the boundary faces selected by `select`, which receives the
    /// three vertex coordinates of the face.
    pub fn retag<F: Fn([Point; 3]) -> bool>(mut self, select: F, tag: BoundaryTag) -> Self {
        let verts = self.vertices.clone();
        for (face, t) in self.boundary_tags.iter_mut() {
            if select([verts[face[0]], verts[face[1]], verts[face[2]]]) {
                *t = tag;
            }
        }
        self
    }

    pub fn tet_volume(&self, t: usize) -> f64 {
        let [a, b, c, d] = self.tets[t];
        signed_volume(
            self.vertices[a],
            self.vertices[b],
            self.vertices[c],
            self.vertices[d],
        )
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.tets.len()).map(|t| self.tet_volume(t)).sum()
    }

    /// The unit cube `(0,1)^3` split into six tetrahedra around the main
    /// diagonal, all boundary faces dirichlet.
    pub fn unit_cube() -> Self {
        let mut vertices = Vec::with_capacity(8);
        for i in 0..8 {
            vertices.push([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        let idx = |p: [usize; 3]| p[0] + 2 * p[1] + 4 * p[2];
        let mut tets = Vec::with_capacity(6);
        for perm in [
            [0, 1, 2],
            [0, 2, 1],
            [1, 0, 2],
            [1, 2, 0],
            [2, 0, 1],
            [2, 1, 0],
        ] {
            let mut p = [0usize; 3];
            let v0 = idx(p);
            p[perm[0]] = 1;
            let v1 = idx(p);
            p[perm[1]] = 1;
            let v2 = idx(p);
            p[perm[2]] = 1;
            let v3 = idx(p);
            let mut tet = [v0, v1, v2, v3];
            let vol = signed_volume(
                vertices[tet[0]],
                vertices[tet[1]],
                vertices[tet[2]],
                vertices[tet[3]],
            );
            if vol < 0.0 {
                tet.swap(2, 3);
            }
            tets.push(tet);
        }
        CoarseMesh::new(vertices, tets, BTreeMap::new()).expect("unit cube mesh is valid")
    }

    /// The reference tetrahedron with vertices `0, e1, e2, e3`.
    pub fn reference_tet() -> Self {
        CoarseMesh::new(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[0, 1, 2, 3]],
            BTreeMap::new(),
        )
        .expect("reference tetrahedron is valid")
    }

    /// An icosahedron around the origin split into 20 tetrahedra sharing
    /// the center vertex. Used as a coarse curved-boundary fixture.
    pub fn icosahedron_ball(radius: f64) -> Self {
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let raw: [[f64; 3]; 12] = [
            [-1.0, phi, 0.0],
            [1.0, phi, 0.0],
            [-1.0, -phi, 0.0],
            [1.0, -phi, 0.0],
            [0.0, -1.0, phi],
            [0.0, 1.0, phi],
            [0.0, -1.0, -phi],
            [0.0, 1.0, -phi],
            [phi, 0.0, -1.0],
            [phi, 0.0, 1.0],
            [-phi, 0.0, -1.0],
            [-phi, 0.0, 1.0],
        ];
        let faces: [[usize; 3]; 20] = [
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        let mut vertices = vec![[0.0; 3]];
        for p in raw {
            let n = norm3(p);
            vertices.push([radius * p[0] / n, radius * p[1] / n, radius * p[2] / n]);
        }
        let tets = faces
            .iter()
            .map(|f| {
                let mut t = [0, f[0] + 1, f[1] + 1, f[2] + 1];
                if signed_volume(
                    vertices[t[0]],
                    vertices[t[1]],
                    vertices[t[2]],
                    vertices[t[3]],
                ) < 0.0
                {
                    t.swap(2, 3);
                }
                t
            })
            .collect();
        CoarseMesh::new(vertices, tets, BTreeMap::new()).expect("icosahedron mesh is valid")
    }

    /// Parses the line-oriented `tetmesh 1` text format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut tets = Vec::new();
        let mut tags = BTreeMap::new();
        let mut saw_header = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line_no = lineno + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let mut toks = line.split_whitespace();
            let kind = toks.next().unwrap_or_default();
            if !saw_header {
                if kind != "tetmesh" || toks.next() != Some("1") || toks.next().is_some() {
                    return Err(err("expected header `tetmesh 1`".into()));
                }
                saw_header = true;
                continue;
            }
            let rest: Vec<&str> = toks.collect();
            match kind {
                "v" => {
                    if rest.len() != 3 {
                        return Err(err(format!(
                            "vertex needs 3 coordinates, got {}",
                            rest.len()
                        )));
                    }
                    let mut p = [0.0; 3];
                    for (c, tok) in p.iter_mut().zip(&rest) {
                        let v: f64 = tok
                            .parse()
                            .map_err(|_| err(format!("bad coordinate `{tok}`")))?;
                        if !v.is_finite() {
                            return Err(err(format!("non-finite coordinate `{tok}`")));
                        }
                        *c = v;
                    }
                    vertices.push(p);
                }
                "t" => {
                    if rest.len() != 4 {
                        return Err(err(format!(
                            "tetrahedron needs 4 indices, got {}",
                            rest.len()
                        )));
                    }
                    let mut t = [0usize; 4];
                    for (c, tok) in t.iter_mut().zip(&rest) {
                        *c = tok.parse().map_err(|_| err(format!("bad index `{tok}`")))?;
                    }
                    tets.push(t);
                }
                "b" => {
                    if rest.len() != 4 {
                        return Err(err("boundary face needs 3 indices and a tag".into()));
                    }
                    let mut f = [0usize; 3];
                    for (c, tok) in f.iter_mut().zip(&rest[..3]) {
                        *c = tok.parse().map_err(|_| err(format!("bad index `{tok}`")))?;
                    }
                    let tag: BoundaryTag = rest[3].parse().map_err(err)?;
                    if tags.insert(sorted3(f), tag).is_some() {
                        return Err(err(format!("face {f:?} tagged twice")));
                    }
                }
                other => return Err(err(format!("unknown record `{other}`"))),
            }
        }
        if !saw_header {
            return Err(Error::Parse {
                line: 1,
                message: "missing header `tetmesh 1`".into(),
            });
        }
        CoarseMesh::new(vertices, tets, tags)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("tetmesh 1\n");
        for v in &self.vertices {
            out.push_str(&format!("v {:?} {:?} {:?}\n", v[0], v[1], v[2]));
        }
        for t in &self.tets {
            out.push_str(&format!("t {} {} {} {}\n", t[0], t[1], t[2], t[3]));
        }
        for (f, tag) in &self.boundary_tags {
            out.push_str(&format!("b {} {} {} {}\n", f[0], f[1], f[2], tag));
        }
        out
    }
}

/// Reads and validates a mesh file.
pub fn load_coarse_mesh<P: AsRef<Path>>(path: P) -> Result<CoarseMesh> {
    let text = std::fs::read_to_string(path)?;
    CoarseMesh::parse(&text)
}

pub fn unit_cube_mesh() -> CoarseMesh {
    CoarseMesh::unit_cube()
}

pub(crate) fn tet_faces(t: &[usize; 4]) -> [[usize; 3]; 4] {
    [
        [t[1], t[2], t[3]],
        [t[0], t[2], t[3]],
        [t[0], t[1], t[3]],
        [t[0], t[1], t[2]],
    ]
}
