use std::collections::HashMap;

use super::{sorted3, tet_faces, BoundaryTag, CoarseMesh};

/// Macro primitives of a coarse mesh and their adjacency.
#[derive(Clone, Debug)]
pub struct PrimitiveGraph {
    pub num_vertices: usize,
    /// Sorted endpoint pairs.
    pub edges: Vec<[usize; 2]>,
    /// Sorted vertex triples.
    pub faces: Vec<[usize; 3]>,
    /// Vertex quadruples in mesh order.
    pub volumes: Vec<[usize; 4]>,
    pub face_edges: Vec<[usize; 3]>,
    pub volume_faces: Vec<[usize; 4]>,
    pub volume_edges: Vec<[usize; 6]>,
    /// Volumes adjacent to each face (one for boundary faces, two otherwise).
    pub face_volumes: Vec<Vec<usize>>,
    /// Boundary tag of each face, `None` for interior faces.
    pub face_tags: Vec<Option<BoundaryTag>>,
    edge_index: HashMap<[usize; 2], usize>,
    face_index: HashMap<[usize; 3], usize>,
}

impl PrimitiveGraph {
    pub fn build(mesh: &CoarseMesh) -> Self {
        let mut edges = Vec::new();
        let mut edge_index = HashMap::new();
        let mut faces = Vec::new();
        let mut face_index = HashMap::new();
        let mut face_volumes: Vec<Vec<usize>> = Vec::new();
        let mut volume_faces = Vec::with_capacity(mesh.tets().len());
        let mut volume_edges = Vec::with_capacity(mesh.tets().len());

        let mut edge_id = |a: usize, b: usize, edges: &mut Vec<[usize; 2]>| -> usize {
            let key = if a < b { [a, b] } else { [b, a] };
            *edge_index.entry(key).or_insert_with(|| {
                edges.push(key);
                edges.len() - 1
            })
        };

        for (t, tet) in mesh.tets().iter().enumerate() {
            let mut ve = [0usize; 6];
            let mut n = 0;
            for a in 0..4 {
                for b in a + 1..4 {
                    ve[n] = edge_id(tet[a], tet[b], &mut edges);
                    n += 1;
                }
            }
            volume_edges.push(ve);

            let mut vf = [0usize; 4];
            for (slot, f) in tet_faces(tet).into_iter().enumerate() {
                let key = sorted3(f);
                let id = *face_index.entry(key).or_insert_with(|| {
                    faces.push(key);
                    face_volumes.push(Vec::new());
                    faces.len() - 1
                });
                face_volumes[id].push(t);
                vf[slot] = id;
            }
            volume_faces.push(vf);
        }

        let face_edges = faces
            .iter()
            .map(|f| {
                [
                    edge_index[&[f[0], f[1]]],
                    edge_index[&[f[0], f[2]]],
                    edge_index[&[f[1], f[2]]],
                ]
            })
            .collect();
        let face_tags = faces
            .iter()
            .map(|f| mesh.boundary_tags().get(f).copied())
            .collect();

        PrimitiveGraph {
            num_vertices: mesh.vertices().len(),
            edges,
            faces,
            volumes: mesh.tets().to_vec(),
            face_edges,
            volume_faces,
            volume_edges,
            face_volumes,
            face_tags,
            edge_index,
            face_index,
        }
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { [a, b] } else { [b, a] };
        self.edge_index.get(&key).copied()
    }

    pub fn face_id(&self, f: [usize; 3]) -> Option<usize> {
        self.face_index.get(&sorted3(f)).copied()
    }

    pub fn num_primitives(&self) -> usize {
        self.num_vertices + self.edges.len() + self.faces.len() + self.volumes.len()
    }

    /// Flat primitive identifiers: vertices, then edges, faces, volumes.
    pub fn vertex_prim(&self, v: usize) -> usize {
        v
    }

    pub fn edge_prim(&self, e: usize) -> usize {
        self.num_vertices + e
    }

    pub fn face_prim(&self, f: usize) -> usize {
        self.num_vertices + self.edges.len() + f
    }

    pub fn volume_prim(&self, t: usize) -> usize {
        self.num_vertices + self.edges.len() + self.faces.len() + t
    }
}
