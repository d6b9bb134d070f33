//! Index-space structure of a uniformly refined macro tetrahedron.
//!
//! A macro tetrahedron refined `m` times carries the lattice points
//! `(i, j, k)` with `i + j + k <= N`, `N = 2^m`, located at
//! `x0 + (i a + j b + k c) / N` for the edge vectors `a, b, c` leaving the
//! first vertex. Each unit cube of index space is cut by the planes
//! `i + j + k = const` into an up tetrahedron, an octahedron and a down
//! tetrahedron. Octahedra are split into four tetrahedra around one of their
//! three diagonals; the diagonal is fixed per macro tetrahedron so that all
//! micro elements of one type are translates of each other.

use super::Point;

pub type Offset = [i64; 3];

/// Interior diagonal of the index-space octahedron.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Diagonal {
    /// `(1,0,0)` to `(0,1,1)`.
    X,
    /// `(0,1,0)` to `(1,0,1)`.
    Y,
    /// `(0,0,1)` to `(1,1,0)`.
    Z,
}

const A: Offset = [1, 0, 0];
const B: Offset = [0, 1, 0];
const C: Offset = [0, 0, 1];
const D: Offset = [0, 1, 1];
const E: Offset = [1, 0, 1];
const F: Offset = [1, 1, 0];

impl Diagonal {
    /// Picks the physically shortest diagonal for edge vectors `a, b, c`.
    pub fn shortest(a: Point, b: Point, c: Point) -> Self {
        let len = |s: [f64; 3]| {
            (0..3)
                .map(|d| {
                    let v = s[0] * a[d] + s[1] * b[d] + s[2] * c[d];
                    v * v
                })
                .sum::<f64>()
        };
        let cands = [
            (Diagonal::X, len([-1.0, 1.0, 1.0])),
            (Diagonal::Y, len([1.0, -1.0, 1.0])),
            (Diagonal::Z, len([1.0, 1.0, -1.0])),
        ];
        let mut best = cands[0];
        for c in &cands[1..] {
            // prefer the earlier candidate on (near) ties
            if c.1 < best.1 * (1.0 - 1e-12) {
                best = *c;
            }
        }
        best.0
    }

    /// Endpoints of the diagonal followed by the surrounding ring in cyclic
    /// order.
    fn octahedron(self) -> ([Offset; 2], [Offset; 4]) {
        match self {
            Diagonal::X => ([A, D], [B, F, E, C]),
            Diagonal::Y => ([B, E], [A, C, D, F]),
            Diagonal::Z => ([C, F], [A, B, D, E]),
        }
    }

    /// Index-space vector of the diagonal.
    pub fn direction(self) -> Offset {
        let ([p, q], _) = self.octahedron();
        [q[0] - p[0], q[1] - p[1], q[2] - p[2]]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ElementType {
    Up,
    Down,
    /// One of the four octahedron pieces around the diagonal.
    Octa(u8),
}

impl ElementType {
    pub const ALL: [ElementType; 6] = [
        ElementType::Up,
        ElementType::Down,
        ElementType::Octa(0),
        ElementType::Octa(1),
        ElementType::Octa(2),
        ElementType::Octa(3),
    ];

    /// Vertex offsets relative to the anchor of the index-space cube.
    pub fn offsets(self, diag: Diagonal) -> [Offset; 4] {
        match self {
            ElementType::Up => [[0, 0, 0], A, B, C],
            ElementType::Down => [F, E, D, [1, 1, 1]],
            ElementType::Octa(k) => {
                let ([p, q], ring) = diag.octahedron();
                let k = k as usize;
                [p, q, ring[k], ring[(k + 1) % 4]]
            }
        }
    }

    /// Largest admissible anchor index sum for `N` intervals, `None` if the
    /// type does not fit.
    pub fn max_anchor_sum(self, n: usize) -> Option<usize> {
        let reserve = match self {
            ElementType::Up => 1,
            ElementType::Octa(_) => 2,
            ElementType::Down => 3,
        };
        n.checked_sub(reserve)
    }

    /// Number of elements of this type for `N` intervals.
    pub fn count(self, n: usize) -> usize {
        match self.max_anchor_sum(n) {
            Some(s) => (s + 1) * (s + 2) * (s + 3) / 6,
            None => 0,
        }
    }
}

/// Calls `f(anchor)` for every anchor `(i, j, k)` with `i + j + k <= max_sum`,
/// in lexicographic order.
pub fn for_each_anchor<F: FnMut([usize; 3])>(max_sum: usize, mut f: F) {
    for i in 0..=max_sum {
        for j in 0..=max_sum - i {
            for k in 0..=max_sum - i - j {
                f([i, j, k]);
            }
        }
    }
}

/// Row-major layout of the `(N+1)^3` bounding cube of the lattice. Lattice
/// neighbors then sit at constant linear offsets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CubeLayout {
    pub n: usize,
}

impl CubeLayout {
    pub fn stride(&self) -> usize {
        self.n + 1
    }

    pub fn len(&self) -> usize {
        let s = self.stride();
        s * s * s
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, p: [usize; 3]) -> usize {
        let s = self.stride();
        (p[0] * s + p[1]) * s + p[2]
    }

    pub fn offset(&self, o: Offset) -> isize {
        let s = self.stride() as i64;
        ((o[0] * s + o[1]) * s + o[2]) as isize
    }

    pub fn point(&self, idx: usize) -> [usize; 3] {
        let s = self.stride();
        [idx / (s * s), (idx / s) % s, idx % s]
    }
}

pub fn add(p: [usize; 3], o: Offset) -> [usize; 3] {
    [
        (p[0] as i64 + o[0]) as usize,
        (p[1] as i64 + o[1]) as usize,
        (p[2] as i64 + o[2]) as usize,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::signed_volume;

    #[test]
    fn element_counts_tile_the_lattice() {
        for n in [1usize, 2, 4, 8, 16] {
            let total: usize = ElementType::ALL.iter().map(|t| t.count(n)).sum();
            assert_eq!(total, n * n * n);
        }
    }

    #[test]
    fn reference_elements_fill_the_unit_volume() {
        // the reference tet (volume 1/6) refined with N intervals
        for diag in [Diagonal::X, Diagonal::Y, Diagonal::Z] {
            let n = 4usize;
            let mut vol = 0.0;
            for t in ElementType::ALL {
                let offs = t.offsets(diag);
                let p = offs.map(|o| {
                    [
                        o[0] as f64 / n as f64,
                        o[1] as f64 / n as f64,
                        o[2] as f64 / n as f64,
                    ]
                });
                let v = signed_volume(p[0], p[1], p[2], p[3]).abs();
                assert!(v > 0.0, "{t:?} degenerate");
                vol += v * t.count(n) as f64;
            }
            assert!((vol - 1.0 / 6.0).abs() < 1e-14);
        }
    }

    #[test]
    fn cube_layout_round_trip() {
        let c = CubeLayout { n: 5 };
        for idx in 0..c.len() {
            assert_eq!(c.index(c.point(idx)), idx);
        }
        assert_eq!(
            c.offset([1, -1, 0]) as usize + c.index([0, 1, 0]),
            c.index([1, 0, 0])
        );
    }
}
