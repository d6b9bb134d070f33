use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("non-conforming mesh: face {face:?} is shared by {count} tetrahedra")]
    NonConforming { face: [usize; 3], count: usize },

    #[error("tetrahedron {tet} has non-positive signed volume {volume:e}")]
    InvertedElement { tet: usize, volume: f64 },

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("refinement to level {level} needs {nodes} nodes, above the cap of {cap}")]
    ResourceLimit {
        level: usize,
        nodes: usize,
        cap: usize,
    },

    #[error("level mismatch: expected {expected}, got {found}")]
    LevelMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate element in macro tetrahedron {tet}")]
    DegenerateElement { tet: usize },

    #[error("zero diagonal entry at node {node}")]
    ZeroDiagonal { node: usize },

    #[error("zero-length normal at node {node}")]
    DegenerateNormal { node: usize },

    #[error("preconditioner is not positive definite (breakdown at iteration {iteration})")]
    IndefinitePreconditioner { iteration: usize },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
