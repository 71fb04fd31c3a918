use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("degenerate geometry: {0}")]
    Degenerate(&'static str),
    #[error("point cloud has no normals")]
    MissingNormals,
    #[error("no horizontal support: no primitive with |c| >= {0}")]
    NoHorizontalSupport(f64),
    #[error("no unique intersection between planes")]
    NoUniqueIntersection,
    #[error("wall mesh {0} is not a rectangle")]
    NonRectangular(usize),
    #[error("slab unsupported: every fragment fell below th_clip = {0}")]
    SlabUnsupported(usize),
    #[error("rooms {0} and {1} overlap")]
    OverlappingRooms(usize, usize),
    #[error("empty input: {0}")]
    Empty(&'static str),
}
