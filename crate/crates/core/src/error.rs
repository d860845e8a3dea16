use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unsupported format: {0}")]
    UnsupportedFormat(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("mesh is empty")]
    EmptyMesh,
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("mesh has no vertex normals")]
    MissingNormals,
    #[error("all faces have zero curvature")]
    ZeroCurvature,
    #[error("voxel {0:?} has an inactive face neighbor")]
    InactiveNeighbor([usize; 3]),
    #[error("position {0:?} lies outside the grid")]
    OutOfBounds([f64; 3]),
    #[error("no pixel is valid in both depth images")]
    NoValidPixels,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn in_stage(stage: &'static str) -> impl FnOnce(Error) -> Error {
        move |e| Error::Stage {
            stage,
            source: Box::new(e),
        }
    }

    pub(crate) fn parse(msg: impl Into<String>) -> Self {
        Error::Parse(msg.into())
    }
}
