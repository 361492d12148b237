use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Pipeline stage tag attached to errors that escape [`crate::pipeline::run_pipeline`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Attitude,
    Kinematics,
    Geometry,
    Performance,
    Sweep,
    Kmeans,
    Embedding,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Attitude => "attitude",
            Stage::Kinematics => "kinematics",
            Stage::Geometry => "geometry",
            Stage::Performance => "performance",
            Stage::Sweep => "sweep",
            Stage::Kmeans => "kmeans",
            Stage::Embedding => "embedding",
            Stage::Output => "output",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{}:{line}: sample index {index} does not increase (previous {previous})", path.display())]
    Ordering {
        path: PathBuf,
        line: u64,
        index: u64,
        previous: u64,
    },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("stream alignment: {0}")]
    Alignment(String),

    #[error("annotation ({start}, {end}) exceeds stream length {len}")]
    Range { start: usize, end: usize, len: usize },

    #[error("annotation: {0}")]
    Annotation(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("attitude initialisation: {0}")]
    Init(String),

    #[error("innovation covariance is singular")]
    SingularInnovation,

    #[error("sample {index}: {source}")]
    AtSample {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate graph: row {row} has zero degree")]
    DegenerateGraph { row: usize },

    #[error("matrix is not symmetric: |m[{row}][{col}] - m[{col}][{row}]| = {diff:e}")]
    NotSymmetric { row: usize, col: usize, diff: f64 },

    #[error("perplexity bisection did not converge for row {row}")]
    Bisection { row: usize },

    #[error("{stage} stage ({context}): {source}")]
    Stage {
        stage: Stage,
        context: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn at_sample(self, index: usize) -> Self {
        Error::AtSample {
            index,
            source: Box::new(self),
        }
    }

    pub fn in_stage(self, stage: Stage, context: impl Into<String>) -> Self {
        Error::Stage {
            stage,
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Stage tag of the outermost stage wrapper, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
