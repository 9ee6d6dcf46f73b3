use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("tet {tet} straddles regions: {detail}")]
    Straddle { tet: usize, detail: String },

    #[error("gmsh import, line {line}: {msg}")]
    Msh { line: usize, msg: String },

    #[error("degenerate tetrahedron {0}")]
    Degenerate(usize),

    #[error("invalid parameter `{field}`: {msg}")]
    Param { field: &'static str, msg: String },

    #[error("incompatible manufactured parameters: kappa^2 (lambda + 2 mu) - omega^2 = {defect:e}")]
    Compatibility { defect: f64 },

    #[error("point {0:?} lies outside the computational box")]
    OutsideDomain([f64; 3]),

    #[error("{0}")]
    Assembly(String),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("solver did not converge: best relative residual {best_residual:e} after {iterations} iterations")]
    NoConvergence { best_residual: f64, iterations: usize },

    #[error("nothing to mark: all indicators are zero")]
    NothingToMark,

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(field: &'static str, msg: impl Into<String>) -> Self {
        Error::Param {
            field,
            msg: msg.into(),
        }
    }
}
