//! Pointwise curvature of analytic Riemannian 4-metrics through Taylor jets,
//! with Bach-tensor, Kähler and conformal diagnostics and a search for
//! Bach-flat Kähler metrics in a cohomogeneity-one family.

pub mod ansatz;
pub mod bach;
pub mod classify;
pub mod conformal;
pub mod curvature;
pub mod exprlang;
pub mod geometry;
pub mod jets;
pub mod kahler;
pub mod optim;
pub mod sampling;
pub mod suite;
pub mod tensor;

use thiserror::Error;

use exprlang::ParseError;
use jets::{JetError, NVARS};

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Jet(#[from] JetError),
    #[error("{component}: {source}")]
    Parse {
        component: String,
        source: ParseError,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("metric not positive definite at {point:?} (eigenvalues {eigenvalues:?})")]
    NotPositiveDefinite {
        point: [f64; NVARS],
        eigenvalues: Vec<f64>,
    },
    #[error("singular matrix in jet inversion")]
    Singular,
    #[error("point {0:?} lies outside the domain ball")]
    OutsideDomain([f64; NVARS]),
    #[error("complex structure: {0}")]
    ComplexStructure(String),
    #[error("{what} needs jet order {need}, got {have}")]
    InsufficientOrder {
        what: &'static str,
        need: usize,
        have: usize,
    },
    #[error("|s| = {s:e} below floor {floor:e}")]
    NearZeroLocus { s: f64, floor: f64 },
    #[error("conformal factor not positive ({0:e})")]
    NonPositiveFactor(f64),
    #[error("no sign change of s found")]
    NoSignChange,
    #[error("{0}")]
    Degenerate(String),
    #[error("not certified: {residual} = {value:e} exceeds {tol:e} at {point:?}")]
    NotCertified {
        residual: &'static str,
        value: f64,
        tol: f64,
        point: [f64; NVARS],
    },
}

pub(crate) fn require_order(what: &'static str, need: usize, have: usize) -> Result<(), Error> {
    if have < need {
        Err(Error::InsufficientOrder { what, need, have })
    } else {
        Ok(())
    }
}
