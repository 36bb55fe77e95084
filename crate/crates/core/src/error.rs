use thiserror::Error;

/// Any error raised along the solve pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] crate::linalg::LinalgError),
    #[error(transparent)]
    Spline(#[from] crate::splines::SplineError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Assembly(#[from] crate::assembly::AssemblyError),
    #[error(transparent)]
    Coupling(#[from] crate::coupling::CouplingError),
    #[error(transparent)]
    Ieti(#[from] crate::ieti::IetiError),
    #[error(transparent)]
    Precond(#[from] crate::precond::PrecondError),
    #[error(transparent)]
    Krylov(#[from] crate::krylov::KrylovError),
    #[error(transparent)]
    Adaptivity(#[from] crate::adaptivity::AdaptivityError),
}
