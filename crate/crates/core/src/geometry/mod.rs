//! Domains bounded by inflow/outflow graphs `x1(x2)` and flat pieces.

mod curve;
mod domain;
mod flatness;
mod graph;

pub use curve::{
    boundary_pieces, check_assumption1, perimeter, sample_boundary, singularity_neighbourhood,
    Assumption1Report, BoundarySamples, CurvePiece, PartTag, Selection,
};
pub use domain::{
    build_domain, BoundaryPart, Domain, DomainSpec, FlatPart, GeometryOptions, PieceKind, PieceSpec,
    Segment,
};
pub use flatness::{
    domain_certificates, flatness_analytic, flatness_of_fn, flatness_sampled, geometric_samples,
    singularity_certificate, FlatnessCertificate, FlatnessMode, N_MAX,
};
pub use graph::{BoundaryGraph, CubicSpline, GraphFn, GraphPiece, Side};
