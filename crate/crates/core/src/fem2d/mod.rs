//! P1 finite elements for the Hardy–Sobolev quotient on planar polygons,
//! μ_h = min ∫|∇u|² / (∫δ^{-s}|u|^p)^{2/p} over the mesh space.

pub mod domain;
pub mod mesh;
pub mod solver;

pub use domain::{domain_gallery, kidney_curvature, PolygonDomain};
pub use mesh::{MeshOptions, TriangleMesh};
pub use solver::{minimize_on_mesh, minimize_quotient, refine_study, FemOptions, FemSolution, RefineStudy};
