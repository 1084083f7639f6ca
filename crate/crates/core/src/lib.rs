//! Numerical laboratory for the Hardy-Sobolev inequality with the distance
//! weight singular on the whole boundary.
//!
//! The half-space extremal is computed on the ball (`radial`), transported
//! back through the Möbius map (`mobius`) and integrated over the half-space
//! (`halfspace`). `spectral` checks non-degeneracy of the linearization,
//! `planar` works with conformal radii of explicit planar domains and
//! `fem2d` minimizes the quotient on polygons.

pub mod error;
pub mod fem2d;
pub mod halfspace;
pub mod io;
pub mod mobius;
pub mod ode;
pub mod params;
pub mod planar;
pub mod quad;
pub mod radial;
pub mod special;
pub mod spectral;

mod band;

pub use error::{Error, Result};
pub use params::{make_params, Family, ParamSpec, ProblemParams};
pub use radial::{closed_form_profile, shoot, ProfileSource, RadialProfile};
pub use special::{gamma_fn, harmonic_dimension, sphere_area};
