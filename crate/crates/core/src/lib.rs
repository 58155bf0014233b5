//! Parameter-space probes for `z^d + c` and `e^z + c`: classification,
//! parameter rays, external addresses, attracting curves near exponential
//! rays, separation lines and raster images of the bifurcation locus.

pub mod address;
pub mod dynamics;
pub mod error;
pub mod exponential;
pub mod hyperbolic;
pub mod polyline;
pub mod quadratic;
pub mod render;
pub mod separation;

pub use address::{Address, ExternalAddress, IntermediateAddress};
pub use dynamics::{classify, orbit, param_derivative, Classification, ClassifyOptions, EscapePolicy, Family, OrbitRecord};
pub use error::{Error, Result};
pub use polyline::{land_estimate, PolyPoint, Polyline};

pub use num_complex::Complex64;
