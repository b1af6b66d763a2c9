//! Shaped single-photon pulses that drive emitters coupled to a
//! one-dimensional waveguide into a chosen single-excitation state.
//!
//! The input pulse is the time reverse of the emission of the target state:
//! [`spectrum`] builds it from the collective spectral matrix, [`dynamics`]
//! integrates the driven emitter amplitudes as a delay differential equation,
//! [`oracle`] is a brute-force discretized-mode reference for the same
//! physics, and [`metrics`] scores the result. [`scenario`] wires these into
//! reproducible experiment runs with CSV/JSON/SVG output.
//!
//! Units: the waveguide decay rate Γ and the group velocity v_g are both 1, so
//! time is in 1/Γ, frequency in Γ and length in v_g/Γ.

pub mod dynamics;
pub mod error;
pub mod metrics;
pub mod model;
pub mod oracle;
pub mod scenario;
pub mod spectrum;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
