//! Invertible neural-ODE networks and executable checks of their
//! approximation theory.
//!
//! * [`ode`]: RK4 / Dormand–Prince integration of autonomous fields.
//! * [`field`]: analytic and MLP vector fields with certified Lipschitz bounds.
//! * [`flow`]: time-1 flow endpoints, inversion, group-law and rescaling checks.
//! * [`inn`]: the model `W ∘ ψ_k ∘ … ∘ ψ_1` with an invertible affine `W`.
//! * [`approx`]: sup-norm grids, reach sets, the Grönwall endpoint bound,
//!   MLP field fitting and the compositional approximation pipeline.
//! * [`norm`]: the series `h`, adaptive quadrature, and the sup-vs-`L^p` gap.

pub mod approx;
pub mod error;
pub mod field;
pub mod flow;
pub mod inn;
pub mod linalg;
pub mod norm;
pub mod ode;

pub use error::{Error, Result};
pub use field::{Activation, FieldKind, MlpParams, VectorField};
pub use flow::FlowEndpoint;
pub use inn::{AffineMap, InnModel};
pub use linalg::Matrix;
pub use ode::{Field, Method, SolverConfig};
