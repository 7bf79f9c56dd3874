//! Distributed adaptive control of networked agents whose coupling
//! coefficients are unknown and possibly time-varying.
//!
//! Agents follow `x_i' = -alpha_i(t) x_i + sum_{i~j} beta_ij(t) x_j + u_i`
//! on a connected undirected graph. A Laplacian reference model
//! `r' = -L r` started at `r(0) = x(0)` encodes the desired average
//! consensus; the adaptive controller in [`controller`] drives `x` onto `r`
//! using only neighbor information.
//!
//! - [`graph`]: topology, Laplacian, spectrum, positive-definiteness of `L + K`
//! - [`uncertainty`]: the unknown coefficient signals
//! - [`plant`]: vector fields and tracking-error dynamics
//! - [`controller`]: adaptive input, projection, update laws, locality audit
//! - [`sim`]: fixed-step closed-loop integration
//! - [`analysis`]: Lyapunov function, bounds, consensus verdicts

pub mod analysis;
pub mod controller;
pub mod graph;
pub mod plant;
pub mod sim;
pub mod uncertainty;

pub use controller::{ControllerConfig, EstimatorState, ProjectionBounds};
pub use graph::{GainMatrix, GraphTopology};
pub use plant::ReferenceWeights;
pub use sim::{Integrator, Scenario, SimConfig, SimState, Trajectory};
pub use uncertainty::{CoefficientSignal, UncertainCoefficients};
