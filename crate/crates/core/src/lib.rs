//! Global attractor structure of generalized Lotka-Volterra systems
//! `u_i' = u_i (b_i + Σ_j a_ij u_j)` with Volterra-Lyapunov stable `A`.
//!
//! The pipeline: certify the interaction matrix ([`matrix_analysis`]),
//! solve the complementarity problem for the globally attracting
//! equilibrium ([`lcp`]), enumerate admissible equilibria and invasion rates
//! ([`equilibria`]), build the invasion graph and the information structure
//! and check that they agree ([`attractor_graphs`]), probe robustness under
//! perturbation ([`structural_stability`]) and confirm predicted
//! connections by integrating the flow ([`ode_oracle`]).

pub mod attractor_graphs;
pub mod cli;
pub mod community;
pub mod equilibria;
pub mod error;
pub mod generators;
pub mod lcp;
pub mod matrix_analysis;
pub mod ode_oracle;
pub mod structural_stability;

pub use community::Community;
pub use equilibria::{Equilibrium, InvasionScheme, LvSystem};
pub use error::{Error, Result};
pub use matrix_analysis::RealMatrix;
