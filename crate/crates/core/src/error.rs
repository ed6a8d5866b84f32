use crate::community::Community;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid community: {0}")]
    InvalidCommunity(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("numerical domain error: {0}")]
    NumericalDomain(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("LCP has no complementary feasible solution")]
    NoSolution,

    #[error("LCP has at least two distinct solutions: {first:?} and {second:?}")]
    MultipleSolutions { first: Vec<f64>, second: Vec<f64> },

    #[error("Volterra-Lyapunov assumption violated on community {community}: {reason}")]
    VlAssumptionViolated { community: Community, reason: String },

    #[error("internal consistency check failed: {0}")]
    InternalConsistency(String),

    #[error("graph is not acyclic; cycle: {}", fmt_cycle(.0))]
    NotADag(Vec<Community>),

    #[error("precondition failed: {0}")]
    PreconditionFailed(String),

    #[error("integrator step size underflow at t = {t}")]
    Stiffness { t: f64 },

    #[error("catalog equilibria {0} and {1} are closer than twice the classification tolerance")]
    AmbiguousCatalog(Community, Community),

    #[error("not an unstable direction: {0}")]
    NotAnUnstableDirection(String),

    #[error("edge {from} -> {to} could not be verified within the time budget")]
    VerificationInconclusive { from: Community, to: Community },

    #[error("interaction matrix is not symmetric (entry ({0}, {1}))")]
    NotSymmetric(usize, usize),
}

fn fmt_cycle(cycle: &[Community]) -> String {
    cycle.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" -> ")
}
