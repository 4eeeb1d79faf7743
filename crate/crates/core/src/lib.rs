//! Two-mode Gaussian states and Braunstein–Kimble coherent-state teleportation
//! through independently attenuated channels with a tunable classical gain.
//!
//! Conventions used throughout the crate:
//!
//! * quadrature ordering is `(q_A, p_A, q_B, p_B)`;
//! * `[q, p] = 2i`, so the vacuum (and every coherent state) has covariance `I`;
//! * covariance matrices are split into blocks `A` (Alice), `B` (Bob) and the
//!   correlation block `C`:
//!
//! ```text
//!     V = | A   C |     A = | Q_A K_A |   B = | Q_B K_B |   C = | K_Q K_1 |
//!         | Cᵀ  B |         | K_A P_A |       | K_B P_B |       | K_2 K_P |
//! ```
//!
//! The modules follow the computation pipeline: [`gaussian`] holds the state
//! model and the attenuation channel, [`fidelity`] the average fidelity and the
//! classical threshold, [`witness`] the teleportation witnesses and the region
//! classifier, [`symmetry`] the fidelity-preserving basis change, [`oracle`]
//! two numerical cross-checks of the analytic fidelity and [`scan`] the grid
//! engines used for region maps, fidelity surfaces and gain sweeps.

pub mod error;
pub mod fidelity;
pub mod gaussian;
pub mod oracle;
pub mod sampling;
pub mod scan;
pub mod statefile;
pub mod symmetry;
pub mod witness;

pub use error::{Error, Result};
pub use fidelity::{
    build_e, cft, cross_term, det_e_expanded, is_quantum, mean_fidelity, pointwise_fidelity, CoherentAmplitude,
    EMatrix, Gain,
};
pub use gaussian::{
    apply_attenuation, is_physical, local_rotation, make_state, ppt_entangled, symplectic_invariants, ChannelParams,
    SymplecticInvariants, TwoModeState,
};
pub use symmetry::{canonicalize, diagonalize_correlations, invariance_angle, CanonicalBasisResult};
pub use witness::{
    classify, duan_check, epr_variances, optimal_gain, w_all, w_full, w_prod, w_rob, w_sum, witness_report,
    EprVariances, RegionLabel, WitnessReport,
};

/// Version string written into every report and scan sidecar.
pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Absolute slack on the smallest symplectic eigenvalue when deciding
/// physicality. Pure states sit exactly on `ν₋ = 1`.
pub const EPS_PHYS: f64 = 1e-9;

/// Slack used by every strict witness or eigenvalue inequality. Boundary
/// states land on the non-strict (classical / separable) side.
pub const EPS_W: f64 = 1e-12;
