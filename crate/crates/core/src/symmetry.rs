//! Fidelity-preserving basis changes.
//!
//! Local rotations `R(θ) ⊕ R(−θ)` leave the average fidelity unchanged (they
//! act on `E` as a plain rotation). One of them removes the off-diagonal
//! entry of `E`, after which `det E` splits into the `W_sum`/`W_prod`
//! witnesses. [`diagonalize_correlations`] is the unrestricted version
//! (independent angles) that brings `C` to diagonal form; it does *not*
//! preserve the fidelity.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fidelity::{cross_term, Gain};
use crate::gaussian::{local_rotation, ChannelParams, TwoModeState};

/// Largest cross term accepted after canonicalization.
pub const CANONICAL_RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CanonicalBasisResult {
    pub theta: f64,
    pub rotated: TwoModeState,
    pub residual_cross_term: f64,
}

/// Angle `θ ∈ (−π/2, π/2]` such that `local_rotation(V, θ, −θ)` zeroes the
/// cross term of `det E_{t,g}`.
pub fn invariance_angle(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> f64 {
    let e = state.entries();
    let x = g.value() * ch.ta();
    let tb = ch.tb();
    let numerator = cross_term(state, ch, g);
    let denominator = 0.5 * x * x * (e.qa - e.pa) + 0.5 * tb * tb * (e.qb - e.pb) - x * tb * (e.kq + e.kp);
    if numerator == 0.0 && denominator == 0.0 {
        return 0.0;
    }
    let theta = 0.5 * numerator.atan2(denominator);
    if theta <= -FRAC_PI_2 {
        theta + std::f64::consts::PI
    } else {
        theta
    }
}

pub fn canonicalize(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> Result<CanonicalBasisResult> {
    let theta = invariance_angle(state, ch, g);
    let rotated = local_rotation(state, theta, -theta);
    let residual = cross_term(&rotated, ch, g);
    if residual.abs() > CANONICAL_RESIDUAL_TOL {
        return Err(Error::CanonicalizationFailed { residual });
    }
    Ok(CanonicalBasisResult {
        theta,
        rotated,
        residual_cross_term: residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RotationPair {
    pub theta_a: f64,
    pub theta_b: f64,
}

/// Independent local rotations that make the correlation block diagonal
/// (`K_1 = K_2 = 0`). Returns the angles and the rotated state.
///
/// Writing `C = αI + βJ + γZ + δX`, the `(α, β)` part turns by
/// `θ_A − θ_B` and the `(γ, δ)` part by `θ_A + θ_B`, so both off-diagonal
/// pieces can be removed at once.
pub fn diagonalize_correlations(state: &TwoModeState) -> (RotationPair, TwoModeState) {
    let e = state.entries();
    let alpha = 0.5 * (e.kq + e.kp);
    let beta = 0.5 * (e.k1 - e.k2);
    let gamma = 0.5 * (e.kq - e.kp);
    let delta = 0.5 * (e.k1 + e.k2);
    let diff = (-beta).atan2(alpha);
    let sum = delta.atan2(gamma);
    let pair = RotationPair {
        theta_a: 0.5 * (sum + diff),
        theta_b: 0.5 * (sum - diff),
    };
    (pair, local_rotation(state, pair.theta_a, pair.theta_b))
}
