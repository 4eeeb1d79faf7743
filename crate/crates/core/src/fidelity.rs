//! Average teleportation fidelity of coherent states and the classical
//! fidelity threshold.
//!
//! Bob's output for input `|α⟩` is compared with the target `|β⟩ = |gα⟩`.
//! With zero-mean shared states the fidelity is
//!
//! ```text
//! F = 2 exp(−½ (x_β − g x_α)ᵀ E⁻¹ (x_β − g x_α)) / √det E
//! E = (1 + g²) I + g² Z A_t Z − g (Z C_t + C_tᵀ Z) + B_t,   Z = diag(1, −1)
//! ```
//!
//! where `A_t, B_t, C_t` are the blocks of the attenuated state. For
//! `β = gα` the exponent vanishes, so the fidelity does not depend on `α` and
//! its average over any prior (including the flat limit) is `2/√det E`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussian::{apply_attenuation, ChannelParams, TwoModeState};
use crate::EPS_W;

/// Classical-channel gain `g ≥ 0`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Gain(pub(crate) f64);

impl Gain {
    pub const UNITY: Gain = Gain(1.0);

    pub fn new(g: f64) -> Result<Self> {
        if g.is_finite() && g >= 0.0 {
            Ok(Gain(g))
        } else {
            Err(Error::InvalidGain(g))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Gain {
    type Error = Error;

    fn try_from(g: f64) -> Result<Self> {
        Gain::new(g)
    }
}

impl From<Gain> for f64 {
    fn from(g: Gain) -> f64 {
        g.0
    }
}

/// Coherent amplitude `α`; its quadrature mean is `(2 Re α, 2 Im α)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CoherentAmplitude {
    pub re: f64,
    pub im: f64,
}

impl CoherentAmplitude {
    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn quadratures(&self) -> Vector2<f64> {
        Vector2::new(2.0 * self.re, 2.0 * self.im)
    }

    pub fn scaled(&self, g: f64) -> Self {
        Self::new(g * self.re, g * self.im)
    }
}

/// The symmetric 2×2 matrix `E_{t,g}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EMatrix(pub Matrix2<f64>);

impl EMatrix {
    pub fn determinant(&self) -> f64 {
        self.0.determinant()
    }

    pub fn matrix(&self) -> &Matrix2<f64> {
        &self.0
    }
}

const Z: Matrix2<f64> = Matrix2::new(1.0, 0.0, 0.0, -1.0);

/// Builds `E_{t,g}` from an already attenuated state.
pub fn build_e(attenuated: &TwoModeState, g: Gain) -> EMatrix {
    let g = g.value();
    let a = attenuated.a();
    let b = attenuated.b();
    let c = attenuated.c();
    let e = Matrix2::identity() * (1.0 + g * g) + Z * a * Z * (g * g) - (Z * c + c.transpose() * Z) * g + b;
    EMatrix((e + e.transpose()) * 0.5)
}

fn attenuated_e(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> Result<EMatrix> {
    let e = build_e(&apply_attenuation(state, ch), g);
    let det = e.determinant();
    if det <= 0.0 || !det.is_finite() {
        return Err(Error::DegenerateE { det });
    }
    Ok(e)
}

/// `F̄ = 2 / √det E_{t,g}`.
pub fn mean_fidelity(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> Result<f64> {
    let e = attenuated_e(state, ch, g)?;
    Ok(2.0 / e.determinant().sqrt())
}

/// Fidelity between Bob's output for input `α` and an arbitrary target `β`.
pub fn fidelity_to_target(
    alpha: &CoherentAmplitude,
    beta: &CoherentAmplitude,
    state: &TwoModeState,
    ch: &ChannelParams,
    g: Gain,
) -> Result<f64> {
    let e = attenuated_e(state, ch, g)?;
    let det = e.determinant();
    let inv = e.0.try_inverse().ok_or(Error::DegenerateE { det })?;
    let d = beta.quadratures() - alpha.quadratures() * g.value();
    let exponent = -0.5 * (d.transpose() * inv * d)[(0, 0)];
    Ok(2.0 * exponent.exp() / det.sqrt())
}

/// Fidelity for a single input `α` with the protocol target `β = gα`.
pub fn pointwise_fidelity(alpha: &CoherentAmplitude, state: &TwoModeState, ch: &ChannelParams, g: Gain) -> Result<f64> {
    fidelity_to_target(alpha, &alpha.scaled(g.value()), state, ch, g)
}

/// Off-diagonal combination of `det E` in terms of the un-attenuated entries:
/// `(g t_A)² K_A − t_B² K_B + g t_A t_B (K_1 − K_2)`. It equals `−E_qp`.
pub fn cross_term(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> f64 {
    let e = state.entries();
    let x = g.value() * ch.ta();
    let tb = ch.tb();
    x * x * e.ka - tb * tb * e.kb + x * tb * (e.k1 - e.k2)
}

/// Scalar expansion of `det E_{t,g}` from the un-attenuated entries, without
/// forming `E`.
pub fn det_e_expanded(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> f64 {
    let e = state.entries();
    let gv = g.value();
    let x = gv * ch.ta();
    let tb = ch.tb();
    let (x2, tb2, xtb) = (x * x, tb * tb, x * tb);
    let norm = 1.0 + gv * gv;

    let trace_line = x2 * (e.qa + e.pa - 2.0) + tb2 * (e.qb + e.pb - 2.0) - 2.0 * xtb * (e.kq - e.kp);
    let q_line = x2 * (e.qa - 1.0) + tb2 * (e.qb - 1.0) - 2.0 * xtb * e.kq;
    let p_line = x2 * (e.pa - 1.0) + tb2 * (e.pb - 1.0) + 2.0 * xtb * e.kp;
    let cross = cross_term(state, ch, g);

    4.0 * norm * norm + 2.0 * norm * trace_line + q_line * p_line - cross * cross
}

/// Classical fidelity threshold `1 / (1 + g²)`.
pub fn cft(g: Gain) -> f64 {
    1.0 / (1.0 + g.value() * g.value())
}

/// Strictly above the classical threshold (by more than [`EPS_W`]).
pub fn is_quantum(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> Result<bool> {
    Ok(mean_fidelity(state, ch, g)? > cft(g) + EPS_W)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{asymmetric_fixture, make_state, Block2};

    fn gain(g: f64) -> Gain {
        Gain::new(g).unwrap()
    }

    fn ch(ta: f64, tb: f64) -> ChannelParams {
        ChannelParams::new(ta, tb).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn gain_domain() {
        assert!(Gain::new(-0.1).is_err());
        assert!(Gain::new(f64::NAN).is_err());
        assert!(Gain::new(f64::INFINITY).is_err());
        assert_eq!(Gain::new(0.0).unwrap().value(), 0.0);
    }

    #[test]
    fn e_matrix_examples() {
        let vac = build_e(&TwoModeState::vacuum(), Gain::UNITY);
        assert_eq!(*vac.matrix(), Matrix2::identity() * 4.0);

        let tmss = build_e(&TwoModeState::tmss(1.0), Gain::UNITY);
        let expected = 2.0 + 2.0 * (-2.0f64).exp();
        assert!(close(tmss.0[(0, 0)], expected, 1e-12));
        assert!(close(tmss.0[(1, 1)], expected, 1e-12));
        assert!(close(expected, 2.270671, 1e-6));
        assert!(close(tmss.0[(0, 1)], 0.0, 1e-15));

        let fx = build_e(&asymmetric_fixture(), Gain::UNITY);
        assert!(close(fx.0[(0, 0)], 2.5, 1e-12));
        assert!(close(fx.0[(1, 1)], 5.6, 1e-12));
        assert_eq!(fx.0[(0, 1)], 0.0);
    }

    #[test]
    fn mean_fidelity_examples() {
        let id = ChannelParams::IDENTITY;
        assert_eq!(mean_fidelity(&TwoModeState::vacuum(), &id, Gain::UNITY).unwrap(), 0.5);
        let f = mean_fidelity(&TwoModeState::tmss(1.0), &id, Gain::UNITY).unwrap();
        assert!(close(f, 1.0 / (1.0 + (-2.0f64).exp()), 1e-14));
        assert!(close(f, 0.8807971, 1e-7));
        let f = mean_fidelity(&asymmetric_fixture(), &id, Gain::UNITY).unwrap();
        assert!(close(f, 2.0 / 14.0f64.sqrt(), 1e-14));
        assert!(close(f, 0.5345225, 1e-7));
    }

    #[test]
    fn degenerate_e_is_reported() {
        // A strongly sub-vacuum, over-correlated matrix drives det E negative.
        let s = make_state(
            &Block2::new(0.1, 0.0, 0.0, 0.1),
            &Block2::new(0.1, 0.0, 0.0, 0.1),
            &Block2::new(3.0, 0.0, 0.0, 3.0),
        )
        .unwrap();
        assert!(matches!(
            mean_fidelity(&s, &ChannelParams::IDENTITY, Gain::UNITY),
            Err(Error::DegenerateE { .. })
        ));
    }

    #[test]
    fn pointwise_matches_mean() {
        let id = ChannelParams::IDENTITY;
        let tmss = TwoModeState::tmss(1.0);
        let zero = CoherentAmplitude::default();
        assert_eq!(
            pointwise_fidelity(&zero, &tmss, &id, Gain::UNITY).unwrap(),
            mean_fidelity(&tmss, &id, Gain::UNITY).unwrap()
        );
        let f = pointwise_fidelity(&CoherentAmplitude::new(3.0, 2.0), &tmss, &id, Gain::UNITY).unwrap();
        assert!(close(f, 0.8807971, 1e-7));
        let fx = asymmetric_fixture();
        let f = pointwise_fidelity(&CoherentAmplitude::new(1.0, 0.0), &fx, &id, gain(2.5)).unwrap();
        assert!(close(f, mean_fidelity(&fx, &id, gain(2.5)).unwrap(), 1e-14));
    }

    #[test]
    fn mismatched_target_lowers_fidelity() {
        let tmss = TwoModeState::tmss(1.0);
        let id = ChannelParams::IDENTITY;
        let alpha = CoherentAmplitude::new(1.0, 0.5);
        let wrong = CoherentAmplitude::new(0.0, 0.0);
        let f = fidelity_to_target(&alpha, &wrong, &tmss, &id, Gain::UNITY).unwrap();
        assert!(f < mean_fidelity(&tmss, &id, Gain::UNITY).unwrap());
    }

    #[test]
    fn det_expanded_examples() {
        let id = ChannelParams::IDENTITY;
        assert!(close(
            det_e_expanded(&TwoModeState::vacuum(), &id, Gain::UNITY),
            16.0,
            1e-12
        ));
        let d = det_e_expanded(&TwoModeState::tmss(1.0), &id, Gain::UNITY);
        let e = 2.0 + 2.0 * (-2.0f64).exp();
        assert!(close(d, e * e, 1e-10));
        assert!(close(d, 5.155944821, 1e-9));
    }

    #[test]
    fn det_expanded_with_every_cross_entry() {
        // Oracle: determinant of the explicitly assembled E.
        let s = make_state(
            &Block2::new(2.3, 0.4, 0.4, 1.9),
            &Block2::new(1.7, -0.3, -0.3, 2.8),
            &Block2::new(0.9, 0.6, -0.5, -1.1),
        )
        .unwrap();
        for (ta, tb, g) in [(1.0, 1.0, 1.0), (0.3, 0.8, 2.2), (0.9, 0.1, 0.4), (0.0, 0.5, 1.5)] {
            let c = ch(ta, tb);
            let oracle = build_e(&apply_attenuation(&s, &c), gain(g)).determinant();
            let d = det_e_expanded(&s, &c, gain(g));
            assert!((d - oracle).abs() <= 1e-10 * oracle.abs(), "{d} vs {oracle}");
            let e = build_e(&apply_attenuation(&s, &c), gain(g));
            assert!(close(cross_term(&s, &c, gain(g)), -e.0[(0, 1)], 1e-12));
        }
    }

    #[test]
    fn cft_examples() {
        assert_eq!(cft(Gain::UNITY), 0.5);
        assert_eq!(cft(gain(0.0)), 1.0);
        assert!(close(cft(gain(2.5)), 4.0 / 29.0, 1e-15));
        assert!(close(cft(gain(2.5)), 0.1379310, 1e-7));
    }

    #[test]
    fn quantum_examples() {
        let id = ChannelParams::IDENTITY;
        assert!(!is_quantum(&TwoModeState::vacuum(), &id, Gain::UNITY).unwrap());
        assert!(is_quantum(&TwoModeState::tmss(1.0), &id, Gain::UNITY).unwrap());
        let fx = asymmetric_fixture();
        let c = ch(1.0, 0.3);
        // det E = 4.068 · 5.306
        let f = mean_fidelity(&fx, &c, Gain::UNITY).unwrap();
        assert!(close(f, 2.0 / (4.068f64 * 5.306).sqrt(), 1e-12));
        assert!(close(f, 0.4305, 1e-4));
        assert!(!is_quantum(&fx, &c, Gain::UNITY).unwrap());
    }

    #[test]
    fn finite_squeezing_stays_below_unity() {
        for r in [0.1, 0.5, 1.0, 2.0, 4.0] {
            let f = mean_fidelity(&TwoModeState::tmss(r), &ChannelParams::IDENTITY, Gain::UNITY).unwrap();
            assert!(f > 0.0 && f < 1.0);
        }
    }
}
