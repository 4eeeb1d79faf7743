//! Random physical states, channels and gains for property tests and
//! validation sweeps.
//!
//! [`random_physical_state`] uses the Williamson form
//! `V = S diag(ν₁,ν₁,ν₂,ν₂) Sᵀ` with `S` a random two-mode symplectic matrix
//! (local rotations, a beam splitter and local squeezers), so every draw is
//! physical by construction and pure states are reachable.
//! [`random_shifted_state`] shifts an unstructured symmetric matrix onto a
//! fixed `ν₋`.

use nalgebra::Matrix4;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::fidelity::Gain;
use crate::gaussian::{ppt_entangled, rotation, symplectic_invariants, ChannelParams, TwoModeState};

/// Shape of the state distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StateSampler {
    /// Squeezing parameters are drawn from `U(0, max_squeezing)`.
    pub max_squeezing: f64,
    /// Symplectic eigenvalues are `1 + U(0, max_excess_noise)`.
    pub max_excess_noise: f64,
    /// Probability of drawing a pure state (`ν₁ = ν₂ = 1`).
    pub pure_fraction: f64,
}

impl Default for StateSampler {
    fn default() -> Self {
        StateSampler {
            max_squeezing: 1.5,
            max_excess_noise: 2.0,
            pure_fraction: 0.1,
        }
    }
}

fn local(a: nalgebra::Matrix2<f64>, b: nalgebra::Matrix2<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(&a);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(&b);
    m
}

fn beam_splitter(phi: f64) -> Matrix4<f64> {
    let (s, c) = phi.sin_cos();
    Matrix4::new(
        c, 0.0, s, 0.0, //
        0.0, c, 0.0, s, //
        -s, 0.0, c, 0.0, //
        0.0, -s, 0.0, c,
    )
}

fn random_rotations<R: Rng + ?Sized>(rng: &mut R) -> Matrix4<f64> {
    let tau = std::f64::consts::TAU;
    local(rotation(rng.random::<f64>() * tau), rotation(rng.random::<f64>() * tau))
}

fn random_passive<R: Rng + ?Sized>(rng: &mut R) -> Matrix4<f64> {
    let phi = rng.random::<f64>() * std::f64::consts::PI;
    random_rotations(rng) * beam_splitter(phi) * random_rotations(rng)
}

/// A random symplectic matrix `O₁ · diag(squeezers) · O₂`.
pub fn random_symplectic<R: Rng + ?Sized>(rng: &mut R, max_squeezing: f64) -> Matrix4<f64> {
    let r1 = rng.random::<f64>() * max_squeezing;
    let r2 = rng.random::<f64>() * max_squeezing;
    let squeeze = Matrix4::from_diagonal(&nalgebra::Vector4::new((-r1).exp(), r1.exp(), (-r2).exp(), r2.exp()));
    random_passive(rng) * squeeze * random_passive(rng)
}

pub fn random_physical_state<R: Rng + ?Sized>(rng: &mut R, sampler: &StateSampler) -> TwoModeState {
    let s = random_symplectic(rng, sampler.max_squeezing);
    let (nu1, nu2) = if rng.random::<f64>() < sampler.pure_fraction {
        (1.0, 1.0)
    } else {
        (
            1.0 + rng.random::<f64>() * sampler.max_excess_noise,
            1.0 + rng.random::<f64>() * sampler.max_excess_noise,
        )
    };
    let d = Matrix4::from_diagonal(&nalgebra::Vector4::new(nu1, nu1, nu2, nu2));
    let v = s * d * s.transpose();
    TwoModeState::from_matrix((v + v.transpose()) * 0.5)
        .expect("Williamson construction yields a finite symmetric matrix")
}

/// Random symmetric matrix (standard normal entries) shifted by the smallest
/// `s·I` that makes `ν₋ = nu_floor`. Every entry of `C`, `K_A` and `K_B` is
/// generically nonzero. `ν₋` grows monotonically with `s`, so the shift is
/// found by bisection.
pub fn random_shifted_state<R: Rng + ?Sized>(rng: &mut R, nu_floor: f64) -> TwoModeState {
    let mut m = Matrix4::<f64>::zeros();
    for i in 0..4 {
        for j in i..4 {
            let x: f64 = rng.sample(StandardNormal);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    let ok = |s: f64| {
        let st = TwoModeState::from_matrix(m + Matrix4::identity() * s).expect("symmetric");
        st.matrix().cholesky().is_some() && symplectic_invariants(&st).is_ok_and(|inv| inv.nu_minus >= nu_floor)
    };
    let mut lo = -m.symmetric_eigenvalues().min();
    let mut hi = lo.max(0.0) + 1.0;
    while !ok(hi) {
        hi *= 2.0;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    TwoModeState::from_matrix(m + Matrix4::identity() * hi).expect("symmetric")
}

/// Rejection-samples until the state is PPT-entangled.
pub fn random_entangled_state<R: Rng + ?Sized>(rng: &mut R, sampler: &StateSampler) -> TwoModeState {
    loop {
        let s = random_physical_state(rng, sampler);
        if ppt_entangled(&s).unwrap_or(false) {
            return s;
        }
    }
}

/// `t_A, t_B ~ U(0, 1)`.
pub fn random_channel<R: Rng + ?Sized>(rng: &mut R) -> ChannelParams {
    ChannelParams::new(rng.random::<f64>(), rng.random::<f64>()).expect("unit interval")
}

/// `g ~ U(0, max)`.
pub fn random_gain<R: Rng + ?Sized>(rng: &mut R, max: f64) -> Gain {
    Gain::new(rng.random::<f64>() * max).expect("non-negative gain")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{is_physical, symplectic_eigenvalues_numeric};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn symplectic_draws_preserve_the_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let omega = Matrix4::new(
            0.0, 1.0, 0.0, 0.0, //
            -1.0, 0.0, 0.0, 0.0, //
            0.0, 0.0, 0.0, 1.0, //
            0.0, 0.0, -1.0, 0.0,
        );
        for _ in 0..200 {
            let s = random_symplectic(&mut rng, 2.0);
            assert!((s * omega * s.transpose() - omega).amax() < 1e-10);
        }
    }

    #[test]
    fn states_are_physical_with_requested_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sampler = StateSampler::default();
        for _ in 0..500 {
            let s = random_physical_state(&mut rng, &sampler);
            assert!(is_physical(&s).unwrap());
            let inv = symplectic_invariants(&s).unwrap();
            let (lo, hi) = symplectic_eigenvalues_numeric(&s).unwrap();
            assert!((inv.nu_minus - lo).abs() < 1e-7 * hi);
            assert!((inv.nu_plus - hi).abs() < 1e-7 * hi);
            assert!(inv.nu_plus <= 1.0 + sampler.max_excess_noise + 1e-9);
        }
    }

    #[test]
    fn shifted_states_sit_at_the_floor() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..300 {
            let s = random_shifted_state(&mut rng, 1.001);
            assert!(is_physical(&s).unwrap());
            let nu = symplectic_invariants(&s).unwrap().nu_minus;
            assert!((nu - 1.001).abs() < 1e-9, "{nu}");
            let e = s.entries();
            assert!(e.ka != 0.0 && e.kb != 0.0 && e.k1 != e.k2);
        }
    }

    #[test]
    fn entangled_draws_are_entangled() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let s = random_entangled_state(&mut rng, &StateSampler::default());
            assert!(ppt_entangled(&s).unwrap());
        }
    }
}
