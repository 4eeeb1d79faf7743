#![allow(dead_code)]

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use teleport_core::sampling::{random_physical_state, random_shifted_state, StateSampler};
use teleport_core::TwoModeState;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Alternates the Williamson sampler with the shifted-matrix sampler.
pub fn mixed_state(rng: &mut ChaCha8Rng, i: usize) -> TwoModeState {
    if i.is_multiple_of(2) {
        random_physical_state(rng, &StateSampler::default())
    } else {
        random_shifted_state(rng, 1.001)
    }
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

/// Named states used across the oracle and acceptance suites. The
/// asymmetric fixture is deliberately unphysical.
pub fn fixtures() -> Vec<(&'static str, TwoModeState)> {
    let diag = |a: f64, b: f64| teleport_core::gaussian::Block2::new(a, 0.0, 0.0, b);
    let fragile = teleport_core::gaussian::make_state(&diag(1.25, 3.0), &diag(2.0, 2.5), &diag(1.25, -1.0)).unwrap();
    let symmetric = teleport_core::scan::SymmetricFamilyParams::new(2.0, 2.0)
        .unwrap()
        .state(0.75, -0.75);
    vec![
        ("vacuum", TwoModeState::vacuum()),
        ("tmss_1", TwoModeState::tmss(1.0)),
        ("tmss_0.3", TwoModeState::tmss(0.3)),
        ("symmetric_k1.5", symmetric),
        ("fragile", fragile),
        ("asymmetric", teleport_core::gaussian::asymmetric_fixture()),
    ]
}
