//! Teleportation witnesses, the optimal gain and the region classifier.
//!
//! All witnesses are written in terms of the *un-attenuated* entries of `V`
//! with the channel factors `(g t_A)`, `t_B` made explicit. With the EPR-like
//! combinations `u = g t_A q_A − t_B q_B` and `v = g t_A p_A + t_B p_B`, and
//! `n = (g t_A)² + t_B²`:
//!
//! * `W_sum  = ⟨Δu²⟩ + ⟨Δv²⟩ − 2n` (negative: quantum, basis-free);
//! * `W_prod = ⟨Δu²⟩⟨Δv²⟩ − n²` (non-negative: classical, canonical basis);
//! * `W_all  = [(2 − t_A²)g² + (2 − t_B²)] W_sum + W_prod` (negative iff
//!   quantum, canonical basis);
//! * `W_rob  = (tr A − 2)(tr B − 2) − (K_Q − K_P)²` (gain-optimised `W_sum`);
//! * `W_full = (tr A − 2)(tr B − 2) − tr(CᵀC) + 2 det C`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fidelity::{cft, mean_fidelity, Gain};
use crate::gaussian::{ppt_entangled, symplectic_invariants, ChannelParams, TwoModeState};
use crate::symmetry::canonicalize;
use crate::{EPS_PHYS, EPS_W};

/// Below this `|tr A − 2|` Alice's mode is treated as vacuum noise.
const DEGENERATE_ALICE_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EprVariances {
    pub var_u: f64,
    pub var_v: f64,
}

pub fn epr_variances(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> EprVariances {
    let e = state.entries();
    let x = g.value() * ch.ta();
    let tb = ch.tb();
    EprVariances {
        var_u: x * x * e.qa + tb * tb * e.qb - 2.0 * x * tb * e.kq,
        var_v: x * x * e.pa + tb * tb * e.pb + 2.0 * x * tb * e.kp,
    }
}

/// `n = (g t_A)² + t_B²`, the vacuum level of both EPR variances.
fn vacuum_level(ch: &ChannelParams, g: Gain) -> f64 {
    let x = g.value() * ch.ta();
    x * x + ch.tb() * ch.tb()
}

pub fn w_sum(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> f64 {
    let v = epr_variances(state, ch, g);
    v.var_u + v.var_v - 2.0 * vacuum_level(ch, g)
}

pub fn w_prod(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> f64 {
    let v = epr_variances(state, ch, g);
    let n = vacuum_level(ch, g);
    v.var_u * v.var_v - n * n
}

/// The full classical/quantum boundary written out term by term.
pub fn w_all(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> f64 {
    let e = state.entries();
    let gv = g.value();
    let x = gv * ch.ta();
    let tb = ch.tb();
    let (x2, tb2, xtb) = (x * x, tb * tb, x * tb);
    let sum_bracket = x2 * (e.tr_a() - 2.0) + tb2 * (e.tr_b() - 2.0) - 2.0 * xtb * (e.kq - e.kp);
    let q_bracket = x2 * (e.qa - 1.0) + tb2 * (e.qb - 1.0) - 2.0 * xtb * e.kq;
    let p_bracket = x2 * (e.pa - 1.0) + tb2 * (e.pb - 1.0) + 2.0 * xtb * e.kp;
    2.0 * (1.0 + gv * gv) * sum_bracket + q_bracket * p_bracket
}

/// Coefficient of `W_sum` in `W_all = c·W_sum + W_prod`.
pub fn w_sum_weight(ch: &ChannelParams, g: Gain) -> f64 {
    let g2 = g.value() * g.value();
    (2.0 - ch.ta() * ch.ta()) * g2 + (2.0 - ch.tb() * ch.tb())
}

pub fn w_rob(state: &TwoModeState) -> f64 {
    let e = state.entries();
    let d = e.kq - e.kp;
    (e.tr_a() - 2.0) * (e.tr_b() - 2.0) - d * d
}

pub fn w_full(state: &TwoModeState) -> f64 {
    let e = state.entries();
    let c = state.c();
    let tr_ctc = (c.transpose() * c).trace();
    (e.tr_a() - 2.0) * (e.tr_b() - 2.0) - tr_ctc + 2.0 * c.determinant()
}

/// `W_rob < 0` together with a positive optimal gain (`K_Q − K_P > 0`).
///
/// When `K_Q − K_P ≤ 0` the minimum of `W_sum` over `g ≥ 0` sits at `g = 0`
/// and is non-negative, so a negative `W_rob` alone promises nothing.
pub fn robust_capable(state: &TwoModeState) -> bool {
    let e = state.entries();
    w_rob(state) < -EPS_W && e.kq - e.kp > EPS_W
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DuanCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
}

/// Duan-type test with `ǔ = η q_A − q_B/η`, `v̌ = η p_A + p_B/η`:
/// `⟨Δǔ²⟩ + ⟨Δv̌²⟩ < 2(η² + 1/η²)`.
pub fn duan_check(state: &TwoModeState, eta: f64) -> Result<DuanCheck> {
    if !(eta.is_finite() && eta > 0.0) {
        return Err(Error::InvalidEta(eta));
    }
    let e = state.entries();
    let (a, b) = (eta * eta, 1.0 / (eta * eta));
    let lhs = a * e.qa + b * e.qb - 2.0 * e.kq + a * e.pa + b * e.pb + 2.0 * e.kp;
    let rhs = 2.0 * (a + b);
    Ok(DuanCheck {
        lhs,
        rhs,
        satisfied: lhs < rhs - EPS_W,
    })
}

/// `η = √(g t_A / t_B)`; `None` when `t_B = 0`.
pub fn eta(ch: &ChannelParams, g: Gain) -> Option<f64> {
    (ch.tb() > 0.0).then(|| (g.value() * ch.ta() / ch.tb()).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OptimalGain {
    pub g_min: f64,
    /// The formula produced a negative gain, outside the protocol's `g ≥ 0`.
    pub out_of_domain: bool,
}

/// Minimiser of `W_sum` over `g`: `t_B (K_Q − K_P) / (t_A (tr A − 2))`.
pub fn optimal_gain(state: &TwoModeState, ch: &ChannelParams) -> Result<OptimalGain> {
    if ch.ta() <= 0.0 {
        return Err(Error::TotalAttenuation);
    }
    let e = state.entries();
    let excess = e.tr_a() - 2.0;
    if excess.abs() < DEGENERATE_ALICE_TOL {
        return Err(Error::DegenerateAlice);
    }
    let g_min = ch.tb() * (e.kq - e.kp) / (ch.ta() * excess);
    Ok(OptimalGain {
        g_min,
        out_of_domain: g_min < 0.0,
    })
}

/// Result of maximising `F̄ / F_CFT` over the gain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GainSearch {
    pub g: f64,
    pub ratio: f64,
}

impl GainSearch {
    pub fn quantum(&self) -> bool {
        self.ratio > 1.0 + EPS_W
    }
}

const LOG_G_MIN: f64 = -6.0;
const LOG_G_MAX: f64 = 6.0;
const COARSE_POINTS: usize = 241;
const GOLDEN_TOL: f64 = 1e-8;

fn fidelity_ratio(state: &TwoModeState, ch: &ChannelParams, g: f64) -> f64 {
    let gain = Gain(g);
    match mean_fidelity(state, ch, gain) {
        Ok(f) => f / cft(gain),
        Err(_) => f64::NEG_INFINITY,
    }
}

/// Maximises `F̄ / F_CFT` over the gain.
///
/// A coarse scan of the log-gain axis (plus `g_min` when it is positive,
/// even outside that range) picks the best bracket, which is then refined by golden-section search
/// to `1e−8` in `log g`.
pub fn max_fidelity_ratio(state: &TwoModeState, ch: &ChannelParams) -> GainSearch {
    let step = (LOG_G_MAX - LOG_G_MIN) / (COARSE_POINTS - 1) as f64;
    let ratio_at = |lg: f64| fidelity_ratio(state, ch, lg.exp());

    let mut best_lg = LOG_G_MIN;
    let mut best = f64::NEG_INFINITY;
    let (mut lg_lo, mut lg_hi) = (LOG_G_MIN, LOG_G_MAX);
    for i in 0..COARSE_POINTS {
        let lg = LOG_G_MIN + step * i as f64;
        let r = ratio_at(lg);
        if r > best {
            best = r;
            best_lg = lg;
        }
    }
    if let Ok(opt) = optimal_gain(state, ch) {
        if opt.g_min > 0.0 {
            // Weakly entangled states can put g_min far outside the coarse
            // axis; widen the bracket rather than clamp.
            let lg = opt.g_min.ln();
            lg_lo = lg_lo.min(lg);
            lg_hi = lg_hi.max(lg);
            let r = ratio_at(lg);
            if r > best {
                best = r;
                best_lg = lg;
            }
        }
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = (best_lg - step).max(lg_lo);
    let mut hi = (best_lg + step).min(lg_hi);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = ratio_at(x1);
    let mut f2 = ratio_at(x2);
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = ratio_at(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = ratio_at(x1);
        }
    }
    for (lg, r) in [(x1, f1), (x2, f2)] {
        if r > best {
            best = r;
            best_lg = lg;
        }
    }
    GainSearch {
        g: best_lg.exp(),
        ratio: best,
    }
}

/// Region of the state-space map for one `(V, channel, gain)` configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum RegionLabel {
    #[serde(rename = "UNPHYS")]
    Unphysical,
    #[serde(rename = "SEP")]
    Separable,
    /// Quantum now, and robust to any partial attenuation with a tuned gain.
    #[serde(rename = "I")]
    RobustQuantum,
    /// Quantum now, but some partial attenuation defeats every gain.
    #[serde(rename = "II")]
    FragileQuantum,
    /// Entangled, classical at this gain, but a tuned gain makes it robust.
    #[serde(rename = "V")]
    Robustable,
    /// Entangled, classical at this gain, and not robust.
    #[serde(rename = "III")]
    Fragile,
}

impl RegionLabel {
    pub fn code(self) -> &'static str {
        match self {
            RegionLabel::Unphysical => "UNPHYS",
            RegionLabel::Separable => "SEP",
            RegionLabel::RobustQuantum => "I",
            RegionLabel::FragileQuantum => "II",
            RegionLabel::Robustable => "V",
            RegionLabel::Fragile => "III",
        }
    }

    pub fn is_quantum(self) -> bool {
        matches!(self, RegionLabel::RobustQuantum | RegionLabel::FragileQuantum)
    }
}

impl std::fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.code())
    }
}

pub fn classify(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> Result<RegionLabel> {
    let inv = symplectic_invariants(state)?;
    if inv.nu_minus < 1.0 - EPS_PHYS {
        return Ok(RegionLabel::Unphysical);
    }
    if !ppt_entangled(state)? {
        return Ok(RegionLabel::Separable);
    }
    let robust = robust_capable(state);
    if w_sum(state, ch, g) < -EPS_W && robust {
        return Ok(RegionLabel::RobustQuantum);
    }
    let quantum = mean_fidelity(state, ch, g)? > cft(g) + EPS_W;
    Ok(match (quantum, robust) {
        (true, _) => RegionLabel::FragileQuantum,
        (false, true) => RegionLabel::Robustable,
        (false, false) => RegionLabel::Fragile,
    })
}

/// Every witness for one configuration.
///
/// `w_all`, `w_prod` and the EPR variances are evaluated in the canonical
/// basis (cross term of `det E` removed), where they carry their
/// classical/quantum meaning; `w_sum`, `w_rob` and `w_full` are
/// basis-independent under the fidelity-preserving rotations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WitnessReport {
    pub w_all: f64,
    pub w_sum: f64,
    pub w_prod: f64,
    pub w_rob: f64,
    pub w_full: f64,
    pub var_u: f64,
    pub var_v: f64,
    pub fidelity: f64,
    pub cft: f64,
    /// `None` when `t_B = 0`.
    pub eta: Option<f64>,
    /// Rotation angle `θ` of the canonical basis, `(θ, −θ)`.
    pub canonical_theta: f64,
}

pub fn witness_report(state: &TwoModeState, ch: &ChannelParams, g: Gain) -> Result<WitnessReport> {
    let canon = canonicalize(state, ch, g)?;
    let rotated = &canon.rotated;
    let vars = epr_variances(rotated, ch, g);
    Ok(WitnessReport {
        w_all: w_all(rotated, ch, g),
        w_sum: w_sum(state, ch, g),
        w_prod: w_prod(rotated, ch, g),
        w_rob: w_rob(state),
        w_full: w_full(state),
        var_u: vars.var_u,
        var_v: vars.var_v,
        fidelity: mean_fidelity(state, ch, g)?,
        cft: cft(g),
        eta: eta(ch, g),
        canonical_theta: canon.theta,
    })
}
