//! Two-mode covariance matrices, physicality, the attenuation channel, local
//! phase rotations and the Simon PPT test.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{EPS_PHYS, EPS_W};

/// Per-entry tolerance when checking that a block or matrix is symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// `Δ² − 4 det V` below this is treated as a corrupted input rather than
/// rounding noise.
const DISCRIMINANT_TOL: f64 = 1e-9;

/// A 2×2 covariance (or correlation) block.
pub type Block2 = Matrix2<f64>;

/// Zero-mean two-mode Gaussian state, stored as its 4×4 covariance matrix in
/// the ordering `(q_A, p_A, q_B, p_B)`.
///
/// The stored matrix is exactly symmetric. Construction does not reject
/// unphysical matrices; use [`is_physical`] for that.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoModeState {
    v: Matrix4<f64>,
}

/// The ten named entries of `V`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovEntries {
    pub qa: f64,
    pub pa: f64,
    pub ka: f64,
    pub qb: f64,
    pub pb: f64,
    pub kb: f64,
    pub kq: f64,
    pub kp: f64,
    pub k1: f64,
    pub k2: f64,
}

impl CovEntries {
    pub fn tr_a(&self) -> f64 {
        self.qa + self.pa
    }

    pub fn tr_b(&self) -> f64 {
        self.qb + self.pb
    }
}

fn max_asymmetry2(m: &Block2) -> f64 {
    (m[(0, 1)] - m[(1, 0)]).abs()
}

fn max_asymmetry4(m: &Matrix4<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in (i + 1)..4 {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

fn symmetrized(m: &Matrix4<f64>) -> Matrix4<f64> {
    (m + m.transpose()) * 0.5
}

impl TwoModeState {
    /// Builds a state from a full 4×4 matrix. Entries must be finite and the
    /// matrix symmetric to within [`SYMMETRY_TOL`].
    pub fn from_matrix(v: Matrix4<f64>) -> Result<Self> {
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite);
        }
        let deviation = max_asymmetry4(&v);
        if deviation > SYMMETRY_TOL {
            return Err(Error::NonSymmetricMatrix { deviation });
        }
        Ok(Self { v: symmetrized(&v) })
    }

    /// Row-major 4×4 array form.
    pub fn from_rows(rows: [[f64; 4]; 4]) -> Result<Self> {
        Self::from_matrix(Matrix4::from_fn(|i, j| rows[i][j]))
    }

    /// Two uncorrelated vacua: `V = I`.
    pub fn vacuum() -> Self {
        Self { v: Matrix4::identity() }
    }

    /// Symmetric two-mode squeezed vacuum with squeezing `r`:
    /// `A = B = cosh(2r) I`, `C = sinh(2r) Z`.
    pub fn tmss(r: f64) -> Self {
        let c = (2.0 * r).cosh();
        let s = (2.0 * r).sinh();
        let a = Block2::new(c, 0.0, 0.0, c);
        let corr = Block2::new(s, 0.0, 0.0, -s);
        Self::assemble(&a, &a, &corr)
    }

    fn assemble(a: &Block2, b: &Block2, c: &Block2) -> Self {
        let mut v = Matrix4::zeros();
        v.fixed_view_mut::<2, 2>(0, 0).copy_from(a);
        v.fixed_view_mut::<2, 2>(2, 2).copy_from(b);
        v.fixed_view_mut::<2, 2>(0, 2).copy_from(c);
        v.fixed_view_mut::<2, 2>(2, 0).copy_from(&c.transpose());
        Self { v: symmetrized(&v) }
    }

    pub fn matrix(&self) -> &Matrix4<f64> {
        &self.v
    }

    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        let mut rows = [[0.0; 4]; 4];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, x) in row.iter_mut().enumerate() {
                *x = self.v[(i, j)];
            }
        }
        rows
    }

    pub fn a(&self) -> Block2 {
        self.v.fixed_view::<2, 2>(0, 0).into_owned()
    }

    pub fn b(&self) -> Block2 {
        self.v.fixed_view::<2, 2>(2, 2).into_owned()
    }

    pub fn c(&self) -> Block2 {
        self.v.fixed_view::<2, 2>(0, 2).into_owned()
    }

    pub fn entries(&self) -> CovEntries {
        let v = &self.v;
        CovEntries {
            qa: v[(0, 0)],
            pa: v[(1, 1)],
            ka: v[(0, 1)],
            qb: v[(2, 2)],
            pb: v[(3, 3)],
            kb: v[(2, 3)],
            kq: v[(0, 2)],
            kp: v[(1, 3)],
            k1: v[(0, 3)],
            k2: v[(1, 2)],
        }
    }

    /// Partial transpose with respect to Bob (`p_B → −p_B`).
    pub fn partial_transpose(&self) -> Self {
        let flip = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 1.0, -1.0));
        Self {
            v: flip * self.v * flip,
        }
    }
}

/// Assembles `V = [[A, C], [Cᵀ, B]]`.
pub fn make_state(a: &Block2, b: &Block2, c: &Block2) -> Result<TwoModeState> {
    if [a, b, c].iter().any(|m| m.iter().any(|x| !x.is_finite())) {
        return Err(Error::NonFinite);
    }
    for (block, m) in [("A", a), ("B", b)] {
        let deviation = max_asymmetry2(m);
        if deviation > SYMMETRY_TOL {
            return Err(Error::NonSymmetricBlock { block, deviation });
        }
    }
    Ok(TwoModeState::assemble(a, b, c))
}

/// Amplitude transmissibilities of Alice's and Bob's lossy channels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    ta: f64,
    tb: f64,
}

impl ChannelParams {
    pub const IDENTITY: ChannelParams = ChannelParams { ta: 1.0, tb: 1.0 };

    pub fn new(ta: f64, tb: f64) -> Result<Self> {
        for t in [ta, tb] {
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::InvalidTransmissibility(t));
            }
        }
        Ok(Self { ta, tb })
    }

    pub fn ta(&self) -> f64 {
        self.ta
    }

    pub fn tb(&self) -> f64 {
        self.tb
    }

    /// Both channels let something through.
    pub fn is_partial(&self) -> bool {
        self.ta > 0.0 && self.tb > 0.0
    }

    /// Channel product: attenuating by `self` then `other`.
    pub fn compose(&self, other: &ChannelParams) -> ChannelParams {
        ChannelParams {
            ta: self.ta * other.ta,
            tb: self.tb * other.tb,
        }
    }
}

/// Local symplectic invariants of a two-mode covariance matrix and of its
/// partial transpose.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SymplecticInvariants {
    pub det_a: f64,
    pub det_b: f64,
    pub det_c: f64,
    pub det_v: f64,
    /// `det A + det B + 2 det C`
    pub delta: f64,
    /// `det A + det B − 2 det C`
    pub delta_pt: f64,
    pub nu_minus: f64,
    pub nu_plus: f64,
    pub nu_pt_minus: f64,
    pub nu_pt_plus: f64,
}

/// `ν±² = (Δ ± √(Δ² − 4 det V)) / 2`, returned as `(ν₋, ν₊)`.
///
/// `scale` bounds the magnitude of the terms summed into `Δ`. A discriminant
/// within its own rounding error is treated as zero: at a double root
/// (every pure state) the square root would otherwise turn `1e-14` of noise
/// into `1e-7` of error on `ν₋`.
fn symplectic_pair(delta: f64, det_v: f64, scale: f64) -> Result<(f64, f64)> {
    let disc = delta * delta - 4.0 * det_v;
    let noise = 64.0 * f64::EPSILON * (scale * delta.abs() + scale * scale);
    if disc < -DISCRIMINANT_TOL.max(noise) {
        return Err(Error::ComplexEigenvalue { discriminant: disc });
    }
    if disc <= noise {
        let nu = det_v.max(0.0).sqrt().sqrt();
        return Ok((nu, nu));
    }
    let root = disc.sqrt();
    let plus_sq = 0.5 * (delta + root);
    // ν₋² ν₊² = det V; dividing avoids the cancellation in Δ − √disc.
    let minus_sq = if plus_sq > 0.0 {
        det_v / plus_sq
    } else {
        0.5 * (delta - root)
    };
    Ok((minus_sq.max(0.0).sqrt(), plus_sq.max(0.0).sqrt()))
}

fn det_magnitude(m: &Block2) -> f64 {
    (m[(0, 0)] * m[(1, 1)]).abs() + (m[(0, 1)] * m[(1, 0)]).abs()
}

pub fn symplectic_invariants(state: &TwoModeState) -> Result<SymplecticInvariants> {
    let det_a = state.a().determinant();
    let det_b = state.b().determinant();
    let det_c = state.c().determinant();
    let det_v = state.matrix().determinant();
    let delta = det_a + det_b + 2.0 * det_c;
    let delta_pt = det_a + det_b - 2.0 * det_c;
    let scale = det_magnitude(&state.a()) + det_magnitude(&state.b()) + 2.0 * det_magnitude(&state.c());
    let (nu_minus, nu_plus) = symplectic_pair(delta, det_v, scale)?;
    let (nu_pt_minus, nu_pt_plus) = symplectic_pair(delta_pt, det_v, scale)?;
    Ok(SymplecticInvariants {
        det_a,
        det_b,
        det_c,
        det_v,
        delta,
        delta_pt,
        nu_minus,
        nu_plus,
        nu_pt_minus,
        nu_pt_plus,
    })
}

/// Symplectic eigenvalues `(ν₋, ν₊)` from an eigen-decomposition instead of
/// the invariant formula: the singular values of the antisymmetric matrix
/// `V^{1/2} Ω V^{1/2}`. Requires `V` positive definite.
pub fn symplectic_eigenvalues_numeric(state: &TwoModeState) -> Result<(f64, f64)> {
    let eig = SymmetricEigen::new(*state.matrix());
    let min_eigenvalue = eig.eigenvalues.min();
    if min_eigenvalue <= 0.0 {
        return Err(Error::NonPositiveDefinite { min_eigenvalue });
    }
    let root =
        eig.eigenvectors * Matrix4::from_diagonal(&eig.eigenvalues.map(f64::sqrt)) * eig.eigenvectors.transpose();
    let omega = Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    );
    let k = root * omega * root;
    let gram = k.transpose() * k;
    let mut sq: Vec<f64> = SymmetricEigen::new((gram + gram.transpose()) * 0.5)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    sq.sort_by(f64::total_cmp);
    // Each ν² appears twice.
    Ok((sq[0].max(0.0).sqrt(), sq[3].max(0.0).sqrt()))
}

/// Bona-fide test: `V > 0` and `ν₋ ≥ 1 − ε_phys`.
pub fn is_physical(state: &TwoModeState) -> Result<bool> {
    let nu_minus = symplectic_invariants(state)?.nu_minus;
    Ok(nu_minus >= 1.0 - EPS_PHYS && state.matrix().cholesky().is_some())
}

/// `V_t = L (V − I) L + I` with `L = diag(t_A, t_A, t_B, t_B)`.
pub fn apply_attenuation(state: &TwoModeState, ch: &ChannelParams) -> TwoModeState {
    let l = Matrix4::from_diagonal(&nalgebra::Vector4::new(ch.ta, ch.ta, ch.tb, ch.tb));
    let id = Matrix4::identity();
    let vt = l * (state.v - id) * l + id;
    TwoModeState { v: symmetrized(&vt) }
}

/// Phase-space rotation `[[cos θ, sin θ], [−sin θ, cos θ]]`.
pub fn rotation(theta: f64) -> Block2 {
    let (s, c) = theta.sin_cos();
    Block2::new(c, s, -s, c)
}

/// `V' = S V Sᵀ` with `S = R(θ_A) ⊕ R(θ_B)`.
pub fn local_rotation(state: &TwoModeState, theta_a: f64, theta_b: f64) -> TwoModeState {
    let mut s = Matrix4::zeros();
    s.fixed_view_mut::<2, 2>(0, 0).copy_from(&rotation(theta_a));
    s.fixed_view_mut::<2, 2>(2, 2).copy_from(&rotation(theta_b));
    TwoModeState {
        v: symmetrized(&(s * state.v * s.transpose())),
    }
}

/// Simon's criterion: entangled iff `ν̃₋ < 1`. Only meaningful for physical
/// states, so unphysical input is an error.
pub fn ppt_entangled(state: &TwoModeState) -> Result<bool> {
    let inv = symplectic_invariants(state)?;
    if inv.nu_minus < 1.0 - EPS_PHYS {
        return Err(Error::UnphysicalInput { nu_minus: inv.nu_minus });
    }
    Ok(inv.nu_pt_minus < 1.0 - EPS_W)
}

/// The asymmetric fixture
/// `V = [[2.1, 0, 1.9, 0], [0, 2.6, 0, −0.7], [1.9, 0, 2.2, 0], [0, −0.7, 0, 2.4]]`.
///
/// Its smallest symplectic eigenvalue is about 0.893, so it is *not* a
/// bona-fide covariance matrix; it is kept as given because the formulas are
/// still well defined on it.
pub fn asymmetric_fixture() -> TwoModeState {
    TwoModeState::assemble(
        &Block2::new(2.1, 0.0, 0.0, 2.6),
        &Block2::new(2.2, 0.0, 0.0, 2.4),
        &Block2::new(1.9, 0.0, 0.0, -0.7),
    )
}
