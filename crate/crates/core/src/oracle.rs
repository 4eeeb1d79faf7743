//! Numerical cross-checks of the analytic fidelity.
//!
//! [`mc_fidelity`] simulates the protocol: it samples the shared state and
//! the coherent input, applies Alice's joint measurement and Bob's
//! displacement, and fits a Gaussian to Bob's output.
//! [`grid_overlap_fidelity`] integrates the overlap of the output and target
//! Wigner functions on a uniform grid.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector2, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fidelity::{build_e, CoherentAmplitude, Gain};
use crate::gaussian::{apply_attenuation, symplectic_invariants, ChannelParams, TwoModeState};
use crate::EPS_PHYS;

pub const MIN_SAMPLES: usize = 1000;
const BLOCKS: usize = 1000;
const BOOTSTRAP_RESAMPLES: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub fidelity_hat: f64,
    pub std_error: f64,
    pub n_samples: usize,
    pub seed: u64,
    /// Sample mean of the output minus the target mean `g·(2Re α, 2Im α)`.
    pub mean_offset: [f64; 2],
    /// Sample covariance of `(q_out, p_out)`.
    pub output_covariance: [[f64; 2]; 2],
    /// Bootstrap standard error of each covariance entry.
    pub covariance_std_error: [[f64; 2]; 2],
}

/// Sufficient statistics of the output offsets `d = out − target`.
#[derive(Clone, Copy, Debug, Default)]
struct Moments {
    n: f64,
    s: [f64; 2],
    ss: [f64; 3],
}

impl Moments {
    fn push(&mut self, dq: f64, dp: f64) {
        self.n += 1.0;
        self.s[0] += dq;
        self.s[1] += dp;
        self.ss[0] += dq * dq;
        self.ss[1] += dq * dp;
        self.ss[2] += dp * dp;
    }

    fn add(&mut self, o: &Moments) {
        self.n += o.n;
        for i in 0..2 {
            self.s[i] += o.s[i];
        }
        for i in 0..3 {
            self.ss[i] += o.ss[i];
        }
    }

    fn mean(&self) -> Vector2<f64> {
        Vector2::new(self.s[0], self.s[1]) / self.n
    }

    fn covariance(&self) -> Matrix2<f64> {
        let m = self.mean();
        let raw = Matrix2::new(self.ss[0], self.ss[1], self.ss[1], self.ss[2]) / self.n;
        (raw - m * m.transpose()) * (self.n / (self.n - 1.0))
    }

    /// Gaussian overlap of the fitted output with the target coherent state.
    fn fidelity(&self) -> f64 {
        let d = self.mean();
        let m = self.covariance() + Matrix2::identity();
        let det = m.determinant();
        let inv = m.try_inverse().unwrap_or_else(|| Matrix2::from_element(f64::NAN));
        let exponent = -0.5 * (d.transpose() * inv * d)[(0, 0)];
        2.0 * exponent.exp() / det.sqrt()
    }
}

fn require_physical(state: &TwoModeState) -> Result<()> {
    let nu_minus = symplectic_invariants(state)?.nu_minus;
    if nu_minus < 1.0 - EPS_PHYS {
        return Err(Error::UnphysicalInput { nu_minus });
    }
    Ok(())
}

/// Symmetric square root of a positive semidefinite matrix.
fn symmetric_sqrt(v: &Matrix4<f64>) -> Result<Matrix4<f64>> {
    let eig = SymmetricEigen::new(*v);
    let min_eigenvalue = eig.eigenvalues.min();
    let scale = eig.eigenvalues.amax().max(1.0);
    if min_eigenvalue < -1e-12 * scale {
        return Err(Error::NonPositiveDefinite { min_eigenvalue });
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    Ok(eig.eigenvectors * Matrix4::from_diagonal(&roots) * eig.eigenvectors.transpose())
}

fn block_sizes(n: usize) -> impl Iterator<Item = usize> {
    let base = n / BLOCKS;
    let extra = n % BLOCKS;
    (0..BLOCKS).map(move |i| base + usize::from(i < extra))
}

/// Monte-Carlo estimate of the fidelity for input `α`.
///
/// The `n` samples are split into 1000 blocks, each drawn from its own
/// ChaCha8 stream of `seed`, so the result does not depend on the thread
/// count. The standard error is a bootstrap over blocks.
pub fn mc_fidelity(
    state: &TwoModeState,
    ch: &ChannelParams,
    g: Gain,
    alpha: &CoherentAmplitude,
    n: usize,
    seed: u64,
) -> Result<McEstimate> {
    require_physical(state)?;
    if n < MIN_SAMPLES {
        return Err(Error::TooFewSamples {
            min: MIN_SAMPLES,
            got: n,
        });
    }
    let root = symmetric_sqrt(apply_attenuation(state, ch).matrix())?;
    let gv = g.value();
    let input_mean = alpha.quadratures();
    let target = input_mean * gv;

    let sizes: Vec<usize> = block_sizes(n).collect();
    let blocks: Vec<Moments> = sizes
        .par_iter()
        .enumerate()
        .map(|(b, &size)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let mut m = Moments::default();
            for _ in 0..size {
                let z = Vector4::new(
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                    rng.sample(StandardNormal),
                );
                let x = root * z;
                let q_in = input_mean[0] + rng.sample::<f64, _>(StandardNormal);
                let p_in = input_mean[1] + rng.sample::<f64, _>(StandardNormal);
                let q_out = x[2] - gv * (x[0] - q_in);
                let p_out = x[3] + gv * (x[1] + p_in);
                m.push(q_out - target[0], p_out - target[1]);
            }
            m
        })
        .collect();
    let mut total = Moments::default();
    for m in &blocks {
        total.add(m);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(BLOCKS as u64);
    let mut fid = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    let mut covs = Vec::with_capacity(BOOTSTRAP_RESAMPLES);
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let mut m = Moments::default();
        for _ in 0..BLOCKS {
            m.add(&blocks[rng.random_range(0..BLOCKS)]);
        }
        fid.push(m.fidelity());
        covs.push(m.covariance());
    }

    let cov = total.covariance();
    let mut cov_se = [[0.0; 2]; 2];
    for (i, row) in cov_se.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let xs: Vec<f64> = covs.iter().map(|c| c[(i, j)]).collect();
            *cell = std_dev(&xs);
        }
    }
    let mean = total.mean();
    Ok(McEstimate {
        fidelity_hat: total.fidelity(),
        std_error: std_dev(&fid),
        n_samples: n,
        seed,
        mean_offset: [mean[0], mean[1]],
        output_covariance: [[cov[(0, 0)], cov[(0, 1)]], [cov[(1, 0)], cov[(1, 1)]]],
        covariance_std_error: cov_se,
    })
}

fn std_dev(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

/// Integration window and resolution for [`grid_overlap_fidelity`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GridSpec {
    /// Half width of the square window in units of the widest standard
    /// deviation of the two Wigner functions.
    pub half_width_sigmas: f64,
    /// Odd, so the centre node sits on the common mean.
    pub points_per_axis: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            half_width_sigmas: 8.0,
            points_per_axis: 801,
        }
    }
}

impl GridSpec {
    pub fn new(half_width_sigmas: f64, points_per_axis: usize) -> Result<Self> {
        if !(half_width_sigmas.is_finite() && half_width_sigmas > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width_sigmas}"
            )));
        }
        if points_per_axis < 3 || points_per_axis.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be odd and at least 3, got {points_per_axis}"
            )));
        }
        Ok(GridSpec {
            half_width_sigmas,
            points_per_axis,
        })
    }
}

/// Trapezoid-rule value of `4π ∫ W_β W_out dq dp`.
///
/// `W_out` has covariance `Σ_out = E − I` and mean `g·(2Re α, 2Im α)`;
/// `W_β` is the vacuum-covariance target at the same mean. Both are
/// normalized densities, hence the `4π` (two `1/2π` normalizations against
/// the `2/√det` overlap). Only `Σ_out` is checked, not the state itself, so
/// formula-level fixtures can be integrated too.
pub fn grid_overlap_fidelity(
    state: &TwoModeState,
    ch: &ChannelParams,
    g: Gain,
    alpha: &CoherentAmplitude,
    grid: &GridSpec,
) -> Result<f64> {
    let e = build_e(&apply_attenuation(state, ch), g);
    let sigma = e.matrix() - Matrix2::identity();
    let eig = SymmetricEigen::new(sigma);
    let min_eigenvalue = eig.eigenvalues.min();
    if min_eigenvalue <= 0.0 {
        return Err(Error::NonPositiveOutputCovariance { min_eigenvalue });
    }
    let sigma_inv = sigma
        .try_inverse()
        .ok_or(Error::NonPositiveOutputCovariance { min_eigenvalue })?;
    let norm_out = 1.0 / (2.0 * std::f64::consts::PI * sigma.determinant().sqrt());
    let norm_target = 1.0 / (2.0 * std::f64::consts::PI);

    let gv = g.value();
    let out_mean = alpha.quadratures() * gv;
    let target_mean = alpha.scaled(gv).quadratures();
    let half = grid.half_width_sigmas * eig.eigenvalues.max().sqrt().max(1.0);
    let n = grid.points_per_axis;
    let h = 2.0 * half / (n - 1) as f64;
    let weight = |i: usize| if i == 0 || i == n - 1 { 0.5 } else { 1.0 };

    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let q = out_mean[0] - half + h * i as f64;
            let mut acc = 0.0;
            for j in 0..n {
                let p = out_mean[1] - half + h * j as f64;
                let d = Vector2::new(q, p) - out_mean;
                let out = (-0.5 * (d.transpose() * sigma_inv * d)[(0, 0)]).exp();
                let t = Vector2::new(q, p) - target_mean;
                let target = (-0.5 * t.norm_squared()).exp();
                acc += weight(j) * out * target;
            }
            weight(i) * acc
        })
        .collect();
    let integral = rows.iter().sum::<f64>() * h * h * norm_out * norm_target;
    Ok(4.0 * std::f64::consts::PI * integral)
}
