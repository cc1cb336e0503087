//! CV teleportation of the telescope-A stellar mode to telescope B.
//!
//! Mode labels follow the protocol: `a1`, `a2` are the stellar modes at telescopes A
//! and B, `a3`, `a4` the halves of the distributed two-mode squeezed state (A and B).
//! `a1` and `a3` meet on a balanced beamsplitter with outputs
//! `a5 = (a1 + a3)/√2`, `a6 = (a3 − a1)/√2`; `q5` and `p6` are measured and fed
//! forward to `a4`. Outputs are ordered `(teleported a4, stationary a2)`.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector, Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::gaussian::{lossy_tms_state, stellar_cov, stellar_state, CoherenceParams, GaussianState};
use crate::table::{fmt_num, Table};

/// Samples per RNG stream in [`simulate_teleportation`].
pub const SAMPLE_CHUNK: usize = 1 << 16;

/// Squeezing source and channel, reduced to the effective squeezing `r'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Source squeezing.
    pub r: f64,
    /// Amplitude transmissivity of each arm.
    pub t: f64,
    /// Effective squeezing, `e^{−2r'} = 1 − T² + e^{−2r} T²`.
    pub r_eff: f64,
    /// Added noise `2 e^{−2r'}`.
    pub y: f64,
}

impl LinkParams {
    /// Lossless link whose effective squeezing is exactly `r_eff`.
    pub fn from_effective_squeezing(r_eff: f64) -> Result<Self> {
        effective_squeezing(r_eff, 1.0)
    }

    /// `e^{−2r'}`, i.e. `y / 2`.
    pub fn residual_variance(&self) -> f64 {
        0.5 * self.y
    }
}

pub fn effective_squeezing(r: f64, t: f64) -> Result<LinkParams> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(invalid("r", format!("squeezing must be finite and >= 0, got {r}")));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(invalid(
            "t",
            format!("amplitude transmissivity must lie in [0, 1], got {t}"),
        ));
    }
    let t2 = t * t;
    let residual = 1.0 - t2 + (-2.0 * r).exp() * t2;
    Ok(LinkParams {
        r,
        t,
        r_eff: -0.5 * residual.ln(),
        y: 2.0 * residual,
    })
}

/// Closed-form teleported state: `V + diag(y, y, 0, 0)` with `y = 2e^{−2r'}`.
pub fn teleported_state(params: &CoherenceParams, link: &LinkParams) -> Result<GaussianState> {
    teleported_state_with_noise(params, link.y)
}

/// Teleported state with an explicit added-noise level `y ≥ 0`; `y = 0` is ideal teleportation.
pub fn teleported_state_with_noise(params: &CoherenceParams, y: f64) -> Result<GaussianState> {
    if !(y.is_finite() && y >= 0.0) {
        return Err(invalid("y", format!("noise must be finite and >= 0, got {y}")));
    }
    let st = stellar_state(params)?;
    let mut cov = st.cov().clone();
    cov[(0, 0)] += y;
    cov[(1, 1)] += y;
    Ok(GaussianState::zero_mean(cov))
}

/// Linear map from the 8 input quadratures `(a1, a2, a3, a4)` to the corrected
/// outputs `(q4, p4, q2, p2)` under unity-gain feedforward.
fn protocol_map() -> DMatrix<f64> {
    // q5 = (q1 + q3)/√2 and p6 = (p3 − p1)/√2, so
    // q4 + √2 q5 = q4 + q1 + q3 and p4 − √2 p6 = p4 + p1 − p3.
    let mut m = DMatrix::zeros(4, 8);
    for (row, col, v) in [
        (0, 6, 1.0),
        (0, 0, 1.0),
        (0, 4, 1.0),
        (1, 7, 1.0),
        (1, 1, 1.0),
        (1, 5, -1.0),
        (2, 2, 1.0),
        (3, 3, 1.0),
    ] {
        m[(row, col)] = v;
    }
    m
}

fn joint_input(params: &CoherenceParams, r: f64, t: f64) -> Result<GaussianState> {
    Ok(stellar_state(params)?.product(&lossy_tms_state(r, t)?))
}

/// Exact output covariance of the sampled protocol, obtained by propagating the
/// joint input covariance through the measurement-and-feedforward map.
pub fn protocol_covariance(params: &CoherenceParams, r: f64, t: f64) -> Result<DMatrix<f64>> {
    let m = protocol_map();
    let joint = joint_input(params, r, t)?;
    Ok(&m * joint.cov() * m.transpose())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportSampleReport {
    pub n_samples: usize,
    pub seed: u64,
    pub empirical_mean: DVector<f64>,
    pub mean_stderr: DVector<f64>,
    pub empirical_cov: DMatrix<f64>,
    pub cov_stderr: DMatrix<f64>,
    /// `V + diag(y, y, 0, 0)` from [`teleported_state`].
    pub target_cov: DMatrix<f64>,
    /// Exact covariance of the simulated protocol, see [`protocol_covariance`].
    pub protocol_cov: DMatrix<f64>,
    /// `max |empirical − target|` over covariance entries.
    pub max_abs_deviation: f64,
}

impl TeleportSampleReport {
    /// Largest `|empirical − reference| / stderr` over covariance entries.
    pub fn max_z_score(&self, reference: &DMatrix<f64>) -> f64 {
        self.empirical_cov
            .iter()
            .zip(reference.iter())
            .zip(self.cov_stderr.iter())
            .map(|((e, r), s)| (e - r).abs() / s)
            .fold(0.0, f64::max)
    }

    pub fn max_z_target(&self) -> f64 {
        self.max_z_score(&self.target_cov)
    }

    pub fn max_z_protocol(&self) -> f64 {
        self.max_z_score(&self.protocol_cov)
    }

    pub fn max_z_mean(&self) -> f64 {
        self.empirical_mean
            .iter()
            .zip(self.mean_stderr.iter())
            .map(|(m, s)| m.abs() / s)
            .fold(0.0, f64::max)
    }

    /// Rows `entry,target,empirical,stderr,protocol`; entries are `cov[i][j]` for
    /// `i ≤ j` followed by `mean[i]`.
    pub fn to_table(&self) -> Table {
        const LABELS: [&str; 4] = ["q4", "p4", "q2", "p2"];
        let mut t = Table::new(["entry", "target", "empirical", "stderr", "protocol"]);
        for (i, li) in LABELS.iter().enumerate() {
            for (j, lj) in LABELS.iter().enumerate().skip(i) {
                t.push([
                    format!("cov[{li}][{lj}]"),
                    fmt_num(self.target_cov[(i, j)]),
                    fmt_num(self.empirical_cov[(i, j)]),
                    fmt_num(self.cov_stderr[(i, j)]),
                    fmt_num(self.protocol_cov[(i, j)]),
                ]);
            }
        }
        for (i, li) in LABELS.iter().enumerate() {
            t.push([
                format!("mean[{li}]"),
                "0".to_string(),
                fmt_num(self.empirical_mean[i]),
                fmt_num(self.mean_stderr[i]),
                "0".to_string(),
            ]);
        }
        t
    }
}

/// Samples the Wigner function of `stellar ⊗ lossy TMS`, runs the homodyne
/// measurement and feedforward on every sample, and compares the output statistics
/// with the closed form.
///
/// Samples are drawn in chunks of [`SAMPLE_CHUNK`]; chunk `k` uses a ChaCha8 stream
/// `k` seeded with `seed`, so the report depends only on `(seed, n_samples)`.
pub fn simulate_teleportation(
    params: &CoherenceParams,
    r: f64,
    t: f64,
    n_samples: usize,
    seed: u64,
) -> Result<TeleportSampleReport> {
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be at least 1"));
    }
    let link = effective_squeezing(r, t)?;
    params.validate()?;
    let star_l = cholesky_factor(&stellar_cov(params));
    let tms_l = cholesky_factor(lossy_tms_state(r, t)?.cov());

    let n_chunks = n_samples.div_ceil(SAMPLE_CHUNK);
    let chunks: Vec<Vec<Vector4<f64>>> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let len = SAMPLE_CHUNK.min(n_samples - chunk * SAMPLE_CHUNK);
            (0..len)
                .map(|_| {
                    let star = star_l * normal4(&mut rng);
                    let tms = tms_l * normal4(&mut rng);
                    feedforward(&star, &tms)
                })
                .collect()
        })
        .collect();

    let n = n_samples as f64;
    let mean = ordered_sum(&chunks, Vector4::zeros(), |x| *x) / n;
    let cov = ordered_sum(&chunks, Matrix4::zeros(), |x| (x - mean) * (x - mean).transpose()) / n;
    // Var[(x_i − μ_i)(x_j − μ_j)] for the standard error of each covariance entry.
    let fourth = ordered_sum(&chunks, Matrix4::zeros(), |x| {
        let p = (x - mean) * (x - mean).transpose() - cov;
        p.component_mul(&p)
    }) / n;

    let target_cov = teleported_state(params, &link)?.cov().clone();
    let empirical_cov = DMatrix::from_fn(4, 4, |i, j| cov[(i, j)]);
    let max_abs_deviation = (&empirical_cov - &target_cov).amax();
    Ok(TeleportSampleReport {
        n_samples,
        seed,
        empirical_mean: DVector::from_fn(4, |i, _| mean[i]),
        mean_stderr: DVector::from_fn(4, |i, _| (cov[(i, i)] / n).sqrt()),
        cov_stderr: DMatrix::from_fn(4, 4, |i, j| (fourth[(i, j)] / n).sqrt()),
        empirical_cov,
        target_cov,
        protocol_cov: protocol_covariance(params, r, t)?,
        max_abs_deviation,
    })
}

/// Sums `f` over all samples with a summation order fixed by the chunk layout,
/// so the result does not depend on the thread pool.
fn ordered_sum<T, F>(chunks: &[Vec<Vector4<f64>>], zero: T, f: F) -> T
where
    T: Copy + Send + Sync + std::ops::Add<Output = T>,
    F: Fn(&Vector4<f64>) -> T + Sync,
{
    let partial: Vec<T> = chunks
        .par_iter()
        .map(|c| c.iter().fold(zero, |acc, x| acc + f(x)))
        .collect();
    partial.into_iter().fold(zero, |acc, x| acc + x)
}

fn cholesky_factor(cov: &DMatrix<f64>) -> Matrix4<f64> {
    let m = Matrix4::from_fn(|i, j| cov[(i, j)]);
    m.cholesky()
        .expect("validated Gaussian covariance is positive definite")
        .l()
}

fn normal4(rng: &mut ChaCha8Rng) -> Vector4<f64> {
    Vector4::from_fn(|_, _| StandardNormal.sample(rng))
}

/// `star = (q1, p1, q2, p2)`, `tms = (q3, p3, q4, p4)` → `(q4', p4', q2, p2)`.
fn feedforward(star: &Vector4<f64>, tms: &Vector4<f64>) -> Vector4<f64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let q5 = h * (star[0] + tms[0]);
    let p6 = h * (tms[1] - star[1]);
    Vector4::new(tms[2] + SQRT_2 * q5, tms[3] - SQRT_2 * p6, star[2], star[3])
}
