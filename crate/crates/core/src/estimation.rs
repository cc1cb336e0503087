//! Fisher information for estimating the coherence `g = |g| e^{iθ}` from the teleported state.
//!
//! Parameters are always ordered `(θ, |g|)`. "Teleported state" means the two-mode
//! state `V + diag(y, y, 0, 0)` in the ordering `(a4, a2)`, see
//! [`teleported_state_with_noise`].

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{invalid, Error, Result};
use crate::gaussian::{quadrature_to_ladder, CoherenceParams, GaussianState, LadderCovariance, C64};
use crate::teleportation::teleported_state_with_noise;

/// Relative singular-value cutoff for the pseudo-inverse of the metric tensor.
pub const METRIC_RANK_TOL: f64 = 1e-12;
/// Largest admissible relative residual of `𝔐 x = vec(∂Σ)` after projection.
pub const METRIC_RESIDUAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FisherKind {
    Quantum,
    PnrMeasurement,
    Heterodyne,
    DvScheme,
    IntensityDifference,
}

/// 2×2 Fisher matrix for `(θ, |g|)`, per temporal mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FisherMatrix {
    pub f_theta_theta: f64,
    pub f_g_g: f64,
    pub f_theta_g: f64,
    pub kind: FisherKind,
}

impl FisherMatrix {
    pub fn new(kind: FisherKind, f_theta_theta: f64, f_g_g: f64, f_theta_g: f64) -> Self {
        Self {
            f_theta_theta,
            f_g_g,
            f_theta_g,
            kind,
        }
    }

    pub fn as_matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.f_theta_theta, self.f_theta_g, self.f_theta_g, self.f_g_g)
    }
}

/// Analytic `(∂V/∂θ, ∂V/∂|g|)` of the stellar covariance (the added noise does not
/// depend on either parameter, so these are also the teleported-state derivatives).
pub fn stellar_cov_derivatives(params: &CoherenceParams) -> [DMatrix<f64>; 2] {
    let (s, c) = params.theta.sin_cos();
    let k = 0.5 * params.epsilon;
    let kg = k * params.g_abs;
    let d_theta = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0,
            0.0,
            -kg * s,
            -kg * c, //
            0.0,
            0.0,
            kg * c,
            -kg * s, //
            -kg * s,
            kg * c,
            0.0,
            0.0, //
            -kg * c,
            -kg * s,
            0.0,
            0.0,
        ],
    );
    let d_g = DMatrix::from_row_slice(
        4,
        4,
        &[
            0.0,
            0.0,
            k * c,
            -k * s, //
            0.0,
            0.0,
            k * s,
            k * c, //
            k * c,
            k * s,
            0.0,
            0.0, //
            -k * s,
            k * c,
            0.0,
            0.0,
        ],
    );
    [d_theta, d_g]
}

/// `𝔐 = Σ ⊗ Σ + ¼ Ω ⊗ Ω` on row-major vectorised `n×n` matrices, with a
/// pseudo-inverse for solving `𝔐 x = vec(∂Σ)`.
#[derive(Debug, Clone)]
pub struct MetricTensor {
    metric: DMatrix<C64>,
    pinv: DMatrix<C64>,
    rank: usize,
}

impl MetricTensor {
    pub fn new(sigma: &LadderCovariance) -> Self {
        let s = sigma.sigma();
        let omega = sigma.omega().map(|x| C64::new(x, 0.0));
        let metric = s.kronecker(s) + omega.kronecker(&omega) * C64::new(0.25, 0.0);
        let svd = metric.clone().svd(true, true);
        let smax = svd.singular_values.max();
        let cutoff = METRIC_RANK_TOL * smax;
        let u = svd.u.as_ref().expect("requested U");
        let v_t = svd.v_t.as_ref().expect("requested Vᵀ");
        let dim = metric.nrows();
        let mut pinv = DMatrix::zeros(dim, dim);
        let mut rank = 0;
        for (k, &sv) in svd.singular_values.iter().enumerate() {
            if sv > cutoff {
                rank += 1;
                // V Σ⁺ Uᴴ
                pinv += v_t.row(k).adjoint() * u.column(k).adjoint() * C64::new(1.0 / sv, 0.0);
            }
        }
        Self { metric, pinv, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    /// Solves `𝔐 x = vec(d)`, failing if `vec(d)` has a component in the null space.
    pub fn solve(&self, d: &DMatrix<C64>) -> Result<DVector<C64>> {
        let v = vectorize(d);
        let norm = v.norm();
        if norm == 0.0 {
            return Ok(DVector::zeros(v.len()));
        }
        let x = &self.pinv * &v;
        let residual = (&self.metric * &x - &v).norm() / norm;
        if residual > METRIC_RESIDUAL_TOL {
            return Err(Error::SingularMetric(residual));
        }
        Ok(x)
    }

    /// `½ vec(d_i)ᵀ 𝔐⁻¹ vec(d_j)`; bilinear, no conjugation.
    pub fn fisher_entry(&self, d_i: &DMatrix<C64>, d_j: &DMatrix<C64>) -> Result<f64> {
        let x = self.solve(d_j)?;
        Ok(0.5 * vectorize(d_i).dot(&x).re)
    }
}

fn vectorize(m: &DMatrix<C64>) -> DVector<C64> {
    let n = m.nrows();
    DVector::from_fn(n * m.ncols(), |k, _| m[(k / n, k % n)])
}

/// Gaussian QFI for `(θ, |g|)` of a zero-mean state from the ladder covariance and its
/// derivatives.
pub fn qfi_general(sigma: &LadderCovariance, d_theta: &DMatrix<C64>, d_g: &DMatrix<C64>) -> Result<FisherMatrix> {
    let dim = sigma.sigma().nrows();
    for d in [d_theta, d_g] {
        if d.nrows() != dim || d.ncols() != dim {
            return Err(Error::Dimension(format!(
                "derivative is {}x{}, covariance is {dim}x{dim}",
                d.nrows(),
                d.ncols()
            )));
        }
    }
    let metric = MetricTensor::new(sigma);
    Ok(FisherMatrix::new(
        FisherKind::Quantum,
        metric.fisher_entry(d_theta, d_theta)?,
        metric.fisher_entry(d_g, d_g)?,
        metric.fisher_entry(d_theta, d_g)?,
    ))
}

/// [`qfi_general`] from a quadrature-ordered state and quadrature-ordered derivatives.
pub fn qfi_gaussian(state: &GaussianState, d_theta: &DMatrix<f64>, d_g: &DMatrix<f64>) -> Result<FisherMatrix> {
    if state.mean().iter().any(|&x| x != 0.0) {
        return Err(Error::NonZeroMean);
    }
    qfi_general(
        &state.to_ladder(),
        &quadrature_to_ladder(d_theta),
        &quadrature_to_ladder(d_g),
    )
}

/// QFI of the teleported state with noise `y`, via the general Gaussian formula.
pub fn qfi_teleported(params: &CoherenceParams, y: f64) -> Result<FisherMatrix> {
    let state = teleported_state_with_noise(params, y)?;
    let [d_theta, d_g] = stellar_cov_derivatives(params);
    qfi_gaussian(&state, &d_theta, &d_g)
}

/// Closed-form QFI of the teleported state.
pub fn qfi_closed_form(params: &CoherenceParams, y: f64) -> Result<FisherMatrix> {
    params.validate()?;
    if !(y.is_finite() && y >= 0.0) {
        return Err(invalid("y", format!("noise must be finite and >= 0, got {y}")));
    }
    let CoherenceParams {
        epsilon: e, g_abs: g, ..
    } = *params;
    let g2 = g * g;
    let f_tt_den = 2.0 * y + e * (2.0 + e - e * g2 + 2.0 * y);
    let f_tt = if e == 0.0 { 0.0 } else { 2.0 * e * e * g2 / f_tt_den };

    let num = 2.0
        * e
        * e
        * (-e * (2.0 + e).powi(2) + e.powi(3) * g2 * g2 - 4.0 * (1.0 + e) * (2.0 + e) * y - 4.0 * (2.0 + e) * y * y);
    let den = (e * (-1.0 + g2) - 2.0 * y)
        * (e * (-2.0 - e + e * g2) - 2.0 * (1.0 + e) * y)
        * (e * e * (-1.0 + g2) - 4.0 * (1.0 + y) - 2.0 * e * (2.0 + y));
    let f_gg = if e == 0.0 {
        0.0
    } else if den == 0.0 {
        return Err(Error::Divergent("F_|g||g|"));
    } else {
        num / den
    };
    Ok(FisherMatrix::new(FisherKind::Quantum, f_tt, f_gg, 0.0))
}

/// Weak-source asymptotics `(ε|g|², ε/(1 − |g|²))` valid for `y ≪ ε ≪ 1`.
pub fn qfi_weak_limit(params: &CoherenceParams) -> Result<(f64, f64)> {
    params.validate()?;
    let g2 = params.g_abs * params.g_abs;
    if g2 >= 1.0 {
        return Err(Error::Divergent("weak-limit F_|g||g|"));
    }
    Ok((params.epsilon * g2, params.epsilon / (1.0 - g2)))
}

/// Coefficients of the SLDs of the teleported state.
///
/// `L_|g| = (a/d)(2n₄+1) + (c/d)(2n₂+1) + (2b/d) a₄a₂† + (2b*/d) a₄†a₂ + e` and
/// `L_θ = 2p* a₄a₂† + 2p a₄†a₂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SldCoefficients {
    pub a: f64,
    pub b: C64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub p: C64,
    /// Phase delay that diagonalises `L_|g|` in the `d₁, d₂` number basis.
    pub delta_opt_g: f64,
    /// Phase delay that diagonalises `L_θ` in the `d₁, d₂` number basis.
    pub delta_opt_theta: f64,
}

pub fn sld_coefficients(params: &CoherenceParams, y: f64) -> Result<SldCoefficients> {
    params.validate()?;
    if !(y.is_finite() && y >= 0.0) {
        return Err(invalid("y", format!("noise must be finite and >= 0, got {y}")));
    }
    let CoherenceParams {
        epsilon: eps,
        g_abs: g,
        theta,
    } = *params;
    let g2 = g * g;
    let a = 2.0 * eps * eps * g * (-(1.0 + eps) * (-2.0 + eps * (-1.0 + g2)) + 2.0 * (2.0 + eps) * y);
    let b_real = eps
        * (-eps * (2.0 + eps).powi(2) + eps.powi(3) * g2 * g2
            - 4.0 * (1.0 + eps) * (2.0 + eps) * y
            - 4.0 * (2.0 + eps) * y * y);
    let b = C64::from_polar(1.0, -theta) * b_real;
    // prefactor 2ε|g|; with 2ε²|g| the SLD equation fails by a factor ε in this term
    let c = 2.0
        * eps
        * g
        * (-eps * (1.0 + eps) * (-2.0 + eps * (-1.0 + g2))
            + 2.0 * y * (2.0 + eps * (4.0 - eps * (-2.0 + g2)))
            + 4.0 * (1.0 + eps) * y * y);
    let f1 = eps * (-2.0 + eps * (-1.0 + g2)) - 2.0 * (1.0 + eps) * y;
    let f2 = eps * eps * (-1.0 + g2) - 4.0 * (1.0 + y) - 2.0 * eps * (2.0 + y);
    let f3 = eps * (-1.0 + g2) - 2.0 * y;
    let d = f1 * f2 * f3;
    if d == 0.0 || !d.is_finite() {
        return Err(Error::Divergent("SLD denominator d"));
    }
    let e = -eps * g * (1.0 / f3 + eps / f2);
    let p_den = -eps * (-2.0 + eps * (-1.0 + g2)) + 2.0 * (1.0 + eps) * y;
    let p = C64::new(0.0, eps) * params.coherence() / p_den;
    Ok(SldCoefficients {
        a,
        b,
        c,
        d,
        e,
        p,
        delta_opt_g: theta,
        delta_opt_theta: theta + FRAC_PI_2,
    })
}

impl SldCoefficients {
    /// Coefficient of `d₁†d₂` in `L_|g|` for phase delay `δ`.
    pub fn coupling_g(&self, delta: f64) -> C64 {
        let ph = C64::from_polar(1.0, delta);
        (C64::new(self.a - self.c, 0.0) + self.b * ph - self.b.conj() * ph.conj()) / self.d
    }

    /// Coefficient of `d₂†d₁` in `L_|g|`.
    pub fn coupling_g_conj(&self, delta: f64) -> C64 {
        let ph = C64::from_polar(1.0, delta);
        (C64::new(self.a - self.c, 0.0) - self.b * ph + self.b.conj() * ph.conj()) / self.d
    }

    /// Coefficient of `d₁†d₂` in `L_θ`.
    pub fn coupling_theta(&self, delta: f64) -> C64 {
        let ph = C64::from_polar(1.0, delta);
        self.p.conj() * ph - self.p * ph.conj()
    }
}

/// Leading-order (`y → 0`) value of [`SldCoefficients::coupling_g`].
pub fn coupling_g_leading_order(params: &CoherenceParams, delta: f64) -> C64 {
    let (e, g2) = (params.epsilon, params.g_abs * params.g_abs);
    let num = C64::new(0.0, 2.0 * (delta - params.theta).sin() * (2.0 + e + e * g2));
    num / ((-1.0 + g2) * (-4.0 - 4.0 * e + e * e * (-1.0 + g2)))
}

/// Leading-order classical FI of photon counting behind the phase-delayed beamsplitter.
pub fn fi_pnr_leading_order(params: &CoherenceParams, delta: f64) -> Result<FisherMatrix> {
    params.validate()?;
    let (s, c) = (params.theta - delta).sin_cos();
    let g = params.g_abs;
    let den = 1.0 - g * g * c * c;
    if den <= 0.0 {
        return Err(Error::Divergent("PNR Fisher information"));
    }
    let e = params.epsilon;
    Ok(FisherMatrix::new(
        FisherKind::PnrMeasurement,
        e * g * g * s * s / den,
        e * c * c / den,
        -e * g * s * c / den,
    ))
}

/// Mean and variance of `Ô = (d₁†d₁ − d₂†d₂)/ε` on the teleported state.
pub fn intensity_difference_stats(params: &CoherenceParams, delta: f64, y: f64) -> Result<(f64, f64)> {
    params.validate()?;
    if params.epsilon == 0.0 {
        return Err(invalid(
            "epsilon",
            "intensity-difference estimator is undefined at epsilon = 0",
        ));
    }
    if !(y.is_finite() && y >= 0.0) {
        return Err(invalid("y", format!("noise must be finite and >= 0, got {y}")));
    }
    let (e, g) = (params.epsilon, params.g_abs);
    let c = (params.theta - delta).cos();
    let var = (e + y + e * (e / 2.0 + y) - e * e * g * g / 2.0 + e * e * g * g * c * c) / (e * e);
    Ok((g * c, var))
}

/// Error-propagation information `(∂⟨Ô⟩)ᵀ(∂⟨Ô⟩)/Var(Ô)` of the intensity difference.
pub fn intensity_difference_fi(params: &CoherenceParams, delta: f64, y: f64) -> Result<FisherMatrix> {
    let (_, var) = intensity_difference_stats(params, delta, y)?;
    let (s, c) = (params.theta - delta).sin_cos();
    let d_theta = -params.g_abs * s;
    let d_g = c;
    Ok(FisherMatrix::new(
        FisherKind::IntensityDifference,
        d_theta * d_theta / var,
        d_g * d_g / var,
        d_theta * d_g / var,
    ))
}

/// Classical FI of local heterodyne detection at both telescopes (no entanglement).
pub fn heterodyne_fi(params: &CoherenceParams) -> Result<FisherMatrix> {
    params.validate()?;
    let gamma = crate::gaussian::stellar_state(params)?.cov() + DMatrix::identity(4, 4) * 0.5;
    let inv = gamma
        .try_inverse()
        .ok_or(Error::Divergent("heterodyne outcome covariance"))?;
    let [d_theta, d_g] = stellar_cov_derivatives(params);
    let a = &inv * &d_theta;
    let b = &inv * &d_g;
    Ok(FisherMatrix::new(
        FisherKind::Heterodyne,
        0.5 * (&a * &a).trace(),
        0.5 * (&b * &b).trace(),
        0.5 * (&a * &b).trace(),
    ))
}
