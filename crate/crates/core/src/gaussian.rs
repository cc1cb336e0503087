//! Gaussian states in the interleaved quadrature ordering `(q1, p1, q2, p2, ...)`.
//!
//! Quadratures are `q = (a + a†)/√2` and `p = (a − a†)/(i√2)`, so the vacuum has
//! variance `1/2` in every quadrature and the commutator matrix is `i·Ω` with
//! `Ω = ⊕ [[0, 1], [−1, 0]]`. Every routine in the crate uses this convention.
//!
//! All operations return new values; a [`GaussianState`] is never mutated in place.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{invalid, Error, Result};

pub type C64 = Complex<f64>;

/// Absolute tolerance on covariance symmetry.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Slack allowed below `1/2` for symplectic eigenvalues (accumulated roundoff).
pub const PHYSICALITY_TOL: f64 = 1e-10;

/// Source strength and complex coherence `g = |g|·e^{iθ}` of the received stellar light.
///
/// `epsilon` is the mean photon number per temporal mode summed over both telescopes;
/// each telescope receives `epsilon / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceParams {
    pub epsilon: f64,
    pub g_abs: f64,
    pub theta: f64,
}

impl CoherenceParams {
    pub fn new(epsilon: f64, g_abs: f64, theta: f64) -> Result<Self> {
        let p = Self { epsilon, g_abs, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(invalid(
                "epsilon",
                format!("must be finite and >= 0, got {}", self.epsilon),
            ));
        }
        if !(self.g_abs.is_finite() && (0.0..=1.0).contains(&self.g_abs)) {
            return Err(invalid("g_abs", format!("must lie in [0, 1], got {}", self.g_abs)));
        }
        if !self.theta.is_finite() {
            return Err(invalid("theta", "must be finite"));
        }
        Ok(())
    }

    /// The complex coherence `|g| e^{iθ}`.
    pub fn coherence(&self) -> C64 {
        C64::from_polar(self.g_abs, self.theta)
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }

    pub fn with_g_abs(self, g_abs: f64) -> Self {
        Self { g_abs, ..self }
    }

    pub fn with_epsilon(self, epsilon: f64) -> Self {
        Self { epsilon, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    Q,
    P,
}

/// Mean and variance of a measured quadrature before conditioning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomodyneMarginal {
    pub mean: f64,
    pub variance: f64,
}

/// An `n`-mode Gaussian state: mean vector and real symmetric covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl GaussianState {
    /// Builds a state, checking shape, symmetry and the uncertainty relation.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let state = Self::from_parts(mean, cov)?;
        let asym = max_asymmetry(&state.cov);
        if asym > SYMMETRY_TOL {
            return Err(Error::NotSymmetric(asym));
        }
        state.check_physical()?;
        Ok(state)
    }

    /// Shape-checked constructor without the physicality test.
    pub(crate) fn from_parts(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let dim = mean.len();
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "mean length {dim} is not a positive even number"
            )));
        }
        if cov.nrows() != dim || cov.ncols() != dim {
            return Err(Error::Dimension(format!(
                "covariance is {}x{}, expected {dim}x{dim}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        Ok(Self { mean, cov })
    }

    pub(crate) fn zero_mean(cov: DMatrix<f64>) -> Self {
        let dim = cov.nrows();
        Self {
            mean: DVector::zeros(dim),
            cov,
        }
    }

    pub fn vacuum(n_modes: usize) -> Self {
        Self::zero_mean(DMatrix::identity(2 * n_modes, 2 * n_modes) * 0.5)
    }

    pub fn n_modes(&self) -> usize {
        self.mean.len() / 2
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Mean photon number `Σ_k (V_qq + V_pp + μ_q² + μ_p²)/2 − 1/2`.
    pub fn mean_photon_number(&self) -> f64 {
        (0..self.n_modes())
            .map(|k| {
                let (q, p) = (2 * k, 2 * k + 1);
                0.5 * (self.cov[(q, q)] + self.cov[(p, p)] + self.mean[q].powi(2) + self.mean[p].powi(2)) - 0.5
            })
            .sum()
    }

    fn check_mode(&self, mode: usize) -> Result<()> {
        if mode >= self.n_modes() {
            return Err(Error::ModeOutOfRange {
                mode,
                n_modes: self.n_modes(),
            });
        }
        Ok(())
    }

    /// Symplectic eigenvalues in ascending order, one per mode.
    ///
    /// With `V = L Lᵀ` (Cholesky), `Lᵀ Ω L` is real antisymmetric with eigenvalues
    /// `±iν_k`; the Hermitian matrix `i Lᵀ Ω L` then has eigenvalues `±ν_k`. This keeps
    /// the absolute error near `ε_mach·‖V‖` even for strongly squeezed states.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let n = self.n_modes();
        let chol = symmetrized(&self.cov).cholesky().ok_or_else(|| {
            let min = SymmetricEigen::new(symmetrized(&self.cov)).eigenvalues.min();
            Error::Unphysical(min.min(0.0))
        })?;
        let l = chol.l();
        let a = l.transpose() * symplectic_form(n) * &l;
        let h = a.map(|x| C64::new(0.0, x));
        let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        // the upper half holds +ν_k, mirrored by −ν_k in the lower half
        Ok((0..n).map(|k| 0.5 * (ev[n + k] - ev[n - 1 - k])).collect())
    }

    /// Slack used by [`check_physical`](Self::check_physical).
    ///
    /// Storing a covariance in `f64` perturbs `ν²` by roughly `ε_mach·‖V‖²`, which for
    /// `r = 5` squeezing (`‖V‖ ≈ 10⁴`) already exceeds `1e-10`. The fixed tolerance is
    /// widened by that representation floor; for `‖V‖ ≲ 10` it is `PHYSICALITY_TOL`.
    pub fn physicality_tolerance(&self) -> f64 {
        let norm = self.cov.amax();
        PHYSICALITY_TOL + 16.0 * f64::EPSILON * norm * norm
    }

    /// Fails unless every symplectic eigenvalue is at least `1/2 − physicality_tolerance()`.
    pub fn check_physical(&self) -> Result<()> {
        let nu = self.symplectic_eigenvalues()?;
        let smallest = nu[0];
        if smallest < 0.5 - self.physicality_tolerance() {
            return Err(Error::Unphysical(smallest));
        }
        Ok(())
    }

    pub fn is_physical(&self) -> bool {
        self.check_physical().is_ok()
    }

    /// `x → S x`, `V → S V Sᵀ`.
    pub fn apply_symplectic(&self, s: &DMatrix<f64>) -> Result<Self> {
        let dim = self.mean.len();
        if s.nrows() != dim || s.ncols() != dim {
            return Err(Error::Dimension(format!(
                "symplectic matrix is {}x{}, state dimension {dim}",
                s.nrows(),
                s.ncols()
            )));
        }
        Ok(Self {
            mean: s * &self.mean,
            cov: symmetrized(&(s * &self.cov * s.transpose())),
        })
    }

    /// Two-mode beamsplitter `a_i → t a_i + r e^{iφ} a_j`, `a_j → −r e^{−iφ} a_i + t a_j`
    /// with amplitude transmittance `t` and `r = √(1 − t²)`.
    pub fn beamsplitter(&self, mode_i: usize, mode_j: usize, transmittance: f64, phase: f64) -> Result<Self> {
        self.check_mode(mode_i)?;
        self.check_mode(mode_j)?;
        if mode_i == mode_j {
            return Err(invalid("mode_j", "beamsplitter modes must be distinct"));
        }
        if !(0.0..=1.0).contains(&transmittance) {
            return Err(invalid(
                "transmittance",
                format!("must lie in [0, 1], got {transmittance}"),
            ));
        }
        let s = beamsplitter_symplectic(self.n_modes(), mode_i, mode_j, transmittance, phase);
        self.apply_symplectic(&s)
    }

    /// Balanced beamsplitter: `a_i → (a_i + a_j)/√2`, `a_j → (a_j − a_i)/√2`.
    pub fn balanced_beamsplitter(&self, mode_i: usize, mode_j: usize) -> Result<Self> {
        self.beamsplitter(mode_i, mode_j, std::f64::consts::FRAC_1_SQRT_2, 0.0)
    }

    /// Phase delay `a → e^{iδ} a` on one mode.
    pub fn phase(&self, mode: usize, delta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        self.apply_symplectic(&phase_symplectic(self.n_modes(), mode, delta))
    }

    pub fn displace(&self, mode: usize, dq: f64, dp: f64) -> Result<Self> {
        self.check_mode(mode)?;
        let mut out = self.clone();
        out.mean[2 * mode] += dq;
        out.mean[2 * mode + 1] += dp;
        Ok(out)
    }

    /// Pure-loss channel with power transmissivity `eta` on one mode.
    pub fn loss(&self, mode: usize, eta: f64) -> Result<Self> {
        self.check_mode(mode)?;
        if !(0.0..=1.0).contains(&eta) {
            return Err(invalid(
                "eta",
                format!("power transmissivity must lie in [0, 1], got {eta}"),
            ));
        }
        let k = eta.sqrt();
        let mut out = self.clone();
        for idx in [2 * mode, 2 * mode + 1] {
            out.mean[idx] *= k;
            out.cov.row_mut(idx).scale_mut(k);
            out.cov.column_mut(idx).scale_mut(k);
            out.cov[(idx, idx)] += 0.5 * (1.0 - eta);
        }
        Ok(out)
    }

    /// Homodyne measurement of one quadrature of `mode` with the given outcome.
    ///
    /// Returns the posterior of the remaining modes (the measured mode is removed)
    /// together with the prior marginal of the measured quadrature.
    pub fn condition_on_homodyne(
        &self,
        mode: usize,
        quadrature: Quadrature,
        outcome: f64,
    ) -> Result<(Self, HomodyneMarginal)> {
        self.check_mode(mode)?;
        if self.n_modes() < 2 {
            return Err(invalid("mode", "cannot measure the only mode of a state"));
        }
        let k = 2 * mode
            + match quadrature {
                Quadrature::Q => 0,
                Quadrature::P => 1,
            };
        let marginal = HomodyneMarginal {
            mean: self.mean[k],
            variance: self.cov[(k, k)],
        };
        let keep: Vec<usize> = (0..self.mean.len()).filter(|&i| i / 2 != mode).collect();
        let dim = keep.len();
        let shift = outcome - marginal.mean;
        let mean = DVector::from_fn(dim, |a, _| {
            let i = keep[a];
            self.mean[i] + self.cov[(i, k)] / marginal.variance * shift
        });
        let cov = DMatrix::from_fn(dim, dim, |a, b| {
            let (i, j) = (keep[a], keep[b]);
            self.cov[(i, j)] - self.cov[(i, k)] * self.cov[(k, j)] / marginal.variance
        });
        Ok((
            Self {
                mean,
                cov: symmetrized(&cov),
            },
            marginal,
        ))
    }

    /// Marginal state of the listed modes, in the listed order.
    pub fn select_modes(&self, modes: &[usize]) -> Result<Self> {
        for &m in modes {
            self.check_mode(m)?;
        }
        let idx: Vec<usize> = modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        let dim = idx.len();
        Self::from_parts(
            DVector::from_fn(dim, |a, _| self.mean[idx[a]]),
            DMatrix::from_fn(dim, dim, |a, b| self.cov[(idx[a], idx[b])]),
        )
    }

    /// Product state `self ⊗ other`; the modes of `other` follow those of `self`.
    pub fn product(&self, other: &Self) -> Self {
        let (d1, d2) = (self.mean.len(), other.mean.len());
        let mut cov = DMatrix::zeros(d1 + d2, d1 + d2);
        cov.view_mut((0, 0), (d1, d1)).copy_from(&self.cov);
        cov.view_mut((d1, d1), (d2, d2)).copy_from(&other.cov);
        let mut mean = DVector::zeros(d1 + d2);
        mean.rows_mut(0, d1).copy_from(&self.mean);
        mean.rows_mut(d1, d2).copy_from(&other.mean);
        Self { mean, cov }
    }

    pub fn to_ladder(&self) -> LadderCovariance {
        LadderCovariance::from_quadrature(&self.cov)
    }
}

/// Covariance in the ladder ordering `(a1, a1†, a2, a2†, ...)`:
/// `Σ_ij = ½⟨a_i a_j + a_j a_i⟩` for a zero-mean state.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderCovariance {
    sigma: DMatrix<C64>,
    omega: DMatrix<f64>,
}

impl LadderCovariance {
    pub fn from_quadrature(cov: &DMatrix<f64>) -> Self {
        let n_modes = cov.nrows() / 2;
        Self {
            sigma: quadrature_to_ladder(cov),
            omega: symplectic_form(n_modes),
        }
    }

    /// Inverse basis change; the imaginary part is discarded (it vanishes for any
    /// `Σ` obtained from a real covariance).
    pub fn to_quadrature(&self) -> DMatrix<f64> {
        let n_modes = self.n_modes();
        let w = ladder_basis(n_modes)
            .try_inverse()
            .expect("ladder basis is unitary up to scale");
        (&w * &self.sigma * w.transpose()).map(|z| z.re)
    }

    pub fn n_modes(&self) -> usize {
        self.sigma.nrows() / 2
    }

    pub fn sigma(&self) -> &DMatrix<C64> {
        &self.sigma
    }

    /// `Ω = ⊕ iσ_y`, equal to the commutator matrix `[a_i, a_j]`.
    pub fn omega(&self) -> &DMatrix<f64> {
        &self.omega
    }
}

/// `Ω = ⊕_k [[0, 1], [−1, 0]]`.
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Per-mode map `(a, a†)ᵀ = U (q, p)ᵀ`, `U = [[1, i], [1, −i]]/√2`.
fn ladder_basis(n_modes: usize) -> DMatrix<C64> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let mut u = DMatrix::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        let (q, p) = (2 * k, 2 * k + 1);
        u[(q, q)] = C64::new(h, 0.0);
        u[(q, p)] = C64::new(0.0, h);
        u[(p, q)] = C64::new(h, 0.0);
        u[(p, p)] = C64::new(0.0, -h);
    }
    u
}

/// Transforms any real quadrature-ordered matrix (covariance or its derivative)
/// into the ladder ordering: `M → U M Uᵀ`.
pub fn quadrature_to_ladder(m: &DMatrix<f64>) -> DMatrix<C64> {
    let u = ladder_basis(m.nrows() / 2);
    &u * m.map(|x| C64::new(x, 0.0)) * u.transpose()
}

/// Embeds a passive linear-optics unitary acting on `modes` into a `2n×2n` symplectic.
///
/// `a_k → Σ_l U_kl a_l` becomes `q → X q − Y p`, `p → Y q + X p` with `U = X + iY`.
pub fn passive_symplectic(n_modes: usize, modes: &[usize], unitary: &DMatrix<C64>) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n_modes, 2 * n_modes);
    for (a, &ma) in modes.iter().enumerate() {
        for (b, &mb) in modes.iter().enumerate() {
            let u = unitary[(a, b)];
            s[(2 * ma, 2 * mb)] = u.re;
            s[(2 * ma, 2 * mb + 1)] = -u.im;
            s[(2 * ma + 1, 2 * mb)] = u.im;
            s[(2 * ma + 1, 2 * mb + 1)] = u.re;
        }
    }
    s
}

pub fn beamsplitter_symplectic(n_modes: usize, i: usize, j: usize, transmittance: f64, phase: f64) -> DMatrix<f64> {
    let t = transmittance;
    let r = (1.0 - t * t).max(0.0).sqrt();
    let u = DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(t, 0.0),
            C64::from_polar(r, phase),
            -C64::from_polar(r, -phase),
            C64::new(t, 0.0),
        ],
    );
    passive_symplectic(n_modes, &[i, j], &u)
}

pub fn phase_symplectic(n_modes: usize, mode: usize, delta: f64) -> DMatrix<f64> {
    let u = DMatrix::from_element(1, 1, C64::from_polar(1.0, delta));
    passive_symplectic(n_modes, &[mode], &u)
}

/// Two-mode covariance of the received stellar thermal light.
///
/// Diagonal `(1+ε)/2`; the cross block is `(ε|g|/2)·[[cos θ, −sin θ], [sin θ, cos θ]]`.
pub fn stellar_state(params: &CoherenceParams) -> Result<GaussianState> {
    params.validate()?;
    Ok(GaussianState::zero_mean(stellar_cov(params)))
}

pub(crate) fn stellar_cov(params: &CoherenceParams) -> DMatrix<f64> {
    let CoherenceParams {
        epsilon: e,
        g_abs: g,
        theta,
    } = *params;
    let (s, c) = theta.sin_cos();
    let d = 0.5 * (1.0 + e);
    let x = 0.5 * e * g;
    DMatrix::from_row_slice(
        4,
        4,
        &[
            d,
            0.0,
            x * c,
            -x * s, //
            0.0,
            d,
            x * s,
            x * c, //
            x * c,
            x * s,
            d,
            0.0, //
            -x * s,
            x * c,
            0.0,
            d,
        ],
    )
}

/// Ideal two-mode squeezed vacuum, `a3 → a3 cosh r − a4† sinh r` (and symmetric),
/// so `q3, q4` are anti-correlated and `p3, p4` correlated.
pub fn two_mode_squeezed_vacuum(r: f64) -> Result<GaussianState> {
    if !(r.is_finite() && r >= 0.0) {
        return Err(invalid("r", format!("squeezing must be finite and >= 0, got {r}")));
    }
    let (ch, sh) = (r.cosh(), r.sinh());
    let s = DMatrix::from_row_slice(
        4,
        4,
        &[
            ch, 0.0, -sh, 0.0, //
            0.0, ch, 0.0, sh, //
            -sh, 0.0, ch, 0.0, //
            0.0, sh, 0.0, ch,
        ],
    );
    GaussianState::vacuum(2).apply_symplectic(&s)
}

/// Matrix `F` of the Wigner exponent `xᵀ F x = C(q3²+p3²+q4²+p4²) + 2S(q3q4 − p3p4)`
/// of the two-mode squeezed state after two channels of amplitude transmissivity `t`.
pub fn lossy_tms_form(r: f64, t: f64) -> Result<DMatrix<f64>> {
    let (c, s, _) = lossy_tms_coefficients(r, t)?;
    Ok(DMatrix::from_row_slice(
        4,
        4,
        &[
            c, 0.0, s, 0.0, //
            0.0, c, 0.0, -s, //
            s, 0.0, c, 0.0, //
            0.0, -s, 0.0, c,
        ],
    ))
}

/// `(C, S, N)` of the lossy two-mode squeezed Wigner function.
fn lossy_tms_coefficients(r: f64, t: f64) -> Result<(f64, f64, f64)> {
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
    let sh2 = r.sinh().powi(2);
    let n = 1.0 + 4.0 * t2 * (1.0 - t2) * sh2;
    // cosh 2r − 1 = 2 sinh² r
    let c = (1.0 + 2.0 * t2 * sh2) / n;
    let s = t2 * (2.0 * r).sinh() / n;
    Ok((c, s, n))
}

/// Lossy two-mode squeezed state, `cov = ½ F⁻¹`.
///
/// `F` splits into a `q` block `[[C, S], [S, C]]` and a `p` block `[[C, −S], [−S, C]]`,
/// both with determinant `C² − S² = 1/N`; the inverse uses that identity instead of
/// forming the difference numerically.
pub fn lossy_tms_state(r: f64, t: f64) -> Result<GaussianState> {
    let (c, s, n) = lossy_tms_coefficients(r, t)?;
    let h = 0.5 * n;
    let cov = DMatrix::from_row_slice(
        4,
        4,
        &[
            h * c,
            0.0,
            -h * s,
            0.0, //
            0.0,
            h * c,
            0.0,
            h * s, //
            -h * s,
            0.0,
            h * c,
            0.0, //
            0.0,
            h * s,
            0.0,
            h * c,
        ],
    );
    Ok(GaussianState::zero_mean(cov))
}

pub(crate) fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}
