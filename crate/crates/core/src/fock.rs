//! Truncated Fock-space oracle for two-mode Gaussian states.
//!
//! Basis states `|m, n⟩` with `m, n ≤ cutoff` are indexed by `m·(cutoff+1) + n`;
//! `m` counts photons in mode 0 and `n` in mode 1.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{invalid, Error, Result};
use crate::estimation::{qfi_closed_form, sld_coefficients, FisherKind, FisherMatrix};
use crate::gaussian::{stellar_state, CoherenceParams, GaussianState, C64};
use crate::table::{fmt_num, Table};
use crate::teleportation::teleported_state_with_noise;

/// Tail-mass budget used when none is given.
pub const DEFAULT_TAIL_BUDGET: f64 = 1e-6;
/// Target of [`default_cutoff`].
pub const DEFAULT_CUTOFF_TAIL: f64 = 1e-8;
/// Largest cutoff [`default_cutoff`] will return.
pub const MAX_CUTOFF: usize = 16;
/// Outcomes with smaller probability are left out of Fisher-information sums.
pub const P_FLOOR: f64 = 1e-15;
pub const DEFAULT_FD_STEP: f64 = 1e-5;
/// Largest negative eigenvalue of `V − ½I` still treated as zero.
pub const P_FUNCTION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    pub cutoff: usize,
    pub matrix: DMatrix<C64>,
    /// `1 − tr ρ` for density operators.
    pub tail_mass: f64,
}

impl FockOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn index(&self, m: usize, n: usize) -> usize {
        m * (self.cutoff + 1) + n
    }

    pub fn element(&self, m: usize, n: usize, m2: usize, n2: usize) -> C64 {
        self.matrix[(self.index(m, n), self.index(m2, n2))]
    }

    pub fn trace(&self) -> f64 {
        self.matrix.trace().re
    }

    /// Largest `|ρ − ρ†|` entry.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).camax()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(h).eigenvalues.min()
    }

    /// `tr(ρ A)`.
    pub fn expectation(&self, op: &DMatrix<C64>) -> C64 {
        (&self.matrix * op).trace()
    }

    /// `⟨m, n|ρ|m, n⟩` as a `(cutoff+1)×(cutoff+1)` table.
    pub fn number_distribution(&self) -> DMatrix<f64> {
        let d = self.cutoff + 1;
        DMatrix::from_fn(d, d, |m, n| self.element(m, n, m, n).re)
    }
}

/// Single-mode annihilation operator on `{|0⟩, …, |cutoff⟩}`.
pub fn annihilation(cutoff: usize) -> DMatrix<C64> {
    let d = cutoff + 1;
    DMatrix::from_fn(d, d, |i, j| {
        if j == i + 1 {
            C64::new((j as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Annihilation operators `(a_0, a_1)` of the two modes.
pub fn two_mode_annihilation(cutoff: usize) -> (DMatrix<C64>, DMatrix<C64>) {
    let a = annihilation(cutoff);
    let id = DMatrix::<C64>::identity(cutoff + 1, cutoff + 1);
    (a.kronecker(&id), id.kronecker(&a))
}

/// Upper bound on the probability mass outside the truncated space.
///
/// Mode `k` is dominated by a thermal state with mean `n_k = λ_max(V_k) − ½`: by
/// Anderson's inequality the P-function amplitude `|α|` of the true state is
/// stochastically smaller, and `P(m > c)` grows with `|α|`. A union bound over the
/// two modes gives `Σ_k (n_k/(1+n_k))^{c+1}`.
pub fn tail_bound(state: &GaussianState, cutoff: usize) -> f64 {
    (0..state.n_modes())
        .map(|k| {
            let block = state.cov().view((2 * k, 2 * k), (2, 2)).into_owned();
            let n = (SymmetricEigen::new(block).eigenvalues.max() - 0.5).max(0.0);
            (n / (1.0 + n)).powi(cutoff as i32 + 1)
        })
        .sum()
}

/// Smallest cutoff whose [`tail_bound`] is at most `DEFAULT_CUTOFF_TAIL`.
pub fn default_cutoff(state: &GaussianState) -> Result<usize> {
    (0..=MAX_CUTOFF)
        .find(|&c| tail_bound(state, c) <= DEFAULT_CUTOFF_TAIL)
        .ok_or(Error::TailBudget {
            tail: tail_bound(state, MAX_CUTOFF),
            budget: DEFAULT_CUTOFF_TAIL,
        })
}

/// Density matrix of a zero-mean two-mode Gaussian state with a non-negative P-function.
///
/// `ρ = ∫ P(α) |α⟩⟨α| d²α` with `P` Gaussian of covariance `V − ½I`. The matrix
/// elements are `Z·E[α₁^m α₂^n ᾱ₁^m' ᾱ₂^n'] / √(m! n! m'! n'!)` under the Gaussian
/// `P(α) e^{−|α|²}`, evaluated with a normalised Isserlis recursion.
pub fn gaussian_to_fock(state: &GaussianState, cutoff: usize) -> Result<FockOperator> {
    if state.n_modes() != 2 {
        return Err(Error::Dimension(format!(
            "expected a 2-mode state, got {} modes",
            state.n_modes()
        )));
    }
    if state.mean().iter().any(|&x| x != 0.0) {
        return Err(Error::NonZeroMean);
    }
    let half = DMatrix::<f64>::identity(4, 4) * 0.5;
    let classical = state.cov() - &half;
    let min = SymmetricEigen::new(classical.clone()).eigenvalues.min();
    if min < -P_FUNCTION_TOL {
        return Err(Error::NoPFunction(min));
    }
    let gamma = state.cov() + &half;
    let det = gamma.determinant();
    let gamma_inv = gamma.try_inverse().ok_or(Error::NoPFunction(min))?;
    // covariance of u = x/√2 under P(α)e^{−|α|²}
    let k = &classical * gamma_inv * 0.5;
    let z = 1.0 / det.sqrt();

    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    let slots = [
        [one, i, zero, zero],
        [zero, zero, one, i],
        [one, -i, zero, zero],
        [zero, zero, one, -i],
    ];
    let kc = k.map(|x| C64::new(x, 0.0));
    let mut s = [[zero; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            let mut acc = zero;
            for r in 0..4 {
                for c in 0..4 {
                    acc += slots[a][r] * kc[(r, c)] * slots[b][c];
                }
            }
            s[a][b] = acc;
        }
    }

    let d = cutoff + 1;
    let stride = [d * d * d, d * d, d, 1];
    let mut r = vec![zero; d * d * d * d];
    r[0] = one;
    let sqrt: Vec<f64> = (0..=d).map(|n| (n as f64).sqrt()).collect();
    for flat in 1..r.len() {
        let idx = [
            flat / stride[0],
            (flat / stride[1]) % d,
            (flat / stride[2]) % d,
            flat % d,
        ];
        // lower the first non-zero slot: R(k + e_a) = Σ_b S_ab √k_b R(k − e_b) / √(k_a + 1)
        let a = (0..4).find(|&a| idx[a] > 0).expect("flat > 0");
        let base = flat - stride[a];
        let mut kk = idx;
        kk[a] -= 1;
        let mut acc = zero;
        for b in 0..4 {
            if kk[b] > 0 {
                acc += s[a][b] * sqrt[kk[b]] * r[base - stride[b]];
            }
        }
        r[flat] = acc / sqrt[kk[a] + 1];
    }

    let dim = d * d;
    let matrix = DMatrix::from_fn(dim, dim, |row, col| {
        let (m1, m2) = (row / d, row % d);
        let (n1, n2) = (col / d, col % d);
        r[m1 * stride[0] + m2 * stride[1] + n1 * stride[2] + n2] * z
    });
    let tail_mass = 1.0 - matrix.trace().re;
    Ok(FockOperator {
        cutoff,
        matrix,
        tail_mass,
    })
}

/// Photon-count distribution at the outputs `d₁, d₂` of the phase-delayed interferometer.
#[derive(Debug, Clone, PartialEq)]
pub struct PnrDistribution {
    /// `probs[(m, n)] = P(m photons in d₁, n in d₂)`.
    pub probs: DMatrix<f64>,
    pub delta: f64,
    pub params: CoherenceParams,
    pub y: f64,
    pub tail_mass: f64,
}

impl PnrDistribution {
    pub fn cutoff(&self) -> usize {
        self.probs.nrows() - 1
    }

    pub fn total(&self) -> f64 {
        self.probs.sum()
    }

    pub fn mean_photon_number(&self) -> f64 {
        self.weighted(|m, n| (m + n) as f64)
    }

    /// `⟨(n₁ − n₂)/ε⟩`.
    pub fn intensity_difference_mean(&self) -> f64 {
        self.weighted(|m, n| m as f64 - n as f64) / self.params.epsilon
    }

    fn weighted(&self, f: impl Fn(usize, usize) -> f64) -> f64 {
        let d = self.probs.nrows();
        let mut acc = 0.0;
        for m in 0..d {
            for n in 0..d {
                acc += f(m, n) * self.probs[(m, n)];
            }
        }
        acc
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["m", "n", "probability"]);
        let d = self.probs.nrows();
        for m in 0..d {
            for n in 0..d {
                t.push([m.to_string(), n.to_string(), fmt_num(self.probs[(m, n)])]);
            }
        }
        t
    }
}

/// Teleported state after the phase delay `δ` on `a2` and the balanced beamsplitter:
/// mode 0 is `d₁ = (a₄ + e^{iδ}a₂)/√2`, mode 1 is `−d₂`.
pub fn interferometer_output(params: &CoherenceParams, y: f64, delta: f64) -> Result<GaussianState> {
    teleported_state_with_noise(params, y)?
        .phase(1, delta)?
        .beamsplitter(0, 1, FRAC_1_SQRT_2, 0.0)
}

pub fn pnr_distribution(params: &CoherenceParams, y: f64, delta: f64, cutoff: usize) -> Result<PnrDistribution> {
    let rho = gaussian_to_fock(&interferometer_output(params, y, delta)?, cutoff)?;
    Ok(PnrDistribution {
        probs: rho.number_distribution().map(|p| p.max(0.0)),
        delta,
        params: *params,
        y,
        tail_mass: rho.tail_mass,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parameter {
    Theta,
    GAbs,
}

fn shifted(params: &CoherenceParams, which: Parameter, h: f64) -> Result<CoherenceParams> {
    match which {
        Parameter::Theta => Ok(params.with_theta(params.theta + h)),
        Parameter::GAbs => {
            let g = params.g_abs + h;
            if !(0.0..=1.0).contains(&g) {
                return Err(invalid("fd_step", format!("|g| {} ± step leaves [0, 1]", params.g_abs)));
            }
            Ok(params.with_g_abs(g))
        }
    }
}

/// Richardson-extrapolated central difference `(4 D_h − D_2h)/3` of a matrix-valued map.
fn derivative<F>(params: &CoherenceParams, which: Parameter, h: f64, f: F) -> Result<DMatrix<f64>>
where
    F: Fn(&CoherenceParams) -> Result<DMatrix<f64>>,
{
    let at = |s: f64| shifted(params, which, s).and_then(|p| f(&p));
    let d_h = (at(h)? - at(-h)?) / (2.0 * h);
    let d_2h = (at(2.0 * h)? - at(-2.0 * h)?) / (4.0 * h);
    Ok((d_h * 4.0 - d_2h) / 3.0)
}

/// Classical FI of photon counting, `Σ (∂_i p)(∂_j p)/p`, with finite-difference derivatives.
pub fn classical_fi_pnr(
    params: &CoherenceParams,
    y: f64,
    delta: f64,
    cutoff: usize,
    fd_step: f64,
) -> Result<FisherMatrix> {
    if !(fd_step > 0.0 && fd_step.is_finite()) {
        return Err(invalid("fd_step", "must be positive"));
    }
    let center = pnr_distribution(params, y, delta, cutoff)?;
    if center.tail_mass > DEFAULT_TAIL_BUDGET {
        return Err(Error::TailBudget {
            tail: center.tail_mass,
            budget: DEFAULT_TAIL_BUDGET,
        });
    }
    let probs = |p: &CoherenceParams| pnr_distribution(p, y, delta, cutoff).map(|d| d.probs);
    let dt = derivative(params, Parameter::Theta, fd_step, probs)?;
    let dg = derivative(params, Parameter::GAbs, fd_step, probs)?;
    let (mut ftt, mut fgg, mut ftg) = (0.0, 0.0, 0.0);
    for (k, &p) in center.probs.iter().enumerate() {
        if p > P_FLOOR {
            ftt += dt[k] * dt[k] / p;
            fgg += dg[k] * dg[k] / p;
            ftg += dt[k] * dg[k] / p;
        }
    }
    Ok(FisherMatrix::new(FisherKind::PnrMeasurement, ftt, fgg, ftg))
}

/// Outcome of checking the closed-form SLD against the Fock representation.
#[derive(Debug, Clone, PartialEq)]
pub struct SldReport {
    pub parameter: Parameter,
    /// `‖∂ρ − ½(Lρ + ρL)‖_F / ‖∂ρ‖_F`.
    pub residual: f64,
    /// `tr(ρ L²)`.
    pub fisher_from_sld: f64,
    pub fisher_closed_form: f64,
    /// `tr(ρ L)`, zero for an SLD.
    pub mean_sld: f64,
    pub tail_mass: f64,
    /// Off-diagonal weight of `L` in the `d₁, d₂` number basis at the optimal delay,
    /// relative to its full Frobenius norm (sectors with total photon number ≤ cutoff).
    pub eigenbasis_offdiag: f64,
}

/// Builds the SLD for `which` from its closed-form coefficients on modes `(a4, a2)`.
pub fn sld_operator(params: &CoherenceParams, y: f64, which: Parameter, cutoff: usize) -> Result<DMatrix<C64>> {
    let s = sld_coefficients(params, y)?;
    let (a4, a2) = two_mode_annihilation(cutoff);
    let id = DMatrix::<C64>::identity(a4.nrows(), a4.ncols());
    let hop = &a4 * a2.adjoint();
    let hop_dag = a4.adjoint() * &a2;
    let two = C64::new(2.0, 0.0);
    Ok(match which {
        Parameter::GAbs => {
            let n4 = a4.adjoint() * &a4;
            let n2 = a2.adjoint() * &a2;
            (&n4 * two + &id) * C64::new(s.a / s.d, 0.0)
                + (&n2 * two + &id) * C64::new(s.c / s.d, 0.0)
                + hop * (s.b * 2.0 / s.d)
                + hop_dag * (s.b.conj() * 2.0 / s.d)
                + &id * C64::new(s.e, 0.0)
        }
        Parameter::Theta => hop * (s.p.conj() * two) + hop_dag * (s.p * two),
    })
}

pub fn verify_sld(params: &CoherenceParams, y: f64, cutoff: usize, which: Parameter) -> Result<SldReport> {
    let rho_of = |p: &CoherenceParams| gaussian_to_fock(&teleported_state_with_noise(p, y)?, cutoff);
    let rho = rho_of(params)?;
    if rho.tail_mass > DEFAULT_TAIL_BUDGET {
        return Err(Error::TailBudget {
            tail: rho.tail_mass,
            budget: DEFAULT_TAIL_BUDGET,
        });
    }
    let re = |p: &CoherenceParams| rho_of(p).map(|r| r.matrix.map(|z| z.re));
    let im = |p: &CoherenceParams| rho_of(p).map(|r| r.matrix.map(|z| z.im));
    let d_re = derivative(params, which, DEFAULT_FD_STEP, re)?;
    let d_im = derivative(params, which, DEFAULT_FD_STEP, im)?;
    let d_rho = d_re.zip_map(&d_im, C64::new);

    let l = sld_operator(params, y, which, cutoff)?;
    let anti = (&l * &rho.matrix + &rho.matrix * &l) * C64::new(0.5, 0.0);
    let residual = (&d_rho - anti).norm() / d_rho.norm();
    let fisher_from_sld = rho.expectation(&(&l * &l)).re;
    let mean_sld = rho.expectation(&l).re;
    let closed = qfi_closed_form(params, y)?;
    let s = sld_coefficients(params, y)?;
    let (fisher_closed_form, delta) = match which {
        Parameter::Theta => (closed.f_theta_theta, s.delta_opt_theta),
        Parameter::GAbs => (closed.f_g_g, s.delta_opt_g),
    };
    Ok(SldReport {
        parameter: which,
        residual,
        fisher_from_sld,
        fisher_closed_form,
        mean_sld,
        tail_mass: rho.tail_mass,
        eigenbasis_offdiag: offdiag_in_output_basis(&l, delta, cutoff),
    })
}

/// Relative off-diagonal Frobenius weight of `op` in the basis
/// `|m, n⟩_d ∝ (d₁†)^m (d₂†)^n |0⟩`, `d₁,₂ = (a₀ ± e^{iδ}a₁)/√2`, restricted to `m + n ≤ cutoff`
/// where the truncated ladder operators act exactly.
pub fn offdiag_in_output_basis(op: &DMatrix<C64>, delta: f64, cutoff: usize) -> f64 {
    let (a0, a1) = two_mode_annihilation(cutoff);
    let ph = C64::from_polar(FRAC_1_SQRT_2, -delta);
    let h = C64::new(FRAC_1_SQRT_2, 0.0);
    let d1_dag = a0.adjoint() * h + a1.adjoint() * ph;
    let d2_dag = a0.adjoint() * h - a1.adjoint() * ph;
    let dim = a0.nrows();
    let mut vac = nalgebra::DVector::<C64>::zeros(dim);
    vac[0] = C64::new(1.0, 0.0);
    let mut cols = Vec::new();
    for m in 0..=cutoff {
        let mut v = vac.clone();
        for k in 0..m {
            v = &d1_dag * v * C64::new(1.0 / ((k + 1) as f64).sqrt(), 0.0);
        }
        for n in 0..=(cutoff - m) {
            cols.push(v.clone());
            v = &d2_dag * v * C64::new(1.0 / ((n + 1) as f64).sqrt(), 0.0);
        }
    }
    let basis = DMatrix::from_columns(&cols);
    let rotated = basis.adjoint() * op * &basis;
    let total = rotated.norm();
    if total == 0.0 {
        return 0.0;
    }
    let diag: f64 = rotated.diagonal().iter().map(|z| z.norm_sqr()).sum();
    ((total * total - diag).max(0.0)).sqrt() / total
}

/// Outcome probabilities `(P₊, P₋, P_fail)` of the single-photon DV scheme.
///
/// The stellar state is projected onto its single-photon sector; a linear-optics
/// Bell measurement succeeds with probability ½ and then projects onto
/// `(|10⟩ ± e^{−iδ}|01⟩)/√2`. Vacuum, multiphoton events and failed Bell
/// measurements all land in the uninformative third outcome.
pub fn dv_outcome_probabilities(params: &CoherenceParams, delta: f64) -> Result<[f64; 3]> {
    let rho = gaussian_to_fock(&stellar_state(params)?, 1)?;
    let p1 = rho.element(1, 0, 1, 0).re + rho.element(0, 1, 0, 1).re;
    let coherence = rho.element(1, 0, 0, 1);
    let interference = 2.0 * (C64::from_polar(1.0, -delta) * coherence).re;
    let plus = 0.25 * (p1 + interference);
    let minus = 0.25 * (p1 - interference);
    Ok([plus, minus, 1.0 - plus - minus])
}

/// Classical FI of the DV scheme at phase delay `δ`.
pub fn dv_scheme_fi_at(params: &CoherenceParams, delta: f64) -> Result<FisherMatrix> {
    let probs = |p: &CoherenceParams| dv_outcome_probabilities(p, delta).map(|v| DMatrix::from_row_slice(3, 1, &v));
    let center = probs(params)?;
    let h = DEFAULT_FD_STEP;
    let dt = derivative(params, Parameter::Theta, h, probs)?;
    // |g| = 0 or 1 sit on the boundary; step inward with a one-sided stencil there
    let dg = if params.g_abs - 2.0 * h >= 0.0 && params.g_abs + 2.0 * h <= 1.0 {
        derivative(params, Parameter::GAbs, h, probs)?
    } else {
        let sign = if params.g_abs < 0.5 { 1.0 } else { -1.0 };
        let f1 = probs(&params.with_g_abs(params.g_abs + sign * h))?;
        let f2 = probs(&params.with_g_abs(params.g_abs + 2.0 * sign * h))?;
        (f1 * 4.0 - f2 - &center * 3.0) / (2.0 * h * sign)
    };
    let (mut ftt, mut fgg, mut ftg) = (0.0, 0.0, 0.0);
    for k in 0..3 {
        let p = center[k];
        if p > P_FLOOR {
            ftt += dt[k] * dt[k] / p;
            fgg += dg[k] * dg[k] / p;
            ftg += dt[k] * dg[k] / p;
        }
    }
    Ok(FisherMatrix::new(FisherKind::DvScheme, ftt, fgg, ftg))
}

/// DV-scheme FI for `θ` at its optimal delay `δ = θ + π/2`.
pub fn dv_scheme_fi(params: &CoherenceParams) -> Result<FisherMatrix> {
    dv_scheme_fi_at(params, params.theta + FRAC_PI_2)
}
