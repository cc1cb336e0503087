//! Mach–Zehnder phase estimation with a coherent and a squeezed-vacuum input.
//!
//! Input modes `a1` (coherent, real `α`) and `a2` (squeezed vacuum). The first
//! balanced splitter gives `b = (a1 + a2, a1 − a2)/√2`, arm `b1` picks up `e^{iφ}`,
//! and the second splitter outputs `c1 = (b1 − b2)/√2`, `c2 = (b1 + b2)/√2`.
//! The observable is `n = c1†c1 − c2†c2`.

use nalgebra::{DMatrix, DVector, Matrix2};

use crate::error::{invalid, Error, Result};
use crate::gaussian::C64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziConfig {
    pub alpha: f64,
    /// Squeezing of the second input; `r < 0` squeezes the other quadrature.
    pub r: f64,
    pub phi: f64,
}

impl MziConfig {
    pub fn new(alpha: f64, r: f64, phi: f64) -> Result<Self> {
        for (name, v) in [("alpha", alpha), ("r", r), ("phi", phi)] {
            if !v.is_finite() {
                return Err(invalid(name, format!("must be finite, got {v}")));
            }
        }
        Ok(Self { alpha, r, phi })
    }

    /// Rejects a complex amplitude instead of dropping its imaginary part.
    pub fn from_complex_alpha(alpha: C64, r: f64, phi: f64) -> Result<Self> {
        if alpha.im != 0.0 {
            return Err(invalid(
                "alpha",
                format!("must be real, got imaginary part {}", alpha.im),
            ));
        }
        Self::new(alpha.re, r, phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziStats {
    pub mean: f64,
    pub variance: f64,
}

/// Closed-form mean and variance of `n`.
pub fn mzi_stats(config: &MziConfig) -> MziStats {
    let MziConfig { alpha, r, phi } = *config;
    let a2 = alpha * alpha;
    let (sh2, ch2) = (r.sinh().powi(2), r.cosh().powi(2));
    let (c2, s2) = (phi.cos().powi(2), phi.sin().powi(2));
    MziStats {
        mean: (sh2 - a2) * phi.cos(),
        variance: c2 * (a2 + 2.0 * sh2 * ch2) + s2 * (a2 * (2.0 * r).exp() + sh2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziFockReport {
    pub fock: MziStats,
    pub analytic: MziStats,
    pub tail_mass: f64,
    pub cutoff: usize,
}

impl MziFockReport {
    pub fn max_deviation(&self) -> f64 {
        (self.fock.mean - self.analytic.mean)
            .abs()
            .max((self.fock.variance - self.analytic.variance).abs())
    }
}

pub const MZI_TAIL_BUDGET: f64 = 1e-6;

fn coherent_amplitudes(alpha: f64, cutoff: usize) -> Vec<f64> {
    let mut amps = Vec::with_capacity(cutoff + 1);
    let mut a = (-0.5 * alpha * alpha).exp();
    amps.push(a);
    for n in 1..=cutoff {
        a *= alpha / (n as f64).sqrt();
        amps.push(a);
    }
    amps
}

/// `S(r)|0⟩ = (cosh r)^{−½} Σ_k (−tanh r)^k √((2k)!)/(2^k k!) |2k⟩`.
fn squeezed_vacuum_amplitudes(r: f64, cutoff: usize) -> Vec<f64> {
    let mut amps = vec![0.0; cutoff + 1];
    let mut a = 1.0 / r.cosh().sqrt();
    let t = -r.tanh();
    amps[0] = a;
    let mut k = 1;
    while 2 * k <= cutoff {
        a *= t * ((2 * k - 1) as f64 / (2 * k) as f64).sqrt();
        amps[2 * k] = a;
        k += 1;
    }
    amps
}

/// Mode transfer matrix `c = U a`.
fn mzi_unitary(phi: f64) -> Matrix2<C64> {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let first = Matrix2::new(s, s, s, -s);
    let phase = Matrix2::new(
        C64::from_polar(1.0, phi),
        C64::new(0.0, 0.0),
        C64::new(0.0, 0.0),
        C64::new(1.0, 0.0),
    );
    let second = Matrix2::new(s, -s, s, s);
    second * phase * first
}

/// Moments of `n` from the input state written out in a truncated Fock basis
/// (photon numbers `0..=cutoff` per mode), compared with [`mzi_stats`].
pub fn mzi_fock_check(config: &MziConfig, cutoff: usize) -> Result<MziFockReport> {
    if cutoff == 0 {
        return Err(invalid("cutoff", "must be >= 1"));
    }
    let coh = coherent_amplitudes(config.alpha, cutoff);
    let sq = squeezed_vacuum_amplitudes(config.r, cutoff);
    let norm = coh.iter().map(|x| x * x).sum::<f64>() * sq.iter().map(|x| x * x).sum::<f64>();
    let tail_mass = (1.0 - norm).max(0.0);
    if tail_mass > MZI_TAIL_BUDGET {
        return Err(Error::TailBudget {
            tail: tail_mass,
            budget: MZI_TAIL_BUDGET,
        });
    }

    let d = cutoff + 1;
    let idx = |m: usize, n: usize| m * d + n;
    let psi = DVector::from_fn(d * d, |k, _| C64::new(coh[k / d] * sq[k % d], 0.0));

    // n = Σ_ij M_ij a_i† a_j with M = U† diag(1, −1) U
    let u = mzi_unitary(config.phi);
    let m = u.adjoint()
        * Matrix2::new(
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-1.0, 0.0),
        )
        * u;
    let mut op = DMatrix::<C64>::zeros(d * d, d * d);
    for p in 0..d {
        for q in 0..d {
            let from = idx(p, q);
            op[(from, from)] += m[(0, 0)] * p as f64 + m[(1, 1)] * q as f64;
            // a1† a2
            if q >= 1 && p + 1 < d {
                op[(idx(p + 1, q - 1), from)] += m[(0, 1)] * ((p + 1) as f64 * q as f64).sqrt();
            }
            // a2† a1
            if p >= 1 && q + 1 < d {
                op[(idx(p - 1, q + 1), from)] += m[(1, 0)] * (p as f64 * (q + 1) as f64).sqrt();
            }
        }
    }
    let n_psi = &op * &psi;
    let mean = psi.dotc(&n_psi).re;
    let second = n_psi.norm_squared();
    Ok(MziFockReport {
        fock: MziStats {
            mean,
            variance: second - mean * mean,
        },
        analytic: mzi_stats(config),
        tail_mass,
        cutoff,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn closed_form_examples() {
        let s = mzi_stats(&MziConfig::new(0.0, 0.0, 1.3).unwrap());
        assert_eq!((s.mean, s.variance), (0.0, 0.0));
        let s = mzi_stats(&MziConfig::new(2.0, 0.0, FRAC_PI_2).unwrap());
        assert_abs_diff_eq!(s.mean, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(s.variance, 4.0, epsilon = 1e-14);
        let s = mzi_stats(&MziConfig::new(1.0, 0.5, 0.7).unwrap());
        assert_abs_diff_eq!(s.mean, -0.55716, epsilon = 1e-5);
        assert_abs_diff_eq!(s.variance, 2.22977, epsilon = 1e-5);
    }

    #[test]
    fn negative_squeezing_reduces_noise_near_half_pi() {
        let phi = FRAC_PI_2 - 0.01;
        let plain = mzi_stats(&MziConfig::new(10.0, 0.0, phi).unwrap()).variance;
        let sq = mzi_stats(&MziConfig::new(10.0, -0.5, phi).unwrap()).variance;
        let anti = mzi_stats(&MziConfig::new(10.0, 0.5, phi).unwrap()).variance;
        assert!(sq < plain && plain < anti);
        assert_abs_diff_eq!(sq / plain, (-1f64).exp(), epsilon = 0.01);
    }

    #[test]
    fn fock_matches_closed_form() {
        let rep = mzi_fock_check(&MziConfig::new(1.0, 0.5, 0.7).unwrap(), 40).unwrap();
        assert!(rep.max_deviation() <= 1e-6, "{rep:?}");
        for &(a, r, phi) in &[(1.5, -0.4, 2.0), (0.7, 0.3, -1.1), (2.0, 0.0, 0.4)] {
            let rep = mzi_fock_check(&MziConfig::new(a, r, phi).unwrap(), 40).unwrap();
            assert!(rep.max_deviation() <= 1e-6, "{rep:?}");
        }
    }

    #[test]
    fn coherent_only_limit() {
        let c = MziConfig::new(1.3, 0.0, 0.9).unwrap();
        let s = mzi_stats(&c);
        assert_abs_diff_eq!(s.mean, -1.69 * 0.9f64.cos(), epsilon = 1e-14);
        assert_abs_diff_eq!(s.variance, 1.69, epsilon = 1e-14);
    }

    #[test]
    fn period_pi_symmetry_of_variance() {
        let c = MziConfig::new(1.2, 0.3, 0.4).unwrap();
        let shifted = MziConfig { phi: c.phi + PI, ..c };
        assert_abs_diff_eq!(mzi_stats(&c).variance, mzi_stats(&shifted).variance, epsilon = 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(MziConfig::new(f64::NAN, 0.0, 0.0).is_err());
        assert!(MziConfig::from_complex_alpha(C64::new(1.0, 0.1), 0.0, 0.0).is_err());
        assert!(MziConfig::from_complex_alpha(C64::new(1.0, 0.0), 0.0, 0.0).is_ok());
        let err = mzi_fock_check(&MziConfig::new(3.0, 1.0, 0.0).unwrap(), 5).unwrap_err();
        assert!(matches!(err, Error::TailBudget { .. }));
    }
}
