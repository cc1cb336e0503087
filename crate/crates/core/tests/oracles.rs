//! Checks against computations that share no code path with the library formulas.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use cvqi::estimation::qfi_closed_form;
use cvqi::fock::{gaussian_to_fock, pnr_distribution};
use cvqi::gaussian::{lossy_tms_state, stellar_state, two_mode_squeezed_vacuum, Quadrature, C64};
use cvqi::teleportation::teleported_state_with_noise;
use cvqi::{CoherenceParams, GaussianState};

fn p(eps: f64, g: f64, theta: f64) -> CoherenceParams {
    CoherenceParams::new(eps, g, theta).unwrap()
}

/// Posterior moments from rejection sampling: keep joint samples whose measured
/// quadrature lands within a narrow window of the outcome. The measured mode
/// (both quadratures) is dropped from the posterior.
#[test]
fn homodyne_conditioning_matches_rejection_sampling() {
    let joint = stellar_state(&p(0.8, 0.7, 0.4))
        .unwrap()
        .product(&lossy_tms_state(1.0, 0.9).unwrap());
    let (outcome, half_width) = (0.3, 0.01);
    let (post, _) = joint.condition_on_homodyne(2, Quadrature::Q, outcome).unwrap();

    let l = joint.cov().clone().cholesky().unwrap().l();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let keep: Vec<usize> = vec![0, 1, 2, 3, 6, 7];
    let mut kept: Vec<DVector<f64>> = Vec::new();
    for _ in 0..4_000_000 {
        let z = DVector::from_fn(8, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = &l * z;
        if (x[4] - outcome).abs() < half_width {
            kept.push(DVector::from_fn(6, |a, _| x[keep[a]]));
        }
    }
    let n = kept.len() as f64;
    assert!(n > 20_000.0, "only {n} samples accepted");
    let mean = kept.iter().fold(DVector::zeros(6), |acc, v| acc + v) / n;
    let cov = kept.iter().fold(DMatrix::zeros(6, 6), |acc, v| {
        acc + (v - &mean) * (v - &mean).transpose()
    }) / (n - 1.0);
    for a in 0..6 {
        let se = (post.cov()[(a, a)] / n).sqrt();
        assert!(
            (mean[a] - post.mean()[a]).abs() < 5.0 * se,
            "mean[{a}] {} vs {}",
            mean[a],
            post.mean()[a]
        );
        for b in 0..6 {
            let se = ((post.cov()[(a, a)] * post.cov()[(b, b)] + post.cov()[(a, b)].powi(2)) / n).sqrt();
            assert!(
                (cov[(a, b)] - post.cov()[(a, b)]).abs() < 5.0 * se,
                "cov[{a}][{b}] {} vs {} se {se}",
                cov[(a, b)],
                post.cov()[(a, b)]
            );
        }
    }
}

/// Ideal TMS followed by independent loss on each arm.
#[test]
fn lossy_tms_matches_composed_channels() {
    for &r in &[0.0, 0.5, 1.0, 2.0, 5.0] {
        for &t in &[0.0, 0.3, 0.7, 0.9, 1.0] {
            let composed = two_mode_squeezed_vacuum(r)
                .unwrap()
                .loss(0, t * t)
                .unwrap()
                .loss(1, t * t)
                .unwrap();
            let direct = lossy_tms_state(r, t).unwrap();
            let scale = composed.cov().amax();
            assert!(
                (direct.cov() - composed.cov()).amax() <= 1e-12 * scale.max(1.0),
                "r={r} t={t}"
            );
        }
    }
}

fn thermal(n1: f64, n2: f64) -> GaussianState {
    let d = DVector::from_vec(vec![n1 + 0.5, n1 + 0.5, n2 + 0.5, n2 + 0.5]);
    GaussianState::new(DVector::zeros(4), DMatrix::from_diagonal(&d)).unwrap()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[test]
fn fock_thermal_product_is_geometric() {
    let (n1, n2) = (0.3, 0.05);
    let rho = gaussian_to_fock(&thermal(n1, n2), 10).unwrap();
    let geo = |nb: f64, k: usize| nb.powi(k as i32) / (1.0 + nb).powi(k as i32 + 1);
    let dist = rho.number_distribution();
    for m in 0..=10 {
        for n in 0..=10 {
            assert!((dist[(m, n)] - geo(n1, m) * geo(n2, n)).abs() < 1e-14);
        }
    }
    assert!(rho.hermiticity_error() < 1e-15);
}

/// A thermal field split on a balanced beamsplitter: total photons stay geometric
/// and each photon picks an output port independently.
#[test]
fn fock_split_thermal_is_binomial() {
    let nb = 0.4;
    let state = thermal(nb, 0.0).balanced_beamsplitter(0, 1).unwrap();
    let dist = gaussian_to_fock(&state, 12).unwrap().number_distribution();
    for m in 0..=6 {
        for n in 0..=6 {
            let total = m + n;
            let expected = binomial(total, m) / 2f64.powi(total as i32) * nb.powi(total as i32)
                / (1.0 + nb).powi(total as i32 + 1);
            assert!((dist[(m, n)] - expected).abs() < 1e-13, "({m},{n})");
        }
    }
}

fn sqrt_psd(m: &DMatrix<C64>) -> DMatrix<C64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| C64::new(x.max(0.0).sqrt(), 0.0)));
    &eig.eigenvectors * d * eig.eigenvectors.adjoint()
}

fn fidelity(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    let s = sqrt_psd(a);
    let inner = sqrt_psd(&(&s * b * &s));
    inner.trace().re.powi(2)
}

/// QFI from the Bures distance, `F = 8(1 − √fid(ρ_x, ρ_{x+h}))/h²`, with density
/// matrices built in the truncated Fock basis.
#[test]
fn closed_form_qfi_matches_bures_distance() {
    let (y, cutoff, h) = (1e-3, 8, 2e-2);
    let base = p(0.05, 0.6, 0.3);
    let rho = |q: &CoherenceParams| {
        gaussian_to_fock(&teleported_state_with_noise(q, y).unwrap(), cutoff)
            .unwrap()
            .matrix
    };
    let bures = |a: &CoherenceParams, b: &CoherenceParams| {
        let (ra, rb) = (rho(a), rho(b));
        let norm = ra.trace().re * rb.trace().re;
        8.0 * (1.0 - (fidelity(&ra, &rb) / norm).sqrt()) / (h * h)
    };
    let closed = qfi_closed_form(&base, y).unwrap();
    let f_theta = bures(&base.with_theta(0.3 - h / 2.0), &base.with_theta(0.3 + h / 2.0));
    let f_g = bures(&base.with_g_abs(0.6 - h / 2.0), &base.with_g_abs(0.6 + h / 2.0));
    assert!(
        (f_theta / closed.f_theta_theta - 1.0).abs() < 0.01,
        "{f_theta} vs {}",
        closed.f_theta_theta
    );
    assert!((f_g / closed.f_g_g - 1.0).abs() < 0.01, "{f_g} vs {}", closed.f_g_g);
}

/// Photon-counting moments from the Fock distribution against direct moments of
/// the Gaussian output: `⟨n_k⟩ = (V_qq + V_pp − 1)/2` per output mode.
#[test]
fn pnr_mean_matches_gaussian_moments() {
    let pr = p(0.1, 0.8, -0.7);
    let (y, delta) = (0.02, 0.4);
    let dist = pnr_distribution(&pr, y, delta, 10).unwrap();
    let out = cvqi::fock::interferometer_output(&pr, y, delta).unwrap();
    let v = out.cov();
    let n1 = (v[(0, 0)] + v[(1, 1)] - 1.0) / 2.0;
    let n2 = (v[(2, 2)] + v[(3, 3)] - 1.0) / 2.0;
    let d = dist.probs.nrows();
    let (mut m1, mut m2) = (0.0, 0.0);
    for m in 0..d {
        for n in 0..d {
            m1 += m as f64 * dist.probs[(m, n)];
            m2 += n as f64 * dist.probs[(m, n)];
        }
    }
    assert!((m1 - n1).abs() < 1e-9 && (m2 - n2).abs() < 1e-9);
    // mean-field interference: n1 − n2 = ε|g|cos(θ − δ)
    assert!((n1 - n2 - 0.1 * 0.8 * (-0.7f64 - delta).cos()).abs() < 1e-12);
}
