//! Continuous-variable teleportation for long-baseline stellar interferometry.
//!
//! Two telescopes collect a weak thermal field with mutual coherence `g`. Each
//! telescope's mode is teleported to a common station over a shared two-mode
//! squeezed link, and `(θ, |g|)` is estimated from the teleported state.
//!
//! * [`gaussian`]: covariance-matrix states, channels and homodyne conditioning.
//! * [`teleportation`]: the protocol, its effective squeezing and a Monte-Carlo check.
//! * [`estimation`]: quantum and classical Fisher information, SLD coefficients.
//! * [`fock`]: truncated Fock-space oracle for photon counting and the SLDs.
//! * [`link_budget`]: photon budget, threshold squeezing and baseline curves.
//! * [`appendix`]: squeezed-input Mach–Zehnder statistics.
//!
//! ```
//! use cvqi::{estimation::qfi_closed_form, CoherenceParams};
//!
//! let p = CoherenceParams::new(1e-4, 0.7, 0.3)?;
//! let f = qfi_closed_form(&p, 0.0)?;
//! assert!((f.f_theta_theta / (1e-4 * 0.49) - 1.0).abs() < 1e-3);
//! # Ok::<(), cvqi::Error>(())
//! ```

pub mod appendix;
pub mod error;
pub mod estimation;
pub mod fock;
pub mod gaussian;
pub mod link_budget;
pub mod table;
pub mod teleportation;

pub use error::{Error, Result};
pub use estimation::{FisherKind, FisherMatrix};
pub use fock::FockOperator;
pub use gaussian::{CoherenceParams, GaussianState, LadderCovariance};
pub use nalgebra;
pub use teleportation::LinkParams;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/conventions.md")]
    mod conventions {}
    #[doc = include_str!("../../../book/src/teleportation.md")]
    mod teleportation {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/fock.md")]
    mod fock {}
    #[doc = include_str!("../../../book/src/link_budget.md")]
    mod link_budget {}
    #[doc = include_str!("../../../book/src/mzi.md")]
    mod mzi {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
