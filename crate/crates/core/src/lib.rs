//! Exact combinatorics, stochastic generators, spectral analysis and Monte
//! Carlo for classical pair-flip chains driven by a boundary bath.
//!
//! A length-`L` string over `N` symbols evolves under a brickwork of two-site
//! gates that may only replace an adjacent equal pair `aa` by another equal
//! pair `bb`, plus a bath that resamples the last site. The gates preserve the
//! irreducible string obtained by cancelling equal neighbours, which splits the
//! state space into Krylov sectors labelled by vertices of the `N`-regular
//! tree. The bath moves the system between neighbouring sectors, so relaxation
//! is a walk on that tree, and it is exponentially slow for `N ≥ 3`.
//!
//! Modules, bottom-up:
//!
//! - [`walks`]: strings, reduction, sectors, staggered charges.
//! - [`census`]: exact sector dimensions, cones, Temperley-Lieb counts.
//! - [`chains`]: the local, nonlocal and lumped transition matrices.
//! - [`spectra`]: spectral gaps, subset expansion, Cheeger checks.
//! - [`montecarlo`]: trajectory sampling and first-passage estimates.
//! - [`bounds`]: closed-form lower/upper bounds for overlay curves.
//! - [`experiment`]: batch runs, artifacts and the verification suites
//!   behind the `pairflip` binary.

pub mod error;
pub mod numeric;
pub mod bounds;
pub mod census;
pub mod experiment;
pub mod chains;
pub mod montecarlo;
pub mod spectra;
pub mod walks;

pub use error::{Error, Result};
pub use walks::{Charge, SectorId, SpinString};
