// Parameter validation uses `!(x > 0.0)` so NaN is rejected along with the
// out-of-range values; the positive comparison spells the accepted range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Sequence-space empirical-risk-minimization estimators for linear
//! statistical inverse problems, with seeded Monte Carlo validation of the
//! convergence rates they achieve.
//!
//! The crate works in the coordinates of known singular systems (Fourier for
//! periodic deconvolution, Zernike/Chebyshev for 2-D tomography, mean-zero
//! cosines for additive components), where the observation models, the
//! empirical risk, δ-nets of Sobolev ellipsoids and the minimizers over them
//! all have exact finite-dimensional forms. The `harness` module drives MISE
//! sweeps, scaling-law measurements and an oracle verification suite; the
//! `seqinv` binary exposes them on the command line.

pub mod basis;
pub mod config;
pub mod error;
pub mod estimate;
pub mod harness;
pub mod net;
pub mod operator;
pub mod quad;
pub mod rates;
pub mod rng;
pub mod seq;
pub mod sim;
pub mod suite;

pub use basis::{chebyshev_u, zernike_radial, BasisId};
pub use error::{Error, Result};
pub use net::{build_packing, NetSpec, PackingSpec};
pub use operator::{DiagonalOperator, NoiseModel, OperatorKind, RadonGeometry, SingularRule};
pub use seq::{l2_dist, CoefVec, EllipsoidSpec, MultiIndex};
