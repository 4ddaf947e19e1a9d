//! Truncation-free algebra, losses, optimization, and recovery for
//! finite-energy approximate GKP codewords.
//!
//! The crate is organized around the pipeline used to design and assess a
//! code: closed-form matrix elements between squeezed-coherent superpositions
//! ([`algebra`]), the short-time loss/dephasing error model ([`noise`]),
//! scalar objectives ([`loss`]), coefficient families and robustness
//! treatments ([`models`]), a scalar reverse-mode tape plus the training loop
//! that produces optimal coefficients ([`autodiff`]), truncated Fock-space
//! numerics acting as the independent oracle ([`fock`]), and recovery-channel
//! construction with a built-in SDP solver ([`recovery`]).

pub mod algebra;
pub mod autodiff;
pub(crate) mod dd;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod loss;
pub mod models;
pub mod noise;
pub mod recovery;

pub use algebra::{CodewordSpec, ExpLinearOp, FMatrix, Logical, MonomialId, C64};
pub use error::GkpError;
pub use loss::{KlReport, LossBreakdown, LossWeights};
pub use noise::{NoiseScale, OperatorPoly};

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, GkpError>;
