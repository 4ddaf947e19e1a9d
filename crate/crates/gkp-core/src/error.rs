//! Crate-wide error type.

use thiserror::Error;

/// Errors surfaced by codeword construction, evaluation, and solvers.
#[derive(Debug, Error)]
pub enum GkpError {
    /// Bra and ket codewords carry different squeezing magnitudes.
    #[error("squeezing mismatch: bra r = {bra}, ket r = {ket}")]
    SqueezingMismatch { bra: f64, ket: f64 },

    /// A codeword failed a structural invariant.
    #[error("invalid codeword: {0}")]
    InvalidCodeword(String),

    /// The coefficient Gram sum is non-positive or has an imaginary residue
    /// beyond tolerance.
    #[error("degenerate normalization: gram sum {re} + {im}i")]
    DegenerateNormalization { re: f64, im: f64 },

    /// The stabilizer coefficient matrix violates the unit-determinant
    /// constraint.
    #[error("f matrix determinant off unity by {deviation:.3e}")]
    FMatrixDeterminant { deviation: f64 },

    /// A noise scale was negative.
    #[error("negative noise rate: kappa_tau = {kappa_tau}, kappa_phi_tau = {kappa_phi_tau}")]
    NegativeRate { kappa_tau: f64, kappa_phi_tau: f64 },

    /// Kraus pair index outside {1, 2, 3}.
    #[error("kraus index out of range: ({j}, {i})")]
    KrausIndex { j: usize, i: usize },

    /// An averaging grid was empty.
    #[error("empty noise-scale grid")]
    EmptyGrid,

    /// Gain denominator was non-positive.
    #[error("gain denominator must be positive, got {0}")]
    ZeroGainDenominator(f64),

    /// No zeta in the requested range satisfies the eigenstate threshold.
    #[error("no feasible zeta in [{lo}, {hi}] (l_eg <= {tol:.1e})")]
    InfeasibleZetaRange { lo: f64, hi: f64, tol: f64 },

    /// Fock-space truncation too small for the requested state.
    #[error("truncation {n_trunc} inadequate: tail mass {tail:.3e}")]
    TruncationInadequate { n_trunc: usize, tail: f64 },

    /// Integrator produced trace drift beyond tolerance.
    #[error("trace drift {drift:.3e} exceeds tolerance {tol:.1e}")]
    TraceDrift { drift: f64, tol: f64 },

    /// Training aborted on a non-finite loss.
    #[error("non-finite loss at step {step}; last finite loss {last_loss}")]
    NonFiniteLoss { step: usize, last_loss: f64 },

    /// The SDP solver failed to reach the requested residual.
    #[error("sdp did not converge: kkt residual {residual:.3e} after {iterations} iterations")]
    SdpNonConvergence { residual: f64, iterations: usize },

    /// The SDP constraint system is inconsistent.
    #[error("sdp infeasible: {0}")]
    SdpInfeasible(String),

    /// An eigenvalue dropped below the accepted floor.
    #[error("negative eigenvalue {value:.3e} below floor {floor:.1e}")]
    NegativeEigenvalue { value: f64, floor: f64 },

    /// Invalid configuration value.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
