//! Closed-form complex algebra of approximate GKP codewords.
//!
//! A codeword is a superposition of squeezed coherent states on the fixed
//! square-lattice displacement grid `alpha_k = sqrt(pi/2) (2k + u)`. Working
//! in the squeezed frame (two-photon coherent parameters `beta`) turns every
//! matrix element of the moment monomials into a finite double sum of
//! Gaussian overlaps times a polynomial kernel, with no Fock truncation
//! anywhere.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dd::Cdd;
use crate::error::GkpError;
use crate::Result;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Tolerance on the unit-determinant constraint of [`FMatrix`].
pub const F_DET_TOL: f64 = 1e-12;

/// Logical label of a codeword.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Logical {
    /// `|0_L>` — displacement grid on even multiples of sqrt(pi/2).
    Zero,
    /// `|1_L>` — displacement grid on odd multiples of sqrt(pi/2).
    One,
}

impl Logical {
    /// 0 or 1 as an integer offset in the grid formula.
    pub fn index(self) -> i64 {
        match self {
            Logical::Zero => 0,
            Logical::One => 1,
        }
    }

    /// Both labels, in order.
    pub fn both() -> [Logical; 2] {
        [Logical::Zero, Logical::One]
    }
}

/// The moment monomials with closed-form kernels, plus the three adjoints
/// evaluated by conjugation-and-swap.
///
/// Naming: `N` is the photon number `a^dag a`; `NA = a^dag a^2`;
/// `N2A = (a^dag a)^2 a`; `ADagN`/`ADagN2` are the adjoints of `NA`/`N2A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MonomialId {
    /// Identity.
    I,
    /// Annihilation operator `a`.
    A,
    /// Creation operator `a^dag` (adjoint of `A`).
    ADag,
    /// Photon number `a^dag a`.
    N,
    /// `a^dag a^2`.
    NA,
    /// `a^dag (a^dag a)` (adjoint of `NA`).
    ADagN,
    /// `(a^dag a)^2`.
    N2,
    /// `(a^dag a)^2 a`.
    N2A,
    /// `a^dag (a^dag a)^2` (adjoint of `N2A`).
    ADagN2,
    /// `(a^dag a)^3`.
    N3,
    /// `(a^dag a)^4`.
    N4,
}

impl MonomialId {
    /// All eleven monomials.
    pub const ALL: [MonomialId; 11] = [
        MonomialId::I,
        MonomialId::A,
        MonomialId::ADag,
        MonomialId::N,
        MonomialId::NA,
        MonomialId::ADagN,
        MonomialId::N2,
        MonomialId::N2A,
        MonomialId::ADagN2,
        MonomialId::N3,
        MonomialId::N4,
    ];

    /// The eight monomials with a direct kernel formula.
    pub const DIRECT: [MonomialId; 8] = [
        MonomialId::I,
        MonomialId::A,
        MonomialId::N,
        MonomialId::NA,
        MonomialId::N2,
        MonomialId::N2A,
        MonomialId::N3,
        MonomialId::N4,
    ];

    /// Adjoint partner. An involution; the self-adjoint monomials map to
    /// themselves.
    pub fn adjoint(self) -> MonomialId {
        match self {
            MonomialId::A => MonomialId::ADag,
            MonomialId::ADag => MonomialId::A,
            MonomialId::NA => MonomialId::ADagN,
            MonomialId::ADagN => MonomialId::NA,
            MonomialId::N2A => MonomialId::ADagN2,
            MonomialId::ADagN2 => MonomialId::N2A,
            m => m,
        }
    }

    /// True for the monomials evaluated as `conj(<ket|partner|bra>)`.
    pub fn is_adjoint_form(self) -> bool {
        matches!(
            self,
            MonomialId::ADag | MonomialId::ADagN | MonomialId::ADagN2
        )
    }
}

/// A logical codeword: coefficients over the squeezed-coherent grid.
///
/// The displacement grid is derived from `(u, k)` on demand and never stored,
/// so coefficients and grid cannot drift apart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodewordSpec {
    u: Logical,
    m: usize,
    r: f64,
    coeffs: Vec<C64>,
}

impl CodewordSpec {
    /// Builds a codeword, checking the structural invariants: `2M + 1`
    /// coefficients, at least one nonzero, finite non-negative squeezing.
    pub fn new(u: Logical, m: usize, r: f64, coeffs: Vec<C64>) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(GkpError::InvalidCodeword(format!(
                "squeezing must be finite and non-negative, got {r}"
            )));
        }
        if coeffs.len() != 2 * m + 1 {
            return Err(GkpError::InvalidCodeword(format!(
                "expected {} coefficients for M = {m}, got {}",
                2 * m + 1,
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(GkpError::InvalidCodeword(
                "non-finite coefficient".to_string(),
            ));
        }
        if coeffs.iter().all(|c| c.norm_sqr() == 0.0) {
            return Err(GkpError::InvalidCodeword(
                "all coefficients vanish".to_string(),
            ));
        }
        Ok(Self { u, m, r, coeffs })
    }

    /// Logical label.
    pub fn u(&self) -> Logical {
        self.u
    }

    /// Grid half-width `M`; the codeword superposes `2M + 1` states.
    pub fn m(&self) -> usize {
        self.m
    }

    /// Squeezing magnitude.
    pub fn r(&self) -> f64 {
        self.r
    }

    /// Coefficients `c_k` for `k = -M..=M`.
    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    /// Grid indices `k = -M..=M`.
    pub fn ks(&self) -> impl Iterator<Item = i64> + '_ {
        -(self.m as i64)..=(self.m as i64)
    }

    /// Displacement grid `alpha_k = sqrt(pi/2) (2k + u)`, always recomputed.
    pub fn alpha_grid(&self) -> Vec<f64> {
        let u = self.u.index() as f64;
        self.ks()
            .map(|k| (std::f64::consts::PI / 2.0).sqrt() * (2.0 * k as f64 + u))
            .collect()
    }

    /// Two-photon coherent grid `beta_k = cosh(r) alpha_k + sinh(r) alpha_k^*`.
    ///
    /// The grid is real by construction, so this reduces to `e^r alpha_k`.
    pub fn beta_grid(&self) -> Vec<f64> {
        let er = self.r.exp();
        self.alpha_grid().into_iter().map(|a| er * a).collect()
    }

    /// Returns a copy with every coefficient multiplied by `factor`.
    pub fn scaled(&self, factor: C64) -> Self {
        Self {
            u: self.u,
            m: self.m,
            r: self.r,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }
}

/// Generalized-stabilizer coefficient matrix with unit determinant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FMatrix {
    /// Row-major entries.
    pub f11: C64,
    /// Upper-right entry.
    pub f12: C64,
    /// Lower-left entry.
    pub f21: C64,
    /// Lower-right entry.
    pub f22: C64,
}

impl FMatrix {
    /// Builds the matrix, enforcing `|f11 f22 - f12 f21 - 1| <= 1e-12`.
    pub fn new(f11: C64, f12: C64, f21: C64, f22: C64) -> Result<Self> {
        let deviation = (f11 * f22 - f12 * f21 - C64::new(1.0, 0.0)).norm();
        if deviation > F_DET_TOL {
            return Err(GkpError::FMatrixDeterminant { deviation });
        }
        Ok(Self { f11, f12, f21, f22 })
    }

    /// Identity matrix: the ideal square-lattice stabilizers.
    pub fn identity() -> Self {
        Self {
            f11: C64::new(1.0, 0.0),
            f12: C64::new(0.0, 0.0),
            f21: C64::new(0.0, 0.0),
            f22: C64::new(1.0, 0.0),
        }
    }

    /// Distance to the identity matrix, `|f11-1| + |f22-1| + |f12| + |f21|`.
    pub fn distance_to_ideal(&self) -> f64 {
        let one = C64::new(1.0, 0.0);
        (self.f11 - one).norm() + (self.f22 - one).norm() + self.f12.norm() + self.f21.norm()
    }
}

/// The operator `exp(mu a^dag - nu a)`; unitary iff `nu = conj(mu)`.
///
/// Non-unitary forms are legal and needed for complex `f` matrices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpLinearOp {
    /// Coefficient of `a^dag`.
    pub mu: C64,
    /// Coefficient of `-a`.
    pub nu: C64,
}

impl ExpLinearOp {
    /// Displacement operator `D(alpha) = exp(alpha a^dag - alpha^* a)`.
    pub fn displacement(alpha: C64) -> Self {
        Self {
            mu: alpha,
            nu: alpha.conj(),
        }
    }

    /// The adjoint operator: `exp(mu a^dag - nu a)^dag = exp(-conj(nu) a^dag + conj(mu) a)`.
    pub fn adjoint(self) -> Self {
        Self {
            mu: -self.nu.conj(),
            nu: -self.mu.conj(),
        }
    }

    /// Half power, used for the Pauli operators.
    pub fn half(self) -> Self {
        Self {
            mu: 0.5 * self.mu,
            nu: 0.5 * self.nu,
        }
    }
}

/// Two-photon coherent parameter `cosh(r) alpha + sinh(r) alpha^*`.
pub fn two_photon_param(alpha: C64, r: f64) -> C64 {
    alpha * r.cosh() + alpha.conj() * r.sinh()
}

/// Coherent-state overlap `<beta_k|beta_l>` in the squeezed frame:
/// `exp[-(|beta_k|^2 + |beta_l|^2)/2 + beta_k^* beta_l]`.
pub fn gaussian_overlap(beta_k: C64, beta_l: C64) -> C64 {
    (-(beta_k.norm_sqr() + beta_l.norm_sqr()) / 2.0 + beta_k.conj() * beta_l).exp()
}

/// Kernel `G_j(beta_k, beta_l)` for one of the eight direct monomials.
///
/// The formulas are transcribed verbatim with `lam = cosh r`, `lam1 = sinh r`
/// as local names; no algebraic simplification. `x` is `beta_k^*` (bra side)
/// and `y` is `beta_l` (ket side).
pub fn moment_kernel(op: MonomialId, beta_k: C64, beta_l: C64, r: f64) -> Result<C64> {
    let x = beta_k.conj();
    let y = beta_l;
    let lam = r.cosh();
    let lam1 = r.sinh();
    Ok(kernel_xy(op, x, y, lam, lam1)?)
}

pub(crate) fn kernel_xy(op: MonomialId, x: C64, y: C64, lam: f64, lam1: f64) -> Result<C64> {
    // extended precision: the polynomials cancel heavily at large beta
    let l = Cdd::from_f64(lam);
    let l1 = Cdd::from_f64(lam1);
    let x = Cdd::from_c64(x);
    let y = Cdd::from_c64(y);
    let v = match op {
        MonomialId::I => Cdd::from_f64(1.0),
        MonomialId::A => l * y - l1 * x,
        MonomialId::N => {
            x * y * (l * l + l1 * l1) + l1 * (l1 - l * y * y) - l * l1 * x * x
        }
        MonomialId::NA => {
            -l1 * (2.0 * l * l + l1 * l1) * x * x * y
                + (l * l + 2.0 * l1 * l1) * x * (l * y * y - l1)
                + l * l1 * l1 * x.powu(3)
                + l * l1 * y * (3.0 * l1 - l * y * y)
        }
        MonomialId::N2 => {
            -2.0 * l * l1 * (l * l + l1 * l1) * x.powu(3) * y
                + x * x
                    * (l.powu(4) * y * y + 4.0 * l1 * l1 * l * l * y * y
                        - 2.0 * l1 * l.powu(3)
                        - 4.0 * l1.powu(3) * l
                        + l1.powu(4) * y * y)
                + x * y
                    * (-2.0 * l1 * l.powu(3) * y * y - 2.0 * l1.powu(3) * l * y * y
                        + l.powu(4)
                        + 8.0 * l1 * l1 * l * l
                        + 3.0 * l1.powu(4))
                + l * l * l1 * l1 * x.powu(4)
                + l1 * (-2.0 * l.powu(3) * y * y
                    + l1 * l * l * (y.powu(4) + 2.0)
                    - 4.0 * l1 * l1 * l * y * y
                    + l1.powu(3))
        }
        MonomialId::N2A => {
            l * l1 * l1 * (3.0 * l * l + 2.0 * l1 * l1) * x.powu(4) * y
                - l1 * x.powu(3)
                    * (3.0 * l.powu(4) * y * y + 6.0 * l1 * l1 * l * l * y * y
                        - 4.0 * l1 * l.powu(3)
                        + l1.powu(4) * y * y
                        - 6.0 * l1.powu(3) * l)
                + x * x
                    * y
                    * (l.powu(5) * y * y + 3.0 * l1.powu(4) * l * y * y
                        - 5.0 * l1 * l.powu(4)
                        - 20.0 * l1.powu(3) * l * l
                        + 6.0 * l1 * l1 * l.powu(3) * y * y
                        - 5.0 * l1.powu(5))
                + x * (l.powu(5) * y * y - l1 * l.powu(4) * (2.0 * y.powu(4) + 1.0)
                    + 16.0 * l1 * l1 * l.powu(3) * y * y
                    - l1.powu(3) * l * l * (3.0 * y.powu(4) + 10.0)
                    + 13.0 * l1.powu(4) * l * y * y
                    - 4.0 * l1.powu(5))
                - l * l * l1.powu(3) * x.powu(5)
                + l * l1
                    * y
                    * (-2.0 * l.powu(3) * y * y + l1 * l * l * (y.powu(4) + 6.0)
                        - 8.0 * l1 * l1 * l * y * y
                        + 9.0 * l1.powu(3))
        }
        MonomialId::N3 => {
            3.0 * l * l * l1 * l1 * (l * l + l1 * l1) * x.powu(5) * y
                - 3.0 * l
                    * l1
                    * x.powu(4)
                    * (l.powu(4) * y * y + 3.0 * l1 * l1 * l * l * y * y
                        - 2.0 * l1 * l.powu(3)
                        + l1.powu(4) * y * y
                        - 3.0 * l1.powu(3) * l)
                + x.powu(3)
                    * y
                    * (l.powu(6) * y * y
                        + 9.0 * l1 * l1 * l.powu(4) * y * y
                        + 9.0 * l1.powu(4) * l * l * y * y
                        + l1.powu(6) * y * y
                        - 9.0 * l1 * l.powu(5)
                        - 36.0 * l1.powu(3) * l.powu(3)
                        - 15.0 * l1.powu(5) * l)
                + x * x
                    * (3.0 * l.powu(6) * y * y - l1 * l.powu(5) * (3.0 * y.powu(4) + 4.0)
                        + 6.0 * l1.powu(6) * y * y
                        + 36.0 * l1 * l1 * l.powu(4) * y * y
                        - l1.powu(3) * l.powu(3) * (9.0 * y.powu(4) + 28.0)
                        - l1.powu(5) * l * (3.0 * y.powu(4) + 13.0)
                        + 45.0 * l1.powu(4) * l * l * y * y)
                + x * y
                    * (-9.0 * l1 * l.powu(5) * y * y
                        + l1 * l1 * l.powu(4) * (3.0 * y.powu(4) + 32.0)
                        - 36.0 * l1.powu(3) * l.powu(3) * y * y
                        + l1.powu(4) * l * l * (3.0 * y.powu(4) + 50.0)
                        - 15.0 * l1.powu(5) * l * y * y
                        + l.powu(6)
                        + 7.0 * l1.powu(6))
                - l.powu(3) * l1.powu(3) * x.powu(6)
                + l1 * (-4.0 * l.powu(5) * y * y
                    + 2.0 * l1 * l.powu(4) * (3.0 * y.powu(4) + 2.0)
                    - l1 * l1 * l.powu(3) * y * y * (y.powu(4) + 28.0)
                    + l1.powu(3) * l * l * (9.0 * y.powu(4) + 10.0)
                    - 13.0 * l1.powu(4) * l * y * y
                    + l1.powu(5))
        }
        MonomialId::N4 => {
            l.powu(4) * l1.powu(4) * x.powu(8)
                - 4.0 * l.powu(3) * l1.powu(3) * (l * l + l1 * l1) * y * x.powu(7)
                + 2.0 * l
                    * l
                    * l1
                    * l1
                    * (3.0 * y * y * l.powu(4) + 8.0 * l1 * l1 * y * y * l * l
                        - 6.0 * l1 * l.powu(3)
                        - 8.0 * l1.powu(3) * l
                        + 3.0 * l1.powu(4) * y * y)
                    * x.powu(6)
                - 2.0 * l
                    * l1
                    * y
                    * (2.0 * y * y * l.powu(6) + 12.0 * l1 * l1 * y * y * l.powu(4)
                        - 15.0 * l1 * l.powu(5)
                        - 48.0 * l1.powu(3) * l.powu(3)
                        + 12.0 * l1.powu(4) * y * y * l * l
                        - 21.0 * l1.powu(5) * l
                        + 2.0 * l1.powu(6) * y * y)
                    * x.powu(5)
                + (y.powu(4) * l.powu(8) - 192.0 * l1.powu(5) * y * y * l.powu(3)
                    - 24.0 * l1 * y * y * l.powu(7)
                    + 4.0 * l1.powu(4) * (9.0 * y.powu(4) + 31.0) * l.powu(4)
                    + l1.powu(8) * y.powu(4)
                    + 4.0 * l1 * l1 * (4.0 * y.powu(4) + 7.0) * l.powu(6)
                    - 168.0 * l1.powu(3) * y * y * l.powu(5)
                    + 2.0 * l1.powu(6) * (8.0 * y.powu(4) + 29.0) * l * l
                    - 36.0 * l1.powu(7) * y * y * l)
                    * x.powu(4)
                - 2.0 * y
                    * (2.0 * l1 * (y.powu(4) + 8.0) * l.powu(7)
                        + 2.0 * l1.powu(3) * (6.0 * y.powu(4) + 79.0) * l.powu(5)
                        - 3.0 * y * y * l.powu(8)
                        - 144.0 * l1.powu(4) * y * y * l.powu(4)
                        + 2.0 * l1.powu(5) * (6.0 * y.powu(4) + 103.0) * l.powu(3)
                        + 2.0 * l1.powu(7) * (y.powu(4) + 20.0) * l
                        - 56.0 * l1 * l1 * y * y * l.powu(6)
                        - 72.0 * l1.powu(6) * y * y * l * l
                        - 5.0 * l1.powu(8) * y * y)
                    * x.powu(3)
                + (7.0 * y * y * l.powu(8)
                    + 2.0 * l1 * l1 * y * y * (3.0 * y.powu(4) + 106.0) * l.powu(6)
                    - 8.0 * l1 * (3.0 * y.powu(4) + 1.0) * l.powu(7)
                    - 24.0 * l1.powu(3) * (7.0 * y.powu(4) + 6.0) * l.powu(5)
                    + 4.0 * l1.powu(4) * y * y * (4.0 * y.powu(4) + 165.0) * l.powu(4)
                    + 2.0 * l1.powu(6) * y * y * (3.0 * y.powu(4) + 178.0) * l * l
                    + 25.0 * l1.powu(8) * y * y
                    - 4.0 * l1.powu(7) * (9.0 * y.powu(4) + 10.0) * l
                    - 12.0 * l1.powu(5) * (16.0 * y.powu(4) + 19.0) * l.powu(3))
                    * x
                    * x
                + (-32.0 * l1 * y * y * l.powu(7)
                    + 6.0 * l1 * l1 * (5.0 * y.powu(4) + 18.0) * l.powu(6)
                    + 24.0 * l1.powu(4) * (4.0 * y.powu(4) + 19.0) * l.powu(4)
                    - 4.0 * l1.powu(5) * y * y * (y.powu(4) + 103.0) * l.powu(3)
                    + l.powu(8)
                    + 15.0 * l1.powu(8)
                    + 2.0 * l1.powu(6) * (21.0 * y.powu(4) + 130.0) * l * l
                    - 4.0 * l1.powu(3) * y * y * (y.powu(4) + 79.0) * l.powu(5)
                    - 80.0 * l1.powu(7) * y * y * l)
                    * y
                    * x
                + l1 * (-12.0 * l1 * l1 * y * y * (y.powu(4) + 12.0) * l.powu(5)
                    - 40.0 * l1.powu(6) * y * y * l
                    - 8.0 * y * y * l.powu(7)
                    + l1.powu(3) * (y.powu(8) + 124.0 * y.powu(4) + 60.0) * l.powu(4)
                    - 4.0 * l1.powu(4) * y * y * (4.0 * y.powu(4) + 57.0) * l.powu(3)
                    + 4.0 * l1 * (7.0 * y.powu(4) + 2.0) * l.powu(6)
                    + 2.0 * l1.powu(5) * (29.0 * y.powu(4) + 18.0) * l * l
                    + l1.powu(7))
        }
        other => {
            return Err(GkpError::InvalidCodeword(format!(
                "monomial {other:?} has no direct kernel; evaluate via its adjoint partner"
            )))
        }
    };
    Ok(v.to_c64())
}

/// Normalization factor `N(u) = sqrt(sum_kl c_k^* c_l <beta_k|beta_l>)`.
///
/// The Gram sum must be real (to `1e-10` relative) and positive; anything
/// else signals degenerate coefficients.
pub fn normalization(code: &CodewordSpec) -> Result<f64> {
    let beta = code.beta_grid();
    let c = code.coeffs();
    let mut total = C64::new(0.0, 0.0);
    for (i, bi) in beta.iter().enumerate() {
        for (j, bj) in beta.iter().enumerate() {
            total += c[i].conj()
                * c[j]
                * gaussian_overlap(C64::new(*bi, 0.0), C64::new(*bj, 0.0));
        }
    }
    if total.re <= 0.0 || total.im.abs() > 1e-10 * total.re.abs().max(1e-300) {
        return Err(GkpError::DegenerateNormalization {
            re: total.re,
            im: total.im,
        });
    }
    Ok(total.re.sqrt())
}

fn check_same_r(bra: &CodewordSpec, ket: &CodewordSpec) -> Result<()> {
    if bra.r() != ket.r() {
        return Err(GkpError::SqueezingMismatch {
            bra: bra.r(),
            ket: ket.r(),
        });
    }
    Ok(())
}

/// Matrix element `<bra| K |ket>` of a moment monomial between codewords.
///
/// With `normalized` the result carries the `1/(N(bra) N(ket))` prefactor.
/// The three adjoint monomials are evaluated as the conjugate of the swapped
/// element of their partner.
pub fn matrix_element(
    bra: &CodewordSpec,
    ket: &CodewordSpec,
    op: MonomialId,
    normalized: bool,
) -> Result<C64> {
    check_same_r(bra, ket)?;
    if op.is_adjoint_form() {
        return Ok(matrix_element(ket, bra, op.adjoint(), normalized)?.conj());
    }
    let r = bra.r();
    let lam = r.cosh();
    let lam1 = r.sinh();
    let bb = bra.beta_grid();
    let bk = ket.beta_grid();
    let cb = bra.coeffs();
    let ck = ket.coeffs();
    let mut total = C64::new(0.0, 0.0);
    for (i, bi) in bb.iter().enumerate() {
        let x = C64::new(*bi, 0.0); // real grid: conj(beta) = beta
        for (j, bj) in bk.iter().enumerate() {
            let y = C64::new(*bj, 0.0);
            let g = kernel_xy(op, x, y, lam, lam1)?;
            total += cb[i].conj() * ck[j] * g * gaussian_overlap(x, y);
        }
    }
    if normalized {
        total /= normalization(bra)? * normalization(ket)?;
    }
    Ok(total)
}

/// Closed form of the ideal-stabilizer expectation `<u_L|S_q|u_L>`:
/// `exp(-pi e^{-2r})`, independent of the coefficients and of `M`.
pub fn stabilizer_expectation_q(r: f64) -> f64 {
    (-std::f64::consts::PI * (-2.0 * r).exp()).exp()
}

/// Expectation `<u_L|S_p|u_L>` via the shifted-grid overlap sum with
/// `beta_l' = beta_l + sqrt(2 pi) e^r`.
pub fn stabilizer_expectation_p(code: &CodewordSpec) -> Result<C64> {
    let n2 = {
        let n = normalization(code)?;
        n * n
    };
    let beta = code.beta_grid();
    let shift = (2.0 * std::f64::consts::PI).sqrt() * code.r().exp();
    let c = code.coeffs();
    let mut total = C64::new(0.0, 0.0);
    for (i, bi) in beta.iter().enumerate() {
        for (j, bj) in beta.iter().enumerate() {
            let bl = C64::new(bj + shift, 0.0);
            let bk = C64::new(*bi, 0.0);
            total += c[i].conj() * c[j] * gaussian_overlap(bk, bl);
        }
    }
    Ok(total / n2)
}

/// Expectation `<bra| exp(mu a^dag - nu a) |ket>`.
///
/// The generator is moved into the squeezed frame (`mu' = mu cosh r + nu
/// sinh r`, `nu' = nu cosh r + mu sinh r`), disentangled, and evaluated per
/// squeezed-coherent pair as `exp(mu' beta_k^* - nu' beta_l - mu' nu' / 2)`
/// times the Gaussian overlap. Correctness is established by the Fock oracle,
/// not by trust in the derivation.
pub fn exp_linear_expectation(
    op: ExpLinearOp,
    bra: &CodewordSpec,
    ket: &CodewordSpec,
) -> Result<C64> {
    check_same_r(bra, ket)?;
    let r = bra.r();
    let (lam, lam1) = (r.cosh(), r.sinh());
    let mu_p = op.mu * lam + op.nu * lam1;
    let nu_p = op.nu * lam + op.mu * lam1;
    let bb = bra.beta_grid();
    let bk = ket.beta_grid();
    let cb = bra.coeffs();
    let ck = ket.coeffs();
    let mut total = C64::new(0.0, 0.0);
    for (i, bi) in bb.iter().enumerate() {
        let x = C64::new(*bi, 0.0);
        for (j, bj) in bk.iter().enumerate() {
            let y = C64::new(*bj, 0.0);
            let factor = (mu_p * x - nu_p * y - mu_p * nu_p / 2.0).exp();
            total += cb[i].conj() * ck[j] * factor * gaussian_overlap(x, y);
        }
    }
    total /= normalization(bra)? * normalization(ket)?;
    Ok(total)
}

/// Converts the quadrature form of the generalized stabilizers to exp-linear
/// operators `(S_q_ap, S_p_ap)`.
///
/// `S_q_ap = exp[i 2 sqrt(pi) (f11 q + f12 p)]` maps to `mu = sqrt(2 pi)
/// (i f11 - f12)`, `nu = sqrt(2 pi) (-i f11 - f12)`; `S_p_ap = exp[-i 2
/// sqrt(pi) (f21 q + f22 p)]` maps to `mu = sqrt(2 pi) (f22 - i f21)`,
/// `nu = sqrt(2 pi) (f22 + i f21)`. The identity matrix reproduces
/// `S_q = D(i sqrt(2 pi))` and `S_p = D(sqrt(2 pi))` exactly.
pub fn stabilizer_ops_from_f(f: &FMatrix) -> Result<(ExpLinearOp, ExpLinearOp)> {
    let deviation = (f.f11 * f.f22 - f.f12 * f.f21 - C64::new(1.0, 0.0)).norm();
    if deviation > F_DET_TOL {
        return Err(GkpError::FMatrixDeterminant { deviation });
    }
    let s = (2.0 * std::f64::consts::PI).sqrt();
    let i = C64::new(0.0, 1.0);
    let sq = ExpLinearOp {
        mu: s * (i * f.f11 - f.f12),
        nu: s * (-i * f.f11 - f.f12),
    };
    let sp = ExpLinearOp {
        mu: s * (f.f22 - i * f.f21),
        nu: s * (f.f22 + i * f.f21),
    };
    Ok((sq, sp))
}

/// Combines two exp-linear operators: `exp(X) exp(Y) = prefactor exp(X + Y)`
/// with `prefactor = exp((mu_x nu_y - nu_x mu_y) / 2)`.
pub fn compose_exp_linear(x: ExpLinearOp, y: ExpLinearOp) -> (ExpLinearOp, C64) {
    let combined = ExpLinearOp {
        mu: x.mu + y.mu,
        nu: x.nu + y.nu,
    };
    let prefactor = ((x.mu * y.nu - x.nu * y.mu) / 2.0).exp();
    (combined, prefactor)
}

/// Expectation of `op^dag op` on a codeword, via the composition rule.
pub fn norm_sq_expectation(op: ExpLinearOp, code: &CodewordSpec) -> Result<C64> {
    let (combined, prefactor) = compose_exp_linear(op.adjoint(), op);
    Ok(prefactor * exp_linear_expectation(combined, code, code)?)
}

/// Pauli-operator diagnostics built from the half-power stabilizers.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PauliReport {
    /// `<u|sigma_z|u>` for u = 0, 1.
    pub sigma_z_diag: [C64; 2],
    /// `<0|sigma_x|1>` and `<1|sigma_x|0>`.
    pub sigma_x_cross: [C64; 2],
    /// `||sigma_z |u>||` for u = 0, 1.
    pub sigma_z_norms: [f64; 2],
    /// `||sigma_x |u>||` for u = 0, 1.
    pub sigma_x_norms: [f64; 2],
}

/// Evaluates the Pauli expectations `sigma_z = S_q_ap^{1/2}`,
/// `sigma_x = S_p_ap^{1/2}` on a codeword pair.
pub fn pauli_expectations(
    code0: &CodewordSpec,
    code1: &CodewordSpec,
    f: &FMatrix,
) -> Result<PauliReport> {
    check_same_r(code0, code1)?;
    let (sq, sp) = stabilizer_ops_from_f(f)?;
    let (sz, sx) = (sq.half(), sp.half());
    let codes = [code0, code1];
    let mut sigma_z_diag = [C64::new(0.0, 0.0); 2];
    let mut sigma_z_norms = [0.0; 2];
    let mut sigma_x_norms = [0.0; 2];
    for (u, code) in codes.iter().enumerate() {
        sigma_z_diag[u] = exp_linear_expectation(sz, code, code)?;
        sigma_z_norms[u] = norm_sq_expectation(sz, code)?.re.max(0.0).sqrt();
        sigma_x_norms[u] = norm_sq_expectation(sx, code)?.re.max(0.0).sqrt();
    }
    let sigma_x_cross = [
        exp_linear_expectation(sx, code0, code1)?,
        exp_linear_expectation(sx, code1, code0)?,
    ];
    Ok(PauliReport {
        sigma_z_diag,
        sigma_x_cross,
        sigma_z_norms,
        sigma_x_norms,
    })
}
