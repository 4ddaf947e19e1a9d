//! Short-time Kraus operators for single-photon loss and dephasing, and the
//! symbolic expansion of the pair products `A_j^dag A_i` over the monomial
//! basis.
//!
//! The first-order Kraus set is `A1 = I - (kt/2) n - (kpt/2) n^2`,
//! `A2 = sqrt(kt) a`, `A3 = sqrt(kpt) n` with `kt = kappa tau` and
//! `kpt = kappa_phi tau`. Products are expanded once per noise scale; the
//! monomial coefficients are closed-form polynomials in `(kt, kpt)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::algebra::{matrix_element, C64, CodewordSpec, MonomialId};
use crate::error::GkpError;
use crate::Result;

/// Threshold above which the first-order expansion is dubious.
pub const SHORT_TIME_SOFT_LIMIT: f64 = 0.05;

/// Dimensionless loss and dephasing scales `(kappa tau, kappa_phi tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseScale {
    /// Loss rate times cycle time.
    pub kappa_tau: f64,
    /// Dephasing rate times cycle time.
    pub kappa_phi_tau: f64,
}

impl NoiseScale {
    /// Builds a scale, rejecting negative rates.
    pub fn new(kappa_tau: f64, kappa_phi_tau: f64) -> Result<Self> {
        if kappa_tau < 0.0 || kappa_phi_tau < 0.0 {
            return Err(GkpError::NegativeRate {
                kappa_tau,
                kappa_phi_tau,
            });
        }
        Ok(Self {
            kappa_tau,
            kappa_phi_tau,
        })
    }

    /// Zero-noise scale (identity channel).
    pub fn zero() -> Self {
        Self {
            kappa_tau: 0.0,
            kappa_phi_tau: 0.0,
        }
    }

    /// True when either scale exceeds the short-time soft limit.
    pub fn beyond_short_time(&self) -> bool {
        self.kappa_tau > SHORT_TIME_SOFT_LIMIT || self.kappa_phi_tau > SHORT_TIME_SOFT_LIMIT
    }
}

/// A linear combination of moment monomials. Zero coefficients are dropped.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct OperatorPoly {
    terms: BTreeMap<MonomialId, C64>,
}

impl OperatorPoly {
    /// Empty polynomial (the zero operator).
    pub fn zero() -> Self {
        Self::default()
    }

    /// Single-term polynomial.
    pub fn monomial(m: MonomialId, coeff: C64) -> Self {
        let mut p = Self::default();
        p.add_term(m, coeff);
        p
    }

    /// Adds `coeff * m`, dropping the entry if the total vanishes.
    pub fn add_term(&mut self, m: MonomialId, coeff: C64) {
        if coeff.norm_sqr() == 0.0 {
            return;
        }
        let entry = self.terms.entry(m).or_insert(C64::new(0.0, 0.0));
        *entry += coeff;
        if entry.norm_sqr() == 0.0 {
            self.terms.remove(&m);
        }
    }

    /// Iterates over `(monomial, coefficient)` terms.
    pub fn terms(&self) -> impl Iterator<Item = (MonomialId, C64)> + '_ {
        self.terms.iter().map(|(m, c)| (*m, *c))
    }

    /// Coefficient of a monomial (zero if absent).
    pub fn coeff(&self, m: MonomialId) -> C64 {
        self.terms.get(&m).copied().unwrap_or(C64::new(0.0, 0.0))
    }

    /// Number of retained terms.
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    /// True when no terms are retained.
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Formal adjoint: conjugate coefficients, adjoint monomials.
    pub fn adjoint(&self) -> Self {
        let mut out = Self::default();
        for (m, c) in self.terms() {
            out.add_term(m.adjoint(), c.conj());
        }
        out
    }

    /// Difference of two polynomials.
    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m, -c);
        }
        out
    }
}

/// The three first-order Kraus operators as monomial polynomials
/// `(A1, A2, A3)`.
pub fn kraus_polys(scale: NoiseScale) -> Result<(OperatorPoly, OperatorPoly, OperatorPoly)> {
    let s = NoiseScale::new(scale.kappa_tau, scale.kappa_phi_tau)?;
    let one = C64::new(1.0, 0.0);
    let mut a1 = OperatorPoly::zero();
    a1.add_term(MonomialId::I, one);
    a1.add_term(MonomialId::N, C64::new(-s.kappa_tau / 2.0, 0.0));
    a1.add_term(MonomialId::N2, C64::new(-s.kappa_phi_tau / 2.0, 0.0));
    let a2 = OperatorPoly::monomial(MonomialId::A, C64::new(s.kappa_tau.sqrt(), 0.0));
    let a3 = OperatorPoly::monomial(MonomialId::N, C64::new(s.kappa_phi_tau.sqrt(), 0.0));
    Ok((a1, a2, a3))
}

/// Symbolic expansion of `A_j^dag A_i` with 1-based indices in {1, 2, 3}.
///
/// Canonical pairs (j <= i) expand over the eight directly evaluable
/// monomials; pairs with j > i are the formal adjoint of the swapped pair.
pub fn pair_product(j: usize, i: usize, scale: NoiseScale) -> Result<OperatorPoly> {
    if !(1..=3).contains(&j) || !(1..=3).contains(&i) {
        return Err(GkpError::KrausIndex { j, i });
    }
    let s = NoiseScale::new(scale.kappa_tau, scale.kappa_phi_tau)?;
    let kt = s.kappa_tau;
    let kpt = s.kappa_phi_tau;
    let x = kt / 2.0;
    let y = kpt / 2.0;
    let re = |v: f64| C64::new(v, 0.0);
    let mut p = OperatorPoly::zero();
    match (j, i) {
        // A1^dag A1 = (I - x n - y n^2)^2
        (1, 1) => {
            p.add_term(MonomialId::I, re(1.0));
            p.add_term(MonomialId::N, re(-2.0 * x));
            p.add_term(MonomialId::N2, re(x * x - 2.0 * y));
            p.add_term(MonomialId::N3, re(2.0 * x * y));
            p.add_term(MonomialId::N4, re(y * y));
        }
        // A1^dag A2 = sqrt(kt) (a - x n a - y n^2 a)
        (1, 2) => {
            let s = kt.sqrt();
            p.add_term(MonomialId::A, re(s));
            p.add_term(MonomialId::NA, re(-s * x));
            p.add_term(MonomialId::N2A, re(-s * y));
        }
        // A1^dag A3 = sqrt(kpt) (n - x n^2 - y n^3)
        (1, 3) | (3, 1) => {
            let s = kpt.sqrt();
            p.add_term(MonomialId::N, re(s));
            p.add_term(MonomialId::N2, re(-s * x));
            p.add_term(MonomialId::N3, re(-s * y));
        }
        (2, 2) => p.add_term(MonomialId::N, re(kt)),
        // A3^dag A2 = sqrt(kt kpt) n a
        (3, 2) => p.add_term(MonomialId::NA, re((kt * kpt).sqrt())),
        // adjoint routes
        (2, 1) => return Ok(pair_product(1, 2, scale)?.adjoint()),
        (2, 3) => return Ok(pair_product(3, 2, scale)?.adjoint()),
        (3, 3) => p.add_term(MonomialId::N2, re(kpt)),
        _ => unreachable!(),
    }
    Ok(p)
}

/// Linear extension of [`matrix_element`] over a polynomial.
pub fn poly_matrix_element(
    bra: &CodewordSpec,
    ket: &CodewordSpec,
    poly: &OperatorPoly,
) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    for (m, coeff) in poly.terms() {
        total += coeff * matrix_element(bra, ket, m, true)?;
    }
    Ok(total)
}
