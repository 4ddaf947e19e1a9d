//! Truncated Fock-space numerics: the brute-force oracle backing the
//! analytic formulas, Lindblad time evolution, the exact dephasing channel,
//! code-space fidelity, Bloch-state construction, and Wigner grids.
//!
//! States are built by applying matrix exponentials of truncated generators
//! to the vacuum, a path structurally independent of the squeezed-frame
//! algebra it verifies. The exponential action uses scaled Taylor segments
//! with banded matrix-vector products.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{normalization, C64, CodewordSpec, MonomialId};
use crate::error::GkpError;
use crate::linalg::expm_multiply;
use crate::Result;

/// Default truncation adequate for `M <= 3`, `r <= 1.2`.
pub const DEFAULT_N_TRUNC: usize = 300;

/// Tail-mass bound over the top ten levels of an accepted state.
pub const TAIL_TOL: f64 = 1e-10;

/// A pure state in the truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    amps: DVector<C64>,
}

impl FockVector {
    /// Wraps raw amplitudes.
    pub fn new(amps: DVector<C64>) -> Self {
        Self { amps }
    }

    /// Truncation dimension.
    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Amplitude vector.
    pub fn amps(&self) -> &DVector<C64> {
        &self.amps
    }

    /// Probability mass in the top ten levels.
    pub fn tail_mass(&self) -> f64 {
        let n = self.dim();
        let lo = n.saturating_sub(10);
        (lo..n).map(|i| self.amps[i].norm_sqr()).sum()
    }

    /// Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.amps.norm()
    }

    /// Inner product `<self|other>`.
    pub fn dot(&self, other: &FockVector) -> C64 {
        self.amps.dotc(&other.amps)
    }

    /// Normalized copy.
    pub fn normalized(&self) -> FockVector {
        FockVector::new(self.amps.scale(1.0 / self.norm()))
    }

    /// Outer product `|self><self|`.
    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            data: &self.amps * self.amps.adjoint(),
        }
    }
}

/// A density operator in the truncated Fock basis.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: DMatrix<C64>,
}

impl DensityMatrix {
    /// Wraps a matrix; the caller asserts Hermiticity.
    pub fn new(data: DMatrix<C64>) -> Self {
        Self { data }
    }

    /// Truncation dimension.
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    /// Underlying matrix.
    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    /// Trace.
    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    /// Hermiticity deviation in Frobenius norm.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.data - self.data.adjoint()).norm()
    }
}

/// Applies the annihilation operator: `(a v)_n = sqrt(n + 1) v_{n+1}`.
pub fn apply_a(v: &DVector<C64>) -> DVector<C64> {
    let n = v.len();
    DVector::from_fn(n, |i, _| {
        if i + 1 < n {
            v[i + 1] * C64::new(((i + 1) as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Applies the creation operator: `(a^dag v)_n = sqrt(n) v_{n-1}`.
pub fn apply_adag(v: &DVector<C64>) -> DVector<C64> {
    let n = v.len();
    DVector::from_fn(n, |i, _| {
        if i >= 1 {
            v[i - 1] * C64::new((i as f64).sqrt(), 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Applies the photon-number operator.
pub fn apply_n(v: &DVector<C64>) -> DVector<C64> {
    DVector::from_fn(v.len(), |i, _| v[i] * C64::new(i as f64, 0.0))
}

/// Applies a moment monomial to a vector, composing the elementary maps.
pub fn apply_monomial(op: MonomialId, v: &DVector<C64>) -> DVector<C64> {
    match op {
        MonomialId::I => v.clone(),
        MonomialId::A => apply_a(v),
        MonomialId::ADag => apply_adag(v),
        MonomialId::N => apply_n(v),
        MonomialId::NA => apply_n(&apply_a(v)),
        MonomialId::ADagN => apply_adag(&apply_n(v)),
        MonomialId::N2 => apply_n(&apply_n(v)),
        MonomialId::N2A => apply_n(&apply_n(&apply_a(v))),
        MonomialId::ADagN2 => apply_adag(&apply_n(&apply_n(v))),
        MonomialId::N3 => apply_n(&apply_n(&apply_n(v))),
        MonomialId::N4 => apply_n(&apply_n(&apply_n(&apply_n(v)))),
    }
}

/// Dense matrix of a moment monomial (test oracle use).
pub fn monomial_matrix(op: MonomialId, n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(n, n);
    for col in 0..n {
        let mut e = DVector::<C64>::zeros(n);
        e[col] = C64::new(1.0, 0.0);
        m.set_column(col, &apply_monomial(op, &e));
    }
    m
}

/// Dense matrix of the exp-linear generator `mu a^dag - nu a`.
pub fn exp_linear_generator(mu: C64, nu: C64, n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 1..n {
        let s = C64::new((i as f64).sqrt(), 0.0);
        m[(i, i - 1)] = mu * s; // a^dag part
        m[(i - 1, i)] = -nu * s; // -a part
    }
    m
}

/// Builds `D(alpha) S(r) |0>` via exponentials of the truncated generators
/// `alpha a^dag - alpha^* a` and `(r/2)(a^2 - a^dag^2)`.
pub fn squeezed_coherent_fock(alpha: C64, r: f64, n_trunc: usize) -> Result<FockVector> {
    let mut vac = DVector::<C64>::zeros(n_trunc);
    vac[0] = C64::new(1.0, 0.0);
    // squeeze generator: (r/2)(a^2 - a^dag^2)
    let squeezed = if r != 0.0 {
        let gen_norm = r.abs() * n_trunc as f64;
        expm_multiply(
            |v| {
                let aa = apply_a(&apply_a(v));
                let adad = apply_adag(&apply_adag(v));
                (aa - adad).scale(r / 2.0)
            },
            &vac,
            gen_norm,
        )
    } else {
        vac
    };
    // displacement generator: alpha a^dag - alpha^* a
    let displaced = if alpha.norm_sqr() > 0.0 {
        let gen_norm = 2.0 * alpha.norm() * (n_trunc as f64).sqrt();
        expm_multiply(
            |v| {
                let up = apply_adag(v);
                let dn = apply_a(v);
                up * alpha - dn * alpha.conj()
            },
            &squeezed,
            gen_norm,
        )
    } else {
        squeezed
    };
    let state = FockVector::new(displaced);
    let tail = state.tail_mass();
    if tail > TAIL_TOL {
        return Err(GkpError::TruncationInadequate {
            n_trunc,
            tail,
        });
    }
    Ok(state)
}

/// Normalized Fock vector of a codeword; the pre-normalization norm must
/// match the analytic normalization to the oracle tolerance.
pub fn codeword_vector(code: &CodewordSpec, n_trunc: usize) -> Result<FockVector> {
    let alphas = code.alpha_grid();
    let mut total = DVector::<C64>::zeros(n_trunc);
    for (c, alpha) in code.coeffs().iter().zip(alphas) {
        if c.norm_sqr() == 0.0 {
            continue;
        }
        let comp = squeezed_coherent_fock(C64::new(alpha, 0.0), code.r(), n_trunc)?;
        total += comp.amps().scale(1.0) * *c;
    }
    let state = FockVector::new(total);
    let tail = state.tail_mass();
    if tail > TAIL_TOL * state.norm().powi(2).max(1e-300) {
        return Err(GkpError::TruncationInadequate { n_trunc, tail });
    }
    let _ = normalization(code)?; // surfaces degenerate coefficients early
    Ok(state.normalized())
}

/// Right-hand side of the Lindblad master equation
/// `(kappa/2) D[a] + (kappa_phi/2) D[n]` with
/// `D[x] rho = 2 x rho x^dag - x^dag x rho - rho x^dag x`.
fn lindblad_rhs(rho: &DMatrix<C64>, kappa: f64, kappa_phi: f64) -> DMatrix<C64> {
    let n = rho.nrows();
    let mut out = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // kappa a rho a^dag term needs the (i+1, j+1) element
            let mut v = C64::new(0.0, 0.0);
            if i + 1 < n && j + 1 < n {
                let w = (((i + 1) * (j + 1)) as f64).sqrt();
                v += rho[(i + 1, j + 1)] * C64::new(kappa * w, 0.0);
            }
            let ni = i as f64;
            let nj = j as f64;
            let damp = kappa * 0.5 * (ni + nj) + kappa_phi * 0.5 * (ni - nj).powi(2);
            v -= rho[(i, j)] * C64::new(damp, 0.0);
            out[(i, j)] = v;
        }
    }
    out
}

/// Fourth-order Runge-Kutta integration of the Lindblad equation over time
/// `t` with step `dt`. Rejects runs whose trace drifts beyond `1e-6`.
pub fn lindblad_evolve(
    rho: &DensityMatrix,
    kappa: f64,
    kappa_phi: f64,
    t: f64,
    dt: f64,
) -> Result<DensityMatrix> {
    let trace0 = rho.trace().re;
    let steps = (t / dt).round().max(1.0) as usize;
    let h = t / steps as f64;
    let mut state = rho.data().clone();
    for _ in 0..steps {
        let k1 = lindblad_rhs(&state, kappa, kappa_phi);
        let k2 = lindblad_rhs(&(&state + k1.scale(h / 2.0)), kappa, kappa_phi);
        let k3 = lindblad_rhs(&(&state + k2.scale(h / 2.0)), kappa, kappa_phi);
        let k4 = lindblad_rhs(&(&state + k3.scale(h)), kappa, kappa_phi);
        state += (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(h / 6.0);
    }
    let out = DensityMatrix::new(state);
    let drift = (out.trace().re - trace0).abs();
    if drift > 1e-6 {
        return Err(GkpError::TraceDrift { drift, tol: 1e-6 });
    }
    Ok(out)
}

/// Default step size for [`lindblad_evolve`].
pub fn default_dt(kappa: f64, kappa_phi: f64, t: f64) -> f64 {
    (1e-3 / (kappa + kappa_phi + 1.0)).min(t / 100.0)
}

/// Exact dephasing channel: damps `rho_nm` by `exp[-(kappa_phi t / 2)(n - m)^2]`.
///
/// The time factor is explicit here; `kappa_phi_t` is the product
/// `kappa_phi * t`.
pub fn dephasing_exact(rho: &DensityMatrix, kappa_phi_t: f64) -> DensityMatrix {
    let n = rho.dim();
    let mut out = rho.data().clone();
    for i in 0..n {
        for j in 0..n {
            let d = (i as f64 - j as f64).powi(2);
            out[(i, j)] *= C64::new((-kappa_phi_t / 2.0 * d).exp(), 0.0);
        }
    }
    DensityMatrix::new(out)
}

/// The six Bloch axis states of the logical space, normalized with the exact
/// Gram matrix of `(|0_L>, |1_L>)` (the logical kets need not be orthogonal).
pub fn bloch_states(v0: &FockVector, v1: &FockVector) -> Vec<FockVector> {
    let combos: [(C64, C64); 6] = [
        (C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        (C64::new(0.0, 0.0), C64::new(1.0, 0.0)),
        (C64::new(1.0, 0.0), C64::new(1.0, 0.0)),
        (C64::new(1.0, 0.0), C64::new(-1.0, 0.0)),
        (C64::new(1.0, 0.0), C64::new(0.0, 1.0)),
        (C64::new(1.0, 0.0), C64::new(0.0, -1.0)),
    ];
    combos
        .iter()
        .map(|(c0, c1)| {
            let v = v0.amps() * *c0 + v1.amps() * *c1;
            FockVector::new(v).normalized()
        })
        .collect()
}

/// Average fidelity `(1/6) sum_i Tr[rho_i channel(rho_i)]` over the six
/// Bloch states.
pub fn average_codespace_fidelity<F>(v0: &FockVector, v1: &FockVector, channel: F) -> f64
where
    F: Fn(&DensityMatrix) -> DensityMatrix + Sync,
{
    let states = bloch_states(v0, v1);
    let fids: Vec<f64> = states
        .par_iter()
        .map(|st| {
            let rho = st.density();
            let out = channel(&rho);
            st.amps().dotc(&(out.data() * st.amps())).re
        })
        .collect();
    crate::linalg::pairwise_sum(&fids) / 6.0
}

/// A Wigner quasi-probability grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WignerGrid {
    /// Position axis values.
    pub q_axis: Vec<f64>,
    /// Momentum axis values.
    pub p_axis: Vec<f64>,
    /// Row-major values `w[iq][ip]`.
    pub values: Vec<Vec<f64>>,
}

impl WignerGrid {
    /// Grid integral via the trapezoid weights implied by uniform spacing.
    pub fn integral(&self) -> f64 {
        if self.q_axis.len() < 2 || self.p_axis.len() < 2 {
            return 0.0;
        }
        let dq = self.q_axis[1] - self.q_axis[0];
        let dp = self.p_axis[1] - self.p_axis[0];
        let mut s = 0.0;
        for row in &self.values {
            for v in row {
                s += v;
            }
        }
        s * dq * dp
    }
}

/// Wigner function of a pure state via the displaced-parity form
/// `W(q, p) = (1/pi) <psi| D(alpha) Pi D(alpha)^dag |psi>` with
/// `alpha = (q + i p) / sqrt(2)`.
///
/// The `1/pi` prefactor carries the Jacobian of `d^2 alpha = dq dp / 2`, so
/// the grid integrates to one over `(q, p)` and the vacuum peaks at `1/pi`.
pub fn wigner_grid(
    state: &FockVector,
    q_range: (f64, f64),
    p_range: (f64, f64),
    resolution: (usize, usize),
) -> WignerGrid {
    let (nq, np) = resolution;
    let q_axis: Vec<f64> = (0..nq)
        .map(|i| q_range.0 + (q_range.1 - q_range.0) * i as f64 / (nq - 1).max(1) as f64)
        .collect();
    let p_axis: Vec<f64> = (0..np)
        .map(|i| p_range.0 + (p_range.1 - p_range.0) * i as f64 / (np - 1).max(1) as f64)
        .collect();
    let values: Vec<Vec<f64>> = q_axis
        .par_iter()
        .map(|&q| {
            p_axis
                .iter()
                .map(|&p| {
                    let alpha = C64::new(q, p) / C64::new(2f64.sqrt(), 0.0);
                    wigner_point(state, alpha)
                })
                .collect()
        })
        .collect();
    WignerGrid {
        q_axis,
        p_axis,
        values,
    }
}

/// Single Wigner value at complex displacement `alpha`.
pub fn wigner_point(state: &FockVector, alpha: C64) -> f64 {
    let n = state.dim();
    // phi = D(-alpha) |psi>
    let phi = if alpha.norm_sqr() > 0.0 {
        let gen_norm = 2.0 * alpha.norm() * (n as f64).sqrt();
        expm_multiply(
            |v| {
                let up = apply_adag(v);
                let dn = apply_a(v);
                up * (-alpha) - dn * (-alpha).conj()
            },
            state.amps(),
            gen_norm,
        )
    } else {
        state.amps().clone()
    };
    let mut s = 0.0;
    for i in 0..n {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        s += sign * phi[i].norm_sqr();
    }
    s / std::f64::consts::PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Logical;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn vacuum_is_fixed_point() {
        let v = squeezed_coherent_fock(c(0.0, 0.0), 0.0, 32).unwrap();
        assert_relative_eq!(v.amps()[0].re, 1.0, epsilon = 1e-14);
        assert!(v.amps().rows(1, 31).norm() < 1e-14);
    }

    #[test]
    fn squeezed_vacuum_has_even_parity() {
        let v = squeezed_coherent_fock(c(0.0, 0.0), 0.6, 64).unwrap();
        for i in (1..64).step_by(2) {
            assert!(v.amps()[i].norm() < 1e-12);
        }
        assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn coherent_state_poisson_amplitudes() {
        let alpha = 2.0;
        let v = squeezed_coherent_fock(c(alpha, 0.0), 0.0, 64).unwrap();
        // closed-form cross-check: e^{-|a|^2/2} a^n / sqrt(n!)
        let mut fact = 1.0;
        for n in 0..8 {
            if n > 0 {
                fact *= n as f64;
            }
            let want = (-alpha * alpha / 2.0_f64).exp() * alpha.powi(n as i32) / fact.sqrt();
            assert_relative_eq!(v.amps()[n].re, want, epsilon = 1e-10);
            assert_relative_eq!(v.amps()[n].im, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn truncation_failure_reported() {
        let err = squeezed_coherent_fock(c(6.0, 0.0), 0.0, 24);
        assert!(matches!(err, Err(GkpError::TruncationInadequate { .. })));
    }

    #[test]
    fn codeword_norm_matches_analytic() {
        let code = CodewordSpec::new(
            Logical::Zero,
            1,
            0.9,
            vec![c(0.4, 0.1), c(1.0, 0.0), c(0.3, -0.2)],
        )
        .unwrap();
        let alphas = code.alpha_grid();
        let mut total = DVector::<C64>::zeros(200);
        for (cc, alpha) in code.coeffs().iter().zip(alphas) {
            let comp = squeezed_coherent_fock(c(alpha, 0.0), 0.9, 200).unwrap();
            total += comp.amps().scale(1.0) * *cc;
        }
        let numeric = total.norm();
        let analytic = normalization(&code).unwrap();
        assert_relative_eq!(numeric, analytic, epsilon = 1e-8);
    }

    #[test]
    fn lindblad_zero_rates_identity() {
        let code = CodewordSpec::new(Logical::Zero, 0, 0.5, vec![c(1.0, 0.0)]).unwrap();
        let v = codeword_vector(&code, 64).unwrap();
        let rho = v.density();
        let out = lindblad_evolve(&rho, 0.0, 0.0, 1.0, 0.01).unwrap();
        assert!((out.data() - rho.data()).norm() < 1e-12);
    }

    #[test]
    fn lindblad_matches_exact_dephasing() {
        // arbitrary 30-level test state
        let mut amps = DVector::<C64>::zeros(30);
        for i in 0..30 {
            amps[i] = c((i as f64 * 0.37).sin() * 0.3, (i as f64 * 0.11).cos() * 0.2);
        }
        let v = FockVector::new(amps).normalized();
        let rho = v.density();
        let kpt = 0.008;
        let evolved = lindblad_evolve(&rho, 0.0, kpt, 1.0, 1e-3).unwrap();
        let exact = dephasing_exact(&rho, kpt);
        assert!((evolved.data() - exact.data()).norm() < 1e-6);
    }

    #[test]
    fn dephasing_trivial_cases() {
        let mut amps = DVector::<C64>::zeros(8);
        amps[0] = c(0.6, 0.0);
        amps[3] = c(0.8, 0.0);
        let rho = FockVector::new(amps).normalized().density();
        let same = dephasing_exact(&rho, 0.0);
        assert!((same.data() - rho.data()).norm() < 1e-15);
        // diagonal input unchanged for any strength
        let mut d = DMatrix::<C64>::zeros(8, 8);
        d[(2, 2)] = c(0.5, 0.0);
        d[(5, 5)] = c(0.5, 0.0);
        let rho_d = DensityMatrix::new(d.clone());
        let out = dephasing_exact(&rho_d, 3.0);
        assert!((out.data() - &d).norm() < 1e-15);
        // strong dephasing kills off-diagonals
        let wiped = dephasing_exact(&rho, 1e4);
        for i in 0..8 {
            for j in 0..8 {
                if i != j {
                    assert!(wiped.data()[(i, j)].norm() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn loss_decay_rate_tracks_mean_photon_number() {
        // pure loss at small t on a state with <a> = 0: the first-order
        // fidelity decay rate is kappa (<n> - |<a>|^2) = kappa <n>
        let mut amps = DVector::<C64>::zeros(64);
        amps[4] = c(1.0, 0.0);
        let v = FockVector::new(amps);
        let rho = v.density();
        let kappa = 0.01;
        let t = 0.05;
        let out = lindblad_evolve(&rho, kappa, 0.0, t, 5e-4).unwrap();
        let fid = v.amps().dotc(&(out.data() * v.amps())).re;
        let decay = (1.0 - fid) / t;
        let predicted = kappa * 4.0;
        assert!(
            (decay - predicted).abs() <= 0.1 * predicted,
            "decay {decay} vs predicted {predicted}"
        );
    }

    #[test]
    fn bloch_states_unit_norm_with_gram_correction() {
        let code0 = CodewordSpec::new(
            Logical::Zero,
            1,
            1.0,
            vec![c(0.4, 0.0), c(1.0, 0.0), c(0.4, 0.0)],
        )
        .unwrap();
        let code1 = CodewordSpec::new(
            Logical::One,
            1,
            1.0,
            vec![c(0.5, 0.1), c(0.9, 0.0), c(0.3, -0.1)],
        )
        .unwrap();
        let v0 = codeword_vector(&code0, 256).unwrap();
        let v1 = codeword_vector(&code1, 256).unwrap();
        for st in bloch_states(&v0, &v1) {
            assert_relative_eq!(st.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn identity_channel_average_fidelity_is_one() {
        let code0 = CodewordSpec::new(Logical::Zero, 0, 0.8, vec![c(1.0, 0.0)]).unwrap();
        let code1 = CodewordSpec::new(Logical::One, 0, 0.8, vec![c(1.0, 0.0)]).unwrap();
        let v0 = codeword_vector(&code0, 128).unwrap();
        let v1 = codeword_vector(&code1, 128).unwrap();
        let f = average_codespace_fidelity(&v0, &v1, |rho| rho.clone());
        assert_relative_eq!(f, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn wigner_vacuum_peak() {
        let v = squeezed_coherent_fock(c(0.0, 0.0), 0.0, 48).unwrap();
        let w0 = wigner_point(&v, c(0.0, 0.0));
        assert_relative_eq!(w0, 1.0 / std::f64::consts::PI, epsilon = 1e-12);
        // parity identity at the origin: (1/pi) sum (-1)^n rho_nn
        let grid = wigner_grid(&v, (-4.0, 4.0), (-4.0, 4.0), (41, 41));
        assert_relative_eq!(grid.integral(), 1.0, epsilon = 1e-2);
    }

    #[test]
    fn wigner_parity_identity() {
        let code = CodewordSpec::new(
            Logical::Zero,
            1,
            0.7,
            vec![c(0.3, 0.1), c(1.0, 0.0), c(0.3, -0.1)],
        )
        .unwrap();
        let v = codeword_vector(&code, 200).unwrap();
        let w0 = wigner_point(&v, c(0.0, 0.0));
        let mut parity = 0.0;
        for i in 0..v.dim() {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            parity += sign * v.amps()[i].norm_sqr();
        }
        assert_relative_eq!(w0, parity / std::f64::consts::PI, epsilon = 1e-8);
    }

    /// Integrating W over p reproduces |psi(q)|^2; checked against the
    /// analytic vacuum marginal.
    #[test]
    fn wigner_marginal_matches_position_density() {
        let v = squeezed_coherent_fock(c(0.7, 0.0), 0.0, 64).unwrap();
        let grid = wigner_grid(&v, (-5.0, 5.0), (-6.0, 6.0), (41, 161));
        let dp = grid.p_axis[1] - grid.p_axis[0];
        // coherent state at alpha=0.7: q-wavefunction is a Gaussian centered
        // at sqrt(2) * 0.7 with variance 1/2
        let q0 = 2f64.sqrt() * 0.7;
        for (iq, &q) in grid.q_axis.iter().enumerate() {
            let marginal: f64 = grid.values[iq].iter().sum::<f64>() * dp;
            let want =
                (1.0 / std::f64::consts::PI.sqrt()) * (-(q - q0) * (q - q0)).exp();
            assert!(
                (marginal - want).abs() < 1e-3,
                "q = {q}: marginal {marginal} vs want {want}"
            );
        }
    }
}
