//! Scalar objectives: the KL-deviation loss and its grid average, the
//! stabilizer-threshold hinge, the generalized-stabilizer loss, the total
//! loss, the stabilizer distance, and the gain ratio.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    compose_exp_linear, exp_linear_expectation, matrix_element, stabilizer_expectation_p,
    stabilizer_expectation_q, stabilizer_ops_from_f, C64, CodewordSpec, FMatrix, MonomialId,
};
use crate::error::GkpError;
use crate::linalg::pairwise_sum;
use crate::noise::{pair_product, poly_matrix_element, NoiseScale};
use crate::Result;

/// Smoothing floor used inside gradient-bearing moduli: `sqrt(|z|^2 + EPS)`.
pub const SMOOTH_ABS_EPS: f64 = 1e-18;

/// The Knill-Laflamme deviation set at one noise scale.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KlReport {
    /// Logical overlap `<0_L|1_L>`.
    pub delta: C64,
    /// `epsilon[j][i] = <1|A_j^dag A_i|1> - <0|A_j^dag A_i|0>` (0-indexed).
    pub epsilon: [[C64; 3]; 3],
    /// `zeta[j][i] = <0|A_j^dag A_i|1>`.
    pub zeta: [[C64; 3]; 3],
}

/// Weights and averaging grid of the total loss.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossWeights {
    /// Weight of the generalized-stabilizer loss.
    pub eta1: f64,
    /// Weight of the eigenstate-threshold hinge.
    pub eta2: f64,
    /// Noise scales averaged by the KL loss.
    pub grid: Vec<NoiseScale>,
    /// Squeezing magnitude fixing the hinge threshold.
    pub threshold_r: f64,
}

impl LossWeights {
    /// Builds weights, enforcing `0 < eta1, eta2` and `eta1 + eta2 < 1`.
    pub fn new(eta1: f64, eta2: f64, grid: Vec<NoiseScale>, threshold_r: f64) -> Result<Self> {
        if !(eta1 > 0.0 && eta2 > 0.0 && eta1 + eta2 < 1.0) {
            return Err(GkpError::InvalidConfig(format!(
                "loss weights must satisfy 0 < eta1, eta2 and eta1 + eta2 < 1; got ({eta1}, {eta2})"
            )));
        }
        if grid.is_empty() {
            return Err(GkpError::EmptyGrid);
        }
        Ok(Self {
            eta1,
            eta2,
            grid,
            threshold_r,
        })
    }

    /// Paper configuration: `eta1 = eta2 = 0.02` on the default grid.
    pub fn paper_defaults(r: f64) -> Self {
        Self {
            eta1: 0.02,
            eta2: 0.02,
            grid: default_grid(),
            threshold_r: r,
        }
    }
}

/// Default training grid: a 6 x 6 uniform lattice over `[0, 0.005]^2`.
///
/// The range comes from the experiments; the density is an artifact choice.
pub fn default_grid() -> Vec<NoiseScale> {
    grid_over(6, 0.005)
}

/// Uniform `n x n` lattice over `[0, hi]^2`.
pub fn grid_over(n: usize, hi: f64) -> Vec<NoiseScale> {
    let mut out = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let kt = hi * i as f64 / (n - 1).max(1) as f64;
            let kpt = hi * j as f64 / (n - 1).max(1) as f64;
            out.push(NoiseScale {
                kappa_tau: kt,
                kappa_phi_tau: kpt,
            });
        }
    }
    out
}

/// Components of the total loss at one parameter point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LossBreakdown {
    /// Grid-averaged KL loss.
    pub l_er_bar: f64,
    /// Eigenstate-threshold hinge.
    pub l_eg: f64,
    /// Generalized-stabilizer loss.
    pub l_st: f64,
    /// Weighted total.
    pub l_tot: f64,
    /// Per-grid-point KL losses, in grid order.
    pub l_er_points: Vec<f64>,
}

/// Precomputed normalized matrix elements of all eleven monomials for the
/// three logical bra/ket combinations needed by the KL data.
///
/// The monomial elements do not depend on the noise scale, so [`kl_report`]
/// over a grid reuses one table.
#[derive(Debug, Clone)]
pub struct MonomialTable {
    diag_diff: [C64; 11],
    cross: [C64; 11],
    delta: C64,
}

impl MonomialTable {
    /// Evaluates the table for a codeword pair.
    pub fn build(code0: &CodewordSpec, code1: &CodewordSpec) -> Result<Self> {
        let mut diag_diff = [C64::new(0.0, 0.0); 11];
        let mut cross = [C64::new(0.0, 0.0); 11];
        for (idx, m) in MonomialId::ALL.iter().enumerate() {
            diag_diff[idx] = matrix_element(code1, code1, *m, true)?
                - matrix_element(code0, code0, *m, true)?;
            cross[idx] = matrix_element(code0, code1, *m, true)?;
        }
        let delta = matrix_element(code0, code1, MonomialId::I, true)?;
        Ok(Self {
            diag_diff,
            cross,
            delta,
        })
    }

    fn index(m: MonomialId) -> usize {
        MonomialId::ALL.iter().position(|x| *x == m).unwrap()
    }

    /// KL report at a noise scale, combining table entries with the
    /// pair-product coefficients.
    pub fn kl_report(&self, scale: NoiseScale) -> Result<KlReport> {
        let zero = C64::new(0.0, 0.0);
        let mut epsilon = [[zero; 3]; 3];
        let mut zeta = [[zero; 3]; 3];
        for j in 1..=3 {
            for i in 1..=3 {
                let poly = pair_product(j, i, scale)?;
                let mut eps = zero;
                let mut zet = zero;
                for (m, coeff) in poly.terms() {
                    let idx = Self::index(m);
                    eps += coeff * self.diag_diff[idx];
                    zet += coeff * self.cross[idx];
                }
                epsilon[j - 1][i - 1] = eps;
                zeta[j - 1][i - 1] = zet;
            }
        }
        Ok(KlReport {
            delta: self.delta,
            epsilon,
            zeta,
        })
    }
}

/// KL deviations at one noise scale via [`poly_matrix_element`].
pub fn kl_report(
    code0: &CodewordSpec,
    code1: &CodewordSpec,
    scale: NoiseScale,
) -> Result<KlReport> {
    let zero = C64::new(0.0, 0.0);
    let delta = matrix_element(code0, code1, MonomialId::I, true)?;
    let mut epsilon = [[zero; 3]; 3];
    let mut zeta = [[zero; 3]; 3];
    for j in 1..=3 {
        for i in 1..=3 {
            let poly = pair_product(j, i, scale)?;
            epsilon[j - 1][i - 1] = poly_matrix_element(code1, code1, &poly)?
                - poly_matrix_element(code0, code0, &poly)?;
            zeta[j - 1][i - 1] = poly_matrix_element(code0, code1, &poly)?;
        }
    }
    Ok(KlReport {
        delta,
        epsilon,
        zeta,
    })
}

fn modulus(z: C64, smoothed: bool) -> f64 {
    if smoothed {
        (z.norm_sqr() + SMOOTH_ABS_EPS).sqrt()
    } else {
        z.norm()
    }
}

/// KL loss `|delta| + sum_ji (|eps_ji| + |zeta_ji|)` over all nine pairs.
pub fn l_er(report: &KlReport) -> f64 {
    l_er_with(report, false)
}

/// KL loss with an optional smoothed modulus (used inside gradients).
pub fn l_er_with(report: &KlReport, smoothed: bool) -> f64 {
    let mut terms = Vec::with_capacity(19);
    terms.push(modulus(report.delta, smoothed));
    for j in 0..3 {
        for i in 0..3 {
            terms.push(modulus(report.epsilon[j][i], smoothed));
            terms.push(modulus(report.zeta[j][i], smoothed));
        }
    }
    pairwise_sum(&terms)
}

/// Grid average of [`l_er`], with the per-point values.
pub fn l_er_bar(
    code0: &CodewordSpec,
    code1: &CodewordSpec,
    grid: &[NoiseScale],
) -> Result<(f64, Vec<f64>)> {
    if grid.is_empty() {
        return Err(GkpError::EmptyGrid);
    }
    let table = MonomialTable::build(code0, code1)?;
    let points = grid
        .par_iter()
        .map(|scale| table.kl_report(*scale).map(|rep| l_er(&rep)))
        .collect::<Result<Vec<f64>>>()?;
    Ok((pairwise_sum(&points) / grid.len() as f64, points))
}

/// Eigenstate-threshold hinge
/// `sum_u max(0, exp(-pi e^{-2r}) - Re<u|S_p|u>)`.
///
/// The real part is compared to the threshold; the expectation is complex in
/// general and treated as a fidelity-like real number.
pub fn l_eg(code0: &CodewordSpec, code1: &CodewordSpec, r: f64) -> Result<f64> {
    if code0.r() != code1.r() {
        return Err(GkpError::SqueezingMismatch {
            bra: code0.r(),
            ket: code1.r(),
        });
    }
    let threshold = stabilizer_expectation_q(r);
    let mut total = 0.0;
    for code in [code0, code1] {
        let sp = stabilizer_expectation_p(code)?;
        total += (threshold - sp.re).max(0.0);
    }
    Ok(total)
}

/// Per-operator deviations `|1 - <u|O|u>|^2` entering [`l_st`], in the order
/// `(u, O)` with `O in {S_q_ap, S_p_ap, S_q_ap^dag S_q_ap, S_p_ap^dag S_p_ap}`.
pub fn l_st_terms(
    code0: &CodewordSpec,
    code1: &CodewordSpec,
    f: &FMatrix,
) -> Result<[f64; 8]> {
    let (sq, sp) = stabilizer_ops_from_f(f)?;
    let one = C64::new(1.0, 0.0);
    let mut out = [0.0; 8];
    for (u, code) in [code0, code1].iter().enumerate() {
        for (k, op) in [sq, sp].iter().enumerate() {
            let ev = exp_linear_expectation(*op, code, code)?;
            out[4 * u + k] = (one - ev).norm_sqr();
            let (combined, prefactor) = compose_exp_linear(op.adjoint(), *op);
            let ev2 = prefactor * exp_linear_expectation(combined, code, code)?;
            out[4 * u + 2 + k] = (one - ev2).norm_sqr();
        }
    }
    Ok(out)
}

/// Generalized-stabilizer loss: the sum of the eight squared deviations.
pub fn l_st(code0: &CodewordSpec, code1: &CodewordSpec, f: &FMatrix) -> Result<f64> {
    Ok(pairwise_sum(&l_st_terms(code0, code1, f)?))
}

/// Total loss `(1 - eta1 - eta2) l_er_bar + eta1 l_st + eta2 l_eg`.
pub fn l_tot(
    code0: &CodewordSpec,
    code1: &CodewordSpec,
    f: &FMatrix,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    let (ler_bar, points) = l_er_bar(code0, code1, &weights.grid)?;
    let leg = l_eg(code0, code1, weights.threshold_r)?;
    let lst = l_st(code0, code1, f)?;
    Ok(LossBreakdown {
        l_er_bar: ler_bar,
        l_eg: leg,
        l_st: lst,
        l_tot: (1.0 - weights.eta1 - weights.eta2) * ler_bar
            + weights.eta1 * lst
            + weights.eta2 * leg,
        l_er_points: points,
    })
}

/// Stabilizer distance `|f11 - 1| + |f22 - 1| + |f12| + |f21|`.
pub fn f_er(f: &FMatrix) -> f64 {
    f.distance_to_ideal()
}

/// Gain ratio `conventional / optimal`; values above one mean the optimal
/// code wins. The main text and supplement use opposite orientations; this
/// artifact standardizes on conventional over optimal.
pub fn gain(l_conventional: f64, l_optimal: f64) -> Result<f64> {
    if l_optimal <= 0.0 {
        return Err(GkpError::ZeroGainDenominator(l_optimal));
    }
    Ok(l_conventional / l_optimal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::Logical;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn small_pair() -> (CodewordSpec, CodewordSpec) {
        let code0 = CodewordSpec::new(
            Logical::Zero,
            1,
            1.0,
            vec![c(0.35, 0.1), c(1.0, 0.0), c(0.4, -0.2)],
        )
        .unwrap();
        let code1 = CodewordSpec::new(
            Logical::One,
            1,
            1.0,
            vec![c(0.3, -0.15), c(0.9, 0.2), c(0.45, 0.05)],
        )
        .unwrap();
        (code0, code1)
    }

    #[test]
    fn zero_scale_report_structure() {
        let (code0, code1) = small_pair();
        let rep = kl_report(&code0, &code1, NoiseScale::zero()).unwrap();
        for j in 0..3 {
            for i in 0..3 {
                assert_relative_eq!(rep.epsilon[j][i].norm(), 0.0, epsilon = 1e-12);
                if (j, i) != (0, 0) {
                    assert_relative_eq!(rep.zeta[j][i].norm(), 0.0, epsilon = 1e-15);
                }
            }
        }
        assert_relative_eq!((rep.zeta[0][0] - rep.delta).norm(), 0.0, epsilon = 1e-12);
        assert_relative_eq!(l_er(&rep), 2.0 * rep.delta.norm(), epsilon = 1e-14);
    }

    #[test]
    fn identical_codes_have_zero_epsilon() {
        let (code0, _) = small_pair();
        let scale = NoiseScale::new(0.002, 0.001).unwrap();
        let mut rep = kl_report(&code0, &code0, scale).unwrap();
        for j in 0..3 {
            for i in 0..3 {
                assert_relative_eq!(rep.epsilon[j][i].norm(), 0.0, epsilon = 1e-12);
            }
        }
        assert_relative_eq!(rep.delta.norm(), 1.0, epsilon = 1e-12);
        // synthetic: zeroed report gives zero loss
        rep.delta = c(0.0, 0.0);
        rep.zeta = [[c(0.0, 0.0); 3]; 3];
        assert_eq!(l_er(&rep), 0.0);
    }

    #[test]
    fn monomial_table_matches_direct_report() {
        let (code0, code1) = small_pair();
        let table = MonomialTable::build(&code0, &code1).unwrap();
        let scale = NoiseScale::new(0.0031, 0.0017).unwrap();
        let fast = table.kl_report(scale).unwrap();
        let slow = kl_report(&code0, &code1, scale).unwrap();
        assert_relative_eq!((fast.delta - slow.delta).norm(), 0.0, epsilon = 1e-14);
        for j in 0..3 {
            for i in 0..3 {
                assert_relative_eq!(
                    (fast.epsilon[j][i] - slow.epsilon[j][i]).norm(),
                    0.0,
                    epsilon = 1e-13
                );
                assert_relative_eq!(
                    (fast.zeta[j][i] - slow.zeta[j][i]).norm(),
                    0.0,
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn l_er_bar_mean_properties() {
        let (code0, code1) = small_pair();
        let scale = NoiseScale::new(0.004, 0.001).unwrap();
        let (single, pts) = l_er_bar(&code0, &code1, &[scale]).unwrap();
        assert_eq!(pts.len(), 1);
        let rep = kl_report(&code0, &code1, scale).unwrap();
        assert_relative_eq!(single, l_er(&rep), epsilon = 1e-13);
        // repeating points leaves the mean unchanged
        let (doubled, _) = l_er_bar(&code0, &code1, &[scale, scale]).unwrap();
        assert_relative_eq!(doubled, single, epsilon = 1e-14);
        assert!(l_er_bar(&code0, &code1, &[]).is_err());
        let (full, _) = l_er_bar(&code0, &code1, &default_grid()).unwrap();
        assert!(full.is_finite() && full > 0.0);
    }

    #[test]
    fn l_eg_single_peak_hinge_active() {
        let r = 1.1;
        let code0 = CodewordSpec::new(Logical::Zero, 0, r, vec![c(1.0, 0.0)]).unwrap();
        let code1 = CodewordSpec::new(Logical::One, 0, r, vec![c(1.0, 0.0)]).unwrap();
        let v = l_eg(&code0, &code1, r).unwrap();
        // <S_p> is exp(-pi e^{2r})-scale tiny, so the hinge sits at the
        // threshold for both codewords
        assert_relative_eq!(v, 2.0 * stabilizer_expectation_q(r), epsilon = 1e-4);
    }

    #[test]
    fn l_st_identity_f_lower_bound() {
        let (code0, code1) = small_pair();
        let f = FMatrix::identity();
        let v = l_st(&code0, &code1, &f).unwrap();
        let sq_term = (1.0 - stabilizer_expectation_q(1.0)).powi(2);
        assert!(v >= sq_term - 1e-12);
    }

    #[test]
    fn l_tot_decomposition_identity() {
        let (code0, code1) = small_pair();
        let weights = LossWeights::paper_defaults(1.0);
        let b = l_tot(&code0, &code1, &FMatrix::identity(), &weights).unwrap();
        let recombined = (1.0 - weights.eta1 - weights.eta2) * b.l_er_bar
            + weights.eta1 * b.l_st
            + weights.eta2 * b.l_eg;
        assert_relative_eq!(b.l_tot, recombined, epsilon = 1e-12);
        // perturbing l_st by delta moves l_tot by eta1 * delta
        let delta = 0.37;
        let perturbed = (1.0 - weights.eta1 - weights.eta2) * b.l_er_bar
            + weights.eta1 * (b.l_st + delta)
            + weights.eta2 * b.l_eg;
        assert_relative_eq!(perturbed - b.l_tot, weights.eta1 * delta, epsilon = 1e-12);
    }

    #[test]
    fn global_phase_invariance() {
        let (code0, code1) = small_pair();
        let phase = C64::from_polar(1.0, 0.83);
        let rotated = code1.scaled(phase);
        let grid = vec![
            NoiseScale::new(0.002, 0.003).unwrap(),
            NoiseScale::new(0.004, 0.001).unwrap(),
        ];
        let (a, _) = l_er_bar(&code0, &code1, &grid).unwrap();
        let (b, _) = l_er_bar(&code0, &rotated, &grid).unwrap();
        assert_relative_eq!(a, b, epsilon = 1e-12);
        assert_relative_eq!(
            l_eg(&code0, &code1, 1.0).unwrap(),
            l_eg(&code0, &rotated, 1.0).unwrap(),
            epsilon = 1e-12
        );
        let f = FMatrix::identity();
        assert_relative_eq!(
            l_st(&code0, &code1, &f).unwrap(),
            l_st(&code0, &rotated, &f).unwrap(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn f_er_values() {
        assert_eq!(f_er(&FMatrix::identity()), 0.0);
        // paper's optimal matrix at 9.55 dB
        let f12 = c(-0.000001, 0.110828);
        let f21 = c(0.002603, -0.025265);
        let f11 = c(1.000214, 0.000054);
        let f22 = (C64::new(1.0, 0.0) + f12 * f21) / f11;
        let f = FMatrix::new(f11, f12, f21, f22).unwrap();
        assert_relative_eq!(f_er(&f), 0.1392, epsilon = 3e-4);
    }

    #[test]
    fn gain_orientation() {
        assert_relative_eq!(gain(1.0, 1.0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(gain(2.0, 1.0).unwrap() > 1.0);
        assert!(gain(1.0, 0.0).is_err());
    }

    #[test]
    fn weights_validation() {
        assert!(LossWeights::new(0.0, 0.1, default_grid(), 1.0).is_err());
        assert!(LossWeights::new(0.6, 0.5, default_grid(), 1.0).is_err());
        assert!(LossWeights::new(0.02, 0.02, vec![], 1.0).is_err());
        assert!(LossWeights::new(0.02, 0.02, default_grid(), 1.1).is_ok());
    }
}
