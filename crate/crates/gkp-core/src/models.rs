//! Coefficient generators and experiment treatments: the Gaussian-envelope
//! conventional family, the zeta sweep selecting the best conventional code,
//! and the coefficient-perturbation robustness study.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{C64, CodewordSpec, Logical};
use crate::error::GkpError;
use crate::loss::{l_eg, l_er_bar};
use crate::noise::NoiseScale;
use crate::Result;

/// Feasibility tolerance on the eigenstate threshold inside the zeta sweep.
pub const ZETA_FEASIBILITY_TOL: f64 = 1e-6;

/// Inverse Gaussian-envelope width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParam {
    /// `zeta > 0`; larger values narrow the envelope.
    pub zeta: f64,
}

impl EnvelopeParam {
    /// Builds the parameter, rejecting non-finite or non-positive widths.
    pub fn new(zeta: f64) -> Result<Self> {
        if !(zeta.is_finite() && zeta > 0.0) {
            return Err(GkpError::InvalidConfig(format!(
                "zeta must be finite and positive, got {zeta}"
            )));
        }
        Ok(Self { zeta })
    }
}

/// Multiplicative coefficient-noise treatment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    /// Noise magnitude in `(0, 0.02]`.
    pub epsilon: f64,
    /// Number of random draws.
    pub draws: usize,
    /// Base seed; each `(codeword, draw)` gets its own stream.
    pub seed: u64,
}

impl PerturbationSpec {
    /// Builds the spec, enforcing the paper's epsilon range.
    pub fn new(epsilon: f64, draws: usize, seed: u64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon <= 0.02) {
            return Err(GkpError::InvalidConfig(format!(
                "epsilon must lie in (0, 0.02], got {epsilon}"
            )));
        }
        if draws == 0 {
            return Err(GkpError::InvalidConfig("draws must be positive".into()));
        }
        Ok(Self {
            epsilon,
            draws,
            seed,
        })
    }
}

/// Conventional Gaussian-envelope coefficients
/// `c_k = exp[-pi zeta^2 (2k + u)^2 / 2]`, real positive, unnormalized.
pub fn conventional_code(u: Logical, m: usize, r: f64, zeta: f64) -> Result<CodewordSpec> {
    let zeta = EnvelopeParam::new(zeta)?.zeta;
    let coeffs = (-(m as i64)..=(m as i64))
        .map(|k| {
            let q = 2.0 * k as f64 + u.index() as f64;
            C64::new((-std::f64::consts::PI * zeta * zeta * q * q / 2.0).exp(), 0.0)
        })
        .collect();
    CodewordSpec::new(u, m, r, coeffs)
}

fn pair_at(m: usize, r: f64, zeta: f64) -> Result<(CodewordSpec, CodewordSpec)> {
    Ok((
        conventional_code(Logical::Zero, m, r, zeta)?,
        conventional_code(Logical::One, m, r, zeta)?,
    ))
}

fn sweep_objective(m: usize, r: f64, zeta: f64, grid: &[NoiseScale]) -> Result<(f64, f64)> {
    let (c0, c1) = pair_at(m, r, zeta)?;
    let (ler, _) = l_er_bar(&c0, &c1, grid)?;
    let leg = l_eg(&c0, &c1, r)?;
    Ok((ler, leg))
}

/// Outcome of the zeta sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BestConventional {
    /// Minimizing envelope parameter.
    pub envelope: EnvelopeParam,
    /// Averaged KL loss at the minimum.
    pub l_er_bar: f64,
    /// Hinge loss at the minimum (feasible, so at most the tolerance).
    pub l_eg: f64,
    /// Coarse scan: `(zeta, l_er_bar, l_eg)` rows in scan order.
    pub scan: Vec<(f64, f64, f64)>,
}

/// Scans `zeta` over `zeta_range`, restricted to envelopes satisfying the
/// eigenstate threshold (`l_eg <= 1e-6`), then refines the coarse minimum by
/// golden-section search. Reproducible bit-for-bit for fixed inputs.
pub fn best_conventional(
    m: usize,
    r: f64,
    zeta_range: (f64, f64),
    grid: &[NoiseScale],
) -> Result<BestConventional> {
    let (lo, hi) = zeta_range;
    if !(lo > 0.0 && hi >= lo) {
        return Err(GkpError::InvalidConfig(format!(
            "invalid zeta range [{lo}, {hi}]"
        )));
    }
    if lo == hi {
        let (ler, leg) = sweep_objective(m, r, lo, grid)?;
        return Ok(BestConventional {
            envelope: EnvelopeParam::new(lo)?,
            l_er_bar: ler,
            l_eg: leg,
            scan: vec![(lo, ler, leg)],
        });
    }
    let coarse_n = 25;
    let zetas: Vec<f64> = (0..coarse_n)
        .map(|i| lo + (hi - lo) * i as f64 / (coarse_n - 1) as f64)
        .collect();
    let scan: Vec<(f64, f64, f64)> = zetas
        .par_iter()
        .map(|&z| sweep_objective(m, r, z, grid).map(|(ler, leg)| (z, ler, leg)))
        .collect::<Result<_>>()?;
    let mut best_idx: Option<usize> = None;
    for (idx, &(_, ler, leg)) in scan.iter().enumerate() {
        if leg <= ZETA_FEASIBILITY_TOL
            && best_idx.is_none_or(|b| ler < scan[b].1)
        {
            best_idx = Some(idx);
        }
    }
    let best_idx = best_idx.ok_or(GkpError::InfeasibleZetaRange {
        lo,
        hi,
        tol: ZETA_FEASIBILITY_TOL,
    })?;
    // golden-section refinement around the coarse minimum, staying feasible
    let feasible_value = |z: f64| -> Result<f64> {
        let (ler, leg) = sweep_objective(m, r, z, grid)?;
        Ok(if leg <= ZETA_FEASIBILITY_TOL {
            ler
        } else {
            f64::INFINITY
        })
    };
    let mut a = if best_idx == 0 {
        zetas[0]
    } else {
        zetas[best_idx - 1]
    };
    let mut b = if best_idx + 1 == zetas.len() {
        zetas[best_idx]
    } else {
        zetas[best_idx + 1]
    };
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = feasible_value(x1)?;
    let mut f2 = feasible_value(x2)?;
    for _ in 0..40 {
        if (b - a).abs() < 1e-6 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = feasible_value(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = feasible_value(x2)?;
        }
    }
    let zeta_star = if f1 <= f2 { x1 } else { x2 };
    let (ler, leg) = sweep_objective(m, r, zeta_star, grid)?;
    // keep the coarse winner if refinement drifted into infeasibility
    let (zeta_star, ler, leg) = if leg <= ZETA_FEASIBILITY_TOL && ler <= scan[best_idx].1 {
        (zeta_star, ler, leg)
    } else {
        (scan[best_idx].0, scan[best_idx].1, scan[best_idx].2)
    };
    Ok(BestConventional {
        envelope: EnvelopeParam::new(zeta_star)?,
        l_er_bar: ler,
        l_eg: leg,
        scan,
    })
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Applies multiplicative real uniform noise `c_k <- c_k (1 + eps Xi_k)`,
/// `Xi_k ~ U[-0.5, 0.5]`, deterministic given `(seed, draw_index)` and the
/// codeword label. Real factors leave coefficient phases unchanged.
pub fn perturb(
    code: &CodewordSpec,
    spec: &PerturbationSpec,
    draw_index: u64,
) -> Result<CodewordSpec> {
    // stream identity: draw plus logical label, so the two codewords of a
    // pair draw independent noise
    let stream = 2 * draw_index + code.u().index() as u64;
    let mut rng = stream_rng(spec.seed, stream);
    let coeffs = code
        .coeffs()
        .iter()
        .map(|c| {
            let xi: f64 = rng.gen_range(-0.5..=0.5);
            c * C64::new(1.0 + spec.epsilon * xi, 0.0)
        })
        .collect();
    CodewordSpec::new(code.u(), code.m(), code.r(), coeffs)
}

/// One row of the robustness study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RobustnessRow {
    /// Perturbation magnitude.
    pub epsilon: f64,
    /// Mean over draws of `l_er_bar(conv) / l_er_bar(opt)`.
    pub mean_gain: f64,
    /// Variance ratio `var(conv) / var(opt)` of the averaged KL loss.
    pub variance_ratio: f64,
    /// Mean averaged KL loss of the perturbed optimal code pair.
    pub mean_l_opt: f64,
    /// Mean averaged KL loss of the perturbed conventional code pair.
    pub mean_l_conv: f64,
}

/// Robustness study: for each epsilon, perturbs both code pairs `draws`
/// times and reports the per-draw gain statistics and the loss-variance
/// ratio between the conventional and optimal families.
pub fn robustness_study(
    opt_pair: (&CodewordSpec, &CodewordSpec),
    conv_pair: (&CodewordSpec, &CodewordSpec),
    epsilons: &[f64],
    draws: usize,
    seed: u64,
    grid: &[NoiseScale],
) -> Result<Vec<RobustnessRow>> {
    if draws < 2 {
        return Err(GkpError::InvalidConfig(
            "robustness study needs at least 2 draws".into(),
        ));
    }
    epsilons
        .iter()
        .map(|&eps| {
            let spec = PerturbationSpec::new(eps, draws, seed)?;
            let per_draw: Vec<(f64, f64)> = (0..draws as u64)
                .into_par_iter()
                .map(|draw| -> Result<(f64, f64)> {
                    // disjoint stream blocks per family
                    let o0 = perturb(opt_pair.0, &spec, 4 * draw)?;
                    let o1 = perturb(opt_pair.1, &spec, 4 * draw)?;
                    let c0 = perturb(conv_pair.0, &spec, 4 * draw + 1)?;
                    let c1 = perturb(conv_pair.1, &spec, 4 * draw + 1)?;
                    let (lo, _) = l_er_bar(&o0, &o1, grid)?;
                    let (lc, _) = l_er_bar(&c0, &c1, grid)?;
                    Ok((lo, lc))
                })
                .collect::<Result<_>>()?;
            let n = per_draw.len() as f64;
            let mean_gain = per_draw.iter().map(|(lo, lc)| lc / lo).sum::<f64>() / n;
            let mean_l_opt = per_draw.iter().map(|(lo, _)| lo).sum::<f64>() / n;
            let mean_l_conv = per_draw.iter().map(|(_, lc)| lc).sum::<f64>() / n;
            let var_opt = per_draw
                .iter()
                .map(|(lo, _)| (lo - mean_l_opt).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            let var_conv = per_draw
                .iter()
                .map(|(_, lc)| (lc - mean_l_conv).powi(2))
                .sum::<f64>()
                / (n - 1.0);
            Ok(RobustnessRow {
                epsilon: eps,
                mean_gain,
                variance_ratio: var_conv / var_opt,
                mean_l_opt,
                mean_l_conv,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn envelope_limits() {
        // narrow envelope: only c_0 survives for u = 0
        let narrow = conventional_code(Logical::Zero, 2, 1.0, 8.0).unwrap();
        assert_relative_eq!(narrow.coeffs()[2].re, 1.0, epsilon = 1e-15);
        assert!(narrow.coeffs()[3].norm() < 1e-30);
        // flat envelope: all coefficients approach one
        let flat = conventional_code(Logical::Zero, 2, 1.0, 1e-6).unwrap();
        for c in flat.coeffs() {
            assert_relative_eq!(c.re, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn envelope_formula_value() {
        let code = conventional_code(Logical::One, 1, 1.0, 0.3).unwrap();
        // u = 1, k = 0 entry: exp(-pi 0.09 / 2)
        let want = (-std::f64::consts::PI * 0.09 / 2.0).exp();
        assert_relative_eq!(code.coeffs()[1].re, want, epsilon = 1e-15);
        assert_relative_eq!(code.coeffs()[1].re, 0.868167, epsilon = 1e-6);
    }

    #[test]
    fn envelope_symmetry_under_k_reflection() {
        // c_k = c_{-k-u} exactly: envelope depends on (2k + u)^2
        for u in Logical::both() {
            let code = conventional_code(u, 3, 1.1, 0.27).unwrap();
            let m = 3i64;
            for k in -m..=m {
                let refl = -k - u.index();
                if refl < -m || refl > m {
                    continue;
                }
                let a = code.coeffs()[(k + m) as usize];
                let b = code.coeffs()[(refl + m) as usize];
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn zeta_rejects_bad_values() {
        assert!(conventional_code(Logical::Zero, 1, 1.0, 0.0).is_err());
        assert!(conventional_code(Logical::Zero, 1, 1.0, f64::NAN).is_err());
    }

    #[test]
    fn degenerate_range_returns_endpoint() {
        let grid = vec![NoiseScale::new(0.002, 0.002).unwrap()];
        let out = best_conventional(2, 1.0, (0.3, 0.3), &grid).unwrap();
        assert_eq!(out.envelope.zeta, 0.3);
        assert_eq!(out.scan.len(), 1);
    }

    #[test]
    fn sweep_is_reproducible() {
        let grid = vec![
            NoiseScale::new(0.001, 0.003).unwrap(),
            NoiseScale::new(0.004, 0.002).unwrap(),
        ];
        let a = best_conventional(2, 1.0, (0.2, 0.5), &grid).unwrap();
        let b = best_conventional(2, 1.0, (0.2, 0.5), &grid).unwrap();
        assert_eq!(a.envelope.zeta.to_bits(), b.envelope.zeta.to_bits());
        assert_eq!(a.l_er_bar.to_bits(), b.l_er_bar.to_bits());
    }

    #[test]
    fn infeasible_range_signalled() {
        let grid = vec![NoiseScale::new(0.002, 0.002).unwrap()];
        // very narrow envelopes cannot satisfy the eigenstate threshold
        let err = best_conventional(2, 1.1, (1.5, 2.0), &grid);
        assert!(matches!(err, Err(GkpError::InfeasibleZetaRange { .. })));
    }

    #[test]
    fn perturb_determinism_and_bounds() {
        let code = conventional_code(Logical::Zero, 3, 1.1, 0.3).unwrap();
        let spec = PerturbationSpec::new(0.02, 4, 99).unwrap();
        let a = perturb(&code, &spec, 7).unwrap();
        let b = perturb(&code, &spec, 7).unwrap();
        assert_eq!(a.coeffs(), b.coeffs());
        let c = perturb(&code, &spec, 8).unwrap();
        assert_ne!(a.coeffs(), c.coeffs());
        for (orig, new) in code.coeffs().iter().zip(a.coeffs()) {
            let ratio = new.norm() / orig.norm();
            assert!((0.99..=1.01).contains(&ratio));
            // phases preserved under real multiplicative noise
            assert_relative_eq!(orig.arg(), new.arg(), epsilon = 1e-12);
        }
        assert_eq!(a.coeffs().len(), code.coeffs().len());
    }

    #[test]
    fn per_codeword_streams_differ() {
        let c0 = conventional_code(Logical::Zero, 2, 1.1, 0.3).unwrap();
        let c1 = conventional_code(Logical::One, 2, 1.1, 0.3).unwrap();
        let spec = PerturbationSpec::new(0.02, 2, 5).unwrap();
        let p0 = perturb(&c0, &spec, 0).unwrap();
        let p1 = perturb(&c1, &spec, 0).unwrap();
        let r0: Vec<f64> = p0
            .coeffs()
            .iter()
            .zip(c0.coeffs())
            .map(|(a, b)| a.norm() / b.norm())
            .collect();
        let r1: Vec<f64> = p1
            .coeffs()
            .iter()
            .zip(c1.coeffs())
            .map(|(a, b)| a.norm() / b.norm())
            .collect();
        assert_ne!(r0, r1);
    }

    #[test]
    fn perturbation_spec_validation() {
        assert!(PerturbationSpec::new(0.0, 10, 1).is_err());
        assert!(PerturbationSpec::new(0.05, 10, 1).is_err());
        assert!(PerturbationSpec::new(0.01, 0, 1).is_err());
    }
}
