//! Differentiable total-loss graph.
//!
//! Everything that does not depend on the trainable parameters (kernel
//! values, Gaussian overlaps, grid geometry, pair-product coefficients) is
//! folded into constants up front; the recorded graph touches only the
//! network outputs and the stabilizer matrix entries. The analytic loss in
//! [`crate::loss`] is the reference implementation this graph is tested
//! against.

use crate::algebra::{kernel_xy, C64, Logical, MonomialId};
use crate::loss::{LossWeights, SMOOTH_ABS_EPS};
use crate::noise::pair_product;
use crate::Result;

use super::cnum::CNode;
use super::mlp::{self, PARAM_COUNT};
use super::tape::{Graph, GraphBuilder, Node};

/// Number of stabilizer-matrix inputs (three complex entries).
pub const F_PARAM_COUNT: usize = 6;

/// Total trainable dimension.
pub const TOTAL_PARAMS: usize = PARAM_COUNT + F_PARAM_COUNT;

/// What the objective optimizes.
#[derive(Debug, Clone)]
pub struct ObjectiveSpec {
    /// Grid half-width of both codewords.
    pub m: usize,
    /// Squeezing magnitude.
    pub r: f64,
    /// Loss weights and averaging grid.
    pub weights: LossWeights,
    /// Clamp the imaginary coefficient head to zero.
    pub real_coefficients: bool,
}

/// A frozen loss graph with component outputs.
#[derive(Debug)]
pub struct Objective {
    /// The recorded graph; inputs are the 62 network parameters followed by
    /// `[Re f11, Im f11, Re f12, Im f12, Re f21, Im f21]`.
    pub graph: Graph,
}

/// Indices of the tracked component outputs.
pub mod tracked {
    /// Grid-averaged KL loss (smoothed moduli).
    pub const L_ER_BAR: usize = 0;
    /// Eigenstate hinge.
    pub const L_EG: usize = 1;
    /// Generalized-stabilizer loss.
    pub const L_ST: usize = 2;
}

fn beta_grid(u: Logical, m: usize, r: f64) -> Vec<f64> {
    (-(m as i64)..=(m as i64))
        .map(|k| {
            r.exp() * (std::f64::consts::PI / 2.0).sqrt() * (2.0 * k as f64 + u.index() as f64)
        })
        .collect()
}

fn overlap_ln(bi: f64, bj: f64) -> f64 {
    -(bi * bi + bj * bj) / 2.0 + bi * bj
}

/// Kernel-times-overlap weight table for one `(u, v, monomial)`.
fn weight_table(m_op: MonomialId, bu: &[f64], bv: &[f64], r: f64) -> Result<Vec<C64>> {
    let (lam, lam1) = (r.cosh(), r.sinh());
    let mut out = Vec::with_capacity(bu.len() * bv.len());
    for &x in bu {
        for &y in bv {
            let g = kernel_xy(m_op, C64::new(x, 0.0), C64::new(y, 0.0), lam, lam1)?;
            out.push(g * overlap_ln(x, y).exp());
        }
    }
    Ok(out)
}

fn cdiv_re(b: &mut GraphBuilder, z: CNode, d: Node) -> CNode {
    CNode {
        re: b.div(z.re, d),
        im: b.div(z.im, d),
    }
}

struct PairGram {
    // conj(c_u[i]) * c_v[j], row-major
    nodes: Vec<CNode>,
    n: usize,
}

impl PairGram {
    fn build(b: &mut GraphBuilder, cu: &[CNode], cv: &[CNode]) -> Self {
        let mut nodes = Vec::with_capacity(cu.len() * cv.len());
        for x in cu {
            let xc = x.conj(b);
            for y in cv {
                nodes.push(xc.mul(b, *y));
            }
        }
        Self {
            nodes,
            n: cv.len(),
        }
    }

    /// `sum_ij gram_ij w_ij` with constant weights.
    fn weighted(&self, b: &mut GraphBuilder, weights: &[C64]) -> CNode {
        let mut acc = CNode::zero(b);
        for (g, w) in self.nodes.iter().zip(weights) {
            if w.norm_sqr() == 0.0 {
                continue;
            }
            let term = g.mul_const(b, *w);
            acc = acc.add(b, term);
        }
        let _ = self.n;
        acc
    }

    /// `sum_ij gram_ij factor_ij` with node-valued factors.
    fn contracted(&self, b: &mut GraphBuilder, factors: &[CNode]) -> CNode {
        let mut acc = CNode::zero(b);
        for (g, f) in self.nodes.iter().zip(factors) {
            let term = g.mul(b, *f);
            acc = acc.add(b, term);
        }
        acc
    }
}

/// Exp-linear expectation on the tape: `<u| exp(mu a^dag - nu a) |u>` with
/// node-valued `(mu, nu)`, normalized by the squared norm node.
fn exp_linear_tape(
    b: &mut GraphBuilder,
    gram: &PairGram,
    beta: &[f64],
    r: f64,
    mu: CNode,
    nu: CNode,
    extra_prefactor: Option<CNode>,
    n2: Node,
) -> CNode {
    let (lam, lam1) = (r.cosh(), r.sinh());
    // frame transform
    let mu_l = mu.mul_const(b, C64::new(lam, 0.0));
    let nu_s = nu.mul_const(b, C64::new(lam1, 0.0));
    let mu_p = mu_l.add(b, nu_s);
    let nu_l = nu.mul_const(b, C64::new(lam, 0.0));
    let mu_s = mu.mul_const(b, C64::new(lam1, 0.0));
    let nu_p = nu_l.add(b, mu_s);
    // -(mu' nu')/2 shared across pairs
    let prod = mu_p.mul(b, nu_p);
    let half = prod.mul_const(b, C64::new(-0.5, 0.0));
    let mut factors = Vec::with_capacity(beta.len() * beta.len());
    for &x in beta {
        let mx = mu_p.mul_const(b, C64::new(x, 0.0));
        for &y in beta {
            let ny = nu_p.mul_const(b, C64::new(y, 0.0));
            let mut arg = mx.sub(b, ny);
            arg = arg.add(b, half);
            // fold the constant Gaussian overlap into the exponent
            let ov = b.constant(overlap_ln(x, y));
            arg.re = b.add(arg.re, ov);
            factors.push(arg.exp(b));
        }
    }
    let mut total = gram.contracted(b, &factors);
    if let Some(p) = extra_prefactor {
        total = total.mul(b, p);
    }
    cdiv_re(b, total, n2)
}

/// Builds the total-loss graph for a configuration.
pub fn build_objective(spec: &ObjectiveSpec) -> Result<Objective> {
    let m = spec.m;
    let r = spec.r;
    let nk = 2 * m + 1;
    let beta0 = beta_grid(Logical::Zero, m, r);
    let beta1 = beta_grid(Logical::One, m, r);
    let betas = [&beta0, &beta1];

    // constant tables
    let mut w_tables: Vec<Vec<Vec<C64>>> = vec![vec![Vec::new(); 8]; 4]; // [uv][direct monomial]
    let uv_pairs = [(0usize, 0usize), (1, 1), (0, 1), (1, 0)];
    for (uvi, (u, v)) in uv_pairs.iter().enumerate() {
        for (mi, mono) in MonomialId::DIRECT.iter().enumerate() {
            w_tables[uvi][mi] = weight_table(*mono, betas[*u], betas[*v], r)?;
        }
    }
    let direct_index = |mono: MonomialId| -> usize {
        MonomialId::DIRECT.iter().position(|m| *m == mono).unwrap()
    };
    // shifted overlap tables for <S_p>
    let shift = (2.0 * std::f64::consts::PI).sqrt() * r.exp();
    let sp_tables: [Vec<C64>; 2] = [
        beta0
            .iter()
            .flat_map(|&x| {
                beta0
                    .iter()
                    .map(move |&y| C64::new(overlap_ln(x, y + shift).exp(), 0.0))
            })
            .collect(),
        beta1
            .iter()
            .flat_map(|&x| {
                beta1
                    .iter()
                    .map(move |&y| C64::new(overlap_ln(x, y + shift).exp(), 0.0))
            })
            .collect(),
    ];

    let mut b = GraphBuilder::new();
    let params = b.inputs(TOTAL_PARAMS);
    let (mlp_nodes, f_nodes) = params.split_at(PARAM_COUNT);

    // network outputs per (u, k)
    let bmax = mlp::beta_max(m, r);
    let mut coeffs: [Vec<CNode>; 2] = [Vec::with_capacity(nk), Vec::with_capacity(nk)];
    for (ui, u) in Logical::both().iter().enumerate() {
        for k in -(m as i64)..=(m as i64) {
            let input = mlp::scaled_inputs(*u, k, m, r, bmax);
            coeffs[ui].push(mlp::forward_tape(
                &mut b,
                mlp_nodes,
                input,
                spec.real_coefficients,
            ));
        }
    }

    // pair grams
    let gram00 = PairGram::build(&mut b, &coeffs[0], &coeffs[0]);
    let gram11 = PairGram::build(&mut b, &coeffs[1], &coeffs[1]);
    let gram01 = PairGram::build(&mut b, &coeffs[0], &coeffs[1]);
    let gram10 = PairGram::build(&mut b, &coeffs[1], &coeffs[0]);

    // norms
    let id_idx = direct_index(MonomialId::I);
    let n2_0 = gram00.weighted(&mut b, &w_tables[0][id_idx]).re;
    let n2_1 = gram11.weighted(&mut b, &w_tables[1][id_idx]).re;
    let n0 = b.sqrt(n2_0);
    let n1 = b.sqrt(n2_1);
    let n00 = b.mul(n0, n0);
    let n11 = b.mul(n1, n1);
    let n01 = b.mul(n0, n1);

    // normalized matrix elements of the direct monomials
    let mut me00 = Vec::with_capacity(8);
    let mut me11 = Vec::with_capacity(8);
    let mut me01 = Vec::with_capacity(8);
    let mut me10 = Vec::with_capacity(8);
    for mi in 0..8 {
        let raw00 = gram00.weighted(&mut b, &w_tables[0][mi]);
        me00.push(cdiv_re(&mut b, raw00, n00));
        let raw11 = gram11.weighted(&mut b, &w_tables[1][mi]);
        me11.push(cdiv_re(&mut b, raw11, n11));
        let raw01 = gram01.weighted(&mut b, &w_tables[2][mi]);
        me01.push(cdiv_re(&mut b, raw01, n01));
        let raw10 = gram10.weighted(&mut b, &w_tables[3][mi]);
        me10.push(cdiv_re(&mut b, raw10, n01));
    }

    // all-monomial lookup: diag difference and cross element
    let elem = |b: &mut GraphBuilder, table: &[CNode], swapped: &[CNode], mono: MonomialId| {
        if mono.is_adjoint_form() {
            swapped[direct_index(mono.adjoint())].conj(b)
        } else {
            table[direct_index(mono)]
        }
    };
    let mut diag_diff = Vec::with_capacity(MonomialId::ALL.len());
    let mut cross = Vec::with_capacity(MonomialId::ALL.len());
    for mono in MonomialId::ALL {
        let e11 = elem(&mut b, &me11, &me11, mono);
        let e00 = elem(&mut b, &me00, &me00, mono);
        diag_diff.push(e11.sub(&mut b, e00));
        cross.push(elem(&mut b, &me01, &me10, mono));
    }
    let mono_index = |mono: MonomialId| -> usize {
        MonomialId::ALL.iter().position(|m| *m == mono).unwrap()
    };

    // averaged KL loss
    let delta = cross[mono_index(MonomialId::I)];
    let delta_abs = delta.smooth_abs(&mut b, SMOOTH_ABS_EPS);
    let mut point_losses = Vec::with_capacity(spec.weights.grid.len());
    for scale in &spec.weights.grid {
        let mut terms = vec![delta_abs];
        for j in 1..=3 {
            for i in 1..=3 {
                let poly = pair_product(j, i, *scale)?;
                let mut eps = CNode::zero(&mut b);
                let mut zet = CNode::zero(&mut b);
                for (mono, coeff) in poly.terms() {
                    let idx = mono_index(mono);
                    let de = diag_diff[idx].mul_const(&mut b, coeff);
                    eps = eps.add(&mut b, de);
                    let dz = cross[idx].mul_const(&mut b, coeff);
                    zet = zet.add(&mut b, dz);
                }
                terms.push(eps.smooth_abs(&mut b, SMOOTH_ABS_EPS));
                terms.push(zet.smooth_abs(&mut b, SMOOTH_ABS_EPS));
            }
        }
        point_losses.push(b.sum(&terms));
    }
    let sum_points = b.sum(&point_losses);
    let l_er_bar = b.scale(sum_points, 1.0 / spec.weights.grid.len() as f64);

    // eigenstate hinge
    let threshold = crate::algebra::stabilizer_expectation_q(spec.weights.threshold_r);
    let mut l_eg_terms = Vec::with_capacity(2);
    for (ui, gram, n2) in [(0usize, &gram00, n00), (1, &gram11, n11)] {
        let raw = gram.weighted(&mut b, &sp_tables[ui]);
        let sp = cdiv_re(&mut b, raw, n2);
        let th = b.constant(threshold);
        let gap = b.sub(th, sp.re);
        l_eg_terms.push(b.relu(gap));
    }
    let l_eg = b.sum(&l_eg_terms);

    // stabilizer loss from the f-matrix inputs
    let f11 = CNode {
        re: f_nodes[0],
        im: f_nodes[1],
    };
    let f12 = CNode {
        re: f_nodes[2],
        im: f_nodes[3],
    };
    let f21 = CNode {
        re: f_nodes[4],
        im: f_nodes[5],
    };
    let one = CNode::constant(&mut b, C64::new(1.0, 0.0));
    let f12f21 = f12.mul(&mut b, f21);
    let numer = one.add(&mut b, f12f21);
    let f22 = numer.div(&mut b, f11);
    let s2pi = (2.0 * std::f64::consts::PI).sqrt();
    let i_s = C64::new(0.0, s2pi);
    let r_s = C64::new(s2pi, 0.0);
    // S_q_ap: mu = s(i f11 - f12), nu = s(-i f11 - f12)
    let mu_q = {
        let a = f11.mul_const(&mut b, i_s);
        let c = f12.mul_const(&mut b, r_s);
        a.sub(&mut b, c)
    };
    let nu_q = {
        let a = f11.mul_const(&mut b, -i_s);
        let c = f12.mul_const(&mut b, r_s);
        a.sub(&mut b, c)
    };
    // S_p_ap: mu = s(f22 - i f21), nu = s(f22 + i f21)
    let mu_p = {
        let a = f22.mul_const(&mut b, r_s);
        let c = f21.mul_const(&mut b, i_s);
        a.sub(&mut b, c)
    };
    let nu_p = {
        let a = f22.mul_const(&mut b, r_s);
        let c = f21.mul_const(&mut b, i_s);
        a.add(&mut b, c)
    };
    let mut l_st_terms = Vec::with_capacity(8);
    for (gram, beta, n2) in [(&gram00, &beta0, n00), (&gram11, &beta1, n11)] {
        for (mu, nu) in [(mu_q, nu_q), (mu_p, nu_p)] {
            let ev = exp_linear_tape(&mut b, gram, beta, r, mu, nu, None, n2);
            let dev = one.sub(&mut b, ev);
            l_st_terms.push(dev.norm_sqr(&mut b));
            // O = S^dag S: adjoint has (mu, nu) -> (-conj(nu), -conj(mu));
            // product prefactor exp((mu_a nu - nu_a mu)/2)
            let mu_a = {
                let c = nu.conj(&mut b);
                CNode {
                    re: b.neg(c.re),
                    im: b.neg(c.im),
                }
            };
            let nu_a = {
                let c = mu.conj(&mut b);
                CNode {
                    re: b.neg(c.re),
                    im: b.neg(c.im),
                }
            };
            let t1 = mu_a.mul(&mut b, nu);
            let t2 = nu_a.mul(&mut b, mu);
            let comm = t1.sub(&mut b, t2);
            let half_comm = comm.mul_const(&mut b, C64::new(0.5, 0.0));
            let prefactor = half_comm.exp(&mut b);
            let mu_c = mu_a.add(&mut b, mu);
            let nu_c = nu_a.add(&mut b, nu);
            let ev2 = exp_linear_tape(&mut b, gram, beta, r, mu_c, nu_c, Some(prefactor), n2);
            let dev2 = one.sub(&mut b, ev2);
            l_st_terms.push(dev2.norm_sqr(&mut b));
        }
    }
    let l_st = b.sum(&l_st_terms);

    // total
    let w_er = b.scale(l_er_bar, 1.0 - spec.weights.eta1 - spec.weights.eta2);
    let w_st = b.scale(l_st, spec.weights.eta1);
    let w_eg = b.scale(l_eg, spec.weights.eta2);
    let partial = b.add(w_er, w_st);
    let l_tot = b.add(partial, w_eg);

    Ok(Objective {
        graph: b.finish_with_tracked(l_tot, vec![l_er_bar, l_eg, l_st]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::FMatrix;
    use crate::autodiff::mlp::MlpParams;
    use crate::autodiff::tape::Workspace;
    use crate::loss;
    use approx::assert_relative_eq;

    fn spec(m: usize, r: f64) -> ObjectiveSpec {
        ObjectiveSpec {
            m,
            r,
            weights: LossWeights::paper_defaults(r),
            real_coefficients: false,
        }
    }

    /// The tape objective agrees with the plain loss pipeline at random
    /// parameters (same codewords, same f matrix).
    #[test]
    fn tape_matches_reference_loss() {
        let spec = spec(2, 1.05);
        let objective = build_objective(&spec).unwrap();
        let mlp_params = MlpParams::init(123);
        // modest f deviation for a nontrivial l_st
        let f_flat = [1.02, 0.01, 0.03, 0.08, -0.02, 0.015];
        let mut inputs = mlp_params.values.clone();
        inputs.extend_from_slice(&f_flat);
        let mut ws = Workspace::default();
        let l_tot_tape = objective.graph.eval(&inputs, &mut ws);
        let comps = objective.graph.tracked_values(&ws);

        // reference path
        let code0 =
            mlp::mlp_coefficients(&mlp_params, Logical::Zero, 2, 1.05, false).unwrap();
        let code1 =
            mlp::mlp_coefficients(&mlp_params, Logical::One, 2, 1.05, false).unwrap();
        let f11 = C64::new(f_flat[0], f_flat[1]);
        let f12 = C64::new(f_flat[2], f_flat[3]);
        let f21 = C64::new(f_flat[4], f_flat[5]);
        let f22 = (C64::new(1.0, 0.0) + f12 * f21) / f11;
        let f = FMatrix::new(f11, f12, f21, f22).unwrap();
        let breakdown = loss::l_tot(&code0, &code1, &f, &spec.weights).unwrap();
        // the tape carries the smoothed modulus; rebuild the smoothed
        // reference from per-point reports
        let table = loss::MonomialTable::build(&code0, &code1).unwrap();
        let mut smoothed_sum = 0.0;
        for scale in &spec.weights.grid {
            let rep = table.kl_report(*scale).unwrap();
            smoothed_sum += loss::l_er_with(&rep, true);
        }
        let l_er_bar_smoothed = smoothed_sum / spec.weights.grid.len() as f64;
        assert_relative_eq!(comps[tracked::L_ER_BAR], l_er_bar_smoothed, epsilon = 1e-11);
        assert_relative_eq!(comps[tracked::L_ER_BAR], breakdown.l_er_bar, epsilon = 1e-7);
        assert_relative_eq!(comps[tracked::L_EG], breakdown.l_eg, epsilon = 1e-10);
        assert_relative_eq!(comps[tracked::L_ST], breakdown.l_st, epsilon = 1e-9);
        let recombined = (1.0 - spec.weights.eta1 - spec.weights.eta2) * l_er_bar_smoothed
            + spec.weights.eta1 * breakdown.l_st
            + spec.weights.eta2 * breakdown.l_eg;
        assert_relative_eq!(l_tot_tape, recombined, epsilon = 1e-9);
    }

    /// Central finite differences validate the reverse-mode gradient.
    #[test]
    fn gradient_matches_finite_differences() {
        let spec = spec(1, 0.9);
        let objective = build_objective(&spec).unwrap();
        let mlp_params = MlpParams::init(7);
        let mut params = mlp_params.values.clone();
        params.extend_from_slice(&[1.0, 0.0, 0.02, 0.05, -0.01, 0.03]);
        let mut ws = Workspace::default();
        objective.graph.eval(&params, &mut ws);
        let mut grad = vec![0.0; params.len()];
        objective.graph.backward(&mut ws, &mut grad);
        let h = 1e-5;
        // spot-check a spread of parameter indices
        for &j in &[0usize, 10, 21, 35, 50, 61, 62, 64, 67] {
            let mut up = params.clone();
            up[j] += h;
            let mut dn = params.clone();
            dn[j] -= h;
            let vu = objective.graph.eval(&up, &mut ws);
            let vd = objective.graph.eval(&dn, &mut ws);
            let fd = (vu - vd) / (2.0 * h);
            if fd.abs() < 1e-10 {
                assert!(grad[j].abs() < 1e-8, "param {j}: {} vs {}", grad[j], fd);
            } else {
                assert_relative_eq!(grad[j], fd, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn real_constrained_objective_ignores_imaginary_head() {
        let mut sp = spec(1, 0.9);
        sp.real_coefficients = true;
        let objective = build_objective(&sp).unwrap();
        let mlp_params = MlpParams::init(21);
        let mut a = mlp_params.values.clone();
        a.extend_from_slice(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let mut ws = Workspace::default();
        let va = objective.graph.eval(&a, &mut ws);
        // perturb only the imaginary output head: W3 row 1 sits at 55..60
        // and its bias at 61
        let mut bp = a.clone();
        for idx in [55, 56, 57, 58, 59, 61] {
            bp[idx] += 0.37;
        }
        let vb = objective.graph.eval(&bp, &mut ws);
        assert_relative_eq!(va, vb, epsilon = 1e-14);
    }
}
