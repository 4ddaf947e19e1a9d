//! The coefficient network: a 3 -> 5 -> 5 -> 2 multilayer perceptron mapping
//! `[beta_k / beta_max, u, k / M]` to `[Re c_k, Im c_k]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{C64, CodewordSpec, Logical};
use crate::Result;

use super::cnum::CNode;
use super::tape::{GraphBuilder, Node};

/// Layer widths of the coefficient network.
pub const LAYERS: [usize; 4] = [3, 5, 5, 2];

/// Total parameter count: `3*5+5 + 5*5+5 + 5*2+2 = 62`.
pub const PARAM_COUNT: usize = 62;

/// Flat parameter vector of the coefficient network, layout
/// `[W1 (5x3 row-major), b1, W2 (5x5), b2, W3 (2x5), b3]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    /// Flattened weights and biases.
    pub values: Vec<f64>,
}

impl MlpParams {
    /// Uniform initialization in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` per
    /// layer, from a seeded generator.
    pub fn init(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut values = Vec::with_capacity(PARAM_COUNT);
        for w in LAYERS.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            for _ in 0..fan_out * fan_in + fan_out {
                values.push(rng.gen_range(-bound..=bound));
            }
        }
        Self { values }
    }

    /// Wraps a raw vector, validating the length.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if values.len() != PARAM_COUNT {
            return Err(crate::error::GkpError::InvalidConfig(format!(
                "expected {PARAM_COUNT} network parameters, got {}",
                values.len()
            )));
        }
        Ok(Self { values })
    }
}

/// Scaled network inputs for one grid point.
pub fn scaled_inputs(u: Logical, k: i64, m: usize, r: f64, beta_max: f64) -> [f64; 3] {
    let alpha = (std::f64::consts::PI / 2.0).sqrt() * (2.0 * k as f64 + u.index() as f64);
    let beta = r.exp() * alpha;
    [
        beta / beta_max,
        u.index() as f64,
        if m == 0 { 0.0 } else { k as f64 / m as f64 },
    ]
}

/// Largest grid `|beta|` over both logical labels; the input scale.
pub fn beta_max(m: usize, r: f64) -> f64 {
    // the u = 1 grid reaches sqrt(pi/2) (2M + 1)
    (std::f64::consts::PI / 2.0).sqrt() * (2.0 * m as f64 + 1.0) * r.exp()
}

fn forward_plain(params: &[f64], input: [f64; 3]) -> [f64; 2] {
    let mut offset = 0;
    let mut act: Vec<f64> = input.to_vec();
    for (layer, w) in LAYERS.windows(2).enumerate() {
        let (fan_in, fan_out) = (w[0], w[1]);
        let weights = &params[offset..offset + fan_out * fan_in];
        let biases = &params[offset + fan_out * fan_in..offset + fan_out * fan_in + fan_out];
        offset += fan_out * fan_in + fan_out;
        let mut next = vec![0.0; fan_out];
        for (o, n) in next.iter_mut().enumerate() {
            let mut s = biases[o];
            for (i, a) in act.iter().enumerate() {
                s += weights[o * fan_in + i] * a;
            }
            *n = if layer + 2 == LAYERS.len() { s } else { s.tanh() };
        }
        act = next;
    }
    [act[0], act[1]]
}

/// Evaluates the network for every grid point of a codeword and assembles
/// the coefficient spec. With `real_only` the imaginary head is clamped to
/// zero.
pub fn mlp_coefficients(
    params: &MlpParams,
    u: Logical,
    m: usize,
    r: f64,
    real_only: bool,
) -> Result<CodewordSpec> {
    let bmax = beta_max(m, r);
    let coeffs: Vec<C64> = (-(m as i64)..=(m as i64))
        .map(|k| {
            let out = forward_plain(&params.values, scaled_inputs(u, k, m, r, bmax));
            C64::new(out[0], if real_only { 0.0 } else { out[1] })
        })
        .collect();
    CodewordSpec::new(u, m, r, coeffs)
}

/// Tape version of the forward pass; `param_nodes` follows the
/// [`MlpParams`] layout and the return value is the complex coefficient.
pub fn forward_tape(
    b: &mut GraphBuilder,
    param_nodes: &[Node],
    input: [f64; 3],
    real_only: bool,
) -> CNode {
    let mut offset = 0;
    let mut act: Vec<Node> = input.iter().map(|&v| b.constant(v)).collect();
    for (layer, w) in LAYERS.windows(2).enumerate() {
        let (fan_in, fan_out) = (w[0], w[1]);
        let weights = &param_nodes[offset..offset + fan_out * fan_in];
        let biases = &param_nodes[offset + fan_out * fan_in..offset + fan_out * fan_in + fan_out];
        offset += fan_out * fan_in + fan_out;
        let mut next = Vec::with_capacity(fan_out);
        for o in 0..fan_out {
            let mut s = biases[o];
            for (i, a) in act.iter().enumerate() {
                let prod = b.mul(weights[o * fan_in + i], *a);
                s = b.add(s, prod);
            }
            next.push(if layer + 2 == LAYERS.len() { s } else { b.tanh(s) });
        }
        act = next;
    }
    if real_only {
        CNode::from_re(b, act[0])
    } else {
        CNode {
            re: act[0],
            im: act[1],
        }
    }
}
