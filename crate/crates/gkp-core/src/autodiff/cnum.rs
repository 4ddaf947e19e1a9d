//! Complex arithmetic lowered to real node pairs on the tape.

use crate::algebra::C64;

use super::tape::{GraphBuilder, Node};

/// A complex value as two tape nodes.
#[derive(Debug, Clone, Copy)]
pub struct CNode {
    /// Real part.
    pub re: Node,
    /// Imaginary part.
    pub im: Node,
}

impl CNode {
    /// Constant complex value.
    pub fn constant(b: &mut GraphBuilder, v: C64) -> CNode {
        CNode {
            re: b.constant(v.re),
            im: b.constant(v.im),
        }
    }

    /// Complex zero.
    pub fn zero(b: &mut GraphBuilder) -> CNode {
        Self::constant(b, C64::new(0.0, 0.0))
    }

    /// From a real node (zero imaginary part).
    pub fn from_re(b: &mut GraphBuilder, re: Node) -> CNode {
        CNode {
            re,
            im: b.constant(0.0),
        }
    }

    /// `self + rhs`
    pub fn add(self, b: &mut GraphBuilder, rhs: CNode) -> CNode {
        CNode {
            re: b.add(self.re, rhs.re),
            im: b.add(self.im, rhs.im),
        }
    }

    /// `self - rhs`
    pub fn sub(self, b: &mut GraphBuilder, rhs: CNode) -> CNode {
        CNode {
            re: b.sub(self.re, rhs.re),
            im: b.sub(self.im, rhs.im),
        }
    }

    /// `self * rhs`
    pub fn mul(self, b: &mut GraphBuilder, rhs: CNode) -> CNode {
        let ac = b.mul(self.re, rhs.re);
        let bd = b.mul(self.im, rhs.im);
        let ad = b.mul(self.re, rhs.im);
        let bc = b.mul(self.im, rhs.re);
        CNode {
            re: b.sub(ac, bd),
            im: b.add(ad, bc),
        }
    }

    /// `self * c` with a complex constant.
    pub fn mul_const(self, b: &mut GraphBuilder, c: C64) -> CNode {
        if c.im == 0.0 {
            let re = b.scale(self.re, c.re);
            let im = b.scale(self.im, c.re);
            return CNode { re, im };
        }
        let k = CNode::constant(b, c);
        self.mul(b, k)
    }

    /// `self / rhs`
    pub fn div(self, b: &mut GraphBuilder, rhs: CNode) -> CNode {
        let d1 = b.mul(rhs.re, rhs.re);
        let d2 = b.mul(rhs.im, rhs.im);
        let den = b.add(d1, d2);
        let conj = rhs.conj(b);
        let num = self.mul(b, conj);
        CNode {
            re: b.div(num.re, den),
            im: b.div(num.im, den),
        }
    }

    /// Complex conjugate.
    pub fn conj(self, b: &mut GraphBuilder) -> CNode {
        CNode {
            re: self.re,
            im: b.neg(self.im),
        }
    }

    /// `exp(self)` via `e^re (cos im + i sin im)`.
    pub fn exp(self, b: &mut GraphBuilder) -> CNode {
        let mag = b.exp(self.re);
        let c = b.cos(self.im);
        let s = b.sin(self.im);
        CNode {
            re: b.mul(mag, c),
            im: b.mul(mag, s),
        }
    }

    /// Squared modulus as a real node.
    pub fn norm_sqr(self, b: &mut GraphBuilder) -> Node {
        let r2 = b.mul(self.re, self.re);
        let i2 = b.mul(self.im, self.im);
        b.add(r2, i2)
    }

    /// Smoothed modulus `sqrt(|z|^2 + eps)`.
    pub fn smooth_abs(self, b: &mut GraphBuilder, eps: f64) -> Node {
        b.smooth_hypot(self.re, self.im, eps)
    }

    /// Real scalar multiple by a node.
    pub fn scale_node(self, b: &mut GraphBuilder, s: Node) -> CNode {
        CNode {
            re: b.mul(self.re, s),
            im: b.mul(self.im, s),
        }
    }
}

/// Accumulates `sum_k conj(x_k) y_k w_k` with constant complex weights; the
/// workhorse bilinear form of the objective.
pub fn weighted_gram_sum(
    b: &mut GraphBuilder,
    xs: &[CNode],
    ys: &[CNode],
    weights: &[C64],
) -> CNode {
    let mut acc = CNode::zero(b);
    let n = ys.len();
    for (i, x) in xs.iter().enumerate() {
        let xc = x.conj(b);
        for (j, y) in ys.iter().enumerate() {
            let w = weights[i * n + j];
            if w.norm_sqr() == 0.0 {
                continue;
            }
            let prod = xc.mul(b, *y);
            let term = prod.mul_const(b, w);
            acc = acc.add(b, term);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::tape::Workspace;
    use approx::assert_relative_eq;

    fn eval_c(f: impl FnOnce(&mut GraphBuilder, &[Node]) -> CNode, inputs: &[f64]) -> C64 {
        let mut b = GraphBuilder::new();
        let xs = b.inputs(inputs.len());
        let out = f(&mut b, &xs);
        // pack re + i*im via tracked outputs
        let graph = b.finish_with_tracked(out.re, vec![out.im]);
        let mut ws = Workspace::default();
        let re = graph.eval(inputs, &mut ws);
        let im = graph.tracked_values(&ws)[0];
        C64::new(re, im)
    }

    #[test]
    fn complex_ops_match_num_complex() {
        let x = C64::new(0.8, -0.3);
        let y = C64::new(-1.1, 0.45);
        let got = eval_c(
            |b, xs| {
                let zx = CNode { re: xs[0], im: xs[1] };
                let zy = CNode { re: xs[2], im: xs[3] };
                let m = zx.mul(b, zy);
                let d = m.div(b, zx);
                let e = d.exp(b);
                e.add(b, zy)
            },
            &[x.re, x.im, y.re, y.im],
        );
        let want = (x * y / x).exp() + y;
        assert_relative_eq!((got - want).norm(), 0.0, epsilon = 1e-13);
    }

    #[test]
    fn weighted_gram_matches_direct() {
        let xs = [C64::new(0.3, 0.4), C64::new(-0.2, 0.9)];
        let ys = [C64::new(1.1, -0.1), C64::new(0.5, 0.25)];
        let w = [
            C64::new(0.7, 0.0),
            C64::new(0.1, -0.2),
            C64::new(0.0, 0.0),
            C64::new(-0.4, 0.3),
        ];
        let inputs: Vec<f64> = xs
            .iter()
            .chain(ys.iter())
            .flat_map(|z| [z.re, z.im])
            .collect();
        let got = eval_c(
            |b, nodes| {
                let zx = [
                    CNode { re: nodes[0], im: nodes[1] },
                    CNode { re: nodes[2], im: nodes[3] },
                ];
                let zy = [
                    CNode { re: nodes[4], im: nodes[5] },
                    CNode { re: nodes[6], im: nodes[7] },
                ];
                weighted_gram_sum(b, &zx, &zy, &w)
            },
            &inputs,
        );
        let mut want = C64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                want += xs[i].conj() * ys[j] * w[i * 2 + j];
            }
        }
        assert_relative_eq!((got - want).norm(), 0.0, epsilon = 1e-14);
    }
}
