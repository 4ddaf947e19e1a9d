//! A scalar reverse-mode tape.
//!
//! Graphs are recorded once through [`GraphBuilder`] and replayed with fresh
//! input values every optimization step; node structure is static, values are
//! not. The primitive set is closed: anything expressible through the builder
//! differentiates exactly.

/// Index of a node in the tape.
pub type NodeId = u32;

/// Handle to a recorded scalar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Node(pub(crate) NodeId);

#[derive(Debug, Clone, Copy)]
enum Op {
    Input(u32),
    Const(f64),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    Neg(NodeId),
    Exp(NodeId),
    Ln(NodeId),
    Sqrt(NodeId),
    Sin(NodeId),
    Cos(NodeId),
    Tanh(NodeId),
    Relu(NodeId),
    Powi(NodeId, i32),
}

/// Records a computation as a flat operation list.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    ops: Vec<Op>,
    n_inputs: u32,
}

impl GraphBuilder {
    /// Empty builder.
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op) -> Node {
        let id = self.ops.len() as NodeId;
        self.ops.push(op);
        Node(id)
    }

    /// Allocates the next input slot.
    pub fn input(&mut self) -> Node {
        let idx = self.n_inputs;
        self.n_inputs += 1;
        self.push(Op::Input(idx))
    }

    /// Allocates `n` consecutive input slots.
    pub fn inputs(&mut self, n: usize) -> Vec<Node> {
        (0..n).map(|_| self.input()).collect()
    }

    /// Embeds a constant.
    pub fn constant(&mut self, v: f64) -> Node {
        self.push(Op::Const(v))
    }

    /// `a + b`
    pub fn add(&mut self, a: Node, b: Node) -> Node {
        self.push(Op::Add(a.0, b.0))
    }

    /// `a - b`
    pub fn sub(&mut self, a: Node, b: Node) -> Node {
        self.push(Op::Sub(a.0, b.0))
    }

    /// `a * b`
    pub fn mul(&mut self, a: Node, b: Node) -> Node {
        self.push(Op::Mul(a.0, b.0))
    }

    /// `a / b`
    pub fn div(&mut self, a: Node, b: Node) -> Node {
        self.push(Op::Div(a.0, b.0))
    }

    /// `-a`
    pub fn neg(&mut self, a: Node) -> Node {
        self.push(Op::Neg(a.0))
    }

    /// `exp(a)`
    pub fn exp(&mut self, a: Node) -> Node {
        self.push(Op::Exp(a.0))
    }

    /// `ln(a)`
    pub fn ln(&mut self, a: Node) -> Node {
        self.push(Op::Ln(a.0))
    }

    /// `sqrt(a)`
    pub fn sqrt(&mut self, a: Node) -> Node {
        self.push(Op::Sqrt(a.0))
    }

    /// `sin(a)`
    pub fn sin(&mut self, a: Node) -> Node {
        self.push(Op::Sin(a.0))
    }

    /// `cos(a)`
    pub fn cos(&mut self, a: Node) -> Node {
        self.push(Op::Cos(a.0))
    }

    /// `tanh(a)`
    pub fn tanh(&mut self, a: Node) -> Node {
        self.push(Op::Tanh(a.0))
    }

    /// `max(0, a)` with subgradient zero at the kink.
    pub fn relu(&mut self, a: Node) -> Node {
        self.push(Op::Relu(a.0))
    }

    /// Integer power `a^n`.
    pub fn powi(&mut self, a: Node, n: i32) -> Node {
        self.push(Op::Powi(a.0, n))
    }

    /// `a * c` with a constant factor.
    pub fn scale(&mut self, a: Node, c: f64) -> Node {
        let k = self.constant(c);
        self.mul(a, k)
    }

    /// Sum of a node list (zero constant when empty).
    pub fn sum(&mut self, nodes: &[Node]) -> Node {
        match nodes.len() {
            0 => self.constant(0.0),
            1 => nodes[0],
            _ => {
                let mut acc = nodes[0];
                for n in &nodes[1..] {
                    acc = self.add(acc, *n);
                }
                acc
            }
        }
    }

    /// Smoothed modulus `sqrt(a^2 + b^2 + eps)`.
    pub fn smooth_hypot(&mut self, a: Node, b: Node, eps: f64) -> Node {
        let a2 = self.mul(a, a);
        let b2 = self.mul(b, b);
        let s = self.add(a2, b2);
        let e = self.constant(eps);
        let s = self.add(s, e);
        self.sqrt(s)
    }

    /// Freezes the recording with a single scalar output.
    pub fn finish(self, output: Node) -> Graph {
        self.finish_with_tracked(output, Vec::new())
    }

    /// Freezes the recording with auxiliary tracked outputs; gradients flow
    /// from the primary output only.
    pub fn finish_with_tracked(self, output: Node, tracked: Vec<Node>) -> Graph {
        Graph {
            ops: self.ops,
            n_inputs: self.n_inputs as usize,
            output: output.0,
            tracked: tracked.into_iter().map(|n| n.0).collect(),
        }
    }
}

/// A frozen computation replayable with fresh inputs.
#[derive(Debug)]
pub struct Graph {
    ops: Vec<Op>,
    n_inputs: usize,
    output: NodeId,
    tracked: Vec<NodeId>,
}

/// Scratch buffers reused across evaluations.
#[derive(Debug, Default)]
pub struct Workspace {
    values: Vec<f64>,
    adjoints: Vec<f64>,
}

impl Graph {
    /// Number of input slots.
    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    /// Number of recorded nodes.
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    /// True when no nodes are recorded.
    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Forward pass; returns the primary output.
    pub fn eval(&self, inputs: &[f64], ws: &mut Workspace) -> f64 {
        assert_eq!(inputs.len(), self.n_inputs, "input arity mismatch");
        let v = &mut ws.values;
        v.resize(self.ops.len(), 0.0);
        for (i, op) in self.ops.iter().enumerate() {
            v[i] = match *op {
                Op::Input(k) => inputs[k as usize],
                Op::Const(c) => c,
                Op::Add(a, b) => v[a as usize] + v[b as usize],
                Op::Sub(a, b) => v[a as usize] - v[b as usize],
                Op::Mul(a, b) => v[a as usize] * v[b as usize],
                Op::Div(a, b) => v[a as usize] / v[b as usize],
                Op::Neg(a) => -v[a as usize],
                Op::Exp(a) => v[a as usize].exp(),
                Op::Ln(a) => v[a as usize].ln(),
                Op::Sqrt(a) => v[a as usize].sqrt(),
                Op::Sin(a) => v[a as usize].sin(),
                Op::Cos(a) => v[a as usize].cos(),
                Op::Tanh(a) => v[a as usize].tanh(),
                Op::Relu(a) => v[a as usize].max(0.0),
                Op::Powi(a, n) => v[a as usize].powi(n),
            };
        }
        v[self.output as usize]
    }

    /// Values of the tracked auxiliary outputs after [`Graph::eval`].
    pub fn tracked_values(&self, ws: &Workspace) -> Vec<f64> {
        self.tracked
            .iter()
            .map(|&id| ws.values[id as usize])
            .collect()
    }

    /// Reverse pass after [`Graph::eval`]; writes `d output / d input_j`.
    pub fn backward(&self, ws: &mut Workspace, grad: &mut [f64]) {
        assert_eq!(grad.len(), self.n_inputs, "gradient arity mismatch");
        let v = &ws.values;
        let adj = &mut ws.adjoints;
        adj.clear();
        adj.resize(self.ops.len(), 0.0);
        adj[self.output as usize] = 1.0;
        grad.fill(0.0);
        for i in (0..self.ops.len()).rev() {
            let g = adj[i];
            if g == 0.0 {
                continue;
            }
            match self.ops[i] {
                Op::Input(k) => grad[k as usize] += g,
                Op::Const(_) => {}
                Op::Add(a, b) => {
                    adj[a as usize] += g;
                    adj[b as usize] += g;
                }
                Op::Sub(a, b) => {
                    adj[a as usize] += g;
                    adj[b as usize] -= g;
                }
                Op::Mul(a, b) => {
                    adj[a as usize] += g * v[b as usize];
                    adj[b as usize] += g * v[a as usize];
                }
                Op::Div(a, b) => {
                    let vb = v[b as usize];
                    adj[a as usize] += g / vb;
                    adj[b as usize] -= g * v[i] / vb;
                }
                Op::Neg(a) => adj[a as usize] -= g,
                Op::Exp(a) => adj[a as usize] += g * v[i],
                Op::Ln(a) => adj[a as usize] += g / v[a as usize],
                Op::Sqrt(a) => adj[a as usize] += g / (2.0 * v[i]),
                Op::Sin(a) => adj[a as usize] += g * v[a as usize].cos(),
                Op::Cos(a) => adj[a as usize] -= g * v[a as usize].sin(),
                Op::Tanh(a) => adj[a as usize] += g * (1.0 - v[i] * v[i]),
                Op::Relu(a) => {
                    if v[a as usize] > 0.0 {
                        adj[a as usize] += g;
                    }
                }
                Op::Powi(a, n) => {
                    adj[a as usize] += g * n as f64 * v[a as usize].powi(n - 1);
                }
            }
        }
    }
}

impl Default for Graph {
    fn default() -> Self {
        Graph {
            ops: Vec::new(),
            n_inputs: 0,
            output: 0,
            tracked: Vec::new(),
        }
    }
}

impl GraphBuilder {
    /// Convenience: record, evaluate, and differentiate a closure once.
    pub fn gradient_of<F>(params: &[f64], f: F) -> (f64, Vec<f64>)
    where
        F: FnOnce(&mut GraphBuilder, &[Node]) -> Node,
    {
        let mut b = GraphBuilder::new();
        let inputs = b.inputs(params.len());
        let out = f(&mut b, &inputs);
        let graph = b.finish(out);
        let mut ws = Workspace::default();
        let value = graph.eval(params, &mut ws);
        let mut grad = vec![0.0; params.len()];
        graph.backward(&mut ws, &mut grad);
        (value, grad)
    }
}

/// Exact reverse-mode gradient of a recorded objective at `params`.
pub fn tape_gradient<F>(f: F, params: &[f64]) -> (f64, Vec<f64>)
where
    F: FnOnce(&mut GraphBuilder, &[Node]) -> Node,
{
    GraphBuilder::gradient_of(params, f)
}
