//! Layered computation graph plus its parameter and mask state.
//!
//! A network is a topologically ordered list of nodes (every node's inputs
//! have smaller ids, so skip connections can never form a cycle). All
//! learnable tensors live in a flat parameter table; nodes refer to entries
//! by id. Binary masks attach to individual parameter groups and are kept
//! absorbed into the weights: a masked coordinate is exactly zero at all
//! times, which `set_mask` establishes and the SGD step preserves.

use crate::error::{NetError, Result};
use crate::rng::rng;
use crate::tensor::Tensor;
use rand_chacha::ChaCha8Rng;

pub type NodeId = usize;
pub type ParamId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    /// Raw scores; softmax is applied inside the cross-entropy loss.
    Identity,
}

impl Activation {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed in terms of the pre-activation input.
    pub fn grad(&self, x: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Tanh,
    Relu,
    Lstm,
    Gru,
}

impl Cell {
    /// Rows of the stacked gate matrices per hidden unit.
    pub fn gate_mult(&self) -> usize {
        match self {
            Cell::Tanh | Cell::Relu => 1,
            Cell::Lstm => 4,
            Cell::Gru => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolKind {
    Max,
    Avg,
}

/// Per-sample shape of a node's output.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Vec(usize),
    Map { c: usize, h: usize, w: usize },
}

impl Shape {
    pub fn size(&self) -> usize {
        match *self {
            Shape::Vec(d) => d,
            Shape::Map { c, h, w } => c * h * w,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamKind {
    /// Dense connection weights (feed-forward).
    Weight,
    /// Input-to-hidden weights of a recurrent layer (maskable).
    InputToHidden,
    /// Hidden-to-hidden weights of a recurrent layer.
    HiddenToHidden,
    Bias,
    Embedding,
    /// Convolution kernel.
    Kernel,
    /// 1x1 channel projection at a sum junction.
    Projection,
}

impl ParamKind {
    /// Connection weights are prunable; biases and embeddings are not.
    pub fn prunable(&self) -> bool {
        matches!(
            self,
            ParamKind::Weight
                | ParamKind::InputToHidden
                | ParamKind::HiddenToHidden
                | ParamKind::Kernel
                | ParamKind::Projection
        )
    }
}

#[derive(Debug, Clone)]
pub struct ParamGroup {
    pub name: String,
    pub kind: ParamKind,
    pub tensor: Tensor,
    pub mask: Option<Tensor>,
}

impl ParamGroup {
    /// Count of coordinates not pinned to zero by the mask.
    pub fn unmasked_count(&self) -> usize {
        match &self.mask {
            None => self.tensor.len(),
            Some(m) => m.data().iter().filter(|&&x| x != 0.0).count(),
        }
    }
}

#[derive(Debug, Clone)]
pub enum NodeOp {
    /// Entry point for dense or spatial batches.
    Input,
    /// Entry point for token sequences: looks up one table row per step.
    Embedding { table: ParamId },
    /// z = Σ_s a_s · W_sᵀ + b, a = act(z). One weight tensor per input edge.
    Dense {
        weights: Vec<ParamId>,
        bias: ParamId,
        act: Activation,
    },
    /// Recurrent layer over timesteps; `wx[i]` pairs with `inputs[i]`,
    /// `wh` is the hidden-to-hidden tensor applied to h_{t-1}.
    Recurrent {
        cell: Cell,
        wx: Vec<ParamId>,
        wh: ParamId,
        bias: ParamId,
        width: usize,
    },
    /// Stride-1 same-padding convolution. Projections carry no bias.
    Conv {
        kernel: ParamId,
        bias: Option<ParamId>,
        act: Activation,
        k: usize,
    },
    /// 2x2 stride-2 pooling over full windows.
    Pool { kind: PoolKind },
    GlobalAvgPool,
    /// Elementwise sum of equally shaped inputs.
    Sum,
    /// Channel concatenation of spatially equal maps.
    Concat,
    Identity,
}

#[derive(Debug, Clone)]
pub struct Node {
    pub op: NodeOp,
    pub inputs: Vec<NodeId>,
    pub shape: Shape,
}

#[derive(Debug, Clone)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub params: Vec<ParamGroup>,
    pub output: NodeId,
    pub classes: usize,
}

impl Network {
    pub fn param(&self, id: ParamId) -> &ParamGroup {
        &self.params[id]
    }

    pub fn param_id(&self, name: &str) -> Result<ParamId> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| NetError::UnknownGroup(name.to_string()))
    }

    /// Ids of all prunable (connection-weight) parameter groups.
    pub fn prunable_params(&self) -> Vec<ParamId> {
        (0..self.params.len())
            .filter(|&i| self.params[i].kind.prunable())
            .collect()
    }

    pub fn params_of_kind(&self, kind: ParamKind) -> Vec<ParamId> {
        (0..self.params.len())
            .filter(|&i| self.params[i].kind == kind)
            .collect()
    }

    /// Install a mask on a parameter group and absorb it into the weights.
    /// The mask must match the group's shape exactly and be 0/1-valued.
    pub fn set_mask(&mut self, group: &str, mask: Tensor) -> Result<()> {
        let id = self.param_id(group)?;
        self.set_mask_by_id(id, mask)
    }

    pub fn set_mask_by_id(&mut self, id: ParamId, mask: Tensor) -> Result<()> {
        let p = &mut self.params[id];
        if mask.shape() != p.tensor.shape() {
            return Err(NetError::ShapeMismatch {
                context: format!("mask for group '{}'", p.name),
                expected: format!("{:?}", p.tensor.shape()),
                actual: format!("{:?}", mask.shape()),
            });
        }
        if let Some(&bad) = mask.data().iter().find(|&&x| x != 0.0 && x != 1.0) {
            return Err(NetError::NonBinaryMask {
                group: p.name.clone(),
                value: bad,
            });
        }
        p.tensor.hadamard_assign(&mask);
        p.mask = Some(mask);
        Ok(())
    }

    /// Re-absorb every mask into its weights (idempotent).
    pub fn apply_masks(&mut self) {
        for p in &mut self.params {
            if let Some(m) = &p.mask {
                for (w, &b) in p.tensor.data_mut().iter_mut().zip(m.data()) {
                    if b == 0.0 {
                        *w = 0.0;
                    }
                }
            }
        }
    }

    /// Total and per-group count of prunable coordinates still unmasked.
    pub fn remaining_weights(&self) -> usize {
        self.prunable_params()
            .iter()
            .map(|&id| self.params[id].unmasked_count())
            .sum()
    }
}

/// Incoming edge description for builder methods that support masks.
pub struct EdgeSpec {
    pub src: NodeId,
    pub mask: Option<Tensor>,
}

impl EdgeSpec {
    pub fn dense(src: NodeId) -> EdgeSpec {
        EdgeSpec { src, mask: None }
    }

    pub fn masked(src: NodeId, mask: Tensor) -> EdgeSpec {
        EdgeSpec {
            src,
            mask: Some(mask),
        }
    }
}

/// Assembles a network node by node. Parameters are initialized at
/// creation time from the builder's seeded RNG, so identical construction
/// sequences yield identical networks.
pub struct NetBuilder {
    nodes: Vec<Node>,
    params: Vec<ParamGroup>,
    rng: ChaCha8Rng,
}

impl NetBuilder {
    pub fn new(seed: u64) -> NetBuilder {
        NetBuilder {
            nodes: Vec::new(),
            params: Vec::new(),
            rng: rng(seed),
        }
    }

    fn push_node(&mut self, op: NodeOp, inputs: Vec<NodeId>, shape: Shape) -> NodeId {
        for &i in &inputs {
            assert!(i < self.nodes.len(), "inputs must precede the node");
        }
        self.nodes.push(Node { op, inputs, shape });
        self.nodes.len() - 1
    }

    fn add_param(&mut self, name: String, kind: ParamKind, tensor: Tensor) -> ParamId {
        self.params.push(ParamGroup {
            name,
            kind,
            tensor,
            mask: None,
        });
        self.params.len() - 1
    }

    fn xavier(&mut self, shape: &[usize], fan_in: usize, fan_out: usize) -> Tensor {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Tensor::uniform(shape, a, &mut self.rng)
    }

    pub fn input_vec(&mut self, d: usize) -> NodeId {
        self.push_node(NodeOp::Input, vec![], Shape::Vec(d))
    }

    pub fn input_map(&mut self, c: usize, h: usize, w: usize) -> NodeId {
        self.push_node(NodeOp::Input, vec![], Shape::Map { c, h, w })
    }

    /// Token-sequence entry: one learned vector per code point.
    pub fn embedding(&mut self, vocab: usize, dim: usize) -> NodeId {
        let id = self.nodes.len();
        let table = Tensor::uniform(&[vocab, dim], 0.1, &mut self.rng);
        let table = self.add_param(format!("n{id}.emb"), ParamKind::Embedding, table);
        self.push_node(NodeOp::Embedding { table }, vec![], Shape::Vec(dim))
    }

    pub fn dense(&mut self, inputs: &[NodeId], width: usize, act: Activation) -> NodeId {
        let edges: Vec<EdgeSpec> = inputs.iter().map(|&s| EdgeSpec::dense(s)).collect();
        self.dense_with(edges, width, act)
    }

    pub fn dense_with(&mut self, edges: Vec<EdgeSpec>, width: usize, act: Activation) -> NodeId {
        let id = self.nodes.len();
        let mut weights = Vec::new();
        let mut inputs = Vec::new();
        let mut masks = Vec::new();
        for e in edges {
            let in_dim = self.nodes[e.src].shape.size();
            let w = self.xavier(&[width, in_dim], in_dim, width);
            let pid = self.add_param(format!("n{id}.w{}", e.src), ParamKind::Weight, w);
            weights.push(pid);
            inputs.push(e.src);
            masks.push((pid, e.mask));
        }
        let bias = self.add_param(
            format!("n{id}.b"),
            ParamKind::Bias,
            Tensor::zeros(&[width]),
        );
        let node = self.push_node(
            NodeOp::Dense { weights, bias, act },
            inputs,
            Shape::Vec(width),
        );
        self.install_masks(masks);
        node
    }

    pub fn recurrent(&mut self, inputs: &[NodeId], cell: Cell, width: usize) -> NodeId {
        let edges: Vec<EdgeSpec> = inputs.iter().map(|&s| EdgeSpec::dense(s)).collect();
        self.recurrent_with(edges, cell, width)
    }

    /// Masks on `edges` apply to the input-to-hidden tensors only; the
    /// hidden-to-hidden tensor is always dense by construction.
    pub fn recurrent_with(&mut self, edges: Vec<EdgeSpec>, cell: Cell, width: usize) -> NodeId {
        let id = self.nodes.len();
        let g = cell.gate_mult();
        let a = 1.0 / (width as f64).sqrt();
        let mut wx = Vec::new();
        let mut inputs = Vec::new();
        let mut masks = Vec::new();
        for e in edges {
            let in_dim = self.nodes[e.src].shape.size();
            let w = Tensor::uniform(&[g * width, in_dim], a, &mut self.rng);
            let pid = self.add_param(format!("n{id}.i2h{}", e.src), ParamKind::InputToHidden, w);
            wx.push(pid);
            inputs.push(e.src);
            masks.push((pid, e.mask));
        }
        let wh = Tensor::uniform(&[g * width, width], a, &mut self.rng);
        let wh = self.add_param(format!("n{id}.h2h"), ParamKind::HiddenToHidden, wh);
        let bias = Tensor::uniform(&[g * width], a, &mut self.rng);
        let bias = self.add_param(format!("n{id}.b"), ParamKind::Bias, bias);
        let node = self.push_node(
            NodeOp::Recurrent {
                cell,
                wx,
                wh,
                bias,
                width,
            },
            inputs,
            Shape::Vec(width),
        );
        self.install_masks(masks);
        node
    }

    pub fn conv(&mut self, input: NodeId, out_c: usize, k: usize, act: Activation) -> NodeId {
        assert!(matches!(k, 1 | 3 | 5 | 7), "kernel size {k} unsupported");
        let id = self.nodes.len();
        let (c, h, w) = match self.nodes[input].shape {
            Shape::Map { c, h, w } => (c, h, w),
            _ => panic!("conv input must be a feature map"),
        };
        let kernel = self.xavier(&[out_c, c, k, k], c * k * k, out_c * k * k);
        let kernel = self.add_param(format!("n{id}.k"), ParamKind::Kernel, kernel);
        let bias = self.add_param(
            format!("n{id}.b"),
            ParamKind::Bias,
            Tensor::zeros(&[out_c]),
        );
        self.push_node(
            NodeOp::Conv {
                kernel,
                bias: Some(bias),
                act,
                k,
            },
            vec![input],
            Shape::Map { c: out_c, h, w },
        )
    }

    /// 1x1 linear channel projection (no bias, no activation).
    pub fn project(&mut self, input: NodeId, out_c: usize) -> NodeId {
        let id = self.nodes.len();
        let (c, h, w) = match self.nodes[input].shape {
            Shape::Map { c, h, w } => (c, h, w),
            _ => panic!("projection input must be a feature map"),
        };
        let kernel = self.xavier(&[out_c, c, 1, 1], c, out_c);
        let kernel = self.add_param(format!("n{id}.proj"), ParamKind::Projection, kernel);
        self.push_node(
            NodeOp::Conv {
                kernel,
                bias: None,
                act: Activation::Identity,
                k: 1,
            },
            vec![input],
            Shape::Map { c: out_c, h, w },
        )
    }

    pub fn pool(&mut self, input: NodeId, kind: PoolKind) -> NodeId {
        let (c, h, w) = match self.nodes[input].shape {
            Shape::Map { c, h, w } => (c, h, w),
            _ => panic!("pool input must be a feature map"),
        };
        assert!(h >= 2 && w >= 2, "pooling needs spatial size >= 2");
        self.push_node(
            NodeOp::Pool { kind },
            vec![input],
            Shape::Map {
                c,
                h: h / 2,
                w: w / 2,
            },
        )
    }

    pub fn global_avg_pool(&mut self, input: NodeId) -> NodeId {
        let c = match self.nodes[input].shape {
            Shape::Map { c, .. } => c,
            _ => panic!("global pool input must be a feature map"),
        };
        self.push_node(NodeOp::GlobalAvgPool, vec![input], Shape::Vec(c))
    }

    pub fn sum(&mut self, inputs: &[NodeId]) -> NodeId {
        assert!(!inputs.is_empty());
        let shape = self.nodes[inputs[0]].shape.clone();
        for &i in inputs {
            assert_eq!(self.nodes[i].shape, shape, "sum inputs must match");
        }
        self.push_node(NodeOp::Sum, inputs.to_vec(), shape)
    }

    pub fn concat(&mut self, inputs: &[NodeId]) -> NodeId {
        assert!(!inputs.is_empty());
        let (mut total_c, mut hh, mut ww) = (0, 0, 0);
        for (idx, &i) in inputs.iter().enumerate() {
            match self.nodes[i].shape {
                Shape::Map { c, h, w } => {
                    if idx == 0 {
                        hh = h;
                        ww = w;
                    }
                    assert_eq!((h, w), (hh, ww), "concat inputs must match spatially");
                    total_c += c;
                }
                _ => panic!("concat inputs must be feature maps"),
            }
        }
        self.push_node(
            NodeOp::Concat,
            inputs.to_vec(),
            Shape::Map {
                c: total_c,
                h: hh,
                w: ww,
            },
        )
    }

    pub fn identity(&mut self, input: NodeId) -> NodeId {
        let shape = self.nodes[input].shape.clone();
        self.push_node(NodeOp::Identity, vec![input], shape)
    }

    pub fn shape_of(&self, node: NodeId) -> &Shape {
        &self.nodes[node].shape
    }

    pub fn finish(self, output: NodeId, classes: usize) -> Result<Network> {
        let out_width = self.nodes[output].shape.size();
        if out_width != classes {
            return Err(NetError::Config(format!(
                "output node width {out_width} != classes {classes}"
            )));
        }
        Ok(Network {
            nodes: self.nodes,
            params: self.params,
            output,
            classes,
        })
    }

    fn install_masks(&mut self, masks: Vec<(ParamId, Option<Tensor>)>) {
        for (pid, mask) in masks {
            if let Some(m) = mask {
                let p = &mut self.params[pid];
                assert_eq!(m.shape(), p.tensor.shape(), "mask shape mismatch");
                p.tensor.hadamard_assign(&m);
                p.mask = Some(m);
            }
        }
    }
}

/// 300-100-style multi-layer perceptron.
pub fn mlp(input_dim: usize, hidden: &[usize], classes: usize, seed: u64) -> Network {
    let mut b = NetBuilder::new(seed);
    let mut prev = b.input_vec(input_dim);
    for &h in hidden {
        prev = b.dense(&[prev], h, Activation::Relu);
    }
    let out = b.dense(&[prev], classes, Activation::Identity);
    b.finish(out, classes).expect("mlp construction")
}

/// Embedding followed by a stack of recurrent layers and a linear readout.
pub fn token_rnn(
    vocab: usize,
    emb_dim: usize,
    cell: Cell,
    widths: &[usize],
    classes: usize,
    seed: u64,
) -> Network {
    let mut b = NetBuilder::new(seed);
    let mut prev = b.embedding(vocab, emb_dim);
    for &w in widths {
        prev = b.recurrent(&[prev], cell, w);
    }
    let out = b.dense(&[prev], classes, Activation::Identity);
    b.finish(out, classes).expect("rnn construction")
}
