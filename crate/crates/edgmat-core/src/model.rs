//! The edge-directed multi-head attention network over a flow graph.
//!
//! Each convolution layer, per head k, transforms node features with `W_n^k`
//! and edge features with `W_e^k`, scores every edge (j→i) by
//!
//!   s = LeakyReLU( aᵏ·[Wₙᵏh_i ‖ Wₙᵏh_j ‖ Wₑᵏe_{j,i}] )
//!
//! and normalizes the scores with a softmax over each destination node's
//! in-edges. The node update sums the attention-weighted messages
//! `α·(Wₙᵏh_j + Wₑᵏe_{j,i})` over the in-neighborhood, concatenates heads,
//! and adds the transformed skip `W_s·h_i` plus a bias; ReLU between layers,
//! identity after the last. The edge update is the attention-scaled
//! concatenation `α·[Wₙᵏh_j ‖ Wₑᵏe_{j,i}]` per head, with no activation. A
//! node with no in-edges sees an empty sum and updates through the skip term
//! alone.
//!
//! A linear decoder maps final edge embeddings (width `K·2·hidden`) to class
//! logits; training minimizes class-weighted cross entropy over train-masked
//! edges with Adam. Dropout (train time only) hits each layer's node-feature
//! input and the attention coefficients after normalization.

use alloc::format;
use alloc::rc::Rc;
use alloc::string::String;
use alloc::{vec, vec::Vec};

use crate::graph::{EdgeMask, FlowGraph};
use crate::optim::{adam_step, init_uniform, AdamConfig, Parameter};
use crate::rng::StreamRng;
use crate::tape::{Tape, VarId};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Number of convolution layers (T).
    pub layers: usize,
    /// Attention heads per layer (K).
    pub heads: usize,
    /// Per-head output width (d_out).
    pub hidden: usize,
    pub dropout: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub leaky_slope: f64,
    /// Number of classes (C).
    pub classes: usize,
    /// Input node feature width (F_N).
    pub node_dim: usize,
    /// Input edge feature width (F_E).
    pub edge_dim: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Defaults for a dataset with `classes` classes and `feature_dim`-wide
    /// encoded features (initial node features share the edge width).
    pub fn new(classes: usize, feature_dim: usize, seed: u64) -> Self {
        ModelConfig {
            layers: 2,
            heads: 4,
            hidden: 32,
            dropout: 0.2,
            learning_rate: 0.01,
            epochs: 150,
            leaky_slope: 0.2,
            classes,
            node_dim: feature_dim,
            edge_dim: feature_dim,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layers < 1 {
            return Err(ModelError::BadConfig("layers must be ≥ 1".into()));
        }
        if self.heads < 1 {
            return Err(ModelError::BadConfig("heads must be ≥ 1".into()));
        }
        if self.hidden < 1 {
            return Err(ModelError::BadConfig("hidden must be ≥ 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::BadConfig("dropout must be in [0, 1)".into()));
        }
        if self.classes < 2 {
            return Err(ModelError::BadConfig("need at least 2 classes".into()));
        }
        if self.node_dim < 1 || self.edge_dim < 1 {
            return Err(ModelError::BadConfig("feature dims must be ≥ 1".into()));
        }
        if self.leaky_slope < 0.0 {
            return Err(ModelError::BadConfig("leaky slope must be ≥ 0".into()));
        }
        Ok(())
    }

    /// Node input width of layer `t`.
    fn layer_node_dim(&self, t: usize) -> usize {
        if t == 0 {
            self.node_dim
        } else {
            self.heads * self.hidden
        }
    }

    /// Edge input width of layer `t`.
    fn layer_edge_dim(&self, t: usize) -> usize {
        if t == 0 {
            self.edge_dim
        } else {
            2 * self.heads * self.hidden
        }
    }

    /// Width of the final edge embeddings feeding the decoder.
    pub fn embedding_dim(&self) -> usize {
        2 * self.heads * self.hidden
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    BadConfig(String),
    DimMismatch {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    NoTrainEdges,
    HeadOutOfRange { head: usize, heads: usize },
    LayerOutOfRange { layer: usize, layers: usize },
}

impl core::fmt::Display for ModelError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ModelError::BadConfig(m) => write!(f, "bad model config: {m}"),
            ModelError::DimMismatch {
                what,
                expected,
                actual,
            } => write!(f, "{what}: expected {expected}, got {actual}"),
            ModelError::NoTrainEdges => write!(f, "graph has no train-masked edges"),
            ModelError::HeadOutOfRange { head, heads } => {
                write!(f, "head {head} out of range for {heads} heads")
            }
            ModelError::LayerOutOfRange { layer, layers } => {
                write!(f, "layer {layer} out of range for {layers} layers")
            }
        }
    }
}

impl core::error::Error for ModelError {}

/// Per-layer weights: one node transform, edge transform, and attention
/// vector per head, plus the shared skip transform and bias.
#[derive(Debug, Clone)]
pub struct EdgmatLayerParams {
    pub w_node: Vec<Parameter>,
    pub w_edge: Vec<Parameter>,
    pub attn: Vec<Parameter>,
    pub w_skip: Parameter,
    pub bias: Parameter,
}

#[derive(Debug, Clone)]
pub struct EdgmatModel {
    pub config: ModelConfig,
    pub layers: Vec<EdgmatLayerParams>,
    pub decoder_weight: Parameter,
    pub decoder_bias: Parameter,
}

/// Per-edge classification output.
#[derive(Debug, Clone)]
pub struct Predictions {
    pub classes: Vec<usize>,
    /// `[|E| × C]`, rows sum to 1.
    pub probabilities: Tensor,
}

/// Loss trace and warnings from a training run.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub loss_trace: Vec<f64>,
    pub class_weights: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Final embeddings and logits of one forward pass.
#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub node_embeddings: Tensor,
    pub edge_embeddings: Tensor,
    pub logits: Tensor,
}

struct RunVars {
    node_embeddings: VarId,
    edge_embeddings: VarId,
    logits: VarId,
}

impl EdgmatModel {
    /// Initialize all weights from `config.seed`; same config, same weights.
    pub fn new(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let (k, d) = (config.heads, config.hidden);
        let seed = config.seed;
        let mut layers = Vec::with_capacity(config.layers);
        for t in 0..config.layers {
            let dn = config.layer_node_dim(t);
            let de = config.layer_edge_dim(t);
            let mut w_node = Vec::with_capacity(k);
            let mut w_edge = Vec::with_capacity(k);
            let mut attn = Vec::with_capacity(k);
            for h in 0..k {
                w_node.push(init_uniform(
                    &format!("layer{t}.head{h}.w_node"),
                    &[dn, d],
                    dn,
                    d,
                    seed,
                ));
                w_edge.push(init_uniform(
                    &format!("layer{t}.head{h}.w_edge"),
                    &[de, d],
                    de,
                    d,
                    seed,
                ));
                attn.push(init_uniform(
                    &format!("layer{t}.head{h}.attn"),
                    &[3 * d],
                    3 * d,
                    1,
                    seed,
                ));
            }
            let w_skip = init_uniform(&format!("layer{t}.w_skip"), &[dn, k * d], dn, k * d, seed);
            let bias = Parameter::new(format!("layer{t}.bias"), Tensor::zeros(&[k * d]));
            layers.push(EdgmatLayerParams {
                w_node,
                w_edge,
                attn,
                w_skip,
                bias,
            });
        }
        let emb = config.embedding_dim();
        let decoder_weight = init_uniform(
            "decoder.weight",
            &[emb, config.classes],
            emb,
            config.classes,
            seed,
        );
        let decoder_bias = Parameter::new(
            String::from("decoder.bias"),
            Tensor::zeros(&[config.classes]),
        );
        Ok(EdgmatModel {
            config,
            layers,
            decoder_weight,
            decoder_bias,
        })
    }

    /// All parameters in canonical (checkpoint and gradient-check) order.
    pub fn params(&self) -> Vec<&Parameter> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(layer.w_node.iter());
            out.extend(layer.w_edge.iter());
            out.extend(layer.attn.iter());
            out.push(&layer.w_skip);
            out.push(&layer.bias);
        }
        out.push(&self.decoder_weight);
        out.push(&self.decoder_bias);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = Vec::new();
        for layer in &mut self.layers {
            out.extend(layer.w_node.iter_mut());
            out.extend(layer.w_edge.iter_mut());
            out.extend(layer.attn.iter_mut());
            out.push(&mut layer.w_skip);
            out.push(&mut layer.bias);
        }
        out.push(&mut self.decoder_weight);
        out.push(&mut self.decoder_bias);
        out
    }

    fn check_graph(&self, graph: &FlowGraph) -> Result<(), ModelError> {
        if graph.edge_count() == 0 && graph.node_count() == 0 {
            return Ok(());
        }
        let dim = graph.feature_dim();
        if dim != self.config.edge_dim {
            return Err(ModelError::DimMismatch {
                what: "graph feature dim",
                expected: self.config.edge_dim,
                actual: dim,
            });
        }
        Ok(())
    }

    /// Register every parameter as a tape leaf, in [`EdgmatModel::params`]
    /// order.
    fn register_params(&self, tape: &mut Tape) -> Vec<VarId> {
        self.params()
            .into_iter()
            .map(|p| tape.leaf(p.value.clone()))
            .collect()
    }

    /// Record the layer stack and decoder on `tape`, reading weights from
    /// `param_vars` (aligned with [`EdgmatModel::params`]). Dropout masks
    /// are drawn from `rng` only when `training` is set.
    fn run_on_tape(
        &self,
        tape: &mut Tape,
        graph: &FlowGraph,
        param_vars: &[VarId],
        training: bool,
        rng: &mut StreamRng,
    ) -> RunVars {
        let src = Rc::new(graph.edge_sources());
        let dst = Rc::new(graph.edge_destinations());
        let num_nodes = graph.node_count();
        let p = self.config.dropout;
        let slope = self.config.leaky_slope;
        let k_heads = self.config.heads;

        let mut cursor = 0usize;
        let mut next = || {
            cursor += 1;
            param_vars[cursor - 1]
        };
        let mut layer_vars = Vec::with_capacity(self.layers.len());
        for _ in &self.layers {
            let w_node: Vec<VarId> = (0..k_heads).map(|_| next()).collect();
            let w_edge: Vec<VarId> = (0..k_heads).map(|_| next()).collect();
            let attn: Vec<VarId> = (0..k_heads).map(|_| next()).collect();
            layer_vars.push((w_node, w_edge, attn, next(), next()));
        }
        let dec_w = next();
        let dec_b = next();

        let mut h = tape.leaf(graph.node_feature_matrix());
        let mut e = tape.leaf(graph.edge_feature_matrix());

        let last = self.layers.len() - 1;
        for (t, (w_node, w_edge, attn, w_skip, bias)) in layer_vars.iter().enumerate() {
            let h_in = tape.dropout(h, p, training, rng);
            let mut head_aggs = Vec::with_capacity(k_heads);
            let mut head_eblocks = Vec::with_capacity(k_heads);
            for k in 0..k_heads {
                let hn = tape.matmul(h_in, w_node[k]);
                let ee = tape.matmul(e, w_edge[k]);
                let hn_dst = tape.gather_rows(hn, dst.clone());
                let hn_src = tape.gather_rows(hn, src.clone());
                let z = tape.concat(&[hn_dst, hn_src, ee], 1);
                let scores = tape.matvec(z, attn[k]);
                let scores = tape.leaky_relu(scores, slope);
                let alpha = tape.segment_softmax(scores, dst.clone());
                let alpha = tape.dropout(alpha, p, training, rng);

                let msg = tape.add(hn_src, ee);
                let weighted = tape.scale_rows(msg, alpha);
                head_aggs.push(tape.segment_sum(weighted, dst.clone(), num_nodes));

                let eblock = tape.concat(&[hn_src, ee], 1);
                head_eblocks.push(tape.scale_rows(eblock, alpha));
            }
            let agg = tape.concat(&head_aggs, 1);
            let skip = tape.matmul(h_in, *w_skip);
            let summed = tape.add(skip, agg);
            let pre = tape.add_row_broadcast(summed, *bias);
            h = if t < last { tape.relu(pre) } else { pre };
            e = tape.concat(&head_eblocks, 1);
        }

        let scored = tape.matmul(e, dec_w);
        let logits = tape.add_row_broadcast(scored, dec_b);
        RunVars {
            node_embeddings: h,
            edge_embeddings: e,
            logits,
        }
    }

    fn empty_output(&self) -> ForwardOutput {
        ForwardOutput {
            node_embeddings: Tensor::zeros(&[0, self.config.heads * self.config.hidden]),
            edge_embeddings: Tensor::zeros(&[0, self.config.embedding_dim()]),
            logits: Tensor::zeros(&[0, self.config.classes]),
        }
    }

    /// Forward pass at the tensor level. Dropout is active only when
    /// `training` is set; inference is deterministic with no rng needed.
    pub fn forward(
        &self,
        graph: &FlowGraph,
        training: bool,
        rng: Option<&mut StreamRng>,
    ) -> Result<ForwardOutput, ModelError> {
        self.check_graph(graph)?;
        if graph.node_count() == 0 {
            return Ok(self.empty_output());
        }
        let mut tape = Tape::new();
        let param_vars = self.register_params(&mut tape);
        let mut fallback = StreamRng::new(self.config.seed, "dropout");
        let rng = rng.unwrap_or(&mut fallback);
        let vars = self.run_on_tape(&mut tape, graph, &param_vars, training, rng);
        Ok(ForwardOutput {
            node_embeddings: tape.value(vars.node_embeddings).clone(),
            edge_embeddings: tape.value(vars.edge_embeddings).clone(),
            logits: tape.value(vars.logits).clone(),
        })
    }

    /// Inverse-frequency class weights over train-masked edges:
    /// `w_c = n_total / (C · n_c)`; a class absent from training gets weight
    /// 0 and a warning.
    pub fn class_weights(&self, graph: &FlowGraph) -> (Vec<f64>, Vec<String>) {
        let classes = self.config.classes;
        let mut counts = vec![0usize; classes];
        let mut total = 0usize;
        for e in &graph.edges {
            if e.mask == EdgeMask::Train {
                counts[e.label] += 1;
                total += 1;
            }
        }
        let mut warnings = Vec::new();
        let weights = counts
            .iter()
            .enumerate()
            .map(|(c, &n)| {
                if n == 0 {
                    warnings.push(format!("class {c} absent from training edges; weight 0"));
                    0.0
                } else {
                    total as f64 / (classes as f64 * n as f64)
                }
            })
            .collect();
        (weights, warnings)
    }

    /// Train in place for the configured number of epochs, minimizing
    /// class-weighted cross entropy over the train-masked edges. Returns the
    /// per-epoch loss trace (loss measured before each step). Deterministic
    /// for a fixed config and seed.
    pub fn train(&mut self, graph: &FlowGraph) -> Result<TrainOutcome, ModelError> {
        self.check_graph(graph)?;
        let train_edges = graph.masked_edges(EdgeMask::Train);
        if train_edges.is_empty() {
            return Err(ModelError::NoTrainEdges);
        }
        let labels: Rc<Vec<usize>> =
            Rc::new(train_edges.iter().map(|&e| graph.edges[e].label).collect());
        let train_edges = Rc::new(train_edges);
        let (class_weights, warnings) = self.class_weights(graph);
        let adam = AdamConfig {
            learning_rate: self.config.learning_rate,
            ..AdamConfig::default()
        };
        let mut rng = StreamRng::new(self.config.seed, "dropout");
        let mut loss_trace = Vec::with_capacity(self.config.epochs);
        for _ in 0..self.config.epochs {
            let mut tape = Tape::new();
            let param_vars = self.register_params(&mut tape);
            let vars = self.run_on_tape(&mut tape, graph, &param_vars, true, &mut rng);
            let train_logits = tape.gather_rows(vars.logits, train_edges.clone());
            let loss = tape.weighted_cross_entropy(train_logits, labels.clone(), &class_weights);
            loss_trace.push(tape.value(loss).item());
            tape.backward(loss);
            for (p, &vid) in self.params_mut().into_iter().zip(&param_vars) {
                p.grad = tape.grad(vid);
            }
            adam_step(self.params_mut(), &adam);
        }
        Ok(TrainOutcome {
            loss_trace,
            class_weights,
            warnings,
        })
    }

    /// Per-edge class probabilities and argmax predictions (ties take the
    /// lowest class id).
    pub fn predict(&self, graph: &FlowGraph) -> Result<Predictions, ModelError> {
        let out = self.forward(graph, false, None)?;
        let probabilities = out.logits.softmax_rows();
        let classes = (0..probabilities.rows())
            .map(|i| {
                let row = probabilities.row(i);
                let mut best = 0;
                for (j, &v) in row.iter().enumerate() {
                    if v > row[best] {
                        best = j;
                    }
                }
                best
            })
            .collect();
        Ok(Predictions {
            classes,
            probabilities,
        })
    }

    /// Attention coefficients of one head of one layer on the given
    /// node/edge features: softmax-normalized per destination node.
    pub fn attention_coefficients(
        &self,
        layer: usize,
        graph: &FlowGraph,
        h: &Tensor,
        e: &Tensor,
        head: usize,
    ) -> Result<Tensor, ModelError> {
        let lp = self.layer_params(layer)?;
        if head >= self.config.heads {
            return Err(ModelError::HeadOutOfRange {
                head,
                heads: self.config.heads,
            });
        }
        self.check_layer_inputs(layer, graph, h, e)?;
        let mut tape = Tape::new();
        let hv = tape.leaf(h.clone());
        let ev = tape.leaf(e.clone());
        let wn = tape.leaf(lp.w_node[head].value.clone());
        let we = tape.leaf(lp.w_edge[head].value.clone());
        let av = tape.leaf(lp.attn[head].value.clone());
        let hn = tape.matmul(hv, wn);
        let ee = tape.matmul(ev, we);
        let hn_dst = tape.gather_rows(hn, Rc::new(graph.edge_destinations()));
        let hn_src = tape.gather_rows(hn, Rc::new(graph.edge_sources()));
        let z = tape.concat(&[hn_dst, hn_src, ee], 1);
        let scores = tape.matvec(z, av);
        let scores = tape.leaky_relu(scores, self.config.leaky_slope);
        let alpha = tape.segment_softmax(scores, Rc::new(graph.edge_destinations()));
        Ok(tape.value(alpha).clone())
    }

    /// Node update of one layer given per-head attention coefficients:
    /// skip + concatenated weighted message sums + bias, then the layer's
    /// activation (ReLU between layers, identity after the last). Computed
    /// directly on values, independent of the tape path.
    pub fn node_update(
        &self,
        layer: usize,
        graph: &FlowGraph,
        h: &Tensor,
        e: &Tensor,
        alphas: &[Tensor],
    ) -> Result<Tensor, ModelError> {
        let lp = self.layer_params(layer)?;
        self.check_layer_inputs(layer, graph, h, e)?;
        self.check_alphas(graph, alphas)?;
        let d = self.config.hidden;
        let k = self.config.heads;
        let mut out = matmul_value(h, &lp.w_skip.value);
        for (ki, alpha) in alphas.iter().enumerate() {
            let hn = matmul_value(h, &lp.w_node[ki].value);
            let ee = matmul_value(e, &lp.w_edge[ki].value);
            for (eid, edge) in graph.edges.iter().enumerate() {
                let a = alpha.data()[eid];
                for j in 0..d {
                    let m = hn.at(edge.src, j) + ee.at(eid, j);
                    let cur = out.at(edge.dst, ki * d + j);
                    out.set(edge.dst, ki * d + j, cur + a * m);
                }
            }
        }
        for i in 0..graph.node_count() {
            for j in 0..k * d {
                let val = out.at(i, j) + lp.bias.value.data()[j];
                out.set(i, j, val);
            }
        }
        if layer + 1 < self.config.layers {
            for x in out.data_mut() {
                if *x < 0.0 {
                    *x = 0.0;
                }
            }
        }
        Ok(out)
    }

    /// Edge update of one layer: per head, `α·[Wₙh_src ‖ Wₑe]`, heads
    /// concatenated; no activation on edge embeddings.
    pub fn edge_update(
        &self,
        layer: usize,
        graph: &FlowGraph,
        h: &Tensor,
        e: &Tensor,
        alphas: &[Tensor],
    ) -> Result<Tensor, ModelError> {
        let lp = self.layer_params(layer)?;
        self.check_layer_inputs(layer, graph, h, e)?;
        self.check_alphas(graph, alphas)?;
        let d = self.config.hidden;
        let k = self.config.heads;
        let m = graph.edge_count();
        let mut out = Tensor::zeros(&[m, 2 * k * d]);
        for (ki, alpha) in alphas.iter().enumerate() {
            let hn = matmul_value(h, &lp.w_node[ki].value);
            let ee = matmul_value(e, &lp.w_edge[ki].value);
            for (eid, edge) in graph.edges.iter().enumerate() {
                let a = alpha.data()[eid];
                let off = ki * 2 * d;
                for j in 0..d {
                    out.set(eid, off + j, a * hn.at(edge.src, j));
                    out.set(eid, off + d + j, a * ee.at(eid, j));
                }
            }
        }
        Ok(out)
    }

    fn layer_params(&self, layer: usize) -> Result<&EdgmatLayerParams, ModelError> {
        self.layers.get(layer).ok_or(ModelError::LayerOutOfRange {
            layer,
            layers: self.layers.len(),
        })
    }

    fn check_layer_inputs(
        &self,
        layer: usize,
        graph: &FlowGraph,
        h: &Tensor,
        e: &Tensor,
    ) -> Result<(), ModelError> {
        let checks = [
            ("node feature rows", graph.node_count(), h.rows()),
            ("edge feature rows", graph.edge_count(), e.rows()),
            ("node feature width", self.config.layer_node_dim(layer), h.cols()),
            ("edge feature width", self.config.layer_edge_dim(layer), e.cols()),
        ];
        for (what, expected, actual) in checks {
            if expected != actual {
                return Err(ModelError::DimMismatch {
                    what,
                    expected,
                    actual,
                });
            }
        }
        Ok(())
    }

    fn check_alphas(&self, graph: &FlowGraph, alphas: &[Tensor]) -> Result<(), ModelError> {
        if alphas.len() != self.config.heads {
            return Err(ModelError::DimMismatch {
                what: "attention heads",
                expected: self.config.heads,
                actual: alphas.len(),
            });
        }
        for a in alphas {
            if a.len() != graph.edge_count() {
                return Err(ModelError::DimMismatch {
                    what: "attention coefficients",
                    expected: graph.edge_count(),
                    actual: a.len(),
                });
            }
        }
        Ok(())
    }
}

fn matmul_value(a: &Tensor, b: &Tensor) -> Tensor {
    let (n, k) = (a.shape()[0], a.shape()[1]);
    let m = b.shape()[1];
    assert_eq!(k, b.shape()[0]);
    let mut out = Tensor::zeros(&[n, m]);
    for r in 0..n {
        for x in 0..k {
            let av = a.at(r, x);
            for j in 0..m {
                let cur = out.at(r, j);
                out.set(r, j, cur + av * b.at(x, j));
            }
        }
    }
    out
}

/// Gradient check of the full class-weighted training loss on `graph`
/// (dropout off): reverse-mode vs central finite differences, reported as
/// the max relative error per parameter in [`EdgmatModel::params`] order.
pub fn loss_gradcheck(
    model: &EdgmatModel,
    graph: &FlowGraph,
) -> Result<Vec<(String, f64)>, ModelError> {
    model.check_graph(graph)?;
    let train_edges = Rc::new(graph.masked_edges(EdgeMask::Train));
    if train_edges.is_empty() {
        return Err(ModelError::NoTrainEdges);
    }
    let labels: Rc<Vec<usize>> =
        Rc::new(train_edges.iter().map(|&e| graph.edges[e].label).collect());
    let (class_weights, _) = model.class_weights(graph);

    let names: Vec<String> = model.params().iter().map(|p| p.name.clone()).collect();
    let values: Vec<Tensor> = model.params().iter().map(|p| p.value.clone()).collect();

    let build = |tape: &mut Tape, vars: &[VarId]| -> VarId {
        let mut rng = StreamRng::new(0, "unused");
        let run = model.run_on_tape(tape, graph, vars, false, &mut rng);
        let train_logits = tape.gather_rows(run.logits, train_edges.clone());
        tape.weighted_cross_entropy(train_logits, labels.clone(), &class_weights)
    };
    let errors = crate::tape::gradcheck_per_input(&values, build);
    Ok(names.into_iter().zip(errors).collect())
}

/// Distance from the nearest LeakyReLU/ReLU kink across one inference
/// forward pass; gradient checks resample when this is too small.
pub fn loss_kink_distance(model: &EdgmatModel, graph: &FlowGraph) -> Result<f64, ModelError> {
    model.check_graph(graph)?;
    if graph.node_count() == 0 {
        return Ok(f64::INFINITY);
    }
    let mut tape = Tape::new();
    let param_vars = model.register_params(&mut tape);
    let mut rng = StreamRng::new(0, "unused");
    model.run_on_tape(&mut tape, graph, &param_vars, false, &mut rng);
    Ok(tape.min_kink_distance())
}
