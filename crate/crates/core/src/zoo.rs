//! Decomposed GAT and GCN models expressed as plans, plus deterministic
//! parameter initialization.
//!
//! A GAT layer decomposes into four plan steps:
//!
//! 1. `transform` (vertex): `x' = xW`, per-head scores
//!    `alpha_src = (x' * att_src).sum per head` and `alpha_dst` likewise —
//!    `x'` is surfaced as a third output because the final aggregation
//!    needs it.
//! 2. `message_passing` (no aggregation): raw attention logits
//!    `leaky_relu(alpha_dst + alpha_src)` per edge.
//! 3. `edge_softmax`: per-destination normalization of the logits.
//! 4. `message_passing` (sum): per-head weighted sum of source `x'` rows.
//!
//! Callers apply [`crate::graph::add_self_loops`] first when
//! [`GatConfig::add_self_loops`] is set (see [`ModelConfig::prepare_graph`]);
//! plans never mutate graphs.
//!
//! The GCN layer keeps the graph untouched and handles its implicit
//! self-loop analytically: with `c_v = 1 / sqrt(in_degree(v) + 1)` the layer
//! computes `h_v = c_v * sum_{u->v} c_u x'_u + c_v^2 x'_v`. The norm vector
//! is a named store feature (`"gcn_norm"`, see [`GCN_NORM_FEATURE`])
//! attached by [`ModelConfig::attach_aux_features`].
//!
//! Multi-head layouts are head-major blocks within the feature dimension:
//! scores are `heads` columns, features `heads * f_out` columns with head
//! `h` owning columns `[h*f_out, (h+1)*f_out)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::feature::{FeatureStore, Scope, StoreError};
use crate::graph::{add_self_loops, Graph};
use crate::ir::ModuleGraph;
use crate::kernels::sqrt_f32;
use crate::matrix::Matrix;
use crate::plan::{Aggregator, Plan, PlanBuildError};
use crate::rng::Lcg64;

/// Store feature name every model reads its input from.
pub const INPUT_FEATURE: &str = "input";
/// Store feature name the final layer output is attached under.
pub const OUTPUT_FEATURE: &str = "h";
/// Vertex feature carrying the GCN degree normalization.
pub const GCN_NORM_FEATURE: &str = "gcn_norm";

/// Parameter initialization schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitScheme {
    /// Uniform in `[-b, b]` with `b = sqrt(6 / (fan_in + fan_out))`.
    XavierUniform,
}

/// Deterministically initialize a `rows x cols` parameter from `rng`.
pub fn init_matrix(rng: &mut Lcg64, scheme: InitScheme, rows: usize, cols: usize) -> Matrix {
    match scheme {
        InitScheme::XavierUniform => {
            let bound = sqrt_f32(6.0 / (rows + cols) as f32);
            let data = (0..rows * cols)
                .map(|_| rng.symmetric_f32(bound))
                .collect();
            Matrix::from_vec(rows, cols, data).expect("sized data")
        }
    }
}

/// Parameters of one GAT layer.
#[derive(Clone, Debug)]
pub struct GatLayer {
    /// `f_in x heads*f_out` projection.
    pub weight: Matrix,
    /// `1 x heads*f_out` source attention vector.
    pub att_src: Matrix,
    /// `1 x heads*f_out` destination attention vector.
    pub att_dst: Matrix,
}

/// GAT model configuration and parameters.
#[derive(Clone, Debug)]
pub struct GatConfig {
    pub f_in: usize,
    pub f_out: usize,
    pub heads: usize,
    pub leaky_slope: f32,
    pub add_self_loops: bool,
    pub layers: Vec<GatLayer>,
}

impl GatConfig {
    /// Conventional defaults: slope 0.2, self-loops on, Xavier params drawn
    /// from one seeded stream (layer by layer: weight, att_src, att_dst).
    pub fn seeded(f_in: usize, f_out: usize, heads: usize, num_layers: usize, seed: u64) -> Self {
        let mut rng = Lcg64::new(seed);
        let mut layers = Vec::with_capacity(num_layers);
        for l in 0..num_layers {
            let in_cols = if l == 0 { f_in } else { heads * f_out };
            layers.push(GatLayer {
                weight: init_matrix(&mut rng, InitScheme::XavierUniform, in_cols, heads * f_out),
                att_src: init_matrix(&mut rng, InitScheme::XavierUniform, 1, heads * f_out),
                att_dst: init_matrix(&mut rng, InitScheme::XavierUniform, 1, heads * f_out),
            });
        }
        GatConfig {
            f_in,
            f_out,
            heads,
            leaky_slope: 0.2,
            add_self_loops: true,
            layers,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    /// Input width of layer `l`: `f_in` for the first, head-concatenated
    /// output width after that.
    pub fn layer_input_cols(&self, l: usize) -> usize {
        if l == 0 {
            self.f_in
        } else {
            self.heads * self.f_out
        }
    }

    pub fn output_cols(&self) -> usize {
        self.heads * self.f_out
    }
}

/// Parameters of one GCN layer.
#[derive(Clone, Debug)]
pub struct GcnLayer {
    /// `f_in x f_out` projection.
    pub weight: Matrix,
}

/// GCN model configuration and parameters.
#[derive(Clone, Debug)]
pub struct GcnConfig {
    pub f_in: usize,
    pub f_out: usize,
    pub layers: Vec<GcnLayer>,
}

impl GcnConfig {
    pub fn seeded(f_in: usize, f_out: usize, num_layers: usize, seed: u64) -> Self {
        let mut rng = Lcg64::new(seed);
        let mut layers = Vec::with_capacity(num_layers);
        for l in 0..num_layers {
            let in_cols = if l == 0 { f_in } else { f_out };
            layers.push(GcnLayer {
                weight: init_matrix(&mut rng, InitScheme::XavierUniform, in_cols, f_out),
            });
        }
        GcnConfig { f_in, f_out, layers }
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer_input_cols(&self, l: usize) -> usize {
        if l == 0 {
            self.f_in
        } else {
            self.f_out
        }
    }
}

/// Vertex module of a GAT layer: projects features and computes both
/// per-head attention scores.
pub fn gat_vertex_module(cfg: &GatConfig, layer: usize) -> ModuleGraph {
    let p = &cfg.layers[layer];
    let mut m = ModuleGraph::new();
    let x = m.input("x", cfg.layer_input_cols(layer));
    m.add_param("w", p.weight.clone());
    m.add_param("att_src", p.att_src.clone());
    m.add_param("att_dst", p.att_dst.clone());
    let xp = m.matmul_param(x, "w");
    let asrc = m.param_row("att_src");
    let sprod = m.elem_mul(xp, asrc);
    let alpha_src = m.reduce_sum_groups(sprod, cfg.heads);
    let adst = m.param_row("att_dst");
    let dprod = m.elem_mul(xp, adst);
    let alpha_dst = m.reduce_sum_groups(dprod, cfg.heads);
    m.set_outputs(&[alpha_src, alpha_dst, xp]);
    m
}

/// Edge module producing raw attention logits: `leaky_relu(dst + src)`.
pub fn gat_logit_module(heads: usize, slope: f32) -> ModuleGraph {
    let mut m = ModuleGraph::new();
    let src = m.input("alpha_src", heads);
    let dst = m.input("alpha_dst", heads);
    let sum = m.elem_add(dst, src);
    let out = m.leaky_relu(sum, slope);
    m.set_outputs(&[out]);
    m
}

/// Edge module producing the attention-weighted source features, one block
/// per head.
pub fn gat_weighted_module(heads: usize, f_out: usize) -> ModuleGraph {
    let mut m = ModuleGraph::new();
    let xp = m.input("x_src", heads * f_out);
    let w = m.input("weight", heads);
    let out = m.scale_rows(xp, w);
    m.set_outputs(&[out]);
    m
}

/// Build the full GAT plan: reads [`INPUT_FEATURE`], marks the final layer
/// output as [`OUTPUT_FEATURE`] and each layer's attention weights as
/// `attn{layer}`. Four steps per layer.
pub fn build_gat_plan(cfg: &GatConfig) -> Result<Plan, PlanBuildError> {
    let mut plan = Plan::new();
    let mut x = plan.get_vertex(INPUT_FEATURE);
    for l in 0..cfg.num_layers() {
        let vertex_outs = plan.transform(&[x], gat_vertex_module(cfg, l))?;
        let (alpha_src, alpha_dst, xp) = (vertex_outs[0], vertex_outs[1], vertex_outs[2]);
        let logits = plan.message_passing(
            &[alpha_src],
            &[alpha_dst],
            &[],
            gat_logit_module(cfg.heads, cfg.leaky_slope),
            Aggregator::None,
        )?;
        let weights = plan.edge_softmax(logits)?;
        let h = plan.message_passing(
            &[xp],
            &[],
            &[weights],
            gat_weighted_module(cfg.heads, cfg.f_out),
            Aggregator::Sum,
        )?;
        plan.mark_output(weights, &format!("attn{l}"))?;
        x = h;
    }
    plan.mark_output(x, OUTPUT_FEATURE)?;
    Ok(plan)
}

/// First GCN transform: `x' = xW` and its pre-scaled copy `c * x'`.
fn gcn_project_module(cfg: &GcnConfig, layer: usize) -> ModuleGraph {
    let mut m = ModuleGraph::new();
    let x = m.input("x", cfg.layer_input_cols(layer));
    let c = m.input("c", 1);
    m.add_param("w", cfg.layers[layer].weight.clone());
    let xp = m.matmul_param(x, "w");
    let scaled = m.scale_rows(xp, c);
    m.set_outputs(&[scaled, xp]);
    m
}

/// Final GCN transform: `h = c * agg + c^2 * x'`.
fn gcn_combine_module(f_out: usize) -> ModuleGraph {
    let mut m = ModuleGraph::new();
    let agg = m.input("agg", f_out);
    let xp = m.input("xp", f_out);
    let c = m.input("c", 1);
    let t1 = m.scale_rows(agg, c);
    let t2 = m.scale_rows(xp, c);
    let t3 = m.scale_rows(t2, c);
    let h = m.elem_add(t1, t3);
    m.set_outputs(&[h]);
    m
}

fn gcn_identity_module(f_out: usize) -> ModuleGraph {
    let mut m = ModuleGraph::new();
    let x = m.input("msg", f_out);
    let out = m.identity(x);
    m.set_outputs(&[out]);
    m
}

/// Build the full GCN plan: reads [`INPUT_FEATURE`] and [`GCN_NORM_FEATURE`],
/// marks the final output as [`OUTPUT_FEATURE`]. Three steps per layer:
/// project+scale, identity-sum message passing, combine.
pub fn build_gcn_plan(cfg: &GcnConfig) -> Result<Plan, PlanBuildError> {
    let mut plan = Plan::new();
    let mut x = plan.get_vertex(INPUT_FEATURE);
    let c = plan.get_vertex(GCN_NORM_FEATURE);
    for l in 0..cfg.num_layers() {
        let outs = plan.transform(&[x, c], gcn_project_module(cfg, l))?;
        let (scaled, xp) = (outs[0], outs[1]);
        let agg = plan.message_passing(
            &[scaled],
            &[],
            &[],
            gcn_identity_module(cfg.f_out),
            Aggregator::Sum,
        )?;
        let h = plan.transform(&[agg, xp, c], gcn_combine_module(cfg.f_out))?;
        x = h[0];
    }
    plan.mark_output(x, OUTPUT_FEATURE)?;
    Ok(plan)
}

/// `c_v = 1 / sqrt(in_degree(v) + 1)` as an n-by-1 vertex feature.
pub fn gcn_norm(g: &Graph) -> Matrix {
    let data: Vec<f32> = (0..g.num_vertices())
        .map(|v| 1.0 / sqrt_f32(g.in_degree(v) as f32 + 1.0))
        .collect();
    Matrix::from_vec(g.num_vertices(), 1, data).expect("sized")
}

/// A model the CLI and the sampling baseline can run.
#[derive(Clone, Debug)]
pub enum ModelConfig {
    Gat(GatConfig),
    Gcn(GcnConfig),
}

impl ModelConfig {
    pub fn num_layers(&self) -> usize {
        match self {
            ModelConfig::Gat(c) => c.num_layers(),
            ModelConfig::Gcn(c) => c.num_layers(),
        }
    }

    pub fn f_in(&self) -> usize {
        match self {
            ModelConfig::Gat(c) => c.f_in,
            ModelConfig::Gcn(c) => c.f_in,
        }
    }

    pub fn output_cols(&self) -> usize {
        match self {
            ModelConfig::Gat(c) => c.output_cols(),
            ModelConfig::Gcn(c) => c.f_out,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ModelConfig::Gat(_) => "gat",
            ModelConfig::Gcn(_) => "gcn",
        }
    }

    pub fn build_plan(&self) -> Result<Plan, PlanBuildError> {
        match self {
            ModelConfig::Gat(c) => build_gat_plan(c),
            ModelConfig::Gcn(c) => build_gcn_plan(c),
        }
    }

    /// Graph the plan must run on: GAT with self-loops enabled needs them
    /// materialized; everything else runs the graph as-is.
    pub fn prepare_graph(&self, g: &Graph) -> Graph {
        match self {
            ModelConfig::Gat(c) if c.add_self_loops => add_self_loops(g),
            _ => g.clone(),
        }
    }

    /// Attach derived inputs the plan expects ([`GCN_NORM_FEATURE`] for GCN).
    /// `graph` must be the prepared graph the plan will execute on.
    pub fn attach_aux_features(
        &self,
        graph: &Graph,
        store: &mut FeatureStore,
    ) -> Result<(), StoreError> {
        match self {
            ModelConfig::Gat(_) => Ok(()),
            ModelConfig::Gcn(_) => store.attach(Scope::Vertex, GCN_NORM_FEATURE, gcn_norm(graph)),
        }
    }

    /// Names of the per-layer attention outputs (GAT only).
    pub fn attention_outputs(&self) -> Vec<String> {
        match self {
            ModelConfig::Gat(c) => (0..c.num_layers()).map(|l| format!("attn{l}")).collect(),
            ModelConfig::Gcn(_) => Vec::new(),
        }
    }
}
