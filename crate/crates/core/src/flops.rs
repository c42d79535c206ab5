//! Closed-form FLOP model.
//!
//! One documented rule set, used by the engine's runtime counters and by the
//! sampling baseline, so the two sides are comparable:
//!
//! - matmul with a `k x m` parameter over `r` rows: `2*r*k*m`
//! - elementwise op (add, mul, leaky_relu, exp, identity): `r * cols`
//! - grouped last-dim sum: `r * input_cols`
//! - row scaling: `r * cols`
//! - segment reduction (sum/max): `rows_reduced * cols`; mean additionally
//!   divides, `+ num_segments * cols`
//! - edge softmax: `5 * edges * cols` (max, shift, exp, sum, divide)
//!
//! Rows are the vertex count for vertex-scope steps and the edge count for
//! per-edge work; entry nodes cost nothing.

use alloc::vec::Vec;

use crate::feature::Scope;
use crate::ir::{IrError, ModuleGraph, OpKind};
use crate::plan::{Aggregator, Plan, Step};

/// Error computing the closed form.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum FlopsError {
    #[error("step {step}: module shape inference failed: {source}")]
    Module { step: usize, source: IrError },
    #[error("step {step}: input width unresolved (feature never bound)")]
    Unresolved { step: usize },
}

/// FLOPs of one module application over `rows` rows.
pub fn module_flops(module: &ModuleGraph, rows: u64) -> Result<u64, IrError> {
    let cols = module.infer_shapes()?;
    let mut total = 0u64;
    for (id, node) in module.nodes().iter().enumerate() {
        let out_cols = cols[id] as u64;
        total += match &node.kind {
            OpKind::Input { .. } | OpKind::ParamRow { .. } => 0,
            OpKind::MatMulParam { .. } => {
                let k = cols[node.inputs[0]] as u64;
                2 * rows * k * out_cols
            }
            OpKind::ElemAdd
            | OpKind::ElemMul
            | OpKind::LeakyRelu { .. }
            | OpKind::Exp
            | OpKind::Identity
            | OpKind::ScaleRows => rows * out_cols,
            OpKind::ReduceSumGroups { .. } => rows * cols[node.inputs[0]] as u64,
            OpKind::Fused { chain } => chain.len() as u64 * rows * out_cols,
        };
    }
    Ok(total)
}

/// FLOPs of one plan step at the given graph size, using the plan's own
/// stamped widths. Fails on a softmax over a feature no module ever
/// consumed; executors that resolved widths against a store should use
/// [`step_flops_resolved`].
pub fn step_flops(
    plan: &Plan,
    step_index: usize,
    num_vertices: usize,
    num_edges: usize,
) -> Result<u64, FlopsError> {
    let own: Vec<Option<usize>> = (0..plan.num_refs())
        .map(|i| plan.ref_cols(plan.nth_ref(i)))
        .collect();
    step_flops_resolved(plan, step_index, num_vertices, num_edges, &own)
}

/// [`step_flops`] with an explicit ref-width table (one entry per plan ref).
pub fn step_flops_resolved(
    plan: &Plan,
    step_index: usize,
    num_vertices: usize,
    num_edges: usize,
    resolved: &[Option<usize>],
) -> Result<u64, FlopsError> {
    let n = num_vertices as u64;
    let m = num_edges as u64;
    let step = &plan.steps()[step_index];
    match step {
        Step::Transform { scope, module, .. } => {
            let rows = match scope {
                Scope::Vertex => n,
                Scope::Edge => m,
            };
            module_flops(module, rows).map_err(|source| FlopsError::Module {
                step: step_index,
                source,
            })
        }
        Step::MessagePassing {
            module, aggregator, ..
        } => {
            let mut total = module_flops(module, m).map_err(|source| FlopsError::Module {
                step: step_index,
                source,
            })?;
            let cols = module
                .output_cols()
                .map_err(|source| FlopsError::Module {
                    step: step_index,
                    source,
                })?[0] as u64;
            total += match aggregator {
                Aggregator::None => 0,
                Aggregator::Sum | Aggregator::Max => m * cols,
                Aggregator::Mean => m * cols + n * cols,
            };
            Ok(total)
        }
        Step::EdgeSoftmax { input, .. } => {
            let cols = resolved[input.index()]
                .ok_or(FlopsError::Unresolved { step: step_index })?
                as u64;
            Ok(5 * m * cols)
        }
    }
}

/// Total plan FLOPs at an explicit graph size.
pub fn count_flops_sized(
    plan: &Plan,
    num_vertices: usize,
    num_edges: usize,
) -> Result<u64, FlopsError> {
    let mut total = 0u64;
    for s in 0..plan.steps().len() {
        total += step_flops(plan, s, num_vertices, num_edges)?;
    }
    Ok(total)
}

/// Total plan FLOPs on a graph.
pub fn count_flops(plan: &Plan, g: &crate::graph::Graph) -> Result<u64, FlopsError> {
    count_flops_sized(plan, g.num_vertices(), g.num_edges())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::matrix::Matrix;
    use crate::zoo::{build_gat_plan, GatConfig};

    #[test]
    fn single_matmul_transform_is_2nkm() {
        let mut m = ModuleGraph::new();
        let x = m.input("x", 4);
        m.add_param("w", Matrix::zeros(4, 8));
        let h = m.matmul_param(x, "w");
        m.set_outputs(&[h]);
        let mut plan = Plan::new();
        let xr = plan.get_vertex("input");
        plan.transform(&[xr], m).unwrap();
        let g = Graph::build(&[], 10).unwrap();
        assert_eq!(count_flops(&plan, &g).unwrap(), 640);
    }

    #[test]
    fn empty_graph_message_passing_is_free() {
        let cfg = GatConfig::seeded(4, 3, 1, 1, 5);
        let plan = build_gat_plan(&cfg).unwrap();
        // n = 4 vertices, no edges: every per-edge term vanishes.
        let with_edges = count_flops_sized(&plan, 4, 10).unwrap();
        let without = count_flops_sized(&plan, 4, 0).unwrap();
        assert!(without < with_edges);
        // Only the vertex transform remains.
        let transform_only = step_flops(&plan, 0, 4, 0).unwrap();
        assert_eq!(without, transform_only);
    }

    #[test]
    fn gat_layer_on_triangle_matches_hand_expansion() {
        // Triangle with self-loops: n = 3, m = 6 (each vertex one in-edge
        // plus its loop). f_in = 2, f_out = 2, heads = 1.
        let cfg = GatConfig::seeded(2, 2, 1, 1, 1);
        let plan = build_gat_plan(&cfg).unwrap();
        let (n, m) = (3u64, 6u64);
        // Vertex transform: matmul 2*n*2*2 = 8n; two score pipelines:
        // elem_mul n*2 + reduce n*2 each.
        let transform = 2 * n * 2 * 2 + 2 * (n * 2 + n * 2);
        // Logits: add m*1 + leaky m*1 (fused or not, same count); agg none.
        let logits = 2 * m;
        // Softmax: 5*m*1.
        let softmax = 5 * m;
        // Weighted sum: scale m*2; sum aggregation m*2.
        let weighted = m * 2 + m * 2;
        let expected = transform + logits + softmax + weighted;
        assert_eq!(count_flops_sized(&plan, 3, 6).unwrap(), expected);
    }
}
