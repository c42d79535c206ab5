//! Direct single-threaded plan interpreter.
//!
//! Executes a validated plan over the whole graph with the reference module
//! interpreter — no partitioning, no compiled programs. The partitioned
//! engine must agree with this executor bitwise; tests lean on that.
//!
//! Per-edge work runs in CSC order (destinations ascending, edge ids
//! ascending within a destination), the same order the engine uses locally,
//! so aggregation results match the engine bit for bit.

use alloc::vec;
use alloc::vec::Vec;

use crate::feature::{FeatureStore, StoreError};
use crate::graph::Graph;
use crate::ir::IrError;
use crate::kernels::{self, KernelError, Reduction};
use crate::matrix::Matrix;
use crate::plan::{Aggregator, Binding, Plan, Step, ValidationIssue};

/// Error from plan execution.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PlanExecError {
    #[error("plan failed validation with {} issue(s); first: {first}", .issues.len())]
    Invalid {
        issues: Vec<ValidationIssue>,
        first: ValidationIssue,
    },
    #[error("step {step}: {source}")]
    Module { step: usize, source: IrError },
    #[error("step {step}: {source}")]
    Kernel { step: usize, source: KernelError },
    #[error(transparent)]
    Store(#[from] StoreError),
}

pub(crate) fn invalid(issues: Vec<ValidationIssue>) -> PlanExecError {
    let first = issues[0].clone();
    PlanExecError::Invalid { issues, first }
}

/// Helper shared with the engine: per-CSC-slot gather order and segment ids.
pub struct EdgeLayout {
    /// Global source vertex per CSC slot.
    pub sources: Vec<usize>,
    /// Destination vertex per CSC slot (nondecreasing).
    pub destinations: Vec<usize>,
    /// Original edge id per CSC slot.
    pub edge_ids: Vec<usize>,
    /// Group offsets per destination (CSC in_offsets).
    pub offsets: Vec<usize>,
}

impl EdgeLayout {
    pub fn of(graph: &Graph) -> Self {
        let m = graph.num_edges();
        let mut sources = Vec::with_capacity(m);
        let mut destinations = Vec::with_capacity(m);
        let mut edge_ids = Vec::with_capacity(m);
        for v in 0..graph.num_vertices() {
            for (src, id) in graph.in_edges(v) {
                sources.push(src);
                destinations.push(v);
                edge_ids.push(id);
            }
        }
        EdgeLayout {
            sources,
            destinations,
            edge_ids,
            offsets: graph.in_offsets().to_vec(),
        }
    }

    /// Reorder an edge-id-ordered matrix into CSC slot order.
    pub fn gather_to_slots(&self, by_edge_id: &Matrix) -> Matrix {
        by_edge_id.gather_rows(&self.edge_ids)
    }

    /// Scatter a CSC-slot-ordered matrix back to edge-id order.
    pub fn scatter_to_edge_ids(&self, by_slot: &Matrix, num_edges: usize) -> Matrix {
        let mut out = Matrix::zeros(num_edges, by_slot.cols());
        for (slot, &id) in self.edge_ids.iter().enumerate() {
            out.row_mut(id).copy_from_slice(by_slot.row(slot));
        }
        out
    }
}

/// Execute `plan` on `graph` single-threaded and return a store holding the
/// inputs plus every marked output. Validates first.
pub fn interpret_plan(
    plan: &Plan,
    graph: &Graph,
    store: &FeatureStore,
) -> Result<FeatureStore, PlanExecError> {
    if let Err(issues) = plan.validate(graph, store) {
        return Err(invalid(issues));
    }
    let layout = EdgeLayout::of(graph);
    let n = graph.num_vertices();
    let m = graph.num_edges();

    let mut values: Vec<Option<Matrix>> = vec![None; plan.num_refs()];
    let fetch = |values: &mut Vec<Option<Matrix>>,
                 ref_id: usize,
                 binding: &Binding|
     -> Result<(), PlanExecError> {
        if values[ref_id].is_none() {
            if let Binding::Store { scope, name } = binding {
                values[ref_id] = Some(store.get(*scope, name)?.clone());
            }
        }
        Ok(())
    };

    for (s, step) in plan.steps().iter().enumerate() {
        match step {
            Step::Transform {
                module,
                inputs,
                outputs,
                ..
            } => {
                for r in inputs {
                    fetch(&mut values, r.index(), plan.ref_binding(*r))?;
                }
                let input_mats: Vec<&Matrix> = inputs
                    .iter()
                    .map(|r| values[r.index()].as_ref().expect("fetched"))
                    .collect();
                let outs = module
                    .interpret(&input_mats)
                    .map_err(|source| PlanExecError::Module { step: s, source })?;
                for (r, value) in outputs.iter().zip(outs) {
                    values[r.index()] = Some(value);
                }
            }
            Step::MessagePassing {
                src_inputs,
                dst_inputs,
                edge_inputs,
                module,
                aggregator,
                output,
            } => {
                for r in src_inputs.iter().chain(dst_inputs).chain(edge_inputs) {
                    fetch(&mut values, r.index(), plan.ref_binding(*r))?;
                }
                // Pack per-edge dense inputs in CSC slot order.
                let mut gathered: Vec<Matrix> = Vec::new();
                for r in src_inputs {
                    let v = values[r.index()].as_ref().expect("fetched");
                    gathered.push(v.gather_rows(&layout.sources));
                }
                for r in dst_inputs {
                    let v = values[r.index()].as_ref().expect("fetched");
                    gathered.push(v.gather_rows(&layout.destinations));
                }
                for r in edge_inputs {
                    let v = values[r.index()].as_ref().expect("fetched");
                    gathered.push(layout.gather_to_slots(v));
                }
                let refs: Vec<&Matrix> = gathered.iter().collect();
                let per_edge = module
                    .interpret(&refs)
                    .map_err(|source| PlanExecError::Module { step: s, source })?
                    .pop()
                    .expect("edge modules have one output");

                let result = match aggregator {
                    Aggregator::None => layout.scatter_to_edge_ids(&per_edge, m),
                    Aggregator::Sum | Aggregator::Mean | Aggregator::Max => {
                        let op = match aggregator {
                            Aggregator::Sum => Reduction::Sum,
                            Aggregator::Mean => Reduction::Mean,
                            _ => Reduction::Max,
                        };
                        kernels::segment_reduce(&per_edge, &layout.destinations, n, op)
                            .map_err(|source| PlanExecError::Kernel { step: s, source })?
                    }
                };
                values[output.index()] = Some(result);
            }
            Step::EdgeSoftmax { input, output } => {
                fetch(&mut values, input.index(), plan.ref_binding(*input))?;
                let logits = values[input.index()].as_ref().expect("fetched");
                let by_slot = layout.gather_to_slots(logits);
                let weights = kernels::segment_softmax(&by_slot, &layout.offsets);
                values[output.index()] = Some(layout.scatter_to_edge_ids(&weights, m));
            }
        }
    }

    let mut result = store.clone();
    for (r, name) in plan.outputs() {
        let scope = plan.ref_scope(*r);
        let value = values[r.index()]
            .clone()
            .expect("outputs are produced by some step or store-bound");
        result
            .attach(scope, name, value)
            .expect("collisions rejected by validate");
    }
    Ok(result)
}
