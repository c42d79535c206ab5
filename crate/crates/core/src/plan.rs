//! Deferred execution plans: `get_vertex` / `get_edge` / `transform` /
//! `message_passing` / `edge_softmax`.
//!
//! A [`FeatureRef`] never carries data — it records where a value will come
//! from (a named store feature or an earlier step's output slot) and what
//! width it is expected to have. Building a plan therefore performs zero
//! reads of feature data; the instrumented [`FeatureStore`] makes that
//! checkable. Existence and shape agreement against a concrete graph and
//! store are checked by [`Plan::validate`], which reports every problem it
//! finds, not just the first.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::feature::{FeatureStore, Scope};
use crate::ir::{IrError, ModuleGraph};

/// Lazy handle to a vertex- or edge-scoped feature.
///
/// Refs compare equal iff they resolve to the same binding; two
/// `get_vertex("x")` calls on one plan return equal refs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureRef {
    id: usize,
}

impl FeatureRef {
    /// Index into the plan's ref table; stable for the plan's lifetime.
    pub fn index(self) -> usize {
        self.id
    }
}

/// How a message-passing step folds per-edge values at each destination.
/// `None` keeps the per-edge result as an edge feature.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Aggregator {
    Sum,
    Mean,
    Max,
    None,
}

/// Where a ref's value comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Binding {
    /// Named feature to be read from the store at execution time.
    Store { scope: Scope, name: String },
    /// Output `slot` of plan step `step`.
    Produced { step: usize, slot: usize },
}

#[derive(Clone, Debug)]
pub(crate) struct RefInfo {
    pub scope: Scope,
    pub binding: Binding,
    /// Known width: stamped from shape inference for produced refs, from the
    /// first consuming module slot for store refs, `None` until then.
    pub cols: Option<usize>,
}

/// One plan step.
#[derive(Clone, Debug)]
pub enum Step {
    /// Purely local module application over one scope.
    Transform {
        scope: Scope,
        module: ModuleGraph,
        inputs: Vec<FeatureRef>,
        outputs: Vec<FeatureRef>,
    },
    /// Per-edge module over gathered source/destination/edge rows, followed
    /// by per-destination aggregation in ascending edge-id order.
    MessagePassing {
        src_inputs: Vec<FeatureRef>,
        dst_inputs: Vec<FeatureRef>,
        edge_inputs: Vec<FeatureRef>,
        module: ModuleGraph,
        aggregator: Aggregator,
        output: FeatureRef,
    },
    /// Per-destination softmax over incoming-edge logits, one column per head.
    EdgeSoftmax {
        input: FeatureRef,
        output: FeatureRef,
    },
}

impl Step {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Step::Transform { .. } => "transform",
            Step::MessagePassing { .. } => "message_passing",
            Step::EdgeSoftmax { .. } => "edge_softmax",
        }
    }
}

/// Error raised while building a plan. Anything that needs the store or the
/// graph is deferred to [`Plan::validate`].
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum PlanBuildError {
    #[error("step {step}: inputs mix vertex and edge scope")]
    MixedScopes { step: usize },
    #[error("step {step}: expected {expected}-scope ref")]
    WrongScope { step: usize, expected: Scope },
    #[error("step {step}: module declares {slots} input slots, {refs} refs supplied")]
    InputCountMismatch {
        step: usize,
        slots: usize,
        refs: usize,
    },
    #[error("step {step}: transform needs at least one input")]
    NoInputs { step: usize },
    #[error("step {step}: edge module must have exactly one output slot, has {got}")]
    EdgeModuleOutputs { step: usize, got: usize },
    #[error("step {step}: module is invalid: {source}")]
    Module { step: usize, source: IrError },
    #[error("ref does not belong to this plan")]
    ForeignRef,
    #[error("duplicate output name \"{name}\" in {} scope", scope.name())]
    DuplicateOutput { scope: Scope, name: String },
}

/// One problem found by validation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidationIssue {
    /// Step the issue was detected at, if any.
    pub step: Option<usize>,
    pub message: String,
}

impl core::fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self.step {
            Some(s) => write!(f, "step {s}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// A recorded consumption of a ref by a module slot; validation cross-checks
/// the expectation against the resolved width.
#[derive(Clone, Debug)]
struct Use {
    r: FeatureRef,
    step: usize,
    expected_cols: usize,
    slot_name: String,
}

/// Deferred DAG of transform / message-passing / edge-softmax steps over
/// lazily bound features.
#[derive(Clone, Debug, Default)]
pub struct Plan {
    steps: Vec<Step>,
    refs: Vec<RefInfo>,
    uses: Vec<Use>,
    store_refs: BTreeMap<(Scope, String), usize>,
    outputs: Vec<(FeatureRef, String)>,
}

impl Plan {
    pub fn new() -> Self {
        Plan::default()
    }

    /// Lazy reference to the named vertex feature. No store access happens
    /// here; existence is checked at validate/execute time.
    pub fn get_vertex(&mut self, name: &str) -> FeatureRef {
        self.store_ref(Scope::Vertex, name)
    }

    /// Lazy reference to the named edge feature.
    pub fn get_edge(&mut self, name: &str) -> FeatureRef {
        self.store_ref(Scope::Edge, name)
    }

    fn store_ref(&mut self, scope: Scope, name: &str) -> FeatureRef {
        if let Some(&id) = self.store_refs.get(&(scope, name.to_string())) {
            return FeatureRef { id };
        }
        let id = self.refs.len();
        self.refs.push(RefInfo {
            scope,
            binding: Binding::Store {
                scope,
                name: name.to_string(),
            },
            cols: None,
        });
        self.store_refs.insert((scope, name.to_string()), id);
        FeatureRef { id }
    }

    fn produced_ref(&mut self, scope: Scope, step: usize, slot: usize, cols: usize) -> FeatureRef {
        let id = self.refs.len();
        self.refs.push(RefInfo {
            scope,
            binding: Binding::Produced { step, slot },
            cols: Some(cols),
        });
        FeatureRef { id }
    }

    fn check_ref(&self, r: FeatureRef) -> Result<(), PlanBuildError> {
        if r.id >= self.refs.len() {
            return Err(PlanBuildError::ForeignRef);
        }
        Ok(())
    }

    /// Record that `r` feeds a module slot expecting `expected_cols`; stamp
    /// unknown store-ref widths with the first expectation and leave
    /// conflicts for validation to report.
    fn record_use(&mut self, r: FeatureRef, step: usize, expected_cols: usize, slot_name: &str) {
        if self.refs[r.id].cols.is_none() {
            self.refs[r.id].cols = Some(expected_cols);
        }
        self.uses.push(Use {
            r,
            step,
            expected_cols,
            slot_name: slot_name.to_string(),
        });
    }

    /// Append a local module application. All inputs must share one scope
    /// and match the module's input slots positionally; one ref per module
    /// output slot comes back, in the same scope.
    pub fn transform(
        &mut self,
        inputs: &[FeatureRef],
        module: ModuleGraph,
    ) -> Result<Vec<FeatureRef>, PlanBuildError> {
        let step = self.steps.len();
        for &r in inputs {
            self.check_ref(r)?;
        }
        let Some(first) = inputs.first() else {
            return Err(PlanBuildError::NoInputs { step });
        };
        let scope = self.refs[first.id].scope;
        if inputs.iter().any(|r| self.refs[r.id].scope != scope) {
            return Err(PlanBuildError::MixedScopes { step });
        }
        if module.input_slots().len() != inputs.len() {
            return Err(PlanBuildError::InputCountMismatch {
                step,
                slots: module.input_slots().len(),
                refs: inputs.len(),
            });
        }
        let out_cols = module
            .output_cols()
            .map_err(|source| PlanBuildError::Module { step, source })?;

        for (slot, &r) in module
            .input_slots()
            .to_vec()
            .iter()
            .zip(inputs)
        {
            self.record_use(r, step, slot.cols, &slot.name);
        }
        let outputs: Vec<FeatureRef> = out_cols
            .iter()
            .enumerate()
            .map(|(slot, &cols)| self.produced_ref(scope, step, slot, cols))
            .collect();
        self.steps.push(Step::Transform {
            scope,
            module,
            inputs: inputs.to_vec(),
            outputs: outputs.clone(),
        });
        Ok(outputs)
    }

    /// Append a message-passing step.
    ///
    /// The edge module's input slots bind positionally to
    /// `src_inputs ++ dst_inputs ++ edge_inputs`: source slots see the source
    /// vertex's row for each edge, destination slots the destination's, edge
    /// slots the edge's own row. The single module output is folded per
    /// destination in ascending edge-id order, or kept as an edge feature
    /// with [`Aggregator::None`].
    pub fn message_passing(
        &mut self,
        src_inputs: &[FeatureRef],
        dst_inputs: &[FeatureRef],
        edge_inputs: &[FeatureRef],
        module: ModuleGraph,
        aggregator: Aggregator,
    ) -> Result<FeatureRef, PlanBuildError> {
        let step = self.steps.len();
        for &r in src_inputs.iter().chain(dst_inputs).chain(edge_inputs) {
            self.check_ref(r)?;
        }
        for &r in src_inputs.iter().chain(dst_inputs) {
            if self.refs[r.id].scope != Scope::Vertex {
                return Err(PlanBuildError::WrongScope {
                    step,
                    expected: Scope::Vertex,
                });
            }
        }
        for &r in edge_inputs {
            if self.refs[r.id].scope != Scope::Edge {
                return Err(PlanBuildError::WrongScope {
                    step,
                    expected: Scope::Edge,
                });
            }
        }
        let total = src_inputs.len() + dst_inputs.len() + edge_inputs.len();
        if module.input_slots().len() != total {
            return Err(PlanBuildError::InputCountMismatch {
                step,
                slots: module.input_slots().len(),
                refs: total,
            });
        }
        let out_cols = module
            .output_cols()
            .map_err(|source| PlanBuildError::Module { step, source })?;
        if out_cols.len() != 1 {
            return Err(PlanBuildError::EdgeModuleOutputs {
                step,
                got: out_cols.len(),
            });
        }

        let slots = module.input_slots().to_vec();
        for (slot, &r) in slots
            .iter()
            .zip(src_inputs.iter().chain(dst_inputs).chain(edge_inputs))
        {
            self.record_use(r, step, slot.cols, &slot.name);
        }
        let out_scope = match aggregator {
            Aggregator::None => Scope::Edge,
            _ => Scope::Vertex,
        };
        let output = self.produced_ref(out_scope, step, 0, out_cols[0]);
        self.steps.push(Step::MessagePassing {
            src_inputs: src_inputs.to_vec(),
            dst_inputs: dst_inputs.to_vec(),
            edge_inputs: edge_inputs.to_vec(),
            module,
            aggregator,
            output,
        });
        Ok(output)
    }

    /// Append a per-destination softmax over incoming-edge logits
    /// (one column per head).
    pub fn edge_softmax(&mut self, logits: FeatureRef) -> Result<FeatureRef, PlanBuildError> {
        let step = self.steps.len();
        self.check_ref(logits)?;
        if self.refs[logits.id].scope != Scope::Edge {
            return Err(PlanBuildError::WrongScope {
                step,
                expected: Scope::Edge,
            });
        }
        let cols = self.refs[logits.id].cols;
        let id = self.refs.len();
        self.refs.push(RefInfo {
            scope: Scope::Edge,
            binding: Binding::Produced { step, slot: 0 },
            cols,
        });
        let output = FeatureRef { id };
        self.steps.push(Step::EdgeSoftmax {
            input: logits,
            output,
        });
        Ok(output)
    }

    /// Name a ref as a plan output; the executor attaches it to the result
    /// store under this name.
    pub fn mark_output(&mut self, r: FeatureRef, name: &str) -> Result<(), PlanBuildError> {
        self.check_ref(r)?;
        let scope = self.refs[r.id].scope;
        if self
            .outputs
            .iter()
            .any(|(o, n)| self.refs[o.id].scope == scope && n == name)
        {
            return Err(PlanBuildError::DuplicateOutput {
                scope,
                name: name.to_string(),
            });
        }
        self.outputs.push((r, name.to_string()));
        Ok(())
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn outputs(&self) -> &[(FeatureRef, String)] {
        &self.outputs
    }

    pub fn num_refs(&self) -> usize {
        self.refs.len()
    }

    /// Ref handle by table index, for executors that store raw indices.
    /// Panics if out of range.
    pub fn nth_ref(&self, index: usize) -> FeatureRef {
        assert!(index < self.refs.len(), "ref index {index} out of range");
        FeatureRef { id: index }
    }

    pub fn ref_scope(&self, r: FeatureRef) -> Scope {
        self.refs[r.id].scope
    }

    pub fn ref_binding(&self, r: FeatureRef) -> &Binding {
        &self.refs[r.id].binding
    }

    /// Known width of a ref, if stamped during building.
    pub fn ref_cols(&self, r: FeatureRef) -> Option<usize> {
        self.refs[r.id].cols
    }

    fn describe_ref(&self, id: usize) -> String {
        match &self.refs[id].binding {
            Binding::Store { scope, name } => {
                format!("{} feature \"{name}\"", scope.name())
            }
            Binding::Produced { step, slot } => {
                format!("output {slot} of step {step}")
            }
        }
    }

    /// Check the plan against a concrete graph. Collects every issue.
    pub fn validate(
        &self,
        graph: &crate::graph::Graph,
        store: &FeatureStore,
    ) -> Result<(), Vec<ValidationIssue>> {
        self.validate_dims(graph.num_vertices(), graph.num_edges(), store)
    }

    /// [`Plan::validate`] with explicit cardinalities, for callers that hold
    /// a partitioned graph. Checks structural ordering, store bindings
    /// (existence, scope cardinality, width agreement — metadata only, no
    /// data reads), width agreement between producers and consumers, and
    /// output-name collisions.
    pub fn validate_dims(
        &self,
        num_vertices: usize,
        num_edges: usize,
        store: &FeatureStore,
    ) -> Result<(), Vec<ValidationIssue>> {
        let mut issues = Vec::new();

        // Structural: produced refs must come from strictly earlier steps.
        for (s, step) in self.steps.iter().enumerate() {
            let mut check = |r: &FeatureRef| {
                if let Binding::Produced { step: src, .. } = &self.refs[r.id].binding {
                    if *src >= s {
                        issues.push(ValidationIssue {
                            step: Some(s),
                            message: format!("consumes output of step {src} (not a DAG)"),
                        });
                    }
                }
            };
            match step {
                Step::Transform { inputs, .. } => inputs.iter().for_each(&mut check),
                Step::MessagePassing {
                    src_inputs,
                    dst_inputs,
                    edge_inputs,
                    ..
                } => src_inputs
                    .iter()
                    .chain(dst_inputs)
                    .chain(edge_inputs)
                    .for_each(&mut check),
                Step::EdgeSoftmax { input, .. } => check(input),
            }
        }

        // Store bindings: exist, right cardinality, width as expected.
        let mut resolved: Vec<Option<usize>> = self.refs.iter().map(|r| r.cols).collect();
        for (id, info) in self.refs.iter().enumerate() {
            if let Binding::Store { scope, name } = &info.binding {
                let expected_rows = match scope {
                    Scope::Vertex => num_vertices,
                    Scope::Edge => num_edges,
                };
                match store.shape_of(*scope, name) {
                    None => issues.push(ValidationIssue {
                        step: None,
                        message: format!(
                            "{} feature \"{name}\" is not attached to the store",
                            scope.name()
                        ),
                    }),
                    Some((rows, cols)) => {
                        if rows != expected_rows {
                            issues.push(ValidationIssue {
                                step: None,
                                message: format!(
                                    "{} feature \"{name}\" has {rows} rows, graph has {expected_rows}",
                                    scope.name()
                                ),
                            });
                        }
                        if let Some(expected) = info.cols {
                            if expected != cols {
                                issues.push(ValidationIssue {
                                    step: None,
                                    message: format!(
                                        "{} feature \"{name}\" has {cols} columns, plan expects {expected}",
                                        scope.name()
                                    ),
                                });
                            }
                        }
                        resolved[id] = Some(cols);
                    }
                }
            }
        }

        // Every recorded use must agree with the resolved width.
        for u in &self.uses {
            if let Some(cols) = resolved[u.r.id] {
                if cols != u.expected_cols {
                    issues.push(ValidationIssue {
                        step: Some(u.step),
                        message: format!(
                            "slot \"{}\" expects {} columns but {} provides {}",
                            u.slot_name,
                            u.expected_cols,
                            self.describe_ref(u.r.id),
                            cols
                        ),
                    });
                }
            }
        }

        // Output names must not collide with store features.
        for (r, name) in &self.outputs {
            let scope = self.refs[r.id].scope;
            if store.contains(scope, name) {
                issues.push(ValidationIssue {
                    step: None,
                    message: format!(
                        "plan output \"{name}\" collides with an existing {} feature",
                        scope.name()
                    ),
                });
            }
        }

        if issues.is_empty() {
            Ok(())
        } else {
            Err(issues)
        }
    }

    /// Width of every ref with store-bound widths resolved against `store`.
    /// Call after a successful [`Plan::validate`]; unknown widths only
    /// survive for features missing from the store.
    pub fn resolved_cols(&self, store: &FeatureStore) -> Vec<Option<usize>> {
        self.refs
            .iter()
            .map(|info| match &info.binding {
                Binding::Store { scope, name } => info
                    .cols
                    .or_else(|| store.shape_of(*scope, name).map(|(_, c)| c)),
                Binding::Produced { .. } => info.cols,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::matrix::Matrix;

    fn identity_module(cols: usize) -> ModuleGraph {
        let mut m = ModuleGraph::new();
        let x = m.input("x", cols);
        let out = m.identity(x);
        m.set_outputs(&[out]);
        m
    }

    #[test]
    fn get_vertex_is_referentially_transparent() {
        let mut plan = Plan::new();
        let a = plan.get_vertex("input");
        let b = plan.get_vertex("input");
        assert_eq!(a, b);
        let c = plan.get_edge("input");
        assert_ne!(a, c);
    }

    #[test]
    fn building_reads_no_store_data() {
        let mut store = FeatureStore::new(2, 1);
        store
            .attach(Scope::Vertex, "input", Matrix::zeros(2, 3))
            .unwrap();
        let mut plan = Plan::new();
        let x = plan.get_vertex("input");
        let out = plan.transform(&[x], identity_module(3)).unwrap();
        plan.mark_output(out[0], "h").unwrap();
        assert_eq!(store.data_reads(), 0);
        // Validation reads metadata only.
        let g = Graph::build(&[(0, 1)], 2).unwrap();
        plan.validate(&g, &store).unwrap();
        assert_eq!(store.data_reads(), 0);
    }

    #[test]
    fn transform_rejects_mixed_scopes() {
        let mut plan = Plan::new();
        let v = plan.get_vertex("a");
        let e = plan.get_edge("b");
        let mut m = ModuleGraph::new();
        let x = m.input("x", 1);
        let y = m.input("y", 1);
        let s = m.elem_add(x, y);
        m.set_outputs(&[s]);
        assert_eq!(
            plan.transform(&[v, e], m).unwrap_err(),
            PlanBuildError::MixedScopes { step: 0 }
        );
    }

    #[test]
    fn message_passing_enforces_scopes() {
        let mut plan = Plan::new();
        let e = plan.get_edge("w");
        let err = plan
            .message_passing(&[e], &[], &[], identity_module(1), Aggregator::Sum)
            .unwrap_err();
        assert_eq!(
            err,
            PlanBuildError::WrongScope {
                step: 0,
                expected: Scope::Vertex
            }
        );
    }

    #[test]
    fn missing_feature_is_a_validation_error_not_a_crash() {
        let mut plan = Plan::new();
        let w = plan.get_edge("w");
        let out = plan.transform(&[w], identity_module(2)).unwrap();
        plan.mark_output(out[0], "h").unwrap();

        let g = Graph::build(&[(0, 1)], 2).unwrap();
        let store = FeatureStore::for_graph(&g);
        let issues = plan.validate(&g, &store).unwrap_err();
        assert!(issues.iter().any(|i| i.message.contains("\"w\"")), "{issues:?}");
    }

    #[test]
    fn width_conflict_cites_both_steps() {
        let mut plan = Plan::new();
        let x = plan.get_vertex("input");
        // Step 0 produces 3 columns, step 1 expects 4.
        let mut widen = ModuleGraph::new();
        let i = widen.input("x", 2);
        widen.add_param("w", Matrix::zeros(2, 3));
        let h = widen.matmul_param(i, "w");
        widen.set_outputs(&[h]);
        let out = plan.transform(&[x], widen).unwrap();
        let _ = plan.transform(&[out[0]], identity_module(4)).unwrap();

        let g = Graph::build(&[(0, 1)], 2).unwrap();
        let mut store = FeatureStore::for_graph(&g);
        store
            .attach(Scope::Vertex, "input", Matrix::zeros(2, 2))
            .unwrap();
        let issues = plan.validate(&g, &store).unwrap_err();
        let msg = format!("{}", issues[0]);
        assert!(msg.contains("step 1"), "{msg}");
        assert!(msg.contains("step 0"), "{msg}");
    }

    #[test]
    fn store_width_mismatch_is_reported() {
        let mut plan = Plan::new();
        let x = plan.get_vertex("input");
        let out = plan.transform(&[x], identity_module(3)).unwrap();
        plan.mark_output(out[0], "h").unwrap();

        let g = Graph::build(&[], 2).unwrap();
        let mut store = FeatureStore::for_graph(&g);
        store
            .attach(Scope::Vertex, "input", Matrix::zeros(2, 5))
            .unwrap();
        let issues = plan.validate(&g, &store).unwrap_err();
        assert!(
            issues
                .iter()
                .any(|i| i.message.contains("5 columns") && i.message.contains("expects 3")),
            "{issues:?}"
        );
    }

    #[test]
    fn duplicate_output_name_rejected() {
        let mut plan = Plan::new();
        let x = plan.get_vertex("input");
        let out = plan.transform(&[x], identity_module(1)).unwrap();
        plan.mark_output(out[0], "h").unwrap();
        assert!(matches!(
            plan.mark_output(out[0], "h").unwrap_err(),
            PlanBuildError::DuplicateOutput { .. }
        ));
    }

    #[test]
    fn validate_collects_multiple_issues() {
        let mut plan = Plan::new();
        let a = plan.get_vertex("a");
        let b = plan.get_vertex("b");
        let mut m = ModuleGraph::new();
        let x = m.input("x", 1);
        let y = m.input("y", 1);
        let s = m.elem_add(x, y);
        m.set_outputs(&[s]);
        let out = plan.transform(&[a, b], m).unwrap();
        plan.mark_output(out[0], "h").unwrap();

        let g = Graph::build(&[], 2).unwrap();
        let store = FeatureStore::for_graph(&g);
        let issues = plan.validate(&g, &store).unwrap_err();
        assert!(issues.len() >= 2, "both missing features reported: {issues:?}");
    }
}
