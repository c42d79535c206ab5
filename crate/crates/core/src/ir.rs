//! Dataflow IR for vertex and edge modules.
//!
//! A [`ModuleGraph`] is a small acyclic graph of tensor ops over a symbolic
//! batch dimension: every node produces a `batch x cols` value where `cols`
//! is fixed by shape inference and `batch` is whatever row count the module
//! is invoked on (vertices of a partition, packed edges, ...). Parameters
//! are module-owned constants; they enter the dataflow either as the
//! right-hand side of [`OpKind::MatMulParam`] or broadcast row-wise through
//! [`OpKind::ParamRow`].
//!
//! [`ModuleGraph::interpret`] is the reference evaluator: plain node-by-node
//! execution in topological order. The fusion pass and the compiled form
//! live in [`crate::program`] and are tested against this interpreter.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::kernels::{self, KernelError};
use crate::matrix::Matrix;

pub type NodeId = usize;

/// One step of a fused elementwise chain. `operand` indexes into the fused
/// node's input list for binary ops and is `None` for unary ops.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainOp {
    pub kind: ChainKind,
    pub operand: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ChainKind {
    Add,
    Mul,
    LeakyRelu(f32),
    Exp,
    Identity,
}

/// Tensor operation kinds.
#[derive(Clone, Debug, PartialEq)]
pub enum OpKind {
    /// Entry node bound to a declared input slot.
    Input { slot: usize },
    /// Entry node broadcasting a single-row parameter across the batch.
    ParamRow { name: String },
    /// Matrix product with a named parameter on the right.
    MatMulParam { name: String },
    ElemAdd,
    ElemMul,
    /// Sum over the last dimension in `groups` contiguous blocks
    /// (`groups == 1` sums the whole row; one group per head otherwise).
    ReduceSumGroups { groups: usize },
    LeakyRelu { slope: f32 },
    Exp,
    /// Row-wise scaling: second input carries per-row factors whose column
    /// count divides the first input's.
    ScaleRows,
    Identity,
    /// Collapsed chain of single-consumer elementwise ops, produced by
    /// [`crate::program::fuse`].
    Fused { chain: Vec<ChainOp> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Node {
    pub kind: OpKind,
    pub inputs: Vec<NodeId>,
}

/// Named module entry point with its declared width.
#[derive(Clone, Debug, PartialEq)]
pub struct InputSlot {
    pub name: String,
    pub cols: usize,
}

/// Errors raised while analyzing or evaluating a module.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum IrError {
    #[error("module graph contains a cycle")]
    Cyclic,
    #[error("node {node} references unknown parameter \"{name}\"")]
    UnknownParam { node: NodeId, name: String },
    #[error("node {node}: parameter \"{name}\" must have exactly one row to broadcast, has {rows}")]
    ParamNotRow {
        node: NodeId,
        name: String,
        rows: usize,
    },
    #[error("node {node}: expected {expected} inputs, has {got}")]
    BadArity {
        node: NodeId,
        expected: usize,
        got: usize,
    },
    #[error("node {node}: input id {input} out of range")]
    BadInputId { node: NodeId, input: NodeId },
    #[error("node {node}: input slot {slot} not declared")]
    BadSlot { node: NodeId, slot: usize },
    #[error("node {node}: shape conflict, {left} vs {right} columns")]
    ShapeConflict {
        node: NodeId,
        left: usize,
        right: usize,
    },
    #[error("node {node}: {cols} columns not divisible by {groups} groups")]
    BadGroups {
        node: NodeId,
        cols: usize,
        groups: usize,
    },
    #[error("node {node}: matmul input has {input_cols} columns but parameter \"{name}\" has {param_rows} rows")]
    MatMulShape {
        node: NodeId,
        name: String,
        input_cols: usize,
        param_rows: usize,
    },
    #[error("module declares no input slots")]
    NoInputs,
    #[error("output slot {index} (node {node}) is not reachable from any input slot")]
    OutputUnreachable { index: usize, node: NodeId },
    #[error("output slot {index} references node {node} which does not exist")]
    BadOutput { index: usize, node: NodeId },
    #[error("expected {expected} input matrices, got {got}")]
    InputCount { expected: usize, got: usize },
    #[error("input \"{name}\" has {got} columns, slot declares {expected}")]
    InputCols {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("input \"{name}\" has {got} rows, batch is {batch}")]
    InputRows {
        name: String,
        batch: usize,
        got: usize,
    },
    #[error("fused chain is malformed at node {node}")]
    BadChain { node: NodeId },
    #[error(transparent)]
    Kernel(#[from] KernelError),
}

/// Dataflow IR of tensor ops plus named parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModuleGraph {
    nodes: Vec<Node>,
    input_slots: Vec<InputSlot>,
    output_slots: Vec<NodeId>,
    params: BTreeMap<String, Matrix>,
}

impl ModuleGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Assemble from raw parts without validation; analysis happens in
    /// [`ModuleGraph::infer_shapes`]. Mostly useful for tests and generators
    /// that need to build graphs the typed builder cannot (e.g. cyclic ones).
    pub fn from_parts(
        nodes: Vec<Node>,
        input_slots: Vec<InputSlot>,
        output_slots: Vec<NodeId>,
        params: BTreeMap<String, Matrix>,
    ) -> Self {
        ModuleGraph {
            nodes,
            input_slots,
            output_slots,
            params,
        }
    }

    fn push(&mut self, kind: OpKind, inputs: Vec<NodeId>) -> NodeId {
        self.nodes.push(Node { kind, inputs });
        self.nodes.len() - 1
    }

    /// Declare an input slot and return its entry node.
    pub fn input(&mut self, name: &str, cols: usize) -> NodeId {
        let slot = self.input_slots.len();
        self.input_slots.push(InputSlot {
            name: name.to_string(),
            cols,
        });
        self.push(OpKind::Input { slot }, vec![])
    }

    /// Register a parameter matrix under a name.
    pub fn add_param(&mut self, name: &str, value: Matrix) {
        self.params.insert(name.to_string(), value);
    }

    /// Entry node broadcasting the named single-row parameter.
    pub fn param_row(&mut self, name: &str) -> NodeId {
        self.push(
            OpKind::ParamRow {
                name: name.to_string(),
            },
            vec![],
        )
    }

    pub fn matmul_param(&mut self, x: NodeId, name: &str) -> NodeId {
        self.push(
            OpKind::MatMulParam {
                name: name.to_string(),
            },
            vec![x],
        )
    }

    pub fn elem_add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(OpKind::ElemAdd, vec![a, b])
    }

    pub fn elem_mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        self.push(OpKind::ElemMul, vec![a, b])
    }

    pub fn reduce_sum_groups(&mut self, x: NodeId, groups: usize) -> NodeId {
        self.push(OpKind::ReduceSumGroups { groups }, vec![x])
    }

    pub fn leaky_relu(&mut self, x: NodeId, slope: f32) -> NodeId {
        self.push(OpKind::LeakyRelu { slope }, vec![x])
    }

    pub fn exp(&mut self, x: NodeId) -> NodeId {
        self.push(OpKind::Exp, vec![x])
    }

    pub fn scale_rows(&mut self, x: NodeId, factors: NodeId) -> NodeId {
        self.push(OpKind::ScaleRows, vec![x, factors])
    }

    pub fn identity(&mut self, x: NodeId) -> NodeId {
        self.push(OpKind::Identity, vec![x])
    }

    pub fn set_outputs(&mut self, outputs: &[NodeId]) {
        self.output_slots = outputs.to_vec();
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn input_slots(&self) -> &[InputSlot] {
        &self.input_slots
    }

    pub fn output_slots(&self) -> &[NodeId] {
        &self.output_slots
    }

    pub fn params(&self) -> &BTreeMap<String, Matrix> {
        &self.params
    }

    pub fn param(&self, name: &str) -> Option<&Matrix> {
        self.params.get(name)
    }

    /// Widths of the declared input slots, in slot order.
    pub fn input_cols(&self) -> Vec<usize> {
        self.input_slots.iter().map(|s| s.cols).collect()
    }

    /// Column count of each output slot, in order.
    pub fn output_cols(&self) -> Result<Vec<usize>, IrError> {
        let shapes = self.infer_shapes()?;
        Ok(self.output_slots.iter().map(|&n| shapes[n]).collect())
    }

    /// Infer the column count of every node.
    ///
    /// Fails on cycles, arity violations, unknown or ill-shaped parameters,
    /// elementwise shape conflicts, and outputs unreachable from the input
    /// slots. Rows stay symbolic (the batch size of the eventual call).
    pub fn infer_shapes(&self) -> Result<Vec<usize>, IrError> {
        Ok(self.analyze()?.cols)
    }

    pub(crate) fn analyze(&self) -> Result<Analysis, IrError> {
        if self.input_slots.is_empty() {
            return Err(IrError::NoInputs);
        }
        for (index, &node) in self.output_slots.iter().enumerate() {
            if node >= self.nodes.len() {
                return Err(IrError::BadOutput { index, node });
            }
        }
        let topo = self.topo_order()?;
        let mut cols = vec![0usize; self.nodes.len()];
        let mut from_input = vec![false; self.nodes.len()];
        for &id in &topo {
            let node = &self.nodes[id];
            self.check_arity(id, node)?;
            from_input[id] = matches!(node.kind, OpKind::Input { .. })
                || node.inputs.iter().any(|&i| from_input[i]);
            cols[id] = self.node_cols(id, node, &cols)?;
        }
        for (index, &node) in self.output_slots.iter().enumerate() {
            if !from_input[node] {
                return Err(IrError::OutputUnreachable { index, node });
            }
        }
        Ok(Analysis { topo, cols })
    }

    fn check_arity(&self, id: NodeId, node: &Node) -> Result<(), IrError> {
        let expected = match &node.kind {
            OpKind::Input { .. } | OpKind::ParamRow { .. } => 0,
            OpKind::MatMulParam { .. }
            | OpKind::ReduceSumGroups { .. }
            | OpKind::LeakyRelu { .. }
            | OpKind::Exp
            | OpKind::Identity => 1,
            OpKind::ElemAdd | OpKind::ElemMul | OpKind::ScaleRows => 2,
            OpKind::Fused { chain } => {
                if chain.is_empty() || node.inputs.is_empty() {
                    return Err(IrError::BadChain { node: id });
                }
                for op in chain {
                    let needs_operand = matches!(op.kind, ChainKind::Add | ChainKind::Mul);
                    match op.operand {
                        Some(ix) if needs_operand && ix < node.inputs.len() => {}
                        None if !needs_operand => {}
                        _ => return Err(IrError::BadChain { node: id }),
                    }
                }
                return Ok(());
            }
        };
        if node.inputs.len() != expected {
            return Err(IrError::BadArity {
                node: id,
                expected,
                got: node.inputs.len(),
            });
        }
        Ok(())
    }

    fn node_cols(&self, id: NodeId, node: &Node, cols: &[usize]) -> Result<usize, IrError> {
        match &node.kind {
            OpKind::Input { slot } => self
                .input_slots
                .get(*slot)
                .map(|s| s.cols)
                .ok_or(IrError::BadSlot { node: id, slot: *slot }),
            OpKind::ParamRow { name } => {
                let p = self.params.get(name).ok_or_else(|| IrError::UnknownParam {
                    node: id,
                    name: name.clone(),
                })?;
                if p.rows() != 1 {
                    return Err(IrError::ParamNotRow {
                        node: id,
                        name: name.clone(),
                        rows: p.rows(),
                    });
                }
                Ok(p.cols())
            }
            OpKind::MatMulParam { name } => {
                let p = self.params.get(name).ok_or_else(|| IrError::UnknownParam {
                    node: id,
                    name: name.clone(),
                })?;
                let input_cols = cols[node.inputs[0]];
                if input_cols != p.rows() {
                    return Err(IrError::MatMulShape {
                        node: id,
                        name: name.clone(),
                        input_cols,
                        param_rows: p.rows(),
                    });
                }
                Ok(p.cols())
            }
            OpKind::ElemAdd | OpKind::ElemMul => {
                let (a, b) = (cols[node.inputs[0]], cols[node.inputs[1]]);
                if a != b {
                    return Err(IrError::ShapeConflict {
                        node: id,
                        left: a,
                        right: b,
                    });
                }
                Ok(a)
            }
            OpKind::ReduceSumGroups { groups } => {
                let c = cols[node.inputs[0]];
                if *groups == 0 || c % groups != 0 {
                    return Err(IrError::BadGroups {
                        node: id,
                        cols: c,
                        groups: *groups,
                    });
                }
                Ok(*groups)
            }
            OpKind::LeakyRelu { .. } | OpKind::Exp | OpKind::Identity => {
                Ok(cols[node.inputs[0]])
            }
            OpKind::ScaleRows => {
                let (x, s) = (cols[node.inputs[0]], cols[node.inputs[1]]);
                if s == 0 || x % s != 0 {
                    return Err(IrError::ShapeConflict {
                        node: id,
                        left: x,
                        right: s,
                    });
                }
                Ok(x)
            }
            OpKind::Fused { chain } => {
                let c = cols[node.inputs[0]];
                for op in chain {
                    if let Some(ix) = op.operand {
                        let oc = cols[node.inputs[ix]];
                        if oc != c {
                            return Err(IrError::ShapeConflict {
                                node: id,
                                left: c,
                                right: oc,
                            });
                        }
                    }
                }
                Ok(c)
            }
        }
    }

    fn topo_order(&self) -> Result<Vec<NodeId>, IrError> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut consumers: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for (id, node) in self.nodes.iter().enumerate() {
            for &input in &node.inputs {
                if input >= n {
                    return Err(IrError::BadInputId { node: id, input });
                }
                indegree[id] += 1;
                consumers[input].push(id);
            }
        }
        let mut ready: Vec<NodeId> = (0..n).filter(|&i| indegree[i] == 0).collect();
        ready.reverse(); // pop() visits lowest id first
        let mut order = Vec::with_capacity(n);
        while let Some(id) = ready.pop() {
            order.push(id);
            for &c in &consumers[id] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    // Keep the order deterministic by inserting in id order.
                    let pos = ready
                        .iter()
                        .rposition(|&r| r > c)
                        .map_or(0, |p| p + 1);
                    ready.insert(pos, c);
                }
            }
        }
        if order.len() != n {
            return Err(IrError::Cyclic);
        }
        Ok(order)
    }

    /// Evaluate the module on one input matrix per declared slot.
    ///
    /// Node-by-node reference semantics in topological order; every
    /// intermediate is materialized. The compiled path in
    /// [`crate::program`] must agree with this bitwise.
    pub fn interpret(&self, inputs: &[&Matrix]) -> Result<Vec<Matrix>, IrError> {
        let analysis = self.analyze()?;
        let batch = self.check_inputs(inputs)?;
        let mut values: Vec<Option<Matrix>> = vec![None; self.nodes.len()];
        for &id in &analysis.topo {
            let node = &self.nodes[id];
            let value = match &node.kind {
                OpKind::Input { slot } => inputs[*slot].clone(),
                OpKind::ParamRow { name } => {
                    broadcast_row(self.params.get(name).expect("checked"), batch)
                }
                OpKind::MatMulParam { name } => {
                    let p = self.params.get(name).expect("checked");
                    kernels::matmul(values[node.inputs[0]].as_ref().expect("topo"), p)?
                }
                OpKind::ElemAdd => kernels::elem_add(
                    values[node.inputs[0]].as_ref().expect("topo"),
                    values[node.inputs[1]].as_ref().expect("topo"),
                )?,
                OpKind::ElemMul => kernels::elem_mul(
                    values[node.inputs[0]].as_ref().expect("topo"),
                    values[node.inputs[1]].as_ref().expect("topo"),
                )?,
                OpKind::ReduceSumGroups { groups } => kernels::reduce_sum_groups(
                    values[node.inputs[0]].as_ref().expect("topo"),
                    *groups,
                )?,
                OpKind::LeakyRelu { slope } => kernels::leaky_relu(
                    values[node.inputs[0]].as_ref().expect("topo"),
                    *slope,
                ),
                OpKind::Exp => kernels::exp(values[node.inputs[0]].as_ref().expect("topo")),
                OpKind::ScaleRows => kernels::scale_rows(
                    values[node.inputs[0]].as_ref().expect("topo"),
                    values[node.inputs[1]].as_ref().expect("topo"),
                )?,
                OpKind::Identity => values[node.inputs[0]].clone().expect("topo"),
                OpKind::Fused { chain } => {
                    let mut acc = values[node.inputs[0]].clone().expect("topo");
                    for op in chain {
                        acc = match (op.kind, op.operand) {
                            (ChainKind::Add, Some(ix)) => kernels::elem_add(
                                &acc,
                                values[node.inputs[ix]].as_ref().expect("topo"),
                            )?,
                            (ChainKind::Mul, Some(ix)) => kernels::elem_mul(
                                &acc,
                                values[node.inputs[ix]].as_ref().expect("topo"),
                            )?,
                            (ChainKind::LeakyRelu(slope), None) => {
                                kernels::leaky_relu(&acc, slope)
                            }
                            (ChainKind::Exp, None) => kernels::exp(&acc),
                            (ChainKind::Identity, None) => acc,
                            _ => return Err(IrError::BadChain { node: id }),
                        };
                    }
                    acc
                }
            };
            values[id] = Some(value);
        }
        Ok(self
            .output_slots
            .iter()
            .map(|&id| values[id].clone().expect("outputs validated"))
            .collect())
    }

    /// Validate input count/shapes and return the batch size.
    pub(crate) fn check_inputs(&self, inputs: &[&Matrix]) -> Result<usize, IrError> {
        if inputs.len() != self.input_slots.len() {
            return Err(IrError::InputCount {
                expected: self.input_slots.len(),
                got: inputs.len(),
            });
        }
        let batch = inputs.first().map_or(0, |m| m.rows());
        for (slot, m) in self.input_slots.iter().zip(inputs) {
            if m.cols() != slot.cols {
                return Err(IrError::InputCols {
                    name: slot.name.clone(),
                    expected: slot.cols,
                    got: m.cols(),
                });
            }
            if m.rows() != batch {
                return Err(IrError::InputRows {
                    name: slot.name.clone(),
                    batch,
                    got: m.rows(),
                });
            }
        }
        Ok(batch)
    }
}

pub(crate) struct Analysis {
    pub topo: Vec<NodeId>,
    pub cols: Vec<usize>,
}

/// Replicate a single-row parameter across `batch` rows.
pub(crate) fn broadcast_row(param: &Matrix, batch: usize) -> Matrix {
    let mut out = Matrix::zeros(batch, param.cols());
    for r in 0..batch {
        out.row_mut(r).copy_from_slice(param.row(0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infer_matmul_shapes() {
        let mut m = ModuleGraph::new();
        let x = m.input("x", 4);
        m.add_param("w", Matrix::zeros(4, 8));
        let h = m.matmul_param(x, "w");
        m.set_outputs(&[h]);
        let shapes = m.infer_shapes().unwrap();
        assert_eq!(shapes[h], 8);
    }

    #[test]
    fn infer_attention_score_shape() {
        // ElemMul(x cols 8, att cols 8) then a full-row sum -> 1 column.
        let mut m = ModuleGraph::new();
        let x = m.input("x", 8);
        m.add_param("att", Matrix::zeros(1, 8));
        let a = m.param_row("att");
        let prod = m.elem_mul(x, a);
        let score = m.reduce_sum_groups(prod, 1);
        m.set_outputs(&[score]);
        let shapes = m.infer_shapes().unwrap();
        assert_eq!(shapes[score], 1);
    }

    #[test]
    fn infer_rejects_shape_conflict() {
        let mut m = ModuleGraph::new();
        let a = m.input("a", 3);
        let b = m.input("b", 4);
        let sum = m.elem_add(a, b);
        m.set_outputs(&[sum]);
        assert!(matches!(
            m.infer_shapes().unwrap_err(),
            IrError::ShapeConflict { left: 3, right: 4, .. }
        ));
    }

    #[test]
    fn infer_rejects_unknown_param() {
        let mut m = ModuleGraph::new();
        let x = m.input("x", 2);
        let h = m.matmul_param(x, "missing");
        m.set_outputs(&[h]);
        assert!(matches!(
            m.infer_shapes().unwrap_err(),
            IrError::UnknownParam { .. }
        ));
    }

    #[test]
    fn infer_rejects_cycle() {
        // Two nodes consuming each other; only expressible through from_parts.
        let nodes = vec![
            Node {
                kind: OpKind::Input { slot: 0 },
                inputs: vec![],
            },
            Node {
                kind: OpKind::ElemAdd,
                inputs: vec![0, 2],
            },
            Node {
                kind: OpKind::Identity,
                inputs: vec![1],
            },
        ];
        let m = ModuleGraph::from_parts(
            nodes,
            vec![InputSlot {
                name: "x".into(),
                cols: 2,
            }],
            vec![1],
            BTreeMap::new(),
        );
        assert_eq!(m.infer_shapes().unwrap_err(), IrError::Cyclic);
    }

    #[test]
    fn interpret_identity_module() {
        let mut m = ModuleGraph::new();
        let x = m.input("x", 3);
        let out = m.identity(x);
        m.set_outputs(&[out]);
        let input = Matrix::from_rows(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let outputs = m.interpret(&[&input]).unwrap();
        assert_eq!(outputs, vec![input]);
    }

    #[test]
    fn interpret_gat_vertex_hand_values() {
        // x = I2, W = I2, att_src = [1,0], att_dst = [0,1]:
        // alpha_src = [1, 0]^T, alpha_dst = [0, 1]^T.
        let mut m = ModuleGraph::new();
        let x = m.input("x", 2);
        m.add_param("w", Matrix::identity(2));
        m.add_param("att_src", Matrix::row_vector(&[1.0, 0.0]));
        m.add_param("att_dst", Matrix::row_vector(&[0.0, 1.0]));
        let xp = m.matmul_param(x, "w");
        let asrc = m.param_row("att_src");
        let sprod = m.elem_mul(xp, asrc);
        let alpha_src = m.reduce_sum_groups(sprod, 1);
        let adst = m.param_row("att_dst");
        let dprod = m.elem_mul(xp, adst);
        let alpha_dst = m.reduce_sum_groups(dprod, 1);
        m.set_outputs(&[alpha_src, alpha_dst, xp]);

        let outputs = m.interpret(&[&Matrix::identity(2)]).unwrap();
        assert_eq!(outputs[0], Matrix::column_vector(&[1.0, 0.0]));
        assert_eq!(outputs[1], Matrix::column_vector(&[0.0, 1.0]));
        assert_eq!(outputs[2], Matrix::identity(2));
    }

    #[test]
    fn interpret_gat_edge_hand_value() {
        // leaky_relu(dst + src) on src = dst = [1] gives [2].
        let mut m = ModuleGraph::new();
        let src = m.input("src", 1);
        let dst = m.input("dst", 1);
        let sum = m.elem_add(dst, src);
        let out = m.leaky_relu(sum, 0.2);
        m.set_outputs(&[out]);

        let one = Matrix::column_vector(&[1.0]);
        let outputs = m.interpret(&[&one, &one]).unwrap();
        assert_eq!(outputs[0], Matrix::column_vector(&[2.0]));
    }

    #[test]
    fn interpret_rejects_wrong_input_cols() {
        let mut m = ModuleGraph::new();
        let x = m.input("x", 3);
        let out = m.identity(x);
        m.set_outputs(&[out]);
        let bad = Matrix::zeros(2, 4);
        assert!(matches!(
            m.interpret(&[&bad]).unwrap_err(),
            IrError::InputCols { .. }
        ));
    }

    #[test]
    fn output_must_reach_an_input() {
        let mut m = ModuleGraph::new();
        let _x = m.input("x", 2);
        m.add_param("p", Matrix::row_vector(&[1.0, 2.0]));
        let p = m.param_row("p");
        m.set_outputs(&[p]);
        assert!(matches!(
            m.infer_shapes().unwrap_err(),
            IrError::OutputUnreachable { .. }
        ));
    }
}
