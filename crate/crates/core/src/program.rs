//! Elementwise fusion and compilation of modules to flat execution programs.
//!
//! [`fuse`] collapses maximal chains of single-consumer elementwise ops into
//! [`OpKind::Fused`] super-nodes; dataflow semantics are unchanged and the
//! pass is idempotent. [`compile_module`] lowers a module into a
//! [`FusedProgram`]: an ordered list of kernel steps with every operand
//! resolved to an input slot, a parameter, or a numbered buffer. Running the
//! program does no IR traversal and allocates nothing beyond the step output
//! buffers, and it produces bit-identical results to
//! [`ModuleGraph::interpret`] — fusion never reorders a floating-point
//! reduction, it only removes materialization.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::ir::{ChainKind, ChainOp, IrError, ModuleGraph, Node, NodeId, OpKind};
use crate::kernels;
use crate::matrix::Matrix;

fn is_plain_elementwise(kind: &OpKind) -> bool {
    matches!(
        kind,
        OpKind::ElemAdd
            | OpKind::ElemMul
            | OpKind::LeakyRelu { .. }
            | OpKind::Exp
            | OpKind::Identity
    )
}

/// Collapse maximal chains of single-consumer elementwise ops into fused
/// super-nodes. Chains follow each node's primary (first) input; a node that
/// is multiply consumed, or consumed as a secondary operand, ends a chain.
/// Chains of length one are left as they are, so the worst case returns the
/// input unchanged. Total: never fails.
pub fn fuse(m: &ModuleGraph) -> ModuleGraph {
    let nodes = m.nodes();
    let n = nodes.len();

    // Consumer counts; output slots count as consumers so a mid-chain value
    // that the module exports stays materialized.
    let mut consumers = vec![0usize; n];
    for node in nodes {
        for &input in &node.inputs {
            if input < n {
                consumers[input] += 1;
            }
        }
    }
    for &out in m.output_slots() {
        if out < n {
            consumers[out] += 1;
        }
    }

    // link[p] = Some(c): p feeds c as primary input, both plain elementwise,
    // and c is p's only consumer.
    let mut link = vec![None; n];
    for (id, node) in nodes.iter().enumerate() {
        if !is_plain_elementwise(&node.kind) {
            continue;
        }
        let primary = node.inputs[0];
        if primary < n
            && is_plain_elementwise(&nodes[primary].kind)
            && consumers[primary] == 1
        {
            link[primary] = Some(id);
        }
    }
    let mut is_linked_target = vec![false; n];
    for l in &link {
        if let Some(c) = l {
            is_linked_target[*c] = true;
        }
    }

    // Walk chains from their heads and record members of chains of length >= 2.
    let mut chain_of: Vec<Option<usize>> = vec![None; n]; // node -> chain index
    let mut chains: Vec<Vec<NodeId>> = Vec::new();
    for id in 0..n {
        if !is_plain_elementwise(&nodes[id].kind) || is_linked_target[id] {
            continue;
        }
        let mut members = vec![id];
        let mut cur = id;
        while let Some(next) = link[cur] {
            members.push(next);
            cur = next;
        }
        if members.len() >= 2 {
            let index = chains.len();
            for &member in &members {
                chain_of[member] = Some(index);
            }
            chains.push(members);
        }
    }
    if chains.is_empty() {
        return m.clone();
    }

    // First pass: assign new ids. A chain collapses onto its head's position.
    let mut new_id = vec![usize::MAX; n];
    let mut next = 0usize;
    for id in 0..n {
        match chain_of[id] {
            Some(c) if chains[c][0] != id => {
                new_id[id] = usize::MAX; // fixed up below: maps to the head's new id
            }
            _ => {
                new_id[id] = next;
                next += 1;
            }
        }
    }
    for chain in &chains {
        let head_new = new_id[chain[0]];
        for &member in &chain[1..] {
            new_id[member] = head_new;
        }
    }

    // Second pass: emit nodes with remapped inputs.
    let mut out_nodes: Vec<Node> = Vec::with_capacity(next);
    for id in 0..n {
        if let Some(c) = chain_of[id] {
            if chains[c][0] != id {
                continue; // absorbed into the head's fused node
            }
            let members = &chains[c];
            let mut inputs = vec![new_id[nodes[id].inputs[0]]];
            let mut chain_ops = Vec::with_capacity(members.len());
            for &member in members {
                let node = &nodes[member];
                let (kind, operand) = match &node.kind {
                    OpKind::ElemAdd => (ChainKind::Add, Some(node.inputs[1])),
                    OpKind::ElemMul => (ChainKind::Mul, Some(node.inputs[1])),
                    OpKind::LeakyRelu { slope } => (ChainKind::LeakyRelu(*slope), None),
                    OpKind::Exp => (ChainKind::Exp, None),
                    OpKind::Identity => (ChainKind::Identity, None),
                    _ => unreachable!("chain members are plain elementwise"),
                };
                let operand = operand.map(|raw| {
                    inputs.push(new_id[raw]);
                    inputs.len() - 1
                });
                chain_ops.push(ChainOp { kind, operand });
            }
            out_nodes.push(Node {
                kind: OpKind::Fused { chain: chain_ops },
                inputs,
            });
        } else {
            let node = &nodes[id];
            out_nodes.push(Node {
                kind: node.kind.clone(),
                inputs: node.inputs.iter().map(|&i| new_id[i]).collect(),
            });
        }
    }

    let outputs: Vec<NodeId> = m.output_slots().iter().map(|&o| new_id[o]).collect();
    ModuleGraph::from_parts(
        out_nodes,
        m.input_slots().to_vec(),
        outputs,
        m.params().clone(),
    )
}

/// Where a step operand comes from at run time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Src {
    /// Caller-provided input slot.
    Input(usize),
    /// Step output buffer.
    Buf(usize),
    /// Single-row parameter, broadcast across the batch.
    Param(usize),
}

/// One op of a compiled elementwise chain.
#[derive(Clone, Debug)]
pub struct CompiledChainOp {
    pub kind: ChainKind,
    pub operand: Option<Src>,
}

/// A kernel invocation with bound operands.
#[derive(Clone, Debug)]
pub enum Step {
    MatMul {
        input: Src,
        param: usize,
        out: usize,
    },
    Elementwise {
        primary: Src,
        chain: Vec<CompiledChainOp>,
        out: usize,
    },
    ReduceSumGroups {
        input: Src,
        groups: usize,
        out: usize,
    },
    ScaleRows {
        input: Src,
        factors: Src,
        out: usize,
    },
}

/// Compiled, slot-bound execution program for one module.
#[derive(Clone, Debug)]
pub struct FusedProgram {
    steps: Vec<Step>,
    /// Column count of each buffer; rows are the call's batch size.
    buffer_cols: Vec<usize>,
    input_cols: Vec<usize>,
    input_names: Vec<String>,
    outputs: Vec<Src>,
    output_cols: Vec<usize>,
    params: Vec<Matrix>,
}

/// Compile a module: fuse elementwise chains, then lower to a flat program.
/// All shape checking happens here; a compiled program can only fail at run
/// time on inputs that disagree with the declared slots.
pub fn compile_module(m: &ModuleGraph) -> Result<FusedProgram, IrError> {
    let fused = fuse(m);
    let analysis = fused.analyze()?;
    let nodes = fused.nodes();

    let mut params: Vec<Matrix> = Vec::new();
    let param_index = |value: &Matrix, params: &mut Vec<Matrix>| -> usize {
        params.push(value.clone());
        params.len() - 1
    };

    let mut steps: Vec<Step> = Vec::new();
    let mut buffer_cols: Vec<usize> = Vec::new();
    let mut src_of: Vec<Option<Src>> = vec![None; nodes.len()];

    // Materialize a broadcast parameter through an identity pass so that
    // non-elementwise kernels always read a real batch-sized operand.
    let materialize =
        |src: Src, cols: usize, steps: &mut Vec<Step>, buffer_cols: &mut Vec<usize>| -> Src {
            match src {
                Src::Param(_) => {
                    buffer_cols.push(cols);
                    let out = buffer_cols.len() - 1;
                    steps.push(Step::Elementwise {
                        primary: src,
                        chain: vec![CompiledChainOp {
                            kind: ChainKind::Identity,
                            operand: None,
                        }],
                        out,
                    });
                    Src::Buf(out)
                }
                other => other,
            }
        };

    for &id in &analysis.topo {
        let node = &nodes[id];
        let src = match &node.kind {
            OpKind::Input { slot } => Src::Input(*slot),
            OpKind::ParamRow { name } => {
                let p = fused.param(name).expect("analyze checked params");
                Src::Param(param_index(p, &mut params))
            }
            OpKind::MatMulParam { name } => {
                let p = fused.param(name).expect("analyze checked params");
                let pid = param_index(p, &mut params);
                let input = src_of[node.inputs[0]].expect("topo order");
                let input = materialize(
                    input,
                    analysis.cols[node.inputs[0]],
                    &mut steps,
                    &mut buffer_cols,
                );
                buffer_cols.push(analysis.cols[id]);
                let out = buffer_cols.len() - 1;
                steps.push(Step::MatMul {
                    input,
                    param: pid,
                    out,
                });
                Src::Buf(out)
            }
            OpKind::ReduceSumGroups { groups } => {
                let input = src_of[node.inputs[0]].expect("topo order");
                let input = materialize(
                    input,
                    analysis.cols[node.inputs[0]],
                    &mut steps,
                    &mut buffer_cols,
                );
                buffer_cols.push(analysis.cols[id]);
                let out = buffer_cols.len() - 1;
                steps.push(Step::ReduceSumGroups {
                    input,
                    groups: *groups,
                    out,
                });
                Src::Buf(out)
            }
            OpKind::ScaleRows => {
                let input = src_of[node.inputs[0]].expect("topo order");
                let input = materialize(
                    input,
                    analysis.cols[node.inputs[0]],
                    &mut steps,
                    &mut buffer_cols,
                );
                let factors = src_of[node.inputs[1]].expect("topo order");
                let factors = materialize(
                    factors,
                    analysis.cols[node.inputs[1]],
                    &mut steps,
                    &mut buffer_cols,
                );
                buffer_cols.push(analysis.cols[id]);
                let out = buffer_cols.len() - 1;
                steps.push(Step::ScaleRows {
                    input,
                    factors,
                    out,
                });
                Src::Buf(out)
            }
            // Unfused single elementwise ops compile to one-op chains.
            OpKind::ElemAdd | OpKind::ElemMul => {
                let kind = if matches!(node.kind, OpKind::ElemAdd) {
                    ChainKind::Add
                } else {
                    ChainKind::Mul
                };
                let primary = src_of[node.inputs[0]].expect("topo order");
                let operand = src_of[node.inputs[1]].expect("topo order");
                buffer_cols.push(analysis.cols[id]);
                let out = buffer_cols.len() - 1;
                steps.push(Step::Elementwise {
                    primary,
                    chain: vec![CompiledChainOp {
                        kind,
                        operand: Some(operand),
                    }],
                    out,
                });
                Src::Buf(out)
            }
            OpKind::LeakyRelu { slope } => {
                let primary = src_of[node.inputs[0]].expect("topo order");
                buffer_cols.push(analysis.cols[id]);
                let out = buffer_cols.len() - 1;
                steps.push(Step::Elementwise {
                    primary,
                    chain: vec![CompiledChainOp {
                        kind: ChainKind::LeakyRelu(*slope),
                        operand: None,
                    }],
                    out,
                });
                Src::Buf(out)
            }
            OpKind::Exp | OpKind::Identity => {
                let kind = if matches!(node.kind, OpKind::Exp) {
                    ChainKind::Exp
                } else {
                    ChainKind::Identity
                };
                let primary = src_of[node.inputs[0]].expect("topo order");
                buffer_cols.push(analysis.cols[id]);
                let out = buffer_cols.len() - 1;
                steps.push(Step::Elementwise {
                    primary,
                    chain: vec![CompiledChainOp {
                        kind,
                        operand: None,
                    }],
                    out,
                });
                Src::Buf(out)
            }
            OpKind::Fused { chain } => {
                let primary = src_of[node.inputs[0]].expect("topo order");
                let compiled: Vec<CompiledChainOp> = chain
                    .iter()
                    .map(|op| CompiledChainOp {
                        kind: op.kind,
                        operand: op
                            .operand
                            .map(|ix| src_of[node.inputs[ix]].expect("topo order")),
                    })
                    .collect();
                buffer_cols.push(analysis.cols[id]);
                let out = buffer_cols.len() - 1;
                steps.push(Step::Elementwise {
                    primary,
                    chain: compiled,
                    out,
                });
                Src::Buf(out)
            }
        };
        src_of[id] = Some(src);
    }

    let outputs: Vec<Src> = fused
        .output_slots()
        .iter()
        .map(|&o| src_of[o].expect("outputs validated by analyze"))
        .collect();
    let output_cols: Vec<usize> = fused
        .output_slots()
        .iter()
        .map(|&o| analysis.cols[o])
        .collect();

    Ok(FusedProgram {
        steps,
        buffer_cols,
        input_cols: fused.input_slots().iter().map(|s| s.cols).collect(),
        input_names: fused.input_slots().iter().map(|s| s.name.clone()).collect(),
        outputs,
        output_cols,
        params,
    })
}

impl FusedProgram {
    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn num_inputs(&self) -> usize {
        self.input_cols.len()
    }

    pub fn input_cols(&self) -> &[usize] {
        &self.input_cols
    }

    pub fn output_cols(&self) -> &[usize] {
        &self.output_cols
    }

    /// Execute on one matrix per input slot. Returns one matrix per output
    /// slot with `batch` rows.
    pub fn run(&self, inputs: &[&Matrix]) -> Result<Vec<Matrix>, IrError> {
        let batch = self.check_inputs(inputs)?;
        let mut buffers: Vec<Vec<f32>> = self
            .buffer_cols
            .iter()
            .map(|&c| vec![0.0f32; batch * c])
            .collect();

        for step in &self.steps {
            self.run_step(step, inputs, &mut buffers, batch);
        }

        Ok(self
            .outputs
            .iter()
            .zip(&self.output_cols)
            .map(|(&src, &cols)| match src {
                Src::Input(i) => inputs[i].clone(),
                Src::Buf(b) => Matrix::from_vec(batch, cols, buffers[b].clone())
                    .expect("buffer sized for batch"),
                Src::Param(p) => crate::ir::broadcast_row(&self.params[p], batch),
            })
            .collect())
    }

    fn check_inputs(&self, inputs: &[&Matrix]) -> Result<usize, IrError> {
        if inputs.len() != self.input_cols.len() {
            return Err(IrError::InputCount {
                expected: self.input_cols.len(),
                got: inputs.len(),
            });
        }
        let batch = inputs.first().map_or(0, |m| m.rows());
        for ((m, &cols), name) in inputs.iter().zip(&self.input_cols).zip(&self.input_names) {
            if m.cols() != cols {
                return Err(IrError::InputCols {
                    name: name.clone(),
                    expected: cols,
                    got: m.cols(),
                });
            }
            if m.rows() != batch {
                return Err(IrError::InputRows {
                    name: name.clone(),
                    batch,
                    got: m.rows(),
                });
            }
        }
        Ok(batch)
    }

    /// (data, cols, broadcast): broadcast sources repeat their single row.
    fn resolve<'a>(
        &'a self,
        src: Src,
        inputs: &'a [&Matrix],
        buffers: &'a [Vec<f32>],
    ) -> (&'a [f32], usize, bool) {
        match src {
            Src::Input(i) => (inputs[i].data(), inputs[i].cols(), false),
            Src::Buf(b) => (&buffers[b], self.buffer_cols[b], false),
            Src::Param(p) => (self.params[p].data(), self.params[p].cols(), true),
        }
    }

    fn run_step(&self, step: &Step, inputs: &[&Matrix], buffers: &mut [Vec<f32>], batch: usize) {
        match step {
            Step::MatMul { input, param, out } => {
                let mut buf = core::mem::take(&mut buffers[*out]);
                let (a, k, broadcast) = self.resolve(*input, inputs, buffers);
                debug_assert!(!broadcast, "matmul inputs are materialized at compile time");
                let p = &self.params[*param];
                kernels::matmul_slices(&mut buf, a, batch, k, p.data(), p.cols());
                buffers[*out] = buf;
            }
            Step::ReduceSumGroups { input, groups, out } => {
                let mut buf = core::mem::take(&mut buffers[*out]);
                let (x, cols, broadcast) = self.resolve(*input, inputs, buffers);
                debug_assert!(!broadcast);
                kernels::reduce_sum_groups_slices(&mut buf, x, batch, cols, *groups);
                buffers[*out] = buf;
            }
            Step::ScaleRows {
                input,
                factors,
                out,
            } => {
                let mut buf = core::mem::take(&mut buffers[*out]);
                let (x, cols, xb) = self.resolve(*input, inputs, buffers);
                let (f, fcols, fb) = self.resolve(*factors, inputs, buffers);
                debug_assert!(!xb && !fb);
                kernels::scale_rows_slices(&mut buf, x, f, batch, cols, fcols);
                buffers[*out] = buf;
            }
            Step::Elementwise {
                primary,
                chain,
                out,
            } => {
                let mut buf = core::mem::take(&mut buffers[*out]);
                self.run_elementwise(*primary, chain, &mut buf, inputs, buffers, batch);
                buffers[*out] = buf;
            }
        }
    }

    fn run_elementwise(
        &self,
        primary: Src,
        chain: &[CompiledChainOp],
        out: &mut [f32],
        inputs: &[&Matrix],
        buffers: &[Vec<f32>],
        batch: usize,
    ) {
        let (p, cols, p_broadcast) = self.resolve(primary, inputs, buffers);
        let any_broadcast = p_broadcast
            || chain.iter().any(|op| {
                matches!(op.operand, Some(Src::Param(_)))
            });

        if !any_broadcast {
            // Flat path: whole-buffer passes, same element order as row-wise.
            out.copy_from_slice(p);
            for op in chain {
                match (op.kind, op.operand) {
                    (ChainKind::Add, Some(src)) => {
                        let (o, _, _) = self.resolve(src, inputs, buffers);
                        for (v, &x) in out.iter_mut().zip(o) {
                            *v += x;
                        }
                    }
                    (ChainKind::Mul, Some(src)) => {
                        let (o, _, _) = self.resolve(src, inputs, buffers);
                        for (v, &x) in out.iter_mut().zip(o) {
                            *v *= x;
                        }
                    }
                    (ChainKind::LeakyRelu(slope), None) => {
                        for v in out.iter_mut() {
                            if *v < 0.0 {
                                *v *= slope;
                            }
                        }
                    }
                    (ChainKind::Exp, None) => {
                        for v in out.iter_mut() {
                            *v = kernels::exp_f32(*v);
                        }
                    }
                    (ChainKind::Identity, None) => {}
                    _ => unreachable!("validated at compile time"),
                }
            }
            return;
        }

        // Broadcast path: row-wise so single-row params can repeat.
        for r in 0..batch {
            let out_row = &mut out[r * cols..(r + 1) * cols];
            let p_row = if p_broadcast {
                &p[..cols]
            } else {
                &p[r * cols..(r + 1) * cols]
            };
            out_row.copy_from_slice(p_row);
            for op in chain {
                match (op.kind, op.operand) {
                    (ChainKind::Add, Some(src)) => {
                        let (o, ocols, ob) = self.resolve(src, inputs, buffers);
                        let o_row = if ob {
                            &o[..ocols]
                        } else {
                            &o[r * ocols..(r + 1) * ocols]
                        };
                        for (v, &x) in out_row.iter_mut().zip(o_row) {
                            *v += x;
                        }
                    }
                    (ChainKind::Mul, Some(src)) => {
                        let (o, ocols, ob) = self.resolve(src, inputs, buffers);
                        let o_row = if ob {
                            &o[..ocols]
                        } else {
                            &o[r * ocols..(r + 1) * ocols]
                        };
                        for (v, &x) in out_row.iter_mut().zip(o_row) {
                            *v *= x;
                        }
                    }
                    (ChainKind::LeakyRelu(slope), None) => {
                        for v in out_row.iter_mut() {
                            if *v < 0.0 {
                                *v *= slope;
                            }
                        }
                    }
                    (ChainKind::Exp, None) => {
                        for v in out_row.iter_mut() {
                            *v = kernels::exp_f32(*v);
                        }
                    }
                    (ChainKind::Identity, None) => {}
                    _ => unreachable!("validated at compile time"),
                }
            }
        }
    }
}
