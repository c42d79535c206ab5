//! Partitioned multi-worker plan executor.
//!
//! Plan steps run as supersteps with a barrier between steps. Transform and
//! edge-softmax steps are purely local to each partition. A message-passing
//! step runs scatter (owners pack one dense [`MessageBatch`] per remote
//! partition per source feature — one row per boundary vertex, never per
//! edge), then apply (the destination partition gathers per-edge
//! source/destination/edge rows into dense matrices and runs the compiled
//! edge module once over all local edges), then gather (segment reduction
//! per destination in ascending edge-id order).
//!
//! Workers are threads communicating only through channels; each partition's
//! feature rows are owned by exactly one worker. With fewer threads than
//! partitions (the `GASLINE_THREADS` cap) a thread processes a contiguous
//! block of partitions, phase by phase, which leaves results bit-identical.
//! A step completes when the coordinator has collected every worker's
//! completion signal; outputs are assembled after the final barrier.
//!
//! Because every reduction folds in ascending edge id and CSC order is
//! global, outputs are bitwise identical for any partition count and any
//! thread cap.

use std::collections::HashMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::time::Instant;

use gasline_core::feature::{FeatureStore, Scope};
use gasline_core::flops;
use gasline_core::ir::IrError;
use gasline_core::kernels::{self, Reduction};
use gasline_core::matrix::Matrix;
use gasline_core::partition::PartitionedGraph;
use gasline_core::plan::{Aggregator, Binding, Plan, Step, ValidationIssue};
use gasline_core::program::{compile_module, FusedProgram};

use crate::report::{step_name, ExecutionReport, StepMetrics};

/// Dense payload shipped between partitions: the owner's current rows for
/// one source feature, packed over the boundary vertices of the send list.
#[derive(Clone, Debug)]
pub struct MessageBatch {
    pub from_part: usize,
    pub to_part: usize,
    /// Index into the step's src-input list.
    pub feature_slot: usize,
    /// Ascending global vertex ids; exactly the send list.
    pub row_ids: Vec<usize>,
    pub payload: Matrix,
}

impl MessageBatch {
    pub fn payload_bytes(&self) -> u64 {
        4 * self.payload.rows() as u64 * self.payload.cols() as u64
    }
}

/// Execution error.
#[derive(Debug, thiserror::Error)]
pub enum ExecError {
    #[error("plan failed validation with {} issue(s); first: {first}", issues.len())]
    Invalid {
        issues: Vec<ValidationIssue>,
        first: String,
    },
    #[error("step {step}: module compilation failed: {source}")]
    Compile { step: usize, source: IrError },
    #[error("step {step}: worker for partition block {thread} failed: {message}")]
    Worker {
        step: usize,
        thread: usize,
        message: String,
    },
    #[error("step {step}: worker channel disconnected")]
    Disconnected { step: usize },
}

/// Runtime options.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExecOptions {
    /// Cap on worker threads; defaults to one thread per partition.
    pub max_threads: Option<usize>,
}

impl ExecOptions {
    /// Read the `GASLINE_THREADS` cap from the environment.
    pub fn from_env() -> Self {
        let max_threads = std::env::var("GASLINE_THREADS")
            .ok()
            .and_then(|v| v.parse::<usize>().ok())
            .filter(|&t| t >= 1);
        ExecOptions { max_threads }
    }
}

enum CompiledStep {
    Transform {
        scope: Scope,
        program: FusedProgram,
        inputs: Vec<usize>,
        outputs: Vec<usize>,
    },
    MessagePassing {
        src: Vec<usize>,
        dst: Vec<usize>,
        edge: Vec<usize>,
        program: FusedProgram,
        aggregator: Aggregator,
        output: usize,
    },
    EdgeSoftmax {
        input: usize,
        output: usize,
    },
}

fn compile_plan(plan: &Plan) -> Result<Vec<CompiledStep>, ExecError> {
    plan.steps()
        .iter()
        .enumerate()
        .map(|(s, step)| {
            let wrap = |source| ExecError::Compile { step: s, source };
            Ok(match step {
                Step::Transform {
                    scope,
                    module,
                    inputs,
                    outputs,
                } => CompiledStep::Transform {
                    scope: *scope,
                    program: compile_module(module).map_err(wrap)?,
                    inputs: inputs.iter().map(|r| r.index()).collect(),
                    outputs: outputs.iter().map(|r| r.index()).collect(),
                },
                Step::MessagePassing {
                    src_inputs,
                    dst_inputs,
                    edge_inputs,
                    module,
                    aggregator,
                    output,
                } => CompiledStep::MessagePassing {
                    src: src_inputs.iter().map(|r| r.index()).collect(),
                    dst: dst_inputs.iter().map(|r| r.index()).collect(),
                    edge: edge_inputs.iter().map(|r| r.index()).collect(),
                    program: compile_module(module).map_err(wrap)?,
                    aggregator: *aggregator,
                    output: output.index(),
                },
                Step::EdgeSoftmax { input, output } => CompiledStep::EdgeSoftmax {
                    input: input.index(),
                    output: output.index(),
                },
            })
        })
        .collect()
}

/// Per-partition feature rows: vertex features hold the owned vertex range,
/// edge features the local edges in CSC slot order.
#[derive(Default)]
struct PartState {
    vertex: HashMap<usize, Matrix>,
    edge: HashMap<usize, Matrix>,
}

struct Envelope {
    step: usize,
    batch: MessageBatch,
}

impl Envelope {
    /// Poison message the coordinator uses to unblock receive loops on abort.
    fn abort_sentinel() -> Self {
        Envelope {
            step: usize::MAX,
            batch: MessageBatch {
                from_part: 0,
                to_part: 0,
                feature_slot: 0,
                row_ids: Vec::new(),
                payload: Matrix::zeros(0, 0),
            },
        }
    }
}

#[derive(Clone, Copy, Default)]
struct StepStats {
    flops: u64,
    bytes: u64,
    rows: u64,
}

enum Ctrl {
    Proceed,
    Abort,
}

struct StepDone {
    thread: usize,
    step: usize,
    result: Result<StepStats, String>,
}

/// Pack one batch per remote partition with a nonempty send list, per source
/// feature. `src_values[i]` holds partition `part`'s owned vertex rows for
/// the step's i-th source input. Local edges never generate batches.
pub fn scatter(
    pg: &PartitionedGraph,
    part: usize,
    src_values: &[&Matrix],
) -> Vec<MessageBatch> {
    let (lo, _) = pg.range(part);
    let mut batches = Vec::new();
    for to_part in 0..pg.num_parts() {
        if to_part == part {
            continue;
        }
        let send_list = pg.send_list(part, to_part);
        if send_list.is_empty() {
            continue;
        }
        for (slot, values) in src_values.iter().enumerate() {
            let local_rows: Vec<usize> = send_list.iter().map(|&v| v - lo).collect();
            batches.push(MessageBatch {
                from_part: part,
                to_part,
                feature_slot: slot,
                row_ids: send_list.to_vec(),
                payload: values.gather_rows(&local_rows),
            });
        }
    }
    batches
}

/// Boundary rows received by one partition for one step, indexed by
/// (source-feature slot, owning partition).
#[derive(Default)]
pub struct GhostTable {
    batches: HashMap<(usize, usize), MessageBatch>,
}

impl GhostTable {
    pub fn insert(&mut self, batch: MessageBatch) {
        self.batches
            .insert((batch.feature_slot, batch.from_part), batch);
    }

    /// Row of boundary vertex `vid` (owned by `from_part`) for source slot
    /// `slot`.
    pub fn row(&self, slot: usize, from_part: usize, vid: usize) -> &[f32] {
        let batch = self
            .batches
            .get(&(slot, from_part))
            .expect("boundary batch present: send lists are static");
        let idx = batch
            .row_ids
            .binary_search(&vid)
            .expect("vid in send list");
        batch.payload.row(idx)
    }
}

/// Assemble dense per-edge inputs for partition `part` (local CSC order),
/// run the compiled edge module once over all local edges, and fold per
/// destination. Returns the owned output rows: per-edge values for
/// [`Aggregator::None`], per-vertex rows otherwise.
#[allow(clippy::too_many_arguments)]
pub fn apply_gather(
    pg: &PartitionedGraph,
    part: usize,
    program: &FusedProgram,
    src_locals: &[&Matrix],
    ghosts: &GhostTable,
    dst_locals: &[&Matrix],
    edge_locals: &[&Matrix],
    aggregator: Aggregator,
) -> Result<Matrix, String> {
    let local = pg.local_csc(part);
    let (lo, hi) = pg.range(part);
    let edge_count = local.num_edges();

    // Destination local index per CSC slot (nondecreasing by construction).
    let mut dst_of_slot = Vec::with_capacity(edge_count);
    for v_local in 0..(hi - lo) {
        for _ in local.offsets[v_local]..local.offsets[v_local + 1] {
            dst_of_slot.push(v_local);
        }
    }

    let mut inputs: Vec<Matrix> = Vec::new();
    for (slot, values) in src_locals.iter().enumerate() {
        let mut gathered = Matrix::zeros(edge_count, values.cols());
        for (i, &src) in local.sources.iter().enumerate() {
            let owner = pg.owner(src);
            let row = if owner == part {
                values.row(src - lo)
            } else {
                ghosts.row(slot, owner, src)
            };
            gathered.row_mut(i).copy_from_slice(row);
        }
        inputs.push(gathered);
    }
    for values in dst_locals {
        let mut gathered = Matrix::zeros(edge_count, values.cols());
        for (i, &v_local) in dst_of_slot.iter().enumerate() {
            gathered.row_mut(i).copy_from_slice(values.row(v_local));
        }
        inputs.push(gathered);
    }
    for values in edge_locals {
        inputs.push((*values).clone());
    }

    let refs: Vec<&Matrix> = inputs.iter().collect();
    let per_edge = program
        .run(&refs)
        .map_err(|e| e.to_string())?
        .pop()
        .expect("edge modules have one output");

    match aggregator {
        Aggregator::None => Ok(per_edge),
        Aggregator::Sum | Aggregator::Mean | Aggregator::Max => {
            let op = match aggregator {
                Aggregator::Sum => Reduction::Sum,
                Aggregator::Mean => Reduction::Mean,
                _ => Reduction::Max,
            };
            kernels::segment_reduce(&per_edge, &dst_of_slot, hi - lo, op)
                .map_err(|e| e.to_string())
        }
    }
}

/// Execute a validated plan over a partitioned graph with one worker per
/// partition (threads capped by [`ExecOptions::max_threads`]). Returns the
/// final store (inputs plus every marked plan output) and the per-step
/// report. Results are independent of the partition count and thread cap,
/// bit for bit.
pub fn execute(
    plan: &Plan,
    pg: &PartitionedGraph,
    store: &FeatureStore,
    opts: &ExecOptions,
) -> Result<(FeatureStore, ExecutionReport), ExecError> {
    if let Err(issues) = plan.validate_dims(pg.num_vertices(), pg.num_edges(), store) {
        let first = issues[0].to_string();
        return Err(ExecError::Invalid { issues, first });
    }
    let compiled = compile_plan(plan)?;
    let resolved = plan.resolved_cols(store);
    let parts = pg.num_parts();
    let threads = opts.max_threads.unwrap_or(parts).clamp(1, parts);

    // Contiguous partition blocks per thread, sizes differing by at most 1.
    let base = parts / threads;
    let extra = parts % threads;
    let mut blocks = Vec::with_capacity(threads);
    let mut next_part = 0usize;
    for t in 0..threads {
        let size = base + usize::from(t < extra);
        blocks.push(next_part..next_part + size);
        next_part += size;
    }
    let output_refs: Vec<(usize, Scope, String)> = plan
        .outputs()
        .iter()
        .map(|(r, name)| (r.index(), plan.ref_scope(*r), name.clone()))
        .collect();

    let mut data_txs: Vec<Sender<Envelope>> = Vec::with_capacity(threads);
    let mut data_rxs: Vec<Option<Receiver<Envelope>>> = Vec::with_capacity(threads);
    let mut ctrl_txs: Vec<Sender<Ctrl>> = Vec::with_capacity(threads);
    let mut ctrl_rxs: Vec<Option<Receiver<Ctrl>>> = Vec::with_capacity(threads);
    for _ in 0..threads {
        let (dtx, drx) = channel();
        data_txs.push(dtx);
        data_rxs.push(Some(drx));
        let (ctx, crx) = channel();
        ctrl_txs.push(ctx);
        ctrl_rxs.push(Some(crx));
    }
    let (done_tx, done_rx) = channel::<StepDone>();

    let result = std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(threads);
        for t in 0..threads {
            let block = blocks[t].clone();
            let data_rx = data_rxs[t].take().expect("taken once");
            let ctrl_rx = ctrl_rxs[t].take().expect("taken once");
            let data_txs = data_txs.clone();
            let done_tx = done_tx.clone();
            let compiled = &compiled;
            let resolved = &resolved;
            let output_refs = &output_refs;
            let blocks_ref = &blocks;
            handles.push(scope.spawn(move || {
                let thread_of = |p: usize| {
                    blocks_ref
                        .iter()
                        .position(|b| b.contains(&p))
                        .expect("covered")
                };
                worker(
                    t,
                    block,
                    plan,
                    compiled,
                    resolved,
                    pg,
                    store,
                    data_rx,
                    &data_txs,
                    ctrl_rx,
                    &done_tx,
                    &thread_of,
                    output_refs,
                )
            }));
        }
        drop(done_tx);

        // Barrier loop: collect one completion per worker per step.
        let mut report = ExecutionReport::default();
        let mut failure: Option<ExecError> = None;
        'steps: for (s, step) in plan.steps().iter().enumerate() {
            let started = Instant::now();
            let mut stats = StepStats::default();
            for _ in 0..threads {
                match done_rx.recv() {
                    Ok(done) => {
                        debug_assert_eq!(done.step, s);
                        match done.result {
                            Ok(part_stats) => {
                                stats.flops += part_stats.flops;
                                stats.bytes += part_stats.bytes;
                                stats.rows += part_stats.rows;
                            }
                            Err(message) => {
                                failure = Some(ExecError::Worker {
                                    step: s,
                                    thread: done.thread,
                                    message,
                                });
                                break 'steps;
                            }
                        }
                    }
                    Err(_) => {
                        failure = Some(ExecError::Disconnected { step: s });
                        break 'steps;
                    }
                }
            }
            report.push(
                step_name(s, step.kind_name()),
                StepMetrics {
                    time_ms: started.elapsed().as_secs_f64() * 1e3,
                    flops: stats.flops,
                    bytes_shipped: stats.bytes,
                    rows: stats.rows,
                },
            );
            let go_on = failure.is_none() && s + 1 < plan.steps().len();
            for tx in &ctrl_txs {
                let _ = tx.send(if failure.is_none() {
                    Ctrl::Proceed
                } else {
                    Ctrl::Abort
                });
            }
            if !go_on && failure.is_none() {
                break;
            }
            if failure.is_some() {
                break;
            }
        }
        if let Some(err) = failure {
            // Unblock workers stuck receiving boundary batches, then the
            // barrier itself.
            for tx in &data_txs {
                let _ = tx.send(Envelope::abort_sentinel());
            }
            for tx in &ctrl_txs {
                let _ = tx.send(Ctrl::Abort);
            }
            for handle in handles {
                let _ = handle.join();
            }
            return Err(err);
        }

        // Collect owned output rows and assemble global matrices.
        let mut collected: Vec<(usize, Vec<(usize, Matrix)>)> = Vec::new();
        for handle in handles {
            match handle.join() {
                Ok(Ok(parts_out)) => collected.extend(parts_out),
                Ok(Err(message)) => {
                    return Err(ExecError::Worker {
                        step: plan.steps().len().saturating_sub(1),
                        thread: 0,
                        message,
                    })
                }
                Err(_) => {
                    return Err(ExecError::Disconnected {
                        step: plan.steps().len().saturating_sub(1),
                    })
                }
            }
        }
        Ok((report, collected))
    });

    let (report, collected) = result?;
    let mut by_part: HashMap<usize, Vec<(usize, Matrix)>> = HashMap::new();
    for (part, outs) in collected {
        by_part.insert(part, outs);
    }

    let mut final_store = store.clone();
    for (ref_id, scope, name) in &output_refs {
        let cols = resolved[*ref_id].expect("validated outputs have widths");
        let mut global = match scope {
            Scope::Vertex => Matrix::zeros(pg.num_vertices(), cols),
            Scope::Edge => Matrix::zeros(pg.num_edges(), cols),
        };
        for part in 0..parts {
            let outs = by_part.get(&part).expect("every partition reports");
            let local = &outs
                .iter()
                .find(|(id, _)| id == ref_id)
                .expect("output collected")
                .1;
            match scope {
                Scope::Vertex => {
                    let (lo, _) = pg.range(part);
                    for r in 0..local.rows() {
                        global.row_mut(lo + r).copy_from_slice(local.row(r));
                    }
                }
                Scope::Edge => {
                    for (slot, &edge_id) in pg.local_csc(part).edge_ids.iter().enumerate() {
                        global.row_mut(edge_id).copy_from_slice(local.row(slot));
                    }
                }
            }
        }
        final_store
            .attach(*scope, name, global)
            .expect("collisions rejected by validate");
    }
    Ok((final_store, report))
}

/// Load a store-bound feature's rows for one partition on first use.
fn ensure_loaded(
    state: &mut PartState,
    plan: &Plan,
    pg: &PartitionedGraph,
    store: &FeatureStore,
    part: usize,
    ref_id: usize,
) -> Result<(), String> {
    let r = plan.nth_ref(ref_id);
    let scope = plan.ref_scope(r);
    let map_has = match scope {
        Scope::Vertex => state.vertex.contains_key(&ref_id),
        Scope::Edge => state.edge.contains_key(&ref_id),
    };
    if map_has {
        return Ok(());
    }
    let Binding::Store { scope: s, name } = plan.ref_binding(r) else {
        return Err(format!(
            "internal: ref {ref_id} consumed before being produced"
        ));
    };
    let full = store.get(*s, name).map_err(|e| e.to_string())?;
    let local = match scope {
        Scope::Vertex => {
            let (lo, hi) = pg.range(part);
            full.slice_rows(lo, hi)
        }
        Scope::Edge => full.gather_rows(&pg.local_csc(part).edge_ids),
    };
    match scope {
        Scope::Vertex => state.vertex.insert(ref_id, local),
        Scope::Edge => state.edge.insert(ref_id, local),
    };
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn worker(
    thread: usize,
    block: std::ops::Range<usize>,
    plan: &Plan,
    compiled: &[CompiledStep],
    resolved: &[Option<usize>],
    pg: &PartitionedGraph,
    store: &FeatureStore,
    data_rx: Receiver<Envelope>,
    data_txs: &[Sender<Envelope>],
    ctrl_rx: Receiver<Ctrl>,
    done_tx: &Sender<StepDone>,
    thread_of: &dyn Fn(usize) -> usize,
    output_refs: &[(usize, Scope, String)],
) -> Result<Vec<(usize, Vec<(usize, Matrix)>)>, String> {
    let mut states: HashMap<usize, PartState> = block
        .clone()
        .map(|p| (p, PartState::default()))
        .collect();

    let num_steps = compiled.len();
    for (s, step) in compiled.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(|| {
            run_step(
                s, step, &block, plan, resolved, pg, store, &mut states, &data_rx, data_txs,
                thread_of,
            )
        }))
        .unwrap_or_else(|panic| {
            Err(format!(
                "worker panicked: {}",
                panic_message(panic.as_ref())
            ))
        });
        let failed = result.is_err();
        let _ = done_tx.send(StepDone {
            thread,
            step: s,
            result,
        });
        if failed {
            // Wait for the abort so the coordinator drains cleanly.
            let _ = ctrl_rx.recv();
            return Err("aborted".into());
        }
        if s + 1 < num_steps {
            match ctrl_rx.recv() {
                Ok(Ctrl::Proceed) => {}
                Ok(Ctrl::Abort) | Err(_) => return Err("aborted".into()),
            }
        }
    }

    // Final collection: owned rows of every marked output.
    let mut out = Vec::new();
    for part in block {
        let mut per_part = Vec::new();
        for (ref_id, scope, _) in output_refs {
            let state = states.get_mut(&part).expect("own block");
            ensure_loaded(state, plan, pg, store, part, *ref_id)?;
            let state = states.get(&part).expect("own block");
            let value = match scope {
                Scope::Vertex => state.vertex.get(ref_id),
                Scope::Edge => state.edge.get(ref_id),
            }
            .expect("loaded or produced")
            .clone();
            per_part.push((*ref_id, value));
        }
        out.push((part, per_part));
    }
    Ok(out)
}

fn panic_message(panic: &(dyn std::any::Any + Send)) -> String {
    if let Some(s) = panic.downcast_ref::<&str>() {
        (*s).to_string()
    } else if let Some(s) = panic.downcast_ref::<String>() {
        s.clone()
    } else {
        "unknown panic".into()
    }
}

#[allow(clippy::too_many_arguments)]
fn run_step(
    s: usize,
    step: &CompiledStep,
    block: &std::ops::Range<usize>,
    plan: &Plan,
    resolved: &[Option<usize>],
    pg: &PartitionedGraph,
    store: &FeatureStore,
    states: &mut HashMap<usize, PartState>,
    data_rx: &Receiver<Envelope>,
    data_txs: &[Sender<Envelope>],
    thread_of: &dyn Fn(usize) -> usize,
) -> Result<StepStats, String> {
    let mut stats = StepStats::default();
    match step {
        CompiledStep::Transform {
            scope,
            program,
            inputs,
            outputs,
        } => {
            for part in block.clone() {
                let state = states.get_mut(&part).expect("own block");
                for &r in inputs {
                    ensure_loaded(state, plan, pg, store, part, r)?;
                }
                let map = match scope {
                    Scope::Vertex => &state.vertex,
                    Scope::Edge => &state.edge,
                };
                let input_mats: Vec<&Matrix> =
                    inputs.iter().map(|r| &map[r]).collect();
                let rows = input_mats.first().map_or(0, |m| m.rows());
                let outs = program.run(&input_mats).map_err(|e| e.to_string())?;
                let state = states.get_mut(&part).expect("own block");
                let map = match scope {
                    Scope::Vertex => &mut state.vertex,
                    Scope::Edge => &mut state.edge,
                };
                for (&r, value) in outputs.iter().zip(outs) {
                    map.insert(r, value);
                }
                stats.rows += rows as u64;
                stats.flops +=
                    flops::step_flops_resolved(plan, s, part_n(pg, part), local_m(pg, part), resolved)
                        .map_err(|e| e.to_string())?;
            }
        }
        CompiledStep::MessagePassing {
            src,
            dst,
            edge,
            program,
            aggregator,
            output,
        } => {
            // Phase 1: scatter from every owned partition.
            for part in block.clone() {
                let state = states.get_mut(&part).expect("own block");
                for &r in src.iter().chain(dst).chain(edge) {
                    ensure_loaded(state, plan, pg, store, part, r)?;
                }
                let state = states.get(&part).expect("own block");
                let src_mats: Vec<&Matrix> = src.iter().map(|r| &state.vertex[r]).collect();
                for batch in scatter(pg, part, &src_mats) {
                    stats.bytes += batch.payload_bytes();
                    let target = thread_of(batch.to_part);
                    data_txs[target]
                        .send(Envelope { step: s, batch })
                        .map_err(|_| "send to remote worker failed".to_string())?;
                }
            }

            // Phase 2: receive exactly the expected batches for the block.
            let mut expected = 0usize;
            for part in block.clone() {
                for from in 0..pg.num_parts() {
                    if from != part && !pg.send_list(from, part).is_empty() {
                        expected += src.len();
                    }
                }
            }
            let mut ghosts: HashMap<usize, GhostTable> = HashMap::new();
            for _ in 0..expected {
                let envelope = data_rx
                    .recv()
                    .map_err(|_| "scatter channel disconnected".to_string())?;
                if envelope.step == usize::MAX {
                    return Err("aborted".into());
                }
                debug_assert_eq!(envelope.step, s, "barrier keeps steps aligned");
                ghosts
                    .entry(envelope.batch.to_part)
                    .or_default()
                    .insert(envelope.batch);
            }

            // Phase 3: apply + gather per owned partition.
            let empty = GhostTable::default();
            for part in block.clone() {
                let state = states.get(&part).expect("own block");
                let src_mats: Vec<&Matrix> = src.iter().map(|r| &state.vertex[r]).collect();
                let dst_mats: Vec<&Matrix> = dst.iter().map(|r| &state.vertex[r]).collect();
                let edge_mats: Vec<&Matrix> = edge.iter().map(|r| &state.edge[r]).collect();
                let ghost = ghosts.get(&part).unwrap_or(&empty);
                let result = apply_gather(
                    pg, part, program, &src_mats, ghost, &dst_mats, &edge_mats, *aggregator,
                )?;
                let rows = pg.local_csc(part).num_edges() as u64;
                let state = states.get_mut(&part).expect("own block");
                match aggregator {
                    Aggregator::None => state.edge.insert(*output, result),
                    _ => state.vertex.insert(*output, result),
                };
                stats.rows += rows;
                stats.flops +=
                    flops::step_flops_resolved(plan, s, part_n(pg, part), local_m(pg, part), resolved)
                        .map_err(|e| e.to_string())?;
            }
        }
        CompiledStep::EdgeSoftmax { input, output } => {
            for part in block.clone() {
                let state = states.get_mut(&part).expect("own block");
                ensure_loaded(state, plan, pg, store, part, *input)?;
                let logits = &state.edge[input];
                let weights =
                    kernels::segment_softmax(logits, &pg.local_csc(part).offsets);
                let rows = weights.rows() as u64;
                state.edge.insert(*output, weights);
                stats.rows += rows;
                stats.flops +=
                    flops::step_flops_resolved(plan, s, part_n(pg, part), local_m(pg, part), resolved)
                        .map_err(|e| e.to_string())?;
            }
        }
    }
    Ok(stats)
}

fn part_n(pg: &PartitionedGraph, part: usize) -> usize {
    pg.part_size(part)
}

fn local_m(pg: &PartitionedGraph, part: usize) -> usize {
    pg.local_csc(part).num_edges()
}
