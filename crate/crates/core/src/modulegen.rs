//! Seeded random module generator for differential testing.
//!
//! Draws arbitrary well-shaped modules over the full op set so the fusion
//! compiler can be fuzzed against the interpreter. Kept in the library
//! (rather than a test file) because both the crate's own property tests and
//! the engine's acceptance suite drive it.

use alloc::format;
use alloc::vec::Vec;

use crate::ir::{ModuleGraph, NodeId};
use crate::matrix::Matrix;
use crate::rng::Lcg64;

/// A generated module plus the facts tests branch on.
pub struct GeneratedModule {
    pub module: ModuleGraph,
    /// True if any op accumulates (grouped sums or matmuls); reduction-free
    /// modules must match the interpreter bitwise.
    pub has_reduction: bool,
}

struct PoolEntry {
    id: NodeId,
    cols: usize,
    reaches_input: bool,
}

/// Generate a random valid module: 1-3 inputs of random width, 1-10 ops,
/// 1-2 outputs.
pub fn random_module(rng: &mut Lcg64) -> GeneratedModule {
    let num_inputs = 1 + rng.below(3);
    let widths: Vec<usize> = (0..num_inputs).map(|_| 1 + rng.below(6)).collect();
    random_module_shaped(rng, &widths, None)
}

/// Generate a random valid module with fixed input widths and, optionally,
/// an exact output count (message-passing modules need exactly one).
pub fn random_module_shaped(
    rng: &mut Lcg64,
    input_widths: &[usize],
    exact_outputs: Option<usize>,
) -> GeneratedModule {
    let mut m = ModuleGraph::new();
    let mut pool: Vec<PoolEntry> = Vec::new();
    for (i, &cols) in input_widths.iter().enumerate() {
        let id = m.input(&format!("in{i}"), cols);
        pool.push(PoolEntry {
            id,
            cols,
            reaches_input: true,
        });
    }

    let mut params = 0usize;
    let mut fresh_param = |m: &mut ModuleGraph, rng: &mut Lcg64, rows: usize, cols: usize| {
        let name = format!("p{params}");
        params += 1;
        let data = (0..rows * cols).map(|_| rng.symmetric_f32(1.0)).collect();
        m.add_param(&name, Matrix::from_vec(rows, cols, data).expect("sized"));
        name
    };

    let mut has_reduction = false;
    let ops = 1 + rng.below(10);
    for _ in 0..ops {
        let pick = rng.below(pool.len());
        let (a_id, a_cols, a_reaches) =
            (pool[pick].id, pool[pick].cols, pool[pick].reaches_input);
        match rng.below(8) {
            kind @ (0 | 1) => {
                // Binary elementwise: find a same-width partner or broadcast
                // a fresh parameter row.
                let partners: Vec<usize> = pool
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.cols == a_cols)
                    .map(|(i, _)| i)
                    .collect();
                let (b_id, b_reaches) = if !partners.is_empty() && rng.below(4) != 0 {
                    let p = partners[rng.below(partners.len())];
                    (pool[p].id, pool[p].reaches_input)
                } else {
                    let name = fresh_param(&mut m, rng, 1, a_cols);
                    (m.param_row(&name), false)
                };
                let id = if kind == 0 {
                    m.elem_add(a_id, b_id)
                } else {
                    m.elem_mul(a_id, b_id)
                };
                pool.push(PoolEntry {
                    id,
                    cols: a_cols,
                    reaches_input: a_reaches || b_reaches,
                });
            }
            2 => {
                let slope = rng.symmetric_f32(1.0);
                let id = m.leaky_relu(a_id, slope);
                pool.push(PoolEntry {
                    id,
                    cols: a_cols,
                    reaches_input: a_reaches,
                });
            }
            3 => {
                let id = m.exp(a_id);
                pool.push(PoolEntry {
                    id,
                    cols: a_cols,
                    reaches_input: a_reaches,
                });
            }
            4 => {
                let id = m.identity(a_id);
                pool.push(PoolEntry {
                    id,
                    cols: a_cols,
                    reaches_input: a_reaches,
                });
            }
            5 => {
                let out_cols = 1 + rng.below(6);
                let name = fresh_param(&mut m, rng, a_cols, out_cols);
                let id = m.matmul_param(a_id, &name);
                has_reduction = true;
                pool.push(PoolEntry {
                    id,
                    cols: out_cols,
                    reaches_input: a_reaches,
                });
            }
            6 => {
                let divisors: Vec<usize> = (1..=a_cols).filter(|d| a_cols % d == 0).collect();
                let groups = divisors[rng.below(divisors.len())];
                let id = m.reduce_sum_groups(a_id, groups);
                has_reduction = true;
                pool.push(PoolEntry {
                    id,
                    cols: groups,
                    reaches_input: a_reaches,
                });
            }
            _ => {
                // Row scaling by any pool entry whose width divides ours,
                // falling back to a single-column parameter row.
                let factors: Vec<usize> = pool
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.cols >= 1 && a_cols % e.cols == 0)
                    .map(|(i, _)| i)
                    .collect();
                let (f_id, f_reaches) = if !factors.is_empty() && rng.below(4) != 0 {
                    let p = factors[rng.below(factors.len())];
                    (pool[p].id, pool[p].reaches_input)
                } else {
                    let name = fresh_param(&mut m, rng, 1, 1);
                    (m.param_row(&name), false)
                };
                let id = m.scale_rows(a_id, f_id);
                pool.push(PoolEntry {
                    id,
                    cols: a_cols,
                    reaches_input: a_reaches || f_reaches,
                });
            }
        }
    }

    let rooted: Vec<&PoolEntry> = pool.iter().filter(|e| e.reaches_input).collect();
    let num_outputs =
        exact_outputs.unwrap_or_else(|| 1 + rng.below(2.min(rooted.len())));
    let mut outputs = Vec::with_capacity(num_outputs);
    for _ in 0..num_outputs {
        outputs.push(rooted[rng.below(rooted.len())].id);
    }
    m.set_outputs(&outputs);

    GeneratedModule {
        module: m,
        has_reduction,
    }
}

/// Random inputs matching the module's slots, `batch` rows each.
pub fn random_inputs(rng: &mut Lcg64, module: &ModuleGraph, batch: usize) -> Vec<Matrix> {
    module
        .input_slots()
        .iter()
        .map(|slot| {
            let data = (0..batch * slot.cols)
                .map(|_| rng.symmetric_f32(2.0))
                .collect();
            Matrix::from_vec(batch, slot.cols, data).expect("sized")
        })
        .collect()
}

/// Bitwise equality, treating NaN bit patterns as values.
pub fn bitwise_eq(a: &Matrix, b: &Matrix) -> bool {
    a.shape() == b.shape()
        && a.data()
            .iter()
            .zip(b.data())
            .all(|(x, y)| x.to_bits() == y.to_bits())
}

/// `|a - b| <= tol` on finite entries, bit equality on non-finite ones.
pub fn within_abs(a: &Matrix, b: &Matrix, tol: f32) -> bool {
    if a.shape() != b.shape() {
        return false;
    }
    a.data().iter().zip(b.data()).all(|(x, y)| {
        if x.is_finite() && y.is_finite() {
            crate::kernels::abs_f32(x - y) <= tol
        } else {
            x.to_bits() == y.to_bits()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_modules_are_valid() {
        let mut rng = Lcg64::new(1234);
        for _ in 0..100 {
            let generated = random_module(&mut rng);
            generated.module.infer_shapes().expect("generator produces valid modules");
        }
    }

    #[test]
    fn generated_modules_interpret_cleanly() {
        let mut rng = Lcg64::new(4321);
        for _ in 0..50 {
            let generated = random_module(&mut rng);
            let batch = rng.below(5);
            let inputs = random_inputs(&mut rng, &generated.module, batch);
            let refs: Vec<&Matrix> = inputs.iter().collect();
            generated.module.interpret(&refs).expect("valid modules evaluate");
        }
    }
}
