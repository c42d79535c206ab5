//! Naive per-node reference oracles for GAT and GCN.
//!
//! Deliberately share nothing with the dense kernels or the plan machinery:
//! every projection, score, softmax, and weighted sum is a scalar loop over
//! an explicit edge list. The engine is tested against these, and the
//! sampling baseline runs them directly on induced subgraphs.

use alloc::vec;
use alloc::vec::Vec;

use crate::kernels::exp_f32; // scalar exp only; no matrix kernels here
use crate::matrix::Matrix;
use crate::zoo::{GatConfig, GcnConfig};

/// Forward a full GAT stack over an explicit edge list. No self-loop
/// handling happens here; `edges` is taken literally.
pub fn gat_forward_edges(
    num_vertices: usize,
    edges: &[(usize, usize)],
    cfg: &GatConfig,
    x: &Matrix,
) -> Matrix {
    // In-edge buckets in ascending edge order.
    let mut in_lists: Vec<Vec<usize>> = vec![Vec::new(); num_vertices];
    for (e, &(_, dst)) in edges.iter().enumerate() {
        in_lists[dst].push(e);
    }

    let heads = cfg.heads;
    let f = cfg.f_out;
    let mut current = x.clone();
    for layer in &cfg.layers {
        let w_in = current.cols();
        let width = heads * f;

        // x' = x W
        let mut xp = Matrix::zeros(num_vertices, width);
        for v in 0..num_vertices {
            for j in 0..width {
                let mut acc = 0.0f32;
                for t in 0..w_in {
                    acc += current.get(v, t) * layer.weight.get(t, j);
                }
                xp.set(v, j, acc);
            }
        }

        // Per-head scores.
        let mut alpha_src = Matrix::zeros(num_vertices, heads);
        let mut alpha_dst = Matrix::zeros(num_vertices, heads);
        for v in 0..num_vertices {
            for h in 0..heads {
                let mut s = 0.0f32;
                let mut d = 0.0f32;
                for j in 0..f {
                    s += xp.get(v, h * f + j) * layer.att_src.get(0, h * f + j);
                    d += xp.get(v, h * f + j) * layer.att_dst.get(0, h * f + j);
                }
                alpha_src.set(v, h, s);
                alpha_dst.set(v, h, d);
            }
        }

        // Per-destination attention and weighted sums.
        let mut out = Matrix::zeros(num_vertices, width);
        for v in 0..num_vertices {
            let in_edges = &in_lists[v];
            if in_edges.is_empty() {
                continue;
            }
            for h in 0..heads {
                let mut logits = Vec::with_capacity(in_edges.len());
                for &e in in_edges {
                    let u = edges[e].0;
                    let raw = alpha_dst.get(v, h) + alpha_src.get(u, h);
                    logits.push(if raw < 0.0 { cfg.leaky_slope * raw } else { raw });
                }
                let mut max = logits[0];
                for &l in &logits[1..] {
                    if l > max {
                        max = l;
                    }
                }
                let mut total = 0.0f32;
                let mut weights = Vec::with_capacity(logits.len());
                for &l in &logits {
                    let w = exp_f32(l - max);
                    weights.push(w);
                    total += w;
                }
                for (&e, w) in in_edges.iter().zip(weights) {
                    let u = edges[e].0;
                    let norm = w / total;
                    for j in 0..f {
                        let val = out.get(v, h * f + j) + norm * xp.get(u, h * f + j);
                        out.set(v, h * f + j, val);
                    }
                }
            }
        }
        current = out;
    }
    current
}

/// Forward a full GCN stack over an explicit edge list:
/// `h_v = c_v * sum_{u->v} c_u x'_u + c_v^2 x'_v`.
///
/// The normalization vector is explicit because it is global information:
/// on a sampled subgraph the correct `c` values still come from full-graph
/// in-degrees (production systems precompute them), so callers gather them
/// alongside the features.
pub fn gcn_forward_edges(
    num_vertices: usize,
    edges: &[(usize, usize)],
    cfg: &GcnConfig,
    x: &Matrix,
    c: &[f32],
) -> Matrix {
    assert_eq!(c.len(), num_vertices, "one norm entry per vertex");
    let f = cfg.f_out;
    let mut current = x.clone();
    for layer in &cfg.layers {
        let w_in = current.cols();
        let mut xp = Matrix::zeros(num_vertices, f);
        for v in 0..num_vertices {
            for j in 0..f {
                let mut acc = 0.0f32;
                for t in 0..w_in {
                    acc += current.get(v, t) * layer.weight.get(t, j);
                }
                xp.set(v, j, acc);
            }
        }
        let mut out = Matrix::zeros(num_vertices, f);
        for &(u, v) in edges {
            for j in 0..f {
                let val = out.get(v, j) + c[u] * xp.get(u, j);
                out.set(v, j, val);
            }
        }
        for v in 0..num_vertices {
            for j in 0..f {
                let val = c[v] * out.get(v, j) + c[v] * c[v] * xp.get(v, j);
                out.set(v, j, val);
            }
        }
        current = out;
    }
    current
}

/// GAT oracle on a graph. Adds the missing self-loops itself when the config
/// asks for them, so it can be fed the raw (unprepared) graph.
pub fn reference_gat(g: &crate::graph::Graph, cfg: &GatConfig, x: &Matrix) -> Matrix {
    let mut edges = g.edge_list();
    if cfg.add_self_loops {
        for v in 0..g.num_vertices() {
            if !g.has_self_loop(v) {
                edges.push((v, v));
            }
        }
    }
    gat_forward_edges(g.num_vertices(), &edges, cfg, x)
}

/// GCN oracle on a graph (the implicit self-loop is analytic, the graph is
/// taken as-is). Computes its own in-degree normalization by scanning the
/// edge list.
pub fn reference_gcn(g: &crate::graph::Graph, cfg: &GcnConfig, x: &Matrix) -> Matrix {
    let edges = g.edge_list();
    let c = gcn_norm_from_edges(g.num_vertices(), &edges);
    gcn_forward_edges(g.num_vertices(), &edges, cfg, x, &c)
}

/// `c_v = 1 / sqrt(in_degree(v) + 1)` by direct edge scan.
pub fn gcn_norm_from_edges(num_vertices: usize, edges: &[(usize, usize)]) -> Vec<f32> {
    let mut indeg = vec![0usize; num_vertices];
    for &(_, dst) in edges {
        indeg[dst] += 1;
    }
    indeg
        .iter()
        .map(|&d| 1.0 / libm::sqrtf(d as f32 + 1.0))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::{FeatureStore, Scope};
    use crate::graph::Graph;
    use crate::interp::interpret_plan;
    use crate::rng::Lcg64;
    use crate::zoo::{GatLayer, GcnLayer, ModelConfig, INPUT_FEATURE, OUTPUT_FEATURE};

    #[test]
    fn gat_on_empty_graph_with_self_loops_is_projection() {
        // Only the self-loop attends, so softmax is trivial and h = x'.
        let g = Graph::build(&[], 3).unwrap();
        let cfg = GatConfig::seeded(2, 2, 1, 1, 3);
        let mut rng = Lcg64::new(8);
        let data: Vec<f32> = (0..6).map(|_| rng.symmetric_f32(1.0)).collect();
        let x = Matrix::from_vec(3, 2, data).unwrap();
        let h = reference_gat(&g, &cfg, &x);

        let mut expected = Matrix::zeros(3, 2);
        for v in 0..3 {
            for j in 0..2 {
                let mut acc = 0.0;
                for t in 0..2 {
                    acc += x.get(v, t) * cfg.layers[0].weight.get(t, j);
                }
                expected.set(v, j, acc);
            }
        }
        assert!(h.approx_eq(&expected, 1e-6));
    }

    #[test]
    fn gcn_single_edge_hand_formula() {
        // h1 = c1*c0*x'0 + c1^2*x'1 with c0 = 1, c1 = 1/sqrt(2).
        let g = Graph::build(&[(0, 1)], 2).unwrap();
        let cfg = GcnConfig {
            f_in: 1,
            f_out: 1,
            layers: vec![GcnLayer {
                weight: Matrix::from_rows(&[&[2.0]]),
            }],
        };
        let x = Matrix::from_rows(&[&[3.0], &[5.0]]);
        let h = reference_gcn(&g, &cfg, &x);
        let c1 = 1.0 / 2.0f32.sqrt();
        let expected1 = c1 * 1.0 * 6.0 + c1 * c1 * 10.0;
        assert!((h.get(1, 0) - expected1).abs() <= 1e-5);
        assert!((h.get(0, 0) - 6.0).abs() <= 1e-5); // isolated source keeps x'
    }

    #[test]
    fn gat_hand_example_matches_plan_interpreter() {
        let mut cfg = GatConfig::seeded(2, 2, 1, 1, 0);
        cfg.layers[0] = GatLayer {
            weight: Matrix::identity(2),
            att_src: Matrix::row_vector(&[1.0, 0.0]),
            att_dst: Matrix::row_vector(&[0.0, 1.0]),
        };
        let raw = Graph::build(&[(0, 1)], 2).unwrap();
        let h = reference_gat(&raw, &cfg, &Matrix::identity(2));
        let expected = Matrix::from_rows(&[&[1.0, 0.0], &[0.731_058_6, 0.268_941_4]]);
        assert!(h.approx_eq(&expected, 1e-5), "got {h}");
    }

    #[test]
    fn oracles_agree_with_plan_interpreter_on_random_graphs() {
        let mut rng = Lcg64::new(2024);
        for trial in 0..8 {
            let n = rng.below(50) + 2;
            let m = rng.below(n * 6);
            let edges: Vec<(usize, usize)> =
                (0..m).map(|_| (rng.below(n), rng.below(n))).collect();
            let raw = Graph::build(&edges, n).unwrap();
            let f_in = rng.below(5) + 1;
            let data: Vec<f32> = (0..n * f_in).map(|_| rng.symmetric_f32(1.0)).collect();
            let x = Matrix::from_vec(n, f_in, data).unwrap();

            let layers = 1 + trial % 2;
            let gat = GatConfig::seeded(f_in, 3, 2, layers, 55 + trial as u64);
            let model = ModelConfig::Gat(gat.clone());
            let prepared = model.prepare_graph(&raw);
            let mut store = FeatureStore::for_graph(&prepared);
            store.attach(Scope::Vertex, INPUT_FEATURE, x.clone()).unwrap();
            let plan = model.build_plan().unwrap();
            let result = interpret_plan(&plan, &prepared, &store).unwrap();
            let engine_h = result.get(Scope::Vertex, OUTPUT_FEATURE).unwrap();
            let oracle_h = reference_gat(&raw, &gat, &x);
            assert!(
                engine_h.approx_eq(&oracle_h, 1e-5),
                "GAT mismatch on trial {trial}: {} vs {}",
                engine_h.max_abs_diff(&oracle_h),
                trial
            );

            let gcn = GcnConfig::seeded(f_in, 4, layers, 77 + trial as u64);
            let model = ModelConfig::Gcn(gcn.clone());
            let mut store = FeatureStore::for_graph(&raw);
            store.attach(Scope::Vertex, INPUT_FEATURE, x.clone()).unwrap();
            model.attach_aux_features(&raw, &mut store).unwrap();
            let plan = model.build_plan().unwrap();
            let result = interpret_plan(&plan, &raw, &store).unwrap();
            let engine_h = result.get(Scope::Vertex, OUTPUT_FEATURE).unwrap();
            let oracle_h = reference_gcn(&raw, &gcn, &x);
            assert!(
                engine_h.approx_eq(&oracle_h, 1e-5),
                "GCN mismatch on trial {trial}"
            );
        }
    }
}
