//! k-hop subgraph sampling baseline with redundancy and FLOP accounting.
//!
//! Receptive fields follow message direction: a vertex's output depends on
//! its in-ancestors, so hops expand along in-edges. Hop `i` expands every
//! node of the hop `i-1` frontier and samples `min(fanout_i, in_degree)`
//! in-edges without replacement (partial Fisher-Yates on the CSC slots,
//! seeded per target with `seed ^ target`). With [`Fanout::All`] and depth
//! equal to the model's layer count the target outputs reproduce full-graph
//! inference exactly; bounded fanout loses information, overlapping
//! neighborhoods repeat work — both are the point of the baseline.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec;
use alloc::vec::Vec;

use crate::flops::{count_flops_sized, FlopsError};
use crate::graph::Graph;
use crate::matrix::Matrix;
use crate::plan::PlanBuildError;
use crate::reference::{gat_forward_edges, gcn_forward_edges, gcn_norm_from_edges};
use crate::rng::Lcg64;
use crate::zoo::ModelConfig;

/// Per-hop neighbor budget.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Fanout {
    /// Every in-neighbor.
    All,
    /// At most this many in-edges per expanded node.
    Limit(usize),
}

/// Sampling parameters. Depth is the fanout list length.
#[derive(Clone, Debug)]
pub struct SamplingConfig {
    pub fanouts: Vec<Fanout>,
    pub seed: u64,
    pub targets: Vec<usize>,
}

impl SamplingConfig {
    pub fn depth(&self) -> usize {
        self.fanouts.len()
    }
}

/// One target's sampled neighborhood.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SampledSubgraph {
    pub target: usize,
    /// Frontier per hop; entry 0 is `[target]`. Sorted, deduplicated.
    pub hop_nodes: Vec<Vec<usize>>,
    /// Union of all hop frontiers, sorted.
    pub nodes: Vec<usize>,
    /// Sampled edges `(src, dst, edge_id)`, ascending by edge id,
    /// deduplicated across hops.
    pub edges: Vec<(usize, usize, usize)>,
}

/// Sample one subgraph per target. Deterministic given the seed; targets
/// must be valid vertex ids of `g`.
pub fn khop_sample(g: &Graph, cfg: &SamplingConfig) -> Vec<SampledSubgraph> {
    cfg.targets
        .iter()
        .map(|&target| {
            assert!(
                target < g.num_vertices(),
                "target {target} out of range for {} vertices",
                g.num_vertices()
            );
            sample_one(g, target, &cfg.fanouts, cfg.seed ^ target as u64)
        })
        .collect()
}

fn sample_one(g: &Graph, target: usize, fanouts: &[Fanout], seed: u64) -> SampledSubgraph {
    let mut rng = Lcg64::new(seed);
    let mut hop_nodes = vec![vec![target]];
    let mut edge_set: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut frontier = vec![target];

    for &fanout in fanouts {
        let mut next: BTreeSet<usize> = BTreeSet::new();
        for &w in &frontier {
            let lo = g.in_offsets()[w];
            let hi = g.in_offsets()[w + 1];
            let degree = hi - lo;
            if degree == 0 {
                continue;
            }
            let keep = match fanout {
                Fanout::All => degree,
                Fanout::Limit(k) => k.min(degree),
            };
            if keep == degree {
                for slot in lo..hi {
                    let src = g.in_sources()[slot];
                    edge_set.insert(g.in_edge_ids()[slot], (src, w));
                    next.insert(src);
                }
            } else {
                // Partial Fisher-Yates over the slot indices.
                let mut slots: Vec<usize> = (lo..hi).collect();
                for i in 0..keep {
                    let j = i + rng.below(degree - i);
                    slots.swap(i, j);
                }
                let mut chosen = slots[..keep].to_vec();
                chosen.sort_unstable();
                for slot in chosen {
                    let src = g.in_sources()[slot];
                    edge_set.insert(g.in_edge_ids()[slot], (src, w));
                    next.insert(src);
                }
            }
        }
        frontier = next.into_iter().collect();
        hop_nodes.push(frontier.clone());
    }

    let mut nodes: BTreeSet<usize> = BTreeSet::new();
    for hop in &hop_nodes {
        nodes.extend(hop.iter().copied());
    }
    SampledSubgraph {
        target,
        hop_nodes,
        nodes: nodes.into_iter().collect(),
        edges: edge_set
            .into_iter()
            .map(|(id, (src, dst))| (src, dst, id))
            .collect(),
    }
}

/// Total per-subgraph node rows divided by the distinct node count: 1.0 for
/// disjoint neighborhoods, the repeat factor of the work otherwise.
pub fn redundancy_factor(subs: &[SampledSubgraph]) -> f64 {
    assert!(!subs.is_empty(), "redundancy needs at least one subgraph");
    let total: u64 = subs.iter().map(|s| s.nodes.len() as u64).sum();
    let mut union: BTreeSet<usize> = BTreeSet::new();
    for s in subs {
        union.extend(s.nodes.iter().copied());
    }
    if union.is_empty() {
        return 1.0;
    }
    total as f64 / union.len() as f64
}

/// Work counters accumulated over all subgraphs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SamplingCounters {
    /// Node rows touched per layer, summed over subgraphs.
    pub node_rows: u64,
    /// Edge-module evaluations per layer, summed over subgraphs.
    pub edge_evals: u64,
    /// Closed-form FLOPs (same model as the engine counters).
    pub flops: u64,
}

/// Error from subgraph inference.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SamplingError {
    #[error("model plan failed to build: {0}")]
    Plan(#[from] PlanBuildError),
    #[error("flop accounting failed: {0}")]
    Flops(#[from] FlopsError),
}

/// Run the per-node reference oracle on every sampled subgraph and return
/// the target output rows (one per subgraph, in input order) plus counters.
///
/// `graph` must be the prepared graph the subgraphs were sampled from
/// (self-loops included for GAT); `features` its full input feature matrix.
/// GCN normalization constants are global information, so they are gathered
/// from the full graph rather than recomputed from sampled degrees.
pub fn subgraph_infer(
    model: &ModelConfig,
    graph: &Graph,
    subs: &[SampledSubgraph],
    features: &Matrix,
) -> Result<(Matrix, SamplingCounters), SamplingError> {
    let plan = model.build_plan()?;
    let layers = model.num_layers() as u64;
    let mut out = Matrix::zeros(subs.len(), model.output_cols());
    let mut counters = SamplingCounters::default();
    let full_norm = match model {
        ModelConfig::Gcn(_) => gcn_norm_from_edges(graph.num_vertices(), &graph.edge_list()),
        ModelConfig::Gat(_) => Vec::new(),
    };

    for (i, sub) in subs.iter().enumerate() {
        let local_of = |v: usize| sub.nodes.binary_search(&v).expect("node in subgraph");
        let x_local = features.gather_rows(&sub.nodes);
        let edges_local: Vec<(usize, usize)> = sub
            .edges
            .iter()
            .map(|&(src, dst, _)| (local_of(src), local_of(dst)))
            .collect();
        let h = match model {
            ModelConfig::Gat(cfg) => {
                gat_forward_edges(sub.nodes.len(), &edges_local, cfg, &x_local)
            }
            ModelConfig::Gcn(cfg) => {
                let c_local: Vec<f32> = sub.nodes.iter().map(|&v| full_norm[v]).collect();
                gcn_forward_edges(sub.nodes.len(), &edges_local, cfg, &x_local, &c_local)
            }
        };
        out.row_mut(i).copy_from_slice(h.row(local_of(sub.target)));

        counters.node_rows += sub.nodes.len() as u64 * layers;
        counters.edge_evals += sub.edges.len() as u64 * layers;
        counters.flops += count_flops_sized(&plan, sub.nodes.len(), sub.edges.len())?;
    }
    Ok((out, counters))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature::{FeatureStore, Scope};
    use crate::interp::interpret_plan;
    use crate::zoo::{GcnConfig, INPUT_FEATURE, OUTPUT_FEATURE};

    fn all(depth: usize) -> Vec<Fanout> {
        vec![Fanout::All; depth]
    }

    #[test]
    fn triangle_one_hop_all() {
        // in(0) = {2}: sampling target 0 at depth 1 visits {0, 2}.
        let g = Graph::build(&[(0, 1), (1, 2), (2, 0)], 3).unwrap();
        let cfg = SamplingConfig {
            fanouts: all(1),
            seed: 1,
            targets: vec![0],
        };
        let subs = khop_sample(&g, &cfg);
        assert_eq!(subs[0].nodes, vec![0, 2]);
        assert_eq!(subs[0].edges, vec![(2, 0, 2)]);
    }

    #[test]
    fn depth_zero_is_the_bare_target() {
        let g = Graph::build(&[(0, 1)], 2).unwrap();
        let cfg = SamplingConfig {
            fanouts: vec![],
            seed: 1,
            targets: vec![1],
        };
        let subs = khop_sample(&g, &cfg);
        assert_eq!(subs[0].nodes, vec![1]);
        assert!(subs[0].edges.is_empty());
    }

    #[test]
    fn full_fanout_deep_sampling_reaches_all_ancestors() {
        // Random DAG-ish graph; BFS oracle over reversed edges.
        let mut rng = Lcg64::new(13);
        for _ in 0..5 {
            let n = rng.below(40) + 2;
            let m = rng.below(160);
            let edges: Vec<(usize, usize)> =
                (0..m).map(|_| (rng.below(n), rng.below(n))).collect();
            let g = Graph::build(&edges, n).unwrap();
            let target = rng.below(n);
            let cfg = SamplingConfig {
                fanouts: all(n), // depth >= any diameter
                seed: 3,
                targets: vec![target],
            };
            let subs = khop_sample(&g, &cfg);

            // BFS over in-edges.
            let mut reach = vec![false; n];
            reach[target] = true;
            let mut queue = vec![target];
            while let Some(v) = queue.pop() {
                for (src, _) in g.in_edges(v) {
                    if !reach[src] {
                        reach[src] = true;
                        queue.push(src);
                    }
                }
            }
            let expected: Vec<usize> = (0..n).filter(|&v| reach[v]).collect();
            assert_eq!(subs[0].nodes, expected);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let mut rng = Lcg64::new(5);
        let n = 60;
        let edges: Vec<(usize, usize)> =
            (0..400).map(|_| (rng.below(n), rng.below(n))).collect();
        let g = Graph::build(&edges, n).unwrap();
        let cfg = SamplingConfig {
            fanouts: vec![Fanout::Limit(3), Fanout::Limit(2)],
            seed: 99,
            targets: (0..n).collect(),
        };
        let a = khop_sample(&g, &cfg);
        let b = khop_sample(&g, &cfg);
        assert_eq!(a, b);
    }

    #[test]
    fn redundancy_hand_cases() {
        // Path 0 -> 1 -> 2: node sets {0}, {0,1}, {1,2}; factor 5/3.
        let g = Graph::build(&[(0, 1), (1, 2)], 3).unwrap();
        let cfg = SamplingConfig {
            fanouts: all(1),
            seed: 0,
            targets: vec![0, 1, 2],
        };
        let subs = khop_sample(&g, &cfg);
        assert_eq!(subs[0].nodes, vec![0]);
        assert_eq!(subs[1].nodes, vec![0, 1]);
        assert_eq!(subs[2].nodes, vec![1, 2]);
        let factor = redundancy_factor(&subs);
        assert!((factor - 5.0 / 3.0).abs() < 1e-12);

        // Disjoint neighborhoods: factor exactly 1.
        let g2 = Graph::build(&[(0, 1), (2, 3)], 4).unwrap();
        let cfg2 = SamplingConfig {
            fanouts: all(1),
            seed: 0,
            targets: vec![1, 3],
        };
        let disjoint = khop_sample(&g2, &cfg2);
        assert_eq!(redundancy_factor(&disjoint), 1.0);

        // Identical targets: factor equals the number of copies.
        let cfg3 = SamplingConfig {
            fanouts: all(1),
            seed: 0,
            targets: vec![1, 1, 1],
        };
        let same = khop_sample(&g2, &cfg3);
        assert_eq!(redundancy_factor(&same), 3.0);
    }

    #[test]
    fn bounded_fanout_respects_budget_and_degree() {
        let g = Graph::build(&[(0, 4), (1, 4), (2, 4), (3, 4)], 5).unwrap();
        let cfg = SamplingConfig {
            fanouts: vec![Fanout::Limit(2)],
            seed: 7,
            targets: vec![4],
        };
        let subs = khop_sample(&g, &cfg);
        assert_eq!(subs[0].edges.len(), 2);
        // Sources must be distinct in-neighbors (no replacement).
        let mut srcs: Vec<usize> = subs[0].edges.iter().map(|e| e.0).collect();
        srcs.dedup();
        assert_eq!(srcs.len(), 2);
    }

    #[test]
    fn depth_zero_gcn_keeps_only_the_self_term() {
        // No edges sampled: only the self term c_v^2 * x'_v survives, with
        // c_v taken from the full graph (in-degree 1 here).
        let g = Graph::build(&[(0, 1), (1, 0)], 2).unwrap();
        let gcn = GcnConfig::seeded(2, 3, 1, 21);
        let model = ModelConfig::Gcn(gcn.clone());
        let mut rng = Lcg64::new(1);
        let data: Vec<f32> = (0..4).map(|_| rng.symmetric_f32(1.0)).collect();
        let x = Matrix::from_vec(2, 2, data).unwrap();
        let cfg = SamplingConfig {
            fanouts: vec![],
            seed: 0,
            targets: vec![1],
        };
        let subs = khop_sample(&g, &cfg);
        let (out, _) = subgraph_infer(&model, &g, &subs, &x).unwrap();

        let c = 1.0f32 / 2.0f32.sqrt();
        let mut expected = [0.0f32; 3];
        for (j, e) in expected.iter_mut().enumerate() {
            for t in 0..2 {
                *e += x.get(1, t) * gcn.layers[0].weight.get(t, j);
            }
            *e *= c * c;
        }
        for (j, &e) in expected.iter().enumerate() {
            assert!((out.get(0, j) - e).abs() <= 1e-6);
        }
    }

    #[test]
    fn lossless_limit_matches_full_graph_on_small_instances() {
        let mut rng = Lcg64::new(404);
        for trial in 0..6 {
            let n = rng.below(60) + 3;
            let m = rng.below(240);
            let edges: Vec<(usize, usize)> =
                (0..m).map(|_| (rng.below(n), rng.below(n))).collect();
            let raw = Graph::build(&edges, n).unwrap();
            let layers = 1 + trial % 2;
            let f_in = 3;
            let data: Vec<f32> = (0..n * f_in).map(|_| rng.symmetric_f32(1.0)).collect();
            let x = Matrix::from_vec(n, f_in, data).unwrap();
            let model = ModelConfig::Gcn(GcnConfig::seeded(f_in, 3, layers, 500 + trial as u64));

            let prepared = model.prepare_graph(&raw);
            let mut store = FeatureStore::for_graph(&prepared);
            store.attach(Scope::Vertex, INPUT_FEATURE, x.clone()).unwrap();
            model.attach_aux_features(&prepared, &mut store).unwrap();
            let plan = model.build_plan().unwrap();
            let full = interpret_plan(&plan, &prepared, &store).unwrap();
            let full_h = full.get(Scope::Vertex, OUTPUT_FEATURE).unwrap();

            let targets: Vec<usize> = (0..n.min(5)).map(|_| rng.below(n)).collect();
            let cfg = SamplingConfig {
                fanouts: all(layers),
                seed: 9,
                targets: targets.clone(),
            };
            let subs = khop_sample(&prepared, &cfg);
            let (sampled, _) = subgraph_infer(&model, &prepared, &subs, &x).unwrap();

            for (i, &t) in targets.iter().enumerate() {
                for j in 0..sampled.cols() {
                    let diff = (sampled.get(i, j) - full_h.get(t, j)).abs();
                    assert!(
                        diff <= 1e-5_f32.max(1e-5 * full_h.get(t, j).abs()),
                        "trial {trial} target {t} col {j}: {diff}"
                    );
                }
            }
        }
    }

    #[test]
    fn all_targets_full_fanout_flops_dominate_full_graph() {
        // Star into vertex 0 plus extra edges: 1-hop neighborhoods overlap,
        // so sampling repeats work that full-graph inference does once.
        let edges = vec![(1, 0), (2, 0), (3, 0), (0, 1), (0, 2), (0, 3)];
        let g = Graph::build(&edges, 4).unwrap();
        let model = ModelConfig::Gcn(GcnConfig::seeded(2, 2, 1, 3));
        let x = Matrix::zeros(4, 2);
        let cfg = SamplingConfig {
            fanouts: all(1),
            seed: 0,
            targets: (0..4).collect(),
        };
        let subs = khop_sample(&g, &cfg);
        let (_, counters) = subgraph_infer(&model, &g, &subs, &x).unwrap();
        let plan = model.build_plan().unwrap();
        let full = crate::flops::count_flops(&plan, &g).unwrap();
        assert!(
            counters.flops > full,
            "sampling {} vs full {full}",
            counters.flops
        );

        // Honest negative control: a single target with a tiny neighborhood
        // costs less than inferring the whole graph.
        let cfg_single = SamplingConfig {
            fanouts: all(1),
            seed: 0,
            targets: vec![1],
        };
        let single = khop_sample(&g, &cfg_single);
        let (_, single_counters) = subgraph_infer(&model, &g, &single, &x).unwrap();
        assert!(single_counters.flops < full);
    }
}
