//! Validation soundness: randomly composed plans that pass `validate` must
//! execute without tripping any runtime shape check.

use gasline_core::interp::interpret_plan;
use gasline_core::modulegen::random_module_shaped;
use gasline_core::rng::Lcg64;
use gasline_core::{Aggregator, FeatureRef, FeatureStore, Graph, Matrix, Plan, Scope};

struct Pool {
    vertex: Vec<(FeatureRef, usize)>,
    edge: Vec<(FeatureRef, usize)>,
}

fn random_matrix(rng: &mut Lcg64, rows: usize, cols: usize) -> Matrix {
    let data = (0..rows * cols).map(|_| rng.symmetric_f32(1.0)).collect();
    Matrix::from_vec(rows, cols, data).unwrap()
}

/// Pick an existing ref of the scope or mint a fresh store feature.
fn pick_ref(
    rng: &mut Lcg64,
    plan: &mut Plan,
    store: &mut FeatureStore,
    pool: &mut Pool,
    scope: Scope,
    counter: &mut usize,
) -> (FeatureRef, usize) {
    let list = match scope {
        Scope::Vertex => &mut pool.vertex,
        Scope::Edge => &mut pool.edge,
    };
    if !list.is_empty() && rng.below(3) != 0 {
        return list[rng.below(list.len())];
    }
    let cols = 1 + rng.below(5);
    let name = format!("{}_{counter}", scope.name());
    *counter += 1;
    let rows = match scope {
        Scope::Vertex => store.num_vertices(),
        Scope::Edge => store.num_edges(),
    };
    let values = random_matrix(rng, rows, cols);
    store.attach(scope, &name, values).unwrap();
    let r = match scope {
        Scope::Vertex => plan.get_vertex(&name),
        Scope::Edge => plan.get_edge(&name),
    };
    list.push((r, cols));
    (r, cols)
}

#[test]
fn valid_plans_never_trip_runtime_shape_checks() {
    let mut rng = Lcg64::new(0x50F7);
    for case in 0..60 {
        let n = rng.below(25) + 2;
        let m = rng.below(80);
        let edges: Vec<(usize, usize)> = (0..m).map(|_| (rng.below(n), rng.below(n))).collect();
        let graph = Graph::build(&edges, n).unwrap();
        let mut store = FeatureStore::for_graph(&graph);
        let mut plan = Plan::new();
        let mut pool = Pool {
            vertex: Vec::new(),
            edge: Vec::new(),
        };
        let mut counter = 0usize;

        let steps = 1 + rng.below(5);
        for _ in 0..steps {
            match rng.below(3) {
                0 => {
                    // Transform over 1-2 same-scope refs.
                    let scope = if rng.below(2) == 0 {
                        Scope::Vertex
                    } else {
                        Scope::Edge
                    };
                    let k = 1 + rng.below(2);
                    let mut refs = Vec::new();
                    let mut widths = Vec::new();
                    for _ in 0..k {
                        let (r, c) =
                            pick_ref(&mut rng, &mut plan, &mut store, &mut pool, scope, &mut counter);
                        refs.push(r);
                        widths.push(c);
                    }
                    let module = random_module_shaped(&mut rng, &widths, None).module;
                    let out_widths = module.output_cols().unwrap();
                    let outs = plan.transform(&refs, module).unwrap();
                    for (r, c) in outs.into_iter().zip(out_widths) {
                        match scope {
                            Scope::Vertex => pool.vertex.push((r, c)),
                            Scope::Edge => pool.edge.push((r, c)),
                        }
                    }
                }
                1 => {
                    // Message passing over random src/dst/edge widths.
                    let ns = 1 + rng.below(2);
                    let nd = rng.below(2);
                    let ne = rng.below(2);
                    let mut src = Vec::new();
                    let mut dst = Vec::new();
                    let mut edge = Vec::new();
                    let mut widths = Vec::new();
                    for _ in 0..ns {
                        let (r, c) = pick_ref(
                            &mut rng, &mut plan, &mut store, &mut pool, Scope::Vertex, &mut counter,
                        );
                        src.push(r);
                        widths.push(c);
                    }
                    for _ in 0..nd {
                        let (r, c) = pick_ref(
                            &mut rng, &mut plan, &mut store, &mut pool, Scope::Vertex, &mut counter,
                        );
                        dst.push(r);
                        widths.push(c);
                    }
                    for _ in 0..ne {
                        let (r, c) = pick_ref(
                            &mut rng, &mut plan, &mut store, &mut pool, Scope::Edge, &mut counter,
                        );
                        edge.push(r);
                        widths.push(c);
                    }
                    let module = random_module_shaped(&mut rng, &widths, Some(1)).module;
                    let out_cols = module.output_cols().unwrap()[0];
                    let agg = match rng.below(4) {
                        0 => Aggregator::Sum,
                        1 => Aggregator::Mean,
                        2 => Aggregator::Max,
                        _ => Aggregator::None,
                    };
                    let out = plan
                        .message_passing(&src, &dst, &edge, module, agg)
                        .unwrap();
                    match agg {
                        Aggregator::None => pool.edge.push((out, out_cols)),
                        _ => pool.vertex.push((out, out_cols)),
                    }
                }
                _ => {
                    let (r, c) = pick_ref(
                        &mut rng, &mut plan, &mut store, &mut pool, Scope::Edge, &mut counter,
                    );
                    let out = plan.edge_softmax(r).unwrap();
                    pool.edge.push((out, c));
                }
            }
        }
        // Mark the most recent value of each scope as an output.
        if let Some(&(r, _)) = pool.vertex.last() {
            plan.mark_output(r, "out_v").unwrap();
        }
        if let Some(&(r, _)) = pool.edge.last() {
            plan.mark_output(r, "out_e").unwrap();
        }

        plan.validate(&graph, &store)
            .unwrap_or_else(|issues| panic!("case {case}: generated plan invalid: {issues:?}"));
        interpret_plan(&plan, &graph, &store)
            .unwrap_or_else(|e| panic!("case {case}: valid plan failed to execute: {e}"));
    }
}
