//! The `gasline` command line: data generation, engine runs, sampling runs,
//! and full-vs-sampling comparison.
//!
//! Exit codes: 0 success, 2 configuration error (missing/malformed flags,
//! files, config), 3 validation error (plan/store/graph disagree), 4
//! execution error.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use gasline_core::feature::{FeatureStore, Scope};
use gasline_core::graph::Graph;
use gasline_core::partition::partition_contiguous;
use gasline_core::sampling::{khop_sample, redundancy_factor, subgraph_infer, Fanout, SamplingConfig};
use gasline_core::zoo::{GatConfig, GcnConfig, ModelConfig, INPUT_FEATURE, OUTPUT_FEATURE};

use crate::compare::compare_runs;
use crate::gen::{erdos_renyi, power_law, random_features};
use crate::io::{read_edge_file, read_feature_file, write_edge_file, write_feature_file};
use crate::runtime::{execute, ExecOptions};

#[derive(Parser)]
#[command(
    name = "gasline",
    about = "Full-graph GNN inference on a partitioned gather-apply-scatter runtime, \
             with a k-hop sampling baseline for comparison"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run inference: full-graph engine, sampling baseline, or a comparison.
    Infer(InferArgs),
    /// Alias for `infer --mode compare`.
    Compare(InferArgs),
    /// Generate a synthetic graph and feature file.
    Gen(GenArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gat,
    Gcn,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Full,
    Sample,
    Compare,
}

#[derive(Args, Clone, Default)]
pub struct InferArgs {
    /// TOML config file mirroring every flag; explicit flags win.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Edge-list file (src<TAB>dst lines, `# n <count>` header).
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Vertex feature file ("rows cols" header).
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Vertex count override when the edge file has no header.
    #[arg(long)]
    pub n: Option<usize>,
    /// Model: gat or gcn.
    #[arg(long, value_enum)]
    pub model: Option<ModelKind>,
    /// Input feature width (checked against the feature file).
    #[arg(long)]
    pub fin: Option<usize>,
    /// Output feature width per head.
    #[arg(long)]
    pub fout: Option<usize>,
    /// Attention heads (gat only).
    #[arg(long)]
    pub heads: Option<usize>,
    /// Stacked layers.
    #[arg(long)]
    pub layers: Option<usize>,
    /// LeakyReLU negative slope (gat only).
    #[arg(long)]
    pub slope: Option<f32>,
    /// Skip adding self-loops for gat.
    #[arg(long)]
    pub no_self_loops: bool,
    /// Partition count.
    #[arg(long)]
    pub parts: Option<usize>,
    /// full, sample, or compare.
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Sampling targets: "all" or comma-separated vertex ids.
    #[arg(long)]
    pub targets: Option<String>,
    /// Per-hop fanout: "ALL", a single count, or a comma list per hop.
    #[arg(long)]
    pub fanout: Option<String>,
    /// Sampling depth (defaults to the layer count).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Seed for parameters and sampling.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory (created if absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// TOML mirror of [`InferArgs`].
#[derive(Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    graph: Option<PathBuf>,
    features: Option<PathBuf>,
    n: Option<usize>,
    model: Option<ModelKind>,
    fin: Option<usize>,
    fout: Option<usize>,
    heads: Option<usize>,
    layers: Option<usize>,
    slope: Option<f32>,
    no_self_loops: Option<bool>,
    parts: Option<usize>,
    mode: Option<Mode>,
    targets: Option<String>,
    fanout: Option<String>,
    depth: Option<usize>,
    seed: Option<u64>,
    out: Option<PathBuf>,
}

#[derive(Args, Clone)]
pub struct GenArgs {
    /// erdos_renyi or power_law.
    #[arg(long)]
    pub kind: GraphKind,
    /// Vertex count.
    #[arg(long)]
    pub n: usize,
    /// Edge count (approximate for power_law).
    #[arg(long)]
    pub m: usize,
    /// Feature width.
    #[arg(long, default_value_t = 8)]
    pub width: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output edge-list path.
    #[arg(long)]
    pub graph: PathBuf,
    /// Output feature-file path.
    #[arg(long)]
    pub features: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GraphKind {
    ErdosRenyi,
    PowerLaw,
}

/// Error with its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("validation: {0}")]
    Validation(String),
    #[error("execution: {0}")]
    Execution(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Execution(_) => 4,
        }
    }
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Infer(args) => run_infer(args, false),
        Command::Compare(args) => run_infer(args, true),
        Command::Gen(args) => run_gen(args),
    }
}

fn config_err<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn merge(args: InferArgs) -> Result<InferArgs, CliError> {
    let Some(path) = args.config.clone() else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let file: FileConfig = toml::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok(InferArgs {
        config: None,
        graph: args.graph.or(file.graph),
        features: args.features.or(file.features),
        n: args.n.or(file.n),
        model: args.model.or(file.model),
        fin: args.fin.or(file.fin),
        fout: args.fout.or(file.fout),
        heads: args.heads.or(file.heads),
        layers: args.layers.or(file.layers),
        slope: args.slope.or(file.slope),
        no_self_loops: args.no_self_loops || file.no_self_loops.unwrap_or(false),
        parts: args.parts.or(file.parts),
        mode: args.mode.or(file.mode),
        targets: args.targets.or(file.targets),
        fanout: args.fanout.or(file.fanout),
        depth: args.depth.or(file.depth),
        seed: args.seed.or(file.seed),
        out: args.out.or(file.out),
    })
}

fn parse_targets(spec: &str, n: usize) -> Result<Vec<usize>, CliError> {
    if spec.eq_ignore_ascii_case("all") {
        return Ok((0..n).collect());
    }
    let mut targets = Vec::new();
    for token in spec.split(',') {
        let id: usize = token
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("bad target id {token:?}")))?;
        if id >= n {
            return Err(CliError::Validation(format!(
                "target {id} out of range for {n} vertices"
            )));
        }
        targets.push(id);
    }
    Ok(targets)
}

fn parse_fanouts(spec: &str, depth: usize) -> Result<Vec<Fanout>, CliError> {
    let parse_one = |token: &str| -> Result<Fanout, CliError> {
        if token.eq_ignore_ascii_case("all") {
            Ok(Fanout::All)
        } else {
            let k: usize = token
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("bad fanout {token:?}")))?;
            if k == 0 {
                return Err(CliError::Config("fanout must be at least 1".into()));
            }
            Ok(Fanout::Limit(k))
        }
    };
    let tokens: Vec<&str> = spec.split(',').collect();
    if tokens.len() == 1 {
        return Ok(vec![parse_one(tokens[0])?; depth]);
    }
    if tokens.len() != depth {
        return Err(CliError::Config(format!(
            "fanout list has {} entries for depth {depth}",
            tokens.len()
        )));
    }
    tokens.into_iter().map(parse_one).collect()
}

/// Sampling-mode report contents.
#[derive(Serialize)]
struct SampleRecord {
    num_targets: u64,
    node_rows: u64,
    edge_evals: u64,
    flops: u64,
    redundancy_factor: f64,
    time_ms: f64,
}

fn run_infer(args: InferArgs, force_compare: bool) -> Result<(), CliError> {
    let args = merge(args)?;
    let graph_path = args
        .graph
        .as_ref()
        .ok_or_else(|| CliError::Config("--graph is required".into()))?;
    let feature_path = args
        .features
        .as_ref()
        .ok_or_else(|| CliError::Config("--features is required".into()))?;
    let out_dir = args
        .out
        .as_ref()
        .ok_or_else(|| CliError::Config("--out is required".into()))?;

    let (header_n, edges) = read_edge_file(graph_path).map_err(config_err)?;
    let n = args.n.or(header_n).ok_or_else(|| {
        CliError::Config(format!(
            "{}: no `# n <count>` header; pass --n",
            graph_path.display()
        ))
    })?;
    let raw_graph =
        Graph::build(&edges, n).map_err(|e| CliError::Validation(e.to_string()))?;
    let x = read_feature_file(feature_path).map_err(config_err)?;
    if x.rows() != n {
        return Err(CliError::Validation(format!(
            "feature file has {} rows, graph has {n} vertices",
            x.rows()
        )));
    }
    let f_in = x.cols();
    if let Some(fin) = args.fin {
        if fin != f_in {
            return Err(CliError::Validation(format!(
                "--fin {fin} disagrees with the feature file width {f_in}"
            )));
        }
    }

    let seed = args.seed.unwrap_or(0);
    let layers = args.layers.unwrap_or(1).max(1);
    let f_out = args.fout.unwrap_or(f_in).max(1);
    let model = match args.model.unwrap_or(ModelKind::Gat) {
        ModelKind::Gat => {
            let mut cfg =
                GatConfig::seeded(f_in, f_out, args.heads.unwrap_or(1).max(1), layers, seed);
            if let Some(slope) = args.slope {
                cfg.leaky_slope = slope;
            }
            cfg.add_self_loops = !args.no_self_loops;
            ModelConfig::Gat(cfg)
        }
        ModelKind::Gcn => ModelConfig::Gcn(GcnConfig::seeded(f_in, f_out, layers, seed)),
    };

    let prepared = model.prepare_graph(&raw_graph);
    let mut store = FeatureStore::for_graph(&prepared);
    store
        .attach(Scope::Vertex, INPUT_FEATURE, x)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    model
        .attach_aux_features(&prepared, &mut store)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let plan = model
        .build_plan()
        .map_err(|e| CliError::Execution(e.to_string()))?;
    if let Err(issues) = plan.validate(&prepared, &store) {
        let joined: Vec<String> = issues.iter().map(|i| i.to_string()).collect();
        return Err(CliError::Validation(joined.join("; ")));
    }

    std::fs::create_dir_all(out_dir).map_err(config_err)?;
    let mode = if force_compare {
        Mode::Compare
    } else {
        args.mode.unwrap_or(Mode::Full)
    };

    let run_engine = |parts: usize| -> Result<_, CliError> {
        let pg = partition_contiguous(&prepared, parts)
            .map_err(|e| CliError::Config(e.to_string()))?;
        execute(&plan, &pg, &store, &ExecOptions::from_env())
            .map_err(|e| CliError::Execution(e.to_string()))
    };
    let parts = args.parts.unwrap_or(1).max(1);

    let run_sampling = || -> Result<_, CliError> {
        let depth = args.depth.unwrap_or(layers);
        let targets = parse_targets(args.targets.as_deref().unwrap_or("all"), n)?;
        if targets.is_empty() {
            return Err(CliError::Validation("no sampling targets".into()));
        }
        let fanouts = parse_fanouts(args.fanout.as_deref().unwrap_or("ALL"), depth)?;
        let sampling = SamplingConfig {
            fanouts,
            seed,
            targets: targets.clone(),
        };
        let started = Instant::now();
        let subs = khop_sample(&prepared, &sampling);
        let input = store
            .get(Scope::Vertex, INPUT_FEATURE)
            .expect("attached above");
        let (outputs, counters) = subgraph_infer(&model, &prepared, &subs, input)
            .map_err(|e| CliError::Execution(e.to_string()))?;
        let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;
        let redundancy = redundancy_factor(&subs);
        Ok((targets, outputs, counters, elapsed_ms, redundancy))
    };

    match mode {
        Mode::Full => {
            let (result, report) = run_engine(parts)?;
            let h = result
                .get(Scope::Vertex, OUTPUT_FEATURE)
                .expect("plan marks its output");
            write_feature_file(&out_dir.join("output.txt"), h).map_err(config_err)?;
            write_text(&out_dir.join("report.json"), &report.to_json())?;
            println!(
                "full-graph: {} vertices, {} partitions, {} flops, {} bytes shipped",
                n,
                parts,
                report.total_flops(),
                report.total_bytes_shipped()
            );
        }
        Mode::Sample => {
            let (targets, outputs, counters, elapsed_ms, redundancy) = run_sampling()?;
            write_feature_file(&out_dir.join("output.txt"), &outputs).map_err(config_err)?;
            let record = SampleRecord {
                num_targets: targets.len() as u64,
                node_rows: counters.node_rows,
                edge_evals: counters.edge_evals,
                flops: counters.flops,
                redundancy_factor: redundancy,
                time_ms: elapsed_ms,
            };
            write_text(
                &out_dir.join("report.json"),
                &serde_json::to_string_pretty(&record).expect("record serializes"),
            )?;
            println!(
                "sampling: {} targets, {} flops, redundancy {:.3}",
                targets.len(),
                counters.flops,
                redundancy
            );
        }
        Mode::Compare => {
            let (result, report) = run_engine(parts)?;
            let h = result
                .get(Scope::Vertex, OUTPUT_FEATURE)
                .expect("plan marks its output");
            let (targets, outputs, counters, elapsed_ms, redundancy) = run_sampling()?;
            let full_targets = h.gather_rows(&targets);
            let record = compare_runs(
                &report,
                &full_targets,
                &outputs,
                &counters,
                elapsed_ms,
                redundancy,
            );
            write_feature_file(&out_dir.join("output.txt"), h).map_err(config_err)?;
            write_text(&out_dir.join("report.json"), &record.to_json())?;
            println!(
                "compare: flops_ratio {:.3}, redundancy {:.3}, max deviation {:.3e}",
                record.flops_ratio, record.redundancy_factor, record.max_output_deviation
            );
        }
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn run_gen(args: GenArgs) -> Result<(), CliError> {
    let edges = match args.kind {
        GraphKind::ErdosRenyi => erdos_renyi(args.n, args.m, args.seed).map_err(config_err)?,
        GraphKind::PowerLaw => power_law(args.n, args.m, args.seed).map_err(config_err)?,
    };
    write_edge_file(&args.graph, args.n, &edges).map_err(config_err)?;
    // Feature seed offset keeps features decorrelated from the topology
    // stream while staying a pure function of --seed.
    let features = random_features(args.n, args.width, args.seed.wrapping_add(1));
    write_feature_file(&args.features, &features).map_err(config_err)?;
    println!(
        "generated {} vertices, {} edges, width {}",
        args.n,
        edges.len(),
        args.width
    );
    Ok(())
}
