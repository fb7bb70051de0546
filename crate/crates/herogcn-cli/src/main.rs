//! Command-line front end: dataset loading or synthetic generation, the
//! two-phase training run, and a machine-readable JSON report.

use clap::Parser;
use herogcn::graph::{load_attributes, load_edge_list, load_labels, sbm_generate, SbmParams};
use herogcn::train::{train, Precision, RunReport, TrainConfig};
use herogcn::{AttributedGraph, Error, Real};
use serde::Serialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(
    name = "herogcn",
    about = "Higher-order graph clustering: autoencoder + GCN fusion with graph infomax and a modularity-constrained trinary self-supervised objective",
    after_help = "Examples:\n  herogcn --edges edges.txt --attrs attrs.txt --labels labels.txt --k 3\n  herogcn --generate sbm --blocks 3 --per-block 50 --p-in 0.3 --p-out 0.01 --noise 0.1\n  herogcn --edges e.txt --attrs x.txt --k 6 --config run.conf --out report.json"
)]
struct Args {
    /// Edge-list file: one `i j` pair of 0-based indices per line, `#` comments.
    #[arg(long, value_name = "PATH")]
    edges: Option<PathBuf>,

    /// Attribute file: one node per line, optionally preceded by an `n d` header.
    #[arg(long, value_name = "PATH")]
    attrs: Option<PathBuf>,

    /// Ground-truth label file (one integer per line) enabling ACC/NMI/ARI/F1.
    #[arg(long, value_name = "PATH")]
    labels: Option<PathBuf>,

    /// Number of clusters.
    #[arg(long, value_name = "K")]
    k: Option<usize>,

    /// Flat key = value configuration file overriding defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Random seed.
    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// Ablation: drop the graph mutual-infomax loss.
    #[arg(long)]
    no_infomax: bool,

    /// Ablation: drop the modularity loss.
    #[arg(long)]
    no_modularity: bool,

    /// Request deterministic kernels (runs are seed-reproducible either way).
    #[arg(long)]
    deterministic: bool,

    /// Write the JSON report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Generate a synthetic dataset instead of loading files; only `sbm`.
    #[arg(long, value_name = "KIND")]
    generate: Option<String>,

    /// Block count for --generate sbm.
    #[arg(long, value_name = "K")]
    blocks: Option<usize>,

    /// Nodes per block for --generate sbm.
    #[arg(long = "per-block", value_name = "N")]
    per_block: Option<usize>,

    /// Within-block edge probability.
    #[arg(long = "p-in", value_name = "F", default_value_t = 0.3)]
    p_in: f64,

    /// Cross-block edge probability.
    #[arg(long = "p-out", value_name = "F", default_value_t = 0.01)]
    p_out: f64,

    /// Attribute noise standard deviation.
    #[arg(long, value_name = "F", default_value_t = 0.1)]
    noise: f64,

    /// Repeat the run over consecutive seeds and aggregate final metrics.
    #[arg(long, value_name = "N", default_value_t = 1)]
    repeats: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

/// Input problems (missing/malformed files, bad flags or config) exit 2;
/// runtime failures exit 1.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Io { .. } | Error::Parse { .. } | Error::Config(_) => 2,
        _ => 1,
    }
}

fn run(args: &Args) -> Result<(), Error> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = &args.config {
        apply_config_file(&mut cfg, path)?;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(k) = args.k {
        cfg.clusters = k;
    }
    if args.no_infomax {
        cfg.enable_infomax = false;
    }
    if args.no_modularity {
        cfg.enable_modularity = false;
    }
    if args.deterministic {
        cfg.deterministic = true;
    }
    if args.repeats == 0 {
        return Err(Error::Config("--repeats must be >= 1".into()));
    }

    match cfg.precision {
        Precision::F64 => run_typed::<f64>(args, cfg),
        Precision::F32 => run_typed::<f32>(args, cfg),
    }
}

fn run_typed<F: Real>(args: &Args, mut cfg: TrainConfig) -> Result<(), Error> {
    let (graph, labels): (AttributedGraph<F>, Option<Vec<usize>>) = match &args.generate {
        Some(kind) => {
            if kind != "sbm" {
                return Err(Error::Config(format!(
                    "unknown generator '{kind}'; only 'sbm' is supported"
                )));
            }
            let blocks = args
                .blocks
                .ok_or_else(|| Error::Config("--generate sbm requires --blocks".into()))?;
            let per_block = args
                .per_block
                .ok_or_else(|| Error::Config("--generate sbm requires --per-block".into()))?;
            if args.k.is_none() {
                cfg.clusters = blocks;
            }
            let (graph, labels) = sbm_generate(&SbmParams {
                blocks,
                per_block,
                p_in: args.p_in,
                p_out: args.p_out,
                noise: args.noise,
                seed: cfg.seed,
            })?;
            (graph, Some(labels))
        }
        None => {
            let edges_path = args
                .edges
                .as_ref()
                .ok_or_else(|| Error::Config("--edges is required (or use --generate)".into()))?;
            let attrs_path = args
                .attrs
                .as_ref()
                .ok_or_else(|| Error::Config("--attrs is required (or use --generate)".into()))?;
            if args.k.is_none() && cfg.clusters < 2 {
                return Err(Error::Config("--k is required for file datasets".into()));
            }
            let edges = load_edge_list(edges_path)?;
            let attrs = load_attributes::<F>(attrs_path)?;
            let graph = AttributedGraph::new(attrs, &edges)?;
            let labels = match &args.labels {
                Some(path) => {
                    let l = load_labels(path)?;
                    if l.len() != graph.node_count() {
                        return Err(Error::Config(format!(
                            "label file has {} entries for {} nodes",
                            l.len(),
                            graph.node_count()
                        )));
                    }
                    Some(l)
                }
                None => None,
            };
            (graph, labels)
        }
    };

    let mut reports: Vec<RunReport> = Vec::with_capacity(args.repeats);
    let base_seed = cfg.seed;
    for offset in 0..args.repeats {
        let mut run_cfg = cfg.clone();
        run_cfg.seed = base_seed + offset as u64;
        reports.push(train(&graph, labels.as_deref(), &run_cfg)?);
    }

    let json = if args.repeats == 1 {
        serde_json::to_string_pretty(&reports[0]).expect("report serializes")
    } else {
        let aggregate = Aggregate::over(&reports, base_seed);
        let last = reports.pop().expect("at least one run");
        serde_json::to_string_pretty(&MultiRunReport {
            losses: last.losses,
            metrics: last.metrics,
            assignments: last.assignments,
            config_echo: last.config_echo,
            elapsed_seconds: last.elapsed_seconds,
            aggregate,
        })
        .expect("report serializes")
    };

    match &args.out {
        Some(path) => std::fs::write(path, json + "\n").map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?,
        None => println!("{json}"),
    }
    Ok(())
}

/// Last run's report plus mean/std of final metrics across seeds.
#[derive(Serialize)]
struct MultiRunReport {
    losses: Vec<herogcn::train::EpochLosses>,
    metrics: herogcn::train::MetricsReport,
    assignments: Vec<usize>,
    config_echo: TrainConfig,
    elapsed_seconds: f64,
    aggregate: Aggregate,
}

#[derive(Serialize)]
struct Aggregate {
    repeats: usize,
    first_seed: u64,
    acc: Option<MeanStd>,
    nmi: Option<MeanStd>,
    ari: Option<MeanStd>,
    f1: Option<MeanStd>,
    modularity: Option<MeanStd>,
}

#[derive(Serialize)]
struct MeanStd {
    mean: f64,
    std: f64,
}

impl Aggregate {
    fn over(reports: &[RunReport], first_seed: u64) -> Self {
        let stat = |select: fn(&RunReport) -> Option<f64>| -> Option<MeanStd> {
            let values: Vec<f64> = reports.iter().filter_map(select).collect();
            if values.is_empty() {
                return None;
            }
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
            Some(MeanStd {
                mean,
                std: var.sqrt(),
            })
        };
        Aggregate {
            repeats: reports.len(),
            first_seed,
            acc: stat(|r| r.metrics.acc),
            nmi: stat(|r| r.metrics.nmi),
            ari: stat(|r| r.metrics.ari),
            f1: stat(|r| r.metrics.f1),
            modularity: stat(|r| r.metrics.modularity),
        }
    }
}

fn apply_config_file(cfg: &mut TrainConfig, path: &Path) -> Result<(), Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let Some((key, value)) = trimmed.split_once('=') else {
            return Err(Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                detail: format!("expected 'key = value', found '{trimmed}'"),
            });
        };
        cfg.apply_kv(key.trim(), value.trim())
            .map_err(|e| Error::Parse {
                path: path.display().to_string(),
                line: lineno + 1,
                detail: e.to_string(),
            })?;
    }
    Ok(())
}
