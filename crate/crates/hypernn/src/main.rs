use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};

use hypernn::adversarial::{
    gen_binary_search_approx_failure, gen_recentering_approx_failure, gen_recentering_worstcase,
    gen_rl_ratio_instance, shell_exact_counterexample, ConstructionSpec,
};
use hypernn::dataset::{load_dataset, save_dataset};
use hypernn::error::Error;
use hypernn::eval::{evaluate, split_queries, Algorithm, EvalConfig, OracleChoice};
use hypernn::oracle::{load_index, save_index, EuclideanOracle, LshParams};
use hypernn::search::{recentering_knn, recentering_nn};
use hypernn::{Dataset, PoincarePoint, Result};

#[derive(Parser)]
#[command(
    name = "hypernn",
    version,
    about = "Nearest-neighbor search in the Poincaré ball via Euclidean oracles"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a persistent Euclidean index (kd-tree or LSH) over a dataset.
    Build(BuildArgs),
    /// Load a persisted index and answer hyperbolic nearest-neighbor queries.
    Query(QueryArgs),
    /// Run the budgeted evaluation protocol and report recall, distance
    /// ratios, and oracle-call statistics per budget.
    Bench(BenchArgs),
    /// Generate a hard instance: dataset, query file, and a sidecar recording
    /// the construction's parameters and measured guarantees.
    GenAdversarial(GenArgs),
}

#[derive(clap::Args)]
struct BuildArgs {
    /// Dataset in the text interchange format.
    #[arg(long)]
    dataset: PathBuf,
    /// Where to write the index.
    #[arg(long)]
    out: PathBuf,
    /// Index family. Brute has no persistent form and is rejected.
    #[arg(long, value_enum, default_value = "kdtree")]
    oracle: OracleChoice,
    #[arg(long, default_value_t = 5)]
    tables: usize,
    #[arg(long, default_value_t = 15)]
    hyperplanes: usize,
    /// LSH quantization granularity.
    #[arg(long, default_value_t = 10_000.0)]
    granularity: f64,
    #[arg(long, default_value_t = 1)]
    probe_radius: usize,
    /// Seed for the LSH hyperplane draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(clap::Args)]
struct QueryArgs {
    /// Index written by `build`.
    #[arg(long)]
    index: PathBuf,
    /// Query points, in the dataset text format.
    #[arg(long)]
    query_file: PathBuf,
    /// Neighbors to report per query.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Optional cap on points examined per query.
    #[arg(long)]
    budget: Option<u64>,
}

#[derive(clap::Args)]
struct BenchArgs {
    /// Dataset in the text interchange format.
    #[arg(long)]
    dataset: PathBuf,
    /// Evaluation config as JSON; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// How many points to withhold from the dataset as queries.
    #[arg(long)]
    queries: Option<usize>,
    /// Evaluate these points instead of withholding any (text format).
    #[arg(long)]
    query_file: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Points-examined cap; repeatable, ascending; 0 means unlimited.
    #[arg(long = "budget")]
    budgets: Vec<u64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum)]
    algo: Option<Algorithm>,
    #[arg(long, value_enum)]
    oracle: Option<OracleChoice>,
    /// Shell band width.
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    bands: Option<u32>,
    #[arg(long)]
    tables: Option<usize>,
    #[arg(long)]
    hyperplanes: Option<usize>,
    /// Cap on the per-band LSH quantization granularity.
    #[arg(long)]
    granularity: Option<f64>,
    #[arg(long)]
    probe_radius: Option<usize>,
    /// Approximation target for the binary-search algorithm.
    #[arg(long)]
    c: Option<f64>,
    /// Oracle slack the shell walk accounts for.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Write the machine-readable rows here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GenKind {
    RecenteringWorstcase,
    RlRatio,
    RecenteringApproxFailure,
    BinarySearchApproxFailure,
    ShellExactCounterexample,
}

#[derive(clap::Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    kind: GenKind,
    /// Dataset path; `<out>.queries` and `<out>.expected.json` are written
    /// next to it.
    #[arg(long)]
    out: PathBuf,
    /// Points in the worst-case layout.
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Query norm for the worst-case layout; default 1 − 2^−(k+2).
    #[arg(long)]
    q_norm: Option<f64>,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Distance-ratio exponent (rl-ratio) or sampling budget to validate
    /// against (binary-search-approx-failure; needs e.g. 400 at ε = 0.5).
    #[arg(long, default_value_t = 20.0)]
    s: f64,
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<()> {
    match Cli::parse().command {
        Command::Build(args) => build(args),
        Command::Query(args) => query(args),
        Command::Bench(args) => bench(args),
        Command::GenAdversarial(args) => gen_adversarial(args),
    }
}

fn build(args: BuildArgs) -> Result<()> {
    let data = Arc::new(load_dataset(&args.dataset)?);
    let oracle = match args.oracle {
        OracleChoice::Brute => EuclideanOracle::brute(data),
        OracleChoice::Kdtree => EuclideanOracle::kd(data),
        OracleChoice::Lsh => {
            let params = LshParams::new(
                args.tables,
                args.hyperplanes,
                args.granularity,
                args.probe_radius,
                args.seed,
            )?;
            EuclideanOracle::lsh(data, &params)
        }
    };
    save_index(&args.out, &oracle)?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn query(args: QueryArgs) -> Result<()> {
    let oracle = load_index(&args.index)?;
    let queries = load_dataset(&args.query_file)?;
    for (qid, q) in queries.iter() {
        let res = if args.k == 1 {
            recentering_nn(q, &oracle, args.budget)?
        } else {
            recentering_knn(q, &oracle, args.k, args.budget)?
        };
        print!("{qid}");
        for (id, d) in res.neighbor_ids.iter().zip(&res.hyper_distances) {
            print!(" {id} {d:.17e}");
        }
        println!();
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str::<EvalConfig>(&text)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?
        }
        None => EvalConfig::default(),
    };
    if let Some(v) = args.algo {
        config.algorithm = v;
    }
    if let Some(v) = args.oracle {
        config.oracle = v;
    }
    if let Some(v) = args.k {
        config.k = v;
    }
    if let Some(v) = args.queries {
        config.num_queries = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.w {
        config.width = v;
    }
    if let Some(v) = args.bands {
        config.bands = v;
    }
    if let Some(v) = args.tables {
        config.tables = v;
    }
    if let Some(v) = args.hyperplanes {
        config.hyperplanes = v;
    }
    if let Some(v) = args.granularity {
        config.granularity_cap = v;
    }
    if let Some(v) = args.probe_radius {
        config.probe_radius = v;
    }
    if let Some(v) = args.c {
        config.c = v;
    }
    if let Some(v) = args.epsilon {
        config.epsilon = Some(v);
    }
    if !args.budgets.is_empty() {
        config.budgets = args
            .budgets
            .iter()
            .map(|&b| if b == 0 { None } else { Some(b) })
            .collect();
    }

    let data = load_dataset(&args.dataset)?;
    let (searchable, queries) = match &args.query_file {
        Some(path) => (data, load_dataset(path)?),
        None => {
            if config.num_queries == 0 {
                return Err(Error::InvalidConfig(
                    "bench needs queries: --queries N to withhold from the dataset, \
                     or --query-file for an explicit set"
                        .into(),
                ));
            }
            split_queries(&data, config.num_queries, config.seed)?
        }
    };
    let searchable = Arc::new(searchable);
    let report = evaluate(&config, &searchable, &queries)?;
    print!("{}", report.table());
    match &args.out {
        Some(path) => std::fs::write(path, report.machine_text())?,
        None => {
            println!();
            print!("{}", report.machine_text());
        }
    }
    Ok(())
}

fn path_with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn gen_adversarial(args: GenArgs) -> Result<()> {
    let (data, query_point, spec): (Arc<Dataset>, PoincarePoint, ConstructionSpec) = match args.kind
    {
        GenKind::RecenteringWorstcase => {
            let q_norm = args
                .q_norm
                .unwrap_or_else(|| 1.0 - 0.5f64.powi(args.k as i32 + 2));
            let inst = gen_recentering_worstcase(args.k, q_norm, args.dim)?;
            (inst.data.clone(), inst.query.clone(), inst.spec())
        }
        GenKind::RlRatio => {
            let inst = gen_rl_ratio_instance(args.s, args.delta)?;
            (inst.data.clone(), inst.query.clone(), inst.spec())
        }
        GenKind::RecenteringApproxFailure => {
            let inst = gen_recentering_approx_failure(args.epsilon)?;
            (inst.data.clone(), inst.query.clone(), inst.spec())
        }
        GenKind::BinarySearchApproxFailure => {
            let inst = gen_binary_search_approx_failure(args.epsilon, args.s)?;
            (inst.data.clone(), inst.query.clone(), inst.spec())
        }
        GenKind::ShellExactCounterexample => {
            let inst = shell_exact_counterexample();
            (inst.data.clone(), inst.query.clone(), inst.spec())
        }
    };
    save_dataset(&data, &args.out)?;
    let queries = Dataset::new(query_point.dim(), vec![0], vec![query_point])?;
    let queries_path = path_with_suffix(&args.out, ".queries");
    save_dataset(&queries, &queries_path)?;
    let sidecar_path = path_with_suffix(&args.out, ".expected.json");
    let json = serde_json::to_string_pretty(&spec).expect("sidecar holds only plain numbers");
    std::fs::write(&sidecar_path, json)?;
    println!("dataset: {}", args.out.display());
    println!("queries: {}", queries_path.display());
    println!("expected: {}", sidecar_path.display());
    Ok(())
}
