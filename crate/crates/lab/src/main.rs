use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use rggmod::config::{ExperimentConfig, ExperimentName, PartitionSpec};
use rggmod::experiments::run_experiment;
use rggmod::output::{write_edges, write_labels, write_points, write_table};
use rggmod_core::continuum::reference_minimizer;
use rggmod_core::domain::sample;
use rggmod_core::functional::decompose;
use rggmod_core::geograph::build_graph;
use rggmod_core::optimizer::{exhaustive, greedy_capped, multistart, spectral_bisection};
use rggmod_core::transport::{build_quantile_map, sup_deviation, tl1_surrogate, weak_convergence_diagnostic, TEST_FUNCTIONS};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "rggmod", version, about = "Modularity on random geometric graphs: sampling, optimization and limit experiments")]
struct Cli {
    /// JSON experiment configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured base seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout when absent)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for trial parallelism
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw a point cloud from the configured density
    Sample {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Build the weighted graph and write its edge list
    Graph {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Decompose Q of the configured partition (or the reference minimizer)
    Decompose {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Maximize Q and write the labels file
    Optimize {
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        /// multistart, greedy, spectral or exhaustive
        #[arg(long, default_value = "multistart")]
        method: String,
    },
    /// One-dimensional quantile map diagnostics
    Transport {
        #[arg(long)]
        n: Option<usize>,
    },
    /// Run a named experiment and write its CSV
    Experiment { name: String },
}

const DEFAULT_CONFIG: &str = r#"{"experiment":"consistency","n":[1000],"beta":0.3}"#;

fn load(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::from_json(DEFAULT_CONFIG)?,
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    cfg.validate()?;
    for w in cfg.rate_warnings() {
        eprintln!("warning: {w}");
    }
    Ok(cfg)
}

fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let mut cfg = load(&cli)?;
    let size = |n: Option<usize>| n.unwrap_or(cfg.n[0]);
    let scale = |n: usize, eps: Option<f64>, cfg: &ExperimentConfig| match eps {
        Some(e) => e,
        None => match cfg.beta {
            Some(b) => rggmod::rate::eps_schedule(n, b),
            None => cfg.eps_for(0),
        },
    };
    match &cli.command {
        Command::Sample { n } => {
            let n = size(*n);
            let setup = cfg.setup()?;
            let cloud = sample(&setup.density, n, cfg.seed)?;
            let header = json!({"command": "sample", "n": n, "seed": cfg.seed, "config": cfg});
            write_points(sink(cli.out.as_deref())?, &header.to_string(), &cloud)?;
        }
        Command::Graph { n, eps } => {
            let n = size(*n);
            let eps = scale(n, *eps, &cfg);
            let setup = cfg.setup()?;
            let graph = build_graph(&sample(&setup.density, n, cfg.seed)?, &setup.kernel, eps)?;
            let header = json!({"command": "graph", "n": n, "eps": eps, "seed": cfg.seed, "config": cfg});
            write_edges(sink(cli.out.as_deref())?, &header.to_string(), &graph)?;
        }
        Command::Decompose { n, eps } => {
            let n = size(*n);
            let eps = scale(n, *eps, &cfg);
            let setup = cfg.setup()?;
            let part = match &cfg.partition {
                Some(spec) => spec.build(&setup.domain)?,
                None => reference_minimizer(&setup.domain, &setup.density, cfg.alpha, cfg.k, &setup.quad)?.partition,
            };
            let cloud = sample(&setup.density, n, cfg.seed)?;
            let graph = build_graph(&cloud, &setup.kernel, eps)?;
            let r = decompose(&graph, &part.induce(&cloud)?, cfg.alpha, part.k())?;
            let report = json!({
                "n": r.n, "eps": r.eps, "alpha": r.alpha, "k": r.k, "q": r.q,
                "quad_term": r.quad_term, "gtv_term": r.gtv_term, "residual": r.residual,
                "tolerance": r.tolerance(), "partition": PartitionSpec::from_partition(&part),
            });
            let mut out = sink(cli.out.as_deref())?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        }
        Command::Optimize { n, eps, method } => {
            let n = size(*n);
            let eps = scale(n, *eps, &cfg);
            let setup = cfg.setup()?;
            let graph = build_graph(&sample(&setup.density, n, cfg.seed)?, &setup.kernel, eps)?;
            let (a, k, s) = (cfg.alpha, cfg.k, cfg.seed);
            let res = match method.as_str() {
                "multistart" => multistart(&graph, a, k, s, cfg.restarts)?,
                "greedy" => greedy_capped(&graph, a, k, s)?,
                "spectral" => spectral_bisection(&graph, a, k, s)?,
                "exhaustive" => exhaustive(&graph, a, k)?,
                other => bail!("unknown method `{other}`"),
            };
            let summary = json!({
                "command": "optimize", "n": n, "eps": eps, "seed": s, "method": res.method.name(),
                "q": res.q, "clusters": res.partition.nonempty_clusters(), "iterations": res.iterations,
                "moves": res.moves, "degraded": res.degraded, "config": cfg,
            });
            eprintln!("{}", serde_json::to_string(&summary)?);
            write_labels(sink(cli.out.as_deref())?, &summary.to_string(), &res.partition)?;
        }
        Command::Transport { n } => {
            let n = size(*n);
            let setup = cfg.setup()?;
            let cloud = sample(&setup.density, n, cfg.seed)?;
            let map = build_quantile_map(&setup.density, &cloud, &setup.quad)?;
            let dev = sup_deviation(&map);
            let part = reference_minimizer(&setup.domain, &setup.density, cfg.alpha, cfg.k, &setup.quad)?.partition;
            let induced = part.induce(&cloud)?;
            let u_n: Vec<f64> = induced.labels().iter().map(|&l| if l == 0 { 1.0 } else { 0.0 }).collect();
            let tl1 = tl1_surrogate(&map, &part.regions()[0], &u_n, &setup.quad)?;
            let weak = weak_convergence_diagnostic(std::slice::from_ref(&cloud), &setup.density, &setup.quad)?;
            let errors: serde_json::Map<String, serde_json::Value> =
                TEST_FUNCTIONS.iter().zip(weak[0].errors).map(|(f, e)| (f.to_string(), json!(e))).collect();
            let report = json!({
                "n": n, "seed": cfg.seed, "sup_deviation": dev.sup, "lil_statistic": dev.lil,
                "tl1_surrogate_induced": tl1, "weak_errors": errors,
            });
            let mut out = sink(cli.out.as_deref())?;
            writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
        }
        Command::Experiment { name } => {
            cfg.experiment = ExperimentName::from_name(name)?;
            let table = run_experiment(&cfg)?;
            let path = cli.out.clone().or_else(|| cfg.output.clone());
            write_table(sink(path.as_deref())?, &cfg.to_json(), &table)?;
        }
    }
    Ok(())
}
