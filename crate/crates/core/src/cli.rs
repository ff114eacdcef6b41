//! Command-line interface.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bench::{frontier_scatter, run_benchmark, write_benchmark_csv, write_frontier_csv, BenchmarkSpec};
use crate::config::{KeyValues, RunConfig};
use crate::error::{Error, Result};
use crate::graph::MarketGraph;
use crate::lssa::{run_method, Method, PipelineReport};
use crate::market::{load_prices, synthesize_market, MarketModel};
use crate::vqe::Shots;

#[derive(Debug, Parser)]
#[command(name = "portopt", version, about = "Decomposition-based QUBO portfolio selection")]
pub struct Cli {
    /// Key = value run configuration; command-line flags take precedence.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a market model from a price CSV.
    Ingest {
        #[arg(long)]
        prices: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a synthetic clustered price CSV.
    Synth {
        #[arg(long)]
        assets: usize,
        #[arg(long, default_value_t = 4)]
        clusters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Export the correlation graph as an edge list.
    Graph {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one pipeline and write its report.
    Solve(SolveArgs),
    /// Run a benchmark grid and write per-run rows as CSV.
    Benchmark {
        #[arg(long)]
        market: PathBuf,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write return/volatility points for random portfolios, single assets and reports.
    Frontier {
        #[arg(long)]
        market: PathBuf,
        #[arg(long, num_args = 0.., value_delimiter = ',')]
        reports: Vec<PathBuf>,
        #[arg(long, default_value_t = 5000)]
        samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[arg(long)]
    pub market: PathBuf,
    /// lssa-random, lssa-mis, lssa-mis-random, exact or tabu.
    #[arg(long)]
    pub method: Option<Method>,
    #[arg(long)]
    pub ng: Option<usize>,
    #[arg(long)]
    pub ns: Option<usize>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sub-system solver: exact, sa or tabu.
    #[arg(long)]
    pub solver: Option<String>,
    /// `exact` or a shot count.
    #[arg(long)]
    pub shots: Option<Shots>,
    #[arg(long)]
    pub out: PathBuf,
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::from_key_values(&KeyValues::load(p)?),
        None => Ok(RunConfig::default()),
    }
}

fn load_model(path: &Path) -> Result<MarketModel> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn run(cli: Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match cli.command {
        Command::Ingest { prices, out } => {
            let series = load_prices(&prices)?;
            let model = MarketModel::from_prices(&series)?;
            write_text(&out, &serde_json::to_string_pretty(&model)?)?;
            let dates = series.dates();
            println!(
                "{} assets, {} to {} ({} days)",
                model.n(),
                dates[0],
                dates[dates.len() - 1],
                dates.len()
            );
        }
        Command::Synth {
            assets,
            clusters,
            seed,
            out,
        } => {
            let series = synthesize_market(assets, seed, clusters)?;
            series.write_csv(&out)?;
            println!("{} assets over {} days", series.n_assets(), series.dates().len());
        }
        Command::Graph { market, alpha, out } => {
            let mut run = load_config(config)?;
            if let Some(a) = alpha {
                run.alpha = a;
            }
            let model = load_model(&market)?;
            let g = MarketGraph::from_model(&model, run.alpha)?;
            write_text(&out, &g.to_edge_list())?;
            println!(
                "{} vertices, {} edges, density {:.4}",
                g.n(),
                g.edges().len(),
                g.density()
            );
        }
        Command::Solve(args) => solve(config, args)?,
        Command::Benchmark { market, spec, out } => {
            let spec = BenchmarkSpec::load(&spec)?;
            let model = load_model(&market)?;
            let table = run_benchmark(&spec, &model)?;
            write_benchmark_csv(&table.rows, &out)?;
            println!("tick,method,median_r_ar,best_r_ar,median_ns_mis,median_ns_po");
            for s in &table.summary {
                let fmt = |x: Option<f64>| x.map(|v| format!("{v:.6}")).unwrap_or_default();
                println!(
                    "{},{},{},{},{},{}",
                    s.tick,
                    s.method,
                    fmt(s.median_r_ar),
                    fmt(s.best_r_ar),
                    s.median_ns_mis,
                    s.median_ns_po
                );
            }
        }
        Command::Frontier {
            market,
            reports,
            samples,
            seed,
            out,
        } => {
            let mut run = load_config(config)?;
            if seed.is_some() {
                run.seed = seed;
            }
            let model = load_model(&market)?;
            let reports = reports
                .iter()
                .map(|p| {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    Ok(serde_json::from_str::<PipelineReport>(&text)?)
                })
                .collect::<Result<Vec<_>>>()?;
            let points = frontier_scatter(&model, samples, run.resolved_seed()?, &reports)?;
            write_frontier_csv(&points, &out)?;
            println!("{} points", points.len());
        }
    }
    Ok(())
}

fn solve(config: Option<&Path>, args: SolveArgs) -> Result<()> {
    let mut run = load_config(config)?;
    if let Some(m) = args.method {
        run.method = m;
    }
    if let Some(s) = &args.solver {
        run.set("solver", s)?;
    }
    if let Some(s) = args.shots {
        run.vqe.shots = s;
    }
    run.ng = args.ng.or(run.ng);
    run.ns = args.ns.or(run.ns);
    run.gamma = args.gamma.unwrap_or(run.gamma);
    run.alpha = args.alpha.unwrap_or(run.alpha);
    run.seed = args.seed.or(run.seed);

    let model = load_model(&args.market)?;
    let (params, settings) = run.resolve(model.n())?;
    let mut report = run_method(&model, &params, &settings)?;
    let echo = RunConfig {
        ng: Some(params.n_g),
        ns: Some(params.n_s),
        seed: Some(settings.seed),
        ..run
    };
    report.config = Some(serde_json::to_value(&echo)?);
    write_text(&args.out, &serde_json::to_string_pretty(&report)?)?;

    let tickers: Vec<&str> = model
        .symbols()
        .iter()
        .zip(&report.selected)
        .filter(|(_, &x)| x == 1)
        .map(|(s, _)| s.as_str())
        .collect();
    println!("selected: {}", tickers.join(" "));
    println!("energy: {}", report.energy);
    match report.r_ar {
        Some(r) => println!("r_ar: {r:.6}"),
        None => println!("r_ar: undefined (classical energy {})", report.classical_energy),
    }
    Ok(())
}
