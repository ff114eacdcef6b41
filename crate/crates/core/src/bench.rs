//! Approximation-ratio benchmarks and efficient-frontier scatter data.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{parse_value, KeyValues, RunConfig};
use crate::error::{Error, Result};
use crate::lssa::{run_method, Method, PipelineReport};
use crate::market::{build_portfolio_qubo, portfolio_stats, MarketModel, PortfolioConfig};
use crate::qubo::IsingProblem;
use crate::solvers::{solve_exhaustive, solve_tabu, SolveResult, TabuParams};

/// Problems smaller than this are solved exactly for the baseline.
pub const EXHAUSTIVE_BASELINE_LIMIT: usize = 20;

/// Reference ground-state estimate: exhaustive below
/// [`EXHAUSTIVE_BASELINE_LIMIT`] variables, tabu search otherwise.
pub fn classical_baseline(p: &IsingProblem) -> Result<SolveResult> {
    if p.n() < EXHAUSTIVE_BASELINE_LIMIT {
        solve_exhaustive(p)
    } else {
        solve_tabu(p, &TabuParams::default())
    }
}

pub fn approximation_ratio(method_energy: f64, classical_energy: f64) -> Result<f64> {
    if classical_energy < 0.0 {
        Ok(method_energy / classical_energy)
    } else {
        Err(Error::UndefinedRatio(classical_energy))
    }
}

/// One `(N, N_g)` benchmark cell; `n_s` defaults to `ceil(N / 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Cell {
    pub n: usize,
    pub n_g: usize,
    pub n_s: Option<usize>,
}

impl Cell {
    /// Axis label such as `16-8`.
    pub fn tick(&self) -> String {
        format!("{}-{}", self.n, self.n_g)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkSpec {
    pub sizes: Vec<Cell>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    /// Solver, recombiner, gamma and alpha shared by every run.
    pub run: RunConfig,
}

impl BenchmarkSpec {
    /// Reads `sizes = 8-4, 16-8-4`, `methods = lssa-random, lssa-mis` and
    /// `seeds = 0, 1, 2` (or a range `0..5`); every other key is a run setting.
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = KeyValues::parse(text)?;
        if kv.is_empty() {
            return Err(Error::Config("benchmark spec is empty".into()));
        }
        let sizes = kv
            .remove("sizes")
            .ok_or_else(|| Error::Config("benchmark spec needs sizes".into()))?;
        let sizes = list(&sizes)
            .map(|item| {
                let parts: Vec<usize> = item
                    .split('-')
                    .map(|x| parse_value("sizes", x.trim()))
                    .collect::<Result<_>>()?;
                let cell = match parts[..] {
                    [n, n_g] => Cell { n, n_g, n_s: None },
                    [n, n_g, n_s] => Cell { n, n_g, n_s: Some(n_s) },
                    _ => return Err(Error::Config(format!("size {item:?} is not N-Ng or N-Ng-Ns"))),
                };
                if cell.n_g == 0 || cell.n_g > cell.n {
                    return Err(Error::Config(format!("size {item:?} needs 1 <= Ng <= N")));
                }
                Ok(cell)
            })
            .collect::<Result<Vec<_>>>()?;
        let methods = match kv.remove("methods") {
            Some(m) => list(&m).map(str::parse).collect::<Result<Vec<Method>>>()?,
            None => vec![Method::LssaRandom, Method::LssaMis, Method::LssaMisRandom],
        };
        let seeds = match kv.remove("seeds") {
            Some(s) => parse_seeds(&s)?,
            None => vec![0],
        };
        for key in ["method", "ng", "ns", "seed"] {
            if kv.get(key).is_some() {
                return Err(Error::Config(format!("{key} is set per cell in a benchmark spec")));
            }
        }
        let run = RunConfig::from_key_values(&kv)?;
        if sizes.is_empty() || methods.is_empty() || seeds.is_empty() {
            return Err(Error::Config("benchmark spec needs sizes, methods and seeds".into()));
        }
        Ok(BenchmarkSpec {
            sizes,
            methods,
            seeds,
            run,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::parse(&text)
    }
}

fn list(s: &str) -> impl Iterator<Item = &str> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty())
}

fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = s.split_once("..") {
        let (a, b): (u64, u64) = (parse_value("seeds", a.trim())?, parse_value("seeds", b.trim())?);
        return Ok((a..b).collect());
    }
    list(s).map(|x| parse_value("seeds", x)).collect()
}

/// One pipeline run of a benchmark.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub ng: usize,
    pub method: Method,
    pub seed: u64,
    pub r_ar: Option<f64>,
    pub energy: f64,
    pub classical_energy: f64,
    pub ns_mis: usize,
    pub ns_po: usize,
    pub wall_time_ms: u64,
}

/// Per `(cell, method)` aggregate over seeds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchSummary {
    pub tick: String,
    pub method: Method,
    pub median_r_ar: Option<f64>,
    pub best_r_ar: Option<f64>,
    pub median_ns_mis: f64,
    pub median_ns_po: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchRow>,
    pub summary: Vec<BenchSummary>,
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[mid] } else { (v[mid - 1] + v[mid]) / 2.0 })
}

/// Runs every `(cell, method, seed)` combination on the first `N` assets.
///
/// The baseline energy is computed once per cell. Rows come back in spec
/// order whatever the scheduling.
pub fn run_benchmark(spec: &BenchmarkSpec, market: &MarketModel) -> Result<BenchmarkTable> {
    let max_n = spec.sizes.iter().map(|c| c.n).max().unwrap_or(0);
    if max_n > market.n() {
        return Err(Error::Config(format!(
            "benchmark needs {max_n} assets, market has {}",
            market.n()
        )));
    }
    let gamma = PortfolioConfig::new(spec.run.gamma)?;
    let mut jobs = Vec::new();
    for cell in &spec.sizes {
        let m = market.head(cell.n)?;
        let p = build_portfolio_qubo(&m, &gamma).to_ising();
        let classical = classical_baseline(&p)?.energy();
        for &method in &spec.methods {
            for &seed in &spec.seeds {
                let run = RunConfig {
                    method,
                    ng: Some(cell.n_g),
                    ns: Some(cell.n_s.unwrap_or(cell.n.div_ceil(2))),
                    seed: Some(seed),
                    ..spec.run.clone()
                };
                let (params, mut settings) = run.resolve(cell.n)?;
                settings.classical_energy = Some(classical);
                jobs.push((*cell, m.clone(), params, settings));
            }
        }
    }
    let rows = jobs
        .par_iter()
        .map(|(cell, m, params, settings)| {
            let r = run_method(m, params, settings)?;
            log::info!("{} {} seed {}: r_ar {:?}", cell.tick(), params.method, settings.seed, r.r_ar);
            Ok(BenchRow {
                n: cell.n,
                ng: cell.n_g,
                method: params.method,
                seed: settings.seed,
                r_ar: r.r_ar,
                energy: r.energy,
                classical_energy: r.classical_energy,
                ns_mis: r.samples.mis,
                ns_po: r.samples.po,
                wall_time_ms: r.wall_time_ms,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut summary = Vec::new();
    for cell in &spec.sizes {
        for &method in &spec.methods {
            let group: Vec<&BenchRow> = rows
                .iter()
                .filter(|r| r.n == cell.n && r.ng == cell.n_g && r.method == method)
                .collect();
            let ratios: Vec<f64> = group.iter().filter_map(|r| r.r_ar).collect();
            let mis: Vec<f64> = group.iter().map(|r| r.ns_mis as f64).collect();
            let po: Vec<f64> = group.iter().map(|r| r.ns_po as f64).collect();
            summary.push(BenchSummary {
                tick: cell.tick(),
                method,
                median_r_ar: median(&ratios),
                best_r_ar: ratios.iter().copied().reduce(f64::max),
                median_ns_mis: median(&mis).unwrap_or(0.0),
                median_ns_po: median(&po).unwrap_or(0.0),
            });
        }
    }
    Ok(BenchmarkTable { rows, summary })
}

pub fn write_benchmark_csv(rows: &[BenchRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record([
        "n",
        "ng",
        "method",
        "seed",
        "r_ar",
        "energy",
        "classical_energy",
        "ns_mis",
        "ns_po",
        "wall_time_ms",
    ])
    .map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            r.ng.to_string(),
            r.method.to_string(),
            r.seed.to_string(),
            r.r_ar.map(|x| x.to_string()).unwrap_or_default(),
            r.energy.to_string(),
            r.classical_energy.to_string(),
            r.ns_mis.to_string(),
            r.ns_po.to_string(),
            r.wall_time_ms.to_string(),
        ])
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub label: String,
    #[serde(rename = "return")]
    pub ret: f64,
    pub volatility: f64,
}

/// Return/volatility points: `n_random` uniformly random non-empty
/// selections (label `random`), every single asset (label `asset`), then one
/// point per report labelled with its method. Reports that select nothing are
/// skipped.
pub fn frontier_scatter(
    m: &MarketModel,
    n_random: usize,
    seed: u64,
    reports: &[PipelineReport],
) -> Result<Vec<FrontierPoint>> {
    let n = m.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(n_random + n + reports.len());
    let mut selection = vec![0u8; n];
    while points.len() < n_random {
        selection.iter_mut().for_each(|x| *x = u8::from(rng.gen::<bool>()));
        if selection.iter().all(|&x| x == 0) {
            continue;
        }
        points.push(point("random", &portfolio_stats(m, &selection)?));
    }
    for i in 0..n {
        let mut single = vec![0u8; n];
        single[i] = 1;
        points.push(point("asset", &portfolio_stats(m, &single)?));
    }
    for r in reports {
        if r.selected.iter().all(|&x| x == 0) {
            log::warn!("skipping {} report with an empty selection", r.method);
            continue;
        }
        points.push(point(&r.method, &portfolio_stats(m, &r.selected)?));
    }
    Ok(points)
}

fn point(label: &str, s: &crate::market::PortfolioStats) -> FrontierPoint {
    FrontierPoint {
        label: label.to_string(),
        ret: s.ret,
        volatility: s.volatility,
    }
}

pub fn write_frontier_csv(points: &[FrontierPoint], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(["label", "return", "volatility"])
        .map_err(|e| csv_error(path, e))?;
    for p in points {
        w.write_record([p.label.clone(), p.ret.to_string(), p.volatility.to_string()])
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lssa::SampleCounts;
    use crate::market::synthesize_market;

    fn model(n: usize, seed: u64) -> MarketModel {
        MarketModel::from_prices(&synthesize_market(n, seed, 2).unwrap()).unwrap()
    }

    #[test]
    fn baseline_threshold() {
        let p = IsingProblem::with_fields(vec![0.1; 19]).unwrap();
        assert_eq!(classical_baseline(&p).unwrap().solver_name(), "exact");
        let p = IsingProblem::with_fields(vec![0.1; 20]).unwrap();
        assert_eq!(classical_baseline(&p).unwrap().solver_name(), "tabu");
        let p = IsingProblem::with_fields(vec![0.1; 8]).unwrap();
        assert_eq!(classical_baseline(&p).unwrap().solver_name(), "exact");
    }

    #[test]
    fn ratios() {
        assert_eq!(approximation_ratio(-1.3, -1.3).unwrap(), 1.0);
        assert!((approximation_ratio(-0.9, -1.0).unwrap() - 0.9).abs() < 1e-15);
        assert!(matches!(approximation_ratio(-1.0, 0.0), Err(Error::UndefinedRatio(_))));
    }

    #[test]
    fn spec_parsing() {
        let s = BenchmarkSpec::parse("sizes = 8-4, 16-8-4\nmethods = lssa_random, lssa-mis\nseeds = 0..3\nsolver = exact\n")
            .unwrap();
        assert_eq!(s.sizes[1], Cell { n: 16, n_g: 8, n_s: Some(4) });
        assert_eq!(s.methods, vec![Method::LssaRandom, Method::LssaMis]);
        assert_eq!(s.seeds, vec![0, 1, 2]);
        assert!(matches!(BenchmarkSpec::parse(""), Err(Error::Config(_))));
        assert!(matches!(BenchmarkSpec::parse("# nothing\n"), Err(Error::Config(_))));
        assert!(BenchmarkSpec::parse("sizes = 4-8").is_err());
    }

    #[test]
    fn single_cell_ratio_is_bounded() {
        let spec = BenchmarkSpec::parse("sizes = 8-4\nmethods = lssa_random\nseeds = 0, 1\nsolver = exact").unwrap();
        let t = run_benchmark(&spec, &model(8, 3)).unwrap();
        assert_eq!(t.rows.len(), 2);
        for r in &t.rows {
            let ratio = r.r_ar.unwrap();
            assert!(ratio > 0.0 && ratio <= 1.0 + 1e-12, "{ratio}");
        }
        assert_eq!(t.summary.len(), 1);
        assert_eq!(t.summary[0].tick, "8-4");
    }

    #[test]
    fn benchmark_is_deterministic_and_writes_csv() {
        let spec =
            BenchmarkSpec::parse("sizes = 8-4\nmethods = lssa-random, lssa-mis, lssa-mis-random\nseeds = 0..2\nsolver = exact")
                .unwrap();
        let m = model(8, 4);
        let a = run_benchmark(&spec, &m).unwrap();
        let b = run_benchmark(&spec, &m).unwrap();
        assert_eq!(a.rows.len(), 6);
        let strip = |t: &BenchmarkTable| t.rows.iter().map(|r| (r.method, r.seed, r.energy)).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bench.csv");
        write_benchmark_csv(&a.rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("n,ng,method,seed,r_ar,energy,classical_energy,ns_mis,ns_po,wall_time_ms\n"));
        assert_eq!(text.lines().count(), 7);
    }

    fn report(selected: Vec<u8>) -> PipelineReport {
        PipelineReport {
            method: "lssa-mis".into(),
            selected,
            energy: -1.0,
            classical_energy: -1.0,
            r_ar: Some(1.0),
            samples: SampleCounts::default(),
            seed: 0,
            wall_time_ms: 0,
            config: None,
        }
    }

    #[test]
    fn frontier_counts_and_report_point() {
        let m = model(6, 1);
        let sel = vec![1, 0, 1, 0, 0, 1];
        let pts = frontier_scatter(&m, 0, 0, &[report(sel.clone())]).unwrap();
        assert_eq!(pts.len(), 7);
        let stats = portfolio_stats(&m, &sel).unwrap();
        let last = pts.last().unwrap();
        assert_eq!((last.ret, last.volatility), (stats.ret, stats.volatility));
        assert_eq!(last.label, "lssa-mis");

        let pts = frontier_scatter(&m, 50, 2, &[report(vec![0; 6])]).unwrap();
        assert_eq!(pts.iter().filter(|p| p.label == "random").count(), 50);
        assert_eq!(pts.len(), 56);
        assert!(pts.iter().all(|p| p.volatility >= 0.0));
    }
}
