//! Decomposition pipeline: sample sub-systems, solve each one on its
//! restricted problem, and recombine the partial solutions with the
//! amplitude-weighted sign rule.
//!
//! Three sampling strategies are provided:
//!
//! * `random`: whole-population shuffles cut into chunks of `n_g`;
//! * `mis`: one group per vertex of a maximal independent set of the
//!   correlation graph, holding the vertex and its strongest neighbours;
//! * `mis_random`: as `mis`, but the independent set itself is found by a
//!   randomly sampled decomposition of the MIS problem.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::{approximation_ratio, classical_baseline};
use crate::error::{Error, Result};
use crate::graph::{IndependentSet, MarketGraph};
use crate::market::{build_portfolio_qubo, MarketModel, PortfolioConfig};
use crate::qubo::{IsingProblem, SpinConfig};
use crate::solvers::{derive_seed, solve_exhaustive, solve_tabu, SolverChoice, TabuParams, MAX_EXHAUSTIVE_SPINS};
use crate::vqe::{optimize_coefficients, RecombinerConfig};

const MIS_STAGE: u64 = 1;
const PO_STAGE: u64 = 2;
const SAMPLING_STREAM: u64 = 1 << 40;
const RECOMBINE_STREAM: u64 = 1 << 41;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMethod {
    Random,
    Mis,
    MisRandom,
}

/// Sub-systems as index lists over a problem of size `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplePlan {
    subsystems: Vec<Vec<usize>>,
    n: usize,
    n_g: usize,
    method: SampleMethod,
}

impl SamplePlan {
    /// Checks that every list holds at most `n_g` distinct in-range indices and
    /// that together they cover `0..n`.
    pub fn new(subsystems: Vec<Vec<usize>>, n: usize, n_g: usize, method: SampleMethod) -> Result<Self> {
        let mut covered = vec![false; n];
        for sites in &subsystems {
            if sites.is_empty() || sites.len() > n_g {
                return Err(Error::Config(format!(
                    "sub-system of size {} outside 1..={n_g}",
                    sites.len()
                )));
            }
            let mut seen = std::collections::HashSet::new();
            for &s in sites {
                if s >= n {
                    return Err(Error::Index(format!("site {s} out of range for n = {n}")));
                }
                if !seen.insert(s) {
                    return Err(Error::Index(format!("site {s} repeated in a sub-system")));
                }
                covered[s] = true;
            }
        }
        let uncovered: Vec<usize> = (0..n).filter(|&i| !covered[i]).collect();
        if !uncovered.is_empty() {
            return Err(Error::Coverage(format!("variables {uncovered:?} are not sampled")));
        }
        Ok(SamplePlan {
            subsystems,
            n,
            n_g,
            method,
        })
    }

    /// A single sub-system holding every variable.
    pub fn full(n: usize, method: SampleMethod) -> Self {
        SamplePlan {
            subsystems: vec![(0..n).collect()],
            n,
            n_g: n,
            method,
        }
    }

    pub fn subsystems(&self) -> &[Vec<usize>] {
        &self.subsystems
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn n_g(&self) -> usize {
        self.n_g
    }

    pub fn n_s(&self) -> usize {
        self.subsystems.len()
    }

    pub fn method(&self) -> SampleMethod {
        self.method
    }

    /// How many sub-systems contain each variable.
    pub fn coverage_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for sites in &self.subsystems {
            sites.iter().for_each(|&s| counts[s] += 1);
        }
        counts
    }

    /// Sites sorted within each sub-system and repeated sub-systems dropped,
    /// keeping first occurrences in order.
    pub fn canonical(&self) -> Self {
        let mut out: Vec<Vec<usize>> = Vec::with_capacity(self.subsystems.len());
        for sites in &self.subsystems {
            let mut s = sites.clone();
            s.sort_unstable();
            if !out.contains(&s) {
                out.push(s);
            }
        }
        SamplePlan {
            subsystems: out,
            ..self.clone()
        }
    }
}

/// `n_s` groups of exactly `n_g` distinct variables cut from a stream of
/// whole-population shuffles.
///
/// When a group straddles two shuffles, draws from the fresh shuffle that
/// repeat a member of the group are put back at the head of the stream.
/// Every variable therefore appears at least `floor(n_s * n_g / n)` times.
pub fn sample_random(n: usize, n_g: usize, n_s: usize, seed: u64) -> Result<SamplePlan> {
    if n == 0 || n_g == 0 || n_g > n {
        return Err(Error::Config(format!("need 1 <= n_g <= n, got n_g = {n_g}, n = {n}")));
    }
    if n_s * n_g < n {
        return Err(Error::Coverage(format!(
            "{n_s} sub-systems of size {n_g} cannot cover {n} variables"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool: VecDeque<usize> = VecDeque::with_capacity(2 * n);
    let mut subsystems = Vec::with_capacity(n_s);
    for _ in 0..n_s {
        let mut group: Vec<usize> = Vec::with_capacity(n_g);
        let mut deferred = Vec::new();
        while group.len() < n_g {
            let v = match pool.pop_front() {
                Some(v) => v,
                None => {
                    let mut perm: Vec<usize> = (0..n).collect();
                    perm.shuffle(&mut rng);
                    pool.extend(perm);
                    continue;
                }
            };
            if group.contains(&v) {
                deferred.push(v);
            } else {
                group.push(v);
            }
        }
        for v in deferred.into_iter().rev() {
            pool.push_front(v);
        }
        subsystems.push(group);
    }
    SamplePlan::new(subsystems, n, n_g, SampleMethod::Random)
}

/// One group per placeholder in `mis`: the placeholder followed by its
/// neighbours in order of decreasing edge weight, truncated to `n_g`.
///
/// Variables left out by the truncation are assigned to their most strongly
/// connected covered neighbour (the anchor) and packed into overflow groups of
/// the anchor plus up to `n_g - 1` of them. A variable without any covered
/// neighbour gets a group of its own.
pub fn sample_mis(g: &MarketGraph, mis: &IndependentSet, n_g: usize) -> Result<SamplePlan> {
    if n_g == 0 {
        return Err(Error::Config("n_g must be at least 1".into()));
    }
    let n = g.n();
    let by_weight = |v: usize| {
        let mut nb = g.neighbors(v).to_vec();
        nb.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        nb
    };
    let mut subsystems: Vec<Vec<usize>> = Vec::new();
    let mut covered = vec![false; n];
    for &p in &mis.members {
        let mut group = vec![p];
        group.extend(by_weight(p).into_iter().take(n_g - 1).map(|(v, _)| v));
        group.iter().for_each(|&v| covered[v] = true);
        subsystems.push(group);
    }

    let mut orphans: Vec<(Option<usize>, usize)> = (0..n)
        .filter(|&v| !covered[v])
        .map(|v| {
            let anchor = by_weight(v).into_iter().find(|&(u, _)| covered[u]).map(|(u, _)| u);
            (anchor, v)
        })
        .collect();
    orphans.sort_unstable();
    let room = if n_g > 1 { n_g - 1 } else { 1 };
    for chunk in orphans.chunk_by(|a, b| a.0 == b.0) {
        match chunk[0].0 {
            Some(anchor) if n_g > 1 => {
                for part in chunk.chunks(room) {
                    let mut group = vec![anchor];
                    group.extend(part.iter().map(|&(_, v)| v));
                    subsystems.push(group);
                }
            }
            _ => subsystems.extend(chunk.iter().map(|&(_, v)| vec![v])),
        }
    }
    SamplePlan::new(subsystems, n, n_g, SampleMethod::Mis)
}

/// A sub-system's ground state embedded in the full variable space.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubsystemSolution {
    sites: Vec<usize>,
    partial: Vec<i8>,
    energy: f64,
}

impl SubsystemSolution {
    /// `partial` must be `±1` on `sites` and `0` elsewhere.
    pub fn new(sites: Vec<usize>, partial: Vec<i8>, energy: f64) -> Result<Self> {
        let mut on_site = vec![false; partial.len()];
        for &s in &sites {
            if s >= partial.len() {
                return Err(Error::Index(format!("site {s} out of range")));
            }
            on_site[s] = true;
        }
        for (i, &z) in partial.iter().enumerate() {
            let ok = if on_site[i] { z == 1 || z == -1 } else { z == 0 };
            if !ok {
                return Err(Error::InvalidProblem(format!("partial value {z} at site {i}")));
            }
        }
        Ok(SubsystemSolution { sites, partial, energy })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn partial(&self) -> &[i8] {
        &self.partial
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }
}

/// Pipeline labels accepted by the CLI and the benchmark harness.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    LssaRandom,
    LssaMis,
    LssaMisRandom,
    Exact,
    Tabu,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::LssaRandom,
        Method::LssaMis,
        Method::LssaMisRandom,
        Method::Exact,
        Method::Tabu,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::LssaRandom => "lssa-random",
            Method::LssaMis => "lssa-mis",
            Method::LssaMisRandom => "lssa-mis-random",
            Method::Exact => "exact",
            Method::Tabu => "tabu",
        }
    }

    /// Whether the method samples sub-systems at random at some stage.
    pub fn samples_randomly(self) -> bool {
        matches!(self, Method::LssaRandom | Method::LssaMisRandom)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    /// Accepts `lssa-random` as well as `lssa_random`.
    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('_', "-");
        Method::ALL
            .into_iter()
            .find(|m| m.label() == norm)
            .ok_or_else(|| Error::Config(format!("unknown method {s:?}")))
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Sub-systems used by each stage.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleCounts {
    pub mis: usize,
    pub po: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub method: String,
    pub selected: Vec<u8>,
    pub energy: f64,
    pub classical_energy: f64,
    /// `energy / classical_energy`; absent when the baseline is not negative.
    pub r_ar: Option<f64>,
    pub samples: SampleCounts,
    pub seed: u64,
    pub wall_time_ms: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<serde_json::Value>,
}

/// Solver, recombiner and seed shared by every stage of a run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PipelineSettings {
    pub solver: SolverChoice,
    pub recombiner: RecombinerConfig,
    pub seed: u64,
    /// Reuse a known baseline energy instead of recomputing it.
    pub classical_energy: Option<f64>,
}

struct StageOutcome {
    config: SpinConfig,
    energy: f64,
    n_s: usize,
}

fn solve_stage(p: &IsingProblem, plan: &SamplePlan, s: &PipelineSettings, stage_seed: u64) -> Result<StageOutcome> {
    if plan.n() != p.n() {
        return Err(Error::Dimension {
            expected: p.n(),
            got: plan.n(),
        });
    }
    let plan = plan.canonical();
    let n = p.n();
    let solutions = plan
        .subsystems()
        .par_iter()
        .enumerate()
        .map(|(idx, sites)| {
            let sub = p.restrict(sites)?;
            let r = s.solver.solve(&sub, derive_seed(stage_seed, idx as u64))?;
            let mut partial = vec![0i8; n];
            for (&site, &z) in sites.iter().zip(r.config().values()) {
                partial[site] = z;
            }
            SubsystemSolution::new(sites.clone(), partial, r.energy())
        })
        .collect::<Result<Vec<_>>>()?;
    let recombine_seed = s
        .recombiner
        .seed
        .unwrap_or_else(|| derive_seed(stage_seed, RECOMBINE_STREAM));
    let r = optimize_coefficients(&solutions, p, &s.recombiner, recombine_seed)?;
    Ok(StageOutcome {
        config: r.config,
        energy: r.energy,
        n_s: plan.n_s(),
    })
}

fn finish(
    p: &IsingProblem,
    method: &str,
    config: &SpinConfig,
    samples: SampleCounts,
    s: &PipelineSettings,
    started: Instant,
) -> Result<PipelineReport> {
    let energy = p.energy(config)?;
    let classical_energy = match s.classical_energy {
        Some(e) => e,
        None => classical_baseline(p)?.energy(),
    };
    Ok(PipelineReport {
        method: method.to_string(),
        selected: config.to_binary(),
        energy,
        classical_energy,
        r_ar: approximation_ratio(energy, classical_energy).ok(),
        samples,
        seed: s.seed,
        wall_time_ms: started.elapsed().as_millis() as u64,
        config: None,
    })
}

fn method_label(m: SampleMethod) -> &'static str {
    match m {
        SampleMethod::Random => Method::LssaRandom.label(),
        SampleMethod::Mis => Method::LssaMis.label(),
        SampleMethod::MisRandom => Method::LssaMisRandom.label(),
    }
}

/// Solves every sub-system of `plan` on its restriction of `p` and combines
/// the results. Identical sub-systems are solved once.
pub fn run_lssa(p: &IsingProblem, plan: &SamplePlan, s: &PipelineSettings) -> Result<PipelineReport> {
    let started = Instant::now();
    let out = solve_stage(p, plan, s, derive_seed(s.seed, PO_STAGE))?;
    let samples = SampleCounts { mis: 0, po: out.n_s };
    finish(p, method_label(plan.method()), &out.config, samples, s, started)
}

fn portfolio_problem(m: &MarketModel, gamma: f64) -> Result<IsingProblem> {
    Ok(build_portfolio_qubo(m, &PortfolioConfig::new(gamma)?).to_ising())
}

/// Random sub-systems applied directly to the portfolio problem.
pub fn run_random_portfolio(
    m: &MarketModel,
    gamma: f64,
    n_g: usize,
    n_s: usize,
    s: &PipelineSettings,
) -> Result<PipelineReport> {
    let started = Instant::now();
    let plan = sample_random(m.n(), n_g, n_s, derive_seed(s.seed, SAMPLING_STREAM))?;
    let p = portfolio_problem(m, gamma)?;
    let out = solve_stage(&p, &plan, s, derive_seed(s.seed, PO_STAGE))?;
    let samples = SampleCounts { mis: 0, po: out.n_s };
    finish(&p, Method::LssaRandom.label(), &out.config, samples, s, started)
}

/// Level 1: the independent set is found by solving the whole MIS problem.
pub fn run_mis_portfolio(
    m: &MarketModel,
    alpha: f64,
    gamma: f64,
    n_g: usize,
    s: &PipelineSettings,
) -> Result<PipelineReport> {
    let started = Instant::now();
    let g = MarketGraph::from_model(m, alpha)?;
    let plan = SamplePlan::full(m.n(), SampleMethod::Mis);
    let mis_settings = PipelineSettings {
        solver: mis_solver(&s.solver, m.n()),
        ..s.clone()
    };
    mis_then_portfolio(m, &g, &plan, gamma, n_g, &mis_settings, s, Method::LssaMis, started)
}

/// Level 2: the MIS problem is itself decomposed into `n_s_mis` random
/// sub-systems of size `n_g`.
pub fn run_mis_random_portfolio(
    m: &MarketModel,
    alpha: f64,
    gamma: f64,
    n_g: usize,
    n_s_mis: usize,
    s: &PipelineSettings,
) -> Result<PipelineReport> {
    let started = Instant::now();
    let plan = sample_random(m.n(), n_g, n_s_mis, derive_seed(s.seed, SAMPLING_STREAM))?;
    let g = MarketGraph::from_model(m, alpha)?;
    mis_then_portfolio(m, &g, &plan, gamma, n_g, s, s, Method::LssaMisRandom, started)
}

/// The exhaustive solver cannot take the whole MIS problem beyond its size
/// limit; tabu search stands in for it there.
fn mis_solver(solver: &SolverChoice, n: usize) -> SolverChoice {
    match solver {
        SolverChoice::Exact if n > MAX_EXHAUSTIVE_SPINS => {
            log::info!("MIS problem with {n} vertices exceeds exhaustive limit, using tabu search");
            SolverChoice::Tabu(TabuParams::default())
        }
        other => other.clone(),
    }
}

#[allow(clippy::too_many_arguments)]
fn mis_then_portfolio(
    m: &MarketModel,
    g: &MarketGraph,
    mis_plan: &SamplePlan,
    gamma: f64,
    n_g: usize,
    mis_settings: &PipelineSettings,
    s: &PipelineSettings,
    method: Method,
    started: Instant,
) -> Result<PipelineReport> {
    let mis_problem = g.mis_qubo().to_ising();
    let mis_out = solve_stage(&mis_problem, mis_plan, mis_settings, derive_seed(s.seed, MIS_STAGE))?;
    let mis = g.repair_independent_set(&mis_out.config.to_binary())?;
    log::debug!("independent set of size {} from MIS energy {}", mis.len(), mis_out.energy);
    let plan = sample_mis(g, &mis, n_g)?;
    let p = portfolio_problem(m, gamma)?;
    let out = solve_stage(&p, &plan, s, derive_seed(s.seed, PO_STAGE))?;
    let samples = SampleCounts {
        mis: mis_out.n_s,
        po: out.n_s,
    };
    finish(&p, method.label(), &out.config, samples, s, started)
}

/// Stage parameters for [`run_method`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodParams {
    pub method: Method,
    pub gamma: f64,
    pub alpha: f64,
    pub n_g: usize,
    /// Sub-systems for whichever stage samples at random.
    pub n_s: usize,
}

/// Runs one of the five pipelines on the portfolio problem of `m`.
///
/// `exact` and `tabu` solve the full problem directly and report one
/// sub-system.
pub fn run_method(m: &MarketModel, params: &MethodParams, s: &PipelineSettings) -> Result<PipelineReport> {
    let MethodParams {
        method,
        gamma,
        alpha,
        n_g,
        n_s,
    } = *params;
    match method {
        Method::LssaRandom => run_random_portfolio(m, gamma, n_g, n_s, s),
        Method::LssaMis => run_mis_portfolio(m, alpha, gamma, n_g, s),
        Method::LssaMisRandom => run_mis_random_portfolio(m, alpha, gamma, n_g, n_s, s),
        Method::Exact | Method::Tabu => {
            let started = Instant::now();
            let p = portfolio_problem(m, gamma)?;
            let r = if method == Method::Exact {
                solve_exhaustive(&p)?
            } else {
                let params = match &s.solver {
                    SolverChoice::Tabu(t) => *t,
                    _ => TabuParams::default(),
                };
                solve_tabu(&p, &TabuParams { seed: s.seed, ..params })?
            };
            let samples = SampleCounts { mis: 0, po: 1 };
            finish(&p, method.label(), r.config(), samples, s, started)
        }
    }
}
