//! Amplitude-encoded recombination of sub-system solutions.
//!
//! The `N_s` combination weights are the first `N_s` amplitudes of a
//! `ceil(log2 N_s)`-qubit real statevector produced by a fixed ansatz: per
//! layer, a Y rotation on every qubit followed by a CNOT chain
//! `0 -> 1 -> ... -> q-1`. The angles are tuned by COBYLA to minimize the
//! full-problem energy of the sign of the weighted sum of partial solutions.
//! Because the cost is a classical energy it is piecewise constant in the
//! angles, so the optimizer's best-seen point is kept rather than its final
//! iterate.

use std::cell::RefCell;
use std::fmt;
use std::str::FromStr;

use rand::distributions::WeightedIndex;
use rand::prelude::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lssa::SubsystemSolution;
use crate::qubo::{IsingProblem, SpinConfig};
use crate::solvers::derive_seed;

/// Customary shot count for sampled readout.
pub const STANDARD_SHOTS: usize = 2048;

const NORM_FLOOR: f64 = 1e-12;

/// Qubits needed to hold `n_s` amplitudes; zero for a single sub-system.
pub fn qubits_for(n_s: usize) -> usize {
    if n_s <= 1 {
        0
    } else {
        (usize::BITS - (n_s - 1).leading_zeros()) as usize
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzParams {
    theta: Vec<f64>,
    layers: usize,
    n_qubits: usize,
}

impl AnsatzParams {
    /// `theta[layer * n_qubits + qubit]` is the Y-rotation angle.
    pub fn new(theta: Vec<f64>, layers: usize, n_qubits: usize) -> Result<Self> {
        if theta.len() != layers * n_qubits {
            return Err(Error::Dimension {
                expected: layers * n_qubits,
                got: theta.len(),
            });
        }
        if n_qubits > 20 {
            return Err(Error::Config(format!("{n_qubits} qubits is beyond the simulator")));
        }
        Ok(AnsatzParams {
            theta,
            layers,
            n_qubits,
        })
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
}

/// Real amplitudes over `2^n_qubits` basis states; qubit `k` is bit `k` of the index.
#[derive(Clone, Debug, PartialEq)]
pub struct Statevector(Vec<f64>);

impl Statevector {
    pub fn new(amplitudes: Vec<f64>) -> Result<Self> {
        if !amplitudes.len().is_power_of_two() {
            return Err(Error::Dimension {
                expected: amplitudes.len().next_power_of_two(),
                got: amplitudes.len(),
            });
        }
        let norm = amplitudes.iter().map(|a| a * a).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidProblem(format!("statevector norm {norm} is not 1")));
        }
        Ok(Statevector(amplitudes))
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum::<f64>().sqrt()
    }
}

pub fn simulate_ansatz(p: &AnsatzParams) -> Statevector {
    let q = p.n_qubits;
    let mut amps = vec![0.0; 1 << q];
    amps[0] = 1.0;
    for layer in p.theta.chunks(q.max(1)).take(p.layers) {
        for (k, &angle) in layer.iter().enumerate() {
            apply_ry(&mut amps, k, angle);
        }
        for k in 1..q {
            apply_cnot(&mut amps, k - 1, k);
        }
    }
    Statevector(amps)
}

fn apply_ry(amps: &mut [f64], qubit: usize, angle: f64) {
    let (s, c) = (angle / 2.0).sin_cos();
    let bit = 1 << qubit;
    for i in (0..amps.len()).filter(|i| i & bit == 0) {
        let (a0, a1) = (amps[i], amps[i | bit]);
        amps[i] = c * a0 - s * a1;
        amps[i | bit] = s * a0 + c * a1;
    }
}

fn apply_cnot(amps: &mut [f64], control: usize, target: usize) {
    let (cb, tb) = (1 << control, 1 << target);
    for i in (0..amps.len()).filter(|i| i & cb != 0 && i & tb == 0) {
        amps.swap(i, i | tb);
    }
}

/// How amplitudes are read out of the statevector.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Shots {
    #[default]
    Exact,
    Count(usize),
}

impl fmt::Display for Shots {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shots::Exact => f.write_str("exact"),
            Shots::Count(n) => write!(f, "{n}"),
        }
    }
}

impl FromStr for Shots {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact" => Ok(Shots::Exact),
            other => match other.parse::<usize>() {
                Ok(n) if n > 0 => Ok(Shots::Count(n)),
                _ => Err(Error::Config(format!(
                    "shots must be \"exact\" or a positive integer, got {other:?}"
                ))),
            },
        }
    }
}

impl Serialize for Shots {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Shots::Exact => s.serialize_str("exact"),
            Shots::Count(n) => s.serialize_u64(*n as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Shots {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Count(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Count(n) if n > 0 => Ok(Shots::Count(n)),
            Raw::Count(_) => Err(serde::de::Error::custom("shots must be positive")),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Unit-norm combination weights, one per sub-system.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientVector(Vec<f64>);

impl CoefficientVector {
    pub fn uniform(n_s: usize) -> Self {
        CoefficientVector(vec![1.0 / (n_s as f64).sqrt(); n_s])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    fn normalized(mut c: Vec<f64>, n_s: usize) -> Result<Self> {
        let norm = c.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm < NORM_FLOOR {
            return Err(Error::DegenerateEncoding { n_s });
        }
        c.iter_mut().for_each(|a| *a /= norm);
        Ok(CoefficientVector(c))
    }
}

/// Reads the first `n_s` amplitudes and renormalizes them.
///
/// With `Shots::Count(k)` the magnitudes are estimated as the square root of
/// measured frequencies over `k` samples of the full register; signs are taken
/// from the exact amplitudes.
pub fn amplitudes_to_coefficients(
    v: &Statevector,
    n_s: usize,
    shots: Shots,
    rng: &mut impl Rng,
) -> Result<CoefficientVector> {
    let amps = v.amplitudes();
    if n_s == 0 || n_s > amps.len() {
        return Err(Error::Dimension {
            expected: amps.len(),
            got: n_s,
        });
    }
    if n_s == 1 {
        return Ok(CoefficientVector(vec![1.0]));
    }
    match shots {
        Shots::Exact => CoefficientVector::normalized(amps[..n_s].to_vec(), n_s),
        Shots::Count(k) => {
            let dist = WeightedIndex::new(amps.iter().map(|a| a * a))
                .map_err(|e| Error::InvalidProblem(format!("cannot sample statevector: {e}")))?;
            let mut counts = vec![0usize; amps.len()];
            for _ in 0..k {
                counts[dist.sample(rng)] += 1;
            }
            let c = (0..n_s)
                .map(|i| amps[i].signum() * (counts[i] as f64 / k as f64).sqrt())
                .collect();
            CoefficientVector::normalized(c, n_s)
        }
    }
}

/// Sign of the weighted sum of partial configurations; a zero sum maps to `-1`.
pub fn sign_combine(subsystems: &[SubsystemSolution], coefficients: &[f64], n: usize) -> SpinConfig {
    let mut acc = vec![0.0; n];
    for (sub, &c) in subsystems.iter().zip(coefficients) {
        for &site in sub.sites() {
            acc[site] += c * f64::from(sub.partial()[site]);
        }
    }
    SpinConfig::new_unchecked(acc.iter().map(|&s| if s > 1e-12 { 1 } else { -1 }).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecombinerConfig {
    pub layers: usize,
    /// Cost evaluations available to the optimizer.
    pub budget: usize,
    pub shots: Shots,
    /// Optimizer seed; derived from the pipeline seed when absent.
    pub seed: Option<u64>,
}

impl Default for RecombinerConfig {
    fn default() -> Self {
        RecombinerConfig {
            layers: 2,
            budget: 200,
            shots: Shots::Exact,
            seed: None,
        }
    }
}

impl RecombinerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 {
            return Err(Error::Config("vqe.layers must be at least 1".into()));
        }
        if self.budget == 0 {
            return Err(Error::Config("vqe.budget must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recombination {
    pub coefficients: CoefficientVector,
    pub config: SpinConfig,
    pub energy: f64,
    pub evaluations: usize,
    /// Best energy seen after each cost evaluation.
    pub trace: Vec<f64>,
}

struct Tracker {
    best: Option<(f64, CoefficientVector, SpinConfig)>,
    trace: Vec<f64>,
    rng: ChaCha8Rng,
}

impl Tracker {
    fn record(&mut self, energy: f64, c: CoefficientVector, z: SpinConfig) {
        if self.best.as_ref().is_none_or(|b| energy < b.0) {
            self.best = Some((energy, c, z));
        }
        let best = self.best.as_ref().map_or(energy, |b| b.0);
        self.trace.push(best);
    }
}

/// Tunes the ansatz angles to minimize the full-problem energy of the
/// sign-combined configuration.
///
/// The uniform weighting is evaluated first, then COBYLA runs from the zero
/// angles and from seeded random angles in `[-pi, pi)` until the evaluation
/// budget is spent. Returns the best configuration seen.
pub fn optimize_coefficients(
    subsystems: &[SubsystemSolution],
    full: &IsingProblem,
    cfg: &RecombinerConfig,
    seed: u64,
) -> Result<Recombination> {
    cfg.validate()?;
    let n = full.n();
    let n_s = subsystems.len();
    if n_s == 0 {
        return Err(Error::Recombination {
            uncovered: (0..n).collect(),
        });
    }
    let mut covered = vec![false; n];
    for sub in subsystems {
        if sub.partial().len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: sub.partial().len(),
            });
        }
        sub.sites().iter().for_each(|&s| covered[s] = true);
    }
    let uncovered: Vec<usize> = (0..n).filter(|&i| !covered[i]).collect();
    if !uncovered.is_empty() {
        return Err(Error::Recombination { uncovered });
    }

    let evaluate = |c: &CoefficientVector| {
        let z = sign_combine(subsystems, c.values(), n);
        (full.energy_unchecked(z.values()), z)
    };

    let uniform = CoefficientVector::uniform(n_s);
    let (energy, z) = evaluate(&uniform);
    let tracker = RefCell::new(Tracker {
        best: None,
        trace: Vec::new(),
        rng: ChaCha8Rng::seed_from_u64(derive_seed(seed, 0)),
    });
    tracker.borrow_mut().record(energy, uniform, z);

    let n_qubits = qubits_for(n_s);
    if n_qubits > 0 {
        let dim = cfg.layers * n_qubits;
        // worse than any real configuration
        let penalty = full.offset().abs() + full.energy_bound() + 1.0;
        let cost = |theta: &[f64], _: &mut ()| -> f64 {
            let params = AnsatzParams {
                theta: theta.to_vec(),
                layers: cfg.layers,
                n_qubits,
            };
            let state = simulate_ansatz(&params);
            let mut t = tracker.borrow_mut();
            let coeffs = amplitudes_to_coefficients(&state, n_s, cfg.shots, &mut t.rng);
            match coeffs {
                Ok(c) => {
                    let (e, z) = evaluate(&c);
                    t.record(e, c, z);
                    e
                }
                Err(_) => {
                    let best = t.best.as_ref().map_or(penalty, |b| b.0);
                    t.trace.push(best);
                    penalty
                }
            }
        };

        let mut start_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
        let bounds = vec![(-2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI); dim];
        let mut start = vec![0.0; dim];
        let mut first = true;
        loop {
            let used = tracker.borrow().trace.len();
            if used >= cfg.budget {
                break;
            }
            let remaining = cfg.budget - used;
            // the zero start gets half the budget, random restarts share the rest
            let slice = if first { (remaining / 2).max(1) } else { remaining };
            let before = used;
            let no_constraints: &[fn(&[f64], &mut ()) -> f64] = &[];
            let _ = cobyla::minimize(
                cost,
                &start,
                &bounds,
                no_constraints,
                (),
                slice,
                cobyla::RhoBeg::All(1.0),
                Some(cobyla::StopTols {
                    xtol_abs: vec![1e-4; dim],
                    ..cobyla::StopTols::default()
                }),
            );
            if tracker.borrow().trace.len() == before {
                break;
            }
            first = false;
            start = (0..dim)
                .map(|_| start_rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect();
        }
    }

    let tracker = tracker.into_inner();
    let (energy, coefficients, config) = tracker.best.expect("uniform point recorded");
    Ok(Recombination {
        coefficients,
        config,
        energy,
        evaluations: tracker.trace.len(),
        trace: tracker.trace,
    })
}
