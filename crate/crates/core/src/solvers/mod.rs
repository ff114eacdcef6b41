//! Classical ground-state search for Ising problems.
//!
//! Three solvers share one result type: exhaustive enumeration (the oracle
//! for small problems), simulated annealing, and tabu search. All of them
//! track local fields `f_i = h_i + sum_j J_ij z_j` so a single flip costs
//! `O(n)`: flipping `z_i` changes the energy by `-2 z_i f_i`.

mod anneal;
mod exhaustive;
mod tabu;

pub use anneal::{solve_sa, AnnealSchedule};
pub use exhaustive::{solve_exhaustive, MAX_EXHAUSTIVE_SPINS};
pub use tabu::{solve_tabu, TabuParams};

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::qubo::{IsingProblem, SpinConfig, ENERGY_TOL};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolveResult {
    config: SpinConfig,
    energy: f64,
    solver_name: String,
    evaluations: u64,
}

impl SolveResult {
    /// Evaluates `config` on `problem` so the stored energy always matches it.
    pub fn evaluate(
        problem: &IsingProblem,
        config: SpinConfig,
        solver_name: &str,
        evaluations: u64,
    ) -> Result<Self> {
        let energy = problem.energy(&config)?;
        Ok(SolveResult {
            config,
            energy,
            solver_name: solver_name.to_string(),
            evaluations,
        })
    }

    pub fn config(&self) -> &SpinConfig {
        &self.config
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn solver_name(&self) -> &str {
        &self.solver_name
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }
}

/// Lower energy wins; energies within [`ENERGY_TOL`] tie and fall back to the
/// lexicographically smaller spin vector.
pub(crate) fn compare_candidates(a: (f64, &[i8]), b: (f64, &[i8])) -> Ordering {
    if a.0 < b.0 - ENERGY_TOL {
        Ordering::Less
    } else if b.0 < a.0 - ENERGY_TOL {
        Ordering::Greater
    } else {
        a.1.cmp(b.1)
    }
}

/// Which sub-problem solver a pipeline stage uses.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "lowercase")]
pub enum SolverChoice {
    Exact,
    Sa(AnnealSchedule),
    Tabu(TabuParams),
}

impl Default for SolverChoice {
    fn default() -> Self {
        SolverChoice::Sa(AnnealSchedule::default())
    }
}

impl SolverChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::Exact => "exact",
            SolverChoice::Sa(_) => "sa",
            SolverChoice::Tabu(_) => "tabu",
        }
    }

    /// Runs the solver with `seed` in place of any configured seed.
    pub fn solve(&self, problem: &IsingProblem, seed: u64) -> Result<SolveResult> {
        match self {
            SolverChoice::Exact => solve_exhaustive(problem),
            SolverChoice::Sa(schedule) => solve_sa(problem, &AnnealSchedule { seed, ..*schedule }),
            SolverChoice::Tabu(params) => solve_tabu(problem, &TabuParams { seed, ..*params }),
        }
    }
}

/// SplitMix64 mix of `(seed, stream)`, used to give every sub-task its own
/// reproducible seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Dense symmetric couplings with cached local fields for one configuration.
pub(crate) struct LocalFields<'a> {
    n: usize,
    coupling: &'a [f64],
    pub spins: Vec<i8>,
    pub fields: Vec<f64>,
    pub energy: f64,
}

/// Symmetric `n * n` coupling buffer for a problem.
pub(crate) fn symmetric_couplings(p: &IsingProblem) -> Vec<f64> {
    let n = p.n();
    let mut c = vec![0.0; n * n];
    for (i, j, v) in p.couplings() {
        c[i * n + j] = v;
        c[j * n + i] = v;
    }
    c
}

impl<'a> LocalFields<'a> {
    pub fn new(p: &IsingProblem, coupling: &'a [f64], spins: Vec<i8>) -> Self {
        let n = p.n();
        let fields = (0..n)
            .map(|i| {
                let row = &coupling[i * n..(i + 1) * n];
                p.h()[i]
                    + row
                        .iter()
                        .zip(&spins)
                        .map(|(c, &s)| c * f64::from(s))
                        .sum::<f64>()
            })
            .collect();
        let energy = p.energy_unchecked(&spins);
        LocalFields {
            n,
            coupling,
            spins,
            fields,
            energy,
        }
    }

    /// Energy change from flipping spin `i`.
    #[inline]
    pub fn delta(&self, i: usize) -> f64 {
        -2.0 * f64::from(self.spins[i]) * self.fields[i]
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        self.energy += self.delta(i);
        self.spins[i] = -self.spins[i];
        let step = 2.0 * f64::from(self.spins[i]);
        let row = &self.coupling[i * self.n..(i + 1) * self.n];
        for (f, c) in self.fields.iter_mut().zip(row) {
            *f += step * c;
        }
    }

    /// Flips the best improving spin until none improves.
    pub fn descend(&mut self) -> u64 {
        let mut evaluations = 0;
        loop {
            evaluations += self.n as u64;
            let (best, delta) = (0..self.n)
                .map(|i| (i, self.delta(i)))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty problem");
            if delta >= -1e-15 {
                return evaluations;
            }
            self.flip(best);
        }
    }
}
