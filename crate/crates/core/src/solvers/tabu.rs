use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{IsingProblem, SpinConfig, ENERGY_TOL};

use super::{symmetric_couplings, LocalFields, SolveResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabuParams {
    pub max_iter: usize,
    /// Iterations a flipped spin stays tabu; `None` picks `n / 2` capped at 20.
    /// Always clamped to `n - 1` so at least one move is admissible.
    pub tenure: Option<usize>,
    pub seed: u64,
}

impl Default for TabuParams {
    fn default() -> Self {
        TabuParams {
            max_iter: 5000,
            tenure: None,
            seed: 0,
        }
    }
}

impl TabuParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(Error::Config("tabu.max_iter must be at least 1".into()));
        }
        if self.tenure == Some(0) {
            return Err(Error::Config("tabu.tenure must be at least 1".into()));
        }
        Ok(())
    }

    pub fn effective_tenure(&self, n: usize) -> usize {
        self.tenure
            .unwrap_or((n / 2).clamp(1, 20))
            .min(n.saturating_sub(1))
    }
}

/// Steepest single-flip tabu search.
///
/// Each iteration flips the spin with the lowest energy change among the
/// admissible ones: not tabu, or tabu but leading below the best energy seen
/// (aspiration). Equal moves are chosen uniformly at random. After `10 n`
/// iterations (at least 50) without a new best, the search restarts from the
/// best configuration with `n / 4` random flips. Returns the best
/// configuration visited.
pub fn solve_tabu(p: &IsingProblem, params: &TabuParams) -> Result<SolveResult> {
    params.validate()?;
    let n = p.n();
    let tenure = params.effective_tenure(n);
    let coupling = symmetric_couplings(p);
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let init = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
    let mut state = LocalFields::new(p, &coupling, init);
    let mut best_energy = state.energy;
    let mut best = state.spins.clone();
    let mut tabu_until = vec![0usize; n];
    let stall_limit = (10 * n).max(50);
    let mut last_improvement = 0;

    for iter in 0..params.max_iter {
        if iter - last_improvement >= stall_limit {
            // restart from a perturbation of the incumbent
            let mut spins = best.clone();
            for _ in 0..(n / 4).max(1) {
                let k = rng.gen_range(0..n);
                spins[k] = -spins[k];
            }
            state = LocalFields::new(p, &coupling, spins);
            tabu_until.iter_mut().for_each(|t| *t = 0);
            last_improvement = iter;
        }
        let mut chosen: Option<usize> = None;
        let mut chosen_delta = f64::INFINITY;
        let mut ties = 0u32;
        for i in 0..n {
            let delta = state.delta(i);
            let aspirated = state.energy + delta < best_energy - ENERGY_TOL;
            if iter < tabu_until[i] && !aspirated {
                continue;
            }
            if delta < chosen_delta - 1e-15 {
                chosen = Some(i);
                chosen_delta = delta;
                ties = 1;
            } else if (delta - chosen_delta).abs() <= 1e-15 {
                ties += 1;
                if rng.gen_range(0..ties) == 0 {
                    chosen = Some(i);
                }
            }
        }
        let Some(i) = chosen else { break };
        state.flip(i);
        tabu_until[i] = iter + 1 + tenure;
        if state.energy < best_energy {
            best_energy = state.energy;
            best.copy_from_slice(&state.spins);
            last_improvement = iter;
        }
    }
    let evaluations = (params.max_iter * n) as u64;
    SolveResult::evaluate(p, SpinConfig::new_unchecked(best), "tabu", evaluations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::solve_exhaustive;
    use crate::solvers::testing::gaussian_instance;

    #[test]
    fn field_only_reaches_optimum_within_n_iterations() {
        let h = vec![-1.0, 2.0, -0.5, 0.25, -3.0];
        let p = IsingProblem::with_fields(h).unwrap();
        let r = solve_tabu(
            &p,
            &TabuParams {
                max_iter: 5,
                tenure: Some(2),
                seed: 3,
            },
        )
        .unwrap();
        assert_eq!(r.config().values(), &[1, -1, 1, -1, 1]);
    }

    #[test]
    fn random_instances_mostly_exact() {
        let mut hits = 0;
        for seed in 0..50 {
            let p = gaussian_instance(12, 2000 + seed);
            let exact = solve_exhaustive(&p).unwrap().energy();
            let r = solve_tabu(
                &p,
                &TabuParams {
                    seed,
                    ..TabuParams::default()
                },
            )
            .unwrap();
            if (r.energy() - exact).abs() < ENERGY_TOL {
                hits += 1;
            }
        }
        assert!(hits >= 45, "tabu found the ground state on {hits}/50 instances");
    }

    #[test]
    fn maximal_tenure_on_two_spins() {
        let p = IsingProblem::new(2, [(0, 1, 1.0)], vec![0.1, 0.0], 0.0).unwrap();
        let r = solve_tabu(
            &p,
            &TabuParams {
                max_iter: 10,
                tenure: Some(1),
                seed: 0,
            },
        )
        .unwrap();
        assert!((r.energy() - p.energy(r.config()).unwrap()).abs() < ENERGY_TOL);
        assert!((r.energy() - solve_exhaustive(&p).unwrap().energy()).abs() < ENERGY_TOL);
    }

    #[test]
    fn single_spin_clamps_tenure() {
        let p = IsingProblem::with_fields(vec![0.5]).unwrap();
        let r = solve_tabu(&p, &TabuParams::default()).unwrap();
        assert_eq!(r.config().values(), &[-1]);
    }

    #[test]
    fn rejects_zero_iterations() {
        let p = IsingProblem::with_fields(vec![0.5, 0.1]).unwrap();
        let params = TabuParams {
            max_iter: 0,
            ..TabuParams::default()
        };
        assert!(solve_tabu(&p, &params).is_err());
    }
}
