use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qubo::{IsingProblem, SpinConfig};

use super::{compare_candidates, symmetric_couplings, LocalFields, SolveResult};

/// Metropolis annealing schedule.
///
/// Inverse temperatures are relative to the problem's largest absolute
/// coefficient, so the same schedule works for problems of any scale.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub sweeps: usize,
    pub beta_initial: f64,
    pub beta_final: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        AnnealSchedule {
            sweeps: 1000,
            beta_initial: 0.1,
            beta_final: 10.0,
            restarts: 32,
            seed: 0,
        }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.sweeps == 0 || self.restarts == 0 {
            return Err(Error::Config("annealing needs at least one sweep and one restart".into()));
        }
        if !(self.beta_initial > 0.0 && self.beta_final >= self.beta_initial && self.beta_final.is_finite()) {
            return Err(Error::Config(format!(
                "need 0 < beta_initial <= beta_final, got {} and {}",
                self.beta_initial, self.beta_final
            )));
        }
        Ok(())
    }

    /// Geometric interpolation from `beta_initial` to `beta_final`, one value per sweep.
    pub fn betas(&self) -> Vec<f64> {
        if self.sweeps == 1 {
            return vec![self.beta_final];
        }
        let ratio = (self.beta_final / self.beta_initial).ln() / (self.sweeps - 1) as f64;
        (0..self.sweeps)
            .map(|k| self.beta_initial * (ratio * k as f64).exp())
            .collect()
    }
}

/// Best configuration over independent single-spin-flip Metropolis runs.
///
/// Restart `r` draws from ChaCha stream `r` of the schedule seed, so results
/// do not depend on how restarts are scheduled across threads. Each restart
/// keeps its best-visited state and finishes with a greedy descent from it.
pub fn solve_sa(p: &IsingProblem, schedule: &AnnealSchedule) -> Result<SolveResult> {
    schedule.validate()?;
    let n = p.n();
    let coupling = symmetric_couplings(p);
    let scale = match p.max_abs_coefficient() {
        s if s > 0.0 => s,
        _ => 1.0,
    };
    let betas: Vec<f64> = schedule.betas().into_iter().map(|b| b / scale).collect();

    let runs: Vec<(f64, Vec<i8>, u64)> = (0..schedule.restarts)
        .into_par_iter()
        .map(|restart| {
            let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
            rng.set_stream(restart as u64);
            let init = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let mut state = LocalFields::new(p, &coupling, init);
            let mut best_energy = state.energy;
            let mut best = state.spins.clone();
            for &beta in &betas {
                for i in 0..n {
                    let delta = state.delta(i);
                    if delta <= 0.0 || rng.gen::<f64>() < (-beta * delta).exp() {
                        state.flip(i);
                        if state.energy < best_energy {
                            best_energy = state.energy;
                            best.copy_from_slice(&state.spins);
                        }
                    }
                }
            }
            let mut quench = LocalFields::new(p, &coupling, best);
            let extra = quench.descend();
            let evaluations = (betas.len() * n) as u64 + extra;
            (quench.energy, quench.spins, evaluations)
        })
        .collect();

    let evaluations = runs.iter().map(|r| r.2).sum();
    let (_, best, _) = runs
        .into_iter()
        .min_by(|a, b| compare_candidates((a.0, &a.1), (b.0, &b.1)))
        .expect("at least one restart");
    SolveResult::evaluate(p, SpinConfig::new_unchecked(best), "sa", evaluations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::ENERGY_TOL;
    use crate::solvers::solve_exhaustive;
    use crate::solvers::testing::gaussian_instance;

    #[test]
    fn independent_spins_align_with_fields() {
        let p = IsingProblem::with_fields(vec![-1.0; 6]).unwrap();
        let r = solve_sa(&p, &AnnealSchedule::default()).unwrap();
        assert_eq!(r.config().values(), &[1; 6]);
        assert_eq!(r.energy(), -6.0);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let p = gaussian_instance(10, 1);
        let s = AnnealSchedule {
            seed: 99,
            ..AnnealSchedule::default()
        };
        assert_eq!(solve_sa(&p, &s).unwrap(), solve_sa(&p, &s).unwrap());
    }

    #[test]
    fn finds_ground_state_on_random_instances() {
        let mut hits = 0;
        for seed in 0..50 {
            let p = gaussian_instance(10, 1000 + seed);
            let exact = solve_exhaustive(&p).unwrap().energy();
            let s = AnnealSchedule {
                seed,
                ..AnnealSchedule::default()
            };
            if (solve_sa(&p, &s).unwrap().energy() - exact).abs() < ENERGY_TOL {
                hits += 1;
            }
        }
        assert!(hits >= 48, "SA found the ground state on {hits}/50 instances");
    }

    #[test]
    fn more_restarts_never_hurt() {
        let p = gaussian_instance(14, 3);
        let mut prev = f64::INFINITY;
        for restarts in [1, 2, 4, 8] {
            let s = AnnealSchedule {
                sweeps: 20,
                restarts,
                seed: 5,
                ..AnnealSchedule::default()
            };
            let e = solve_sa(&p, &s).unwrap().energy();
            assert!(e <= prev + ENERGY_TOL);
            prev = e;
        }
    }

    #[test]
    fn works_on_tiny_energy_scales() {
        // portfolio-sized coefficients, about 1e-4
        let p = gaussian_instance(10, 77);
        let scaled = IsingProblem::new(
            10,
            p.couplings().map(|(i, j, v)| (i, j, v * 1e-4)).collect::<Vec<_>>(),
            p.h().iter().map(|v| v * 1e-4).collect(),
            0.0,
        )
        .unwrap();
        let exact = solve_exhaustive(&scaled).unwrap();
        let sa = solve_sa(&scaled, &AnnealSchedule::default()).unwrap();
        assert_eq!(sa.config(), exact.config());
    }

    #[test]
    fn rejects_bad_schedule() {
        let p = IsingProblem::with_fields(vec![1.0]).unwrap();
        let bad = AnnealSchedule {
            beta_initial: 2.0,
            beta_final: 1.0,
            ..AnnealSchedule::default()
        };
        assert!(matches!(solve_sa(&p, &bad), Err(Error::Config(_))));
        let geo = AnnealSchedule::default().betas();
        assert_eq!(geo.len(), 1000);
        assert!((geo[0] - 0.1).abs() < 1e-15 && (geo[999] - 10.0).abs() < 1e-12);
    }
}
