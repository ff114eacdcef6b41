use crate::error::{Error, Result};
use crate::qubo::{IsingProblem, SpinConfig, ENERGY_TOL};

use super::{symmetric_couplings, LocalFields, SolveResult};

/// Largest problem the enumerator accepts.
pub const MAX_EXHAUSTIVE_SPINS: usize = 24;

/// Global minimum by enumerating all `2^n` configurations.
///
/// Configurations are visited in lexicographic order of the spin vector
/// (`-1` before `+1`, site 0 most significant), and only a strictly lower
/// energy (beyond [`ENERGY_TOL`]) replaces the incumbent, so ties resolve to
/// the lexicographically smallest minimizer.
pub fn solve_exhaustive(p: &IsingProblem) -> Result<SolveResult> {
    let n = p.n();
    if n > MAX_EXHAUSTIVE_SPINS {
        return Err(Error::Size {
            n,
            max: MAX_EXHAUSTIVE_SPINS,
        });
    }
    let coupling = symmetric_couplings(p);
    let mut state = LocalFields::new(p, &coupling, vec![-1; n]);
    let mut best_energy = state.energy;
    let mut best = state.spins.clone();
    let total: u64 = 1 << n;
    for k in 0..total - 1 {
        // k -> k + 1 clears the trailing ones and sets the next bit; bit b
        // belongs to site n - 1 - b
        let flips = k.trailing_ones() as usize + 1;
        for b in 0..flips {
            state.flip(n - 1 - b);
        }
        if state.energy < best_energy - ENERGY_TOL {
            best_energy = state.energy;
            best.copy_from_slice(&state.spins);
        }
    }
    SolveResult::evaluate(p, SpinConfig::new_unchecked(best), "exact", total)
}
