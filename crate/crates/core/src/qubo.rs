//! QUBO and Ising problem representations.
//!
//! A [`QuboProblem`] stores a dense symmetric matrix whose diagonal holds the
//! linear coefficients (`x_i^2 == x_i` for binaries), so the energy of an
//! assignment is `x^T Q x + offset`. An [`IsingProblem`] stores the strictly
//! upper-triangular couplings `J`, the fields `h`, and an offset, with energy
//! `sum_{i<j} J_ij z_i z_j + sum_i h_i z_i + offset`.
//!
//! Conversions use `z = 2x - 1` and carry the constant term in `offset`, so
//! energies (not only minimizers) agree across the two forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance used for every energy comparison in the crate.
pub const ENERGY_TOL: f64 = 1e-9;

const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "QuboJson", into = "QuboJson")]
pub struct QuboProblem {
    n: usize,
    q: Vec<f64>,
    offset: f64,
}

#[derive(Serialize, Deserialize)]
struct QuboJson {
    n: usize,
    q: Vec<Vec<f64>>,
    offset: f64,
}

impl TryFrom<QuboJson> for QuboProblem {
    type Error = Error;

    fn try_from(raw: QuboJson) -> Result<Self> {
        if raw.q.len() != raw.n {
            return Err(Error::Dimension {
                expected: raw.n,
                got: raw.q.len(),
            });
        }
        QuboProblem::new(raw.q, raw.offset)
    }
}

impl From<QuboProblem> for QuboJson {
    fn from(p: QuboProblem) -> Self {
        QuboJson {
            n: p.n,
            q: p.q.chunks(p.n).map(<[f64]>::to_vec).collect(),
            offset: p.offset,
        }
    }
}

impl QuboProblem {
    /// Builds a problem from a symmetric matrix given as rows.
    pub fn new(rows: Vec<Vec<f64>>, offset: f64) -> Result<Self> {
        let n = rows.len();
        let mut q = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
            q.extend_from_slice(row);
        }
        Self::from_dense(n, q, offset)
    }

    /// Builds a problem from a row-major `n * n` buffer.
    pub fn from_dense(n: usize, q: Vec<f64>, offset: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidProblem("QUBO needs at least one variable".into()));
        }
        if q.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: q.len(),
            });
        }
        if !offset.is_finite() || q.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("non-finite coefficient".into()));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                let (a, b) = (q[i * n + j], q[j * n + i]);
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::InvalidProblem(format!(
                        "matrix is not symmetric at ({i}, {j}): {a} vs {b}"
                    )));
                }
            }
        }
        Ok(QuboProblem { n, q, offset })
    }

    /// Builds a problem from an arbitrary square matrix by replacing it with
    /// `(A + A^T) / 2`, which leaves `x^T A x` unchanged.
    pub fn symmetrized(rows: Vec<Vec<f64>>, offset: f64) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                got: bad.len(),
            });
        }
        let sym = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| 0.5 * (rows[i][j] + rows[j][i]))
                    .collect()
            })
            .collect();
        Self::new(sym, offset)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.n + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.q.chunks(self.n)
    }

    /// `x^T Q x + offset` for a binary assignment.
    pub fn energy(&self, x: &[u8]) -> Result<f64> {
        check_len(self.n, x.len())?;
        if let Some(bad) = x.iter().find(|&&v| v > 1) {
            return Err(Error::InvalidProblem(format!("binary entry {bad} is not 0 or 1")));
        }
        let mut e = self.offset;
        for i in (0..self.n).filter(|&i| x[i] == 1) {
            let row = &self.q[i * self.n..(i + 1) * self.n];
            e += row[i];
            for j in (i + 1..self.n).filter(|&j| x[j] == 1) {
                e += 2.0 * row[j];
            }
        }
        Ok(e)
    }

    /// Spin form under `z = 2x - 1`.
    pub fn to_ising(&self) -> IsingProblem {
        let n = self.n;
        let mut j = vec![0.0; n * n];
        let mut h = vec![0.0; n];
        let mut offset = self.offset;
        for a in 0..n {
            let diag = self.get(a, a);
            h[a] += diag / 2.0;
            offset += diag / 2.0;
            for b in (a + 1)..n {
                // 2 q_ab x_a x_b with x_a x_b = (z_a z_b + z_a + z_b + 1) / 4
                let w = self.get(a, b) / 2.0;
                j[a * n + b] = w;
                h[a] += w;
                h[b] += w;
                offset += w;
            }
        }
        IsingProblem { n, j, h, offset }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IsingJson", into = "IsingJson")]
pub struct IsingProblem {
    n: usize,
    /// Dense row-major buffer; only entries with `i < j` are nonzero.
    j: Vec<f64>,
    h: Vec<f64>,
    offset: f64,
}

#[derive(Serialize, Deserialize)]
struct IsingJson {
    n: usize,
    j: Vec<(usize, usize, f64)>,
    h: Vec<f64>,
    offset: f64,
}

impl TryFrom<IsingJson> for IsingProblem {
    type Error = Error;

    fn try_from(raw: IsingJson) -> Result<Self> {
        IsingProblem::new(raw.n, raw.j, raw.h, raw.offset)
    }
}

impl From<IsingProblem> for IsingJson {
    fn from(p: IsingProblem) -> Self {
        IsingJson {
            n: p.n,
            j: p.couplings().collect(),
            h: p.h,
            offset: p.offset,
        }
    }
}

impl IsingProblem {
    /// Builds a problem from a coupling list. Pairs may be given in either
    /// order and repeated pairs accumulate; self-couplings are rejected.
    pub fn new(
        n: usize,
        couplings: impl IntoIterator<Item = (usize, usize, f64)>,
        h: Vec<f64>,
        offset: f64,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidProblem("Ising problem needs at least one spin".into()));
        }
        check_len(n, h.len())?;
        let mut j = vec![0.0; n * n];
        for (a, b, v) in couplings {
            if a >= n || b >= n {
                return Err(Error::Index(format!("coupling ({a}, {b}) out of range for n = {n}")));
            }
            if a == b {
                return Err(Error::InvalidProblem(format!("self-coupling at site {a}")));
            }
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            j[lo * n + hi] += v;
        }
        if !offset.is_finite() || j.iter().chain(&h).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem("non-finite coefficient".into()));
        }
        Ok(IsingProblem { n, j, h, offset })
    }

    /// Field-only problem.
    pub fn with_fields(h: Vec<f64>) -> Result<Self> {
        Self::new(h.len(), std::iter::empty(), h, 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// `J_ij` for `i != j`, looked up in either order.
    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        match i.cmp(&j) {
            std::cmp::Ordering::Less => self.j[i * self.n + j],
            std::cmp::Ordering::Greater => self.j[j * self.n + i],
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// Nonzero couplings as `(i, j, J_ij)` with `i < j`, in row-major order.
    pub fn couplings(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.n;
        (0..n).flat_map(move |i| {
            ((i + 1)..n).filter_map(move |j| {
                let v = self.j[i * n + j];
                (v != 0.0).then_some((i, j, v))
            })
        })
    }

    /// Largest absolute coefficient; zero for the empty Hamiltonian.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.j
            .iter()
            .chain(&self.h)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Upper bound on `|energy - offset|` over all configurations.
    pub fn energy_bound(&self) -> f64 {
        self.j.iter().chain(&self.h).map(|v| v.abs()).sum()
    }

    pub fn energy(&self, z: &SpinConfig) -> Result<f64> {
        check_len(self.n, z.len())?;
        Ok(self.energy_unchecked(z.values()))
    }

    pub(crate) fn energy_unchecked(&self, z: &[i8]) -> f64 {
        let n = self.n;
        let mut e = self.offset;
        for i in 0..n {
            let zi = f64::from(z[i]);
            e += self.h[i] * zi;
            let row = &self.j[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for k in (i + 1)..n {
                acc += row[k] * f64::from(z[k]);
            }
            e += zi * acc;
        }
        e
    }

    /// Binary form under `z = 2x - 1`.
    pub fn to_qubo(&self) -> QuboProblem {
        let n = self.n;
        let mut q = vec![0.0; n * n];
        let mut offset = self.offset;
        for a in 0..n {
            // h z = 2h x - h
            q[a * n + a] += 2.0 * self.h[a];
            offset -= self.h[a];
            for b in (a + 1)..n {
                // J z_a z_b = 4J x_a x_b - 2J x_a - 2J x_b + J
                let v = self.j[a * n + b];
                if v == 0.0 {
                    continue;
                }
                q[a * n + b] += 2.0 * v;
                q[b * n + a] += 2.0 * v;
                q[a * n + a] -= 2.0 * v;
                q[b * n + b] -= 2.0 * v;
                offset += v;
            }
        }
        QuboProblem { n, q, offset }
    }

    /// Sub-Hamiltonian over `sites` (new index `k` is `sites[k]`), keeping only
    /// the terms whose indices all lie in `sites`. The offset is dropped.
    pub fn restrict(&self, sites: &[usize]) -> Result<IsingProblem> {
        if sites.is_empty() {
            return Err(Error::Index("restriction to an empty site list".into()));
        }
        let mut seen = vec![false; self.n];
        for &s in sites {
            if s >= self.n {
                return Err(Error::Index(format!("site {s} out of range for n = {}", self.n)));
            }
            if std::mem::replace(&mut seen[s], true) {
                return Err(Error::Index(format!("duplicate site {s}")));
            }
        }
        let m = sites.len();
        let mut j = vec![0.0; m * m];
        for a in 0..m {
            for b in (a + 1)..m {
                j[a * m + b] = self.coupling(sites[a], sites[b]);
            }
        }
        let h = sites.iter().map(|&s| self.h[s]).collect();
        Ok(IsingProblem {
            n: m,
            j,
            h,
            offset: 0.0,
        })
    }
}

/// A spin assignment with every entry in `{-1, +1}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<i8>", into = "Vec<i8>")]
pub struct SpinConfig(Vec<i8>);

impl TryFrom<Vec<i8>> for SpinConfig {
    type Error = Error;

    fn try_from(values: Vec<i8>) -> Result<Self> {
        SpinConfig::new(values)
    }
}

impl From<SpinConfig> for Vec<i8> {
    fn from(z: SpinConfig) -> Self {
        z.0
    }
}

impl SpinConfig {
    pub fn new(values: Vec<i8>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|&&v| v != 1 && v != -1) {
            return Err(Error::InvalidProblem(format!("spin value {bad} is not -1 or +1")));
        }
        Ok(SpinConfig(values))
    }

    pub(crate) fn new_unchecked(values: Vec<i8>) -> Self {
        debug_assert!(values.iter().all(|&v| v == 1 || v == -1));
        SpinConfig(values)
    }

    /// Maps `x = 1` to `+1` and `x = 0` to `-1`.
    pub fn from_binary(x: &[u8]) -> Self {
        SpinConfig(x.iter().map(|&b| if b != 0 { 1 } else { -1 }).collect())
    }

    pub fn to_binary(&self) -> Vec<u8> {
        self.0.iter().map(|&s| u8::from(s > 0)).collect()
    }

    pub fn values(&self) -> &[i8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension { expected, got })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Direct sum over all matrix entries; independent of the energy routine.
    fn qubo_oracle(q: &[Vec<f64>], offset: f64, x: &[u8]) -> f64 {
        let mut e = offset;
        for i in 0..q.len() {
            for j in 0..q.len() {
                e += q[i][j] * f64::from(x[i]) * f64::from(x[j]);
            }
        }
        e
    }

    fn ising_oracle(p: &IsingProblem, z: &[i8]) -> f64 {
        let mut e = p.offset();
        for i in 0..p.n() {
            e += p.h()[i] * f64::from(z[i]);
            for j in (i + 1)..p.n() {
                e += p.coupling(i, j) * f64::from(z[i]) * f64::from(z[j]);
            }
        }
        e
    }

    fn bits(n: usize, k: usize) -> Vec<u8> {
        (0..n).map(|i| ((k >> i) & 1) as u8).collect()
    }

    fn random_qubo(n: usize, seed: u64) -> QuboProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let raw: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        QuboProblem::symmetrized(raw, rng.gen_range(-1.0..1.0)).unwrap()
    }

    fn random_ising(n: usize, seed: u64) -> IsingProblem {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut couplings = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                couplings.push((i, j, rng.gen_range(-1.0..1.0)));
            }
        }
        let h = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        IsingProblem::new(n, couplings, h, rng.gen_range(-1.0..1.0)).unwrap()
    }

    fn assert_equivalent(qubo: &QuboProblem, ising: &IsingProblem) {
        let n = qubo.n();
        for k in 0..(1usize << n) {
            let x = bits(n, k);
            let eq = qubo.energy(&x).unwrap();
            let ei = ising.energy(&SpinConfig::from_binary(&x)).unwrap();
            assert!((eq - ei).abs() < ENERGY_TOL, "x = {x:?}: {eq} vs {ei}");
        }
    }

    #[test]
    fn zero_qubo_maps_to_zero_ising() {
        let p = QuboProblem::new(vec![vec![0.0; 3]; 3], 0.0).unwrap();
        let s = p.to_ising();
        assert_eq!(s.couplings().count(), 0);
        assert!(s.h().iter().all(|&v| v == 0.0));
        assert_eq!(s.offset(), 0.0);
    }

    #[test]
    fn single_edge_mis_qubo_matches_ising() {
        // H = -x1 - x2 + 2 x1 x2
        let p = QuboProblem::new(vec![vec![-1.0, 1.0], vec![1.0, -1.0]], 0.0).unwrap();
        let expected = [(vec![0, 0], 0.0), (vec![1, 0], -1.0), (vec![0, 1], -1.0), (vec![1, 1], 0.0)];
        let s = p.to_ising();
        for (x, e) in expected {
            assert!((p.energy(&x).unwrap() - e).abs() < ENERGY_TOL);
            let ei = s.energy(&SpinConfig::from_binary(&x)).unwrap();
            assert!((ei - e).abs() < ENERGY_TOL);
        }
    }

    #[test]
    fn random_three_variable_qubo_transforms() {
        let p = random_qubo(3, 7);
        assert_equivalent(&p, &p.to_ising());
    }

    #[test]
    fn zero_ising_maps_to_zero_qubo() {
        let s = IsingProblem::new(2, [], vec![0.0, 0.0], 0.0).unwrap();
        let q = s.to_qubo();
        assert!(q.rows().flatten().all(|&v| v == 0.0));
        assert_eq!(q.offset(), 0.0);
    }

    #[test]
    fn ferromagnet_round_trip() {
        let s = IsingProblem::new(2, [(0, 1, -1.0)], vec![0.0, 0.0], 0.0).unwrap();
        let q = s.to_qubo();
        assert_equivalent(&q, &s);
        assert_equivalent(&q, &q.to_ising());
    }

    #[test]
    fn random_four_spin_round_trip() {
        let s = random_ising(4, 11);
        let back = s.to_qubo().to_ising();
        for k in 0..16 {
            let z = SpinConfig::from_binary(&bits(4, k));
            assert!((s.energy(&z).unwrap() - back.energy(&z).unwrap()).abs() < ENERGY_TOL);
        }
    }

    #[test]
    fn qubo_energy_examples() {
        let tri = QuboProblem::new(
            vec![vec![-1.0, 1.0, 1.0], vec![1.0, -1.0, 1.0], vec![1.0, 1.0, -1.0]],
            0.0,
        )
        .unwrap();
        assert_eq!(tri.energy(&[0, 0, 0]).unwrap(), 0.0);
        assert!((tri.energy(&[1, 1, 0]).unwrap() - 0.0).abs() < ENERGY_TOL);

        // -mu^T w + gamma w^T Sigma w with mu = (0.1, 0.2), Sigma = 0.04 I, gamma = 0.5
        let p = QuboProblem::new(vec![vec![-0.1 + 0.02, 0.0], vec![0.0, -0.2 + 0.02]], 0.0).unwrap();
        assert!((p.energy(&[1, 1]).unwrap() - (-0.26)).abs() < 1e-12);
    }

    #[test]
    fn energy_length_mismatch() {
        let p = random_qubo(3, 1);
        assert!(matches!(p.energy(&[1, 0]), Err(Error::Dimension { expected: 3, got: 2 })));
        let s = p.to_ising();
        let z = SpinConfig::new(vec![1, -1]).unwrap();
        assert!(matches!(s.energy(&z), Err(Error::Dimension { .. })));
    }

    #[test]
    fn ising_energy_examples() {
        let s = IsingProblem::new(2, [], vec![0.0, 0.0], 1.5).unwrap();
        let z = SpinConfig::new(vec![1, -1]).unwrap();
        assert_eq!(s.energy(&z).unwrap(), 1.5);
        let s = IsingProblem::new(2, [(0, 1, 1.0)], vec![0.0, 0.0], 0.0).unwrap();
        assert_eq!(s.energy(&z).unwrap(), -1.0);
    }

    #[test]
    fn ising_cross_checks_qubo_energy() {
        let s = random_ising(5, 3);
        let q = s.to_qubo();
        for k in 0..32 {
            let x = bits(5, k);
            let z = SpinConfig::from_binary(&x);
            let e = s.energy(&z).unwrap();
            assert!((e - ising_oracle(&s, z.values())).abs() < ENERGY_TOL);
            assert!((e - q.energy(&x).unwrap()).abs() < ENERGY_TOL);
        }
    }

    #[test]
    fn restrict_identity() {
        let s = random_ising(4, 5);
        let r = s.restrict(&[0, 1, 2, 3]).unwrap();
        assert_eq!(r.h(), s.h());
        assert_eq!(r.couplings().collect::<Vec<_>>(), s.couplings().collect::<Vec<_>>());
        assert_eq!(r.offset(), 0.0);
    }

    #[test]
    fn restrict_chain_keeps_inner_terms() {
        let s = IsingProblem::new(
            4,
            [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 3.0)],
            vec![0.5, -0.5, 0.25, -0.25],
            4.0,
        )
        .unwrap();
        let r = s.restrict(&[0, 1]).unwrap();
        assert_eq!(r.couplings().collect::<Vec<_>>(), vec![(0, 1, 1.0)]);
        assert_eq!(r.h(), &[0.5, -0.5]);

        let single = s.restrict(&[2]).unwrap();
        assert_eq!(single.n(), 1);
        assert_eq!(single.couplings().count(), 0);
        assert_eq!(single.h(), &[0.25]);
    }

    #[test]
    fn restrict_rejects_bad_sites() {
        let s = random_ising(4, 5);
        assert!(matches!(s.restrict(&[0, 0]), Err(Error::Index(_))));
        assert!(matches!(s.restrict(&[4]), Err(Error::Index(_))));
    }

    #[test]
    fn reversed_site_order_keeps_couplings() {
        let s = random_ising(3, 9);
        let r = s.restrict(&[2, 0]).unwrap();
        assert_eq!(r.coupling(0, 1), s.coupling(0, 2));
        assert_eq!(r.h(), &[s.h()[2], s.h()[0]]);
    }

    #[test]
    fn rejects_asymmetric_matrix_and_bad_spins() {
        assert!(QuboProblem::new(vec![vec![0.0, 1.0], vec![0.0, 0.0]], 0.0).is_err());
        assert!(SpinConfig::new(vec![1, 0]).is_err());
        assert!(IsingProblem::new(2, [(1, 1, 1.0)], vec![0.0; 2], 0.0).is_err());
    }

    #[test]
    fn json_shapes() {
        let q = QuboProblem::new(vec![vec![1.0, 0.5], vec![0.5, -1.0]], 0.25).unwrap();
        let v: serde_json::Value = serde_json::to_value(&q).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["q"][0][1], 0.5);
        assert_eq!(v["offset"], 0.25);
        let back: QuboProblem = serde_json::from_value(v).unwrap();
        assert_eq!(back, q);

        let s = q.to_ising();
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["j"][0], serde_json::json!([0, 1, 0.25]));
        let back: IsingProblem = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);

        let bad = serde_json::json!({"n": 2, "q": [[0.0, 1.0], [0.0, 0.0]], "offset": 0.0});
        assert!(serde_json::from_value::<QuboProblem>(bad).is_err());
    }

    proptest! {
        #[test]
        fn transformation_preserves_energy(seed in any::<u64>(), n in 1usize..=8) {
            let p = random_qubo(n, seed);
            let s = p.to_ising();
            for k in 0..(1usize << n) {
                let x = bits(n, k);
                let z = SpinConfig::from_binary(&x);
                let ei = s.energy(&z).unwrap();
                prop_assert!((p.energy(&x).unwrap() - ei).abs() < ENERGY_TOL);
                prop_assert!((ei - ising_oracle(&s, z.values())).abs() < ENERGY_TOL);
                prop_assert!((s.to_qubo().energy(&x).unwrap() - ei).abs() < ENERGY_TOL);
            }
        }

        #[test]
        fn symmetrization_preserves_energy(seed in any::<u64>(), n in 1usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let raw: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let p = QuboProblem::symmetrized(raw.clone(), 0.5).unwrap();
            for k in 0..(1usize << n) {
                let x = bits(n, k);
                prop_assert!((p.energy(&x).unwrap() - qubo_oracle(&raw, 0.5, &x)).abs() < ENERGY_TOL);
            }
        }

        #[test]
        fn restriction_equals_zeroed_full_hamiltonian(seed in any::<u64>(), mask in 1u32..64) {
            let n = 6;
            let s = random_ising(n, seed);
            let sites: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
            let r = s.restrict(&sites).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
            let z: Vec<i8> = (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect();
            let sub: Vec<i8> = sites.iter().map(|&s| z[s]).collect();
            // full Hamiltonian with every out-of-set term zeroed
            let mut expected = 0.0;
            for (a, &i) in sites.iter().enumerate() {
                expected += s.h()[i] * f64::from(z[i]);
                for &j in &sites[a + 1..] {
                    expected += s.coupling(i, j) * f64::from(z[i]) * f64::from(z[j]);
                }
            }
            let got = r.energy(&SpinConfig::new(sub).unwrap()).unwrap();
            prop_assert!((got - expected).abs() < ENERGY_TOL);
        }
    }
}
