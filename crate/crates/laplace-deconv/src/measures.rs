//! Finitely supported probability measures on a compact interval `[-a, a]`.
//!
//! [`DiscreteMeasure`] is the workhorse value of the crate: it stores a sorted
//! atom list, nonnegative weights summing to one, and the support halfwidth
//! `a`. Constructors enforce atom hygiene (sorting, duplicate merging, weight
//! normalization) so downstream numerics never see degenerate inputs.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Atoms closer than this are considered duplicates and merged.
pub const ATOM_MERGE_TOL: f64 = 1e-12;

/// Weight sums deviating from 1 by at most this are silently renormalized;
/// larger deviations are rejected as corrupt input.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// A probability measure with finitely many atoms on `[-a, a]`.
///
/// Invariants (enforced at construction):
/// * atoms strictly increasing, each in `[-a, a]`;
/// * weights nonnegative, summing to 1 (renormalized within [`WEIGHT_SUM_TOL`]).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    a: f64,
    atoms: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from raw atom/weight lists.
    ///
    /// Atoms are sorted, duplicates within [`ATOM_MERGE_TOL`] are merged by
    /// weight addition, and weights are renormalized when their sum is within
    /// [`WEIGHT_SUM_TOL`] of 1. Rejects: mismatched lengths, empty lists,
    /// non-finite entries, `a <= 0`, atoms outside `[-a, a]`, negative
    /// weights, or a weight sum off by more than [`WEIGHT_SUM_TOL`].
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>, a: f64) -> Result<Self> {
        if atoms.len() != weights.len() {
            return Err(Error::invalid(format!(
                "atom/weight length mismatch: {} vs {}",
                atoms.len(),
                weights.len()
            )));
        }
        if atoms.is_empty() {
            return Err(Error::invalid("measure needs at least one atom"));
        }
        if !a.is_finite() || a <= 0.0 {
            return Err(Error::invalid(format!("support halfwidth must be positive, got {a}")));
        }
        for (&z, &w) in atoms.iter().zip(&weights) {
            if !z.is_finite() || !w.is_finite() {
                return Err(Error::invalid("non-finite atom or weight"));
            }
            if z < -a || z > a {
                return Err(Error::invalid(format!("atom {z} outside [-{a}, {a}]")));
            }
            if w < 0.0 {
                return Err(Error::invalid(format!("negative weight {w}")));
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::invalid(format!(
                "weights sum to {sum}, more than {WEIGHT_SUM_TOL} from 1"
            )));
        }

        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite atoms"));

        // Merge runs of near-identical atoms, keeping the smallest position.
        let mut merged_atoms = Vec::with_capacity(pairs.len());
        let mut merged_weights = Vec::with_capacity(pairs.len());
        for (z, w) in pairs {
            match merged_atoms.last() {
                Some(&last) if z - last <= ATOM_MERGE_TOL => {
                    *merged_weights.last_mut().expect("non-empty") += w;
                }
                _ => {
                    merged_atoms.push(z);
                    merged_weights.push(w);
                }
            }
        }
        for w in &mut merged_weights {
            *w /= sum;
        }
        // Pin the running total to exactly 1: absorb the bulk of the
        // rounding into the largest weight, then recompute the last weight
        // as an exact complement. Re-summing the result lands on 1.0 again,
        // so construction is idempotent and serialize/parse round trips
        // preserve every bit.
        let residual = 1.0 - merged_weights.iter().sum::<f64>();
        let largest = merged_weights
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .map(|(i, _)| i)
            .expect("non-empty");
        merged_weights[largest] += residual;
        let head: f64 = merged_weights[..merged_weights.len() - 1].iter().sum();
        let tail = 1.0 - head;
        if tail > 0.0 {
            *merged_weights.last_mut().expect("non-empty") = tail;
        }
        Ok(DiscreteMeasure {
            a,
            atoms: merged_atoms,
            weights: merged_weights,
        })
    }

    /// Point mass at `z` on `[-a, a]`.
    pub fn point_mass(z: f64, a: f64) -> Result<Self> {
        Self::new(vec![z], vec![1.0], a)
    }

    /// Uniform weights over the given atoms.
    pub fn uniform_on(atoms: Vec<f64>, a: f64) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            return Err(Error::invalid("measure needs at least one atom"));
        }
        Self::new(atoms, vec![1.0 / n as f64; n], a)
    }

    /// Uniform weights on `n` equally spaced points spanning `[-a, a]`
    /// (endpoints included for `n >= 2`).
    pub fn uniform_grid(n: usize, a: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("measure needs at least one atom"));
        }
        let atoms = if n == 1 {
            vec![0.0]
        } else {
            (0..n)
                .map(|i| -a + 2.0 * a * i as f64 / (n - 1) as f64)
                .collect()
        };
        Self::uniform_on(atoms, a)
    }

    /// Support halfwidth `a`.
    pub fn halfwidth(&self) -> f64 {
        self.a
    }

    /// Sorted atom locations.
    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    /// Weights aligned with [`Self::atoms`].
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Number of stored atoms (zero-weight atoms count).
    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    /// Number of atoms carrying weight above `tol`.
    pub fn effective_atom_count(&self, tol: f64) -> usize {
        self.weights.iter().filter(|&&w| w > tol).count()
    }

    /// CDF: mass of `(-inf, x]`.
    pub fn cdf(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .take_while(|(&z, _)| z <= x)
            .map(|(_, &w)| w)
            .sum()
    }

    /// Mass of the closed interval `[lo, hi]`.
    pub fn interval_mass(&self, lo: f64, hi: f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .filter(|(&z, _)| z >= lo && z <= hi)
            .map(|(_, &w)| w)
            .sum()
    }

    /// Generalized inverse CDF: the smallest atom `z` with `cdf(z) >= u`.
    ///
    /// Rejects `u` outside the open interval `(0, 1)`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::invalid(format!("quantile level {u} outside (0, 1)")));
        }
        let mut cum = 0.0;
        for (&z, &w) in self.atoms.iter().zip(&self.weights) {
            cum += w;
            if cum >= u {
                return Ok(z);
            }
        }
        // Cumulative rounding can leave cum marginally below u near 1.
        Ok(*self.atoms.last().expect("non-empty"))
    }

    /// First `m` power moments `[E z, E z^2, ..., E z^m]`.
    pub fn moments(&self, m: usize) -> Vec<f64> {
        (1..=m)
            .map(|j| {
                self.atoms
                    .iter()
                    .zip(&self.weights)
                    .map(|(&z, &w)| w * z.powi(j as i32))
                    .sum()
            })
            .collect()
    }

    /// Exact weighted sums `[sum_i w_i psi(z_i)]` for each test function.
    pub fn generalized_moments(&self, test_functions: &[&dyn Fn(f64) -> f64]) -> Vec<f64> {
        test_functions
            .iter()
            .map(|psi| self.generalized_moment(psi))
            .collect()
    }

    /// Exact weighted sum for one test function.
    pub fn generalized_moment(&self, psi: impl Fn(f64) -> f64) -> f64 {
        self.atoms
            .iter()
            .zip(&self.weights)
            .map(|(&z, &w)| w * psi(z))
            .sum()
    }

    /// Relocates all mass onto a maximal `gap`-separated subset of the atoms.
    ///
    /// The subset is chosen greedily left to right, so retained atoms are
    /// pairwise at least `gap` apart and no skipped atom is `gap`-far from
    /// every retained one. Each original atom's mass moves to the nearest
    /// retained atom, ties broken toward the smaller atom. Total mass is
    /// preserved exactly.
    pub fn separate_atoms(&self, gap: f64) -> Result<Self> {
        if !(gap > 0.0) {
            return Err(Error::invalid(format!("gap must be positive, got {gap}")));
        }
        let mut kept: Vec<f64> = Vec::new();
        for &z in &self.atoms {
            if kept.last().map_or(true, |&last| z - last >= gap) {
                kept.push(z);
            }
        }
        let mut new_weights = vec![0.0; kept.len()];
        for (&z, &w) in self.atoms.iter().zip(&self.weights) {
            // kept is sorted; find the nearest, ties toward the smaller atom.
            let idx = match kept.binary_search_by(|probe| probe.partial_cmp(&z).expect("finite")) {
                Ok(i) => i,
                Err(i) => {
                    if i == 0 {
                        0
                    } else if i == kept.len() {
                        kept.len() - 1
                    } else if (z - kept[i - 1]) <= (kept[i] - z) {
                        i - 1
                    } else {
                        i
                    }
                }
            };
            new_weights[idx] += w;
        }
        Ok(DiscreteMeasure {
            a: self.a,
            atoms: kept,
            weights: new_weights,
        })
    }

    /// Serializes to the canonical JSON form `{"a", "atoms", "weights"}`.
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses the canonical JSON form, re-validating all invariants.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: DiscreteMeasure = serde_json::from_str(text)?;
        DiscreteMeasure::new(raw.atoms, raw.weights, raw.a)
    }

    /// Writes canonical JSON to a file.
    pub fn save(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    /// Reads canonical JSON from a file.
    pub fn load(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform5() -> DiscreteMeasure {
        DiscreteMeasure::uniform_on(vec![-1.0, -0.5, 0.0, 0.5, 1.0], 1.0).unwrap()
    }

    #[test]
    fn point_mass_construction() {
        let g = DiscreteMeasure::new(vec![0.0], vec![1.0], 1.0).unwrap();
        assert_eq!(g.atoms(), &[0.0]);
        assert_eq!(g.weights(), &[1.0]);
    }

    #[test]
    fn sorts_unsorted_input() {
        let g = DiscreteMeasure::new(vec![0.5, -0.5], vec![0.5, 0.5], 1.0).unwrap();
        assert_eq!(g.atoms(), &[-0.5, 0.5]);
    }

    #[test]
    fn merges_duplicate_atoms() {
        let g = DiscreteMeasure::new(vec![0.0, 0.0], vec![0.3, 0.7], 1.0).unwrap();
        assert_eq!(g.atom_count(), 1);
        assert!((g.weights()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(DiscreteMeasure::new(vec![2.0], vec![1.0], 1.0).is_err());
        assert!(DiscreteMeasure::new(vec![0.0], vec![-1.0], 1.0).is_err());
        assert!(DiscreteMeasure::new(vec![0.0], vec![0.5], 1.0).is_err());
        assert!(DiscreteMeasure::new(vec![0.0], vec![1.0], -1.0).is_err());
        assert!(DiscreteMeasure::new(vec![0.0, 1.0], vec![1.0], 1.0).is_err());
        assert!(DiscreteMeasure::new(vec![], vec![], 1.0).is_err());
    }

    #[test]
    fn renormalizes_small_drift() {
        let g = DiscreteMeasure::new(vec![0.0, 0.5], vec![0.5, 0.5 + 5e-10], 1.0).unwrap();
        let sum: f64 = g.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quantile_point_mass() {
        let g = DiscreteMeasure::point_mass(0.3, 1.0).unwrap();
        for u in [0.01, 0.5, 0.99] {
            assert_eq!(g.quantile(u).unwrap(), 0.3);
        }
    }

    #[test]
    fn quantile_two_point() {
        let g = DiscreteMeasure::new(vec![-1.0, 1.0], vec![0.5, 0.5], 1.0).unwrap();
        assert_eq!(g.quantile(0.25).unwrap(), -1.0);
        assert_eq!(g.quantile(0.75).unwrap(), 1.0);
    }

    // Oracle: direct CDF enumeration. For uniform weights on five atoms the
    // CDF passes 0.2, 0.4, 0.6, 0.8, 1.0; the smallest atom whose CDF
    // reaches 0.41 is the third one.
    #[test]
    fn quantile_five_point_enumeration() {
        let g = uniform5();
        let oracle = |u: f64| {
            let mut cum = 0.0;
            for (&z, &w) in g.atoms().iter().zip(g.weights()) {
                cum += w;
                if cum >= u {
                    return z;
                }
            }
            unreachable!()
        };
        assert_eq!(oracle(0.41), 0.0);
        assert_eq!(g.quantile(0.41).unwrap(), 0.0);
        assert_eq!(g.quantile(0.40).unwrap(), -0.5);
        for u in [0.05, 0.2, 0.21, 0.399, 0.61, 0.99] {
            assert_eq!(g.quantile(u).unwrap(), oracle(u));
        }
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        let g = uniform5();
        assert!(g.quantile(0.0).is_err());
        assert!(g.quantile(1.0).is_err());
        assert!(g.quantile(-0.1).is_err());
    }

    #[test]
    fn quantile_nondecreasing() {
        let g = DiscreteMeasure::new(
            vec![-0.9, -0.3, 0.2, 0.4, 0.8],
            vec![0.1, 0.3, 0.2, 0.25, 0.15],
            1.0,
        )
        .unwrap();
        let mut prev = f64::NEG_INFINITY;
        for i in 1..100 {
            let q = g.quantile(i as f64 / 100.0).unwrap();
            assert!(q >= prev);
            prev = q;
        }
    }

    #[test]
    fn generalized_moments_basics() {
        let delta0 = DiscreteMeasure::point_mass(0.0, 1.0).unwrap();
        assert_eq!(delta0.generalized_moment(|z| z), 0.0);

        let sym = DiscreteMeasure::new(vec![-1.0, 1.0], vec![0.5, 0.5], 1.0).unwrap();
        assert!((sym.generalized_moment(|z| z * z) - 1.0).abs() < 1e-15);

        let a = 0.7;
        let da = DiscreteMeasure::point_mass(a, 1.0).unwrap();
        assert!((da.generalized_moment(|z| (-z).exp()) - (-a).exp()).abs() < 1e-15);
    }

    #[test]
    fn moments_uniform_three_point() {
        let g = DiscreteMeasure::uniform_on(vec![-1.0, 0.0, 1.0], 1.0).unwrap();
        let m = g.moments(2);
        assert!(m[0].abs() < 1e-15);
        assert!((m[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn separate_atoms_already_separated() {
        let g = DiscreteMeasure::point_mass(0.0, 1.0).unwrap();
        let s = g.separate_atoms(0.1).unwrap();
        assert_eq!(s.atoms(), &[0.0]);
        assert_eq!(s.weights(), &[1.0]);
    }

    #[test]
    fn separate_atoms_merges_close_pair() {
        let g = DiscreteMeasure::new(vec![0.0, 0.01], vec![0.5, 0.5], 1.0).unwrap();
        let s = g.separate_atoms(0.1).unwrap();
        assert_eq!(s.atoms(), &[0.0]);
        assert!((s.weights()[0] - 1.0).abs() < 1e-15);
    }

    // Oracle: brute-force check that the greedy subset is maximal (no skipped
    // atom could be re-added) and that mass is preserved exactly.
    #[test]
    fn separate_atoms_equispaced_oracle() {
        let atoms: Vec<f64> = (0..20).map(|i| -1.0 + 2.0 * i as f64 / 19.0).collect();
        let g = DiscreteMeasure::uniform_on(atoms.clone(), 1.0).unwrap();
        let s = g.separate_atoms(0.3).unwrap();

        for pair in s.atoms().windows(2) {
            assert!(pair[1] - pair[0] >= 0.3);
        }
        for &z in &atoms {
            let covered = s.atoms().iter().any(|&k| (z - k).abs() < 0.3);
            assert!(covered, "atom {z} is 0.3-far from every retained atom");
        }
        let total: f64 = s.weights().iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn separate_atoms_tie_goes_to_smaller() {
        // Atoms 0 and 0.4 are retained with gap 0.4; the atom at 0.2 is
        // equidistant and must move to the smaller retained atom.
        let g = DiscreteMeasure::new(vec![0.0, 0.2, 0.4], vec![0.4, 0.2, 0.4], 1.0).unwrap();
        let s = g.separate_atoms(0.4).unwrap();
        assert_eq!(s.atoms(), &[0.0, 0.4]);
        assert!((s.weights()[0] - 0.6).abs() < 1e-15);
        assert!((s.weights()[1] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_canonical_order() {
        let g = DiscreteMeasure::new(vec![0.25, -0.75], vec![0.4, 0.6], 1.0).unwrap();
        let text = g.to_json().unwrap();
        let a_pos = text.find("\"a\"").unwrap();
        let atoms_pos = text.find("\"atoms\"").unwrap();
        let weights_pos = text.find("\"weights\"").unwrap();
        assert!(a_pos < atoms_pos && atoms_pos < weights_pos);
        let back = DiscreteMeasure::from_json(&text).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn from_json_revalidates() {
        let bad = r#"{"a": 1.0, "atoms": [5.0], "weights": [1.0]}"#;
        assert!(DiscreteMeasure::from_json(bad).is_err());
    }

    #[test]
    fn interval_mass_closed_endpoints() {
        let g = uniform5();
        assert!((g.interval_mass(-0.5, 0.5) - 0.6).abs() < 1e-15);
        assert!((g.interval_mass(-2.0, 2.0) - 1.0).abs() < 1e-15);
        assert_eq!(g.interval_mass(0.1, 0.2), 0.0);
    }
}
