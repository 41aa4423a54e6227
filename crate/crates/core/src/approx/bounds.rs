//! Largest weight a biseparable state `x ⊗ c` (a single qubit times a
//! two-qubit vector) can put on a pair of orthonormal three-qubit states,
//! and the resulting overlap bounds for the maximal four-qubit state.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::optimizer::{max_overlap_with, OptConfig};
use crate::error::Result;
use crate::state::{self, complex_gaussian, named, split_raw, PureState};
use crate::tree::catalog_family;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FBounds {
    /// Split qubit 1 of the maximal state.
    pub f_max: f64,
    /// Qubits 2 and 3 exchanged.
    pub f1_max: f64,
    /// Qubits 2 and 4 exchanged.
    pub f2_max: f64,
    /// `(1 + max f)/2`, the overlap ceiling for the three-branch families.
    pub chain: f64,
    /// Best overlap with the sum of three four-qubit products.
    pub t444_max: f64,
}

impl FBounds {
    pub fn to_json(&self) -> Value {
        json!({
            "f_max": self.f_max,
            "f1_max": self.f1_max,
            "f2_max": self.f2_max,
            "chain": self.chain,
            "t444_max": self.t444_max,
        })
    }
}

fn top_eigenvector(m: DMatrix<C64>) -> (f64, Vec<C64>) {
    let eig = SymmetricEigen::new(m);
    let (k, &val) = eig.eigenvalues.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    (val, eig.eigenvectors.column(k).iter().copied().collect())
}

/// `max Σ_k |⟨targets[k] | x ⊗ c⟩|²` over unit `x ∈ C²` (first qubit) and
/// unit `c ∈ C⁴`, by alternating top-eigenvector steps from random starts.
pub fn biseparable_overlap_max(targets: &[Vec<C64>], restarts: usize, seed: u64) -> f64 {
    // row_k(x)[j] = Σ_i conj(t_k[2i.. ]) x_i, so the objective is c† M(x) c
    let gram_c = |x: &[C64]| {
        DMatrix::from_fn(4, 4, |r, s| {
            targets
                .iter()
                .map(|t| {
                    let a: C64 = (0..2).map(|i| t[i * 4 + r].conj() * x[i]).sum();
                    let b: C64 = (0..2).map(|i| t[i * 4 + s].conj() * x[i]).sum();
                    a.conj() * b
                })
                .sum()
        })
    };
    let gram_x = |c: &[C64]| {
        DMatrix::from_fn(2, 2, |r, s| {
            targets
                .iter()
                .map(|t| {
                    let a: C64 = (0..4).map(|j| t[r * 4 + j].conj() * c[j]).sum();
                    let b: C64 = (0..4).map(|j| t[s * 4 + j].conj() * c[j]).sum();
                    a.conj() * b
                })
                .sum()
        })
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: f64 = 0.0;
    for _ in 0..restarts.max(1) {
        let mut x: Vec<C64> = (0..2).map(|_| complex_gaussian(&mut rng)).collect();
        let n = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        x.iter_mut().for_each(|z| *z /= n);
        let mut val = 0.0;
        for _ in 0..500 {
            let (_, c) = top_eigenvector(gram_c(&x));
            let (v, nx) = top_eigenvector(gram_x(&c));
            x = nx;
            if (v - val).abs() < 1e-15 {
                val = v;
                break;
            }
            val = v;
        }
        best = best.max(val);
    }
    best
}

/// Normalized halves of a four-qubit state split at qubit 1.
fn halves(state: &PureState) -> Result<Vec<Vec<C64>>> {
    let (h0, h1) = split_raw(state.amps(), 4, 1)?;
    Ok(vec![state::normalize(h0)?.into_amps(), state::normalize(h1)?.into_amps()])
}

pub fn f_bounds(seed: u64) -> Result<FBounds> {
    let psi = named::psi4();
    let f_max = biseparable_overlap_max(&halves(&psi)?, 32, seed);
    let f1_max = biseparable_overlap_max(&halves(&state::permute_qubits(&psi, &[1, 3, 2, 4])?)?, 32, seed);
    let f2_max = biseparable_overlap_max(&halves(&state::permute_qubits(&psi, &[1, 4, 3, 2])?)?, 32, seed);
    let shape = catalog_family(4, "T4+T4+T4")?.remove(0);
    let t444_max = max_overlap_with(&psi, &shape, &OptConfig::default(), seed)?.best_overlap;
    let worst = f_max.max(f1_max).max(f2_max);
    Ok(FBounds { f_max, f1_max, f2_max, chain: (1.0 + worst) / 2.0, t444_max })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_target_is_its_biseparable_overlap() {
        // |0⟩(|01⟩+|10⟩)/√2 is itself biseparable
        let t = named::biseparable3().into_amps();
        assert!((biseparable_overlap_max(&[t], 4, 0) - 1.0).abs() < 1e-12);
        let w = named::w3().into_amps();
        assert!((biseparable_overlap_max(&[w], 8, 0) - 2.0 / 3.0).abs() < 1e-9);
    }
}
