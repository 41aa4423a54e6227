//! Expectation of `11/12·I − |Ψ⟩⟨Ψ|` for the maximal four-qubit state Ψ.
//! A negative value means some pure component has overlap above 11/12 with
//! Ψ, so that component needs at least 14 leaves.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::state::{named, DensityMatrix};

pub const WITNESS_SHIFT: f64 = 11.0 / 12.0;
/// Shift of the companion operator `3/4·I − |Ψ⟩⟨Ψ|`.
pub const COMPANION_SHIFT: f64 = 3.0 / 4.0;
/// Tree-size floor certified by a negative expectation.
pub const TS_FLOOR: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessReport {
    pub expectation: f64,
    /// `expectation` at the two-decimal precision of a measured value.
    pub expectation_rounded: f64,
    pub certified_ts_floor: Option<usize>,
    /// `|expectation − (1/6 + ⟨companion⟩)|`.
    pub relation_check: f64,
}

impl WitnessReport {
    fn from_parts(expectation: f64, companion: f64) -> Self {
        WitnessReport {
            expectation,
            expectation_rounded: (expectation * 100.0).round() / 100.0,
            certified_ts_floor: (expectation < 0.0).then_some(TS_FLOOR),
            relation_check: (expectation - (WITNESS_SHIFT - COMPANION_SHIFT + companion)).abs(),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "expectation": self.expectation_rounded,
            "expectation_exact": self.expectation,
            "certified_ts_floor": self.certified_ts_floor,
            "relation_check": self.relation_check,
        })
    }
}

pub fn witness_eval(rho: &DensityMatrix) -> Result<WitnessReport> {
    if rho.n_qubits() != 4 {
        return Err(Error::InvalidDensity(format!("witness needs a 4-qubit density matrix, got {}", rho.n_qubits())));
    }
    let fidelity = rho.expectation_pure(&named::psi4())?;
    Ok(WitnessReport::from_parts(WITNESS_SHIFT - fidelity, COMPANION_SHIFT - fidelity))
}

/// The witness value implied by a measured companion expectation.
pub fn witness_from_wprime(companion: f64) -> WitnessReport {
    let expectation = WITNESS_SHIFT - COMPANION_SHIFT + companion;
    WitnessReport::from_parts(expectation, companion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};

    #[test]
    fn pure_maximal_state() {
        let r = witness_eval(&DensityMatrix::from_pure(&named::psi4())).unwrap();
        assert!((r.expectation + 1.0 / 12.0).abs() < 1e-12);
        assert_eq!(r.certified_ts_floor, Some(14));
        assert!(r.relation_check < 1e-12);
    }

    #[test]
    fn maximally_mixed() {
        let mat = (0..16).map(|i| (0..16).map(|j| if i == j { ONE / 16.0 } else { ZERO }).collect()).collect();
        let r = witness_eval(&DensityMatrix::new(mat).unwrap()).unwrap();
        assert!((r.expectation - (11.0 / 12.0 - 1.0 / 16.0)).abs() < 1e-12);
        assert_eq!(r.certified_ts_floor, None);
    }

    #[test]
    fn measured_companion() {
        let r = witness_from_wprime(-0.151);
        assert!((r.expectation - (1.0 / 6.0 - 0.151)).abs() < 1e-15);
        assert_eq!(r.expectation_rounded, 0.02);
        assert_eq!(r.certified_ts_floor, None);
    }
}
