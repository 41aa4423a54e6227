//! Tree size of mixed three-qubit states: an upper bound from any explicit
//! ensemble, and the class ladder of the GHZ-noise (generalized Werner)
//! family.

use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::ZERO;
use crate::state::{named, DensityMatrix, PureState};
use crate::treesize;

/// Largest mixing weight at which the family is still in the W class;
/// literature value, not recomputed here.
pub const P_W: f64 = 0.6955427;
pub const P_SEPARABLE: f64 = 1.0 / 5.0;
pub const P_BISEPARABLE: f64 = 3.0 / 7.0;
/// Distance to a threshold under which a query is flagged as boundary.
pub const BOUNDARY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WernerClass {
    /// Fully separable.
    S,
    /// Biseparable but not fully separable.
    BNotS,
    /// W class but not biseparable.
    WNotB,
    /// GHZ class but not W class.
    GhzNotW,
}

impl WernerClass {
    pub fn label(&self) -> &'static str {
        match self {
            WernerClass::S => "S",
            WernerClass::BNotS => "B\\S",
            WernerClass::WNotB => "W\\B",
            WernerClass::GhzNotW => "GHZ\\W",
        }
    }

    pub fn tree_size(&self) -> usize {
        match self {
            WernerClass::S => 3,
            WernerClass::BNotS => 5,
            WernerClass::WNotB => 8,
            WernerClass::GhzNotW => 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WernerReport {
    pub p: f64,
    pub class: WernerClass,
    pub tree_size: usize,
    /// Within [`BOUNDARY_TOL`] of a class threshold.
    pub boundary: bool,
}

pub const NON_MONOTONE_NOTE: &str =
    "tree size is not monotone in p: it rises to 8 in the W band and drops to 6 once the state is GHZ-class";

impl WernerReport {
    pub fn to_json(&self) -> Value {
        json!({
            "p": self.p,
            "class": self.class.label(),
            "ts": self.tree_size,
            "boundary": self.boundary,
            "note": NON_MONOTONE_NOTE,
        })
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::BadParams(format!("p must lie in [0, 1], got {p}")));
    }
    Ok(())
}

/// `p|GHZ⟩⟨GHZ| + (1−p)/8·I`.
pub fn werner_state(p: f64) -> Result<DensityMatrix> {
    check_p(p)?;
    let ghz = DensityMatrix::from_pure(&named::ghz3());
    let mat = (0..8)
        .map(|i| (0..8).map(|j| ghz.mat()[i][j] * p + if i == j { (1.0 - p) / 8.0 } else { 0.0 } + ZERO).collect())
        .collect();
    DensityMatrix::new(mat)
}

pub fn werner_ts(p: f64) -> Result<WernerReport> {
    check_p(p)?;
    let class = if p <= P_SEPARABLE {
        WernerClass::S
    } else if p <= P_BISEPARABLE {
        WernerClass::BNotS
    } else if p <= P_W {
        WernerClass::WNotB
    } else {
        WernerClass::GhzNotW
    };
    let boundary = [P_SEPARABLE, P_BISEPARABLE, P_W].iter().any(|t| (p - t).abs() < BOUNDARY_TOL);
    Ok(WernerReport { p, class, tree_size: class.tree_size(), boundary })
}

/// Largest tree size among the pure components: an upper bound on the tree
/// size of the mixture they represent.
pub fn mixed_ts_from_decomposition(ensemble: &[(f64, PureState)]) -> Result<usize> {
    if ensemble.is_empty() {
        return Err(Error::BadEnsemble("empty ensemble".into()));
    }
    if let Some((w, _)) = ensemble.iter().find(|(w, _)| !(*w > 0.0)) {
        return Err(Error::BadEnsemble(format!("weight {w} is not positive")));
    }
    let total: f64 = ensemble.iter().map(|(w, _)| w).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::BadEnsemble(format!("weights sum to {total}")));
    }
    if let Some((_, s)) = ensemble.iter().find(|(_, s)| s.n_qubits() != 3) {
        return Err(Error::BadEnsemble(format!("component has {} qubits, expected 3", s.n_qubits())));
    }
    ensemble.iter().try_fold(0, |acc, (_, s)| Ok(acc.max(treesize::ts3(s)?.upper)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints() {
        let r = werner_state(0.0).unwrap();
        assert!((r.mat()[3][3].re - 0.125).abs() < 1e-15);
        let r = werner_state(1.0).unwrap();
        assert!((r.mat()[0][7].re - 0.5).abs() < 1e-15);
        let ev = werner_state(0.5).unwrap().eigenvalues();
        assert!((ev.iter().copied().fold(f64::MIN, f64::max) - 9.0 / 16.0).abs() < 1e-12);
        assert!(werner_state(1.5).is_err());
    }

    #[test]
    fn ladder() {
        assert_eq!(werner_ts(0.1).unwrap().tree_size, 3);
        assert_eq!(werner_ts(0.3).unwrap().tree_size, 5);
        assert_eq!(werner_ts(0.5).unwrap().class, WernerClass::WNotB);
        assert_eq!(werner_ts(0.9).unwrap().tree_size, 6);
        assert!(werner_ts(0.2).unwrap().boundary);
        assert_eq!(werner_ts(0.2).unwrap().class, WernerClass::S);
        assert!(!werner_ts(0.25).unwrap().boundary);
    }

    #[test]
    fn ensembles() {
        assert_eq!(mixed_ts_from_decomposition(&[(1.0, named::w3())]).unwrap(), 8);
        let zero = PureState::from_real(&[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let one = PureState::from_real(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(mixed_ts_from_decomposition(&[(0.5, zero.clone()), (0.5, one)]).unwrap(), 3);
        assert_eq!(mixed_ts_from_decomposition(&[(0.3, named::ghz3()), (0.7, named::w3())]).unwrap(), 8);
        assert!(mixed_ts_from_decomposition(&[(0.3, zero)]).is_err());
        assert!(mixed_ts_from_decomposition(&[]).is_err());
    }
}
