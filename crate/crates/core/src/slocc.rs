//! SLOCC classes of two- and three-qubit pure states from coefficient
//! matrices.
//!
//! Three-qubit states are first screened by the Schmidt rank of every
//! `i|jk` cut (singular values of the stacked 2×4 matrix `[C0; C1]`).
//! Genuinely entangled states are then split into GHZ and W by scanning
//! partitions 1, 2, 3 for an invertible coefficient matrix and testing
//! whether `C0⁻¹C1` (or `C1⁻¹C0`) has a single eigenvalue.

use std::fmt;

use nalgebra::SMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2};
use crate::state::{coeff_matrices, CoeffMatrixPair, PureState};

pub const TOL_DET: f64 = 1e-9;
pub const TOL_DISC: f64 = 1e-9;
pub const TOL_RANK: f64 = 1e-9;
/// A decisive quantity within this factor of its threshold is borderline.
pub const BORDERLINE_FACTOR: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Class2 {
    Product,
    Entangled,
}

impl fmt::Display for Class2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Class2::Product => "Product",
            Class2::Entangled => "Entangled",
        })
    }
}

pub fn classify2(state: &PureState) -> Result<Class2> {
    if state.n_qubits() != 2 {
        return Err(Error::DimensionMismatch(format!("classify2 needs 2 qubits, got {}", state.n_qubits())));
    }
    let a = state.amps();
    let c = [[a[0], a[1]], [a[2], a[3]]];
    Ok(if linalg::det(&c).norm() > TOL_DET { Class2::Entangled } else { Class2::Product })
}

fn discriminant_ratio(m: &Mat2) -> f64 {
    let tr = linalg::trace(m);
    let det = linalg::det(m);
    let disc = tr * tr - 4.0 * det;
    disc.norm() / 1f64.max(tr.norm_sqr()).max(det.norm())
}

/// True when `m` has a single (double) eigenvalue.
pub fn one_eigenvalue(m: &Mat2) -> bool {
    discriminant_ratio(m) <= TOL_DISC
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kind3 {
    Product,
    /// The given qubit factors out; the other two are entangled.
    Biseparable(usize),
    Ghz,
    W,
}

impl Kind3 {
    pub fn name(&self) -> &'static str {
        match self {
            Kind3::Product => "Product",
            Kind3::Biseparable(_) => "Biseparable",
            Kind3::Ghz => "GHZ",
            Kind3::W => "W",
        }
    }

    pub fn is_genuinely_entangled(&self) -> bool {
        matches!(self, Kind3::Ghz | Kind3::W)
    }
}

impl fmt::Display for Kind3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kind3::Biseparable(q) => write!(f, "Biseparable({q})"),
            k => f.write_str(k.name()),
        }
    }
}

/// Which test decided the class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// Schmidt-rank screen (product and biseparable states).
    SchmidtRank,
    /// `det C0 ≠ 0`, `C0⁻¹C1` has two eigenvalues.
    C1a,
    /// `det C1 ≠ 0`, `C1⁻¹C0` has two eigenvalues.
    C1b,
    /// Both determinants vanish at some partition.
    C1c,
    /// `det C0 ≠ 0`, `C0⁻¹C1` has one eigenvalue.
    C2a,
    /// `det C1 ≠ 0`, `C1⁻¹C0` has one eigenvalue.
    C2b,
}

impl Condition {
    pub fn label(&self) -> &'static str {
        match self {
            Condition::SchmidtRank => "schmidt-rank",
            Condition::C1a => "1a",
            Condition::C1b => "1b",
            Condition::C1c => "1c",
            Condition::C2a => "2a",
            Condition::C2b => "2b",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Evidence {
    pub condition: Condition,
    pub partition: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SloccClass3 {
    pub kind: Kind3,
    pub evidence: Evidence,
    pub borderline: bool,
}

fn near(value: f64, tol: f64) -> bool {
    value > tol / BORDERLINE_FACTOR && value <= tol * BORDERLINE_FACTOR
}

/// `σ₂/σ₁` of the stacked 2×4 matrix `[vec C0; vec C1]`.
pub fn schmidt_ratio(pair: &CoeffMatrixPair) -> f64 {
    let m = SMatrix::<C64, 2, 4>::from_fn(|r, k| {
        let c = if r == 0 { &pair.c0 } else { &pair.c1 };
        c[k / 2][k % 2]
    });
    let sv = m.singular_values();
    let (hi, lo) = if sv[0] >= sv[1] { (sv[0], sv[1]) } else { (sv[1], sv[0]) };
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}

/// `tr(adj(C0)·C1)² − 4·det C0·det C1`, the same at every partition; zero
/// exactly on W, biseparable and product states.
pub fn hyperdeterminant(c0: &Mat2, c1: &Mat2) -> C64 {
    let t = linalg::trace(&linalg::mul(&linalg::adj(c0), c1));
    t * t - 4.0 * linalg::det(c0) * linalg::det(c1)
}

/// Coefficients `(α, β, γ)` of `det(x·C0 + y·C1) = αx² + βxy + γy²`.
pub fn pencil_form(c0: &Mat2, c1: &Mat2) -> (C64, C64, C64) {
    let beta = linalg::trace(&linalg::mul(&linalg::adj(c0), c1));
    (linalg::det(c0), beta, linalg::det(c1))
}

/// Projective points `(x : y)` where `x·C0 + y·C1` is singular.
pub fn pencil_roots(c0: &Mat2, c1: &Mat2) -> Option<[(C64, C64); 2]> {
    let (a, b, c) = pencil_form(c0, c1);
    let scale = linalg::max_abs(c0).max(linalg::max_abs(c1));
    linalg::binary_quadratic_roots(a, b, c, TOL_DET * scale * scale)
}

/// The double root of the pencil of a W-class pair, taken from whichever
/// of the two equivalent linear factors is better conditioned.
pub fn pencil_double_root(c0: &Mat2, c1: &Mat2) -> (C64, C64) {
    let (a, b, c) = pencil_form(c0, c1);
    let p = (-0.5 * b, a);
    let q = (c, -0.5 * b);
    let norm = |v: (C64, C64)| v.0.norm().max(v.1.norm());
    let v = if norm(p) >= norm(q) { p } else { q };
    let n = norm(v);
    (v.0 / n, v.1 / n)
}

pub fn classify3(state: &PureState) -> Result<SloccClass3> {
    if state.n_qubits() != 3 {
        return Err(Error::DimensionMismatch(format!("classify3 needs 3 qubits, got {}", state.n_qubits())));
    }
    if state.amps().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Degenerate("non-finite amplitude".into()));
    }
    let pairs: Vec<CoeffMatrixPair> = (1..=3).map(|q| coeff_matrices(state, q)).collect::<Result<_>>()?;
    let mut borderline = false;

    let ratios: Vec<f64> = pairs.iter().map(schmidt_ratio).collect();
    borderline |= ratios.iter().any(|&r| near(r, TOL_RANK));
    let separable: Vec<usize> = (0..3).filter(|&i| ratios[i] <= TOL_RANK).map(|i| i + 1).collect();
    match separable.len() {
        3 => {
            return Ok(SloccClass3 {
                kind: Kind3::Product,
                evidence: Evidence { condition: Condition::SchmidtRank, partition: 1 },
                borderline,
            })
        }
        1 => {
            return Ok(SloccClass3 {
                kind: Kind3::Biseparable(separable[0]),
                evidence: Evidence { condition: Condition::SchmidtRank, partition: separable[0] },
                borderline,
            })
        }
        2 => {
            return Err(Error::Degenerate(format!(
                "cuts {separable:?} look separable but the third does not (Schmidt ratios {ratios:?})"
            )))
        }
        _ => {}
    }

    for (i, pair) in pairs.iter().enumerate() {
        let partition = i + 1;
        let d0 = linalg::det(&pair.c0).norm();
        let d1 = linalg::det(&pair.c1).norm();
        let candidates = [
            (d0, &pair.c0, &pair.c1, Condition::C2a, Condition::C1a),
            (d1, &pair.c1, &pair.c0, Condition::C2b, Condition::C1b),
        ];
        for (d, inv_of, times, one, two) in candidates {
            borderline |= near(d, TOL_DET);
            if d > TOL_DET {
                let m = linalg::mul(&linalg::inverse(inv_of).expect("nonzero determinant"), times);
                let r = discriminant_ratio(&m);
                borderline |= near(r, TOL_DISC);
                let (kind, condition) = if r <= TOL_DISC { (Kind3::W, one) } else { (Kind3::Ghz, two) };
                return Ok(SloccClass3 { kind, evidence: Evidence { condition, partition }, borderline });
            }
        }
    }

    // every partition has det C0 = det C1 = 0 while C0, C1 stay independent
    Ok(SloccClass3 { kind: Kind3::Ghz, evidence: Evidence { condition: Condition::C1c, partition: 1 }, borderline })
}

/// Classifies an unnormalized three-qubit amplitude vector.
pub fn classify3_raw(amps: &[C64]) -> Result<SloccClass3> {
    classify3(&crate::state::normalize(amps.to_vec())?)
}
