//! Amplitude-vector states over one to four qubits, invertible local
//! operators, coefficient matrices and density matrices.
//!
//! Basis indices are big-endian: qubit 1 is the most significant bit, so the
//! ket `|q1 q2 … qn⟩` has index `Σ q_k 2^(n-k)`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::linalg::{self, Mat2, ONE, ZERO};

pub const MAX_QUBITS: usize = 4;
const ZERO_THRESHOLD: f64 = 1e-14;

/// Normalized pure state of `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl PureState {
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    /// Builds a state from real amplitudes; convenience for tests and named
    /// states.
    pub fn from_real(amps: &[f64]) -> Result<Self> {
        normalize(amps.iter().map(|&x| C64::new(x, 0.0)).collect())
    }

    /// Amplitude of the basis ket given as a bit string such as `"0110"`.
    pub fn amp(&self, bits: &str) -> C64 {
        self.amps[usize::from_str_radix(bits, 2).expect("binary string")]
    }
}

/// Scales `amps` to unit norm.
pub fn normalize(amps: Vec<C64>) -> Result<PureState> {
    let n_qubits = qubits_for_len(amps.len())?;
    if amps.iter().any(|z| !z.is_finite()) {
        return Err(Error::DimensionMismatch("non-finite amplitude".into()));
    }
    if amps.iter().all(|z| z.norm() <= ZERO_THRESHOLD) {
        return Err(Error::ZeroVector);
    }
    let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let amps = amps.into_iter().map(|z| z / norm).collect();
    Ok(PureState { n_qubits, amps })
}

fn qubits_for_len(len: usize) -> Result<usize> {
    match len {
        2 => Ok(1),
        4 => Ok(2),
        8 => Ok(3),
        16 => Ok(4),
        _ => Err(Error::DimensionMismatch(format!("amplitude vector of length {len} is not 2^n for n in 1..=4"))),
    }
}

/// Bit mask of qubit `q` (1-based) in an `n`-qubit basis index.
#[inline]
pub fn qubit_mask(n: usize, q: usize) -> usize {
    1 << (n - q)
}

fn check_qubit(n: usize, q: usize) -> Result<()> {
    if q == 0 || q > n {
        Err(Error::BadPartition { qubit: q, n_qubits: n })
    } else {
        Ok(())
    }
}

/// Splits a raw amplitude vector at qubit `q`: returns the unnormalized
/// halves with `q = 0` and `q = 1`, remaining qubits in ascending order.
pub fn split_raw(amps: &[C64], n: usize, q: usize) -> Result<(Vec<C64>, Vec<C64>)> {
    check_qubit(n, q)?;
    let half = amps.len() / 2;
    let mut out = (Vec::with_capacity(half), Vec::with_capacity(half));
    for rest in 0..half {
        let (i0, i1) = insert_bit(rest, n, q);
        out.0.push(amps[i0]);
        out.1.push(amps[i1]);
    }
    Ok(out)
}

/// Inverse of [`split_raw`].
pub fn join_raw(half0: &[C64], half1: &[C64], n: usize, q: usize) -> Result<Vec<C64>> {
    check_qubit(n, q)?;
    if half0.len() != half1.len() || half0.len() * 2 != 1 << n {
        return Err(Error::DimensionMismatch("halves do not match qubit count".into()));
    }
    let mut amps = vec![ZERO; 1 << n];
    for rest in 0..half0.len() {
        let (i0, i1) = insert_bit(rest, n, q);
        amps[i0] = half0[rest];
        amps[i1] = half1[rest];
    }
    Ok(amps)
}

/// Index of the `(n-1)`-qubit index `rest` with qubit `q` inserted as 0 and
/// as 1.
fn insert_bit(rest: usize, n: usize, q: usize) -> (usize, usize) {
    let pos = n - q;
    let low = rest & ((1 << pos) - 1);
    let high = (rest >> pos) << (pos + 1);
    let i0 = high | low;
    (i0, i0 | (1 << pos))
}

/// The matrices `C₀`, `C₁` of a three-qubit state split at one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffMatrixPair {
    pub partition_qubit: usize,
    pub c0: Mat2,
    pub c1: Mat2,
}

impl CoeffMatrixPair {
    /// Raw amplitude vector the pair was taken from.
    pub fn reassemble(&self) -> Vec<C64> {
        let h0: Vec<C64> = self.c0.iter().flatten().copied().collect();
        let h1: Vec<C64> = self.c1.iter().flatten().copied().collect();
        join_raw(&h0, &h1, 3, self.partition_qubit).expect("three-qubit pair")
    }
}

pub fn coeff_matrices(state: &PureState, partition_qubit: usize) -> Result<CoeffMatrixPair> {
    coeff_matrices_raw(state.amps(), partition_qubit)
}

pub fn coeff_matrices_raw(amps: &[C64], partition_qubit: usize) -> Result<CoeffMatrixPair> {
    if amps.len() != 8 {
        return Err(Error::DimensionMismatch("coefficient matrices need a three-qubit state".into()));
    }
    let (h0, h1) = split_raw(amps, 3, partition_qubit)?;
    Ok(CoeffMatrixPair { partition_qubit, c0: [[h0[0], h0[1]], [h0[2], h0[3]]], c1: [[h1[0], h1[1]], [h1[2], h1[3]]] })
}

/// Invertible local operator acting on one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ilo {
    pub qubit: usize,
    pub m: Mat2,
}

impl Ilo {
    pub fn new(qubit: usize, m: Mat2) -> Result<Self> {
        if qubit == 0 {
            return Err(Error::BadPartition { qubit, n_qubits: MAX_QUBITS });
        }
        if linalg::det(&m).norm() <= 1e-12 || m.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::BadParams("local operator is not invertible".into()));
        }
        Ok(Ilo { qubit, m })
    }

    pub fn identity(qubit: usize) -> Self {
        Ilo { qubit, m: linalg::identity() }
    }

    pub fn from_real(qubit: usize, m: [[f64; 2]; 2]) -> Result<Self> {
        let c = |x: f64| C64::new(x, 0.0);
        Ilo::new(qubit, [[c(m[0][0]), c(m[0][1])], [c(m[1][0]), c(m[1][1])]])
    }

    pub fn inverse(&self) -> Ilo {
        Ilo { qubit: self.qubit, m: linalg::inverse(&self.m).expect("ILO is invertible by construction") }
    }

    /// `self` after `first`, on the same qubit.
    pub fn compose(&self, first: &Ilo) -> Ilo {
        debug_assert_eq!(self.qubit, first.qubit);
        Ilo { qubit: self.qubit, m: linalg::mul(&self.m, &first.m) }
    }

    pub fn det(&self) -> C64 {
        linalg::det(&self.m)
    }

    /// Image of the single-qubit vector `(a, b)`.
    pub fn act(&self, a: C64, b: C64) -> (C64, C64) {
        (self.m[0][0] * a + self.m[0][1] * b, self.m[1][0] * a + self.m[1][1] * b)
    }
}

/// Applies a 2×2 matrix to qubit `q` of a raw amplitude vector.
pub fn apply_matrix_raw(amps: &[C64], n: usize, q: usize, m: &Mat2) -> Result<Vec<C64>> {
    check_qubit(n, q)?;
    let mut out = amps.to_vec();
    for rest in 0..amps.len() / 2 {
        let (i0, i1) = insert_bit(rest, n, q);
        let (a0, a1) = (amps[i0], amps[i1]);
        out[i0] = m[0][0] * a0 + m[0][1] * a1;
        out[i1] = m[1][0] * a0 + m[1][1] * a1;
    }
    Ok(out)
}

pub fn apply_ilo(state: &PureState, op: &Ilo) -> Result<PureState> {
    let out = apply_matrix_raw(state.amps(), state.n_qubits(), op.qubit, &op.m)?;
    normalize(out)
}

pub fn apply_ilos(state: &PureState, ops: &[Ilo]) -> Result<PureState> {
    let mut amps = state.amps().to_vec();
    for op in ops {
        amps = apply_matrix_raw(&amps, state.n_qubits(), op.qubit, &op.m)?;
    }
    normalize(amps)
}

/// Inner product `⟨a|b⟩` of raw vectors.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn overlap2(a: &PureState, b: &PureState) -> Result<f64> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::DimensionMismatch(format!("{} vs {} qubits", a.n_qubits(), b.n_qubits())));
    }
    Ok(inner(a.amps(), b.amps()).norm_sqr().min(1.0))
}

/// `|⟨a|b⟩|² / (⟨a|a⟩⟨b|b⟩)` for raw vectors.
pub fn overlap2_raw(a: &[C64], b: &[C64]) -> f64 {
    let na: f64 = a.iter().map(|z| z.norm_sqr()).sum();
    let nb: f64 = b.iter().map(|z| z.norm_sqr()).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (inner(a, b).norm_sqr() / (na * nb)).min(1.0)
}

/// Moves qubit `k` of `state` to position `perm[k-1]` (both 1-based).
pub fn permute_qubits(state: &PureState, perm: &[usize]) -> Result<PureState> {
    let n = state.n_qubits();
    let mut seen = vec![false; n + 1];
    if perm.len() != n || perm.iter().any(|&p| p == 0 || p > n || std::mem::replace(&mut seen[p], true)) {
        return Err(Error::BadParams(format!("{perm:?} is not a permutation of 1..={n}")));
    }
    let mut out = vec![ZERO; state.dim()];
    for (idx, &a) in state.amps().iter().enumerate() {
        let mut j = 0;
        for (k, &p) in perm.iter().enumerate() {
            if idx & qubit_mask(n, k + 1) != 0 {
                j |= qubit_mask(n, p);
            }
        }
        out[j] = a;
    }
    normalize(out)
}

pub(crate) fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

pub fn random_state_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<PureState> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Unsupported(format!("{n} qubits")));
    }
    normalize((0..1 << n).map(|_| complex_gaussian(rng)).collect())
}

/// Haar-distributed state from complex-Gaussian amplitudes.
pub fn random_state(n: usize, seed: u64) -> Result<PureState> {
    random_state_with(n, &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn random_ilo_with<R: Rng + ?Sized>(qubit: usize, rng: &mut R) -> Ilo {
    loop {
        let m = [[complex_gaussian(rng), complex_gaussian(rng)], [complex_gaussian(rng), complex_gaussian(rng)]];
        if linalg::det(&m).norm() > 0.1 {
            return Ilo { qubit, m };
        }
    }
}

/// Random operator with complex-Gaussian entries and `|det| > 0.1`.
pub fn random_ilo(qubit: usize, seed: u64) -> Ilo {
    random_ilo_with(qubit, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// One random operator per qubit `1..=n`.
pub fn random_ilos_with<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<Ilo> {
    (1..=n).map(|q| random_ilo_with(q, rng)).collect()
}

/// Named states used throughout the crate and its tests.
pub mod named {
    use super::*;

    fn from_kets(n: usize, kets: &[(&str, f64)]) -> PureState {
        let mut amps = vec![ZERO; 1 << n];
        for (bits, c) in kets {
            debug_assert_eq!(bits.len(), n);
            amps[usize::from_str_radix(bits, 2).unwrap()] += C64::new(*c, 0.0);
        }
        normalize(amps).expect("named states are nonzero")
    }

    pub fn product3() -> PureState {
        from_kets(3, &[("000", 1.0)])
    }

    /// `|0⟩(|01⟩+|10⟩)/√2`
    pub fn biseparable3() -> PureState {
        from_kets(3, &[("001", 1.0), ("010", 1.0)])
    }

    pub fn ghz3() -> PureState {
        from_kets(3, &[("000", 1.0), ("111", 1.0)])
    }

    pub fn w3() -> PureState {
        from_kets(3, &[("001", 1.0), ("010", 1.0), ("100", 1.0)])
    }

    pub fn bell() -> PureState {
        from_kets(2, &[("00", 1.0), ("11", 1.0)])
    }

    pub fn ghz4() -> PureState {
        from_kets(4, &[("0000", 1.0), ("1111", 1.0)])
    }

    pub fn psi4() -> PureState {
        from_kets(4, &[("0110", 0.5), ("0101", 0.5), ("1001", 0.5), ("1010", 0.5), ("0011", -1.0), ("1100", -1.0)])
    }

    pub fn dicke2() -> PureState {
        from_kets(4, &[("0011", 1.0), ("0101", 1.0), ("0110", 1.0), ("1001", 1.0), ("1010", 1.0), ("1100", 1.0)])
    }

    /// Unnormalized `|001⟩+|010⟩+|100⟩`.
    pub fn w3_raw() -> Vec<C64> {
        let mut v = vec![ZERO; 8];
        v[1] = ONE;
        v[2] = ONE;
        v[4] = ONE;
        v
    }

    /// Unnormalized `|000⟩+|111⟩`.
    pub fn ghz3_raw() -> Vec<C64> {
        let mut v = vec![ZERO; 8];
        v[0] = ONE;
        v[7] = ONE;
        v
    }
}

/// Density matrix over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    mat: Vec<Vec<C64>>,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(mat: Vec<Vec<C64>>) -> Result<Self> {
        let n_qubits = qubits_for_len(mat.len()).map_err(|e| Error::InvalidDensity(e.to_string()))?;
        let d = mat.len();
        if mat.iter().any(|row| row.len() != d) {
            return Err(Error::InvalidDensity("matrix is not square".into()));
        }
        if mat.iter().flatten().any(|z| !z.is_finite()) {
            return Err(Error::InvalidDensity("non-finite entry".into()));
        }
        for i in 0..d {
            for j in 0..d {
                if (mat[i][j] - mat[j][i].conj()).norm() > 1e-12 {
                    return Err(Error::InvalidDensity(format!("not Hermitian at ({i},{j})")));
                }
            }
        }
        let tr: C64 = (0..d).map(|i| mat[i][i]).sum();
        if (tr - ONE).norm() > 1e-12 {
            return Err(Error::InvalidDensity(format!("trace {tr} differs from 1")));
        }
        let dm = DMatrix::from_fn(d, d, |i, j| mat[i][j]);
        let min_eig = dm.symmetric_eigenvalues().iter().copied().fold(f64::MAX, f64::min);
        if min_eig < -1e-10 {
            return Err(Error::InvalidDensity(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(DensityMatrix { n_qubits, mat })
    }

    pub fn from_pure(state: &PureState) -> Self {
        let a = state.amps();
        let mat = a.iter().map(|x| a.iter().map(|y| x * y.conj()).collect()).collect();
        DensityMatrix { n_qubits: state.n_qubits(), mat }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn mat(&self) -> &[Vec<C64>] {
        &self.mat
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn expectation_pure(&self, psi: &PureState) -> Result<f64> {
        if psi.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch("state and density sizes differ".into()));
        }
        let a = psi.amps();
        let mut acc = ZERO;
        for (i, row) in self.mat.iter().enumerate() {
            for (j, r) in row.iter().enumerate() {
                acc += a[i].conj() * r * a[j];
            }
        }
        Ok(acc.re)
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let d = self.mat.len();
        let dm = DMatrix::from_fn(d, d, |i, j| self.mat[i][j]);
        let mut ev: Vec<f64> = dm.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }
}

pub fn complex_to_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn complex_from_json(v: &Value) -> Result<C64> {
    let arr =
        v.as_array().filter(|a| a.len() == 2).ok_or_else(|| Error::Json(format!("expected [re, im], got {v}")))?;
    let re = arr[0].as_f64().ok_or_else(|| Error::Json("re is not a number".into()))?;
    let im = arr[1].as_f64().ok_or_else(|| Error::Json("im is not a number".into()))?;
    Ok(C64::new(re, im))
}

/// `{"n": int, "amps": [[re, im], ...]}`
pub fn state_to_json(state: &PureState) -> Value {
    json!({
        "n": state.n_qubits(),
        "amps": state.amps().iter().map(|z| complex_to_json(*z)).collect::<Vec<_>>(),
    })
}

/// Parses the state JSON format and normalizes the amplitudes.
pub fn state_from_json(v: &Value) -> Result<PureState> {
    let n =
        v.get("n").and_then(Value::as_u64).ok_or_else(|| Error::Json("missing integer field \"n\"".into()))? as usize;
    let amps =
        v.get("amps").and_then(Value::as_array).ok_or_else(|| Error::Json("missing array field \"amps\"".into()))?;
    if n == 0 || n > MAX_QUBITS || amps.len() != 1 << n {
        return Err(Error::DimensionMismatch(format!("n = {n} with {} amplitudes", amps.len())));
    }
    normalize(amps.iter().map(complex_from_json).collect::<Result<_>>()?)
}

/// `{"n": int, "mat": [[[re, im], ...], ...]}`
pub fn density_from_json(v: &Value) -> Result<DensityMatrix> {
    let n =
        v.get("n").and_then(Value::as_u64).ok_or_else(|| Error::Json("missing integer field \"n\"".into()))? as usize;
    let rows =
        v.get("mat").and_then(Value::as_array).ok_or_else(|| Error::Json("missing array field \"mat\"".into()))?;
    if n == 0 || n > MAX_QUBITS || rows.len() != 1 << n {
        return Err(Error::DimensionMismatch(format!("n = {n} with {} rows", rows.len())));
    }
    let mat = rows
        .iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(|| Error::Json("matrix row is not an array".into()))?
                .iter()
                .map(complex_from_json)
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    DensityMatrix::new(mat)
}

pub fn density_to_json(rho: &DensityMatrix) -> Value {
    json!({
        "n": rho.n_qubits(),
        "mat": rho.mat().iter().map(|row| row.iter().map(|z| complex_to_json(*z)).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::named::*;
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn close(a: &Mat2, b: &Mat2) -> bool {
        a.iter().flatten().zip(b.iter().flatten()).all(|(x, y)| (x - y).norm() < 1e-12)
    }

    #[test]
    fn normalize_examples() {
        let s = PureState::from_real(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.amps()[0], ONE);
        let s = PureState::from_real(&[1.0, 0.0, 0.0, 1.0]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amps()[0] - c(h)).norm() < 1e-15 && (s.amps()[3] - c(h)).norm() < 1e-15);
        let s = PureState::from_real(&[2.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(s.amps()[0], ONE);
        assert_eq!(PureState::from_real(&[0.0; 4]), Err(Error::ZeroVector));
        assert!(matches!(PureState::from_real(&[1.0; 3]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn coefficient_matrices_of_named_states() {
        let s3 = 1.0 / 3f64.sqrt();
        let p = coeff_matrices(&w3(), 1).unwrap();
        assert!(close(&p.c0, &[[c(0.0), c(s3)], [c(s3), c(0.0)]]));
        assert!(close(&p.c1, &[[c(s3), c(0.0)], [c(0.0), c(0.0)]]));

        let p = coeff_matrices(&product3(), 1).unwrap();
        assert!(close(&p.c0, &[[ONE, ZERO], [ZERO, ZERO]]));
        assert!(close(&p.c1, &[[ZERO; 2]; 2]));

        let h = std::f64::consts::FRAC_1_SQRT_2;
        let p = coeff_matrices(&ghz3(), 2).unwrap();
        assert!(close(&p.c0, &[[c(h), ZERO], [ZERO, ZERO]]));
        assert!(close(&p.c1, &[[ZERO, ZERO], [ZERO, c(h)]]));

        assert!(matches!(coeff_matrices(&w3(), 4), Err(Error::BadPartition { .. })));
        assert!(matches!(coeff_matrices(&w3(), 0), Err(Error::BadPartition { .. })));
    }

    #[test]
    fn coefficient_pair_reassembles() {
        let s = random_state(3, 11).unwrap();
        for q in 1..=3 {
            let p = coeff_matrices(&s, q).unwrap();
            assert_eq!(p.reassemble(), s.amps());
        }
    }

    #[test]
    fn bit_flip_swaps_halves() {
        let s = random_state(4, 3).unwrap();
        let x = Ilo::from_real(1, [[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let t = apply_ilo(&s, &x).unwrap();
        let (a0, a1) = split_raw(s.amps(), 4, 1).unwrap();
        let (b0, b1) = split_raw(t.amps(), 4, 1).unwrap();
        assert_eq!(a0, b1);
        assert_eq!(a1, b0);
    }

    #[test]
    fn identity_and_inverse() {
        let s = random_state(3, 5).unwrap();
        let t = apply_ilo(&s, &Ilo::identity(2)).unwrap();
        assert!(overlap2(&s, &t).unwrap() > 1.0 - 1e-14);
        let op = random_ilo(3, 9);
        let back = apply_ilo(&apply_ilo(&s, &op).unwrap(), &op.inverse()).unwrap();
        assert!(overlap2(&s, &back).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn overlap_examples() {
        let b = biseparable3();
        assert!((overlap2(&w3(), &b).unwrap() - 2.0 / 3.0).abs() < 1e-14);
        let one = PureState::from_real(&[0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        assert_eq!(overlap2(&product3(), &one).unwrap(), 0.0);
        assert!(matches!(overlap2(&w3(), &bell()), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn random_generation_is_deterministic() {
        assert_eq!(random_state(4, 42).unwrap(), random_state(4, 42).unwrap());
        assert_ne!(random_state(4, 42).unwrap(), random_state(4, 43).unwrap());
        for seed in 0..200 {
            let op = random_ilo(1, seed);
            assert!(op.det().norm() > 0.1);
            assert_eq!(op, random_ilo(1, seed));
        }
    }

    #[test]
    fn d2_after_hadamard_like_operator() {
        // A = [[1,1],[1,-1]] sends |0>φ0+|1>φ1 to |0>(φ0+φ1)+|1>(φ0-φ1)
        let a = Ilo::from_real(1, [[1.0, 1.0], [1.0, -1.0]]).unwrap();
        let s = dicke2();
        let t = apply_ilo(&s, &a).unwrap();
        let (p0, p1) = split_raw(s.amps(), 4, 1).unwrap();
        let (q0, q1) = split_raw(t.amps(), 4, 1).unwrap();
        let sum: Vec<C64> = p0.iter().zip(&p1).map(|(x, y)| x + y).collect();
        let diff: Vec<C64> = p0.iter().zip(&p1).map(|(x, y)| x - y).collect();
        assert!(overlap2_raw(&sum, &q0) > 1.0 - 1e-14);
        assert!(overlap2_raw(&diff, &q1) > 1.0 - 1e-14);
    }

    #[test]
    fn permutation_moves_qubits() {
        let s = PureState::from_real(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap(); // |001>
        let t = permute_qubits(&s, &[2, 3, 1]).unwrap(); // qubit 3 -> position 1
        assert_eq!(t.amp("100"), ONE);
        assert!(permute_qubits(&s, &[1, 1, 2]).is_err());
    }

    #[test]
    fn density_validation() {
        let rho = DensityMatrix::from_pure(&psi4());
        assert!(DensityMatrix::new(rho.mat().to_vec()).is_ok());
        assert!((rho.expectation_pure(&psi4()).unwrap() - 1.0).abs() < 1e-14);
        let mut bad = rho.mat().to_vec();
        bad[0][1] += C64::new(0.1, 0.0);
        assert!(matches!(DensityMatrix::new(bad), Err(Error::InvalidDensity(_))));
        let mut neg = vec![vec![ZERO; 4]; 4];
        neg[0][0] = c(1.5);
        neg[1][1] = c(-0.5);
        assert!(matches!(DensityMatrix::new(neg), Err(Error::InvalidDensity(_))));
    }

    #[test]
    fn json_round_trip() {
        let s = random_state(2, 1).unwrap();
        let back = state_from_json(&state_to_json(&s)).unwrap();
        assert!(overlap2(&s, &back).unwrap() > 1.0 - 1e-15);
        let v: Value = serde_json::from_str(r#"{"n":1,"amps":[[1,0],[0,1]]}"#).unwrap();
        let s = state_from_json(&v).unwrap();
        assert!((s.amps()[1] - C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2)).norm() < 1e-15);
        let bad: Value = serde_json::from_str(r#"{"n":2,"amps":[[1,0]]}"#).unwrap();
        assert!(state_from_json(&bad).is_err());
        let rho = DensityMatrix::from_pure(&s);
        assert_eq!(density_from_json(&density_to_json(&rho)).unwrap(), rho);
    }
}
